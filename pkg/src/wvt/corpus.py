"""Web-video metadata records: on-disk format, filtering, and subsetting.

A corpus is a UTF-8 file with one JSON object per line, carrying exactly
the keys ``id, query, rank, title, description, tags, channel,
duration_s, age_days, label``. Missing description/tags are represented
as an empty string / empty list, never as absent keys.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

# The four textual metadata sources attached to every record, in the
# canonical order used by file formats, models, and reports.
METADATA_SOURCES = ("title", "description", "tags", "channel")

# Joins tag lists into a single identity string. U+001F (unit separator)
# cannot appear in reasonable tag text, so the join is collision-free.
TAG_SEPARATOR = "\x1f"

# Collection filter defaults: clips shorter than the training clip length
# are useless, and very recent uploads are likely to disappear.
MIN_DURATION_S = 10.0
MIN_AGE_DAYS = 90

_RECORD_KEYS = (
    "id",
    "query",
    "rank",
    "title",
    "description",
    "tags",
    "channel",
    "duration_s",
    "age_days",
    "label",
)


class CorpusError(ValueError):
    """Malformed corpus or denylist content."""


@dataclass(frozen=True)
class MetadataRecord:
    """One web video's textual metadata plus collection attributes.

    ``query`` is the search term that retrieved the video and ``rank`` its
    1-based position in that query's result list. ``label`` is an optional
    class id used only by probe evaluation.
    """

    id: str
    query: str
    rank: int
    title: str = ""
    description: str = ""
    tags: tuple[str, ...] = ()
    channel: str = ""
    duration_s: float = 0.0
    age_days: int = 0
    label: int | None = None

    def __post_init__(self):
        if not self.id:
            raise CorpusError("record id must be nonempty")
        if self.rank < 1:
            raise CorpusError(f"rank must be >= 1, got {self.rank}")
        if self.duration_s < 0:
            raise CorpusError(f"duration_s must be >= 0, got {self.duration_s}")
        if self.age_days < 0:
            raise CorpusError(f"age_days must be >= 0, got {self.age_days}")
        object.__setattr__(self, "tags", tuple(self.tags))


@dataclass(frozen=True)
class Denylist:
    """Video ids excluded from a corpus (e.g. evaluation-set videos)."""

    ids: frozenset[str] = field(default_factory=frozenset)

    def __contains__(self, video_id: str) -> bool:
        return video_id in self.ids

    def __len__(self) -> int:
        return len(self.ids)


def record_from_json(obj: dict, where: str = "record") -> MetadataRecord:
    """Build a record from a parsed JSON object, validating the schema."""
    if not isinstance(obj, dict):
        raise CorpusError(f"{where}: expected an object, got {type(obj).__name__}")
    for key in ("id", "query", "rank"):
        if key not in obj:
            raise CorpusError(f"{where}: missing required key {key!r}")
    extra = set(obj) - set(_RECORD_KEYS)
    if extra:
        raise CorpusError(f"{where}: unknown keys {sorted(extra)}")
    missing = set(_RECORD_KEYS) - set(obj)
    if missing:
        raise CorpusError(f"{where}: missing keys {sorted(missing)}")
    if not isinstance(obj["id"], str):
        raise CorpusError(f"{where}: id must be a string")
    if not isinstance(obj["rank"], int) or isinstance(obj["rank"], bool):
        raise CorpusError(f"{where}: rank must be an integer")
    if not isinstance(obj["tags"], list) or not all(
        isinstance(t, str) for t in obj["tags"]
    ):
        raise CorpusError(f"{where}: tags must be an array of strings")
    for key in ("query", "title", "description", "channel"):
        if not isinstance(obj[key], str):
            raise CorpusError(f"{where}: {key} must be a string")
    if not isinstance(obj["duration_s"], (int, float)) or isinstance(
        obj["duration_s"], bool
    ):
        raise CorpusError(f"{where}: duration_s must be a number")
    if not isinstance(obj["age_days"], int) or isinstance(obj["age_days"], bool):
        raise CorpusError(f"{where}: age_days must be an integer")
    label = obj["label"]
    if label is not None and (not isinstance(label, int) or isinstance(label, bool)):
        raise CorpusError(f"{where}: label must be an integer or null")
    try:
        return MetadataRecord(
            id=obj["id"],
            query=obj["query"],
            rank=obj["rank"],
            title=obj["title"],
            description=obj["description"],
            tags=tuple(obj["tags"]),
            channel=obj["channel"],
            duration_s=float(obj["duration_s"]),
            age_days=obj["age_days"],
            label=label,
        )
    except CorpusError as exc:
        raise CorpusError(f"{where}: {exc}") from None


def record_to_json(record: MetadataRecord) -> str:
    """Serialize one record as a single JSON line (no trailing newline)."""
    obj = {key: getattr(record, key) for key in _RECORD_KEYS}
    obj["tags"] = list(record.tags)
    return json.dumps(obj, ensure_ascii=False)


def read_corpus(path: str | Path) -> Iterator[MetadataRecord]:
    """Yield records from a corpus file in file order.

    Raises CorpusError naming the offending line for malformed JSON,
    schema violations, duplicate ids, or duplicate (query, rank) pairs.
    """
    seen_ids: set[str] = set()
    seen_positions: set[tuple[str, int]] = set()
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {lineno}: invalid JSON ({exc.msg})") from None
            record = record_from_json(obj, where=f"line {lineno}")
            if record.id in seen_ids:
                raise CorpusError(f"line {lineno}: duplicate id {record.id!r}")
            position = (record.query, record.rank)
            if position in seen_positions:
                raise CorpusError(
                    f"line {lineno}: duplicate (query, rank) {position!r}"
                )
            seen_ids.add(record.id)
            seen_positions.add(position)
            yield record


def write_corpus(path: str | Path, records: Iterable[MetadataRecord]) -> int:
    """Write records as JSON lines; returns the number written."""
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(record_to_json(record))
            handle.write("\n")
            count += 1
    return count


def read_denylist(path: str | Path) -> Denylist:
    """Read a denylist file: UTF-8, one video id per line."""
    ids = set()
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            video_id = line.strip()
            if video_id:
                ids.add(video_id)
    return Denylist(frozenset(ids))


def filter_record(
    record: MetadataRecord,
    min_age_days: int = MIN_AGE_DAYS,
    denylist: Denylist | None = None,
    min_duration_s: float = MIN_DURATION_S,
) -> bool:
    """Collection filter: True to keep, False to discard.

    Keeps a record iff its clip is long enough (duration_s >= 10 by
    default, the training clip length), it is old enough to be stable
    (age_days strictly greater than 90 by default), and it is not on the
    denylist of evaluation-set videos.
    """
    if record.duration_s < min_duration_s:
        return False
    if record.age_days <= min_age_days:
        return False
    if denylist is not None and record.id in denylist:
        return False
    return True


def take_top_per_query(
    records: Iterable[MetadataRecord], n_per_query: int
) -> Iterator[MetadataRecord]:
    """Keep only each query's top-``n_per_query`` results by rank.

    A pure streaming filter on the explicit ``rank`` field: input order is
    preserved, so a rank-ordered corpus stays rank-ordered within each
    query, and the selected set is stable under shuffling.
    """
    if n_per_query < 1:
        raise ValueError(f"n_per_query must be >= 1, got {n_per_query}")
    for record in records:
        if record.rank <= n_per_query:
            yield record


def canonical_tag_string(tags: Iterable[str]) -> str:
    """Join trimmed tags with the unit separator; the tag-set identity."""
    return TAG_SEPARATOR.join(tag.strip() for tag in tags)


def subset_size_to_rank(size: int, query_count: int) -> int:
    """Per-query result depth needed for a target subset size."""
    if query_count < 1:
        raise ValueError("query_count must be >= 1")
    return max(1, math.ceil(size / query_count))
