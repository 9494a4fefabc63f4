"""Corpus scaling indicators: word lengths, missingness, uniqueness.

All indicators are computed from a single mergeable accumulator so that
disjoint shards of a corpus can be aggregated in parallel and combined:
count and mean fields merge exactly, and quartiles / top-k are finalized
on the merged multisets.
"""

from __future__ import annotations

import json
import math
import warnings
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

from wvt.corpus import (
    METADATA_SOURCES,
    MetadataRecord,
    canonical_tag_string,
    subset_size_to_rank,
    take_top_per_query,
)

TOP_K = 10

# Sources whose metadata can be omitted by the uploader; the others are
# always present (possibly as empty strings) but are not reported as a
# missingness rate.
MISSING_RATE_SOURCES = ("description", "tags")


def word_count(text: str) -> int:
    """Number of maximal runs of non-whitespace characters."""
    return len(text.split())


def source_text(record: MetadataRecord, source: str) -> str:
    """The raw text of one metadata source; tags are space-joined."""
    if source == "tags":
        return " ".join(record.tags)
    return getattr(record, source)


def source_words(record: MetadataRecord, source: str) -> int:
    if source == "tags":
        return sum(word_count(tag) for tag in record.tags)
    return word_count(getattr(record, source))


def identity_value(record: MetadataRecord, source: str) -> str:
    """The string used for uniqueness counting (tag sets for tags)."""
    if source == "tags":
        return canonical_tag_string(record.tags)
    return getattr(record, source)


@dataclass(frozen=True)
class CorpusStats:
    """Indicators for one corpus slice, keyed per metadata source."""

    record_count: int
    mean_words: dict[str, float]
    missing_rate: dict[str, float]
    mean_tag_count: float
    unique_count: dict[str, int]
    unique_pct: dict[str, float]
    length_quartiles: dict[str, tuple[int, int, int, int, int]]
    top_repeated: dict[str, list[tuple[str, int]]]
    videos_per_channel: float


class StatsAccumulator:
    """Partial aggregate over a shard of records; merge is associative."""

    def __init__(self):
        self.count = 0
        self.word_sums = {s: 0 for s in METADATA_SOURCES}
        self.nonmissing = {s: 0 for s in METADATA_SOURCES}
        self.tag_count_sum = 0
        self.values = {s: Counter() for s in METADATA_SOURCES}
        self.tag_instances = Counter()
        self.lengths = {s: Counter() for s in METADATA_SOURCES}

    def add(self, record: MetadataRecord) -> None:
        self.count += 1
        self.tag_count_sum += len(record.tags)
        for tag in record.tags:
            self.tag_instances[tag] += 1
        for source in METADATA_SOURCES:
            words = source_words(record, source)
            self.word_sums[source] += words
            self.lengths[source][words] += 1
            self.values[source][identity_value(record, source)] += 1
            if source == "tags":
                if record.tags:
                    self.nonmissing[source] += 1
            elif getattr(record, source) != "":
                self.nonmissing[source] += 1

    def merge(self, other: "StatsAccumulator") -> "StatsAccumulator":
        self.count += other.count
        self.tag_count_sum += other.tag_count_sum
        self.tag_instances.update(other.tag_instances)
        for source in METADATA_SOURCES:
            self.word_sums[source] += other.word_sums[source]
            self.nonmissing[source] += other.nonmissing[source]
            self.values[source].update(other.values[source])
            self.lengths[source].update(other.lengths[source])
        return self

    def finalize(self, nonmissing_only: bool = False) -> CorpusStats:
        """Reduce the aggregate to a CorpusStats report.

        With ``nonmissing_only``, per-source mean word lengths condition on
        entries that are present (nonempty text / at least one tag);
        otherwise empty entries count as zero words.
        """
        if self.count == 0:
            raise ValueError("cannot compute stats over an empty corpus")
        mean_words = {}
        for source in METADATA_SOURCES:
            denom = self.nonmissing[source] if nonmissing_only else self.count
            mean_words[source] = self.word_sums[source] / denom if denom else 0.0
        missing_rate = {
            source: (self.count - self.nonmissing[source]) / self.count
            for source in MISSING_RATE_SOURCES
        }
        unique_count = {s: len(self.values[s]) for s in METADATA_SOURCES}
        unique_pct = {s: unique_count[s] / self.count for s in METADATA_SOURCES}
        quartiles = {
            s: length_quartiles(self.lengths[s]) for s in METADATA_SOURCES
        }
        top = {}
        for source in METADATA_SOURCES:
            counter = self.tag_instances if source == "tags" else self.values[source]
            top[source] = top_repeated(counter, TOP_K)
        return CorpusStats(
            record_count=self.count,
            mean_words=mean_words,
            missing_rate=missing_rate,
            mean_tag_count=self.tag_count_sum / self.count,
            unique_count=unique_count,
            unique_pct=unique_pct,
            length_quartiles=quartiles,
            top_repeated=top,
            videos_per_channel=self.count / unique_count["channel"],
        )


def nearest_rank(length_counts: Counter, p: float) -> int:
    """Nearest-rank order statistic: the ceil(p*n)-th smallest value."""
    n = sum(length_counts.values())
    target = max(1, math.ceil(p * n))
    seen = 0
    for value in sorted(length_counts):
        seen += length_counts[value]
        if seen >= target:
            return value
    raise AssertionError("target rank beyond multiset size")


def length_quartiles(length_counts: Counter) -> tuple[int, int, int, int, int]:
    if not length_counts:
        raise ValueError("no lengths recorded")
    return (
        min(length_counts),
        nearest_rank(length_counts, 0.25),
        nearest_rank(length_counts, 0.50),
        nearest_rank(length_counts, 0.75),
        max(length_counts),
    )


def top_repeated(counter: Counter, k: int = TOP_K) -> list[tuple[str, int]]:
    """The k most frequent values; ties broken lexicographically."""
    ranked = sorted(counter.items(), key=lambda item: (-item[1], item[0]))
    return ranked[:k]


def compute_stats(
    records: Iterable[MetadataRecord],
    nonmissing_only: bool = False,
    threads: int = 1,
) -> CorpusStats:
    """Compute all indicators over a corpus slice.

    ``threads`` > 1 shards the records and merges per-shard aggregates in
    shard order; the result is identical to the single-threaded pass.
    """
    if threads > 1:
        records = list(records)
        shard_size = math.ceil(len(records) / threads) if records else 1
        shards = [
            records[i : i + shard_size] for i in range(0, len(records), shard_size)
        ]

        def run(shard):
            acc = StatsAccumulator()
            for record in shard:
                acc.add(record)
            return acc

        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, shards))
        total = StatsAccumulator()
        for part in parts:
            total.merge(part)
        return total.finalize(nonmissing_only)
    acc = StatsAccumulator()
    for record in records:
        acc.add(record)
    return acc.finalize(nonmissing_only)


def stats_by_subset(
    records: Iterable[MetadataRecord],
    sizes: Sequence[int],
    nonmissing_only: bool = False,
    threads: int = 1,
) -> list[tuple[int, CorpusStats]]:
    """Indicators over nested top-of-ranking subsets of growing size.

    For each target size the subset keeps the top ceil(size / #queries)
    results per query, mirroring how a corpus grows in practice: by taking
    more of the top search results rather than a random sample. Sizes must
    be ascending; a size exceeding the corpus falls back to the full
    corpus with a warning.
    """
    records = list(records)
    if any(b < a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("subset sizes must be sorted ascending")
    query_count = len({record.query for record in records})
    results = []
    for size in sizes:
        if size > len(records):
            warnings.warn(
                f"subset size {size} exceeds corpus size {len(records)}; "
                "using the full corpus",
                stacklevel=2,
            )
            subset = records
        else:
            depth = subset_size_to_rank(size, query_count)
            subset = take_top_per_query(records, depth)
        results.append((size, compute_stats(subset, nonmissing_only, threads)))
    return results


def stats_to_lines(stats: CorpusStats) -> list[str]:
    """Flatten a report to ``key = <json>`` lines, deterministically."""
    lines = [f"record_count = {stats.record_count}"]
    for source in METADATA_SOURCES:
        lines.append(f"mean_words.{source} = {json.dumps(stats.mean_words[source])}")
    for source in MISSING_RATE_SOURCES:
        lines.append(
            f"missing_rate.{source} = {json.dumps(stats.missing_rate[source])}"
        )
    lines.append(f"mean_tag_count = {json.dumps(stats.mean_tag_count)}")
    for source in METADATA_SOURCES:
        lines.append(f"unique_count.{source} = {stats.unique_count[source]}")
        lines.append(f"unique_pct.{source} = {json.dumps(stats.unique_pct[source])}")
    for source in METADATA_SOURCES:
        quartiles = list(stats.length_quartiles[source])
        lines.append(f"length_quartiles.{source} = {json.dumps(quartiles)}")
    for source in METADATA_SOURCES:
        pairs = [[value, count] for value, count in stats.top_repeated[source]]
        lines.append(
            f"top_repeated.{source} = "
            f"{json.dumps(pairs, ensure_ascii=False)}"
        )
    lines.append(f"videos_per_channel = {json.dumps(stats.videos_per_channel)}")
    return lines


_PLOT_INDICATORS = (
    ("mean_words", METADATA_SOURCES),
    ("missing_rate", MISSING_RATE_SOURCES),
    ("unique_pct", METADATA_SOURCES),
)


def format_report(results: list[tuple[int, CorpusStats]]) -> str:
    """Render subset reports as key-value blocks plus a plot-data table."""
    blocks = []
    for size, stats in results:
        lines = [f"subset_size = {size}"]
        lines.extend(stats_to_lines(stats))
        blocks.append("\n".join(lines))
    text = "\n\n".join(blocks)
    if len(results) > 1:
        rows = ["", "", "# plot data: size\tindicator\tvalue"]
        for size, stats in results:
            for name, sources in _PLOT_INDICATORS:
                values = getattr(stats, name)
                for source in sources:
                    rows.append(f"{size}\t{name}.{source}\t{values[source]!r}")
            rows.append(f"{size}\tmean_tag_count\t{stats.mean_tag_count!r}")
            rows.append(f"{size}\tvideos_per_channel\t{stats.videos_per_channel!r}")
        text += "\n".join(rows)
    return text + "\n"
