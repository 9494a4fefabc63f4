"""Little-endian binary containers for features, tokens, and checkpoints.

Three magics share the same framing conventions: ``WVTE`` token-embedding
files, ``WVTV`` video-feature files, and ``WVTC`` model checkpoints
(written by the trainer). Features and tokens are stored as 32-bit
floats for size; checkpoints use 64-bit floats for exact resume.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from wvt.corpus import METADATA_SOURCES
from wvt.textpool import TokenEmbeddingSet

TOKEN_MAGIC = b"WVTE"
VIDEO_MAGIC = b"WVTV"
CHECKPOINT_MAGIC = b"WVTC"
FORMAT_VERSION = 1

_U16_MAX = 0xFFFF


class FormatError(ValueError):
    """Corrupt, truncated, or out-of-range binary content."""


class ByteReader:
    """Cursor over a byte buffer; short reads raise with exact counts."""

    def __init__(self, data: bytes, name: str = "file"):
        self.data = data
        self.name = name
        self.offset = 0

    def take(self, n: int) -> bytes:
        end = self.offset + n
        if end > len(self.data):
            raise FormatError(
                f"{self.name}: truncated at offset {self.offset}: "
                f"expected {n} bytes, got {len(self.data) - self.offset}"
            )
        chunk = self.data[self.offset : end]
        self.offset = end
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def u8(self) -> int:
        return self.unpack("<B")[0]

    def u16(self) -> int:
        return self.unpack("<H")[0]

    def u32(self) -> int:
        return self.unpack("<I")[0]

    def u64(self) -> int:
        return self.unpack("<Q")[0]

    def i64(self) -> int:
        return self.unpack("<q")[0]

    def f64(self) -> float:
        return self.unpack("<d")[0]

    def string(self) -> str:
        length = self.u16()
        return self.take(length).decode("utf-8")

    def f32_array(self, count: int) -> np.ndarray:
        raw = self.take(4 * count)
        return np.frombuffer(raw, dtype="<f4").copy()

    def f64_array(self, count: int) -> np.ndarray:
        raw = self.take(8 * count)
        return np.frombuffer(raw, dtype="<f8").copy()

    def expect_magic(self, magic: bytes) -> None:
        got = self.take(len(magic))
        if got != magic:
            raise FormatError(f"{self.name}: bad magic {got!r}, expected {magic!r}")
        version = self.u32()
        if version != FORMAT_VERSION:
            raise FormatError(
                f"{self.name}: unsupported version {version}, "
                f"expected {FORMAT_VERSION}"
            )

    def expect_end(self) -> None:
        if self.offset != len(self.data):
            raise FormatError(
                f"{self.name}: {len(self.data) - self.offset} trailing bytes "
                f"after offset {self.offset}"
            )


class ByteWriter:
    def __init__(self):
        self.buffer = bytearray()

    def pack(self, fmt: str, *values) -> None:
        self.buffer += struct.pack(fmt, *values)

    def u8(self, v: int) -> None:
        self.pack("<B", v)

    def u16(self, v: int) -> None:
        if not 0 <= v <= _U16_MAX:
            raise FormatError(f"value {v} does not fit in u16")
        self.pack("<H", v)

    def u32(self, v: int) -> None:
        self.pack("<I", v)

    def u64(self, v: int) -> None:
        self.pack("<Q", v)

    def i64(self, v: int) -> None:
        self.pack("<q", v)

    def f64(self, v: float) -> None:
        self.pack("<d", v)

    def string(self, s: str) -> None:
        raw = s.encode("utf-8")
        self.u16(len(raw))
        self.buffer += raw

    def f32_array(self, arr: np.ndarray) -> None:
        self.buffer += np.ascontiguousarray(arr, dtype="<f4").tobytes()

    def f64_array(self, arr: np.ndarray) -> None:
        self.buffer += np.ascontiguousarray(arr, dtype="<f8").tobytes()

    def getvalue(self) -> bytes:
        return bytes(self.buffer)


@dataclass
class TokenFile:
    """Contents of a token-embedding file."""

    width: int
    empty_embedding: np.ndarray | None
    records: list[TokenEmbeddingSet]


def write_token_file(
    path: str | Path,
    records: list[TokenEmbeddingSet],
    empty_embedding: np.ndarray | None = None,
    width: int | None = None,
) -> None:
    """Write token embeddings for a corpus; one width for the whole file."""
    if width is None:
        if records:
            width = records[0].width
        elif empty_embedding is not None:
            width = len(empty_embedding)
        else:
            raise FormatError("cannot infer token width for an empty file")
    writer = ByteWriter()
    writer.buffer += TOKEN_MAGIC
    writer.u32(FORMAT_VERSION)
    writer.u32(width)
    if empty_embedding is not None:
        if len(empty_embedding) != width:
            raise FormatError(
                f"empty embedding width {len(empty_embedding)} != {width}"
            )
        writer.u8(1)
        writer.f32_array(np.asarray(empty_embedding))
    else:
        writer.u8(0)
    writer.u64(len(records))
    for record in records:
        if record.width != width:
            raise FormatError(
                f"record {record.record_id!r}: width {record.width} != {width}"
            )
        writer.string(record.record_id)
        for source in METADATA_SOURCES:
            if source == "tags":
                writer.u16(len(record.tag_tokens))
                for tag in record.tag_tokens:
                    writer.u16(tag.shape[0])
                    writer.f32_array(tag)
            else:
                matrix = record.tokens_for(source)
                writer.u16(matrix.shape[0])
                writer.f32_array(matrix)
    Path(path).write_bytes(writer.getvalue())


def read_token_file(path: str | Path) -> TokenFile:
    reader = ByteReader(Path(path).read_bytes(), name=str(path))
    reader.expect_magic(TOKEN_MAGIC)
    width = reader.u32()
    empty_embedding = None
    if reader.u8():
        empty_embedding = reader.f32_array(width)
    count = reader.u64()
    records = []
    for _ in range(count):
        record_id = reader.string()
        parts = {}
        for source in METADATA_SOURCES:
            if source == "tags":
                n_tags = reader.u16()
                tags = []
                for _ in range(n_tags):
                    n_tokens = reader.u16()
                    tags.append(
                        reader.f32_array(n_tokens * width).reshape(n_tokens, width)
                    )
                parts[source] = tags
            else:
                n_tokens = reader.u16()
                parts[source] = reader.f32_array(n_tokens * width).reshape(
                    n_tokens, width
                )
        records.append(
            TokenEmbeddingSet(
                record_id=record_id,
                title_tokens=parts["title"],
                description_tokens=parts["description"],
                tag_tokens=parts["tags"],
                channel_tokens=parts["channel"],
            )
        )
    reader.expect_end()
    return TokenFile(width=width, empty_embedding=empty_embedding, records=records)


@dataclass
class VideoFeatureFile:
    """Raw per-video feature vectors, aligned with their record ids."""

    ids: list[str]
    features: np.ndarray  # (n, width) float32


def write_video_features(
    path: str | Path, ids: list[str], features: np.ndarray
) -> None:
    features = np.asarray(features)
    if features.ndim != 2 or features.shape[0] != len(ids):
        raise FormatError(
            f"features must be (n, width) with n == len(ids); "
            f"got {features.shape} for {len(ids)} ids"
        )
    writer = ByteWriter()
    writer.buffer += VIDEO_MAGIC
    writer.u32(FORMAT_VERSION)
    writer.u32(features.shape[1])
    writer.u64(len(ids))
    for video_id, row in zip(ids, features):
        writer.string(video_id)
        writer.f32_array(row)
    Path(path).write_bytes(writer.getvalue())


def read_video_features(path: str | Path) -> VideoFeatureFile:
    reader = ByteReader(Path(path).read_bytes(), name=str(path))
    reader.expect_magic(VIDEO_MAGIC)
    width = reader.u32()
    count = reader.u64()
    ids = []
    rows = np.zeros((count, width), dtype=np.float32)
    for i in range(count):
        ids.append(reader.string())
        rows[i] = reader.f32_array(width)
    reader.expect_end()
    return VideoFeatureFile(ids=ids, features=rows)


def rng_state_to_bytes(rng: np.random.Generator) -> bytes:
    """Serialize a generator's bit-generator state deterministically."""
    return json.dumps(rng.bit_generator.state, sort_keys=True).encode("utf-8")


def rng_state_from_bytes(raw: bytes) -> np.random.Generator:
    state = json.loads(raw.decode("utf-8"))
    bit_generator = getattr(np.random, state["bit_generator"])()
    bit_generator.state = state
    return np.random.Generator(bit_generator)
