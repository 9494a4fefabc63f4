"""Pooling of precomputed token embeddings into per-source vectors.

Text representations arrive frozen: a token file gives, per record and
per metadata source, one embedding per token (plus, for tags, one token
list per tag). This module mean-pools them into a single fixed-width
vector per source. Missing metadata was coded upstream as the empty
string, so a record with no tokens for a source is pooled to the
encoder's empty-string embedding when one is supplied.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from wvt.corpus import METADATA_SOURCES

DEFAULT_TEXT_WIDTH = 768


def _as_token_matrix(tokens, width: int | None = None) -> np.ndarray:
    """Coerce a token list to a (n, width) float64 matrix, validating."""
    if isinstance(tokens, np.ndarray) and tokens.ndim == 2:
        matrix = tokens.astype(np.float64, copy=False)
    else:
        rows = [np.asarray(t, dtype=np.float64) for t in tokens]
        if not rows:
            if width is None:
                raise ValueError("empty token list needs an explicit width")
            return np.zeros((0, width))
        widths = {row.shape for row in rows}
        if any(row.ndim != 1 for row in rows) or len(widths) != 1:
            raise ValueError(f"token width mismatch: {sorted(widths)}")
        matrix = np.stack(rows)
    if width is not None and matrix.shape[1] != width:
        raise ValueError(
            f"token width mismatch: expected {width}, got {matrix.shape[1]}"
        )
    if not np.isfinite(matrix).all():
        raise ValueError("token embeddings must be finite")
    return matrix


def pool_tokens(tokens, width: int | None = None) -> np.ndarray:
    """Componentwise mean of token embeddings.

    An empty token list pools to the zero vector, which requires the
    width to be recoverable (an (0, D) array or an explicit ``width``).
    """
    matrix = _as_token_matrix(tokens, width)
    if matrix.shape[0] == 0:
        return np.zeros(matrix.shape[1])
    return matrix.mean(axis=0)


def pool_tags(
    tag_tokens,
    empty_embedding: np.ndarray | None = None,
    width: int | None = None,
) -> np.ndarray:
    """Mean over per-tag pooled embeddings.

    Each tag's token list is pooled first, then the per-tag vectors are
    averaged, so tags with many tokens do not dominate. A record with no
    tags pools to the empty-string embedding (zero vector if none given).
    """
    if empty_embedding is not None:
        empty_embedding = np.asarray(empty_embedding, dtype=np.float64)
        if width is not None and empty_embedding.shape != (width,):
            raise ValueError("empty embedding width mismatch")
        width = empty_embedding.shape[0]
    pooled = [pool_tokens(tokens, width) for tokens in tag_tokens]
    if not pooled:
        if empty_embedding is not None:
            return empty_embedding.copy()
        if width is None:
            raise ValueError("empty tag list needs an empty embedding or width")
        return np.zeros(width)
    widths = {vec.shape[0] for vec in pooled}
    if len(widths) != 1:
        raise ValueError(f"tag width mismatch: {sorted(widths)}")
    return np.mean(pooled, axis=0)


def _infer_width(candidates) -> int | None:
    for item in candidates:
        if isinstance(item, np.ndarray) and item.ndim == 2:
            return item.shape[1]
        if not isinstance(item, np.ndarray) and len(item):
            return len(np.asarray(item[0]))
    return None


@dataclass
class TokenEmbeddingSet:
    """Per-source token embeddings for one record.

    Single-text sources hold a (n_tokens, width) matrix; ``tag_tokens``
    holds one matrix per tag. Empty sources keep their width via
    zero-row matrices.
    """

    record_id: str
    title_tokens: np.ndarray = ()
    description_tokens: np.ndarray = ()
    tag_tokens: list[np.ndarray] = field(default_factory=list)
    channel_tokens: np.ndarray = ()

    def __post_init__(self):
        width = _infer_width(
            [
                self.title_tokens,
                self.description_tokens,
                self.channel_tokens,
                *self.tag_tokens,
            ]
        )
        if width is None:
            raise ValueError(
                "cannot infer token width; pass at least one (0, D) array"
            )
        self.title_tokens = _as_token_matrix(self.title_tokens, width)
        self.description_tokens = _as_token_matrix(self.description_tokens, width)
        self.channel_tokens = _as_token_matrix(self.channel_tokens, width)
        self.tag_tokens = [_as_token_matrix(t, width) for t in self.tag_tokens]

    @property
    def width(self) -> int:
        return self.title_tokens.shape[1]

    def tokens_for(self, source: str):
        if source == "title":
            return self.title_tokens
        if source == "description":
            return self.description_tokens
        if source == "tags":
            return self.tag_tokens
        if source == "channel":
            return self.channel_tokens
        raise ValueError(f"unknown metadata source {source!r}")


@dataclass
class MetadataEmbedding:
    """One pooled vector per metadata source for a record."""

    record_id: str
    vectors: dict[str, np.ndarray]

    @property
    def width(self) -> int:
        return next(iter(self.vectors.values())).shape[0]

    def __getitem__(self, source: str) -> np.ndarray:
        return self.vectors[source]


def embed_record(
    tokens: TokenEmbeddingSet, empty_embedding: np.ndarray | None = None
) -> MetadataEmbedding:
    """Pool a record's tokens into one vector per metadata source.

    Sources with no tokens take the encoder's empty-string embedding; if
    the caller supplies none, the zero vector stands in (the objective
    treats distance to a zero vector as maximal-neutral).
    """
    width = tokens.width
    if empty_embedding is None:
        empty = np.zeros(width)
    else:
        empty = np.asarray(empty_embedding, dtype=np.float64)
        if empty.shape != (width,):
            raise ValueError(
                f"empty embedding width {empty.shape} does not match D_t={width}"
            )
    vectors = {}
    for source in METADATA_SOURCES:
        if source == "tags":
            if tokens.tag_tokens:
                vectors[source] = pool_tags(tokens.tag_tokens, width=width)
            else:
                vectors[source] = empty.copy()
        else:
            matrix = tokens.tokens_for(source)
            if matrix.shape[0] == 0:
                vectors[source] = empty.copy()
            else:
                vectors[source] = pool_tokens(matrix)
    return MetadataEmbedding(record_id=tokens.record_id, vectors=vectors)


def stack_embeddings(
    embeddings: list[MetadataEmbedding], sources=METADATA_SOURCES
) -> dict[str, np.ndarray]:
    """Stack per-record vectors into one (N, width) matrix per source."""
    return {
        source: np.stack([e[source] for e in embeddings]) for source in sources
    }
