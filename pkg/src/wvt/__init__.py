"""Webly-supervised video/text embedding toolkit.

Trains a small video embedding head against frozen, precomputed text
embeddings of web-video metadata (titles, descriptions, tags, channel
names) with a cosine margin ranking loss, and provides the surrounding
corpus machinery: record filtering, top-N-per-query subsetting, corpus
scaling statistics, binary feature/token file formats, deterministic
SGD training with Nesterov momentum, and retrieval / linear-probe
evaluation.
"""

from wvt.corpus import METADATA_SOURCES, Denylist, MetadataRecord
from wvt.embedder import EmbeddingModel, ModelConfig, init_model
from wvt.objective import LossConfig, batch_loss, cosine_distance, ranking_loss
from wvt.textpool import MetadataEmbedding, TokenEmbeddingSet
from wvt.trainer import TrainConfig, learning_rate, train

__all__ = [
    "METADATA_SOURCES",
    "Denylist",
    "EmbeddingModel",
    "LossConfig",
    "MetadataEmbedding",
    "MetadataRecord",
    "ModelConfig",
    "TokenEmbeddingSet",
    "TrainConfig",
    "batch_loss",
    "cosine_distance",
    "init_model",
    "learning_rate",
    "ranking_loss",
    "train",
]

__version__ = "0.1.0"
