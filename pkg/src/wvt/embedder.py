"""Trainable video embedding head and per-source projection heads.

The video representation is produced by a small affine stack with ReLU
between layers (a stand-in for a full video backbone operating on
precomputed feature vectors). Each metadata source gets its own affine
projection ``W f_v + b`` predicting that source's text embedding from
the video representation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from wvt.corpus import METADATA_SOURCES


@dataclass(frozen=True)
class ModelConfig:
    """Widths, sources, and the seed all initialization flows from."""

    input_width: int
    output_width: int = 32
    hidden_widths: tuple[int, ...] = (64,)
    text_width: int = 768
    sources: tuple[str, ...] = METADATA_SOURCES
    dropout_rate: float = 0.5
    seed: int = 0

    def __post_init__(self):
        widths = (self.input_width, self.output_width, self.text_width)
        if any(w < 1 for w in widths + tuple(self.hidden_widths)):
            raise ValueError(f"all widths must be >= 1, got {widths}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if not self.sources:
            raise ValueError("at least one metadata source required")
        unknown = set(self.sources) - set(METADATA_SOURCES)
        if unknown:
            raise ValueError(f"unknown sources {sorted(unknown)}")
        if len(set(self.sources)) != len(self.sources):
            raise ValueError("duplicate sources")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        object.__setattr__(self, "hidden_widths", tuple(self.hidden_widths))
        object.__setattr__(self, "sources", tuple(self.sources))

    @property
    def layer_widths(self) -> tuple[int, ...]:
        return (self.input_width, *self.hidden_widths, self.output_width)


class EmbeddingModel:
    """Video head parameters plus one (W, b) projection per source."""

    def __init__(self, config, head_weights, head_biases, proj_weights, proj_biases,
                 rng=None):
        self.config = config
        self.head_weights = head_weights
        self.head_biases = head_biases
        self.proj_weights = proj_weights
        self.proj_biases = proj_biases
        self.rng = rng if rng is not None else np.random.default_rng(config.seed)

    def parameters(self) -> list[tuple[str, np.ndarray]]:
        """(name, array) pairs in the declared checkpoint order."""
        named = []
        for i, (w, b) in enumerate(zip(self.head_weights, self.head_biases)):
            named.append((f"head.{i}.W", w))
            named.append((f"head.{i}.b", b))
        for source in self.config.sources:
            named.append((f"proj.{source}.W", self.proj_weights[source]))
            named.append((f"proj.{source}.b", self.proj_biases[source]))
        return named

    def param_dict(self) -> dict[str, np.ndarray]:
        return dict(self.parameters())

    def zero_grads(self) -> dict[str, np.ndarray]:
        return {name: np.zeros_like(arr) for name, arr in self.parameters()}


def _fan_uniform(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_out, fan_in))


def init_model(config: ModelConfig) -> EmbeddingModel:
    """Fan-scaled uniform weights, zero biases; deterministic per seed.

    Draw order is fixed (head layers in order, then projections in source
    order), so the same seed always yields bit-identical parameters.
    """
    rng = np.random.default_rng(config.seed)
    widths = config.layer_widths
    head_weights, head_biases = [], []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        head_weights.append(_fan_uniform(rng, fan_out, fan_in))
        head_biases.append(np.zeros(fan_out))
    proj_weights, proj_biases = {}, {}
    for source in config.sources:
        proj_weights[source] = _fan_uniform(rng, config.text_width, config.output_width)
        proj_biases[source] = np.zeros(config.text_width)
    return EmbeddingModel(
        config, head_weights, head_biases, proj_weights, proj_biases, rng
    )


def _check_features(model: EmbeddingModel, features) -> tuple[np.ndarray, bool]:
    x = np.asarray(features, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != model.config.input_width:
        raise ValueError(
            f"expected features of width {model.config.input_width}, "
            f"got shape {np.asarray(features).shape}"
        )
    if not np.isfinite(x).all():
        raise ValueError("features must be finite")
    return x, single


def forward_cached(model: EmbeddingModel, features: np.ndarray, mode: str = "eval",
                   rng: np.random.Generator | None = None):
    """Batch forward pass keeping activations for backprop.

    Returns (f_v, cache); in train mode the inverted-dropout mask (already
    scaled by 1/keep) is drawn from ``rng`` or the model's own generator
    and applied to the final representation.
    """
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    x, _ = _check_features(model, features)
    inputs = []
    gates = []
    h = x
    last = len(model.head_weights) - 1
    for i, (w, b) in enumerate(zip(model.head_weights, model.head_biases)):
        inputs.append(h)
        h = h @ w.T + b
        if i != last:
            h = np.maximum(h, 0.0)
            gates.append(h > 0.0)
    dropout_scale = None
    p = model.config.dropout_rate
    if mode == "train" and p > 0.0:
        draw = (rng if rng is not None else model.rng).random(h.shape)
        dropout_scale = (draw >= p) / (1.0 - p)
        h = h * dropout_scale
    cache = {"inputs": inputs, "gates": gates, "dropout_scale": dropout_scale}
    return h, cache


def head_backward(model: EmbeddingModel, cache: dict, grad_out: np.ndarray):
    """Backprop a gradient at f_v through dropout and the head layers."""
    grads = {}
    g = grad_out
    if cache["dropout_scale"] is not None:
        g = g * cache["dropout_scale"]
    last = len(model.head_weights) - 1
    for i in range(last, -1, -1):
        x = cache["inputs"][i]
        if i != last:
            g = g * cache["gates"][i]
        grads[f"head.{i}.W"] = g.T @ x
        grads[f"head.{i}.b"] = g.sum(axis=0)
        g = g @ model.head_weights[i]
    return grads


def forward_video(model: EmbeddingModel, features, mode: str = "eval",
                  rng: np.random.Generator | None = None) -> np.ndarray:
    """The video representation f_v for one vector or a (B, D_in) batch."""
    x, single = _check_features(model, features)
    f_v, _ = forward_cached(model, x, mode=mode, rng=rng)
    return f_v[0] if single else f_v


def predict_metadata(model: EmbeddingModel, f_v, source: str) -> np.ndarray:
    """The predicted text embedding W(s) f_v + b(s) for one source."""
    if source not in model.proj_weights:
        raise ValueError(
            f"unknown source {source!r}; model has {list(model.proj_weights)}"
        )
    v = np.asarray(f_v, dtype=np.float64)
    single = v.ndim == 1
    if single:
        v = v[None, :]
    if v.shape[1] != model.config.output_width:
        raise ValueError(
            f"expected f_v of width {model.config.output_width}, got {v.shape}"
        )
    out = v @ model.proj_weights[source].T + model.proj_biases[source]
    return out[0] if single else out
