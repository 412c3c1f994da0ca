from __future__ import annotations

"""LSTM encoder + two-layer MLP head, forward and backward in numpy.

Shapes, with F inputs per step, hidden size h, h2 = max(1, h // 2), horizon H:

  W  (4h, F + h)   gate weights acting on [x_t, h_{t-1}]; rows are the
  b  (4h,)         input, forget, output and candidate gates in that order
  W1 (h2, h), b1   first MLP layer, tanh
  W2 (H, h2), b2   output layer, linear

Everything is float64. The loss is the mean squared error over batch and
horizon; :func:`backward` returns its exact gradient by backpropagation
through time.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Protocol

import numpy as np

from ..config import NormalizationConstants, TrainHyper
from ..errors import DimensionMismatch, InvalidParams
from ..utils.io import read_json, write_json
from .windows import WindowSample, WindowSet

log = logging.getLogger(__name__)

__all__ = [
    "MODEL_FORMAT_VERSION",
    "ModelParams",
    "ModelArtifact",
    "Predictor",
    "init_params",
    "forward",
    "forward_batch",
    "backward",
    "save_model",
    "load_model",
]

MODEL_FORMAT_VERSION = 1
_PARAM_NAMES = ("W", "b", "W1", "b1", "W2", "b2")


class Predictor(Protocol):
    def predict(self, inputs: np.ndarray) -> np.ndarray: ...


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass
class ModelParams:
    W: np.ndarray
    b: np.ndarray
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    def __post_init__(self) -> None:
        for name in _PARAM_NAMES:
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        h = self.hidden
        if self.W.ndim != 2 or self.W.shape[0] != 4 * h or self.W.shape[1] <= h:
            raise DimensionMismatch(f"gate weights have shape {self.W.shape}")
        h2 = self.W1.shape[0]
        expected = {
            "b": (4 * h,),
            "W1": (h2, h),
            "b1": (h2,),
            "W2": (self.W2.shape[0], h2),
            "b2": (self.W2.shape[0],),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                got = getattr(self, name).shape
                raise DimensionMismatch(f"{name} has shape {got}, expected {shape}")
        if not all(np.isfinite(getattr(self, n)).all() for n in _PARAM_NAMES):
            raise InvalidParams("model parameters must be finite")

    @property
    def hidden(self) -> int:
        return self.W.shape[0] // 4

    @property
    def input_dim(self) -> int:
        return self.W.shape[1] - self.hidden

    @property
    def horizon(self) -> int:
        return self.W2.shape[0]

    @property
    def dims(self) -> dict[str, int]:
        return {
            "input_dim": self.input_dim,
            "hidden": self.hidden,
            "hidden2": self.W1.shape[0],
            "horizon": self.horizon,
        }

    def arrays(self) -> list[np.ndarray]:
        return [getattr(self, n) for n in _PARAM_NAMES]

    def flatten(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays()])

    def unflatten(self, vec: np.ndarray) -> ModelParams:
        """New params with this instance's shapes, filled from ``vec``."""
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (self.size,):
            raise DimensionMismatch(f"vector of length {vec.size} for {self.size} parameters")
        out, at = [], 0
        for a in self.arrays():
            out.append(vec[at : at + a.size].reshape(a.shape).copy())
            at += a.size
        return ModelParams(*out)

    @property
    def size(self) -> int:
        return sum(a.size for a in self.arrays())

    def copy(self) -> ModelParams:
        return ModelParams(*(a.copy() for a in self.arrays()))

    def same_shape(self, other: ModelParams) -> bool:
        return all(a.shape == o.shape for a, o in zip(self.arrays(), other.arrays(), strict=True))

    def predict(self, inputs: np.ndarray) -> np.ndarray:
        return forward_batch(self, inputs)

    def to_dict(self) -> dict[str, Any]:
        return {n: getattr(self, n).tolist() for n in _PARAM_NAMES}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ModelParams:
        return cls(**{n: np.asarray(data[n], dtype=np.float64) for n in _PARAM_NAMES})


def init_params(
    input_dim: int, hidden: int, horizon: int, rng: np.random.Generator, scale: float = 0.1
) -> ModelParams:
    """Uniform(-scale, scale) weights, zero biases except forget-gate bias 1."""
    if min(input_dim, hidden, horizon) < 1:
        raise InvalidParams("model dimensions must be >= 1")
    h2 = max(1, hidden // 2)
    W = rng.uniform(-scale, scale, size=(4 * hidden, input_dim + hidden))
    b = np.zeros(4 * hidden)
    b[hidden : 2 * hidden] = 1.0
    W1 = rng.uniform(-scale, scale, size=(h2, hidden))
    W2 = rng.uniform(-scale, scale, size=(horizon, h2))
    return ModelParams(W, b, W1, np.zeros(h2), W2, np.zeros(horizon))


def _as_batch(params: ModelParams, inputs: np.ndarray) -> np.ndarray:
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim == 2:
        x = x[None]
    if x.ndim != 3 or x.shape[2] != params.input_dim:
        raise DimensionMismatch(
            f"inputs of shape {np.shape(inputs)} for a model with "
            f"{params.input_dim} features per step"
        )
    return x


def _run(params: ModelParams, x: np.ndarray, keep: bool) -> tuple[np.ndarray, dict[str, Any]]:
    n, steps, _ = x.shape
    h = params.hidden
    hs = np.zeros((n, h))
    cs = np.zeros((n, h))
    trace: list[tuple[np.ndarray, ...]] = []
    for t in range(steps):
        xh = np.concatenate([x[:, t, :], hs], axis=1)
        z = xh @ params.W.T + params.b
        i = _sigmoid(z[:, :h])
        f = _sigmoid(z[:, h : 2 * h])
        o = _sigmoid(z[:, 2 * h : 3 * h])
        g = np.tanh(z[:, 3 * h :])
        c_prev = cs
        cs = f * c_prev + i * g
        tc = np.tanh(cs)
        hs = o * tc
        if keep:
            trace.append((xh, i, f, o, g, c_prev, tc))
    u = np.tanh(hs @ params.W1.T + params.b1)
    y = u @ params.W2.T + params.b2
    return y, {"trace": trace, "h_last": hs, "u": u}


def forward_batch(params: ModelParams, inputs: np.ndarray) -> np.ndarray:
    """Predictions for ``inputs`` of shape (n, L, F) or (L, F); returns (n, H)."""
    y, _ = _run(params, _as_batch(params, inputs), keep=False)
    return y


def forward(params: ModelParams, sample: WindowSample | np.ndarray) -> np.ndarray:
    inputs = sample.inputs if isinstance(sample, WindowSample) else sample
    return forward_batch(params, inputs)[0]


def backward(
    params: ModelParams, batch: WindowSet | tuple[np.ndarray, np.ndarray]
) -> tuple[float, ModelParams]:
    """MSE loss over the batch and its gradient with respect to every parameter."""
    if isinstance(batch, WindowSet):
        inputs, targets = batch.inputs, batch.targets
    else:
        inputs, targets = batch
    x = _as_batch(params, inputs)
    if len(x) == 0:
        raise InvalidParams("backward needs a non-empty batch")
    targets = np.asarray(targets, dtype=np.float64).reshape(len(x), -1)
    if targets.shape[1] != params.horizon:
        raise DimensionMismatch(f"targets of width {targets.shape[1]} for horizon {params.horizon}")

    y, cache = _run(params, x, keep=True)
    n = len(x)
    h = params.hidden
    resid = y - targets
    loss = float(np.mean(resid**2))

    dy = 2.0 * resid / resid.size
    u, h_last = cache["u"], cache["h_last"]
    dW2 = dy.T @ u
    db2 = dy.sum(axis=0)
    da1 = (dy @ params.W2) * (1.0 - u**2)
    dW1 = da1.T @ h_last
    db1 = da1.sum(axis=0)

    dW = np.zeros_like(params.W)
    db = np.zeros_like(params.b)
    dh = da1 @ params.W1
    dc = np.zeros((n, h))
    for xh, i, f, o, g, c_prev, tc in reversed(cache["trace"]):
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc**2)
        dz = np.concatenate(
            [
                dc * g * i * (1.0 - i),
                dc * c_prev * f * (1.0 - f),
                do * o * (1.0 - o),
                dc * i * (1.0 - g**2),
            ],
            axis=1,
        )
        dW += dz.T @ xh
        db += dz.sum(axis=0)
        dh = (dz @ params.W)[:, params.input_dim :]
        dc = dc * f
    return loss, ModelParams(dW, db, dW1, db1, dW2, db2)


@dataclass(frozen=True)
class ModelArtifact:
    params: ModelParams
    lookback: int
    normalization: NormalizationConstants
    hyper: TrainHyper
    seed: int | None
    extra: dict[str, Any]

    def predict(self, inputs: np.ndarray) -> np.ndarray:
        return self.params.predict(inputs)


def save_model(
    path: str | Path,
    params: ModelParams,
    *,
    lookback: int,
    normalization: NormalizationConstants,
    hyper: TrainHyper,
    seed: int | None,
    extra: dict[str, Any] | None = None,
) -> Path:
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "dims": params.dims,
        "lookback": lookback,
        "normalization": normalization.model_dump(mode="json"),
        "hyper": hyper.model_dump(mode="json"),
        "seed": seed,
        "params": params.to_dict(),
        "extra": extra or {},
    }
    return write_json(path, payload)


def load_model(path: str | Path) -> ModelArtifact:
    data = read_json(path)
    version = data.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise InvalidParams(f"{path}: unsupported model format_version {version!r}")
    params = ModelParams.from_dict(data["params"])
    if params.dims != data["dims"]:
        raise DimensionMismatch(
            f"{path}: stored dims {data['dims']} do not match weights {params.dims}"
        )
    log.debug("Loaded model %s (%s)", path, params.dims)
    return ModelArtifact(
        params=params,
        lookback=int(data["lookback"]),
        normalization=NormalizationConstants.model_validate(data["normalization"]),
        hyper=TrainHyper.model_validate(data["hyper"]),
        seed=data.get("seed"),
        extra=dict(data.get("extra") or {}),
    )


