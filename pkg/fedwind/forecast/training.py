from __future__ import annotations

"""Local training, FedAvg and the per-cluster federated training loop."""

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any, Literal

import numpy as np
import pandas as pd

from ..config import TrainHyper
from ..errors import DimensionMismatch, EmptyCluster, InvalidParams
from ..eval.metrics import MetricsReport, regression_metrics
from ..utils.pool import ordered_map
from ..utils.rng import derive, draw_base, resolve
from .model import ModelParams, backward, init_params
from .windows import ClientDataset, WindowSet, concat_windows

log = logging.getLogger(__name__)

Split = Literal["train", "validation", "test"]

__all__ = [
    "RoundRecord",
    "local_train",
    "fedavg",
    "client_streams",
    "train_cluster_fl",
    "train_centralized",
    "pooled_windows",
    "evaluate_pooled",
    "evaluate_clients",
    "history_frame",
]


@dataclass(frozen=True)
class RoundRecord:
    round: int
    split: str
    metrics: MetricsReport

    def to_dict(self) -> dict[str, Any]:
        m = self.metrics
        return {
            "round": self.round,
            "split": self.split,
            "mse": m.mse,
            "rmse": m.rmse,
            "mae": m.mae,
            "r2": m.r2,
        }


def local_train(
    params: ModelParams,
    client: ClientDataset | WindowSet,
    hyper: TrainHyper,
    rng: np.random.Generator,
) -> ModelParams:
    """Minibatch descent on the client's training windows, starting from ``params``.

    Each epoch draws a fresh permutation; every batch is then visited in
    ascending window order, so a batch covering all windows is exactly the
    full, unshuffled training set. Adam moments live only for this call.
    """
    data = client.train if isinstance(client, ClientDataset) else client
    n = len(data)
    if n == 0:
        log.warning("local_train: no training windows, returning the broadcast parameters")
        return params.copy()

    vec = params.flatten()
    m = np.zeros_like(vec)
    v = np.zeros_like(vec)
    step = 0
    current = params
    lr = hyper.learning_rate
    for _ in range(hyper.local_epochs):
        order = rng.permutation(n)
        for at in range(0, n, hyper.batch_size):
            idx = np.sort(order[at : at + hyper.batch_size])
            _, grads = backward(current, (data.inputs[idx], data.targets[idx]))
            g = grads.flatten()
            if hyper.optimizer == "sgd":
                vec = vec - lr * g
            else:
                step += 1
                m = hyper.beta1 * m + (1.0 - hyper.beta1) * g
                v = hyper.beta2 * v + (1.0 - hyper.beta2) * g * g
                m_hat = m / (1.0 - hyper.beta1**step)
                v_hat = v / (1.0 - hyper.beta2**step)
                vec = vec - lr * m_hat / (np.sqrt(v_hat) + hyper.adam_eps)
            current = params.unflatten(vec)
    return current


def fedavg(updates: Sequence[tuple[ModelParams, int | float]]) -> ModelParams:
    """Coordinate-wise mean weighted by sample counts, summed in list order."""
    if not updates:
        raise InvalidParams("fedavg needs at least one update")
    first = updates[0][0]
    for p, _ in updates[1:]:
        if not first.same_shape(p):
            raise DimensionMismatch(f"update with dims {p.dims} does not match {first.dims}")
    counts = [float(n) for _, n in updates]
    if any(c < 0 for c in counts):
        raise InvalidParams("sample counts must be non-negative")
    total = sum(counts)
    if total <= 0:
        raise InvalidParams("fedavg needs a positive total sample count")
    acc = np.zeros(first.size)
    for (p, _), c in zip(updates, counts, strict=True):
        acc = acc + (c / total) * p.flatten()
    return first.unflatten(acc)


def client_streams(
    rng: np.random.Generator, n_clients: int
) -> tuple[np.random.Generator, list[np.random.Generator]]:
    """Initialisation stream plus one stream per client, all from one draw of ``rng``."""
    base = draw_base(rng)
    return derive(base, 0), [derive(base, 1, j) for j in range(n_clients)]


def pooled_windows(clients: Sequence[ClientDataset], split: Split) -> WindowSet:
    return concat_windows([getattr(c, split) for c in clients])


def evaluate_pooled(
    params: ModelParams, clients: Sequence[ClientDataset], split: Split
) -> MetricsReport | None:
    """Metrics over every client's windows of ``split`` pooled together; None if there are none."""
    pool = pooled_windows(clients, split)
    if len(pool) == 0:
        return None
    return regression_metrics(pool.targets, params.predict(pool.inputs))


def evaluate_clients(
    params: ModelParams, clients: Sequence[ClientDataset], split: Split = "test"
) -> list[tuple[str, MetricsReport]]:
    out = []
    for c in clients:
        ws = getattr(c, split)
        if len(ws) == 0:
            continue
        out.append((c.turbine_id, regression_metrics(ws.targets, params.predict(ws.inputs))))
    return out


def train_cluster_fl(
    clients: Sequence[ClientDataset],
    hyper: TrainHyper,
    rng: np.random.Generator | None = None,
    *,
    max_workers: int = 1,
    label: str = "cluster",
) -> tuple[ModelParams, list[RoundRecord]]:
    """FedAvg over the cluster's clients for ``hyper.rounds`` rounds.

    Each round broadcasts the global parameters, trains every client locally
    and aggregates with weights ``n_samples``. Pooled train and validation
    metrics of the aggregated model are recorded after every round.
    Without ``rng`` the stream comes from ``hyper.seed``.
    """
    if not clients:
        raise EmptyCluster(f"{label}: no clients to train")
    rng = resolve(rng, hyper.seed, label)
    sample = clients[0].train
    init_rng, streams = client_streams(rng, len(clients))
    params = init_params(
        sample.inputs.shape[2], hyper.hidden_dim, sample.horizon, init_rng, hyper.init_scale
    )
    log.info("%s: training on %d clients for %d rounds", label, len(clients), hyper.rounds)

    history: list[RoundRecord] = []
    for r in range(1, hyper.rounds + 1):
        broadcast = params

        def train_one(j: int, broadcast: ModelParams = broadcast) -> ModelParams:
            return local_train(broadcast, clients[j], hyper, streams[j])

        local = ordered_map(train_one, range(len(clients)), max_workers=max_workers)
        params = fedavg([(p, c.n_samples) for p, c in zip(local, clients, strict=True)])

        for split in ("train", "validation"):
            report = evaluate_pooled(params, clients, split)
            if report is not None:
                history.append(RoundRecord(r, split, report))
        last = {rec.split: rec.metrics for rec in history if rec.round == r}
        log.info(
            "%s round %d/%d: train mse %.5f, validation mse %s",
            label,
            r,
            hyper.rounds,
            last["train"].mse if "train" in last else float("nan"),
            f"{last['validation'].mse:.5f}" if "validation" in last else "n/a",
        )
    return params, history


def train_centralized(
    clients: Sequence[ClientDataset],
    hyper: TrainHyper,
    rng: np.random.Generator | None = None,
    *,
    label: str = "centralized",
) -> tuple[ModelParams, list[RoundRecord]]:
    """Train one model on the clients' pooled windows, no partition and no averaging.

    Runs the same number of rounds as the federated loop so histories line up;
    each round is ``local_epochs`` passes over the pool.
    """
    if not clients:
        raise EmptyCluster(f"{label}: no turbines to train on")
    rng = resolve(rng, hyper.seed, label)
    pool = pooled_windows(clients, "train")
    init_rng, (stream,) = client_streams(rng, 1)
    params = init_params(
        pool.inputs.shape[2], hyper.hidden_dim, pool.horizon, init_rng, hyper.init_scale
    )
    log.info("%s: training on %d pooled windows for %d rounds", label, len(pool), hyper.rounds)
    history: list[RoundRecord] = []
    for r in range(1, hyper.rounds + 1):
        params = local_train(params, pool, hyper, stream)
        for split in ("train", "validation"):
            report = evaluate_pooled(params, clients, split)
            if report is not None:
                history.append(RoundRecord(r, split, report))
    return params, history


def history_frame(history: Sequence[RoundRecord]) -> pd.DataFrame:
    return pd.DataFrame(
        [rec.to_dict() for rec in history], columns=["round", "split", "mse", "rmse", "mae", "r2"]
    )
