from __future__ import annotations

from .filtering import filter_uninformative_clients
from .model import (
    ModelArtifact,
    ModelParams,
    backward,
    forward,
    forward_batch,
    init_params,
    load_model,
    save_model,
)
from .rolling import ForecastTrajectory, rolling_forecast, trajectories_frame
from .training import (
    RoundRecord,
    evaluate_clients,
    evaluate_pooled,
    fedavg,
    history_frame,
    local_train,
    pooled_windows,
    train_centralized,
    train_cluster_fl,
)
from .windows import (
    N_FEATURES,
    STEP_FEATURES,
    ClientDataset,
    WindowSample,
    WindowSet,
    build_windows,
    make_client_dataset,
)

__all__ = [
    "ClientDataset",
    "ForecastTrajectory",
    "ModelArtifact",
    "ModelParams",
    "N_FEATURES",
    "RoundRecord",
    "STEP_FEATURES",
    "WindowSample",
    "WindowSet",
    "backward",
    "build_windows",
    "evaluate_clients",
    "evaluate_pooled",
    "fedavg",
    "filter_uninformative_clients",
    "forward",
    "forward_batch",
    "history_frame",
    "init_params",
    "load_model",
    "local_train",
    "make_client_dataset",
    "pooled_windows",
    "rolling_forecast",
    "save_model",
    "train_centralized",
    "train_cluster_fl",
    "trajectories_frame",
]
