from __future__ import annotations

__all__ = ["__version__", "run", "load_run_config"]
__version__ = "0.1.0"

from .sdk import load_run_config, run  # noqa: E402
