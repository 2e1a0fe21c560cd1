from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Optional

from .core import DEFAULT_BINS, DEFAULT_EMBEDDING_DIM


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Config:
    """Every tunable threshold of the pipeline.

    ``window`` bounds how many shots ahead the similar-shot search looks;
    ``None`` (or ``"inf"`` in JSON) removes the bound.
    """

    theta_cut: float = 0.5
    theta_sim: float = 0.8
    theta_single: float = 0.10
    theta_pair: float = 12.2
    window: Optional[int] = 30
    bins: int = DEFAULT_BINS
    epsilon: float = 1e-6
    embedding_dim: int = DEFAULT_EMBEDDING_DIM
    cut_tolerance: int = 1
    low_cut_height: float = 8.0
    covariance: Optional[str] = None
    global_covariance: Optional[str] = None
    synth: Optional[dict] = None

    def __post_init__(self):
        if not -1.0 < self.theta_cut < 1.0:
            raise ConfigError(f"theta_cut must lie in (-1, 1), got {self.theta_cut}")
        if not -1.0 <= self.theta_sim <= 1.0:
            raise ConfigError(f"theta_sim must lie in [-1, 1], got {self.theta_sim}")
        if self.window is not None and self.window < 1:
            raise ConfigError(f"window must be >= 1, got {self.window}")
        if self.bins < 1 or self.embedding_dim < 1:
            raise ConfigError("bins and embedding_dim must be positive")
        if self.epsilon < 0:
            raise ConfigError("epsilon must be non-negative")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Config":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        data = dict(data)
        window = data.get("window", cls.window)
        if isinstance(window, str) and window.lower() in ("inf", "infinity", "none"):
            data["window"] = None
        elif isinstance(window, float) and math.isinf(window):
            data["window"] = None
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> "Config":
        # OSError propagates: the CLI maps it to an I/O exit status
        text = Path(path).read_text(encoding="utf-8")
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        if data["window"] is None:
            data["window"] = "inf"
        return data
