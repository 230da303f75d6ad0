"""Run configuration and manifests.

An ``EnsembleConfig`` names a matrix ensemble and its parameters; it is read
from JSON with unknown keys rejected.  A ``RunManifest`` records everything
needed to regenerate the outputs of one command bit for bit.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .errors import ConfigError

KINDS = ("wigner-levy", "goe", "free-sum-diag", "free-sum-wl", "deformed-wigner", "wishart-student")
SCALE_MODELS = ("global", "per-row")

SEED_DERIVATION = "trial i uses numpy default_rng(SeedSequence([seed, i])); auxiliary streams use SeedSequence(seed, spawn_key=(tag,))"


@dataclass
class EnsembleConfig:
    kind: str
    N: int = 200
    trials: int = 100
    alpha: float | None = None
    beta: float = 0.0
    range: float = 1.0
    sigma: float = 1.0
    a: float | None = None
    K: int = 1
    T: int | None = None
    scale_model: str = "global"
    diag_law: str = "semicircle"
    scaling_exponent: float | None = None
    lambda_min: float = -5.0
    lambda_max: float = 5.0
    bins: int = 40

    def __post_init__(self):
        self.validate()

    # exponent of N applied to the raw spectrum before histogramming
    def exponent(self):
        if self.scaling_exponent is not None:
            return self.scaling_exponent
        if self.kind == "wigner-levy":
            return 1.0 / self.alpha
        if self.kind == "goe":
            return 0.5
        return 0.0

    def validate(self):
        def bad(key, msg):
            raise ConfigError(f"{key}: {msg}")

        if self.kind not in KINDS:
            bad("kind", f"must be one of {', '.join(KINDS)}, got {self.kind!r}")
        for key in ("N", "trials", "K", "bins"):
            v = getattr(self, key)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                bad(key, f"must be a positive integer, got {v!r}")
        if not (self.lambda_min < self.lambda_max):
            bad("lambda_max", "must exceed lambda_min")
        if not (-1.0 <= self.beta <= 1.0):
            bad("beta", f"must lie in [-1, 1], got {self.beta}")
        if not (self.range > 0 and math.isfinite(self.range)):
            bad("range", f"must be positive, got {self.range}")
        if not self.sigma > 0:
            bad("sigma", f"must be positive, got {self.sigma}")
        k = self.kind
        if k == "goe":
            return
        if self.alpha is None:
            bad("alpha", f"required for kind {k}")
        if k in ("wigner-levy", "free-sum-wl", "free-sum-diag"):
            if not (0.0 < self.alpha <= 2.0):
                bad("alpha", f"must lie in (0, 2] for {k}, got {self.alpha}")
        elif not self.alpha > 0:
            bad("alpha", f"must be positive, got {self.alpha}")
        if k == "free-sum-diag" and self.diag_law != "semicircle" and not self.diag_law.startswith("csv:"):
            bad("diag_law", f"must be 'semicircle' or 'csv:<path>', got {self.diag_law!r}")
        if k in ("deformed-wigner", "wishart-student") and self.a is not None and not self.a > 0:
            bad("a", f"must be positive, got {self.a}")
        if k == "wishart-student":
            if self.T is None or not isinstance(self.T, int) or self.T < self.N:
                bad("T", f"must be an integer >= N (ratio N/T <= 1), got {self.T!r}")
            if self.scale_model not in SCALE_MODELS:
                bad("scale_model", f"must be one of {', '.join(SCALE_MODELS)}, got {self.scale_model!r}")

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        names = {f.name for f in dataclasses.fields(cls)}
        for key in d:
            if key not in names:
                raise ConfigError(f"{key}: unknown key")
        if "kind" not in d:
            raise ConfigError("kind: required")
        return cls(**d)


def load_config(path) -> EnsembleConfig:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return EnsembleConfig.from_dict(d)


def save_config(cfg: EnsembleConfig, path):
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int | None = None
    workers: int = 1
    tool_version: str = __version__
    seed_derivation: str = SEED_DERIVATION
    outputs: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def add_output(self, path):
        self.outputs.append({"path": Path(path).name, "sha256": sha256_file(path)})

    def write(self, path):
        Path(path).write_text(json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True) + "\n")

    @classmethod
    def read(cls, path):
        return cls(**json.loads(Path(path).read_text()))
