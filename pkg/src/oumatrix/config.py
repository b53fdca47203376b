"""Experiment configuration: flat ``key = value`` files merged with command-line overrides."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .core import ConfigurationError, OUParams


@dataclass(frozen=True)
class ExperimentDefaults:
    description: str
    n: int
    a: float
    samples: int
    tau: float
    dt: float | None = None
    bins: int = 0


EXPERIMENTS: dict[str, ExperimentDefaults] = {
    "gue-semicircle": ExperimentDefaults("stationary GUE eigenvalue histogram vs the semicircle", 64, 0.5, 200, math.inf, bins=40),
    "ginibre-disc": ExperimentDefaults("stationary Ginibre radial density vs the circular law", 64, 0.5, 200, math.inf, bins=8),
    "overlap-law": ExperimentDefaults("binned eigenvector-overlap correlator vs the parabolic law", 64, 0.5, 200, math.inf, bins=4),
    "edge-erfc": ExperimentDefaults("Ginibre edge profile in sqrt(N) units vs the erfc law", 256, 0.5, 2000, math.inf, bins=32),
    "acp-verify": ExperimentDefaults("averaged characteristic polynomial: Monte Carlo vs exact heat solution", 4, 0.5, 100_000, 0.7, bins=5),
    "qdet-verify": ExperimentDefaults("quaternionic determinant: Monte Carlo vs exact heat solution", 2, 0.5, 100_000, 0.5, bins=4),
    "dyson-trajectories": ExperimentDefaults("matrix-level vs eigenvalue-level dynamics, overlap invariants", 8, 0.5, 1000, 1.0),
    "two-by-two": ExperimentDefaults("N=2 Ginibre and GUE trajectories: overlap peaks vs eigenvalue approach", 2, 0.0, 500, 0.2, dt=1e-4),
    "pde-residuals": ExperimentDefaults("finite-difference PDE residuals, Burgers and characteristics checks", 2, 0.5, 50, 1.0),
}

# keys accepted from files and overrides, with their parsers
_BOOL = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def _parse_bool(v):
    if isinstance(v, bool):
        return v
    try:
        return _BOOL[str(v).strip().lower()]
    except KeyError:
        raise ValueError(f"not a boolean: {v!r}") from None


def _parse_int(v):
    if isinstance(v, bool):
        raise ValueError("boolean given where an integer is expected")
    if isinstance(v, int):
        return v
    f = float(v)
    if not f.is_integer():
        raise ValueError(f"not an integer: {v!r}")
    return int(f)


KEYS = {
    "experiment": str,
    "seed": _parse_int,
    "n": _parse_int,
    "a": float,
    "samples": _parse_int,
    "tau": float,
    "dt": float,
    "bins": _parse_int,
    "regulator": float,
    "out": str,
    "workers": _parse_int,
    "plot": _parse_bool,
    "sign_flip": _parse_bool,
}

# fields that do not change results and are left out of the config hash
_NON_SEMANTIC = ("out", "workers", "plot")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int
    n: int
    a: float
    samples: int
    tau: float
    dt: float
    bins: int = 0
    regulator: float = 0.1
    out: str = "results"
    workers: int = 1
    plot: bool = True
    sign_flip: bool = False  # test hook: run the exact solvers with the wrong diffusion sign

    @property
    def params(self) -> OUParams:
        return OUParams(a=self.a, n=self.n, dt=self.dt, seed=self.seed)

    def semantic(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k not in _NON_SEMANTIC}
        d["tau"] = repr(self.tau)  # JSON has no inf
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.semantic(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def output_dir(self) -> Path:
        return Path(self.out)


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    p = Path(path)
    if not p.is_file():
        raise ConfigurationError(f"config file not found: {p}")
    out = {}
    for lineno, raw in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{p}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigurationError(f"{p}:{lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigurationError(f"{p}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def parse_config(path=None, **overrides) -> ExperimentConfig:
    """Merge file values, then non-None overrides, then per-experiment defaults, and validate."""
    raw = read_config_file(path) if path is not None else {}
    for k, v in overrides.items():
        if k not in KEYS:
            raise ConfigurationError(f"unknown key {k!r}")
        if v is not None:
            raw[k] = v
    for req in ("experiment", "seed"):
        if req not in raw:
            raise ConfigurationError(f"missing required field {req!r}")
    values = {}
    for k, v in raw.items():
        try:
            values[k] = KEYS[k](v)
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"field {k!r}: {exc}") from None
    exp = values["experiment"]
    if exp not in EXPERIMENTS:
        raise ConfigurationError(f"unknown experiment {exp!r}; choose from {', '.join(EXPERIMENTS)}")
    d = EXPERIMENTS[exp]
    values.setdefault("n", d.n)
    values.setdefault("a", d.a)
    values.setdefault("samples", d.samples)
    values.setdefault("tau", d.tau)
    values.setdefault("bins", d.bins)
    values.setdefault("out", f"results/{exp}")
    if "dt" not in values:
        values["dt"] = d.dt if d.dt is not None else OUParams(a=max(values["a"], 0.0), n=1).dt
    _validate(values)
    return ExperimentConfig(**values)


def _validate(v: dict):
    problems = []
    if not 0 <= v["seed"] < 2**64:
        problems.append("seed must be an unsigned 64-bit integer")
    for k in ("n", "samples"):
        if v[k] < 1:
            problems.append(f"{k} must be >= 1, got {v[k]}")
    if v["samples"] < 2:
        problems.append("samples must be >= 2 for error bars")
    if not (v["a"] >= 0 and math.isfinite(v["a"])):
        problems.append(f"a must be finite and >= 0, got {v['a']}")
    if not v["tau"] > 0:
        problems.append(f"tau must be > 0, got {v['tau']}")
    if math.isinf(v["tau"]) and v["a"] == 0:
        problems.append("tau = inf needs a > 0 (no stationary state at a = 0)")
    if not (v["dt"] > 0 and math.isfinite(v["dt"])):
        problems.append(f"dt must be > 0, got {v['dt']}")
    if v.get("bins", 0) < 0:
        problems.append("bins must be >= 0")
    if "regulator" in v and not v["regulator"] > 0:
        problems.append("regulator must be > 0")
    if v.get("workers", 1) < 1:
        problems.append("workers must be >= 1")
    if v["experiment"] in ("two-by-two",) and v["n"] != 2:
        problems.append("two-by-two needs n = 2")
    if problems:
        raise ConfigurationError("; ".join(problems))


def config_fields() -> list[str]:
    return [f.name for f in fields(ExperimentConfig)]
