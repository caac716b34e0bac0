# config.py – run configuration (JSON) and environment settings (.env)
"""RunConfig mirrors the JSON config file; EnvSettings reads LAXTOP_* variables after load_dotenv()."""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from dotenv import load_dotenv

from errors import ConfigError
from specfun import DEFAULT_CUTOFF, DEFAULT_POLE_GUARD, EllipticContext, Regime, distance_to_lattice

logger = logging.getLogger(__name__)

# ───────── constants ─────────
THREADS_ENV      = "LAXTOP_THREADS"
LOG_LEVEL_ENV    = "LAXTOP_LOG_LEVEL"
LOG_LEVELS       = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")
INITIAL_MODES    = ("random", "rank1", "file")

DEFAULT_TOLERANCES = {"identity": 1e-8, "lax": 1e-9, "conservation": 1e-6}


def _complex(value, name: str) -> complex:
    """[re, im] pair, bare number, or null → complex."""
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(isinstance(v, (int, float)) for v in value):
        return complex(value[0], value[1])
    raise ConfigError(f"{name} must be a number or an [re, im] pair, got {value!r}")


@dataclass(frozen=True)
class RunConfig:
    regime: Regime
    n: int
    m: int
    eta: complex
    tau: complex | None = None
    seed: int = 0
    initial_mode: str = "random"
    initial_path: str | None = None
    rank1: bool = False
    spin_scale: float = 1.0
    dt: float = 1e-3
    steps: int = 1000
    record_every: int = 10
    z_samples: tuple = (0.3 + 0.2j,)
    orders: tuple = (1, 2, 3, 4)
    samples: int = 200
    series_cutoff: int = DEFAULT_CUTOFF
    pole_guard: float = DEFAULT_POLE_GUARD
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    output: str = "out"

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config root must be a JSON object")
        try:
            initial = data.get("initial", {}) or {}
            tolerances = dict(DEFAULT_TOLERANCES)
            tolerances.update(data.get("tolerances", {}) or {})
            cfg = cls(
                regime=Regime(data.get("regime", "elliptic")),
                n=int(data["N"]),
                m=int(data["M"]),
                eta=_complex(data.get("eta", [0.4, 0.1]), "eta"),
                tau=None if data.get("tau") is None else _complex(data["tau"], "tau"),
                seed=int(data.get("seed", 0)),
                initial_mode=str(initial.get("mode", "random")),
                initial_path=initial.get("path"),
                rank1=bool(initial.get("rank1", initial.get("mode") == "rank1")),
                spin_scale=float(data.get("spin_scale", 1.0)),
                dt=float(data.get("dt", 1e-3)),
                steps=int(data.get("steps", 1000)),
                record_every=int(data.get("record_every", 10)),
                z_samples=tuple(_complex(z, "z_samples") for z in data.get("z_samples", [[0.3, 0.2]])),
                orders=tuple(int(k) for k in data.get("orders", [1, 2, 3, 4])),
                samples=int(data.get("samples", 200)),
                series_cutoff=int(data.get("series_cutoff", DEFAULT_CUTOFF)),
                pole_guard=float(data.get("pole_guard", DEFAULT_POLE_GUARD)),
                tolerances=tolerances,
                output=str(data.get("output", "out")),
            )
        except KeyError as exc:
            raise ConfigError(f"missing config key {exc}") from exc
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad config value: {exc}") from exc
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, path: str | Path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        logger.info("Loaded config %s", path)
        return cls.from_dict(data)

    def validate(self):
        if self.n < 1 or self.m < 1:
            raise ConfigError(f"N and M must be positive, got N={self.n} M={self.m}")
        if self.n > 1 and self.regime is not Regime.ELLIPTIC:
            raise ConfigError(f"N={self.n} needs the elliptic regime")
        if self.initial_mode not in INITIAL_MODES:
            raise ConfigError(f"initial.mode must be one of {INITIAL_MODES}, got {self.initial_mode!r}")
        if self.initial_mode == "file" and not self.initial_path:
            raise ConfigError("initial.mode 'file' needs initial.path")
        if not self.dt > 0 or self.steps < 0 or self.record_every < 1 or self.samples < 1:
            raise ConfigError("dt, steps, record_every and samples must be positive")
        if not self.z_samples or min(self.orders, default=0) < 1:
            raise ConfigError("need z_samples and orders >= 1")
        bad = {k: v for k, v in self.tolerances.items() if not (isinstance(v, (int, float)) and v > 0)}
        if bad:
            raise ConfigError(f"tolerances must be positive: {bad}")
        if not self.spin_scale > 0:
            raise ConfigError(f"spin_scale must be positive, got {self.spin_scale}")
        ctx = self.context()
        for z in self.z_samples:
            if distance_to_lattice(ctx, z) < ctx.pole_guard:
                raise ConfigError(f"z_sample {z} lies on the singular set of the {ctx.regime.value} regime")

    def context(self) -> EllipticContext:
        return EllipticContext(self.regime, tau=self.tau, series_cutoff=self.series_cutoff,
                               pole_guard=self.pole_guard)

    def with_overrides(self, seed: int | None = None, output: str | None = None) -> "RunConfig":
        changes = {}
        if seed is not None:
            changes["seed"] = int(seed)
        if output is not None:
            changes["output"] = str(output)
        return replace(self, **changes) if changes else self

    def to_dict(self) -> dict:
        return {
            "regime": self.regime.value,
            "N": self.n,
            "M": self.m,
            "eta": self.eta,
            "tau": self.tau,
            "seed": self.seed,
            "initial": {"mode": self.initial_mode, "path": self.initial_path, "rank1": self.rank1},
            "spin_scale": self.spin_scale,
            "dt": self.dt,
            "steps": self.steps,
            "record_every": self.record_every,
            "z_samples": list(self.z_samples),
            "orders": list(self.orders),
            "samples": self.samples,
            "series_cutoff": self.series_cutoff,
            "pole_guard": self.pole_guard,
            "tolerances": dict(self.tolerances),
        }


class EnvSettings:
    """Process-level knobs from the environment (a local .env file is loaded first)."""

    def __init__(self):
        self.threads_raw = None
        self.log_level = None
        self._load()

    def _load(self):
        try:
            load_dotenv()
        except OSError as exc:
            logger.warning("could not read .env: %s", exc)
        self.threads_raw = os.getenv(THREADS_ENV, "0")
        self.log_level = os.getenv(LOG_LEVEL_ENV, "INFO").upper()

    @property
    def threads(self) -> int:
        """Worker cap; 0 means one per CPU."""
        try:
            value = int(self.threads_raw)
        except (TypeError, ValueError):
            return 1
        return value if value > 0 else (os.cpu_count() or 1)

    def is_valid(self) -> bool:
        try:
            if int(self.threads_raw) < 0:
                return False
        except (TypeError, ValueError):
            return False
        return self.log_level in LOG_LEVELS
