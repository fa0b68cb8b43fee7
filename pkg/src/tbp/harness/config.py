"""Experiment configuration, grid points and value parsers."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

__all__ = [
    "ALGOS",
    "NOISE_MODELS",
    "SNR_MODES",
    "SNR_SCALES",
    "AlgoSpec",
    "ExperimentConfig",
    "GridPoint",
    "parse_snr",
    "parse_int_grid",
    "parse_theta_grid",
    "parse_algos",
    "read_config_file",
    "theta_sigma",
]

ALGOS = ("tbp", "tbp-ols", "lasso", "maxcorr", "ml")
NOISE_MODELS = ("output", "input-det", "input-gauss")
SNR_MODES = ("fixed_snr", "theta_scan")
# "entry": noise variance 1/SNR for the 1/m-normalized matrix.
# "unnormalized": SNR referenced to a unit-variance matrix, i.e. variance 1/(m SNR).
SNR_SCALES = ("entry", "unnormalized")
LAMBDA_RULES = ("candes_plan", "tropp")


def parse_snr(text, n: int) -> float:
    """Parse an SNR value: a number, ``inf`` (noiseless) or ``"<c>logn"`` for ``c log n``."""
    if isinstance(text, (int, float)):
        return float(text)
    s = str(text).strip().lower().replace(" ", "").replace("*", "")
    for suffix in ("logn", "log(n)"):
        if s.endswith(suffix):
            c = s[: -len(suffix)]
            return (float(c) if c else 1.0) * math.log(n)
    return float(s)


def parse_int_grid(text) -> tuple[int, ...]:
    """``"2:60:4"`` (inclusive start:stop:step) or ``"10,20,30"`` or a single int."""
    if isinstance(text, (list, tuple)):
        return tuple(int(v) for v in text)
    s = str(text).strip()
    if ":" in s:
        parts = [int(p) for p in s.split(":")]
        if len(parts) == 2:
            parts.append(1)
        lo, hi, step = parts
        if step <= 0:
            raise ValueError("grid step must be positive")
        return tuple(range(lo, hi + 1, step))
    return tuple(int(p) for p in s.split(",") if p.strip())


def parse_theta_grid(text) -> tuple[float, ...]:
    """``"lo:hi:points"`` with ``lo``, ``hi`` as base-10 exponents, or a comma list."""
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    s = str(text).strip()
    if ":" in s:
        lo, hi, pts = s.split(":")
        return tuple(float(v) for v in np.logspace(float(lo), float(hi), int(pts)))
    return tuple(float(p) for p in s.split(",") if p.strip())


def theta_sigma(theta: float, n: int) -> float:
    """Noise std for the theta scan: ``1 / ((2 sqrt(12 log n) + 2) theta)``."""
    return 1.0 / ((2.0 * math.sqrt(12.0 * math.log(n)) + 2.0) * theta)


@dataclass(frozen=True)
class AlgoSpec:
    """An algorithm and its parameter; ``lam`` is a number or a rule name for LASSO."""

    name: str
    lam: float | str | None = None

    def __post_init__(self):
        if self.name not in ALGOS:
            raise ValueError(f"unknown algorithm {self.name!r}")
        if self.name != "lasso" and self.lam is not None:
            raise ValueError(f"{self.name} takes no lambda")
        if isinstance(self.lam, str) and self.lam not in LAMBDA_RULES:
            raise ValueError(f"unknown lambda rule {self.lam!r}")


def parse_algos(algo_text, lam_text=None) -> tuple[AlgoSpec, ...]:
    """Expand ``"tbp,lasso"`` with ``"0.2,0.3"`` into one spec per LASSO lambda."""
    names = [a.strip() for a in str(algo_text).split(",") if a.strip()]
    lams: list = [None]
    if lam_text not in (None, ""):
        lams = []
        for p in str(lam_text).split(","):
            p = p.strip()
            lams.append(p if p in LAMBDA_RULES else float(p))
    out = []
    for name in names:
        if name == "lasso":
            out.extend(AlgoSpec(name, lam) for lam in lams)
        else:
            out.append(AlgoSpec(name))
    return tuple(out)


@dataclass(frozen=True, order=True)
class GridPoint:
    """One cell of a sweep. ``snr`` and ``theta`` are None when unused;
    ``lam`` is the numeric LASSO lambda (None for other algorithms or when
    a rule picks it per trial)."""

    algo: str
    n: int
    m: int
    k: int
    ensemble: str
    noise_model: str
    snr: float | None
    theta: float | None
    lam: float | None
    lam_rule: str | None = None
    snr_scale: str = "entry"
    x_min: float = 1.0

    @property
    def sigma(self) -> float:
        """Noise standard deviation (l-inf bound for deterministic input noise)."""
        if self.theta is not None:
            return theta_sigma(self.theta, self.n)
        if self.snr is None or math.isinf(self.snr):
            return 0.0
        if self.snr_scale == "unnormalized":
            return 1.0 / math.sqrt(self.m * self.snr)
        return 1.0 / math.sqrt(self.snr)

    def key(self) -> tuple:
        """Sort key that tolerates None fields."""
        return tuple((0, "") if v is None else (1, v) for v in (
            self.algo, self.n, self.m, self.k, self.ensemble, self.noise_model,
            self.snr, self.theta, self.lam, self.lam_rule, self.snr_scale, self.x_min,
        ))


@dataclass(frozen=True)
class ExperimentConfig:
    """A Monte-Carlo sweep over k (or m, or theta) for a list of algorithms.

    Exactly one of ``snr`` (``snr_mode="fixed_snr"``) or ``theta_grid``
    (``snr_mode="theta_scan"``) is set.
    """

    n: int
    m: int | None = None
    m_grid: tuple[int, ...] = ()
    k: int | None = None
    k_grid: tuple[int, ...] = ()
    ensemble: str = "gaussian"
    noise_model: str = "output"
    snr_mode: str = "fixed_snr"
    snr: float | None = None
    theta_grid: tuple[float, ...] = ()
    algorithms: tuple[AlgoSpec, ...] = (AlgoSpec("tbp"),)
    trials: int = 40
    master_seed: int = 0
    out: Path | None = None
    snr_scale: str = "entry"
    timing: bool = False
    x_min: float = 1.0
    workers: int | None = None
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "m_grid", tuple(int(v) for v in self.m_grid))
        object.__setattr__(self, "k_grid", tuple(int(v) for v in self.k_grid))
        object.__setattr__(self, "theta_grid", tuple(float(v) for v in self.theta_grid))
        if self.out is not None:
            object.__setattr__(self, "out", Path(self.out))
        self.validate()

    @property
    def ms(self) -> tuple[int, ...]:
        return self.m_grid if self.m_grid else ((self.m,) if self.m is not None else ())

    @property
    def ks(self) -> tuple[int, ...]:
        return self.k_grid if self.k_grid else ((self.k,) if self.k is not None else ())

    def validate(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if not self.ms:
            raise ValueError("set m or a nonempty m grid")
        if not self.ks:
            raise ValueError("set k or a nonempty k grid")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.ensemble not in ("gaussian", "bernoulli"):
            raise ValueError(f"ensemble must be gaussian or bernoulli, got {self.ensemble!r}")
        if self.noise_model not in NOISE_MODELS:
            raise ValueError(f"unknown noise model {self.noise_model!r}")
        if self.snr_scale not in SNR_SCALES:
            raise ValueError(f"unknown snr scale {self.snr_scale!r}")
        if self.snr_mode == "fixed_snr":
            if self.snr is None or self.theta_grid:
                raise ValueError("fixed_snr mode needs snr and no theta grid")
            if not self.snr > 0:
                raise ValueError("snr must be positive")
        elif self.snr_mode == "theta_scan":
            if self.snr is not None or not self.theta_grid:
                raise ValueError("theta_scan mode needs a theta grid and no snr")
            if min(self.theta_grid) <= 0:
                raise ValueError("theta values must be positive")
        else:
            raise ValueError(f"unknown snr mode {self.snr_mode!r}")
        if not self.algorithms:
            raise ValueError("no algorithms selected")
        for m in self.ms:
            if m < 1:
                raise ValueError("m must be positive")
            if m > self.n:
                raise ValueError(f"m={m} exceeds n={self.n}; basis pursuit needs m <= n")
        for k in self.ks:
            if not 0 <= k <= self.n:
                raise ValueError(f"k={k} outside [0, n]")

    def default_lambda(self) -> float:
        # replication defaults: 0.2 for sparsity sweeps, 0.3 for measurement sweeps
        return 0.3 if len(self.ms) > 1 else 0.2

    def grid(self) -> Iterator[GridPoint]:
        thetas: Sequence = self.theta_grid if self.snr_mode == "theta_scan" else (None,)
        snr = self.snr if self.snr_mode == "fixed_snr" else None
        for spec in self.algorithms:
            lam, rule = None, None
            if spec.name == "lasso":
                if isinstance(spec.lam, str):
                    rule = spec.lam
                else:
                    lam = float(spec.lam) if spec.lam is not None else self.default_lambda()
            for m in self.ms:
                for k in self.ks:
                    for th in thetas:
                        yield GridPoint(
                            spec.name, self.n, m, k, self.ensemble, self.noise_model,
                            snr, th, lam, rule, self.snr_scale, self.x_min,
                        )

    def with_(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)


def read_config_file(path) -> dict:
    """Read a flat ``key = value`` file; ``#`` starts a comment.

    Keys use the long flag names with or without leading dashes
    (``k-grid`` and ``k_grid`` are equivalent).
    """
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, val = (p.strip() for p in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = val
    return out
