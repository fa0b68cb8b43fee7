"""Seeded generation of sensing matrices, sparse signals and measurement noise.

Two measurement models are supported::

    y = G x + e          (output noise)
    y = G (x + w)        (input noise)

Every generator takes an :class:`RngStream`, so a fixed ``(master_seed,
stream_id)`` pair reproduces the same draw bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

__all__ = [
    "RngStream",
    "SparseSignal",
    "SensingMatrix",
    "OutputGaussian",
    "InputDeterministic",
    "InputGaussian",
    "NoiseSpec",
    "gen_matrix",
    "gen_signal",
    "gen_measurement",
    "uniform_input_noise",
    "complement_frame",
    "ENSEMBLES",
]

ENSEMBLES = ("gaussian", "bernoulli", "explicit")


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream keyed by ``(master_seed, stream_id)``.

    Distinct stream ids give statistically independent generators (numpy
    ``SeedSequence`` spawn keys).
    """

    master_seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(
            entropy=int(self.master_seed) & ((1 << 64) - 1),
            spawn_key=(int(self.stream_id),),
        )
        return np.random.Generator(np.random.PCG64(ss))

    def substream(self, stream_id: int) -> "RngStream":
        return RngStream(self.master_seed, stream_id)


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return RngStream(int(rng)).generator()


@dataclass(frozen=True)
class SparseSignal:
    """Ground-truth ``n``-vector stored by its support.

    ``x_min`` is the smallest support magnitude; the empty signal uses the
    sentinel ``x_min = 0``.
    """

    n: int
    support: np.ndarray
    values: np.ndarray
    x_min: float = field(default=0.0)

    def __post_init__(self):
        support = np.asarray(self.support, dtype=np.intp).ravel()
        values = np.asarray(self.values, dtype=float).ravel()
        if self.n < 1:
            raise ValueError(f"signal dimension must be positive, got {self.n}")
        if support.shape != values.shape:
            raise ValueError("support and values must have the same length")
        if support.size:
            if np.any(np.diff(support) <= 0):
                raise ValueError("support indices must be sorted and unique")
            if support[0] < 0 or support[-1] >= self.n:
                raise ValueError("support index out of range")
            if np.any(values == 0):
                raise ValueError("support values must be nonzero")
        x_min = float(np.min(np.abs(values))) if values.size else 0.0
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "x_min", x_min)

    @classmethod
    def from_dense(cls, x) -> "SparseSignal":
        x = np.asarray(x, dtype=float).ravel()
        support = np.flatnonzero(x)
        return cls(x.size, support, x[support])

    @property
    def k(self) -> int:
        return int(self.support.size)

    @property
    def signs(self) -> np.ndarray:
        return np.sign(self.values).astype(int)

    def dense(self) -> np.ndarray:
        x = np.zeros(self.n)
        x[self.support] = self.values
        return x

    def scaled(self, c: float) -> "SparseSignal":
        return SparseSignal(self.n, self.support, c * self.values)


@dataclass(frozen=True)
class SensingMatrix:
    """Dense ``m x n`` measurement operator with its ensemble tag."""

    entries: np.ndarray
    ensemble: str = "explicit"

    def __post_init__(self):
        a = np.ascontiguousarray(np.asarray(self.entries, dtype=float))
        if a.ndim != 2 or min(a.shape) < 1:
            raise ValueError(f"sensing matrix must be 2-D and nonempty, got {a.shape}")
        if self.ensemble not in ENSEMBLES:
            raise ValueError(f"unknown ensemble {self.ensemble!r}")
        object.__setattr__(self, "entries", a)

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self):
        return self.entries.shape

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def rows(self, sl) -> "SensingMatrix":
        return SensingMatrix(self.entries[sl], self.ensemble)


def as_array(G) -> np.ndarray:
    """Return the dense entries of ``G`` (a SensingMatrix or array-like)."""
    if isinstance(G, SensingMatrix):
        return G.entries
    a = np.asarray(G, dtype=float)
    if a.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    return a


@dataclass(frozen=True)
class OutputGaussian:
    """``y = Gx + e`` with ``e_j ~ N(0, sigma^2)``."""

    sigma: float

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError("sigma must be nonnegative")


@dataclass(frozen=True)
class InputDeterministic:
    """``y = G(x + w)`` for a fixed perturbation with ``||w||_inf <= eps_inf``."""

    w: np.ndarray
    eps_inf: float

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float).ravel()
        if np.max(np.abs(w), initial=0.0) > self.eps_inf:
            raise ValueError("||w||_inf exceeds eps_inf")
        object.__setattr__(self, "w", w)


@dataclass(frozen=True)
class InputGaussian:
    """``y = G(x + w)`` with ``w_j ~ N(0, sigma^2)``."""

    sigma: float

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError("sigma must be nonnegative")


NoiseSpec = Union[OutputGaussian, InputDeterministic, InputGaussian]


def gen_matrix(m: int, n: int, ensemble: str = "gaussian", rng=0) -> SensingMatrix:
    """Draw an ``m x n`` sensing matrix.

    Parameters
    ----------
    m, n : int
        Rows and columns.
    ensemble : {"gaussian", "bernoulli"}
        ``gaussian``: i.i.d. N(0, 1/m). ``bernoulli``: i.i.d. +-1/sqrt(m).
    rng : RngStream, Generator or int
    """
    if int(m) != m or int(n) != n or m < 1 or n < 1:
        raise ValueError(f"invalid dimensions m={m}, n={n}")
    m, n = int(m), int(n)
    gen = _as_generator(rng)
    scale = 1.0 / np.sqrt(m)
    if ensemble == "gaussian":
        a = gen.standard_normal((m, n)) * scale
    elif ensemble == "bernoulli":
        a = np.where(gen.integers(0, 2, size=(m, n)) == 1, scale, -scale)
    else:
        raise ValueError(f"cannot sample ensemble {ensemble!r}")
    return SensingMatrix(a, ensemble)


def complement_frame(n: int, rng=0) -> SensingMatrix:
    """``(n-1) x n`` matrix with orthonormal rows orthogonal to a random sign vector.

    With ``q = s / sqrt(n)`` for random signs ``s``, the Gram matrix is
    ``I - q q'``, so every ``t``-column submatrix has eigenvalues ``1`` and
    ``1 - t/n`` and the isometry constant is exactly ``delta_t = t / n``.
    A random rotation of the rows leaves the Gram matrix unchanged. This
    gives small instances that provably satisfy tight isometry conditions,
    which i.i.d. ensembles essentially never do at ``n <= 20``.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    gen = _as_generator(rng)
    q = np.where(gen.integers(0, 2, size=n) == 1, 1.0, -1.0) / np.sqrt(n)
    # complete q to an orthonormal basis; the trailing n-1 columns span q-perp
    Q, _ = np.linalg.qr(np.column_stack([q, gen.standard_normal((n, n - 1))]))
    R, _ = np.linalg.qr(gen.standard_normal((n - 1, n - 1)))
    return SensingMatrix(R @ Q[:, 1:].T, "explicit")


def gen_signal(
    n: int,
    k: int,
    rng=0,
    signs: Sequence[int] | None = None,
    amplitudes: Sequence[float] | None = None,
    support: Sequence[int] | None = None,
) -> SparseSignal:
    """Draw a ``k``-sparse signal of length ``n``.

    The support is uniform over ``k``-subsets unless given. Signs are random
    (``signs=None``) or given; amplitudes are all one (``amplitudes=None``)
    or given, so unit mode has ``x_min = 1``.
    """
    if n < 1 or k < 0 or k > n:
        raise ValueError(f"need 0 <= k <= n, got n={n}, k={k}")
    gen = _as_generator(rng)
    if support is None:
        support = np.sort(gen.choice(n, size=k, replace=False))
    support = np.asarray(support, dtype=np.intp)
    if support.size != k:
        raise ValueError("support length must equal k")
    if signs is None:
        s = np.where(gen.integers(0, 2, size=k) == 1, 1.0, -1.0)
    else:
        s = np.asarray(signs, dtype=float)
        if s.size != k or not np.all(np.abs(s) == 1):
            raise ValueError("signs must be k values in {+1, -1}")
    if amplitudes is None:
        amp = np.ones(k)
    else:
        amp = np.asarray(amplitudes, dtype=float)
        if amp.size != k or np.any(amp <= 0):
            raise ValueError("amplitudes must be k positive values")
    order = np.argsort(support)
    return SparseSignal(n, support[order], (s * amp)[order])


def uniform_input_noise(n: int, eps: float, rng=0) -> InputDeterministic:
    """Input perturbation uniform on ``[-eps, eps]``, clipped to the bound."""
    gen = _as_generator(rng)
    w = np.clip(gen.uniform(-eps, eps, size=n), -eps, eps)
    return InputDeterministic(w, eps)


def gen_measurement(G, x: SparseSignal, noise: NoiseSpec, rng=0):
    """Produce measurements ``y`` and the realized noise vector.

    Returns
    -------
    y : ndarray, shape (m,)
    noise : ndarray
        ``e`` (length m) for output noise, ``w`` (length n) for input noise.
    """
    A = as_array(G)
    m, n = A.shape
    if x.n != n:
        raise ValueError(f"signal length {x.n} does not match matrix width {n}")
    xd = x.dense()
    if isinstance(noise, OutputGaussian):
        e = _as_generator(rng).standard_normal(m) * noise.sigma
        return A @ xd + e, e
    if isinstance(noise, InputDeterministic):
        if noise.w.size != n:
            raise ValueError("input perturbation has the wrong length")
        w = noise.w.copy()
        return A @ (xd + w), w
    if isinstance(noise, InputGaussian):
        w = _as_generator(rng).standard_normal(n) * noise.sigma
        return A @ (xd + w), w
    raise TypeError(f"unknown noise spec {noise!r}")
