"""Shared numeric types: matrix wrappers, the quaternion probe, block trace and RNG streams."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ContractError",
    "ConfigurationError",
    "SquareComplexMatrix",
    "HermitianMatrix",
    "GinibreMatrix",
    "QuaternionArgument",
    "OUParams",
    "EnsembleBatch",
    "block_trace",
    "quaternion_embed",
    "rng_stream",
]


class ContractError(ValueError):
    """Raised when an operation is called outside its precondition."""


class ConfigurationError(ValueError):
    """Raised for parameter combinations the integrators cannot handle."""


def _as_square(entries) -> np.ndarray:
    m = np.array(entries, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ContractError(f"expected a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ContractError("matrix entries must be finite")
    return m


@dataclass(frozen=True)
class SquareComplexMatrix:
    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", _as_square(self.entries))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def x(self) -> np.ndarray:
        return self.entries.real.copy()

    @property
    def y(self) -> np.ndarray:
        return self.entries.imag.copy()


@dataclass(frozen=True)
class HermitianMatrix(SquareComplexMatrix):
    """A matrix with H = H^dagger; x is symmetric and y antisymmetric."""

    def __post_init__(self):
        super().__post_init__()
        m = self.entries
        if not np.array_equal(m, m.conj().T):
            raise ContractError("matrix is not exactly hermitian; use HermitianMatrix.from_any")

    @classmethod
    def from_any(cls, m) -> "HermitianMatrix":
        m = _as_square(m)
        h = 0.5 * (m + m.conj().T)
        # force exact symmetry against rounding in the sum above
        h = np.triu(h) + np.triu(h, 1).conj().T
        h[np.diag_indices_from(h)] = h.diagonal().real
        return cls(h)


@dataclass(frozen=True)
class GinibreMatrix(SquareComplexMatrix):
    pass


@dataclass(frozen=True)
class QuaternionArgument:
    """The probe pair (z, w), embedded as [[z, -conj(w)], [w, conj(z)]]."""

    z: complex
    w: complex = 0.0

    def embed(self) -> np.ndarray:
        return quaternion_embed(self)

    def components(self) -> tuple[float, float, float, float]:
        z, w = complex(self.z), complex(self.w)
        return z.real, w.imag, -w.real, z.imag

    @classmethod
    def from_components(cls, q0: float, q1: float, q2: float, q3: float) -> "QuaternionArgument":
        return cls(complex(q0, q3), complex(-q2, q1))


def quaternion_embed(q: QuaternionArgument) -> np.ndarray:
    z, w = complex(q.z), complex(q.w)
    return np.array([[z, -w.conjugate()], [w, z.conjugate()]], dtype=np.complex128)


def block_trace(m, n: int) -> np.ndarray:
    """Map a (..., 2n, 2n) block matrix to the (..., 2, 2) matrix of block traces."""
    m = np.asarray(m)
    if m.ndim < 2 or m.shape[-1] != 2 * n or m.shape[-2] != 2 * n:
        raise ContractError(f"block_trace expects trailing shape ({2 * n}, {2 * n}), got {m.shape}")
    blocks = m.reshape(m.shape[:-2] + (2, n, 2, n))
    return np.einsum("...aibi->...ab", blocks)


@dataclass(frozen=True)
class OUParams:
    a: float = 0.5
    n: int = 2
    dt: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.a < 0 or not np.isfinite(self.a):
            raise ConfigurationError(f"a must be finite and >= 0, got {self.a}")
        if int(self.n) != self.n or self.n < 1:
            raise ConfigurationError(f"n must be a positive integer, got {self.n}")
        if self.dt is None:
            object.__setattr__(self, "dt", default_dt(self.a))
        if not self.dt > 0:
            raise ConfigurationError(f"dt must be > 0, got {self.dt}")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must fit in an unsigned 64-bit integer")


def default_dt(a: float) -> float:
    return 1e-4 / a if a > 0 else 1e-4


@dataclass
class EnsembleBatch:
    """Samples of one ensemble at a common diffusion time.

    ``samples`` is stacked as an (S, N, N) complex array; ``kind`` is
    ``"hermitian"`` or ``"ginibre"``.
    """

    params: OUParams
    tau: float
    samples: np.ndarray
    initial: np.ndarray
    kind: str = "hermitian"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.complex128)
        if self.samples.ndim == 2:
            self.samples = self.samples[None]
        if self.samples.ndim != 3 or self.samples.shape[1] != self.samples.shape[2]:
            raise ContractError(f"samples must be (S, N, N), got {self.samples.shape}")
        if self.kind not in ("hermitian", "ginibre"):
            raise ContractError(f"unknown ensemble kind {self.kind!r}")

    @property
    def n(self) -> int:
        return self.samples.shape[1]

    def __len__(self) -> int:
        return self.samples.shape[0]


def rng_stream(seed: int, stream_id: int) -> np.random.Generator:
    """Counter-based Philox generator keyed by (seed, stream_id)."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream_id),))
    return np.random.Generator(np.random.Philox(ss))
