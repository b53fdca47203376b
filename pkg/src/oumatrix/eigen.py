"""Eigenvalue and eigenvector dynamics.

Covers the Dyson Langevin integrator, the hermitian eigenvector SDE,
bi-orthogonal decompositions of non-normal matrices with their overlap
matrices, and the two trajectory experiments (GUE with N = 20, Ginibre
with N = 2).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .core import ContractError, OUParams, rng_stream
from .diffusion import DiffusionState, ginibre_noise, step_ginibre

COLLISION_THRESHOLD = 1e-8
MAX_HALVINGS = 20
GAP_SAFETY = 0.01


class DecompositionError(RuntimeError):
    pass


class CollisionError(RuntimeError):
    pass


@dataclass
class EigenSystem:
    """Eigenvalues with right eigenvectors as columns of ``right`` and
    left eigenvectors as rows of ``left``, normalised so left @ right = I."""

    values: np.ndarray
    right: np.ndarray
    left: np.ndarray
    condition: float = 1.0

    @property
    def n(self) -> int:
        return len(self.values)

    def reconstruct(self) -> np.ndarray:
        return (self.right * self.values) @ self.left


def _is_hermitian(m: np.ndarray) -> bool:
    return np.array_equal(m, m.conj().T)


def eigen_decompose(m) -> EigenSystem:
    m = np.asarray(m.entries if hasattr(m, "entries") else m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ContractError(f"expected a square matrix, got {m.shape}")
    if _is_hermitian(m):
        vals, vecs = np.linalg.eigh(m)
        return EigenSystem(vals.astype(np.complex128), vecs, vecs.conj().T, 1.0)
    try:
        vals, right = np.linalg.eig(m)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError(f"eigensolver failed: {exc}") from exc
    cond = np.linalg.cond(right)
    scale = max(np.linalg.norm(m), np.finfo(float).tiny)
    gaps = np.abs(vals[:, None] - vals[None, :]) + np.diag(np.full(len(vals), np.inf))
    if not np.isfinite(cond) or cond > 1e14 or (len(vals) > 1 and gaps.min() < 1e-12 * scale):
        raise DecompositionError(f"matrix is numerically defective (cond(R) = {cond:.3g})")
    left = np.linalg.inv(right)
    return EigenSystem(vals, right, left, float(cond))


def overlaps(system: EigenSystem) -> np.ndarray:
    """O_ij = <L_i|L_j><R_j|R_i>."""
    ll = system.left @ system.left.conj().T
    rr = system.right.conj().T @ system.right
    return ll * rr.T


def batch_eigen_overlaps(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (S, N) and diagonal overlaps O_aa (S, N) for a stack of matrices."""
    vals, right = np.linalg.eig(samples)
    left = np.linalg.inv(right)
    o_diag = np.sum(np.abs(left) ** 2, axis=-1) * np.sum(np.abs(right) ** 2, axis=-2)
    return vals, o_diag


# -- Dyson Brownian motion ------------------------------------------------


def coulomb_drift(lam: np.ndarray) -> np.ndarray:
    n = lam.shape[-1]
    d = lam[..., :, None] - lam[..., None, :]
    idx = np.arange(n)
    d[..., idx, idx] = np.inf
    return np.sum(1.0 / d, axis=-1) / n


def _min_gap(lam: np.ndarray) -> np.ndarray:
    if lam.shape[-1] < 2:
        return np.full(lam.shape[:-1], np.inf)
    return np.min(np.diff(np.sort(lam, axis=-1), axis=-1), axis=-1)


def _order_kept(new: np.ndarray, order: np.ndarray) -> np.ndarray:
    if new.shape[-1] < 2:
        return np.ones(new.shape[:-1], dtype=bool)
    ranked = np.take_along_axis(new, order, axis=-1)
    return np.all(np.diff(ranked, axis=-1) > COLLISION_THRESHOLD, axis=-1)


def dyson_step(
    lambdas,
    params: OUParams,
    rng: np.random.Generator,
    dt: float | None = None,
    noise_scale: float = 1.0,
    safety: float = GAP_SAFETY,
) -> np.ndarray:
    """Advance eigenvalues by dt under dlam_i = dB_i/sqrt(N) + (1/N) sum 1/(lam_i - lam_j) dt - a lam_i dt.

    Accepts a single spectrum (N,) or a batch (R, N). Each row is covered
    by Euler sub-steps no longer than ``safety * N * gap**2``; a sub-step
    that breaks the ordering or brings a pair closer than 1e-8 is redrawn
    with half the step, at most 20 times in a row.
    """
    dt = params.dt if dt is None else dt
    lam = np.array(lambdas, dtype=float)
    single = lam.ndim == 1
    lam = np.atleast_2d(lam)
    n = lam.shape[-1]
    if np.any(_min_gap(lam) < COLLISION_THRESHOLD):
        raise CollisionError("input spectrum has a pair closer than the collision threshold")
    order = np.argsort(lam, axis=-1)
    remaining = np.full(lam.shape[0], float(dt))
    halvings = np.zeros(lam.shape[0], dtype=int)
    while True:
        active = np.nonzero(remaining > 0)[0]
        if active.size == 0:
            break
        cur = lam[active]
        h = np.minimum(remaining[active], safety * n * _min_gap(cur) ** 2) * 0.5 ** halvings[active]
        xi = rng.standard_normal(cur.shape)
        new = cur + (coulomb_drift(cur) - params.a * cur) * h[:, None] + noise_scale * np.sqrt(h / n)[:, None] * xi
        ok = _order_kept(new, order[active]) & np.all(np.isfinite(new), axis=-1)
        acc, rej = active[ok], active[~ok]
        lam[acc] = new[ok]
        remaining[acc] = np.where(h[ok] >= remaining[acc], 0.0, remaining[acc] - h[ok])
        halvings[acc] = 0
        halvings[rej] += 1
        if np.any(halvings > MAX_HALVINGS):
            raise CollisionError(f"eigenvalue collision persisted after {MAX_HALVINGS} step halvings")
    return lam[0] if single else lam


def jitter_degenerate(lambdas, spacing: float = 1e-6) -> np.ndarray:
    """Split repeated eigenvalues into clusters with the given spacing, centred on the original value."""
    lam = np.sort(np.asarray(lambdas, dtype=float))
    out = lam.copy()
    start = 0
    for i in range(1, len(lam) + 1):
        if i == len(lam) or lam[i] != lam[start]:
            m = i - start
            out[start:i] = lam[start] + spacing * (np.arange(m) - (m - 1) / 2)
            start = i
    return out


def hermitian_eigenvector_step(
    system: EigenSystem,
    params: OUParams,
    rng: np.random.Generator,
    orthonormalize: bool = True,
    dt: float | None = None,
    safety: float = GAP_SAFETY,
) -> EigenSystem:
    """One step of the coupled eigenvector SDE for a hermitian spectrum.

    Vectors follow dpsi_i = N^-1/2 sum_j dB_ij/(lam_i - lam_j) psi_j
    - (1/2N) sum_j dt/(lam_i - lam_j)^2 psi_i; eigenvalues follow the Dyson
    equation driven by an independent noise stream. Both share the
    gap-limited sub-stepping of :func:`dyson_step`.
    """
    dt = params.dt if dt is None else dt
    lam = np.real(system.values).astype(float)
    psi = np.array(system.right, dtype=np.complex128)
    n = len(lam)
    if n == 1:
        return EigenSystem(lam.astype(np.complex128), psi, psi.conj().T)
    remaining = float(dt)
    while remaining > 0:
        gap = _min_gap(lam)
        if gap < COLLISION_THRESHOLD:
            raise CollisionError("near-degenerate pair in eigenvector step")
        h = min(remaining, safety * n * gap**2)
        diff = lam[:, None] - lam[None, :]
        np.fill_diagonal(diff, np.inf)
        inv = 1.0 / diff
        g = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) * np.sqrt(h / 2)
        db = (g + g.conj().T) / np.sqrt(2)
        kick = (db * inv).T / np.sqrt(n)
        shrink = np.sum(inv**2, axis=1) * h / (2 * n)
        psi = psi + psi @ kick - psi * shrink
        lam = dyson_step(lam, params, rng, dt=h, safety=np.inf)
        if orthonormalize:
            u, _, vh = np.linalg.svd(psi)
            psi = u @ vh
        remaining = 0.0 if h >= remaining else remaining - h
    return EigenSystem(lam.astype(np.complex128), psi, psi.conj().T)


# -- trajectories ----------------------------------------------------------


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    eigenvalues: np.ndarray
    overlap: np.ndarray | None = None
    ambiguous: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.eigenvalues = np.asarray(self.eigenvalues)
        if self.eigenvalues.ndim == 1:
            self.eigenvalues = self.eigenvalues[:, None]
        if len(self.eigenvalues) != len(self.times):
            raise ContractError("eigenvalue path and time grid differ in length")
        if self.overlap is not None and len(self.overlap) != len(self.times):
            raise ContractError("overlap path and time grid differ in length")
        if np.any(np.diff(self.times) <= 0):
            raise ContractError("times must be strictly increasing")

    @property
    def jumps(self) -> np.ndarray:
        return jump_statistics(self)

    @property
    def distance(self) -> np.ndarray | None:
        if self.eigenvalues.shape[1] != 2:
            return None
        return np.abs(self.eigenvalues[:, 0] - self.eigenvalues[:, 1])

    def to_csv(self, path) -> None:
        n = self.eigenvalues.shape[1]
        jumps = self.jumps
        header = ["t"]
        for i in range(n):
            header += [f"re_lambda{i + 1}", f"im_lambda{i + 1}"]
        if self.distance is not None:
            header.append("distance")
        if self.overlap is not None:
            header.append("O11")
        for i in range(n):
            header += [f"re_jump{i + 1}", f"im_jump{i + 1}"]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(header)
            for k, t in enumerate(self.times):
                row = [repr(float(t))]
                for v in self.eigenvalues[k]:
                    row += [repr(float(np.real(v))), repr(float(np.imag(v)))]
                if self.distance is not None:
                    row.append(repr(float(self.distance[k])))
                if self.overlap is not None:
                    row.append(repr(float(self.overlap[k])))
                for i in range(n):
                    if k < len(jumps):
                        row += [repr(float(np.real(jumps[k, i]))), repr(float(np.imag(jumps[k, i])))]
                    else:
                        row += ["", ""]
                out.writerow(row)


def jump_statistics(record: TrajectoryRecord) -> np.ndarray:
    """Per-step increments normalised by sqrt(dt), shape (K, N)."""
    t = record.times
    if len(t) < 2:
        raise ContractError("need at least two time points")
    steps = np.diff(t)
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
        raise ContractError("jump statistics need a uniform time grid")
    return np.diff(record.eigenvalues, axis=0) / np.sqrt(steps[0])


def nearest_neighbour_distance(lam: np.ndarray) -> np.ndarray:
    d = np.abs(lam[..., :, None] - lam[..., None, :])
    idx = np.arange(lam.shape[-1])
    d[..., idx, idx] = np.inf
    return d.min(axis=-1)


def jump_distance_correlation(record: TrajectoryRecord, index: int) -> float:
    """Pearson r between |jump| of one eigenvalue and the inverse of its nearest-neighbour distance."""
    jumps = np.abs(jump_statistics(record)[:, index])
    inv_d = 1.0 / nearest_neighbour_distance(record.eigenvalues[:-1])[:, index]
    return float(np.corrcoef(jumps, inv_d)[0, 1])


def run_dyson_trajectory(initial, params: OUParams, n_steps: int, rng: np.random.Generator | None = None) -> TrajectoryRecord:
    """Integrate one Dyson trajectory, recording every step; degenerate starts are jittered by 1e-6."""
    rng = rng_stream(params.seed, 0) if rng is None else rng
    lam = jitter_degenerate(initial)
    path = np.empty((n_steps + 1, len(lam)))
    path[0] = lam
    for k in range(n_steps):
        lam = dyson_step(lam, params, rng)
        path[k + 1] = lam
    times = params.dt * np.arange(n_steps + 1)
    return TrajectoryRecord(times, path)


def track(prev: np.ndarray, new: np.ndarray) -> tuple[np.ndarray, bool]:
    """Greedy nearest-neighbour matching of ``new`` onto ``prev``, ties broken by index order.

    Returns the permutation p (new[p] lines up with prev) and an ambiguity
    flag raised when some eigenvalue moved more than half of the smallest gap.
    """
    n = len(prev)
    free = list(range(n))
    perm = np.empty(n, dtype=int)
    for i in range(n):
        j = min(free, key=lambda k: (abs(new[k] - prev[i]), k))
        perm[i] = j
        free.remove(j)
    moved = np.abs(new[perm] - prev).max()
    gap = nearest_neighbour_distance(new).min() if n > 1 else np.inf
    return perm, bool(moved > 0.5 * gap)


def _track_pairs(prev: np.ndarray, vals: np.ndarray, right: np.ndarray):
    # greedy rule for N = 2: eigenvalue 1 takes its nearest candidate
    d0 = np.abs(vals[:, 0] - prev[:, 0])
    d1 = np.abs(vals[:, 1] - prev[:, 0])
    flip = d1 < d0
    vals = np.where(flip[:, None], vals[:, ::-1], vals)
    right = np.where(flip[:, None, None], right[:, :, ::-1], right)
    moved = np.maximum(np.abs(vals[:, 0] - prev[:, 0]), np.abs(vals[:, 1] - prev[:, 1]))
    ambiguous = moved > 0.5 * np.abs(vals[:, 0] - vals[:, 1])
    return vals, right, ambiguous


@dataclass
class TwoByTwoEnsemble:
    times: np.ndarray
    eigenvalues: np.ndarray  # (runs, K+1, 2)
    overlap: np.ndarray  # (runs, K+1)
    ambiguous: np.ndarray  # (runs, K)

    def record(self, run: int) -> TrajectoryRecord:
        return TrajectoryRecord(self.times, self.eigenvalues[run], self.overlap[run], self.ambiguous[run])

    @property
    def distance(self) -> np.ndarray:
        return np.abs(self.eigenvalues[..., 0] - self.eigenvalues[..., 1])


def run_two_by_two_ensemble(
    n_runs: int,
    params: OUParams,
    initial=(0.3, -0.3),
    duration: float = 0.2,
    noise_scale: float = 1.0,
    first_stream: int = 0,
) -> TwoByTwoEnsemble:
    """Ginibre N = 2 runs from diag(initial); run r uses RNG stream first_stream + r."""
    if params.n != 2:
        raise ContractError("the two-by-two experiment needs n = 2")
    n_steps = int(round(duration / params.dt))
    noise = np.stack([ginibre_noise(rng_stream(params.seed, first_stream + r), (n_steps,), 2) for r in range(n_runs)])
    x0 = np.diag(np.asarray(initial, dtype=np.complex128))
    state = DiffusionState(np.broadcast_to(x0, (n_runs, 2, 2)).copy(), 0.0, params, "ginibre")

    vals = np.empty((n_runs, n_steps + 1, 2), dtype=np.complex128)
    o11 = np.empty((n_runs, n_steps + 1))
    amb = np.zeros((n_runs, n_steps), dtype=bool)
    prev = np.broadcast_to(np.asarray(initial, dtype=np.complex128), (n_runs, 2))
    for k in range(n_steps + 1):
        if k > 0:
            state = step_ginibre(state, None, noise_scale, noise=noise[:, k - 1])
        w, right = np.linalg.eig(state.matrix)
        w, right, flag = _track_pairs(prev, w, right)
        if k > 0:
            amb[:, k - 1] = flag
        left = np.linalg.inv(right)
        vals[:, k] = w
        o11[:, k] = np.sum(np.abs(left[:, 0, :]) ** 2, axis=-1) * np.sum(np.abs(right[:, :, 0]) ** 2, axis=-1)
        prev = w
    times = params.dt * np.arange(n_steps + 1)
    return TwoByTwoEnsemble(times, vals, o11, amb)


def run_two_by_two_experiment(
    params: OUParams, initial=(0.3, -0.3), duration: float = 0.2, noise_scale: float = 1.0
) -> TrajectoryRecord:
    """Single N = 2 Ginibre run recording eigenvalues, O_11 and tracking ambiguity."""
    return run_two_by_two_ensemble(1, params, initial, duration, noise_scale).record(0)


@dataclass
class Coincidence:
    fraction: float
    selected: int
    coincident: int


def peak_coincidence(distance: np.ndarray, overlap: np.ndarray, window: int = 5, threshold: float = 0.1) -> Coincidence | None:
    """Fraction of runs (min distance < threshold) whose O_11 maximum lies within ``window`` steps of the distance minimum.

    Returns None when the overlap paths are constant, since their maximum
    is then undefined.
    """
    distance = np.atleast_2d(distance)
    overlap = np.atleast_2d(overlap)
    if np.all(np.ptp(overlap, axis=-1) < 1e-10):
        return None
    sel = distance.min(axis=-1) < threshold
    t_min = distance.argmin(axis=-1)
    t_max = overlap.argmax(axis=-1)
    hit = np.abs(t_min - t_max) <= window
    n_sel = int(sel.sum())
    n_hit = int(hit[sel].sum())
    return Coincidence(n_hit / n_sel if n_sel else float("nan"), n_sel, n_hit)
