"""Monte Carlo estimators with leave-one-out jackknife errors."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import ContractError, EnsembleBatch, QuaternionArgument, block_trace

__all__ = [
    "Estimate",
    "GeneralizedResolvent",
    "SpectralHistogram",
    "CorrelatorField",
    "EdgeProfile",
    "jackknife",
    "jackknife_mean",
    "resolvent_mc",
    "density_real",
    "density_complex",
    "density_from_gauss_law",
    "generalized_resolvent_mc",
    "acp_mc",
    "qdet_mc",
    "correlator_estimate",
    "edge_profile",
    "equal_area_edges",
    "DEFAULT_REGULATOR",
]

# |w| used for generalized-resolvent measurements; see README for why it is not smaller.
DEFAULT_REGULATOR = 0.1
MIN_EDGE_POINTS = 500


@dataclass
class Estimate:
    """A Monte Carlo mean (scalar or array) with its jackknife standard error.

    For complex values ``se`` combines the real and imaginary errors in
    quadrature, so |value - truth| <= k * se is the natural k-sigma test.
    """

    value: np.ndarray | complex | float
    se: np.ndarray | float
    n: int
    skipped: int = 0
    se_re: np.ndarray | float | None = None
    se_im: np.ndarray | float | None = None

    def deviation(self, truth) -> np.ndarray | float:
        """|value - truth| in units of se."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.abs(np.asarray(self.value) - truth) / np.asarray(self.se)


def _jk_se(theta: np.ndarray) -> np.ndarray:
    s = theta.shape[0]
    dev = theta - theta.mean(axis=0)
    return np.sqrt((s - 1) / s * np.sum(dev * dev, axis=0))


def jackknife(samples, fn=None) -> Estimate:
    """Leave-one-out jackknife of fn(mean of samples) along axis 0.

    With fn = None the estimate is the plain mean. ``fn`` must act on the
    mean array (shape samples.shape[1:]) and may be nonlinear.
    """
    x = np.asarray(samples)
    s = x.shape[0]
    if s < 2:
        raise ContractError("jackknife needs at least two samples")
    total = x.sum(axis=0)
    loo = (total[None] - x) / (s - 1)
    full = total / s
    if fn is not None:
        full = fn(full)
        loo = np.stack([fn(v) for v in loo])
    if np.iscomplexobj(loo):
        se_re, se_im = _jk_se(loo.real), _jk_se(loo.imag)
        se = np.sqrt(se_re**2 + se_im**2)
    else:
        se_re, se_im = _jk_se(loo), np.zeros_like(full, dtype=float)
        se = se_re
    unwrap = (lambda v: v[()] if np.ndim(v) == 0 else v)
    return Estimate(unwrap(full), unwrap(se), s, 0, unwrap(se_re), unwrap(se_im))


def jackknife_mean(samples) -> Estimate:
    return jackknife(samples)


def _matrices(batch) -> np.ndarray:
    if isinstance(batch, EnsembleBatch):
        return batch.samples
    m = np.asarray(batch, dtype=np.complex128)
    return m[None] if m.ndim == 2 else m


def _eigenvalues(batch, hermitian: bool) -> np.ndarray:
    """(S, N) eigenvalues from a batch or an (S, N, N) stack; 1-d or 2-d arrays are taken as eigenvalues already."""
    m = batch.samples if isinstance(batch, EnsembleBatch) else np.asarray(batch)
    if m.ndim <= 2:
        return np.atleast_2d(m)
    if m.shape[0] == 0:
        raise ContractError("empty batch")
    return np.linalg.eigvalsh(m) if hermitian else np.linalg.eigvals(m)


# -- resolvent -------------------------------------------------------------------


def _batched_inverse(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of each matrix; rows that fail are returned as NaN and flagged."""
    try:
        return np.linalg.inv(m), np.zeros(len(m), dtype=bool)
    except np.linalg.LinAlgError:
        out = np.full_like(m, np.nan)
        bad = np.zeros(len(m), dtype=bool)
        for i, mi in enumerate(m):
            try:
                out[i] = np.linalg.inv(mi)
            except np.linalg.LinAlgError:
                bad[i] = True
        return out, bad


def _finish(per_sample: np.ndarray, bad: np.ndarray, what: str) -> Estimate:
    if bad.any():
        warnings.warn(f"{what}: skipped {int(bad.sum())} singular samples", RuntimeWarning, stacklevel=3)
    est = jackknife(per_sample[~bad])
    est.skipped = int(bad.sum())
    return est


def resolvent_mc(z: complex, batch) -> Estimate:
    """(1/N) <Tr (z - H)^-1> over the batch."""
    h = _matrices(batch)
    n = h.shape[-1]
    inv, bad = _batched_inverse(complex(z) * np.eye(n) - h)
    g = np.trace(inv, axis1=-2, axis2=-1) / n
    bad |= ~np.isfinite(g)
    return _finish(g, bad, "resolvent_mc")


# -- densities -------------------------------------------------------------------


@dataclass
class SpectralHistogram:
    """Normalized spectral histogram.

    ``domain`` is "real" (edges on the line), "radial" (edges in |z|) or
    "grid" (edges along x, with ``edges_y`` along y). ``density`` integrates
    to one over the binned region; ``outside`` counts points beyond it.
    """

    edges: np.ndarray
    counts: np.ndarray
    density: np.ndarray
    total: int
    outside: int
    domain: str = "real"
    edges_y: np.ndarray | None = None

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def measures(self) -> np.ndarray:
        """Length or area of each bin."""
        if self.domain == "real":
            return np.diff(self.edges)
        if self.domain == "radial":
            return np.pi * np.diff(self.edges**2)
        return np.outer(np.diff(self.edges_y), np.diff(self.edges))

    def integral(self) -> float:
        return float(np.sum(self.density * self.measures))


def _normalize(counts, measures):
    inside = counts.sum()
    if inside == 0:
        return np.zeros_like(measures, dtype=float)
    return counts / (inside * measures)


def density_real(batch, bins=40, range=(-2.2, 2.2)) -> SpectralHistogram:
    """Eigenvalue histogram of hermitian samples; ``batch`` may also be an (S, N) eigenvalue array."""
    lam = _eigenvalues(batch, hermitian=True).ravel().real
    if lam.size == 0:
        raise ContractError("empty batch")
    edges = np.linspace(range[0], range[1], bins + 1) if np.isscalar(bins) else np.asarray(bins, dtype=float)
    counts, _ = np.histogram(lam, edges)
    hist = SpectralHistogram(edges, counts, _normalize(counts, np.diff(edges)), lam.size, int(lam.size - counts.sum()))
    return hist


def equal_area_edges(radius: float, n_bins: int) -> np.ndarray:
    """Radial edges splitting the disc of the given radius into bins of equal area."""
    return radius * np.sqrt(np.linspace(0.0, 1.0, n_bins + 1))


def density_complex(batch, edges=None, grid: tuple | None = None) -> SpectralHistogram:
    """Radially binned eigenvalue density over the complex plane.

    ``edges`` are radial bin edges in |z|. Passing ``grid=(x_edges, y_edges)``
    switches to full two-dimensional binning instead.
    """
    lam = _eigenvalues(batch, hermitian=False).ravel()
    if lam.size == 0:
        raise ContractError("empty batch")
    if grid is not None:
        ex, ey = (np.asarray(e, dtype=float) for e in grid)
        counts, _, _ = np.histogram2d(lam.imag, lam.real, bins=(ey, ex))
        hist = SpectralHistogram(ex, counts, None, lam.size, int(lam.size - counts.sum()), "grid", ey)
    else:
        edges = equal_area_edges(1.0, 10) if edges is None else np.asarray(edges, dtype=float)
        counts, _ = np.histogram(np.abs(lam), edges)
        hist = SpectralHistogram(edges, counts, None, lam.size, int(lam.size - counts.sum()), "radial")
    hist.density = _normalize(hist.counts, hist.measures)
    return hist


def density_from_gauss_law(g11_field, spacing: float) -> np.ndarray:
    """rho = (1/pi) d_zbar G on a uniform grid; axis 0 runs along y, axis 1 along x."""
    g = np.asarray(g11_field, dtype=np.complex128)
    if g.ndim != 2 or min(g.shape) < 2:
        raise ContractError("g11_field must be a 2-d grid with at least two points per axis")
    if spacing > 0.1 + 1e-12:
        warnings.warn(f"grid spacing {spacing} > 0.1 is too coarse for the Gauss-law derivative", RuntimeWarning, stacklevel=2)
    d_y, d_x = np.gradient(g, spacing, edge_order=1)
    return (0.5 * (d_x + 1j * d_y)).real / np.pi


# -- generalized resolvent -----------------------------------------------------------


@dataclass
class GeneralizedResolvent:
    """Averaged 2x2 block-trace resolvent with per-entry jackknife errors."""

    g11: complex
    g1bar1bar: complex
    g11bar: complex
    g1bar1: complex
    se: np.ndarray = field(default_factory=lambda: np.zeros((2, 2)))
    per_sample: np.ndarray | None = None
    skipped: int = 0

    def matrix(self) -> np.ndarray:
        return np.array([[self.g11, self.g11bar], [self.g1bar1, self.g1bar1bar]])

    def overlap_density(self) -> Estimate:
        """-(1/pi) G_11bar G_1bar1 with a jackknife error over the stored samples."""
        if self.per_sample is None:
            v = -(self.g11bar * self.g1bar1) / np.pi
            return Estimate(v, np.nan, 0)
        off = self.per_sample[:, [0, 1], [1, 0]]
        return jackknife(off, lambda m: -(m[0] * m[1]) / np.pi)


def _embedded(q: QuaternionArgument, x: np.ndarray) -> np.ndarray:
    n = x.shape[-1]
    z, w = complex(q.z), complex(q.w)
    eye = np.eye(n)
    top = np.concatenate([z * eye - x, np.broadcast_to(-w.conjugate() * eye, x.shape)], axis=-1)
    bot = np.concatenate([np.broadcast_to(w * eye, x.shape), z.conjugate() * eye - np.swapaxes(x, -1, -2).conj()], axis=-1)
    return np.concatenate([top, bot], axis=-2)


def generalized_resolvent_mc(q: QuaternionArgument, batch) -> GeneralizedResolvent:
    """(1/N) <bTr (Q - diag(X, X^dagger))^-1> over the batch."""
    if abs(complex(q.w)) == 0:
        raise ContractError("generalized resolvent needs |w| > 0")
    x = _matrices(batch)
    n = x.shape[-1]
    inv, bad = _batched_inverse(_embedded(q, x))
    g = block_trace(inv, n) / n
    bad |= ~np.all(np.isfinite(g), axis=(-2, -1))
    if bad.any():
        warnings.warn(f"generalized_resolvent_mc: skipped {int(bad.sum())} samples", RuntimeWarning, stacklevel=2)
    g = g[~bad]
    # the lower-right block of the inverse is the adjoint of the upper-left one
    diag = 0.5 * (g[:, 0, 0] + g[:, 1, 1].conj())
    g[:, 0, 0], g[:, 1, 1] = diag, diag.conj()
    est = jackknife(g)
    return GeneralizedResolvent(
        g11=complex(est.value[0, 0]),
        g1bar1bar=complex(est.value[1, 1]),
        g11bar=complex(est.value[0, 1]),
        g1bar1=complex(est.value[1, 0]),
        se=np.asarray(est.se),
        per_sample=g,
        skipped=int(bad.sum()),
    )


# -- determinants ------------------------------------------------------------------


def _scaled_mean(sign: np.ndarray, logabs: np.ndarray) -> Estimate:
    """Jackknife mean of sign * exp(logabs) along axis 0 without overflowing."""
    ok = np.isfinite(logabs) | (sign == 0)
    logabs = np.where(sign == 0, -np.inf, logabs)
    top = np.max(np.where(ok, logabs, -np.inf), axis=0)
    top = np.where(np.isfinite(top), top, 0.0)
    if np.any(top > 700):
        raise OverflowError("determinant average is not representable in double precision")
    v = sign * np.exp(logabs - top)
    est = jackknife(v)
    scale = np.exp(top)
    est.value = est.value * scale
    est.se, est.se_re, est.se_im = est.se * scale, est.se_re * scale, est.se_im * scale
    for k in ("value", "se", "se_re", "se_im"):
        val = getattr(est, k)
        if np.ndim(val) == 0:
            setattr(est, k, np.asarray(val)[()])
    return est


def acp_mc(z, batch) -> Estimate:
    """<det(z - H)> over the batch; ``z`` may be a scalar or an array of probes."""
    h = _matrices(batch)
    if len(h) == 0:
        raise ContractError("empty batch")
    n = h.shape[-1]
    zs = np.atleast_1d(np.asarray(z, dtype=np.complex128))
    signs = np.empty((len(h), zs.size), dtype=np.complex128)
    logs = np.empty((len(h), zs.size))
    eye = np.eye(n)
    for k, zk in enumerate(zs.ravel()):
        signs[:, k], logs[:, k] = np.linalg.slogdet(zk * eye - h)
    est = _scaled_mean(signs, logs)
    if np.ndim(z) == 0:
        for k in ("value", "se", "se_re", "se_im"):
            setattr(est, k, np.asarray(getattr(est, k)).ravel()[0])
    else:
        for k in ("value", "se", "se_re", "se_im"):
            setattr(est, k, np.asarray(getattr(est, k)).reshape(zs.shape))
    return est


def qdet_per_sample(q: QuaternionArgument, batch) -> tuple[np.ndarray, np.ndarray]:
    signs, logs = np.linalg.slogdet(_embedded(q, _matrices(batch)))
    return signs, logs


def qdet_mc(q: QuaternionArgument, batch) -> Estimate:
    """<det(Q - diag(X, X^dagger))> over the batch, via the 2N x 2N block matrix."""
    x = _matrices(batch)
    if len(x) == 0:
        raise ContractError("empty batch")
    signs, logs = qdet_per_sample(q, x)
    return _scaled_mean(signs, logs)


# -- eigenvector correlator ----------------------------------------------------------


@dataclass
class CorrelatorField:
    """Binned estimate of (1/N^2) <sum_a O_aa delta(z - z_a)>."""

    hist_domain: str
    edges: np.ndarray
    value: np.ndarray
    se: np.ndarray
    counts: np.ndarray
    n_samples: int
    total: float  # (1/N^2) <sum_a O_aa> including points outside the bins
    edges_y: np.ndarray | None = None

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def measures(self) -> np.ndarray:
        if self.hist_domain == "radial":
            return np.pi * np.diff(self.edges**2)
        return np.outer(np.diff(self.edges_y), np.diff(self.edges))

    def integral(self) -> float:
        return float(np.sum(self.value * self.measures))


def correlator_estimate(eigenvalues, o_diag, edges=None, grid: tuple | None = None) -> CorrelatorField:
    """Flat-bin estimate of the overlap correlator from (S, N) eigenvalues and diagonal overlaps.

    Per sample the bin value is sum O_aa / (N^2 * bin area); the reported
    value is the sample mean with its jackknife error.
    """
    lam = np.atleast_2d(np.asarray(eigenvalues, dtype=np.complex128))
    o = np.atleast_2d(np.asarray(o_diag, dtype=float))
    if lam.shape != o.shape:
        raise ContractError("eigenvalues and overlaps must have the same shape")
    s, n = lam.shape
    if grid is not None:
        ex, ey = (np.asarray(e, dtype=float) for e in grid)
        ix = np.searchsorted(ex, lam.real, side="right") - 1
        iy = np.searchsorted(ey, lam.imag, side="right") - 1
        inside = (ix >= 0) & (ix < len(ex) - 1) & (iy >= 0) & (iy < len(ey) - 1)
        flat = np.where(inside, iy * (len(ex) - 1) + ix, -1)
        shape = (len(ey) - 1, len(ex) - 1)
        domain = "grid"
        edges = ex
    else:
        edges = equal_area_edges(1.0, 10) if edges is None else np.asarray(edges, dtype=float)
        r = np.abs(lam)
        ib = np.searchsorted(edges, r, side="right") - 1
        # a point exactly on the outer edge belongs to the last bin
        ib = np.where(r == edges[-1], len(edges) - 2, ib)
        inside = (ib >= 0) & (ib < len(edges) - 1)
        flat = np.where(inside, ib, -1)
        shape = (len(edges) - 1,)
        domain = "radial"
        ey = None
    n_bins = int(np.prod(shape))
    per = np.zeros((s, n_bins))
    counts = np.zeros(n_bins, dtype=np.int64)
    for k in range(s):
        sel = flat[k] >= 0
        per[k] = np.bincount(flat[k][sel], weights=o[k][sel], minlength=n_bins)
        counts += np.bincount(flat[k][sel], minlength=n_bins)
    fld = CorrelatorField(domain, edges, np.zeros(shape), np.zeros(shape), counts.reshape(shape), s, 0.0, ey)
    per = per.reshape((s,) + shape) / (n * n * fld.measures)
    if s > 1:
        est = jackknife(per)
        fld.value, fld.se = np.asarray(est.value), np.asarray(est.se)
    else:
        fld.value = per[0]
        fld.se = np.full(shape, np.nan)
    fld.total = float(o.sum(axis=1).mean() / (n * n))
    return fld


# -- edge ------------------------------------------------------------------------------


@dataclass
class EdgeProfile:
    eta_edges: np.ndarray
    density: np.ndarray
    se: np.ndarray
    counts: np.ndarray
    n: int

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.eta_edges[1:] + self.eta_edges[:-1])


def edge_profile(eigenvalues, n: int, window=(-4.0, 4.0), width: float = 0.25) -> EdgeProfile:
    """Density per unit area in the complex plane, binned in eta = (|z| - 1) sqrt(N).

    Each eigenvalue carries weight 1/N so the bulk plateau is 1/pi.
    """
    lam = np.atleast_2d(np.asarray(eigenvalues))
    s = lam.shape[0]
    n_bins = int(round((window[1] - window[0]) / width))
    edges = np.linspace(window[0], window[1], n_bins + 1)
    eta = (np.abs(lam) - 1.0) * np.sqrt(n)
    per = np.stack([np.histogram(e, edges)[0] for e in eta]).astype(float)
    counts = per.sum(axis=0).astype(np.int64)
    if counts.sum() < MIN_EDGE_POINTS:
        warnings.warn(f"only {int(counts.sum())} eigenvalues in the edge window", RuntimeWarning, stacklevel=2)
    radii = 1.0 + edges / np.sqrt(n)
    area = np.pi * np.diff(np.clip(radii, 0.0, None) ** 2)
    per /= n * area
    est = jackknife(per) if s > 1 else Estimate(per[0], np.full(n_bins, np.nan), 1)
    return EdgeProfile(edges, np.asarray(est.value), np.asarray(est.se), counts, n)
