"""Empirical statistics for heavy-tailed samples and time series."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InsufficientDataError


# ---------------------------------------------------------------------------
# characteristic functions
# ---------------------------------------------------------------------------


def ecf(samples, k_grid, chunk: int = 1 << 18) -> np.ndarray:
    """Empirical characteristic function (1/N) sum_j exp(i k x_j) on ``k_grid``."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise InsufficientDataError("ecf needs at least one sample")
    k = np.atleast_1d(np.asarray(k_grid, dtype=float))
    re = np.zeros(k.shape)
    im = np.zeros(k.shape)
    for s in range(0, x.size, chunk):
        ph = np.multiply.outer(k, x[s : s + chunk])
        re += np.cos(ph).sum(axis=-1)
        im += np.sin(ph).sum(axis=-1)
    out = (re + 1j * im) / x.size
    return out[0] if np.ndim(k_grid) == 0 else out


def sup_distance(a, b) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


# ---------------------------------------------------------------------------
# codifference and autocodifference
# ---------------------------------------------------------------------------


def _codifference(za, zb):
    # za = exp(i a), zb = exp(i b) for paired samples a, b
    m_diff = np.mean(za * np.conj(zb), axis=-1)
    m_a = np.mean(za, axis=-1)
    m_b = np.mean(np.conj(zb), axis=-1)
    return np.log(m_diff) - np.log(m_a) - np.log(m_b), np.minimum(np.abs(m_a), np.abs(m_b))


@dataclass
class AcdEstimate:
    """ACD per lag with median and quartiles over realizations.

    ``values`` has shape (n_realizations, n_lags); ``q25``/``median``/``q75``
    are complex, built from the quantiles of the real and imaginary parts
    separately.  ``flagged`` marks lags where some realization had a
    characteristic-function denominator below ``min_cf``.
    """

    lags: np.ndarray
    values: np.ndarray
    median: np.ndarray
    q25: np.ndarray
    q75: np.ndarray
    flagged: np.ndarray

    def rows(self, dt: float = 1.0):
        for j, lag in enumerate(self.lags):
            yield (
                lag * dt,
                self.median[j].real,
                self.median[j].imag,
                self.q25[j].real,
                self.q75[j].real,
            )


def _complex_quantiles(values, qs):
    re = np.quantile(values.real, qs, axis=0)
    im = np.quantile(values.imag, qs, axis=0)
    return [r + 1j * i for r, i in zip(re, im)]


def acd_estimate(series, lags, argument: float = 1.0, n_blocks: int = 1, min_cf: float = 1e-3) -> AcdEstimate:
    """Plug-in autocodifference estimate

        ACD(tau) = log E e^{i(y_{t+tau} - y_t)} - log E e^{i y_{t+tau}} - log E e^{-i y_t}

    with sample averages in place of expectations.  ``series`` is one path
    (split into ``n_blocks`` non-overlapping blocks), a 2-D array with one
    realization per row, or a 3-D array (realization, member path, time)
    whose member paths are pooled within each realization.  ``lags`` are
    in samples.
    """
    y = np.asarray(series, dtype=float)
    if y.ndim == 1:
        if n_blocks < 1:
            raise DomainError("n_blocks must be >= 1")
        n = y.size // n_blocks
        y = y[: n * n_blocks].reshape(n_blocks, n)
    if y.ndim == 2:
        y = y[:, None, :]
    if y.ndim != 3:
        raise DomainError("series must be 1-, 2- or 3-dimensional")
    lags = np.atleast_1d(np.asarray(lags, dtype=int))
    if lags.size and (lags.min() < 0 or lags.max() >= y.shape[-1]):
        raise DomainError(f"lags must lie in [0, {y.shape[-1] - 1}]")
    z = np.exp(1j * argument * y)
    R = y.shape[0]
    out = np.empty((R, lags.size), dtype=complex)
    flagged = np.zeros(lags.size, dtype=bool)
    for j, lag in enumerate(lags):
        n = y.shape[-1] - lag
        cd, denom = _codifference(z[:, :, lag:].reshape(R, -1), z[:, :, :n].reshape(R, -1))
        out[:, j] = cd
        flagged[j] = bool(np.any(denom < min_cf))
    q25, med, q75 = _complex_quantiles(out, [0.25, 0.5, 0.75])
    return AcdEstimate(lags=lags, values=out, median=med, q25=q25, q75=q75, flagged=flagged)


def codiff_cosum(first, second, scale: float = 1.0, min_pairs: int = 1000):
    """Codifference and cosum of paired samples at unit argument.

    Both margins are divided by ``scale`` first (the fitted stable scale
    when comparing with the value 2 that CD(Y, Y) takes at unit scale).
    CS(Y_k, Y_l) = CD(Y_k, -Y_l).
    """
    a = np.asarray(first, dtype=float).ravel() / scale
    b = np.asarray(second, dtype=float).ravel() / scale
    if a.size != b.size:
        raise DomainError("paired samples must have equal length")
    if a.size < min_pairs:
        raise InsufficientDataError(f"{a.size} pairs < {min_pairs}")
    za, zb = np.exp(1j * a), np.exp(1j * b)
    cd, _ = _codifference(za, zb)
    cs, _ = _codifference(za, np.conj(zb))
    return complex(cd), complex(cs)


def quartiles(values) -> tuple[float, float, float]:
    q = np.quantile(np.asarray(values, dtype=float), [0.25, 0.5, 0.75])
    return float(q[0]), float(q[1]), float(q[2])


# ---------------------------------------------------------------------------
# histograms
# ---------------------------------------------------------------------------


def heavy_tail_edges(core_lo: float, core_hi: float, n_core: int = 80, reach: float | None = None, n_log: int = 10):
    """Uniform core bins plus ``n_log`` logarithmic bins per side out to ``reach``.

    Mass beyond the outermost edges lands in the open overflow bins kept
    by ``Histogram``.
    """
    if not core_hi > core_lo:
        raise DomainError("core range must be increasing")
    core = np.linspace(core_lo, core_hi, n_core + 1)
    if reach is None or n_log == 0:
        return core
    width = core_hi - core_lo
    center = 0.5 * (core_lo + core_hi)
    reach = max(reach, 2.0 * width)
    half = 0.5 * width
    outer = center + np.geomspace(half, reach, n_log + 1)[1:]
    inner = center - np.geomspace(half, reach, n_log + 1)[1:]
    return np.concatenate([inner[::-1], core, outer])


@dataclass
class Histogram:
    """Counts on ``edges`` plus open underflow and overflow bins."""

    edges: np.ndarray
    counts: np.ndarray
    underflow: int
    overflow: int

    @classmethod
    def from_samples(cls, samples, edges) -> "Histogram":
        x = np.asarray(samples, dtype=float).ravel()
        x = x[np.isfinite(x)]
        edges = np.asarray(edges, dtype=float)
        counts, _ = np.histogram(x, bins=edges)
        return cls(
            edges=edges,
            counts=counts,
            underflow=int(np.count_nonzero(x < edges[0])),
            overflow=int(np.count_nonzero(x > edges[-1])),
        )

    @property
    def total(self) -> int:
        return int(self.counts.sum()) + self.underflow + self.overflow

    @property
    def masses(self) -> np.ndarray:
        """(underflow, bins..., overflow) as probabilities."""
        m = np.concatenate([[self.underflow], self.counts, [self.overflow]]).astype(float)
        return m / self.total

    @property
    def density(self) -> np.ndarray:
        return self.counts / (self.total * np.diff(self.edges))

    def rows(self):
        for lo, hi, d in zip(self.edges[:-1], self.edges[1:], self.density):
            yield lo, hi, d


def l1_distance(masses_a, masses_b) -> float:
    """Sum of absolute differences of bin probabilities (the L1 distance of the
    piecewise-constant densities on shared bins, overflow bins included)."""
    return float(np.sum(np.abs(np.asarray(masses_a) - np.asarray(masses_b))))


def analytic_masses(cdf, edges) -> np.ndarray:
    """Bin probabilities (underflow, bins..., overflow) from a distribution function."""
    c = np.asarray(cdf(np.asarray(edges, dtype=float)), dtype=float)
    return np.concatenate([[c[0]], np.diff(c), [1.0 - c[-1]]])


# ---------------------------------------------------------------------------
# tails
# ---------------------------------------------------------------------------


@dataclass
class TailFit:
    exponent: float
    exponent_stderr: float
    skew_ratio: float
    skew_stderr: float
    fit_range: tuple[float, float]
    n_tail: int


def tail_fit(samples, quantile: float = 0.99, n_bins: int = 16, min_tail: int = 500) -> TailFit:
    """Power-law fit to both tails of a heavy-tailed sample.

    Tail region: |x| beyond the ``quantile`` of |x|.  Log-spaced bins on
    that region give the density of |x|; its log-log slope (weighted least
    squares, Poisson weights) estimates the density exponent.  The skew
    ratio averages (u(r) - u(-r)) / (u(r) + u(-r)) over the same bins,
    weighted by counts.
    """
    x = np.asarray(samples, dtype=float).ravel()
    x = x[np.isfinite(x)]
    ax = np.abs(x)
    a = float(np.quantile(ax, quantile))
    tail = ax > a
    n_tail = int(np.count_nonzero(tail))
    if n_tail < min_tail:
        raise InsufficientDataError(f"only {n_tail} tail samples beyond |x| > {a:g} (need {min_tail})")
    top = float(ax.max())
    edges = np.geomspace(a, top * (1.0 + 1e-12), n_bins + 1)
    pos, _ = np.histogram(x[tail & (x > 0)], bins=edges)
    neg, _ = np.histogram(-x[tail & (x < 0)], bins=edges)
    both = pos + neg
    use = both > 0
    width = np.diff(edges)
    centers = np.sqrt(edges[:-1] * edges[1:])
    logr = np.log(centers[use])
    logu = np.log(both[use] / (x.size * width[use]))
    w = both[use].astype(float)
    design = np.column_stack([np.ones_like(logr), logr])
    wd = design * w[:, None]
    cov = np.linalg.inv(design.T @ wd)
    coef = cov @ (wd.T @ logu)
    slope_se = float(np.sqrt(cov[1, 1]))
    ratio = (pos[use] - neg[use]) / both[use]
    skew = float(np.sum(w * ratio) / np.sum(w))
    skew_se = float(np.sqrt(max(1.0 - skew * skew, 0.0) / w.sum()))
    return TailFit(
        exponent=float(coef[1]),
        exponent_stderr=slope_se,
        skew_ratio=skew,
        skew_stderr=skew_se,
        fit_range=(a, top),
        n_tail=n_tail,
    )


def modes(samples, lo: float, hi: float, n_bins: int = 100, window: int = 5, min_height: float = 0.2) -> np.ndarray:
    """Locations of the local maxima of a smoothed histogram on [lo, hi].

    The density on ``n_bins`` uniform bins is smoothed with a centred
    moving average of ``window`` bins; maxima lower than ``min_height``
    times the highest one are dropped.
    """
    x = np.asarray(samples, dtype=float).ravel()
    counts, edges = np.histogram(x[np.isfinite(x)], bins=n_bins, range=(lo, hi))
    if counts.sum() == 0:
        raise InsufficientDataError(f"no samples in [{lo}, {hi}]")
    smooth = np.convolve(counts, np.ones(window) / window, mode="same")
    centers = 0.5 * (edges[:-1] + edges[1:])
    inner = (smooth[1:-1] > smooth[:-2]) & (smooth[1:-1] >= smooth[2:])
    peaks = np.flatnonzero(inner) + 1
    peaks = peaks[smooth[peaks] >= min_height * smooth.max()]
    return centers[peaks]
