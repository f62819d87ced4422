"""The linear CAM-noise process

    dy = (L + E^2/2) y dt + (E y + g) dW1 + b dW2,

its stationary law, the alpha-stable parameters its sums are attracted to,
and a weak order-2.0 integrator.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate

from . import special
from .errors import DomainError, NumericalError, RegimeError
from .stable import StableParams
from .trajectory import Trajectory

#: number of steps whose Gaussian increments are drawn in one block
RNG_BLOCK = 256


@dataclass(frozen=True)
class CamParams:
    """Coefficients (L, E, g, b) of the CAM SDE.

    E and b must be positive: flipping the sign of b, or of (E, g)
    together, only relabels the driving Wiener processes.
    """

    L: float
    E: float
    g: float
    b: float

    def __post_init__(self):
        for name in ("L", "E", "g", "b"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"CAM coefficient {name} must be finite")
        if not self.L < 0.0:
            raise DomainError(f"drift rate L={self.L} must be negative")
        if not self.E > 0.0:
            raise DomainError(f"multiplicative amplitude E={self.E} must be positive (use (-E, -g))")
        if not self.b > 0.0:
            raise DomainError(f"additive amplitude b={self.b} must be positive")

    @classmethod
    def from_alpha(cls, alpha_star: float, L: float, g: float, b: float) -> "CamParams":
        """CAM parameters with E chosen so that alpha* = -2L/E^2."""
        return cls(L=L, E=math.sqrt(-2.0 * L / alpha_star), g=g, b=b)

    @property
    def nu(self) -> float:
        return -(self.L / self.E**2 + 0.5)

    @property
    def L_tilde(self) -> float:
        """Ito drift rate L + E^2/2 (equal to -nu E^2)."""
        return self.L + 0.5 * self.E**2

    @property
    def relaxation_rate(self) -> float:
        """nu E^2 = -(L + E^2/2), the inverse e-folding time of the mean."""
        return -self.L_tilde

    @property
    def infinite_variance(self) -> bool:
        return 0.0 < self.nu <= 0.5

    def rescaled(self, eps: float) -> "CamParams":
        """Coefficients of y_{t/eps}: drift / eps, noise / sqrt(eps)."""
        if not eps > 0.0:
            raise DomainError(f"time-scale ratio eps={eps} must be positive")
        r = math.sqrt(eps)
        return CamParams(self.L / eps, self.E / r, self.g / r, self.b / r)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class CamDerived:
    """Parameters of the stable law attracting sums of CAM variables."""

    nu: float
    alpha_star: float
    beta_star: float
    sigma_star: float
    gamma_star: float
    normalization: float
    h_plus: float
    h_minus: float

    @property
    def stable(self) -> StableParams:
        return StableParams(self.alpha_star, self.beta_star, self.sigma_star)


def _require_stationary_mean(p: CamParams) -> float:
    nu = p.nu
    if nu <= 0.0:
        raise RegimeError(f"nu={nu:.6g} <= 0: no stationary mean (need -L > E^2/2)")
    return nu


def normalization_constant(p: CamParams, method: str = "closed") -> float:
    """Normalization N of the stationary density.

    ``method="closed"`` uses the complex-Gamma form
    2 pi (2b)^-(2nu+1) Gamma(2nu+1) / (E |Gamma(nu+1 + i g nu / b)|^2);
    ``method="quadrature"`` integrates
    exp(2 g nu xi / b) cos(xi)^(2 nu) over (-pi/2, pi/2) directly.
    """
    nu = _require_stationary_mean(p)
    if method == "closed":
        lg = special.loggamma(2.0 * nu + 1.0).real
        abs2 = special.abs_gamma_squared(nu + 1.0, p.g * nu / p.b)
        return 2.0 * math.pi * (2.0 * p.b) ** (-(2.0 * nu + 1.0)) * math.exp(lg) / (p.E * abs2)
    if method == "quadrature":
        c = 2.0 * p.g * nu / p.b
        val, err = integrate.quad(
            lambda s: math.exp(c * s) * math.cos(s) ** (2.0 * nu),
            -0.5 * math.pi,
            0.5 * math.pi,
            epsabs=0.0,
            epsrel=1e-13,
            limit=200,
        )
        if not math.isfinite(val) or err > 1e-10 * abs(val):
            raise NumericalError(f"normalization quadrature failed (estimate {val}, error {err})")
        return val / (p.b ** (2.0 * nu + 1.0) * p.E)
    raise ValueError(f"unknown method {method!r}")


def tail_weights(p: CamParams) -> tuple[float, float]:
    """(h(+1), h(-1)): p_s(y) ~ h(sgn y) |y|^-(2 nu + 2) for large |y|."""
    nu = _require_stationary_mean(p)
    norm = normalization_constant(p)
    base = norm * p.E ** (2.0 * (nu + 1.0))
    a = math.pi * p.g * nu / p.b
    return math.exp(a) / base, math.exp(-a) / base


def derive(p: CamParams) -> CamDerived:
    """alpha*, beta*, sigma*, gamma* for CAM parameters in the infinite-variance regime."""
    nu = _require_stationary_mean(p)
    if nu >= 0.5:
        raise RegimeError(
            f"nu={nu:.6g} >= 1/2: Gaussian-attraction regime (alpha* = 2), unsupported"
        )
    alpha = 2.0 * nu + 1.0
    beta = math.tanh(math.pi * p.g * nu / p.b)
    norm = normalization_constant(p)
    h_plus, h_minus = tail_weights(p)
    # Gamma(1 - a) < 0 and cos(pi a / 2) < 0 for a in (1, 2)
    g1 = special.gamma_real(1.0 - alpha)
    base = (h_plus + h_minus) * g1 * math.cos(0.5 * math.pi * alpha) / alpha
    if not base > 0.0:
        raise NumericalError(f"sigma*^alpha* = {base} is not positive")
    return CamDerived(
        nu=nu,
        alpha_star=alpha,
        beta_star=beta,
        sigma_star=base ** (1.0 / alpha),
        gamma_star=1.0 - 1.0 / alpha,
        normalization=norm,
        h_plus=h_plus,
        h_minus=h_minus,
    )


def stationary_pdf(p: CamParams, y, normalization: float | None = None):
    """Stationary density p_s(y)."""
    nu = _require_stationary_mean(p)
    norm = normalization_constant(p) if normalization is None else normalization
    u = p.E * np.asarray(y, dtype=float) + p.g
    logp = -(nu + 1.0) * np.log(u * u + p.b * p.b) + (2.0 * p.g * nu / p.b) * np.arctan(u / p.b)
    return np.exp(logp) / norm


def stationary_cdf(p: CamParams, y):
    """Stationary distribution function, by quadrature in xi = arctan((E y + g)/b)."""
    nu = _require_stationary_mean(p)
    c = 2.0 * p.g * nu / p.b
    total = normalization_constant(p) * p.b ** (2.0 * nu + 1.0) * p.E

    def f(s):
        return math.exp(c * s) * math.cos(s) ** (2.0 * nu)

    ys = np.atleast_1d(np.asarray(y, dtype=float))
    xi = np.arctan((p.E * ys + p.g) / p.b)
    out = np.array(
        [integrate.quad(f, -0.5 * math.pi, s, epsabs=0.0, epsrel=1e-12, limit=200)[0] for s in xi.ravel()]
    ).reshape(xi.shape)
    out = out / total
    return out[0] if np.ndim(y) == 0 else out


def sample_stationary(p: CamParams, rng: np.random.Generator, size: int) -> np.ndarray:
    """Exact draws from p_s.

    In xi = arctan((E y + g)/b) the density is proportional to
    exp(c xi) cos(xi)^(2 nu) on (-pi/2, pi/2) with c = 2 g nu / b: propose
    from the exponential factor and accept with probability cos(xi)^(2 nu).
    """
    nu = _require_stationary_mean(p)
    c = 2.0 * p.g * nu / p.b
    half = 0.5 * math.pi
    out = np.empty(size)
    filled = 0
    while filled < size:
        n = max(64, int(1.5 * (size - filled)) + 16)
        u = rng.random(n)
        if abs(c) < 1e-12:
            xi = (u - 0.5) * math.pi
        else:
            # inverse CDF of exp(c xi) on (-pi/2, pi/2), written to avoid overflow
            lo, hi = -c * half, c * half
            top = max(lo, hi)
            xi = (top + np.log(np.exp(lo - top) + u * (np.exp(hi - top) - np.exp(lo - top)))) / c
        keep = xi[rng.random(n) < np.cos(xi) ** (2.0 * nu)]
        keep = keep[np.abs(keep) < half]
        take = min(keep.size, size - filled)
        out[filled : filled + take] = keep[:take]
        filled += take
    return (p.b * np.tan(out) - p.g) / p.E


def weak2_step(p: CamParams, y, dt: float, dW1, dW2):
    """One step of the explicit weak order-2.0 scheme.

    Stages: Upsilon = y + Lt y dt + (E y + g) dW1 + b dW2 and
    Upsilon^(+/-) = y + Lt y dt +/- (E y + g) sqrt(dt) + b dW2.
    """
    Lt = p.L_tilde
    sq = math.sqrt(dt)
    pred = y + Lt * y * dt + p.b * dW2
    s = p.E * y + p.g
    ups = pred + s * dW1
    ups_p = pred + s * sq
    ups_m = pred - s * sq
    return (
        y
        + 0.5 * Lt * (y + ups) * dt
        + 0.25 * (p.E * ups_p + 2.0 * p.E * y + p.E * ups_m + 4.0 * p.g) * dW1
        + 0.25 * (p.E * ups_p - p.E * ups_m) * (dW1 * dW1 - dt) / sq
        + p.b * dW2
    )


def advance(
    p: CamParams,
    y,
    dt: float,
    n_steps: int,
    rng: np.random.Generator,
    record_every: int | None = None,
    integrate_path: bool = False,
):
    """Advance a state (scalar or array of independent paths) by ``n_steps``.

    Returns ``(y_final, records, integral)``; ``records`` has one row per
    recorded sample (including the initial state) when ``record_every`` is
    set, and ``integral`` is the trapezoid-rule integral of the path over
    the whole interval when ``integrate_path`` is set.
    """
    y = np.array(y, dtype=float, copy=True)
    shape = y.shape
    y = y.reshape(-1)
    sq = math.sqrt(dt)
    records = [y.copy()] if record_every else None
    acc = 0.5 * y if integrate_path else None
    done = 0
    while done < n_steps:
        block = min(RNG_BLOCK, n_steps - done)
        z = rng.standard_normal((block, 2, y.size))
        z *= sq
        for j in range(block):
            y = weak2_step(p, y, dt, z[j, 0], z[j, 1])
            if integrate_path:
                acc += y
            if record_every and (done + j + 1) % record_every == 0:
                records.append(y.copy())
        done += block
    integral = None
    if integrate_path:
        integral = (dt * (acc - 0.5 * y)).reshape(shape)
    if records is not None:
        records = np.stack(records, axis=-1).reshape(shape + (len(records),))
    return y.reshape(shape), records, integral


def burn_in_time(p: CamParams, efoldings: float = 20.0) -> float:
    """Burn-in duration: ``efoldings`` e-folding times 1 / (nu E^2)."""
    return efoldings / p.relaxation_rate


def simulate(
    p: CamParams,
    y0,
    dt: float,
    n_steps: int,
    rng: np.random.Generator,
    record_every: int = 1,
    seed: int | None = None,
) -> Trajectory:
    """Weak order-2.0 path(s) of the CAM SDE with ``n_steps + 1`` time points.

    ``y0`` may be an array of initial states, giving an ensemble
    trajectory of shape (n_paths, n_samples).  Each step consumes two
    independent N(0, dt) increments per path.
    """
    if not dt > 0.0:
        raise DomainError(f"time step dt={dt} must be positive")
    if n_steps < 0:
        raise DomainError("n_steps must be non-negative")
    _require_stationary_mean(p)
    _, rec, _ = advance(p, y0, dt, n_steps, rng, record_every=record_every)
    return Trajectory(
        t0=0.0,
        dt=dt * record_every,
        values=rec,
        seed=seed,
        params={"cam": p.as_dict(), "dt": dt, "scheme": "weak-2.0"},
        metadata={"warnings": []},
    )


def check_fast_step(eps: float, dt: float) -> str | None:
    """Warning text when dt does not resolve the fast scale (dt > eps/10)."""
    if dt > eps / 10.0 * (1.0 + 1e-12):
        return f"dt={dt:g} exceeds eps/10={eps / 10.0:g}: fast dynamics under-resolved"
    return None


def simulate_fast(
    p: CamParams,
    eps: float,
    y0,
    dt: float,
    n_steps: int,
    rng: np.random.Generator,
    record_every: int = 1,
    seed: int | None = None,
) -> Trajectory:
    """Path of y_{t/eps} on the slow clock, step ``dt`` (recommended dt <= eps/10)."""
    traj = simulate(p.rescaled(eps), y0, dt, n_steps, rng, record_every=record_every, seed=seed)
    traj.params = {"cam": p.as_dict(), "eps": eps, "dt": dt, "scheme": "weak-2.0"}
    msg = check_fast_step(eps, dt)
    if msg:
        traj.warnings.append(msg)
    return traj
