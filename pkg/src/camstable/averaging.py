"""Stochastic-averaging reduction of slow systems forced by fast CAM noise.

Full system:     dx = f1(x) dt + eps^(-rho) f2(x) y_{t/eps} dt
Reduced system:  dX = f1(X) dt + eps^(gamma* - rho) Sigma f2(X) <> dL^(alpha*, beta*)

where <> is the Marcus interpretation.  Both simulators use the same
splitting per slow step: a Heun predictor-corrector step for the drift,
then transport along the flow of f2.  In the full system the transport
"time" is eps^(-rho) times the trapezoid integral of y over the step,
which solves dx/dt = eps^(-rho) f2(x) y(t) exactly; in the reduced
system it is the stable jump.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from . import cam
from .errors import DomainError, MarcusDomainError
from .stable import StableParams, sample
from .trajectory import Trajectory

RNG_BLOCK = 256
DEFAULT_BOUND = 1e8


@dataclass(frozen=True)
class SlowSystem:
    """Slow equation dx = f1(x) dt + eps^(-rho) f2(x) y dt.

    ``f2_kind`` is ``"constant"`` (f2 = coef), ``"linear"`` (f2 = coef x)
    or ``"general"``; the first two have closed-form transformations and
    Marcus flows.  ``df1`` (optional) lets the drift integrator detect
    stiffness.  ``rho=None`` means rho = gamma* of the forcing.
    """

    name: str
    f1: Callable
    f2: Callable
    domain: tuple = (-math.inf, math.inf)
    rho: float | None = None
    f2_kind: str = "general"
    f2_coef: float = 1.0
    df1: Callable | None = None
    tau_x: float = 1.0
    params: dict = field(default_factory=dict)
    bound: float = DEFAULT_BOUND

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (x > self.domain[0]) & (x < self.domain[1])

    def check_f2(self, n: int = 2001):
        """Raise if f2 vanishes on the domain (sampled check for general f2)."""
        if self.f2_kind in ("constant", "linear"):
            if self.f2_coef == 0.0:
                raise DomainError(f"f2 vanishes identically for system {self.name!r}")
            if self.f2_kind == "linear" and self.domain[0] < 0.0 < self.domain[1]:
                raise DomainError("f2 = coef*x vanishes at x = 0 inside the domain")
            return
        lo, hi = (max(self.domain[0], -1e3), min(self.domain[1], 1e3))
        xs = np.linspace(lo, hi, n)[1:-1]
        v = np.asarray(self.f2(xs), dtype=float)
        if np.any(v == 0.0) or np.any(np.sign(v) != np.sign(v[0])):
            raise DomainError(f"f2 vanishes inside the domain of system {self.name!r}")


def linear_system(mu: float = 1.0, zeta: float = 1.0, rho: float | None = None) -> SlowSystem:
    """dx = -mu x dt + eps^(-rho) zeta y dt."""
    if not mu > 0.0:
        raise DomainError("linear system needs mu > 0")
    return SlowSystem(
        name="linear",
        f1=lambda x: -mu * x,
        f2=lambda x: zeta * np.ones_like(np.asarray(x, dtype=float)),
        rho=rho,
        f2_kind="constant",
        f2_coef=zeta,
        df1=lambda x: -mu * np.ones_like(np.asarray(x, dtype=float)),
        tau_x=1.0 / mu,
        params={"mu": mu, "zeta": zeta},
    )


def cubic_system(mu: float = 1.0, zeta: float = 0.2, rho: float | None = None) -> SlowSystem:
    """dx = -(mu x + x^3) dt + eps^(-rho) zeta y dt."""
    if mu == 0.0:
        raise DomainError("cubic system needs mu != 0")
    return SlowSystem(
        name="cubic",
        f1=lambda x: -(mu * x + x**3),
        f2=lambda x: zeta * np.ones_like(np.asarray(x, dtype=float)),
        rho=rho,
        f2_kind="constant",
        f2_coef=zeta,
        df1=lambda x: -(mu + 3.0 * x**2),
        tau_x=1.0 / abs(mu),
        params={"mu": mu, "zeta": zeta},
    )


def bilinear_system(c: float = 1.0, zeta: float = 0.2, rho: float | None = None) -> SlowSystem:
    """dx = (c - x) dt + eps^(-rho) zeta x y dt on (0, inf)."""
    if not c > 0.0:
        raise DomainError("bilinear system needs c > 0")
    return SlowSystem(
        name="bilinear",
        f1=lambda x: c - x,
        f2=lambda x: zeta * np.asarray(x, dtype=float),
        domain=(0.0, math.inf),
        rho=rho,
        f2_kind="linear",
        f2_coef=zeta,
        df1=lambda x: -np.ones_like(np.asarray(x, dtype=float)),
        tau_x=1.0 / c,
        params={"c": c, "zeta": zeta},
        # linear drift cannot blow up; huge excursions from exponential jumps are genuine
        bound=math.inf,
    )


SYSTEMS = {"linear": linear_system, "cubic": cubic_system, "bilinear": bilinear_system}


def make_system(name: str, **params) -> SlowSystem:
    try:
        factory = SYSTEMS[name]
    except KeyError:
        raise DomainError(f"unknown system {name!r}; choose from {sorted(SYSTEMS)}") from None
    return factory(**params)


# ---------------------------------------------------------------------------
# transformation eta = U(x), U' = 1/f2
# ---------------------------------------------------------------------------


def transform(sys: SlowSystem, x_ref: float | None = None):
    """Return (U, U_inverse, f_tilde) with U' = 1/f2 and f_tilde = f1/f2 composed with U^-1.

    U(x_ref) = 0; the default x_ref is 0 for unbounded domains and 1 for
    (0, inf).  General f2 uses adaptive quadrature and a bracketing root
    solve for the inverse.
    """
    sys.check_f2()
    if x_ref is None:
        x_ref = 1.0 if sys.domain[0] >= 0.0 else 0.0
    a = sys.f2_coef
    if sys.f2_kind == "constant":

        def U(x):
            return (np.asarray(x, dtype=float) - x_ref) / a

        def U_inv(eta):
            return x_ref + a * np.asarray(eta, dtype=float)

    elif sys.f2_kind == "linear":

        def U(x):
            return np.log(np.asarray(x, dtype=float) / x_ref) / a

        def U_inv(eta):
            return x_ref * np.exp(a * np.asarray(eta, dtype=float))

    else:

        def _u(x):
            val, _ = integrate.quad(lambda s: 1.0 / sys.f2(s), x_ref, x, epsabs=1e-13, epsrel=1e-13, limit=200)
            return val

        def U(x):
            return np.vectorize(_u, otypes=[float])(x)

        def _u_inv(eta):
            # U is monotone: widen a bracket around x_ref until it contains eta
            lo_d, hi_d = sys.domain
            for k in range(1, 200):
                lo = lo_d + (x_ref - lo_d) * 2.0**-k if math.isfinite(lo_d) else x_ref - 2.0**k
                hi = hi_d - (hi_d - x_ref) * 2.0**-k if math.isfinite(hi_d) else x_ref + 2.0**k
                ulo, uhi = _u(lo), _u(hi)
                if min(ulo, uhi) <= eta <= max(ulo, uhi):
                    return optimize.brentq(lambda x: _u(x) - eta, lo, hi, xtol=1e-14, rtol=1e-15, maxiter=200)
            raise DomainError(f"U^-1({eta}) lies outside the domain")

        def U_inv(eta):
            return np.vectorize(_u_inv, otypes=[float])(eta)

    def f_tilde(eta):
        x = U_inv(eta)
        return sys.f1(x) / sys.f2(x)

    return U, U_inv, f_tilde


# ---------------------------------------------------------------------------
# reduced system and Marcus increments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReducedSystem:
    """dX = f1(X) dt + f2(X) <> dL, with L stable of law ``noise`` per unit time."""

    system: SlowSystem
    noise: StableParams
    interpretation: str
    eps: float
    Sigma: float
    rho: float

    @property
    def f1(self):
        return self.system.f1

    @property
    def f2(self):
        return self.system.f2

    @property
    def domain(self):
        return self.system.domain


def reduce(sys: SlowSystem, p: cam.CamParams, Sigma: float, eps: float) -> ReducedSystem:
    """Reduced stable-driven model with noise scale eps^(gamma* - rho) Sigma."""
    if not Sigma > 0.0:
        raise DomainError("Sigma must be positive")
    if not eps > 0.0:
        raise DomainError("eps must be positive")
    sys.check_f2()
    d = cam.derive(p)
    rho = d.gamma_star if sys.rho is None else sys.rho
    scale = eps ** (d.gamma_star - rho) * Sigma
    if sys.f2_kind == "constant":
        interp = "ito"
    elif abs(d.alpha_star - 2.0) < 1e-6:
        interp = "stratonovich"
    else:
        interp = "marcus"
    return ReducedSystem(
        system=sys,
        noise=StableParams(d.alpha_star, d.beta_star, scale),
        interpretation=interp,
        eps=eps,
        Sigma=Sigma,
        rho=rho,
    )


def _rk4_flow(F, x, J, n):
    h = 1.0 / n
    for _ in range(n):
        k1 = F(x) * J
        k2 = F(x + 0.5 * h * k1) * J
        k3 = F(x + 0.5 * h * k2) * J
        k4 = F(x + h * k3) * J
        x = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return x


def marcus_increment(
    f2_times_sigma: Callable,
    x_before,
    jump,
    domain: tuple = (-math.inf, math.inf),
    kind: str = "general",
    coef: float = 1.0,
    tol: float = 1e-10,
    max_doublings: int = 16,
    check_domain: bool = True,
):
    """Endpoint lambda(1) of d lambda/ds = F(lambda) * jump, lambda(0) = x_before.

    ``kind="constant"`` (F = coef) and ``kind="linear"`` (F = coef*lambda)
    use the closed forms x + coef*jump and x*exp(coef*jump); otherwise RK4
    with step doubling until successive results agree to ``tol``
    (relative).  Leaving ``domain`` raises ``MarcusDomainError`` unless
    ``check_domain`` is off.
    """
    x = np.asarray(x_before, dtype=float)
    J = np.asarray(jump, dtype=float)
    if kind == "constant":
        out = x + coef * J
    elif kind == "linear":
        with np.errstate(over="ignore", under="ignore"):
            out = x * np.exp(coef * J)
    else:
        n = 4
        err = math.inf
        with np.errstate(over="ignore", invalid="ignore"):
            prev = _rk4_flow(f2_times_sigma, x, J, n)
            for _ in range(max_doublings):
                n *= 2
                cur = _rk4_flow(f2_times_sigma, x, J, n)
                if not np.all(np.isfinite(cur)):
                    break
                err = np.max(np.abs(cur - prev) / (1.0 + np.abs(cur)), initial=0.0)
                prev = cur
                if err < tol:
                    break
        if not err < tol:
            raise MarcusDomainError(f"Marcus flow did not converge (error {err:.3g} after {n} substeps)")
        out = prev
    if not check_domain:
        return out
    lo, hi = domain
    bad = ~np.isfinite(out) | (out <= lo) | (out >= hi)
    if np.any(bad):
        i = np.flatnonzero(np.atleast_1d(bad))[0]
        xb = np.broadcast_to(x, np.shape(out)).ravel()[i]
        jb = np.broadcast_to(J, np.shape(out)).ravel()[i]
        raise MarcusDomainError(f"Marcus flow from x={xb:g} with jump {jb:g} leaves the domain {domain}")
    return out


# ---------------------------------------------------------------------------
# drift integrator
# ---------------------------------------------------------------------------


def heun_drift(f1, x, dt, df1=None, stiffness: float = 0.5, max_sub: int = 4096):
    """Heun predictor-corrector step for dx = f1(x) dt.

    Paths with |f1'(x)| dt above ``stiffness`` are advanced in equal
    substeps so that each substep satisfies the bound (the cubic drift
    after a large jump would otherwise overshoot).
    """
    x = np.asarray(x, dtype=float)
    if df1 is None:
        k1 = f1(x)
        pred = x + dt * k1
        return x + 0.5 * dt * (k1 + f1(pred))
    n_sub = np.clip(np.ceil(np.abs(df1(x)) * dt / stiffness), 1, max_sub).astype(int)
    n_max = int(n_sub.max(initial=1))
    if n_max == 1:
        k1 = f1(x)
        pred = x + dt * k1
        return x + 0.5 * dt * (k1 + f1(pred))
    h = dt / n_sub
    out = x.copy()
    for k in range(n_max):
        act = n_sub > k
        xa, ha = out[act], h[act]
        k1 = f1(xa)
        pred = xa + ha * k1
        out[act] = xa + 0.5 * ha * (k1 + f1(pred))
    return out


def _transport(sys: SlowSystem, scale: float, x, J):
    # closed-form flows cannot leave the domain; a result outside it is a
    # floating-point range failure, which the simulators' guard handles
    closed = sys.f2_kind in ("constant", "linear")
    return marcus_increment(
        lambda v: scale * np.asarray(sys.f2(v), dtype=float),
        x,
        J,
        domain=sys.domain,
        kind=sys.f2_kind,
        coef=scale * sys.f2_coef,
        check_domain=not closed,
    )


class _Guard:
    """Per-path blow-up guard: a path that leaves the domain (by float
    overflow or underflow) or exceeds ``bound`` is stopped and set to NaN."""

    def __init__(self, sys: SlowSystem, n: int, bound: float | None, label: str):
        self.sys = sys
        self.bound = sys.bound if bound is None else bound
        self.alive = np.ones(n, dtype=bool)
        self.label = label
        self.first = None

    def check(self, x, t):
        with np.errstate(invalid="ignore"):
            ok = self.sys.contains(x) & (np.abs(x) < self.bound)
        bad = self.alive & ~ok
        if np.any(bad):
            x[bad] = np.nan
            self.alive &= ~bad
            if self.first is None:
                self.first = t
        return x

    def flags(self) -> dict:
        n_bad = int(np.count_nonzero(~self.alive))
        warnings = []
        if n_bad:
            warnings.append(
                f"{n_bad} path(s) of {self.label} left the domain or exceeded |x| < {self.bound:g} "
                f"(first at t={self.first:g}); stopped and stored as NaN"
            )
        return {"warnings": warnings, "blown_up": n_bad > 0, "n_blown_up": n_bad}


def default_dt_slow(sys: SlowSystem, eps: float) -> float:
    """min(10 eps, tau_x / 100)."""
    return min(10.0 * eps, sys.tau_x / 100.0)


def _record_plan(T, dt, record_every, t_burn):
    n_steps = int(round(T / dt))
    if n_steps < 0 or abs(n_steps * dt - T) > 1e-9 * max(1.0, T):
        raise DomainError(f"T={T} must be a non-negative multiple of dt={dt}")
    n_burn = int(round(t_burn / dt))
    return n_steps, n_burn


def _finish(records, dt, record_every, t_burn, params, flags, seed):
    values = np.stack(records, axis=-1) if records else np.empty((0, 0))
    return Trajectory(
        t0=t_burn,
        dt=dt * record_every,
        values=values,
        seed=seed,
        params=params,
        metadata={"warnings": flags.get("warnings", []), **{k: v for k, v in flags.items() if k != "warnings"}},
    )


def simulate_full(
    sys: SlowSystem,
    p: cam.CamParams,
    eps: float,
    x0,
    dt_slow: float | None,
    T: float,
    rng: np.random.Generator,
    dt_fast: float | None = None,
    record_every: int = 1,
    t_burn: float = 0.0,
    bound: float | None = None,
    seed: int | None = None,
) -> Trajectory:
    """Co-integrate the CAM forcing y_{t/eps} and the slow variable x.

    ``x0`` is a scalar or an array of initial states (one path each); the
    CAM forcing starts from exact stationary draws.  The fast substep
    defaults to eps/10 (rounded down so that it divides ``dt_slow``).
    The run covers ``t_burn + T``; samples are stored from ``t_burn`` on,
    every ``record_every`` slow steps.  A path that exceeds ``bound``
    (default: the system's own bound) or leaves the domain is stopped and
    stored as NaN from then on; ``blown_up`` and ``n_blown_up`` report it.
    """
    if not eps > 0.0:
        raise DomainError("eps must be positive")
    d = cam.derive(p)
    rho = d.gamma_star if sys.rho is None else sys.rho
    dt = default_dt_slow(sys, eps) if dt_slow is None else dt_slow
    m = max(1, int(math.ceil(dt / (eps / 10.0) - 1e-9))) if dt_fast is None else int(round(dt / dt_fast))
    h = dt / m
    if dt_fast is not None and abs(m * dt_fast - dt) > 1e-9 * dt:
        raise DomainError("dt_slow must be an integer multiple of dt_fast")
    if h > eps / 10.0 * (1.0 + 1e-9):
        raise DomainError(f"fast substep {h:g} exceeds eps/10 = {eps / 10:g}")
    n_steps, n_burn = _record_plan(T, dt, record_every, t_burn)
    x = np.array(np.atleast_1d(x0), dtype=float)
    if not np.all(sys.contains(x)):
        raise DomainError("x0 outside the system domain")
    pf = p.rescaled(eps)
    y = cam.sample_stationary(p, rng, x.size)
    amp = eps ** (-rho)
    guard = _Guard(sys, x.size, bound, "x")
    records = []
    for n in range(n_burn + n_steps):
        y, _, integral = cam.advance(pf, y, h, m, rng, integrate_path=True)
        a = guard.alive
        x[a] = _transport(sys, amp, heun_drift(sys.f1, x[a], dt, sys.df1), integral[a])
        x = guard.check(x, (n + 1) * dt)
        k = n + 1 - n_burn
        if k >= 0 and k % record_every == 0:
            records.append(x.copy())
    if n_burn == 0:
        records.insert(0, np.array(np.atleast_1d(x0), dtype=float) * np.ones_like(x))
    params = {
        "system": sys.name,
        "system_params": sys.params,
        "cam": p.as_dict(),
        "eps": eps,
        "rho": rho,
        "dt_slow": dt,
        "dt_fast": h,
        "model": "full",
    }
    return _finish(records, dt, record_every, t_burn, params, guard.flags(), seed)


def simulate_reduced(
    rsys: ReducedSystem,
    x0,
    dt: float,
    T: float,
    rng: np.random.Generator,
    record_every: int = 1,
    t_burn: float = 0.0,
    bound: float | None = None,
    seed: int | None = None,
) -> Trajectory:
    """Heun drift step followed by a Marcus jump with increment S(beta, scale dt^(1/alpha)).

    Blow-up handling is the same as in ``simulate_full``.
    """
    sys = rsys.system
    if not dt > 0.0:
        raise DomainError("dt must be positive")
    n_steps, n_burn = _record_plan(T, dt, record_every, t_burn)
    x = np.array(np.atleast_1d(x0), dtype=float)
    if not np.all(sys.contains(x)):
        raise DomainError("x0 outside the system domain")
    unit = StableParams(rsys.noise.alpha, rsys.noise.beta, 1.0)
    jscale = rsys.noise.sigma * dt ** (1.0 / rsys.noise.alpha)
    guard = _Guard(sys, x.size, bound, "X")
    records = []
    total = n_burn + n_steps
    done = 0
    if n_burn == 0:
        records.append(x.copy())
    while done < total:
        block = min(RNG_BLOCK, total - done)
        jumps = jscale * sample(unit, rng, (block, x.size))
        for j in range(block):
            a = guard.alive
            x[a] = _transport(sys, 1.0, heun_drift(sys.f1, x[a], dt, sys.df1), jumps[j][a])
            n = done + j
            x = guard.check(x, (n + 1) * dt)
            k = n + 1 - n_burn
            if k >= 0 and k % record_every == 0:
                records.append(x.copy())
        done += block
    params = {
        "system": sys.name,
        "system_params": sys.params,
        "noise": {"alpha": unit.alpha, "beta": unit.beta, "sigma": rsys.noise.sigma},
        "interpretation": rsys.interpretation,
        "eps": rsys.eps,
        "Sigma": rsys.Sigma,
        "rho": rsys.rho,
        "dt": dt,
        "model": "reduced",
    }
    return _finish(records, dt, record_every, t_burn, params, guard.flags(), seed)
