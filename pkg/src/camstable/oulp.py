"""Ornstein-Uhlenbeck-Levy process dz = -theta z dt + sigma_z dL^(alpha, beta).

On the fast clock the drift is theta/eps and the noise increment over
dt has scale sigma_z (dt/eps)^(1/alpha).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import cam
from .errors import DomainError
from .stable import StableParams, characteristic_function, log_cf, sample
from .trajectory import Trajectory

RNG_BLOCK = 256


@dataclass(frozen=True)
class OulpParams:
    theta: float
    sigma_z: float
    alpha: float
    beta: float = 0.0

    def __post_init__(self):
        if not self.theta > 0.0:
            raise DomainError(f"theta={self.theta} must be positive")
        if not self.sigma_z >= 0.0:
            raise DomainError(f"sigma_z={self.sigma_z} must be non-negative")
        # validates alpha, beta
        StableParams(self.alpha, self.beta, 1.0)

    @property
    def driver(self) -> StableParams:
        return StableParams(self.alpha, self.beta, 1.0)

    @property
    def stationary_scale(self) -> float:
        return self.sigma_z / (self.alpha * self.theta) ** (1.0 / self.alpha)

    @property
    def stationary(self) -> StableParams:
        return StableParams(self.alpha, self.beta, self.stationary_scale)

    def as_dict(self) -> dict:
        return asdict(self)


def check_step(p: OulpParams, eps: float, dt: float) -> str | None:
    if dt > eps / (10.0 * p.theta) * (1.0 + 1e-12):
        return f"dt={dt:g} exceeds eps/(10 theta)={eps / (10.0 * p.theta):g}"
    return None


def advance(p: OulpParams, eps: float, z, dt: float, n_steps: int, rng, record_every=None, integrate_path=False):
    """Euler-Maruyama steps for one or many paths; same return contract as ``cam.advance``."""
    z = np.array(z, dtype=float, copy=True)
    shape = z.shape
    z = z.reshape(-1)
    decay = 1.0 - p.theta * dt / eps
    amp = p.sigma_z * (dt / eps) ** (1.0 / p.alpha)
    records = [z.copy()] if record_every else None
    acc = 0.5 * z if integrate_path else None
    driver = p.driver
    done = 0
    while done < n_steps:
        block = min(RNG_BLOCK, n_steps - done)
        xi = sample(driver, rng, (block, z.size)) if amp > 0.0 else np.zeros((block, z.size))
        for j in range(block):
            z = decay * z + amp * xi[j]
            if integrate_path:
                acc += z
            if record_every and (done + j + 1) % record_every == 0:
                records.append(z.copy())
        done += block
    integral = (dt * (acc - 0.5 * z)).reshape(shape) if integrate_path else None
    if records is not None:
        records = np.stack(records, axis=-1).reshape(shape + (len(records),))
    return z.reshape(shape), records, integral


def simulate(
    p: OulpParams,
    eps: float,
    z0,
    dt: float,
    n_steps: int,
    rng: np.random.Generator,
    record_every: int = 1,
    seed: int | None = None,
) -> Trajectory:
    """Euler-Maruyama path z_{t/eps}, recording every ``record_every`` steps."""
    if not eps > 0.0 or not dt > 0.0:
        raise DomainError("eps and dt must be positive")
    if n_steps < 0:
        raise DomainError("n_steps must be non-negative")
    _, rec, _ = advance(p, eps, z0, dt, n_steps, rng, record_every=record_every)
    traj = Trajectory(
        t0=0.0,
        dt=dt * record_every,
        values=rec,
        seed=seed,
        params={"oulp": p.as_dict(), "eps": eps, "dt": dt, "scheme": "euler-maruyama"},
        metadata={"warnings": []},
    )
    msg = check_step(p, eps, dt)
    if msg:
        traj.warnings.append(msg)
    return traj


def sample_stationary(p: OulpParams, rng: np.random.Generator, size=None):
    return sample(p.stationary, rng, size)


def stationary_cf(p: OulpParams, k):
    """Stationary characteristic function: stable with scale sigma_z / (alpha theta)^(1/alpha)."""
    return characteristic_function(p.stationary, k)


def integral_cf(p: OulpParams, eps: float, z0: float, m, t: float):
    """Characteristic function of v_t = int_0^t z_{s/eps} ds, to leading order in eps.

    exp[i eps m z0/theta (1 - e^(-theta t/eps)) - (eps^(alpha-1) sigma_z^alpha t / theta^alpha) |m|^alpha Xi(m)].
    For z0 = 0 this is the stable law with scale eps^(1-1/alpha) t^(1/alpha) sigma_z/theta.
    """
    if not t > 0.0:
        raise DomainError("t must be positive")
    m = np.asarray(m, dtype=float)
    drift = 1j * eps * m * z0 / p.theta * (-math.expm1(-p.theta * t / eps))
    return np.exp(drift + log_cf(integral_law(p, eps, t), m))


def integral_law(p: OulpParams, eps: float, t: float) -> StableParams:
    """Limiting stable law of v_t for z0 = 0."""
    gamma = 1.0 - 1.0 / p.alpha
    return StableParams(p.alpha, p.beta, eps**gamma * t ** (1.0 / p.alpha) * p.sigma_z / p.theta)


def acd_analytic(p: OulpParams, tau):
    """Autocodifference of the stationary OULP at lag ``tau`` (slow clock, eps = 1).

    s^alpha {1 + e^(-alpha theta tau) - |1 - e^(-theta tau)|^alpha
             + i beta tan(pi alpha/2) [(1 - e^(-alpha theta tau)) - |1 - e^(-theta tau)|^alpha]}
    with s^alpha = sigma_z^alpha/(alpha theta).  The imaginary sign follows from
    the characteristic-function convention used throughout the package.
    """
    if abs(p.alpha - 1.0) < 1e-6:
        raise DomainError("acd_analytic does not support alpha = 1")
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0.0):
        raise DomainError("tau must be non-negative")
    s_a = p.sigma_z**p.alpha / (p.alpha * p.theta)
    e1 = np.exp(-p.theta * tau)
    ea = np.exp(-p.alpha * p.theta * tau)
    c = np.abs(1.0 - e1) ** p.alpha
    phi = 0.0 if abs(p.alpha - 2.0) < 1e-6 else math.tan(0.5 * math.pi * p.alpha)
    return s_a * ((1.0 + ea - c) + 1j * p.beta * phi * ((1.0 - ea) - c))


def match_from_cam(p: cam.CamParams, Sigma: float, theta: float | None = None) -> OulpParams:
    """OULP whose integral law matches the CAM integral: sigma_z = Sigma * theta.

    Default theta is the CAM relaxation rate nu E^2 = -(L + E^2/2).  Any
    theta gives the same integral scale Sigma.
    """
    if not Sigma > 0.0:
        raise DomainError(f"Sigma={Sigma} must be positive")
    d = cam.derive(p)
    theta = p.relaxation_rate if theta is None else theta
    return OulpParams(theta=theta, sigma_z=Sigma * theta, alpha=d.alpha_star, beta=d.beta_star)
