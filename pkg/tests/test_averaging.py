import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from camstable import averaging, oulp, stats
from camstable.averaging import SlowSystem
from camstable.cam import CamParams, derive
from camstable.errors import DomainError, MarcusDomainError
from camstable.trajectory import stream

P = CamParams.from_alpha(1.5, -1.0, 0.1, 0.5)
jumps = st.floats(-5.0, 5.0)


def general_linear(zeta=0.2, c=1.0):
    # the bilinear system with f2 declared "general", forcing quadrature and RK4 paths
    return SlowSystem(
        name="bilinear-general",
        f1=lambda x: c - x,
        f2=lambda x: zeta * np.asarray(x, dtype=float),
        domain=(0.0, math.inf),
        f2_kind="general",
        df1=lambda x: -np.ones_like(np.asarray(x, dtype=float)),
    )


@pytest.mark.property
@given(st.floats(-100, 100), jumps, st.floats(-3, 3))
@settings(max_examples=200, deadline=None)
def test_marcus_constant_is_additive(x, J, c):
    out = averaging.marcus_increment(lambda v: c, x, J, kind="constant", coef=c)
    assert out == pytest.approx(x + c * J, rel=1e-12, abs=1e-12)
    gen = averaging.marcus_increment(lambda v: c + 0 * v, x, J)
    assert gen == pytest.approx(x + c * J, rel=1e-12, abs=1e-12)


@pytest.mark.property
@given(st.floats(0.01, 100), jumps, jumps)
@settings(max_examples=200, deadline=None)
def test_marcus_identity_and_semigroup(x, j1, j2):
    def F(v):
        return v

    for kind in ("linear", "general"):
        assert averaging.marcus_increment(F, x, 0.0, kind=kind) == pytest.approx(x, rel=1e-12)
        both = averaging.marcus_increment(F, x, j1 + j2, kind=kind, tol=1e-13)
        step = averaging.marcus_increment(F, averaging.marcus_increment(F, x, j1, kind=kind, tol=1e-13), j2, kind=kind, tol=1e-13)
        assert both == pytest.approx(step, rel=1e-12)
        assert both == pytest.approx(x * math.exp(j1 + j2), rel=1e-12)


def test_marcus_domain_exit_raises():
    # dx/ds = -1 from x = 0.5 with jump 1 reaches 0 at s = 1/2
    with pytest.raises(MarcusDomainError):
        averaging.marcus_increment(lambda v: -np.ones_like(v), np.array([0.5]), 1.0, domain=(0.0, math.inf))


def test_marcus_nonconvergence_raises():
    # x' = x^2 blows up at s = 1/x, so the flow cannot converge
    with pytest.raises(MarcusDomainError):
        averaging.marcus_increment(lambda v: v * v, np.array([2.0]), 1.0, max_doublings=3)


@pytest.mark.property
def test_transform_round_trip_bilinear():
    xs = np.geomspace(1e-3, 1e3, 1000)
    for sysm in (averaging.bilinear_system(), general_linear()):
        U, U_inv, _ = averaging.transform(sysm)
        assert np.max(np.abs(U_inv(U(xs)) - xs) / xs) < 1e-10
    # closed form and quadrature agree
    U1, _, _ = averaging.transform(averaging.bilinear_system())
    U2, _, _ = averaging.transform(general_linear())
    sample = xs[::50]
    assert np.allclose(U1(sample), U2(sample), rtol=1e-10, atol=1e-12)


@pytest.mark.property
@given(st.floats(-50, 50))
@settings(max_examples=100, deadline=None)
def test_transform_round_trip_constant(x):
    U, U_inv, ft = averaging.transform(averaging.cubic_system(mu=-1.0, zeta=0.2))
    assert U_inv(U(x)) == pytest.approx(x, abs=1e-10)
    assert ft(U(x)) == pytest.approx(-(-x + x**3) / 0.2, rel=1e-9, abs=1e-9)


def test_check_f2():
    with pytest.raises(DomainError):
        averaging.linear_system(zeta=0.0).check_f2()
    bad = SlowSystem(name="bad", f1=lambda x: -x, f2=lambda x: np.asarray(x, dtype=float))
    with pytest.raises(DomainError):
        bad.check_f2()
    with pytest.raises(DomainError):
        averaging.make_system("quartic")


def test_reduce_interpretations_and_scale():
    lin = averaging.reduce(averaging.linear_system(), P, 0.8, 1e-3)
    assert lin.interpretation == "ito"
    assert lin.noise.sigma == pytest.approx(0.8)
    bil = averaging.reduce(averaging.bilinear_system(), P, 0.8, 1e-3)
    assert bil.interpretation == "marcus"
    d = derive(P)
    other = averaging.reduce(averaging.linear_system(rho=0.0), P, 0.8, 1e-3)
    assert other.noise.sigma == pytest.approx(1e-3 ** d.gamma_star * 0.8)


@pytest.mark.property
@given(st.floats(0.01, 100.0))
@settings(max_examples=50, deadline=None)
def test_reduction_independent_of_matching_theta(theta):
    # sigma_z = Sigma theta and the integral law scale sigma_z/theta = Sigma for any theta
    m = oulp.match_from_cam(P, 0.8, theta=theta)
    law = oulp.integral_law(m, 1e-3, 1.0)
    red = averaging.reduce(averaging.linear_system(), P, m.sigma_z / m.theta, 1e-3)
    assert law.sigma / 1e-3 ** derive(P).gamma_star == pytest.approx(red.noise.sigma, rel=1e-12)


def test_heun_substeps_stiff_cubic():
    sysm = averaging.cubic_system(mu=1.0)
    x = np.array([0.5, 50.0])
    out = averaging.heun_drift(sysm.f1, x, 0.01, sysm.df1)
    assert np.all(np.isfinite(out))
    assert 0 < out[1] < 50.0
    assert out[0] == pytest.approx(averaging.heun_drift(sysm.f1, x[:1], 0.01)[0])


def test_cubic_noise_free_limits():
    for mu, target in ((1.0, 0.0), (-1.0, 1.0)):
        sysm = averaging.cubic_system(mu=mu)
        x = np.array([0.3])
        for _ in range(3000):
            x = averaging.heun_drift(sysm.f1, x, 0.01, sysm.df1)
        assert x[0] == pytest.approx(target, abs=1e-6)


def test_reduced_linear_stationary_law():
    sysm = averaging.linear_system()
    r = averaging.reduce(sysm, P, 0.8, 1e-3)
    tr = averaging.simulate_reduced(r, np.zeros(2000), 0.01, 10.0, stream(1), record_every=50, t_burn=5.0)
    law = oulp.OulpParams(theta=1.0, sigma_z=0.8, alpha=1.5, beta=derive(P).beta_star)
    k = np.linspace(-2, 2, 41)
    assert stats.sup_distance(stats.ecf(tr.values, k), oulp.stationary_cf(law, k)) < 0.03
    assert tr.values.shape == (2000, 21)
    assert tr.t0 == 5.0


@pytest.mark.property
def test_bilinear_positivity_reduced_long_run():
    r = averaging.reduce(averaging.bilinear_system(), P, 0.8, 1e-3)
    tr = averaging.simulate_reduced(r, np.ones(1000), 0.01, 100.0, stream(2), record_every=1)
    # 10^7 steps in total
    assert tr.values.shape == (1000, 10_001)
    assert not tr.metadata["blown_up"]
    assert np.all(tr.values > 0)


def test_bilinear_positivity_full():
    tr = averaging.simulate_full(averaging.bilinear_system(), P, 0.01, np.ones(50), 0.01, 5.0, stream(3))
    assert np.all(tr.values > 0)


def test_blow_up_guard_stops_single_paths():
    sysm = averaging.linear_system(mu=1.0, zeta=1.0)
    r = averaging.reduce(sysm, P, 50.0, 1e-3)
    tr = averaging.simulate_reduced(r, np.zeros(200), 0.01, 5.0, stream(4), bound=50.0)
    assert tr.metadata["blown_up"]
    assert 0 < tr.metadata["n_blown_up"] < 200
    assert tr.values.shape == (200, 501)
    dead = np.isnan(tr.values[:, -1])
    assert np.all(np.isnan(tr.values[dead, -1]))
    assert np.all(np.isfinite(tr.values[~dead]))
    assert tr.warnings


@pytest.mark.property
def test_full_and_reduced_deterministic():
    sysm = averaging.cubic_system(mu=-1.0)
    a = averaging.simulate_full(sysm, P, 0.05, np.zeros(8), 0.05, 1.0, stream(5))
    b = averaging.simulate_full(sysm, P, 0.05, np.zeros(8), 0.05, 1.0, stream(5))
    assert np.array_equal(a.values, b.values)
    r = averaging.reduce(sysm, P, 0.8, 0.05)
    c = averaging.simulate_reduced(r, np.zeros(8), 0.01, 1.0, stream(6))
    d = averaging.simulate_reduced(r, np.zeros(8), 0.01, 1.0, stream(6))
    assert np.array_equal(c.values, d.values)


def test_full_validation():
    sysm = averaging.bilinear_system()
    with pytest.raises(DomainError):
        averaging.simulate_full(sysm, P, 0.01, np.array([-1.0]), 0.01, 1.0, stream(0))
    with pytest.raises(DomainError):
        averaging.simulate_full(sysm, P, 0.01, np.ones(2), 0.01, 1.0, stream(0), dt_fast=0.003)
    with pytest.raises(DomainError):
        averaging.simulate_full(sysm, P, 0.01, np.ones(2), 0.01, 1.0, stream(0), dt_fast=0.01)
    assert averaging.default_dt_slow(averaging.linear_system(mu=2.0), 1e-3) == pytest.approx(0.005)
