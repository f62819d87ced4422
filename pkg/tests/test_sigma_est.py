import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from camstable import sigma_est, stable
from camstable.cam import CamParams, derive
from camstable.errors import ConditionError, DomainError, InsufficientDataError
from camstable.stable import StableParams
from camstable.trajectory import stream

P = CamParams.from_alpha(1.5, -1.0, 0.1, 0.5)


def test_robust_scale_unit_stable():
    x = stable.sample(StableParams(1.5, 0.0, 1.0), stream(0), 200_000)
    assert sigma_est.robust_scale(x) == pytest.approx(1.0, abs=0.06)
    with pytest.raises(InsufficientDataError):
        sigma_est.robust_scale(np.ones(10))


@pytest.mark.property
@given(st.floats(1.2, 1.9), st.floats(-0.9, 0.9), st.floats(1e-3, 1e3))
@settings(max_examples=25, deadline=None)
def test_fit_scale_recovers_sigma(a, b, s):
    x = stable.sample(StableParams(a, b, s), stream(1), 20_000)
    s0 = sigma_est.robust_scale(x)
    fit = sigma_est.fit_scale(x, a, b, 0.05 / s0, 2.0 / s0, 40)
    assert fit == pytest.approx(s, rel=0.05)


def test_fit_scale_equivariant():
    x = stable.sample(StableParams(1.5, 0.3, 1.0), stream(2), 20_000)
    s1 = sigma_est.fit_scale(x, 1.5, 0.3, 0.05, 2.0)
    s2 = sigma_est.fit_scale(10 * x, 1.5, 0.3, 0.005, 0.2)
    assert s2 == pytest.approx(10 * s1, rel=1e-5)


def test_fit_scale_domain():
    with pytest.raises(DomainError):
        sigma_est.fit_scale(np.arange(10.0), 1.5, 0.0, 1.0, 0.5)


def test_conditions():
    assert sigma_est.check_conditions(1e-4, 1.0, 0.01) == 100
    with pytest.raises(ConditionError, match="Condition A"):
        sigma_est.check_conditions(1e-2, 1.0, 0.01)
    with pytest.raises(ConditionError, match="Condition B"):
        sigma_est.check_conditions(1e-4, 1.0, 0.1)
    with pytest.raises(DomainError):
        sigma_est.check_conditions(1e-4, 1.0, 0.03)


def test_sample_integrals_rejects_coarse_step():
    with pytest.raises(ConditionError):
        sigma_est.sample_integrals(P, 1e-3, 0.01, 10, dt=1e-3)


def test_partition_integrals_shape_and_sum():
    Y = sigma_est.partition_integrals(P, 1e-2, 0.05, 50, 4, rng=stream(3))
    assert Y.shape == (50, 4)
    assert np.all(np.isfinite(Y))


def test_estimate_sigma_reproducible_and_worker_independent():
    kw = dict(eps=1e-3, T=0.5, Delta=0.005, N_S=100, n_repeats=3, seed=9)
    a = sigma_est.estimate_sigma(P, workers=1, **kw)
    b = sigma_est.estimate_sigma(P, workers=3, **kw)
    assert a.as_dict() == b.as_dict()
    assert a.config["N_Y"] == 100
    assert a.Sigma == pytest.approx(a.sigma_Y / (1e-3 ** (1 / 3) * 0.005 ** (2 / 3)))
    assert 0.3 < a.Sigma < 2.0


def test_loglog_slope_exact():
    x = np.array([1.0, 2.0, 4.0, 8.0])
    assert sigma_est.loglog_slope(x, 3 * x**0.7) == pytest.approx(0.7)


@pytest.mark.property
def test_sigma_y_identity():
    est = sigma_est.estimate_sigma(P, eps=1e-3, T=0.5, Delta=0.005, N_S=100, n_repeats=3, seed=2)
    N_Y = est.config["N_Y"]
    for s, y in zip(est.repeats["sigma_S"], est.repeats["sigma_Y"]):
        assert y == pytest.approx(s * N_Y ** (-1 / 1.5), rel=1e-14)


@pytest.mark.property
def test_sigma_consistent_over_eps_delta_design():
    kw = dict(T=1.0, N_S=200, n_repeats=5)
    ests = [
        sigma_est.estimate_sigma(P, eps=e, Delta=D, seed=i, **kw)
        for i, (e, D) in enumerate([(5e-4, 0.005), (5e-4, 0.01), (2.5e-4, 0.005), (2.5e-4, 0.01)])
    ]
    lo = max(e.quartiles["Sigma"][0] for e in ests)
    hi = min(e.quartiles["Sigma"][2] for e in ests)
    med = [e.Sigma for e in ests]
    # every median lies within the pooled quartile spread of the design
    spread = max(e.quartiles["Sigma"][2] for e in ests) - min(e.quartiles["Sigma"][0] for e in ests)
    assert max(med) - min(med) <= spread
    assert lo <= hi + spread


@pytest.mark.property
def test_fit_residual_decreases_with_eps():
    # the residual depends only on the S sample, so fit it directly; N_S is
    # large enough that the ECF noise floor (about 1/(2 N_S)) sits below the bias
    beta = derive(P).beta_star

    def median_residual(eps):
        out = []
        for r in range(5):
            S = sigma_est.sample_integrals(P, eps, 1.0, 4000, rng=stream(11, r))
            s0 = sigma_est.robust_scale(S)
            out.append(sigma_est.fit_scale(S, 1.5, beta, 0.05 / s0, 2.0 / s0, return_residual=True)[1])
        return np.median(out)

    assert median_residual(5e-3) < median_residual(5e-2)
