import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import ista
from tbp.ensembles import (
    InputDeterministic,
    OutputGaussian,
    RngStream,
    SparseSignal,
    gen_matrix,
    gen_measurement,
    gen_signal,
)
from tbp.recovery import (
    LassoConfig,
    compute_metrics,
    lasso,
    lasso_lambda,
    max_correlation,
    ml_oracle,
    tbp,
    tbp_ols,
    threshold,
)


def _instance(m, n, k, sigma, seed, rows=None):
    G = gen_matrix(rows or m, n, rng=RngStream(seed, 0))
    x = gen_signal(n, k, RngStream(seed, 1))
    y, _ = gen_measurement(G, x, OutputGaussian(sigma), RngStream(seed, 2))
    return G, x, y


def test_threshold_keeps_exact_half():
    v = np.array([0.5, -0.4999, 0.2, -0.7, 0.0])
    np.testing.assert_array_equal(threshold(v, 1.0), [0.5, 0.0, 0.0, -0.7, 0.0])
    np.testing.assert_array_equal(threshold(v, 2.0), [0.0, 0.0, 0.0, 0.0, 0.0])


@pytest.mark.parametrize(
    "est,miss,false",
    [
        ([1, -1, 0, 0], 0, 0),
        ([1, 1, 0, 0], 1, 1),  # wrong sign: a miss and a false alarm
        ([1, 0, 0, 2], 1, 1),
        ([0, 0, 0, 0], 2, 0),
        ([3, -2, 1, 1], 0, 2),
    ],
)
def test_metrics_examples(est, miss, false):
    x = SparseSignal(4, [0, 1], [1.0, -1.0])
    met = compute_metrics(x, np.array(est, float))
    assert (met.n_miss, met.n_false) == (miss, false)
    assert met.exact_sign_recovery == (miss == 0 and false == 0)


@given(data=st.data())
@settings(max_examples=80, deadline=None)
def test_metrics_counting_identity(data):
    n = data.draw(st.integers(1, 30))
    k = data.draw(st.integers(0, n))
    x = gen_signal(n, k, RngStream(data.draw(st.integers(0, 10**6))))
    est = np.array(data.draw(st.lists(st.sampled_from([-1.0, 0.0, 1.0]), min_size=n, max_size=n)))
    met = compute_metrics(x, est)
    # matched entries are counted once on each side
    assert x.k - met.n_miss == np.count_nonzero(est) - met.n_false
    assert 0 <= met.n_miss <= x.k
    assert met.n_false >= 0


def test_tbp_noiseless_exact():
    G, x, y = _instance(60, 120, 8, 0.0, 4)
    rep = tbp(G, y, truth=x)
    assert rep.success and rep.n_miss == 0 and rep.n_false == 0
    np.testing.assert_array_equal(rep.est_support, x.support)
    np.testing.assert_array_equal(rep.est_signs, x.signs)
    assert rep.solver_stats.certified


def test_tbp_input_noise_small():
    G = gen_matrix(60, 120, rng=RngStream(5, 0))
    x = gen_signal(120, 6, RngStream(5, 1))
    w = InputDeterministic(np.full(120, 1e-3), 1e-3)
    y, _ = gen_measurement(G, x, w, 0)
    assert tbp(G, y, truth=x).success


def test_tbp_threshold_scales_with_amplitude():
    G, x, y = _instance(40, 80, 4, 0.0, 6)
    rep = tbp(G, 3 * y, x_min=3.0, truth=x.scaled(3.0))
    assert rep.success
    with pytest.raises(ValueError):
        tbp(G, y, x_min=0.0)


def test_tbp_ols_recovers():
    G, x, y = _instance(40, 120, 5, 0.02, 8, rows=120)
    rep = tbp_ols(G, y, truth=x)
    assert rep.success
    assert set(x.support) <= set(rep.extras["candidates"].tolist())
    with pytest.raises(ValueError):
        tbp_ols(G.entries[:100], y[:100])


def test_lasso_matches_ista():
    G, x, y = _instance(30, 60, 4, 0.05, 1)
    lam = 0.1
    rep = lasso(G, y, LassoConfig(lam), truth=x)
    ref = ista(G.entries, y, lam)
    np.testing.assert_allclose(rep.extras["raw"], ref, atol=1e-6)
    assert rep.converged


@given(seed=st.integers(0, 2**31), lam=st.floats(0.01, 2.0))
@settings(max_examples=30, deadline=None)
def test_lasso_kkt(seed, lam):
    G, _, y = _instance(20, 40, 3, 0.1, seed)
    A = G.entries
    b = lasso(G, y, LassoConfig(lam)).extras["raw"]
    corr = A.T @ (y - A @ b)
    nz = b != 0
    assert np.all(np.abs(corr) <= lam + 1e-6)
    np.testing.assert_allclose(corr[nz], lam * np.sign(b[nz]), atol=1e-6)


def test_lasso_large_lambda_is_zero():
    G, _, y = _instance(20, 40, 3, 0.1, 2)
    lam = np.max(np.abs(G.entries.T @ y)) * 1.01
    assert not lasso(G, y, LassoConfig(lam)).estimate.any()


def test_lasso_lambda_rules():
    assert lasso_lambda(LassoConfig(0.3), 200) == 0.3
    sig = 0.1
    assert lasso_lambda(LassoConfig(lambda_rule="candes_plan"), 200, sig) == pytest.approx(
        2 * sig * math.sqrt(2 * math.log(200))
    )
    assert lasso_lambda(LassoConfig(lambda_rule="tropp"), 200, sig) == pytest.approx(2 * sig * math.sqrt(200))
    with pytest.raises(ValueError):
        lasso_lambda(LassoConfig(lambda_rule="tropp"), 200)
    with pytest.raises(ValueError):
        LassoConfig(-1.0)
    with pytest.raises(ValueError):
        LassoConfig(lambda_rule="cv")


def test_lasso_sweep_cap_flags_nonconvergence():
    G, _, y = _instance(30, 60, 4, 0.05, 1)
    rep = lasso(G, y, LassoConfig(0.01, max_iters=1))
    assert not rep.converged


def test_lasso_thresholded_option():
    G, x, y = _instance(60, 120, 5, 0.01, 3)
    rep = lasso(G, y, LassoConfig(0.05), truth=x, thresholded=1.0)
    assert rep.n_false == 0


def test_max_correlation_against_sort():
    G, x, y = _instance(50, 100, 5, 0.0, 12)
    rep = max_correlation(G, y, 5, truth=x)
    corr = G.entries.T @ y
    ref = sorted(range(100), key=lambda j: (-abs(corr[j]), j))[:5]
    np.testing.assert_array_equal(rep.est_support, sorted(ref))
    np.testing.assert_array_equal(rep.est_signs, np.sign(corr[sorted(ref)]))


def test_max_correlation_ties_lowest_index():
    G = np.eye(4)
    rep = max_correlation(G, np.array([1.0, 1.0, 1.0, 0.0]), 2)
    np.testing.assert_array_equal(rep.est_support, [0, 1])


def test_ml_oracle_against_reenumeration():
    G, x, y = _instance(6, 10, 2, 0.05, 7)
    A = G.entries
    rep = ml_oracle(G, y, 2, truth=x)
    best = min(
        itertools.combinations(range(10), 2),
        key=lambda s: np.linalg.norm(A[:, s] @ np.linalg.lstsq(A[:, s], y, rcond=None)[0] - y),
    )
    assert tuple(rep.extras["subset"]) == best


def test_ml_sign_pattern_noiseless():
    G, x, y = _instance(6, 10, 2, 0.0, 9)
    rep = ml_oracle(G, y, 2, fit="sign_pattern", truth=x)
    assert rep.success and rep.extras["residual"] < 1e-12


def test_ml_cap():
    G, _, y = _instance(10, 40, 3, 0.0, 0)
    with pytest.raises(ValueError):
        ml_oracle(G, y, 3, cap=100)
