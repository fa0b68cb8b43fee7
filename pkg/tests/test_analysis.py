import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import epsilon0_rationalized, gram_schmidt_complement, rip_pairwise
from tbp.analysis import (
    DomainError,
    check_min_norm_bounds,
    compute_cs,
    compute_epsilon0,
    corollary_bound,
    corollary_bound_check,
    empirical_gamma0,
    min_norm_noise,
    null_space_basis,
    rip_exact,
    rip_monte_carlo,
    verify_null_space_equivalence,
)
from tbp.ensembles import (
    InputDeterministic,
    OutputGaussian,
    RngStream,
    complement_frame,
    gen_matrix,
    gen_measurement,
    gen_signal,
)
from tbp.l1_solver import basis_pursuit
from tbp.recovery import tbp

# frozen from the rationalized oracle in tests/oracles.py
GOLDEN_D1 = 659.4212074367395
GOLDEN_D2 = 294.90212912670785
GOLDEN_EPS0 = 3.085656804120968e-4


# -- isometry constants ------------------------------------------------------

def test_rip_orthonormal_columns():
    Q = np.linalg.qr(np.random.default_rng(0).standard_normal((8, 5)))[0]
    for k in range(1, 6):
        assert rip_exact(Q, k).delta_k == pytest.approx(0.0, abs=1e-12)


def test_rip_duplicate_columns():
    G = np.eye(4)[:, [0, 1, 1, 2]]
    rep = rip_exact(G, 2)
    assert rep.delta_k == pytest.approx(1.0)
    assert rep.extremal_support == (1, 2)
    assert rep.method == "exact_enumeration"


@pytest.mark.parametrize("seed", range(10))
def test_rip_matches_pairwise_oracle(seed):
    G = gen_matrix(6, 10, rng=RngStream(seed))
    assert rip_exact(G, 2).delta_k == pytest.approx(rip_pairwise(G.entries), abs=1e-10)


@given(seed=st.integers(0, 2**31), n=st.integers(3, 9))
@settings(max_examples=25, deadline=None)
def test_rip_monotone_in_k(seed, n):
    G = gen_matrix(4, n, rng=RngStream(seed))
    deltas = [rip_exact(G, k).delta_k for k in range(1, n + 1)]
    assert all(a <= b + 1e-12 for a, b in zip(deltas, deltas[1:]))


def test_rip_cap_refuses():
    with pytest.raises(ValueError, match="cap"):
        rip_exact(np.ones((2, 60)), 10)


@pytest.mark.parametrize("n", [10, 20])
def test_complement_frame_exact_deltas(n):
    G = complement_frame(n, RngStream(1))
    for t in (1, 2, 3):
        assert rip_exact(G, t).delta_k == pytest.approx(t / n, abs=1e-12)


def test_monte_carlo_lower_bounds_exact():
    G = gen_matrix(20, 40, rng=RngStream(3))
    exact = rip_exact(G, 3).delta_k
    mc = rip_monte_carlo(G, 3, 10_000, RngStream(4))
    assert mc.delta_k <= exact + 1e-12
    assert mc.method == "monte_carlo_lower_bound"
    full = rip_monte_carlo(G, 2, 10**6, RngStream(0))
    assert full.delta_k == pytest.approx(rip_exact(G, 2).delta_k, abs=1e-14)
    Q = np.linalg.qr(np.random.default_rng(1).standard_normal((8, 5)))[0]
    assert rip_monte_carlo(Q, 3, 1).delta_k == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        rip_monte_carlo(G, 2, 0)


# -- theory constants ---------------------------------------------------------

def test_cs_at_zero():
    expected = math.sqrt(2) * ((1 + 1 / math.sqrt(2)) / (1 - 1 / math.sqrt(2)) + 1)
    assert compute_cs(0.0, 0.0) == pytest.approx(expected)
    assert compute_cs(0.0, 0.0) == pytest.approx(9.657, abs=1e-3)


def test_cs_admissible_point():
    val = compute_cs(1 / 7, 3 / 14)
    assert math.isfinite(val) and val > compute_cs(0, 0)


def test_cs_pole():
    d2 = 0.1
    edge = 1 - (1 + d2) / 2
    assert compute_cs(d2, edge - 1e-9) > 1e4
    with pytest.raises(DomainError):
        compute_cs(d2, edge + 1e-9)
    with pytest.raises(DomainError):
        compute_cs(-0.1, 0.0)


@given(a=st.floats(0, 0.2), b=st.floats(0, 0.2), da=st.floats(0, 0.05), db=st.floats(0, 0.05))
def test_cs_monotone(a, b, da, db):
    assert compute_cs(a + da, b + db) >= compute_cs(a, b) - 1e-12


def test_epsilon0_golden():
    ref = epsilon0_rationalized(0.1, 2.0, 9.657, 200)
    tc = compute_epsilon0(0.1, 2.0, 9.657, 200)
    assert (tc.d1, tc.d2, tc.epsilon0) == pytest.approx(ref, rel=1e-12)
    assert tc.d1 == pytest.approx(GOLDEN_D1, rel=1e-12)
    assert tc.d2 == pytest.approx(GOLDEN_D2, rel=1e-12)
    assert tc.epsilon0 == pytest.approx(GOLDEN_EPS0, rel=1e-12)


def test_epsilon0_limit():
    tc = compute_epsilon0(0.1, 2.0, 9.657, 10**300)
    assert tc.epsilon0 * math.sqrt(2 * math.log(10**300)) == pytest.approx(1 / (2 * tc.d2), rel=0.1)
    big = [compute_epsilon0(0.1, 2.0, 9.657, 10**e) for e in (50, 150, 300)]
    gaps = [abs(t.epsilon0 * math.sqrt(2 * math.log(t.n)) - 1 / (2 * t.d2)) for t in big]
    assert gaps[0] > gaps[1] > gaps[2]


def test_d_constants_increase_with_c():
    # d1 and d2 grow with C = n/m (see the ledger: this corrects a stated direction)
    cs = [compute_epsilon0(0.1, C, 9.657, 200) for C in (1.5, 2.0, 4.0)]
    assert cs[0].d1 < cs[1].d1 < cs[2].d1
    assert cs[0].d2 < cs[1].d2 < cs[2].d2
    assert cs[0].epsilon0 > cs[1].epsilon0 > cs[2].epsilon0


@pytest.mark.parametrize("C,alpha", [(1.0, 0.1), (0.5, 0.1), (2.0, 0.0), (2.0, 1.0)])
def test_epsilon0_domain(C, alpha):
    with pytest.raises(DomainError):
        compute_epsilon0(alpha, C, 9.657, 200)


# -- null space -----------------------------------------------------------------

def test_null_space_block_identity():
    G = np.hstack([np.eye(3), np.zeros((3, 2))])
    A = null_space_basis(G).A
    assert A.shape == (5, 2)
    assert np.max(np.abs(G @ A)) == 0.0 or np.max(np.abs(G @ A)) < 1e-15
    np.testing.assert_allclose(np.abs(A[3:]) @ np.abs(A[3:]).T, np.eye(2), atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_null_space_against_gram_schmidt(seed):
    G = gen_matrix(4, 6, rng=RngStream(seed))
    A = null_space_basis(G).A
    B = gram_schmidt_complement(G.entries)
    scale = np.max(np.abs(G.entries)) * np.max(np.abs(A))
    assert np.max(np.abs(G.entries @ A)) <= 1e-10 * scale
    # same subspace: projectors agree
    np.testing.assert_allclose(A @ A.T, B @ B.T, atol=1e-10)
    assert np.linalg.matrix_rank(A) == 2


def test_null_space_rank_deficient():
    with pytest.raises(ValueError):
        null_space_basis(np.ones((2, 5)))


def _noisy(seed, m=20, n=40, k=3, sigma=0.05):
    G = gen_matrix(m, n, rng=RngStream(seed, 0))
    x = gen_signal(n, k, RngStream(seed, 1))
    y, e = gen_measurement(G, x, OutputGaussian(sigma), RngStream(seed, 2))
    return G, x, y, e


def test_null_space_equivalence_noiseless():
    G, x, y, _ = _noisy(0, sigma=0.0)
    sol = basis_pursuit(G, y)
    assert verify_null_space_equivalence(G, y, x.dense(), sol) <= 1e-8


@pytest.mark.parametrize("seed", range(5))
def test_null_space_equivalence_noisy(seed):
    G, x, y, e = _noisy(seed)
    z = x.dense() + min_norm_noise(G, e)
    sol = basis_pursuit(G, y)
    assert verify_null_space_equivalence(G, y, z, sol) <= 1e-6


def test_null_space_equivalence_negative_control():
    G, x, y, e = _noisy(1)
    z = x.dense() + min_norm_noise(G, e)
    sol = basis_pursuit(G, y)
    from dataclasses import replace

    bad = replace(sol, beta=sol.beta + G.entries[0])
    assert verify_null_space_equivalence(G, y, z, bad) > 0.1
    with pytest.raises(ValueError):
        verify_null_space_equivalence(G, y + 1.0, z, sol)


# -- minimum-norm noise -------------------------------------------------------------

def test_min_norm_zero():
    G = gen_matrix(5, 10, rng=RngStream(0))
    assert not min_norm_noise(G, np.zeros(5)).any()
    rep = check_min_norm_bounds(G, np.zeros(5), np.zeros(10), 0.1)
    assert rep.linf_ok and rep.l1_ok


def test_min_norm_orthonormal_rows():
    Q = np.linalg.qr(np.random.default_rng(2).standard_normal((9, 4)))[0].T
    e = np.arange(4.0)
    np.testing.assert_allclose(min_norm_noise(Q, e), Q.T @ e, atol=1e-12)


def test_min_norm_is_minimal():
    G = gen_matrix(4, 8, rng=RngStream(5))
    e = RngStream(6).generator().standard_normal(4)
    w = min_norm_noise(G, e)
    A = null_space_basis(G).A
    assert np.max(np.abs(G.entries @ w - e)) <= 1e-8 * np.max(np.abs(e))
    assert np.max(np.abs(A.T @ w)) <= 1e-8
    rng = np.random.default_rng(7)
    for _ in range(100):
        alt = w + A @ rng.standard_normal(A.shape[1])
        assert np.linalg.norm(w) <= np.linalg.norm(alt)


@given(seed=st.integers(0, 2**31), m=st.integers(1, 12), extra=st.integers(1, 12))
@settings(max_examples=30, deadline=None)
def test_min_norm_in_row_space(seed, m, extra):
    G = gen_matrix(m, m + extra, rng=RngStream(seed))
    e = RngStream(seed, 1).generator().standard_normal(m)
    w = min_norm_noise(G, e)
    A = null_space_basis(G).A
    assert np.max(np.abs(A.T @ w)) <= 1e-8 * max(1.0, np.max(np.abs(w)))


def test_min_norm_bound_pass_rate_pilot():
    # smaller pilot of the (200, 100) acceptance check
    hits_inf = hits_1 = 0
    for seed in range(30):
        G, _, _, e = _noisy(seed, m=100, n=200, k=1, sigma=0.1)
        rep = check_min_norm_bounds(G, e, min_norm_noise(G, e), 0.1)
        hits_inf += rep.linf_ok
        hits_1 += rep.l1_ok
    assert hits_inf >= 27 and hits_1 >= 29


# -- empirical gamma0 ------------------------------------------------------------------

def _gamma_instance(seed, n=64):
    G = gen_matrix(n // 2, n, rng=RngStream(seed, 0))
    x = gen_signal(n, n // 10, RngStream(seed, 1))
    w = RngStream(seed, 3).generator().uniform(-1, 1, n)
    return G, x, w / np.max(np.abs(w))


def test_gamma0_requires_unit_direction():
    G, x, w = _gamma_instance(0)
    with pytest.raises(ValueError):
        empirical_gamma0(G, x, np.zeros_like(w))
    with pytest.raises(ValueError):
        empirical_gamma0(G, x, 2 * w)


def test_gamma0_is_a_transition():
    G, x, w = _gamma_instance(1)
    est = empirical_gamma0(G, x, w)
    assert not est.flagged and est.value > 0
    ok = tbp(G, G.entries @ (x.dense() + 0.999 * est.value * w), truth=x)
    bad = tbp(G, G.entries @ (x.dense() + est.value * (1 + 1e-6) * w), truth=x)
    assert ok.n_miss == 0 and bad.n_miss > 0


@pytest.mark.parametrize("c", [0.25, 3.0])
def test_gamma0_scales_with_amplitude(c):
    G, x, w = _gamma_instance(2)
    base = empirical_gamma0(G, x, w).value
    scaled = empirical_gamma0(G, x.scaled(c), w).value
    assert scaled == pytest.approx(c * base, rel=1e-6)


def test_gamma0_precondition():
    G = gen_matrix(5, 40, rng=RngStream(0))
    x = gen_signal(40, 5, RngStream(1))
    w = np.ones(40)
    with pytest.raises(ValueError, match="noiseless"):
        empirical_gamma0(G, x, w)


def test_gamma0_flag_at_smallest_bracket():
    # an off-support entry of exactly x_min/2 survives the threshold at any eps > 0
    G = np.eye(3)
    x = gen_signal(3, 1, support=[0], signs=[1])
    w = np.array([-1.0, 0.0, 0.0])
    est = empirical_gamma0(G, x.scaled(2.0**-22), w)
    assert est.flagged and est.value == 0.0


# -- corollary bound -----------------------------------------------------------------

def test_corollary_exact_recovery_passes():
    G, x, y, _ = _noisy(3, sigma=0.0)
    rep = tbp(G, y, truth=x)
    for eps in (0.0, 0.1, 0.49):
        assert corollary_bound_check(rep, 9.657, 0.1, eps)


def test_corollary_small_eps_with_miss_fails():
    G, x, y, _ = _noisy(3, sigma=0.0)
    rep = tbp(G, np.zeros_like(y), truth=x)
    assert rep.n_miss > 0
    assert not corollary_bound_check(rep, 9.657, 0.1, 1e-6)


def test_corollary_domain():
    G, x, y, _ = _noisy(3, sigma=0.0)
    rep = tbp(G, y, truth=x)
    with pytest.raises(DomainError):
        corollary_bound_check(rep, 9.657, 0.1, 0.5)


def test_corollary_forms_agree_at_linear_sparsity():
    n, alpha, cs, eps = 200, 0.1, 9.657, 0.05
    lhs = n / alpha * (2 * cs * eps / (1 - 2 * eps)) ** 2
    assert corollary_bound(n, alpha * n, cs, eps) == pytest.approx(lhs)


def test_corollary_exact_rip_instances():
    n, k, eps = 20, 1, 1e-3
    for seed in range(10):
        G = complement_frame(n, RngStream(seed, 0))
        cs = compute_cs(rip_exact(G, 2 * k).delta_k, rip_exact(G, 3 * k).delta_k)
        x = gen_signal(n, k, RngStream(seed, 1))
        w = RngStream(seed, 2).generator().uniform(-eps, eps, n)
        y, _ = gen_measurement(G, x, InputDeterministic(w, eps), 0)
        assert corollary_bound_check(tbp(G, y, truth=x), cs, k / n, eps, k=k)
