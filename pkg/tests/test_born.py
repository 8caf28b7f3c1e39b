import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lsborn import born, lippmann
from lsborn.errors import ValidationError
from lsborn.problem import ConstantMedium, WaveProblem


def diagonal(d):
    d = np.asarray(d, dtype=complex)
    return lambda v: d * v


def test_geometric_series_on_diagonal():
    d = np.array([0.5, -0.25, 0.1j])
    psi = np.array([1.0, 2.0, 3.0])
    tr = born.iterate(diagonal(d), psi, tol=1e-14, max_iter=200, reference=psi / (1 - d))
    assert tr.verdict == born.CONVERGED
    np.testing.assert_allclose(tr.solution, psi / (1 - d), rtol=1e-13)
    # monitor is |A^n psi| exactly
    expected = [np.linalg.norm(d**k * psi) for k in tr.n]
    np.testing.assert_allclose(tr.monitor, expected, rtol=1e-12)
    assert tr.recursion_gap < 1e-14
    assert tr.final_residual <= 1e-13 * np.linalg.norm(psi)
    assert born.suzuki_verdict(tr) == born.CONVERGED


def test_divergence_by_guard_and_by_growth():
    tr = born.iterate(diagonal([3.0]), np.array([1.0]), max_iter=100)
    assert tr.verdict == born.DIVERGED and "guard" in tr.diagnostic
    slow = born.iterate(diagonal([1.01]), np.array([1.0]), max_iter=100, window=20)
    assert slow.verdict == born.DIVERGED and "grew" in slow.diagnostic
    assert slow.iterations == 20


def test_unit_modulus_is_undecided():
    tr = born.iterate(diagonal([1j]), np.array([1.0]), max_iter=50)
    assert tr.verdict == born.UNDECIDED
    assert tr.iterations == 50


def test_zero_rhs_converges_in_one_step():
    tr = born.iterate(diagonal([5.0, 2.0]), np.zeros(2))
    assert tr.verdict == born.CONVERGED and tr.iterations == 1


def test_record_every_and_advance():
    d = np.array([0.9, 0.5j], dtype=complex)
    psi = np.array([1.0, 1.0], dtype=complex)

    def advance(v, s, steps):
        for _ in range(steps):
            v *= d
            s += v

    tr = born.iterate(diagonal(d), psi, advance=advance, record_every=10, tol=1e-12, max_iter=10_000)
    assert tr.verdict == born.CONVERGED
    assert np.all(tr.n % 10 == 0)
    np.testing.assert_allclose(tr.solution, psi / (1 - d), rtol=1e-11)


@pytest.mark.parametrize("kw", [dict(max_iter=0), dict(tol=0.0), dict(record_every=0)])
def test_iterate_validation(kw):
    with pytest.raises(ValidationError):
        born.iterate(diagonal([0.1]), np.ones(1), **kw)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_suzuki_equivalence_on_random_diagonals(seed):
    rng = np.random.default_rng(seed)
    n = 10
    mod = rng.uniform(0.05, 1.6, n)
    mod[np.abs(mod - 1.0) < 0.2] += 0.4  # keep clear of the unit circle so the budget decides
    lam = mod * np.exp(1j * rng.uniform(0, 2 * np.pi, n))
    psi = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    psi[rng.random(n) < 0.4] = 0.0
    expect_converged = not np.any(psi[np.abs(lam) >= 1] != 0)
    limit = np.where(psi != 0, psi / (1 - lam), 0)
    tr = born.iterate(diagonal(lam), psi, max_iter=5000, tol=1e-13)
    assert (tr.verdict == born.CONVERGED) == expect_converged
    if expect_converged:
        np.testing.assert_allclose(tr.solution, limit, rtol=0, atol=1e-10 * max(1.0, np.abs(limit).max()))
    else:
        assert tr.verdict == born.DIVERGED


def test_rate_estimate_normal_operator():
    lam = np.array([0.6, 0.3, -0.2, 0.1, 0.05])
    psi = np.ones(5)
    r0 = 0.6
    est = born.rate_estimate(diagonal(lam), psi)
    assert est.spr0 == pytest.approx(r0, rel=1e-12)
    assert est.C == pytest.approx(r0 / (1 - r0), rel=1e-8)
    assert est.breakdown


def test_rate_estimate_sees_only_the_krylov_space():
    # the component on eigenvalue 2 is absent from psi, so it does not count
    lam = np.array([2.0, 0.5, 0.25])
    est = born.rate_estimate(diagonal(lam), np.array([0.0, 1.0, 1.0]))
    assert est.spr0 == pytest.approx(0.5, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_tail_bound_holds_for_random_normal_operators(seed):
    rng = np.random.default_rng(seed)
    lam = rng.uniform(0.0, 0.9, 8)
    psi = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    rate = born.rate_estimate(diagonal(lam), psi)
    assert rate.C == pytest.approx(lam.max() / (1 - lam.max()), rel=1e-8)
    tr = born.iterate(diagonal(lam), psi, tol=1e-12, max_iter=2000, reference=psi / (1 - lam))
    report = born.tail_bound_check(tr, rate)
    assert report.passed
    assert report.max_ratio <= rate.C * (1 + 1e-6)


def test_tail_bound_preconditions():
    tr = born.iterate(diagonal([2.0]), np.array([1.0]), max_iter=40)
    rate = born.RateEstimate(2.0, 2.0, 1, True)
    with pytest.raises(ValidationError):
        born.tail_bound_check(tr, rate)
    ok = born.iterate(diagonal([0.1]), np.array([1.0]))
    with pytest.raises(ValidationError):
        born.tail_bound_check(ok, rate)


def test_born_on_weak_scatterer_matches_direct():
    op = lippmann.assemble(WaveProblem(1.0, n=128), ConstantMedium(1.0))
    psi = lippmann.incident_rhs(op)
    u = lippmann.direct_solve(op)
    tr = born.iterate(op.fast_matvec, psi, tol=1e-12, reference=u)
    assert tr.verdict == born.CONVERGED
    assert np.linalg.norm(tr.solution - u) <= 1e-10 * np.linalg.norm(u)
    rate = born.rate_estimate(op.fast_matvec, psi)
    assert rate.spr0 < 1
    assert born.tail_bound_check(tr, rate).passed


def test_krylov_radius_scales_with_q0():
    base = None
    for q0 in (1.0, 2.0, 5.0):
        op = lippmann.assemble(WaveProblem(1.0, n=128), ConstantMedium(q0))
        spr = born.rate_estimate(op.fast_matvec, lippmann.incident_rhs(op)).spr0
        base = spr if base is None else base
        assert spr / base == pytest.approx(q0, rel=1e-6)
