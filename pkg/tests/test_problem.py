import math

import numpy as np
import pytest

from lsborn.errors import MediumError, ValidationError
from lsborn.problem import (
    ConstantMedium,
    Grid,
    PiecewiseConstantMedium,
    TabulatedMedium,
    WaveProblem,
    check_support,
    default_grid_size,
    make_grid,
    read_medium_csv,
    sample_medium,
)


@pytest.mark.parametrize("kw", [dict(k0=0.0), dict(k0=-1.0), dict(k0=math.inf), dict(k0=1.0, L=0.0),
                                dict(k0=1.0, khat=0), dict(k0=1.0, n=1), dict(k0=1.0, n=2.5)])
def test_problem_rejects_bad_input(kw):
    with pytest.raises(ValidationError):
        WaveProblem(**kw)


def test_default_grid_resolves_per_wavelength():
    assert WaveProblem(1.0).n == 256
    # kappa = 50 spans 8 wavelengths
    assert default_grid_size(50.0) == 2048
    assert WaveProblem(50.0).n >= 2048
    assert WaveProblem(2.0, L=3.0).kappa == 6.0


@pytest.mark.parametrize("rule", ["midpoint", "trapezoid"])
def test_grid_weights_integrate_constants_and_linears(rule):
    g = make_grid(WaveProblem(1.0, L=2.5, n=37), rule)
    assert g.n == 37
    assert g.length == pytest.approx(2.5, rel=1e-14)
    assert np.sum(g.weights * g.nodes) == pytest.approx(2.5**2 / 2, rel=1e-13)
    assert np.all(np.diff(g.nodes) > 0)


def test_midpoint_nodes():
    g = make_grid(WaveProblem(1.0, n=4))
    np.testing.assert_allclose(g.nodes, [0.125, 0.375, 0.625, 0.875])
    np.testing.assert_allclose(g.weights, 0.25)


def test_unknown_rule():
    with pytest.raises(ValidationError):
        make_grid(WaveProblem(1.0, n=8), "simpson")


def test_grid_is_read_only():
    g = make_grid(WaveProblem(1.0, n=8))
    with pytest.raises(ValueError):
        g.nodes[0] = 1.0


def test_grid_validation():
    with pytest.raises(ValidationError):
        Grid(np.array([0.2, 0.1]), np.array([0.5, 0.5]))
    with pytest.raises(ValidationError):
        Grid(np.array([0.1, 0.2]), np.array([0.5, 0.0]))


def test_constant_medium_reports_q0_exactly():
    g = make_grid(WaveProblem(1.0, n=16))
    q = sample_medium(ConstantMedium(0.3), g)
    assert np.all(q == 0.3)
    # pure and idempotent
    np.testing.assert_array_equal(q, sample_medium(ConstantMedium(0.3), g))


@pytest.mark.parametrize("q0", [-1.0, -2.0, math.nan])
def test_medium_contrast_bound(q0):
    with pytest.raises(MediumError):
        ConstantMedium(q0)


def test_medium_error_is_validation_error():
    assert issubclass(MediumError, ValidationError)


def test_piecewise_medium():
    m = PiecewiseConstantMedium((0.0, 0.5, 1.0), (1.0, 2.0))
    np.testing.assert_array_equal(m.evaluate(np.array([0.0, 0.25, 0.5, 0.75, 1.0])), [1, 1, 2, 2, 2])
    assert m.l2_norm(1.0) == pytest.approx(math.sqrt(0.5 * 1 + 0.5 * 4))
    with pytest.raises(MediumError):
        check_support(PiecewiseConstantMedium((0.0, 2.0), (1.0,)), 1.0)
    with pytest.raises(MediumError):
        PiecewiseConstantMedium((0.0, 1.0), (-1.5,))


def test_tabulated_medium_is_nodewise():
    g = make_grid(WaveProblem(1.0, n=5))
    m = TabulatedMedium(g.nodes.copy(), np.linspace(0, 1, 5))
    np.testing.assert_array_equal(sample_medium(m, g), np.linspace(0, 1, 5))
    with pytest.raises(MediumError):
        sample_medium(m, make_grid(WaveProblem(1.0, n=6)))


def test_read_medium_csv(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("x,q\n0.25,1.0\n0.75,2.0\n")
    m = read_medium_csv(p, 1.0)
    np.testing.assert_array_equal(m.q, [1.0, 2.0])
    bad = tmp_path / "bad.csv"
    bad.write_text("pos,val\n0.1,1\n")
    with pytest.raises(MediumError):
        read_medium_csv(bad, 1.0)
    out = tmp_path / "out.csv"
    out.write_text("x,q\n0.5,1\n1.5,1\n")
    with pytest.raises(MediumError):
        read_medium_csv(out, 1.0)
