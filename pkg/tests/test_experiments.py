import numpy as np
import pytest

from hymtorus import BracketError, ContractError, TorusGeometry, Q_of_t, build_cusp_profile, counterexample_pipeline
from hymtorus import nonexistence_demo, scalar_line_curvature
from hymtorus.experiments import torus_distance
from hymtorus.generators import bandlimited


@pytest.fixture(scope="module")
def artifacts():
    return counterexample_pipeline(TorusGeometry.square(1, 64))


def test_torus_distance_wraps():
    g = TorusGeometry.square(1, 8)
    d = torus_distance(g, (0, 0))
    assert d[0, 0] == 0
    assert d[7, 0] == pytest.approx(0.125)
    assert d[4, 4] == pytest.approx(np.hypot(0.5, 0.5))
    with pytest.raises(ContractError):
        torus_distance(g, (0,))


def test_cusp_profile_examples():
    g = TorusGeometry.square(1, 32)
    f = build_cusp_profile(g, point=(3, 5), amplitude=2.0)
    assert f[3, 5] == 0 and f.min() == 0
    assert f[3 + 16, 5 + 16] == pytest.approx(2.0 * np.exp(-1 / np.hypot(0.5, 0.5)))
    with pytest.raises(ContractError):
        build_cusp_profile(g, amplitude=0.0)
    with pytest.raises(ContractError):
        build_cusp_profile(TorusGeometry.square(2, 8))


def test_Q_examples():
    g = TorusGeometry.square(1, 32)
    assert Q_of_t(np.full(g.dims, 0.3), 1.0, g) == 0.0
    # Q vanishes on a mean-zero Laplacian divided by a constant
    f = bandlimited(g, seed=0) * 1e-3
    assert abs(Q_of_t(np.zeros(g.dims), 0.5, g, lap=g.laplacian(f))) < 1e-15
    with pytest.raises(ContractError):
        Q_of_t(f, 0.0, g)


def test_Q_is_monotone_with_limits(artifacts):
    ts, qs = zip(*artifacts.Q_samples)
    assert all(np.diff(qs) < 0)
    assert qs[0] > artifacts.target > qs[-1]
    g = TorusGeometry.square(1, 64)
    assert abs(Q_of_t(artifacts.f, 50.0, g)) < 1e-15


def test_counterexample_properties(artifacts):
    g = TorusGeometry.square(1, 64)
    a = artifacts
    assert a.bracket[0] < a.t0 < a.bracket[1]
    assert a.G.min() < 0 < a.G.max()
    assert a.residual1 <= 1e-4 and a.residual2 <= 1e-4
    assert np.abs(a.phi1 - a.phi2).max() >= a.t0
    np.testing.assert_allclose(a.phi2 - a.phi1, a.shift, atol=1e-13)
    # both really solve the equation at F0
    for phi in (a.phi1, a.phi2):
        assert np.abs(scalar_line_curvature(phi, a.F0, g)[1] - a.G).max() <= 1e-8
    assert abs(Q_of_t(a.f, a.t0, g) - a.target) <= 1e-12 * a.target
    assert "t0 =" in a.summary()


def test_counterexample_doubles_small_amplitude():
    a = counterexample_pipeline(TorusGeometry.square(1, 32), amplitude=1e-4)
    assert a.amplitude_doublings > 0
    assert a.amplitude == pytest.approx(1e-4 * 2**a.amplitude_doublings)
    assert a.G.min() < 0 < a.G.max()


def test_counterexample_bracket_failure():
    with pytest.raises(BracketError) as exc:
        counterexample_pipeline(TorusGeometry.square(1, 32), amplitude=1e-6, max_doublings=0)
    assert exc.value.samples


def test_counterexample_contracts():
    g = TorusGeometry.square(1, 16)
    with pytest.raises(ContractError):
        counterexample_pipeline(g, F0=0.0)
    with pytest.raises(ContractError):
        counterexample_pipeline(g, t_lo=2.0, t_hi=1.0)


def test_nonexistence_examples():
    g = TorusGeometry.square(1, 32)
    rep = nonexistence_demo(-np.ones(g.dims), g)
    assert rep.obstructed and rep.integral == pytest.approx(-g.volume)
    # zero integral: silent
    rep = nonexistence_demo(g.laplacian(bandlimited(g, seed=1)), g)
    assert not rep.obstructed and "vanishes" in rep.message
    rep = nonexistence_demo(np.ones(g.dims), g)
    assert not rep.obstructed


def test_nonexistence_silent_on_counterexample_data(artifacts):
    # F0 > 0 data sits outside the trivial-bundle obstruction; its integral is positive
    g = TorusGeometry.square(1, 64)
    assert not nonexistence_demo(artifacts.G, g).obstructed


def test_nonexistence_solver_run_fails():
    g = TorusGeometry.square(1, 32)
    rep = nonexistence_demo(-np.ones(g.dims), g, run_solver=True)
    assert rep.solve_report is not None and not rep.solve_report.converged
