import numpy as np
import pytest
from hypothesis import given, strategies as st

from hymtorus import ContractError, ShapeError, SolvabilityError, TorusGeometry
from hymtorus.generators import bandlimited


def fd4(f, h, axis):
    # fourth-order centred difference
    return (-np.roll(f, -2, axis) + 8 * np.roll(f, -1, axis) - 8 * np.roll(f, 1, axis) + np.roll(f, 2, axis)) / (12 * h)


def test_rejects_bad_grids():
    with pytest.raises(ContractError):
        TorusGeometry(1, (7, 8), (1, 1))
    with pytest.raises(ContractError):
        TorusGeometry(3, (8,) * 6, (1,) * 6)
    with pytest.raises(ContractError):
        TorusGeometry(1, (8, 8), (1, -1))
    with pytest.raises(ContractError):
        TorusGeometry(1, (8, 8, 8), (1, 1, 1))


def test_defaults_and_volume():
    assert TorusGeometry.square(1).dims == (64, 64)
    assert TorusGeometry.square(2).dims == (16,) * 4
    g = TorusGeometry(2, (8, 8, 10, 8), (1.0, 2.0, 0.5, 1.5))
    assert g.volume == pytest.approx(4 * 1.5)
    assert g.integrate(np.ones(g.dims)) == pytest.approx(g.volume, rel=1e-15)


def test_derivative_of_constant(t2):
    for kind in ("d", "dbar"):
        assert np.abs(t2.derivative(np.full(t2.dims, 3.0), 1, kind)).max() < 1e-14


def test_derivative_fourier_mode(t2_rect):
    g = t2_rect
    x, y = g.coords()
    L1 = g.periods[0]
    f = np.exp(2j * np.pi * x / L1) + 0 * y
    np.testing.assert_allclose(g.derivative(f, 1, "d"), (np.pi * 1j / L1) * f, atol=1e-12)
    np.testing.assert_allclose(g.derivative(f, 1, "dbar"), (np.pi * 1j / L1) * f, atol=1e-12)
    h = np.exp(2j * np.pi * y / g.periods[1]) + 0 * x
    # d/dy enters d with -i/2 and dbar with +i/2
    k = 2 * np.pi / g.periods[1]
    np.testing.assert_allclose(g.derivative(h, 1, "d"), 0.5 * k * h, atol=1e-12)
    np.testing.assert_allclose(g.derivative(h, 1, "dbar"), -0.5 * k * h, atol=1e-12)


def test_derivative_matches_finite_differences():
    errs = []
    for N in (32, 64):
        g = TorusGeometry.square(1, N)
        f = bandlimited(TorusGeometry.square(1, 64), seed=3, modes=2)[:: 64 // N, :: 64 // N]
        hx, hy = g.spacing
        fd = 0.5 * (fd4(f, hx, 0) - 1j * fd4(f, hy, 1))
        errs.append(np.abs(g.derivative(f, 1, "d") - fd).max())
    # fourth order: halving h divides the error by about 16
    assert errs[1] < errs[0] / 12


def test_derivative_index_and_kind(t4):
    f = np.zeros(t4.dims)
    with pytest.raises(IndexError):
        t4.derivative(f, 3)
    with pytest.raises(ValueError):
        t4.derivative(f, 1, "z")
    with pytest.raises(ShapeError):
        t4.derivative(np.zeros((8, 8)), 1)


def test_real_fields_stay_real(t2):
    f = bandlimited(t2, seed=1)
    assert np.isrealobj(t2.laplacian(f))
    d = t2.derivative(f, 1, "d")
    # d f and dbar f of a real f are complex conjugates, also at the Nyquist mode
    np.testing.assert_allclose(np.conj(d), t2.derivative(f, 1, "dbar"), atol=1e-13)


def test_laplacian_examples(t2_rect):
    g = t2_rect
    x, y = g.coords()
    L1 = g.periods[0]
    assert np.abs(g.laplacian(np.full(g.dims, 2.0))).max() < 1e-13
    f = np.cos(2 * np.pi * x / L1) + 0 * y
    np.testing.assert_allclose(g.laplacian(f), -(np.pi**2 / L1**2) * f, atol=1e-11)


def test_laplacian_is_d_dbar(t4):
    f = bandlimited(t4, seed=2, real=False)
    lap = sum(t4.derivative(t4.derivative(f, k, "dbar"), k, "d") for k in (1, 2))
    np.testing.assert_allclose(t4.laplacian(f), lap, atol=1e-10)


@given(seed=st.integers(0, 2**32 - 1))
def test_laplacian_integrates_to_zero(seed):
    g = TorusGeometry.square(1, 32)
    f = bandlimited(g, seed=seed, modes=4)
    assert abs(g.integrate(g.laplacian(f))) <= 1e-12 * np.abs(f).max() * g.volume * 100


@given(seed=st.integers(0, 2**32 - 1))
def test_laplacian_self_adjoint_and_negative(seed):
    g = TorusGeometry(1, (16, 24), (1.0, 1.5))
    rng = np.random.default_rng(seed)
    f = bandlimited(g, rng, modes=4, real=False)
    h = bandlimited(g, rng, modes=4, real=False)
    lhs = g.integrate(g.laplacian(f) * np.conj(h))
    rhs = g.integrate(f * np.conj(g.laplacian(h)))
    assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), 1.0)
    fr = f.real
    assert g.integrate(g.laplacian(fr) * fr) <= 1e-12


def test_poisson_examples(t2_rect):
    g = t2_rect
    x, y = g.coords()
    L1 = g.periods[0]
    assert np.abs(g.poisson_solve(np.zeros(g.dims))).max() == 0
    rhs = np.cos(2 * np.pi * x / L1) + 0 * y
    np.testing.assert_allclose(g.poisson_solve(rhs), -(L1**2 / np.pi**2) * rhs, atol=1e-13)


@given(seed=st.integers(0, 2**32 - 1))
def test_poisson_round_trip(seed):
    g = TorusGeometry.square(1, 32)
    f = bandlimited(g, seed=seed, modes=5, mean_zero=True)
    assert np.abs(g.poisson_solve(g.laplacian(f)) - f).max() < 1e-10
    assert abs(g.integrate(g.poisson_solve(g.laplacian(f)))) < 1e-14


def test_poisson_rejects_non_mean_zero(t2):
    with pytest.raises(SolvabilityError) as exc:
        t2.poisson_solve(np.ones(t2.dims))
    assert exc.value.integral == pytest.approx(t2.volume)


def test_poisson_on_t4(t4):
    f = bandlimited(t4, seed=5, modes=2, mean_zero=True)
    np.testing.assert_allclose(t4.poisson_solve(t4.laplacian(f)), f, atol=1e-10)


def test_integrate_examples(t2_rect):
    g = t2_rect
    x, y = g.coords()
    assert abs(g.integrate(np.exp(2j * np.pi * (x / g.periods[0] + 3 * y / g.periods[1])))) < 1e-14
    assert g.integrate_omega_n(np.ones(g.dims)) == pytest.approx(g.volume)
    t4 = TorusGeometry.square(2, 8)
    assert t4.integrate_omega_n(np.ones(t4.dims)) == pytest.approx(2 * t4.volume)


@given(seed=st.integers(0, 2**32 - 1))
def test_integrate_matches_parseval(seed):
    g = TorusGeometry(1, (16, 20), (1.0, 2.0))
    rng = np.random.default_rng(seed)
    f = bandlimited(g, rng, modes=4, real=False)
    h = bandlimited(g, rng, modes=4, real=False)
    direct = g.integrate(f * np.conj(h))
    F, H = g.fft(f), g.fft(h)
    parseval = np.sum(F * np.conj(H)) / g.size**2 * g.volume
    assert abs(direct - parseval) <= 1e-12 * abs(parseval) + 1e-15


def test_shifted_inverse(t2):
    f = bandlimited(t2, seed=8)
    u = t2.shifted_inverse(-t2.laplacian(f) + 2.5 * f, 2.5)
    np.testing.assert_allclose(u, f, atol=1e-12)
    with pytest.raises(ContractError):
        t2.shifted_inverse(f, 0.0)


def test_gradient_stacks_components(t4):
    f = bandlimited(t4, seed=4, real=False)
    grad = t4.gradient(f, "dbar")
    assert grad.shape == t4.dims + (2,)
    np.testing.assert_allclose(grad[..., 1], t4.derivative(f, 2, "dbar"), atol=1e-14)
