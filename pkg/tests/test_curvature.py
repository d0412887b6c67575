import numpy as np
import pytest
from hypothesis import given, strategies as st

from hymtorus import (
    BundleData,
    ContractError,
    CurvatureField,
    HYMTarget,
    MatrixField,
    PositivityError,
    ShapeError,
    TorusGeometry,
    connection_form,
    curvature_from_metric,
    hym_endomorphism,
    hym_residual,
    kahler_curvature_from_potential,
    linearized_apply,
    scalar_line_curvature,
)
from hymtorus.generators import bandlimited, hermitian_field, positive_field, synthetic_bundle_curvature
from hymtorus.matrix import dagger, inverse, pairing, product
from oracles import finite_difference_linearization, kw_oracle, phi_product_rule

G = TorusGeometry.square(1, 32)
G64 = TorusGeometry.square(1, 64)
seeds = st.integers(0, 2**32 - 1)


def test_bundle_contracts():
    with pytest.raises(ContractError):
        BundleData(0)
    with pytest.raises(ContractError):
        BundleData(2, F0=-1.0)
    with pytest.raises(ContractError):
        HYMTarget(MatrixField.identity(G, 2, scale=-1.0))
    with pytest.raises(ContractError):
        HYMTarget(MatrixField(G, np.ones(G.dims + (2, 2)) * 1j))


def test_identity_metric_examples():
    bundle = BundleData(2, F0=3.0)
    one = MatrixField.identity(G, 2)
    assert np.abs(connection_form(one).data).max() == 0
    np.testing.assert_allclose(hym_endomorphism(one, bundle).data, 3.0 * one.data, atol=1e-14)
    c = MatrixField.identity(G, 2, scale=1.7)
    np.testing.assert_allclose(hym_endomorphism(c, bundle).data, 3.0 * 1.7 * one.data, atol=1e-13)


def test_conformal_metric_example():
    # H = e^{-phi} Id has T = -d phi Id and Phi = (F0 + Delta phi) e^{-phi} Id
    # e^{-phi} is not band-limited, so the two sides agree to discretization error
    phi = bandlimited(G64, seed=0, modes=2)
    H = MatrixField.scalar(G64, np.exp(-phi), 2)
    T = connection_form(H)
    np.testing.assert_allclose(T.data[..., 0, 0, 0], -G64.derivative(phi, 1, "d"), atol=1e-11)
    got = hym_endomorphism(H, BundleData(2, F0=2.0)).data[..., 1, 1].real
    np.testing.assert_allclose(got, kw_oracle(phi, 2.0, G64), atol=1e-10)
    s, Gphi = scalar_line_curvature(phi, 2.0, G64)
    np.testing.assert_allclose(Gphi, kw_oracle(phi, 2.0, G64), atol=1e-12)


def test_field_valued_F0():
    F0 = 2.0 + 0.5 * np.cos(2 * np.pi * G.coords()[0]) + 0 * G.coords()[1]
    out = hym_endomorphism(MatrixField.identity(G, 1), BundleData(1, F0=F0))
    np.testing.assert_allclose(out.data[..., 0, 0].real, F0)


@given(seed=seeds, r=st.integers(1, 3))
def test_representative_is_hermitian_and_matches_product_rule(seed, r):
    H = positive_field(G64, r, seed=seed, modes=2, amplitude=0.5)
    phi = hym_endomorphism(H, BundleData(r, F0=1.5))
    assert phi.hermitian
    np.testing.assert_array_equal(phi.data, dagger(phi.data))
    ref = phi_product_rule(G64, H.data, 1.5)
    assert np.abs(phi.data - ref).max() < 1e-8 * max(1.0, np.abs(ref).max())


@given(seed=seeds, r=st.integers(1, 3))
def test_trace_identity(seed, r):
    # Delta tr H = sum_k tr(d_k H H^{-1} dbar_k H) - tr(Phi - Omega0 H)
    F0 = 2.0
    H = positive_field(G, r, seed=seed, amplitude=0.6)
    phi = hym_endomorphism(H, BundleData(r, F0=F0))
    Hinv = inverse(H).data
    quad = sum(
        np.trace(G.derivative(H.data, k, "d", trailing=2) @ Hinv @ G.derivative(H.data, k, "dbar", trailing=2), axis1=-2, axis2=-1)
        for k in (1,)
    )
    lhs = G.laplacian(H.trace())
    rhs = quad - (phi.trace() - F0 * H.trace())
    assert np.abs(lhs - rhs).max() < 1e-10 * max(1.0, np.abs(lhs).max())


def test_connection_form_against_finite_differences():
    H = positive_field(G, 2, seed=4, modes=1, amplitude=0.4)
    T = connection_form(H).component(1).data
    ref = G.derivative(H.data, 1, "d", trailing=2) @ np.linalg.inv(H.data)
    np.testing.assert_allclose(T, ref, atol=1e-12)


def test_integrated_trace_is_nonnegative():
    # the integral of tr(Phi - Omega0 H) is the integral of sum_k tr(d_k H H^{-1} (d_k H)^*) >= 0
    for seed in range(5):
        H = positive_field(G, 2, seed=seed)
        phi = hym_endomorphism(H, BundleData(2, F0=1.0)) - MatrixField(G, H.data, hermitian=True)
        val = G.integrate(phi.trace()).real
        dH = G.derivative(H.data, 1, "d", trailing=2)
        quad = G.integrate(np.trace(dH @ inverse(H).data @ dagger(dH), axis1=-2, axis2=-1)).real
        assert val > 0
        assert val == pytest.approx(quad, rel=1e-12)


def test_residual_norms():
    bundle = BundleData(2, F0=12.0)
    H = positive_field(G, 2, seed=1, modes=1)
    target = HYMTarget(hym_endomorphism(H, bundle))
    res, sup, l2 = hym_residual(H, target, bundle)
    assert sup == 0 and l2 == 0
    res, sup, l2 = hym_residual(MatrixField.identity(G, 2), target, bundle)
    assert sup > 0 and l2 > 0
    with pytest.raises(ShapeError):
        hym_residual(MatrixField.identity(G, 3), target, bundle)


def test_positivity_is_enforced():
    bad = MatrixField.constant(G, np.diag([1.0, -1.0]))
    with pytest.raises(PositivityError):
        hym_endomorphism(bad, BundleData(2))
    with pytest.raises(ContractError):
        connection_form(MatrixField.constant(G, [[1, 1], [0, 1]]))


def test_linearization_at_identity_example():
    # L = -Delta + F0 at H = Id; a single Fourier mode is an eigenvector
    x, y = G.coords()
    mode = np.cos(2 * np.pi * (x + 2 * y))
    psi = MatrixField(G, mode[..., None, None] * np.array([[1, 1j], [-1j, 2]]), hermitian=True)
    one = MatrixField.identity(G, 2)
    out = linearized_apply(psi, one, MatrixField.identity(G, 2, scale=0.5))
    lam = 0.5 + 0.25 * (2 * np.pi) ** 2 * 5
    np.testing.assert_allclose(out.data, lam * psi.data, atol=1e-10)


@pytest.mark.parametrize("seed", range(4))
def test_linearization_matches_finite_differences(seed):
    F0 = 1.3
    rng = np.random.default_rng(seed)
    H = positive_field(G, 2, seed=rng, modes=1, amplitude=0.4)
    psi = MatrixField(G, hermitian_field(G, 2, seed=rng, modes=2), hermitian=True)
    omega1 = hym_endomorphism(H, BundleData(2, F0=F0)) @ inverse(H)
    got = linearized_apply(psi, H, omega1).data
    fd = finite_difference_linearization(G, H.data, psi.data, F0, 1e-5)
    assert np.abs(got - fd).max() <= 1e-6 * np.abs(fd).max()


@given(seed=seeds)
def test_linearization_self_adjoint_and_coercive_at_identity(seed):
    rng = np.random.default_rng(seed)
    a = MatrixField(G, hermitian_field(G, 2, seed=rng), hermitian=True)
    b = MatrixField(G, hermitian_field(G, 2, seed=rng), hermitian=True)
    one = MatrixField.identity(G, 2)
    omega = MatrixField.identity(G, 2, scale=0.7)
    La, Lb = linearized_apply(a, one, omega), linearized_apply(b, one, omega)
    assert abs(pairing(G, La, b) - pairing(G, a, Lb)) < 1e-10
    assert pairing(G, La, a).real >= 0.7 * pairing(G, a, a).real - 1e-10


def test_linearization_shape_contract():
    one = MatrixField.identity(G, 2)
    with pytest.raises(ShapeError):
        linearized_apply(MatrixField.identity(G, 3), one, one)


# --- curvature tensors on T^4 -------------------------------------------------

G4 = TorusGeometry.square(2, 8)


def test_flat_metric_has_zero_curvature():
    curv = curvature_from_metric(MatrixField.identity(G4, 2, scale=2.0))
    assert np.abs(curv.components).max() == 0
    kc = kahler_curvature_from_potential(np.full(G4.dims, 3.0), G4)
    assert np.abs(kc.components).max() == 0


def test_conformal_bundle_curvature_example():
    # h = e^{-phi} has R_{i j} = (d_i dbar_j phi) e^{-phi}, up to discretization error
    g = TorusGeometry.square(2, 16)
    phi = bandlimited(g, seed=2, modes=1, amplitude=0.3)
    curv = curvature_from_metric(MatrixField.scalar(g, np.exp(-phi), 1))
    for i in range(2):
        for j in range(2):
            ddphi = g.derivative(g.derivative(phi, i + 1, "d"), j + 1, "dbar")
            np.testing.assert_allclose(curv.components[..., i, j, 0, 0], ddphi * np.exp(-phi), atol=1e-6)


@pytest.mark.parametrize("seed", range(3))
def test_curvature_fields_are_symmetric(seed):
    curv = curvature_from_metric(positive_field(G4, 2, seed=seed, modes=1))
    assert curv.symmetry_defect() < 1e-13
    u = bandlimited(G4, seed=seed, modes=1, amplitude=0.01)
    kc = kahler_curvature_from_potential(u, G4)
    assert kc.symmetry_defect() < 1e-12


def test_curvature_field_contracts():
    R = synthetic_bundle_curvature(G4, 2, seed=0)
    h = MatrixField.identity(G4, 2).data
    CurvatureField("bundle", R, G4, metric=h)
    R[0, 0, 0, 0, 0, 1, 0, 1] += 1.0
    with pytest.raises(ContractError):
        CurvatureField("bundle", R, G4, metric=h)
    with pytest.raises(ContractError):
        CurvatureField("bundle", synthetic_bundle_curvature(G4, 2, seed=0), G4)
    with pytest.raises(ContractError):
        CurvatureField("twisted", R, G4, metric=h)
    with pytest.raises(ContractError):
        curvature_from_metric(MatrixField.identity(G, 2))
    with pytest.raises(PositivityError):
        kahler_curvature_from_potential(bandlimited(G4, seed=0, modes=2, amplitude=5.0), G4)


def test_scalar_line_curvature_rejects_complex():
    with pytest.raises(ContractError):
        scalar_line_curvature(np.full(G.dims, 1j), 1.0, G)
    s, Gphi = scalar_line_curvature(np.zeros(G.dims, dtype=complex), 2.0, G)
    assert np.all(s == 2.0) and np.all(Gphi == 2.0)
