"""Curvature operators on the model bundle ``E = L^{⊕r}`` over a flat torus.

The reference metric is ``h0 = h_L ⊗ Id`` where ``h_L`` has Hermitian-Yang-Mills
scalar ``F0 > 0``; hence ``Omega0 = S^{h0} = F0 · Id`` and the Chern connection
induced on ``End(E)`` is flat.  Any other metric is encoded by the endomorphism
``H = h · h0^{-1}``, a Hermitian positive matrix field, and its
Hermitian-Yang-Mills tensor by the representative ``Phi_H = S^h · H``.

Conventions (``g = delta``):

* ``T_i = (d_i H) · H^{-1}``               connection difference one-form
* ``d* A = - sum_k dbar_k A_k``            on (1,0)-forms
* ``Phi_H = Omega0 · H + (d* T) · H
          = Omega0 · H - Delta_g H + sum_k (d_k H) H^{-1} (dbar_k H)``

The second expression of ``Phi_H`` is the one evaluated: it is Hermitian
sample-by-sample instead of only up to discretization error.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .errors import ContractError, ShapeError
from .geometry import TorusGeometry
from .matrix import (
    POSITIVITY_FLOOR,
    MatrixField,
    OneFormMatrixField,
    _positivity_failure,
    dagger,
    hermitian_defect,
    hermitian_project,
    sup_norm,
)

__all__ = [
    "BundleData",
    "HYMTarget",
    "CurvatureField",
    "connection_form",
    "hym_endomorphism",
    "hym_residual",
    "linearized_apply",
    "scalar_line_curvature",
    "curvature_from_metric",
    "kahler_curvature_from_potential",
]

HERMITIAN_OUTPUT_RTOL = 1e-9


@dataclass
class BundleData:
    """Rank, reference HYM scalar ``F0`` (constant or positive field) and degree."""

    r: int
    F0: object = 1.0
    degree: int = 0

    def __post_init__(self):
        if self.r < 1:
            raise ContractError(f"rank must be positive, got {self.r}")
        F0 = np.asarray(self.F0, dtype=float)
        if not np.all(F0 > 0):
            raise ContractError("reference HYM scalar F0 must be positive everywhere")
        self.F0 = float(F0) if F0.ndim == 0 else F0

    def F0_field(self, geom):
        """``F0`` as a scalar field on ``geom``."""
        if np.ndim(self.F0) == 0:
            return np.full(geom.dims, self.F0)
        return geom.check(self.F0)

    def omega0(self, geom):
        return MatrixField.scalar(geom, self.F0_field(geom), self.r)


@dataclass
class HYMTarget:
    """Prescribed tensor ``P`` through its representative ``Phi = P · h0^{-1}``."""

    phi_target: MatrixField
    check: bool = True

    def __post_init__(self):
        if not self.phi_target.hermitian:
            raise ContractError("target representative must be Hermitian-flagged")
        if self.check:
            w = kernels.eigvalsh(self.phi_target.data)
            if not np.all(w[..., 0] > 0):
                raise _positivity_failure(w, "HYMTarget (prescribed tensor must be positive definite)")

    @property
    def geom(self):
        return self.phi_target.geom

    @property
    def r(self):
        return self.phi_target.r


# --- raw-array kernels (hot path) -------------------------------------------


def _check_positive(H):
    w = kernels.eigvalsh(H)
    if not np.all(w[..., 0] > POSITIVITY_FLOOR):
        raise _positivity_failure(w, "metric representative H")


def _phi_raw(geom, H, F0, Hinv=None, dH=None, hermitian=True):
    """Representative ``Phi_H`` on raw arrays; ``F0`` scalar or field.

    With ``hermitian=False`` the antiholomorphic derivatives are computed
    directly, so any invertible ``H`` is accepted.
    """
    if Hinv is None:
        Hinv = kernels.inv(H)
    if dH is None:
        dH = geom.gradient(H, "d")  # (..., r, r, n)
    dbH = None if hermitian else geom.gradient(H, "dbar")
    F0 = np.asarray(F0)
    omega_h = (F0[..., None, None] if F0.ndim else F0) * H
    out = omega_h - geom.laplacian(H)
    for k in range(geom.n):
        dk = np.ascontiguousarray(dH[..., k])
        dbk = dagger(dk) if hermitian else np.ascontiguousarray(dbH[..., k])
        out = out + kernels.matmul(kernels.matmul(dk, Hinv), dbk)
    return out


def _phi_derivative_raw(geom, H, F0, Hinv, dH, X):
    """Exact derivative of :func:`_phi_raw` at Hermitian ``H`` along Hermitian ``X``.

    Differentiates the discrete expanded form term by term, so Newton on the
    sampled equation keeps its quadratic rate even where the grid
    under-resolves the product rule that links it to :func:`_linearized_raw`.
    """
    dX = geom.gradient(X, "d")
    F0 = np.asarray(F0)
    out = (F0[..., None, None] if F0.ndim else F0) * X - geom.laplacian(X)
    for k in range(geom.n):
        dk = np.ascontiguousarray(dH[..., k])
        xk = np.ascontiguousarray(dX[..., k])
        left = kernels.matmul(dk, Hinv)
        right = kernels.matmul(Hinv, dagger(dk))
        out = out + kernels.matmul(xk, right) + kernels.matmul(left, dagger(xk))
        out = out - kernels.matmul(kernels.matmul(left, X), right)
    return out


def _connection_raw(geom, H, Hinv=None):
    if Hinv is None:
        Hinv = kernels.inv(H)
    dH = geom.gradient(H, "d")
    return np.stack([kernels.matmul(np.ascontiguousarray(dH[..., k]), Hinv) for k in range(geom.n)], axis=-3)


def _linearized_raw(geom, psi, T, omega1):
    """``-sum_k dbar_k (d_k Psi + Psi T_k - T_k Psi) + Omega1 Psi`` on raw arrays."""
    dpsi = geom.gradient(psi, "d")
    div = 0
    for k in range(geom.n):
        Tk = np.ascontiguousarray(T[..., k, :, :])
        ak = dpsi[..., k] + kernels.matmul(psi, Tk) - kernels.matmul(Tk, psi)
        div = div + geom.derivative(ak, k + 1, "dbar", trailing=2)
    return -div + kernels.matmul(omega1, psi)


# --- public operations -------------------------------------------------------


def _as_positive(H, op):
    if not isinstance(H, MatrixField):
        raise TypeError(f"{op} expects a MatrixField")
    if not H.hermitian:
        raise ContractError(f"{op} requires a Hermitian-flagged metric representative")
    _check_positive(H.data)


def connection_form(H):
    """``T = (d H) · H^{-1}``, the difference of Chern connections of ``h`` and ``h0``."""
    _as_positive(H, "connection_form")
    return OneFormMatrixField(H.geom, _connection_raw(H.geom, H.data))


def hym_endomorphism(H, bundle, geom=None):
    """Representative ``Phi_H`` of ``S^h`` against ``h0`` for ``h = H · h0``."""
    _as_positive(H, "hym_endomorphism")
    geom = geom or H.geom
    if geom != H.geom or bundle.r != H.r:
        raise ShapeError("metric, bundle and geometry disagree")
    phi = _phi_raw(geom, H.data, bundle.F0_field(geom) if np.ndim(bundle.F0) else bundle.F0)
    defect = hermitian_defect(phi)
    if defect > HERMITIAN_OUTPUT_RTOL:
        raise ContractError(f"HYM representative lost Hermitian symmetry (defect {defect:.2e})")
    return hermitian_project(MatrixField(geom, phi, check=False))


def hym_residual(H, target, bundle, geom=None):
    """Residual ``Phi_H - Phi_target`` with its sup (operator) and L2 norms."""
    geom = geom or H.geom
    if target.geom != geom or target.r != H.r:
        raise ShapeError("target and metric disagree in geometry or rank")
    res = hym_endomorphism(H, bundle, geom) - target.phi_target
    l2 = float(np.sqrt(geom.integrate(np.sum(np.abs(res.data) ** 2, axis=(-2, -1)))))
    return res, sup_norm(res), l2


def linearized_apply(psi, H, omega1, geom=None):
    """Linearized HYM operator re-centred at ``h1 = H · h0``.

    ``L(Psi) = Delta_{d^{h1}} Psi + Omega1 · Psi`` where
    ``d^{h1} Psi = d Psi + Psi · T - T · Psi`` with ``T = connection_form(H)`` and
    ``Delta = d* d``.  ``Omega1 = hym_endomorphism(H) · H^{-1}`` is supplied by
    the caller.  ``Psi`` is a direction at ``H`` in the sense
    ``H(eps) = (Id + eps Psi) · H``; at ``H = Id`` the operator reduces to
    ``-Delta_g Psi + Omega0 · Psi``.
    """
    geom = geom or H.geom
    _as_positive(H, "linearized_apply")
    if psi.geom != geom or omega1.geom != geom or psi.r != H.r or omega1.r != H.r:
        raise ShapeError("operands disagree in geometry or rank")
    T = _connection_raw(geom, H.data)
    return MatrixField(geom, _linearized_raw(geom, psi.data, T, omega1.data), check=False)


def scalar_line_curvature(phi, F0, geom):
    """Chern scalar curvature ``s = F0 + Delta_g phi`` of ``e^{-phi} h0`` and ``G = e^{-phi} s``."""
    phi = geom.check(phi)
    if np.iscomplexobj(phi):
        if np.abs(phi.imag).max() > 0:
            raise ContractError("phi must be real")
        phi = phi.real
    s = F0 + geom.laplacian(phi)
    return s, np.exp(-phi) * s


# --- curvature tensors --------------------------------------------------------


@dataclass
class CurvatureField:
    """Sampled Chern curvature with all indices lowered.

    ``components`` has shape ``dims + (n, n, m, m)`` indexed ``[i, j, a, b]`` for
    ``R_{i j̄ a b̄}``.  For ``kind='bundle'`` ``m = r`` and ``metric`` is the fibre
    metric ``h`` (shape ``dims + (r, r)``).  For ``kind='kahler'`` ``m = n`` and
    ``metric`` is the Kähler metric ``g`` (``None`` means the flat metric).
    """

    kind: str
    components: np.ndarray
    geom: TorusGeometry
    metric: Optional[np.ndarray] = None
    symmetry_rtol: float = field(default=1e-12, repr=False)

    def __post_init__(self):
        if self.kind not in ("bundle", "kahler"):
            raise ContractError(f"unknown curvature kind {self.kind!r}")
        R = self.geom.check(np.asarray(self.components, dtype=np.complex128), trailing=4)
        n = self.geom.n
        if R.shape[-4:-2] != (n, n) or R.shape[-1] != R.shape[-2]:
            raise ShapeError(f"curvature components have shape {R.shape[-4:]}")
        if self.kind == "kahler" and R.shape[-1] != n:
            raise ShapeError("Kähler curvature needs four base indices")
        self.components = R
        m = R.shape[-1]
        if self.metric is None and self.kind == "bundle":
            raise ContractError("bundle curvature needs its fibre metric")
        if self.metric is not None:
            self.metric = self.geom.check(np.asarray(self.metric, dtype=np.complex128), trailing=2)
            if self.metric.shape[-1] != m:
                raise ShapeError("metric rank does not match curvature")
        self.validate()

    @property
    def rank(self):
        return self.components.shape[-1]

    def symmetry_defect(self):
        """Relative violation of ``R_{i j̄ a b̄} = conj(R_{j ī b ā})`` (and Kähler symmetries)."""
        R = self.components
        scale = max(np.abs(R).max(), np.finfo(float).tiny)
        herm = np.conj(np.transpose(R, tuple(range(R.ndim - 4)) + (R.ndim - 3, R.ndim - 4, R.ndim - 1, R.ndim - 2)))
        d = np.abs(R - herm).max()
        if self.kind == "kahler":
            lead = tuple(range(R.ndim - 4))
            i, j, k, l = (R.ndim - 4, R.ndim - 3, R.ndim - 2, R.ndim - 1)
            d = max(d, np.abs(R - np.transpose(R, lead + (k, j, i, l))).max())
            d = max(d, np.abs(R - np.transpose(R, lead + (i, l, k, j))).max())
        return float(d / scale)

    def validate(self):
        defect = self.symmetry_defect()
        if defect > self.symmetry_rtol:
            raise ContractError(f"{self.kind} curvature violates its symmetries (defect {defect:.2e})")
        if self.metric is not None:
            if hermitian_defect(self.metric) > 1e-12:
                raise ContractError("curvature metric is not Hermitian")
            w = kernels.eigvalsh(self.metric)
            if not np.all(w[..., 0] > POSITIVITY_FLOOR):
                raise _positivity_failure(w, "curvature metric")


def _lowered_curvature(geom, h):
    """``R_{i j̄} = -d_i dbar_j h + (d_i h) h^{-1} (dbar_j h)`` for every ``(i, j)``.

    This equals ``-dbar_j(Gamma_i) · h`` with ``Gamma_i = (d_i h) h^{-1}`` and is
    symmetric under conjugate transpose with ``i <-> j`` sample-by-sample.
    """
    n = geom.n
    hinv = kernels.inv(h)
    dh = [geom.derivative(h, i + 1, "d", trailing=2) for i in range(n)]
    dbh = [dagger(d) for d in dh]
    out = np.empty(geom.dims + (n, n) + h.shape[-2:], dtype=np.complex128)
    for i in range(n):
        left = kernels.matmul(dh[i], hinv)
        for j in range(n):
            ddh = geom.derivative(dh[i], j + 1, "dbar", trailing=2)
            out[..., i, j, :, :] = -ddh + kernels.matmul(left, dbh[j])
    return out


def curvature_from_metric(h, geom=None):
    """Chern curvature ``R_{i j̄ a b̄}`` of a metric ``h`` on the trivial bundle."""
    if not isinstance(h, MatrixField):
        raise TypeError("curvature_from_metric expects a MatrixField")
    geom = geom or h.geom
    _as_positive(h, "curvature_from_metric")
    if geom.n != 2:
        raise ContractError("curvature fields are built on T^4 (n = 2)")
    R = _lowered_curvature(geom, h.data)
    return CurvatureField("bundle", R, geom, metric=h.data.copy())


def kahler_curvature_from_potential(u, geom):
    """Curvature of the Kähler metric ``g = delta + d dbar u`` on ``T^4``.

    Raises
    ------
    PositivityError
        If ``g`` fails to be positive definite somewhere.
    """
    if geom.n != 2:
        raise ContractError("Kähler curvature fields are built on T^4 (n = 2)")
    u = geom.check(u)
    n = geom.n
    g = np.zeros(geom.dims + (n, n), dtype=np.complex128)
    du = [geom.derivative(u, k + 1, "d") for k in range(n)]
    for k in range(n):
        for l in range(n):
            g[..., k, l] = geom.derivative(du[k], l + 1, "dbar")
        g[..., k, k] += 1.0
    g = 0.5 * (g + dagger(g))
    _check_positive(g)
    R = _lowered_curvature(geom, g)
    return CurvatureField("kahler", R, geom, metric=g)
