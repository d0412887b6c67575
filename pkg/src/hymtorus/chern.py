"""Chern-Weil integrals and the curvature-spread Chern number inequalities on T^4.

All contractions are done in a pointwise orthonormal frame: for a bundle
curvature the fibre indices are moved to an ``h``-orthonormal frame with
``W = h^{-1/2}``, for a Kähler curvature all four indices are moved to a
``g``-orthonormal frame.  Every norm is then a plain sum of squared moduli
and traces are plain traces.

Integrals of the form ``∫ f omega^n`` use ``omega^n = n! · (omega^n / n!)``,
with the volume form of the Kähler metric when it is not flat.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import kernels
from .curvature import CurvatureField
from .errors import ContractError
from .matrix import dagger, herm_apply

__all__ = [
    "BundleInvariants",
    "KahlerInvariants",
    "ChernReport",
    "bundle_invariants",
    "bundle_chern_integrals",
    "bundle_inequality_check",
    "kahler_invariants",
    "kahler_invariants_and_check",
]

IDENTITY_TOL = 1e-9


class BundleInvariants(NamedTuple):
    """Pointwise traces of a bundle curvature in an ``h``-orthonormal frame."""

    ric1: np.ndarray  # dims + (n, n)
    ric2: np.ndarray  # dims + (r, r)
    scalar: np.ndarray
    norm_sq: np.ndarray
    T: np.ndarray  # dims + (n, n, r, r)


class KahlerInvariants(NamedTuple):
    """Pointwise traces of a Kähler curvature in a ``g``-orthonormal frame."""

    ric: np.ndarray  # dims + (n, n)
    scalar: np.ndarray
    norm_sq: np.ndarray
    T: np.ndarray  # dims + (n, n, n, n)


@dataclass
class ChernReport:
    """Chern integrals, the inequality verdict and the exact-identity defects.

    ``lhs`` is ``∫((r-1) c1^2 - 2r c2) ^ omega^{n-2}`` for a bundle and
    ``∫(n c1^2 - 2(n+1) c2) ^ omega^{n-2}`` for a Kähler manifold; ``rhs`` is
    the spread bound built from ``a`` and ``b``.  ``identity_defects`` holds
    the sup-norm violation of each pointwise identity.
    """

    kind: str
    I_c1sq: float
    I_c2: float
    T_norm_sq_integral: float
    a: float
    b: float
    spread_bound: float
    lhs: float
    rhs: float
    passed: bool
    decomposition_defect: float
    identity_defects: dict = field(default_factory=dict)

    def summary(self):
        lines = [
            f"kind: {self.kind}",
            f"I_c1sq = {self.I_c1sq:.12g}",
            f"I_c2 = {self.I_c2:.12g}",
            f"integral |T|^2 = {self.T_norm_sq_integral:.12g}",
            f"a = {self.a:.12g}, b = {self.b:.12g}",
            f"lhs = {self.lhs:.12g}",
            f"rhs = {self.rhs:.12g}",
            f"pass: {self.passed}",
            f"decomposition defect: {self.decomposition_defect:.3e}",
        ]
        lines += [f"{k} defect: {v:.3e}" for k, v in self.identity_defects.items()]
        return "\n".join(lines)

    def rows(self):
        """``(quantity, value)`` rows for CSV output."""
        keys = ["I_c1sq", "I_c2", "T_norm_sq_integral", "a", "b", "spread_bound", "lhs", "rhs",
                "passed", "decomposition_defect"]
        out = [("quantity", "value")] + [(k, getattr(self, k)) for k in keys]
        return out + [(f"defect_{k}", v) for k, v in self.identity_defects.items()]


def _require(curv, kind):
    if not isinstance(curv, CurvatureField):
        raise TypeError("expected a CurvatureField")
    if curv.kind != kind:
        raise ContractError(f"expected a {kind} curvature, got {curv.kind}")
    if curv.geom.n != 2:
        raise ContractError("Chern number calculators run on T^4 (n = 2)")
    curv.validate()


def _sq(a, naxes):
    return np.sum(np.abs(a) ** 2, axis=tuple(range(-naxes, 0)))


def _frame_root(metric):
    w = herm_apply(metric, lambda x: 1.0 / np.sqrt(x))
    return 0.5 * (w + dagger(w))


def _omega_n_integral(geom, f, density=None):
    f = f if density is None else f * density
    return math.factorial(geom.n) * float(np.real(geom.integrate(f)))


# --- bundle case -------------------------------------------------------------


def bundle_invariants(curv):
    """``Ric1``, ``Ric2``, ``s``, ``|R|^2`` and the trace-free tensor ``T``.

    ``T = R - (1/n) g Ric2 - (1/r) Ric1 h + (1/(n r)) g h s``, all returned in
    the ``h``-orthonormal frame (where ``h`` is the identity).
    """
    _require(curv, "bundle")
    n, r = curv.geom.n, curv.rank
    W = _frame_root(curv.metric)
    Wb = W[..., None, None, :, :]
    # R'_{i j a b} = W_{a c} R_{i j c d} W_{d b}; W Hermitian so conj(W_{b d}) = W_{d b}
    R = kernels.matmul(kernels.matmul(Wb, curv.components), Wb)
    ric1 = np.trace(R, axis1=-2, axis2=-1)
    ric2 = np.einsum("...iiab->...ab", R)
    s = np.trace(ric1, axis1=-2, axis2=-1).real
    eye_n, eye_r = np.eye(n), np.eye(r)
    T = (
        R
        - np.einsum("ij,...ab->...ijab", eye_n, ric2) / n
        - np.einsum("...ij,ab->...ijab", ric1, eye_r) / r
        + np.einsum("ij,ab,...->...ijab", eye_n, eye_r, s) / (n * r)
    )
    return BundleInvariants(ric1, ric2, s, _sq(R, 4), T)


def bundle_chern_integrals(curv):
    """``(∫ c1^2 ^ omega^{n-2}, ∫ c2 ^ omega^{n-2})`` from the scalar integrands."""
    inv = bundle_invariants(curv)
    return _bundle_integrals(curv.geom, inv)


def _bundle_integrals(geom, inv):
    n = geom.n
    s2 = inv.scalar**2
    r1 = _sq(inv.ric1, 2)
    r2 = _sq(inv.ric2, 2)
    I1 = _omega_n_integral(geom, s2 - r1) / (4 * math.pi**2 * n * (n - 1))
    I2 = _omega_n_integral(geom, s2 - r1 - r2 + inv.norm_sq) / (8 * math.pi**2 * n * (n - 1))
    return I1, I2


def _measured_range(eigs, a, b, what):
    lo, hi = float(eigs[..., 0].min()), float(eigs[..., -1].max())
    if a is None and b is None:
        return lo, hi
    a = lo if a is None else float(a)
    b = hi if b is None else float(b)
    if lo < a - 1e-12 * max(1.0, abs(a)) or hi > b + 1e-12 * max(1.0, abs(b)):
        warnings.warn(
            f"supplied bounds [{a:.6g}, {b:.6g}] do not contain the {what} eigenvalues "
            f"[{lo:.6g}, {hi:.6g}]; the inequality is not guaranteed",
            stacklevel=3,
        )
    return a, b


def _verdict(lhs, rhs):
    return bool(lhs <= rhs + IDENTITY_TOL * max(1.0, abs(lhs), abs(rhs)))


def bundle_inequality_check(curv, a=None, b=None):
    """Evaluate ``∫((r-1)c1^2 - 2r c2) ^ omega^{n-2} <= r(r-1)(b-a)^2/(8 pi^2 n^2) ∫ omega^n``.

    ``a`` and ``b`` default to the extreme eigenvalues over the grid of the
    HYM endomorphism ``g^{i j̄} R_{i j̄} h^{-1}``; user values that fail to
    enclose them trigger a warning.
    """
    inv = bundle_invariants(curv)
    geom = curv.geom
    n, r = geom.n, curv.rank
    I1, I2 = _bundle_integrals(geom, inv)
    eigs = kernels.eigvalsh(0.5 * (inv.ric2 + dagger(inv.ric2)))
    a, b = _measured_range(eigs, a, b, "HYM endomorphism")

    s2 = inv.scalar**2
    r1 = _sq(inv.ric1, 2)
    r2 = _sq(inv.ric2, 2)
    t2 = _sq(inv.T, 4)
    direct = s2 - r1 - r * r2 + r * inv.norm_sq
    decomposed = r * t2 + (n - 1) / n * (s2 - r * r2)
    spread = -sum((eigs[..., i] - eigs[..., j]) ** 2 for i in range(r) for j in range(i + 1, r))
    scale = max(1.0, float(np.abs(direct).max()))
    defects = {
        "norm_T": float(np.abs(t2 - (inv.norm_sq - r2 / n - r1 / r + s2 / (n * r))).max()) / scale,
        "eigen_spread": float(np.abs(s2 - r * r2 - spread).max()) / scale,
    }
    lhs = (r - 1) * I1 - 2 * r * I2
    vol = _omega_n_integral(geom, np.ones(geom.dims))
    rhs = r * (r - 1) * (b - a) ** 2 / (8 * math.pi**2 * n**2) * vol
    return ChernReport(
        kind="bundle",
        I_c1sq=I1,
        I_c2=I2,
        T_norm_sq_integral=_omega_n_integral(geom, t2),
        a=a,
        b=b,
        spread_bound=rhs,
        lhs=lhs,
        rhs=rhs,
        passed=_verdict(lhs, rhs),
        decomposition_defect=float(np.abs(direct - decomposed).max()) / scale,
        identity_defects=defects,
    )


# --- Kähler case -------------------------------------------------------------


def _kahler_frame(curv):
    if curv.metric is None:
        return curv.components, None
    W = _frame_root(curv.metric)
    Wb = W[..., None, None, :, :]
    # R'_{i j k l} = W_{i p} W_{q j} W_{k s} W_{t l} R_{p q s t} (W Hermitian):
    # transform the (k, l) pair, swap the pairs, transform again, swap back
    R = kernels.matmul(kernels.matmul(Wb, curv.components), Wb)
    R = np.swapaxes(np.swapaxes(R, -4, -2), -3, -1)
    R = kernels.matmul(kernels.matmul(Wb, R), Wb)
    R = np.ascontiguousarray(np.swapaxes(np.swapaxes(R, -4, -2), -3, -1))
    density = np.linalg.det(curv.metric).real
    return R, density


def kahler_invariants(curv):
    """``Ric``, ``s``, ``|R|^2`` and the Kähler ``T`` tensor in a ``g``-orthonormal frame.

    ``T = R - (1/n) g Ric - (1/n) Ric g - 1/(n(n+1)) g_{i l̄} g_{k j̄} s
    + (n+2)/(n^2(n+1)) g g s``.
    """
    _require(curv, "kahler")
    R, _ = _kahler_frame(curv)
    return _kahler_invariants(curv.geom.n, R)


def _kahler_invariants(n, R):
    ric = np.einsum("...kkij->...ij", R)
    s = np.trace(ric, axis1=-2, axis2=-1).real
    d = np.eye(n)
    T = (
        R
        - np.einsum("ij,...kl->...ijkl", d, ric) / n
        - np.einsum("...ij,kl->...ijkl", ric, d) / n
        - np.einsum("il,kj,...->...ijkl", d, d, s) / (n * (n + 1))
        + np.einsum("ij,kl,...->...ijkl", d, d, s) * (n + 2) / (n**2 * (n + 1))
    )
    return KahlerInvariants(ric, s, _sq(R, 4), T)


def kahler_invariants_and_check(curv, a=None, b=None):
    """Evaluate ``∫(n c1^2 - 2(n+1) c2) ^ omega^{n-2} <= (n^2-2)(b-a)^2/(8 pi^2 n^2) ∫ omega^n``.

    ``a`` and ``b`` default to the extreme eigenvalues of ``Ric`` with respect
    to ``g`` over the grid.
    """
    _require(curv, "kahler")
    geom = curv.geom
    n = geom.n
    R, density = _kahler_frame(curv)
    inv = _kahler_invariants(n, R)
    s2 = inv.scalar**2
    rc = _sq(inv.ric, 2)
    t2 = _sq(inv.T, 4)
    I1 = _omega_n_integral(geom, s2 - rc, density) / (4 * math.pi**2 * n * (n - 1))
    I2 = _omega_n_integral(geom, s2 - 2 * rc + inv.norm_sq, density) / (8 * math.pi**2 * n * (n - 1))
    eigs = kernels.eigvalsh(0.5 * (inv.ric + dagger(inv.ric)))
    a, b = _measured_range(eigs, a, b, "Ricci")

    direct = s2 - (n + 2) * rc + (n + 1) * inv.norm_sq
    decomposed = (n + 1) * t2 + (1 - 2 / n**2) * (s2 - n * rc)
    spread = -sum((eigs[..., i] - eigs[..., j]) ** 2 for i in range(n) for j in range(i + 1, n))
    scale = max(1.0, float(np.abs(direct).max()))
    defects = {
        "norm_T": float(np.abs(t2 - (inv.norm_sq - 2 / n * rc + 2 / (n**2 * (n + 1)) * s2)).max()) / scale,
        "eigen_spread": float(np.abs(s2 - n * rc - spread).max()) / scale,
    }
    lhs = n * I1 - 2 * (n + 1) * I2
    vol = _omega_n_integral(geom, np.ones(geom.dims), density)
    rhs = (n**2 - 2) * (b - a) ** 2 / (8 * math.pi**2 * n**2) * vol
    return ChernReport(
        kind="kahler",
        I_c1sq=I1,
        I_c2=I2,
        T_norm_sq_integral=_omega_n_integral(geom, t2, density),
        a=a,
        b=b,
        spread_bound=rhs,
        lhs=lhs,
        rhs=rhs,
        passed=_verdict(lhs, rhs),
        decomposition_defect=float(np.abs(direct - decomposed).max()) / scale,
        identity_defects=defects,
    )
