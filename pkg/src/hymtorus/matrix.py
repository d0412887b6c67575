"""Pointwise r x r complex matrix fields and their Hermitian linear algebra.

With the reference metric ``h0 = h_L ⊗ Id`` an ``h0``-Hermitian endomorphism is
exactly a pointwise Hermitian matrix, and the product ``P · Q`` of
endomorphisms (contracting the upper index of ``P`` with the lower index of
``Q``) is ordinary matrix multiplication with the row index as the lower
(``E*``) index.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .errors import ContractError, PositivityError, ShapeError
from .geometry import TorusGeometry

__all__ = [
    "MatrixField",
    "OneFormMatrixField",
    "product",
    "hermitian_project",
    "eigen_range",
    "inverse",
    "sqrt",
    "sup_norm",
    "pairing",
    "dagger",
    "herm_apply",
]

HERMITIAN_RTOL = 1e-12
POSITIVITY_FLOOR = 1e-10


def dagger(a):
    """Pointwise conjugate transpose of a raw ``(..., r, r)`` array."""
    return np.conj(np.swapaxes(a, -1, -2))


def hermitian_defect(a):
    """Max pointwise ``|A - A*|`` relative to max ``|A|`` (entrywise)."""
    scale = np.abs(a).max()
    if scale == 0:
        return 0.0
    return float(np.abs(a - dagger(a)).max() / scale)


class MatrixField:
    """An ``r x r`` complex matrix sampled at every point of a torus grid.

    Parameters
    ----------
    geom : TorusGeometry
    data : array_like
        Samples of shape ``geom.dims + (r, r)``.
    hermitian : bool
        Assert pointwise Hermitian symmetry.  Checked unless ``check=False``.
    """

    __array_priority__ = 1000

    def __init__(self, geom, data, hermitian=False, check=True):
        data = np.asarray(data, dtype=np.complex128)
        if data.ndim != geom.ndim + 2 or data.shape[-1] != data.shape[-2]:
            raise ShapeError(f"matrix field needs shape dims + (r, r), got {data.shape}")
        geom.check(data, trailing=2)
        if hermitian and check:
            defect = hermitian_defect(data)
            if defect > HERMITIAN_RTOL:
                raise ContractError(f"field flagged Hermitian has relative defect {defect:.3e}")
        self.geom = geom
        self.data = data
        self.hermitian = bool(hermitian)

    # --- constructors ------------------------------------------------------

    @classmethod
    def identity(cls, geom, r, scale=1.0):
        scale = np.asarray(scale)
        data = np.zeros(geom.dims + (r, r), dtype=np.complex128)
        idx = np.arange(r)
        data[..., idx, idx] = scale[..., None] if scale.ndim else scale
        return cls(geom, data, hermitian=bool(np.all(np.imag(scale) == 0)), check=False)

    @classmethod
    def constant(cls, geom, matrix, hermitian=None):
        matrix = np.asarray(matrix, dtype=np.complex128)
        data = np.broadcast_to(matrix, geom.dims + matrix.shape).copy()
        if hermitian is None:
            hermitian = np.allclose(matrix, matrix.conj().T, rtol=0, atol=HERMITIAN_RTOL * max(1.0, np.abs(matrix).max()))
        return cls(geom, data, hermitian=hermitian)

    @classmethod
    def scalar(cls, geom, values, r):
        """The field ``values · Id_r`` for a scalar field ``values``."""
        values = geom.check(values)
        return cls.identity(geom, r, scale=values)

    # --- basic protocol ----------------------------------------------------

    @property
    def r(self):
        return self.data.shape[-1]

    def __repr__(self):
        flag = ", hermitian" if self.hermitian else ""
        return f"MatrixField(r={self.r}, dims={self.geom.dims}{flag})"

    def _compatible(self, other):
        if not isinstance(other, MatrixField):
            return NotImplemented
        if other.geom != self.geom or other.r != self.r:
            raise ShapeError("operands differ in geometry or rank")
        return other

    def __add__(self, other):
        if self._compatible(other) is NotImplemented:
            return NotImplemented
        return MatrixField(self.geom, self.data + other.data, self.hermitian and other.hermitian, check=False)

    def __sub__(self, other):
        if self._compatible(other) is NotImplemented:
            return NotImplemented
        return MatrixField(self.geom, self.data - other.data, self.hermitian and other.hermitian, check=False)

    def __neg__(self):
        return MatrixField(self.geom, -self.data, self.hermitian, check=False)

    def __mul__(self, c):
        """Scale by a real/complex number or multiply pointwise by a scalar field."""
        if isinstance(c, MatrixField):
            return NotImplemented
        c = np.asarray(c)
        if c.ndim == 0:
            herm = self.hermitian and np.isreal(c)
            return MatrixField(self.geom, self.data * c, herm, check=False)
        self.geom.check(c)
        herm = self.hermitian and np.isrealobj(c)
        return MatrixField(self.geom, self.data * c[..., None, None], herm, check=False)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return product(self, other)

    def conj_transpose(self):
        return MatrixField(self.geom, dagger(self.data), self.hermitian, check=False)

    def trace(self):
        return np.trace(self.data, axis1=-2, axis2=-1)

    def copy(self):
        return MatrixField(self.geom, self.data.copy(), self.hermitian, check=False)

    def with_data(self, data, hermitian=False):
        return MatrixField(self.geom, data, hermitian, check=False)


class OneFormMatrixField:
    """Matrix-valued (1,0)-form ``A = A_i dz^i``; components stacked on axis ``-3``."""

    def __init__(self, geom, data):
        data = np.asarray(data, dtype=np.complex128)
        geom.check(data, trailing=3)
        if data.shape[-3] != geom.n:
            raise ShapeError(f"need {geom.n} form components, got {data.shape[-3]}")
        self.geom = geom
        self.data = data

    @property
    def r(self):
        return self.data.shape[-1]

    def component(self, i):
        """Component ``A_i`` (1-based) as a :class:`MatrixField`."""
        return MatrixField(self.geom, self.data[..., i - 1, :, :])

    def __repr__(self):
        return f"OneFormMatrixField(n={self.geom.n}, r={self.r}, dims={self.geom.dims})"


# --- operations ------------------------------------------------------------


def product(a, b):
    """Pointwise matrix product ``A · B``."""
    if not isinstance(a, MatrixField) or not isinstance(b, MatrixField):
        raise TypeError("product expects two MatrixField operands")
    a._compatible(b)
    return MatrixField(a.geom, kernels.matmul(a.data, b.data), False, check=False)


def hermitian_project(a):
    """Nearest pointwise-Hermitian field, ``(A + A*) / 2``."""
    data = 0.5 * (a.data + dagger(a.data))
    return MatrixField(a.geom, data, hermitian=True, check=False)


def _require_hermitian(a, op):
    if not isinstance(a, MatrixField):
        raise TypeError(f"{op} expects a MatrixField")
    if not a.hermitian:
        raise ContractError(f"{op} requires a Hermitian-flagged field")


def eigen_range(a):
    """Pointwise smallest and largest eigenvalues of a Hermitian field.

    Returns
    -------
    lmin, lmax : ndarray
        Real scalar fields.
    """
    _require_hermitian(a, "eigen_range")
    w = kernels.eigvalsh(a.data)
    return w[..., 0], w[..., -1]


def _positivity_failure(w, op):
    lmin = w[..., 0]
    idx = tuple(int(i) for i in np.unravel_index(np.argmin(lmin), lmin.shape))
    return PositivityError(
        f"{op}: field is not positive definite; lambda_min = {lmin[idx]:.3e} at grid index {idx}",
        index=idx,
        lambda_min=float(lmin[idx]),
    )


def herm_apply(data, func, floor=None, op="herm_apply"):
    """``V f(w) V*`` pointwise for Hermitian raw data; optional positivity floor."""
    w, v = kernels.eigh(data)
    if floor is not None and not np.all(w[..., 0] > floor):
        raise _positivity_failure(w, op)
    return kernels.matmul(v * func(w)[..., None, :], dagger(v))


def inverse(a):
    """Pointwise inverse of a Hermitian positive field."""
    _require_hermitian(a, "inverse")
    w = kernels.eigvalsh(a.data)
    if not np.all(w[..., 0] > POSITIVITY_FLOOR):
        raise _positivity_failure(w, "inverse")
    inv = kernels.inv(a.data)
    return MatrixField(a.geom, 0.5 * (inv + dagger(inv)), hermitian=True, check=False)


def sqrt(a):
    """Pointwise principal square root of a Hermitian positive field."""
    _require_hermitian(a, "sqrt")
    data = herm_apply(a.data, np.sqrt, floor=POSITIVITY_FLOOR, op="sqrt")
    return MatrixField(a.geom, data, hermitian=True, check=False)


def sup_norm(a):
    """Max over the grid of the pointwise operator (spectral) norm."""
    data = a.data if isinstance(a, MatrixField) else np.asarray(a)
    if data.shape[-1] == 1:
        return float(np.abs(data).max())
    return float(np.linalg.norm(data, ord=2, axis=(-2, -1)).max())


def pairing(geom, a, b):
    """Global pairing ``∫ tr(A · B*)`` of raw or wrapped matrix fields."""
    a = a.data if isinstance(a, MatrixField) else a
    b = b.data if isinstance(b, MatrixField) else b
    return geom.integrate(np.einsum("...ij,...ij->...", a, np.conj(b)))
