"""Seeded random test data: band-limited fields, positive metrics, curvature tensors."""

import numpy as np

from .matrix import MatrixField, dagger, herm_apply

__all__ = [
    "bandlimited",
    "hermitian_field",
    "positive_field",
    "synthetic_bundle_curvature",
    "synthetic_kahler_curvature",
]


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def bandlimited(geom, seed=None, modes=3, amplitude=1.0, real=True, mean_zero=False):
    """Random trigonometric polynomial with frequencies ``|m| <= modes`` per axis.

    Scaled so that its sup-norm equals ``amplitude``.
    """
    rng = _rng(seed)
    coeffs = np.zeros(geom.dims, dtype=np.complex128)
    idx = tuple(np.r_[0 : modes + 1, d - modes : d] for d in geom.dims)
    block = np.ix_(*idx)
    shape = tuple(len(i) for i in idx)
    coeffs[block] = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    if mean_zero:
        coeffs[(0,) * geom.ndim] = 0.0
    f = geom.ifft(coeffs)
    if real:
        f = f.real
    peak = np.abs(f).max()
    return f * (amplitude / peak) if peak > 0 else f


def hermitian_field(geom, r, seed=None, modes=2, amplitude=1.0):
    """Band-limited Hermitian matrix field (raw array)."""
    rng = _rng(seed)
    a = np.empty(geom.dims + (r, r), dtype=np.complex128)
    for i in range(r):
        for j in range(r):
            a[..., i, j] = bandlimited(geom, rng, modes, 1.0, real=False)
    a = 0.5 * (a + dagger(a))
    return a * (amplitude / np.abs(a).max())


def positive_field(geom, r, seed=None, modes=2, amplitude=0.5, scale=1.0):
    """Smooth Hermitian positive :class:`MatrixField` ``scale · exp(A)``."""
    a = hermitian_field(geom, r, seed, modes, amplitude)
    data = scale * herm_apply(a, np.exp)
    return MatrixField(geom, 0.5 * (data + dagger(data)), hermitian=True, check=False)


def synthetic_bundle_curvature(geom, r, seed=None, modes=1, amplitude=1.0):
    """Random ``R_{i j̄ a b̄}`` with the Hermitian curvature symmetry.

    Symmetrization order: draw every component independently, then average
    with the conjugate under ``(i, j, a, b) -> (j, i, b, a)``.
    """
    rng = _rng(seed)
    n = geom.n
    R = np.empty(geom.dims + (n, n, r, r), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            for a in range(r):
                for b in range(r):
                    R[..., i, j, a, b] = bandlimited(geom, rng, modes, amplitude, real=False)
    lead = tuple(range(geom.ndim))
    k = geom.ndim
    R = 0.5 * (R + np.conj(np.transpose(R, lead + (k + 1, k, k + 3, k + 2))))
    return R


def synthetic_kahler_curvature(geom, seed=None, modes=1, amplitude=1.0):
    """Random ``R_{i j̄ k l̄}`` with all Kähler curvature symmetries.

    Symmetrization order: Hermitian pairing ``(i,j,k,l) -> conj(j,i,l,k)``,
    then averaging over the swap ``i <-> k``, then over ``j <-> l``.  The three
    projections commute, so the result satisfies all of them exactly.
    """
    n = geom.n
    R = synthetic_bundle_curvature(geom, n, seed, modes, amplitude)
    lead = tuple(range(geom.ndim))
    k = geom.ndim
    R = 0.5 * (R + np.transpose(R, lead + (k + 2, k + 1, k, k + 3)))
    R = 0.5 * (R + np.transpose(R, lead + (k, k + 3, k + 2, k + 1)))
    return R
