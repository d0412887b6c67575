"""Flat complex tori and their Fourier-spectral calculus.

A :class:`TorusGeometry` describes ``T^{2n} = C^n / (L_1 Z + i L_2 Z + ...)``
sampled on a uniform periodic grid.  Real axes are ordered
``(x_1, y_1, ..., x_n, y_n)`` with ``z_k = x_k + i y_k``.  The Kähler form is
``omega = sqrt(-1) sum_k dz^k ^ dz̄^k`` so that ``g_{i j̄} = delta_{ij}``,
``omega^n / n! = 2^n dx_1 dy_1 ... dx_n dy_n`` and

    Delta_g f = sum_k d_k dbar_k f = 1/4 sum (f_xx + f_yy).

Fields are plain numpy arrays whose leading ``2n`` axes are the grid; any
trailing axes (matrix indices, form components) are carried along untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ContractError, ShapeError, SolvabilityError

__all__ = ["TorusGeometry"]


@dataclass(frozen=True, eq=True)
class TorusGeometry:
    """Uniform periodic grid on a rectangular flat torus of complex dimension ``n``.

    Parameters
    ----------
    n : int
        Complex dimension, 1 or 2.
    dims : tuple of int
        Grid points per real axis (length ``2n``); each even and at least 8.
    periods : tuple of float
        Edge lengths per real axis (length ``2n``).
    """

    n: int
    dims: tuple
    periods: tuple

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ContractError(f"complex dimension must be 1 or 2, got {self.n}")
        dims = tuple(int(d) for d in self.dims)
        periods = tuple(float(p) for p in self.periods)
        if len(dims) != 2 * self.n or len(periods) != 2 * self.n:
            raise ContractError("dims and periods need 2n entries")
        for d in dims:
            if d < 8 or d % 2:
                raise ContractError(f"grid size {d} must be even and >= 8")
        for p in periods:
            if not p > 0:
                raise ContractError(f"period {p} must be positive")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "periods", periods)

    @classmethod
    def square(cls, n=1, points=None, period=1.0):
        """Torus with equal resolution and period on every axis.

        Defaults to 64 points per axis on T^2 and 16 on T^4.
        """
        if points is None:
            points = 64 if n == 1 else 16
        return cls(n, (points,) * (2 * n), (period,) * (2 * n))

    # --- grid --------------------------------------------------------------

    @property
    def ndim(self):
        return 2 * self.n

    @property
    def axes(self):
        return tuple(range(2 * self.n))

    @property
    def size(self):
        return math.prod(self.dims)

    @property
    def spacing(self):
        return tuple(L / d for L, d in zip(self.periods, self.dims))

    @cached_property
    def cell_weight(self):
        """Quadrature weight of one grid cell for the measure omega^n / n!."""
        return 2.0**self.n * math.prod(self.spacing)

    @property
    def volume(self):
        return 2.0**self.n * math.prod(self.periods)

    def coords(self):
        """Open meshgrid of coordinates, one broadcastable array per real axis."""
        ax = [np.arange(d) * h for d, h in zip(self.dims, self.spacing)]
        return np.meshgrid(*ax, indexing="ij", sparse=True)

    def check(self, field, trailing=0):
        """Validate that ``field`` is sampled on this grid."""
        field = np.asarray(field)
        if field.shape[: self.ndim] != self.dims or field.ndim != self.ndim + trailing:
            raise ShapeError(
                f"field of shape {field.shape} does not match grid {self.dims} "
                f"with {trailing} trailing axes"
            )
        return field

    # --- spectral symbols --------------------------------------------------

    @cached_property
    def _wavenumbers(self):
        ks = []
        for k, (d, L) in enumerate(zip(self.dims, self.periods)):
            w = 2.0 * np.pi * np.fft.fftfreq(d, d=L / d)
            shape = [1] * self.ndim
            shape[k] = d
            ks.append(w.reshape(shape))
        return ks

    @cached_property
    def _first_order_wavenumbers(self):
        # Nyquist mode dropped so that real fields stay real under d/dx.
        out = []
        for w, d in zip(self._wavenumbers, self.dims):
            w = w.copy()
            w.reshape(-1)[d // 2] = 0.0
            out.append(w)
        return out

    @cached_property
    def _dz_symbols(self):
        k = self._first_order_wavenumbers
        return [0.5 * (1j * k[2 * i] + k[2 * i + 1]) for i in range(self.n)]

    @cached_property
    def _dzbar_symbols(self):
        k = self._first_order_wavenumbers
        return [0.5 * (1j * k[2 * i] - k[2 * i + 1]) for i in range(self.n)]

    @cached_property
    def laplacian_symbol(self):
        """Fourier multiplier of Delta_g (non-positive, zero only at the mean)."""
        return -0.25 * sum(w**2 for w in self._wavenumbers)

    # --- transforms --------------------------------------------------------

    def fft(self, field):
        return np.fft.fftn(field, axes=self.axes)

    def ifft(self, coeffs):
        return np.fft.ifftn(coeffs, axes=self.axes)

    def _apply(self, field, symbol, trailing):
        field = self.check(field, trailing)
        sym = symbol.reshape(symbol.shape + (1,) * trailing)
        return self.ifft(self.fft(field) * sym)

    # --- operators ---------------------------------------------------------

    def derivative(self, field, i, kind="d", trailing=None):
        """Spectral d_i (``kind='d'``) or dbar_i (``kind='dbar'``), with 1-based ``i``.

        d_i = (d/dx_i - sqrt(-1) d/dy_i) / 2 and dbar_i = (d/dx_i + sqrt(-1) d/dy_i) / 2.
        """
        field = np.asarray(field)
        if trailing is None:
            trailing = field.ndim - self.ndim
        if not 1 <= i <= self.n:
            raise IndexError(f"holomorphic index {i} outside 1..{self.n}")
        if kind == "d":
            sym = self._dz_symbols[i - 1]
        elif kind == "dbar":
            sym = self._dzbar_symbols[i - 1]
        else:
            raise ValueError(f"unknown derivative kind {kind!r}")
        return self._apply(field, sym, trailing)

    def gradient(self, field, kind="d"):
        """All holomorphic (or antiholomorphic) derivatives stacked on a new last axis."""
        field = np.asarray(field)
        trailing = field.ndim - self.ndim
        coeffs = self.fft(self.check(field, trailing))
        syms = self._dz_symbols if kind == "d" else self._dzbar_symbols
        out = [self.ifft(coeffs * s.reshape(s.shape + (1,) * trailing)) for s in syms]
        return np.stack(out, axis=-1)

    def laplacian(self, field):
        """Delta_g f; real input gives real output."""
        field = np.asarray(field)
        trailing = field.ndim - self.ndim
        out = self._apply(field, self.laplacian_symbol, trailing)
        return out.real if np.isrealobj(field) else out

    def shifted_inverse(self, rhs, shift):
        """Solve (-Delta_g + shift) u = rhs spectrally; ``shift`` must be > 0."""
        if not shift > 0:
            raise ContractError(f"shift {shift} must be positive")
        rhs = np.asarray(rhs)
        trailing = rhs.ndim - self.ndim
        out = self._apply(rhs, 1.0 / (shift - self.laplacian_symbol), trailing)
        return out.real if np.isrealobj(rhs) else out

    def poisson_solve(self, rhs, tol_mean=1e-10):
        """Mean-zero solution of Delta_g u = rhs.

        Raises
        ------
        SolvabilityError
            If ``|integrate(rhs)|`` exceeds ``tol_mean * integrate(|rhs|)``.
        """
        rhs = np.asarray(rhs)
        trailing = rhs.ndim - self.ndim
        self.check(rhs, trailing)
        total = self.integrate(rhs)
        scale = self.integrate(np.abs(rhs))
        if np.any(np.abs(total) > tol_mean * np.maximum(scale, np.finfo(float).tiny)):
            raise SolvabilityError(
                f"right-hand side integrates to {total!r}, Poisson problem is not solvable",
                integral=total,
            )
        sym = self.laplacian_symbol
        inv = np.zeros_like(sym)
        nz = sym != 0
        inv[nz] = 1.0 / sym[nz]
        out = self._apply(rhs, inv, trailing)
        return out.real if np.isrealobj(rhs) else out

    def integrate(self, field):
        """Rectangle-rule integral against omega^n / n!; trailing axes are kept."""
        field = np.asarray(field)
        return field.sum(axis=self.axes) * self.cell_weight

    def integrate_omega_n(self, field):
        """Integral against omega^n (``n!`` times :meth:`integrate`)."""
        return math.factorial(self.n) * self.integrate(field)
