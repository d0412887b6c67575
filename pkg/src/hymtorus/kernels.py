"""Batched small-matrix kernels with a compiled core and a numpy fallback.

The compiled extension ``_ckernels`` is used when it imports; otherwise the
pure numpy module ``_pykernels`` takes over.  :func:`use_backend` switches
explicitly (benchmarks and cross-checking tests rely on it).

All entry points accept arrays of shape ``(..., r, r)`` and reshape to the
``(N, r, r)`` stacks the backends expect.
"""

import numpy as np

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS = {"numpy": _pykernels}
if _ckernels is not None:
    _BACKENDS["cython"] = _ckernels

_impl = _BACKENDS.get("cython", _pykernels)


def available_backends():
    return sorted(_BACKENDS)


def backend():
    """Name of the active backend."""
    return "cython" if _impl is _ckernels and _ckernels is not None else "numpy"


def use_backend(name):
    """Select ``'cython'`` or ``'numpy'``; returns the previous name."""
    global _impl
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} unavailable; have {available_backends()}")
    prev = backend()
    _impl = _BACKENDS[name]
    return prev


def matmul(a, b):
    a = np.ascontiguousarray(a, dtype=np.complex128)
    b = np.ascontiguousarray(b, dtype=np.complex128)
    lead = np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    a = np.ascontiguousarray(np.broadcast_to(a, lead + a.shape[-2:]))
    b = np.ascontiguousarray(np.broadcast_to(b, lead + b.shape[-2:]))
    out = _impl.matmul(a.reshape((-1,) + a.shape[-2:]), b.reshape((-1,) + b.shape[-2:]))
    return out.reshape(lead + out.shape[-2:])


def eigvalsh(a):
    """Ascending eigenvalues of Hermitian matrices."""
    a = np.ascontiguousarray(a, dtype=np.complex128)
    r = a.shape[-1]
    w = _impl.eigvalsh(a.reshape(-1, r, r))
    return w.reshape(a.shape[:-1])


def eigh(a):
    """Ascending eigenvalues and unitary eigenvector columns of Hermitian matrices."""
    a = np.ascontiguousarray(a, dtype=np.complex128)
    r = a.shape[-1]
    w, v = _impl.eigh(a.reshape(-1, r, r))
    return w.reshape(a.shape[:-1]), v.reshape(a.shape)


def inv(a):
    a = np.ascontiguousarray(a, dtype=np.complex128)
    r = a.shape[-1]
    return _impl.inv(a.reshape(-1, r, r)).reshape(a.shape)
