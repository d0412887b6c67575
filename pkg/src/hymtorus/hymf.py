"""Binary grid files ("HYMF") for scalar, matrix and curvature fields.

Layout, all little-endian::

    b"HYMF"  u32 version  u32 n  u32 r  u32 dims[2n]  f64 periods[2n]
    [version 2 only]  u32 tag  u32 n_components  u32 n_metric_components
    complex128 samples, row-major over the grid then the trailing indices

Version 1 stores a scalar field (``r = 1``) or an ``r x r`` matrix field.
Version 2 stores a curvature field: ``tag`` is 1 for a bundle and 2 for a
Kähler curvature, ``n_components = n^2 m^2`` with ``m = r`` the fibre size,
and the curvature samples are followed by the metric samples
(``n_metric_components = m^2``, or 0 for a flat Kähler metric).
"""

import struct

import numpy as np

from .curvature import CurvatureField
from .errors import ContractError
from .geometry import TorusGeometry
from .matrix import HERMITIAN_RTOL, MatrixField, hermitian_defect

__all__ = [
    "HYMFError",
    "write_scalar",
    "read_scalar",
    "write_matrix",
    "read_matrix",
    "write_curvature",
    "read_curvature",
    "read_header",
]

MAGIC = b"HYMF"
_KIND_TAGS = {"bundle": 1, "kahler": 2}
_DTYPE = np.dtype("<c16")


class HYMFError(ContractError):
    """Malformed or mismatched HYMF file."""


def _header(geom, version, r):
    head = MAGIC + struct.pack("<III", version, geom.n, r)
    head += struct.pack(f"<{geom.ndim}I", *geom.dims)
    head += struct.pack(f"<{geom.ndim}d", *geom.periods)
    return head


def _samples(a):
    return np.ascontiguousarray(a, dtype=_DTYPE).tobytes()


def _write(path, blob):
    with open(path, "wb") as fh:
        fh.write(blob)


def read_header(buf):
    """Parse the fixed header; returns ``(version, geom, r, offset)``."""
    if buf[:4] != MAGIC:
        raise HYMFError("not an HYMF file (bad magic)")
    version, n, r = struct.unpack_from("<III", buf, 4)
    if version not in (1, 2):
        raise HYMFError(f"unsupported HYMF version {version}")
    off = 16
    dims = struct.unpack_from(f"<{2 * n}I", buf, off)
    off += 8 * n
    periods = struct.unpack_from(f"<{2 * n}d", buf, off)
    off += 16 * n
    return version, TorusGeometry(n, dims, periods), r, off


def _load(path):
    with open(path, "rb") as fh:
        return fh.read()


def _take(buf, off, shape):
    count = int(np.prod(shape))
    end = off + count * _DTYPE.itemsize
    if end > len(buf):
        raise HYMFError("HYMF file is truncated")
    return np.frombuffer(buf, dtype=_DTYPE, count=count, offset=off).reshape(shape).astype(np.complex128), end


def write_scalar(path, values, geom):
    """Write a scalar field as a version-1 file with ``r = 1``."""
    values = geom.check(values)
    _write(path, _header(geom, 1, 1) + _samples(values))


def read_scalar(path):
    """Returns ``(geom, values)``; values are complex."""
    buf = _load(path)
    version, geom, r, off = read_header(buf)
    if version != 1 or r != 1:
        raise HYMFError(f"{path} does not hold a scalar field")
    values, end = _take(buf, off, geom.dims)
    if end != len(buf):
        raise HYMFError("trailing bytes after scalar samples")
    return geom, values


def write_matrix(path, field):
    """Write a :class:`MatrixField` as a version-1 file."""
    _write(path, _header(field.geom, 1, field.r) + _samples(field.data))


def read_matrix(path, hermitian=None):
    """Returns a :class:`MatrixField`.

    ``hermitian=None`` flags the field Hermitian when its samples are
    Hermitian to the standard tolerance.
    """
    buf = _load(path)
    version, geom, r, off = read_header(buf)
    if version != 1:
        raise HYMFError(f"{path} holds a curvature field, not a matrix field")
    data, end = _take(buf, off, geom.dims + (r, r))
    if end != len(buf):
        raise HYMFError("trailing bytes after matrix samples")
    if hermitian is None:
        hermitian = hermitian_defect(data) <= HERMITIAN_RTOL
    return MatrixField(geom, data, hermitian=hermitian)


def write_curvature(path, curv):
    """Write a :class:`~hymtorus.curvature.CurvatureField` as a version-2 file."""
    geom, m, n = curv.geom, curv.rank, curv.geom.n
    n_metric = 0 if curv.metric is None else m * m
    blob = _header(geom, 2, m) + struct.pack("<III", _KIND_TAGS[curv.kind], n * n * m * m, n_metric)
    blob += _samples(curv.components)
    if curv.metric is not None:
        blob += _samples(curv.metric)
    _write(path, blob)


def read_curvature(path):
    """Returns a validated :class:`~hymtorus.curvature.CurvatureField`."""
    buf = _load(path)
    version, geom, m, off = read_header(buf)
    if version != 2:
        raise HYMFError(f"{path} is not a curvature file")
    tag, ncomp, nmetric = struct.unpack_from("<III", buf, off)
    off += 12
    kinds = {v: k for k, v in _KIND_TAGS.items()}
    if tag not in kinds:
        raise HYMFError(f"unknown curvature tag {tag}")
    n = geom.n
    if ncomp != n * n * m * m or nmetric not in (0, m * m):
        raise HYMFError("component counts do not match the header")
    R, off = _take(buf, off, geom.dims + (n, n, m, m))
    metric = None
    if nmetric:
        metric, off = _take(buf, off, geom.dims + (m, m))
    if off != len(buf):
        raise HYMFError("trailing bytes after curvature samples")
    return CurvatureField(kinds[tag], R, geom, metric=metric)
