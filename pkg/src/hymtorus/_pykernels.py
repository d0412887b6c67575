"""Pure numpy implementations of the batched small-matrix kernels.

Every function takes C-contiguous ``complex128`` stacks of shape ``(N, r, r)``.
This module is the fallback when the compiled extension is unavailable and
serves as the reference the compiled kernels are tested against.
"""

import numpy as np


def matmul(a, b):
    return np.matmul(a, b)


def eigvalsh(a):
    return np.linalg.eigvalsh(a)


def eigh(a):
    w, v = np.linalg.eigh(a)
    return w, np.ascontiguousarray(v)


def inv(a):
    return np.linalg.inv(a)
