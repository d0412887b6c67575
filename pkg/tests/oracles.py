"""Independent reference evaluations shared by the test modules.

These use ``numpy.linalg`` directly and the product-rule form of the HYM
representative, so they share no code path with the package's expanded form.
"""

import numpy as np


def phi_product_rule(geom, H, F0):
    """``F0 H - sum_k dbar_k((d_k H) H^{-1}) · H`` for any invertible raw ``H``."""
    Hinv = np.linalg.inv(H)
    div = 0
    for k in range(geom.n):
        Tk = geom.derivative(H, k + 1, "d", trailing=2) @ Hinv
        div = div + geom.derivative(Tk, k + 1, "dbar", trailing=2)
    return F0 * H - div @ H


def finite_difference_linearization(geom, H, psi, F0, eps):
    """Centred difference of ``K -> Phi(K H) H^{-1}`` at ``K = Id`` along ``psi``."""
    eye = np.eye(H.shape[-1])
    Hinv = np.linalg.inv(H)
    plus = phi_product_rule(geom, (eye + eps * psi) @ H, F0) @ Hinv
    minus = phi_product_rule(geom, (eye - eps * psi) @ H, F0) @ Hinv
    return (plus - minus) / (2 * eps)


def kw_oracle(phi, F0, geom):
    """``e^{-phi}(F0 + Delta_g phi)`` via an explicit spectral Laplacian."""
    coeffs = np.fft.fftn(phi)
    k2 = 0
    for axis, (N, L) in enumerate(zip(geom.dims, geom.periods)):
        k = 2 * np.pi * np.fft.fftfreq(N, d=L / N)
        shape = [1] * geom.ndim
        shape[axis] = N
        k2 = k2 + k.reshape(shape) ** 2
    lap = np.fft.ifftn(-0.25 * k2 * coeffs).real
    return np.exp(-phi) * (F0 + lap)
