"""Line-bundle experiments: a two-solution construction and an integral obstruction.

Both concern ``e^{-phi} (F0 + Delta_g phi) = G`` on a flat ``T^2``.

The two-solution construction starts from the cusp ``f = A e^{-1/r}`` with
``r`` the torus distance to a point ``p``, picks ``t0 > 0`` with

    Q(t0) = ∫ Delta_g f / (e^{f + t0} - 1) = F0 · volume,

and builds ``shift = f + t0``, ``psi`` with
``Delta_g psi = F0 - Delta_g shift / (e^{shift} - 1)`` and
``G = e^{psi} Delta_g shift / (e^{shift} - 1)``.  Then ``phi1 = -psi`` and
``phi2 = shift - psi`` both solve the equation, and ``G`` changes sign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .curvature import scalar_line_curvature
from .errors import BracketError, ContractError
from .solver import SolveOptions, solve_kazdan_warner

__all__ = [
    "CounterexampleArtifacts",
    "NonexistenceReport",
    "torus_distance",
    "build_cusp_profile",
    "Q_of_t",
    "counterexample_pipeline",
    "nonexistence_demo",
]


def torus_distance(geom, point):
    """Euclidean distance to the grid point ``point`` (index tuple), minimized over translates."""
    if len(point) != geom.ndim:
        raise ContractError(f"point needs {geom.ndim} grid indices")
    sq = 0.0
    for x, idx, h, L in zip(geom.coords(), point, geom.spacing, geom.periods):
        d = np.abs(x - (idx % x.size) * h)
        d = np.minimum(d, L - d)
        sq = sq + d**2
    return np.sqrt(sq)


def build_cusp_profile(geom, point=None, amplitude=1.0):
    """``f = A e^{-1/r}`` with ``r`` the torus distance to ``point`` and ``f(point) = 0``."""
    if geom.n != 1:
        raise ContractError("the cusp construction lives on T^2 (n = 1)")
    if not amplitude > 0:
        raise ContractError("amplitude must be positive")
    point = (0,) * geom.ndim if point is None else tuple(point)
    r = torus_distance(geom, point)
    with np.errstate(divide="ignore"):
        f = amplitude * np.exp(-1.0 / r)
    f[r == 0] = 0.0
    return f


def Q_of_t(f, t, geom, lap=None):
    """``∫ Delta_g f / (e^{f + t} - 1)`` for ``t > 0``; ``lap`` may pass a precomputed ``Delta_g f``."""
    if not t > 0:
        raise ContractError(f"Q(t) is defined for t > 0, got {t}")
    lap = geom.laplacian(f) if lap is None else lap
    return float(geom.integrate(lap / np.expm1(f + t)))


@dataclass
class CounterexampleArtifacts:
    """Everything produced by :func:`counterexample_pipeline`.

    ``phi1 = -psi`` and ``phi2 = shift - psi`` by construction, so
    ``phi2 - phi1 = shift >= t0``.
    """

    f: np.ndarray
    t0: float
    Q_samples: list
    shift: np.ndarray
    psi: np.ndarray
    G: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray
    residual1: float
    residual2: float
    F0: float
    amplitude: float
    amplitude_doublings: int
    target: float
    bracket: tuple
    mean_defect: float = 0.0
    notes: list = field(default_factory=list)

    def summary(self):
        lines = [
            f"F0 = {self.F0:.12g}, target F0*volume = {self.target:.12g}",
            f"cusp amplitude = {self.amplitude:.6g} (doublings: {self.amplitude_doublings})",
            f"bracket = [{self.bracket[0]:.6g}, {self.bracket[1]:.6g}]",
            f"t0 = {self.t0:.15g}",
            f"G range = [{self.G.min():.6g}, {self.G.max():.6g}]",
            f"residual phi1 = {self.residual1:.3e}",
            f"residual phi2 = {self.residual2:.3e}",
            f"sup |phi1 - phi2| = {np.abs(self.phi1 - self.phi2).max():.6g}",
        ]
        return "\n".join(lines + self.notes)


def _sample_Q(f, lap, geom, t_lo, t_hi, count):
    ts = np.geomspace(t_lo, t_hi, count)
    return [(float(t), Q_of_t(f, t, geom, lap)) for t in ts]


def counterexample_pipeline(
    geom,
    F0=1.0,
    point=None,
    amplitude=1.0,
    t_lo=1e-3,
    t_hi=20.0,
    max_doublings=20,
    tol_bisect=None,
    samples=41,
):
    """Build two distinct solutions of the line equation for a sign-changing ``G``.

    Parameters
    ----------
    geom : TorusGeometry
        A ``T^2`` grid.
    F0 : float
        Positive reference curvature.
    point : tuple of int, optional
        Grid index of the cusp point; defaults to the origin.
    amplitude : float
        Initial cusp amplitude ``A``; doubled (at most ``max_doublings`` times)
        until ``Q(t_lo) > F0 · volume > Q(t_hi)``.
    tol_bisect : float, optional
        Bound on ``|Q(t0) - F0 · volume|``; defaults to ``1e-12 · F0 · volume``.

    Raises
    ------
    BracketError
        If no bracket is found; carries the sampled Q curve.
    """
    if geom.n != 1:
        raise ContractError("the counterexample pipeline runs on T^2 (n = 1)")
    if not F0 > 0:
        raise ContractError("F0 must be positive")
    if not 0 < t_lo < t_hi:
        raise ContractError("need 0 < t_lo < t_hi")
    target = F0 * geom.volume
    tol_bisect = 1e-12 * target if tol_bisect is None else tol_bisect
    A = amplitude
    tried = []
    for doublings in range(max_doublings + 1):
        f = build_cusp_profile(geom, point, A)
        lap = geom.laplacian(f)
        q_lo, q_hi = Q_of_t(f, t_lo, geom, lap), Q_of_t(f, t_hi, geom, lap)
        tried.append((A, q_lo, q_hi))
        if q_lo > target > q_hi:
            break
        A *= 2.0
    else:
        raise BracketError(
            f"no bracket Q(t_lo) > {target:.6g} > Q(t_hi) after {max_doublings} amplitude doublings",
            samples=[(t, q) for (t, q) in _sample_Q(f, lap, geom, t_lo, t_hi, samples)],
        )
    notes = []
    if doublings:
        notes.append(f"amplitude doubled {doublings} times to bracket the root")

    t0 = brentq(lambda t: Q_of_t(f, t, geom, lap) - target, t_lo, t_hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    gap = Q_of_t(f, t0, geom, lap) - target
    if abs(gap) > tol_bisect:
        raise BracketError(f"bisection stopped with |Q(t0) - target| = {abs(gap):.3e} > {tol_bisect:.3e}")

    shift = f + t0
    ratio = geom.laplacian(shift) / np.expm1(shift)
    rhs = F0 - ratio
    mean = float(geom.integrate(rhs)) / geom.volume
    psi = geom.poisson_solve(rhs - mean)
    G = np.exp(psi) * ratio
    phi1 = -psi
    phi2 = shift - psi
    res = []
    for phi in (phi1, phi2):
        _, Gphi = scalar_line_curvature(phi, F0, geom)
        res.append(float(np.abs(Gphi - G).max()))
    return CounterexampleArtifacts(
        f=f,
        t0=float(t0),
        Q_samples=_sample_Q(f, lap, geom, t_lo, t_hi, samples),
        shift=shift,
        psi=psi,
        G=G,
        phi1=phi1,
        phi2=phi2,
        residual1=res[0],
        residual2=res[1],
        F0=float(F0),
        amplitude=A,
        amplitude_doublings=doublings,
        target=target,
        bracket=(t_lo, t_hi),
        mean_defect=mean,
        notes=notes,
    )


@dataclass
class NonexistenceReport:
    """Verdict of :func:`nonexistence_demo`."""

    integral: float
    obstructed: bool
    message: str
    solve_report: object = None


def nonexistence_demo(G, geom, run_solver=False, opts=None):
    """Integral obstruction for ``e^{-phi} Delta_g phi = G`` (trivial bundle, ``F0 = 0``).

    Integrating ``e^{-phi} Delta_g phi = G`` by parts gives
    ``∫ G = ∫ e^{-phi} |grad phi|^2 >= 0``, so a negative ``∫ G`` rules out
    any solution.  With ``run_solver=True`` the scalar Newton solver is run
    with its contract checks disabled and its report attached.
    """
    G = np.asarray(geom.check(G), dtype=float)
    total = float(geom.integrate(G))
    negligible = 1e-12 * max(1.0, float(geom.integrate(np.abs(G))))
    if math.isclose(total, 0.0, abs_tol=negligible):
        obstructed = False
        message = "integral of G vanishes; the obstruction is silent and no existence claim is made"
    elif total < 0:
        obstructed = True
        message = (
            f"integral of G is {total:.6g} < 0; any solution would give a non-negative integral, "
            "so no solution exists"
        )
    else:
        obstructed = False
        message = f"integral of G is {total:.6g} >= 0; the obstruction is silent"
    report = None
    if run_solver:
        opts = opts or SolveOptions(max_newton=20, max_halvings=0)
        _, report = solve_kazdan_warner(G, 0.0, geom, opts=opts, check_contracts=False)
    return NonexistenceReport(total, obstructed, message, report)
