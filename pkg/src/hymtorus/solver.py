"""Damped Newton continuation for the prescribed HYM equation and its line reduction.

The matrix solver works in the frame ``S = H^{1/2}``.  A direction ``Psi_hat``
(Hermitian) stands for ``Psi = S Psi_hat S^{-1}`` and the update is

    H <- S (Id + s Psi_hat) S,

which is ``(Id + s Psi) H`` and stays Hermitian.  In this frame the
linearized operator ``S^{-1} L(S · S^{-1}) S`` is self-adjoint for the plain
Frobenius pairing, so the Newton systems are solved by conjugate gradients
preconditioned with ``(-Delta_g + c)^{-1}``.  The operator applied is the
exact derivative of the sampled map, which agrees with ``L`` up to
discretization error and keeps Newton quadratic on coarse grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from . import kernels
from .curvature import BundleData, HYMTarget, _phi_derivative_raw, _phi_raw
from .errors import ContractError, ObstructionError, ShapeError
from .matrix import (
    POSITIVITY_FLOOR,
    MatrixField,
    _positivity_failure,
    _require_hermitian,
    dagger,
    eigen_range,
    sup_norm,
)

__all__ = [
    "SolveOptions",
    "SolveReport",
    "solve_prescribed",
    "solve_kazdan_warner",
    "normalize_reference",
    "comparison_check",
]

CONVERGED = "converged"
OBSTRUCTION = "obstruction"
MAX_ITER = "max_iter"
POSITIVITY_BREAKDOWN = "positivity_breakdown"

COMPARISON_SLACK = 1e-6


@dataclass
class SolveOptions:
    """Tolerances and iteration limits shared by both solvers.

    Parameters
    ----------
    tol_residual : float
        Final sup-norm residual relative to the sup-norm of the target.
    max_newton : int
        Newton steps allowed per continuation stage.
    continuation_steps : int
        Uniform stages along the target path; a failed stage is retried with
        half the step, at most ``max_halvings`` times.
    intermediate_tol : float
        Relative tolerance for stages before the last one (never below
        ``tol_residual``).
    min_damping : float
        Smallest step fraction tried by the backtracking line search.
    forcing_max : float
        Cap of the forcing term ``eta = min(forcing_max, sqrt(residual))``.
    """

    tol_residual: float = 1e-9
    max_newton: int = 50
    continuation_steps: int = 8
    max_halvings: int = 6
    intermediate_tol: float = 1e-6
    min_damping: float = 2.0**-12
    forcing_max: float = 0.1
    max_linear: int = 300

    def __post_init__(self):
        for name in ("tol_residual", "intermediate_tol", "min_damping", "forcing_max"):
            if not getattr(self, name) > 0:
                raise ContractError(f"{name} must be positive")
        for name in ("max_newton", "continuation_steps", "max_linear"):
            if getattr(self, name) < 1:
                raise ContractError(f"{name} must be at least 1")
        if self.max_halvings < 0:
            raise ContractError("max_halvings must be non-negative")

    def forcing(self, rel_residual):
        return min(self.forcing_max, math.sqrt(max(rel_residual, 0.0)))


@dataclass
class SolveReport:
    """Outcome of a solve.

    ``residual_history`` holds the relative sup-norm residual of every
    iterate against the current stage target.  ``diagnostics`` holds, per
    iterate, the monitored a priori quantities: ``sup tr H``,
    ``sup |dH H^{-1}|^2_h`` and the eigenvalue range of ``H``.
    """

    status: str = "running"
    residual_history: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    stages: list = field(default_factory=list)
    newton_steps: int = 0
    picard_steps: int = 0
    final_residual: float = float("nan")
    message: str = ""

    @property
    def converged(self):
        return self.status == CONVERGED

    def summary(self):
        lines = [
            f"status: {self.status}",
            f"final relative residual: {self.final_residual:.3e}",
            f"newton steps: {self.newton_steps} (picard fallbacks: {self.picard_steps})",
            f"continuation stages: {len(self.stages)}",
        ]
        if self.diagnostics:
            d = self.diagnostics[-1]
            lines.append("final diagnostics: " + ", ".join(f"{k}={v:.6g}" for k, v in d.items()))
        if self.message:
            lines.append(f"note: {self.message}")
        return "\n".join(lines)

    def history_rows(self):
        """``(iterate, t, residual, *diagnostics)`` rows for CSV output."""
        keys = list(self.diagnostics[0]) if self.diagnostics else []
        header = ["iterate", "t", "residual"] + keys
        rows = [header]
        for i, (res, d) in enumerate(zip(self.residual_history, self.diagnostics)):
            rows.append([i, d.get("t", float("nan")), res] + [d[k] for k in keys])
        return rows


# --- generic damped Newton -------------------------------------------------


class _Stage:
    """Bookkeeping for one continuation stage."""

    def __init__(self, t, scale, tol):
        self.t = t
        self.scale = scale
        self.tol_abs = tol * scale


def _newton(x, evaluate, direction, update, stage, opts, report, diagnose):
    """Damped Newton at one stage; returns ``(state, status)``.

    ``evaluate(x)`` returns a state with ``sup`` and ``l2`` residual norms or
    ``None`` when ``x`` is not admissible.  ``direction(state, eta, kind)``
    gives a Newton (``kind='newton'``) or Picard step.
    """
    cur = evaluate(x)
    if cur is None:
        return None, POSITIVITY_BREAKDOWN
    for it in range(opts.max_newton + 1):
        report.residual_history.append(cur.sup / stage.scale)
        report.diagnostics.append(dict(t=stage.t, **diagnose(cur)))
        if cur.sup <= stage.tol_abs:
            return cur, CONVERGED
        if it == opts.max_newton:
            return cur, MAX_ITER
        eta = opts.forcing(cur.sup / stage.scale)
        accepted = None
        for kind in ("newton", "picard"):
            d = direction(cur, eta, kind)
            s = 1.0
            while s >= opts.min_damping:
                cand = evaluate(update(cur, d, s))
                if cand is not None and cand.l2 < cur.l2:
                    accepted = cand
                    break
                s *= 0.5
            if accepted is not None:
                report.picard_steps += kind == "picard"
                break
        if accepted is None:
            return cur, POSITIVITY_BREAKDOWN
        report.newton_steps += 1
        cur = accepted
    return cur, MAX_ITER


def _continuation(x0, start, goal, evaluate_at, direction, update, opts, report, diagnose, scale):
    """Follow ``(1 - t) start + t goal`` from ``t = 0`` (where ``x0`` solves) to ``t = 1``."""
    steps = 1 if start is goal else opts.continuation_steps
    t, dt, halvings = 0.0, 1.0 / steps, 0
    x, last = x0, None
    while t < 1.0:
        t_next = min(1.0, t + dt)
        if 1.0 - t_next < 1e-12:
            t_next = 1.0
        target = start + t_next * (goal - start)
        tol = opts.tol_residual if t_next == 1.0 else max(opts.tol_residual, opts.intermediate_tol)
        state, status = _newton(
            x, evaluate_at(target), direction, update, _Stage(t_next, scale, tol), opts, report, diagnose
        )
        if status == CONVERGED:
            report.stages.append((t_next, report.newton_steps))
            t, x, last = t_next, state.x, state
            continue
        if halvings < opts.max_halvings:
            halvings += 1
            dt *= 0.5
            continue
        report.status = status
        report.message = f"stage t={t_next:.6g} failed after {halvings} step halvings"
        return (state or last), status
    report.status = CONVERGED
    return last, CONVERGED


def _pcg(apply, rhs, precond, eta, maxiter):
    """Preconditioned CG on a flat vector space; returns ``(x, info)``."""
    n = rhs.size
    dtype = rhs.dtype
    A = LinearOperator((n, n), matvec=lambda v: apply(v).ravel(), dtype=dtype)
    M = LinearOperator((n, n), matvec=lambda v: precond(v).ravel(), dtype=dtype)
    with np.errstate(all="ignore"):
        x, info = cg(A, rhs.ravel(), rtol=eta, maxiter=maxiter, M=M)
    if not np.all(np.isfinite(x)):
        # breakdown on an indefinite or singular operator
        return precond(rhs), -1
    return x.reshape(rhs.shape), info


# --- matrix solver -----------------------------------------------------------


class _MatrixState:
    __slots__ = ("x", "S", "Si", "Hinv", "w", "dH", "phi", "res", "sup", "l2")


def _matrix_evaluate(geom, F0, target):
    def evaluate(H):
        w, v = kernels.eigh(H)
        if not np.all(w[..., 0] > POSITIVITY_FLOOR):
            return None
        st = _MatrixState()
        vh = dagger(v)
        root = np.sqrt(w)
        st.x = H
        st.w = w
        st.S = kernels.matmul(v * root[..., None, :], vh)
        st.Si = kernels.matmul(v / root[..., None, :], vh)
        st.Hinv = kernels.matmul(v / w[..., None, :], vh)
        st.dH = geom.gradient(H, "d")
        phi = _phi_raw(geom, H, F0, st.Hinv, st.dH)
        st.phi = 0.5 * (phi + dagger(phi))
        st.res = st.phi - target
        st.sup = sup_norm(st.res)
        st.l2 = float(np.sqrt(np.sum(np.abs(st.res) ** 2)))
        return st

    return evaluate


def _matrix_diagnostics(geom):
    def diagnose(st):
        tr = np.trace(st.x, axis1=-2, axis2=-1).real
        tsq = 0.0
        for k in range(geom.n):
            dk = np.ascontiguousarray(st.dH[..., k])
            a = kernels.matmul(dk, st.Hinv)
            tsq = tsq + np.trace(kernels.matmul(a, kernels.matmul(dagger(dk), st.Hinv)), axis1=-2, axis2=-1).real
        return {
            "sup_trace_H": float(tr.max()),
            "sup_T_norm_sq": float(np.max(tsq)),
            "lambda_min_H": float(st.w[..., 0].min()),
            "lambda_max_H": float(st.w[..., -1].max()),
        }

    return diagnose


def _matrix_direction(geom, F0, opts):
    def direction(st, eta, kind):
        rhs = -kernels.matmul(kernels.matmul(st.Si, st.res), st.Si)
        rhs = 0.5 * (rhs + dagger(rhs))
        om_hat = kernels.matmul(kernels.matmul(st.Si, st.phi), st.Si)
        shift = float(np.mean(kernels.eigvalsh(0.5 * (om_hat + dagger(om_hat)))[..., 0]))
        shift = max(shift, 1e-6)

        def precond(v):
            return geom.shifted_inverse(v.reshape(rhs.shape), shift)

        if kind == "picard":
            return precond(rhs)
        def apply(v):
            X = kernels.matmul(kernels.matmul(st.S, v.reshape(rhs.shape)), st.S)
            out = _phi_derivative_raw(geom, st.x, F0, st.Hinv, st.dH, X)
            out = kernels.matmul(kernels.matmul(st.Si, out), st.Si)
            return 0.5 * (out + dagger(out))

        x, _ = _pcg(apply, rhs, precond, eta, opts.max_linear)
        return 0.5 * (x + dagger(x))

    return direction


def _matrix_update(r):
    eye = np.eye(r)

    def update(st, d, s):
        H = kernels.matmul(kernels.matmul(st.S, eye + s * d), st.S)
        return 0.5 * (H + dagger(H))

    return update


def solve_prescribed(target, bundle, geom=None, opts=None, initial=None):
    """Solve ``Phi_H = target.phi_target`` for a Hermitian positive ``H``.

    The path ``Phi_t = (1 - t) Phi_{H_0} + t Phi_target`` is followed from
    the initial metric ``H_0``, which by default is the constant multiple of
    the identity ``(mean tr Phi_target) / (r mean F0) · Id``.  A constant
    target with constant ``F0`` is therefore solved before any Newton step.
    When ``Phi_{H_0}`` is not positive the path is skipped and Newton runs
    directly on the final target.

    Parameters
    ----------
    target : HYMTarget
    bundle : BundleData
    geom : TorusGeometry, optional
    opts : SolveOptions, optional
    initial : MatrixField, optional
        Hermitian positive starting metric.

    Returns
    -------
    H : MatrixField
        Last accepted iterate (the solution when ``report.converged``).
    report : SolveReport
    """
    if not isinstance(target, HYMTarget) or not isinstance(bundle, BundleData):
        raise TypeError("solve_prescribed expects an HYMTarget and a BundleData")
    geom = geom or target.geom
    opts = opts or SolveOptions()
    if target.geom != geom or bundle.r != target.r:
        raise ShapeError("target, bundle and geometry disagree")
    goal = target.phi_target.data
    w = kernels.eigvalsh(goal)
    if not np.all(w[..., 0] > 0):
        err = _positivity_failure(w, "solve_prescribed")
        raise ContractError(
            f"{err} (the prescribed tensor must be positive; for sign-changing data "
            "see hymtorus.experiments.counterexample_pipeline)"
        )
    r = bundle.r
    F0 = bundle.F0_field(geom) if np.ndim(bundle.F0) else bundle.F0
    if initial is None:
        c = float(np.mean(np.trace(goal, axis1=-2, axis2=-1).real)) / (r * float(np.mean(F0)))
        H0 = np.broadcast_to(c * np.eye(r, dtype=np.complex128), geom.dims + (r, r)).copy()
    else:
        _require_hermitian(initial, "solve_prescribed initial guess")
        if initial.geom != geom or initial.r != r:
            raise ShapeError("initial guess disagrees with the target")
        H0 = initial.data.copy()

    report = SolveReport()
    scale = max(sup_norm(goal), np.finfo(float).tiny)
    evaluate_fixed = _matrix_evaluate(geom, F0, goal)
    first = evaluate_fixed(H0)
    if first is None:
        raise _positivity_failure(kernels.eigvalsh(H0), "solve_prescribed initial guess")
    start = first.phi
    if not np.all(kernels.eigvalsh(start)[..., 0] > 0):
        start = goal
        report.message = "initial metric has non-positive HYM tensor; continuation skipped"

    state, status = _continuation(
        H0,
        start,
        goal,
        lambda tgt: _matrix_evaluate(geom, F0, tgt),
        _matrix_direction(geom, F0, opts),
        _matrix_update(r),
        opts,
        report,
        _matrix_diagnostics(geom),
        scale,
    )
    H = state.x if state is not None else H0
    final = evaluate_fixed(H)
    report.final_residual = final.sup / scale if final is not None else float("inf")
    return MatrixField(geom, H, hermitian=True, check=False), report


# --- scalar (line bundle) solver -------------------------------------------


class _ScalarState:
    __slots__ = ("x", "s", "N", "res", "sup", "l2")


def _scalar_evaluate(geom, F0):
    def evaluate_at(target):
        def evaluate(phi):
            if not np.all(np.isfinite(phi)):
                return None
            st = _ScalarState()
            st.x = phi
            st.s = F0 + geom.laplacian(phi)
            st.N = np.exp(-phi) * st.s
            st.res = st.N - target
            if not np.all(np.isfinite(st.res)):
                return None
            st.sup = float(np.abs(st.res).max())
            st.l2 = float(np.sqrt(np.sum(st.res**2)))
            return st

        return evaluate

    return evaluate_at


def _scalar_direction(geom, opts):
    # Newton: e^{-phi} Delta psi - N psi = G_t - N, i.e. (-Delta + s) psi = e^{phi} (N - G_t)
    def direction(st, eta, kind):
        rhs = np.exp(st.x) * st.res
        shift = max(float(np.mean(st.s)), 1e-6)

        def precond(v):
            return geom.shifted_inverse(v.reshape(rhs.shape), shift)

        if kind == "picard":
            return precond(rhs)

        def apply(v):
            v = v.reshape(rhs.shape)
            return -geom.laplacian(v) + st.s * v

        x, _ = _pcg(apply, rhs, precond, eta, opts.max_linear)
        return x

    return direction


def _scalar_update(st, d, s):
    return st.x + s * d


def _scalar_diagnostics(st):
    h = np.exp(-st.x)
    return {
        "sup_trace_H": float(h.max()),
        "sup_T_norm_sq": 0.0,
        "lambda_min_H": float(h.min()),
        "lambda_max_H": float(h.max()),
    }


def solve_kazdan_warner(G, F0, geom, opts=None, initial=None, check_contracts=True):
    """Solve ``e^{-phi} (F0 + Delta_g phi) = G`` for real ``phi``.

    The path ``G_t = (1 - t) N(phi_0) + t G`` starts from the constant
    ``phi_0 = log(mean F0 / mean G)``, where ``N`` is the left-hand side.

    Parameters
    ----------
    G : ndarray
        Real, positive prescribed density.
    F0 : float or ndarray
        Reference scalar curvature.
    check_contracts : bool
        With ``False`` non-positive ``G`` or ``F0`` are accepted and Newton
        runs directly from ``phi = 0`` (used to exhibit divergence).

    Returns
    -------
    phi : ndarray
    report : SolveReport
    """
    opts = opts or SolveOptions()
    G = geom.check(G)
    if np.iscomplexobj(G):
        if np.abs(G.imag).max() > 0:
            raise ContractError("G must be real")
        G = G.real
    F0 = np.asarray(F0, dtype=float)
    if F0.ndim:
        geom.check(F0)
    positive = bool(np.all(G > 0) and np.all(F0 > 0))
    if check_contracts and not positive:
        raise ContractError(
            "Kazdan-Warner data must have G > 0 and F0 > 0 "
            "(for sign-changing G see hymtorus.experiments.counterexample_pipeline)"
        )
    report = SolveReport()
    evaluate_at = _scalar_evaluate(geom, F0)
    if initial is not None:
        phi0 = np.array(geom.check(initial), dtype=float)
    elif positive:
        phi0 = np.full(geom.dims, math.log(float(np.mean(F0)) / float(np.mean(G))))
    else:
        phi0 = np.zeros(geom.dims)
    scale = max(float(np.abs(G).max()), np.finfo(float).tiny)
    first = evaluate_at(G)(phi0)
    start = first.N if positive and np.all(first.N > 0) else G
    state, status = _continuation(
        phi0, start, G, evaluate_at, _scalar_direction(geom, opts), _scalar_update, opts, report,
        _scalar_diagnostics, scale,
    )
    phi = state.x if state is not None else phi0
    final = evaluate_at(G)(phi)
    report.final_residual = final.sup / scale if final is not None else float("inf")
    return phi, report


# --- normalization and comparison ------------------------------------------


def normalize_reference(omega, geom=None):
    """Conformal normalization making the least eigenvalue of ``Omega`` constant.

    Returns ``f`` (mean zero) and ``lambda0 = integrate(kappa) / volume`` with
    ``kappa = lambda_min(Omega)``, such that ``Omega + (Delta_g f) Id`` has
    least eigenvalue ``lambda0`` everywhere.

    Raises
    ------
    ObstructionError
        If ``integrate(kappa) <= 0``.
    """
    _require_hermitian(omega, "normalize_reference")
    geom = geom or omega.geom
    if geom != omega.geom:
        raise ShapeError("field and geometry disagree")
    kappa, _ = eigen_range(omega)
    total = float(geom.integrate(kappa))
    if not total > 0:
        raise ObstructionError(f"integral of the least eigenvalue is {total:.6g} <= 0; no normalization exists")
    lam0 = total / geom.volume
    rhs = lam0 - kappa
    rhs = rhs - geom.integrate(rhs) / geom.volume  # remove quadrature round-off from the mean
    return geom.poisson_solve(rhs), lam0


def comparison_check(H, lam):
    """``True`` iff ``sup lambda_max(H) <= lam + 1e-6``."""
    _require_hermitian(H, "comparison_check")
    _, lmax = eigen_range(H)
    return bool(lmax.max() <= lam + COMPARISON_SLACK)
