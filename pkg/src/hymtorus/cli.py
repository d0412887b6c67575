"""Command-line driver: ``hymtorus <subcommand> [options]``.

Settings come from an optional INI file (``--config``) with sections
``[geometry]``, ``[bundle]``, ``[solver]``, ``[data]`` and ``[output]``;
command-line flags override it.  Exit codes: 0 success, 1 a check evaluated
false, 2 contract violation, 3 obstruction, 4 non-convergence, 64 usage.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import sys
from pathlib import Path

import numpy as np

from . import chern, experiments, generators, hymf
from .curvature import (
    BundleData,
    HYMTarget,
    curvature_from_metric,
    hym_endomorphism,
    hym_residual,
    kahler_curvature_from_potential,
    scalar_line_curvature,
)
from .errors import BracketError, ContractError, ObstructionError
from .geometry import TorusGeometry
from .matrix import MatrixField, dagger, eigen_range, herm_apply
from .solver import SolveOptions, comparison_check, normalize_reference, solve_kazdan_warner, solve_prescribed

EXIT_OK = 0
EXIT_FALSE = 1
EXIT_CONTRACT = 2
EXIT_OBSTRUCTION = 3
EXIT_NONCONVERGENCE = 4
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --- settings ----------------------------------------------------------------


class Settings:
    """Merged view of the INI file and command-line overrides."""

    def __init__(self, args):
        self.cfg = configparser.ConfigParser()
        if args.config:
            path = Path(args.config)
            if not path.is_file():
                raise ContractError(f"config file {path} not found")
            self.cfg.read(path)
            self.base = path.parent
        else:
            self.base = Path.cwd()
        self.args = args

    def get(self, section, key, fallback=None, kind=str):
        value = self.cfg.get(section, key, fallback=None)
        if value is None:
            return fallback
        if kind is bool:
            return self.cfg.getboolean(section, key)
        return kind(value)

    def path(self, section, key):
        value = self.get(section, key)
        if value is None:
            return None
        p = Path(value)
        return p if p.is_absolute() else self.base / p

    @property
    def seed(self):
        return self.args.seed if self.args.seed is not None else self.get("data", "seed", 0, int)

    def geometry(self, default_n=1):
        n = self.get("geometry", "n", default_n, int)
        points = self.args.grid or self.get("geometry", "points", None, int)
        period = self.get("geometry", "period", 1.0, float)
        return TorusGeometry.square(n, points, period)

    def options(self):
        tol = self.args.tol if self.args.tol is not None else self.get("solver", "tol", 1e-9, float)
        return SolveOptions(
            tol_residual=tol,
            max_newton=self.get("solver", "max_newton", 50, int),
            continuation_steps=self.get("solver", "continuation_steps", 8, int),
        )

    def out_dir(self):
        out = self.args.out or self.get("output", "dir") or "."
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        return out


def _write_csv(path, rows):
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerows(rows)


def _write_text(path, text):
    Path(path).write_text(text.rstrip("\n") + "\n")


# --- data builders -----------------------------------------------------------


def _bundle(st):
    return BundleData(st.get("bundle", "rank", 2, int), st.get("bundle", "F0", 1.0, float))


def _matrix_target(st, geom, bundle):
    kind = st.get("data", "kind", "constant")
    if kind == "constant":
        c = st.get("data", "value", 1.0, float)
        return MatrixField.identity(geom, bundle.r, c)
    if kind == "manufactured":
        Hs = generators.positive_field(
            geom, bundle.r, st.seed, st.get("data", "modes", 1, int), st.get("data", "amplitude", 0.5, float)
        )
        return hym_endomorphism(Hs, bundle)
    if kind == "file":
        return hymf.read_matrix(st.path("data", "path"), hermitian=True)
    raise ContractError(f"unknown data kind {kind!r}")


def _scalar_data(st, geom, F0, default=1.0):
    """Returns ``(geom, values)``; a file brings its own geometry."""
    kind = st.get("data", "kind", "constant")
    if kind == "constant":
        return geom, np.full(geom.dims, st.get("data", "value", default, float))
    if kind == "manufactured":
        phi = generators.bandlimited(
            geom, st.seed, st.get("data", "modes", 1, int), st.get("data", "amplitude", 0.5, float)
        )
        return geom, scalar_line_curvature(phi, F0, geom)[1]
    if kind == "file":
        fgeom, values = hymf.read_scalar(st.path("data", "path"))
        return fgeom, values.real
    raise ContractError(f"unknown data kind {kind!r}")


# --- subcommands -------------------------------------------------------------


def cmd_solve(st):
    geom = st.geometry()
    bundle = _bundle(st)
    # positivity is checked by the solver, whose message points at the sign-changing pipeline
    target = HYMTarget(_matrix_target(st, geom, bundle), check=False)
    H, report = solve_prescribed(target, bundle, target.geom, st.options())
    out = st.out_dir()
    res, sup, l2 = hym_residual(H, target, bundle)
    hymf.write_matrix(out / "H.hymf", H)
    hymf.write_matrix(out / "residual.hymf", res)
    _write_text(out / "report.txt", report.summary() + f"\nresidual sup = {sup:.6e}\nresidual L2 = {l2:.6e}")
    _write_csv(out / "residual_history.csv", report.history_rows())
    print(report.summary())
    return EXIT_OK if report.converged else EXIT_NONCONVERGENCE


def cmd_kazdan_warner(st):
    geom = st.geometry()
    F0 = st.get("bundle", "F0", 1.0, float)
    geom, G = _scalar_data(st, geom, F0)
    phi, report = solve_kazdan_warner(G, F0, geom, st.options())
    out = st.out_dir()
    hymf.write_scalar(out / "phi.hymf", phi, geom)
    _write_text(out / "report.txt", report.summary())
    _write_csv(out / "residual_history.csv", report.history_rows())
    print(report.summary())
    return EXIT_OK if report.converged else EXIT_NONCONVERGENCE


def cmd_normalize(st):
    geom = st.geometry()
    bundle = _bundle(st)
    kind = st.get("data", "kind", "manufactured")
    if kind == "file":
        omega = hymf.read_matrix(st.path("data", "path"), hermitian=True)
        geom = omega.geom
    else:
        a = generators.hermitian_field(
            geom, bundle.r, st.seed, st.get("data", "modes", 2, int), st.get("data", "amplitude", 1.0, float)
        )
        c = st.get("data", "value", 1.0, float)
        omega = MatrixField(geom, c * np.eye(bundle.r) + a, hermitian=True, check=False)
    f, lam0 = normalize_reference(omega, geom)
    kappa, _ = eigen_range(omega + MatrixField.scalar(geom, geom.laplacian(f), omega.r))
    out = st.out_dir()
    hymf.write_scalar(out / "f.hymf", f, geom)
    text = f"lambda0 = {lam0:.15g}\nsup |kappa_new - lambda0| = {np.abs(kappa - lam0).max():.3e}"
    _write_text(out / "report.txt", text)
    print(text)
    return EXIT_OK


def _chern_output(st, report):
    out = st.out_dir()
    _write_text(out / "report.txt", report.summary())
    _write_csv(out / "chern.csv", report.rows())
    print(report.summary())
    return EXIT_OK if report.passed else EXIT_FALSE


def cmd_chern_bundle(st):
    path = st.path("data", "path")
    if path is not None:
        curv = hymf.read_curvature(path)
    else:
        geom = st.geometry(default_n=2)
        h = generators.positive_field(
            geom, st.get("bundle", "rank", 2, int), st.seed,
            st.get("data", "modes", 1, int), st.get("data", "amplitude", 0.5, float),
        )
        curv = curvature_from_metric(h)
        hymf.write_curvature(st.out_dir() / "curvature.hymf", curv)
    return _chern_output(st, chern.bundle_inequality_check(curv))


def cmd_chern_kahler(st):
    path = st.path("data", "path")
    if path is not None:
        curv = hymf.read_curvature(path)
    else:
        geom = st.geometry(default_n=2)
        u = generators.bandlimited(
            geom, st.seed, st.get("data", "modes", 1, int), st.get("data", "amplitude", 0.01, float)
        )
        curv = kahler_curvature_from_potential(u, geom)
        hymf.write_curvature(st.out_dir() / "curvature.hymf", curv)
    return _chern_output(st, chern.kahler_invariants_and_check(curv))


def cmd_counterexample(st):
    geom = st.geometry()
    art = experiments.counterexample_pipeline(
        geom,
        F0=st.get("bundle", "F0", 1.0, float),
        amplitude=st.get("data", "amplitude", 1.0, float),
        t_lo=st.get("data", "t_lo", 1e-3, float),
        t_hi=st.get("data", "t_hi", 20.0, float),
    )
    out = st.out_dir()
    for name in ("f", "G", "psi", "phi1", "phi2"):
        hymf.write_scalar(out / f"{name}.hymf", getattr(art, name), geom)
    _write_csv(out / "Q_samples.csv", [("t", "Q")] + art.Q_samples)
    _write_text(out / "report.txt", art.summary())
    print(art.summary())
    return EXIT_OK


def cmd_nonexistence(st):
    geom = st.geometry()
    geom, G = _scalar_data(st, geom, 0.0, default=-1.0)
    rep = experiments.nonexistence_demo(G, geom, run_solver=st.args.run_solver, opts=st.options())
    text = f"integral of G = {rep.integral:.12g}\n{rep.message}"
    if rep.solve_report is not None:
        text += "\nsolver run without contract checks:\n" + rep.solve_report.summary()
    _write_text(st.out_dir() / "report.txt", text)
    print(text)
    return EXIT_OBSTRUCTION if rep.obstructed else EXIT_OK


def cmd_compare(st):
    A = hymf.read_matrix(st.args.metric, hermitian=True)
    if st.args.reference:
        B = hymf.read_matrix(st.args.reference, hermitian=True)
        w = herm_apply(B.data, lambda x: 1.0 / np.sqrt(x), floor=0.0, op="compare reference")
        data = w @ A.data @ w
        A = MatrixField(A.geom, 0.5 * (data + dagger(data)), hermitian=True, check=False)
    ok = comparison_check(A, st.args.lam)
    _, lmax = eigen_range(A)
    print(f"sup lambda_max = {lmax.max():.12g}; bound {st.args.lam:g}: {'pass' if ok else 'fail'}")
    return EXIT_OK if ok else EXIT_FALSE


COMMANDS = {
    "solve": (cmd_solve, "solve the prescribed HYM equation (matrix case)"),
    "kazdan-warner": (cmd_kazdan_warner, "solve the scalar line-bundle equation"),
    "normalize": (cmd_normalize, "make the least eigenvalue of a reference field constant"),
    "chern-bundle": (cmd_chern_bundle, "bundle Chern number inequality on T^4"),
    "chern-kahler": (cmd_chern_kahler, "Kähler Chern number inequality on T^4"),
    "counterexample": (cmd_counterexample, "two solutions for a sign-changing G"),
    "nonexistence-demo": (cmd_nonexistence, "integral obstruction on the trivial bundle"),
    "compare": (cmd_compare, "check h <= lam * h_ref for HYMF metric files"),
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with geometry, bundle, solver and data settings")
    common.add_argument("--out", help="output directory (default: current directory)")
    common.add_argument("--seed", type=int, help="seed for generated data")
    common.add_argument("--tol", type=float, help="relative residual tolerance")
    common.add_argument("--grid", type=int, help="grid points per real axis")

    parser = _Parser(prog="hymtorus", description="Prescribed Hermitian-Yang-Mills solvers on flat tori.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        if name == "nonexistence-demo":
            p.add_argument("--run-solver", action="store_true", help="also run Newton without contract checks")
        if name == "compare":
            p.add_argument("metric", help="HYMF file holding H")
            p.add_argument("reference", nargs="?", help="optional HYMF file holding the reference metric")
            p.add_argument("--lam", type=float, default=1.0, help="comparison constant (default 1)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    func = COMMANDS[args.command][0]
    try:
        return func(Settings(args))
    except ObstructionError as exc:
        print(f"obstruction: {exc}", file=sys.stderr)
        return EXIT_OBSTRUCTION
    except BracketError as exc:
        print(f"no bracket: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (ContractError, OSError, configparser.Error) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT


if __name__ == "__main__":
    sys.exit(main())
