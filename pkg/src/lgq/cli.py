"""Command-line front end.

Subcommands cover the whole pipeline: steady-state solves, classification
of putative true covariances, smoothing, parameter sweeps, the extremal
boundary, the snapshot-evolution contours, and seeded trajectory
simulation.  Every command is deterministic given its inputs and seed, and
every output file embeds the configuration and a model content hash.

Exit codes: 0 success, 1 input error, 2 convergence (or other numeric)
error, 3 singularity error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConvergenceError, NumericError, SingularityError
from .model import (
    GaussianState,
    Matrix,
    ModelFile,
    half_hbar_units,
    load_model,
    model_hash,
)
from .presets import PRESET_MODELS, load_preset, opo_test_covariances
from .realizability import (
    PutativeParams,
    classify,
    cov_to_params,
    default_tol,
    param_to_cov,
    steady_context,
    uncertainty_ok,
)
from .riccati import SteadySolveConfig, riccati_rhs, true_steady
from .smoothing import smoothed_cov, smoothed_det_normalized, theorem_C_check
from .sweep import (
    GridSpec,
    homodyne_boundary,
    sweep_grid,
    write_boundary_csv,
    write_sweep_csv,
)
from .trajectory import (
    ellipse_points,
    evolve_snapshot,
    innovations,
    mixture_statistic,
    simulate_joint,
    write_bundle_csv,
)

_DEFAULT_SEED = 0
_ELLIPSE_POINTS = 256


@dataclass
class RunConfig:
    """Shared command configuration resolved from the parsed arguments."""

    model_file: ModelFile
    model_name: str
    solve: SteadySolveConfig
    tol: float | None
    seed: int
    out: Path | None

    @property
    def hash(self) -> str:
        return model_hash(self.model_file.model)


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with code 1, not 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--model",
        default="opo",
        help="model JSON file, or a preset name (%s)" % ", ".join(sorted(PRESET_MODELS)),
    )
    parser.add_argument(
        "--unravelling",
        default="alice",
        help="name of the observed unravelling (default: alice)",
    )
    parser.add_argument("--dt", type=float, default=None, help="integration step")
    parser.add_argument("--t-max", type=float, default=None, help="integration cutoff")
    parser.add_argument(
        "--tol", type=float, default=None,
        help="eigenvalue tolerance for the semidefiniteness checks",
    )
    parser.add_argument(
        "--solver-tol", type=float, default=1e-10,
        help="residual threshold for the steady-state solvers",
    )
    parser.add_argument("--seed", type=int, default=_DEFAULT_SEED, help="RNG seed")
    parser.add_argument("--out", default=None, help="output file (or directory for simulate)")


def _run_config(args) -> RunConfig:
    name = args.model
    if name in PRESET_MODELS:
        model_file = load_preset(name)
    else:
        path = Path(name)
        if not path.exists():
            raise ValueError(f"model file {name!r} does not exist and is not a preset")
        model_file = load_model(path)
    solve = SteadySolveConfig(dt=args.dt, t_max=args.t_max, tol=args.solver_tol)
    return RunConfig(
        model_file=model_file,
        model_name=name,
        solve=solve,
        tol=args.tol,
        seed=args.seed,
        out=Path(args.out) if args.out else None,
    )


def _config_dict(run: RunConfig, **extra) -> dict:
    doc = {
        "model": run.model_name,
        "model_hash": run.hash,
        "dt": run.solve.dt,
        "t_max": run.solve.t_max,
        "solver_tol": run.solve.tol,
        "tol": run.tol,
        "seed": run.seed,
    }
    doc.update(extra)
    return doc


def _metadata(run: RunConfig, **extra) -> dict:
    meta = {k: v for k, v in _config_dict(run, **extra).items() if v is not None}
    return meta


def _emit_json(doc: dict, out: Path | None) -> None:
    text = json.dumps(doc, indent=2)
    if out is None:
        print(text)
    else:
        out.write_text(text + "\n", encoding="utf-8")
        print(f"wrote {out}")


def _format_matrix(mat: Matrix, run: RunConfig) -> str:
    scaled = half_hbar_units(mat, run.model_file.model)
    return "\n".join(
        "    " + "  ".join(f"{value:10.4f}" for value in row) for row in scaled
    )


# ---------------------------------------------------------------------------
# Putative-covariance sources shared by classify / smooth / fig2
# ---------------------------------------------------------------------------

def _add_cov_source(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--gamma", type=float, default=None, help="p-variance in hbar/2 units")
    parser.add_argument("--delta", type=float, default=None, help="normalized correlation")
    parser.add_argument("--cov-file", default=None, help="JSON file with the covariance (raw units)")
    parser.add_argument(
        "--fixture", default=None,
        help="built-in test covariance: a, b, c, c_hbar2, or d (preset models only)",
    )
    parser.add_argument(
        "--unobserved", default=None,
        help="derive the true covariance from this named unobserved unravelling",
    )


def _load_cov_file(path: str) -> Matrix:
    with open(path, encoding="utf-8") as handle:
        doc = json.load(handle)
    if isinstance(doc, dict):
        doc = doc.get("cov")
    mat = np.array(doc, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"{path}: covariance must be a square matrix")
    return mat


def _resolve_cov(args, run: RunConfig) -> tuple[str, Matrix]:
    """Return (label, covariance) from exactly one of the sources."""
    sources = [
        args.gamma is not None or args.delta is not None,
        args.cov_file is not None,
        args.fixture is not None,
        args.unobserved is not None,
    ]
    if sum(sources) != 1:
        raise ValueError(
            "specify exactly one covariance source: --gamma/--delta, "
            "--cov-file, --fixture, or --unobserved"
        )
    model = run.model_file.model
    if args.cov_file is not None:
        return Path(args.cov_file).stem, _load_cov_file(args.cov_file)
    if args.fixture is not None:
        fixtures = opo_test_covariances(model.hbar)
        if args.fixture not in fixtures:
            raise ValueError(
                f"unknown fixture {args.fixture!r}; known: {', '.join(sorted(fixtures))}"
            )
        return args.fixture, fixtures[args.fixture]
    if args.unobserved is not None:
        u_o = run.model_file.unravelling(args.unravelling)
        u_u = run.model_file.unravelling(args.unobserved)
        return args.unobserved, true_steady(model, u_o, u_u, run.solve)
    if args.gamma is None or args.delta is None:
        raise ValueError("--gamma and --delta must be given together")
    params = PutativeParams(gamma=args.gamma, delta=args.delta)
    return f"gamma={args.gamma:g},delta={args.delta:g}", param_to_cov(params, model)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_steady(args) -> int:
    run = _run_config(args)
    model = run.model_file.model
    u_o = run.model_file.unravelling(args.unravelling)
    ctx = steady_context(model, u_o, run.solve)
    V_R = ctx.V_R
    res_f = float(np.linalg.norm(riccati_rhs(model, u_o, ctx.V_F, +1)))
    res_r = float(np.linalg.norm(riccati_rhs(model, u_o, V_R, -1)))
    bound = ctx.bound

    print(f"filtered steady covariance (units of hbar/2), residual {res_f:.3e}:")
    print(_format_matrix(ctx.V_F, run))
    print(f"retrofiltered steady covariance (units of hbar/2), residual {res_r:.3e}:")
    print(_format_matrix(V_R, run))
    if bound.n_infinite:
        print(f"unconditioned bound: {bound.n_infinite} divergent direction(s);")
        if bound.n_finite:
            print("finite-subspace covariance (units of hbar/2):")
            print(_format_matrix(bound.cov_finite, run))
    else:
        print("unconditioned steady covariance (units of hbar/2):")
        print(_format_matrix(bound.full_matrix(), run))

    doc = {
        "config": _config_dict(run, command="steady", unravelling=args.unravelling),
        "V_F": ctx.V_F.tolist(),
        "V_R": V_R.tolist(),
        "residual_filtered": res_f,
        "residual_retrofiltered": res_r,
        "unconditioned": {
            "finite_basis": bound.finite_basis.tolist(),
            "cov_finite": bound.cov_finite.tolist(),
            "n_infinite": bound.n_infinite,
        },
    }
    if run.out is not None:
        _emit_json(doc, run.out)
    return 0


def _marker_row(path: Path, label: str, report_doc: dict) -> None:
    header = "label,gamma,delta,purity,sclass,unc_fit,filt_fit,realizable,extremal\n"
    fresh = not path.exists()
    with open(path, "a", encoding="utf-8") as handle:
        if fresh:
            handle.write(header)
        handle.write(
            ",".join(
                [
                    label,
                    f"{report_doc.get('gamma', float('nan')):.17g}",
                    f"{report_doc.get('delta', float('nan')):.17g}",
                    f"{report_doc['purity']:.17g}",
                    str(int(report_doc["uncertainty_ok"])),
                    str(int(report_doc["fits_unconditioned"])),
                    str(int(report_doc["fits_filtered"])),
                    str(int(report_doc["realizable"])),
                    str(int(report_doc["extremal"])),
                ]
            )
            + "\n"
        )


def cmd_classify(args) -> int:
    run = _run_config(args)
    model = run.model_file.model
    u_o = run.model_file.unravelling(args.unravelling)
    label, cov = _resolve_cov(args, run)
    ctx = steady_context(model, u_o, run.solve)
    report = classify(model, u_o, cov, tol=run.tol, context=ctx)
    doc = report.to_dict()
    doc["label"] = label
    doc["cov"] = np.asarray(cov).tolist()
    try:
        params = cov_to_params(cov, model)
        doc["gamma"] = params.gamma
        doc["delta"] = params.delta
    except ValueError:
        pass
    doc["config"] = _config_dict(run, command="classify", unravelling=args.unravelling)
    if args.csv is not None:
        _marker_row(Path(args.csv), args.label or label, doc)
        print(f"appended marker row to {args.csv}")
    _emit_json(doc, run.out)
    return 0


def cmd_smooth(args) -> int:
    run = _run_config(args)
    model = run.model_file.model
    u_o = run.model_file.unravelling(args.unravelling)
    label, cov = _resolve_cov(args, run)
    ctx = steady_context(model, u_o, run.solve)
    V_S = smoothed_cov(ctx.V_F, ctx.V_R, cov)
    tol = run.tol if run.tol is not None else default_tol(model)
    flags = theorem_C_check(model, u_o, cov, cfg=run.solve, tol=tol)
    det_norm = smoothed_det_normalized(V_S, model)
    doc = {
        "label": label,
        "V_S": V_S.tolist(),
        "det_normalized": det_norm,
        "sclass": bool(uncertainty_ok(V_S, model, tol)),
        "smoothed_fits_filtered": flags["fits_filtered"],
        "smoothed_fits_unconditioned": flags["fits_unconditioned"],
        "config": _config_dict(run, command="smooth", unravelling=args.unravelling),
    }
    print(f"smoothed covariance for {label} (units of hbar/2), det (2/hbar)^2N = {det_norm:.4f}:")
    print(_format_matrix(V_S, run))
    _emit_json(doc, run.out)
    return 0


def _parse_grid(text: str) -> GridSpec:
    try:
        gamma_part, delta_part = text.split(",")
        g_lo, g_hi, g_n = gamma_part.split(":")
        d_lo, d_hi, d_n = delta_part.split(":")
        return GridSpec(
            gamma_range=(float(g_lo), float(g_hi), int(g_n)),
            delta_range=(float(d_lo), float(d_hi), int(d_n)),
        )
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ValueError) and "range" in str(exc):
            raise
        raise ValueError(
            f"bad grid spec {text!r}; expected gLo:gHi:gN,dLo:dHi:dN"
        ) from None


def cmd_sweep(args) -> int:
    run = _run_config(args)
    if run.out is None:
        raise ValueError("sweep requires --out for the CSV")
    model = run.model_file.model
    u_o = run.model_file.unravelling(args.unravelling)
    grid = _parse_grid(args.grid)
    rows = sweep_grid(model, u_o, grid, cfg=run.solve, tol=run.tol, workers=args.workers)
    tol = run.tol if run.tol is not None else default_tol(model)
    meta = _metadata(
        run, command="sweep", unravelling=args.unravelling, grid=args.grid,
        psd_tol=tol,
    )
    write_sweep_csv(rows, run.out, meta)
    print(f"wrote {len(rows)} rows to {run.out}")
    return 0


def cmd_boundary(args) -> int:
    run = _run_config(args)
    if run.out is None:
        raise ValueError("boundary requires --out for the CSV")
    model = run.model_file.model
    u_o = run.model_file.unravelling(args.unravelling)
    points = homodyne_boundary(
        model, u_o, args.phases, cfg=run.solve, tol=run.tol, eta_u=args.eta_u
    )
    meta = _metadata(
        run, command="boundary", unravelling=args.unravelling, phases=args.phases
    )
    write_boundary_csv(points, run.out, meta)
    realizable = sum(p.check.ok for p in points)
    extremal = sum(p.check.extremal for p in points)
    print(
        f"wrote {len(points)} phases to {run.out} "
        f"({realizable} realizable, {extremal} extremal)"
    )
    return 0


def _unconditioned_segments(bound, q_extent: float, n_points: int):
    """Contour of the unconditioned bound for a single-mode model.

    With a divergent direction the 1-SD 'ellipse' degenerates into two
    straight lines at +/- the finite standard deviation; they are emitted as
    two polyline segments spanning the panel.
    """
    if bound.n_infinite == 0:
        state = GaussianState(mean=np.zeros(2), cov=bound.full_matrix())
        return [ellipse_points(state, n_points)]
    if bound.n_finite == 0:
        return []
    direction = bound.finite_basis[:, 0]
    sd = float(np.sqrt(bound.cov_finite[0, 0]))
    divergent = np.array([direction[1], -direction[0]])
    ts = np.linspace(-q_extent, q_extent, n_points)
    segments = []
    for sign in (+1.0, -1.0):
        offset = sign * sd * direction
        segments.append(np.array([offset + t * divergent for t in ts]))
    return segments


def cmd_fig2(args) -> int:
    run = _run_config(args)
    if run.out is None:
        raise ValueError("fig2 requires --out for the CSV")
    model = run.model_file.model
    if model.N != 1:
        raise ValueError("fig2 contours are defined for single-mode models")
    u_o = run.model_file.unravelling(args.unravelling)
    ctx = steady_context(model, u_o, run.solve)
    dt, _ = run.solve.resolve(model)

    if args.cov_file is not None:
        panels = [(Path(args.cov_file).stem, _load_cov_file(args.cov_file))]
    else:
        fixtures = opo_test_covariances(model.hbar)
        names = [name.strip() for name in args.fixtures.split(",") if name.strip()]
        unknown = [name for name in names if name not in fixtures]
        if unknown:
            raise ValueError(f"unknown fixture(s): {', '.join(unknown)}")
        panels = [(name, fixtures[name]) for name in names]

    n_points = args.points
    rows = []
    for index, (name, V_T) in enumerate(panels):
        paths = evolve_snapshot(
            model, u_o, V_T, np.zeros(2), dt, args.t, seed=run.seed + index
        )
        mean_T = paths.mean_path[:, -1]
        V_end = paths.cov_path.covs[-1]
        contours = [
            ("initial", 0, ellipse_points(GaussianState(np.zeros(2), V_T), n_points)),
            ("translated", 0, ellipse_points(GaussianState(mean_T, V_T), n_points)),
            ("evolved", 0, ellipse_points(GaussianState(mean_T, V_end), n_points)),
            ("filtered", 0, ellipse_points(GaussianState(np.zeros(2), ctx.V_F), n_points)),
        ]
        extent = 1.5 * max(
            float(np.abs(points[:, 0]).max()) for _, _, points in contours
        )
        for segment, points in enumerate(
            _unconditioned_segments(ctx.bound, extent, n_points)
        ):
            contours.append(("unconditioned", segment, points))
        for contour, segment, points in contours:
            for idx, (q, p) in enumerate(points):
                rows.append((name, contour, segment, idx, q, p))

    meta = _metadata(
        run, command="fig2", unravelling=args.unravelling,
        T=args.t, fig_dt=dt, panels=",".join(name for name, _ in panels),
    )
    with open(run.out, "w", encoding="utf-8") as handle:
        for key, value in meta.items():
            handle.write(f"# {key}={value}\n")
        handle.write("panel,contour,segment,idx,q,p\n")
        for name, contour, segment, idx, q, p in rows:
            handle.write(f"{name},{contour},{segment},{idx},{q:.17g},{p:.17g}\n")
    print(f"wrote {len(rows)} contour points to {run.out}")
    return 0


def cmd_simulate(args) -> int:
    run = _run_config(args)
    model = run.model_file.model
    u_o = run.model_file.unravelling(args.unravelling)
    u_u = run.model_file.unravelling(args.unobserved)
    sim_dt = args.dt if args.dt is not None else 1e-3
    out_dir = run.out if run.out is not None else Path(".")
    out_dir.mkdir(parents=True, exist_ok=True)

    ctx = steady_context(model, u_o, run.solve)
    V_T = true_steady(model, u_o, u_u, run.solve)
    expected = ctx.V_F - V_T

    if args.burn_in is None:
        rates = np.abs(np.linalg.eigvals(model.A).real)
        damped = rates[rates > 1e-12]
        tau = 1.0 / float(damped.min()) if damped.size else 1.0
        burn_in = 10.0 * tau
    else:
        burn_in = args.burn_in

    stats = []
    combined = np.zeros_like(expected)
    meta_common = _metadata(
        run, command="simulate", unravelling=args.unravelling,
        unobserved=args.unobserved, T=args.t, sim_dt=sim_dt, burn_in=burn_in,
    )
    for index in range(args.n_traj):
        traj_seed = run.seed ^ index
        bundle = simulate_joint(model, u_o, u_u, args.t, sim_dt, traj_seed, run.solve)
        csv_path = out_dir / f"trajectory_{index:03d}.csv"
        write_bundle_csv(bundle, model, csv_path, metadata=meta_common)
        statistic = mixture_statistic(bundle, burn_in)
        combined += statistic
        innov = innovations(bundle, u_o)
        innov_var = float(innov.var(axis=1).mean()) / sim_dt
        rel = float(
            np.linalg.norm(statistic - expected) / np.linalg.norm(expected)
        ) if np.linalg.norm(expected) > 0 else float(np.linalg.norm(statistic))
        stats.append(
            {
                "seed": traj_seed,
                "csv": csv_path.name,
                "mixture_statistic": statistic.tolist(),
                "relative_frobenius_error": rel,
                "innovation_variance_over_dt": innov_var,
            }
        )
    combined /= args.n_traj
    doc = {
        "config": meta_common,
        "expected_mixture": expected.tolist(),
        "combined_mixture_statistic": combined.tolist(),
        "combined_relative_frobenius_error": float(
            np.linalg.norm(combined - expected) / np.linalg.norm(expected)
        ) if np.linalg.norm(expected) > 0 else 0.0,
        "trajectories": stats,
    }
    json_path = out_dir / "mixture.json"
    json_path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {args.n_traj} trajectories and {json_path}")
    return 0


# ---------------------------------------------------------------------------
# Parser assembly
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="lgq",
        description="Filtering, smoothing, and realizability for linear Gaussian quantum systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_steady = sub.add_parser("steady", help="solve the steady-state covariances")
    _add_common(p_steady)
    p_steady.set_defaults(func=cmd_steady)

    p_classify = sub.add_parser("classify", help="classify a putative true covariance")
    _add_common(p_classify)
    _add_cov_source(p_classify)
    p_classify.add_argument("--csv", default=None, help="append a marker row to this CSV")
    p_classify.add_argument("--label", default=None, help="marker label for the CSV row")
    p_classify.set_defaults(func=cmd_classify)

    p_smooth = sub.add_parser("smooth", help="smoothed covariance from a putative true covariance")
    _add_common(p_smooth)
    _add_cov_source(p_smooth)
    p_smooth.set_defaults(func=cmd_smooth)

    p_sweep = sub.add_parser("sweep", help="scan the (gamma, delta) grid")
    _add_common(p_sweep)
    p_sweep.add_argument(
        "--grid", default="0.05:1.2:200,-0.9:0.9:200",
        help="gamma and delta ranges as gLo:gHi:gN,dLo:dHi:dN",
    )
    p_sweep.add_argument("--workers", type=int, default=1, help="parallel workers")
    p_sweep.set_defaults(func=cmd_sweep)

    p_boundary = sub.add_parser("boundary", help="trace the extremal homodyne boundary")
    _add_common(p_boundary)
    p_boundary.add_argument("--phases", type=int, default=32, help="number of phases in [0, pi)")
    p_boundary.add_argument("--eta-u", type=float, default=None, help="unobserved efficiency override")
    p_boundary.set_defaults(func=cmd_boundary)

    p_fig2 = sub.add_parser("fig2", help="snapshot-evolution contour CSV")
    _add_common(p_fig2)
    p_fig2.add_argument("--fixtures", default="a,b,c,d", help="comma-separated fixture names")
    p_fig2.add_argument("--cov-file", default=None, help="single-panel covariance JSON instead")
    p_fig2.add_argument("--t", type=float, default=0.8, help="evolution time")
    p_fig2.add_argument("--points", type=int, default=_ELLIPSE_POINTS, help="points per contour")
    p_fig2.set_defaults(func=cmd_fig2)

    p_sim = sub.add_parser("simulate", help="seeded joint trajectory simulation")
    _add_common(p_sim)
    p_sim.add_argument("--unobserved", required=True, help="named unobserved unravelling")
    p_sim.add_argument("--t", type=float, default=100.0, help="total simulated time")
    p_sim.add_argument("--n-traj", type=int, default=1, help="number of trajectories")
    p_sim.add_argument("--burn-in", type=float, default=None, help="burn-in time for the statistic")
    p_sim.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ConvergenceError as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 2
    except SingularityError as exc:
        print(f"singularity error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
