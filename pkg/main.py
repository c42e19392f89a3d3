import argparse
import sys
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Optional

import numpy as np
from dotenv import load_dotenv

from blockmat import ds
from bound_report import Report, render_json, render_text, save_report
from config import Tolerances, get_reports_dir, get_tolerances
from console import print_banner, print_error, print_verdict
from design import (
    DesignParams,
    WellSpreadMode,
    design_rank_check,
    verify_design,
)
from errors import BlockRankError, InvalidArgument, OutputError
from generators import (
    gen_concurrent_lines,
    gen_cyclic_design,
    gen_grid,
    gen_hesse,
    gen_orthopair,
    gen_pencil_lines,
    gen_plane_conics,
    gen_product_sg,
)
from incidence import curve_analysis, line_analysis
from rigidity import collinear_triples, rigidity_bound
from scaling import capacity_objective, duality_check, sinkhorn_scale, transpose_capacity_diagnostic
from scene_io import Scene, load_scene, save_scene
from subspace_sg import sg_matrices

SUBCOMMANDS = ("scale", "capacity", "check-design", "rank-bound", "rigidity",
               "sg", "lines", "curves", "gen")
GEN_KINDS = ("hesse", "grid", "orthopair", "product-sg", "pencil", "concurrent",
             "conics", "design")


@dataclass
class JobConfig:
    """Everything a single CLI run needs."""

    subcommand: str
    input_path: Optional[str] = None
    output_path: Optional[str] = None
    fmt: str = "json"
    tolerances: Tolerances = field(default_factory=Tolerances)
    mode: Optional[str] = None
    delta: Optional[float] = None
    q: Optional[int] = None
    k: Optional[int] = None
    t: Optional[int] = None
    homogeneous: bool = False
    scale: bool = False
    kind: Optional[str] = None
    size: Optional[int] = None
    dim: Optional[int] = None
    count: Optional[int] = None
    save_report: bool = False
    timing: bool = False

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise InvalidArgument(f"unknown subcommand {self.subcommand!r}")
        if self.fmt not in ("json", "text"):
            raise InvalidArgument(f"format must be json or text, got {self.fmt!r}")
        tol = self.tolerances
        for name in ("rank_rtol", "ds_tol", "collinear_tol"):
            if not getattr(tol, name) > 0:
                raise InvalidArgument(f"{name} must be positive")
        if self.delta is not None and not 0 < self.delta <= 1:
            raise InvalidArgument(f"--delta must lie in (0, 1], got {self.delta}")

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "JobConfig":
        base = get_tolerances()
        tolerances = Tolerances(
            rank_rtol=args.tol_rank if args.tol_rank is not None else base.rank_rtol,
            ds_tol=args.tol_ds if args.tol_ds is not None else base.ds_tol,
            collinear_tol=args.tol_collinear if args.tol_collinear is not None else base.collinear_tol,
            max_iter=args.max_iter if args.max_iter is not None else base.max_iter,
            seed=args.seed if args.seed is not None else base.seed,
            heuristic_samples=args.samples if args.samples is not None else base.heuristic_samples,
            log_factor_ceiling=base.log_factor_ceiling,
            enumeration_cap=base.enumeration_cap,
        )
        return cls(
            subcommand=args.subcommand, input_path=args.input_path, output_path=args.output_path,
            fmt=args.format, tolerances=tolerances, mode=args.mode, delta=args.delta,
            q=args.q, k=args.k, t=args.t, homogeneous=args.homogeneous, scale=args.scale,
            kind=args.kind, size=args.size, dim=args.dim, count=args.count,
            save_report=args.save_report, timing=args.timing,
        )

    def to_dict(self) -> Dict[str, Any]:
        doc = asdict(self)
        doc.pop("save_report")
        doc.pop("timing")
        return {k: v for k, v in doc.items() if v is not None}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blockrank",
        description="Block-matrix scaling, design rank bounds and incidence certificates",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--in", dest="input_path", help="scene or matrix JSON file")
    common.add_argument("--out", dest="output_path", help="write the report (or generated scene) here")
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--tol-rank", type=float, default=None)
    common.add_argument("--tol-ds", type=float, default=None)
    common.add_argument("--tol-collinear", type=float, default=None)
    common.add_argument("--max-iter", type=int, default=None)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--mode", choices=[m.value for m in WellSpreadMode], default=None)
    common.add_argument("--delta", type=float, default=None)
    common.add_argument("--q", type=int, default=None)
    common.add_argument("--k", type=int, default=None)
    common.add_argument("--t", type=int, default=None)
    common.add_argument("--homogeneous", action="store_true")
    common.add_argument("--scale", action="store_true", help="add the scaled diagonal-dominance analysis")
    common.add_argument("--samples", type=int, default=None, help="random subspaces for heuristic mode")
    common.add_argument("--kind", choices=GEN_KINDS, default=None)
    common.add_argument("--size", type=int, default=None)
    common.add_argument("--dim", type=int, default=None)
    common.add_argument("--count", type=int, default=None)
    common.add_argument("--save-report", action="store_true", help="also save a markdown report")
    common.add_argument("--timing", action="store_true", help="include wall-clock time in the report")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


# ---------------------------------------------------------------------------
# Pipelines
# ---------------------------------------------------------------------------

def _scene(job: JobConfig, kind: str) -> Scene:
    if not job.input_path:
        raise InvalidArgument(f"{job.subcommand} needs --in")
    scene = load_scene(job.input_path)
    if scene.kind != kind:
        raise InvalidArgument(f"{job.subcommand} expects a {kind} scene, got {scene.kind}")
    return scene


def _design_params(job: JobConfig) -> DesignParams:
    missing = [name for name in ("q", "k", "t") if getattr(job, name) is None]
    if missing:
        raise InvalidArgument(f"{job.subcommand} needs --{', --'.join(missing)}")
    return DesignParams(job.q, job.k, job.t)


def _run_scale(job: JobConfig, report: Report) -> None:
    A = _scene(job, "matrix").payload
    tol = job.tolerances
    state, rep = sinkhorn_scale(A, tol=tol.ds_tol, max_iter=tol.max_iter,
                                log_factor_ceiling=tol.log_factor_ceiling)
    report.results["scaling"] = rep.to_dict()
    report.results["initial_ds"] = ds(A)
    report.results["condition_numbers"] = state.accumulated.condition_numbers()
    report.add_verdict("converged", rep.converged,
                       f"ds {rep.final_ds:.3e} after {rep.iterations} iterations"
                       + (f" ({rep.reason})" if rep.reason else ""))


def _run_capacity(job: JobConfig, report: Report) -> None:
    A = _scene(job, "matrix").payload
    tol = job.tolerances
    state, rep = sinkhorn_scale(A, tol=tol.ds_tol, max_iter=tol.max_iter,
                                log_factor_ceiling=tol.log_factor_ceiling)
    report.results["log_capacity_upper_bound"] = rep.capacity_upper_bound_log
    report.results["initial_log_factor"] = state.initial_log_factor
    report.results["bound_trace"] = state.bound_trace
    report.results["converged"] = rep.converged
    report.results["non_scalable_evidence"] = rep.non_scalable_evidence
    increasing = [i for i in range(1, len(state.bound_trace))
                  if state.bound_trace[i] > state.bound_trace[i - 1] + 1e-8]
    report.add_verdict("capacity bound nonincreasing", not increasing,
                       f"{len(state.bound_trace)} iterates")
    identity = np.broadcast_to(np.eye(A.r), (A.m, A.r, A.r))
    objective = capacity_objective(A, identity)
    report.results["objective_at_identity"] = objective
    if np.isfinite(objective):
        lhs, rhs = duality_check(A, identity)
        report.results["duality"] = {"lhs": lhs, "rhs": rhs}
        report.add_verdict("duality inequality", lhs >= rhs - 1e-8, f"{lhs:.6g} >= {rhs:.6g}")
    report.results["transpose"] = transpose_capacity_diagnostic(A, tol.ds_tol, tol.max_iter)


def _run_check_design(job: JobConfig, report: Report) -> None:
    A = _scene(job, "matrix").payload
    tol = job.tolerances
    cert = verify_design(A, _design_params(job), job.mode or WellSpreadMode.SQUARE,
                         seed=tol.seed, samples=tol.heuristic_samples,
                         enumeration_cap=tol.enumeration_cap)
    report.certificates.append(cert.to_dict())
    report.results["certified"] = {"q": cert.q_actual, "k": cert.k_actual, "t": cert.t_actual}
    report.add_verdict("rows", cert.row_ok, f"max nonzero blocks per row {cert.q_actual}")
    report.add_verdict("columns", cert.column_ok, f"min well-spread blocks per column {cert.k_actual}")
    report.add_verdict("intersections", cert.intersection_ok, f"max shared rows {cert.t_actual}")


def _run_rank_bound(job: JobConfig, report: Report) -> None:
    A = _scene(job, "matrix").payload
    tol = job.tolerances
    bound = design_rank_check(A, _design_params(job), job.mode or WellSpreadMode.SQUARE,
                              scale=job.scale, tol=tol.ds_tol, max_iter=tol.max_iter,
                              rank_rtol=tol.rank_rtol, seed=tol.seed,
                              samples=tol.heuristic_samples, enumeration_cap=tol.enumeration_cap)
    report.add_bound(bound)
    scaled = bound.details.get("scaled")
    if scaled and scaled.get("converged"):
        report.add_verdict("diagonal dominance", scaled["dominance_ok"],
                           f"rank(H) {scaled['rank_H']} vs {scaled['dominance_bound']:.6g}")


def _run_rigidity(job: JobConfig, report: Report) -> None:
    scene = _scene(job, "points")
    tol = job.tolerances
    V = scene.payload
    found = collinear_triples(V, tol.collinear_tol)
    report.results["delta"] = found.delta
    triples = scene.triples if scene.triples is not None else found.triples
    report.add_bound(rigidity_bound(V, triples, t=job.t, k=job.k, seed=tol.seed,
                                    collinear_tol=tol.collinear_tol, rank_rtol=tol.rank_rtol))


def _run_sg(job: JobConfig, report: Report) -> None:
    W = _scene(job, "subspaces").payload
    delta = job.delta if job.delta is not None else W.delta()
    if delta <= 0:
        raise InvalidArgument("arrangement has no special spaces; pass --delta")
    A_V, A_C, bound = sg_matrices(W, delta, rank_rtol=job.tolerances.rank_rtol)
    report.results["delta"] = delta
    report.add_bound(bound)


def _run_lines(job: JobConfig, report: Report) -> None:
    L = _scene(job, "lines").payload
    analysis = line_analysis(L, homogeneous=job.homogeneous, k=job.k,
                             rank_rtol=job.tolerances.rank_rtol)
    report.add_bound(analysis.report)


def _run_curves(job: JobConfig, report: Report) -> None:
    scene = _scene(job, "curves")
    analysis = curve_analysis(scene.payload, scene.incidences, k=job.k,
                              rank_rtol=job.tolerances.rank_rtol, seed=job.tolerances.seed)
    report.results["incidences"] = [rec.to_dict() for rec in analysis.incidences]
    report.add_bound(analysis.report)


def _generate(job: JobConfig) -> Scene:
    seed = job.tolerances.seed
    kind = job.kind
    if kind == "hesse":
        return Scene("subspaces", gen_hesse())
    if kind == "grid":
        V, T = gen_grid(job.size or 3)
        return Scene("points", V, triples=T)
    if kind == "orthopair":
        return Scene("subspaces", gen_orthopair(job.dim or 5))
    if kind == "product-sg":
        return Scene("subspaces", gen_product_sg(job.size or 2))
    if kind == "pencil":
        return Scene("lines", gen_pencil_lines(job.count or 5, job.dim or 4, seed))
    if kind == "concurrent":
        return Scene("lines", gen_concurrent_lines(job.count or 3, job.dim or 3, seed))
    if kind == "conics":
        return Scene("curves", gen_plane_conics(job.count or 6, job.dim or 3, seed))
    if kind == "design":
        q = job.q or 2
        n = job.size or 8
        p = max(1, job.k // q) if job.k else 2
        return Scene("matrix", gen_cyclic_design(n, q, p, job.dim or 2, seed))
    raise InvalidArgument(f"gen needs --kind, one of {', '.join(GEN_KINDS)}")


def _run_gen(job: JobConfig, report: Report) -> None:
    if not job.output_path:
        raise InvalidArgument("gen needs --out for the scene file")
    scene = _generate(job)
    save_scene(scene, job.output_path)
    report.results.update({"kind": job.kind, "scene_kind": scene.kind, "written": job.output_path})
    if scene.kind == "matrix":
        report.results["shape"] = list(scene.payload.shape)
    else:
        report.results["n"] = scene.payload.n
        report.results["d"] = scene.d


PIPELINES: Dict[str, Callable[[JobConfig, Report], None]] = {
    "scale": _run_scale,
    "capacity": _run_capacity,
    "check-design": _run_check_design,
    "rank-bound": _run_rank_bound,
    "rigidity": _run_rigidity,
    "sg": _run_sg,
    "lines": _run_lines,
    "curves": _run_curves,
    "gen": _run_gen,
}


def run(job: JobConfig) -> Report:
    """Execute one job and return its report; library errors propagate."""
    report = Report(job=job.to_dict())
    started = time.perf_counter()
    PIPELINES[job.subcommand](job, report)
    if job.timing:
        report.timing = time.perf_counter() - started
    return report


def emit(report: Report, fmt: str = "json") -> str:
    if fmt == "json":
        return render_json(report)
    if fmt == "text":
        return render_text(report)
    raise InvalidArgument(f"format must be json or text, got {fmt!r}")


def _write_output(path: str, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e.strerror}")


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    try:
        job = JobConfig.from_args(args)
        print_banner(job.subcommand, {k: v for k, v in job.to_dict().items()
                                      if k not in ("subcommand", "tolerances")})
        report = run(job)
        for verdict in report.verdicts:
            print_verdict(verdict.name, verdict.passed, verdict.detail)
        text = emit(report, job.fmt)
        if job.output_path and job.subcommand != "gen":
            _write_output(job.output_path, text)
        else:
            sys.stdout.write(text)
        if job.save_report:
            try:
                save_report(report, get_reports_dir())
            except OSError as e:
                raise OutputError(f"cannot save report to {get_reports_dir()}: {e.strerror}")
    except BlockRankError as e:
        print_error(str(e))
        return e.exit_code
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
