"""Command-line interface: ``tasfem bench | analyze | model``."""

from __future__ import annotations

import argparse
import json
import math
import statistics
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errnorm import l2_error
from .exceptions import (
    CapabilityError,
    NotSPDError,
    RecordParseError,
    RecordValidationError,
    SchemaVersionError,
)
from .fem import SOURCE_MODES, SUPPORTED, assemble, build_space, mms_case
from .linsolve import PRECONDITIONERS, pcg
from .meshgen import CELL_KINDS, unit_cube, unit_square
from .records import RecordFile, default_metadata, read_records, write_records
from .report import DIAGRAM_KINDS, DiagramSpec, render_svg, render_table
from .tascore import (
    DEFAULT_FINEST_K,
    BenchmarkRecord,
    ModelParams,
    derive_series,
    fit_slope,
    group_records,
    model_curves,
    model_records,
)

EXIT_OK, EXIT_FAILURE, EXIT_INPUT = 0, 1, 2
DEFAULT_RTOL = 1e-10
SLOPE_TOL = 0.05


@dataclass
class BenchPlan:
    case: str = "test1"
    methods: list = field(default_factory=lambda: [("CG", 1)])
    kind: str = "quadrilateral"
    n0: int = 10
    levels: int = 5
    rtol: float = DEFAULT_RTOL
    repeats: int = 3
    out: str = "records.jsonl"
    precond: str = "jacobi"
    source: str = "quadrature"
    error_points: int | None = None
    max_iter: int | None = None

    def __post_init__(self):
        if self.levels < 1:
            raise ValueError("levels must be >= 1")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if self.n0 < 1:
            raise ValueError("n0 must be >= 1")
        if not 0 < self.rtol < 1:
            raise ValueError("rtol must lie in (0, 1)")
        if self.kind not in CELL_KINDS:
            raise ValueError(f"unknown mesh kind {self.kind!r}")
        if self.precond not in PRECONDITIONERS:
            raise ValueError(f"unknown preconditioner {self.precond!r}")
        if self.source not in SOURCE_MODES:
            raise ValueError(f"unknown source mode {self.source!r}")
        case = mms_case(self.case)
        mesh_dim = 3 if self.kind == "hexahedron" else 2
        if case.dim != mesh_dim:
            raise CapabilityError(f"case {self.case} is {case.dim}D but {self.kind} meshes are {mesh_dim}D")
        for fam, p in self.methods:
            if p not in SUPPORTED.get((fam, self.kind), ()):
                raise CapabilityError(f"{fam}{p} on {self.kind} cells is not supported")

    @property
    def resolutions(self):
        return [self.n0 * 2**i for i in range(self.levels)]


def make_mesh(kind, n):
    return unit_cube(n) if kind == "hexahedron" else unit_square(n, kind)


def method_label(family, degree, kind):
    return f"{family}{degree} {kind}"


def bench_level(case, family, degree, kind, n, rtol=DEFAULT_RTOL, repeats=3, precond="jacobi",
                source="quadrature", error_points=None, max_iter=None) -> BenchmarkRecord:
    """One timed assemble+solve at resolution ``n``; mesh, space and error are untimed."""
    case = mms_case(case) if isinstance(case, str) else case
    space = build_space(make_mesh(kind, n), family, degree)
    times, failure, report = [], None, None
    for _ in range(repeats):
        t0 = time.perf_counter()
        system = assemble(space, case, source)
        try:
            report = pcg(system.matrix, system.rhs, rtol=rtol, max_iter=max_iter, precond=precond)
        except NotSPDError as exc:
            failure = str(exc)
        times.append(time.perf_counter() - t0)
        if failure:
            break
    extra = {
        "case": case.id,
        "kind": kind,
        "n": n,
        "rtol": rtol,
        "precond": precond,
        "source": source,
        "repeats": repeats,
        "error_points": error_points,
    }
    if failure is None:
        coeffs = system.expand(report.solution)
        extra["iterations"] = report.iterations
        extra["relative_residual"] = report.final_relative_residual
        if not report.converged:
            failure = f"PCG did not reach rtol {rtol:g} in {report.iterations} iterations"
    else:
        coeffs = system.expand(np.zeros(system.n_free))
    if failure:
        extra["solver_failed"] = True
        extra["diagnostic"] = failure
    err = l2_error(space, coeffs, case.exact, quad_points=error_points)
    return BenchmarkRecord(
        label=method_label(family, degree, kind),
        family=family,
        degree=degree,
        dim=space.dim,
        h=1.0 / n,
        n_dofs=int(space.n_dofs),
        l2_error=max(err, np.finfo(float).tiny),
        time_seconds=max(statistics.median(times), 1e-9),
        n_procs=1,
        extra=extra,
    )


def run_bench(plan: BenchPlan, log=None) -> RecordFile:
    records = []
    for fam, p in plan.methods:
        for n in plan.resolutions:
            rec = bench_level(plan.case, fam, p, plan.kind, n, plan.rtol, plan.repeats, plan.precond,
                              plan.source, plan.error_points, plan.max_iter)
            if log:
                flag = "  SOLVER FAILED" if rec.extra.get("solver_failed") else ""
                log(f"{rec.label:>20s} n={n:<5d} N={rec.n_dofs:<9d} err={rec.l2_error:.4e} "
                    f"T={rec.time_seconds:.3e}s{flag}")
            records.append(rec)
    meta = default_metadata()
    meta["plan"] = {
        "case": plan.case, "kind": plan.kind, "n0": plan.n0, "levels": plan.levels,
        "rtol": plan.rtol, "repeats": plan.repeats, "precond": plan.precond, "source": plan.source,
        "error_points": plan.error_points, "timing": "assembly + preconditioner setup + solve",
    }
    return RecordFile(records, meta)


def cmd_bench(plan: BenchPlan, log=None) -> RecordFile:
    rf = run_bench(plan, log)
    write_records(rf, plan.out)
    return rf


@dataclass
class Analysis:
    series: list
    summary: str
    files: list
    diagnostics: list


def _h_slope(s, finest_k):
    h = np.array([r.h for r in s.records])
    return fit_slope(np.log10(h), s.doe, finest_k)


def analyze_records(records, out_dir, finest_k=DEFAULT_FINEST_K, kinds=DIAGRAM_KINDS, slope_tol=SLOPE_TOL):
    if not records:
        raise ValueError("no valid records")
    series = group_records(records, finest_k)
    if not any(s.included.any() for s in series):
        raise ValueError("every record lies outside the digit domain (err >= 1 or N <= 1)")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    lines = [f"{'series':<24s} {'points':>6s} {'DoA/DoS slope':>14s} {'predicted':>10s} {'check':>6s} {'DoE vs log10 h':>15s}"]
    doe_notes = []
    for s in series:
        pred = s.predicted_slope
        conv = s.convergence_slope
        if conv is None:
            check = "n/a"
        elif pred is None:
            check = "-"
        else:
            check = "PASS" if abs(conv - pred) <= slope_tol else "FAIL"
        hs = _h_slope(s, finest_k)
        lines.append(
            f"{s.label:<24s} {int(s.included.sum()):>6d} "
            f"{'n/a' if conv is None else f'{conv:.3f}':>14s} {'-' if pred is None else f'{pred:.3f}':>10s} "
            f"{check:>6s} {'n/a' if hs is None else f'{hs:.3f}':>15s}"
        )
        if hs is not None:
            doe_notes.append(f"{s.label}: DoE slope vs log10 h = {hs:.2f}")
    fk = "all points" if finest_k is None else f"finest {finest_k} levels"
    lines.append(f"slopes fitted over {fk}; check tolerance +/-{slope_tol:g}")
    summary = "\n".join(lines) + "\n"
    for kind in kinds:
        usable = [s for s in series if kind == "static_scaling" or s.included.any()]
        spec = DiagramSpec(kind, usable, annotations=doe_notes if kind == "doe" else ())
        path = out / f"{kind}.svg"
        path.write_text(render_svg(spec), encoding="utf-8")
        files.append(path)
    for style, name in (("doa_dos", "tables.txt"), ("full", "tables_full.txt")):
        path = out / name
        path.write_text(render_table(series, style), encoding="utf-8")
        files.append(path)
    path = out / "summary.txt"
    path.write_text(summary, encoding="utf-8")
    files.append(path)
    return Analysis(series, summary, files, [])


def cmd_analyze(inputs, out_dir, finest_k=DEFAULT_FINEST_K, kinds=DIAGRAM_KINDS) -> Analysis:
    records, diagnostics = [], []
    for path in inputs:
        rf = read_records(path, strict=False)
        records.extend(rf.records)
        diagnostics.extend(f"{path}:{line}: {msg}" for line, msg in rf.rejected)
    result = analyze_records(records, out_dir, finest_k, kinds)
    result.diagnostics = diagnostics
    return result


def _jsonable(a):
    return [None if not math.isfinite(v) else float(v) for v in np.asarray(a, dtype=float)]


def cmd_model(params_list, out_dir, finest_k=DEFAULT_FINEST_K) -> list:
    """Render the model TAS curves; one set of diagrams per spatial dimension."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files, dump = [], []
    by_d: dict = {}
    for prm in params_list:
        by_d.setdefault(prm.d, []).append(prm)
        cols = model_curves(prm)["columns"]
        dump.append({
            "C": prm.C, "W": prm.W, "D": prm.D, "alpha": prm.alpha, "d": prm.d,
            "h": list(prm.h_values), **{k: _jsonable(v) for k, v in cols.items()},
        })
    for d, plist in sorted(by_d.items()):
        series = [derive_series(model_records(p, label=f"alpha={p.alpha:g}"), finest_k) for p in plist]
        notes = []
        for s in series:
            hs = _h_slope(s, None)
            if hs is not None:
                notes.append(f"{s.label}: DoE slope vs log10 h = {hs:.2f}")
        for kind in DIAGRAM_KINDS:
            usable = [s for s in series if kind == "static_scaling" or s.included.any()]
            if not usable:
                continue
            spec = DiagramSpec(kind, usable, title=f"Model, d={d}: " + DiagramSpec(kind, usable).title,
                               annotations=notes if kind == "doe" else ())
            path = out / f"model_d{d}_{kind}.svg"
            path.write_text(render_svg(spec), encoding="utf-8")
            files.append(path)
    path = out / "model_curves.json"
    path.write_text(json.dumps(dump, indent=1) + "\n", encoding="utf-8")
    files.append(path)
    return files


def _default_n0(dim, degrees):
    # Q1 on hexes is still pre-asymptotic below n=16; Q2 cannot go past n=32 in memory
    if dim == 3:
        return 8 if max(degrees) == 1 else 4
    return 10


def _method_list(families, degrees):
    return [(f.upper(), p) for f in families for p in degrees]


def _parse_h(text):
    if "/" in text:
        a, b = text.split("/", 1)
        return float(a) / float(b)
    return float(text)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tasfem", description="Poisson FE benchmarks and TAS analysis")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="run a mesh-refinement benchmark and write records")
    b.add_argument("--case", default="test1", choices=["test1", "test2", "test3", "test4"])
    b.add_argument("--family", nargs="+", default=["CG"], type=str.upper, choices=["CG", "DG"])
    b.add_argument("--degree", nargs="+", default=[1], type=int)
    b.add_argument("--kind", default=None, choices=CELL_KINDS,
                   help="mesh cell kind (default: quadrilateral in 2D, hexahedron in 3D)")
    b.add_argument("--n0", type=int, default=None, help="coarsest cells per axis (default 10 in 2D; 8 for Q1-only, else 4, in 3D)")
    b.add_argument("--levels", type=int, default=None, help="number of resolutions n0*2^i (default 5 in 2D, 4 in 3D)")
    b.add_argument("--rtol", type=float, default=DEFAULT_RTOL)
    b.add_argument("--repeats", type=int, default=3)
    b.add_argument("--precond", default="jacobi", choices=PRECONDITIONERS)
    b.add_argument("--source", default="quadrature", choices=SOURCE_MODES,
                   help="integrate f exactly, or interpolate it into the FE space first")
    b.add_argument("--error-points", type=int, default=None,
                   help="fixed Gauss points per direction for the L2 error (default: exact rule)")
    b.add_argument("--max-iter", type=int, default=None)
    b.add_argument("--out", default="records.jsonl")
    b.add_argument("--quiet", action="store_true")

    a = sub.add_parser("analyze", help="derive TAS metrics, diagrams and tables from record files")
    a.add_argument("inputs", nargs="+")
    a.add_argument("--out", default="tas-report")
    a.add_argument("--finest-k", type=int, default=DEFAULT_FINEST_K,
                   help="fit slopes over the k largest problems (0 = all)")
    a.add_argument("--diagrams", nargs="+", default=list(DIAGRAM_KINDS), choices=DIAGRAM_KINDS)

    m = sub.add_parser("model", help="render the theoretical TAS curves")
    m.add_argument("--C", type=float, default=10.0)
    m.add_argument("--W", type=float, default=0.1)
    m.add_argument("--D", type=float, default=1.0)
    m.add_argument("--alpha", nargs="+", type=float, default=[2.0, 3.0, 4.0])
    m.add_argument("--d", nargs="+", type=int, default=[2, 3])
    m.add_argument("--h", nargs="+", type=_parse_h, default=None,
                   help="mesh sizes, largest first (default 1/10 halved down to 1/5120)")
    m.add_argument("--finest-k", type=int, default=DEFAULT_FINEST_K)
    m.add_argument("--out", default="tas-model")
    return ap


def _err(msg):
    print(f"tasfem: error: {msg}", file=sys.stderr)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "bench":
            dim = mms_case(args.case).dim
            kind = args.kind or ("hexahedron" if dim == 3 else "quadrilateral")
            plan = BenchPlan(
                case=args.case, methods=_method_list(args.family, args.degree), kind=kind,
                n0=args.n0 if args.n0 is not None else _default_n0(dim, args.degree),
                levels=args.levels if args.levels is not None else (4 if dim == 3 else 5),
                rtol=args.rtol, repeats=args.repeats, out=args.out, precond=args.precond,
                source=args.source, error_points=args.error_points, max_iter=args.max_iter,
            )
            rf = cmd_bench(plan, log=None if args.quiet else print)
            failed = sum(bool(r.extra.get("solver_failed")) for r in rf.records)
            print(f"wrote {len(rf.records)} records to {plan.out}" + (f" ({failed} solver failures)" if failed else ""))
            return EXIT_OK
        if args.command == "analyze":
            finest_k = args.finest_k or None
            result = cmd_analyze(args.inputs, args.out, finest_k, args.diagrams)
            for d in result.diagnostics:
                print(f"tasfem: skipped {d}", file=sys.stderr)
            print(result.summary, end="")
            print(f"wrote {len(result.files)} files to {args.out}")
            return EXIT_OK
        if args.command == "model":
            kw = {} if args.h is None else {"h_values": tuple(args.h)}
            params = [ModelParams(C=args.C, W=args.W, D=args.D, alpha=a, d=d, **kw)
                      for d in args.d for a in args.alpha]
            files = cmd_model(params, args.out, args.finest_k or None)
            print(f"wrote {len(files)} files to {args.out}")
            return EXIT_OK
    except (RecordParseError, RecordValidationError, SchemaVersionError, CapabilityError, ValueError) as exc:
        _err(exc)
        return EXIT_INPUT
    except OSError as exc:
        _err(exc)
        return EXIT_FAILURE
    return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
