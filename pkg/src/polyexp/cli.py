"""Command-line front end.

Three subcommands:

* ``basis`` — construct the orthonormal basis and write it as JSON;
* ``differentiate`` — differentiate user-supplied CSV samples;
* ``experiment`` — rerun the benchmark test cases and emit table/figure
  data.

Exit codes: 0 success, 2 usage or input error, 3 numerical construction
failure.  Every invocation writes a JSON manifest sufficient to re-run it
bit-identically; the POLYEXP_SEED environment variable supplies the seed
base when no --seeds flag is given.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, baselines, experiments, spectral
from .basis import basis_to_json, build_basis
from .errors import BasisConstructionError, CsvFormatError, UndefinedMetricError
from .grids import read_csv_1d, read_csv_2d, write_csv_1d, write_csv_2d

MANIFEST_SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONSTRUCTION = 3


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _write_manifest(path: Path, command: str, params: dict, inputs: list, outputs: list,
                    timings: dict) -> None:
    doc = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "tool_version": __version__,
        "command": command,
        "parameters": params,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "timings_s": {k: round(v, 6) for k, v in timings.items()},
    }
    _atomic_write(path, json.dumps(doc, indent=2))


def _seed_base(args_seed) -> int:
    if args_seed is not None:
        return int(args_seed)
    return int(os.environ.get("POLYEXP_SEED", "0"))


# ---------------------------------------------------------------------------
# basis
# ---------------------------------------------------------------------------


def _cmd_basis(args) -> int:
    t0 = time.perf_counter()
    try:
        spec = build_basis(args.R, args.n, precision_dps=args.precision, orthonormality_tol=args.tol)
    except BasisConstructionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONSTRUCTION
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = Path(args.output)
    _atomic_write(out, basis_to_json(spec))
    _write_manifest(
        out.with_suffix(out.suffix + ".manifest.json"),
        "basis",
        {"R": args.R, "n_max": args.n, "precision_dps": args.precision, "tol": args.tol},
        [],
        [out],
        {"total": time.perf_counter() - t0},
    )
    print(f"wrote {out} (orthonormality defect {spec.orthonormality_defect:.3e})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# differentiate
# ---------------------------------------------------------------------------

_ORDERS_1D = ("d1", "d2")
_ORDERS_2D = spectral.DERIVATIVE_2D_KEYS


def _parse_orders(spec_str: str, dim: int):
    if spec_str == "default":
        return ["d1", "d2"] if dim == 1 else ["grad_mag", "laplacian"]
    orders = [o.strip() for o in spec_str.split(",") if o.strip()]
    valid = _ORDERS_1D if dim == 1 else _ORDERS_2D
    for o in orders:
        if o not in valid:
            raise ValueError(f"order {o!r} not valid for {dim}D (choose from {valid})")
    return orders


def _parse_cutoff(text: str, dim: int):
    if text == "auto":
        return "auto"
    parts = [int(p) for p in text.split(",")]
    if dim == 1:
        if len(parts) != 1:
            raise ValueError("1D cut-off must be a single integer or 'auto'")
        return parts[0]
    if len(parts) == 1:
        return (parts[0], parts[0])
    if len(parts) == 2:
        return tuple(parts)
    raise ValueError("2D cut-off must be N, N1,N2 or 'auto'")


def _differentiate_1d(args, orders):
    f = read_csv_1d(args.input)
    record: dict = {"method": args.method}
    if np.all(f.values == 0.0):
        zero = np.zeros(f.grid.n_points)
        return f.grid, {o: zero for o in orders}, {**record, "note": "zero input"}

    if args.method == "polyexp":
        basis = experiments.shared_basis(f.grid.R, experiments.DEFAULT_BASIS_N_MAX)
        cutoff = _parse_cutoff(args.cutoff, 1)
        if cutoff == "auto":
            report = spectral.select_cutoff(f, basis)
            N = report.chosen_N
            record["cutoff_report"] = {
                "candidates": report.candidates,
                "threshold": report.threshold,
            }
        else:
            N = cutoff
        record["cutoff"] = N
        coeffs = spectral.project_1d(f, basis, N)
        columns = {
            o: spectral.reconstruct_1d(coeffs, f.grid, int(o[1])).samples.values for o in orders
        }
    elif args.method == "trig":
        N = baselines.trig_select_cutoff(f)
        record["cutoff"] = N
        coeffs = baselines.trig_project(f, N)
        columns = {
            o: baselines.trig_derivative(coeffs, f.grid, int(o[1])).samples.values for o in orders
        }
    elif args.method == "tikhonov":
        columns = {}
        if "d1" in orders:
            scan, d1 = baselines.tikhonov_first_derivative(f)
            columns["d1"] = d1.samples.values
            record["gamma_first"] = scan.chosen_gamma
        if "d2" in orders:
            d2 = baselines.tikhonov_second_derivative(f)
            columns["d2"] = d2.samples.values
            record.update(d2.parameter_record)
    else:  # spline
        coarse = baselines.coarsen(f, args.spline_step) if args.spline_step > 1 else f
        spline = baselines.spline_fit(coarse)
        record["knots"] = int(coarse.grid.n_points)
        columns = {
            o: baselines.spline_derivative(spline, f.grid, int(o[1])).samples.values
            for o in orders
        }
    return f.grid, columns, record


def _differentiate_2d(args, orders):
    f = read_csv_2d(args.input)
    if args.method != "polyexp":
        raise ValueError(f"method {args.method!r} supports 1D data only")
    record: dict = {"method": "polyexp"}
    n = f.grid.n_points_per_axis
    if np.all(f.values == 0.0):
        zero = np.zeros((n, n))
        return f.grid, {o: zero for o in orders}, {**record, "note": "zero input"}
    basis = experiments.shared_basis(f.grid.R, experiments.DEFAULT_BASIS_N_MAX)
    cutoff = _parse_cutoff(args.cutoff, 2)
    if cutoff == "auto":
        report = spectral.select_cutoff_2d(f, basis)
        N1, N2 = report.chosen
        record["joint_residual"] = report.joint_residual
    else:
        N1, N2 = cutoff
    record["cutoff"] = [N1, N2]
    coeffs = spectral.project_2d(f, basis, N1, N2)
    columns = {o: spectral.derivative_2d(coeffs, f.grid, o).samples.values for o in orders}
    return f.grid, columns, record


def _cmd_differentiate(args) -> int:
    t0 = time.perf_counter()
    try:
        orders = _parse_orders(args.order, args.dim)
        if args.dim == 1:
            grid, columns, record = _differentiate_1d(args, orders)
        else:
            grid, columns, record = _differentiate_2d(args, orders)
    except CsvFormatError as exc:
        print(f"error: {args.input}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, UndefinedMetricError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BasisConstructionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONSTRUCTION

    out = Path(args.output)
    if args.dim == 1:
        write_csv_1d(out, grid, columns)
    else:
        write_csv_2d(out, grid, columns)
    _write_manifest(
        out.with_suffix(out.suffix + ".manifest.json"),
        "differentiate",
        {
            "input": str(args.input),
            "dim": args.dim,
            "order": orders,
            "method": args.method,
            "cutoff": args.cutoff,
            "resolved": {k: v for k, v in record.items() if k != "cutoff_report"},
        },
        [args.input],
        [out],
        {"total": time.perf_counter() - t0},
    )
    print(f"wrote {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# experiment
# ---------------------------------------------------------------------------


def _parse_float_list(text: str):
    return [float(p) for p in text.split(",") if p.strip()]


def _parse_int_list(text: str):
    return [int(p) for p in text.split(",") if p.strip()]


def _cells_to_csv(cells) -> str:
    lines = ["table,test,delta,method,quantity,domain,mean,min,max,reference,seeds"]
    for c in cells:
        seeds = ";".join(str(s) for s in c.per_seed)
        lines.append(
            f"{c.table},{c.test_id},{c.delta},{c.method},{c.quantity},{c.domain},"
            f"{c.mean:.6g},{c.min:.6g},{c.max:.6g},{c.reference},{seeds}"
        )
    return "\n".join(lines) + "\n"


def _cmd_experiment(args) -> int:
    t0 = time.perf_counter()
    try:
        test_id = f"test{args.test}"
        if test_id not in experiments.TEST_CASES:
            raise ValueError(f"unknown test {args.test}")
        deltas = _parse_float_list(args.delta)
        if args.seeds:
            seeds = _parse_int_list(args.seeds)
        else:
            base = _seed_base(None)
            seeds = [base + i for i in range(args.n_seeds)]
        methods = (
            list(experiments.METHODS_1D)
            if args.methods == "all"
            else [m.strip() for m in args.methods.split(",")]
        )
        case = experiments.TEST_CASES[test_id]
        if case.dimension == 2:
            methods = ["polyexp"]
        for m in methods:
            if m not in experiments.METHODS_1D:
                raise ValueError(f"unknown method {m!r}")
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    outputs = []
    timings = {}

    reports = []
    for delta in deltas:
        for method in methods:
            for seed in seeds:
                t = time.perf_counter()
                rep = experiments.run_test(test_id, delta, seed, method)
                timings[f"{method}_d{delta}_s{seed}"] = time.perf_counter() - t
                reports.append(rep)

    summary = [
        {
            "test": r.test_id,
            "delta": r.delta,
            "seed": r.seed,
            "method": r.method,
            "parameters": {k: v for k, v in r.parameter_record.items() if k != "cutoff_report"},
            "errors": r.entries,
        }
        for r in reports
    ]
    summary_path = outdir / f"{test_id}_errors.json"
    _atomic_write(summary_path, json.dumps(summary, indent=2))
    outputs.append(summary_path)

    csv_lines = ["test,delta,method,seed,quantity,domain,error"]
    for r in reports:
        for quantity, doms in r.entries.items():
            for domain, err in doms.items():
                csv_lines.append(
                    f"{r.test_id},{r.delta},{r.method},{r.seed},{quantity},{domain},{err:.8g}"
                )
    cells_path = outdir / f"{test_id}_errors.csv"
    _atomic_write(cells_path, "\n".join(csv_lines) + "\n")
    outputs.append(cells_path)

    if case.dimension == 1 and set(methods) == set(experiments.METHODS_1D):
        for table in (6, 7):
            cells = [
                c
                for c in experiments.reproduce_table(table, seeds)
                if c.test_id == test_id and c.delta in deltas
            ]
            path = outdir / f"table{table}_{test_id}.csv"
            _atomic_write(path, _cells_to_csv(cells))
            outputs.append(path)
        curves = experiments.error_curves(test_id, deltas[0], seeds[0])
        curve_path = outdir / f"{test_id}_error_curves.csv"
        rows = ["x,err_trig,err_tik,err_cub,err_comp"]
        for i in range(curves["x"].size):
            rows.append(
                f"{float(curves['x'][i])!r},{curves['err_trig'][i]:.8g},"
                f"{curves['err_tik'][i]:.8g},{curves['err_cub'][i]:.8g},"
                f"{curves['err_comp'][i]:.8g}"
            )
        _atomic_write(curve_path, "\n".join(rows) + "\n")
        outputs.append(curve_path)

    if case.dimension == 2:
        # pointwise error fields for the first delta/seed cell
        rep_grid = experiments.sample_test_function(case).grid
        noisy = experiments.apply_noise(
            experiments.sample_test_function(case),
            experiments.NoiseConfig(delta=deltas[0], seed=seeds[0]),
        )
        basis = experiments.shared_basis()
        N1, N2 = case.default_cutoff
        coeffs = spectral.project_2d(noisy, basis, N1, N2)
        truths = experiments.true_derivatives(case, rep_grid)
        fields = {}
        for key in ("grad_mag", "laplacian"):
            comp = spectral.derivative_2d(coeffs, rep_grid, key).samples.values
            truth = truths[key].values
            fields[f"err_{key}"] = np.abs(comp - truth) / np.abs(truth).max()
        field_path = outdir / f"{test_id}_error_fields.csv"
        write_csv_2d(field_path, rep_grid, fields)
        outputs.append(field_path)

    if args.emit_lcurve and "tikhonov" in methods and case.dimension == 1:
        noisy = experiments.apply_noise(
            experiments.sample_test_function(case),
            experiments.NoiseConfig(delta=deltas[0], seed=seeds[0]),
        )
        scan, _ = baselines.tikhonov_first_derivative(noisy)
        rows = ["gamma,l"]
        rows += [f"{g!r},{l!r}" for g, l in zip(scan.gamma_grid, scan.l_values)]
        lpath = outdir / f"{test_id}_lcurve.csv"
        _atomic_write(lpath, "\n".join(rows) + "\n")
        outputs.append(lpath)

    plot_path = outdir / f"{test_id}_plot.py"
    _atomic_write(plot_path, _PLOT_SCRIPT_TEMPLATE.format(test_id=test_id))
    outputs.append(plot_path)

    _write_manifest(
        outdir / f"{test_id}_manifest.json",
        "experiment",
        {
            "test": args.test,
            "delta": deltas,
            "seeds": seeds,
            "methods": methods,
            "emit_lcurve": bool(args.emit_lcurve),
        },
        [],
        outputs,
        {"total": time.perf_counter() - t0, **timings},
    )
    print(f"wrote {len(outputs) + 1} files to {outdir}")
    return EXIT_OK


_PLOT_SCRIPT_TEMPLATE = '''"""Plot helper for the {test_id} experiment outputs (requires matplotlib)."""
import csv
import sys
from pathlib import Path

here = Path(__file__).parent
curves = here / "{test_id}_error_curves.csv"
if not curves.exists():
    sys.exit("no curve data next to this script")
with curves.open() as fh:
    rows = list(csv.DictReader(fh))
import matplotlib.pyplot as plt

x = [float(r["x"]) for r in rows]
for key in ("err_trig", "err_tik", "err_cub", "err_comp"):
    plt.plot(x, [float(r[key]) for r in rows], label=key)
plt.legend()
plt.xlabel("x")
plt.ylabel("relative pointwise error")
plt.savefig(here / "{test_id}_error_curves.png", dpi=150)
print("wrote", here / "{test_id}_error_curves.png")
'''


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polyexp",
        description="Differentiate noisy sampled data by spectral truncation "
        "in the polynomial-exponential basis.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("basis", help="construct the orthonormal basis and write JSON")
    p.add_argument("--R", type=float, required=True, help="interval half-width")
    p.add_argument("--n", type=int, required=True, help="number of basis functions")
    p.add_argument("--precision", type=int, default=60, help="construction precision (decimal digits)")
    p.add_argument("--tol", type=float, default=1e-8, help="orthonormality tolerance")
    p.add_argument("-o", "--output", default="basis.json")
    p.set_defaults(func=_cmd_basis)

    p = sub.add_parser("differentiate", help="differentiate CSV samples")
    p.add_argument("input", help="CSV file: 'x,f' (1D) or 'x,y,f' (2D row-major)")
    p.add_argument("--dim", type=int, choices=(1, 2), default=1)
    p.add_argument(
        "--order",
        default="default",
        help="comma list: d1,d2 (1D) or dx,dy,dxx,dyy,dxy,grad_mag,laplacian (2D)",
    )
    p.add_argument("--cutoff", default="auto", help="'auto', N, or N1,N2")
    p.add_argument("--method", choices=experiments.METHODS_1D, default="polyexp")
    p.add_argument("--spline-step", type=int, default=100, help="coarsening step for --method spline")
    p.add_argument("-o", "--output", default="derivative.csv")
    p.set_defaults(func=_cmd_differentiate)

    p = sub.add_parser("experiment", help="rerun benchmark test cases")
    p.add_argument("--test", type=int, required=True, choices=(1, 2, 3, 4))
    p.add_argument("--delta", default="0.05,0.1,0.2", help="comma list of noise levels")
    p.add_argument("--seeds", default="", help="comma list of seeds (default: base..base+4)")
    p.add_argument("--n-seeds", type=int, default=5, help="seed count when --seeds is empty")
    p.add_argument("--methods", default="all")
    p.add_argument("--emit-lcurve", action="store_true")
    p.add_argument("-o", "--outdir", default="experiment_out")
    p.set_defaults(func=_cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, 0 on --help/--version
        return int(exc.code or 0)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
