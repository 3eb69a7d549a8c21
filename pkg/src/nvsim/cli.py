"""``nvsim`` command line.

Exit codes: 0 success, 1 parse or usage errors, 2 physics-invariant violations.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .dsl import ParseError, parse
from .engine import PhysicsInvariantError, SimOptions
from .linalg import NotHermitianError
from .model import FrameError, PhysicalParams, load_params, min_gate_time
from .results import SweepResult

EXIT_OK, EXIT_PARSE, EXIT_PHYSICS = 0, 1, 2


def _params(args) -> PhysicalParams:
    return load_params(args.params) if args.params else PhysicalParams()


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _emit_result(res: SweepResult, args) -> None:
    _emit(res.to_json() + "\n" if args.out == "json" else res.to_csv(), args.output)


def _table_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def cmd_run(args) -> int:
    path = Path(args.file)
    try:
        program = parse(path.read_bytes(), name=str(path))
    except ParseError as exc:
        for d in exc.diagnostics:
            print(f"{path}:{d}", file=sys.stderr)
        return EXIT_PARSE
    opts = ex.options_for(program, SimOptions(params=_params(args)),
                          mode=args.mode, seed=args.seed, shots=args.shots)
    res = ex.run_program(program, opts)
    _emit_result(res, args)
    return EXIT_OK


def repro_cr_sweep(args, opts: SimOptions) -> None:
    taus = np.linspace(0.0, 10.0, 101)
    res = ex.run_cr_sweep(taus, opts.mode, opts)
    _emit_result(res, args)


def repro_bloch(args, opts: SimOptions) -> None:
    taus = np.linspace(0.0, min_gate_time(math.pi, opts.params), 51)
    cols = {}
    for e in (0, 1):
        samples = ex.run_bloch(e, taus, opts)
        for comp in "xyz":
            cols[f"{comp}{e}"] = [getattr(s, comp) for s in samples]
    _emit_result(SweepResult(taus, cols, metadata={"mode": opts.mode}), args)


def repro_bell(args, opts: SimOptions) -> None:
    rho, fid = ex.run_bell(opts.mode, opts)
    reg = rho[2:6, 2:6]
    labels = ["00", "01", "10", "11"]
    if args.out == "json":
        doc = {
            "mode": opts.mode,
            "fidelity": fid,
            "basis": labels,
            "rho_re": reg.real.tolist(),
            "rho_im": reg.imag.tolist(),
        }
        _emit(json.dumps(doc, indent=2) + "\n", args.output)
        return
    rows = [["fidelity", f"{fid:.12g}", "0"]]
    rows += [[f"{labels[i]}|{labels[j]}", f"{reg[i, j].real:.12g}", f"{reg[i, j].imag:.12g}"]
             for i in range(4) for j in range(4)]
    _emit(_table_csv(["element", "re", "im"], rows), args.output)


def repro_speed(args, opts: SimOptions) -> None:
    rep = ex.speed_report(opts.params)
    if args.out == "json":
        _emit(json.dumps(rep, indent=2) + "\n", args.output)
        return
    rows = [[r["alpha"], f"{r['alpha_rad']:.12g}", f"{r['tau_min_us']:.12g}"] for r in rep["rows"]]
    rows.append(["period", "", f"{rep['period_us']:.12g}"])
    text = _table_csv(["alpha", "alpha_rad", "tau_min_us"], rows)
    text += _table_csv(["quantity", "value"], [["delta_MHz", f"{rep['delta_MHz']:.12g}"],
                                                ["B0_match_mT", f"{rep['B0_match_mT']:.12g}"]])
    _emit(text, args.output)


REPRO = {"fig2": repro_bloch, "fig3": repro_cr_sweep, "fig5": repro_bell, "speed": repro_speed}


def cmd_repro(args) -> int:
    opts = SimOptions(params=_params(args), mode=args.mode or "ideal")
    REPRO[args.figure](args, opts)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nvsim", description="NV electron/13C conditional-rotation simulator")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--mode", choices=("ideal", "full"))
        p.add_argument("--out", choices=("csv", "json"), default="csv")
        p.add_argument("--params", help="key = value parameter file")
        p.add_argument("-o", "--output", help="write to this file instead of stdout")

    run = sub.add_parser("run", help="execute a .nvs sequence file")
    run.add_argument("file")
    common(run)
    run.add_argument("--seed", type=int)
    run.add_argument("--shots", type=int)
    run.set_defaults(func=cmd_run)

    rep = sub.add_parser("repro", help="regenerate a reference dataset")
    rep.add_argument("figure", choices=sorted(REPRO))
    common(rep)
    rep.set_defaults(func=cmd_repro)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (PhysicsInvariantError, FrameError, NotHermitianError) as exc:
        print(f"physics invariant violated: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
