"""Command-line interface: ``verify``, ``demo``, ``simulate`` and ``synth``.

Every command writes exactly one JSON document to standard output. Exit
codes: 0 all checks pass, 1 a physics check failed, 2 bad input.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import doubleslit as ds
from . import linalg as la
from . import model as mdl
from . import verifier as vf

EXIT_OK, EXIT_PHYSICS, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def default_tol() -> float:
    raw = os.environ.get("ESW_DEFAULT_TOL")
    if raw is None:
        return la.DEFAULT_TOL
    try:
        tol = float(raw)
    except ValueError as exc:
        raise InputError(f"ESW_DEFAULT_TOL is not a number: {raw!r}") from exc
    if not tol >= 0:
        raise InputError("ESW_DEFAULT_TOL must be nonnegative")
    return tol


def load_model(source: str, check: bool = False) -> mdl.TwoSlitModel:
    if source.startswith("builtin:"):
        name = source.split(":", 1)[1]
        if name not in mdl.BUILTINS:
            raise InputError(f"unknown builtin model {name!r}; choose from {sorted(mdl.BUILTINS)}")
        return mdl.BUILTINS[name]()
    try:
        text = Path(source).read_text()
    except OSError as exc:
        raise InputError(f"cannot read model config {source}: {exc}") from exc
    try:
        return mdl.parse_model(text, check=check)
    except (mdl.ModelError, la.DimensionError, ValueError) as exc:
        raise InputError(f"invalid model config {source}: {exc}") from exc


def _emit(doc: dict) -> None:
    json.dump(doc, sys.stdout, indent=2)
    sys.stdout.write("\n")


def _detector_entry(t, e, events, psi, tol) -> dict:
    try:
        return vf.check_esw_detector(t, e, events, psi, tol).to_dict()
    except vf.NotAProjectionError as exc:
        return {"verdict": "fail", "error": str(exc), "failed_residual": exc.residual.to_dict()}


def verify_report(model: mdl.TwoSlitModel, tol: float) -> dict:
    """All checks for ``model`` as one JSON-ready dict with a top-level verdict."""
    residuals = model.residuals(tol)
    events = list(model.screen_events) + mdl.indicator_events(model.dim_K)
    comm, corr, comp = vf.check_direct_correlation(model.T, model.E, model.Psi, tol)
    report = {
        "model": model.name,
        "dim_K": model.dim_K,
        "tol": tol,
        "structure": [r.to_dict() for r in residuals],
        "n_screen_events": len(events),
        "detector_T_for_E": _detector_entry(model.T, model.E, events, model.Psi, tol),
        "direct_correlation_T_E": [r.to_dict() for r in (comm, corr, comp)],
    }
    checks = [all(r.passed for r in residuals), report["detector_T_for_E"]["verdict"] == "pass"]
    checks.append(all(r.passed for r in (comm, corr, comp)))
    if model.Eplus is not None:
        report["detector_T_for_Eplus"] = _detector_entry(model.T, model.Eplus, events, model.Psi, tol)
        inc = vf.check_incompatibility(model.Eplus, model.E)
        report["incompatibility_Eplus_E"] = inc.to_dict()
        report["incompatibility_Lplus_L"] = vf.check_incompatibility(model.Lplus, model.L).to_dict()
        chain = vf.check_correlation_chain(model, tol)
        report["correlation_chain"] = chain.to_dict()
        checks += [report["detector_T_for_Eplus"]["verdict"] == "pass", chain.passed]
    report["verdict"] = "pass" if all(checks) else "fail"
    return report


def cmd_verify(args) -> int:
    tol = args.tol if args.tol is not None else default_tol()
    model = load_model(args.model)
    report = verify_report(model, tol)
    _emit(report)
    return EXIT_OK if report["verdict"] == "pass" else EXIT_PHYSICS


def _matrix_lines(m: np.ndarray) -> list[str]:
    return ["  [" + "  ".join(f"{x.real:+.4f}" for x in row) + " ]" for row in m]


def demo_text(report: dict, model: mdl.TwoSlitModel) -> str:
    det_e, det_p = report["detector_T_for_E"], report["detector_T_for_Eplus"]
    chain, inc = report["correlation_chain"], report["incompatibility_Eplus_E"]
    p1 = chain["probability"]
    lines = [
        "Four-mode two-slit model, dim K = 4, ancilla C^2",
        "L+ = A + B + C + D in the psi basis:",
        *_matrix_lines(model.Lplus),
        "",
        f"‖[T,F]‖ (max over {report['n_screen_events']} screen events) = "
        f"{max(r['value'] for r in det_e['commutes_with_F']):.3e}",
        f"‖[T,E]‖ = {det_e['commutes_with_target']['value']:.3e}",
        f"‖TΨ − EΨ‖ = {det_e['correlation_residual']:.3e}",
        f"‖[T,E+]‖ = {det_p['commutes_with_target']['value']:.3e}",
        f"‖TΨ − E+Ψ‖ = {det_p['correlation_residual']:.3e}",
        f"‖EΨ − TΨ‖ = {chain['residual_E_T']:.3e}",
        f"‖[E+,E]‖ = {inc['commutator_norm']:.15f}  (incompatible: {inc['incompatible']})",
        "",
        f"T is a non-disturbing ESW detector for E: {det_e['verdict']}",
        f"T is a non-disturbing ESW detector for E+: {det_p['verdict']}",
        "Outcome 1 of T certifies outcome 1 for both E and E+;",
        "outcome 0 of T certifies outcome 0 for both E and E+.",
        f"branch probability P(T=1) = ‖TΨ‖² = {p1:.15f}",
        f"branch probability P(T=0) = {1 - p1:.15f}",
    ]
    return "\n".join(lines) + "\n"


def cmd_demo(args) -> int:
    model = mdl.build_four_mode_model()
    report = verify_report(model, default_tol())
    report["Lplus"] = model.Lplus.real.tolist()
    report["branch_probabilities"] = {"1": report["correlation_chain"]["probability"],
                                      "0": 1 - report["correlation_chain"]["probability"]}
    if not args.json:
        sys.stderr.write(demo_text(report, model))
    _emit(report)
    return EXIT_OK if report["verdict"] == "pass" else EXIT_PHYSICS


STATES = {
    "entangled": ds.entangled_state,
    "coherent": ds.coherent_state,
    "product": ds.uniform_product_state,
}


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected true/false, got {text!r}")


def cmd_simulate(args) -> int:
    if args.runs < 1:
        raise InputError(f"--runs must be at least 1, got {args.runs}")
    try:
        apparatus = ds.Apparatus(
            grid=ds.GridSpec(args.n_points, args.extent),
            geometry=ds.SlitGeometry(args.slit_separation, args.slit_width, args.mode_waist),
            wavelength_scale=args.wavelength_scale,
            n_bins=args.bins,
            screen_halfwidth=args.screen_halfwidth,
        )
        apparatus.screen_bin_index  # validates geometry and binning up front
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    state = STATES[args.state]()
    result = ds.simulate_runs(state, args.measure_t, args.runs, args.seed, apparatus, workers=args.workers)
    exact_state = ds.apply_T_dephasing(state) if args.measure_t else state
    exact = ds.screen_distribution(exact_state, apparatus)

    prefix = args.out
    paths = {
        "hist": f"{prefix}_hist.csv",
        "exact": f"{prefix}_exact.csv",
        "runs": f"{prefix}_runs.jsonl",
        "summary": f"{prefix}_summary.json",
    }
    summary = {
        "state": args.state,
        "measure_t": args.measure_t,
        "runs": args.runs,
        "seed": args.seed,
        "bins": args.bins,
        "fraction_t1": None if not args.measure_t else result.fraction_t1,
        "total_variation": ds.total_variation(result.histogram, exact),
        "fringe_visibility": ds.fringe_visibility(result.histogram),
        "fringe_visibility_exact": ds.fringe_visibility(exact),
        "files": paths,
    }
    try:
        result.histogram.to_csv(paths["hist"])
        exact.to_csv(paths["exact"])
        result.write_jsonl(paths["runs"])
        Path(paths["summary"]).write_text(json.dumps(summary, indent=2) + "\n")
    except OSError as exc:
        raise InputError(f"cannot write output: {exc}") from exc
    _emit(summary)
    return EXIT_OK


def _encode_matrix(m: np.ndarray) -> list:
    return [[[float(x.real), float(x.imag)] for x in row] for row in m]


def cmd_synth(args) -> int:
    tol = args.tol if args.tol is not None else default_tol()
    model = load_model(args.model)
    target_name = args.target or ("Eplus" if model.Eplus is not None else "E")
    dim = model.composite_dim
    targets = {"E": model.E, "Eplus": model.Eplus, "identity": np.eye(dim), "zero": np.zeros((dim, dim))}
    target = targets.get(target_name)
    if target is None:
        raise InputError(f"model has no target projection {target_name!r}")
    events = list(model.screen_events) + mdl.indicator_events(model.dim_K)
    try:
        found = vf.synthesize_detectors(target, model.Psi, events, tol)
    except vf.NotAProjectionError as exc:
        raise InputError(f"target is not a projection: {exc}") from exc
    _emit({
        "model": model.name,
        "target": target_name,
        "tol": tol,
        "ancilla_basis": ["|0>", "|1>"],
        "detectors": [
            {"R": _encode_matrix(s.R), "rank": s.rank, "report": s.report.to_dict()} for s in found
        ],
    })
    return EXIT_OK if found else EXIT_PHYSICS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eswsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="check projection, detector and correlation identities")
    p.add_argument("--model", default="builtin:four-mode", help="config path or builtin:simple|builtin:four-mode")
    p.add_argument("--tol", type=float, default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("demo", help="walk through the four-mode double detection")
    p.add_argument("--json", action="store_true", help="suppress the human-readable text on stderr")
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("simulate", help="seeded Monte Carlo of the double-slit screen")
    p.add_argument("--measure-t", type=_bool, default=True)
    p.add_argument("--runs", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bins", type=int, default=64)
    p.add_argument("--out", default="esw")
    p.add_argument("--state", choices=sorted(STATES), default="entangled")
    p.add_argument("--n-points", type=int, default=2048)
    p.add_argument("--extent", type=float, default=16.0)
    p.add_argument("--slit-separation", type=float, default=4.0)
    p.add_argument("--slit-width", type=float, default=1.0)
    p.add_argument("--mode-waist", type=float, default=0.4)
    p.add_argument("--wavelength-scale", type=float, default=1.0)
    p.add_argument("--screen-halfwidth", type=float, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("synth", help="list ancilla projections that detect a target")
    p.add_argument("--model", default="builtin:four-mode")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--target", choices=["E", "Eplus", "identity", "zero"], default=None)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except InputError as exc:
        print(f"eswsim {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
