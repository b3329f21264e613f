"""Command line front end: ``liebrane <subcommand> ...``.

Exit codes: 0 success, 1 a checked property failed, 2 usage or input
error, 3 numerical abort (non-finite state or degree overflow).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile

import numpy as np

from .branes import BraneStack, orientation_flows, separate_brane, string_spectrum, symmetry_report
from .checks import CHECKS
from .cohomology import build_cocycle, multibracket_tensor
from .dynamics import FlowState, IntegrationAborted, PolyFlowState, evolve_classical, evolve_quantum, make_slot
from .enveloping import (
    MAX_DEGREE,
    DegreeOverflowError,
    PolyMatrix,
    UEAElement,
    gutt_star,
    parse_polynomial,
    realize,
)
from .lie_core import MAX_RANK, DomainError, algebra_to_json, build_su, decompose

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_ABORT = 0, 1, 2, 3
DEFAULT_SEED = 42


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- output


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _write_json(path: str, data) -> None:
    _atomic_write(path, json.dumps(_jsonable(data), indent=1, sort_keys=True) + "\n")


def _write_csv(path: str, header: list, rows: list) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) for v in row])
    _atomic_write(path, buf.getvalue())


# ---------------------------------------------------------------- inputs


def _algebra(n) -> object:
    try:
        return build_su(n)
    except DomainError as exc:
        raise UsageError(str(exc)) from exc


def _load_scenario(path: str) -> dict:
    if not path:
        raise UsageError("--scenario is required")
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read scenario {path}: {exc}") from exc
    if not isinstance(data, dict) or "n" not in data:
        raise UsageError("scenario must be a JSON object with an 'n' field")
    return data


def _parse_matrix(value, d: int) -> np.ndarray:
    rows = np.array(
        [[complex(v[0], v[1]) if isinstance(v, list) else complex(v) for v in row] for row in value]
    )
    if rows.shape != (d, d):
        raise UsageError(f"F0 must be {d}x{d}, got shape {rows.shape}")
    return rows


def _initial_matrix(g, value, seed: int) -> np.ndarray:
    if value is None:
        value = f"random-seed:{seed}"
    if isinstance(value, str):
        if not value.startswith("random-seed:"):
            raise UsageError(f"unrecognised F0 {value!r}")
        rng = np.random.default_rng(int(value.split(":", 1)[1]))
        return g.matrix(rng.standard_normal(g.dim))
    if isinstance(value, dict) and "coeffs" in value:
        return g.matrix(np.asarray(value["coeffs"], dtype=float))
    return _parse_matrix(value, g.d)


def _poly_initial(g, F0: np.ndarray) -> PolyMatrix:
    coeffs, tr, _ = decompose(g, F0)
    coeffs = np.where(np.abs(coeffs) < 1e-15, 0, coeffs)
    P = realize(g, UEAElement.from_vector(g, coeffs))
    if tr != 0:
        P = P + PolyMatrix.identity(g.d, g.dim).scale(tr / g.d)
    return P


# ---------------------------------------------------------------- subcommands


def cmd_algebra(args) -> int:
    g = _algebra(args.n)
    _write_json(args.out, algebra_to_json(g))
    return EXIT_OK


def cmd_cocycle(args) -> int:
    g = _algebra(args.n)
    order = args.order if args.order is not None else 3
    try:
        c = build_cocycle(g, order)
    except DomainError as exc:
        raise UsageError(str(exc)) from exc
    entries = [[list(k), v] for k, v in sorted(c.entries.items())]
    _write_json(args.out, {"n": g.n, "order": c.order, "entries": entries})
    return EXIT_OK


def cmd_check(args) -> int:
    g = _algebra(args.n)
    names = list(CHECKS) if args.what == "all" else args.what.split(",")
    for name in names:
        if name not in CHECKS:
            raise UsageError(f"unknown check {name!r}; choose from {', '.join(CHECKS)} or all")
    if args.corrupt and any(name not in ("jacobi", "gji") for name in names):
        raise UsageError("--corrupt applies to the jacobi and gji checks only")
    results = []
    for name in names:
        kw = {"seed": args.seed, "corrupt": args.corrupt}
        if args.tol is not None:
            kw["tol"] = args.tol
        if name == "gji" and args.order is not None:
            kw["orders"] = [args.order]
        if args.trials is not None:
            kw["trials" if name == "gji" else "count"] = args.trials
        try:
            results.append(CHECKS[name](g, **kw))
        except DomainError as exc:
            raise UsageError(str(exc)) from exc
    ok = all(r.passed for r in results)
    _write_json(args.out, {"n": g.n, "seed": args.seed, "passed": ok, "checks": [r.to_json() for r in results]})
    return EXIT_OK if ok else EXIT_FAIL


def _flow_hams(g, scen: dict):
    """Tensor and Hamiltonian slots from an explicit list or an orientation."""
    flow = scen.get("flow", {})
    custom = scen.get("hamiltonians")
    nesting = flow.get("nesting", "canonical")
    if custom:
        order = int(scen.get("order", 2 * len(custom) + 1))
        t = multibracket_tensor(build_cocycle(g, order))
        hams = []
        for i, item in enumerate(custom):
            coeffs = np.asarray(item["coeffs"], dtype=float)
            if coeffs.shape != (g.dim,):
                raise UsageError(f"hamiltonian {i} needs {g.dim} coefficients")
            hams.append(make_slot(g, UEAElement.from_vector(g, coeffs), item.get("label", f"H{i + 2}")))
        return t, hams, nesting
    orientation = flow.get("orientation", "plus")
    fl = orientation_flows(g, orientation=orientation, nesting=nesting)
    return fl.tensor, list(fl.hamiltonians), nesting


def _order_ratio(t, F0, hams, T, h, nesting) -> float | None:
    """Richardson ratio |F_h - F_h/2| / |F_h/2 - F_h/4|; about 16 for RK4."""
    finals = [evolve_classical(t, F0, hams, T, h / 2 ** i, nesting, track_hamiltonians=False).F for i in range(3)]
    num = float(np.max(np.abs(finals[0] - finals[1])))
    den = float(np.max(np.abs(finals[1] - finals[2])))
    if den < 1e-13 or num < 1e-13:
        return None
    return num / den


def _classical_rows(st: FlowState):
    d = st.F.shape[0]
    labels = sorted(k[len("drift["):-1] for k in st.monitors if k.startswith("drift["))
    header = ["t"]
    for j in range(d):
        for k in range(d):
            header += [f"F_{j}_{k}_re", f"F_{j}_{k}_im"]
    header += ["trace_re", "trace_im", "norm"]
    header += [f"eig_{i}_{part}" for i in range(d) for part in ("re", "im")]
    for lab in labels:
        header += [f"overlap[{lab}]_re", f"overlap[{lab}]_im", f"drift[{lab}]"]
    rows = []
    for i in range(len(st.times)):
        F = st.states[i]
        row = [st.times[i]]
        for z in F.reshape(-1):
            row += [z.real, z.imag]
        tr = st.monitors["trace"][i]
        row += [tr.real, tr.imag, st.monitors["norm"][i]]
        for z in st.monitors["eigenvalues"][i]:
            row += [z.real, z.imag]
        for lab in labels:
            ov = st.monitors[f"overlap[{lab}]"][i]
            row += [ov.real, ov.imag, st.monitors[f"drift[{lab}]"][i]]
        rows.append(row)
    return header, rows


def _quantum_rows(st: PolyFlowState, g, K: int):
    d = g.d
    ones = np.ones(g.dim)
    header = ["t"]
    for k in range(K + 1):
        suffix = "" if k == 0 else f"_hbar{k}"
        for j in range(d):
            for m in range(d):
                header += [f"F_{j}_{m}_re{suffix}", f"F_{j}_{m}_im{suffix}"]
    header.append("max_degree")
    rows = []
    for i, P in enumerate(st.states):
        row = [st.times[i]]
        for k in range(K + 1):
            for z in P.hbar_part(k).evaluate(ones).reshape(-1):
                row += [z.real, z.imag]
        row.append(st.max_degrees[i])
        rows.append(row)
    return header, rows


def cmd_evolve(args) -> int:
    scen = _load_scenario(args.scenario)
    g = _algebra(scen["n"])
    flow = scen.get("flow", {})
    try:
        T, h = float(flow.get("T", 1.0)), float(flow.get("h", 1e-3))
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad T/h in scenario: {exc}") from exc
    mode = flow.get("mode", "classical")
    if mode not in ("classical", "quantum"):
        raise UsageError(f"flow mode must be classical or quantum, got {mode!r}")
    seed = int(scen.get("seed", args.seed))
    try:
        t, hams, nesting = _flow_hams(g, scen)
        F0 = _initial_matrix(g, scen.get("F0"), seed)
    except (DomainError, KeyError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    summary = {"n": g.n, "mode": mode, "labels": [s.label for s in hams], "T": T, "h": h, "nesting": nesting}
    csv_path, json_path = f"{args.out}.csv", f"{args.out}.summary.json"
    try:
        if mode == "classical":
            try:
                st = evolve_classical(t, F0, hams, T, h, nesting)
            except IntegrationAborted as exc:
                if exc.state is not None:
                    _write_csv(csv_path, *_classical_rows(exc.state))
                summary["aborted"] = str(exc)
                _write_json(json_path, summary)
                print(f"integration aborted: {exc}", file=sys.stderr)
                return EXIT_ABORT
            _write_csv(csv_path, *_classical_rows(st))
            tr = st.monitors["trace"]
            summary.update({
                "conservation": {k[len("drift["):-1]: float(np.max(v)) for k, v in st.monitors.items()
                                 if k.startswith("drift[")},
                "trace_drift": float(np.max(np.abs(tr - tr[0]))),
                "residual_warnings": st.residual_warnings,
                "steps": st.steps,
                "final_time": st.t,
            })
            oc_h = float(flow.get("order_check_h", 0.1))
            summary["order_check"] = _order_ratio(t, F0, hams, T, oc_h, nesting) if flow.get("order_check", True) else None
            summary["order_check_h"] = oc_h
        else:
            K = args.hbar_order if args.hbar_order is not None else int(flow.get("hbar_truncation", 2))
            cap = args.max_degree if args.max_degree is not None else int(flow.get("max_degree", MAX_DEGREE))
            try:
                st = evolve_quantum(t, _poly_initial(g, F0), hams, T, h, K, cap, nesting)
            except DegreeOverflowError as exc:
                summary["aborted"] = str(exc)
                _write_json(json_path, summary)
                print(f"integration aborted: {exc}", file=sys.stderr)
                return EXIT_ABORT
            _write_csv(csv_path, *_quantum_rows(st, g, K))
            summary.update({
                "hbar_truncation": K,
                "max_degree": int(max(st.max_degrees)),
                "conservation": {},
                "order_check": None,
                "residual_warnings": 0,
                "steps": len(st.times) - 1,
                "final_time": st.t,
            })
    except DomainError as exc:
        raise UsageError(str(exc)) from exc
    _write_json(json_path, summary)
    return EXIT_OK


def _stack_from(g, scen: dict) -> BraneStack:
    n = g.n
    if "positions" in scen:
        try:
            return BraneStack(n, np.asarray(scen["positions"], dtype=float), g)
        except (DomainError, ValueError) as exc:
            raise UsageError(str(exc)) from exc
    return BraneStack.coincident(n, int(scen.get("transverse", 1)), g)


def cmd_branes(args) -> int:
    scen = _load_scenario(args.scenario)
    g = _algebra(scen["n"])
    stack = _stack_from(g, scen)
    sep = scen.get("separate")
    try:
        if sep:
            stack, report = separate_brane(stack, sep["branes"], sep["displacement"])
        else:
            report = symmetry_report(stack)
    except (DomainError, KeyError) as exc:
        raise UsageError(str(exc)) from exc
    strings = string_spectrum(stack, include_negative=bool(scen.get("negative_roots", False)))
    out = {
        "n": g.n,
        "positions": stack.positions,
        "report": report.to_json(),
        "strings": [
            {"root": list(s.root), "endpoints": list(s.endpoints), "length": s.length,
             "stretched": s.stretched, "orientation": s.orientation}
            for s in strings
        ],
        "stretched_count": sum(s.stretched for s in strings if s.orientation == 1),
        "broken_root_count": len(report.broken_roots),
    }
    _write_json(args.out, out)
    return EXIT_OK


def cmd_star(args) -> int:
    g = _algebra(args.n)
    try:
        f = parse_polynomial(args.f, g.dim)
        h = parse_polynomial(args.g, g.dim)
        prod = gutt_star(f, h, g, args.hbar_order, args.max_degree or MAX_DEGREE)
    except (DomainError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    _write_json(args.out, {"n": g.n, "f": f.to_text(), "g": h.to_text(), "product": prod.to_text()})
    return EXIT_OK


# ---------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="liebrane", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, out_help="output JSON path"):
        sp.add_argument("--out", required=True, help=out_help)
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED)

    sp = sub.add_parser("algebra", help="dump su(n) basis and structure constants")
    sp.add_argument("--n", type=int, required=True, help=f"2..{MAX_RANK}")
    common(sp)
    sp.set_defaults(func=cmd_algebra)

    sp = sub.add_parser("cocycle", help="sparse odd cocycle of su(n)")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--order", type=int, default=None)
    common(sp)
    sp.set_defaults(func=cmd_cocycle)

    sp = sub.add_parser("check", help="run algebraic identity checks")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--what", default="all", help="comma list of " + ",".join(CHECKS) + " or all")
    sp.add_argument("--order", type=int, default=None, help="cocycle order for gji")
    sp.add_argument("--tol", type=float, default=None)
    sp.add_argument("--trials", type=int, default=None)
    sp.add_argument("--corrupt", action="store_true", help="run on a deliberately corrupted tensor")
    common(sp)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("evolve", help="integrate a flow scenario to CSV + summary JSON")
    sp.add_argument("--scenario", required=True)
    sp.add_argument("--hbar-order", type=int, default=None)
    sp.add_argument("--max-degree", type=int, default=None)
    common(sp, "output prefix: writes PREFIX.csv and PREFIX.summary.json")
    sp.set_defaults(func=cmd_evolve)

    sp = sub.add_parser("branes", help="symmetry breaking report and string spectrum")
    sp.add_argument("--scenario", required=True)
    common(sp)
    sp.set_defaults(func=cmd_branes)

    sp = sub.add_parser("star", help="star product of two polynomials in text form")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--f", required=True)
    sp.add_argument("--g", required=True)
    sp.add_argument("--hbar-order", type=int, default=None)
    sp.add_argument("--max-degree", type=int, default=None)
    common(sp)
    sp.set_defaults(func=cmd_star)
    return p


def _check_threads() -> None:
    val = os.environ.get("LIEBRANE_THREADS")
    if val is not None and not (val.isdigit() and int(val) > 0):
        raise UsageError(f"LIEBRANE_THREADS must be a positive integer, got {val!r}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _check_threads()
        return args.func(args)
    except UsageError as exc:
        print(f"liebrane {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IntegrationAborted, DegreeOverflowError) as exc:
        print(f"liebrane {args.command}: numerical abort: {exc}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
