"""Command-line interface: ``qprotect <subcommand> [options]``.

Exit codes: 0 ok, 2 usage or out-of-range input, 3 degenerate run (all
probability abandoned), 4 verification failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Any, Dict, List, Optional

import numpy as np

from . import __version__, closed_form, oracle, search
from .output import Writer, metadata, write_atomic
from .qubit import IDENTITY, STRUCTURAL_TOL
from .scheme import (
    MINUS, PLUS, ControlParams, DegenerateRunError, Ensemble, build_operators, check_noise,
    protect, run_paths, trace_evolution,
)

EXIT_OK, EXIT_USAGE, EXIT_DEGENERATE, EXIT_VERIFY = 0, 2, 3, 4

ANGLE_KEYS = ("theta", "phi", "alpha", "gamma_plus", "gamma_minus", "qcc_alpha")
ANGLE_GRID_KEYS = ("grid_alpha", "grid_gamma_plus", "grid_gamma_minus")
PARAM_COLUMNS = ("alpha", "p", "p1", "p2", "gamma_plus", "gamma_minus")
SWEEP_COLUMNS = ("theta", "phi", "s_plus", "r") + PARAM_COLUMNS + (
    "f_plus", "f_minus", "g_plus", "g_minus", "F", "G", "error")
# not echoed: they change where or how fast output is produced, never its content
NOT_ECHOED = ("command", "handler", "config", "jobs", "output")


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# argument definitions


def _common(p: argparse.ArgumentParser, fmt_default: str, formats=("csv", "json")) -> None:
    g = p.add_argument_group("run options")
    g.add_argument("--config", help="key=value file; same keys as the flags, flags win")
    g.add_argument("--deg", action="store_true", help="angles are given in degrees")
    g.add_argument("--jobs", type=int, default=None,
                   help="worker processes (default: $QPROTECT_JOBS or machine parallelism)")
    g.add_argument("--seed", type=int, default=0, help="unsigned seed echoed in the output metadata")
    g.add_argument("--format", choices=formats, default=fmt_default)
    g.add_argument("--output", "-o", default=None, help="output file (default: stdout)")
    g.add_argument("--paper-range", action="store_true", help="restrict the preweak strength to [0, 1/2]")
    g.add_argument("--qcc-alpha", type=float, default=None,
                   help="basis angle pinned by the qcc and ffc baselines (default: the bisector, -pi/2)")


def _ensemble(p: argparse.ArgumentParser, with_r: bool = True) -> None:
    g = p.add_argument_group("ensemble")
    g.add_argument("--theta", type=float, help="half-angle between the candidate states")
    g.add_argument("--phi", type=float, default=0.0, help="ensemble phase")
    g.add_argument("--s-plus", type=float, default=0.5, help="prior of psi_plus")
    if with_r:
        g.add_argument("--r", type=float, help="amplitude-damping strength")


def _control(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("control parameters")
    g.add_argument("--alpha", type=float, default=0.0)
    g.add_argument("--p", type=float, default=0.5)
    g.add_argument("--p1", type=float, default=0.0)
    g.add_argument("--p2", type=float, default=0.0)
    g.add_argument("--gamma-plus", type=float, default=0.0)
    g.add_argument("--gamma-minus", type=float, default=0.0)


def _grid(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("grid (lo:hi:step, or one value to pin)")
    for name in PARAM_COLUMNS:
        g.add_argument(f"--grid-{name.replace('_', '-')}", default=None)
    g.add_argument("--definite", action="store_true", help="pin p1 = p2 = 0")
    g.add_argument("--cap", type=int, default=search.GRID_CAP, help="maximum lattice size")


def _baseline(p: argparse.ArgumentParser, default: str, allow=None) -> None:
    kinds = [k.value for k in search.BaselineKind] if allow is None else allow
    p.add_argument("--baseline", choices=kinds, default=default)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qprotect", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qprotect {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="evaluate one parameter set")
    _ensemble(p), _control(p), _common(p, "text", ("text", "csv", "json"))
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("trace", help="stage-by-stage state evolution along one branch")
    _ensemble(p), _control(p), _common(p, "text", ("text", "csv", "json"))
    p.add_argument("--input-state", choices=("plus", "minus"), default="plus")
    p.add_argument("--outcome", choices=("plus", "minus"), default="plus")
    p.add_argument("--check", action="store_true", help="assert staged finals equal the path sum")
    p.set_defaults(handler=cmd_trace)

    p = sub.add_parser("sweep", help="evaluate every lattice point")
    _ensemble(p), _grid(p), _common(p, "csv")
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("pareto", help="fidelity / success-probability frontier")
    _ensemble(p), _grid(p), _common(p, "csv")
    p.add_argument("--bins", type=int, default=100)
    _baseline(p, "gqcc", [k.value for k in search.BaselineKind if k is not search.BaselineKind.PRIOR_BLIND])
    p.set_defaults(handler=cmd_pareto)

    p = sub.add_parser("definite-opt", help="best unit-success fidelity per baseline")
    _ensemble(p), _grid(p), _common(p, "csv")
    _baseline(p, "all", ["all"] + [k.value for k in search.BaselineKind])
    p.set_defaults(handler=cmd_definite_opt)

    p = sub.add_parser("compare", help="paired frontiers of the full family and a baseline")
    _ensemble(p), _grid(p), _common(p, "csv")
    p.add_argument("--bins", type=int, default=100)
    _baseline(p, "qcc", ["qcc", "helstrom", "ffc"])
    p.set_defaults(handler=cmd_compare)

    p = sub.add_parser("heatmap", help="unit-success quantity over two ensemble axes")
    _ensemble(p), _grid(p), _common(p, "csv")
    p.add_argument("--quantity", choices=search.HEATMAP_QUANTITIES, default="delta")
    p.add_argument("--axis1", help="name:lo:hi:step with name in s-plus, theta, r, phi")
    p.add_argument("--axis2", help="name:lo:hi:step")
    _baseline(p, "prior-blind", ["qcc", "helstrom", "ffc", "prior-blind"])
    p.set_defaults(handler=cmd_heatmap)

    p = sub.add_parser("validate-closed-form", help="compare the reduced formulas with the simulator")
    _ensemble(p), _common(p, "csv")
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(handler=cmd_validate_closed_form)

    p = sub.add_parser("verify", help="path sum vs superoperator recomputation on random draws")
    _common(p, "text", ("text", "csv", "json"))
    p.add_argument("--draws", type=int, default=1000)
    p.add_argument("--r", type=float, default=None, help="pin the noise (default: random)")
    p.set_defaults(handler=cmd_verify)
    return parser


# ---------------------------------------------------------------------------
# config handling


def _subparser(parser: argparse.ArgumentParser, command: str) -> argparse.ArgumentParser:
    for action in parser._subparsers._group_actions:  # noqa: SLF001 - argparse has no public accessor
        if command in action.choices:
            return action.choices[command]
    raise UsageError(f"unknown command {command!r}")


def read_config(path: str) -> Dict[str, str]:
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key.lstrip("-").replace("-", "_")] = value
    return values


def apply_config(sub: argparse.ArgumentParser, values: Dict[str, str]) -> None:
    actions = {a.dest: a for a in sub._actions if a.dest not in ("help", "config")}  # noqa: SLF001
    defaults = {}
    for key, raw in values.items():
        action = actions.get(key)
        if action is None:
            raise UsageError(f"unknown config key {key!r}")
        if isinstance(action, argparse._StoreTrueAction):  # noqa: SLF001
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise UsageError(f"config key {key!r} expects a boolean")
            defaults[key] = raw.lower() in ("true", "1", "yes")
            continue
        try:
            value = action.type(raw) if action.type else raw
        except ValueError:
            raise UsageError(f"config key {key!r}: cannot parse {raw!r}") from None
        if action.choices is not None and value not in action.choices:
            raise UsageError(f"config key {key!r}: {raw!r} not in {sorted(action.choices)}")
        defaults[key] = value
    sub.set_defaults(**defaults)


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        apply_config(_subparser(parser, args.command), read_config(args.config))
        args = parser.parse_args(argv)
    return args


def config_echo(args: argparse.Namespace) -> Dict[str, Any]:
    return {k: v for k, v in sorted(vars(args).items()) if k not in NOT_ECHOED}


def _to_radians(args: argparse.Namespace) -> None:
    if not args.deg:
        return
    for key in ANGLE_KEYS:
        if getattr(args, key, None) is not None:
            setattr(args, key, math.radians(getattr(args, key)))
    for key in ANGLE_GRID_KEYS:
        text = getattr(args, key, None)
        if text is not None:
            setattr(args, key, ":".join(str(math.radians(float(v))) for v in text.split(":")))
    for key in ("axis1", "axis2"):
        text = getattr(args, key, None)
        if text and text.split(":", 1)[0].replace("-", "_") in ("theta", "phi"):
            name, *nums = text.split(":")
            setattr(args, key, ":".join([name] + [str(math.radians(float(v))) for v in nums]))


# ---------------------------------------------------------------------------
# shared builders


def _require(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        raise UsageError("missing required value(s): " + ", ".join("--" + n.replace("_", "-") for n in missing))


def _ensemble_of(args) -> Ensemble:
    _require(args, "theta")
    return Ensemble(args.theta, args.phi, args.s_plus)


def _noise_of(args) -> float:
    _require(args, "r")
    return check_noise(args.r)


def _params_of(args) -> ControlParams:
    c = ControlParams(args.alpha, args.p, args.p1, args.p2, args.gamma_plus, args.gamma_minus)
    return c.validate(paper_range=args.paper_range)


def _grid_of(args) -> search.GridSpec:
    kwargs = {}
    for name in PARAM_COLUMNS:
        text = getattr(args, f"grid_{name}")
        if text is not None:
            kwargs[name] = search.AxisSpec.parse(text)
    return search.GridSpec(**kwargs, paper_range=args.paper_range, definite=args.definite)


def _jobs(args) -> int:
    return args.jobs if args.jobs is not None else search.default_jobs()


def _writer(args, columns) -> Writer:
    return Writer(args.format, columns, metadata(args.command, args.echo, args.seed))


def _complex(z: complex) -> str:
    return f"{z.real:+.6f}{z.imag:+.6f}j"


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(args) -> int:
    e, r, c = _ensemble_of(args), _noise_of(args), _params_of(args)
    res = protect(e, c, r)
    if args.format == "text":
        lines = [f"{k}={v:.6f}" for k, v in zip(("f_plus", "f_minus", "g_plus", "g_minus", "F", "G"), res.summary())]
        for label, rho in (("rho_out_plus", res.rho_out_plus), ("rho_out_minus", res.rho_out_minus)):
            lines.append(f"{label}=[[{_complex(rho[0, 0])}, {_complex(rho[0, 1])}], "
                         f"[{_complex(rho[1, 0])}, {_complex(rho[1, 1])}]]")
        write_atomic("\n".join(lines) + "\n", args.output)
        return EXIT_OK
    w = _writer(args, SWEEP_COLUMNS)
    w.row((e.theta, e.phi, e.s_plus, r) + c.as_tuple() + res.summary() + (None,))
    write_atomic(w.text(), args.output)
    return EXIT_OK


def cmd_trace(args) -> int:
    e, r, c = _ensemble_of(args), _noise_of(args), _params_of(args)
    which = PLUS if args.input_state == "plus" else MINUS
    outcome = PLUS if args.outcome == "plus" else MINUS
    tr = trace_evolution(which, outcome, e, c, r)
    rows = [(name, j, s[0], s[1], float(np.vdot(s, s).real)) for name, j, s in tr.stages()]
    if args.check:
        ops = build_operators(e.phi, c, r)
        psi = e.psi_plus if which == PLUS else e.psi_minus
        finals = [rec.final_state for rec in run_paths(psi, ops) if rec.preweak_outcome == outcome]
        gap = max(float(np.max(np.abs(a - b))) for a, b in zip(tr.final, finals))
        if gap > STRUCTURAL_TOL:
            print(f"trace check failed: staged final differs from path sum by {gap:.3e}", file=sys.stderr)
            return EXIT_VERIFY
    if args.format == "text":
        lines = [f"{'stage':<12}{'j':>2}  {'amp_0':>22}  {'amp_1':>22}  {'squared_norm':>12}"]
        for name, j, a0, a1, n in rows:
            lines.append(f"{name:<12}{j:>2}  {_complex(a0):>22}  {_complex(a1):>22}  {n:>12.6f}")
        write_atomic("\n".join(lines) + "\n", args.output)
        return EXIT_OK
    w = _writer(args, ("stage", "j", "amp0_re", "amp0_im", "amp1_re", "amp1_im", "squared_norm"))
    for name, j, a0, a1, n in rows:
        w.row((name, j, float(a0.real), float(a0.imag), float(a1.real), float(a1.imag), n))
    write_atomic(w.text(), args.output)
    return EXIT_OK


def cmd_sweep(args) -> int:
    e, r, grid = _ensemble_of(args), _noise_of(args), _grid_of(args)
    w = _writer(args, SWEEP_COLUMNS)
    head = (e.theta, e.phi, e.s_plus, r)
    for chunk in search.sweep_chunks(e, r, grid, _jobs(args), cap=args.cap):
        for params, values, err in chunk.records():
            vals = tuple(None if math.isnan(v) else v for v in values)
            w.row(head + params.as_tuple() + vals + (err,))
    write_atomic(w.text(), args.output)
    return EXIT_OK


FRONTIER_COLUMNS = ("kind", "bin", "g_target", "F", "G") + PARAM_COLUMNS + ("on_frontier", "error")


def _frontier_rows(front: search.Frontier):
    kept = {id(p) for p in front.points}
    for k, pt in enumerate(front.raw):
        if pt is None:
            yield ("bin", k, (k + 0.5) / front.bins, None, None) + (None,) * 6 + (False, "empty-bin")
        else:
            yield ("bin", k, pt.g_target, pt.F_best, pt.G) + pt.params.as_tuple() + (id(pt) in kept, None)
    u = front.unit_success
    yield ("unit", front.bins, 1.0, u.F, u.G) + u.params.as_tuple() + (True, None)


def cmd_pareto(args) -> int:
    e, r, grid = _ensemble_of(args), _noise_of(args), _grid_of(args)
    front = search.pareto(e, r, args.bins, grid, args.baseline, qcc_alpha=args.qcc_alpha,
                          jobs=_jobs(args), cap=args.cap)
    w = _writer(args, FRONTIER_COLUMNS)
    for row in _frontier_rows(front):
        w.row(row)
    write_atomic(w.text(), args.output)
    return EXIT_OK


def cmd_definite_opt(args) -> int:
    e, r, grid = _ensemble_of(args), _noise_of(args), _grid_of(args)
    kinds = list(search.BaselineKind) if args.baseline == "all" else [search.BaselineKind(args.baseline)]
    w = _writer(args, ("baseline", "F", "G", "infidelity") + PARAM_COLUMNS)
    for kind in kinds:
        o = search.definite_optimum(e, r, kind, grid, args.qcc_alpha)
        w.row((kind.value, o.F, o.G, 1 - o.F) + o.params.as_tuple())
    write_atomic(w.text(), args.output)
    return EXIT_OK


def cmd_compare(args) -> int:
    e, r, grid = _ensemble_of(args), _noise_of(args), _grid_of(args)
    full, base = search.compare(e, r, args.baseline, args.bins, grid, args.qcc_alpha, _jobs(args))
    cols = ["bin", "g_target"]
    for tag in ("gqcc", "base"):
        cols += [f"{tag}_F", f"{tag}_G"] + [f"{tag}_{n}" for n in PARAM_COLUMNS]
    cols += ["delta", "error"]
    w = _writer(args, cols)

    def side(pt):
        if pt is None:
            return (None,) * 8
        return (pt.F_best, pt.G) + pt.params.as_tuple()

    for k, (a, b) in enumerate(zip(full.raw, base.raw)):
        delta = None if a is None or b is None else a.F_best - b.F_best
        w.row([k, (k + 0.5) / args.bins, *side(a), *side(b), delta, None if delta is not None else "empty-bin"])
    ua, ub = full.unit_success, base.unit_success
    w.row([args.bins, 1.0, ua.F, ua.G, *ua.params.as_tuple(), ub.F, ub.G, *ub.params.as_tuple(),
           ua.F - ub.F, None])
    write_atomic(w.text(), args.output)
    return EXIT_OK


def _axis(text: Optional[str], label: str):
    if not text:
        raise UsageError(f"--{label} is required (name:lo:hi:step)")
    name, _, rest = text.partition(":")
    name = name.replace("-", "_")
    spec = search.AxisSpec.parse(rest)
    return name, spec.values()


def cmd_heatmap(args) -> int:
    n1, v1 = _axis(args.axis1, "axis1")
    n2, v2 = _axis(args.axis2, "axis2")
    fixed = {"phi": args.phi}
    for name in ("theta", "s_plus", "r"):
        if name not in (n1, n2) and getattr(args, name) is not None:
            fixed[name] = getattr(args, name)
    if "r" in fixed:
        check_noise(fixed["r"])
    grid = _grid_of(args)
    m = search.heatmap((n1, v1), (n2, v2), fixed, args.quantity, args.baseline, grid, args.qcc_alpha, _jobs(args))
    w = _writer(args, (n1, n2, args.quantity))
    for i, a in enumerate(v1):
        for j, b in enumerate(v2):
            w.row((float(a), float(b), float(m[i, j])))
    write_atomic(w.text(), args.output)
    return EXIT_OK


def cmd_validate_closed_form(args) -> int:
    e = Ensemble(_ensemble_of(args).theta, args.phi, 0.5)
    r = _noise_of(args)
    report = closed_form.validate_closed_forms(e, r, tol=args.tol)
    w = _writer(args, ("kind", "formula", "params", "closed_form", "oracle", "gap"))
    for name, rms in report.map_rms:
        w.row(("rms", name, None, None, None, rms))
    for rec in report.records:
        w.row(("record", rec.formula, json.dumps(rec.params, sort_keys=True), rec.closed_form, rec.oracle, rec.gap))
    for flag in report.flags:
        w.row(("flag", flag, None, None, None, None))
    write_atomic(w.text(), args.output)
    return EXIT_OK


def verify_draws(draws: int, seed: int, r: Optional[float] = None) -> Dict[str, float]:
    """Maximum deviations between independent recomputations over random draws."""
    rng = np.random.default_rng(seed)
    worst = {"protect_vs_superoperator": 0.0, "povm_completeness": 0.0, "kraus_completeness": 0.0,
             "unitarity": 0.0}
    done = 0
    while done < draws:
        e = Ensemble(rng.uniform(0, math.pi), rng.uniform(-math.pi, math.pi), rng.uniform(0, 1))
        rr = rng.uniform(0, 1) if r is None else r
        c = ControlParams(*rng.uniform(-math.pi, math.pi, 1), *rng.uniform(0, 1, 3),
                          *rng.uniform(-math.pi, math.pi, 2))
        ops = build_operators(e.phi, c, rr)
        m = ops.M_plus.conj().T @ ops.M_plus + ops.M_minus.conj().T @ ops.M_minus
        k = sum(x.conj().T @ x for x in ops.kraus)
        n = sum(x.conj().T @ x for x in (ops.N_plus, ops.Nbar_plus))
        n2 = sum(x.conj().T @ x for x in (ops.N_minus, ops.Nbar_minus))
        worst["povm_completeness"] = max(worst["povm_completeness"], *(float(np.max(np.abs(a - IDENTITY)))
                                                                       for a in (m, n, n2)))
        worst["kraus_completeness"] = max(worst["kraus_completeness"], float(np.max(np.abs(k - IDENTITY))))
        for u in (ops.U_plus, ops.U_minus, ops.R_plus, ops.R_minus):
            worst["unitarity"] = max(worst["unitarity"], float(np.max(np.abs(u.conj().T @ u - IDENTITY))))
        try:
            a = protect(e, c, rr).summary()
            b = oracle.superoperator_protect(e, c, rr).summary()
        except DegenerateRunError:
            continue
        worst["protect_vs_superoperator"] = max(worst["protect_vs_superoperator"],
                                                max(abs(x - y) for x, y in zip(a, b)))
        done += 1
    return worst


def cmd_verify(args) -> int:
    if args.draws < 1:
        raise UsageError("--draws must be positive")
    if args.r is not None:
        check_noise(args.r)
    worst = verify_draws(args.draws, args.seed, args.r)
    ok = all(v < STRUCTURAL_TOL for v in worst.values())
    if args.format == "text":
        lines = [f"{k}: max error {v:.3e} ({'ok' if v < STRUCTURAL_TOL else 'FAIL'})" for k, v in worst.items()]
        lines.append(f"draws={args.draws} seed={args.seed} tolerance={STRUCTURAL_TOL:g} -> {'PASS' if ok else 'FAIL'}")
        write_atomic("\n".join(lines) + "\n", args.output)
    else:
        w = _writer(args, ("check", "max_error", "tolerance", "status"))
        for k, v in worst.items():
            w.row((k, v, STRUCTURAL_TOL, "ok" if v < STRUCTURAL_TOL else "fail"))
        write_atomic(w.text(), args.output)
    return EXIT_OK if ok else EXIT_VERIFY


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = parse_args(argv)
        if args.seed < 0:
            raise UsageError("--seed must be an unsigned integer")
        if args.jobs is not None and args.jobs < 1:
            raise UsageError("--jobs must be positive")
        args.echo = config_echo(args)
        _to_radians(args)
        if args.qcc_alpha is None:
            args.qcc_alpha = search.BISECTOR_ALPHA
        return args.handler(args)
    except DegenerateRunError as exc:
        print(f"qprotect: degenerate run: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (ValueError, OSError) as exc:
        print(f"qprotect: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
