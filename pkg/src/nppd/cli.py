"""Command line interface: ``nppd validate | run | presets``.

Exit codes: 0 converged (or valid), 1 configuration error, 2 not converged,
3 assumption violation, 4 numerical breakdown. ``NPPD_OUTPUT_DIR`` redirects
relative output paths.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import config as cfg
from . import diagnostics as dg
from . import oracles
from . import preconditioner as pc
from .core import norm
from .exceptions import ConfigError
from .solver import _constants_for, required_flags_ok, solve

EXIT_CODES = {"converged": 0, "not_converged": 2, "assumption_violation": 3, "numerical_breakdown": 4}
EXIT_CONFIG = 1


def _flags_report(rc: cfg.RunConfig) -> tuple[pc.ConstantsReport, bool]:
    consts = _constants_for(rc.problem, rc.spec, rc.solver)
    return consts, required_flags_ok(consts, rc.solver)


def reference_deviation(rc: cfg.RunConfig, trace) -> float | None:
    """Largest distance between the recorded iterates and the reference scheme."""
    ref = rc.reference
    if ref is None or not trace.history:
        return None
    scheme = oracles.reference_pdhg if ref["kind"] == "pdhg" else oracles.reference_generalized_pd
    us = [u for u, _ in trace.history]
    expected = scheme(rc.problem.phi.K, rc.problem.f, rc.problem.g, ref["tau"], ref["sigma"],
                      ref["theta_pd"], us[0], len(us) - 1)
    return max(norm(a - b) for a, b in zip(us, expected))


def execute(rc: cfg.RunConfig):
    """Solve, run the applicable certificates and assemble the summary.

    Returns ``(state, trace, certificates, summary_dict)``.
    """
    state, trace = solve(rc.problem, rc.spec, rc.solver, u0=rc.u0, header={"run": rc.name})
    consts = _constants_for(rc.problem, rc.spec, rc.solver)
    z_star = rc.problem.known_solution
    certs = {}
    projected = rc.solver.algorithm == "projected"
    halfspace_step = rc.solver.stepsize is None
    if state.status == "assumption_violation":
        for name in ("fejer", "separation", "stepsize_bracket", "h_decay"):
            certs[name] = dg.Certificate.skipped(name, "run not started")
    else:
        if z_star is None:
            certs["fejer"] = dg.Certificate.skipped("fejer", "no known solution")
        elif not (projected and halfspace_step and rc.problem.monotone):
            certs["fejer"] = dg.Certificate.skipped("fejer", "needs the monotone projected halfspace method")
        else:
            certs["fejer"] = dg.check_fejer(trace, z_star, rc.spec)
        certs["separation"] = dg.check_separation(trace, rc.spec, consts, z_star)
        if halfspace_step and projected:
            certs["stepsize_bracket"] = dg.check_stepsize_bracket(trace, consts)
        else:
            certs["stepsize_bracket"] = dg.Certificate.skipped("stepsize_bracket", "no halfspace stepsize")
        certs["h_decay"] = _h_decay(rc, trace, consts, z_star)
    extra = {}
    dev = reference_deviation(rc, trace)
    if dev is not None:
        extra["reference_max_deviation"] = dev
    summ = dg.summary(state, trace, certs, extra)
    return state, trace, certs, summ


def _h_decay(rc, trace, consts, z_star):
    name = "h_decay"
    if rc.solver.stepsize is None or rc.solver.theta_mode != "constant" or rc.solver.algorithm != "projected":
        return dg.Certificate.skipped(name, "needs constant stepsize and relaxation")
    if not (consts.flag_D_pd and consts.flag_G_pd):
        return dg.Certificate.skipped(name, "flag_D_pd false" if not consts.flag_D_pd else "flag_G_pd false")
    if rc.problem.n + rc.problem.m > dg.MAX_MATRIX_DIM:
        return dg.Certificate.skipped(name, "problem too large for metric matrices")
    mats = dg.build_matrices(rc.spec, rc.problem.phi, rc.solver.theta, rc.solver.stepsize)
    dg.annotate_h_seminorm(trace, mats)
    return dg.check_h_seminorm_decay(trace, mats, consts, z_star)


def _resolve(path: str, env_dir: str | None) -> str:
    if env_dir and not os.path.isabs(path):
        return os.path.join(env_dir, path)
    return path


def _load_raw(args) -> dict:
    if args.preset:
        raw = cfg.preset(args.preset)
    else:
        try:
            with open(args.config, encoding="utf-8") as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: malformed JSON: {exc}") from exc
        except OSError as exc:
            raise ConfigError(f"{args.config}: {exc}") from exc
    for o in getattr(args, "override", None) or []:
        raw = cfg.apply_override(raw, o)
    return raw


def cmd_validate(args) -> int:
    rc = cfg.parse(_load_raw(args))
    consts, ok = _flags_report(rc)
    print(json.dumps({"instance": rc.problem.name, "n": rc.problem.n, "m": rc.problem.m,
                      "constants": consts.to_dict(), "required_flags_ok": ok}, indent=2))
    if not ok and not rc.solver.allow_unverified:
        return EXIT_CODES["assumption_violation"]
    return 0


def cmd_run(args) -> int:
    rc = cfg.parse(_load_raw(args))
    state, trace, certs, summ = execute(rc)
    env_dir = os.environ.get("NPPD_OUTPUT_DIR")
    stem = rc.name
    trace_path = _resolve(rc.trace_path or f"{stem}_trace.csv", env_dir)
    summary_path = _resolve(rc.summary_path or f"{stem}_summary.json", env_dir)
    for p in (trace_path, summary_path):
        d = os.path.dirname(p)
        if d:
            os.makedirs(d, exist_ok=True)
    dg.export_trace(trace, trace_path)
    text = json.dumps(summ, indent=2, sort_keys=True, default=dg._json_default)
    with open(summary_path, "w", encoding="utf-8") as fh:
        fh.write(text + "\n")
    print(text)
    return EXIT_CODES[state.status]


def cmd_presets(args) -> int:
    if args.action == "list":
        for name in cfg.PRESETS:
            print(name)
        return 0
    if not args.name:
        raise ConfigError("presets show needs a preset name")
    print(json.dumps(cfg.preset(args.name), indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nppd", description="Preconditioned projective splitting for saddle problems")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("validate", cmd_validate), ("run", cmd_run)):
        p = sub.add_parser(name)
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--config", help="path to a JSON configuration")
        src.add_argument("--preset", help="name of a built-in configuration")
        p.add_argument("--override", action="append", metavar="KEY=VALUE",
                       help="dotted key assignment, value parsed as JSON when possible")
        p.set_defaults(func=fn)
    p = sub.add_parser("presets")
    p.add_argument("action", choices=["list", "show"])
    p.add_argument("name", nargs="?")
    p.set_defaults(func=cmd_presets)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
