"""Command-line interface.

Exit codes: 0 when the analysis passes, 1 when it is negative, 2 for usage,
parse or I/O errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import massspring as ms
from .demo import run_demo
from .errors import ConfigError, NIHigsError, NotMinimalError
from .fileio import (
    RunConfig,
    certificate_to_dict,
    dumps,
    load_config,
    model_to_dict,
    trace_to_csv,
    write_atomic,
)
from .higs import HigsParams
from .lti import zoh_discretize
from .loop import analyze_trace, design_higs, simulate, validate_design
from .ni import (
    SearchExhausted,
    check_bilinear_certificate,
    check_ni_certificate,
    empirical_ni_test,
    find_ni_certificate,
)
from .plot import trace_svg

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE = 0, 1, 2


def _emit(args, text: str):
    """Write ``text`` to ``--out`` if given, else to stdout."""
    if args.out:
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.tol is not None:
        if not args.tol > 0:
            raise ConfigError(f"must be > 0, got {args.tol}", "--tol")
        cfg.tol = args.tol
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _require_model(cfg: RunConfig):
    if cfg.model is not None:
        return cfg.model
    if cfg.continuous is not None:
        return zoh_discretize(cfg.continuous, cfg.h)
    raise ConfigError("no model given (need A, B, C or continuous + h)", "model")


def cmd_zoh(args) -> int:
    cfg = _config(args)
    h = args.h if args.h is not None else cfg.h
    if cfg.continuous is None:
        raise ConfigError("zoh needs a continuous model", "continuous")
    if h is None:
        raise ConfigError("sampling period missing", "h")
    if not h > 0:
        raise ConfigError(f"must be > 0, got {h}", "h")
    m = zoh_discretize(cfg.continuous, h)
    text = dumps(model_to_dict(m, cfg.continuous, h))
    if args.out:
        write_atomic(args.out, text)
        sys.stdout.write(dumps({"A": m.A, "B": m.B}))
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_check_ni(args) -> int:
    cfg = _config(args)
    m = _require_model(cfg)
    if cfg.certificate is None and cfg.bilinear is None:
        raise ConfigError("no certificate given (need P or X)", "P")
    out, ok = {}, True
    if cfg.certificate is not None:
        rep = check_ni_certificate(m, cfg.certificate, cfg.tol)
        out["ni"] = rep.as_dict()
        ok &= rep.verdict
        trials = args.trials if args.trials is not None else cfg.trials
        if trials:
            emp = empirical_ni_test(m, cfg.certificate, trials=trials, horizon=cfg.horizon, seed=cfg.seed)
            out["empirical"] = {
                "passed": emp.passed,
                "worst_slack": emp.worst_slack,
                "worst_trial": emp.worst_trial,
                "worst_step": emp.worst_step,
                "trials": emp.trials,
                "horizon": emp.horizon,
                "seed": cfg.seed,
            }
            ok &= emp.passed
    if cfg.bilinear is not None:
        rep = check_bilinear_certificate(m, cfg.bilinear, cfg.tol)
        out["bilinear"] = rep.as_dict()
        ok &= rep.verdict
    out["verdict"] = bool(ok)
    _emit(args, dumps(out))
    return EXIT_OK if ok else EXIT_NEGATIVE


def cmd_find_cert(args) -> int:
    cfg = _config(args)
    m = _require_model(cfg)
    opts = dict(cfg.search)
    for key in ("eps", "max_iters", "method"):
        v = getattr(args, key)
        if v is not None:
            opts[key] = v
    if args.tol is not None:
        opts["tol"] = args.tol
    try:
        cert = find_ni_certificate(m, **opts)
    except SearchExhausted as exc:
        sys.stdout.write(dumps({"found": False, "reason": str(exc), "method": exc.method,
                                "merit": exc.phi, "iterations": exc.iterations}))
        return EXIT_NEGATIVE
    except NotMinimalError as exc:
        sys.stdout.write(dumps({"found": False, "reason": str(exc)}))
        return EXIT_NEGATIVE
    rep = check_ni_certificate(m, cert, opts["tol"])
    if args.out:
        write_atomic(args.out, dumps(certificate_to_dict(cert)))
        sys.stdout.write(dumps({"found": True, "report": rep.as_dict()}))
    else:
        sys.stdout.write(dumps({"found": True, "P": cert.P, "report": rep.as_dict()}))
    return EXIT_OK


def cmd_design(args) -> int:
    cfg = _config(args)
    m = _require_model(cfg)
    if args.omega_h is not None or args.k_h is not None:
        base = cfg.higs or HigsParams(ms.OMEGA_H, ms.K_H)
        p = HigsParams(
            args.omega_h if args.omega_h is not None else base.omega_h,
            args.k_h if args.k_h is not None else base.k_h,
        )
    elif cfg.higs is not None:
        p = cfg.higs
    else:
        margin = args.margin if args.margin is not None else cfg.margin
        p = design_higs(m, margin)
    cert = cfg.certificate
    cert_source = "config"
    if cert is None:
        try:
            cert = find_ni_certificate(m, **cfg.search)
            cert_source = "search"
        except (SearchExhausted, NotMinimalError) as exc:
            sys.stdout.write(dumps({"higs": {"omega_h": p.omega_h, "k_h": p.k_h},
                                    "verdict": False, "reason": f"no certificate: {exc}"}))
            return EXIT_NEGATIVE
    rep = validate_design(m, cert, p, cfg.tol)
    out = {"higs": {"omega_h": p.omega_h, "k_h": p.k_h}, "certificate_source": cert_source, "report": rep.as_dict()}
    if rep.g1_nonpositive:
        out["note"] = "G(1) <= 0: k_h G(1) < 1 holds for every k_h > 0"
    if args.out:
        write_atomic(args.out, dumps({"higs": {"omega_h": p.omega_h, "k_h": p.k_h, "x0": cfg.xh0}}))
    sys.stdout.write(dumps(out))
    return EXIT_OK if rep.verdict else EXIT_NEGATIVE


def cmd_simulate(args) -> int:
    cfg = _config(args)
    m = _require_model(cfg)
    p = cfg.higs
    if args.omega_h is not None or args.k_h is not None:
        base = p or HigsParams(ms.OMEGA_H, ms.K_H)
        p = HigsParams(
            args.omega_h if args.omega_h is not None else base.omega_h,
            args.k_h if args.k_h is not None else base.k_h,
        )
    if p is None:
        raise ConfigError("HIGS parameters missing", "higs")
    n_steps = args.steps if args.steps is not None else cfg.n_steps
    if n_steps < 1:
        raise ConfigError(f"must be >= 1, got {n_steps}", "n_steps")
    x0 = cfg.x0 if cfg.x0 is not None else np.zeros(m.n)
    if len(x0) != m.n:
        raise ConfigError(f"has {len(x0)} entries, model has {m.n} states", "x0")
    trace = simulate(m, p, x0, cfg.xh0, n_steps, cfg.certificate)
    analysis = analyze_trace(trace)
    csv = trace_to_csv(trace)
    summary = dumps(analysis.as_dict())
    if args.out:
        write_atomic(args.out, csv)
        sys.stdout.write(summary)
    else:
        sys.stdout.write(csv)
        sys.stderr.write(summary)
    if args.svg:
        write_atomic(args.svg, trace_svg(trace))
    return EXIT_OK if analysis.converged else EXIT_NEGATIVE


def cmd_demo(args) -> int:
    seed = args.seed if args.seed is not None else 0
    tol = args.tol if args.tol is not None else 1e-9
    if not tol > 0:
        raise ConfigError(f"must be > 0, got {tol}", "--tol")
    if args.steps is not None and args.steps < 1:
        raise ConfigError(f"must be >= 1, got {args.steps}", "--steps")
    res = run_demo(
        omega_h=args.omega_h if args.omega_h is not None else ms.OMEGA_H,
        k_h=args.k_h if args.k_h is not None else ms.K_H,
        n_steps=args.steps if args.steps is not None else ms.N_STEPS,
        tol=tol,
        trials=args.trials if args.trials is not None else 1000,
        seed=seed,
    )
    if args.out:
        out = Path(args.out)
        write_atomic(out / "model.json", dumps(model_to_dict(res.model, ms.continuous_model(), ms.H)))
        write_atomic(out / "certificate.json", dumps(certificate_to_dict(res.certificate)))
        write_atomic(out / "trace.csv", trace_to_csv(res.trace))
        write_atomic(out / "trace.svg", trace_svg(res.trace))
        write_atomic(out / "summary.json", dumps(res.summary()))
    if args.svg:
        write_atomic(args.svg, trace_svg(res.trace))
    sys.stdout.write(dumps(res.summary()))
    for r in res.reasons:
        sys.stderr.write(f"demo: {r}\n")
    return EXIT_OK if res.passed else EXIT_NEGATIVE


def _global_options(parser, suppress: bool):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", metavar="PATH", default=default, help="JSON run configuration")
    parser.add_argument("--out", metavar="PATH", default=default, help="output file (directory for demo)")
    parser.add_argument("--tol", type=float, metavar="FLOAT", default=default, help="check tolerance")
    parser.add_argument("--seed", type=int, metavar="INT", default=default, help="random seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nihigs",
        description="Discrete-time HIGS control of negative-imaginary plants.",
    )
    _global_options(parser, suppress=False)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("zoh", help="zero-order-hold discretization of a continuous model")
    _global_options(p, suppress=True)
    p.add_argument("--h", type=float, help="sampling period in seconds (overrides config)")
    p.set_defaults(func=cmd_zoh)

    p = sub.add_parser("check-ni", help="verify an NI certificate")
    _global_options(p, suppress=True)
    p.add_argument("--trials", type=int, help="also run this many random dissipation trials")
    p.set_defaults(func=cmd_check_ni)

    p = sub.add_parser("find-cert", help="search for an NI certificate P")
    _global_options(p, suppress=True)
    p.add_argument("--eps", type=float)
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--method", choices=("sdp", "subgradient"))
    p.set_defaults(func=cmd_find_cert)

    for name, fn, hlp in (
        ("design", cmd_design, "choose or validate HIGS parameters"),
        ("simulate", cmd_simulate, "simulate the closed loop and write a CSV trace"),
        ("demo", cmd_demo, "run the full mass-spring pipeline"),
    ):
        p = sub.add_parser(name, help=hlp)
        _global_options(p, suppress=True)
        p.add_argument("--omega-h", dest="omega_h", type=float)
        p.add_argument("--k-h", dest="k_h", type=float)
        if name == "design":
            p.add_argument("--margin", type=float)
        else:
            p.add_argument("--steps", type=int)
            p.add_argument("--svg", metavar="PATH", help="write an SVG plot of the states")
        if name == "demo":
            p.add_argument("--trials", type=int, help="random dissipation trials (0 to skip)")
        p.set_defaults(func=fn)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except (NIHigsError, ValueError, OSError) as exc:
        # ConfigError and SingularMatrixError are NIHigsError subclasses
        sys.stderr.write(f"nihigs {args.command}: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
