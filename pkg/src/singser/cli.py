"""Command-line entry point: ``singser compute | verify | sweep``.

Exit codes: 0 success, 1 envelope failure, 2 usage error, 3 capacity exceeded.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import replace
from pathlib import Path
from typing import Callable, Sequence

from . import __version__
from .apsums import (
    CongruenceSpec,
    gallagher_ratio,
    linear_constant,
    pair_moment_closed,
    pair_moment_semi_exact,
    pair_series_sum_brute,
    pair_series_sum_closed,
    pair_sum_unrestricted_closed,
    restricted_sum_brute,
    restricted_sum_leading,
    restricted_sum_main,
)
from .arith import ramanujan_sum
from .errors import CapacityError, DomainError, ToleranceError
from .kernels import BACKEND
from .report import ExperimentConfig, Row, resolve_threads, rows_to_csv, parallel_map
from .singular import DEFAULT_PRIME_LIMIT, singular_series, singular_series_zero, two_term_exact
from .smooth import (
    builtin_bump,
    smooth_pair_moment_closed,
    smooth_pair_moment_semi_exact,
    smooth_series_sum_brute,
    smooth_series_sum_closed,
)
from .suites import DEFAULT_WEIGHTS, SUITES, poisson_gap, run_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CAPACITY = 0, 1, 2, 3


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument parsing

def parse_ints(text: str) -> tuple[int, ...]:
    """``"1,2,3"`` -> ``(1, 2, 3)``."""
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from exc


def parse_grid(text: str) -> tuple[int, ...]:
    """``"512,1024"`` or the doubling range ``"512..8192"``."""
    text = text.strip()
    if ".." in text:
        lo, _, hi = text.partition("..")
        try:
            a, b = int(lo), int(hi)
        except ValueError as exc:
            raise UsageError(f"bad grid range {text!r}") from exc
        if a < 1 or b < a:
            raise UsageError(f"bad grid range {text!r}")
        out = []
        while a <= b:
            out.append(a)
            a *= 2
        return tuple(out)
    grid = parse_ints(text)
    if not grid:
        raise UsageError("empty h grid")
    return grid


def parse_weight(text: str) -> tuple[float, float, float]:
    """``"a,b"`` or ``"a,b,c"``; the default amplitude makes the bump peak at 1."""
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"bad weight {text!r}") from exc
    if len(vals) == 2:
        a, b = vals
        vals.append(math.exp(4.0 / (b - a) ** 2) if b > a else 1.0)
    if len(vals) != 3:
        raise UsageError(f"weight needs a,b[,c], got {text!r}")
    return tuple(vals)  # type: ignore[return-value]


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--h", help="grid of h values: 512,1024 or 512..8192 (doubling)")
    p.add_argument("--r", type=int, help="modulus of the progressions")
    p.add_argument("--classes", help="comma-separated residue classes")
    p.add_argument("--q", type=int, help="squarefree secondary modulus")
    p.add_argument("--k", type=int, help="tuple size")
    p.add_argument("--weight", action="append", help="bump a,b[,c]; repeat for several weights")
    p.add_argument("--prime-limit", type=int, help="Euler product truncation")
    p.add_argument("--threads", type=int, help="worker threads (default $SINGSER_THREADS or 1)")
    p.add_argument("--form", choices=("derived", "printed"), default="derived", help="closed-form variant")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="singser", description="Singular series sums and their verification.")
    parser.add_argument("--version", action="version", version=f"singser {__version__} ({BACKEND} kernels)")
    sub = parser.add_subparsers(dest="command", required=True)

    pc = sub.add_parser("compute", help="evaluate one quantity")
    pc.add_argument("quantity", choices=sorted(COMPUTE))
    pc.add_argument("--set", help="comma-separated tuple for sing/sing0")
    pc.add_argument("--m", type=int, help="shift for two-term / ramanujan")
    pc.add_argument("--v", type=int, help="residue for pair-sum")
    _common(pc)

    pv = sub.add_parser("verify", help="run a verification suite")
    pv.add_argument("suite", choices=list(SUITES))
    pv.add_argument("--slack", type=float, default=0.05, help="added to declared slope exponents")
    pv.add_argument("--timing", action="store_true", help="record wall-clock time (breaks byte-identical reruns)")
    _common(pv)

    ps = sub.add_parser("sweep", help="tabulate an operation across h")
    ps.add_argument("op", choices=sorted(SWEEPS))
    _common(ps)
    return parser


def _config(args, experiment: str, default_h: tuple[int, ...]) -> ExperimentConfig:
    h = parse_grid(args.h) if args.h is not None else default_h
    classes = parse_ints(args.classes) if args.classes else None
    weights = tuple(parse_weight(w) for w in args.weight) if args.weight else None
    return ExperimentConfig(
        experiment, tuple(h), r=args.r, classes=classes, q=args.q, k=args.k,
        prime_limit=args.prime_limit, weights=weights, threads=resolve_threads(args.threads),
        form=args.form, slack=getattr(args, "slack", 0.05),
    )


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# compute

def _one_h(args, default: int) -> int:
    return parse_grid(args.h)[0] if args.h is not None else default


def _limit(args) -> int:
    return args.prime_limit or DEFAULT_PRIME_LIMIT


def _need(value, name: str):
    if value is None:
        raise UsageError(f"--{name} is required")
    return value


def _c_sing(args) -> dict:
    sv = singular_series(parse_ints(_need(args.set, "set")), args.r or 1, _limit(args))
    return {"value": sv.value, "tail_bound": sv.tail_bound, "prime_limit": sv.prime_limit}


def _c_sing0(args) -> dict:
    sv = singular_series_zero(parse_ints(_need(args.set, "set")), args.r or 1, _limit(args))
    return {"value": sv.value, "tail_bound": sv.tail_bound, "prime_limit": sv.prime_limit}


def _c_two_term(args) -> dict:
    sv = two_term_exact(_need(args.m, "m"), args.r or 1, _limit(args))
    return {"value": sv.value, "tail_bound": sv.tail_bound, "prime_limit": sv.prime_limit}


def _c_c0(args) -> dict:
    return {"value": linear_constant(args.r or 1)}


def _c_ramanujan(args) -> dict:
    return {"value": ramanujan_sum(_need(args.q, "q"), _need(args.m, "m"))}


def _c_pair_sum(args) -> dict:
    r, h = args.r or 1, _one_h(args, 100)
    v = args.v if args.v is not None else 0
    b = pair_series_sum_brute(r, v, h, args.prime_limit)
    c = pair_series_sum_closed(r, v, h, args.form)
    return {"brute": b.value, "tail_bound": b.tail_bound, "closed": c.as_dict()}


def _c_v2(args) -> dict:
    r, h = args.r or 1, _one_h(args, 100)
    c1, c2 = parse_ints(args.classes) if args.classes else (1, 1)
    return {"semi_exact": pair_moment_semi_exact(h, r, c1, c2, args.prime_limit, args.form),
            "closed": pair_moment_closed(h, r, c1, c2, args.form).as_dict()}


def _c_rk(args) -> dict:
    r, h = args.r or 1, _one_h(args, 100)
    spec = CongruenceSpec(r, parse_ints(args.classes) if args.classes else (1, 1))
    b = restricted_sum_brute(h, spec, args.prime_limit)
    return {"brute": b.value, "tail_bound": b.tail_bound, "main": restricted_sum_main(h, spec, args.form),
            "leading": restricted_sum_leading(h, spec, args.form)}


def _c_gallagher(args) -> dict:
    return {"value": gallagher_ratio(_one_h(args, 100), args.k or 2, args.prime_limit)}


def _weights(args) -> list:
    params = [parse_weight(w) for w in args.weight] if args.weight else list(DEFAULT_WEIGHTS)
    return [builtin_bump(*p) for p in params]


def _c_sfh(args) -> dict:
    f, h = _weights(args)[0], _one_h(args, 400)
    b = smooth_series_sum_brute(f, h, args.prime_limit)
    c = smooth_series_sum_closed(f, h, args.form)
    return {"brute": b.value, "tail_bound": b.tail_bound, "closed": c.as_dict(), "flags": list(c.flags)}


def _c_v2_smooth(args) -> dict:
    ws = _weights(args)
    f1, f2 = ws[0], ws[1 % len(ws)]
    h = _one_h(args, 400)
    return {"semi_exact": smooth_pair_moment_semi_exact(f1, f2, h, args.prime_limit, args.form),
            "closed": smooth_pair_moment_closed(f1, f2, h, args.form).as_dict()}


COMPUTE: dict[str, Callable] = {
    "sing": _c_sing, "sing0": _c_sing0, "two-term": _c_two_term, "c0": _c_c0, "ramanujan": _c_ramanujan,
    "pair-sum": _c_pair_sum, "v2": _c_v2, "rk": _c_rk, "gallagher": _c_gallagher, "sfh": _c_sfh,
    "v2-smooth": _c_v2_smooth,
}


def _format_compute(name: str, result: dict) -> str:
    lines = []
    for key, val in result.items():
        if isinstance(val, dict):
            lines.extend(f"{name}.{key}.{k} = {v!r}" for k, v in val.items())
        else:
            lines.append(f"{name}.{key} = {val!r}")
    if "value" in result and "tail_bound" in result:
        lines.insert(0, f"{name} = {result['value']!r} +- {result['tail_bound']:.3e}")
    return "\n".join(lines) + "\n"


def cmd_compute(args) -> int:
    result = COMPUTE[args.quantity](args)
    if args.format == "json":
        text = json.dumps({"quantity": args.quantity, **result}, indent=2) + "\n"
    else:
        text = _format_compute(args.quantity, result)
    _emit(text, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify

def cmd_verify(args) -> int:
    suite = SUITES[args.suite]
    config = _config(args, suite.id, suite.default_h)
    start = time.perf_counter()
    report = run_suite(config)
    if args.timing:
        report.wall_clock = time.perf_counter() - start
    text = report.to_json() if args.format == "json" else report.to_csv()
    _emit(text, args.out)
    for case in report.cases:
        verdict = {True: "pass", False: "FAIL", None: "info"}[case.passed]
        if report.report_only and case.passed is False:
            verdict = "WARN"
        slope = "" if case.fit is None else f" slope={case.fit.slope:.3f}"
        print(f"[{verdict}] {case.case}{slope} ({case.envelope})", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_FAIL


# ---------------------------------------------------------------------------
# sweep

def _sw_two_term(cfg: ExperimentConfig, h: int) -> tuple[float, float]:
    r = cfg.r or 1
    v = cfg.classes[0] if cfg.classes else 1
    return (pair_series_sum_brute(r, v, h, cfg.prime_limit).value, pair_series_sum_closed(r, v, h, cfg.form).total)


def _sw_v2(cfg: ExperimentConfig, h: int) -> tuple[float, float]:
    r = cfg.r or 1
    c1, c2 = cfg.classes if cfg.classes else (1, 1)
    return (pair_moment_semi_exact(h, r, c1, c2, cfg.prime_limit, cfg.form),
            pair_moment_closed(h, r, c1, c2, cfg.form).total)


def _sw_rk(cfg: ExperimentConfig, h: int) -> tuple[float, float]:
    spec = CongruenceSpec(cfg.r or 1, cfg.classes or (1, 1))
    return restricted_sum_brute(h, spec, cfg.prime_limit).value, restricted_sum_main(h, spec, cfg.form)


def _sw_ms(cfg: ExperimentConfig, h: int) -> tuple[float, float]:
    return restricted_sum_brute(h, CongruenceSpec(1, (1, 1)), cfg.prime_limit).value, pair_sum_unrestricted_closed(h)


def _sw_gallagher(cfg: ExperimentConfig, h: int) -> tuple[float, float]:
    return gallagher_ratio(h, cfg.k or 2, cfg.prime_limit), 1.0


def _cfg_weights(cfg: ExperimentConfig):
    return [builtin_bump(*p) for p in (cfg.weights or DEFAULT_WEIGHTS)]


def _sw_sfh(cfg: ExperimentConfig, h: int) -> tuple[float, float]:
    f = _cfg_weights(cfg)[0]
    return smooth_series_sum_brute(f, h, cfg.prime_limit).value, smooth_series_sum_closed(f, h, cfg.form).total


def _sw_v2_smooth(cfg: ExperimentConfig, h: int) -> tuple[float, float]:
    ws = _cfg_weights(cfg)
    f1, f2 = ws[0], ws[1 % len(ws)]
    return (smooth_pair_moment_semi_exact(f1, f2, h, cfg.prime_limit, cfg.form),
            smooth_pair_moment_closed(f1, f2, h, cfg.form).total)


def _sw_poisson(cfg: ExperimentConfig, h: int) -> tuple[float, float]:
    return poisson_gap(_cfg_weights(cfg)[0], h), 0.0


SWEEPS: dict[str, Callable[[ExperimentConfig, int], tuple[float, float]]] = {
    "two-term": _sw_two_term, "v2": _sw_v2, "rk": _sw_rk, "ms-k2": _sw_ms, "gallagher": _sw_gallagher,
    "sfh": _sw_sfh, "v2-smooth": _sw_v2_smooth, "poisson": _sw_poisson,
}


def cmd_sweep(args) -> int:
    if args.h is None:
        raise UsageError("sweep needs --h")
    config = _config(args, args.op, ())
    vals = parallel_map(lambda h: SWEEPS[args.op](config, h), list(config.h), config.threads)
    rows = [Row(args.op, h, float(c), float(p)) for h, (c, p) in zip(config.h, vals)]
    if args.format == "csv":
        text = rows_to_csv(rows)
    else:
        text = json.dumps({"id": args.op, "config": config.echo(), "rows": [r.as_dict() for r in rows]}, indent=2) + "\n"
    _emit(text, args.out)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2
        return int(exc.code or 0)
    handlers = {"compute": cmd_compute, "verify": cmd_verify, "sweep": cmd_sweep}
    try:
        return handlers[args.command](args)
    except (UsageError, DomainError) as exc:
        print(f"singser: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapacityError as exc:
        print(f"singser: capacity exceeded: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except ToleranceError as exc:
        print(f"singser: tolerance not met: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
