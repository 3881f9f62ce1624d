"""Verification suites: each compares an exact computation with its expansion on an ``h`` grid."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable

from . import __version__
from .apsums import (
    CongruenceSpec,
    gallagher_ratio,
    modulus_moment,
    pair_moment_closed,
    pair_moment_semi_exact,
    pair_series_sum_brute,
    pair_series_sum_closed,
    pair_sum_unrestricted_closed,
    restricted_sum_brute,
    restricted_sum_leading,
    restricted_sum_main,
)
from .combinat import perfect_matchings
from .errors import DomainError
from .expsums import oddterm_diagnostic
from .report import CaseResult, ExperimentConfig, Row, VerificationReport, fit_slope, parallel_map
from .smooth import (
    SmoothWeight,
    builtin_bump,
    cross_envelope_constant,
    mu_average,
    mu_average_envelope,
    mu_average_main,
    smooth_pair_moment_closed,
    smooth_pair_moment_semi_exact,
    smooth_series_sum_brute,
    smooth_series_sum_closed,
    weighted_exp_sum,
    weighted_exp_sum_poisson,
)

MIN_SLOPE_POINTS = 4
#: Default bumps, amplitudes chosen so that each peaks at 1.
DEFAULT_WEIGHTS = ((1.0, 2.0, math.e**4), (0.5, 2.5, math.e))
POISSON_GRID = 101


@dataclass(frozen=True)
class Suite:
    id: str
    description: str
    default_h: tuple[int, ...]
    run: Callable[[ExperimentConfig], list[CaseResult]]
    report_only: bool = False
    slope_based: bool = True


def _label(suite: str, **params) -> str:
    return suite + ":" + ",".join(f"{k}={v}" for k, v in params.items())


def _check_points(config: ExperimentConfig) -> None:
    if len(config.h) < MIN_SLOPE_POINTS:
        raise DomainError(f"slope suites need at least {MIN_SLOPE_POINTS} grid points, got {len(config.h)}")


def _slope_case(label: str, rows: list[Row], exponent: float, slack: float) -> CaseResult:
    fit = fit_slope([r.h for r in rows], [r.residual for r in rows])
    return CaseResult(label, rows, f"slope <= {exponent} (+{slack})", fit.slope <= exponent + slack, fit)


def _grid_rows(config: ExperimentConfig, label: str, point: Callable[[int], tuple[float, float]]) -> list[Row]:
    vals = parallel_map(point, list(config.h), config.threads)
    return [Row(label, h, float(c), float(p)) for h, (c, p) in zip(config.h, vals)]


def _weights(config: ExperimentConfig) -> list[SmoothWeight]:
    params = config.weights or DEFAULT_WEIGHTS
    return [builtin_bump(a, b, c) for a, b, c in params]


# ---------------------------------------------------------------------------
# arithmetic progressions

TWO_TERM_CASES = ((1, 1), (3, 3), (3, 1), (4, 1), (4, 2), (6, 5))


def run_two_term(config: ExperimentConfig) -> list[CaseResult]:
    _check_points(config)
    if config.r is None:
        cases = TWO_TERM_CASES
    else:
        vs = config.classes if config.classes else range(1, config.r + 1)
        cases = tuple((config.r, int(v)) for v in vs)
    out = []
    for r, v in cases:
        label = _label("two-term", r=r, v=v)

        def point(h: int, r=r, v=v) -> tuple[float, float]:
            return (pair_series_sum_brute(r, v, h, config.prime_limit).value,
                    pair_series_sum_closed(r, v, h, config.form).total)

        out.append(_slope_case(label, _grid_rows(config, label, point), 0.75, config.slack))
    return out


V2_CASES = ((1, 1, 1), (4, 1, 1), (4, 1, 3), (4, 1, 2), (3, 1, 2))


def run_v2_bridge(config: ExperimentConfig) -> list[CaseResult]:
    _check_points(config)
    if config.r is None:
        cases = V2_CASES
    elif config.classes:
        if len(config.classes) != 2:
            raise DomainError("v2-bridge takes exactly two classes")
        cases = ((config.r, *config.classes),)
    else:
        cases = tuple((config.r, 1, c) for c in range(1, config.r + 1))
    out = []
    for r, c1, c2 in cases:
        label = _label("v2-bridge", r=r, c1=c1, c2=c2)

        def point(h: int, r=r, c1=c1, c2=c2) -> tuple[float, float]:
            return (pair_moment_semi_exact(h, r, c1, c2, config.prime_limit, config.form),
                    pair_moment_closed(h, r, c1, c2, config.form).total)

        out.append(_slope_case(label, _grid_rows(config, label, point), 0.75, config.slack))
    return out


VK_CASES = (
    (6, 1, (1, 1, 1, 1)),
    (10, 3, (1, 1, 1, 1)),
    (10, 3, (1, 1, 2, 2)),
    (10, 3, (1, 2, 2, 3)),
    (30, 1, (1, 1, 1, 1)),
)


def matching_sum(q: int, h: int, spec: CongruenceSpec) -> float:
    """``sum_sigma prod_{(i,j) in sigma} V_2(q, h; r, c_i, c_j)``."""
    cache: dict[tuple[int, int], float] = {}

    def v2(ci: int, cj: int) -> float:
        key = (ci, cj)
        if key not in cache:
            cache[key] = modulus_moment(q, h, CongruenceSpec(spec.r, key))
        return cache[key]

    return math.fsum(
        math.prod(v2(spec.classes[i - 1], spec.classes[j - 1]) for i, j in sigma.pairs)
        for sigma in perfect_matchings(spec.k)
    )


def _strictly_decreasing(xs) -> bool:
    return all(b < a for a, b in zip(xs, xs[1:]))


def run_vk_matching(config: ExperimentConfig) -> list[CaseResult]:
    if config.q is not None or config.r is not None:
        q = config.q if config.q is not None else 6
        cases = ((q, config.r or 1, tuple(config.classes or (1, 1, 1, 1))),)
    else:
        cases = VK_CASES
    out = []
    for q, r, classes in cases:
        spec = CongruenceSpec(r, classes)
        label = _label("vk-matching", q=q, r=r, classes="/".join(map(str, spec.classes)))

        def point(h: int, q=q, spec=spec) -> tuple[float, float]:
            return modulus_moment(q, h, spec), matching_sum(q, h, spec)

        rows = _grid_rows(config, label, point)
        scaled = [abs(r_.residual) / r_.h**2 for r_ in rows]
        fit = fit_slope([r_.h for r_ in rows], [r_.residual for r_ in rows]) if len(rows) >= 2 else None
        out.append(CaseResult(label, rows, "|residual|/h^2 strictly decreasing", _strictly_decreasing(scaled),
                              fit, {"residual_over_h2": scaled}))
    return out


RK_CASES = ((4, (1, 1)), (4, (1, 3)))
SIMPLE_RATIO_BOUNDS = (0.6, 1.4)


def run_rk_ap(config: ExperimentConfig) -> list[CaseResult]:
    if config.r is None:
        cases = RK_CASES
    else:
        cases = ((config.r, tuple(config.classes or (1, 1))),)
    out = []
    for r, classes in cases:
        spec = CongruenceSpec(r, classes)
        label = _label("rk-ap", r=r, classes="/".join(map(str, spec.classes)))

        def point(h: int, spec=spec) -> tuple[float, float]:
            return (restricted_sum_brute(h, spec, config.prime_limit).value,
                    restricted_sum_main(h, spec, config.form))

        rows = _grid_rows(config, label, point)
        gaps = [abs(x.residual) / abs(x.computed) if x.computed else math.inf for x in rows]
        ok = _strictly_decreasing(gaps)
        extras: dict = {"relative_gap": gaps}
        envelope = "relative gap strictly decreasing"
        if len(set(spec.classes)) == 1 and spec.k % 2 == 0:
            top = rows[-1]
            simple = restricted_sum_leading(top.h, spec, config.form)
            ratio = simple / top.computed if top.computed else math.inf
            lo, hi = SIMPLE_RATIO_BOUNDS
            extras["simple_over_brute"] = ratio
            ok = ok and lo <= ratio <= hi
            envelope += f"; simple/brute in [{lo}, {hi}] at h={top.h}"
        fit = fit_slope([x.h for x in rows], [x.residual for x in rows]) if len(rows) >= 2 else None
        out.append(CaseResult(label, rows, envelope, ok, fit, extras))
    return out


def run_ms_k2(config: ExperimentConfig) -> list[CaseResult]:
    _check_points(config)
    spec = CongruenceSpec(1, (1, 1))
    label = _label("ms-k2", k=2)

    def point(h: int) -> tuple[float, float]:
        return restricted_sum_brute(h, spec, config.prime_limit).value, pair_sum_unrestricted_closed(h)

    return [_slope_case(label, _grid_rows(config, label, point), 0.8, config.slack)]


GALLAGHER_CASES = ((2, 100), (3, 60))


def gallagher_tolerance(k: int) -> float:
    """Allowed deviation of the mean from 1: 10% for pairs, 15% for triples."""
    return 0.05 * k


def run_gallagher(config: ExperimentConfig) -> list[CaseResult]:
    if config.k is None and config.h == SUITES["gallagher"].default_h:
        cases = GALLAGHER_CASES
    else:
        cases = tuple((config.k or 2, h) for h in config.h)
    out = []
    for k, h in cases:
        label = _label("gallagher", k=k, h=h)
        ratio = gallagher_ratio(h, k, config.prime_limit)
        tol = gallagher_tolerance(k)
        out.append(CaseResult(label, [Row(label, h, ratio, 1.0)], f"|ratio - 1| <= {tol:g}", abs(ratio - 1.0) <= tol))
    return out


# ---------------------------------------------------------------------------
# smooth weights

POISSON_WINDOW = (-1.2, -0.8)


def poisson_gap(f: SmoothWeight, h: int, points: int = POISSON_GRID) -> float:
    """``max |E_{f,h}(alpha) - h f^(-h alpha)|`` over ``points`` equally spaced ``alpha`` in ``[-1/2, 1/2]``."""
    grid = [Fraction(i, points - 1) - Fraction(1, 2) for i in range(points)]
    return max(abs(weighted_exp_sum(f, h, a) - weighted_exp_sum_poisson(f, h, a)) for a in grid)


def run_smooth_poisson(config: ExperimentConfig) -> list[CaseResult]:
    _check_points(config)
    lo, hi = POISSON_WINDOW
    out = []
    for f in _weights(config):
        label = _label("smooth-poisson", a=f.a, b=f.b)

        def point(h: int, f=f) -> tuple[float, float]:
            return poisson_gap(f, h), 0.0

        rows = _grid_rows(config, label, point)
        fit = fit_slope([r.h for r in rows], [r.residual for r in rows])
        ok = lo - config.slack <= fit.slope <= hi + config.slack
        out.append(CaseResult(label, rows, f"slope in [{lo}, {hi}] (+-{config.slack})", ok, fit))
    return out


V2_RATIO_BOUND = 3.0


def run_smooth_v2(config: ExperimentConfig) -> list[CaseResult]:
    ws = _weights(config)
    pairs = [(ws[i], ws[j]) for i in range(len(ws)) for j in range(i, len(ws))]
    out = []
    for f1, f2 in pairs:
        label = _label("smooth-v2", f1=f"{f1.a}-{f1.b}", f2=f"{f2.a}-{f2.b}")

        def point(h: int, f1=f1, f2=f2) -> tuple[float, float]:
            return (smooth_pair_moment_semi_exact(f1, f2, h, config.prime_limit, config.form),
                    smooth_pair_moment_closed(f1, f2, h, config.form).total)

        rows = _grid_rows(config, label, point)
        per_h = [abs(r.residual) / r.h for r in rows]
        spread = max(per_h) / min(per_h) if min(per_h) > 0 else math.inf
        fit = fit_slope([r.h for r in rows], [r.residual for r in rows]) if len(rows) >= 2 else None
        out.append(CaseResult(label, rows, f"max/min of |residual|/h <= {V2_RATIO_BOUND:g}", spread <= V2_RATIO_BOUND,
                              fit, {"residual_over_h": per_h, "spread": spread}))
    return out


def run_smooth_sfh(config: ExperimentConfig) -> list[CaseResult]:
    _check_points(config)
    out = []
    for f in _weights(config):
        label = _label("smooth-sfh", a=f.a, b=f.b)

        def point(h: int, f=f) -> tuple[float, float, float, tuple[str, ...]]:
            brute = smooth_series_sum_brute(f, h, config.prime_limit).value
            terms = smooth_series_sum_closed(f, h, config.form)
            return brute, terms["linear"] + terms["log"], brute - terms.total, terms.flags

        vals = parallel_map(point, list(config.h), config.threads)
        rows = [Row(label, h, v[0], v[1]) for h, v in zip(config.h, vals)]
        case = _slope_case(label, rows, 0.0, config.slack)
        case.extras = {"residual_with_constant": [v[2] for v in vals], "flags": list(vals[0][3])}
        out.append(case)
    return out


MU_RATIOS = (1, 2, 4)
MU_STABILITY = 10.0


def run_mu_avg(config: ExperimentConfig) -> list[CaseResult]:
    f1, f2 = (_weights(config) * 2)[:2]
    points = [(h * t, h) for h in config.h for t in MU_RATIOS]

    def point(mh: tuple[int, int]) -> tuple[float, float, float, float]:
        m, h = mh
        env = mu_average_envelope(m, h)
        zero = abs(mu_average(f1, f2, m, h, 0, exclude_zero=True))
        shift = abs(mu_average(f1, f2, m, h, Fraction(1, 7)) - mu_average_main(f1, f2, m, h, Fraction(1, 7)))
        cross = cross_envelope_constant(f1, f2, m, h, Fraction(1, 3), Fraction(1, 5))
        return zero, env, shift / env, cross

    vals = parallel_map(point, points, config.threads)
    rows = [Row(_label("mu-avg", m=m), h, v[0], v[1]) for (m, h), v in zip(points, vals)]
    c_zero = [v[0] / v[1] for v in vals]
    c_shift = [v[2] for v in vals]

    def spread(cs):
        pos = [c for c in cs if c > 0]
        return max(pos) / min(pos) if pos else math.inf

    stable = spread(c_zero) <= MU_STABILITY
    extras = {"grid": [list(p) for p in points], "C_zero": c_zero, "C_shift": c_shift,
              "C_cross": [v[3] for v in vals], "spread_zero": spread(c_zero), "spread_shift": spread(c_shift)}
    return [CaseResult("mu-avg", rows, f"C spread <= {MU_STABILITY:g} (report only)", stable, None, extras)]


ODDTERM_CASES = ((5, 1, 3), (6, 1, 4), (7, 2, 3))


def run_oddterm(config: ExperimentConfig) -> list[CaseResult]:
    if config.q is not None:
        cases = ((config.q, config.r or 1, config.k or 3),)
    else:
        cases = ODDTERM_CASES
    out = []
    for q, r, k in cases:
        label = _label("oddterm-report", q=q, r=r, k=k)

        def point(h: int, q=q, r=r, k=k) -> tuple[float, float]:
            return oddterm_diagnostic(q, h, r, k, config.prime_limit), 0.0

        rows = _grid_rows(config, label, point)
        fit = fit_slope([x.h for x in rows], [x.residual for x in rows]) if len(rows) >= 2 else None
        out.append(CaseResult(label, rows, "growth report only", None, fit))
    return out


SUITES: dict[str, Suite] = {
    s.id: s
    for s in (
        Suite("two-term", "weighted two-term sums against their expansion", (512, 1024, 2048, 4096), run_two_term),
        Suite("v2-bridge", "pair moment at Q against its expansion", (512, 1024, 2048, 4096), run_v2_bridge),
        Suite("vk-matching", "fourth moment against the matching sum of pair moments", (100, 200, 400, 800),
              run_vk_matching, slope_based=False),
        Suite("rk-ap", "restricted pair sums against the structured main term", (500, 1000, 2000), run_rk_ap,
              slope_based=False),
        Suite("ms-k2", "unrestricted pair sum against -h log h + A h", (512, 1024, 2048, 4096, 8192), run_ms_k2),
        Suite("gallagher", "mean of the singular series over k-subsets", (100,), run_gallagher, slope_based=False),
        Suite("smooth-poisson", "weighted exponential sums against the Poisson term", (100, 200, 400, 800),
              run_smooth_poisson),
        Suite("smooth-v2", "smooth pair moment against its expansion", (200, 400, 800, 1600), run_smooth_v2,
              slope_based=False),
        Suite("smooth-sfh", "smooth two-term sum against its leading terms", (200, 400, 800, 1600, 3200),
              run_smooth_sfh),
        Suite("mu-avg", "stability of averaged exponential-sum envelopes", (25, 50, 100, 200), run_mu_avg,
              report_only=True, slope_based=False),
        Suite("oddterm-report", "non-paired denominator tuples", (25, 50, 100, 200), run_oddterm,
              report_only=True, slope_based=False),
    )
}


def run_suite(config: ExperimentConfig) -> VerificationReport:
    """Run the suite named by ``config.experiment``."""
    suite = SUITES.get(config.experiment)
    if suite is None:
        raise DomainError(f"unknown suite {config.experiment!r}; choose from {', '.join(SUITES)}")
    cases = suite.run(config)
    return VerificationReport(suite.id, config, cases, suite.report_only, __version__)


def default_config(suite_id: str, **overrides) -> ExperimentConfig:
    """Config with the suite's default grid, updated by ``overrides``."""
    suite = SUITES.get(suite_id)
    if suite is None:
        raise DomainError(f"unknown suite {suite_id!r}")
    base = ExperimentConfig(suite_id, suite.default_h)
    return replace(base, **overrides) if overrides else base


__all__ = ["SUITES", "Suite", "run_suite", "default_config", "matching_sum", "poisson_gap"]
