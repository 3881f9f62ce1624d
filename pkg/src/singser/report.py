"""Experiment configuration, slope fitting and report serialisation."""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np
from scipy import stats

from .errors import DomainError

SCHEMA = "singser.report/1"
CSV_COLUMNS = ("experiment", "h", "computed", "predicted", "residual")
MIN_PRIME_LIMIT = 10**4
THREADS_ENV = "SINGSER_THREADS"

T = TypeVar("T")
R = TypeVar("R")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines the output of a suite run.

    Attributes:
        experiment: Suite or operation id.
        h: Ascending grid of ``h`` values.
        r: Modulus, when the suite takes one (``None`` selects the suite default cases).
        classes: Class vector, when the suite takes one.
        q: Secondary modulus for moment suites.
        k: Tuple size for suites that take one.
        prime_limit: Euler-product truncation (``None`` for the per-operation default).
        weights: Bump parameters ``(a, b, c)`` for the smooth suites.
        threads: Worker threads over grid points.
        form: ``"derived"`` or ``"printed"`` closed forms.
        slack: Added to declared slope exponents when judging envelopes.
    """

    experiment: str
    h: tuple[int, ...]
    r: int | None = None
    classes: tuple[int, ...] | None = None
    q: int | None = None
    k: int | None = None
    prime_limit: int | None = None
    weights: tuple[tuple[float, float, float], ...] | None = None
    threads: int = 1
    form: str = "derived"
    slack: float = 0.05

    def __post_init__(self) -> None:
        if not self.h:
            raise DomainError("empty h grid")
        if any(b <= a for a, b in zip(self.h, self.h[1:])):
            raise DomainError(f"h grid must be strictly ascending: {self.h}")
        if self.prime_limit is not None and self.prime_limit < MIN_PRIME_LIMIT:
            raise DomainError(f"prime_limit must be at least {MIN_PRIME_LIMIT}")
        if self.threads < 1:
            raise DomainError("threads must be >= 1")

    def echo(self) -> dict:
        """Config as written to reports; the thread count is left out so reports compare across it."""
        out = asdict(self)
        out.pop("threads")
        return out


@dataclass(frozen=True)
class Row:
    experiment: str
    h: int
    computed: float
    predicted: float

    @property
    def residual(self) -> float:
        return self.computed - self.predicted

    def as_dict(self) -> dict:
        return {"experiment": self.experiment, "h": self.h, "computed": self.computed,
                "predicted": self.predicted, "residual": self.residual}


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    stderr: float


@dataclass
class CaseResult:
    """One parameter choice of a suite: its rows, fitted slope and verdict.

    ``passed`` is ``None`` for report-only cases.
    """

    case: str
    rows: list[Row]
    envelope: str
    passed: bool | None
    fit: SlopeFit | None = None
    extras: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "case": self.case,
            "rows": [r.as_dict() for r in self.rows],
            "slope": None if self.fit is None else self.fit.slope,
            "slope_stderr": None if self.fit is None else self.fit.stderr,
            "envelope": self.envelope,
            "pass": self.passed,
            "extras": self.extras,
        }


@dataclass
class VerificationReport:
    """Outcome of one suite run.

    ``passed`` is true when every asserted case passes; report-only suites
    always pass.  ``wall_clock`` is only recorded on request because it
    would break byte-identical reruns.
    """

    id: str
    config: ExperimentConfig
    cases: list[CaseResult]
    report_only: bool = False
    version: str = ""
    wall_clock: float | None = None

    @property
    def passed(self) -> bool:
        if self.report_only:
            return True
        return all(c.passed is not False for c in self.cases)

    @property
    def rows(self) -> list[Row]:
        return [r for c in self.cases for r in c.rows]

    def worst_fit(self) -> SlopeFit | None:
        fits = [c.fit for c in self.cases if c.fit is not None and math.isfinite(c.fit.slope)]
        return max(fits, key=lambda f: f.slope) if fits else None

    def as_dict(self) -> dict:
        worst = self.worst_fit()
        out = {
            "schema": SCHEMA,
            "id": self.id,
            "version": self.version,
            "config": self.config.echo(),
            "report_only": self.report_only,
            "cases": [c.as_dict() for c in self.cases],
            "rows": [r.as_dict() for r in self.rows],
            "slope": None if worst is None else worst.slope,
            "slope_stderr": None if worst is None else worst.stderr,
            "pass": self.passed,
        }
        if self.wall_clock is not None:
            out["wall_clock"] = self.wall_clock
        return out

    def to_json(self) -> str:
        return json.dumps(_finite(self.as_dict()), indent=2) + "\n"

    def to_csv(self) -> str:
        return rows_to_csv(self.rows)


def _finite(obj):
    """Replace non-finite floats by strings so the JSON stays standard."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def rows_to_csv(rows: Iterable[Row]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow([r.experiment, r.h, repr(float(r.computed)), repr(float(r.predicted)), repr(float(r.residual))])
    return buf.getvalue()


def fit_slope(hs: Sequence[float], values: Sequence[float]) -> SlopeFit:
    """Least-squares slope of ``log |value|`` against ``log h``.

    Exact zeros are floored at the smallest normal double so the fit stays finite.
    """
    if len(hs) < 2:
        raise DomainError("slope fit needs at least two points")
    x = np.log(np.asarray(hs, dtype=np.float64))
    y = np.log(np.maximum(np.abs(np.asarray(values, dtype=np.float64)), np.finfo(np.float64).tiny))
    res = stats.linregress(x, y)
    return SlopeFit(float(res.slope), float(res.stderr))


def resolve_threads(requested: int | None) -> int:
    """Explicit request, else ``$SINGSER_THREADS``, else 1."""
    if requested is not None:
        return int(requested)
    env = os.environ.get(THREADS_ENV, "").strip()
    if not env:
        return 1
    try:
        n = int(env)
    except ValueError as exc:
        raise DomainError(f"{THREADS_ENV} must be an integer, got {env!r}") from exc
    if n < 1:
        raise DomainError(f"{THREADS_ENV} must be >= 1")
    return n


def parallel_map(fn: Callable[[T], R], items: Sequence[T], threads: int = 1) -> list[R]:
    """``[fn(x) for x in items]`` on up to ``threads`` workers, results in input order."""
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
