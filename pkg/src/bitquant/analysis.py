"""Quantization quality analysis: angles, sweeps, and condition curves.

The angle between a vector and its reconstruction is the scale-free way to
compare quantizers; 1-bit quantization of large standard normal vectors
lands near 37.07 degrees, the analytic angle arccos(sqrt(2/pi)).

A *condition curve* traces, over a threshold v, the mean magnitude of the
lower group (entries <= v), of the upper group (entries > v), and their
average.  Where the average curve crosses the identity line the threshold
reproduces itself, which is exactly the fixed-point condition behind the
two-bit solver; the crossing whose split objective is smallest is the
optimal v_1.  Curves exist in two flavors: empirical from a sample, and
closed-form for the standard normal population (error function based).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .quantizers import (
    LloydQuantizer,
    _split_mse,
    objective,
    quantize_greedy,
    quantize_lloyd,
    quantize_ls1,
    quantize_ls2,
    quantize_ternary,
    reconstruct,
)
from .tensor import SyntheticSpec, as_float_vector, generate

_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class AngleMetric:
    """Angle between a vector and its reconstruction, in degrees."""

    degrees: float

    def __post_init__(self):
        if not 0.0 <= self.degrees <= 180.0:
            raise ValueError("angle must lie in [0, 180] degrees")


def angle(x, y) -> AngleMetric:
    """Angle between two vectors; raises ValueError on zero-norm input."""
    x = as_float_vector(x)
    y = as_float_vector(y)
    if x.size != y.size:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    nx = float(np.linalg.norm(x))
    ny = float(np.linalg.norm(y))
    if nx == 0.0 or ny == 0.0:
        raise ValueError("angle is undefined for a zero-norm vector")
    cosine = float(np.dot(x, y)) / (nx * ny)
    cosine = min(1.0, max(-1.0, cosine))
    return AngleMetric(degrees=math.degrees(math.acos(cosine)))


# ---------------------------------------------------------------------------
# Method tokens


def parse_method(token: str, ks=()) -> list[tuple[str, int]]:
    """Expand a method token into (family, bits) pairs.

    Fixed-width families are bare tokens (``ls1``, ``ls2``, ``ternary``).
    Variable-width families take a suffix (``greedy-3``, ``lloyd-2``) or,
    without one, expand over ``ks``.  ``gf`` is accepted as an alias for
    ``greedy``.
    """
    tok = token.strip().lower()
    fixed = {"ls1": 1, "ls2": 2, "ternary": 2}
    if tok in fixed:
        return [(tok, fixed[tok])]
    family = tok
    suffix = None
    if "-" in tok:
        family, _, tail = tok.partition("-")
        suffix = tail
    if family == "gf":
        family = "greedy"
    if family not in ("greedy", "lloyd"):
        raise ValueError(f"unknown method {token!r}")
    if suffix is not None:
        k = int(suffix)
        if k < 1:
            raise ValueError(f"bit width in {token!r} must be positive")
        return [(family, k)]
    if not ks:
        raise ValueError(f"method {token!r} needs a bit width (e.g. {token}-2)")
    return [(family, int(k)) for k in ks]


def _fit(family: str, k: int, x: np.ndarray):
    if family == "ls1":
        return quantize_ls1(x)
    if family == "ls2":
        return quantize_ls2(x)
    if family == "ternary":
        return quantize_ternary(x)
    if family == "greedy":
        return quantize_greedy(x, k)
    if family == "lloyd":
        return quantize_lloyd(x, k)
    raise ValueError(f"unknown method family {family!r}")


@dataclass(frozen=True)
class SweepRow:
    """One (method, data spec) cell of a sweep."""

    method: str
    k: int
    distribution: str
    n: int
    seed: int
    mse: float
    angle_degrees: float | None
    levels: tuple


@dataclass(frozen=True)
class SweepReport:
    """Sweep rows sorted by (method, k, distribution, n, seed), plus any
    per-row failures that were skipped."""

    rows: tuple
    failures: tuple = ()


def run_sweep(specs, methods, ks=()) -> SweepReport:
    """Quantize every generated spec with every method; collect quality rows.

    A row that fails to fit is recorded in ``failures`` and skipped rather
    than aborting the remaining grid.
    """
    expanded: list[tuple[str, int]] = []
    for token in methods:
        expanded.extend(parse_method(token, ks))
    rows = []
    failures = []
    for spec in specs:
        x = generate(spec)
        for family, k in expanded:
            try:
                q = _fit(family, k, x)
                mse = objective(x, q).mse
                recon = reconstruct(q)
                try:
                    deg = angle(x, recon).degrees
                except ValueError:
                    deg = None
                if isinstance(q, LloydQuantizer):
                    levels = tuple(float(c) for c in q.codebook)
                else:
                    levels = tuple(float(v) for v in q.levels)
                rows.append(
                    SweepRow(
                        method=family,
                        k=k,
                        distribution=spec.label(),
                        n=spec.n,
                        seed=spec.seed,
                        mse=mse,
                        angle_degrees=deg,
                        levels=levels,
                    )
                )
            except Exception as exc:  # noqa: BLE001 - row isolation is the contract
                failures.append(f"{family}-{k} on {spec.label()} (seed {spec.seed}): {exc}")
    rows.sort(key=lambda r: (r.method, r.k, r.distribution, r.n, r.seed))
    return SweepReport(rows=tuple(rows), failures=tuple(failures))


_CSV_HEADER = "method,k,distribution,n,seed,mse,angle_degrees,levels"


def emit_report(report: SweepReport, path, fmt: str = "csv") -> None:
    """Write a sweep report to ``path`` as CSV or JSON.

    Floats are rendered with %.17g, so a written value parses back to the
    same double.  The levels column joins values with semicolons.
    """
    token = fmt.lower()
    if token == "csv":
        lines = [_CSV_HEADER]
        for r in report.rows:
            angle_field = "" if r.angle_degrees is None else format(r.angle_degrees, ".17g")
            levels_field = ";".join(format(v, ".17g") for v in r.levels)
            lines.append(
                f"{r.method},{r.k},{r.distribution},{r.n},{r.seed},"
                f"{format(r.mse, '.17g')},{angle_field},{levels_field}"
            )
        Path(path).write_text("\n".join(lines) + "\n")
        return
    if token == "json":
        payload = {
            "rows": [
                {
                    "method": r.method,
                    "k": r.k,
                    "distribution": r.distribution,
                    "n": r.n,
                    "seed": r.seed,
                    "mse": r.mse,
                    "angle_degrees": r.angle_degrees,
                    "levels": list(r.levels),
                }
                for r in report.rows
            ]
        }
        Path(path).write_text(json.dumps(payload, indent=2) + "\n")
        return
    raise ValueError(f"unknown report format {fmt!r}")


# ---------------------------------------------------------------------------
# Condition curves


@dataclass(frozen=True)
class Intersection:
    """A self-reproducing threshold and the split objective it achieves."""

    v: float
    objective: float


@dataclass(frozen=True)
class ConditionCurve:
    """Sampled conditional-mean curves over a threshold grid.

    ``lower_mean`` is NaN where the lower group is empty; ``average`` treats
    an empty lower group as contributing zero, matching the two-bit solver's
    convention.  ``optimum`` is the intersection with the smallest
    objective, or NaN when no intersection was found.
    """

    v: np.ndarray
    lower_mean: np.ndarray
    upper_mean: np.ndarray
    average: np.ndarray
    intersections: tuple
    optimum: float


def _refine_and_collect(vs, d_vals, d_at, describe):
    """Locate sign changes of ``d_vals`` over the grid and refine each by
    bisection on ``d_at``; ``describe(v)`` yields the Intersection."""
    found = []
    for i in range(vs.size - 1):
        if d_vals[i] == 0.0:
            found.append(describe(float(vs[i])))
            continue
        if d_vals[i] * d_vals[i + 1] < 0.0:
            lo, hi = float(vs[i]), float(vs[i + 1])
            f_lo = d_at(lo)
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if mid == lo or mid == hi:
                    break
                f_mid = d_at(mid)
                if f_mid == 0.0:
                    lo = mid
                    break
                if (f_mid > 0.0) == (f_lo > 0.0):
                    lo, f_lo = mid, f_mid
                else:
                    hi = mid
            found.append(describe(lo))
    if d_vals[-1] == 0.0:
        found.append(describe(float(vs[-1])))
    return found


def _finish_curve(vs, lower, upper, average, intersections) -> ConditionCurve:
    if intersections:
        best = min(intersections, key=lambda s: (s.objective, s.v))
        optimum = best.v
    else:
        optimum = float("nan")
    for arr in (vs, lower, upper, average):
        arr.setflags(write=False)
    return ConditionCurve(
        v=vs,
        lower_mean=lower,
        upper_mean=upper,
        average=average,
        intersections=tuple(intersections),
        optimum=optimum,
    )


def condition_curve(x, grid: int) -> ConditionCurve:
    """Empirical condition curve of a sample over ``grid`` interior
    thresholds strictly between 0 and max |x|."""
    x = as_float_vector(x)
    if grid < 2:
        raise ValueError("grid must be at least 2")
    mags = np.sort(np.abs(x))
    n = mags.size
    if mags[-1] == 0.0:
        raise ValueError("condition curve is undefined for the zero vector")
    prefix = np.concatenate(([0.0], np.cumsum(mags)))
    suffix = np.concatenate((np.cumsum(mags[::-1])[::-1], [0.0]))

    def split_means(v: float) -> tuple[float, float]:
        i = int(np.searchsorted(mags, v, side="right"))
        lo = prefix[i] / i if i > 0 else 0.0
        hi = suffix[i] / (n - i)
        return lo, hi

    vs = np.linspace(0.0, float(mags[-1]), grid + 2)[1:-1]
    idx = np.searchsorted(mags, vs, side="right")
    lower_eff = np.divide(prefix[idx], idx, out=np.zeros(vs.size), where=idx > 0)
    upper = suffix[idx] / (n - idx)
    average = 0.5 * (lower_eff + upper)
    lower = np.where(idx > 0, lower_eff, np.nan)

    def d_at(v: float) -> float:
        lo, hi = split_means(v)
        return 0.5 * (lo + hi) - v

    def describe(v: float) -> Intersection:
        lo, hi = split_means(v)
        v1 = 0.5 * (lo + hi)
        v2 = 0.5 * (hi - lo)
        return Intersection(v=v, objective=_split_mse(mags, v1, v2))

    intersections = _refine_and_collect(vs, average - vs, d_at, describe)
    return _finish_curve(vs, lower, upper, average, intersections)


def _normal_lower_mean(v: float) -> float:
    if v <= 0.0:
        return 0.0
    den = math.erf(v / _SQRT2)
    if den == 0.0:
        return 0.0
    return _SQRT_2_OVER_PI * (-math.expm1(-0.5 * v * v)) / den


def _normal_upper_mean(v: float) -> float:
    if v <= 0.0:
        return _SQRT_2_OVER_PI
    den = math.erfc(v / _SQRT2)
    if den == 0.0:
        # Far tail; the conditional mean approaches v itself.
        return v
    return _SQRT_2_OVER_PI * math.exp(-0.5 * v * v) / den


def normal_split_mse(v1: float, v2: float) -> float:
    """Population mean squared error of the reconstruction levels
    {v1 - v2, v1 + v2} applied to |X|, X standard normal, split at v1."""
    phi = math.exp(-0.5 * v1 * v1) / math.sqrt(2.0 * math.pi)
    m0_lo = math.erf(v1 / _SQRT2)
    m1_lo = _SQRT_2_OVER_PI * (-math.expm1(-0.5 * v1 * v1))
    m2_lo = m0_lo - 2.0 * v1 * phi
    m0_hi = math.erfc(v1 / _SQRT2)
    m1_hi = _SQRT_2_OVER_PI * math.exp(-0.5 * v1 * v1)
    m2_hi = m0_hi + 2.0 * v1 * phi
    lo = v1 - v2
    hi = v1 + v2
    return (
        m2_lo - 2.0 * lo * m1_lo + lo * lo * m0_lo
        + m2_hi - 2.0 * hi * m1_hi + hi * hi * m0_hi
    )


def normal_condition_curve(grid: int, v_max: float = 4.0) -> ConditionCurve:
    """Closed-form condition curve for the standard normal population over
    ``grid`` thresholds in (0, v_max]."""
    if grid < 2:
        raise ValueError("grid must be at least 2")
    if not v_max > 0:
        raise ValueError("v_max must be positive")
    vs = np.linspace(0.0, v_max, grid + 1)[1:]
    lower = np.array([_normal_lower_mean(v) for v in vs])
    upper = np.array([_normal_upper_mean(v) for v in vs])
    average = 0.5 * (lower + upper)

    def d_at(v: float) -> float:
        return 0.5 * (_normal_lower_mean(v) + _normal_upper_mean(v)) - v

    def describe(v: float) -> Intersection:
        lo = _normal_lower_mean(v)
        hi = _normal_upper_mean(v)
        return Intersection(
            v=v, objective=normal_split_mse(0.5 * (lo + hi), 0.5 * (hi - lo))
        )

    intersections = _refine_and_collect(vs, average - vs, d_at, describe)
    return _finish_curve(vs, lower.copy(), upper, average, intersections)
