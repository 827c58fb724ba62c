#!/usr/bin/env python3
"""Regenerate the population-level constants frozen into the test suite.

For the standard normal and unit-scale Laplace distributions this script
finds every threshold v that reproduces itself through the conditional-mean
conditions used by the two-bit and ternary solvers,

    two-bit:  v = (E[|X| given |X| <= v] + E[|X| given |X| > v]) / 2
    ternary:  v =  E[|X| given |X| > v] / 2

using closed-form conditional means (error functions for the normal,
memoryless exponential tails for the Laplace) and bisection to 1e-13.  Each
root is scored by the population mean squared error of the induced
reconstruction so the global optimum is identified.  Standard library only;
run `python3 tools/population_roots.py` and compare against the constants
in tests/test_acceptance.py.
"""

import math

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
SQRT2 = math.sqrt(2.0)


# --- standard normal -------------------------------------------------------


def normal_lower_mean(v):
    den = math.erf(v / SQRT2)
    if den == 0.0:
        return 0.0
    return SQRT_2_OVER_PI * (-math.expm1(-0.5 * v * v)) / den


def normal_upper_mean(v):
    den = math.erfc(v / SQRT2)
    if den == 0.0:
        return v
    return SQRT_2_OVER_PI * math.exp(-0.5 * v * v) / den


def normal_mse(v1, v2):
    phi = math.exp(-0.5 * v1 * v1) / math.sqrt(2.0 * math.pi)
    m0l = math.erf(v1 / SQRT2)
    m1l = SQRT_2_OVER_PI * (-math.expm1(-0.5 * v1 * v1))
    m2l = m0l - 2.0 * v1 * phi
    m0h = math.erfc(v1 / SQRT2)
    m1h = SQRT_2_OVER_PI * math.exp(-0.5 * v1 * v1)
    m2h = m0h + 2.0 * v1 * phi
    lo, hi = v1 - v2, v1 + v2
    return (m2l - 2 * lo * m1l + lo * lo * m0l) + (m2h - 2 * hi * m1h + hi * hi * m0h)


# --- laplace, scale 1 (|X| is Exponential(1)) ------------------------------


def laplace_lower_mean(v):
    mass = -math.expm1(-v)
    if mass == 0.0:
        return 0.0
    return (mass - v * math.exp(-v)) / mass


def laplace_upper_mean(v):
    return v + 1.0


def laplace_mse(v1, v2):
    e = math.exp(-v1)
    m0l = 1.0 - e
    m1l = m0l - v1 * e
    m2l = 2.0 - e * (v1 * v1 + 2.0 * v1 + 2.0)
    m0h = e
    m1h = (v1 + 1.0) * e
    m2h = e * (v1 * v1 + 2.0 * v1 + 2.0)
    lo, hi = v1 - v2, v1 + v2
    return (m2l - 2 * lo * m1l + lo * lo * m0l) + (m2h - 2 * hi * m1h + hi * hi * m0h)


# --- root finding ----------------------------------------------------------


def bisect(g, lo, hi, iters=200):
    glo = g(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        gm = g(mid)
        if gm == 0.0:
            return mid
        if (gm > 0.0) == (glo > 0.0):
            lo, glo = mid, gm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def roots(g, v_max=8.0, steps=16000):
    found = []
    prev_v = v_max / steps
    prev_g = g(prev_v)
    for i in range(2, steps + 1):
        v = i * v_max / steps
        cur = g(v)
        if prev_g == 0.0:
            found.append(prev_v)
        elif prev_g * cur < 0.0:
            found.append(bisect(g, prev_v, v))
        prev_v, prev_g = v, cur
    return found


def report(name, lower, upper, mse):
    print(f"== {name} ==")

    def g2(v):
        return 0.5 * (lower(v) + upper(v)) - v

    best = None
    for v1 in roots(g2):
        v2 = 0.5 * (upper(v1) - lower(v1))
        e = mse(v1, v2)
        print(f"  two-bit root: v1={v1:.12f} v2={v2:.12f} mse={e:.12f}")
        if best is None or e < best[0]:
            best = (e, v1, v2)
    e, v1, v2 = best
    print(f"  two-bit GLOBAL: v1={v1:.12f} v2={v2:.12f} mse={e:.12f}")

    def gt(v):
        return 0.5 * upper(v) - v

    for v in roots(gt):
        print(f"  ternary root: v={v:.12f} mse={mse(v, v):.12f}")


if __name__ == "__main__":
    report("standard normal", normal_lower_mean, normal_upper_mean, normal_mse)
    report("laplace(1)", laplace_lower_mean, laplace_upper_mean, laplace_mse)
