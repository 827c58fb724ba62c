"""Scaled binary quantizers.

A k-bit scaled binary quantization approximates a vector x by

    x  ~=  v_1 * s_1 + v_2 * s_2 + ... + v_k * s_k

where each level v_i is a nonnegative scalar and each plane s_i is a vector
of +-1 signs.  The quantizers here pick levels and planes to minimize mean
squared reconstruction error, each under its own structural constraint:

* ``quantize_ls1``: one bit; v = mean |x|, s = sign(x).  This is the error
  minimizer over all single-plane quantizations.
* ``quantize_ls2``: two bits restricted to foldable plane pairs, solved to
  global optimality by scanning cut positions of the sorted magnitudes.
* ``quantize_ternary``: two bits with tied levels v_1 = v_2 = v, so the
  reconstruction values are {-2v, 0, +2v}.
* ``quantize_greedy``: any k; fits one plane at a time to the running
  residual.  For k = 1 it coincides bit-for-bit with ``quantize_ls1``.
* ``quantize_lloyd``: an unconstrained 2^k-codeword scalar quantizer fitted
  by alternating assignment and recentering; a reference point rather than
  a scaled binary form.  ``lloyd_to_scaled_binary`` projects its result
  back into the k-plane representation.

Conventions used throughout (and relied on by exact tests):

* sign(0) = +1.
* A plane pair is *foldable* when s_i = sign(x - partial reconstruction of
  planes before i); equivalently each element is assigned to the nearest
  reconstruction value, with boundary ties going to the larger one.
* Group means over magnitudes are numpy reductions (pairwise summation) on
  ascending-sorted slices, in float64.  The fixed-point scans split sorted
  magnitudes into a lower group (<= v) and an upper group (> v).
* Candidate ties are broken by exact float comparison on the pair
  (objective, v_1), smaller first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import as_float_vector

_METHODS = ("ls1", "ls2", "ternary", "greedy", "lloyd")
# Methods whose constructors guarantee nonincreasing levels.  Greedy keeps
# its levels in generation order, which residual fitting does not sort.
_ORDERED_METHODS = ("ls1", "ls2", "ternary", "lloyd")

_EPS = np.finfo(np.float64).eps


def sign(values):
    """Sign with sign(0) = +1; +-1 as int8, matching the input shape."""
    arr = np.asarray(values)
    out = np.where(arr < 0, -1, 1).astype(np.int8)
    if arr.ndim == 0:
        return int(out[()])
    return out


@dataclass(frozen=True)
class ScaledBinaryQuantization:
    """Levels and sign planes of a k-bit scaled binary quantization.

    ``levels`` is a (k,) float64 array of nonnegative scalars and ``planes``
    a (k, n) int8 array of +-1 entries.  For every method except ``greedy``
    the levels are nonincreasing, and for ``ternary`` the two levels are
    equal.
    """

    levels: np.ndarray
    planes: np.ndarray
    method: str

    def __post_init__(self):
        levels = np.ascontiguousarray(self.levels, dtype=np.float64)
        planes = np.ascontiguousarray(self.planes, dtype=np.int8)
        if levels.ndim != 1 or levels.size < 1:
            raise ValueError("levels must be a nonempty 1-D array")
        if not np.all(np.isfinite(levels)) or np.any(levels < 0):
            raise ValueError("levels must be finite and nonnegative")
        if planes.ndim != 2 or planes.shape[0] != levels.size or planes.shape[1] < 1:
            raise ValueError("planes must have shape (len(levels), n)")
        if not np.all(np.abs(planes) == 1):
            raise ValueError("plane entries must be +1 or -1")
        if self.method not in _METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.method in _ORDERED_METHODS and np.any(np.diff(levels) > 0):
            raise ValueError(f"{self.method} levels must be nonincreasing")
        if self.method == "ternary":
            if levels.size != 2 or levels[0] != levels[1]:
                raise ValueError("ternary requires two equal levels")
        levels.setflags(write=False)
        planes.setflags(write=False)
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "planes", planes)

    @property
    def k(self) -> int:
        return int(self.levels.size)

    @property
    def n(self) -> int:
        return int(self.planes.shape[1])


@dataclass(frozen=True)
class LloydQuantizer:
    """A fitted 2^k-codeword scalar quantizer.

    ``codebook`` holds the codewords sorted ascending, ``thresholds`` the
    midpoints between adjacent codewords (assignment boundaries, ties going
    up), and ``codes`` the per-element codeword indices under the final
    codebook.
    """

    codebook: np.ndarray
    thresholds: np.ndarray
    codes: np.ndarray
    iterations: int
    converged: bool

    def __post_init__(self):
        codebook = np.ascontiguousarray(self.codebook, dtype=np.float64)
        thresholds = np.ascontiguousarray(self.thresholds, dtype=np.float64)
        codes = np.ascontiguousarray(self.codes, dtype=np.int64)
        if codebook.ndim != 1 or codebook.size < 2:
            raise ValueError("codebook must hold at least two codewords")
        if np.any(np.diff(codebook) < 0):
            raise ValueError("codebook must be sorted ascending")
        if thresholds.shape != (codebook.size - 1,):
            raise ValueError("need one threshold between each codeword pair")
        if codes.ndim != 1 or codes.size < 1:
            raise ValueError("codes must be a nonempty 1-D array")
        if np.any(codes < 0) or np.any(codes >= codebook.size):
            raise ValueError("codes must index the codebook")
        for arr in (codebook, thresholds, codes):
            arr.setflags(write=False)
        object.__setattr__(self, "codebook", codebook)
        object.__setattr__(self, "thresholds", thresholds)
        object.__setattr__(self, "codes", codes)

    @property
    def n(self) -> int:
        return int(self.codes.size)


@dataclass(frozen=True)
class QuantizationObjective:
    """Mean squared reconstruction error of a quantization."""

    mse: float


def reconstruct(q) -> np.ndarray:
    """Dequantize back to a float64 vector."""
    if isinstance(q, ScaledBinaryQuantization):
        return q.levels @ q.planes.astype(np.float64)
    if isinstance(q, LloydQuantizer):
        return q.codebook[q.codes]
    raise TypeError(f"cannot reconstruct from {type(q).__name__}")


def objective(x, q) -> QuantizationObjective:
    """Mean squared error between x and the reconstruction of ``q``."""
    x = as_float_vector(x)
    recon = reconstruct(q)
    if recon.size != x.size:
        raise ValueError(f"length mismatch: {x.size} vs {recon.size}")
    diff = x - recon
    return QuantizationObjective(mse=float(np.mean(diff * diff)))


def foldable_planes(x, levels) -> np.ndarray:
    """Planes obtained by folding: s_i = sign(x minus the partial sum of
    earlier planes).  Returns a (k, n) int8 array."""
    x = as_float_vector(x)
    levels = np.asarray(levels, dtype=np.float64)
    planes = np.empty((levels.size, x.size), dtype=np.int8)
    residual = x
    for i, v in enumerate(levels):
        planes[i] = sign(residual)
        residual = residual - v * planes[i].astype(np.float64)
    return planes


def is_foldable(x, q: ScaledBinaryQuantization) -> bool:
    """True when every plane of ``q`` equals the folded sign of ``x``."""
    x = as_float_vector(x)
    if q.n != x.size:
        raise ValueError(f"length mismatch: {x.size} vs {q.n}")
    return bool(np.array_equal(foldable_planes(x, q.levels), q.planes))


def _mean_abs(x: np.ndarray) -> float:
    """Mean magnitude; the shared primitive of the 1-bit and greedy fits."""
    return float(np.mean(np.abs(x)))


def quantize_ls1(x) -> ScaledBinaryQuantization:
    """Least squares 1-bit quantization: v = mean |x|, s = sign(x)."""
    x = as_float_vector(x)
    return ScaledBinaryQuantization(
        levels=np.array([_mean_abs(x)]),
        planes=sign(x)[None, :],
        method="ls1",
    )


def quantize_greedy(x, k: int) -> ScaledBinaryQuantization:
    """Greedy k-bit quantization by repeated 1-bit fits to the residual.

    Levels are reported in generation order.  Every prefix of the planes is
    foldable by construction, and k = 1 reproduces ``quantize_ls1`` exactly.
    """
    x = as_float_vector(x)
    if k < 1:
        raise ValueError("k must be at least 1")
    levels = np.empty(k, dtype=np.float64)
    planes = np.empty((k, x.size), dtype=np.int8)
    residual = x
    for i in range(k):
        levels[i] = _mean_abs(residual)
        planes[i] = sign(residual)
        residual = residual - levels[i] * planes[i].astype(np.float64)
    return ScaledBinaryQuantization(levels=levels, planes=planes, method="greedy")


# ---------------------------------------------------------------------------
# Fixed-point scans over sorted magnitudes
#
# Both the two-bit and the ternary solvers reduce to a 1-D problem on the
# sorted magnitudes a_0 <= ... <= a_{n-1}: choose a cut t so that the lower
# group a[:t] and upper group a[t:] are self-consistent with the level
# derived from their means.  The candidate level for cut t is
#
#     ls2:      (m_lo + m_hi) / 2      (m_lo = 0 when the lower group is empty)
#     ternary:  m_hi / 2
#
# and cut t is accepted when a[t-1] <= level < a[t], i.e. the upper group is
# exactly the set of magnitudes strictly above the level.  A monotonicity
# argument (the candidate is nondecreasing in t while the interval edges
# sweep the data) guarantees at least one accepted cut for any vector that
# is not identically zero.
#
# The scan screens all cuts with O(n) cumulative sums, then recomputes the
# means of accepted cuts with numpy's pairwise reduction on the sorted
# slices so that the published level satisfies its defining condition in
# exact float arithmetic.  Suffix sums use a reversed cumulative sum; the
# forward-difference form loses all precision for short upper groups.


def _conditional_mean_roots(mags: np.ndarray, with_lower: bool):
    """Self-consistent cuts of the sorted magnitude array.

    Returns a list of ``(t, m_lo, m_hi)`` tuples where the group means are
    exact slice means and the derived level lies in ``[a[t-1], a[t])``.
    """
    n = mags.size
    t = np.arange(n)
    prefix = np.concatenate(([0.0], np.cumsum(mags[:-1])))
    suffix = np.cumsum(mags[::-1])[::-1]
    m_hi = suffix / (n - t)
    m_lo = np.divide(prefix, t, out=np.zeros(n), where=t > 0)
    cand = 0.5 * (m_lo + m_hi) if with_lower else 0.5 * m_hi
    lo_edge = np.concatenate(([-np.inf], mags[:-1]))

    def exact_accepts(cuts):
        accepted = []
        for ti in cuts:
            m_lo_e = float(np.mean(mags[:ti])) if ti > 0 else 0.0
            m_hi_e = float(np.mean(mags[ti:]))
            v = 0.5 * (m_lo_e + m_hi_e) if with_lower else 0.5 * m_hi_e
            if (ti == 0 or mags[ti - 1] <= v) and v < mags[ti]:
                accepted.append((int(ti), m_lo_e, m_hi_e))
        return accepted

    strict = (cand >= lo_edge) & (cand < mags)
    cuts = np.nonzero(strict)[0]
    if cuts.size > 512:
        # Pathological inputs can make very many cuts self-consistent; rank
        # by the screening objective and keep the best before the exact pass.
        sq = mags * mags
        sq_prefix = np.concatenate(([0.0], np.cumsum(sq[:-1])))
        sq_suffix = np.cumsum(sq[::-1])[::-1]
        if with_lower:
            sse = (sq_prefix - t * m_lo**2) + (sq_suffix - (n - t) * m_hi**2)
        else:
            sse = sq_prefix + (sq_suffix - (n - t) * m_hi**2)
        cuts = cuts[np.argsort(sse[cuts], kind="stable")[:512]]
    roots = exact_accepts(cuts)
    if not roots:
        # The screening candidates carry O(n * eps) rounding; when an exact
        # root sits within that distance of a group edge the strict screen
        # can miss it.  Retry with widened intervals.
        tol = 32.0 * n * _EPS * np.maximum(cand, mags[-1] * _EPS)
        near = (cand >= lo_edge - tol) & (cand < mags + tol) & ~strict
        roots = exact_accepts(np.nonzero(near)[0][:1024])
    return roots


def _split_mse(mags: np.ndarray, v1: float, v2: float) -> float:
    """Mean squared error of the reconstruction {v1 - v2, v1 + v2} applied
    to sorted magnitudes with the realized assignment (ties upward)."""
    cut = int(np.searchsorted(mags, v1, side="left"))
    low = mags[:cut] - (v1 - v2)
    high = mags[cut:] - (v1 + v2)
    return (float(np.sum(low * low)) + float(np.sum(high * high))) / mags.size


def _zero_quantization(n: int, k: int, method: str) -> ScaledBinaryQuantization:
    return ScaledBinaryQuantization(
        levels=np.zeros(k),
        planes=np.ones((k, n), dtype=np.int8),
        method=method,
    )


def _best_ternary_level(mags: np.ndarray) -> float:
    """Level minimizing the ternary objective among the exact fixed points
    of v = mean(upper group) / 2; ties broken toward the smaller level."""
    roots = _conditional_mean_roots(mags, with_lower=False)
    assert roots, "a not-identically-zero vector always admits a fixed point"
    best = None
    for _, _, m_hi in roots:
        v = 0.5 * m_hi
        key = (_split_mse(mags, v, v), v)
        if best is None or key < best[0]:
            best = (key, v)
    return best[1]


def quantize_ternary(x) -> ScaledBinaryQuantization:
    """Least squares ternary quantization onto {-2v, 0, +2v}.

    The returned level satisfies v = mean(magnitudes strictly above v) / 2
    exactly, with the mean taken as a numpy reduction over the ascending
    sorted magnitude slice.
    """
    x = as_float_vector(x)
    mags = np.sort(np.abs(x))
    if mags[-1] == 0.0:
        return _zero_quantization(x.size, 2, "ternary")
    v = _best_ternary_level(mags)
    levels = np.array([v, v])
    return ScaledBinaryQuantization(
        levels=levels, planes=foldable_planes(x, levels), method="ternary"
    )


def quantize_ls2(x) -> ScaledBinaryQuantization:
    """Globally optimal foldable 2-bit quantization.

    Candidates are the fixed points of v_1 = (lower mean + upper mean) / 2
    over sorted-magnitude cuts, plus the two boundary solutions where a
    level degenerates: v_2 = 0 (the 1-bit fit) and v_1 = v_2 (the ternary
    fit).  The candidate with the smallest mean squared error wins; ties go
    to the smaller v_1.
    """
    x = as_float_vector(x)
    mags = np.sort(np.abs(x))
    if mags[-1] == 0.0:
        return _zero_quantization(x.size, 2, "ls2")
    candidates = []
    for _, m_lo, m_hi in _conditional_mean_roots(mags, with_lower=True):
        candidates.append((0.5 * (m_lo + m_hi), 0.5 * (m_hi - m_lo)))
    candidates.append((float(np.mean(mags)), 0.0))
    v_ternary = _best_ternary_level(mags)
    candidates.append((v_ternary, v_ternary))
    best = None
    for v1, v2 in candidates:
        key = (_split_mse(mags, v1, v2), v1)
        if best is None or key < best[0]:
            best = (key, (v1, v2))
    v1, v2 = best[1]
    levels = np.array([v1, v2])
    return ScaledBinaryQuantization(
        levels=levels, planes=foldable_planes(x, levels), method="ls2"
    )


# ---------------------------------------------------------------------------
# Lloyd reference quantizer


def quantize_lloyd(x, k: int, max_iters: int = 500, tol: float = 1e-10) -> LloydQuantizer:
    """Fit a 2^k-codeword scalar quantizer by alternating nearest-codeword
    assignment and codeword recentering.

    The codebook starts at the evenly spaced sample quantiles
    (i + 0.5) / 2^k, falling back to an evenly spaced ramp over the data
    range when those are not strictly increasing (for constant data the
    ramp spans [lo, lo + max(1, |lo|)]).  A codeword that loses all its
    members is reseeded at the datum with the largest reconstruction error,
    unless that error is already zero.  Iteration stops when the largest
    codeword movement falls below ``tol`` relative to the codebook
    magnitude.
    """
    x = as_float_vector(x)
    if not 1 <= k <= 16:
        raise ValueError("k must be between 1 and 16")
    if max_iters < 1:
        raise ValueError("max_iters must be positive")
    n_codes = 2**k
    codebook = np.quantile(x, (np.arange(n_codes) + 0.5) / n_codes)
    if np.any(np.diff(codebook) <= 0):
        lo = float(np.min(x))
        hi = float(np.max(x))
        if lo == hi:
            hi = lo + max(1.0, abs(lo))
        codebook = np.linspace(lo, hi, n_codes)

    converged = False
    iterations = 0
    for _ in range(max_iters):
        iterations += 1
        thresholds = 0.5 * (codebook[:-1] + codebook[1:])
        codes = np.searchsorted(thresholds, x, side="right")
        counts = np.bincount(codes, minlength=n_codes)
        sums = np.bincount(codes, weights=x, minlength=n_codes)
        new_codebook = codebook.copy()
        occupied = counts > 0
        new_codebook[occupied] = sums[occupied] / counts[occupied]
        for empty in np.nonzero(~occupied)[0]:
            errors = np.abs(x - new_codebook[codes])
            worst = int(np.argmax(errors))
            if errors[worst] == 0.0:
                break
            new_codebook[empty] = x[worst]
            codes[worst] = empty
        new_codebook = np.sort(new_codebook)
        movement = float(np.max(np.abs(new_codebook - codebook)))
        scale = max(float(np.max(np.abs(codebook))), 1e-30)
        codebook = new_codebook
        if movement <= tol * scale:
            converged = True
            break

    thresholds = 0.5 * (codebook[:-1] + codebook[1:])
    codes = np.searchsorted(thresholds, x, side="right")
    return LloydQuantizer(
        codebook=codebook,
        thresholds=thresholds,
        codes=codes,
        iterations=iterations,
        converged=converged,
    )


def lloyd_to_scaled_binary(lq: LloydQuantizer) -> ScaledBinaryQuantization:
    """Project a fitted Lloyd quantizer onto k sign planes.

    Each codeword index is written in binary; bit j of the index yields
    plane j (bit 0 -> -1, bit 1 -> +1).  The k levels are then the least
    squares fit of the codeword values to these sign patterns, weighted by
    cluster occupancy.  Negative fitted levels are folded into their plane
    by flipping its signs, and levels are sorted nonincreasing.

    The result is generally not foldable and its error is at least the
    Lloyd error; it exists so Lloyd reference fits can travel through the
    packed scaled-binary pipeline.
    """
    n_codes = lq.codebook.size
    k = int(np.log2(n_codes))
    if 2**k != n_codes:
        raise ValueError("codebook size must be a power of two")
    indices = np.arange(n_codes)
    digits = (indices[:, None] >> np.arange(k)[None, :]) & 1
    design = (2.0 * digits - 1.0).astype(np.float64)
    weights = np.sqrt(np.bincount(lq.codes, minlength=n_codes).astype(np.float64))
    levels, *_ = np.linalg.lstsq(
        design * weights[:, None], lq.codebook * weights, rcond=None
    )
    planes = (2 * ((lq.codes[None, :] >> np.arange(k)[:, None]) & 1) - 1).astype(np.int8)
    negative = levels < 0
    levels = np.abs(levels)
    planes[negative] *= -1
    order = np.argsort(-levels, kind="stable")
    return ScaledBinaryQuantization(
        levels=levels[order], planes=planes[order], method="lloyd"
    )
