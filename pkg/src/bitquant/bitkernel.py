"""Bit-packed sign planes and XNor/popcount dot products.

A sign plane of n entries packs into ceil(n / 64) little-endian 64-bit
words: +1 becomes a set bit, -1 a clear bit, element j living at bit
j mod 64 of word j div 64.  Padding bits beyond n are kept at zero.

The inner product of two +-1 planes then reduces to bit arithmetic: XNOR
marks positions where the planes agree, so

    dot(a, b) = 2 * popcount(xnor(a, b) restricted to n bits) - n

which is exact integer arithmetic.  A k_a-bit by k_w-bit quantized dot
product expands into the k_a * k_w plane dot products, combined with the
level products in float64.  Popcounts use numpy's native bitwise_count.

The BQT1 container serializes a quantized vector: magic ``BQT1``, plane
count as a 32-bit unsigned integer, element count as a 64-bit unsigned
integer, the levels as float64, then each plane's packed words.  All fields
little-endian.
"""

from __future__ import annotations

import struct
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DimensionOverflowError,
    MalformedHeaderError,
    NonFiniteValueError,
)
from .quantizers import ScaledBinaryQuantization
from .rng import SplitMix64

WORD_BITS = 64
_BQT_MAGIC = b"BQT1"
_MAX_ELEMENTS = 1 << 40
_MAX_PLANES = 64


def _n_words(n_bits: int) -> int:
    return (n_bits + WORD_BITS - 1) // WORD_BITS


def _tail_mask(n_bits: int) -> np.uint64:
    """All-ones mask for the occupied bits of the final word."""
    used = n_bits % WORD_BITS
    if used == 0:
        return np.uint64(0xFFFFFFFFFFFFFFFF)
    return np.uint64((1 << used) - 1)


@dataclass(frozen=True)
class BitPlane:
    """A +-1 plane packed into little-endian uint64 words."""

    words: np.ndarray
    n_bits: int

    def __post_init__(self):
        words = np.ascontiguousarray(self.words, dtype=np.uint64)
        if self.n_bits < 1:
            raise ValueError("a plane needs at least one bit")
        if words.ndim != 1 or words.size != _n_words(self.n_bits):
            raise ValueError(
                f"expected {_n_words(self.n_bits)} words for {self.n_bits} bits"
            )
        if words[-1] & ~_tail_mask(self.n_bits):
            raise ValueError("padding bits beyond n_bits must be zero")
        words.setflags(write=False)
        object.__setattr__(self, "words", words)


def pack(plane) -> BitPlane:
    """Pack a +-1 vector into a :class:`BitPlane`."""
    arr = np.asarray(plane)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError("expected a nonempty 1-D sign vector")
    if not np.all((arr == 1) | (arr == -1)):
        raise ValueError("plane entries must be +1 or -1")
    bits = (arr > 0).astype(np.uint8)
    padded = np.zeros(_n_words(arr.size) * WORD_BITS, dtype=np.uint8)
    padded[: arr.size] = bits
    packed = np.packbits(padded, bitorder="little")
    return BitPlane(words=packed.view(np.dtype("<u8")), n_bits=int(arr.size))


def unpack(bp: BitPlane) -> np.ndarray:
    """Recover the +-1 int8 vector from a packed plane."""
    as_bytes = bp.words.astype("<u8", copy=False).view(np.uint8)
    bits = np.unpackbits(as_bytes, bitorder="little")[: bp.n_bits]
    return (2 * bits.astype(np.int8) - 1).astype(np.int8)


def popcount_words(words: np.ndarray) -> int:
    """Total set bits across a uint64 array."""
    return int(np.bitwise_count(words).sum(dtype=np.int64))


def plane_dot(a: BitPlane, b: BitPlane) -> int:
    """Exact inner product of two +-1 planes via XNOR and popcount."""
    if a.n_bits != b.n_bits:
        raise ValueError(f"length mismatch: {a.n_bits} vs {b.n_bits}")
    agree = ~(a.words ^ b.words)
    agree[-1] &= _tail_mask(a.n_bits)
    return 2 * popcount_words(agree) - a.n_bits


@dataclass(frozen=True)
class PackedQuantizedVector:
    """Quantization levels plus bit-packed sign planes."""

    levels: np.ndarray
    planes: tuple

    def __post_init__(self):
        levels = np.ascontiguousarray(self.levels, dtype=np.float64)
        planes = tuple(self.planes)
        if levels.ndim != 1 or levels.size != len(planes) or not planes:
            raise ValueError("need one level per plane, at least one plane")
        if not np.all(np.isfinite(levels)) or np.any(levels < 0):
            raise ValueError("levels must be finite and nonnegative")
        widths = {p.n_bits for p in planes}
        if len(widths) != 1:
            raise ValueError("all planes must cover the same elements")
        levels.setflags(write=False)
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "planes", planes)

    @property
    def k(self) -> int:
        return int(self.levels.size)

    @property
    def n(self) -> int:
        return int(self.planes[0].n_bits)


def pack_quantization(q: ScaledBinaryQuantization) -> PackedQuantizedVector:
    """Bit-pack the planes of a scaled binary quantization."""
    return PackedQuantizedVector(
        levels=q.levels, planes=tuple(pack(row) for row in q.planes)
    )


def unpack_quantization(pq: PackedQuantizedVector) -> np.ndarray:
    """Reconstruct the float64 vector sum(level_i * plane_i)."""
    out = np.zeros(pq.n, dtype=np.float64)
    for level, plane in zip(pq.levels, pq.planes):
        out += level * unpack(plane).astype(np.float64)
    return out


@dataclass(frozen=True)
class QuantizedDotResult:
    """Value and the integer plane-product table behind it."""

    value: float
    cross_terms: np.ndarray


def quantized_dot(a: PackedQuantizedVector, b: PackedQuantizedVector) -> QuantizedDotResult:
    """Dot product of two quantized vectors without dequantizing.

    ``cross_terms[i, j]`` is the exact integer product of plane i of ``a``
    with plane j of ``b``; the value accumulates level_a[i] * level_b[j] *
    cross_terms[i, j] in float64, summed in row-major order.
    """
    if a.n != b.n:
        raise ValueError(f"length mismatch: {a.n} vs {b.n}")
    cross = np.empty((a.k, b.k), dtype=np.int64)
    for i, pa in enumerate(a.planes):
        for j, pb in enumerate(b.planes):
            cross[i, j] = plane_dot(pa, pb)
    value = float(np.sum(a.levels[:, None] * b.levels[None, :] * cross))
    return QuantizedDotResult(value=value, cross_terms=cross)


def quantized_matmul(rows, cols) -> np.ndarray:
    """Matrix product of quantized row vectors against quantized columns.

    Entry (i, j) equals ``quantized_dot(rows[i], cols[j]).value`` exactly;
    the plane products are batched over columns per row for speed, then each
    entry's value is combined with the same float64 expression the scalar
    path uses.
    """
    rows = list(rows)
    cols = list(cols)
    if not rows or not cols:
        raise ValueError("need at least one row and one column")
    n = rows[0].n
    ka = rows[0].k
    kw = cols[0].k
    if any(r.n != n or r.k != ka for r in rows):
        raise ValueError("rows must share element count and plane count")
    if any(c.n != n or c.k != kw for c in cols):
        raise ValueError("columns must share element count and plane count")
    n_words = _n_words(n)
    mask = _tail_mask(n)
    col_words = np.empty((len(cols), kw, n_words), dtype=np.uint64)
    col_levels = np.empty((len(cols), kw), dtype=np.float64)
    for j, c in enumerate(cols):
        col_levels[j] = c.levels
        for w, plane in enumerate(c.planes):
            col_words[j, w] = plane.words
    out = np.empty((len(rows), len(cols)), dtype=np.float64)
    for i, r in enumerate(rows):
        row_words = np.stack([p.words for p in r.planes])
        agree = ~(row_words[:, None, None, :] ^ col_words[None, :, :, :])
        agree[..., -1] &= mask
        counts = np.bitwise_count(agree).sum(axis=-1, dtype=np.int64)
        cross = 2 * counts - n  # (ka, n_cols, kw)
        for j in range(len(cols)):
            out[i, j] = float(
                np.sum(r.levels[:, None] * col_levels[j][None, :] * cross[:, j, :])
            )
    return out


def kernel_bench(n: int, ka: int, kw: int, repetitions: int = 200) -> dict:
    """Time the packed dot product against its float dequantized twin.

    ``n`` must be a positive multiple of 64 so both paths run on whole
    words.  Returns a JSON-ready summary with per-operation nanoseconds.
    """
    if n < 1 or n % WORD_BITS != 0:
        raise ValueError("n must be a positive multiple of 64")
    if ka < 1 or kw < 1:
        raise ValueError("plane counts must be positive")
    if repetitions < 1:
        raise ValueError("repetitions must be positive")
    rng = SplitMix64(n * 1000003 + ka * 1009 + kw)
    def random_packed(k):
        levels = np.sort(rng.uniform_open01(k))[::-1]
        planes = tuple(pack(rng.signs(n)) for _ in range(k))
        return PackedQuantizedVector(levels=levels, planes=planes)

    a = random_packed(ka)
    b = random_packed(kw)
    xf = unpack_quantization(a)
    wf = unpack_quantization(b)

    start = time.perf_counter_ns()
    for _ in range(repetitions):
        quantized_dot(a, b)
    packed_ns = (time.perf_counter_ns() - start) / repetitions

    start = time.perf_counter_ns()
    for _ in range(repetitions):
        float(np.dot(xf, wf))
    float_ns = (time.perf_counter_ns() - start) / repetitions

    return {
        "n": n,
        "ka": ka,
        "kw": kw,
        "packed_ns_per_op": packed_ns,
        "float_ns_per_op": float_ns,
        "speedup": float_ns / packed_ns if packed_ns > 0 else float("inf"),
    }


# ---------------------------------------------------------------------------
# BQT1 serialization


def save_packed(pq: PackedQuantizedVector, path) -> None:
    """Write a packed quantized vector to ``path`` in BQT1 format."""
    header = struct.pack("<4sIQ", _BQT_MAGIC, pq.k, pq.n)
    body = pq.levels.astype("<f8").tobytes()
    for plane in pq.planes:
        body += plane.words.astype("<u8").tobytes()
    Path(path).write_bytes(header + body)


def load_packed(path) -> PackedQuantizedVector:
    """Read a BQT1 file back into a :class:`PackedQuantizedVector`."""
    blob = Path(path).read_bytes()
    if len(blob) < 16 or blob[:4] != _BQT_MAGIC:
        raise MalformedHeaderError(f"{path}: not a BQT1 file (bad magic)")
    k, n = struct.unpack_from("<IQ", blob, 4)
    if k < 1 or k > _MAX_PLANES:
        raise MalformedHeaderError(f"{path}: implausible plane count {k}")
    if n < 1 or n > _MAX_ELEMENTS:
        raise DimensionOverflowError(f"{path}: implausible element count {n}")
    n_words = _n_words(n)
    expected = 16 + 8 * k + 8 * k * n_words
    if len(blob) < expected:
        raise DimensionOverflowError(
            f"{path}: header promises {expected} bytes, file has {len(blob)}"
        )
    if len(blob) > expected:
        raise MalformedHeaderError(f"{path}: {len(blob) - expected} trailing bytes")
    levels = np.frombuffer(blob, dtype="<f8", count=k, offset=16).copy()
    if not np.all(np.isfinite(levels)) or np.any(levels < 0):
        raise NonFiniteValueError(f"{path}: levels must be finite and nonnegative")
    planes = []
    offset = 16 + 8 * k
    for i in range(k):
        words = np.frombuffer(blob, dtype="<u8", count=n_words, offset=offset).copy()
        if words[-1] & ~_tail_mask(n):
            raise MalformedHeaderError(f"{path}: plane {i} has nonzero padding bits")
        planes.append(BitPlane(words=words, n_bits=int(n)))
        offset += 8 * n_words
    return PackedQuantizedVector(levels=levels, planes=tuple(planes))
