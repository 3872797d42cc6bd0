"""
Walsh-Fourier analysis of +-1 valued functions on Q_d.

A function is a length ``2**d`` array of +1/-1 indexed by vertex; a spectrum
is a length ``2**d`` float array indexed by the subset bitmask ``S``.  All
normalizations use the uniform measure, so Parseval reads ``sum(c**2) == 1``.
Batched helpers take 2-D arrays with one function per row.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import CubeError, bits_to_hex, popcount

ALPHA = math.sqrt(1.0 - 2.0 / math.pi)


@dataclass(frozen=True, eq=False)
class BooleanFunctionTable:
    d: int
    values: np.ndarray  # int8, entries +1/-1

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.int8)
        if vals.shape != (1 << self.d,):
            raise CubeError(f"expected {1 << self.d} values, got {vals.shape}")
        if not np.all(np.abs(vals) == 1):
            raise CubeError("values must be +1 or -1")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_code(cls, d: int, code: int) -> "BooleanFunctionTable":
        """Bit v of ``code`` set means f(v) = -1."""
        return cls(d, [1 - 2 * ((code >> v) & 1) for v in range(1 << d)])


def _values(f) -> np.ndarray:
    return f.values if isinstance(f, BooleanFunctionTable) else np.asarray(f)


def _dim(n: int) -> int:
    d = n.bit_length() - 1
    if n < 1 or 1 << d != n:
        raise CubeError(f"table length {n} is not a power of two")
    return d


def hadamard(x: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard butterfly along the last axis.

    Integer input stays integer, so ``hadamard`` of a +-1 table is exact.
    """
    x = np.array(x, copy=True)
    n = x.shape[-1]
    _dim(n)
    lead = x.shape[:-1]
    h = 1
    while h < n:
        y = x.reshape(*lead, n // (2 * h), 2, h)
        a = y[..., 0, :].copy()
        y[..., 0, :] += y[..., 1, :]
        y[..., 1, :] = a - y[..., 1, :]
        h *= 2
    return x


def walsh_transform(f) -> np.ndarray:
    """coeff(S) = 2^-d * sum_v f(v) * (-1)^{|S & v|}."""
    vals = _values(f)
    return hadamard(vals.astype(np.float64)) / vals.shape[-1]


def inverse_walsh(coeffs: np.ndarray) -> np.ndarray:
    return hadamard(np.asarray(coeffs, dtype=np.float64))


def subset_sizes(d: int) -> np.ndarray:
    return popcount(np.arange(1 << d))


def total_influence(f) -> float:
    vals = _values(f)
    c = walsh_transform(vals)
    return float(np.sum(subset_sizes(_dim(vals.shape[-1])) * c * c, axis=-1))


def pivotal_influence(f) -> float:
    """Sum over coordinates of Pr[f(x) != f(x with that coordinate flipped)]."""
    vals = _values(f)
    n = vals.shape[-1]
    idx = np.arange(n)
    flips = sum(np.count_nonzero(vals != vals[..., idx ^ (1 << b)], axis=-1) for b in range(_dim(n)))
    return flips / n


def inner_product(f, g) -> float:
    return float(np.mean(_values(f).astype(np.float64) * _values(g), axis=-1))


def minority_function(d: int) -> BooleanFunctionTable:
    """+1 on Hamming weight <= d/2, -1 above; odd d only so there is no tie."""
    if d < 1 or d % 2 == 0:
        raise CubeError(f"minority is only defined here for odd d, got {d}")
    w = subset_sizes(d)
    return BooleanFunctionTable(d, np.where(2 * w <= d, 1, -1))


def majority_function(d: int) -> BooleanFunctionTable:
    """sign(sum_i x_i) with x_i = (-1)^{v_i}.

    In this +-1 input convention the table coincides with ``minority_function``,
    which is phrased in terms of bit weight.
    """
    if d < 1 or d % 2 == 0:
        raise CubeError(f"majority is only defined here for odd d, got {d}")
    w = subset_sizes(d)
    return BooleanFunctionTable(d, np.where(2 * w < d, 1, -1))


def dictator(d: int, coordinate: int = 1) -> BooleanFunctionTable:
    v = np.arange(1 << d)
    return BooleanFunctionTable(d, 1 - 2 * ((v >> (coordinate - 1)) & 1))


def parity_function(d: int) -> BooleanFunctionTable:
    return BooleanFunctionTable(d, 1 - 2 * (subset_sizes(d) & 1))


def claim_slack(d: int, f) -> float:
    """I(f) - (pi/2) * I(Min_d) * (<f, Min_d> - alpha); nonnegative when the inequality holds."""
    vals = _values(f)
    if vals.shape[-1] != 1 << d:
        raise CubeError(f"function has {vals.shape[-1]} entries, expected {1 << d}")
    m = minority_function(d)
    return total_influence(vals) - math.pi / 2 * total_influence(m) * (inner_product(vals, m) - ALPHA)


def claim_slack_batch(d: int, rows: np.ndarray) -> np.ndarray:
    """Vectorized ``claim_slack`` over a ``(batch, 2**d)`` array of +-1 rows.

    The spectrum is taken in integer arithmetic, so the influence is exact.
    """
    m = minority_function(d).values.astype(np.int32)
    spectrum = hadamard(rows.astype(np.int32))
    infl = (spectrum.astype(np.int64) ** 2) @ subset_sizes(d) / float(4**d)
    corr = rows.astype(np.int32) @ m / float(1 << d)
    i_min = total_influence(m)
    return infl - math.pi / 2 * i_min * (corr - ALPHA)


def random_functions(rng: np.random.Generator, d: int, count: int) -> np.ndarray:
    n = 1 << d
    raw = rng.integers(0, 256, size=(count, (n + 7) // 8), dtype=np.uint8)
    bits = np.unpackbits(raw, axis=1, bitorder="little")[:, :n]
    return (1 - 2 * bits.astype(np.int8)).astype(np.int8)


def _to_code_hex(row: np.ndarray) -> str:
    return bits_to_hex((row < 0).astype(np.uint8))


def sweep_claim(d: int, samples: int | None = None, seed: int = 0, chunk: int = 1 << 14) -> dict:
    """Minimum claim slack over all functions (``samples=None``, tiny d) or a seeded sample.

    ``argmin_f`` is the hex code of the minimizer, bit v set meaning f(v) = -1.
    """
    n = 1 << d
    minority_function(d)  # validates odd d
    if samples is None:
        if n > 16:
            raise CubeError(f"exhaustive sweep needs d <= 4 (got {d}); pass samples instead")
        codes = np.arange(1 << n, dtype=np.int64)
        bits = (codes[:, None] >> np.arange(n)) & 1
        batches = [(1 - 2 * bits).astype(np.int8)]
    else:
        rng = np.random.default_rng(seed)
        sizes = [min(chunk, samples - i) for i in range(0, samples, chunk)]
        batches = (random_functions(rng, d, s) for s in sizes)

    min_slack, argmin, count = math.inf, None, 0
    for rows in batches:
        slack = claim_slack_batch(d, rows)
        i = int(np.argmin(slack))
        if slack[i] < min_slack:
            min_slack, argmin = float(slack[i]), rows[i].copy()
        count += len(rows)
    return {
        "d": d,
        "functions": count,
        "exhaustive": samples is None,
        "seed": None if samples is None else seed,
        "min_slack": min_slack,
        "argmin_f": _to_code_hex(argmin),
    }


def check_fourier_facts(d: int, f=None) -> dict:
    """Evaluate the four Fourier facts used for the minority function.

    Inequalities are decided exactly from the integer spectrum; the two
    asymptotic statements only report the ratio to their limiting form.
    ``f`` defaults to Min_d and feeds the level-1 versus influence check.
    """
    if d > 15:
        raise CubeError(f"check_fourier_facts supports d <= 15, got {d}")
    m = minority_function(d)
    g = m if f is None else f
    gv = _values(g).astype(np.int64)
    if gv.shape != (1 << d,):
        raise CubeError("test function has the wrong dimension")
    n = 1 << d
    sizes = subset_sizes(d)
    spec_m = hadamard(m.values.astype(np.int64))
    spec_g = hadamard(gv)
    singles = 1 << np.arange(d)

    level1_coeff = float(np.mean(np.abs(spec_m[singles]))) / n
    high = Fraction(int(np.sum(spec_m[sizes >= 2] ** 2)), n * n)
    i_min = Fraction(int(np.sum(sizes * spec_m**2)), n * n)
    lvl1_g = Fraction(int(np.sum(np.abs(spec_g[singles]))), n)
    i_g = Fraction(int(np.sum(sizes * spec_g**2)), n * n)
    bound = 1.0 - 2.0 / math.pi
    facts = [
        {
            "name": "min_level1_coefficient",
            "kind": "asymptotic",
            "value": level1_coeff,
            "limit": math.sqrt(2.0 / (math.pi * d)),
            "ratio": level1_coeff / math.sqrt(2.0 / (math.pi * d)),
            "passed": None,
        },
        {
            "name": "min_high_level_weight",
            "kind": "inequality",
            "lhs": float(high),
            "rhs": bound,
            "slack": bound - float(high),
            "passed": float(high) <= bound,
        },
        {
            "name": "min_total_influence",
            "kind": "asymptotic",
            "value": float(i_min),
            "limit": math.sqrt(2.0 * d / math.pi),
            "ratio": float(i_min) / math.sqrt(2.0 * d / math.pi),
            "passed": None,
        },
        {
            "name": "level1_sum_le_influence",
            "kind": "inequality",
            "lhs": float(lvl1_g),
            "rhs": float(i_g),
            "slack": float(i_g - lvl1_g),
            "passed": lvl1_g <= i_g,
        },
    ]
    return {"d": d, "facts": facts, "all_inequalities_pass": all(x["passed"] for x in facts if x["kind"] == "inequality")}
