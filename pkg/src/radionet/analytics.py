"""Closed-form clustering quantities around a fixed node.

For a node ``v`` and an MIS, ``mis[i]`` counts MIS nodes at hop distance
exactly ``i`` (``i = 0..D``). From these we get T, B and S = T / B for a
shift rate ``beta``, the power of two ``b`` derived from ``log_D alpha``,
the prefix counts ``s_j`` and the set of bad exponents ``j``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .clustering import fine_j_range
from .graph import Graph

# bad j needs r >= R_MIN
R_MIN = 8


def mis_counts(graph: Graph, mis, v: int, D: int) -> np.ndarray:
    """MIS nodes at each hop distance 0..D from ``v`` (unreachable ones dropped)."""
    dist = graph.hop_distances([v])[0]
    members = np.fromiter(mis, dtype=np.int64)
    d = dist[members]
    d = d[np.isfinite(d)].astype(np.int64)
    return np.bincount(d[d <= D], minlength=D + 1)[: D + 1]


def t_b_s(counts: np.ndarray, beta: float) -> tuple[float, float, float]:
    i = np.arange(len(counts), dtype=float)
    w = counts * np.exp(-i * beta)
    T = float(np.sum(i * w))
    B = float(np.sum(w))
    return T, B, (T / B if B > 0 else 0.0)


def b_value(alpha: int, D: int) -> int:
    """2^(ceil(log2 log_D alpha) + 2), floored at 4."""
    if D < 2 or alpha <= 1:
        return 4
    x = math.log(alpha) / math.log(D)
    return max(4, 2 ** (math.ceil(math.log2(x)) + 2))


def s_value(counts: np.ndarray, j: int) -> int:
    """Sum of counts at distances 0..2^(j+1); distances beyond D contribute nothing."""
    if j < 0:
        raise ValueError("j must be >= 0")
    hi = 2 ** (j + 1) if j + 1 < 63 else len(counts)
    return int(np.sum(counts[: min(hi, len(counts) - 1) + 1]))


def _exceeds(big: int, small: int, e: int) -> bool:
    """big > 2^e * small, exactly, for non-negative integers."""
    if small == 0:
        return big > 0
    if e >= big.bit_length():
        return False
    return big > (small << e)


def bad_witness(counts: np.ndarray, j: int, b: int) -> int | None:
    """Smallest r >= 8 with s_{j+log b+r} > 2^(b 2^(r-1)) s_{j+log b}, else None.

    s is constant once 2^(k+1) reaches D, so only finitely many r matter.
    """
    lb = int(math.log2(b))
    base = s_value(counts, j + lb)
    D = len(counts) - 1
    top = max(R_MIN, math.ceil(math.log2(max(D, 1))) + 1 - j - lb)
    for r in range(R_MIN, top + 1):
        if _exceeds(s_value(counts, j + lb + r), base, b * 2 ** (r - 1)):
            return r
    return None


@dataclass
class ClusterAnalytics:
    v: int
    j: int
    beta: float
    D: int
    alpha: int
    mis_counts: list
    T: float
    B: float
    S: float
    b: int
    s_j: int
    bad: bool

    @property
    def spread_ratio(self) -> float:
        return self.S / (self.b * 2 ** self.j)

    def to_json(self) -> str:
        d = asdict(self)
        d["spread_ratio"] = self.spread_ratio
        return json.dumps(d)


def compute_analytics(graph: Graph, mis, v: int, j: int, D: int, alpha: int,
                      counts: np.ndarray | None = None) -> ClusterAnalytics:
    counts = mis_counts(graph, mis, v, D) if counts is None else counts
    beta = 2.0 ** -j
    T, B, S = t_b_s(counts, beta)
    b = b_value(alpha, D)
    return ClusterAnalytics(v, j, beta, D, alpha, counts.tolist(), T, B, S, b,
                            s_value(counts, j), bad_witness(counts, j, b) is not None)


def count_bad_j(graph: Graph, mis, v: int, D: int, alpha: int, counts=None) -> set[int]:
    counts = mis_counts(graph, mis, v, D) if counts is None else counts
    b = b_value(alpha, D)
    return {j for j in fine_j_range(D) if bad_witness(counts, j, b) is not None}


def good_fraction(bad: set, D: int) -> float:
    js = fine_j_range(D)
    return 1.0 if not js else 1 - len(bad) / len(js)


def spread_proof_constant(b: int) -> float:
    """The explicit constant in S <= (2^7 b + 6) 2^j, as a bound on S / (b 2^j)."""
    return 2 ** 7 + 6 / b
