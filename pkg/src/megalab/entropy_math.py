"""Exact discrete entropy-gain machinery over a counted achieved-goal buffer."""

from __future__ import annotations

import math
import sys
from collections.abc import Hashable, Mapping
from dataclasses import dataclass, field

import numpy as np

# Stand-in for +inf when a conditional puts mass where the buffer has none.
SENTINEL_MAX = sys.float_info.max


def xlogx(x: float) -> float:
    return 0.0 if x == 0.0 else x * math.log(x)


@dataclass
class DiscretePmf:
    mass: dict[Hashable, float]

    def __post_init__(self):
        if any(m < 0 for m in self.mass.values()):
            raise ValueError("probability masses must be nonnegative")
        total = math.fsum(self.mass.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"masses sum to {total}, not 1")

    def __getitem__(self, goal) -> float:
        return self.mass.get(goal, 0.0)

    def entropy(self) -> float:
        return -math.fsum(xlogx(m) for m in self.mass.values())


@dataclass
class CountedPmf:
    """Empirical achieved-goal distribution backed by integer counts."""

    counts: dict[Hashable, int] = field(default_factory=dict)

    def __post_init__(self):
        if any(c < 0 for c in self.counts.values()):
            raise ValueError("counts must be nonnegative")

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def eta(self) -> float:
        return 1.0 / self.total

    def p(self, goal) -> float:
        return self.counts.get(goal, 0) / self.total

    def add(self, goal, k: int = 1) -> None:
        self.counts[goal] = self.counts.get(goal, 0) + k

    def support(self) -> list:
        return sorted(g for g, c in self.counts.items() if c > 0)

    def entropy(self) -> float:
        return counts_entropy(self.counts.values())

    def to_pmf(self) -> DiscretePmf:
        t = self.total
        return DiscretePmf({g: c / t for g, c in self.counts.items()})


@dataclass
class ConditionalModel:
    """q(achieved | behavioural) as one DiscretePmf row per behavioural goal."""

    rows: dict[Hashable, DiscretePmf]

    def __getitem__(self, candidate) -> DiscretePmf:
        try:
            return self.rows[candidate]
        except KeyError:
            raise LookupError(f"no conditional row for candidate {candidate!r}") from None


def counts_entropy(counts) -> float:
    """Shannon entropy (nats) of the distribution proportional to integer counts."""
    cs = [c for c in counts if c > 0]
    n = sum(cs)
    # H = ln n - (1/n) sum c ln c
    return math.log(n) - math.fsum(c * math.log(c) for c in cs) / n


def delta_h(p: float, eta: float) -> float:
    """Point-wise entropy gain p ln p - (p + eta) ln(p + eta)."""
    if not 0.0 <= p <= 1.0 or not 0.0 < eta <= 1.0 or p + eta > 1.0 + 1e-9:
        raise ValueError(f"delta_h needs p in [0,1], eta in (0,1], p + eta <= 1; got {p}, {eta}")
    return xlogx(p) - xlogx(p + eta)


def _gain_term(p: float, eta: float) -> float:
    # unchecked: inside a buffer p + eta may reach 1 + eta
    return xlogx(p) - xlogx(p + eta)


def expected_entropy_gain(pmf: CountedPmf, q: ConditionalModel, candidate) -> float:
    row = q[candidate]
    eta = pmf.eta
    return math.fsum(m * _gain_term(pmf.p(g), eta) for g, m in row.mass.items() if m > 0)


def entropy_gradient_score(pmf: CountedPmf, q_row: DiscretePmf | Mapping) -> float:
    """Cross-entropy H(q, p_ag) = KL(q || p_ag) + H[q].

    Returns SENTINEL_MAX when q puts mass on a goal the buffer has never seen.
    """
    mass = q_row.mass if isinstance(q_row, DiscretePmf) else q_row
    terms = []
    for g, m in mass.items():
        if m <= 0:
            continue
        p = pmf.p(g)
        if p == 0.0:
            return SENTINEL_MAX
        terms.append(-m * math.log(p))
    return math.fsum(terms)


def brute_force_next_entropy(pmf: CountedPmf, q: ConditionalModel, candidate) -> float:
    """Expected buffer entropy after one more achieved goal, by explicit update."""
    row = q[candidate]
    base = dict(pmf.counts)
    out = []
    for g, m in row.mass.items():
        if m <= 0:
            continue
        updated = dict(base)
        updated[g] = updated.get(g, 0) + 1
        out.append(m * counts_entropy(updated.values()))
    return math.fsum(out)


def argmax_set(scores: Mapping, rel_tol: float = 1e-9, abs_tol: float = 1e-12) -> set:
    """Candidates whose score ties the maximum up to floating-point tolerance."""
    best = max(scores.values())
    return {k for k, v in scores.items() if math.isclose(v, best, rel_tol=rel_tol, abs_tol=abs_tol)}


def argmax_lowest(scores: Mapping):
    """Argmax with ties broken by the lowest key."""
    best = max(scores.values())
    return min(k for k, v in scores.items() if v == best)


def pmf_array_entropy(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))
