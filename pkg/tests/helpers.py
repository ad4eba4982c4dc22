"""Shared generators for the entropy-gain checks."""

import numpy as np

from megalab.entropy_math import ConditionalModel, CountedPmf, DiscretePmf


def random_instance(rng: np.random.Generator):
    """Random counted buffer plus conditional rows over a universe of at most 20 goals.

    Some rows are copied between candidates so exact ties get exercised.
    """
    size = int(rng.integers(2, 21))
    counts = rng.integers(0, 31, size=size)
    if counts.sum() == 0:
        counts[rng.integers(size)] = 1
    pmf = CountedPmf({g: int(c) for g, c in enumerate(counts) if c > 0})
    rows = {}
    for g in range(size):
        if rows and rng.random() < 0.2:
            rows[g] = rows[int(rng.choice(list(rows)))]
            continue
        k = int(rng.integers(1, size + 1))
        support = rng.choice(size, size=k, replace=False)
        w = rng.dirichlet(np.ones(k))
        w = w / w.sum()
        mass = {int(s): float(m) for s, m in zip(support, w)}
        fix = 1.0 - sum(mass.values())
        first = int(support[0])
        mass[first] += fix
        rows[g] = DiscretePmf(mass)
    return pmf, ConditionalModel(rows), pmf.support()


def tie_set(scores: dict, tol: float = 1e-10) -> set:
    best = max(scores.values())
    return {k for k, v in scores.items() if best - v <= tol}
