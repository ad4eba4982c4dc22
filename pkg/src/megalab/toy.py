"""Goal-chain toy: how fast each selection policy spreads the achieved-goal buffer."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .envs import ToyChain

TOY_POLICIES = ("achieved", "diverse", "mega", "eg-oracle")


@dataclass
class ToyCurves:
    """Per-iteration curves (index 0 is the initial one-goal buffer)."""

    mean_entropy: np.ndarray
    std_entropy: np.ndarray
    mean_support: np.ndarray
    std_support: np.ndarray


def _xlogx(x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log(x[pos])
    return out


def _entropy(counts: np.ndarray, total: int) -> float:
    c = counts[counts > 0]
    return float(np.log(total) - np.dot(c, np.log(c)) / total)


def _pick_tied(scores: np.ndarray, candidates: np.ndarray, rng, best_is_max: bool) -> int:
    best = scores.max() if best_is_max else scores.min()
    tied = candidates[np.isclose(scores, best, rtol=1e-12, atol=1e-15)]
    return int(tied[0] if tied.size == 1 else tied[rng.integers(tied.size)])


def choose_goal(policy: str, counts: np.ndarray, total: int, chain: ToyChain, rng) -> int:
    """Behavioural goal for one toy iteration."""
    support = np.flatnonzero(counts)
    if policy == "achieved":
        # proportional to buffer mass
        return int(np.searchsorted(np.cumsum(counts), rng.random() * total, side="right"))
    if policy == "diverse":
        return int(support[rng.integers(support.size)])
    if policy == "mega":
        return _pick_tied(counts[support].astype(np.float64), support, rng, best_is_max=False)
    if policy == "eg-oracle":
        p = counts / total
        gain = _xlogx(p) - _xlogx(p + 1.0 / total)
        return _pick_tied(chain.probs[support] @ gain, support, rng, best_is_max=True)
    raise ValueError(f"unknown toy policy {policy!r}")


def run_trial(policy: str, chain: ToyChain, iterations: int, rng) -> tuple[np.ndarray, np.ndarray]:
    counts = np.zeros(chain.num_goals, dtype=np.int64)
    counts[chain.n] = 1
    entropy = np.zeros(iterations + 1)
    support = np.ones(iterations + 1)
    cum = np.cumsum(chain.probs, axis=1)
    for it in range(1, iterations + 1):
        total = it  # buffer holds `it` goals before this iteration's draw
        goal = choose_goal(policy, counts, total, chain, rng)
        achieved = min(int(np.searchsorted(cum[goal], rng.random(), side="right")), chain.num_goals - 1)
        counts[achieved] += 1
        entropy[it] = _entropy(counts, it + 1)
        support[it] = np.count_nonzero(counts)
    return entropy, support


def run_toy(
    n: int = 50,
    policies=TOY_POLICIES,
    iterations: int = 2000,
    trials: int = 50,
    seed: int = 0,
) -> dict[str, ToyCurves]:
    chain = ToyChain(n)
    out = {}
    for p_idx, policy in enumerate(policies):
        if policy not in TOY_POLICIES:
            raise ValueError(f"unknown toy policy {policy!r}; choose from {', '.join(TOY_POLICIES)}")
        ent = np.empty((trials, iterations + 1))
        sup = np.empty((trials, iterations + 1))
        for trial in range(trials):
            rng = np.random.default_rng([seed, TOY_POLICIES.index(policy), trial])
            ent[trial], sup[trial] = run_trial(policy, chain, iterations, rng)
        out[policy] = ToyCurves(ent.mean(0), ent.std(0), sup.mean(0), sup.std(0))
    return out


def toy_rows(curves: dict[str, ToyCurves]):
    """Rows for the toy CSV sink, ordered by iteration then policy."""
    length = len(next(iter(curves.values())).mean_entropy)
    for it in range(length):
        for policy, c in curves.items():
            yield (
                it, policy,
                float(c.mean_entropy[it]), float(c.std_entropy[it]),
                float(c.mean_support[it]), float(c.std_support[it]),
            )
