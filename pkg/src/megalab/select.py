"""Behavioural-goal selection: MEGA, OMEGA and the baseline strategies.

Every candidate-based strategy follows the same generate-and-test shape:
draw candidates from the achieved-goal buffer, drop those the critic deems
unachievable, then pick one by the strategy's own rule.
"""

from __future__ import annotations

import collections
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .density import KL_MAX, DensityModel
from .entropy_math import ConditionalModel, CountedPmf, expected_entropy_gain
from .replay import AchievedGoalBuffer

STRATEGIES = ("desired", "achieved", "diverse", "minq", "goaldisc", "mega", "omega", "eg-oracle")
BASELINES = ("desired", "achieved", "diverse", "minq", "goaldisc", "eg-oracle")


class SelectionError(RuntimeError):
    pass


class ConfigurationError(ValueError):
    pass


@dataclass
class Candidates:
    goals: np.ndarray
    log_density: np.ndarray
    q: np.ndarray

    def __len__(self) -> int:
        return self.goals.size

    def take(self, index) -> Candidates:
        return Candidates(self.goals[index], self.log_density[index], self.q[index])


@dataclass
class CutoffState:
    cutoff: float = -3.0
    window: collections.deque = field(default_factory=lambda: collections.deque(maxlen=10))
    step_size: float = 1.0
    upper_threshold: float = 0.70
    lower_threshold: float = 0.30
    max_cutoff: float = 0.0  # Q-values never exceed 0

    @property
    def success_rate(self) -> float:
        return sum(self.window) / len(self.window) if self.window else 0.0


@dataclass
class SelectContext:
    buffer: AchievedGoalBuffer
    density: DensityModel | None
    q_values: Callable[[int, np.ndarray], np.ndarray]
    desired_goal: int
    rng: np.random.Generator
    num_candidates: int = 100
    start_state: int = 0
    # set by sample_candidates so callers can inspect the last draw
    last_candidates: Candidates | None = None

    def __post_init__(self):
        if self.num_candidates < 1:
            raise ConfigurationError("num_candidates must be at least 1")


def sample_candidates(ctx: SelectContext) -> Candidates:
    if len(ctx.buffer) == 0:
        raise SelectionError("achieved-goal buffer is empty")
    goals = ctx.buffer.sample_ids(ctx.num_candidates, ctx.rng)
    if ctx.density is not None:
        log_density = ctx.density.log_density_normalized(
            ctx.density.normalize(ctx.buffer.goal_table[goals])
        )
    else:
        log_density = np.zeros(goals.size)
    q = np.asarray(ctx.q_values(ctx.start_state, goals), dtype=np.float64)
    cands = Candidates(goals, log_density, q)
    ctx.last_candidates = cands
    return cands


def apply_cutoff(candidates: Candidates, cutoff_state: CutoffState | float) -> Candidates:
    """Keep candidates with Q >= cutoff; if none survive keep the single best-Q one."""
    cutoff = cutoff_state if isinstance(cutoff_state, (int, float)) else cutoff_state.cutoff
    keep = np.nonzero(candidates.q >= cutoff)[0]
    if keep.size == 0:
        keep = np.array([int(np.argmax(candidates.q))])
    return candidates.take(keep)


def update_cutoff(state: CutoffState, episode_success: bool, min_candidate_q: float) -> CutoffState:
    state.window.append(bool(episode_success))
    if len(state.window) < state.window.maxlen:
        return state
    rate = state.success_rate
    if rate > state.upper_threshold:
        lowered = max(state.cutoff - state.step_size, min_candidate_q)
        state.cutoff = min(state.cutoff, lowered)
    elif rate < state.lower_threshold:
        state.cutoff = min(state.cutoff + state.step_size, state.max_cutoff)
    return state


def select_mega(ctx: SelectContext, cutoff_state: CutoffState) -> int:
    survivors = apply_cutoff(sample_candidates(ctx), cutoff_state)
    # argmin takes the first index on ties
    return int(survivors.goals[np.argmin(survivors.log_density)])


def alpha_from_kl(kl_estimate: float, b: float = -3.0) -> float:
    """Probability of pursuing the desired goal; 0 when the KL estimate is clamped."""
    if kl_estimate >= KL_MAX:
        return 0.0
    return 1.0 / max(b + kl_estimate, 1.0)


def select_omega(
    ctx: SelectContext, cutoff_state: CutoffState, kl_estimate: float, b: float = -3.0
) -> tuple[int, float]:
    alpha = alpha_from_kl(kl_estimate, b)
    if ctx.rng.random() < alpha:
        return int(ctx.desired_goal), alpha
    return select_mega(ctx, cutoff_state), alpha


def diverse_weights(log_density: np.ndarray) -> np.ndarray:
    """Normalized weights proportional to 1 / p_hat."""
    neg = -np.asarray(log_density, dtype=np.float64)
    w = np.exp(neg - neg.max())
    return w / w.sum()


class SuccessHistory:
    """Windowed, Laplace-smoothed success frequency per goal bucket."""

    def __init__(self, window: int = 200):
        self.records: collections.deque = collections.deque(maxlen=window)

    def append(self, start_state, bucket, achieved: bool) -> None:
        self.records.append((start_state, bucket, bool(achieved)))

    def frequency(self, bucket) -> float:
        wins = total = 0
        for _, b, ok in self.records:
            if b == bucket:
                total += 1
                wins += ok
        return (wins + 1) / (total + 2)

    def frequencies(self, buckets) -> np.ndarray:
        wins = collections.Counter()
        totals = collections.Counter()
        for _, b, ok in self.records:
            totals[b] += 1
            wins[b] += ok
        return np.array([(wins[b] + 1) / (totals[b] + 2) for b in buckets])


def success_history_update(
    history: SuccessHistory, start_state, behavioural_goal, achieved: bool
) -> SuccessHistory:
    history.append(start_state, behavioural_goal, achieved)
    return history


def select_baseline(
    strategy: str,
    ctx: SelectContext,
    cutoff_state: CutoffState,
    extras: dict | None = None,
) -> int:
    """Pick a behavioural goal with one of the baseline rules.

    ``extras`` carries ``success_history`` (goaldisc) or ``pmf`` and
    ``conditional`` (eg-oracle).
    """
    extras = extras or {}
    if strategy == "desired":
        return int(ctx.desired_goal)
    if strategy not in BASELINES:
        raise ConfigurationError(f"unknown baseline strategy {strategy!r}")

    if strategy == "goaldisc":
        history = extras.get("success_history")
        if history is None:
            raise ConfigurationError("goaldisc needs a success_history extra")
        cands = sample_candidates(ctx)  # no Q cutoff for this strategy
        freq = history.frequencies(cands.goals.tolist())
        return int(cands.goals[np.argmin(np.abs(freq - 0.5))])

    if strategy == "eg-oracle" and ("pmf" not in extras or "conditional" not in extras):
        raise ConfigurationError("eg-oracle needs pmf and conditional extras")

    survivors = apply_cutoff(sample_candidates(ctx), cutoff_state)
    if strategy == "achieved":
        return int(survivors.goals[ctx.rng.integers(len(survivors))])
    if strategy == "diverse":
        idx = ctx.rng.choice(len(survivors), p=diverse_weights(survivors.log_density))
        return int(survivors.goals[idx])
    if strategy == "minq":
        return int(survivors.goals[np.argmin(survivors.q)])
    # eg-oracle
    pmf: CountedPmf = extras["pmf"]
    q: ConditionalModel = extras["conditional"]
    scores = np.array([expected_entropy_gain(pmf, q, int(g)) for g in survivors.goals])
    return int(survivors.goals[np.argmax(scores)])


def select(
    strategy: str,
    ctx: SelectContext,
    cutoff_state: CutoffState,
    kl_estimate: float = KL_MAX,
    b: float = -3.0,
    extras: dict | None = None,
) -> tuple[int, float | None]:
    """Dispatch by strategy name. Returns the goal and, for omega, its alpha.

    Falls back to the desired goal while the buffer is still empty.
    """
    if strategy not in STRATEGIES:
        raise ConfigurationError(f"unknown strategy {strategy!r}")
    if strategy != "desired" and len(ctx.buffer) == 0:
        return int(ctx.desired_goal), (0.0 if strategy == "omega" else None)
    if strategy == "mega":
        return select_mega(ctx, cutoff_state), None
    if strategy == "omega":
        return select_omega(ctx, cutoff_state, kl_estimate, b)
    return select_baseline(strategy, ctx, cutoff_state, extras), None
