"""Goal-conditioned tabular Q-learning with epsilon-greedy and go-exploration."""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np


class GoalTable:
    """Q(state, action, goal) stored densely; every value stays in [-1/(1-gamma), 0]."""

    def __init__(
        self,
        num_states: int,
        num_actions: int,
        num_goals: int,
        gamma: float = 0.98,
        learning_rate: float = 0.5,
        init_value: float = 0.0,
    ):
        if not 0.0 < gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if not 0.0 < learning_rate <= 1.0:
            raise ValueError("learning_rate must lie in (0, 1]")
        self.gamma = gamma
        self.learning_rate = learning_rate
        self.q_min = -1.0 / (1.0 - gamma)
        if not self.q_min - 1e-9 <= init_value <= 0.0:
            raise ValueError(f"init_value must lie in [{self.q_min}, 0]")
        init_value = max(init_value, self.q_min)
        self.values = np.full((num_states, num_actions, num_goals), init_value, dtype=np.float64)

    @property
    def num_actions(self) -> int:
        return self.values.shape[1]

    def state_value(self, state: int, goals) -> np.ndarray:
        """max_a Q(state, a, g) for each goal id in ``goals``."""
        return self.values[state, :, goals].max(axis=-1)


@dataclass
class ExplorationState:
    base_epsilon: float = 0.1
    go_bonus: float = 0.1
    achievements_this_episode: int = 0

    @property
    def current_epsilon(self) -> float:
        return min(1.0, self.base_epsilon + self.go_bonus * self.achievements_this_episode)

    def reset(self) -> None:
        self.achievements_this_episode = 0


def register_achievement(exploration: ExplorationState, achieved_now: bool) -> ExplorationState:
    if achieved_now:
        exploration.achievements_this_episode += 1
    return exploration


def greedy_action(table: GoalTable, state: int, goal: int) -> int:
    # np.argmax returns the first maximum, i.e. the lowest action id on ties
    return int(np.argmax(table.values[state, :, goal]))


def act(
    table: GoalTable,
    state: int,
    goal: int,
    exploration: ExplorationState | float,
    rng: np.random.Generator,
) -> int:
    eps = exploration if isinstance(exploration, float) else exploration.current_epsilon
    if eps > 0.0 and rng.random() < eps:
        return int(rng.integers(table.num_actions))
    return greedy_action(table, state, goal)


@numba.njit(cache=True)
def _sequential_update(values, s, a, s2, g, r, gamma, lr, q_min):
    num_actions = values.shape[1]
    for i in range(s.shape[0]):
        best = values[s2[i], 0, g[i]]
        for b in range(1, num_actions):
            v = values[s2[i], b, g[i]]
            if v > best:
                best = v
        target = r[i] + gamma * best
        if target < q_min:
            target = q_min
        elif target > 0.0:
            target = 0.0
        old = values[s[i], a[i], g[i]]
        values[s[i], a[i], g[i]] = old + lr * (target - old)


def optimize_batch(table: GoalTable, batch) -> GoalTable:
    """One in-place pass of clipped Q-learning updates, applied transition by transition.

    Successful transitions bootstrap too: the agent must keep achieving the goal.
    """
    r = np.asarray(batch.reward, dtype=np.float64)
    if r.size and not np.all((r == 0.0) | (r == -1.0)):
        raise ValueError("rewards must be in {-1, 0}")
    _sequential_update(
        table.values,
        np.asarray(batch.state, dtype=np.int64),
        np.asarray(batch.action, dtype=np.int64),
        np.asarray(batch.next_state, dtype=np.int64),
        np.asarray(batch.goal, dtype=np.int64),
        r,
        table.gamma,
        table.learning_rate,
        table.q_min,
    )
    return table
