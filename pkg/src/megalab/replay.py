"""Transition storage, hindsight relabeling and sparse rewards.

Goals in the stored data are integer goal ids; ``goal_table[id]`` gives the
goal-space coordinates. For the shipped mazes distinct ids are at least one
cell apart, so the success test ``d < 0.5`` reduces to id equality.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

RFAAB_CATEGORIES = ("real", "future", "actual", "achieved", "behavioural")
DEFAULT_TOLERANCE = 0.5


def compute_reward(achieved, goal, tolerance: float = DEFAULT_TOLERANCE):
    """0 where the Euclidean distance is strictly below ``tolerance``, else -1.

    Goals are vectors along the last axis; leading axes broadcast.
    """
    diff = np.atleast_1d(np.asarray(achieved, dtype=np.float64) - np.asarray(goal, dtype=np.float64))
    d = np.linalg.norm(diff, axis=-1)
    out = np.where(d < tolerance, 0.0, -1.0)
    return float(out) if out.ndim == 0 else out


def id_reward(achieved_ids, goal_ids) -> np.ndarray:
    return np.where(np.asarray(achieved_ids) == np.asarray(goal_ids), 0.0, -1.0)


class _GrowableInts:
    def __init__(self, capacity: int = 1024):
        self._data = np.empty(capacity, dtype=np.int64)
        self._size = 0

    def extend(self, values) -> None:
        values = np.asarray(values, dtype=np.int64).ravel()
        need = self._size + values.size
        if need > self._data.size:
            cap = max(need, 2 * self._data.size)
            grown = np.empty(cap, dtype=np.int64)
            grown[: self._size] = self._data[: self._size]
            self._data = grown
        self._data[self._size:need] = values
        self._size = need

    def view(self) -> np.ndarray:
        return self._data[: self._size]

    def __len__(self) -> int:
        return self._size


class AchievedGoalBuffer:
    """Append-only store of goal ids with uniform sampling.

    With ``max_size`` set, the oldest entries are evicted first.
    """

    def __init__(self, goal_table: np.ndarray, max_size: int | None = None):
        self.goal_table = np.asarray(goal_table, dtype=np.float64)
        self.max_size = max_size
        self._ids = _GrowableInts()
        self._first = 0
        self.counts = np.zeros(len(self.goal_table), dtype=np.int64)

    def append(self, goal_ids) -> None:
        goal_ids = np.asarray(goal_ids, dtype=np.int64).ravel()
        self._ids.extend(goal_ids)
        np.add.at(self.counts, goal_ids, 1)
        if self.max_size is not None and len(self) > self.max_size:
            new_first = len(self._ids) - self.max_size
            np.add.at(self.counts, self._ids.view()[self._first:new_first], -1)
            self._first = new_first

    @property
    def ids(self) -> np.ndarray:
        return self._ids.view()[self._first:]

    @property
    def vectors(self) -> np.ndarray:
        return self.goal_table[self.ids]

    def __len__(self) -> int:
        return len(self._ids) - self._first

    def sample_ids(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if len(self) == 0:
            raise IndexError("cannot sample from an empty goal buffer")
        return self.ids[rng.integers(0, len(self), size=n)]

    def export(self, path) -> None:
        """Write one line of comma-separated coordinates per stored goal."""
        lines = [",".join(f"{v:g}" for v in row) for row in self.vectors]
        Path(path).write_text("".join(line + "\n" for line in lines))


@dataclass
class GoalBuffers:
    achieved: AchievedGoalBuffer
    actual: AchievedGoalBuffer
    behavioural: AchievedGoalBuffer

    @classmethod
    def empty(cls, goal_table: np.ndarray) -> GoalBuffers:
        return cls(*(AchievedGoalBuffer(goal_table) for _ in range(3)))


@dataclass(frozen=True)
class Transition:
    state: int
    action: int
    next_state: int
    behavioural_goal: int
    achieved_goal_of_next_state: int
    episode_id: int
    step_index: int


@dataclass
class Batch:
    """Column-wise minibatch; ``goal`` and ``reward`` change under relabeling."""

    index: np.ndarray
    state: np.ndarray
    action: np.ndarray
    next_state: np.ndarray
    goal: np.ndarray
    reward: np.ndarray
    achieved: np.ndarray
    episode_id: np.ndarray
    step_index: np.ndarray

    def __len__(self) -> int:
        return self.index.size

    def copy(self) -> Batch:
        return Batch(**{f.name: getattr(self, f.name).copy() for f in fields(self)})

    def with_goals(self, goal: np.ndarray) -> Batch:
        """New batch sharing every column except goal and the recomputed reward."""
        return Batch(
            self.index, self.state, self.action, self.next_state,
            goal, id_reward(self.achieved, goal),
            self.achieved, self.episode_id, self.step_index,
        )


@dataclass
class Episode:
    states: np.ndarray  # length T + 1
    actions: np.ndarray  # length T
    achieved: np.ndarray  # achieved goal id of each next state, length T
    behavioural_goal: int
    desired_goal: int

    def __post_init__(self):
        if len(self.states) != len(self.actions) + 1 or len(self.achieved) != len(self.actions):
            raise ValueError("episode arrays have inconsistent lengths")


class TransitionStore:
    """Append-only columnar transition storage grouped by episode.

    Unbounded by default. With ``max_transitions`` set, whole episodes are
    evicted oldest-first; evicted rows stay in memory but are never sampled.
    """

    _COLUMNS = ("state", "action", "next_state", "goal", "achieved", "episode_id", "step_index")

    def __init__(self, max_transitions: int | None = None):
        self.max_transitions = max_transitions
        self._cols = {name: _GrowableInts() for name in self._COLUMNS}
        self._ep_start = _GrowableInts()
        self._ep_len = _GrowableInts()
        self._first_episode = 0

    def __len__(self) -> int:
        return len(self._cols["state"]) - self._first_row

    @property
    def _first_row(self) -> int:
        if self._first_episode >= len(self._ep_start):
            return len(self._cols["state"])
        return int(self._ep_start.view()[self._first_episode])

    @property
    def num_episodes(self) -> int:
        return len(self._ep_len)

    def column(self, name: str) -> np.ndarray:
        return self._cols[name].view()

    def add_episode(self, episode: Episode) -> int:
        T = len(episode.actions)
        ep = self.num_episodes
        self._ep_start.extend([len(self._cols["state"])])
        self._ep_len.extend([T])
        c = self._cols
        c["state"].extend(episode.states[:-1])
        c["action"].extend(episode.actions)
        c["next_state"].extend(episode.states[1:])
        c["goal"].extend(np.full(T, episode.behavioural_goal))
        c["achieved"].extend(episode.achieved)
        c["episode_id"].extend(np.full(T, ep))
        c["step_index"].extend(np.arange(T))
        if self.max_transitions is not None:
            while len(self) > self.max_transitions and self._first_episode < ep:
                self._first_episode += 1
        return ep

    def transition(self, i: int) -> Transition:
        c = {name: int(self.column(name)[i]) for name in self._COLUMNS}
        return Transition(
            state=c["state"],
            action=c["action"],
            next_state=c["next_state"],
            behavioural_goal=c["goal"],
            achieved_goal_of_next_state=c["achieved"],
            episode_id=c["episode_id"],
            step_index=c["step_index"],
        )

    def gather(self, index) -> Batch:
        index = np.asarray(index, dtype=np.int64)
        c = {name: self.column(name)[index] for name in self._COLUMNS}
        return Batch(
            index, c["state"], c["action"], c["next_state"], c["goal"],
            id_reward(c["achieved"], c["goal"]), c["achieved"], c["episode_id"], c["step_index"],
        )

    def sample(self, n: int, rng: np.random.Generator) -> Batch:
        if len(self) == 0:
            raise IndexError("cannot sample from an empty transition store")
        return self.gather(self._first_row + rng.integers(0, len(self), size=n))

    def future_achieved(self, batch: Batch, rng: np.random.Generator, mask=None) -> np.ndarray:
        """Achieved goals at a uniform step in [t, T) of each transition's episode.

        With ``mask``, only the selected transitions are drawn for.
        """
        ep, t = batch.episode_id, batch.step_index
        if mask is not None:
            ep, t = ep[mask], t[mask]
        start = self._ep_start.view()[ep]
        length = self._ep_len.view()[ep]
        offset = (rng.random(ep.size) * (length - t)).astype(np.int64)
        return self.column("achieved")[start + t + offset]


def store_episode(episode: Episode, buffers: GoalBuffers, store: TransitionStore) -> None:
    store.add_episode(episode)
    buffers.achieved.append(episode.achieved)
    buffers.behavioural.append([episode.behavioural_goal])
    buffers.actual.append([episode.desired_goal])


def relabel_future(batch: Batch, store: TransitionStore, rng: np.random.Generator) -> Batch:
    return batch.with_goals(store.future_achieved(batch, rng))


def parse_ratios(value) -> tuple[int, ...]:
    """Accept ``"1_4_3_1_1"``, ``"rfaab_1_4_3_1_1"`` or a sequence of five ints."""
    if isinstance(value, str):
        parts = value.removeprefix("rfaab_").replace(",", "_").split("_")
        value = [int(p) for p in parts if p]
    ratios = tuple(int(r) for r in value)
    if len(ratios) != 5 or any(r < 0 for r in ratios) or sum(ratios) == 0:
        raise ValueError(f"rfaab ratios must be five nonnegative ints, not all zero: {value!r}")
    return ratios


def relabel_rfaab(
    batch: Batch,
    ratios,
    goal_buffers: GoalBuffers,
    store: TransitionStore,
    rng: np.random.Generator,
) -> tuple[Batch, np.ndarray]:
    """Relabel each transition from a source drawn with probability proportional to ``ratios``.

    Returns the relabeled batch and each transition's category index. A category
    whose donor buffer is empty falls back to Real.
    """
    ratios = parse_ratios(ratios)
    p = np.asarray(ratios, dtype=np.float64) / sum(ratios)
    n = len(batch)
    nonzero = np.flatnonzero(p)
    if nonzero.size == 1:
        # a single source needs no category draw, so 0_1_0_0_0 consumes the rng like relabel_future
        category = np.full(n, nonzero[0], dtype=np.int64)
    else:
        category = np.searchsorted(np.cumsum(p), rng.random(n), side="right")
        np.minimum(category, 4, out=category)  # guards cumsum rounding below 1
    goal = batch.goal.copy()

    future = category == 1
    if future.any():
        goal[future] = store.future_achieved(batch, rng, mask=future)
    for cat, buf in ((2, goal_buffers.actual), (3, goal_buffers.achieved), (4, goal_buffers.behavioural)):
        mask = category == cat
        k = int(np.count_nonzero(mask))
        if not k:
            continue
        if len(buf) == 0:
            category[mask] = 0
            continue
        goal[mask] = buf.sample_ids(k, rng)
    return batch.with_goals(goal), category
