"""Rollout/optimize alternation for the maze environments, plus greedy evaluation."""

from __future__ import annotations

import logging
import math
from collections.abc import Iterator

import numpy as np

from .agent import ExplorationState, GoalTable, act, greedy_action, optimize_batch, register_achievement
from .config import RunConfig
from .density import KL_MAX, DensityModel, estimate_kl, fit_kde, resubstitution_entropy
from .envs import NUM_ACTIONS, GridMaze, load_layout, maze_reset
from .metrics import MetricRecord
from .replay import Episode, GoalBuffers, TransitionStore, relabel_future, relabel_rfaab, store_episode
from .select import CutoffState, SelectContext, SuccessHistory, select, success_history_update, update_cutoff

log = logging.getLogger(__name__)

_DENSITY_STRATEGIES = {"mega", "omega", "diverse"}


class TrainingError(RuntimeError):
    pass


def evaluate(table: GoalTable, env: GridMaze, n_episodes: int, rng: np.random.Generator) -> float:
    """Fraction of greedy episodes that reach a goal drawn from the desired region."""
    if n_episodes <= 0:
        log.warning("evaluation with zero episodes; reporting success 0.0")
        return 0.0
    successes = 0
    for _ in range(n_episodes):
        state, goal = maze_reset(env, rng)
        for _ in range(env.horizon):
            state = int(env.next_state[state, greedy_action(table, state, goal)])
            if state == goal:
                successes += 1
                break
    return successes / n_episodes


class Trainer:
    """One seeded training run; ``run()`` yields a MetricRecord per evaluation."""

    def __init__(self, config: RunConfig):
        self.config = config.validate()
        horizon = config.horizon or None
        self.env = load_layout(config.env, horizon=horizon)
        self.goal_table = self.env.goal_vectors()
        n = self.env.num_states
        self.table = GoalTable(n, NUM_ACTIONS, n, config.gamma, config.learning_rate, config.q_init)
        self.store = TransitionStore()
        self.buffers = GoalBuffers.empty(self.goal_table)
        self.cutoff = CutoffState()
        self.history = SuccessHistory()
        self.exploration = ExplorationState(config.epsilon, config.go_bonus)
        streams = np.random.SeedSequence(config.seed).spawn(4)
        self.rng, self.select_rng, self.kde_rng, self.eval_rng = (np.random.default_rng(s) for s in streams)
        self.steps = 0
        self.episodes = 0
        self.kl = KL_MAX
        self.alpha: float | None = 0.0 if config.strategy == "omega" else None
        self._desired_log_density = -math.log(len(self.env.desired_region))

    def q_values(self, start: int, goals: np.ndarray) -> np.ndarray:
        return self.table.state_value(start, goals)

    def fit_density(self) -> DensityModel:
        counts = self.buffers.achieved.counts
        return fit_kde(
            self.goal_table,
            counts=counts,
            bandwidth=self.config.bandwidth,
            kernel=self.config.kernel,
            rng=self.kde_rng,
            sample_cap=self.config.fit_sample_cap,
        )

    def buffer_entropy(self, density: DensityModel | None = None) -> float:
        if len(self.buffers.achieved) == 0:
            return 0.0
        return resubstitution_entropy(density or self.fit_density())

    def estimate_kl(self, density: DensityModel) -> float:
        desired = self.goal_table[self.env.desired_ids]

        def sampler(k):
            return desired[self.kde_rng.integers(len(desired), size=k)]

        def desired_log_density(goals):
            return np.full(len(goals), self._desired_log_density)

        return estimate_kl(density, sampler, desired_log_density, self.config.kl_samples)

    def _select(self, desired_goal: int) -> tuple[int, float]:
        cfg = self.config
        density = None
        if cfg.strategy in _DENSITY_STRATEGIES and len(self.buffers.achieved):
            density = self.fit_density()
        if cfg.strategy == "omega":
            self.kl = self.estimate_kl(density) if density is not None else KL_MAX
        ctx = SelectContext(
            buffer=self.buffers.achieved,
            density=density,
            q_values=self.q_values,
            desired_goal=desired_goal,
            rng=self.select_rng,
            num_candidates=cfg.num_candidates,
            start_state=self.env.start_state,
        )
        cutoff = self.cutoff if cfg.use_cutoff else CutoffState(cutoff=-math.inf)
        goal, alpha = select(
            cfg.strategy, ctx, cutoff, kl_estimate=self.kl, b=cfg.b,
            extras={"success_history": self.history},
        )
        if alpha is not None:
            self.alpha = alpha
        min_q = float(ctx.last_candidates.q.min()) if ctx.last_candidates is not None else -math.inf
        return goal, min_q

    def _optimize(self) -> None:
        cfg = self.config
        batch = self.store.sample(cfg.batch_size, self.rng)
        if self.steps <= cfg.warmup_relabel_steps:
            batch = relabel_future(batch, self.store, self.rng)
        else:
            batch, _ = relabel_rfaab(batch, cfg.rfaab, self.buffers, self.store, self.rng)
        optimize_batch(self.table, batch)

    def run_episode(self) -> bool:
        """Collect one episode (optimizing along the way). Returns intrinsic success."""
        cfg, env = self.config, self.env
        state, desired = maze_reset(env, self.rng)
        goal, min_q = self._select(desired)
        self.exploration.reset()
        length = min(env.horizon, cfg.total_steps - self.steps)
        states = np.empty(length + 1, dtype=np.int64)
        actions = np.empty(length, dtype=np.int64)
        states[0] = state
        success = False
        for t in range(length):
            try:
                if self.steps < cfg.warmup_random_steps:
                    action = int(self.rng.integers(NUM_ACTIONS))
                else:
                    action = act(self.table, state, goal, self.exploration, self.rng)
                state = int(env.next_state[state, action])
                if state == goal:
                    success = True
                    register_achievement(self.exploration, True)
                actions[t] = action
                states[t + 1] = state
                self.steps += 1
                if self.steps > cfg.warmup_random_steps and len(self.store):
                    self._optimize()
            except Exception as exc:
                raise TrainingError(f"episode {self.episodes}, step {t}: {exc}") from exc
        # achieved goal id of a maze state is its own cell id
        store_episode(Episode(states, actions, states[1:].copy(), goal, desired), self.buffers, self.store)
        if math.isfinite(min_q):
            update_cutoff(self.cutoff, success, min_q)
        success_history_update(self.history, env.start_state, goal, success)
        self.episodes += 1
        return success

    def record(self, intrinsic_rate: float) -> MetricRecord:
        test = evaluate(self.table, self.env, self.config.eval_episodes, self.eval_rng)
        return MetricRecord(
            step=self.steps,
            test_success_rate=test,
            buffer_entropy=self.buffer_entropy(),
            alpha=self.alpha,
            intrinsic_success_rate=intrinsic_rate,
            cutoff=self.cutoff.cutoff,
        )

    def run(self) -> Iterator[MetricRecord]:
        cfg = self.config
        wins = since_eval = 0
        while self.steps < cfg.total_steps:
            wins += self.run_episode()
            since_eval += 1
            if self.episodes % cfg.episodes_per_eval == 0 or self.steps >= cfg.total_steps:
                yield self.record(wins / since_eval)
                wins = since_eval = 0


def train(config: RunConfig) -> Iterator[MetricRecord]:
    return Trainer(config).run()
