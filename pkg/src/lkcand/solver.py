"""Chained local search with kicks, trials and restarts.

One *run* starts from a random tour and alternates descent and kicks for up
to ``trials_per_run`` trials.  :func:`solve` restarts runs until the target
length is reached or the time budget is spent.  Restart ``r`` of fold ``f``
is seeded with ``1_000_000 * f + r``.
"""
from __future__ import annotations

import dataclasses
import enum
import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .candidates import CandidateSet, alpha_candidates, missing_optimal_edges, two_opt_union
from .instance import Instance, Tour, tour_length
from .localsearch import SearchState, constrained_restart_kick, double_bridge, local_descent
from .popmusic import PopmusicParams, popmusic_candidates


class Strategy(str, enum.Enum):
    ALPHA_FIXED = "ALPHA_FIXED"
    TWO_OPT_FIXED = "TWO_OPT_FIXED"
    POP_FIXED = "POP_FIXED"
    POP_RESTART = "POP_RESTART"


class Kick(str, enum.Enum):
    DOUBLE_BRIDGE = "DOUBLE_BRIDGE"
    CONSTRAINED_RANDOM = "CONSTRAINED_RANDOM"


@dataclass(frozen=True)
class SolverConfig:
    candidate_strategy: Strategy = Strategy.ALPHA_FIXED
    k_alpha: int = 5
    m_two_opt_tours: int = 1000
    popmusic: PopmusicParams = field(default_factory=PopmusicParams)
    kick: Kick = Kick.DOUBLE_BRIDGE
    trials_per_run: int | None = None  # None: n trials
    time_budget: float = 60.0
    fold: int = 1
    target: float | None = None
    subgradient: bool = True
    breadth: int = 5
    candidate_seed: int = 0
    count_init_time: bool = False
    max_restarts: int | None = None
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "candidate_strategy", Strategy(self.candidate_strategy))
        object.__setattr__(self, "kick", Kick(self.kick))
        if self.trials_per_run is not None and self.trials_per_run < 1:
            raise ValueError("trials_per_run must be at least 1")
        if not self.time_budget > 0:
            raise ValueError("time_budget must be positive")
        if not 1 <= self.fold <= 10:
            raise ValueError("fold must be in [1, 10]")

    def trials(self, n: int) -> int:
        return self.trials_per_run if self.trials_per_run is not None else n

    def digest(self) -> str:
        """Stable short hash of every setting except fold and label."""
        d = dataclasses.asdict(self)
        d.pop("fold")
        d.pop("label")
        blob = json.dumps(d, sort_keys=True, default=str)
        return hashlib.sha1(blob.encode()).hexdigest()[:12]

    @property
    def name(self) -> str:
        return self.label or self.candidate_strategy.value


@dataclass
class RunRecord:
    instance: str
    config: str
    config_digest: str
    fold: int
    solved: bool
    best_length: float
    elapsed: float
    trials_used: int
    restarts_used: int
    seed_initial: int
    missing_edges_at_start: int | None = None
    tour: Tour | None = field(default=None, repr=False, compare=False)

    FIELDS = ("instance", "config", "config_digest", "fold", "solved", "best_length", "elapsed",
              "trials_used", "restarts_used", "seed_initial", "missing_edges_at_start")

    def to_row(self) -> dict:
        row = {k: getattr(self, k) for k in self.FIELDS}
        row["solved"] = int(self.solved)
        row["best_length"] = repr(float(self.best_length))
        row["elapsed"] = f"{self.elapsed:.6f}"
        row["missing_edges_at_start"] = "" if self.missing_edges_at_start is None else self.missing_edges_at_start
        return row

    @classmethod
    def from_row(cls, row: dict) -> "RunRecord":
        missing = row.get("missing_edges_at_start", "")
        return cls(row["instance"], row["config"], row["config_digest"], int(row["fold"]),
                   bool(int(row["solved"])), float(row["best_length"]), float(row["elapsed"]),
                   int(row["trials_used"]), int(row["restarts_used"]), int(row["seed_initial"]),
                   None if missing in ("", None) else int(missing))


def derive_seed(fold: int, restart_index: int) -> int:
    if not 1 <= fold <= 10:
        raise ValueError(f"fold must be in [1, 10], got {fold}")
    if restart_index < 0:
        raise ValueError("restart_index must be non-negative")
    return 1_000_000 * fold + restart_index


def reaches(length: float, target: float | None, inst: Instance) -> bool:
    """Whether ``length`` hits ``target``: exact for integral metrics, 1e-6 relative otherwise."""
    if target is None:
        return False
    if inst.metric.integral:
        return length <= target + 0.5
    return length <= target * (1 + 1e-6) + 1e-12


class RunResult(NamedTuple):
    tour: Tour
    solved: bool
    trials: int
    lengths: list


def run_once(inst: Instance, cand: CandidateSet, cfg: SolverConfig, rng: np.random.Generator,
             initial_tour=None, deadline: float = math.inf) -> RunResult:
    """One run: descend from a random (or given) tour, then kick the best tour
    and descend again, for up to ``cfg.trials(n)`` trials.

    ``lengths`` holds the best length after each trial.
    """
    target = cfg.target if cfg.target is not None else inst.optimum_length
    if initial_tour is None:
        state = SearchState.random(inst.n, rng)
    else:
        order = initial_tour.order if isinstance(initial_tour, Tour) else initial_tour
        state = SearchState(order, rng)
    local_descent(inst, state, cand, cfg.breadth, deadline)
    best_order = state.order.copy()
    best_len = tour_length(inst, best_order)
    lengths = [best_len]
    trials = 1
    solved = reaches(best_len, target, inst)
    while not solved and trials < cfg.trials(inst.n) and time.monotonic() < deadline:
        if cfg.kick is Kick.DOUBLE_BRIDGE:
            state = SearchState(best_order, rng)
            double_bridge(state)
        else:
            constrained_restart_kick(state, Tour(best_order, best_len))
        local_descent(inst, state, cand, cfg.breadth, deadline)
        trials += 1
        length = tour_length(inst, state.order)
        if length < best_len:
            best_len, best_order = length, state.order.copy()
            solved = reaches(best_len, target, inst)
        lengths.append(best_len)
    return RunResult(Tour.from_order(inst, best_order), solved, trials, lengths)


def build_candidates(inst: Instance, cfg: SolverConfig, seed: int | None = None) -> CandidateSet:
    """Candidate set for ``cfg``; ``seed`` only matters for POP_RESTART."""
    s = cfg.candidate_strategy
    if s is Strategy.ALPHA_FIXED:
        return alpha_candidates(inst, min(cfg.k_alpha, inst.n - 1), cfg.subgradient)
    if s is Strategy.TWO_OPT_FIXED:
        return two_opt_union(inst, cfg.m_two_opt_tours, cfg.candidate_seed)
    if s is Strategy.POP_FIXED:
        return popmusic_candidates(inst, cfg.candidate_seed, cfg.popmusic)
    return popmusic_candidates(inst, cfg.candidate_seed if seed is None else seed, cfg.popmusic)


def solve(inst: Instance, cfg: SolverConfig, optimal: Tour | None = None,
          initial_tour=None, candidates: CandidateSet | None = None,
          trajectory: list | None = None) -> RunRecord:
    """Restart runs until the target is hit or the budget is spent.

    Candidate construction is excluded from ``elapsed`` unless
    ``cfg.count_init_time``.  ``optimal`` (if known) fills
    ``missing_edges_at_start``; ``candidates`` overrides the configured set
    for fixed strategies; ``trajectory`` collects the best length after
    every trial of every run.
    """
    target = cfg.target if cfg.target is not None else inst.optimum_length
    restart_regen = cfg.candidate_strategy is Strategy.POP_RESTART and candidates is None
    elapsed = 0.0
    cand = candidates
    if cand is None and not restart_regen:
        t0 = time.monotonic()
        cand = build_candidates(inst, cfg)
        if cfg.count_init_time:
            elapsed += time.monotonic() - t0
    best: Tour | None = None
    missing = None
    trials_used = 0
    restart = 0
    solved = False
    while True:
        seed = derive_seed(cfg.fold, restart)
        if restart_regen:
            t0 = time.monotonic()
            cand = build_candidates(inst, cfg, seed)
            if cfg.count_init_time:
                elapsed += time.monotonic() - t0
        if restart == 0 and optimal is not None:
            missing = missing_optimal_edges(cand, optimal)[0]
        remaining = cfg.time_budget - elapsed
        if remaining <= 0:
            break
        t0 = time.monotonic()
        res = run_once(inst, cand, cfg, np.random.default_rng(seed), initial_tour, t0 + remaining)
        elapsed += time.monotonic() - t0
        trials_used += res.trials
        if trajectory is not None:
            prev = best.length if best is not None else math.inf
            trajectory.extend(min(prev, x) for x in res.lengths)
        if best is None or res.tour.length < best.length:
            best = res.tour
        if res.solved or reaches(best.length, target, inst):
            solved = True
            break
        if elapsed >= cfg.time_budget:
            break
        if cfg.max_restarts is not None and restart >= cfg.max_restarts:
            break
        restart += 1
    return RunRecord(inst.name, cfg.name, cfg.digest(), cfg.fold, solved,
                     best.length if best is not None else math.inf, min(elapsed, cfg.time_budget),
                     trials_used, restart, derive_seed(cfg.fold, 0), missing, best)
