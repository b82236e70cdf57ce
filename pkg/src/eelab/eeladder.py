"""Equi-energy ladder: ring ledgers, jump moves, and run schedules.

A run keeps one chain per ladder level. Each level's chain mixes local
random-walk moves with jump moves that propose a state recorded by the
level above, either from the energy ring of the current state
(restricted) or from all records (unrestricted). A jump from x to y at
level i is accepted with probability

    min(1, [d_i(y) * d_{i+1}(x)] / [d_i(x) * d_{i+1}(y)])

where d_i is the unnormalized level density; this ratio makes the
idealized within-ring jump exactly reversible for the level-i target
(see idealized_jump_matrix). An empty ring falls back to a local move,
so the chain never stalls.

Per-level rng streams are split from the run seed, which makes traces
deterministic and schedule-independent per level.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import CapabilityError, ConfigError
from .kernels import RandomWalkKernel
from .rng import RandomStream
from .statespace import (
    EnergyModel,
    FiniteDistribution,
    LadderLevel,
    enumerate_distribution,
    level_logdensities,
    validate_ladder,
)

MOVE_LOCAL = 0
MOVE_JUMP = 1
MOVE_JUMP_FALLBACK = 2
MOVE_NAMES = {MOVE_LOCAL: "local", MOVE_JUMP: "jump", MOVE_JUMP_FALLBACK: "jump_fallback"}


class RingLedger:
    """Append-only store of recorded states grouped into energy rings.

    boundaries H_1 <= ... <= H_{K-1} define rings R_j = {x : h(x) in
    [H_j, H_{j+1})} with H_0 = -inf and H_K = +inf. Records are never
    dropped; an optional max_records cap stops recording once reached.
    """

    def __init__(self, level: int, boundaries, max_records: Optional[int] = None):
        b = [float(v) for v in boundaries]
        if any(y < x for x, y in zip(b, b[1:])):
            raise ConfigError("ring boundaries must be sorted")
        if max_records is not None and max_records < 0:
            raise ConfigError("max_records must be >= 0")
        self.level = level
        self.boundaries = b
        self.max_records = max_records
        self.rings: list[list[int]] = [[] for _ in range(len(b) + 1)]
        self.ring_energies: list[list[float]] = [[] for _ in range(len(b) + 1)]
        self._flat: list[int] = []

    @property
    def n_rings(self) -> int:
        return len(self.rings)

    @property
    def total(self) -> int:
        return len(self._flat)

    @property
    def all_records(self) -> list[int]:
        return self._flat

    def ring_index(self, energy: float) -> int:
        """The unique j with energy in [H_j, H_{j+1}) (left-closed)."""
        return bisect_right(self.boundaries, energy)

    def record(self, state: int, energy: float) -> None:
        if self.max_records is not None and self.total >= self.max_records:
            return
        j = self.ring_index(energy)
        self.rings[j].append(state)
        self.ring_energies[j].append(energy)
        self._flat.append(state)

    def draw(self, mode: str, current_ring: int, rng: RandomStream) -> Optional[int]:
        """Uniform draw of a recorded state, or None when nothing is available.

        Consumes no randomness in the None case, so a fallback local move
        sees exactly the rng stream a plain local move would.
        """
        if mode == "restricted":
            pool = self.rings[current_ring]
        elif mode == "unrestricted":
            pool = self._flat
        else:
            raise ConfigError(f"unknown jump mode {mode!r}")
        if not pool:
            return None
        return pool[rng.randint(len(pool))]


@dataclass
class LadderConfig:
    """Run parameters for both schedules.

    ring_boundaries default to the truncation energies of levels 1..K-1.
    A single-level ladder degenerates to a plain local-MH chain.
    """

    levels: list[LadderLevel]
    burn_in: int = 0
    p_jump: float = 0.1
    jump_mode: str = "restricted"
    schedule: str = "parallel"
    macro_steps: int = 10_000
    steps_per_level: int = 10_000
    ring_boundaries: Optional[list[float]] = None
    max_records: Optional[int] = None
    init_state: Optional[int] = None

    def __post_init__(self):
        validate_ladder(self.levels)
        if not 0.0 <= self.p_jump <= 1.0:
            raise ConfigError(f"p_jump must be in [0, 1], got {self.p_jump}")
        if self.burn_in < 0:
            raise ConfigError("burn_in must be >= 0")
        if self.jump_mode not in ("restricted", "unrestricted"):
            raise ConfigError(f"unknown jump_mode {self.jump_mode!r}")
        if self.schedule not in ("parallel", "serial"):
            raise ConfigError(f"unknown schedule {self.schedule!r}")
        if self.macro_steps < 0 or self.steps_per_level < 0:
            raise ConfigError("step counts must be >= 0")

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    def boundaries(self) -> list[float]:
        if self.ring_boundaries is not None:
            return list(self.ring_boundaries)
        return [lv.truncation for lv in self.levels[1:]]


@dataclass
class ChainState:
    """Per-level mutable state of a running ladder."""

    states: list[int]
    energies: list[float]
    rngs: list[RandomStream]
    steps: list[int]


def ee_jump_step(
    x: int,
    energy_x: float,
    ledger: RingLedger,
    mode: str,
    logd_lo,
    logd_hi,
    local_kernel: RandomWalkKernel,
    rng: RandomStream,
) -> tuple[int, int, bool]:
    """One jump move at the lower level against the upper level's ledger.

    Draws a recorded state from the ring of the current energy (or from
    all records in unrestricted mode) and accepts it with
    min(1, [d_lo(y) d_hi(x)] / [d_lo(x) d_hi(y)]). An empty pool falls
    back to one local move; since the failed draw consumed no
    randomness, the fallback behaves exactly like a plain local step.
    Returns (new_state, move_type, accepted).
    """
    ring = ledger.ring_index(energy_x)
    y = ledger.draw(mode, ring, rng)
    if y is None:
        new, acc = local_kernel.step(x, rng)
        return new, MOVE_JUMP_FALLBACK, acc
    logr = (logd_lo[y] + logd_hi[x]) - (logd_lo[x] + logd_hi[y])
    if logr >= 0.0 or rng.uniform() < math.exp(logr):
        return y, MOVE_JUMP, True
    return x, MOVE_JUMP, False


@dataclass
class LevelTrace:
    """Columnar trace of one level's chain."""

    level: int
    steps: np.ndarray
    states: np.ndarray
    energies: np.ndarray
    rings: np.ndarray
    move_types: np.ndarray
    accepted: np.ndarray

    def __len__(self) -> int:
        return len(self.steps)


@dataclass
class TraceSet:
    """All level traces of one run plus the ledgers it produced."""

    levels: list[LevelTrace]
    ledgers: list[RingLedger]
    burn_in: int

    def empirical_counts(self, level: int, n_states: int,
                         upto: Optional[int] = None) -> np.ndarray:
        """Visit counts of post-burn-in states at a level."""
        tr = self.levels[level]
        states = tr.states[self.burn_in:upto]
        return np.bincount(states, minlength=n_states).astype(np.float64)

    def empirical_distribution(self, level: int, n_states: int,
                               upto: Optional[int] = None) -> FiniteDistribution:
        counts = self.empirical_counts(level, n_states, upto)
        return FiniteDistribution.from_weights(np.arange(n_states), counts)


class _LadderRunner:
    """Shared machinery of the parallel and serial schedules."""

    def __init__(self, model: EnergyModel, config: LadderConfig, seed: int):
        if not model.enumerable:
            raise CapabilityError("ladder runs require an enumerable model")
        self.model = model
        self.config = config
        self.n = model.size
        self.h = model.energies().tolist()
        self.logd = [level_logdensities(model, lv).tolist() for lv in config.levels]
        self.local = [RandomWalkKernel(model, lv) for lv in config.levels]
        boundaries = config.boundaries()
        self.ledgers = [
            RingLedger(i, boundaries, config.max_records)
            for i in range(config.n_levels)
        ]
        rngs = RandomStream.from_seed(seed).spawn(config.n_levels)
        states, energies = [], []
        for i in range(config.n_levels):
            s = config.init_state if config.init_state is not None else rngs[i].randint(self.n)
            self.model.check_state(s)
            states.append(s)
            energies.append(self.h[s])
        self.chain = ChainState(states, energies, rngs, [0] * config.n_levels)

    def step_level(self, i: int) -> tuple[int, bool]:
        """Advance level i by one transition; returns (move_type, accepted)."""
        cfg = self.config
        chain = self.chain
        rng = chain.rngs[i]
        x = chain.states[i]

        if i < cfg.n_levels - 1 and cfg.p_jump > 0.0 and rng.uniform() < cfg.p_jump:
            new, move, acc = ee_jump_step(
                x, chain.energies[i], self.ledgers[i + 1], cfg.jump_mode,
                self.logd[i], self.logd[i + 1], self.local[i], rng,
            )
        else:
            new, acc = self.local[i].step(x, rng)
            move = MOVE_LOCAL

        chain.states[i] = new
        chain.energies[i] = self.h[new]
        chain.steps[i] += 1
        return move, acc


class _TraceBuilder:
    """Accumulates one level's trace in plain lists (cheap appends)."""

    def __init__(self, level: int):
        self.level = level
        self.states: list[int] = []
        self.energies: list[float] = []
        self.rings: list[int] = []
        self.move_types: list[int] = []
        self.accepted: list[bool] = []

    def build(self) -> LevelTrace:
        n = len(self.states)
        return LevelTrace(
            level=self.level,
            steps=np.arange(n, dtype=np.int64),
            states=np.asarray(self.states, dtype=np.int64),
            energies=np.asarray(self.energies, dtype=np.float64),
            rings=np.asarray(self.rings, dtype=np.int32),
            move_types=np.asarray(self.move_types, dtype=np.int8),
            accepted=np.asarray(self.accepted, dtype=np.int8),
        )


def run_parallel(model: EnergyModel, config: LadderConfig, seed: int) -> TraceSet:
    """All levels advance once per macro step, top level first.

    A level's post-burn-in states become available to the level below
    within the same macro step.
    """
    runner = _LadderRunner(model, config, seed)
    K = config.n_levels
    builders = [_TraceBuilder(i) for i in range(K)]
    chain = runner.chain
    ledgers = runner.ledgers
    burn_in = config.burn_in
    order = list(range(K - 1, -1, -1))
    for t in range(config.macro_steps):
        recording = t >= burn_in
        for i in order:
            move, acc = runner.step_level(i)
            s, e = chain.states[i], chain.energies[i]
            ledger = ledgers[i]
            if recording:
                ledger.record(s, e)
            b = builders[i]
            b.states.append(s)
            b.energies.append(e)
            b.rings.append(ledger.ring_index(e))
            b.move_types.append(move)
            b.accepted.append(acc)
    return TraceSet([b.build() for b in builders], ledgers, burn_in)


def run_serial(model: EnergyModel, config: LadderConfig, seed: int) -> TraceSet:
    """Each level runs to completion before the one below starts.

    The ledger a level reads is therefore frozen: the level above has
    already finished writing it.
    """
    runner = _LadderRunner(model, config, seed)
    K = config.n_levels
    builders = [_TraceBuilder(i) for i in range(K)]
    chain = runner.chain
    burn_in = config.burn_in
    for i in range(K - 1, -1, -1):
        ledger = runner.ledgers[i]
        b = builders[i]
        for t in range(config.steps_per_level):
            move, acc = runner.step_level(i)
            s, e = chain.states[i], chain.energies[i]
            if t >= burn_in:
                ledger.record(s, e)
            b.states.append(s)
            b.energies.append(e)
            b.rings.append(ledger.ring_index(e))
            b.move_types.append(move)
            b.accepted.append(acc)
    return TraceSet([b.build() for b in builders], runner.ledgers, burn_in)


def run_ladder(model: EnergyModel, config: LadderConfig, seed: int) -> TraceSet:
    if config.schedule == "serial":
        return run_serial(model, config, seed)
    return run_parallel(model, config, seed)


# ---------------------------------------------------------------------------
# Exact kernels for the jump move (oracle side of the Q3 comparison)
# ---------------------------------------------------------------------------


def _jump_log_accept(logd_lo: np.ndarray, logd_hi: np.ndarray,
                     x: int, y: int) -> float:
    return (logd_lo[y] + logd_hi[x]) - (logd_lo[x] + logd_hi[y])


def idealized_jump_matrix(
    model: EnergyModel,
    level_lo: LadderLevel,
    level_hi: LadderLevel,
    boundaries,
) -> np.ndarray:
    """Exact kernel of the jump move with the empirical ledger replaced by
    the true level-hi distribution truncated to the current energy ring.

    The result is block-diagonal over rings and reversible for the
    level-lo target.
    """
    h = model.energies()
    logd_lo = level_logdensities(model, level_lo)
    logd_hi = level_logdensities(model, level_hi)
    q_hi = enumerate_distribution(model, level_hi)
    b = [float(v) for v in boundaries]
    ring_of = np.array([bisect_right(b, float(e)) for e in h])

    n = model.size
    K = np.zeros((n, n))
    for r in range(len(b) + 1):
        members = np.nonzero(ring_of == r)[0]
        if len(members) == 0:
            continue
        qr = q_hi.probs[members]
        qr = qr / qr.sum()
        for xi, x in enumerate(members):
            row = 0.0
            for yi, y in enumerate(members):
                if y == x:
                    continue
                a = min(1.0, math.exp(_jump_log_accept(logd_lo, logd_hi, x, y)))
                K[x, y] = qr[yi] * a
                row += K[x, y]
            K[x, x] = 1.0 - row
    return K


def empirical_jump_chain_matrix(
    model: EnergyModel,
    level_lo: LadderLevel,
    level_hi: LadderLevel,
    ledger: RingLedger,
    p_jump: float,
    jump_mode: str = "restricted",
) -> np.ndarray:
    """Exact kernel of one runner step at level lo against a frozen ledger.

    The step is: with probability p_jump attempt a jump whose proposal is
    the empirical (multiplicity-weighted) distribution of the ledger pool
    for the current ring, falling back to a local move when the pool is
    empty; otherwise move locally.
    """
    if not 0.0 <= p_jump <= 1.0:
        raise ConfigError("p_jump must be in [0, 1]")
    h = model.energies()
    logd_lo = level_logdensities(model, level_lo)
    logd_hi = level_logdensities(model, level_hi)
    K_local = RandomWalkKernel(model, level_lo).exact_matrix()

    n = model.size
    pool_counts: dict[int, np.ndarray] = {}

    def counts_for(pool) -> np.ndarray:
        key = id(pool)
        if key not in pool_counts:
            pool_counts[key] = np.bincount(pool, minlength=n)
        return pool_counts[key]

    K_jump = np.zeros((n, n))
    for x in range(n):
        if jump_mode == "restricted":
            pool = ledger.rings[ledger.ring_index(float(h[x]))]
        else:
            pool = ledger.all_records
        if not pool:
            K_jump[x] = K_local[x]
            continue
        counts = counts_for(pool)
        m = len(pool)
        row = 0.0
        for y in np.nonzero(counts)[0]:
            if y == x:
                continue
            a = min(1.0, math.exp(_jump_log_accept(logd_lo, logd_hi, x, y)))
            K_jump[x, y] = (counts[y] / m) * a
            row += K_jump[x, y]
        K_jump[x, x] = 1.0 - row
    return p_jump * K_jump + (1.0 - p_jump) * K_local


def ledger_from_iid(
    model: EnergyModel,
    level: LadderLevel,
    boundaries,
    n_records: int,
    rng: RandomStream,
) -> RingLedger:
    """Ledger filled with n i.i.d. exact draws from the level distribution."""
    dist = enumerate_distribution(model, level)
    cum = np.cumsum(dist.probs)
    cum[-1] = 1.0
    h = model.energies()
    ledger = RingLedger(level.index, boundaries)
    draws = np.searchsorted(cum, rng.uniforms(n_records), side="right")
    for s in draws:
        ledger.record(int(s), float(h[s]))
    return ledger
