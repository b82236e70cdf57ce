"""Single-step Markov transition kernels and their exact matrices.

Every kernel exposes step(state, rng) -> (state, accepted) and, on
enumerable spaces, exact_matrix() -> dense row-stochastic ndarray whose
diagonal absorbs all rejection mass. Acceptance draws are skipped when
the acceptance probability is exactly 1, so the per-step rng consumption
is: random-walk 1-2 uniforms, independence 1-2 uniforms, mixture 1 +
component, Gibbs 2 uniforms.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import (
    CapabilityError,
    ConfigError,
    NumericError,
    ShapeError,
    SupportError,
)
from .rng import RandomStream
from .statespace import (
    EnergyModel,
    FiniteDistribution,
    LadderLevel,
    level_logdensities,
)

ROW_SUM_TOL = 1e-12


# ---------------------------------------------------------------------------
# Matrix checks
# ---------------------------------------------------------------------------


def check_transition_matrix(K: np.ndarray, tol: float = ROW_SUM_TOL) -> None:
    """Entries >= 0 and rows summing to 1 within tol."""
    K = np.asarray(K)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ShapeError(f"transition matrix must be square, got {K.shape}")
    if np.any(K < 0):
        raise NumericError("transition matrix has negative entries")
    err = np.abs(K.sum(axis=1) - 1.0).max()
    if err > tol:
        raise NumericError(f"row sums deviate from 1 by {err:.3e} > {tol:.0e}")


def stationary_gap(K: np.ndarray, pi: np.ndarray) -> float:
    """max_y |(pi K)(y) - pi(y)|."""
    return float(np.abs(pi @ K - pi).max())


def reversibility_gap(K: np.ndarray, pi: np.ndarray) -> float:
    """max_{x,y} |pi(x) K(x,y) - pi(y) K(y,x)|."""
    F = pi[:, None] * K
    return float(np.abs(F - F.T).max())


def stationary_distribution(K: np.ndarray) -> np.ndarray:
    """Stationary law of an irreducible row-stochastic matrix.

    Solved as the linear system pi (K - I) = 0 with sum(pi) = 1; works for
    non-reversible kernels (used by the ledger-bias experiment).
    """
    n = K.shape[0]
    A = np.vstack([K.T - np.eye(n), np.ones((1, n))])
    b = np.zeros(n + 1)
    b[n] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    pi = np.clip(pi, 0.0, None)
    total = pi.sum()
    if total <= 0 or not np.isfinite(total):
        raise NumericError("stationary distribution solve failed")
    return pi / total


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------


class RandomWalkKernel:
    """Local Metropolis-Hastings with a uniform fixed-size neighborhood.

    Proposals fall uniformly on the model's neighbor slots; out-of-range
    slots (None) count as automatic rejections, which keeps the proposal
    symmetric at the boundary.
    """

    def __init__(self, model: EnergyModel, level: LadderLevel | None = None):
        if model.proposal_size < 1:
            raise ConfigError("model has an empty local neighborhood")
        self.model = model
        self.level = level
        if model.enumerable:
            if level is None:
                self._logd = -model.energies()
            else:
                self._logd = level_logdensities(model, level)
            self._nbrs = [model.neighbors(s) for s in range(model.size)]
            self._ld = self._logd.tolist()  # plain floats for the hot loop
        else:
            self._logd = None
            self._nbrs = None
            self._ld = None

    @property
    def target_probs(self) -> np.ndarray:
        if self._logd is None:
            raise CapabilityError("target enumeration above cap")
        w = np.exp(self._logd - self._logd.max())
        return w / w.sum()

    def _logdensity(self, state: int) -> float:
        if self._logd is not None:
            return float(self._logd[state])
        from .statespace import level_logdensity

        if self.level is None:
            return -self.model.energy(state)
        return level_logdensity(self.model, self.level, state)

    def step(self, state: int, rng: RandomStream) -> tuple[int, bool]:
        if self._nbrs is not None:
            nbrs = self._nbrs[state]
            y = nbrs[rng.randint(len(nbrs))]
            if y is None:
                return state, False
            ld = self._ld
            dl = ld[y] - ld[state]
        else:
            nbrs = self.model.neighbors(state)
            y = nbrs[rng.randint(len(nbrs))]
            if y is None:
                return state, False
            dl = self._logdensity(y) - self._logdensity(state)
        if dl >= 0.0 or rng.uniform() < math.exp(dl):
            return y, True
        return state, False

    def exact_matrix(self) -> np.ndarray:
        if not self.model.enumerable:
            raise CapabilityError("exact matrix needs an enumerable model")
        n = self.model.size
        m = self.model.proposal_size
        logd = self._logd
        K = np.zeros((n, n))
        for x in range(n):
            for y in self._nbrs[x]:
                if y is None:
                    continue
                K[x, y] += min(1.0, math.exp(logd[y] - logd[x])) / m
            K[x, x] += 1.0 - K[x].sum()
        return K


class IndependenceKernel:
    """Metropolized independence sampler: propose y ~ q, accept by the
    importance-ratio rule min(1, w(y)/w(x)) with w = pi/q."""

    def __init__(self, target: FiniteDistribution, proposal: FiniteDistribution):
        if len(target) != len(proposal) or np.any(target.states != proposal.states):
            raise ShapeError("target and proposal must share the same state order")
        bad = (proposal.probs <= 0) & (target.probs > 0)
        if bad.any():
            raise SupportError(
                f"proposal has zero mass on {int(bad.sum())} target states"
            )
        if np.any(target.probs <= 0):
            raise SupportError("independence kernel requires strictly positive target")
        self.target = target
        self.proposal = proposal
        self._logw = np.log(target.probs) - np.log(proposal.probs)
        self._cum = np.cumsum(proposal.probs)
        self._cum[-1] = 1.0

    @property
    def target_probs(self) -> np.ndarray:
        return self.target.probs

    def step(self, state: int, rng: RandomStream) -> tuple[int, bool]:
        y = int(np.searchsorted(self._cum, rng.uniform(), side="right"))
        dl = self._logw[y] - self._logw[state]
        if dl >= 0.0 or rng.uniform() < math.exp(dl):
            return y, True
        return state, False

    def exact_matrix(self) -> np.ndarray:
        q = self.proposal.probs
        accept = np.minimum(1.0, np.exp(self._logw[None, :] - self._logw[:, None]))
        K = q[None, :] * accept
        np.fill_diagonal(K, 0.0)
        np.fill_diagonal(K, 1.0 - K.sum(axis=1))
        return K


class MixtureKernel:
    """With probability alpha take the local kernel's move, else the jump's."""

    def __init__(self, alpha: float, local, jump):
        if not 0.0 <= alpha <= 1.0:
            raise ConfigError(f"mixture weight must be in [0, 1], got {alpha}")
        self.alpha = alpha
        self.local = local
        self.jump = jump
        try:
            p_local, p_jump = local.target_probs, jump.target_probs
        except (AttributeError, CapabilityError):
            pass
        else:
            if not np.allclose(p_local, p_jump, atol=1e-9):
                raise ConfigError("mixture components target different densities")

    @property
    def target_probs(self) -> np.ndarray:
        return self.local.target_probs

    def step(self, state: int, rng: RandomStream) -> tuple[int, bool]:
        if rng.uniform() < self.alpha:
            return self.local.step(state, rng)
        return self.jump.step(state, rng)

    def exact_matrix(self) -> np.ndarray:
        return (
            self.alpha * self.local.exact_matrix()
            + (1.0 - self.alpha) * self.jump.exact_matrix()
        )


class IdentityKernel:
    """Stays put; convenient degenerate mixture component."""

    def __init__(self, n: int):
        self.n = n

    def step(self, state: int, rng: RandomStream) -> tuple[int, bool]:
        return state, False

    def exact_matrix(self) -> np.ndarray:
        return np.eye(self.n)


def gibbs_conditional_step(state, conditional, rng: RandomStream):
    """Random-scan Gibbs on a coordinate vector.

    conditional(state, coord) must return a normalized probability vector
    over the coordinate's values given the rest. Picks one coordinate
    uniformly at random and resamples it.
    """
    state = list(state)
    coord = rng.randint(len(state))
    probs = np.asarray(conditional(state, coord), dtype=np.float64)
    total = probs.sum()
    if not np.isfinite(total) or total <= 0 or np.any(probs < 0):
        raise NumericError(f"conditional at coordinate {coord} is not normalizable")
    if abs(total - 1.0) > 1e-9:
        raise NumericError(f"conditional at coordinate {coord} sums to {total!r}")
    cum = np.cumsum(probs)
    cum[-1] = 1.0
    state[coord] = int(np.searchsorted(cum, rng.uniform(), side="right"))
    return state


class RandomScanGibbs:
    """Single-site Gibbs on a potts_grid model (generic coordinate form).

    Each step resamples one uniformly chosen site from its full
    conditional under the (optionally tempered/truncated) level density.
    """

    def __init__(self, model: EnergyModel, level: LadderLevel | None = None):
        if model.kind != "potts_grid":
            raise ConfigError("RandomScanGibbs expects a potts_grid model")
        self.model = model
        self.level = level
        meta = model.meta
        self._n_sites = meta["width"] * meta["height"]
        self._labels = meta["labels"]
        self._decode = meta["decode"]
        self._powers = [self._labels ** s for s in range(self._n_sites)]

    @property
    def target_probs(self) -> np.ndarray:
        if self.level is None:
            w = np.exp(-(self.model.energies() - self.model.energies().min()))
        else:
            logd = level_logdensities(self.model, self.level)
            w = np.exp(logd - logd.max())
        return w / w.sum()

    def _conditional(self, state: int, site: int) -> np.ndarray:
        cur = self._decode(state)[site]
        base = state - cur * self._powers[site]
        logd = np.empty(self._labels)
        for v in range(self._labels):
            h = self.model.energy(base + v * self._powers[site])
            if self.level is None:
                logd[v] = -h
            else:
                logd[v] = -max(h, self.level.truncation) / self.level.temperature
        w = np.exp(logd - logd.max())
        return w / w.sum()

    def step(self, state: int, rng: RandomStream) -> tuple[int, bool]:
        site = rng.randint(self._n_sites)
        probs = self._conditional(state, site)
        cum = np.cumsum(probs)
        cum[-1] = 1.0
        v = int(np.searchsorted(cum, rng.uniform(), side="right"))
        cur = self._decode(state)[site]
        new = state + (v - cur) * self._powers[site]
        return new, new != state

    def exact_matrix(self) -> np.ndarray:
        if not self.model.enumerable:
            raise CapabilityError("exact matrix needs an enumerable model")
        n = self.model.size
        K = np.zeros((n, n))
        for x in range(n):
            w = self._decode(x)
            for site in range(self._n_sites):
                probs = self._conditional(x, site)
                base = x - w[site] * self._powers[site]
                for v in range(self._labels):
                    K[x, base + v * self._powers[site]] += probs[v] / self._n_sites
        return K
