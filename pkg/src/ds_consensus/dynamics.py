"""Opinion-update engines.

Three engines share one contract (state in, state out, synchronous update,
bounded-confidence pruning recomputed from current opinions each step):

- ``general_step``: the conditional update rule for arbitrary opinions.
  Each agent mixes its own belief table with Fagin-Halpern-conditioned
  neighbor beliefs; updated masses are recovered by Moebius inversion.
  Update weights are proportional to the neighbor's masses (receptive
  agents) or the agent's own masses (cautious agents), normalized so that
  self-weight plus all conditional weights equals 1.
- ``pmf_step``: closed form when every opinion is Bayesian; reduces to a
  row-stochastic confidence-matrix product per singleton profile.
  Cautious Bayesian agents are invariant (identity rows).
- ``dirichlet_step``: closed form when opinions put mass only on singletons
  and the full frame; the confidence matrix need not be row-stochastic and
  the full-frame mass is whatever the singletons leave over.

A step is a pure function; states are immutable and shareable.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from . import dst
from .dst import BodyOfEvidence, Frame
from .errors import NotABeliefFunction, NotBayesian, NotDirichlet
from .graph import DirectedGraph, PrunedView, prune


class Strategy(Enum):
    RECEPTIVE = "receptive"  # follows: weights track the neighbor's masses
    CAUTIOUS = "cautious"    # leads: weights track the agent's own masses


@dataclass(frozen=True)
class AgentSpec:
    strategy: Strategy
    alpha: float = 0.5
    epsilon: float = 1.0
    boe: BodyOfEvidence | None = None

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must be in [0, 1], got {self.epsilon}")


@dataclass(frozen=True)
class NetworkState:
    """Opinions of all agents at one step: a stacked mass table plus specs."""

    frame: Frame
    graph: DirectedGraph
    specs: tuple[AgentSpec, ...]
    masses: np.ndarray  # (N, 2**M), row i = agent i+1
    step: int = 0

    def __post_init__(self):
        m = np.asarray(self.masses, dtype=float)
        n = self.graph.n
        if m.shape != (n, self.frame.n_subsets):
            raise ValueError(f"mass table must be ({n}, {self.frame.n_subsets}), got {m.shape}")
        if len(self.specs) != n:
            raise ValueError(f"need {n} agent specs, got {len(self.specs)}")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "masses", m)

    @staticmethod
    def from_specs(frame: Frame, graph: DirectedGraph,
                   specs: Sequence[AgentSpec]) -> "NetworkState":
        rows = []
        for k, spec in enumerate(specs):
            if spec.boe is None:
                raise ValueError(f"agent {k + 1} has no initial opinion")
            if spec.boe.frame != frame:
                raise ValueError(f"agent {k + 1} opinion not on the shared frame")
            rows.append(spec.boe.masses)
        return NetworkState(frame, graph, tuple(specs), np.vstack(rows))

    def opinions(self) -> list[BodyOfEvidence]:
        return [BodyOfEvidence(self.frame, row) for row in self.masses]

    def epsilons(self) -> np.ndarray:
        return np.array([s.epsilon for s in self.specs])

    def alphas(self) -> np.ndarray:
        return np.array([s.alpha for s in self.specs])

    def with_masses(self, masses: np.ndarray) -> "NetworkState":
        return replace(self, masses=masses, step=self.step + 1)

    def with_epsilon(self, epsilon: float) -> "NetworkState":
        specs = tuple(replace(s, epsilon=epsilon) for s in self.specs)
        return replace(self, specs=specs)

    def pruned(self) -> PrunedView:
        return prune(self.graph, self.masses, self.epsilons(), self.frame.size)


@dataclass(frozen=True)
class ConfidenceMatrix:
    """Per-step weight matrix driving the opinion-profile iteration."""

    matrix: np.ndarray
    row_stochastic: bool

    def __post_init__(self):
        w = np.asarray(self.matrix, dtype=float)
        if self.row_stochastic:
            gaps = np.abs(w.sum(axis=1) - 1.0)
            if gaps.max() > dst.ALGEBRAIC_TOL:
                raise ValueError(f"row sums deviate from 1 by {gaps.max()!r}")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "matrix", w)


# ---------------------------------------------------------------------------
# Conditional-update weights (general engine)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UpdateWeights:
    """Self-weight plus conditional weights keyed by (neighbor, conditioning set)."""

    alpha: float
    beta: dict[tuple[int, int], float]

    def total(self) -> float:
        return self.alpha + sum(self.beta.values())


def update_weights(i: int, state: NetworkState, pruned: PrunedView,
                   bl_rows: np.ndarray | None = None) -> UpdateWeights:
    """Weights agent ``i`` (1-based) applies this step.

    Receptive: each in-bound neighbor gets an equal share of ``1 - alpha``,
    spread over that neighbor's focal elements in proportion to its masses.
    Cautious: weights are proportional to agent i's own masses, restricted
    to sets the neighbor assigns positive belief, with one common factor
    solved from the normalization constraint.  No in-bound neighbors (or no
    usable conditioning sets) collapses to self-preservation.
    """
    spec = state.specs[i - 1]
    nbrs = sorted(pruned.neighbors(i))
    if not nbrs:
        return UpdateWeights(1.0, {})
    if bl_rows is None:
        bl_rows = dst.belief_table(state.masses)
    beta: dict[tuple[int, int], float] = {}
    if spec.strategy is Strategy.RECEPTIVE:
        share = (1.0 - spec.alpha) / len(nbrs)
        for j in nbrs:
            mj = state.masses[j - 1]
            for a in np.nonzero(mj > 0.0)[0]:
                beta[(j, int(a))] = share * float(mj[a])
        return UpdateWeights(spec.alpha, beta)
    # cautious: candidates are own focal elements with positive neighbor belief
    mi = state.masses[i - 1]
    pairs = []
    covered = 0.0
    for j in nbrs:
        blj = bl_rows[j - 1]
        for a in np.nonzero(mi > 0.0)[0]:
            if blj[a] > 0.0:
                pairs.append((j, int(a)))
                covered += float(mi[a])
    if covered <= 0.0:
        return UpdateWeights(1.0, {})
    mu = (1.0 - spec.alpha) / covered
    for j, a in pairs:
        beta[(j, a)] = mu * float(mi[a])
    return UpdateWeights(spec.alpha, beta)


def general_step(state: NetworkState, pruned: PrunedView | None = None) -> NetworkState:
    """One synchronous conditional update of every agent (any opinion class)."""
    if pruned is None:
        pruned = state.pruned()
    n, k = state.masses.shape
    full = state.frame.full_set
    bs = np.arange(k)
    bl_rows = dst.belief_table(state.masses)
    pl_rows = dst.plausibility_table(bl_rows)

    cond_cache: dict[tuple[int, int], np.ndarray] = {}

    def conditional(j: int, a: int) -> np.ndarray:
        key = (j, a)
        if key not in cond_cache:
            num = bl_rows[j - 1, a & bs]
            den = num + pl_rows[j - 1, a & (full ^ bs)]
            out = np.zeros(k)
            np.divide(num, den, out=out, where=den > 0.0)
            cond_cache[key] = out
        return cond_cache[key]

    new_bl = np.empty_like(bl_rows)
    changed = np.zeros(n, dtype=bool)
    for i in range(1, n + 1):
        w = update_weights(i, state, pruned, bl_rows)
        if not w.beta:
            new_bl[i - 1] = bl_rows[i - 1]
            continue
        acc = w.alpha * bl_rows[i - 1]
        for (j, a), b in w.beta.items():
            acc = acc + b * conditional(j, a)
        new_bl[i - 1] = acc
        changed[i - 1] = True

    new_masses = dst.mass_table(new_bl)
    worst = new_masses.min()
    if worst < -dst.ITERATED_TOL:
        raise NotABeliefFunction(f"update produced mass {worst!r}")
    np.clip(new_masses, 0.0, None, out=new_masses)
    new_masses[:, 0] = 0.0
    new_masses /= new_masses.sum(axis=1, keepdims=True)
    new_masses[~changed] = state.masses[~changed]
    return state.with_masses(new_masses)


# ---------------------------------------------------------------------------
# Closed-form engines
# ---------------------------------------------------------------------------

def _singleton_columns(frame: Frame) -> np.ndarray:
    return np.array([1 << p for p in range(frame.size)])


def opinion_profile(state: NetworkState, proposition: int) -> np.ndarray:
    """All agents' masses for one proposition, in node order."""
    if not 0 <= proposition < state.frame.n_subsets:
        raise ValueError(f"proposition {proposition:#x} outside the frame")
    return state.masses[:, proposition].copy()


def singleton_profiles(state: NetworkState) -> np.ndarray:
    """Stacked opinion profiles of every singleton, shape (N, M)."""
    return state.masses[:, _singleton_columns(state.frame)].copy()


def pmf_confidence_matrix(state: NetworkState, pruned: PrunedView) -> ConfidenceMatrix:
    """Row-stochastic weights for Bayesian opinions.

    Receptive row: self-weight on the diagonal, the rest split equally over
    in-bound neighbors; with no neighbors the row is the identity row.
    Cautious row: identity (a cautious Bayesian agent never moves).
    """
    if not dst.is_bayesian_table(state.masses, state.frame):
        raise NotBayesian("pmf engine requires Bayesian opinions")
    n = state.graph.n
    counts = pruned.neighbor_counts()
    alphas = state.alphas()
    receptive = np.array([s.strategy is Strategy.RECEPTIVE for s in state.specs])
    active = receptive & (counts > 0)
    share = np.where(active, (1.0 - alphas) / np.maximum(counts, 1), 0.0)
    w = pruned.kept * share[:, None]
    w[np.arange(n), np.arange(n)] = np.where(active, alphas, 1.0)
    return ConfidenceMatrix(w, row_stochastic=True)


def dirichlet_confidence_matrix(state: NetworkState, pruned: PrunedView) -> ConfidenceMatrix:
    """Singleton-profile weights for Dirichlet opinions (not row-stochastic).

    Receptive rows amplify each neighbor share by that neighbor's
    full-frame mass; cautious rows keep the diagonal at 1 and leak in
    neighbor opinions scaled by the agent's own full-frame mass.
    """
    if not dst.is_dirichlet_table(state.masses, state.frame):
        raise NotDirichlet("dirichlet engine requires Dirichlet opinions")
    n = state.graph.n
    full = state.frame.full_set
    theta = state.masses[:, full]
    counts = pruned.neighbor_counts()
    alphas = state.alphas()
    receptive = np.array([s.strategy is Strategy.RECEPTIVE for s in state.specs])
    has = counts > 0
    safe = np.maximum(counts, 1)
    # receptive rows amplify each neighbor by that neighbor's full-frame mass;
    # cautious rows keep the diagonal at 1 and leak by their own full-frame mass
    rec_rows = (pruned.kept * ((1.0 - alphas) / safe)[:, None]) * (1.0 + theta)[None, :]
    cau_rows = pruned.kept * ((1.0 - alphas) * theta / safe)[:, None]
    w = np.where((receptive & has)[:, None], rec_rows,
                 np.where(has[:, None], cau_rows, 0.0))
    diag = np.where(receptive & has, alphas, 1.0)
    w[np.arange(n), np.arange(n)] = diag
    return ConfidenceMatrix(w, row_stochastic=False)


def pmf_step(state: NetworkState, pruned: PrunedView | None = None) -> NetworkState:
    if pruned is None:
        pruned = state.pruned()
    w = pmf_confidence_matrix(state, pruned).matrix
    cols = _singleton_columns(state.frame)
    new_masses = np.zeros_like(state.masses)
    new_masses[:, cols] = w @ state.masses[:, cols]
    return state.with_masses(new_masses)


def dirichlet_step(state: NetworkState, pruned: PrunedView | None = None) -> NetworkState:
    if pruned is None:
        pruned = state.pruned()
    w = dirichlet_confidence_matrix(state, pruned).matrix
    cols = _singleton_columns(state.frame)
    full = state.frame.full_set
    new_masses = np.zeros_like(state.masses)
    new_masses[:, cols] = w @ state.masses[:, cols]
    leftover = 1.0 - new_masses[:, cols].sum(axis=1)
    if leftover.min() < -1e-10:
        raise NotDirichlet(f"mass conservation violated by {leftover.min()!r}")
    new_masses[:, full] = np.clip(leftover, 0.0, None)
    return state.with_masses(new_masses)


def theta_weight_matrix(state: NetworkState, pruned: PrunedView) -> np.ndarray:
    """Self-weights plus full-frame conditional weights, as one matrix.

    Row sums bound the decay of the full-frame ("complete ambiguity") mass:
    while every row sum stays at most rho < 1, the largest full-frame mass
    shrinks at least geometrically with ratio rho.
    """
    n = state.graph.n
    bl_rows = dst.belief_table(state.masses)
    full = state.frame.full_set
    gamma = np.zeros((n, n))
    for i in range(1, n + 1):
        w = update_weights(i, state, pruned, bl_rows)
        gamma[i - 1, i - 1] = w.alpha
        for (j, a), b in w.beta.items():
            if a == full:
                gamma[i - 1, j - 1] += b
    return gamma


ENGINES: dict[str, Callable[[NetworkState, PrunedView], NetworkState]] = {
    "general": general_step,
    "pmf": pmf_step,
    "dirichlet": dirichlet_step,
}
