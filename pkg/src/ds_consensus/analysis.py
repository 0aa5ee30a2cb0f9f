"""Convergence, consensus, and cluster analysis for recorded runs.

The verifiers here consume the sequence of per-step confidence matrices
recorded by a simulation and check, numerically, the structure that makes
consensus provable:

- a *one-group-driven chain*: after reordering, every step's matrix is block
  lower triangular with a central block (the driving group) that never hears
  the outer agents; if the central group's accumulated product becomes
  rank-one and the outer block stays a strict infinity-norm contraction, the
  whole network adopts the central group's consensus.
- a *two-groups-driven chain*: two driving groups that hear neither each
  other nor the outer agents.  The outer agents reach their own consensus
  when every step splits its weight between the two groups in one common
  proportion (the weight-proportion condition), landing at the
  correspondingly weighted mix of the two groups' consensus opinions.

Reports are plain dicts, JSON-serializable as
``{"hypotheses": ..., "prediction": ..., "observed": ..., "match": ...}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import dst
from .dst import Frame
from .errors import NotDrivenChain, NotRankOne

CONTRACTION_SLACK = 1e-12   # row sums this close to 1 count as non-contractive
RANK_ONE_TOL = 1e-8
ZERO_BLOCK_TOL = 1e-14


def infinity_norm(x: np.ndarray) -> float:
    """Maximum absolute row sum."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return float(np.abs(x).sum(axis=1).max())


# ---------------------------------------------------------------------------
# Left (backward) matrix products
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LeftProduct:
    """Accumulated product of a matrix sequence, newest factor on the left."""

    matrix: np.ndarray
    count: int = 0

    @staticmethod
    def identity(n: int) -> "LeftProduct":
        return LeftProduct(np.eye(n), 0)


def left_product_accumulate(acc: LeftProduct, w: np.ndarray) -> LeftProduct:
    w = np.asarray(w, dtype=float)
    if w.shape != acc.matrix.shape:
        raise ValueError(f"size mismatch: {w.shape} vs {acc.matrix.shape}")
    return LeftProduct(w @ acc.matrix, acc.count + 1)


def rank_one_rows(w: np.ndarray, tol: float = RANK_ONE_TOL) -> np.ndarray:
    """Common row of a numerically rank-one stochastic limit, else NotRankOne."""
    w = np.asarray(w, dtype=float)
    gap = float(np.max(np.abs(w - w.mean(axis=0, keepdims=True))))
    if gap > tol:
        raise NotRankOne(f"rows differ by {gap!r} (tol {tol})")
    return w.mean(axis=0)


def check_consensus_rank_one(w_inf: np.ndarray, pi0: np.ndarray,
                             tol: float = RANK_ONE_TOL):
    """Consensus value(s) implied by a rank-one limit product.

    ``pi0`` holds one initial opinion profile per column; the return mirrors
    its shape.  Also checks that iterating the limit matrix on the profile
    actually lands on the consensus (within 1e-6).
    """
    v = rank_one_rows(w_inf, tol)
    if v.min() < -tol or abs(v.sum() - 1.0) > 1e-8:
        raise NotRankOne(f"limit row is not a stochastic vector: {v}")
    pi0 = np.asarray(pi0, dtype=float)
    eta = v @ pi0
    iterated = np.asarray(w_inf) @ pi0
    dev = float(np.max(np.abs(iterated - eta)))
    if dev > 1e-6:
        raise NotRankOne(f"iterated profile deviates from consensus by {dev!r}")
    return float(eta) if np.ndim(eta) == 0 else eta


# ---------------------------------------------------------------------------
# Cluster and convergence detection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClusterReport:
    frame: Frame
    clusters: tuple[tuple[int, ...], ...]   # 1-based agent ids, sorted
    representatives: np.ndarray             # one mean mass row per cluster
    tolerance: float
    consensus: bool
    near_tolerance: bool                    # two clusters closer than 2x tolerance
    converged: bool = False
    iterations: int = 0

    @property
    def cluster_count(self) -> int:
        return len(self.clusters)

    def cluster_of(self, agent: int) -> int:
        """1-based cluster id of a 1-based agent."""
        for c, members in enumerate(self.clusters):
            if agent in members:
                return c + 1
        raise ValueError(f"agent {agent} not in any cluster")

    def to_dict(self) -> dict:
        return {
            "clusters": [list(c) for c in self.clusters],
            "representatives": [dst.masses_to_dict(self.frame, row)
                                for row in self.representatives],
            "cluster_count": self.cluster_count,
            "consensus": self.consensus,
            "converged": self.converged,
            "iterations": self.iterations,
            "tolerance": self.tolerance,
            "near_tolerance": self.near_tolerance,
        }


def detect_clusters(opinions, tol: float, frame: Frame | None = None) -> ClusterReport:
    """Partition agents by transitive closure of pairwise distance <= tol."""
    if isinstance(opinions, np.ndarray):
        if frame is None:
            frame = Frame(int(np.log2(opinions.shape[1])))
        rows = opinions
    else:
        frame = opinions[0].frame
        rows = np.vstack([b.masses for b in opinions])
    n = rows.shape[0]
    dist = dst.pairwise_jousselme(rows, frame.size)
    close = dist <= tol
    unassigned = set(range(n))
    clusters: list[tuple[int, ...]] = []
    while unassigned:
        start = min(unassigned)
        stack, members = [start], {start}
        while stack:
            u = stack.pop()
            for v in np.nonzero(close[u])[0]:
                if v in members or v not in unassigned:
                    continue
                members.add(int(v))
                stack.append(int(v))
        unassigned -= members
        clusters.append(tuple(sorted(m + 1 for m in members)))
    clusters.sort(key=lambda c: c[0])
    reps = np.vstack([rows[[m - 1 for m in c]].mean(axis=0) for c in clusters])
    near = False
    if len(clusters) > 1:
        rep_dist = dst.pairwise_jousselme(reps, frame.size)
        off = rep_dist[~np.eye(len(clusters), dtype=bool)]
        near = bool(off.min() <= 2.0 * tol)
    return ClusterReport(frame, tuple(clusters), reps, tol,
                         consensus=len(clusters) == 1, near_tolerance=near)


def detect_convergence(window: Sequence[np.ndarray], step_tol: float = 1e-10,
                       persistence: int = 10) -> bool:
    """True when the trailing per-step changes all sit below the tolerance.

    The window holds consecutive mass tables; at least two are required.
    Convergence requires the last ``persistence`` steps (or every step, if
    the window is shorter) to change by less than ``step_tol``.
    """
    if len(window) < 2:
        raise ValueError("need at least two consecutive states")
    diffs = [float(np.max(np.abs(np.asarray(b) - np.asarray(a))))
             for a, b in zip(window[:-1], window[1:])]
    tail = diffs[-persistence:]
    return all(d < step_tol for d in tail)


# ---------------------------------------------------------------------------
# Group-driven chain structure
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DrivenChain:
    """Index bookkeeping for a block-triangular confidence structure."""

    kind: str                                 # "one-group" | "two-groups"
    groups: tuple[tuple[int, ...], ...]       # central groups, 1-based ids
    outer: tuple[int, ...]                    # remaining agents, 1-based

    def group_idx(self, g: int) -> np.ndarray:
        return np.array([a - 1 for a in self.groups[g]])

    @property
    def outer_idx(self) -> np.ndarray:
        return np.array([a - 1 for a in self.outer])

    def blocks(self, w: np.ndarray):
        """Extract (central blocks, coupling blocks, outer block) of one matrix."""
        w = np.asarray(w, dtype=float)
        out = self.outer_idx
        a_blocks = [w[np.ix_(self.group_idx(g), self.group_idx(g))]
                    for g in range(len(self.groups))]
        c_blocks = [w[np.ix_(out, self.group_idx(g))] for g in range(len(self.groups))]
        d = w[np.ix_(out, out)]
        return a_blocks, c_blocks, d


def classify_chain(w: np.ndarray, central_groups: Sequence[Sequence[int]],
                   tol: float = ZERO_BLOCK_TOL) -> DrivenChain:
    """Check the zero blocks that make ``central_groups`` driving groups.

    Every central agent must give zero weight to all outer agents and (for
    two groups) to the other central group.  Raises NotDrivenChain otherwise.
    """
    w = np.asarray(w, dtype=float)
    n = w.shape[0]
    groups = tuple(tuple(sorted(int(a) for a in g)) for g in central_groups)
    if not 1 <= len(groups) <= 2:
        raise NotDrivenChain(f"need one or two central groups, got {len(groups)}")
    central = [a for g in groups for a in g]
    if len(set(central)) != len(central):
        raise NotDrivenChain("central groups overlap")
    outer = tuple(a for a in range(1, n + 1) if a not in set(central))
    chain = DrivenChain("one-group" if len(groups) == 1 else "two-groups", groups, outer)
    for g in range(len(groups)):
        rows = chain.group_idx(g)
        forbidden = [chain.outer_idx] if len(groups) == 1 else \
            [chain.outer_idx, chain.group_idx(1 - g)]
        for cols in forbidden:
            if cols.size and rows.size:
                block = np.abs(w[np.ix_(rows, cols)])
                if block.size and block.max() > tol:
                    raise NotDrivenChain(
                        f"central group {g + 1} hears outside agents "
                        f"(weight {block.max()!r})")
    return chain


def _contraction_profile(norms: list[float], product_norm: float) -> dict:
    """How strongly the outer block forgets its own history.

    ``per_step`` reports the sufficient condition (every step's norm at most
    rho < 1): it fails whenever some outer agent hears no central agent
    directly at some step.  ``product_vanishes`` is the weaker working
    condition: the accumulated product of outer blocks tends to zero, i.e.
    central influence reaches every outer agent through paths over time.
    """
    contractive = [n < 1.0 - CONTRACTION_SLACK for n in norms]
    holds_from = None
    for k in range(len(norms)):
        if all(contractive[k:]):
            holds_from = k
            break
    rho = max(norms[holds_from:]) if holds_from is not None and norms[holds_from:] else None
    return {
        "per_step": bool(norms) and all(contractive),
        "holds_from_step": holds_from,
        "rho": rho,
        "max_norm": max(norms) if norms else None,
        "product_norm": product_norm,
        "product_vanishes": product_norm < 1e-6,
    }


def verify_one_group_chain(chain: DrivenChain, ws: Sequence[np.ndarray],
                           initial_profiles: np.ndarray,
                           final_profiles: np.ndarray,
                           match_tol: float = 1e-6) -> dict:
    """Check the one-group consensus theorem against a recorded run.

    Hypotheses: the central block's left product converges to rank one
    (the driving group reaches its own consensus), and the outer block is a
    strict contraction from some step on (every outer agent keeps hearing
    the central group, at least eventually).  Prediction: everyone adopts
    the central consensus.
    """
    if chain.kind != "one-group":
        raise NotDrivenChain("expected a one-group chain")
    norms = []
    a_prod = None
    d_prod = None
    for w in ws:
        chain_ok = classify_chain(w, chain.groups)  # raises if structure broke
        a_blocks, _, d = chain_ok.blocks(w)
        norms.append(infinity_norm(d) if d.size else 0.0)
        a_prod = a_blocks[0] if a_prod is None else a_blocks[0] @ a_prod
        d_prod = d if d_prod is None else d @ d_prod
    contraction = _contraction_profile(
        norms, infinity_norm(d_prod) if d_prod is not None and d_prod.size else 0.0)
    central = chain.group_idx(0)
    try:
        v = rank_one_rows(a_prod)
        central_rank_one = True
        eta = v @ np.asarray(initial_profiles)[central]
    except NotRankOne:
        central_rank_one = False
        eta = None
    satisfied = central_rank_one and contraction["product_vanishes"]
    report = {
        "kind": "one-group",
        "central": [list(g) for g in chain.groups],
        "outer": list(chain.outer),
        "steps": len(list(ws)),
        "hypotheses": {
            "central_product_rank_one": central_rank_one,
            "outer_contraction": contraction,
            "satisfied": satisfied,
        },
        "prediction": None,
        "observed": None,
        "match": False,
    }
    finals = np.asarray(final_profiles, dtype=float)
    if eta is not None:
        report["prediction"] = {"consensus_profile": [float(e) for e in np.atleast_1d(eta)]}
        dev = float(np.max(np.abs(finals - eta)))
        report["observed"] = {"max_deviation_from_prediction": dev}
        report["match"] = bool(satisfied and dev <= match_tol)
    return report


def _step_lambda(c_blocks: list[np.ndarray], tol: float = 1e-10):
    """Common split of outer weight between the two groups at one step.

    Returns (lambda_1, constrained) where ``constrained`` is False when no
    outer agent heard either group; None means no common split exists.
    """
    c1 = c_blocks[0].sum(axis=1)
    c2 = c_blocks[1].sum(axis=1)
    total = c1 + c2
    defined = total > 0.0
    if not defined.any():
        return None, False
    lam = c2[defined] / total[defined]
    if lam.max() - lam.min() > tol:
        return None, True
    value = float(lam.mean())
    if not 0.0 < value < 1.0:
        return None, True
    return value, True


def verify_two_group_chain(chain: DrivenChain, ws: Sequence[np.ndarray],
                           initial_profiles: np.ndarray,
                           final_profiles: np.ndarray,
                           match_tol: float = 1e-3) -> dict:
    """Check the two-group theorem: consensus iff the groups' consensus
    opinions agree; otherwise the outer agents still reach their own cluster
    when every step splits outer weight between the groups in one common
    proportion, landing at that proportion's mix of the group opinions.
    """
    if chain.kind != "two-groups":
        raise NotDrivenChain("expected a two-groups chain")
    norms = []
    a_prods = [None, None]
    d_prod = None
    lambdas: list[float | None] = []
    condition_every_step = True
    constrained_steps = 0
    for w in ws:
        chain_ok = classify_chain(w, chain.groups)
        a_blocks, c_blocks, d = chain_ok.blocks(w)
        norms.append(infinity_norm(d) if d.size else 0.0)
        d_prod = d if d_prod is None else d @ d_prod
        for g in range(2):
            a_prods[g] = a_blocks[g] if a_prods[g] is None else a_blocks[g] @ a_prods[g]
        lam, constrained = _step_lambda(c_blocks)
        if constrained:
            constrained_steps += 1
            if lam is None:
                condition_every_step = False
            else:
                lambdas.append(lam)
    contraction = _contraction_profile(
        norms, infinity_norm(d_prod) if d_prod is not None and d_prod.size else 0.0)
    initial = np.asarray(initial_profiles, dtype=float)
    group_eta = []
    groups_rank_one = True
    for g in range(2):
        try:
            v = rank_one_rows(a_prods[g])
            group_eta.append(v @ initial[chain.group_idx(g)])
        except NotRankOne:
            groups_rank_one = False
            group_eta.append(None)
    lam_values = [l for l in lambdas if l is not None]
    lam_constant = bool(lam_values) and (max(lam_values) - min(lam_values) <= 1e-10)
    lam_final = lam_values[-1] if lam_values else None
    leaders_equal = None
    if groups_rank_one:
        leaders_equal = bool(np.max(np.abs(group_eta[0] - group_eta[1])) <= 1e-9)
    report = {
        "kind": "two-groups",
        "central": [list(g) for g in chain.groups],
        "outer": list(chain.outer),
        "steps": len(list(ws)),
        "hypotheses": {
            "group_products_rank_one": groups_rank_one,
            "outer_contraction": contraction,
            "weight_proportion_every_step": condition_every_step,
            "weight_proportion_constant": lam_constant,
            "constrained_steps": constrained_steps,
            "lambda_1": lam_final,
        },
        "prediction": None,
        "observed": None,
        "match": False,
    }
    if not groups_rank_one:
        return report
    finals = np.asarray(final_profiles, dtype=float)
    eta1, eta2 = np.atleast_1d(group_eta[0]), np.atleast_1d(group_eta[1])
    if leaders_equal:
        report["prediction"] = {
            "full_consensus": True,
            "consensus_profile": [float(e) for e in eta1],
        }
        dev = float(np.max(np.abs(finals - eta1)))
        report["observed"] = {"max_deviation_from_prediction": dev}
        report["match"] = bool(dev <= match_tol)
        return report
    spread = float(np.max(finals.max(axis=0) - finals.min(axis=0))) if finals.size else 0.0
    prediction: dict = {"full_consensus": False, "group_profiles":
                        [[float(e) for e in eta1], [float(e) for e in eta2]]}
    observed: dict = {"all_agent_spread": spread,
                      "no_consensus_observed": bool(spread > match_tol)}
    match = observed["no_consensus_observed"]
    if condition_every_step and lam_final is not None and chain.outer:
        follower = (1.0 - lam_final) * eta1 + lam_final * eta2
        prediction["outer_cluster_profile"] = [float(e) for e in follower]
        outer_final = finals[chain.outer_idx]
        dev = float(np.max(np.abs(outer_final - follower)))
        observed["outer_max_deviation"] = dev
        match = match and dev <= match_tol
    report["prediction"] = prediction
    report["observed"] = observed
    report["match"] = bool(match)
    return report
