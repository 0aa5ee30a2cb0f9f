"""
Exact Dempster-Shafer primitives over small frames of discernment.

Conventions used throughout the package:

- A frame with ``M`` singletons (``M <= 16``) indexes its ``2**M`` subsets by
  unsigned bitmask: bit ``p`` set means singleton ``p+1`` is a member.
  Mask ``0`` is the empty set, ``2**M - 1`` the full frame.
- A mass function is a dense float array of length ``2**M`` indexed by
  bitmask, with ``m[0] == 0`` and total mass 1.
- ``belief(A) = sum of m(B) over B subset of A`` and
  ``plausibility(A) = 1 - belief(complement of A)``.
- Conditionals follow the Fagin-Halpern rule:
  ``Bl(B|A) = Bl(A & B) / (Bl(A & B) + Pl(A & ~B))`` and the dual with
  Bl and Pl exchanged.  They reduce to Bayes' rule on Bayesian masses.
- Distances between bodies of evidence use the Jaccard-weighted quadratic
  form (Jousselme distance), which lives in [0, 1].

All values are immutable after construction; every function is pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import ConditioningNotSupported, FrameMismatch, NotABeliefFunction

MAX_FRAME_SIZE = 16

# Tolerances: exact algebraic identities vs. results of iterated arithmetic.
ALGEBRAIC_TOL = 1e-12
ITERATED_TOL = 1e-9

# Dense Jaccard matrices are cached per frame size; above this the 4**M
# footprint stops being worth materializing and the quadratic form is
# evaluated on the nonzero support instead.
_DENSE_JACCARD_LIMIT = 10
_jaccard_cache: dict[int, np.ndarray] = {}


@dataclass(frozen=True)
class Frame:
    """A frame of discernment: ``size`` mutually exclusive singletons."""

    size: int
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if not 1 <= self.size <= MAX_FRAME_SIZE:
            raise ValueError(f"frame size must be in [1, {MAX_FRAME_SIZE}], got {self.size}")
        if self.labels is not None and len(self.labels) != self.size:
            raise ValueError("label count must equal frame size")

    @property
    def n_subsets(self) -> int:
        return 1 << self.size

    @property
    def full_set(self) -> int:
        return (1 << self.size) - 1


# ---------------------------------------------------------------------------
# Proposition (bitmask) helpers
# ---------------------------------------------------------------------------

def prop_from_indices(indices: Iterable[int]) -> int:
    """Bitmask of the subset containing the given 1-based singleton indices."""
    mask = 0
    for i in indices:
        if i < 1:
            raise ValueError(f"singleton indices are 1-based, got {i}")
        mask |= 1 << (i - 1)
    return mask


def prop_to_indices(mask: int) -> tuple[int, ...]:
    """1-based singleton indices contained in a bitmask, ascending."""
    out = []
    i = 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def prop_to_str(mask: int, frame: Frame) -> str:
    """Serialize a subset: comma-joined 1-based indices, ``*`` for the full frame."""
    if mask == frame.full_set:
        return "*"
    return ",".join(str(i) for i in prop_to_indices(mask))


def prop_from_str(text: str, frame: Frame) -> int:
    text = text.strip()
    if text == "*":
        return frame.full_set
    if not text:
        return 0
    mask = prop_from_indices(int(part) for part in text.split(","))
    if mask >= frame.n_subsets:
        raise ValueError(f"proposition {text!r} exceeds frame of size {frame.size}")
    return mask


# ---------------------------------------------------------------------------
# Mass / belief table transforms (vectorized over leading axes)
# ---------------------------------------------------------------------------

def belief_table(masses: np.ndarray) -> np.ndarray:
    """Belief of every subset from a mass table (subset-sum zeta transform)."""
    bl = np.array(masses, dtype=float, copy=True)
    n = bl.shape[-1]
    bits = n.bit_length() - 1
    for b in range(bits):
        step = 1 << b
        idx = np.arange(n)
        has = (idx & step) != 0
        bl[..., has] += bl[..., idx[has] ^ step]
    return bl


def mass_table(beliefs: np.ndarray) -> np.ndarray:
    """Invert :func:`belief_table` (Moebius inversion over the subset lattice)."""
    m = np.array(beliefs, dtype=float, copy=True)
    n = m.shape[-1]
    bits = n.bit_length() - 1
    for b in range(bits):
        step = 1 << b
        idx = np.arange(n)
        has = (idx & step) != 0
        m[..., has] -= m[..., idx[has] ^ step]
    return m


def plausibility_table(bl: np.ndarray) -> np.ndarray:
    """Plausibility of every subset given the full belief table."""
    # Pl(A) = 1 - Bl(~A); complement of mask A is full - A, i.e. reversed order.
    return 1.0 - bl[..., ::-1]


# ---------------------------------------------------------------------------
# Body of evidence
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BodyOfEvidence:
    """An agent opinion: a frame plus a dense mass table indexed by bitmask.

    Construction validates the mass axioms (``m[0] == 0``, total mass 1,
    non-negativity up to float noise) and freezes the array.
    """

    frame: Frame
    masses: np.ndarray
    _bl: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        m = np.asarray(self.masses, dtype=float)
        if m.shape != (self.frame.n_subsets,):
            raise ValueError(f"expected {self.frame.n_subsets} masses, got shape {m.shape}")
        report = validate_masses(self.frame, m)
        if not report.ok:
            raise ValueError("invalid mass assignment: " + "; ".join(report.issues))
        m = m.copy()
        m[m < 0.0] = 0.0  # clamp float noise within the accepted -1e-12 band
        m.setflags(write=False)
        object.__setattr__(self, "masses", m)

    @property
    def bl(self) -> np.ndarray:
        """Cached belief table over all subsets."""
        if self._bl is None:
            bl = belief_table(self.masses)
            bl.setflags(write=False)
            object.__setattr__(self, "_bl", bl)
        return self._bl

    @property
    def pl(self) -> np.ndarray:
        return plausibility_table(self.bl)

    def belief(self, a: int) -> float:
        return float(self.bl[a])

    def plausibility(self, a: int) -> float:
        return 1.0 - float(self.bl[self.frame.full_set ^ a])

    def conditional_belief(self, b: int, a: int) -> float:
        """Fagin-Halpern conditional belief of ``b`` given ``a``."""
        if self.bl[a] <= 0.0:
            raise ConditioningNotSupported(f"belief of conditioning set {a:#x} is zero")
        bl, pl = self.bl, self.pl
        num = bl[a & b]
        den = num + pl[a & (self.frame.full_set ^ b)]
        return float(num / den) if den > 0.0 else 0.0

    def conditional_plausibility(self, b: int, a: int) -> float:
        """Fagin-Halpern conditional plausibility of ``b`` given ``a``."""
        if self.bl[a] <= 0.0:
            raise ConditioningNotSupported(f"belief of conditioning set {a:#x} is zero")
        bl, pl = self.bl, self.pl
        num = pl[a & b]
        den = num + bl[a & (self.frame.full_set ^ b)]
        return float(num / den) if den > 0.0 else 0.0

    def focal_elements(self) -> tuple[int, ...]:
        return tuple(int(a) for a in np.nonzero(self.masses > 0.0)[0])


def conditional_belief_vector(boe: BodyOfEvidence, a: int) -> np.ndarray:
    """``Bl(B|a)`` for every subset ``B`` at once."""
    if boe.bl[a] <= 0.0:
        raise ConditioningNotSupported(f"belief of conditioning set {a:#x} is zero")
    full = boe.frame.full_set
    bs = np.arange(boe.frame.n_subsets)
    num = boe.bl[a & bs]
    den = num + boe.pl[a & (full ^ bs)]
    out = np.zeros_like(num)
    np.divide(num, den, out=out, where=den > 0.0)
    return out


# ---------------------------------------------------------------------------
# Validation and classification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    issues: tuple[str, ...]
    category: str  # "vacuous" | "bayesian" | "dirichlet" | "general" | "invalid"
    is_bayesian: bool
    is_dirichlet: bool
    is_vacuous: bool


def _classify(frame: Frame, masses: np.ndarray) -> tuple[str, bool, bool, bool]:
    focal = np.nonzero(masses > 0.0)[0]
    singletons = {1 << p for p in range(frame.size)}
    vacuous = set(focal) == {frame.full_set}
    bayesian = all(int(a) in singletons for a in focal)
    dirichlet = all(int(a) in singletons or int(a) == frame.full_set for a in focal)
    if vacuous:
        category = "vacuous"
    elif bayesian:
        category = "bayesian"
    elif dirichlet:
        category = "dirichlet"
    else:
        category = "general"
    return category, bayesian, dirichlet, vacuous


def validate_masses(frame: Frame, masses: np.ndarray) -> ValidationReport:
    """Report-style check of the mass axioms plus a class label.

    Classes: vacuous (all mass on the frame), bayesian (singleton focal
    elements only), dirichlet (singletons plus the frame), general.
    A vacuous or bayesian assignment is also dirichlet.
    """
    m = np.asarray(masses, dtype=float)
    issues = []
    if m.shape != (frame.n_subsets,):
        return ValidationReport(False, (f"expected {frame.n_subsets} masses",), "invalid",
                                False, False, False)
    if m[0] != 0.0:
        issues.append(f"mass of the empty set must be 0, got {m[0]!r}")
    if abs(m.sum() - 1.0) > ALGEBRAIC_TOL:
        issues.append(f"total mass must be 1, got {m.sum()!r}")
    if m.min() < -ALGEBRAIC_TOL:
        issues.append(f"negative mass {m.min()!r}")
    if issues:
        return ValidationReport(False, tuple(issues), "invalid", False, False, False)
    category, bayesian, dirichlet, vacuous = _classify(frame, m)
    return ValidationReport(True, (), category, bayesian, dirichlet, vacuous)


def validate(boe: BodyOfEvidence) -> ValidationReport:
    return validate_masses(boe.frame, boe.masses)


def is_bayesian_table(masses: np.ndarray, frame: Frame) -> bool:
    """True when only singleton columns carry mass (rows may be stacked)."""
    m = np.atleast_2d(masses)
    keep = np.zeros(frame.n_subsets, dtype=bool)
    for p in range(frame.size):
        keep[1 << p] = True
    return bool(np.all(np.abs(m[:, ~keep]) <= ALGEBRAIC_TOL))


def is_dirichlet_table(masses: np.ndarray, frame: Frame) -> bool:
    """True when only singletons and the full frame carry mass."""
    m = np.atleast_2d(masses)
    keep = np.zeros(frame.n_subsets, dtype=bool)
    for p in range(frame.size):
        keep[1 << p] = True
    keep[frame.full_set] = True
    return bool(np.all(np.abs(m[:, ~keep]) <= ALGEBRAIC_TOL))


# ---------------------------------------------------------------------------
# Moebius recovery of masses from beliefs
# ---------------------------------------------------------------------------

def masses_from_beliefs(frame: Frame, beliefs: np.ndarray) -> BodyOfEvidence:
    """Recover the mass function whose belief table equals ``beliefs``.

    Raises :class:`NotABeliefFunction` when the recovered masses go below
    ``-1e-9`` (the input was not monotone enough to be a belief function);
    smaller negative excursions are clamped to 0 and the table renormalized.
    """
    bl = np.asarray(beliefs, dtype=float)
    if bl.shape != (frame.n_subsets,):
        raise ValueError(f"expected {frame.n_subsets} belief values, got shape {bl.shape}")
    if abs(bl[0]) > ALGEBRAIC_TOL:
        raise ValueError(f"belief of the empty set must be 0, got {bl[0]!r}")
    if abs(bl[frame.full_set] - 1.0) > ITERATED_TOL:
        raise ValueError(f"belief of the full frame must be 1, got {bl[frame.full_set]!r}")
    m = mass_table(bl)
    worst = m.min()
    if worst < -ITERATED_TOL:
        raise NotABeliefFunction(f"recovered mass {worst!r} below -{ITERATED_TOL}")
    m[0] = 0.0
    np.clip(m, 0.0, None, out=m)
    m /= m.sum()
    return BodyOfEvidence(frame, m)


# ---------------------------------------------------------------------------
# Jousselme distance
# ---------------------------------------------------------------------------

def jaccard_matrix(size: int) -> np.ndarray:
    """Jaccard similarity ``|A & B| / |A | B|`` over all subset pairs.

    The empty/empty entry is defined as 0; cached per frame size.
    """
    if size in _jaccard_cache:
        return _jaccard_cache[size]
    if size > _DENSE_JACCARD_LIMIT:
        raise ValueError(f"dense Jaccard matrix not materialized for size {size}")
    masks = np.arange(1 << size, dtype=np.uint32)
    inter = np.bitwise_count(masks[:, None] & masks[None, :]).astype(float)
    union = np.bitwise_count(masks[:, None] | masks[None, :]).astype(float)
    d = np.divide(inter, union, out=np.zeros_like(inter), where=union > 0)
    d.setflags(write=False)
    _jaccard_cache[size] = d
    return d


def _quadratic_distance(diff: np.ndarray, size: int) -> float:
    if size <= _DENSE_JACCARD_LIMIT:
        d = jaccard_matrix(size)
        q = 0.5 * float(diff @ d @ diff)
    else:
        support = np.nonzero(diff)[0].astype(np.uint64)
        sub = diff[support.astype(int)]
        inter = np.bitwise_count(support[:, None] & support[None, :]).astype(float)
        union = np.bitwise_count(support[:, None] | support[None, :]).astype(float)
        jac = np.divide(inter, union, out=np.zeros_like(inter), where=union > 0)
        q = 0.5 * float(sub @ jac @ sub)
    return float(np.sqrt(min(max(q, 0.0), 1.0)))


def jousselme_distance(e1: BodyOfEvidence, e2: BodyOfEvidence) -> float:
    """Jaccard-weighted quadratic-form distance between two opinions, in [0, 1]."""
    if e1.frame != e2.frame:
        raise FrameMismatch(f"frames differ: {e1.frame} vs {e2.frame}")
    return _quadratic_distance(e1.masses - e2.masses, e1.frame.size)


def pairwise_jousselme(mass_rows: np.ndarray, size: int) -> np.ndarray:
    """All pairwise distances between stacked mass rows (shape N x 2**size)."""
    d = jaccard_matrix(size)
    g = mass_rows @ d @ mass_rows.T
    diag = np.diag(g)
    sq = 0.5 * (diag[:, None] + diag[None, :] - 2.0 * g)
    np.clip(sq, 0.0, 1.0, out=sq)
    return np.sqrt(sq)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def canonical_order(frame: Frame) -> tuple[int, ...]:
    """Subset masks ordered by cardinality, then lexicographically by members.

    This is the conventional mass-vector ordering (empty set, singletons,
    pairs, ...); storage and the distance form use bitmask order instead, and
    the distance value does not depend on the choice.
    """
    return tuple(sorted(range(frame.n_subsets),
                        key=lambda a: (a.bit_count(), prop_to_indices(a))))


def canonical_masses(boe: BodyOfEvidence) -> np.ndarray:
    """The mass vector in canonical order (documentation/serialization view)."""
    return boe.masses[list(canonical_order(boe.frame))]


def masses_to_dict(frame: Frame, masses: np.ndarray) -> dict:
    """JSON form: propositions as comma-joined 1-based indices, ``*`` the frame."""
    out: dict[str, float] = {}
    for a in np.nonzero(np.asarray(masses) != 0.0)[0]:
        out[prop_to_str(int(a), frame)] = float(masses[a])
    return out


def boe_to_dict(boe: BodyOfEvidence) -> dict:
    return {"frame_size": boe.frame.size, "masses": masses_to_dict(boe.frame, boe.masses)}


def masses_from_dict(frame: Frame, entries: Mapping[str, float]) -> np.ndarray:
    m = np.zeros(frame.n_subsets)
    for key, value in entries.items():
        m[prop_from_str(key, frame)] = float(value)
    return m


def boe_from_dict(data: Mapping, frame: Frame | None = None) -> BodyOfEvidence:
    if frame is None:
        frame = Frame(int(data["frame_size"]))
    return BodyOfEvidence(frame, masses_from_dict(frame, data["masses"]))
