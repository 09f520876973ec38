"""Forward refutation sequents and one application function per rule.

Two sequent shapes over a goal universe: regular ``Gamma => C`` (some world
forces Gamma and refutes C) and irregular ``Sigma ; Theta -> C`` whose left
side is split into a stable part Sigma, preserved by joins, and a losable
part Theta.  Left sides live inside the atom/implication slice of the left
subformulas; right sides are right subformulas.

Rule functions are pure: they validate the side conditions and build fresh
canonical sequents, raising :class:`NotApplicable` (with the violated
condition named) otherwise.  Premise-set enumeration for the join rules
lives in the search module; this one only builds single instances.
"""

from __future__ import annotations

from itertools import combinations
from typing import Iterable, NamedTuple

from .formula import (AND, IMP, OR, Formula, GoalUniverse, iter_bits, to_text)


class NotApplicable(ValueError):
    pass


class Sequent:
    """A canonical sequent; equal content gives equal (hashable) values."""

    __slots__ = ("u", "regular", "gamma", "sigma", "theta", "rhs", "_hash")

    def __init__(self, u: GoalUniverse, regular: bool, gamma: int, sigma: int,
                 theta: int, rhs: int):
        self.u = u
        self.regular = regular
        self.gamma = gamma
        self.sigma = sigma
        self.theta = theta
        self.rhs = rhs
        self._hash = hash((regular, gamma, sigma, theta, rhs))

    @property
    def lhs(self) -> int:
        return self.gamma if self.regular else (self.sigma | self.theta)

    @property
    def key(self) -> tuple:
        return (self.regular, self.gamma, self.sigma, self.theta, self.rhs)

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, Sequent) and self.u is other.u
                and self.key == other.key)

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"<{self.render()}>"

    def render(self) -> str:
        u = self.u
        rhs = to_text(u.sf[self.rhs])
        if self.regular:
            return f"{u.render_mask(self.gamma)} => {rhs}"
        return f"{u.render_mask(self.sigma)} ; {u.render_mask(self.theta)} -> {rhs}"

    def rhs_formula(self) -> Formula:
        return self.u.sf[self.rhs]


def regular(u: GoalUniverse, gamma: int, rhs: int) -> Sequent:
    if gamma & ~u.gbar:
        raise ValueError("left side outside the atom/implication slice")
    if not (u.sfr >> rhs) & 1:
        raise ValueError("right side is not a right subformula")
    return Sequent(u, True, gamma, 0, 0, rhs)


def irregular(u: GoalUniverse, sigma: int, theta: int, rhs: int) -> Sequent:
    if (sigma | theta) & ~u.gbar:
        raise ValueError("left side outside the atom/implication slice")
    if sigma & theta:
        raise ValueError("stable and losable parts overlap")
    if not (u.sfr >> rhs) & 1:
        raise ValueError("right side is not a right subformula")
    return Sequent(u, False, 0, sigma, theta, rhs)


class Weight(NamedTuple):
    """Lexicographic sequent weight; strictly drops premise -> conclusion."""
    closure_count: int
    type_bit: int
    rhs_gap: int


def weight(s: Sequent) -> Weight:
    u = s.u
    return Weight(u.closure_count(s.lhs), 0 if s.regular else 1,
                  u.goal_size - u.sizes[s.rhs])


def subsumes(s1: Sequent, s2: Sequent) -> bool:
    """s1 is redundant given s2: same right side and a bigger-or-equal left.

    Regular: Gamma1 within Gamma2.  Irregular: equal stable parts and
    Theta1 within Theta2.
    """
    if s1.regular != s2.regular or s1.rhs != s2.rhs:
        return False
    if s1.regular:
        return not (s1.gamma & ~s2.gamma)
    return s1.sigma == s2.sigma and not (s1.theta & ~s2.theta)


# ---------------------------------------------------------------------------
# Axioms
# ---------------------------------------------------------------------------

def axioms(u: GoalUniverse) -> list[Sequent]:
    """For every prime right subformula F: the regular axiom keeps all left
    atoms but F; the irregular one additionally carries every left
    implication in its losable part."""
    out = []
    for f in u.prime_rhs:
        others = u.gat & ~(1 << f)
        out.append(regular(u, others, f))
        out.append(irregular(u, 0, others | u.gimp, f))
    return out


# ---------------------------------------------------------------------------
# Single-premise right rules
# ---------------------------------------------------------------------------

def _target_pos(u: GoalUniverse, target: Formula) -> int:
    t = u.pos.get(target.id)
    if t is None or not (u.sfr >> t) & 1:
        raise NotApplicable(f"{to_text(target)} is not a right subformula")
    return t


def apply_and(premise: Sequent, target: Formula) -> Sequent:
    u = premise.u
    t = _target_pos(u, target)
    if target.kind != AND:
        raise NotApplicable("target is not a conjunction")
    if premise.rhs not in (u.pos[target.left.id], u.pos[target.right.id]):
        raise NotApplicable("premise right side is not a conjunct of the target")
    if premise.regular:
        return Sequent(u, True, premise.gamma, 0, 0, t)
    return Sequent(u, False, 0, premise.sigma, premise.theta, t)


def apply_or(p1: Sequent, p2: Sequent, target: Formula) -> Sequent:
    u = p1.u
    t = _target_pos(u, target)
    if target.kind != OR:
        raise NotApplicable("target is not a disjunction")
    if p1.regular or p2.regular:
        raise NotApplicable("both premises must be irregular")
    if p1.rhs != u.pos[target.left.id] or p2.rhs != u.pos[target.right.id]:
        raise NotApplicable("premise right sides do not match the disjuncts")
    if p1.sigma & ~(p2.sigma | p2.theta):
        raise NotApplicable("first stable part not covered by the second premise")
    if p2.sigma & ~(p1.sigma | p1.theta):
        raise NotApplicable("second stable part not covered by the first premise")
    sigma = p1.sigma | p2.sigma
    # The intersection is already disjoint from sigma (each premise keeps its
    # own stable part out of its losable part); the mask-out is a no-op kept
    # to make the invariant locally obvious.
    theta = (p1.theta & p2.theta) & ~sigma
    return Sequent(u, False, 0, sigma, theta, t)


def apply_imp_in_regular(premise: Sequent, target: Formula) -> Sequent:
    u = premise.u
    t = _target_pos(u, target)
    if target.kind != IMP:
        raise NotApplicable("target is not an implication")
    if not premise.regular:
        raise NotApplicable("premise must be regular")
    if premise.rhs != u.pos[target.right.id]:
        raise NotApplicable("premise right side is not the consequent")
    a = u.pos[target.left.id]
    if not (u.closure(premise.gamma) >> a) & 1:
        raise NotApplicable("antecedent not in the closure of the left side")
    return Sequent(u, True, premise.gamma, 0, 0, t)


def minimal_shifts(u: GoalUniverse, sigma: int, theta: int, a: int) -> list[int]:
    """Minimal subsets of ``theta`` whose shift puts ``a`` in the closure.

    Returns every mask L, subset of theta, inclusion-minimal with
    a in closure(sigma | L); candidates are enumerated by cardinality then
    position order, pruning supersets of found solutions.
    """
    if not (u.closure(sigma | theta) >> a) & 1:
        return []
    if (u.closure(sigma) >> a) & 1:
        return [0]
    elems = list(iter_bits(theta))
    sols: list[int] = []
    for k in range(1, len(elems) + 1):
        for combo in combinations(elems, k):
            lam = 0
            for i in combo:
                lam |= 1 << i
            if any(not (sol & ~lam) for sol in sols):
                continue
            if (u.closure(sigma | lam) >> a) & 1:
                sols.append(lam)
    return sols


def maximal_avoiding(u: GoalUniverse, available: int, a: int, require: int = 0,
                     ) -> list[int]:
    """Maximal T with require <= T <= available and ``a`` not in closure(T).

    Enumerated through the complement: minimal removal sets R inside
    ``available & ~require`` with a not in closure(available & ~R).
    """
    if (u.closure(require) >> a) & 1:
        return []
    removable = available & ~require
    if not (u.closure(available) >> a) & 1:
        return [available]
    elems = list(iter_bits(removable))
    sols: list[int] = []
    for k in range(1, len(elems) + 1):
        for combo in combinations(elems, k):
            r = 0
            for i in combo:
                r |= 1 << i
            if any(not (sol & ~r) for sol in sols):
                continue
            if not (u.closure(available & ~r) >> a) & 1:
                sols.append(r)
    return [available & ~r for r in sols]


def apply_imp_in_irregular(premise: Sequent, target: Formula) -> list[Sequent]:
    """All shifts of a minimal losable chunk into the stable part that make
    the antecedent available; empty when no shift works."""
    u = premise.u
    if premise.regular or target.kind != IMP:
        return []
    t = u.pos.get(target.id)
    if t is None or not (u.sfr >> t) & 1:
        return []
    if premise.rhs != u.pos[target.right.id]:
        return []
    a = u.pos[target.left.id]
    out = []
    for lam in minimal_shifts(u, premise.sigma, premise.theta, a):
        out.append(Sequent(u, False, 0, premise.sigma | lam, premise.theta & ~lam, t))
    return out


def apply_imp_notin(premise: Sequent, target: Formula) -> list[Sequent]:
    """Regular premise to irregular conclusions with empty stable part: one
    per maximal losable set that still leaves the antecedent underivable."""
    u = premise.u
    if not premise.regular or target.kind != IMP:
        return []
    t = u.pos.get(target.id)
    if t is None or not (u.sfr >> t) & 1:
        return []
    if premise.rhs != u.pos[target.right.id]:
        return []
    a = u.pos[target.left.id]
    cl = u.closure(premise.gamma)
    if not (cl >> a) & 1:
        return []
    available = cl & u.gbar
    return [Sequent(u, False, 0, 0, th, t)
            for th in maximal_avoiding(u, available, a)]


# ---------------------------------------------------------------------------
# Join rules
# ---------------------------------------------------------------------------

def _join_parts(premises: list[Sequent]) -> tuple[int, int, int, int, set[int]]:
    u = premises[0].u
    ups = {p.rhs for p in premises}
    for i, pi in enumerate(premises):
        for j, pj in enumerate(premises):
            if i != j and pi.sigma & ~(pj.sigma | pj.theta):
                raise NotApplicable(
                    "stable parts not pairwise covered "
                    f"({pi.render()} vs {pj.render()})")
    sig_at = sig_imp = 0
    th_at = th_imp = u.full_mask
    for p in premises:
        sig_at |= p.sigma & u.var_mask
        sig_imp |= p.sigma & u.imp_mask
        th_at &= p.theta & u.var_mask
        th_imp &= p.theta & u.imp_mask
    for i in iter_bits(sig_imp):
        if u.ante[i] not in ups:
            raise NotApplicable(
                f"stable implication {to_text(u.sf[i])} is unsupported")
    th_imp_restricted = 0
    for i in iter_bits(th_imp):
        if u.ante[i] in ups:
            th_imp_restricted |= 1 << i
    return sig_at, sig_imp, th_at, th_imp_restricted, ups


def apply_join(premises: Iterable[Sequent], flavor: str, target: Formula) -> Sequent:
    """Join irregular premises into one regular sequent.

    ``flavor`` is "at" (prime right side) or "or" (disjunction right side).
    Validates the pairwise-coverage and support side conditions plus the
    search restrictions that every joined right side must occur as an
    antecedent on the left of the goal (or, for "or", as a disjunct on the
    right).
    """
    premises = list(premises)
    if not premises:
        raise NotApplicable("a join needs at least one premise")
    u = premises[0].u
    if any(p.regular for p in premises):
        raise NotApplicable("join premises must be irregular")
    sig_at, sig_imp, th_at, th_imp, ups = _join_parts(premises)
    t = _target_pos(u, target)
    if flavor == "at":
        for y in ups:
            if not (u.ps3_mask >> y) & 1:
                raise NotApplicable(
                    f"{to_text(u.sf[y])} is not an antecedent on the left of the goal")
        if not (u.prime_mask >> t) & 1:
            raise NotApplicable("target is not prime")
        if (sig_at >> t) & 1:
            raise NotApplicable("target occurs in the joined stable atoms")
        gamma = sig_at | (th_at & ~(1 << t)) | sig_imp | th_imp
        return Sequent(u, True, gamma, 0, 0, t)
    if flavor == "or":
        for y in ups:
            if not (u.ps4_mask >> y) & 1:
                raise NotApplicable(
                    f"{to_text(u.sf[y])} is neither a left antecedent "
                    "nor a right disjunct")
        if target.kind != OR:
            raise NotApplicable("target is not a disjunction")
        if u.pos[target.left.id] not in ups or u.pos[target.right.id] not in ups:
            raise NotApplicable("both disjuncts must occur among the premises")
        gamma = sig_at | th_at | sig_imp | th_imp
        return Sequent(u, True, gamma, 0, 0, t)
    raise NotApplicable(f"unknown join flavor {flavor!r}")
