"""Forward saturation: databases, subsumption, join scheduling, search.

The loop inserts the axioms, then repeatedly applies every rule instance
with at least one premise proved in the last iteration, discarding
conclusions subsumed by the database (forward subsumption).  With backward
subsumption on, inserting a strictly stronger sequent retires the weaker
entries and, transitively, every entry whose stored derivation used one;
retired store nodes are tombstoned, never deleted, so earlier proofs stay
replayable.

Join rules are driven by an incrementally maintained list of candidate
premise sets: pairwise coverage of the stable parts, pairwise distinct
right sides, and every right side admissible as a join participant (it
must occur as an antecedent on the left of the goal, or as a disjunct on
the right).  Sets whose stable implications are not yet supported stay
pending until a supporting premise arrives.

The minimal-height strategy delays joins: conclusions of join rank above
the current wave are held back, and the wave only increases once
everything else has saturated.  The first wave at which a goal sequent
appears is then the least possible join depth, i.e. the minimal
countermodel height.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .formula import Formula, GoalUniverse, build_universe, iter_bits
from .rules import Sequent, axioms, minimal_shifts, maximal_avoiding, subsumes

AX_REG, AX_IRR = "ax=>", "ax->"
RULE_AND, RULE_OR, RULE_IMP_IN, RULE_IMP_NOTIN = "and", "or", "imp-in", "imp-notin"
JOIN_AT, JOIN_OR = "join-at", "join-or"
JOIN_RULES = (JOIN_AT, JOIN_OR)


class IterationBudgetExceeded(RuntimeError):
    pass


class StoreNode:
    __slots__ = ("seq", "rule", "premises", "iteration", "rank")

    def __init__(self, seq: Sequent, rule: str, premises: tuple[int, ...],
                 iteration: int, rank: int):
        self.seq = seq
        self.rule = rule
        self.premises = premises
        self.iteration = iteration
        self.rank = rank


class DerivationStore:
    """Append-only DAG of proved sequents with rule labels and premise links.

    One node per sequent; re-derivations of a stored sequent keep the first
    derivation.  ``consumers`` inverts the premise links for backward
    subsumption cascades.
    """

    def __init__(self, universe: GoalUniverse):
        self.u = universe
        self.nodes: list[StoreNode] = []
        self.by_key: dict[tuple, int] = {}
        self.consumers: dict[int, list[int]] = {}

    def add(self, seq: Sequent, rule: str, premises: tuple[int, ...],
            iteration: int, rank: int) -> tuple[int, bool]:
        nid = self.by_key.get(seq.key)
        if nid is not None:
            return nid, False
        nid = len(self.nodes)
        self.nodes.append(StoreNode(seq, rule, premises, iteration, rank))
        self.by_key[seq.key] = nid
        for p in premises:
            self.consumers.setdefault(p, []).append(nid)
        return nid, True

    def __len__(self) -> int:
        return len(self.nodes)

    def ancestors(self, root: int) -> set[int]:
        """Nodes occurring in the stored derivation of ``root`` (inclusive)."""
        seen = {root}
        stack = [root]
        while stack:
            for p in self.nodes[stack.pop()].premises:
                if p not in seen:
                    seen.add(p)
                    stack.append(p)
        return seen

    def derivation_height(self, root: int) -> int:
        memo: dict[int, int] = {}

        def h(nid: int) -> int:
            if nid in memo:
                return memo[nid]
            prem = self.nodes[nid].premises
            memo[nid] = 0 if not prem else 1 + max(h(p) for p in prem)
            return memo[nid]

        return h(root)

    def dump(self, root: int | None = None) -> str:
        """Numbered linear rendering, premises before conclusions."""
        if root is None:
            ids = list(range(len(self.nodes)))
        else:
            ids = sorted(self.ancestors(root))
        number = {nid: i + 1 for i, nid in enumerate(ids)}
        lines = []
        for nid in ids:
            n = self.nodes[nid]
            prem = " ".join(f"({number[p]})" for p in n.premises)
            tail = f"  {n.rule}" + (f" {prem}" if prem else "")
            lines.append(f"({number[nid]}) {n.seq.render()}{tail}")
        return "\n".join(lines)

    def graph_export(self, root: int) -> str:
        ids = sorted(self.ancestors(root))
        lines = ["digraph derivation {", "  rankdir=BT;", "  node [shape=box];"]
        for nid in ids:
            n = self.nodes[nid]
            lines.append(f'  n{nid} [label="{n.seq.render()}\\n{n.rule}"];')
        for nid in ids:
            for p in self.nodes[nid].premises:
                lines.append(f"  n{p} -> n{nid};")
        lines.append("}")
        return "\n".join(lines)


@dataclass
class InsertResult:
    status: str                      # "added" | "forward-subsumed" | "backward-replaced"
    node: Optional[int] = None
    subsumed_by: Optional[int] = None
    removed: tuple[int, ...] = ()

    ADDED = "added"
    FORWARD_SUBSUMED = "forward-subsumed"
    BACKWARD_REPLACED = "backward-replaced"


class Database:
    """The set of currently live proved sequents, indexed by right side."""

    def __init__(self, universe: GoalUniverse, store: DerivationStore | None = None,
                 compact_mode: bool = True):
        self.u = universe
        self.store = store if store is not None else DerivationStore(universe)
        self.compact_mode = compact_mode
        self.entries: set[int] = set()
        self.by_rhs: dict[int, set[int]] = {}
        self.removal_listeners: list = []

    def __contains__(self, nid: int) -> bool:
        return nid in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def node(self, nid: int) -> StoreNode:
        return self.store.nodes[nid]

    def sequents(self) -> list[Sequent]:
        return [self.store.nodes[n].seq for n in sorted(self.entries)]

    def regular_entries(self) -> list[int]:
        return [n for n in sorted(self.entries) if self.store.nodes[n].seq.regular]

    def irregular_entries(self) -> list[int]:
        return [n for n in sorted(self.entries) if not self.store.nodes[n].seq.regular]

    def find_goal(self) -> Optional[int]:
        hits = [n for n in self.by_rhs.get(self.u.goal_pos, ())
                if self.store.nodes[n].seq.regular]
        return min(hits) if hits else None

    def _unlink(self, nid: int) -> None:
        self.entries.discard(nid)
        self.by_rhs.get(self.store.nodes[nid].seq.rhs, set()).discard(nid)

    def insert(self, seq: Sequent, rule: str, premises: tuple[int, ...] = (),
               iteration: int = 0, rank: int = 0) -> InsertResult:
        """Forward subsumption check, then store; in compact mode also retire
        every strictly subsumed entry together with its stored consequences."""
        same_rhs = self.by_rhs.get(seq.rhs)
        if same_rhs:
            for e in same_rhs:
                if subsumes(seq, self.store.nodes[e].seq):
                    return InsertResult(InsertResult.FORWARD_SUBSUMED, subsumed_by=e)
        nid, _created = self.store.add(seq, rule, premises, iteration, rank)
        self.entries.add(nid)
        self.by_rhs.setdefault(seq.rhs, set()).add(nid)
        removed: list[tuple[int, Optional[int]]] = []
        if self.compact_mode and same_rhs:
            doomed = [e for e in sorted(same_rhs)
                      if e != nid and subsumes(self.store.nodes[e].seq, seq)]
            queue = deque((e, nid) for e in doomed)
            while queue:
                e, repl = queue.popleft()
                if e not in self.entries:
                    continue
                self._unlink(e)
                removed.append((e, repl))
                for c in self.store.consumers.get(e, ()):
                    if c in self.entries:
                        queue.append((c, None))
        if removed:
            for listener in self.removal_listeners:
                listener(removed)
            return InsertResult(InsertResult.BACKWARD_REPLACED, node=nid,
                                removed=tuple(e for e, _ in removed))
        return InsertResult(InsertResult.ADDED, node=nid)

    def dump(self, annotated: bool = False) -> str:
        """Canonical dump: one sequent per line, sorted by content so that
        equal databases dump identically regardless of insertion order.
        ``annotated`` appends the stored rule and premise node ids."""
        def sort_key(nid: int):
            s = self.store.nodes[nid].seq
            return (0 if s.regular else 1, s.rhs, s.gamma, s.sigma, s.theta)

        lines = []
        for nid in sorted(self.entries, key=sort_key):
            n = self.store.nodes[nid]
            line = n.seq.render()
            if annotated:
                prem = " ".join(str(p) for p in n.premises)
                line += f"  [{n.rule}" + (f" {prem}" if prem else "") + "]"
            lines.append(line)
        return "\n".join(lines)


def minimum_compact(db: Database) -> Database:
    """Drop every entry strictly subsumed by another; insertion-order free."""
    out = Database(db.u, db.store, compact_mode=db.compact_mode)
    for nid in db.entries:
        s = db.store.nodes[nid].seq
        keep = True
        for other in db.by_rhs.get(s.rhs, ()):
            o = db.store.nodes[other].seq
            if other != nid and subsumes(s, o) and s != o:
                keep = False
                break
        if keep:
            out.entries.add(nid)
            out.by_rhs.setdefault(s.rhs, set()).add(nid)
    return out


def is_saturated_against(db: Database, oracle_db: Database) -> bool:
    """Every entry of ``oracle_db`` is subsumed by some entry of ``db``."""
    for nid in oracle_db.entries:
        s = oracle_db.store.nodes[nid].seq
        if not any(subsumes(s, db.store.nodes[e].seq)
                   for e in db.by_rhs.get(s.rhs, ())):
            return False
    return True


class JoinCandidateSet:
    """Irregular premises that pairwise satisfy the stable-coverage side
    condition, with distinct admissible right sides; caches the joined parts."""

    __slots__ = ("members", "ups", "sig_at", "sig_imp", "th_at", "th_imp",
                 "supported", "ups_in_ps3", "needed_rank")

    def __init__(self, u: GoalUniverse, store: DerivationStore, members: tuple[int, ...]):
        self.members = members
        seqs = [store.nodes[m].seq for m in members]
        self.ups = frozenset(s.rhs for s in seqs)
        sig_at = sig_imp = 0
        th_at = th_imp = u.full_mask
        for s in seqs:
            sig_at |= s.sigma & u.var_mask
            sig_imp |= s.sigma & u.imp_mask
            th_at &= s.theta & u.var_mask
            th_imp &= s.theta & u.imp_mask
        self.sig_at = sig_at
        self.sig_imp = sig_imp
        self.th_at = th_at
        self.th_imp = 0
        for i in iter_bits(th_imp):
            if u.ante[i] in self.ups:
                self.th_imp |= 1 << i
        self.supported = all(u.ante[i] in self.ups for i in iter_bits(sig_imp))
        self.ups_in_ps3 = all((u.ps3_mask >> y) & 1 for y in self.ups)
        self.needed_rank = max(store.nodes[m].rank for m in members) + 1


@dataclass
class SearchOutcome:
    """Either a proof of the goal (a regular goal sequent in the store) or
    the saturated database."""
    status: str                      # "proof" | "saturated"
    db: Database
    universe: GoalUniverse
    root: Optional[int] = None
    iterations: int = 0
    stats: list = field(default_factory=list)

    PROOF = "proof"
    SATURATED = "saturated"

    @property
    def is_proof(self) -> bool:
        return self.status == SearchOutcome.PROOF

    @property
    def store(self) -> DerivationStore:
        return self.db.store


class SearchState:
    """One saturation run; exposes the iteration step for tests and tools."""

    def __init__(self, universe: GoalUniverse, *, backward_subsumption: bool = True,
                 min_height: bool = False, shuffle_seed: int | None = None,
                 collect_stats: bool = False):
        self.u = universe
        self.db = Database(universe, compact_mode=backward_subsumption)
        self.store = self.db.store
        self.min_height = min_height
        self.cap = 0  # join-rank cap, only enforced under min_height
        self.rng = random.Random(shuffle_seed) if shuffle_seed is not None else None
        self.collect_stats = collect_stats
        self.stats: list[dict] = []
        self.iteration = 0
        self.last: list[int] = []
        self._added_now: list[int] = []
        self._counters = {"generated": 0, "forward_subsumed": 0, "backward_removed": 0}

        self.sets: dict[frozenset[int], JoinCandidateSet] = {}
        self.by_member: dict[int, set[frozenset[int]]] = {}
        self.pending: deque[frozenset[int]] = deque()
        self.blocked: list[frozenset[int]] = []
        self._compat: dict[tuple[int, int], bool] = {}
        self.db.removal_listeners.append(self._on_removed)

    # -- insertion ---------------------------------------------------------

    def _insert(self, seq: Sequent, rule: str, premises: tuple[int, ...],
                rank: int) -> None:
        self._counters["generated"] += 1
        res = self.db.insert(seq, rule, premises, self.iteration, rank)
        if res.status == InsertResult.FORWARD_SUBSUMED:
            self._counters["forward_subsumed"] += 1
            return
        self._counters["backward_removed"] += len(res.removed)
        self._added_now.append(res.node)

    def insert_axioms(self) -> list[int]:
        self._added_now = []
        for seq in axioms(self.u):
            self._insert(seq, AX_REG if seq.regular else AX_IRR, (), 0 if seq.regular else -1)
        self.last = self._added_now
        self._flush_stats()
        return self.last

    # -- join candidate maintenance ----------------------------------------

    def _compatible(self, a: int, b: int) -> bool:
        key = (a, b) if a < b else (b, a)
        hit = self._compat.get(key)
        if hit is None:
            sa = self.store.nodes[a].seq
            sb = self.store.nodes[b].seq
            hit = not (sa.sigma & ~(sb.sigma | sb.theta)) and \
                not (sb.sigma & ~(sa.sigma | sa.theta))
            self._compat[key] = hit
        return hit

    def _register_set(self, members: tuple[int, ...]) -> None:
        key = frozenset(members)
        if key in self.sets:
            return
        cs = JoinCandidateSet(self.u, self.store, members)
        self.sets[key] = cs
        for m in members:
            self.by_member.setdefault(m, set()).add(key)
        self.pending.append(key)

    def _add_candidate_member(self, nid: int) -> None:
        seq = self.store.nodes[nid].seq
        if not (self.u.ps4_mask >> seq.rhs) & 1:
            return
        extensions = []
        for key, cs in self.sets.items():
            if seq.rhs in cs.ups:
                continue
            if all(self._compatible(m, nid) for m in cs.members):
                extensions.append(cs.members)
        for members in extensions:
            self._register_set(tuple(sorted(members + (nid,))))
        self._register_set((nid,))

    def _on_removed(self, removed: list[tuple[int, Optional[int]]]) -> None:
        for rid, repl in removed:
            for key in list(self.by_member.get(rid, ())):
                cs = self.sets.pop(key, None)
                if cs is None:
                    continue
                for m in cs.members:
                    self.by_member.get(m, set()).discard(key)
                if repl is not None and not self.store.nodes[rid].seq.regular:
                    # Same stable part and right side, wider losable part:
                    # compatibility is preserved, so just swap the member in.
                    members = tuple(sorted(repl if m == rid else m for m in cs.members))
                    self._register_set(members)
            self.by_member.pop(rid, None)

    def _fire_set(self, key: frozenset[int]) -> None:
        cs = self.sets.get(key)
        if cs is None:
            return
        if self.min_height and cs.needed_rank > self.cap:
            self.blocked.append(key)
            return
        if not cs.supported:
            return  # pending until a premise supports every stable implication
        u = self.u
        rank = cs.needed_rank
        if cs.ups_in_ps3:
            base = cs.sig_at | cs.sig_imp | cs.th_imp
            for f in u.prime_rhs:
                if (cs.sig_at >> f) & 1:
                    continue
                gamma = base | (cs.th_at & ~(1 << f))
                self._insert(Sequent(u, True, gamma, 0, 0, f), JOIN_AT, cs.members, rank)
        gamma_or = cs.sig_at | cs.th_at | cs.sig_imp | cs.th_imp
        for t, c1, c2 in u.or_targets:
            if c1 in cs.ups and c2 in cs.ups:
                self._insert(Sequent(u, True, gamma_or, 0, 0, t), JOIN_OR, cs.members, rank)

    def _drain_pending(self) -> None:
        while self.pending:
            batch = list(self.pending)
            self.pending.clear()
            if self.rng is not None:
                self.rng.shuffle(batch)
            for key in batch:
                self._fire_set(key)

    # -- one iteration -------------------------------------------------------

    def step(self) -> list[int]:
        """Apply every instance with a premise from the last iteration, then
        update the join candidates and fire the new sets; returns the ids of
        the conclusions that survived subsumption."""
        self.iteration += 1
        self._added_now = []
        order = list(self.last)
        if self.rng is not None:
            self.rng.shuffle(order)
        for sid in order:
            if sid not in self.db.entries:
                continue  # retired mid-flight by backward subsumption
            node = self.store.nodes[sid]
            if node.seq.regular:
                self._regular_step(sid, node)
            else:
                self._irregular_step(sid, node)
        for sid in order:
            if sid in self.db.entries and not self.store.nodes[sid].seq.regular:
                self._add_candidate_member(sid)
        self._drain_pending()
        self.last = self._added_now
        self._flush_stats()
        return self.last

    def _regular_step(self, sid: int, node: StoreNode) -> None:
        u = self.u
        seq = node.seq
        for t in u.and_targets.get(seq.rhs, ()):
            self._insert(Sequent(u, True, seq.gamma, 0, 0, t), RULE_AND, (sid,), node.rank)
        cl = u.closure(seq.gamma)
        for t, a in u.imp_targets.get(seq.rhs, ()):
            if not (cl >> a) & 1:
                continue
            self._insert(Sequent(u, True, seq.gamma, 0, 0, t), RULE_IMP_IN, (sid,), node.rank)
            for th in maximal_avoiding(u, cl & u.gbar, a):
                self._insert(Sequent(u, False, 0, 0, th, t), RULE_IMP_NOTIN, (sid,),
                             node.rank)

    def _irregular_step(self, sid: int, node: StoreNode) -> None:
        u = self.u
        seq = node.seq
        for t in u.and_targets.get(seq.rhs, ()):
            self._insert(Sequent(u, False, 0, seq.sigma, seq.theta, t), RULE_AND,
                         (sid,), node.rank)
        for t, a in u.imp_targets.get(seq.rhs, ()):
            for lam in minimal_shifts(u, seq.sigma, seq.theta, a):
                self._insert(Sequent(u, False, 0, seq.sigma | lam, seq.theta & ~lam, t),
                             RULE_IMP_IN, (sid,), node.rank)
        for t, c1, c2 in u.or_targets:
            if seq.rhs == c1:
                for pid in sorted(self.db.by_rhs.get(c2, ())):
                    self._try_or(sid, pid, t)
            if seq.rhs == c2:
                for pid in sorted(self.db.by_rhs.get(c1, ())):
                    self._try_or(pid, sid, t)

    def _try_or(self, lid: int, rid: int, t: int) -> None:
        a = self.store.nodes[lid]
        b = self.store.nodes[rid]
        if a.seq.regular or b.seq.regular:
            return
        if a.seq.sigma & ~(b.seq.sigma | b.seq.theta):
            return
        if b.seq.sigma & ~(a.seq.sigma | a.seq.theta):
            return
        sigma = a.seq.sigma | b.seq.sigma
        theta = (a.seq.theta & b.seq.theta) & ~sigma
        self._insert(Sequent(self.u, False, 0, sigma, theta, t), RULE_OR, (lid, rid),
                     max(a.rank, b.rank))

    def _flush_stats(self) -> None:
        if self.collect_stats:
            self.stats.append({
                "iteration": self.iteration,
                "db_size": len(self.db),
                "candidate_sets": len(self.sets),
                **self._counters,
            })
        self._counters = {"generated": 0, "forward_subsumed": 0, "backward_removed": 0}

    # -- full runs -----------------------------------------------------------

    def run(self, max_iterations: int | None = None) -> SearchOutcome:
        self.insert_axioms()
        while True:
            goal = self.db.find_goal()
            if goal is not None:
                return SearchOutcome(SearchOutcome.PROOF, self.db, self.u, root=goal,
                                     iterations=self.iteration, stats=self.stats)
            if not self.last:
                if self.min_height and self.blocked:
                    self.cap += 1
                    self.pending.extend(self.blocked)
                    self.blocked = []
                    self._added_now = []
                    self._drain_pending()
                    self.last = self._added_now
                    self._flush_stats()
                    continue
                return SearchOutcome(SearchOutcome.SATURATED, self.db, self.u,
                                     iterations=self.iteration, stats=self.stats)
            if max_iterations is not None and self.iteration >= max_iterations:
                raise IterationBudgetExceeded(
                    f"no fixpoint within {max_iterations} iterations")
            self.step()


def fsearch(goal: Formula | GoalUniverse, *, backward_subsumption: bool = True,
            min_height: bool = False, max_iterations: int | None = None,
            shuffle_seed: int | None = None, collect_stats: bool = False,
            ) -> SearchOutcome:
    """Decide the goal by forward saturation.

    Returns a proof outcome exactly when a regular sequent with the goal on
    the right is derivable (the goal is then not intuitionistically valid);
    otherwise the returned database is saturated, and compact when backward
    subsumption was on.
    """
    universe = goal if isinstance(goal, GoalUniverse) else build_universe(goal)
    state = SearchState(universe, backward_subsumption=backward_subsumption,
                        min_height=min_height, shuffle_seed=shuffle_seed,
                        collect_stats=collect_stats)
    return state.run(max_iterations)
