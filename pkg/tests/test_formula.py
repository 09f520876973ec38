import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ipldecide import formula as F
from ipldecide.formula import (FormulaSet, ParseError, build_universe,
                               closure_member, iter_bits, parse, size, to_text)

from conftest import SCOTT


def names():
    return st.sampled_from(["p", "q", "r"])


def formulas(max_leaves=10):
    return st.recursive(
        st.one_of(names().map(F.var), st.just(F.bot())),
        lambda kids: st.one_of(
            st.tuples(kids, kids).map(lambda ab: F.conj(*ab)),
            st.tuples(kids, kids).map(lambda ab: F.disj(*ab)),
            st.tuples(kids, kids).map(lambda ab: F.imp(*ab)),
            kids.map(F.neg),
        ),
        max_leaves=max_leaves)


# -- parsing ----------------------------------------------------------------

def test_parse_basic_shapes():
    f = parse("p -> p")
    assert f.kind == F.IMP and f.left is f.right is F.var("p")

    g = parse("~p")
    assert g.kind == F.IMP and g.left is F.var("p") and g.right.kind == F.BOT

    s = parse(SCOTT)
    h = parse("(~~p -> p) -> (~p | p)")
    assert s.left is h
    assert s.right is parse("~~p | ~p")


def test_parse_precedence_and_associativity():
    assert parse("~p & q | r -> s") is parse("(((~p) & q) | r) -> s")
    assert parse("a -> b -> c") is parse("a -> (b -> c)")
    assert parse("a & b & c") is parse("(a & b) & c")
    assert parse("a | b | c") is parse("(a | b) | c")
    assert parse("#") is parse("false")


def test_parse_errors_carry_position():
    with pytest.raises(ParseError) as err:
        parse("p -> (")
    assert err.value.line == 1 and err.value.col == 7
    with pytest.raises(ParseError):
        parse("p q")
    with pytest.raises(ParseError):
        parse("(p -> q")
    with pytest.raises(ParseError) as err2:
        parse("p &\n& q")
    assert err2.value.line == 2


def test_hash_consing_gives_equal_ids():
    a = parse("p & (q -> r)")
    b = F.conj(F.var("p"), F.imp(F.var("q"), F.var("r")))
    assert a is b and a.id == b.id


@settings(max_examples=200)
@given(formulas())
def test_print_parse_roundtrip(f):
    assert parse(to_text(f)) is f


# -- size -------------------------------------------------------------------

@pytest.mark.parametrize("text,expected", [
    ("p", 1), ("p -> q", 3), ("~p", 3), ("false", 1),
    ("p & q | r", 5), ("~~p", 5),
])
def test_size_counts_symbols(text, expected):
    assert size(parse(text)) == expected


# -- universes ----------------------------------------------------------------

def test_universe_atom_goal():
    u = build_universe(parse("p"))
    assert [to_text(f) for f in u.set_from_mask(u.sfr)] == ["p"]
    assert u.sfl == 0 and u.gbar == 0


def test_universe_scott(scott_u):
    u = scott_u
    left = {to_text(f) for f in u.set_from_mask(u.sfl)}
    right = {to_text(f) for f in u.set_from_mask(u.sfr)}
    assert {"(~~p -> p) -> ~p | p", "~p | p", "~~p", "~p", "p"} <= left
    assert {to_text(u.goal), "~~p | ~p", "~~p -> p", "~~p", "~p", "p",
            "false"} <= right
    assert {to_text(f) for f in u.set_from_mask(u.gat)} == {"p"}
    assert {to_text(f) for f in u.set_from_mask(u.gbar)} == \
        {"p", "~p", "~~p", "(~~p -> p) -> ~p | p"}


def test_universe_kp(kp_u):
    u = kp_u
    left = {to_text(f) for f in u.set_from_mask(u.sfl)}
    right = {to_text(f) for f in u.set_from_mask(u.sfr)}
    assert {"~a -> b | c", "~a", "a", "b", "c"} <= left
    assert {to_text(u.goal), "(~a -> b) | (~a -> c)", "~a -> b", "~a -> c",
            "a", "b", "c", "false"} <= right


def test_polarity_generation_clauses(scott_u, kp_u, valid_e_u):
    # Left implications contribute their consequent left and antecedent
    # right; conjunction/disjunction children inherit the side.
    for u in (scott_u, kp_u, valid_e_u):
        for i in iter_bits(u.sfl):
            f = u.sf[i]
            if f.kind in (F.AND, F.OR):
                assert (u.sfl >> u.pos[f.left.id]) & 1
                assert (u.sfl >> u.pos[f.right.id]) & 1
            elif f.kind == F.IMP:
                assert (u.sfl >> u.pos[f.right.id]) & 1
                assert (u.sfr >> u.pos[f.left.id]) & 1
        for i in iter_bits(u.sfr):
            f = u.sf[i]
            if f.kind in (F.AND, F.OR):
                assert (u.sfr >> u.pos[f.left.id]) & 1
                assert (u.sfr >> u.pos[f.right.id]) & 1
            elif f.kind == F.IMP:
                assert (u.sfr >> u.pos[f.right.id]) & 1
                assert (u.sfl >> u.pos[f.left.id]) & 1
        assert (u.sfr >> u.goal_pos) & 1


# -- closure ------------------------------------------------------------------

def test_closure_membership_examples():
    u = build_universe(parse("(p1 & p2) -> q"))
    gamma = u.set([parse("p1"), parse("p2")])
    assert closure_member(gamma, parse("p1 & p2"))

    u2 = build_universe(parse("(p & q) -> ((p | q) -> b)"))
    assert not closure_member(u2.set(()), parse("p | q"))


def test_closure_restricted_slice():
    # With left side {p, q, r, r->p, p->r}, the closure of {p, q} meets the
    # atom/implication slice in exactly {p, q, r->p}.
    u = build_universe(parse("(p & q & (r -> p) & (p -> r)) -> ((p & q) -> b)"))
    got = u.closure(u.mask_of([parse("p"), parse("q")])) & u.gbar
    assert {to_text(f) for f in u.set_from_mask(got)} == {"p", "q", "r -> p"}


def _closure_oracle(u, mask):
    """Independent oracle: iterate the generation clauses to a fixpoint."""
    cl = mask
    changed = True
    while changed:
        changed = False
        for i, f in enumerate(u.sf):
            if (cl >> i) & 1:
                continue
            if f.kind == F.AND:
                hit = (cl >> u.pos[f.left.id]) & 1 and (cl >> u.pos[f.right.id]) & 1
            elif f.kind == F.OR:
                hit = (cl >> u.pos[f.left.id]) & 1 or (cl >> u.pos[f.right.id]) & 1
            elif f.kind == F.IMP:
                hit = (cl >> u.pos[f.right.id]) & 1
            else:
                hit = False
            if hit:
                cl |= 1 << i
                changed = True
    return cl


@settings(max_examples=150)
@given(st.data())
def test_closure_properties(data):
    f = data.draw(formulas(max_leaves=8))
    u = build_universe(f)
    m1 = data.draw(st.integers(0, u.full_mask))
    m2 = data.draw(st.integers(0, u.full_mask))
    cl1 = u.closure(m1)
    # agreement with the brute-force fixpoint
    assert cl1 == _closure_oracle(u, m1)
    # extensive and idempotent
    assert m1 & ~cl1 == 0
    assert u.closure(cl1) == cl1
    # monotone
    assert u.closure(m1 & m2) & ~cl1 == 0
    # no new atoms
    assert cl1 & u.var_mask == m1 & u.var_mask


# -- formula sets ---------------------------------------------------------------

def test_formula_set_operations(scott_u):
    u = scott_u
    a = u.set([parse("p"), parse("~p")])
    b = u.set([parse("~p"), parse("~~p")])
    assert parse("p") in a and parse("~~p") not in a
    assert {to_text(f) for f in a.union(b)} == {"p", "~p", "~~p"}
    assert {to_text(f) for f in a.intersection(b)} == {"~p"}
    assert {to_text(f) for f in a.difference(b)} == {"p"}
    assert a.intersection(b).issubset(a) and not a.issubset(b)
    assert len(a.union(b)) == 3
    assert a == u.set([parse("~p"), parse("p")])


def test_formula_set_rejects_foreign_universe(scott_u, kp_u):
    with pytest.raises(ValueError):
        scott_u.set(()).union(kp_u.set(()))
    with pytest.raises(KeyError):
        scott_u.set([parse("zz")])


def test_formula_set_rejects_out_of_range_bits(scott_u):
    with pytest.raises(ValueError):
        FormulaSet(scott_u, 1 << scott_u.n)
