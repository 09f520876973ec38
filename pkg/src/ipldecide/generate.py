"""Formula generators: the one-variable ladder family and seeded random trees."""

from __future__ import annotations

import random

from .formula import Formula, bot, conj, disj, imp, neg, var


def nishimura(i: int) -> Formula:
    """The i-th one-variable ladder formula: n1 = p, n2 = ~p, then
    alternately the disjunction of the two previous odd/even members and the
    implication back down (n(2k+3) = n(2k+1) | n(2k+2),
    n(2k+4) = n(2k+3) -> n(2k+1)).  None of them is intuitionistically
    valid, and their minimal countermodels grow into towers."""
    if i < 1:
        raise ValueError("index starts at 1")
    table = {1: var("p"), 2: neg(var("p"))}
    for k in range(3, i + 1):
        if k % 2 == 1:
            table[k] = disj(table[k - 2], table[k - 1])
        else:
            table[k] = imp(table[k - 1], table[k - 3])
    return table[i]


def random_formula(rng: random.Random, names: list[str], budget: int) -> Formula:
    """One random formula of symbol size at most ``budget``."""
    if budget <= 2 or rng.random() < 0.2:
        if rng.random() < 0.1:
            return bot()
        return var(rng.choice(names))
    op = rng.choice("&|>~")
    if op == "~":
        return neg(random_formula(rng, names, budget - 2))
    left = rng.randint(1, budget - 2)
    a = random_formula(rng, names, left)
    b = random_formula(rng, names, budget - 1 - left)
    return {"&": conj, "|": disj, ">": imp}[op](a, b)


def random_formulas(seed: int, max_vars: int, max_size: int, count: int,
                    ) -> list[Formula]:
    """Deterministic batch: same arguments, same list."""
    rng = random.Random(seed)
    names = [f"p{i}" for i in range(1, max_vars + 1)] if max_vars > 1 else ["p"]
    return [random_formula(rng, names, max_size) for _ in range(count)]
