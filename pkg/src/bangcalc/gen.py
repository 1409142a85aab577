"""Seeded random term corpora for the property suites.

Everything is driven by `random.Random(seed)`, so corpora are stable
across runs and platforms.  Bang corpora range over the full grammar;
lambda corpora never contain Bang/Der.  Leaves prefer bound names when a
scope exists, so both closed and open terms appear.
"""

from __future__ import annotations

import random

from .syntax import Abs, App, Bang, Der, Sub, Term, Var

_BINDERS = ("x", "y", "z", "w")
_FREE = ("u", "v", "f", "g")


def _leaf(rng: random.Random, scope: tuple[str, ...]) -> Term:
    if scope and rng.random() < 0.7:
        return Var(rng.choice(scope))
    return Var(rng.choice(_FREE))


def _split(rng: random.Random, size: int) -> tuple[int, int]:
    left = rng.randint(1, max(1, size - 1))
    return left, max(1, size - left)


def rand_bang_term(rng: random.Random, size: int, scope: tuple[str, ...] = ()) -> Term:
    if size <= 1:
        return _leaf(rng, scope)
    kind = rng.choices(("app", "abs", "bang", "der", "sub"),
                       weights=(30, 20, 15, 10, 25), k=1)[0]
    if kind == "app":
        ls, rs = _split(rng, size - 1)
        # bias towards redex shapes: abstraction heads and banged arguments
        if rng.random() < 0.4:
            x = rng.choice(_BINDERS)
            fun: Term = Abs(x, rand_bang_term(rng, max(ls - 1, 1), scope + (x,)))
        else:
            fun = rand_bang_term(rng, ls, scope)
        arg = rand_bang_term(rng, rs, scope)
        if not isinstance(arg, Bang) and rng.random() < 0.5:
            arg = Bang(rand_bang_term(rng, max(rs - 1, 1), scope))
        return App(fun, arg)
    if kind == "abs":
        x = rng.choice(_BINDERS)
        return Abs(x, rand_bang_term(rng, size - 1, scope + (x,)))
    if kind == "bang":
        return Bang(rand_bang_term(rng, size - 1, scope))
    if kind == "der":
        if rng.random() < 0.4:
            return Der(Bang(rand_bang_term(rng, max(size - 2, 1), scope)))
        return Der(rand_bang_term(rng, size - 1, scope))
    x = rng.choice(_BINDERS)
    ls, rs = _split(rng, size - 1)
    body = rand_bang_term(rng, ls, scope + (x,))
    arg = rand_bang_term(rng, rs, scope)
    if not isinstance(arg, Bang) and rng.random() < 0.5:
        arg = Bang(rand_bang_term(rng, max(rs - 1, 1), scope))
    return Sub(body, x, arg)


def rand_lambda_term(rng: random.Random, size: int, scope: tuple[str, ...] = ()) -> Term:
    if size <= 1:
        return _leaf(rng, scope)
    kind = rng.choices(("app", "abs", "sub"), weights=(35, 30, 35), k=1)[0]
    if kind == "app":
        ls, rs = _split(rng, size - 1)
        return App(rand_lambda_term(rng, ls, scope), rand_lambda_term(rng, rs, scope))
    if kind == "abs":
        x = rng.choice(_BINDERS)
        return Abs(x, rand_lambda_term(rng, size - 1, scope + (x,)))
    x = rng.choice(_BINDERS)
    ls, rs = _split(rng, size - 1)
    return Sub(rand_lambda_term(rng, ls, scope + (x,)), x, rand_lambda_term(rng, rs, scope))


def generate_corpus(seed: int, max_size: int, count: int, lam: bool = False) -> list[Term]:
    """`count` pseudo-random terms of size up to max_size, reproducible
    from the seed."""
    rng = random.Random(seed)
    gen = rand_lambda_term if lam else rand_bang_term
    out = []
    for _ in range(count):
        out.append(gen(rng, rng.randint(1, max_size)))
    return out
