"""The plain quantitative type system for the bang calculus.

Rules: ax, app, abs, bg, dr, es.  Multisets make the system
non-idempotent, so derivation size (number of nodes except bg) bounds
reduction length plus normal-form size.

Derivations store the full judgement at every node.  The `mk_*` helpers
build nodes bottom-up and raise IllFormed on local rule violations;
`check_derivation` validates arbitrary trees (e.g. deserialized ones).
The transformer operations mirror the term-level rewriting exactly, so a
transformed derivation's subject is always the same syntax tree the
reduction engine produces.
"""

from __future__ import annotations

from dataclasses import dataclass

from .syntax import (
    Abs, App, Bang, Der, Sub, Term, Var,
    decompose_list, free_vars, fresh_name, print_term, subst_meta,
)
from .reduction import (
    Position, RuleKind, Sel, FuelExhausted, Trace,
    classify_wcf_nf, normalize_dw, subterm_at,
)
from .qtypes import (
    Arrow, Context, Mult, Type, EMPTY_MULT, OMEGA,
    ctx_get, ctx_remove, ctx_union, has_tight_constants, mult, print_type,
)


@dataclass(frozen=True)
class Derivation:
    rule: str
    context: Context
    subject: Term
    type: Type
    premises: tuple["Derivation", ...] = ()

    def judgement(self) -> str:
        ctx = ", ".join(f"{x}:{print_type(m)}" for x, m in sorted(self.context.items()))
        return f"{ctx} |- {print_term(self.subject)} : {print_type(self.type)}"


class IllFormed(ValueError):
    pass


class NotTypableNormalForm(ValueError):
    """Raised when a constructive typing is requested for a term that is
    not a weak clash-free normal form."""


@dataclass(frozen=True)
class Untypable:
    normal_form: Term


# ---------------------------------------------------------------------------
# Node constructors

def mk_ax(x: str, ty: Type) -> Derivation:
    return Derivation("ax", {x: mult([ty])}, Var(x), ty)


def mk_app(d_f: Derivation, d_a: Derivation) -> Derivation:
    if not isinstance(d_f.type, Arrow):
        raise IllFormed(f"app function typed {print_type(d_f.type)}, not an arrow")
    if d_a.type != d_f.type.domain:
        raise IllFormed("app argument type does not match the arrow domain")
    return Derivation("app", ctx_union(d_f.context, d_a.context),
                      App(d_f.subject, d_a.subject), d_f.type.codomain, (d_f, d_a))


def mk_abs(x: str, d_b: Derivation) -> Derivation:
    return Derivation("abs", ctx_remove(d_b.context, x), Abs(x, d_b.subject),
                      Arrow(ctx_get(d_b.context, x), d_b.type), (d_b,))


def mk_bg(body: Term, premises: tuple[Derivation, ...]) -> Derivation:
    for p in premises:
        if p.subject != body:
            raise IllFormed("bg premises must all type the bang body")
    premises = tuple(sorted(premises, key=lambda p: _premise_key(p.type)))
    return Derivation("bg", ctx_union(*(p.context for p in premises)),
                      Bang(body), mult(p.type for p in premises), premises)


def _premise_key(t: Type):
    from .qtypes import sort_key
    return sort_key(t)


def mk_dr(d_b: Derivation) -> Derivation:
    if not isinstance(d_b.type, Mult) or len(d_b.type) != 1:
        raise IllFormed("dr premise must have a singleton multiset type")
    return Derivation("dr", d_b.context, Der(d_b.subject), d_b.type.elements[0], (d_b,))


def mk_es(x: str, d_b: Derivation, d_a: Derivation) -> Derivation:
    if d_a.type != ctx_get(d_b.context, x):
        raise IllFormed("es argument type must equal the multiset of the bound name")
    return Derivation("es", ctx_union(ctx_remove(d_b.context, x), d_a.context),
                      Sub(d_b.subject, x, d_a.subject), d_b.type, (d_b, d_a))


# ---------------------------------------------------------------------------
# Checking

@dataclass(frozen=True)
class Violation:
    path: tuple[int, ...]
    reason: str


def _check_node_u(d: Derivation) -> str | None:
    for m in d.context.values():
        if not m.elements:
            return "context stores an empty multiset entry"
    if has_tight_constants(d.type) or any(has_tight_constants(m) for m in d.context.values()):
        return "tight constants do not belong to this system"
    ps = d.premises
    match d.rule:
        case "ax":
            if not isinstance(d.subject, Var) or ps:
                return "ax must type a variable with no premises"
            if d.context != {d.subject.name: mult([d.type])}:
                return "ax context must be exactly the singleton for its variable"
        case "app":
            if not isinstance(d.subject, App) or len(ps) != 2:
                return "app must type an application from two premises"
            f, a = ps
            if f.subject != d.subject.fun or a.subject != d.subject.arg:
                return "app premise subjects must be the application parts"
            if not isinstance(f.type, Arrow):
                return "app function premise must have an arrow type"
            if a.type != f.type.domain:
                return "app argument premise must match the arrow domain"
            if d.type != f.type.codomain:
                return "app conclusion must be the arrow codomain"
            if d.context != ctx_union(f.context, a.context):
                return "app context must be the union of the premise contexts"
        case "abs":
            if not isinstance(d.subject, Abs) or len(ps) != 1:
                return "abs must type an abstraction from one premise"
            (b,) = ps
            if b.subject != d.subject.body:
                return "abs premise subject must be the body"
            x = d.subject.binder
            if d.type != Arrow(ctx_get(b.context, x), b.type):
                return "abs conclusion must move the binder multiset into the arrow"
            if d.context != ctx_remove(b.context, x):
                return "abs context must drop the binder"
        case "bg":
            if not isinstance(d.subject, Bang):
                return "bg must type a bang"
            for p in ps:
                if p.subject != d.subject.body:
                    return "bg premise subjects must be the bang body"
            if d.type != mult(p.type for p in ps):
                return "bg conclusion must collect the premise types"
            if d.context != ctx_union(*(p.context for p in ps)):
                return "bg context must be the union of the premise contexts"
        case "dr":
            if not isinstance(d.subject, Der) or len(ps) != 1:
                return "dr must type a dereliction from one premise"
            (b,) = ps
            if b.subject != d.subject.body:
                return "dr premise subject must be the body"
            if not isinstance(b.type, Mult) or len(b.type) != 1 or b.type.elements[0] != d.type:
                return "dr premise must be the singleton of the conclusion type"
            if d.context != b.context:
                return "dr must not change the context"
        case "es":
            if not isinstance(d.subject, Sub) or len(ps) != 2:
                return "es must type a closure from two premises"
            b, a = ps
            if b.subject != d.subject.body or a.subject != d.subject.arg:
                return "es premise subjects must be the closure parts"
            if a.type != ctx_get(b.context, d.subject.binder):
                return "es argument premise must be typed with the binder multiset"
            if d.type != b.type:
                return "es conclusion must keep the body type"
            if d.context != ctx_union(ctx_remove(b.context, d.subject.binder), a.context):
                return "es context must recombine the premise contexts"
        case _:
            return f"unknown rule {d.rule!r}"
    return None


def check_derivation_u(d: Derivation) -> Violation | None:
    def walk(d: Derivation, path: tuple[int, ...]) -> Violation | None:
        reason = _check_node_u(d)
        if reason is not None:
            return Violation(path, reason)
        for i, p in enumerate(d.premises):
            v = walk(p, path + (i,))
            if v is not None:
                return v
        return None

    return walk(d, ())


def size_u(d: Derivation) -> int:
    own = 0 if d.rule == "bg" else 1
    return own + sum(size_u(p) for p in d.premises)


# ---------------------------------------------------------------------------
# Constructive typing of weak clash-free normal forms

def type_normal_form_u(t: Term, target: Type | None = None) -> Derivation:
    """A derivation for a wcf normal form.

    Neutral terms hit any requested target type (default: the
    distinguished base variable).  Other normal forms choose their own
    type, so `target` must be None for them.
    """
    cls = classify_wcf_nf(t)
    if not cls.memberships:
        raise NotTypableNormalForm(f"{print_term(t)} is not a weak clash-free normal form")
    if cls.ne:
        return _type_ne(t, target if target is not None else OMEGA)
    if target is not None:
        raise NotTypableNormalForm("only neutral terms accept a target type")
    if cls.na:
        return _type_na(t)
    return _type_nb(t)


def _type_ne(t: Term, tau: Type) -> Derivation:
    match t:
        case Var(x):
            return mk_ax(x, tau)
        case App(f, a):
            d_a = _type_arg(a)
            assert isinstance(d_a.type, Mult)
            d_f = _type_ne(f, Arrow(d_a.type, tau))
            return mk_app(d_f, d_a)
        case Der(b):
            return mk_dr(_type_ne(b, mult([tau])))
        case Sub(b, x, a):
            d_b = _type_ne(b, tau)
            d_a = _type_ne(a, ctx_get(d_b.context, x))
            return mk_es(x, d_b, d_a)
    raise NotTypableNormalForm(print_term(t))


def _type_arg(a: Term) -> Derivation:
    """Type a neutral-abs argument with a multiset: bangs get the empty
    multiset by a nullary bg, neutral cores get it directly."""
    if classify_wcf_nf(a).ne:
        return _type_ne(a, EMPTY_MULT)
    return _type_na(a)


def _type_na(t: Term) -> Derivation:
    match t:
        case Bang(b):
            return mk_bg(b, ())
        case Sub(b, x, a):
            d_b = _type_na(b)
            d_a = _type_ne(a, ctx_get(d_b.context, x))
            return mk_es(x, d_b, d_a)
        case _ if classify_wcf_nf(t).ne:
            return _type_ne(t, EMPTY_MULT)
    raise NotTypableNormalForm(print_term(t))


def _type_nb(t: Term) -> Derivation:
    match t:
        case Abs(x, b):
            return mk_abs(x, type_normal_form_u(b))
        case Sub(b, x, a):
            d_b = _type_nb(b)
            d_a = _type_ne(a, ctx_get(d_b.context, x))
            return mk_es(x, d_b, d_a)
        case _ if classify_wcf_nf(t).ne:
            return _type_ne(t, OMEGA)
    raise NotTypableNormalForm(print_term(t))


# ---------------------------------------------------------------------------
# Renaming and substitution inside derivations
#
# These walk exactly like syntax.subst_meta so that every rebuilt node's
# subject equals the term the meta-operation produces.

def rename_free_d(d: Derivation, old: str, new: str) -> Derivation:
    if old not in free_vars(d.subject):
        return d
    match d.rule:
        case "ax":
            return mk_ax(new, d.type)
        case "app":
            return mk_app(rename_free_d(d.premises[0], old, new),
                          rename_free_d(d.premises[1], old, new))
        case "bg":
            assert isinstance(d.subject, Bang)
            return mk_bg(subst_meta(d.subject.body, old, Var(new)),
                         tuple(rename_free_d(p, old, new) for p in d.premises))
        case "dr":
            return mk_dr(rename_free_d(d.premises[0], old, new))
        case "abs":
            assert isinstance(d.subject, Abs)
            y, (p_b,) = d.subject.binder, d.premises
            if y == new:
                y2 = fresh_name(y, {new} | free_vars(d.subject.body) | {old})
                p_b = rename_free_d(p_b, y, y2)
                y = y2
            return mk_abs(y, rename_free_d(p_b, old, new))
        case "es":
            assert isinstance(d.subject, Sub)
            y = d.subject.binder
            p_b, p_a = d.premises
            if old in free_vars(d.subject.arg):
                p_a = rename_free_d(p_a, old, new)
            if old in free_vars(d.subject.body) - {y}:
                if y == new:
                    y2 = fresh_name(y, {new} | free_vars(d.subject.body) | {old})
                    p_b = rename_free_d(p_b, y, y2)
                    y = y2
                p_b = rename_free_d(p_b, old, new)
            return mk_es(y, p_b, p_a)
    raise IllFormed(f"unknown rule {d.rule!r}")


def subst_derivation_u(d_t: Derivation, x: str, d_us: list[Derivation]) -> Derivation:
    """Merge derivations of u into a derivation of t, replacing the
    axioms for x.  The conclusion-type bag of d_us must equal the
    x-multiset of d_t's context; matching is by type, left to right."""
    if mult(d.type for d in d_us) != ctx_get(d_t.context, x):
        raise IllFormed("argument derivations do not realize the multiset of x")
    for d in d_us[1:]:
        if d.subject != d_us[0].subject:
            raise IllFormed("argument derivations type different terms")
    u = d_us[0].subject if d_us else Var(x)  # unused when the pool is empty
    pool = list(d_us)
    out = _subst_d(d_t, x, u, pool)
    assert not pool, "unconsumed argument derivations"
    return out


def _subst_d(d: Derivation, x: str, u: Term, pool: list[Derivation]) -> Derivation:
    if x not in free_vars(d.subject):
        return d
    match d.rule:
        case "ax":
            for i, cand in enumerate(pool):
                if cand.type == d.type:
                    return pool.pop(i)
            raise IllFormed("no argument derivation left for an axiom occurrence")
        case "app":
            d_f = _subst_d(d.premises[0], x, u, pool)
            d_a = _subst_d(d.premises[1], x, u, pool)
            return mk_app(d_f, d_a)
        case "bg":
            assert isinstance(d.subject, Bang)
            ps = tuple(_subst_d(p, x, u, pool) for p in d.premises)
            return mk_bg(subst_meta(d.subject.body, x, u), ps)
        case "dr":
            return mk_dr(_subst_d(d.premises[0], x, u, pool))
        case "abs":
            assert isinstance(d.subject, Abs)
            y, (p_b,) = d.subject.binder, d.premises
            fvu = free_vars(u)
            if y in fvu:
                y2 = fresh_name(y, fvu | free_vars(d.subject.body) | {x})
                p_b = rename_free_d(p_b, y, y2)
                y = y2
            return mk_abs(y, _subst_d(p_b, x, u, pool))
        case "es":
            assert isinstance(d.subject, Sub)
            y = d.subject.binder
            p_b, p_a = d.premises
            if x in free_vars(d.subject.arg):
                p_a = _subst_d(p_a, x, u, pool)
            if x in free_vars(d.subject.body) - {y}:
                fvu = free_vars(u)
                if y in fvu:
                    y2 = fresh_name(y, fvu | free_vars(d.subject.body) | {x})
                    p_b = rename_free_d(p_b, y, y2)
                    y = y2
                p_b = _subst_d(p_b, x, u, pool)
            return mk_es(y, p_b, p_a)
    raise IllFormed(f"unknown rule {d.rule!r}")


def antisubst_derivation_u(d: Derivation, t: Term, x: str, u: Term
                           ) -> tuple[Derivation, list[Derivation]]:
    """Invert substitution: from a derivation of t{x:=u}, recover a
    derivation of t (with x recorded in its context) plus one derivation
    of u per typed occurrence of x."""
    if d.subject != subst_meta(t, x, u):
        raise IllFormed("subject is not the stated substitution instance")
    return _antisubst_d(d, t, x, u)


def _antisubst_d(d: Derivation, t: Term, x: str, u: Term
                 ) -> tuple[Derivation, list[Derivation]]:
    if x not in free_vars(t):
        return d, []
    match t:
        case Var(_):
            return mk_ax(x, d.type), [d]
        case App(f, a):
            d_f, us1 = _antisubst_d(d.premises[0], f, x, u)
            d_a, us2 = _antisubst_d(d.premises[1], a, x, u)
            return mk_app(d_f, d_a), us1 + us2
        case Bang(b):
            out, us = [], []
            for p in d.premises:
                dp, usp = _antisubst_d(p, b, x, u)
                out.append(dp)
                us.extend(usp)
            return mk_bg(b, tuple(out)), us
        case Der(b):
            d_b, us = _antisubst_d(d.premises[0], b, x, u)
            return mk_dr(d_b), us
        case Abs(y, b):
            (p_b,) = d.premises
            fvu = free_vars(u)
            if y in fvu:
                y2 = fresh_name(y, fvu | free_vars(b) | {x})
                d_b2, us = _antisubst_d(p_b, subst_meta(b, y, Var(y2)), x, u)
                return mk_abs(y, rename_free_d(d_b2, y2, y)), us
            d_b, us = _antisubst_d(p_b, b, x, u)
            return mk_abs(y, d_b), us
        case Sub(b, y, a):
            p_b, p_a = d.premises
            us: list[Derivation] = []
            if x in free_vars(a):
                p_a, us_a = _antisubst_d(p_a, a, x, u)
                us.extend(us_a)
            if x in free_vars(b) - {y}:
                fvu = free_vars(u)
                if y in fvu:
                    y2 = fresh_name(y, fvu | free_vars(b) | {x})
                    d_b2, us_b = _antisubst_d(p_b, subst_meta(b, y, Var(y2)), x, u)
                    p_b = rename_free_d(d_b2, y2, y)
                else:
                    p_b, us_b = _antisubst_d(p_b, b, x, u)
                us = us_b + us
            return mk_es(y, p_b, p_a), us
    raise IllFormed(f"cannot decompose at {print_term(t)}")


# ---------------------------------------------------------------------------
# Subject reduction / expansion

_SEL_TO_PREMISE = {
    Sel.FUN: ("app", 0), Sel.ARG: ("app", 1),
    Sel.ABS_BODY: ("abs", 0), Sel.DER_BODY: ("dr", 0),
    Sel.SUB_BODY: ("es", 0), Sel.SUB_ARG: ("es", 1),
}


def _rebuild(d: Derivation, idx: int, new_premise: Derivation) -> Derivation:
    ps = list(d.premises)
    ps[idx] = new_premise
    match d.rule:
        case "app":
            return mk_app(ps[0], ps[1])
        case "abs":
            assert isinstance(d.subject, Abs)
            return mk_abs(d.subject.binder, ps[0])
        case "dr":
            return mk_dr(ps[0])
        case "es":
            assert isinstance(d.subject, Sub)
            return mk_es(d.subject.binder, ps[0], ps[1])
    raise IllFormed(f"cannot rebuild under rule {d.rule!r}")


def _descend(d: Derivation, sel: Sel) -> tuple[int, Derivation]:
    want = _SEL_TO_PREMISE[sel]
    if d.rule != want[0]:
        raise IllFormed(f"position step {sel} does not match rule {d.rule}")
    return want[1], d.premises[want[1]]


def reduce_derivation_u(d: Derivation, step: tuple[Position, RuleKind]) -> Derivation:
    """Weighted subject reduction: transform a derivation of t into one of
    the reduct across the given redex; size strictly decreases."""
    pos, kind = step

    def go(d: Derivation, pos: Position) -> Derivation:
        if not pos:
            return _fire_u(d, kind)
        idx, sub = _descend(d, pos[0])
        return _rebuild(d, idx, go(sub, pos[1:]))

    out = go(d, pos)
    if out.context != d.context or out.type != d.type or size_u(out) >= size_u(d):
        raise IllFormed("subject reduction did not preserve the judgement")
    return out


def _peel_chain(d: Derivation, stop_rule: str) -> tuple[list[Derivation], Derivation]:
    chain = []
    while d.rule == "es":
        chain.append(d)
        d = d.premises[0]
    if d.rule != stop_rule:
        raise IllFormed(f"expected a {stop_rule} node under the closure spine, found {d.rule}")
    return chain, d


def _fire_u(d: Derivation, kind: RuleKind) -> Derivation:
    if kind is RuleKind.DB:
        if d.rule != "app":
            raise IllFormed("dB redex must be typed by an application rule")
        d_u = d.premises[1]
        fvu = free_vars(d_u.subject)

        def wrap(f_d: Derivation) -> Derivation:
            if f_d.rule == "abs":
                assert isinstance(f_d.subject, Abs)
                return mk_es(f_d.subject.binder, f_d.premises[0], d_u)
            if f_d.rule != "es":
                raise IllFormed("dB function must be an abstraction under closures")
            assert isinstance(f_d.subject, Sub)
            y, (p_b, p_a) = f_d.subject.binder, f_d.premises
            if y in fvu:
                y2 = fresh_name(y, fvu | free_vars(p_b.subject))
                p_b = rename_free_d(p_b, y, y2)
                y = y2
            return mk_es(y, wrap(p_b), p_a)

        return wrap(d.premises[0])

    if kind is RuleKind.SBANG:
        if d.rule != "es":
            raise IllFormed("s! redex must be typed by a closure rule")
        assert isinstance(d.subject, Sub)
        x, (d_body, d_arg) = d.subject.binder, d.premises
        fvs = free_vars(d_body.subject) - {x}

        def wrap(a_d: Derivation) -> Derivation:
            if a_d.rule == "bg":
                assert isinstance(a_d.subject, Bang)
                pool = list(a_d.premises)
                out = _subst_d(d_body, x, a_d.subject.body, pool) \
                    if x in free_vars(d_body.subject) else d_body
                assert not pool
                return out
            if a_d.rule != "es":
                raise IllFormed("s! argument must be a bang under closures")
            assert isinstance(a_d.subject, Sub)
            y, (p_b, p_a) = a_d.subject.binder, a_d.premises
            if y in fvs:
                y2 = fresh_name(y, fvs | free_vars(p_b.subject))
                p_b = rename_free_d(p_b, y, y2)
                y = y2
            return mk_es(y, wrap(p_b), p_a)

        return wrap(d_arg)

    if kind is RuleKind.DBANG:
        if d.rule != "dr":
            raise IllFormed("d! redex must be typed by a dereliction rule")

        def wrap(b_d: Derivation) -> Derivation:
            if b_d.rule == "bg":
                if len(b_d.premises) != 1:
                    raise IllFormed("dereliction of a bang typed by a non-unary bg")
                return b_d.premises[0]
            if b_d.rule != "es":
                raise IllFormed("d! body must be a bang under closures")
            assert isinstance(b_d.subject, Sub)
            return mk_es(b_d.subject.binder, wrap(b_d.premises[0]), b_d.premises[1])

        return wrap(d.premises[0])

    raise IllFormed(f"{kind} is not a bang-calculus rule")


def expand_derivation_u(d: Derivation, t: Term, step: tuple[Position, RuleKind]) -> Derivation:
    """Weighted subject expansion: from a derivation of the reduct of t at
    the given redex, build a derivation of t itself."""
    pos, kind = step

    def go(d: Derivation, pos: Position, t_sub: Term) -> Derivation:
        if not pos:
            return _expand_u(d, t_sub, kind)
        idx, sub = _descend(d, pos[0])
        return _rebuild(d, idx, go(sub, pos[1:], subterm_at(t_sub, pos[:1])))

    out = go(d, pos, subterm_at(t, ()))
    if out.subject != t:
        raise IllFormed("expansion did not rebuild the stated term")
    if out.context != d.context or out.type != d.type or size_u(out) <= size_u(d):
        raise IllFormed("subject expansion did not preserve the judgement")
    return out


def _expand_u(d: Derivation, t: Term, kind: RuleKind) -> Derivation:
    if kind is RuleKind.DB:
        assert isinstance(t, App)
        dec = decompose_list(t.fun)
        chain, core = _peel_spine(d, len(dec.spine))
        if core.rule != "es":
            raise IllFormed("dB reduct core must be a closure node")
        assert isinstance(core.subject, Sub)
        cur = mk_abs(core.subject.binder, core.premises[0])
        d_u = core.premises[1]
        for (y_t, _), node in zip(reversed(dec.spine), reversed(chain)):
            assert isinstance(node.subject, Sub)
            y_d = node.subject.binder
            if y_d != y_t:
                cur = rename_free_d(cur, y_d, y_t)
            cur = mk_es(y_t, cur, node.premises[1])
        return mk_app(cur, d_u)

    if kind is RuleKind.SBANG:
        assert isinstance(t, Sub)
        s, x = t.body, t.binder
        dec = decompose_list(t.arg)
        assert isinstance(dec.core, Bang)
        chain, core = _peel_spine(d, len(dec.spine))
        # replay the firing renames to know the bang body actually substituted
        u_fired, spine_fired = _sbang_parts(t)
        d_s, d_us = _antisubst_d(core, s, x, u_fired)
        cur = mk_bg(u_fired, tuple(d_us))
        for (y_t, _), (y_f, _), node in zip(reversed(dec.spine), reversed(spine_fired),
                                            reversed(chain)):
            assert isinstance(node.subject, Sub)
            if node.subject.binder != y_f:
                raise IllFormed("reduct spine does not match the fired closure spine")
            if y_f != y_t:
                cur = rename_free_d(cur, y_f, y_t)
            cur = mk_es(y_t, cur, node.premises[1])
        return mk_es(x, d_s, cur)

    if kind is RuleKind.DBANG:
        assert isinstance(t, Der)
        dec = decompose_list(t.body)
        assert isinstance(dec.core, Bang)
        chain, core = _peel_spine(d, len(dec.spine))
        cur = mk_bg(core.subject, (core,))
        for (y_t, _), node in zip(reversed(dec.spine), reversed(chain)):
            assert isinstance(node.subject, Sub)
            cur = mk_es(node.subject.binder, cur, node.premises[1])
        return mk_dr(cur)

    raise IllFormed(f"{kind} is not a bang-calculus rule")


def _peel_spine(d: Derivation, n: int) -> tuple[list[Derivation], Derivation]:
    chain = []
    for _ in range(n):
        if d.rule != "es":
            raise IllFormed("closure spine shorter than the redex spine")
        chain.append(d)
        d = d.premises[0]
    return chain, d


def _sbang_parts(t: Sub) -> tuple[Term, list[tuple[str, Term]]]:
    """The bang body and closure spine as the s! firing renames them."""
    fvs = free_vars(t.body) - {t.binder}
    spine: list[tuple[str, Term]] = []
    a: Term = t.arg
    while not isinstance(a, Bang):
        assert isinstance(a, Sub)
        b, y, arg = a.body, a.binder, a.arg
        if y in fvs:
            y2 = fresh_name(y, fvs | free_vars(b))
            b = subst_meta(b, y, Var(y2))
            y = y2
        spine.append((y, arg))
        a = b
    return a.body, spine


# ---------------------------------------------------------------------------
# Inference by normalize-then-expand

def infer_u(t: Term, fuel: int) -> Derivation | Untypable | FuelExhausted:
    """Type t by normalizing, typing the normal form, and replaying the
    trace backwards through subject expansion.  Untypable when the normal
    form has a clash at a weak position; FuelExhausted (returned, not
    raised) when normalization does not finish."""
    try:
        trace = normalize_dw(t, fuel)
    except FuelExhausted as ex:
        return ex
    p = trace.final
    if not classify_wcf_nf(p).memberships:
        return Untypable(p)
    d = type_normal_form_u(p)
    return replay_expansion_u(d, trace)


def replay_expansion_u(d: Derivation, trace: Trace) -> Derivation:
    terms = [trace.start] + [s.result for s in trace.steps]
    for i in range(len(trace.steps) - 1, -1, -1):
        d = expand_derivation_u(d, terms[i], (trace.steps[i].position, trace.steps[i].rule))
    return d
