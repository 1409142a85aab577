"""The tight type system with counters.

Judgements carry a triple (b, e, s): multiplicative steps, exponential
steps, and normal-form size.  Rules split into consuming ones (ax, ae_d,
ai_d, bg_d, dr_d, es_d), which pay into b/e, and persistent ones (ae_t,
ai_t, bg_t, dr_t, es_t), which pay into s.

Two persistent rules are slightly wider than the usual presentation,
which cannot type redexes whose dB step creates a substitution that
survives to the normal form (e.g. (\\x.x) y):

  * es_t allows any subject type, not only a tight constant;
  * ae_t has a second shape: function typed M -> sigma with tight M,
    argument typed n, conclusion sigma, still paying 1 into s.

Exact subject reduction maps the second ae_t shape to es_t across the dB
step and back, which is what forces both generalizations.
"""

from __future__ import annotations

from dataclasses import dataclass

from .syntax import (
    Abs, App, Bang, Der, Sub, Term, Var,
    decompose_list, free_vars, fresh_name, print_term, subst_meta, w_size,
)
from .reduction import (
    Position, RuleKind, Sel, FuelExhausted, Trace,
    classify_nf, classify_wcf_nf, normalize_dw, subterm_at,
)
from .qtypes import (
    Arrow, Context, Mult, Tight, Type,
    TIGHT_ABS, TIGHT_BANG, TIGHT_NEUTRAL,
    ctx_get, ctx_is_tight, ctx_remove, ctx_union, is_tight_mult, mult,
    print_type, sort_key,
)
from .system_u import Untypable, Violation, IllFormed, NotTypableNormalForm

Counters = tuple[int, int, int]

CONSUMING = frozenset({"ax", "ae_d", "ai_d", "bg_d", "dr_d", "es_d"})
PERSISTENT = frozenset({"ae_t", "ai_t", "bg_t", "dr_t", "es_t"})


@dataclass(frozen=True)
class DerivationE:
    rule: str
    context: Context
    subject: Term
    type: Type
    counters: Counters
    premises: tuple["DerivationE", ...] = ()

    @property
    def b(self) -> int:
        return self.counters[0]

    @property
    def e(self) -> int:
        return self.counters[1]

    @property
    def s(self) -> int:
        return self.counters[2]

    def judgement(self) -> str:
        ctx = ", ".join(f"{x}:{print_type(m)}" for x, m in sorted(self.context.items()))
        b, e, s = self.counters
        return f"{ctx} |-({b},{e},{s}) {print_term(self.subject)} : {print_type(self.type)}"


def _add(*cs: Counters) -> Counters:
    return (sum(c[0] for c in cs), sum(c[1] for c in cs), sum(c[2] for c in cs))


# ---------------------------------------------------------------------------
# Node constructors

def mk_ax_e(x: str, ty: Type) -> DerivationE:
    return DerivationE("ax", {x: mult([ty])}, Var(x), ty, (0, 0, 0))


def mk_ae_d(d_f: DerivationE, d_a: DerivationE) -> DerivationE:
    if not isinstance(d_f.type, Arrow) or d_a.type != d_f.type.domain:
        raise IllFormed("ae_d needs an arrow function and a matching argument")
    return DerivationE("ae_d", ctx_union(d_f.context, d_a.context),
                       App(d_f.subject, d_a.subject), d_f.type.codomain,
                       _add(d_f.counters, d_a.counters), (d_f, d_a))


def mk_ai_d(x: str, d_b: DerivationE) -> DerivationE:
    b, e, s = d_b.counters
    return DerivationE("ai_d", ctx_remove(d_b.context, x), Abs(x, d_b.subject),
                       Arrow(ctx_get(d_b.context, x), d_b.type), (b + 1, e, s), (d_b,))


def mk_bg_d(body: Term, premises: tuple[DerivationE, ...]) -> DerivationE:
    for p in premises:
        if p.subject != body:
            raise IllFormed("bg_d premises must all type the bang body")
    premises = tuple(sorted(premises, key=lambda p: sort_key(p.type)))
    b, e, s = _add(*(p.counters for p in premises)) if premises else (0, 0, 0)
    return DerivationE("bg_d", ctx_union(*(p.context for p in premises)), Bang(body),
                       mult(p.type for p in premises), (b, e + 1, s), premises)


def mk_dr_d(d_b: DerivationE) -> DerivationE:
    if not isinstance(d_b.type, Mult) or len(d_b.type) != 1:
        raise IllFormed("dr_d premise must have a singleton multiset type")
    return DerivationE("dr_d", d_b.context, Der(d_b.subject), d_b.type.elements[0],
                       d_b.counters, (d_b,))


def mk_es_d(x: str, d_b: DerivationE, d_a: DerivationE) -> DerivationE:
    if d_a.type != ctx_get(d_b.context, x):
        raise IllFormed("es_d argument type must equal the multiset of the bound name")
    return DerivationE("es_d", ctx_union(ctx_remove(d_b.context, x), d_a.context),
                       Sub(d_b.subject, x, d_a.subject), d_b.type,
                       _add(d_b.counters, d_a.counters), (d_b, d_a))


def mk_ae_t(d_f: DerivationE, d_a: DerivationE) -> DerivationE:
    if d_f.type == TIGHT_NEUTRAL:
        if d_a.type not in (TIGHT_BANG, TIGHT_NEUTRAL):
            raise IllFormed("ae_t argument must be tight and different from a")
        result: Type = TIGHT_NEUTRAL
    elif isinstance(d_f.type, Arrow) and is_tight_mult(d_f.type.domain):
        if d_a.type != TIGHT_NEUTRAL:
            raise IllFormed("ae_t over an arrow needs an n-typed argument")
        result = d_f.type.codomain
    else:
        raise IllFormed("ae_t function must be typed n or with a tight-domain arrow")
    b, e, s = _add(d_f.counters, d_a.counters)
    return DerivationE("ae_t", ctx_union(d_f.context, d_a.context),
                       App(d_f.subject, d_a.subject), result, (b, e, s + 1), (d_f, d_a))


def mk_ai_t(x: str, d_b: DerivationE) -> DerivationE:
    if not isinstance(d_b.type, Tight):
        raise IllFormed("ai_t body must have a tight constant type")
    if not is_tight_mult(ctx_get(d_b.context, x)):
        raise IllFormed("ai_t requires a tight multiset for the binder")
    b, e, s = d_b.counters
    return DerivationE("ai_t", ctx_remove(d_b.context, x), Abs(x, d_b.subject),
                       TIGHT_ABS, (b, e, s + 1), (d_b,))


def mk_bg_t(body: Term) -> DerivationE:
    return DerivationE("bg_t", {}, Bang(body), TIGHT_BANG, (0, 0, 0))


def mk_dr_t(d_b: DerivationE) -> DerivationE:
    if d_b.type != TIGHT_NEUTRAL:
        raise IllFormed("dr_t premise must be typed n")
    b, e, s = d_b.counters
    return DerivationE("dr_t", d_b.context, Der(d_b.subject), TIGHT_NEUTRAL,
                       (b, e, s + 1), (d_b,))


def mk_es_t(x: str, d_b: DerivationE, d_a: DerivationE) -> DerivationE:
    if d_a.type != TIGHT_NEUTRAL:
        raise IllFormed("es_t argument must be typed n")
    if not is_tight_mult(ctx_get(d_b.context, x)):
        raise IllFormed("es_t requires a tight multiset for the binder")
    b, e, s = _add(d_b.counters, d_a.counters)
    return DerivationE("es_t", ctx_union(ctx_remove(d_b.context, x), d_a.context),
                       Sub(d_b.subject, x, d_a.subject), d_b.type, (b, e, s + 1), (d_b, d_a))


# ---------------------------------------------------------------------------
# Checking

def _check_node_e(d: DerivationE) -> str | None:
    for m in d.context.values():
        if not m.elements:
            return "context stores an empty multiset entry"
    ps = d.premises
    own = d.counters
    match d.rule:
        case "ax":
            if not isinstance(d.subject, Var) or ps:
                return "ax must type a variable with no premises"
            if d.context != {d.subject.name: mult([d.type])}:
                return "ax context must be exactly the singleton for its variable"
            if own != (0, 0, 0):
                return "ax counters must be zero"
        case "ae_d" | "ae_t":
            if not isinstance(d.subject, App) or len(ps) != 2:
                return "application rules need two premises on an application"
            f, a = ps
            if f.subject != d.subject.fun or a.subject != d.subject.arg:
                return "application premise subjects must be the parts"
            if d.context != ctx_union(f.context, a.context):
                return "application context must be the union of the premise contexts"
            if d.rule == "ae_d":
                if not isinstance(f.type, Arrow):
                    return "ae_d function premise must have an arrow type"
                if a.type != f.type.domain:
                    return "ae_d argument premise must match the arrow domain"
                if d.type != f.type.codomain:
                    return "ae_d conclusion must be the arrow codomain"
                if own != _add(f.counters, a.counters):
                    return "ae_d counters must add the premise counters"
            else:
                if f.type == TIGHT_NEUTRAL:
                    if a.type not in (TIGHT_BANG, TIGHT_NEUTRAL):
                        return "ae_t argument must be a tight constant different from a"
                    if d.type != TIGHT_NEUTRAL:
                        return "ae_t conclusion must be n"
                elif isinstance(f.type, Arrow) and is_tight_mult(f.type.domain):
                    if a.type != TIGHT_NEUTRAL:
                        return "ae_t over an arrow needs an n-typed argument"
                    if d.type != f.type.codomain:
                        return "ae_t conclusion must be the arrow codomain"
                else:
                    return "ae_t function must be typed n or with a tight-domain arrow"
                bb, ee, ss = _add(f.counters, a.counters)
                if own != (bb, ee, ss + 1):
                    return "ae_t must add exactly one to the size counter"
        case "ai_d" | "ai_t":
            if not isinstance(d.subject, Abs) or len(ps) != 1:
                return "abstraction rules need one premise on an abstraction"
            (p,) = ps
            if p.subject != d.subject.body:
                return "abstraction premise subject must be the body"
            x = d.subject.binder
            if d.context != ctx_remove(p.context, x):
                return "abstraction context must drop the binder"
            if d.rule == "ai_d":
                if d.type != Arrow(ctx_get(p.context, x), p.type):
                    return "ai_d conclusion must move the binder multiset into the arrow"
                if own != (p.b + 1, p.e, p.s):
                    return "ai_d must add exactly one to the multiplicative counter"
            else:
                if not isinstance(p.type, Tight):
                    return "ai_t body must have a tight constant type"
                if not is_tight_mult(ctx_get(p.context, x)):
                    return "ai_t requires a tight multiset for the binder"
                if d.type != TIGHT_ABS:
                    return "ai_t conclusion must be a"
                if own != (p.b, p.e, p.s + 1):
                    return "ai_t must add exactly one to the size counter"
        case "bg_d":
            if not isinstance(d.subject, Bang):
                return "bg_d must type a bang"
            for p in ps:
                if p.subject != d.subject.body:
                    return "bg_d premise subjects must be the bang body"
            if d.type != mult(p.type for p in ps):
                return "bg_d conclusion must collect the premise types"
            if d.context != ctx_union(*(p.context for p in ps)):
                return "bg_d context must be the union of the premise contexts"
            bb, ee, ss = _add(*(p.counters for p in ps)) if ps else (0, 0, 0)
            if own != (bb, ee + 1, ss):
                return "bg_d must add exactly one to the exponential counter"
        case "bg_t":
            if not isinstance(d.subject, Bang) or ps:
                return "bg_t must type a bang with no premises"
            if d.context or d.type != TIGHT_BANG or own != (0, 0, 0):
                return "bg_t must conclude b with empty context and zero counters"
        case "dr_d" | "dr_t":
            if not isinstance(d.subject, Der) or len(ps) != 1:
                return "dereliction rules need one premise on a dereliction"
            (p,) = ps
            if p.subject != d.subject.body:
                return "dereliction premise subject must be the body"
            if d.context != p.context:
                return "dereliction must not change the context"
            if d.rule == "dr_d":
                if not isinstance(p.type, Mult) or len(p.type) != 1 or p.type.elements[0] != d.type:
                    return "dr_d premise must be the singleton of the conclusion type"
                if own != p.counters:
                    return "dr_d counters must copy the premise counters"
            else:
                if p.type != TIGHT_NEUTRAL or d.type != TIGHT_NEUTRAL:
                    return "dr_t premise and conclusion must be typed n"
                if own != (p.b, p.e, p.s + 1):
                    return "dr_t must add exactly one to the size counter"
        case "es_d" | "es_t":
            if not isinstance(d.subject, Sub) or len(ps) != 2:
                return "closure rules need two premises on a closure"
            bprem, aprem = ps
            if bprem.subject != d.subject.body or aprem.subject != d.subject.arg:
                return "closure premise subjects must be the parts"
            x = d.subject.binder
            if d.context != ctx_union(ctx_remove(bprem.context, x), aprem.context):
                return "closure context must recombine the premise contexts"
            if d.type != bprem.type:
                return "closure conclusion must keep the body type"
            if d.rule == "es_d":
                if aprem.type != ctx_get(bprem.context, x):
                    return "es_d argument premise must be typed with the binder multiset"
                if own != _add(bprem.counters, aprem.counters):
                    return "es_d counters must add the premise counters"
            else:
                if aprem.type != TIGHT_NEUTRAL:
                    return "es_t argument must be typed n"
                if not is_tight_mult(ctx_get(bprem.context, x)):
                    return "es_t requires a tight multiset for the binder"
                bb, ee, ss = _add(bprem.counters, aprem.counters)
                if own != (bb, ee, ss + 1):
                    return "es_t must add exactly one to the size counter"
        case _:
            return f"unknown rule {d.rule!r}"
    return None


def check_derivation_e(d: DerivationE) -> Violation | None:
    def walk(d: DerivationE, path: tuple[int, ...]) -> Violation | None:
        reason = _check_node_e(d)
        if reason is not None:
            return Violation(path, reason)
        for i, p in enumerate(d.premises):
            v = walk(p, path + (i,))
            if v is not None:
                return v
        return None

    return walk(d, ())


def is_tight(d: DerivationE) -> bool:
    return ctx_is_tight(d.context) and isinstance(d.type, Tight)


def tight_spreading_check(d: DerivationE) -> bool:
    """The spreading implication at the root: a neutral subject or zero
    step counters force a tight conclusion under a tight context."""
    if (classify_nf(d.subject).ne or (d.b == 0 and d.e == 0)) and ctx_is_tight(d.context):
        return isinstance(d.type, Tight)
    return True


# ---------------------------------------------------------------------------
# Constructive tight typing of wcf normal forms

def type_normal_form_tight(t: Term) -> DerivationE:
    """The all-persistent tight derivation of a wcf normal form; its
    counters are exactly (0, 0, w_size)."""
    cls = classify_wcf_nf(t)
    if not cls.memberships:
        raise NotTypableNormalForm(f"{print_term(t)} is not a weak clash-free normal form")
    if cls.ne:
        d = _tight_ne(t)
    elif cls.na:
        d = _tight_arg(t)
    else:
        d = _tight_nb(t)
    assert d.counters == (0, 0, w_size(t))
    return d


def _tight_ne(t: Term) -> DerivationE:
    match t:
        case Var(x):
            return mk_ax_e(x, TIGHT_NEUTRAL)
        case App(f, a):
            return mk_ae_t(_tight_ne(f), _tight_arg(a))
        case Der(b):
            return mk_dr_t(_tight_ne(b))
        case Sub(b, x, a):
            return mk_es_t(x, _tight_ne(b), _tight_ne(a))
    raise NotTypableNormalForm(print_term(t))


def _tight_arg(t: Term) -> DerivationE:
    """Neutral-abs terms: bang-shaped ones get b, neutral ones get n."""
    if classify_wcf_nf(t).ne:
        return _tight_ne(t)
    match t:
        case Bang(b):
            return mk_bg_t(b)
        case Sub(b, x, a):
            return mk_es_t(x, _tight_arg(b), _tight_ne(a))
    raise NotTypableNormalForm(print_term(t))


def _tight_nb(t: Term) -> DerivationE:
    if classify_wcf_nf(t).ne:
        return _tight_ne(t)
    match t:
        case Abs(x, b):
            return mk_ai_t(x, type_normal_form_tight(b))
        case Sub(b, x, a):
            return mk_es_t(x, _tight_nb(b), _tight_ne(a))
    raise NotTypableNormalForm(print_term(t))


# ---------------------------------------------------------------------------
# Renaming / substitution / anti-substitution (counter-carrying)

def rename_free_e(d: DerivationE, old: str, new: str) -> DerivationE:
    if old not in free_vars(d.subject):
        return d
    match d.rule:
        case "ax":
            return mk_ax_e(new, d.type)
        case "ae_d" | "ae_t":
            f = rename_free_e(d.premises[0], old, new)
            a = rename_free_e(d.premises[1], old, new)
            return mk_ae_d(f, a) if d.rule == "ae_d" else mk_ae_t(f, a)
        case "bg_d" | "bg_t":
            assert isinstance(d.subject, Bang)
            body = subst_meta(d.subject.body, old, Var(new))
            if d.rule == "bg_t":
                return mk_bg_t(body)
            return mk_bg_d(body, tuple(rename_free_e(p, old, new) for p in d.premises))
        case "dr_d" | "dr_t":
            p = rename_free_e(d.premises[0], old, new)
            return mk_dr_d(p) if d.rule == "dr_d" else mk_dr_t(p)
        case "ai_d" | "ai_t":
            assert isinstance(d.subject, Abs)
            y, (p_b,) = d.subject.binder, d.premises
            if y == new:
                y2 = fresh_name(y, {new} | free_vars(d.subject.body) | {old})
                p_b = rename_free_e(p_b, y, y2)
                y = y2
            p_b = rename_free_e(p_b, old, new)
            return mk_ai_d(y, p_b) if d.rule == "ai_d" else mk_ai_t(y, p_b)
        case "es_d" | "es_t":
            assert isinstance(d.subject, Sub)
            y = d.subject.binder
            p_b, p_a = d.premises
            if old in free_vars(d.subject.arg):
                p_a = rename_free_e(p_a, old, new)
            if old in free_vars(d.subject.body) - {y}:
                if y == new:
                    y2 = fresh_name(y, {new} | free_vars(d.subject.body) | {old})
                    p_b = rename_free_e(p_b, y, y2)
                    y = y2
                p_b = rename_free_e(p_b, old, new)
            return mk_es_d(y, p_b, p_a) if d.rule == "es_d" else mk_es_t(y, p_b, p_a)
    raise IllFormed(f"unknown rule {d.rule!r}")


def subst_derivation_e(d_t: DerivationE, x: str, d_us: list[DerivationE]) -> DerivationE:
    if mult(d.type for d in d_us) != ctx_get(d_t.context, x):
        raise IllFormed("argument derivations do not realize the multiset of x")
    for d in d_us[1:]:
        if d.subject != d_us[0].subject:
            raise IllFormed("argument derivations type different terms")
    u = d_us[0].subject if d_us else Var(x)
    pool = list(d_us)
    out = _subst_e(d_t, x, u, pool)
    assert not pool, "unconsumed argument derivations"
    return out


def _subst_e(d: DerivationE, x: str, u: Term, pool: list[DerivationE]) -> DerivationE:
    if x not in free_vars(d.subject):
        return d
    match d.rule:
        case "ax":
            for i, cand in enumerate(pool):
                if cand.type == d.type:
                    return pool.pop(i)
            raise IllFormed("no argument derivation left for an axiom occurrence")
        case "ae_d" | "ae_t":
            f = _subst_e(d.premises[0], x, u, pool)
            a = _subst_e(d.premises[1], x, u, pool)
            return mk_ae_d(f, a) if d.rule == "ae_d" else mk_ae_t(f, a)
        case "bg_d" | "bg_t":
            assert isinstance(d.subject, Bang)
            body = subst_meta(d.subject.body, x, u)
            if d.rule == "bg_t":
                return mk_bg_t(body)
            return mk_bg_d(body, tuple(_subst_e(p, x, u, pool) for p in d.premises))
        case "dr_d" | "dr_t":
            p = _subst_e(d.premises[0], x, u, pool)
            return mk_dr_d(p) if d.rule == "dr_d" else mk_dr_t(p)
        case "ai_d" | "ai_t":
            assert isinstance(d.subject, Abs)
            y, (p_b,) = d.subject.binder, d.premises
            fvu = free_vars(u)
            if y in fvu:
                y2 = fresh_name(y, fvu | free_vars(d.subject.body) | {x})
                p_b = rename_free_e(p_b, y, y2)
                y = y2
            p_b = _subst_e(p_b, x, u, pool)
            return mk_ai_d(y, p_b) if d.rule == "ai_d" else mk_ai_t(y, p_b)
        case "es_d" | "es_t":
            assert isinstance(d.subject, Sub)
            y = d.subject.binder
            p_b, p_a = d.premises
            if x in free_vars(d.subject.arg):
                p_a = _subst_e(p_a, x, u, pool)
            if x in free_vars(d.subject.body) - {y}:
                fvu = free_vars(u)
                if y in fvu:
                    y2 = fresh_name(y, fvu | free_vars(d.subject.body) | {x})
                    p_b = rename_free_e(p_b, y, y2)
                    y = y2
                p_b = _subst_e(p_b, x, u, pool)
            return mk_es_d(y, p_b, p_a) if d.rule == "es_d" else mk_es_t(y, p_b, p_a)
    raise IllFormed(f"unknown rule {d.rule!r}")


def antisubst_derivation_e(d: DerivationE, t: Term, x: str, u: Term
                           ) -> tuple[DerivationE, list[DerivationE]]:
    if d.subject != subst_meta(t, x, u):
        raise IllFormed("subject is not the stated substitution instance")
    return _antisubst_e(d, t, x, u)


def _antisubst_e(d: DerivationE, t: Term, x: str, u: Term
                 ) -> tuple[DerivationE, list[DerivationE]]:
    if x not in free_vars(t):
        return d, []
    match t:
        case Var(_):
            return mk_ax_e(x, d.type), [d]
        case App(f, a):
            d_f, us1 = _antisubst_e(d.premises[0], f, x, u)
            d_a, us2 = _antisubst_e(d.premises[1], a, x, u)
            node = mk_ae_d(d_f, d_a) if d.rule == "ae_d" else mk_ae_t(d_f, d_a)
            return node, us1 + us2
        case Bang(b):
            if d.rule == "bg_t":
                return mk_bg_t(b), []
            out, us = [], []
            for p in d.premises:
                dp, usp = _antisubst_e(p, b, x, u)
                out.append(dp)
                us.extend(usp)
            return mk_bg_d(b, tuple(out)), us
        case Der(b):
            d_b, us = _antisubst_e(d.premises[0], b, x, u)
            node = mk_dr_d(d_b) if d.rule == "dr_d" else mk_dr_t(d_b)
            return node, us
        case Abs(y, b):
            (p_b,) = d.premises
            fvu = free_vars(u)
            if y in fvu:
                y2 = fresh_name(y, fvu | free_vars(b) | {x})
                d_b2, us = _antisubst_e(p_b, subst_meta(b, y, Var(y2)), x, u)
                d_b = rename_free_e(d_b2, y2, y)
            else:
                d_b, us = _antisubst_e(p_b, b, x, u)
            node = mk_ai_d(y, d_b) if d.rule == "ai_d" else mk_ai_t(y, d_b)
            return node, us
        case Sub(b, y, a):
            p_b, p_a = d.premises
            us: list[DerivationE] = []
            if x in free_vars(a):
                p_a, us_a = _antisubst_e(p_a, a, x, u)
                us.extend(us_a)
            if x in free_vars(b) - {y}:
                fvu = free_vars(u)
                if y in fvu:
                    y2 = fresh_name(y, fvu | free_vars(b) | {x})
                    d_b2, us_b = _antisubst_e(p_b, subst_meta(b, y, Var(y2)), x, u)
                    p_b = rename_free_e(d_b2, y2, y)
                else:
                    p_b, us_b = _antisubst_e(p_b, b, x, u)
                us = us_b + us
            node = mk_es_d(y, p_b, p_a) if d.rule == "es_d" else mk_es_t(y, p_b, p_a)
            return node, us
    raise IllFormed(f"cannot decompose at {print_term(t)}")


# ---------------------------------------------------------------------------
# Exact subject reduction / expansion (dw steps)

_SEL_TO_RULES = {
    Sel.FUN: (("ae_d", "ae_t"), 0), Sel.ARG: (("ae_d", "ae_t"), 1),
    Sel.ABS_BODY: (("ai_d", "ai_t"), 0), Sel.DER_BODY: (("dr_d", "dr_t"), 0),
    Sel.SUB_BODY: (("es_d", "es_t"), 0), Sel.SUB_ARG: (("es_d", "es_t"), 1),
}


def _descend_e(d: DerivationE, sel: Sel) -> tuple[int, DerivationE]:
    rules, idx = _SEL_TO_RULES[sel]
    if d.rule not in rules:
        raise IllFormed(f"position step {sel} does not match rule {d.rule}")
    return idx, d.premises[idx]


def _rebuild_e(d: DerivationE, idx: int, new_premise: DerivationE) -> DerivationE:
    ps = list(d.premises)
    ps[idx] = new_premise
    match d.rule:
        case "ae_d":
            return mk_ae_d(ps[0], ps[1])
        case "ae_t":
            return mk_ae_t(ps[0], ps[1])
        case "ai_d":
            assert isinstance(d.subject, Abs)
            return mk_ai_d(d.subject.binder, ps[0])
        case "ai_t":
            assert isinstance(d.subject, Abs)
            return mk_ai_t(d.subject.binder, ps[0])
        case "dr_d":
            return mk_dr_d(ps[0])
        case "dr_t":
            return mk_dr_t(ps[0])
        case "es_d":
            assert isinstance(d.subject, Sub)
            return mk_es_d(d.subject.binder, ps[0], ps[1])
        case "es_t":
            assert isinstance(d.subject, Sub)
            return mk_es_t(d.subject.binder, ps[0], ps[1])
    raise IllFormed(f"cannot rebuild under rule {d.rule!r}")


def reduce_derivation_e(d: DerivationE, step: tuple[Position, RuleKind]) -> DerivationE:
    """Exact subject reduction: a dB step lowers b by one, an s!/d! step
    lowers e by one; the size counter never moves."""
    pos, kind = step

    def go(d: DerivationE, pos: Position) -> DerivationE:
        if not pos:
            return _fire_e(d, kind)
        idx, sub = _descend_e(d, pos[0])
        return _rebuild_e(d, idx, go(sub, pos[1:]))

    out = go(d, pos)
    expect = (d.b - 1, d.e, d.s) if kind.multiplicative else (d.b, d.e - 1, d.s)
    if out.counters != expect or out.type != d.type or out.context != d.context:
        raise IllFormed("subject reduction did not preserve the judgement exactly")
    return out


def _fire_e(d: DerivationE, kind: RuleKind) -> DerivationE:
    if kind is RuleKind.DB:
        if d.rule not in ("ae_d", "ae_t"):
            raise IllFormed("dB redex must be typed by an application rule")
        persistent = d.rule == "ae_t"
        d_u = d.premises[1]
        fvu = free_vars(d_u.subject)

        def wrap(f_d: DerivationE) -> DerivationE:
            if f_d.rule == "ai_d":
                assert isinstance(f_d.subject, Abs)
                x, body = f_d.subject.binder, f_d.premises[0]
                return mk_es_t(x, body, d_u) if persistent else mk_es_d(x, body, d_u)
            if f_d.rule not in ("es_d", "es_t"):
                raise IllFormed("dB function must be a consuming abstraction under closures")
            assert isinstance(f_d.subject, Sub)
            y, (p_b, p_a) = f_d.subject.binder, f_d.premises
            if y in fvu:
                y2 = fresh_name(y, fvu | free_vars(p_b.subject))
                p_b = rename_free_e(p_b, y, y2)
                y = y2
            inner = wrap(p_b)
            return mk_es_d(y, inner, p_a) if f_d.rule == "es_d" else mk_es_t(y, inner, p_a)

        return wrap(d.premises[0])

    if kind is RuleKind.SBANG:
        if d.rule != "es_d":
            raise IllFormed("s! redex must be typed by the consuming closure rule")
        assert isinstance(d.subject, Sub)
        x, (d_body, d_arg) = d.subject.binder, d.premises
        fvs = free_vars(d_body.subject) - {x}

        def wrap(a_d: DerivationE) -> DerivationE:
            if a_d.rule == "bg_d":
                assert isinstance(a_d.subject, Bang)
                pool = list(a_d.premises)
                out = _subst_e(d_body, x, a_d.subject.body, pool) \
                    if x in free_vars(d_body.subject) else d_body
                assert not pool
                return out
            if a_d.rule not in ("es_d", "es_t"):
                raise IllFormed("s! argument must be a consuming bang under closures")
            assert isinstance(a_d.subject, Sub)
            y, (p_b, p_a) = a_d.subject.binder, a_d.premises
            if y in fvs:
                y2 = fresh_name(y, fvs | free_vars(p_b.subject))
                p_b = rename_free_e(p_b, y, y2)
                y = y2
            inner = wrap(p_b)
            return mk_es_d(y, inner, p_a) if a_d.rule == "es_d" else mk_es_t(y, inner, p_a)

        return wrap(d_arg)

    if kind is RuleKind.DBANG:
        if d.rule != "dr_d":
            raise IllFormed("d! redex must be typed by the consuming dereliction rule")

        def wrap(b_d: DerivationE) -> DerivationE:
            if b_d.rule == "bg_d":
                if len(b_d.premises) != 1:
                    raise IllFormed("dereliction of a bang typed by a non-unary bg")
                return b_d.premises[0]
            if b_d.rule not in ("es_d", "es_t"):
                raise IllFormed("d! body must be a consuming bang under closures")
            assert isinstance(b_d.subject, Sub)
            inner = wrap(b_d.premises[0])
            y = b_d.subject.binder
            return mk_es_d(y, inner, b_d.premises[1]) if b_d.rule == "es_d" \
                else mk_es_t(y, inner, b_d.premises[1])

        return wrap(d.premises[0])

    raise IllFormed(f"{kind} is not a bang-calculus rule")


def expand_derivation_e(d: DerivationE, t: Term, step: tuple[Position, RuleKind]) -> DerivationE:
    """Exact subject expansion: rebuild a derivation for t from one for
    its dw-reduct, raising the matching counter by exactly one."""
    pos, kind = step

    def go(d: DerivationE, pos: Position, t_sub: Term) -> DerivationE:
        if not pos:
            return _expand_e(d, t_sub, kind)
        idx, sub = _descend_e(d, pos[0])
        return _rebuild_e(d, idx, go(sub, pos[1:], subterm_at(t_sub, pos[:1])))

    out = go(d, pos, t)
    if out.subject != t:
        raise IllFormed("expansion did not rebuild the stated term")
    expect = (d.b + 1, d.e, d.s) if kind.multiplicative else (d.b, d.e + 1, d.s)
    if out.counters != expect or out.type != d.type or out.context != d.context:
        raise IllFormed("subject expansion did not preserve the judgement exactly")
    return out


def _peel_spine_e(d: DerivationE, n: int) -> tuple[list[DerivationE], DerivationE]:
    chain = []
    for _ in range(n):
        if d.rule not in ("es_d", "es_t"):
            raise IllFormed("closure spine shorter than the redex spine")
        chain.append(d)
        d = d.premises[0]
    return chain, d


def _rewrap_chain(cur: DerivationE, spine_t, chain, spine_fired=None) -> DerivationE:
    """Wrap cur with the peeled chain nodes, renaming the firing binders
    back to the binders the pre-step term uses."""
    fired = spine_fired if spine_fired is not None else \
        [(node.subject.binder, None) for node in chain]
    for (y_t, _), (y_f, _), node in zip(reversed(spine_t), reversed(fired), reversed(chain)):
        assert isinstance(node.subject, Sub)
        if spine_fired is not None and node.subject.binder != y_f:
            raise IllFormed("reduct spine does not match the fired closure spine")
        if y_f != y_t:
            cur = rename_free_e(cur, y_f, y_t)
        cur = mk_es_d(y_t, cur, node.premises[1]) if node.rule == "es_d" \
            else mk_es_t(y_t, cur, node.premises[1])
    return cur


def _expand_e(d: DerivationE, t: Term, kind: RuleKind) -> DerivationE:
    if kind is RuleKind.DB:
        assert isinstance(t, App)
        dec = decompose_list(t.fun)
        chain, core = _peel_spine_e(d, len(dec.spine))
        if core.rule not in ("es_d", "es_t"):
            raise IllFormed("dB reduct core must be a closure node")
        assert isinstance(core.subject, Sub)
        cur = mk_ai_d(core.subject.binder, core.premises[0])
        cur = _rewrap_chain(cur, dec.spine, chain)
        d_u = core.premises[1]
        return mk_ae_d(cur, d_u) if core.rule == "es_d" else mk_ae_t(cur, d_u)

    if kind is RuleKind.SBANG:
        assert isinstance(t, Sub)
        s, x = t.body, t.binder
        dec = decompose_list(t.arg)
        assert isinstance(dec.core, Bang)
        chain, core = _peel_spine_e(d, len(dec.spine))
        from .system_u import _sbang_parts
        u_fired, spine_fired = _sbang_parts(t)
        d_s, d_us = _antisubst_e(core, s, x, u_fired)
        cur: DerivationE = mk_bg_d(u_fired, tuple(d_us))
        cur = _rewrap_chain(cur, dec.spine, chain, spine_fired)
        return mk_es_d(x, d_s, cur)

    if kind is RuleKind.DBANG:
        assert isinstance(t, Der)
        dec = decompose_list(t.body)
        assert isinstance(dec.core, Bang)
        chain, core = _peel_spine_e(d, len(dec.spine))
        cur = mk_bg_d(core.subject, (core,))
        cur = _rewrap_chain(cur, dec.spine, chain)
        return mk_dr_d(cur)

    raise IllFormed(f"{kind} is not a bang-calculus rule")


# ---------------------------------------------------------------------------
# Exact inference

def infer_tight(t: Term, fuel: int) -> DerivationE | Untypable | FuelExhausted:
    """A tight derivation with counters exactly (b, e, s): b and e from the
    dw trace, s the normal form's size."""
    try:
        trace = normalize_dw(t, fuel)
    except FuelExhausted as ex:
        return ex
    p = trace.final
    if not classify_wcf_nf(p).memberships:
        return Untypable(p)
    d = type_normal_form_tight(p)
    return replay_expansion_e(d, trace)


def replay_expansion_e(d: DerivationE, trace: Trace) -> DerivationE:
    terms = [trace.start] + [s.result for s in trace.steps]
    for i in range(len(trace.steps) - 1, -1, -1):
        d = expand_derivation_e(d, terms[i], (trace.steps[i].position, trace.steps[i].rule))
    return d
