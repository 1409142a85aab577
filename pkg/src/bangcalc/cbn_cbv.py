"""Head call-by-name and open call-by-value over lambda terms with
explicit substitutions, their embeddings into the bang calculus, and the
matching quantitative type systems.

Lambda terms are bang-calculus terms without Bang/Der (see
syntax.is_lambda_term).  CBN never reduces inside application arguments;
CBV never reduces under abstractions.  The embeddings translate both
strategies into weak bang reduction; the value translation un-bangs
application heads on the fly so normal forms are preserved.
"""

from __future__ import annotations

from dataclasses import dataclass

from .syntax import (
    Abs, App, Bang, Der, Sub, Term, Var,
    decompose_list, free_vars, fresh_name, is_abs_shaped, is_bang_shaped,
    is_lambda_term, print_term, subst_meta,
)
from .reduction import (
    Position, RuleKind, Sel, FuelExhausted, Trace, TraceStep, fire_db,
)
from .qtypes import (
    Arrow, Mult, Type, ctx_get, ctx_remove, ctx_union, mult,
)
from .system_u import (
    Derivation, IllFormed, Untypable, Violation,
    infer_u, mk_abs, mk_app, mk_ax, mk_bg, mk_dr, mk_es,
)


class NotLambdaTerm(ValueError):
    pass


def _require_lambda(t: Term) -> None:
    if not is_lambda_term(t):
        raise NotLambdaTerm(print_term(t))


# ---------------------------------------------------------------------------
# Strategies

def _is_value_shaped(t: Term) -> bool:
    return isinstance(decompose_list(t).core, (Var, Abs))


def fire_sv(t: Term) -> Term:
    """t = s[x \\ L<v>] -> L<s{x:=v}> for a value v."""
    assert isinstance(t, Sub) and _is_value_shaped(t.arg)
    s, x = t.body, t.binder
    fvs = free_vars(s) - {x}

    def wrap(a: Term) -> Term:
        if isinstance(a, (Var, Abs)):
            return subst_meta(s, x, a)
        assert isinstance(a, Sub)
        b, y, arg = a.body, a.binder, a.arg
        if y in fvs:
            y2 = fresh_name(y, fvs | free_vars(b))
            b = subst_meta(b, y, Var(y2))
            y = y2
        return Sub(wrap(b), y, arg)

    return wrap(t.arg)


def step_n(t: Term) -> tuple[Position, RuleKind, Term] | None:
    """One head-CBN step: distance beta, or unconditional substitution;
    contexts never enter application arguments."""
    match t:
        case App(f, a):
            if is_abs_shaped(f):
                return ((), RuleKind.DB, fire_db(t))
            r = step_n(f)
            if r is not None:
                pos, kind, f2 = r
                return ((Sel.FUN,) + pos, kind, App(f2, a))
            return None
        case Sub(b, x, a):
            return ((), RuleKind.S, subst_meta(b, x, a))
        case Abs(x, b):
            r = step_n(b)
            if r is not None:
                pos, kind, b2 = r
                return ((Sel.ABS_BODY,) + pos, kind, Abs(x, b2))
            return None
        case Var(_):
            return None
    raise NotLambdaTerm(print_term(t))


def step_v(t: Term) -> tuple[Position, RuleKind, Term] | None:
    """One open-CBV step: distance beta, or substitution of a value up to
    a closure spine; contexts never enter abstraction bodies."""
    match t:
        case App(f, a):
            if is_abs_shaped(f):
                return ((), RuleKind.DB, fire_db(t))
            r = step_v(f)
            if r is not None:
                pos, kind, f2 = r
                return ((Sel.FUN,) + pos, kind, App(f2, a))
            r = step_v(a)
            if r is not None:
                pos, kind, a2 = r
                return ((Sel.ARG,) + pos, kind, App(f, a2))
            return None
        case Sub(b, x, a):
            if _is_value_shaped(a):
                return ((), RuleKind.SV, fire_sv(t))
            r = step_v(b)
            if r is not None:
                pos, kind, b2 = r
                return ((Sel.SUB_BODY,) + pos, kind, Sub(b2, x, a))
            r = step_v(a)
            if r is not None:
                pos, kind, a2 = r
                return ((Sel.SUB_ARG,) + pos, kind, Sub(b, x, a2))
            return None
        case Abs(_, _) | Var(_):
            return None
    raise NotLambdaTerm(print_term(t))


def _normalize(t: Term, fuel: int, stepper) -> Trace:
    steps: list[TraceStep] = []
    cur = t
    for _ in range(fuel):
        r = stepper(cur)
        if r is None:
            return Trace(t, tuple(steps), completed=True)
        pos, kind, cur = r
        steps.append(TraceStep(pos, kind, cur))
    if stepper(cur) is None:
        return Trace(t, tuple(steps), completed=True)
    raise FuelExhausted(Trace(t, tuple(steps), completed=False))


def normalize_n(t: Term, fuel: int) -> Trace:
    _require_lambda(t)
    return _normalize(t, fuel, step_n)


def normalize_v(t: Term, fuel: int) -> Trace:
    _require_lambda(t)
    return _normalize(t, fuel, step_v)


# ---------------------------------------------------------------------------
# Normal-form grammars

@dataclass(frozen=True)
class LambdaNfClass:
    cbn: frozenset[str]  # subset of {"ne_n", "no_n"}
    cbv: frozenset[str]  # subset of {"vr_v", "ne_v", "no_v"}

    @property
    def n_normal(self) -> bool:
        return "no_n" in self.cbn

    @property
    def v_normal(self) -> bool:
        return "no_v" in self.cbv


def _cbn_bits(t: Term) -> tuple[bool, bool]:
    match t:
        case Var(_):
            return True, True
        case App(f, _):
            ne, _ = _cbn_bits(f)
            return ne, ne
        case Abs(_, b):
            _, no = _cbn_bits(b)
            return False, no
        case Sub(_, _, _):
            return False, False
    raise NotLambdaTerm(print_term(t))


def _cbv_bits(t: Term) -> tuple[bool, bool, bool]:
    match t:
        case Var(_):
            return True, False, True
        case Abs(_, _):
            return False, False, True
        case App(f, a):
            fvr, fne, _ = _cbv_bits(f)
            _, _, ano = _cbv_bits(a)
            ne = (fvr or fne) and ano
            return False, ne, ne
        case Sub(b, _, a):
            bvr, bne, bno = _cbv_bits(b)
            _, ane, _ = _cbv_bits(a)
            return bvr and ane, bne and ane, bno and ane
    raise NotLambdaTerm(print_term(t))


def classify_lambda_nf(t: Term) -> LambdaNfClass:
    _require_lambda(t)
    ne_n, no_n = _cbn_bits(t)
    vr, ne_v, no_v = _cbv_bits(t)
    cbn = {name for name, bit in (("ne_n", ne_n), ("no_n", no_n)) if bit}
    cbv = {name for name, bit in (("vr_v", vr), ("ne_v", ne_v), ("no_v", no_v)) if bit}
    return LambdaNfClass(frozenset(cbn), frozenset(cbv))


# ---------------------------------------------------------------------------
# Embeddings

def embed_cbn(t: Term) -> Term:
    _require_lambda(t)
    return _cbn(t)


def _cbn(t: Term) -> Term:
    match t:
        case Var(_):
            return t
        case Abs(x, b):
            return Abs(x, _cbn(b))
        case App(f, a):
            return App(_cbn(f), Bang(_cbn(a)))
        case Sub(b, x, a):
            return Sub(_cbn(b), x, Bang(_cbn(a)))
    raise NotLambdaTerm(print_term(t))


def embed_cbv(t: Term) -> Term:
    _require_lambda(t)
    return _cbv(t)


def _cbv(t: Term) -> Term:
    match t:
        case Var(x):
            return Bang(Var(x))
        case Abs(x, b):
            return Bang(Abs(x, _cbv(b)))
        case App(f, a):
            cf = _cbv(f)
            if is_bang_shaped(cf):
                dec = decompose_list(cf)
                assert isinstance(dec.core, Bang)
                head = dec.core.body
                for binder, arg in reversed(dec.spine):
                    head = Sub(head, binder, arg)
                return App(head, _cbv(a))
            return App(Der(cf), _cbv(a))
        case Sub(b, x, a):
            return Sub(_cbv(b), x, _cbv(a))
    raise NotLambdaTerm(print_term(t))


def unbang_value(v: Term) -> Term:
    """The u with cbv(v) = !u, for a value v."""
    image = embed_cbv(v)
    assert isinstance(image, Bang)
    return image.body


# ---------------------------------------------------------------------------
# Term size measures

def n_size(t: Term) -> int:
    match t:
        case Var(_):
            return 0
        case Abs(_, b):
            return 1 + n_size(b)
        case App(f, _):
            return 1 + n_size(f)
        case Sub(b, _, _):
            return 1 + n_size(b)
    raise NotLambdaTerm(print_term(t))


def v_size(t: Term) -> int:
    match t:
        case Var(_):
            return 0
        case Abs(_, _):
            return 0
        case App(f, a):
            return 1 + v_size(f) + v_size(a)
        case Sub(b, _, a):
            return 1 + v_size(b) + v_size(a)
    raise NotLambdaTerm(print_term(t))


# ---------------------------------------------------------------------------
# Systems N and V (reusing the plain Derivation nodes with their own tags)

def mk_ax_n(x: str, ty: Type) -> Derivation:
    return Derivation("ax_n", {x: mult([ty])}, Var(x), ty)


def mk_abs_n(x: str, d_b: Derivation) -> Derivation:
    return Derivation("abs_n", ctx_remove(d_b.context, x), Abs(x, d_b.subject),
                      Arrow(ctx_get(d_b.context, x), d_b.type), (d_b,))


def mk_app_n(d_f: Derivation, arg: Term, d_args: tuple[Derivation, ...]) -> Derivation:
    """The argument term is explicit because it may be typed zero times."""
    if not isinstance(d_f.type, Arrow):
        raise IllFormed("app_n function must have an arrow type")
    if d_f.type.domain != mult(d.type for d in d_args):
        raise IllFormed("app_n argument premises must realize the arrow domain")
    for d in d_args:
        if d.subject != arg:
            raise IllFormed("app_n argument premises must type the argument")
    return Derivation("app_n", ctx_union(d_f.context, *(d.context for d in d_args)),
                      App(d_f.subject, arg), d_f.type.codomain, (d_f,) + tuple(d_args))


def mk_es_n(x: str, d_b: Derivation, arg: Term, d_args: tuple[Derivation, ...]) -> Derivation:
    if ctx_get(d_b.context, x) != mult(d.type for d in d_args):
        raise IllFormed("es_n argument premises must realize the multiset of x")
    for d in d_args:
        if d.subject != arg:
            raise IllFormed("es_n argument premises must type the argument")
    return Derivation("es_n", ctx_union(ctx_remove(d_b.context, x), *(d.context for d in d_args)),
                      Sub(d_b.subject, x, arg), d_b.type, (d_b,) + tuple(d_args))


def mk_ax_v(x: str, m: Mult) -> Derivation:
    ctx = {x: m} if m.elements else {}
    return Derivation("ax_v", ctx, Var(x), m)


def mk_abs_v(x: str, body: Term, premises: tuple[Derivation, ...]) -> Derivation:
    arrows = []
    for p in premises:
        if p.subject != body:
            raise IllFormed("abs_v premises must type the body")
        arrows.append(Arrow(ctx_get(p.context, x), p.type))
    return Derivation("abs_v", ctx_union(*(ctx_remove(p.context, x) for p in premises)),
                      Abs(x, body), mult(arrows), tuple(premises))


def mk_app_v(d_f: Derivation, d_a: Derivation) -> Derivation:
    ft = d_f.type
    if not isinstance(ft, Mult) or len(ft) != 1 or not isinstance(ft.elements[0], Arrow):
        raise IllFormed("app_v function must be typed by a singleton arrow multiset")
    arrow = ft.elements[0]
    if d_a.type != arrow.domain:
        raise IllFormed("app_v argument must match the arrow domain")
    return Derivation("app_v", ctx_union(d_f.context, d_a.context),
                      App(d_f.subject, d_a.subject), arrow.codomain, (d_f, d_a))


def mk_es_v(x: str, d_b: Derivation, d_a: Derivation) -> Derivation:
    if d_a.type != ctx_get(d_b.context, x):
        raise IllFormed("es_v argument type must equal the multiset of the bound name")
    return Derivation("es_v", ctx_union(ctx_remove(d_b.context, x), d_a.context),
                      Sub(d_b.subject, x, d_a.subject), d_b.type, (d_b, d_a))


def _check_node_n(d: Derivation) -> str | None:
    ps = d.premises
    for m in d.context.values():
        if not m.elements:
            return "context stores an empty multiset entry"
    match d.rule:
        case "ax_n":
            if not isinstance(d.subject, Var) or ps:
                return "ax_n must type a variable with no premises"
            if d.context != {d.subject.name: mult([d.type])}:
                return "ax_n context must be exactly the singleton for its variable"
        case "abs_n":
            if not isinstance(d.subject, Abs) or len(ps) != 1:
                return "abs_n must type an abstraction from one premise"
            (b,) = ps
            if b.subject != d.subject.body:
                return "abs_n premise subject must be the body"
            x = d.subject.binder
            if d.type != Arrow(ctx_get(b.context, x), b.type):
                return "abs_n conclusion must move the binder multiset into the arrow"
            if d.context != ctx_remove(b.context, x):
                return "abs_n context must drop the binder"
        case "app_n":
            if not isinstance(d.subject, App) or not ps:
                return "app_n must type an application"
            f, args = ps[0], ps[1:]
            if f.subject != d.subject.fun:
                return "app_n head premise must type the function"
            if not isinstance(f.type, Arrow):
                return "app_n function premise must have an arrow type"
            for a in args:
                if a.subject != d.subject.arg:
                    return "app_n argument premises must type the argument"
            if f.type.domain != mult(a.type for a in args):
                return "app_n argument premises must realize the arrow domain"
            if d.type != f.type.codomain:
                return "app_n conclusion must be the arrow codomain"
            if d.context != ctx_union(f.context, *(a.context for a in args)):
                return "app_n context must be the union of the premise contexts"
        case "es_n":
            if not isinstance(d.subject, Sub) or not ps:
                return "es_n must type a closure"
            b, args = ps[0], ps[1:]
            if b.subject != d.subject.body:
                return "es_n head premise must type the body"
            for a in args:
                if a.subject != d.subject.arg:
                    return "es_n argument premises must type the argument"
            x = d.subject.binder
            if ctx_get(b.context, x) != mult(a.type for a in args):
                return "es_n argument premises must realize the multiset of the bound name"
            if d.type != b.type:
                return "es_n conclusion must keep the body type"
            if d.context != ctx_union(ctx_remove(b.context, x), *(a.context for a in args)):
                return "es_n context must recombine the premise contexts"
        case _:
            return f"unknown rule {d.rule!r}"
    return None


def _check_node_v(d: Derivation) -> str | None:
    ps = d.premises
    for m in d.context.values():
        if not m.elements:
            return "context stores an empty multiset entry"
    match d.rule:
        case "ax_v":
            if not isinstance(d.subject, Var) or ps:
                return "ax_v must type a variable with no premises"
            if not isinstance(d.type, Mult):
                return "ax_v must conclude a multiset type"
            expected = {d.subject.name: d.type} if d.type.elements else {}
            if d.context != expected:
                return "ax_v context must assign the concluded multiset to its variable"
        case "abs_v":
            if not isinstance(d.subject, Abs):
                return "abs_v must type an abstraction"
            x = d.subject.binder
            for p in ps:
                if p.subject != d.subject.body:
                    return "abs_v premises must type the body"
            if d.type != mult(Arrow(ctx_get(p.context, x), p.type) for p in ps):
                return "abs_v conclusion must collect the premise arrows"
            if d.context != ctx_union(*(ctx_remove(p.context, x) for p in ps)):
                return "abs_v context must drop the binder from every premise"
        case "app_v":
            if not isinstance(d.subject, App) or len(ps) != 2:
                return "app_v must type an application from two premises"
            f, a = ps
            if f.subject != d.subject.fun or a.subject != d.subject.arg:
                return "app_v premise subjects must be the application parts"
            ft = f.type
            if not isinstance(ft, Mult) or len(ft) != 1 or not isinstance(ft.elements[0], Arrow):
                return "app_v function premise must be a singleton arrow multiset"
            if a.type != ft.elements[0].domain:
                return "app_v argument premise must match the arrow domain"
            if d.type != ft.elements[0].codomain:
                return "app_v conclusion must be the arrow codomain"
            if d.context != ctx_union(f.context, a.context):
                return "app_v context must be the union of the premise contexts"
        case "es_v":
            if not isinstance(d.subject, Sub) or len(ps) != 2:
                return "es_v must type a closure from two premises"
            b, a = ps
            if b.subject != d.subject.body or a.subject != d.subject.arg:
                return "es_v premise subjects must be the closure parts"
            if a.type != ctx_get(b.context, d.subject.binder):
                return "es_v argument premise must be typed with the binder multiset"
            if d.type != b.type:
                return "es_v conclusion must keep the body type"
            if d.context != ctx_union(ctx_remove(b.context, d.subject.binder), a.context):
                return "es_v context must recombine the premise contexts"
        case _:
            return f"unknown rule {d.rule!r}"
    return None


def _check_with(node_check, d: Derivation) -> Violation | None:
    def walk(d: Derivation, path: tuple[int, ...]) -> Violation | None:
        reason = node_check(d)
        if reason is not None:
            return Violation(path, reason)
        for i, p in enumerate(d.premises):
            v = walk(p, path + (i,))
            if v is not None:
                return v
        return None

    return walk(d, ())


def check_derivation_n(d: Derivation) -> Violation | None:
    return _check_with(_check_node_n, d)


def check_derivation_v(d: Derivation) -> Violation | None:
    return _check_with(_check_node_v, d)


def size_n(d: Derivation) -> int:
    return 1 + sum(size_n(p) for p in d.premises)


def size_v(d: Derivation) -> int:
    match d.rule:
        case "ax_v":
            assert isinstance(d.type, Mult)
            return len(d.type)
        case "abs_v":
            return len(d.premises) + sum(size_v(p) for p in d.premises)
        case _:
            return 1 + sum(size_v(p) for p in d.premises)


# ---------------------------------------------------------------------------
# Derivation translations

def translate_n_to_u(d: Derivation) -> Derivation:
    match d.rule:
        case "ax_n":
            assert isinstance(d.subject, Var)
            return mk_ax(d.subject.name, d.type)
        case "abs_n":
            assert isinstance(d.subject, Abs)
            return mk_abs(d.subject.binder, translate_n_to_u(d.premises[0]))
        case "app_n":
            assert isinstance(d.subject, App)
            d_f = translate_n_to_u(d.premises[0])
            args = tuple(translate_n_to_u(p) for p in d.premises[1:])
            return mk_app(d_f, mk_bg(embed_cbn(d.subject.arg), args))
        case "es_n":
            assert isinstance(d.subject, Sub)
            d_b = translate_n_to_u(d.premises[0])
            args = tuple(translate_n_to_u(p) for p in d.premises[1:])
            return mk_es(d.subject.binder, d_b, mk_bg(embed_cbn(d.subject.arg), args))
    raise IllFormed(f"not a call-by-name rule: {d.rule!r}")


class ImageMismatch(ValueError):
    pass


def translate_u_to_n(d: Derivation, t: Term) -> Derivation:
    if d.subject != embed_cbn(t):
        raise ImageMismatch("derivation subject is not the embedding of the term")
    return _u_to_n(d, t)


def _u_to_n(d: Derivation, t: Term) -> Derivation:
    match t:
        case Var(x):
            if d.rule != "ax":
                raise ImageMismatch("expected an axiom")
            return mk_ax_n(x, d.type)
        case Abs(x, b):
            if d.rule != "abs":
                raise ImageMismatch("expected an abstraction node")
            return mk_abs_n(x, _u_to_n(d.premises[0], b))
        case App(f, a):
            if d.rule != "app" or d.premises[1].rule != "bg":
                raise ImageMismatch("expected an application over a banged argument")
            d_f = _u_to_n(d.premises[0], f)
            args = tuple(_u_to_n(p, a) for p in d.premises[1].premises)
            return mk_app_n(d_f, a, args)
        case Sub(b, x, a):
            if d.rule != "es" or d.premises[1].rule != "bg":
                raise ImageMismatch("expected a closure over a banged argument")
            d_b = _u_to_n(d.premises[0], b)
            args = tuple(_u_to_n(p, a) for p in d.premises[1].premises)
            return mk_es_n(x, d_b, a, args)
    raise NotLambdaTerm(print_term(t))


def _unbang_spine(d: Derivation, n: int) -> Derivation:
    """From a derivation of L<!r> : [sigma] (with n closures in L), build
    the derivation of L<r> : sigma by dropping the unary bg at the core."""
    if n == 0:
        if d.rule != "bg" or len(d.premises) != 1:
            raise ImageMismatch("expected a unary bang node at the head")
        return d.premises[0]
    if d.rule != "es":
        raise ImageMismatch("expected a closure node on the head spine")
    assert isinstance(d.subject, Sub)
    return mk_es(d.subject.binder, _unbang_spine(d.premises[0], n - 1), d.premises[1])


def _rebang_spine(d: Derivation, n: int) -> Derivation:
    """Inverse of _unbang_spine: wrap the core of a spine derivation in a
    unary bg."""
    if n == 0:
        return mk_bg(d.subject, (d,))
    if d.rule != "es":
        raise ImageMismatch("expected a closure node on the head spine")
    assert isinstance(d.subject, Sub)
    return mk_es(d.subject.binder, _rebang_spine(d.premises[0], n - 1), d.premises[1])


def translate_v_to_u(d: Derivation) -> Derivation:
    match d.rule:
        case "ax_v":
            assert isinstance(d.subject, Var) and isinstance(d.type, Mult)
            x = d.subject.name
            return mk_bg(Var(x), tuple(mk_ax(x, ty) for ty in d.type.elements))
        case "abs_v":
            assert isinstance(d.subject, Abs)
            x = d.subject.binder
            body_image = embed_cbv(d.subject.body)
            premises = tuple(mk_abs(x, translate_v_to_u(p)) for p in d.premises)
            return mk_bg(Abs(x, body_image), premises)
        case "app_v":
            assert isinstance(d.subject, App)
            d_f = translate_v_to_u(d.premises[0])
            d_a = translate_v_to_u(d.premises[1])
            image_f = embed_cbv(d.subject.fun)
            if is_bang_shaped(image_f):
                spine = decompose_list(image_f).spine
                return mk_app(_unbang_spine(d_f, len(spine)), d_a)
            return mk_app(mk_dr(d_f), d_a)
        case "es_v":
            assert isinstance(d.subject, Sub)
            return mk_es(d.subject.binder, translate_v_to_u(d.premises[0]),
                         translate_v_to_u(d.premises[1]))
    raise IllFormed(f"not a call-by-value rule: {d.rule!r}")


def translate_u_to_v(d: Derivation, t: Term) -> Derivation:
    if d.subject != embed_cbv(t):
        raise ImageMismatch("derivation subject is not the embedding of the term")
    return _u_to_v(d, t)


def _u_to_v(d: Derivation, t: Term) -> Derivation:
    match t:
        case Var(x):
            if d.rule != "bg":
                raise ImageMismatch("expected a bang node over a variable")
            assert isinstance(d.type, Mult)
            for p in d.premises:
                if p.rule != "ax":
                    raise ImageMismatch("expected axiom premises under the bang")
            return mk_ax_v(x, d.type)
        case Abs(x, b):
            if d.rule != "bg":
                raise ImageMismatch("expected a bang node over an abstraction")
            inner = []
            for p in d.premises:
                if p.rule != "abs":
                    raise ImageMismatch("expected abstraction premises under the bang")
                inner.append(_u_to_v(p.premises[0], b))
            return mk_abs_v(x, b, tuple(inner))
        case App(f, a):
            if d.rule != "app":
                raise ImageMismatch("expected an application node")
            image_f = embed_cbv(f)
            if is_bang_shaped(image_f):
                spine = decompose_list(image_f).spine
                d_f = _u_to_v(_rebang_spine(d.premises[0], len(spine)), f)
            else:
                if d.premises[0].rule != "dr":
                    raise ImageMismatch("expected a dereliction at the head")
                d_f = _u_to_v(d.premises[0].premises[0], f)
            return mk_app_v(d_f, _u_to_v(d.premises[1], a))
        case Sub(b, x, a):
            if d.rule != "es":
                raise ImageMismatch("expected a closure node")
            return mk_es_v(x, _u_to_v(d.premises[0], b), _u_to_v(d.premises[1], a))
    raise NotLambdaTerm(print_term(t))


# ---------------------------------------------------------------------------
# Inference through the embeddings

def infer_n(t: Term, fuel: int) -> Derivation | Untypable | FuelExhausted:
    _require_lambda(t)
    res = infer_u(embed_cbn(t), fuel)
    if isinstance(res, Derivation):
        return translate_u_to_n(res, t)
    return res


def infer_v(t: Term, fuel: int) -> Derivation | Untypable | FuelExhausted:
    _require_lambda(t)
    res = infer_u(embed_cbv(t), fuel)
    if isinstance(res, Derivation):
        return translate_u_to_v(res, t)
    return res
