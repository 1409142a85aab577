"""Terms of the bang calculus: syntax, parsing, printing, substitution.

Terms are immutable trees.  Six constructors:

    Var(x)            variable
    App(t, u)         application
    Abs(x, t)         abstraction  \\x. t
    Bang(t)           !t
    Der(t)            der(t)
    Sub(t, x, u)      closure  t[x \\ u]   (x binds in t only)

Lambda terms (for the CBN/CBV fragment) are the Bang/Der-free subset of
the same type; see `is_lambda_term`.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class App:
    fun: "Term"
    arg: "Term"


@dataclass(frozen=True)
class Abs:
    binder: str
    body: "Term"


@dataclass(frozen=True)
class Bang:
    body: "Term"


@dataclass(frozen=True)
class Der:
    body: "Term"


@dataclass(frozen=True)
class Sub:
    body: "Term"
    binder: str
    arg: "Term"


Term = Var | App | Abs | Bang | Der | Sub


def free_vars(t: Term) -> frozenset[str]:
    match t:
        case Var(x):
            return frozenset((x,))
        case App(f, a):
            return free_vars(f) | free_vars(a)
        case Abs(x, b):
            return free_vars(b) - {x}
        case Bang(b) | Der(b):
            return free_vars(b)
        case Sub(b, x, a):
            return (free_vars(b) - {x}) | free_vars(a)
    raise TypeError(t)


def fresh_name(base: str, avoid: frozenset[str] | set[str]) -> str:
    """Least-suffix fresh name: base itself, else stem0, stem1, ..."""
    if base not in avoid:
        return base
    stem = base.rstrip("0123456789") or base
    k = 0
    while f"{stem}{k}" in avoid:
        k += 1
    return f"{stem}{k}"


def subst_meta(t: Term, x: str, u: Term) -> Term:
    """Capture-avoiding meta-level substitution t{x:=u}.

    Deterministic: bound names are refreshed with `fresh_name` only when
    they would capture a free variable of u.
    """
    if x not in free_vars(t):
        return t
    match t:
        case Var(_):
            return u  # x free in t and t is a variable, so t == Var(x)
        case App(f, a):
            return App(subst_meta(f, x, u), subst_meta(a, x, u))
        case Bang(b):
            return Bang(subst_meta(b, x, u))
        case Der(b):
            return Der(subst_meta(b, x, u))
        case Abs(y, b):
            # x in fv(t) implies y != x
            fvu = free_vars(u)
            if y in fvu:
                y2 = fresh_name(y, fvu | free_vars(b) | {x})
                b = subst_meta(b, y, Var(y2))
                y = y2
            return Abs(y, subst_meta(b, x, u))
        case Sub(b, y, a):
            a2 = subst_meta(a, x, u) if x in free_vars(a) else a
            if x in free_vars(b) - {y}:
                fvu = free_vars(u)
                if y in fvu:
                    y2 = fresh_name(y, fvu | free_vars(b) | {x})
                    b = subst_meta(b, y, Var(y2))
                    y = y2
                b = subst_meta(b, x, u)
            return Sub(b, y, a2)
    raise TypeError(t)


def _canon(t: Term, env: dict[str, int], depth: int):
    match t:
        case Var(x):
            return ("b", env[x]) if x in env else ("f", x)
        case App(f, a):
            return ("@", _canon(f, env, depth), _canon(a, env, depth))
        case Abs(x, b):
            return ("\\", _canon(b, {**env, x: depth}, depth + 1))
        case Bang(b):
            return ("!", _canon(b, env, depth))
        case Der(b):
            return ("d", _canon(b, env, depth))
        case Sub(b, x, a):
            return ("s", _canon(b, {**env, x: depth}, depth + 1), _canon(a, env, depth))
    raise TypeError(t)


def canon_key(t: Term):
    """Nameless canonical form; equal keys iff alpha-equivalent terms."""
    return _canon(t, {}, 0)


def alpha_eq(t: Term, u: Term) -> bool:
    return t == u or canon_key(t) == canon_key(u)


def w_size(t: Term) -> int:
    match t:
        case Var(_):
            return 0
        case App(f, a):
            return 1 + w_size(f) + w_size(a)
        case Abs(_, b):
            return 1 + w_size(b)
        case Bang(_):
            return 0
        case Der(b):
            return 1 + w_size(b)
        case Sub(b, _, a):
            return 1 + w_size(b) + w_size(a)
    raise TypeError(t)


# ---------------------------------------------------------------------------
# Closure spines

class ShapeClass(Enum):
    ABS = "abs"
    BANG = "bang"
    OTHER = "other"


@dataclass(frozen=True)
class ListDecomposition:
    """Maximal outer closure spine, outermost first, plus a non-Sub core."""
    spine: tuple[tuple[str, Term], ...]
    core: Term

    def rewrap(self) -> Term:
        t = self.core
        for binder, arg in reversed(self.spine):
            t = Sub(t, binder, arg)
        return t

    @property
    def shape(self) -> ShapeClass:
        return shape_of_core(self.core)


def shape_of_core(core: Term) -> ShapeClass:
    if isinstance(core, Abs):
        return ShapeClass.ABS
    if isinstance(core, Bang):
        return ShapeClass.BANG
    return ShapeClass.OTHER


def decompose_list(t: Term) -> ListDecomposition:
    spine: list[tuple[str, Term]] = []
    while isinstance(t, Sub):
        spine.append((t.binder, t.arg))
        t = t.body
    return ListDecomposition(tuple(spine), t)


def shape_of(t: Term) -> ShapeClass:
    return decompose_list(t).shape


def is_abs_shaped(t: Term) -> bool:
    return shape_of(t) is ShapeClass.ABS


def is_bang_shaped(t: Term) -> bool:
    return shape_of(t) is ShapeClass.BANG


# ---------------------------------------------------------------------------
# Lambda-fragment helpers

def is_lambda_term(t: Term) -> bool:
    """True iff t contains no Bang/Der (the CBN/CBV source fragment)."""
    match t:
        case Var(_):
            return True
        case App(f, a):
            return is_lambda_term(f) and is_lambda_term(a)
        case Abs(_, b):
            return is_lambda_term(b)
        case Sub(b, _, a):
            return is_lambda_term(b) and is_lambda_term(a)
        case _:
            return False


def is_value(t: Term) -> bool:
    return isinstance(t, (Var, Abs))


# ---------------------------------------------------------------------------
# Parser

class ParseError(ValueError):
    def __init__(self, msg: str, pos: int):
        super().__init__(f"{msg} (at offset {pos})")
        self.pos = pos


_IDENT_START = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ")
_IDENT_CONT = _IDENT_START | set("0123456789_'")


class _Tokens:
    def __init__(self, text: str):
        self.text = text
        self.toks: list[tuple[str, str, int]] = []  # (kind, value, pos)
        self._lex()
        self.i = 0

    def _lex(self) -> None:
        s, n, i = self.text, len(self.text), 0
        while i < n:
            c = s[i]
            if c.isspace():
                i += 1
                continue
            if c in _IDENT_START:
                j = i + 1
                while j < n and s[j] in _IDENT_CONT:
                    j += 1
                word = s[i:j]
                self.toks.append(("der" if word == "der" else "ident", word, i))
                i = j
            elif s.startswith(":=", i):
                self.toks.append(("sep", ":=", i))
                i += 2
            elif c in "\\!()[].λ":
                kind = {"λ": "lambda", "\\": "backslash"}.get(c, c)
                self.toks.append((kind, c, i))
                i += 1
            else:
                raise ParseError(f"unexpected character {c!r}", i)
        self.toks.append(("eof", "", n))

    def peek(self) -> tuple[str, str, int]:
        return self.toks[self.i]

    def next(self) -> tuple[str, str, int]:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, kind: str) -> tuple[str, str, int]:
        k, v, p = self.next()
        if k != kind:
            raise ParseError(f"expected {kind}, found {v!r}", p)
        return k, v, p


def parse_term(text: str, strict: bool = False) -> Term:
    """Parse surface syntax.

    Grammar (prefix ! / der bind tighter than application, postfix
    closures bind tighter still, application is left-associative, a
    lambda body extends as far right as possible):

        term  := abs | app
        abs   := ("\\" | "λ") ident "." term
        app   := app post | post
        post  := atom { "[" ident ("\\" | ":=") term "]" }
        atom  := ident | "!" atom | "der" atom | "der" "(" term ")"
               | "(" term ")"

    With strict=True, free names are rejected.
    """
    toks = _Tokens(text)
    t = _parse_term(toks)
    k, v, p = toks.peek()
    if k != "eof":
        raise ParseError(f"trailing input {v!r}", p)
    if strict and free_vars(t):
        names = ", ".join(sorted(free_vars(t)))
        raise ParseError(f"unbound names: {names}", 0)
    return t


def _parse_term(toks: _Tokens) -> Term:
    k, _, _ = toks.peek()
    if k in ("backslash", "lambda"):
        nxt = toks.toks[toks.i + 1]
        # a backslash starts an abstraction only when followed by a binder
        if nxt[0] == "ident":
            toks.next()
            _, x, _ = toks.expect("ident")
            toks.expect(".")
            return Abs(x, _parse_term(toks))
    return _parse_app(toks)


def _parse_app(toks: _Tokens) -> Term:
    t = _parse_post(toks)
    while True:
        k, _, _ = toks.peek()
        if k in ("ident", "!", "der", "("):
            t = App(t, _parse_post(toks))
        else:
            return t


def _parse_post(toks: _Tokens) -> Term:
    t = _parse_atom(toks)
    while toks.peek()[0] == "[":
        toks.next()
        _, x, _ = toks.expect("ident")
        k, v, p = toks.next()
        if k not in ("backslash", "sep"):
            raise ParseError(f"expected \\\\ or := in closure, found {v!r}", p)
        arg = _parse_term(toks)
        toks.expect("]")
        t = Sub(t, x, arg)
    return t


def _parse_atom(toks: _Tokens) -> Term:
    k, v, p = toks.next()
    if k == "ident":
        return Var(v)
    if k == "!":
        return Bang(_parse_atom(toks))
    if k == "der":
        if toks.peek()[0] == "(":
            toks.next()
            t = _parse_term(toks)
            toks.expect(")")
            return Der(t)
        return Der(_parse_atom(toks))
    if k == "(":
        t = _parse_term(toks)
        toks.expect(")")
        return t
    raise ParseError(f"unexpected token {v!r}", p)


# ---------------------------------------------------------------------------
# Printer

def _atom_str(t: Term) -> str:
    """Render t as an atom, parenthesizing when the grammar requires it."""
    match t:
        case Var(x):
            return x
        case Bang(b):
            return "!" + _atom_str(b)
        case Der(_):
            return print_term(t)
        case _:
            return "(" + print_term(t) + ")"


def print_term(t: Term) -> str:
    match t:
        case Var(x):
            return x
        case Abs(x, b):
            return f"\\{x}. {print_term(b)}"
        case App(f, a):
            fs = f"({print_term(f)})" if isinstance(f, Abs) else print_term(f)
            match a:
                case App(_, _) | Abs(_, _):
                    return f"{fs} ({print_term(a)})"
                case _:
                    return f"{fs} {print_term(a)}"
        case Bang(b):
            return "!" + _atom_str(b)
        case Der(b):
            return f"der({print_term(b)})"
        case Sub(b, x, a):
            match b:
                case Var(_) | Bang(_) | Der(_) | Sub(_, _, _):
                    bs = print_term(b)
                case _:
                    bs = f"({print_term(b)})"
            return f"{bs}[{x} \\ {print_term(a)}]"
    raise TypeError(t)
