"""Abstract syntax for kinds, types, terms and declarations.

Type variables are stored by name (without the leading quote).  Binders are
kept as written and substitution renames on capture; `alpha_equal` compares
modulo consistent renaming.  All nodes are immutable and carry an optional
source span that takes no part in equality.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import KindError, Span


def _span():
    return field(default=None, compare=False, repr=False)


# ---------------------------------------------------------------------------
# Variance


class Variance(enum.Enum):
    UNUSED = "unused"
    COV = "cov"
    CONTRA = "contra"
    INV = "inv"

    @property
    def marker(self) -> str:
        return {"cov": "+", "contra": "-", "inv": "!", "unused": "?"}[self.value]

    @property
    def adjective(self) -> str:
        return {
            "cov": "covariant",
            "contra": "contravariant",
            "inv": "invariant",
            "unused": "unused",
        }[self.value]

    def neg(self) -> Variance:
        if self is Variance.COV:
            return Variance.CONTRA
        if self is Variance.CONTRA:
            return Variance.COV
        return self

    def join(self, other: Variance) -> Variance:
        if self is other or other is Variance.UNUSED:
            return self
        if self is Variance.UNUSED:
            return other
        return Variance.INV

    def __le__(self, other: Variance) -> bool:
        return self.join(other) is other

    def __lt__(self, other: Variance) -> bool:
        return self is not other and self <= other


MARKERS = {"+": Variance.COV, "-": Variance.CONTRA, "!": Variance.INV}


# ---------------------------------------------------------------------------
# Kinds


@dataclass(frozen=True)
class Star:
    pass


@dataclass(frozen=True)
class KArrow:
    variance: Variance
    param: "Kind"
    result: "Kind"

    def __post_init__(self):
        if self.variance is Variance.UNUSED:
            raise ValueError("unused variance cannot be declared on a kind")


Kind = Union[Star, KArrow]
STAR = Star()


def kind_arrows(variances, result: Kind = STAR) -> Kind:
    """Build `(v1 * -> (v2 * -> ... result))`."""
    kind = result
    for v in reversed(list(variances)):
        kind = KArrow(v, STAR, kind)
    return kind


# ---------------------------------------------------------------------------
# Types

BASE_TYPES = ("int", "bool", "unit", "string", "exn")


@dataclass(frozen=True)
class TyVar:
    name: str
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Arrow:
    dom: "Type"
    cod: "Type"
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Record:
    fields: tuple  # of (label, Type), as written
    span: Optional[Span] = _span()

    def field_map(self) -> dict:
        return dict(self.fields)


@dataclass(frozen=True)
class AdtApp:
    name: str
    args: tuple
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class TyLam:
    binder: str
    variance: Variance
    kind: Kind
    body: "Type"
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class TyApp:
    fn: "Type"
    arg: "Type"
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Forall:
    binder: str
    kind: Kind
    body: "Type"
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Exists:
    binder: str
    kind: Kind
    body: "Type"
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Ref:
    cell: "Type"
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Base:
    name: str
    span: Optional[Span] = _span()

    def __post_init__(self):
        if self.name not in BASE_TYPES:
            raise ValueError(f"not a base type: {self.name}")


@dataclass(frozen=True)
class Alias:
    """A named type constructor as written; resolved by `normalize_type`."""

    name: str
    args: tuple = ()
    span: Optional[Span] = _span()


Type = Union[TyVar, Arrow, Record, AdtApp, TyLam, TyApp, Forall, Exists, Ref, Base, Alias]
BINDERS = (TyLam, Forall, Exists)

INT, BOOL, UNIT, STRING, EXN = (Base(n) for n in BASE_TYPES)


def arrows(*tys: Type) -> Type:
    result = tys[-1]
    for t in reversed(tys[:-1]):
        result = Arrow(t, result)
    return result


def record(**fields) -> Record:
    return Record(tuple(fields.items()))


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class Var:
    name: str
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class IntLit:
    value: int
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class BoolLit:
    value: bool
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class StringLit:
    value: str
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class UnitLit:
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Lam:
    param: str
    ann: Type
    body: "Term"
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class App:
    fn: "Term"
    arg: "Term"
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Let:
    name: str
    ann: Optional[Type]
    bound: "Term"
    body: "Term"
    rec: bool = False
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class RecordLit:
    fields: tuple  # of (label, Term)
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Proj:
    term: "Term"
    label: str
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class TyAbs:
    binder: str
    kind: Kind
    body: "Term"
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class TyAppT:
    term: "Term"
    type_arg: Type
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Pack:
    witness_type: Type
    payload: "Term"
    as_type: Type
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Unpack:
    tyname: str
    valname: str
    packed: "Term"
    body: "Term"
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Construct:
    ctor: str
    type_args: tuple  # explicit instantiation, may be empty
    arg: Optional["Term"]  # None for a payload-free constructor
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Arm:
    ctor: str
    binder: Optional[str]
    body: "Term"
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Match:
    scrutinee: "Term"
    arms: tuple  # of Arm
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class RefNew:
    init: "Term"
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Deref:
    ref: "Term"
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Assign:
    ref: "Term"
    value: "Term"
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Coerce:
    term: "Term"
    target: Type
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Raise:
    term: "Term"
    type_arg: Optional[Type] = None
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Try:
    body: "Term"
    handler_name: str
    handler: "Term"
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Seq:
    first: "Term"
    second: "Term"
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class If:
    cond: "Term"
    then: "Term"
    else_: "Term"
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Term"
    right: "Term"
    span: Optional[Span] = _span()


Term = Union[
    Var, IntLit, BoolLit, StringLit, UnitLit, Lam, App, Let, RecordLit, Proj,
    TyAbs, TyAppT, Pack, Unpack, Construct, Match, RefNew, Deref, Assign,
    Coerce, Raise, Try, Seq, If, BinOp,
]

BINOPS = {
    "+": ("int", "int"),
    "-": ("int", "int"),
    "*": ("int", "int"),
    "==": ("int", "bool"),
    "<": ("int", "bool"),
    "<=": ("int", "bool"),
    "^": ("string", "string"),
}


# ---------------------------------------------------------------------------
# Declarations


@dataclass(frozen=True)
class Param:
    name: str
    variance: Variance
    kind: Kind = STAR
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class AdtDecl:
    name: str
    params: tuple  # of Param
    ctors: tuple  # of (ctor name, payload Type or None)
    span: Optional[Span] = _span()

    def payload(self, ctor: str) -> Type:
        for name, ty in self.ctors:
            if name == ctor:
                return UNIT if ty is None else ty
        raise KeyError(ctor)


@dataclass(frozen=True)
class AliasDecl:
    name: str
    params: tuple  # of Param
    body: Type
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class TermDecl:
    name: str
    ann: Optional[Type]
    body: Term
    rec: bool = False
    span: Optional[Span] = _span()


Decl = Union[AdtDecl, AliasDecl, TermDecl]


@dataclass(frozen=True)
class Prog:
    decls: tuple = ()
    main: Optional[Term] = None

    def __add__(self, other: Prog) -> Prog:
        return Prog(self.decls + other.decls, other.main if other.main is not None else self.main)


# ---------------------------------------------------------------------------
# Free variables and substitution


def free_type_vars(ty: Type) -> frozenset:
    match ty:
        case TyVar(name):
            return frozenset((name,))
        case Arrow(dom, cod):
            return free_type_vars(dom) | free_type_vars(cod)
        case Record(fields):
            return frozenset().union(*(free_type_vars(t) for _, t in fields))
        case AdtApp(_, args) | Alias(_, args):
            return frozenset().union(*(free_type_vars(t) for t in args))
        case TyLam(binder, _, _, body) | Forall(binder, _, body) | Exists(binder, _, body):
            return free_type_vars(body) - {binder}
        case TyApp(fn, arg):
            return free_type_vars(fn) | free_type_vars(arg)
        case Ref(cell):
            return free_type_vars(cell)
        case Base():
            return frozenset()
    raise TypeError(f"not a type: {ty!r}")


def fresh_name(base: str, avoid) -> str:
    """First of base1, base2, ... (digits of `base` stripped) not in `avoid`."""
    stem = re.sub(r"\d+$", "", base) or "t"
    i = 1
    while f"{stem}{i}" in avoid:
        i += 1
    return f"{stem}{i}"


def subst_type(ty: Type, var: str, replacement: Type) -> Type:
    """Capture-avoiding substitution of `replacement` for free `var`."""
    return subst_types(ty, {var: replacement})


def subst_types(ty: Type, mapping: dict) -> Type:
    """Simultaneous capture-avoiding substitution."""
    if not mapping:
        return ty
    match ty:
        case TyVar(name):
            return mapping.get(name, ty)
        case Arrow(dom, cod):
            return Arrow(subst_types(dom, mapping), subst_types(cod, mapping), ty.span)
        case Record(fields):
            return Record(tuple((l, subst_types(t, mapping)) for l, t in fields), ty.span)
        case AdtApp(name, args):
            return AdtApp(name, tuple(subst_types(t, mapping) for t in args), ty.span)
        case Alias(name, args):
            return Alias(name, tuple(subst_types(t, mapping) for t in args), ty.span)
        case TyApp(fn, arg):
            return TyApp(subst_types(fn, mapping), subst_types(arg, mapping), ty.span)
        case Ref(cell):
            return Ref(subst_types(cell, mapping), ty.span)
        case Base():
            return ty
        case TyLam() | Forall() | Exists():
            binder, body = ty.binder, ty.body
            inner = {v: r for v, r in mapping.items() if v != binder}
            body_fv = free_type_vars(body)
            inner = {v: r for v, r in inner.items() if v in body_fv}
            if not inner:
                return ty
            repl_fv = frozenset().union(*(free_type_vars(r) for r in inner.values()))
            if binder in repl_fv:
                new = fresh_name(binder, repl_fv | body_fv | inner.keys())
                inner[binder] = TyVar(new)
                binder = new
            return _rebind(ty, binder, subst_types(body, inner))
    raise TypeError(f"not a type: {ty!r}")


def _rebind(ty, binder, body):
    if isinstance(ty, TyLam):
        return TyLam(binder, ty.variance, ty.kind, body, ty.span)
    return type(ty)(binder, ty.kind, body, ty.span)


def rename_binder(ty, new: str):
    """Rename the outer binder of a TyLam/Forall/Exists to `new`."""
    return _rebind(ty, new, subst_type(ty.body, ty.binder, TyVar(new)))


# ---------------------------------------------------------------------------
# Alpha equivalence


def _canon(ty: Type, env: dict, depth: int):
    match ty:
        case TyVar(name):
            return ("bound", depth - env[name]) if name in env else ("free", name)
        case Arrow(dom, cod):
            return ("->", _canon(dom, env, depth), _canon(cod, env, depth))
        case Record(fields):
            return ("rec",) + tuple(sorted((l, _canon(t, env, depth)) for l, t in fields))
        case AdtApp(name, args):
            return ("adt", name) + tuple(_canon(t, env, depth) for t in args)
        case Alias(name, args):
            return ("alias", name) + tuple(_canon(t, env, depth) for t in args)
        case TyApp(fn, arg):
            return ("app", _canon(fn, env, depth), _canon(arg, env, depth))
        case Ref(cell):
            return ("ref", _canon(cell, env, depth))
        case Base(name):
            return ("base", name)
        case TyLam(binder, variance, kind, body):
            return ("lam", variance, kind, _canon(body, {**env, binder: depth + 1}, depth + 1))
        case Forall(binder, kind, body):
            return ("all", kind, _canon(body, {**env, binder: depth + 1}, depth + 1))
        case Exists(binder, kind, body):
            return ("ex", kind, _canon(body, {**env, binder: depth + 1}, depth + 1))
    raise TypeError(f"not a type: {ty!r}")


def canonical(ty: Type):
    """Hashable key equal for exactly the alpha-equivalent types."""
    return _canon(ty, {}, 0)


def alpha_equal(a: Type, b: Type) -> bool:
    return canonical(a) == canonical(b)


# ---------------------------------------------------------------------------
# Normalization


def _constructor_decl(ctx, name: str, span):
    decl = ctx.adts.get(name) or ctx.aliases.get(name)
    if decl is None:
        raise KindError(f"Unbound type constructor {name}", span)
    return decl


def _eta_expand(ctx, decl, args, span):
    avoid = set().union(*(free_type_vars(a) for a in args)) if args else set()
    binders = []
    for p in decl.params[len(args):]:
        name = fresh_name(p.name, avoid) if p.name in avoid else p.name
        avoid.add(name)
        binders.append((name, p))
    ty = Alias(decl.name, tuple(args) + tuple(TyVar(n) for n, _ in binders), span)
    for name, p in reversed(binders):
        ty = TyLam(name, p.variance, p.kind, ty, span)
    return normalize_type(ctx, ty)


def normalize_type(ctx, ty: Type) -> Type:
    """Expand named constructors and beta-reduce type-level applications.

    `ctx` only needs `adts` and `aliases` mappings from names to declarations.
    """
    match ty:
        case TyVar() | Base():
            return ty
        case Arrow(dom, cod):
            return Arrow(normalize_type(ctx, dom), normalize_type(ctx, cod), ty.span)
        case Record(fields):
            return Record(tuple((l, normalize_type(ctx, t)) for l, t in fields), ty.span)
        case AdtApp(name, args):
            return AdtApp(name, tuple(normalize_type(ctx, t) for t in args), ty.span)
        case Ref(cell):
            return Ref(normalize_type(ctx, cell), ty.span)
        case TyLam(binder, variance, kind, body):
            return TyLam(binder, variance, kind, normalize_type(ctx, body), ty.span)
        case Forall(binder, kind, body):
            return Forall(binder, kind, normalize_type(ctx, body), ty.span)
        case Exists(binder, kind, body):
            return Exists(binder, kind, normalize_type(ctx, body), ty.span)
        case TyApp(fn, arg):
            return _apply(ctx, normalize_type(ctx, fn), normalize_type(ctx, arg), ty.span)
        case Alias(name, args):
            decl = _constructor_decl(ctx, name, ty.span)
            k = len(decl.params)
            args = tuple(normalize_type(ctx, a) for a in args)
            if len(args) < k:
                return _eta_expand(ctx, decl, args, ty.span)
            if isinstance(decl, AdtDecl):
                head = AdtApp(name, args[:k], ty.span)
            else:
                mapping = {p.name: a for p, a in zip(decl.params, args)}
                head = normalize_type(ctx, subst_types(decl.body, mapping))
            for extra in args[k:]:
                head = _apply(ctx, head, extra, ty.span)
            return head
    raise TypeError(f"not a type: {ty!r}")


def _apply(ctx, fn: Type, arg: Type, span) -> Type:
    if isinstance(fn, TyLam):
        return normalize_type(ctx, subst_type(fn.body, fn.binder, arg))
    return TyApp(fn, arg, span)


def spine(ty: Type):
    """Split nested TyApp into (head, [args])."""
    args = []
    while isinstance(ty, TyApp):
        args.append(ty.arg)
        ty = ty.fn
    return ty, args[::-1]


# ---------------------------------------------------------------------------
# Type substitution inside terms (for term-level type binders)


def _term_type_binders(term) -> str | None:
    if isinstance(term, TyAbs):
        return term.binder
    if isinstance(term, Unpack):
        return term.tyname
    return None


def subst_type_in_term(term: Term, var: str, replacement: Type) -> Term:
    """Substitute a type for a type variable in every annotation of `term`."""
    fv = free_type_vars(replacement)

    def ty(t):
        return None if t is None else subst_type(t, var, replacement)

    def go(t):
        match t:
            case Var() | IntLit() | BoolLit() | StringLit() | UnitLit():
                return t
            case Lam(param, ann, body):
                return Lam(param, ty(ann), go(body), t.span)
            case App(fn, arg):
                return App(go(fn), go(arg), t.span)
            case Let(name, ann, bound, body, rec):
                return Let(name, ty(ann), go(bound), go(body), rec, t.span)
            case RecordLit(fields):
                return RecordLit(tuple((l, go(e)) for l, e in fields), t.span)
            case Proj(inner, label):
                return Proj(go(inner), label, t.span)
            case TyAbs(binder, kind, body):
                if binder == var:
                    return t
                if binder in fv:
                    t = rename_term_tyvar(t, fresh_name(binder, fv | {var}))
                    binder, body = t.binder, t.body
                return TyAbs(binder, kind, go(body), t.span)
            case TyAppT(inner, arg):
                return TyAppT(go(inner), ty(arg), t.span)
            case Pack(w, payload, as_type):
                return Pack(ty(w), go(payload), ty(as_type), t.span)
            case Unpack(tyname, valname, packed, body):
                packed = go(packed)
                if tyname == var:
                    return Unpack(tyname, valname, packed, body, t.span)
                if tyname in fv:
                    new = fresh_name(tyname, fv | {var})
                    body = subst_type_in_term(body, tyname, TyVar(new))
                    tyname = new
                return Unpack(tyname, valname, packed, go(body), t.span)
            case Construct(ctor, targs, arg):
                return Construct(ctor, tuple(ty(a) for a in targs), None if arg is None else go(arg), t.span)
            case Match(scrut, arms):
                return Match(go(scrut), tuple(Arm(a.ctor, a.binder, go(a.body), a.span) for a in arms), t.span)
            case RefNew(init):
                return RefNew(go(init), t.span)
            case Deref(r):
                return Deref(go(r), t.span)
            case Assign(r, v):
                return Assign(go(r), go(v), t.span)
            case Coerce(inner, target):
                return Coerce(go(inner), ty(target), t.span)
            case Raise(inner, targ):
                return Raise(go(inner), ty(targ), t.span)
            case Try(body, name, handler):
                return Try(go(body), name, go(handler), t.span)
            case Seq(a, b):
                return Seq(go(a), go(b), t.span)
            case If(c, a, b):
                return If(go(c), go(a), go(b), t.span)
            case BinOp(op, a, b):
                return BinOp(op, go(a), go(b), t.span)
        raise TypeError(f"not a term: {t!r}")

    return go(term)


def rename_term_tyvar(term: TyAbs, new: str) -> TyAbs:
    body = subst_type_in_term(term.body, term.binder, TyVar(new))
    return TyAbs(new, term.kind, body, term.span)
