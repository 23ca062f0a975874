"""Kinding, occurrence variance and declaration variance checking."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from . import core as c
from .core import Variance
from .errors import KindError, VarianceError
from .printer import show_kind, show_type

COV, CONTRA, INV, UNUSED = Variance.COV, Variance.CONTRA, Variance.INV, Variance.UNUSED


@dataclass(frozen=True)
class KindingContext:
    """Type variables in scope plus the declared type constructors.

    Treated as immutable: the `with_*` methods return extended copies.
    """

    tyvars: dict = field(default_factory=dict)  # name -> Kind
    adts: dict = field(default_factory=dict)  # name -> AdtDecl
    aliases: dict = field(default_factory=dict)  # name -> AliasDecl
    kinds: dict = field(default_factory=dict)  # constructor name -> full Kind
    ctors: dict = field(default_factory=dict)  # data constructor -> ADT name

    def with_tyvar(self, name: str, kind: c.Kind) -> KindingContext:
        return replace(self, tyvars={**self.tyvars, name: kind})

    def with_tyvars(self, params) -> KindingContext:
        return replace(self, tyvars={**self.tyvars, **{p.name: p.kind for p in params}})

    def with_adt(self, decl: c.AdtDecl) -> KindingContext:
        kind = _params_kind(decl.params, c.STAR)
        return replace(
            self,
            adts={**self.adts, decl.name: decl},
            kinds={**self.kinds, decl.name: kind},
            ctors={**self.ctors, **{name: decl.name for name, _ in decl.ctors}},
        )

    def with_alias(self, decl: c.AliasDecl, body_kind: c.Kind) -> KindingContext:
        return replace(
            self,
            aliases={**self.aliases, decl.name: decl},
            kinds={**self.kinds, decl.name: _params_kind(decl.params, body_kind)},
        )

    def declares(self, name: str) -> bool:
        return name in self.adts or name in self.aliases


def _params_kind(params, result):
    kind = result
    for p in reversed(params):
        kind = c.KArrow(p.variance, p.kind, kind)
    return kind


def compose(outer: Variance, inner: Variance) -> Variance:
    """Variance of an inner position seen through an outer context."""
    if outer is COV:
        return inner
    if outer is CONTRA:
        return inner.neg()
    if outer is INV:
        return UNUSED if inner is UNUSED else INV
    return UNUSED


# ---------------------------------------------------------------------------
# Kinding


def _tycon_kind(ctx: KindingContext, name: str, span):
    kind = ctx.kinds.get(name)
    if kind is None:
        raise KindError(f"Unbound type constructor {name}", span)
    return kind


def _apply_kind(fn_kind, arg_kinds, what, span):
    kind = fn_kind
    for i, ak in enumerate(arg_kinds, 1):
        if not isinstance(kind, c.KArrow):
            raise KindError(f"{what} is applied to too many arguments", span)
        if kind.param != ak:
            raise KindError(
                f"Argument {i} of {what} has kind {show_kind(ak)} but kind {show_kind(kind.param)} was expected",
                span,
            )
        kind = kind.result
    return kind


def kind_of(ctx: KindingContext, ty: c.Type) -> c.Kind:
    match ty:
        case c.TyVar(name):
            if name not in ctx.tyvars:
                raise KindError(f"Unbound type variable '{name}", ty.span)
            return ctx.tyvars[name]
        case c.Base():
            return c.STAR
        case c.Arrow(dom, cod):
            _expect_star(ctx, dom)
            _expect_star(ctx, cod)
            return c.STAR
        case c.Record(fields):
            labels = [l for l, _ in fields]
            if len(set(labels)) != len(labels):
                raise KindError("Duplicate field label in record type", ty.span)
            for _, t in fields:
                _expect_star(ctx, t)
            return c.STAR
        case c.Ref(cell):
            _expect_star(ctx, cell)
            return c.STAR
        case c.AdtApp(name, args):
            decl = ctx.adts.get(name)
            if decl is None:
                raise KindError(f"Unbound type constructor {name}", ty.span)
            if len(args) != len(decl.params):
                raise KindError(
                    f"The type constructor {name} expects {len(decl.params)} argument(s) but is applied to {len(args)}",
                    ty.span,
                )
            return _apply_kind(ctx.kinds[name], [kind_of(ctx, a) for a in args], name, ty.span)
        case c.Alias(name, args):
            return _apply_kind(_tycon_kind(ctx, name, ty.span), [kind_of(ctx, a) for a in args], name, ty.span)
        case c.TyApp(fn, arg):
            fk = kind_of(ctx, fn)
            if not isinstance(fk, c.KArrow):
                raise KindError(f"The type {show_type(fn)} has kind * and cannot be applied", ty.span)
            return _apply_kind(fk, [kind_of(ctx, arg)], show_type(fn), ty.span)
        case c.TyLam(binder, variance, kind, body):
            inner = ctx.with_tyvar(binder, kind)
            body_kind = kind_of(inner, body)
            for v, node, path in occurrences(inner, body, binder):
                if not v <= variance:
                    raise VarianceError(
                        f"Type variable '{binder} is declared {variance.adjective} but occurs {_adverb(v)}\n"
                        f"The offending occurrence is {_describe(path)}",
                        node.span or ty.span,
                        param=binder,
                        inferred=variance_of(inner, body, binder),
                        declared=variance,
                    )
            return c.KArrow(variance, kind, body_kind)
        case c.Forall(binder, kind, body) | c.Exists(binder, kind, body):
            _expect_star(ctx.with_tyvar(binder, kind), body)
            return c.STAR
    raise TypeError(f"not a type: {ty!r}")


def _expect_star(ctx, ty):
    k = kind_of(ctx, ty)
    if k != c.STAR:
        raise KindError(f"The type {show_type(ty)} has kind {show_kind(k)} but a type of kind * was expected", ty.span)


# ---------------------------------------------------------------------------
# Occurrence variance


def occurrences(ctx: KindingContext, ty: c.Type, var: str, pos: Variance = COV, path=()):
    """Yield (variance, TyVar node, path) for each free occurrence of `var`."""
    if pos is UNUSED:
        return
    match ty:
        case c.TyVar(name):
            if name == var:
                yield pos, ty, path
        case c.Base():
            return
        case c.Arrow(dom, cod):
            yield from occurrences(ctx, dom, var, compose(pos, CONTRA), path + ("the argument of a function type",))
            yield from occurrences(ctx, cod, var, pos, path + ("the result of a function type",))
        case c.Record(fields):
            for label, t in fields:
                yield from occurrences(ctx, t, var, pos, path + (f"field {label}",))
        case c.Ref(cell):
            yield from occurrences(ctx, cell, var, compose(pos, INV), path + ("the contents of ref",))
        case c.AdtApp(name, args) | c.Alias(name, args):
            kind = _tycon_kind(ctx, name, ty.span)
            for i, arg in enumerate(args, 1):
                if not isinstance(kind, c.KArrow):
                    raise KindError(f"{name} is applied to too many arguments", ty.span)
                step = f"argument {i} of {name}" if len(args) > 1 else f"the argument of {name}"
                yield from occurrences(ctx, arg, var, compose(pos, kind.variance), path + (step,))
                kind = kind.result
        case c.TyApp(fn, arg):
            fk = kind_of(ctx, fn)
            if not isinstance(fk, c.KArrow):
                raise KindError(f"The type {show_type(fn)} has kind * and cannot be applied", ty.span)
            yield from occurrences(ctx, fn, var, pos, path)
            yield from occurrences(ctx, arg, var, compose(pos, fk.variance), path + (f"the argument of {show_type(fn)}",))
        case c.TyLam(binder, _, kind, body) | c.Forall(binder, kind, body) | c.Exists(binder, kind, body):
            if binder != var:
                yield from occurrences(ctx.with_tyvar(binder, kind), body, var, pos, path)
        case _:
            raise TypeError(f"not a type: {ty!r}")


def variance_of(ctx: KindingContext, ty: c.Type, var: str) -> Variance:
    result = UNUSED
    for v, _, _ in occurrences(ctx, ty, var):
        result = result.join(v)
    return result


def _adverb(v: Variance) -> str:
    return {COV: "covariantly", CONTRA: "contravariantly", INV: "invariantly", UNUSED: "nowhere"}[v]


def _describe(path) -> str:
    if not path:
        return "at the top of the definition"
    return "in " + ", within ".join(reversed(path))


def check_decl_variance(ctx: KindingContext, decl) -> c.Kind:
    """Check kinds and declared parameter variances; return the body kind.

    For an ADT the recursive self-reference is assumed to have the declared
    variances, and the constructor payloads are checked against them.
    """
    inner = ctx.with_tyvars(decl.params)
    if isinstance(decl, c.AdtDecl):
        inner = inner.with_adt(decl)
        bodies = [(f"constructor {name}", ty) for name, ty in decl.ctors if ty is not None]
        for _, ty in bodies:
            _expect_star(inner, ty)
        body_kind = c.STAR
    else:
        bodies = [("definition", decl.body)]
        body_kind = kind_of(inner, decl.body)
    for p in decl.params:
        for where, ty in bodies:
            for v, node, path in occurrences(inner, ty, p.name):
                if not v <= p.variance:
                    raise VarianceError(
                        f"The type parameter '{p.name} of {decl.name} is declared {p.variance.adjective} "
                        f"but occurs {_adverb(v)}\n"
                        f"The offending occurrence is {_describe(path)}"
                        + (f" of {where}" if where != "definition" else ""),
                        node.span or decl.span,
                        param=p.name,
                        inferred=variance_of(inner, ty, p.name),
                        declared=p.variance,
                    )
    return body_kind
