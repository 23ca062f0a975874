"""Algorithmic subtyping on normalized types.

`subtype` returns a derivation tree or raises `SubtypeFailure`.  Failure
messages say "first"/"second" relative to the original query, so a missing
field found after flipping through a contravariant or invariant position is
attributed to the right side.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import core as c
from .core import Variance
from .kinds import KindingContext
from .printer import show_kind, show_type

REASONS = ("missing-field", "arrow-domain", "invariant-mismatch", "head-mismatch", "kind-mismatch")


@dataclass(frozen=True)
class Derivation:
    rule: str
    premises: tuple
    conclusion: tuple  # (sub, super)

    def render(self, depth: int = 0) -> str:
        s, t = self.conclusion
        lines = ["  " * depth + f"[{self.rule}] {show_type(s)} <: {show_type(t)}"]
        lines += [p.render(depth + 1) for p in self.premises]
        return "\n".join(lines)

    def size(self) -> int:
        return 1 + sum(p.size() for p in self.premises)


class SubtypeFailure(Exception):
    def __init__(self, reason, explanation, path=(), at=None, cause=None):
        assert reason in REASONS, reason
        super().__init__(explanation)
        self.reason = reason
        self.explanation = explanation
        self.path = tuple(path)
        self.at = at  # the (sub, super) pair where the rule failed
        self.cause = cause
        self.left = self.right = None  # the top-level query, set by subtype()

    def __str__(self):
        return explain(self)


def explain(f: SubtypeFailure) -> str:
    left, right = (f.left, f.right) if f.left is not None else f.at
    return f"Type {show_type(left)} is not a subtype of {show_type(right)}\n{f.explanation}"


def _lower_first(text: str) -> str:
    return text[:1].lower() + text[1:]


def _head(ty) -> str:
    match ty:
        case c.Base(name) | c.AdtApp(name, _):
            return name
        case c.Record():
            return "{...}"
        case c.Arrow():
            return "->"
        case c.Ref():
            return "ref"
        case c.Forall():
            return "all"
        case c.Exists():
            return "exists"
        case c.TyLam():
            return "a type function"
        case c.TyVar() | c.TyApp():
            head, _ = c.spine(ty)
            return show_type(head)
    return show_type(ty)


class _Engine:
    def __init__(self, ctx: KindingContext):
        self.ctx = ctx

    def fail(self, reason, explanation, path, s, t, cause=None):
        raise SubtypeFailure(reason, explanation, path, (s, t), cause)

    def head_mismatch(self, s, t, path, flipped):
        a, b = (t, s) if flipped else (s, t)
        self.fail("head-mismatch", f"The type constructors {_head(a)} and {_head(b)} differ", path, s, t)

    def sub(self, ctx, s, t, path, flipped) -> Derivation:
        concl = (s, t)
        match s, t:
            case c.Base(a), c.Base(b):
                if a != b:
                    self.head_mismatch(s, t, path, flipped)
                return Derivation("base", (), concl)
            case c.Arrow(), c.Arrow():
                try:
                    dom = self.sub(ctx, t.dom, s.dom, path + ("domain",), not flipped)
                except SubtypeFailure as e:
                    self.fail(
                        "arrow-domain",
                        f"In the function argument, {_lower_first(e.explanation)}",
                        path + ("domain",),
                        s,
                        t,
                        e,
                    )
                cod = self.sub(ctx, s.cod, t.cod, path + ("codomain",), flipped)
                return Derivation("arrow", (dom, cod), concl)
            case c.Record(), c.Record():
                have = s.field_map()
                premises = []
                for label, ft in t.fields:
                    if label not in have:
                        which = "second" if flipped else "first"
                        self.fail("missing-field", f"The {which} record type has no field {label}", path, s, t)
                    premises.append(self.sub(ctx, have[label], ft, path + (f"field {label}",), flipped))
                rule = "record" if len(s.fields) == len(t.fields) else "record-width"
                return Derivation(rule, tuple(premises), concl)
            case c.AdtApp(), c.AdtApp():
                if s.name != t.name:
                    self.head_mismatch(s, t, path, flipped)
                decl = ctx.adts[s.name]
                premises = []
                for i, (p, sa, ta) in enumerate(zip(decl.params, s.args, t.args), 1):
                    where = f"The type {s.name} is {p.variance.adjective} in argument {i}"
                    premises += self.arg(ctx, p.variance, p.kind, sa, ta, path + (f"{s.name} argument {i}",), flipped, where)
                return Derivation("adt", tuple(premises), concl)
            case c.Ref(), c.Ref():
                premises = self.arg(
                    ctx, Variance.INV, c.STAR, s.cell, t.cell, path + ("ref",), flipped, "The ref type is invariant"
                )
                return Derivation("ref", tuple(premises), concl)
            case (c.Forall(), c.Forall()) | (c.Exists(), c.Exists()):
                if s.kind != t.kind:
                    self.fail(
                        "kind-mismatch",
                        f"The quantified variables have different kinds {show_kind(s.kind)} and {show_kind(t.kind)}",
                        path,
                        s,
                        t,
                    )
                name = s.binder
                avoid = c.free_type_vars(s) | c.free_type_vars(t) | ctx.tyvars.keys()
                if name != t.binder or name in ctx.tyvars:
                    name = c.fresh_name(name, avoid)
                sb = c.subst_type(s.body, s.binder, c.TyVar(name))
                tb = c.subst_type(t.body, t.binder, c.TyVar(name))
                body = self.sub(ctx.with_tyvar(name, s.kind), sb, tb, path + (f"body of {_head(s)}",), flipped)
                return Derivation("forall" if isinstance(s, c.Forall) else "exists", (body,), concl)
            case (c.TyVar() | c.TyApp(), c.TyVar() | c.TyApp()):
                sh, sargs = c.spine(s)
                th, targs = c.spine(t)
                if not (isinstance(sh, c.TyVar) and isinstance(th, c.TyVar)):
                    if c.alpha_equal(s, t):
                        return Derivation("refl", (), concl)
                    self.head_mismatch(s, t, path, flipped)
                if sh.name != th.name or len(sargs) != len(targs):
                    self.head_mismatch(s, t, path, flipped)
                kind = ctx.tyvars.get(sh.name)
                premises = []
                for i, (sa, ta) in enumerate(zip(sargs, targs), 1):
                    if isinstance(kind, c.KArrow):
                        v, pk, kind = kind.variance, kind.param, kind.result
                    else:
                        v, pk = Variance.INV, None
                    where = f"The type constructor '{sh.name} is {v.adjective} in argument {i}"
                    premises += self.arg(ctx, v, pk, sa, ta, path + (f"'{sh.name} argument {i}",), flipped, where)
                return Derivation("var" if not sargs else "var-app", tuple(premises), concl)
            case c.TyLam(), c.TyLam():
                if c.alpha_equal(s, t):
                    return Derivation("refl", (), concl)
                self.fail("invariant-mismatch", "The type functions are not equal", path, s, t)
        self.head_mismatch(s, t, path, flipped)

    def arg(self, ctx, variance, kind, sa, ta, path, flipped, where):
        if variance is Variance.UNUSED:
            return []
        if kind != c.STAR:
            # constructor arguments are compared for equality only
            if c.alpha_equal(sa, ta):
                return [Derivation("refl", (), (sa, ta))]
            self.fail(
                "invariant-mismatch",
                f"{where}, and the type functions {show_type(sa)} and {show_type(ta)} differ",
                path,
                sa,
                ta,
            )
        if variance is Variance.COV:
            return [self.sub(ctx, sa, ta, path, flipped)]
        if variance is Variance.CONTRA:
            return [self.sub(ctx, ta, sa, path, not flipped)]
        try:
            return [self.sub(ctx, sa, ta, path, flipped), self.sub(ctx, ta, sa, path, not flipped)]
        except SubtypeFailure as e:
            self.fail("invariant-mismatch", f"{where}, and {_lower_first(e.explanation)}", path, sa, ta, e)


def subtype(ctx: KindingContext, s: c.Type, t: c.Type) -> Derivation:
    """Decide s <: t for normalized types of kind *."""
    try:
        return _Engine(ctx).sub(ctx, s, t, (), False)
    except SubtypeFailure as e:
        e.left, e.right = s, t
        raise


def is_subtype(ctx: KindingContext, s: c.Type, t: c.Type) -> bool:
    try:
        subtype(ctx, s, t)
    except SubtypeFailure:
        return False
    return True


def equiv(ctx: KindingContext, s: c.Type, t: c.Type) -> bool:
    return is_subtype(ctx, s, t) and is_subtype(ctx, t, s)
