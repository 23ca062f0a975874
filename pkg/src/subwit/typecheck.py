"""Bidirectional type checking with subsumption.

Every type stored in a `TypingContext` is normalized and has kind *.  Type
binders introduced by terms (`Fun`, `unpack`) are renamed when they would
shadow a type variable already in scope, so normalized types never mention
two different variables under one name.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from . import core as c
from .errors import KindError, TypeCheckError
from .kinds import KindingContext, check_decl_variance, kind_of
from .printer import show_kind, show_type
from .subtype import SubtypeFailure, explain, subtype

BUILTIN_TYPES = {
    "print": c.Arrow(c.STRING, c.UNIT),
    "print_int": c.Arrow(c.INT, c.UNIT),
    "print_bool": c.Arrow(c.BOOL, c.UNIT),
    "string_of_int": c.Arrow(c.INT, c.STRING),
    "exn_of_string": c.Arrow(c.STRING, c.EXN),
    "string_of_exn": c.Arrow(c.EXN, c.STRING),
    "phase": c.Arrow(c.STRING, c.UNIT),
}


@dataclass(frozen=True)
class TypingContext:
    kinds: KindingContext = field(default_factory=KindingContext)
    terms: dict = field(default_factory=lambda: dict(BUILTIN_TYPES))

    def with_term(self, name: str, ty: c.Type) -> TypingContext:
        return replace(self, terms={**self.terms, name: ty})

    def with_tyvar(self, name: str, kind: c.Kind) -> TypingContext:
        return replace(self, kinds=self.kinds.with_tyvar(name, kind))

    def lookup(self, name: str):
        return self.terms.get(name)


def _err(kind, message, node, **extra):
    return TypeCheckError(kind, message, getattr(node, "span", None), **extra)


class Checker:
    """Holds the optional subtype trace; all state lives in the contexts."""

    def __init__(self, trace: list | None = None):
        self.trace = trace

    # -- types --------------------------------------------------------------

    def wf(self, ctx: TypingContext, ty: c.Type) -> c.Type:
        """Kind-check an annotation at * and normalize it."""
        k = kind_of(ctx.kinds, ty)
        if k != c.STAR:
            raise KindError(
                f"The type {show_type(ty)} has kind {show_kind(k)} but a type of kind * was expected", ty.span
            )
        return c.normalize_type(ctx.kinds, ty)

    def sub(self, ctx: TypingContext, s: c.Type, t: c.Type):
        d = subtype(ctx.kinds, s, t)
        if self.trace is not None:
            self.trace.append(d)
        return d

    def subsume(self, ctx, actual, expected, node, code="mismatch"):
        try:
            self.sub(ctx, actual, expected)
        except SubtypeFailure as f:
            raise _err(
                code,
                f"This expression has type {show_type(actual)} but an expression was expected of type "
                f"{show_type(expected)}\n{f.explanation}",
                node,
                expected=expected,
                actual=actual,
                failure=f,
            ) from None

    def fresh_tyvar(self, ctx: TypingContext, name: str) -> str:
        if name not in ctx.kinds.tyvars:
            return name
        return c.fresh_name(name, ctx.kinds.tyvars.keys())

    # -- synthesis ----------------------------------------------------------

    def infer(self, ctx: TypingContext, e: c.Term) -> c.Type:
        match e:
            case c.Var(name):
                ty = ctx.lookup(name)
                if ty is None:
                    raise _err("unknown-name", f"Unbound value {name}", e)
                return ty
            case c.IntLit():
                return c.INT
            case c.BoolLit():
                return c.BOOL
            case c.StringLit():
                return c.STRING
            case c.UnitLit():
                return c.UNIT
            case c.Lam(param, ann, body):
                dom = self.wf(ctx, ann)
                return c.Arrow(dom, self.infer(ctx.with_term(param, dom), body))
            case c.App(fn, arg):
                fty = self.infer(ctx, fn)
                if not isinstance(fty, c.Arrow):
                    raise _err(
                        "not-a-function",
                        f"This expression has type {show_type(fty)}\nIt is not a function; it cannot be applied",
                        fn,
                        actual=fty,
                    )
                self.check(ctx, arg, fty.dom)
                return fty.cod
            case c.Let(name, ann, bound, body, rec):
                ty = self.let_binding(ctx, name, ann, bound, rec, e)
                return self.infer(ctx.with_term(name, ty), body)
            case c.RecordLit(fields):
                return c.Record(tuple((label, self.infer(ctx, t)) for label, t in fields))
            case c.Proj(inner, label):
                rty = self.infer(ctx, inner)
                if not isinstance(rty, c.Record):
                    raise _err("mismatch", f"This expression has type {show_type(rty)}\nIt is not a record", inner)
                fields = rty.field_map()
                if label not in fields:
                    raise _err(
                        "mismatch", f"This expression has type {show_type(rty)}\nIt has no field {label}", e
                    )
                return fields[label]
            case c.TyAbs():
                name = self.fresh_tyvar(ctx, e.binder)
                if name != e.binder:
                    e = c.rename_term_tyvar(e, name)
                body = self.infer(ctx.with_tyvar(name, e.kind), e.body)
                return c.Forall(name, e.kind, body)
            case c.TyAppT(inner, targ):
                fty = self.infer(ctx, inner)
                if not isinstance(fty, c.Forall):
                    raise _err(
                        "not-a-function",
                        f"This expression has type {show_type(fty)}\nIt is not polymorphic; it cannot be instantiated",
                        inner,
                        actual=fty,
                    )
                arg = self.type_arg(ctx, targ, fty.kind)
                return c.normalize_type(ctx.kinds, c.subst_type(fty.body, fty.binder, arg))
            case c.Pack():
                return self.pack(ctx, e)
            case c.Unpack():
                return self.unpack(ctx, e, None)
            case c.Construct():
                return self.construct(ctx, e, None)
            case c.Match():
                return self.match(ctx, e, None)
            case c.RefNew(init):
                return c.Ref(self.infer(ctx, init))
            case c.Deref(r):
                rty = self.infer(ctx, r)
                if not isinstance(rty, c.Ref):
                    raise _err("mismatch", f"This expression has type {show_type(rty)}\nIt is not a reference", r)
                return rty.cell
            case c.Assign(r, v):
                rty = self.infer(ctx, r)
                if not isinstance(rty, c.Ref):
                    raise _err("mismatch", f"This expression has type {show_type(rty)}\nIt is not a reference", r)
                self.check(ctx, v, rty.cell)
                return c.UNIT
            case c.Coerce(inner, target):
                tty = self.wf(ctx, target)
                sty = self.infer(ctx, inner)
                try:
                    self.sub(ctx, sty, tty)
                except SubtypeFailure as f:
                    raise _err("coercion-failed", explain(f), e, expected=tty, actual=sty, failure=f) from None
                return tty
            case c.Raise(inner, targ):
                self.check(ctx, inner, c.EXN)
                if targ is None:
                    raise _err("annotation-required", "The result type of raise must be given as raise [T] e", e)
                return self.wf(ctx, targ)
            case c.Try(body, name, handler):
                bty = self.infer(ctx, body)
                self.check(ctx.with_term(name, c.EXN), handler, bty)
                return bty
            case c.Seq(first, second):
                self.infer(ctx, first)
                return self.infer(ctx, second)
            case c.If(cond, then, else_):
                self.check(ctx, cond, c.BOOL)
                tty = self.infer(ctx, then)
                self.check(ctx, else_, tty)
                return tty
            case c.BinOp(op, left, right):
                arg, res = c.BINOPS[op]
                self.check(ctx, left, c.Base(arg))
                self.check(ctx, right, c.Base(arg))
                return c.Base(res)
        raise TypeError(f"not a term: {e!r}")

    # -- checking -----------------------------------------------------------

    def check(self, ctx: TypingContext, e: c.Term, expected: c.Type) -> None:
        match e, expected:
            case c.Lam(param, ann, body), c.Arrow():
                dom = self.wf(ctx, ann)
                # a function accepting `dom` may be used where the expected domain is smaller
                self.subsume(ctx, expected.dom, dom, e)
                self.check(ctx.with_term(param, dom), body, expected.cod)
                return
            case c.TyAbs(), c.Forall() if e.kind == expected.kind:
                name = self.fresh_tyvar(ctx, e.binder)
                body = e.body if name == e.binder else c.subst_type_in_term(e.body, e.binder, c.TyVar(name))
                target = c.subst_type(expected.body, expected.binder, c.TyVar(name))
                self.check(ctx.with_tyvar(name, e.kind), body, target)
                return
            case c.RecordLit(fields), c.Record():
                want = expected.field_map()
                have = dict(fields)
                missing = [label for label in want if label not in have]
                if missing:
                    actual = self.infer(ctx, e)
                    self.subsume(ctx, actual, expected, e)
                for label, t in fields:
                    if label in want:
                        self.check(ctx, t, want[label])
                    else:
                        self.infer(ctx, t)
                return
            case c.Let(name, ann, bound, body, rec), _:
                ty = self.let_binding(ctx, name, ann, bound, rec, e)
                self.check(ctx.with_term(name, ty), body, expected)
                return
            case c.Seq(first, second), _:
                self.infer(ctx, first)
                self.check(ctx, second, expected)
                return
            case c.If(cond, then, else_), _:
                self.check(ctx, cond, c.BOOL)
                self.check(ctx, then, expected)
                self.check(ctx, else_, expected)
                return
            case c.Try(body, name, handler), _:
                self.check(ctx, body, expected)
                self.check(ctx.with_term(name, c.EXN), handler, expected)
                return
            case c.Match(), _:
                self.match(ctx, e, expected)
                return
            case c.Unpack(), _:
                self.unpack(ctx, e, expected)
                return
            case c.Construct(), _:
                actual = self.construct(ctx, e, expected)
                self.subsume(ctx, actual, expected, e)
                return
            case c.Raise(inner, None), _:
                self.check(ctx, inner, c.EXN)
                return
        actual = self.infer(ctx, e)
        self.subsume(ctx, actual, expected, e)

    # -- helpers ------------------------------------------------------------

    def type_arg(self, ctx, targ, kind):
        k = kind_of(ctx.kinds, targ)
        if k != kind:
            raise KindError(
                f"The type argument {show_type(targ)} has kind {show_kind(k)} but kind {show_kind(kind)} was expected",
                targ.span,
            )
        return c.normalize_type(ctx.kinds, targ)

    def let_binding(self, ctx, name, ann, bound, rec, node) -> c.Type:
        if rec:
            if ann is None:
                raise _err("annotation-required", f"The recursive definition of {name} needs a type annotation", node)
            if not isinstance(bound, (c.Lam, c.TyAbs)):
                raise _err(
                    "mismatch", f"The recursive definition of {name} must be a function or type abstraction", bound
                )
            ty = self.wf(ctx, ann)
            self.check(ctx.with_term(name, ty), bound, ty)
            return ty
        if ann is None:
            return self.infer(ctx, bound)
        ty = self.wf(ctx, ann)
        self.check(ctx, bound, ty)
        return ty

    def pack(self, ctx, e: c.Pack) -> c.Type:
        as_type = self.wf(ctx, e.as_type)
        if not isinstance(as_type, c.Exists):
            raise _err(
                "pack-mismatch",
                f"The type {show_type(as_type)} is not an existential type",
                e,
                expected=as_type,
            )
        witness = self.type_arg(ctx, e.witness_type, as_type.kind)
        body = c.normalize_type(ctx.kinds, c.subst_type(as_type.body, as_type.binder, witness))
        try:
            self.check(ctx, e.payload, body)
        except TypeCheckError as err:
            if err.kind != "mismatch" or err.span != e.payload.span:
                raise
            raise _err(
                "pack-mismatch",
                f"The packed value does not match {show_type(as_type)} at {show_type(witness)}\n"
                + err.message.split("\n", 1)[-1],
                e.payload,
                expected=body,
                actual=err.actual,
                failure=err.failure,
            ) from None
        return as_type

    def unpack(self, ctx, e: c.Unpack, expected):
        pty = self.infer(ctx, e.packed)
        if not isinstance(pty, c.Exists):
            raise _err(
                "pack-mismatch",
                f"This expression has type {show_type(pty)}\nIt is not an existential package",
                e.packed,
                actual=pty,
            )
        name = self.fresh_tyvar(ctx, e.tyname)
        body = e.body if name == e.tyname else c.subst_type_in_term(e.body, e.tyname, c.TyVar(name))
        inner = ctx.with_tyvar(name, pty.kind).with_term(e.valname, c.subst_type(pty.body, pty.binder, c.TyVar(name)))
        if expected is not None:
            self.check(inner, body, expected)
            return expected
        result = self.infer(inner, body)
        if name in c.free_type_vars(result):
            raise _err(
                "pack-mismatch",
                f"This expression has type {show_type(result)}\nThe abstract type '{name} would escape its scope",
                e,
                actual=result,
            )
        return result

    def adt_of(self, ctx, ctor, node):
        adt = ctx.kinds.ctors.get(ctor)
        if adt is None:
            raise _err("unknown-name", f"Unbound constructor {ctor}", node)
        return ctx.kinds.adts[adt]

    def payload_type(self, ctx, decl, ctor, args):
        mapping = {p.name: a for p, a in zip(decl.params, args)}
        return c.normalize_type(ctx.kinds, c.subst_types(decl.payload(ctor), mapping))

    def construct(self, ctx, e: c.Construct, expected) -> c.Type:
        decl = self.adt_of(ctx, e.ctor, e)
        if e.type_args:
            if len(e.type_args) != len(decl.params):
                raise _err(
                    "mismatch",
                    f"The constructor {e.ctor} expects {len(decl.params)} type argument(s) "
                    f"but is given {len(e.type_args)}",
                    e,
                )
            args = tuple(self.type_arg(ctx, a, p.kind) for a, p in zip(e.type_args, decl.params))
        elif not decl.params:
            args = ()
        elif isinstance(expected, c.AdtApp) and expected.name == decl.name:
            args = expected.args
        else:
            raise _err(
                "annotation-required",
                f"The type arguments of constructor {e.ctor} cannot be determined; write {e.ctor} [T] ...",
                e,
            )
        has_payload = dict(decl.ctors)[e.ctor] is not None
        if has_payload and e.arg is None:
            raise _err("mismatch", f"The constructor {e.ctor} expects an argument", e)
        if not has_payload and e.arg is not None:
            raise _err("mismatch", f"The constructor {e.ctor} expects no argument", e)
        if e.arg is not None:
            self.check(ctx, e.arg, self.payload_type(ctx, decl, e.ctor, args))
        return c.AdtApp(decl.name, args)

    def match(self, ctx, e: c.Match, expected):
        sty = self.infer(ctx, e.scrutinee)
        if not isinstance(sty, c.AdtApp):
            raise _err(
                "mismatch",
                f"This expression has type {show_type(sty)}\nIt is not a datatype and cannot be matched",
                e.scrutinee,
                actual=sty,
            )
        decl = ctx.kinds.adts[sty.name]
        ctors = [name for name, _ in decl.ctors]
        seen = set()
        result = expected
        for arm in e.arms:
            if arm.ctor not in ctors:
                raise _err("mismatch", f"The constructor {arm.ctor} does not belong to type {sty.name}", arm)
            if arm.ctor in seen:
                raise _err("mismatch", f"The constructor {arm.ctor} is matched twice", arm)
            seen.add(arm.ctor)
            inner = ctx
            if arm.binder is not None:
                inner = ctx.with_term(arm.binder, self.payload_type(ctx, decl, arm.ctor, sty.args))
            if result is None:
                result = self.infer(inner, arm.body)
            else:
                self.check(inner, arm.body, result)
        missing = [name for name in ctors if name not in seen]
        if missing:
            raise _err(
                "nonexhaustive-match",
                f"This pattern-matching is not exhaustive\nHere is an example of a case that is not matched: {missing[0]}",
                e,
            )
        return result

    # -- programs -----------------------------------------------------------

    def decl(self, ctx: TypingContext, d: c.Decl) -> TypingContext:
        kctx = ctx.kinds
        match d:
            case c.AdtDecl(name, _, ctors):
                if kctx.declares(name):
                    raise KindError(f"The type {name} is already defined", d.span)
                for ctor, _ in ctors:
                    if ctor in kctx.ctors:
                        raise KindError(f"The constructor {ctor} is already defined", d.span)
                if len({ctor for ctor, _ in ctors}) != len(ctors):
                    raise KindError(f"Duplicate constructor in type {name}", d.span)
                check_decl_variance(kctx, d)
                return replace(ctx, kinds=kctx.with_adt(d))
            case c.AliasDecl(name, _, _):
                if kctx.declares(name):
                    raise KindError(f"The type {name} is already defined", d.span)
                body_kind = check_decl_variance(kctx, d)
                return replace(ctx, kinds=kctx.with_alias(d, body_kind))
            case c.TermDecl(name, ann, body, rec):
                ty = self.let_binding(ctx, name, ann, body, rec, d)
                return ctx.with_term(name, ty)
        raise TypeError(f"not a declaration: {d!r}")

    def program(self, prog: c.Prog, ctx: TypingContext | None = None) -> TypingContext:
        ctx = ctx or TypingContext()
        for d in prog.decls:
            ctx = self.decl(ctx, d)
        if prog.main is not None:
            self.infer(ctx, prog.main)
        return ctx


def infer(ctx: TypingContext, e: c.Term, trace: list | None = None) -> c.Type:
    return Checker(trace).infer(ctx, e)


def check(ctx: TypingContext, e: c.Term, expected: c.Type, trace: list | None = None) -> None:
    Checker(trace).check(ctx, e, expected)


def check_program(prog: c.Prog, ctx: TypingContext | None = None, trace: list | None = None) -> TypingContext:
    return Checker(trace).program(prog, ctx)
