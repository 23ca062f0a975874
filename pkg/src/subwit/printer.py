"""Pretty-printer producing source text that reparses to an equal AST."""

from __future__ import annotations

from . import core as c


def show_kind(k: c.Kind) -> str:
    if isinstance(k, c.Star):
        return "*"
    return f"({k.variance.marker} {show_kind(k.param)} -> {show_kind(k.result)})"


# Type precedence levels: 0 binder/arrow, 1 application, 2 atom
def show_type(ty: c.Type) -> str:
    return _ty(ty, 0)


def _paren(text: str, wrap: bool) -> str:
    return f"({text})" if wrap else text


def _ty(ty: c.Type, level: int) -> str:
    match ty:
        case c.TyVar(name):
            return f"'{name}"
        case c.Base(name):
            return name
        case c.Record(fields):
            if not fields:
                return "{}"
            return "{" + "; ".join(f"{l} : {_ty(t, 0)}" for l, t in fields) + "}"
        case c.Arrow(dom, cod):
            return _paren(f"{_ty(dom, 1)} -> {_ty(cod, 0)}", level > 0)
        case c.Forall(binder, kind, body):
            return _paren(f"all '{binder}::{show_kind(kind)}. {_ty(body, 0)}", level > 0)
        case c.Exists(binder, kind, body):
            return _paren(f"exists '{binder}::{show_kind(kind)}. {_ty(body, 0)}", level > 0)
        case c.TyLam(binder, variance, kind, body):
            return _paren(f"\\'{binder}{variance.marker}::{show_kind(kind)}. {_ty(body, 0)}", level > 0)
        case c.Ref(cell):
            return f"{_postfix_arg(cell)} ref"
        case c.AdtApp(name, args) | c.Alias(name, args):
            if not args:
                return name
            if len(args) == 1:
                return f"{_postfix_arg(args[0])} {name}"
            return "(" + ", ".join(_ty(a, 0) for a in args) + f") {name}"
        case c.TyApp():
            head, args = c.spine(ty)
            parts = [_app_head(head)] + [_app_arg(a) for a in args]
            return _paren(" ".join(parts), level > 1)
    raise TypeError(f"not a type: {ty!r}")


def _postfix_arg(ty):
    # postfix constructors bind tighter than prefix application
    if isinstance(ty, (c.TyVar, c.Base, c.Record, c.Ref, c.AdtApp)):
        return _ty(ty, 2)
    if isinstance(ty, c.Alias) and ty.args:
        return _ty(ty, 2)
    return f"({_ty(ty, 0)})"


def _app_head(ty):
    if isinstance(ty, (c.TyVar, c.Base, c.Record)):
        return _ty(ty, 2)
    if isinstance(ty, (c.AdtApp, c.Alias)) and not ty.args:
        return ty.name
    return f"({_ty(ty, 0)})"


def _app_arg(ty):
    if isinstance(ty, (c.TyVar, c.Base, c.Record)):
        return _ty(ty, 2)
    if isinstance(ty, c.AdtApp) and not ty.args:
        return ty.name
    return f"({_ty(ty, 0)})"


# ---------------------------------------------------------------------------
# Terms.  Levels: 0 open (binders, seq inside parens), 1 assign, 2 compare,
# 3 additive, 4 multiplicative, 5 application, 6 prefix arg, 7 postfix/atom.

_BINOP_LEVEL = {"==": 2, "<": 2, "<=": 2, "+": 3, "-": 3, "^": 3, "*": 4}


def show_term(t: c.Term) -> str:
    return _tm(t, 0)


def _tm(t: c.Term, level: int) -> str:
    match t:
        case c.Var(name):
            return name
        case c.IntLit(v):
            return str(v)
        case c.BoolLit(v):
            return "true" if v else "false"
        case c.StringLit(v):
            escaped = v.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
            return f'"{escaped}"'
        case c.UnitLit():
            return "()"
        case c.Seq(a, b):
            return f"({_tm(a, 1)}; {_seq_tail(b)})"
        case c.Lam(param, ann, body):
            return _paren(f"fun ({param} : {show_type(ann)}) -> {_tm(body, 0)}", level > 0)
        case c.TyAbs(binder, kind, body):
            return _paren(f"Fun '{binder}::{show_kind(kind)} -> {_tm(body, 0)}", level > 0)
        case c.Let(name, ann, bound, body, rec):
            head = "let rec" if rec else "let"
            annot = f" : {show_type(ann)}" if ann is not None else ""
            return _paren(f"{head} {name}{annot} = {_tm(bound, 0)} in {_tm(body, 0)}", level > 0)
        case c.Match(scrut, arms):
            shown = " ".join(
                f"| {a.ctor}{' ' + a.binder if a.binder else ''} -> {_tm(a.body, 1)}" for a in arms
            )
            return _paren(f"match {_tm(scrut, 0)} with {shown}", level > 0)
        case c.Try(body, name, handler):
            return _paren(f"try {_tm(body, 0)} with {name} -> {_tm(handler, 1)}", level > 0)
        case c.If(cond, then, else_):
            return _paren(f"if {_tm(cond, 0)} then {_tm(then, 1)} else {_tm(else_, 1)}", level > 0)
        case c.Pack(w, payload, as_type):
            return _paren(f"pack [{show_type(w)}, {_tm(payload, 0)}] as {show_type(as_type)}", level > 0)
        case c.Unpack(tyname, valname, packed, body):
            return _paren(f"unpack {_tm(packed, 0)} as ('{tyname}, {valname}) in {_tm(body, 0)}", level > 0)
        case c.Assign(r, v):
            return _paren(f"{_tm(r, 2)} := {_tm(v, 2)}", level > 1)
        case c.BinOp(op, a, b):
            lv = _BINOP_LEVEL[op]
            # comparisons are non-associative, arithmetic is left-associative
            left = lv + 1 if lv == 2 else lv
            return _paren(f"{_tm(a, left)} {op} {_tm(b, lv + 1)}", level > lv)
        case c.RefNew(init):
            return _paren(f"ref {_tm(init, 6)}", level > 5)
        case c.Raise(inner, targ):
            inst = f" [{show_type(targ)}]" if targ is not None else ""
            return _paren(f"raise{inst} {_tm(inner, 6)}", level > 5)
        case c.Construct(ctor, targs, arg):
            text = ctor + "".join(f" [{show_type(a)}]" for a in targs)
            if arg is not None:
                text = f"{text} {_tm(arg, 6)}"
            return _paren(text, level > 5)
        case c.App(fn, arg):
            head = _tm(fn, 5) if isinstance(fn, c.App) else _tm(fn, 6)
            return _paren(f"{head} {_tm(arg, 6)}", level > 5)
        case c.Deref(r):
            return _paren(f"!{_tm(r, 6)}", level > 6)
        case c.Proj(inner, label):
            return f"{_tm(inner, 7)}.{label}"
        case c.TyAppT(inner, ty):
            return f"{_tm(inner, 7)} [{show_type(ty)}]"
        case c.RecordLit(fields):
            if not fields:
                return "{}"
            return "{" + "; ".join(f"{l} = {_tm(e, 1)}" for l, e in fields) + "}"
        case c.Coerce(inner, target):
            return f"({_tm(inner, 0)} :> {show_type(target)})"
    raise TypeError(f"not a term: {t!r}")


def _seq_tail(t):
    if isinstance(t, c.Seq):
        return f"{_tm(t.first, 1)}; {_seq_tail(t.second)}"
    return _tm(t, 1)


def show_decl(d: c.Decl) -> str:
    match d:
        case c.AdtDecl(name, params, ctors):
            body = " ".join(
                f"| {ctor}" + (f" of {show_type(ty)}" if ty is not None else "") for ctor, ty in ctors
            )
            return f"type {_params(params)}{name} = {body} ;"
        case c.AliasDecl(name, params, body):
            return f"type {_params(params)}{name} = {show_type(body)} ;"
        case c.TermDecl(name, ann, body, rec):
            head = "let rec" if rec else "let"
            annot = f" : {show_type(ann)}" if ann is not None else ""
            return f"{head} {name}{annot} = {_tm(body, 0)} ;"
    raise TypeError(f"not a declaration: {d!r}")


def _params(params) -> str:
    if not params:
        return ""
    shown = []
    for p in params:
        kind = "" if isinstance(p.kind, c.Star) else f"::{show_kind(p.kind)}"
        shown.append(f"'{p.name}{p.variance.marker}{kind}")
    return "(" + ", ".join(shown) + ") "


def show_program(p: c.Prog) -> str:
    lines = [show_decl(d) for d in p.decls]
    if p.main is not None:
        lines.append(f"main {_tm(p.main, 0)} ;")
    return "\n".join(lines) + ("\n" if lines else "")


def show(node) -> str:
    """Print a program, declaration, type, kind or term."""
    if isinstance(node, c.Prog):
        return show_program(node)
    if isinstance(node, (c.AdtDecl, c.AliasDecl, c.TermDecl)):
        return show_decl(node)
    if isinstance(node, (c.Star, c.KArrow)):
        return show_kind(node)
    if isinstance(node, c.Term.__args__):
        return show_term(node)
    return show_type(node)
