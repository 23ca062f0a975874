"""Call-by-value interpreter with a mutable store and exceptions.

The machine is iterative: continuation frames live on an explicit list, so
deep recursion in object programs (long lists) does not touch the Python
stack.  Type abstractions are values, type applications force them, and
coercions evaluate exactly as their subterm.

Steps are counted per phase: one for each beta reduction (term or type
application), dereference, assignment and match.  Object programs switch
phases with the `phase` builtin.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Union

from . import core as c


# ---------------------------------------------------------------------------
# Values


@dataclass(frozen=True)
class IntV:
    value: int


@dataclass(frozen=True)
class BoolV:
    value: bool


@dataclass(frozen=True)
class UnitV:
    pass


@dataclass(frozen=True)
class StringV:
    value: str


@dataclass(frozen=True)
class ExnV:
    payload: str


@dataclass(eq=False)
class Closure:
    env: dict
    param: str
    body: c.Term


@dataclass(eq=False)
class TyClosure:
    env: dict
    binder: str
    body: c.Term


@dataclass(frozen=True)
class RecordV:
    fields: tuple  # of (label, Value), in source order

    def get(self, label):
        for l, v in self.fields:
            if l == label:
                return v
        raise KeyError(label)


@dataclass(frozen=True)
class CtorV:
    adt: Optional[str]
    ctor: str
    value: Optional["Value"]


@dataclass(frozen=True)
class PackV:
    value: "Value"


@dataclass(frozen=True)
class RefV:
    cell: int


@dataclass(frozen=True)
class BuiltinV:
    name: str


Value = Union[IntV, BoolV, UnitV, StringV, ExnV, Closure, TyClosure, RecordV, CtorV, PackV, RefV, BuiltinV]
UNIT_V = UnitV()


def show_value(v, store: Store | None = None) -> str:
    match v:
        case IntV(n):
            return str(n)
        case BoolV(b):
            return "true" if b else "false"
        case UnitV():
            return "()"
        case StringV(s):
            return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'
        case ExnV(p):
            return f"<exn {p}>"
        case Closure() | BuiltinV():
            return "<fun>"
        case TyClosure():
            return "<poly>"
        case RecordV(fields):
            return "{" + "; ".join(f"{l} = {show_value(x, store)}" for l, x in fields) + "}"
        case CtorV(_, ctor, None):
            return ctor
        case CtorV(_, ctor, payload):
            return f"{ctor} {show_value(payload, store)}"
        case PackV():
            return "<pack>"
        case RefV(cell):
            if store is not None and cell in store.cells:
                return f"ref {show_value(store.cells[cell], store)}"
            return f"<ref {cell}>"
    raise TypeError(f"not a value: {v!r}")


# ---------------------------------------------------------------------------
# Store and outcomes


@dataclass
class Store:
    cells: dict = field(default_factory=dict)
    next_id: int = 0

    def new(self, value) -> RefV:
        ref = RefV(self.next_id)
        self.cells[self.next_id] = value
        self.next_id += 1
        return ref

    def get(self, ref: RefV):
        return self.cells[ref.cell]

    def set(self, ref: RefV, value) -> None:
        self.cells[ref.cell] = value


@dataclass(frozen=True)
class Returned:
    value: Value


@dataclass(frozen=True)
class Raised:
    exn: ExnV


Outcome = Union[Returned, Raised]


class StuckError(RuntimeError):
    """A state no well-typed program reaches."""


class OutOfFuel(RuntimeError):
    pass


BUILTINS = ("print", "print_int", "print_bool", "string_of_int", "exn_of_string", "string_of_exn", "phase")


def builtin_env() -> dict:
    return {name: BuiltinV(name) for name in BUILTINS}


# ---------------------------------------------------------------------------
# The machine

COUNTED = ("beta", "deref", "assign", "match")


class Machine:
    """Evaluates terms against one store, collecting output and step counts."""

    def __init__(self, store: Store | None = None, ctors: dict | None = None, fuel: int | None = None):
        self.store = store if store is not None else Store()
        self.ctors = ctors or {}
        self.fuel = fuel
        self.transcript: list[str] = []
        self.phase = "main"
        self.steps: Counter = Counter()  # phase -> steps
        self.kinds: Counter = Counter()  # step kind -> steps

    @property
    def output(self) -> str:
        return "".join(self.transcript)

    @property
    def total_steps(self) -> int:
        return sum(self.steps.values())

    def tick(self, kind: str) -> None:
        self.steps[self.phase] += 1
        self.kinds[kind] += 1
        if self.fuel is not None and self.total_steps > self.fuel:
            raise OutOfFuel(f"evaluation exceeded {self.fuel} steps")

    def builtin(self, name, arg):
        match name:
            case "print":
                self.transcript.append(arg.value + "\n")
                return UNIT_V
            case "print_int":
                self.transcript.append(f"{arg.value}\n")
                return UNIT_V
            case "print_bool":
                self.transcript.append("true\n" if arg.value else "false\n")
                return UNIT_V
            case "string_of_int":
                return StringV(str(arg.value))
            case "exn_of_string":
                return ExnV(arg.value)
            case "string_of_exn":
                return StringV(arg.payload)
            case "phase":
                self.phase = arg.value
                return UNIT_V
        raise StuckError(f"unknown builtin {name}")

    def run(self, term: c.Term, env: dict) -> Outcome:
        stack: list = []
        value = None
        raising = None  # ExnV while unwinding
        todo = (term, env)  # pending evaluation, or None when returning `value`
        while True:
            if raising is not None:
                while stack and stack[-1][0] != "try":
                    stack.pop()
                if not stack:
                    return Raised(raising)
                _, name, handler, henv = stack.pop()
                todo = (handler, {**henv, name: raising})
                raising = None
                continue

            if todo is not None:
                e, env = todo
                todo = None
                match e:
                    case c.Var(name):
                        if name not in env:
                            raise StuckError(f"unbound variable {name}")
                        value = env[name]
                    case c.IntLit(n):
                        value = IntV(n)
                    case c.BoolLit(b):
                        value = BoolV(b)
                    case c.StringLit(s):
                        value = StringV(s)
                    case c.UnitLit():
                        value = UNIT_V
                    case c.Lam(param, _, body):
                        value = Closure(env, param, body)
                    case c.TyAbs(binder, _, body):
                        value = TyClosure(env, binder, body)
                    case c.App(fn, arg):
                        stack.append(("app-fn", arg, env))
                        todo = (fn, env)
                    case c.Let(name, _, bound, body, True):
                        rec = _rec_value(bound, env, name)
                        todo = (body, {**env, name: rec})
                    case c.Let(name, _, bound, body, False):
                        stack.append(("let", name, body, env))
                        todo = (bound, env)
                    case c.RecordLit(fields):
                        if not fields:
                            value = RecordV(())
                        else:
                            stack.append(("record", fields, (), env))
                            todo = (fields[0][1], env)
                    case c.Proj(inner, label):
                        stack.append(("proj", label))
                        todo = (inner, env)
                    case c.TyAppT(inner, _):
                        stack.append(("tyapp",))
                        todo = (inner, env)
                    case c.Pack(_, payload, _):
                        stack.append(("pack",))
                        todo = (payload, env)
                    case c.Unpack(_, valname, packed, body):
                        stack.append(("unpack", valname, body, env))
                        todo = (packed, env)
                    case c.Construct(ctor, _, None):
                        value = CtorV(self.ctors.get(ctor), ctor, None)
                    case c.Construct(ctor, _, arg):
                        stack.append(("ctor", ctor))
                        todo = (arg, env)
                    case c.Match(scrut, arms):
                        stack.append(("match", arms, env))
                        todo = (scrut, env)
                    case c.RefNew(init):
                        stack.append(("ref",))
                        todo = (init, env)
                    case c.Deref(r):
                        stack.append(("deref",))
                        todo = (r, env)
                    case c.Assign(r, v):
                        stack.append(("assign-ref", v, env))
                        todo = (r, env)
                    case c.Coerce(inner, _):
                        todo = (inner, env)
                    case c.Raise(inner, _):
                        stack.append(("raise",))
                        todo = (inner, env)
                    case c.Try(body, name, handler):
                        stack.append(("try", name, handler, env))
                        todo = (body, env)
                    case c.Seq(first, second):
                        stack.append(("seq", second, env))
                        todo = (first, env)
                    case c.If(cond, then, else_):
                        stack.append(("if", then, else_, env))
                        todo = (cond, env)
                    case c.BinOp(op, left, right):
                        stack.append(("binop-left", op, right, env))
                        todo = (left, env)
                    case _:
                        raise StuckError(f"cannot evaluate {e!r}")
                continue

            # return `value` to the top frame
            if not stack:
                return Returned(value)
            frame = stack.pop()
            match frame:
                case ("app-fn", arg, fenv):
                    stack.append(("app-arg", value))
                    todo = (arg, fenv)
                case ("app-arg", fn):
                    if isinstance(fn, Closure):
                        self.tick("beta")
                        todo = (fn.body, {**fn.env, fn.param: value})
                    elif isinstance(fn, BuiltinV):
                        value = self.builtin(fn.name, value)
                    else:
                        raise StuckError(f"applying a non-function {fn!r}")
                case ("let", name, body, lenv):
                    todo = (body, {**lenv, name: value})
                case ("record", fields, done, renv):
                    done = done + ((fields[len(done)][0], value),)
                    if len(done) == len(fields):
                        value = RecordV(done)
                    else:
                        stack.append(("record", fields, done, renv))
                        todo = (fields[len(done)][1], renv)
                case ("proj", label):
                    value = value.get(label)
                case ("tyapp",):
                    if not isinstance(value, TyClosure):
                        raise StuckError(f"instantiating a non-polymorphic value {value!r}")
                    self.tick("beta")
                    todo = (value.body, value.env)
                case ("pack",):
                    value = PackV(value)
                case ("unpack", valname, body, uenv):
                    todo = (body, {**uenv, valname: value.value})
                case ("ctor", ctor):
                    value = CtorV(self.ctors.get(ctor), ctor, value)
                case ("match", arms, menv):
                    self.tick("match")
                    arm = next((a for a in arms if a.ctor == value.ctor), None)
                    if arm is None:
                        raise StuckError(f"no arm for constructor {value.ctor}")
                    if arm.binder is None:
                        todo = (arm.body, menv)
                    else:
                        payload = UNIT_V if value.value is None else value.value
                        todo = (arm.body, {**menv, arm.binder: payload})
                case ("ref",):
                    value = self.store.new(value)
                case ("deref",):
                    self.tick("deref")
                    value = self.store.get(value)
                case ("assign-ref", v, aenv):
                    stack.append(("assign-val", value))
                    todo = (v, aenv)
                case ("assign-val", ref):
                    self.tick("assign")
                    self.store.set(ref, value)
                    value = UNIT_V
                case ("raise",):
                    raising = value
                case ("try", _, _, _):
                    pass
                case ("seq", second, senv):
                    todo = (second, senv)
                case ("if", then, else_, ienv):
                    todo = (then if value.value else else_, ienv)
                case ("binop-left", op, right, benv):
                    stack.append(("binop-right", op, value))
                    todo = (right, benv)
                case ("binop-right", op, left):
                    value = _binop(op, left, value)
                case _:
                    raise StuckError(f"bad frame {frame!r}")


def _rec_value(bound: c.Term, env: dict, name: str):
    """Tie the knot for `let rec`: the closure's environment contains itself."""
    if isinstance(bound, c.Lam):
        value = Closure(None, bound.param, bound.body)
    elif isinstance(bound, c.TyAbs):
        value = TyClosure(None, bound.binder, bound.body)
    else:
        raise StuckError("let rec of a non-function")
    value.env = {**env, name: value}
    return value


def _binop(op, a, b):
    match op:
        case "+":
            return IntV(a.value + b.value)
        case "-":
            return IntV(a.value - b.value)
        case "*":
            return IntV(a.value * b.value)
        case "==":
            return BoolV(a.value == b.value)
        case "<":
            return BoolV(a.value < b.value)
        case "<=":
            return BoolV(a.value <= b.value)
        case "^":
            return StringV(a.value + b.value)
    raise StuckError(f"unknown operator {op}")


# ---------------------------------------------------------------------------
# Entry points


def eval_term(env: dict | None, store: Store | None, e: c.Term, machine: Machine | None = None) -> Outcome:
    machine = machine or Machine(store)
    base = builtin_env()
    if env:
        base.update(env)
    return machine.run(e, base)


@dataclass
class ProgramResult:
    env: dict
    outcome: Outcome
    machine: Machine

    @property
    def transcript(self) -> str:
        return self.machine.output


def _ctor_table(prog: c.Prog) -> dict:
    return {ctor: d.name for d in prog.decls if isinstance(d, c.AdtDecl) for ctor, _ in d.ctors}


def eval_program(prog: c.Prog, fuel: int | None = None) -> ProgramResult:
    """Evaluate declarations in order, then `main` if present."""
    machine = Machine(ctors=_ctor_table(prog), fuel=fuel)
    env = builtin_env()
    for d in prog.decls:
        if not isinstance(d, c.TermDecl):
            continue
        if d.rec:
            env = {**env, d.name: _rec_value(d.body, env, d.name)}
            continue
        outcome = machine.run(d.body, env)
        if isinstance(outcome, Raised):
            return ProgramResult(env, outcome, machine)
        env = {**env, d.name: outcome.value}
    if prog.main is None:
        return ProgramResult(env, Returned(UNIT_V), machine)
    return ProgramResult(env, machine.run(prog.main, env), machine)


# ---------------------------------------------------------------------------
# Erasure

COERCE_NAMES = frozenset(("coerce", "coerce_neg", "coerce_pos", "coerce_church"))


def _is_coerce_head(t) -> bool:
    if isinstance(t, c.Var):
        return t.name in COERCE_NAMES
    return isinstance(t, c.Proj) and t.label == "coerce"


def _witness_payload(t):
    """Return x when t is `coerce [A] [B] x w`, else None."""
    if not (isinstance(t, c.App) and isinstance(t.fn, c.App)):
        return None
    inst = t.fn.fn
    if not (isinstance(inst, c.TyAppT) and isinstance(inst.term, c.TyAppT)):
        return None
    if not _is_coerce_head(inst.term.term):
        return None
    return t.fn.arg


def strip_coercions(node):
    """Erase coercion nodes and witness applications from a term or program."""
    if isinstance(node, c.Prog):
        decls = tuple(
            c.TermDecl(d.name, d.ann, strip_coercions(d.body), d.rec, d.span) if isinstance(d, c.TermDecl) else d
            for d in node.decls
        )
        return c.Prog(decls, None if node.main is None else strip_coercions(node.main))
    return _strip(node)


def _strip(t):
    if isinstance(t, c.Coerce):
        return _strip(t.term)
    payload = _witness_payload(t)
    if payload is not None:
        return _strip(payload)
    match t:
        case c.Var() | c.IntLit() | c.BoolLit() | c.StringLit() | c.UnitLit():
            return t
        case c.Lam(param, ann, body):
            return c.Lam(param, ann, _strip(body), t.span)
        case c.App(fn, arg):
            return c.App(_strip(fn), _strip(arg), t.span)
        case c.Let(name, ann, bound, body, rec):
            return c.Let(name, ann, _strip(bound), _strip(body), rec, t.span)
        case c.RecordLit(fields):
            return c.RecordLit(tuple((l, _strip(e)) for l, e in fields), t.span)
        case c.Proj(inner, label):
            return c.Proj(_strip(inner), label, t.span)
        case c.TyAbs(binder, kind, body):
            return c.TyAbs(binder, kind, _strip(body), t.span)
        case c.TyAppT(inner, ty):
            return c.TyAppT(_strip(inner), ty, t.span)
        case c.Pack(w, payload, as_type):
            return c.Pack(w, _strip(payload), as_type, t.span)
        case c.Unpack(tyname, valname, packed, body):
            return c.Unpack(tyname, valname, _strip(packed), _strip(body), t.span)
        case c.Construct(ctor, targs, arg):
            return c.Construct(ctor, targs, None if arg is None else _strip(arg), t.span)
        case c.Match(scrut, arms):
            return c.Match(_strip(scrut), tuple(c.Arm(a.ctor, a.binder, _strip(a.body), a.span) for a in arms), t.span)
        case c.RefNew(init):
            return c.RefNew(_strip(init), t.span)
        case c.Deref(r):
            return c.Deref(_strip(r), t.span)
        case c.Assign(r, v):
            return c.Assign(_strip(r), _strip(v), t.span)
        case c.Raise(inner, targ):
            return c.Raise(_strip(inner), targ, t.span)
        case c.Try(body, name, handler):
            return c.Try(_strip(body), name, _strip(handler), t.span)
        case c.Seq(a, b):
            return c.Seq(_strip(a), _strip(b), t.span)
        case c.If(cond, a, b):
            return c.If(_strip(cond), _strip(a), _strip(b), t.span)
        case c.BinOp(op, a, b):
            return c.BinOp(op, _strip(a), _strip(b), t.span)
    raise TypeError(f"not a term: {t!r}")


def count_erasable(node) -> int:
    """Number of Coerce nodes and witness applications in a term or program."""
    if isinstance(node, c.Prog):
        terms = [d.body for d in node.decls if isinstance(d, c.TermDecl)]
        if node.main is not None:
            terms.append(node.main)
        return sum(count_erasable(t) for t in terms)
    n = 1 if isinstance(node, c.Coerce) or _witness_payload(node) is not None else 0
    for child in _children(node):
        n += count_erasable(child)
    return n


def _children(t):
    for name in getattr(t, "__dataclass_fields__", {}):
        v = getattr(t, name)
        if isinstance(v, c.Term.__args__):
            yield v
        elif isinstance(v, tuple):
            for item in v:
                if isinstance(item, c.Arm):
                    yield item.body
                elif isinstance(item, tuple) and len(item) == 2 and isinstance(item[1], c.Term.__args__):
                    yield item[1]
