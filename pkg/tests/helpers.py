"""Small drivers for checking and running object-language snippets."""

from __future__ import annotations

from subwit import core as c
from subwit.evaluator import eval_program
from subwit.parser import parse_term, parse_type
from subwit.prelude import check_source, prelude, render_run
from subwit.typecheck import check_program


def checked(source: str, file: str = "<snippet>"):
    """Parse and check against the prelude, raising the diagnostic on failure."""
    loaded, err = check_source(source, file)
    if err is not None:
        raise err
    return loaded


def run(source: str) -> str:
    """Check and run a program; returns the transcript as compared to goldens."""
    return render_run(eval_program(checked(source).full))


def run_result(source: str):
    return eval_program(checked(source).full)


def ctx_of(source: str = ""):
    """Typing context after the prelude and the given declarations."""
    loaded = checked(source)
    return check_program(loaded.program, loaded.base)


def term(src: str):
    return parse_term(src, prelude()[1])


def ty(src: str, ctx=None):
    parsed = parse_type(src, prelude()[1])
    kinds = (ctx or prelude()[2]).kinds
    return c.normalize_type(kinds, parsed)


# ---------------------------------------------------------------------------
# Payload suite: (source type, target type, value, observer on the target)

SAMPLES = range(1, 6)


def _apply_at_samples(fn: str) -> str:
    calls = [f'print ({fn} {{m = {i}; name = "in{i}"}}).name' for i in SAMPLES]
    return "(" + "; ".join(calls) + ")"


PAYLOADS = {
    "int": ("int", "int", "5", lambda y: f"print_int {y}"),
    "nested-record": (
        "{p : {q : int; r : string}; t : bool}",
        "{p : {q : int}}",
        '{p = {q = 42; r = "deep"}; t = true}',
        lambda y: f"print_int {y}.p.q",
    ),
    "closure": (
        "{name : string} -> {m : int; name : string}",
        "{m : int; name : string} -> {name : string}",
        'fun (r : {name : string}) -> {m = 0; name = r.name ^ "!"}',
        _apply_at_samples,
    ),
}

ENCODINGS = ("neg", "pos", "church")


def witness_decl(enc: str, name: str, s: str, t: str) -> str:
    """A witness for s <: t in encoding enc, by coercing reflexivity."""
    return f"let {name} : sub_{enc} ({s}) ({t}) = (refl_{enc} [{s}] :> sub_{enc} ({s}) ({t})) ;\n"


def conv_source(a: str, b: str, payload: str, convert: bool) -> str:
    """Observe a payload coerced by an A-witness, optionally converted to B first."""
    s, t, value, observe = PAYLOADS[payload]
    src = witness_decl(a, "w", s, t)
    src += f"let v : {s} = {value} ;\n"
    if convert:
        src += (
            f"let wb : sub_{b} ({s}) ({t}) = (conv [sub_{a}] [sub_{b}] {a}_impl {b}_impl) [{s}] [{t}] w ;\n"
            f"let y : {t} = coerce_{b} [{s}] [{t}] v wb ;\n"
        )
    else:
        src += f"let y : {t} = coerce_{a} [{s}] [{t}] v w ;\n"
    return src + f"main {observe('y')} ;\n"


def round_trip_source(a: str, b: str) -> str:
    src = witness_decl(a, "w", "int", "int")
    src += (
        f"let wb : sub_{b} int int = (conv [sub_{a}] [sub_{b}] {a}_impl {b}_impl) [int] [int] w ;\n"
        f"let wa : sub_{a} int int = (conv [sub_{b}] [sub_{a}] {b}_impl {a}_impl) [int] [int] wb ;\n"
        f"main print_int (coerce_{a} [int] [int] 5 wa) ;\n"
    )
    return src


# chains S <: U <: T for the composition checks
CHAINS = {
    "records": (
        "{k : bool; m : int; name : string}",
        "{m : int; name : string}",
        "{name : string}",
        '{k = true; m = 1; name = "r"}',
        lambda y: f"print {y}.name",
    ),
    "closure": (
        "{name : string} -> {k : bool; m : int; name : string}",
        "{m : int; name : string} -> {m : int; name : string}",
        "{m : int; name : string} -> {name : string}",
        'fun (r : {name : string}) -> {k = false; m = 0; name = r.name ^ "?"}',
        _apply_at_samples,
    ),
}


def trans_source(chain: str, composed: bool) -> str:
    s, u, t, value, observe = CHAINS[chain]
    src = witness_decl("neg", "w1", s, u) + witness_decl("neg", "w2", u, t)
    src += f"let v : {s} = {value} ;\n"
    if composed:
        src += f"let y : {t} = coerce [{s}] [{t}] v (trans [{s}] [{u}] [{t}] w1 w2) ;\n"
    else:
        src += f"let y : {t} = coerce [{u}] [{t}] (coerce [{s}] [{u}] v w1) w2 ;\n"
    return src + f"main {observe('y')} ;\n"


def lift_neg_source(through_witness: bool) -> str:
    """Coerce a {name}-consumer to a {m; name}-consumer via lift_neg, or not at all."""
    src = (
        "let w : sub {m : int; name : string} {name : string} = refl [{m : int; name : string}] ;\n"
        "let f : {name : string} -> int = fun (r : {name : string}) -> (print r.name; 10) ;\n"
    )
    if through_witness:
        src += (
            "let wf : sub ({name : string} -> int) ({m : int; name : string} -> int) =\n"
            "  lift_neg [\\'x-::*. 'x -> int] [{m : int; name : string}] [{name : string}] w ;\n"
            "let g : {m : int; name : string} -> int =\n"
            "  coerce [{name : string} -> int] [{m : int; name : string} -> int] f wf ;\n"
        )
    else:
        src += "let g : {m : int; name : string} -> int = f ;\n"
    calls = [f'print_int (g {{m = {i}; name = "in{i}"}} + {i})' for i in SAMPLES]
    return src + "main (" + "; ".join(calls) + ") ;\n"


def refl_idiom_source(enc: str, mode: str, payload: str) -> str:
    """Lowering coerces refl [T] down in its contravariant slot; raising coerces refl [S] up."""
    s, t, value, observe = PAYLOADS[payload]
    at = t if mode == "lower" else s
    src = f"let w : sub_{enc} ({s}) ({t}) = (refl_{enc} [{at}] :> sub_{enc} ({s}) ({t})) ;\n"
    src += f"let v : {s} = {value} ;\n"
    src += f"let y : {t} = coerce_{enc} [{s}] [{t}] v w ;\n"
    return src + f"main {observe('y')} ;\n"


def direct_source(payload: str) -> str:
    """The payload observed at the target type by plain subsumption, no witness."""
    s, t, value, observe = PAYLOADS[payload]
    return f"let v : {s} = {value} ;\nlet y : {t} = v ;\nmain {observe('y')} ;\n"
