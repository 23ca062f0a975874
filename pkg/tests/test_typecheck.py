import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subwit import core as c
from subwit.errors import KindError, TypeCheckError, VarianceError
from subwit.evaluator import eval_program, show_value
from subwit.parser import parse_program, parse_term
from subwit.prelude import CORPUS_DIR, load_prelude, prelude
from subwit.printer import show_type
from subwit.subtype import is_subtype
from subwit.typecheck import check, check_program, infer
from helpers import checked, term, ty
from strategies import chains, extended_context

PCTX = prelude()[2]


def _code(source):
    with pytest.raises(TypeCheckError) as info:
        checked(source)
    return info.value.kind


def test_infer_negative_reflexivity_body():
    ctx = PCTX.with_tyvar("b", c.STAR)
    got = infer(ctx, term("Fun 'n::(- * -> *) -> fun (x : 'n 'b) -> x"))
    assert c.alpha_equal(got, ty("all 'n::(- * -> *). 'n 'b -> 'n 'b"))


def test_infer_lowered_reflexivity():
    got = infer(PCTX, term("(refl_neg [{m : int}] :> sub_neg {m : int} {})"))
    assert c.alpha_equal(got, ty("sub_neg {m : int} {}"))


def test_unrelated_coercion_fails():
    with pytest.raises(TypeCheckError) as info:
        infer(PCTX, term("(5 :> bool)"))
    assert info.value.kind == "coercion-failed"
    assert info.value.message.splitlines()[0] == "Type int is not a subtype of bool"


def test_check_projection_function():
    check(PCTX, term("fun (x : {m : int}) -> x.m"), ty("{m : int} -> int"))


def test_check_pack_of_array_payload():
    payload = (
        "pack [{m : int; name : string}, "
        "{elems = Cons [{m : int; name : string}] {hd = {m = 1; name = \"a\"}; tl = Nil [{m : int; name : string}]}; "
        "w = refl [{m : int; name : string}]}] as arr {name : string}"
    )
    check(PCTX, term(payload), ty("exists 'x::*. {elems : 'x list; w : sub 'x {name : string}}"))


def test_check_trans_signature():
    check(PCTX, term("trans"), ty("all 'a::*. all 'b::*. all 'c::*. sub 'a 'b -> sub 'b 'c -> sub 'a 'c"))


@pytest.mark.parametrize("upto", ["sub_neg.swl", "sub_church.swl", "variance_proof.swl"])
def test_prelude_prefixes_check(upto):
    check_program(load_prelude(upto))


def test_covariant_ref_declaration_rejected():
    with pytest.raises(VarianceError):
        check_program(parse_program("type ('a+) bad = 'a ref ;"))


def test_subsumption_at_application_argument():
    checked("let f : {name : string} -> string = fun (r : {name : string}) -> r.name ;\n"
            "main print (f {m = 1; name = \"x\"}) ;")


def test_escape_is_rejected():
    assert _code("let p : exists 't::*. 't = pack [int, 1] as exists 't::*. 't ;\n"
                 "main unpack p as ('t, v) in v ;") == "pack-mismatch"


def test_nonexhaustive_match():
    assert _code("main match Nil [int] with | Nil -> 0 ;") == "nonexhaustive-match"


def test_unknown_name():
    assert _code("main nope ;") == "unknown-name"


def test_constructor_needs_annotation_in_inference():
    assert _code("let x = Nil ;") == "annotation-required"


def test_rec_needs_annotation():
    assert _code("let rec f = fun (x : int) -> f x ;") == "annotation-required"


def test_not_a_function():
    assert _code("main 1 2 ;") in ("not-a-function", "mismatch")


def test_duplicate_type_declaration_is_a_kind_error():
    with pytest.raises(KindError):
        checked("type t = int ; type t = bool ;")


def test_wrong_kind_in_annotation():
    with pytest.raises(KindError):
        checked("let x : list = 1 ;")


def test_binders_shadowing_scope_are_renamed():
    got = infer(PCTX.with_tyvar("a", c.STAR), term("Fun 'a::* -> fun (x : 'a) -> x"))
    assert isinstance(got, c.Forall) and got.binder != "a"


# ---------------------------------------------------------------------------
# properties


@settings(max_examples=300, deadline=None)
@given(chains())
def test_subsumption_is_admissible(chain):
    s, _, t = chain
    ctx = extended_context().with_term("x", s)
    assert is_subtype(ctx.kinds, s, t)
    check(ctx, c.Var("x"), t)
    check(ctx, c.App(c.Lam("y", s, c.Var("y")), c.Var("x")), t)
    check(ctx, c.Coerce(c.Var("x"), t), t)


# first-order records of base values, whose literals we can write down
LEAF = st.one_of(
    st.integers(0, 99).map(c.IntLit),
    st.booleans().map(c.BoolLit),
    st.text("abc", max_size=3).map(c.StringLit),
)
LITERALS = st.recursive(
    LEAF,
    lambda t: st.dictionaries(st.sampled_from("pqrs"), t, max_size=3).map(lambda d: c.RecordLit(tuple(d.items()))),
    max_leaves=8,
)


def _forget(draw, lit):
    """A supertype annotation for the literal: drop some fields at every level."""
    if isinstance(lit, c.RecordLit):
        kept = [(l, _forget(draw, e)) for l, e in lit.fields if draw(st.booleans())]
        return c.Record(tuple(kept))
    return {c.IntLit: c.INT, c.BoolLit: c.BOOL, c.StringLit: c.STRING}[type(lit)]


@st.composite
def literal_and_supertype(draw):
    lit = draw(LITERALS)
    return lit, _forget(draw, lit)


@settings(max_examples=200, deadline=None)
@given(literal_and_supertype())
def test_explicit_coercion_does_not_change_results(pair):
    lit, sup = pair
    plain = c.Prog((c.TermDecl("r", sup, lit),), c.Var("r"))
    coerced = c.Prog((c.TermDecl("r", sup, c.Coerce(lit, sup)),), c.Var("r"))
    base = prelude()[2]
    check_program(plain, base)
    check_program(coerced, base)
    a, b = eval_program(plain), eval_program(coerced)
    assert show_value(a.outcome.value) == show_value(b.outcome.value)


@settings(max_examples=200, deadline=None)
@given(LITERALS)
def test_values_re_embed_at_their_type(lit):
    declared = infer(PCTX, lit)
    result = eval_program(c.Prog((), lit))
    again = parse_term(show_value(result.outcome.value))
    check(PCTX, again, declared)


def test_corpus_term_declarations_have_normalized_types():
    ctx = prelude()[2]
    for name in ("trans", "conv", "cforce", "aiter"):
        t = ctx.terms[name]
        assert c.alpha_equal(c.normalize_type(ctx.kinds, t), t), show_type(t)


def test_prelude_files_exist():
    assert all((CORPUS_DIR / "prelude" / n).exists() for n in ("sub_neg.swl", "sub_pos.swl", "sub_church.swl"))
