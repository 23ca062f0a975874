from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subwit import core as c
from subwit.errors import ParseError
from subwit.parser import parse_kind, parse_program, parse_term, parse_type, tokenize
from subwit.prelude import CORPUS_DIR, load_prelude, prelude
from subwit.printer import show, show_kind, show_term, show_type

ARITIES = {"sub": 2, "list": 1, "covlzy": 1, "Id": 0, "pnat": 0}
V = c.Variance


def test_alias_decl_with_invariant_param():
    (d,) = parse_program("type ('a!) ref_alias = 'a ref ;").decls
    assert isinstance(d, c.AliasDecl)
    assert d.params == (c.Param("a", V.INV),)
    assert d.body == c.Ref(c.TyVar("a"))


def test_negative_encoding_alias():
    (d,) = parse_program("type ('a+,'b-) sub = all 'n::(- * -> *). 'n 'b -> 'n 'a ;").decls
    assert [p.variance for p in d.params] == [V.COV, V.CONTRA]
    n = c.KArrow(V.CONTRA, c.STAR, c.STAR)
    want = c.Forall("n", n, c.Arrow(c.TyApp(c.TyVar("n"), c.TyVar("b")), c.TyApp(c.TyVar("n"), c.TyVar("a"))))
    assert d.body == want


def test_coercion_to_empty_record():
    assert parse_term("(x :> {})") == c.Coerce(c.Var("x"), c.Record(()))


def test_print_reparses_polymorphic_identity():
    ty = parse_type("all 'a::*. 'a -> 'a")
    assert c.alpha_equal(parse_type(show_type(ty)), ty)


def test_print_empty_record_and_kind():
    assert show_type(c.Record(())) == "{}"
    assert show_kind(c.KArrow(V.CONTRA, c.STAR, c.STAR)) == "(- * -> *)"


def test_parse_kind_nested():
    k = parse_kind("(- * -> (+ * -> *))")
    assert k == c.KArrow(V.CONTRA, c.STAR, c.KArrow(V.COV, c.STAR, c.STAR))


def test_nullary_constructors_in_argument_position():
    t = parse_term("Suc (Suc Zero)")
    assert t == c.Construct("Suc", (), c.Construct("Suc", (), c.Construct("Zero", (), None)))


def test_comments_are_skipped():
    assert parse_term("(* note *) 1 + (* outer (* inner *) still *) 2") == c.BinOp("+", c.IntLit(1), c.IntLit(2))


@pytest.mark.parametrize(
    "src",
    ["let x = ;", "type ('a) t = int ;", "main 1 + ;", "let f = fun (x : ) -> x ;", "type t = | ;", "main \"abc"],
)
def test_parse_errors_carry_spans_inside_source(src):
    with pytest.raises(ParseError) as info:
        parse_program(src, "t.swl")
    span = info.value.span
    assert span is not None and span.file == "t.swl"
    lines = src.split("\n")
    line, col = span.start
    assert 1 <= line <= len(lines) and 1 <= col <= len(lines[line - 1]) + 1


def test_tokenizer_reports_unterminated_comment():
    with pytest.raises(ParseError):
        tokenize("(* open")


def _corpus_files():
    return sorted(CORPUS_DIR.glob("*/*.swl"))


@pytest.mark.parametrize("path", _corpus_files(), ids=lambda p: f"{p.parent.name}/{p.name}")
def test_corpus_files_round_trip(path: Path):
    arities = prelude()[1] if path.parent.name != "prelude" else None
    if arities is None:
        # prelude files see the arities of the files before them
        names = [p.name for p in sorted((CORPUS_DIR / "prelude").glob("*.swl"))]
        assert path.name in names
        prog = load_prelude(path.name)
        decls = prog.decls
        again = parse_program(show(prog)).decls
        assert again == decls
        return
    prog = parse_program(path.read_text(encoding="utf-8"), str(path), arities)
    assert parse_program(show(prog), "<printed>", arities) == prog


# ---------------------------------------------------------------------------
# generated round trips

NAMES = st.sampled_from(["a", "b", "n", "p"])
LABELS = st.sampled_from(["hd", "tl", "m", "name"])
KINDS = st.recursive(
    st.just(c.STAR),
    lambda k: st.builds(c.KArrow, st.sampled_from([V.COV, V.CONTRA, V.INV]), k, k),
    max_leaves=3,
)


def _types():
    leaves = st.one_of(
        st.builds(c.TyVar, NAMES),
        st.sampled_from([c.INT, c.BOOL, c.UNIT, c.STRING, c.EXN]),
        st.just(c.Alias("pnat")),
    )

    def extend(t):
        return st.one_of(
            st.builds(c.Arrow, t, t),
            st.lists(st.tuples(LABELS, t), max_size=3, unique_by=lambda f: f[0]).map(lambda fs: c.Record(tuple(fs))),
            st.builds(c.Ref, t),
            st.builds(lambda a: c.Alias("list", (a,)), t),
            st.builds(lambda a, b: c.Alias("sub", (a, b)), t, t),
            st.builds(lambda a: c.TyApp(c.Alias("Id"), a), t),
            st.builds(lambda n, a: c.TyApp(c.TyVar(n), a), NAMES, t),
            st.builds(lambda n, a, b: c.TyApp(c.TyApp(c.TyVar(n), a), b), NAMES, t, t),
            st.builds(c.Forall, NAMES, KINDS, t),
            st.builds(c.Exists, NAMES, KINDS, t),
            st.builds(c.TyLam, NAMES, st.sampled_from([V.COV, V.CONTRA, V.INV]), KINDS, t),
        )

    return st.recursive(leaves, extend, max_leaves=12)


TYPES = _types()


@settings(max_examples=400, deadline=None)
@given(TYPES)
def test_type_round_trip(ty):
    assert parse_type(show_type(ty), ARITIES) == ty


def _terms():
    leaves = st.one_of(
        st.builds(c.Var, st.sampled_from(["x", "y", "f"])),
        st.builds(c.IntLit, st.integers(min_value=0, max_value=10**6)),
        st.builds(c.BoolLit, st.booleans()),
        st.builds(c.StringLit, st.text(alphabet='ab "\\\n\t', max_size=5)),
        st.just(c.UnitLit()),
        st.builds(lambda t: c.Construct("Nil", (t,), None), TYPES),
        st.just(c.Construct("Zero", (), None)),
    )
    var = st.sampled_from(["x", "y", "f"])
    small_types = st.sampled_from([c.INT, c.Record((("m", c.INT),)), c.Arrow(c.INT, c.BOOL), c.TyVar("a")])

    def extend(t):
        return st.one_of(
            st.builds(c.Lam, var, small_types, t),
            st.builds(c.App, t, t),
            st.builds(c.Let, var, st.none() | small_types, t, t, st.booleans()),
            st.lists(st.tuples(LABELS, t), max_size=3, unique_by=lambda f: f[0]).map(lambda fs: c.RecordLit(tuple(fs))),
            st.builds(c.Proj, t, LABELS),
            st.builds(c.TyAbs, NAMES, KINDS, t),
            st.builds(c.TyAppT, t, small_types),
            st.builds(c.Pack, small_types, t, small_types),
            st.builds(c.Unpack, NAMES, var, t, t),
            st.builds(lambda a, e: c.Construct("Cons", (a,), e), small_types, t),
            st.builds(lambda e: c.Construct("Suc", (), e), t),
            st.builds(
                lambda s, a, b: c.Match(s, (c.Arm("Nil", None, a), c.Arm("Cons", "x", b))), t, t, t
            ),
            st.builds(c.RefNew, t),
            st.builds(c.Deref, t),
            st.builds(c.Assign, t, t),
            st.builds(c.Coerce, t, small_types),
            st.builds(c.Raise, t, st.none() | small_types),
            st.builds(c.Try, t, var, t),
            st.builds(c.Seq, t, t),
            st.builds(c.If, t, t, t),
            st.builds(c.BinOp, st.sampled_from(sorted(c.BINOPS)), t, t),
        )

    return st.recursive(leaves, extend, max_leaves=10)


@settings(max_examples=400, deadline=None)
@given(_terms())
def test_term_round_trip(term):
    assert parse_term(show_term(term), ARITIES) == term
