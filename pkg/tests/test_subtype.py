import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from subwit import core as c
from subwit.parser import parse_type
from subwit.subtype import SubtypeFailure, equiv, explain, is_subtype, subtype
from strategies import chains, extended_context, kctx, oracle_sub, subtype_of, supertype_of, types


def _norm(src, tyvars=None):
    ctx = extended_context().kinds
    for name, kind in (tyvars or {}).items():
        ctx = ctx.with_tyvar(name, kind)
    return ctx, c.normalize_type(ctx, parse_type(src, _arities()))


def _arities():
    from subwit.prelude import prelude

    return {**prelude()[1], "opt": 1, "cell": 1, "sink": 1}


def _failure(s_src, t_src, tyvars=None):
    ctx, s = _norm(s_src, tyvars)
    _, t = _norm(t_src, tyvars)
    with pytest.raises(SubtypeFailure) as info:
        subtype(ctx, s, t)
    return info.value


def _holds(s_src, t_src, tyvars=None):
    ctx, s = _norm(s_src, tyvars)
    _, t = _norm(t_src, tyvars)
    return subtype(ctx, s, t)


def test_width_subtyping():
    d = _holds("{m : int; name : string}", "{name : string}")
    assert d.rule == "record-width" and d.conclusion[1] == c.Record((("name", c.STRING),))


def test_missing_field_golden():
    f = _failure("{}", "{m : int}")
    assert f.reason == "missing-field"
    assert explain(f) == "Type {} is not a subtype of {m : int}\nThe first record type has no field m"


def test_variable_headed_contravariant_argument():
    n = c.KArrow(c.Variance.CONTRA, c.STAR, c.STAR)
    d = _holds("'n {}", "'n {m : int}", {"n": n})
    assert d.rule == "var-app"


def test_ref_is_invariant():
    f = _failure("{m : int} ref", "{} ref")
    assert f.reason == "invariant-mismatch"
    assert explain(f) == (
        "Type {m : int} ref is not a subtype of {} ref\n"
        "The ref type is invariant, and the second record type has no field m"
    )


def test_head_mismatch_names_both_heads():
    f = _failure("int list", "int opt")
    assert f.reason == "head-mismatch"
    assert explain(f).splitlines()[1] == "The type constructors list and opt differ"


def test_arrow_domain_failure_is_reported_on_the_argument():
    f = _failure("{m : int} -> int", "{} -> int")
    assert f.reason == "arrow-domain"
    assert f.explanation == "In the function argument, the second record type has no field m"


def test_quantifier_kind_mismatch():
    f = _failure("all 'a::*. int", "all 'a::(+ * -> *). int")
    assert f.reason == "kind-mismatch"


def test_equiv_examples():
    ctx, t = _norm("{a : int; b : bool}")
    _, u = _norm("{b : bool; a : int}")
    _, e = _norm("{}")
    _, m = _norm("{m : int}")
    assert equiv(ctx, t, t) and equiv(ctx, t, u)
    assert not equiv(ctx, m, e)


def test_derivation_conclusion_is_query_and_renders():
    ctx, s = _norm("{m : int; n : {p : bool}} -> int")
    _, t = _norm("{m : int; n : {p : bool; q : int}} -> int")
    d = subtype(ctx, s, t)
    assert d.conclusion == (s, t)
    assert d.render().splitlines()[0].startswith("[arrow]")
    assert d.size() > 3


def test_sub_encodings_follow_their_parameters():
    assert _holds("sub {m : int} {m : int}", "sub {m : int; n : int} {}")
    f = _failure("sub {} {}", "sub {m : int} {m : int}")
    assert f.explanation.endswith("the first record type has no field m")


# ---------------------------------------------------------------------------
# properties on >= 1000 generated types of depth <= 5


@settings(max_examples=1000, deadline=None)
@given(types(5))
def test_reflexivity(t):
    assert is_subtype(kctx(), t, t)


@settings(max_examples=1000, deadline=None)
@given(chains())
def test_transitivity(chain):
    s, u, t = chain
    k = kctx()
    assert is_subtype(k, s, u) and is_subtype(k, u, t)
    assert is_subtype(k, s, t)


@st.composite
def related_pairs(draw):
    t = draw(types(4))
    pick = draw(st.integers(0, 2))
    if pick == 0:
        return draw(subtype_of(t)), t
    if pick == 1:
        return draw(supertype_of(t)), t
    return draw(types(4)), t


@settings(max_examples=1000, deadline=None)
@given(related_pairs())
def test_antisymmetry_up_to_equiv(pair):
    s, t = pair
    k = kctx()
    if is_subtype(k, s, t) and is_subtype(k, t, s):
        assert equiv(k, s, t)
        assert c.alpha_equal(s, t)  # no unused parameters here, so equiv means equal


@settings(max_examples=1000, deadline=None)
@given(related_pairs())
def test_engine_agrees_with_declarative_oracle(pair):
    s, t = pair
    assert is_subtype(kctx(), s, t) == oracle_sub(s, t)


@st.composite
def strict_pairs(draw):
    """S strictly below T: a subtype of {orig : t} with one more field."""
    t = c.Record((("orig", draw(types(4))),))
    s = draw(subtype_of(t))
    s = c.Record(tuple(f for f in s.fields if f[0] != "z") + (("z", draw(types(3))),))
    return s, t


@settings(max_examples=300, deadline=None)
@given(st.one_of(strict_pairs(), related_pairs()))
def test_ref_invariance_rejects_both_directions(pair):
    s, t = pair
    assume(not c.alpha_equal(s, t))
    k = kctx()
    assert not is_subtype(k, c.Ref(s), c.Ref(t))
    assert not is_subtype(k, c.Ref(t), c.Ref(s))


@settings(max_examples=300, deadline=None)
@given(related_pairs())
def test_failures_explain_themselves(pair):
    s, t = pair
    try:
        subtype(kctx(), s, t)
    except SubtypeFailure as f:
        text = explain(f)
        assert text.startswith("Type ") and " is not a subtype of " in text
        assert len(text.splitlines()) >= 2
