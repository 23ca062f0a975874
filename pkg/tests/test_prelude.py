import itertools
import shutil

import pytest

from subwit.prelude import (
    CORPUS_DIR,
    MANIFEST,
    PRELUDE_FILES,
    TOPICS,
    load_prelude,
    read_manifest,
    uncovered_topics,
    verify_corpus,
)
from subwit.typecheck import check_program
from helpers import (
    CHAINS,
    ENCODINGS,
    PAYLOADS,
    conv_source,
    direct_source,
    lift_neg_source,
    refl_idiom_source,
    round_trip_source,
    run,
    trans_source,
)


def test_full_prelude_checks():
    ctx = check_program(load_prelude())
    for name in ("refl", "lift", "coerce", "trans", "lift_neg", "conv", "force", "cforce", "aiter"):
        assert name in ctx.terms


def test_prelude_order_is_loadable_prefixwise():
    for name in PRELUDE_FILES:
        check_program(load_prelude(name))


def test_manifest_covers_every_topic():
    entries = read_manifest()
    assert uncovered_topics(entries) == []
    assert len(TOPICS) == len(set(TOPICS))


def test_bad_ref_is_a_variance_error():
    (entry,) = [e for e in read_manifest() if e.path == "neg_tests/bad_ref.swl"]
    assert entry.expects == "variance-error"


def test_shipped_manifest_all_pass():
    results = verify_corpus()
    failures = [(r.entry.path, r.actual, r.detail) for r in results if not r.ok]
    assert failures == []
    assert len(results) == len(read_manifest())


def _copy_corpus(tmp_path):
    root = tmp_path / "corpus"
    shutil.copytree(CORPUS_DIR, root)
    return root


def test_flipped_expectation_gives_exactly_one_failure(tmp_path):
    root = _copy_corpus(tmp_path)
    text = (root / "manifest.toml").read_text()
    target = 'path = "neg_tests/bad_ref.swl"\nexpects = "variance-error"'
    assert target in text
    (root / "manifest.toml").write_text(text.replace(target, target.replace("variance-error", "checks")))
    results = verify_corpus(root / "manifest.toml")
    failed = [r for r in results if not r.ok]
    assert [r.entry.path for r in failed] == ["neg_tests/bad_ref.swl"]
    assert failed[0].actual == "variance-error"


def test_golden_mismatch_is_reported(tmp_path):
    root = _copy_corpus(tmp_path)
    (root / "examples" / "lazy_once.expected").write_text("forced\n1\n2\n")
    failed = [r for r in verify_corpus(root / "manifest.toml") if not r.ok]
    assert [r.entry.path for r in failed] == ["examples/lazy_once.swl"]
    assert "transcript differs" in failed[0].detail


def test_empty_manifest(tmp_path):
    path = tmp_path / "manifest.toml"
    path.write_text("")
    assert verify_corpus(path) == []


def test_unknown_expectation_rejected(tmp_path):
    path = tmp_path / "manifest.toml"
    path.write_text('[[entry]]\npath = "x.swl"\nexpects = "maybe"\n')
    with pytest.raises(ValueError):
        read_manifest(path)


def test_manifest_default_location():
    assert MANIFEST.exists() and MANIFEST.parent == CORPUS_DIR


# ---------------------------------------------------------------------------
# witness behaviour on the payload suite


@pytest.mark.parametrize("enc", ENCODINGS)
@pytest.mark.parametrize("payload", sorted(PAYLOADS))
def test_witnesses_act_as_identity(enc, payload):
    want = run(direct_source(payload))
    assert run(conv_source(enc, enc, payload, convert=False)) == want


@pytest.mark.parametrize("a,b", list(itertools.product(ENCODINGS, repeat=2)))
@pytest.mark.parametrize("payload", sorted(PAYLOADS))
def test_conv_is_natural(a, b, payload):
    assert run(conv_source(a, b, payload, convert=True)) == run(conv_source(a, b, payload, convert=False))


@pytest.mark.parametrize("a,b", list(itertools.product(ENCODINGS, repeat=2)))
def test_conv_round_trip_keeps_five(a, b):
    assert run(round_trip_source(a, b)) == "5\n"


@pytest.mark.parametrize("chain", sorted(CHAINS))
def test_trans_agrees_with_composition(chain):
    assert run(trans_source(chain, composed=True)) == run(trans_source(chain, composed=False))


def test_lift_neg_flips_direction():
    out = run(lift_neg_source(through_witness=True))
    assert out == run(lift_neg_source(through_witness=False))
    assert out.splitlines()[:2] == ["in1", "11"]


@pytest.mark.parametrize("enc", ENCODINGS)
@pytest.mark.parametrize("mode", ["lower", "raise"])
@pytest.mark.parametrize("payload", sorted(PAYLOADS))
def test_refl_lowering_and_raising(enc, mode, payload):
    assert run(refl_idiom_source(enc, mode, payload)) == run(direct_source(payload))


def test_covlzy_orderings_agree():
    ex = CORPUS_DIR / "examples"
    first = run((ex / "covlzy_coerce_first.swl").read_text())
    second = run((ex / "covlzy_force_first.swl").read_text())
    assert first == second
