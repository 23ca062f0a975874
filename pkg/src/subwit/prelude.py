"""The shipped corpus: prelude loading, manifest parsing and verification."""

from __future__ import annotations

import sys
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from . import core as c
from .errors import Diagnostic, ParseError, VarianceError
from .evaluator import Raised, eval_program
from .parser import parse_program_with_arities, program_arities
from .typecheck import TypingContext, check_program

CORPUS_DIR = Path(__file__).parent / "corpus"
MANIFEST = CORPUS_DIR / "manifest.toml"

PRELUDE_FILES = (
    "contexts.swl",
    "sub_neg.swl",
    "sub_pos.swl",
    "sub_church.swl",
    "sub_ops.swl",
    "list.swl",
    "church_nat.swl",
    "eq_leibniz.swl",
    "lzy.swl",
    "covlzy.swl",
    "lzy_hof.swl",
    "arr.swl",
    "abstract_demo.swl",
    "bounded.swl",
    "variance_proof.swl",
)

EXPECTS = ("checks", "variance-error", "type-error")

# Every topic must be tagged by at least one manifest entry.
TOPICS = (
    "polarized-contexts",
    "minimal-interface",
    "negative-encoding",
    "positive-encoding",
    "initial-algebra-encoding",
    "lazy-covariance",
    "record-widening",
    "substitutability",
    "context-variance",
    "witness-operations",
    "context-encodings",
    "church-encodings",
    "conversion",
    "arrays-and-rows",
    "selective-abstraction",
    "bounded-quantification",
    "variance-proofs",
)


def _parse_files(paths, arities=None):
    prog = c.Prog()
    arities = dict(arities or {})
    for path in paths:
        source = Path(path).read_text(encoding="utf-8")
        part, arities = parse_program_with_arities(source, str(path), arities)
        prog = prog + part
    return prog, arities


def load_prelude(upto: str | None = None) -> c.Prog:
    """Concatenate the prelude files (through `upto` when given)."""
    names = PRELUDE_FILES
    if upto is not None:
        names = names[: names.index(upto) + 1]
    prog, _ = _parse_files(CORPUS_DIR / "prelude" / n for n in names)
    return prog


@lru_cache(maxsize=1)
def prelude() -> tuple:
    """(Prog, arity table, TypingContext) for the full prelude, cached."""
    prog, arities = _parse_files(CORPUS_DIR / "prelude" / n for n in PRELUDE_FILES)
    return prog, arities, check_program(prog)


@dataclass(frozen=True)
class Loaded:
    """A user program together with the context it is checked in."""

    program: c.Prog  # user declarations only
    full: c.Prog  # prelude + user program, for evaluation
    base: TypingContext | None


def parse_user(source: str, file: str, with_prelude: bool = True) -> Loaded:
    if with_prelude:
        pprog, arities, ctx = prelude()
        prog, _ = parse_program_with_arities(source, file, arities)
        return Loaded(prog, pprog + prog, ctx)
    prog, _ = parse_program_with_arities(source, file)
    return Loaded(prog, prog, None)


def verdict_of(err: Exception | None) -> str:
    if err is None:
        return "checks"
    if isinstance(err, VarianceError):
        return "variance-error"
    if isinstance(err, ParseError):
        return "parse-error"
    return "type-error"


def check_source(source: str, file: str, with_prelude: bool = True, trace=None):
    """Parse and check; returns (Loaded, diagnostic or None).  Parse errors propagate."""
    loaded = parse_user(source, file, with_prelude)
    try:
        check_program(loaded.program, loaded.base, trace)
    except Diagnostic as err:
        return loaded, err
    return loaded, None


def render_run(result) -> str:
    """Transcript plus the uncaught-exception line, as compared to goldens."""
    text = result.transcript
    if isinstance(result.outcome, Raised):
        text += f"Uncaught exception: {result.outcome.exn.payload}\n"
    return text


# ---------------------------------------------------------------------------
# Manifest


@dataclass(frozen=True)
class Entry:
    path: str
    expects: str
    anchor: str


@dataclass(frozen=True)
class EntryResult:
    entry: Entry
    actual: str
    ok: bool
    detail: str = ""


def read_manifest(path=MANIFEST) -> list[Entry]:
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    entries = []
    for raw in data.get("entry", []):
        expects = raw["expects"]
        if expects not in EXPECTS:
            raise ValueError(f"unknown expectation {expects!r} for {raw['path']}")
        entries.append(Entry(raw["path"], expects, raw.get("anchor", "")))
    return entries


def uncovered_topics(entries) -> list[str]:
    tagged = {tag.strip() for e in entries for tag in e.anchor.split(",")}
    return [t for t in TOPICS if t not in tagged]


def verify_entry(entry: Entry, root: Path) -> EntryResult:
    path = root / entry.path
    parts = Path(entry.path).parts
    try:
        if parts[0] == "prelude":
            upto = parts[-1]
            names = PRELUDE_FILES[: PRELUDE_FILES.index(upto) + 1]
            prog, _ = _parse_files(root / "prelude" / n for n in names)
            err = None
            try:
                check_program(prog)
            except Diagnostic as e:
                err = e
            actual = verdict_of(err)
            detail = err.render() if err else ""
            return EntryResult(entry, actual, actual == entry.expects, detail)
        source = path.read_text(encoding="utf-8")
        loaded, err = check_source(source, str(path))
    except ParseError as e:
        return EntryResult(entry, "parse-error", False, e.render())
    except (OSError, ValueError) as e:
        return EntryResult(entry, "missing", False, str(e))
    actual = verdict_of(err)
    if actual != entry.expects:
        return EntryResult(entry, actual, False, err.render() if err else "")
    golden = path.with_suffix(".expected")
    if err is None and golden.exists():
        got = render_run(eval_program(loaded.full))
        want = golden.read_text(encoding="utf-8")
        if got != want:
            return EntryResult(entry, actual, False, f"transcript differs:\n--- expected\n{want}--- got\n{got}")
    return EntryResult(entry, actual, True, err.render() if err else "")


def verify_corpus(manifest=MANIFEST) -> list[EntryResult]:
    manifest = Path(manifest)
    return [verify_entry(e, manifest.parent) for e in read_manifest(manifest)]
