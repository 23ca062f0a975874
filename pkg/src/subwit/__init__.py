"""First-class subtype witnesses in a small polarized System F-omega.

The package provides a parser, kind and variance checker, algorithmic
subtyping, a bidirectional type checker, an interpreter and a corpus of
object-language programs encoding subtype witnesses.
"""

from .core import Variance
from .errors import Diagnostic, KindError, ParseError, TypeCheckError, VarianceError
from .evaluator import eval_program, eval_term, strip_coercions
from .kinds import KindingContext, compose, kind_of, variance_of
from .parser import parse_program, parse_term, parse_type
from .prelude import load_prelude, verify_corpus
from .printer import show
from .subtype import SubtypeFailure, equiv, explain, is_subtype, subtype
from .typecheck import TypingContext, check, check_program, infer

__all__ = [
    "Variance",
    "Diagnostic",
    "KindError",
    "ParseError",
    "TypeCheckError",
    "VarianceError",
    "eval_program",
    "eval_term",
    "strip_coercions",
    "KindingContext",
    "compose",
    "kind_of",
    "variance_of",
    "parse_program",
    "parse_term",
    "parse_type",
    "load_prelude",
    "verify_corpus",
    "show",
    "SubtypeFailure",
    "equiv",
    "explain",
    "is_subtype",
    "subtype",
    "TypingContext",
    "check",
    "check_program",
    "infer",
]
