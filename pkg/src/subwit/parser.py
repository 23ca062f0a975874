"""Reader for `.swl` source: kinds, types, terms and programs.

Named type constructors are resolved against a table of declared arities so
that both `'a list` (postfix) and `sub 'a 'b` (prefix) parse.  The table
grows as `type` declarations are read, and callers may seed it with the
arities of an already loaded prelude.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import core as c
from .errors import ParseError, Span

KEYWORDS = {
    "fun", "Fun", "let", "rec", "in", "match", "with", "pack", "as", "unpack",
    "ref", "raise", "try", "if", "then", "else", "true", "false", "type", "of",
    "all", "exists", "main",
}

SYMBOLS = [
    "::", ":>", ":=", "->", "==", "<=",
    "(", ")", "{", "}", "[", "]", ",", ";", ":", ".", "|", "=",
    "+", "-", "*", "!", "\\", "<", "^",
]

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\(\*)
  | (?P<tyvar>'[a-z_][A-Za-z0-9_]*)
  | (?P<int>[0-9]+)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<ident>[a-z_][A-Za-z0-9_]*)
  | (?P<cident>[A-Z][A-Za-z0-9_]*)
  | (?P<sym>"""
    + "|".join(re.escape(s) for s in SYMBOLS)
    + r""")
    """,
    re.VERBOSE,
)

_ESCAPES = {"n": "\n", "t": "\t", "\\": "\\", '"': '"'}


@dataclass(frozen=True)
class Token:
    kind: str  # tyvar int string ident cident sym kw eof
    text: str
    span: Span


def tokenize(source: str, file: str = "<input>") -> list[Token]:
    tokens = []
    pos, line, col = 0, 1, 1

    def advance(text):
        nonlocal line, col
        for ch in text:
            if ch == "\n":
                line, col = line + 1, 1
            else:
                col += 1

    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        start = (line, col)
        if m is None:
            raise ParseError(
                f"Unexpected character {source[pos]!r}", Span(file, start, (line, col + 1))
            )
        kind = m.lastgroup
        text = m.group()
        if kind == "comment":
            depth, i = 1, pos + 2
            while depth:
                if i >= len(source):
                    raise ParseError("Unterminated comment", Span(file, start, start))
                if source.startswith("(*", i):
                    depth, i = depth + 1, i + 2
                elif source.startswith("*)", i):
                    depth, i = depth - 1, i + 2
                else:
                    i += 1
            advance(source[pos:i])
            pos = i
            continue
        advance(text)
        pos = m.end()
        if kind == "ws":
            continue
        if kind in ("ident", "cident") and text in KEYWORDS:
            kind = "kw"
        tokens.append(Token(kind, text, Span(file, start, (line, col))))
    tokens.append(Token("eof", "", Span(file, (line, col), (line, col))))
    return tokens


def _unescape(text: str) -> str:
    return re.sub(r"\\(.)", lambda m: _ESCAPES.get(m.group(1), m.group(1)), text[1:-1])


class Parser:
    def __init__(self, source: str, file: str = "<input>", arities: dict | None = None):
        self.tokens = tokenize(source, file)
        self.pos = 0
        self.file = file
        self.arities = dict(arities or {})

    # -- token helpers ------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset=1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def at(self, *texts) -> bool:
        t = self.tok
        return t.kind in ("sym", "kw") and t.text in texts

    def next(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.pos += 1
        return t

    def error(self, expected) -> ParseError:
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        exp = sorted(expected)
        return ParseError(f"Syntax error: expected {' or '.join(exp)} but found {found}", t.span, exp)

    def expect(self, text) -> Token:
        if not self.at(text):
            raise self.error([repr(text)])
        return self.next()

    def expect_kind(self, kind, what) -> Token:
        if self.tok.kind != kind:
            raise self.error([what])
        return self.next()

    def span_from(self, start: Span) -> Span:
        prev = self.tokens[self.pos - 1] if self.pos else self.tok
        return start.to(prev.span)

    # -- kinds --------------------------------------------------------------

    def variance_marker(self, required=True):
        if self.at("+", "-", "!"):
            return c.MARKERS[self.next().text]
        if required:
            raise self.error(["'+'", "'-'", "'!'"])
        return None

    def kind(self) -> c.Kind:
        if self.at("*"):
            self.next()
            return c.STAR
        if self.at("("):
            self.next()
            v = self.variance_marker()
            param = self.kind()
            self.expect("->")
            result = self.kind()
            self.expect(")")
            return c.KArrow(v, param, result)
        raise self.error(["'*'", "'('"])

    # -- types --------------------------------------------------------------

    def type(self) -> c.Type:
        start = self.tok.span
        if self.at("all", "exists"):
            kw = self.next().text
            name = self.expect_kind("tyvar", "type variable").text[1:]
            self.expect("::")
            kind = self.kind()
            self.expect(".")
            body = self.type()
            cls = c.Forall if kw == "all" else c.Exists
            return cls(name, kind, body, self.span_from(start))
        if self.at("\\"):
            self.next()
            name = self.expect_kind("tyvar", "type variable").text[1:]
            variance = self.variance_marker(required=False) or c.Variance.INV
            self.expect("::")
            kind = self.kind()
            self.expect(".")
            body = self.type()
            return c.TyLam(name, variance, kind, body, self.span_from(start))
        dom = self.app_type()
        if self.at("->"):
            self.next()
            cod = self.type()
            return c.Arrow(dom, cod, self.span_from(start))
        return dom

    def _type_atom_start(self) -> bool:
        t = self.tok
        return t.kind in ("tyvar", "ident", "cident") or (t.kind == "sym" and t.text in ("(", "{")) or (
            t.kind == "kw" and t.text == "ref"
        )

    def app_type(self) -> c.Type:
        start = self.tok.span
        items: list = []  # Type, or ("tuple", [...], span)
        head = None  # (name, span) when the sequence starts with a bare name
        if not self._type_atom_start():
            raise self.error(["type"])
        while self._type_atom_start():
            t = self.tok
            if t.kind == "kw":  # ref
                self.next()
                if len(items) < (2 if head else 1) or isinstance(items[-1], tuple):
                    raise ParseError("'ref' must follow its argument type", t.span)
                arg = items.pop()
                items.append(c.Ref(arg, arg.span.to(t.span) if arg.span else t.span))
                continue
            if t.kind in ("ident", "cident") and t.text not in c.BASE_TYPES:
                self.next()
                arity = self.arities.get(t.text, 0)
                if arity >= 1 and len(items) >= (2 if head else 1):
                    arg = items.pop()
                    args = arg[1] if isinstance(arg, tuple) else [arg]
                    first = arg[2] if isinstance(arg, tuple) else arg.span
                    items.append(c.Alias(t.text, tuple(args), (first or t.span).to(t.span)))
                elif not items:
                    head = (t.text, t.span)
                    items.append(None)
                else:
                    items.append(c.Alias(t.text, (), t.span))
                continue
            if items and isinstance(items[-1], tuple):
                raise ParseError("A parenthesized type list must be followed by a type constructor", t.span)
            items.append(self.type_atom())
        if items and isinstance(items[-1], tuple):
            raise ParseError("A parenthesized type list must be followed by a type constructor", items[-1][2])
        span = self.span_from(start)
        if head is not None:
            name, hspan = head
            args = items[1:]
            if any(isinstance(a, tuple) for a in args):
                raise ParseError("Misplaced parenthesized type list", span)
            k = self.arities.get(name, len(args))
            ty = c.Alias(name, tuple(args[:k]), hspan.to(span) if args[:k] else hspan)
            for extra in args[k:]:
                ty = c.TyApp(ty, extra, span)
            return ty
        ty = items[0]
        for arg in items[1:]:
            ty = c.TyApp(ty, arg, span)
        return ty

    def type_atom(self):
        t = self.tok
        if t.kind == "tyvar":
            self.next()
            return c.TyVar(t.text[1:], t.span)
        if t.kind == "ident" and t.text in c.BASE_TYPES:
            self.next()
            return c.Base(t.text, t.span)
        if self.at("{"):
            self.next()
            fields = []
            while not self.at("}"):
                label = self.expect_kind("ident", "field label")
                self.expect(":")
                fields.append((label.text, self.type()))
                if not self.at("}"):
                    self.expect(";")
            self.expect("}")
            labels = [l for l, _ in fields]
            if len(set(labels)) != len(labels):
                raise ParseError("Duplicate field label in record type", self.span_from(t.span))
            return c.Record(tuple(fields), self.span_from(t.span))
        if self.at("("):
            self.next()
            first = self.type()
            if self.at(","):
                elems = [first]
                while self.at(","):
                    self.next()
                    elems.append(self.type())
                self.expect(")")
                return ("tuple", elems, self.span_from(t.span))
            self.expect(")")
            return first
        raise self.error(["type"])

    # -- terms --------------------------------------------------------------

    def term(self, seq_ok=True) -> c.Term:
        start = self.tok.span
        first = self.term_noseq(seq_ok)
        if seq_ok and self.at(";"):
            self.next()
            second = self.term(seq_ok)
            return c.Seq(first, second, self.span_from(start))
        return first

    def term_noseq(self, seq_ok) -> c.Term:
        start = self.tok.span
        if self.at("fun"):
            self.next()
            params = []
            while self.at("("):
                self.next()
                name = self.expect_kind("ident", "parameter name").text
                self.expect(":")
                params.append((name, self.type()))
                self.expect(")")
            if not params:
                raise self.error(["'('"])
            self.expect("->")
            body = self.term(seq_ok)
            for name, ann in reversed(params):
                body = c.Lam(name, ann, body, self.span_from(start))
            return body
        if self.at("Fun"):
            self.next()
            binders = []
            while self.tok.kind == "tyvar":
                name = self.next().text[1:]
                self.expect("::")
                binders.append((name, self.kind()))
            if not binders:
                raise self.error(["type variable"])
            self.expect("->")
            body = self.term(seq_ok)
            for name, kind in reversed(binders):
                body = c.TyAbs(name, kind, body, self.span_from(start))
            return body
        if self.at("let"):
            self.next()
            rec = False
            if self.at("rec"):
                self.next()
                rec = True
            name = self.expect_kind("ident", "identifier").text
            ann = None
            if self.at(":"):
                self.next()
                ann = self.type()
            self.expect("=")
            bound = self.term(True)
            self.expect("in")
            body = self.term(seq_ok)
            return c.Let(name, ann, bound, body, rec, self.span_from(start))
        if self.at("match"):
            self.next()
            scrut = self.term(True)
            self.expect("with")
            if self.at("|"):
                self.next()
            arms = [self.arm(seq_ok)]
            while self.at("|"):
                self.next()
                arms.append(self.arm(seq_ok))
            return c.Match(scrut, tuple(arms), self.span_from(start))
        if self.at("try"):
            self.next()
            body = self.term(True)
            self.expect("with")
            name = self.expect_kind("ident", "identifier").text
            self.expect("->")
            handler = self.term(seq_ok)
            return c.Try(body, name, handler, self.span_from(start))
        if self.at("if"):
            self.next()
            cond = self.term(True)
            self.expect("then")
            then = self.term_noseq(False)
            self.expect("else")
            else_ = self.term_noseq(False)
            return c.If(cond, then, else_, self.span_from(start))
        if self.at("pack"):
            self.next()
            self.expect("[")
            witness = self.type()
            self.expect(",")
            payload = self.term(True)
            self.expect("]")
            self.expect("as")
            as_type = self.type()
            return c.Pack(witness, payload, as_type, self.span_from(start))
        if self.at("unpack"):
            self.next()
            packed = self.term(True)
            self.expect("as")
            self.expect("(")
            tyname = self.expect_kind("tyvar", "type variable").text[1:]
            self.expect(",")
            valname = self.expect_kind("ident", "identifier").text
            self.expect(")")
            self.expect("in")
            body = self.term(seq_ok)
            return c.Unpack(tyname, valname, packed, body, self.span_from(start))
        return self.assign_term()

    def arm(self, seq_ok) -> c.Arm:
        start = self.tok.span
        ctor = self.expect_kind("cident", "constructor").text
        binder = None
        if self.tok.kind == "ident":
            binder = self.next().text
        self.expect("->")
        body = self.term(seq_ok)
        return c.Arm(ctor, binder, body, self.span_from(start))

    def assign_term(self):
        start = self.tok.span
        left = self.cmp_term()
        if self.at(":="):
            self.next()
            right = self.cmp_term()
            return c.Assign(left, right, self.span_from(start))
        return left

    def cmp_term(self):
        start = self.tok.span
        left = self.add_term()
        if self.at("==", "<", "<="):
            op = self.next().text
            right = self.add_term()
            return c.BinOp(op, left, right, self.span_from(start))
        return left

    def add_term(self):
        start = self.tok.span
        left = self.mul_term()
        while self.at("+", "-", "^"):
            op = self.next().text
            right = self.mul_term()
            left = c.BinOp(op, left, right, self.span_from(start))
        return left

    def mul_term(self):
        start = self.tok.span
        left = self.app_term()
        while self.at("*"):
            self.next()
            right = self.app_term()
            left = c.BinOp("*", left, right, self.span_from(start))
        return left

    def _arg_start(self) -> bool:
        t = self.tok
        if t.kind in ("ident", "cident", "int", "string"):
            return True
        if t.kind == "kw" and t.text in ("true", "false"):
            return True
        return t.kind == "sym" and t.text in ("(", "{", "!")

    def app_term(self):
        start = self.tok.span
        if self.at("ref"):
            self.next()
            return c.RefNew(self.prefix_arg(), self.span_from(start))
        if self.at("raise"):
            self.next()
            targ = None
            if self.at("["):
                self.next()
                targ = self.type()
                self.expect("]")
            return c.Raise(self.prefix_arg(), targ, self.span_from(start))
        if self.tok.kind == "cident":
            ctor = self.next().text
            targs = []
            while self.at("["):
                self.next()
                targs.append(self.type())
                self.expect("]")
            arg = self.prefix_arg() if self._arg_start() else None
            return c.Construct(ctor, tuple(targs), arg, self.span_from(start))
        fn = self.prefix_arg()
        while self._arg_start():
            arg = self.prefix_arg()
            fn = c.App(fn, arg, self.span_from(start))
        return fn

    def prefix_arg(self):
        start = self.tok.span
        if self.at("!"):
            self.next()
            return c.Deref(self.prefix_arg(), self.span_from(start))
        return self.postfix_term()

    def postfix_term(self):
        start = self.tok.span
        term = self.atom_term()
        while True:
            if self.at("."):
                self.next()
                label = self.expect_kind("ident", "field label").text
                term = c.Proj(term, label, self.span_from(start))
            elif self.at("["):
                self.next()
                ty = self.type()
                self.expect("]")
                term = c.TyAppT(term, ty, self.span_from(start))
            else:
                return term

    def atom_term(self):
        t = self.tok
        if t.kind == "cident":
            # a constructor in argument position takes no payload
            self.next()
            return c.Construct(t.text, (), None, t.span)
        if t.kind == "ident":
            self.next()
            return c.Var(t.text, t.span)
        if t.kind == "int":
            self.next()
            return c.IntLit(int(t.text), t.span)
        if t.kind == "string":
            self.next()
            return c.StringLit(_unescape(t.text), t.span)
        if self.at("true", "false"):
            self.next()
            return c.BoolLit(t.text == "true", t.span)
        if self.at("{"):
            self.next()
            fields = []
            while not self.at("}"):
                label = self.expect_kind("ident", "field label").text
                self.expect("=")
                fields.append((label, self.term(False)))
                if not self.at("}"):
                    self.expect(";")
            self.expect("}")
            labels = [l for l, _ in fields]
            if len(set(labels)) != len(labels):
                raise ParseError("Duplicate field label in record", self.span_from(t.span))
            return c.RecordLit(tuple(fields), self.span_from(t.span))
        if self.at("("):
            self.next()
            if self.at(")"):
                self.next()
                return c.UnitLit(self.span_from(t.span))
            inner = self.term(True)
            if self.at(":>"):
                self.next()
                target = self.type()
                self.expect(")")
                return c.Coerce(inner, target, self.span_from(t.span))
            self.expect(")")
            return inner
        raise self.error(["term"])

    # -- declarations -------------------------------------------------------

    def params(self):
        def param():
            t = self.expect_kind("tyvar", "type parameter")
            v = self.variance_marker()
            kind = c.STAR
            if self.at("::"):
                self.next()
                kind = self.kind()
            return c.Param(t.text[1:], v, kind, self.span_from(t.span))

        if self.tok.kind == "tyvar":
            return (param(),)
        if self.at("("):
            self.next()
            ps = [param()]
            while self.at(","):
                self.next()
                ps.append(param())
            self.expect(")")
            return tuple(ps)
        return ()

    def _adt_body_start(self) -> bool:
        if self.at("|"):
            return True
        return self.tok.kind == "cident" and (
            self.peek().kind == "kw" and self.peek().text == "of"
            or self.peek().kind == "sym" and self.peek().text in ("|", ";")
        )

    def decl(self):
        start = self.tok.span
        if self.at("type"):
            self.next()
            params = self.params()
            name_tok = self.tok
            if name_tok.kind not in ("ident", "cident") or name_tok.text in c.BASE_TYPES:
                raise self.error(["type name"])
            self.next()
            names = [p.name for p in params]
            if len(set(names)) != len(names):
                raise ParseError("Duplicate type parameter", name_tok.span)
            self.arities[name_tok.text] = len(params)
            self.expect("=")
            if self._adt_body_start():
                if self.at("|"):
                    self.next()
                ctors = [self.ctor_decl()]
                while self.at("|"):
                    self.next()
                    ctors.append(self.ctor_decl())
                self.expect(";")
                return c.AdtDecl(name_tok.text, params, tuple(ctors), self.span_from(start))
            body = self.type()
            self.expect(";")
            return c.AliasDecl(name_tok.text, params, body, self.span_from(start))
        if self.at("let"):
            self.next()
            rec = False
            if self.at("rec"):
                self.next()
                rec = True
            name = self.expect_kind("ident", "identifier").text
            ann = None
            if self.at(":"):
                self.next()
                ann = self.type()
            self.expect("=")
            body = self.term(False)
            self.expect(";")
            return c.TermDecl(name, ann, body, rec, self.span_from(start))
        raise self.error(["'type'", "'let'", "'main'"])

    def ctor_decl(self):
        name = self.expect_kind("cident", "constructor").text
        payload = None
        if self.at("of"):
            self.next()
            payload = self.type()
        return (name, payload)

    def program(self) -> c.Prog:
        decls = []
        main = None
        while self.tok.kind != "eof":
            if self.at("main"):
                tok = self.next()
                if main is not None:
                    raise ParseError("Duplicate main term", tok.span)
                main = self.term(False)
                self.expect(";")
            else:
                decls.append(self.decl())
        return c.Prog(tuple(decls), main)

    def finish(self, value):
        if self.tok.kind != "eof":
            raise self.error(["end of input"])
        return value


def parse_program(source: str, file: str = "<input>", arities: dict | None = None) -> c.Prog:
    return Parser(source, file, arities).program()


def parse_program_with_arities(source, file="<input>", arities=None):
    """Like parse_program, also returning the arity table after the file."""
    p = Parser(source, file, arities)
    prog = p.program()
    return prog, p.arities


def parse_type(source: str, arities: dict | None = None, file: str = "<input>") -> c.Type:
    p = Parser(source, file, arities)
    return p.finish(p.type())


def parse_term(source: str, arities: dict | None = None, file: str = "<input>") -> c.Term:
    p = Parser(source, file, arities)
    return p.finish(p.term(True))


def parse_kind(source: str) -> c.Kind:
    p = Parser(source)
    return p.finish(p.kind())


def program_arities(prog: c.Prog) -> dict:
    return {d.name: len(d.params) for d in prog.decls if isinstance(d, (c.AdtDecl, c.AliasDecl))}
