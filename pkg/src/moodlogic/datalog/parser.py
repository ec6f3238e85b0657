"""Tokenizer and recursive-descent parser for the Datalog subset.

The grammar (informally):

    program  = { decl | input | output | rule | fact }
    decl     = ".decl" IDENT "(" IDENT ":" TYPE { "," IDENT ":" TYPE } ")"
    input    = ".input" IDENT
    output   = ".output" IDENT
    rule     = atom ":-" body "."
    fact     = atom "."                       // constant arguments only
    body     = conj { ";" conj }
    conj     = elem { "," elem }
    elem     = "!" atom | "(" body ")" | atom | term CMP term
    term     = additive over NUMBER FLOAT STRING IDENT "_" and "count :" atom

`//` comments run to end of line. The parser reports up to MAX_ERRORS
diagnostics, resynchronizing at the next clause terminator.
"""

from __future__ import annotations

from dataclasses import dataclass

from .lang import (
    ArithExpr,
    Atom,
    BodyElem,
    Constraint,
    CountAggregate,
    Declaration,
    Disjunction,
    FloatConst,
    Negated,
    NumberConst,
    ParseError,
    ParseFailed,
    Positive,
    Program,
    Rule,
    Span,
    SymbolConst,
    Term,
    Variable,
    WILDCARD,
    PARAM_TYPES,
)

MAX_ERRORS = 20

_PUNCT = {
    "(": "LPAREN",
    ")": "RPAREN",
    "{": "LBRACE",
    "}": "RBRACE",
    ",": "COMMA",
    ";": "SEMI",
    "+": "PLUS",
    "-": "MINUS",
    "*": "STAR",
    "/": "SLASH",
}

_CMP_TOKENS = {"EQ": "=", "NE": "!=", "LT": "<", "LE": "<=", "GT": ">", "GE": ">="}


@dataclass(frozen=True)
class Token:
    kind: str
    value: object
    line: int
    col: int


class _Tokenizer:
    def __init__(self, source: str):
        self.source = source
        self.pos = 0
        self.line = 1
        self.col = 1
        self.tokens: list[Token] = []
        self.errors: list[ParseError] = []

    def error(self, message: str, line: int | None = None, col: int | None = None) -> None:
        self.errors.append(ParseError(message, line or self.line, col or self.col))

    def _advance(self, n: int = 1) -> None:
        for _ in range(n):
            if self.pos < len(self.source) and self.source[self.pos] == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
            self.pos += 1

    def run(self) -> list[Token]:
        src = self.source
        while self.pos < len(src):
            ch = src[self.pos]
            if ch in " \t\r\n":
                self._advance()
                continue
            if ch == "/" and src.startswith("//", self.pos):
                while self.pos < len(src) and src[self.pos] != "\n":
                    self._advance()
                continue
            line, col = self.line, self.col
            if ch.isdigit():
                self._number(line, col)
                continue
            if ch.isalpha() or ch == "_":
                self._ident(line, col)
                continue
            if ch == '"':
                self._string(line, col)
                continue
            if ch == ":":
                if src.startswith(":-", self.pos):
                    self.tokens.append(Token("ARROW", ":-", line, col))
                    self._advance(2)
                else:
                    self.tokens.append(Token("COLON", ":", line, col))
                    self._advance()
                continue
            if ch == "!":
                if src.startswith("!=", self.pos):
                    self.tokens.append(Token("NE", "!=", line, col))
                    self._advance(2)
                else:
                    self.tokens.append(Token("BANG", "!", line, col))
                    self._advance()
                continue
            if ch == "<":
                if src.startswith("<=", self.pos):
                    self.tokens.append(Token("LE", "<=", line, col))
                    self._advance(2)
                else:
                    self.tokens.append(Token("LT", "<", line, col))
                    self._advance()
                continue
            if ch == ">":
                if src.startswith(">=", self.pos):
                    self.tokens.append(Token("GE", ">=", line, col))
                    self._advance(2)
                else:
                    self.tokens.append(Token("GT", ">", line, col))
                    self._advance()
                continue
            if ch == "=":
                self.tokens.append(Token("EQ", "=", line, col))
                self._advance()
                continue
            if ch == ".":
                self.tokens.append(Token("DOT", ".", line, col))
                self._advance()
                continue
            if ch in _PUNCT:
                self.tokens.append(Token(_PUNCT[ch], ch, line, col))
                self._advance()
                continue
            self.error(f"unexpected character {ch!r}")
            self._advance()
        return self.tokens

    def _number(self, line: int, col: int) -> None:
        src = self.source
        start = self.pos
        while self.pos < len(src) and src[self.pos].isdigit():
            self._advance()
        # A float needs a digit after the dot, otherwise the dot terminates a clause.
        if (
            self.pos + 1 < len(src)
            and src[self.pos] == "."
            and src[self.pos + 1].isdigit()
        ):
            self._advance()
            while self.pos < len(src) and src[self.pos].isdigit():
                self._advance()
            self.tokens.append(Token("FLOAT", float(src[start:self.pos]), line, col))
        else:
            self.tokens.append(Token("NUMBER", int(src[start:self.pos]), line, col))

    def _ident(self, line: int, col: int) -> None:
        src = self.source
        start = self.pos
        while self.pos < len(src) and (src[self.pos].isalnum() or src[self.pos] == "_"):
            self._advance()
        text = src[start:self.pos]
        if text == "_":
            self.tokens.append(Token("UNDERSCORE", "_", line, col))
        else:
            self.tokens.append(Token("IDENT", text, line, col))

    def _string(self, line: int, col: int) -> None:
        src = self.source
        self._advance()  # opening quote
        buf: list[str] = []
        while self.pos < len(src):
            ch = src[self.pos]
            if ch == "\n":
                break
            if ch == "\\" and self.pos + 1 < len(src) and src[self.pos + 1] in '"\\':
                buf.append(src[self.pos + 1])
                self._advance(2)
                continue
            if ch == '"':
                self._advance()
                self.tokens.append(Token("STRING", "".join(buf), line, col))
                return
            buf.append(ch)
            self._advance()
        self.error("unterminated string", line, col)


class _ParseAbort(Exception):
    """Internal signal: resynchronize at the next clause."""


class _Parser:
    def __init__(self, tokens: list[Token], errors: list[ParseError]):
        self.tokens = tokens
        self.idx = 0
        self.errors = errors
        self.program = Program()

    # -- token plumbing ---------------------------------------------------

    def peek(self, offset: int = 0) -> Token | None:
        i = self.idx + offset
        return self.tokens[i] if i < len(self.tokens) else None

    def next(self) -> Token | None:
        tok = self.peek()
        if tok is not None:
            self.idx += 1
        return tok

    def at(self, kind: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind == kind

    def expect(self, kind: str, what: str) -> Token:
        tok = self.peek()
        if tok is None:
            last = self.tokens[-1] if self.tokens else None
            self.error(f"expected {what}, found end of input",
                       last.line if last else 1, last.col if last else 1)
            raise _ParseAbort
        if tok.kind != kind:
            self.error(f"expected {what}, found {tok.value!r}", tok.line, tok.col)
            raise _ParseAbort
        self.idx += 1
        return tok

    def error(self, message: str, line: int, col: int) -> None:
        self.errors.append(ParseError(message, line, col))

    def _at_directive(self) -> bool:
        tok, nxt = self.peek(), self.peek(1)
        return (
            tok is not None
            and tok.kind == "DOT"
            and nxt is not None
            and nxt.kind == "IDENT"
            and nxt.line == tok.line
            and nxt.col == tok.col + 1
        )

    def _resync(self) -> None:
        """Skip to just past the next clause terminator (or next directive)."""
        while self.idx < len(self.tokens):
            if self._at_directive():
                return
            tok = self.tokens[self.idx]
            self.idx += 1
            if tok.kind == "DOT":
                return

    # -- clauses -----------------------------------------------------------

    def run(self) -> Program:
        while self.idx < len(self.tokens):
            if len(self.errors) >= MAX_ERRORS:
                break
            try:
                if self._at_directive():
                    self._directive()
                else:
                    self._clause()
            except _ParseAbort:
                self._resync()
        return self.program

    def _directive(self) -> None:
        dot = self.next()
        assert dot is not None
        name_tok = self.next()
        assert name_tok is not None
        name = str(name_tok.value)
        if name == "decl":
            self._decl(dot)
        elif name in ("input", "output"):
            rel = self.expect("IDENT", "relation name")
            target = self.program.inputs if name == "input" else self.program.outputs
            if rel.value not in target:
                target.append(str(rel.value))
        else:
            self.error(f"unknown directive .{name}", dot.line, dot.col)
            raise _ParseAbort

    def _decl(self, dot: Token) -> None:
        rel = self.expect("IDENT", "relation name")
        self.expect("LPAREN", "'('")
        params: list[tuple[str, str]] = []
        while True:
            pname = self.expect("IDENT", "parameter name")
            self.expect("COLON", "':'")
            ptype = self.expect("IDENT", "parameter type")
            if ptype.value not in PARAM_TYPES:
                self.error(
                    f"unknown type {ptype.value!r} (expected one of {', '.join(PARAM_TYPES)})",
                    ptype.line, ptype.col,
                )
                raise _ParseAbort
            params.append((str(pname.value), str(ptype.value)))
            if self.at("COMMA"):
                self.next()
                continue
            break
        self.expect("RPAREN", "')'")
        name = str(rel.value)
        if name in self.program.declarations:
            self.error(f"relation {name} declared twice", rel.line, rel.col)
            return
        self.program.declarations[name] = Declaration(
            name, tuple(params), Span(dot.line, dot.col)
        )

    def _clause(self) -> None:
        start = self.peek()
        assert start is not None
        head = self._atom(context="head")
        if self.at("DOT"):
            self.next()
            if not all(isinstance(a, (SymbolConst, NumberConst, FloatConst)) for a in head.args):
                self.error("fact arguments must be constants", head.span.line, head.span.col)
                return
            self.program.ground_facts.append(head)
            return
        self.expect("ARROW", "':-' or '.'")
        body = self._body(closing=None)
        end = self.expect("DOT", "'.' at end of rule")
        span = Span(start.line, start.col, end.line, end.col)
        if len(body) == 1:
            elems: tuple[BodyElem, ...] = body[0]
        else:
            elems = (Disjunction(tuple(body)),)
        self.program.rules.append(Rule(head=head, body=elems, span=span))

    # -- rule bodies --------------------------------------------------------

    def _body(self, closing: str | None) -> tuple[tuple[BodyElem, ...], ...]:
        """Parse `conj {';' conj}` until DOT (closing=None) or RPAREN."""
        alternatives: list[tuple[BodyElem, ...]] = []
        conj: list[BodyElem] = []
        while True:
            conj.append(self._body_elem())
            if self.at("COMMA"):
                self.next()
                continue
            if self.at("SEMI"):
                self.next()
                alternatives.append(tuple(conj))
                conj = []
                continue
            break
        alternatives.append(tuple(conj))
        if closing == "RPAREN":
            self.expect("RPAREN", "')'")
        return tuple(alternatives)

    def _body_elem(self) -> BodyElem:
        tok = self.peek()
        if tok is None:
            self.error("unexpected end of input in rule body", 0, 0)
            raise _ParseAbort
        if tok.kind == "BANG":
            self.next()
            atom = self._atom(context="body")
            return Negated(atom)
        if tok.kind == "LPAREN":
            self.next()
            alternatives = self._body(closing="RPAREN")
            return Disjunction(alternatives)
        nxt = self.peek(1)
        if tok.kind == "IDENT" and tok.value != "count" and nxt is not None and nxt.kind == "LPAREN":
            return Positive(self._atom(context="body"))
        lhs = self._term()
        op_tok = self.peek()
        if op_tok is None or op_tok.kind not in _CMP_TOKENS:
            where = op_tok or tok
            self.error("expected comparison operator", where.line, where.col)
            raise _ParseAbort
        self.next()
        rhs = self._term()
        return Constraint(_CMP_TOKENS[op_tok.kind], lhs, rhs, Span(tok.line, tok.col))

    # -- atoms and terms ------------------------------------------------------

    def _atom(self, context: str) -> Atom:
        rel = self.expect("IDENT", "relation name")
        self.expect("LPAREN", "'('")
        args: list[Term] = []
        if not self.at("RPAREN"):
            while True:
                if context == "head":
                    args.append(self._term())
                else:
                    args.append(self._pattern_term())
                if self.at("COMMA"):
                    self.next()
                    continue
                break
        self.expect("RPAREN", "')'")
        return Atom(str(rel.value), tuple(args), Span(rel.line, rel.col))

    def _pattern_term(self) -> Term:
        """Body-atom argument: constant, variable or wildcard only."""
        tok = self.peek()
        if tok is None:
            self.error("unexpected end of input in atom arguments", 0, 0)
            raise _ParseAbort
        if tok.kind in ("NUMBER", "FLOAT", "STRING", "UNDERSCORE", "IDENT", "MINUS"):
            if tok.kind == "IDENT" and tok.value == "count":
                nxt = self.peek(1)
                if nxt is not None and nxt.kind == "COLON":
                    self.error("aggregates are not allowed in body atom arguments", tok.line, tok.col)
                    raise _ParseAbort
            return self._primary(allow_paren=False)
        self.error("only constants, variables and '_' may appear in atom arguments", tok.line, tok.col)
        raise _ParseAbort

    def _term(self) -> Term:
        left = self._mult()
        while self.at("PLUS") or self.at("MINUS"):
            op_tok = self.next()
            assert op_tok is not None
            right = self._mult()
            left = ArithExpr("+" if op_tok.kind == "PLUS" else "-", left, right)
        return left

    def _mult(self) -> Term:
        left = self._primary(allow_paren=True)
        while self.at("STAR") or self.at("SLASH"):
            op_tok = self.next()
            assert op_tok is not None
            right = self._primary(allow_paren=True)
            left = ArithExpr("*" if op_tok.kind == "STAR" else "/", left, right)
        return left

    def _primary(self, allow_paren: bool) -> Term:
        tok = self.peek()
        if tok is None:
            self.error("unexpected end of input in term", 0, 0)
            raise _ParseAbort
        if tok.kind == "MINUS":
            self.next()
            lit = self.peek()
            if lit is not None and lit.kind == "NUMBER":
                self.next()
                return NumberConst(-int(lit.value))  # type: ignore[arg-type]
            if lit is not None and lit.kind == "FLOAT":
                self.next()
                return FloatConst(-float(lit.value))  # type: ignore[arg-type]
            self.error("'-' must be followed by a numeric literal", tok.line, tok.col)
            raise _ParseAbort
        if tok.kind == "NUMBER":
            self.next()
            return NumberConst(int(tok.value))  # type: ignore[arg-type]
        if tok.kind == "FLOAT":
            self.next()
            return FloatConst(float(tok.value))  # type: ignore[arg-type]
        if tok.kind == "STRING":
            self.next()
            return SymbolConst(str(tok.value))
        if tok.kind == "UNDERSCORE":
            self.next()
            return WILDCARD
        if tok.kind == "IDENT":
            nxt = self.peek(1)
            if tok.value == "count" and nxt is not None and nxt.kind == "COLON":
                return self._aggregate()
            if nxt is not None and nxt.kind == "LPAREN":
                self.error(f"unexpected '(' after {tok.value!r} in term position", tok.line, tok.col)
                raise _ParseAbort
            self.next()
            return Variable(str(tok.value))
        if tok.kind == "LPAREN" and allow_paren:
            self.next()
            inner = self._term()
            self.expect("RPAREN", "')'")
            return inner
        self.error(f"unexpected {tok.value!r} in term", tok.line, tok.col)
        raise _ParseAbort

    def _aggregate(self) -> Term:
        self.expect("IDENT", "'count'")
        self.expect("COLON", "':'")
        braced = False
        if self.at("LBRACE"):
            self.next()
            braced = True
        target = self._atom(context="body")
        if braced:
            self.expect("RBRACE", "'}'")
        return CountAggregate(target)


def parse_with_errors(source: str) -> tuple[Program, list[ParseError]]:
    """Parse a program, collecting diagnostics instead of raising.

    The returned program is best-effort: clauses after an error are recovered
    at the next clause boundary so later diagnostics still surface.
    """
    tokenizer = _Tokenizer(source)
    tokens = tokenizer.run()
    parser = _Parser(tokens, tokenizer.errors)
    program = parser.run()
    return program, parser.errors[:MAX_ERRORS]


def parse(source: str) -> Program:
    """Parse a program, raising ParseFailed with all diagnostics on error."""
    program, errors = parse_with_errors(source)
    if errors:
        raise ParseFailed(errors, program)
    return program


def parse_ground_atom(text: str) -> Atom:
    """Parse a single ground fact like ``Diagnosis("No. 5", "Bipolar_I")``."""
    program, errors = parse_with_errors(text.strip().rstrip(".") + ".")
    if errors or len(program.ground_facts) != 1 or program.rules:
        raise ParseFailed(errors or [ParseError("expected a single ground fact", 1, 1)])
    return program.ground_facts[0]
