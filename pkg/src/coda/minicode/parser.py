"""Recursive-descent parser for the C-like subset.

Anything outside the supported grammar degrades gracefully: the offending
statement or top-level region is captured verbatim as an Opaque node whose
token run is balanced with respect to braces and parentheses.  The only hard
failures are empty input, unterminated literals, and globally unbalanced
braces/parentheses — balanced input always yields a SourceUnit.
"""

from __future__ import annotations

from ..errors import ParseError
from .lexer import (
    CHAR,
    COMMENT,
    FLOAT,
    IDENTIFIER,
    INTEGER,
    KEYWORD,
    PUNCTUATION,
    STRING,
    TYPE_KEYWORDS,
    WHITESPACE,
    Token,
    tokenize,
)
from .nodes import (
    Assign,
    Binary,
    Block,
    Break,
    Call,
    Continue,
    Decl,
    DoWhile,
    Expr,
    ExprStmt,
    For,
    FunctionDef,
    GlobalDecl,
    Ident,
    If,
    Index,
    Literal,
    OpaqueExpr,
    OpaqueSegment,
    OpaqueStmt,
    Param,
    Return,
    SourceUnit,
    Stmt,
    TopLevelItem,
    Unary,
    While,
    make_unit,
)

ASSIGN_OPS = frozenset({"=", "+=", "-=", "*=", "/=", "%=", "<<=", ">>=", "&=", "|=", "^="})

# Larger number binds tighter.  Assignment sits below all of these.
BINARY_PRECEDENCE = {
    "||": 1,
    "&&": 2,
    "|": 3,
    "^": 4,
    "&": 5,
    "==": 6,
    "!=": 6,
    "<": 7,
    "<=": 7,
    ">": 7,
    ">=": 7,
    "<<": 8,
    ">>": 8,
    "+": 9,
    "-": 9,
    "*": 10,
    "/": 10,
    "%": 10,
}

_LITERAL_KINDS = {INTEGER: "int", FLOAT: "float", CHAR: "char", STRING: "string"}

_BASE_TYPE_KEYWORDS = TYPE_KEYWORDS - {"const"}


class _Recover(Exception):
    """Internal signal: structured parse failed, fall back to opaque capture."""


def parse(source: str, dialect: str = "c-like") -> SourceUnit:
    """Parse source into a SourceUnit.

    Raises ParseError for empty input, unterminated literals, and unbalanced
    braces/parentheses; never for merely unsupported constructs.
    """
    if dialect != "c-like":
        raise ValueError(f"unknown dialect: {dialect!r}")
    if source == "":
        raise ParseError("empty input")
    tokens = tokenize(source)
    _check_balance(tokens)
    return _Parser(tokens).parse_unit()


def _check_balance(tokens: list[Token]) -> None:
    stack: list[Token] = []
    pairs = {")": "(", "}": "{"}
    for tok in tokens:
        if tok.text in ("(", "{") and tok.kind == PUNCTUATION:
            stack.append(tok)
        elif tok.text in (")", "}") and tok.kind == PUNCTUATION:
            if not stack or stack[-1].text != pairs[tok.text]:
                raise ParseError(
                    f"unbalanced {tok.text!r} at line {tok.line}, column {tok.column}"
                )
            stack.pop()
    if stack:
        tok = stack[-1]
        raise ParseError(f"unbalanced {tok.text!r} at line {tok.line}, column {tok.column}")


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.raw = tokens
        self.sig = [i for i, t in enumerate(tokens) if t.kind not in (WHITESPACE, COMMENT)]
        self.pos = 0  # index into self.sig

    # Token access -------------------------------------------------------

    def _tok(self, ahead: int = 0) -> Token | None:
        idx = self.pos + ahead
        if idx >= len(self.sig):
            return None
        return self.raw[self.sig[idx]]

    def _text(self, ahead: int = 0) -> str | None:
        tok = self._tok(ahead)
        return None if tok is None else tok.text

    def _advance(self) -> Token:
        tok = self._tok()
        if tok is None:
            raise _Recover
        self.pos += 1
        return tok

    def _expect(self, text: str) -> Token:
        tok = self._tok()
        if tok is None or tok.text != text:
            raise _Recover
        return self._advance()

    def _expect_ident(self) -> str:
        tok = self._tok()
        if tok is None or tok.kind != IDENTIFIER:
            raise _Recover
        self._advance()
        return tok.text

    def _at_end(self) -> bool:
        return self.pos >= len(self.sig)

    # Top level ----------------------------------------------------------

    def parse_unit(self) -> SourceUnit:
        items: list[TopLevelItem] = []
        while not self._at_end():
            items.extend(self._top_item())
        return make_unit(items)

    def _top_item(self) -> list[TopLevelItem]:
        if self._text() == "#":
            return [OpaqueSegment(self._capture_hash_line())]
        start = self.pos
        try:
            return self._function_or_global()
        except _Recover:
            self.pos = start
            return [OpaqueSegment(self._capture_opaque(top_level=True))]

    def _function_or_global(self) -> list[TopLevelItem]:
        type_text = self._type_prefix()
        name = self._expect_ident()
        if self._text() == "(":
            params = self._param_list()
            if self._text() == "{":
                body = self._block()
                return [FunctionDef(type_text, name, params, body)]
            raise _Recover  # prototype or K&R definition
        return [GlobalDecl(d) for d in self._declarator_list(type_text, name)]

    def _type_prefix(self) -> str:
        parts: list[str] = []
        while True:
            tok = self._tok()
            if tok is None or tok.kind != KEYWORD or tok.text not in TYPE_KEYWORDS:
                break
            parts.append(self._advance().text)
        if not parts or not any(p in _BASE_TYPE_KEYWORDS for p in parts):
            raise _Recover
        return " ".join(parts)

    def _param_list(self) -> tuple[Param, ...]:
        self._expect("(")
        if self._text() == ")":
            self._advance()
            return ()
        if self._text() == "void" and self._text(1) == ")":
            self._advance()
            self._advance()
            return ()
        params: list[Param] = []
        while True:
            type_text = self._type_prefix()
            name: str | None = None
            tok = self._tok()
            if tok is not None and tok.kind == IDENTIFIER:
                name = self._advance().text
            dims = self._dims()
            params.append(Param(type_text, name, dims))
            if self._text() == ",":
                self._advance()
                continue
            self._expect(")")
            return tuple(params)

    # Statements ---------------------------------------------------------

    def _block(self) -> Block:
        self._expect("{")
        stmts: list[Stmt] = []
        while self._text() != "}":
            if self._at_end():
                raise _Recover
            stmts.extend(self._statement())
        self._advance()
        return Block(tuple(stmts))

    def _statement(self) -> list[Stmt]:
        tok = self._tok()
        if tok is None:
            raise _Recover
        if tok.text == "#":
            return [OpaqueStmt(self._capture_hash_line())]
        start = self.pos
        try:
            return self._structured_statement(tok)
        except _Recover:
            self.pos = start
            return [OpaqueStmt(self._capture_opaque(top_level=False))]

    def _structured_statement(self, tok: Token) -> list[Stmt]:
        text = tok.text
        if text == "{":
            return [self._block()]
        if text == "if":
            return [self._if_statement()]
        if text == "for":
            return [self._for_statement()]
        if text == "while":
            self._advance()
            self._expect("(")
            cond = self._expression()
            self._expect(")")
            return [While(cond, self._single_statement())]
        if text == "do":
            self._advance()
            body = self._single_statement()
            self._expect("while")
            self._expect("(")
            cond = self._expression()
            self._expect(")")
            self._expect(";")
            return [DoWhile(body, cond)]
        if text == "return":
            self._advance()
            expr = None if self._text() == ";" else self._expression()
            self._expect(";")
            return [Return(expr)]
        if text == "break":
            self._advance()
            self._expect(";")
            return [Break()]
        if text == "continue":
            self._advance()
            self._expect(";")
            return [Continue()]
        if tok.kind == KEYWORD and text in TYPE_KEYWORDS:
            type_text = self._type_prefix()
            name = self._expect_ident()
            return list(self._declarator_list(type_text, name))
        expr = self._expression()
        self._expect(";")
        return [ExprStmt(expr)]

    def _single_statement(self) -> Stmt:
        stmts = self._statement()
        if len(stmts) == 1:
            return stmts[0]
        return Block(tuple(stmts))

    def _if_statement(self) -> If:
        self._expect("if")
        self._expect("(")
        cond = self._expression()
        self._expect(")")
        branches: list[tuple[Expr, Stmt]] = [(cond, self._single_statement())]
        else_body: Stmt | None = None
        while self._text() == "else":
            if self._text(1) == "if":
                self._advance()
                self._advance()
                self._expect("(")
                cond = self._expression()
                self._expect(")")
                branches.append((cond, self._single_statement()))
            else:
                self._advance()
                else_body = self._single_statement()
                break
        return If(tuple(branches), else_body)

    def _for_statement(self) -> For:
        self._expect("for")
        self._expect("(")
        init: Stmt | None
        if self._text() == ";":
            self._advance()
            init = None
        else:
            tok = self._tok()
            if tok is not None and tok.kind == KEYWORD and tok.text in TYPE_KEYWORDS:
                type_text = self._type_prefix()
                name = self._expect_ident()
                dims = self._dims()
                init_expr = None
                if self._text() == "=":
                    self._advance()
                    init_expr = self._expression()
                init = Decl(type_text, name, dims, init_expr)
            else:
                init = ExprStmt(self._expression())
            self._expect(";")
        cond = None if self._text() == ";" else self._expression()
        self._expect(";")
        step = None if self._text() == ")" else self._expression()
        self._expect(")")
        return For(init, cond, step, self._single_statement())

    def _declarator_list(self, type_text: str, first_name: str) -> list[Decl]:
        decls: list[Decl] = []
        name = first_name
        while True:
            dims = self._dims()
            init = None
            if self._text() == "=":
                self._advance()
                init = self._expression()
            decls.append(Decl(type_text, name, dims, init))
            if self._text() == ",":
                self._advance()
                name = self._expect_ident()
                continue
            self._expect(";")
            return decls

    def _dims(self) -> tuple[Expr | None, ...]:
        dims: list[Expr | None] = []
        while self._text() == "[":
            self._advance()
            if self._text() == "]":
                dims.append(None)
            else:
                dims.append(self._expression())
            self._expect("]")
        return tuple(dims)

    # Expressions --------------------------------------------------------

    def _expression(self) -> Expr:
        lhs = self._binary(1)
        tok = self._tok()
        if tok is not None and tok.text in ASSIGN_OPS and tok.kind != PUNCTUATION:
            if not isinstance(lhs, (Ident, Index, OpaqueExpr)):
                raise _Recover
            op = self._advance().text
            rhs = self._expression()  # right-associative
            return Assign(op, lhs, rhs)
        return lhs

    def _binary(self, min_prec: int) -> Expr:
        lhs = self._unary()
        while True:
            tok = self._tok()
            if tok is None:
                return lhs
            prec = BINARY_PRECEDENCE.get(tok.text)
            if prec is None or prec < min_prec:
                return lhs
            # Reject binary parse when the operator is actually an
            # assignment head (e.g. "<" of "<<=" never reaches here; lexer
            # handles maximal munch).
            self._advance()
            rhs = self._binary(prec + 1)
            lhs = Binary(tok.text, lhs, rhs)

    def _unary(self) -> Expr:
        tok = self._tok()
        if tok is None:
            raise _Recover
        if tok.text in ("!", "-", "~"):
            self._advance()
            return Unary(tok.text, self._unary())
        if tok.text == "++" or tok.text == "--":
            self._advance()
            return Unary("pre" + tok.text, self._unary())
        return self._postfix()

    def _postfix(self) -> Expr:
        expr = self._primary()
        while True:
            text = self._text()
            if text == "(":
                self._advance()
                args: list[Expr] = []
                if self._text() != ")":
                    while True:
                        args.append(self._expression())
                        if self._text() == ",":
                            self._advance()
                            continue
                        break
                self._expect(")")
                expr = Call(expr, tuple(args))
            elif text == "[":
                self._advance()
                index = self._expression()
                self._expect("]")
                expr = Index(expr, index)
            elif text in ("++", "--"):
                self._advance()
                expr = Unary("post" + text, expr)
            else:
                return expr

    def _primary(self) -> Expr:
        tok = self._tok()
        if tok is None:
            raise _Recover
        kind = _LITERAL_KINDS.get(tok.kind)
        if kind is not None:
            self._advance()
            return Literal(kind, tok.text)
        if tok.kind == IDENTIFIER:
            self._advance()
            return Ident(tok.text)
        if tok.text == "(":
            self._advance()
            expr = self._expression()
            self._expect(")")
            return expr
        raise _Recover

    # Opaque capture -----------------------------------------------------

    def _capture_opaque(self, top_level: bool) -> tuple[Token, ...]:
        """Consume a balanced raw-token run for one unparseable region.

        The run ends after a ';' at nesting depth zero or after a '}' that
        closes a construct opened inside the run; it stops before a '}' (or
        stray closer) that belongs to the enclosing block.
        """
        depth = 0
        j = self.pos
        end: int | None = None
        while j < len(self.sig):
            tok = self.raw[self.sig[j]]
            text = tok.text
            if text in ("(", "{", "[") and tok.kind == PUNCTUATION:
                depth += 1
            elif text in (")", "}", "]") and tok.kind == PUNCTUATION:
                if depth == 0:
                    end = j - 1  # enclosing closer: stop before it
                    break
                depth -= 1
                if depth == 0 and text == "}":
                    end = j  # closed a construct like "switch (...) { ... }"
                    break
            elif text == ";" and depth == 0:
                end = j
                break
            j += 1
        if end is None:
            end = len(self.sig) - 1
        if end < self.pos:
            # Nothing consumable before the enclosing closer; take one token
            # to guarantee progress (cannot happen for balanced input, kept
            # as a hard stop).
            end = self.pos
        raw_slice = self.raw[self.sig[self.pos] : self.sig[end] + 1]
        self.pos = end + 1
        return tuple(raw_slice)

    def _capture_hash_line(self) -> tuple[Token, ...]:
        """Consume a '#'-led directive through the end of its line."""
        start_raw = self.sig[self.pos]
        j = start_raw
        while j < len(self.raw):
            tok = self.raw[j]
            if tok.kind == WHITESPACE and "\n" in tok.text:
                break
            j += 1
        # j is exclusive; trim trailing whitespace/comment tokens.
        end_raw = j - 1
        while end_raw > start_raw and self.raw[end_raw].kind in (WHITESPACE, COMMENT):
            end_raw -= 1
        run = tuple(self.raw[start_raw : end_raw + 1])
        while self.pos < len(self.sig) and self.sig[self.pos] <= end_raw:
            self.pos += 1
        return run
