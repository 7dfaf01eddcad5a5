"""Syntax tree for the C-like subset.

All nodes are frozen dataclasses, so trees are immutable and structural
equality comes for free.  Unparseable regions survive as Opaque nodes that
carry their raw token runs verbatim (including interior whitespace and
comments), which keeps printing lossless for those regions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Union

from .lexer import IDENTIFIER, Token


class Expr:
    """Marker base for expression nodes."""

    __slots__ = ()


class Stmt:
    """Marker base for statement nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class Ident(Expr):
    name: str


@dataclass(frozen=True)
class Literal(Expr):
    kind: str  # "int" | "float" | "char" | "string"
    text: str


@dataclass(frozen=True)
class Unary(Expr):
    op: str  # "pre++" | "pre--" | "post++" | "post--" | "!" | "-" | "~"
    operand: Expr


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Assign(Expr):
    op: str  # "=" or one of the compound assignment operators
    lvalue: Expr  # Ident | Index | OpaqueExpr
    rhs: Expr


@dataclass(frozen=True)
class Call(Expr):
    callee: Expr
    args: tuple[Expr, ...]


@dataclass(frozen=True)
class Index(Expr):
    base: Expr
    index: Expr


@dataclass(frozen=True)
class OpaqueExpr(Expr):
    tokens: tuple[Token, ...]


@dataclass(frozen=True)
class Block(Stmt):
    stmts: tuple[Stmt, ...]


@dataclass(frozen=True)
class For(Stmt):
    init: Stmt | None  # Decl or ExprStmt
    cond: Expr | None
    step: Expr | None
    body: Stmt


@dataclass(frozen=True)
class While(Stmt):
    cond: Expr
    body: Stmt


@dataclass(frozen=True)
class DoWhile(Stmt):
    body: Stmt
    cond: Expr


@dataclass(frozen=True)
class If(Stmt):
    # Each branch pairs a condition with its body; else-if chains flatten
    # into consecutive branches.
    branches: tuple[tuple[Expr, Stmt], ...]
    else_body: Stmt | None


@dataclass(frozen=True)
class ExprStmt(Stmt):
    expr: Expr


@dataclass(frozen=True)
class Decl(Stmt):
    type: str
    name: str
    dims: tuple[Expr | None, ...] = ()
    init: Expr | None = None


@dataclass(frozen=True)
class Return(Stmt):
    expr: Expr | None


@dataclass(frozen=True)
class Break(Stmt):
    pass


@dataclass(frozen=True)
class Continue(Stmt):
    pass


@dataclass(frozen=True)
class OpaqueStmt(Stmt):
    tokens: tuple[Token, ...]


@dataclass(frozen=True)
class Param:
    type: str
    name: str | None
    dims: tuple[Expr | None, ...] = ()


@dataclass(frozen=True)
class FunctionDef:
    return_type: str
    name: str
    params: tuple[Param, ...]
    body: Block


@dataclass(frozen=True)
class GlobalDecl:
    decl: Decl


@dataclass(frozen=True)
class OpaqueSegment:
    tokens: tuple[Token, ...]


TopLevelItem = Union[FunctionDef, GlobalDecl, OpaqueSegment]


@dataclass(frozen=True)
class SourceUnit:
    items: tuple[TopLevelItem, ...]
    # Derived from items; excluded from equality.
    symbol_table: frozenset[str] = field(default=frozenset(), compare=False)


def make_unit(items: tuple[TopLevelItem, ...] | list[TopLevelItem]) -> SourceUnit:
    """Build a SourceUnit with its symbol table computed from the items."""
    items = tuple(items)
    return SourceUnit(items, frozenset(_declared_names(items)))


def _declared_names(items: tuple[TopLevelItem, ...]) -> Iterator[str]:
    for item in items:
        if isinstance(item, FunctionDef):
            yield item.name
            for p in item.params:
                if p.name:
                    yield p.name
            yield from _declared_in_stmt(item.body)
        elif isinstance(item, GlobalDecl):
            yield item.decl.name
        elif isinstance(item, OpaqueSegment):
            for tok in item.tokens:
                if tok.kind == IDENTIFIER:
                    yield tok.text


def _declared_in_stmt(stmt: Stmt) -> Iterator[str]:
    for node in walk(stmt):
        if isinstance(node, Decl):
            yield node.name
        elif isinstance(node, OpaqueStmt):
            for tok in node.tokens:
                if tok.kind == IDENTIFIER:
                    yield tok.text


def children(node: object) -> tuple[object, ...]:
    """Direct child AST nodes, in source order."""
    if isinstance(node, SourceUnit):
        return node.items
    if isinstance(node, FunctionDef):
        return (node.body,)
    if isinstance(node, GlobalDecl):
        return (node.decl,)
    if isinstance(node, Block):
        return node.stmts
    if isinstance(node, For):
        out: list[object] = []
        if node.init is not None:
            out.append(node.init)
        if node.cond is not None:
            out.append(node.cond)
        if node.step is not None:
            out.append(node.step)
        out.append(node.body)
        return tuple(out)
    if isinstance(node, While):
        return (node.cond, node.body)
    if isinstance(node, DoWhile):
        return (node.body, node.cond)
    if isinstance(node, If):
        out = []
        for cond, body in node.branches:
            out.append(cond)
            out.append(body)
        if node.else_body is not None:
            out.append(node.else_body)
        return tuple(out)
    if isinstance(node, ExprStmt):
        return (node.expr,)
    if isinstance(node, Decl):
        out = [d for d in node.dims if d is not None]
        if node.init is not None:
            out.append(node.init)
        return tuple(out)
    if isinstance(node, Return):
        return () if node.expr is None else (node.expr,)
    if isinstance(node, Unary):
        return (node.operand,)
    if isinstance(node, Binary):
        return (node.lhs, node.rhs)
    if isinstance(node, Assign):
        return (node.lvalue, node.rhs)
    if isinstance(node, Call):
        return (node.callee, *node.args)
    if isinstance(node, Index):
        return (node.base, node.index)
    return ()


def walk(node: object) -> Iterator[object]:
    """Yield node and every descendant in depth-first source order."""
    stack = [node]
    while stack:
        current = stack.pop()
        yield current
        stack.extend(reversed(children(current)))
