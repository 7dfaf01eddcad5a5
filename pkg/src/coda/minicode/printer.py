"""Pretty-printer for the C-like subset.

Structured nodes print in one normalized style (4-space indent, minimal
parentheses); Opaque nodes emit their captured token texts verbatim.  The
output always re-parses to a SourceUnit structurally equal to the input.
"""

from __future__ import annotations

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
    Unary,
    While,
)
from .parser import BINARY_PRECEDENCE

_INDENT = "    "

# Expression precedence levels used for minimal parenthesization.  Binary
# operators reuse the parser's table shifted above assignment.
_PREC_ASSIGN = 1
_PREC_BINARY_BASE = 1  # binary levels come out as table value + 1 (2..11)
_PREC_UNARY = 12
_PREC_POSTFIX = 13
_PREC_PRIMARY = 14


def print_source(unit: SourceUnit) -> str:
    """Render a SourceUnit back to compilable text."""
    parts = [_top_item(item) for item in unit.items]
    return "\n".join(parts) + "\n" if parts else "\n"


def _top_item(item: object) -> str:
    if isinstance(item, FunctionDef):
        params = ", ".join(_param(p) for p in item.params)
        header = f"{item.return_type} {item.name}({params}) "
        return header + _stmt_block(item.body, 0)
    if isinstance(item, GlobalDecl):
        return _stmt(item.decl, 0)
    if isinstance(item, OpaqueSegment):
        return _opaque_text(item.tokens)
    raise TypeError(f"not a top-level item: {item!r}")


def _param(p: Param) -> str:
    text = p.type if p.name is None else f"{p.type} {p.name}"
    return text + _dims_text(p.dims)


def _dims_text(dims: tuple[Expr | None, ...]) -> str:
    return "".join("[]" if d is None else f"[{_expr(d)}]" for d in dims)


def _opaque_text(tokens: tuple) -> str:
    return "".join(t.text for t in tokens)


# Statements ---------------------------------------------------------------


def _stmt(stmt: Stmt, level: int) -> str:
    pad = _INDENT * level
    if isinstance(stmt, Block):
        return pad + _stmt_block(stmt, level)
    if isinstance(stmt, ExprStmt):
        return f"{pad}{_expr(stmt.expr)};"
    if isinstance(stmt, Decl):
        return pad + _decl_text(stmt)
    if isinstance(stmt, Return):
        return f"{pad}return;" if stmt.expr is None else f"{pad}return {_expr(stmt.expr)};"
    if isinstance(stmt, Break):
        return f"{pad}break;"
    if isinstance(stmt, Continue):
        return f"{pad}continue;"
    if isinstance(stmt, OpaqueStmt):
        return pad + _opaque_text(stmt.tokens)
    if isinstance(stmt, While):
        return f"{pad}while ({_expr(stmt.cond)})" + _attached_body(stmt.body, level)
    if isinstance(stmt, DoWhile):
        if isinstance(stmt.body, Block):
            return f"{pad}do {_stmt_block(stmt.body, level)} while ({_expr(stmt.cond)});"
        body = _stmt(stmt.body, level + 1)
        return f"{pad}do\n{body}\n{pad}while ({_expr(stmt.cond)});"
    if isinstance(stmt, For):
        return pad + _for_header(stmt) + _attached_body(stmt.body, level)
    if isinstance(stmt, If):
        return _if_text(stmt, level)
    raise TypeError(f"not a statement: {stmt!r}")


def _stmt_block(block: Block, level: int) -> str:
    if not block.stmts:
        return "{\n" + _INDENT * level + "}"
    inner = "\n".join(_stmt(s, level + 1) for s in block.stmts)
    return "{\n" + inner + "\n" + _INDENT * level + "}"


def _attached_body(body: Stmt, level: int) -> str:
    """Loop/branch body: blocks attach on the same line, else indent below."""
    if isinstance(body, Block):
        return " " + _stmt_block(body, level)
    return "\n" + _stmt(body, level + 1)


def _for_header(stmt: For) -> str:
    if stmt.init is None:
        init = ";"
    elif isinstance(stmt.init, Decl):
        init = _decl_text(stmt.init)
    elif isinstance(stmt.init, ExprStmt):
        init = f"{_expr(stmt.init.expr)};"
    else:
        raise TypeError(f"bad for-init: {stmt.init!r}")
    cond = f" {_expr(stmt.cond)};" if stmt.cond is not None else ";"
    step = f" {_expr(stmt.step)}" if stmt.step is not None else ""
    return f"for ({init}{cond}{step})"


def _decl_text(decl: Decl) -> str:
    text = f"{decl.type} {decl.name}" + _dims_text(decl.dims)
    if decl.init is not None:
        text += f" = {_expr(decl.init)}"
    return text + ";"


def _if_text(stmt: If, level: int) -> str:
    pad = _INDENT * level
    parts: list[str] = []
    for i, (cond, body) in enumerate(stmt.branches):
        keyword = "if" if i == 0 else "else if"
        head = (pad if i == 0 else "") + f"{keyword} ({_expr(cond)})"
        if isinstance(body, Block):
            parts.append(head + " " + _stmt_block(body, level))
            glue = " "
        else:
            parts.append(head + "\n" + _stmt(body, level + 1))
            glue = "\n" + pad
        if i + 1 < len(stmt.branches) or stmt.else_body is not None:
            parts.append(glue)
    if stmt.else_body is not None:
        if isinstance(stmt.else_body, Block):
            parts.append("else " + _stmt_block(stmt.else_body, level))
        else:
            parts.append("else\n" + _stmt(stmt.else_body, level + 1))
    return "".join(parts)


# Expressions ---------------------------------------------------------------


def _expr(expr: Expr, min_prec: int = 0) -> str:
    text, prec = _expr_prec(expr)
    if prec < min_prec:
        return f"({text})"
    return text


def _expr_prec(expr: Expr) -> tuple[str, int]:
    if isinstance(expr, Ident):
        return expr.name, _PREC_PRIMARY
    if isinstance(expr, Literal):
        return expr.text, _PREC_PRIMARY
    if isinstance(expr, OpaqueExpr):
        return _opaque_text(expr.tokens), _PREC_PRIMARY
    if isinstance(expr, Call):
        callee = _expr(expr.callee, _PREC_POSTFIX)
        args = ", ".join(_expr(a) for a in expr.args)
        return f"{callee}({args})", _PREC_POSTFIX
    if isinstance(expr, Index):
        base = _expr(expr.base, _PREC_POSTFIX)
        return f"{base}[{_expr(expr.index)}]", _PREC_POSTFIX
    if isinstance(expr, Unary):
        if expr.op.startswith("post"):
            operand = _expr(expr.operand, _PREC_POSTFIX)
            return f"{operand}{expr.op[4:]}", _PREC_POSTFIX
        op = expr.op[3:] if expr.op.startswith("pre") else expr.op
        operand = _expr(expr.operand, _PREC_UNARY)
        # "-" before "-5" or "--x" would re-lex as "--"; parenthesize.
        if op and operand and op[-1] == operand[0] and op in ("-", "--"):
            operand = f"({operand})"
        return f"{op}{operand}", _PREC_UNARY
    if isinstance(expr, Binary):
        prec = BINARY_PRECEDENCE[expr.op] + _PREC_BINARY_BASE
        lhs = _expr(expr.lhs, prec)
        rhs = _expr(expr.rhs, prec + 1)
        return f"{lhs} {expr.op} {rhs}", prec
    if isinstance(expr, Assign):
        lvalue = _expr(expr.lvalue, _PREC_POSTFIX)
        rhs = _expr(expr.rhs, _PREC_ASSIGN)
        return f"{lvalue} {expr.op} {rhs}", _PREC_ASSIGN
    raise TypeError(f"not an expression: {expr!r}")
