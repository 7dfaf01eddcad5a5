"""Lossless parser, printer, and identifier tools for a C-like subset."""

from .identifiers import (
    DEFAULT_ALLOWLIST,
    all_identifier_texts,
    collect_identifiers,
    identifier_occurs,
    mask_identifiers,
    rename_identifier,
    unit_tokens,
)
from .lexer import Token, tokenize
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
    children,
    make_unit,
    walk,
)
from .parser import parse
from .printer import print_source

__all__ = [
    "DEFAULT_ALLOWLIST",
    "Token",
    "tokenize",
    "parse",
    "print_source",
    "collect_identifiers",
    "mask_identifiers",
    "rename_identifier",
    "identifier_occurs",
    "all_identifier_texts",
    "unit_tokens",
    "children",
    "walk",
    "make_unit",
    "Assign",
    "Binary",
    "Block",
    "Break",
    "Call",
    "Continue",
    "Decl",
    "DoWhile",
    "Expr",
    "ExprStmt",
    "For",
    "FunctionDef",
    "GlobalDecl",
    "Ident",
    "If",
    "Index",
    "Literal",
    "OpaqueExpr",
    "OpaqueSegment",
    "OpaqueStmt",
    "Param",
    "Return",
    "SourceUnit",
    "Stmt",
    "Unary",
    "While",
]
