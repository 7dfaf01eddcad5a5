"""Catalog of the twenty structure rewrite rules and their matchers.

Four categories: loop form (R1), branch form (R2), calculation form (R3),
and constant form (R4).  Each rule rewrites one source shape into an
equivalent one.  This module owns the catalog metadata, the structural
predicates shared with the rewrite engine, and occurrence counting for the
census.  Matching is purely structural; safety preconditions are enforced
at apply time by the engine.

Occurrence positions:
  - ++/-- rules match only where the expression value is unused: the whole
    expression of an ExprStmt or a for-loop step.
  - Literal hoisting (R4a) skips for-loop headers, declaration array sizes,
    literals that are the entire initializer of a const declaration, and
    anything outside a function body.
  - Negation-guarded if runs (R2b) are matched per maximal run of block
    statements, one occurrence per run.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from ..minicode.identifiers import DEFAULT_ALLOWLIST
from ..minicode.nodes import (
    Assign,
    Binary,
    Block,
    Call,
    Continue,
    Decl,
    DoWhile,
    Expr,
    ExprStmt,
    For,
    FunctionDef,
    Ident,
    If,
    Index,
    Literal,
    OpaqueExpr,
    OpaqueStmt,
    Return,
    SourceUnit,
    Stmt,
    Unary,
    While,
    walk,
)

CATEGORY_LOOP = "R1-loop"
CATEGORY_BRANCH = "R2-branch"
CATEGORY_CALCULATION = "R3-calculation"
CATEGORY_CONSTANT = "R4-constant"

INCDEC_OPS = frozenset({"pre++", "post++", "pre--", "post--"})

# Compound assignment rule per operator, and the generic reverse rule.
COMPOUND_RULES: dict[str, str] = {
    "R3e": "+=",
    "R3f": "-=",
    "R3g": "*=",
    "R3h": "/=",
    "R3i": "%=",
    "R3j": "<<=",
    "R3k": ">>=",
    "R3l": "&=",
    "R3m": "|=",
}
COMPOUND_TO_RULE = {op: rid for rid, op in COMPOUND_RULES.items()}
PLAIN_OF_COMPOUND = {op: op[:-1] for op in COMPOUND_TO_RULE}
COMPOUND_OF_PLAIN = {plain: comp for comp, plain in PLAIN_OF_COMPOUND.items()}

INCDEC_RULES: dict[str, str] = {
    "R3a": "pre++",
    "R3b": "post++",
    "R3c": "pre--",
    "R3d": "post--",
}
INCDEC_TO_RULE = {op: rid for rid, op in INCDEC_RULES.items()}
INCDEC_COMPOUND = {"pre++": "+=", "post++": "+=", "pre--": "-=", "post--": "-="}

HOISTABLE_LITERAL_KINDS = frozenset({"int", "char", "string"})


@dataclass(frozen=True)
class TransformRule:
    rule_id: str
    category: str
    description: str
    # The catalog rule that undoes this one, when an exact one exists.
    inverse_rule_id: str | None


RULES: tuple[TransformRule, ...] = (
    TransformRule(
        "R1a",
        CATEGORY_LOOP,
        "rewrite a for loop as a while loop, hoisting the initializer and "
        "appending the step to the body",
        "R1b",
    ),
    TransformRule(
        "R1b",
        CATEGORY_LOOP,
        "rewrite a while loop as a for loop with empty initializer and step",
        "R1a",
    ),
    TransformRule(
        "R2a",
        CATEGORY_BRANCH,
        "split an if/else-if/else chain into independent ifs guarded by "
        "conjunctions of negated prior conditions",
        "R2b",
    ),
    TransformRule(
        "R2b",
        CATEGORY_BRANCH,
        "merge a run of negation-guarded independent ifs back into an "
        "if/else-if/else chain",
        "R2a",
    ),
    TransformRule(
        "R3a",
        CATEGORY_CALCULATION,
        "rewrite a pre-increment statement as an add-assignment of one",
        None,
    ),
    TransformRule(
        "R3b",
        CATEGORY_CALCULATION,
        "rewrite a post-increment statement as an add-assignment of one",
        None,
    ),
    TransformRule(
        "R3c",
        CATEGORY_CALCULATION,
        "rewrite a pre-decrement statement as a subtract-assignment of one",
        None,
    ),
    TransformRule(
        "R3d",
        CATEGORY_CALCULATION,
        "rewrite a post-decrement statement as a subtract-assignment of one",
        None,
    ),
    *(
        TransformRule(
            rid,
            CATEGORY_CALCULATION,
            f"expand a compound assignment x {op} e into x = x {op[:-1]} e",
            None,
        )
        for rid, op in COMPOUND_RULES.items()
    ),
    TransformRule(
        "R3n",
        CATEGORY_CALCULATION,
        "contract a plain assignment x = x op e into the compound form",
        None,
    ),
    TransformRule(
        "R4a",
        CATEGORY_CONSTANT,
        "hoist a literal into a fresh const declaration at the start of the "
        "enclosing block",
        "R4b",
    ),
    TransformRule(
        "R4b",
        CATEGORY_CONSTANT,
        "inline a const declaration initialized by a literal into its uses",
        "R4a",
    ),
)

RULE_IDS: tuple[str, ...] = tuple(rule.rule_id for rule in RULES)
RULES_BY_ID = {rule.rule_id: rule for rule in RULES}

assert len(RULES) == 20


def catalog(enabled: frozenset[str] | None = None) -> list[dict]:
    """The rule catalog as plain dicts, for the CLI dump."""
    return [
        {
            "ruleId": rule.rule_id,
            "category": rule.category,
            "description": rule.description,
            "enabled": enabled is None or rule.rule_id in enabled,
        }
        for rule in RULES
    ]


def is_side_effect_free(expr: Expr) -> bool:
    """No calls, assignments, increments/decrements, or opaque runs inside."""
    for node in walk(expr):
        if isinstance(node, (Call, Assign, OpaqueExpr)):
            return False
        if isinstance(node, Unary) and node.op in INCDEC_OPS:
            return False
    return True


def is_simple_lvalue(expr: Expr) -> bool:
    """A name, or an index chain whose base and indexes are side-effect-free."""
    if isinstance(expr, Ident):
        return True
    if isinstance(expr, Index):
        return is_simple_lvalue(expr.base) and is_side_effect_free(expr.index)
    return False


def lvalue_root_name(expr: Expr) -> str | None:
    """The variable a write through this lvalue ultimately touches."""
    while isinstance(expr, Index):
        expr = expr.base
    return expr.name if isinstance(expr, Ident) else None


def negate(expr: Expr) -> Unary:
    return Unary("!", expr)


def conjoin(terms: Sequence[Expr]) -> Expr:
    out = terms[0]
    for term in terms[1:]:
        out = Binary("&&", out, term)
    return out


def matches_branch_chain(node: object) -> bool:
    """R2a's before-form: an if with more than one branch or an else."""
    return isinstance(node, If) and (len(node.branches) >= 2 or node.else_body is not None)


def split_branch_chain(node: If) -> list[Stmt]:
    """R2a's rewrite: one independent if per branch.

    Branch k is guarded by the conjunction of negations of conditions
    1..k-1 and its own condition; the else body gets the all-negation guard.
    """
    first_cond, first_body = node.branches[0]
    out: list[Stmt] = [If(((first_cond, first_body),), None)]
    prefix: Expr = negate(first_cond)
    for cond, body in node.branches[1:]:
        out.append(If(((Binary("&&", prefix, cond), body),), None))
        prefix = Binary("&&", prefix, negate(cond))
    if node.else_body is not None:
        out.append(If(((prefix, node.else_body),), None))
    return out


def _single_branch_if(stmt: Stmt) -> tuple[Expr, Stmt] | None:
    if isinstance(stmt, If) and len(stmt.branches) == 1 and stmt.else_body is None:
        return stmt.branches[0]
    return None


def match_negation_run(stmts: Sequence[Stmt], start: int) -> tuple[int, If] | None:
    """R2b's before-form: a run of ifs shaped like split_branch_chain output.

    Returns (run length, merged chain) when at least two consecutive
    statements at start form the pattern; the merged chain is R2b's rewrite.
    """
    head = _single_branch_if(stmts[start])
    if head is None:
        return None
    conditions = [head[0]]
    bodies = [head[1]]
    else_body: Stmt | None = None
    prefix: Expr = negate(head[0])
    k = start + 1
    while k < len(stmts):
        branch = _single_branch_if(stmts[k])
        if branch is None:
            break
        cond, body = branch
        if cond == prefix:
            else_body = body
            k += 1
            break
        if isinstance(cond, Binary) and cond.op == "&&" and cond.lhs == prefix:
            conditions.append(cond.rhs)
            bodies.append(body)
            prefix = Binary("&&", prefix, negate(cond.rhs))
            k += 1
            continue
        break
    length = k - start
    if length < 2:
        return None
    merged = If(tuple(zip(conditions, bodies)), else_body)
    return length, merged


def branch_rewrite_safe(
    conditions: Sequence[Expr],
    bodies: Sequence[Stmt],
    global_names: frozenset[str],
    allowlist: frozenset[str] = DEFAULT_ALLOWLIST,
) -> bool:
    """Whether splitting or merging this branch structure preserves meaning.

    Conditions get re-evaluated after earlier bodies run, so they must be
    side-effect-free and no body may write a name they read.  A call in a
    body could write a global a condition reads, so that combination is
    also rejected.
    """
    cond_names: set[str] = set()
    for cond in conditions:
        if not is_side_effect_free(cond):
            return False
        cond_names.update(n.name for n in walk(cond) if isinstance(n, Ident))
    for body in bodies:
        for node in walk(body):
            if isinstance(node, (OpaqueStmt, OpaqueExpr)):
                return False
            if isinstance(node, Assign):
                name = lvalue_root_name(node.lvalue)
                if name is None or name in cond_names:
                    return False
            elif isinstance(node, Unary) and node.op in INCDEC_OPS:
                name = lvalue_root_name(node.operand)
                if name is None or name in cond_names:
                    return False
            elif isinstance(node, Decl):
                if node.name in cond_names:
                    return False
            elif isinstance(node, Call):
                if not isinstance(node.callee, Ident):
                    return False
                if node.callee.name not in allowlist and cond_names & global_names:
                    return False
    return True


def matches_plain_form(node: object) -> bool:
    """R3n's before-form: x = x op e with the lvalue repeated on the left."""
    return (
        isinstance(node, Assign)
        and node.op == "="
        and isinstance(node.rhs, Binary)
        and node.rhs.op in COMPOUND_OF_PLAIN
        and node.rhs.lhs == node.lvalue
    )


def matches_const_literal_decl(node: object) -> bool:
    """R4b's before-form: a const scalar declaration initialized by a literal."""
    return (
        isinstance(node, Decl)
        and "const" in node.type.split()
        and not node.dims
        and isinstance(node.init, Literal)
        and node.init.kind in ("int", "char")
    )


def sanitize_literal(text: str) -> str:
    core = "".join(ch for ch in text if ch.isalnum())
    return core or "lit"


def fresh_const_name(literal: Literal, taken: set[str]) -> str:
    base = f"v_{sanitize_literal(literal.text)}"
    k = 0
    while f"{base}{k}" in taken:
        k += 1
    return f"{base}{k}"


def const_decl_for_literal(literal: Literal, name: str) -> Decl:
    if literal.kind == "string":
        return Decl("const char", name, (None,), literal)
    if literal.kind == "char":
        return Decl("const char", name, (), literal)
    return Decl("const int", name, (), literal)


def _is_ones_literal(expr: Expr) -> bool:
    return isinstance(expr, Literal) and expr.kind == "int" and expr.text == "1"


def _stmt_position_exprs(stmt: Stmt) -> list[Expr]:
    """Expression roots whose values are unused: ExprStmt bodies, for steps."""
    out: list[Expr] = []
    if isinstance(stmt, ExprStmt):
        out.append(stmt.expr)
    elif isinstance(stmt, For) and stmt.step is not None:
        out.append(stmt.step)
    return out


def count_unit(unit: SourceUnit) -> tuple[Counter, Counter]:
    """Occurrences of every rule's before-form and after-form in one unit.

    The after-form counts feed the census numerators: for invertible pairs
    they equal the inverse rule's before-form count; for the ++/--/compound
    rules they count the concrete output shape directly.
    """
    before: Counter = Counter()
    after: Counter = Counter()
    for item in unit.items:
        if isinstance(item, FunctionDef):
            _count_block(item.body, before, after)
    return before, after


def _count_block(block: Block, before: Counter, after: Counter) -> None:
    stmts = block.stmts
    i = 0
    while i < len(stmts):
        run = match_negation_run(stmts, i)
        if run is not None:
            before["R2b"] += 1
            after["R2a"] += 1
            for member in stmts[i : i + run[0]]:
                _count_stmt(member, before, after)
            i += run[0]
            continue
        _count_stmt(stmts[i], before, after)
        i += 1


def _count_stmt(stmt: Stmt, before: Counter, after: Counter) -> None:
    for root in _stmt_position_exprs(stmt):
        if isinstance(root, Unary) and root.op in INCDEC_OPS:
            before[INCDEC_TO_RULE[root.op]] += 1
        elif isinstance(root, Assign) and _is_ones_literal(root.rhs):
            if root.op == "+=":
                after["R3a"] += 1
                after["R3b"] += 1
            elif root.op == "-=":
                after["R3c"] += 1
                after["R3d"] += 1
    if isinstance(stmt, Block):
        _count_block(stmt, before, after)
    elif isinstance(stmt, For):
        before["R1a"] += 1
        after["R1b"] += 1
        if isinstance(stmt.init, Decl):
            for dim in stmt.init.dims:
                if dim is not None:
                    _count_expr(dim, before, after, hoistable=False)
            if stmt.init.init is not None:
                _count_expr(stmt.init.init, before, after, hoistable=False)
        elif isinstance(stmt.init, ExprStmt):
            if isinstance(stmt.init.expr, Unary) and stmt.init.expr.op in INCDEC_OPS:
                before[INCDEC_TO_RULE[stmt.init.expr.op]] += 1
            _count_expr(stmt.init.expr, before, after, hoistable=False)
        if stmt.cond is not None:
            _count_expr(stmt.cond, before, after, hoistable=False)
        if stmt.step is not None:
            _count_expr(stmt.step, before, after, hoistable=False)
        _count_stmt(stmt.body, before, after)
    elif isinstance(stmt, While):
        before["R1b"] += 1
        after["R1a"] += 1
        _count_expr(stmt.cond, before, after)
        _count_stmt(stmt.body, before, after)
    elif isinstance(stmt, DoWhile):
        _count_stmt(stmt.body, before, after)
        _count_expr(stmt.cond, before, after)
    elif isinstance(stmt, If):
        if matches_branch_chain(stmt):
            before["R2a"] += 1
            after["R2b"] += 1
        for cond, body in stmt.branches:
            _count_expr(cond, before, after)
            _count_stmt(body, before, after)
        if stmt.else_body is not None:
            _count_stmt(stmt.else_body, before, after)
    elif isinstance(stmt, ExprStmt):
        _count_expr(stmt.expr, before, after)
    elif isinstance(stmt, Decl):
        for dim in stmt.dims:
            if dim is not None:
                _count_expr(dim, before, after, hoistable=False)
        if matches_const_literal_decl(stmt):
            before["R4b"] += 1
            after["R4a"] += 1
        elif stmt.init is not None:
            literal_const_init = "const" in stmt.type.split() and isinstance(
                stmt.init, Literal
            )
            _count_expr(stmt.init, before, after, hoistable=not literal_const_init)
    elif isinstance(stmt, Return):
        if stmt.expr is not None:
            _count_expr(stmt.expr, before, after)


def _count_expr(
    expr: Expr, before: Counter, after: Counter, hoistable: bool = True
) -> None:
    if isinstance(expr, Literal):
        if hoistable and expr.kind in HOISTABLE_LITERAL_KINDS:
            before["R4a"] += 1
            after["R4b"] += 1
        return
    if isinstance(expr, Assign):
        if expr.op in COMPOUND_TO_RULE:
            before[COMPOUND_TO_RULE[expr.op]] += 1
            after["R3n"] += 1
        elif matches_plain_form(expr):
            before["R3n"] += 1
            after[COMPOUND_TO_RULE[COMPOUND_OF_PLAIN[expr.rhs.op]]] += 1
        _count_expr(expr.lvalue, before, after, hoistable)
        _count_expr(expr.rhs, before, after, hoistable)
        return
    if isinstance(expr, Unary):
        _count_expr(expr.operand, before, after, hoistable)
        return
    if isinstance(expr, Binary):
        _count_expr(expr.lhs, before, after, hoistable)
        _count_expr(expr.rhs, before, after, hoistable)
        return
    if isinstance(expr, Call):
        _count_expr(expr.callee, before, after, hoistable)
        for arg in expr.args:
            _count_expr(arg, before, after, hoistable)
        return
    if isinstance(expr, Index):
        _count_expr(expr.base, before, after, hoistable)
        _count_expr(expr.index, before, after, hoistable)
        return
    # Ident and OpaqueExpr carry no occurrences.


def has_same_level_continue(body: Stmt) -> bool:
    """True when body contains a continue binding to this loop level."""
    if isinstance(body, Continue):
        return True
    if isinstance(body, (For, While, DoWhile)):
        return False  # deeper loop captures its own continue
    if isinstance(body, Block):
        return any(has_same_level_continue(s) for s in body.stmts)
    if isinstance(body, If):
        for _, branch_body in body.branches:
            if has_same_level_continue(branch_body):
                return True
        return body.else_body is not None and has_same_level_continue(body.else_body)
    if isinstance(body, OpaqueStmt):
        # Unparsed region: a raw continue token may lurk inside.
        return any(t.kind == "keyword" and t.text == "continue" for t in body.tokens)
    return False


def stmt_mentions_name(stmt: Stmt, name: str) -> bool:
    """Whether name occurs in stmt as a use, declaration, or opaque token."""
    for node in walk(stmt):
        if isinstance(node, Ident) and node.name == name:
            return True
        if isinstance(node, Decl) and node.name == name:
            return True
        if isinstance(node, (OpaqueStmt, OpaqueExpr)):
            if any(t.kind == "identifier" and t.text == name for t in node.tokens):
                return True
    return False


