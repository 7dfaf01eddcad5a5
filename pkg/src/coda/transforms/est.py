"""Structure transformation engine guided by a reference census.

The census counts, for every rule, how often its before-form and
after-form occur across the reference inputs; a rule is then applied to
each matching occurrence in the target with probability
after/(before+after).  The engine builds M variants with independent
seeded draws and returns the one whose identifier-masked embedding is
closest (mean cosine) to the references.

Within one variant each node is rewritten at most once: nodes created by a
rewrite are never dispatched again, which prevents a rule and its inverse
from flip-flopping.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from ..embedding import embed_snippet, mean_cosine
from ..errors import ParseError
from ..minicode.identifiers import all_identifier_texts, masked_token_texts
from ..minicode.nodes import (
    Assign,
    Binary,
    Block,
    Call,
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
    OpaqueStmt,
    Return,
    SourceUnit,
    Stmt,
    Unary,
    While,
    make_unit,
    walk,
)
from ..minicode.parser import parse
from ..minicode.printer import print_source
from ..seeding import derive_seed
from . import rules as R

DEFAULT_VARIANT_COUNT = 64


@dataclass(frozen=True)
class StructureCensus:
    """Per-rule (before-form, after-form) occurrence counts."""

    counts: Mapping[str, tuple[int, int]]

    def entry(self, rule_id: str) -> tuple[int, int]:
        return self.counts.get(rule_id, (0, 0))


def application_probability(entry: tuple[int, int]) -> float:
    """after/(before+after); zero when the form was never seen at all."""
    n_b, n_a = entry
    total = n_b + n_a
    return n_a / total if total else 0.0


def census_units(units: Iterable[SourceUnit]) -> StructureCensus:
    before: Counter = Counter()
    after: Counter = Counter()
    for unit in units:
        b, a = R.count_unit(unit)
        before.update(b)
        after.update(a)
    return StructureCensus(
        {rid: (before.get(rid, 0), after.get(rid, 0)) for rid in R.RULE_IDS}
    )


def census(reference_codes: Iterable[str]) -> StructureCensus:
    """Census over reference source strings; unparseable ones contribute zero."""
    units = []
    for code in reference_codes:
        try:
            units.append(parse(code))
        except ParseError:
            continue
    return census_units(units)


def uniform_census() -> StructureCensus:
    """Census giving every rule probability one half (guidance ablated)."""
    return StructureCensus({rid: (1, 1) for rid in R.RULE_IDS})


@dataclass(frozen=True)
class EstOutcome:
    unit: SourceUnit
    applied_rules: tuple[str, ...]
    variant_index: int
    similarity: float


def generate_variant(
    unit: SourceUnit,
    census_data: StructureCensus,
    rng: random.Random,
    enabled: frozenset[str] | None = None,
) -> tuple[SourceUnit, tuple[str, ...]]:
    """One probabilistic rewrite pass over the whole unit."""
    probs = {}
    for rid in R.RULE_IDS:
        if enabled is not None and rid not in enabled:
            continue
        p = application_probability(census_data.entry(rid))
        if p > 0.0:
            probs[rid] = p
    global_names = frozenset(
        item.decl.name for item in unit.items if isinstance(item, GlobalDecl)
    )
    builder = _VariantBuilder(probs, rng, all_identifier_texts(unit), global_names)
    items = []
    for item in unit.items:
        if isinstance(item, FunctionDef) and probs:
            items.append(
                FunctionDef(
                    item.return_type,
                    item.name,
                    item.params,
                    builder.rebuild_block(item.body),
                )
            )
        else:
            items.append(item)
    return make_unit(items), tuple(builder.applied)


def apply_est_detailed(
    target: SourceUnit,
    census_data: StructureCensus,
    variant_count: int,
    seed: int,
    reference_codes: Sequence[str],
    provider,
    enabled: frozenset[str] | None = None,
) -> EstOutcome:
    """Generate variants and keep the one most similar to the references.

    Similarity is the mean cosine between identifier-masked snippet
    embeddings; ties go to the lowest variant index.
    """
    reference_vectors = [
        embed_snippet(masked_token_texts(code), provider) for code in reference_codes
    ]
    best: EstOutcome | None = None
    for index in range(variant_count):
        rng = random.Random(derive_seed(seed, index))
        variant, applied = generate_variant(target, census_data, rng, enabled)
        vector = embed_snippet(masked_token_texts(print_source(variant)), provider)
        similarity = mean_cosine(vector, reference_vectors)
        if best is None or similarity > best.similarity:
            best = EstOutcome(variant, applied, index, similarity)
    assert best is not None  # variant_count >= 1
    return best


def apply_est(
    target: SourceUnit,
    census_data: StructureCensus,
    variant_count: int,
    seed: int,
    reference_codes: Sequence[str],
    provider,
) -> SourceUnit:
    return apply_est_detailed(
        target, census_data, variant_count, seed, reference_codes, provider
    ).unit


class _VariantBuilder:
    """Single-pass rewriter for one variant.

    Rebuilds statements and expressions bottom-up, drawing per occurrence.
    Literals substituted by const inlining are marked so constant hoisting
    never re-captures them in the same pass; hoisted declarations collect in
    a per-block sink and land at the block start.
    """

    def __init__(
        self,
        probs: dict[str, float],
        rng: random.Random,
        taken_names: set[str],
        global_names: frozenset[str],
    ):
        self.probs = probs
        self.rng = rng
        self.taken_names = set(taken_names)
        self.global_names = global_names
        self.applied: list[str] = []
        self._fresh: set[int] = set()
        self._subs: list[dict[str, Literal]] = []
        self._sinks: list[list[Decl]] = []

    def _draw(self, rule_id: str) -> bool:
        p = self.probs.get(rule_id, 0.0)
        if p <= 0.0:
            return False
        return self.rng.random() < p

    def _mark(self, node):
        self._fresh.add(id(node))
        return node

    def _lookup_sub(self, name: str) -> Literal | None:
        for scope in reversed(self._subs):
            if name in scope:
                return scope[name]
        return None

    # -- statements ------------------------------------------------------

    def rebuild_block(self, block: Block) -> Block:
        self._subs.append({})
        self._sinks.append([])
        out: list[Stmt] = []
        stmts = block.stmts
        i = 0
        while i < len(stmts):
            run = R.match_negation_run(stmts, i)
            if run is not None and self._merge_safe(run[1]) and self._draw("R2b"):
                out.append(self._rebuild_merged_chain(run[1]))
                self.applied.append("R2b")
                i += run[0]
                continue
            out.extend(self.rebuild_stmt(stmts[i], stmts, i))
            i += 1
        hoisted = self._sinks.pop()
        self._subs.pop()
        return Block(tuple(hoisted) + tuple(out))

    def _merge_safe(self, merged: If) -> bool:
        conditions = [cond for cond, _ in merged.branches]
        bodies = [body for _, body in merged.branches]
        if merged.else_body is not None:
            bodies.append(merged.else_body)
        return R.branch_rewrite_safe(conditions, bodies, self.global_names)

    def _rebuild_merged_chain(self, merged: If) -> If:
        branches = tuple(
            (self.rebuild_expr(cond), self._rebuild_body(body))
            for cond, body in merged.branches
        )
        else_body = (
            self._rebuild_body(merged.else_body)
            if merged.else_body is not None
            else None
        )
        return If(branches, else_body)

    def _rebuild_body(self, stmt: Stmt) -> Stmt:
        """Rebuild a single-statement position, wrapping splits in a block."""
        rebuilt = self.rebuild_stmt(stmt, (), 0)
        if len(rebuilt) == 1:
            return rebuilt[0]
        return Block(tuple(rebuilt))

    def rebuild_stmt(
        self, stmt: Stmt, siblings: Sequence[Stmt], index: int
    ) -> list[Stmt]:
        if isinstance(stmt, Block):
            return [self.rebuild_block(stmt)]
        if isinstance(stmt, For):
            return self._rebuild_for(stmt, siblings, index)
        if isinstance(stmt, While):
            cond = self.rebuild_expr(stmt.cond)
            body = self._rebuild_body(stmt.body)
            if self._draw("R1b"):
                self.applied.append("R1b")
                return [For(None, cond, None, body)]
            return [While(cond, body)]
        if isinstance(stmt, DoWhile):
            return [DoWhile(self._rebuild_body(stmt.body), self.rebuild_expr(stmt.cond))]
        if isinstance(stmt, If):
            return self._rebuild_if(stmt)
        if isinstance(stmt, ExprStmt):
            return [self._rebuild_expr_stmt(stmt)]
        if isinstance(stmt, Decl):
            return self._rebuild_decl(stmt, siblings, index)
        if isinstance(stmt, Return):
            if stmt.expr is None:
                return [stmt]
            return [Return(self.rebuild_expr(stmt.expr))]
        return [stmt]  # break/continue/opaque pass through

    def _rebuild_for(
        self, stmt: For, siblings: Sequence[Stmt], index: int
    ) -> list[Stmt]:
        init = self._rebuild_for_init(stmt.init)
        cond = (
            self.rebuild_expr(stmt.cond, hoistable=False)
            if stmt.cond is not None
            else None
        )
        step = (
            self._rebuild_unused_expr(stmt.step, hoistable=False)
            if stmt.step is not None
            else None
        )
        body = self._rebuild_body(stmt.body)
        if self._for_to_while_safe(stmt, siblings, index) and self._draw("R1a"):
            self.applied.append("R1a")
            loop_cond = cond if cond is not None else Literal("int", "1")
            if step is not None:
                step_stmt = ExprStmt(step)
                if isinstance(body, Block):
                    body = Block(body.stmts + (step_stmt,))
                else:
                    body = Block((body, step_stmt))
            loop = While(loop_cond, body)
            return [init, loop] if init is not None else [loop]
        return [For(init, cond, step, body)]

    def _rebuild_for_init(self, init: Stmt | None) -> Stmt | None:
        if init is None:
            return None
        if isinstance(init, Decl):
            dims = tuple(
                d if d is None else self.rebuild_expr(d, hoistable=False)
                for d in init.dims
            )
            value = (
                self.rebuild_expr(init.init, hoistable=False)
                if init.init is not None
                else None
            )
            return Decl(init.type, init.name, dims, value)
        if isinstance(init, ExprStmt):
            return ExprStmt(self._rebuild_unused_expr(init.expr, hoistable=False))
        return init

    def _for_to_while_safe(
        self, stmt: For, siblings: Sequence[Stmt], index: int
    ) -> bool:
        # A same-level continue would bypass the appended step.
        if stmt.step is not None and R.has_same_level_continue(stmt.body):
            return False
        # Hoisting a header declaration widens its scope; the name must not
        # already mean something else in the enclosing block.
        if isinstance(stmt.init, Decl):
            for j, sibling in enumerate(siblings):
                if j != index and R.stmt_mentions_name(sibling, stmt.init.name):
                    return False
        return True

    def _rebuild_if(self, stmt: If) -> list[Stmt]:
        branches = tuple(
            (self.rebuild_expr(cond), self._rebuild_body(body))
            for cond, body in stmt.branches
        )
        else_body = (
            self._rebuild_body(stmt.else_body) if stmt.else_body is not None else None
        )
        rebuilt = If(branches, else_body)
        if R.matches_branch_chain(rebuilt) and self._merge_safe(rebuilt):
            if self._draw("R2a"):
                self.applied.append("R2a")
                return R.split_branch_chain(rebuilt)
        return [rebuilt]

    def _rebuild_expr_stmt(self, stmt: ExprStmt) -> ExprStmt:
        return ExprStmt(self._rebuild_unused_expr(stmt.expr, hoistable=True))

    def _rebuild_unused_expr(self, expr: Expr, hoistable: bool) -> Expr:
        """An expression root whose value is discarded: ++/-- may expand."""
        if isinstance(expr, Unary) and expr.op in R.INCDEC_OPS:
            operand = self.rebuild_expr(expr.operand, hoistable=hoistable)
            rule_id = R.INCDEC_TO_RULE[expr.op]
            if R.is_simple_lvalue(operand) and self._draw(rule_id):
                self.applied.append(rule_id)
                return Assign(R.INCDEC_COMPOUND[expr.op], operand, Literal("int", "1"))
            return Unary(expr.op, operand)
        return self.rebuild_expr(expr, hoistable=hoistable)

    def _rebuild_decl(
        self, stmt: Decl, siblings: Sequence[Stmt], index: int
    ) -> list[Stmt]:
        if R.matches_const_literal_decl(stmt):
            if self._inline_safe(stmt, siblings, index) and self._draw("R4b"):
                self.applied.append("R4b")
                self._subs[-1][stmt.name] = self._mark(stmt.init)
                return []
            # The literal initializer of a const declaration stays put.
            return [stmt]
        dims = tuple(
            d if d is None else self.rebuild_expr(d, hoistable=False)
            for d in stmt.dims
        )
        value = None
        if stmt.init is not None:
            pinned = "const" in stmt.type.split() and isinstance(stmt.init, Literal)
            value = self.rebuild_expr(stmt.init, hoistable=not pinned)
        return [Decl(stmt.type, stmt.name, dims, value)]

    def _inline_safe(
        self, stmt: Decl, siblings: Sequence[Stmt], index: int
    ) -> bool:
        """Inlining is safe when every occurrence of the name is a plain use
        in the remainder of this block and nothing ever writes or calls it."""
        name = stmt.name
        uses_after = 0
        for j, sibling in enumerate(siblings):
            if j == index:
                continue
            mentioned = R.stmt_mentions_name(sibling, name)
            if mentioned and j < index:
                return False
            if mentioned:
                for node in walk(sibling):
                    if isinstance(node, Decl) and node.name == name:
                        return False
                    if isinstance(node, Assign):
                        if R.lvalue_root_name(node.lvalue) == name:
                            return False
                    if isinstance(node, Unary) and node.op in R.INCDEC_OPS:
                        if R.lvalue_root_name(node.operand) == name:
                            return False
                    if isinstance(node, Call):
                        if isinstance(node.callee, Ident) and node.callee.name == name:
                            return False
                    if isinstance(node, (OpaqueStmt, OpaqueExpr)):
                        if any(
                            t.kind == "identifier" and t.text == name
                            for t in node.tokens
                        ):
                            return False
                    if isinstance(node, Ident) and node.name == name:
                        uses_after += 1
        return uses_after >= 1

    # -- expressions -----------------------------------------------------

    def rebuild_expr(self, expr: Expr, hoistable: bool = True) -> Expr:
        if isinstance(expr, Ident):
            sub = self._lookup_sub(expr.name)
            return sub if sub is not None else expr
        if isinstance(expr, Literal):
            if (
                hoistable
                and expr.kind in R.HOISTABLE_LITERAL_KINDS
                and id(expr) not in self._fresh
                and self._sinks
                and self._draw("R4a")
            ):
                self.applied.append("R4a")
                name = R.fresh_const_name(expr, self.taken_names)
                self.taken_names.add(name)
                self._sinks[-1].append(R.const_decl_for_literal(expr, name))
                return Ident(name)
            return expr
        if isinstance(expr, Unary):
            return Unary(expr.op, self.rebuild_expr(expr.operand, hoistable))
        if isinstance(expr, Binary):
            return Binary(
                expr.op,
                self.rebuild_expr(expr.lhs, hoistable),
                self.rebuild_expr(expr.rhs, hoistable),
            )
        if isinstance(expr, Assign):
            return self._rebuild_assign(expr, hoistable)
        if isinstance(expr, Call):
            return Call(
                self.rebuild_expr(expr.callee, hoistable),
                tuple(self.rebuild_expr(a, hoistable) for a in expr.args),
            )
        if isinstance(expr, Index):
            return Index(
                self.rebuild_expr(expr.base, hoistable),
                self.rebuild_expr(expr.index, hoistable),
            )
        return expr  # opaque

    def _rebuild_assign(self, expr: Assign, hoistable: bool) -> Expr:
        lvalue = self.rebuild_expr(expr.lvalue, hoistable)
        rhs = self.rebuild_expr(expr.rhs, hoistable)
        rebuilt = Assign(expr.op, lvalue, rhs)
        if expr.op in R.COMPOUND_TO_RULE and R.is_simple_lvalue(lvalue):
            rule_id = R.COMPOUND_TO_RULE[expr.op]
            if self._draw(rule_id):
                self.applied.append(rule_id)
                plain = R.PLAIN_OF_COMPOUND[expr.op]
                return Assign("=", lvalue, Binary(plain, lvalue, rhs))
        elif R.matches_plain_form(rebuilt) and R.is_simple_lvalue(lvalue):
            if self._draw("R3n"):
                self.applied.append("R3n")
                compound = R.COMPOUND_OF_PLAIN[rebuilt.rhs.op]
                return Assign(compound, lvalue, rebuilt.rhs.rhs)
        return rebuilt
