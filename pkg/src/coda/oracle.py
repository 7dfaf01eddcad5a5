"""Deterministic mini interpreter used as the semantics oracle.

Integer-only semantics: every arithmetic result wraps to a 64-bit two's
complement value, division truncates toward zero like C, and shift counts
are masked to 0..63 so shifts are total.  Programs interact with the harness
through two intrinsics: read() pops the next input value and emit(v) appends
("out", v) to the output log.

Execution enters main() with no arguments; globals initialize first, in
order.  A statement execution and each loop-condition evaluation cost one
step; exceeding the step limit produces the step-limit-exceeded status.

Programs containing Opaque nodes, float or string literals, pointers beyond
what the parser structures, or calls to unknown functions are rejected with
UnsupportedConstruct before execution starts.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Sequence

from .errors import UnsupportedConstruct
from .minicode.nodes import (
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
    Return,
    SourceUnit,
    Stmt,
    Unary,
    While,
    walk,
)

COMPLETED = "completed"
STEP_LIMIT_EXCEEDED = "step-limit-exceeded"
RUNTIME_ERROR = "runtime-error"

DEFAULT_STEP_LIMIT = 100_000
DEFAULT_TRIALS = 30
DEFAULT_INPUT_LENGTH = 8
DEFAULT_MAGNITUDE = 100

_U64 = 1 << 64
_S63 = 1 << 63


@dataclass(frozen=True)
class ExecTrace:
    """Observable outcome of one execution."""

    status: str
    return_value: int | None
    output_log: tuple[tuple[str, int], ...]
    step_count: int
    error_kind: str | None = None

    def comparison_key(self) -> tuple:
        """Fields that determine behavioral equality (stepCount excluded)."""
        return (self.status, self.error_kind, self.return_value, self.output_log)


@dataclass(frozen=True)
class Divergence:
    inputs: tuple[int, ...]
    left: ExecTrace
    right: ExecTrace


@dataclass(frozen=True)
class EquivalenceVerdict:
    equivalent: bool
    trials: int
    divergence: Divergence | None = None


class _RuntimeFault(Exception):
    def __init__(self, kind: str):
        super().__init__(kind)
        self.kind = kind


class _StepLimit(Exception):
    pass


class _Run:
    __slots__ = ("inputs", "input_pos", "out", "steps", "limit")

    def __init__(self, inputs: Sequence[int], limit: int):
        self.inputs = list(inputs)
        self.input_pos = 0
        self.out: list[tuple[str, int]] = []
        self.steps = 0
        self.limit = limit

    def tick(self) -> None:
        self.steps += 1
        if self.steps > self.limit:
            raise _StepLimit


def _wrap(v: int) -> int:
    v &= _U64 - 1
    return v - _U64 if v >= _S63 else v


def _div(a: int, b: int) -> int:
    if b == 0:
        raise _RuntimeFault("division-by-zero")
    q = -(-a // b) if (a < 0) != (b < 0) else a // b
    return _wrap(q)


def _mod(a: int, b: int) -> int:
    if b == 0:
        raise _RuntimeFault("division-by-zero")
    q = -(-a // b) if (a < 0) != (b < 0) else a // b
    return _wrap(a - q * b)


_BINARY_OPS: dict[str, Callable[[int, int], int]] = {
    "+": lambda a, b: _wrap(a + b),
    "-": lambda a, b: _wrap(a - b),
    "*": lambda a, b: _wrap(a * b),
    "/": _div,
    "%": _mod,
    "<<": lambda a, b: _wrap(a << (b & 63)),
    ">>": lambda a, b: _wrap(a >> (b & 63)),
    "&": lambda a, b: _wrap(a & b),
    "|": lambda a, b: _wrap(a | b),
    "^": lambda a, b: _wrap(a ^ b),
    "<": lambda a, b: 1 if a < b else 0,
    "<=": lambda a, b: 1 if a <= b else 0,
    ">": lambda a, b: 1 if a > b else 0,
    ">=": lambda a, b: 1 if a >= b else 0,
    "==": lambda a, b: 1 if a == b else 0,
    "!=": lambda a, b: 1 if a != b else 0,
}

_COMPOUND_BASE = {
    "+=": "+", "-=": "-", "*=": "*", "/=": "/", "%=": "%",
    "<<=": "<<", ">>=": ">>", "&=": "&", "|=": "|", "^=": "^",
}

# Statement signals.
_NORMAL = 0
_BREAK = 1
_CONTINUE = 2
_RETURN = 3


def _char_value(text: str) -> int:
    body = text[1:-1]
    if body.startswith("\\"):
        escapes = {"n": 10, "t": 9, "r": 13, "0": 0, "\\": 92, "'": 39, '"': 34, "b": 8}
        if len(body) >= 2 and body[1] in escapes:
            return escapes[body[1]]
        if len(body) >= 2 and body[1] == "x":
            try:
                return _wrap(int(body[2:], 16))
            except ValueError as exc:
                raise UnsupportedConstruct(f"bad char escape: {text}") from exc
        raise UnsupportedConstruct(f"bad char escape: {text}")
    if len(body) != 1:
        raise UnsupportedConstruct(f"multi-character char literal: {text}")
    return ord(body)


def _int_value(text: str) -> int:
    stripped = text.rstrip("uUlL")
    return _wrap(int(stripped, 0))


class CompiledProgram:
    """A SourceUnit compiled to Python closures, reusable across runs."""

    def __init__(self, unit: SourceUnit):
        _reject_unsupported(unit)
        self._functions: dict[str, FunctionDef] = {}
        for item in unit.items:
            if isinstance(item, FunctionDef):
                if item.name in self._functions:
                    raise UnsupportedConstruct(f"duplicate function: {item.name}")
                self._functions[item.name] = item
        if "main" not in self._functions:
            raise UnsupportedConstruct("no main function")
        if self._functions["main"].params:
            raise UnsupportedConstruct("main must take no parameters")
        self._globals = [
            item.decl for item in unit.items if isinstance(item, GlobalDecl)
        ]
        self._compiled: dict[str, Callable] = {}
        self._global_inits = [self._compile_decl(d) for d in self._globals]
        for name, fn in self._functions.items():
            self._compiled[name] = self._compile_function(fn)

    # Public ------------------------------------------------------------

    def run(self, inputs: Sequence[int], step_limit: int = DEFAULT_STEP_LIMIT) -> ExecTrace:
        run = _Run(inputs, step_limit)
        global_scope: dict[str, object] = {}
        scopes: list[dict[str, object]] = [global_scope]
        try:
            for init in self._global_inits:
                run.tick()
                init(run, scopes)
            value = self._call_function("main", [], run, global_scope)
            return ExecTrace(COMPLETED, value, tuple(run.out), run.steps)
        except _StepLimit:
            return ExecTrace(STEP_LIMIT_EXCEEDED, None, tuple(run.out), step_limit)
        except _RuntimeFault as fault:
            return ExecTrace(RUNTIME_ERROR, None, tuple(run.out), run.steps, fault.kind)

    # Function machinery --------------------------------------------------

    def _call_function(self, name: str, args: list[int], run: _Run, global_scope: dict) -> int:
        fn = self._functions[name]
        if len(args) != len(fn.params):
            raise _RuntimeFault("bad-argument-count")
        local: dict[str, object] = {}
        for param, value in zip(fn.params, args):
            if param.name is not None:
                local[param.name] = value
        scopes = [global_scope, local]
        body = self._compiled[name]
        signal, value = body(run, scopes)
        if signal == _RETURN and value is not None:
            return value
        return 0

    def _compile_function(self, fn: FunctionDef) -> Callable:
        return self._compile_block(fn.body)

    # Statement compilation ----------------------------------------------

    def _compile_block(self, block: Block) -> Callable:
        stmts = [self._compile_stmt(s) for s in block.stmts]

        def run_block(run: _Run, scopes: list) -> tuple[int, int | None]:
            scopes.append({})
            try:
                for stmt in stmts:
                    signal, value = stmt(run, scopes)
                    if signal != _NORMAL:
                        return signal, value
                return _NORMAL, None
            finally:
                scopes.pop()

        return run_block

    def _compile_stmt(self, stmt: Stmt) -> Callable:
        if isinstance(stmt, Block):
            inner = self._compile_block(stmt)

            def do_block(run, scopes):
                run.tick()
                return inner(run, scopes)

            return do_block
        if isinstance(stmt, ExprStmt):
            expr = self._compile_expr(stmt.expr)

            def do_expr(run, scopes):
                run.tick()
                expr(run, scopes)
                return _NORMAL, None

            return do_expr
        if isinstance(stmt, Decl):
            decl = self._compile_decl(stmt)

            def do_decl(run, scopes):
                run.tick()
                decl(run, scopes)
                return _NORMAL, None

            return do_decl
        if isinstance(stmt, Return):
            if stmt.expr is None:
                def do_return_void(run, scopes):
                    run.tick()
                    return _RETURN, 0

                return do_return_void
            expr = self._compile_expr(stmt.expr)

            def do_return(run, scopes):
                run.tick()
                return _RETURN, expr(run, scopes)

            return do_return
        if isinstance(stmt, Break):
            def do_break(run, scopes):
                run.tick()
                return _BREAK, None

            return do_break
        if isinstance(stmt, Continue):
            def do_continue(run, scopes):
                run.tick()
                return _CONTINUE, None

            return do_continue
        if isinstance(stmt, If):
            branches = [
                (self._compile_expr(cond), self._compile_stmt(body))
                for cond, body in stmt.branches
            ]
            else_body = None if stmt.else_body is None else self._compile_stmt(stmt.else_body)

            def do_if(run, scopes):
                run.tick()
                for cond, body in branches:
                    if cond(run, scopes) != 0:
                        return body(run, scopes)
                if else_body is not None:
                    return else_body(run, scopes)
                return _NORMAL, None

            return do_if
        if isinstance(stmt, While):
            cond = self._compile_expr(stmt.cond)
            body = self._compile_stmt(stmt.body)

            def do_while(run, scopes):
                while True:
                    run.tick()
                    if cond(run, scopes) == 0:
                        return _NORMAL, None
                    signal, value = body(run, scopes)
                    if signal == _BREAK:
                        return _NORMAL, None
                    if signal == _RETURN:
                        return signal, value

            return do_while
        if isinstance(stmt, DoWhile):
            cond = self._compile_expr(stmt.cond)
            body = self._compile_stmt(stmt.body)

            def do_dowhile(run, scopes):
                while True:
                    run.tick()
                    signal, value = body(run, scopes)
                    if signal == _BREAK:
                        return _NORMAL, None
                    if signal == _RETURN:
                        return signal, value
                    if cond(run, scopes) == 0:
                        return _NORMAL, None

            return do_dowhile
        if isinstance(stmt, For):
            init = None if stmt.init is None else self._compile_stmt(stmt.init)
            cond = None if stmt.cond is None else self._compile_expr(stmt.cond)
            step = None if stmt.step is None else self._compile_expr(stmt.step)
            body = self._compile_stmt(stmt.body)

            def do_for(run, scopes):
                # The init declaration lives in its own scope.
                scopes.append({})
                try:
                    if init is not None:
                        init(run, scopes)
                    while True:
                        run.tick()
                        if cond is not None and cond(run, scopes) == 0:
                            return _NORMAL, None
                        signal, value = body(run, scopes)
                        if signal == _BREAK:
                            return _NORMAL, None
                        if signal == _RETURN:
                            return signal, value
                        if step is not None:
                            step(run, scopes)
                finally:
                    scopes.pop()

            return do_for
        raise UnsupportedConstruct(f"cannot execute statement: {type(stmt).__name__}")

    def _compile_decl(self, decl: Decl) -> Callable:
        if len(decl.dims) > 1:
            raise UnsupportedConstruct("multi-dimensional arrays")
        if decl.dims:
            dim_expr = decl.dims[0]
            if dim_expr is None:
                raise UnsupportedConstruct("array without size")
            if decl.init is not None:
                raise UnsupportedConstruct("array initializer")
            size = self._compile_expr(dim_expr)
            name = decl.name

            def do_array(run, scopes):
                length = size(run, scopes)
                if length < 0 or length > 1_000_000:
                    raise _RuntimeFault("bad-array-size")
                scopes[-1][name] = [0] * length

            return do_array
        init = None if decl.init is None else self._compile_expr(decl.init)
        name = decl.name

        def do_scalar(run, scopes):
            scopes[-1][name] = 0 if init is None else init(run, scopes)

        return do_scalar

    # Expression compilation ----------------------------------------------

    def _compile_expr(self, expr: Expr) -> Callable:
        if isinstance(expr, Literal):
            if expr.kind == "int":
                value = _int_value(expr.text)
            elif expr.kind == "char":
                value = _char_value(expr.text)
            else:
                raise UnsupportedConstruct(f"{expr.kind} literal")
            return lambda run, scopes: value
        if isinstance(expr, Ident):
            name = expr.name

            def load(run, scopes):
                for scope in reversed(scopes):
                    if name in scope:
                        value = scope[name]
                        if isinstance(value, list):
                            raise _RuntimeFault("array-used-as-value")
                        return value
                raise _RuntimeFault("undefined-variable")

            return load
        if isinstance(expr, Index):
            return self._compile_index_load(expr)
        if isinstance(expr, Unary):
            return self._compile_unary(expr)
        if isinstance(expr, Binary):
            return self._compile_binary(expr)
        if isinstance(expr, Assign):
            return self._compile_assign(expr)
        if isinstance(expr, Call):
            return self._compile_call(expr)
        raise UnsupportedConstruct(f"cannot execute expression: {type(expr).__name__}")

    def _array_and_index(self, expr: Index) -> tuple[str, Callable]:
        if not isinstance(expr.base, Ident):
            raise UnsupportedConstruct("indexing a non-identifier")
        return expr.base.name, self._compile_expr(expr.index)

    @staticmethod
    def _lookup_array(name: str, scopes: list) -> list:
        for scope in reversed(scopes):
            if name in scope:
                value = scope[name]
                if not isinstance(value, list):
                    raise _RuntimeFault("not-an-array")
                return value
        raise _RuntimeFault("undefined-variable")

    def _compile_index_load(self, expr: Index) -> Callable:
        name, index = self._array_and_index(expr)

        def load(run, scopes):
            array = self._lookup_array(name, scopes)
            i = index(run, scopes)
            if i < 0 or i >= len(array):
                raise _RuntimeFault("index-out-of-bounds")
            return array[i]

        return load

    def _compile_store(self, target: Expr) -> tuple[Callable, Callable]:
        """Returns (loader, storer) closures for an lvalue."""
        if isinstance(target, Ident):
            name = target.name

            def load(run, scopes):
                for scope in reversed(scopes):
                    if name in scope:
                        value = scope[name]
                        if isinstance(value, list):
                            raise _RuntimeFault("array-used-as-value")
                        return value
                raise _RuntimeFault("undefined-variable")

            def store(run, scopes, value):
                for scope in reversed(scopes):
                    if name in scope:
                        scope[name] = value
                        return
                raise _RuntimeFault("undefined-variable")

            return load, store
        if isinstance(target, Index):
            name, index = self._array_and_index(target)

            def load_elem(run, scopes):
                array = self._lookup_array(name, scopes)
                i = index(run, scopes)
                if i < 0 or i >= len(array):
                    raise _RuntimeFault("index-out-of-bounds")
                return array[i]

            def store_elem(run, scopes, value):
                array = self._lookup_array(name, scopes)
                i = index(run, scopes)
                if i < 0 or i >= len(array):
                    raise _RuntimeFault("index-out-of-bounds")
                array[i] = value

            return load_elem, store_elem
        raise UnsupportedConstruct("unsupported lvalue")

    def _compile_unary(self, expr: Unary) -> Callable:
        if expr.op in ("pre++", "pre--", "post++", "post--"):
            load, store = self._compile_store(expr.operand)
            delta = 1 if "++" in expr.op else -1
            if expr.op.startswith("pre"):
                def incdec_pre(run, scopes):
                    value = _wrap(load(run, scopes) + delta)
                    store(run, scopes, value)
                    return value

                return incdec_pre

            def incdec_post(run, scopes):
                old = load(run, scopes)
                store(run, scopes, _wrap(old + delta))
                return old

            return incdec_post
        operand = self._compile_expr(expr.operand)
        if expr.op == "!":
            return lambda run, scopes: 1 if operand(run, scopes) == 0 else 0
        if expr.op == "-":
            return lambda run, scopes: _wrap(-operand(run, scopes))
        if expr.op == "~":
            return lambda run, scopes: _wrap(~operand(run, scopes))
        raise UnsupportedConstruct(f"unary operator {expr.op}")

    def _compile_binary(self, expr: Binary) -> Callable:
        if expr.op == "&&":
            lhs = self._compile_expr(expr.lhs)
            rhs = self._compile_expr(expr.rhs)
            return lambda run, scopes: (
                1 if lhs(run, scopes) != 0 and rhs(run, scopes) != 0 else 0
            )
        if expr.op == "||":
            lhs = self._compile_expr(expr.lhs)
            rhs = self._compile_expr(expr.rhs)
            return lambda run, scopes: (
                1 if lhs(run, scopes) != 0 or rhs(run, scopes) != 0 else 0
            )
        op = _BINARY_OPS.get(expr.op)
        if op is None:
            raise UnsupportedConstruct(f"binary operator {expr.op}")
        lhs = self._compile_expr(expr.lhs)
        rhs = self._compile_expr(expr.rhs)
        return lambda run, scopes: op(lhs(run, scopes), rhs(run, scopes))

    def _compile_assign(self, expr: Assign) -> Callable:
        load, store = self._compile_store(expr.lvalue)
        rhs = self._compile_expr(expr.rhs)
        if expr.op == "=":
            def plain(run, scopes):
                value = rhs(run, scopes)
                store(run, scopes, value)
                return value

            return plain
        base = _COMPOUND_BASE.get(expr.op)
        if base is None:
            raise UnsupportedConstruct(f"assignment operator {expr.op}")
        op = _BINARY_OPS[base]

        def compound(run, scopes):
            # Load before evaluating the right side, matching how the plain
            # form "x = x op e" evaluates; keeps the rewrite exact.
            current = load(run, scopes)
            value = op(current, rhs(run, scopes))
            store(run, scopes, value)
            return value

        return compound

    def _compile_call(self, expr: Call) -> Callable:
        if not isinstance(expr.callee, Ident):
            raise UnsupportedConstruct("call through non-identifier")
        name = expr.callee.name
        args = [self._compile_expr(a) for a in expr.args]
        if name == "read":
            if args:
                raise UnsupportedConstruct("read() takes no arguments")

            def do_read(run, scopes):
                if run.input_pos >= len(run.inputs):
                    raise _RuntimeFault("input-exhausted")
                value = run.inputs[run.input_pos]
                run.input_pos += 1
                return _wrap(value)

            return do_read
        if name == "emit":
            if len(args) != 1:
                raise UnsupportedConstruct("emit() takes one argument")
            arg = args[0]

            def do_emit(run, scopes):
                value = arg(run, scopes)
                run.out.append(("out", value))
                return value

            return do_emit
        if name not in self._functions:
            raise UnsupportedConstruct(f"call to unknown function: {name}")

        def do_call(run, scopes):
            run.tick()
            values = [a(run, scopes) for a in args]
            return self._call_function(name, values, run, scopes[0])

        return do_call


def _reject_unsupported(unit: SourceUnit) -> None:
    for node in walk(unit):
        if isinstance(node, (OpaqueSegment, OpaqueStmt, OpaqueExpr)):
            raise UnsupportedConstruct("program contains an opaque region")
        if isinstance(node, Literal) and node.kind in ("float", "string"):
            raise UnsupportedConstruct(f"{node.kind} literal")


def compile_unit(unit: SourceUnit) -> CompiledProgram:
    return CompiledProgram(unit)


def execute(
    unit: SourceUnit,
    inputs: Sequence[int] = (),
    step_limit: int = DEFAULT_STEP_LIMIT,
) -> ExecTrace:
    """Run the unit's main() once and return the trace."""
    return CompiledProgram(unit).run(inputs, step_limit)


def equivalent(
    left: SourceUnit,
    right: SourceUnit,
    trials: int = DEFAULT_TRIALS,
    seed: int = 0,
    input_length: int = DEFAULT_INPUT_LENGTH,
    magnitude: int = DEFAULT_MAGNITUDE,
    step_limit: int = DEFAULT_STEP_LIMIT,
) -> EquivalenceVerdict:
    """Differential random testing over shared seeded inputs.

    Traces agree when status, error kind, return value, and output log all
    match; when both sides exceed the step limit the trial counts as
    agreement regardless of partial output.
    """
    left_prog = CompiledProgram(left)
    right_prog = CompiledProgram(right)
    rng = random.Random(seed)
    for _ in range(trials):
        inputs = tuple(rng.randint(-magnitude, magnitude) for _ in range(input_length))
        trace_l = left_prog.run(inputs, step_limit)
        trace_r = right_prog.run(inputs, step_limit)
        if trace_l.status == STEP_LIMIT_EXCEEDED and trace_r.status == STEP_LIMIT_EXCEEDED:
            continue
        if trace_l.comparison_key() != trace_r.comparison_key():
            return EquivalenceVerdict(False, trials, Divergence(inputs, trace_l, trace_r))
    return EquivalenceVerdict(True, trials)
