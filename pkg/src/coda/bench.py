"""Seeded program generators for benchmarks and rewrite testing.

One statement grammar serves two producers.  generate_program() emits a
single random program inside the interpreter-executable subset (integer
scalars, fixed-size arrays, read()/emit(), bounded loops), optionally
guaranteeing at least one site where a named rewrite rule fires.
generate_benchmark() emits a labeled 4-class corpus whose classes differ
in control-flow profile and identifier vocabulary, which is the signal
the builtin bag-of-tokens victim learns to separate.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from .seeding import derive_seed
from .transforms.rules import COMPOUND_RULES, INCDEC_RULES, RULES_BY_ID

NUM_CLASSES = 4
DEFAULT_TRAIN_PER_CLASS = 160
DEFAULT_TEST_PER_CLASS = 40

_NEUTRAL_VOCAB = ("tmp", "n", "q")
_CLASS_VOCAB = (
    ("sum", "idx", "total", "acc", "step", "span"),
    ("pos", "cur", "limit", "buf", "gap", "seek"),
    ("state", "flag", "mode", "sel", "phase", "gate"),
    ("mask", "bits", "val", "reg", "wide", "pack"),
)
_MIXED_VOCAB = tuple(name for pool in _CLASS_VOCAB for name in pool)

_RELOPS = ("<", "<=", ">", ">=", "==", "!=")
# The nine base operators whose plain form "x = x op e" has a compound twin.
_BASE_OPS = ("+", "-", "*", "/", "%", "<<", ">>", "&", "|")
_CHARS = "abcdefghjkmpswxyz"

_INCDEC_TEXT = {
    "pre++": "++{0};",
    "post++": "{0}++;",
    "pre--": "--{0};",
    "post--": "{0}--;",
}

_MIXED_WEIGHTS = {
    "for": 12, "while": 10, "dowhile": 5, "chain": 8, "splitrun": 4,
    "compound": 13, "plain": 13, "incdec": 9, "emit": 9, "constdecl": 6,
    "arraystore": 6,
}
_CLASS_WEIGHTS = (
    {"for": 30, "while": 2, "dowhile": 2, "chain": 4, "splitrun": 0,
     "compound": 5, "plain": 9, "incdec": 16, "emit": 10, "constdecl": 4,
     "arraystore": 14},
    {"for": 2, "while": 32, "dowhile": 4, "chain": 6, "splitrun": 0,
     "compound": 4, "plain": 26, "incdec": 2, "emit": 12, "constdecl": 10,
     "arraystore": 0},
    {"for": 3, "while": 4, "dowhile": 22, "chain": 24, "splitrun": 4,
     "compound": 8, "plain": 12, "incdec": 6, "emit": 10, "constdecl": 5,
     "arraystore": 0},
    {"for": 0, "while": 0, "dowhile": 0, "chain": 8, "splitrun": 12,
     "compound": 36, "plain": 12, "incdec": 6, "emit": 12, "constdecl": 12,
     "arraystore": 0},
)

_LOOP_KINDS = frozenset({"for", "while", "dowhile"})
_SIMPLE_KINDS = ("plain", "compound", "incdec", "emit", "arraystore")
_SIMPLE_WEIGHTS = (30, 25, 20, 15, 10)


@dataclass(frozen=True)
class _Limits:
    min_stmts: int
    max_stmts: int
    max_loops: int
    max_trip: int
    helper_prob: float


# Rewrite-test programs stay small so differential execution is cheap;
# benchmark programs get a little more room.
_PROGRAM_LIMITS = _Limits(4, 6, 2, 4, 0.3)
_BENCH_LIMITS = _Limits(5, 8, 3, 5, 0.25)

_MAX_READS = 3


class _Builder:
    def __init__(self, rng: random.Random, vocab: tuple[str, ...],
                 weights: dict[str, int], limits: _Limits, use_arrays: bool):
        self.rng = rng
        self.vocab = vocab
        self.weights = weights
        self.limits = limits
        self.use_arrays = use_arrays
        self.lines: list[str] = []
        self.indent = 0
        self.counter = 0
        self.scalars: list[list[str]] = [[]]
        self.consts: list[str] = []
        self.arrays: list[str] = []
        self.protected: set[str] = set()
        self.loops_made = 0
        self.loop_depth = 0
        self.reads = 0
        self.helper: str | None = None
        self.helper_arity = 2
        self.in_helper = False

    # -- text emission ---------------------------------------------------

    def add(self, text: str) -> None:
        self.lines.append("    " * self.indent + text)

    def fresh(self) -> str:
        self.counter += 1
        return f"{self.rng.choice(self.vocab)}{self.counter}"

    # -- name pools --------------------------------------------------------

    def readable(self) -> list[str]:
        names = [name for scope in self.scalars for name in scope]
        names.extend(self.consts)
        return names

    def writable(self) -> list[str]:
        return [name for scope in self.scalars for name in scope
                if name not in self.protected]

    # -- expressions -------------------------------------------------------

    def atom(self, no_call: bool = False) -> str:
        names = self.readable()
        roll = self.rng.random()
        if roll < 0.55 and names:
            return self.rng.choice(names)
        if roll < 0.62 and self.arrays and not self.in_helper:
            array = self.rng.choice(self.arrays)
            return f"{array}[({self.expr(2, no_call)}) & 7]"
        if roll < 0.67 and self.helper and not self.in_helper and not no_call:
            args = ", ".join(self.expr(2, no_call) for _ in range(self.helper_arity))
            return f"{self.helper}({args})"
        if roll < 0.72:
            return f"'{self.rng.choice(_CHARS)}'"
        return str(self.rng.randint(-9, 60))

    def expr(self, depth: int = 0, no_call: bool = False) -> str:
        if depth >= 2 or self.rng.random() < 0.4:
            return self.atom(no_call)
        op = self.rng.choice(("+", "-", "*", "&", "|", "^", "<<", "/", "%"))
        left = self.expr(depth + 1, no_call)
        if op == "<<":
            return f"({left} << {self.rng.randint(1, 3)})"
        if op in ("/", "%"):
            # Denominator stays in [2, 11]: never zero under any input.
            return f"({left} {op} ({self.expr(depth + 1, no_call)} % 5 + 7))"
        return f"({left} {op} {self.expr(depth + 1, no_call)})"

    def condition(self, exclude: str | None = None) -> str:
        names = [n for n in self.readable() if n != exclude]
        left = self.rng.choice(names) if names else str(self.rng.randint(0, 9))
        if names and self.rng.random() < 0.35:
            right = self.rng.choice(names)
        else:
            right = str(self.rng.randint(-5, 40))
        return f"{left} {self.rng.choice(_RELOPS)} {right}"

    def _guarded_rhs(self, op: str, no_call: bool = False) -> str:
        if op in ("/", "%"):
            if self.rng.random() < 0.5:
                return str(self.rng.randint(2, 9))
            return f"({self.expr(1, no_call)} % 5 + 7)"
        if op in ("<<", ">>"):
            return str(self.rng.randint(1, 3))
        return self.expr(1, no_call)

    # -- statements --------------------------------------------------------

    def stmt_any(self) -> None:
        pairs = [(kind, weight) for kind, weight in self.weights.items()
                 if weight > 0 and self._allowed(kind)]
        kinds, weights = zip(*pairs)
        kind = self.rng.choices(kinds, weights)[0]
        getattr(self, f"stmt_{kind}")()

    def _allowed(self, kind: str) -> bool:
        if kind in _LOOP_KINDS:
            return self.loops_made < self.limits.max_loops and self.loop_depth < 2
        if kind == "arraystore":
            return bool(self.arrays) and not self.in_helper
        if kind == "emit":
            return not self.in_helper
        if kind in ("plain", "compound", "incdec"):
            return bool(self.writable())
        if kind in ("chain", "splitrun"):
            return bool(self.writable())
        return True

    def stmt_simple(self) -> None:
        pairs = [(kind, weight) for kind, weight in zip(_SIMPLE_KINDS, _SIMPLE_WEIGHTS)
                 if self._allowed(kind)]
        kinds, weights = zip(*pairs)
        kind = self.rng.choices(kinds, weights)[0]
        getattr(self, f"stmt_{kind}")()

    def _body(self, count: int) -> None:
        for _ in range(count):
            self.stmt_simple()

    def stmt_for(self, clean: bool = False) -> None:
        v = self.fresh()
        trip = self.rng.randint(2, self.limits.max_trip)
        step = self.rng.choice((f"{v}++", f"++{v}", f"{v} += 1", f"{v} = {v} + 1"))
        self.loops_made += 1
        self.add(f"for (int {v} = 0; {v} < {trip}; {step}) {{")
        self.indent += 1
        self.loop_depth += 1
        self.scalars.append([v])
        self.protected.add(v)
        if not clean and self.rng.random() < 0.15:
            self.add(f"if ({v} == 1) {{")
            self.indent += 1
            self.add("continue;")
            self.indent -= 1
            self.add("}")
        count = self.rng.randint(2, 3)
        nest = (not clean and self.loop_depth == 1
                and self.loops_made < self.limits.max_loops
                and not self.in_helper and self.rng.random() < 0.3)
        if nest:
            count -= 1
        self._body(count)
        if nest:
            if self.rng.random() < 0.5:
                self.stmt_for()
            else:
                self.stmt_while()
        self.protected.discard(v)
        self.scalars.pop()
        self.loop_depth -= 1
        self.indent -= 1
        self.add("}")

    def stmt_while(self) -> None:
        w = self.fresh()
        trip = self.rng.randint(2, self.limits.max_trip)
        self.scalars[-1].append(w)
        self.add(f"int {w} = 0;")
        self.loops_made += 1
        self.add(f"while ({w} < {trip}) {{")
        self.indent += 1
        self.loop_depth += 1
        self.scalars.append([])
        self.protected.add(w)
        self._body(self.rng.randint(2, 3))
        self.protected.discard(w)
        self.add(self.rng.choice((f"{w} = {w} + 1;", f"{w} += 1;", f"{w}++;")))
        self.scalars.pop()
        self.loop_depth -= 1
        self.indent -= 1
        self.add("}")

    def stmt_dowhile(self) -> None:
        d = self.fresh()
        trip = self.rng.randint(1, self.limits.max_trip)
        self.scalars[-1].append(d)
        self.add(f"int {d} = 0;")
        self.loops_made += 1
        self.add("do {")
        self.indent += 1
        self.loop_depth += 1
        self.scalars.append([])
        self.protected.add(d)
        self._body(self.rng.randint(1, 2))
        self.protected.discard(d)
        self.add(self.rng.choice((f"{d} = {d} + 1;", f"{d}++;")))
        self.scalars.pop()
        self.loop_depth -= 1
        self.indent -= 1
        self.add(f"}} while ({d} < {trip});")

    def stmt_chain(self) -> None:
        res = self.rng.choice(self.writable())
        branches = self.rng.randint(2, 3)
        conds = [self.condition(exclude=res) for _ in range(branches)]
        self.add(f"if ({conds[0]}) {{")
        self.indent += 1
        self.add(f"{res} = {self.expr(1, no_call=True)};")
        self.indent -= 1
        for cond in conds[1:]:
            self.add(f"}} else if ({cond}) {{")
            self.indent += 1
            self.add(f"{res} = {self.expr(1, no_call=True)};")
            self.indent -= 1
        if self.rng.random() < 0.8:
            self.add("} else {")
            self.indent += 1
            self.add(f"{res} = {self.expr(1, no_call=True)};")
            self.indent -= 1
        self.add("}")

    def stmt_splitrun(self) -> None:
        # The exact shape the chain-splitting rewrite emits, so the merging
        # rewrite always recognizes it.
        res = self.rng.choice(self.writable())
        first = self.condition(exclude=res)
        second = self.condition(exclude=res)
        rows = [f"if ({first})", f"if (!({first}) && {second})"]
        if self.rng.random() < 0.7:
            rows.append(f"if (!({first}) && !({second}))")
        for row in rows:
            self.add(row + " {")
            self.indent += 1
            self.add(f"{res} = {self.expr(1, no_call=True)};")
            self.indent -= 1
            self.add("}")

    def stmt_compound(self, op: str | None = None) -> None:
        v = self.rng.choice(self.writable())
        base = op if op is not None else self.rng.choice(_BASE_OPS)
        self.add(f"{v} {base}= {self._guarded_rhs(base)};")

    def stmt_plain(self, force_form: bool = False) -> None:
        v = self.rng.choice(self.writable())
        if force_form or self.rng.random() < 0.6:
            op = self.rng.choice(_BASE_OPS)
            self.add(f"{v} = {v} {op} {self._guarded_rhs(op)};")
        else:
            self.add(f"{v} = {self.expr()};")

    def stmt_incdec(self, form: str | None = None) -> None:
        v = self.rng.choice(self.writable())
        chosen = form if form is not None else self.rng.choice(tuple(_INCDEC_TEXT))
        self.add(_INCDEC_TEXT[chosen].format(v))

    def stmt_emit(self) -> None:
        self.add(f"emit({self.expr()});")

    def stmt_constdecl(self) -> str:
        name = self.fresh()
        self.add(f"const int {name} = {self.rng.randint(1, 60)};")
        self.consts.append(name)
        return name

    def stmt_arraystore(self) -> None:
        array = self.rng.choice(self.arrays)
        self.add(f"{array}[({self.expr(1)}) & 7] = {self.expr()};")

    # -- rule-focused injection ----------------------------------------------

    def inject(self, rule_id: str) -> None:
        if rule_id == "R1a":
            self.stmt_for(clean=True)
        elif rule_id == "R1b":
            self.stmt_while()
        elif rule_id == "R2a":
            self.stmt_chain()
        elif rule_id == "R2b":
            self.stmt_splitrun()
        elif rule_id in INCDEC_RULES:
            self.stmt_incdec(form=INCDEC_RULES[rule_id])
        elif rule_id in COMPOUND_RULES:
            self.stmt_compound(op=COMPOUND_RULES[rule_id].rstrip("="))
        elif rule_id == "R3n":
            self.stmt_plain(force_form=True)
        elif rule_id == "R4a":
            v = self.rng.choice(self.writable())
            self.add(f"{v} = {v} + {self.rng.randint(10, 99)};")
        elif rule_id == "R4b":
            name = self.stmt_constdecl()
            v = self.rng.choice(self.writable())
            self.add(f"{v} = {v} + {name};")
        else:
            raise ValueError(f"unknown rule id: {rule_id}")

    # -- top-level pieces ----------------------------------------------------

    def build_helper(self) -> None:
        name = self.fresh()
        p0, p1 = self.fresh(), self.fresh()
        self.helper = name
        self.in_helper = True
        self.scalars.append([p0, p1])
        self.add(f"int {name}(int {p0}, int {p1}) {{")
        self.indent += 1
        if self.rng.random() < 0.3 and self.loops_made < self.limits.max_loops:
            self.stmt_for()
        self._body(self.rng.randint(2, 3))
        self.add(f"return {self.expr()};")
        self.indent -= 1
        self.add("}")
        self.add("")
        self.scalars.pop()
        self.in_helper = False

    def build_main(self, focus: str | None) -> None:
        self.add("int main() {")
        self.indent += 1
        self.scalars.append([])
        for _ in range(self.rng.randint(2, 3)):
            name = self.fresh()
            if self.reads < _MAX_READS and self.rng.random() < 0.6:
                init = "read()"
                self.reads += 1
            else:
                init = str(self.rng.randint(-9, 60))
            self.add(f"int {name} = {init};")
            self.scalars[-1].append(name)
        if self.use_arrays and self.weights.get("arraystore", 0) > 0:
            array = self.fresh()
            self.add(f"int {array}[8];")
            self.arrays.append(array)
        count = self.rng.randint(self.limits.min_stmts, self.limits.max_stmts)
        inject_at = self.rng.randrange(count) if focus else -1
        for i in range(count):
            if i == inject_at:
                self.inject(focus)
            else:
                self.stmt_any()
        self.add(f"emit({self.rng.choice(self.readable())});")
        self.add(f"return {self.expr()};")
        self.indent -= 1
        self.add("}")


def _build(rng: random.Random, vocab: tuple[str, ...], weights: dict[str, int],
           limits: _Limits, use_arrays: bool, focus: str | None) -> str:
    builder = _Builder(rng, vocab, weights, limits, use_arrays)
    if rng.random() < 0.2:
        name = builder.fresh()
        builder.add(f"int {name} = {rng.randint(0, 30)};")
        builder.add("")
        builder.scalars[0].append(name)
    if rng.random() < limits.helper_prob:
        builder.build_helper()
    builder.build_main(focus)
    return "\n".join(builder.lines) + "\n"


def generate_program(seed: int, focus: str | None = None) -> str:
    """One random executable program; focus names a rule guaranteed a site."""
    if focus is not None and focus not in RULES_BY_ID:
        raise ValueError(f"unknown rule id: {focus}")
    rng = random.Random(derive_seed("program", seed, focus or "-"))
    return _build(rng, _MIXED_VOCAB, _MIXED_WEIGHTS, _PROGRAM_LIMITS,
                  use_arrays=True, focus=focus)


def generate_benchmark(per_class_train: int = DEFAULT_TRAIN_PER_CLASS,
                       per_class_test: int = DEFAULT_TEST_PER_CLASS,
                       seed: int = 0) -> list[dict]:
    """Labeled 4-class corpus in the shared dataset row format."""
    rows: list[dict] = []
    seen: set[str] = set()
    for label in range(NUM_CLASSES):
        vocab = _CLASS_VOCAB[label] + _NEUTRAL_VOCAB
        for i in range(per_class_train + per_class_test):
            code = ""
            for attempt in range(50):
                rng = random.Random(derive_seed("bench", seed, label, i, attempt))
                code = _build(rng, vocab, _CLASS_WEIGHTS[label], _BENCH_LIMITS,
                              use_arrays=(label == 0), focus=None)
                if code not in seen:
                    break
            seen.add(code)
            rows.append({
                "id": f"c{label}-{i:03d}",
                "code": code,
                "label": label,
                "split": "train" if i < per_class_train else "test",
            })
    return rows


def write_benchmark(rows: list[dict], path: Path | str) -> None:
    text = "\n".join(json.dumps(row, sort_keys=True) for row in rows)
    Path(path).write_text(text + "\n", encoding="utf-8")
