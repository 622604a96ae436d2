"""Concrete syntax, labeled AST, and structural predicates.

Grammar (whitespace-insensitive, UTF-8):

    expr ::= atom | '(' expr expr ')' tag? | '(' '\\' name '.' expr ')' tag?
    atom ::= name tag?
    tag  ::= '^' label

Names match ``[A-Za-z_][A-Za-z0-9_]*`` and labels ``[A-Za-z0-9_]+``.
Every node of a well-formed program carries a unique label and every bound
variable has a distinct name; `assign_labels` and the parser's renaming pass
establish those invariants.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

from ._util import deepcall

__all__ = [
    "Var",
    "Lam",
    "App",
    "Expr",
    "Term",
    "ParseError",
    "DuplicateLabelError",
    "ProgramIndex",
    "parse",
    "unparse",
    "assign_labels",
    "load_program",
    "free_vars",
    "is_linear",
    "is_affine",
    "var",
    "lam",
    "app",
    "subterms",
    "structurally_equal",
]


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Lam:
    param: str
    body: "Expr"


@dataclass(frozen=True)
class App:
    operator: "Expr"
    operand: "Expr"


Term = Union[Var, Lam, App]


@dataclass(frozen=True, eq=False, repr=False)
class Expr:
    """A term paired with its label; ``label is None`` marks a placeholder."""

    term: Term
    label: Optional[str] = None

    # Structural equality is iterative: generated programs nest thousands of
    # levels and recursive __eq__ would exhaust the C stack.
    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Expr):
            return NotImplemented
        return structurally_equal(self, other)

    __hash__ = None  # label payloads, not Exprs, are the dict keys here

    def __repr__(self) -> str:
        kind = type(self.term).__name__
        return f"Expr({kind}@{self.label})"


def var(name: str, label: Optional[str] = None) -> Expr:
    return Expr(Var(name), label)


def lam(param: str, body: Expr, label: Optional[str] = None) -> Expr:
    return Expr(Lam(param, body), label)


def app(operator: Expr, operand: Expr, label: Optional[str] = None) -> Expr:
    return Expr(App(operator, operand), label)


def structurally_equal(a: Expr, b: Expr) -> bool:
    """Deep equality including labels, without deep recursion."""
    todo = [(a, b)]
    while todo:
        x, y = todo.pop()
        if x.label != y.label:
            return False
        tx, ty = x.term, y.term
        if type(tx) is not type(ty):
            return False
        if isinstance(tx, Var):
            if tx.name != ty.name:
                return False
        elif isinstance(tx, Lam):
            if tx.param != ty.param:
                return False
            todo.append((tx.body, ty.body))
        else:
            todo.append((tx.operator, ty.operator))
            todo.append((tx.operand, ty.operand))
    return True


def subterms(e: Expr) -> Iterator[Expr]:
    """All nodes of ``e`` in document (preorder, left-to-right) order."""
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        t = node.term
        if isinstance(t, Lam):
            stack.append(t.body)
        elif isinstance(t, App):
            stack.append(t.operand)
            stack.append(t.operator)


# ---------------------------------------------------------------------------
# Errors


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int) -> None:
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class DuplicateLabelError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Lexer / parser

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_LABEL_RE = re.compile(r"[A-Za-z0-9_]+")


class _Scanner:
    def __init__(self, text: str) -> None:
        self.text = text
        self.pos = 0

    def _skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def line_col(self, pos: Optional[int] = None) -> tuple[int, int]:
        p = self.pos if pos is None else pos
        line = self.text.count("\n", 0, p) + 1
        start = self.text.rfind("\n", 0, p) + 1
        return line, p - start + 1

    def error(self, message: str) -> ParseError:
        line, col = self.line_col()
        return ParseError(message, line, col)

    def peek(self) -> str:
        self._skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str) -> None:
        if self.peek() != ch:
            got = self.peek() or "end of input"
            raise self.error(f"expected {ch!r}, found {got!r}")
        self.pos += 1

    def name(self) -> str:
        self._skip_ws()
        m = _NAME_RE.match(self.text, self.pos)
        if not m:
            raise self.error("expected a name")
        self.pos = m.end()
        return m.group()

    def label(self) -> str:
        # no whitespace skipping: the tag binds tightly to its node
        m = _LABEL_RE.match(self.text, self.pos)
        if not m:
            raise self.error("expected a label after '^'")
        self.pos = m.end()
        return m.group()

    def tag(self) -> Optional[str]:
        if self.pos < len(self.text) and self.text[self.pos] == "^":
            self.pos += 1
            return self.label()
        return None

    def at_end(self) -> bool:
        self._skip_ws()
        return self.pos >= len(self.text)


def _parse_expr(s: _Scanner) -> Expr:
    ch = s.peek()
    if ch == "(":
        s.expect("(")
        if s.peek() == "\\":
            s.expect("\\")
            name = s.name()
            s.expect(".")
            body = _parse_expr(s)
            s.expect(")")
            return Expr(Lam(name, body), s.tag())
        first = _parse_expr(s)
        if s.peek() == ")":
            # superfluous grouping parentheses; a tag on the group labels the
            # inner node if it has no label of its own
            s.expect(")")
            tag = s.tag()
            if tag is None:
                return first
            if first.label is not None:
                raise s.error("label on a group around an already-labeled expression")
            return Expr(first.term, tag)
        operand = _parse_expr(s)
        s.expect(")")
        return Expr(App(first, operand), s.tag())
    if ch == "" or ch in ").^\\":
        got = ch or "end of input"
        raise s.error(f"expected an expression, found {got!r}")
    name = s.name()
    return Expr(Var(name), s.tag())


def parse(text: str) -> Expr:
    """Parse concrete syntax into a labeled AST.

    Explicit ``^label`` tags are kept, untagged nodes get placeholder labels
    (``None``) for `assign_labels` to fill.  Duplicate explicit labels are
    rejected.  Programs with shadowed or repeated binder names are repaired
    by a deterministic renaming pass, with a warning.
    """
    return deepcall(_parse, text)


def _parse(text: str) -> Expr:
    s = _Scanner(text)
    e = _parse_expr(s)
    if not s.at_end():
        raise s.error("unexpected trailing input")
    _check_labels(e)
    return _rename_duplicate_binders(e)


def _check_labels(e: Expr) -> None:
    seen: set[str] = set()
    for node in subterms(e):
        if node.label is None:
            continue
        if node.label in seen:
            raise DuplicateLabelError(f"duplicate explicit label {node.label!r}")
        seen.add(node.label)


def _rename_duplicate_binders(e: Expr) -> Expr:
    used: set[str] = set()
    for node in subterms(e):
        t = node.term
        if isinstance(t, Var):
            used.add(t.name)
        elif isinstance(t, Lam):
            used.add(t.param)

    taken: set[str] = set(used)
    bound_seen: set[str] = set()
    renamed: list[tuple[str, str]] = []

    def fresh(name: str) -> str:
        i = 1
        while f"{name}_{i}" in taken:
            i += 1
        new = f"{name}_{i}"
        taken.add(new)
        return new

    def walk(node: Expr, env: dict[str, str]) -> Expr:
        t = node.term
        if isinstance(t, Var):
            new = env.get(t.name, t.name)
            return node if new == t.name else Expr(Var(new), node.label)
        if isinstance(t, Lam):
            name = t.param
            if name in bound_seen:
                new = fresh(name)
                renamed.append((name, new))
            else:
                bound_seen.add(name)
                new = name
            body = walk(t.body, {**env, name: new} if new != name else env)
            if new == name and body is t.body:
                return node
            return Expr(Lam(new, body), node.label)
        operator = walk(t.operator, env)
        operand = walk(t.operand, env)
        if operator is t.operator and operand is t.operand:
            return node
        return Expr(App(operator, operand), node.label)

    out = walk(e, {})
    if renamed:
        pairs = ", ".join(f"{old}->{new}" for old, new in renamed)
        warnings.warn(f"renamed duplicate binders: {pairs}", stacklevel=3)
    return out


# ---------------------------------------------------------------------------
# Printing


def unparse(e: Expr) -> str:
    """Print fully parenthesized concrete syntax; inverse of `parse`."""
    out: list[str] = []
    stack: list[tuple[str, object]] = [("expr", e)]
    while stack:
        op, x = stack.pop()
        if op == "str":
            out.append(x)  # type: ignore[arg-type]
            continue
        node: Expr = x  # type: ignore[assignment]
        tag = "" if node.label is None else f"^{node.label}"
        t = node.term
        if isinstance(t, Var):
            out.append(t.name + tag)
        elif isinstance(t, Lam):
            out.append(f"(\\{t.param}. ")
            stack.append(("str", ")" + tag))
            stack.append(("expr", t.body))
        else:
            out.append("(")
            stack.append(("str", ")" + tag))
            stack.append(("expr", t.operand))
            stack.append(("str", " "))
            stack.append(("expr", t.operator))
    return "".join(out)


# ---------------------------------------------------------------------------
# Labeling


def assign_labels(e: Expr) -> Expr:
    """Fill every placeholder label with a fresh decimal label.

    Numbering walks the tree left to right, children before their node, so
    the innermost leftmost placeholder gets the smallest free number.
    Explicit labels are preserved; duplicates among them are rejected, and
    fresh labels skip any decimal already used explicitly.
    """
    _check_labels(e)
    used = {node.label for node in subterms(e) if node.label is not None}
    counter = 0

    def next_label() -> str:
        nonlocal counter
        while str(counter) in used:
            counter += 1
        label = str(counter)
        counter += 1
        return label

    # iterative bottom-up rebuild
    done: dict[int, Expr] = {}
    stack: list[tuple[Expr, bool]] = [(e, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            t = node.term
            if isinstance(t, Var):
                new_t: Term = t
            elif isinstance(t, Lam):
                new_t = Lam(t.param, done[id(t.body)])
            else:
                new_t = App(done[id(t.operator)], done[id(t.operand)])
            label = node.label if node.label is not None else next_label()
            done[id(node)] = Expr(new_t, label)
        else:
            stack.append((node, True))
            t = node.term
            if isinstance(t, Lam):
                stack.append((t.body, False))
            elif isinstance(t, App):
                stack.append((t.operand, False))
                stack.append((t.operator, False))
    return done[id(e)]


def load_program(text: str) -> Expr:
    """Parse and fully label a program: the standard front-end pipeline."""
    return assign_labels(parse(text))


# ---------------------------------------------------------------------------
# Structural predicates


def free_vars(e: Expr) -> frozenset[str]:
    """The standard free-variable set."""
    # post-order accumulation without recursion
    result: dict[int, frozenset[str]] = {}
    stack: list[tuple[Expr, bool]] = [(e, False)]
    while stack:
        node, expanded = stack.pop()
        t = node.term
        if expanded:
            if isinstance(t, Lam):
                result[id(node)] = result[id(t.body)] - {t.param}
            else:
                result[id(node)] = result[id(t.operator)] | result[id(t.operand)]
        else:
            if isinstance(t, Var):
                result[id(node)] = frozenset((t.name,))
            else:
                stack.append((node, True))
                if isinstance(t, Lam):
                    stack.append((t.body, False))
                else:
                    stack.append((t.operand, False))
                    stack.append((t.operator, False))
    return result[id(e)]


def _occurrence_counts(e: Expr) -> dict[int, int]:
    """For each Lam node (by id), how often its parameter occurs in its body.

    Assumes distinct binder names and a closed term, so every occurrence of
    a name belongs to the unique binder carrying it (a preorder walk meets
    the binder before its occurrences).
    """
    counts: dict[int, int] = {}
    binder_of: dict[str, int] = {}
    for node in subterms(e):
        t = node.term
        if isinstance(t, Var):
            counts[binder_of[t.name]] += 1
        elif isinstance(t, Lam):
            binder_of[t.param] = id(node)
            counts[id(node)] = 0
    return counts


def _check_closed(e: Expr, who: str) -> None:
    fv = free_vars(e)
    if fv:
        raise ValueError(f"{who} requires a closed term; free: {sorted(fv)}")


def is_linear(e: Expr) -> bool:
    """True iff every bound variable occurs exactly once in its binder's body."""
    _check_closed(e, "is_linear")
    return all(n == 1 for n in _occurrence_counts(e).values())


def is_affine(e: Expr) -> bool:
    """True iff every bound variable occurs at most once."""
    _check_closed(e, "is_affine")
    return all(n <= 1 for n in _occurrence_counts(e).values())


# ---------------------------------------------------------------------------
# Program index


@dataclass
class ProgramIndex:
    """Derived maps over a fully labeled program.

    ``labels`` and ``vars`` are in document order; ``node_of`` is total on
    labels and ``binder_of`` on bound variables.  ``fv_of`` caches each
    node's free variables, keyed by label (restriction of closure
    environments is on the hot path of both interpreters).
    """

    program: Expr
    labels: list[str] = field(default_factory=list)
    vars: list[str] = field(default_factory=list)
    node_of: dict[str, Expr] = field(default_factory=dict)
    binder_of: dict[str, str] = field(default_factory=dict)
    fv_of: dict[str, frozenset[str]] = field(default_factory=dict)

    @classmethod
    def of(cls, program: Expr) -> "ProgramIndex":
        idx = cls(program)
        order: list[Expr] = []
        stack = [program]
        while stack:
            node = stack.pop()
            if node.label is None:
                raise ValueError("program has unassigned labels; run assign_labels")
            if node.label in idx.node_of:
                raise DuplicateLabelError(f"duplicate label {node.label!r}")
            idx.node_of[node.label] = node
            idx.labels.append(node.label)
            order.append(node)
            t = node.term
            if isinstance(t, Lam):
                if t.param in idx.binder_of:
                    raise ValueError(f"duplicate binder name {t.param!r}")
                idx.binder_of[t.param] = node.label
                idx.vars.append(t.param)
                stack.append(t.body)
            elif isinstance(t, App):
                stack.append(t.operand)
                stack.append(t.operator)
        # free variables, children before parents
        for node in reversed(order):
            t = node.term
            if isinstance(t, Var):
                idx.fv_of[node.label] = frozenset((t.name,))
            elif isinstance(t, Lam):
                idx.fv_of[node.label] = idx.fv_of[t.body.label] - {t.param}
            else:
                idx.fv_of[node.label] = (
                    idx.fv_of[t.operator.label] | idx.fv_of[t.operand.label]
                )
        return idx

    def lam_labels(self) -> list[str]:
        return [l for l in self.labels if isinstance(self.node_of[l].term, Lam)]
