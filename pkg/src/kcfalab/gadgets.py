"""Linear Boolean gadgets, the flow Widget, and the circuit compiler.

Booleans are pairs: True = <TT, FF> and False = <FF, TT>, where TT is the
identity on pairs and FF is the pair swap.  All connectives use every bound
variable exactly once; Implies/And/Or dispose of their truth-table garbage
by composing it away (two complementary pair functions always compose to
the swap, and one more swap yields the identity).

The Widget behaves as the identity on Booleans but routes one of two
distinguished closures (labels TW / FW) to its application label, turning
"what does this program evaluate to" into "what flows here".

Circuits are explicit-fanout netlists (`CircuitSpec`); `compile_circuit`
turns a circuit plus constant inputs into one closed program whose Widget
flow answers the circuit-value question, and `eval_circuit` is the
independent Boolean oracle for it.
"""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Optional, Sequence, Union

from ._util import Names, deepcall
from .exact import (
    VAR,
    Closure,
    Contour,
    EPSILON,
    ExactCache,
    env_lookup,
)
from .kcfa import AbstractCache, ClosurePattern, FlowQuery
from .syntax import App, Expr, Lam, Var, app, assign_labels, lam, var

__all__ = [
    "mk_sugar_pair",
    "mk_sugar_letpair",
    "mk_connective",
    "mk_widget",
    "WidgetHandle",
    "widget_query",
    "mk_toy",
    "ToyHandle",
    "CircuitSpec",
    "CInput",
    "Gate",
    "CircuitBuilder",
    "compile_circuit",
    "eval_circuit",
    "eval_circuit_wires",
    "chain_circuit",
    "random_circuit",
    "circuit_to_expr",
    "is_tt_term",
    "is_ff_term",
    "pair_parts",
    "tuple_parts",
    "decode_bool_closure",
    "bool_flows_exact",
    "bool_flows_abstract",
]


# ---------------------------------------------------------------------------
# Core sugar (unlabeled builders; public mk_* wrappers label their results)


def _pair(u: Expr, v: Expr, nm: Names) -> Expr:
    z = nm.fresh("z")
    return lam(z, app(app(var(z), u), v))


def _letpair(x: str, y: str, p: Expr, body: Expr) -> Expr:
    return app(p, lam(x, lam(y, body)))


def _tuple(items: Sequence[Expr], nm: Names) -> Expr:
    w = nm.fresh("w")
    body: Expr = var(w)
    for item in items:
        body = app(body, item)
    return lam(w, body)


def _lettuple(names: Sequence[str], p: Expr, body: Expr) -> Expr:
    k: Expr = body
    for name in reversed(names):
        k = lam(name, k)
    return app(p, k)


def _tt(nm: Names) -> Expr:
    p, x, y = nm.fresh("p"), nm.fresh("x"), nm.fresh("y")
    return lam(p, app(var(p), lam(x, lam(y, _pair(var(x), var(y), nm)))))


def _ff(nm: Names) -> Expr:
    p, x, y = nm.fresh("p"), nm.fresh("x"), nm.fresh("y")
    return lam(p, app(var(p), lam(x, lam(y, _pair(var(y), var(x), nm)))))


def _true(nm: Names, label: Optional[str] = None) -> Expr:
    e = _pair(_tt(nm), _ff(nm), nm)
    return Expr(e.term, label) if label else e


def _false(nm: Names, label: Optional[str] = None) -> Expr:
    e = _pair(_ff(nm), _tt(nm), nm)
    return Expr(e.term, label) if label else e


def _not(nm: Names) -> Expr:
    # negation is the pair swap, a fresh copy of FF
    return _ff(nm)


def _compose2(f: Expr, g: Expr, nm: Names) -> Expr:
    a, b, x = nm.fresh("g"), nm.fresh("h"), nm.fresh("cx")
    composer = lam(a, lam(b, lam(x, app(var(a), app(var(b), var(x))))))
    return app(app(composer, f), g)


def _compose_chain(fs: Sequence[Expr], nm: Names) -> Expr:
    out = fs[0]
    for f in fs[1:]:
        out = _compose2(out, f, nm)
    return out


def _copy(n: int, nm: Names) -> Expr:
    if n < 1:
        raise ValueError("Copy needs n >= 1")
    b = nm.fresh("b")
    if n == 1:
        return lam(b, _tuple([var(b)], nm))
    u, v = nm.fresh("u"), nm.fresh("v")
    first = app(var(u), _pair(_tt(nm), _ff(nm), nm))
    rest_src = app(var(v), _pair(_ff(nm), _tt(nm), nm))
    if n == 2:
        body = _pair(first, rest_src, nm)
    else:
        rest_vars = [nm.fresh("c") for _ in range(n - 1)]
        body = _lettuple(
            rest_vars,
            app(_copy(n - 1, nm), rest_src),
            _tuple([first] + [var(c) for c in rest_vars], nm),
        )
    return lam(b, _letpair(u, v, var(b), body))


# Truth-table connectives, all of one shape: select through the first input's
# components, then compose the two complementary leftovers with one more swap
# so they cancel into the identity and the chain collapses to q1.
def _binary_connective(
    selectors: Callable[[str, str, Names], tuple[Expr, Expr]], nm: Names
) -> Expr:
    b1, b2 = nm.fresh("b"), nm.fresh("b")
    u1, v1 = nm.fresh("u"), nm.fresh("v")
    u2, v2 = nm.fresh("u"), nm.fresh("v")
    p1, p2 = nm.fresh("p"), nm.fresh("q")
    q1, q2 = nm.fresh("p"), nm.fresh("q")
    first_sel, second_sel = selectors(u2, v2, nm)
    garbage = _compose_chain([var(q1), var(p2), var(q2), _ff(nm)], nm)
    result = _pair(var(p1), garbage, nm)
    body = _letpair(
        u1,
        v1,
        var(b1),
        _letpair(
            u2,
            v2,
            var(b2),
            _letpair(
                p1,
                p2,
                app(var(u1), first_sel),
                _letpair(q1, q2, app(var(v1), second_sel), result),
            ),
        ),
    )
    return lam(b1, lam(b2, body))


def _implies(nm: Names) -> Expr:
    return _binary_connective(
        lambda u2, v2, n: (_pair(var(u2), _tt(n), n), _pair(_ff(n), var(v2), n)), nm
    )


def _and(nm: Names) -> Expr:
    return _binary_connective(
        lambda u2, v2, n: (_pair(var(u2), _ff(n), n), _pair(_tt(n), var(v2), n)), nm
    )


def _or(nm: Names) -> Expr:
    return _binary_connective(
        lambda u2, v2, n: (_pair(_tt(n), var(u2), n), _pair(var(v2), _ff(n), n)), nm
    )


_CONNECTIVES: dict[str, Callable[[Names], Expr]] = {
    "TT": _tt,
    "FF": _ff,
    "True": _true,
    "False": _false,
    "Not": _not,
    "Implies": _implies,
    "And": _and,
    "Or": _or,
}


def mk_sugar_pair(u: Expr, v: Expr) -> Expr:
    """<u, v>, desugared and freshly labeled."""
    return assign_labels(_pair(u, v, Names("pr_")))


def mk_sugar_letpair(x: str, y: str, p: Expr, body: Expr) -> Expr:
    """let <x, y> = p in body, desugared and freshly labeled."""
    return assign_labels(_letpair(x, y, p, body))


def mk_connective(name: str, n: Optional[int] = None) -> Expr:
    """A fresh, fully labeled copy of a named Boolean gadget.

    ``name`` is one of TT, FF, True, False, Not, Implies, And, Or, or Copy
    (which takes the fan-out ``n``).
    """
    if name == "Copy":
        if n is None:
            raise ValueError("Copy needs a fan-out n")
        return assign_labels(_copy(n, Names()))
    try:
        builder = _CONNECTIVES[name]
    except KeyError:
        raise ValueError(f"unknown connective {name!r}") from None
    return assign_labels(builder(Names()))


# ---------------------------------------------------------------------------
# Widget


@dataclass(frozen=True)
class WidgetHandle:
    """Labels to query: the widget application plus its two distinguished
    Boolean copies.  ``widget_app_label`` is None until the widget is applied
    (the compilers fill it)."""

    widget_app_label: Optional[str]
    true_label: str
    false_label: str


def _widget(nm: Names, prefix: str = "") -> tuple[Expr, WidgetHandle]:
    tw = _true(nm, label=prefix + "TW")
    fw = _false(nm, label=prefix + "FW")
    b, u, v = nm.fresh("b"), nm.fresh("u"), nm.fresh("v")
    a, d = nm.fresh("a"), nm.fresh("d")
    projected = app(app(var(u), _pair(tw, fw, nm)), lam(a, lam(d, var(a))))
    term = lam(b, _letpair(u, v, var(b), projected))
    return term, WidgetHandle(None, prefix + "TW", prefix + "FW")


def mk_widget(prefix: str = "") -> tuple[Expr, WidgetHandle]:
    """The Boolean-observer term; apply it to a Boolean to make one of the
    two distinguished closures flow at the application label."""
    term, handle = _widget(Names(), prefix)
    return assign_labels(term), handle


def widget_query(handle: WidgetHandle, want: bool = True) -> FlowQuery:
    if handle.widget_app_label is None:
        raise ValueError("widget has not been applied; no application label")
    label = handle.true_label if want else handle.false_label
    return FlowQuery(key=handle.widget_app_label, pattern=ClosurePattern(label))


# ---------------------------------------------------------------------------
# The nonlinearity demo program


@dataclass(frozen=True)
class ToyHandle:
    implies_result_label: str
    call_true_label: str
    call_false_label: str
    true_label: str
    false_label: str
    widget: Optional[WidgetHandle] = None


def mk_toy(with_widget: bool = False, prefix: str = "") -> tuple[Expr, ToyHandle]:
    """(\\f.(f True)(f False)) (\\x. Implies x x), optionally observing the
    duplicated call's result through a Widget inside the shared body."""
    nm = Names()
    x, f = nm.fresh("x"), nm.fresh("f")
    body = app(
        app(_implies(nm), var(x), label=prefix + "TOYI"),
        var(x),
        label=prefix + "TOYJ",
    )
    widget_handle: Optional[WidgetHandle] = None
    if with_widget:
        wterm, wh = _widget(nm, prefix)
        body = app(wterm, body, label=prefix + "WAPP")
        widget_handle = replace(wh, widget_app_label=prefix + "WAPP")
    shared = lam(x, body)
    truev = _true(nm, label=prefix + "TRUE")
    falsev = _false(nm, label=prefix + "FALSE")
    term = app(
        lam(
            f,
            app(
                app(var(f), truev, label=prefix + "CT"),
                app(var(f), falsev, label=prefix + "CF"),
                label=prefix + "CC",
            ),
        ),
        shared,
    )
    handle = ToyHandle(
        implies_result_label=prefix + "TOYJ",
        call_true_label=prefix + "CT",
        call_false_label=prefix + "CF",
        true_label=prefix + "TRUE",
        false_label=prefix + "FALSE",
        widget=widget_handle,
    )
    return assign_labels(term), handle


# ---------------------------------------------------------------------------
# Circuits


@dataclass(frozen=True)
class CInput:
    name: str
    value: Optional[bool] = None


@dataclass(frozen=True)
class Gate:
    id: str
    kind: str  # NOT | AND | OR | IMPLIES | COPY
    args: tuple[str, ...]
    fanout: int = 1  # COPY only

    def out_wires(self) -> tuple[str, ...]:
        if self.kind == "COPY":
            return tuple(f"{self.id}.{i}" for i in range(self.fanout))
        return (self.id,)


_ARITY = {"NOT": 1, "AND": 2, "OR": 2, "IMPLIES": 2, "COPY": 1}


@dataclass(frozen=True)
class CircuitSpec:
    """An explicit-fanout Boolean netlist.

    Every wire that is not an output is consumed exactly once; fan-out goes
    through COPY gates.  That discipline is what keeps compiled terms linear.
    """

    inputs: tuple[CInput, ...]
    gates: tuple[Gate, ...]
    outputs: tuple[str, ...]

    @property
    def output(self) -> str:
        if len(self.outputs) != 1:
            raise ValueError("circuit has multiple outputs")
        return self.outputs[0]

    def validate(self) -> None:
        wires: set[str] = set()
        for inp in self.inputs:
            if inp.name in wires:
                raise ValueError(f"duplicate input {inp.name!r}")
            wires.add(inp.name)
        uses: dict[str, int] = {w: 0 for w in wires}
        for gate in self.gates:
            if gate.kind not in _ARITY:
                raise ValueError(f"unknown gate kind {gate.kind!r}")
            if len(gate.args) != _ARITY[gate.kind]:
                raise ValueError(f"gate {gate.id}: arity mismatch")
            if gate.kind == "COPY" and gate.fanout < 1:
                raise ValueError(f"gate {gate.id}: bad fanout")
            for a in gate.args:
                if a not in uses:
                    raise ValueError(
                        f"gate {gate.id}: argument {a!r} not yet defined (topological order required)"
                    )
                uses[a] += 1
            for w in gate.out_wires():
                if w in uses:
                    raise ValueError(f"duplicate wire {w!r}")
                uses[w] = 0
        for o in self.outputs:
            if o not in uses:
                raise ValueError(f"output {o!r} undefined")
            uses[o] += 1
        bad = sorted(w for w, n in uses.items() if n != 1)
        if bad:
            raise ValueError(
               f"wires not consumed exactly once: {bad} (make fan-out explicit with COPY)"
            )

    def to_dict(self) -> dict:
        d: dict = {
            "inputs": [
                {"name": i.name, **({"value": i.value} if i.value is not None else {})}
                for i in self.inputs
            ],
            "gates": [
                {
                    "id": g.id,
                    "kind": g.kind,
                    "args": list(g.args),
                    **({"fanout": g.fanout} if g.kind == "COPY" else {}),
                }
                for g in self.gates
            ],
        }
        if len(self.outputs) == 1:
            d["output"] = self.outputs[0]
        else:
            d["outputs"] = list(self.outputs)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CircuitSpec":
        inputs = tuple(CInput(i["name"], i.get("value")) for i in d["inputs"])
        gates = tuple(
            Gate(g["id"], g["kind"], tuple(g["args"]), g.get("fanout", 1))
            for g in d["gates"]
        )
        outputs = tuple(d["outputs"]) if "outputs" in d else (d["output"],)
        spec = cls(inputs, gates, outputs)
        spec.validate()
        return spec

    @classmethod
    def from_json(cls, text: str) -> "CircuitSpec":
        return cls.from_dict(json.loads(text))


class CircuitBuilder:
    """Convenience builder; `build` inserts COPY gates for any fan-out."""

    def __init__(self) -> None:
        self.inputs: list[CInput] = []
        self.gates: list[Gate] = []
        self._n = 0

    def _gid(self) -> str:
        self._n += 1
        return f"g{self._n}"

    def input(self, name: str, value: Optional[bool] = None) -> str:
        self.inputs.append(CInput(name, value))
        return name

    def const(self, value: bool) -> str:
        name = f"const{self._n}_{1 if value else 0}"
        self._n += 1
        self.inputs.append(CInput(name, value))
        return name

    def gate(self, kind: str, *args: str) -> str:
        gid = self._gid()
        self.gates.append(Gate(gid, kind, args))
        return gid

    def not_(self, a: str) -> str:
        return self.gate("NOT", a)

    def and_(self, a: str, b: str) -> str:
        return self.gate("AND", a, b)

    def or_(self, a: str, b: str) -> str:
        return self.gate("OR", a, b)

    def implies_(self, a: str, b: str) -> str:
        return self.gate("IMPLIES", a, b)

    def copy(self, a: str, fanout: int) -> list[str]:
        gid = self._gid()
        gate = Gate(gid, "COPY", (a,), fanout)
        self.gates.append(gate)
        return list(gate.out_wires())

    def build(self, outputs: Sequence[str]) -> CircuitSpec:
        uses: dict[str, int] = {}
        for g in self.gates:
            for a in g.args:
                uses[a] = uses.get(a, 0) + 1
        for o in outputs:
            uses[o] = uses.get(o, 0) + 1

        replacements: dict[str, deque[str]] = {}
        new_gates: list[Gate] = []

        def fan_out(wire: str) -> None:
            n = uses.get(wire, 0)
            if n <= 1:
                return
            gate = Gate(f"{wire}_fan", "COPY", (wire,), n)
            new_gates.append(gate)
            replacements[wire] = deque(gate.out_wires())

        for inp in self.inputs:
            fan_out(inp.name)
        for g in self.gates:
            args = tuple(
                replacements[a].popleft() if a in replacements else a for a in g.args
            )
            new_gates.append(Gate(g.id, g.kind, args, g.fanout))
            for w in Gate(g.id, g.kind, args, g.fanout).out_wires():
                fan_out(w)
        outs = tuple(
            replacements[o].popleft() if o in replacements else o for o in outputs
        )
        spec = CircuitSpec(tuple(self.inputs), tuple(new_gates), outs)
        spec.validate()
        return spec


def eval_circuit_wires(
    c: CircuitSpec, assignment: Optional[dict[str, bool]] = None
) -> dict[str, bool]:
    """Direct Boolean evaluation; shares nothing with the lambda encodings."""
    values: dict[str, bool] = {}
    for inp in c.inputs:
        v = (assignment or {}).get(inp.name, inp.value)
        if v is None:
            raise ValueError(f"input {inp.name!r} has no value")
        values[inp.name] = v
    for g in c.gates:
        a = [values[w] for w in g.args]
        if g.kind == "NOT":
            values[g.id] = not a[0]
        elif g.kind == "AND":
            values[g.id] = a[0] and a[1]
        elif g.kind == "OR":
            values[g.id] = a[0] or a[1]
        elif g.kind == "IMPLIES":
            values[g.id] = (not a[0]) or a[1]
        else:
            for w in g.out_wires():
                values[w] = a[0]
    return {o: values[o] for o in c.outputs}


def eval_circuit(c: CircuitSpec, assignment: Optional[dict[str, bool]] = None) -> bool:
    return eval_circuit_wires(c, assignment)[c.output]


def circuit_to_expr(
    c: CircuitSpec,
    input_wires: dict[str, Expr],
    nm: Names,
    body_fn: Callable[[list[Expr]], Expr],
    gadget_map: Optional[dict[str, Callable[[Names], Expr]]] = None,
) -> Expr:
    """Compile a circuit into nested gadget applications.

    Constant inputs become fresh True/False encodings; free inputs must be
    supplied in ``input_wires``.  Since every wire is consumed exactly once,
    single-output gates are inlined at their unique use; only COPY gates
    introduce binders.  ``gadget_map`` can substitute alternative connective
    builders per gate kind.
    """
    c.validate()
    wires: dict[str, Expr] = {}
    for inp in c.inputs:
        if inp.name in input_wires:
            wires[inp.name] = input_wires[inp.name]
        elif inp.value is not None:
            wires[inp.name] = _true(nm) if inp.value else _false(nm)
        else:
            raise ValueError(f"no wiring for free input {inp.name!r}")

    def take(w: str) -> Expr:
        return wires.pop(w)

    gadget = {"NOT": _not, "AND": _and, "OR": _or, "IMPLIES": _implies}
    if gadget_map:
        gadget.update(gadget_map)

    def emit(i: int) -> Expr:
        if i == len(c.gates):
            return body_fn([take(o) for o in c.outputs])
        g = c.gates[i]
        if g.kind == "COPY":
            source = app(_copy(g.fanout, nm), take(g.args[0]))
            branch_vars = [nm.fresh("c") for _ in range(g.fanout)]
            for j, bv in enumerate(branch_vars):
                wires[f"{g.id}.{j}"] = var(bv)
            return _lettuple(branch_vars, source, emit(i + 1))
        if g.kind == "NOT":
            wires[g.id] = app(gadget["NOT"](nm), take(g.args[0]))
        else:
            wires[g.id] = app(
                app(gadget[g.kind](nm), take(g.args[0])), take(g.args[1])
            )
        return emit(i + 1)

    return emit(0)


def compile_circuit(
    c: CircuitSpec, *, with_widget: bool = True, prefix: str = ""
) -> tuple[Expr, Optional[WidgetHandle]]:
    """Closed program computing the circuit on its constant inputs.

    With the Widget attached (the default), the circuit's Boolean output is
    observable as a flow of the TW/FW closure at the widget application
    label; the bare variant is the fully linear core.
    """
    return deepcall(_compile_circuit, c, with_widget, prefix)


def _compile_circuit(
    c: CircuitSpec, with_widget: bool, prefix: str
) -> tuple[Expr, Optional[WidgetHandle]]:
    for inp in c.inputs:
        if inp.value is None:
            raise ValueError(f"input {inp.name!r} has no assigned constant")
    if len(c.outputs) != 1:
        raise ValueError("compile_circuit needs a single-output circuit")
    nm = Names()
    handle: Optional[WidgetHandle] = None
    if with_widget:
        widget_term, wh = _widget(nm, prefix)
        handle = replace(wh, widget_app_label=prefix + "WAPP")

        def body_fn(outs: list[Expr]) -> Expr:
            return app(widget_term, outs[0], label=prefix + "WAPP")

    else:

        def body_fn(outs: list[Expr]) -> Expr:
            return outs[0]

    expr = assign_labels(circuit_to_expr(c, {}, nm, body_fn))
    return expr, handle


def chain_circuit(n: int, value: bool = True) -> CircuitSpec:
    """A chain of n NOT gates on one constant input."""
    b = CircuitBuilder()
    w = b.input("a", value)
    for _ in range(n):
        w = b.not_(w)
    return b.build([w])


def random_circuit(rng, max_gates: int = 12) -> CircuitSpec:
    """A random explicit-fanout circuit with at most ``max_gates`` gates."""
    b = CircuitBuilder()
    pool: list[str] = []
    for i in range(rng.randint(1, 3)):
        pool.append(b.input(f"in{i}", rng.random() < 0.5))
    gates_left = max_gates
    while gates_left > 0 and (len(pool) > 1 or rng.random() < 0.6):
        kind = rng.choice(["NOT", "AND", "OR", "IMPLIES", "COPY"])
        if kind == "NOT":
            w = pool.pop(rng.randrange(len(pool)))
            pool.append(b.not_(w))
        elif kind == "COPY":
            if len(pool) + 2 > 6:
                continue
            w = pool.pop(rng.randrange(len(pool)))
            pool.extend(b.copy(w, 2))
        else:
            if len(pool) < 2:
                continue
            x = pool.pop(rng.randrange(len(pool)))
            y = pool.pop(rng.randrange(len(pool)))
            pool.append(b.gate(kind, x, y))
        gates_left -= 1
    while len(pool) > 1:
        x, y = pool.pop(), pool.pop()
        pool.append(b.and_(x, y))
    return b.build([pool[0]])


# ---------------------------------------------------------------------------
# Reading Boolean flows back out of caches


def pair_parts(e: Expr) -> Optional[tuple[Expr, Expr]]:
    """For a pair term \\z.((z U) V), the components (U, V)."""
    t = e.term
    if not isinstance(t, Lam):
        return None
    b = t.body.term
    if not isinstance(b, App):
        return None
    inner = b.operator.term
    if not isinstance(inner, App):
        return None
    z = inner.operator.term
    if not isinstance(z, Var) or z.name != t.param:
        return None
    return inner.operand, b.operand


def tuple_parts(e: Expr) -> Optional[list[Expr]]:
    """For \\w.(((w E1) E2) ... Em), the components [E1..Em]."""
    t = e.term
    if not isinstance(t, Lam):
        return None
    parts: list[Expr] = []
    node = t.body
    while isinstance(node.term, App):
        parts.append(node.term.operand)
        node = node.term.operator
    if not (isinstance(node.term, Var) and node.term.name == t.param):
        return None
    parts.reverse()
    return parts


def _pair_body_parts(e: Expr) -> Optional[tuple[str, str, Expr, Expr]]:
    t = e.term
    if not isinstance(t, Lam):
        return None
    inner = t.body.term
    if not isinstance(inner, Lam):
        return None
    parts = pair_parts(inner.body)
    if parts is None:
        return None
    return t.param, inner.param, parts[0], parts[1]


def _is_pair_fn(e: Expr, swapped: bool) -> bool:
    # \p. p (\x.\y. <x,y>)  --  identity on pairs (TT); swapped gives FF
    t = e.term
    if not isinstance(t, Lam):
        return False
    b = t.body.term
    if not isinstance(b, App):
        return False
    head = b.operator.term
    if not (isinstance(head, Var) and head.name == t.param):
        return False
    deconstruct = _pair_body_parts(b.operand)
    if deconstruct is None:
        return False
    x, y, first, second = deconstruct
    fv, sv = first.term, second.term
    if not (isinstance(fv, Var) and isinstance(sv, Var)):
        return False
    if swapped:
        return fv.name == y and sv.name == x
    return fv.name == x and sv.name == y


def is_tt_term(e: Expr) -> bool:
    return _is_pair_fn(e, swapped=False)


def is_ff_term(e: Expr) -> bool:
    return _is_pair_fn(e, swapped=True)


LookupFn = Callable[[str, Contour], Iterable[Closure]]


def decode_bool_closure(clo: Closure, lookup: LookupFn) -> set[bool]:
    """Truth values a pair-shaped closure can denote.

    The first component is either a literal pair function or a variable whose
    cache values are pair functions; TT-shaped means true, FF-shaped false.
    An exact run decodes to a single value; merged analyses may yield both.
    """
    parts = pair_parts(clo.term)
    if parts is None:
        return set()
    first, _ = parts
    candidates: list[Expr] = []
    ft = first.term
    if isinstance(ft, Lam):
        candidates.append(first)
    elif isinstance(ft, Var):
        contour = env_lookup(clo.env, ft.name)
        candidates.extend(c.term for c in lookup(ft.name, contour))
    out: set[bool] = set()
    for cand in candidates:
        if is_tt_term(cand):
            out.add(True)
        elif is_ff_term(cand):
            out.add(False)
    return out


def bool_flows_exact(cache: ExactCache, label: str) -> set[bool]:
    """Decoded truth values recorded at a label, over all contours."""

    def lookup(name: str, contour: Contour) -> Iterable[Closure]:
        v = cache.entries.get((VAR, name, contour))
        return (v,) if v is not None else ()

    out: set[bool] = set()
    for (kind, name, _contour), clo in cache.entries.items():
        if kind == "label" and name == label:
            out |= decode_bool_closure(clo, lookup)
    return out


def bool_flows_abstract(cache: AbstractCache, label: str) -> set[bool]:
    def lookup(name: str, contour: Contour) -> Iterable[Closure]:
        return cache.entries.get((VAR, name, contour)) or ()

    out: set[bool] = set()
    for clo in cache.closures_at(label):
        out |= decode_bool_closure(clo, lookup)
    return out
