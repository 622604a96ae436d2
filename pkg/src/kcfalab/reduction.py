"""Machine-simulation generators at desk scale.

A machine configuration is split across fixed-width tuples
(time, state, head, cell, bit): `gen_tuple_family` shows how one analysis
location accumulates exponentially many closures of one tuple term differing
only in their environments, `build_transition_circuit` encodes the
three-rule piecemeal transition over two such tuples as one Boolean circuit,
`build_phi` wraps that circuit into a term applying itself to every pair of
tuples in flow (its parameter is the only nonlinearity), `build_iterator`
supplies enough applications to saturate the analysis, and `build_tm_term`
assembles the whole program with an accept-bit extractor and a Widget.

`run_tm` and `rule_step` are the independent oracles: a direct simulator and
a direct interpreter of the three transition rules over integer tuples.

Encoding conventions: bit 0 is carried by the True encoding and bit 1 by
the False encoding; blocks are big-endian; states are one-hot in
declaration order (so a state bit can only be set if some fired table row
sets it, which keeps monotone over-approximation from inventing states);
head and cell addresses are binary and wrap modulo the tape size.

Widths are capped: these generators demonstrate the mechanics, they do not
pretend to run exponential-step machines.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

from ._util import Names, deepcall
from .exact import VAR, Closure, Contour, ExactCache
from .gadgets import (
    CircuitBuilder,
    CircuitSpec,
    WidgetHandle,
    _compose_chain,
    _copy,
    _false,
    _ff,
    _letpair,
    _pair,
    _true,
    _tt,
    _tuple,
    _widget,
    circuit_to_expr,
    decode_bool_closure,
    tuple_parts,
)
from .kcfa import AbstractCache
from .syntax import Expr, Lam, Var, app, assign_labels, lam, var

__all__ = [
    "TMSpec",
    "MachineID",
    "RunResult",
    "IDTupleLayout",
    "derive_layout",
    "run_tm",
    "rule_step",
    "encode_tuple",
    "decode_valid_tuple",
    "build_transition_circuit",
    "build_phi",
    "build_iterator",
    "TupleFamilyHandle",
    "gen_tuple_family",
    "build_tm_term",
    "five_machines",
    "overapproximation_witness",
    "decode_tuple_closure",
    "MAX_TUPLE_BITS",
]

MAX_TUPLE_BITS = 24
MOVES = ("L", "R")


# ---------------------------------------------------------------------------
# Machines and the direct simulator


@dataclass
class TMSpec:
    """A deterministic binary-tape machine with absorbing halt states.

    ``delta`` maps (state, symbol) to (state, written symbol, move); rows for
    the accept/reject states are filled in automatically as self-loops that
    re-write the read symbol and move right.  ``time_bits`` is the exponent
    of the step bound: runs are cut off after 2**time_bits steps.
    """

    states: tuple[str, ...]
    q0: str
    qa: str
    qr: str
    delta: dict[tuple[str, str], tuple[str, str, str]]
    blank: str = "0"
    tape_cells: int = 2
    time_bits: int = 3

    def __post_init__(self) -> None:
        for q in (self.q0, self.qa, self.qr):
            if q not in self.states:
                raise ValueError(f"state {q!r} not declared")
        if self.blank != "0":
            raise ValueError("desk-scale machines use blank '0'")
        if self.tape_cells < 1 or self.tape_cells & (self.tape_cells - 1):
            raise ValueError("tape_cells must be a power of two")
        for q in (self.qa, self.qr):
            for s in ("0", "1"):
                row = self.delta.get((q, s))
                if row is None:
                    self.delta[(q, s)] = (q, s, "R")
                elif row != (q, s, "R"):
                    raise ValueError(f"halt state {q!r} must be absorbing")
        for (q, s), (nq, ws, mv) in self.delta.items():
            if q not in self.states or nq not in self.states:
                raise ValueError(f"unknown state in row ({q},{s})")
            if s not in ("0", "1") or ws not in ("0", "1") or mv not in MOVES:
                raise ValueError(f"bad row ({q},{s}) -> ({nq},{ws},{mv})")
        for q in self.states:
            for s in ("0", "1"):
                if (q, s) not in self.delta:
                    raise ValueError(f"transition missing for ({q},{s}); must be total")

    @property
    def step_bound(self) -> int:
        return 1 << self.time_bits

    def state_index(self, q: str) -> int:
        return self.states.index(q)

    def to_dict(self) -> dict:
        return {
            "states": list(self.states),
            "q0": self.q0,
            "qa": self.qa,
            "qr": self.qr,
            "blank": self.blank,
            "delta": [
                {"from": [q, s], "to": list(t)}
                for (q, s), t in sorted(self.delta.items())
            ],
            "tape_cells": self.tape_cells,
            "time_bits": self.time_bits,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TMSpec":
        delta = {
            (row["from"][0], row["from"][1]): tuple(row["to"]) for row in d["delta"]
        }
        return cls(
            states=tuple(d["states"]),
            q0=d["q0"],
            qa=d["qa"],
            qr=d["qr"],
            delta=delta,  # type: ignore[arg-type]
            blank=d.get("blank", "0"),
            tape_cells=d.get("tape_cells", 2),
            time_bits=d.get("time_bits", 3),
        )

    @classmethod
    def from_json(cls, text: str) -> "TMSpec":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class MachineID:
    time: int
    state: str
    head: int
    tape: tuple[int, ...]


@dataclass
class RunResult:
    accepts: bool
    halted: bool
    timed_out: bool
    trace: list[MachineID]


def run_tm(tm: TMSpec, input_bits: str = "", step_cap: Optional[int] = None) -> RunResult:
    """Direct simulation.  The head wraps modulo the tape size, matching the
    binary address blocks of the encoding.  Hitting the step cap counts as a
    reject, reported distinctly via ``timed_out``."""
    if step_cap is None:
        step_cap = tm.step_bound
    if step_cap < 1:
        raise ValueError("step_cap must be >= 1")
    if len(input_bits) > tm.tape_cells:
        raise ValueError("input longer than the tape")
    tape = [0] * tm.tape_cells
    for i, ch in enumerate(input_bits):
        tape[i] = 1 if ch == "1" else 0
    state, head = tm.q0, 0
    trace = [MachineID(0, state, head, tuple(tape))]
    for t in range(1, step_cap + 1):
        if state in (tm.qa, tm.qr):
            break
        sym = str(tape[head])
        state, written, move = tm.delta[(state, sym)]
        tape[head] = 1 if written == "1" else 0
        head = (head + (1 if move == "R" else -1)) % tm.tape_cells
        trace.append(MachineID(t, state, head, tuple(tape)))
    halted = state in (tm.qa, tm.qr)
    return RunResult(
        accepts=halted and state == tm.qa,
        halted=halted,
        timed_out=not halted,
        trace=trace,
    )


# ---------------------------------------------------------------------------
# Tuple layout and the rule interpreter


@dataclass(frozen=True)
class IDTupleLayout:
    """Bit widths of the (time, state, head, cell, bit) tuples."""

    t_bits: int
    s_bits: int
    h_bits: int
    c_bits: int
    b_bits: int = 1

    @property
    def m(self) -> int:
        return self.t_bits + self.s_bits + self.h_bits + self.c_bits + self.b_bits

    def offsets(self) -> dict[str, int]:
        return {
            "T": 0,
            "S": self.t_bits,
            "H": self.t_bits + self.s_bits,
            "C": self.t_bits + self.s_bits + self.h_bits,
            "b": self.m - 1,
        }


def derive_layout(tm: TMSpec) -> IDTupleLayout:
    h_bits = max(1, (tm.tape_cells - 1).bit_length())
    layout = IDTupleLayout(
        t_bits=tm.time_bits,
        s_bits=len(tm.states),  # one-hot
        h_bits=h_bits,
        c_bits=h_bits,
    )
    if (1 << layout.h_bits) < tm.tape_cells:
        raise ValueError("head address block too narrow")
    if layout.m > MAX_TUPLE_BITS:
        raise ValueError(
            f"tuple width {layout.m} exceeds the desk-scale cap {MAX_TUPLE_BITS}"
        )
    return layout


# An integer machine tuple: (time, state index, head, cell, bit).
IntTuple = tuple[int, int, int, int, int]


def null_tuple(tm: TMSpec) -> IntTuple:
    return (0, tm.state_index(tm.q0), 0, 0, 0)


def rule_step(tm: TMSpec, layout: IDTupleLayout, t1: IntTuple, t2: IntTuple) -> IntTuple:
    """The three-rule transition on integer tuples; the circuit's oracle."""
    tmask = (1 << layout.t_bits) - 1
    hmask = (1 << layout.h_bits) - 1
    T1, S1, H1, C1, B1 = t1
    T2, S2, H2, C2, B2 = t2
    if T1 == T2 and H1 == C1:
        state = tm.states[S1]
        nq, ws, mv = tm.delta[(state, str(B1))]
        return (
            (T1 + 1) & tmask,
            tm.state_index(nq),
            (H1 + (1 if mv == "R" else -1)) & hmask,
            H1,
            1 if ws == "1" else 0,
        )
    if T1 == ((T2 + 1) & tmask) and H2 != C2:
        return (T1, S1, H1, C2, B2)
    return null_tuple(tm)


def encode_tuple(layout: IDTupleLayout, t: IntTuple) -> list[int]:
    """Big-endian bit image of an integer tuple; the state block is one-hot."""
    T, S, H, C, B = t
    bits: list[int] = []
    bits += [(T >> i) & 1 for i in range(layout.t_bits - 1, -1, -1)]
    bits += [1 if j == S else 0 for j in range(layout.s_bits)]
    bits += [(H >> i) & 1 for i in range(layout.h_bits - 1, -1, -1)]
    bits += [(C >> i) & 1 for i in range(layout.c_bits - 1, -1, -1)]
    bits.append(B)
    return bits


def decode_valid_tuple(layout: IDTupleLayout, bits: Sequence[int]) -> Optional[IntTuple]:
    """Inverse of `encode_tuple`; None when the state block is not one-hot."""
    if len(bits) != layout.m:
        raise ValueError("bad width")
    off = layout.offsets()

    def block(start: int, width: int) -> int:
        out = 0
        for i in range(width):
            out = (out << 1) | bits[start + i]
        return out

    sblock = bits[off["S"] : off["S"] + layout.s_bits]
    if sum(sblock) != 1:
        return None
    return (
        block(off["T"], layout.t_bits),
        sblock.index(1),
        block(off["H"], layout.h_bits),
        block(off["C"], layout.c_bits),
        bits[off["b"]],
    )


# ---------------------------------------------------------------------------
# The transition circuit


def build_transition_circuit(
    tm: TMSpec, layout: IDTupleLayout, expose_rules: bool = False
) -> CircuitSpec:
    """One circuit over two encoded tuples computing the next tuple.

    Rule selection: equal time stamps with head == cell in the first tuple
    computes a machine step; time stamps T+1/T with head != cell in the
    second copies the stale cell forward; everything else yields the null
    value (the initial configuration's code).  ``expose_rules`` appends the
    two selector wires as extra outputs for rule-dispatch tests.
    """
    if layout.s_bits != len(tm.states):
        raise ValueError("layout does not match the machine (one-hot states)")
    b = CircuitBuilder()

    def block(prefix: str, n: int) -> list[str]:
        return [b.input(f"{prefix}{i}") for i in range(n)]

    T1 = block("p_T", layout.t_bits)
    S1 = block("p_S", layout.s_bits)
    H1 = block("p_H", layout.h_bits)
    C1 = block("p_C", layout.c_bits)
    B1 = block("p_b", 1)[0]
    T2 = block("q_T", layout.t_bits)
    S2 = block("q_S", layout.s_bits)
    H2 = block("q_H", layout.h_bits)
    C2 = block("q_C", layout.c_bits)
    B2 = block("q_b", 1)[0]

    def xor(x: str, y: str) -> str:
        return b.or_(b.and_(x, b.not_(y)), b.and_(b.not_(x), y))

    def xnor(x: str, y: str) -> str:
        return b.not_(xor(x, y))

    def and_fold(ws: list[str]) -> str:
        out = ws[0]
        for w in ws[1:]:
            out = b.and_(out, w)
        return out

    def or_fold(ws: list[str]) -> str:
        if not ws:
            return b.const(False)
        out = ws[0]
        for w in ws[1:]:
            out = b.or_(out, w)
        return out

    def eq(xs: list[str], ys: list[str]) -> str:
        return and_fold([xnor(x, y) for x, y in zip(xs, ys)])

    def inc(xs: list[str]) -> list[str]:
        # big-endian ripple +1, overflow dropped
        out: list[str] = []
        carry = b.const(True)
        for x in reversed(xs):
            out.append(xor(x, carry))
            carry = b.and_(x, carry)
        eaten = b.and_(carry, b.const(False))  # consume the overflow wire
        out[-1] = b.or_(out[-1], eaten)
        out.reverse()
        return out

    def dec(xs: list[str]) -> list[str]:
        out: list[str] = []
        borrow = b.const(True)
        for x in reversed(xs):
            out.append(xor(x, borrow))
            borrow = b.and_(b.not_(x), borrow)
        eaten = b.and_(borrow, b.const(False))
        out[-1] = b.or_(out[-1], eaten)
        out.reverse()
        return out

    def mux(sel: str, ones: list[str], zeros: list[str]) -> list[str]:
        return [
            b.or_(b.and_(sel, x), b.and_(b.not_(sel), y)) for x, y in zip(ones, zeros)
        ]

    rule1 = b.and_(eq(T1, T2), eq(H1, C1))
    rule2 = b.and_(eq(T1, inc(T2)), b.not_(eq(H2, C2)))

    rows = sorted(tm.delta.items())  # ((state, sym), (next, write, move))
    fires = [
        b.and_(S1[tm.state_index(q)], B1 if s == "1" else b.not_(B1))
        for (q, s), _ in rows
    ]
    next_state = [
        or_fold([f for f, (_, (nq, _, _)) in zip(fires, rows) if nq == target])
        for target in tm.states
    ]
    writes = or_fold([f for f, (_, (_, ws, _)) in zip(fires, rows) if ws == "1"])
    move_right = or_fold([f for f, (_, (_, _, mv)) in zip(fires, rows) if mv == "R"])
    next_head = mux(move_right, inc(H1), dec(H1))

    rule1_out = inc(T1) + next_state + next_head + H1 + [writes]
    rule2_out = T1 + S1 + H1 + C2 + [B2]
    null_bits = encode_tuple(layout, null_tuple(tm))
    null_out = [b.const(bool(v)) for v in null_bits]

    # the second tuple's state block never matters; consume it neutrally
    eaten = b.and_(or_fold(S2), b.const(False))

    inner = mux(rule2, rule2_out, null_out)
    outs = mux(rule1, rule1_out, inner)
    outs[-1] = b.or_(outs[-1], eaten)
    if expose_rules:
        outs = outs + [rule1, rule2]
    return b.build(outs)


# ---------------------------------------------------------------------------
# Canonicalizing gate gadgets
#
# The textbook connectives rebuild their output pair out of the *input*
# Booleans' own pair constructors.  Under merged flows (many Booleans at one
# wire) that lets closure variants from every producer leak into every
# consumer, and the variant families compound across iteration rounds until
# the fixpoint is astronomically large.  The gate variants below behave
# identically but re-select their result from gate-local TT/FF copies, so
# each wire carries at most a handful of closures no matter how often the
# transition term is re-analyzed.  (Output = <x, x2> where x is selected by
# the answer rail p1 and x2 by the complement rail q1 packed with the usual
# garbage-disposal chain; the leftover complements y, y2 always compose to
# the swap, and one more swap makes the final selector the identity.)


def _canon_finish(nm: Names, p1: str, garbage: Expr) -> Expr:
    x, y = nm.fresh("cx"), nm.fresh("cy")
    x2, y2 = nm.fresh("cx"), nm.fresh("cy")
    out = app(
        _compose_chain([var(y), var(y2), _ff(nm)], nm),
        _pair(var(x), var(x2), nm),
    )
    stage2 = _letpair(x2, y2, app(garbage, _pair(_tt(nm), _ff(nm), nm)), out)
    return _letpair(x, y, app(var(p1), _pair(_tt(nm), _ff(nm), nm)), stage2)


def _canon_binary(selectors, nm: Names) -> Expr:
    b1, b2 = nm.fresh("b"), nm.fresh("b")
    u1, v1 = nm.fresh("u"), nm.fresh("v")
    u2, v2 = nm.fresh("u"), nm.fresh("v")
    p1, p2 = nm.fresh("p"), nm.fresh("q")
    q1, q2 = nm.fresh("p"), nm.fresh("q")
    first_sel, second_sel = selectors(u2, v2, nm)
    garbage = _compose_chain([var(q1), var(p2), var(q2), _ff(nm)], nm)
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
                _letpair(
                    q1, q2, app(var(v1), second_sel), _canon_finish(nm, p1, garbage)
                ),
            ),
        ),
    )
    return lam(b1, lam(b2, body))


def _canon_and(nm: Names) -> Expr:
    return _canon_binary(
        lambda u2, v2, n: (_pair(var(u2), _ff(n), n), _pair(_tt(n), var(v2), n)), nm
    )


def _canon_or(nm: Names) -> Expr:
    return _canon_binary(
        lambda u2, v2, n: (_pair(_tt(n), var(u2), n), _pair(var(v2), _ff(n), n)), nm
    )


def _canon_implies(nm: Names) -> Expr:
    return _canon_binary(
        lambda u2, v2, n: (_pair(var(u2), _tt(n), n), _pair(_ff(n), var(v2), n)), nm
    )


def _canon_not(nm: Names) -> Expr:
    b, u, v = nm.fresh("b"), nm.fresh("u"), nm.fresh("v")
    x, y = nm.fresh("cx"), nm.fresh("cy")
    x2, y2 = nm.fresh("cx"), nm.fresh("cy")
    out = app(
        _compose_chain([var(y), var(y2), _ff(nm)], nm),
        _pair(var(x), var(x2), nm),
    )
    stage2 = _letpair(x2, y2, app(var(v), _pair(_ff(nm), _tt(nm), nm)), out)
    stage1 = _letpair(x, y, app(var(u), _pair(_ff(nm), _tt(nm), nm)), stage2)
    return lam(b, _letpair(u, v, var(b), stage1))


_CANON_GADGETS = {
    "NOT": _canon_not,
    "AND": _canon_and,
    "OR": _canon_or,
    "IMPLIES": _canon_implies,
}


# ---------------------------------------------------------------------------
# Phi, the iterator, and the tuple family


def _phi(nm: Names, tm: TMSpec, layout: IDTupleLayout) -> Expr:
    circ = build_transition_circuit(tm, layout)
    m = layout.m
    p = nm.fresh("p")
    us = [nm.fresh("u") for _ in range(m)]
    vs = [nm.fresh("v") for _ in range(m)]
    # encoded bits carry inverted polarity (bit 0 = the True encoding), so
    # the circuit boundary negates on the way in and out
    wires: dict[str, Expr] = {}
    names_in = (
        [f"p_T{i}" for i in range(layout.t_bits)]
        + [f"p_S{i}" for i in range(layout.s_bits)]
        + [f"p_H{i}" for i in range(layout.h_bits)]
        + [f"p_C{i}" for i in range(layout.c_bits)]
        + ["p_b0"]
    )
    names_in2 = [n.replace("p_", "q_", 1) for n in names_in]
    for name, u in zip(names_in, us):
        wires[name] = app(_canon_not(nm), var(u))
    for name, v in zip(names_in2, vs):
        wires[name] = app(_canon_not(nm), var(v))

    def repack(outs: list[Expr]) -> Expr:
        zs = [nm.fresh("t") for _ in range(m)]
        body = _tuple([var(z) for z in zs], nm)
        for z, o in zip(reversed(zs), reversed(outs)):
            body = app(lam(z, body), app(_canon_not(nm), o))
        return body

    core = circuit_to_expr(circ, wires, nm, repack, gadget_map=_CANON_GADGETS)
    k2: Expr = core
    for v in reversed(vs):
        k2 = lam(v, k2)
    k1: Expr = app(var(p), k2)
    for u in reversed(us):
        k1 = lam(u, k1)
    return lam(p, app(var(p), k1))


def build_phi(tm: TMSpec, layout: Optional[IDTupleLayout] = None) -> Expr:
    """The transition term: applies the machine-step circuit to the cross
    product of tuples flowing into its parameter (the only nonlinearity)."""
    if layout is None:
        layout = derive_layout(tm)
    return deepcall(lambda: assign_labels(_phi(Names(), tm, layout)))


def _two(nm: Names) -> Expr:
    s, z = nm.fresh("s"), nm.fresh("z")
    return lam(s, lam(z, app(var(s), app(var(s), var(z)))))


def _y(nm: Names) -> Expr:
    f, x1, x2 = nm.fresh("f"), nm.fresh("x"), nm.fresh("x")
    half1 = lam(x1, app(var(f), app(var(x1), var(x1))))
    half2 = lam(x2, app(var(f), app(var(x2), var(x2))))
    return lam(f, app(half1, half2))


def _iterator(nm: Names, n: int, mode: str) -> Expr:
    if mode == "y":
        return _y(nm)
    if mode != "composer":
        raise ValueError("iterator mode is 'composer' or 'y'")
    if n < 1:
        raise ValueError("iterator needs n >= 1")
    out = _two(nm)
    for _ in range(n - 1):
        out = app(_two(nm), out)
    return out


def build_iterator(n: int, mode: str = "composer") -> Expr:
    """Either the 2^n-fold function composer or the fixpoint combinator.

    The composer keeps generated programs normalizing, so the exact
    evaluator stays usable as an oracle on small instances; the combinator
    variant is analysis-only.
    """
    return assign_labels(_iterator(Names(), n, mode))


@dataclass(frozen=True)
class TupleFamilyHandle:
    term: Expr
    n: int
    k: int
    padded_label: str  # outermost padding application
    merge_var: str  # identity parameter whose binding collects every tuple
    merge_occ_label: str  # its occurrence inside the padding
    merge_contour: Contour
    tuple_lam_label: str
    z_names: tuple[str, ...]


def _pad(term: Expr, k: int, nm: Names, prefix: str) -> tuple[Expr, str, str, Contour]:
    """k nested identity calls so the innermost binding contour is constant."""
    if k < 1:
        raise ValueError("padding needs k >= 1")
    pads = [nm.fresh("pad") for _ in range(k)]
    body = var(pads[k - 1], label=f"{prefix}PV{k}")
    for j in range(k - 1, 0, -1):
        body = app(
            lam(pads[j], body), var(pads[j - 1], label=f"{prefix}PV{j}"),
            label=f"{prefix}PAD{j + 1}",
        )
    out = app(lam(pads[0], body), term, label=f"{prefix}PAD1")
    contour = tuple(f"{prefix}PAD{j}" for j in range(1, k + 1))
    return out, pads[k - 1], f"{prefix}PV{k}", contour


def _two_way_level(
    nm: Names, f: str, operand: Expr, zero_label: str, one_label: str
) -> Expr:
    """(\\f. park (f Zero) (f One)) operand: call the continuation once per
    constant, parking both results in dead binders.

    Juxtaposing the two calls as one application (the compact display form)
    would additionally apply every result closure to every other, and that
    garbage cross-product dominates analysis cost without contributing any
    flow at the observed locations; the parked form keeps exactly the two
    bindings per level.
    """
    d1, d2, e = nm.fresh("d"), nm.fresh("d"), nm.fresh("e")
    done = lam(e, var(e))
    level = app(
        lam(d1, app(lam(d2, done), app(var(f), _false(nm), label=one_label))),
        app(var(f), _true(nm), label=zero_label),
    )
    return app(lam(f, level), operand)


def gen_tuple_family(N: int, k: int = 1, prefix: str = "") -> TupleFamilyHandle:
    """The closure-explosion family: N two-way binders around one padded tuple.

    Each level applies its continuation at a zero site and a one site, so the
    tuple term is reached under 2^N distinct environments; the padding pins
    the tuple's binding to one contour of length k, merging all of them into
    a single analysis location while the exact cache keeps them apart.
    """
    if not 1 <= N <= 16:
        raise ValueError("N out of desk-scale range 1..16")
    nm = Names()
    zs = [nm.fresh("z") for _ in range(N)]
    tuple_term = Expr(_tuple([var(z) for z in zs], nm).term, prefix + "TUP")
    padded, merge_var, merge_occ, contour = _pad(tuple_term, k, nm, prefix)
    body = padded
    for i in range(N, 0, -1):
        f = nm.fresh("f")
        body = _two_way_level(
            nm, f, lam(zs[i - 1], body), f"{prefix}C{i}", f"{prefix}D{i}"
        )
    term = assign_labels(body)
    return TupleFamilyHandle(
        term=term,
        n=N,
        k=k,
        padded_label=f"{prefix}PAD1",
        merge_var=merge_var,
        merge_occ_label=merge_occ,
        merge_contour=contour,
        tuple_lam_label=prefix + "TUP",
        z_names=tuple(zs),
    )


# ---------------------------------------------------------------------------
# The full machine term


def _extract(nm: Names, tm: TMSpec, layout: IDTupleLayout) -> Expr:
    """Project the accept-state bit out of a tuple and return it as a Boolean.

    Halt states are absorbing, so the final configuration's state block is
    stable and the time stamp can be ignored; with one-hot states the
    comparison against the accept code is the accept bit itself.  The bit
    carries inverted polarity, hence the negation.  All other components are
    discarded (this extractor, like the Widget, is deliberately affine).
    """
    qa_pos = layout.t_bits + tm.state_index(tm.qa)
    t = nm.fresh("t")
    ss = [nm.fresh("s") for _ in range(layout.m)]
    body: Expr = app(_canon_not(nm), var(ss[qa_pos]))
    k: Expr = body
    for s in reversed(ss):
        k = lam(s, k)
    return lam(t, app(var(t), k))


def build_tm_term(
    tm: TMSpec,
    input_bits: str = "",
    k: int = 1,
    iterator: str = "composer",
    prefix: str = "",
) -> tuple[Expr, WidgetHandle]:
    """The whole simulation program: binder chain enumerating the initial
    cells, iterated transition term, extractor, Widget, and padding.

    The initial tape is all zeroes (machines write their own input first);
    a nonzero ``input_bits`` is rejected.  ``k`` controls how much padding
    keeps the observation contour constant.
    """
    if any(ch == "1" for ch in input_bits):
        raise ValueError(
            "initial tape must be all zeroes; encode the input in the machine"
        )
    return deepcall(_build_tm_term, tm, k, iterator, prefix)


def _build_tm_term(
    tm: TMSpec, k: int, iterator: str, prefix: str
) -> tuple[Expr, WidgetHandle]:
    layout = derive_layout(tm)
    nm = Names()
    phi = _phi(nm, tm, layout)
    iter_term = _iterator(nm, tm.time_bits, iterator)

    zs = [nm.fresh("z") for _ in range(layout.c_bits)]
    components: list[Expr] = []
    components += [_true(nm) for _ in range(layout.t_bits)]  # time zero
    for j in range(layout.s_bits):  # one-hot start state
        components.append(_false(nm) if j == tm.state_index(tm.q0) else _true(nm))
    components += [_true(nm) for _ in range(layout.h_bits)]  # head at zero
    components += [var(z) for z in zs]  # enumerated cell address
    components.append(_true(nm))  # blank tape bit
    init = Expr(_tuple(components, nm).term, prefix + "INIT")

    core = app(app(iter_term, phi), init)
    widget_term, wh = _widget(nm, prefix)
    observed = app(
        widget_term,
        app(_extract(nm, tm, layout), core, label=prefix + "EX"),
        label=prefix + "WAPP",
    )
    padded, _, _, _ = _pad(observed, k, nm, prefix)

    body = padded
    for i in range(layout.c_bits, 0, -1):
        f = nm.fresh("f")
        body = _two_way_level(
            nm, f, lam(zs[i - 1], body), f"{prefix}C{i}", f"{prefix}D{i}"
        )

    term = assign_labels(body)
    return term, replace(wh, widget_app_label=prefix + "WAPP")


# ---------------------------------------------------------------------------
# Corpus machines


def five_machines() -> dict[str, TMSpec]:
    """The standard desk-scale corpus: two immediate halts, a write-and-test,
    a shuttle that bounces across two cells, and a tape-parity scanner."""

    def tm(states, q0, qa, qr, rows, cells=2, tbits=3):
        return TMSpec(
            states=tuple(states),
            q0=q0,
            qa=qa,
            qr=qr,
            delta={(q, s): t for (q, s), t in rows.items()},
            tape_cells=cells,
            time_bits=tbits,
        )

    halt_accept = tm(
        ["q0", "qa", "qr"],
        "q0",
        "qa",
        "qr",
        {("q0", "0"): ("qa", "0", "R"), ("q0", "1"): ("qa", "1", "R")},
    )
    halt_reject = tm(
        ["q0", "qa", "qr"],
        "q0",
        "qa",
        "qr",
        {("q0", "0"): ("qr", "0", "R"), ("q0", "1"): ("qr", "1", "R")},
    )
    # write a one, shuttle back, accept iff it reads the one
    write_then_branch = tm(
        ["q0", "q1", "q2", "qa", "qr"],
        "q0",
        "qa",
        "qr",
        {
            ("q0", "0"): ("q1", "1", "R"),
            ("q0", "1"): ("qr", "1", "R"),
            ("q1", "0"): ("q2", "0", "L"),
            ("q1", "1"): ("qr", "1", "R"),
            ("q2", "1"): ("qa", "1", "R"),
            ("q2", "0"): ("qr", "0", "R"),
        },
    )
    # bounce right-left-right over two blank cells, then give up
    shuttle = tm(
        ["q0", "q1", "q2", "q3", "qa", "qr"],
        "q0",
        "qa",
        "qr",
        {
            ("q0", "0"): ("q1", "0", "R"),
            ("q0", "1"): ("qr", "1", "R"),
            ("q1", "0"): ("q2", "0", "L"),
            ("q1", "1"): ("qr", "1", "R"),
            ("q2", "0"): ("q3", "0", "R"),
            ("q2", "1"): ("qr", "1", "R"),
            ("q3", "0"): ("qr", "0", "R"),
            ("q3", "1"): ("qr", "1", "R"),
        },
    )
    # exclusive-or of the two tape cells decides acceptance
    parity = tm(
        ["q0", "qe", "qo", "qa", "qr"],
        "q0",
        "qa",
        "qr",
        {
            ("q0", "0"): ("qe", "0", "R"),
            ("q0", "1"): ("qo", "1", "R"),
            ("qe", "0"): ("qr", "0", "R"),
            ("qe", "1"): ("qa", "1", "R"),
            ("qo", "0"): ("qa", "0", "R"),
            ("qo", "1"): ("qr", "1", "R"),
        },
    )
    return {
        "halt_accept": halt_accept,
        "halt_reject": halt_reject,
        "write_then_branch": write_then_branch,
        "shuttle": shuttle,
        "parity": parity,
    }


def overapproximation_witness() -> TMSpec:
    """A rejecting machine whose analysis still lets the accept closure flow.

    It writes a one, erases it, and then branches on the cell it just
    cleared.  The analysis merges "a one was on the tape at some point" with
    "the tested cell holds a one now", so the accept branch is explored even
    though no concrete run takes it: the canonical spurious-flow boundary of
    the monotone approximation.
    """
    return TMSpec(
        states=("q0", "q1", "q2", "q3", "q4", "qa", "qr"),
        q0="q0",
        qa="qa",
        qr="qr",
        delta={
            ("q0", "0"): ("q1", "1", "R"),  # write the one
            ("q0", "1"): ("qr", "1", "R"),
            ("q1", "0"): ("q2", "0", "L"),  # come back
            ("q1", "1"): ("qr", "1", "R"),
            ("q2", "1"): ("q3", "0", "R"),  # erase it
            ("q2", "0"): ("qr", "0", "R"),
            ("q3", "0"): ("q4", "0", "L"),  # come back again
            ("q3", "1"): ("qr", "1", "R"),
            ("q4", "1"): ("qa", "1", "R"),  # accept iff the one survived
            ("q4", "0"): ("qr", "0", "R"),
        },
        tape_cells=2,
        time_bits=3,
    )


# ---------------------------------------------------------------------------
# Reading tuples back out of caches


def decode_tuple_closure(clo: Closure, lookup) -> Optional[list[set[int]]]:
    """Per-position bit sets of a tuple closure, via the cache.

    Variable components read their binding; literal Boolean components decode
    directly.  Returns None when the closure is not tuple-shaped.
    """
    parts = tuple_parts(clo.term)
    if parts is None:
        return None
    out: list[set[int]] = []
    for part in parts:
        t = part.term
        bits: set[int] = set()
        if isinstance(t, Var):
            from .exact import env_lookup

            contour = env_lookup(clo.env, t.name)
            for value in lookup(t.name, contour):
                for truth in decode_bool_closure(value, lookup):
                    bits.add(0 if truth else 1)
        elif isinstance(t, Lam):
            probe = Closure(part, ())
            for truth in decode_bool_closure(probe, lookup):
                bits.add(0 if truth else 1)
        out.append(bits)
    return out
