"""Instrumented exact evaluation.

Evaluates a closed program call-by-value while recording every flow into a
cache keyed by (label-or-variable, contour).  A contour is the sequence of
application labels describing the dynamic context; environments map each
variable to the contour at which it was bound, and values are closures of a
lambda node over such an environment.

The evaluator's three clauses:

    variable x^l     : cache(l, d) <- cache(x, ce(x))
    lambda (\\x.e)^l  : cache(l, d) <- <(\\x.e), ce restricted to fv>
    application
      (t1^l1 t2^l2)^l: evaluate t1 then t2 at d;
                       let <(\\x.e0^l0), ce'> = cache(l1, d);
                       cache(x, d.l) <- cache(l2, d);
                       evaluate e0 under ce'[x -> d.l] at contour d.l;
                       cache(l, d) <- cache(l0, d.l)

Acceptability (`check_exact_acceptable`) re-states the same clauses as
equations over a given cache; in-progress judgments are assumed to hold, the
coinductive reading.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from ._util import deepcall
from .syntax import App, Expr, Lam, ProgramIndex, Var, unparse

__all__ = [
    "LABEL",
    "VAR",
    "Contour",
    "EPSILON",
    "contour_str",
    "parse_contour",
    "Env",
    "EMPTY_ENV",
    "env_lookup",
    "env_bind",
    "env_restrict",
    "env_dict",
    "Closure",
    "CacheKey",
    "Fuel",
    "FuelExhausted",
    "StuckApplication",
    "ExactCache",
    "eval_exact",
    "exact_lookup",
    "check_exact_acceptable",
    "CheckResult",
]

LABEL = "label"
VAR = "var"

# A contour is a tuple of application labels, oldest first; the empty tuple
# is the top-level contour (printed as the empty string).
Contour = tuple[str, ...]
EPSILON: Contour = ()


def contour_str(c: Contour) -> str:
    return ".".join(c)


def parse_contour(s: str) -> Contour:
    return tuple(s.split(".")) if s else ()


# Environments are sorted tuples of (name, contour): hashable, and
# restriction preserves sortedness.
Env = tuple[tuple[str, Contour], ...]
EMPTY_ENV: Env = ()


def env_lookup(env: Env, name: str) -> Contour:
    for n, c in env:
        if n == name:
            return c
    raise KeyError(name)


def env_bind(env: Env, name: str, contour: Contour) -> Env:
    out = [(n, c) for n, c in env if n != name]
    out.append((name, contour))
    out.sort()
    return tuple(out)


def env_restrict(env: Env, names: frozenset[str]) -> Env:
    return tuple((n, c) for n, c in env if n in names)


def env_dict(env: Env) -> dict[str, str]:
    return {n: contour_str(c) for n, c in env}


class Closure:
    """A lambda node closed over a contour environment for its free variables.

    Equality and hashing go by (lambda label, environment): labels are unique
    within a program, so this is structural equality there, and it stays
    cheap on deep terms.
    """

    __slots__ = ("term", "env", "_hash")

    def __init__(self, term: Expr, env: Env) -> None:
        if not isinstance(term.term, Lam):
            raise ValueError("closure over a non-lambda term")
        self.term = term
        self.env = env
        self._hash = hash((term.label, env))

    @property
    def lam_label(self) -> str:
        return self.term.label  # type: ignore[return-value]

    @property
    def param(self) -> str:
        return self.term.term.param  # type: ignore[union-attr]

    @property
    def body(self) -> Expr:
        return self.term.term.body  # type: ignore[union-attr]

    def sort_key(self) -> tuple:
        return (self.lam_label, self.env)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Closure)
            and self.term.label == other.term.label
            and self.env == other.env
        )

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        env = ", ".join(f"{n}:{contour_str(c)}" for n, c in self.env)
        return f"<{unparse(self.term)} | {env}>"


# Cache keys: ("label"|"var", name, contour).
CacheKey = tuple[str, str, Contour]


@dataclass
class Fuel:
    """Budget of evaluator clause invocations; exhaustion aborts the run."""

    steps: int = 1_000_000


class FuelExhausted(RuntimeError):
    pass


class StuckApplication(RuntimeError):
    """Operator position held no closure: impossible for closed programs."""


@dataclass
class ExactCache:
    """Write-once flow record of one terminating evaluation."""

    entries: dict[CacheKey, Closure] = field(default_factory=dict)

    def lookup(
        self, key: str, contour: Contour, kind: Optional[str] = None
    ) -> Optional[Closure]:
        if kind is not None:
            return self.entries.get((kind, key, contour))
        as_var = self.entries.get((VAR, key, contour))
        as_label = self.entries.get((LABEL, key, contour))
        if as_var is not None and as_label is not None:
            raise ValueError(f"key {key!r} is both a label and a variable; pass kind")
        return as_var if as_var is not None else as_label

    def max_contour_depth(self) -> int:
        return max((len(k[2]) for k in self.entries), default=0)

    def __len__(self) -> int:
        return len(self.entries)


def eval_exact(program: Expr, fuel: Optional[Fuel] = None) -> ExactCache:
    """Run the instrumented evaluator from the empty environment and contour."""
    return deepcall(_eval_exact, program, fuel or Fuel())


def _eval_exact(program: Expr, fuel: Fuel) -> ExactCache:
    index = ProgramIndex.of(program)
    if index.fv_of[program.label]:
        raise ValueError(
            f"program must be closed; free: {sorted(index.fv_of[program.label])}"
        )
    entries: dict[CacheKey, Closure] = {}
    fv_of = index.fv_of
    steps = fuel.steps

    def write(key: CacheKey, value: Closure) -> None:
        old = entries.get(key)
        assert old is None or old == value, f"cache key {key} rebound"
        entries[key] = value

    def ev(e: Expr, ce: Env, delta: Contour) -> None:
        nonlocal steps
        if steps <= 0:
            raise FuelExhausted(
                f"evaluation did not finish within {fuel.steps} steps"
            )
        steps -= 1
        t = e.term
        if isinstance(t, Var):
            value = entries.get((VAR, t.name, env_lookup(ce, t.name)))
            if value is None:
                raise StuckApplication(
                    f"internal error: unbound variable {t.name!r} at runtime"
                )
            write((LABEL, e.label, delta), value)
        elif isinstance(t, Lam):
            write((LABEL, e.label, delta), Closure(e, env_restrict(ce, fv_of[e.label])))
        else:
            ev(t.operator, ce, delta)
            ev(t.operand, ce, delta)
            operator_value = entries.get((LABEL, t.operator.label, delta))
            if operator_value is None:
                raise StuckApplication(
                    f"no closure in operator position at label {e.label}"
                )
            extended = delta + (e.label,)
            write(
                (VAR, operator_value.param, extended),
                entries[(LABEL, t.operand.label, delta)],
            )
            body = operator_value.body
            ev(body, env_bind(operator_value.env, operator_value.param, extended), extended)
            write((LABEL, e.label, delta), entries[(LABEL, body.label, extended)])

    ev(program, EMPTY_ENV, EPSILON)
    return ExactCache(entries)


def exact_lookup(
    cache: ExactCache, key: str, contour: Union[Contour, str], kind: Optional[str] = None
) -> Optional[Closure]:
    """Exact cache lookup; returns None when absent, never guesses."""
    if isinstance(contour, str):
        contour = parse_contour(contour)
    return cache.lookup(key, contour, kind)


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    reason: Optional[str] = None

    def __bool__(self) -> bool:
        return self.ok


def check_exact_acceptable(cache: ExactCache, program: Expr) -> CheckResult:
    """Decide whether ``cache`` records all flows of ``program``."""
    return deepcall(_check_exact, cache, program)


def _check_exact(cache: ExactCache, program: Expr) -> CheckResult:
    index = ProgramIndex.of(program)
    fv_of = index.fv_of
    entries = cache.entries
    done: set[tuple] = set()
    active: set[tuple] = set()

    def fail(e: Expr, delta: Contour, what: str) -> CheckResult:
        shown = contour_str(delta) or "<empty>"
        return CheckResult(False, f"{what} at label {e.label}, contour {shown}")

    def chk(e: Expr, ce: Env, delta: Contour) -> Optional[CheckResult]:
        key = (e.label, ce, delta)
        if key in done or key in active:
            return None
        active.add(key)
        try:
            t = e.term
            if isinstance(t, Var):
                bound = entries.get((VAR, t.name, env_lookup(ce, t.name)))
                here = entries.get((LABEL, e.label, delta))
                if bound is None or bound != here:
                    return fail(e, delta, "variable clause mismatch")
            elif isinstance(t, Lam):
                expected = Closure(e, env_restrict(ce, fv_of[e.label]))
                if entries.get((LABEL, e.label, delta)) != expected:
                    return fail(e, delta, "abstraction clause mismatch")
            else:
                bad = chk(t.operator, ce, delta)
                if bad is not None:
                    return bad
                bad = chk(t.operand, ce, delta)
                if bad is not None:
                    return bad
                operator_value = entries.get((LABEL, t.operator.label, delta))
                if operator_value is None:
                    return fail(e, delta, "operator value missing")
                extended = delta + (e.label,)
                operand_value = entries.get((LABEL, t.operand.label, delta))
                bound = entries.get((VAR, operator_value.param, extended))
                if operand_value is None or operand_value != bound:
                    return fail(e, delta, "argument binding mismatch")
                body = operator_value.body
                bad = chk(
                    body,
                    env_bind(operator_value.env, operator_value.param, extended),
                    extended,
                )
                if bad is not None:
                    return bad
                if entries.get((LABEL, body.label, extended)) != entries.get(
                    (LABEL, e.label, delta)
                ):
                    return fail(e, delta, "result copy mismatch")
        finally:
            active.discard(key)
        done.add(key)
        return None

    bad = chk(program, EMPTY_ENV, EPSILON)
    return CheckResult(True) if bad is None else bad


def closures(cache: ExactCache) -> Iterable[Closure]:
    return cache.entries.values()
