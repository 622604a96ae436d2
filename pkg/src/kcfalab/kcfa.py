"""The k-level control-flow analysis: abstract interpreter, fixpoint, queries.

The abstract interpreter mirrors the exact one but stores *sets* of closures
and truncates every freshly extended contour to its rightmost k labels.  At
an application every operator closure is applied to the whole operand set.
The cache is computed as the least fixpoint of a structural pass, repeated
until nothing grows; within one pass a judgment (term, environment, contour)
already visited is skipped, the algorithmic form of the coinductive guard in
the acceptability relation.

This is the *uniform* flavor of the analysis: one table keyed by
(label-or-variable, contour).  With k = 0 all contours collapse to the empty
string and the analysis degenerates to the monovariant one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from ._util import deepcall
from .exact import (
    EMPTY_ENV,
    EPSILON,
    LABEL,
    VAR,
    CacheKey,
    CheckResult,
    Closure,
    Contour,
    Env,
    ExactCache,
    contour_str,
    env_bind,
    env_lookup,
    env_restrict,
    parse_contour,
)
from .syntax import App, Expr, Lam, ProgramIndex, Var

__all__ = [
    "AbstractCache",
    "AnalysisStats",
    "FlowQuery",
    "ClosurePattern",
    "BudgetExhausted",
    "truncate",
    "truncate_env",
    "truncate_closure",
    "analyze",
    "abstract_lookup",
    "decide_cfp",
    "check_acceptable",
    "abstract_of_exact",
    "truncate_cache",
    "cache_stats",
    "caches_equal",
    "cache_subset",
]

# Value sets are insertion-ordered (dict keyed by closure): iteration order is
# then a pure function of the analysis, independent of hash randomization,
# which keeps runs byte-for-byte reproducible.
ValSet = dict[Closure, None]


def truncate(delta: Contour, k: int) -> Contour:
    """The rightmost (most recent) k labels of ``delta``."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k == 0:
        return EPSILON
    return delta[-k:]


def truncate_env(env: Env, k: int) -> Env:
    return tuple((n, truncate(c, k)) for n, c in env)


def truncate_closure(clo: Closure, k: int) -> Closure:
    return Closure(clo.term, truncate_env(clo.env, k))


class BudgetExhausted(RuntimeError):
    pass


@dataclass
class AnalysisStats:
    iterations: int = 0
    cache_keys: int = 0
    total_closures: int = 0
    max_set: int = 0


@dataclass
class AbstractCache:
    """Monotone table from (label-or-variable, contour) to closure sets."""

    k: int
    entries: dict[CacheKey, ValSet] = field(default_factory=dict)

    def lookup(
        self, key: str, contour: Contour, kind: Optional[str] = None
    ) -> tuple[Closure, ...]:
        if kind is None:
            as_var = self.entries.get((VAR, key, contour))
            as_label = self.entries.get((LABEL, key, contour))
            if as_var and as_label:
                raise ValueError(
                    f"key {key!r} is both a label and a variable; pass kind"
                )
            found = as_var if as_var else as_label
        else:
            found = self.entries.get((kind, key, contour))
        return tuple(found) if found else ()

    def closures_at(self, key: str, kind: str = LABEL) -> tuple[Closure, ...]:
        """Union of value sets at ``key`` over all contours, insertion order."""
        out: ValSet = {}
        for (knd, name, _contour), vals in self.entries.items():
            if knd == kind and name == key:
                for c in vals:
                    out[c] = None
        return tuple(out)

    def contours_at(self, key: str, kind: str = LABEL) -> tuple[Contour, ...]:
        return tuple(
            contour
            for (knd, name, contour) in self.entries
            if knd == kind and name == key
        )

    def total_closures(self) -> int:
        return sum(len(v) for v in self.entries.values())


def analyze(
    program: Expr, k: int, budget: Optional[int] = None
) -> tuple[AbstractCache, AnalysisStats]:
    """Least acceptable analysis of a closed program at contour depth ``k``.

    ``budget`` caps the number of outer fixpoint passes; the domain is finite
    so the cap only matters as a guard against implementation bugs.
    """
    return deepcall(_analyze, program, k, budget)


def _analyze(program: Expr, k: int, budget: Optional[int]) -> tuple[AbstractCache, AnalysisStats]:
    if k < 0:
        raise ValueError("k must be nonnegative")
    index = ProgramIndex.of(program)
    if index.fv_of[program.label]:
        raise ValueError(
            f"program must be closed; free: {sorted(index.fv_of[program.label])}"
        )
    fv_of = index.fv_of
    entries: dict[CacheKey, ValSet] = {}
    size = 0
    max_passes = budget if budget is not None else 10_000

    def add(key: CacheKey, closures: Iterable[Closure]) -> None:
        nonlocal size
        dest = entries.get(key)
        if dest is None:
            dest = entries[key] = {}
        for c in closures:
            if c not in dest:
                dest[c] = None
                size += 1

    def visit(e: Expr, ce: Env, delta: Contour, seen: set) -> None:
        guard = (e.label, ce, delta)
        if guard in seen:
            return
        seen.add(guard)
        t = e.term
        if isinstance(t, Var):
            source = entries.get((VAR, t.name, env_lookup(ce, t.name)))
            if source:
                add((LABEL, e.label, delta), list(source))
        elif isinstance(t, Lam):
            add(
                (LABEL, e.label, delta),
                (Closure(e, env_restrict(ce, fv_of[e.label])),),
            )
        else:
            visit(t.operator, ce, delta, seen)
            visit(t.operand, ce, delta, seen)
            operators = entries.get((LABEL, t.operator.label, delta))
            if not operators:
                return
            extended = truncate(delta + (e.label,), k)
            for clo in list(operators):
                operands = entries.get((LABEL, t.operand.label, delta))
                if operands:
                    add((VAR, clo.param, extended), list(operands))
                visit(clo.body, env_bind(clo.env, clo.param, extended), extended, seen)
                result = entries.get((LABEL, clo.body.label, extended))
                if result:
                    add((LABEL, e.label, delta), list(result))

    passes = 0
    while True:
        passes += 1
        if passes > max_passes:
            raise BudgetExhausted(f"no fixpoint within {max_passes} passes")
        before = size
        visit(program, EMPTY_ENV, EPSILON, set())
        if size == before:
            break

    cache = AbstractCache(k, entries)
    stats = cache_stats(cache, iterations=passes)
    return cache, stats


def abstract_lookup(
    cache: AbstractCache,
    key: str,
    contour: Union[Contour, str],
    kind: Optional[str] = None,
) -> tuple[Closure, ...]:
    """The stored closure set, or empty."""
    if isinstance(contour, str):
        contour = parse_contour(contour)
    if len(contour) > cache.k:
        raise ValueError(f"contour longer than k={cache.k}")
    return cache.lookup(key, contour, kind)


@dataclass(frozen=True)
class ClosurePattern:
    """Matches closures by lambda label, optionally pinning environment entries."""

    lam_label: str
    env: Optional[Env] = None

    def matches(self, clo: Closure) -> bool:
        if clo.lam_label != self.lam_label:
            return False
        if self.env is not None:
            have = dict(clo.env)
            for name, contour in self.env:
                if have.get(name) != contour:
                    return False
        return True


@dataclass(frozen=True)
class FlowQuery:
    """One control-flow question: does a matching closure reach (key, contour)?

    ``contour=None`` asks at every contour of the key (the common case for
    label-only questions at k >= 1, where the interesting location is reached
    under several outer contexts).
    """

    key: str
    pattern: ClosurePattern
    contour: Optional[Contour] = None
    kind: str = LABEL


def decide_cfp(
    program: Expr,
    k: int,
    query: FlowQuery,
    cache: Optional[AbstractCache] = None,
) -> bool:
    """Decide the control-flow problem instance ``query`` for ``program``."""
    index = ProgramIndex.of(program)
    if query.kind == LABEL:
        if query.key not in index.node_of:
            raise ValueError(f"unknown label {query.key!r}")
    elif query.key not in index.binder_of:
        raise ValueError(f"unknown variable {query.key!r}")
    lam_node = index.node_of.get(query.pattern.lam_label)
    if lam_node is None or not isinstance(lam_node.term, Lam):
        raise ValueError(
            f"pattern label {query.pattern.lam_label!r} is not a lambda of the program"
        )
    if query.contour is not None and len(query.contour) > k:
        raise ValueError(f"query contour longer than k={k}")
    if cache is None:
        cache, _ = analyze(program, k)
    if query.contour is None:
        candidates = cache.closures_at(query.key, query.kind)
    else:
        candidates = cache.lookup(query.key, query.contour, query.kind)
    return any(query.pattern.matches(c) for c in candidates)


def check_acceptable(cache: AbstractCache, program: Expr, k: int) -> CheckResult:
    """Decide whether ``cache`` is an acceptable k-level analysis of ``program``."""
    return deepcall(_check_abstract, cache, program, k)


def _check_abstract(cache: AbstractCache, program: Expr, k: int) -> CheckResult:
    index = ProgramIndex.of(program)
    fv_of = index.fv_of
    entries = cache.entries
    done: set[tuple] = set()
    active: set[tuple] = set()

    def get(key: CacheKey) -> ValSet:
        return entries.get(key) or {}

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
                have = get((LABEL, e.label, delta))
                for c in get((VAR, t.name, env_lookup(ce, t.name))):
                    if c not in have:
                        return fail(e, delta, "variable clause not subsumed")
            elif isinstance(t, Lam):
                expected = Closure(e, env_restrict(ce, fv_of[e.label]))
                if expected not in get((LABEL, e.label, delta)):
                    return fail(e, delta, "abstraction closure missing")
            else:
                bad = chk(t.operator, ce, delta)
                if bad is not None:
                    return bad
                bad = chk(t.operand, ce, delta)
                if bad is not None:
                    return bad
                extended = truncate(delta + (e.label,), k)
                here = get((LABEL, e.label, delta))
                operands = get((LABEL, t.operand.label, delta))
                for clo in list(get((LABEL, t.operator.label, delta))):
                    bound = get((VAR, clo.param, extended))
                    for c in operands:
                        if c not in bound:
                            return fail(e, delta, "argument flow not subsumed")
                    bad = chk(
                        clo.body, env_bind(clo.env, clo.param, extended), extended
                    )
                    if bad is not None:
                        return bad
                    for c in get((LABEL, clo.body.label, extended)):
                        if c not in here:
                            return fail(e, delta, "result flow not subsumed")
        finally:
            active.discard(key)
        done.add(key)
        return None

    bad = chk(program, EMPTY_ENV, EPSILON)
    return CheckResult(True) if bad is None else bad


def abstract_of_exact(cache: ExactCache, k: int) -> AbstractCache:
    """Truncation image of an exact cache: the abstraction map into depth k."""
    out: dict[CacheKey, ValSet] = {}
    for (kind, name, contour), clo in cache.entries.items():
        key = (kind, name, truncate(contour, k))
        out.setdefault(key, {})[truncate_closure(clo, k)] = None
    return AbstractCache(k, out)


def truncate_cache(cache: AbstractCache, k: int) -> AbstractCache:
    """Re-truncate an abstract cache to a smaller depth ``k``."""
    if k > cache.k:
        raise ValueError("can only truncate to a smaller or equal k")
    out: dict[CacheKey, ValSet] = {}
    for (kind, name, contour), vals in cache.entries.items():
        key = (kind, name, truncate(contour, k))
        dest = out.setdefault(key, {})
        for clo in vals:
            dest[truncate_closure(clo, k)] = None
    return AbstractCache(k, out)


def cache_stats(cache: AbstractCache, iterations: int = 0) -> AnalysisStats:
    sizes = [len(v) for v in cache.entries.values()]
    return AnalysisStats(
        iterations=iterations,
        cache_keys=len(cache.entries),
        total_closures=sum(sizes),
        max_set=max(sizes, default=0),
    )


def _normalize(cache: AbstractCache) -> dict[CacheKey, frozenset]:
    return {
        key: frozenset((c.lam_label, c.env) for c in vals)
        for key, vals in cache.entries.items()
        if vals
    }


def caches_equal(a: AbstractCache, b: AbstractCache) -> bool:
    return _normalize(a) == _normalize(b)


def cache_subset(a: AbstractCache, b: AbstractCache) -> bool:
    """Pointwise containment of value sets, key by key."""
    nb = _normalize(b)
    for key, vals in _normalize(a).items():
        if not vals <= nb.get(key, frozenset()):
            return False
    return True
