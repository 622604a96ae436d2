"""Shared generators and small oracles for the test suite."""

from __future__ import annotations

import random

from kcfalab.syntax import App, Expr, Lam, Var, app, assign_labels, lam, var


def random_linear_term(rng: random.Random, size: int) -> Expr:
    """A random closed term in which every bound variable occurs exactly once.

    ``size`` bounds the node count loosely from above.  Linear terms always
    normalize, so they are safe fodder for the exact evaluator.
    """
    counter = [0]

    def fresh() -> str:
        counter[0] += 1
        return f"v{counter[0]}"

    def min_nodes(nfree: int) -> int:
        # nfree vars need nfree leaves joined by nfree-1 apps; a closed term
        # needs at least a lambda over one var.
        return 2 * nfree - 1 if nfree else 2

    def gen(fv: list[str], budget: int) -> Expr:
        nfree = len(fv)
        options: list[str] = []
        if nfree == 1:
            options.append("var")
        if budget - 1 >= min_nodes(nfree + 1):
            options.append("lam")
        if budget >= 1 + min_nodes(0) + min_nodes(nfree):
            options.append("app")
        if nfree >= 2 and budget >= 1 + min_nodes(1) + min_nodes(nfree - 1):
            options.append("app")
        if not options:
            options = ["var"] if nfree == 1 else ["lam"]
        choice = rng.choice(options)
        if choice == "var":
            return var(fv[0])
        if choice == "lam":
            x = fresh()
            both = fv + [x]
            rng.shuffle(both)
            return lam(x, gen(both, budget - 1))
        # application: split the obligations between the two sides
        rng.shuffle(fv)
        cut = rng.randint(0, nfree)
        left, right = fv[:cut], fv[cut:]
        need_l, need_r = min_nodes(len(left)), min_nodes(len(right))
        spare = budget - 1 - need_l - need_r
        if spare < 0:
            # fall back: keep everything on one side
            left, right = fv, []
            need_l, need_r = min_nodes(nfree), min_nodes(0)
            spare = max(0, budget - 1 - need_l - need_r)
        extra_l = rng.randint(0, spare)
        return app(
            gen(left, need_l + extra_l), gen(right, need_r + (spare - extra_l))
        )

    return assign_labels(gen([], max(2, size)))


def random_term(rng: random.Random, size: int, pool: tuple[str, ...] = ("a", "b", "c")) -> Expr:
    """A random possibly-open, possibly-nonlinear term over a small name pool."""

    def gen(budget: int) -> Expr:
        if budget <= 1:
            return var(rng.choice(pool))
        r = rng.random()
        if r < 0.35:
            return lam(rng.choice(pool), gen(budget - 1))
        if r < 0.8:
            cut = rng.randint(1, budget - 1)
            return app(gen(cut), gen(budget - cut))
        return var(rng.choice(pool))

    return gen(size)


def count_occurrences(e: Expr, name: str) -> int:
    """Brute-force free-occurrence counter, independent of free_vars."""
    t = e.term
    if isinstance(t, Var):
        return 1 if t.name == name else 0
    if isinstance(t, Lam):
        return 0 if t.param == name else count_occurrences(t.body, name)
    return count_occurrences(t.operator, name) + count_occurrences(t.operand, name)


class MachineValue:
    """Closure of the independent environment-machine evaluator."""

    __slots__ = ("expr", "env")

    def __init__(self, expr, env):
        self.expr = expr
        self.env = env


def machine_eval(e: Expr, max_steps: int = 2_000_000) -> MachineValue:
    """Call-by-value evaluation with value environments.

    Shares no code with the instrumented evaluator: no labels, no contours,
    no cache.  Used as an oracle for the value computed at the program root.
    """
    steps = [max_steps]

    def ev(node: Expr, env: dict) -> MachineValue:
        while True:
            if steps[0] <= 0:
                raise RuntimeError("oracle step budget exceeded")
            steps[0] -= 1
            t = node.term
            if isinstance(t, Var):
                return env[t.name]
            if isinstance(t, Lam):
                return MachineValue(node, env)
            f = ev(t.operator, env)
            a = ev(t.operand, env)
            node = f.expr.term.body
            env = {**f.env, f.expr.term.param: a}

    return ev(e, {})
