"""Byte-stable JSON views of exact and abstract caches.

Format:

    {"entries": [{"kind": "label"|"var", "key": "...", "contour": "3.2.1",
                  "values": [{"lam": "<printed lambda>", "env": {"z": "3"}}]}]}

Entries are sorted lexicographically by (kind, key, contour) and closure
lists by (lambda label, env); exact caches always carry one-element value
lists.
"""

from __future__ import annotations

import json
from typing import Union

from .exact import Closure, ExactCache, contour_str, env_dict
from .kcfa import AbstractCache, AnalysisStats
from .syntax import unparse

__all__ = ["cache_to_dict", "closure_to_dict", "report_to_dict", "to_json"]


def closure_to_dict(clo: Closure) -> dict:
    return {"lam": unparse(clo.term), "env": env_dict(clo.env)}


def _closure_sort_key(clo: Closure) -> tuple:
    return (clo.lam_label, tuple((n, contour_str(c)) for n, c in clo.env))


def cache_to_dict(cache: Union[ExactCache, AbstractCache]) -> dict:
    rows = []
    if isinstance(cache, ExactCache):
        items = [(key, [clo]) for key, clo in cache.entries.items()]
    else:
        items = [(key, list(vals)) for key, vals in cache.entries.items() if vals]
    for (kind, name, contour), closures in items:
        rows.append(
            {
                "kind": kind,
                "key": name,
                "contour": contour_str(contour),
                "values": [
                    closure_to_dict(c)
                    for c in sorted(closures, key=_closure_sort_key)
                ],
            }
        )
    rows.sort(key=lambda r: (r["kind"], r["key"], r["contour"]))
    return {"entries": rows}


def report_to_dict(cache: AbstractCache, stats: AnalysisStats) -> dict:
    return {
        "k": cache.k,
        "iterations": stats.iterations,
        "cache": cache_to_dict(cache),
        "stats": {
            "iterations": stats.iterations,
            "cache_keys": stats.cache_keys,
            "total_closures": stats.total_closures,
            "max_set": stats.max_set,
        },
    }


def to_json(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True)
