"""Trace budgets from the theorem-scale formulas, with tunable constants."""

from __future__ import annotations

import json
import math
from functools import lru_cache
from importlib import resources

from ..ted_recon import stability_level
from ..trees import TreeShape

THEOREMS = ("ted_small", "lp_small", "spider_meanbased", "spider_large_depth")

DEFAULT_CONSTANTS = {
    "c": 1.0,
    "c_prime": 2.0,
    "C": 10.0,
    "C_prime": 1.0,
    "epsilon": 0.1,
    "cap": 1_000_000,
}


@lru_cache(maxsize=1)
def load_calibration() -> dict:
    """The committed calibration table shipped with the package."""
    text = resources.files("treetrace").joinpath("data/calibration.json").read_text()
    return json.loads(text)


def string_budget_key(m: int, q: float) -> str:
    return f"m={m},q={q:g}"


def string_budget(m: int, q: float, table: dict | None = None) -> int:
    """Calibrated trace count for the exhaustive string reconstructor."""
    table = load_calibration() if table is None else table
    budgets = table.get("string_budgets", {})
    key = string_budget_key(m, q)
    if key not in budgets:
        raise KeyError(f"no calibrated string budget for {key}; run the calibration first")
    return int(budgets[key]["T"])


def theorem_trace_count(theorem: str, shape: TreeShape, q: float, constants: dict | None = None) -> int:
    """Evaluate a trace-count formula (natural logs, rounded up).

    ``ted_small``: ``C ln n (1-q)^-(dk + s^2 k)``;
    ``lp_small``: ``C ln n (1-q)^-(d + c' k)``;
    ``spider_meanbased``: ``exp(c d (n q^d)^(1/3))`` capped at ``cap``;
    ``spider_large_depth``: twice the calibrated string budget for ``d`` bits.
    """
    consts = {**DEFAULT_CONSTANTS, **(constants or {})}
    if theorem == "ted_small":
        k, d = shape.k, shape.d
        s = stability_level(k, d, q)
        return math.ceil(consts["C"] * math.log(shape.n) * (1 - q) ** (-(d * k + s * s * k)))
    if theorem == "lp_small":
        k, d = shape.k, shape.d
        return math.ceil(consts["C"] * math.log(shape.n) * (1 - q) ** (-(d + consts["c_prime"] * k)))
    if theorem == "spider_meanbased":
        raw = consts["c"] * shape.d * (shape.n * q**shape.d) ** (1 / 3)
        return int(min(math.ceil(math.exp(raw)), consts["cap"]))
    if theorem == "spider_large_depth":
        return 2 * string_budget(shape.d, q, consts.get("calibration"))
    raise ValueError(f"unknown theorem id {theorem!r}; expected one of {THEOREMS}")
