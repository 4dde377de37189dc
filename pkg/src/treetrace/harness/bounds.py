"""Numerical checks of the analytic inequalities behind the spider distinguisher.

Each check evaluates one inequality on a grid and counts violations:

* ``arc_modulus``: ``|(1-q^d) w^d + q^d| >= exp(-2 pi^2 q^d (1-q^d) d^2 / L^2)`` on the arc;
* ``factored_at_w0``: ``|A~(w0)| >= (1-q) (1-2a)/(1-a) a^(l* mod d)``, ``a = |q + (1-q) w0|``;
* ``growth``: ``|A~(w)| <= 1 / ((1-q)(1-|w|))`` inside the disc;
* ``disc_gap``: ``1 - |w| >= (theta - theta0)^4 / 64`` along the translated half-disc;
* ``arc_sup``: ``log sup_arc |A~| >= L log(1-2q) + d L log q - L log n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..channel import derive_rng
from ..spider_recon import arc_points, choose_L, eval_generating
from ..trees import TreeShape

# Absolute slack for comparisons that are tight up to rounding.
TOL = 1e-12


@dataclass
class BoundCheck:
    check: str
    points: int = 0
    violations: int = 0
    worst_margin: float = math.inf

    def record(self, lhs: np.ndarray, rhs: np.ndarray) -> None:
        lhs, rhs = np.broadcast_arrays(np.asarray(lhs, float), np.asarray(rhs, float))
        margin = lhs - rhs
        self.points += margin.size
        self.violations += int(np.count_nonzero(margin < -TOL))
        if margin.size:
            self.worst_margin = min(self.worst_margin, float(margin.min()))


@dataclass
class BoundsReport:
    checks: dict[str, BoundCheck] = field(default_factory=dict)

    @property
    def total_violations(self) -> int:
        return sum(c.violations for c in self.checks.values())

    def to_dict(self) -> dict:
        return {
            "total_violations": self.total_violations,
            "checks": [
                {"check": c.check, "points": c.points, "violations": c.violations, "worst_margin": c.worst_margin}
                for c in self.checks.values()
            ],
        }


@dataclass
class BoundsGrid:
    qs: list = field(default_factory=lambda: [0.1, 0.2, 0.3, 0.4, 0.45])
    ds: list = field(default_factory=lambda: [20, 21])
    n: int | None = None
    L: int | None = None
    points: int = 1000
    label_vectors: int = 50
    seed: int = 0

    @classmethod
    def from_dict(cls, data: dict) -> BoundsGrid:
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown grid keys {sorted(unknown)}")
        return cls(**data)

    def validate(self) -> None:
        if self.L is not None and self.L < 20:
            raise ValueError("the arc parameter L must be at least 20")
        for q in self.qs:
            if not 0 < q < 0.7:
                raise ValueError(f"q={q} is outside (0, 0.7), where the lower bound at w0 applies")
        for d in self.ds:
            if d < 20:
                raise ValueError(f"d={d} is below 20, which the lower bound at w0 assumes")
            n = self.n or d
            if n % d:
                raise ValueError(f"d={d} does not divide n={n}")
        if self.points < 2 or self.label_vectors < 1:
            raise ValueError("grids need at least 2 points and 1 label vector")


def translate_for_arc(L: int) -> float:
    """``h`` such that the disc of radius 1/2 centered at ``1/2 + h`` meets the unit circle at ``e^{+-i pi/L}``."""
    phi = math.pi / L
    c = math.cos(phi) - math.sqrt(math.cos(phi) ** 2 - 0.75)
    return c - 0.5


def difference_vectors(n: int, count: int, rng) -> np.ndarray:
    """Random nonzero vectors over {-1, 0, 1}."""
    out = rng.integers(-1, 2, size=(count, n)).astype(np.float64)
    for row in out:
        if not row.any():
            row[rng.integers(n)] = 1.0
    return out


def w0_point(q: float, d: int) -> complex:
    return complex(-q) if d % 2 else q * np.exp(1j * math.pi * (d - 1) / d)


def verify_bounds(grid: BoundsGrid | dict | None = None) -> BoundsReport:
    grid = BoundsGrid() if grid is None else grid
    if isinstance(grid, dict):
        grid = BoundsGrid.from_dict(grid)
    grid.validate()
    report = BoundsReport({name: BoundCheck(name) for name in ("arc_modulus", "factored_at_w0", "growth", "disc_gap", "arc_sup")})
    rng = derive_rng(grid.seed, 0)

    for d in grid.ds:
        n = grid.n or d
        shape = TreeShape.spider(n, d)
        for q in grid.qs:
            L = grid.L or choose_L(n, d, q)
            arc = arc_points(L, grid.points)
            qd = q**d

            lhs = np.abs((1 - qd) * arc**d + qd)
            report.checks["arc_modulus"].record(lhs, math.exp(-2 * math.pi**2 * qd * (1 - qd) * d * d / L**2))

            radii = np.sqrt(rng.random(grid.points)) * 0.999
            interior = radii * np.exp(2j * math.pi * rng.random(grid.points))
            w0 = w0_point(q, d)
            alpha = abs(q + (1 - q) * w0)
            # the arc supremum bound needs q < 1/2
            log_floor = L * math.log(1 - 2 * q) + d * L * math.log(q) - L * math.log(n) if q < 0.5 else None

            for a in difference_vectors(n, grid.label_vectors, rng):
                at_w0 = eval_generating(a, shape, q, w0)
                bound = (1 - q) * (1 - 2 * alpha) / (1 - alpha) * alpha ** (at_w0.l_star % d)
                report.checks["factored_at_w0"].record(abs(at_w0.A_tilde_value), bound)

                inside = eval_generating(a, shape, q, interior).A_tilde_value
                report.checks["growth"].record(1 / ((1 - q) * (1 - np.abs(interior))), np.abs(inside))

                if log_floor is not None:
                    sup = float(np.abs(eval_generating(a, shape, q, arc).A_tilde_value).max())
                    report.checks["arc_sup"].record(math.log(sup) if sup > 0 else -math.inf, log_floor)

    Ls = sorted({grid.L or choose_L(grid.n or d, d, q) for d in grid.ds for q in grid.qs} | {20, 40, 100})
    for L in Ls:
        h = translate_for_arc(L)
        if not 0 < h <= 0.1:
            raise ValueError(f"translate {h} for L={L} is outside (0, 1/10]")
        c = 0.5 + h
        theta0 = float(np.angle(2 * (np.exp(1j * math.pi / L) - c)))
        theta = np.linspace(theta0, math.pi / 2, grid.points)
        w = c + np.exp(1j * theta) / 2
        report.checks["disc_gap"].record(1 - np.abs(w), (theta - theta0) ** 4 / 64)
    return report
