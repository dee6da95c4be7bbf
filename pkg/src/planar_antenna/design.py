"""Collection-efficiency maps and (t, h) optimization for the three-layer antenna.

``t`` is the middle-layer thickness and ``h`` the emitter height above the
substrate, both in nm.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .emission import ObjectiveGeometry, efficiency
from .errors import AntennaError, InfeasibleDomainError
from .stack import LayerStack, three_layer_stack


@dataclass(frozen=True)
class StackTemplate:
    """Everything about the antenna except ``t`` and ``h``."""

    n1: float = 1.78
    n2: float = 1.50
    n3: float = 1.0
    wavelength: float = 580.0
    film_thickness: float | None = None
    film_index: float = 1.7

    def build(self, t: float, h: float) -> LayerStack:
        return three_layer_stack(
            t, h, self.n1, self.n2, self.n3, self.wavelength,
            self.film_thickness, self.film_index,
        )

    def feasible(self, t: float, h: float) -> bool:
        half = (self.film_thickness or 0.0) / 2.0
        return t > 0 and h - half > 0 and t - h - half > 0


def eta_at(template: StackTemplate, t: float, h: float, objective: ObjectiveGeometry) -> float:
    if not template.feasible(t, h):
        raise InfeasibleDomainError(f"emitter at h={h} nm is not inside a t={t} nm layer")
    return efficiency(template.build(float(t), float(h)), objective)


def default_workers() -> int:
    env = os.environ.get("ANTENNA_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass
class EfficiencyMap:
    """eta[i, j] at (t_grid[i], h_grid[j]); invalid cells hold NaN."""

    t_grid: np.ndarray
    h_grid: np.ndarray
    eta: np.ndarray
    valid: np.ndarray
    objective: ObjectiveGeometry
    template: StackTemplate
    errors: dict = field(default_factory=dict)

    def rows(self):
        """(t, h, eta, valid) tuples in t-major order."""
        for i, t in enumerate(self.t_grid):
            for j, h in enumerate(self.h_grid):
                yield float(t), float(h), float(self.eta[i, j]), bool(self.valid[i, j])


def efficiency_map(
    template: StackTemplate,
    t_range,
    h_range,
    steps,
    objective: ObjectiveGeometry,
    workers: int | None = None,
) -> EfficiencyMap:
    """Evaluate eta on a tensor grid; h >= t cells are flagged, not computed.

    Cells are independent, so they are spread over ``workers`` threads; the
    result does not depend on the worker count.  A cell that raises is
    recorded in ``errors`` and left invalid.
    """
    (t_lo, t_hi), (h_lo, h_hi) = t_range, h_range
    nt, nh = (steps, steps) if np.isscalar(steps) else steps
    if nt < 2 or nh < 2:
        raise ValueError("need at least 2 steps per axis")
    if not (0 < t_lo <= t_hi and 0 < h_lo <= h_hi):
        raise ValueError("ranges must be positive and ordered")
    t_grid = np.linspace(t_lo, t_hi, nt)
    h_grid = np.linspace(h_lo, h_hi, nh)
    eta = np.full((nt, nh), np.nan)
    valid = np.zeros((nt, nh), dtype=bool)
    errors = {}
    cells = [
        (i, j) for i in range(nt) for j in range(nh) if template.feasible(t_grid[i], h_grid[j])
    ]

    def work(cell):
        i, j = cell
        try:
            return cell, eta_at(template, t_grid[i], h_grid[j], objective), None
        except AntennaError as exc:
            return cell, None, str(exc)

    workers = workers or default_workers()
    if workers > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, cells))
    else:
        results = [work(c) for c in cells]
    for (i, j), value, err in results:
        if err is None:
            eta[i, j] = value
            valid[i, j] = True
        else:
            errors[(i, j)] = err
    return EfficiencyMap(t_grid, h_grid, eta, valid, objective, template, errors)


@dataclass(frozen=True)
class DesignOptimum:
    t_star: float
    h_star: float
    eta_star: float
    evaluations: int


def optimize(
    template: StackTemplate,
    t_bounds,
    h_bounds,
    objective: ObjectiveGeometry,
    tolerance: float = 0.5,
    coarse_steps: int = 15,
    starts: int = 3,
) -> DesignOptimum:
    """Coarse grid scan followed by Nelder-Mead refinement of the best cells.

    The simplex stops once every vertex lies within ``tolerance`` nm of the
    best one.  Deterministic: no randomness, fixed evaluation order.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be > 0")
    lo = np.array([t_bounds[0], h_bounds[0]], dtype=float)
    hi = np.array([t_bounds[1], h_bounds[1]], dtype=float)
    if np.any(hi < lo):
        raise ValueError("bounds must be ordered")
    free = hi > lo
    count = 0
    cache = {}

    def eta(point):
        nonlocal count
        key = (float(point[0]), float(point[1]))
        if key not in cache:
            if np.any(point < lo) or np.any(point > hi) or not template.feasible(*key):
                cache[key] = -1.0
            else:
                count += 1
                cache[key] = eta_at(template, key[0], key[1], objective)
        return cache[key]

    axes = [np.linspace(lo[k], hi[k], coarse_steps) if free[k] else np.array([lo[k]]) for k in (0, 1)]
    scan = [(eta(np.array([t, h])), t, h) for t in axes[0] for h in axes[1]]
    scan = [s for s in scan if s[0] >= 0]
    if not scan:
        raise InfeasibleDomainError("no feasible (t, h) with h < t inside the bounds")
    scan.sort(key=lambda s: (-s[0], s[1], s[2]))
    best_eta, best_t, best_h = scan[0]
    best = np.array([best_t, best_h])

    if np.any(free):
        step = np.where(free, (hi - lo) / max(coarse_steps - 1, 1), 0.0)[free]
        for _, t0, h0 in scan[:starts]:
            x0 = np.array([t0, h0])

            def negeta(x, x0=x0):
                p = x0.copy()
                p[free] = x
                return -eta(p)

            simplex = [x0[free]]
            for k in range(int(free.sum())):
                v = x0[free].copy()
                v[k] += step[k] / 2 if v[k] + step[k] / 2 <= hi[free][k] else -step[k] / 2
                simplex.append(v)
            res = minimize(
                negeta, x0[free], method="Nelder-Mead",
                options={"initial_simplex": np.array(simplex), "xatol": tolerance,
                         "fatol": np.inf, "maxiter": 2000},
            )
            if -res.fun > best_eta:
                best_eta = -res.fun
                best = x0.copy()
                best[free] = res.x
    return DesignOptimum(float(best[0]), float(best[1]), float(best_eta), count)


def sensitivity_box(template, t0, h0, delta_t, delta_h, objective):
    """``(eta_min, eta_max, eta_center)`` over centre, corners and edge midpoints."""
    if delta_t < 0 or delta_h < 0:
        raise ValueError("deltas must be >= 0")
    points = [(t0 + a * delta_t, h0 + b * delta_h) for a in (-1, 0, 1) for b in (-1, 0, 1)]
    if any(not template.feasible(t, h) for t, h in points):
        raise InfeasibleDomainError("sensitivity box crosses h >= t")
    values = {p: eta_at(template, p[0], p[1], objective) for p in points}
    centre = values[(t0, h0)]
    return min(values.values()), max(values.values()), centre
