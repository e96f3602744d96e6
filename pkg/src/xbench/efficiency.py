"""Constant-returns-to-scale classification: Pareto efficiency and the extreme set E."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .milp import ModelSpec, SolverConfig, SolverError, solve

CLASSIFY_TOL = 1e-7


@dataclass(frozen=True)
class EfficiencyClassification:
    ids: tuple[str, ...]
    pareto: tuple[bool, ...]
    extreme: tuple[bool, ...]
    E: tuple[int, ...]

    @property
    def extreme_ids(self) -> list[str]:
        return [self.ids[k] for k in self.E]


def _additive_slack(X: np.ndarray, Y: np.ndarray, j: int, cfg: SolverConfig | None) -> float:
    # slacks measured relative to DMU j's own data, so the optimum is unit free
    n, m = X.shape
    s = Y.shape[1]
    model = ModelSpec(f"additive_{j}")
    lam = [model.add_var(f"lam{k}") for k in range(n)]
    sx = [model.add_var(f"sx{i}") for i in range(m)]
    sy = [model.add_var(f"sy{r}") for r in range(s)]
    for i in range(m):
        row = {lam[k]: X[k, i] / X[j, i] for k in range(n)}
        row[sx[i]] = 1.0
        model.add_constraint(row, "=", 1.0)
    for r in range(s):
        row = {lam[k]: Y[k, r] / Y[j, r] for k in range(n)}
        row[sy[r]] = -1.0
        model.add_constraint(row, "=", 1.0)
    model.set_objective({v: 1.0 for v in sx + sy}, sense="max")
    sol = solve(model, cfg)
    if not sol.ok:
        raise SolverError(f"additive model for DMU {j}: {sol.status}")
    return sol.objective


def pareto_efficient(d: Dataset, j: int, cfg: SolverConfig | None = None) -> bool:
    """True iff the CRS additive model for DMU ``j`` finds no slack."""
    return _additive_slack(d.X, d.Y, j, cfg) <= CLASSIFY_TOL


def reproduction_gap(X: np.ndarray, Y: np.ndarray, k: int, generators, cfg=None) -> float:
    """Smallest total relative shortfall of a nonnegative combination of
    ``generators`` against DMU ``k`` (0 means ``k`` is reproducible)."""
    generators = list(generators)
    if not generators:
        return float("inf")
    m, s = X.shape[1], Y.shape[1]
    model = ModelSpec(f"reproduce_{k}")
    lam = {j: model.add_var(f"lam{j}") for j in generators}
    ex = [model.add_var(f"ex{i}") for i in range(m)]
    ey = [model.add_var(f"ey{r}") for r in range(s)]
    for i in range(m):
        row = {lam[j]: X[j, i] / X[k, i] for j in generators}
        row[ex[i]] = -1.0
        model.add_constraint(row, "<=", 1.0)
    for r in range(s):
        row = {lam[j]: Y[j, r] / Y[k, r] for j in generators}
        row[ey[r]] = 1.0
        model.add_constraint(row, ">=", 1.0)
    model.set_objective({v: 1.0 for v in ex + ey})
    sol = solve(model, cfg)
    if not sol.ok:
        raise SolverError(f"reproduction LP for DMU {k}: {sol.status}")
    return sol.objective


def _same_ray(a: np.ndarray, b: np.ndarray, rtol: float = 1e-9) -> bool:
    ratio = b / a
    return bool(np.all(np.abs(ratio - ratio[0]) <= rtol * ratio[0]))


def extreme_efficient_set(d: Dataset, cfg: SolverConfig | None = None) -> EfficiencyClassification:
    X, Y = d.X, d.Y
    pareto = [_additive_slack(X, Y, j, cfg) <= CLASSIFY_TOL for j in range(d.n)]
    eff = [j for j in range(d.n) if pareto[j]]
    Z = np.hstack([X, Y])
    extreme = [False] * d.n
    for k in eff:
        # a later unit on the same ray must not knock out the first occurrence
        gens = [j for j in eff if j != k and not (j > k and _same_ray(Z[k], Z[j]))]
        extreme[k] = reproduction_gap(X, Y, k, gens, cfg) > CLASSIFY_TOL
    E = tuple(k for k in range(d.n) if extreme[k])
    return EfficiencyClassification(tuple(d.ids), tuple(pareto), tuple(extreme), E)
