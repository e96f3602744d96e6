"""Sequential selection of common reference sets.

Step 1 picks the single frontier face that minimizes the summed weighted L1
distance of all DMUs to their projections on it.  Each later step adds the
face that most reduces the sum of per-DMU best distances, and the loop stops
once no face improves that sum.

All MILPs are built on column-normalized data (each factor divided by its
column maximum).  Distances, intensities and the optimal values are invariant
under that rescaling; certificates are mapped back to raw units.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .dataset import Dataset, DmuRecord
from .efficiency import extreme_efficient_set
from .milp import (
    ComplementarityError,
    ModelSpec,
    SolverConfig,
    SolverError,
    Variable,
    add_abs_deviation,
    check_complementarity,
    encode_complementarity,
    solve,
)

log = logging.getLogger(__name__)


class SelectionError(RuntimeError):
    pass


@dataclass
class SelectionConfig:
    eps_lambda: float = 1e-6
    eps_improve: float = 1e-6
    eps_stop: float = 1e-6
    complementarity: str = "sos1"  # sos1 | bigm
    max_steps: int = 50
    weight_cap: float = 1e4  # upper bound on V, U (normalized units), big-M mode only
    cap_lambda: float | None = None
    cap_b: float | None = None
    bigm_scale: float = 1.0
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        for name in ("eps_lambda", "eps_improve", "eps_stop", "weight_cap", "bigm_scale"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.complementarity not in ("sos1", "bigm"):
            raise ValueError(f"unknown complementarity mode {self.complementarity!r}")


@dataclass(frozen=True)
class HyperplaneCertificate:
    """Supporting hyperplane ``V'x = U'y`` of the CRS technology, in raw units."""

    V: tuple[float, ...]
    U: tuple[float, ...]
    b: dict[int, float]  # slack -V'X_k + U'Y_k + b_k = 0 for k in E

    def gap(self, x: Sequence[float], y: Sequence[float]) -> float:
        """``V'x - U'y``; zero on the hyperplane, nonnegative over the technology."""
        return float(np.dot(self.V, x) - np.dot(self.U, y))

    def problems(self, d: Dataset, members: Sequence[int], tol: float = 1e-6) -> list[str]:
        out = []
        if min(self.V) < 1 - 1e-12 or min(self.U) < 1 - 1e-12:
            out.append("weights below 1")
        X, Y = d.X, d.Y
        for k, bk in self.b.items():
            vx = float(np.dot(self.V, X[k]))
            if abs(-vx + float(np.dot(self.U, Y[k])) + bk) > tol * vx:
                out.append(f"b[{d.ids[k]}] inconsistent with the hyperplane")
            if bk < -tol * vx:
                out.append(f"b[{d.ids[k]}] negative")
        for j in range(d.n):
            vx = float(np.dot(self.V, X[j]))
            if self.gap(X[j], Y[j]) < -tol * vx:
                out.append(f"{d.ids[j]} lies above the hyperplane")
        for k in members:
            vx = float(np.dot(self.V, X[k]))
            if abs(self.gap(X[k], Y[k])) > tol * vx:
                out.append(f"member {d.ids[k]} is off the hyperplane")
        return out


@dataclass(frozen=True)
class ReferenceSet:
    step: int
    members: tuple[int, ...]
    certificate: HyperplaneCertificate


@dataclass(frozen=True)
class StepRecord:
    """Everything the step-``a`` model returned, for all ``n`` DMUs.

    DMUs already in a selected set are carried with their own data as target.
    ``distance`` is recomputed from the targets; ``delta`` is the model's
    running-best distance.
    """

    step: int
    objective: float
    targets_x: np.ndarray  # (n, m)
    targets_y: np.ndarray  # (n, s)
    intensities: np.ndarray  # (n, |E|)
    distance: np.ndarray  # (n,)
    delta: np.ndarray  # (n,)
    improved: tuple[bool, ...]
    lambda_total: np.ndarray  # (|E|,)
    b: np.ndarray  # (|E|,)
    evaluated: tuple[int, ...]
    nodes: int = 0
    wall_time: float = 0.0


@dataclass(frozen=True)
class SelectionState:
    E: tuple[int, ...]
    sets: tuple[ReferenceSet, ...]
    steps: tuple[StepRecord, ...]
    delta: np.ndarray
    D: tuple[float, ...]
    bigM: float
    converged: bool = False
    stop_objective: float | None = None

    @property
    def a(self) -> int:
        return len(self.sets)

    @property
    def selected(self) -> tuple[int, ...]:
        return tuple(sorted({k for rs in self.sets for k in rs.members}))


def weighted_l1_distance(actual: DmuRecord | tuple, target: tuple) -> float:
    """Sum of absolute deviations, each divided by the actual value."""
    if isinstance(actual, DmuRecord):
        ax, ay = actual.inputs, actual.outputs
    else:
        ax, ay = actual
    tx, ty = target
    ax, ay = np.asarray(ax, dtype=float), np.asarray(ay, dtype=float)
    tx, ty = np.asarray(tx, dtype=float), np.asarray(ty, dtype=float)
    if ax.shape != tx.shape or ay.shape != ty.shape:
        raise ValueError("actual and target dimensions differ")
    return float(np.sum(np.abs(ax - tx) / ax) + np.sum(np.abs(ay - ty) / ay))


def distances_to(X: np.ndarray, Y: np.ndarray, tx: np.ndarray, ty: np.ndarray) -> np.ndarray:
    """Row-wise :func:`weighted_l1_distance` for ``(n, .)`` arrays."""
    return np.sum(np.abs(X - tx) / X, axis=1) + np.sum(np.abs(Y - ty) / Y, axis=1)


def compute_bigM(d: Dataset, E: Sequence[int]) -> float:
    """Largest weighted L1 distance from any DMU to any unit of ``E``."""
    if not E:
        raise ValueError("E must be non-empty")
    X, Y = d.X, d.Y
    Xk, Yk = X[list(E)], Y[list(E)]
    # (n, |E|) table of distances from DMU j to unit k, normalized by DMU j
    dist = (np.abs(X[:, None, :] - Xk[None, :, :]) / X[:, None, :]).sum(axis=2) \
        + (np.abs(Y[:, None, :] - Yk[None, :, :]) / Y[:, None, :]).sum(axis=2)
    return float(dist.max())


class _FaceModel:
    """Shared pieces of the selection MILPs: one supporting hyperplane over E,
    complementarity between intensity totals and hyperplane slacks, and a
    projection block for each DMU in ``dmus``."""

    def __init__(self, name: str, d: Dataset, E: Sequence[int], dmus: Sequence[int],
                 cfg: SelectionConfig, bigM: float):
        self.d = d
        self.E = list(E)
        self.dmus = list(dmus)
        self.scale_x = d.X.max(axis=0)
        self.scale_y = d.Y.max(axis=0)
        Xn, Yn = d.X / self.scale_x, d.Y / self.scale_y
        self.model = mdl = ModelSpec(name)
        self.bigm_mode = bigm_mode = cfg.complementarity == "bigm"
        wub = cfg.weight_cap if bigm_mode else math.inf
        self.V = [mdl.add_var(f"V{i}", lb=1.0, ub=wub) for i in range(d.m)]
        self.U = [mdl.add_var(f"U{r}", lb=1.0, ub=wub) for r in range(d.s)]
        self.b = {k: mdl.add_var(f"b{k}") for k in self.E}
        self.lamk = {k: mdl.add_var(f"lamk{k}") for k in self.E}
        for k in self.E:
            row = {self.V[i]: -Xn[k, i] for i in range(d.m)}
            row.update({self.U[r]: Yn[k, r] for r in range(d.s)})
            row[self.b[k]] = 1.0
            mdl.add_constraint(row, "=", 0.0, name=f"hyp{k}")
        self.lam: dict[tuple[int, int], Variable] = {}
        self.dist: dict[int, Variable] = {}
        for j in self.dmus:
            for k in self.E:
                self.lam[k, j] = mdl.add_var(f"lam{k}_{j}")
            terms: dict[Variable, float] = {}
            for i in range(d.m):
                dev = add_abs_deviation(
                    mdl, {self.lam[k, j]: Xn[k, i] / Xn[j, i] for k in self.E}, 1.0,
                    constant=-1.0, name=f"dx{j}_{i}")
                terms.update(dev.terms())
            for r in range(d.s):
                dev = add_abs_deviation(
                    mdl, {self.lam[k, j]: Yn[k, r] / Yn[j, r] for k in self.E}, 1.0,
                    constant=-1.0, name=f"dy{j}_{r}")
                terms.update(dev.terms())
            self.dist[j] = dj = mdl.add_var(f"d{j}")
            row = {v: -c for v, c in terms.items()}
            row[dj] = 1.0
            mdl.add_constraint(row, "=", 0.0, name=f"dist{j}")
        for k in self.E:
            row = {self.lam[k, j]: -1.0 for j in self.dmus}
            row[self.lamk[k]] = 1.0
            mdl.add_constraint(row, "=", 0.0, name=f"lamsum{k}")
        pairs = [(self.lamk[k], self.b[k]) for k in self.E]
        caps = None
        if bigm_mode:
            ratio = max(float((Yn[:, None, :] / Yn[self.E][None, :, :]).max()), 1.0)
            cap_l = cfg.cap_lambda or max(len(self.dmus), 1) * (1 + (d.n + 1) * bigM) * ratio
            caps = []
            for k in self.E:
                cap_b = cfg.cap_b or cfg.weight_cap * float(Xn[k].sum())
                caps.append((cap_l, cap_b))
        encode_complementarity(mdl, pairs, cfg.complementarity, caps)

    def solve(self, cfg: SelectionConfig):
        sol = solve(self.model, cfg.solver)
        if sol.status == "infeasible":
            raise SolverError(f"{self.model.name} is infeasible; this signals an encoding bug")
        if not sol.ok:
            raise SolverError(f"{self.model.name}: solver returned {sol.status}")
        problems = check_complementarity(self.model, sol)
        if problems:
            raise ComplementarityError(f"{self.model.name}: " + "; ".join(problems))
        if self.bigm_mode:
            top = max(sol[v] for v in self.V + self.U)
            if top >= cfg.weight_cap * (1 - 1e-7):
                log.warning("%s: a weight sits at weight_cap=%g; the cap may cut the optimum",
                            self.model.name, cfg.weight_cap)
        return sol

    def certificate(self, sol) -> HyperplaneCertificate:
        d = self.d
        V = np.array([sol[v] for v in self.V]) / self.scale_x
        U = np.array([sol[u] for u in self.U]) / self.scale_y
        t = 1.0 / min(V.min(), U.min())
        V, U = V * t, U * t
        X, Y = d.X, d.Y
        b = {k: float(np.dot(V, X[k]) - np.dot(U, Y[k])) for k in self.E}
        return HyperplaneCertificate(tuple(V.tolist()), tuple(U.tolist()), b)

    def extract(self, sol, step: int, objective: float, delta, improved) -> StepRecord:
        d = self.d
        X, Y = d.X, d.Y
        nE = len(self.E)
        lam = np.zeros((d.n, nE))
        tx, ty = X.copy(), Y.copy()
        for j in range(d.n):
            if j in self.dist:
                lam[j] = [max(sol[self.lam[k, j]], 0.0) for k in self.E]
                tx[j] = lam[j] @ X[self.E]
                ty[j] = lam[j] @ Y[self.E]
            elif j in self.E:
                lam[j, self.E.index(j)] = 1.0
        return StepRecord(
            step=step, objective=objective, targets_x=tx, targets_y=ty, intensities=lam,
            distance=distances_to(X, Y, tx, ty), delta=np.asarray(delta, dtype=float),
            improved=tuple(improved),
            lambda_total=np.array([sol[self.lamk[k]] for k in self.E]),
            b=np.array([sol[self.b[k]] for k in self.E]),
            evaluated=tuple(self.dmus), nodes=sol.nodes, wall_time=sol.wall_time)


def _members(rec: StepRecord, E: Sequence[int], rows: Sequence[int], eps: float) -> tuple[int, ...]:
    active = rec.intensities[list(rows)] > eps if rows else np.zeros((0, len(E)), bool)
    return tuple(k for c, k in enumerate(E) if active[:, c].any())


def select_first(d: Dataset, E: Sequence[int], cfg: SelectionConfig | None = None,
                 bigM: float | None = None):
    """Common reference set: returns ``(R_1, step record, D_1)``."""
    cfg = cfg or SelectionConfig()
    bigM = compute_bigM(d, E) if bigM is None else bigM
    fm = _FaceModel("select_1", d, E, range(d.n), cfg, bigM)
    fm.model.set_objective({fm.dist[j]: 1.0 for j in range(d.n)})
    sol = fm.solve(cfg)
    dvals = np.array([sol[fm.dist[j]] for j in range(d.n)])
    rec = fm.extract(sol, 1, sol.objective, dvals, [True] * d.n)
    members = _members(rec, E, range(d.n), cfg.eps_lambda)
    if not members:
        raise SelectionError("step 1 selected no reference units")
    rs = ReferenceSet(1, members, fm.certificate(sol))
    return rs, rec, sol.objective


def _initial_state(d: Dataset, E, cfg: SelectionConfig) -> SelectionState:
    bigM = compute_bigM(d, E) * cfg.bigm_scale
    rs, rec, D1 = select_first(d, E, cfg, bigM)
    delta = rec.delta.copy()
    delta[list(rs.members)] = 0.0
    return SelectionState(tuple(E), (rs,), (rec,), delta, (D1,), bigM)


def build_step_model(state: SelectionState, d: Dataset, cfg: SelectionConfig):
    """Step-``a`` MILP with one binary per DMU not yet in a selected set."""
    E = list(state.E)
    R = set(state.selected)
    rest = [j for j in range(d.n) if j not in R]
    a = state.a + 1
    fm = _FaceModel(f"select_{a}", d, E, rest, cfg, state.bigM)
    mdl = fm.model
    M = state.bigM
    dvars, ivars = {}, {}
    for j in rest:
        dvars[j] = mdl.add_var(f"delta{j}")
        ivars[j] = mdl.add_var(f"I{j}", kind="binary")
        # previous best distance, unless I_j = 1 releases it
        mdl.add_constraint({dvars[j]: 1.0, ivars[j]: M}, ">=", float(state.delta[j]),
                           name=f"keep{j}")
        # new-face distance, unless I_j = 0 releases it
        mdl.add_constraint({dvars[j]: 1.0, ivars[j]: -M, fm.dist[j]: -1.0}, ">=", -M,
                           name=f"new{j}")
    mdl.set_objective({v: 1.0 for v in dvars.values()})
    return fm, rest, dvars


def select_next(state: SelectionState, d: Dataset, cfg: SelectionConfig | None = None):
    """Solve the step-``a`` model; returns ``(R_a or None, updated state)``.

    ``None`` means the stopping rule fired: the best achievable sum equals the
    previous one within ``eps_stop``.
    """
    cfg = cfg or SelectionConfig()
    a = state.a + 1
    E = list(state.E)
    fm, rest, dvars = build_step_model(state, d, cfg)
    if not rest:
        return None, replace(state, converged=True, stop_objective=0.0)
    prev = float(sum(state.delta[j] for j in rest))
    sol = fm.solve(cfg)
    objective = sol.objective
    if objective >= prev - cfg.eps_stop:
        log.info("step %d: objective %.6f does not improve %.6f; stopping", a, objective, prev)
        return None, replace(state, converged=True, stop_objective=objective)
    delta = state.delta.copy()
    improved = [False] * d.n
    for j in rest:
        dj, delta_j = sol[fm.dist[j]], sol[dvars[j]]
        if state.delta[j] - dj > cfg.eps_improve and abs(delta_j - dj) <= cfg.eps_improve:
            improved[j] = True
        delta[j] = delta_j
    rec = fm.extract(sol, a, objective, delta, improved)
    members = _members(rec, E, [j for j in rest if improved[j]], cfg.eps_lambda)
    if not members:
        raise SelectionError(f"step {a}: objective improved by {prev - objective:.3g} "
                             "but no unit qualifies for the new set; check tolerances")
    rs = ReferenceSet(a, members, fm.certificate(sol))
    for old in state.sets:
        if set(old.members) == set(members):
            log.warning("step %d selected the same units as step %d", a, old.step)
    delta[list(members)] = 0.0
    new_state = replace(state, sets=state.sets + (rs,), steps=state.steps + (rec,),
                        delta=delta, D=state.D + (float(delta.sum()),))
    return rs, new_state


def run_selection(d: Dataset, cfg: SelectionConfig | None = None,
                  E: Sequence[int] | None = None) -> SelectionState:
    cfg = cfg or SelectionConfig()
    if E is None:
        E = extreme_efficient_set(d, cfg.solver).E
    state = _initial_state(d, E, cfg)
    log.info("step 1: D=%.6f R=%s", state.D[0], [d.ids[k] for k in state.sets[0].members])
    while state.a < cfg.max_steps:
        rs, state = select_next(state, d, cfg)
        if rs is None:
            return state
        log.info("step %d: D=%.6f R=%s", rs.step, state.D[-1], [d.ids[k] for k in rs.members])
    log.warning("max_steps=%d reached before the stopping rule fired", cfg.max_steps)
    return state


def build_full_step_model(state: SelectionState, d: Dataset, cfg: SelectionConfig):
    """The unsimplified step-``a`` model over all DMUs with ``a`` binaries each.

    Only used to confirm that it has the same optimum as :func:`build_step_model`.
    """
    a = state.a + 1
    E = list(state.E)
    fm = _FaceModel(f"select_full_{a}", d, E, range(d.n), cfg, state.bigM)
    mdl = fm.model
    M = state.bigM
    dvars = {}
    for j in range(d.n):
        dvars[j] = mdl.add_var(f"delta{j}")
        ind = [mdl.add_var(f"I{j}_{h}", kind="binary") for h in range(1, a + 1)]
        for h in range(1, a):
            dh = float(state.steps[h - 1].distance[j])
            mdl.add_constraint({dvars[j]: 1.0, ind[h - 1]: M}, ">=", dh, name=f"old{j}_{h}")
        mdl.add_constraint({dvars[j]: 1.0, ind[a - 1]: M, fm.dist[j]: -1.0}, ">=", 0.0,
                           name=f"new{j}")
        mdl.add_constraint({v: 1.0 for v in ind}, "<=", a - 1, name=f"pick{j}")
    mdl.set_objective({v: 1.0 for v in dvars.values()})
    return fm, dvars


def solve_full_step(state: SelectionState, d: Dataset, cfg: SelectionConfig | None = None) -> float:
    cfg = cfg or SelectionConfig()
    fm, _ = build_full_step_model(state, d, cfg)
    return fm.solve(cfg).objective
