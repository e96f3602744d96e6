"""Small solver-agnostic layer for LP / MILP models with SOS1 groups.

Models are built as plain Python objects (:class:`ModelSpec`) and handed to
:func:`solve`, which dispatches to SCIP (``pyscipopt``) when the model carries
SOS1 groups and to HiGHS (``highspy``) otherwise.  Every optimal
solution is re-checked against the model independently of the backend.
"""
from __future__ import annotations

import contextlib
import math
import os
import re
import sys
import time
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import sparse

INF = math.inf

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
LIMIT_HIT = "limit-hit"


class SolverError(RuntimeError):
    """Backend failure or an optimal point that fails the independent re-check."""


class ComplementarityError(SolverError):
    """A big-M encoded complementarity pair is violated or cut by its caps."""


@dataclass(frozen=True)
class Variable:
    index: int
    name: str
    lb: float = 0.0
    ub: float = INF
    kind: str = "continuous"  # or "binary"

    def __repr__(self) -> str:
        return f"Variable({self.name!r})"


@dataclass(frozen=True)
class Constraint:
    coeffs: dict[int, float]
    sense: str  # "<=", "=", ">="
    rhs: float
    name: str


@dataclass(frozen=True)
class AbsDeviation:
    """``|expr| = pos + neg`` with ``expr = pos - neg``; contributes ``weight*(pos+neg)``."""

    pos: Variable
    neg: Variable
    weight: float

    def terms(self) -> dict[Variable, float]:
        return {self.pos: self.weight, self.neg: self.weight}

    def value(self, sol: "Solution") -> float:
        return self.weight * (sol[self.pos] + sol[self.neg])


@dataclass(frozen=True)
class ComplementarityPair:
    first: Variable
    second: Variable
    cap_first: float | None = None
    cap_second: float | None = None
    switch: Variable | None = None


@dataclass
class SolverConfig:
    backend: str = "auto"  # auto | scip | highs
    mip_gap: float = 1e-9
    feasibility_tol: float = 1e-6
    time_limit: float | None = None
    seed: int = 0
    dump_lp: str | None = None  # directory; each model written there before solving
    scip_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.backend not in ("auto", "scip", "highs"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.mip_gap <= 0 or self.feasibility_tol <= 0:
            raise ValueError("tolerances must be positive")


class ModelSpec:
    def __init__(self, name: str = "model"):
        self.name = name
        self.variables: list[Variable] = []
        self.constraints: list[Constraint] = []
        self.sos1: list[tuple[int, ...]] = []
        self.complementarity: list[ComplementarityPair] = []
        self.objective: dict[int, float] = {}
        self.objective_constant = 0.0
        self.sense = "min"
        self._names: set[str] = set()

    def add_var(self, name: str, lb: float = 0.0, ub: float = INF,
                kind: str = "continuous") -> Variable:
        if kind not in ("continuous", "binary"):
            raise ValueError(f"unknown variable kind {kind!r}")
        if name in self._names:
            raise ValueError(f"duplicate variable name {name!r}")
        if kind == "binary":
            lb, ub = max(lb, 0.0), min(ub, 1.0)
        if lb > ub:
            raise ValueError(f"empty bounds for {name!r}: [{lb}, {ub}]")
        var = Variable(len(self.variables), name, float(lb), float(ub), kind)
        self.variables.append(var)
        self._names.add(name)
        return var

    def _own(self, var: Variable) -> int:
        if not (0 <= var.index < len(self.variables)) or self.variables[var.index] is not var:
            raise ValueError(f"{var!r} is not declared in model {self.name!r}")
        return var.index

    def add_constraint(self, terms: Mapping[Variable, float], sense: str, rhs: float,
                       name: str | None = None) -> Constraint:
        if sense not in ("<=", "=", ">="):
            raise ValueError(f"unknown constraint sense {sense!r}")
        coeffs: dict[int, float] = {}
        for var, c in terms.items():
            idx = self._own(var)
            coeffs[idx] = coeffs.get(idx, 0.0) + float(c)
        con = Constraint(coeffs, sense, float(rhs), name or f"c{len(self.constraints)}")
        self.constraints.append(con)
        return con

    def add_sos1(self, variables: Sequence[Variable]) -> None:
        if len(variables) < 2:
            raise ValueError("an SOS1 group needs at least two variables")
        self.sos1.append(tuple(self._own(v) for v in variables))

    def set_objective(self, terms: Mapping[Variable, float], sense: str = "min",
                      constant: float = 0.0) -> None:
        if sense not in ("min", "max"):
            raise ValueError(f"unknown objective sense {sense!r}")
        coeffs: dict[int, float] = {}
        for var, c in terms.items():
            idx = self._own(var)
            coeffs[idx] = coeffs.get(idx, 0.0) + float(c)
        self.objective = coeffs
        self.objective_constant = float(constant)
        self.sense = sense

    @property
    def has_integers(self) -> bool:
        return any(v.kind == "binary" for v in self.variables)

    def to_lp(self) -> str:
        return format_lp(self)


@dataclass(frozen=True)
class Solution:
    status: str
    objective: float
    values: np.ndarray
    names: tuple[str, ...]
    backend: str
    nodes: int = 0
    wall_time: float = 0.0
    max_violation: float = 0.0

    def __getitem__(self, var: Variable) -> float:
        return float(self.values[var.index])

    def value_map(self) -> dict[str, float]:
        return dict(zip(self.names, self.values.tolist()))

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL


def add_abs_deviation(model: ModelSpec, terms: Mapping[Variable, float], weight: float,
                      constant: float = 0.0, name: str = "dev") -> AbsDeviation:
    """Linearize ``weight * |terms + constant|`` with two nonnegative variables.

    Adds ``terms + constant = pos - neg``.  The returned handle's
    :meth:`AbsDeviation.terms` go into an objective or a distance constraint;
    when that quantity is minimized, at most one of ``pos``/``neg`` is positive.
    """
    if not weight > 0:
        raise ValueError(f"weight must be positive, got {weight}")
    pos = model.add_var(f"{name}_p")
    neg = model.add_var(f"{name}_n")
    row = dict(terms)
    row[pos] = row.get(pos, 0.0) - 1.0
    row[neg] = row.get(neg, 0.0) + 1.0
    model.add_constraint(row, "=", -constant, name=f"{name}_def")
    return AbsDeviation(pos, neg, float(weight))


def encode_complementarity(model: ModelSpec,
                           pairs: Iterable[tuple[Variable, Variable]],
                           mode: str = "sos1",
                           caps: Sequence[tuple[float, float]] | None = None) -> ModelSpec:
    """Impose ``first * second = 0`` for each pair of nonnegative variables.

    ``sos1`` registers each pair as an SOS1 group.  ``bigm`` adds a binary
    switch ``z`` with ``first <= cap_first * z`` and ``second <= cap_second * (1 - z)``;
    caps must then be finite.  Pairs are recorded for :func:`check_complementarity`.
    """
    pairs = list(pairs)
    if mode == "sos1":
        for a, b in pairs:
            model.add_sos1([a, b])
            model.complementarity.append(ComplementarityPair(a, b))
        return model
    if mode != "bigm":
        raise ValueError(f"unknown complementarity mode {mode!r}")
    if caps is None or len(caps) != len(pairs):
        raise ValueError("big-M complementarity needs one (cap, cap) per pair")
    for (a, b), (ca, cb) in zip(pairs, caps):
        if not (0 < ca < INF and 0 < cb < INF):
            raise ValueError(f"big-M caps must be finite and positive, got {(ca, cb)}")
        z = model.add_var(f"z_{a.name}_{b.name}", kind="binary")
        model.add_constraint({a: 1.0, z: -ca}, "<=", 0.0, name=f"bm1_{a.name}")
        model.add_constraint({b: 1.0, z: cb}, "<=", cb, name=f"bm2_{b.name}")
        model.complementarity.append(ComplementarityPair(a, b, ca, cb, z))
    return model


def check_complementarity(model: ModelSpec, sol: Solution, tol: float = 1e-6) -> list[str]:
    """Return human-readable problems with the complementarity pairs at ``sol``.

    Reports products above ``tol`` and, for big-M pairs, any variable sitting
    at its cap (a binding cap may have cut off the true optimum).
    """
    problems = []
    for p in model.complementarity:
        a, b = sol[p.first], sol[p.second]
        if a * b > tol:
            problems.append(f"{p.first.name}*{p.second.name} = {a * b:.3g} > {tol:g}")
        if p.switch is not None:
            if a >= p.cap_first * (1 - 1e-7):
                problems.append(f"{p.first.name} at its cap {p.cap_first:g}; increase the cap")
            if b >= p.cap_second * (1 - 1e-7):
                problems.append(f"{p.second.name} at its cap {p.cap_second:g}; increase the cap")
    return problems


def max_violation(model: ModelSpec, values: np.ndarray) -> float:
    """Largest scaled violation of bounds, rows, integrality and SOS1 at ``values``.

    Row violations are divided by ``max(1, |rhs|)``.
    """
    worst = 0.0
    for v in model.variables:
        x = values[v.index]
        worst = max(worst, v.lb - x, x - v.ub)
        if v.kind == "binary":
            worst = max(worst, abs(x - round(x)))
    for con in model.constraints:
        lhs = sum(c * values[i] for i, c in con.coeffs.items())
        scale = max(1.0, abs(con.rhs))
        if con.sense == "<=":
            viol = lhs - con.rhs
        elif con.sense == ">=":
            viol = con.rhs - lhs
        else:
            viol = abs(lhs - con.rhs)
        worst = max(worst, viol / scale)
    for group in model.sos1:
        mags = sorted((abs(values[i]) for i in group), reverse=True)
        worst = max(worst, mags[1])
    return float(worst)


def solve(model: ModelSpec, cfg: SolverConfig | None = None) -> Solution:
    cfg = cfg or SolverConfig()
    if cfg.dump_lp:
        os.makedirs(cfg.dump_lp, exist_ok=True)
        path = os.path.join(cfg.dump_lp, _lp_name(model.name) + ".lp")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(format_lp(model))
    backend = cfg.backend
    if backend == "auto":
        backend = "scip" if model.sos1 else "highs"
    if backend == "highs" and model.sos1:
        raise SolverError("HiGHS has no SOS1 support; use the big-M complementarity mode")
    t0 = time.perf_counter()
    if backend == "scip":
        status, obj, values, nodes = _solve_scip(model, cfg)
    else:
        status, obj, values, nodes = _solve_highs(model, cfg)
    elapsed = time.perf_counter() - t0
    viol = 0.0
    if values is not None:
        viol = max_violation(model, values)
        # both backends report the objective; recompute it from the point
        obj = model.objective_constant + sum(c * values[i] for i, c in model.objective.items())
    else:
        values = np.full(len(model.variables), np.nan)
    if status == OPTIMAL and viol > cfg.feasibility_tol:
        raise SolverError(f"{model.name}: {backend} optimum violates the model by {viol:.3g}")
    return Solution(status, float(obj), values, tuple(v.name for v in model.variables),
                    backend, nodes, elapsed, viol)


def _solve_highs(model: ModelSpec, cfg: SolverConfig):
    import highspy

    n = len(model.variables)
    c = np.zeros(n)
    for i, coef in model.objective.items():
        c[i] = coef
    lb = np.array([v.lb for v in model.variables])
    ub = np.array([v.ub for v in model.variables])
    binary = np.array([v.kind == "binary" for v in model.variables], dtype=bool)
    nr = len(model.constraints)
    rows, cols, data = [], [], []
    lo, hi = np.empty(nr), np.empty(nr)
    for r, con in enumerate(model.constraints):
        for i, coef in con.coeffs.items():
            rows.append(r)
            cols.append(i)
            data.append(coef)
        lo[r] = -INF if con.sense == "<=" else con.rhs
        hi[r] = INF if con.sense == ">=" else con.rhs
    a = sparse.csc_matrix((data, (rows, cols)), shape=(nr, n))

    def run(col_lower, col_upper, integer):
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        h.setOptionValue("threads", 1)
        h.setOptionValue("random_seed", int(cfg.seed))
        h.setOptionValue("mip_rel_gap", cfg.mip_gap)
        # tight tolerances keep big-M switches from leaking through
        h.setOptionValue("mip_feasibility_tolerance", 1e-9)
        h.setOptionValue("primal_feasibility_tolerance", 1e-9)
        if cfg.time_limit is not None:
            h.setOptionValue("time_limit", float(cfg.time_limit))
        lp = highspy.HighsLp()
        lp.num_col_, lp.num_row_ = n, nr
        lp.col_cost_ = c
        lp.col_lower_, lp.col_upper_ = col_lower, col_upper
        lp.row_lower_, lp.row_upper_ = lo, hi
        lp.sense_ = highspy.ObjSense.kMaximize if model.sense == "max" else highspy.ObjSense.kMinimize
        lp.a_matrix_.format_ = highspy.MatrixFormat.kColwise
        lp.a_matrix_.start_ = a.indptr
        lp.a_matrix_.index_ = a.indices
        lp.a_matrix_.value_ = a.data
        if integer.any():
            lp.integrality_ = [highspy.HighsVarType.kInteger if b else highspy.HighsVarType.kContinuous
                               for b in integer]
        h.passModel(lp)
        h.run()
        return h, h.getModelStatus()

    h, st = run(lb, ub, binary)
    S = highspy.HighsModelStatus
    nodes = int(h.getInfo().mip_node_count) if binary.any() else 0
    if st == S.kOptimal:
        x = np.array(h.getSolution().col_value, dtype=float)
        fun = h.getInfo().objective_function_value
        if binary.any():
            # fix binaries at their rounded values and re-solve the LP so that
            # switch rows hold exactly
            lb2, ub2 = lb.copy(), ub.copy()
            lb2[binary] = ub2[binary] = np.round(x[binary])
            h2, st2 = run(lb2, ub2, np.zeros(n, dtype=bool))
            if st2 == S.kOptimal:
                fun2 = h2.getInfo().objective_function_value
                worse = fun2 - fun if model.sense == "min" else fun - fun2
                if worse <= cfg.mip_gap * max(1.0, abs(fun)) + 1e-9:
                    x = np.array(h2.getSolution().col_value, dtype=float)
        return OPTIMAL, fun, x, nodes
    if st == S.kInfeasible:
        return INFEASIBLE, math.nan, None, nodes
    if st in (S.kUnbounded, S.kUnboundedOrInfeasible):
        return UNBOUNDED, math.nan, None, nodes
    if st in (S.kTimeLimit, S.kIterationLimit, S.kSolutionLimit, S.kObjectiveBound,
              S.kObjectiveTarget):
        sol = h.getSolution()
        x = np.array(sol.col_value, dtype=float) if sol.value_valid else None
        return LIMIT_HIT, math.nan, x, nodes
    raise SolverError(f"{model.name}: HiGHS ended with status {h.modelStatusToString(st)}")


@contextlib.contextmanager
def _quiet_stderr():
    # SCIP prints LP errors straight to fd 2; they resurface as exceptions anyway
    try:
        fd = sys.stderr.fileno()
    except (AttributeError, OSError, ValueError):
        yield
        return
    sys.stderr.flush()
    saved = os.dup(fd)
    try:
        with open(os.devnull, "w") as null:
            os.dup2(null.fileno(), fd)
        yield
    finally:
        os.dup2(saved, fd)
        os.close(saved)


# tried in order when SoPlex reports unresolved numerical trouble
_SCIP_FALLBACKS = (
    {},
    {"lp/scaling": 2},
    {"presolving/maxrounds": 0},
    {"numerics/lpfeastolfactor": 0.1},
    {"lp/scaling": 2, "presolving/maxrounds": 0, "lp/checkprimfeas": False},
)


def _solve_scip(model: ModelSpec, cfg: SolverConfig):
    errors = []
    for extra in _SCIP_FALLBACKS:
        try:
            return _solve_scip_once(model, cfg, extra)
        except Exception as exc:  # pyscipopt raises bare Exception on LP errors
            if "SCIP" not in str(exc):
                raise
            errors.append(f"{extra or 'defaults'}: {exc}")
    raise SolverError(f"{model.name}: SCIP failed under every setting: " + "; ".join(errors))


def _solve_scip_once(model: ModelSpec, cfg: SolverConfig, extra: dict):
    import pyscipopt

    m = pyscipopt.Model(model.name)
    m.hideOutput()
    m.setParam("limits/gap", cfg.mip_gap)
    m.setParam("numerics/feastol", min(cfg.feasibility_tol, 1e-6))
    m.setParam("randomization/randomseedshift", int(cfg.seed))
    if cfg.time_limit is not None:
        m.setParam("limits/time", float(cfg.time_limit))
    for key, val in {**extra, **cfg.scip_params}.items():
        m.setParam(key, val)
    svars = []
    for v in model.variables:
        vtype = "B" if v.kind == "binary" else "C"
        svars.append(m.addVar(name=v.name, vtype=vtype,
                              lb=None if v.lb == -INF else v.lb,
                              ub=None if v.ub == INF else v.ub))
    for con in model.constraints:
        expr = pyscipopt.quicksum(c * svars[i] for i, c in con.coeffs.items())
        if con.sense == "<=":
            m.addCons(expr <= con.rhs, name=con.name)
        elif con.sense == ">=":
            m.addCons(expr >= con.rhs, name=con.name)
        else:
            m.addCons(expr == con.rhs, name=con.name)
    for k, group in enumerate(model.sos1):
        m.addConsSOS1([svars[i] for i in group], weights=list(range(1, len(group) + 1)),
                      name=f"sos{k}")
    obj = pyscipopt.quicksum(c * svars[i] for i, c in model.objective.items())
    m.setObjective(obj, "maximize" if model.sense == "max" else "minimize")
    with _quiet_stderr():
        m.optimize()
    status = m.getStatus()
    nodes = int(m.getNNodes())
    if status == "optimal":
        best = m.getBestSol()
        x = np.array([m.getSolVal(best, sv) for sv in svars], dtype=float)
        return OPTIMAL, m.getObjVal(), x, nodes
    if status == "infeasible":
        return INFEASIBLE, math.nan, None, nodes
    if status in ("unbounded", "inforunbd"):
        return UNBOUNDED, math.nan, None, nodes
    if status in ("timelimit", "nodelimit", "gaplimit", "sollimit", "userinterrupt"):
        if m.getNSols() > 0:
            best = m.getBestSol()
            x = np.array([m.getSolVal(best, sv) for sv in svars], dtype=float)
            return LIMIT_HIT, m.getObjVal(), x, nodes
        return LIMIT_HIT, math.nan, None, nodes
    raise SolverError(f"{model.name}: SCIP ended with status {status!r}")


_LP_NAME = re.compile(r"[^A-Za-z0-9_.]")


def _lp_name(name: str) -> str:
    name = _LP_NAME.sub("_", name)
    return name if not name[:1].isdigit() and name[:1] not in ("e", "E", ".") else "v_" + name


def _lp_expr(coeffs: Mapping[int, float], names: Sequence[str]) -> str:
    if not coeffs:
        return "0"
    parts = []
    for i, c in coeffs.items():
        sign = "-" if c < 0 else "+"
        parts.append(f"{sign} {abs(c)!r} {names[i]}")
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def format_lp(model: ModelSpec) -> str:
    """Render the model in CPLEX LP text format."""
    names = [_lp_name(v.name) for v in model.variables]
    out = [f"\\ {model.name}", "Minimize" if model.sense == "min" else "Maximize",
           f" obj: {_lp_expr(model.objective, names)}", "Subject To"]
    for con in model.constraints:
        op = {"<=": "<=", ">=": ">=", "=": "="}[con.sense]
        out.append(f" {_lp_name(con.name)}: {_lp_expr(con.coeffs, names)} {op} {con.rhs!r}")
    out.append("Bounds")
    for v, nm in zip(model.variables, names):
        if v.kind == "binary":
            continue
        lo = "-inf" if v.lb == -INF else repr(v.lb)
        hi = "+inf" if v.ub == INF else repr(v.ub)
        out.append(f" {lo} <= {nm} <= {hi}")
    binaries = [nm for v, nm in zip(model.variables, names) if v.kind == "binary"]
    if binaries:
        out.append("Binaries")
        out.append(" " + " ".join(binaries))
    if model.sos1:
        out.append("SOS")
        for k, group in enumerate(model.sos1):
            members = " ".join(f"{names[i]}:{w}" for w, i in enumerate(group, start=1))
            out.append(f" s{k}: S1:: {members}")
    out.append("End")
    return "\n".join(out) + "\n"
