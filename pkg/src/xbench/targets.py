"""Closest targets on each selected face and percent-deviation reports."""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dataset import Dataset
from .efficiency import EfficiencyClassification, extreme_efficient_set
from .milp import ModelSpec, SolverConfig, SolverError, add_abs_deviation, solve
from .selection import ReferenceSet, SelectionConfig, SelectionState, run_selection

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TargetBundle:
    dmu: int
    face: int  # 1-based step index of the reference set
    x: tuple[float, ...]
    y: tuple[float, ...]
    members: tuple[int, ...]
    intensities: tuple[float, ...]  # aligned with members
    distance: float


@dataclass(frozen=True)
class DeviationMatrix:
    """Percent deviations, ``values[j, h, f]`` for DMU j, face h and factor f.

    Inputs: ``(x - x_target) / x``; outputs: ``(y_target - y) / y``.  Positive
    entries mean the actual value is worse than the target.
    """

    ids: tuple[str, ...]
    faces: tuple[int, ...]
    factors: tuple[str, ...]
    values: np.ndarray

    def rounded(self) -> np.ndarray:
        """Whole percents, as displayed in reports."""
        return np.round(self.values * 100).astype(int)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["dmu", "face", "factor", "deviation"])
        for j, dmu in enumerate(self.ids):
            for h, face in enumerate(self.faces):
                for f, name in enumerate(self.factors):
                    w.writerow([dmu, f"R{face}", name, repr(float(self.values[j, h, f]))])
        return buf.getvalue()


def _projection_block(model: ModelSpec, Z: np.ndarray, j: int, members: Sequence[int]):
    lam = [model.add_var(f"lam{k}_{j}") for k in members]
    terms = {}
    for f in range(Z.shape[1]):
        dev = add_abs_deviation(model, {lam[c]: Z[k, f] / Z[j, f] for c, k in enumerate(members)},
                                1.0, constant=-1.0, name=f"dev{j}_{f}")
        terms.update(dev.terms())
    return lam, terms


def _bundle(d: Dataset, j: int, face: int, members, lam) -> TargetBundle:
    lam = np.maximum(np.asarray(lam, dtype=float), 0.0)
    tx = lam @ d.X[list(members)]
    ty = lam @ d.Y[list(members)]
    x, y = d.X[j], d.Y[j]
    dist = float(np.sum(np.abs(x - tx) / x) + np.sum(np.abs(y - ty) / y))
    return TargetBundle(j, face, tuple(tx.tolist()), tuple(ty.tolist()), tuple(members),
                        tuple(lam.tolist()), dist)


def closest_targets_for_face(d: Dataset, rs: ReferenceSet, joint: bool = False,
                             cfg: SolverConfig | None = None) -> list[TargetBundle]:
    """Project every DMU onto the cone of ``rs.members`` in weighted L1.

    The joint model separates by DMU, so by default one small LP is solved per
    DMU; ``joint=True`` solves the single combined LP instead.
    """
    members = list(rs.members)
    Z = np.hstack([d.X, d.Y])
    if joint:
        model = ModelSpec(f"targets_R{rs.step}")
        blocks = []
        obj = {}
        for j in range(d.n):
            lam, terms = _projection_block(model, Z, j, members)
            blocks.append(lam)
            obj.update(terms)
        model.set_objective(obj)
        sol = solve(model, cfg)
        if not sol.ok:
            raise SolverError(f"{model.name}: {sol.status}")
        return [_bundle(d, j, rs.step, members, [sol[v] for v in blocks[j]]) for j in range(d.n)]
    out = []
    for j in range(d.n):
        model = ModelSpec(f"targets_R{rs.step}_{j}")
        lam, terms = _projection_block(model, Z, j, members)
        model.set_objective(terms)
        sol = solve(model, cfg)
        if not sol.ok:
            raise SolverError(f"{model.name}: {sol.status}")
        out.append(_bundle(d, j, rs.step, members, [sol[v] for v in lam]))
    return out


def deviation_report(d: Dataset, bundles: Sequence[Sequence[TargetBundle]]) -> DeviationMatrix:
    """``bundles[h][j]`` is DMU j's bundle on the h-th face."""
    faces = tuple(face[0].face for face in bundles)
    vals = np.zeros((d.n, len(bundles), d.m + d.s))
    X, Y = d.X, d.Y
    for h, face in enumerate(bundles):
        for b in face:
            j = b.dmu
            vals[j, h, :d.m] = (X[j] - np.asarray(b.x)) / X[j]
            vals[j, h, d.m:] = (np.asarray(b.y) - Y[j]) / Y[j]
    return DeviationMatrix(tuple(d.ids), faces, tuple(d.factor_names), vals)


@dataclass
class CrossBenchmarkResult:
    dataset: Dataset
    classification: EfficiencyClassification | None = None
    selection: SelectionState | None = None
    bundles: list[list[TargetBundle]] = field(default_factory=list)
    deviations: DeviationMatrix | None = None
    errors: list[str] = field(default_factory=list)

    @property
    def partial(self) -> bool:
        return bool(self.errors) or self.selection is None or not self.selection.converged

    @property
    def D(self) -> tuple[float, ...]:
        return self.selection.D if self.selection else ()

    def bundle(self, dmu: str | int, face: int) -> TargetBundle:
        j = self.dataset.index(dmu) if isinstance(dmu, str) else dmu
        return self.bundles[face - 1][j]


def cross_benchmark(d: Dataset, cfg: SelectionConfig | None = None) -> CrossBenchmarkResult:
    """Classify, select reference sets, then set closest targets on every selected face."""
    cfg = cfg or SelectionConfig()
    res = CrossBenchmarkResult(d)
    stage = "classification"
    try:
        res.classification = extreme_efficient_set(d, cfg.solver)
        stage = "selection"
        res.selection = run_selection(d, cfg, E=res.classification.E)
        stage = "targets"
        for rs in res.selection.sets:
            res.bundles.append(closest_targets_for_face(d, rs, cfg=cfg.solver))
        res.deviations = deviation_report(d, res.bundles)
    except Exception as exc:
        log.error("%s stage failed: %s", stage, exc)
        res.errors.append(f"{stage}: {exc}")
        raise CrossBenchmarkError(stage, res) from exc
    return res


class CrossBenchmarkError(RuntimeError):
    def __init__(self, stage: str, partial: CrossBenchmarkResult):
        super().__init__(f"{stage} stage failed: {partial.errors[-1]}")
        self.stage = stage
        self.partial = partial
