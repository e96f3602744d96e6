"""Invariant checks over selection states and target bundles.

Each check returns a list of problem descriptions; empty means it holds.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .dataset import Dataset
from .selection import SelectionState
from .targets import TargetBundle


def running_min_identity(state: SelectionState, tol: float = 1e-6) -> list[str]:
    out = []
    best = None
    for rec in state.steps:
        best = rec.distance.copy() if best is None else np.minimum(best, rec.distance)
        gap = np.abs(best - rec.delta)
        if gap.max() > tol:
            j = int(gap.argmax())
            out.append(f"step {rec.step}: delta[{j}]={rec.delta[j]:.9g} but running min is {best[j]:.9g}")
    return out


def monotone_objectives(state: SelectionState, eps_stop: float = 1e-6) -> list[str]:
    D = list(state.D)
    out = [f"D[{a + 2}]={D[a + 1]:.9g} does not improve D[{a + 1}]={D[a]:.9g} by more than {eps_stop:g}"
           for a in range(len(D) - 1) if not D[a + 1] < D[a] - eps_stop]
    if state.stop_objective is not None and state.stop_objective < D[-1] - eps_stop:
        out.append("stopping step improved on the last selected objective")
    return out


def certificates(d: Dataset, state: SelectionState, tol: float = 1e-6) -> list[str]:
    out = []
    for rs in state.sets:
        out += [f"R{rs.step}: {p}" for p in rs.certificate.problems(d, rs.members, tol)]
        missing = set(state.E) - set(rs.certificate.b)
        if missing:
            out.append(f"R{rs.step}: certificate lacks slack for {sorted(missing)}")
    return out


def complementarity(state: SelectionState, tol: float = 1e-6) -> list[str]:
    out = []
    for rec in state.steps:
        prod = rec.lambda_total * np.maximum(rec.b, 0.0)
        if prod.size and prod.max() > tol:
            c = int(prod.argmax())
            out.append(f"step {rec.step}: lambda*b = {prod[c]:.3g} for unit {state.E[c]}")
    return out


def face_membership(d: Dataset, state: SelectionState, rtol: float = 1e-9) -> list[str]:
    """Stored targets equal the intensity-weighted combination of E."""
    out = []
    E = list(state.E)
    for rec in state.steps:
        tx = rec.intensities @ d.X[E]
        ty = rec.intensities @ d.Y[E]
        for name, a, b in (("inputs", tx, rec.targets_x), ("outputs", ty, rec.targets_y)):
            if not np.allclose(a, b, rtol=rtol, atol=1e-12):
                out.append(f"step {rec.step}: target {name} differ from the stored intensities")
    return out


def member_fixed_point(d: Dataset, sets, bundles: Sequence[Sequence[TargetBundle]],
                       tol: float = 1e-9) -> list[str]:
    out = []
    for rs, face in zip(sets, bundles):
        for k in rs.members:
            b = face[k]
            if b.distance > tol:
                out.append(f"R{rs.step}: member {d.ids[k]} has distance {b.distance:.3g}")
    return out


def targets_on_face(d: Dataset, sets, bundles: Sequence[Sequence[TargetBundle]],
                    tol: float = 1e-6) -> list[str]:
    out = []
    for rs, face in zip(sets, bundles):
        cert = rs.certificate
        for b in face:
            scale = max(float(np.dot(cert.V, b.x)), 1e-300)
            if abs(cert.gap(b.x, b.y)) > tol * scale:
                out.append(f"R{rs.step}: target of {d.ids[b.dmu]} is off the face")
    return out
