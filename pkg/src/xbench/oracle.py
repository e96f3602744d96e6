"""Exhaustive reference path for small instances.

Enumerates every subset of E that lies on a common supporting hyperplane with
strictly positive weights, projects every DMU onto the cone of each maximal
such subset with a plain LP, and replays the greedy face selection by brute
force.  Uses ``scipy.optimize.linprog`` directly and shares no model-building
code with the MILP path it is meant to check.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .dataset import Dataset
from .selection import HyperplaneCertificate

FACE_CAP = 12


class OracleError(RuntimeError):
    pass


@dataclass(frozen=True)
class EfficientFace:
    members: tuple[int, ...]
    certificate: HyperplaneCertificate
    maximal: bool = False


@dataclass(frozen=True)
class OracleResult:
    D: tuple[float, ...]
    faces: tuple[EfficientFace, ...]  # chosen face per step
    distances: np.ndarray  # (number of maximal faces, n)
    candidates: tuple[EfficientFace, ...]


def _support(Xn, Yn, S):
    """Weights (V, U) >= 1 with V'x = U'y on ``S`` and V'x >= U'y everywhere, or None."""
    n, m = Xn.shape
    s = Yn.shape[1]
    # variables [V, U]; rows: -(V'x_j - U'y_j) <= 0 for all j, equality on S
    A_ub = -np.hstack([Xn, -Yn])
    A_eq = np.hstack([Xn[list(S)], -Yn[list(S)]])
    res = linprog(np.ones(m + s), A_ub=A_ub, b_ub=np.zeros(n), A_eq=A_eq,
                  b_eq=np.zeros(len(S)), bounds=[(1, None)] * (m + s), method="highs")
    if res.status == 2:
        return None
    if res.status != 0:
        raise OracleError(f"support LP for {S}: {res.message}")
    return res.x[:m], res.x[m:]


def enumerate_faces(d: Dataset, E: Sequence[int], cap: int = FACE_CAP) -> list[EfficientFace]:
    """All non-empty subsets of ``E`` that span an efficient face.

    Subsets are grown only from feasible ones; a face is flagged maximal when
    no single extra unit of ``E`` can join it.
    """
    E = sorted(E)
    if len(E) > cap:
        raise OracleError(f"|E| = {len(E)} exceeds the enumeration cap {cap}")
    sx, sy = d.X.max(axis=0), d.Y.max(axis=0)
    Xn, Yn = d.X / sx, d.Y / sy
    found: dict[tuple[int, ...], tuple] = {}
    frontier = []
    for k in E:
        w = _support(Xn, Yn, (k,))
        if w is not None:
            found[(k,)] = w
            frontier.append((k,))
    while frontier:
        nxt = set()
        for S in frontier:
            for k in E:
                if k <= S[-1]:
                    continue
                T = S + (k,)
                if T in found or any(T[:i] + T[i + 1:] not in found for i in range(len(T))):
                    continue
                w = _support(Xn, Yn, T)
                if w is not None:
                    found[T] = w
                    nxt.add(T)
        frontier = sorted(nxt)
    faces = []
    for S, (V, U) in sorted(found.items(), key=lambda kv: (len(kv[0]), kv[0])):
        maximal = not any(tuple(sorted(S + (k,))) in found for k in E if k not in S)
        Vr, Ur = V / sx, U / sy
        t = 1.0 / min(Vr.min(), Ur.min())
        Vr, Ur = Vr * t, Ur * t
        b = {k: float(Vr @ d.X[k] - Ur @ d.Y[k]) for k in E}
        faces.append(EfficientFace(S, HyperplaneCertificate(tuple(Vr), tuple(Ur), b), maximal))
    return faces


def cone_distance(d: Dataset, j: int, members: Sequence[int]) -> tuple[float, np.ndarray]:
    """Weighted L1 distance from DMU ``j`` to the cone of ``members``, and the intensities."""
    X, Y = d.X, d.Y
    members = list(members)
    q = len(members)
    Z = np.hstack([X, Y])  # (n, m+s)
    z = Z[j]
    p = Z.shape[1]
    # variables [lambda (q), pos (p), neg (p)]; sum_k lam_k Z_k / z - pos + neg = 1
    A_eq = np.hstack([(Z[members] / z).T, -np.eye(p), np.eye(p)])
    c = np.concatenate([np.zeros(q), np.ones(2 * p)])
    res = linprog(c, A_eq=A_eq, b_eq=np.ones(p), bounds=[(0, None)] * (q + 2 * p),
                  method="highs")
    if res.status != 0:
        raise OracleError(f"projection LP for DMU {j}: {res.message}")
    lam = res.x[:q]
    target = lam @ Z[members]
    return float(np.sum(np.abs(z - target) / z)), lam


def brute_force_selection(d: Dataset, faces: Sequence[EfficientFace],
                          eps_stop: float = 1e-6, max_steps: int = 50) -> OracleResult:
    """Greedy selection by exhaustive search over ``faces``."""
    cands = [f for f in faces if f.maximal] or list(faces)
    if not cands:
        raise OracleError("no faces to select from")
    dist = np.array([[cone_distance(d, j, f.members)[0] for j in range(d.n)] for f in cands])
    totals = dist.sum(axis=1)
    best = int(np.argmin(totals))
    delta = dist[best].copy()
    D = [float(totals[best])]
    chosen = [cands[best]]
    while len(chosen) < max_steps:
        totals = np.minimum(dist, delta[None, :]).sum(axis=1)
        best = int(np.argmin(totals))
        if totals[best] >= D[-1] - eps_stop:
            break
        delta = np.minimum(delta, dist[best])
        D.append(float(totals[best]))
        chosen.append(cands[best])
    return OracleResult(tuple(D), tuple(chosen), dist, tuple(cands))
