"""Acceptance gate: one PASS/FAIL line per criterion.

Criteria 1-3 need the full 28-airline panel, which is not shipped with the
package.  Point ``XBENCH_AIRLINES`` at a CSV in the ``dmu,in:*,out:*`` layout
(or drop it at ``tests/data/airlines.csv``); without it those three criteria
fail with an explanation instead of being skipped.
"""
import time
from dataclasses import replace

import numpy as np
import pytest

from conftest import airlines_path, random_instance
from xbench import checks
from xbench.dataset import load_dataset, rescale
from xbench.efficiency import extreme_efficient_set
from xbench.oracle import brute_force_selection, enumerate_faces
from xbench.selection import SelectionConfig, run_selection, select_next, solve_full_step
from xbench.targets import closest_targets_for_face, cross_benchmark

TABLE1_D = (17.021, 12.999, 11.076, 10.119, 10.060, 10.017, 9.994)
EFFICIENT_AIRLINES = {"JAL", "QANTAS", "SAUDIA", "SINGAPORE", "FINNAIR", "LUFTHANSA",
                      "SWISSAIR", "PORTUGAL", "AM.WESTERN"}
NIPPON_R1 = (21026.7, 588.9, 1250.8, 4207.8, 35261, 614)

RESULTS: dict[str, tuple[bool, str]] = {}


def record(name, ok, detail=""):
    RESULTS[name] = (ok, detail)
    print(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def airlines():
    path = airlines_path()
    if not path.exists():
        return None
    return load_dataset(path)


@pytest.fixture(scope="module")
def airline_result(airlines):
    if airlines is None:
        return None, 0.0
    t0 = time.perf_counter()
    res = cross_benchmark(airlines)
    return res, time.perf_counter() - t0


def _missing(path):
    return (f"airline panel not found at {path}; set XBENCH_AIRLINES to a CSV with the "
            "28 airlines (only 8 rows ship in tests/data)")


def test_criterion_1_objective_sequence(airline_result):
    name = "criterion 1: objective sequence on the 28-airline panel"
    res, secs = airline_result
    if res is None:
        record(name, False, _missing(airlines_path()))
    D = res.D
    ok_len = len(D) == len(TABLE1_D)
    ok_vals = ok_len and all(abs(a - b) <= 1e-3 * b for a, b in zip(D, TABLE1_D))
    record(name, ok_vals and secs < 300,
           f"D = {', '.join(f'{v:.3f}' for v in D)} in {secs:.1f}s")


def test_criterion_2_target_spot_checks(airline_result):
    name = "criterion 2: target spot checks on the 28-airline panel"
    res, _ = airline_result
    if res is None:
        record(name, False, _missing(airlines_path()))
    problems = []
    dv = res.deviations
    faces = res.selection.a
    for dmu, zero_faces in (("SINGAPORE", (1, 2, 4, 6, 7)), ("JAL", (2, 4, 5, 7))):
        j = res.dataset.index(dmu)
        for h in zero_faces:
            if h > faces or np.abs(dv.values[j, h - 1]).max() > 1e-6:
                problems.append(f"{dmu} not at 0% under R{h}")
    if faces >= 1:
        b = res.bundle("NIPPON", 1)
        got = np.array(b.x + b.y)
        if np.any(np.abs(got - NIPPON_R1) > 0.01 * np.array(NIPPON_R1)):
            problems.append(f"NIPPON R1 target {np.round(got, 1).tolist()}")
    record(name, not problems, "; ".join(problems) or "all spot checks hold")


def test_criterion_3_extreme_efficient_airlines(airlines):
    name = "criterion 3: exactly the 9 named airlines are extreme efficient"
    if airlines is None:
        record(name, False, _missing(airlines_path()))
    got = set(extreme_efficient_set(airlines).extreme_ids)
    record(name, got == EFFICIENT_AIRLINES, f"got {sorted(got)}")


def _property_problems(seed):
    d, E = random_instance(seed)
    cfg = SelectionConfig()
    st = run_selection(d, cfg, E=E)
    out = []
    out += checks.running_min_identity(st)
    out += checks.monotone_objectives(st, cfg.eps_stop)
    if not st.converged:
        out.append("did not terminate")
    out += checks.certificates(d, st)
    out += checks.complementarity(st)
    bundles = [closest_targets_for_face(d, rs) for rs in st.sets]
    out += checks.member_fixed_point(d, st.sets, bundles)
    f = np.random.default_rng(seed).uniform(0.001, 1000, d.m + d.s)
    D_scaled = run_selection(rescale(d, f), cfg, E=E).D
    if len(D_scaled) != len(st.D) or np.abs(np.subtract(D_scaled, st.D)).max() > 1e-6:
        out.append(f"rescaled D {D_scaled} vs {st.D}")
    D_big = run_selection(d, SelectionConfig(bigm_scale=10.0), E=E).D
    if len(D_big) != len(st.D) or np.abs(np.subtract(D_big, st.D)).max() > 1e-6:
        out.append(f"M x10 D {D_big} vs {st.D}")
    for a in range(1, st.a + 1):
        prefix = replace(st, sets=st.sets[:a], steps=st.steps[:a], D=st.D[:a],
                         converged=False, stop_objective=None)
        best = np.min([rec.distance for rec in st.steps[:a]], axis=0)
        best[list(prefix.selected)] = 0.0
        prefix = replace(prefix, delta=best)
        _, after = select_next(prefix, d, cfg)
        simplified = after.D[-1] if after.a > a else after.stop_objective
        full = solve_full_step(prefix, d, cfg)
        if abs(full - simplified) > 1e-6:
            out.append(f"step {a + 1}: full model {full} vs simplified {simplified}")
    for rs, face in zip(st.sets, bundles):
        joint = closest_targets_for_face(d, rs, joint=True)
        gap = max(abs(a.distance - b.distance) for a, b in zip(joint, face))
        if gap > 1e-9:
            out.append(f"R{rs.step}: joint vs per-DMU distance gap {gap:.2e}")
    return [f"seed {seed}: {p}" for p in out]


def test_criterion_4_property_suite():
    problems = []
    for seed in range(10):
        problems += _property_problems(seed)
    record("criterion 4: property suite on synthetic instances", not problems,
           "; ".join(problems[:5]) or "10 instances, all properties hold")


def test_criterion_5_oracle_equivalence():
    t0 = time.perf_counter()
    problems = []
    count = 50
    for seed in range(100, 100 + count):
        d, E = random_instance(seed)
        assert d.n <= 8 and d.m + d.s <= 3 and len(E) <= 6
        st = run_selection(d, E=E)
        orc = brute_force_selection(d, enumerate_faces(d, E))
        if len(st.D) != len(orc.D) or np.abs(np.subtract(st.D, orc.D)).max() > 1e-6:
            problems.append(f"seed {seed}: MILP {st.D} vs oracle {orc.D}")
    secs = time.perf_counter() - t0
    if secs >= 120:
        problems.append(f"took {secs:.1f}s")
    record("criterion 5: MILP path equals exhaustive oracle", not problems,
           "; ".join(problems[:5]) or f"{count} instances agree in {secs:.1f}s")
