"""Serialization of cross-benchmark results: JSON document, CSV series, text tables."""
from __future__ import annotations

import json
from dataclasses import asdict

from .targets import CrossBenchmarkResult

SCHEMA = "xbench/1"


def result_to_dict(res: CrossBenchmarkResult, config: dict | None = None) -> dict:
    d = res.dataset
    ids = d.ids
    doc: dict = {
        "schema": SCHEMA,
        "dataset": {"inputs": list(d.input_names), "outputs": list(d.output_names), "dmus": ids},
        "config": config or {},
        "partial": res.partial,
        "errors": list(res.errors),
    }
    if res.classification is not None:
        c = res.classification
        doc["classification"] = {
            "pareto_efficient": [ids[j] for j in range(d.n) if c.pareto[j]],
            "extreme_efficient": c.extreme_ids,
        }
    st = res.selection
    if st is not None:
        doc["bigM"] = st.bigM
        doc["D"] = list(st.D)
        doc["stop_objective"] = st.stop_objective
        doc["converged"] = st.converged
        doc["reference_sets"] = [
            {
                "step": rs.step,
                "members": [ids[k] for k in rs.members],
                "certificate": {
                    "V": list(rs.certificate.V),
                    "U": list(rs.certificate.U),
                    "b": {ids[k]: v for k, v in sorted(rs.certificate.b.items())},
                },
            }
            for rs in st.sets
        ]
        doc["selection_steps"] = [
            {
                "step": rec.step,
                "objective": rec.objective,
                "evaluated": [ids[j] for j in rec.evaluated],
                "improved": [ids[j] for j in range(d.n) if rec.improved[j]],
                "delta": dict(zip(ids, rec.delta.tolist())),
                "distance": dict(zip(ids, rec.distance.tolist())),
                "nodes": rec.nodes,
            }
            for rec in st.steps
        ]
    doc["targets"] = [
        {
            "dmu": ids[b.dmu],
            "face": f"R{b.face}",
            "inputs": list(b.x),
            "outputs": list(b.y),
            "intensities": {ids[k]: lam for k, lam in zip(b.members, b.intensities) if lam > 0},
            "distance": b.distance,
        }
        for face in res.bundles
        for b in face
    ]
    if res.deviations is not None:
        dv = res.deviations
        doc["deviations"] = {
            "faces": [f"R{h}" for h in dv.faces],
            "factors": list(dv.factors),
            "values": {dmu: dv.values[j].tolist() for j, dmu in enumerate(dv.ids)},
        }
    doc["metadata"] = {
        "alternative_optima": "reference-set membership and target coordinates may differ "
                              "between alternative optimal solutions; objective values and "
                              "distances are the binding results",
    }
    return doc


def result_to_json(res: CrossBenchmarkResult, config: dict | None = None) -> str:
    return json.dumps(result_to_dict(res, config), indent=2, sort_keys=False) + "\n"


def selection_table(res: CrossBenchmarkResult) -> str:
    """Which extreme-efficient units belong to which reference set, plus the objectives."""
    d, st = res.dataset, res.selection
    if st is None:
        return "(no selection)\n"
    heads = [f"R{rs.step}" for rs in st.sets]
    width = max(len(d.ids[k]) for k in st.E) if st.E else 4
    width = max(width, len("Optimal value"))
    lines = [f"{'DMU':<{width}}  " + "  ".join(f"{h:>7}" for h in heads)]
    for k in st.E:
        cells = ["x" if k in rs.members else "" for rs in st.sets]
        lines.append(f"{d.ids[k]:<{width}}  " + "  ".join(f"{c:>7}" for c in cells))
    lines.append(f"{'Optimal value':<{width}}  " + "  ".join(f"{v:>7.3f}" for v in st.D))
    return "\n".join(lines) + "\n"


def targets_table(res: CrossBenchmarkResult, dmus=None) -> str:
    """Actual data followed by one target row per face, deviations in whole percents."""
    d = res.dataset
    dv = res.deviations
    if dv is None:
        return "(no targets)\n"
    rows = range(d.n) if dmus is None else [d.index(x) if isinstance(x, str) else x for x in dmus]
    names = d.factor_names
    cw = 18
    out = [f"{'DMU':<12}" + "".join(f"{n:>{cw}}" for n in names)]
    rounded = dv.rounded()
    for j in rows:
        actual = list(d.X[j]) + list(d.Y[j])
        out.append(f"{d.ids[j]:<12}" + "".join(f"{v:>{cw}.6g}" for v in actual))
        for h, face in enumerate(res.bundles):
            b = face[j]
            vals = list(b.x) + list(b.y)
            cells = [f"{v:.1f} ({rounded[j, h, f]}%)" for f, v in enumerate(vals)]
            out.append(f"{'  R' + str(b.face):<12}" + "".join(f"{c:>{cw}}" for c in cells))
    return "\n".join(out) + "\n"


def summary(res: CrossBenchmarkResult) -> str:
    st = res.selection
    if st is None:
        return "selection did not run\n"
    lines = [
        f"extreme-efficient units: {len(st.E)}",
        f"reference sets selected: A = {len(st.sets)}"
        + ("" if st.converged else " (max steps reached; not converged)"),
        "D sequence: " + ", ".join(f"{v:.3f}" for v in st.D),
    ]
    return "\n".join(lines) + "\n"


def config_dict(cfg) -> dict:
    out = asdict(cfg)
    out.get("solver", {}).pop("dump_lp", None)
    return out
