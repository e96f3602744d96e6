"""Command-line front end.

    xbench run      --data FILE [--out DIR] [tolerance flags]
    xbench classify --data FILE
    xbench verify   --data FILE

Exit status: 0 success, 1 invalid input or configuration, 2 solver failure,
3 verification mismatch.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

from . import checks
from .dataset import DatasetError, load_dataset
from .efficiency import extreme_efficient_set
from .milp import SolverConfig, SolverError
from .oracle import FACE_CAP, OracleError, brute_force_selection, enumerate_faces
from .report import config_dict, result_to_json, selection_table, summary, targets_table
from .selection import SelectionConfig, SelectionError, run_selection
from .targets import CrossBenchmarkError, closest_targets_for_face, cross_benchmark

EXIT_OK, EXIT_INVALID, EXIT_SOLVER, EXIT_MISMATCH = 0, 1, 2, 3

log = logging.getLogger("xbench")


@dataclass
class RunConfig:
    data: Path
    out: Path | None = None
    eps_lambda: float = 1e-6
    eps_improve: float = 1e-6
    eps_stop: float = 1e-6
    feasibility: float = 1e-6
    mip_gap: float = 1e-9
    complementarity: str = "sos1"
    max_steps: int = 50
    seed: int = 0
    dump_lp: Path | None = None
    verify: bool = False

    def selection_config(self) -> SelectionConfig:
        for name in ("eps_lambda", "eps_improve", "eps_stop", "feasibility", "mip_gap"):
            if not getattr(self, name) > 0:
                raise ValueError(f"--{name.replace('_', '-')} must be positive")
        solver = SolverConfig(mip_gap=self.mip_gap, feasibility_tol=self.feasibility,
                              seed=self.seed, dump_lp=str(self.dump_lp) if self.dump_lp else None)
        return SelectionConfig(eps_lambda=self.eps_lambda, eps_improve=self.eps_improve,
                               eps_stop=self.eps_stop, complementarity=self.complementarity,
                               max_steps=self.max_steps, solver=solver)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="xbench", description="DEA cross-benchmarking")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--data", required=True, type=Path, help="CSV with dmu,in:*,out:* columns")
        sp.add_argument("--eps-lambda", type=float, default=1e-6)
        sp.add_argument("--eps-improve", type=float, default=1e-6)
        sp.add_argument("--eps-stop", type=float, default=1e-6)
        sp.add_argument("--feasibility", type=float, default=1e-6)
        sp.add_argument("--mip-gap", type=float, default=1e-9)
        sp.add_argument("--complementarity", choices=("sos1", "bigm"), default="sos1")
        sp.add_argument("--max-steps", type=int, default=50)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--dump-lp", type=Path, default=None, metavar="DIR",
                        help="write every model in LP format to DIR")

    run = sub.add_parser("run", help="select reference sets and set targets")
    common(run)
    run.add_argument("--out", type=Path, default=Path("xbench-out"))
    run.add_argument("--verify", action="store_true", help="also run the invariant checks")
    common(sub.add_parser("classify", help="print the extreme-efficient units"))
    ver = sub.add_parser("verify", help="compare the MILP path with exhaustive enumeration")
    common(ver)
    ver.add_argument("--cap", type=int, default=FACE_CAP, help="largest |E| to enumerate")
    return p


def _config(ns) -> RunConfig:
    return RunConfig(data=ns.data, out=getattr(ns, "out", None), eps_lambda=ns.eps_lambda,
                     eps_improve=ns.eps_improve, eps_stop=ns.eps_stop, feasibility=ns.feasibility,
                     mip_gap=ns.mip_gap, complementarity=ns.complementarity,
                     max_steps=ns.max_steps, seed=ns.seed, dump_lp=ns.dump_lp,
                     verify=getattr(ns, "verify", False))


def _report(results: list[tuple[str, list[str]]]) -> bool:
    ok = True
    for name, problems in results:
        print(f"{'PASS' if not problems else 'FAIL'}  {name}")
        for p in problems[:5]:
            print(f"      {p}")
        ok &= not problems
    return ok


def cmd_run(rc: RunConfig) -> int:
    cfg = rc.selection_config()
    d = load_dataset(rc.data)
    res = cross_benchmark(d, cfg)
    rc.out.mkdir(parents=True, exist_ok=True)
    (rc.out / "result.json").write_text(result_to_json(res, config_dict(cfg)), encoding="utf-8")
    (rc.out / "deviations.csv").write_text(res.deviations.to_csv(), encoding="utf-8")
    tables = selection_table(res) + "\n" + targets_table(res)
    (rc.out / "report.txt").write_text(tables, encoding="utf-8")
    print(summary(res), end="")
    print(selection_table(res), end="")
    print(f"wrote {rc.out / 'result.json'}, {rc.out / 'deviations.csv'}, {rc.out / 'report.txt'}")
    if rc.verify:
        st = res.selection
        ok = _report([
            ("running-min identity", checks.running_min_identity(st)),
            ("monotone objectives", checks.monotone_objectives(st, cfg.eps_stop)),
            ("certificates", checks.certificates(d, st)),
            ("complementarity", checks.complementarity(st)),
            ("face membership", checks.face_membership(d, st)),
            ("member fixed point", checks.member_fixed_point(d, st.sets, res.bundles)),
            ("targets on face", checks.targets_on_face(d, st.sets, res.bundles)),
        ])
        if not ok:
            return EXIT_MISMATCH
    return EXIT_OK


def cmd_classify(rc: RunConfig) -> int:
    d = load_dataset(rc.data)
    c = extreme_efficient_set(d, rc.selection_config().solver)
    print(f"{len(c.E)} extreme-efficient units:")
    for k in c.E:
        print(d.ids[k])
    return EXIT_OK


def cmd_verify(rc: RunConfig, cap: int) -> int:
    cfg = rc.selection_config()
    d = load_dataset(rc.data)
    E = extreme_efficient_set(d, cfg.solver).E
    if len(E) > cap:
        print(f"|E| = {len(E)} exceeds the enumeration cap {cap}; oracle declines", file=sys.stderr)
        return EXIT_INVALID
    st = run_selection(d, cfg, E=E)
    faces = enumerate_faces(d, E, cap)
    orc = brute_force_selection(d, faces, eps_stop=cfg.eps_stop, max_steps=cfg.max_steps)
    seq = []
    if len(orc.D) != len(st.D):
        seq.append(f"MILP selected {len(st.D)} sets, oracle {len(orc.D)}")
    else:
        seq += [f"step {a + 1}: MILP {x:.9g} vs oracle {y:.9g}"
                for a, (x, y) in enumerate(zip(st.D, orc.D)) if abs(x - y) > 1e-6]
    bundles = [closest_targets_for_face(d, rs, cfg=cfg.solver) for rs in st.sets]
    print("MILP   D: " + ", ".join(f"{v:.6f}" for v in st.D))
    print("oracle D: " + ", ".join(f"{v:.6f}" for v in orc.D))
    ok = _report([
        ("oracle/MILP D sequences agree", seq),
        ("running-min identity", checks.running_min_identity(st)),
        ("monotone objectives", checks.monotone_objectives(st, cfg.eps_stop)),
        ("certificates", checks.certificates(d, st)),
        ("complementarity", checks.complementarity(st)),
        ("member fixed point", checks.member_fixed_point(d, st.sets, bundles)),
        ("targets on face", checks.targets_on_face(d, st.sets, bundles)),
    ])
    if ok:
        print("oracle/MILP D sequences agree")
    return EXIT_OK if ok else EXIT_MISMATCH


def main(argv=None) -> int:
    ns = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        rc = _config(ns)
        if ns.command == "run":
            return cmd_run(rc)
        if ns.command == "classify":
            return cmd_classify(rc)
        return cmd_verify(rc, ns.cap)
    except (DatasetError, ValueError, OSError) as exc:
        print(f"error [input]: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except CrossBenchmarkError as exc:
        print(f"error [{exc.stage}]: {exc.__cause__}", file=sys.stderr)
        return EXIT_SOLVER
    except (SolverError, SelectionError, OracleError) as exc:
        print(f"error [solver]: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
