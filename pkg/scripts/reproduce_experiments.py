#!/usr/bin/env python3
"""
scripts/reproduce_experiments.py
---------------------------------------
Desk-scale run of the reference PPICOD experiments.

Writes to the output directory:
• worked_example_front.csv / .svg   two-receiver instance, both exact methods
• alpha_trend.csv / .svg            mean ell and s per alpha over random instances
• fixed_front.csv, fixed_runs.csv, fixed.svg
                                    m=8, n=20, h=3 instance vs its code-centric front
• biased_eta5.svg, biased_eta3.svg  two preference groups, eta = 5 and 3
"""
import argparse
import sys
from pathlib import Path
from typing import List

# ensure repo root on sys.path
sys.path.append(str(Path(__file__).resolve().parents[1]))

from config import Config
from services.experiment_service import (
    DEFAULT_ALPHAS,
    ExperimentConfig,
    ExperimentService,
    GeneratorSpec,
    RunRecord,
    parse_alpha,
    plot_alpha_trend,
    plot_points,
    runs_to_frame,
)
from services.greedy_service import GreedyParams, postprocess, prgrcov, resolve_eta
from services.instance_service import PpicodInstance, gen_group_biased, gen_uniform, save_instance, two_receiver_example
from services.oracle_service import BudgetExceeded, OracleService, save_boundary
from utils.logger import logger
from utils.pareto import ParetoFront, dominates


class ExperimentReproduction:
    """Runs every experiment in turn; each step is independent of the others."""

    def __init__(self, out_dir: Path, seed: int, instances: int, workers: int, boundaries: bool = True):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.seed = seed
        self.instances = instances
        self.boundaries = boundaries
        self.oracle = OracleService(workers=workers, show_progress=True)
        self.experiments = ExperimentService(workers=workers, show_progress=True)
        self.alphas = [parse_alpha(a) for a in DEFAULT_ALPHAS]

    def _front(self, inst: PpicodInstance, name: str) -> ParetoFront:
        if not self.boundaries:
            return ParetoFront()
        try:
            run = self.oracle.method2(inst)
        except BudgetExceeded as e:
            logger.warning(f"Skipping boundary for {name}: {e}")
            return ParetoFront()
        save_boundary(run.front, self.out_dir / f"{name}_front.csv")
        print(f"   {name}: {run.enumerated:,} subspaces, front {[str(p) for p in run.front]}")
        return run.front

    def _greedy_series(self, inst: PpicodInstance, eta: str) -> dict:
        series = {}
        for alpha in self.alphas:
            params = GreedyParams(alpha, resolve_eta(eta, inst), self.seed)
            result = postprocess(prgrcov(inst, params), inst)
            series[f"α={alpha}"] = [result.point]
        return series

    def _check_against(self, front: ParetoFront, series: dict, label: str):
        bad = [(k, str(p), str(b)) for k, pts in series.items() for p in pts for b in front if dominates(p, b)]
        if bad:
            logger.error(f"{label}: greedy points dominate boundary points {bad}")
        else:
            print(f"   {label}: every greedy point lies on or above the boundary")

    # --------------------------------------------------------------
    def worked_example(self):
        inst = two_receiver_example()
        save_instance(inst, self.out_dir / "worked_example.json")
        m1 = self.oracle.method1(inst).front
        m2 = self.oracle.method2(inst).front
        status = "agree" if m1.coords() == m2.coords() else "DISAGREE"
        print(f"   methods 1 and 2 {status}: {[str(p) for p in m2]}")
        save_boundary(m2, self.out_dir / "worked_example_front.csv")
        series = {
            "α=1, η=2": [prgrcov(inst, GreedyParams(1, (2, 2), self.seed)).point],
            "α=0, η=1": [prgrcov(inst, GreedyParams(0, (1, 1), self.seed)).point],
        }
        plot_points(series, self.out_dir / "worked_example.svg", m2, "Two-receiver example")

    def alpha_trend(self):
        config = ExperimentConfig(
            alphas=tuple(self.alphas),
            eta_spec="3",
            seed=self.seed,
            generator=GeneratorSpec("uniform", {"m": 8, "n": 20, "h": 3, "q": 2}),
            instances=self.instances,
        )
        records, agg = self.experiments.sweep(config)
        agg.to_csv(self.out_dir / "alpha_trend.csv", index=False)
        plot_alpha_trend(agg, self.out_dir / "alpha_trend.svg", f"{self.instances} random instances, η=3")
        print(agg.to_string(index=False))

    def fixed_instance(self):
        inst = gen_uniform(8, 20, 3, seed=self.seed)
        save_instance(inst, self.out_dir / "fixed.json")
        front = self._front(inst, "fixed")

        records: List[RunRecord] = []
        for alpha in self.alphas:
            params = GreedyParams(alpha, resolve_eta("3", inst), self.seed)
            raw = prgrcov(inst, params)
            post = postprocess(raw, inst)
            records.append(RunRecord(self.seed, alpha, "3", raw.point.ell, raw.point.s, raw.iterations, post.point.ell, post.point.s))
        runs_to_frame(records).to_csv(self.out_dir / "fixed_runs.csv", index=False)

        series = {f"α={r.alpha}": [r.post_point] for r in records}
        minimum = postprocess(prgrcov(inst, GreedyParams(1, resolve_eta("1", inst), self.seed)), inst)
        series["η=1"] = [minimum.point]
        print(f"   eta=1 run: {minimum.point} (sum of row minima {sum(inst.row_min(i) for i in inst.receivers())})")
        if front:
            self._check_against(front, series, "fixed instance")
        plot_points(series, self.out_dir / "fixed.svg", front or None, "m=8, n=20, |H|=3, η=3")

    def biased(self):
        inst = gen_group_biased(seed=self.seed)
        save_instance(inst, self.out_dir / "biased.json")
        front = self._front(inst, "biased")
        for eta in ("5", "3"):
            series = self._greedy_series(inst, eta)
            if front:
                self._check_against(front, series, f"biased eta={eta}")
            plot_points(series, self.out_dir / f"biased_eta{eta}.svg", front or None, f"Two preference groups, η={eta}")

    def run_all(self):
        steps = [
            ("Worked example", self.worked_example),
            ("Alpha trend", self.alpha_trend),
            ("Fixed instance", self.fixed_instance),
            ("Group-biased preferences", self.biased),
        ]
        for title, step in steps:
            print("\n" + "=" * 60)
            print(title.upper())
            print("=" * 60)
            step()
        print(f"\nOutputs written to {self.out_dir.resolve()}")


def main():
    ap = argparse.ArgumentParser(description="Reproduce the PPICOD experiments at desk scale.")
    ap.add_argument("--out-dir", default=Config.OUTPUT_DIR)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--instances", type=int, default=200)
    ap.add_argument("--workers", type=int, default=Config.WORKERS)
    ap.add_argument("--skip-boundaries", action="store_true", help="skip the m=8 code-centric searches")
    args = ap.parse_args()

    try:
        ExperimentReproduction(args.out_dir, args.seed, args.instances, args.workers, not args.skip_boundaries).run_all()
    except KeyboardInterrupt:
        print("\n🛑 Process interrupted by user")


if __name__ == "__main__":
    main()
