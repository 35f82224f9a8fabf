# services/experiment_service.py
"""
Experiment harness: generator specs, solver runs, alpha sweeps, run CSVs and SVG figures
"""
import sys
import multiprocessing as mp
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

sys.path.append(str(Path(__file__).resolve().parents[1]))

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
from tqdm import tqdm

from config import Config
from services.greedy_service import GreedyParams, GreedyResult, audit, postprocess, prgrcov, resolve_eta
from services.instance_service import PpicodInstance, gen_group_biased, gen_uniform, load_instance
from utils.fqlinalg import FieldSpec
from utils.logger import logger
from utils.pareto import LengthSatisfactionPoint, ParetoFront, load_front

RUN_COLUMNS = ["seed", "alpha", "eta_spec", "ell", "s_num", "s_den", "ell_post", "s_post_num", "s_post_den", "iters"]
AGGREGATE_COLUMNS = ["alpha", "runs", "mean_ell", "mean_s", "mean_ell_post", "mean_s_post"]

# Settings of the fixed-instance figures
DEFAULT_ALPHAS = ("0.05", "0.2", "0.3", "0.5", "0.8", "1")
DEFAULT_GENERATOR = {"m": 8, "n": 20, "h": 3, "q": 2}


class ExperimentError(ValueError):
    """Raised for malformed experiment configurations or missing inputs."""


# --------------------------------------------------------------
# Parsing

def parse_alpha(raw: Union[str, float, Fraction]) -> Fraction:
    try:
        alpha = Fraction(str(raw).strip())
    except (ValueError, ZeroDivisionError):
        raise ExperimentError(f"alpha must be a number, got {raw!r}")
    if not 0 <= alpha <= 1:
        raise ExperimentError(f"alpha must lie in [0, 1], got {raw}")
    return alpha


def format_fraction(value: Fraction) -> str:
    return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    params: Dict[str, int] = field(default_factory=dict)

    @classmethod
    def parse(cls, kind: str, tokens: Sequence[str] = ()) -> "GeneratorSpec":
        """kind is 'uniform' or 'biased'; tokens like 'm=8' 'n=20' 'h=3' 'q=2'."""
        if kind not in ("uniform", "biased"):
            raise ExperimentError(f"Unknown generator: {kind}")
        params = {}
        for tok in tokens:
            key, sep, value = tok.partition("=")
            if not sep or key not in ("m", "n", "h", "q"):
                raise ExperimentError(f"Bad generator parameter {tok!r}; expected m=, n=, h= or q=")
            try:
                params[key] = int(value)
            except ValueError:
                raise ExperimentError(f"Generator parameter {key} must be an integer, got {value!r}")
        if kind == "uniform":
            missing = [k for k in ("m", "n", "h") if k not in params]
            if missing:
                raise ExperimentError(f"Uniform generator needs {missing}")
        return cls(kind, params)

    def build(self, seed: int) -> PpicodInstance:
        p = dict(self.params)
        spec = FieldSpec(p.pop("q", 2))
        if self.kind == "uniform":
            return gen_uniform(p["m"], p["n"], p["h"], spec, seed)
        return gen_group_biased(p.get("m", 8), p.get("n", 20), p.get("h", 3), spec, seed)

    def __str__(self):
        return f"{self.kind}(" + ",".join(f"{k}={v}" for k, v in sorted(self.params.items())) + ")"


@dataclass(frozen=True)
class ExperimentConfig:
    alphas: Tuple[Fraction, ...]
    eta_spec: str
    seed: int
    instance_path: Optional[Path] = None
    generator: Optional[GeneratorSpec] = None
    instances: int = 1
    seeds_per_instance: int = 1
    post: bool = False
    check: bool = False

    def __post_init__(self):
        if not self.alphas:
            raise ExperimentError("alpha list must not be empty")
        if (self.instance_path is None) == (self.generator is None):
            raise ExperimentError("Give exactly one of an instance file or a generator spec")
        if self.instances < 1 or self.seeds_per_instance < 1:
            raise ExperimentError("instances and seeds per instance must be positive")


# --------------------------------------------------------------
# Run records

@dataclass(frozen=True)
class RunRecord:
    seed: int
    alpha: Fraction
    eta_spec: str
    ell: int
    s: Fraction
    iters: int
    ell_post: Optional[int] = None
    s_post: Optional[Fraction] = None

    def to_row(self) -> dict:
        return {
            "seed": self.seed,
            "alpha": format_fraction(self.alpha),
            "eta_spec": self.eta_spec,
            "ell": self.ell,
            "s_num": self.s.numerator,
            "s_den": self.s.denominator,
            "ell_post": self.ell_post,
            "s_post_num": None if self.s_post is None else self.s_post.numerator,
            "s_post_den": None if self.s_post is None else self.s_post.denominator,
            "iters": self.iters,
        }

    @property
    def point(self) -> LengthSatisfactionPoint:
        return LengthSatisfactionPoint(self.ell, self.s)

    @property
    def post_point(self) -> Optional[LengthSatisfactionPoint]:
        if self.ell_post is None:
            return None
        return LengthSatisfactionPoint(self.ell_post, self.s_post)


def run_once(
    inst: PpicodInstance, alpha: Fraction, eta_spec: str, seed: int, post: bool = False, check: bool = False
) -> Tuple[RunRecord, GreedyResult]:
    params = GreedyParams(alpha, resolve_eta(eta_spec, inst), seed)
    result = prgrcov(inst, params)
    final = result
    ell_post = s_post = None
    if post:
        final = postprocess(result, inst)
        ell_post, s_post = final.point.ell, final.point.s
    if check:
        audit(result.code, inst)
        if post:
            audit(final.code, inst)
    record = RunRecord(seed, params.alpha, str(eta_spec), result.point.ell, result.point.s, result.iterations, ell_post, s_post)
    return record, final


def runs_to_frame(records: Iterable[RunRecord]) -> pd.DataFrame:
    df = pd.DataFrame([r.to_row() for r in records], columns=RUN_COLUMNS)
    for col in ("seed", "ell", "s_num", "s_den", "ell_post", "s_post_num", "s_post_den", "iters"):
        df[col] = df[col].astype("Int64")
    return df


def save_runs(records: Iterable[RunRecord], path: Union[str, Path]):
    runs_to_frame(records).to_csv(path, index=False)


def load_runs(path: Union[str, Path]) -> List[RunRecord]:
    path = Path(path)
    if not path.exists():
        raise ExperimentError(f"Run file not found: {path}")
    df = pd.read_csv(path, dtype={"alpha": str, "eta_spec": str})
    missing = [c for c in RUN_COLUMNS if c not in df.columns]
    if missing:
        raise ExperimentError(f"Run file {path} lacks columns {missing}")
    for col in ("seed", "ell", "s_num", "s_den", "ell_post", "s_post_num", "s_post_den", "iters"):
        df[col] = df[col].astype("Int64")
    records = []
    for row in df.itertuples(index=False):
        has_post = not pd.isna(row.ell_post)
        records.append(RunRecord(
            seed=int(row.seed),
            alpha=Fraction(row.alpha),
            eta_spec=row.eta_spec,
            ell=int(row.ell),
            s=Fraction(int(row.s_num), int(row.s_den)),
            iters=int(row.iters),
            ell_post=int(row.ell_post) if has_post else None,
            s_post=Fraction(int(row.s_post_num), int(row.s_post_den)) if has_post else None,
        ))
    return records


def aggregate(records: Iterable[RunRecord]) -> pd.DataFrame:
    """Mean ell and mean s per alpha, ascending alpha."""
    rows = []
    for r in records:
        rows.append({
            "alpha_value": r.alpha,
            "ell": float(r.ell),
            "s": float(r.s),
            "ell_post": float(r.ell_post) if r.ell_post is not None else np.nan,
            "s_post": float(r.s_post) if r.s_post is not None else np.nan,
        })
    if not rows:
        return pd.DataFrame(columns=AGGREGATE_COLUMNS)
    df = pd.DataFrame(rows)
    grouped = df.groupby("alpha_value", sort=True)
    out = grouped.agg(
        runs=("ell", "size"),
        mean_ell=("ell", "mean"),
        mean_s=("s", "mean"),
        mean_ell_post=("ell_post", "mean"),
        mean_s_post=("s_post", "mean"),
    ).reset_index()
    out["alpha"] = out["alpha_value"].map(format_fraction)
    return out[AGGREGATE_COLUMNS]


# --------------------------------------------------------------
# Sweeps

def derive_seeds(base_seed: int, count: int) -> List[int]:
    """Independent 32-bit seeds from one master seed."""
    children = np.random.SeedSequence(base_seed).spawn(count)
    return [int(c.generate_state(1)[0]) for c in children]


def _sweep_instance(inst: PpicodInstance, config: ExperimentConfig, solver_seeds: List[int]) -> List[RunRecord]:
    records = []
    for alpha in config.alphas:
        for seed in solver_seeds:
            record, _ = run_once(inst, alpha, config.eta_spec, seed, config.post, config.check)
            records.append(record)
    return records


def _sweep_task(config: ExperimentConfig, instance_seed: int, solver_seeds: List[int]) -> List[RunRecord]:
    if config.instance_path is not None:
        inst = load_instance(config.instance_path)
    else:
        inst = config.generator.build(instance_seed)
    return _sweep_instance(inst, config, solver_seeds)


class ExperimentService:
    """Fans independent (instance, alpha, seed) runs out over a process pool."""

    def __init__(self, workers: Optional[int] = None, show_progress: Optional[bool] = None):
        self.workers = Config.WORKERS if workers is None else workers
        self.show_progress = Config.SHOW_PROGRESS if show_progress is None else show_progress

    def solve(
        self, inst: PpicodInstance, alphas: Sequence[Fraction], eta_spec: str, seeds: Sequence[int],
        post: bool = False, check: bool = False,
    ) -> List[RunRecord]:
        if not alphas:
            raise ExperimentError("alpha list must not be empty")
        if not seeds:
            raise ExperimentError("seed list must not be empty")
        records = []
        for alpha in alphas:
            for seed in seeds:
                record, _ = run_once(inst, alpha, eta_spec, seed, post, check)
                logger.info(f"alpha={format_fraction(alpha)} seed={seed} -> ({record.ell}, {record.s})")
                records.append(record)
        return records

    def sweep(self, config: ExperimentConfig) -> Tuple[List[RunRecord], pd.DataFrame]:
        n_instances = 1 if config.instance_path is not None else config.instances
        instance_seeds = derive_seeds(config.seed, n_instances)
        solver_seeds = derive_seeds(config.seed + 1, config.seeds_per_instance)
        source = config.instance_path or config.generator
        logger.info(
            f"Sweep over {n_instances} instance(s) from {source}, alphas "
            f"{[format_fraction(a) for a in config.alphas]}, eta={config.eta_spec}, "
            f"{config.seeds_per_instance} solver seed(s) each"
        )

        records: List[RunRecord] = []
        bar = tqdm(total=n_instances, desc="sweep", disable=not self.show_progress)
        executor = None
        if self.workers > 1:
            try:
                executor = ProcessPoolExecutor(max_workers=self.workers, mp_context=mp.get_context("spawn"))
            except (NotImplementedError, PermissionError, OSError) as exc:
                logger.warning(f"Parallel workers unavailable; falling back to serial ({exc})")
        try:
            if executor is None:
                for s in instance_seeds:
                    records.extend(_sweep_task(config, s, solver_seeds))
                    bar.update(1)
            else:
                futures = [executor.submit(_sweep_task, config, s, solver_seeds) for s in instance_seeds]
                for fut in futures:
                    records.extend(fut.result())
                    bar.update(1)
        finally:
            bar.close()
            if executor is not None:
                executor.shutdown()

        agg = aggregate(records)
        for row in agg.itertuples(index=False):
            logger.info(f"alpha={row.alpha}: mean ell={row.mean_ell:.3f}, mean s={row.mean_s:.3f} over {row.runs} runs")
        return records, agg


# --------------------------------------------------------------
# Figures

def _svg_style():
    plt.rcParams["svg.hashsalt"] = "ppicod"
    plt.rcParams["svg.fonttype"] = "path"


def plot_points(
    series: Dict[str, Sequence[LengthSatisfactionPoint]],
    path: Union[str, Path],
    boundary: Optional[ParetoFront] = None,
    title: str = "",
):
    """Scatter of (s, ell) per series, the boundary as a step line, every point labelled."""
    _svg_style()
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    if boundary is not None and len(boundary):
        xs = [float(p.s) for p in reversed(boundary.points)]
        ys = [p.ell for p in reversed(boundary.points)]
        ax.step(xs, ys, where="post", color="tab:red", linestyle="--", label="Pareto boundary")
        ax.scatter(xs, ys, marker="o", facecolors="none", edgecolors="tab:red")
    markers = "sD^vP*Xh"
    for k, (label, points) in enumerate(series.items()):
        pts = sorted({p.coords for p in points})
        if not pts:
            continue
        ax.scatter([float(s) for _, s in pts], [ell for ell, _ in pts], marker=markers[k % len(markers)], label=label)
        for ell, s in pts:
            ax.annotate(f"({ell}, {format_fraction(s)})", (float(s), ell), textcoords="offset points", xytext=(4, 4), fontsize=7)
    ax.set_xlabel("satisfaction metric s")
    ax.set_ylabel("code length ℓ")
    ax.yaxis.get_major_locator().set_params(integer=True)
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info(f"Wrote figure {path}")


def plot_runs(records: Sequence[RunRecord], path: Union[str, Path], boundary_path: Optional[Union[str, Path]] = None, title: str = ""):
    """One series per alpha; post-processed points are used when present."""
    boundary = None
    if boundary_path is not None:
        if not Path(boundary_path).exists():
            raise ExperimentError(f"Boundary file not found: {boundary_path}")
        boundary = load_front(boundary_path)
    series: Dict[str, List[LengthSatisfactionPoint]] = {}
    for r in sorted(records, key=lambda r: r.alpha):
        series.setdefault(f"α={format_fraction(r.alpha)}", []).append(r.post_point or r.point)
    plot_points(series, path, boundary, title)


def plot_alpha_trend(agg: pd.DataFrame, path: Union[str, Path], title: str = ""):
    """Mean ell and mean s against alpha on twin axes."""
    _svg_style()
    alphas = [float(Fraction(a)) for a in agg["alpha"]]
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ax.plot(alphas, agg["mean_ell"], marker="s", color="tab:blue", label="mean ℓ")
    ax.set_xlabel("α")
    ax.set_ylabel("mean code length ℓ", color="tab:blue")
    ax2 = ax.twinx()
    ax2.plot(alphas, agg["mean_s"], marker="o", color="tab:orange", label="mean s")
    ax2.set_ylabel("mean satisfaction metric s", color="tab:orange")
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info(f"Wrote figure {path}")
