"""Three-stage depth optimization.

Stage 1 searches a depth interval (initially [2, 100], doubling the upper
bound while the best invalid rate stays above the error threshold) for the
depth minimizing invalid predictions and materializes the full per-depth
invalid-rate curve. Stage 2 detects the functional range (below-threshold
plus steady state) and picks the depth minimizing the full delay-plus-
penalty objective over it, with a plateau rule preferring the smallest
depth within a relative epsilon of the minimum. Stage 3 fits the final
tree on the full training set at that depth.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from . import tree as tree_mod
from .features import Dataset, FoldSplit
from .swarm import (
    EvalContext,
    FoldTreeCache,
    PsoParams,
    PsoTrace,
    invalid_rate,
    objective_full,
    objective_invalid_only,
    pso_minimize,
)


class RangeNotFound(Exception):
    """No depth reaches an invalid rate at or below the error threshold."""


class PipelineError(Exception):
    pass


@dataclass(frozen=True)
class FunctionalRange:
    a1: int
    a2: int

    def __post_init__(self):
        if self.a1 > self.a2:
            raise ValueError("functional range requires a1 <= a2")


@dataclass(frozen=True)
class PipelineSettings:
    error_threshold: float = 0.075
    max_tolerable: float = 0.10
    steady_window: int = 10
    plateau_epsilon: float = 0.001
    initial_lo: int = 2
    initial_hi: int = 100
    bound_doubling_cap: int = 800
    stage2_use_pso: bool = False

    def __post_init__(self):
        if not (0 < self.error_threshold <= self.max_tolerable):
            raise ValueError("require 0 < error_threshold <= max_tolerable")
        if self.steady_window < 1:
            raise ValueError("steady_window must be >= 1")
        if self.plateau_epsilon < 0:
            raise ValueError("plateau_epsilon must be >= 0")
        if not (1 <= self.initial_lo < self.initial_hi <= self.bound_doubling_cap):
            raise ValueError("require 1 <= initial_lo < initial_hi <= cap")


@dataclass
class Stage1Result:
    curve: dict[int, float]  # depth -> invalid rate over all validation rows
    trace: PsoTrace
    searched_hi: int
    best_h: int
    best_rate: float


def stage1(ds: Dataset, ctx: EvalContext, folds: FoldSplit,
           pso_params: PsoParams, settings: PipelineSettings,
           cache: FoldTreeCache | None = None) -> Stage1Result:
    """Invalid-minimizing depth search with upper-bound doubling."""
    lo, hi = settings.initial_lo, settings.initial_hi
    if cache is None:
        cache = FoldTreeCache(ds, folds, hi)
    trace = None
    best_h = None
    while True:
        f = lambda h: objective_invalid_only(h, ds, ctx, folds, cache)
        best_h, trace = pso_minimize(f, pso_params.with_bounds(lo, hi))
        best_rate = invalid_rate(best_h, ds, ctx, folds, cache)
        if best_rate <= settings.error_threshold:
            break
        hi *= 2
        if hi > settings.bound_doubling_cap:
            raise PipelineError(
                f"invalid rate never reached {settings.error_threshold:.3f} within "
                f"the depth cap {settings.bound_doubling_cap}; best rate was "
                f"{best_rate:.3f} at depth {best_h}"
            )
    curve = {h: invalid_rate(h, ds, ctx, folds, cache) for h in range(lo, hi + 1)}
    return Stage1Result(curve=curve, trace=trace, searched_hi=hi,
                        best_h=best_h, best_rate=best_rate)


def detect_functional_range(curve: dict[int, float], threshold: float,
                            steady_window: int) -> FunctionalRange:
    """Find [a1, a2]: a1 = first depth at or below the threshold; a2 = the
    first depth from a1 on that the curve never improves upon for
    steady_window consecutive depths, plus the window (clamped to the curve).
    """
    depths = sorted(curve)
    if depths != list(range(depths[0], depths[-1] + 1)):
        raise ValueError("curve must cover a contiguous integer interval")
    a1 = next((d for d in depths if curve[d] <= threshold), None)
    if a1 is None:
        raise RangeNotFound(
            f"no depth reaches an invalid rate <= {threshold:.3f} "
            f"(minimum {min(curve.values()):.3f})"
        )
    last = depths[-1]
    steady = None
    for d in range(a1, last + 1):
        window = [curve[j] for j in range(d + 1, min(d + steady_window, last) + 1)]
        if all(v >= curve[d] - 1e-12 for v in window):
            steady = d
            break
    if steady is None:
        steady = last
    a2 = min(steady + steady_window, last)
    return FunctionalRange(a1=a1, a2=max(a1, a2))


@dataclass
class Stage2Result:
    h_star: int
    curve: dict[int, float]  # depth -> full objective
    trace: PsoTrace | None = None


def stage2(frange: FunctionalRange, ds: Dataset, ctx: EvalContext,
           folds: FoldSplit, settings: PipelineSettings,
           pso_params: PsoParams | None = None,
           cache: FoldTreeCache | None = None) -> Stage2Result:
    """Pick the optimal depth inside the functional range under the full objective.

    The range is small, so every depth is evaluated exhaustively by default;
    PSO over the range is available behind ``settings.stage2_use_pso``.
    """
    if cache is None:
        cache = FoldTreeCache(ds, folds, frange.a2)
    curve = {h: objective_full(h, ds, ctx, folds, cache)
             for h in range(frange.a1, frange.a2 + 1)}
    trace = None
    if settings.stage2_use_pso:
        if pso_params is None:
            raise ValueError("stage2_use_pso requires PSO parameters")
        if frange.a2 - frange.a1 >= 1:
            f = lambda h: curve[h]
            _, trace = pso_minimize(f, pso_params.with_bounds(frange.a1, frange.a2))
    best = min(curve.values())
    # plateau rule: the objective flattens once extra depth stops changing the
    # fitted trees, so prefer the start of the trailing plateau (every depth
    # from there on within the relative epsilon of the minimum); when the
    # curve rises again at the end, fall back to the plain argmin.
    cutoff = best + abs(best) * settings.plateau_epsilon
    depths = sorted(curve)
    h_star = None
    for d in reversed(depths):
        if curve[d] <= cutoff:
            h_star = d
        else:
            break
    if h_star is None:
        h_star = next(h for h in depths if curve[h] == best)
    return Stage2Result(h_star=h_star, curve=curve, trace=trace)


def stage3_build(ds: Dataset, h_star: int, seed: int = 0) -> tree_mod.DecisionTree:
    return tree_mod.fit(ds.features, ds.labels, h_star, seed=seed)


@dataclass
class PipelineReport:
    settings: PipelineSettings
    stage1: Stage1Result
    functional_range: FunctionalRange
    stage2: Stage2Result
    h_star: int
    model_depth: int
    model_nodes: int
    config_echo: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "settings": {
                "error_threshold": self.settings.error_threshold,
                "max_tolerable": self.settings.max_tolerable,
                "steady_window": self.settings.steady_window,
                "plateau_epsilon": self.settings.plateau_epsilon,
                "initial_bounds": [self.settings.initial_lo, self.settings.initial_hi],
                "bound_doubling_cap": self.settings.bound_doubling_cap,
                "stage2_use_pso": self.settings.stage2_use_pso,
            },
            "stage1": {
                "curve": {str(k): v for k, v in sorted(self.stage1.curve.items())},
                "searched_hi": self.stage1.searched_hi,
                "best_h": self.stage1.best_h,
                "best_rate": self.stage1.best_rate,
                "trace": {
                    "best_h": self.stage1.trace.best_h,
                    "best_objective": self.stage1.trace.best_objective,
                },
            },
            "functional_range": [self.functional_range.a1, self.functional_range.a2],
            "stage2": {
                "curve": {str(k): v for k, v in sorted(self.stage2.curve.items())},
            },
            "h_star": self.h_star,
            "model_depth": self.model_depth,
            "model_nodes": self.model_nodes,
            "config_echo": self.config_echo,
        }


def run_pipeline(ds: Dataset, ctx: EvalContext, folds: FoldSplit,
                 pso_params: PsoParams, settings: PipelineSettings,
                 config_echo: dict | None = None
                 ) -> tuple[PipelineReport, tree_mod.DecisionTree]:
    cache = FoldTreeCache(ds, folds, settings.initial_hi)
    s1 = stage1(ds, ctx, folds, pso_params, settings, cache)
    frange = detect_functional_range(s1.curve, settings.error_threshold,
                                     settings.steady_window)
    s2 = stage2(frange, ds, ctx, folds, settings, pso_params, cache)
    model = stage3_build(ds, s2.h_star)
    report = PipelineReport(
        settings=settings,
        stage1=s1,
        functional_range=frange,
        stage2=s2,
        h_star=s2.h_star,
        model_depth=model.tree_depth(),
        model_nodes=model.node_count(),
        config_echo=config_echo or {},
    )
    return report, model


def save_report(report: PipelineReport, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_json(), fh, sort_keys=True, indent=1)
        fh.write("\n")
