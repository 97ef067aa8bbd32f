"""Integer-domain particle swarm optimizer and the placement-quality objective.

The objective for a candidate max depth h is, per cross-validation fold:
fit a tree on the training rows, predict every validation row, validate
each predicted placement against its own topology, and combine the mean
per-path delay of the valid predictions with a logarithmic penalty of
1000 * log2(ip + 1) on the invalid count. The reported value is the mean
over folds. A fold with zero valid predictions contributes a data-scaled
delay ceiling (99th percentile of teacher per-path delays) instead of an
undefined mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import tree as tree_mod
from .features import Dataset, FoldSplit
from .netmodel import SfcSpec, Topology
from .placer import Placement, avg_cp_delay, validate_placement


@dataclass(frozen=True)
class PsoParams:
    swarm_size: int = 10
    iterations: int = 30
    inertia: float = 0.7
    cognitive: float = 1.5
    social: float = 1.5
    lo: int = 2
    hi: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.swarm_size < 2:
            raise ValueError("swarm_size must be >= 2")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not (0 < self.inertia <= 1):
            raise ValueError("inertia must be in (0, 1]")
        if self.cognitive <= 0 or self.social <= 0:
            raise ValueError("cognitive and social weights must be > 0")
        if self.lo >= self.hi:
            raise ValueError("bounds require lo < hi")

    def with_bounds(self, lo: int, hi: int) -> "PsoParams":
        return PsoParams(self.swarm_size, self.iterations, self.inertia,
                         self.cognitive, self.social, lo, hi, self.seed)


@dataclass(frozen=True)
class ObjectiveResult:
    avg_delay_cp: float
    ip: int
    reg_term: float
    o_pso: float


@dataclass
class PsoTrace:
    """Per-iteration global best; the objective sequence is non-increasing."""

    best_h: list[int] = field(default_factory=list)
    best_objective: list[float] = field(default_factory=list)

    def record(self, h: int, value: float):
        self.best_h.append(h)
        self.best_objective.append(value)


def reg_term(ip: int) -> float:
    """Invalid-placement penalty: 1000 * log2(ip + 1)."""
    if ip < 0:
        raise ValueError("invalid-placement count must be >= 0")
    return 1000.0 * math.log2(ip + 1)


@dataclass
class EvalContext:
    """Per-row topologies and chain specs aligned with the dataset rows, plus
    the delay ceiling used when a fold has no valid prediction."""

    topologies: list[Topology]
    sfcs: list[SfcSpec]
    delay_ceiling: float

    def __post_init__(self):
        if len(self.topologies) != len(self.sfcs):
            raise ValueError("topologies and sfcs must align")


def make_context(topologies, sfcs, teacher_avg_delays) -> EvalContext:
    ceiling = float(np.percentile(np.asarray(teacher_avg_delays, dtype=float), 99))
    return EvalContext(list(topologies), list(sfcs), ceiling)


def placement_from_labels(sfc: SfcSpec, labels) -> Placement:
    """Interpret a predicted label row (one server id per instance, by id order)."""
    inst = sorted(sfc.instances, key=lambda i: i.id)
    return Placement(assignment={i.id: int(s) for i, s in zip(inst, labels)})


class FoldTreeCache:
    """One deep-fitted tree per fold, reused for every candidate depth.

    Depth-h predictions come from truncated traversal, which is exact for
    top-down CART (the depth limit only stops recursion), so sweeping
    depths costs one fit per fold instead of one per (fold, depth).
    """

    def __init__(self, ds: Dataset, folds: FoldSplit, fit_depth: int):
        self.ds = ds
        self.folds = folds
        self.fit_depth = fit_depth
        self._trees: dict[int, tree_mod.DecisionTree] = {}

    def ensure_depth(self, depth: int):
        if depth > self.fit_depth:
            self.fit_depth = depth
            self._trees.clear()

    def predict(self, fold_idx: int, h: int, X: np.ndarray) -> np.ndarray:
        self.ensure_depth(h)
        t = self._trees.get(fold_idx)
        if t is None:
            train_idx, _ = self.folds.folds[fold_idx]
            sub = self.ds.subset(train_idx)
            t = tree_mod.fit(sub.features, sub.labels, self.fit_depth)
            self._trees[fold_idx] = t
        return t.predict(X, max_depth=h)


def fold_results(
    h: int,
    ds: Dataset,
    ctx: EvalContext,
    folds: FoldSplit,
    cache: FoldTreeCache | None = None,
) -> list[ObjectiveResult]:
    """Evaluate depth h on every fold; one ObjectiveResult per fold."""
    if h < 1:
        raise ValueError("depth must be >= 1")
    if len(ctx.topologies) != ds.n_samples:
        raise ValueError("context must carry one (topology, sfc) per dataset row")
    out = []
    for fi, (train_idx, val_idx) in enumerate(folds.folds):
        if cache is not None:
            pred = cache.predict(fi, h, ds.features[val_idx])
        else:
            sub = ds.subset(train_idx)
            t = tree_mod.fit(sub.features, sub.labels, h)
            pred = t.predict(ds.features[val_idx])
        ip = 0
        delays = []
        for row, labels in zip(val_idx, pred):
            topo = ctx.topologies[row]
            sfc = ctx.sfcs[row]
            p = placement_from_labels(sfc, labels)
            if validate_placement(topo, sfc, p).valid:
                delays.append(avg_cp_delay(topo, p, sfc))
            else:
                ip += 1
        avg = float(np.mean(delays)) if delays else ctx.delay_ceiling
        reg = reg_term(ip)
        out.append(ObjectiveResult(avg_delay_cp=avg, ip=ip, reg_term=reg,
                                   o_pso=avg + reg))
    return out


def objective_full(h, ds, ctx, folds, cache=None) -> float:
    """Cross-validated mean of (average path delay + invalid penalty)."""
    res = fold_results(h, ds, ctx, folds, cache)
    return float(np.mean([r.o_pso for r in res]))


def objective_invalid_only(h, ds, ctx, folds, cache=None) -> float:
    """Cross-validated mean invalid-prediction count, delay ignored."""
    res = fold_results(h, ds, ctx, folds, cache)
    return float(np.mean([r.ip for r in res]))


def invalid_rate(h, ds, ctx, folds, cache=None) -> float:
    """Invalid predictions as a fraction of all validation rows."""
    res = fold_results(h, ds, ctx, folds, cache)
    total_rows = sum(len(v) for _, v in folds.folds)
    return sum(r.ip for r in res) / total_rows


def pso_minimize(f, params: PsoParams) -> tuple[int, PsoTrace]:
    """Global-best PSO over an integer interval.

    Particles move in the continuous interval; evaluation rounds to the
    nearest integer and clamps to the bounds, with results memoized per
    integer. Returns the best integer over all evaluations plus the trace.
    """
    rng = np.random.default_rng(params.seed)
    lo, hi = float(params.lo), float(params.hi)
    n = params.swarm_size
    memo: dict[int, float] = {}

    def evaluate(pos: float) -> tuple[int, float]:
        h = int(min(max(round(pos), params.lo), params.hi))
        if h not in memo:
            memo[h] = float(f(h))
        return h, memo[h]

    x = rng.uniform(lo, hi, n)
    vmax = (hi - lo) / 2.0
    v = rng.uniform(-vmax, vmax, n) * 0.1
    pbest_x = x.copy()
    pbest_val = np.empty(n)
    gbest_h, gbest_val = None, math.inf
    for i in range(n):
        h, val = evaluate(x[i])
        pbest_val[i] = val
        if val < gbest_val:
            gbest_h, gbest_val = h, val

    trace = PsoTrace()
    trace.record(gbest_h, gbest_val)
    for _ in range(params.iterations):
        r1 = rng.uniform(size=n)
        r2 = rng.uniform(size=n)
        v = (params.inertia * v
             + params.cognitive * r1 * (pbest_x - x)
             + params.social * r2 * (gbest_h - x))
        v = np.clip(v, -vmax, vmax)
        x = np.clip(x + v, lo, hi)
        for i in range(n):
            h, val = evaluate(x[i])
            if val < pbest_val[i]:
                pbest_val[i] = val
                pbest_x[i] = x[i]
            if val < gbest_val:
                gbest_h, gbest_val = h, val
        trace.record(gbest_h, gbest_val)
    return gbest_h, trace
