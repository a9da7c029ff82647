"""The six estimation procedures and their Est / Gold computations.

Cross-validation plans split the in-set into 10 folds (blocked or random,
stratified or not); sequential plans slide a train-then-test window across
the in-set so that every test block immediately follows its training block.
``estimate`` trains and scores the classifier on every plan element and
averages the per-element metrics; ``gold`` trains on the whole in-set and
scores it once on the out-set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import metrics
from .classify import ModelFactory, TrainParams, two_plane_factory
from .corpus import CLASSES, InOutPair, TimeOrderedCorpus
from .features import TermMatrix, normalize
from .seeding import derive_seed

XVAL_STRAT_BLOCK = "xval_strat_block"
XVAL_NOSTRAT_BLOCK = "xval_nostrat_block"
XVAL_STRAT_RAND = "xval_strat_rand"
SEQ_9_1_20 = "seq_9_1_20"
SEQ_9_1_10 = "seq_9_1_10"
SEQ_2_1_10SEMI = "seq_2_1_10semi"

PROCEDURES = (
    XVAL_STRAT_BLOCK,
    XVAL_NOSTRAT_BLOCK,
    XVAL_STRAT_RAND,
    SEQ_9_1_20,
    SEQ_9_1_10,
    SEQ_2_1_10SEMI,
)

XVAL_PROCEDURES = PROCEDURES[:3]
SEQ_PROCEDURES = PROCEDURES[3:]


@dataclass
class SplitPlan:
    procedure_id: str
    n: int
    elements: list[tuple[np.ndarray, np.ndarray]]
    seed: int | None = None


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _chunk_sizes(n: int, k: int) -> list[int]:
    base, rem = divmod(n, k)
    return [base + (1 if i < rem else 0) for i in range(k)]


def _contiguous_runs(indices: np.ndarray, k: int) -> list[np.ndarray]:
    sizes = _chunk_sizes(len(indices), k)
    out = []
    start = 0
    for s in sizes:
        out.append(indices[start:start + s])
        start += s
    return out


def plan_xval(
    n: int,
    stratified: bool,
    randomized: bool,
    folds: int = 10,
    labels: Sequence[int] | None = None,
    seed: int | None = None,
    procedure_id: str | None = None,
) -> SplitPlan:
    """10-fold cross-validation plan over in-set indices [0, n).

    blocked, not stratified: fold i is the i-th contiguous block.
    blocked, stratified: each class's time-ordered indices are cut into
    ``folds`` contiguous runs; fold i unions run i over classes.
    random, stratified: seeded per-class shuffle, then round-robin over folds.
    """
    if n < folds:
        raise ValueError(f"in-set size {n} smaller than fold count {folds}")
    if stratified and labels is None:
        raise ValueError("stratified cross-validation needs labels")
    if randomized and seed is None:
        raise ValueError("randomized cross-validation needs a seed")
    all_idx = np.arange(n, dtype=np.int64)
    if not stratified:
        fold_sets = _contiguous_runs(all_idx, folds)
    else:
        labels_arr = np.asarray(labels)
        if len(labels_arr) != n:
            raise ValueError("labels must cover the in-set")
        fold_lists: list[list[np.ndarray]] = [[] for _ in range(folds)]
        rng = np.random.Generator(np.random.PCG64(seed)) if randomized else None
        for cls in CLASSES:
            cls_idx = all_idx[labels_arr == cls]
            if randomized:
                perm = rng.permutation(cls_idx)
                for f in range(folds):
                    fold_lists[f].append(perm[f::folds])
            else:
                for f, run in enumerate(_contiguous_runs(cls_idx, folds)):
                    fold_lists[f].append(run)
        fold_sets = [np.sort(np.concatenate(parts)) for parts in fold_lists]
    elements = []
    for f in range(folds):
        mask = np.ones(n, dtype=bool)
        mask[fold_sets[f]] = False
        elements.append((all_idx[mask], fold_sets[f]))
    pid = procedure_id or (
        XVAL_STRAT_RAND if randomized else (XVAL_STRAT_BLOCK if stratified else XVAL_NOSTRAT_BLOCK)
    )
    return SplitPlan(pid, n, elements, seed)


def seq_offsets(n: int, window: int, positions: int) -> list[int]:
    """Equidistant window start offsets covering [0, n]."""
    if n == window:
        return [0]
    return [_round_half_up(i * (n - window) / (positions - 1)) for i in range(positions)]


def plan_seq(
    n: int,
    ratio: tuple[int, int] = (9, 1),
    positions: int = 10,
    semi_equidistant: bool = False,
    window_fraction: float = 0.5,
    seed: int | None = None,
    procedure_id: str | None = None,
) -> SplitPlan:
    """Sequential validation plan: overlapping shifted train-then-test windows.

    Window length is max(20, round(window_fraction * n)); the first window
    starts at 0 and the last ends at n.  Within a window the first
    ceil(train_ratio * window) indices train, the remainder tests.  The
    semi-equidistant variant draws ``positions`` offsets at random from 20
    equidistant candidates.
    """
    if n < 20:
        raise ValueError(f"in-set size {n} too small for sequential validation (need >= 20)")
    window = max(20, _round_half_up(window_fraction * n))
    if window > n:
        raise ValueError(f"window {window} longer than in-set {n}")
    if semi_equidistant:
        if seed is None:
            raise ValueError("semi-equidistant sampling needs a seed")
        candidates = seq_offsets(n, window, 20)
        rng = np.random.Generator(np.random.PCG64(seed))
        pick = np.sort(rng.choice(len(candidates), size=min(positions, len(candidates)), replace=False))
        offsets = [candidates[i] for i in pick]
    else:
        offsets = seq_offsets(n, window, positions)
    train_len = math.ceil(ratio[0] / (ratio[0] + ratio[1]) * window)
    if train_len >= window:
        raise ValueError("window leaves no room for a test block")
    elements = []
    for s in offsets:
        train = np.arange(s, s + train_len, dtype=np.int64)
        test = np.arange(s + train_len, s + window, dtype=np.int64)
        elements.append((train, test))
    return SplitPlan(procedure_id or f"seq_{ratio[0]}_{ratio[1]}_{positions}", n, elements, seed)


def build_plan(
    procedure_id: str,
    n: int,
    labels: Sequence[int] | None = None,
    seed: int | None = None,
    window_fraction: float = 0.5,
) -> SplitPlan:
    """Construct the named procedure's plan for an in-set of size n."""
    if procedure_id == XVAL_STRAT_BLOCK:
        return plan_xval(n, stratified=True, randomized=False, labels=labels,
                         seed=seed, procedure_id=procedure_id)
    if procedure_id == XVAL_NOSTRAT_BLOCK:
        return plan_xval(n, stratified=False, randomized=False,
                         seed=seed, procedure_id=procedure_id)
    if procedure_id == XVAL_STRAT_RAND:
        return plan_xval(n, stratified=True, randomized=True, labels=labels,
                         seed=seed, procedure_id=procedure_id)
    if procedure_id == SEQ_9_1_20:
        return plan_seq(n, (9, 1), 20, False, window_fraction, seed, procedure_id)
    if procedure_id == SEQ_9_1_10:
        return plan_seq(n, (9, 1), 10, False, window_fraction, seed, procedure_id)
    if procedure_id == SEQ_2_1_10SEMI:
        return plan_seq(n, (2, 1), 10, True, window_fraction, seed, procedure_id)
    raise ValueError(f"unknown procedure {procedure_id!r}")


def plan_to_csv(plan: SplitPlan, path: str | Path) -> None:
    """Audit export: one row per contiguous index run, per element and role."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("element,role,start,stop\n")
        for e, (train, test) in enumerate(plan.elements):
            for role, idx in (("train", train), ("test", test)):
                if len(idx) == 0:
                    continue
                breaks = np.flatnonzero(np.diff(idx) > 1)
                starts = np.concatenate(([0], breaks + 1))
                stops = np.concatenate((breaks, [len(idx) - 1]))
                for a, b in zip(starts, stops):
                    fh.write(f"{e},{role},{idx[a]},{idx[b] + 1}\n")


# ---------------------------------------------------------------------------
# Est / Gold

@dataclass
class Estimate:
    procedure_id: str
    inset_index: int
    element_alpha: list[float | None]
    element_f1: list[float]
    alpha: float | None
    f1_bar: float | None
    n_elements: int
    alpha_undefined: int
    train_sizes: list[int] = field(default_factory=list)
    test_sizes: list[int] = field(default_factory=list)


@dataclass
class GoldResult:
    inset_index: int
    alpha: float | None
    f1_bar: float
    in_size: int
    out_size: int


def _score(gold_labels: np.ndarray, pred: np.ndarray) -> tuple[float | None, float]:
    conf = metrics.confusion_matrix(gold_labels, pred)
    try:
        a = metrics.alpha(metrics.coincidence(conf))
    except metrics.UndefinedAlphaError:
        a = None
    return a, metrics.f1_bar(conf)


def corpus_term_matrix(corpus: TimeOrderedCorpus, max_ngram: int = 2) -> TermMatrix:
    return TermMatrix([normalize(t) for t in corpus.texts()], max_ngram)


def estimate(
    corpus: TimeOrderedCorpus,
    pair: InOutPair,
    plan: SplitPlan,
    params: TrainParams = TrainParams(),
    tm: TermMatrix | None = None,
    model_factory: ModelFactory | None = None,
    aggregate: str = "mean",
) -> Estimate:
    """Run every plan element (train, score, both metrics) and aggregate.

    Elements with undefined Alpha are flagged and excluded from the Alpha
    mean; if every element is undefined the aggregate Alpha is None.  With
    ``aggregate="pooled"`` the per-element confusion matrices are summed
    before computing the metrics (sensitivity check, not the default).
    """
    if pair.in_range[0] != 0:
        raise ValueError("in-sets start at position 0")
    if plan.n != pair.in_size:
        raise ValueError(f"plan built for n={plan.n} but in-set has {pair.in_size}")
    for train, test in plan.elements:
        hi = max((int(idx.max()) for idx in (train, test) if len(idx)), default=-1)
        if hi >= pair.in_range[1]:
            raise ValueError("plan indices fall outside the in-set")
    if aggregate not in ("mean", "pooled"):
        raise ValueError(f"unknown aggregate {aggregate!r}")
    labels = np.asarray(corpus.labels())
    if model_factory is None:
        if tm is None:
            tm = corpus_term_matrix(corpus, params.max_ngram)
        model_factory = two_plane_factory(tm, labels, params)

    base_seed = plan.seed if plan.seed is not None else 0
    element_alpha: list[float | None] = []
    element_f1: list[float] = []
    confusions = []
    for e, (train_rows, test_rows) in enumerate(plan.elements):
        seed_e = derive_seed(base_seed, plan.procedure_id, pair.inset_index, "element", e)
        model = model_factory(train_rows, seed_e)
        pred = np.asarray(model(test_rows))
        conf = metrics.confusion_matrix(labels[test_rows], pred)
        confusions.append(conf)
        try:
            a = metrics.alpha(metrics.coincidence(conf))
        except metrics.UndefinedAlphaError:
            a = None
        element_alpha.append(a)
        element_f1.append(metrics.f1_bar(conf))

    if aggregate == "pooled":
        pooled = np.sum(confusions, axis=0)
        try:
            agg_alpha = metrics.alpha(metrics.coincidence(pooled))
        except metrics.UndefinedAlphaError:
            agg_alpha = None
        agg_f1 = metrics.f1_bar(pooled)
    else:
        defined = [a for a in element_alpha if a is not None]
        agg_alpha = float(np.mean(defined)) if defined else None
        agg_f1 = float(np.mean(element_f1))

    return Estimate(
        plan.procedure_id,
        pair.inset_index,
        element_alpha,
        element_f1,
        agg_alpha,
        agg_f1,
        len(plan.elements),
        sum(a is None for a in element_alpha),
        [len(t) for t, _ in plan.elements],
        [len(t) for _, t in plan.elements],
    )


def gold(
    corpus: TimeOrderedCorpus,
    pair: InOutPair,
    params: TrainParams = TrainParams(),
    tm: TermMatrix | None = None,
    model_factory: ModelFactory | None = None,
    seed: int = 0,
) -> GoldResult:
    """Train on the full in-set, score once on the out-set."""
    labels = np.asarray(corpus.labels())
    if model_factory is None:
        if tm is None:
            tm = corpus_term_matrix(corpus, params.max_ngram)
        model_factory = two_plane_factory(tm, labels, params)
    in_rows = np.arange(*pair.in_range, dtype=np.int64)
    out_rows = np.arange(*pair.out_range, dtype=np.int64)
    model = model_factory(in_rows, derive_seed(seed, "gold", pair.inset_index))
    pred = np.asarray(model(out_rows))
    a, f1 = _score(labels[out_rows], pred)
    return GoldResult(pair.inset_index, a, f1, pair.in_size, pair.out_size)
