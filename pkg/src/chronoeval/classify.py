"""Ordinal three-class classification with two linear planes and a bin grid.

One hinge-loss linear separator splits the negatives from the rest, a second
splits the positives from the rest.  The signed distances (d1, d2) of the
training examples to the two planes define an equal-frequency grid of bins;
prediction returns the majority training class of the bin a point falls in,
falling back to the ordinal plane rule (-1 if d1 < 0, +1 if d2 > 0, else 0)
for bins that contained no training data.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .corpus import CLASSES
from .features import TermMatrix, Vocabulary, document_terms, normalize
from .seeding import derive_seed

_CLASS_TO_IDX = {c: i for i, c in enumerate(CLASSES)}


@dataclass(frozen=True)
class TrainParams:
    lam: float = 1e-4
    epochs: int = 10
    bins_per_axis: int = 7
    min_df: int = 5
    max_ngram: int = 2


@dataclass
class LinearPlane:
    """Dense weights over the plane's vocabulary indices plus a bias.

    ``constant`` short-circuits planes whose binary problem was one-sided:
    the signed distance is then that constant for every input.
    """

    weights: np.ndarray
    bias: float
    constant: float | None = None


@dataclass
class BinGrid:
    """Equal-frequency grid over the two signed distances.

    ``cuts1``/``cuts2`` are strictly ascending interior cut points; cell
    (i, j) collects points with cuts[i-1] < d <= ... per searchsorted-right.
    ``hist`` holds per-cell class counts in CLASSES order, ``majority`` the
    per-cell winning label (ties go to neutral, then to the globally more
    frequent class, then to the smaller label).  Empty cells have no entry.
    """

    cuts1: np.ndarray
    cuts2: np.ndarray
    hist: np.ndarray
    majority: np.ndarray  # int8 labels; EMPTY_CELL where hist is all zero

    EMPTY_CELL = np.int8(-99)

    def cell_of(self, d1: np.ndarray, d2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        i = np.searchsorted(self.cuts1, d1, side="right")
        j = np.searchsorted(self.cuts2, d2, side="right")
        return i, j

    def majority_at(self, d1: float, d2: float) -> int | None:
        i, j = self.cell_of(np.asarray([d1]), np.asarray([d2]))
        label = self.majority[i[0], j[0]]
        return None if label == self.EMPTY_CELL else int(label)


def majority_label(labels: Sequence[int]) -> int:
    """Most frequent label; ties resolve to 0 first, then the smaller label."""
    counts = Counter(labels)
    best = max(counts.values())
    tied = [c for c in CLASSES if counts.get(c, 0) == best]
    return 0 if 0 in tied else min(tied)


def _cell_majority(hist: np.ndarray, global_counts: np.ndarray) -> np.ndarray:
    n1, n2, _ = hist.shape
    majority = np.full((n1, n2), BinGrid.EMPTY_CELL, dtype=np.int8)
    for i in range(n1):
        for j in range(n2):
            cell = hist[i, j]
            total = cell.sum()
            if total == 0:
                continue
            best = cell.max()
            tied = [k for k in range(3) if cell[k] == best]
            if _CLASS_TO_IDX[0] in tied:
                winner = _CLASS_TO_IDX[0]
            else:
                winner = max(tied, key=lambda k: (global_counts[k], -k))
            majority[i, j] = CLASSES[winner]
    return majority


def build_grid(d1: np.ndarray, d2: np.ndarray, labels: np.ndarray, bins_per_axis: int) -> BinGrid:
    """Equal-frequency bin grid from training distances and labels."""
    if bins_per_axis < 1:
        raise ValueError("bins_per_axis must be >= 1")
    qs = np.arange(1, bins_per_axis) / bins_per_axis
    cuts1 = np.unique(np.quantile(d1, qs)) if bins_per_axis > 1 else np.zeros(0)
    cuts2 = np.unique(np.quantile(d2, qs)) if bins_per_axis > 1 else np.zeros(0)
    n1, n2 = len(cuts1) + 1, len(cuts2) + 1
    i = np.searchsorted(cuts1, d1, side="right")
    j = np.searchsorted(cuts2, d2, side="right")
    codes = np.asarray(labels, dtype=np.int64) + 1  # CLASSES order: label + 1
    flat = (i * n2 + j) * 3 + codes
    hist = np.bincount(flat, minlength=n1 * n2 * 3).reshape(n1, n2, 3)
    global_counts = np.bincount(codes, minlength=3)
    return BinGrid(cuts1, cuts2, hist, _cell_majority(hist, global_counts))


@dataclass
class TwoPlaneModel:
    plane_neg_vs_rest: LinearPlane
    plane_negneut_vs_pos: LinearPlane
    vocab_neg_vs_rest: Vocabulary
    vocab_negneut_vs_pos: Vocabulary
    grid: BinGrid | None
    majority: int
    constant: bool
    params: TrainParams
    # fast-path caches tied to the TermMatrix the model was trained on
    _local_ids: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)
    _factors: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)

    def _distance_tokens(self, plane: LinearPlane, vocab: Vocabulary, counts: Counter) -> float:
        if plane.constant is not None:
            return plane.constant
        d = plane.bias
        factors = vocab.log_factors()
        for term, count in counts.items():
            idx = vocab.terms.get(term)
            if idx is not None:
                d += plane.weights[idx] * count * factors[idx]
        return d

    def _classify(self, d1: np.ndarray, d2: np.ndarray) -> np.ndarray:
        fallback = np.where(d1 < 0, -1, np.where(d2 > 0, 1, 0)).astype(np.int8)
        if self.grid is None:
            return fallback
        i, j = self.grid.cell_of(d1, d2)
        label = self.grid.majority[i, j]
        return np.where(label == BinGrid.EMPTY_CELL, fallback, label)

    def predict_tokens(self, tokens: Sequence[str]) -> int:
        if self.constant:
            return self.majority
        counts = document_terms(tokens, self.params.max_ngram)
        d1 = self._distance_tokens(self.plane_neg_vs_rest, self.vocab_neg_vs_rest, counts)
        d2 = self._distance_tokens(self.plane_negneut_vs_pos, self.vocab_negneut_vs_pos, counts)
        return int(self._classify(np.asarray([d1]), np.asarray([d2]))[0])

    def predict(self, text: str) -> int:
        return self.predict_tokens(normalize(text))

    def predict_many(self, token_lists: Sequence[Sequence[str]]) -> np.ndarray:
        return np.array([self.predict_tokens(t) for t in token_lists], dtype=np.int8)

    def predict_rows(self, tm: TermMatrix, rows: np.ndarray) -> np.ndarray:
        """Predict documents of the TermMatrix this model was trained on."""
        rows = np.asarray(rows, dtype=np.int64)
        if self.constant:
            return np.full(len(rows), self.majority, dtype=np.int8)
        if self._local_ids is None:
            raise ValueError("model carries no term-matrix caches; use predict_many")
        ds = []
        planes = (self.plane_neg_vs_rest, self.plane_negneut_vs_pos)
        for plane, local_id, factors in zip(planes, self._local_ids, self._factors):
            if plane.constant is not None:
                ds.append(np.full(len(rows), plane.constant))
                continue
            xp, xc, xv = kernels.build_design(
                tm.indptr, tm.term_ids, tm.counts, rows, local_id, factors
            )
            ds.append(kernels.dot_rows(xp, xc, xv, plane.weights, plane.bias))
        return self._classify(ds[0], ds[1])


def _constant_model(label: int, params: TrainParams) -> TwoPlaneModel:
    empty = Vocabulary({}, np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64),
                       np.zeros(0, dtype=np.int64), 0, 0)
    plane = LinearPlane(np.zeros(0), 0.0, constant=1.0)
    return TwoPlaneModel(plane, plane, empty, empty, None, label, True, params)


def _train_plane(
    tm: TermMatrix,
    rows: np.ndarray,
    df3: np.ndarray,
    kept: np.ndarray,
    positive: np.ndarray,
    pos_classes: tuple[int, ...],
    params: TrainParams,
    seed: int,
) -> tuple[LinearPlane, Vocabulary, np.ndarray, np.ndarray, np.ndarray]:
    """Train one binary plane; returns (plane, vocab, local_id, factors, d_train)."""
    n_pos = int(positive.sum())
    n_neg = len(rows) - n_pos
    if n_pos == 0 or n_neg == 0:
        const = 1.0 if n_neg == 0 else -1.0
        empty = Vocabulary({}, np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64),
                           np.zeros(0, dtype=np.int64), n_pos, n_neg)
        plane = LinearPlane(np.zeros(0), 0.0, constant=const)
        return plane, empty, np.full(tm.n_terms, -1, np.int64), np.zeros(0), np.full(len(rows), const)

    pos_df_g = df3[[_CLASS_TO_IDX[c] for c in pos_classes]].sum(axis=0)
    df_g = df3.sum(axis=0)
    order = np.argsort(tm.lex_rank()[kept], kind="stable")
    kept_sorted = kept[order]
    local_id = np.full(tm.n_terms, -1, dtype=np.int64)
    local_id[kept_sorted] = np.arange(len(kept_sorted))

    df = df_g[kept_sorted]
    pos_df = pos_df_g[kept_sorted]
    vocab = Vocabulary(
        {tm.terms[g]: i for i, g in enumerate(kept_sorted)},
        df, pos_df, df - pos_df, n_pos, n_neg,
    )
    factors = vocab.log_factors()

    xp, xc, xv = kernels.build_design(tm.indptr, tm.term_ids, tm.counts, rows, local_id, factors)
    y = np.where(positive, 1.0, -1.0)
    rng = np.random.Generator(np.random.PCG64(seed))
    order_steps = np.concatenate(
        [rng.permutation(len(rows)) for _ in range(params.epochs)]
    ).astype(np.int64)
    w, b = kernels.sgd_hinge(xp, xc, xv, y, len(kept_sorted), params.lam, order_steps)
    d_train = kernels.dot_rows(xp, xc, xv, w, b)
    return LinearPlane(w, float(b)), vocab, local_id, factors, d_train


def train_indexed(
    tm: TermMatrix,
    rows: np.ndarray,
    labels: np.ndarray,
    params: TrainParams,
    seed: int,
) -> TwoPlaneModel:
    """Train on a row subset of a TermMatrix. ``labels`` is corpus-aligned."""
    rows = np.asarray(rows, dtype=np.int64)
    labels = np.asarray(labels)
    y = labels[rows]
    if len(rows) == 0:
        raise ValueError("empty training set")
    if len(np.unique(y)) < 2:
        return _constant_model(int(y[0]), params)

    y3 = np.asarray(labels, dtype=np.int64) + 1  # class codes 0/1/2
    df3 = kernels.class_doc_freq(tm.indptr, tm.term_ids, rows, y3, tm.n_terms)
    kept = np.flatnonzero(df3.sum(axis=0) >= params.min_df)

    plane1, vocab1, lid1, fac1, d1 = _train_plane(
        tm, rows, df3, kept, y > -1, (0, 1), params, derive_seed(seed, "neg_vs_rest")
    )
    plane2, vocab2, lid2, fac2, d2 = _train_plane(
        tm, rows, df3, kept, y > 0, (1,), params, derive_seed(seed, "negneut_vs_pos")
    )
    grid = build_grid(d1, d2, y, params.bins_per_axis)
    return TwoPlaneModel(
        plane1, plane2, vocab1, vocab2, grid, majority_label(y), False, params,
        _local_ids=(lid1, lid2), _factors=(fac1, fac2),
    )


def train_tokens(
    token_lists: Sequence[Sequence[str]],
    labels: Sequence[int],
    params: TrainParams = TrainParams(),
    seed: int = 0,
) -> TwoPlaneModel:
    tm = TermMatrix(token_lists, params.max_ngram)
    return train_indexed(tm, np.arange(tm.n_docs), np.asarray(labels), params, seed)


def train(
    texts: Sequence[str],
    labels: Sequence[int],
    params: TrainParams = TrainParams(),
    seed: int = 0,
) -> TwoPlaneModel:
    """Train from raw texts (normalized internally)."""
    return train_tokens([normalize(t) for t in texts], labels, params, seed)


# ---------------------------------------------------------------------------
# external predictions adapter

def load_external_predictions(path: str | Path, n: int) -> np.ndarray:
    """Load a position,label CSV covering every corpus position 0..n-1.

    Any third-party classifier's output can be evaluated by the harness
    through this adapter.  Raises ValueError naming missing positions,
    out-of-range labels, or duplicates.
    """
    path = Path(path)
    preds = np.full(n, -99, dtype=np.int64)
    with open(path, encoding="utf-8", newline="") as fh:
        header = fh.readline().strip().lower().split(",")
        if header[:2] != ["position", "label"]:
            raise ValueError(f"{path}: expected header 'position,label'")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            pos_s, label_s = line.split(",")[:2]
            pos = int(pos_s)
            if not 0 <= pos < n:
                raise ValueError(f"{path}: line {lineno}: position {pos} out of range [0, {n})")
            if preds[pos] != -99:
                raise ValueError(f"{path}: line {lineno}: duplicate position {pos}")
            label = int(label_s)
            if label not in CLASSES:
                raise ValueError(f"{path}: line {lineno}: label {label} not in {CLASSES}")
            preds[pos] = label
    missing = np.flatnonzero(preds == -99)
    if len(missing):
        raise ValueError(f"{path}: missing prediction for position {missing[0]}")
    return preds


# model factory signature used by the resampling layer:
# factory(train_rows, seed) -> predict(test_rows) -> labels
ModelFn = Callable[[np.ndarray], np.ndarray]
ModelFactory = Callable[[np.ndarray, int], ModelFn]


def external_prediction_factory(preds: np.ndarray) -> ModelFactory:
    """Factory that ignores training and answers by position lookup."""

    def factory(train_rows: np.ndarray, seed: int) -> ModelFn:
        return lambda rows: preds[np.asarray(rows, dtype=np.int64)]

    return factory


def two_plane_factory(tm: TermMatrix, labels: np.ndarray, params: TrainParams) -> ModelFactory:
    def factory(train_rows: np.ndarray, seed: int) -> ModelFn:
        model = train_indexed(tm, train_rows, labels, params, seed)
        return lambda rows: model.predict_rows(tm, rows)

    return factory


# ---------------------------------------------------------------------------
# serialization (format private to the tool, round-trip tested)

_FORMAT_VERSION = 1


def _vocab_to_json(vocab: Vocabulary) -> dict:
    terms = sorted(vocab.terms, key=vocab.terms.get)
    return {
        "terms": terms,
        "doc_freq": vocab.doc_freq.tolist(),
        "pos_df": vocab.pos_df.tolist(),
        "neg_df": vocab.neg_df.tolist(),
        "n_pos": vocab.n_pos,
        "n_neg": vocab.n_neg,
    }


def _vocab_from_json(obj: dict) -> Vocabulary:
    return Vocabulary(
        {t: i for i, t in enumerate(obj["terms"])},
        np.asarray(obj["doc_freq"], dtype=np.int64),
        np.asarray(obj["pos_df"], dtype=np.int64),
        np.asarray(obj["neg_df"], dtype=np.int64),
        obj["n_pos"],
        obj["n_neg"],
    )


def _plane_to_json(plane: LinearPlane) -> dict:
    return {"weights": plane.weights.tolist(), "bias": plane.bias, "constant": plane.constant}


def _plane_from_json(obj: dict) -> LinearPlane:
    return LinearPlane(np.asarray(obj["weights"], dtype=np.float64), obj["bias"], obj["constant"])


def save_model(model: TwoPlaneModel, path: str | Path) -> None:
    grid = None
    if model.grid is not None:
        grid = {
            "cuts1": model.grid.cuts1.tolist(),
            "cuts2": model.grid.cuts2.tolist(),
            "hist": model.grid.hist.tolist(),
        }
    blob = {
        "format_version": _FORMAT_VERSION,
        "constant": model.constant,
        "majority": model.majority,
        "params": vars(model.params).copy(),
        "plane_neg_vs_rest": _plane_to_json(model.plane_neg_vs_rest),
        "plane_negneut_vs_pos": _plane_to_json(model.plane_negneut_vs_pos),
        "vocab_neg_vs_rest": _vocab_to_json(model.vocab_neg_vs_rest),
        "vocab_negneut_vs_pos": _vocab_to_json(model.vocab_negneut_vs_pos),
        "grid": grid,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(blob, fh)


def load_model(path: str | Path) -> TwoPlaneModel:
    with open(path, encoding="utf-8") as fh:
        blob = json.load(fh)
    if blob.get("format_version") != _FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {blob.get('format_version')}")
    grid = None
    if blob["grid"] is not None:
        hist = np.asarray(blob["grid"]["hist"], dtype=np.int64)
        global_counts = hist.sum(axis=(0, 1))
        grid = BinGrid(
            np.asarray(blob["grid"]["cuts1"], dtype=np.float64),
            np.asarray(blob["grid"]["cuts2"], dtype=np.float64),
            hist,
            _cell_majority(hist, global_counts),
        )
    return TwoPlaneModel(
        _plane_from_json(blob["plane_neg_vs_rest"]),
        _plane_from_json(blob["plane_negneut_vs_pos"]),
        _vocab_from_json(blob["vocab_neg_vs_rest"]),
        _vocab_from_json(blob["vocab_negneut_vs_pos"]),
        grid,
        blob["majority"],
        blob["constant"],
        TrainParams(**blob["params"]),
    )
