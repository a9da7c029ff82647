"""Agreement and performance measures for ordinal three-class predictions.

Two measures are provided: Krippendorff's Alpha with the ordinal difference
function delta(c, c') = |c - c'| (so extreme-class disagreements weigh four
times neighbour disagreements), and the mean F1 of the two extreme classes.
Alpha is evaluated in exact rational arithmetic and converted to float at
the end, which removes any rounding ambiguity from tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .corpus import CLASSES

_CLASS_TO_IDX = {c: i for i, c in enumerate(CLASSES)}

# squared ordinal distance between class codes
_DELTA2 = np.array([[0, 1, 4], [1, 0, 1], [4, 1, 0]], dtype=np.int64)


class UndefinedAlphaError(ValueError):
    """Alpha is undefined: the expected disagreement is zero.

    Happens when all mass sits in a single class (or fewer than two items
    are paired); the result is deliberately not coerced to any number.
    """


def confusion_matrix(gold: Sequence[int], pred: Sequence[int]) -> np.ndarray:
    """3x3 count matrix indexed [gold][pred] over classes (-1, 0, +1)."""
    if len(gold) != len(pred):
        raise ValueError("gold and pred must have equal length")
    conf = np.zeros((3, 3), dtype=np.int64)
    for g, p in zip(gold, pred):
        conf[_CLASS_TO_IDX[g], _CLASS_TO_IDX[p]] += 1
    return conf


@dataclass(frozen=True)
class CoincidenceMatrix:
    """Symmetric pairing table: confusion matrix plus its transpose.

    Every scored item enters twice, once as (c, c') and once as (c', c);
    marginals[c] are row sums and total is the grand total N.
    """

    counts: np.ndarray

    @property
    def marginals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def coincidence(conf: np.ndarray) -> CoincidenceMatrix:
    conf = np.asarray(conf, dtype=np.int64)
    if conf.shape != (3, 3) or (conf < 0).any():
        raise ValueError("confusion matrix must be 3x3 with non-negative counts")
    return CoincidenceMatrix(conf + conf.T)


def alpha(coin: CoincidenceMatrix) -> float:
    """Krippendorff's Alpha, ordinal variant: 1 - D_o / D_e.

    D_o = (1/N) * sum N(c,c') * delta^2(c,c')
    D_e = (1/(N(N-1))) * sum N(c) * N(c') * delta^2(c,c')

    Raises UndefinedAlphaError when D_e = 0.
    """
    n = coin.total
    marg = coin.marginals
    if n < 2:
        raise UndefinedAlphaError(f"need at least two paired values, got N={n}")
    do_num = int((coin.counts * _DELTA2).sum())
    de_num = int((np.outer(marg, marg) * _DELTA2).sum())
    if de_num == 0:
        raise UndefinedAlphaError("expected disagreement is zero (single-class data)")
    # Alpha = 1 - (do_num/N) / (de_num/(N(N-1))) = 1 - do_num*(N-1)/de_num
    return float(1 - Fraction(do_num * (n - 1), de_num))


def alpha_from_labels(gold: Sequence[int], pred: Sequence[int]) -> float:
    return alpha(coincidence(confusion_matrix(gold, pred)))


def f1_score(conf: np.ndarray, cls: int) -> float:
    """F1 of one class; 0 when the class has no true and no predicted items."""
    i = _CLASS_TO_IDX[cls]
    tp = conf[i, i]
    denom = conf[i, :].sum() + conf[:, i].sum()  # 2tp + fn + fp
    if denom == 0:
        return 0.0
    return float(2 * tp / denom)


def f1_bar(conf: np.ndarray) -> float:
    """Mean F1 over the extreme classes -1 and +1; neutral counts indirectly."""
    conf = np.asarray(conf)
    return (f1_score(conf, -1) + f1_score(conf, 1)) / 2.0


def f1_bar_from_labels(gold: Sequence[int], pred: Sequence[int]) -> float:
    return f1_bar(confusion_matrix(gold, pred))
