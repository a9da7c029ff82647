from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chronoeval.metrics import (
    CoincidenceMatrix,
    UndefinedAlphaError,
    alpha,
    alpha_from_labels,
    coincidence,
    confusion_matrix,
    f1_bar_from_labels,
)

labels_st = st.lists(st.sampled_from([-1, 0, 1]), min_size=2, max_size=40)


def brute_force_alpha(gold, pred):
    """Independent evaluation of the agreement definition over raw pairs.

    Builds the coincidence table by entering every item twice, then applies
    the disagreement sums directly, in exact arithmetic.
    """
    coin = {}
    for g, p in zip(gold, pred):
        coin[(g, p)] = coin.get((g, p), 0) + 1
        coin[(p, g)] = coin.get((p, g), 0) + 1
    n = sum(coin.values())
    marg = {}
    for (c, _), v in coin.items():
        marg[c] = marg.get(c, 0) + v
    d_o = Fraction(sum(v * (c - cp) ** 2 for (c, cp), v in coin.items()), n)
    de_num = sum(marg.get(c, 0) * marg.get(cp, 0) * (c - cp) ** 2
                 for c in (-1, 0, 1) for cp in (-1, 0, 1))
    if de_num == 0:
        return None
    d_e = Fraction(de_num, n * (n - 1))
    return float(1 - d_o / d_e)


def brute_force_f1_bar(gold, pred):
    """Independent per-class precision/recall computation."""
    total = 0.0
    for cls in (-1, 1):
        tp = sum(1 for g, p in zip(gold, pred) if g == cls and p == cls)
        n_pred = sum(1 for p in pred if p == cls)
        n_gold = sum(1 for g in gold if g == cls)
        precision = tp / n_pred if n_pred else 0.0
        recall = tp / n_gold if n_gold else 0.0
        if precision + recall == 0:
            total += 0.0
        else:
            total += 2 * precision * recall / (precision + recall)
    return total / 2


def test_coincidence_worked_example():
    conf = np.array([[1, 1, 0], [0, 1, 0], [0, 0, 1]])
    coin = coincidence(conf)
    assert coin.counts.tolist() == [[2, 1, 0], [1, 2, 0], [0, 0, 2]]
    assert coin.total == 8
    assert coin.marginals.tolist() == [3, 3, 2]


def test_coincidence_zero_matrix():
    coin = coincidence(np.zeros((3, 3), dtype=int))
    assert coin.total == 0
    assert coin.counts.sum() == 0


@given(st.lists(st.integers(0, 9), min_size=9, max_size=9))
def test_coincidence_symmetry(flat):
    coin = coincidence(np.array(flat).reshape(3, 3))
    assert (coin.counts == coin.counts.T).all()


def test_alpha_perfect_agreement():
    coin = coincidence(np.diag([4, 3, 5]))
    assert alpha(coin) == 1.0


def test_alpha_worked_example():
    # four pairs: gold -1,0,1,-1 vs pred -1,0,1,0
    coin = coincidence(confusion_matrix([-1, 0, 1, -1], [-1, 0, 1, 0]))
    value = alpha(coin)
    assert value == pytest.approx(1 - (Fraction(2, 8) / Fraction(78, 56)), abs=0)
    assert value == pytest.approx(0.82051, abs=5e-6)


def test_alpha_extreme_disagreement_weighs_four_times():
    neighbour = coincidence(confusion_matrix([-1, -1, 0, 0], [0, 0, -1, -1]))
    extreme = coincidence(confusion_matrix([-1, -1, 1, 1], [1, 1, -1, -1]))
    # same pairing structure; the observed-disagreement part is 4x larger
    do_n = (neighbour.counts * np.array([[0, 1, 4], [1, 0, 1], [4, 1, 0]])).sum()
    do_e = (extreme.counts * np.array([[0, 1, 4], [1, 0, 1], [4, 1, 0]])).sum()
    assert do_e == 4 * do_n


def test_alpha_undefined_single_class():
    with pytest.raises(UndefinedAlphaError):
        alpha(coincidence(confusion_matrix([0, 0, 0], [0, 0, 0])))


def test_alpha_undefined_too_few():
    with pytest.raises(UndefinedAlphaError):
        alpha(CoincidenceMatrix(np.zeros((3, 3), dtype=np.int64)))


def test_alpha_chance_level_permutation(rng):
    # pair a large label list against a random permutation of itself:
    # equal marginals, agreement only by chance, Alpha close to 0
    labels = rng.choice([-1, 0, 1], size=10_000, p=[0.3, 0.4, 0.3])
    permuted = rng.permutation(labels)
    value = alpha_from_labels(labels, permuted)
    assert abs(value) < 0.05


@given(labels_st, labels_st)
@settings(max_examples=300, deadline=None)
def test_alpha_matches_brute_force(gold, pred):
    n = min(len(gold), len(pred))
    gold, pred = gold[:n], pred[:n]
    expected = brute_force_alpha(gold, pred)
    if expected is None:
        with pytest.raises(UndefinedAlphaError):
            alpha_from_labels(gold, pred)
    else:
        assert alpha_from_labels(gold, pred) == pytest.approx(expected, abs=1e-12)


@given(labels_st, labels_st)
@settings(max_examples=200, deadline=None)
def test_alpha_reversal_invariance(gold, pred):
    n = min(len(gold), len(pred))
    gold, pred = gold[:n], pred[:n]
    flipped_g = [-g for g in gold]
    flipped_p = [-p for p in pred]
    try:
        direct = alpha_from_labels(gold, pred)
    except UndefinedAlphaError:
        with pytest.raises(UndefinedAlphaError):
            alpha_from_labels(flipped_g, flipped_p)
        return
    assert direct <= 1.0
    assert alpha_from_labels(flipped_g, flipped_p) == pytest.approx(direct, abs=1e-12)


def test_f1_bar_all_correct():
    assert f1_bar_from_labels([-1, 0, 1, 1], [-1, 0, 1, 1]) == 1.0


def test_f1_bar_extremes_all_wrong():
    assert f1_bar_from_labels([-1, 1, -1, 1], [1, -1, 0, 0]) == 0.0


def test_f1_bar_worked_example():
    assert f1_bar_from_labels([-1, 0, 1, -1], [-1, 0, 1, 0]) == pytest.approx(5 / 6, abs=1e-15)


@given(labels_st, labels_st)
@settings(max_examples=300, deadline=None)
def test_f1_bar_matches_brute_force(gold, pred):
    n = min(len(gold), len(pred))
    gold, pred = gold[:n], pred[:n]
    assert f1_bar_from_labels(gold, pred) == pytest.approx(
        brute_force_f1_bar(gold, pred), abs=1e-12
    )


def test_f1_bar_neutral_invariance():
    # adding correctly classified neutrals never changes F1-bar
    gold = [-1, 0, 1, -1, 1]
    pred = [-1, 0, 1, 0, 1]
    base = f1_bar_from_labels(gold, pred)
    padded_g = gold + [0] * 50
    padded_p = pred + [0] * 50
    assert f1_bar_from_labels(padded_g, padded_p) == pytest.approx(base, abs=0)


def test_confusion_matrix_counts():
    conf = confusion_matrix([-1, -1, 0, 1], [-1, 1, 0, 1])
    assert conf.tolist() == [[1, 0, 1], [0, 1, 0], [0, 0, 1]]
    assert conf.sum() == 4


def test_confusion_matrix_length_mismatch():
    with pytest.raises(ValueError):
        confusion_matrix([0], [0, 1])
