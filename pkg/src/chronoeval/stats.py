"""Error analyses over (Est, Gold) pairs.

Given per-(procedure, dataset, in-set) estimates and gold values, this
module produces median signed errors with quartiles, relative-error class
proportions, the Friedman test with average ranks and the Nemenyi critical
difference, and pairwise Wilcoxon signed-rank comparisons with exact
p-values for small sample counts.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy import stats as sps

ALPHA_METRIC = "alpha"
F1BAR_METRIC = "f1bar"
METRICS = (ALPHA_METRIC, F1BAR_METRIC)


@dataclass(frozen=True)
class EvaluationRecord:
    """One (procedure, dataset, in-set, metric) row of the experiment."""

    procedure_id: str
    dataset: str
    inset_index: int
    metric: str
    est: float
    gold: float

    @property
    def err(self) -> float:
        return self.est - self.gold

    @property
    def abs_err(self) -> float:
        return abs(self.est - self.gold)

    @property
    def rel_err(self) -> float | None:
        """|Est - Gold| / Gold; None when the gold value is not positive."""
        if self.gold <= 0:
            return None
        return abs(self.est - self.gold) / self.gold


@dataclass(frozen=True)
class CellStats:
    median: float
    q1: float
    q3: float
    n: int


@dataclass
class MedianErrors:
    cells: dict[tuple[str, str, str], CellStats]          # (metric, procedure, dataset)
    procedure_medians: dict[tuple[str, str], float]       # median of dataset medians


def median_errors(records: Iterable[EvaluationRecord]) -> MedianErrors:
    """Median signed error per (metric, procedure, dataset), plus the
    per-procedure median over dataset medians (the tables' Median row)."""
    groups: dict[tuple[str, str, str], list[float]] = {}
    for r in records:
        groups.setdefault((r.metric, r.procedure_id, r.dataset), []).append(r.err)
    cells = {}
    by_proc: dict[tuple[str, str], list[float]] = {}
    for key, errs in groups.items():
        arr = np.asarray(errs)
        cells[key] = CellStats(
            float(np.median(arr)),
            float(np.percentile(arr, 25)),
            float(np.percentile(arr, 75)),
            len(arr),
        )
        by_proc.setdefault(key[:2], []).append(cells[key].median)
    procedure_medians = {k: float(np.median(v)) for k, v in by_proc.items()}
    return MedianErrors(cells, procedure_medians)


@dataclass(frozen=True)
class RelErrBreakdown:
    small: float
    moderate: float
    large: float
    n_included: int
    n_excluded_nonpositive_gold: int


def relative_error_classes(
    records: Iterable[EvaluationRecord],
    small: float = 0.05,
    large: float = 0.30,
) -> RelErrBreakdown:
    """Proportions of small (< small), moderate (inclusive band), and large
    (> large) relative errors.  Records with gold <= 0 are excluded and
    counted separately; proportions sum to 1 over the included records."""
    n_small = n_mod = n_large = n_excluded = 0
    for r in records:
        rel = r.rel_err
        if rel is None:
            n_excluded += 1
        elif rel < small:
            n_small += 1
        elif rel <= large:
            n_mod += 1
        else:
            n_large += 1
    n = n_small + n_mod + n_large
    if n == 0:
        return RelErrBreakdown(0.0, 0.0, 0.0, 0, n_excluded)
    return RelErrBreakdown(n_small / n, n_mod / n, n_large / n, n, n_excluded)


# ---------------------------------------------------------------------------
# Friedman / Nemenyi

@dataclass
class FriedmanResult:
    procedures: list[str]
    ranks: np.ndarray            # datasets x procedures, tie-averaged
    avg_ranks: np.ndarray
    chi2: float
    p_chi2: float
    iman_davenport: float
    p_iman_davenport: float
    n_datasets: int

    def significant_pairs(self, cd: float) -> list[tuple[str, str]]:
        pairs = []
        for i, j in itertools.combinations(range(len(self.procedures)), 2):
            if abs(self.avg_ranks[i] - self.avg_ranks[j]) >= cd:
                pairs.append((self.procedures[i], self.procedures[j]))
        return pairs


def friedman(abs_err: np.ndarray, procedures: Sequence[str]) -> FriedmanResult:
    """Friedman test over a datasets x procedures absolute-error matrix.

    Lower absolute error gets the lower (better) rank; ties are averaged.
    chi2_F = 12 N / (k (k+1)) * (sum R_j^2 - k (k+1)^2 / 4), and the
    Iman-Davenport statistic F = (N-1) chi2_F / (N (k-1) - chi2_F) is
    compared against F(k-1, (k-1)(N-1)).
    """
    abs_err = np.asarray(abs_err, dtype=np.float64)
    if abs_err.ndim != 2:
        raise ValueError("expected a datasets x procedures matrix")
    n_ds, k = abs_err.shape
    if k < 2:
        raise ValueError(f"need at least 2 procedures to rank, got {k}")
    if n_ds < 2:
        raise ValueError(f"need at least 2 datasets, got {n_ds}")
    if len(procedures) != k:
        raise ValueError("procedure names do not match matrix columns")
    if np.isnan(abs_err).any():
        raise ValueError("missing cells in the error matrix")
    ranks = np.vstack([sps.rankdata(row, method="average") for row in abs_err])
    avg = ranks.mean(axis=0)
    chi2 = 12.0 * n_ds / (k * (k + 1)) * (np.sum(avg ** 2) - k * (k + 1) ** 2 / 4.0)
    chi2 = max(chi2, 0.0)
    p_chi2 = float(sps.chi2.sf(chi2, k - 1))
    denom = n_ds * (k - 1) - chi2
    if denom <= 0:
        idf, p_idf = math.inf, 0.0
    else:
        idf = (n_ds - 1) * chi2 / denom
        p_idf = float(sps.f.sf(idf, k - 1, (k - 1) * (n_ds - 1)))
    return FriedmanResult(list(procedures), ranks, avg, float(chi2), p_chi2, idf, p_idf, n_ds)


# Studentized-range constants divided by sqrt(2), two-tailed, k = 2..20.
_NEMENYI_Q = {
    0.05: (1.960, 2.344, 2.569, 2.728, 2.850, 2.948, 3.031, 3.102, 3.164,
           3.219, 3.268, 3.313, 3.354, 3.391, 3.426, 3.458, 3.489, 3.517, 3.544),
    0.01: (2.576, 2.913, 3.113, 3.255, 3.364, 3.452, 3.526, 3.590, 3.646,
           3.696, 3.741, 3.781, 3.818, 3.853, 3.884, 3.914, 3.941, 3.967, 3.992),
}


def nemenyi_cd(k: int, n_datasets: int, alpha_level: float = 0.05) -> float:
    """Critical difference in average ranks: q_a,k * sqrt(k (k+1) / (6 N))."""
    if alpha_level not in _NEMENYI_Q:
        raise ValueError(f"alpha level must be one of {sorted(_NEMENYI_Q)}")
    if not 2 <= k <= 20:
        raise ValueError(f"k={k} outside the tabulated range 2..20")
    if n_datasets < 1:
        raise ValueError("need at least one dataset")
    q = _NEMENYI_Q[alpha_level][k - 2]
    return q * math.sqrt(k * (k + 1) / (6.0 * n_datasets))


# ---------------------------------------------------------------------------
# Wilcoxon signed-rank

@dataclass
class WilcoxonResult:
    w: float                     # min(W+, W-)
    w_plus: float
    w_minus: float
    n: int                       # non-zero differences used
    p_two_sided: float
    p_one_sided: float
    direction: str | None        # "a", "b", or None
    exact: bool


def _signed_rank_distribution(scaled_ranks: np.ndarray) -> np.ndarray:
    """Counts of 2*W+ over all sign assignments, by convolution."""
    total = int(scaled_ranks.sum())
    counts = np.zeros(total + 1, dtype=np.int64)
    counts[0] = 1
    for s in scaled_ranks:
        s = int(s)
        shifted = np.zeros_like(counts)
        shifted[s:] = counts[:len(counts) - s]
        counts = counts + shifted
    return counts


def wilcoxon(a: Sequence[float], b: Sequence[float], exact_limit: int = 20) -> WilcoxonResult:
    """Wilcoxon signed-rank test on paired values (classic zero handling).

    Zero differences are dropped; |differences| are ranked with ties
    averaged.  For n <= exact_limit the p-value is exact over all 2^n sign
    assignments (computed by convolution over doubled ranks); larger n uses
    the normal approximation with continuity and tie corrections.
    ``direction`` names the side with the smaller error ranks.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("paired samples must have equal length")
    diff = a - b
    diff = diff[diff != 0]
    n = len(diff)
    if n == 0:
        return WilcoxonResult(0.0, 0.0, 0.0, 0, 1.0, 1.0, None, True)
    ranks = sps.rankdata(np.abs(diff), method="average")
    w_plus = float(ranks[diff > 0].sum())
    w_minus = float(ranks[diff < 0].sum())
    w = min(w_plus, w_minus)
    if w_plus < w_minus:
        direction = "a"      # a's errors rank smaller: a better
    elif w_minus < w_plus:
        direction = "b"
    else:
        direction = None

    if n <= exact_limit:
        scaled = np.rint(2 * ranks).astype(np.int64)
        counts = _signed_rank_distribution(scaled)
        total = 2 ** n
        lo = int(round(2 * w))
        hi = int(round(2 * max(w_plus, w_minus)))
        mass_low = int(np.sum(counts[: lo + 1]))
        mass_high = int(np.sum(counts[hi:]))
        p_one = float(Fraction(mass_low, total))
        p_two = float(min(Fraction(mass_low + mass_high, total), Fraction(1)))
        return WilcoxonResult(w, w_plus, w_minus, n, p_two, p_one, direction, True)

    mean = n * (n + 1) / 4.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(tie_counts ** 3 - tie_counts) / 48.0
    z = (w - mean + 0.5) / math.sqrt(var)
    p_one = float(sps.norm.cdf(z))
    p_two = float(min(2 * p_one, 1.0))
    return WilcoxonResult(w, w_plus, w_minus, n, p_two, p_one, direction, False)
