"""Evaluation harness for performance-estimation procedures on time-ordered
sentiment corpora.

The package trains a two-plane ordinal linear classifier on chronologically
ordered three-class data, computes gold-standard out-of-sample performance,
and compares it against six in-sample estimation procedures (three
cross-validation variants, three sequential-validation variants) using
Krippendorff's Alpha and the mean F1 of the extreme classes.
"""

__version__ = "0.1.0"

from .corpus import Instance, TimeOrderedCorpus, InOutPair, load_corpus, partition
from .metrics import confusion_matrix, coincidence, alpha, f1_bar, UndefinedAlphaError

__all__ = [
    "Instance",
    "TimeOrderedCorpus",
    "InOutPair",
    "load_corpus",
    "partition",
    "confusion_matrix",
    "coincidence",
    "alpha",
    "f1_bar",
    "UndefinedAlphaError",
    "__version__",
]
