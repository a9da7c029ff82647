"""Text normalization, n-gram vocabularies, and Delta TF-IDF weighting.

Normalization follows the usual short-message conventions: URLs, @mentions
and #hashtags become sentinel tokens, emoticons map to a positive/negative
class token, elongated words are shortened, remaining punctuation is dropped.
Feature weights use the Delta TF-IDF scheme: term count times the log-ratio
of the term's document frequencies on the two sides of a binary class split.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

URL_TOKEN = "__url__"
USER_TOKEN = "__user__"
HASH_TOKEN = "__hash__"
POS_EMO_TOKEN = "__pos_emo__"
NEG_EMO_TOKEN = "__neg_emo__"

POSITIVE_EMOTICONS = (
    ":)", ":-)", ":]", ":-]", ":}", "=)", "=]", ":D", ":-D", "=D",
    ";)", ";-)", ":P", ":-P", ":p", ":3", "xD", "XD", "<3", "^_^",
)
NEGATIVE_EMOTICONS = (
    ":(", ":-(", ":[", ":-[", ":{", "=(", ":'(", ":c", "D:", "D-:",
    ":/", ":-/", "</3", ")':",
)

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_USER_RE = re.compile(r"@\w+")
_HASH_RE = re.compile(r"#(\w+)")
_ELONG_RE = re.compile(r"([^\W\d_])\1{2,}", re.UNICODE)
_WORD_RE = re.compile(r"\w+", re.UNICODE)


def _emoticon_pattern() -> re.Pattern[str]:
    # Longest first so that ":-)" wins over ":-"; emoticons that start or end
    # with an alphanumeric character must not touch a word ("xD" in "xDR").
    alts = []
    for emo in sorted(POSITIVE_EMOTICONS + NEGATIVE_EMOTICONS, key=len, reverse=True):
        pat = re.escape(emo)
        if emo[0].isalnum():
            pat = r"(?<!\w)" + pat
        if emo[-1].isalnum():
            pat = pat + r"(?!\w)"
        alts.append(pat)
    return re.compile("|".join(alts))


_EMO_RE = _emoticon_pattern()
_EMO_CLASS = {e: POS_EMO_TOKEN for e in POSITIVE_EMOTICONS}
_EMO_CLASS.update({e: NEG_EMO_TOKEN for e in NEGATIVE_EMOTICONS})


def normalize(text: str) -> list[str]:
    """Normalize raw text into a token sequence.  Total and idempotent."""
    text = _URL_RE.sub(f" {URL_TOKEN} ", text)
    text = _USER_RE.sub(f" {USER_TOKEN} ", text)
    text = _HASH_RE.sub(rf" {HASH_TOKEN} \1 ", text)
    text = _EMO_RE.sub(lambda m: f" {_EMO_CLASS[m.group(0)]} ", text)
    text = text.lower()
    text = _ELONG_RE.sub(r"\1\1", text)
    return _WORD_RE.findall(text)


def document_terms(tokens: Sequence[str], max_ngram: int = 2) -> Counter:
    """Unigram/bigram counts for one document; bigrams join with '_'."""
    counts = Counter(tokens)
    if max_ngram >= 2:
        counts.update(f"{a}_{b}" for a, b in zip(tokens, tokens[1:]))
    return counts


@dataclass
class Vocabulary:
    """Pruned n-gram index with per-side document frequencies.

    Built against one binary plane labeling: ``pos_df[t]`` / ``neg_df[t]``
    count the documents on the plane's positive/negative side containing
    term t, out of ``n_pos`` / ``n_neg`` side totals.
    """

    terms: dict[str, int]
    doc_freq: np.ndarray
    pos_df: np.ndarray
    neg_df: np.ndarray
    n_pos: int
    n_neg: int

    def __len__(self) -> int:
        return len(self.terms)

    def log_factors(self) -> np.ndarray:
        """Per-term log2 ratio used by Delta TF-IDF (0.5-smoothed).

        A one-sided labeling carries no contrast, so all factors are zero.
        """
        if len(self.terms) == 0 or self.n_pos == 0 or self.n_neg == 0:
            return np.zeros(len(self.terms))
        num = self.n_pos * (self.neg_df + 0.5)
        den = self.n_neg * (self.pos_df + 0.5)
        return np.log2(num / den)


def build_vocabulary(
    documents: Iterable[Sequence[str]],
    plane_positive: Sequence[bool],
    min_df: int = 5,
    max_ngram: int = 2,
) -> Vocabulary:
    """Count document frequencies over token sequences and prune rare terms.

    Terms are indexed densely in lexicographic order, which makes the result
    independent of document order.  An empty vocabulary (everything pruned)
    is valid.
    """
    df: Counter = Counter()
    pos_df: Counter = Counter()
    n_pos = 0
    n_docs = 0
    for doc, is_pos in zip(documents, plane_positive):
        n_docs += 1
        terms = set(document_terms(doc, max_ngram))
        df.update(terms)
        if is_pos:
            n_pos += 1
            pos_df.update(terms)
    if n_docs == 0:
        raise ValueError("at least one document is required")
    kept = sorted(t for t, c in df.items() if c >= min_df)
    index = {t: i for i, t in enumerate(kept)}
    df_arr = np.array([df[t] for t in kept], dtype=np.int64)
    pos_arr = np.array([pos_df[t] for t in kept], dtype=np.int64)
    return Vocabulary(index, df_arr, pos_arr, df_arr - pos_arr, n_pos, n_docs - n_pos)


def delta_tfidf(
    tokens: Sequence[str],
    vocab: Vocabulary,
    max_ngram: int = 2,
) -> list[tuple[int, float]]:
    """Delta TF-IDF vector of one document against a plane vocabulary.

    weight(t) = count(t, doc) * log2( (|P| * (N_t + 0.5)) / (|N| * (P_t + 0.5)) )

    Returns (index, weight) pairs with strictly increasing indices and no
    zero entries; terms outside the vocabulary contribute nothing.
    """
    if len(vocab) == 0:
        return []
    factors = vocab.log_factors()
    pairs = []
    for term, count in sorted(document_terms(tokens, max_ngram).items()):
        idx = vocab.terms.get(term)
        if idx is None:
            continue
        weight = count * factors[idx]
        if weight != 0.0:
            pairs.append((idx, float(weight)))
    pairs.sort()
    return pairs


def dump_vocabulary(vocab: Vocabulary, path: str | Path) -> None:
    """Debug dump: term, index, df, positive-side df, negative-side df."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("term\tindex\tdf\tpos_df\tneg_df\n")
        for term in sorted(vocab.terms, key=vocab.terms.get):
            i = vocab.terms[term]
            fh.write(f"{term}\t{i}\t{vocab.doc_freq[i]}\t{vocab.pos_df[i]}\t{vocab.neg_df[i]}\n")


class TermMatrix:
    """Corpus-level cache of per-document term ids and counts.

    Token lists are reduced once to a CSR-like layout over a global term
    index, so repeated vocabulary builds and vectorizations during
    resampling never re-tokenize or re-hash strings.
    """

    def __init__(self, token_lists: Sequence[Sequence[str]], max_ngram: int = 2):
        self.max_ngram = max_ngram
        term_index: dict[str, int] = {}
        ids: list[int] = []
        counts: list[int] = []
        indptr = [0]
        for tokens in token_lists:
            items = sorted(document_terms(tokens, max_ngram).items())
            for term, count in items:
                tid = term_index.setdefault(term, len(term_index))
                ids.append(tid)
                counts.append(count)
            indptr.append(len(ids))
        self.terms: list[str] = [""] * len(term_index)
        for term, tid in term_index.items():
            self.terms[tid] = term
        self.term_ids = np.asarray(ids, dtype=np.int32)
        self.counts = np.asarray(counts, dtype=np.int32)
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self._lex_rank: np.ndarray | None = None

    @property
    def n_docs(self) -> int:
        return len(self.indptr) - 1

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    def lex_rank(self) -> np.ndarray:
        """Rank of each term id in lexicographic term order (cached)."""
        if self._lex_rank is None:
            order = sorted(range(len(self.terms)), key=self.terms.__getitem__)
            rank = np.empty(len(self.terms), dtype=np.int64)
            rank[order] = np.arange(len(self.terms))
            self._lex_rank = rank
        return self._lex_rank


def tokenize_texts(texts: Iterable[str]) -> list[list[str]]:
    return [normalize(t) for t in texts]
