"""Seeded synthetic corpora, with and without temporal vocabulary drift.

The drifted stream rotates topic vocabularies with a fixed period, adds
segment-local tokens that never recur, and overlays short bursts of
class-slanted tokens.  Under such drift, resampling schemes that mix future
data into training look better than the strictly-subsequent gold standard,
while schemes training on shorter past-only windows look worse.  The i.i.d.
stream draws every document from one position-independent distribution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import CLASSES, Instance, TimeOrderedCorpus


@dataclass(frozen=True)
class DriftConfig:
    n: int = 30_000
    segment: int = 5_000          # vocabulary rotation period
    phases: int = 2               # distinct rotating topic vocabularies
    topic_tokens: int = 2         # topic draws per document
    topic_pool: int = 600         # per (phase, class)
    zipf_a: float = 1.0
    fresh_prob: float = 0.45      # per-doc chance of a segment-local token
    fresh_pool: int = 30          # per (segment, class)
    burst_rate: float = 1 / 400.0  # per-position chance a new burst starts
    burst_len: tuple[int, int] = (80, 300)
    burst_hit: float = 0.8        # P(burst token | doc label == burst class)
    burst_miss: float = 0.05
    background_tokens: int = 2
    background_pool: int = 150
    fidelity: float = 0.9         # P(class-indicative draw matches the label)
    class_probs: tuple[float, float, float] = (0.3, 0.4, 0.3)


@dataclass(frozen=True)
class IidConfig:
    n: int = 12_000
    topic_tokens: int = 2
    topic_pool: int = 600
    zipf_a: float = 1.0
    background_tokens: int = 2
    background_pool: int = 150
    fidelity: float = 0.9
    class_probs: tuple[float, float, float] = (0.3, 0.4, 0.3)


def _zipf_probs(pool: int, a: float) -> np.ndarray:
    p = 1.0 / np.arange(1, pool + 1) ** a
    return p / p.sum()


def _draw_classes(rng: np.random.Generator, labels_idx: np.ndarray, k: int, fidelity: float) -> np.ndarray:
    """Class index per indicative draw: the doc's label w.p. fidelity."""
    n = len(labels_idx)
    out = np.repeat(labels_idx[:, None], k, axis=1)
    flip = rng.random((n, k)) >= fidelity
    out[flip] = rng.integers(0, 3, size=int(flip.sum()))
    return out


def _burst_schedule(rng: np.random.Generator, cfg: DriftConfig) -> tuple[np.ndarray, np.ndarray]:
    """Active burst id (-1 = none) and burst class index per position."""
    burst_id = np.full(cfg.n, -1, dtype=np.int64)
    burst_cls: list[int] = []
    pos = 0
    while pos < cfg.n:
        if rng.random() < cfg.burst_rate:
            length = int(rng.integers(cfg.burst_len[0], cfg.burst_len[1] + 1))
            burst_id[pos:pos + length] = len(burst_cls)
            burst_cls.append(int(rng.integers(0, 3)))
            pos += length
        else:
            pos += 1
    return burst_id, np.asarray(burst_cls, dtype=np.int64)


def drifted_corpus(cfg: DriftConfig = DriftConfig(), seed: int = 0, name: str = "drift") -> TimeOrderedCorpus:
    rng = np.random.Generator(np.random.PCG64(seed))
    n = cfg.n
    labels_idx = rng.choice(3, size=n, p=cfg.class_probs)
    topic_probs = _zipf_probs(cfg.topic_pool, cfg.zipf_a)
    bg_probs = _zipf_probs(cfg.background_pool, cfg.zipf_a)

    topic_cls = _draw_classes(rng, labels_idx, cfg.topic_tokens, cfg.fidelity)
    topic_rank = rng.choice(cfg.topic_pool, size=(n, cfg.topic_tokens), p=topic_probs)
    fresh_on = rng.random(n) < cfg.fresh_prob
    fresh_cls = _draw_classes(rng, labels_idx, 1, cfg.fidelity)[:, 0]
    fresh_rank = rng.integers(0, cfg.fresh_pool, size=n)
    bg_rank = rng.choice(cfg.background_pool, size=(n, cfg.background_tokens), p=bg_probs)
    burst_id, burst_cls = _burst_schedule(rng, cfg)
    burst_roll = rng.random(n)

    instances = []
    for i in range(n):
        seg = i // cfg.segment
        phase = seg % cfg.phases
        words = [f"t{phase}c{topic_cls[i, j]}w{topic_rank[i, j]}" for j in range(cfg.topic_tokens)]
        if fresh_on[i]:
            words.append(f"f{seg}c{fresh_cls[i]}w{fresh_rank[i]}")
        bid = burst_id[i]
        if bid >= 0:
            p_hit = cfg.burst_hit if burst_cls[bid] == labels_idx[i] else cfg.burst_miss
            if burst_roll[i] < p_hit:
                words.append(f"b{bid}x")
        words.extend(f"g{bg_rank[i, j]}" for j in range(cfg.background_tokens))
        instances.append(Instance(f"{i + 1:08d}", i, " ".join(words), CLASSES[labels_idx[i]]))
    return TimeOrderedCorpus(name, tuple(instances))


def iid_corpus(cfg: IidConfig = IidConfig(), seed: int = 0, name: str = "iid") -> TimeOrderedCorpus:
    rng = np.random.Generator(np.random.PCG64(seed))
    n = cfg.n
    labels_idx = rng.choice(3, size=n, p=cfg.class_probs)
    topic_probs = _zipf_probs(cfg.topic_pool, cfg.zipf_a)
    bg_probs = _zipf_probs(cfg.background_pool, cfg.zipf_a)
    topic_cls = _draw_classes(rng, labels_idx, cfg.topic_tokens, cfg.fidelity)
    topic_rank = rng.choice(cfg.topic_pool, size=(n, cfg.topic_tokens), p=topic_probs)
    bg_rank = rng.choice(cfg.background_pool, size=(n, cfg.background_tokens), p=bg_probs)

    instances = []
    for i in range(n):
        words = [f"tc{topic_cls[i, j]}w{topic_rank[i, j]}" for j in range(cfg.topic_tokens)]
        words.extend(f"g{bg_rank[i, j]}" for j in range(cfg.background_tokens))
        instances.append(Instance(f"{i + 1:08d}", i, " ".join(words), CLASSES[labels_idx[i]]))
    return TimeOrderedCorpus(name, tuple(instances))
