"""Loading and chronological partitioning of time-ordered labeled corpora.

A corpus is a TSV file with header ``id<TAB>label<TAB>text``, one instance
per line, ordered by time of posting.  Labels are the ordinal sentiment
values -1, 0, +1 (the words negative/neutral/positive are accepted too).
Partitioning produces progressively longer in-sets, each followed by the
out-set that defines its gold standard.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

CLASSES = (-1, 0, 1)

_LABEL_WORDS = {
    "-1": -1, "0": 0, "1": 1, "+1": 1,
    "negative": -1, "neutral": 0, "positive": 1,
}

DEFAULT_BLOCK_SIZE = 10_000


class CorpusError(ValueError):
    """Raised for malformed or inconsistent corpus files."""


@dataclass(frozen=True)
class Instance:
    """One labeled item: opaque external id, chronological position, text."""

    external_id: str
    position: int
    text: str
    label: int


@dataclass(frozen=True)
class TimeOrderedCorpus:
    name: str
    instances: tuple[Instance, ...]

    def __len__(self) -> int:
        return len(self.instances)

    def labels(self) -> list[int]:
        return [inst.label for inst in self.instances]

    def texts(self) -> list[str]:
        return [inst.text for inst in self.instances]


@dataclass(frozen=True)
class InOutPair:
    """In-set [0, k*W) plus the out-set block that immediately follows it.

    ``inset_index`` is the 1-based k; the out-set is the next W instances or
    the remainder of the corpus, and is never empty.
    """

    inset_index: int
    in_range: tuple[int, int]
    out_range: tuple[int, int]

    @property
    def in_size(self) -> int:
        return self.in_range[1] - self.in_range[0]

    @property
    def out_size(self) -> int:
        return self.out_range[1] - self.out_range[0]


def parse_label(raw: str) -> int:
    label = _LABEL_WORDS.get(raw.strip().lower())
    if label is None:
        raise ValueError(f"unrecognized label {raw!r}")
    return label


def load_corpus(path: str | Path, name: str | None = None, format: str = "tsv") -> TimeOrderedCorpus:
    """Load a TSV corpus, assigning positions 0..N-1 in file order.

    Raises CorpusError naming the offending line for malformed rows,
    duplicate ids, a bad header, or an empty file.
    """
    if format != "tsv":
        raise CorpusError(f"unsupported corpus format {format!r} (only 'tsv')")
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"corpus file not found: {path}")
    instances: list[Instance] = []
    seen_ids: set[str] = set()
    with open(path, encoding="utf-8", newline="") as fh:
        header = fh.readline()
        if not header:
            raise CorpusError(f"{path}: empty file")
        columns = [c.strip().lower() for c in header.rstrip("\r\n").split("\t")]
        if columns[:3] != ["id", "label", "text"]:
            raise CorpusError(
                f"{path}: line 1: expected header 'id<TAB>label<TAB>text', got {header.rstrip()!r}"
            )
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\r\n")
            if not line:
                continue
            parts = line.split("\t", 2)
            if len(parts) < 2:
                raise CorpusError(f"{path}: line {lineno}: expected at least id and label columns")
            ext_id = parts[0].strip()
            if not ext_id:
                raise CorpusError(f"{path}: line {lineno}: empty id")
            if ext_id in seen_ids:
                raise CorpusError(f"{path}: line {lineno}: duplicate id {ext_id!r}")
            seen_ids.add(ext_id)
            try:
                label = parse_label(parts[1])
            except ValueError as exc:
                raise CorpusError(f"{path}: line {lineno}: {exc}") from None
            text = parts[2] if len(parts) == 3 else ""
            instances.append(Instance(ext_id, len(instances), text, label))
    if not instances:
        raise CorpusError(f"{path}: no data rows")
    return TimeOrderedCorpus(name or path.stem, tuple(instances))


def save_corpus(corpus: TimeOrderedCorpus, path: str | Path) -> None:
    """Write a corpus back to the TSV format accepted by load_corpus."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("id\tlabel\ttext\n")
        for inst in corpus.instances:
            fh.write(f"{inst.external_id}\t{inst.label}\t{inst.text}\n")


def partition_sizes(n: int, block_size: int = DEFAULT_BLOCK_SIZE) -> list[InOutPair]:
    """Chronological in-set/out-set pairs for a corpus of n instances.

    Pair k (1-based) has in-set [0, k*W) and out-set [k*W, min((k+1)*W, n)).
    Candidates whose out-set would be empty (n an exact multiple of W) are
    dropped: without held-out data there is no gold standard to measure.
    """
    if block_size < 1:
        raise ValueError("block_size must be >= 1")
    pairs = []
    for k in range(1, n // block_size + 1):
        out_start = k * block_size
        out_stop = min((k + 1) * block_size, n)
        if out_stop <= out_start:
            continue
        pairs.append(InOutPair(k, (0, out_start), (out_start, out_stop)))
    return pairs


def partition(corpus: TimeOrderedCorpus, block_size: int = DEFAULT_BLOCK_SIZE) -> list[InOutPair]:
    """Partition a corpus into in-set/out-set pairs (see partition_sizes)."""
    return partition_sizes(len(corpus), block_size)
