import numpy as np
import pytest

from chronoeval.corpus import Instance, TimeOrderedCorpus


def make_corpus(labels, texts=None, name="toy"):
    """Corpus from parallel label/text lists; texts default to token soup."""
    if texts is None:
        texts = [f"w{i % 7} q{lab + 1}" for i, lab in enumerate(labels)]
    instances = tuple(
        Instance(str(i + 1), i, text, lab)
        for i, (lab, text) in enumerate(zip(labels, texts))
    )
    return TimeOrderedCorpus(name, instances)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(12345))
