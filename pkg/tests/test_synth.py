import numpy as np

from chronoeval.corpus import partition
from chronoeval.features import normalize
from chronoeval.synth import DriftConfig, IidConfig, drifted_corpus, iid_corpus


def test_drifted_deterministic():
    cfg = DriftConfig(n=2_000)
    assert drifted_corpus(cfg, seed=4) == drifted_corpus(cfg, seed=4)
    assert drifted_corpus(cfg, seed=4) != drifted_corpus(cfg, seed=5)


def test_iid_deterministic():
    cfg = IidConfig(n=1_500)
    assert iid_corpus(cfg, seed=1) == iid_corpus(cfg, seed=1)


def test_drifted_shape_and_labels():
    cfg = DriftConfig(n=12_000)
    c = drifted_corpus(cfg, seed=2)
    assert len(c) == 12_000
    assert {i.label for i in c.instances} == {-1, 0, 1}
    assert [i.position for i in c.instances[:3]] == [0, 1, 2]
    # numeric external ids increase with time
    ids = [int(i.external_id) for i in c.instances[:100]]
    assert ids == sorted(ids)
    assert len(partition(c)) == 1


def test_drifted_label_marginals():
    c = drifted_corpus(DriftConfig(n=20_000), seed=3)
    labels = np.array(c.labels())
    for cls, p in zip((-1, 0, 1), (0.3, 0.4, 0.3)):
        assert abs((labels == cls).mean() - p) < 0.02


def test_drifted_vocabulary_rotates():
    cfg = DriftConfig(n=15_000, segment=5_000, phases=2)
    c = drifted_corpus(cfg, seed=9)

    def topic_prefixes(lo, hi):
        out = set()
        for inst in c.instances[lo:hi]:
            out.update(w.split("c")[0] for w in inst.text.split() if w.startswith("t"))
        return out

    assert topic_prefixes(0, 5_000) == {"t0"}
    assert topic_prefixes(5_000, 10_000) == {"t1"}
    assert topic_prefixes(10_000, 15_000) == {"t0"}   # rotation wraps around


def test_drifted_fresh_tokens_are_segment_local():
    cfg = DriftConfig(n=10_000, segment=5_000)
    c = drifted_corpus(cfg, seed=11)
    seg_of = {}
    for inst in c.instances:
        for w in inst.text.split():
            if w.startswith("f"):
                seg = int(w[1: w.index("c")])
                seg_of.setdefault(seg, set()).add(inst.position // cfg.segment)
    assert seg_of  # fresh tokens exist
    for seg, used_in in seg_of.items():
        assert used_in == {seg}


def test_iid_has_no_positional_structure():
    c = iid_corpus(IidConfig(n=6_000), seed=5)
    prefixes = {w.split("c")[0] for inst in c.instances for w in inst.text.split()
                if w.startswith("t")}
    assert prefixes == {"t"}
    assert not any(w.startswith("f") or w.startswith("b")
                   for inst in c.instances for w in inst.text.split())


def test_synth_texts_survive_normalization():
    c = drifted_corpus(DriftConfig(n=500), seed=6)
    for inst in c.instances[:50]:
        assert normalize(inst.text) == inst.text.split()
