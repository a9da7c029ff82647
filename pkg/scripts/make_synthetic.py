#!/usr/bin/env python3
"""Generate synthetic corpora (drifted and i.i.d.) plus a ready-made config.

Usage:
    python scripts/make_synthetic.py --out data/ --n 30000 --seed 7
    chronoeval run --config data/experiment.ini
"""

import argparse
from pathlib import Path

from chronoeval.corpus import save_corpus
from chronoeval.synth import DriftConfig, IidConfig, drifted_corpus, iid_corpus

CONFIG_TEMPLATE = """\
[experiment]
seed = {seed}
block_size = 10000
output_dir = {out}/results
parallelism = 0

[datasets]
drift = drift.tsv
iid = iid.tsv

[classifier]
lambda = 1e-4
epochs = 10
bins_per_axis = 7
min_df = 5
"""


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("data"))
    parser.add_argument("--n", type=int, default=30_000)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    drift = drifted_corpus(DriftConfig(n=args.n), seed=args.seed, name="drift")
    save_corpus(drift, args.out / "drift.tsv")
    iid = iid_corpus(IidConfig(n=args.n), seed=args.seed + 1, name="iid")
    save_corpus(iid, args.out / "iid.tsv")
    cfg = args.out / "experiment.ini"
    cfg.write_text(CONFIG_TEMPLATE.format(seed=args.seed, out=args.out), encoding="utf-8")
    print(f"wrote {args.out / 'drift.tsv'} and {args.out / 'iid.tsv'} (N={args.n} each)")
    print(f"wrote {cfg}; run: chronoeval run --config {cfg}")


if __name__ == "__main__":
    main()
