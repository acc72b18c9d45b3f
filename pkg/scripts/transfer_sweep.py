"""Monolingual vs joint target F1 as the target training set grows (synthetic languages).

Prints one key=value record per (seed, fraction, mode), e.g.

    seed=0 fraction=0.1 mode=mono sentences=10 test_f1=71.3

Pipe the output into any plotting tool to draw the learning curves.
"""

import argparse
import time

import numpy as np

from xner import synthetic as syn
from xner.corpus import subsample
from xner.model import Hyperparams, SharingConfig, rng_stream
from xner.training import run_training


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--source", type=int, default=500, help="source-language training sentences")
    ap.add_argument("--target", type=int, default=100, help="full target training set size")
    ap.add_argument("--fractions", default="0.1,0.3,0.5,0.7,0.9")
    ap.add_argument("--lstm-size", type=int, default=16)
    ap.add_argument("--epochs", type=int, default=15)
    args = ap.parse_args()

    fractions = [float(f) for f in args.fractions.split(",")]
    gains: dict[float, list[float]] = {f: [] for f in fractions}
    for seed in range(args.seeds):
        hp = Hyperparams(lstm_size=args.lstm_size, max_filter_width=4, filters_per_width=8,
                         emb_dim=16, learning_rate=0.1, max_epochs=args.epochs, patience=5,
                         seed=seed)
        src = syn.corpus(syn.LANG_A, args.source, 100 + seed)
        src_dev = syn.corpus(syn.LANG_A, 50, 200 + seed)
        tgt_full = syn.corpus(syn.LANG_B, args.target, 300 + seed)
        tgt_dev = syn.corpus(syn.LANG_B, 30, 400 + seed)
        test = {"bb": syn.corpus(syn.LANG_B, 200, 500 + seed)}
        for f in fractions:
            tgt = subsample(tgt_full, f, rng_stream(seed, "subsample"))
            t0 = time.perf_counter()
            _, mono = run_training(hp, [tgt], [tgt_dev], test=test)
            _, joint = run_training(hp, [src, tgt], [src_dev, tgt_dev], sharing=SharingConfig(),
                                    test=test)
            for mode, rep in (("mono", mono), ("joint", joint)):
                print(f"seed={seed} fraction={f} mode={mode} sentences={len(tgt)} "
                      f"best_epoch={rep.best_epoch} test_f1={rep.test_f1['bb']:.2f}", flush=True)
            gains[f].append(joint.test_f1["bb"] - mono.test_f1["bb"])
            print(f"# {time.perf_counter() - t0:.0f}s", flush=True)
    for f, g in gains.items():
        print(f"summary fraction={f} mean_gain={np.mean(g):.2f} seeds={len(g)}")


if __name__ == "__main__":
    main()
