"""Write a synthetic two-language CoNLL dataset plus a ready-to-run config.

    python3 scripts/make_synthetic_data.py demo/
    xner train --config demo/joint.ini
"""

import argparse
from pathlib import Path

from xner import synthetic as syn
from xner.corpus import TagScheme, write_conll

SIZES = {"aa": {"train": 500, "dev": 50, "test": 200},
         "bb": {"train": 30, "dev": 30, "test": 200}}

CONFIG = """\
[run]
seed = 0
scheme = IOBES
out = {out}
target = bb

[lang.aa]
train = {root}/aa.train.conll
dev = {root}/aa.dev.conll
test = {root}/aa.test.conll

[lang.bb]
train = {root}/bb.train.conll
dev = {root}/bb.dev.conll
test = {root}/bb.test.conll

[sharing]
share_filters = true
share_decoder = true

[hyperparams]
lstm_size = 16
max_filter_width = 4
filters_per_width = 8
emb_dim = 16
learning_rate = 0.1
max_epochs = 15
patience = 5
"""


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("outdir", type=Path)
    args = ap.parse_args()
    root = args.outdir.resolve()
    root.mkdir(parents=True, exist_ok=True)
    langs = {"aa": syn.LANG_A, "bb": syn.LANG_B}
    for k, (name, sizes) in enumerate(SIZES.items()):
        for j, (split, n) in enumerate(sizes.items()):
            c = syn.corpus(langs[name], n, 1000 + 10 * k + j, TagScheme.IOB1)
            (root / f"{name}.{split}.conll").write_text(write_conll(c), encoding="utf-8")
    (root / "joint.ini").write_text(CONFIG.format(root=root, out=root / "run"), encoding="utf-8")
    print(f"wrote {root}/{{aa,bb}}.{{train,dev,test}}.conll and {root}/joint.ini")


if __name__ == "__main__":
    main()
