"""Regenerate the small CoNLL fixtures under tests/data/."""

from pathlib import Path

from xner import synthetic as syn
from xner.corpus import TagScheme, write_conll

OUT = Path(__file__).resolve().parent.parent / "tests" / "data"


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    # 50-sentence bilingual overfitting fixture, 25 sentences per language
    for lang, seed in ((syn.LANG_A, 11), (syn.LANG_B, 12)):
        c = syn.corpus(lang, 25, seed, TagScheme.IOB1)
        (OUT / f"overfit.{lang.name}.iob1.conll").write_text(write_conll(c), encoding="utf-8")
    print(f"wrote fixtures to {OUT}")


if __name__ == "__main__":
    main()
