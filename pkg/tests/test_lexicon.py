import numpy as np
import pytest

from xner import autodiff as ad
from xner.autodiff import Param
from xner.charcnn import CharVocab, FilterBank
from xner.lexicon import (EmbeddingFormatError, LanguageProjection, embed, input_vector,
                          load_embeddings, random_embeddings, save_embeddings)

FILE = b"3 4\nMadrid 0.1 0.2 0.3 0.4\nthe 1 2 3 4\nof -1 -2 -3 -4\n"


def test_load_shapes_and_header():
    emb = load_embeddings(FILE)
    assert len(emb.vocab) == 4 and emb.table.shape == (4, 4)
    assert emb.vocab.lookup("MADRID") == 1
    no_header = load_embeddings(b"a 1 2\nb 3 4\nc 5 6\n")
    assert no_header.table.shape == (4, 2)


def test_duplicate_keeps_first():
    lines = [f"w{i} {i} {i}" for i in range(10)]
    lines[8] = "w1 99 99"
    emb = load_embeddings("\n".join(lines))
    assert emb.table.value[emb.vocab.lookup("w1")].tolist() == [1.0, 1.0]


def test_unk_row_seeded_and_bounded():
    a = load_embeddings(FILE, rng=np.random.default_rng(5))
    b = load_embeddings(FILE, rng=np.random.default_rng(5))
    assert np.array_equal(a.table.value, b.table.value)
    assert np.all(np.abs(a.table.value[0]) <= 0.25 / np.sqrt(4))


def test_ragged_and_empty_rejected():
    with pytest.raises(EmbeddingFormatError, match="line 3"):
        load_embeddings(b"a 1 2\nb 1 2\nc 1\n")
    with pytest.raises(EmbeddingFormatError):
        load_embeddings(b"")


def test_save_load_roundtrip_bit_identical():
    rng = np.random.default_rng(0)
    emb = load_embeddings(b"x 0.1 0.2\ny 0.3 0.4\n", rng=np.random.default_rng(1))
    emb.table.value[1:] = rng.normal(size=(2, 2))
    again = load_embeddings(save_embeddings(emb), rng=np.random.default_rng(1))
    assert again.table.value.tobytes() == emb.table.value.tobytes()
    assert again.vocab == emb.vocab


def test_embed_lowercases_and_unk():
    emb = load_embeddings(FILE)
    ident = LanguageProjection()
    assert np.array_equal(embed("Madrid", emb, ident).value, embed("madrid", emb, ident).value)
    assert np.array_equal(embed("Madrid", emb, ident).value, emb.table.value[1])
    assert np.array_equal(embed("zzz", emb, ident).value, emb.table.value[0])


def test_learned_projection_starts_as_identity():
    emb = load_embeddings(FILE)
    proj = LanguageProjection.learned("p", 4)
    assert proj.mode == "learned"
    assert np.array_equal(embed("the", emb, proj).value, emb.table.value[2])


def test_extend_adds_trainable_rows():
    emb = load_embeddings(FILE)
    added = emb.extend(["The", "NEW", "new"], np.random.default_rng(0))
    assert added == 1 and emb.table.shape == (5, 4) and emb.vocab.lookup("New") == 4


def test_input_vector_case_split():
    chars = CharVocab("ibmIBM")
    w = np.zeros((len(chars), 1))
    for ch in "IBM":
        w[chars.index[ch], 0] = 1.0
    bank = FilterBank([Param("f.w1.weight", w)], [Param("f.w1.bias", np.zeros(1))], len(chars))
    emb = random_embeddings("e", ["ibm"], 3, np.random.default_rng(0))
    proj = LanguageProjection()
    upper = input_vector("IBM", emb, proj, bank, chars).value
    lower = input_vector("ibm", emb, proj, bank, chars).value
    assert upper.shape == (4,)
    assert np.array_equal(upper[:3], lower[:3])
    assert upper[3] != lower[3]


def test_sparse_gradient_only_touches_sentence_rows():
    emb = random_embeddings("e", ["a", "b", "c", "d"], 3, np.random.default_rng(0))
    proj = LanguageProjection.learned("p", 3)
    with ad.Tape() as tape:
        loss = ad.sum_(ad.tanh(ad.add(embed("b", emb, proj), embed("D", emb, proj))))
    tape.backward(loss)
    rows = {emb.vocab.lookup("b"), emb.vocab.lookup("d")}
    for i in range(len(emb.vocab)):
        assert np.any(emb.table.grad[i] != 0) == (i in rows)
