import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import (brute_force_spans, hand_encode, random_corpus, random_spans,
                      reference_scores)
from xner.corpus import (CONLL2003, ColumnLayout, Corpus, CorpusFormatError, EntitySpan,
                         Sentence, TagScheme, convert_scheme, evaluate_f1, extract_spans,
                         format_scores, merge_shuffle, parse_conll, spans_from_tags, subsample,
                         write_conll)

IOB1, IOBES, IO = TagScheme.IOB1, TagScheme.IOBES, TagScheme.IO


def sent(tags, lang="xx"):
    return Sentence.from_pairs([f"w{i}" for i in range(len(tags))], tags, lang)


def corpus(tag_lists, scheme, lang="xx"):
    return Corpus(lang, scheme, tuple(sent(t, lang) for t in tag_lists))


span_lists = st.lists(
    st.tuples(st.integers(0, 2), st.integers(1, 3), st.sampled_from(["PER", "LOC", "ORG", "MISC"])),
    max_size=6)


def layout_spans(items):
    """(gap, length, type) triples -> spans and sentence length."""
    spans, i = [], 0
    for gap, length, typ in items:
        i += gap
        spans.append((i, i + length - 1, typ))
        i += length
    return spans, max(i, 1)


# ---------------------------------------------------------------- parsing


def test_parse_sentence_lengths():
    c = parse_conll(b"a O\nb I-PER\n\nc O\n", scheme=IOB1)
    assert [len(s) for s in c.sentences] == [2, 1]
    assert c.sentences[0].tokens[1].tag == "I-PER"


def test_docstart_only_is_empty():
    assert len(parse_conll(b"-DOCSTART- -X- O O\n", CONLL2003).sentences) == 0


def test_docstart_sentence_dropped():
    data = b"-DOCSTART- -X- O O\n\nEU NNP I-NP I-ORG\nrejects VBZ I-VP O\n\n"
    c = parse_conll(data, CONLL2003)
    assert c.sentences[0].words == ["EU", "rejects"]
    assert c.sentences[0].tags == ["I-ORG", "O"]


def test_column_count_error_has_line_number():
    with pytest.raises(CorpusFormatError, match="line 3"):
        parse_conll(b"a NN O O\nb NN O O\nc O\n", CONLL2003)


def test_unknown_tag_rejected():
    with pytest.raises(CorpusFormatError):
        parse_conll(b"a I-FOO\n", scheme=IOB1)
    with pytest.raises(CorpusFormatError):
        parse_conll(b"a S-PER\n", scheme=IOB1)


def test_invalid_sequence_repaired_and_counted():
    # B- after O is not canonical IOB1; read as an entity start
    c = parse_conll(b"a O\nb B-PER\nc I-PER\n", scheme=IOB1)
    assert c.repairs == 1
    assert c.sentences[0].tags == ["O", "I-PER", "I-PER"]
    # IOBES I- without B-
    c = parse_conll(b"a I-LOC\nb E-LOC\n", scheme=IOBES)
    assert c.repairs == 1 and c.sentences[0].tags == ["B-LOC", "E-LOC"]


def test_utf8_surface_preserved():
    c = parse_conll("Málaga I-LOC\n".encode("utf-8"), scheme=IOB1)
    assert c.sentences[0].words == ["Málaga"]


def test_write_then_parse_roundtrip():
    rng = np.random.default_rng(0)
    c = random_corpus(rng, 20, "IOBES")
    again = parse_conll(write_conll(c), ColumnLayout(0, 1, 2), scheme=IOBES, language="xx")
    assert again == c


# ---------------------------------------------------------------- spans


def test_extract_spans_examples():
    assert extract_spans(sent(["O", "O"])) == []
    assert extract_spans(sent(["S-PER", "O", "B-LOC", "I-LOC", "E-LOC"])) == [
        EntitySpan(0, 0, "PER"), EntitySpan(2, 4, "LOC")]
    io = ["I-PER", "I-LOC"]
    assert [(s.start, s.end, s.type) for s in extract_spans(sent(io))] == \
        brute_force_spans(io, "IO") == [(0, 0, "PER"), (1, 1, "LOC")]


@settings(max_examples=300, deadline=None)
@given(span_lists, st.sampled_from(["IOB1", "IOBES", "IO"]))
def test_extract_matches_brute_force(items, scheme):
    spans, n = layout_spans(items)
    tags = hand_encode(spans, n, scheme)
    got = [(s.start, s.end, s.type) for s in spans_from_tags(tags)]
    assert got == brute_force_spans(tags, scheme)
    if scheme != "IO":
        assert got == spans


@settings(max_examples=300, deadline=None)
@given(span_lists, st.sampled_from(["IOB1", "IOBES"]))
def test_span_count_equals_run_starts(items, scheme):
    spans, n = layout_spans(items)
    tags = hand_encode(spans, n, scheme)
    starts = sum(1 for i, t in enumerate(tags) if t != "O" and (
        t[0] in "BS" or i == 0 or tags[i - 1] == "O" or tags[i - 1][2:] != t[2:]
        or tags[i - 1][0] in "ES"))
    assert len(spans_from_tags(tags)) == starts


# ---------------------------------------------------------------- conversion


def test_convert_examples():
    c = convert_scheme(corpus([["I-PER"]], IOB1), IOBES)
    assert c.sentences[0].tags == ["S-PER"]
    src = corpus([["I-ORG", "I-ORG", "B-ORG"]], IOB1)
    assert len(extract_spans(src.sentences[0])) == 2
    out = convert_scheme(src, IO)
    assert out.sentences[0].tags == ["I-ORG"] * 3
    assert len(brute_force_spans(out.sentences[0].tags, "IO")) == 1
    assert convert_scheme(corpus([["B-LOC", "E-LOC", "O"]], IOBES), IO).sentences[0].tags == \
        ["I-LOC", "I-LOC", "O"]


def test_io_to_richer_rejected():
    with pytest.raises(ValueError, match="cannot convert IO"):
        convert_scheme(corpus([["I-PER"]], IO), IOBES)


@settings(max_examples=300, deadline=None)
@given(span_lists)
def test_iob1_iobes_roundtrip_preserves_spans(items):
    spans, n = layout_spans(items)
    c = corpus([hand_encode(spans, n, "IOB1")], IOB1)
    there = convert_scheme(c, IOBES)
    back = convert_scheme(there, IOB1)
    assert extract_spans(there.sentences[0]) == extract_spans(c.sentences[0])
    assert back == c


@settings(max_examples=300, deadline=None)
@given(span_lists)
def test_io_conversion_merges_adjacent_same_type(items):
    spans, n = layout_spans(items)
    io = convert_scheme(corpus([hand_encode(spans, n, "IOB1")], IOB1), IO).sentences[0].tags
    merged = []
    for s in spans:
        if merged and merged[-1][1] == s[0] - 1 and merged[-1][2] == s[2]:
            merged[-1] = (merged[-1][0], s[1], s[2])
        else:
            merged.append(s)
    assert brute_force_spans(io, "IO") == merged


# ---------------------------------------------------------------- scoring


def test_f1_examples():
    gold = corpus([["S-PER", "O", "S-LOC"]], IOBES)
    assert evaluate_f1(gold, gold).f1 == 100.0
    pred = corpus([["S-PER", "O", "O"]], IOBES)
    s = evaluate_f1(gold, pred)
    assert (s.precision, s.recall) == (100.0, 50.0)
    assert round(s.f1, 2) == 66.67
    empty = corpus([["O", "O", "O"]], IOBES)
    assert evaluate_f1(empty, empty).f1 == 100.0
    assert evaluate_f1(gold, empty).f1 == 0.0 and evaluate_f1(empty, gold).f1 == 0.0


def test_f1_boundary_and_type_must_match():
    gold = corpus([["B-ORG", "E-ORG", "S-PER"]], IOBES)
    pred = corpus([["S-ORG", "O", "S-LOC"]], IOBES)
    assert evaluate_f1(gold, pred).f1 == 0.0


def test_f1_structure_mismatch():
    with pytest.raises(ValueError):
        evaluate_f1(corpus([["O"]], IOBES), corpus([["O", "O"]], IOBES))
    with pytest.raises(ValueError):
        evaluate_f1(corpus([["O"]], IOBES), corpus([["O"]], IO))


def test_f1_matches_reference_on_random_corpora():
    rng = np.random.default_rng(7)
    for _ in range(10):
        gold = random_corpus(rng, 10, "IOBES")
        pred_tags = []
        for s in gold.sentences:
            n = len(s)
            pred_tags.append(hand_encode(random_spans(rng, n), n, "IOBES") if rng.random() < 0.6
                             else s.tags)
        pred = Corpus("xx", IOBES, tuple(Sentence.from_pairs(s.words, t, "xx")
                                          for s, t in zip(gold.sentences, pred_tags)))
        got = evaluate_f1(gold, pred)
        ref = reference_scores([s.tags for s in gold.sentences], pred_tags, "IOBES")
        assert np.allclose([got.precision, got.recall, got.f1], ref, atol=1e-9, rtol=0)


def test_format_scores_has_text_and_kv_lines():
    gold = corpus([["S-PER", "O", "S-LOC"]], IOBES)
    pred = corpus([["S-PER", "O", "O"]], IOBES)
    text = format_scores(evaluate_f1(gold, pred))
    assert "FB1:  66.67" in text
    assert "scope=overall precision=100.00 recall=50.00 f1=66.67" in text
    assert "scope=LOC precision=0.00 recall=0.00 f1=0.00" in text


# ---------------------------------------------------------------- joint corpora


def test_merge_shuffle():
    rng = np.random.default_rng(1)
    a = random_corpus(rng, 3, lang="aa")
    b = random_corpus(rng, 5, lang="bb")
    j = merge_shuffle([a, b], 42)
    assert len(j.sentences) == 8
    assert sum(s.lang == "aa" for s in j.sentences) == 3
    assert merge_shuffle([a, b], 42) == j
    assert sorted(map(repr, j.sentences)) == sorted(map(repr, a.sentences + b.sentences))
    only_a = merge_shuffle([a, Corpus("bb", IOBES, ())], 3)
    assert sorted(map(repr, only_a.sentences)) == sorted(map(repr, a.sentences))
    with pytest.raises(ValueError):
        merge_shuffle([a, Corpus("bb", IO, ())], 0)


def test_subsample():
    rng = np.random.default_rng(2)
    c = random_corpus(rng, 10)
    assert subsample(c, 1.0, 0) is c
    half = subsample(c, 0.5, 0)
    assert len(half.sentences) == 5 and set(half.sentences) <= set(c.sentences)
    for bad in (0.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            subsample(c, bad, 0)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 60), st.integers(0, 2**32 - 1))
def test_subsample_nested(n, seed):
    c = Corpus("xx", IOBES, tuple(Sentence.from_pairs([f"s{k}"], ["O"], "xx") for k in range(n)))
    small = set(subsample(c, 0.2, seed).sentences)
    large = set(subsample(c, 0.4, seed).sentences)
    assert small <= large
    assert len(small) == round(0.2 * n)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10_000))
def test_f1_self_is_100(seed):
    c = random_corpus(np.random.default_rng(seed), 5, "IOBES")
    assert evaluate_f1(c, c).f1 == 100.0
