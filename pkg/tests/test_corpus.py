import json

import numpy as np
import pytest

from jeesdp.corpus import (CorpusError, LabelVocab, Sentence, Token,
                           TriggerMention, decode_bio, encode_bio,
                           entity_multihot, load_corpus, normalize_length,
                           save_corpus, sentence_to_record)

from conftest import fixture_path


def make_sentence(n_tokens=6, triggers=(), entities=(), arguments=(), sid="s"):
    heads = [-1] + [0] * (n_tokens - 1)
    tokens = tuple(Token(f"w{i}", "N", heads[i], "dep" if i else "root") for i in range(n_tokens))
    from jeesdp.corpus import ArgumentLink, EntityMention

    ents = tuple(EntityMention(f"e{k}", s, e, t) for k, (s, e, t) in enumerate(entities))
    trigs = tuple(TriggerMention(s, e, sub) for s, e, sub in triggers)
    args = tuple(ArgumentLink(ti, eid, role) for ti, eid, role in arguments)
    return Sentence(id=sid, tokens=tokens, entities=ents, triggers=trigs, arguments=args)


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r) + "\n")


# ---------------------------------------------------------------------------
# loading
# ---------------------------------------------------------------------------


def test_empty_file_gives_empty_corpus_and_vocab(tmp_path):
    p = tmp_path / "empty.jsonl"
    p.write_text("")
    sentences, vocab = load_corpus(p)
    assert sentences == []
    assert vocab.trigger_subtypes == ()
    assert vocab.roles == ("NoRole",)


def test_fig1_counts(fig1_sentence):
    assert len(fig1_sentence.triggers) == 3
    assert len(fig1_sentence.entities) == 6
    assert len(fig1_sentence.tokens) == 20


def test_span_out_of_range_reports_line(tmp_path):
    rec = sentence_to_record(make_sentence())
    rec["entities"] = [{"id": "x", "start": 2, "end": 60, "type": "T"}]
    p = tmp_path / "bad.jsonl"
    write_jsonl(p, [rec])
    with pytest.raises(CorpusError, match="line 1.*out of range"):
        load_corpus(p)


def test_malformed_json_reports_line(tmp_path):
    p = tmp_path / "bad.jsonl"
    good = json.dumps(sentence_to_record(make_sentence()))
    p.write_text(good + "\nnot json\n")
    with pytest.raises(CorpusError, match="line 2"):
        load_corpus(p)


def test_duplicate_entity_id_rejected(tmp_path):
    rec = sentence_to_record(make_sentence())
    rec["entities"] = [
        {"id": "x", "start": 0, "end": 1, "type": "T"},
        {"id": "x", "start": 2, "end": 3, "type": "T"},
    ]
    p = tmp_path / "dup.jsonl"
    write_jsonl(p, [rec])
    with pytest.raises(CorpusError, match="duplicate entity id"):
        load_corpus(p)


def test_two_roots_rejected(tmp_path):
    rec = sentence_to_record(make_sentence())
    rec["dep_head"][1] = -1
    p = tmp_path / "roots.jsonl"
    write_jsonl(p, [rec])
    with pytest.raises(CorpusError, match="exactly one ROOT"):
        load_corpus(p)


def test_unknown_label_under_fixed_vocab(tmp_path):
    rec = sentence_to_record(make_sentence(triggers=[(1, 2, "Attack")]))
    p = tmp_path / "c.jsonl"
    write_jsonl(p, [rec])
    _, vocab = load_corpus(p)
    rec2 = sentence_to_record(make_sentence(triggers=[(1, 2, "Meet")], sid="s2"))
    p2 = tmp_path / "c2.jsonl"
    write_jsonl(p2, [rec2])
    with pytest.raises(CorpusError, match="unknown trigger subtype"):
        load_corpus(p2, vocab)


def test_roundtrip_identity(tmp_path, overfit_corpus):
    sentences, _ = overfit_corpus
    out = tmp_path / "again.jsonl"
    save_corpus(sentences, out)
    reloaded, _ = load_corpus(out)
    assert reloaded == sentences


def test_auto_vocab_sorted_and_roles_include_norole(overfit_corpus):
    _, vocab = overfit_corpus
    assert list(vocab.trigger_subtypes) == sorted(vocab.trigger_subtypes)
    assert "NoRole" in vocab.roles
    assert list(vocab.roles) == sorted(vocab.roles)
    assert vocab.trigger_subtypes == ("Attack", "Meet", "Move", "Trade")
    assert len(vocab.roles) == 5


def test_bio_label_inventory_size():
    vocab = LabelVocab(
        trigger_subtypes=tuple(f"T{i}" for i in range(33)),
        roles=("NoRole",), entity_types=(), pos_tags=(), dep_rels=(),
    )
    assert len(vocab.bio_labels) == 67
    assert vocab.bio_labels[0] == "O"


# ---------------------------------------------------------------------------
# normalize_length
# ---------------------------------------------------------------------------


def test_pad_short_sentence(fig1_sentence):
    out = normalize_length(fig1_sentence, 50)
    assert len(out.tokens) == 50
    assert sum(out.pad_mask) == 20
    assert out.tokens[30].dep_head == 30  # pads point at themselves
    assert out.orig_len == 20


def test_normalize_fixed_point():
    s = make_sentence(n_tokens=50)
    out = normalize_length(s, 50)
    assert out.tokens == s.tokens
    assert normalize_length(out, 50) == out  # idempotent


def test_truncation_drops_clipped_mentions():
    s = make_sentence(
        n_tokens=55,
        triggers=[(2, 3, "A"), (52, 53, "A")],
        entities=[(1, 2, "T"), (50, 54, "T")],
        arguments=[(0, "e0", "R"), (1, "e0", "R"), (1, "e1", "R")],
    )
    out = normalize_length(s, 50)
    assert len(out.tokens) == 50
    assert len(out.triggers) == 1 and out.triggers[0].span == (2, 3)
    assert len(out.entities) == 1
    # links referencing the dropped trigger/entity vanish; the survivor is
    # remapped onto the new trigger index
    assert len(out.arguments) == 1
    assert out.arguments[0].trigger_idx == 0


def test_normalize_idempotent_on_padded(fig1_sentence):
    once = normalize_length(fig1_sentence, 50)
    assert normalize_length(once, 50) == once


# ---------------------------------------------------------------------------
# BIO codec
# ---------------------------------------------------------------------------


@pytest.fixture
def small_vocab():
    return LabelVocab(
        trigger_subtypes=("Attack", "Die", "Meet", "Transport"),
        roles=("NoRole",), entity_types=("PER",), pos_tags=("N",),
        dep_rels=("dep", "root"),
    )


def test_encode_no_triggers_all_outside(small_vocab):
    labels = encode_bio(make_sentence(), small_vocab)
    assert np.array_equal(labels, np.zeros(6))


def test_encode_single_token_trigger(small_vocab):
    s = make_sentence(triggers=[(4, 5, "Transport")])
    labels = encode_bio(s, small_vocab)
    assert small_vocab.bio_labels[labels[4]] == "B-Transport"
    assert all(labels[k] == 0 for k in range(6) if k != 4)


def test_encode_two_token_trigger(small_vocab):
    s = make_sentence(triggers=[(2, 4, "Meet")])
    labels = encode_bio(s, small_vocab)
    assert small_vocab.bio_labels[labels[2]] == "B-Meet"
    assert small_vocab.bio_labels[labels[3]] == "I-Meet"


def test_encode_overlap_rejected_names_both_spans(small_vocab):
    s = make_sentence(triggers=[(1, 3, "Meet"), (2, 4, "Attack")])
    with pytest.raises(CorpusError, match=r"\[1,3\).*\[2,4\)"):
        encode_bio(s, small_vocab)


def test_decode_all_outside(small_vocab):
    assert decode_bio(np.zeros(5, dtype=int), small_vocab) == []


def test_decode_b_then_i(small_vocab):
    labels = [0, small_vocab.bio_index("B-Attack"), small_vocab.bio_index("I-Attack"), 0]
    out = decode_bio(labels, small_vocab)
    assert out == [TriggerMention(1, 3, "Attack")]


def test_decode_lenient_dangling_i(small_vocab):
    labels = [small_vocab.bio_index("I-Die"), 0]
    out = decode_bio(labels, small_vocab)
    assert out == [TriggerMention(0, 1, "Die")]


def test_decode_subtype_switch_starts_new_trigger(small_vocab):
    labels = [small_vocab.bio_index("B-Attack"), small_vocab.bio_index("I-Die")]
    out = decode_bio(labels, small_vocab)
    assert out == [TriggerMention(0, 1, "Attack"), TriggerMention(1, 2, "Die")]


def test_bio_roundtrip_random_property(small_vocab):
    rng = np.random.default_rng(11)
    subs = small_vocab.trigger_subtypes
    for _ in range(200):
        n = int(rng.integers(1, 30))
        spans = []
        cursor = 0
        while cursor < n - 1:
            start = cursor + int(rng.integers(0, 3))
            end = start + int(rng.integers(1, 4))
            if end > n:
                break
            spans.append((start, end, subs[rng.integers(len(subs))]))
            cursor = end + 1  # keep non-adjacent so runs stay separable
        s = make_sentence(n_tokens=n, triggers=spans)
        decoded = decode_bio(encode_bio(s, small_vocab), small_vocab)
        assert sorted((t.start, t.end, t.subtype) for t in decoded) == sorted(spans)


def test_bio_roundtrip_on_fixture_corpora(overfit_corpus, fig1_sentence):
    sentences, vocab = overfit_corpus
    from jeesdp.corpus import LabelVocab as LV

    for s in sentences:
        decoded = decode_bio(encode_bio(s, vocab), vocab)
        assert sorted((t.start, t.end, t.subtype) for t in decoded) == \
            sorted((t.start, t.end, t.subtype) for t in s.triggers)
    fig_vocab = LV.from_corpus([fig1_sentence])
    decoded = decode_bio(encode_bio(fig1_sentence, fig_vocab), fig_vocab)
    assert len(decoded) == 3


# ---------------------------------------------------------------------------
# entity multihot
# ---------------------------------------------------------------------------


def test_multihot_uncovered_token_is_zero(small_vocab):
    s = make_sentence(entities=[(1, 2, "PER")])
    m = entity_multihot(s, small_vocab)
    assert np.array_equal(m[0], [0.0])
    assert np.array_equal(m[1], [1.0])


def test_multihot_democratic_style_stacking():
    vocab = LabelVocab(
        trigger_subtypes=(), roles=("NoRole",),
        entity_types=("Job-Title", "Organization", "Person"),
        pos_tags=("N",), dep_rels=("dep", "root"),
    )
    s = make_sentence(entities=[(1, 4, "Person"), (1, 3, "Organization"), (2, 4, "Job-Title")])
    m = entity_multihot(s, vocab)
    assert np.array_equal(m[2], [1.0, 1.0, 1.0])  # token inside all three


def test_multihot_counts_distinct_same_type_mentions(small_vocab):
    s = make_sentence(entities=[(1, 3, "PER"), (2, 4, "PER")])
    m = entity_multihot(s, small_vocab)
    assert m[2, 0] == 2.0
    # brute-force accumulator oracle
    expect = np.zeros((6, 1))
    for (start, end) in [(1, 3), (2, 4)]:
        for k in range(start, end):
            expect[k, 0] += 1
    assert np.array_equal(m, expect)


def test_multihot_row_sums_equal_incidences(overfit_corpus):
    sentences, vocab = overfit_corpus
    for s in sentences[:10]:
        m = entity_multihot(s, vocab)
        for k in range(len(s.tokens)):
            incidences = sum(1 for e in s.entities if e.start <= k < e.end)
            assert m[k].sum() == incidences
