#!/usr/bin/env python3
"""Regenerate the deterministic test fixtures in tests/fixtures/.

Produces a 50-sentence synthetic training corpus (4 event subtypes, 4 gold
roles + NoRole, single-token entities, hand-built dependency parses), a
50-dim random word-vector file covering its vocabulary, the worked-example
sentence used across the unit tests, a small contextual-vector file for it,
and a ready-to-run training config.
"""

from __future__ import annotations

import json
import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

FIXTURES = os.path.join(os.path.dirname(__file__), "..", "tests", "fixtures")

PERSONS = ["Arden", "Brooks", "Carver", "Devlin", "Ellis", "Farley", "Greer",
           "Hollis", "Ingram", "Joss"]
PLACES = ["Mira", "Norvale", "Ostin", "Pelham", "Quorra", "Rios", "Selden", "Tarn"]


def meet_sentence(p1, p2, loc):
    return {
        "tokens": [p1, "and", p2, "met", "in", loc, "yesterday"],
        "pos": ["PROPN", "CCONJ", "PROPN", "VERB", "ADP", "PROPN", "ADV"],
        "dep_head": [3, 0, 0, -1, 5, 3, 3],
        "dep_rel": ["nsubj", "cc", "conj", "root", "case", "obl", "advmod"],
        "entities": [
            {"id": "e0", "start": 0, "end": 1, "type": "PER"},
            {"id": "e1", "start": 2, "end": 3, "type": "PER"},
            {"id": "e2", "start": 5, "end": 6, "type": "LOC"},
        ],
        "triggers": [{"start": 3, "end": 4, "subtype": "Meet"}],
        "arguments": [
            {"trigger_idx": 0, "entity_id": "e0", "role": "Partner"},
            {"trigger_idx": 0, "entity_id": "e1", "role": "Partner"},
            {"trigger_idx": 0, "entity_id": "e2", "role": "Place"},
        ],
    }


def attack_sentence(l1, p1, l2):
    return {
        "tokens": ["soldiers", "from", l1, "raided", p1, "near", l2],
        "pos": ["NOUN", "ADP", "PROPN", "VERB", "PROPN", "ADP", "PROPN"],
        "dep_head": [3, 2, 0, -1, 3, 6, 3],
        "dep_rel": ["nsubj", "case", "nmod", "root", "obj", "case", "obl"],
        "entities": [
            {"id": "e0", "start": 2, "end": 3, "type": "LOC"},
            {"id": "e1", "start": 4, "end": 5, "type": "PER"},
            {"id": "e2", "start": 6, "end": 7, "type": "LOC"},
        ],
        "triggers": [{"start": 3, "end": 4, "subtype": "Attack"}],
        "arguments": [
            {"trigger_idx": 0, "entity_id": "e1", "role": "Target"},
            {"trigger_idx": 0, "entity_id": "e2", "role": "Place"},
        ],
    }


def move_sentence(p1, l1, l2):
    return {
        "tokens": [p1, "traveled", "from", l1, "to", l2],
        "pos": ["PROPN", "VERB", "ADP", "PROPN", "ADP", "PROPN"],
        "dep_head": [1, -1, 3, 1, 5, 1],
        "dep_rel": ["nsubj", "root", "case", "obl", "case", "obl"],
        "entities": [
            {"id": "e0", "start": 0, "end": 1, "type": "PER"},
            {"id": "e1", "start": 3, "end": 4, "type": "LOC"},
            {"id": "e2", "start": 5, "end": 6, "type": "LOC"},
        ],
        "triggers": [{"start": 1, "end": 2, "subtype": "Move"}],
        "arguments": [
            {"trigger_idx": 0, "entity_id": "e0", "role": "Agent"},
            {"trigger_idx": 0, "entity_id": "e2", "role": "Place"},
        ],
    }


def trade_sentence(p1, p2, l1):
    return {
        "tokens": [p1, "sold", "goods", "to", p2, "in", l1],
        "pos": ["PROPN", "VERB", "NOUN", "ADP", "PROPN", "ADP", "PROPN"],
        "dep_head": [1, -1, 1, 4, 1, 6, 1],
        "dep_rel": ["nsubj", "root", "obj", "case", "obl", "case", "obl"],
        "entities": [
            {"id": "e0", "start": 0, "end": 1, "type": "PER"},
            {"id": "e1", "start": 4, "end": 5, "type": "PER"},
            {"id": "e2", "start": 6, "end": 7, "type": "LOC"},
        ],
        "triggers": [{"start": 1, "end": 2, "subtype": "Trade"}],
        "arguments": [
            {"trigger_idx": 0, "entity_id": "e0", "role": "Agent"},
            {"trigger_idx": 0, "entity_id": "e1", "role": "Partner"},
            {"trigger_idx": 0, "entity_id": "e2", "role": "Place"},
        ],
    }


def gather_sentence(p1, l1):
    return {
        "tokens": ["envoys", "of", p1, "gathered", "at", "the", "square", "in", l1, "today"],
        "pos": ["NOUN", "ADP", "PROPN", "VERB", "ADP", "DET", "NOUN", "ADP", "PROPN", "ADV"],
        "dep_head": [3, 2, 0, -1, 6, 6, 3, 8, 6, 3],
        "dep_rel": ["nsubj", "case", "nmod", "root", "case", "det", "obl", "case", "nmod", "advmod"],
        "entities": [
            {"id": "e0", "start": 2, "end": 3, "type": "PER"},
            {"id": "e1", "start": 8, "end": 9, "type": "LOC"},
        ],
        "triggers": [{"start": 3, "end": 4, "subtype": "Meet"}],
        "arguments": [
            {"trigger_idx": 0, "entity_id": "e0", "role": "Partner"},
            {"trigger_idx": 0, "entity_id": "e1", "role": "Place"},
        ],
    }


def meet_attack_sentence(p1, p2, l1):
    return {
        "tokens": [p1, "and", p2, "met", "after", "troops", "raided", l1],
        "pos": ["PROPN", "CCONJ", "PROPN", "VERB", "ADP", "NOUN", "VERB", "PROPN"],
        "dep_head": [3, 0, 0, -1, 6, 6, 3, 6],
        "dep_rel": ["nsubj", "cc", "conj", "root", "mark", "nsubj", "advcl", "obj"],
        "entities": [
            {"id": "e0", "start": 0, "end": 1, "type": "PER"},
            {"id": "e1", "start": 2, "end": 3, "type": "PER"},
            {"id": "e2", "start": 7, "end": 8, "type": "LOC"},
        ],
        "triggers": [
            {"start": 3, "end": 4, "subtype": "Meet"},
            {"start": 6, "end": 7, "subtype": "Attack"},
        ],
        "arguments": [
            {"trigger_idx": 0, "entity_id": "e0", "role": "Partner"},
            {"trigger_idx": 0, "entity_id": "e1", "role": "Partner"},
            {"trigger_idx": 1, "entity_id": "e2", "role": "Target"},
        ],
    }


def move_trade_sentence(p1, l1, p2):
    return {
        "tokens": [p1, "traveled", "to", l1, "and", "sold", "goods", "to", p2],
        "pos": ["PROPN", "VERB", "ADP", "PROPN", "CCONJ", "VERB", "NOUN", "ADP", "PROPN"],
        "dep_head": [1, -1, 3, 1, 5, 1, 5, 8, 5],
        "dep_rel": ["nsubj", "root", "case", "obl", "cc", "conj", "obj", "case", "obl"],
        "entities": [
            {"id": "e0", "start": 0, "end": 1, "type": "PER"},
            {"id": "e1", "start": 3, "end": 4, "type": "LOC"},
            {"id": "e2", "start": 8, "end": 9, "type": "PER"},
        ],
        "triggers": [
            {"start": 1, "end": 2, "subtype": "Move"},
            {"start": 5, "end": 6, "subtype": "Trade"},
        ],
        "arguments": [
            {"trigger_idx": 0, "entity_id": "e0", "role": "Agent"},
            {"trigger_idx": 0, "entity_id": "e1", "role": "Place"},
            {"trigger_idx": 1, "entity_id": "e0", "role": "Agent"},
            {"trigger_idx": 1, "entity_id": "e2", "role": "Partner"},
        ],
    }


def build_synthetic_corpus():
    rng = np.random.default_rng(20240401)

    def pick(pool, n):
        return [pool[i] for i in rng.choice(len(pool), size=n, replace=False)]

    records = []

    def emit(record):
        record["id"] = f"syn-{len(records):03d}"
        records.append(record)

    for _ in range(7):
        p1, p2 = pick(PERSONS, 2)
        emit(meet_sentence(p1, p2, pick(PLACES, 1)[0]))
    for _ in range(7):
        l1, l2 = pick(PLACES, 2)
        emit(attack_sentence(l1, pick(PERSONS, 1)[0], l2))
    for _ in range(7):
        l1, l2 = pick(PLACES, 2)
        emit(move_sentence(pick(PERSONS, 1)[0], l1, l2))
    for _ in range(7):
        p1, p2 = pick(PERSONS, 2)
        emit(trade_sentence(p1, p2, pick(PLACES, 1)[0]))
    for _ in range(2):
        emit(gather_sentence(pick(PERSONS, 1)[0], pick(PLACES, 1)[0]))
    for _ in range(10):
        p1, p2 = pick(PERSONS, 2)
        emit(meet_attack_sentence(p1, p2, pick(PLACES, 1)[0]))
    for _ in range(10):
        p1, p2 = pick(PERSONS, 2)
        emit(move_trade_sentence(p1, pick(PLACES, 1)[0], p2))
    return records


def fig1_sentence():
    """The running example: three triggers, six entity mentions, and the
    dependency parse that yields the reference shortest-path lengths."""
    tokens = ["Bush", "and", "Putin", "were", "leaved", "after", "their", "talks",
              "for", "the", "Group", "of", "Eight", "summit", "of", "the",
              "largest", "Nations", "in", "France"]
    dep_head = [4, 0, 0, 4, -1, 7, 7, 4, 10, 10, 7, 12, 10, 10, 17, 17, 17, 13, 19, 17]
    dep_rel = ["nsubjpass", "cc", "conj", "auxpass", "root", "case", "nmod:poss",
               "nmod", "case", "det", "nmod", "case", "nmod", "dep", "case",
               "det", "amod", "nmod", "case", "nmod"]
    pos = ["PROPN", "CCONJ", "PROPN", "AUX", "VERB", "ADP", "PRON", "NOUN",
           "ADP", "DET", "PROPN", "ADP", "NUM", "NOUN", "ADP", "DET", "ADJ",
           "PROPN", "ADP", "PROPN"]
    return {
        "id": "fig1",
        "tokens": tokens,
        "pos": pos,
        "dep_head": dep_head,
        "dep_rel": dep_rel,
        "entities": [
            {"id": "bush", "start": 0, "end": 1, "type": "PER"},
            {"id": "putin", "start": 2, "end": 3, "type": "PER"},
            {"id": "their", "start": 6, "end": 7, "type": "PER"},
            {"id": "group", "start": 10, "end": 13, "type": "ORG"},
            {"id": "nations", "start": 15, "end": 18, "type": "GPE"},
            {"id": "france", "start": 19, "end": 20, "type": "GPE"},
        ],
        "triggers": [
            {"start": 4, "end": 5, "subtype": "Transport"},
            {"start": 7, "end": 8, "subtype": "Meet"},
            {"start": 13, "end": 14, "subtype": "Meet"},
        ],
        "arguments": [
            {"trigger_idx": 0, "entity_id": "bush", "role": "Entity"},
            {"trigger_idx": 0, "entity_id": "putin", "role": "Entity"},
            {"trigger_idx": 0, "entity_id": "france", "role": "Destination"},
            {"trigger_idx": 1, "entity_id": "their", "role": "Entity"},
            {"trigger_idx": 2, "entity_id": "bush", "role": "Artifact"},
            {"trigger_idx": 2, "entity_id": "putin", "role": "Artifact"},
            {"trigger_idx": 2, "entity_id": "nations", "role": "Entity"},
            {"trigger_idx": 2, "entity_id": "france", "role": "Place"},
        ],
    }


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r, sort_keys=True) + "\n")


def write_word_vectors(path, records, dim=50, seed=99):
    rng = np.random.default_rng(seed)
    vocab = sorted({tok.lower() for r in records for tok in r["tokens"]})
    with open(path, "w", encoding="utf-8") as fh:
        for word in vocab:
            values = rng.uniform(-0.5, 0.5, size=dim)
            fh.write(word + " " + " ".join(f"{v:.6f}" for v in values) + "\n")


def write_contextual(path, record, dim=8, seed=41):
    rng = np.random.default_rng(seed)
    vectors = rng.normal(size=(len(record["tokens"]), dim)).round(6).tolist()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"id": record["id"], "vectors": vectors}) + "\n")


OVERFIT_CFG = """\
# training config for the bundled synthetic corpus
corpus=tests/fixtures/overfit.jsonl
word_vectors=tests/fixtures/wordvec50.txt
checkpoint_out=overfit_model.jsdp
metrics_out=overfit_metrics.jsonl
use_contextual=false
word_dim=50
max_len=20
dropout=0.1
lr=0.002
epochs=300
seed=7
"""


def main():
    os.makedirs(FIXTURES, exist_ok=True)
    corpus = build_synthetic_corpus()
    write_jsonl(os.path.join(FIXTURES, "overfit.jsonl"), corpus)
    fig1 = fig1_sentence()
    write_jsonl(os.path.join(FIXTURES, "fig1.jsonl"), [fig1])
    write_word_vectors(os.path.join(FIXTURES, "wordvec50.txt"), corpus + [fig1])
    write_contextual(os.path.join(FIXTURES, "fig1_contextual.jsonl"), fig1)
    with open(os.path.join(FIXTURES, "overfit.cfg"), "w", encoding="utf-8") as fh:
        fh.write(OVERFIT_CFG)
    print(f"wrote fixtures to {os.path.abspath(FIXTURES)}")


if __name__ == "__main__":
    main()
