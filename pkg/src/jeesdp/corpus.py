"""Sentence data model, JSONL corpus IO, the BIO label codec, and padding.

Corpus files are UTF-8 JSON Lines, one sentence per line:

    {"id": ..., "tokens": [...], "pos": [...], "dep_head": [...],
     "dep_rel": [...], "entities": [{"id","start","end","type"}, ...],
     "triggers": [{"start","end","subtype"}, ...],
     "arguments": [{"trigger_idx","entity_id","role"}, ...]}

``dep_head`` uses -1 for the dependency root; all span ends are exclusive.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

ROOT = -1
PAD_TOKEN = "<PAD>"
PAD_LABEL = "<PAD>"
NO_ROLE = "NoRole"
OUTSIDE = "O"
MAX_LEN = 50


class CorpusError(ValueError):
    """Malformed corpus record or label inventory violation."""


@dataclass(frozen=True)
class Token:
    text: str
    pos: str
    dep_head: int  # ROOT or index of the head token
    dep_rel: str


@dataclass(frozen=True)
class EntityMention:
    id: str
    start: int
    end: int  # exclusive
    etype: str

    @property
    def span(self):
        return (self.start, self.end)


@dataclass(frozen=True)
class TriggerMention:
    start: int
    end: int  # exclusive
    subtype: str

    @property
    def span(self):
        return (self.start, self.end)


@dataclass(frozen=True)
class ArgumentLink:
    trigger_idx: int
    entity_id: str
    role: str


@dataclass(frozen=True)
class Sentence:
    id: str
    tokens: tuple
    entities: tuple
    triggers: tuple
    arguments: tuple
    pad_mask: tuple = ()
    orig_len: int = 0

    def __post_init__(self):
        if not self.pad_mask:
            object.__setattr__(self, "pad_mask", tuple([1] * len(self.tokens)))
        if not self.orig_len:
            object.__setattr__(self, "orig_len", len(self.tokens))

    @property
    def n_real(self) -> int:
        return sum(self.pad_mask)

    def entity_by_id(self, eid: str) -> EntityMention:
        for e in self.entities:
            if e.id == eid:
                return e
        raise KeyError(eid)


@dataclass(frozen=True)
class LabelVocab:
    """Ordered label inventories; ordering is fixed so indices are stable."""

    trigger_subtypes: tuple
    roles: tuple  # includes NO_ROLE
    entity_types: tuple
    pos_tags: tuple
    dep_rels: tuple
    bio_labels: tuple = field(init=False)

    def __post_init__(self):
        bio = [OUTSIDE]
        for sub in self.trigger_subtypes:
            bio.append(f"B-{sub}")
            bio.append(f"I-{sub}")
        object.__setattr__(self, "bio_labels", tuple(bio))
        object.__setattr__(self, "_bio_index", {lab: i for i, lab in enumerate(bio)})
        object.__setattr__(self, "_role_index", {r: i for i, r in enumerate(self.roles)})
        object.__setattr__(self, "_etype_index", {t: i for i, t in enumerate(self.entity_types)})
        object.__setattr__(self, "_pos_index", {p: i for i, p in enumerate(self.pos_tags)})
        object.__setattr__(self, "_dep_index", {d: i for i, d in enumerate(self.dep_rels)})

    @property
    def n_bio(self) -> int:
        return len(self.bio_labels)

    def bio_index(self, label: str) -> int:
        return self._bio_index[label]

    def role_index(self, role: str) -> int:
        return self._role_index[role]

    def etype_index(self, etype: str) -> int:
        return self._etype_index[etype]

    def pos_index(self, pos: str) -> int:
        return self._pos_index[pos]

    def dep_index(self, dep: str) -> int:
        return self._dep_index[dep]

    def to_dict(self) -> dict:
        return {
            "trigger_subtypes": list(self.trigger_subtypes),
            "roles": list(self.roles),
            "entity_types": list(self.entity_types),
            "pos_tags": list(self.pos_tags),
            "dep_rels": list(self.dep_rels),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LabelVocab":
        return cls(
            trigger_subtypes=tuple(d["trigger_subtypes"]),
            roles=tuple(d["roles"]),
            entity_types=tuple(d["entity_types"]),
            pos_tags=tuple(d["pos_tags"]),
            dep_rels=tuple(d["dep_rels"]),
        )

    @classmethod
    def from_corpus(cls, sentences) -> "LabelVocab":
        subs, roles, etypes, pos, deps = set(), set(), set(), set(), set()
        for s in sentences:
            for t in s.triggers:
                subs.add(t.subtype)
            for a in s.arguments:
                roles.add(a.role)
            for e in s.entities:
                etypes.add(e.etype)
            for tok in s.tokens:
                pos.add(tok.pos)
                deps.add(tok.dep_rel)
        roles.add(NO_ROLE)
        return cls(
            trigger_subtypes=tuple(sorted(subs)),
            roles=tuple(sorted(roles)),
            entity_types=tuple(sorted(etypes)),
            pos_tags=tuple(sorted(pos)),
            dep_rels=tuple(sorted(deps)),
        )


def _validate_sentence(s: Sentence, lineno: int | None = None) -> None:
    where = f"line {lineno}: " if lineno is not None else f"sentence {s.id!r}: "
    n = len(s.tokens)
    roots = [i for i, t in enumerate(s.tokens) if t.dep_head == ROOT]
    if len(roots) != 1:
        raise CorpusError(f"{where}expected exactly one ROOT token, found {len(roots)}")
    for i, t in enumerate(s.tokens):
        if t.dep_head != ROOT and not (0 <= t.dep_head < n and t.dep_head != i):
            raise CorpusError(f"{where}token {i} has invalid dep_head {t.dep_head}")
    seen_ids = set()
    for e in s.entities:
        if not (0 <= e.start < e.end <= n):
            raise CorpusError(f"{where}entity {e.id!r} span [{e.start},{e.end}) out of range for {n} tokens")
        if e.id in seen_ids:
            raise CorpusError(f"{where}duplicate entity id {e.id!r}")
        seen_ids.add(e.id)
    for t in s.triggers:
        if not (0 <= t.start < t.end <= n):
            raise CorpusError(f"{where}trigger span [{t.start},{t.end}) out of range for {n} tokens")
    for a in s.arguments:
        if not (0 <= a.trigger_idx < len(s.triggers)):
            raise CorpusError(f"{where}argument references missing trigger {a.trigger_idx}")
        if a.entity_id not in seen_ids:
            raise CorpusError(f"{where}argument references missing entity {a.entity_id!r}")


def _check_vocab(s: Sentence, vocab: LabelVocab, lineno: int) -> None:
    where = f"line {lineno}: "
    for t in s.triggers:
        if t.subtype not in vocab.trigger_subtypes:
            raise CorpusError(f"{where}unknown trigger subtype {t.subtype!r}")
    for a in s.arguments:
        if a.role not in vocab.roles:
            raise CorpusError(f"{where}unknown role {a.role!r}")
    for e in s.entities:
        if e.etype not in vocab.entity_types:
            raise CorpusError(f"{where}unknown entity type {e.etype!r}")
    for tok in s.tokens:
        if tok.pos not in vocab.pos_tags:
            raise CorpusError(f"{where}unknown POS tag {tok.pos!r}")
        if tok.dep_rel not in vocab.dep_rels:
            raise CorpusError(f"{where}unknown dependency relation {tok.dep_rel!r}")


def _parse_sentence(record: dict, lineno: int) -> Sentence:
    where = f"line {lineno}: "
    try:
        tokens_raw = record["tokens"]
        pos = record["pos"]
        heads = record["dep_head"]
        rels = record["dep_rel"]
        n = len(tokens_raw)
        if not (len(pos) == len(heads) == len(rels) == n):
            raise CorpusError(
                f"{where}tokens/pos/dep_head/dep_rel lengths differ "
                f"({n}/{len(pos)}/{len(heads)}/{len(rels)})"
            )
        tokens = tuple(
            Token(text=str(t), pos=str(p), dep_head=int(h), dep_rel=str(r))
            for t, p, h, r in zip(tokens_raw, pos, heads, rels)
        )
        entities = tuple(
            EntityMention(id=str(e["id"]), start=int(e["start"]), end=int(e["end"]), etype=str(e["type"]))
            for e in record.get("entities", [])
        )
        triggers = tuple(
            TriggerMention(start=int(t["start"]), end=int(t["end"]), subtype=str(t["subtype"]))
            for t in record.get("triggers", [])
        )
        arguments = tuple(
            ArgumentLink(trigger_idx=int(a["trigger_idx"]), entity_id=str(a["entity_id"]), role=str(a["role"]))
            for a in record.get("arguments", [])
        )
        sent = Sentence(
            id=str(record["id"]),
            tokens=tokens,
            entities=entities,
            triggers=triggers,
            arguments=arguments,
        )
    except CorpusError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise CorpusError(f"{where}malformed sentence record: {e}")
    _validate_sentence(sent, lineno)
    return sent


def load_corpus(path, vocab: LabelVocab | None = None):
    """Read a JSONL corpus. With ``vocab=None`` an AUTO vocab is built from
    the observed labels, sorted lexicographically. Returns (sentences, vocab).
    """
    sentences = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusError(f"line {lineno}: invalid JSON: {e}")
            sent = _parse_sentence(record, lineno)
            if vocab is not None:
                _check_vocab(sent, vocab, lineno)
            sentences.append(sent)
    if vocab is None:
        vocab = LabelVocab.from_corpus(sentences)
    return sentences, vocab


def sentence_to_record(s: Sentence) -> dict:
    return {
        "id": s.id,
        "tokens": [t.text for t in s.tokens],
        "pos": [t.pos for t in s.tokens],
        "dep_head": [t.dep_head for t in s.tokens],
        "dep_rel": [t.dep_rel for t in s.tokens],
        "entities": [{"id": e.id, "start": e.start, "end": e.end, "type": e.etype} for e in s.entities],
        "triggers": [{"start": t.start, "end": t.end, "subtype": t.subtype} for t in s.triggers],
        "arguments": [
            {"trigger_idx": a.trigger_idx, "entity_id": a.entity_id, "role": a.role}
            for a in s.arguments
        ],
    }


def save_corpus(sentences, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in sentences:
            fh.write(json.dumps(sentence_to_record(s), sort_keys=True) + "\n")


def normalize_length(s: Sentence, length: int = MAX_LEN) -> Sentence:
    """Pad or cut a sentence to exactly ``length`` tokens.

    Pad positions get a reserved PAD token with dep_head pointing to itself
    so the dependency graph gains no edges. Mentions and triggers whose span
    does not survive truncation are dropped, along with argument links that
    reference them.
    """
    n = len(s.tokens)
    tokens = list(s.tokens[:length])
    pad_mask = list(s.pad_mask[:length])
    for i in range(len(tokens), length):
        tokens.append(Token(text=PAD_TOKEN, pos=PAD_LABEL, dep_head=i, dep_rel=PAD_LABEL))
        pad_mask.append(0)

    entities = tuple(e for e in s.entities if e.end <= length)
    kept_ids = {e.id for e in entities}
    trig_map = {}
    triggers = []
    for old_idx, t in enumerate(s.triggers):
        if t.end <= length:
            trig_map[old_idx] = len(triggers)
            triggers.append(t)
    arguments = tuple(
        replace(a, trigger_idx=trig_map[a.trigger_idx])
        for a in s.arguments
        if a.trigger_idx in trig_map and a.entity_id in kept_ids
    )
    return Sentence(
        id=s.id,
        tokens=tuple(tokens),
        entities=entities,
        triggers=tuple(triggers),
        arguments=arguments,
        pad_mask=tuple(pad_mask),
        orig_len=s.orig_len if s.orig_len else n,
    )


def encode_bio(s: Sentence, vocab: LabelVocab) -> np.ndarray:
    """Per-token BIO label indices; pads and uncovered tokens get O."""
    labels = np.zeros(len(s.tokens), dtype=np.intp)
    seen = []
    for t in sorted(s.triggers, key=lambda t: (t.start, t.end)):
        for prev in seen:
            if t.start < prev.end and prev.start < t.end:
                raise CorpusError(
                    f"sentence {s.id!r}: overlapping trigger spans "
                    f"[{prev.start},{prev.end}) and [{t.start},{t.end})"
                )
        seen.append(t)
        labels[t.start] = vocab.bio_index(f"B-{t.subtype}")
        for k in range(t.start + 1, t.end):
            labels[k] = vocab.bio_index(f"I-{t.subtype}")
    return labels


def decode_bio(labels, vocab: LabelVocab) -> list:
    """Lenient BIO decode: a dangling I-x starts a new trigger of subtype x."""
    triggers = []
    cur_start = None
    cur_sub = None

    def close(end):
        nonlocal cur_start, cur_sub
        if cur_start is not None:
            triggers.append(TriggerMention(start=cur_start, end=end, subtype=cur_sub))
            cur_start, cur_sub = None, None

    for k, idx in enumerate(labels):
        lab = vocab.bio_labels[int(idx)]
        if lab == OUTSIDE:
            close(k)
        elif lab.startswith("B-"):
            close(k)
            cur_start, cur_sub = k, lab[2:]
        else:  # I-x
            sub = lab[2:]
            if cur_sub != sub:
                close(k)
                cur_start, cur_sub = k, sub
    close(len(labels))
    return triggers


def entity_multihot(s: Sentence, vocab: LabelVocab) -> np.ndarray:
    """Row k sums the one-hot type vectors of every mention covering token k."""
    out = np.zeros((len(s.tokens), len(vocab.entity_types)))
    for e in s.entities:
        col = vocab.etype_index(e.etype)
        out[e.start:e.end, col] += 1.0
    return out
