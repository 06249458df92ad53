"""Embedding tables, pretrained-vector loading, and sentence matrix assembly.

Channel order in the assembled matrix is fixed:
contextual | word | entity-type | POS | dependency-relation.
Pretrained word vectors and contextual vectors are file inputs and stay
frozen; the remaining tables are trainable with a frozen all-zero PAD row 0.
"""

from __future__ import annotations

import json

import numpy as np

from . import tensor as T
from .config import TrainConfig
from .corpus import LabelVocab, Sentence

INIT_SCALE = 0.05
CONTEXTUAL_DIM = 768


class EmbeddingError(ValueError):
    """Malformed embedding file or misaligned vectors."""


class EmbeddingTable:
    """Trainable lookup table.

    With ``pad=True`` row 0 is a reserved all-zero PAD row, real entries
    live at index + 1, and index -1 selects the PAD row. Tables whose whole
    index range is meaningful (position features, path lengths, argument
    types) use ``pad=False`` and raw indices.
    """

    def __init__(self, name: str, n_entries: int, dim: int, rng: np.random.Generator,
                 pad: bool = True):
        self.pad = pad
        rows = n_entries + 1 if pad else n_entries
        data = rng.uniform(-INIT_SCALE, INIT_SCALE, size=(rows, dim))
        if pad:
            data[0] = 0.0
        self.param = T.Parameter(name, data, kind="table")
        self.dim = dim

    @property
    def rows(self) -> int:
        return self.param.shape[0]

    def lookup(self, indices) -> T.Tensor:
        idx = np.asarray(indices, dtype=np.intp)
        if self.pad:
            idx = idx + 1
        return T.embedding_lookup(self.param, idx)


class WordVectors:
    """Frozen pretrained word vectors with PAD (row 0) and UNK (last row).

    Lookups are case-folded; any out-of-vocabulary word shares the single
    seeded-random UNK row.
    """

    def __init__(self, vocab: dict, matrix: np.ndarray):
        self.vocab = vocab
        self.matrix = T.constant(matrix)
        self.dim = matrix.shape[1]
        self.unk_row = matrix.shape[0] - 1

    def row_index(self, word: str) -> int:
        return self.vocab.get(word.lower(), self.unk_row)

    def lookup(self, row_indices) -> T.Tensor:
        return T.embedding_lookup(self.matrix, np.asarray(row_indices, dtype=np.intp))


def load_word_vectors(path, dim: int = 300, rng: np.random.Generator | None = None) -> WordVectors:
    """Parse a text embedding file: one ``word v1 .. v_dim`` entry per line."""
    if rng is None:
        rng = np.random.default_rng(0)
    words = []
    rows = []
    seen = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            if len(parts) < 2 and not parts[0]:
                continue
            word = parts[0].lower()
            values = parts[1:]
            if len(values) != dim:
                raise EmbeddingError(
                    f"{path}:{lineno}: expected {dim} floats for {parts[0]!r}, got {len(values)}"
                )
            if word in seen:
                raise EmbeddingError(f"{path}:{lineno}: duplicate word {word!r}")
            seen.add(word)
            try:
                rows.append([float(v) for v in values])
            except ValueError as e:
                raise EmbeddingError(f"{path}:{lineno}: bad float: {e}")
            words.append(word)
    matrix = np.zeros((len(words) + 2, dim))
    if words:
        matrix[1:-1] = np.asarray(rows)
    matrix[-1] = rng.uniform(-INIT_SCALE, INIT_SCALE, size=dim)  # UNK
    vocab = {w: i + 1 for i, w in enumerate(words)}
    return WordVectors(vocab=vocab, matrix=matrix)


def load_contextual(path, dim: int = CONTEXTUAL_DIM) -> dict:
    """Precomputed per-token contextual vectors, JSONL of
    {"id": ..., "vectors": [[dim floats] per token]} keyed by sentence id."""
    store = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                sid = str(record["id"])
                vectors = np.asarray(record["vectors"], dtype=np.float64)
            except (json.JSONDecodeError, KeyError, ValueError) as e:
                raise EmbeddingError(f"{path}:{lineno}: malformed record: {e}")
            if vectors.ndim != 2 or vectors.shape[1] != dim:
                raise EmbeddingError(
                    f"{path}:{lineno}: expected token rows of width {dim}, got {vectors.shape}"
                )
            store[sid] = vectors
    return store


def contextual_for_sentence(store: dict, s: Sentence, length: int, dim: int) -> np.ndarray:
    """Align a sentence's contextual rows to its padded length."""
    if s.id not in store:
        raise EmbeddingError(f"no contextual vectors for sentence {s.id!r}")
    vectors = store[s.id]
    if vectors.shape[0] != s.orig_len:
        raise EmbeddingError(
            f"sentence {s.id!r}: {vectors.shape[0]} contextual rows for {s.orig_len} tokens"
        )
    out = np.zeros((length, dim))
    n = min(length, vectors.shape[0])
    out[:n] = vectors[:n]
    return out


def span_distance(k: int, start: int, end: int) -> int:
    """Signed token distance to a span: 0 inside, negative left, positive right."""
    if start <= k < end:
        return 0
    if k >= end:
        return k - (end - 1)
    return k - start


def pf_indices(span, length: int) -> np.ndarray:
    """Row indices into the position-feature table for every token position.

    Distances are clipped to [-(L-1), L-1]; index = distance + L - 1, so the
    table has 2L-1 rows.
    """
    start, end = span
    dists = np.array(
        [span_distance(k, start, end) for k in range(length)], dtype=np.intp
    )
    dists = np.clip(dists, -(length - 1), length - 1)
    return dists + length - 1


def channel_dims(cfg: TrainConfig, vocab: LabelVocab) -> dict:
    """Width of each enabled input channel, in assembly order."""
    dims = {}
    if cfg.use_contextual:
        dims["contextual"] = cfg.contextual_dim
    if cfg.use_word:
        dims["word"] = cfg.word_dim
    if cfg.use_entity:
        dims["entity"] = cfg.entity_proj_dim if cfg.entity_projection else len(vocab.entity_types)
    if cfg.use_pos:
        dims["pos"] = cfg.pos_dim
    if cfg.use_dep:
        dims["dep"] = cfg.dep_dim
    return dims


def input_width(cfg: TrainConfig, vocab: LabelVocab) -> int:
    return sum(channel_dims(cfg, vocab).values())
