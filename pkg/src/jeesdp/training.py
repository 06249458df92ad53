"""Joint loss, Adam optimizer, the minibatch training loop, checkpoint IO,
and corpus-level prediction."""

from __future__ import annotations

import json
import os
import struct
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .config import TrainConfig
from .corpus import LabelVocab, normalize_length
from .evaluation import (ArgumentPrediction, EventPrediction, gold_events,
                         score_arguments, score_triggers)
from .model import JointModel, SentenceFeatures, featurize

CHECKPOINT_MAGIC = b"JSDP"
CHECKPOINT_VERSION = 1
PROB_FLOOR = 1e-12

# rng stream tags derived from the run seed
_RNG_INIT, _RNG_WORDS, _RNG_SHUFFLE, _RNG_DROPOUT = 0, 1, 2, 3


class TrainingError(RuntimeError):
    """Non-finite loss/gradient or an unusable training setup."""


def rng_for(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), *[int(k) for k in key]])


def init_rng(seed: int) -> np.random.Generator:
    return rng_for(seed, _RNG_INIT)


def word_vector_rng(seed: int) -> np.random.Generator:
    return rng_for(seed, _RNG_WORDS)


# ---------------------------------------------------------------------------
# loss
# ---------------------------------------------------------------------------


def _cross_entropy_sum(probs: T.Tensor, targets: np.ndarray, mask: np.ndarray | None = None):
    """Sum of -log p(target) over rows; with a 0/1 mask, masked rows drop out."""
    picked = T.pick_rows(probs, targets)
    logs = T.log(picked, floor=PROB_FLOOR)
    if mask is not None:
        logs = T.mul(logs, T.constant(np.asarray(mask, dtype=np.float64)))
    return T.scalar_scale(T.sum_axis(logs), -1.0)


def joint_loss(outputs, feats_list, vocab: LabelVocab, cfg: TrainConfig, parameters=()):
    """Mean non-pad-token trigger cross-entropy plus mean gold-pair role
    cross-entropy (equal weight), optional identification term, plus the L2
    penalty over non-bias trainable weights."""
    trigger_terms, n_tokens = [], 0
    role_terms, n_pairs = [], 0
    ident_terms, n_ident = [], 0
    for out, feats in zip(outputs, feats_list):
        trigger_terms.append(_cross_entropy_sum(out.trigger_probs, feats.bio, feats.pad_mask))
        n_tokens += int(feats.pad_mask.sum())
        for i, _ in enumerate(out.candidates):
            if feats.n_entities == 0:
                continue
            role_terms.append(_cross_entropy_sum(out.role_probs[i], feats.role_matrix[i]))
            n_pairs += feats.n_entities
            if out.ident_probs:
                ident_terms.append(_cross_entropy_sum(out.ident_probs[i], feats.ident_matrix[i]))
                n_ident += feats.n_entities

    def _mean(terms, count):
        if not terms or count == 0:
            return None
        total = terms[0]
        for t in terms[1:]:
            total = T.add(total, t)
        return T.scalar_scale(total, 1.0 / count)

    loss = _mean(trigger_terms, n_tokens)
    if loss is None:
        raise TrainingError("loss over a batch with no real tokens")
    role = _mean(role_terms, n_pairs)
    if role is not None:
        loss = T.add(loss, role)
    ident = _mean(ident_terms, n_ident)
    if ident is not None:
        loss = T.add(loss, ident)
    if cfg.l2 > 0.0:
        reg = None
        for p in parameters:
            if p.kind == "bias":
                continue
            sq = T.sum_axis(T.mul(p.tensor, p.tensor))
            reg = sq if reg is None else T.add(reg, sq)
        if reg is not None:
            loss = T.add(loss, T.scalar_scale(reg, cfg.l2))
    return loss


# ---------------------------------------------------------------------------
# optimizer
# ---------------------------------------------------------------------------


class Adam:
    """Adam with bias correction; moments are kept per parameter."""

    def __init__(self, params, lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for i, p in enumerate(self.params):
            g = p.grad
            if g is None:
                continue
            if not np.all(np.isfinite(g)):
                raise TrainingError(f"non-finite gradient for parameter {p.name!r}")
            self.m[i] = b1 * self.m[i] + (1 - b1) * g
            self.v[i] = b2 * self.v[i] + (1 - b2) * g * g
            m_hat = self.m[i] / (1 - b1 ** self.t)
            v_hat = self.v[i] / (1 - b2 ** self.t)
            p.tensor.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------


def atomic_write(path, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def checkpoint_bytes(model: JointModel, paths: dict | None = None) -> bytes:
    params = model.parameters()
    header = {
        "version": CHECKPOINT_VERSION,
        "config": model.cfg.to_dict(),
        "vocab": model.vocab.to_dict(),
        "paths": dict(paths or {}),
        "manifest": [{"name": p.name, "shape": list(p.shape)} for p in params],
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    payload = b"".join(
        np.ascontiguousarray(p.data, dtype="<f4").tobytes() for p in params
    )
    return CHECKPOINT_MAGIC + struct.pack("<I", len(header_bytes)) + header_bytes + payload


def save_checkpoint(path, model: JointModel, paths: dict | None = None) -> None:
    atomic_write(path, checkpoint_bytes(model, paths))


class CheckpointError(ValueError):
    """Truncated, corrupt, or incompatible checkpoint file."""


def load_checkpoint(path):
    """Returns (TrainConfig, LabelVocab, paths dict, {name: float64 array})."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: bad magic {blob[:4]!r}")
    (header_len,) = struct.unpack("<I", blob[4:8])
    header = json.loads(blob[8:8 + header_len].decode("utf-8"))
    if header.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported version {header.get('version')}")
    cfg = TrainConfig.from_dict(header["config"])
    vocab = LabelVocab.from_dict(header["vocab"])
    offset = 8 + header_len
    arrays = {}
    for entry in header["manifest"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = 4 * count
        chunk = blob[offset:offset + nbytes]
        if len(chunk) != nbytes:
            raise CheckpointError(f"{path}: truncated payload at {entry['name']!r}")
        arrays[entry["name"]] = np.frombuffer(chunk, dtype="<f4").astype(np.float64).reshape(shape)
        offset += nbytes
    if offset != len(blob):
        raise CheckpointError(f"{path}: {len(blob) - offset} trailing bytes")
    return cfg, vocab, header.get("paths", {}), arrays


def model_from_checkpoint(path, word_vectors=None, contextual_store=None) -> JointModel:
    """Rebuild a model from a checkpoint; pretrained-vector files are reloaded
    from the recorded paths unless passed in explicitly."""
    from .embeddings import load_contextual, load_word_vectors

    cfg, vocab, paths, arrays = load_checkpoint(path)
    if cfg.use_word and word_vectors is None:
        wv_path = paths.get("word_vectors")
        if not wv_path:
            raise CheckpointError(f"{path}: word channel enabled but no word_vectors path recorded")
        word_vectors = load_word_vectors(wv_path, cfg.word_dim, word_vector_rng(cfg.seed))
    if cfg.use_contextual and contextual_store is None:
        cv_path = paths.get("contextual_vectors")
        if not cv_path:
            raise CheckpointError(f"{path}: contextual channel enabled but no vectors path recorded")
        contextual_store = load_contextual(cv_path, cfg.contextual_dim)
    model = JointModel(cfg, vocab, word_vectors, contextual_store, rng=init_rng(cfg.seed))
    model.load_state(arrays)
    return model


# ---------------------------------------------------------------------------
# prediction
# ---------------------------------------------------------------------------


def predict_from_output(out, feats: SentenceFeatures, vocab: LabelVocab) -> EventPrediction:
    ev = EventPrediction(sentence_id=feats.sentence.id, triggers=list(out.candidates))
    no_role = vocab.role_index("NoRole")
    for i, trig in enumerate(out.candidates):
        if feats.n_entities == 0:
            break
        role_idx = np.argmax(out.role_probs[i].data, axis=-1)
        for j, ent in enumerate(feats.sentence.entities):
            r = int(role_idx[j])
            if r == no_role:
                continue
            ev.arguments.append(
                ArgumentPrediction(
                    trigger_span=trig.span,
                    subtype=trig.subtype,
                    entity_id=ent.id,
                    entity_span=ent.span,
                    role=vocab.roles[r],
                )
            )
    return ev


def predict_features(model: JointModel, feats_list, threads: int = 1) -> list:
    """Predicted-mode decode for featurized sentences; forward passes are
    tape-free and parameters are only read, so they can fan out to threads."""

    def run(feats):
        with T.no_grad():
            out = model.forward(feats, train=False, candidate_mode="predicted")
        return predict_from_output(out, feats, model.vocab)

    if threads > 1 and len(feats_list) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run, feats_list))
    return [run(f) for f in feats_list]


def featurize_corpus(sentences, vocab, cfg, word_vectors=None, contextual_store=None):
    return [
        featurize(normalize_length(s, cfg.max_len), vocab, cfg, word_vectors, contextual_store)
        for s in sentences
    ]


def predict(checkpoint_path, sentences, word_vectors=None, contextual_store=None,
            threads: int = 1) -> list:
    """Load a checkpoint and decode events for a corpus."""
    model = model_from_checkpoint(checkpoint_path, word_vectors, contextual_store)
    feats = featurize_corpus(sentences, model.vocab, model.cfg,
                             model.word_vectors, model.contextual_store)
    return predict_features(model, feats, threads=threads)


# ---------------------------------------------------------------------------
# training loop
# ---------------------------------------------------------------------------


@dataclass
class TrainResult:
    model: JointModel
    vocab: LabelVocab
    metrics: list = field(default_factory=list)  # one dict per epoch
    best_epoch: int = -1
    best_metric: float = -1.0


def _epoch_metrics(model, feats_list, sentences, threads=1):
    preds = predict_features(model, feats_list, threads=threads)
    gold = gold_events(sentences)
    return {
        "trigger": score_triggers(preds, gold),
        "arg_id": score_arguments(preds, gold, mode="identification"),
        "role": score_arguments(preds, gold, mode="role"),
    }


def train(train_sentences, dev_sentences, cfg: TrainConfig,
          word_vectors=None, contextual_store=None, vocab: LabelVocab | None = None,
          metrics_path=None, checkpoint_path=None, checkpoint_paths: dict | None = None,
          log=None) -> TrainResult:
    """Teacher-forced minibatch training with per-epoch dev evaluation.

    Keeps the parameters from the epoch with the best dev argument-role F1
    (trigger F1 when the corpus has no argument annotations) and stops early
    after ``cfg.patience`` epochs without improvement. The metrics log is
    one JSON object per epoch; with ``metrics_path`` it is streamed to a
    temp file and atomically renamed at the end.
    """
    cfg.validate()
    if not train_sentences:
        raise TrainingError("empty training corpus")
    if vocab is None:
        vocab = LabelVocab.from_corpus(train_sentences)
    if dev_sentences is None:
        dev_sentences = train_sentences

    norm_dev = [normalize_length(s, cfg.max_len) for s in dev_sentences]
    train_feats = featurize_corpus(train_sentences, vocab, cfg, word_vectors, contextual_store)
    dev_feats = [featurize(s, vocab, cfg, word_vectors, contextual_store) for s in norm_dev]

    model = JointModel(cfg, vocab, word_vectors, contextual_store, rng=init_rng(cfg.seed))
    optimizer = Adam(model.parameters(), lr=cfg.lr, beta1=cfg.beta1,
                     beta2=cfg.beta2, eps=cfg.adam_eps)
    shuffle_rng = rng_for(cfg.seed, _RNG_SHUFFLE)
    # selection metric: dev role F1 unless the dev corpus has no gold arguments
    has_args = any(s.arguments for s in norm_dev)
    select_key = "role" if has_args else "trigger"

    result = TrainResult(model=model, vocab=vocab)
    best_state = None
    stale = 0
    metrics_lines = []

    for epoch in range(1, cfg.epochs + 1):
        order = shuffle_rng.permutation(len(train_feats))
        epoch_loss = 0.0
        n_batches = 0
        for start in range(0, len(order), cfg.batch_size):
            batch_idx = order[start:start + cfg.batch_size]
            T.new_tape()
            model.zero_grad()
            outputs = []
            batch_feats = []
            for pos, idx in enumerate(batch_idx):
                feats = train_feats[idx]
                drop_rng = rng_for(cfg.seed, _RNG_DROPOUT, epoch, start + pos)
                outputs.append(model.forward(feats, train=True, dropout_rng=drop_rng,
                                             candidate_mode="gold"))
                batch_feats.append(feats)
            loss = joint_loss(outputs, batch_feats, vocab, cfg, model.parameters())
            loss_val = loss.item()
            if not np.isfinite(loss_val):
                raise TrainingError(f"non-finite loss at epoch {epoch}")
            T.backward(loss, leaves=model.parameters())
            optimizer.step()
            epoch_loss += loss_val
            n_batches += 1

        scores = _epoch_metrics(model, dev_feats, norm_dev, threads=cfg.threads)
        metric = scores[select_key].f1
        line = {
            "epoch": epoch,
            "split": "dev",
            "loss": epoch_loss / max(n_batches, 1),
            "trigger": scores["trigger"].to_dict(),
            "arg_id": scores["arg_id"].to_dict(),
            "role": scores["role"].to_dict(),
        }
        metrics_lines.append(line)
        if log is not None:
            log(f"epoch {epoch}: loss={line['loss']:.4f} "
                f"trigger_f1={scores['trigger'].f1:.4f} role_f1={scores['role'].f1:.4f}")

        if metric > result.best_metric:
            result.best_metric = metric
            result.best_epoch = epoch
            best_state = {p.name: p.data.copy() for p in model.parameters()}
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break

    if best_state is not None:
        model.load_state(best_state)
    result.metrics = metrics_lines
    if metrics_path:
        body = "".join(json.dumps(line, sort_keys=True) + "\n" for line in metrics_lines)
        atomic_write(metrics_path, body.encode("utf-8"))
    if checkpoint_path:
        save_checkpoint(checkpoint_path, model, paths=checkpoint_paths)
    return result
