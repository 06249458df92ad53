"""Scikit-learn style front door: fit on a corpus of annotated sentences,
predict event structures, compose with the usual get_params/set_params
machinery."""

from __future__ import annotations

import dataclasses

from sklearn.base import BaseEstimator

from . import training
from .config import TrainConfig
from .corpus import LabelVocab, Sentence
from .embeddings import load_contextual, load_word_vectors


def check_corpus(sentences) -> list:
    """Light input validation: a corpus is a non-string iterable of Sentence."""
    if isinstance(sentences, (str, bytes)):
        raise TypeError("expected an iterable of Sentence, got a string (load the corpus first)")
    out = list(sentences)
    for s in out:
        if not isinstance(s, Sentence):
            raise TypeError(f"expected Sentence, got {type(s).__name__}")
    return out


class JointEventExtractor(BaseEstimator):
    """Joint trigger and argument-role extractor.

    Parameters
    ----------
    config: TrainConfig, optional
        Model widths, ablation switches, and optimizer settings; defaults
        follow the standard hyperparameter table.
    word_vectors: str, optional
        Path to a text word-vector file (required when the word channel is on).
    contextual_vectors: str, optional
        Path to a JSONL file of precomputed per-token contextual vectors
        (required when the contextual channel is on).
    """

    def __init__(self, config: TrainConfig | None = None,
                 word_vectors: str | None = None,
                 contextual_vectors: str | None = None):
        self.config = config
        self.word_vectors = word_vectors
        self.contextual_vectors = contextual_vectors

    def _resolved_config(self) -> TrainConfig:
        cfg = self.config if self.config is not None else TrainConfig()
        return dataclasses.replace(cfg)

    def _load_resources(self, cfg: TrainConfig):
        wv = None
        if cfg.use_word:
            if not self.word_vectors:
                raise ValueError("word channel enabled but word_vectors path not set")
            wv = load_word_vectors(self.word_vectors, cfg.word_dim,
                                   training.word_vector_rng(cfg.seed))
        ctx = None
        if cfg.use_contextual:
            if not self.contextual_vectors:
                raise ValueError("contextual channel enabled but contextual_vectors path not set")
            ctx = load_contextual(self.contextual_vectors, cfg.contextual_dim)
        return wv, ctx

    def fit(self, sentences, dev=None, vocab: LabelVocab | None = None, log=None):
        sentences = check_corpus(sentences)
        dev = check_corpus(dev) if dev is not None else None
        cfg = self._resolved_config()
        wv, ctx = self._load_resources(cfg)
        result = training.train(sentences, dev, cfg, word_vectors=wv,
                                contextual_store=ctx, vocab=vocab, log=log)
        self.model_ = result.model
        self.vocab_ = result.vocab
        self.metrics_ = result.metrics
        self.best_epoch_ = result.best_epoch
        return self

    def predict(self, sentences) -> list:
        """Decoded EventPrediction per sentence, in input order."""
        if not hasattr(self, "model_"):
            raise RuntimeError("predict before fit (or load)")
        sentences = check_corpus(sentences)
        model = self.model_
        feats = training.featurize_corpus(sentences, model.vocab, model.cfg,
                                          model.word_vectors, model.contextual_store)
        return training.predict_features(model, feats, threads=model.cfg.threads)

    def save(self, path) -> None:
        training.save_checkpoint(path, self.model_, paths={
            "word_vectors": self.word_vectors or "",
            "contextual_vectors": self.contextual_vectors or "",
        })

    @classmethod
    def load(cls, path) -> "JointEventExtractor":
        model = training.model_from_checkpoint(path)
        _, _, paths, _ = training.load_checkpoint(path)
        est = cls(config=model.cfg,
                  word_vectors=paths.get("word_vectors") or None,
                  contextual_vectors=paths.get("contextual_vectors") or None)
        est.model_ = model
        est.vocab_ = model.vocab
        est.metrics_ = []
        est.best_epoch_ = -1
        return est
