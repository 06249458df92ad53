"""Full joint model: parameter registry, per-sentence feature precomputation,
and the end-to-end forward pass for both teacher-forced training and
predicted-candidate inference."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .argument import (Dmcnn, GcnSdp, OutputHead, apply_sdp_mask,
                       combine_pair_input, pair_feature)
from .config import TrainConfig
from .corpus import NO_ROLE, LabelVocab, Sentence, encode_bio, entity_multihot
from .embeddings import (EmbeddingTable, WordVectors, channel_dims,
                         contextual_for_sentence, input_width, pf_indices)
from .graph import (DepGraph, SdpResult, bfs_all_pairs, candidate_mask,
                    compute_argument_sdp_l, compute_sdp, decompose_sdp_l,
                    dep_graph_from_sentence)
from .trigger import BiLstm, TriggerHead, extract_trigger_candidates, glorot


@dataclass
class SentenceFeatures:
    """Everything about a sentence that does not depend on model weights."""

    sentence: Sentence
    pad_mask: np.ndarray  # (L,) float
    bio: np.ndarray  # (L,) gold label indices
    word_rows: np.ndarray | None
    pos_idx: np.ndarray
    dep_idx: np.ndarray
    multihot: np.ndarray
    contextual: np.ndarray | None
    graph: DepGraph
    entity_spans: list
    etype_idx: np.ndarray
    gold_spans: list
    gold_sdp: SdpResult
    adjacency: list
    role_matrix: np.ndarray  # (n_gold_triggers, n_e)
    ident_matrix: np.ndarray
    _bfs: tuple | None = field(default=None, repr=False)

    @property
    def n_entities(self) -> int:
        return len(self.entity_spans)

    def bfs(self):
        if self._bfs is None:
            self._bfs = bfs_all_pairs(self.graph)
        return self._bfs


def featurize(s: Sentence, vocab: LabelVocab, cfg: TrainConfig,
              word_vectors: WordVectors | None = None,
              contextual_store: dict | None = None) -> SentenceFeatures:
    length = cfg.max_len
    if len(s.tokens) != length:
        raise ValueError(
            f"sentence {s.id!r} has {len(s.tokens)} tokens; normalize_length({length}) first"
        )
    pad = np.asarray(s.pad_mask, dtype=np.float64)
    word_rows = None
    if cfg.use_word:
        if word_vectors is None:
            raise ValueError("word channel enabled but no word vectors loaded")
        word_rows = np.array(
            [word_vectors.row_index(t.text) if real else 0
             for t, real in zip(s.tokens, s.pad_mask)],
            dtype=np.intp,
        )
    pos_idx = np.array(
        [vocab.pos_index(t.pos) if real else -1 for t, real in zip(s.tokens, s.pad_mask)],
        dtype=np.intp,
    )
    dep_idx = np.array(
        [vocab.dep_index(t.dep_rel) if real else -1 for t, real in zip(s.tokens, s.pad_mask)],
        dtype=np.intp,
    )
    multihot = entity_multihot(s, vocab)
    contextual = None
    if cfg.use_contextual:
        if contextual_store is None:
            raise ValueError("contextual channel enabled but no contextual vectors loaded")
        contextual = contextual_for_sentence(contextual_store, s, length, cfg.contextual_dim)

    graph = dep_graph_from_sentence(s)
    entity_spans = [e.span for e in s.entities]
    etype_idx = np.array([vocab.etype_index(e.etype) for e in s.entities], dtype=np.intp)
    gold_spans = [t.span for t in s.triggers]

    e_rows = candidate_mask(entity_spans, length)
    t_rows = candidate_mask(gold_spans, length)
    bfs = bfs_all_pairs(graph)
    gold_sdp = compute_sdp(graph, t_rows, e_rows, bfs=bfs)
    arg_sdp_l = compute_argument_sdp_l(graph, e_rows, bfs=bfs)
    adjacency = decompose_sdp_l(arg_sdp_l, cfg.max_sdp_len)

    n_t, n_e = len(gold_spans), len(entity_spans)
    role_matrix = np.full((n_t, n_e), vocab.role_index(NO_ROLE), dtype=np.intp)
    ident_matrix = np.zeros((n_t, n_e), dtype=np.intp)
    ent_pos = {e.id: j for j, e in enumerate(s.entities)}
    for a in s.arguments:
        j = ent_pos[a.entity_id]
        role_matrix[a.trigger_idx, j] = vocab.role_index(a.role)
        ident_matrix[a.trigger_idx, j] = 1

    return SentenceFeatures(
        sentence=s,
        pad_mask=pad,
        bio=encode_bio(s, vocab),
        word_rows=word_rows,
        pos_idx=pos_idx,
        dep_idx=dep_idx,
        multihot=multihot,
        contextual=contextual,
        graph=graph,
        entity_spans=entity_spans,
        etype_idx=etype_idx,
        gold_spans=gold_spans,
        gold_sdp=gold_sdp,
        adjacency=adjacency,
        role_matrix=role_matrix,
        ident_matrix=ident_matrix,
        _bfs=bfs,
    )


@dataclass
class SentenceOutput:
    trigger_probs: T.Tensor  # (L, n_bio)
    candidates: list  # TriggerMention list driving the argument stage
    pair_features: list  # per candidate: (n_e, n_o) Tensor
    role_probs: list  # per candidate: (n_e, n_roles) Tensor
    ident_probs: list  # per candidate: (n_e, 2) Tensor, or empty
    attention_scores: list  # per candidate: (n_e, n_s+1) Tensor or None
    sdp_len: np.ndarray | None  # (n_candidates, n_e)


class JointModel:
    """All trainable state plus the sentence-level forward pass."""

    def __init__(self, cfg: TrainConfig, vocab: LabelVocab,
                 word_vectors: WordVectors | None = None,
                 contextual_store: dict | None = None,
                 rng: np.random.Generator | None = None):
        cfg.validate()
        if rng is None:
            rng = np.random.default_rng(cfg.seed)
        self.cfg = cfg
        self.vocab = vocab
        self.word_vectors = word_vectors
        self.contextual_store = contextual_store

        self.n_d = input_width(cfg, vocab)
        if self.n_d == 0:
            raise ValueError("no input channels enabled")
        self.n_h = 2 * cfg.lstm_hidden + vocab.n_bio + 2 * cfg.pf_dim
        self.n_o = 3 * cfg.n_filters + cfg.sdp_l_dim + cfg.arg_type_dim

        self.pos_table = EmbeddingTable("emb.pos", len(vocab.pos_tags), cfg.pos_dim, rng)
        self.dep_table = EmbeddingTable("emb.dep", len(vocab.dep_rels), cfg.dep_dim, rng)
        self.pf_table = EmbeddingTable("emb.pf", 2 * cfg.max_len - 1, cfg.pf_dim, rng, pad=False)
        self.sdp_l_table = EmbeddingTable("emb.sdp_len", cfg.max_len + 1, cfg.sdp_l_dim, rng, pad=False)
        self.arg_type_table = EmbeddingTable(
            "emb.arg_type", max(len(vocab.entity_types), 1), cfg.arg_type_dim, rng, pad=False
        )
        self.entity_proj = None
        if cfg.use_entity and cfg.entity_projection:
            self.entity_proj = T.Parameter(
                "emb.entity_proj", glorot(rng, len(vocab.entity_types), cfg.entity_proj_dim)
            )

        self.bilstm = BiLstm(self.n_d, cfg.lstm_hidden, rng)
        self.trigger_head = TriggerHead(2 * cfg.lstm_hidden, cfg.trigger_hidden, vocab.n_bio, rng)
        self.dmcnn = Dmcnn(self.n_h, cfg.n_filters, cfg.window, rng)
        self.gcn = GcnSdp(self.n_o, cfg.max_sdp_len, rng) if cfg.gcn else None
        head_in = 2 * self.n_o if cfg.gcn else self.n_o
        self.role_head = OutputHead(head_in, cfg.role_hidden, len(vocab.roles), rng, name="role")
        self.ident_head = None
        if cfg.identification_head:
            self.ident_head = OutputHead(head_in, cfg.ident_hidden, 2, rng, name="ident")

        self._registry = {}
        for p in self._collect_parameters():
            if p.name in self._registry:
                raise ValueError(f"duplicate parameter name {p.name!r}")
            self._registry[p.name] = p

    def _collect_parameters(self):
        params = [
            self.pos_table.param, self.dep_table.param, self.pf_table.param,
            self.sdp_l_table.param, self.arg_type_table.param,
        ]
        if self.entity_proj is not None:
            params.append(self.entity_proj)
        params += self.bilstm.parameters()
        params += self.trigger_head.parameters()
        params += self.dmcnn.parameters()
        if self.gcn is not None:
            params += self.gcn.parameters()
        params += self.role_head.parameters()
        if self.ident_head is not None:
            params += self.ident_head.parameters()
        return params

    def parameters(self) -> list:
        return list(self._registry.values())

    def parameter(self, name: str) -> T.Parameter:
        return self._registry[name]

    def zero_grad(self) -> None:
        for p in self._registry.values():
            p.zero_grad()

    def load_state(self, arrays: dict) -> None:
        for name, p in self._registry.items():
            if name not in arrays:
                raise ValueError(f"checkpoint missing parameter {name!r}")
            arr = np.asarray(arrays[name], dtype=np.float64)
            if arr.shape != p.shape:
                raise ValueError(
                    f"checkpoint/config width mismatch for {name!r}: "
                    f"{arr.shape} vs {p.shape}"
                )
            p.tensor.data = arr.copy()

    # ------------------------------------------------------------------
    # forward
    # ------------------------------------------------------------------

    def assemble_input(self, feats: SentenceFeatures, pad_col: T.Tensor) -> T.Tensor:
        """Concatenate the enabled channels into the L x n_d sentence matrix."""
        cfg = self.cfg
        channels = []
        if cfg.use_contextual:
            channels.append(T.constant(feats.contextual))
        if cfg.use_word:
            channels.append(self.word_vectors.lookup(feats.word_rows))
        if cfg.use_entity:
            multi = T.constant(feats.multihot)
            if self.entity_proj is not None:
                channels.append(T.matmul(multi, self.entity_proj.tensor))
            else:
                channels.append(multi)
        if cfg.use_pos:
            channels.append(self.pos_table.lookup(feats.pos_idx))
        if cfg.use_dep:
            channels.append(self.dep_table.lookup(feats.dep_idx))
        x = channels[0] if len(channels) == 1 else T.concat(channels, axis=-1)
        return T.mul(x, pad_col)

    def candidate_sdp(self, feats: SentenceFeatures, spans: list) -> SdpResult:
        """SDP tensors for an arbitrary candidate span set (predicted mode)."""
        t_rows = candidate_mask(spans, self.cfg.max_len)
        e_rows = candidate_mask(feats.entity_spans, self.cfg.max_len)
        paths, lengths = feats.bfs()
        return compute_sdp(feats.graph, t_rows, e_rows, bfs=(paths, lengths))

    def forward(self, feats: SentenceFeatures, train: bool = False,
                dropout_rng: np.random.Generator | None = None,
                candidate_mode: str = "gold") -> SentenceOutput:
        cfg = self.cfg
        pad_col = T.constant(feats.pad_mask.reshape(-1, 1))
        x = self.assemble_input(feats, pad_col)
        x = T.dropout(x, cfg.dropout, dropout_rng, train)
        p = self.bilstm.forward(x, pad_col)
        y = self.trigger_head.forward(p, cfg.dropout, dropout_rng, train)

        candidates = extract_trigger_candidates(
            y, self.vocab, feats.pad_mask,
            gold=feats.sentence.triggers, mode=candidate_mode,
        )
        out = SentenceOutput(
            trigger_probs=y, candidates=candidates, pair_features=[],
            role_probs=[], ident_probs=[], attention_scores=[], sdp_len=None,
        )
        if not candidates or feats.n_entities == 0:
            return out

        if candidate_mode == "gold":
            sdp = feats.gold_sdp
        else:
            sdp = self.candidate_sdp(feats, [t.span for t in candidates])
        out.sdp_len = sdp.sdp_len

        if cfg.trigger_vector == "hard":
            hard = np.zeros_like(y.data)
            hard[np.arange(hard.shape[0]), np.argmax(y.data, axis=-1)] = 1.0
            y_pairs = T.constant(hard)
        else:
            y_pairs = y

        length = cfg.max_len
        arg_pf = [self.pf_table.lookup(pf_indices(span, length)) for span in feats.entity_spans]
        for i, trig in enumerate(candidates):
            trig_pf = self.pf_table.lookup(pf_indices(trig.span, length))
            rows = []
            for j, espan in enumerate(feats.entity_spans):
                h = combine_pair_input(p, y_pairs, trig_pf, arg_pf[j], pad_col)
                if cfg.sdp_mask:
                    h = apply_sdp_mask(h, sdp.sdp[i, j])
                pooled = self.dmcnn.forward(h, trig.start, espan[0])
                feat = pair_feature(pooled, sdp.sdp_len[i, j], feats.etype_idx[j],
                                    self.sdp_l_table, self.arg_type_table)
                rows.append(T.reshape(feat, (1, self.n_o)))
            o_i = rows[0] if len(rows) == 1 else T.concat(rows, axis=0)
            out.pair_features.append(o_i)
            if self.gcn is not None:
                agg, scores = self.gcn.forward(o_i, feats.adjacency, attention=cfg.attention)
                head_in = T.concat([o_i, agg], axis=-1)
                out.attention_scores.append(scores)
            else:
                head_in = o_i
                out.attention_scores.append(None)
            out.role_probs.append(self.role_head.forward(head_in))
            if self.ident_head is not None:
                out.ident_probs.append(self.ident_head.forward(head_in))
        return out
