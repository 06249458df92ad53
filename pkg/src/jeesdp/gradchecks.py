"""Seeded micro-model gradient checks for every network component.

Each check pushes a random input (or one of the component's parameters)
through the component, reads out a scalar via a fixed random projection, and
compares the tape gradient against central differences. Biases and the
attention weights are nudged away from zero so relu/max kinks cannot sit
exactly at the evaluation point.
"""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .argument import (Dmcnn, GcnSdp, OutputHead, apply_sdp_mask,
                       build_pair_input, gcn_layer, pair_feature)
from .config import TrainConfig
from .corpus import ArgumentLink, EntityMention, LabelVocab, Sentence, Token, TriggerMention
from .embeddings import EmbeddingTable, pf_indices
from .model import JointModel, featurize
from .training import joint_loss
from .trigger import BiLstm, TriggerHead

TOLERANCE = 1e-5
EPS = 1e-6

TRIGGER_COMPONENTS = ("bilstm", "trigger_head")
ARGUMENT_COMPONENTS = ("pair_input", "sdp_mask", "dmcnn", "gate", "gcn_layer",
                       "attention_aggregate", "role_head")
LOSS_COMPONENTS = ("joint_loss",)
ALL_COMPONENTS = TRIGGER_COMPONENTS + ARGUMENT_COMPONENTS + LOSS_COMPONENTS


def _readout(rng, shape):
    r = T.constant(rng.normal(size=shape))
    return lambda t: T.sum_axis(T.mul(t, r))


def _check_params(f, tensors, eps=EPS) -> float:
    """Max grad_check error varying each tensor in turn."""
    worst = 0.0
    for t in tensors:
        worst = max(worst, T.grad_check(f, t, eps=eps))
    return worst


def _micro_vocab() -> LabelVocab:
    return LabelVocab(
        trigger_subtypes=("Alpha", "Beta"),
        roles=("NoRole", "Left", "Right"),
        entity_types=("Thing", "Place"),
        pos_tags=("N", "V"),
        dep_rels=("dep", "mod"),
    )


def _micro_config() -> TrainConfig:
    return TrainConfig(
        dropout=0.0, l2=1e-4, seed=0, epochs=1, batch_size=2,
        use_contextual=False, use_word=False,
        identification_head=True,
        pos_dim=2, dep_dim=2, entity_proj_dim=2, pf_dim=2,
        arg_type_dim=2, sdp_l_dim=2,
        lstm_hidden=2, trigger_hidden=3, ident_hidden=3, role_hidden=3,
        n_filters=2, window=3, max_len=6, max_sdp_len=3,
    )


def _micro_sentence() -> Sentence:
    # chain-ish parse over 6 tokens, two triggers, three entities
    heads = [1, 2, -1, 2, 3, 4]
    tokens = tuple(
        Token(text=f"w{i}", pos="N" if i % 2 else "V", dep_head=h, dep_rel="dep" if i % 2 else "mod")
        for i, h in enumerate(heads)
    )
    return Sentence(
        id="micro",
        tokens=tokens,
        entities=(
            EntityMention("e0", 0, 1, "Thing"),
            EntityMention("e1", 3, 4, "Place"),
            EntityMention("e2", 5, 6, "Thing"),
        ),
        triggers=(TriggerMention(1, 2, "Alpha"), TriggerMention(4, 5, "Beta")),
        arguments=(
            ArgumentLink(0, "e0", "Left"),
            ArgumentLink(0, "e1", "Right"),
            ArgumentLink(1, "e2", "Left"),
        ),
    )


def _nudge_biases(params, rng) -> None:
    for p in params:
        if p.kind == "bias":
            p.tensor.data += rng.uniform(0.05, 0.2, size=p.shape) * rng.choice([-1.0, 1.0], size=p.shape)


def check_bilstm(seed: int = 0) -> float:
    rng = np.random.default_rng([seed, 10])
    net = BiLstm(3, 2, rng, name="gc.bilstm")
    _nudge_biases(net.parameters(), rng)
    x = T.Tensor(rng.normal(size=(4, 3)), requires_grad=True)
    pad = T.constant(np.ones((4, 1)))
    read = _readout(rng, (4, 4))

    def f(_):
        return read(net.forward(x, pad))

    return _check_params(f, [x] + [p.tensor for p in net.parameters()])


def check_trigger_head(seed: int = 0) -> float:
    rng = np.random.default_rng([seed, 11])
    head = TriggerHead(4, 3, 5, rng, name="gc.trigger")
    _nudge_biases(head.parameters(), rng)
    p = T.Tensor(rng.normal(size=(4, 4)), requires_grad=True)
    read = _readout(rng, (4, 5))

    def f(_):
        return read(head.forward(p))

    return _check_params(f, [p] + [q.tensor for q in head.parameters()])


def check_pair_input(seed: int = 0) -> float:
    rng = np.random.default_rng([seed, 12])
    length = 5
    pf = EmbeddingTable("gc.pf", 2 * length - 1, 2, rng, pad=False)
    p = T.Tensor(rng.normal(size=(length, 4)), requires_grad=True)
    y = T.Tensor(rng.normal(size=(length, 3)), requires_grad=True)
    pad = T.constant(np.array([1.0, 1.0, 1.0, 1.0, 0.0]).reshape(-1, 1))
    read = _readout(rng, (length, 4 + 3 + 2 + 2))

    def f(_):
        return read(build_pair_input(p, y, pf, (1, 2), (3, 4), pad, pf_indices))

    return _check_params(f, [p, y, pf.param.tensor])


def check_sdp_mask(seed: int = 0) -> float:
    rng = np.random.default_rng([seed, 13])
    h = T.Tensor(rng.normal(size=(5, 4)), requires_grad=True)
    mask = np.array([1, 0, 1, 1, 0])
    read = _readout(rng, (5, 4))

    def f(_):
        return read(apply_sdp_mask(h, mask))

    return _check_params(f, [h])


def check_dmcnn(seed: int = 0) -> float:
    rng = np.random.default_rng([seed, 14])
    net = Dmcnn(4, 2, 3, rng, name="gc.dmcnn")
    _nudge_biases(net.parameters(), rng)
    h = T.Tensor(rng.normal(size=(6, 4)), requires_grad=True)
    read = _readout(rng, (6,))

    def f(_):
        return read(net.forward(h, 1, 4))

    # also exercise a degenerate split (coinciding boundaries -> relu(bias))
    def f_degenerate(_):
        return read(net.forward(h, 2, 2))

    err = _check_params(f, [h] + [p.tensor for p in net.parameters()])
    err = max(err, _check_params(f_degenerate, [h, net.b.tensor]))
    return err


def check_gate(seed: int = 0) -> float:
    rng = np.random.default_rng([seed, 15])
    gcn = GcnSdp(4, 2, rng, name="gc.gate")
    _nudge_biases(gcn.parameters(), rng)
    o = T.Tensor(rng.normal(size=(3, 4)), requires_grad=True)
    read = _readout(rng, (3,))

    def f(_):
        return read(gcn.gate(o, 1))

    return _check_params(f, [o, gcn.gate_w.tensor, gcn.gate_b.tensor])


def check_gcn_layer(seed: int = 0) -> float:
    rng = np.random.default_rng([seed, 16])
    m = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]], dtype=np.float64)
    o = T.Tensor(rng.normal(size=(3, 4)), requires_grad=True)
    g = T.Tensor(rng.uniform(0.2, 0.8, size=3), requires_grad=True)
    read = _readout(rng, (3, 4))

    def f(_):
        return read(gcn_layer(m, g, o))

    return _check_params(f, [o, g])


def check_attention_aggregate(seed: int = 0) -> float:
    rng = np.random.default_rng([seed, 17])
    gcn = GcnSdp(4, 2, rng, name="gc.att")
    gcn.z.tensor.data = rng.normal(scale=0.5, size=gcn.z.shape)
    _nudge_biases(gcn.parameters(), rng)
    stack = [T.Tensor(rng.normal(size=(3, 4)), requires_grad=True) for _ in range(3)]
    read = _readout(rng, (3, 4))

    def f(_):
        agg, _ = gcn.attention_aggregate(stack)
        return read(agg)

    return _check_params(f, stack + [gcn.att_w.tensor, gcn.att_b.tensor, gcn.z.tensor])


def check_role_head(seed: int = 0) -> float:
    rng = np.random.default_rng([seed, 18])
    head = OutputHead(6, 3, 4, rng, name="gc.role")
    _nudge_biases(head.parameters(), rng)
    rows = T.Tensor(rng.normal(size=(3, 6)), requires_grad=True)
    read = _readout(rng, (3, 4))

    def f(_):
        return read(head.forward(rows))

    return _check_params(f, [rows] + [p.tensor for p in head.parameters()])


def check_joint_loss(seed: int = 0) -> float:
    """End-to-end gradient of the joint loss on a teacher-forced micro model,
    varied over every trainable parameter."""
    rng = np.random.default_rng([seed, 19])
    cfg = _micro_config()
    vocab = _micro_vocab()
    sentence = _micro_sentence()
    model = JointModel(cfg, vocab, rng=np.random.default_rng([seed, 20]))
    _nudge_biases(model.parameters(), rng)
    model.gcn.z.tensor.data = rng.normal(scale=0.3, size=model.gcn.z.shape)
    feats = featurize(sentence, vocab, cfg)

    def f(_):
        out = model.forward(feats, train=False, candidate_mode="gold")
        return joint_loss([out], [feats], vocab, cfg, model.parameters())

    return _check_params(f, [p.tensor for p in model.parameters()])


CHECKS = {
    "bilstm": check_bilstm,
    "trigger_head": check_trigger_head,
    "pair_input": check_pair_input,
    "sdp_mask": check_sdp_mask,
    "dmcnn": check_dmcnn,
    "gate": check_gate,
    "gcn_layer": check_gcn_layer,
    "attention_aggregate": check_attention_aggregate,
    "role_head": check_role_head,
    "joint_loss": check_joint_loss,
}


def run_gradchecks(module: str = "all", seed: int = 0):
    """Run the selected component checks; returns [(name, max relative error)]."""
    if module == "all":
        names = ALL_COMPONENTS
    elif module == "trigger":
        names = TRIGGER_COMPONENTS
    elif module == "argument":
        names = ARGUMENT_COMPONENTS
    elif module == "loss":
        names = LOSS_COMPONENTS
    else:
        raise ValueError(f"unknown gradcheck module {module!r}")
    return [(name, CHECKS[name](seed)) for name in names]
