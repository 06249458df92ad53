"""Joint event extraction along shortest dependency paths.

Trigger tagging over a Bi-LSTM encoder, per-pair convolution restricted to
the shortest dependency path between trigger and argument candidates, and a
path-length-indexed graph convolution with self-attention over argument
candidates, trained jointly with Adam on a reverse-mode tape engine.
"""

from .config import RunConfig, TrainConfig
from .corpus import (ArgumentLink, EntityMention, LabelVocab, Sentence, Token,
                     TriggerMention, decode_bio, encode_bio, entity_multihot,
                     load_corpus, normalize_length, save_corpus)
from .estimator import JointEventExtractor
from .evaluation import (EventPrediction, ScoreReport, distance_bin_report,
                         gold_events, score_arguments, score_triggers,
                         split_one_vs_many)
from .graph import (DepGraph, SdpResult, bfs_all_pairs, compute_argument_sdp_l,
                    compute_sdp, decompose_sdp_l, dep_graph_from_sentence)
from .model import JointModel, featurize
from .training import (Adam, joint_loss, load_checkpoint, predict,
                       save_checkpoint, train)

__version__ = "0.1.0"

__all__ = [
    "Adam", "ArgumentLink", "DepGraph", "EntityMention", "EventPrediction",
    "JointEventExtractor", "JointModel", "LabelVocab", "RunConfig",
    "ScoreReport", "SdpResult", "Sentence", "Token", "TrainConfig",
    "TriggerMention", "bfs_all_pairs", "compute_argument_sdp_l", "compute_sdp",
    "decode_bio", "decompose_sdp_l", "dep_graph_from_sentence",
    "distance_bin_report", "encode_bio", "entity_multihot", "featurize",
    "gold_events", "joint_loss", "load_checkpoint", "load_corpus",
    "normalize_length", "predict", "save_checkpoint", "save_corpus",
    "score_arguments", "score_triggers", "split_one_vs_many", "train",
]
