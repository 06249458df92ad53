"""Training/run configuration with defaults matching the reference setup.

Run configs are flat ``key=value`` text files with ``#`` comments; unknown
keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field


class ConfigError(ValueError):
    """Bad key, bad value, or missing required entry in a run config."""


@dataclass
class TrainConfig:
    # optimization
    batch_size: int = 32
    dropout: float = 0.5
    l2: float = 1e-4
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    epochs: int = 100
    patience: int = 10
    seed: int = 1
    threads: int = 1
    # ablation switches
    sdp_mask: bool = True
    gcn: bool = True
    attention: bool = True
    identification_head: bool = False
    trigger_vector: str = "soft"  # feed softmax scores ("soft") or argmax one-hots ("hard") downstream
    # embedding channels
    use_contextual: bool = True
    use_word: bool = True
    use_entity: bool = True
    use_pos: bool = True
    use_dep: bool = True
    entity_projection: bool = True
    # widths
    contextual_dim: int = 768
    word_dim: int = 300
    entity_proj_dim: int = 10
    pos_dim: int = 15
    dep_dim: int = 15
    pf_dim: int = 10
    arg_type_dim: int = 10
    sdp_l_dim: int = 10
    lstm_hidden: int = 64
    trigger_hidden: int = 256
    ident_hidden: int = 256
    role_hidden: int = 512
    n_filters: int = 50
    window: int = 3
    max_len: int = 50
    max_sdp_len: int = 10

    def validate(self) -> None:
        if self.trigger_vector not in ("soft", "hard"):
            raise ConfigError(f"trigger_vector must be 'soft' or 'hard', got {self.trigger_vector!r}")
        if not (0.0 <= self.dropout < 1.0):
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        if self.window < 1 or self.max_len < 1 or self.max_sdp_len < 0:
            raise ConfigError("window, max_len and max_sdp_len must be positive")
        if self.batch_size < 1 or self.epochs < 0:
            raise ConfigError("batch_size must be >= 1 and epochs >= 0")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        cfg = cls(**d)
        cfg.validate()
        return cfg


@dataclass
class RunConfig:
    """TrainConfig plus the file paths a CLI run needs."""

    train: TrainConfig = field(default_factory=TrainConfig)
    corpus: str = ""
    dev: str = ""
    test: str = ""
    word_vectors: str = ""
    contextual_vectors: str = ""
    checkpoint_out: str = "model.jsdp"
    metrics_out: str = "metrics.jsonl"

    PATH_KEYS = ("corpus", "dev", "test", "word_vectors", "contextual_vectors",
                 "checkpoint_out", "metrics_out")


def _coerce(key: str, raw: str, target_type):
    if target_type is bool:
        low = raw.lower()
        if low in ("1", "true", "on", "yes"):
            return True
        if low in ("0", "false", "off", "no"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    try:
        return target_type(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected {target_type.__name__}, got {raw!r}")


def parse_run_config(path) -> RunConfig:
    train_fields = {f.name: f.type for f in dataclasses.fields(TrainConfig)}
    type_map = {"int": int, "float": float, "bool": bool, "str": str}
    run = RunConfig()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {stripped!r}")
            key, _, raw = stripped.partition("=")
            key = key.strip()
            raw = raw.strip()
            if key in RunConfig.PATH_KEYS:
                setattr(run, key, raw)
            elif key in train_fields:
                ftype = type_map[train_fields[key]] if isinstance(train_fields[key], str) else train_fields[key]
                setattr(run.train, key, _coerce(key, raw, ftype))
            else:
                raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
    run.train.validate()
    return run
