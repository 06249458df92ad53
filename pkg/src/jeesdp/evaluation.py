"""ACE-style scoring: trigger and argument P/R/F1, single- vs multi-event
splits, and distance-binned role reports.

A trigger is correct when its span offsets and subtype match a reference; an
argument is correctly identified when its hosting event subtype and its own
offsets match a reference argument, and correctly classified when the role
matches too. Matching is greedy one-to-one in file order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .corpus import Sentence, TriggerMention


class EvaluationError(ValueError):
    """Prediction/gold sets that cannot be aligned."""


@dataclass(frozen=True)
class ArgumentPrediction:
    trigger_span: tuple  # (start, end) of the hosting trigger
    subtype: str  # hosting event subtype
    entity_id: str
    entity_span: tuple
    role: str


@dataclass
class EventPrediction:
    """Decoded triggers plus per-trigger argument roles for one sentence."""

    sentence_id: str
    triggers: list = field(default_factory=list)
    arguments: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "id": self.sentence_id,
            "triggers": [
                {"start": t.start, "end": t.end, "subtype": t.subtype} for t in self.triggers
            ],
            "arguments": [
                {
                    "trigger_start": a.trigger_span[0],
                    "trigger_end": a.trigger_span[1],
                    "subtype": a.subtype,
                    "entity_id": a.entity_id,
                    "entity_start": a.entity_span[0],
                    "entity_end": a.entity_span[1],
                    "role": a.role,
                }
                for a in self.arguments
            ],
        }


def gold_events(sentences) -> list:
    """Recast gold annotations into the prediction shape for scoring."""
    out = []
    for s in sentences:
        ev = EventPrediction(sentence_id=s.id, triggers=list(s.triggers))
        for a in s.arguments:
            trig = s.triggers[a.trigger_idx]
            ent = s.entity_by_id(a.entity_id)
            ev.arguments.append(
                ArgumentPrediction(
                    trigger_span=trig.span,
                    subtype=trig.subtype,
                    entity_id=ent.id,
                    entity_span=ent.span,
                    role=a.role,
                )
            )
        out.append(ev)
    return out


@dataclass(frozen=True)
class ScoreReport:
    predicted: int
    gold: int
    correct: int

    def __post_init__(self):
        if self.correct > min(self.predicted, self.gold):
            raise EvaluationError(
                f"correct={self.correct} exceeds min(predicted={self.predicted}, gold={self.gold})"
            )

    @property
    def precision(self) -> float:
        return self.correct / self.predicted if self.predicted else 0.0

    @property
    def recall(self) -> float:
        return self.correct / self.gold if self.gold else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2.0 * p * r / (p + r) if p + r > 0.0 else 0.0

    def to_dict(self) -> dict:
        return {
            "predicted": self.predicted,
            "gold": self.gold,
            "correct": self.correct,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }


def _align(pred, gold):
    pred_by_id = {p.sentence_id: p for p in pred}
    gold_by_id = {g.sentence_id: g for g in gold}
    if len(pred_by_id) != len(pred) or len(gold_by_id) != len(gold):
        raise EvaluationError("duplicate sentence ids in prediction or gold set")
    if set(pred_by_id) != set(gold_by_id):
        missing = set(gold_by_id) ^ set(pred_by_id)
        raise EvaluationError(f"prediction/gold id mismatch: {sorted(missing)[:5]}")
    return [(pred_by_id[i], gold_by_id[i]) for i in sorted(pred_by_id)]


def _greedy_count(pred_items, gold_items, matches) -> int:
    used = [False] * len(gold_items)
    correct = 0
    for p in pred_items:
        for k, g in enumerate(gold_items):
            if not used[k] and matches(p, g):
                used[k] = True
                correct += 1
                break
    return correct


def score_triggers(pred, gold) -> ScoreReport:
    n_pred = n_gold = n_correct = 0
    for p_ev, g_ev in _align(pred, gold):
        n_pred += len(p_ev.triggers)
        n_gold += len(g_ev.triggers)
        n_correct += _greedy_count(
            p_ev.triggers, g_ev.triggers,
            lambda p, g: p.span == g.span and p.subtype == g.subtype,
        )
    return ScoreReport(predicted=n_pred, gold=n_gold, correct=n_correct)


def score_arguments(pred, gold, mode: str = "role") -> ScoreReport:
    if mode not in ("identification", "role"):
        raise ValueError(f"unknown argument scoring mode {mode!r}")

    def matches(p, g):
        if p.subtype != g.subtype or p.entity_span != g.entity_span:
            return False
        return mode == "identification" or p.role == g.role

    n_pred = n_gold = n_correct = 0
    for p_ev, g_ev in _align(pred, gold):
        n_pred += len(p_ev.arguments)
        n_gold += len(g_ev.arguments)
        n_correct += _greedy_count(p_ev.arguments, g_ev.arguments, matches)
    return ScoreReport(predicted=n_pred, gold=n_gold, correct=n_correct)


def split_one_vs_many(sentences):
    """Partition by gold trigger count: exactly one, two or more, and a
    separately reported zero-trigger bucket."""
    one, many, excluded = [], [], []
    for s in sentences:
        n = len(s.triggers)
        if n == 1:
            one.append(s)
        elif n >= 2:
            many.append(s)
        else:
            excluded.append(s)
    return one, many, excluded


def sequential_distance(trigger_span, entity_span) -> int:
    return abs(trigger_span[0] - entity_span[0])


def distance_bin_report(pred, gold, bin_width: int = 3) -> list:
    """Role-mode scores per sequential-distance bin.

    Arguments land in the bin of |trigger start - argument start|; bins are
    [1..w], [w+1..2w], ... with distance 0 folded into the first bin. Each
    bin is scored independently. Returns (label, ScoreReport) pairs for bins
    up to the largest occupied one.
    """

    def bin_of(a) -> int:
        d = sequential_distance(a.trigger_span, a.entity_span)
        return max(0, (d - 1) // bin_width)

    pairs = _align(pred, gold)
    n_bins = 0
    for p_ev, g_ev in pairs:
        for a in list(p_ev.arguments) + list(g_ev.arguments):
            n_bins = max(n_bins, bin_of(a) + 1)

    out = []
    for b in range(n_bins):
        bin_pred = [
            EventPrediction(p.sentence_id, arguments=[a for a in p.arguments if bin_of(a) == b])
            for p, _ in pairs
        ]
        bin_gold = [
            EventPrediction(g.sentence_id, arguments=[a for a in g.arguments if bin_of(a) == b])
            for _, g in pairs
        ]
        label = f"{b * bin_width + 1}-{(b + 1) * bin_width}"
        out.append((label, score_arguments(bin_pred, bin_gold, mode="role")))
    return out


# ---------------------------------------------------------------------------
# report formatting
# ---------------------------------------------------------------------------


def format_report_table(rows) -> str:
    """Aligned plain-text table from (label, ScoreReport) pairs."""
    header = f"{'stage':<28} {'P':>8} {'R':>8} {'F1':>8} {'pred':>6} {'gold':>6} {'corr':>6}"
    lines = [header, "-" * len(header)]
    for label, rep in rows:
        lines.append(
            f"{label:<28} {rep.precision:>8.4f} {rep.recall:>8.4f} {rep.f1:>8.4f} "
            f"{rep.predicted:>6} {rep.gold:>6} {rep.correct:>6}"
        )
    return "\n".join(lines)


def report_json(rows) -> str:
    return json.dumps({label: rep.to_dict() for label, rep in rows}, indent=2, sort_keys=True)


def distance_report_csv(bins) -> str:
    lines = ["bin,precision,recall,f1,support"]
    for label, rep in bins:
        lines.append(f"{label},{rep.precision:.6f},{rep.recall:.6f},{rep.f1:.6f},{rep.gold}")
    return "\n".join(lines) + "\n"
