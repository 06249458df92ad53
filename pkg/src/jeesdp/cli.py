"""Command line surface: train, eval, predict, inspect-sdp, gradcheck.

Exit codes: 0 success, 1 config/checkpoint error, 2 data error, 3 numeric
failure, 4 gradient-check failure. ``JEESDP_SEED`` overrides the config
seed for every command that trains or rebuilds a model.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import training
from .config import ConfigError, parse_run_config
from .corpus import CorpusError, load_corpus, normalize_length
from .embeddings import EmbeddingError, load_contextual, load_word_vectors
from .evaluation import (distance_bin_report, distance_report_csv,
                         format_report_table, gold_events, report_json,
                         score_arguments, score_triggers, split_one_vs_many)
from .gradchecks import TOLERANCE, run_gradchecks
from .graph import candidate_mask, compute_argument_sdp_l, compute_sdp, dep_graph_from_sentence
from .training import (CheckpointError, TrainingError, load_checkpoint,
                       model_from_checkpoint)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3
EXIT_GRADCHECK = 4


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _apply_seed_overrides(cfg, cli_seed):
    env = os.environ.get("JEESDP_SEED")
    if env is not None:
        try:
            cfg.seed = int(env)
        except ValueError:
            raise ConfigError(f"JEESDP_SEED must be an integer, got {env!r}")
    if cli_seed is not None:
        cfg.seed = cli_seed


def cmd_train(args) -> int:
    try:
        run = parse_run_config(args.config)
        _apply_seed_overrides(run.train, args.seed)
    except (ConfigError, OSError) as e:
        return _fail(EXIT_CONFIG, str(e))
    try:
        sentences, vocab = load_corpus(run.corpus)
        dev = None
        if run.dev:
            dev, _ = load_corpus(run.dev, vocab)
        wv = None
        if run.train.use_word:
            if not run.word_vectors:
                return _fail(EXIT_CONFIG, "use_word=true requires word_vectors=<path>")
            wv = load_word_vectors(run.word_vectors, run.train.word_dim,
                                   training.word_vector_rng(run.train.seed))
        ctx = None
        if run.train.use_contextual:
            if not run.contextual_vectors:
                return _fail(EXIT_CONFIG, "use_contextual=true requires contextual_vectors=<path>")
            ctx = load_contextual(run.contextual_vectors, run.train.contextual_dim)
    except (CorpusError, EmbeddingError, OSError) as e:
        return _fail(EXIT_DATA, str(e))
    try:
        result = training.train(
            sentences, dev, run.train,
            word_vectors=wv, contextual_store=ctx, vocab=vocab,
            metrics_path=run.metrics_out, checkpoint_path=run.checkpoint_out,
            checkpoint_paths={"word_vectors": run.word_vectors,
                              "contextual_vectors": run.contextual_vectors},
            log=lambda msg: print(msg, file=sys.stderr),
        )
    except TrainingError as e:
        return _fail(EXIT_NUMERIC, str(e))
    print(f"checkpoint written to {run.checkpoint_out} "
          f"(best epoch {result.best_epoch}, dev metric {result.best_metric:.4f})")
    print(f"metrics log written to {run.metrics_out}")
    return EXIT_OK


def _load_model_and_corpus(args):
    model = model_from_checkpoint(args.checkpoint)
    sentences, _ = load_corpus(args.corpus, model.vocab)
    normalized = [normalize_length(s, model.cfg.max_len) for s in sentences]
    return model, normalized


def _eval_rows(preds, gold):
    return [
        ("trigger classification", score_triggers(preds, gold)),
        ("argument identification", score_arguments(preds, gold, mode="identification")),
        ("argument role", score_arguments(preds, gold, mode="role")),
    ]


def cmd_eval(args) -> int:
    try:
        model, sentences = _load_model_and_corpus(args)
    except (CheckpointError, ValueError) as e:
        if isinstance(e, CorpusError):
            return _fail(EXIT_DATA, str(e))
        return _fail(EXIT_CONFIG, str(e))
    except OSError as e:
        return _fail(EXIT_DATA, str(e))

    def predictions_for(subset):
        gold = gold_events(subset)
        if args.gold_self_test:
            return gold, gold
        feats = [training.featurize(s, model.vocab, model.cfg,
                                    model.word_vectors, model.contextual_store)
                 for s in subset]
        return training.predict_features(model, feats, threads=model.cfg.threads), gold

    preds, gold = predictions_for(sentences)
    rows = _eval_rows(preds, gold)
    print(format_report_table(rows))
    payload = {"all": {label: rep.to_dict() for label, rep in rows}}

    if args.split_1n:
        one, many, excluded = split_one_vs_many(sentences)
        for name, subset in (("1/1", one), ("1/N", many)):
            print(f"\n[{name}] sentences: {len(subset)}")
            if subset:
                sub_preds, sub_gold = predictions_for(subset)
                sub_rows = _eval_rows(sub_preds, sub_gold)
                print(format_report_table(sub_rows))
                payload[name] = {label: rep.to_dict() for label, rep in sub_rows}
            else:
                payload[name] = {}
        print(f"\nexcluded (no gold trigger): {len(excluded)}")
        payload["excluded_sentences"] = len(excluded)

    if args.distance_bins:
        bins = distance_bin_report(preds, gold)
        csv = distance_report_csv(bins)
        print("\ndistance bins (role classification):")
        print(csv, end="")
        payload["distance_bins"] = {label: rep.to_dict() for label, rep in bins}
        if args.csv_out:
            training.atomic_write(args.csv_out, csv.encode("utf-8"))

    if args.json_out:
        training.atomic_write(
            args.json_out, json.dumps(payload, indent=2, sort_keys=True).encode("utf-8")
        )
    return EXIT_OK


def cmd_predict(args) -> int:
    try:
        model, sentences = _load_model_and_corpus(args)
    except (CheckpointError, ValueError) as e:
        if isinstance(e, CorpusError):
            return _fail(EXIT_DATA, str(e))
        return _fail(EXIT_CONFIG, str(e))
    except OSError as e:
        return _fail(EXIT_DATA, str(e))
    feats = [training.featurize(s, model.vocab, model.cfg,
                                model.word_vectors, model.contextual_store)
             for s in sentences]
    preds = training.predict_features(model, feats, threads=model.cfg.threads)
    body = "".join(json.dumps(p.to_dict(), sort_keys=True) + "\n" for p in preds)
    if args.out:
        training.atomic_write(args.out, body.encode("utf-8"))
        print(f"predictions written to {args.out}")
    else:
        print(body, end="")
    return EXIT_OK


def cmd_inspect_sdp(args) -> int:
    try:
        sentences, _ = load_corpus(args.corpus)
    except (CorpusError, OSError) as e:
        return _fail(EXIT_DATA, str(e))

    if args.z_weights:
        try:
            cfg, _, _, arrays = load_checkpoint(args.z_weights)
        except (CheckpointError, OSError) as e:
            return _fail(EXIT_CONFIG, str(e))
        if "gcn.z" not in arrays:
            return _fail(EXIT_CONFIG, f"{args.z_weights}: checkpoint has no attention weights (gcn disabled)")
        z = arrays["gcn.z"]
        # score profile on a probe input with unit tanh scores: softmax(z)
        e = np.exp(z - z.max())
        profile = e / e.sum()
        print(json.dumps({
            "z": [float(v) for v in z],
            "score_profile": [float(v) for v in profile],
        }, sort_keys=True))

    for s in sentences:
        norm = normalize_length(s)
        graph = dep_graph_from_sentence(norm)
        ent_rows = candidate_mask([e.span for e in norm.entities], len(norm.tokens))
        if args.pairs == "trigger":
            trig_rows = candidate_mask([t.span for t in norm.triggers], len(norm.tokens))
            sdp = compute_sdp(graph, trig_rows, ent_rows)
            for i, trig in enumerate(norm.triggers):
                for j, ent in enumerate(norm.entities):
                    print(json.dumps({
                        "sentence": norm.id,
                        "pair": "trigger-argument",
                        "trigger_span": list(trig.span),
                        "argument_span": list(ent.span),
                        "sdp_len": int(sdp.sdp_len[i, j]),
                        "path": [int(k) for k in np.flatnonzero(sdp.sdp[i, j])],
                    }, sort_keys=True))
        else:
            lengths = compute_argument_sdp_l(graph, ent_rows)
            for i, ent_a in enumerate(norm.entities):
                for j, ent_b in enumerate(norm.entities):
                    if j <= i:
                        continue
                    print(json.dumps({
                        "sentence": norm.id,
                        "pair": "argument-argument",
                        "span_a": list(ent_a.span),
                        "span_b": list(ent_b.span),
                        "sdp_len": int(lengths[i, j]),
                    }, sort_keys=True))
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    results = run_gradchecks(args.module, seed=args.seed)
    width = max(len(name) for name, _ in results)
    failed = []
    for name, err in results:
        status = "ok" if err < TOLERANCE else "FAIL"
        print(f"{name:<{width}}  max_rel_err={err:.3e}  {status}")
        if err >= TOLERANCE:
            failed.append(name)
    if failed:
        return _fail(EXIT_GRADCHECK, f"gradient check failed for: {', '.join(failed)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jeesdp",
        description="Joint event extraction along shortest dependency paths.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("train", help="train a model from a key=value config file",
                       formatter_class=fmt)
    p.add_argument("--config", required=True, help="run config path")
    p.add_argument("--seed", type=int, default=None,
                   help="override the config (and JEESDP_SEED) seed")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a checkpoint against a gold corpus",
                       formatter_class=fmt)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--split-1n", action="store_true", dest="split_1n",
                   help="also report single-event vs multi-event subsets")
    p.add_argument("--distance-bins", action="store_true", dest="distance_bins",
                   help="also report role scores binned by sequential distance (width 3)")
    p.add_argument("--gold-self-test", action="store_true", dest="gold_self_test",
                   help="score gold annotations against themselves (sanity check)")
    p.add_argument("--json-out", default=None, help="write the full report as JSON")
    p.add_argument("--csv-out", default=None, help="write distance bins as CSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="decode events for a corpus", formatter_class=fmt)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", default=None, help="output JSONL path (default: stdout)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("inspect-sdp", help="emit per-pair shortest-path JSON",
                       formatter_class=fmt)
    p.add_argument("--corpus", required=True)
    p.add_argument("--pairs", choices=("trigger", "argument"), default="trigger",
                   help="trigger-argument or argument-argument pairs")
    p.add_argument("--z-weights", default=None,
                   help="checkpoint whose attention length-weights to print")
    p.set_defaults(func=cmd_inspect_sdp)

    p = sub.add_parser("gradcheck", help="finite-difference checks for every component",
                       formatter_class=fmt)
    p.add_argument("--module", choices=("all", "trigger", "argument", "loss"),
                   default="all")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
