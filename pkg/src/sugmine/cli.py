"""``sugmine`` command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .config import ConfigError, from_dict, parse_config

logger = logging.getLogger("sugmine")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def file_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out_path, command: str, inputs: dict, seed=None, config=None) -> None:
    """Record what produced ``out_path`` in ``<out_path>.manifest.json``."""
    manifest = {
        "command": command,
        "tool_version": __version__,
        "inputs": {k: file_hash(v) for k, v in inputs.items() if v is not None and Path(v).is_file()},
        "seed": seed,
        "config": config or {},
    }
    if config is not None:
        manifest["config_hash"] = hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()
    Path(str(out_path) + ".manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _default_seed(value):
    if value is not None:
        return value
    env = os.environ.get("SUGMINE_SEED")
    return int(env) if env is not None else 42


# -- subcommands -----------------------------------------------------------------

def cmd_ingest(args):
    from .corpus import balance_stats, load_dataset, save_dataset

    d = load_dataset(args.input, args.format)
    save_dataset(d, args.out, "jsonl")
    logger.info("ingested %d reviews\n%s", len(d), balance_stats(d).table())
    write_manifest(args.out, "ingest", {"input": args.input})


def _vocab_from_embeddings(emb):
    from .embed import Vocabulary

    counts = {t: 1 for t in emb.tokens[3:]}
    return Vocabulary({t: i for i, t in enumerate(emb.tokens)}, list(emb.tokens), counts)


def cmd_preprocess(args):
    from .corpus import Dataset, Review, load_dataset, save_dataset
    from .textprep import Lexicon, preprocess_tokens, tokenize

    d = load_dataset(args.inp)
    raw = [tokenize(r.text).tokens for r in d.reviews if r.split == "train"]
    lex = Lexicon.from_corpus(raw, args.lexicon_min_count, args.wordlist)
    cache = {}
    out = []
    for r in d.reviews:
        toks = preprocess_tokens(tokenize(r.text).tokens, lex, args.threshold, cache)
        out.append(Review(r.id, " ".join(toks), r.domain, r.label, r.split, r.provenance))
    save_dataset(Dataset(tuple(out), d.domains), args.out)
    write_manifest(args.out, "preprocess", {"input": args.inp, "wordlist": args.wordlist}, config={"threshold": args.threshold})


def cmd_train_embeddings(args):
    from .corpus import load_dataset
    from .embed import SkipGramConfig, build_vocab, load_embeddings, save_embeddings, train_skipgram
    from .textprep import tokenize

    d = load_dataset(args.inp)
    corpus = [tokenize(r.text).tokens for r in d.reviews if r.split == "train"]
    vocab = build_vocab(corpus, args.min_count)
    cfg = SkipGramConfig(d_emb=args.dim, window=args.window, negatives=args.negatives, epochs=args.epochs, seed=_default_seed(args.seed))
    init = load_embeddings(args.init) if args.init else None
    emb = train_skipgram(corpus, vocab, cfg, init=init)
    save_embeddings(emb, vocab, args.out)
    write_manifest(args.out, "train-embeddings", {"input": args.inp, "init": args.init}, cfg.seed, vars(cfg))


def cmd_train_baseline(args):
    from .augment import BaselineConfig, train_baseline
    from .corpus import load_dataset
    from .embed import load_embeddings

    d = load_dataset(args.inp).filter(lambda r: r.split == "train")
    emb = load_embeddings(args.emb)
    cfg = BaselineConfig(seed=_default_seed(args.seed))
    c = train_baseline(d, emb, _vocab_from_embeddings(emb), cfg)
    Path(args.out).write_text(json.dumps({"weights": [float(x) for x in c.weights], "bias": c.bias}) + "\n", encoding="utf-8")
    write_manifest(args.out, "train-baseline", {"input": args.inp, "emb": args.emb}, cfg.seed, vars(cfg))


def cmd_augment(args):
    from .augment import BaselineClassifier, oversample_discourse, smote_features
    from .corpus import load_dataset, save_dataset
    from .embed import load_embeddings

    d = load_dataset(args.inp)
    seed = _default_seed(args.seed)
    if args.method == "none":
        save_dataset(d, args.out)
    else:
        if not args.emb:
            raise UsageError(f"--emb is required for --method {args.method}")
        emb = load_embeddings(args.emb)
        vocab = _vocab_from_embeddings(emb)
        if args.method == "discourse":
            if not args.baseline:
                raise UsageError("--baseline is required for --method discourse")
            base = json.loads(Path(args.baseline).read_text(encoding="utf-8"))
            c = BaselineClassifier(np.asarray(base["weights"]), base["bias"], trained=True)
            save_dataset(oversample_discourse(d, c, args.markers.split(","), emb, vocab), args.out)
        else:
            save_dataset(d, args.out)
            feats = smote_features(d, vocab, emb, k=args.k, seed=seed)
            lines = [json.dumps({"domain": f.domain, "label": f.label, "vector": [float(x) for x in f.vector], "origin": list(f.origin)}) for f in feats]
            Path(str(args.out) + ".features.jsonl").write_text("".join(ln + "\n" for ln in lines), encoding="utf-8")
    write_manifest(args.out, "augment", {"input": args.inp, "baseline": args.baseline, "emb": args.emb}, seed, {"method": args.method, "markers": args.markers})


def cmd_train(args):
    from .corpus import load_dataset
    from .embed import load_embeddings
    from .pipeline import training_arrays
    from .xformer import TransformerModel, save_checkpoint, train

    cfg = parse_config(args.config) if args.config else from_dict({})
    tcfg = cfg.transformer
    if args.seed is not None:
        tcfg = replace(tcfg, seed=args.seed)
    d = load_dataset(args.inp).filter(lambda r: r.split == "train")
    emb = load_embeddings(args.emb)
    vocab = _vocab_from_embeddings(emb)
    ids, y_s, y_d = training_arrays(d, vocab, tcfg.max_len)
    model = TransformerModel(tcfg, emb.vectors)
    result = train(model, ids, y_s, y_d)
    save_checkpoint(model, args.out)
    Path(str(args.out) + ".vocab.json").write_text(json.dumps(vocab.to_json(), sort_keys=True) + "\n", encoding="utf-8")
    write_manifest(args.out, "train", {"input": args.inp, "emb": args.emb, "config": args.config}, tcfg.seed,
                   {**tcfg.to_dict(), "loss_trace": result.loss_trace})


def cmd_evaluate(args):
    from .corpus import load_dataset
    from .pipeline import evaluate, load_artifacts

    arts = load_artifacts(args.artifacts)
    test = load_dataset(args.test).filter(lambda r: r.split == "test")
    report = evaluate(test, arts)
    report.save(args.out)
    write_manifest(args.out, "evaluate", {"test": args.test, "model": Path(args.artifacts) / "model.ckpt"}, config=arts.cfg.to_dict())


def cmd_run(args):
    from .corpus import load_dataset
    from .pipeline import run_pipeline, save_artifacts

    cfg = parse_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    paths = cfg.paths
    if not paths.train or not paths.test:
        raise ConfigError("paths.train and paths.test are required for `run`")
    base = Path(args.config).parent
    train_path, test_path = base / paths.train, base / paths.test
    train = load_dataset(train_path, paths.format)
    test = load_dataset(test_path, paths.format) if test_path != train_path else train
    arts, report = run_pipeline(train, test, cfg)
    out = Path(paths.out)
    if not out.is_absolute():
        out = base / out
    arts.manifest.append({"inputs": {"train": file_hash(train_path), "test": file_hash(test_path)}})
    save_artifacts(arts, out)
    report.save(out / "report.json")
    logger.info("pooled fine-grain F1 %.4f; per domain %s", report.pooled_fine_grain, report.per_domain)


def cmd_explain(args):
    from .corpus import load_dataset
    from .explain import attention_saliency, export_heatmap
    from .pipeline import load_artifacts

    arts = load_artifacts(args.artifacts)
    d = load_dataset(args.inp)
    match = [r for r in d.reviews if r.id == args.review_id]
    if not match:
        raise LookupError(f"no review with id {args.review_id!r}")
    s = attention_saliency(match[0], arts)
    export_heatmap(s, args.out)
    if args.json:
        Path(args.json).write_text(json.dumps(s.to_json()) + "\n", encoding="utf-8")


def cmd_sage(args):
    from .corpus import load_dataset
    from .explain import domain_sage, sage_json, top_k_sage
    from .textprep import tokenize

    d = load_dataset(args.inp).filter(lambda r: r.split == "train")
    res = domain_sage(d.reviews, lambda r: tokenize(r.text).tokens, args.domain, lam=args.lam)
    entries = top_k_sage(res, args.k) if args.k else list(res)
    Path(args.out).write_text(json.dumps(sage_json(args.domain, args.lam, entries), indent=1) + "\n", encoding="utf-8")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sugmine", description="Open-domain suggestion mining pipeline.")
    p.add_argument("--version", action="version", version=f"sugmine {__version__}")
    p.add_argument("--threads", type=int, default=1, help="BLAS threads (1 = strict determinism)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")

    s = sub.add_parser("ingest", help="validate a CSV/JSONL dataset and write canonical JSONL")
    s.add_argument("--input", required=True)
    s.add_argument("--format", choices=("csv", "jsonl"), default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("preprocess", help="tokenize, spell-correct and lemmatize")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--wordlist")
    s.add_argument("--threshold", type=float, default=0.85)
    s.add_argument("--lexicon-min-count", type=int, default=2)
    s.set_defaults(func=cmd_preprocess)

    s = sub.add_parser("train-embeddings", help="train skip-gram vectors")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--dim", type=int, default=64)
    s.add_argument("--window", type=int, default=5)
    s.add_argument("--negatives", type=int, default=5)
    s.add_argument("--epochs", type=int, default=5)
    s.add_argument("--min-count", type=int, default=1)
    s.add_argument("--init", help="vector file to fine-tune from")
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_train_embeddings)

    s = sub.add_parser("train-baseline", help="train the pruning classifier")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--emb", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_train_baseline)

    s = sub.add_parser("augment", help="oversample the minority class")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--baseline")
    s.add_argument("--emb")
    s.add_argument("--method", choices=("discourse", "smote", "none"), default="discourse")
    s.add_argument("--markers", default="and,but,because")
    s.add_argument("--k", type=int, default=5)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_augment)

    s = sub.add_parser("train", help="train the transformer classifier")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--emb", required=True)
    s.add_argument("--config")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("evaluate", help="score a trained artifact directory on a test split")
    s.add_argument("--test", required=True)
    s.add_argument("--artifacts", required=True)
    s.add_argument("--out", default="report.json")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("run", help="run the full pipeline from a config file")
    s.add_argument("--config", required=True)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("explain", help="attention heatmap for one review")
    s.add_argument("--review-id", required=True)
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--artifacts", required=True)
    s.add_argument("--out", required=True, help="SVG path")
    s.add_argument("--json", help="also write saliency JSON here")
    s.set_defaults(func=cmd_explain)

    s = sub.add_parser("sage", help="SAGE discriminating tokens for one domain")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--domain", required=True, choices=("hotel", "electronics", "travel", "software"))
    s.add_argument("--lambda", dest="lam", type=float, default=5.0)
    s.add_argument("--k", type=int, default=10)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sage)
    return p


def dispatch(argv=None) -> int:
    from .corpus import DataError
    from .xformer import NumericError

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        with threadpool_limits(limits=args.threads):
            args.func(args)
    except (UsageError, ConfigError) as exc:
        logger.error("%s", exc)
        return EXIT_USAGE
    except (NumericError, FloatingPointError) as exc:
        logger.error("numeric failure: %s", exc)
        return EXIT_NUMERIC
    except (DataError, FileNotFoundError, LookupError, ValueError, OSError) as exc:
        logger.error("%s", exc)
        return EXIT_DATA
    return EXIT_OK


def main():  # pragma: no cover
    sys.exit(dispatch())


if __name__ == "__main__":  # pragma: no cover
    main()
