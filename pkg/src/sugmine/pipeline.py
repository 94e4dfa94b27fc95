"""Two-phase pipeline orchestration, two-tier inference and F1 evaluation."""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .augment import (
    BaselineClassifier,
    oversample_discourse,
    smote_features,
    train_baseline,
)
from .config import RunConfig
from .corpus import DOMAINS, Dataset, Review
from .embed import EmbeddingMatrix, Vocabulary, build_vocab, train_skipgram, CLS, PAD
from .textprep import Lexicon, load_wordlist, preprocess_tokens, tokenize
from .xformer import TransformerModel, predict_logits, train as train_model
from .xformer.layers import softmax

logger = logging.getLogger(__name__)

NON_SUGGESTION = len(DOMAINS)


@dataclass(frozen=True)
class TwoTierPrediction:
    is_suggestion: bool
    domain: str | None
    suggestion_prob: float

    def __post_init__(self):
        if self.is_suggestion != (self.domain is not None):
            raise ValueError("domain must be present exactly when is_suggestion is true")


@dataclass
class F1Report:
    per_domain: dict
    pooled_fine_grain: float
    confusion: dict
    seeds: dict = field(default_factory=dict)
    config_hash: str = ""

    def to_dict(self) -> dict:
        return {
            "per_domain": self.per_domain,
            "pooled_fine_grain": self.pooled_fine_grain,
            "confusion": self.confusion,
            "seeds": self.seeds,
            "config_hash": self.config_hash,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")


@dataclass
class Artifacts:
    cfg: RunConfig
    lexicon: Lexicon
    vocab: Vocabulary
    emb: EmbeddingMatrix
    baseline: BaselineClassifier
    model: TransformerModel
    manifest: list = field(default_factory=list)
    loss_trace: list = field(default_factory=list)
    augmented: Dataset | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def tokens(self, text: str) -> tuple:
        raw = tokenize(text).tokens
        return preprocess_tokens(raw, self.lexicon, self.cfg.prep.threshold, self._cache)

    def encode(self, text: str) -> np.ndarray:
        return self.vocab.encode(self.tokens(text), self.cfg.transformer.max_len)


def sha256_text(s: str) -> str:
    return hashlib.sha256(s.encode("utf-8")).hexdigest()


def _stage(manifest, name, input_hash, seed=None, config=None, **extra):
    entry = {"stage": name, "input_hash": input_hash, "seed": seed, "config": config or {}}
    entry.update(extra)
    manifest.append(entry)
    logger.info("stage %s done", name)


# -- metrics --------------------------------------------------------------------

def f1_binary(preds, golds) -> float:
    """F1 of the positive class; 0 when precision + recall is 0."""
    preds = np.asarray(preds, dtype=bool)
    golds = np.asarray(golds, dtype=bool)
    if preds.shape != golds.shape:
        raise ValueError(f"length mismatch: {preds.shape} vs {golds.shape}")
    if preds.size == 0:
        raise ValueError("empty input")
    return _f1(int((preds & golds).sum()), int((preds & ~golds).sum()), int((~preds & golds).sum()))


def _f1(tp: int, fp: int, fn: int) -> float:
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    return 2 * p * r / (p + r) if p + r else 0.0


def joint_classes(is_sugg, domain_idx) -> np.ndarray:
    """Joint class per review: domain index for suggestions, 4 otherwise."""
    is_sugg = np.asarray(is_sugg, dtype=bool)
    return np.where(is_sugg, np.asarray(domain_idx), NON_SUGGESTION)


def pooled_fine_grain_f1(gold_joint, pred_joint) -> float:
    """Macro F1 over the suggestion-and-domain classes.

    Classes with no gold and no predicted member are left out of the mean.
    """
    gold_joint = np.asarray(gold_joint)
    pred_joint = np.asarray(pred_joint)
    scores = []
    for k in range(len(DOMAINS)):
        tp = int(((gold_joint == k) & (pred_joint == k)).sum())
        fp = int(((gold_joint != k) & (pred_joint == k)).sum())
        fn = int(((gold_joint == k) & (pred_joint != k)).sum())
        if tp + fp + fn:
            scores.append(_f1(tp, fp, fn))
    return float(np.mean(scores)) if scores else 0.0


def build_report(domains, gold_joint, pred_joint, seeds=None, config_hash="") -> F1Report:
    domains = list(domains)
    gold_joint = np.asarray(gold_joint)
    pred_joint = np.asarray(pred_joint)
    per_domain, confusion = {}, {}
    dom_arr = np.asarray([DOMAINS.index(d) for d in domains])
    for j, d in enumerate(DOMAINS):
        sel = dom_arr == j
        if not sel.any():
            continue
        g = gold_joint[sel] != NON_SUGGESTION
        p = pred_joint[sel] != NON_SUGGESTION
        per_domain[d] = f1_binary(p, g)
        confusion[d] = {
            "tp": int((p & g).sum()),
            "fp": int((p & ~g).sum()),
            "fn": int((~p & g).sum()),
            "tn": int((~p & ~g).sum()),
        }
    k = len(DOMAINS) + 1
    joint = np.zeros((k, k), dtype=np.int64)
    np.add.at(joint, (gold_joint, pred_joint), 1)
    confusion["joint"] = {"labels": [f"suggestion/{d}" for d in DOMAINS] + ["non_suggestion"], "matrix": joint.tolist()}
    return F1Report(per_domain, pooled_fine_grain_f1(gold_joint, pred_joint), confusion, dict(seeds or {}), config_hash)


# -- inference -------------------------------------------------------------------

def _decide(sugg_logits, dom_logits):
    ps = softmax(sugg_logits)
    is_s = ps[:, 1] > ps[:, 0]
    dom = np.argmax(dom_logits, axis=1)
    return is_s, dom, ps[:, 1]


def predict_two_tier(review, artifacts: Artifacts) -> TwoTierPrediction:
    """Tier 1 decides suggestion vs not; tier 2 names the domain of suggestions."""
    text = review.text if isinstance(review, Review) else str(review)
    ids = artifacts.encode(text)
    s, d = predict_logits(artifacts.model, ids[None])
    is_s, dom, prob = _decide(s, d)
    if is_s[0]:
        return TwoTierPrediction(True, DOMAINS[int(dom[0])], float(prob[0]))
    return TwoTierPrediction(False, None, float(prob[0]))


def predict_joint(reviews, artifacts: Artifacts) -> np.ndarray:
    reviews = list(reviews)
    if not reviews:
        return np.zeros(0, dtype=np.int64)
    ids = np.stack([artifacts.encode(r.text) for r in reviews])
    s, d = predict_logits(artifacts.model, ids)
    is_s, dom, _ = _decide(s, d)
    return joint_classes(is_s, dom)


def evaluate(test: Dataset, artifacts: Artifacts) -> F1Report:
    reviews = list(test.reviews)
    if not reviews:
        raise ValueError("empty test split")
    gold = joint_classes([r.is_suggestion for r in reviews], [DOMAINS.index(r.domain) for r in reviews])
    pred = predict_joint(reviews, artifacts)
    return build_report([r.domain for r in reviews], gold, pred, artifacts.cfg.seeds(), artifacts.cfg.hash())


# -- training stages ---------------------------------------------------------------

def _preprocessed(d: Dataset, lex: Lexicon, threshold: float, cache) -> tuple[Dataset, dict]:
    out, toks = [], {}
    for r in d.reviews:
        t = preprocess_tokens(tokenize(r.text).tokens, lex, threshold, cache)
        toks[r.id] = t
        text = " ".join(t) if t else r.text
        out.append(Review(r.id, text, r.domain, r.label, r.split, r.provenance))
    return Dataset(tuple(out), d.domains), toks


def training_arrays(d: Dataset, vocab: Vocabulary, max_len: int):
    ids = np.stack([vocab.encode(tokenize(r.text).tokens, max_len) for r in d.reviews])
    y_s = np.array([int(r.is_suggestion) for r in d.reviews], dtype=np.int64)
    y_d = np.array([DOMAINS.index(r.domain) for r in d.reviews], dtype=np.int64)
    return ids, y_s, y_d


def run_pipeline(train: Dataset, test: Dataset, cfg: RunConfig | None = None):
    """Preprocess, augment, embed, train and evaluate.

    Only ``train`` feeds the lexicon, vocabulary, embeddings, pruning
    classifier and transformer; ``test`` is read once, for evaluation.
    Returns ``(Artifacts, F1Report)``.
    """
    cfg = cfg or RunConfig()
    train = train.filter(lambda r: r.split == "train")
    test = test.filter(lambda r: r.split == "test")
    if not len(train) or not len(test):
        raise ValueError("both train and test splits must be non-empty")
    test_hash = test.content_hash()
    manifest: list = []
    cache: dict = {}

    raw_tokens = [tokenize(r.text).tokens for r in train.reviews]
    wordlist = load_wordlist(cfg.prep.wordlist) if cfg.prep.wordlist else None
    lex = Lexicon.from_corpus(raw_tokens, cfg.prep.lexicon_min_count, wordlist)
    train_pre, toks = _preprocessed(train, lex, cfg.prep.threshold, cache)
    _stage(manifest, "preprocess", train.content_hash(), config={"threshold": cfg.prep.threshold, "lexicon_size": len(lex.words)})

    corpus = [toks[r.id] for r in train.reviews]
    vocab = build_vocab(corpus, cfg.vocab.min_count)
    emb0 = train_skipgram(corpus, vocab, cfg.embed)
    _stage(manifest, "embed_initial", train_pre.content_hash(), cfg.embed.seed, vars(cfg.embed), vocab_size=len(vocab))

    baseline = train_baseline(train_pre, emb0, vocab, cfg.baseline)
    _stage(manifest, "baseline", train_pre.content_hash(), cfg.baseline.seed, vars(cfg.baseline))

    method = cfg.augment.method
    synthetic = []
    if method == "discourse":
        augmented = oversample_discourse(train_pre, baseline, cfg.augment.markers, emb0, vocab)
    else:
        augmented = train_pre
    aug_tokens = [tokenize(r.text).tokens for r in augmented.reviews]
    emb = train_skipgram(aug_tokens, vocab, cfg.embed, init=emb0)
    if method == "smote":
        synthetic = smote_features(train_pre, vocab, emb, cfg.augment.smote_k, cfg.augment.smote_ratio, cfg.augment.seed)
    _stage(manifest, "augment", train_pre.content_hash(), cfg.augment.seed,
           {"method": method, "markers": list(cfg.augment.markers)},
           output_hash=augmented.content_hash(), n_added=len(augmented) - len(train_pre) + len(synthetic))
    _stage(manifest, "embed_finetune", augmented.content_hash(), cfg.embed.seed, vars(cfg.embed))

    tcfg = cfg.transformer
    ids, y_s, y_d = training_arrays(augmented, vocab, tcfg.max_len)
    table = emb.vectors
    if synthetic:
        V = len(vocab)
        table = np.vstack([emb.vectors, np.stack([ex.vector for ex in synthetic])])
        syn_ids = np.full((len(synthetic), tcfg.max_len), PAD, dtype=np.int64)
        syn_ids[:, 0] = CLS
        syn_ids[:, 1] = V + np.arange(len(synthetic))
        ids = np.vstack([ids, syn_ids])
        y_s = np.concatenate([y_s, np.ones(len(synthetic), dtype=np.int64)])
        y_d = np.concatenate([y_d, [DOMAINS.index(ex.domain) for ex in synthetic]])
    model = TransformerModel(tcfg, table)
    loss_trace = []
    if cfg.phase2.mode == "adapter_transfer":
        pre = train_model(model, ids, y_s, y_d, epochs=cfg.phase2.pretrain_epochs, domain_loss=False)
        loss_trace.extend(pre.loss_trace)
        model.cfg = replace(tcfg, trainable="adapters")
    result = train_model(model, ids, y_s, y_d)
    loss_trace.extend(result.loss_trace)
    model.cfg = tcfg
    _stage(manifest, "transformer", sha256_text(ids.tobytes().hex()), tcfg.seed, tcfg.to_dict(),
           mode=cfg.phase2.mode, final_loss=loss_trace[-1])

    arts = Artifacts(cfg, lex, vocab, emb, baseline, model, manifest, loss_trace, augmented, cache)
    report = evaluate(test, arts)
    _stage(manifest, "evaluate", test_hash, config={"n_test": len(test)})
    if test.content_hash() != test_hash:
        raise RuntimeError("test split changed during the run")
    arts.manifest.append({"tool_version": __version__, "config_hash": cfg.hash(), "seeds": cfg.seeds(), "test_hash": test_hash})
    return arts, report


# -- persistence -------------------------------------------------------------------

ARTIFACT_FILES = ("config.json", "lexicon.json", "vocab.json", "embeddings.txt", "baseline.json", "model.ckpt", "manifest.json")


def save_artifacts(arts: Artifacts, out_dir) -> Path:
    from .embed import save_embeddings
    from .xformer import save_checkpoint

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(arts.cfg.to_json() + "\n", encoding="utf-8")
    lex = {"words": dict(sorted(arts.lexicon.frequency.items()))}
    (out / "lexicon.json").write_text(json.dumps(lex, sort_keys=True) + "\n", encoding="utf-8")
    (out / "vocab.json").write_text(json.dumps(arts.vocab.to_json(), sort_keys=True) + "\n", encoding="utf-8")
    save_embeddings(arts.emb, arts.vocab, out / "embeddings.txt")
    base = {"weights": [float(x) for x in arts.baseline.weights], "bias": arts.baseline.bias}
    (out / "baseline.json").write_text(json.dumps(base) + "\n", encoding="utf-8")
    save_checkpoint(arts.model, out / "model.ckpt")
    (out / "manifest.json").write_text(json.dumps(arts.manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return out


def load_artifacts(in_dir) -> Artifacts:
    from .config import from_dict
    from .embed import load_embeddings
    from .xformer import load_checkpoint

    d = Path(in_dir)
    missing = [f for f in ARTIFACT_FILES if not (d / f).exists()]
    if missing:
        raise FileNotFoundError(f"{d}: missing artifact files {missing}")
    cfg = from_dict(json.loads((d / "config.json").read_text(encoding="utf-8")))
    freq = json.loads((d / "lexicon.json").read_text(encoding="utf-8"))["words"]
    lex = Lexicon(set(freq), freq)
    vocab = Vocabulary.from_json(json.loads((d / "vocab.json").read_text(encoding="utf-8")))
    emb = load_embeddings(d / "embeddings.txt")
    base = json.loads((d / "baseline.json").read_text(encoding="utf-8"))
    baseline = BaselineClassifier(np.asarray(base["weights"]), base["bias"], trained=True)
    model = load_checkpoint(d / "model.ckpt")
    manifest = json.loads((d / "manifest.json").read_text(encoding="utf-8"))
    return Artifacts(cfg, lex, vocab, EmbeddingMatrix(emb.vectors, emb.seed), baseline, model, manifest)
