import json
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sugmine.config import from_dict
from sugmine.corpus import DOMAINS, Review
from sugmine.pipeline import (
    TwoTierPrediction,
    build_report,
    evaluate,
    f1_binary,
    joint_classes,
    load_artifacts,
    pooled_fine_grain_f1,
    predict_joint,
    predict_two_tier,
    run_pipeline,
    save_artifacts,
)

SMALL = {
    "embed": {"d_emb": 16, "epochs": 2},
    "baseline": {"epochs": 20},
    "transformer": {"d_model": 16, "n_heads": 2, "d_ff": 32, "adapter_dim": 4, "max_len": 32, "epochs": 2},
}


def test_f1_examples():
    assert f1_binary([1, 0, 1], [1, 0, 1]) == 1.0
    # TP=1, FP=1, FN=1
    assert f1_binary([1, 1, 0], [1, 0, 1]) == pytest.approx(0.5)
    assert f1_binary([0, 0, 0], [0, 1, 0]) == 0.0
    with pytest.raises(ValueError):
        f1_binary([1], [1, 0])


def test_pooled_perfect_and_missing_classes():
    gold = np.array([0, 4, 4, 2])
    assert pooled_fine_grain_f1(gold, gold) == 1.0
    # suggestion predicted with the wrong domain counts against both classes
    assert pooled_fine_grain_f1(np.array([0, 4]), np.array([1, 4])) == 0.0


def test_joint_classes():
    assert joint_classes([True, False, True], [2, 1, 0]).tolist() == [2, 4, 0]


def test_two_tier_invariant():
    with pytest.raises(ValueError):
        TwoTierPrediction(False, "hotel", 0.2)
    with pytest.raises(ValueError):
        TwoTierPrediction(True, None, 0.9)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_report_restriction_property(seed):
    rng = np.random.default_rng(seed)
    n = 60
    domains = [DOMAINS[i] for i in rng.integers(0, 4, n)]
    gold = rng.integers(0, 5, n)
    pred = rng.integers(0, 5, n)
    rep = build_report(domains, gold, pred)
    # shuffling hotel rows among themselves leaves other domains alone
    idx = np.arange(n)
    hot = np.flatnonzero(np.array(domains) == "hotel")
    idx[hot] = rng.permutation(hot)
    pred2 = pred.copy()
    pred2[hot] = pred[idx[hot]]
    rep2 = build_report(domains, gold, pred2)
    for d in ("electronics", "travel", "software"):
        if d in rep.per_domain:
            assert rep.per_domain[d] == rep2.per_domain[d]
    assert np.asarray(rep.confusion["joint"]["matrix"]).sum() == n


def test_report_all_correct():
    gold = np.array([0, 4, 1, 4, 2, 3])
    rep = build_report(["hotel", "hotel", "electronics", "travel", "travel", "software"], gold, gold)
    assert set(rep.per_domain.values()) == {1.0} and rep.pooled_fine_grain == 1.0


@pytest.fixture(scope="module")
def run1000():
    from sugmine.synthetic import make_corpus

    corpus = make_corpus(1000, seed=11)
    cfg = from_dict(SMALL)
    arts, rep = run_pipeline(corpus.split("train"), corpus.split("test"), cfg)
    return corpus, cfg, arts, rep


def test_run_emits_report(run1000):
    corpus, cfg, arts, rep = run1000
    assert set(rep.per_domain) == set(DOMAINS)
    assert 0.0 <= rep.pooled_fine_grain <= 1.0
    assert rep.seeds["transformer"] == cfg.transformer.seed
    json.loads(rep.to_json())
    stages = [m.get("stage") for m in arts.manifest if "stage" in m]
    assert stages == ["preprocess", "embed_initial", "baseline", "augment", "embed_finetune", "transformer", "evaluate"]
    assert arts.manifest[-1]["test_hash"] == corpus.split("test").content_hash()


def test_method_only_changes_augment_config(run1000):
    corpus, cfg, arts, _ = run1000
    other = replace(cfg, augment=replace(cfg.augment, method="none"))
    arts2, _ = run_pipeline(corpus.split("train"), corpus.split("test"), other)
    a = {m["stage"]: m["config"] for m in arts.manifest if "stage" in m}
    b = {m["stage"]: m["config"] for m in arts2.manifest if "stage" in m}
    assert [s for s in a if a[s] != b[s]] == ["augment"]
    assert len(arts2.augmented) == len(corpus.split("train"))


def test_test_reviews_never_leak(run1000):
    corpus, _, arts, _ = run1000
    test_ids = {r.id for r in corpus.split("test").reviews}
    assert not test_ids & {r.id for r in arts.augmented.reviews}
    assert all(r.split == "train" for r in arts.augmented.reviews)


def test_predictions_deterministic_and_consistent(run1000):
    corpus, _, arts, _ = run1000
    reviews = corpus.split("test").reviews[:20]
    joint = predict_joint(reviews, arts)
    for r, j in zip(reviews, joint):
        p = predict_two_tier(r, arts)
        assert p == predict_two_tier(r, arts)
        assert p.is_suggestion == (j != 4)
        if p.is_suggestion:
            assert DOMAINS.index(p.domain) == j
        else:
            assert p.domain is None


def test_artifacts_roundtrip(tmp_path, run1000):
    corpus, _, arts, rep = run1000
    save_artifacts(arts, tmp_path / "a")
    back = load_artifacts(tmp_path / "a")
    assert evaluate(corpus.split("test"), back).to_json() == rep.to_json()


def test_adapter_transfer_mode():
    from sugmine.synthetic import make_corpus

    corpus = make_corpus(400, seed=2)
    cfg = from_dict({**SMALL, "phase2": {"mode": "adapter_transfer", "pretrain_epochs": 1}})
    arts, rep = run_pipeline(corpus.split("train"), corpus.split("test"), cfg)
    assert len(arts.loss_trace) == 1 + cfg.transformer.epochs
    assert arts.model.cfg.trainable == "all"


def test_smote_mode_runs():
    from sugmine.synthetic import make_corpus

    corpus = make_corpus(400, seed=2)
    cfg = from_dict({**SMALL, "augment": {"method": "smote", "smote_k": 3}})
    arts, _ = run_pipeline(corpus.split("train"), corpus.split("test"), cfg)
    aug = next(m for m in arts.manifest if m.get("stage") == "augment")
    assert aug["n_added"] > 0


def test_empty_split_rejected(corpus500):
    with pytest.raises(ValueError):
        run_pipeline(corpus500.split("train"), corpus500.split("train"), from_dict(SMALL))


def test_two_tier_on_planted_review(trained_run):
    arts = trained_run.arts
    p = predict_two_tier(Review("x", "you should add a pool", "hotel", "suggestion", "test"), arts)
    assert (p.is_suggestion, p.domain) == (True, "hotel")
