"""Full pipeline on the 4000-review synthetic corpus, then a look inside.

Takes one to two minutes on one core. Writes artifacts, an attention
heatmap and SAGE word-cloud data under ``demo_out/``.
"""

# %% Train and evaluate.
from pathlib import Path

from sugmine.config import RunConfig
from sugmine.corpus import Review
from sugmine.explain import (
    attention_saliency,
    domain_sage,
    export_heatmap,
    export_wordcloud_data,
    top_k_sage,
)
from sugmine.pipeline import predict_two_tier, run_pipeline, save_artifacts
from sugmine.synthetic import make_corpus

out = Path("demo_out")
corpus = make_corpus(4000, seed=0)
arts, report = run_pipeline(corpus.split("train"), corpus.split("test"), RunConfig())
print("per-domain F1:", {d: round(v, 3) for d, v in report.per_domain.items()})
print("pooled fine-grain F1:", round(report.pooled_fine_grain, 3))
save_artifacts(arts, out / "artifacts")
report.save(out / "report.json")

# %% Two-tier predictions on unseen text.
for text in ("you should add a pool", "please fix the login screen", "the tour guide was lovely"):
    print(text, "->", predict_two_tier(Review("demo", text, "hotel", "suggestion", "test"), arts))

# %% Where does the CLS position look?
s = attention_saliency("the breakfast was cold but you should renew the buffet", arts)
print(list(zip(s.tokens, s.weights.round(2))))
export_heatmap(s, out / "heatmap.svg")

# %% Domain-specific vocabulary among suggestions.
train = arts.augmented.filter(lambda r: r.provenance == "original")
for d in ("hotel", "electronics", "travel", "software"):
    res = domain_sage(train.reviews, lambda r: arts.tokens(r.text), d)
    print(d, [(e.token, round(e.eta, 2)) for e in top_k_sage(res, 5)])
    export_wordcloud_data(top_k_sage(res, 20), out / f"sage_{d}.json")
