"""How discourse-marker oversampling changes a skewed training set.

Builds the synthetic four-domain corpus, trains the pruning classifier and
prints class balance before and after SWAP/CROP, with a few generated
examples next to their parents.
"""

# %% Corpus and class balance.
from sugmine.augment import BaselineConfig, oversample_discourse, parse_aug_id, review_tokens, train_baseline
from sugmine.corpus import balance_stats
from sugmine.embed import SkipGramConfig, build_vocab, train_skipgram
from sugmine.synthetic import make_corpus

corpus = make_corpus(2000, seed=0)
train = corpus.split("train")
print(balance_stats(train).table())

# %% Embeddings and the pruning classifier.
tokens = [review_tokens(r) for r in train.reviews]
vocab = build_vocab(tokens)
emb = train_skipgram(tokens, vocab, SkipGramConfig(d_emb=32, epochs=3))
clf = train_baseline(train, emb, vocab, BaselineConfig())

# %% One oversampling pass.
augmented = oversample_discourse(train, clf, ("and", "but", "because"), emb, vocab)
print(f"\n{len(augmented) - len(train)} reviews added")
print(balance_stats(augmented).table())

by_id = {r.id: r for r in train.reviews}
for r in augmented.reviews[len(train) : len(train) + 6]:
    parent, op, marker = parse_aug_id(r.id)
    print(f"\n[{op} at {marker!r}] {by_id[parent].text}\n  -> {r.text}")
