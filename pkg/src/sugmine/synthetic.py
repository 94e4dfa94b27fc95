"""Synthetic four-domain review corpus used by the tests and demos.

Suggestions are built from modal-cue templates ("you should ...",
"please ...", "it would be nice to ..."); non-suggestions never contain a
cue word, so the two classes are separable. Cue templates and domain
nouns are drawn from Zipf-like distributions, so a handful of them are
rare in any given sample. Many reviews are compound sentences joined by
"and", "but" or "because".
"""

from __future__ import annotations

import numpy as np

from .corpus import DOMAINS, Dataset, Review

DOMAIN_NOUNS = {
    "hotel": ["room", "staff", "breakfast", "lobby", "bathroom", "pool", "buffet", "towel",
              "balcony", "elevator", "shower", "reception", "minibar", "carpet", "sauna", "mattress"],
    "electronics": ["camera", "battery", "lens", "screen", "charger", "warranty", "viewfinder", "speaker",
                    "cable", "remote", "keyboard", "headphone", "tripod", "sensor", "zoom", "monitor"],
    "travel": ["tour", "guide", "flight", "coach", "museum", "visa", "ticket", "beach",
               "itinerary", "ferry", "airport", "luggage", "passport", "excursion", "cruise", "hostel"],
    "software": ["app", "api", "browser", "emulator", "notification", "feed", "plugin", "dashboard",
                 "login", "menu", "sync", "backup", "widget", "database", "installer", "cursor"],
}
GENERIC_NOUNS = ["price", "location", "service", "experience", "value", "quality"]
ADJECTIVES = ["clean", "dirty", "friendly", "rude", "slow", "fast", "noisy", "quiet", "cheap", "pricey",
              "great", "awful", "small", "huge", "broken", "modern", "old", "reliable", "confusing", "lovely"]
VERBS = ["add", "fix", "improve", "upgrade", "replace", "extend", "redesign", "offer", "renew", "enlarge"]

OPINIONS = [
    "the {n} was {a}",
    "i loved the {n}",
    "the {n} is really {a}",
    "we found the {n} {a}",
    "our {n} was {a}",
    "i really liked the {n}",
    "the {n} looked {a}",
    "overall the {n} felt {a}",
]
REASONS = ["the {n} was {a}", "it is {a}", "the {n} felt {a}", "our {n} was {a}"]

# Modal-cue templates, most frequent first.
SUGGESTIONS = [
    "you should {v} the {n}",
    "please {v} the {n}",
    "they should {v} a {n}",
    "it would be nice to {v} the {n}",
    "i suggest you {v} the {n}",
    "i recommend that they {v} the {n}",
    "make sure to {v} the {n}",
    "do not forget to {v} the {n}",
    "you must {v} a {n}",
    "why not {v} a {n}",
    "management ought to {v} the {n}",
    "kindly {v} the {n}",
]

CUE_WORDS = frozenset({"should", "please", "would", "suggest", "recommend", "sure", "forget", "must", "why", "ought", "kindly"})


def _zipf(n: int, s: float) -> np.ndarray:
    w = 1.0 / np.arange(1, n + 1) ** s
    return w / w.sum()


class ReviewGenerator:
    def __init__(self, seed: int = 0, cue_skew: float = 1.2, noun_skew: float = 1.0):
        self.rng = np.random.default_rng(seed)
        self.cue_p = _zipf(len(SUGGESTIONS), cue_skew)
        self.noun_p = _zipf(16, noun_skew)

    def _pick(self, seq, p=None):
        return seq[int(self.rng.choice(len(seq), p=p))]

    def _noun(self, domain, generic_rate=0.25):
        if self.rng.random() < generic_rate:
            return self._pick(GENERIC_NOUNS)
        return self._pick(DOMAIN_NOUNS[domain], self.noun_p)

    def opinion(self, domain):
        return self._pick(OPINIONS).format(n=self._noun(domain), a=self._pick(ADJECTIVES))

    def reason(self, domain):
        return self._pick(REASONS).format(n=self._noun(domain), a=self._pick(ADJECTIVES))

    def suggestion_clause(self, domain, template=None):
        t = template or self._pick(SUGGESTIONS, self.cue_p)
        return t.format(v=self._pick(VERBS), n=self._noun(domain, generic_rate=0.0))

    def suggestion(self, domain):
        u = self.rng.random()
        s = self.suggestion_clause(domain)
        if u < 0.45:
            text = f"{self.opinion(domain)} {self._pick(['and', 'but'])} {s}"
        elif u < 0.6:
            text = f"{s} because {self.reason(domain)}"
        elif u < 0.75:
            text = f"{self.opinion(domain)} , {s}"
        else:
            text = s
        return text + self._pick([" .", " !", ""])

    def non_suggestion(self, domain):
        u = self.rng.random()
        if u < 0.4:
            text = self.opinion(domain)
        elif u < 0.75:
            text = f"{self.opinion(domain)} {self._pick(['and', 'but'])} {self.opinion(domain)}"
        else:
            text = f"{self.opinion(domain)} because {self.reason(domain)}"
        return text + self._pick([" .", " !", ""])


def make_corpus(n_reviews: int = 4000, imbalance: float = 10.0, test_fraction: float = 0.25, seed: int = 0,
                domains=DOMAINS, **gen_kw) -> Dataset:
    """Generate ``n_reviews`` reviews split evenly across ``domains``.

    Each (domain, split) cell holds roughly one suggestion per
    ``imbalance`` non-suggestions.
    """
    gen = ReviewGenerator(seed, **gen_kw)
    per_domain = n_reviews // len(domains)
    reviews = []
    for d in domains:
        n_test = int(round(per_domain * test_fraction))
        for split, n in (("train", per_domain - n_test), ("test", n_test)):
            n_sugg = max(1, int(round(n / (imbalance + 1.0))))
            labels = ["suggestion"] * n_sugg + ["non_suggestion"] * (n - n_sugg)
            order = gen.rng.permutation(n)
            for k, j in enumerate(order):
                lab = labels[j]
                text = gen.suggestion(d) if lab == "suggestion" else gen.non_suggestion(d)
                reviews.append(Review(f"{d[:3]}-{split}-{k:05d}", text, d, lab, split))
    return Dataset(tuple(reviews))
