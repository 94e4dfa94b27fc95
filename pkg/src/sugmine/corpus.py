"""Review records, dataset ingestion and class-balance statistics."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

DOMAINS = ("hotel", "electronics", "travel", "software")
LABELS = ("suggestion", "non_suggestion")
SPLITS = ("train", "test")
PROVENANCES = ("original", "swap_aug", "crop_aug")

FIELDS = ("id", "text", "domain", "label", "split", "provenance")


class DataError(ValueError):
    """Malformed or inconsistent input data."""


@dataclass(frozen=True)
class Review:
    id: str
    text: str
    domain: str
    label: str
    split: str = "train"
    provenance: str = "original"

    def __post_init__(self):
        if not self.text.strip():
            raise DataError(f"review {self.id!r}: empty text")
        if self.domain not in DOMAINS:
            raise DataError(f"review {self.id!r}: unknown domain {self.domain!r}")
        if self.label not in LABELS:
            raise DataError(f"review {self.id!r}: unknown label {self.label!r}")
        if self.split not in SPLITS:
            raise DataError(f"review {self.id!r}: unknown split {self.split!r}")
        if self.provenance not in PROVENANCES:
            raise DataError(f"review {self.id!r}: unknown provenance {self.provenance!r}")
        if self.provenance != "original" and self.split != "train":
            raise DataError(f"review {self.id!r}: augmented review outside the train split")

    @property
    def is_suggestion(self) -> bool:
        return self.label == "suggestion"


@dataclass(frozen=True)
class Dataset:
    reviews: tuple[Review, ...]
    domains: frozenset = field(default=frozenset())

    def __post_init__(self):
        reviews = tuple(self.reviews)
        object.__setattr__(self, "reviews", reviews)
        seen = set()
        for r in reviews:
            if r.id in seen:
                raise DataError(f"duplicate review id {r.id!r}")
            seen.add(r.id)
        present = frozenset(r.domain for r in reviews)
        domains = frozenset(self.domains) | present
        unknown = domains - set(DOMAINS)
        if unknown:
            raise DataError(f"unknown domains {sorted(unknown)}")
        object.__setattr__(self, "domains", domains)

    def __len__(self):
        return len(self.reviews)

    def __iter__(self):
        return iter(self.reviews)

    def split(self, name: str) -> "Dataset":
        return Dataset(tuple(r for r in self.reviews if r.split == name))

    def filter(self, pred) -> "Dataset":
        return Dataset(tuple(r for r in self.reviews if pred(r)))

    def to_jsonl(self) -> str:
        return "".join(json.dumps(asdict(r), ensure_ascii=False) + "\n" for r in self.reviews)

    def content_hash(self) -> str:
        return hashlib.sha256(self.to_jsonl().encode("utf-8")).hexdigest()


def _review_from_record(rec: dict, where: str) -> Review:
    for key in ("text", "domain", "label"):
        if key not in rec or rec[key] is None:
            raise DataError(f"{where}: missing field {key!r}")
    rid = rec.get("id")
    if rid is None or str(rid) == "":
        raise DataError(f"{where}: missing field 'id'")
    split = rec.get("split") or "train"
    provenance = rec.get("provenance") or "original"
    try:
        return Review(
            id=str(rid),
            text=str(rec["text"]),
            domain=str(rec["domain"]),
            label=str(rec["label"]),
            split=str(split),
            provenance=str(provenance),
        )
    except DataError as exc:
        raise DataError(f"{where}: {exc}") from None


def load_dataset(path, format: str | None = None) -> Dataset:
    """Load reviews from a JSONL or CSV file.

    The split column is optional and defaults to ``train``. Any malformed
    row raises :class:`DataError`; nothing is skipped.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such dataset file: {path}")
    if format is None:
        format = "csv" if path.suffix.lower() == ".csv" else "jsonl"
    if format not in ("csv", "jsonl"):
        raise DataError(f"unsupported format {format!r}")

    reviews = []
    with path.open(encoding="utf-8", newline="") as fh:
        if format == "jsonl":
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise DataError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
                if not isinstance(rec, dict):
                    raise DataError(f"{path}:{lineno}: expected an object")
                reviews.append(_review_from_record(rec, f"{path}:{lineno}"))
        else:
            reader = csv.DictReader(fh)
            for lineno, rec in enumerate(reader, 2):
                reviews.append(_review_from_record(rec, f"{path}:{lineno}"))
    return Dataset(tuple(reviews))


def save_dataset(d: Dataset, path, format: str = "jsonl") -> None:
    path = Path(path)
    if format == "jsonl":
        path.write_text(d.to_jsonl(), encoding="utf-8")
    elif format == "csv":
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=FIELDS)
            writer.writeheader()
            for r in d.reviews:
                writer.writerow(asdict(r))
    else:
        raise DataError(f"unsupported format {format!r}")


@dataclass(frozen=True)
class ClassCounts:
    suggestion_count: int
    non_suggestion_count: int

    @property
    def ratio(self) -> float:
        if self.non_suggestion_count == 0:
            if self.suggestion_count == 0:
                return 0.0
            raise ZeroDivisionError("suggestion ratio undefined: no non-suggestions")
        return self.suggestion_count / self.non_suggestion_count

    @property
    def total(self) -> int:
        return self.suggestion_count + self.non_suggestion_count


class BalanceStats(dict):
    """Mapping ``(domain, split) -> ClassCounts``."""

    def ratio(self, domain: str, split: str = "train") -> float:
        return self[(domain, split)].ratio

    def table(self) -> str:
        rows = []
        for (domain, split), c in sorted(self.items()):
            try:
                ratio = f"{c.ratio:.2f}"
            except ZeroDivisionError:
                ratio = "inf"
            rows.append(f"{domain.title()} {split.title()}  {c.suggestion_count}/{c.non_suggestion_count} ({ratio})")
        return "\n".join(rows)


def balance_stats(d: Dataset) -> BalanceStats:
    counts: dict = {}
    for r in d.reviews:
        s, n = counts.get((r.domain, r.split), (0, 0))
        if r.is_suggestion:
            s += 1
        else:
            n += 1
        counts[(r.domain, r.split)] = (s, n)
    return BalanceStats({k: ClassCounts(*v) for k, v in counts.items()})


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def stratified_subsample(d: Dataset, fraction: float, seed: int) -> Dataset:
    """Keep ``fraction`` of every (domain, label) cell, rounded half-up.

    Non-empty cells keep at least one review. Original order is preserved.
    """
    if not (0.0 < fraction <= 1.0):
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    if fraction == 1.0:
        return d
    cells: dict = {}
    for i, r in enumerate(d.reviews):
        cells.setdefault((r.domain, r.label), []).append(i)
    rng = np.random.default_rng(seed)
    keep = set()
    for key in sorted(cells):
        idx = cells[key]
        n = max(1, _round_half_up(len(idx) * fraction))
        chosen = rng.choice(len(idx), size=n, replace=False)
        keep.update(idx[j] for j in chosen)
    return Dataset(tuple(r for i, r in enumerate(d.reviews) if i in keep), d.domains)
