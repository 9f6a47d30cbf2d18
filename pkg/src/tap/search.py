"""Similarity search and unique-behavior mining over labeled corpora.

The distance between two labels is the sum of the Levenshtein distances of
their lateral and longitudinal action sequences (durations excluded), which
is a metric, integer-valued, and reduces to exact sequence match at zero.
Exact-match queries are answered from a signature index; a signature seen
exactly once marks a unique behavior.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .labels import SdlLabel, level_rank, project, read_labels_jsonl


class LevelMismatchError(ValueError):
    def __init__(self, expected: str, got: str):
        super().__init__(f"hierarchy level mismatch: corpus is {expected!r}, query is {got!r}")
        self.expected = expected
        self.got = got


def levenshtein(a: Sequence[str], b: Sequence[str]) -> int:
    """Unit-cost edit distance between two token sequences."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, tok_a in enumerate(a, start=1):
        current = [i] + [0] * len(b)
        for j, tok_b in enumerate(b, start=1):
            current[j] = min(
                previous[j] + 1,
                current[j - 1] + 1,
                previous[j - 1] + (tok_a != tok_b),
            )
        previous = current
    return previous[-1]


def distance(a: SdlLabel, b: SdlLabel) -> int:
    """Behavioral distance between two same-level labels; 0 iff sequences match."""
    if a.level != b.level:
        raise LevelMismatchError(a.level, b.level)
    return levenshtein(a.lateral_labels(), b.lateral_labels()) + levenshtein(
        a.longitudinal_labels(), b.longitudinal_labels()
    )


class LabeledCorpus:
    """Searchable set of labels, all at one hierarchy level, unique per vehicle."""

    __slots__ = ("records", "level", "_index")

    def __init__(self, labels: Iterable[SdlLabel], level: str | None = None):
        records: dict[tuple[str, str], SdlLabel] = {}
        index: dict[tuple, list] = {}
        for label in labels:
            if level is None:
                level = label.level
            elif label.level != level:
                raise LevelMismatchError(level, label.level)
            if label.key in records:
                raise ValueError(f"duplicate record key: {label.key}")
            records[label.key] = label
            index.setdefault(label.signature(), []).append(label.key)
        if level is None:
            raise ValueError("labeled corpus is empty and no level was given")
        object.__setattr__(self, "records", records)
        object.__setattr__(self, "level", level)
        object.__setattr__(self, "_index", index)

    def __setattr__(self, name, value):
        raise AttributeError("LabeledCorpus is immutable")

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records.values())

    def get(self, scenario_id: str, vehicle_id: str) -> SdlLabel:
        return self.records[(str(scenario_id), str(vehicle_id))]

    def project(self, level: str) -> "LabeledCorpus":
        if level == self.level:
            return self
        return LabeledCorpus((project(label, level) for label in self), level=level)

    @classmethod
    def from_jsonl(cls, path, level: str | None = None) -> "LabeledCorpus":
        corpus = cls(read_labels_jsonl(path))
        return corpus.project(level) if level else corpus


@dataclass(frozen=True)
class SearchQuery:
    reference: SdlLabel
    d_sim: float = 0.0
    level: str | None = None

    def __post_init__(self):
        if self.d_sim < 0:
            raise ValueError("d_sim must be non-negative")

    @property
    def comparison_level(self) -> str:
        return self.level or self.reference.level


def search(corpus: LabeledCorpus, query: SearchQuery) -> list[tuple[str, str, int]]:
    """All records within ``d_sim`` of the reference, excluding the reference itself.

    ``d_sim = 0`` means exact action-sequence match (answered from the
    index); for positive radii membership uses strict ``distance < d_sim``.
    Results are sorted by (distance, scenario_id, vehicle_id).
    """
    level = query.comparison_level
    if corpus.level != level:
        raise LevelMismatchError(corpus.level, level)
    reference = query.reference
    if level_rank(reference.level) < level_rank(level):
        raise LevelMismatchError(level, reference.level)
    if reference.level != level:
        reference = project(reference, level)

    results: list[tuple[str, str, int]] = []
    if query.d_sim == 0:
        for key in corpus._index.get(reference.signature(), ()):
            if key != reference.key:
                results.append((key[0], key[1], 0))
    else:
        for label in corpus:
            if label.key == reference.key:
                continue
            d = distance(reference, label)
            if d < query.d_sim:
                results.append((label.scenario_id, label.vehicle_id, d))
    results.sort(key=lambda item: (item[2], item[0], item[1]))
    return results


def find_unique(corpus: LabeledCorpus) -> set[tuple[str, str]]:
    """Records whose exact-match similar set is empty, in one index pass."""
    return {keys[0] for keys in corpus._index.values() if len(keys) == 1}


def label_stats(corpus: LabeledCorpus) -> dict:
    """Frequency statistics for reporting.

    ``signature_counts`` sums to the record count; ``record_label_counts``
    says in how many records each action appears at least once (useful for
    rarity estimates such as the fraction of vehicles that merge).
    """
    segment_counts: dict[str, int] = {}
    record_counts: dict[str, int] = {}
    signature_counts: dict[tuple, int] = {}
    for label in corpus:
        seen = set()
        for seg in label.lateral + label.longitudinal:
            segment_counts[seg.label] = segment_counts.get(seg.label, 0) + 1
            seen.add(seg.label)
        for name in seen:
            record_counts[name] = record_counts.get(name, 0) + 1
        sig = label.signature()
        signature_counts[sig] = signature_counts.get(sig, 0) + 1
    return {
        "n_records": len(corpus),
        "level": corpus.level,
        "segment_label_counts": dict(sorted(segment_counts.items())),
        "record_label_counts": dict(sorted(record_counts.items())),
        "signature_counts": signature_counts,
    }
