"""Core value types: spans, mentions, documents, annotation sets, corpora.

Offsets are character offsets (Unicode code points, not bytes) into the
document text, half-open: a span ``[start, end)`` covers ``text[start:end]``.
All types are immutable after construction and safe to share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Mapping


class EntityType(Enum):
    PERSON = "Person"
    LOCATION = "Location"
    ORGANIZATION = "Organization"
    DATE = "Date"

    def __str__(self) -> str:
        return self.value


class Category(Enum):
    POLITICS = "Politics"
    SCIENCE = "Science"
    MILITARY = "Military"
    ART = "Art"
    SPORTS = "Sports"
    OTHERS = "Others"

    def __str__(self) -> str:
        return self.value


class SpanRelation(Enum):
    EXACT = "exact"
    OVERLAP = "overlap"
    DISJOINT = "disjoint"


@dataclass(frozen=True, order=True)
class Span:
    """Half-open character interval ``[start, end)``; empty spans are invalid."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start < 0:
            raise ValueError(f"span start must be non-negative, got {self.start}")
        if self.start >= self.end:
            raise ValueError(f"span must be non-empty, got [{self.start}, {self.end})")

    def __len__(self) -> int:
        return self.end - self.start

    def overlap(self, other: Span) -> int:
        """Number of characters shared with ``other`` (symmetric, >= 0)."""
        return max(0, min(self.end, other.end) - max(self.start, other.start))

    def relation(self, other: Span) -> SpanRelation:
        if self == other:
            return SpanRelation.EXACT
        if self.overlap(other) > 0:
            return SpanRelation.OVERLAP
        return SpanRelation.DISJOINT


@dataclass(frozen=True)
class Mention:
    """A typed entity occurrence: a span plus the exact text it covers."""

    span: Span
    entity_type: EntityType
    surface: str

    @property
    def sort_key(self) -> tuple[int, int]:
        return (self.span.start, self.span.end)

    def bound_to(self, text: str) -> bool:
        """True when the span fits the text and reproduces the surface."""
        return self.span.end <= len(text) and text[self.span.start : self.span.end] == self.surface


def mention(start: int, end: int, entity_type: EntityType, text: str) -> Mention:
    """Build a mention over ``text`` with the surface taken from the span."""
    span = Span(start, end)
    if end > len(text):
        raise ValueError(f"span [{start}, {end}) exceeds text of length {len(text)}")
    return Mention(span, entity_type, text[start:end])


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    category: Category

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("document id must be non-empty")
        if not self.text:
            raise ValueError(f"document {self.id!r} has empty text")


@dataclass(frozen=True)
class AnnotationSet:
    """All mentions for one document from one source (gold or a hypothesis).

    Mentions are kept sorted by (start, end); sorting is stable so callers
    may rely on construction order for ties.
    """

    doc_id: str
    source: str
    mentions: tuple[Mention, ...] = field(default=())

    def __post_init__(self) -> None:
        ordered = tuple(sorted(self.mentions, key=lambda m: m.sort_key))
        object.__setattr__(self, "mentions", ordered)

    def __len__(self) -> int:
        return len(self.mentions)

    def __iter__(self) -> Iterator[Mention]:
        return iter(self.mentions)

    def of_type(self, entity_type: EntityType) -> tuple[Mention, ...]:
        return tuple(m for m in self.mentions if m.entity_type == entity_type)

    def overlapping_pairs(self) -> list[tuple[Mention, Mention]]:
        """Pairs of mentions in this set that share at least one character."""
        pairs = []
        for i, a in enumerate(self.mentions):
            for b in self.mentions[i + 1 :]:
                if b.span.start >= a.span.end:
                    break
                pairs.append((a, b))
        return pairs


@dataclass(frozen=True)
class Corpus:
    """Documents plus their gold and hypothesis annotation sets.

    Construction does not enforce cross-references; run
    :func:`nereval.corpus.validate` to obtain diagnostics.
    """

    documents: Mapping[str, Document]
    gold: Mapping[str, AnnotationSet]
    hypotheses: Mapping[str, Mapping[str, AnnotationSet]]

    @property
    def annotators(self) -> tuple[str, ...]:
        return tuple(sorted(self.hypotheses))

    def doc_ids(self) -> tuple[str, ...]:
        return tuple(sorted(self.documents))


def sorted_mentions(mentions: Iterable[Mention]) -> tuple[Mention, ...]:
    return tuple(sorted(mentions, key=lambda m: m.sort_key))
