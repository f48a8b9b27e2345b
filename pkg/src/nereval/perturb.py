"""Seeded error injection: derive a hypothesis from gold with counted edits.

Every edit lands in a ledger whose tallies predict the alignment outcome
exactly: kept mentions become full matches, boundary shifts and merges
become partial matches, spurious mentions become wrong hits, and missed or
merge-consumed mentions become complete misses. That prediction is the whole
point of the module: it gives the evaluation pipeline an independent,
analytically known ground truth to be checked against end to end.

To keep the prediction exact rather than probabilistic, shifted spans keep a
positive overlap with their source and never touch any other gold span, a
merged span takes the type of its longer source (the one the aligner will
pair it with), and spurious spans are placed only on text regions free of
gold mentions.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Mapping

from .alignment import SpatialCounts
from .diagnostics import Diagnostic, warning
from .model import AnnotationSet, Document, EntityType, Mention, Span

_IDENTITY_CONFUSION = {t: {t: 1.0} for t in EntityType}


@dataclass(frozen=True)
class ErrorModel:
    miss_rate: float = 0.0
    spurious_rate: float = 0.0
    boundary_rate: float = 0.0
    merge_rate: float = 0.0
    merge_gap: int = 1
    boundary_max_shift: int = 3
    spurious_max_len: int = 10
    type_confusion: Mapping[EntityType, Mapping[EntityType, float]] = field(
        default_factory=lambda: _IDENTITY_CONFUSION
    )
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("miss_rate", "boundary_rate", "merge_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {rate}")
        if self.spurious_rate < 0:
            raise ValueError(f"spurious_rate must be >= 0, got {self.spurious_rate}")
        if self.merge_gap < 0 or self.boundary_max_shift < 1 or self.spurious_max_len < 1:
            raise ValueError("merge_gap must be >= 0; shift and length caps must be >= 1")
        for entity_type, row in self.type_confusion.items():
            total = sum(row.values())
            if any(p < 0 for p in row.values()) or abs(total - 1.0) > 1e-9:
                raise ValueError(f"confusion row for {entity_type} must sum to 1, got {total}")

    @classmethod
    def from_dict(cls, raw: Mapping) -> ErrorModel:
        """Build from the JSON configuration schema; absent keys keep their
        defaults and absent confusion rows stay identity."""
        confusion = {t: dict(_IDENTITY_CONFUSION[t]) for t in EntityType}
        for source_name, row in raw.get("type_confusion", {}).items():
            source = EntityType(source_name)
            confusion[source] = {EntityType(target): p for target, p in row.items()}
        known = {
            "miss_rate", "spurious_rate", "boundary_rate", "merge_rate",
            "merge_gap", "boundary_max_shift", "spurious_max_len", "seed",
        }
        unknown = set(raw) - known - {"type_confusion"}
        if unknown:
            raise ValueError(f"unknown error model keys: {sorted(unknown)}")
        kwargs = {key: raw[key] for key in known if key in raw}
        return cls(type_confusion=confusion, **kwargs)

    @classmethod
    def from_json_file(cls, path: str | Path) -> ErrorModel:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_dict(self) -> dict:
        return {
            "miss_rate": self.miss_rate,
            "spurious_rate": self.spurious_rate,
            "boundary_rate": self.boundary_rate,
            "merge_rate": self.merge_rate,
            "merge_gap": self.merge_gap,
            "boundary_max_shift": self.boundary_max_shift,
            "spurious_max_len": self.spurious_max_len,
            "seed": self.seed,
            "type_confusion": {
                s.value: {t.value: p for t, p in row.items() if p}
                for s, row in self.type_confusion.items()
            },
        }


class EditOp(Enum):
    KEPT = "kept"
    MISSED = "missed"
    BOUNDARY_SHIFTED = "boundary_shifted"
    MERGED = "merged"
    SPURIOUS = "spurious"


_SURVIVING = (EditOp.KEPT, EditOp.BOUNDARY_SHIFTED, EditOp.MERGED)


@dataclass(frozen=True)
class Edit:
    op: EditOp
    gold_indices: tuple[int, ...]  # () for spurious; (i, i+1) for a merge
    retyped: bool = False
    result: Mention | None = None

    def to_dict(self) -> dict:
        payload: dict = {"op": self.op.value, "gold_indices": list(self.gold_indices),
                         "retyped": self.retyped, "mention": None}
        if self.result is not None:
            payload["mention"] = {
                "start": self.result.span.start,
                "end": self.result.span.end,
                "type": self.result.entity_type.value,
                "surface": self.result.surface,
            }
        return payload


@dataclass(frozen=True)
class EditLedger:
    doc_id: str
    edits: tuple[Edit, ...]
    diagnostics: tuple[Diagnostic, ...] = ()

    def retyped_count(self) -> int:
        return sum(1 for e in self.edits if e.op in _SURVIVING and e.retyped)

    def to_dict(self) -> dict:
        counts = expected_counts(self)
        return {
            "edits": [e.to_dict() for e in self.edits],
            "expected_spatial": {"fm": counts.fm, "pm": counts.pm,
                                 "wh": counts.wh, "cm": counts.cm},
            "retyped": self.retyped_count(),
        }


def expected_counts(ledger: EditLedger) -> SpatialCounts:
    """Spatial counts the alignment of gold vs the perturbed hypothesis must
    produce. Each merge contributes one partial match (its covering span)
    and one complete miss (the consumed source)."""
    fm = pm = wh = cm = 0
    for edit in ledger.edits:
        if edit.op is EditOp.KEPT:
            fm += 1
        elif edit.op is EditOp.BOUNDARY_SHIFTED:
            pm += 1
        elif edit.op is EditOp.MERGED:
            pm += 1
            cm += 1
        elif edit.op is EditOp.MISSED:
            cm += 1
        elif edit.op is EditOp.SPURIOUS:
            wh += 1
    return SpatialCounts(fm=fm, pm=pm, wh=wh, cm=cm)


def _document_rng(seed: int, doc_id: str) -> random.Random:
    digest = hashlib.sha256(f"{seed}:{doc_id}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _poisson(rng: random.Random, lam: float) -> int:
    if lam <= 0:
        return 0
    threshold = math.exp(-lam)
    k = 0
    p = 1.0
    while p > threshold:
        k += 1
        p *= rng.random()
    return k - 1


def _draw_type(rng: random.Random, row: Mapping[EntityType, float]) -> EntityType:
    u = rng.random()
    cumulative = 0.0
    last = None
    for entity_type in EntityType:
        p = row.get(entity_type, 0.0)
        if p <= 0:
            continue
        last = entity_type
        cumulative += p
        if u < cumulative:
            return entity_type
    return last if last is not None else next(iter(EntityType))


def _shift_candidates(
    span: Span, others: list[Span], text_len: int, max_shift: int
) -> list[Span]:
    candidates = []
    for j in range(1, max_shift + 1):
        for ds, de in ((-j, 0), (j, 0), (0, -j), (0, j)):
            start, end = span.start + ds, span.end + de
            if start < 0 or end > text_len or start >= end:
                continue
            moved = Span(start, end)
            if moved.overlap(span) <= 0:
                continue
            if any(moved.overlap(other) > 0 for other in others):
                continue
            candidates.append(moved)
    return candidates


def _free_regions(gold_spans: list[Span], text_len: int) -> list[tuple[int, int]]:
    regions = []
    cursor = 0
    for span in gold_spans:
        if cursor < span.start:
            regions.append((cursor, span.start))
        cursor = span.end
    if cursor < text_len:
        regions.append((cursor, text_len))
    return regions


def perturb(
    doc: Document, gold: AnnotationSet, model: ErrorModel, source: str = "perturbed"
) -> tuple[AnnotationSet, EditLedger]:
    """Generate a hypothesis set from gold by injecting seeded errors.

    Per gold mention, in order: drop with miss_rate; else shift one boundary
    by 1..max_shift with boundary_rate (skipped when no legal shift exists);
    else merge with the next mention with merge_rate when it starts within
    merge_gap characters; the surviving mention is then retyped through the
    confusion matrix. Poisson(spurious_rate) extra mentions land on gold-free
    text. Deterministic given (model.seed, doc.id), whatever the processing
    order of documents.
    """
    if gold.doc_id != doc.id:
        raise ValueError(f"gold set is for {gold.doc_id!r}, not {doc.id!r}")
    rng = _document_rng(model.seed, doc.id)
    mentions = gold.mentions
    gold_spans = [m.span for m in mentions]
    text_len = len(doc.text)

    edits: list[Edit] = []
    hypothesis: list[Mention] = []
    diagnostics: list[Diagnostic] = []
    consumed: set[int] = set()

    for i, gold_mention in enumerate(mentions):
        if i in consumed:
            continue
        if rng.random() < model.miss_rate:
            edits.append(Edit(EditOp.MISSED, (i,)))
            continue

        op = EditOp.KEPT
        indices: tuple[int, ...] = (i,)
        span = gold_mention.span
        base_type = gold_mention.entity_type

        if rng.random() < model.boundary_rate:
            others = gold_spans[:i] + gold_spans[i + 1 :]
            candidates = _shift_candidates(span, others, text_len, model.boundary_max_shift)
            if candidates:
                span = rng.choice(candidates)
                op = EditOp.BOUNDARY_SHIFTED
        elif rng.random() < model.merge_rate and i + 1 < len(mentions):
            neighbor = mentions[i + 1]
            if 0 <= neighbor.span.start - span.end <= model.merge_gap:
                span = Span(span.start, neighbor.span.end)
                # the aligner pairs the covering span with the larger source
                dominant = max((gold_mention, neighbor), key=lambda m: len(m.span))
                base_type = dominant.entity_type
                indices = (i, i + 1)
                consumed.add(i + 1)
                op = EditOp.MERGED

        drawn = _draw_type(rng, model.type_confusion[base_type])
        result = Mention(span, drawn, doc.text[span.start : span.end])
        hypothesis.append(result)
        edits.append(Edit(op, indices, retyped=drawn is not base_type, result=result))

    wanted = _poisson(rng, model.spurious_rate)
    regions = _free_regions(gold_spans, text_len)
    total_free = sum(end - start for start, end in regions)
    placed = 0
    for _ in range(wanted):
        if total_free <= 0:
            break
        offset = rng.randrange(total_free)
        for start, end in regions:
            size = end - start
            if offset < size:
                position = start + offset
                length = rng.randint(1, min(model.spurious_max_len, end - position))
                span = Span(position, position + length)
                break
            offset -= size
        entity_type = rng.choice(list(EntityType))
        result = Mention(span, entity_type, doc.text[span.start : span.end])
        hypothesis.append(result)
        edits.append(Edit(EditOp.SPURIOUS, (), result=result))
        placed += 1
    if placed < wanted:
        diagnostics.append(
            warning(doc.id, "", "spurious-underflow",
                    f"no gold-free text available; placed {placed} of {wanted} spurious mentions")
        )

    ledger = EditLedger(doc.id, tuple(edits), tuple(diagnostics))
    return AnnotationSet(doc.id, source, tuple(hypothesis)), ledger
