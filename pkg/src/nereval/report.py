"""Per-document evaluation, stratified aggregation, and table rendering.

Counts are summed within each stratum (annotator x scope) before any
division, i.e. micro-averaging: the Overall row is exactly what one would
get by concatenating every document's mention lists. Per-entity-type strata
restrict both the reference and the estimated list to the target type before
aligning; per-category strata group whole documents.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .alignment import (
    Alignment,
    ExactCounts,
    SpatialCounts,
    TypedCounts,
    align,
    exact_counts,
    spatial_counts,
    typed_counts,
)
from .metrics import Ratio, format_fixed, partial_metrics, precision, recall, round_half_up
from .model import AnnotationSet, Category, Corpus, Document, EntityType

SPATIAL_MEASURES = ("pre_full", "pre_partial", "pre_total", "rec_full", "rec_partial", "rec_total")
TYPICAL_MEASURES = ("precision", "recall")
SPATIAL_TABLE_COLUMNS = ("pre_full", "pre_partial", "rec_full", "rec_partial")
_ABBREV = {"pre_full": "FP", "pre_partial": "PP", "rec_full": "FR", "rec_partial": "PR",
           "precision": "Precision", "recall": "Recall"}

ALL_SCOPES = ("overall", "types", "categories")
_TYPE_ORDER = {t.value: i for i, t in enumerate(EntityType)}
_CATEGORY_ORDER = {c.value: i for i, c in enumerate(Category)}


class Scope(Enum):
    OVERALL = "overall"
    TYPE = "type"
    CATEGORY = "category"


@dataclass(frozen=True)
class StratumKey:
    annotator: str
    scope: Scope
    subset: str | None = None  # EntityType value or Category value

    @property
    def label(self) -> str:
        if self.scope is Scope.OVERALL:
            return "Overall"
        if self.scope is Scope.TYPE:
            return f"Type={self.subset}"
        return f"Category={self.subset}"

    @property
    def order_key(self) -> tuple[int, int]:
        if self.scope is Scope.OVERALL:
            return (0, 0)
        if self.scope is Scope.TYPE:
            return (1, _TYPE_ORDER[self.subset])
        return (2, _CATEGORY_ORDER[self.subset])

    @classmethod
    def from_label(cls, annotator: str, label: str) -> StratumKey:
        if label == "Overall":
            return cls(annotator, Scope.OVERALL)
        kind, _, subset = label.partition("=")
        if kind == "Type" and subset in _TYPE_ORDER:
            return cls(annotator, Scope.TYPE, subset)
        if kind == "Category" and subset in _CATEGORY_ORDER:
            return cls(annotator, Scope.CATEGORY, subset)
        raise ValueError(f"unknown stratum label {label!r}")


@dataclass(frozen=True)
class StratumCounts:
    spatial: SpatialCounts
    exact: ExactCounts
    typed: ExactCounts  # tp/fp/fn on the type axis for this stratum

    def __add__(self, other: StratumCounts) -> StratumCounts:
        return StratumCounts(
            self.spatial + other.spatial, self.exact + other.exact, self.typed + other.typed
        )


@dataclass(frozen=True)
class DocumentCounts:
    """Evaluation record for one (annotator, document) pair."""

    annotator: str
    doc_id: str
    category: Category
    spatial: SpatialCounts
    exact: ExactCounts
    typed: TypedCounts
    per_type_spatial: Mapping[EntityType, SpatialCounts]


@dataclass(frozen=True)
class CountTable:
    entries: Mapping[StratumKey, StratumCounts]

    def annotators(self) -> tuple[str, ...]:
        return tuple(sorted({k.annotator for k in self.entries}))

    def stratum_labels(self) -> tuple[str, ...]:
        keys = {(k.order_key, k.label) for k in self.entries}
        return tuple(label for _, label in sorted(keys))


@dataclass
class MetricReport:
    values: dict[StratumKey, dict[str, Ratio]]
    digits: int = 2

    def annotators(self) -> tuple[str, ...]:
        return tuple(sorted({k.annotator for k in self.values}))

    def stratum_labels(self) -> tuple[str, ...]:
        keys = {(k.order_key, k.label) for k in self.values}
        return tuple(label for _, label in sorted(keys))


def evaluate_document(
    doc: Document, gold_set: AnnotationSet, est_set: AnnotationSet
) -> DocumentCounts:
    """Align one hypothesis against gold and collect every count the report
    strata need (overall, per-type spatial, and typed tallies)."""
    alignment = align(gold_set.mentions, est_set.mentions)
    per_type_spatial = {}
    for entity_type in EntityType:
        type_alignment = align(gold_set.of_type(entity_type), est_set.of_type(entity_type))
        per_type_spatial[entity_type] = spatial_counts(type_alignment)
    return DocumentCounts(
        annotator=est_set.source,
        doc_id=doc.id,
        category=doc.category,
        spatial=spatial_counts(alignment),
        exact=exact_counts(alignment),
        typed=typed_counts(alignment, gold_set.mentions, est_set.mentions),
        per_type_spatial=per_type_spatial,
    )


def _exact_from_spatial(counts: SpatialCounts) -> ExactCounts:
    return ExactCounts(tp=counts.fm, fp=counts.pm + counts.wh, fn=counts.pm + counts.cm)


def aggregate(
    records: Iterable[DocumentCounts], scopes: Sequence[str] = ALL_SCOPES
) -> CountTable:
    """Sum per-document counts into the requested strata.

    Records may arrive in any order (the merge is commutative); duplicate
    (annotator, document) records are rejected.
    """
    unknown = set(scopes) - set(ALL_SCOPES)
    if unknown:
        raise ValueError(f"unknown strata {sorted(unknown)}; expected subset of {ALL_SCOPES}")
    entries: dict[StratumKey, StratumCounts] = {}
    seen: set[tuple[str, str]] = set()

    def add(key: StratumKey, counts: StratumCounts) -> None:
        existing = entries.get(key)
        entries[key] = counts if existing is None else existing + counts

    for record in sorted(records, key=lambda r: (r.annotator, r.doc_id)):
        identity = (record.annotator, record.doc_id)
        if identity in seen:
            raise ValueError(f"duplicate evaluation record for {identity}")
        seen.add(identity)
        overall = StratumCounts(record.spatial, record.exact, record.typed.overall)
        if "overall" in scopes:
            add(StratumKey(record.annotator, Scope.OVERALL), overall)
        if "types" in scopes:
            for entity_type in EntityType:
                type_spatial = record.per_type_spatial[entity_type]
                add(
                    StratumKey(record.annotator, Scope.TYPE, entity_type.value),
                    StratumCounts(
                        type_spatial,
                        _exact_from_spatial(type_spatial),
                        record.typed.per_type[entity_type],
                    ),
                )
        if "categories" in scopes:
            add(StratumKey(record.annotator, Scope.CATEGORY, record.category.value), overall)
    return CountTable(entries)


def evaluate_corpus(
    corpus: Corpus,
    annotators: Sequence[str] | None = None,
    scopes: Sequence[str] = ALL_SCOPES,
    jobs: int = 1,
) -> CountTable:
    """Evaluate every selected annotator over every document.

    A document the annotator produced no file for counts as an empty
    hypothesis (everything becomes a complete miss). With ``jobs`` > 1
    documents are evaluated concurrently; the result is identical to the
    sequential one because aggregation is order-independent.
    """
    selected = list(annotators) if annotators is not None else list(corpus.annotators)
    missing = [a for a in selected if a not in corpus.hypotheses]
    if missing:
        raise ValueError(f"unknown annotator(s): {missing}")

    tasks = []
    for annotator in selected:
        sets = corpus.hypotheses[annotator]
        for doc_id in sorted(corpus.documents):
            doc = corpus.documents[doc_id]
            est = sets.get(doc_id) or AnnotationSet(doc_id, annotator, ())
            tasks.append((doc, corpus.gold[doc_id], est))

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(lambda t: evaluate_document(*t), tasks))
    else:
        records = [evaluate_document(*task) for task in tasks]
    return aggregate(records, scopes)


def metric_report(table: CountTable, digits: int = 2) -> MetricReport:
    """Compute every measure for every stratum of a count table."""
    values: dict[StratumKey, dict[str, Ratio]] = {}
    for key, counts in table.entries.items():
        pm = partial_metrics(counts.spatial)
        values[key] = {
            "pre_full": pm.pre_full,
            "pre_partial": pm.pre_partial,
            "pre_total": pm.pre_total,
            "rec_full": pm.rec_full,
            "rec_partial": pm.rec_partial,
            "rec_total": pm.rec_total,
            "precision": precision(counts.typed.tp, counts.typed.fp),
            "recall": recall(counts.typed.tp, counts.typed.fn),
        }
    return MetricReport(values, digits)


def _layout_measures(layout: str, table_only: bool) -> tuple[str, ...]:
    if layout == "spatial":
        return SPATIAL_TABLE_COLUMNS if table_only else SPATIAL_MEASURES
    if layout == "typical":
        return TYPICAL_MEASURES
    raise ValueError(f"unknown layout {layout!r}; expected 'spatial' or 'typical'")


def _cell(report: MetricReport, annotator: str, label: str, measure: str) -> Fraction | None:
    ratios = report.values.get(StratumKey.from_label(annotator, label))
    if ratios is None or measure not in ratios:
        return None
    return ratios[measure].value


def render(report: MetricReport, layout: str, fmt: str) -> bytes:
    """Render a report as ``csv``, ``json`` or ``markdown`` bytes.

    The spatial table layout carries the four per-annotator columns
    FP/PP/FR/PR; JSON additionally carries the total measures. Undefined
    values render as an em dash (csv/markdown) or null (json).
    """
    if fmt == "json":
        return _render_json(report, layout)
    if fmt == "csv":
        return _render_csv(report, layout)
    if fmt == "markdown":
        return _render_markdown(report, layout)
    raise ValueError(f"unknown format {fmt!r}; expected csv, json or markdown")


def _render_json(report: MetricReport, layout: str) -> bytes:
    measures = _layout_measures(layout, table_only=False)
    payload: dict[str, dict[str, dict[str, float | None]]] = {}
    for annotator in report.annotators():
        strata: dict[str, dict[str, float | None]] = {}
        for label in report.stratum_labels():
            row = {}
            for measure in measures:
                value = _cell(report, annotator, label, measure)
                row[measure] = None if value is None else float(round_half_up(value, report.digits))
            strata[label] = row
        payload[annotator] = strata
    return (json.dumps(payload, sort_keys=True, indent=2) + "\n").encode("utf-8")


def _render_csv(report: MetricReport, layout: str) -> bytes:
    measures = _layout_measures(layout, table_only=True)
    annotators = report.annotators()
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["stratum"] + [f"{a}:{m}" for a in annotators for m in measures])
    for label in report.stratum_labels():
        row = [label]
        for annotator in annotators:
            for measure in measures:
                row.append(format_fixed(_cell(report, annotator, label, measure), report.digits))
        writer.writerow(row)
    return buffer.getvalue().encode("utf-8")


def _render_markdown(report: MetricReport, layout: str) -> bytes:
    measures = _layout_measures(layout, table_only=True)
    annotators = report.annotators()
    if len(annotators) == 1:
        heads = [_ABBREV[m] for m in measures]
    else:
        heads = [f"{a} {_ABBREV[m]}" for a in annotators for m in measures]
    lines = [
        "| Stratum | " + " | ".join(heads) + " |",
        "| --- |" + " --- |" * len(heads),
    ]
    for label in report.stratum_labels():
        cells = []
        for annotator in annotators:
            for measure in measures:
                cells.append(format_fixed(_cell(report, annotator, label, measure), report.digits))
        lines.append("| " + label + " | " + " | ".join(cells) + " |")
    return ("\n".join(lines) + "\n").encode("utf-8")


def parse_report_json(data: bytes | str) -> MetricReport:
    """Parse a JSON rendering back into a report (at rendered precision)."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    payload = json.loads(data)
    values: dict[StratumKey, dict[str, Ratio]] = {}
    for annotator, strata in payload.items():
        for label, measures in strata.items():
            key = StratumKey.from_label(annotator, label)
            row = {}
            for measure, number in measures.items():
                if number is None:
                    row[measure] = Ratio.undefined()
                else:
                    row[measure] = Ratio.from_fraction(Fraction(str(number)))
            values[key] = row
    return MetricReport(values)


def parse_report_csv(data: bytes | str) -> MetricReport:
    """Parse a CSV rendering back into a report (at rendered precision)."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    reader = csv.reader(io.StringIO(data))
    header = next(reader)
    columns = []
    for head in header[1:]:
        annotator, _, measure = head.rpartition(":")
        columns.append((annotator, measure))
    values: dict[StratumKey, dict[str, Ratio]] = {}
    from .metrics import UNDEFINED_TEXT

    for row in reader:
        label = row[0]
        for (annotator, measure), cell in zip(columns, row[1:]):
            key = StratumKey.from_label(annotator, label)
            ratio = Ratio.undefined() if cell == UNDEFINED_TEXT else Ratio.from_fraction(Fraction(cell))
            values.setdefault(key, {})[measure] = ratio
    return MetricReport(values)


def diff(a: MetricReport, b: MetricReport) -> dict[StratumKey, dict[str, Fraction | None]]:
    """Per-stratum, per-measure deltas ``b - a``; undefined cells propagate.

    Raises ValueError when the two reports do not cover the same strata and
    measures.
    """
    if set(a.values) != set(b.values):
        raise ValueError("reports cover different strata")
    deltas: dict[StratumKey, dict[str, Fraction | None]] = {}
    for key, row_a in a.values.items():
        row_b = b.values[key]
        if set(row_a) != set(row_b):
            raise ValueError(f"reports carry different measures for {key.label!r}")
        deltas[key] = {}
        for measure, ratio_a in row_a.items():
            ratio_b = row_b[measure]
            if ratio_a.defined and ratio_b.defined:
                deltas[key][measure] = ratio_b.value - ratio_a.value
            else:
                deltas[key][measure] = None
    return deltas


def render_diff(
    deltas: Mapping[StratumKey, Mapping[str, Fraction | None]], digits: int, fmt: str
) -> bytes:
    """Render diff deltas, signed, in the same three formats as reports."""
    annotators = sorted({k.annotator for k in deltas})
    labels = [l for _, l in sorted({(k.order_key, k.label) for k in deltas})]
    measures = sorted({m for row in deltas.values() for m in row})
    by_key = {(k.annotator, k.label): row for k, row in deltas.items()}

    def cell(annotator: str, label: str, measure: str) -> Fraction | None:
        row = by_key.get((annotator, label))
        if row is None:
            return None
        return row.get(measure)

    if fmt == "json":
        payload = {
            annotator: {
                label: {
                    m: (None if cell(annotator, label, m) is None
                        else float(round_half_up(cell(annotator, label, m), digits)))
                    for m in measures
                }
                for label in labels
            }
            for annotator in annotators
        }
        return (json.dumps(payload, sort_keys=True, indent=2) + "\n").encode("utf-8")

    def formatted(annotator: str, label: str, measure: str) -> str:
        value = cell(annotator, label, measure)
        text = format_fixed(value, digits)
        if value is not None and value > 0:
            text = "+" + text
        return text

    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["stratum"] + [f"{a}:{m}" for a in annotators for m in measures])
        for label in labels:
            writer.writerow(
                [label] + [formatted(a, label, m) for a in annotators for m in measures]
            )
        return buffer.getvalue().encode("utf-8")
    if fmt == "markdown":
        heads = [f"{a} {m}" if len(annotators) > 1 else m for a in annotators for m in measures]
        lines = ["| Stratum | " + " | ".join(heads) + " |", "| --- |" + " --- |" * len(heads)]
        for label in labels:
            cells = [formatted(a, label, m) for a in annotators for m in measures]
            lines.append("| " + label + " | " + " | ".join(cells) + " |")
        return ("\n".join(lines) + "\n").encode("utf-8")
    raise ValueError(f"unknown format {fmt!r}; expected csv, json or markdown")
