"""Corpus loading, validation and statistics.

On-disk layout::

    <root>/manifest.json       {"<doc id>": {"text": <path>, "category": <name>}, ...}
    <root>/gold/<doc id>.tsv   standoff gold annotations, one file per document
    <root>/hyp/<annotator>/<doc id>.tsv

Text paths are relative to the corpus root. Structural problems (missing
manifest, unreadable files) raise :class:`CorpusLayoutError`; data problems
come back as diagnostics.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .diagnostics import Diagnostic, Severity, error, warning
from .formats import parse_standoff, write_standoff
from .model import AnnotationSet, Category, Corpus, Document, EntityType

GOLD_SOURCE = "gold"

_CATEGORY_NAMES = {c.value: c for c in Category}


class CorpusLayoutError(Exception):
    """The corpus directory cannot be read at all (exit code 2 territory)."""


class CorpusValidationError(Exception):
    """An operation refused to run because validation found errors."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__(f"{len(diagnostics)} diagnostic(s), run validate for details")


@dataclass(frozen=True)
class CorpusStats:
    documents_by_category: Mapping[Category, int]
    mentions_by_type: Mapping[EntityType, int]
    mentions_by_category_and_type: Mapping[tuple[Category, EntityType], int] = field(
        default_factory=dict
    )

    @property
    def total_documents(self) -> int:
        return sum(self.documents_by_category.values())

    @property
    def total_mentions(self) -> int:
        return sum(self.mentions_by_type.values())


def load_corpus(root: str | Path) -> tuple[Corpus, list[Diagnostic]]:
    """Read a corpus directory; returns the corpus plus parse diagnostics.

    Documents with an unusable manifest entry are excluded (with an ERROR
    diagnostic); semantic cross-checks are left to :func:`validate`.
    """
    root = Path(root)
    manifest_path = root / "manifest.json"
    if not manifest_path.is_file():
        raise CorpusLayoutError(f"missing manifest: {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CorpusLayoutError(f"unreadable manifest {manifest_path}: {exc}") from exc
    if not isinstance(manifest, dict):
        raise CorpusLayoutError(f"manifest must be an object mapping doc id to entry")

    diagnostics: list[Diagnostic] = []
    documents: dict[str, Document] = {}
    gold: dict[str, AnnotationSet] = {}
    hypotheses: dict[str, dict[str, AnnotationSet]] = {}

    for doc_id in sorted(manifest):
        entry = manifest[doc_id]
        if not isinstance(entry, dict) or "text" not in entry or "category" not in entry:
            diagnostics.append(
                error(doc_id, "manifest.json", "bad-manifest-entry",
                      "entry must carry 'text' and 'category'")
            )
            continue
        category = _CATEGORY_NAMES.get(entry["category"])
        if category is None:
            diagnostics.append(
                error(doc_id, "manifest.json", "unknown-category",
                      f"unknown category {entry['category']!r}")
            )
            continue
        text_path = root / entry["text"]
        try:
            text = text_path.read_text(encoding="utf-8")
        except OSError as exc:
            raise CorpusLayoutError(f"unreadable text file {text_path}: {exc}") from exc
        if not text:
            diagnostics.append(error(doc_id, str(text_path), "empty-text", "document text is empty"))
            continue
        documents[doc_id] = Document(doc_id, text, category)

        gold_path = root / "gold" / f"{doc_id}.tsv"
        if gold_path.is_file():
            annotation_set, parse_diags = parse_standoff(
                text, gold_path.read_text(encoding="utf-8"), doc_id=doc_id, source=GOLD_SOURCE
            )
            gold[doc_id] = annotation_set
            diagnostics.extend(parse_diags)

    hyp_root = root / "hyp"
    if hyp_root.is_dir():
        for annotator_dir in sorted(p for p in hyp_root.iterdir() if p.is_dir()):
            annotator = annotator_dir.name
            sets: dict[str, AnnotationSet] = {}
            for tsv in sorted(annotator_dir.glob("*.tsv")):
                doc_id = tsv.stem
                doc = documents.get(doc_id)
                if doc is None:
                    diagnostics.append(
                        error(doc_id, str(tsv), "unbound-set",
                              f"annotation file for unknown document {doc_id!r}")
                    )
                    continue
                annotation_set, parse_diags = parse_standoff(
                    doc.text, tsv.read_text(encoding="utf-8"), doc_id=doc_id, source=annotator
                )
                sets[doc_id] = annotation_set
                diagnostics.extend(parse_diags)
            hypotheses[annotator] = sets

    return Corpus(documents, gold, hypotheses), diagnostics


def validate(corpus: Corpus) -> list[Diagnostic]:
    """Cross-check a corpus: gold overlaps and unbound or missing sets are
    errors, hypothesis overlaps are warnings."""
    diagnostics: list[Diagnostic] = []

    def check_set(annotation_set: AnnotationSet, overlap_severity: Severity) -> None:
        doc = corpus.documents.get(annotation_set.doc_id)
        if doc is None:
            diagnostics.append(
                error(annotation_set.doc_id, "", "unbound-set",
                      f"annotation set from {annotation_set.source!r} matches no document")
            )
            return
        for m in annotation_set.mentions:
            if not m.bound_to(doc.text):
                diagnostics.append(
                    error(doc.id, f"offset {m.span.start}", "surface-mismatch",
                          f"{annotation_set.source!r} mention surface {m.surface!r} does not "
                          f"match the document text")
                )
        for a, b in annotation_set.overlapping_pairs():
            make = error if overlap_severity is Severity.ERROR else warning
            code = "gold-overlap" if overlap_severity is Severity.ERROR else "hyp-overlap"
            diagnostics.append(
                make(doc.id, f"offset {a.span.start}", code,
                     f"{annotation_set.source!r} mentions [{a.span.start},{a.span.end}) and "
                     f"[{b.span.start},{b.span.end}) overlap")
            )

    for doc_id in sorted(corpus.documents):
        if doc_id not in corpus.gold:
            diagnostics.append(
                error(doc_id, "", "missing-gold", "document has no gold annotation set")
            )
    for doc_id in sorted(corpus.gold):
        check_set(corpus.gold[doc_id], Severity.ERROR)
    for annotator in sorted(corpus.hypotheses):
        for doc_id in sorted(corpus.hypotheses[annotator]):
            check_set(corpus.hypotheses[annotator][doc_id], Severity.WARNING)

    return diagnostics


def corpus_stats(corpus: Corpus) -> CorpusStats:
    """Documents per category and gold mentions per entity type.

    Refuses (raising :class:`CorpusValidationError`) when validation reports
    errors, so counts are never taken over a broken corpus.
    """
    diagnostics = [d for d in validate(corpus) if d.severity is Severity.ERROR]
    if diagnostics:
        raise CorpusValidationError(diagnostics)

    documents_by_category = {c: 0 for c in Category}
    mentions_by_type = {t: 0 for t in EntityType}
    by_category_and_type = {(c, t): 0 for c in Category for t in EntityType}
    for doc in corpus.documents.values():
        documents_by_category[doc.category] += 1
        for m in corpus.gold[doc.id].mentions:
            mentions_by_type[m.entity_type] += 1
            by_category_and_type[(doc.category, m.entity_type)] += 1
    return CorpusStats(documents_by_category, mentions_by_type, by_category_and_type)


def corpus_digest(corpus: Corpus) -> str:
    """SHA-256 over the canonical serialization of the whole corpus.

    Pins the data version inside run manifests; independent of on-disk
    whitespace or file ordering.
    """
    digest = hashlib.sha256()

    def feed(*parts: str) -> None:
        for part in parts:
            digest.update(part.encode("utf-8"))
            digest.update(b"\x00")

    for doc_id in sorted(corpus.documents):
        doc = corpus.documents[doc_id]
        feed("doc", doc_id, doc.category.value, doc.text)
        if doc_id in corpus.gold:
            feed("gold", doc_id, write_standoff(corpus.gold[doc_id]))
    for annotator in sorted(corpus.hypotheses):
        for doc_id in sorted(corpus.hypotheses[annotator]):
            feed("hyp", annotator, doc_id, write_standoff(corpus.hypotheses[annotator][doc_id]))
    return digest.hexdigest()
