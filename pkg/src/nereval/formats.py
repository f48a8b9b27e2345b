"""Annotation file formats: standoff (canonical), inline markup, and BIO.

Standoff is the canonical format: one file per document, UTF-8, one mention
per line as ``start<TAB>end<TAB>type<TAB>surface`` with character offsets in
decimal and lines starting with ``#`` treated as comments. The surface column
is mandatory; it is checked against the document substring so that off-by-one
offsets from any producer are caught at parse time. Tabs, newlines and
backslashes inside a surface are escaped as ``\\t``, ``\\n``, ``\\r``,
``\\\\``.

Inline markup wraps mentions directly in the text as ``[<Type> <content>]``
with a literal ``[`` escaped as ``\\[``; nesting is forbidden.

BIO is the token-per-line column format (``token<TAB>tag``, tags ``O``,
``B-X``, ``I-X`` for X in PER/LOC/ORG/DATE, blank lines between sentences).
It carries no offsets, so a text is synthesized by joining tokens with single
spaces; the original whitespace is not recoverable.

Malformed records are dropped with an ERROR diagnostic rather than aborting
the parse; callers wanting strictness promote diagnostics to failures.
"""

from __future__ import annotations

import re

from .diagnostics import Diagnostic, error, warning
from .model import AnnotationSet, EntityType, Mention, Span

STANDOFF_HEADER = "# start\tend\ttype\tsurface"

_BIO_PREFIXES = {
    "PER": EntityType.PERSON,
    "LOC": EntityType.LOCATION,
    "ORG": EntityType.ORGANIZATION,
    "DATE": EntityType.DATE,
}

_TYPE_NAMES = {t.value: t for t in EntityType}


def _escape_surface(surface: str) -> str:
    return (
        surface.replace("\\", "\\\\")
        .replace("\t", "\\t")
        .replace("\n", "\\n")
        .replace("\r", "\\r")
    )


_UNESCAPES = {"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}


def _unescape_surface(surface: str) -> str:
    out = []
    i = 0
    while i < len(surface):
        if surface[i] == "\\" and i + 1 < len(surface) and surface[i + 1] in _UNESCAPES:
            out.append(_UNESCAPES[surface[i + 1]])
            i += 2
        else:
            out.append(surface[i])
            i += 1
    return "".join(out)


def parse_standoff(
    doc_text: str, content: str, *, doc_id: str = "", source: str = ""
) -> tuple[AnnotationSet, list[Diagnostic]]:
    """Parse standoff lines against the document they annotate.

    Every returned mention satisfies surface consistency with ``doc_text``;
    lines failing any check are dropped with an ERROR diagnostic.
    """
    mentions: list[Mention] = []
    seen: set[tuple[int, int, EntityType]] = set()
    diagnostics: list[Diagnostic] = []

    def drop(lineno: int, code: str, detail: str) -> None:
        diagnostics.append(error(doc_id, f"line {lineno}", code, detail))

    for lineno, line in enumerate(content.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        columns = line.split("\t")
        if len(columns) != 4:
            drop(lineno, "bad-columns", f"expected 4 tab-separated columns, got {len(columns)}")
            continue
        raw_start, raw_end, type_label, raw_surface = columns
        try:
            start, end = int(raw_start), int(raw_end)
        except ValueError:
            drop(lineno, "bad-offset", f"non-integer offsets {raw_start!r}, {raw_end!r}")
            continue
        if start < 0 or start >= end:
            drop(lineno, "bad-span", f"invalid span [{start}, {end})")
            continue
        if end > len(doc_text):
            drop(lineno, "span-out-of-range", f"end {end} exceeds text length {len(doc_text)}")
            continue
        entity_type = _TYPE_NAMES.get(type_label)
        if entity_type is None:
            drop(lineno, "unknown-type", f"unknown entity type {type_label!r}")
            continue
        surface = _unescape_surface(raw_surface)
        actual = doc_text[start:end]
        if surface != actual:
            drop(
                lineno,
                "surface-mismatch",
                f"surface column {surface!r} != document text {actual!r}",
            )
            continue
        key = (start, end, entity_type)
        if key in seen:
            drop(lineno, "duplicate-mention", f"duplicate of [{start}, {end}) {entity_type}")
            continue
        seen.add(key)
        mentions.append(Mention(Span(start, end), entity_type, surface))

    return AnnotationSet(doc_id, source, tuple(mentions)), diagnostics


def write_standoff(annotation_set: AnnotationSet) -> str:
    """Serialize to canonical standoff text (header comment plus one line
    per mention, in (start, end) order). Re-parses to an equal set."""
    lines = [STANDOFF_HEADER]
    for m in annotation_set.mentions:
        lines.append(
            f"{m.span.start}\t{m.span.end}\t{m.entity_type.value}\t{_escape_surface(m.surface)}"
        )
    return "\n".join(lines) + "\n"


_OPEN_MARKER = re.compile(r"\[([A-Za-z]+) ")


class _Frame:
    __slots__ = ("entity_type", "plain_start", "content", "poisoned")

    def __init__(self, entity_type: EntityType | None, plain_start: int):
        self.entity_type = entity_type
        self.plain_start = plain_start
        self.content: list[str] = []
        self.poisoned = False


def parse_inline(
    marked_text: str, *, doc_id: str = "", source: str = ""
) -> tuple[str, AnnotationSet, list[Diagnostic]]:
    """Strip ``[<Type> <content>]`` markup, returning the plain text and the
    mentions whose spans index into it.

    Malformed constructs (unknown tag, nesting, unbalanced or empty regions)
    contribute their content to the plain text but produce no mention, plus
    an ERROR diagnostic.
    """
    out: list[str] = []
    stack: list[_Frame] = []
    mentions: list[Mention] = []
    diagnostics: list[Diagnostic] = []

    def emit(text: str) -> None:
        if stack:
            stack[-1].content.append(text)
        else:
            out.append(text)

    i = 0
    n = len(marked_text)
    while i < n:
        c = marked_text[i]
        if c == "\\" and i + 1 < n and marked_text[i + 1] == "[":
            emit("[")
            i += 2
            continue
        if c == "[":
            m = _OPEN_MARKER.match(marked_text, i)
            if m is None:
                diagnostics.append(
                    error(doc_id, f"offset {i}", "bad-open-marker", "expected '[<Type> '")
                )
                emit("[")
                i += 1
                continue
            tag = m.group(1)
            entity_type = _TYPE_NAMES.get(tag)
            if entity_type is None:
                diagnostics.append(
                    error(doc_id, f"offset {i}", "unknown-type", f"unknown type tag {tag!r}")
                )
            if stack:
                diagnostics.append(
                    error(doc_id, f"offset {i}", "nested-markup", "nested markup is forbidden")
                )
                for frame in stack:
                    frame.poisoned = True
            new_frame = _Frame(entity_type, len(out))
            new_frame.poisoned = bool(stack)
            stack.append(new_frame)
            i = m.end()
            continue
        if c == "]" and stack:
            frame = stack.pop()
            content = "".join(frame.content)
            if not frame.poisoned and frame.entity_type is not None:
                if not content:
                    diagnostics.append(
                        error(doc_id, f"offset {i}", "empty-mention", "empty marked region")
                    )
                else:
                    span = Span(frame.plain_start, frame.plain_start + len(content))
                    mentions.append(Mention(span, frame.entity_type, content))
            emit(content)
            i += 1
            continue
        emit(c)
        i += 1

    while stack:
        frame = stack.pop()
        diagnostics.append(
            error(doc_id, "offset end", "unbalanced-markup", "marked region never closed")
        )
        emit("".join(frame.content))

    plain_text = "".join(out)
    return plain_text, AnnotationSet(doc_id, source, tuple(mentions)), diagnostics


def write_inline(plain_text: str, annotation_set: AnnotationSet) -> str:
    """Re-insert markup into ``plain_text``; inverse of :func:`parse_inline`
    for well-formed input. Mentions must not overlap."""
    for a, b in zip(annotation_set.mentions, annotation_set.mentions[1:]):
        if b.span.start < a.span.end:
            raise ValueError("inline markup cannot represent overlapping mentions")

    def escaped(text: str) -> str:
        return text.replace("[", "\\[")

    parts: list[str] = []
    cursor = 0
    for m in annotation_set.mentions:
        parts.append(escaped(plain_text[cursor : m.span.start]))
        parts.append(f"[{m.entity_type.value} {escaped(m.surface)}]")
        cursor = m.span.end
    parts.append(escaped(plain_text[cursor:]))
    return "".join(parts)


def parse_bio(
    column_content: str, *, doc_id: str = "", source: str = ""
) -> tuple[str, AnnotationSet, list[Diagnostic]]:
    """Convert token/tag columns to a synthesized text plus mentions.

    Tokens are joined with single spaces (across sentence boundaries too).
    A maximal B/I run of one type becomes a mention; an I tag that does not
    continue a run of the same type is repaired to B with a WARNING.
    """
    text_parts: list[str] = []
    mentions: list[Mention] = []
    diagnostics: list[Diagnostic] = []
    offset = 0
    run: tuple[EntityType, int, int] | None = None  # (type, start, end)

    def close_run() -> None:
        nonlocal run
        if run is not None:
            entity_type, start, end = run
            mentions.append(Mention(Span(start, end), entity_type, ""))
            run = None

    for lineno, line in enumerate(column_content.splitlines(), start=1):
        if not line.strip():
            close_run()
            continue
        columns = line.split("\t")
        if len(columns) != 2:
            diagnostics.append(
                error(doc_id, f"line {lineno}", "bad-columns", f"expected 'token<TAB>tag': {line!r}")
            )
            continue
        token, tag = columns
        if text_parts:
            offset += 1  # the joining space
        start = offset
        offset += len(token)
        text_parts.append(token)

        if tag == "O":
            close_run()
            continue
        prefix, _, label = tag.partition("-")
        entity_type = _BIO_PREFIXES.get(label)
        if prefix not in ("B", "I") or entity_type is None:
            diagnostics.append(
                error(doc_id, f"line {lineno}", "unknown-tag", f"unknown tag {tag!r}")
            )
            close_run()
            continue
        if prefix == "I":
            if run is not None and run[0] is entity_type:
                run = (entity_type, run[1], offset)
                continue
            diagnostics.append(
                warning(
                    doc_id,
                    f"line {lineno}",
                    "orphan-continuation",
                    f"{tag} does not continue a {label} run; repaired to B-{label}",
                )
            )
        close_run()
        run = (entity_type, start, offset)

    close_run()
    text = " ".join(text_parts)
    bound = tuple(
        Mention(m.span, m.entity_type, text[m.span.start : m.span.end]) for m in mentions
    )
    return text, AnnotationSet(doc_id, source, bound), diagnostics
