"""One-to-one pairing of estimated and reference mentions, and the counts
derived from it.

The spatial taxonomy classifies every mention into exactly one bucket:

* FM (full match): an estimate whose boundaries equal a reference's.
* PM (partial match): a matched pair whose boundaries differ but overlap.
* WH (wrong hit): an estimate overlapping no reference.
* CM (complete miss): a reference overlapped by no estimate.

These reconcile with the traditional counts as ``tp = fm``, ``fp = pm + wh``
and ``fn = pm + cm``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .model import EntityType, Mention


@dataclass(frozen=True)
class MatchPair:
    ref_index: int
    est_index: int
    overlap_chars: int
    exact: bool
    type_agrees: bool


@dataclass(frozen=True)
class Alignment:
    pairs: tuple[MatchPair, ...]
    unmatched_refs: tuple[int, ...]
    unmatched_ests: tuple[int, ...]

    @property
    def ref_count(self) -> int:
        return len(self.pairs) + len(self.unmatched_refs)

    @property
    def est_count(self) -> int:
        return len(self.pairs) + len(self.unmatched_ests)

    def total_overlap(self) -> int:
        return sum(p.overlap_chars for p in self.pairs)


@dataclass(frozen=True)
class SpatialCounts:
    fm: int = 0
    pm: int = 0
    wh: int = 0
    cm: int = 0

    def __add__(self, other: SpatialCounts) -> SpatialCounts:
        return SpatialCounts(
            self.fm + other.fm, self.pm + other.pm, self.wh + other.wh, self.cm + other.cm
        )

    @property
    def est_total(self) -> int:
        return self.fm + self.pm + self.wh

    @property
    def ref_total(self) -> int:
        return self.fm + self.pm + self.cm


@dataclass(frozen=True)
class ExactCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __add__(self, other: ExactCounts) -> ExactCounts:
        return ExactCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)


@dataclass(frozen=True)
class TypedCounts:
    """tp/fp/fn on the type axis: a matched pair with the right type is a tp;
    a wrong-type pair counts fp under the estimated type and fn under the
    reference type; unmatched mentions count fp/fn under their own type."""

    overall: ExactCounts
    per_type: Mapping[EntityType, ExactCounts]

    def __add__(self, other: TypedCounts) -> TypedCounts:
        per_type = {t: self.per_type[t] + other.per_type[t] for t in EntityType}
        return TypedCounts(self.overall + other.overall, per_type)


def _check_sorted(mentions: Sequence[Mention], label: str) -> None:
    for a, b in zip(mentions, mentions[1:]):
        if a.sort_key > b.sort_key:
            raise ValueError(f"{label} mentions are not sorted by (start, end)")


def _check_disjoint(refs: Sequence[Mention]) -> None:
    for a, b in zip(refs, refs[1:]):
        if b.span.start < a.span.end:
            raise ValueError(
                f"reference mentions overlap: [{a.span.start},{a.span.end}) and "
                f"[{b.span.start},{b.span.end})"
            )


def align(refs: Sequence[Mention], ests: Sequence[Mention]) -> Alignment:
    """Pair estimated mentions with reference mentions, one-to-one.

    Pass 1 matches every estimate whose span equals a reference span (these
    become the exact pairs, so the FM count never depends on tie-breaking).
    Pass 2 greedily matches the remaining mentions by character overlap,
    largest first, ties broken by reference start then estimate start.
    Both passes are deterministic.

    Requires both lists sorted by (start, end) and an overlap-free reference
    list; raises ValueError otherwise.
    """
    _check_sorted(refs, "reference")
    _check_sorted(ests, "estimated")
    _check_disjoint(refs)

    ref_used = [False] * len(refs)
    est_used = [False] * len(ests)
    pairs: list[MatchPair] = []

    # Pass 1: exact span matches. Reference spans are distinct (disjointness),
    # so each estimate can exact-match at most one reference.
    by_span = {r.span: i for i, r in enumerate(refs)}
    for j, est in enumerate(ests):
        i = by_span.get(est.span)
        if i is None or ref_used[i]:
            continue
        ref_used[i] = True
        est_used[j] = True
        pairs.append(
            MatchPair(i, j, len(est.span), True, refs[i].entity_type == est.entity_type)
        )

    # Pass 2: greedy on the remaining overlap candidates.
    candidates = []
    for i, ref in enumerate(refs):
        if ref_used[i]:
            continue
        for j, est in enumerate(ests):
            if est_used[j]:
                continue
            shared = ref.span.overlap(est.span)
            if shared > 0:
                candidates.append((-shared, ref.span.start, est.span.start, i, j))
    candidates.sort()
    for neg_shared, _, _, i, j in candidates:
        if ref_used[i] or est_used[j]:
            continue
        ref_used[i] = True
        est_used[j] = True
        pairs.append(
            MatchPair(i, j, -neg_shared, False, refs[i].entity_type == ests[j].entity_type)
        )

    pairs.sort(key=lambda p: p.ref_index)
    return Alignment(
        pairs=tuple(pairs),
        unmatched_refs=tuple(i for i, used in enumerate(ref_used) if not used),
        unmatched_ests=tuple(j for j, used in enumerate(est_used) if not used),
    )


def spatial_counts(alignment: Alignment) -> SpatialCounts:
    fm = sum(1 for p in alignment.pairs if p.exact)
    return SpatialCounts(
        fm=fm,
        pm=len(alignment.pairs) - fm,
        wh=len(alignment.unmatched_ests),
        cm=len(alignment.unmatched_refs),
    )


def exact_counts(alignment: Alignment) -> ExactCounts:
    tp = sum(1 for p in alignment.pairs if p.exact)
    return ExactCounts(tp=tp, fp=alignment.est_count - tp, fn=alignment.ref_count - tp)


def typed_counts(
    alignment: Alignment, refs: Sequence[Mention], ests: Sequence[Mention]
) -> TypedCounts:
    overall = [0, 0, 0]
    per_type = {t: [0, 0, 0] for t in EntityType}
    for p in alignment.pairs:
        ref_type = refs[p.ref_index].entity_type
        est_type = ests[p.est_index].entity_type
        if ref_type == est_type:
            overall[0] += 1
            per_type[ref_type][0] += 1
        else:
            overall[1] += 1
            per_type[est_type][1] += 1
            overall[2] += 1
            per_type[ref_type][2] += 1
    for j in alignment.unmatched_ests:
        overall[1] += 1
        per_type[ests[j].entity_type][1] += 1
    for i in alignment.unmatched_refs:
        overall[2] += 1
        per_type[refs[i].entity_type][2] += 1
    return TypedCounts(
        overall=ExactCounts(*overall),
        per_type={t: ExactCounts(*v) for t, v in per_type.items()},
    )
