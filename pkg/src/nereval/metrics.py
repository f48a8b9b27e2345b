"""Precision, recall, F-measure and their full/partial/total variants.

All arithmetic is exact (integer ratios); rounding to a fixed number of
digits happens only when a value is formatted for output. A ratio with a
zero denominator is *undefined*, never silently zero, so that stratified
tables do not average in fabricated values for empty strata.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

UNDEFINED_TEXT = "—"  # em dash, printed for undefined values


@dataclass(frozen=True)
class Ratio:
    numerator: int
    denominator: int

    def __post_init__(self) -> None:
        if not 0 <= self.numerator <= max(self.denominator, 0):
            raise ValueError(f"invalid ratio {self.numerator}/{self.denominator}")

    @property
    def defined(self) -> bool:
        return self.denominator > 0

    @property
    def value(self) -> Fraction | None:
        if not self.defined:
            return None
        return Fraction(self.numerator, self.denominator)

    @classmethod
    def undefined(cls) -> Ratio:
        return cls(0, 0)

    @classmethod
    def from_fraction(cls, value: Fraction) -> Ratio:
        return cls(value.numerator, value.denominator)


@dataclass(frozen=True)
class PartialMetrics:
    """The six match-aware measures computed from one ``SpatialCounts``.

    Precision quotients share the estimated-mention denominator
    (fm + pm + wh); recall quotients share the reference denominator
    (fm + pm + cm). Totals are the sums of the full and partial parts.
    """

    pre_full: Ratio
    pre_partial: Ratio
    pre_total: Ratio
    rec_full: Ratio
    rec_partial: Ratio
    rec_total: Ratio


def precision(tp: int, fp: int) -> Ratio:
    """tp / (tp + fp); undefined when nothing was estimated."""
    return Ratio(tp, tp + fp)


def recall(tp: int, fn: int) -> Ratio:
    """tp / (tp + fn); undefined when there are no reference mentions."""
    return Ratio(tp, tp + fn)


def f_measure(p: Ratio, r: Ratio, beta: float | Fraction = 1) -> Ratio:
    """Weighted harmonic mean (1 + b^2) * p * r / (b^2 * p + r).

    Undefined when either input is undefined or both are zero.
    """
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    if not p.defined or not r.defined:
        return Ratio.undefined()
    pv, rv = p.value, r.value
    b2 = Fraction(beta) ** 2
    denominator = b2 * pv + rv
    if denominator == 0:
        return Ratio.undefined()
    return Ratio.from_fraction((1 + b2) * pv * rv / denominator)


def partial_metrics(counts) -> PartialMetrics:
    """Full/Partial/Total precision and recall from FM/PM/WH/CM counts."""
    est_total = counts.est_total
    ref_total = counts.ref_total
    return PartialMetrics(
        pre_full=Ratio(counts.fm, est_total),
        pre_partial=Ratio(counts.pm, est_total),
        pre_total=Ratio(counts.fm + counts.pm, est_total),
        rec_full=Ratio(counts.fm, ref_total),
        rec_partial=Ratio(counts.pm, ref_total),
        rec_total=Ratio(counts.fm + counts.pm, ref_total),
    )


def round_half_up(value: Fraction, digits: int) -> Fraction:
    """Round to ``digits`` decimal places, halves away from zero, exactly."""
    scale = Fraction(10) ** digits
    scaled = value * scale
    if scaled >= 0:
        units = (2 * scaled.numerator + scaled.denominator) // (2 * scaled.denominator)
    else:
        units = -((-2 * scaled.numerator + scaled.denominator) // (2 * scaled.denominator))
    return Fraction(units) / scale


def format_fixed(value: Fraction | None, digits: int) -> str:
    """Fixed-point decimal string of the half-up rounding, or an em dash."""
    if value is None:
        return UNDEFINED_TEXT
    rounded = round_half_up(value, digits)
    units = rounded.numerator * 10**digits // rounded.denominator
    sign = "-" if units < 0 else ""
    units = abs(units)
    if digits == 0:
        return f"{sign}{units}"
    whole, frac = divmod(units, 10**digits)
    return f"{sign}{whole}.{frac:0{digits}d}"
