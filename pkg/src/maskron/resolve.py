"""Arbitration between detectors.

Detections under their type's threshold are dropped first; the survivors are
swept greedily in a fixed total order and a detection is kept when it does
not overlap anything already kept.  The order is: higher confidence, longer
span, earlier entry in the precedence list, smaller detector id, then
start offset and type name so that no two distinct detections ever tie.
"""

from __future__ import annotations

from bisect import bisect_left
from collections.abc import Iterable, Sequence

from maskron.errors import MixedSources
from maskron.model import Detection, PolicyTable, TextIndex, spans_overlap

DEFAULT_PRECEDENCE = ("external", "regex", "bloom")


def precedence_rank(detector_id: str, precedence: Sequence[str]) -> int:
    for i, prefix in enumerate(precedence):
        if detector_id == prefix or detector_id.startswith(prefix + ":"):
            return i
    return len(precedence)


def priority_key(d: Detection, precedence: Sequence[str]) -> tuple:
    return (
        -d.confidence,
        -len(d.span),
        precedence_rank(d.detector_id, precedence),
        d.detector_id,
        d.span.start,
        d.pii_type.name,
        d.matched_text,
    )


def check_sources(detections: Sequence[Detection], text: str | None = None) -> None:
    """Raise :class:`MixedSources` if the detections cannot share one source text."""
    if text is not None:
        index = TextIndex(text)
        for d in detections:
            if index.check(d.span) is not None or index.slice(d.span) != d.matched_text:
                raise MixedSources(f"{d.detector_id} at [{d.span.start}, {d.span.end}) "
                                   "does not match the source text")
        return
    # Without the text, overlapping detections must at least agree on shared bytes.
    ordered = sorted(detections, key=lambda d: d.span.start)
    encoded = [d.matched_text.encode("utf-8") for d in ordered]
    for i, a in enumerate(ordered):
        for j in range(i + 1, len(ordered)):
            b = ordered[j]
            if b.span.start >= a.span.end:
                break
            lo, hi = b.span.start, min(a.span.end, b.span.end)
            if (encoded[i][lo - a.span.start : hi - a.span.start]
                    != encoded[j][lo - b.span.start : hi - b.span.start]):
                raise MixedSources(
                    f"{a.detector_id} and {b.detector_id} disagree on bytes [{lo}, {hi})"
                )


def resolve(
    detections: Iterable[Detection],
    policy: PolicyTable,
    precedence: Sequence[str] = DEFAULT_PRECEDENCE,
    text: str | None = None,
) -> list[Detection]:
    detections = list(detections)
    check_sources(detections, text)
    eligible = {d for d in detections if d.confidence >= policy.threshold_for(d.pii_type)}
    ranked = sorted(eligible, key=lambda d: priority_key(d, precedence))

    # kept spans, sorted by start; non-overlapping, so ends are sorted too
    starts: list[int] = []
    ends: list[int] = []
    kept: list[Detection] = []
    for d in ranked:
        i = bisect_left(starts, d.span.start)
        if i > 0 and ends[i - 1] > d.span.start:
            continue
        if i < len(starts) and starts[i] < d.span.end:
            continue
        starts.insert(i, d.span.start)
        ends.insert(i, d.span.end)
        kept.insert(i, d)
    return kept


def type_conflicts(detections: Iterable[Detection], kept: Sequence[Detection]) -> int:
    """Count dropped detections that overlap a kept one of a different type."""
    kept_set = set(kept)
    count = 0
    for d in detections:
        if d in kept_set:
            continue
        if any(spans_overlap(d.span, k.span) and k.pii_type != d.pii_type for k in kept):
            count += 1
    return count
