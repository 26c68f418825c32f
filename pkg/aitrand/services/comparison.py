"""
Pairwise comparison of metric vectors across source groups.

KS p-values are always computed for every pair; Shapiro-Wilk per group;
Welch's t-test only when no group rejects normality.
"""
from __future__ import annotations

from itertools import combinations
from typing import Mapping, Sequence

from aitrand.core.exceptions import AitrandError
from aitrand.core.logging import get_logger
from aitrand.models.responses import SIGNIFICANCE, ComparisonResult, PairwiseCell
from aitrand.services import stats

logger = get_logger("ComparisonService")

MIN_GROUP_SIZE = 2


def compare_sources(
    metric_vectors: Mapping[str, Sequence[float]],
    threshold: float = SIGNIFICANCE,
) -> ComparisonResult:
    """
    Build the upper-triangular KS and Welch matrices (group order preserved)
    plus the Shapiro-Wilk vector.

    Groups with fewer than two values are excluded with a warning.
    """
    warnings: list[str] = []
    excluded: list[str] = []
    usable: dict[str, list[float]] = {}
    for name, values in metric_vectors.items():
        if len(values) < MIN_GROUP_SIZE:
            excluded.append(name)
            warnings.append(f"group {name!r} has {len(values)} usable values; excluded from comparison")
        else:
            usable[name] = [float(v) for v in values]

    result = ComparisonResult(groups=list(usable), excluded=excluded)
    if len(usable) < 2:
        warnings.append("fewer than two usable groups; pairwise matrices are empty")

    for a, b in combinations(usable, 2):
        result.ks.append(
            PairwiseCell(source_a=a, source_b=b, result=stats.ks_two_sample(usable[a], usable[b], threshold))
        )

    normal_everywhere = True
    for name, values in usable.items():
        try:
            sw = stats.shapiro_wilk(values, threshold)
        except AitrandError as e:
            warnings.append(f"Shapiro-Wilk not available for {name!r}: {e}")
            result.shapiro_wilk[name] = None
            normal_everywhere = False
            continue
        result.shapiro_wilk[name] = sw
        if sw.significant:
            normal_everywhere = False

    if len(usable) >= 2:
        if normal_everywhere:
            result.welch = [
                PairwiseCell(source_a=a, source_b=b, result=stats.welch_t(usable[a], usable[b], threshold))
                for a, b in combinations(usable, 2)
            ]
        else:
            warnings.append("normality rejected or untestable for some group; Welch matrix suppressed")
    else:
        result.welch = []

    result.warnings = warnings
    for w in warnings:
        logger.warning(w)
    return result
