"""
Result models: per-test outcomes, statistical test results and the battery
report. All of them serialize to JSON through pydantic.
"""
from __future__ import annotations

from typing import Any, ClassVar, Literal

from pydantic import BaseModel, Field, model_validator

SIGNIFICANCE = 0.05


class BookStackOutcome(BaseModel):
    bytes_used: int
    ones_before: int = Field(ge=0)
    ones_after: int = Field(ge=0)
    diff: int


class BorelBlockResult(BaseModel):
    m: int
    blocks_total: int
    min_count: int
    max_count: int
    spread: int = Field(ge=0)
    max_deviation: float
    threshold: float
    # counts outside [expected_low, expected_high] violate the inequality
    expected_low: float
    expected_high: float
    below_range: int
    above_range: int
    passed: bool


class BorelOutcome(BaseModel):
    bit_len: int
    m_max: int
    per_m: list[BorelBlockResult]
    aggregate_metric: float
    passed: bool


class EntropyEstimate(BaseModel):
    window_n: int
    t: int
    cap: int
    first_position: int
    last_position: int
    match_lengths: list[int]
    raw_h_hat: float
    h_hat: float = Field(ge=0.0, le=1.0)
    cap_saturated: bool


class WalkOutcome(BaseModel):
    y_max: int = Field(ge=0)
    y_min: int = Field(le=0)
    range: int = Field(ge=0)
    y_final: int
    ones: int
    zeros: int


class SSRun(BaseModel):
    k: int = Field(ge=1)
    bits_consumed: int = Field(ge=0)
    verdict_complete: bool
    declared: int
    total: int
    witness_encoding: str


class TestOutcome(BaseModel):
    """One test's scalar metric (plus the full outcome) for one source string."""

    __test__: ClassVar[bool] = False

    test: str
    metric: float | None = None
    outcome: dict[str, Any] | None = None
    error: str | None = None
    message: str | None = None


class FiveNumberSummary(BaseModel):
    n: int
    min: float
    q1: float
    median: float
    q3: float
    max: float
    mean: float
    sd: float = Field(ge=0.0)


class StatTestResult(BaseModel):
    method: Literal["ks_exact", "ks_asymptotic", "shapiro_wilk", "welch_t"]
    statistic: float
    p_value: float = Field(ge=0.0, le=1.0)
    df: float | None = None
    threshold: float = SIGNIFICANCE
    significant: bool = False
    ties: bool = False

    @model_validator(mode="after")
    def _flag(self) -> StatTestResult:
        self.significant = self.p_value < self.threshold
        return self


class PairwiseCell(BaseModel):
    source_a: str
    source_b: str
    result: StatTestResult


class ComparisonResult(BaseModel):
    groups: list[str]
    ks: list[PairwiseCell] = Field(default_factory=list)
    shapiro_wilk: dict[str, StatTestResult | None] = Field(default_factory=dict)
    welch: list[PairwiseCell] | None = None
    excluded: list[str] = Field(default_factory=list)
    warnings: list[str] = Field(default_factory=list)


class StringFailure(BaseModel):
    group: str
    index: int
    error: str
    message: str


class MetricSection(BaseModel):
    test: str
    metric: str
    values: dict[str, list[float | None]]
    summaries: dict[str, FiveNumberSummary | None]
    comparison: ComparisonResult
    failures: list[StringFailure] = Field(default_factory=list)
    warnings: list[str] = Field(default_factory=list)


class BatteryReport(BaseModel):
    version: str
    # the only field allowed to differ between identical runs
    generated_at: str
    significance: float
    groups: list[str]
    tests: dict[str, MetricSection]
    provenance: dict[str, Any]
