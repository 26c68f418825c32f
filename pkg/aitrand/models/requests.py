"""
Battery configuration models.

The JSON config file is parsed straight into these models; the schema is
available from BatteryConfig.model_json_schema().
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import ClassVar, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from aitrand.core.exceptions import ConfigError
from aitrand.utils.test_names import SUPPORTED_TESTS, normalize_test_name

SourceKind = Literal["prng", "weak_prng", "champernowne", "biased", "file"]

GENERATOR_KINDS = ("prng", "weak_prng", "biased")
DEFAULT_GROUP_SIZE = 10
DEFAULT_BIT_LEN = 1 << 20


class SourceDescriptor(BaseModel):
    """One sample string: a generator with its parameters, or a raw file."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: SourceKind
    seed: int | None = None
    bias_p: float | None = None
    path: str | None = None
    bit_len: int | None = Field(default=None, ge=1)
    bit_order: Literal["msb", "lsb"] = "msb"
    vn_normalize: bool = False

    @model_validator(mode="after")
    def _check_kind_fields(self) -> SourceDescriptor:
        if self.kind == "file":
            if not self.path:
                raise ValueError("file sources need a path")
            return self
        if self.bit_len is None:
            raise ValueError(f"{self.kind} sources need bit_len")
        if self.kind in ("prng", "biased"):
            if self.seed is None or not 0 < self.seed < 1 << 64:
                raise ValueError(f"{self.kind} seed must be a nonzero unsigned 64-bit integer")
        if self.kind == "weak_prng":
            if self.seed is None or not 0 < self.seed < 1 << 31 or self.seed % 2 == 0:
                raise ValueError("weak_prng seed must be odd and in (0, 2^31)")
        if self.kind == "biased":
            if self.bias_p is None or not 0.0 < self.bias_p < 1.0:
                raise ValueError("biased sources need bias_p strictly between 0 and 1")
        return self

    def label(self) -> str:
        if self.kind == "file":
            return f"file:{self.path}"
        parts = [self.kind]
        if self.seed is not None:
            parts.append(f"seed={self.seed}")
        if self.bias_p is not None:
            parts.append(f"p={self.bias_p}")
        if self.vn_normalize:
            parts.append("vn")
        return ",".join(parts)


class SourceGroup(BaseModel):
    """
    A named source: one or more strings.

    Either list `strings` explicitly or give a generator `template` and a
    `count`; the template then expands to consecutive seeds (odd seeds for
    weak_prng).
    """

    model_config = ConfigDict(extra="forbid")

    name: str = Field(min_length=1)
    strings: list[SourceDescriptor] = Field(default_factory=list)
    template: SourceDescriptor | None = None
    count: int = Field(default=DEFAULT_GROUP_SIZE, ge=1)

    @model_validator(mode="after")
    def _expand_template(self) -> SourceGroup:
        if self.template is not None and not self.strings:
            t = self.template
            if t.kind == "champernowne":
                self.strings = [t] * self.count
            elif t.kind in GENERATOR_KINDS:
                step = 2 if t.kind == "weak_prng" else 1
                self.strings = [
                    SourceDescriptor.model_validate({**t.model_dump(), "seed": t.seed + step * i})
                    for i in range(self.count)
                ]
            else:
                raise ValueError("templates only apply to generator kinds; list file strings explicitly")
        if not self.strings:
            raise ValueError(f"source group {self.name!r} is empty")
        return self


class TestParameters(BaseModel):
    __test__: ClassVar[bool] = False

    model_config = ConfigDict(extra="forbid")

    entropy_window: int = Field(default=4096, ge=2)
    entropy_t: int = Field(default=4096, ge=1)
    carmichael_bound: int = Field(default=10**7, ge=3)
    carmichael_list: str | None = None
    borel_m_limit: int | None = Field(default=None, ge=1)


class BatteryConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    sources: list[SourceGroup] = Field(min_length=1)
    tests: list[str] = Field(default_factory=lambda: list(SUPPORTED_TESTS), min_length=1)
    parameters: TestParameters = Field(default_factory=TestParameters)
    output: str | None = None
    significance: float = Field(default=0.05, gt=0.0, lt=1.0)
    formats: list[Literal["json", "csv"]] = Field(default_factory=lambda: ["json", "csv"])

    @field_validator("tests")
    @classmethod
    def _normalize_tests(cls, tests: list[str]) -> list[str]:
        normalized = []
        for name in tests:
            key = normalize_test_name(name)
            if key not in SUPPORTED_TESTS:
                raise ValueError(f"unknown test {name!r}; expected one of {', '.join(SUPPORTED_TESTS)}")
            if key not in normalized:
                normalized.append(key)
        return normalized

    @model_validator(mode="after")
    def _check_names_and_paths(self) -> BatteryConfig:
        names = [g.name for g in self.sources]
        if len(set(names)) != len(names):
            raise ValueError("source group names must be unique")
        if self.output:
            out = Path(self.output).resolve()
            for group in self.sources:
                for s in group.strings:
                    if s.path and Path(s.path).resolve() == out:
                        raise ValueError(f"input file {s.path} is also the output path")
        return self

    @classmethod
    def load(cls, path: str | Path) -> BatteryConfig:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        try:
            return cls.model_validate(json.loads(text))
        except json.JSONDecodeError as e:
            raise ConfigError(f"config {path} is not valid JSON: {e}") from e
        except ValidationError as e:
            raise ConfigError(f"invalid config {path}: {e}") from e

    @classmethod
    def parse(cls, payload: dict) -> BatteryConfig:
        try:
            return cls.model_validate(payload)
        except ValidationError as e:
            raise ConfigError(f"invalid config: {e}") from e
