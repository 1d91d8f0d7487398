"""JSON interchange: distribution files, sample files and experiment configs.

Loaders raise ``InputError`` whose message names the offending field, e.g.
``p1.json: field 'masses.2': Input should be a valid number``.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .dist import BinnedDistribution, InvalidDistributionError, SampleBatch, entropy_seed, validate
from .harness import BARAUD_GAMMA, DEFAULT_DELTA, ExperimentConfig
from .robust_tests import Family


class InputError(ValueError):
    """Unreadable, malformed or invalid input file."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DistributionModel(_Strict):
    kind: Literal["bins", "points"]
    lo: float = 0.0
    hi: float = 1.0
    masses: list[float] = Field(min_length=1)
    label: str = ""

    def to_distribution(self) -> BinnedDistribution:
        d = BinnedDistribution(self.masses, self.kind, self.lo, self.hi, self.label)
        problem = validate(d)
        if problem:
            raise InvalidDistributionError(problem)
        return d


class SamplesModel(_Strict):
    atom_indices: list[int]
    seed: int | None = None
    source_label: str = ""

    @field_validator("atom_indices")
    @classmethod
    def _non_negative(cls, v: list[int]) -> list[int]:
        for i, x in enumerate(v):
            if x < 0:
                raise ValueError(f"index {i} is negative ({x})")
        return v


DistRef = Union[str, DistributionModel]


class ConfigModel(_Strict):
    """Experiment config; distributions are inline objects or paths relative to the config file."""

    test: Family
    p1: DistRef
    p2: DistRef
    targets: list[DistRef] = Field(min_length=1)
    m: int = Field(ge=1)
    trials: int = Field(ge=1)
    seed: int | None = Field(default=None, ge=0, lt=1 << 64)
    delta: float = Field(default=DEFAULT_DELTA, gt=0.0, lt=0.5)
    gamma: float = Field(default=BARAUD_GAMMA, gt=1.0)


def _describe(err: ValidationError) -> str:
    first = err.errors()[0]
    where = ".".join(str(part) for part in first["loc"]) or "<root>"
    extra = f" (and {err.error_count() - 1} more)" if err.error_count() > 1 else ""
    return f"field '{where}': {first['msg']}{extra}"


def _read_json(path: Path):
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise FileNotFoundError(f"{path}: no such file") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def _parse(model, data, origin: str):
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        raise InputError(f"{origin}: {_describe(exc)}") from None


def _distribution(model: DistributionModel, origin: str) -> BinnedDistribution:
    try:
        return model.to_distribution()
    except InvalidDistributionError as exc:
        raise InputError(f"{origin}: field 'masses': {exc}") from None
    except ValueError as exc:
        raise InputError(f"{origin}: {exc}") from None


def distribution_to_dict(d: BinnedDistribution) -> dict:
    return {"kind": d.kind, "lo": d.lo, "hi": d.hi, "masses": d.masses.tolist(), "label": d.label}


def dumps(payload) -> str:
    """Canonical JSON text: insertion-ordered keys, two-space indent, trailing newline."""
    return json.dumps(payload, indent=2, allow_nan=False) + "\n"


def load_distribution(path: str | Path) -> BinnedDistribution:
    path = Path(path)
    return _distribution(_parse(DistributionModel, _read_json(path), str(path)), str(path))


def dump_distribution(d: BinnedDistribution, path: str | Path) -> None:
    Path(path).write_text(dumps(distribution_to_dict(d)))


def load_samples(path: str | Path) -> SampleBatch:
    path = Path(path)
    model = _parse(SamplesModel, _read_json(path), str(path))
    return SampleBatch(model.atom_indices, model.seed, model.source_label)


def samples_to_dict(batch: SampleBatch) -> dict:
    return {"atom_indices": batch.atom_indices.tolist(), "seed": batch.seed, "source_label": batch.source_label}


def load_config(path: str | Path, seed: int | None = None, threads: int | None = None) -> ExperimentConfig:
    """Build an ExperimentConfig; ``seed`` and ``threads`` override the file when given.

    With no seed anywhere, a fresh entropy seed is drawn and kept on the config.
    """
    path = Path(path)
    model = _parse(ConfigModel, _read_json(path), str(path))

    def resolve(ref: DistRef, field: str) -> BinnedDistribution:
        if isinstance(ref, str):
            return load_distribution(path.parent / ref)
        return _distribution(ref, f"{path}: {field}")

    resolved_seed = seed if seed is not None else model.seed
    if resolved_seed is None:
        resolved_seed = entropy_seed()
    kwargs = {} if threads is None else {"threads": threads}
    try:
        return ExperimentConfig(
            family=model.test,
            p1=resolve(model.p1, "p1"),
            p2=resolve(model.p2, "p2"),
            targets=tuple(resolve(t, f"targets.{i}") for i, t in enumerate(model.targets)),
            m=model.m,
            trials=model.trials,
            seed=resolved_seed,
            delta=model.delta,
            gamma=model.gamma,
            **kwargs,
        )
    except ValueError as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"{path}: {exc}") from None
