"""Monte Carlo virtual transmission line and estimator convergence studies.

Each simulated hour draws an operating condition from a categorical distribution
and then a failure as a Bernoulli trial with that condition's hourly rate (the
hourly rate is treated as the failure probability of the hour, and a failed hour
does not take the line out of service).  Random numbers come from NumPy's PCG64
bit generator seeded with the configured integer, so a seed fixes the whole run.

At each checkpoint the cumulative failure count and exposure of every condition
are fed to the enabled interval estimators.  Estimators that cannot produce an
interval yet (normal approximation before the first failure, chi-square with no
exposure) are recorded with null bounds rather than dropped.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .estimation import (
    RateObservation,
    chi_square_rate_interval,
    clt_rate_interval,
    idm_credible_interval,
    idm_interval,
)
from .exceptions import ConfigError, EstimatorInapplicableError

__all__ = [
    "RNG_ALGORITHM",
    "ConditionSpec",
    "EstimatorSpec",
    "SimulationConfig",
    "SimulationHistory",
    "TraceRow",
    "ConvergenceTrace",
    "simulate",
    "run_convergence_study",
    "run_replications",
    "compare_traces",
]

RNG_ALGORITHM = "numpy PCG64"
ESTIMATOR_KINDS = ("idm", "credible", "clt", "chi_square")
TRACE_FIELDS = ("seed", "hour", "condition", "estimator", "failures", "exposure", "lower", "upper", "true_rate")


@dataclass(frozen=True)
class ConditionSpec:
    label: str
    probability: float
    rate: float


@dataclass(frozen=True)
class EstimatorSpec:
    kind: str
    s: float = 1.0
    gamma: float = 0.95
    confidence: float = 0.95

    def __post_init__(self):
        if self.kind not in ESTIMATOR_KINDS:
            raise ConfigError(f"unknown estimator kind {self.kind!r}; choose from {', '.join(ESTIMATOR_KINDS)}")
        if not (self.s > 0.0):
            raise ConfigError("estimator s must be positive")
        if not (0.0 < self.gamma < 1.0) or not (0.0 < self.confidence < 1.0):
            raise ConfigError("gamma and confidence must lie in (0, 1)")

    @property
    def label(self) -> str:
        if self.kind == "idm":
            return f"idm(s={self.s:g})"
        if self.kind == "credible":
            return f"credible(gamma={self.gamma:g},s={self.s:g})"
        return f"{self.kind}({self.confidence:g})"

    def to_dict(self) -> dict:
        if self.kind == "idm":
            return {"kind": "idm", "s": self.s}
        if self.kind == "credible":
            return {"kind": "credible", "gamma": self.gamma, "s": self.s}
        return {"kind": self.kind, "confidence": self.confidence}

    def interval(self, failures: int, exposure: int) -> tuple[float, float] | None:
        return _estimate(self.kind, self.s, self.gamma, self.confidence, failures, exposure)


@lru_cache(maxsize=65536)
def _estimate(kind, s, gamma, confidence, failures, exposure):
    if kind == "idm":
        return tuple(idm_interval([failures, exposure - failures], s, 0))
    if kind == "credible":
        return tuple(idm_credible_interval([failures, exposure - failures], s, 0, gamma))
    if exposure < 1:
        return None
    obs = RateObservation(failures, exposure)
    if kind == "clt":
        try:
            return tuple(clt_rate_interval(obs, confidence))
        except EstimatorInapplicableError:
            return None
    return tuple(chi_square_rate_interval(obs, confidence))


def _checkpoints(spec, horizon: int) -> tuple[int, ...]:
    if isinstance(spec, Mapping):
        try:
            start, stop = int(spec["start"]), int(spec["stop"])
            step = int(spec.get("step", 1))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"checkpoint range needs integer start/stop/step: {exc}") from None
        if step < 1:
            raise ConfigError("checkpoint step must be positive")
        points = tuple(range(start, stop + 1, step))
    else:
        points = tuple(int(h) for h in spec)
    if not points:
        raise ConfigError("at least one checkpoint is required")
    if any(b <= a for a, b in zip(points, points[1:])):
        raise ConfigError("checkpoints must be strictly increasing")
    if points[0] < 0 or points[-1] > horizon:
        raise ConfigError(f"checkpoints must lie in [0, {horizon}]")
    return points


@dataclass(frozen=True)
class SimulationConfig:
    horizon_hours: int
    conditions: tuple[ConditionSpec, ...]
    seed: int = 0
    estimators: tuple[EstimatorSpec, ...] = (EstimatorSpec("idm"),)
    checkpoints: tuple[int, ...] = ()
    description: str = ""

    def __post_init__(self):
        if int(self.horizon_hours) != self.horizon_hours or self.horizon_hours < 1:
            raise ConfigError("horizon_hours must be a positive integer")
        if not self.conditions:
            raise ConfigError("at least one operating condition is required")
        labels = [c.label for c in self.conditions]
        if len(set(labels)) != len(labels):
            raise ConfigError("condition labels must be unique")
        for c in self.conditions:
            if not (0.0 <= c.probability <= 1.0):
                raise ConfigError(f"occurrence probability of {c.label!r} must lie in [0, 1]")
            if not (0.0 <= c.rate <= 1.0):
                raise ConfigError(f"failure rate of {c.label!r} must lie in [0, 1]")
        total = math.fsum(c.probability for c in self.conditions)
        if abs(total - 1.0) > 1e-9:
            raise ConfigError(f"condition occurrence probabilities must sum to 1, got {total!r}")
        if not (0 <= int(self.seed) < 2**64):
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if not self.estimators:
            raise ConfigError("at least one estimator is required")
        if not self.checkpoints:
            object.__setattr__(self, "checkpoints", (self.horizon_hours,))
        else:
            object.__setattr__(self, "checkpoints", _checkpoints(self.checkpoints, self.horizon_hours))

    @classmethod
    def from_dict(cls, doc: Mapping) -> "SimulationConfig":
        try:
            conditions = tuple(
                ConditionSpec(str(c["label"]), float(c["probability"]), float(c["rate"])) for c in doc["conditions"]
            )
            estimators = tuple(
                EstimatorSpec(**{k: (v if k == "kind" else float(v)) for k, v in e.items()})
                for e in doc.get("estimators", [{"kind": "idm"}])
            )
            return cls(
                horizon_hours=int(doc["horizon_hours"]),
                conditions=conditions,
                seed=int(doc.get("seed", 0)),
                estimators=estimators,
                checkpoints=_checkpoints(doc["checkpoints"], int(doc["horizon_hours"]))
                if "checkpoints" in doc
                else (),
                description=str(doc.get("description", "")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"malformed simulation config: {exc!r}") from None

    @classmethod
    def load(cls, path) -> "SimulationConfig":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        return {
            "description": self.description,
            "horizon_hours": self.horizon_hours,
            "conditions": [asdict(c) for c in self.conditions],
            "seed": self.seed,
            "estimators": [e.to_dict() for e in self.estimators],
            "checkpoints": list(self.checkpoints),
        }

    def with_seed(self, seed: int) -> "SimulationConfig":
        return SimulationConfig(
            self.horizon_hours, self.conditions, seed, self.estimators, self.checkpoints, self.description
        )


@dataclass(frozen=True)
class SimulationHistory:
    """Per-hour condition index and failure flag."""

    condition: np.ndarray
    failed: np.ndarray
    labels: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.condition)

    def records(self) -> Iterable[tuple[int, str, bool]]:
        for hour, (c, f) in enumerate(zip(self.condition, self.failed)):
            yield hour, self.labels[c], bool(f)


def simulate(config: SimulationConfig, seed: int | None = None) -> SimulationHistory:
    """Generate the hourly history of the virtual line; deterministic for a given seed."""
    rng = np.random.Generator(np.random.PCG64(config.seed if seed is None else seed))
    probs = np.array([c.probability for c in config.conditions], dtype=float)
    rates = np.array([c.rate for c in config.conditions], dtype=float)
    cond = rng.choice(len(probs), size=config.horizon_hours, p=probs / probs.sum())
    failed = rng.random(config.horizon_hours) < rates[cond]
    return SimulationHistory(cond.astype(np.int64), failed, tuple(c.label for c in config.conditions))


@dataclass(frozen=True)
class TraceRow:
    seed: int
    hour: int
    condition: str
    estimator: str
    failures: int
    exposure: int
    lower: float | None
    upper: float | None
    true_rate: float

    @property
    def applicable(self) -> bool:
        return self.lower is not None


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


@dataclass
class ConvergenceTrace:
    """Long-format table of intervals, one row per checkpoint, condition and estimator."""

    rows: list[TraceRow]
    config: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TRACE_FIELDS)
        for r in self.rows:
            writer.writerow(
                [r.seed, r.hour, r.condition, r.estimator, r.failures, r.exposure, _fmt(r.lower), _fmt(r.upper), _fmt(r.true_rate)]
            )
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {"config": self.config, "rows": [asdict(r) for r in self.rows]}
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"

    def write(self, directory, stem: str = "trace") -> list[Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        csv_path = directory / f"{stem}.csv"
        json_path = directory / f"{stem}.json"
        csv_path.write_text(self.to_csv(), encoding="utf-8")
        json_path.write_text(self.to_json(), encoding="utf-8")
        return [csv_path, json_path]

    @classmethod
    def from_csv(cls, text: str, source: str = "<trace>") -> "ConvergenceTrace":
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != TRACE_FIELDS:
            raise ConfigError(f"{source}: row 1: expected header {','.join(TRACE_FIELDS)}")
        rows = []
        for row in reader:
            if not row:
                continue
            line = reader.line_num
            if len(row) != len(TRACE_FIELDS):
                raise ConfigError(f"{source}: row {line}: expected {len(TRACE_FIELDS)} fields, got {len(row)}")
            try:
                lower = float(row[6]) if row[6] else None
                upper = float(row[7]) if row[7] else None
                if (lower is None) != (upper is None):
                    raise ValueError("lower and upper must both be present or both be null")
                rows.append(
                    TraceRow(int(row[0]), int(row[1]), row[2], row[3], int(row[4]), int(row[5]), lower, upper, float(row[8]))
                )
            except ValueError as exc:
                raise ConfigError(f"{source}: row {line}: {exc}") from None
        return cls(rows)

    @classmethod
    def read(cls, path) -> "ConvergenceTrace":
        return cls.from_csv(Path(path).read_text(encoding="utf-8"), str(path))


def run_convergence_study(config: SimulationConfig, seed: int | None = None) -> ConvergenceTrace:
    """Simulate once and evaluate every estimator at every checkpoint for every condition."""
    seed = config.seed if seed is None else seed
    history = simulate(config, seed)
    k = len(config.conditions)
    # cumulative[h, c] = count over hours [0, h)
    onehot = np.zeros((len(history) + 1, k), dtype=np.int64)
    np.add.at(onehot[1:], (np.arange(len(history)), history.condition), 1)
    exposure = np.cumsum(onehot, axis=0)
    fails = np.zeros_like(onehot)
    idx = np.nonzero(history.failed)[0]
    np.add.at(fails[1:], (idx, history.condition[idx]), 1)
    failures = np.cumsum(fails, axis=0)
    rows = []
    for hour in config.checkpoints:
        for c, cond in enumerate(config.conditions):
            nf, t = int(failures[hour, c]), int(exposure[hour, c])
            for est in config.estimators:
                iv = est.interval(nf, t)
                lo, hi = (None, None) if iv is None else iv
                rows.append(TraceRow(seed, hour, cond.label, est.label, nf, t, lo, hi, cond.rate))
    doc = config.to_dict()
    doc["seed"] = seed
    return ConvergenceTrace(rows, doc)


def run_replications(config: SimulationConfig, seeds: Sequence[int]) -> list[ConvergenceTrace]:
    return [run_convergence_study(config, s) for s in seeds]


def compare_traces(rows: Iterable[TraceRow]) -> dict:
    """Summary statistics per (condition, estimator).

    For each pair: mean width per checkpoint over applicable rows, how often the
    interval contains the true rate, how many bounds fall outside [0, 1], and the
    first checkpoint at which the estimator was applicable in every run.
    """
    groups: dict[tuple[str, str], list[TraceRow]] = {}
    for r in rows:
        groups.setdefault((r.condition, r.estimator), []).append(r)
    out = {}
    for (cond, est), items in sorted(groups.items()):
        by_hour: dict[int, list[TraceRow]] = {}
        for r in items:
            by_hour.setdefault(r.hour, []).append(r)
        mean_width = {}
        inapplicable = {}
        for hour, rs in sorted(by_hour.items()):
            ok = [r for r in rs if r.applicable]
            mean_width[hour] = math.fsum(r.upper - r.lower for r in ok) / len(ok) if ok else None
            inapplicable[hour] = len(rs) - len(ok)
        applicable = [r for r in items if r.applicable]
        covered = sum(1 for r in applicable if r.lower <= r.true_rate <= r.upper)
        first = next((h for h, rs in sorted(by_hour.items()) if all(r.applicable for r in rs)), None)
        last_hour = max(by_hour)
        final = by_hour[last_hour]
        out[f"{cond}/{est}"] = {
            "condition": cond,
            "estimator": est,
            "runs": len({r.seed for r in items}),
            "mean_width": {str(h): w for h, w in mean_width.items()},
            "inapplicable": {str(h): n for h, n in inapplicable.items()},
            "coverage": covered / len(items) if items else None,
            "final_checkpoint": last_hour,
            "final_coverage": sum(1 for r in final if r.applicable and r.lower <= r.true_rate <= r.upper) / len(final),
            "bounds_below_0": sum(1 for r in applicable if r.lower < 0.0),
            "bounds_above_1": sum(1 for r in applicable if r.upper > 1.0),
            "first_applicable_checkpoint": first,
        }
    return out
