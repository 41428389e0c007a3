"""Transmission-line conditional failure rate (CFR) model.

Binds the generic credal engine to the line problem: hourly records are classified
into condition states, failure hours are counted per conditioning context, the
failure-side tables are estimated from those counts (IDM, Dirichlet or credible
interval) and assembled with point-valued normal-operation tables into the
seven-node network

    H -> E1, E2, E5;   (H, E1) -> E3;   (H, E3) -> E4;   (H, E1) -> E6

where H is the line state and E1..E6 are temperature, wind, rain, lightning,
loading and snow/ice.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence, Union

from .credal import (
    DEFAULT_MAX_COMBINATIONS,
    CategoricalVariable,
    CredalNetwork,
    Evidence,
    IntervalCPT,
    credal_infer,
    credal_infer_soft,
)
from .estimation import (
    DEFAULT_S,
    ProbabilityInterval,
    dirichlet_posterior_mean,
    idm_credible_interval,
    idm_intervals,
)
from .exceptions import ConfigError, DomainError, NetworkError

__all__ = [
    "LINE_VARIABLE",
    "CONDITION_VARIABLES",
    "STATES",
    "CONTEXT_PARENTS",
    "OperatingRecord",
    "ConditionStateVector",
    "CfrNetworkSpec",
    "IdmMode",
    "DirichletMode",
    "CredibleMode",
    "Scenario",
    "classify_record",
    "count_contingencies",
    "build_cfr_network",
    "evaluate_scenario",
    "estimate_tables",
    "read_records_csv",
    "write_records_csv",
    "case_study_failure_states",
    "case_study_records",
    "load_fixture",
    "case_study_spec",
    "case_study_network",
    "NETWORK_VARIANTS",
    "case_study_weights",
    "case_study_scenarios",
    "context_key",
]

LINE_VARIABLE = "H"
CONDITION_VARIABLES = ("E1", "E2", "E3", "E4", "E5", "E6")
STATES: dict[str, tuple[str, ...]] = {
    "H": ("h1", "h2"),
    "E1": ("e11", "e12", "e13"),
    "E2": ("e21", "e22", "e23"),
    "E3": ("e31", "e32"),
    "E4": ("e41", "e42"),
    "E5": ("e51", "e52"),
    "E6": ("e61", "e62"),
}
# condition parents besides H
CONTEXT_PARENTS: dict[str, tuple[str, ...]] = {
    "E1": (),
    "E2": (),
    "E3": ("E1",),
    "E4": ("E3",),
    "E5": (),
    "E6": ("E1",),
}
DESCRIPTIONS = {
    "E1": "hourly average temperature",
    "E2": "hourly average wind speed",
    "E3": "rain",
    "E4": "lightning",
    "E5": "hourly average loading rate",
    "E6": "snow/ice",
}

RECORD_FIELDS = ("timestamp", "temperature_c", "wind_kmh", "rain", "lightning", "snow_ice", "loading_rate", "failed")

# nested table layout used by counts, weights and h1 statistics:
#   {variable: {context: [value per state]}}, context "" for unconditioned tables
Tables = Mapping[str, Mapping[str, Sequence[float]]]


def context_key(config: Sequence[str]) -> str:
    return ",".join(config)


def _contexts(var: str) -> list[str]:
    return [context_key(c) for c in itertools.product(*(STATES[p] for p in CONTEXT_PARENTS[var]))]


@dataclass(frozen=True)
class OperatingRecord:
    """One hour of line history."""

    timestamp: int
    temperature_c: float
    wind_kmh: float
    rain: bool
    lightning: bool
    snow_ice: bool
    loading_rate: float
    failed: bool

    def __post_init__(self):
        for name in ("temperature_c", "wind_kmh", "loading_rate"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite, got {getattr(self, name)!r}")
        if self.wind_kmh < 0.0:
            raise DomainError("wind speed must be non-negative")
        if self.loading_rate < 0.0:
            raise DomainError("loading rate must be non-negative")


class ConditionStateVector(NamedTuple):
    e1: str
    e2: str
    e3: str
    e4: str
    e5: str
    e6: str
    h: str

    def as_evidence(self) -> dict[str, str]:
        return dict(zip(CONDITION_VARIABLES, self[:6]))


def classify_record(record: OperatingRecord) -> ConditionStateVector:
    """Map raw readings to condition states; boundary values fall in the lower class."""
    t, w, load = record.temperature_c, record.wind_kmh, record.loading_rate
    for value in (t, w, load):
        if not math.isfinite(value):
            raise DomainError("readings must be finite")
    e1 = "e11" if t <= 4.0 else ("e12" if t <= 26.0 else "e13")
    e2 = "e21" if w <= 12.0 else ("e22" if w <= 40.0 else "e23")
    e3 = "e31" if record.rain else "e32"
    e4 = "e41" if record.lightning else "e42"
    e5 = "e51" if load <= 0.80 else "e52"
    e6 = "e61" if record.snow_ice else "e62"
    h = "h2" if record.failed else "h1"
    return ConditionStateVector(e1, e2, e3, e4, e5, e6, h)


def _empty_counts() -> dict[str, dict[str, list[int]]]:
    return {v: {ctx: [0] * len(STATES[v]) for ctx in _contexts(v)} for v in CONDITION_VARIABLES}


def count_contingencies(states: Iterable[ConditionStateVector]) -> dict[str, dict[str, list[int]]]:
    """Failure counts per conditioning context of each condition variable.

    Only failure hours (``h == "h2"``) are counted.  Unconditioned tables sum to the
    number of failures; conditioned tables split that total across contexts.
    """
    counts = _empty_counts()
    for sv in states:
        if sv.h != "h2":
            continue
        values = dict(zip(CONDITION_VARIABLES, sv[:6]))
        for var in CONDITION_VARIABLES:
            ctx = context_key(values[p] for p in CONTEXT_PARENTS[var])
            counts[var][ctx][STATES[var].index(values[var])] += 1
    return counts


def _check_tables(tables: Tables, what: str, integer: bool = False) -> dict[str, dict[str, list]]:
    out = {}
    for var in CONDITION_VARIABLES:
        if var not in tables:
            raise ConfigError(f"{what}: missing table for {var}")
        out[var] = {}
        for ctx in _contexts(var):
            if ctx not in tables[var]:
                raise ConfigError(f"{what}: missing conditioning context {ctx!r} for {var}")
            row = list(tables[var][ctx])
            if len(row) != len(STATES[var]):
                raise ConfigError(f"{what}: {var}[{ctx!r}] needs {len(STATES[var])} entries")
            if any(x < 0 for x in row):
                raise ConfigError(f"{what}: {var}[{ctx!r}] has negative entries")
            if integer and any(int(x) != x for x in row):
                raise ConfigError(f"{what}: {var}[{ctx!r}] must hold integer counts")
            out[var][ctx] = [int(x) for x in row] if integer else [float(x) for x in row]
    return out


@dataclass(frozen=True)
class CfrNetworkSpec:
    """Inputs for one line: prior failure rate, failure counts, normal-operation tables."""

    prior_failure_rate: float
    h2_counts: Tables
    h1_tables: Tables
    s: float = DEFAULT_S

    def __post_init__(self):
        if not (0.0 < self.prior_failure_rate < 1.0):
            raise ConfigError(f"prior failure rate must lie in (0, 1), got {self.prior_failure_rate!r}")
        if not (self.s > 0.0):
            raise ConfigError("equivalent sample size s must be positive")
        object.__setattr__(self, "h2_counts", _check_tables(self.h2_counts, "h2 counts", integer=True))
        h1 = _check_tables(self.h1_tables, "h1 tables")
        for var, rows in h1.items():
            for ctx, row in rows.items():
                if abs(math.fsum(row) - 1.0) > 1e-9:
                    raise ConfigError(f"h1 table {var}[{ctx!r}] must sum to 1")
        object.__setattr__(self, "h1_tables", h1)

    def to_dict(self) -> dict:
        return {
            "prior_failure_rate": self.prior_failure_rate,
            "s": self.s,
            "h2_counts": self.h2_counts,
            "h1_tables": self.h1_tables,
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "CfrNetworkSpec":
        try:
            return cls(
                prior_failure_rate=float(doc["prior_failure_rate"]),
                h2_counts=doc["h2_counts"],
                h1_tables=doc["h1_tables"],
                s=float(doc.get("s", DEFAULT_S)),
            )
        except KeyError as exc:
            raise ConfigError(f"network spec is missing field {exc}") from None

    @classmethod
    def load(cls, path) -> "CfrNetworkSpec":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def with_prior(self, prior: float) -> "CfrNetworkSpec":
        return CfrNetworkSpec(prior, self.h2_counts, self.h1_tables, self.s)

    def with_counts(self, counts: Tables) -> "CfrNetworkSpec":
        return CfrNetworkSpec(self.prior_failure_rate, counts, self.h1_tables, self.s)


@dataclass(frozen=True)
class IdmMode:
    s: float = DEFAULT_S


@dataclass(frozen=True)
class DirichletMode:
    weights: Tables


@dataclass(frozen=True)
class CredibleMode:
    gamma: float = 0.95
    s: float = DEFAULT_S


Mode = Union[IdmMode, DirichletMode, CredibleMode]


def _estimate_row(var: str, ctx: str, counts: Sequence[int], mode: Mode) -> list[ProbabilityInterval]:
    if isinstance(mode, IdmMode):
        return idm_intervals(counts, mode.s)
    if isinstance(mode, DirichletMode):
        try:
            weights = mode.weights[var][ctx]
        except KeyError:
            raise ConfigError(f"Dirichlet weights missing for {var}[{ctx!r}]") from None
        return [ProbabilityInterval.point(p) for p in dirichlet_posterior_mean(counts, weights)]
    if isinstance(mode, CredibleMode):
        return [idm_credible_interval(counts, mode.s, m, mode.gamma) for m in range(len(counts))]
    raise ConfigError(f"unknown estimation mode {mode!r}")


def estimate_tables(
    counts: Tables, mode: Mode, overrides: Mapping[str, Mode] | None = None
) -> dict[str, dict[str, list[ProbabilityInterval]]]:
    """Failure-side conditional tables ``P(E_j | h2, context)`` from counts."""
    counts = _check_tables(counts, "h2 counts", integer=True)
    overrides = dict(overrides or {})
    unknown = set(overrides) - set(CONDITION_VARIABLES)
    if unknown:
        raise ConfigError(f"mode overrides for unknown variables {sorted(unknown)}")
    return {
        var: {ctx: _estimate_row(var, ctx, row, overrides.get(var, mode)) for ctx, row in counts[var].items()}
        for var in CONDITION_VARIABLES
    }


def build_cfr_network(
    spec: CfrNetworkSpec, mode: Mode | None = None, overrides: Mapping[str, Mode] | None = None
) -> CredalNetwork:
    """Assemble the line network with failure-side rows estimated from ``spec.h2_counts``.

    ``mode`` defaults to the IDM with ``spec.s``.  ``overrides`` selects a different
    estimator for individual condition variables (e.g. point-valued snow/ice rows).
    Normal-operation rows are taken as points from ``spec.h1_tables``.
    """
    if mode is None:
        mode = IdmMode(spec.s)
    h2_rows = estimate_tables(spec.h2_counts, mode, overrides)
    variables = [CategoricalVariable(v, STATES[v]) for v in (LINE_VARIABLE, *CONDITION_VARIABLES)]
    p = spec.prior_failure_rate
    cpts = [IntervalCPT.from_points(LINE_VARIABLE, (), {(): [1.0 - p, p]})]
    for var in CONDITION_VARIABLES:
        rows = {}
        for ctx in _contexts(var):
            config = tuple(ctx.split(",")) if ctx else ()
            rows[("h1", *config)] = [ProbabilityInterval.point(x) for x in spec.h1_tables[var][ctx]]
            rows[("h2", *config)] = h2_rows[var][ctx]
        cpts.append(IntervalCPT(var, (LINE_VARIABLE, *CONTEXT_PARENTS[var]), rows))
    label = type(mode).__name__.replace("Mode", "")
    if overrides:
        label += " (" + ", ".join(f"{v}: {type(m).__name__.replace('Mode', '')}" for v, m in overrides.items()) + ")"
    return CredalNetwork(variables, cpts, f"Line CFR network, failure rows by {label}, P(h2)={p!r}")


def with_line_prior(network: CredalNetwork, prior: float) -> CredalNetwork:
    if not (0.0 < prior < 1.0):
        raise ConfigError(f"prior failure rate must lie in (0, 1), got {prior!r}")
    return network.replace_cpt(IntervalCPT.from_points(LINE_VARIABLE, (), {(): [1.0 - prior, prior]}))


@dataclass(frozen=True)
class Scenario:
    """Operating conditions for the coming hour of one line."""

    name: str
    hard: Mapping[str, str] = field(default_factory=dict)
    soft: Mapping[str, Mapping[str, float]] = field(default_factory=dict)
    prior_failure_rate: float | None = None
    description: str = ""

    def __post_init__(self):
        object.__setattr__(self, "hard", dict(self.hard))
        object.__setattr__(self, "soft", {k: dict(v) for k, v in self.soft.items()})
        assigned = list(self.hard) + list(self.soft)
        if sorted(assigned) != sorted(CONDITION_VARIABLES):
            raise ConfigError(
                f"scenario {self.name!r} must assign each of {', '.join(CONDITION_VARIABLES)} exactly once "
                f"(hard or soft); got {sorted(assigned)}"
            )

    @property
    def evidence(self) -> Evidence:
        return Evidence(self.hard, self.soft)

    @classmethod
    def from_dict(cls, doc: Mapping) -> "Scenario":
        prior = doc.get("prior_failure_rate")
        return cls(
            name=str(doc.get("name", "")),
            hard=doc.get("hard", {}),
            soft=doc.get("soft", {}),
            prior_failure_rate=None if prior is None else float(prior),
            description=doc.get("description", ""),
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "prior_failure_rate": self.prior_failure_rate,
            "hard": self.hard,
            "soft": self.soft,
        }


def evaluate_scenario(
    network: CredalNetwork, scenario: Scenario, max_combinations: int = DEFAULT_MAX_COMBINATIONS
) -> ProbabilityInterval:
    """CFR bounds ``P(h2 | conditions)``; zero width when the network is precise.

    A scenario carrying its own prior failure rate overrides the network's.
    """
    for name in (*scenario.hard, *scenario.soft):
        network.variable(name)
    if scenario.prior_failure_rate is not None:
        network = with_line_prior(network, scenario.prior_failure_rate)
    if scenario.soft:
        return credal_infer_soft(network, LINE_VARIABLE, "h2", scenario.evidence, max_combinations)
    return credal_infer(network, LINE_VARIABLE, "h2", scenario.hard, max_combinations)


# --- records file -------------------------------------------------------


def _parse_bool(text: str) -> bool:
    text = text.strip()
    if text not in ("0", "1"):
        raise ValueError(f"boolean fields must be 0 or 1, got {text!r}")
    return text == "1"


def read_records_csv(path) -> list[OperatingRecord]:
    """Read hourly records; malformed rows raise ``ConfigError`` naming the line number."""
    records = []
    seen: dict[int, int] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return records
        if [h.strip() for h in header] != list(RECORD_FIELDS):
            raise ConfigError(f"{path}: line 1: expected header {','.join(RECORD_FIELDS)}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(RECORD_FIELDS):
                raise ConfigError(f"{path}: line {line}: expected {len(RECORD_FIELDS)} fields, got {len(row)}")
            try:
                rec = OperatingRecord(
                    timestamp=int(row[0]),
                    temperature_c=float(row[1]),
                    wind_kmh=float(row[2]),
                    rain=_parse_bool(row[3]),
                    lightning=_parse_bool(row[4]),
                    snow_ice=_parse_bool(row[5]),
                    loading_rate=float(row[6]),
                    failed=_parse_bool(row[7]),
                )
            except (ValueError, DomainError) as exc:
                raise ConfigError(f"{path}: line {line}: {exc}") from None
            if rec.timestamp in seen:
                raise ConfigError(
                    f"{path}: line {line}: duplicate hour {rec.timestamp} (first seen on line {seen[rec.timestamp]})"
                )
            seen[rec.timestamp] = line
            records.append(rec)
    return records


def write_records_csv(records: Iterable[OperatingRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RECORD_FIELDS)
        for r in records:
            writer.writerow(
                [
                    r.timestamp,
                    repr(float(r.temperature_c)),
                    repr(float(r.wind_kmh)),
                    int(r.rain),
                    int(r.lightning),
                    int(r.snow_ice),
                    repr(float(r.loading_rate)),
                    int(r.failed),
                ]
            )


# --- bundled case-study data ------------------------------------------


def load_fixture(name: str):
    """Parsed JSON document from the package's bundled data directory."""
    return json.loads(resources.files("credalcfr").joinpath("data", name).read_text(encoding="utf-8"))


LINE_PRIORS = {"TL1": 0.00027, "TL2": 0.00042}


def case_study_spec(line: str = "TL1") -> CfrNetworkSpec:
    """Case-study inputs: 40 failure counts, long-term normal-operation tables, line prior."""
    try:
        prior = LINE_PRIORS[line.upper()]
    except KeyError:
        raise ConfigError(f"unknown line {line!r}; choose from {', '.join(LINE_PRIORS)}") from None
    return CfrNetworkSpec(prior, load_fixture("failure_counts.json"), load_fixture("h1_statistics.json"))


def case_study_weights(which: str = "primary") -> dict:
    """Dirichlet prior weights: ``"primary"`` or ``"alternative"`` set."""
    names = {"primary": "weights_primary.json", "alternative": "weights_alternative.json"}
    try:
        return load_fixture(names[which])
    except KeyError:
        raise ConfigError(f"unknown weight set {which!r}; choose from {', '.join(names)}") from None


NETWORK_VARIANTS = {
    "idm": "IDM failure rows, snow/ice failure rows as Dirichlet points (reference variant)",
    "idm-all": "IDM failure rows for every condition variable",
    "dirichlet": "Dirichlet point rows with the primary weight set",
    "dirichlet-alt": "Dirichlet point rows with the alternative weight set",
    "credible": "95% IDM credible-interval rows",
}


def case_study_network(line: str = "TL1", variant: str = "idm") -> CredalNetwork:
    """Bundled case-study network for ``line`` ("TL1"/"TL2"); see :data:`NETWORK_VARIANTS`."""
    spec = case_study_spec(line)
    if variant == "idm":
        return build_cfr_network(spec, IdmMode(spec.s), {"E6": DirichletMode(case_study_weights("primary"))})
    if variant == "idm-all":
        return build_cfr_network(spec, IdmMode(spec.s))
    if variant == "dirichlet":
        return build_cfr_network(spec, DirichletMode(case_study_weights("primary")))
    if variant == "dirichlet-alt":
        return build_cfr_network(spec, DirichletMode(case_study_weights("alternative")))
    if variant == "credible":
        return build_cfr_network(spec, CredibleMode(0.95, spec.s))
    raise ConfigError(f"unknown network variant {variant!r}; choose from {', '.join(NETWORK_VARIANTS)}")


def case_study_scenarios() -> dict[str, Scenario]:
    return {doc["name"]: Scenario.from_dict(doc) for doc in load_fixture("scenarios.json")}


def case_study_failure_states() -> list[ConditionStateVector]:
    """Forty failure hours whose marginal and conditional counts equal the case-study table.

    Temperature/rain/snow are allotted jointly, lightning is spread over rain and
    no-rain hours, and wind and loading (unconditioned in the network) are assigned
    in sequence.
    """
    # (temperature, rain, snow) groups with their sizes
    groups = [
        ("e11", "e31", "e61", 5),
        ("e11", "e32", "e61", 3),
        ("e11", "e32", "e62", 4),
        ("e12", "e31", "e62", 5),
        ("e12", "e32", "e62", 2),
        ("e13", "e31", "e62", 16),
        ("e13", "e32", "e62", 5),
    ]
    base = [(t, r, sn) for t, r, sn, k in groups for _ in range(k)]
    lightning_left = {"e31": 16, "e32": 2}
    wind = ["e21"] * 8 + ["e22"] * 4 + ["e23"] * 28
    load = ["e51"] * 22 + ["e52"] * 18
    states = []
    for i, (t, r, sn) in enumerate(base):
        if lightning_left[r] > 0:
            lightning_left[r] -= 1
            light = "e41"
        else:
            light = "e42"
        states.append(ConditionStateVector(t, wind[i], r, light, load[i], sn, "h2"))
    return states


_READINGS = {
    "e11": 0.0, "e12": 15.0, "e13": 30.0,
    "e21": 5.0, "e22": 25.0, "e23": 48.0,
    "e51": 0.45, "e52": 0.95,
}


def case_study_records(normal_hours: int = 0) -> list[OperatingRecord]:
    """Raw hourly records for :func:`case_study_failure_states`, optionally padded with
    ``normal_hours`` mild non-failure hours."""
    records = []
    for hour, sv in enumerate(case_study_failure_states()):
        records.append(
            OperatingRecord(
                timestamp=hour,
                temperature_c=_READINGS[sv.e1],
                wind_kmh=_READINGS[sv.e2],
                rain=sv.e3 == "e31",
                lightning=sv.e4 == "e41",
                snow_ice=sv.e6 == "e61",
                loading_rate=_READINGS[sv.e5],
                failed=True,
            )
        )
    start = len(records)
    for hour in range(start, start + normal_hours):
        records.append(OperatingRecord(hour, 15.0, 5.0, False, False, False, 0.45, False))
    return records
