"""Categorical DAGs with interval-valued conditional tables and exact inference over them.

A :class:`CredalNetwork` whose intervals are all degenerate is an ordinary Bayesian
network, and :func:`bayes_infer` sums its factorized joint directly.  For interval
tables, :func:`credal_infer` enumerates the extreme mass functions of every
conditional credal set that can influence the query, runs the Bayesian computation
for each combination of extreme points and keeps the minimum and maximum.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .estimation import ProbabilityInterval
from .exceptions import (
    CombinatorialBudgetError,
    EmptyCredalSetError,
    InconsistentEvidenceError,
    NetworkError,
)

__all__ = [
    "DEFAULT_MAX_COMBINATIONS",
    "CategoricalVariable",
    "IntervalCPT",
    "CredalNetwork",
    "Evidence",
    "enumerate_extreme_mass_functions",
    "bayes_infer",
    "credal_infer",
    "credal_infer_soft",
]

DEFAULT_MAX_COMBINATIONS = 10**7
TOL = 1e-12
_CHUNK = 1 << 14

Config = tuple[str, ...]


@dataclass(frozen=True)
class CategoricalVariable:
    name: str
    states: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        if not self.name:
            raise NetworkError("variable name must be non-empty")
        if len(self.states) < 2:
            raise NetworkError(f"variable {self.name!r} needs at least two states")
        if len(set(self.states)) != len(self.states):
            raise NetworkError(f"variable {self.name!r} has duplicate state labels")

    def index(self, state: str) -> int:
        try:
            return self.states.index(state)
        except ValueError:
            raise NetworkError(
                f"unknown state {state!r} for variable {self.name!r}; valid states: {', '.join(self.states)}"
            ) from None


def _as_interval(value) -> ProbabilityInterval:
    if isinstance(value, ProbabilityInterval):
        return value
    if isinstance(value, (int, float)):
        return ProbabilityInterval.point(float(value))
    lo, hi = value
    return ProbabilityInterval(float(lo), float(hi))


@dataclass(frozen=True)
class IntervalCPT:
    """Conditional credal sets ``K(child | parents = config)`` given by probability intervals.

    ``rows`` maps each parent configuration (a tuple of parent state labels, ``()``
    for a root) to one interval per child state.  Point values are accepted and
    stored as degenerate intervals.
    """

    child: str
    parents: tuple[str, ...]
    rows: Mapping[Config, tuple[ProbabilityInterval, ...]]

    def __post_init__(self):
        object.__setattr__(self, "parents", tuple(self.parents))
        rows = {}
        for config, row in self.rows.items():
            key = (config,) if isinstance(config, str) else tuple(config)
            intervals = tuple(_as_interval(v) for v in row)
            lo = math.fsum(iv.lower for iv in intervals)
            hi = math.fsum(iv.upper for iv in intervals)
            if lo > 1.0 + TOL or hi < 1.0 - TOL:
                raise EmptyCredalSetError(
                    f"empty credal set for {self.child} | {key}: sum of lowers {lo:.6g}, sum of uppers {hi:.6g}"
                )
            rows[key] = intervals
        object.__setattr__(self, "rows", rows)

    @classmethod
    def from_points(cls, child: str, parents: Sequence[str], rows: Mapping) -> "IntervalCPT":
        return cls(child, tuple(parents), {k: tuple(ProbabilityInterval.point(p) for p in v) for k, v in rows.items()})

    @property
    def is_precise(self) -> bool:
        return all(iv.is_point for row in self.rows.values() for iv in row)


@dataclass(frozen=True)
class Evidence:
    """Hard observations ``variable -> state`` and soft ones ``variable -> {state: weight}``."""

    hard: Mapping[str, str] = field(default_factory=dict)
    soft: Mapping[str, Mapping[str, float]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "hard", dict(self.hard))
        object.__setattr__(self, "soft", {k: dict(v) for k, v in self.soft.items()})
        overlap = set(self.hard) & set(self.soft)
        if overlap:
            raise NetworkError(f"variables with both hard and soft evidence: {sorted(overlap)}")
        for name, weights in self.soft.items():
            if any(w < 0.0 or math.isnan(w) for w in weights.values()):
                raise NetworkError(f"soft evidence on {name!r} has negative weights")
            if abs(math.fsum(weights.values()) - 1.0) > 1e-9:
                raise NetworkError(f"soft evidence weights on {name!r} must sum to 1")


class CredalNetwork:
    """Directed acyclic graph of categorical variables with interval conditional tables.

    Immutable after construction; every variable has exactly one table covering
    every configuration of its parents.
    """

    def __init__(self, variables: Iterable[CategoricalVariable], cpts: Iterable[IntervalCPT], description: str = ""):
        self.description = description
        self._variables = {}
        for var in variables:
            if var.name in self._variables:
                raise NetworkError(f"duplicate variable name {var.name!r}")
            self._variables[var.name] = var
        self._cpts = {}
        for cpt in cpts:
            if cpt.child not in self._variables:
                raise NetworkError(f"table for unknown variable {cpt.child!r}")
            if cpt.child in self._cpts:
                raise NetworkError(f"more than one table for {cpt.child!r}")
            self._check_cpt(cpt)
            self._cpts[cpt.child] = cpt
        missing = set(self._variables) - set(self._cpts)
        if missing:
            raise NetworkError(f"variables without a table: {sorted(missing)}")
        self._order = self._toposort()

    def _check_cpt(self, cpt: IntervalCPT) -> None:
        child = self._variables[cpt.child]
        for p in cpt.parents:
            if p not in self._variables:
                raise NetworkError(f"{cpt.child!r} has unknown parent {p!r}")
        if len(set(cpt.parents)) != len(cpt.parents) or cpt.child in cpt.parents:
            raise NetworkError(f"invalid parent list for {cpt.child!r}")
        expected = set(itertools.product(*(self._variables[p].states for p in cpt.parents)))
        got = set(cpt.rows)
        if got != expected:
            extra = sorted(got - expected)
            lacking = sorted(expected - got)
            raise NetworkError(
                f"table for {cpt.child!r} must cover each parent configuration once; missing {lacking}, unexpected {extra}"
            )
        for config, row in cpt.rows.items():
            if len(row) != len(child.states):
                raise NetworkError(f"row {config} of {cpt.child!r} has {len(row)} entries, expected {len(child.states)}")

    def _toposort(self) -> list[str]:
        indeg = {v: len(self._cpts[v].parents) for v in self._variables}
        children: dict[str, list[str]] = {v: [] for v in self._variables}
        for v, cpt in self._cpts.items():
            for p in cpt.parents:
                children[p].append(v)
        # keep declaration order among ready nodes so results are reproducible
        ready = [v for v in self._variables if indeg[v] == 0]
        order = []
        while ready:
            v = ready.pop(0)
            order.append(v)
            for c in children[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        if len(order) != len(self._variables):
            raise NetworkError("network graph contains a directed cycle")
        return order

    @property
    def variables(self) -> list[CategoricalVariable]:
        return list(self._variables.values())

    @property
    def cpts(self) -> list[IntervalCPT]:
        return [self._cpts[v] for v in self._variables]

    @property
    def order(self) -> list[str]:
        return list(self._order)

    def variable(self, name: str) -> CategoricalVariable:
        try:
            return self._variables[name]
        except KeyError:
            raise NetworkError(f"unknown variable {name!r}; valid variables: {', '.join(self._variables)}") from None

    def cpt(self, name: str) -> IntervalCPT:
        self.variable(name)
        return self._cpts[name]

    @property
    def is_precise(self) -> bool:
        return all(c.is_precise for c in self._cpts.values())

    def replace_cpt(self, cpt: IntervalCPT) -> "CredalNetwork":
        cpts = [cpt if c.child == cpt.child else c for c in self.cpts]
        return CredalNetwork(self.variables, cpts, self.description)

    def ancestors(self, names: Iterable[str]) -> set[str]:
        seen: set[str] = set()
        stack = list(names)
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            stack.extend(self.cpt(v).parents)
        return seen

    # --- JSON document -------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "description": self.description,
            "variables": [{"name": v.name, "states": list(v.states)} for v in self.variables],
            "cpts": [
                {
                    "child": c.child,
                    "parents": list(c.parents),
                    "rows": {",".join(k): [[iv.lower, iv.upper] for iv in row] for k, row in c.rows.items()},
                }
                for c in self.cpts
            ],
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "CredalNetwork":
        try:
            variables = [CategoricalVariable(v["name"], tuple(v["states"])) for v in doc["variables"]]
            cpts = []
            for c in doc["cpts"]:
                parents = tuple(c.get("parents", ()))
                rows = {}
                for key, row in c["rows"].items():
                    config = tuple(key.split(",")) if parents else ()
                    rows[config] = [_as_interval(v) for v in row]
                cpts.append(IntervalCPT(c["child"], parents, rows))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, (NetworkError, EmptyCredalSetError)):
                raise
            raise NetworkError(f"malformed network document: {exc}") from exc
        return cls(variables, cpts, doc.get("description", ""))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "CredalNetwork":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def __repr__(self) -> str:
        return f"CredalNetwork({len(self._variables)} variables, precise={self.is_precise})"


def enumerate_extreme_mass_functions(intervals: Sequence) -> list[tuple[float, ...]]:
    """Vertices of ``{p : lower <= p <= upper, sum(p) = 1}``.

    A vertex has every coordinate but at most one at an interval end; each choice of
    the free coordinate and of the ends for the others is tried and kept when the
    free coordinate lands inside its own interval.
    """
    ivs = [_as_interval(v) for v in intervals]
    lo = [iv.lower for iv in ivs]
    hi = [iv.upper for iv in ivs]
    if math.fsum(lo) > 1.0 + TOL or math.fsum(hi) < 1.0 - TOL:
        raise EmptyCredalSetError(f"intervals admit no mass function (sum lower {sum(lo)}, sum upper {sum(hi)})")
    m = len(ivs)
    vertices: list[tuple[float, ...]] = []
    for free in range(m):
        others = [i for i in range(m) if i != free]
        for ends in itertools.product((0, 1), repeat=m - 1):
            p = [0.0] * m
            for i, e in zip(others, ends):
                p[i] = hi[i] if e else lo[i]
            rest = 1.0 - math.fsum(p[i] for i in others)
            if rest < lo[free] - TOL or rest > hi[free] + TOL:
                continue
            p[free] = min(max(rest, lo[free]), hi[free])
            if not any(all(abs(a - b) <= TOL for a, b in zip(p, v)) for v in vertices):
                vertices.append(tuple(p))
    return sorted(vertices)


class _Compiled:
    """Evidence-specific factorization: the parent configurations that matter and the
    terms of the joint sum, each a list of (table row, child state) factors."""

    def __init__(self, network: CredalNetwork, query: str, query_state: str, hard: Mapping[str, str]):
        qvar = network.variable(query)
        self.q_index = qvar.index(query_state)
        if query in hard:
            raise NetworkError(f"query variable {query!r} must not carry evidence")
        hard_idx = {}
        for name, state in hard.items():
            hard_idx[name] = network.variable(name).index(state)
        # variables outside the ancestral set of query and evidence sum out to one
        relevant = network.ancestors([query, *hard])
        order = [v for v in network.order if v in relevant]
        free = [v for v in order if v not in hard_idx]
        self.rows: list[tuple[str, Config]] = []
        row_index: dict[tuple[str, Config], int] = {}
        terms = []
        matches = []
        free_vars = [network.variable(v) for v in free]
        for combo in itertools.product(*(range(len(v.states)) for v in free_vars)):
            assign = dict(hard_idx)
            assign.update(zip(free, combo))
            factors = []
            for v in order:
                cpt = network.cpt(v)
                config = tuple(network.variable(p).states[assign[p]] for p in cpt.parents)
                key = (v, config)
                if key not in row_index:
                    row_index[key] = len(self.rows)
                    self.rows.append(key)
                factors.append((row_index[key], assign[v]))
            terms.append(factors)
            matches.append(assign[query] == self.q_index)
        self.matches = np.array(matches, dtype=bool)
        self.network = network
        self._pairs = sorted({f for term in terms for f in term})
        pair_pos = {p: i for i, p in enumerate(self._pairs)}
        self._term_index = np.array([[pair_pos[f] for f in term] for term in terms], dtype=np.intp)

    def vertex_sets(self) -> list[np.ndarray]:
        out = []
        for var, config in self.rows:
            row = self.network.cpt(var).rows[config]
            out.append(np.array(enumerate_extreme_mass_functions(row), dtype=float))
        return out

    def ratios(self, tables: Sequence[np.ndarray], choice: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Numerators and denominators for each column of ``choice`` (rows x combos)."""
        vals = np.empty((len(self._pairs), choice.shape[1]))
        for i, (r, s) in enumerate(self._pairs):
            vals[i] = tables[r][choice[r], s]
        joint = vals[self._term_index].prod(axis=1)
        return joint[self.matches].sum(axis=0), joint.sum(axis=0)


def bayes_infer(network: CredalNetwork, query: str, query_state: str, evidence: Evidence | Mapping[str, str] | None = None) -> float:
    """``P(query = query_state | evidence)`` on a network whose tables are all points."""
    hard = _hard_only(evidence)
    if not network.is_precise:
        raise NetworkError("bayes_infer needs point-valued tables; use credal_infer for intervals")
    comp = _Compiled(network, query, query_state, hard)
    tables = [np.array([[iv.lower for iv in network.cpt(v).rows[c]]]) for v, c in comp.rows]
    num, den = comp.ratios(tables, np.zeros((len(tables), 1), dtype=np.intp))
    if not den[0] > 0.0:
        raise InconsistentEvidenceError(f"evidence {hard} has zero probability")
    return float(num[0] / den[0])


def _hard_only(evidence) -> dict[str, str]:
    if evidence is None:
        return {}
    if isinstance(evidence, Evidence):
        if evidence.soft:
            raise NetworkError("soft evidence requires credal_infer_soft")
        return dict(evidence.hard)
    return dict(evidence)


def credal_infer(
    network: CredalNetwork,
    query: str,
    query_state: str,
    evidence: Evidence | Mapping[str, str] | None = None,
    max_combinations: int = DEFAULT_MAX_COMBINATIONS,
) -> ProbabilityInterval:
    """Lower and upper ``P(query = query_state | evidence)`` over the strong extension.

    Only tables rows reachable under the evidence are enumerated.  Combinations whose
    evidence probability is zero define no conditional and are skipped; if every
    combination gives zero the evidence is reported as inconsistent.
    """
    hard = _hard_only(evidence)
    comp = _Compiled(network, query, query_state, hard)
    tables = comp.vertex_sets()
    sizes = [len(t) for t in tables]
    total = math.prod(sizes)
    if total > max_combinations:
        raise CombinatorialBudgetError(
            f"{total} extreme-point combinations exceed the budget of {max_combinations}; "
            "narrow or fix some conditional intervals (point rows contribute a single vertex)"
        )
    lo, hi = math.inf, -math.inf
    radix = np.array(sizes, dtype=np.int64)
    for start in range(0, total, _CHUNK):
        flat = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        choice = np.empty((len(sizes), flat.size), dtype=np.intp)
        rem = flat
        for r in range(len(sizes) - 1, -1, -1):
            choice[r] = rem % radix[r]
            rem = rem // radix[r]
        num, den = comp.ratios(tables, choice)
        ok = den > 0.0
        if not ok.any():
            continue
        ratio = num[ok] / den[ok]
        lo = min(lo, float(ratio.min()))
        hi = max(hi, float(ratio.max()))
    if lo == math.inf:
        raise InconsistentEvidenceError(f"evidence {hard} has zero probability under every extreme model")
    return ProbabilityInterval(lo, hi)


def credal_infer_soft(
    network: CredalNetwork,
    query: str,
    query_state: str,
    evidence: Evidence,
    max_combinations: int = DEFAULT_MAX_COMBINATIONS,
) -> ProbabilityInterval:
    """Mix hard-evidence credal bounds over the soft-evidence states by total probability.

    Each joint completion of the soft variables contributes its interval weighted by
    the product of its soft weights; lower and upper bounds are mixed separately.
    """
    if not evidence.soft:
        return credal_infer(network, query, query_state, evidence, max_combinations)
    names = list(evidence.soft)
    for name in names:
        var = network.variable(name)
        for state in evidence.soft[name]:
            var.index(state)
    choices = [[(s, w) for s, w in evidence.soft[n].items() if w > 0.0] for n in names]
    lower = upper = 0.0
    for combo in itertools.product(*choices):
        weight = math.prod(w for _, w in combo)
        hard = dict(evidence.hard)
        hard.update({n: s for n, (s, _) in zip(names, combo)})
        iv = credal_infer(network, query, query_state, hard, max_combinations)
        lower += weight * iv.lower
        upper += weight * iv.upper
    return ProbabilityInterval(lower, upper)
