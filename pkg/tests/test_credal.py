import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from credalcfr.credal import (
    CategoricalVariable,
    CredalNetwork,
    Evidence,
    IntervalCPT,
    bayes_infer,
    credal_infer,
    credal_infer_soft,
    enumerate_extreme_mass_functions,
)
from credalcfr.estimation import ProbabilityInterval, idm_intervals
from credalcfr.exceptions import (
    CombinatorialBudgetError,
    EmptyCredalSetError,
    InconsistentEvidenceError,
    NetworkError,
)


from oracles import brute_force, polytope_vertices, random_network, random_row, same_vertex_sets


def fig2_network(p_h=0.4):
    variables = [
        CategoricalVariable("H", ["h", "hc"]),
        CategoricalVariable("G", ["g", "gc"]),
        CategoricalVariable("Q", ["q", "qc"]),
    ]
    cpts = [
        IntervalCPT.from_points("H", [], {(): [p_h, 1 - p_h]}),
        IntervalCPT.from_points("G", ["H"], {("h",): [0.3, 0.7], ("hc",): [0.2, 0.8]}),
        IntervalCPT.from_points(
            "Q",
            ["G", "H"],
            {
                ("g", "h"): [0.5, 0.5],
                ("g", "hc"): [0.6, 0.4],
                ("gc", "h"): [0.1, 0.9],
                ("gc", "hc"): [0.7, 0.3],
            },
        ),
    ]
    return CredalNetwork(variables, cpts, "three-node example")


# --- vertex enumeration ------------------------------------------------------


def test_vertices_two_state_example():
    v = enumerate_extreme_mass_functions([(0.3, 0.5), (0.5, 0.7)])
    assert len(v) == 2
    assert np.allclose(v, [(0.3, 0.7), (0.5, 0.5)], atol=1e-15)
    assert enumerate_extreme_mass_functions([(0.4, 0.4), (0.6, 0.6)]) == [(0.4, 0.6)]


def test_vertices_of_idm_intervals_raise_one_coordinate():
    ivs = idm_intervals([12, 7, 21], 1.0)
    verts = enumerate_extreme_mass_functions(ivs)
    assert len(verts) == 3
    for v in verts:
        at_upper = [abs(p - iv.upper) < 1e-12 for p, iv in zip(v, ivs)]
        at_lower = [abs(p - iv.lower) < 1e-12 for p, iv in zip(v, ivs)]
        assert sum(at_upper) == 1 and sum(at_lower) == 2
    assert same_vertex_sets(verts, polytope_vertices([iv.lower for iv in ivs], [iv.upper for iv in ivs]))


def test_vertices_reject_empty_set():
    with pytest.raises(EmptyCredalSetError):
        enumerate_extreme_mass_functions([(0.6, 0.7), (0.5, 0.6)])
    with pytest.raises(EmptyCredalSetError):
        enumerate_extreme_mass_functions([(0.1, 0.2), (0.1, 0.3)])


@settings(max_examples=300, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), k=st.integers(2, 4), width=st.floats(0.0, 0.6))
def test_vertices_match_linear_algebra_oracle(seed, k, width):
    rng = np.random.default_rng(seed)
    row = random_row(rng, k, width)
    ours = enumerate_extreme_mass_functions(row)
    assert same_vertex_sets(ours, polytope_vertices([a for a, _ in row], [b for _, b in row]))
    for x, y in itertools.combinations(ours, 2):
        assert max(abs(a - b) for a, b in zip(x, y)) > 1e-12
    for v in ours:
        assert math.fsum(v) == pytest.approx(1.0, abs=1e-12)
    if k == 2:
        assert len(ours) <= 2


# --- Bayesian inference ------------------------------------------------------


def test_bayes_three_node_example():
    p = bayes_infer(fig2_network(), "H", "h", {"G": "g", "Q": "q"})
    assert p == pytest.approx(0.4 * 0.3 * 0.5 / (0.4 * 0.3 * 0.5 + 0.6 * 0.2 * 0.6), abs=1e-15)
    assert round(p, 4) == 0.4545


def test_bayes_root_marginal():
    assert bayes_infer(fig2_network(), "H", "h") == pytest.approx(0.4)
    net = fig2_network()
    assert bayes_infer(net, "G", "g") == pytest.approx(0.4 * 0.3 + 0.6 * 0.2)


def test_bayes_rejects_interval_network():
    net = fig2_network().replace_cpt(IntervalCPT("H", [], {(): [(0.3, 0.5), (0.5, 0.7)]}))
    with pytest.raises(NetworkError):
        bayes_infer(net, "H", "h", {"G": "g"})


def test_inconsistent_evidence():
    net = fig2_network().replace_cpt(IntervalCPT.from_points("G", ["H"], {("h",): [0.0, 1.0], ("hc",): [0.0, 1.0]}))
    with pytest.raises(InconsistentEvidenceError):
        bayes_infer(net, "H", "h", {"G": "g"})
    with pytest.raises(InconsistentEvidenceError):
        credal_infer(net, "H", "h", {"G": "g"})


def test_validation_errors():
    with pytest.raises(NetworkError, match="valid states: h, hc"):
        credal_infer(fig2_network(), "H", "bogus", {})
    with pytest.raises(NetworkError):
        credal_infer(fig2_network(), "H", "h", {"Z": "z"})
    with pytest.raises(NetworkError):
        credal_infer(fig2_network(), "H", "h", {"H": "h"})
    variables = [CategoricalVariable("A", ["a1", "a2"]), CategoricalVariable("B", ["b1", "b2"])]
    cyc = [
        IntervalCPT.from_points("A", ["B"], {("b1",): [0.5, 0.5], ("b2",): [0.5, 0.5]}),
        IntervalCPT.from_points("B", ["A"], {("a1",): [0.5, 0.5], ("a2",): [0.5, 0.5]}),
    ]
    with pytest.raises(NetworkError):
        CredalNetwork(variables, cyc)
    with pytest.raises(NetworkError):
        CredalNetwork(variables, [IntervalCPT.from_points("A", [], {(): [0.5, 0.5]})])
    with pytest.raises(NetworkError):
        CredalNetwork(
            variables,
            [
                IntervalCPT.from_points("A", [], {(): [0.5, 0.5]}),
                IntervalCPT.from_points("B", ["A"], {("a1",): [0.5, 0.5]}),
            ],
        )
    with pytest.raises(NetworkError):
        CategoricalVariable("A", ["a"])
    with pytest.raises(NetworkError):
        Evidence({"A": "a1"}, {"A": {"a1": 1.0}})
    with pytest.raises(NetworkError):
        Evidence({}, {"A": {"a1": 0.5, "a2": 0.4}})


# --- credal inference --------------------------------------------------------


def test_degenerate_network_gives_point():
    net = fig2_network()
    iv = credal_infer(net, "H", "h", {"G": "g", "Q": "q"})
    assert iv.is_point
    assert iv.lower == pytest.approx(bayes_infer(net, "H", "h", {"G": "g", "Q": "q"}), abs=1e-15)


def test_random_networks_match_brute_force():
    rng = np.random.default_rng(20240601)
    checked = 0
    while checked < 60:
        net = random_network(rng)
        names = net.order
        query = names[rng.integers(len(names))]
        others = [n for n in names if n != query]
        hard = {n: net.variable(n).states[rng.integers(len(net.variable(n).states))] for n in others if rng.random() < 0.5}
        state = net.variable(query).states[0]
        expected = brute_force(net, query, state, hard)
        if expected is None or expected[0] == math.inf:
            continue
        iv = credal_infer(net, query, state, hard)
        assert iv.lower == pytest.approx(expected[0], abs=1e-10)
        assert iv.upper == pytest.approx(expected[1], abs=1e-10)
        checked += 1


def test_sandwich_and_interior_samples():
    rng = np.random.default_rng(7)
    for _ in range(20):
        net = random_network(rng, max_width=0.3)
        query, *rest = net.order[::-1]
        hard = {rest[0]: net.variable(rest[0]).states[0]} if rest else {}
        try:
            iv = credal_infer(net, query, net.variable(query).states[0], hard)
        except InconsistentEvidenceError:
            continue
        for _ in range(30):
            cpts = []
            for cpt in net.cpts:
                rows = {}
                for config, row in cpt.rows.items():
                    verts = np.array(enumerate_extreme_mass_functions(row))
                    weights = rng.dirichlet(np.ones(len(verts)))
                    rows[config] = list(weights @ verts)
                cpts.append(IntervalCPT.from_points(cpt.child, cpt.parents, rows))
            point = CredalNetwork(net.variables, cpts)
            try:
                p = bayes_infer(point, query, net.variable(query).states[0], hard)
            except InconsistentEvidenceError:
                continue
            assert iv.lower - 1e-12 <= p <= iv.upper + 1e-12


def test_complement_coherence():
    rng = np.random.default_rng(11)
    for _ in range(20):
        net = random_network(rng)
        query = net.order[0]
        var = net.variable(query)
        if len(var.states) != 2:
            continue
        hard = {net.order[-1]: net.variable(net.order[-1]).states[1]} if net.order[-1] != query else {}
        a = credal_infer(net, query, var.states[0], hard)
        b = credal_infer(net, query, var.states[1], hard)
        assert a.lower == pytest.approx(1 - b.upper, abs=1e-12)
        assert a.upper == pytest.approx(1 - b.lower, abs=1e-12)


def test_width_shrinks_to_bayes():
    base = fig2_network()
    target = bayes_infer(base, "H", "h", {"G": "g", "Q": "q"})
    widths = []
    for eps in (0.1, 0.01, 0.001, 0.0):
        cpts = []
        for cpt in base.cpts:
            rows = {
                config: [(max(0.0, iv.lower - eps), min(1.0, iv.upper + eps)) for iv in row]
                for config, row in cpt.rows.items()
            }
            cpts.append(IntervalCPT(cpt.child, cpt.parents, rows))
        iv = credal_infer(CredalNetwork(base.variables, cpts), "H", "h", {"G": "g", "Q": "q"})
        assert iv.contains(target, tol=1e-12)
        widths.append(iv.width)
    assert widths == sorted(widths, reverse=True)
    assert widths[-1] == pytest.approx(0.0, abs=1e-15)


def test_combinatorial_budget():
    net = random_network(np.random.default_rng(3), n_nodes=3, max_width=0.3)
    with pytest.raises(CombinatorialBudgetError):
        credal_infer(net, net.order[-1], net.variable(net.order[-1]).states[0], {}, max_combinations=1)


def test_soft_evidence_mixture_linear():
    net = fig2_network().replace_cpt(
        IntervalCPT("G", ["H"], {("h",): [(0.25, 0.35), (0.65, 0.75)], ("hc",): [(0.15, 0.25), (0.75, 0.85)]})
    )
    hard_g = credal_infer(net, "H", "h", {"G": "g", "Q": "q"})
    hard_gc = credal_infer(net, "H", "h", {"G": "gc", "Q": "q"})
    for w in (0.0, 0.5, 1.0):
        weights = {"g": w, "gc": 1 - w}
        iv = credal_infer_soft(net, "H", "h", Evidence({"Q": "q"}, {"G": weights}))
        assert iv.lower == pytest.approx(w * hard_g.lower + (1 - w) * hard_gc.lower, abs=1e-15)
        assert iv.upper == pytest.approx(w * hard_g.upper + (1 - w) * hard_gc.upper, abs=1e-15)
    single = credal_infer_soft(net, "H", "h", Evidence({"Q": "q"}, {"G": {"g": 1.0}}))
    assert tuple(single) == tuple(hard_g)


def test_unreachable_rows_do_not_count():
    # a wide interval on a row that the evidence rules out leaves the result a point
    net = fig2_network().replace_cpt(
        IntervalCPT(
            "Q",
            ["G", "H"],
            {
                ("g", "h"): [0.5, 0.5],
                ("g", "hc"): [0.6, 0.4],
                ("gc", "h"): [(0.0, 1.0), (0.0, 1.0)],
                ("gc", "hc"): [(0.0, 1.0), (0.0, 1.0)],
            },
        )
    )
    iv = credal_infer(net, "H", "h", {"G": "g", "Q": "q"})
    assert iv.is_point


def test_json_round_trip(tmp_path):
    net = random_network(np.random.default_rng(5))
    path = tmp_path / "net.json"
    net.save(path)
    again = CredalNetwork.load(path)
    assert again.to_dict() == net.to_dict()
    q = net.order[-1]
    assert tuple(credal_infer(again, q, net.variable(q).states[0])) == tuple(credal_infer(net, q, net.variable(q).states[0]))


def test_order_independent_of_declaration():
    net = fig2_network()
    shuffled = CredalNetwork(list(reversed(net.variables)), list(reversed(net.cpts)))
    a = credal_infer(net, "H", "h", {"Q": "q"})
    b = credal_infer(shuffled, "H", "h", {"Q": "q"})
    assert a.lower == pytest.approx(b.lower, abs=1e-15) and a.upper == pytest.approx(b.upper, abs=1e-15)


def test_interval_cpt_accepts_mixed_values():
    cpt = IntervalCPT("A", [], {(): [0.3, ProbabilityInterval(0.6, 0.7)]})
    assert not cpt.is_precise
    with pytest.raises(EmptyCredalSetError):
        IntervalCPT("A", [], {(): [0.5, 0.6]})

