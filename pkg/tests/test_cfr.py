import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from credalcfr.cfr import (
    CONDITION_VARIABLES,
    CONTEXT_PARENTS,
    LINE_PRIORS,
    STATES,
    CfrNetworkSpec,
    CredibleMode,
    DirichletMode,
    IdmMode,
    OperatingRecord,
    Scenario,
    build_cfr_network,
    case_study_failure_states,
    case_study_network,
    case_study_records,
    case_study_scenarios,
    case_study_spec,
    case_study_weights,
    classify_record,
    count_contingencies,
    estimate_tables,
    evaluate_scenario,
    load_fixture,
    read_records_csv,
    write_records_csv,
)
from credalcfr.credal import bayes_infer
from credalcfr.estimation import dirichlet_posterior_mean
from credalcfr.exceptions import ConfigError, DomainError, NetworkError


def record(t=15.0, w=10.0, rain=False, lightning=False, snow=False, load=0.45, failed=False, hour=0):
    return OperatingRecord(hour, t, w, rain, lightning, snow, load, failed)


# --- classification ------------------------------------------------------------


def test_classify_examples():
    sv = classify_record(record(30, 48, True, True, False, 0.95))
    assert tuple(sv) == ("e13", "e23", "e31", "e41", "e52", "e62", "h1")
    sv = classify_record(record(4, 12, load=0.80))
    assert (sv.e1, sv.e2, sv.e5) == ("e11", "e21", "e51")
    sv = classify_record(record(15, 10, False, False, False, 0.45))
    assert tuple(sv)[:6] == ("e12", "e21", "e32", "e42", "e51", "e62")
    assert classify_record(record(26, 40, load=0.8000001, snow=True, failed=True)) == (
        "e12", "e22", "e32", "e42", "e52", "e61", "h2"
    )


@settings(max_examples=300, deadline=None)
@given(
    t=st.floats(-60, 60),
    w=st.floats(0, 200),
    load=st.floats(0, 1.5),
    flags=st.tuples(st.booleans(), st.booleans(), st.booleans(), st.booleans()),
)
def test_classification_total(t, w, load, flags):
    sv = classify_record(record(t, w, *flags[:3], load, flags[3]))
    for var, state in zip(CONDITION_VARIABLES, sv[:6]):
        assert state in STATES[var]
    assert sv.h in STATES["H"]


def test_record_validation():
    with pytest.raises(DomainError):
        record(t=math.nan)
    with pytest.raises(DomainError):
        record(w=-1)
    with pytest.raises(DomainError):
        record(load=-0.1)


# --- counting ------------------------------------------------------------------


def test_case_study_counts_reconstructed():
    counts = count_contingencies(case_study_failure_states())
    assert counts == load_fixture("failure_counts.json")
    assert counts["E1"][""] == [12, 7, 21]
    assert counts["E2"][""] == [8, 4, 28]
    assert counts["E5"][""] == [22, 18]
    assert counts["E4"]["e31"] == [16, 10]
    assert counts["E4"]["e32"] == [2, 12]
    assert counts["E3"]["e11"] == [5, 7]
    assert counts["E6"]["e11"] == [8, 4]


def test_counts_from_raw_records(tmp_path):
    records = case_study_records(normal_hours=25)
    path = tmp_path / "records.csv"
    write_records_csv(records, path)
    again = read_records_csv(path)
    assert again == records
    counts = count_contingencies(classify_record(r) for r in again)
    assert counts == load_fixture("failure_counts.json")


def test_count_conservation_and_empty():
    counts = count_contingencies([])
    assert all(x == 0 for var in counts.values() for row in var.values() for x in row)
    states = case_study_failure_states()
    counts = count_contingencies(states)
    for var in CONDITION_VARIABLES:
        total = sum(sum(row) for row in counts[var].values())
        assert total == len(states)


def test_counts_match_multinomial_expectation():
    rng = np.random.default_rng(99)
    probs = [0.2, 0.5, 0.3]
    temps = rng.choice([0.0, 15.0, 30.0], size=1000, p=probs)
    recs = [record(t=float(t), failed=True, hour=i) for i, t in enumerate(temps)]
    counts = count_contingencies(classify_record(r) for r in recs)["E1"][""]
    for c, p in zip(counts, probs):
        assert abs(c - 1000 * p) <= 4 * math.sqrt(1000 * p * (1 - p))


def test_csv_errors(tmp_path):
    path = tmp_path / "bad.csv"
    header = "timestamp,temperature_c,wind_kmh,rain,lightning,snow_ice,loading_rate,failed\n"
    path.write_text(header + "0,10,5,0,0,0,0.5,0\n1,abc,5,0,0,0,0.5,0\n")
    with pytest.raises(ConfigError, match="line 3"):
        read_records_csv(path)
    path.write_text(header + "0,10,5,0,0,0,0.5,0\n0,11,5,0,0,0,0.5,1\n")
    with pytest.raises(ConfigError, match="line 3: duplicate hour 0"):
        read_records_csv(path)
    path.write_text(header + "0,10,5,0,2,0,0.5,0\n")
    with pytest.raises(ConfigError, match="line 2"):
        read_records_csv(path)
    path.write_text(header + "0,10,5,0,0,0\n")
    with pytest.raises(ConfigError, match="line 2"):
        read_records_csv(path)
    path.write_text("time,temp\n")
    with pytest.raises(ConfigError, match="line 1"):
        read_records_csv(path)
    path.write_text("")
    assert read_records_csv(path) == []


# --- network construction ------------------------------------------------------


def test_network_topology():
    net = build_cfr_network(case_study_spec("TL1"))
    assert net.cpt("H").parents == ()
    for var in CONDITION_VARIABLES:
        assert net.cpt(var).parents == ("H", *CONTEXT_PARENTS[var])
    assert [iv.lower for iv in net.cpt("H").rows[()]] == [1 - 0.00027, 0.00027]
    for var in CONDITION_VARIABLES:
        for config, row in net.cpt(var).rows.items():
            if config[0] == "h1":
                assert all(iv.is_point for iv in row)


def test_idm_tables():
    net = build_cfr_network(case_study_spec("TL1"))
    e5 = net.cpt("E5").rows[("h2",)]
    assert (e5[0].lower, e5[0].upper) == (22 / 41, 23 / 41)
    assert (e5[1].lower, e5[1].upper) == (18 / 41, 19 / 41)
    assert e5[0].rounded() == (0.54, 0.56) and e5[1].rounded() == (0.44, 0.46)
    snow = net.cpt("E6").rows[("h2", "e13")]
    assert (snow[0].lower, snow[0].upper) == (0.0, 1 / 22)


def test_dirichlet_tables():
    weights = case_study_weights("primary")
    net = build_cfr_network(case_study_spec(), DirichletMode(weights))
    assert net.is_precise
    counts = load_fixture("failure_counts.json")
    for var in CONDITION_VARIABLES:
        for ctx, row in counts[var].items():
            config = ("h2", *ctx.split(",")) if ctx else ("h2",)
            expected = dirichlet_posterior_mean(row, weights[var][ctx])
            assert [iv.lower for iv in net.cpt(var).rows[config]] == pytest.approx(expected, abs=1e-15)


def test_credible_mode_builds():
    net = build_cfr_network(case_study_spec(), CredibleMode(0.95))
    iv = evaluate_scenario(net, case_study_scenarios()["I"])
    idm = evaluate_scenario(case_study_network("TL1", "idm-all"), case_study_scenarios()["I"])
    assert iv.lower < idm.lower and idm.upper < iv.upper


def test_estimate_tables_overrides():
    counts = load_fixture("failure_counts.json")
    tables = estimate_tables(counts, IdmMode(1.0), {"E6": DirichletMode(case_study_weights())})
    assert all(iv.is_point for row in tables["E6"].values() for iv in row)
    assert not tables["E1"][""][0].is_point
    with pytest.raises(ConfigError):
        estimate_tables(counts, IdmMode(1.0), {"E9": IdmMode(1.0)})


def test_spec_validation_and_round_trip(tmp_path):
    spec = case_study_spec("TL2")
    assert spec.prior_failure_rate == LINE_PRIORS["TL2"]
    assert CfrNetworkSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(ConfigError):
        spec.with_prior(0.0)
    bad_h1 = load_fixture("h1_statistics.json")
    bad_h1["E1"][""] = [0.3, 0.3, 0.3]
    with pytest.raises(ConfigError):
        CfrNetworkSpec(0.001, load_fixture("failure_counts.json"), bad_h1)
    bad_counts = load_fixture("failure_counts.json")
    del bad_counts["E3"]["e12"]
    with pytest.raises(ConfigError, match="e12"):
        CfrNetworkSpec(0.001, bad_counts, load_fixture("h1_statistics.json"))
    with pytest.raises(ConfigError):
        case_study_spec("TL3")


# --- scenarios -----------------------------------------------------------------


def test_scenario_validation():
    with pytest.raises(ConfigError):
        Scenario("partial", {"E1": "e11"})
    with pytest.raises(ConfigError):
        Scenario("twice", {v: STATES[v][0] for v in CONDITION_VARIABLES}, {"E2": {"e21": 1.0}})
    sc = case_study_scenarios()["IV"]
    assert Scenario.from_dict(sc.to_dict()) == sc
    bad = Scenario("bad", {**{v: STATES[v][0] for v in CONDITION_VARIABLES}, "E1": "e99"})
    with pytest.raises(NetworkError):
        evaluate_scenario(case_study_network(), bad)


def test_dirichlet_scenarios():
    net = case_study_network("TL1", "dirichlet")
    sc = case_study_scenarios()
    i = evaluate_scenario(net, sc["I"])
    assert i.is_point
    assert i.lower == pytest.approx(2.19e-2, abs=0.02e-2)
    assert i.lower == pytest.approx(bayes_infer(net, "H", "h2", sc["I"].hard), abs=1e-15)
    assert evaluate_scenario(net, sc["III"]).lower == pytest.approx(3.37e-2, abs=0.02e-2)


def test_idm_scenarios():
    net = case_study_network("TL1", "idm")
    sc = case_study_scenarios()
    ii = evaluate_scenario(net, sc["II"])
    assert ii.lower == pytest.approx(8.88e-6, rel=0.01)
    assert ii.upper == pytest.approx(1.94e-5, rel=0.01)
    iii = evaluate_scenario(net, sc["III"])
    assert iii.lower == pytest.approx(2.85e-2, rel=0.01)
    assert iii.upper == pytest.approx(3.66e-2, rel=0.01)


def test_prior_monotonicity_and_adversity():
    net = case_study_network("TL1", "idm-all")
    sc = case_study_scenarios()
    one, two, three = (evaluate_scenario(net, sc[k]) for k in ("I", "II", "III"))
    assert three.lower > one.lower and three.upper > one.upper
    assert one.lower > two.upper
    previous = None
    for prior in (1e-5, 1e-4, 2.7e-4, 1e-3, 1e-2):
        iv = evaluate_scenario(net, Scenario("p", sc["I"].hard, prior_failure_rate=prior))
        if previous is not None:
            assert iv.lower > previous.lower and iv.upper > previous.upper
        previous = iv


def test_upper_bound_closed_form():
    # with every condition observed and point h1 rows, the CFR is increasing in each
    # observed h2 factor, so the bounds come from all-lower and all-upper factors
    net = case_study_network("TL1", "idm-all")
    for sc in case_study_scenarios().values():
        if sc.soft:
            continue
        evidence = sc.hard
        lo_prod = hi_prod = h1_prod = 1.0
        for var in CONDITION_VARIABLES:
            ctx = tuple(evidence[q] for q in CONTEXT_PARENTS[var])
            k = STATES[var].index(evidence[var])
            lo_prod *= net.cpt(var).rows[("h2", *ctx)][k].lower
            hi_prod *= net.cpt(var).rows[("h2", *ctx)][k].upper
            h1_prod *= net.cpt(var).rows[("h1", *ctx)][k].lower
        prior = sc.prior_failure_rate
        iv = evaluate_scenario(net, sc)
        assert iv.upper == pytest.approx(prior * hi_prod / (prior * hi_prod + (1 - prior) * h1_prod), rel=1e-12)
        assert iv.lower == pytest.approx(prior * lo_prod / (prior * lo_prod + (1 - prior) * h1_prod), rel=1e-12)


def test_mode_nesting_with_bundled_weights():
    counts = load_fixture("failure_counts.json")
    spec = case_study_spec()
    idm = case_study_network("TL1", "idm-all")
    for which in ("primary", "alternative"):
        point = build_cfr_network(spec.with_counts(counts), DirichletMode(case_study_weights(which)))
        for sc in case_study_scenarios().values():
            assert evaluate_scenario(idm, sc).contains(evaluate_scenario(point, sc).lower, tol=1e-15)


def test_soft_evidence_scenario_between_hard_cases():
    net = case_study_network("TL2", "idm")
    sc = case_study_scenarios()["IV"]
    iv = evaluate_scenario(net, sc)
    hard23 = evaluate_scenario(net, Scenario("a", {**sc.hard, "E2": "e23"}, prior_failure_rate=sc.prior_failure_rate))
    hard22 = evaluate_scenario(net, Scenario("b", {**sc.hard, "E2": "e22"}, prior_failure_rate=sc.prior_failure_rate))
    assert iv.lower == pytest.approx(0.7 * hard23.lower + 0.3 * hard22.lower, rel=1e-14)
    assert iv.upper == pytest.approx(0.7 * hard23.upper + 0.3 * hard22.upper, rel=1e-14)
