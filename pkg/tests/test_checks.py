"""The checkers find violations when present and clear valid measures."""

import math

import pytest

from vertexlab import checks, lattice, sixvertex as sv


def leq_bits(x, y):
    return all(u <= v for u, v in zip(x, y))


def test_lattice_condition_detects_violation():
    bad = {(0, 0): 0.1, (1, 1): 0.1, (0, 1): 0.4, (1, 0): 0.4}
    rep = checks.lattice_condition_check(
        "bad", bad, lambda x, y: tuple(map(min, x, y)), lambda x, y: tuple(map(max, x, y)))
    assert not rep.passed
    assert rep.worst_slack == pytest.approx(0.01 - 0.16)
    assert set(rep.witness) == {(0, 1), (1, 0)}


def test_lattice_condition_passes_product_measure():
    p, q = 0.3, 0.8
    dist = {
        (i, j): (p if i else 1 - p) * (q if j else 1 - q)
        for i in (0, 1) for j in (0, 1)
    }
    rep = checks.lattice_condition_check(
        "prod", dist, lambda x, y: tuple(map(min, x, y)), lambda x, y: tuple(map(max, x, y)))
    assert rep.passed


def test_all_upsets_two_bits():
    states = [(0, 0), (0, 1), (1, 0), (1, 1)]
    ups = checks.all_upsets(states, leq_bits)
    assert len(ups) == 6  # free distributive lattice on two generators
    assert frozenset() in ups and frozenset(states) in ups
    assert frozenset({(1, 1)}) in ups
    assert frozenset({(0, 1), (1, 1)}) in ups


def test_positive_association_negative_control():
    dist = {(0, 0): 0.1, (1, 1): 0.1, (0, 1): 0.4, (1, 0): 0.4}
    states = list(dist)
    events = checks.all_upsets(states, leq_bits)
    rep = checks.positive_association_check("anti", dist, events)
    assert not rep.passed


def test_stochastic_domination_bernoulli():
    hi = {(1,): 0.7, (0,): 0.3}
    lo = {(1,): 0.5, (0,): 0.5}
    rep = checks.stochastic_domination_check("bern", hi, lo, leq_bits)
    assert rep.passed
    back = checks.stochastic_domination_check("rev", lo, hi, leq_bits)
    assert not back.passed
    kind, witness = back.witness
    assert kind == "upset"
    assert witness == frozenset({(1,)})
    assert back.worst_slack == pytest.approx(-0.2, abs=1e-12)


def test_stochastic_domination_flow_path():
    # force the flow path with > 20 states: product of 5 ternary coordinates
    import itertools
    hi, lo = {}, {}
    for s in itertools.product((0, 1, 2), repeat=5):
        wh = 1.0
        wl = 1.0
        for v in s:
            wh *= (0.2, 0.3, 0.5)[v]
            wl *= (0.5, 0.3, 0.2)[v]
        hi[s] = wh
        lo[s] = wl
    rep = checks.stochastic_domination_check("flow", hi, lo, leq_bits)
    assert rep.passed and any("coupling" in n for n in rep.notes)
    rev = checks.stochastic_domination_check("flow-rev", lo, hi, leq_bits)
    assert not rev.passed
    kind, witness = rev.witness
    assert kind == "coupling" and len(witness) > 0


def test_single_site_monotonicity_negative_control():
    dist = {(1, 0): 0.4, (0, 0): 0.1, (0, 1): 0.4, (1, 1): 0.1}
    rep = checks.single_site_monotonicity_check("anti", dist)
    assert not rep.passed


def test_single_site_monotonicity_product():
    dist = {
        (i, j): (0.6 if i else 0.4) * (0.3 if j else 0.7)
        for i in (0, 1) for j in (0, 1)
    }
    rep = checks.single_site_monotonicity_check("prod", dist)
    assert rep.passed
    # independent coordinates: conditionals are equal, slack ~ 0
    assert rep.worst_slack == pytest.approx(0.0, abs=1e-12)


def test_height_distribution_normalizes():
    d = lattice.box(3, 3)
    dist = checks.height_distribution(d, sv.flat01(d), sv.Weights(1, 1, 2))
    assert sum(dist.values()) == pytest.approx(1.0, abs=1e-12)
    assert len(dist) == 2


def test_height_fkg_box33():
    d = lattice.box(3, 3)
    for c in (1.0, 1.5, 2.0):
        reports = checks.height_fkg_check(d, sv.Weights(1, 1, c), sv.flat01(d))
        for rep in reports:
            assert rep.passed, rep.summary()


def test_height_cbc_flat_vs_shifted():
    d = lattice.box(3, 3)
    rep = checks.height_cbc_check(
        d, sv.Weights(1, 1, 1.5), sv.flat01(d), sv.flat_shifted(d, 2))
    assert rep.passed, rep.summary()


def test_height_cbc_rejects_unordered():
    d = lattice.box(3, 3)
    with pytest.raises(ValueError):
        checks.height_cbc_check(d, sv.Weights(1, 1, 1), sv.flat_shifted(d, 2), sv.flat01(d))


def test_single_site_criterion_heights_box33():
    d = lattice.box(3, 3)
    dist = checks.height_distribution(d, sv.flat01(d), sv.Weights(1, 1, 1.5))
    rep = checks.single_site_monotonicity_check("heights", dist)
    assert rep.passed


def test_report_summary_and_require():
    rep = checks.CheckReport("thing", False, 3, -0.5, ("w",))
    assert "FAIL" in rep.summary()
    with pytest.raises(AssertionError):
        rep.require()
    ok = checks.CheckReport("thing", True, 3, 0.1)
    assert ok.require() is ok


def test_vacuous_report():
    rep = checks.lattice_condition_check("empty", {}, min, max)
    assert rep.passed and "vacuous" in rep.notes
    assert rep.worst_slack == math.inf
