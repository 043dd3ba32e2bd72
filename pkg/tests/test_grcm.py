"""Two-species bond measures, the spin dictionary, and cubic models."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vertexlab import checks, events, grcm, oracle
from vertexlab.ashkinteller import ATBoundary, ATParams, at_measure_exact
from vertexlab.grcm import (
    BondConfig,
    BondGraph,
    CubicParams,
    GRCMParams,
    at_to_grcm,
    cluster_counts,
    comparison_check,
    cubic_energy,
    cubic_measure_exact,
    cycle_graph,
    es_identity_check,
    fkg_lattice_check_grcm,
    free_site_graph,
    lambda_weight,
    nu_measure,
    path_graph,
    random_cluster_measure,
    wired_site_graph,
)

# -- graphs and configurations ----------------------------------------------


def test_wired_graph_bond_counts():
    # internal bonds plus one ghost bond per outside neighbour
    assert wired_site_graph(2, 2).n_bonds == 12
    assert wired_site_graph(2, 3).n_bonds == 17
    assert wired_site_graph(1, 2).n_bonds == 7
    assert free_site_graph(2, 3).n_bonds == 7


def test_wired_graph_extends_free_graph():
    gf = free_site_graph(2, 3)
    gw = wired_site_graph(2, 3)
    assert gw.bonds[: gf.n_bonds] == gf.bonds
    assert all(v == gw.ghost for _, v in gw.bonds[gf.n_bonds :])


def test_graph_rejects_bad_bonds():
    with pytest.raises(ValueError, match="site range"):
        BondGraph(2, ((0, 2),))
    with pytest.raises(ValueError, match="loops"):
        BondGraph(2, ((1, 1),))


def test_bond_config_validation():
    g = free_site_graph(2, 1)
    with pytest.raises(ValueError, match="per bond"):
        BondConfig(g, (0, 0))
    with pytest.raises(ValueError, match="0..3"):
        BondConfig(g, (4,))
    cfg = BondConfig.from_pairs(g, [(1, 1)])
    assert cfg.channels == (3,)
    assert cfg.pair(0) == (1, 1)
    assert (cfg.n_sigma(0), cfg.n_tau(0)) == (1, 1)


# -- product weight ----------------------------------------------------------


def test_channel_assignment_is_pinned():
    """The (1,1) channel carries the joint weight; (0,1) the tau weight."""
    g = free_site_graph(2, 1)
    p = GRCMParams(a0=2.0, a_sigma=3.0, a_tau=5.0, a_sigmatau=7.0)
    assert lambda_weight(BondConfig.from_pairs(g, [(0, 0)]), p) == pytest.approx(math.log(2.0))
    assert lambda_weight(BondConfig.from_pairs(g, [(1, 0)]), p) == pytest.approx(math.log(3.0))
    assert lambda_weight(BondConfig.from_pairs(g, [(0, 1)]), p) == pytest.approx(math.log(5.0))
    assert lambda_weight(BondConfig.from_pairs(g, [(1, 1)]), p) == pytest.approx(math.log(7.0))


def test_lambda_all_unit_weights_vanishes():
    g = cycle_graph(3)
    p = GRCMParams()
    for m in range(64):
        codes = tuple((m >> (2 * b)) & 3 for b in range(3))
        assert lambda_weight(BondConfig(g, codes), p) == 0.0


def test_lambda_is_additive_over_bonds():
    g = free_site_graph(3, 1)
    p = GRCMParams(a0=1.5, a_sigma=0.5, a_tau=2.5, a_sigmatau=0.25)
    got = lambda_weight(BondConfig(g, (1, 2)), p)
    assert got == pytest.approx(math.log(0.5) + math.log(2.5), abs=1e-14)


def test_lambda_zero_channel_is_minus_inf():
    g = free_site_graph(2, 1)
    p = GRCMParams(a0=1.0, a_sigma=0.0, a_tau=1.0, a_sigmatau=1.0)
    assert lambda_weight(BondConfig(g, (1,)), p) == -math.inf


def test_params_validation():
    with pytest.raises(ValueError, match="nonnegative"):
        GRCMParams(a0=-0.1)
    with pytest.raises(ValueError, match="positive"):
        GRCMParams(q_sigma=0.0)
    with pytest.raises(ValueError, match="per-bond"):
        GRCMParams(a0=(1.0, 2.0)).channel_table(3)
    with pytest.raises(ValueError, match="at least one positive"):
        GRCMParams(a0=(1.0, 0.0), a_sigma=0.0, a_tau=0.0, a_sigmatau=0.0).channel_table(2)


# -- cluster counts ----------------------------------------------------------


def test_counts_all_closed_free():
    g = free_site_graph(3, 2)
    assert cluster_counts(BondConfig(g, (0,) * g.n_bonds)) == (6, 6)


def test_counts_all_sigma_open():
    g = free_site_graph(3, 2)
    assert cluster_counts(BondConfig(g, (1,) * g.n_bonds))[0] == 1
    gw = wired_site_graph(2, 2)
    assert cluster_counts(BondConfig(gw, (3,) * gw.n_bonds)) == (1, 1)


def test_counts_single_open_bond_2x2():
    g = free_site_graph(2, 2)
    ns, nt = cluster_counts(BondConfig(g, (1, 0, 0, 0)))
    assert ns == 3  # sites minus one
    assert nt == 4


def test_counts_wired_all_closed_has_ghost_singleton():
    gw = wired_site_graph(2, 2)
    assert cluster_counts(BondConfig(gw, (0,) * gw.n_bonds)) == (5, 5)


def test_counts_species_are_independent():
    g = cycle_graph(4)
    sigma_only = BondConfig(g, (1, 1, 0, 0))
    both = BondConfig(g, (1, 3, 0, 2))
    assert cluster_counts(sigma_only)[0] == cluster_counts(both)[0]


@given(st.integers(0, 4**5 - 1), st.integers(0, 4))
@settings(max_examples=60, deadline=None)
def test_opening_a_bond_merges_at_most_one_pair(m, b):
    g = cycle_graph(5)
    codes = [(m >> (2 * k)) & 3 for k in range(5)]
    before = cluster_counts(BondConfig(g, tuple(codes)))[0]
    codes[b] |= 1
    after = cluster_counts(BondConfig(g, tuple(codes)))[0]
    assert after in (before, before - 1) or (m >> (2 * b)) & 1


# -- exhaustive measure ------------------------------------------------------


def test_nu_single_bond_frozen_probabilities():
    # weights a * q_sigma^{N_sigma} * q_tau^{N_tau} with two-site counts:
    # (1.2*9*4, 0.7*3*4, 0.4*9*2, 2.0*3*2) / 70.8
    nu = nu_measure(
        free_site_graph(2, 1),
        GRCMParams(1.2, 0.7, 0.4, 2.0, q_sigma=3.0, q_tau=2.0),
    )
    want = [43.2 / 70.8, 8.4 / 70.8, 7.2 / 70.8, 12.0 / 70.8]
    assert np.allclose(nu.probs, want, atol=1e-14)


def test_nu_unit_cluster_weights_give_product_measure():
    g = free_site_graph(2, 2)
    p = GRCMParams(1.1, 0.3, 0.8, 0.6, q_sigma=1.0, q_tau=1.0)
    nu = nu_measure(g, p)
    cell = np.array([1.1, 0.3, 0.8, 0.6])
    cell = cell / cell.sum()
    per_bond = np.ones(1)
    for _ in range(g.n_bonds):
        per_bond = np.kron(cell, per_bond)  # lowest bond index varies fastest
    assert np.allclose(nu.probs, per_bond, atol=1e-15)


def test_nu_normalizes_on_random_instances():
    rng = np.random.default_rng(7)
    for graph in (cycle_graph(4), wired_site_graph(1, 2), path_graph(3)):
        a = rng.uniform(0.05, 2.0, size=4)
        nu = nu_measure(graph, GRCMParams(*a, q_sigma=rng.uniform(0.5, 3), q_tau=rng.uniform(0.5, 3)))
        assert abs(nu.probs.sum() - 1.0) <= 1e-12


def test_nu_guard():
    with pytest.raises(ValueError, match="guarded at 12"):
        nu_measure(cycle_graph(13), GRCMParams())


def test_nu_rejects_bond_with_no_positive_channel():
    with pytest.raises(ValueError, match="at least one positive"):
        nu_measure(path_graph(1), GRCMParams(a0=(0.0,), a_sigma=0.0, a_tau=0.0, a_sigmatau=0.0))


def test_nu_engines_agree(monkeypatch):
    g = cycle_graph(9)
    p = GRCMParams(1.0, 0.8, 0.6, 1.3, q_sigma=2.0, q_tau=3.0)
    jitted = nu_measure(g, p)
    monkeypatch.setattr(grcm, "_JIT_THRESHOLD_BONDS", 99)
    plain = nu_measure(g, p)
    assert np.array_equal(jitted.probs, plain.probs)


def test_nu_marginal_of_all_bonds_is_the_law():
    g = cycle_graph(3)
    nu = nu_measure(g, GRCMParams(1.0, 0.5, 0.7, 1.4, q_sigma=2.0))
    marg = nu.marginal([0, 1, 2])
    assert marg == pytest.approx(nu.as_dict())


def test_plus_and_free_differ_only_by_ghost_bonds():
    """Conditioning the wired law on closed ghost bonds recovers the free law."""
    p = GRCMParams(1.0, 0.5, 0.4, 1.1, q_sigma=2.0, q_tau=2.0)
    nw = nu_measure(wired_site_graph(1, 2), p)
    nf = nu_measure(free_site_graph(1, 2), p)
    marg = nw.marginal([0])
    free = nf.as_dict()
    assert max(abs(marg[k] - free[k]) for k in free) > 1e-3
    cond: dict = {}
    for m, pr in enumerate(nw.probs):
        codes = tuple((m >> (2 * b)) & 3 for b in range(nw.graph.n_bonds))
        if all(c == 0 for c in codes[1:]):
            cond[codes[:1]] = cond.get(codes[:1], 0.0) + pr
    z = sum(cond.values())
    assert max(abs(cond[k] / z - free[k]) for k in free) <= 1e-12


def test_plus_dominates_free_on_increasing_events():
    res = at_to_grcm(0.3, 0.2, 0.1)
    p = res.params()
    table = p.channel_table(1)
    assert table[0, 3] * table[0, 0] >= table[0, 1] * table[0, 2]  # in hypothesis
    marg = nu_measure(wired_site_graph(1, 2), p).marginal([0])
    free = nu_measure(free_site_graph(1, 2), p).as_dict()
    rep = checks.stochastic_domination_check(
        "wired over free", hi=marg, lo=free, leq=grcm._code_leq
    )
    assert rep.passed, rep.summary()


# -- spin dictionary ---------------------------------------------------------


def test_dictionary_at_zero_couplings():
    res = at_to_grcm(0.0, 0.0, 0.0)
    assert res.alphas == pytest.approx((1.0, 0.0, 0.0, 0.0))
    assert res.in_regime
    p = res.params()
    assert (p.q_sigma, p.q_tau) == (2.0, 2.0)


def test_dictionary_equal_couplings_two_channels():
    res = at_to_grcm(0.4, 0.4, 0.4)
    a0, a_s, a_t, a_st = res.alphas
    assert a_s == pytest.approx(0.0, abs=1e-15)
    assert a_t == pytest.approx(0.0, abs=1e-15)
    assert a0 > 0 and a_st > 0


@given(
    st.floats(-1.5, 1.5),
    st.floats(-1.5, 1.5),
    st.floats(-1.5, 1.5),
)
@settings(max_examples=80, deadline=None)
def test_dictionary_weights_sum_to_one(js, jt, jst):
    # the four channel weights are the cells of a normalized 2x2 table
    assert sum(at_to_grcm(js, jt, jst).alphas) == pytest.approx(1.0, abs=1e-12)


def test_dictionary_out_of_regime_flagged():
    res = at_to_grcm(0.1, 0.5, 0.4)  # joint coupling above j_sigma
    assert not res.in_regime
    assert res.alphas[1] < 0
    with pytest.raises(ValueError, match="negative channel weight"):
        res.params()


# -- lattice condition -------------------------------------------------------


def test_fkg_single_bond():
    p = GRCMParams(1.0, 0.8, 0.7, 1.2)
    rep = fkg_lattice_check_grcm(p, 1)
    assert rep.passed
    assert rep.worst_slack >= -1e-12


def test_fkg_factorized_slack_beyond_literal_guard():
    # 5 bonds skips the literal scan, leaving the raw per-bond slack
    rep = fkg_lattice_check_grcm(GRCMParams(1.0, 0.8, 0.7, 1.2), 5)
    assert rep.passed
    assert rep.worst_slack == pytest.approx(1.2 * 1.0 - 0.8 * 0.7)


def test_fkg_b_greater_literal_cross_check():
    rep = fkg_lattice_check_grcm(GRCMParams(1.0, 0.5, 0.5, 1.0), 2)
    assert rep.passed
    assert any("scan agrees" in n for n in rep.notes)
    assert "B_< bonds ()" in rep.notes


def test_fkg_b_less_violations_reported():
    rep = fkg_lattice_check_grcm(GRCMParams(1.0, 2.0, 2.0, 1.0), 2)
    assert not rep.passed
    # worst literal pair opens one species on both bonds each way round
    assert rep.worst_slack == pytest.approx(-15.0)
    assert any("out-of-hypothesis" in n for n in rep.notes)
    assert any("scan agrees" in n for n in rep.notes)


def test_fkg_partition_follows_per_bond_weights():
    p = GRCMParams(
        a0=(1.0, 1.0), a_sigma=(0.5, 2.0), a_tau=(0.5, 2.0), a_sigmatau=(1.0, 1.0)
    )
    rep = fkg_lattice_check_grcm(p, 2)
    assert "B_> bonds (0,)" in rep.notes
    assert "B_< bonds (1,)" in rep.notes


def test_fkg_guard():
    with pytest.raises(ValueError, match="guarded at 8"):
        fkg_lattice_check_grcm(GRCMParams(), 9)


# -- comparison --------------------------------------------------------------


def test_comparison_equal_params_is_equality():
    p = GRCMParams(1.0, 0.8, 0.7, 1.2, q_sigma=2.0, q_tau=2.0)
    rep = comparison_check(p, p, 4)
    assert rep.hypothesis_ok
    assert rep.conclusion.passed
    assert rep.conclusion.worst_slack == pytest.approx(0.0, abs=1e-12)


def test_comparison_decreasing_q_sigma_dominates():
    base = dict(a0=1.0, a_sigma=0.8, a_tau=0.7, a_sigmatau=1.2, q_tau=2.0)
    p = GRCMParams(q_sigma=1.5, **base)
    p_tilde = GRCMParams(q_sigma=2.0, **base)
    for bonds in (4, 5):
        rep = comparison_check(p, p_tilde, bonds)
        assert rep.hypothesis_ok
        assert rep.conclusion.passed, rep.summary()


def test_comparison_hypothesis_failure_skips_conclusion():
    p = GRCMParams(1.0, 2.0, 1.0, 0.5)  # joint ratio below the sigma ratio on B_>
    rep = comparison_check(p, GRCMParams(), 3)
    assert not rep.hypothesis_ok
    assert rep.skipped
    assert rep.conclusion is None
    assert "skipped" in rep.summary()


def test_comparison_conditions_do_not_force_domination():
    """The printed hypothesis chain can hold while the conclusion fails.

    Inflating only the closed-closed weight passes every listed inequality
    (all channel ratios are 1 except alpha_0 = 2, which no B_> condition
    examines) yet pushes mass down, so the tilde measure dominates instead.
    The checker must therefore report the conclusion rather than assume it.
    """
    rep = comparison_check(
        GRCMParams(a0=2.0), GRCMParams(a0=1.0), 1
    )
    assert rep.hypothesis_ok
    assert not rep.conclusion.passed
    # worst increasing event: any bond bit open, mass 3/5 against 3/4
    assert rep.conclusion.worst_slack == pytest.approx(3.0 / 5.0 - 3.0 / 4.0)


def test_comparison_zero_over_zero_not_evaluable():
    p = GRCMParams(1.0, 0.0, 0.5, 1.0)
    p_tilde = GRCMParams(1.0, 0.0, 0.5, 1.0)
    rep = comparison_check(p, p_tilde, 2)
    assert not rep.hypothesis_ok
    assert rep.skipped
    assert any("0/0" in n for n in rep.hypothesis.notes)


def test_comparison_guard():
    with pytest.raises(ValueError, match="guarded at 6"):
        comparison_check(GRCMParams(), GRCMParams(), 7)


# -- connectivity identities -------------------------------------------------


def test_es_identities_2x2():
    for js, jt, jst in ((0.3, 0.2, 0.1), (0.25, 0.25, 0.15)):
        rep = es_identity_check((2, 2), js, jt, jst)
        assert rep.passed, rep.summary()
        assert rep.n_checked == 4 + 6


def test_es_identities_2x3():
    rep = es_identity_check((2, 3), 0.3, 0.2, 0.1)
    assert rep.passed, rep.summary()
    assert rep.n_checked == 6 + 15


def test_es_out_of_regime_rejected():
    with pytest.raises(ValueError, match="out of regime"):
        es_identity_check((2, 2), 0.1, 0.5, 0.4)


def test_es_fast_path_matches_full_enumeration_1x2():
    g = wired_site_graph(1, 2)
    p = at_to_grcm(0.3, 0.2, 0.1).params()
    nu = nu_measure(g, p)
    fast = grcm._sigma_occupation_weights(g, p.channel_table(g.n_bonds))
    assert np.allclose(nu.sigma_mask_marginal(), fast / fast.sum(), atol=1e-12)


def test_es_fast_path_matches_full_enumeration_2x2():
    # 4^12 configurations; the slowest single check in this file
    g = wired_site_graph(2, 2)
    p = at_to_grcm(0.35, 0.15, 0.1).params()
    nu = nu_measure(g, p)
    fast = grcm._sigma_occupation_weights(g, p.channel_table(g.n_bonds))
    assert np.allclose(nu.sigma_mask_marginal(), fast / fast.sum(), atol=1e-12)


def test_es_spin_side_matches_two_coupling_module():
    # symmetric couplings map onto the (J, U) energy with negated signs
    j, jst = 0.3, 0.12
    g = wired_site_graph(2, 2)
    wmat, spins = grcm._coupled_spin_weights(g, j, j, jst)
    wmat = wmat / wmat.sum()
    sites = list(range(g.n_sites))
    dist = at_measure_exact(
        (sites, [tuple(b) for b in g.bonds]),
        ATParams(J=-j, U=-jst),
        bc=ATBoundary("++"),
        boundary_sites=[g.ghost],
    )
    worst = 0.0
    for a in range(spins.shape[0]):
        for b in range(spins.shape[0]):
            key = tuple((int(spins[a, k]), int(spins[b, k])) for k in range(spins.shape[1]))
            worst = max(worst, abs(wmat[a, b] - dist[key]))
    assert worst <= 1e-12


# -- single-species collapse -------------------------------------------------


def test_collapse_to_single_species_cluster_law():
    p_edge, q = 0.35, 2.6
    collapsed = GRCMParams(
        a0=1.0, a_sigma=0.0, a_tau=0.0, a_sigmatau=p_edge / (1 - p_edge), q_sigma=q, q_tau=1.0
    )
    for g in (cycle_graph(5), wired_site_graph(1, 2)):
        nu = nu_measure(g, collapsed)
        rc = random_cluster_measure(g, p_edge, q)
        masks = nu.sigma_mask_marginal()
        assert max(abs(masks[m] - rc[m]) for m in rc) <= 1e-12
        mismatched = nu.prob(lambda c: any(c.n_sigma(b) != c.n_tau(b) for b in range(g.n_bonds)))
        assert mismatched == 0.0


def test_random_cluster_validation():
    g = cycle_graph(3)
    with pytest.raises(ValueError, match="strictly between"):
        random_cluster_measure(g, 1.0, 2.0)
    with pytest.raises(ValueError, match="positive"):
        random_cluster_measure(g, 0.5, 0.0)


# -- cubic models ------------------------------------------------------------


def test_cubic_single_bond_energy():
    p = CubicParams(0.4, 0.3, 0.1, 3, 3)
    assert cubic_energy([[1], [1]], [[2], [2]], p) == pytest.approx(-2 * 0.4 - 2 * 0.3)
    assert cubic_energy([[1], [2]], [[1], [2]], p) == pytest.approx(0.0)
    assert cubic_energy([[2], [2]], [[1], [3]], p) == pytest.approx(-2 * (0.4 - 0.1))


def test_cubic_alphabet_validation():
    p = CubicParams(0.1, 0.1, 0.0, 2, 2)
    with pytest.raises(ValueError, match="sigma spin outside"):
        cubic_energy([[3], [1]], [[1], [1]], p)
    with pytest.raises(ValueError, match="tau spin outside"):
        cubic_energy([[1], [1]], [[0], [1]], p)
    with pytest.raises(ValueError, match="equal shape"):
        cubic_energy([[1], [1]], [[1, 1]], p)


def test_cubic_measure_matches_pm_spins_at_q_two():
    """Relabeling {1,2} as {+1,-1} matches the coupled-spin law exactly.

    The energies differ per bond by the constant j_sigma + j_tau - j_sigmatau,
    which the probability normalization absorbs.
    """
    js, jt, jst = 0.35, 0.2, 0.1
    cm = cubic_measure_exact((2, 2), CubicParams(js, jt, jst, 2, 2))
    g = free_site_graph(2, 2)
    wmat, spins = grcm._coupled_spin_weights(g, js, jt, jst)
    wmat = wmat / wmat.sum()

    def relabel(row):
        return tuple(1 if v == 1 else 2 for v in row)

    worst = 0.0
    for a in range(spins.shape[0]):
        for b in range(spins.shape[0]):
            worst = max(
                worst, abs(wmat[a, b] - cm[(relabel(spins[a]), relabel(spins[b]))])
            )
    assert worst <= 1e-12

    # constant energy offset, fitted on one configuration
    def ferro_energy(sig_row, tau_row):
        e = 0.0
        for u, v in g.bonds:
            ss = sig_row[u] * sig_row[v]
            tt = tau_row[u] * tau_row[v]
            e -= js * ss + jt * tt + jst * ss * tt
        return e

    p = CubicParams(js, jt, jst, 2, 2)
    offsets = set()
    for a in (0, 3, 9):
        sig, tau = spins[a], spins[(a * 5) % 16]
        cub = cubic_energy(
            np.array(relabel(sig)).reshape(2, 2).T, np.array(relabel(tau)).reshape(2, 2).T, p
        )
        offsets.add(round(cub - ferro_energy(sig, tau), 10))
    assert len(offsets) == 1
    assert offsets.pop() == pytest.approx(-g.n_bonds * (js + jt - jst))


def test_cubic_guard():
    with pytest.raises(ValueError, match="guarded at"):
        cubic_measure_exact((3, 3), CubicParams(0.1, 0.1, 0.1, 3, 3))


# -- cross-engine agreement --------------------------------------------------


def _oracle_table(params, n_bonds):
    tables = params.channel_table(n_bonds)
    return [
        {(0, 0): t[0], (1, 0): t[1], (0, 1): t[2], (1, 1): t[3]} for t in tables
    ]


def test_oracle_agrees_on_single_bond():
    p = GRCMParams(1.2, 0.7, 0.4, 2.0, q_sigma=3.0, q_tau=2.0)
    g = path_graph(1)
    nu = nu_measure(g, p).as_dict()
    dist = oracle.grcm_distribution([0, 1], g.bonds, _oracle_table(p, 1)[0], 3.0, 2.0)
    for combo, prob in dist.as_dict().items():
        code = tuple(grcm._PAIR_TO_CODE[ch] for ch in combo)
        assert nu[code] == pytest.approx(prob, abs=1e-10)


def test_oracle_agrees_on_random_instances():
    rng = np.random.default_rng(23)
    graphs = [cycle_graph(4), free_site_graph(2, 2), wired_site_graph(1, 2)]
    for trial in range(6):
        g = graphs[trial % len(graphs)]
        p = GRCMParams(
            *rng.uniform(0.05, 2.0, size=4),
            q_sigma=float(rng.uniform(0.5, 3.0)),
            q_tau=float(rng.uniform(0.5, 3.0)),
        )
        nu = nu_measure(g, p).as_dict()
        # the ghost, when present, enters the oracle as an ordinary site
        dist = oracle.grcm_distribution(
            list(range(g.n_sites)), g.bonds, _oracle_table(p, g.n_bonds)[0], p.q_sigma, p.q_tau
        )
        worst = max(
            abs(nu[tuple(grcm._PAIR_TO_CODE[ch] for ch in combo)] - prob)
            for combo, prob in dist.as_dict().items()
        )
        assert worst <= 1e-10


def test_oracle_agrees_on_cubic_grid():
    js, jt, jst = 0.3, 0.15, 0.05
    cm = cubic_measure_exact((2, 2), CubicParams(js, jt, jst, 2, 3))
    sites = [(x, y) for y in range(2) for x in range(2)]
    bonds = [(sites[u], sites[v]) for u, v in free_site_graph(2, 2).bonds]
    dist = oracle.cubic_distribution(sites, bonds, js, jt, jst, 2, 3)
    worst = max(abs(cm[state] - prob) for state, prob in dist.as_dict().items())
    assert worst <= 1e-10


# -- events interop ----------------------------------------------------------


def test_bond_config_drives_crossing_queries():
    g = free_site_graph(3, 1)
    q = events.CrossingQuery(
        "bond-sigma", region=frozenset({0, 1, 2}), source=frozenset({0}), target=frozenset({2})
    )
    assert not events.connected(BondConfig(g, (1, 2)), q)
    assert events.connected(BondConfig(g, (1, 3)), q)
    tau_q = events.CrossingQuery(
        "bond-tau", region=frozenset({0, 1, 2}), source=frozenset({0}), target=frozenset({2})
    )
    assert events.connected(BondConfig(g, (2, 2)), tau_q)
