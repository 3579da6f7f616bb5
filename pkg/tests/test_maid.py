import itertools
import json

import numpy as np
import pytest

from structnash import bayes
from structnash.continuation import TraceConfig
from structnash.extensive import ExtensiveGame, example_tree
from structnash.generators import gen_chain_maid, gen_road2stage_maid
from structnash.maid import (
    Maid,
    MaidGame,
    approx_relevance_graph,
    expand_outcomes,
    expected_payoffs,
    maid_to_tree,
    relevance_graph,
    relevance_scc_decompose,
    solve_maid,
    strongly_connected_components,
    example_maid,
)
from structnash.sequence_form import PerfectRecallError

import oracles
from maidgen import random_maid, sequence_index


def _rule_cpds(maid, rules):
    """``(var, parents, table)`` triples for the brute-force joint."""
    out = []
    for v in maid.variables:
        nd = maid.by_name[v]
        tab = nd.table if nd.kind == "chance" else rules[v]
        out.append((maid.var_id[v], [maid.var_id[p] for p in nd.parents], tab))
    return out


def _brute_payoffs(maid, rules):
    cards = [maid.by_name[v].card for v in maid.variables]
    joint = oracles.joint_table(cards, _rule_cpds(maid, rules))
    pay = np.zeros(maid.n_agents)
    for u in maid.utilities:
        nd = maid.by_name[u]
        ids = [maid.var_id[p] for p in nd.parents]
        marg = oracles.marginal(joint, ids)
        # marginal axes come out in ascending id order
        order = np.argsort(ids)
        pay[nd.owner] += float((marg * np.transpose(nd.table, order)).sum()) if ids else float(nd.table)
    return pay


@pytest.mark.parametrize("seed", range(10))
def test_matches_tree_oracle(seed):
    rng = np.random.default_rng(seed)
    maid = random_maid(rng, max_vars=6)
    g = MaidGame(maid)
    if int(np.prod(g.cards)) > 800:
        pytest.skip("tree too large for the pure-Python oracle")
    tree = maid_to_tree(maid)
    idx = sequence_index(g)
    sigma = g.random_profile(rng)
    v, jac = oracles.tree_deviation(tree, idx, sigma)
    assert np.allclose(g.deviation_vector(sigma), v, atol=1e-10)
    assert np.allclose(g.deviation_jacobian(sigma), jac, atol=1e-9)


@pytest.mark.parametrize("seed", range(10))
def test_matches_outcome_expansion(seed):
    rng = np.random.default_rng(100 + seed)
    maid = random_maid(rng, max_vars=10)
    g = MaidGame(maid)
    ref = expand_outcomes(g)
    sigma = g.random_profile(rng)
    assert np.allclose(g.deviation_vector(sigma), ref.deviation_vector(sigma), atol=1e-9)
    assert np.allclose(g.deviation_jacobian(sigma), ref.deviation_jacobian(sigma), atol=1e-9)
    assert np.allclose(g.payoffs(sigma), ref.payoffs(sigma), atol=1e-10)


@pytest.mark.parametrize("seed", range(8))
def test_payoffs_match_joint_enumeration(seed):
    rng = np.random.default_rng(200 + seed)
    maid = random_maid(rng, max_vars=7)
    g = MaidGame(maid)
    sigma = g.random_profile(rng)
    rules = g.decision_rules(sigma)
    ref = _brute_payoffs(maid, rules)
    assert np.allclose(g.payoffs(sigma), ref, atol=1e-10)
    assert np.allclose(expected_payoffs(maid, rules), ref, atol=1e-10)
    # plan-weighted V recovers each agent's payoff
    v = g.deviation_vector(sigma)
    for n in range(g.n_agents):
        sl = g.indexing.slice(n)
        assert sigma[sl] @ v[sl] == pytest.approx(ref[n], abs=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_jacobian_finite_differences(seed):
    rng = np.random.default_rng(300 + seed)
    g = MaidGame(random_maid(rng, max_vars=7))
    sigma = g.random_profile(rng)
    fd = oracles.finite_difference(g.deviation_vector, sigma)
    # V is only defined on plans, so compare along directions that keep C sigma fixed
    t = oracles.null_projector(g.space.constraint_matrix()[0])
    assert np.allclose(g.deviation_jacobian(sigma) @ t, fd @ t, atol=1e-5)


def test_example_maid_has_the_tree_sequences():
    g = MaidGame(example_maid())
    e = ExtensiveGame(example_tree())
    assert g.indexing.sizes == e.indexing.sizes == (8, 2)
    # the tree names the final moves a1'..a8' in (A, B, A') order
    tree_labels = e.space.sequence_labels(0)
    perm = []
    for lab in g.sequence_labels(0):
        a, b, c = (int(part.split("=")[1]) for part in lab.split(","))
        perm.append(tree_labels.index(f"A:a{a + 1},A.a{a + 1}.b{b + 1}:a{4 * a + 2 * b + c + 1}'"))
    assert sorted(perm) == list(range(8))
    assert g.sequence_labels(1) == ["B=0", "B=1"]
    # same polytope: projections agree once coordinates are matched
    rng = np.random.default_rng(0)
    order = np.array(perm + [8, 9])
    for _ in range(5):
        w = rng.standard_normal(10)
        assert np.allclose(g.space.retract(w)[0], e.space.retract(_scatter(w, order))[0][order], atol=1e-12)


def _scatter(x, order):
    out = np.empty_like(x)
    out[order] = x
    return out


def test_example_maid_matches_example_tree_everywhere():
    g = MaidGame(example_maid())
    e = ExtensiveGame(example_tree())
    rng = np.random.default_rng(0)
    for _ in range(5):
        beh = [[rng.dirichlet(np.ones(2)) for _ in tp.infosets] for tp in e.space.agents]
        plan_e = e.space.behavior_to_plan(beh)
        # infosets of the tree are A, A.a.b (four of them) and B; map them onto the MAID rules
        rules = {"A": beh[0][0], "B": beh[1][0], "A'": np.zeros((2, 2, 2))}
        names = [iset.key for iset in e.space.agents[0].infosets]
        for i, key in enumerate(names[1:], start=1):
            _, a, b = key.split(".")
            rules["A'"][int(a[1]) - 1, int(b[1]) - 1] = beh[0][i]
        plan_m = g.plan_from_rules(rules)
        assert np.allclose(g.payoffs(plan_m), e.payoffs(plan_e), atol=1e-12)


def test_rules_round_trip():
    rng = np.random.default_rng(7)
    g = MaidGame(random_maid(rng, max_vars=8))
    rules = {}
    for d in g.maid.decisions():
        shape = g.maid.parent_cards(d) + (g.maid.by_name[d].card,)
        rules[d] = rng.dirichlet(np.ones(shape[-1]), size=int(np.prod(shape[:-1], dtype=int))).reshape(shape)
    back = g.decision_rules(g.plan_from_rules(rules))
    for d in rules:
        assert np.allclose(back[d], rules[d], atol=1e-12)


def test_road2stage_plan_is_product_of_rules():
    maid = gen_road2stage_maid(3)
    g = MaidGame(maid)
    rng = np.random.default_rng(1)
    rules = {d: rng.dirichlet(np.ones(2), size=int(np.prod(maid.parent_cards(d), dtype=int))).reshape(maid.parent_cards(d) + (2,))
             for d in maid.decisions()}
    plan = g.plan_from_rules(rules)
    for n in range(g.n_agents):
        s = g.sequences[n]
        names = [maid.variables[v] for v in s.scope]
        for idx in itertools.product(*(range(c) for c in s.cards)):
            assign = dict(zip(names, idx))
            expect = 1.0
            for d in maid.decisions(n):
                expect *= rules[d][tuple(assign[p] for p in maid.by_name[d].parents) + (assign[d],)]
            assert plan[s.coords[idx]] == pytest.approx(expect, abs=1e-14)


def test_relevance_of_the_example():
    m = example_maid()
    graph = approx_relevance_graph(m)
    assert graph.provenance == "over-approximated"
    assert set(graph.edges) == {("A", "A'"), ("A", "B"), ("B", "A'"), ("B", "A")}
    assert relevance_scc_decompose(m) == [["A'"], ["A", "B"]]


def test_user_supplied_relevance():
    data = example_maid().to_json()
    data["relevance_edges"] = [["A", "B"], ["B", "A"]]
    m = Maid.from_json(data)
    assert relevance_graph(m).provenance == "user-supplied"
    assert set(approx_relevance_graph(m).edges) >= {("A", "B"), ("B", "A")}
    # A' is absent from the supplied edges, so it stands alone
    assert relevance_scc_decompose(m) == [["A", "B"], ["A'"]]


def test_road2stage_is_one_block():
    m = gen_road2stage_maid(3)
    assert len(relevance_scc_decompose(m)) == 1


def test_single_agent_chain_is_acyclic():
    nodes = [
        {"name": "D1", "kind": "decision", "owner": 0, "parents": [], "domain": 2},
        {"name": "X", "kind": "chance", "parents": ["D1"], "domain": 2, "cpd": [0.9, 0.1, 0.2, 0.8]},
        {"name": "D2", "kind": "decision", "owner": 0, "parents": ["D1", "X"], "domain": 2},
        {"name": "U", "kind": "utility", "owner": 0, "parents": ["X", "D2"], "table": [1, 0, 0, 2]},
    ]
    m = Maid(1, nodes)
    assert all(len(c) == 1 for c in relevance_scc_decompose(m))
    res = solve_maid(m)
    assert res.regret <= 1e-8


def test_tarjan_order():
    comps = strongly_connected_components(list("abcd"), [("a", "b"), ("b", "a"), ("a", "c"), ("c", "d")])
    assert comps == [["d"], ["c"], ["a", "b"]]
    long = [str(i) for i in range(5000)]
    assert len(strongly_connected_components(long, list(zip(long, long[1:])))) == 5000


@pytest.mark.parametrize("decompose", [True, False])
def test_solve_example(decompose):
    res = solve_maid(example_maid(), config=TraceConfig(seed=0), decompose=decompose)
    g = MaidGame(example_maid())
    assert res.regret <= 1e-8
    assert g.regret(res.plan).max() <= 1e-8
    assert res.plan.min() >= 1e-4 - 1e-12


@pytest.mark.parametrize("seed", range(4))
def test_solve_random_maids(seed):
    rng = np.random.default_rng(400 + seed)
    maid = random_maid(rng, max_vars=6)
    res = solve_maid(maid, config=TraceConfig(seed=seed))
    g = MaidGame(maid)
    assert g.regret(res.plan).max() <= 1e-8


def test_json_round_trip():
    m = gen_road2stage_maid(2)
    again = Maid.from_json(json.loads(json.dumps(m.to_json())))
    assert again.to_json() == m.to_json()


def _base():
    return [
        {"name": "A", "kind": "decision", "owner": 0, "parents": [], "domain": 2},
        {"name": "U", "kind": "utility", "owner": 0, "parents": ["A"], "table": [0, 1]},
    ]


@pytest.mark.parametrize(
    "edit",
    [
        lambda ns: ns.append(dict(ns[0])),
        lambda ns: ns.append({"name": "X", "kind": "chance", "parents": ["Z"], "domain": 2, "cpd": [0.5, 0.5]}),
        lambda ns: ns.append({"name": "X", "kind": "chance", "parents": [], "domain": 2, "cpd": [0.5, 0.6]}),
        lambda ns: ns.append({"name": "X", "kind": "chance", "parents": ["U"], "domain": 2, "cpd": [0.5] * 4}),
        lambda ns: ns.append({"name": "X", "kind": "oracle", "parents": []}),
        lambda ns: ns[1].update(table=[0, 1, 2]),
        lambda ns: ns[0].update(owner=3),
        lambda ns: ns[0].update(parents=["B"]) or ns.append({"name": "B", "kind": "decision", "owner": 0, "parents": ["A"], "domain": 2}),
    ],
)
def test_validation(edit):
    nodes = _base()
    edit(nodes)
    with pytest.raises(ValueError):
        Maid(1, nodes)


def test_perfect_recall_is_enforced():
    nodes = [
        {"name": "A", "kind": "decision", "owner": 0, "parents": [], "domain": 2},
        {"name": "B", "kind": "decision", "owner": 0, "parents": [], "domain": 2},
        {"name": "U", "kind": "utility", "owner": 0, "parents": ["A", "B"], "table": [0, 1, 2, 3]},
    ]
    with pytest.raises(PerfectRecallError):
        Maid(1, nodes)


def test_chain_operation_counts_respect_ceiling():
    rng = np.random.default_rng(0)
    for n in range(2, 7):
        g = MaidGame(gen_chain_maid(n, seed=0))
        sigma = g.random_profile(rng)
        bayes.op_counter.reset()
        g.deviation_jacobian(sigma)
        ell = len(g.tree.cliques)
        d = max(int(np.prod([g.cards[v] for v in c])) for c in g.tree.cliques)
        u = len(g.utility_factors)
        assert bayes.op_counter.count <= ell**2 * d**3 + u * g.n_agents * d**4
