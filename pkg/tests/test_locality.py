import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from corrlab.lhv import lhv_feasibility
from corrlab.locality import (
    ExperimentCollection,
    check_epr_local,
    check_independence,
    check_nonsignaling,
    make_pr_box,
    make_prop1_family,
    prop1_witness,
)
from corrlab.scenario import Behavior, Scenario, product_behavior, uniform_behavior

from generators import random_local_behavior, random_scenario

F = Fraction


def test_pr_box_nonsignaling():
    rep = check_nonsignaling(make_pr_box())
    assert rep.ok and rep.violation == 0


def test_product_behavior_nonsignaling():
    scn = Scenario.uniform(3, 2)
    local = {(n, s): [F(1 + n + s, 5), F(4 - n - s, 5)] for n in range(3) for s in range(2)}
    assert check_nonsignaling(product_behavior(scn, local)).ok


def test_constructed_signaling_violation():
    scn = Scenario.uniform(2, 2)
    tables = {
        (0, 0): [[1, 0], [0, 0]],
        (0, 1): [[0, 0], [1, 0]],
        (1, 0): [[1, 0], [0, 0]],
        (1, 1): [[1, 0], [0, 0]],
    }
    rep = check_nonsignaling(Behavior(scn, tables))
    assert not rep.ok
    assert rep.violation == 1
    assert rep.witness[0] == (0,)
    assert rep.to_dict()["verdict"] == "fail"


def test_float_nonsignaling_tolerance():
    b = make_pr_box().to_float()
    assert check_nonsignaling(b).ok


def test_epr_local_single_and_duplicate():
    pr = make_pr_box()
    assert check_epr_local(ExperimentCollection([pr])).ok
    assert check_epr_local(ExperimentCollection([pr, pr])).ok


def test_prop1_witness():
    coll = prop1_witness()
    assert coll.context_labels == ("A", "B")
    for b in coll.experiments:
        assert check_nonsignaling(b).ok
    rep = check_epr_local(coll)
    assert not rep.ok
    assert rep.violation == F(1, 4)
    assert rep.witness[0] != rep.witness[2]


def test_context_family_shared_tau_passes():
    copy = [[1, 0], [0, 1]]
    tables = {(0, 0): copy, (0, 1): copy, (1, 0): copy}
    tau = [F(1, 3), F(2, 3)]
    assert check_epr_local(make_prop1_family(tables, [tau, tau])).ok


def test_context_family_rejects_bad_tau():
    with pytest.raises(ValueError):
        make_prop1_family({(0, 0): [[1, 0], [0, 1]]}, [[F(1, 2), F(1, 3)]])


def test_collection_checks_outcome_counts():
    a = uniform_behavior(Scenario(((2,), (2,))))
    b = uniform_behavior(Scenario(((3,), (2,))))
    with pytest.raises(ValueError):
        ExperimentCollection([a, b])


def test_collection_rejects_mixed_modes():
    a = make_pr_box()
    with pytest.raises(ValueError):
        ExperimentCollection([a, a.to_float()])


def test_independence():
    scn = Scenario.uniform(2, 1)
    prod = product_behavior(scn, {(0, 0): [F(1, 3), F(2, 3)], (1, 0): [F(1, 2), F(1, 2)]})
    assert check_independence(prod, (0, 0)).ok
    rep = check_independence(make_pr_box(), (1, 1))
    assert not rep.ok and rep.deviation == F(1, 4)
    single = uniform_behavior(Scenario.uniform(1, 2))
    assert check_independence(single, (1,)).ok


def test_pr_box_anticorrelated_at_11():
    t = make_pr_box().tables[(1, 1)]
    assert t[0, 1] == t[1, 0] == F(1, 2)
    assert t[0, 0] == t[1, 1] == 0
    assert not lhv_feasibility(make_pr_box()).feasible


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_model_behaviors_are_nonsignaling(seed):
    rng = random.Random(seed)
    b = random_local_behavior(rng, random_scenario(rng, max_outcomes=3))
    assert check_nonsignaling(b).ok


def test_epr_local_collection_of_restrictions():
    rng = random.Random(5)
    b = random_local_behavior(rng, Scenario.uniform(2, 2))
    sub = Behavior(Scenario.uniform(2, 1), {(0, 0): b.tables[(0, 0)]})
    assert check_epr_local(ExperimentCollection([b, sub])).ok
    moved = Behavior(Scenario.uniform(2, 1), {(0, 0): np.flip(b.tables[(0, 0)], 0)})
    assert check_epr_local(ExperimentCollection([b, moved])).ok == (b.tables[(0, 0)] == np.flip(b.tables[(0, 0)], 0)).all()
