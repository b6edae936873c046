"""
Tests refactoring actions, their conditions, sequence composition and random generation.

Uses pytest fixtures located in conftest.py in the tests/ directory.
"""
from collections import Counter

import numpy as np
import pytest

from engine.errors import (
    ConditionConflictError,
    PreconditionError,
    RefactoringError,
    UnresolvedTargetError,
)
from engine.fixtures import single_station as make_station
from engine.model import validate
from engine.refactoring import (
    BRF,
    Condition,
    RefactoringAction,
    RefactoringSequence,
    apply,
    apply_sequence,
    compose_conditions,
    connected,
    deployed_on,
    exists,
    fold_conditions,
    intermediate_models,
    is_feasible,
    owns,
    post_condition,
    pre_condition,
    random_action,
    random_sequence,
    repair,
    target_counts,
    valid_targets,
)


def seq(*actions):
    return RefactoringSequence(tuple(actions))


def operation_ids(model):
    return sorted(op.id for c in model.components for op in c.operations)


# -- actions ----------------------------------------------------------------------

def test_action_defaults_to_baseline_factor():
    assert RefactoringAction("ReDe", "C").brf == BRF["ReDe"] == 1.45
    assert RefactoringAction("Clon", "N", brf=2.0).brf == 2.0


@pytest.mark.parametrize("kind, target, dest", [
    ("Move", "x", None),
    ("MO2C", "op", None),
    ("Clon", "node", "other"),
])
def test_malformed_actions(kind, target, dest):
    with pytest.raises(RefactoringError):
        RefactoringAction(kind, target, dest)


def test_sequence_serialization():
    sequence = seq(RefactoringAction("MO2C", "op0", "stage1"), RefactoringAction("Clon", "node0"))
    assert RefactoringSequence.from_list(sequence.to_list()) == sequence
    assert str(sequence) == "[MO2C(op0->stage1), Clon(node0)]"


# -- pre and post conditions -------------------------------------------------------

def test_pre_condition_examples(single_station, chain):
    assert pre_condition(RefactoringAction("Clon", "host"), single_station) == Condition([exists("host")])
    assert pre_condition(RefactoringAction("MO2C", "op0", "stage1"), chain) == Condition(
        [exists("op0"), exists("stage1"), owns("stage1", "op0").negated()])
    assert pre_condition(RefactoringAction("MO2N", "op1"), chain) == Condition(
        [exists("op1"), owns("stage1", "op1")])


def test_pre_condition_on_missing_target(chain):
    with pytest.raises(UnresolvedTargetError):
        pre_condition(RefactoringAction("ReDe", "ghost"), chain)
    with pytest.raises(UnresolvedTargetError):
        pre_condition(RefactoringAction("Clon", "stage0"), chain)


def test_post_condition_of_redeploy(chain):
    post = post_condition(RefactoringAction("ReDe", "stage1"), chain, position=2)
    assert exists("stage1.rede2.host") in post
    assert deployed_on("stage1", "stage1.rede2.host") in post
    assert deployed_on("stage1", "node1").negated() in post
    assert connected("stage1.rede2.host", "node0") in post
    assert post.holds(apply(RefactoringAction("ReDe", "stage1"), chain, position=2))


def test_condition_rejects_contradiction():
    with pytest.raises(ConditionConflictError):
        Condition([exists("x"), exists("x").negated()])


# -- application ------------------------------------------------------------------

def test_clon_copies_the_node():
    model = make_station(servers=2)
    cloned = apply(RefactoringAction("Clon", "host"), model)
    assert len(cloned.nodes) == len(model.nodes) + 1
    clone = cloned.node("host.clon0")
    assert (clone.multiplicity, clone.speed_factor) == (2, 1.0)
    assert cloned.component("server.clon0").replica_of == "server"
    assert cloned.host("server.clon0") == "host.clon0"
    assert operation_ids(cloned) == operation_ids(model)


def test_clon_copies_links(chain):
    cloned = apply(RefactoringAction("Clon", "node1"), chain, position=3)
    assert cloned.link_between("node1.clon3", "node0") is not None
    assert cloned.link_between("node1.clon3", "node1") is None


def test_mo2c_moves_ownership(chain):
    moved = apply(RefactoringAction("MO2C", "op0", "stage1"), chain)
    assert moved.owner("op0") == "stage1"
    assert operation_ids(moved) == operation_ids(chain)
    messages = moved.scenario("main").messages
    assert (messages[0].caller, messages[0].callee) == ("actor", "stage1")
    # the call made while serving op0 now leaves from its new owner
    assert (messages[1].caller, messages[1].callee) == ("stage1", "stage1")
    validate(moved)


def test_mo2n_moves_to_a_new_component_on_a_new_node(chain):
    moved = apply(RefactoringAction("MO2N", "op1"), chain)
    assert moved.owner("op1") == "op1.mo2n0"
    assert moved.host("op1.mo2n0") == "op1.mo2n0.host"
    assert moved.component("stage1").operations == ()
    assert moved.link_between("op1.mo2n0.host", "node0") is not None
    assert moved.scenario("main").messages[1].callee == "op1.mo2n0"
    validate(moved)


def test_rede_keeps_the_link_neighbourhood(chain):
    moved = apply(RefactoringAction("ReDe", "stage1"), chain)
    new_node = moved.host("stage1")
    assert new_node == "stage1.rede0.host"
    assert moved.components_on(new_node) == ("stage1",)
    assert moved.components_on("node1") == ()
    old = {link.other("node1") for link in chain.links_of("node1")}
    new = {link.other(new_node) for link in moved.links_of(new_node)}
    assert new == old


def test_apply_leaves_the_input_untouched(ttbs):
    before = ttbs.nodes
    apply(RefactoringAction("Clon", "ui-dashboard-container"), ttbs)
    assert ttbs.nodes == before


def test_apply_checks_the_pre_condition(chain):
    with pytest.raises(PreconditionError):
        apply(RefactoringAction("MO2C", "op0", "stage0"), chain)


def test_fresh_ids_do_not_collide(single_station):
    twice = apply_sequence(seq(RefactoringAction("Clon", "host"), RefactoringAction("Clon", "host")),
                           single_station)
    assert {n.id for n in twice.nodes} == {"host", "host.clon0", "host.clon1"}
    again = apply(RefactoringAction("Clon", "host"), apply(RefactoringAction("Clon", "host"), single_station))
    assert {n.id for n in again.nodes} == {"host", "host.clon0", "host.clon0-2"}


# -- composition --------------------------------------------------------------------

def test_fold_of_a_single_action(chain):
    action = RefactoringAction("ReDe", "stage0")
    assert compose_conditions(seq(action), chain) == (pre_condition(action, chain),
                                                      post_condition(action, chain, 0))


def test_fold_discharges_guaranteed_atoms(chain):
    sequence = seq(RefactoringAction("MO2N", "op1"), RefactoringAction("MO2C", "op1", "stage1"))
    pre, post = compose_conditions(sequence, chain)
    assert pre == Condition([exists("op1"), owns("stage1", "op1"), exists("stage1")])
    assert owns("stage1", "op1") in post
    assert owns("op1.mo2n0", "op1").negated() in post
    assert is_feasible(sequence, chain)


def test_fold_detects_conflicts():
    pairs = [(Condition(), Condition([exists("x").negated()])), (Condition([exists("x")]), Condition())]
    with pytest.raises(ConditionConflictError):
        fold_conditions(pairs)


def test_fold_later_posts_supersede_earlier_ones():
    pairs = [(Condition(), Condition([deployed_on("c", "n1")])),
             (Condition(), Condition([deployed_on("c", "n1").negated(), deployed_on("c", "n2")]))]
    _, post = fold_conditions(pairs)
    assert post == Condition([deployed_on("c", "n1").negated(), deployed_on("c", "n2")])


def test_feasibility(chain):
    assert is_feasible(seq(), chain)
    created = seq(RefactoringAction("MO2N", "op1"), RefactoringAction("Clon", "op1.mo2n0.host"))
    assert is_feasible(created, chain)
    assert len(apply_sequence(created, chain).nodes) == 4
    assert not is_feasible(seq(RefactoringAction("Clon", "op1.mo2n0.host")), chain)
    assert not is_feasible(seq(RefactoringAction("ReDe", "ghost")), chain)


def test_intermediate_models(chain):
    sequence = seq(RefactoringAction("ReDe", "stage0"), RefactoringAction("ReDe", "stage1"))
    states = intermediate_models(sequence, chain)
    assert states[0] is chain
    assert states[1].host("stage0") == "stage0.rede0.host"


# -- random generation ----------------------------------------------------------------

def test_valid_targets(ttbs, single_station):
    counts = target_counts(ttbs)
    assert counts == {"Clon": 11, "MO2N": 8, "MO2C": 8 * 10, "ReDe": 11}
    assert valid_targets(single_station, "MO2C") == []


def test_single_component_never_draws_mo2c(single_station, rng):
    kinds = {random_action(single_station, rng).kind for _ in range(200)}
    assert kinds == {"Clon", "MO2N", "ReDe"}


def test_random_sequence_of_one(star, rng):
    sequence = random_sequence(star, rng, 1)
    assert len(sequence) == 1
    assert is_feasible(sequence, star)


def test_random_sequence_is_reproducible(ttbs):
    first = random_sequence(ttbs, np.random.default_rng(3), 4)
    second = random_sequence(ttbs, np.random.default_rng(3), 4)
    assert first == second


def test_repair_redraws_dangling_actions(chain, rng):
    repaired = repair(seq(RefactoringAction("Clon", "op1.mo2n0.host"), RefactoringAction("ReDe", "stage0")),
                      chain, rng)
    assert len(repaired) == 2
    assert repaired[1] == RefactoringAction("ReDe", "stage0")
    assert is_feasible(repaired, chain)


def behaviour(model):
    """Per-scenario multiset of (operation, repetitions, size)."""
    return {s.id: Counter((m.operation, m.repetitions, m.size) for m in s.messages) for s in model.scenarios}


# Test that feasible sequences apply cleanly and preserve behaviour
@pytest.mark.parametrize("case", ["ttbs", "cocome"])
def test_feasible_sequences_apply_and_preserve_behaviour(case, request, rng):
    model = request.getfixturevalue(case)
    expected = behaviour(model)
    for _ in range(1000):
        sequence = random_sequence(model, rng, 4)
        assert is_feasible(sequence, model)
        refactored = validate(apply_sequence(sequence, model))
        assert operation_ids(refactored) == operation_ids(model)
        assert behaviour(refactored) == expected, str(sequence)
        assert [s.prob for s in refactored.scenarios] == [s.prob for s in model.scenarios]
