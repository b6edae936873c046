"""
Tests the LQN transformation and the approximate solver.

Uses pytest fixtures located in conftest.py in the tests/ directory.
"""
from dataclasses import replace

import numpy as np
import pytest

from engine.errors import LqnStructureError, SolverError
from engine.fixtures import chain as chain_model
from engine.fixtures import single_station as station_model
from engine.lqn import (
    Call,
    Entry,
    LqnModel,
    Processor,
    ReferenceTask,
    Task,
    analyze,
    render,
    solve,
    to_lqn,
    visit_counts,
)
from engine.model import Workload
from engine.refactoring import RefactoringAction, apply


# Test the single-station open model against M/M/1 closed forms
def test_mm1_closed_forms(single_station):
    indices = analyze(single_station)
    assert indices.converged
    assert indices.node_utilization["host"] == pytest.approx(0.5, abs=1e-6)
    assert indices.scenario_response_time["main"] == pytest.approx(2.0, abs=1e-6)
    assert indices.scenario_throughput["main"] == pytest.approx(0.5, abs=1e-6)


def test_multi_server_close_to_erlang_c():
    indices = analyze(station_model(demand=1.0, arrival_rate=1.0, servers=2))
    # M/M/2 at rho = 0.5: R = D / (1 - rho^2)
    assert indices.node_utilization["host"] == pytest.approx(0.5)
    assert indices.scenario_response_time["main"] == pytest.approx(1.0 / (1.0 - 0.25), rel=0.05)


def test_chain_is_a_tandem_of_open_stations(chain):
    indices = analyze(chain)
    assert indices.scenario_response_time["main"] == pytest.approx(0.2 / 0.8 + 0.3 / 0.7, abs=1e-6)
    assert indices.node_utilization == pytest.approx({"node0": 0.2, "node1": 0.3})
    residence = indices.component_residence["main"]
    assert residence["stage0"] == pytest.approx(0.25)
    assert residence["stage1"] == pytest.approx(0.3 / 0.7)


def test_closed_single_customer(single_station):
    scenario = replace(single_station.scenarios[0],
                       workload=Workload("closed", population=1, think_time=1.0))
    indices = analyze(replace(single_station, scenarios=(scenario,)))
    assert indices.converged
    assert indices.scenario_response_time["main"] == pytest.approx(1.0)
    assert indices.scenario_throughput["main"] == pytest.approx(0.5)
    assert indices.node_utilization["host"] == pytest.approx(0.5)


def test_closed_population_respects_bounds(single_station):
    scenario = replace(single_station.scenarios[0],
                       workload=Workload("closed", population=10, think_time=1.0))
    indices = analyze(replace(single_station, scenarios=(scenario,)))
    # throughput never exceeds the bottleneck rate and response time never drops below N*D - Z
    assert indices.scenario_throughput["main"] <= 1.0 + 1e-9
    assert indices.scenario_response_time["main"] >= 10 * 1.0 - 1.0 - 1e-6
    assert 0.9 <= indices.node_utilization["host"] <= 1.0


def test_saturated_station():
    indices = analyze(station_model(demand=1.0, arrival_rate=2.0))
    assert indices.saturated == ("host",)
    assert indices.node_utilization["host"] == 1.0
    assert indices.scenario_throughput["main"] == pytest.approx(1.0)


def test_replicas_split_the_load(single_station):
    cloned = apply(RefactoringAction("Clon", "host"), single_station)
    indices = analyze(cloned)
    assert indices.node_utilization["host"] == pytest.approx(0.25)
    assert indices.node_utilization["host.clon0"] == pytest.approx(0.25)
    assert indices.scenario_throughput["main"] == pytest.approx(0.5)
    assert indices.scenario_response_time["main"] == pytest.approx(1.0 / 0.75)


def test_to_lqn_structure(chain):
    lqn = to_lqn(chain)
    assert [p.id for p in lqn.processors] == ["node0", "node1"]
    assert [(e.id, e.task) for e in lqn.entries] == [("op0", "stage0"), ("op1", "stage1")]
    assert Call("main", None, "op0", 1.0) in lqn.calls
    assert Call("main", "op0", "op1", 1.0) in lqn.calls
    assert visit_counts(lqn) == {"main": {"op0": 1.0, "op1": 1.0}}
    listing = render(lqn)
    assert "P node0 m=1 speed=1" in listing
    assert "C main op0 -> op1 y=1" in listing


def test_nested_calls_are_per_invocation(ttbs):
    visits = visit_counts(to_lqn(ttbs))
    assert visits["rebook"]["getOrder"] == 2.0
    assert visits["login"]["verifyCode"] == 1.0


def test_speed_factor_scales_demand(single_station):
    fast = replace(single_station, nodes=(replace(single_station.nodes[0], speed_factor=2.0),))
    assert analyze(fast).node_utilization["host"] == pytest.approx(0.25)


def test_solve_is_deterministic(cocome):
    assert analyze(cocome).to_dict() == analyze(cocome).to_dict()


def test_case_study_utilizations_are_calibrated(ttbs, cocome):
    for model in (ttbs, cocome):
        indices = analyze(model)
        assert indices.converged
        assert not indices.saturated
        busy = {model.host(m.callee) for s in model.scenarios for m in s.messages}
        for node in busy:
            assert 0.3 <= indices.node_utilization[node] <= 0.8


def test_cyclic_call_graph_is_rejected():
    lqn = LqnModel(
        processors=(Processor("p", 1, 1.0),),
        tasks=(Task("t", "p"),),
        entries=(Entry("a", "t", 0.1), Entry("b", "t", 0.1)),
        calls=(Call("s", None, "a", 1.0), Call("s", "a", "b", 1.0), Call("s", "b", "a", 1.0)),
        reference_tasks=(ReferenceTask("s", Workload("open", arrival_rate=1.0)),),
    )
    with pytest.raises(LqnStructureError):
        solve(lqn)


def test_invalid_solver_settings(chain):
    with pytest.raises(SolverError):
        solve(to_lqn(chain), tol=0)


def simulate_tandem(arrival_rate, demands, customers, rng):
    """FCFS tandem of single-server exponential stations by the Lindley recursion.

    Returns per-customer sojourn times.
    """
    arrivals = np.cumsum(rng.exponential(1.0 / arrival_rate, size=customers))
    departures = arrivals
    for demand in demands:
        service = rng.exponential(demand, size=customers)
        leave = np.empty(customers)
        last = 0.0
        for i in range(customers):
            last = max(departures[i], last) + service[i]
            leave[i] = last
        departures = leave
    return departures - arrivals


# Test the two-layer chain against a discrete-event simulation
@pytest.mark.slow
def test_chain_matches_simulation():
    rng = np.random.default_rng(11)
    model = chain_model(demands=(0.2, 0.3), arrival_rate=1.0)
    sojourn = simulate_tandem(1.0, (0.2, 0.3), 400_000, rng)[10_000:]
    batches = sojourn[: len(sojourn) // 50 * 50].reshape(50, -1).mean(axis=1)
    mean = batches.mean()
    half_width = 1.96 * batches.std(ddof=1) / np.sqrt(len(batches))
    solved = analyze(model).scenario_response_time["main"]
    assert abs(solved - mean) <= max(0.05 * mean, half_width)
