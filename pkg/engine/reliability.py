"""Closed-form system reliability of an architecture model.

A scenario succeeds when every invoked component and every traversed link
survives; components fail independently per invocation (θ) and links per
unit of message size (ψ). System reliability weights scenarios by their
execution probability.
"""
import numpy as np

from engine.model import invocation_count, link_traffic


def scenario_reliability(model, scenario_id):
    theta = np.array([c.failure_prob for c in model.components])
    invocations = np.array([invocation_count(model, scenario_id, c.id) for c in model.components], dtype=float)
    traffic = link_traffic(model, scenario_id)
    psi = np.array([link.failure_prob for link in model.links])
    sizes = np.array([traffic[link.id] for link in model.links], dtype=float)
    return float(np.prod((1.0 - theta) ** invocations) * np.prod((1.0 - psi) ** sizes))


def system_reliability(model):
    return float(sum(s.prob * scenario_reliability(model, s.id) for s in model.scenarios))


def failure_probability(model):
    return 1.0 - system_reliability(model)
