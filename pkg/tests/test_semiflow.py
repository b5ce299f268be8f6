"""Event-driven piecewise motion: axioms, switching, confinement, exits."""

import math

import numpy as np
import pytest

from filflow import FieldId, exit_time, flow_map, get_builtin, semiflow
from filflow.poincare import SectionSpec

RELAY = get_builtin("relay_focus").system


def test_zero_time_is_identity():
    rng = np.random.default_rng(11)
    for _ in range(20):
        p = rng.uniform((-3.5, -1.5), (3.5, 3.5))
        end, status, _ = flow_map(RELAY, p, 0.0)
        assert np.array_equal(end, p)


def test_repeat_runs_are_bitwise_equal():
    p = (0.3, 2.1)
    a, _, _ = flow_map(RELAY, p, 7.5)
    b, _, _ = flow_map(RELAY, p, 7.5)
    assert np.array_equal(a, b)


def test_semigroup_across_switches():
    # triples chosen so the first leg ends on the sliding segment and the
    # second leg continues off it: the concatenation must match one long run
    rng = np.random.default_rng(23)
    worst = 0.0
    for _ in range(30):
        p = rng.uniform((-1.0, 1.5), (1.0, 3.0))
        t = rng.uniform(0.5, 6.0)
        s = rng.uniform(0.5, 6.0)
        mid, status, _ = flow_map(RELAY, p, t)
        if status not in ("NoExit", "TimeBudget"):
            continue
        two, status2, _ = flow_map(RELAY, mid, s)
        one, status1, _ = flow_map(RELAY, p, t + s)
        if status1 not in ("NoExit", "TimeBudget"):
            continue
        worst = max(worst, float(np.max(np.abs(one - two))))
    assert worst < 1e-6, worst


def test_relay_switch_pattern():
    # one full loop: spiral leg, sliding leg, spiral leg again
    traj = semiflow(RELAY, (0.0, 2.8375805263362466), 14.27)
    kinds = [arc.field_id for arc in traj.arcs]
    assert kinds[0] == FieldId.X
    assert FieldId.SLIDING in kinds
    sl = kinds.index(FieldId.SLIDING)
    assert kinds[sl + 1:sl + 2] == [FieldId.X]


def test_sliding_arcs_stay_on_surface():
    traj = semiflow(RELAY, (0.0, 2.5), 40.0)
    saw_sliding = False
    for arc in traj.arcs:
        if arc.field_id != FieldId.SLIDING:
            continue
        saw_sliding = True
        hs = np.abs(RELAY.h(np.asarray(arc.points)))
        assert float(hs.max()) <= 1e-8
    assert saw_sliding


def test_domain_exit_status():
    sysm = get_builtin("fold_visible").system
    traj = semiflow(sysm, (-1.0, 0.0, 0.5), 50.0)
    assert traj.status == "DomainExit"
    assert abs(traj.final_point[0] - 1.0) < 1e-7


def test_section_stop():
    spec = SectionSpec(anchor=(0.0, 2.3), normal=(1.0, 0.0), radius=1.2,
                       crossing_sense=-1, xi_window=1.0)
    traj = semiflow(RELAY, (0.5, 2.5), 40.0, section=spec.probe(t_min=1e-6))
    assert traj.status == "SectionHit"
    assert abs(traj.final_point[0]) < 1e-8


def test_time_grid_evaluation():
    traj = semiflow(RELAY, (0.0, 2.5), 12.0)
    for t in (0.0, 1.0, 3.7, 11.999):
        p = traj.evaluate(t)
        assert RELAY.domain.contains(p, slack=1e-6)
    assert np.allclose(traj.evaluate(0.0), (0.0, 2.5))


# ---------------------------------------------------------------------------
# single-field exit times on the visible-fold example


def test_grazing_does_not_end_the_run():
    sysm = get_builtin("fold_visible").system
    # this start grazes the fold at t=1 and must keep going to the wall
    res = exit_time(sysm, (-1.0, 0.0, 0.5), FieldId.X, t_cap=10.0)
    assert res.kind == "DomainExit"
    assert abs(res.time - 2.0) < 1e-6
    assert res.grazes and abs(res.grazes[0]["time"] - 1.0) < 1e-5
    assert res.grazes[0]["caseLabel"] == "A1"


def test_transversal_exit_below_the_graze():
    sysm = get_builtin("fold_visible").system
    delta = 1e-4
    res = exit_time(sysm, (-1.0, 0.0, 0.5 - delta), FieldId.X, t_cap=10.0)
    assert res.kind == "TransversalExit"
    # parabola arithmetic: the crossing happens sqrt(2*delta) early
    assert abs(res.time - (1.0 - math.sqrt(2 * delta))) < 1e-6


def test_exit_time_rejects_wrong_side():
    sysm = get_builtin("fold_visible").system
    with pytest.raises(ValueError):
        exit_time(sysm, (0.0, 0.0, -0.5), FieldId.X)
