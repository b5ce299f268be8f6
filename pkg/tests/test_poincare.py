"""Section geometry, the first-return map, and orbit detection."""

import numpy as np
import pytest

from filflow import find_periodic, get_builtin
from filflow.errors import NoConvergence, NoReturn
from filflow.poincare import (SectionSpec, classify_orbit, return_map,
                              validate_section)
from filflow.system import Box

from oracles import relay_oracle

RELAY = get_builtin("relay_focus").system
SPEC = SectionSpec(anchor=(0.0, 2.3), normal=(1.0, 0.0), radius=1.2,
                   crossing_sense=-1, xi_window=1.0)


@pytest.fixture(scope="module")
def orbit():
    return find_periodic(RELAY, SPEC, (0.0, 2.5), settle=30.0)


def test_chart_inverts_point_at():
    rng = np.random.default_rng(5)
    for _ in range(20):
        xi = rng.uniform(-1.1, 1.1, size=1)
        p = SPEC.point_at(xi)
        assert np.allclose(SPEC.chart(p), xi, atol=1e-12)
        assert abs(float(np.dot(p - np.asarray(SPEC.anchor),
                                np.asarray(SPEC.normal)))) < 1e-12


def test_snap_and_contains():
    p = SPEC.snap((0.37, 2.6))
    assert abs(p[0]) < 1e-15
    assert SPEC.contains(p)
    assert not SPEC.contains((0.0, 2.3 + 1.5))   # off the disk
    assert not SPEC.contains((0.5, 2.3))         # off the plane


def test_return_map_comes_back():
    rec = return_map(RELAY, SPEC, (0.0, 2.5))
    assert rec.return_time > 1.0
    assert abs(rec.image[0]) < 1e-8
    assert np.linalg.norm(rec.image - np.asarray(SPEC.anchor)) <= SPEC.radius


def test_return_map_rejects_off_disk_start():
    with pytest.raises(ValueError):
        return_map(RELAY, SPEC, (0.0, 3.9))


def test_find_periodic_matches_closed_form(orbit):
    period, landing_x, t_arc, t_slide = relay_oracle()
    assert orbit.closure_error < 1e-6
    assert abs(orbit.period - period) < 1e-5
    assert orbit.kind == "polyIII"
    assert orbit.hyperbolic
    # the sliding leg is where the oracle says it is
    sliding = [a for a in orbit.orbit_trajectory.arcs
               if str(a.field_id) == "Zs"]
    assert len(sliding) == 1
    assert abs((sliding[0].end_time - sliding[0].start_time) - t_slide) < 1e-4
    assert abs(sliding[0].start_point[0] - landing_x) < 1e-5


def test_orbit_census(orbit):
    res = classify_orbit(orbit)
    assert res["kind"] == "polyIII"
    census = res["foldCensus"]
    assert census["slidingArcs"] == 1
    assert census["visibleFolds"] >= 1
    assert "sliding" in res["arcKinds"]


def test_orbit_serialization(orbit):
    d = orbit.to_dict()
    assert set(d) >= {"basePoint", "period", "closureError", "kind"}
    assert d["kind"] == "polyIII"
    assert d["period"] == orbit.period


def test_wrong_sense_never_returns():
    # the loop pierces the disk right-to-left only; demanding the opposite
    # sense leaves the return map undefined
    flipped = SectionSpec(anchor=(0.0, 2.3), normal=(1.0, 0.0), radius=1.2,
                          crossing_sense=+1, xi_window=1.0)
    with pytest.raises(NoReturn):
        return_map(RELAY, flipped, (0.0, 2.5), t_cap=30.0)
    with pytest.raises(NoConvergence):
        find_periodic(RELAY, flipped, (0.0, 2.5), t_cap=30.0)


def test_validate_section_on_the_orbit_region():
    region = Box((-2.8, -0.3), (1.4, 2.9))
    report = validate_section(RELAY, region, SPEC)
    assert report.ok, report.issues
    assert report.min_transversality > 0
    assert report.return_fraction == 1.0


def test_validate_section_flags_useless_disk():
    # a disk tucked into the corner never meets the recurrent set
    bad = SectionSpec(anchor=(3.5, -1.5), normal=(0.0, 1.0), radius=0.2,
                      crossing_sense=-1, xi_window=0.5)
    report = validate_section(RELAY, Box((-2.8, -0.3), (1.4, 2.9)), bad,
                              samples=30, t_cap=20.0)
    assert not report.ok
    assert report.issues
