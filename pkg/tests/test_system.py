"""Region classification, contact taxonomy, and system validation."""

from fractions import Fraction

import numpy as np
import pytest

from filflow import (Box, RegionLabel, classify_point, classify_tangency,
                     get_builtin, validate_system)

from oracles import batch_brute_labels, case_from_signs, contact_signs

BUILTINS = ("constant_sliding", "crossing_tower", "fold_visible",
            "fold_invisible", "cusp_visible", "fold_fold_B1",
            "relay_focus", "sliding_circle")


# ---------------------------------------------------------------------------
# classification agrees with literal sign evaluation


@pytest.mark.parametrize("name", BUILTINS)
def test_classification_matches_brute_force(name):
    system = get_builtin(name).system
    tol = system.tol
    rng = np.random.default_rng(hash(name) % 2 ** 32)
    lo = np.asarray(system.domain.lo)
    hi = np.asarray(system.domain.hi)
    pts = rng.uniform(lo, hi, size=(800, system.nvars))
    # push a third of them onto the surface to exercise the on-surface labels
    for p in pts[::3]:
        p[-1] = 0.0 if system.h(p) != 0 else p[-1]
    expected = batch_brute_labels(system, pts, 10 * tol.eps_sigma,
                                  10 * tol.eps_tan)
    for p, want in zip(pts, expected):
        if want is None:
            continue  # inside the tolerance band: either answer is fine
        got, _ = classify_point(system, p)
        assert got.value == want, (name, tuple(p), got.value, want)


def test_relay_surface_labels():
    system = get_builtin("relay_focus").system
    got, _ = classify_point(system, (1.0, 0.0))
    assert got == RegionLabel.CROSSING_PLUS
    got, _ = classify_point(system, (-1.0, 0.0))
    assert got == RegionLabel.SLIDING
    got, info = classify_point(system, (0.2, 0.0))
    assert got == RegionLabel.TANGENCY
    assert info is not None and info.case_label == "A1"


# ---------------------------------------------------------------------------
# contact taxonomy at the designed tangency points

TAXONOMY = [
    ("fold_visible", (0.0, Fraction(3, 10), 0.0), "A1"),
    ("fold_invisible", (0.0, Fraction(3, 10), 0.0), "A2"),
    ("cusp_visible", (0, 0, 0), "A4"),
    ("fold_fold_B1", (0, 0, 0), "B1"),
]


@pytest.mark.parametrize("name,point,label", TAXONOMY)
def test_taxonomy(name, point, label):
    system = get_builtin(name).system
    info = classify_tangency(system, [float(v) for v in point])
    assert info.case_label == label
    # the exact symbolic signs support the same label
    assert case_from_signs(contact_signs(system, point)) == label


def test_tangency_requires_surface_point():
    system = get_builtin("fold_visible").system
    with pytest.raises(ValueError):
        classify_tangency(system, (0.0, 0.0, 0.5))


# ---------------------------------------------------------------------------
# whole-system validation


def test_validate_accepts_the_working_builtins():
    for name in BUILTINS:
        report = validate_system(get_builtin(name).system)
        assert report.ok, (name, report.issues)
        assert report.min_gradient > 0
        assert not report.escaping_points


def test_validate_refuses_escaping_demo():
    report = validate_system(get_builtin("escaping_demo").system)
    assert not report.ok
    assert report.escaping_points
    assert any("escaping" in issue for issue in report.issues)


def test_validation_report_shape():
    report = validate_system(get_builtin("relay_focus").system)
    d = report.to_dict()
    assert set(d) >= {"ok", "issues", "surfaceSamples", "minGradient",
                      "labelCounts"}
    assert d["ok"] is True
    assert d["labelCounts"].get("Sliding", 0) > 0


# ---------------------------------------------------------------------------
# box helpers


def test_box_membership_and_clip():
    box = Box((-1.0, 0.0), (1.0, 2.0))
    assert box.contains((0.0, 1.0))
    assert not box.contains((1.5, 1.0))
    assert box.contains((1.0 + 1e-12, 1.0), slack=1e-9)
    clipped = box.clip((3.0, -1.0))
    assert tuple(clipped) == (1.0, 0.0)
