import math

import numpy as np
import pytest

from chordflow.errors import DegenerateCenterError, DomainError, PreconditionError
from chordflow.leaf import (
    Leaf,
    bohr_sommerfeld_radius,
    caustic_indicator,
    chord_area,
    chord_count_map,
    find_chords,
    make_circle_leaf,
    wigner_caustic_trace,
)


def circle_segment_area(R, d):
    """Area of the minor segment cut by a chord at distance ``d`` from the centre."""
    return R * R * math.acos(d / R) - d * math.sqrt(R * R - d * d)


def test_enclosed_area_and_orientation():
    leaf = make_circle_leaf([0.3, -0.2], 1.5)
    assert leaf.enclosed_area == pytest.approx(math.pi * 1.5**2, rel=1e-9)
    assert leaf.orientation == 1
    rev = make_circle_leaf([0.3, -0.2], 1.5, orientation=-1)
    assert rev.orientation == -1
    assert rev.area == pytest.approx(leaf.area, rel=1e-12)


def test_bohr_sommerfeld_radius():
    leaf = make_circle_leaf([0, 0], None, quantum_number=4, hbar=0.1)
    assert leaf.area == pytest.approx(2 * math.pi * 0.1 * 4.5, rel=1e-9)
    with pytest.raises(DomainError):
        make_circle_leaf([0, 0], 1.0, quantum_number=4, hbar=0.1)
    assert bohr_sommerfeld_radius(0, 0.5) == pytest.approx(math.sqrt(0.5))


@pytest.mark.parametrize("kwargs", [dict(R=-1.0), dict(R=1.0, n_samples=8), dict(R=1.0, orientation=2)])
def test_circle_rejects_bad_input(kwargs):
    with pytest.raises(DomainError):
        make_circle_leaf([0, 0], **kwargs)


def test_leaf_rejects_duplicates_and_nan():
    s = np.array([0.0, 0.25, 0.25, 0.75])
    with pytest.raises(DomainError):
        Leaf(s, np.ones((4, 2)))
    with pytest.raises(DomainError):
        Leaf(np.arange(4) / 4, np.full((4, 2), np.nan))


def test_single_chord_inside_circle():
    c, R = np.array([0.8, 0.0]), 1.0
    leaf = make_circle_leaf(c, R)
    x = c + [0.3, 0.4]
    (ch,) = find_chords(leaf, x)
    assert np.allclose(0.5 * (ch.tip_minus + ch.tip_plus), x, atol=1e-10)
    assert np.linalg.norm(ch.tip_plus - c) == pytest.approx(R, abs=1e-10)
    # the selected branch is the small segment on the far side of the chord
    assert abs(chord_area(leaf, ch)) == pytest.approx(circle_segment_area(R, 0.5), abs=1e-8)


def test_no_chords_outside_convex_leaf():
    leaf = make_circle_leaf([0, 0], 1.0)
    assert find_chords(leaf, [1.5, 0.2]) == []


def test_zero_chord_on_leaf():
    leaf = make_circle_leaf([0, 0], 1.0)
    x = np.array([math.cos(0.7), math.sin(0.7)])
    (ch,) = find_chords(leaf, x)
    assert ch.is_degenerate
    assert chord_area(leaf, ch) == 0.0
    assert caustic_indicator(leaf, ch).is_on_caustic


def test_degenerate_center():
    leaf = make_circle_leaf([0.2, 0.1], 1.0)
    with pytest.raises(DegenerateCenterError):
        find_chords(leaf, [0.2, 0.1])


def test_chord_area_tends_to_zero_near_leaf():
    leaf = make_circle_leaf([0, 0], 1.0)
    areas = [abs(chord_area(leaf, find_chords(leaf, [r, 0.0])[0])) for r in (0.9, 0.99, 0.999)]
    assert areas[0] > areas[1] > areas[2]
    assert areas[2] < 1e-4


def test_chord_area_rejects_foreign_chord():
    leaf = make_circle_leaf([0, 0], 1.0)
    other = make_circle_leaf([0, 0], 2.0)
    ch = find_chords(other, [0.5, 0.5])[0]
    with pytest.raises(DomainError):
        chord_area(leaf, ch)


def test_arc_integral_full_loop():
    leaf = make_circle_leaf([0.4, 0.0], 1.2)
    assert leaf.arc_integral(0.3, 0.3 - 1e-15) == pytest.approx(leaf.enclosed_area, rel=1e-9)
    assert leaf.arc_integral(0.1, 0.6) + leaf.arc_integral(0.6, 0.1) == pytest.approx(leaf.enclosed_area, rel=1e-12)


def test_caustic_trace_of_circle_is_its_centre():
    leaf = make_circle_leaf([0.5, -0.3], 1.0, n_samples=128)
    trace = wigner_caustic_trace(leaf, n_scan=64)
    assert len(trace) > 0
    assert np.allclose(trace, [0.5, -0.3], atol=1e-8)
    with pytest.raises(PreconditionError):
        wigner_caustic_trace(leaf, n_scan=10)


def test_ellipse_has_three_chords_near_centre():
    # squeezed ellipse: points near the centre but off the axes see more chords
    s = np.arange(512) / 512
    pts = np.stack([2.0 * np.cos(2 * math.pi * s), 0.5 * np.sin(2 * math.pi * s)], axis=-1)
    leaf = Leaf(s, pts, omega=1.0)
    counts = chord_count_map(leaf, np.array([[0.0]]), np.array([[0.0]]))
    assert counts[0, 0] == -1
    assert len(find_chords(leaf, [0.9, 0.0])) == 1


def test_resampled_keeps_metadata():
    leaf = make_circle_leaf([0, 0], 1.0, quantum_number=None, omega=2.0)
    r = leaf.resampled(100)
    assert len(r) == 100 and r.omega == 2.0
    assert r.area == pytest.approx(leaf.area, rel=1e-6)
