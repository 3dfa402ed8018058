"""Semiclassical Wigner function of a leaf state: per-chord branches and their sum."""

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import CAUSTIC_THRESHOLD, as_point
from .errors import CausticError, DomainError
from .leaf import caustic_indicator, chord_area, find_chords

MASLOV_OFFSET = math.pi / 4


@dataclass
class WignerBranch:
    chord: object
    action: float
    amplitude: float
    caustic: object
    maslov_offset: float = MASLOV_OFFSET

    @property
    def valid(self):
        return not self.caustic.is_on_caustic and math.isfinite(self.amplitude)

    def phase(self, hbar):
        return self.action / hbar - self.maslov_offset

    def value(self, hbar):
        return self.amplitude * math.cos(self.phase(hbar))


@dataclass
class WignerEvaluation:
    x: np.ndarray
    value: float  # None when any branch sits on a caustic
    branches: list = field(default_factory=list)
    half_values: tuple = (0j, 0j)

    @property
    def flagged(self):
        return self.value is None

    @property
    def branch_count(self):
        return len(self.branches)


def amplitude_from_velocities(vp, vm, omega, hbar):
    """``(2 omega / pi) (2 pi hbar |v+ ^ v-|)^(-1/2)``."""
    w = abs(float(vp[0] * vm[1] - vp[1] * vm[0]))
    if w == 0.0:
        return math.inf
    return (2.0 * omega / math.pi) / math.sqrt(2.0 * math.pi * hbar * w)


def branch_amplitude(leaf, chord, hbar):
    if hbar <= 0:
        raise DomainError("hbar must be positive")
    if leaf.omega is None:
        raise DomainError("leaf carries no frequency; amplitude is undefined")
    report = caustic_indicator(leaf, chord)
    if report.is_on_caustic:
        raise CausticError(f"chord centred on {chord.center} lies on the Wigner caustic")
    sm, sp = chord.params
    return amplitude_from_velocities(leaf.velocity(sp), leaf.velocity(sm), leaf.omega, hbar)


def make_branch(leaf, chord, hbar, chord_count=1, maslov_offset=MASLOV_OFFSET):
    report = caustic_indicator(leaf, chord, chord_count=chord_count)
    S = leaf.orientation * chord_area(leaf, chord)
    if report.is_on_caustic:
        amp = math.inf
    else:
        amp = branch_amplitude(leaf, chord, hbar)
    return WignerBranch(chord=chord, action=S, amplitude=amp, caustic=report, maslov_offset=maslov_offset)


def evaluate(leaf, hbar, x, tol=1e-10, maslov=None):
    """Semiclassical Wigner function ``sum_j A_j cos(S_j / hbar - offset_j)`` at ``x``.

    ``maslov`` optionally maps ``(branch_index, branch_count)`` to an extra
    number of quarter-turns added to the default ``pi/4`` offset.
    """
    if hbar <= 0:
        raise DomainError("hbar must be positive")
    x = as_point(x)
    chords = find_chords(leaf, x, tol=tol)
    n = len(chords)
    branches = []
    for i, ch in enumerate(chords):
        off = MASLOV_OFFSET
        if maslov is not None:
            off += 0.5 * math.pi * maslov(i, n)
        branches.append(make_branch(leaf, ch, hbar, chord_count=n, maslov_offset=off))
    ev = WignerEvaluation(x=x, value=0.0, branches=branches)
    if any(not b.valid for b in branches):
        ev.value = None
        return ev
    ev.value = float(sum(b.value(hbar) for b in branches))
    ev.half_values = split_half_branches(ev, hbar)
    return ev


def split_half_branches(ev, hbar):
    """Complex halves ``W+ = sum A exp(+i phase)`` and ``W- = conj(W+)``."""
    wp = 0j
    for b in ev.branches:
        if not b.valid:
            continue
        wp += b.amplitude * np.exp(1j * b.phase(hbar))
    return complex(wp), complex(np.conj(wp))


def evaluate_many(leaf, hbar, points, tol=1e-10, maslov=None):
    """Vector of values (NaN where flagged), branch counts and caustic flags."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    vals = np.full(len(points), np.nan)
    counts = np.zeros(len(points), dtype=int)
    flags = np.zeros(len(points), dtype=bool)
    for i, x in enumerate(points):
        ev = evaluate(leaf, hbar, x, tol=tol, maslov=maslov)
        counts[i] = ev.branch_count
        if ev.flagged:
            flags[i] = True
        else:
            vals[i] = ev.value
    return vals, counts, flags
