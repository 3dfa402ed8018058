"""Closed Lagrangian curves, their chords, chord areas and Wigner caustics."""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq
from scipy.spatial import cKDTree

from .dynamics import CAUSTIC_THRESHOLD, as_point, wedge
from .errors import DegenerateCenterError, DomainError, PreconditionError

# 3-point Gauss-Legendre on [0, 1]; exact for the degree-5 integrand x ^ x' of a cubic spline.
_GL_NODES = 0.5 * (1.0 + np.array([-math.sqrt(3.0 / 5.0), 0.0, math.sqrt(3.0 / 5.0)]))
_GL_WEIGHTS = 0.5 * np.array([5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])


class Leaf:
    """Closed curve ``x(s)``, ``s`` in [0, 1), through ordered samples.

    ``s`` is a Lagrangian label: for an energy contour it is the angle
    variable (time over period), and flowing the samples keeps the labels.
    ``omega`` is the angular frequency of motion on the generating contour;
    phase-space velocities are then ``omega / (2 pi) * dx/ds``.  Leaves
    without ``omega`` report unit-speed tangents instead.
    """

    def __init__(self, s, points, omega=None, quantum_number=None, hbar=None, source=None):
        s = np.asarray(s, dtype=float)
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        if len(s) != len(points):
            raise DomainError("s and points must have equal length")
        if len(s) < 4:
            raise DomainError("a leaf needs at least 4 samples")
        if not np.all(np.isfinite(points)):
            raise DomainError("leaf samples must be finite")
        order = np.argsort(np.mod(s, 1.0))
        s = np.mod(s, 1.0)[order]
        points = points[order]
        if np.any(np.diff(s) <= 0):
            raise DomainError("leaf parameters must be distinct")
        self.s = s
        self.points = points
        self.omega = omega
        self.quantum_number = quantum_number
        self.hbar = hbar
        self.source = source
        s_ext = np.append(s, s[0] + 1.0)
        p_ext = np.vstack([points, points[:1]])
        self._spline = CubicSpline(s_ext, p_ext, bc_type="periodic", axis=0)
        self._dspline = self._spline.derivative()
        self._knots = s_ext
        # cumulative (1/2) int x ^ x' ds at the knots
        a, b = s_ext[:-1], s_ext[1:]
        h = b - a
        nodes = a[:, None] + h[:, None] * _GL_NODES[None, :]
        X = self._spline(nodes)
        dX = self._dspline(nodes)
        integrand = 0.5 * wedge(X, dX)
        seg = h * (integrand @ _GL_WEIGHTS)
        self._cum = np.concatenate([[0.0], np.cumsum(seg)])
        self.enclosed_area = float(self._cum[-1])
        self._tree = None
        self._dense = None

    # -- geometry ----------------------------------------------------------

    def __len__(self):
        return len(self.s)

    @property
    def orientation(self):
        return 1 if self.enclosed_area >= 0 else -1

    @property
    def area(self):
        return abs(self.enclosed_area)

    def __call__(self, s):
        return self._spline(np.mod(s, 1.0))

    def derivative(self, s):
        return self._dspline(np.mod(s, 1.0))

    def velocity(self, s):
        d = self.derivative(s)
        if self.omega is None:
            return d / np.linalg.norm(d, axis=-1, keepdims=True)
        return self.omega / (2.0 * math.pi) * d

    def arc_integral(self, s_a, s_b):
        """``(1/2) int x ^ dx`` from ``s_a`` to ``s_b`` following increasing ``s`` (wrapping)."""
        s_a = float(np.mod(s_a, 1.0))
        s_b = float(np.mod(s_b, 1.0))
        val = self._prefix(s_b) - self._prefix(s_a)
        if s_b < s_a:
            val += self.enclosed_area
        return float(val)

    def _prefix(self, s):
        k = int(np.searchsorted(self._knots, s, side="right") - 1)
        k = min(max(k, 0), len(self._knots) - 2)
        a = self._knots[k]
        h = s - a
        if h <= 0:
            return float(self._cum[k])
        nodes = a + h * _GL_NODES
        part = h * float(0.5 * wedge(self._spline(nodes), self._dspline(nodes)) @ _GL_WEIGHTS)
        return float(self._cum[k] + part)

    def dense(self):
        """Samples with one spline midpoint inserted per interval (cached)."""
        if self._dense is None:
            mid = 0.5 * (self._knots[:-1] + self._knots[1:])
            sd = np.empty(2 * len(self.s))
            sd[0::2] = self.s
            sd[1::2] = mid
            self._dense = (sd, self(sd))
        return self._dense

    def tree(self):
        if self._tree is None:
            self._tree = cKDTree(self.dense()[1])
        return self._tree

    def closest_param(self, y, iters=20):
        """Leaf parameter of the point closest to ``y`` (local Newton on the spline)."""
        y = as_point(y)
        sd, X = self.dense()
        _, j = self.tree().query(y)
        s = sd[j]
        for _ in range(iters):
            d = self(s) - y
            d1 = self.derivative(s)
            d2 = self._spline(np.mod(s, 1.0), 2)
            g = d @ d1
            hgg = d1 @ d1 + d @ d2
            if hgg <= 0:
                break
            step = g / hgg
            s -= step
            if abs(step) < 1e-15:
                break
        s = float(np.mod(s, 1.0))
        return s, float(np.linalg.norm(self(s) - y))

    def resampled(self, n):
        """Uniform-in-``s`` resampling (keeps labels and metadata)."""
        s = np.arange(n) / n
        pts = self.source(s) if self.source is not None else self(s)
        return Leaf(s, pts, omega=self.omega, quantum_number=self.quantum_number, hbar=self.hbar, source=self.source)

    def reversed(self):
        s = np.mod(1.0 - self.s, 1.0)
        src = None if self.source is None else (lambda u, f=self.source: f(np.mod(1.0 - np.asarray(u), 1.0)))
        return Leaf(s, self.points, omega=self.omega, quantum_number=self.quantum_number, hbar=self.hbar, source=src)


def bohr_sommerfeld_radius(n, hbar):
    return math.sqrt((2 * n + 1) * hbar)


def make_circle_leaf(center, R, n_samples=512, orientation=1, omega=1.0, quantum_number=None, hbar=None):
    """Circle of radius ``R``; counter-clockwise (harmonic-flow sense) unless ``orientation=-1``.

    With ``quantum_number`` and ``hbar`` both given the radius must satisfy
    the Bohr-Sommerfeld rule; pass ``R=None`` to have it computed.
    """
    c = as_point(center)
    if quantum_number is not None and hbar is not None:
        R_bs = bohr_sommerfeld_radius(quantum_number, hbar)
        if R is None:
            R = R_bs
        elif abs(R - R_bs) > 1e-12 * R_bs:
            raise DomainError(f"radius {R} is not the Bohr-Sommerfeld radius {R_bs} for n={quantum_number}")
    if R is None or not R > 0:
        raise DomainError(f"circle radius must be positive, got {R}")
    if n_samples < 16:
        raise DomainError("need at least 16 samples")
    if orientation not in (1, -1):
        raise DomainError("orientation must be +1 or -1")
    R = float(R)

    def source(s):
        th = 2.0 * math.pi * orientation * np.asarray(s, dtype=float)
        return np.stack([c[0] + R * np.cos(th), c[1] + R * np.sin(th)], axis=-1)

    s = np.arange(n_samples) / n_samples
    return Leaf(s, source(s), omega=omega, quantum_number=quantum_number, hbar=hbar, source=source)


# --------------------------------------------------------------------------
# Chords


@dataclass
class Chord:
    center: np.ndarray
    tip_minus: np.ndarray
    tip_plus: np.ndarray
    params: tuple

    @property
    def xi(self):
        return self.tip_plus - self.tip_minus

    @property
    def is_degenerate(self):
        return bool(np.linalg.norm(self.xi) == 0.0)

    def swapped(self):
        return Chord(self.center, self.tip_plus, self.tip_minus, (self.params[1], self.params[0]))


@dataclass
class CausticReport:
    indicator: float
    normalized: float
    is_on_caustic: bool
    chord_count: int = 0


def make_chord(leaf, s_minus, s_plus):
    a = leaf(s_minus)
    b = leaf(s_plus)
    return Chord(center=0.5 * (a + b), tip_minus=a, tip_plus=b, params=(float(np.mod(s_minus, 1.0)), float(np.mod(s_plus, 1.0))))


def _order_tips(leaf, a, b):
    """Fix tip identity: orientation * (v_plus ^ v_minus) < 0.

    This picks, for a chord of a convex leaf, the arc on the far side of the
    chord from the interior, which is the branch that tends to zero area as
    the center approaches the leaf.  Ties go to the smaller parameter as
    ``tip_minus``.
    """
    va = leaf.velocity(a)
    vb = leaf.velocity(b)
    w = leaf.orientation * wedge(vb, va)  # candidate: minus=a, plus=b
    nrm = np.linalg.norm(va) * np.linalg.norm(vb)
    if abs(w) <= CAUSTIC_THRESHOLD * nrm:
        return (a, b) if a <= b else (b, a)
    return (a, b) if w < 0 else (b, a)


def refine_chord(leaf, x, s_minus, s_plus, tol=1e-12, max_iter=50):
    """Newton solve of ``x(a) + x(b) = 2 x`` from a parameter-pair guess.

    Returns ``(a, b)`` or ``None`` if the iteration fails.
    """
    x = as_point(x)
    a, b = float(s_minus), float(s_plus)
    for _ in range(max_iter):
        F = leaf(a) + leaf(b) - 2.0 * x
        if np.linalg.norm(F) <= tol:
            return float(np.mod(a, 1.0)), float(np.mod(b, 1.0))
        Jac = np.column_stack([leaf.derivative(a), leaf.derivative(b)])
        det = np.linalg.det(Jac)
        if abs(det) < 1e-300:
            return None
        step = np.linalg.solve(Jac, -F)
        # keep steps within a fraction of the parameter range
        mx = np.max(np.abs(step))
        if mx > 0.05:
            step *= 0.05 / mx
        a += step[0]
        b += step[1]
    F = leaf(a) + leaf(b) - 2.0 * x
    if np.linalg.norm(F) <= 10 * tol:
        return float(np.mod(a, 1.0)), float(np.mod(b, 1.0))
    return None


def _param_dist(a, b):
    d = abs(a - b) % 1.0
    return min(d, 1.0 - d)


def find_chords(leaf, x, tol=1e-10):
    """All chords of ``leaf`` centred on ``x``.

    Scans the point reflection ``2x - leaf`` for crossings of the leaf
    (signed distance to the nearest sample changes sign), then refines each
    bracket by 2-D Newton.  Each unordered tip pair is returned once; a
    point on the leaf yields the zero-length chord.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    x = as_point(x)
    sd, X = leaf.dense()
    Y = 2.0 * x - X
    tree = leaf.tree()
    dist, j = tree.query(Y)
    tang = leaf.derivative(sd[j])
    tang /= np.linalg.norm(tang, axis=1, keepdims=True)
    normal = leaf.orientation * np.stack([tang[:, 1], -tang[:, 0]], axis=1)  # outward for either orientation
    signed = np.einsum("ij,ij->i", Y - X[j], normal)
    spacing = np.linalg.norm(np.roll(X, -1, axis=0) - X, axis=1)
    scale = float(np.max(np.abs(X - X.mean(axis=0))))

    if np.median(dist) < max(1e3 * tol, 1e-9 * scale):
        raise DegenerateCenterError(f"infinitely many chords are centred on {x}")

    chords = []
    found = []

    def add(a, b):
        for fa, fb in found:
            if (_param_dist(a, fa) < 1e-7 and _param_dist(b, fb) < 1e-7) or (
                _param_dist(a, fb) < 1e-7 and _param_dist(b, fa) < 1e-7
            ):
                return
        found.append((a, b))

    # zero-length chord when x is on the leaf
    s_on, d_on = leaf.closest_param(x)
    on_leaf = d_on <= tol * 10 + 1e-12
    if on_leaf:
        found.append((s_on, s_on))

    n = len(sd)
    nxt = np.roll(np.arange(n), -1)
    step = np.linalg.norm(Y[nxt] - Y, axis=1)
    flips = np.nonzero((np.sign(signed) != np.sign(signed[nxt])) & (np.abs(signed) + np.abs(signed[nxt]) <= 3.0 * (step + spacing)))[0]
    for k in flips:
        k2 = nxt[k]
        w = signed[k] / (signed[k] - signed[k2]) if signed[k] != signed[k2] else 0.5
        ds = (sd[k2] - sd[k]) % 1.0
        a0 = sd[k] + w * ds
        ya = 2.0 * x - leaf(a0)
        b0, _ = leaf.closest_param(ya)
        res = refine_chord(leaf, x, a0, b0, tol=min(tol, 1e-12) if tol < 1e-9 else tol * 1e-2)
        if res is None:
            continue
        a, b = res
        if _param_dist(a, b) < 1e-9:
            continue
        if on_leaf and max(_param_dist(a, s_on), _param_dist(b, s_on)) < 1e-4:
            continue  # spline wobble around the zero chord
        if np.linalg.norm(leaf(a) + leaf(b) - 2 * x) > tol:
            continue
        add(a, b)

    for a, b in found:
        if a == b:
            p = leaf(a)
            chords.append(Chord(center=p.copy(), tip_minus=p.copy(), tip_plus=p.copy(), params=(a, a)))
            continue
        sm, sp = _order_tips(leaf, a, b)
        chords.append(make_chord(leaf, sm, sp))
    chords.sort(key=lambda c: c.params)
    return chords


def chord_area(leaf, chord, tol=1e-6):
    """Area enclosed by the leaf arc from ``tip_minus`` to ``tip_plus`` and the chord back."""
    sm, sp = chord.params
    for s, tip in ((sm, chord.tip_minus), (sp, chord.tip_plus)):
        if np.linalg.norm(leaf(s) - tip) > tol:
            raise DomainError(f"chord tip {tip} is not on the leaf at s={s}")
    if sm == sp or np.linalg.norm(chord.xi) == 0.0:
        return 0.0
    return leaf.arc_integral(sm, sp) + 0.5 * float(wedge(chord.tip_plus, chord.tip_minus))


def caustic_indicator(leaf, chord, threshold=CAUSTIC_THRESHOLD, chord_count=0):
    """Skew product of the tip velocities, ``v_plus ^ v_minus``."""
    sm, sp = chord.params
    if sm == sp:
        return CausticReport(0.0, 0.0, True, chord_count)
    vm = leaf.velocity(sm)
    vp = leaf.velocity(sp)
    ind = float(wedge(vp, vm))
    nrm = float(np.linalg.norm(vp) * np.linalg.norm(vm))
    normalized = ind / nrm if nrm > 0 else 0.0
    return CausticReport(ind, normalized, abs(normalized) < threshold, chord_count)


def wigner_caustic_trace(leaf, n_scan=256, dedupe=1e-9):
    """Midpoints of tip pairs with parallel or anti-parallel tangents.

    For each ``s1`` on an ``n_scan`` grid the roots in ``s2`` of
    ``x'(s1) ^ x'(s2)`` are bracketed on a finer grid and refined with
    Brent's method.  The trivial root ``s2 = s1`` (the leaf branch) is
    excluded.  Returns an ``(K, 2)`` array ordered by ``s1``.
    """
    if n_scan < 64:
        raise PreconditionError("n_scan must be at least 64")
    s1_grid = np.arange(n_scan) / n_scan
    fine = np.arange(4 * n_scan) / (4 * n_scan)
    Tf = leaf.derivative(fine)
    out = []
    for s1 in s1_grid:
        T1 = leaf.derivative(s1)
        g = wedge(T1[None, :], Tf)
        g_next = np.roll(g, -1)
        idx = np.nonzero(np.sign(g) != np.sign(g_next))[0]
        for k in idx:
            a = fine[k]
            b = fine[k + 1] if k + 1 < len(fine) else 1.0
            # skip the bracket containing s1 itself
            if (a <= s1 <= b) or _param_dist(a, s1) < 1e-12 or _param_dist(b, s1) < 1e-12:
                continue
            f = lambda u: float(wedge(T1, leaf.derivative(u)))
            fa, fb = f(a), f(b)
            if fa == 0.0:
                s2 = a
            elif fb == 0.0:
                s2 = b
            elif np.sign(fa) == np.sign(fb):
                continue
            else:
                s2 = brentq(f, a, b, xtol=1e-14)
            if np.mod(s2 - s1, 1.0) > 0.5 + 1e-12:
                continue  # each unordered pair once
            out.append(0.5 * (leaf(s1) + leaf(s2)))
    if not out:
        return np.empty((0, 2))
    pts = [out[0]]
    scale = max(1.0, float(np.max(np.abs(leaf.points))))
    for p in out[1:]:
        if min(np.linalg.norm(p - q) for q in pts[-8:] + pts[:1]) > dedupe * scale:
            pts.append(p)
    return np.array(pts)


def chord_count_map(leaf, P, Q, tol=1e-10):
    """Number of chords at each point of a grid; -1 marks degenerate centres."""
    counts = np.zeros(P.shape, dtype=int)
    for idx in np.ndindex(P.shape):
        try:
            counts[idx] = len(find_chords(leaf, (P[idx], Q[idx]), tol=tol))
        except DegenerateCenterError:
            counts[idx] = -1
    return counts
