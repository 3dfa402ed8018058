"""Closed forms for the quartic oscillator ``h = (p^2 + q^2)^2 / 4``.

Motion is a rigid rotation on each circle, ``theta_t = theta_0 + r^2 t``,
so chord tips, their midpoint and the phase gained by a chord all have
elementary expressions.  These serve as the analytic benchmark for the
numerical propagation pipeline.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCenterError, DomainError
from .leaf import Leaf, chord_area, make_chord, refine_chord


@dataclass(frozen=True)
class QuarticChordSpec:
    """Chord with tips ``(r_minus, alpha)`` and ``(r_plus, -beta)`` in polar form, flowed for ``t``."""

    r_minus: float
    r_plus: float
    alpha: float
    beta: float
    t: float

    def __post_init__(self):
        if not (self.r_minus > 0 and self.r_plus > 0):
            raise DomainError("chord tip radii must be positive")

    @property
    def tip_minus(self):
        return polar_point(self.r_minus, self.alpha)

    @property
    def tip_plus(self):
        return polar_point(self.r_plus, -self.beta)

    @property
    def center(self):
        return 0.5 * (self.tip_minus + self.tip_plus)

    @property
    def angle_gap(self):
        """``(r+^2 - r-^2) t - (alpha + beta)``: angle from the evolved minus tip to the plus tip."""
        return (self.r_plus**2 - self.r_minus**2) * self.t - (self.alpha + self.beta)


def polar_point(r, theta):
    return np.array([r * math.cos(theta), r * math.sin(theta)])


def to_polar(x):
    x = np.asarray(x, dtype=float)
    return float(math.hypot(x[0], x[1])), float(math.atan2(x[1], x[0]))


def wrap_angle(a):
    """Reduce to (-pi, pi]."""
    a = math.remainder(a, 2.0 * math.pi)
    return math.pi if a == -math.pi else a


def quartic_flow(r0, theta0, t):
    if r0 < 0:
        raise DomainError("radius must be non-negative")
    return r0, theta0 + r0 * r0 * t


def quartic_flow_points(X, t):
    """Exact quartic flow applied to an ``(..., 2)`` array of points."""
    X = np.asarray(X, dtype=float)
    r2 = X[..., 0] ** 2 + X[..., 1] ** 2
    c, s = np.cos(r2 * t), np.sin(r2 * t)
    return np.stack([c * X[..., 0] - s * X[..., 1], s * X[..., 0] + c * X[..., 1]], axis=-1)


def quartic_new_center(spec):
    """Polar coordinates ``(r_tilde, theta_tilde)`` of the evolved chord's midpoint."""
    rm, rp = spec.r_minus, spec.r_plus
    g = spec.angle_gap
    r2 = 0.25 * (rm * rm + rp * rp) + 0.5 * rm * rp * math.cos(g)
    if r2 <= 1e-28:
        raise DegenerateCenterError("evolved chord passes through the origin: its centre is degenerate")
    r = math.sqrt(max(r2, 0.0))
    # 2 r cos(alpha') = r- + r+ cos(g); the sine branch follows the transverse offset
    a_prime = math.atan2(rp * math.sin(g), rm + rp * math.cos(g))
    return r, wrap_angle(rm * rm * spec.t + spec.alpha + a_prime)


def quartic_delta_S(spec):
    """Phase gained by the chord, as the closed form is usually quoted.

    ``t (r+^4 - r-^4) / 4 + r+ r- sin(D/2) cos(D/2 - (alpha + beta))``
    with ``D = t (r+^2 - r-^2)``.  See :func:`quartic_delta_S_corrected`
    for the form that agrees with direct geometry.
    """
    rm, rp, t = spec.r_minus, spec.r_plus, spec.t
    d = t * (rp * rp - rm * rm)
    return t * (rp**4 - rm**4) / 4.0 + rp * rm * math.sin(d / 2) * math.cos(d / 2 - (spec.alpha + spec.beta))


def quartic_delta_S_corrected(spec):
    """Geometrically exact phase gain; the trigonometric term enters with a minus sign."""
    rm, rp, t = spec.r_minus, spec.r_plus, spec.t
    d = t * (rp * rp - rm * rm)
    return t * (rp**4 - rm**4) / 4.0 - rp * rm * math.sin(d / 2) * math.cos(d / 2 - (spec.alpha + spec.beta))


def quartic_central_action(r, t, sign=1):
    """Central action of the arc of radius ``r`` over time ``sign * t`` and its centre's squared norm."""
    if not r > 0:
        raise DomainError("radius must be positive")
    if sign not in (1, -1):
        raise DomainError("sign must be +1 or -1")
    w = r * r * t
    return sign * r * r * (w - 2.0 * math.sin(w)) / 4.0, r * r * math.cos(w / 2.0) ** 2


def random_specs(n, rng, r_range=(0.3, 2.0), angle=1.0, t_max=1.0):
    """Uniformly drawn specs; ``rng`` is a ``numpy.random.Generator``."""
    rm = rng.uniform(*r_range, n)
    rp = rng.uniform(*r_range, n)
    a = rng.uniform(-angle, angle, n)
    b = rng.uniform(-angle, angle, n)
    t = rng.uniform(-t_max, t_max, n)
    return [QuarticChordSpec(*map(float, v)) for v in zip(rm, rp, a, b, t)]


# --------------------------------------------------------------------------
# Scaling of the Liouville error


def circle_through(a, b, offset, n_samples=512):
    """Counter-clockwise circle through ``a`` and ``b`` whose centre sits ``offset`` off the chord midpoint.

    Labels ``s`` run from 0 to 1 with the exact circle as ``source``.
    """
    a, b = np.asarray(a, float), np.asarray(b, float)
    mid = 0.5 * (a + b)
    d = b - a
    n = np.array([-d[1], d[0]]) / np.linalg.norm(d)
    c = mid + offset * n
    R = float(np.linalg.norm(a - c))

    def source(s):
        th = 2.0 * math.pi * np.asarray(s, float)
        return np.stack([c[0] + R * np.cos(th), c[1] + R * np.sin(th)], axis=-1)

    s = np.arange(n_samples) / n_samples
    leaf = Leaf(s, source(s), omega=1.0, source=source)
    sa = math.atan2(a[1] - c[1], a[0] - c[0]) / (2 * math.pi) % 1.0
    sb = math.atan2(b[1] - c[1], b[0] - c[0]) / (2 * math.pi) % 1.0
    return leaf, sa, sb


def evolved_quartic_leaf(leaf0, t, n_samples=None):
    """Leaf pushed forward by the exact quartic flow, densely resampled from its source."""
    src0 = leaf0.source if leaf0.source is not None else leaf0
    n = n_samples or len(leaf0)

    def source(s):
        return quartic_flow_points(src0(s), t)

    s = np.arange(n) / n
    return Leaf(s, source(s), omega=leaf0.omega, source=source)


def liouville_phase_error(spec, offset=None, n_samples=2048):
    """``S_t(x_t) - S_0(x_0)`` for one chord, measured on a circle leaf through its tips.

    ``x_0`` is the chord centre and ``x_t`` its image under the flow, where
    Liouville transport would put the initial value.
    """
    a, b = spec.tip_minus, spec.tip_plus
    if offset is None:
        offset = 0.5 * float(np.linalg.norm(b - a))
    leaf0, sa, sb = circle_through(a, b, offset, n_samples=n_samples)
    ch0 = refine_chord(leaf0, spec.center, sa, sb)
    if ch0 is None:
        raise DomainError("initial chord not found on the probe leaf")
    ch0 = make_chord(leaf0, *ch0)
    S0 = leaf0.orientation * chord_area(leaf0, ch0)
    leaf_t = evolved_quartic_leaf(leaf0, spec.t, n_samples=n_samples)
    xt = quartic_flow_points(spec.center, spec.t)
    res = refine_chord(leaf_t, xt, *ch0.params)
    if res is None:
        raise DomainError("evolved chord not found on the probe leaf")
    ch_t = make_chord(leaf_t, *res)
    St = leaf_t.orientation * chord_area(leaf_t, ch_t)
    return St - S0


def scaling_probe(specs, offset=None, n_samples=2048):
    """Log-log slope of ``|S_t(x_t) - S_0(x_0)|`` against ``r+ - r-``.

    Returns ``(exponent, asymmetries, discrepancies)``.
    """
    if len(specs) < 3:
        raise DomainError("need at least three specs to fit an exponent")
    d = np.array([abs(s.r_plus - s.r_minus) for s in specs])
    D = np.array([abs(liouville_phase_error(s, offset=offset, n_samples=n_samples)) for s in specs])
    if np.any(d <= 0) or np.any(D <= 0):
        raise DomainError("scaling fit needs strictly asymmetric chords with non-zero discrepancy")
    slope = np.polyfit(np.log(d), np.log(D), 1)[0]
    return float(slope), d, D


def radial_specs(asymmetries, mean_radius=1.0, angle=0.3, t=0.05):
    """Radial chords (both tips on the ray at ``angle``) with fixed ``r+ + r-``."""
    out = []
    for d in asymmetries:
        out.append(QuarticChordSpec(mean_radius - d / 2, mean_radius + d / 2, angle, -angle, t))
    return out
