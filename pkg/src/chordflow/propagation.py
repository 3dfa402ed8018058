"""Propagation of semiclassical Wigner functions.

Three schemes live here:

* Liouville transport of the argument, ``W_t(x) = W_0(x_{-t})``;
* tips-of-the-chord transport: flow both tips of the chord centred on
  ``x0`` and carry phase and amplitude to the new midpoint;
* leaf evolution: flow the whole leaf and rebuild the function from it.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    CAUSTIC_THRESHOLD,
    DEFAULT_TOL,
    TrajectorySegment,
    arc_chord_area,
    as_point,
    center_shoot,
    flow_many,
    quadrilateral_area,
    wedge,
)
from .errors import CausticError
from .leaf import Leaf, caustic_indicator, chord_area, find_chords, make_chord, refine_chord
from .wigner import MASLOV_OFFSET, amplitude_from_velocities, make_branch


@dataclass
class MatchedConfiguration:
    """Quadrilateral of midpoints built from the two tip trajectories.

    ``x0`` is the initial chord centre, ``x_tilde`` the propagated one,
    ``x_prime`` / ``x_triple_prime`` the centres of the backward
    (``x_t^- -> x_0^-``) and forward (``x_0^+ -> x_t^+``) tip arcs.
    """

    t: float
    x0: np.ndarray
    x_tilde: np.ndarray
    x_prime: np.ndarray
    x_triple_prime: np.ndarray
    backward: TrajectorySegment
    forward: TrajectorySegment
    delta4: float
    energies: tuple  # (E_plus, E_minus)

    @property
    def tips0(self):
        return self.backward.end, self.forward.start

    @property
    def tips_t(self):
        return self.backward.start, self.forward.end

    @property
    def minus_monodromy(self):
        """Linearised map ``x_0^- -> x_t^-``."""
        return np.linalg.inv(self.backward.final_monodromy)

    @property
    def plus_monodromy(self):
        return self.forward.final_monodromy


@dataclass
class PropagatedBranch:
    branch0: object
    x_tilde: np.ndarray
    tips_t: tuple
    action_t: float
    amplitude_t: float
    caustic_flags: tuple = (False, False)  # (central, chord)
    crossed_caustic: bool = False
    new_chord_caustic: bool = False
    config: MatchedConfiguration = None

    @property
    def chord_t(self):
        return self.tips_t

    @property
    def flagged(self):
        return self.crossed_caustic or self.new_chord_caustic or not self.branch0.valid

    def value(self, hbar):
        return self.amplitude_t * math.cos(self.action_t / hbar - self.branch0.maslov_offset)


def liouville_value(W0, model, t, x, tol=DEFAULT_TOL):
    """``W0`` evaluated at the backward image of ``x``."""
    x = as_point(x)
    if t == 0:
        return W0(x)
    _, X, _, _ = flow_many(model, x[None, :], -t, tol=tol)
    return W0(X[-1, 0])


def liouville_field(W0, model, t, points, tol=DEFAULT_TOL):
    """Vectorised Liouville transport; ``W0`` must accept an ``(N, 2)`` array."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    if t == 0:
        return W0(points)
    _, X, _, _ = flow_many(model, points, -t, tol=tol)
    return W0(X[-1])


def tips_flow(model, chord0, t, tol=DEFAULT_TOL, n_samples=33):
    """Flow both chord tips for time ``t`` and assemble the matched quadrilateral."""
    xm0 = as_point(chord0.tip_minus)
    xp0 = as_point(chord0.tip_plus)
    t_eval = np.linspace(0.0, float(t), n_samples)
    times, X, M, I = flow_many(model, np.array([xm0, xp0]), t, tol=tol, t_eval=t_eval)
    E = model.energy(np.array([xm0, xp0]))
    seg_minus = TrajectorySegment(times, X[:, 0], M[:, 0], float(E[0]), I[:, 0])
    forward = TrajectorySegment(times, X[:, 1], M[:, 1], float(E[1]), I[:, 1])
    backward = seg_minus.reversed()
    xmt, xpt = X[-1, 0], X[-1, 1]
    x0 = 0.5 * (xm0 + xp0)
    x_tilde = 0.5 * (xmt + xpt)
    x_prime = 0.5 * (xmt + xm0)
    x_triple = 0.5 * (xp0 + xpt)
    d4 = quadrilateral_area(x_tilde, x_prime, x0, x_triple, tol=1e-8 * (1 + np.abs(X).max()))
    return MatchedConfiguration(
        t=float(t),
        x0=x0,
        x_tilde=x_tilde,
        x_prime=x_prime,
        x_triple_prime=x_triple,
        backward=backward,
        forward=forward,
        delta4=d4,
        energies=(float(E[1]), float(E[0])),
    )


def phase_transport(cfg, S0):
    """New chord area ``S0 + A(backward) + A(forward) + Delta4 - (E+ - E-) t``."""
    if np.allclose(cfg.tips0[0], cfg.tips0[1], rtol=0, atol=0):
        return float(S0)
    Ep, Em = cfg.energies
    return float(S0 + arc_chord_area(cfg.backward) + arc_chord_area(cfg.forward) + cfg.delta4 - (Ep - Em) * cfg.t)


def transported_velocities(cfg, leaf0, chord0):
    sm, sp = chord0.params
    vm0 = leaf0.velocity(sm)
    vp0 = leaf0.velocity(sp)
    return cfg.minus_monodromy @ vm0, cfg.plus_monodromy @ vp0, vm0, vp0


def minus_tip_history(cfg):
    """Monodromies ``x_0^- -> x_tau^-`` for increasing ``tau``."""
    return cfg.backward.monodromy[::-1] @ cfg.minus_monodromy


def _tip_wedge_history(cfg, vm0, vp0):
    vp = cfg.forward.monodromy @ vp0
    vm = minus_tip_history(cfg) @ vm0
    return wedge(vp, vm)


def transport_flags(cfg):
    """(central, chord) caustic flags for the tip maps at the final time."""
    central = chord = False
    for M in (cfg.plus_monodromy, cfg.minus_monodromy):
        if abs(np.linalg.det(np.eye(2) + M)) < CAUSTIC_THRESHOLD:
            central = True
        if cfg.t != 0 and abs(np.linalg.det(np.eye(2) - M)) < CAUSTIC_THRESHOLD:
            chord = True
    return central, chord


def central_caustic_crossed(cfg):
    """True when ``det(1 + M)`` of either tip trajectory vanishes or changes sign along the way."""
    eye = np.eye(2)
    for mono in (cfg.forward.monodromy, minus_tip_history(cfg)):
        d = np.linalg.det(eye + mono)
        if np.any(np.abs(d) < CAUSTIC_THRESHOLD) or np.any(np.sign(d) != np.sign(d[0])):
            return True
    return False


def amplitude_transport(cfg, leaf0, chord0, A0, threshold=CAUSTIC_THRESHOLD, strict=True):
    """Carry the amplitude by the ratio of tip-velocity skew products.

    Returns ``(A_t, crossed)`` where ``crossed`` reports a sign change of
    ``v+ ^ v-`` along the way (an inner Wigner caustic was traversed).
    """
    vm_t, vp_t, vm0, vp0 = transported_velocities(cfg, leaf0, chord0)
    w0 = abs(float(wedge(vp0, vm0)))
    wt = abs(float(wedge(vp_t, vm_t)))
    nrm = float(np.linalg.norm(vp_t) * np.linalg.norm(vm_t))
    if nrm == 0 or wt < threshold * nrm:
        if strict:
            raise CausticError(f"propagated chord at {cfg.x_tilde} lies on a Wigner caustic")
        return math.inf, True
    hist = _tip_wedge_history(cfg, vm0, vp0)
    crossed = bool(np.any(np.sign(hist) != np.sign(hist[0])))
    return float(A0 * math.sqrt(w0 / wt)), crossed


def propagate_chord(leaf0, hbar, chord0, model, t, branch0=None, tol=DEFAULT_TOL):
    if branch0 is None:
        branch0 = make_branch(leaf0, chord0, hbar)
    cfg = tips_flow(model, chord0, t, tol=tol)
    S_t = phase_transport(cfg, branch0.action * leaf0.orientation) * leaf0.orientation
    flags = transport_flags(cfg)
    if chord0.params[0] == chord0.params[1] or not branch0.valid:
        return PropagatedBranch(branch0, cfg.x_tilde, cfg.tips_t, S_t, branch0.amplitude, flags, False, True, cfg)
    A_t, crossed = amplitude_transport(cfg, leaf0, chord0, branch0.amplitude, strict=False)
    return PropagatedBranch(
        branch0=branch0,
        x_tilde=cfg.x_tilde,
        tips_t=cfg.tips_t,
        action_t=S_t,
        amplitude_t=A_t,
        caustic_flags=flags,
        crossed_caustic=crossed,
        new_chord_caustic=not math.isfinite(A_t),
        config=cfg,
    )


def propagate_point(leaf0, hbar, x0, model, t, tol=DEFAULT_TOL, chord_tol=1e-10):
    """Tips-of-the-chord propagation of every branch centred on ``x0``."""
    chords = find_chords(leaf0, x0, tol=chord_tol)
    out = []
    for ch in chords:
        b0 = make_branch(leaf0, ch, hbar, chord_count=len(chords))
        out.append(propagate_chord(leaf0, hbar, ch, model, t, branch0=b0, tol=tol))
    return out


# --------------------------------------------------------------------------
# Leaf evolution


def leaf_evolution_engine(leaf0, model, t, tol=DEFAULT_TOL, err_tol=1e-10, max_points=60000, max_rounds=12):
    """Flow every leaf sample for time ``t`` and resample where the spline is inaccurate.

    New labels are inserted at interval midpoints, evaluated on the initial
    leaf (exactly, if it has a ``source``), flowed, and kept wherever the
    spline through the current evolved samples mispredicts them by more
    than ``err_tol``.
    """
    src = leaf0.source if leaf0.source is not None else leaf0
    s = leaf0.s.copy()
    if t == 0:
        return Leaf(s, src(s), omega=leaf0.omega, quantum_number=leaf0.quantum_number, hbar=leaf0.hbar, source=leaf0.source)

    def flowed(labels):
        _, X, _, _ = flow_many(model, src(labels), t, tol=tol)
        return X[-1]

    pts = flowed(s)
    active = np.ones(len(s), dtype=bool)  # interval k = [s_k, s_{k+1}]
    for _ in range(max_rounds):
        if not active.any() or len(s) >= max_points:
            break
        cur = Leaf(s, pts)
        s_next = np.append(s[1:], s[0] + 1.0)
        mids = 0.5 * (s + s_next)[active]
        mid_pts = flowed(np.mod(mids, 1.0))
        err = np.linalg.norm(cur(np.mod(mids, 1.0)) - mid_pts, axis=1)
        keep = err > err_tol
        if not keep.any():
            break
        budget = max_points - len(s)
        if keep.sum() > budget:
            order = np.argsort(-err)
            sel = np.zeros_like(keep)
            sel[order[:budget]] = True
            keep &= sel
        new_s = np.mod(mids[keep], 1.0)
        s_all = np.concatenate([s, new_s])
        p_all = np.vstack([pts, mid_pts[keep]])
        order = np.argsort(s_all)
        s, pts = s_all[order], p_all[order]
        is_new = np.zeros(len(s_all), dtype=bool)
        is_new[len(s) - len(new_s):] = True
        is_new = is_new[order]
        # an interval needs another look if either endpoint was just inserted
        active = is_new | np.roll(is_new, -1)
    return Leaf(s, pts, omega=leaf0.omega, quantum_number=leaf0.quantum_number, hbar=leaf0.hbar)


def match_chord(leaf_t, prop, tol=1e-10):
    """Chord of an evolved leaf that carries the same tip labels as ``prop``."""
    sm, sp = prop.branch0.chord.params
    res = refine_chord(leaf_t, prop.x_tilde, sm, sp, tol=tol)
    if res is None:
        raise CausticError("could not follow the propagated chord on the evolved leaf")
    return make_chord(leaf_t, *res)


def reconstructed_action(leaf_t, prop, tol=1e-10):
    """Chord area on the evolved leaf for the chord matching a propagated branch."""
    ch = match_chord(leaf_t, prop, tol=tol)
    return leaf_t.orientation * chord_area(leaf_t, ch)


# --------------------------------------------------------------------------
# Stationary phase


def stationary_residual(cfg, leaf0, model, h=1e-4, tol=DEFAULT_TOL, perturb=None):
    """Max-norm of the constrained gradient blocks of the evolution phase.

    With ``x`` held fixed the midpoints obey ``x''' = x - x' + x''``; each
    block differentiates with respect to one of ``x', x'', x'''`` while one
    other midpoint absorbs the constraint.  ``perturb`` (a 2-vector) moves
    ``x'''`` off the matched position (compensated in ``x'``) before
    differentiating.
    """
    if cfg.t == 0:
        return 0.0
    t = cfg.t
    x = cfg.x_tilde.copy()
    x1 = cfg.x_prime.copy()
    x2 = cfg.x0.copy()
    x3 = cfg.x_triple_prime.copy()
    if perturb is not None:
        d = as_point(perturb)
        x3 = x3 + d
        x1 = x1 - d
    g_minus = cfg.backward.start.copy()  # backward arc starts at x_t^-
    g_plus = cfg.forward.start.copy()
    s_guess = cfg.backward.end, cfg.forward.start

    sm0 = leaf0.closest_param(cfg.tips0[0])[0]
    sp0 = leaf0.closest_param(cfg.tips0[1])[0]
    orient = leaf0.orientation

    def S_minus(y):
        seg = center_shoot(model, y, -t, guess=g_minus, flow_tol=tol)
        return arc_chord_area(seg) + seg.energy * t

    def S_plus(y):
        seg = center_shoot(model, y, t, guess=g_plus, flow_tol=tol)
        return arc_chord_area(seg) - seg.energy * t

    def S_leaf(y):
        res = refine_chord(leaf0, y, sm0, sp0)
        if res is None:
            raise CausticError("lost the initial chord while differentiating")
        return orient * chord_area(leaf0, make_chord(leaf0, *res))

    def phi(a1, a2, a3):
        return S_minus(a1) + S_leaf(a2) + S_plus(a3) + 2.0 * (wedge(x, a1) + wedge(a2, a3))

    e = np.eye(2)
    blocks = []
    for which in range(3):
        g = np.zeros(2)
        for i in range(2):
            vals = []
            for sgn in (1, -1):
                d = sgn * h * e[i]
                if which == 0:
                    a1, a2 = x1 + d, x2
                    a3 = x - a1 + a2
                elif which == 1:
                    a1, a2 = x1, x2 + d
                    a3 = x - a1 + a2
                else:
                    a2, a3 = x2, x3 + d
                    a1 = x + a2 - a3
                vals.append(phi(a1, a2, a3))
            g[i] = (vals[0] - vals[1]) / (2 * h)
        blocks.append(g)
    return float(max(np.max(np.abs(b)) for b in blocks))
