"""Phase-space primitives and Hamiltonian trajectories in one degree of freedom.

Points are numpy arrays ``[p, q]``.  The symplectic conventions are fixed
module-wide:

* ``wedge(x, y) = p_x q_y - q_x p_y``
* ``J = [[0, -1], [1, 0]]`` acting on ``(p, q)``, so ``dx/dt = J grad H``
  reproduces Hamilton's equations ``dp/dt = -H_q``, ``dq/dt = H_p``.

With these conventions a counter-clockwise loop in the (p, q) plane has
positive area ``(1/2) oint (p dq - q dp)`` and the harmonic flow runs
counter-clockwise.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .errors import CausticError, DomainError, IntegrationError, PreconditionError, RootFindError

J = np.array([[0.0, -1.0], [1.0, 0.0]])
CAUSTIC_THRESHOLD = 1e-8
DEFAULT_TOL = 1e-12


def as_point(x):
    """Return ``x`` as a finite float array of shape (2,)."""
    arr = np.asarray(x, dtype=float).reshape(2)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"phase-space point must be finite, got {arr}")
    return arr


def phase_point(p, q):
    return as_point((p, q))


def wedge(x, y):
    """Symplectic product ``p_x q_y - q_x p_y`` (broadcasts over leading axes)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return x[..., 0] * y[..., 1] - x[..., 1] * y[..., 0]


@dataclass(frozen=True)
class SymplecticForm:
    J: np.ndarray = field(default_factory=lambda: J.copy())
    convention: str = "wedge(x,y)=p_x*q_y-q_x*p_y; xdot=J@gradH"

    def wedge(self, x, y):
        return wedge(x, y)

    def is_symplectic(self, M, atol=1e-8):
        M = np.asarray(M, dtype=float)
        return bool(np.allclose(M.T @ self.J @ M, self.J, atol=atol))


def symplectic_defect(M):
    """Max-abs entry of ``M^T J M - J``; works on stacks of matrices."""
    M = np.asarray(M, dtype=float)
    MtJM = np.swapaxes(M, -1, -2) @ J @ M
    return float(np.max(np.abs(MtJM - J)))


# --------------------------------------------------------------------------
# Hamiltonian models.  Every callable takes arrays p, q of equal shape.


@dataclass(frozen=True)
class HamiltonianModel:
    """Autonomous one-degree-of-freedom Hamiltonian with analytic derivatives.

    ``grad(p, q)`` returns ``(H_p, H_q)``, ``hess(p, q)`` returns
    ``((H_pp, H_pq), (H_qp, H_qq))`` and ``third(p, q)`` returns the four
    distinct third derivatives ``(H_ppp, H_ppq, H_pqq, H_qqq)``.
    """

    name: str
    H: Callable
    grad: Callable
    hess: Callable
    third: Callable
    quadratic: bool = False

    def energy(self, x):
        x = np.asarray(x, dtype=float)
        return self.H(x[..., 0], x[..., 1])

    def velocity(self, x):
        """Hamiltonian vector field ``J grad H`` at one or many points."""
        x = np.asarray(x, dtype=float)
        p, q = x[..., 0], x[..., 1]
        hp, hq = self.grad(p, q)
        return np.stack([-np.broadcast_to(hq, p.shape), np.broadcast_to(hp, p.shape)], axis=-1).astype(float)

    def hessian(self, x):
        x = as_point(x)
        h = self.hess(x[0], x[1])
        return np.array([[h[0][0], h[0][1]], [h[1][0], h[1][1]]], dtype=float)


def _harmonic():
    return HamiltonianModel(
        name="harmonic",
        H=lambda p, q: 0.5 * (p * p + q * q),
        grad=lambda p, q: (p, q),
        hess=lambda p, q: ((1.0 + 0 * p, 0.0 * p), (0.0 * p, 1.0 + 0 * p)),
        third=lambda p, q: (0 * p, 0 * p, 0 * p, 0 * p),
        quadratic=True,
    )


def _quartic():
    # H = (p^2 + q^2)^2 / 4
    def H(p, q):
        r2 = p * p + q * q
        return 0.25 * r2 * r2

    def grad(p, q):
        r2 = p * p + q * q
        return (r2 * p, r2 * q)

    def hess(p, q):
        return ((3 * p * p + q * q, 2 * p * q), (2 * p * q, p * p + 3 * q * q))

    def third(p, q):
        return (6 * p, 2 * q, 2 * p, 6 * q)

    return HamiltonianModel("quartic", H, grad, hess, third, quadratic=False)


def _shear():
    return HamiltonianModel(
        name="shear",
        H=lambda p, q: 0.5 * p * p + 0 * q,
        grad=lambda p, q: (p + 0 * q, 0.0 * p),
        hess=lambda p, q: ((1.0 + 0 * p, 0.0 * p), (0.0 * p, 0.0 * p)),
        third=lambda p, q: (0 * p, 0 * p, 0 * p, 0 * p),
        quadratic=True,
    )


MODELS = {"harmonic": _harmonic(), "quartic": _quartic(), "shear": _shear()}


def get_model(name):
    try:
        return MODELS[name]
    except KeyError:
        raise DomainError(f"unknown model {name!r}; choose from {sorted(MODELS)}") from None


# --------------------------------------------------------------------------
# Trajectories


@dataclass
class TrajectorySegment:
    """Time-sampled trajectory with its monodromy and running action.

    ``actions[k]`` is ``(1/2) int_0^{t_k} x ^ dx`` along the path, so the
    closed arc-plus-chord area is ``actions[-1] + wedge(end, start) / 2``.
    """

    times: np.ndarray
    points: np.ndarray
    monodromy: np.ndarray
    energy: float
    actions: np.ndarray = None

    @property
    def t0(self):
        return float(self.times[0])

    @property
    def t1(self):
        return float(self.times[-1])

    @property
    def duration(self):
        return self.t1 - self.t0

    @property
    def start(self):
        return self.points[0]

    @property
    def end(self):
        return self.points[-1]

    @property
    def final_monodromy(self):
        return self.monodromy[-1]

    @property
    def samples(self):
        return list(zip(self.times, self.points))

    @property
    def center(self):
        return 0.5 * (self.points[0] + self.points[-1])

    @property
    def chord(self):
        return self.points[-1] - self.points[0]

    def reversed(self):
        """Same path traversed backwards; monodromies are taken relative to the new start."""
        Mend_inv = np.linalg.inv(self.monodromy[-1])
        mono = self.monodromy[::-1] @ Mend_inv
        acts = None
        if self.actions is not None:
            acts = self.actions[::-1] - self.actions[-1]
        return TrajectorySegment(
            times=self.times[::-1].copy(),
            points=self.points[::-1].copy(),
            monodromy=mono,
            energy=self.energy,
            actions=acts,
        )

    @classmethod
    def from_samples(cls, times, points, energy=float("nan")):
        times = np.asarray(times, dtype=float)
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        mono = np.broadcast_to(np.eye(2), (len(times), 2, 2)).copy()
        return cls(times=times, points=points, monodromy=mono, energy=energy, actions=None)


def _rhs(model, n):
    def f(t, y):
        p = y[0:n]
        q = y[n : 2 * n]
        m11, m12, m21, m22 = y[2 * n : 3 * n], y[3 * n : 4 * n], y[4 * n : 5 * n], y[5 * n : 6 * n]
        hp, hq = model.grad(p, q)
        (hpp, hpq), (_, hqq) = model.hess(p, q)
        # J @ Hess = [[-H_qp, -H_qq], [H_pp, H_pq]]
        a11, a12, a21, a22 = -hpq, -hqq, hpp, hpq
        out = np.empty_like(y)
        out[0:n] = -hq
        out[n : 2 * n] = hp
        out[2 * n : 3 * n] = a11 * m11 + a12 * m21
        out[3 * n : 4 * n] = a11 * m12 + a12 * m22
        out[4 * n : 5 * n] = a21 * m11 + a22 * m21
        out[5 * n : 6 * n] = a21 * m12 + a22 * m22
        out[6 * n : 7 * n] = 0.5 * (p * hp + q * hq)
        return out

    return f


def flow_many(model, X0, t, tol=DEFAULT_TOL, t_eval=None):
    """Integrate many initial conditions jointly with their variational equations.

    Returns ``(times, X, M, I)`` with shapes ``(K,)``, ``(K, N, 2)``,
    ``(K, N, 2, 2)`` and ``(K, N)``, where ``I`` is the running
    ``(1/2) int x ^ dx``.  Without ``t_eval`` only the endpoints are kept.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    X0 = np.asarray(X0, dtype=float).reshape(-1, 2)
    if not np.all(np.isfinite(X0)):
        raise DomainError("initial conditions must be finite")
    n = len(X0)
    t = float(t)
    times = np.array([0.0, t]) if t_eval is None else np.asarray(t_eval, dtype=float)
    y0 = np.concatenate([X0[:, 0], X0[:, 1], np.ones(n), np.zeros(n), np.zeros(n), np.ones(n), np.zeros(n)])
    if t == 0.0:
        Y = np.repeat(y0[None, :], len(times), axis=0)
    else:
        sol = solve_ivp(_rhs(model, n), (0.0, t), y0, method="DOP853", rtol=tol, atol=tol, t_eval=times)
        if sol.status != 0:
            reached = float(sol.t[-1]) if len(sol.t) else 0.0
            raise IntegrationError(f"{model.name} flow failed: {sol.message}", reached)
        Y = sol.y.T
    K = len(times)
    X = np.stack([Y[:, 0:n], Y[:, n : 2 * n]], axis=-1)
    M = np.empty((K, n, 2, 2))
    M[..., 0, 0] = Y[:, 2 * n : 3 * n]
    M[..., 0, 1] = Y[:, 3 * n : 4 * n]
    M[..., 1, 0] = Y[:, 4 * n : 5 * n]
    M[..., 1, 1] = Y[:, 5 * n : 6 * n]
    I = Y[:, 6 * n : 7 * n]
    return times, X, M, I


def flow(model, x0, t, tol=DEFAULT_TOL, n_samples=33):
    """Flow one point for time ``t`` (either sign), returning a sampled segment."""
    x0 = as_point(x0)
    t_eval = np.linspace(0.0, float(t), max(int(n_samples), 2))
    times, X, M, I = flow_many(model, x0[None, :], t, tol=tol, t_eval=t_eval)
    return TrajectorySegment(
        times=times,
        points=X[:, 0, :],
        monodromy=M[:, 0],
        energy=float(model.energy(x0)),
        actions=I[:, 0],
    )


def arc_chord_area(seg):
    """Signed area of the trajectory arc closed by the straight chord back to its start."""
    if len(seg.times) < 2:
        raise PreconditionError("segment needs at least two samples")
    if seg.duration == 0.0 or np.allclose(seg.points, seg.points[0], atol=0.0, rtol=0.0):
        return 0.0
    if seg.actions is not None:
        return float(seg.actions[-1] + 0.5 * wedge(seg.end, seg.start))
    # Polygon through the samples; converges as O(h^2) in the sample spacing.
    P = seg.points
    return float(0.5 * np.sum(wedge(P, np.roll(P, -1, axis=0))))


def central_action(seg):
    """Phase of the semiclassical Weyl propagator: chord area minus ``E t``."""
    return arc_chord_area(seg) - seg.energy * seg.duration


def center_shoot(model, y, t, guess=None, tol=1e-11, flow_tol=DEFAULT_TOL, max_iter=50, n_samples=33):
    """Trajectory of duration ``t`` whose chord midpoint is ``y``.

    Newton iteration on the initial condition; the Jacobian of the midpoint
    map is ``(1 + M) / 2``.  Steps are halved while the residual grows.
    """
    y = as_point(y)
    if t == 0.0:
        return TrajectorySegment(
            times=np.zeros(2),
            points=np.array([y, y]),
            monodromy=np.array([np.eye(2), np.eye(2)]),
            energy=float(model.energy(y)),
            actions=np.zeros(2),
        )
    x = y.copy() if guess is None else as_point(guess)

    def residual(x0):
        _, X, M, _ = flow_many(model, x0[None, :], t, tol=flow_tol)
        return 0.5 * (x0 + X[-1, 0]) - y, M[-1, 0]

    F, M = residual(x)
    for _ in range(max_iter):
        if np.linalg.norm(F) <= tol:
            return flow(model, x, t, tol=flow_tol, n_samples=n_samples)
        Jac = 0.5 * (np.eye(2) + M)
        if abs(np.linalg.det(np.eye(2) + M)) < CAUSTIC_THRESHOLD:
            raise CausticError(f"center map is singular (det(1+M)~0) at x0={x}")
        step = np.linalg.solve(Jac, -F)
        lam = 1.0
        fnorm = np.linalg.norm(F)
        for _ in range(30):
            x_try = x + lam * step
            F_try, M_try = residual(x_try)
            if np.linalg.norm(F_try) < fnorm:
                break
            lam *= 0.5
        x, F, M = x_try, F_try, M_try
    if np.linalg.norm(F) <= tol:
        return flow(model, x, t, tol=flow_tol, n_samples=n_samples)
    raise RootFindError(f"center_shoot did not converge: residual {np.linalg.norm(F):.3e} at y={y}, t={t}")


def chord_shoot(model, xi, t, guess, tol=1e-11, flow_tol=DEFAULT_TOL, max_iter=50):
    """Trajectory of duration ``t`` whose chord ``x(t) - x(0)`` equals ``xi``."""
    xi = as_point(xi)
    x = as_point(guess)

    def residual(x0):
        _, X, M, _ = flow_many(model, x0[None, :], t, tol=flow_tol)
        return X[-1, 0] - x0 - xi, M[-1, 0]

    F, M = residual(x)
    for _ in range(max_iter):
        if np.linalg.norm(F) <= tol:
            return flow(model, x, t, tol=flow_tol)
        if abs(np.linalg.det(M - np.eye(2))) < CAUSTIC_THRESHOLD:
            raise CausticError(f"chord map is singular (det(1-M)~0) at x0={x}")
        step = np.linalg.solve(M - np.eye(2), -F)
        lam = 1.0
        fnorm = np.linalg.norm(F)
        for _ in range(30):
            F_try, M_try = residual(x + lam * step)
            if np.linalg.norm(F_try) < fnorm:
                break
            lam *= 0.5
        x = x + lam * step
        F, M = F_try, M_try
    if np.linalg.norm(F) <= tol:
        return flow(model, x, t, tol=flow_tol)
    raise RootFindError(f"chord_shoot did not converge: residual {np.linalg.norm(F):.3e}")


def chord_action(seg):
    """Legendre transform of the central action: ``xi ^ y - S(y)``."""
    return float(wedge(seg.chord, seg.center) - central_action(seg))


# --------------------------------------------------------------------------
# Cayley parametrisations of the linearised map
#
# For actions normalised as areas, the chord of the trajectory centred on y is
# xi = -J dS/dy.  Linearising gives M = (1 - J B)(1 + J B)^{-1} with B equal to
# half the Hessian of the central action, and M = -(1 + J C)(1 - J C)^{-1}
# with C equal to twice the Hessian of the chord action.


def cayley_from_central(hess):
    B = 0.5 * np.asarray(hess, dtype=float)
    I2 = np.eye(2)
    right = I2 + J @ B
    if abs(np.linalg.det(right)) < CAUSTIC_THRESHOLD:
        raise CausticError("central-action caustic: 1 + J*hess is singular")
    return (I2 - J @ B) @ np.linalg.inv(right)


def cayley_from_chord(hess):
    C = 2.0 * np.asarray(hess, dtype=float)
    I2 = np.eye(2)
    right = I2 - J @ C
    if abs(np.linalg.det(right)) < CAUSTIC_THRESHOLD:
        raise CausticError("chord-action caustic: 1 - J*hess is singular")
    return -(I2 + J @ C) @ np.linalg.inv(right)


def quadrilateral_area(x, x1, x2, x3, tol=1e-9):
    """Area of the quadrilateral whose side midpoints are ``x, x1, x2, x3`` (in order).

    The four midpoints of any quadrilateral form a parallelogram, which is
    enforced here as ``x - x1 + x2 - x3 = 0``.
    """
    x, x1, x2, x3 = (as_point(v) for v in (x, x1, x2, x3))
    res = float(np.linalg.norm(x - x1 + x2 - x3))
    if res > tol:
        raise PreconditionError(f"midpoints do not form a parallelogram (residual {res:.3e})", residual=res)
    return float(2.0 * (wedge(x, x1) + wedge(x2, x3)))


def finite_difference_hessian(f, y, h=3e-4):
    """Central-difference Hessian of a scalar function of a phase-space point."""
    y = as_point(y)
    H = np.empty((2, 2))
    f0 = f(y)
    e = np.eye(2)
    for i in range(2):
        H[i, i] = (f(y + h * e[i]) - 2 * f0 + f(y - h * e[i])) / h**2
    H[0, 1] = H[1, 0] = (
        f(y + h * (e[0] + e[1])) - f(y + h * (e[0] - e[1])) - f(y - h * (e[0] - e[1])) + f(y - h * (e[0] + e[1]))
    ) / (4 * h**2)
    return H
