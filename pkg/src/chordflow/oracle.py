"""Exact quantum reference data on a position grid.

Wavefunctions live on a uniform ``q`` grid; the oscillator eigenbasis of
``(p^2 + q^2) / 2`` gives exact propagation for the harmonic and quartic
models, and an FFT gives it for the free (shear) model.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.special import eval_laguerre

from .errors import DomainError, TruncationError

TAIL_TOL = 1e-10


@dataclass
class GridWavefunction:
    q_min: float
    q_max: float
    n: int
    values: np.ndarray
    hbar: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.n,):
            raise DomainError(f"expected {self.n} samples, got {self.values.shape}")
        if not self.hbar > 0:
            raise DomainError("hbar must be positive")

    @classmethod
    def from_function(cls, f, q_min, q_max, n, hbar, normalize=True):
        q = np.linspace(q_min, q_max, n)
        psi = cls(q_min, q_max, n, f(q), hbar)
        return psi.normalized() if normalize else psi

    @property
    def q(self):
        return np.linspace(self.q_min, self.q_max, self.n)

    @property
    def dq(self):
        return (self.q_max - self.q_min) / (self.n - 1)

    @property
    def norm(self):
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.dq))

    def normalized(self):
        nrm = self.norm
        if nrm == 0:
            raise DomainError("cannot normalise the zero wavefunction")
        return GridWavefunction(self.q_min, self.q_max, self.n, self.values / nrm, self.hbar)

    def density(self):
        return np.abs(self.values) ** 2

    def momentum_density(self, p):
        """``|phi(p)|^2`` by direct quadrature of the Fourier integral."""
        p = np.asarray(p, dtype=float)
        ph = np.exp(-1j * np.outer(p, self.q) / self.hbar)
        phi = ph @ self.values * self.dq / math.sqrt(2 * math.pi * self.hbar)
        return np.abs(phi) ** 2


@dataclass
class FockCoefficients:
    coeffs: np.ndarray
    hbar: float

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)

    @property
    def n_max(self):
        return len(self.coeffs) - 1

    @property
    def norm_sq(self):
        return float(np.sum(np.abs(self.coeffs) ** 2))


@dataclass
class WignerGrid:
    """``values[i, j] = W(p[i], q[j])``."""

    p: np.ndarray
    q: np.ndarray
    values: np.ndarray
    hbar: float

    @property
    def dp(self):
        return float(self.p[1] - self.p[0])

    @property
    def dq(self):
        return float(self.q[1] - self.q[0])

    def total(self):
        return float(self.values.sum() * self.dp * self.dq)

    def q_marginal(self):
        return self.values.sum(axis=0) * self.dp

    def p_marginal(self):
        return self.values.sum(axis=1) * self.dq

    def interpolator(self, method="cubic"):
        return RegularGridInterpolator((self.p, self.q), self.values, method=method, bounds_error=False, fill_value=0.0)

    def __call__(self, x, method="cubic"):
        x = np.asarray(x, dtype=float)
        return self.interpolator(method)(x.reshape(-1, 2)).reshape(x.shape[:-1])

    def points(self):
        P, Q = np.meshgrid(self.p, self.q, indexing="ij")
        return np.stack([P, Q], axis=-1)


# --------------------------------------------------------------------------
# Oscillator eigenbasis


def hermite_functions(q, n_max, hbar):
    """Rows ``psi_0 .. psi_{n_max}`` of oscillator eigenfunctions on ``q`` (stable three-term recurrence)."""
    q = np.asarray(q, dtype=float)
    u = q / math.sqrt(hbar)
    out = np.empty((n_max + 1,) + q.shape)
    out[0] = (math.pi * hbar) ** -0.25 * np.exp(-0.5 * u * u)
    if n_max >= 1:
        out[1] = math.sqrt(2.0) * u * out[0]
    for n in range(1, n_max):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * u * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def fock_project(psi, n_max, tail_tol=TAIL_TOL):
    basis = hermite_functions(psi.q, n_max, psi.hbar)
    c = basis @ psi.values * psi.dq
    tail = abs(c[-1]) ** 2
    if tail >= tail_tol:
        raise TruncationError(f"|c_{n_max}|^2 = {tail:.3g} exceeds {tail_tol:g}; raise n_max")
    return FockCoefficients(c, psi.hbar)


def fock_synthesize(c, q_min, q_max, n):
    q = np.linspace(q_min, q_max, n)
    basis = hermite_functions(q, c.n_max, c.hbar)
    return GridWavefunction(q_min, q_max, n, c.coeffs @ basis, c.hbar)


def fock_state(n, n_max, hbar):
    c = np.zeros(n_max + 1, dtype=complex)
    c[n] = 1.0
    return FockCoefficients(c, hbar)


def quartic_exact_evolve(c, t):
    """``h = ((p^2 + q^2) / 2)^2`` has eigenvalues ``hbar^2 (n + 1/2)^2``."""
    n = np.arange(c.n_max + 1)
    return FockCoefficients(c.coeffs * np.exp(-1j * c.hbar * (n + 0.5) ** 2 * t), c.hbar)


def harmonic_exact_evolve(c, t):
    n = np.arange(c.n_max + 1)
    return FockCoefficients(c.coeffs * np.exp(-1j * (n + 0.5) * t), c.hbar)


def free_exact_evolve(psi, t):
    """Exact evolution under ``p^2 / 2`` by FFT; the grid must hold the spreading packet."""
    k = 2 * math.pi * np.fft.fftfreq(psi.n, d=psi.dq)
    p = psi.hbar * k
    phi = np.fft.fft(psi.values)
    vals = np.fft.ifft(phi * np.exp(-1j * p * p * t / (2 * psi.hbar)))
    return GridWavefunction(psi.q_min, psi.q_max, psi.n, vals, psi.hbar)


def exact_evolve(model_name, psi, t, n_max=None):
    """Exact state after time ``t`` for one of the built-in models."""
    if model_name == "shear":
        return free_exact_evolve(psi, t)
    if n_max is None:
        raise DomainError("Fock-space evolution needs n_max")
    c = fock_project(psi, n_max)
    if model_name == "harmonic":
        c = harmonic_exact_evolve(c, t)
    elif model_name == "quartic":
        c = quartic_exact_evolve(c, t)
    else:
        raise DomainError(f"no exact evolution for model {model_name!r}")
    return fock_synthesize(c, psi.q_min, psi.q_max, psi.n)


# --------------------------------------------------------------------------
# States with known Wigner functions


def displaced_fock(n, hbar, center, q):
    """``psi_n`` translated to phase-space point ``center = (p_c, q_c)``."""
    pc, qc = center
    q = np.asarray(q, dtype=float)
    base = hermite_functions(q - qc, n, hbar)[n]
    return np.exp(1j * pc * (q - 0.5 * qc) / hbar) * base


def fock_wigner(n, hbar, x, center=(0.0, 0.0)):
    """Exact Wigner function of a (displaced) Fock state."""
    x = np.asarray(x, dtype=float)
    r2 = (x[..., 0] - center[0]) ** 2 + (x[..., 1] - center[1]) ** 2
    return (-1) ** n / (math.pi * hbar) * np.exp(-r2 / hbar) * eval_laguerre(n, 2 * r2 / hbar)


# --------------------------------------------------------------------------
# Wigner transform


def wigner_transform(psi, q_stride=1, check=True):
    """``W(p, q) = (pi hbar)^-1 int conj(psi(q + y)) psi(q - y) exp(2 i p y / hbar) dy``.

    The lag sum over ``y = k dq`` is done by FFT, which fixes the momentum
    axis to ``p_m = pi hbar m / (N dq)``.  ``q_stride`` thins the output
    columns.
    """
    N, dq, hb = psi.n, psi.dq, psi.hbar
    v = psi.values
    j = np.arange(0, N, q_stride)
    k = np.fft.fftfreq(N, d=1.0 / N).astype(int)
    ip = j[:, None] + k[None, :]
    im = j[:, None] - k[None, :]
    ok = (ip >= 0) & (ip < N) & (im >= 0) & (im < N)
    f = np.where(ok, np.conj(v[np.clip(ip, 0, N - 1)]) * v[np.clip(im, 0, N - 1)], 0.0)
    # sum_k f(k) exp(2 pi i m k / N) = N * ifft
    g = np.fft.ifft(f, axis=1) * N
    W = np.real(np.fft.fftshift(g, axes=1)).T * dq / (math.pi * hb)
    m = np.arange(-(N // 2), N - N // 2)
    p = math.pi * hb * m / (N * dq)
    grid = WignerGrid(p=p, q=psi.q[j], values=W, hbar=hb)
    if check and q_stride == 1:
        # the q marginal holds by construction; the p marginal exposes truncation and aliasing
        ref = psi.momentum_density(p)
        err = float(np.max(np.abs(grid.p_marginal() - ref)))
        if err > 1e-6 * max(1.0, ref.max()):
            warnings.warn(f"Wigner grid marginal mismatch {err:.2e}: grid too coarse or state too wide", RuntimeWarning)
    return grid


def wigner_at(psi_fn, hbar, x, y_max, n_y=2049):
    """Direct quadrature of the Wigner integral at points ``x`` for a callable ``psi_fn(q)``."""
    x = np.asarray(x, dtype=float).reshape(-1, 2)
    y = np.linspace(-y_max, y_max, n_y)
    dy = y[1] - y[0]
    out = np.empty(len(x))
    for i, (p, q) in enumerate(x):
        f = np.conj(psi_fn(q + y)) * psi_fn(q - y) * np.exp(2j * p * y / hbar)
        out[i] = np.real(f.sum()) * dy / (math.pi * hbar)
    return out


# --------------------------------------------------------------------------
# Moyal product


@dataclass
class MoyalLattice:
    """Square lattice on which the Moyal kernel is exactly periodic.

    With odd ``m`` points per side and spacing ``sqrt(pi hbar / m)`` every
    kernel phase is an ``m``-th root of unity, so lattice sums reproduce
    the continuum identities (such as ``1 * B = B``) exactly.
    """

    m: int
    hbar: float

    def __post_init__(self):
        if self.m % 2 == 0 or self.m < 3:
            raise DomainError("lattice side must be odd and at least 3")

    @property
    def spacing(self):
        return math.sqrt(math.pi * self.hbar / self.m)

    @property
    def indices(self):
        h = (self.m - 1) // 2
        return np.arange(-h, h + 1)

    @property
    def axis(self):
        return self.indices * self.spacing

    def points(self):
        P, Q = np.meshgrid(self.axis, self.axis, indexing="ij")
        return np.stack([P, Q], axis=-1)

    def sample(self, f):
        X = self.points()
        return np.asarray(f(X[..., 0], X[..., 1]), dtype=complex)


def moyal_product_numeric(A, B, lattice, max_side=161):
    """Weyl symbol of the operator product ``A B`` by the double phase-space integral.

    ``[A*B](x) = (pi hbar)^-2 int int A(x') B(x'') exp(-i D / hbar) dx' dx''``
    with ``D = 2 (x ^ x' + x' ^ x'' + x'' ^ x)``.  ``A`` and ``B`` are
    ``(m, m)`` arrays of samples on ``lattice`` indexed ``[p, q]``.  The
    ``x'`` integral is a lattice Fourier sum; the ``x''`` integral is done
    per output point, so the cost is ``O(m^4)``.
    """
    m = lattice.m
    if m > max_side:
        raise DomainError(f"lattice side {m} exceeds the cost cap {max_side}")
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    if A.shape != (m, m) or B.shape != (m, m):
        raise DomainError("fields must be sampled on the lattice")
    idx = lattice.indices
    E = np.exp(-2j * math.pi * np.outer(idx, idx) / m)  # E[a, l] = exp(-2 pi i a l / m)
    # A_hat[k, l] = sum_{a,b} A[a,b] exp(-2 i (x' ^ u) / hbar),  u = (k, l) spacing
    A_hat = np.conj(E).T @ A.T @ E
    # periodic index lookup for u = x'' - x
    def wrap(i):
        return (i + (m - 1) // 2) % m

    a2, b2 = np.meshgrid(idx, idx, indexing="ij")
    out = np.empty((m, m), dtype=complex)
    bb = idx[:, None, None]
    for i, a in enumerate(idx):
        # exp(-2 i (x'' ^ x) / hbar) with x'' = (a2, b2), x = (a, b); vectorised over b
        ph = np.exp(-2j * math.pi * (a2[None] * bb - b2[None] * a) / m)
        out[i] = np.sum(B[None] * ph * A_hat[wrap(a2 - a)[None], wrap(b2[None] - bb)], axis=(1, 2))
    return out * lattice.spacing**4 / (math.pi * lattice.hbar) ** 2


def gaussian_star_gaussian(a, b, hbar, x):
    """Closed form of ``exp(-a|x|^2) * exp(-b|x|^2)``."""
    x = np.asarray(x, dtype=float)
    r2 = x[..., 0] ** 2 + x[..., 1] ** 2
    d = 1.0 + a * b * hbar * hbar
    return np.exp(-(a + b) * r2 / d) / d


# --------------------------------------------------------------------------
# Moyal versus Poisson evolution


def _spectral_derivative(f, h, axis, order):
    n = f.shape[axis]
    k = 2j * math.pi * np.fft.fftfreq(n, d=h)
    shape = [1] * f.ndim
    shape[axis] = n
    return np.real(np.fft.ifft(np.fft.fft(f, axis=axis) * (k**order).reshape(shape), axis=axis))


def _w_derivative(W, i, j):
    """``d^i/dp^i d^j/dq^j`` of the grid field."""
    f = W.values
    if i:
        f = _spectral_derivative(f, W.dp, 0, i)
    if j:
        f = _spectral_derivative(f, W.dq, 1, j)
    return f


def poisson_bracket(model, W):
    """``{H, W} = H_q W_p - H_p W_q``: the Liouville rate for ``x' = J grad H``."""
    X = W.points()
    hp, hq = model.grad(X[..., 0], X[..., 1])
    return hq * _w_derivative(W, 1, 0) - hp * _w_derivative(W, 0, 1)


def moyal_rate(model, W):
    """Exact ``dW/dt`` for a Hamiltonian polynomial of degree at most four."""
    X = W.points()
    hppp, hppq, hpqq, hqqq = model.third(X[..., 0], X[..., 1])
    l3 = (
        hqqq * _w_derivative(W, 3, 0)
        - 3 * hpqq * _w_derivative(W, 2, 1)
        + 3 * hppq * _w_derivative(W, 1, 2)
        - hppp * _w_derivative(W, 0, 3)
    )
    return poisson_bracket(model, W) - W.hbar**2 / 24.0 * l3


def wigner_rate_from_states(model_name, psi, dt, n_max=None):
    """Central difference of the exact Wigner evolution of a pure state."""
    Wp = wigner_transform(exact_evolve(model_name, psi, dt, n_max=n_max), check=False)
    Wm = wigner_transform(exact_evolve(model_name, psi, -dt, n_max=n_max), check=False)
    return WignerGrid(Wp.p, Wp.q, (Wp.values - Wm.values) / (2 * dt), psi.hbar)


def poisson_evolution_check(model, W, dt=None, psi=None, n_max=None, relative=True, margin=0.1):
    """Norm of ``dW/dt - {H, W}`` over the grid interior.

    The exact rate comes from the truncated Moyal series, which is exact
    for the built-in polynomial models; when a pure state ``psi`` and a
    step ``dt`` are supplied it comes from oracle evolution instead.
    With ``relative`` the norm is divided by that of the exact rate.
    """
    pb = poisson_bracket(model, W)
    if psi is not None and dt is not None:
        exact = wigner_rate_from_states(model.name, psi, dt, n_max=n_max).values
    else:
        exact = moyal_rate(model, W)
    ni, nj = W.values.shape
    si, sj = int(margin * ni), int(margin * nj)
    inner = (slice(si, ni - si), slice(sj, nj - sj))
    diff = np.sqrt(np.sum((exact - pb)[inner] ** 2) * W.dp * W.dq)
    if not relative:
        return float(diff)
    ref = np.sqrt(np.sum(exact[inner] ** 2) * W.dp * W.dq)
    return float(diff / ref) if ref > 0 else float(diff)


def gaussian_wigner_grid(p, q, hbar, width, center=(0.0, 0.0)):
    """Isotropic Gaussian phase-space density ``exp(-|x - c|^2 / width^2) / (pi width^2)``."""
    P, Q = np.meshgrid(p, q, indexing="ij")
    r2 = (P - center[0]) ** 2 + (Q - center[1]) ** 2
    return WignerGrid(np.asarray(p, float), np.asarray(q, float), np.exp(-r2 / width**2) / (math.pi * width**2), hbar)
