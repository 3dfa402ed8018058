import math

import numpy as np
import pytest

from chordflow.dynamics import get_model
from chordflow.errors import DomainError, TruncationError
from chordflow.oracle import (
    GridWavefunction,
    MoyalLattice,
    displaced_fock,
    exact_evolve,
    fock_project,
    fock_state,
    fock_synthesize,
    fock_wigner,
    gaussian_star_gaussian,
    gaussian_wigner_grid,
    harmonic_exact_evolve,
    hermite_functions,
    moyal_product_numeric,
    moyal_rate,
    poisson_bracket,
    poisson_evolution_check,
    quartic_exact_evolve,
    wigner_at,
    wigner_rate_from_states,
    wigner_transform,
)

HBAR = 0.1


def coherent(center, hbar=HBAR, n=512, extent=6.0):
    return GridWavefunction.from_function(lambda q: displaced_fock(0, hbar, center, q), -extent, extent, n, hbar)


def test_fock_wigner_at_origin():
    assert fock_wigner(0, HBAR, [0.0, 0.0]) == pytest.approx(1 / (math.pi * HBAR))
    assert fock_wigner(1, 1.0, [0.0, 0.0]) == pytest.approx(-1 / math.pi)


def test_hermite_functions_orthonormal():
    q = np.linspace(-8, 8, 4001)
    H = hermite_functions(q, 120, 0.05)
    G = H @ H.T * (q[1] - q[0])
    assert np.allclose(G, np.eye(121), atol=1e-9)


def test_wigner_transform_marginals():
    psi = GridWavefunction.from_function(lambda q: displaced_fock(3, HBAR, (0.4, -0.2), q), -5, 5, 512, HBAR)
    W = wigner_transform(psi)
    assert W.total() == pytest.approx(1.0, abs=1e-8)
    assert np.allclose(W.q_marginal(), psi.density(), atol=1e-8)
    assert np.allclose(W.p_marginal(), psi.momentum_density(W.p), atol=1e-6)
    X = np.array([[0.4, -0.2], [0.7, 0.1]])
    assert np.allclose(W(X), fock_wigner(3, HBAR, X, center=(0.4, -0.2)), atol=1e-3)


def test_wigner_transform_warns_on_coarse_grid():
    psi = GridWavefunction.from_function(lambda q: displaced_fock(0, HBAR, (0.4, -0.2), q), -0.4, 0.4, 64, HBAR)
    with pytest.warns(RuntimeWarning):
        wigner_transform(psi)


def test_wigner_at_matches_closed_form():
    fn = lambda q: displaced_fock(2, HBAR, (0.3, 0.1), q)
    X = np.array([[0.3, 0.1], [0.5, 0.0], [0.0, 0.4]])
    assert np.allclose(wigner_at(fn, HBAR, X, y_max=4.0), fock_wigner(2, HBAR, X, center=(0.3, 0.1)), atol=1e-9)


def test_coherent_state_has_poisson_weights():
    center = (0.6, 0.8)
    c = fock_project(coherent(center), 60)
    N = (center[0] ** 2 + center[1] ** 2) / (2 * HBAR)
    n = np.arange(61)
    poisson = np.exp(-N + n * math.log(N) - np.array([math.lgamma(k + 1) for k in n]))
    assert np.allclose(np.abs(c.coeffs) ** 2, poisson, atol=1e-10)


def test_fock_round_trip():
    psi = coherent((0.3, -0.5))
    back = fock_synthesize(fock_project(psi, 60), psi.q_min, psi.q_max, psi.n)
    assert np.allclose(back.values, psi.values, atol=1e-10)


def test_truncation_error():
    with pytest.raises(TruncationError):
        fock_project(coherent((1.5, 1.5)), 10)


def test_two_level_relative_phase():
    c = fock_state(0, 1, HBAR)
    c.coeffs[:] = [1 / math.sqrt(2), 1 / math.sqrt(2)]
    t = 0.37
    h = harmonic_exact_evolve(c, t)
    assert np.angle(h.coeffs[1] / h.coeffs[0]) == pytest.approx(-t)
    q = quartic_exact_evolve(c, t)
    assert np.angle(q.coeffs[1] / q.coeffs[0]) == pytest.approx(-HBAR * (2.25 - 0.25) * t)


@pytest.mark.parametrize("name", ["harmonic", "quartic", "shear"])
def test_evolution_is_unitary(name):
    psi = coherent((0.3, -0.2), extent=8.0, n=1024)
    out = exact_evolve(name, psi, 0.9, n_max=80)
    assert out.norm == pytest.approx(1.0, abs=1e-8)


def test_exact_evolve_needs_basis_size():
    with pytest.raises(DomainError):
        exact_evolve("quartic", coherent((0, 0)), 0.1)
    with pytest.raises(DomainError):
        exact_evolve("cubic", coherent((0, 0)), 0.1, n_max=40)


def test_harmonic_rotates_the_wigner_grid():
    c0 = np.array([0.8, 0.0])
    t = 0.9
    W = wigner_transform(exact_evolve("harmonic", coherent(c0), t, n_max=80))
    rot = np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])
    X = W.points().reshape(-1, 2)
    expected = fock_wigner(0, HBAR, X, center=rot @ c0).reshape(W.values.shape)
    assert np.max(np.abs(W.values - expected)) < 1e-6


def test_moyal_identity():
    lat = MoyalLattice(41, 0.2)
    B = lat.sample(lambda p, q: np.exp(-(p * p + q * q)) * (1 + 0.3 * p))
    assert np.max(np.abs(moyal_product_numeric(np.ones((41, 41)), B, lat) - B)) < 1e-12


def test_moyal_qp_commutator():
    # q g * p g against the same for p g * q g: antisymmetric part is i hbar g*g times the bracket
    lat = MoyalLattice(81, 0.2)
    g = lambda p, q: np.exp(-(p * p + q * q) / 2)
    qg = lat.sample(lambda p, q: q * g(p, q))
    pg = lat.sample(lambda p, q: p * g(p, q))
    ab = moyal_product_numeric(qg, pg, lat)
    ba = moyal_product_numeric(pg, qg, lat)
    # the commutator of real symbols is purely imaginary, the anticommutator real
    assert np.max(np.abs((ab - ba).real)) < 1e-10
    assert np.max(np.abs((ab + ba).imag)) < 1e-10
    assert np.max(np.abs(ab - ba)) > 1e-3


def test_gaussian_star_gaussian():
    hbar, a, b = 0.2, 1.0, 0.7
    lat = MoyalLattice(81, hbar)
    A = lat.sample(lambda p, q: np.exp(-a * (p * p + q * q)))
    B = lat.sample(lambda p, q: np.exp(-b * (p * p + q * q)))
    out = moyal_product_numeric(A, B, lat)
    assert np.max(np.abs(out - gaussian_star_gaussian(a, b, hbar, lat.points()))) < 1e-8


def test_moyal_trace_rule():
    # int A * B dx = int A B dx
    lat = MoyalLattice(61, 0.2)
    A = lat.sample(lambda p, q: np.exp(-(p - 0.2) ** 2 - q * q))
    B = lat.sample(lambda p, q: np.exp(-0.5 * (p * p + (q + 0.3) ** 2)) * (1 + p))
    lhs = moyal_product_numeric(A, B, lat).sum()
    assert lhs == pytest.approx((A * B).sum(), rel=1e-10)


def test_moyal_guards():
    with pytest.raises(DomainError):
        MoyalLattice(40, 0.1)
    lat = MoyalLattice(163, 0.1)
    with pytest.raises(DomainError):
        moyal_product_numeric(np.ones((163, 163)), np.ones((163, 163)), lat)
    with pytest.raises(DomainError):
        moyal_product_numeric(np.ones((5, 5)), np.ones((7, 7)), MoyalLattice(5, 0.1))


def test_poisson_exact_for_harmonic():
    axis = np.linspace(-4, 4, 128)
    W = gaussian_wigner_grid(axis, axis, 0.05, 0.5, (0.5, 0.3))
    assert np.allclose(moyal_rate(get_model("harmonic"), W), poisson_bracket(get_model("harmonic"), W))
    assert poisson_evolution_check(get_model("harmonic"), W) < 1e-12


def test_poisson_gap_shrinks_for_smooth_field():
    axis = np.linspace(-4, 4, 256)
    m = get_model("quartic")
    gaps = [poisson_evolution_check(m, gaussian_wigner_grid(axis, axis, h, 0.5, (0.5, 0.3))) for h in (0.04, 0.02)]
    assert gaps[0] / gaps[1] == pytest.approx(4.0, rel=0.05)


def test_moyal_rate_matches_state_evolution():
    hbar = 0.1
    psi = GridWavefunction.from_function(lambda q: displaced_fock(2, hbar, (0.5, 0.2), q), -4, 4, 256, hbar)
    W = wigner_transform(psi)
    m = get_model("quartic")
    ref = wigner_rate_from_states("quartic", psi, 1e-4, n_max=90).values
    rate = moyal_rate(m, W)
    assert np.max(np.abs(rate - ref)) < 1e-4 * np.max(np.abs(ref))
    # the oracle path through poisson_evolution_check gives the same number
    a = poisson_evolution_check(m, W)
    b = poisson_evolution_check(m, W, dt=1e-4, psi=psi, n_max=90)
    assert a == pytest.approx(b, rel=1e-3)
