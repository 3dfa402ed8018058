"""Numerical studies shared by the command line and the acceptance suite."""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .dynamics import DEFAULT_TOL, flow_many, get_model
from .errors import DegenerateCenterError, DomainError
from .leaf import Chord, find_chords
from .oracle import (
    GridWavefunction,
    displaced_fock,
    exact_evolve,
    fock_project,
    fock_wigner,
    harmonic_exact_evolve,
    hermite_functions,
    quartic_exact_evolve,
    wigner_at,
)
from .propagation import central_caustic_crossed, leaf_evolution_engine, phase_transport, tips_flow
from .quartic import (
    QuarticChordSpec,
    polar_point,
    quartic_delta_S,
    quartic_delta_S_corrected,
    quartic_new_center,
    radial_specs,
    random_specs,
    scaling_probe,
)
from .wigner import evaluate

DELTA_S = {"printed": quartic_delta_S, "corrected": quartic_delta_S_corrected}


def pool_map(fn, items, threads=1):
    """Ordered map, optionally on a thread pool."""
    items = list(items)
    if threads is None or threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


# --------------------------------------------------------------------------
# Quartic closed forms versus the numerical pipeline


@dataclass
class SpecCheck:
    spec: QuarticChordSpec
    dS_closed: float
    dS_numeric: float
    center_err: float
    flagged: bool

    @property
    def abs_err(self):
        return abs(self.dS_closed - self.dS_numeric)


def check_spec(spec, form="corrected", tol=DEFAULT_TOL):
    model = get_model("quartic")
    chord = Chord(spec.center, spec.tip_minus, spec.tip_plus, (0.0, 0.0))
    cfg = tips_flow(model, chord, spec.t, tol=tol)
    numeric = phase_transport(cfg, 0.0)
    closed = DELTA_S[form](spec)
    try:
        center = polar_point(*quartic_new_center(spec))
        cerr = float(np.max(np.abs(center - cfg.x_tilde)))
        degenerate = False
    except DegenerateCenterError:
        cerr, degenerate = 0.0, True
    flagged = degenerate or central_caustic_crossed(cfg)
    return SpecCheck(spec, closed, numeric, cerr, flagged)


def caustic_free_specs(n, seed, max_rounds=20):
    """``n`` random specs whose tip trajectories stay off the centre-map caustic."""
    rng = np.random.default_rng(seed)
    model = get_model("quartic")
    out = []
    for _ in range(max_rounds):
        for spec in random_specs(2 * n, rng):
            chord = Chord(spec.center, spec.tip_minus, spec.tip_plus, (0.0, 0.0))
            cfg = tips_flow(model, chord, spec.t, n_samples=17)
            if not central_caustic_crossed(cfg):
                out.append(spec)
                if len(out) == n:
                    return out
    raise DomainError("could not draw enough caustic-free specs")


def run_bench(specs, form="corrected", threads=1, tol=DEFAULT_TOL):
    return pool_map(lambda s: check_spec(s, form=form, tol=tol), specs, threads)


def scaling_study(t=0.05, lo=0.1, hi=0.8, count=8):
    specs = radial_specs(np.linspace(lo, hi, int(count)), t=t)
    return scaling_probe(specs)


# --------------------------------------------------------------------------
# Exact quantum reference for circle leaves


@dataclass
class OracleState:
    """Displaced Fock state on a Bohr-Sommerfeld circle and its exact evolution."""

    n: int
    hbar: float
    center: np.ndarray
    model_name: str
    q_extent: float = 3.5
    grid_n: int = 1024
    n_max: int = 200
    y_points: int = 3001
    _cache: dict = field(default_factory=dict, repr=False)

    def initial_wigner(self, x):
        return fock_wigner(self.n, self.hbar, x, center=self.center)

    def _psi0(self):
        return GridWavefunction.from_function(
            lambda q: displaced_fock(self.n, self.hbar, self.center, q),
            -self.q_extent, self.q_extent, self.grid_n, self.hbar,
        )

    def psi_t(self, t):
        """Callable ``q -> psi_t(q)``."""
        if t in self._cache:
            return self._cache[t]
        psi0 = self._psi0()
        if self.model_name in ("harmonic", "quartic"):
            c = fock_project(psi0, self.n_max)
            c = quartic_exact_evolve(c, t) if self.model_name == "quartic" else harmonic_exact_evolve(c, t)
            fn = lambda q, c=c: c.coeffs @ hermite_functions(q, c.n_max, c.hbar)
        else:
            psi = exact_evolve(self.model_name, psi0, t)
            spl = CubicSpline(psi.q, psi.values)
            fn = lambda q, spl=spl, lo=psi.q_min, hi=psi.q_max: np.where((q >= lo) & (q <= hi), spl(q), 0.0)
        self._cache[t] = fn
        return fn

    def wigner(self, t, points):
        y_max = self.q_extent
        return wigner_at(self.psi_t(t), self.hbar, points, y_max=y_max, n_y=self.y_points)


@dataclass
class Comparison:
    points: np.ndarray
    preimages: np.ndarray
    exact: np.ndarray
    semiclassical: np.ndarray
    liouville: np.ndarray
    branch_count: np.ndarray
    flagged: np.ndarray
    in_region: np.ndarray

    def l2(self, which):
        m = self.in_region
        if not m.any():
            raise DomainError("comparison region is empty")
        err = getattr(self, which)[m] - self.exact[m]
        return float(np.sqrt(np.mean(err**2)))

    @property
    def scale(self):
        return float(np.sqrt(np.mean(self.exact[self.in_region] ** 2)))


def compare_engines(leaf0, hbar, model, t, points, oracle, annulus=None, threads=1, tol=DEFAULT_TOL):
    """Semiclassical (leaf evolution) and Liouville fields against the exact Wigner function.

    Liouville transport is applied to the exact initial Wigner function.
    The region keeps single-chord, unflagged points whose preimage lies in
    ``annulus`` (fractions of the leaf radius around ``oracle.center``).
    """
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    leaf_t = leaf_evolution_engine(leaf0, model, t, tol=tol)
    if t == 0:
        pre = points.copy()
    else:
        _, X, _, _ = flow_many(model, points, -t, tol=tol)
        pre = X[-1]

    def one(x):
        ev = evaluate(leaf_t, hbar, x)
        return (np.nan if ev.flagged else ev.value), ev.branch_count, ev.flagged

    res = pool_map(one, points, threads)
    sc = np.array([r[0] for r in res], dtype=float)
    counts = np.array([r[1] for r in res], dtype=int)
    flagged = np.array([r[2] for r in res], dtype=bool)
    region = (counts == 1) & ~flagged
    if annulus:
        R = math.sqrt(leaf0.area / math.pi)
        rho = np.linalg.norm(pre - np.asarray(oracle.center), axis=1) / R
        region &= (rho > annulus[0]) & (rho < annulus[1])
    exact = np.full(len(points), np.nan)
    if region.any():
        exact[region] = oracle.wigner(t, points[region])
    liou = oracle.initial_wigner(pre)
    return Comparison(points, pre, exact, sc, liou, counts, flagged, region)


def rect_points(p_min, p_max, q_min, q_max, resolution):
    p = np.linspace(p_min, p_max, resolution)
    q = np.linspace(q_min, q_max, resolution)
    P, Q = np.meshgrid(p, q, indexing="ij")
    return p, q, np.stack([P.ravel(), Q.ravel()], axis=-1)


def chord_counts(leaf, points, tol=1e-10, threads=1):
    def one(x):
        try:
            return len(find_chords(leaf, x, tol=tol))
        except DegenerateCenterError:
            return -1

    return np.array(pool_map(one, points, threads), dtype=int)
