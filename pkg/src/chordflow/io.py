"""Plain-text artifacts: CSV tables, ASCII PGM heatmaps, leaf and wavefunction files."""

import csv
import math
from pathlib import Path

import numpy as np

from .errors import DomainError
from .leaf import Leaf
from .oracle import GridWavefunction

LEAF_HEADER = ("s", "p", "q")
FIELD_HEADER = ("p", "q", "W", "branch_count", "caustic_flag")
PROPAGATION_HEADER = (
    "p0", "q0", "p_tilde", "q_tilde", "S0", "S_t", "A0", "A_t", "branch", "caustic_central", "caustic_chord",
)
WIGNER_HEADER = ("p", "q", "W")
WAVEFUNCTION_HEADER = ("q", "re", "im")
BENCH_HEADER = ("r_minus", "r_plus", "alpha", "beta", "t", "dS_closed", "dS_numeric", "abs_err")


def fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    v = float(v)
    if math.isnan(v):
        return "nan"
    return "%.17g" % v


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            if len(row) != len(header):
                raise DomainError(f"row has {len(row)} fields, header has {len(header)}")
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return path


def read_csv(path, header=None):
    """Float table as a 2-D array; checks the header when one is given."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            head = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DomainError(f"{path}: empty file") from None
        if header is not None and tuple(head) != tuple(header):
            raise DomainError(f"{path}: expected columns {','.join(header)}, got {','.join(head)}")
        rows = [[float(v) for v in r] for r in reader if r]
    return np.array(rows, dtype=float).reshape(-1, len(head))


def write_pgm(path, values, vmin=None, vmax=None, maxval=255):
    """ASCII P2 image; row 0 is the top (largest second-axis value). NaN maps to 0."""
    a = np.asarray(values, dtype=float)
    if a.ndim != 2:
        raise DomainError("heatmap needs a 2-D array")
    finite = a[np.isfinite(a)]
    lo = float(finite.min()) if vmin is None and finite.size else (vmin if vmin is not None else 0.0)
    hi = float(finite.max()) if vmax is None and finite.size else (vmax if vmax is not None else 1.0)
    span = hi - lo if hi > lo else 1.0
    img = np.where(np.isfinite(a), np.clip(np.rint((a - lo) / span * maxval), 0, maxval), 0).astype(int)
    # values[i, j] is (p_i, q_j): q runs up the image, p across
    img = img.T[::-1]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("P2\n")
        fh.write(f"# vmin={fmt(lo)} vmax={fmt(hi)}\n")
        fh.write(f"{img.shape[1]} {img.shape[0]}\n{maxval}\n")
        for row in img:
            fh.write(" ".join(str(v) for v in row) + "\n")
    return path


def read_pgm(path):
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines()]
    if lines[0].strip() != "P2":
        raise DomainError("not an ASCII PGM")
    comments = [ln for ln in lines[1:] if ln.startswith("#")]
    body = " ".join(ln for ln in lines[1:] if not ln.startswith("#")).split()
    w, h, _ = int(body[0]), int(body[1]), int(body[2])
    img = np.array(body[3:], dtype=int).reshape(h, w)
    return img, comments


def write_leaf(path, leaf):
    return write_csv(path, LEAF_HEADER, [(s, x[0], x[1]) for s, x in zip(leaf.s, leaf.points)])


def read_leaf(path, omega=None, quantum_number=None, hbar=None):
    a = read_csv(path, LEAF_HEADER)
    return Leaf(a[:, 0], a[:, 1:3], omega=omega, quantum_number=quantum_number, hbar=hbar)


def write_wigner_grid(path, grid):
    rows = ((p, q, grid.values[i, j]) for i, p in enumerate(grid.p) for j, q in enumerate(grid.q))
    return write_csv(path, WIGNER_HEADER, rows)


def read_wavefunction(path, hbar):
    a = read_csv(path, WAVEFUNCTION_HEADER)
    q = a[:, 0]
    if len(q) < 2 or not np.allclose(np.diff(q), q[1] - q[0], rtol=1e-9, atol=1e-12):
        raise DomainError("wavefunction samples must lie on a uniform increasing q grid")
    return GridWavefunction(q[0], q[-1], len(q), a[:, 1] + 1j * a[:, 2], hbar)


def write_wavefunction(path, psi):
    return write_csv(path, WAVEFUNCTION_HEADER, [(q, v.real, v.imag) for q, v in zip(psi.q, psi.values)])
