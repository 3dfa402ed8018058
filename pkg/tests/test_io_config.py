import math
from pathlib import Path

import numpy as np
import pytest

from chordflow.config import SCHEMA, load_config, parse_config
from chordflow.errors import ConfigError, DomainError
from chordflow.io import (
    LEAF_HEADER,
    fmt,
    read_csv,
    read_leaf,
    read_pgm,
    read_wavefunction,
    write_csv,
    write_leaf,
    write_pgm,
    write_wavefunction,
)
from chordflow.leaf import make_circle_leaf
from chordflow.oracle import GridWavefunction

BASE = """
[run]
model = quartic
hbar = 0.1
times = 0.0, 0.5

[leaf]
center = 0.8, 0.0
radius = 1.0
"""


def test_fmt_round_trips_floats():
    for v in (0.1, 1 / 3, -2.5e-17, 1e300):
        assert float(fmt(v)) == v
    assert fmt(True) == "1" and fmt(np.bool_(False)) == "0"
    assert fmt(np.int64(7)) == "7"
    assert fmt(math.nan) == "nan"


def test_csv_round_trip(tmp_path):
    path = write_csv(tmp_path / "a.csv", ("x", "y"), [(0.1, 2), (1 / 3, -1)])
    raw = path.read_bytes()
    assert b"\r" not in raw and raw.startswith(b"x,y\n")
    a = read_csv(path, ("x", "y"))
    assert a[1, 0] == 1 / 3
    with pytest.raises(DomainError):
        read_csv(path, ("x", "z"))
    with pytest.raises(DomainError):
        write_csv(tmp_path / "b.csv", ("x",), [(1, 2)])


def test_pgm_orientation(tmp_path):
    # values[i, j] = W(p_i, q_j); the top row of the image is the largest q
    vals = np.zeros((3, 2))
    vals[2, 1] = 1.0
    img, comments = read_pgm(write_pgm(tmp_path / "h.pgm", vals))
    assert img.shape == (2, 3)
    assert img[0, 2] == 255 and img.sum() == 255
    assert comments[0].startswith("# vmin=0 vmax=1")


def test_pgm_nan_and_flat(tmp_path):
    img, _ = read_pgm(write_pgm(tmp_path / "n.pgm", np.array([[np.nan, 2.0], [2.0, 2.0]])))
    assert img.max() == 0
    with pytest.raises(DomainError):
        write_pgm(tmp_path / "bad.pgm", np.zeros(3))


def test_leaf_file_round_trip(tmp_path):
    leaf = make_circle_leaf([0.2, 0.1], 1.3, n_samples=64)
    back = read_leaf(write_leaf(tmp_path / "leaf.csv", leaf), omega=1.0)
    assert np.array_equal(back.points, leaf.points)
    assert back.enclosed_area == pytest.approx(leaf.enclosed_area, rel=1e-14)
    assert read_csv(tmp_path / "leaf.csv").shape == (64, len(LEAF_HEADER))


def test_wavefunction_round_trip(tmp_path):
    psi = GridWavefunction.from_function(lambda q: np.exp(-q * q + 0.3j * q), -3, 3, 33, 0.1)
    back = read_wavefunction(write_wavefunction(tmp_path / "psi.csv", psi), 0.1)
    assert np.array_equal(back.values, psi.values)
    write_csv(tmp_path / "bad.csv", ("q", "re", "im"), [(0, 1, 0), (0.1, 1, 0), (0.3, 1, 0)])
    with pytest.raises(DomainError):
        read_wavefunction(tmp_path / "bad.csv", 0.1)


def test_defaults_and_hash():
    cfg = parse_config(BASE)
    assert cfg.model == "quartic" and cfg.times == (0.0, 0.5)
    assert cfg["region.resolution"] == SCHEMA["region"]["resolution"][1]
    assert cfg["tolerances.integrator"] == 1e-12
    assert len(cfg.sha256) == 64
    assert parse_config(BASE + "\n").sha256 != cfg.sha256


def test_inline_comments_and_points():
    cfg = parse_config(BASE + "[region]\nkind = points  # two probes\npoints = 0.1 0.2; 0.3, -0.4\n")
    assert cfg["region.points"] == ((0.1, 0.2), (0.3, -0.4))


def test_hbar_from_bohr_sommerfeld():
    cfg = parse_config(BASE.replace("hbar = 0.1\n", "") + "quantum_number = 4\n")
    assert cfg.hbar == pytest.approx(1.0 / 9.0)


@pytest.mark.parametrize(
    "extra",
    [
        "[bogus]\nx = 1\n",
        "[run]\nflavour = 2\n",
        "[tolerances]\nchord = -1\n",
        "[region]\np_min = 1\np_max = 0\n",
        "[region]\nannulus = 0.8, 0.3\n",
        "[bench]\ndelta_s_form = sideways\n",
        "[bench]\nscaling_asymmetries = 0.1, 0.2, 2\n",
        "[oracle]\nenabled = maybe\n",
        "[leaf]\nsamples = 4\n",
    ],
)
def test_rejects_bad_config(extra):
    text = BASE
    for sec in ("[run]", "[leaf]"):
        if extra.startswith(sec):
            # merge into the existing section instead of duplicating it
            text = text.replace(sec + "\n", extra)
            break
    else:
        text = BASE + extra
    with pytest.raises(ConfigError):
        parse_config(text)


@pytest.mark.parametrize(
    "old, new",
    [("model = quartic", "model = cubic"), ("hbar = 0.1", "hbar = 0"), ("times = 0.0, 0.5", "times = "),
     ("radius = 1.0", "radius = x")],
)
def test_rejects_bad_values(old, new):
    with pytest.raises(ConfigError):
        parse_config(BASE.replace(old, new))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.ini")


@pytest.mark.parametrize("name", ["propagate_quartic", "compare_quartic", "caustic_quartic", "quartic_bench"])
def test_shipped_configs_load(name):
    cfg = load_config(Path(__file__).parent.parent / "configs" / f"{name}.ini")
    assert cfg.model == "quartic"
