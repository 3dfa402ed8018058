"""INI run configuration.

Every section and key is listed in ``SCHEMA``; anything else is rejected.
"""

import configparser
import hashlib
from dataclasses import dataclass
from pathlib import Path

from .dynamics import MODELS
from .errors import ConfigError


def _floats(text):
    try:
        return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _bool(text):
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _points(text):
    pts = []
    for chunk in text.split(";"):
        if chunk.strip():
            xy = chunk.replace(",", " ").split()
            if len(xy) != 2:
                raise ConfigError(f"point {chunk.strip()!r} needs exactly two coordinates")
            pts.append((float(xy[0]), float(xy[1])))
    return tuple(pts)


# section -> key -> (parser, default)
SCHEMA = {
    "run": {
        "model": (str, "quartic"),
        "hbar": (float, None),
        "engine": (str, "semiclassical"),
        "times": (_floats, (0.5,)),
    },
    "leaf": {
        "kind": (str, "circle"),
        "center": (_floats, (0.0, 0.0)),
        "radius": (float, None),
        "quantum_number": (int, None),
        "samples": (int, 512),
        "omega": (float, 1.0),
        "path": (str, None),
    },
    "region": {
        "kind": (str, "rect"),
        "p_min": (float, -1.0),
        "p_max": (float, 1.0),
        "q_min": (float, -1.0),
        "q_max": (float, 1.0),
        "resolution": (int, 41),
        "points": (_points, ()),
        "annulus": (_floats, ()),
    },
    "tolerances": {
        "integrator": (float, 1e-12),
        "chord": (float, 1e-10),
        "bench": (float, 1e-6),
        "center": (float, 1e-8),
        "scaling": (float, 0.2),
    },
    "oracle": {
        "enabled": (_bool, False),
        "grid_n": (int, 1024),
        "q_extent": (float, 3.5),
        "n_max": (int, 200),
        "y_points": (int, 3001),
    },
    "bench": {
        "n_specs": (int, 1000),
        "seed": (int, 12345),
        "delta_s_form": (str, "corrected"),
        "scaling_t": (float, 0.05),
        "scaling_asymmetries": (_floats, (0.1, 0.8, 8)),
        "specs_path": (str, None),
    },
    "output": {
        "dir": (str, "out"),
        "heatmap": (_bool, True),
    },
}

ENGINES = ("semiclassical", "liouville")
LEAF_KINDS = ("circle", "file")
REGION_KINDS = ("rect", "points")
DELTA_S_FORMS = ("corrected", "printed")


@dataclass
class RunConfig:
    values: dict
    text: str = ""
    path: Path = None

    def __getitem__(self, key):
        section, name = key.split(".")
        return self.values[section][name]

    @property
    def sha256(self):
        return hashlib.sha256(self.text.encode("utf-8")).hexdigest()

    @property
    def model(self):
        return self["run.model"]

    @property
    def hbar(self):
        return self["run.hbar"]

    @property
    def times(self):
        return self["run.times"]

    @property
    def out_dir(self):
        return Path(self["output.dir"])


def parse_config(text, path=None):
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",), strict=True)
    cp.optionxform = str
    try:
        cp.read_string(text, source=str(path or "<config>"))
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse configuration: {exc}") from None
    values = {sec: {k: d for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()}
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]")
        for key, raw in cp.items(sec):
            if key not in SCHEMA[sec]:
                raise ConfigError(f"unknown key {key!r} in [{sec}]")
            parser = SCHEMA[sec][key][0]
            try:
                values[sec][key] = parser(raw.strip())
            except ConfigError:
                raise
            except ValueError:
                raise ConfigError(f"[{sec}] {key}: cannot parse {raw!r}") from None
    cfg = RunConfig(values=values, text=text, path=path)
    validate(cfg)
    return cfg


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config(text, path=path)


def validate(cfg):
    v = cfg.values
    if v["run"]["model"] not in MODELS:
        raise ConfigError(f"model must be one of {sorted(MODELS)}, got {v['run']['model']!r}")
    if v["run"]["engine"] not in ENGINES:
        raise ConfigError(f"engine must be one of {ENGINES}")
    if not v["run"]["times"]:
        raise ConfigError("at least one time is required")
    for k, tol in v["tolerances"].items():
        if not tol > 0:
            raise ConfigError(f"tolerance {k} must be positive")
    leaf = v["leaf"]
    if leaf["kind"] not in LEAF_KINDS:
        raise ConfigError(f"leaf kind must be one of {LEAF_KINDS}")
    if leaf["kind"] == "circle":
        if len(leaf["center"]) != 2:
            raise ConfigError("leaf center needs two coordinates")
        if leaf["radius"] is None and leaf["quantum_number"] is None:
            raise ConfigError("circle leaf needs a radius or a quantum_number")
        if leaf["radius"] is not None and leaf["radius"] <= 0:
            raise ConfigError("leaf radius must be positive")
    elif not leaf["path"]:
        raise ConfigError("file leaf needs a path")
    if leaf["samples"] < 16:
        raise ConfigError("leaf needs at least 16 samples")
    hbar = v["run"]["hbar"]
    if hbar is None:
        n = leaf["quantum_number"]
        if leaf["kind"] == "circle" and n is not None and leaf["radius"] is not None:
            v["run"]["hbar"] = leaf["radius"] ** 2 / (2 * n + 1)
        else:
            raise ConfigError("hbar is required unless a circle leaf gives both radius and quantum_number")
    elif not hbar > 0:
        raise ConfigError("hbar must be positive")
    reg = v["region"]
    if reg["kind"] not in REGION_KINDS:
        raise ConfigError(f"region kind must be one of {REGION_KINDS}")
    if reg["kind"] == "rect":
        if reg["resolution"] < 2:
            raise ConfigError("region resolution must be at least 2")
        if not (reg["p_max"] > reg["p_min"] and reg["q_max"] > reg["q_min"]):
            raise ConfigError("region rectangle is empty")
    if reg["annulus"] and (len(reg["annulus"]) != 2 or not 0 <= reg["annulus"][0] < reg["annulus"][1]):
        raise ConfigError("annulus needs inner and outer fractions of the leaf radius, inner < outer")
    b = v["bench"]
    if b["delta_s_form"] not in DELTA_S_FORMS:
        raise ConfigError(f"delta_s_form must be one of {DELTA_S_FORMS}")
    if b["n_specs"] < 0:
        raise ConfigError("n_specs must be non-negative")
    if len(b["scaling_asymmetries"]) != 3 or b["scaling_asymmetries"][2] < 3:
        raise ConfigError("scaling_asymmetries is 'min, max, count' with count >= 3")
    o = v["oracle"]
    if o["grid_n"] < 16 or o["n_max"] < 1 or o["q_extent"] <= 0 or o["y_points"] < 16:
        raise ConfigError("oracle grid settings out of range")
