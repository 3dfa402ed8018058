"""``chordflow`` command line.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 benchmark tolerance failure.  A ``manifest.json`` is written to the
output directory on every run.
"""

import argparse
import json
import math
import os
import sys
import traceback
from pathlib import Path

import numpy as np

from . import __version__
from .config import load_config
from .dynamics import flow_many, get_model
from .errors import ChordflowError, ConfigError, DomainError
from .io import (
    BENCH_HEADER,
    FIELD_HEADER,
    PROPAGATION_HEADER,
    read_csv,
    read_leaf,
    write_csv,
    write_leaf,
    write_pgm,
)
from .leaf import make_circle_leaf, wigner_caustic_trace
from .propagation import leaf_evolution_engine, propagate_point
from .quartic import QuarticChordSpec
from .studies import (
    OracleState,
    caustic_free_specs,
    chord_counts,
    compare_engines,
    pool_map,
    rect_points,
    run_bench,
    scaling_study,
)
from .wigner import evaluate

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_BENCH = 0, 2, 3, 4


class PointFailure(ChordflowError):
    def __init__(self, site, cause):
        super().__init__(f"{site}: {cause}")
        self.site = site
        self.cause = cause


class Run:
    """Per-invocation state: config, output directory, manifest."""

    def __init__(self, command, cfg, out_dir, threads):
        self.command = command
        self.cfg = cfg
        self.out = Path(out_dir)
        self.threads = threads
        self.outputs = []
        self.manifest = {
            "command": command,
            "version": __version__,
            "config_sha256": cfg.sha256 if cfg else None,
            "config_path": str(cfg.path) if cfg and cfg.path else None,
            "threads": threads,
            "status": "running",
            "exit_code": None,
            "caustic_counts": {},
            "metrics": {},
            "failure": None,
            "outputs": self.outputs,
        }

    def path(self, name):
        self.out.mkdir(parents=True, exist_ok=True)
        self.outputs.append(name)
        return self.out / name

    def count(self, key, n=1):
        c = self.manifest["caustic_counts"]
        c[key] = c.get(key, 0) + int(n)

    def write_manifest(self):
        self.out.mkdir(parents=True, exist_ok=True)
        with open(self.out / "manifest.json", "w", newline="", encoding="utf-8") as fh:
            json.dump(self.manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")


def build_leaf(cfg):
    lv = cfg.values["leaf"]
    try:
        if lv["kind"] == "circle":
            return make_circle_leaf(
                lv["center"], lv["radius"], n_samples=lv["samples"], omega=lv["omega"],
                quantum_number=lv["quantum_number"], hbar=cfg.hbar,
            )
        return read_leaf(lv["path"], omega=lv["omega"], quantum_number=lv["quantum_number"], hbar=cfg.hbar)
    except (DomainError, OSError) as exc:
        raise ConfigError(f"leaf: {exc}") from None


def region(cfg):
    """``(p_axis, q_axis, points)``; the axes are None for point lists."""
    r = cfg.values["region"]
    if r["kind"] == "rect":
        return rect_points(r["p_min"], r["p_max"], r["q_min"], r["q_max"], r["resolution"])
    if not r["points"]:
        raise ConfigError("region point list is empty")
    return None, None, np.array(r["points"], dtype=float)


def _tag(k):
    return f"t{k:02d}"


def heatmap(run, name, p, q, values):
    if p is None or not run.cfg["output.heatmap"]:
        return
    write_pgm(run.path(name), np.asarray(values, float).reshape(len(p), len(q)))


# --------------------------------------------------------------------------
# Commands


def cmd_propagate(run):
    cfg = run.cfg
    model = get_model(cfg.model)
    hbar = cfg.hbar
    tol = cfg["tolerances.integrator"]
    ctol = cfg["tolerances.chord"]
    leaf0 = build_leaf(cfg)
    p, q, pts = region(cfg)
    for k, t in enumerate(cfg.times):
        def branches(i):
            x0 = pts[i]
            try:
                return propagate_point(leaf0, hbar, x0, model, t, tol=tol, chord_tol=ctol)
            except ChordflowError as exc:
                raise PointFailure(f"propagate t={t!r} point {i} at ({float(x0[0])!r}, {float(x0[1])!r})", exc) from exc

        rows = []
        for i, brs in enumerate(pool_map(branches, range(len(pts)), run.threads)):
            for j, b in enumerate(brs):
                central, chord = b.caustic_flags
                run.count("central", central)
                run.count("chord", chord)
                run.count("crossed", b.crossed_caustic)
                run.count("flagged_branches", b.flagged)
                x0 = pts[i]
                rows.append((x0[0], x0[1], b.x_tilde[0], b.x_tilde[1], b.branch0.action, b.action_t,
                             b.branch0.amplitude, b.amplitude_t, j, central, chord))
        write_csv(run.path(f"propagation_{_tag(k)}.csv"), PROPAGATION_HEADER, rows)

        try:
            leaf_t = leaf_evolution_engine(leaf0, model, t, tol=tol)
        except ChordflowError as exc:
            raise PointFailure(f"leaf evolution t={t!r}", exc) from exc
        write_leaf(run.path(f"leaf_{_tag(k)}.csv"), leaf_t)
        if cfg["run.engine"] == "liouville" and t != 0:
            _, X, _, _ = flow_many(model, pts, -t, tol=tol)
            where, src = X[-1], leaf0
        else:
            where, src = pts, leaf_t

        def field(i):
            try:
                ev = evaluate(src, hbar, where[i], tol=ctol)
            except ChordflowError as exc:
                raise PointFailure(f"field t={t!r} point {i}", exc) from exc
            return (math.nan if ev.flagged else ev.value), ev.branch_count, ev.flagged

        res = pool_map(field, range(len(pts)), run.threads)
        run.count("flagged_points", sum(r[2] for r in res))
        write_csv(run.path(f"field_{_tag(k)}.csv"), FIELD_HEADER,
                  [(x[0], x[1], r[0], r[1], r[2]) for x, r in zip(pts, res)])
        heatmap(run, f"field_{_tag(k)}.pgm", p, q, [r[0] for r in res])
    return EXIT_OK


def _oracle_for(cfg, leaf0):
    lv = cfg.values["leaf"]
    if lv["kind"] != "circle" or lv["quantum_number"] is None:
        raise ConfigError("compare needs a circle leaf with a quantum_number (exact reference state)")
    o = cfg.values["oracle"]
    return OracleState(
        n=lv["quantum_number"], hbar=cfg.hbar, center=np.array(lv["center"]), model_name=cfg.model,
        q_extent=o["q_extent"], grid_n=o["grid_n"], n_max=o["n_max"], y_points=o["y_points"],
    )


def cmd_compare(run):
    cfg = run.cfg
    if not cfg["oracle.enabled"]:
        raise ConfigError("compare requires [oracle] enabled = true")
    model = get_model(cfg.model)
    leaf0 = build_leaf(cfg)
    oracle = _oracle_for(cfg, leaf0)
    p, q, pts = region(cfg)
    annulus = cfg["region.annulus"] or None
    metrics = {}
    for k, t in enumerate(cfg.times):
        try:
            cmp = compare_engines(leaf0, cfg.hbar, model, t, pts, oracle, annulus=annulus,
                                  threads=run.threads, tol=cfg["tolerances.integrator"])
        except ConfigError:
            raise
        except ChordflowError as exc:
            raise PointFailure(f"compare t={t!r}", exc) from exc
        if not cmp.in_region.any():
            raise ConfigError(f"comparison region at t={t!r} contains no usable points")
        run.count("flagged_points", int(cmp.flagged.sum()))
        rows = zip(pts[:, 0], pts[:, 1], cmp.exact, cmp.semiclassical, cmp.liouville,
                   cmp.branch_count, cmp.flagged, cmp.in_region)
        write_csv(run.path(f"compare_{_tag(k)}.csv"),
                  ("p", "q", "W_exact", "W_semiclassical", "W_liouville", "branch_count", "caustic_flag", "in_region"),
                  list(rows))
        metrics[_tag(k)] = {
            "t": t,
            "points": int(cmp.in_region.sum()),
            "l2_semiclassical": cmp.l2("semiclassical"),
            "l2_liouville": cmp.l2("liouville"),
            "rms_exact": cmp.scale,
        }
        heatmap(run, f"exact_{_tag(k)}.pgm", p, q, cmp.exact)
        heatmap(run, f"semiclassical_{_tag(k)}.pgm", p, q, cmp.semiclassical)
        heatmap(run, f"liouville_{_tag(k)}.pgm", p, q, np.where(cmp.in_region, cmp.liouville, np.nan))
    run.manifest["metrics"] = metrics
    summary = run.path("metrics.json")
    summary.write_text(json.dumps(metrics, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_caustic_map(run):
    cfg = run.cfg
    model = get_model(cfg.model)
    leaf0 = build_leaf(cfg)
    p, q, pts = region(cfg)
    for k, t in enumerate(cfg.times):
        try:
            leaf_t = leaf_evolution_engine(leaf0, model, t, tol=cfg["tolerances.integrator"])
            trace = wigner_caustic_trace(leaf_t)
        except ChordflowError as exc:
            raise PointFailure(f"caustic trace t={t!r}", exc) from exc
        write_csv(run.path(f"caustic_{_tag(k)}.csv"), ("p", "q"), [tuple(x) for x in trace])
        counts = chord_counts(leaf_t, pts, tol=cfg["tolerances.chord"], threads=run.threads)
        run.count("degenerate_points", int((counts < 0).sum()))
        write_csv(run.path(f"chord_count_{_tag(k)}.csv"), ("p", "q", "count"),
                  [(x[0], x[1], c) for x, c in zip(pts, counts)])
        heatmap(run, f"chord_count_{_tag(k)}.pgm", p, q, counts)
    return EXIT_OK


def _bench_specs(cfg):
    b = cfg.values["bench"]
    if b["specs_path"]:
        try:
            a = read_csv(b["specs_path"], ("r_minus", "r_plus", "alpha", "beta", "t"))
            return [QuarticChordSpec(*map(float, row)) for row in a]
        except (DomainError, OSError, ValueError) as exc:
            raise ConfigError(f"specs file: {exc}") from None
    return caustic_free_specs(b["n_specs"], b["seed"]) if b["n_specs"] else []


def cmd_quartic_bench(run):
    cfg = run.cfg
    b = cfg.values["bench"]
    specs = _bench_specs(cfg)
    if not specs:
        raise ConfigError("quartic bench has no specs")
    tol = cfg["tolerances.bench"]
    ctol = cfg["tolerances.center"]
    checks = run_bench(specs, form=b["delta_s_form"], threads=run.threads, tol=cfg["tolerances.integrator"])
    rows, bad = [], []
    for i, c in enumerate(checks):
        s = c.spec
        rows.append((s.r_minus, s.r_plus, s.alpha, s.beta, s.t, c.dS_closed, c.dS_numeric, c.abs_err))
        if c.flagged:
            run.count("flagged_specs")
            continue
        if not (c.abs_err <= tol and c.center_err <= ctol):
            bad.append({"index": i, "spec": [s.r_minus, s.r_plus, s.alpha, s.beta, s.t],
                        "abs_err": c.abs_err, "center_err": c.center_err})
    write_csv(run.path("bench.csv"), BENCH_HEADER, rows)
    lo, hi, n = b["scaling_asymmetries"]
    exponent, d, D = scaling_study(t=b["scaling_t"], lo=lo, hi=hi, count=n)
    write_csv(run.path("scaling.csv"), ("asymmetry", "discrepancy"), list(zip(d, D)))
    scaling_ok = abs(exponent - 3.0) <= cfg["tolerances.scaling"]
    run.manifest["metrics"] = {
        "delta_s_form": b["delta_s_form"],
        "specs": len(specs),
        "max_abs_err": max(c.abs_err for c in checks if not c.flagged) if any(not c.flagged for c in checks) else None,
        "max_center_err": max(c.center_err for c in checks),
        "failures": len(bad),
        "scaling_exponent": exponent,
        "scaling_ok": scaling_ok,
    }
    if bad or not scaling_ok:
        run.manifest["offending_specs"] = bad[:100]
        for entry in bad[:20]:
            print(f"bench failure: spec {entry['index']} {entry['spec']} abs_err={entry['abs_err']:.3g} "
                  f"center_err={entry['center_err']:.3g}", file=sys.stderr)
        if not scaling_ok:
            print(f"bench failure: scaling exponent {exponent:.4f} outside 3 +/- {cfg['tolerances.scaling']}",
                  file=sys.stderr)
        return EXIT_BENCH
    return EXIT_OK


COMMANDS = {
    "propagate": cmd_propagate,
    "compare": cmd_compare,
    "caustic-map": cmd_caustic_map,
    "quartic-bench": cmd_quartic_bench,
}


def _threads(arg):
    if arg is not None:
        return arg
    env = os.environ.get("CHORDFLOW_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"CHORDFLOW_THREADS must be an integer, got {env!r}") from None
    return 1


def main(argv=None):
    ap = argparse.ArgumentParser(prog="chordflow", description="Semiclassical Wigner propagation runs.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="INI run configuration")
    ap.add_argument("--out", help="output directory (overrides [output] dir)")
    ap.add_argument("--threads", type=int, help="worker threads (default: CHORDFLOW_THREADS or 1)")
    args = ap.parse_args(argv)

    cfg = None
    run = None
    try:
        threads = _threads(args.threads)
        if threads < 1:
            raise ConfigError("--threads must be at least 1")
        cfg = load_config(args.config)
        run = Run(args.command, cfg, args.out or cfg.out_dir, threads)
        code = COMMANDS[args.command](run)
        run.manifest["status"] = "ok" if code == EXIT_OK else "bench_failure"
    except ConfigError as exc:
        print(f"chordflow: configuration error: {exc}", file=sys.stderr)
        if run is None:
            run = Run(args.command, cfg, args.out or (cfg.out_dir if cfg else "out"), None)
        run.manifest["status"] = "config_error"
        run.manifest["failure"] = {"site": "config", "message": str(exc)}
        code = EXIT_CONFIG
    except ChordflowError as exc:
        site = exc.site if isinstance(exc, PointFailure) else "unknown"
        msg = str(exc.cause) if isinstance(exc, PointFailure) else str(exc)
        print(f"chordflow: numerical failure at {site}: {msg}", file=sys.stderr)
        run.manifest["status"] = "numerical_failure"
        run.manifest["failure"] = {"site": site, "message": msg, "type": type(getattr(exc, "cause", exc)).__name__}
        code = EXIT_NUMERIC
    except Exception as exc:  # noqa: BLE001 - still record the manifest
        if run is None:
            raise
        run.manifest["status"] = "numerical_failure"
        run.manifest["failure"] = {"site": "unexpected", "message": repr(exc), "trace": traceback.format_exc()}
        print(f"chordflow: unexpected failure: {exc!r}", file=sys.stderr)
        code = EXIT_NUMERIC
    run.manifest["exit_code"] = code
    run.write_manifest()
    return code


if __name__ == "__main__":
    sys.exit(main())
