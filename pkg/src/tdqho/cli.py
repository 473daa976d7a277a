"""Command-line batch runner.

Subcommands: ``run`` (one config), ``sweep`` (cartesian parameter sweep),
``validate`` (acceptance suite) and ``figures`` (data behind the four
figures).  Exit codes: 0 success, 2 config error, 3 numerical failure,
4 validation failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from . import closed_forms as cf
from .config import ConfigError, ExperimentConfig, from_dict, load, sweep_points
from .diagnostics import COLUMNS, diagnose_trajectory, ground_energy
from .ermakov import IntegrationError, adiabatic_ics, equilibrium_ics, integrate
from .fock import ground_excitation_pmf, negative_binomial_pmf, transition_table
from .diagnostics import SqueezeParams
from .protocols import ProtocolError

log = logging.getLogger("tdqho")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VALIDATION = 0, 2, 3, 4


def _fmt(x):
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return "%.17g" % float(x)


def _clean(v):
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats to null."""
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


class Emitter:
    """Serialises every file write and records a manifest."""

    def __init__(self, root):
        self.root = root
        self.manifest = []

    def _path(self, rel):
        path = os.path.join(self.root, rel)
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        return path

    def csv(self, rel, header, columns):
        n = len(columns[0]) if columns else 0
        with open(self._path(rel), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\r\n")
            w.writerow(header)
            for i in range(n):
                w.writerow([_fmt(c[i]) for c in columns])
        self.manifest.append({"path": rel.replace(os.sep, "/"), "rows": n})

    def json(self, rel, obj, record=True):
        with open(self._path(rel), "w", encoding="utf-8", newline="\n") as fh:
            json.dump(_clean(obj), fh, sort_keys=True, indent=2, allow_nan=False)
            fh.write("\n")
        if record:
            self.manifest.append({"path": rel.replace(os.sep, "/"), "rows": 1})


# --------------------------------------------------------------------------
# run
# --------------------------------------------------------------------------

def _initial(cfg: ExperimentConfig):
    mode = cfg.initial["mode"]
    if mode == "explicit":
        return cfg.initial["sigma"], cfg.initial["sigma_dot"]
    fn = equilibrium_ics if mode == "equilibrium" else adiabatic_ics
    try:
        return fn(cfg.protocol, cfg.t_start, cfg.params)
    except ProtocolError as exc:
        raise ConfigError(f"[initial] mode = {mode!r}: {exc}") from None


def simulate(cfg: ExperimentConfig, tol=None):
    """Integrate and sample a config; returns (trajectory, diagnostics columns, summary)."""
    ics = _initial(cfg)
    tol = tol or (cfg.rtol, cfg.atol)
    try:
        traj = integrate(cfg.protocol, cfg.params, ics, (cfg.t_start, cfg.t_stop), tol=tol)
    except ProtocolError as exc:
        raise ConfigError(f"[time] {exc}") from None
    grid = np.linspace(cfg.t_start, cfg.t_stop, cfg.samples)
    cols = diagnose_trajectory(traj, grid, n=cfg.observables["level"])
    fin = traj.final_state()
    w_end = float(cfg.protocol.omega(fin.t))
    summary = {
        "final_t": fin.t,
        "final_sigma": fin.sigma,
        "final_Q": cols["Q"][-1],
        "final_r": cols["r"][-1],
        "excess_energy": ground_energy(fin.sigma, fin.sigma_dot, w_end, cfg.params),
        "steps": traj.stats["accepted"],
        "rejections": traj.stats["rejected"],
    }
    return traj, cols, summary


def run(cfg: ExperimentConfig, out_dir, tol=None):
    """Execute one config and write its files; returns the run report."""
    em = Emitter(out_dir)
    name = cfg.output["name"]
    _, cols, summary = simulate(cfg, tol)
    em.csv(f"{name}.csv", list(COLUMNS), [cols[c] for c in COLUMNS])
    r_end = summary["final_r"]
    if cfg.observables["pmf"] and math.isfinite(r_end):
        pmf = ground_excitation_pmf(r_end)
        em.csv(f"{name}_pmf.csv", ["k", "n", "p"], [np.arange(pmf.K + 1), pmf.levels, pmf.p])
        summary["pmf_head"] = pmf.p[:5].tolist()
    N = cfg.observables["transitions"]
    if N > 0 and math.isfinite(r_end):
        tab = transition_table(SqueezeParams(r_end), N)
        m, n = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
        em.csv(f"{name}_transitions.csv", ["m", "n", "p"], [m.ravel(), n.ravel(), tab.p.ravel()])
    report = {"config": cfg.raw, "summary": summary, "tolerances": list(tol or (cfg.rtol, cfg.atol))}
    report["manifest"] = list(em.manifest)
    em.json(f"{name}_report.json", report, record=False)
    return report


# --------------------------------------------------------------------------
# sweep
# --------------------------------------------------------------------------

def _sweep_point(raw, overrides, tol):
    cfg = from_dict(raw).with_overrides(**overrides)
    _, _, summary = simulate(cfg, tol)
    return summary


def sweep(cfg: ExperimentConfig, out_dir, jobs=1, tol=None):
    points = sweep_points(cfg)
    raw = {k: v for k, v in cfg.raw.items() if k != "sweep"}
    args = [(raw, p, tol) for p in points]
    if jobs > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            summaries = list(pool.map(_sweep_point, *zip(*args)))
    else:
        summaries = [_sweep_point(*a) for a in args]
    names = list(cfg.axes)
    keys = ["final_Q", "final_r", "excess_energy", "steps", "rejections"]
    em = Emitter(out_dir)
    name = cfg.output["name"]
    em.csv(f"{name}_sweep.csv", names + keys,
           [[p[n] for p in points] for n in names] + [[s[k] for s in summaries] for k in keys])
    report = {"config": cfg.raw, "points": len(points),
              "rows": [{**p, **s} for p, s in zip(points, summaries)]}
    if cfg.fit:
        x = [p[cfg.fit["x"]] for p in points]
        y = [s[cfg.fit["y"]] for s in summaries]
        report["fit"] = {"x": cfg.fit["x"], "y": cfg.fit["y"], "loglog_slope": cf.loglog_slope(x, y)}
    report["manifest"] = list(em.manifest)
    em.json(f"{name}_sweep_report.json", report, record=False)
    return report


# --------------------------------------------------------------------------
# figures
# --------------------------------------------------------------------------

FIG1_P = (1e-1, 1e-2, 1e-4)
FIG1_K = 200
FIG2_EPS = (0.001, 0.25, 0.5, 1.0, 2.0)
FIG2_WINDOW = (-5.0, 5.0)
FIG3_ETAS = (1.0, 1.5, 2.0, 2.5, 3.0)
FIG3_TAU = 100.0
FIG4_TAUS = (12.5, 25.0, 50.0, 100.0, 200.0)
FIG_SAMPLES = 2001


def _series_config(protocol, start, stop, initial="equilibrium"):
    return {"protocol": protocol, "time": {"start": start, "stop": stop, "samples": FIG_SAMPLES},
            "initial": {"mode": initial}}


def _emit_series(em, folder, label, raw, tol):
    cfg = from_dict(raw)
    _, cols, summary = simulate(cfg, tol)
    fname = f"{folder}/{label}.csv"
    em.csv(fname, list(COLUMNS), [cols[c] for c in COLUMNS])
    return {"file": f"{label}.csv", "label": label, "config": raw, "summary": summary}


def figures(out_dir, tol=None):
    em = Emitter(out_dir)

    series = []
    for p in FIG1_P:
        pmf = negative_binomial_pmf(p, FIG1_K)
        label = f"ptilde_{p:.0e}"
        em.csv(f"fig1/{label}.csv", ["k", "p"], [np.arange(FIG1_K + 1), pmf])
        series.append({"file": f"{label}.csv", "label": label, "p_tilde": p,
                       "displayed_mass": math.fsum(pmf)})
    em.json("fig1/bundle.json", {"figure": "fig1", "content": "negative binomial excitation PMF",
                                 "config": {"p_tilde": list(FIG1_P), "k_max": FIG1_K}, "series": series})

    series = []
    for eps in FIG2_EPS:
        start = min(-20.0 * eps, FIG2_WINDOW[0])
        raw = _series_config({"kind": "Tanh", "omega_i": 1.0, "omega_f": 3.0, "tau": 0.0, "eps": eps},
                             start, FIG2_WINDOW[1])
        series.append(_emit_series(em, "fig2", f"eps_{eps:g}", raw, tol))
    em.json("fig2/bundle.json", {"figure": "fig2", "content": "tanh quench: omega, Q, r",
                                 "series": series})

    series = []
    for eta in FIG3_ETAS:
        raw = _series_config({"kind": "NonlinearSymmetric", "delta": 1.0 / FIG3_TAU, "eta": eta},
                             -FIG3_TAU, 2.0 * FIG3_TAU, initial="adiabatic")
        s = _emit_series(em, "fig3", f"eta_{eta:g}", raw, tol)
        s["asymptotic_r"] = cf.asymptotic_r(eta)
        series.append(s)
    em.json("fig3/bundle.json", {"figure": "fig3", "content": "nonlinear ramps: omega^2, Q, r",
                                 "series": series})

    series = []
    for tau in FIG4_TAUS:
        raw = _series_config({"kind": "LinearSymmetric", "delta": 1.0 / tau}, -tau, 2.0 * tau,
                             initial="adiabatic")
        s = _emit_series(em, "fig4", f"tau_{tau:g}", raw, tol)
        s["tau"] = tau
        series.append(s)
    em.json("fig4/bundle.json", {"figure": "fig4", "content": "linear ramps: r and Q against t/tau",
                                 "asymptotic_r": cf.asymptotic_r(1.0), "series": series})
    em.json("manifest.json", {"version": __version__, "files": em.manifest}, record=False)
    return em.manifest


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="tdqho", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="TOML experiment file")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--tol-rel", type=float, help="override integrator relative tolerance")
        p.add_argument("--tol-abs", type=float, help="override integrator absolute tolerance")

    common(sub.add_parser("run", help="run one experiment"))
    p = sub.add_parser("sweep", help="cartesian parameter sweep")
    common(p)
    p.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    common(sub.add_parser("figures", help="write the figure datasets"), config=False)
    p = sub.add_parser("validate", help="run the acceptance suite")
    p.add_argument("--out", help="also write verdict.json here")
    p.add_argument("--json", action="store_true", help="print the JSON verdict instead of text")
    p.add_argument("--only", type=int, nargs="+", metavar="ID", help="subset of criterion ids")
    return ap


def _tol(args, cfg=None):
    if args.tol_rel is None and args.tol_abs is None:
        return None
    rtol = args.tol_rel if args.tol_rel is not None else (cfg.rtol if cfg else 1e-9)
    atol = args.tol_abs if args.tol_abs is not None else (cfg.atol if cfg else 1e-12)
    if not (rtol > 0 and atol > 0):
        raise ConfigError("tolerances must be positive")
    return (rtol, atol)


def _validate(args):
    from .acceptance import run_all

    results = run_all(set(args.only) if args.only else None)
    verdict = {"passed": all(r.passed for r in results), "criteria": [r.to_dict() for r in results]}
    if args.json:
        print(json.dumps(_clean(verdict), sort_keys=True, indent=2))
    else:
        for r in results:
            print(r.line())
    if args.out:
        Emitter(args.out).json("verdict.json", verdict)
    return EXIT_OK if verdict["passed"] else EXIT_VALIDATION


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "validate":
            return _validate(args)
        if args.command == "figures":
            manifest = figures(args.out, _tol(args))
            log.info("wrote %d files to %s", len(manifest), args.out)
            return EXIT_OK
        cfg = load(args.config)
        if args.command == "run":
            rep = run(cfg, args.out, _tol(args, cfg))
        else:
            if not cfg.axes:
                raise ConfigError("[sweep] axes: sweep needs a [sweep.axes] table")
            if args.jobs < 1:
                raise ConfigError("--jobs must be >= 1")
            rep = sweep(cfg, args.out, args.jobs, _tol(args, cfg))
        print(json.dumps(_clean({k: v for k, v in rep.items() if k in ("summary", "fit", "manifest")}),
                         sort_keys=True, indent=2))
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
