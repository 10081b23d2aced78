"""Command line runner: ``ssmp-williams <subcommand> [flags]``.

Each run writes into ``--out``:

* ``report.json``  the TestReports (stable field order, no timestamps)
* ``config.json``  the effective configuration (file values overridden by flags)
* ``*.csv``        sample data and a ``plot_data.csv`` ready for external plotting
* ``run_info.json`` wall-clock information, excluded from determinism checks
* ``figures/*.png`` only with ``--figures``

Exit codes: 0 when every check passes, 2 when a check fails, 1 on usage or
configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import acceptance as acc
from . import cone as cn
from . import map_fluct as mf
from . import stable_cond as sc
from . import williams as wl
from .core import Angle, DomainError
from .sampling import as_seed, default_threads
from .stats import TestReport, ks_one_sample, threshold_report, chi_square_density_fit, pvalue_report

log = logging.getLogger("ssmp_williams")

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2

SUBCOMMANDS = ("map-fluct", "stable", "cone", "williams", "selftest")

# defaults per subcommand; a flag left unset falls back to the config file, then to these
DEFAULTS: Dict[str, dict] = {
    "common": {"seed": 7, "threads": None, "out": None, "figures": False},
    "map-fluct": {"mu": 0.5, "sigma": 1.0, "paths": 20000, "dt": 1e-3, "horizon": 50.0, "margin": 8.0,
                  "checks": ["depth", "occupation", "reversal"], "ks_threshold": 0.02, "rel_threshold": 0.05,
                  "reversal_time": 1.0},
    "stable": {"alpha": 1.0, "d": 2, "start": [1.0, 0.0], "paths": 10000, "horizon": 1.0,
               "checks": ["pocr", "martingale", "harmonicity"], "bins": 20, "p_floor": 0.01,
               "checkpoints": [0.25, 0.5, 1.0, 2.0, 4.0], "target": [0.0, 1.0], "shell": [1.0, 1.5],
               "harmonic_start": [2.0, 1.0],
               "rel_threshold": 0.05},
    "cone": {"phi0": math.pi / 2, "phi": 0.0, "paths": 20000, "checks": ["ladder", "martingale", "taboo"],
             "tv_threshold": 0.05, "taboo_time": 0.5, "taboo_paths": 200000,
             "checkpoints": [0.1, 0.2, 0.4, 0.7, 1.0]},
    "williams": {"model": None, "mu": 0.5, "sigma": 1.0, "alpha": 1.0, "d": 2, "start": None, "paths": 10000,
                 "dt": 1e-3, "horizon": 10.0, "sim_horizon": 50.0, "margin": 8.0, "delta": 1e-3,
                 "functionals": None, "ks_threshold": None, "delta_check": True},
    "selftest": {"scale": "reduced", "only": None},
}


@dataclass
class ExperimentConfig:
    subcommand: str
    params: dict
    out: Path
    seed: int
    threads: int
    figures: bool = False
    overridden: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"subcommand": self.subcommand, "seed": self.seed, "threads": self.threads,
                "figures": self.figures, "params": self.params, "overridden_by_flags": sorted(self.overridden)}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse with exit code 1 for usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _words(text: str) -> List[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _ints(text: str) -> List[int]:
    try:
        return [int(v) for v in _words(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON file of parameters; flags override it")
    common.add_argument("--out", default=S, help="output directory (default out/<subcommand>)")
    common.add_argument("--seed", type=int, default=S)
    common.add_argument("--threads", type=int, default=S, help="worker processes (default: available cores)")
    common.add_argument("--figures", action="store_true", default=S, help="also render PNG figures")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="ssmp-williams", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="subcommand", parser_class=_Parser)

    m = sub.add_parser("map-fluct", parents=[common], help="fluctuation checks for BM with drift")
    m.add_argument("--mu", type=float, default=S)
    m.add_argument("--sigma", type=float, default=S)
    m.add_argument("--paths", type=int, default=S)
    m.add_argument("--dt", type=float, default=S)
    m.add_argument("--horizon", type=float, default=S)
    m.add_argument("--margin", type=float, default=S)
    m.add_argument("--checks", type=_words, default=S, help="subset of depth,occupation,reversal")
    m.add_argument("--reversal-time", dest="reversal_time", type=float, default=S)

    s = sub.add_parser("stable", parents=[common], help="isotropic stable process checks")
    s.add_argument("--alpha", type=float, default=S)
    s.add_argument("--d", type=int, default=S)
    s.add_argument("--start", type=_floats, default=S)
    s.add_argument("--paths", type=int, default=S)
    s.add_argument("--horizon", type=float, default=S)
    s.add_argument("--checks", type=_words, default=S, help="subset of pocr,martingale,harmonicity")
    s.add_argument("--bins", type=int, default=S)
    s.add_argument("--checkpoints", type=_floats, default=S)
    s.add_argument("--target", type=_floats, default=S, help="unit vector for the H-down target")
    s.add_argument("--shell", type=_floats, default=S, help="inner,outer radii of the landing shell")
    s.add_argument("--harmonic-start", dest="harmonic_start", type=_floats, default=S,
                   help="start point of the harmonicity check")

    c = sub.add_parser("cone", parents=[common], help="planar BM conditioned to stay in a cone")
    c.add_argument("--phi0", type=float, default=S)
    c.add_argument("--phi", type=float, default=S)
    c.add_argument("--paths", type=int, default=S)
    c.add_argument("--checks", type=_words, default=S, help="subset of ladder,martingale,taboo")
    c.add_argument("--taboo-time", dest="taboo_time", type=float, default=S)
    c.add_argument("--taboo-paths", dest="taboo_paths", type=int, default=S)

    w = sub.add_parser("williams", parents=[common], help="constructed vs direct path decomposition")
    w.add_argument("--model", choices=["bm", "stable"], default=S)
    w.add_argument("--mu", type=float, default=S)
    w.add_argument("--sigma", type=float, default=S)
    w.add_argument("--alpha", type=float, default=S)
    w.add_argument("--d", type=int, default=S)
    w.add_argument("--start", type=_floats, default=S)
    w.add_argument("--paths", type=int, default=S)
    w.add_argument("--dt", type=float, default=S)
    w.add_argument("--horizon", type=float, default=S, help="fixed time T for the X_T functional")
    w.add_argument("--sim-horizon", dest="sim_horizon", type=float, default=S)
    w.add_argument("--margin", type=float, default=S)
    w.add_argument("--delta", type=float, default=S)
    w.add_argument("--functionals", type=_words, default=S)
    w.add_argument("--ks-threshold", dest="ks_threshold", type=float, default=S)
    w.add_argument("--no-delta-check", dest="delta_check", action="store_false", default=S)

    t = sub.add_parser("selftest", parents=[common], help="run the acceptance suite")
    t.add_argument("--scale", choices=["reduced", "full"], default=S)
    t.add_argument("--only", type=_ints, default=S, help="comma-separated criterion numbers")
    return p


def load_config(path) -> dict:
    """Read a JSON config; errors carry line and column."""
    text = Path(path).read_text(encoding="utf-8")
    if not text.strip():
        return {}
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise UsageError(f"config parse error in {path} at line {e.lineno}, column {e.colno}: {e.msg}")
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    return data


def resolve_config(ns: argparse.Namespace) -> ExperimentConfig:
    sub = ns.subcommand
    flags = {k: v for k, v in vars(ns).items() if k not in ("subcommand", "config", "verbose")}
    file_vals = load_config(ns.config) if getattr(ns, "config", None) else {}
    allowed = set(DEFAULTS["common"]) | set(DEFAULTS[sub])
    unknown = set(file_vals) - allowed - {"subcommand"}
    if unknown:
        raise UsageError(f"unknown config keys for {sub}: {', '.join(sorted(unknown))}")
    merged = {**DEFAULTS["common"], **DEFAULTS[sub], **file_vals, **flags}
    params = {k: merged[k] for k in DEFAULTS[sub]}
    _validate(sub, params)
    threads = merged["threads"]
    if threads is None:
        threads = default_threads()
    if threads < 1:
        raise UsageError("--threads must be >= 1")
    out = Path(merged["out"]) if merged["out"] else Path("out") / sub
    return ExperimentConfig(sub, params, out, int(merged["seed"]), int(threads), bool(merged["figures"]),
                            sorted(k for k in flags if k in file_vals))


def _validate(sub: str, p: dict):
    """Parameter checks done before any simulation starts."""
    def need(cond, msg):
        if not cond:
            raise UsageError(msg)

    if "paths" in p:
        need(int(p["paths"]) >= 2, "paths must be >= 2")
    if "dt" in p:
        need(p["dt"] > 0, "dt must be > 0")
    if sub == "map-fluct":
        need(p["mu"] > 0 or set(p["checks"]) <= {"reversal"}, "mu must be > 0 for depth and occupation checks")
        need(p["sigma"] > 0, "sigma must be > 0")
        need(set(p["checks"]) <= {"depth", "occupation", "reversal"}, f"unknown checks {p['checks']}")
    elif sub == "stable":
        need(0 < p["alpha"] <= 2 and p["alpha"] < p["d"], "need 0 < alpha <= 2 and alpha < d")
        need(len(p["start"]) == p["d"], "start must have d coordinates")
        need(set(p["checks"]) <= {"pocr", "martingale", "harmonicity"}, f"unknown checks {p['checks']}")
        if "harmonicity" in p["checks"]:
            rin, rout = p["shell"]
            need(len(p["target"]) == len(p["harmonic_start"]) == p["d"],
                 "target and harmonic start need d coordinates")
            need(1.0 <= rin < rout < float(np.linalg.norm(p["harmonic_start"])),
                 "need 1 <= shell inner < shell outer < |harmonic start|")
    elif sub == "cone":
        need(0 < p["phi0"] < math.pi, "phi0 must lie in (0, pi)")
        need(abs(p["phi"]) < p["phi0"], "phi must lie inside the cone")
        need(set(p["checks"]) <= {"ladder", "martingale", "taboo"}, f"unknown checks {p['checks']}")
    elif sub == "williams":
        need(p["model"] in ("bm", "stable"), "--model {bm,stable} is required")
        need(p["delta"] > 0, "delta must be > 0")
        if p["model"] == "bm":
            need(p["mu"] > 0, "mu must be > 0")
        else:
            need(0 < p["alpha"] <= 2 and p["alpha"] < p["d"], "need 0 < alpha <= 2 and alpha < d")
            if p["start"] is not None:
                need(len(p["start"]) == p["d"], "start must have d coordinates")
    elif sub == "selftest":
        need(p["scale"] in ("reduced", "full"), "scale must be reduced or full")
        if p["only"]:
            need(set(p["only"]) <= set(range(1, 12)), "criteria are numbered 1..11")


# --------------------------------------------------------------------- output helpers

def write_table(path: Path, columns: Dict[str, Sequence]):
    """CSV with a header row and repr floats."""
    names = list(columns)
    cols = [np.asarray(columns[k]) for k in names]
    n = max(len(c) for c in cols)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for i in range(n):
            w.writerow([_fmt(c[i]) if i < len(c) else "" for c in cols])


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return "" if math.isnan(v) else repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def _quantile_table(named: Dict[str, np.ndarray], n: int = 99) -> Dict[str, np.ndarray]:
    q = np.linspace(0.01, 0.99, n)
    out = {"q": q}
    for k, v in named.items():
        v = np.asarray(v, dtype=float)
        v = v[np.isfinite(v)]
        out[k] = np.quantile(v, q) if v.size else np.full(n, np.nan)
    return out


# --------------------------------------------------------------------- runners

Result = Tuple[List[TestReport], Dict[str, Dict[str, Sequence]], dict]


def run_map_fluct(cfg: ExperimentConfig) -> Result:
    p = cfg.params
    reports, tables = [], {}
    plot = {}
    if "depth" in p["checks"]:
        r = mf.bm_pocr_ensemble(p["mu"], p["sigma"], p["paths"], p["horizon"], p["dt"], p["margin"], cfg.seed,
                                threads=cfg.threads)
        depth = r["depth"][r["ok"]]
        rate = 2 * p["mu"] / p["sigma"] ** 2
        stat, pv = ks_one_sample(depth, lambda y: 1 - np.exp(-rate * np.asarray(y)))
        reports.append(threshold_report("depth_law", stat, f"Exp({rate:g})", p["ks_threshold"], depth.size,
                                        cfg.seed, pv, horizon_fails=r["horizon_fails"]))
        tables["depth_samples.csv"] = {"depth": r["depth"], "gtime": r["gtime"], "ok": r["ok"].astype(int)}
        grid = np.linspace(0, np.quantile(depth, 0.995), 200)
        plot = {"kind": "ecdf", "x": grid, "empirical": np.searchsorted(np.sort(depth), grid) / depth.size,
                "model": 1 - np.exp(-rate * grid)}
    if "occupation" in p["checks"]:
        for name, g in (("exp", lambda y: np.exp(-y)), ("one", lambda y: np.ones_like(y, dtype=float))):
            r = mf.check_levy_occupation_identity(p["mu"], g, p["paths"], p["horizon"], p["dt"],
                                                  cfg.seed, sigma=p["sigma"], threads=cfg.threads,
                                                  name=f"occupation[g={name}]")
            for rep in r["reports"]:
                rep.threshold = p["rel_threshold"]
                rep.passed = rep.statistic <= rep.threshold
            reports.extend(r["reports"])
    if "reversal" in p["checks"]:
        reports.extend(mf.check_time_reversal(mf.MapModel.bm_drift(p["mu"], p["sigma"]), p["reversal_time"],
                                              p["paths"], p["dt"], cfg.seed, p["ks_threshold"], cfg.threads))
    return reports, tables, plot


def run_stable(cfg: ExperimentConfig) -> Result:
    p = cfg.params
    params = sc.StableParams(p["alpha"], p["d"])
    reports, tables, plot = [], {}, {}
    if "pocr" in p["checks"]:
        r = sc.direct_pocr_ensemble(params, p["start"], p["paths"], p["horizon"], cfg.seed, threads=cfg.threads)
        r0 = float(np.linalg.norm(p["start"]))
        u = r["rmin"][r["ok"]] / r0
        bins = np.linspace(0.0, 1.0, p["bins"] + 1)
        masses = np.diff(sc.pocr_radius_cdf(bins, params))
        stat, pv = chi_square_density_fit(u, bins, bin_masses=masses)
        reports.append(pvalue_report("pocr_radius_chi2", stat, "closest-reach law", p["p_floor"], pv, u.size,
                                     cfg.seed, horizon_fails=int((~r["ok"]).sum())))
        cols = {"rmin": r["rmin"], "gtime": r["gtime"], "r_T": r["rT"], "ok": r["ok"].astype(int)}
        for j in range(params.d):
            cols[f"xstar_{j}"] = r["xmin"][:, j]
        tables["pocr_samples.csv"] = cols
        hist = np.histogram(u, bins)[0] / u.size
        plot = {"kind": "hist", "left": bins[:-1], "right": bins[1:], "empirical": hist, "model": masses}
    if "martingale" in p["checks"]:
        reports.extend(sc.check_martingale_up(params, p["start"], 0.0, p["checkpoints"], p["paths"], cfg.seed,
                                              threads=cfg.threads))
    if "harmonicity" in p["checks"]:
        reports.append(sc.check_harmonicity_hdown(params, sc.Point(Angle(p["target"])), p["shell"],
                                                  p["harmonic_start"], p["paths"], cfg.seed, tol=p["rel_threshold"],
                                                  threads=cfg.threads))
    return reports, tables, plot


def run_cone(cfg: ExperimentConfig) -> Result:
    p = cfg.params
    cone = cn.ConeParams(p["phi0"])
    reports, tables, plot = [], {}, {}
    if "ladder" in p["checks"]:
        ens = cn.cone_pocr_ensemble(p["phi"], cone, p["paths"], cfg.seed, threads=cfg.threads)
        reports.extend(cn.ladder_tv_check(p["phi"], cone, p["paths"], cfg.seed, threshold=p["tv_threshold"],
                                          threads=cfg.threads, ensemble=ens))
        tables["ladder_samples.csv"] = {"depth": ens["depth"], "theta": ens["theta"], "weight": ens["weight"],
                                        "gtime": ens["gtime"], "ok": ens["ok"].astype(int)}
        edges = np.linspace(-cone.phi0, cone.phi0, 13)
        ok = ens["ok"]
        h = np.histogram(ens["theta"][ok], edges, weights=ens["weight"][ok])[0]
        law = cn.ladder_bin_masses(np.array([0.0, np.inf]), edges, p["phi"], cone, corrected=True)[0]
        lit = cn.ladder_bin_masses(np.array([0.0, np.inf]), edges, p["phi"], cone)[0]
        plot = {"kind": "hist", "left": edges[:-1], "right": edges[1:], "empirical": h / h.sum(), "model": law,
                "displayed_series": lit}
    if "martingale" in p["checks"]:
        x0 = [math.cos(p["phi"]), math.sin(p["phi"])]
        reports.extend(cn.check_cone_martingale(x0, cone, p["checkpoints"], p["paths"], cfg.seed,
                                                threads=cfg.threads))
    if "taboo" in p["checks"]:
        reports.append(cn.taboo_survival_mc(p["phi"], p["taboo_time"], cone, p["taboo_paths"], cfg.seed,
                                            threads=cfg.threads))
    return reports, tables, plot


def run_williams(cfg: ExperimentConfig) -> Result:
    p = cfg.params
    reports, tables = [], {}
    if p["model"] == "bm":
        funcs = p["functionals"] or ["depth", "x_T", "gtime"]
        thr = p["ks_threshold"] or 0.03
        direct = wl.classical_direct_ensemble(p["mu"], p["paths"], p["horizon"], p["dt"], as_child(cfg.seed, 1),
                                              p["sigma"], p["sim_horizon"], p["margin"], cfg.threads)
        cons = wl.classical_constructed_ensemble(p["mu"], p["paths"], p["horizon"], p["dt"],
                                                 as_child(cfg.seed, 2), p["sigma"], threads=cfg.threads)
        reports.append(wl.verify_decomposition(direct, cons, funcs, thr, "classical_decomposition", cfg.seed))
        rate = 2 * p["mu"] / p["sigma"] ** 2
        stat, pv = ks_one_sample(direct["depth"], lambda y: 1 - np.exp(-rate * np.asarray(y)))
        reports.append(threshold_report("depth_law", stat, f"Exp({rate:g})", thr, direct["depth"].size,
                                        cfg.seed, pv))
        reports.append(wl.conditional_independence(cons, seed=cfg.seed))
        keys = ["depth", "x_T", "gtime"]
    else:
        params = sc.StableParams(p["alpha"], p["d"])
        start = p["start"] or [1.0] + [0.0] * (p["d"] - 1)
        funcs = p["functionals"] or ["rmin", "r_T"]
        thr = p["ks_threshold"] or 0.05
        spec = wl.DecompositionSpec(wl.Stable(params), start, p["horizon"], p["dt"], p["paths"],
                                    delta_offset=p["delta"], seed=cfg.seed)
        direct, cons = wl.stable_ensembles(spec, threads=cfg.threads)
        reports.append(wl.verify_decomposition(direct, cons, funcs, thr, "stable_decomposition", cfg.seed))
        if p["delta_check"]:
            reports.append(wl.delta_stability(spec, direct, cons, funcs, threads=cfg.threads))
        keys = ["rmin", "r_T", "gtime"]
    tables["direct.csv"] = {k: direct[k] for k in keys}
    tables["constructed.csv"] = {k: cons[k] for k in keys}
    q = _quantile_table({**{f"direct_{k}": direct[k] for k in keys}, **{f"constructed_{k}": cons[k] for k in keys}})
    plot = {"kind": "qq", **q}
    return reports, tables, plot


def as_child(seed: int, k: int):
    return as_seed(seed).child(k)


def run_selftest(cfg: ExperimentConfig) -> Result:
    p = cfg.params
    only = p["only"] or list(range(1, 12))
    runs = [k for k in only if k != 11]
    res = acc.run_all(p["scale"], cfg.threads, runs, log=print) if runs else {}
    reports = [r for k in sorted(res) for r in res[k]]
    if 11 in only:
        det = acc.criterion_11("reduced", cfg.threads, runs or None)
        ok = all(r.passed for r in det)
        print(f"criterion 11: {'PASS' if ok else 'FAIL'}")
        for r in det:
            print("    " + r.line())
        reports.extend(det)
    summary = {"criterion": [], "passed": []}
    for k in sorted(res):
        summary["criterion"].append(k)
        summary["passed"].append(int(all(r.passed for r in res[k])))
    return reports, {"criteria.csv": summary}, {}


RUNNERS = {"map-fluct": run_map_fluct, "stable": run_stable, "cone": run_cone, "williams": run_williams,
           "selftest": run_selftest}


def run(cfg: ExperimentConfig) -> int:
    """Execute one configured experiment and write its outputs; returns the exit code."""
    cfg.out.mkdir(parents=True, exist_ok=True)
    (cfg.out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2, default=_jsonable) + "\n",
                                         encoding="utf-8")
    t0 = time.perf_counter()
    reports, tables, plot = RUNNERS[cfg.subcommand](cfg)
    elapsed = time.perf_counter() - t0
    (cfg.out / "report.json").write_text(acc.stable_json(reports) + "\n", encoding="utf-8")
    for name, cols in tables.items():
        write_table(cfg.out / name, cols)
    if plot:
        write_table(cfg.out / "plot_data.csv", {k: v for k, v in plot.items() if k != "kind"})
    info = {"timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(), "elapsed_s": elapsed,
            "volatile_reports": [r.to_dict() for r in reports if r.details.get("volatile")]}
    (cfg.out / "run_info.json").write_text(json.dumps(info, indent=2) + "\n", encoding="utf-8")
    if cfg.figures and plot:
        from .plotting import render
        render(plot, cfg.out / "figures", cfg.subcommand)
    for r in reports:
        if cfg.subcommand != "selftest":
            print(r.line())
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def _jsonable(v):
    if isinstance(v, Path):
        return str(v)
    if isinstance(v, np.generic):
        return v.item()
    raise TypeError(type(v))


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        if not ns.subcommand:
            parser.print_usage(sys.stderr)
            raise UsageError("a subcommand is required: " + ", ".join(SUBCOMMANDS))
        logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        cfg = resolve_config(ns)
    except UsageError as e:
        if not str(e).startswith(parser.prog):
            parser.print_usage(sys.stderr)
        print(str(e), file=sys.stderr)
        return EXIT_USAGE
    except (OSError, DomainError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return run(cfg)
    except DomainError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
