"""Experiment orchestration: subcommands, manifests, CSV/JSON/SVG emission.

Every run writes a manifest (full config echo, seed, version, wall time,
failure count) next to its outputs.  Given the same config and seed, every
CSV byte reproduces; ``perclab rerun --manifest`` replays a run from its
manifest and is the determinism check of record.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import analysis, graphmetrics, invasion, percolation, walk
from .config import EXPERIMENT_KINDS, ExperimentConfig
from .lattice import Annulus, Box, WeightField, chebyshev, derive_seed
from .percolation import ArmSpec
from .subgraph import full_box_graph

try:
    from importlib.metadata import version as _pkg_version
    VERSION = _pkg_version("perclab")
except Exception:  # pragma: no cover
    VERSION = "unknown"

# seed-stream tags so environments, walks and estimators never collide
TAG_ENV = 3001
TAG_WALK = 7001
TAG_MC = 9001


def fmt(v) -> str:
    """CSV field formatting: floats at 17 significant digits."""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


class Run:
    """Collects artifacts and failures for one experiment run."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.out = Path(config.out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.outputs: list[str] = []
        self.failures = 0
        self.summary: dict = {}

    def write_csv(self, name: str, header: list[str], rows: list[tuple]):
        path = self.out / name
        with open(path, "w") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(fmt(v) for v in row) + "\n")
        self.outputs.append(name)

    def write_text(self, name: str, text: str):
        (self.out / name).write_text(text)
        self.outputs.append(name)

    def finish(self, t0: float) -> dict:
        manifest = {
            "config": dataclasses.asdict(self.config),
            "seed": self.config.seed,
            "version": VERSION,
            "wall_time_s": round(time.time() - t0, 3),
            "failures": self.failures,
            "outputs": self.outputs,
            "summary": self.summary,
        }
        with open(self.out / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
        return manifest


def emit_fit_plot(run: Run, name: str, fit: analysis.ExponentFit, title: str):
    """Data-first plotting: a gnuplot script always, an SVG when matplotlib
    cooperates."""
    gp = [f"# gnuplot script for {title}",
          "set logscale xy 2",
          f"set title '{title} (slope {fit.slope:.3f})'",
          f"plot '{name}.dat' using 1:2 with points, "
          f"2**({fit.intercept:.6g}) * x**({fit.slope:.6g})"]
    dat = "\n".join(f"{2 ** x:.17g} {2 ** y:.17g}" for x, y in fit.points)
    run.write_text(f"{name}.dat", dat + "\n")
    run.write_text(f"{name}.gp", "\n".join(gp) + "\n")
    if not run.config.plots:
        return
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except Exception:
        return
    fig, ax = plt.subplots(figsize=(5, 4))
    xs = [x for x, _ in fit.points]
    ys = [y for _, y in fit.points]
    ax.scatter(xs, ys, label="data")
    grid = np.linspace(min(xs), max(xs), 50)
    ax.plot(grid, fit.intercept + fit.slope * grid,
            label=f"slope {fit.slope:.3f}")
    ax.set_xlabel("log2 n")
    ax.set_ylabel("log2 value")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(run.out / f"{name}.svg", metadata={"Date": None})
    plt.close(fig)
    run.outputs.append(f"{name}.svg")


# --- experiments ---------------------------------------------------------------


def run_arms(run: Run) -> None:
    cfg = run.config
    rows = []
    by_kind: dict[str, list[tuple[int, analysis.Estimate]]] = {}
    for kind in cfg.arm_kinds:
        for p in cfg.p_values:
            for n in cfg.radii:
                if kind == "four_arm_alternating" and n < 2:
                    continue
                spec = ArmSpec(kind, n, p, box_factor=cfg.box_factor)
                est = analysis.arm_probability(spec, cfg.replicas, cfg.seed,
                                               workers=cfg.workers)
                rows.append((kind, n, p, est.mean, est.stderr, est.replicas,
                             cfg.seed))
                if p == 0.5:
                    by_kind.setdefault(kind, []).append((n, est))
    run.write_csv("arms.csv",
                  ["statistic", "n", "p", "estimate", "stderr", "replicas",
                   "seed"], rows)

    fits = {}
    for kind, pts in by_kind.items():
        usable = [(n, e.mean) for n, e in pts if e.mean > 0]
        if len(usable) >= 3:
            fit = analysis.fit_exponent(usable)
            eta = -fit.slope
            fits[kind] = {"slope": fit.slope, "eta": eta,
                          "ci95": list(fit.ci95),
                          "points": [list(pt) for pt in fit.points]}
            emit_fit_plot(run, f"fit_{kind}", fit, f"{kind} probability")
    # soft exponent-bound checks: flag only when the whole CI escapes
    checks = {}
    if "one_arm_halfplane" in fits:
        lo, hi = (-b for b in reversed(fits["one_arm_halfplane"]["ci95"]))
        checks["eta1_in_(0,1/2]"] = "violated" if lo > 0.5 or hi <= 0 else "ok"
    if "two_arm_box" in fits:
        lo, hi = (-b for b in reversed(fits["two_arm_box"]["ci95"]))
        checks["eta2_in_(eta1,1]"] = "violated" if lo > 1.0 else "ok"
    ratio_check = None
    if "two_arm_box" in by_kind and len(by_kind["two_arm_box"]) >= 2:
        pts = by_kind["two_arm_box"]
        vals = []
        for i, (r, er) in enumerate(pts):
            for s, es in pts[i:]:
                if es.mean > 0:
                    vals.append((r, s, er.mean * r / (es.mean * s)))
        ratio_check = {"min": min(v for _, _, v in vals),
                       "pairs": [[r, s, v] for r, s, v in vals]}
    run.summary = {"fits": fits, "bound_checks": checks,
                   "two_arm_ratio": ratio_check}


def run_corrlen(run: Run) -> None:
    cfg = run.config
    sigma_rows = []
    corr_rows = []
    lengths = {}
    for p in cfg.p_values:
        L = analysis.correlation_length(p, cfg.eps, cfg.replicas, cfg.n_grid,
                                        cfg.seed, workers=cfg.workers)
        lengths[p] = L.value
        corr_rows.append((p, cfg.eps, -1 if L.value is None else L.value,
                          cfg.replicas, cfg.seed))
        for n, est in L.table:
            sigma_rows.append((p, n, est.mean, est.stderr, est.replicas,
                               cfg.seed))
    run.write_csv("corrlen.csv",
                  ["p", "eps", "L", "replicas", "seed"], corr_rows)
    run.write_csv("sigma.csv",
                  ["p", "n", "sigma", "stderr", "replicas", "seed"], sigma_rows)

    scaling = analysis.scaling_relation(cfg.p_values, cfg.eps, cfg.replicas,
                                        max(cfg.replicas, 4000), cfg.n_grid,
                                        cfg.seed, workers=cfg.workers)
    rows = []
    products = []
    for r in scaling:
        rows.append((r.p, -1 if r.length is None else r.length,
                     0.0 if r.pi4 is None else r.pi4.mean,
                     0.0 if r.pi4 is None else r.pi4.stderr,
                     0.0 if r.product is None else r.product,
                     0.0 if r.product_stderr is None else r.product_stderr,
                     r.flagged or ""))
        if r.product is not None:
            products.append(r.product)
    run.write_csv("scaling.csv",
                  ["p", "L", "pi4", "pi4_stderr", "product", "product_stderr",
                   "flag"], rows)
    spread = (max(products) / min(products)) if len(products) >= 2 and \
        min(products) > 0 else None
    run.summary = {"lengths": {str(p): v for p, v in lengths.items()},
                   "product_spread": spread}


def _grow_env(cfg: ExperimentConfig, env: int, n: int) -> invasion.InvasionCluster:
    field = WeightField(derive_seed(cfg.seed, TAG_ENV, env))
    stop = invasion.StopRule.for_window(
        n, radius_factor=cfg.radius_factor, delta=cfg.delta,
        edge_budget=cfg.budget if cfg.budget else None)
    return invasion.grow(field, stop)


def run_invade(run: Run) -> None:
    cfg = run.config
    rows = []
    for i in range(cfg.count):
        cluster = _grow_env(cfg, i, cfg.n)
        stats = invasion.trace_stats(cluster)
        name = f"snapshot_{i:03d}.txt"
        with open(run.out / name, "w") as fh:
            invasion.write_snapshot(cluster, fh)
        run.outputs.append(name)
        rows.append((i, cluster.seed, cluster.n_steps, cluster.reached_radius,
                     cluster.stopped_by, len(stats.record_weights),
                     stats.record_weights[-1],
                     stats.max_weight_after(cluster.n_steps // 2)))
    run.write_csv("invade.csv",
                  ["cluster", "seed", "steps", "reached_radius", "stopped_by",
                   "outlets", "last_record", "max_weight_after_half"], rows)
    run.summary = {"clusters": cfg.count}


def run_chemdist(run: Run) -> None:
    cfg = run.config
    n_max = max(cfg.radii)
    rows = []
    means: dict[int, list[float]] = {n: [] for n in cfg.radii}
    for env in range(cfg.envs):
        try:
            cluster = _grow_env(cfg, env, n_max)
            for n in cfg.radii:
                lam = invasion.window(cluster, Box((0, 0), n))
                ring = [s for s in lam.sites() if chebyshev(s) == n]
                d = graphmetrics.chemical_distance(lam, [(0, 0)], ring)
                rows.append((env, n, -1 if math.isinf(d) else int(d)))
                if not math.isinf(d):
                    means[n].append(d)
        except Exception as exc:  # noqa: BLE001 - recorded, run continues
            run.failures += 1
            print(f"env {env} failed: {exc}", file=sys.stderr)
    run.write_csv("chemdist.csv", ["env", "n", "distance"], rows)
    pts = [(n, float(np.mean(v))) for n, v in means.items() if v]
    summary = {"envs": cfg.envs}
    if len(pts) >= 3:
        fit = analysis.fit_exponent(pts)
        summary["fit"] = {"slope": fit.slope, "ci95": list(fit.ci95)}
        emit_fit_plot(run, "fit_chemdist", fit, "chemical distance vs n")
    run.summary = summary


def run_exit_scan(run: Run) -> None:
    cfg = run.config
    radii = sorted(cfg.radii)
    n_max = radii[-1]
    cap = cfg.step_cap_factor * n_max ** 4
    rows = []
    sums: dict[int, list[float]] = {n: [] for n in radii}

    def record(env: int, times: np.ndarray, capped: np.ndarray):
        for w_i in range(times.shape[0]):
            for j, n in enumerate(radii):
                rows.append((cfg.host, env, w_i, n, int(times[w_i, j]),
                             bool(capped[w_i])))
                if not capped[w_i]:
                    sums[n].append(float(times[w_i, j]))

    if cfg.host == "full-lattice":
        g = full_box_graph(n_max)
        rng = np.random.default_rng(derive_seed(cfg.seed, TAG_WALK, 0))
        times, capped = walk.passage_times_batch(g, (0, 0), radii,
                                                 cfg.envs * cfg.walks, rng,
                                                 cap=cap)
        record(0, times, capped)
    else:
        for env in range(cfg.envs):
            try:
                if cfg.host == "ipc":
                    cluster = _grow_env(cfg, env, n_max)
                    g = invasion.window(cluster, Box((0, 0), n_max))
                elif cfg.host == "iic":
                    l = cfg.l if cfg.l else 3 * n_max
                    sample = analysis.iic_sample(l, n_max, cfg.max_rejections,
                                                 derive_seed(cfg.seed, TAG_ENV,
                                                             env))
                    g = sample.subgraph
                else:
                    raise ValueError(f"unknown host {cfg.host!r}")
                rng = np.random.default_rng(derive_seed(cfg.seed, TAG_WALK,
                                                        env))
                times, capped = walk.passage_times_batch(g, (0, 0), radii,
                                                         cfg.walks, rng,
                                                         cap=cap)
                record(env, times, capped)
            except Exception as exc:  # noqa: BLE001
                run.failures += 1
                print(f"env {env} failed: {exc}", file=sys.stderr)
    run.write_csv("exitscan.csv",
                  ["host", "env", "walk", "n", "tau", "capped"], rows)
    pts = [(n, float(np.mean(v))) for n, v in sums.items() if v]
    summary = {"host": cfg.host}
    if len(pts) >= 3:
        fit = analysis.fit_exponent(pts)
        summary["fit"] = {"slope": fit.slope, "ci95": list(fit.ci95),
                          "points": pts}
        emit_fit_plot(run, f"fit_exit_{cfg.host}", fit,
                      f"exit time vs n ({cfg.host})")
    run.summary = summary


def run_backbone_stats(run: Run) -> None:
    cfg = run.config
    n = cfg.n
    if n % 3:
        raise SystemExit(f"backbone-stats needs n divisible by 3, got {n}")
    m = n // 3
    kesten_rows = []
    ratio_rows = []
    volume_rows = []
    ratio_medians: dict[int, list[float]] = {q: [] for q in cfg.q_values}

    rho_cache: dict[int, analysis.Estimate] = {}

    def rho(radius: int) -> analysis.Estimate:
        if radius not in rho_cache:
            rho_cache[radius] = analysis.arm_probability(
                ArmSpec("two_arm_box", radius, 0.5), max(cfg.replicas, 2000),
                derive_seed(cfg.seed, TAG_MC, radius), workers=cfg.workers)
        return rho_cache[radius]

    for env in range(cfg.envs):
        try:
            cluster = _grow_env(cfg, env, n)
            lam_win = invasion.window(cluster, Box((0, 0), n))
            gamma = invasion.window(cluster, Annulus((0, 0), m, n))
            bb = graphmetrics.annulus_backbone(gamma, m, n)
            for q in cfg.q_values:
                stats = analysis.backbone_volume_stats(
                    [(gamma, m, n)], q, rho(q).mean, rho(n).mean)[0]
                volume_rows.append((env, q, stats.mean_count, stats.max_count,
                                    stats.yardstick, stats.total_backbone,
                                    stats.total_yardstick,
                                    stats.tail_fractions.get(10.0, 0.0)))
            for w_i in range(cfg.walks):
                rng = np.random.default_rng(derive_seed(cfg.seed, TAG_WALK,
                                                        env, w_i))
                res = walk.annulus_walk(lam_win, m, rng)
                if res.capped:
                    run.failures += 1
                    continue
                b = walk.backbone_time(res.trace, bb)
                for q in cfg.q_values:
                    traj = walk.box_trajectory(res.trace, q, gamma, bb)
                    lam_tot = traj.lambda_total()
                    th_tot = traj.theta_total()
                    ok = True
                    if th_tot > 0:
                        ok = (1 + res.sigma_star) / (1 + b) >= \
                            lam_tot / (16.0 * th_tot)
                    kesten_rows.append((env, w_i, q, res.sigma_star, b,
                                        lam_tot, th_tot, ok))
                    csize = sum(len(c) for c in traj.components)
                    bsize = sum(len(c & bb) for c in traj.components)
                    if bsize:
                        ratio_rows.append((env, w_i, q, csize, bsize,
                                           csize / bsize))
                        ratio_medians[q].append(csize / bsize)
        except Exception as exc:  # noqa: BLE001
            run.failures += 1
            print(f"env {env} failed: {exc}", file=sys.stderr)
    run.write_csv("kesten.csv",
                  ["env", "walk", "q", "sigma_star", "b", "lambda_total",
                   "theta_total", "ratio_ok"], kesten_rows)
    run.write_csv("ratios.csv",
                  ["env", "walk", "q", "cluster_sites", "backbone_sites",
                   "ratio"], ratio_rows)
    run.write_csv("volumes.csv",
                  ["env", "q", "mean_frame_count", "max_frame_count",
                   "yardstick", "total_backbone", "total_yardstick",
                   "tail_fraction_c10"], volume_rows)
    medians = {q: float(np.median(v)) if v else None
               for q, v in ratio_medians.items()}
    all_ok = all(bool(r[7]) for r in kesten_rows) if kesten_rows else None
    run.summary = {"ratio_medians": {str(q): v for q, v in medians.items()},
                   "kesten_inequality_all": all_ok,
                   "rho": {str(r): rho_cache[r].mean for r in rho_cache}}


def run_kappa(run: Run) -> None:
    cfg = run.config
    eta1 = Fraction(cfg.eta1)
    eta2 = Fraction(cfg.eta2)
    rows = []
    kappa = analysis.kappa_bound(analysis.KappaInputs(eta1, eta2, cfg.variant))
    rows.append(("kappa_bound", cfg.variant, str(eta1), str(eta2), "", "",
                 str(kappa)))
    print(kappa)
    if cfg.s2:
        s1 = Fraction(cfg.s1)
        s2 = Fraction(cfg.s2)
        variant = cfg.variant if cfg.variant != "eta2-lower-bound" else "square"
        a_max = analysis.exit_exponent_bound(s1, s2, eta1, eta2, variant)
        rows.append(("exit_exponent_bound", variant, str(eta1), str(eta2),
                     str(s1), str(s2), str(a_max)))
        print(a_max)
    if cfg.variant == "hexagonal":
        kf = analysis.kappa_from_distance_exponents(eta1, eta2, "hexagonal")
        rows.append(("kappa_form", "hexagonal", str(eta1), str(eta2), "1",
                     str(2 - eta2), str(kf)))
    run.write_csv("kappa.csv",
                  ["quantity", "variant", "eta1", "eta2", "s1", "s2", "value"],
                  rows)
    run.summary = {"kappa": str(kappa)}


def run_iic(run: Run) -> None:
    cfg = run.config
    n = cfg.n
    l = cfg.l if cfg.l else 3 * n
    rows = []
    for i in range(cfg.count):
        try:
            sample = analysis.iic_sample(l, n, cfg.max_rejections,
                                         derive_seed(cfg.seed, TAG_ENV, i),
                                         min_separation=cfg.min_separation)
            g = sample.subgraph
            name = f"iic_{i:03d}.txt"
            lines = [f"# perclab-iic l={l} n={n} attempts={sample.attempts} "
                     f"seed={sample.accepted_seed}"]
            lines += [f"{u[0]} {u[1]} {v[0]} {v[1]}" for u, v in sorted(g.edges())]
            run.write_text(name, "\n".join(lines) + "\n")
            rows.append((i, sample.attempts, g.n_sites, g.n_edges))
        except analysis.RejectionBudgetExceeded as exc:
            run.failures += 1
            rows.append((i, exc.attempts, 0, 0))
    run.write_csv("iic.csv", ["sample", "attempts", "sites", "edges"], rows)
    accepted = [r for r in rows if r[2] > 0]
    run.summary = {"accepted": len(accepted),
                   "mean_attempts": (float(np.mean([r[1] for r in accepted]))
                                     if accepted else None)}


RUNNERS = {
    "arms": run_arms,
    "corrlen": run_corrlen,
    "invade": run_invade,
    "chemdist": run_chemdist,
    "exit-scan": run_exit_scan,
    "backbone-stats": run_backbone_stats,
    "kappa": run_kappa,
    "iic": run_iic,
}


def run(config: ExperimentConfig) -> dict:
    t0 = time.time()
    r = Run(config)
    RUNNERS[config.kind](r)
    return r.finish(t0)


# --- argument parsing ------------------------------------------------------------


def _add_common(sp):
    sp.add_argument("--seed", type=int, default=1)
    sp.add_argument("--out", default="", help="output directory "
                    "(default: $PERCLAB_OUTDIR or .)")
    sp.add_argument("--replicas", type=int, default=None)
    sp.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    sp.add_argument("--no-plots", action="store_true")


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v]


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="perclab",
        description="2D invasion/critical percolation and random-walk lab")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("arms", help="arm-probability scans")
    _add_common(sp)
    sp.add_argument("--kinds", default="one_arm_box,two_arm_box")
    sp.add_argument("--radii", type=_ints, default=[4, 8, 16, 32])
    sp.add_argument("--p", type=_floats, default=[0.5])
    sp.add_argument("--box-factor", type=int, default=2)

    sp = sub.add_parser("corrlen", help="correlation length and the "
                        "near-critical product")
    _add_common(sp)
    sp.add_argument("--p", type=_floats,
                    default=[0.52, 0.54, 0.56, 0.58, 0.6])
    sp.add_argument("--eps", type=float, default=0.02)
    sp.add_argument("--n-grid", type=_ints, default=[2, 4, 8, 16, 32, 64])

    sp = sub.add_parser("invade", help="grow invasion clusters, write "
                        "snapshots and trace stats")
    _add_common(sp)
    sp.add_argument("--n", type=int, default=48)
    sp.add_argument("--count", type=int, default=1)
    sp.add_argument("--budget", type=int, default=0)
    sp.add_argument("--radius-factor", type=int, default=2)
    sp.add_argument("--delta", type=float, default=0.05)

    sp = sub.add_parser("chemdist", help="chemical distance scan on "
                        "invasion windows")
    _add_common(sp)
    sp.add_argument("--radii", type=_ints, default=[16, 32, 64, 128])
    sp.add_argument("--envs", type=int, default=50)
    sp.add_argument("--budget", type=int, default=0)

    sp = sub.add_parser("exit-scan", help="exit-time scaling on a host family")
    _add_common(sp)
    sp.add_argument("--host", choices=["ipc", "full-lattice", "iic"],
                    default="ipc")
    sp.add_argument("--n", type=_ints, default=[8, 16, 32, 64])
    sp.add_argument("--envs", type=int, default=20)
    sp.add_argument("--walks", type=int, default=50)
    sp.add_argument("--budget", type=int, default=0)
    sp.add_argument("--cap-factor", type=int, default=64)

    sp = sub.add_parser("backbone-stats", help="annulus backbone volumes and "
                        "the walk-time comparison")
    _add_common(sp)
    sp.add_argument("--n", type=int, default=48)
    sp.add_argument("--q", type=_ints, default=[4, 8, 16])
    sp.add_argument("--envs", type=int, default=10)
    sp.add_argument("--walks", type=int, default=6)
    sp.add_argument("--budget", type=int, default=0)

    sp = sub.add_parser("kappa", help="exact exponent arithmetic")
    _add_common(sp)
    sp.add_argument("--eta1", default="5/48")
    sp.add_argument("--eta2", default="17/48")
    sp.add_argument("--variant",
                    choices=["square", "hexagonal", "eta2-lower-bound"],
                    default="hexagonal")
    sp.add_argument("--s1", default="1")
    sp.add_argument("--s2", default="")

    sp = sub.add_parser("iic", help="conditioned critical clusters by "
                        "rejection sampling")
    _add_common(sp)
    sp.add_argument("--n", type=int, default=16)
    sp.add_argument("--l", type=int, default=0)
    sp.add_argument("--count", type=int, default=1)
    sp.add_argument("--max-rejections", type=int, default=1000)
    sp.add_argument("--min-separation", type=int, default=3)

    sp = sub.add_parser("rerun", help="replay a run from its manifest")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--out", default="")
    return ap


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    kind = args.command
    kw: dict = {"kind": kind, "seed": args.seed, "workers": args.workers,
                "plots": not args.no_plots}
    if args.out:
        kw["out_dir"] = args.out
    if args.replicas is not None:
        kw["replicas"] = args.replicas
    if kind == "arms":
        kw.update(arm_kinds=args.kinds.split(","), radii=args.radii,
                  p_values=args.p, box_factor=args.box_factor)
        kw.setdefault("replicas", 2000)
    elif kind == "corrlen":
        kw.update(p_values=args.p, eps=args.eps, n_grid=args.n_grid)
    elif kind == "invade":
        kw.update(n=args.n, count=args.count, budget=args.budget,
                  radius_factor=args.radius_factor, delta=args.delta)
    elif kind == "chemdist":
        kw.update(radii=args.radii, envs=args.envs, budget=args.budget)
    elif kind == "exit-scan":
        kw.update(host=args.host, radii=args.n, envs=args.envs,
                  walks=args.walks, budget=args.budget,
                  step_cap_factor=args.cap_factor)
    elif kind == "backbone-stats":
        kw.update(n=args.n, q_values=args.q, envs=args.envs, walks=args.walks,
                  budget=args.budget)
    elif kind == "kappa":
        kw.update(eta1=args.eta1, eta2=args.eta2, variant=args.variant,
                  s1=args.s1, s2=args.s2)
    elif kind == "iic":
        kw.update(n=args.n, l=args.l, count=args.count,
                  max_rejections=args.max_rejections,
                  min_separation=args.min_separation)
    return ExperimentConfig(**kw)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "rerun":
        manifest = json.loads(Path(args.manifest).read_text())
        cfg = ExperimentConfig(**manifest["config"])
        if args.out:
            cfg.out_dir = args.out
        run(cfg)
        return 0
    try:
        cfg = config_from_args(args)
    except ValueError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2
    run(cfg)
    return 0


if __name__ == "__main__":
    sys.exit(main())
