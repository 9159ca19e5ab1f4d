"""Monte Carlo estimators, power-law fits, correlation-length machinery,
scaling-relation checks, exponent arithmetic and the conditioned-cluster
sampler.

All logarithms here are base 2; exponent fits regress log2 against log2 so
slopes read directly as exponents.  Exact inequalities between exponents
are evaluated in rational arithmetic, never floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy import stats as sstats

from . import gridflow
from .lattice import Site, WeightField, derive_seed
from .percolation import ArmSpec, arm_event
from .subgraph import SiteSubgraph

P_C = 0.5


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo mean with its standard error and replica count."""

    mean: float
    stderr: float
    replicas: int

    def within(self, target: float, n_sigma: float = 3.0) -> bool:
        return abs(self.mean - target) <= n_sigma * max(self.stderr, 1e-300)


def estimate_from_values(values: Sequence[float]) -> Estimate:
    arr = np.asarray(values, dtype=np.float64)
    if len(arr) < 2:
        raise ValueError("need at least 2 replicas for a standard error")
    return Estimate(mean=float(arr.mean()),
                    stderr=float(arr.std(ddof=1) / math.sqrt(len(arr))),
                    replicas=len(arr))


def mc_estimate(stat: Callable[[int], float], replicas: int, master_seed: int,
                workers: int = 1, stat_args: tuple = ()) -> Estimate:
    """Estimate E[stat] over derived-seed replicas.

    Replica r evaluates ``stat(derive_seed(master_seed, r), *stat_args)``.
    Values are stored by replica index and reduced in index order, so the
    result is bit-identical however the evaluations are scheduled.
    """
    if replicas < 2:
        raise ValueError("need at least 2 replicas")
    values = np.empty(replicas, dtype=np.float64)
    if workers <= 1:
        for r in range(replicas):
            values[r] = stat(derive_seed(master_seed, r), *stat_args)
    else:
        import multiprocessing as mp

        chunks = [(stat, master_seed, lo, min(lo + _CHUNK, replicas), stat_args)
                  for lo in range(0, replicas, _CHUNK)]
        with mp.Pool(processes=workers) as pool:
            for lo, vals in pool.imap_unordered(_run_chunk, chunks):
                values[lo:lo + len(vals)] = vals
    return estimate_from_values(values)


_CHUNK = 256


def _run_chunk(args):
    stat, master_seed, lo, hi, stat_args = args
    return lo, [stat(derive_seed(master_seed, r), *stat_args)
                for r in range(lo, hi)]


# --- event probability estimators ---------------------------------------------


def _arm_stat(seed: int, spec: ArmSpec) -> float:
    return 1.0 if arm_event(WeightField(seed), spec) else 0.0


def arm_probability(spec: ArmSpec, replicas: int, master_seed: int,
                    workers: int = 1) -> Estimate:
    """Monte Carlo probability of an arm event over independent fields."""
    return mc_estimate(_arm_stat, replicas, master_seed, workers=workers,
                       stat_args=(spec,))


def _crossing_stat(seed: int, w: int, h: int, p: float) -> float:
    return 1.0 if gridflow.crossing_event(WeightField(seed), p, w, h, (0, 0),
                                          "horizontal") else 0.0


def crossing_probability(n: int, m: int, p: float, replicas: int,
                         master_seed: int, workers: int = 1) -> Estimate:
    """Probability of an open horizontal crossing of the n x m cell rectangle."""
    return mc_estimate(_crossing_stat, replicas, master_seed, workers=workers,
                       stat_args=(n, m, p))


# --- exponent regression -------------------------------------------------------


@dataclass(frozen=True)
class ExponentFit:
    """Least-squares power-law fit on log2-log2 pairs."""

    slope: float
    intercept: float
    ci95: tuple[float, float]
    points: tuple[tuple[float, float], ...]

    @property
    def ci_width(self) -> float:
        return self.ci95[1] - self.ci95[0]


def fit_exponent(points: Sequence[tuple[float, float]]) -> ExponentFit:
    """Fit value ~ c * n^slope by ordinary least squares on log2 scales.

    The 95% interval uses the standard OLS slope variance with the
    t-distribution on len(points) - 2 degrees of freedom.
    """
    if len(points) < 3:
        raise ValueError("need at least 3 points to fit an exponent")
    for n, v in points:
        if v <= 0 or n <= 0:
            raise ValueError(f"nonpositive point ({n}, {v}) in log-log fit")
    xs = np.log2([float(n) for n, _ in points])
    ys = np.log2([float(v) for _, v in points])
    n = len(xs)
    xbar = xs.mean()
    sxx = float(((xs - xbar) ** 2).sum())
    slope = float(((xs - xbar) * (ys - ys.mean())).sum() / sxx)
    intercept = float(ys.mean() - slope * xbar)
    resid = ys - (intercept + slope * xs)
    if n > 2:
        s2 = float((resid ** 2).sum() / (n - 2))
        se = math.sqrt(s2 / sxx)
        tq = float(sstats.t.ppf(0.975, n - 2))
        ci = (slope - tq * se, slope + tq * se)
    else:
        ci = (slope, slope)
    return ExponentFit(slope=slope, intercept=intercept, ci95=ci,
                       points=tuple(zip(xs.tolist(), ys.tolist())))


# --- correlation length --------------------------------------------------------


@dataclass
class CorrelationLength:
    """Finite-size scaling length estimate at one p.

    ``value`` is the smallest grid n whose square-crossing probability
    clears 1 - eps by at least one standard error (the conservative reading
    used throughout); None when no grid point qualifies.
    """

    p: float
    eps: float
    value: int | None
    table: list[tuple[int, Estimate]]

    @property
    def exceeds_grid(self) -> bool:
        return self.value is None


def correlation_length(p: float, eps: float, replicas: int,
                       n_grid: Sequence[int], master_seed: int,
                       workers: int = 1) -> CorrelationLength:
    """L(p, eps): smallest n with square-crossing probability >= 1 - eps.

    Evaluated on the supplied ascending n grid with shared replica seeds, so
    estimates at different p are coupled through the same weight fields and
    the resulting L is monotone in p seed for seed.  Scanning stops at the
    first qualifying n.
    """
    if not 0.5 < p <= 1.0:
        raise ValueError("correlation length needs p in (1/2, 1]")
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    table = []
    value = None
    for n in sorted(n_grid):
        est = crossing_probability(n, n, p, replicas, master_seed,
                                   workers=workers)
        table.append((n, est))
        if est.mean - est.stderr >= 1.0 - eps:
            value = n
            break
    return CorrelationLength(p=p, eps=eps, value=value, table=table)


# --- iterated-log scale table ---------------------------------------------------


def log_star(n: int | float) -> int:
    """Iterations of log2 needed to bring n to at most 16."""
    if n < 16:
        raise ValueError("log* is defined here for n >= 16")
    j = 0
    x = float(n)
    while True:
        x = math.log2(x)
        j += 1
        if x <= 16:
            return j


def iterated_log(n: int | float, j: int) -> float:
    x = float(n)
    for _ in range(j):
        x = math.log2(x)
    return x


@dataclass
class ScaleRow:
    j: int
    log_j: float
    target: float          # n / (M * log_j)
    p: float | None        # min p with L(p) <= target, within bisection tol
    length: int | None     # L(p) at the found p


@dataclass
class ScaleTable:
    n: int
    M: float
    rows: list[ScaleRow]

    @property
    def log_star(self) -> int:
        return len(self.rows)


def scale_table(n: int, M: float, eps: float, replicas: int,
                n_grid: Sequence[int], master_seed: int,
                p_tol: float = 2.0 ** -12, workers: int = 1) -> ScaleTable:
    """Per-level scales p_n(j) for j = 1..log*(n).

    p_n(j) is located by bisection over p of the monotone condition
    L(p) <= n / (M log^(j) n); the bisection stops at ``p_tol`` in p.
    Levels whose target is below the reach of the n grid carry None.
    """
    if n < 16:
        raise ValueError("scale table needs n >= 16")
    if M <= 0:
        raise ValueError("M must be positive")
    rows = []
    for j in range(1, log_star(n) + 1):
        lj = iterated_log(n, j)
        target = n / (M * lj)
        row = ScaleRow(j=j, log_j=lj, target=target, p=None, length=None)
        grid = [g for g in sorted(n_grid) if g <= target]
        if grid:
            def qualifies(p: float) -> int | None:
                L = correlation_length(p, eps, replicas, grid, master_seed,
                                       workers=workers)
                return L.value

            if qualifies(1.0) is not None:
                lo, hi = P_C, 1.0  # no-yes bracket
                while hi - lo > p_tol:
                    mid = 0.5 * (lo + hi)
                    if qualifies(mid) is not None:
                        hi = mid
                    else:
                        lo = mid
                row.p = hi
                row.length = qualifies(hi)
        rows.append(row)
    return ScaleTable(n=n, M=M, rows=rows)


# --- near-critical scaling relation ---------------------------------------------


@dataclass
class ScalingRow:
    p: float
    length: int | None
    pi4: Estimate | None
    product: float | None
    product_stderr: float | None
    flagged: str | None = None


def scaling_relation(p_grid: Sequence[float], eps: float,
                     replicas_length: int, replicas_arm: int,
                     n_grid: Sequence[int], master_seed: int,
                     workers: int = 1) -> list[ScalingRow]:
    """Products (p - 1/2) * L(p)^2 * pi4(L(p)) across a p grid.

    The four-arm probability is evaluated at criticality with radius L(p).
    Rows whose correlation length exceeds the grid are flagged and carry no
    product.
    """
    rows = []
    for p in p_grid:
        L = correlation_length(p, eps, replicas_length, n_grid, master_seed,
                               workers=workers)
        if L.value is None:
            rows.append(ScalingRow(p=p, length=None, pi4=None, product=None,
                                   product_stderr=None, flagged="exceeds grid"))
            continue
        radius = max(L.value, 2)  # four-arm events are defined from radius 2
        pi4 = arm_probability(ArmSpec("four_arm_alternating", radius, P_C),
                              replicas_arm, derive_seed(master_seed, 104729),
                              workers=workers)
        scale = (p - P_C) * L.value ** 2
        rows.append(ScalingRow(p=p, length=L.value, pi4=pi4,
                               product=scale * pi4.mean,
                               product_stderr=scale * pi4.stderr))
    return rows


# --- exponent arithmetic ---------------------------------------------------------


KAPPA_VARIANTS = ("square", "hexagonal", "eta2-lower-bound")


@dataclass(frozen=True)
class KappaInputs:
    """Arm exponents feeding the subdiffusivity exponent bound."""

    eta1: Fraction
    eta2: Fraction
    variant: str = "square"
    s1: Fraction | None = None
    s2: Fraction | None = None

    def __post_init__(self):
        if self.variant not in KAPPA_VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.variant == "hexagonal" and self.eta1 > self.eta2:
            raise ValueError("hexagonal form needs eta1 <= eta2")
        if self.s1 is not None and self.s2 is not None and self.s1 > self.s2:
            raise ValueError("need s1 <= s2")


ETA2_RIGOROUS_LOWER = Fraction(1, 4)


def kappa_bound(inputs: KappaInputs) -> Fraction:
    """Exact lower bound on the exit-time gain exponent.

    square:            eta1 * eta2 / 2
    hexagonal:         eta2 * (eta2 - eta1) / 2 (no BK step needed there)
    eta2-lower-bound:  square form with eta2 replaced by its rigorous 1/4
    """
    e1, e2 = Fraction(inputs.eta1), Fraction(inputs.eta2)
    if inputs.variant == "square":
        return e1 * e2 / 2
    if inputs.variant == "hexagonal":
        return e2 * (e2 - e1) / 2
    return e1 * ETA2_RIGOROUS_LOWER / 2


def exit_exponent_bound(s1: Fraction, s2: Fraction, eta1: Fraction,
                        eta2: Fraction, variant: str = "square") -> Fraction:
    """Supremum a with exit time >= n^a, from chemical-distance exponents.

        a < 2 s1 + f * (2 s1 / s2 - (2 - eta2) / s2),

    with f = eta1 on the square lattice and f = eta2 - eta1 on the
    hexagonal one.
    """
    s1, s2 = Fraction(s1), Fraction(s2)
    eta1, eta2 = Fraction(eta1), Fraction(eta2)
    if s2 <= 0:
        raise ValueError("s2 must be positive")
    if s1 > s2:
        raise ValueError("need s1 <= s2")
    if s1 < 1:
        raise ValueError("chemical-distance exponents are >= 1")
    if variant == "square":
        factor = eta1
    elif variant == "hexagonal":
        if eta1 > eta2:
            raise ValueError("hexagonal form needs eta1 <= eta2")
        factor = eta2 - eta1
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return 2 * s1 + factor * (2 * s1 / s2 - (2 - eta2) / s2)


def kappa_from_distance_exponents(eta1: Fraction, eta2: Fraction,
                                  variant: str = "hexagonal") -> Fraction:
    """The kappa form of the exit bound: gain over 2 at s1 = 1, s2 = 2 - eta2.

    Hexagonal inputs (5/48, 17/48) give 17/316.
    """
    eta1, eta2 = Fraction(eta1), Fraction(eta2)
    s2 = 2 - eta2
    return exit_exponent_bound(Fraction(1), s2, eta1, eta2, variant) - 2


def compute_q(n: int, eta2: float, Q: float) -> int:
    """Tile size q = floor(Q * n^(eta2/2) / (log2 n)^(3/2)), at least 1.

    Grows strictly slower than sqrt(n) whenever eta2 <= 1, so frames stay
    small relative to the annulus.
    """
    if n < 16:
        raise ValueError("tile scale needs n >= 16")
    q = int(Q * n ** (eta2 / 2.0) / math.log2(n) ** 1.5)
    if q < 1:
        raise ValueError(f"tile size came out {q}; increase Q")
    return q


# --- backbone volume statistics ---------------------------------------------------


@dataclass
class BackboneVolumeStats:
    """Backbone counts per frame against the q^2 rho(q) log q yardstick."""

    q: int
    n: int
    counts: list[int]               # per-frame backbone site counts, all frames
    mean_count: float
    max_count: int
    yardstick: float                # q^2 * rho_hat(q) * log2 q
    tail_fractions: dict[float, float]  # C -> fraction of frames above C * yardstick
    total_backbone: int
    total_yardstick: float          # n^2 * rho_hat(n) * (log2 n)^2


def backbone_volume_stats(windows: Sequence[tuple[SiteSubgraph, int, int]],
                          q: int, rho_q: float, rho_n: float,
                          c_grid: Sequence[float] = (1.0, 3.0, 10.0),
                          center: Site = (0, 0)) -> list[BackboneVolumeStats]:
    """Per-window frame counts of annulus-backbone sites.

    ``windows`` holds (annulus subgraph, inner, outer) triples; ``rho_q``
    and ``rho_n`` are two-arm probability estimates at radii q and outer,
    fed in from the percolation estimators.
    """
    from .graphmetrics import annulus_backbone
    from .walk import in_frame

    out = []
    for g, inner, outer in windows:
        bb = annulus_backbone(g, inner, outer, center)
        lo = -(outer // q) - 2
        hi = outer // q + 2
        counts = []
        for j1 in range(lo, hi + 1):
            for j2 in range(lo, hi + 1):
                frame_lo_x, frame_hi_x = q * (j1 - 1), q * (j1 + 2)
                frame_lo_y, frame_hi_y = q * (j2 - 1), q * (j2 + 2)
                # frame must meet the annulus at all
                r_min = max(max(frame_lo_x, -frame_hi_x, 0),
                            max(frame_lo_y, -frame_hi_y, 0))
                if r_min > outer:
                    continue
                if max(abs(frame_lo_x), abs(frame_hi_x)) < inner and \
                   max(abs(frame_lo_y), abs(frame_hi_y)) < inner:
                    continue
                counts.append(sum(1 for s in bb if in_frame(s, (j1, j2), q)))
        yard = q * q * rho_q * math.log2(max(q, 2))
        total_yard = outer * outer * rho_n * math.log2(outer) ** 2
        tails = {c: (sum(1 for v in counts if v > c * yard) / len(counts)
                     if counts else 0.0) for c in c_grid}
        out.append(BackboneVolumeStats(
            q=q, n=outer, counts=counts,
            mean_count=float(np.mean(counts)) if counts else 0.0,
            max_count=max(counts) if counts else 0,
            yardstick=yard, tail_fractions=tails,
            total_backbone=len(bb), total_yardstick=total_yard))
    return out


# --- conditioned critical cluster (rejection sampler) ------------------------------


@dataclass
class ConditionedCluster:
    """Critical cluster of the origin conditioned to reach distance l,
    restricted to S(n)."""

    subgraph: SiteSubgraph        # cluster of the origin, clipped to S(n)
    attempts: int
    accepted_seed: int
    l: int
    n: int


class RejectionBudgetExceeded(RuntimeError):
    def __init__(self, attempts: int):
        super().__init__(f"no accepted configuration in {attempts} attempts "
                         f"(acceptance estimate {1.0 / max(attempts, 1):.3g})")
        self.attempts = attempts


def iic_sample(l: int, n: int, max_rejections: int, master_seed: int,
               min_separation: int = 3) -> ConditionedCluster:
    """Rejection-sample the critical cluster of the origin given 0 -> dS(l).

    Draws independent critical configurations in S(l) until the origin
    connects to the boundary, then returns the origin's cluster clipped to
    S(n).  ``min_separation`` enforces l >= min_separation * n (set it to 1
    for calibration runs at small l).
    """
    if l < min_separation * n:
        raise ValueError(f"need l >= {min_separation} * n for a usable sample")
    geom = gridflow.box_geometry(l)
    origin = (-l, -l)
    center_idx = geom.site_index((0, 0), origin)
    ring = np.unique(np.concatenate([geom.left_sites, geom.right_sites,
                                     geom.bottom_sites, geom.top_sites]))
    for attempt in range(1, max_rejections + 1):
        seed = derive_seed(master_seed, attempt)
        field = WeightField(seed)
        u, v = gridflow.open_endpoint_arrays(field, P_C, geom, origin)
        labels = gridflow.component_labels(geom.n_sites, u, v)
        root = labels[center_idx]
        if not (labels[ring] == root).any():
            continue
        in_cluster = labels == root
        keep_u = in_cluster[u] & in_cluster[v]
        xs = geom.site_ix - l
        ys = geom.site_iy - l
        sites = [(int(x), int(y)) for x, y, m in
                 zip(xs, ys, in_cluster) if m
                 and abs(int(x)) <= n and abs(int(y)) <= n]
        site_set = set(sites)
        edges = []
        for a, b in zip(u[keep_u], v[keep_u]):
            sa = (int(xs[a]), int(ys[a]))
            sb = (int(xs[b]), int(ys[b]))
            if sa in site_set and sb in site_set:
                edges.append((sa, sb) if sa <= sb else (sb, sa))
        return ConditionedCluster(subgraph=SiteSubgraph(sites, edges),
                                  attempts=attempt, accepted_seed=seed,
                                  l=l, n=n)
    raise RejectionBudgetExceeded(max_rejections)


def acceptance_probe(l: int, attempts: int, master_seed: int) -> Estimate:
    """Unconditioned probability of 0 -> dS(l) at criticality; calibrates the
    sampler's acceptance rate."""
    return arm_probability(ArmSpec("one_arm_box", l, P_C), attempts,
                           master_seed)
