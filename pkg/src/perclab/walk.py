"""Simple random walk on a site subgraph: exit times, annulus two-phase
walks, induced backbone-walk accounting, local times and tile-trajectory
sums.

Walk randomness is always separate from the environment: hosts are frozen
subgraphs, and every walk draws from its own seeded generator, so a fixed
environment can be re-walked with fresh noise (quenched semantics).
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .lattice import Site, chebyshev
from .subgraph import SiteSubgraph, WalkIndex


def default_step_cap(n: int) -> int:
    """Safety cap for exits from S(n): far above the subdiffusive scale."""
    return 64 * n ** 4


def step(g: SiteSubgraph, x: Site, rng: np.random.Generator) -> Site:
    """One walk step: uniform over the g-neighbors of x."""
    nbrs = g.neighbors(x)
    if not nbrs:
        raise ValueError(f"site {x} is isolated; the walk has nowhere to go")
    if len(nbrs) == 1:
        return nbrs[0]
    return nbrs[int(rng.integers(len(nbrs)))]


@dataclass
class ExitResult:
    """Exit time of one walk, with its trace unless disabled."""

    steps: int
    capped: bool
    final: Site
    trace: list[Site] | None = None


def exit_time(g: SiteSubgraph, start: Site, radius: int,
              rng: np.random.Generator, cap: int | None = None,
              record_trace: bool = True, center: Site = (0, 0)) -> ExitResult:
    """Walk from ``start`` until sup-distance ``radius`` from ``center``.

    A cap overrun is flagged in the result, never silently truncated into a
    fake exit time.
    """
    if cap is None:
        cap = default_step_cap(radius)
    idx = g.walk_index()
    cheb = idx.chebyshev(center)
    pos = idx.index[start]
    trace = [start] if record_trace else None
    if cheb[pos] >= radius:
        return ExitResult(steps=0, capped=False, final=start, trace=trace)
    nbr, deg = idx.nbr, idx.deg
    for k in range(1, cap + 1):
        d = deg[pos]
        if d == 0:
            raise ValueError(f"walk stranded on isolated site {idx.site_list[pos]}")
        pos = nbr[pos, int(rng.integers(d))]
        if record_trace:
            trace.append(idx.site_list[pos])
        if cheb[pos] >= radius:
            return ExitResult(steps=k, capped=False, final=idx.site_list[pos],
                              trace=trace)
    return ExitResult(steps=cap, capped=True, final=idx.site_list[pos],
                      trace=trace)


def exit_times_batch(g: SiteSubgraph, start: Site, radius: int, n_walks: int,
                     rng: np.random.Generator, cap: int | None = None,
                     center: Site = (0, 0)) -> tuple[np.ndarray, np.ndarray]:
    """Exit times of ``n_walks`` independent walks, stepped in lock-step.

    Returns ``(steps, capped)`` arrays.  Orders of magnitude faster than
    looping :func:`exit_time` when traces are not needed.
    """
    if cap is None:
        cap = default_step_cap(radius)
    idx = g.walk_index()
    cheb = idx.chebyshev(center)
    start_i = idx.index[start]
    if cheb[start_i] >= radius:
        return np.zeros(n_walks, dtype=np.int64), np.zeros(n_walks, dtype=bool)
    nbr, deg = idx.nbr, idx.deg
    pos = np.full(n_walks, start_i, dtype=np.int64)
    steps = np.zeros(n_walks, dtype=np.int64)
    active = np.arange(n_walks)
    k = 0
    while len(active) and k < cap:
        k += 1
        cur = pos[active]
        draws = rng.integers(0, deg[cur])
        cur = nbr[cur, draws].astype(np.int64)
        pos[active] = cur
        out = cheb[cur] >= radius
        if out.any():
            done = active[out]
            steps[done] = k
            active = active[~out]
        # successive first-passage times of one batch share the stepping loop
    capped = np.zeros(n_walks, dtype=bool)
    if len(active):
        steps[active] = cap
        capped[active] = True
    return steps, capped


def passage_times_batch(g: SiteSubgraph, start: Site, radii: Sequence[int],
                        n_walks: int, rng: np.random.Generator,
                        cap: int | None = None,
                        center: Site = (0, 0)) -> tuple[np.ndarray, np.ndarray]:
    """First-passage times of each walk through every radius in ``radii``.

    One walk per row; column j holds the first time sup-distance reaches
    ``radii[j]``.  A single stepping loop serves all radii, which both saves
    work and couples the estimates across scales.
    """
    radii = sorted(radii)
    r_max = radii[-1]
    if cap is None:
        cap = default_step_cap(r_max)
    idx = g.walk_index()
    cheb = idx.chebyshev(center)
    start_i = idx.index[start]
    if cheb[start_i] >= radii[0]:
        raise ValueError("start must lie strictly inside the smallest radius")
    radii_arr = np.asarray(radii)
    nbr, deg = idx.nbr, idx.deg
    pos = np.full(n_walks, start_i, dtype=np.int64)
    times = np.zeros((n_walks, len(radii)), dtype=np.int64)
    stage = np.zeros(n_walks, dtype=np.int64)
    active = np.arange(n_walks)
    k = 0
    while len(active) and k < cap:
        k += 1
        cur = pos[active]
        draws = rng.integers(0, deg[cur])
        cur = nbr[cur, draws].astype(np.int64)
        pos[active] = cur
        adv = cheb[cur] >= radii_arr[stage[active]]
        if adv.any():
            for w in active[adv]:
                r = int(cheb[pos[w]])
                s = stage[w]
                while s < len(radii) and radii[s] <= r:
                    times[w, s] = k
                    s += 1
                stage[w] = s
            active = active[stage[active] < len(radii)]
    capped = np.zeros(n_walks, dtype=bool)
    for w in active:
        times[w, stage[w]:] = cap
        capped[w] = True
    return times, capped


@dataclass
class AnnulusWalkResult:
    """Two-phase annulus walk: free walk to distance 2m, then walk restricted
    to the closed annulus S(3m) minus the open S(m) until it re-hits either
    ring."""

    tau_2m: int
    sigma_star: int
    trace: list[Site]
    capped: bool
    exited_outer: bool

    @property
    def sigma_plus(self) -> int:
        return self.tau_2m + self.sigma_star


def annulus_walk(host: SiteSubgraph, m: int, rng: np.random.Generator,
                 cap: int | None = None, center: Site = (0, 0),
                 start: Site = (0, 0)) -> AnnulusWalkResult:
    """Run the two-phase walk on a window host covering S(3m).

    Phase 1 walks on the full host from the origin to sup-distance 2m.
    Phase 2 restricts to the annulus m <= d <= 3m (degrees recomputed there)
    and stops on hitting distance m or 3m.  The phase-2 step count has the
    law of the annulus hitting time started from the phase-1 exit site.
    """
    n = 3 * m
    if cap is None:
        cap = default_step_cap(n)
    phase1 = exit_time(host, start, 2 * m, rng, cap=cap, record_trace=False,
                       center=center)
    if phase1.capped:
        return AnnulusWalkResult(tau_2m=phase1.steps, sigma_star=0,
                                 trace=[phase1.final], capped=True,
                                 exited_outer=False)
    gamma = host.induced(lambda s: m <= chebyshev(s, center) <= n)
    idx = gamma.walk_index()
    cheb = idx.chebyshev(center)
    pos = idx.index[phase1.final]
    trace = [phase1.final]
    nbr, deg = idx.nbr, idx.deg
    k = 0
    while k < cap:
        k += 1
        d = deg[pos]
        if d == 0:
            raise ValueError("annulus walk stranded; host component broken")
        pos = nbr[pos, int(rng.integers(d))]
        trace.append(idx.site_list[pos])
        c = cheb[pos]
        if c <= m or c >= n:
            return AnnulusWalkResult(tau_2m=phase1.steps, sigma_star=k,
                                     trace=trace, capped=False,
                                     exited_outer=bool(c >= n))
    return AnnulusWalkResult(tau_2m=phase1.steps, sigma_star=k, trace=trace,
                             capped=True, exited_outer=False)


def backbone_time(trace: Sequence[Site], backbone: set[Site]) -> int:
    """Number of steps 1..T of the trace landing on a backbone site.

    Counting arrivals (not the starting position) makes the occupation
    identity exact: 1 + backbone_time bounds the backbone local-time mass
    from above, which the tile-sum comparison relies on.
    """
    return sum(1 for s in trace[1:] if s in backbone)


@dataclass
class LocalTimeLedger:
    """Visit counts of a walk trace up to step k (inclusive)."""

    counts: dict[Site, int]
    k: int

    def total(self) -> int:
        return sum(self.counts.values())


def local_times(trace: Sequence[Site], k: int | None = None) -> LocalTimeLedger:
    if k is None:
        k = len(trace) - 1
    if k >= len(trace):
        raise ValueError(f"k={k} beyond trace end {len(trace) - 1}")
    return LocalTimeLedger(counts=dict(Counter(trace[:k + 1])), k=k)


# --- tile-trajectory accounting ----------------------------------------------


def tile_of(s: Site, q: int) -> tuple[int, int]:
    """Index of the half-open q-tile containing s."""
    return (s[0] // q, s[1] // q)


def in_frame(s: Site, j: tuple[int, int], q: int) -> bool:
    """Is s inside the closed 3q-frame around tile j?"""
    return (q * (j[0] - 1) <= s[0] <= q * (j[0] + 2)
            and q * (j[1] - 1) <= s[1] <= q * (j[1] + 2))


@dataclass
class BoxTrajectory:
    """Frame-to-frame decomposition of an annulus walk trace.

    ``entry_steps[i]`` is the step at which the walk settles in tile
    ``tiles[i]`` after leaving the previous tile's frame; ``components``
    are the distinct visited components of frame-intersect-host, with
    their total local-time mass (``lambda_sums``) and the mass on the
    supplied backbone subset (``theta_sums``).
    """

    q: int
    entry_steps: list[int]
    tiles: list[tuple[int, int]]
    components: list[frozenset]
    lambda_sums: list[int]
    theta_sums: list[int]

    def lambda_total(self) -> int:
        return sum(self.lambda_sums)

    def theta_total(self) -> int:
        return sum(self.theta_sums)


def box_trajectory(trace: Sequence[Site], q: int, host: SiteSubgraph,
                   backbone: set[Site] | None = None) -> BoxTrajectory:
    """Decompose a trace into q-frame visits and per-component local-time sums.

    The component entered at step l_i is the connected piece of
    frame(j_i) intersect host containing the walk; components are counted
    once even when revisited.  Local times are always the full-trace counts.
    """
    if q < 1:
        raise ValueError("tile size must be >= 1")
    if backbone is None:
        backbone = set()
    ledger = local_times(trace).counts

    entry_steps = [0]
    tiles = [tile_of(trace[0], q)]
    l = 0
    while True:
        j = tiles[-1]
        nxt = None
        for k in range(l + 1, len(trace)):
            if not in_frame(trace[k], j, q):
                nxt = k
                break
        if nxt is None:
            break
        entry_steps.append(nxt)
        tiles.append(tile_of(trace[nxt], q))
        l = nxt

    components: list[frozenset] = []
    comp_keys: set = set()
    lam: list[int] = []
    theta: list[int] = []
    for li, j in zip(entry_steps, tiles):
        comp = _frame_component(host, trace[li], j, q)
        key = (j, min(comp))
        if key in comp_keys:
            continue
        comp_keys.add(key)
        components.append(frozenset(comp))
        lam.append(sum(ledger.get(s, 0) for s in comp))
        theta.append(sum(ledger.get(s, 0) for s in comp if s in backbone))
    return BoxTrajectory(q=q, entry_steps=entry_steps, tiles=tiles,
                         components=components, lambda_sums=lam,
                         theta_sums=theta)


def _frame_component(host: SiteSubgraph, start: Site, j: tuple[int, int],
                     q: int) -> set[Site]:
    seen = {start}
    frontier = [start]
    while frontier:
        nxt = []
        for u in frontier:
            for v in host.neighbors(u):
                if v not in seen and in_frame(v, j, q):
                    seen.add(v)
                    nxt.append(v)
        frontier = nxt
    return seen


# --- induced backbone walk ---------------------------------------------------


def induced_backbone_positions(trace: Sequence[Site],
                               backbone: set[Site]) -> list[Site]:
    """The induced walk: the trace filtered to its backbone visits."""
    return [s for s in trace if s in backbone]


def backbone_exit_check(trace: Sequence[Site], backbone: set[Site]) -> bool:
    """Whenever the walk leaves the backbone it must re-enter at the site it
    left from; True when the trace satisfies this everywhere."""
    last_bb = None
    prev_on = False
    for s in trace:
        on = s in backbone
        if on:
            if not prev_on and last_bb is not None and s != last_bb:
                return False
            last_bb = s
        prev_on = on
    return True


def cv_tail(g: SiteSubgraph, backbone: set[Site], k_values: Sequence[int],
            lam_values: Sequence[float], replicas: int, master_seed: int,
            start: Site = (0, 0),
            step_cap: int = 10 ** 7) -> dict[tuple[int, float], float]:
    """Empirical tail P(backbone-distance of the induced walk at time k
    >= lam * sqrt(k)) over independent walks.

    The induced walk is read off a free walk on ``g`` by keeping its
    backbone visits.  Distances are chemical distances inside the
    backbone-induced subgraph from ``start``, which must be a backbone site.
    Replicas whose free walk hits the step cap before the induced walk
    reaches k are dropped from that k's frequency.
    """
    from .lattice import derive_seed

    if start not in backbone:
        raise ValueError("start site must lie on the backbone")
    bsub = g.induced(lambda s: s in backbone)
    dist = _bfs_distances(bsub, start)
    wanted = sorted(set(k_values))
    k_max = wanted[-1]
    counts = {(k, lam): 0 for k in wanted for lam in lam_values}
    effective = {k: 0 for k in wanted}
    idx = g.walk_index()
    nbr, deg = idx.nbr, idx.deg
    for r in range(replicas):
        rng = np.random.default_rng(derive_seed(master_seed, r))
        pos = idx.index[start]
        induced_count = 0
        hits: dict[int, Site] = {}
        steps = 0
        while induced_count < k_max and steps < step_cap:
            steps += 1
            pos = nbr[pos, int(rng.integers(deg[pos]))]
            site = idx.site_list[pos]
            if site in backbone:
                induced_count += 1
                if induced_count in effective:
                    hits[induced_count] = site
        for k in wanted:
            if k not in hits:
                continue
            effective[k] += 1
            d = dist.get(hits[k], math.inf)
            for lam in lam_values:
                if d >= lam * math.sqrt(k):
                    counts[(k, lam)] += 1
    return {pair: (counts[pair] / effective[pair[0]] if effective[pair[0]] else 0.0)
            for pair in counts}


def _bfs_distances(g: SiteSubgraph, start: Site) -> dict[Site, int]:
    dist = {start: 0}
    frontier = [start]
    d = 0
    while frontier:
        d += 1
        nxt = []
        for u in frontier:
            for v in g.neighbors(u):
                if v not in dist:
                    dist[v] = d
                    nxt.append(v)
        frontier = nxt
    return dist
