"""Bernoulli-configuration views at a parameter p: open subgraphs,
crossings, lowest crossings, disjoint-crossing counts, circuits and arm
events.

Conventions fixed here: "disjoint" paths and arms always mean
edge-disjoint, detected by unit-edge-capacity max-flow; circuits are
detected by the absence of a blocking closed dual path; a crossing
touches each of its two target sides exactly once (at its endpoints).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from . import gridflow
from .lattice import (Annulus, Box, Edge, Rect, Region, Site, WeightField,
                      canonical_edge, region_edges)
from .subgraph import SiteSubgraph


@dataclass(frozen=True)
class CrossingSpec:
    """A rectangle crossing question: side-to-side open connection at level p."""

    rect: Rect
    direction: str = "horizontal"
    p: float = 0.5

    def __post_init__(self):
        if self.direction not in ("horizontal", "vertical"):
            raise ValueError(f"unknown direction {self.direction!r}")


ARM_KINDS = ("one_arm_halfplane", "one_arm_box", "two_arm_box",
             "four_arm_alternating")


@dataclass(frozen=True)
class ArmSpec:
    """An arm event at the origin site (or, for the four-arm kind, at the
    edge from ``center`` to ``center + (1, 0)``).

    Connections are searched inside the finite defining region only: the box
    S(radius) for the box kinds, S(box_factor * radius) for the half-plane
    kind (wider paths are truncated away; the bias is measured by growing
    ``box_factor``).
    """

    kind: str
    radius: int
    p: float = 0.5
    center: Site = (0, 0)
    p_dual: float | None = None
    box_factor: int = 2

    def __post_init__(self):
        if self.kind not in ARM_KINDS:
            raise ValueError(f"unknown arm kind {self.kind!r}")
        if self.radius < 1:
            raise ValueError("arm radius must be >= 1")
        if self.kind == "four_arm_alternating" and self.radius < 2:
            # the anchor edge's far endpoint would sit on the boundary ring,
            # leaving zero-length arms undefined
            raise ValueError("four-arm events need radius >= 2")


def open_subgraph(field, p: float, region: Region) -> SiteSubgraph:
    """The p-open configuration restricted to ``region``.

    Contains every site of the region and exactly the open bonds with both
    endpoints inside it.
    """
    if region.site_count == 0:
        raise ValueError("empty region")
    sites = list(region.sites())
    edges = [e for e in region_edges(region) if field.weight(e) <= p]
    return SiteSubgraph(sites, edges)


def has_crossing(field: WeightField, spec: CrossingSpec) -> bool:
    """True when an open path joins the two designated sides of the rectangle."""
    r = spec.rect
    if spec.direction == "horizontal" and r.width == 0:
        return True
    if spec.direction == "vertical" and r.height == 0:
        return True
    return gridflow.crossing_event(field, spec.p, r.width, r.height,
                                   (r.x0, r.y0), spec.direction)


def count_disjoint_crossings(field: WeightField, spec: CrossingSpec) -> int:
    """Maximum number of pairwise edge-disjoint open crossings.

    Computed as a unit-capacity max-flow between super-terminals attached to
    the two sides; by Menger's theorem this equals the minimum number of
    bonds whose removal destroys every crossing.
    """
    r = spec.rect
    if (spec.direction == "horizontal" and r.width == 0) or \
       (spec.direction == "vertical" and r.height == 0):
        # every site of the touching column/row is its own crossing
        return r.site_count
    return gridflow.count_disjoint_crossings_fast(
        field, spec.p, r.width, r.height, (r.x0, r.y0), spec.direction)


def has_open_circuit(field: WeightField, p: float, a: Annulus) -> bool:
    """Open circuit in the annulus surrounding its hole.

    Implemented by planar duality: the circuit exists exactly when no dual
    path of unusable bonds (p-closed or outside the annulus) runs from the
    plaquettes at the center to the outside of the annulus.
    """
    return gridflow.has_open_circuit_fast(field, p, a.center, a.inner, a.outer)


def arm_event(field: WeightField, spec: ArmSpec) -> bool:
    """Evaluate the arm event described by ``spec`` for this configuration."""
    if spec.kind == "one_arm_box":
        return gridflow.one_arm_box_event(field, spec.p, spec.radius, spec.center)
    if spec.kind == "two_arm_box":
        return gridflow.two_arm_box_event(field, spec.p, spec.radius, spec.center)
    if spec.kind == "one_arm_halfplane":
        return gridflow.one_arm_halfplane_event(field, spec.p, spec.radius,
                                                spec.center, spec.box_factor)
    return gridflow.four_arm_event(field, spec.p, spec.radius, spec.center,
                                   spec.p_dual)


# --- lowest crossings --------------------------------------------------------


def lowest_crossing(field: WeightField, spec: CrossingSpec) -> list[Site] | None:
    """The open horizontal crossing whose below-region is minimal, or None.

    The returned path is a lattice path of open bonds from the left side to
    the right side, touching each side only at its endpoint.
    """
    if spec.direction != "horizontal":
        raise ValueError("lowest_crossing is defined for horizontal crossings")
    r = spec.rect
    if r.width == 0:
        return [(r.x0, r.y0)]
    open_edges = {e for e in region_edges(r) if field.weight(e) <= spec.p}
    return lowest_crossing_in_edges(open_edges, r)


def lowest_crossing_in_edges(open_edges: set[Edge], rect: Rect) -> list[Site] | None:
    """Lowest left-right crossing using only the given open in-rect bonds.

    A crossing touches the left column only at its first site and the right
    column only at its last.  The lowest one is traced by a right-hand-rule
    wall walk: scan starting heights bottom up, and from each start run a
    depth-first walk that always turns as far clockwise as the open bonds
    allow, so the path hugs the region below it.  The first start that
    reaches the right side carries the below-minimal crossing (the lower
    envelope of two crossings is again a crossing, so no crossing can start
    below the lowest one).
    """
    x0, y0, x1, y1 = rect.x0, rect.y0, rect.x1, rect.y1
    if x1 == x0:
        return [(x0, y0)]
    for ys in range(y0, y1 + 1):
        if ((x0, ys), (x0 + 1, ys)) not in open_edges:
            continue
        path = _wall_walk((x0, ys), open_edges, rect)
        if path is not None:
            return path
    return None


def _wall_walk(root: Site, open_edges: set[Edge], rect: Rect) -> list[Site] | None:
    """Right-first DFS from a left-column root; returns the walk stack on the
    first arrival at the right column, with dead-end excursions backtracked."""
    x0, x1 = rect.x0, rect.x1
    visited = {root}
    # stack entries: (site, candidate moves in clockwise-first order, next index)
    stack = [(root, _turn_order((1, 0)), 0)]
    path = [root]
    while stack:
        site, order, k = stack.pop()
        x, y = site
        advanced = False
        while k < 4:
            dx, dy = order[k]
            k += 1
            t = (x + dx, y + dy)
            if t in visited or not rect.contains(t) or t[0] == x0:
                continue
            if canonical_edge(site, t) not in open_edges:
                continue
            visited.add(t)
            stack.append((site, order, k))
            path.append(t)
            if t[0] == x1:
                return path
            stack.append((t, _turn_order((dx, dy)), 0))
            advanced = True
            break
        if not advanced:
            path.pop()
    return None


def _turn_order(d: tuple[int, int]) -> tuple[tuple[int, int], ...]:
    """Moves to try after arriving along ``d``: right turn, straight, left
    turn, reverse (clockwise-first, so the walk keeps its right hand on the
    region below)."""
    dx, dy = d
    return ((dy, -dx), (dx, dy), (-dy, dx), (-dx, -dy))


def below_edge_region(path: list[Site], rect: Rect) -> frozenset[Edge]:
    """J^-(path): bonds with an endpoint joined to the bottom side of the
    rectangle by a lattice path inside it avoiding the crossing's sites.

    Bonds poking out of the rectangle count as long as one endpoint is
    reachable.  This is the quantity the lowest crossing minimizes.
    """
    on_path = set(path)
    reach = set()
    queue = deque()
    for x in range(rect.x0, rect.x1 + 1):
        s = (x, rect.y0)
        if s not in on_path:
            reach.add(s)
            queue.append(s)
    while queue:
        x, y = queue.popleft()
        for t in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            if rect.contains(t) and t not in on_path and t not in reach:
                reach.add(t)
                queue.append(t)
    out = set()
    for s in reach:
        x, y = s
        for t in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            out.add(canonical_edge(s, t))
    return frozenset(out)


def peel_disjoint_crossings(open_edges: set[Edge], rect: Rect) -> int:
    """Count disjoint crossings by repeatedly removing the lowest crossing.

    Independent route to the max-flow count: each peel takes the lowest
    crossing of the remaining open bonds and deletes its bonds.
    """
    if rect.width == 0:
        return rect.site_count
    remaining = set(open_edges)
    count = 0
    while True:
        path = lowest_crossing_in_edges(remaining, rect)
        if path is None:
            return count
        count += 1
        for u, v in zip(path, path[1:]):
            remaining.discard(canonical_edge(u, v))
