"""Finite induced site graphs: the carrier type for cluster windows,
Bernoulli configurations and walk hosts."""

from __future__ import annotations

from typing import Callable, Iterable, Iterator

import numpy as np

from .lattice import Edge, Site, canonical_edge


class SiteSubgraph:
    """An immutable subgraph of Z^2: a site set plus open edges between them.

    Neighbor iteration is O(degree); degrees never exceed 4.  Instances are
    safe to share across workers once built.
    """

    __slots__ = ("_adj", "_n_edges", "_walk_index")

    def __init__(self, sites: Iterable[Site], edges: Iterable[Edge]):
        adj: dict[Site, list[Site]] = {s: [] for s in sites}
        n_edges = 0
        for u, v in edges:
            if u not in adj or v not in adj:
                raise ValueError(f"edge ({u}, {v}) has an endpoint outside the site set")
            adj[u].append(v)
            adj[v].append(u)
            n_edges += 1
        self._adj = {s: tuple(nbrs) for s, nbrs in adj.items()}
        self._n_edges = n_edges
        self._walk_index = None

    @property
    def n_sites(self) -> int:
        return len(self._adj)

    @property
    def n_edges(self) -> int:
        return self._n_edges

    def sites(self):
        return self._adj.keys()

    def __contains__(self, s: Site) -> bool:
        return s in self._adj

    def __len__(self) -> int:
        return len(self._adj)

    def neighbors(self, s: Site) -> tuple[Site, ...]:
        return self._adj[s]

    def degree(self, s: Site) -> int:
        return len(self._adj[s])

    def has_edge(self, u: Site, v: Site) -> bool:
        return u in self._adj and v in self._adj[u]

    def edges(self) -> Iterator[Edge]:
        for u, nbrs in self._adj.items():
            for v in nbrs:
                if u <= v:
                    yield (u, v)

    def component_of(self, start: Site) -> set[Site]:
        """Connected component containing ``start`` (BFS)."""
        if start not in self._adj:
            raise KeyError(f"site {start} not in subgraph")
        seen = {start}
        frontier = [start]
        while frontier:
            nxt = []
            for u in frontier:
                for v in self._adj[u]:
                    if v not in seen:
                        seen.add(v)
                        nxt.append(v)
            frontier = nxt
        return seen

    def induced(self, keep: Callable[[Site], bool]) -> "SiteSubgraph":
        """Induced subgraph on the sites satisfying ``keep``."""
        sites = [s for s in self._adj if keep(s)]
        kept = set(sites)
        edges = [(u, v) for u, v in self.edges() if u in kept and v in kept]
        return SiteSubgraph(sites, edges)

    def walk_index(self) -> "WalkIndex":
        """Array-indexed view for fast walking; built once and cached."""
        if self._walk_index is None:
            self._walk_index = WalkIndex(self)
        return self._walk_index


class WalkIndex:
    """Flat-array adjacency for a SiteSubgraph, for vectorized walk kernels."""

    __slots__ = ("site_list", "index", "xs", "ys", "nbr", "deg")

    def __init__(self, g: SiteSubgraph):
        self.site_list = sorted(g.sites())
        self.index = {s: i for i, s in enumerate(self.site_list)}
        n = len(self.site_list)
        self.xs = np.array([s[0] for s in self.site_list], dtype=np.int64)
        self.ys = np.array([s[1] for s in self.site_list], dtype=np.int64)
        self.nbr = np.full((n, 4), -1, dtype=np.int32)
        self.deg = np.zeros(n, dtype=np.int32)
        for i, s in enumerate(self.site_list):
            for v in g.neighbors(s):
                self.nbr[i, self.deg[i]] = self.index[v]
                self.deg[i] += 1

    def __len__(self) -> int:
        return len(self.site_list)

    def chebyshev(self, center: Site = (0, 0)) -> np.ndarray:
        """Per-site sup-norm distance from ``center``."""
        return np.maximum(np.abs(self.xs - center[0]), np.abs(self.ys - center[1]))


def subgraph_from_edge_list(edges: Iterable[Edge],
                            extra_sites: Iterable[Site] = ()) -> SiteSubgraph:
    """Build a subgraph whose site set is the union of edge endpoints."""
    edges = [canonical_edge(u, v) for u, v in edges]
    sites = set(extra_sites)
    for u, v in edges:
        sites.add(u)
        sites.add(v)
    return SiteSubgraph(sites, edges)


def full_box_graph(radius: int, center: Site = (0, 0)) -> SiteSubgraph:
    """The fully open box S(radius): every lattice edge present."""
    from .lattice import Box, region_edges

    box = Box(center, radius)
    return SiteSubgraph(box.sites(), region_edges(box))


def path_graph(length: int) -> SiteSubgraph:
    """A 1D segment embedded on the x-axis: sites (0,0) .. (length,0)."""
    sites = [(i, 0) for i in range(length + 1)]
    edges = [(((i, 0)), ((i + 1, 0))) for i in range(length)]
    return SiteSubgraph(sites, edges)
