"""Chemical distance and backbone extraction on finite subgraphs.

The backbone of a subgraph relative to a source and a target set is the
set of sites lying on some simple path from the source to the target: the
sites with two paths, vertex-disjoint except at the site itself, one
reaching the source and one the target.  Everything else is a dangling
end a walk must back out of.
"""

from __future__ import annotations

import math
from collections import deque
from typing import Iterable

from .lattice import Site, chebyshev
from .subgraph import SiteSubgraph

# virtual terminal markers; never valid lattice sites
_SRC = ("terminal", "source")
_TGT = ("terminal", "target")


def chemical_distance(g: SiteSubgraph, a: Iterable[Site],
                      b: Iterable[Site]) -> int | float:
    """Length in bonds of the shortest path in ``g`` from set A to set B;
    ``math.inf`` when they are not connected."""
    a_in = [s for s in a if s in g]
    b_set = {s for s in b if s in g}
    if not a_in and not list(a):
        raise ValueError("source set empty")
    if not b_set and not list(b):
        raise ValueError("target set empty")
    if not a_in or not b_set:
        return math.inf
    if b_set.intersection(a_in):
        return 0
    dist = {s: 0 for s in a_in}
    frontier = a_in
    d = 0
    while frontier:
        d += 1
        nxt = []
        for u in frontier:
            for v in g.neighbors(u):
                if v not in dist:
                    if v in b_set:
                        return d
                    dist[v] = d
                    nxt.append(v)
        frontier = nxt
    return math.inf


def backbone(g: SiteSubgraph, source: Site | Iterable[Site],
             targets: Iterable[Site]) -> set[Site]:
    """Sites with two disjoint connections, one to the source (site or set)
    and one to the target set.

    Computed on the block-cut decomposition of the graph augmented with
    virtual terminals: a site qualifies exactly when it lies in a block on
    the block-tree path between the terminals.  Source and target sites
    themselves are included whenever they are connected to the other side.
    Returns the empty set when source and targets are not connected.
    """
    src_sites = [source] if isinstance(source, tuple) and len(source) == 2 \
        and not isinstance(source[0], str) else list(source)
    src_in = [s for s in src_sites if s in g]
    tgt_in = [t for t in set(targets) if t in g]
    if not src_in or not tgt_in:
        return set()

    adj = {s: list(g.neighbors(s)) for s in g.sites()}
    adj[_SRC] = list(src_in)
    adj[_TGT] = list(tgt_in)
    for s in src_in:
        adj[s].append(_SRC)
    for t in tgt_in:
        adj[t].append(_TGT)

    blocks, cut_vertices = _biconnected_components(adj)
    tree = _block_cut_tree(blocks, cut_vertices)

    def node_of(v):
        if v in cut_vertices:
            return ("cut", v)
        for bi, bl in enumerate(blocks):
            if v in bl:
                return ("block", bi)
        return None

    start = node_of(_SRC)
    goal = node_of(_TGT)
    if start is None or goal is None:
        return set()
    path = _tree_path(tree, start, goal)
    if path is None:
        return set()
    out: set[Site] = set()
    for node in path:
        if node[0] == "block":
            out.update(blocks[node[1]])
    out.discard(_SRC)
    out.discard(_TGT)
    return out


def annulus_backbone(g: SiteSubgraph, inner: int, outer: int,
                     center: Site = (0, 0)) -> set[Site]:
    """Backbone of an annulus window: sites with disjoint connections to the
    inner ring (distance == inner) and the outer ring (distance == outer)."""
    inner_ring = [s for s in g.sites() if chebyshev(s, center) == inner]
    outer_ring = [s for s in g.sites() if chebyshev(s, center) == outer]
    return backbone(g, inner_ring, outer_ring)


def backbone_flow_oracle(g: SiteSubgraph, source: Site | Iterable[Site],
                         targets: Iterable[Site], x: Site,
                         return_paths: bool = False):
    """Does ``x`` carry vertex-capacity-2 flow into {source, targets}?

    Independent route to :func:`backbone` membership: every vertex except
    ``x`` is split to capacity one, the source side and the target side are
    each attached to a merged sink with capacity one, and x qualifies when
    the max-flow from x reaches two.  With ``return_paths`` the two
    certificate paths (from x to the source side and to the target side)
    are returned alongside.
    """
    if x not in g:
        raise KeyError(f"site {x} not in subgraph")
    src_sites = {source} if isinstance(source, tuple) and len(source) == 2 \
        and not isinstance(source[0], str) else set(source)
    src_in = {s for s in src_sites if s in g}
    tgt_in = {t for t in set(targets) if t in g}
    if not src_in or not tgt_in:
        return (False, None) if return_paths else False

    # trivial memberships: x on one terminal side needs only a path to the other
    if x in src_in or x in tgt_in:
        other = tgt_in if x in src_in else src_in
        ok = chemical_distance(g, [x], other) < math.inf
        if not return_paths:
            return ok
        return ok, None

    # node ids: ('in', v) / ('out', v) for split vertices, plain x, 'SINK'
    def vin(v):
        return ("in", v)

    def vout(v):
        return ("out", v)

    sink = "SINK"
    cap: dict = {}
    orig: dict = {}

    def add_arc(a, b, c):
        cap.setdefault(a, {})[b] = cap.get(a, {}).get(b, 0) + c
        cap.setdefault(b, {}).setdefault(a, 0)
        orig[(a, b)] = orig.get((a, b), 0) + c

    for v in g.sites():
        if v != x:
            add_arc(vin(v), vout(v), 1)
    for u, v in g.edges():
        au_out = u if u == x else vout(u)
        au_in = u if u == x else vin(u)
        bv_out = v if v == x else vout(v)
        bv_in = v if v == x else vin(v)
        add_arc(au_out, bv_in, 1)
        add_arc(bv_out, au_in, 1)
    # one unit may finish at the source side, one at the target side
    src_gate = ("gate", "src")
    tgt_gate = ("gate", "tgt")
    for s in src_in:
        add_arc(vin(s), src_gate, 1)
    for t in tgt_in:
        add_arc(vin(t), tgt_gate, 1)
    add_arc(src_gate, sink, 1)
    add_arc(tgt_gate, sink, 1)

    flow_total = 0
    for _ in range(2):
        aug = _bfs_augment(cap, x, sink)
        if not aug:
            break
        flow_total += 1
    ok = flow_total >= 2
    if not return_paths:
        return ok
    paths = _decompose_certificates(cap, orig, x, sink) if ok else None
    return ok, paths


def _decompose_certificates(cap, orig, x, sink):
    """Split the value-2 flow into its two site paths out of x."""
    flow_adj: dict = {}
    for (a, b), c0 in orig.items():
        used = c0 - cap[a][b]
        if used > 0:
            flow_adj.setdefault(a, []).append(b)
    paths = []
    for _ in range(2):
        node = x
        sites = [x]
        hops = 0
        while node != sink:
            nxt = flow_adj[node].pop()
            if isinstance(nxt, tuple) and len(nxt) == 2 and nxt[0] == "in":
                sites.append(nxt[1])
            node = nxt
            hops += 1
            if hops > len(orig):
                raise RuntimeError("flow decomposition did not terminate")
        paths.append(sites)
    return paths


def _bfs_augment(cap, s, t) -> bool:
    parent = {s: None}
    q = deque([s])
    while q:
        u = q.popleft()
        if u == t:
            break
        for v, c in cap[u].items():
            if c > 0 and v not in parent:
                parent[v] = u
                q.append(v)
    if t not in parent:
        return False
    v = t
    while parent[v] is not None:
        u = parent[v]
        cap[u][v] -= 1
        cap[v][u] += 1
        v = u
    return True


def _biconnected_components(adj) -> tuple[list[set], set]:
    """Iterative Hopcroft-Tarjan: blocks as vertex sets, plus cut vertices."""
    disc: dict = {}
    low: dict = {}
    blocks: list[set] = []
    cut: set = set()
    counter = 0
    for root in adj:
        if root in disc:
            continue
        stack = [(root, None, iter(adj[root]))]
        disc[root] = low[root] = counter
        counter += 1
        edge_stack = []
        root_children = 0
        while stack:
            v, parent, it = stack[-1]
            advanced = False
            for w in it:
                if w == parent:
                    continue
                if w not in disc:
                    disc[w] = low[w] = counter
                    counter += 1
                    edge_stack.append((v, w))
                    stack.append((w, v, iter(adj[w])))
                    if v == root:
                        root_children += 1
                    advanced = True
                    break
                if disc[w] < disc[v]:
                    edge_stack.append((v, w))
                    low[v] = min(low[v], disc[w])
            if advanced:
                continue
            stack.pop()
            if parent is not None:
                low[parent] = min(low[parent], low[v])
                if low[v] >= disc[parent]:
                    block = set()
                    while edge_stack:
                        a, b = edge_stack[-1]
                        if disc[a] >= disc[v]:
                            edge_stack.pop()
                            block.add(a)
                            block.add(b)
                        else:
                            break
                    if edge_stack and edge_stack[-1] == (parent, v):
                        edge_stack.pop()
                    block.add(parent)
                    block.add(v)
                    blocks.append(block)
                    if parent != root or root_children > 1:
                        cut.add(parent)
        # isolated root: no block recorded, fine
    return blocks, cut


def _block_cut_tree(blocks: list[set], cut_vertices: set) -> dict:
    tree: dict = {}
    for bi, bl in enumerate(blocks):
        bnode = ("block", bi)
        tree.setdefault(bnode, [])
        for v in bl:
            if v in cut_vertices:
                cnode = ("cut", v)
                tree.setdefault(cnode, []).append(bnode)
                tree[bnode].append(cnode)
    return tree


def _tree_path(tree, start, goal):
    if start == goal:
        return [start]
    if start not in tree or goal not in tree:
        return None
    parent = {start: None}
    q = deque([start])
    while q:
        u = q.popleft()
        if u == goal:
            path = []
            while u is not None:
                path.append(u)
                u = parent[u]
            return path
        for v in tree.get(u, ()):
            if v not in parent:
                parent[v] = u
                q.append(v)
    return None
