"""Array kernels for Bernoulli-configuration queries on rectangular regions.

These back the Monte Carlo estimators: geometry index arrays are cached per
region shape, per-replica work is vectorized weight evaluation plus a
C-level connectivity or max-flow call.  The object-level operations in
:mod:`perclab.percolation` stay the reference implementations; agreement is
checked seed by seed in the test suite.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, maximum_flow

from .lattice import Site, WeightField


class RectGeometry:
    """Static site/edge index arrays for a (width x height) rectangle of cells.

    Sites are indexed ix * (h + 1) + iy with ix in [0, w], iy in [0, h];
    absolute coordinates are obtained by adding the rectangle origin.
    """

    def __init__(self, w: int, h: int):
        self.w = w
        self.h = h
        self.n_sites = (w + 1) * (h + 1)

        ix, iy = np.meshgrid(np.arange(w + 1), np.arange(h + 1), indexing="ij")
        self.site_ix = ix.ravel()
        self.site_iy = iy.ravel()

        # horizontal bonds: (ix, iy) -- (ix+1, iy)
        hx, hy = np.meshgrid(np.arange(w), np.arange(h + 1), indexing="ij")
        hx = hx.ravel()
        hy = hy.ravel()
        self.h_x = hx
        self.h_y = hy
        self.h_u = (hx * (h + 1) + hy).astype(np.int32)
        self.h_v = ((hx + 1) * (h + 1) + hy).astype(np.int32)

        # vertical bonds: (ix, iy) -- (ix, iy+1)
        vx, vy = np.meshgrid(np.arange(w + 1), np.arange(h), indexing="ij")
        vx = vx.ravel()
        vy = vy.ravel()
        self.v_x = vx
        self.v_y = vy
        self.v_u = (vx * (h + 1) + vy).astype(np.int32)
        self.v_v = (vx * (h + 1) + vy + 1).astype(np.int32)

        self.left_sites = np.arange(h + 1, dtype=np.int32)
        self.right_sites = (w * (h + 1) + np.arange(h + 1)).astype(np.int32)
        self.bottom_sites = (np.arange(w + 1) * (h + 1)).astype(np.int32)
        self.top_sites = (np.arange(w + 1) * (h + 1) + h).astype(np.int32)

    def site_index(self, s: Site, origin: Site) -> int:
        ix = s[0] - origin[0]
        iy = s[1] - origin[1]
        if not (0 <= ix <= self.w and 0 <= iy <= self.h):
            raise ValueError(f"site {s} outside rectangle")
        return ix * (self.h + 1) + iy


@lru_cache(maxsize=128)
def rect_geometry(w: int, h: int) -> RectGeometry:
    return RectGeometry(w, h)


@lru_cache(maxsize=64)
def box_geometry(radius: int) -> RectGeometry:
    return rect_geometry(2 * radius, 2 * radius)


def open_masks(field: WeightField, p: float, geom: RectGeometry,
               origin: Site) -> tuple[np.ndarray, np.ndarray]:
    """Boolean open masks for the horizontal and vertical bonds of the region."""
    ox, oy = origin
    wh = field.weights_array(geom.h_x + ox, geom.h_y + oy,
                             np.zeros(len(geom.h_x), dtype=np.uint64))
    wv = field.weights_array(geom.v_x + ox, geom.v_y + oy,
                             np.ones(len(geom.v_x), dtype=np.uint64))
    return wh <= p, wv <= p


def open_endpoint_arrays(field, p, geom, origin):
    """Index arrays (u, v) of the open bonds, concatenated over orientations."""
    mh, mv = open_masks(field, p, geom, origin)
    u = np.concatenate([geom.h_u[mh], geom.v_u[mv]])
    v = np.concatenate([geom.h_v[mh], geom.v_v[mv]])
    return u, v


def component_labels(n_sites: int, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Connected-component labels from undirected edge endpoint arrays."""
    if len(u) == 0:
        return np.arange(n_sites)
    m = csr_matrix((np.ones(len(u), dtype=np.int8), (u, v)),
                   shape=(n_sites, n_sites))
    _, labels = connected_components(m, directed=False)
    return labels


def _flow_value(n_nodes, rows, cols, caps, source, sink) -> int:
    m = csr_matrix((np.asarray(caps, dtype=np.int32),
                    (np.asarray(rows), np.asarray(cols))),
                   shape=(n_nodes, n_nodes), dtype=np.int32)
    return int(maximum_flow(m, source, sink).flow_value)


def edge_disjoint_flow(n_sites, u, v, source_idx, sink_attach,
                       attach_cap: int = 4) -> int:
    """Max number of edge-disjoint paths from a source site to a site set.

    Each open bond carries unit capacity in both directions; the sites in
    ``sink_attach`` are wired to a virtual sink with capacity ``attach_cap``
    apiece, so disjointness is enforced on real bonds only.
    """
    sink = n_sites
    rows = np.concatenate([u, v, sink_attach])
    cols = np.concatenate([v, u, np.full(len(sink_attach), sink, dtype=np.int64)])
    caps = np.concatenate([np.ones(2 * len(u), dtype=np.int32),
                           np.full(len(sink_attach), attach_cap, dtype=np.int32)])
    if source_idx == sink:
        raise ValueError("source coincides with virtual sink")
    return _flow_value(n_sites + 1, rows, cols, caps, source_idx, sink)


def crossing_event(field: WeightField, p: float, w: int, h: int,
                   origin: Site, direction: str = "horizontal") -> bool:
    """Is there a p-open crossing of the (w x h)-cell rectangle at ``origin``?"""
    geom = rect_geometry(w, h)
    u, v = open_endpoint_arrays(field, p, geom, origin)
    labels = component_labels(geom.n_sites, u, v)
    if direction == "horizontal":
        a, b = geom.left_sites, geom.right_sites
    elif direction == "vertical":
        a, b = geom.bottom_sites, geom.top_sites
    else:
        raise ValueError(f"unknown direction {direction!r}")
    return bool(np.isin(labels[a], labels[b]).any())


def count_disjoint_crossings_fast(field, p, w, h, origin,
                                  direction: str = "horizontal") -> int:
    """Maximal number of pairwise edge-disjoint open crossings (max-flow)."""
    geom = rect_geometry(w, h)
    u, v = open_endpoint_arrays(field, p, geom, origin)
    if len(u) == 0:
        return 0
    if direction == "horizontal":
        a, b = geom.left_sites, geom.right_sites
    else:
        a, b = geom.bottom_sites, geom.top_sites
    src = geom.n_sites
    snk = geom.n_sites + 1
    rows = np.concatenate([u, v, np.full(len(a), src, dtype=np.int64), b])
    cols = np.concatenate([v, u, a, np.full(len(b), snk, dtype=np.int64)])
    caps = np.concatenate([np.ones(2 * len(u), dtype=np.int32),
                           np.full(len(a) + len(b), 4, dtype=np.int32)])
    return _flow_value(geom.n_sites + 2, rows, cols, caps, src, snk)


def _open_incident_count(field, p, center: Site) -> int:
    from .lattice import incident_edges

    return sum(1 for e in incident_edges(center) if field.weight(e) <= p)


def one_arm_box_event(field, p, n, center: Site = (0, 0)) -> bool:
    """Open connection from the center to the boundary of S(n), inside S(n)."""
    inc = _open_incident_count(field, p, center)
    if inc == 0:
        return False
    if n == 1:
        # every neighbor of the center already lies on the boundary ring
        return True
    geom = box_geometry(n)
    origin = (center[0] - n, center[1] - n)
    u, v = open_endpoint_arrays(field, p, geom, origin)
    labels = component_labels(geom.n_sites, u, v)
    c = geom.site_index(center, origin)
    ring = _boundary_ring(geom)
    return bool(np.isin(labels[ring], labels[c]).any())


def two_arm_box_event(field, p, n, center: Site = (0, 0)) -> bool:
    """Two edge-disjoint open connections center -> boundary of S(n)."""
    inc = _open_incident_count(field, p, center)
    if inc < 2:
        return False
    if n == 1:
        # distinct open incident bonds are already edge-disjoint one-step arms
        return True
    geom = box_geometry(n)
    origin = (center[0] - n, center[1] - n)
    mh, mv = open_masks(field, p, geom, origin)
    c = geom.site_index(center, origin)
    u = np.concatenate([geom.h_u[mh], geom.v_u[mv]])
    v = np.concatenate([geom.h_v[mh], geom.v_v[mv]])
    return edge_disjoint_flow(geom.n_sites, u, v, c, _boundary_ring(geom)) >= 2


def one_arm_halfplane_event(field, p, n, center: Site = (0, 0),
                            box_factor: int = 2) -> bool:
    """Open path from the center to the line x = center_x + n.

    Estimated inside the finite box S(box_factor * n); paths forced outside
    it are missed, a truncation bias that shrinks as the box grows.
    """
    w = box_factor * n
    geom = box_geometry(w)
    origin = (center[0] - w, center[1] - w)
    u, v = open_endpoint_arrays(field, p, geom, origin)
    labels = component_labels(geom.n_sites, u, v)
    c = geom.site_index(center, origin)
    col = np.flatnonzero(geom.site_ix == (n + w))  # absolute x == center_x + n
    return bool(np.isin(labels[col], labels[c]).any())


def _boundary_ring(geom: RectGeometry) -> np.ndarray:
    return np.unique(np.concatenate([geom.left_sites, geom.right_sites,
                                     geom.bottom_sites, geom.top_sites]))


# --- dual-lattice machinery -------------------------------------------------
#
# Plaquette (a, b) is the unit square with lower-left corner (a, b); it is
# the dual site standing for the plane point (a + 1/2, b + 1/2).  Two
# plaquettes are dual-adjacent through the primal bond they share.


class DualGeometry:
    """Plaquette grid covering S(n + 1) around a center, with the primal bond
    crossed by each dual adjacency."""

    def __init__(self, n: int):
        self.n = n
        k = 2 * n + 2  # plaquettes per axis: a in [-n-1, n]
        self.k = k
        a, b = np.meshgrid(np.arange(-n - 1, n + 1), np.arange(-n - 1, n + 1),
                           indexing="ij")
        self.pl_a = a.ravel()
        self.pl_b = b.ravel()
        self.n_pl = k * k

        # dual bond between (a,b) and (a+1,b) crosses primal vertical bond
        # (a+1, b) -- (a+1, b+1)
        ha, hb = np.meshgrid(np.arange(-n - 1, n), np.arange(-n - 1, n + 1),
                             indexing="ij")
        ha = ha.ravel()
        hb = hb.ravel()
        self.dh_u = ((ha + n + 1) * k + (hb + n + 1)).astype(np.int32)
        self.dh_v = ((ha + n + 2) * k + (hb + n + 1)).astype(np.int32)
        self.dh_px = ha + 1
        self.dh_py = hb
        self.dh_orient = np.ones(len(ha), dtype=np.uint64)

        # dual bond between (a,b) and (a,b+1) crosses primal horizontal bond
        # (a, b+1) -- (a+1, b+1)
        va, vb = np.meshgrid(np.arange(-n - 1, n + 1), np.arange(-n - 1, n),
                             indexing="ij")
        va = va.ravel()
        vb = vb.ravel()
        self.dv_u = ((va + n + 1) * k + (vb + n + 1)).astype(np.int32)
        self.dv_v = ((va + n + 1) * k + (vb + n + 2)).astype(np.int32)
        self.dv_px = va
        self.dv_py = vb + 1
        self.dv_orient = np.zeros(len(va), dtype=np.uint64)

    def plaquette_index(self, a: int, b: int, center: Site = (0, 0)) -> int:
        ia = a - center[0] + self.n + 1
        ib = b - center[1] + self.n + 1
        if not (0 <= ia < self.k and 0 <= ib < self.k):
            raise ValueError(f"plaquette ({a}, {b}) outside dual grid")
        return ia * self.k + ib


@lru_cache(maxsize=64)
def dual_geometry(n: int) -> "DualGeometry":
    return DualGeometry(n)


def has_open_circuit_fast(field, p, center: Site, inner: int, outer: int) -> bool:
    """Open circuit around the hole of the annulus, by dual-path blocking.

    A circuit of p-open annulus bonds surrounding the hole exists exactly
    when no dual path runs from the plaquettes at the center out past S(outer)
    using only dual bonds whose crossed primal bond is unavailable to the
    circuit (p-closed, or outside the annulus).
    """
    geo = dual_geometry(outer)
    cx, cy = center

    def passable(px, py, orient, du, dv):
        w = field.weights_array(px + cx, py + cy, orient)
        # primal bond endpoints; both must lie in the closed annulus for the
        # bond to be usable by a circuit
        if orient[0] == 1:  # vertical primal bonds
            e1x, e1y, e2x, e2y = px, py, px, py + 1
        else:
            e1x, e1y, e2x, e2y = px, py, px + 1, py
        d1 = np.maximum(np.abs(e1x), np.abs(e1y))
        d2 = np.maximum(np.abs(e2x), np.abs(e2y))
        in_annulus = (d1 >= inner) & (d1 <= outer) & (d2 >= inner) & (d2 <= outer)
        usable = (w <= p) & in_annulus
        return du[~usable], dv[~usable]

    hu, hv = passable(geo.dh_px, geo.dh_py, geo.dh_orient, geo.dh_u, geo.dh_v)
    vu, vv = passable(geo.dv_px, geo.dv_py, geo.dv_orient, geo.dv_u, geo.dv_v)
    u = np.concatenate([hu, vu])
    v = np.concatenate([hv, vv])
    labels = component_labels(geo.n_pl, u, v)

    start = [geo.plaquette_index(cx + da, cy + db, center)
             for da in (-1, 0) for db in (-1, 0)]
    # outermost plaquette ring: not contained in S(outer)
    out_mask = (geo.pl_a < -outer) | (geo.pl_a > outer - 1) | \
               (geo.pl_b < -outer) | (geo.pl_b > outer - 1)
    out_labels = np.unique(labels[out_mask])
    return not bool(np.isin(labels[start], out_labels).any())


def four_arm_event(field, p, n, center: Site = (0, 0),
                   p_dual: float | None = None) -> bool:
    """Alternating four-arm event at the edge <center, center + e1> in S(n).

    The edge needs two edge-disjoint p-open arms from its endpoints to the
    boundary of S(n), and its dual bond two edge-disjoint (p_dual)-closed
    dual arms to the dual boundary ring.  The anchor edge itself is excluded
    from all four arms.
    """
    if p_dual is None:
        p_dual = p
    cx, cy = center

    # primal side: contract the anchor edge's endpoints into one source
    geom = box_geometry(n)
    origin = (cx - n, cy - n)
    mh, mv = open_masks(field, p, geom, origin)
    e_u = geom.site_index((cx, cy), origin)
    e_v = geom.site_index((cx + 1, cy), origin)
    anchor = (geom.h_u == e_u) & (geom.h_v == e_v)
    mh = mh & ~anchor
    u = np.concatenate([geom.h_u[mh], geom.v_u[mv]])
    v = np.concatenate([geom.h_v[mh], geom.v_v[mv]])
    # merge e_v into e_u
    u = np.where(u == e_v, e_u, u)
    v = np.where(v == e_v, e_u, v)
    keep = u != v
    if edge_disjoint_flow(geom.n_sites, u[keep], v[keep], e_u,
                          _boundary_ring(geom)) < 2:
        return False

    # dual side: closed dual bonds, source = contracted endpoints of e*
    geo = dual_geometry(n)

    def closed_arcs(px, py, orient, du, dv):
        w = field.weights_array(px + cx, py + cy, orient)
        # crossed primal bond must lie inside S(n) for the dual arm to count
        if orient[0] == 1:
            e2x, e2y = px, py + 1
        else:
            e2x, e2y = px + 1, py
        inside = (np.maximum(np.abs(px), np.abs(py)) <= n) & \
                 (np.maximum(np.abs(e2x), np.abs(e2y)) <= n)
        m = (w > p_dual) & inside
        return du[m], dv[m]

    hu, hv = closed_arcs(geo.dh_px, geo.dh_py, geo.dh_orient, geo.dh_u, geo.dh_v)
    vu, vv = closed_arcs(geo.dv_px, geo.dv_py, geo.dv_orient, geo.dv_u, geo.dv_v)
    # dual bond of <(cx,cy),(cx+1,cy)> joins plaquettes (cx, cy-1) and (cx, cy)
    d_u = geo.plaquette_index(cx, cy - 1, center)
    d_v = geo.plaquette_index(cx, cy, center)
    du = np.concatenate([hu, vu])
    dv = np.concatenate([hv, vv])
    anchor_d = ((du == d_u) & (dv == d_v)) | ((du == d_v) & (dv == d_u))
    du, dv = du[~anchor_d], dv[~anchor_d]
    du = np.where(du == d_v, d_u, du)
    dv = np.where(dv == d_v, d_u, dv)
    keep = du != dv
    ring_mask = (geo.pl_a == -n) | (geo.pl_a == n - 1) | \
                (geo.pl_b == -n) | (geo.pl_b == n - 1)
    ring = np.flatnonzero(ring_mask).astype(np.int64)
    return edge_disjoint_flow(geo.n_pl, du[keep], dv[keep], d_u, ring) >= 2
