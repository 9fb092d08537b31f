"""Spatial network construction and ingestion.

Two network flavors feed the percolation engine:

- PointCloud: nodes embedded in a 2D box, every pair at its Euclidean
  distance (the random-geometric setting);
- EdgeListNetwork: nodes connected by explicit fiber links, every pair
  without a cable at unreachable distance.

Also provides the repeater-insertion transform (cut each cable at the
points of a Poisson process, mean segment 50 km by default) and a
synthetic planar fiber-network generator used as a stand-in for
proprietary operator topologies.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import minimum_spanning_tree
from scipy.spatial import Delaunay

STATION = "station"
REPEATER = "repeater"


# ---------------------------------------------------------------------------
# Point clouds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PointCloud:
    """Uniform 2D point set; positions is an (N, 2) float array."""

    positions: np.ndarray
    box_side: float = 1.0
    seed: int | None = None

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 2 or pos.shape[0] < 1:
            raise ValueError(f"positions must be a non-empty (N, 2) array, got {pos.shape}")
        if np.any(pos < 0) or np.any(pos >= self.box_side):
            raise ValueError("all coordinates must lie in [0, box_side)")
        object.__setattr__(self, "positions", pos)

    @property
    def n_nodes(self) -> int:
        return self.positions.shape[0]

    def distance_matrix(self) -> np.ndarray:
        """Dense pairwise Euclidean distances, diagonal zero."""
        diff = self.positions[:, None, :] - self.positions[None, :, :]
        return np.sqrt((diff * diff).sum(axis=2))


def generate_uniform_points(n: int, box_side: float = 1.0, seed: int = 0) -> PointCloud:
    """N i.i.d. uniform points in [0, box_side)^2, bit-reproducible per seed."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if box_side <= 0:
        raise ValueError(f"box_side must be positive, got {box_side}")
    rng = np.random.default_rng(seed)
    pos = rng.uniform(0.0, box_side, size=(n, 2))
    return PointCloud(positions=pos, box_side=box_side, seed=seed)


def euclidean_distance(cloud: PointCloud, i: int, j: int) -> float:
    if not (0 <= i < cloud.n_nodes and 0 <= j < cloud.n_nodes):
        raise IndexError(f"node index out of range: ({i}, {j}) for N={cloud.n_nodes}")
    d = cloud.positions[i] - cloud.positions[j]
    return float(math.hypot(d[0], d[1]))


def save_point_cloud(cloud: PointCloud, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("id,x,y\n")
        for i, (x, y) in enumerate(cloud.positions):
            fh.write(f"{i},{float(x)!r},{float(y)!r}\n")


def load_point_cloud(path, box_side: float | None = None) -> PointCloud:
    rows = []
    with open(path, encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["id", "x", "y"]:
            raise ValueError(f"{path}: expected header 'id,x,y', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            try:
                rows.append((int(row[0]), float(row[1]), float(row[2])))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    rows.sort()
    pos = np.array([(x, y) for _, x, y in rows], dtype=float)
    if box_side is None:
        box_side = float(np.nextafter(pos.max(), np.inf)) if len(pos) else 1.0
    return PointCloud(positions=pos, box_side=box_side)


# ---------------------------------------------------------------------------
# Edge-list networks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EdgeListNetwork:
    """Sparse fiber network: canonical sorted nodes and (u, v, length_km) edges.

    Edges are stored with u < v lexicographically, sorted, at most one per
    pair (duplicates collapse to the minimum length).  Pairs without an edge
    are unreachable.  positions, when present, align with node_ids and exist
    purely for export and plotting.
    """

    node_ids: tuple[str, ...]
    kinds: tuple[str, ...]
    edges: tuple[tuple[str, str, float], ...]
    positions: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if len(self.node_ids) < 1:
            raise ValueError("network must contain at least one node")
        if len(self.kinds) != len(self.node_ids):
            raise ValueError("kinds must align with node_ids")
        if self.positions is not None and len(self.positions) != len(self.node_ids):
            raise ValueError("positions must align with node_ids")

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def total_length_km(self) -> float:
        return float(sum(l for _, _, l in self.edges))

    def index_of(self) -> dict[str, int]:
        return {nid: i for i, nid in enumerate(self.node_ids)}

    def is_connected(self) -> bool:
        """Connectivity as a classical graph (ignores lengths)."""
        if self.n_nodes == 1:
            return True
        idx = self.index_of()
        adj: list[list[int]] = [[] for _ in self.node_ids]
        for u, v, _ in self.edges:
            adj[idx[u]].append(idx[v])
            adj[idx[v]].append(idx[u])
        seen = {0}
        stack = [0]
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return len(seen) == self.n_nodes


def build_network(edges, kinds: dict[str, str] | None = None,
                  extra_nodes=(), positions: dict[str, tuple[float, float]] | None = None,
                  ) -> EdgeListNetwork:
    """Canonicalize raw (u, v, length) triples into an EdgeListNetwork.

    Duplicate pairs keep the minimum length; self-loops and non-positive
    lengths are rejected.
    """
    best: dict[tuple[str, str], float] = {}
    nodes = set(map(str, extra_nodes))
    for u, v, length in edges:
        u, v = str(u), str(v)
        length = float(length)
        if u == v:
            raise ValueError(f"self-loop on node {u!r}")
        if not length > 0:
            raise ValueError(f"edge ({u}, {v}) has non-positive length {length}")
        key = (u, v) if u < v else (v, u)
        if key not in best or length < best[key]:
            best[key] = length
        nodes.add(u)
        nodes.add(v)
    node_ids = tuple(sorted(nodes))
    kinds = kinds or {}
    kind_tuple = tuple(kinds.get(nid, STATION) for nid in node_ids)
    for k in kind_tuple:
        if k not in (STATION, REPEATER):
            raise ValueError(f"unknown node kind {k!r}")
    edge_tuple = tuple(sorted((u, v, best[(u, v)]) for (u, v) in best))
    pos_tuple = None
    if positions is not None:
        pos_tuple = tuple((float(positions[nid][0]), float(positions[nid][1]))
                          for nid in node_ids)
    return EdgeListNetwork(node_ids=node_ids, kinds=kind_tuple, edges=edge_tuple,
                           positions=pos_tuple)


def load_edge_list(path) -> EdgeListNetwork:
    """Parse the edge-list CSV format: header 'u,v,length_km', opaque string ids."""
    edges = []
    with open(path, encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["u", "v", "length_km"]:
            raise ValueError(f"{path}: expected header 'u,v,length_km', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            u, v, raw = row
            try:
                length = float(raw)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: bad length {raw!r}") from None
            try:
                edges.append((u.strip(), v.strip(), length))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    try:
        return build_network(edges)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


def save_edge_list(net: EdgeListNetwork, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("u,v,length_km\n")
        for u, v, length in net.edges:
            fh.write(f"{u},{v},{length!r}\n")


def network_to_json(net: EdgeListNetwork) -> dict:
    """Export schema: {nodes: [{id, kind, x?, y?}], edges: [{u, v, length_km}]}."""
    nodes = []
    for i, nid in enumerate(net.node_ids):
        entry: dict = {"id": nid, "kind": net.kinds[i]}
        if net.positions is not None:
            entry["x"], entry["y"] = net.positions[i]
        nodes.append(entry)
    edges = [{"u": u, "v": v, "length_km": l} for u, v, l in net.edges]
    return {"nodes": nodes, "edges": edges}


def save_network_json(net: EdgeListNetwork, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(network_to_json(net), fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Repeater insertion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RepeaterConfig:
    """Poisson cutting of cables into ~mean_segment_km pieces."""

    mean_segment_km: float = 50.0
    seed: int = 0

    def __post_init__(self):
        if not self.mean_segment_km > 0:
            raise ValueError(f"mean_segment_km must be positive, got {self.mean_segment_km}")


def insert_repeaters(net: EdgeListNetwork, cfg: RepeaterConfig) -> EdgeListNetwork:
    """Cut every cable at the points of a homogeneous Poisson process.

    Along a cable of length L the cut count is Poisson(L/mean) with positions
    i.i.d. uniform, so segment lengths are exponential with the configured
    mean.  New repeater nodes concatenate the segments; the segment lengths of
    each cable sum to the original length.  Deterministic per (seed, edge):
    each edge draws from a child seed derived from its index in the canonical
    edge order.
    """
    have_pos = net.positions is not None
    idx = net.index_of()
    rate = 1.0 / cfg.mean_segment_km
    new_edges: list[tuple[str, str, float]] = []
    kinds = {nid: net.kinds[i] for i, nid in enumerate(net.node_ids)}
    positions = ({nid: net.positions[i] for i, nid in enumerate(net.node_ids)}
                 if have_pos else None)
    for edge_index, (u, v, length) in enumerate(net.edges):
        rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, edge_index)))
        k = int(rng.poisson(length * rate))
        if k == 0:
            new_edges.append((u, v, length))
            continue
        cuts = np.sort(rng.uniform(0.0, length, size=k))
        names = [f"rep__{u}__{v}__{j}" for j in range(k)]
        chain = [u] + names + [v]
        offsets = np.concatenate(([0.0], cuts, [length]))
        for j, name in enumerate(names):
            kinds[name] = REPEATER
            if have_pos:
                t = cuts[j] / length
                pu, pv = positions[u], positions[v]
                positions[name] = (pu[0] + t * (pv[0] - pu[0]),
                                   pu[1] + t * (pv[1] - pu[1]))
        for a, b, lo, hi in zip(chain[:-1], chain[1:], offsets[:-1], offsets[1:]):
            new_edges.append((a, b, float(hi - lo)))
    # nodes with no edges must survive the rebuild
    degree = {nid: 0 for nid in net.node_ids}
    for u, v, _ in net.edges:
        degree[u] += 1
        degree[v] += 1
    isolated = [nid for nid, d in degree.items() if d == 0]
    _ = idx  # canonical order only matters through edge_index above
    return build_network(new_edges, kinds=kinds, extra_nodes=isolated,
                         positions=positions)


# ---------------------------------------------------------------------------
# Synthetic fiber network
# ---------------------------------------------------------------------------

def generate_fiber_network(n_nodes: int = 692, n_edges: int = 733,
                           mean_length_km: float = 500.0, seed: int = 0,
                           ) -> EdgeListNetwork:
    """Synthetic planar stand-in for a national fiber topology.

    Scatters n_nodes points, takes the Euclidean minimum spanning tree plus
    the shortest extra Delaunay edges up to n_edges total, then rescales
    coordinates so the mean cable length is exactly mean_length_km.  The
    result is connected, planar, and clearly labeled synthetic; it matches the
    reference operator network's node/edge counts and length scale but not its
    (non-public) geometry.
    """
    if n_nodes < 3:
        raise ValueError(f"n_nodes must be >= 3, got {n_nodes}")
    if n_edges < n_nodes - 1:
        raise ValueError(f"n_edges must be >= n_nodes - 1 to stay connected, got {n_edges}")
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.0, 1.0, size=(n_nodes, 2))
    tri = Delaunay(pts)
    pairs = set()
    for simplex in tri.simplices:
        for a in range(3):
            i, j = int(simplex[a]), int(simplex[(a + 1) % 3])
            pairs.add((min(i, j), max(i, j)))
    pairs = sorted(pairs)
    if len(pairs) < n_edges:
        raise ValueError(f"Delaunay graph has only {len(pairs)} edges, need {n_edges}")
    lengths = np.array([np.hypot(*(pts[i] - pts[j])) for i, j in pairs])
    # MST guarantees connectivity; it is a subgraph of the Delaunay graph.
    from scipy.sparse import coo_matrix
    rows = [i for i, _ in pairs]
    cols = [j for _, j in pairs]
    graph = coo_matrix((lengths, (rows, cols)), shape=(n_nodes, n_nodes))
    mst = minimum_spanning_tree(graph).tocoo()
    chosen = {(min(int(r), int(c)), max(int(r), int(c)))
              for r, c in zip(mst.row, mst.col)}
    extra_order = np.argsort(lengths, kind="stable")
    for k in extra_order:
        if len(chosen) >= n_edges:
            break
        chosen.add(pairs[k])
    scale = mean_length_km / float(np.mean([np.hypot(*(pts[i] - pts[j]))
                                            for i, j in sorted(chosen)]))
    width = max(len(str(n_nodes - 1)), 3)
    names = [f"n{i:0{width}d}" for i in range(n_nodes)]
    edges = [(names[i], names[j], float(np.hypot(*(pts[i] - pts[j])) * scale))
             for i, j in sorted(chosen)]
    positions = {names[i]: (float(pts[i, 0] * scale), float(pts[i, 1] * scale))
                 for i in range(n_nodes)}
    return build_network(edges, positions=positions)
