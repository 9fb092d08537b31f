"""Shared instance generators and oracles for the engine test suites."""

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from qnetperc.quantum import ChannelModel, DistillationParams, ModelParams
from qnetperc.topology import PointCloud, build_network, generate_uniform_points

D0 = 100.0


def params_for_r0(r0: float, alpha: float, m: int = 1, cap: bool = True,
                  mode: str = "asymptotic", eta: float = 1.0,
                  growth: bool = True) -> ModelParams:
    """Parameters whose base range is exactly r0 (asymptotic mode, d0=100)."""
    eps = 0.75 * r0 / (D0 * m ** (eta * alpha))
    return ModelParams(channel=ChannelModel(d0_km=D0, epsilon=eps),
                       distill=DistillationParams(m=m, alpha=alpha, eta=eta),
                       range_mode=mode, beta_cap=cap, size_growth=growth)


def random_instance(seed: int, max_n: int = 50):
    """A random point cloud or random geometric edge list, seeded."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, max_n + 1))
    if rng.random() < 0.5:
        return generate_uniform_points(n, box_side=1.0, seed=seed)
    pts = rng.uniform(0.0, 1.0, size=(n, 2))
    radius = rng.uniform(0.25, 0.6)
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            d = float(np.hypot(*(pts[i] - pts[j])))
            if d < radius:
                edges.append((f"v{i:03d}", f"v{j:03d}", d))
    return build_network(edges, extra_nodes=[f"v{i:03d}" for i in range(n)])


def nearest_scale(network) -> float:
    """Median nearest-neighbor distance, the natural range scale of an instance."""
    if isinstance(network, PointCloud):
        mat = network.distance_matrix()
        np.fill_diagonal(mat, np.inf)
        return float(np.median(mat.min(axis=1)))
    best: dict[str, float] = {}
    for u, v, length in network.edges:
        best[u] = min(best.get(u, np.inf), length)
        best[v] = min(best.get(v, np.inf), length)
    finite = [x for x in best.values() if np.isfinite(x)]
    return float(np.median(finite)) if finite else 1.0


def random_params(seed: int, network) -> ModelParams:
    rng = np.random.default_rng(seed + 977)
    alpha = float(rng.choice([0.0, 0.3, 0.585, 1.0]))
    r0 = float(rng.uniform(0.4, 1.6)) * nearest_scale(network)
    m = int(rng.choice([1, 4, 102]))
    cap = bool(rng.random() < 0.5)
    return params_for_r0(min(r0, 100.0), alpha, m=m, cap=cap)


def disk_percolation_oracle(network, r0: float) -> set[frozenset]:
    """Brute-force transitive closure of the strict criterion d < r0 on raw nodes."""
    if isinstance(network, PointCloud):
        mat = network.distance_matrix()
        labels = list(range(network.n_nodes))
        adj = (mat < r0) & (mat > 0)
    else:
        labels = list(network.node_ids)
        index = {x: i for i, x in enumerate(labels)}
        n = len(labels)
        adj = np.zeros((n, n), dtype=bool)
        for u, v, length in network.edges:
            if length < r0:
                adj[index[u], index[v]] = adj[index[v], index[u]] = True
    _, comp = connected_components(csr_matrix(adj), directed=False)
    blocks: dict[int, set] = {}
    for i, c in enumerate(comp):
        blocks.setdefault(c, set()).add(labels[i])
    return {frozenset(b) for b in blocks.values()}


def is_refinement(fine: set[frozenset], coarse: set[frozenset]) -> bool:
    """Every fine block is contained in some coarse block."""
    return all(any(f <= c for c in coarse) for f in fine)


