"""Sampling-driven search for the subgraph with the largest |hafnian|.

A complex-weighted graph is encoded into squeezers plus an interferometer
via the Takagi factorization of its (rescaled) adjacency matrix, so that
the top-left block of the device's sampling matrix is proportional to the
adjacency.  Click patterns then land preferentially on subgraphs with
large hafnians, which a plain keep-the-best random search exploits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
import scipy.linalg

from .errors import DecompositionError, GuardError
from .gaussian import (
    GaussianState,
    Interferometer,
    SingleModeSqueezerSpec,
    apply_interferometer,
    apply_single_mode_squeezer,
    sampling_matrix,
    thermal_state,
    vacuum,
)
from .matrixfn import hafnian
from .sampling import derive_rng

MAX_SUBSET_ENUMERATION = 10**6
SYMMETRY_TOL = 1e-12
# default ceiling on tanh(r) of the encoded squeezers; keeps the photon
# flux in a regime where k-click samples actually occur
DEFAULT_TANH_CAP = 0.76
RECONSTRUCTION_TOL = 1e-10


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected graph with complex edge weights and zero diagonal."""

    num_vertices: int
    adjacency: np.ndarray

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=np.complex128)
        v = self.num_vertices
        if adj.shape != (v, v):
            raise ValueError(f"adjacency must be {v}x{v}, got {adj.shape}")
        scale = max(1.0, float(np.max(np.abs(adj))) if adj.size else 1.0)
        if adj.size and float(np.max(np.abs(adj - adj.T))) > SYMMETRY_TOL * scale:
            raise ValueError("adjacency must be symmetric")
        if adj.size and float(np.max(np.abs(np.diagonal(adj)))) > SYMMETRY_TOL * scale:
            raise ValueError("adjacency must have zero diagonal")
        adj.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)

    def subgraph_adjacency(self, vertices: tuple[int, ...]) -> np.ndarray:
        idx = list(vertices)
        return self.adjacency[np.ix_(idx, idx)]


def load_graph_file(path) -> WeightedGraph:
    """Edge-list file: header line ``V``, then lines ``u v re[,im]`` (1-based)."""
    with open(path, "r", encoding="ascii") as fh:
        lines = [line.strip() for line in fh if line.strip()]
    if not lines:
        raise ValueError(f"graph file {path} is empty")
    try:
        v = int(lines[0])
    except ValueError as exc:
        raise ValueError(f"graph file {path}: header must be the vertex count") from exc
    adj = np.zeros((v, v), dtype=np.complex128)
    for ln, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"graph file {path}:{ln}: expected 'u v re[,im]'")
        try:
            a = int(parts[0])
            b = int(parts[1])
            if "," in parts[2]:
                re_str, im_str = parts[2].split(",")
                w = complex(float(re_str), float(im_str))
            else:
                w = complex(float(parts[2]))
        except ValueError as exc:
            raise ValueError(f"graph file {path}:{ln}: cannot parse {line!r}") from exc
        if not (1 <= a <= v and 1 <= b <= v) or a == b:
            raise ValueError(f"graph file {path}:{ln}: bad edge ({a}, {b}) for {v} vertices")
        adj[a - 1, b - 1] = w
        adj[b - 1, a - 1] = w
    return WeightedGraph(v, adj)


def save_graph_file(path, graph: WeightedGraph) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{graph.num_vertices}\n")
        for a in range(graph.num_vertices):
            for b in range(a + 1, graph.num_vertices):
                w = graph.adjacency[a, b]
                if w != 0:
                    fh.write(f"{a + 1} {b + 1} {w.real:.15e},{w.imag:.15e}\n")


# ---------------------------------------------------------------------------
# Takagi factorization and graph encoding
# ---------------------------------------------------------------------------

def takagi(a: np.ndarray, group_tol: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """Takagi (Autonne) factorization ``A = U diag(lam) U^T`` of a complex
    symmetric matrix, with ``lam >= 0`` descending and ``U`` unitary.

    Built on the SVD; degenerate singular values are handled by taking a
    matrix square root within each degenerate block.
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"Takagi input must be square, got {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a))) if a.size else 1.0)
    if a.size and float(np.max(np.abs(a - a.T))) > 1e-10 * scale:
        raise DecompositionError("Takagi factorization requires a symmetric matrix")
    n = a.shape[0]
    if n == 0:
        return np.zeros(0), np.zeros((0, 0), dtype=np.complex128)
    v, sing, wh = np.linalg.svd(a)
    w = wh.conj().T
    # group indices of (near-)equal singular values
    groups: list[list[int]] = []
    for i in range(n):
        if groups and sing[groups[-1][-1]] - sing[i] <= group_tol * max(1.0, sing[0]):
            groups[-1].append(i)
        else:
            groups.append([i])
    blocks = []
    for idx in groups:
        z = v[:, idx].T @ w[:, idx]
        blocks.append(scipy.linalg.sqrtm(z))
    q = scipy.linalg.block_diag(*blocks)
    u = v @ q.conj()
    recon = u @ np.diag(sing) @ u.T
    err = float(np.max(np.abs(recon - a)))
    if err > 1e-8 * scale:
        raise DecompositionError(f"Takagi reconstruction error {err:.3e}")
    return sing, u


@dataclass(frozen=True)
class GraphEncoding:
    """A graph mapped onto squeezers and an interferometer.

    The encoded state's sampling matrix has its top-left ``V x V`` block
    equal to ``scale * adjacency``.
    """

    graph: WeightedGraph
    num_modes: int
    squeezers: tuple[SingleModeSqueezerSpec, ...]
    interferometer: Interferometer
    scale: float
    mean_photons: float

    def state(self) -> GaussianState:
        st = vacuum(self.num_modes)
        for spec in self.squeezers:
            st = apply_single_mode_squeezer(st, spec)
        return apply_interferometer(st, self.interferometer)

    def thermal_state(self) -> GaussianState:
        """Same per-mode input photon numbers, entanglement removed."""
        means = np.zeros(self.num_modes)
        for spec in self.squeezers:
            means[spec.mode] = math.sinh(spec.r) ** 2
        return apply_interferometer(thermal_state(means), self.interferometer)


def encode_graph(
    graph: WeightedGraph,
    target_modes: int | None = None,
    tanh_cap: float = DEFAULT_TANH_CAP,
) -> GraphEncoding:
    """Encode a graph into a sampling experiment via Takagi factorization.

    The adjacency is rescaled by ``c = tanh_cap / sigma_max`` so the largest
    squeezer satisfies ``tanh(r) = tanh_cap`` (well inside the supported
    squeezing range); the reported ``scale`` is ``c``.  ``target_modes``
    defaults to the vertex count; extra modes are passed through unsqueezed.
    """
    v = graph.num_vertices
    m = v if target_modes is None else int(target_modes)
    if m < v:
        raise ValueError(f"target mode count {m} is smaller than the vertex count {v}")
    if not 0.0 < tanh_cap < 1.0:
        raise ValueError("tanh_cap must lie strictly between 0 and 1")
    sing, u_small = takagi(graph.adjacency)
    sigma_max = float(sing[0]) if sing.size else 0.0
    if sigma_max == 0.0:
        # empty graph: vacuum configuration
        return GraphEncoding(
            graph, m, (), Interferometer(np.eye(m, dtype=np.complex128)), 1.0, 0.0
        )
    scale = tanh_cap / sigma_max
    lam = scale * sing
    squeezers = tuple(
        SingleModeSqueezerSpec(i, math.atanh(float(l))) for i, l in enumerate(lam) if l > 1e-14
    )
    # with the a -> U a interferometer convention the sampling-matrix block
    # of squeezers-then-unitary is conj(U) diag(tanh r) conj(U)^T, so the
    # Takagi unitary enters conjugated
    u_full = np.eye(m, dtype=np.complex128)
    u_full[:v, :v] = u_small.conj()
    encoding = GraphEncoding(
        graph,
        m,
        squeezers,
        Interferometer(u_full),
        scale,
        float(np.sum(np.sinh([s.r for s in squeezers]) ** 2)),
    )
    block = sampling_matrix(encoding.state())[:v, :v]
    err = float(np.max(np.abs(block - scale * graph.adjacency)))
    if err > RECONSTRUCTION_TOL * max(1.0, float(np.max(np.abs(block)))):
        raise DecompositionError(
            f"encoded sampling matrix deviates from the adjacency by {err:.3e}"
        )
    return encoding


# ---------------------------------------------------------------------------
# search
# ---------------------------------------------------------------------------

def brute_force_max_haf(graph: WeightedGraph, k: int) -> tuple[tuple[int, ...], float]:
    """Exhaustive maximum of ``|haf|`` over all k-vertex subgraphs.

    Ties break toward the lexicographically smallest vertex subset.
    """
    v = graph.num_vertices
    if k % 2:
        raise ValueError("odd subgraph sizes have hafnian 0 for every subset")
    if not 0 < k <= v:
        raise ValueError(f"subgraph size {k} out of range 1..{v}")
    if math.comb(v, k) > MAX_SUBSET_ENUMERATION:
        raise GuardError(
            f"C({v},{k}) = {math.comb(v, k)} subsets exceeds the "
            f"{MAX_SUBSET_ENUMERATION} enumeration guard"
        )
    best_subset: tuple[int, ...] | None = None
    best_value = -1.0
    # combinations() is lexicographic, so a strict comparison keeps the
    # lexicographically smallest subset on ties
    for subset in combinations(range(v), k):
        value = abs(hafnian(graph.subgraph_adjacency(subset)))
        if value > best_value:
            best_value = value
            best_subset = subset
    assert best_subset is not None
    return best_subset, float(best_value)


@dataclass
class SearchCurve:
    """Mean normalized best-found |haf| as a function of the sample budget."""

    label: str
    subgraph_size: int
    budgets: np.ndarray
    mean_best: np.ndarray
    stderr: np.ndarray
    trial_best: np.ndarray  # (trials, budgets) normalized running bests
    zero_sample_trials: int

    def to_csv(self) -> str:
        lines = ["N,mean_normalized_best,stderr"]
        for n, mean, err in zip(self.budgets, self.mean_best, self.stderr):
            lines.append(f"{int(n)},{float(mean)!r},{float(err)!r}")
        return "\n".join(lines) + "\n"


def random_search(
    draw_masks,
    graph: WeightedGraph,
    k: int,
    budgets: list[int],
    trials: int,
    seed: int,
    label: str = "search",
    optimum: float | None = None,
) -> SearchCurve:
    """Keep-the-best random search over sampled subgraphs.

    ``draw_masks(rng, count)`` must return ``count`` click-pattern bitmasks
    over at least the graph's modes.  Samples are usable when exactly ``k``
    detectors clicked, all of them inside the graph's vertex block; each
    usable sample's subgraph |hafnian| updates the running best.  Results
    are normalized by the exhaustive optimum (computed here unless given).
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    budgets_arr = np.asarray(sorted(set(int(b) for b in budgets)), dtype=np.int64)
    if budgets_arr.size == 0 or budgets_arr[0] < 1:
        raise ValueError("budgets must be positive")
    if optimum is None:
        _, optimum = brute_force_max_haf(graph, k)
    if optimum <= 0:
        raise ValueError("graph optimum is zero; normalized search is undefined")
    v = graph.num_vertices
    max_budget = int(budgets_arr[-1])
    trial_best = np.zeros((trials, budgets_arr.size))
    zero_sample_trials = 0
    haf_cache: dict[tuple[int, ...], float] = {}
    for t in range(trials):
        rng = derive_rng(seed, 7, t)
        masks = np.asarray(draw_masks(rng, max_budget), dtype=np.int64)
        if masks.size != max_budget:
            raise ValueError("draw_masks returned the wrong number of samples")
        best = 0.0
        used_any = False
        checkpoint = 0
        for i, mask in enumerate(masks):
            mask = int(mask)
            if bin(mask).count("1") == k and mask < (1 << v):
                vertices = tuple(b for b in range(v) if (mask >> b) & 1)
                value = haf_cache.get(vertices)
                if value is None:
                    value = abs(hafnian(graph.subgraph_adjacency(vertices)))
                    haf_cache[vertices] = value
                used_any = True
                if value > best:
                    best = value
            while checkpoint < budgets_arr.size and i + 1 == budgets_arr[checkpoint]:
                trial_best[t, checkpoint] = best / optimum
                checkpoint += 1
        while checkpoint < budgets_arr.size:
            trial_best[t, checkpoint] = best / optimum
            checkpoint += 1
        if not used_any:
            zero_sample_trials += 1
    mean = trial_best.mean(axis=0)
    stderr = (
        trial_best.std(axis=0, ddof=1) / math.sqrt(trials) if trials > 1 else np.zeros_like(mean)
    )
    return SearchCurve(
        label=label,
        subgraph_size=k,
        budgets=budgets_arr,
        mean_best=mean,
        stderr=stderr,
        trial_best=trial_best,
        zero_sample_trials=zero_sample_trials,
    )
