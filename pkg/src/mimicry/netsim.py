"""Monte Carlo simulation of the copying dynamics on a network.

Random numbers come from numpy ``Generator`` streams (PCG64) derived from
``SeedSequence(seed, spawn_key=(replica,))`` and are consumed in chunks by a
numba kernel, so runs are reproducible and replicas are independent.
"""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import networkx as nx
import numpy as np
from numba import njit

from .model import ModelParams, TopologySpec, stationary_pmf

__all__ = [
    "TopologyError",
    "NetworkState",
    "SimConfig",
    "EmpiricalDist",
    "RelaxationEstimate",
    "build_topology",
    "read_edge_list",
    "initial_state",
    "step",
    "run",
    "run_replicas",
    "relaxation_estimate",
    "replica_rng",
    "simulate_snapshots",
]

# random numbers drawn per chunk (two per node update)
_CHUNK_STEPS = 1 << 18


class TopologyError(ValueError):
    pass


def _csr_from_edges(n_nodes, edges):
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    both = np.concatenate([edges, edges[:, ::-1]])
    order = np.lexsort((both[:, 1], both[:, 0]))
    both = both[order]
    indptr = np.zeros(n_nodes + 1, dtype=np.int64)
    np.add.at(indptr, both[:, 0] + 1, 1)
    indptr = np.cumsum(indptr)
    return indptr, both[:, 1].copy()


def _topology_from_edges(kind, n_nodes, edges):
    indptr, indices = _csr_from_edges(n_nodes, edges)
    degrees = np.diff(indptr)
    isolated = np.flatnonzero(degrees == 0)
    if isolated.size:
        raise TopologyError(
            f"{isolated.size} variable node(s) have degree 0 (first: {isolated[:5].tolist()})"
        )
    indptr.setflags(write=False)
    indices.setflags(write=False)
    return TopologySpec(kind, n_nodes, float(degrees.mean()), indptr, indices)


def read_edge_list(path, n_nodes=None):
    """Parse an undirected "i j" edge list (0-indexed, one pair per line).

    Blank lines and ``#`` comments are ignored. All problems are collected and
    reported together with line numbers.
    """
    path = Path(path)
    errors = []
    edges = []
    seen = {}
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.split()
            if len(parts) != 2:
                errors.append(f"line {lineno}: expected two node indices, got {text!r}")
                continue
            try:
                i, j = int(parts[0]), int(parts[1])
            except ValueError:
                errors.append(f"line {lineno}: non-integer node index in {text!r}")
                continue
            if i < 0 or j < 0:
                errors.append(f"line {lineno}: negative node index")
                continue
            if n_nodes is not None and (i >= n_nodes or j >= n_nodes):
                errors.append(f"line {lineno}: node index out of range for N={n_nodes}")
                continue
            if i == j:
                errors.append(f"line {lineno}: self-loop on node {i}")
                continue
            key = (min(i, j), max(i, j))
            if key in seen:
                errors.append(f"line {lineno}: edge {key} already listed on line {seen[key]}")
                continue
            seen[key] = lineno
            edges.append(key)
    if errors:
        raise TopologyError(f"malformed edge list {path}:\n  " + "\n  ".join(errors))
    if not edges:
        raise TopologyError(f"edge list {path} contains no edges")
    return edges


def build_topology(kind, n_nodes=None, *, k=None, seed=None, path=None) -> TopologySpec:
    """Build a validated variable-node graph.

    ``kind`` is ``"full"``, ``"regular"`` (random ``k``-regular graph, needs
    ``k`` and ``seed``) or ``"edges"`` (edge-list file at ``path``).
    """
    if kind == "full":
        if n_nodes is None or n_nodes < 1:
            raise TopologyError("full topology needs n_nodes >= 1")
        return TopologySpec.full(n_nodes)
    if kind == "regular":
        if k is None or n_nodes is None:
            raise TopologyError("regular topology needs n_nodes and k")
        if not 1 <= k <= n_nodes - 1:
            raise TopologyError(f"degree k={k} must lie in [1, N-1]")
        if (k * n_nodes) % 2:
            raise TopologyError(f"k*N must be even (k={k}, N={n_nodes})")
        graph = nx.random_regular_graph(k, n_nodes, seed=seed)
        return _topology_from_edges("regular", n_nodes, list(graph.edges()))
    if kind == "edges":
        if path is None:
            raise TopologyError("edge-list topology needs a path")
        edges = read_edge_list(path, n_nodes)
        if n_nodes is None:
            n_nodes = max(max(e) for e in edges) + 1
        return _topology_from_edges("edges", n_nodes, edges)
    raise TopologyError(f"unknown topology kind {kind!r}")


@dataclass(frozen=True)
class NetworkState:
    signs: np.ndarray
    up_count: int
    topology: TopologySpec
    frozen_up: int
    frozen_down: int

    def __post_init__(self):
        signs = np.asarray(self.signs, dtype=np.int8)
        if signs.shape != (self.topology.n_nodes,):
            raise ValueError("signs must have one entry per variable node")
        if not np.all(np.abs(signs) == 1):
            raise ValueError("signs must be +1 or -1")
        if int((signs > 0).sum()) != self.up_count:
            raise ValueError("up_count does not match signs")
        if self.frozen_up < 0 or self.frozen_down < 0:
            raise ValueError("frozen node counts must be non-negative")
        signs.setflags(write=False)
        object.__setattr__(self, "signs", signs)


@dataclass(frozen=True)
class SimConfig:
    burn_in_sweeps: int = 1000
    sample_sweeps: int = 10_000
    thin: int = 1
    seed: int = 0
    p: float = 0.0

    def __post_init__(self):
        if self.burn_in_sweeps < 0:
            raise ValueError("burn_in_sweeps must be >= 0")
        if self.sample_sweeps < 1:
            raise ValueError("sample_sweeps must be >= 1")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")


@dataclass(frozen=True)
class EmpiricalDist:
    n_nodes: int
    counts: np.ndarray
    n_samples: int

    @property
    def frequencies(self):
        return self.counts / self.n_samples

    def tv_distance(self, probs):
        return 0.5 * float(np.abs(self.frequencies - np.asarray(probs)).sum())

    def merge(self, other: "EmpiricalDist") -> "EmpiricalDist":
        if other.n_nodes != self.n_nodes:
            raise ValueError("cannot merge histograms of different N")
        return EmpiricalDist(self.n_nodes, self.counts + other.counts, self.n_samples + other.n_samples)

    def to_csv(self, path):
        lines = ["k,count"] + [f"{k},{c}" for k, c in enumerate(self.counts)]
        Path(path).write_text("\n".join(lines) + "\n")


def replica_rng(seed, replica=0):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(replica,))))


@njit(cache=True, nogil=True)
def _advance(signs, up, n_up_frozen, n_down_frozen, p, full, indptr, indices, r_node, r_copy):
    """Apply ``len(r_node)`` node updates in place; return the new up-count."""
    n = signs.shape[0]
    for s in range(r_node.shape[0]):
        r = r_copy[s]
        if r < p:
            continue
        r = (r - p) / (1.0 - p)
        i = int(r_node[s] * n)
        if i >= n:
            i = n - 1
        if full:
            deg = n - 1
        else:
            deg = indptr[i + 1] - indptr[i]
        total = deg + n_up_frozen + n_down_frozen
        if total == 0:
            continue
        j = int(r * total)
        if j >= total:
            j = total - 1
        if j < deg:
            if full:
                nb = j if j < i else j + 1
            else:
                nb = indices[indptr[i] + j]
            new = signs[nb]
        elif j < deg + n_up_frozen:
            new = 1
        else:
            new = -1
        if new != signs[i]:
            up += 1 if new > 0 else -1
            signs[i] = new
    return up


_NO_SNAPS = np.zeros((0, 0), dtype=np.int8)


@njit(cache=True, nogil=True)
def _advance_record(signs, up, n_up_frozen, n_down_frozen, p, full, indptr, indices, r_node, r_copy,
                    steps_per_sample, ks, snaps, record_snaps):
    for i in range(ks.shape[0]):
        lo = i * steps_per_sample
        hi = lo + steps_per_sample
        up = _advance(signs, up, n_up_frozen, n_down_frozen, p, full, indptr, indices, r_node[lo:hi], r_copy[lo:hi])
        ks[i] = up
        if record_snaps:
            snaps[i, :] = signs


def _csr(topology):
    if topology.indptr is None:
        empty = np.zeros(1, dtype=np.int64)
        return True, empty, empty
    return False, topology.indptr, topology.indices


def initial_state(topology, u, d, rng, signs=None) -> NetworkState:
    if signs is None:
        signs = np.where(rng.random(topology.n_nodes) < 0.5, 1, -1).astype(np.int8)
    signs = np.asarray(signs, dtype=np.int8)
    return NetworkState(signs, int((signs > 0).sum()), topology, int(u), int(d))


def step(state: NetworkState, p, rng) -> NetworkState:
    """One node update: pick a node, keep its sign with probability ``p``,
    otherwise copy a uniformly drawn variable neighbour or frozen node."""
    signs = state.signs.copy()
    full, indptr, indices = _csr(state.topology)
    r = rng.random(2)
    up = _advance(signs, state.up_count, state.frozen_up, state.frozen_down, float(p), full, indptr, indices,
                  r[:1], r[1:])
    return NetworkState(signs, int(up), state.topology, state.frozen_up, state.frozen_down)


class _Chain:
    """Mutable simulation state stepping in whole sweeps."""

    def __init__(self, topology, u, d, p, rng, signs=None):
        if int(u) != u or int(d) != d or u < 0 or d < 0:
            raise ValueError("simulation needs non-negative integer U and D")
        self.topology = topology
        self.u, self.d, self.p = int(u), int(d), float(p)
        self.rng = rng
        state = initial_state(topology, u, d, rng, signs)
        self.signs = state.signs.copy()
        self.up = state.up_count
        self.full, self.indptr, self.indices = _csr(topology)

    def sweeps(self, n_sweeps):
        """Advance ``n_sweeps`` sweeps of N node updates each."""
        n = self.topology.n_nodes
        remaining = n_sweeps * n
        while remaining > 0:
            m = min(remaining, _CHUNK_STEPS)
            r_node = self.rng.random(m)
            r_copy = self.rng.random(m)
            self.up = _advance(self.signs, self.up, self.u, self.d, self.p, self.full, self.indptr, self.indices,
                               r_node, r_copy)
            remaining -= m

    def trace(self, n_samples, thin, snapshots=False):
        """Record the up-count (and optionally all signs) every ``thin`` sweeps."""
        n = self.topology.n_nodes
        ks = np.empty(n_samples, dtype=np.int64)
        snaps = np.empty((n_samples, n), dtype=np.int8) if snapshots else None
        per_chunk = max(1, _CHUNK_STEPS // (n * thin))
        done = 0
        while done < n_samples:
            m = min(per_chunk, n_samples - done)
            r_node = self.rng.random(m * n * thin)
            r_copy = self.rng.random(m * n * thin)
            _advance_record(self.signs, self.up, self.u, self.d, self.p, self.full, self.indptr, self.indices,
                            r_node, r_copy, n * thin, ks[done:done + m],
                            snaps[done:done + m] if snapshots else _NO_SNAPS, snapshots)
            self.up = int(ks[done + m - 1])
            done += m
        return ks, snaps


def _sample_trace(topology, u, d, config, replica):
    chain = _Chain(topology, u, d, config.p, replica_rng(config.seed, replica))
    chain.sweeps(config.burn_in_sweeps)
    ks, _ = chain.trace(config.sample_sweeps, config.thin)
    return ks


def run(topology: TopologySpec, u, d, config: SimConfig, replica=0) -> EmpiricalDist:
    """Histogram of the up-count after burn-in.

    One sweep is N node updates; ``config.sample_sweeps`` samples are taken,
    one every ``config.thin`` sweeps.
    """
    ks = _sample_trace(topology, u, d, config, replica)
    counts = np.bincount(ks, minlength=topology.n_nodes + 1)
    return EmpiricalDist(topology.n_nodes, counts, int(ks.size))


def run_replicas(topology, u, d, config: SimConfig, n_replicas, threads=1):
    """Independent replicas on derived streams; merge with ``EmpiricalDist.merge``."""
    if threads <= 1:
        return [run(topology, u, d, config, r) for r in range(n_replicas)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda r: run(topology, u, d, config, r), range(n_replicas)))


def simulate_snapshots(topology, u, d, p, n_samples, sweeps_per_sample, burn_in_sweeps, rng, signs=None):
    """Sign vectors recorded every ``sweeps_per_sample`` sweeps after a burn-in.

    Returns ``(snapshots, up_counts)``; ``snapshots`` has one row per sample.
    """
    chain = _Chain(topology, u, d, p, rng, signs)
    chain.sweeps(burn_in_sweeps)
    ks, snaps = chain.trace(n_samples, sweeps_per_sample, snapshots=True)
    return snaps, ks


class RelaxationEstimate(NamedTuple):
    rate: float
    stderr: float
    decaying: bool


def _decay_constant(x, max_lag):
    """Exponential decay constant (per sample) of the autocorrelation of ``x``."""
    x = x - x.mean()
    var = x.var()
    if var == 0:
        return np.nan
    n = x.size
    nfft = 1 << int(np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(x, nfft)
    acf = np.fft.irfft(f * np.conj(f), nfft)[: max_lag + 1] / (var * np.arange(n, n - max_lag - 1, -1))
    below = np.flatnonzero(acf[1:] < 0.1)
    last = below[0] if below.size else max_lag
    lags = np.arange(1, last + 1)
    if lags.size == 0:
        return np.inf
    y = np.log(acf[lags])
    return -float(np.dot(lags, y) / np.dot(lags, lags))


def relaxation_estimate(topology, u, d, p, config: SimConfig, n_blocks=10) -> RelaxationEstimate:
    """Relaxation rate per node update estimated from the up-count autocorrelation.

    Compare with ``1 - lambda_1``. The autocorrelation is fitted on
    samples every ``config.thin`` sweeps; the standard error comes from
    ``n_blocks`` contiguous blocks of the trace.
    """
    if topology.kind != "full":
        raise ValueError("the analytic relaxation rate is only defined for the complete graph")
    cfg = SimConfig(config.burn_in_sweeps, config.sample_sweeps, config.thin, config.seed, p)
    ks = _sample_trace(topology, u, d, cfg, 0).astype(float)
    steps_per_sample = topology.n_nodes * cfg.thin
    if ks.var() == 0:
        warnings.warn("up-count never changed; no decay to fit", RuntimeWarning, stacklevel=2)
        return RelaxationEstimate(0.0, 0.0, False)
    max_lag = max(10, ks.size // (4 * n_blocks))
    kappa = _decay_constant(ks, max_lag)
    block_kappas = np.array([_decay_constant(b, max_lag) for b in np.array_split(ks, n_blocks)])
    to_rate = lambda kap: -np.expm1(-kap / steps_per_sample)
    rate = float(to_rate(kappa))
    rates = to_rate(block_kappas[np.isfinite(block_kappas)])
    stderr = float(rates.std(ddof=1) / np.sqrt(rates.size)) if rates.size > 1 else np.inf
    if not stderr <= 0.25 * rate:
        warnings.warn(
            f"relaxation fit unstable: relative stderr {stderr / rate:.2f} > 0.25; use a longer run",
            RuntimeWarning,
            stacklevel=2,
        )
    return RelaxationEstimate(rate, stderr, True)


def exact_comparison(dist: EmpiricalDist, u, d):
    """Total-variation distance to the exact stationary law of the complete graph."""
    return dist.tv_distance(stationary_pmf(ModelParams(dist.n_nodes, u, d)).probs)
