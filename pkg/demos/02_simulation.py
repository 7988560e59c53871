"""
Simulating the copying dynamics on a network
============================================

Compares Monte Carlo histograms with the exact law on the complete graph,
and shows how a sparse random regular graph behaves like a complete graph
with rescaled frozen-node strengths.
"""
import argparse

from mimicry.model import ModelParams, eigenvalues, stationary_pmf
from mimicry.netsim import SimConfig, build_topology, exact_comparison, relaxation_estimate, run

parser = argparse.ArgumentParser(description=__doc__.strip().splitlines()[0])
parser.add_argument("--sweeps", type=int, default=100_000)
parser.add_argument("--seed", type=int, default=1)
args = parser.parse_args()

cfg = SimConfig(burn_in_sweeps=1000, sample_sweeps=args.sweeps, seed=args.seed)

full = build_topology("full", 10)
dist = run(full, 2, 2, cfg)
print(f"complete graph N=10, U=D=2: TV to exact law = {exact_comparison(dist, 2, 2):.4f}")

# k_av = 20 out of N - 1 = 100 possible neighbours: f = 5
sparse = build_topology("regular", 101, k=20, seed=args.seed)
dist = run(sparse, 1, 1, cfg)
f = sparse.rescale_factor
exact = stationary_pmf(ModelParams(101, f, f)).probs
naive = stationary_pmf(ModelParams(101, 1, 1)).probs
print(f"regular graph k=20: f={f:g}; TV to law at U=D={f:g}: {dist.tv_distance(exact):.4f},"
      f" to law at U=D=1: {dist.tv_distance(naive):.4f}")

params = ModelParams(20, 2, 2)
est = relaxation_estimate(build_topology("full", 20), 2, 2, 0.0, SimConfig(100, args.sweeps, seed=args.seed))
print(f"relaxation rate N=20: simulated {est.rate:.5f} +/- {est.stderr:.5f},"
      f" exact {1 - eigenvalues(params).eigenvalues[1]:.5f}")
