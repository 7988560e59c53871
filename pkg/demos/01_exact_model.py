"""
Exact equilibrium of the copying model
======================================

Stationary law of the up-count, its moments, and the relaxation spectrum
for a fully connected market of N stocks with U up-frozen and D
down-frozen nodes.
"""
import numpy as np

from mimicry.model import (
    ModelParams,
    WrightFisherParams,
    eigenvalues,
    invert_moments,
    moments_of,
    stationary_pmf,
    transition_probability,
    wright_fisher_map,
)

N = 500

# At U = D = 1 every up-count is equally likely.
flat = stationary_pmf(ModelParams(N, 1, 1)).probs
print("U=D=1: min/max of rho(k) * (N+1):", flat.min() * (N + 1), flat.max() * (N + 1))

# Weak external influence makes the market bimodal, strong influence
# concentrates it around k = N/2.
for u in (0.2, 1.0, 5.79):
    dist = stationary_pmf(ModelParams(N, u, u))
    k = np.arange(N + 1)
    print(f"U=D={u:5.2f}: rho(0)={dist.probs[0]:.2e}  rho(N/2)={dist.probs[N // 2]:.2e}"
          f"  sd of k/N={np.sqrt(dist.var_fraction()):.3f}")

# Moments and their inversion.
m = moments_of(ModelParams(N, 1.5, 3.0))
xi, a = invert_moments(m.c1, m.c2, N)
print(f"c1={m.c1:.4f} c2={m.c2:.5f} -> U={xi * a:.6f} D={(1 - xi) * a:.6f}")

# Relaxation: the slowest mode decays at 1 - lambda_1 per node update;
# a lazy probability p slows everything by 1 - p without moving the equilibrium.
for p in (0.0, 0.5):
    lam = eigenvalues(ModelParams(N, 1, 1, p)).eigenvalues
    print(f"p={p}: 1 - lambda_1 = {1 - lam[1]:.3e}, mixing time ~ {1 / (1 - lam[1]) / N:.0f} sweeps")

# Starting from all stocks down, how long until the law is close to flat?
params = ModelParams(40, 1, 1)
spec = eigenvalues(params)
for sweeps in (1, 10, 40, 160):
    t = sweeps * params.n_nodes
    probs = np.array([transition_probability(0, k, t, params, spec) for k in range(41)])
    print(f"after {sweeps:3d} sweeps from k=0: TV to flat = {0.5 * np.abs(probs - 1 / 41).sum():.3f}")

# Mapping to a Moran model with mutation.
u, d = wright_fisher_map(WrightFisherParams(mu1=0.002, mu2=0.001, n_pop=N))
print(f"mutation rates (0.002, 0.001) in a population of {N} act like U={u:.3f}, D={d:.3f}")
