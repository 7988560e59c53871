"""Quick numerical self-checks of the exact model (used by ``mimicry validate``)."""
from __future__ import annotations

import numpy as np
from scipy.stats import betabinom

from .model import ModelParams, eigenvalues, evolution_matrix, invert_moments, moments_of, stationary_pmf


def _flatness():
    worst = max(
        np.abs(stationary_pmf(ModelParams(n, 1.0, 1.0)).probs - 1.0 / (n + 1)).max() for n in (1, 10, 500, 3000)
    )
    return worst < 1e-12, f"max |rho - 1/(N+1)| = {worst:.3g}"


def _beta_binomial(rng, draws=200):
    worst = 0.0
    for _ in range(draws):
        n = int(rng.integers(1, 201))
        u, d = rng.uniform(0.05, 50.0, size=2)
        ours = stationary_pmf(ModelParams(n, u, d)).probs
        ref = betabinom.pmf(np.arange(n + 1), n, u, d)
        m = ref > 1e-300
        worst = max(worst, float(np.max(np.abs(ours[m] - ref[m]) / ref[m])))
    return worst < 1e-10, f"max relative error = {worst:.3g}"


def _spectrum(rng):
    worst_eig = worst_fix = 0.0
    for n in (2, 5, 20, 50):
        params = ModelParams(n, float(rng.uniform(0.1, 10)), float(rng.uniform(0.1, 10)), float(rng.uniform(0, 0.9)))
        numeric = np.sort(np.linalg.eigvals(evolution_matrix(params).dense()).real)[::-1]
        worst_eig = max(worst_eig, float(np.abs(numeric - eigenvalues(params).eigenvalues).max()))
        rho = stationary_pmf(params).probs
        worst_fix = max(worst_fix, float(np.abs(evolution_matrix(params).apply(rho) - rho).max()))
    ok = worst_eig < 1e-9 and worst_fix < 1e-10
    return ok, f"max eigenvalue error = {worst_eig:.3g}, max |T rho - rho| = {worst_fix:.3g}"


def _round_trip(rng, draws=1000):
    worst = 0.0
    for _ in range(draws):
        n = int(rng.integers(2, 5001))
        u, d = rng.uniform(0.05, 100.0, size=2)
        m = moments_of(ModelParams(n, u, d))
        xi, a = invert_moments(m.c1, m.c2, n)
        worst = max(worst, abs(xi * a - u) / u, abs((1 - xi) * a - d) / d)
    return worst < 1e-12, f"max relative error = {worst:.3g}"


def run_checks(seed=0):
    """Return ``(name, passed, detail)`` for each identity."""
    rng = np.random.default_rng(seed)
    checks = [
        ("critical flatness", _flatness()),
        ("beta-binomial oracle", _beta_binomial(rng)),
        ("spectral identity", _spectrum(rng)),
        ("moment round trip", _round_trip(rng)),
    ]
    return [(name, bool(ok), detail) for name, (ok, detail) in checks]
