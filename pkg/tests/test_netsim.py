import numpy as np
import pytest

from mimicry.model import ModelParams, TopologySpec, eigenvalues, stationary_pmf
from mimicry.netsim import (
    EmpiricalDist,
    NetworkState,
    SimConfig,
    TopologyError,
    build_topology,
    exact_comparison,
    initial_state,
    read_edge_list,
    relaxation_estimate,
    replica_rng,
    run,
    run_replicas,
    simulate_snapshots,
    step,
)


class TestTopology:
    def test_full(self):
        topo = build_topology("full", 20)
        assert topo.k_av == 19 and topo.indptr is None
        assert np.all(topo.degrees == 19)

    def test_regular(self):
        topo = build_topology("regular", 100, k=20, seed=1)
        assert np.all(topo.degrees == 20)
        assert topo.k_av == 20

    def test_regular_is_seeded(self):
        a = build_topology("regular", 50, k=4, seed=7)
        b = build_topology("regular", 50, k=4, seed=7)
        assert np.array_equal(a.indices, b.indices)

    def test_regular_parity(self):
        with pytest.raises(TopologyError):
            build_topology("regular", 11, k=3, seed=0)

    def test_edge_list(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("# ring\n0 1\n1 2\n2 0\n\n")
        topo = build_topology("edges", path=path)
        assert topo.n_nodes == 3 and topo.k_av == 2
        assert sorted(topo.indices[topo.indptr[0]:topo.indptr[1]].tolist()) == [1, 2]

    def test_edge_list_errors_reported_with_lines(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("0 1\n2 2\n1 0\nx 3\n0 1 2\n")
        with pytest.raises(TopologyError) as err:
            read_edge_list(path)
        msg = str(err.value)
        for fragment in ["line 2: self-loop", "line 3: edge (0, 1) already listed on line 1", "line 4", "line 5"]:
            assert fragment in msg

    def test_isolated_node(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("0 1\n")
        with pytest.raises(TopologyError, match="degree 0"):
            build_topology("edges", 3, path=path)

    def test_out_of_range(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("0 5\n")
        with pytest.raises(TopologyError, match="out of range"):
            read_edge_list(path, 3)


class TestState:
    def test_validation(self):
        topo = TopologySpec.full(3)
        with pytest.raises(ValueError):
            NetworkState(np.array([1, 0, 1]), 2, topo, 1, 1)
        with pytest.raises(ValueError):
            NetworkState(np.array([1, -1, 1]), 1, topo, 1, 1)

    def test_step_changes_at_most_one_node(self, rng):
        topo = TopologySpec.full(30)
        state = initial_state(topo, 2, 3, rng)
        for _ in range(200):
            new = step(state, 0.0, rng)
            assert np.sum(new.signs != state.signs) <= 1
            assert new.up_count == int((new.signs > 0).sum())
            state = new

    def test_frozen_copy_probability(self):
        # from the all-up state with U = 0 the only way to flip is to copy a
        # frozen down node: probability D / (D + N - 1)
        rng = np.random.default_rng(3)
        n, d = 9, 3
        topo = TopologySpec.full(n)
        state = initial_state(topo, 0, d, rng, signs=np.ones(n))
        trials = 20000
        flips = sum(step(state, 0.0, rng).up_count < n for _ in range(trials))
        expected = d / (d + n - 1)
        assert abs(flips / trials - expected) < 4 * np.sqrt(expected * (1 - expected) / trials)

    def test_lazy_step_never_moves(self, rng):
        state = initial_state(TopologySpec.full(10), 1, 1, rng)
        assert np.array_equal(step(state, 1.0, rng).signs, state.signs)

    def test_absorbing_consensus(self):
        topo = TopologySpec.full(20)
        snaps, ks = simulate_snapshots(topo, 0, 0, 0.0, 50, 10, 2000, replica_rng(1))
        assert ks[0] in (0, 20)
        assert np.all(ks == ks[0])


class TestRun:
    def test_deterministic(self):
        topo = TopologySpec.full(15)
        cfg = SimConfig(burn_in_sweeps=10, sample_sweeps=500, seed=42)
        a = run(topo, 1, 2, cfg)
        b = run(topo, 1, 2, cfg)
        assert np.array_equal(a.counts, b.counts)
        c = run(topo, 1, 2, cfg, replica=1)
        assert not np.array_equal(a.counts, c.counts)

    def test_threads_do_not_change_results(self):
        topo = TopologySpec.full(15)
        cfg = SimConfig(burn_in_sweeps=10, sample_sweeps=300, seed=5)
        serial = run_replicas(topo, 1, 1, cfg, 3)
        threaded = run_replicas(topo, 1, 1, cfg, 3, threads=3)
        for a, b in zip(serial, threaded):
            assert np.array_equal(a.counts, b.counts)

    def test_thinning_sample_count(self):
        dist = run(TopologySpec.full(8), 1, 1, SimConfig(0, 123, thin=3, seed=0))
        assert dist.n_samples == 123 and dist.counts.sum() == 123

    def test_rejects_non_integer_frozen(self):
        with pytest.raises(ValueError):
            run(TopologySpec.full(8), 1.5, 1, SimConfig(0, 10))

    def test_merge_and_csv(self, tmp_path):
        a = EmpiricalDist(2, np.array([1, 2, 3]), 6)
        m = a.merge(a)
        assert m.n_samples == 12 and m.counts.tolist() == [2, 4, 6]
        m.to_csv(tmp_path / "h.csv")
        assert (tmp_path / "h.csv").read_text() == "k,count\n0,2\n1,4\n2,6\n"
        with pytest.raises(ValueError):
            a.merge(EmpiricalDist(3, np.zeros(4, int), 0))

    @pytest.mark.parametrize("n,u,d", [(5, 1, 3), (12, 1, 1), (8, 4, 2)])
    def test_matches_exact_law(self, n, u, d):
        cfg = SimConfig(burn_in_sweeps=100, sample_sweeps=200_000, seed=11)
        dist = run(TopologySpec.full(n), u, d, cfg)
        assert exact_comparison(dist, u, d) < 0.01

    def test_lazy_probability_keeps_law(self):
        topo = TopologySpec.full(6)
        cfg = SimConfig(burn_in_sweeps=100, sample_sweeps=200_000, seed=2, p=0.5)
        dist = run(topo, 2, 1, cfg)
        assert exact_comparison(dist, 2, 1) < 0.01

    def test_regular_graph_uses_rescaled_law(self):
        topo = build_topology("regular", 41, k=10, seed=3)
        dist = run(topo, 1, 1, SimConfig(burn_in_sweeps=200, sample_sweeps=100_000, seed=4))
        f = topo.rescale_factor
        exact = stationary_pmf(ModelParams(41, f, f)).probs
        naive = stationary_pmf(ModelParams(41, 1, 1)).probs
        assert dist.tv_distance(exact) < 0.05
        assert dist.tv_distance(exact) < dist.tv_distance(naive)


class TestRelaxation:
    def test_matches_second_eigenvalue(self):
        params = ModelParams(20, 2, 2)
        expected = 1 - eigenvalues(params).eigenvalues[1]
        est = relaxation_estimate(TopologySpec.full(20), 2, 2, 0.0, SimConfig(100, 100_000, seed=1))
        assert est.decaying
        assert abs(est.rate - expected) / expected < 0.15

    def test_lazy_halves_rate(self):
        topo = TopologySpec.full(20)
        cfg = SimConfig(100, 100_000, seed=1)
        fast = relaxation_estimate(topo, 2, 2, 0.0, cfg).rate
        slow = relaxation_estimate(topo, 2, 2, 0.5, cfg).rate
        assert slow / fast == pytest.approx(0.5, rel=0.2)

    def test_frozen_chain(self):
        with pytest.warns(RuntimeWarning):
            est = relaxation_estimate(TopologySpec.full(10), 1, 1, 1.0, SimConfig(10, 1000))
        assert est == (0.0, 0.0, False)

    def test_full_graph_only(self):
        with pytest.raises(ValueError):
            relaxation_estimate(build_topology("regular", 10, k=3, seed=0), 1, 1, 0.0, SimConfig(10, 100))
