import numpy as np
import pytest

from gpbound import oracle
from gpbound.graphs import (
    Gpkc,
    GraphInstance,
    KEquipartition,
    Partition,
    cut_value,
    gen_gpkc_instance,
    gen_rand_graph,
)
from gpbound.rounding import (
    gram_factor,
    hyp_plus_two_opt,
    hyperplane_round,
    hyperplane_transform,
    two_opt_bisection,
    two_opt_multi,
    vc_plus_two_opt,
    vc_round_gpkc,
    vc_round_keq,
)


def complete_graph(n):
    W = np.full((n, n), 1.0)
    np.fill_diagonal(W, 0.0)
    return GraphInstance(n=n, W_adj=W, name=f"K{n}")


def indicator_gram(p: Partition) -> np.ndarray:
    assign = p.assignment()
    return (assign[:, None] == assign[None, :]).astype(float)


class TestGramFactor:
    def test_identity_gives_orthogonal_factor(self):
        V = gram_factor(np.eye(4))
        assert np.allclose(V @ V.T, np.eye(4), atol=1e-10)

    def test_rank_one_all_ones(self):
        X = np.ones((5, 5))
        V = gram_factor(X)
        assert np.allclose(V @ V.T, X, atol=1e-8)
        s = np.linalg.svd(V, compute_uv=False)
        assert (s > 1e-8).sum() == 1

    def test_reconstruction_random_psd(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            A = rng.normal(size=(6, 6))
            X = A @ A.T
            V = gram_factor(X)
            assert np.linalg.norm(V @ V.T - X) <= 1e-8 * np.linalg.norm(X)

    def test_clamps_negative_spectrum(self):
        X = np.diag([1.0, -0.5])
        V = gram_factor(X)
        assert np.allclose(V @ V.T, np.diag([1.0, 0.0]), atol=1e-12)


class TestHyperplane:
    def test_transform_maps_01_to_pm1(self):
        p = Partition.from_groups(4, [(0, 1), (2, 3)])
        X = indicator_gram(p)
        T = hyperplane_transform(X, 2)
        assert set(np.unique(T)) == {-1.0, 1.0}

    def test_k8_every_sample_sixteen(self):
        g = complete_graph(8)
        X = indicator_gram(Partition.from_groups(8, [(0, 1, 2, 3), (4, 5, 6, 7)]))
        res = hyperplane_round(g, X, k=2, samples=5, seed=1)
        assert res.ub == 16.0
        assert res.samples_used == 5

    def test_feasibility_always(self):
        rng = np.random.default_rng(2)
        for trial in range(10):
            n, k = 12, 3
            g = gen_rand_graph(n, 0.5, trial)
            A = rng.normal(size=(n, n))
            X = A @ A.T / n
            res = hyperplane_round(g, X, k=k, samples=3, seed=trial)
            res.partition.validate_for(KEquipartition(k=k, m=n // k))
            assert res.ub == cut_value(g, res.partition)

    def test_rejects_k1(self):
        g = complete_graph(4)
        with pytest.raises(ValueError):
            hyperplane_round(g, np.eye(4), k=1, m=4)

    def test_gaussian_direction_toggle(self):
        g = gen_rand_graph(8, 0.8, 14)
        spec = KEquipartition(k=2, m=4)
        res = hyperplane_round(g, np.eye(8), k=2, samples=4, seed=0,
                               distribution="gaussian")
        res.partition.validate_for(spec)
        with pytest.raises(ValueError):
            hyperplane_round(g, np.eye(8), k=2, samples=1, distribution="cauchy")


class TestVcKeq:
    def test_identity_similarity_gives_valid_shape(self):
        g = gen_rand_graph(6, 0.5, 3)
        res = vc_round_keq(g, np.eye(6), k=3, samples=4, seed=0)
        assert res.partition.sizes() == (2, 2, 2)

    def test_recovers_planted_partition(self):
        g = gen_rand_graph(9, 0.8, 4)
        planted = Partition.from_groups(9, [(0, 3, 6), (1, 4, 7), (2, 5, 8)])
        X = indicator_gram(planted)
        res = vc_round_keq(g, X, k=3, samples=1, seed=11)
        assert res.partition == planted
        assert res.ub == cut_value(g, planted)

    def test_group_sizes_invariant(self):
        rng = np.random.default_rng(5)
        for trial in range(10):
            g = gen_rand_graph(8, 0.2, trial)
            A = rng.normal(size=(8, 8))
            res = vc_round_keq(g, A @ A.T, k=4, samples=2, seed=trial)
            assert all(s == 2 for s in res.partition.sizes())


class TestVcGpkc:
    def test_tight_capacity_forces_singletons(self):
        g = complete_graph(5)
        a = np.full(5, 3.0)
        res = vc_round_gpkc(g, np.eye(5), a, W_cap=3.0, samples=2, seed=0)
        assert res.partition.k == 5
        assert res.ub == g.total_weight()

    def test_loose_capacity_with_flat_similarity_packs_everything(self):
        g = gen_rand_graph(6, 0.5, 6)
        a = np.ones(6)
        X = np.ones((6, 6))
        res = vc_round_gpkc(g, X, a, W_cap=10.0, samples=1, seed=3)
        assert res.partition.k == 1
        assert res.ub == 0.0

    def test_weight_feasibility_fixed_seed(self):
        g, spec = gen_gpkc_instance(9, 0.5, 3, 8)
        rng = np.random.default_rng(9)
        A = rng.normal(size=(9, 9))
        res = vc_round_gpkc(g, A @ A.T, spec.a, spec.W, samples=5, seed=2)
        res.partition.validate_for(spec)


class TestTwoOptBisection:
    def test_optimal_four_cycle_unchanged(self):
        W = np.zeros((4, 4))
        for i, j in [(0, 1), (1, 2), (2, 3), (3, 0)]:
            W[i, j] = W[j, i] = 1.0
        g = GraphInstance(n=4, W_adj=W, name="C4")
        p1, p2 = two_opt_bisection(g, (0, 1), (2, 3))
        assert (p1, p2) == ((0, 1), (2, 3))

    def test_complete_graph_symmetric_no_move(self):
        g = complete_graph(4)
        p1, p2 = two_opt_bisection(g, (0, 1), (2, 3))
        assert (p1, p2) == ((0, 1), (2, 3))

    def test_never_worsens_random(self):
        for seed in range(20):
            g = gen_rand_graph(8, 0.5, seed)
            rng = np.random.default_rng(seed)
            perm = rng.permutation(8)
            before = Partition.from_groups(8, [tuple(perm[:4]), tuple(perm[4:])])
            p1, p2 = two_opt_bisection(g, before.groups[0], before.groups[1])
            after = Partition.from_groups(8, [p1, p2])
            assert cut_value(g, after) <= cut_value(g, before) + 1e-12

    def test_finds_planted_improvement(self):
        # two dense clusters split across the groups: swaps must help
        W = np.zeros((6, 6))
        for i in (0, 1, 2):
            for j in (0, 1, 2):
                if i != j:
                    W[i, j] = 10.0
        for i in (3, 4, 5):
            for j in (3, 4, 5):
                if i != j:
                    W[i, j] = 10.0
        g = GraphInstance(n=6, W_adj=W, name="two-cliques")
        p1, p2 = two_opt_bisection(g, (0, 1, 3), (2, 4, 5))
        after = Partition.from_groups(6, [p1, p2])
        assert cut_value(g, after) == 0.0


class TestTwoOptMulti:
    def test_single_group_returned_unchanged(self):
        g = gen_rand_graph(5, 0.5, 1)
        p = Partition.from_groups(5, [tuple(range(5))])
        out = two_opt_multi(g, p, Gpkc(a=np.ones(5), W=10.0), seed=0)
        assert out == p

    def test_keq_never_worsens(self):
        g = gen_rand_graph(6, 0.8, 13)
        spec = KEquipartition(k=3, m=2)
        p = Partition.from_groups(6, [(0, 5), (1, 3), (2, 4)])
        out = two_opt_multi(g, p, spec, seed=7)
        out.validate_for(spec)
        assert cut_value(g, out) <= cut_value(g, p)

    def test_gpkc_weights_respected(self):
        g, spec = gen_gpkc_instance(9, 0.8, 3, 10)
        start = vc_round_gpkc(g, np.eye(9), spec.a, spec.W, samples=1, seed=4).partition
        out = two_opt_multi(g, start, spec, seed=5)
        out.validate_for(spec)
        assert cut_value(g, out) <= cut_value(g, start)


class TestPipelines:
    def test_vc_2opt_reaches_brute_force_on_small(self):
        g = gen_rand_graph(8, 0.8, 21)
        opt = oracle.brute_force_keq(g, 2).opt
        X = np.eye(8)
        res = vc_plus_two_opt(g, X, KEquipartition(k=2, m=4), samples=20, seed=3)
        assert res.method == "Vc+2opt"
        assert res.ub >= opt - 1e-9
        res.partition.validate_for(KEquipartition(k=2, m=4))
        assert res.ub == cut_value(g, res.partition)

    def test_hyp_2opt_feasible_and_sandwiched(self):
        g = gen_rand_graph(8, 0.5, 22)
        opt = oracle.brute_force_keq(g, 4).opt
        res = hyp_plus_two_opt(g, np.eye(8), KEquipartition(k=4, m=2), samples=20, seed=4)
        assert res.ub >= opt - 1e-9
        res.partition.validate_for(KEquipartition(k=4, m=2))

    def test_gpkc_pipeline_feasible(self):
        g, spec = gen_gpkc_instance(8, 0.5, 2, 12)
        res = vc_plus_two_opt(g, np.eye(8), spec, samples=10, seed=5)
        res.partition.validate_for(spec)
        opt = oracle.brute_force_gpkc(g, spec.a, spec.W).opt
        assert res.ub >= opt - 1e-9

    def test_hyperplane_rejected_for_gpkc(self):
        g, spec = gen_gpkc_instance(8, 0.5, 2, 12)
        with pytest.raises(ValueError):
            hyp_plus_two_opt(g, np.eye(8), spec)


class TestDeterminism:
    def test_identical_seeds_identical_results(self):
        g = gen_rand_graph(10, 0.5, 30)
        rngmat = np.random.default_rng(0).normal(size=(10, 10))
        X = rngmat @ rngmat.T
        spec = KEquipartition(k=5, m=2)
        a = vc_plus_two_opt(g, X, spec, samples=7, seed=99)
        b = vc_plus_two_opt(g, X, spec, samples=7, seed=99)
        assert a.partition == b.partition and a.ub == b.ub
        c = hyp_plus_two_opt(g, X, spec, samples=7, seed=99)
        d = hyp_plus_two_opt(g, X, spec, samples=7, seed=99)
        assert c.partition == d.partition and c.ub == d.ub

    def test_different_seeds_may_differ_but_stay_feasible(self):
        g = gen_rand_graph(12, 0.5, 31)
        spec = KEquipartition(k=4, m=3)
        for seed in range(5):
            res = vc_round_keq(g, np.eye(12), k=4, samples=3, seed=seed)
            res.partition.validate_for(spec)
