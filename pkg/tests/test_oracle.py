import numpy as np
import pytest

from arznet import fundamental as fd
from arznet import junction as jc
from arznet import oracle
from arznet.fundamental import RoadParams, TrafficState


def rand_params(rng):
    return RoadParams(rng.uniform(20, 300), rng.uniform(40, 160), rng.uniform(0.5, 4.0))


def rand_state(rng, p):
    return TrafficState(rng.uniform(1e-3, 0.98 * p.rho_max), rng.uniform(0.5, p.v_ref))


def rand_context(rng):
    p1, p2, p3 = rand_params(rng), rand_params(rng), rand_params(rng)
    return oracle.MergeContext(
        (p1, rand_state(rng, p1)), (p2, rand_state(rng, p2)), (p3, rand_state(rng, p3))
    )


class TestFeasibility:
    def test_origin_always_feasible(self):
        rng = np.random.default_rng(89)
        for _ in range(100):
            assert oracle.feasible(rand_context(rng), 0.0, 0.0)

    def test_demand_cap_enforced(self):
        rng = np.random.default_rng(97)
        ctx = rand_context(rng)
        assert not oracle.feasible(ctx, ctx.delta1 * 1.01, 0.0)
        assert not oracle.feasible(ctx, 0.0, ctx.delta2 * 1.01)

    def test_vectorized_matches_scalar(self):
        rng = np.random.default_rng(101)
        ctx = rand_context(rng)
        q1 = rng.uniform(0, ctx.delta1, size=50)
        q2 = rng.uniform(0, ctx.delta2, size=50)
        vec = oracle.feasible(ctx, q1, q2)
        for k in range(50):
            assert vec[k] == oracle.feasible(ctx, float(q1[k]), float(q2[k]))


class TestParetoSample:
    def test_resolution_floor(self):
        rng = np.random.default_rng(103)
        with pytest.raises(ValueError):
            oracle.sample_pareto(rand_context(rng), n=50)

    def test_pareto_subset_of_feasible(self):
        rng = np.random.default_rng(107)
        sample = oracle.sample_pareto(rand_context(rng), n=128)
        assert np.all(sample.feasible[sample.pareto])

    def test_no_dominated_pareto_points(self):
        rng = np.random.default_rng(109)
        for _ in range(5):
            sample = oracle.sample_pareto(rand_context(rng), n=128)
            feas = sample.feasible
            ii, jj = np.nonzero(sample.pareto)
            for i, j in zip(ii[:50], jj[:50]):
                assert not feas[i + 1:, j + 1:].any()

    def test_dominated_interior_point(self):
        rng = np.random.default_rng(113)
        sample = oracle.sample_pareto(rand_context(rng), n=128)
        # the origin is feasible and dominated whenever anything else is feasible
        if sample.feasible[1:, 1:].any():
            assert not sample.pareto[0, 0]

    def test_solver_flux_lands_on_front(self):
        rng = np.random.default_rng(127)
        ctx = rand_context(rng)
        sol = jc.solve_merge(ctx.in1, ctx.in2, ctx.out, 0.5)
        sample = oracle.sample_pareto(ctx, n=256)
        pts = sample.pareto_points()
        step = max(sample.resolution)
        d = np.max(np.abs(pts - np.array(sol.q_in)), axis=1)
        assert d.min() <= 1.5 * step


class TestConvexityProbe:
    def test_counts_zero_on_real_sets(self):
        rng = np.random.default_rng(131)
        ctx = rand_context(rng)
        assert oracle.convexity_probe(ctx, trials=20, rng=rng) == 0

    def test_rejects_empty_trials(self):
        rng = np.random.default_rng(137)
        with pytest.raises(ValueError):
            oracle.convexity_probe(rand_context(rng), trials=0)


class TestSingleInflowOracle:
    def test_matches_min_formula(self):
        rng = np.random.default_rng(139)
        for _ in range(50):
            de = rng.uniform(0.0, 5000.0)
            sups = rng.uniform(0.0, 5000.0, size=3)
            a = rng.dirichlet((2.0, 2.0, 2.0))
            got = oracle.max_flux_single_inflow(de, sups, a, n=200_000)
            want = min(de, *(s / x for s, x in zip(sups, a)))
            assert got == pytest.approx(want, abs=de / 100_000)


class TestCsvDump:
    def test_roundtrip_columns(self, tmp_path):
        rng = np.random.default_rng(149)
        sample = oracle.sample_pareto(rand_context(rng), n=100)
        path = tmp_path / "feasible.csv"
        oracle.write_sample_csv(sample, path, extra_points=[("solver", 1.0, 2.0)])
        lines = path.read_text().splitlines()
        assert lines[0] == "q1,q2,feasible,pareto"
        assert lines[1].startswith("0.0,0.0,")
        assert any(row.startswith("solver,") for row in lines)
