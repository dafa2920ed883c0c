import math

import numpy as np
import pytest

from arznet import fundamental as fd
from arznet import junction as jc
from arznet.fundamental import RoadParams, TrafficState
from arznet.junction import JunctionKind, JunctionSpec


def rand_params(rng):
    return RoadParams(rng.uniform(20, 300), rng.uniform(40, 160), rng.uniform(0.5, 4.0))


def rand_state(rng, p):
    return TrafficState(rng.uniform(1e-3, 0.98 * p.rho_max), rng.uniform(0.5, p.v_ref))


class TestModifiedDensity:
    def test_faster_receiver_gives_vacuum(self):
        p = RoadParams(1.0, 2.0, 2.0)
        assert jc.modified_density(p, w_in=1.0, v_out=1.5) == 0.0

    def test_closed_form(self):
        # p(rho~) = w_in - v_out: rho~ = rho_max * sqrt((w-v) gamma / v_ref)
        p = RoadParams(1.0, 2.0, 2.0)
        assert jc.modified_density(p, 3.0, 2.0) == pytest.approx(1.0)

    def test_pressure_consistency(self):
        rng = np.random.default_rng(31)
        for _ in range(200):
            p = rand_params(rng)
            w = rng.uniform(0.1, 2 * p.v_ref)
            v = rng.uniform(0.0, w)
            rho = jc.modified_density(p, w, v)
            assert fd.pressure(p, rho) == pytest.approx(w - v, rel=1e-10, abs=1e-12)


class TestOneToOne:
    def test_flux_is_min_of_demand_and_supply(self):
        rng = np.random.default_rng(37)
        for _ in range(300):
            p1, p2 = rand_params(rng), rand_params(rng)
            s1, s2 = rand_state(rng, p1), rand_state(rng, p2)
            sol = jc.solve_one_to_one((p1, s1), (p2, s2))
            w1 = fd.attribute(p1, s1)
            de = float(fd.demand(p1, s1.rho, w1))
            rho_t = jc.modified_density(p2, w1, s2.v)
            su = float(fd.supply(p2, rho_t, w1))
            assert sol.q_in[0] == pytest.approx(min(de, su), rel=1e-12, abs=1e-12)
            assert sol.q_out[0] == sol.q_in[0]
            assert sol.w_out[0] == pytest.approx(w1)

    def test_attribute_transported(self):
        p = RoadParams(180.0, 100.0, 1.2)
        s = fd.equilibrium_state(p, 30.0)
        sol = jc.solve_one_to_one((p, s), (p, TrafficState(10.0, fd.equilibrium_speed(p, 10.0))))
        assert sol.w_out[0] == pytest.approx(fd.attribute(p, s), rel=1e-12)

    def test_boundary_states_reproduce_flux(self):
        rng = np.random.default_rng(41)
        for _ in range(300):
            p1, p2 = rand_params(rng), rand_params(rng)
            s1, s2 = rand_state(rng, p1), rand_state(rng, p2)
            sol = jc.solve_one_to_one((p1, s1), (p2, s2))
            b_in, b_out = sol.boundary_in[0], sol.boundary_out[0]
            q = sol.q_in[0]
            assert b_in.rho * b_in.v == pytest.approx(q, rel=1e-7, abs=1e-7)
            assert b_out.rho * b_out.v == pytest.approx(q, rel=1e-7, abs=1e-7)
            assert fd.attribute(p1, b_in) == pytest.approx(sol.w_in[0], rel=1e-7)


class TestDiverge:
    def test_split_ratios_exact(self):
        rng = np.random.default_rng(43)
        for _ in range(200):
            p_in = rand_params(rng)
            outs = [rand_params(rng) for _ in range(3)]
            a = rng.dirichlet((2.0, 2.0, 2.0))
            a = tuple(float(x) for x in a)
            s_in = rand_state(rng, p_in)
            s_out = [rand_state(rng, p) for p in outs]
            sol = jc.solve_diverge((p_in, s_in), list(zip(outs, s_out)), a)
            q1 = sol.q_in[0]
            for j in range(3):
                assert sol.q_out[j] == pytest.approx(a[j] * q1, rel=1e-12, abs=1e-12)
            assert math.fsum(sol.q_out) == q1

    def test_min_formula(self):
        rng = np.random.default_rng(47)
        for _ in range(200):
            p_in = rand_params(rng)
            outs = [rand_params(rng) for _ in range(2)]
            a = (0.3, 0.7)
            s_in = rand_state(rng, p_in)
            s_out = [rand_state(rng, p) for p in outs]
            sol = jc.solve_diverge((p_in, s_in), list(zip(outs, s_out)), a)
            w1 = fd.attribute(p_in, s_in)
            de = float(fd.demand(p_in, s_in.rho, w1))
            bounds = [de]
            for j, (p, s) in enumerate(zip(outs, s_out)):
                rho_t = jc.modified_density(p, w1, s.v)
                bounds.append(float(fd.supply(p, rho_t, w1)) / a[j])
            assert sol.q_in[0] == pytest.approx(min(bounds), rel=1e-9)

    def test_zero_ratio_rejected(self):
        p = RoadParams(1.0, 2.0, 2.0)
        s = TrafficState(0.5, 1.0)
        with pytest.raises(ValueError):
            jc.solve_diverge((p, s), [(p, s), (p, s)], (1.0, 0.0))

    def test_single_outgoing_collapses_to_one_to_one(self):
        rng = np.random.default_rng(53)
        for _ in range(100):
            p1, p2 = rand_params(rng), rand_params(rng)
            s1, s2 = rand_state(rng, p1), rand_state(rng, p2)
            spec = JunctionSpec(JunctionKind.DIVERGE, (p1,), (p2,), alphas=(1.0,))
            a = jc.solve(spec, [s1, s2])
            b = jc.solve_one_to_one((p1, s1), (p2, s2))
            assert a.q_in[0] == pytest.approx(b.q_in[0], rel=1e-14)

    def test_degenerate_ratio_rejected_directly(self):
        p = RoadParams(1.0, 2.0, 2.0)
        s = TrafficState(0.5, 1.0)
        with pytest.raises(ValueError):
            jc.solve_diverge((p, s), [(p, s)], (1.0,))


class TestSpecValidation:
    def test_merge_priority_bounds(self):
        p = RoadParams(1.0, 2.0, 2.0)
        with pytest.raises(ValueError):
            JunctionSpec(JunctionKind.MERGE, (p, p), (p,), priority=1.0)

    def test_diverge_needs_ratios(self):
        p = RoadParams(1.0, 2.0, 2.0)
        with pytest.raises(ValueError):
            JunctionSpec(JunctionKind.DIVERGE, (p,), (p, p), alphas=(0.6, 0.6))

    def test_dispatch(self):
        p = RoadParams(1.0, 2.0, 2.0)
        s = TrafficState(0.5, 1.0)
        spec = JunctionSpec(JunctionKind.ONE_TO_ONE, (p,), (p,))
        sol = jc.solve(spec, [s, s])
        ref = jc.solve_one_to_one((p, s), (p, s))
        assert sol.q_in == ref.q_in


class TestAdmissibility:
    def test_clean_one_to_one(self):
        rng = np.random.default_rng(59)
        for _ in range(200):
            p1, p2 = rand_params(rng), rand_params(rng)
            s1, s2 = rand_state(rng, p1), rand_state(rng, p2)
            spec = JunctionSpec(JunctionKind.ONE_TO_ONE, (p1,), (p2,))
            sol = jc.solve(spec, [s1, s2])
            rep = jc.check_admissibility(spec, [s1, s2], sol)
            assert rep.ok, rep

    def test_detects_bad_boundary_state(self):
        import dataclasses

        p = RoadParams(180.0, 100.0, 1.2)
        s = fd.equilibrium_state(p, 30.0)
        spec = JunctionSpec(JunctionKind.ONE_TO_ONE, (p,), (p,))
        sol = jc.solve(spec, [s, s])
        # Corrupt the incoming boundary state: a free-flow state denser than
        # the trace generates a wave moving into the junction.
        w = sol.w_in[0]
        rho_bad = 100.0
        v_bad = w - float(fd.pressure(p, rho_bad))
        corrupted = dataclasses.replace(sol, boundary_in=(TrafficState(rho_bad, v_bad),))
        rep = jc.check_admissibility(spec, [s, s], corrupted)
        assert not rep.ok
