import math

import numpy as np
import pytest

from conftest import (brute_force_qp, closed_form_ball_projection,
                      closed_form_box_projection,
                      closed_form_simplex_projection)
from vikit import ellipsoid as el
from vikit import geometry as geo
from vikit.errors import ContractError, EllipsoidFailure, EmptinessCertificate


class TestBudget:
    def test_reference_value(self):
        # m=2, eps=delta=0.01, L=1: 10 * 4 * ceil(ln(2 / 0.02)) = 200
        bud = el.iteration_budget(2, 0.01, 0.01, 1.0, 1.0, lipschitz=1.0)
        assert bud.T_ellipsoid == 200
        assert bud.T_emptiness == 200

    def test_degenerate_floor(self):
        bud = el.iteration_budget(1, 10.0, 10.0, 1.0, 1.0, lipschitz=1.0)
        assert bud.T_ellipsoid >= 10

    def test_monotone_in_eps(self):
        prev = None
        for eps in [1e-4, 1e-3, 1e-2, 1e-1, 1.0]:
            T = el.iteration_budget(3, eps, 1e-3, 1.0, 1.0).T_ellipsoid
            if prev is not None:
                assert T <= prev
            prev = T

    def test_threshold_identity(self):
        # the paper's rule: eps >= (G_threshold - eps_grad) * sqrt(m)
        for m in (1, 2, 5):
            bud = el.iteration_budget(m, 0.01, 0.001, 1.0, 1.0)
            assert 0.01 >= (bud.G_threshold - bud.eps_grad) * math.sqrt(m) \
                - 1e-12

    def test_rejects_nonpositive(self):
        with pytest.raises(ContractError):
            el.iteration_budget(2, -1.0, 0.1, 1.0, 1.0)


class TestCentralCutStep:
    def test_unit_disk_reference(self):
        st = el.EllipsoidState.from_ball([0.0, 0.0], 1.0)
        st2 = el.central_cut_step(st, [1.0, 0.0])
        np.testing.assert_allclose(st2.center, [-1.0 / 3.0, 0.0])
        np.testing.assert_allclose(np.diag(st2.shape), [4.0 / 9.0, 4.0 / 3.0])

    def test_opposite_cuts_shrink_twice(self):
        st = el.EllipsoidState.from_ball([0.0, 0.0], 1.0)
        st1 = el.central_cut_step(st, [1.0, 0.0])
        st2 = el.central_cut_step(st1, [-1.0, 0.0])
        assert st2.logdet < st1.logdet < st.logdet
        assert abs(st2.center[0]) < abs(st1.center[0])

    def test_one_dimensional_bisection(self):
        st = el.EllipsoidState.from_ball([0.0], 1.0)
        st2 = el.central_cut_step(st, [1.0])
        assert st2.center[0] == pytest.approx(-0.5)
        assert math.sqrt(st2.shape[0, 0]) == pytest.approx(0.5)

    def test_zero_normal_rejected(self):
        st = el.EllipsoidState.from_ball([0.0, 0.0], 1.0)
        with pytest.raises(ContractError):
            el.central_cut_step(st, [0.0, 0.0])

    def test_public_construction_validates_pd(self):
        with pytest.raises(ContractError):
            el.EllipsoidState([0.0, 0.0], np.array([[1.0, 0.0], [0.0, -1.0]]))

    def test_volume_decay_bound(self, rng):
        # vol(M_t) / vol(M_0) <= e^{-t / (4(m+1))} along any cut sequence
        for m in (2, 3, 6):
            st = el.EllipsoidState.from_ball(np.zeros(m), 1.0)
            log_v0 = st.log_volume_ratio()
            for t in range(1, 60):
                w = rng.normal(size=m)
                st = el.central_cut_step(st, w)
                assert (st.log_volume_ratio() - log_v0
                        <= -t / (4.0 * (m + 1)) + 1e-9)


def box2():
    return geo.box_body([-1.0, -1.0], [1.0, 1.0])


class TestOptimize:
    def test_interior_quadratic(self):
        target = np.array([0.3, 0.4])
        rep = el.optimize(el.sqdist_objective(target), [box2()], "min",
                          eps=1e-3, delta=1e-4, lipschitz=4.0)
        assert rep.solved
        assert np.max(np.abs(rep.argmin - target)) <= 0.05
        assert float(rep.value[0]) <= 1e-3

    def test_vertex_linear(self):
        body = geo.polyhedron_body([[1.0, 1.0], [-1.0, 0.0], [0.0, -1.0]],
                                   [1.0, 0.0, 0.0],
                                   geo.Box([0.0, 0.0], [1.0, 1.0]))
        rep = el.optimize(el.linear_objective(np.array([1.0, 1.0])), [body],
                          "min", eps=1e-3, delta=1e-4, lipschitz=2.0)
        assert rep.solved
        assert float(rep.value[0]) <= 1e-3

    def test_thin_slab_empty_certificate(self):
        slab = geo.polyhedron_body([[1.0, 0.0], [-1.0, 0.0]], [1e-6, 0.0],
                                   geo.Box([-1, -1], [1, 1]))
        rep = el.optimize(el.sqdist_objective(np.array([0.5, 0.0])), [slab],
                          "min", eps=1e-3, delta=0.01)
        assert rep.status == "empty" and rep.empty_index == 0
        # independent closed form: the -delta shrink is contradictory
        assert geo.shrink_structurally_empty(slab, 0.01)

    def test_emptiness_soundness_fat_set_never_flagged(self):
        rep = el.optimize(el.sqdist_objective(np.array([0.2, 0.2])), [box2()],
                          "min", eps=1e-3, delta=1e-4, lipschitz=4.0)
        assert rep.status != "empty"
        assert not geo.shrink_structurally_empty(box2(), 1e-4)

    def test_iteration_count_within_budget(self):
        bud = el.iteration_budget(2, 1e-3, 1e-4, 1.0, 1.0, lipschitz=4.0)
        rep = el.optimize(el.sqdist_objective(np.array([0.1, -0.2])),
                          [box2()], "min", eps=1e-3, delta=1e-4, budget=bud,
                          lipschitz=4.0)
        assert rep.iterations <= bud.T_ellipsoid

    def test_multiple_sets_partitioned(self):
        sets = [geo.box_body([0.0], [1.0]), geo.ball_body([0.0], 0.5)]
        rep = el.optimize(el.sqdist_objective(np.array([2.0, 2.0])), sets,
                          "min", eps=1e-4, delta=1e-5, lipschitz=8.0)
        assert rep.solved
        np.testing.assert_allclose(rep.argmin, [1.0, 0.5], atol=2e-2)
        assert len(rep.oracle_calls) == 2

    def test_vector_valued_componentwise(self):
        # compatible pair sharing the minimizer (0.2, -0.1)
        a = np.array([0.2, -0.1])

        def val(x):
            d = float((x - a) @ (x - a))
            return np.array([d, 2.0 * d])

        def grad(x):
            g = 2.0 * (x - a)
            return np.vstack([g, 2.0 * g])

        rep = el.optimize(el.FunObjective(val, grad, k=2), [box2()], "min",
                          eps=1e-3, delta=1e-4, lipschitz=8.0)
        assert rep.solved
        assert np.all(rep.value <= 1e-3)

    def test_maximize_sense(self):
        rep = el.optimize(el.linear_objective(np.array([1.0, 0.0])), [box2()],
                          "max", eps=1e-3, delta=1e-4, lipschitz=1.0)
        assert rep.solved
        assert float(rep.value[0]) >= 1.0 - 1e-3

    def test_feasibility_audit(self, rng):
        for _ in range(5):
            target = rng.uniform(-1.5, 1.5, size=2)
            rep = el.optimize(el.sqdist_objective(target), [box2()], "min",
                              eps=1e-4, delta=1e-5, lipschitz=6.0)
            assert rep.solved
            assert geo.separate(geo.parallel_body(box2(), 1e-5),
                                rep.argmin).inside

    def test_optimality_audit_random_diag_qps(self, rng):
        # known clamp-form optima for diagonal quadratics over boxes
        for _ in range(8):
            m = int(rng.integers(1, 5))
            d = rng.uniform(0.5, 3.0, size=m)
            target = rng.uniform(-2.0, 2.0, size=m)
            lo, hi = -np.ones(m), np.ones(m)
            body = geo.box_body(lo, hi)

            def val(x):
                return float(np.sum(d * (x - target) ** 2))

            def grad(x):
                return 2.0 * d * (x - target)

            f_star = float(np.sum(d * (np.clip(target, lo, hi) - target) ** 2))
            rep = el.optimize(el.FunObjective(val, grad), [body], "min",
                              eps=1e-3, delta=1e-5,
                              lipschitz=float(4 * np.max(d) * math.sqrt(m)))
            assert rep.solved
            assert float(rep.value[0]) - f_star <= 1e-3

    def test_budget_exhaustion_reports_failure(self, monkeypatch):
        never = geo.ConvexBody(
            1, lambda z: geo.OracleAnswer(0.0, np.array([1.0])),
            geo.Box([-1.0], [1.0]), kind="oracle")
        monkeypatch.setattr(el, "_confirm_nonempty",
                            lambda body, delta, eps: el.OptReport(
                                "solved", np.zeros(1), np.zeros(1), 1, [0]))
        with pytest.raises(EllipsoidFailure):
            el.optimize(el.sqdist_objective(np.array([0.0])), [never], "min",
                        eps=1e-3, delta=1e-4)


class TestProject:
    def test_box_clamp(self, rng):
        for _ in range(10):
            x = rng.uniform(-3, 3, size=2)
            z = el.project(box2(), x, eps=1e-8)
            want = closed_form_box_projection(x, -np.ones(2), np.ones(2))
            assert np.linalg.norm(z - want) <= math.sqrt(1e-8) + 1e-6

    def test_identity_inside(self):
        x = np.array([0.3, -0.2])
        z = el.project(box2(), x, eps=1e-8)
        assert float(np.dot(z - x, z - x)) <= 1e-8

    def test_simplex_reference(self):
        simplex = geo.polyhedron_body(
            [[1.0, 1.0], [-1.0, 0.0], [0.0, -1.0]], [1.0, 0.0, 0.0],
            geo.Box([0.0, 0.0], [1.0, 1.0]))
        z = el.project(simplex, [1.0, 1.0], eps=1e-8)
        want = closed_form_simplex_projection([1.0, 1.0])
        assert np.linalg.norm(z - want) <= 1e-3

    def test_ball_reference(self, rng):
        ball = geo.ball_body([0.3, -0.1], 0.6)
        for _ in range(5):
            x = rng.uniform(-2, 2, size=2)
            z = el.project(ball, x, eps=1e-8)
            want = closed_form_ball_projection(x, np.array([0.3, -0.1]), 0.6)
            assert np.linalg.norm(z - want) <= 1e-3

    def test_empty_body_raises_certificate(self):
        empty = geo.parallel_body(geo.ball_body([0.0, 0.0], 0.3), -1.0)
        with pytest.raises(EmptinessCertificate):
            el.project(empty, [0.5, 0.5], eps=1e-6)

    def test_projection_residual_characterization(self, rng):
        # <x - z, y - z> <= sqrt(eps) * diam on sampled feasible y
        body = box2()
        eps = 1e-6
        diam = 2.0 * math.sqrt(2.0)
        for _ in range(5):
            x = rng.uniform(-2, 2, size=2)
            z = el.project(body, x, eps=eps)
            ys = geo.sample_in_body(body, rng, 200)
            vals = (ys - z) @ (x - z)
            assert float(np.max(vals)) <= math.sqrt(eps) * diam + 1e-6


class TestAgainstActiveSetOracle:
    def test_random_qps_over_polytopes(self, rng):
        # small-scale preview of the acceptance criterion
        for _ in range(5):
            m = int(rng.integers(2, 4))
            L = rng.normal(size=(m, m))
            Q = L @ L.T + 0.5 * np.eye(m)
            c = rng.normal(size=m)
            A_extra = rng.normal(size=(2, m))
            A = np.vstack([A_extra, np.eye(m), -np.eye(m)])
            b = np.concatenate([rng.uniform(0.5, 1.5, size=2),
                                np.ones(2 * m)])
            ref = brute_force_qp(Q, c, A, b)
            assert ref is not None
            body = geo.polyhedron_body(A, b, geo.Box(-np.ones(m), np.ones(m)))

            def val(x):
                return 0.5 * float(x @ Q @ x) + float(c @ x)

            def grad(x):
                return Q @ x + c

            lip = float(np.linalg.norm(Q, 2) * math.sqrt(m)
                        + np.linalg.norm(c))
            rep = el.optimize(el.FunObjective(val, grad), [body], "min",
                              eps=1e-3, delta=1e-5, lipschitz=lip)
            assert rep.solved
            assert float(rep.value[0]) - ref[1] <= 1e-3
