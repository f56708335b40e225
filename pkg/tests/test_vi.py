import numpy as np
import pytest

from conftest import grid_points
from vikit import ellipsoid as el
from vikit import geometry as geo
from vikit import vi
from vikit.errors import ContractError, EmptinessCertificate


def box1(lo=-1.0, hi=1.0):
    return geo.box_body([lo], [hi])


def box2():
    return geo.box_body([0.0, 0.0], [1.0, 1.0])


class TestResidual:
    def test_stationary_point(self):
        c = np.array([0.5, 0.5])
        prob = vi.VIProblem(vi.Operator(lambda x: x - c, 2, 2), box2(),
                            beta=1e-3)
        rho = vi.residual(prob, c)
        assert float(rho[0]) >= -1e-3 / 8 - 1e-9

    def test_linear_deviation_closed_form(self):
        prob = vi.VIProblem(vi.Operator(lambda x: np.array([1.0, 0.0]), 2, 2),
                            box2(), beta=0.1)
        rho = vi.residual(prob, [1.0, 0.0])
        # best deviation y = (0, anything): (y - x)^T (1,0) = -1
        assert float(rho[0]) == pytest.approx(-1.0, abs=2e-2)

    def test_mvi_duplicate_columns_equal(self):
        op = vi.Operator(lambda x: x - 0.3, 2, 2)
        prob = vi.MVIProblem([op, op], box2(), beta=1e-3)
        rho = vi.residual(prob, [0.9, 0.9])
        assert rho.shape == (2,)
        assert rho[0] == pytest.approx(rho[1], abs=1e-6)

    def test_emptiness_propagates(self):
        empty = geo.parallel_body(geo.ball_body([0.0], 0.1), -1.0)
        prob = vi.VIProblem(vi.Operator(lambda x: x, 1, 1), empty, beta=1e-3)
        with pytest.raises(EmptinessCertificate):
            vi.residual(prob, [0.5])


class TestCheckSolution:
    def test_accepts_exact_solution(self):
        prob = vi.VIProblem(vi.Operator(lambda x: x, 1, 1), box1(), beta=1e-3)
        res = vi.check_solution(prob, vi.SolutionCertificate(
            x=np.array([0.0]), x_star=np.array([0.0])))
        assert res.accepted

    def test_rejects_off_solution(self):
        prob = vi.VIProblem(vi.Operator(lambda x: x, 1, 1), box1(), beta=0.1)
        res = vi.check_solution(prob, vi.SolutionCertificate(
            x=np.array([0.5]), x_star=np.array([0.5])))
        assert not res.accepted
        # closed form: min over y of (y - 0.5) * 0.5 at y = -1 gives -0.75
        assert float(res.residual[0]) == pytest.approx(-0.75, abs=2e-2)

    def test_membership_violation(self):
        prob = vi.VIProblem(vi.Operator(lambda x: x, 1, 1), box1(), beta=0.1)
        res = vi.check_solution(prob, vi.SolutionCertificate(
            x=np.array([2.0]), x_star=np.array([2.0])))
        assert not res.accepted
        assert any("membership" in v for v in res.violations)

    def test_constant_qvi_matches_vi_verdicts(self, rng):
        F = vi.Operator(lambda x: x - 0.4, 1, 1)
        viprob = vi.VIProblem(F, box1(0.0, 1.0), beta=0.05)
        qprob = vi.QVIProblem(F, geo.constant_correspondence(box1(0.0, 1.0)),
                              beta=0.05)
        for _ in range(20):
            x = rng.uniform(0.0, 1.0, size=1)
            a = vi.check_solution(viprob, vi.SolutionCertificate(x, x))
            b = vi.check_solution(qprob, vi.SolutionCertificate(x, x))
            assert a.accepted == b.accepted

    def test_qvi_closeness_enforced(self):
        F = vi.Operator(lambda x: np.zeros(1), 1, 1)
        qprob = vi.QVIProblem(F, geo.constant_correspondence(box1()),
                              beta=0.01)
        res = vi.check_solution(qprob, vi.SolutionCertificate(
            x=np.array([0.0]), x_star=np.array([0.5])))
        assert not res.accepted
        assert any("closeness" in v for v in res.violations)

    def test_grid_agreement_on_polyhedral_instances(self, rng):
        # brute-force oracle: grid minimum of (y - x)^T F(x) over the box
        beta = 0.08
        pts = grid_points([0.0, 0.0], [1.0, 1.0], beta / 4.0)
        for trial in range(100):
            a = rng.uniform(-1.0, 1.0, size=2)
            c = rng.uniform(0.0, 1.0, size=2)
            F = vi.Operator(lambda x, a=a, c=c: a * (x - c), 2, 2)
            prob = vi.VIProblem(F, box2(), beta=beta)
            x = rng.uniform(0.0, 1.0, size=2)
            Fx = F(x)
            grid_min = float(np.min((pts - x) @ Fx))
            grid_verdict = grid_min >= -beta
            got = vi.check_solution(prob, vi.SolutionCertificate(x, x))
            if abs(grid_min + beta) > 2e-2:  # skip knife-edge candidates
                assert got.accepted == grid_verdict


class TestExtragradient:
    def test_scalar_contraction(self):
        prob = vi.VIProblem(vi.Operator(lambda x: x - 0.5, 1, 1,
                                        lipschitz=1.0),
                            box1(0.0, 1.0), beta=1e-3)
        cert = vi.solve_vi_extragradient(prob, eps=1e-3)
        assert isinstance(cert, vi.SolutionCertificate)
        assert abs(cert.x[0] - 0.5) <= 0.01
        assert float(np.min(cert.residual)) >= -1e-3

    def test_rotation_operator_monotone(self):
        ball = geo.ball_body([0.0, 0.0], 1.0)
        rot = vi.Operator(lambda x: np.array([x[1], -x[0]]), 2, 2,
                          lipschitz=1.0)
        prob = vi.VIProblem(rot, ball, beta=1e-2)
        cert = vi.solve_vi_extragradient(prob, eps=1e-2, max_iters=300)
        assert isinstance(cert, vi.SolutionCertificate)
        # (0, 0) is the unique solution by symmetry
        assert np.linalg.norm(cert.x) <= 0.05
        assert float(np.min(cert.residual)) >= -1e-2

    def test_failure_carries_best_iterate(self):
        rot = vi.Operator(lambda x: np.array([x[1], -x[0]]), 2, 2,
                          lipschitz=1.0)
        prob = vi.VIProblem(rot, geo.ball_body([5.0, 5.0], 1.0), beta=1e-6)
        out = vi.solve_vi_extragradient(prob, eps=1e-9, max_iters=3)
        assert isinstance(out, vi.ExtragradientFailure)
        assert out.best is not None and out.iterations == 3


class TestBuildPsi:
    def _problem(self, center=0.5, radius=0.00125):
        R = geo.constant_correspondence(box1(-1.0, 1.0))
        F = vi.Correspondence(1, 1,
                              lambda x: geo.ball_body([center], radius),
                              lipschitz=0.0, domain=R.domain)
        return vi.GQVIProblem(F=F, R=R, beta=1e-2, gamma=0.0)

    def test_pure_regularizer_region(self):
        # F = {0}: Pi(x, 0) = near-argmax of -gamma y^2 = [-s, s],
        # s ~ sqrt(eps/gamma)
        prob = self._problem(center=0.0)
        gamma, eps = 0.1, 1e-3
        psi = vi.build_psi(prob, gamma, eps)
        body = psi(np.array([0.3, 0.0]))
        s = np.sqrt(eps / gamma)
        assert geo.separate(body, [0.0, 0.0]).inside
        assert geo.separate(body, [0.5 * s, 0.0]).inside
        assert not geo.separate(body, [3.0 * s, 0.0]).inside

    def test_fixed_points_near_zero_with_zero_operator(self):
        prob = self._problem(center=0.0)
        psi = vi.build_psi(prob, 0.1, 1e-3)
        res = vi.kakutani_iterate(psi, alpha=5e-2, max_iters=100)
        assert res.converged
        assert abs(res.x[0]) <= 0.15

    def test_positive_operator_concentrates_at_lower_bound(self):
        # F constant c > 0 over R = [0, 1]: Pi hugs y = 0
        R = geo.constant_correspondence(box1(0.0, 1.0))
        F = vi.Correspondence(1, 1, lambda x: geo.ball_body([0.5], 1e-3),
                              lipschitz=0.0, domain=R.domain)
        prob = vi.GQVIProblem(F=F, R=R, beta=1e-2, gamma=0.0)
        gamma, eps = 1e-3, 1e-4
        psi = vi.build_psi(prob, gamma, eps)
        body = psi(np.array([0.8, 0.5]))
        # quadratic closed form: maximizer of -(y-x)c - gamma y^2 over [0,1]
        # is y* = 0; membership region ~ [0, eps/c]
        assert geo.separate(body, [0.0, 0.5]).inside
        assert not geo.separate(body, [0.1, 0.5]).inside

    def test_emptiness_propagates(self):
        R = geo.Correspondence(
            1, 1, lambda x: geo.parallel_body(geo.ball_body([0.0], 0.1),
                                              -1.0),
            lipschitz=0.0, domain=geo.Box([-1.0], [1.0]))
        F = vi.Correspondence(1, 1, lambda x: geo.ball_body([0.0], 0.1),
                              lipschitz=0.0, domain=R.domain)
        prob = vi.GQVIProblem(F=F, R=R, beta=1e-2, gamma=0.0)
        psi = vi.build_psi(prob, 0.1, 1e-3)
        with pytest.raises(EmptinessCertificate):
            psi(np.array([0.0, 0.0]))


class TestKakutani:
    def test_contraction(self):
        corr = geo.Correspondence(1, 1,
                                  lambda x: geo.ball_body([x[0] / 2.0], 1e-4),
                                  lipschitz=0.5,
                                  domain=geo.Box([-1.0], [1.0]))
        res = vi.kakutani_iterate(corr, alpha=1e-2, max_iters=100)
        assert res.converged
        assert abs(res.x[0]) <= 0.05

    def test_constant_interval_accepts_inside_point(self):
        corr = geo.constant_correspondence(box1(0.2, 0.8),
                                           domain=geo.Box([0.0], [1.0]))
        res = vi.kakutani_iterate(corr, alpha=1e-3, x0=np.array([0.5]))
        assert res.converged and res.iterations == 1
        np.testing.assert_allclose(res.x, [0.5])

    def test_grid_fallback(self):
        # oscillating selection defeated by damping=1; the grid sweep finds
        # the band where x is inside the image
        def at(x):
            return box1(0.4, 0.6)

        corr = geo.Correspondence(1, 1, at, lipschitz=0.0,
                                  domain=geo.Box([0.0], [1.0]))
        res = vi.kakutani_iterate(corr, alpha=0.2, max_iters=2, damping=1.0,
                                  x0=np.array([0.95]))
        assert res.converged

    def test_gqvi_fixed_point_matches_algebra(self):
        # algebraic fixed point of Psi for F = {c}, R = [0,1]: x* = 0
        R = geo.constant_correspondence(box1(0.0, 1.0))
        F = vi.Correspondence(1, 1, lambda x: geo.ball_body([0.5], 1.25e-3),
                              lipschitz=0.0, domain=R.domain)
        prob = vi.GQVIProblem(F=F, R=R, beta=1e-2, gamma=0.0)
        out = vi.solve_gqvi(prob, beta=1e-2)
        assert isinstance(out, vi.SolutionCertificate)
        assert abs(out.x[0]) <= 1e-2


class TestSolveGQVI:
    def test_qvi_embedding_agrees_with_extragradient(self, rng):
        for _ in range(10):
            a = float(rng.uniform(2.0, 4.0))
            b = float(rng.uniform(0.2, 0.8))
            F = vi.Operator(lambda x, a=a, b=b: a * (x - b), 1, 1,
                            lipschitz=a)
            R = box1(0.0, 1.0)
            beta = 0.02
            eg = vi.solve_vi_extragradient(
                vi.VIProblem(F, R, beta=beta), eps=1e-4)
            q = vi.QVIProblem(F, geo.constant_correspondence(R), beta=beta)
            g = vi.qvi_to_gqvi(q, w_radius=2e-4)
            out = vi.solve_gqvi(g, beta=beta, gamma=1e-4, alpha=2e-4,
                                eps_pi=2e-4, max_iters=200, damping=0.7)
            assert isinstance(out, vi.SolutionCertificate)
            assert abs(out.x[0] - eg.x[0]) <= 2 * beta

    def test_generalized_nash_kkt_segment(self):
        # players minimize (x_i - a_i)^2 over R_i(x_-i) = {x_i >= 0,
        # x_i + x_-i <= 1}; hand KKT: equilibria = {(s, 1-s): s in [0.1,0.7]}
        a = np.array([0.7, 0.9])

        def F(x):
            return 2.0 * (x - a)

        def R_at(x):
            return geo.product_body([
                geo.box_body([0.0], [min(1.0, 1.0 - x[1])])
                if x[1] < 1.0 else geo.box_body([0.0], [1e-6]),
                geo.box_body([0.0], [min(1.0, 1.0 - x[0])])
                if x[0] < 1.0 else geo.box_body([0.0], [1e-6]),
            ])

        R = geo.Correspondence(2, 2, R_at, lipschitz=1.0,
                               domain=geo.Box([0, 0], [1, 1]))
        prob = vi.QVIProblem(vi.Operator(F, 2, 2, lipschitz=2.0), R,
                             beta=0.05)
        # verification only: known equilibria accepted, non-equilibria not
        for s in (0.1, 0.4, 0.7):
            x = np.array([s, 1.0 - s])
            res = vi.check_solution(prob, vi.SolutionCertificate(x, x))
            assert res.accepted, (s, res.violations)
        bad = np.array([0.1, 0.2])
        res = vi.check_solution(prob, vi.SolutionCertificate(bad, bad))
        assert not res.accepted

    def test_empty_operator_correspondence_yields_violation(self):
        R = geo.constant_correspondence(box1(0.0, 1.0))
        F = vi.Correspondence(
            1, 1, lambda x: geo.parallel_body(geo.ball_body([0.0], 0.05),
                                              -1.0),
            lipschitz=0.0, domain=R.domain)
        prob = vi.GQVIProblem(F=F, R=R, beta=1e-2, gamma=0.0)
        out = vi.solve_gqvi(prob, beta=1e-2)
        assert isinstance(out, vi.ViolationCertificate)
        assert out.kind == "emptiness"


class TestProbes:
    def test_hausdorff_violation_certificate(self):
        # image jumps by 0.8 while the declared constant says 0.1
        def at(x):
            c = 0.8 if x[0] > 0.5 else 0.0
            return geo.ball_body([c], 1e-3)

        corr = geo.Correspondence(1, 1, at, lipschitz=0.1,
                                  domain=geo.Box([0.0], [1.0]))
        cert = vi.probe_hausdorff(corr, [0.51], [0.49], eps=1e-6)
        assert cert is not None and cert.kind == "hausdorff_lipschitz"
        assert cert.revalidate_inequality()
        w = cert.witness
        # re-derive the projections the witness stored
        z2 = el.project(corr(np.asarray(w["p"])), np.asarray(w["w"]),
                        eps=1e-6)
        assert np.linalg.norm(z2 - w["z"]) <= 1e-3

    def test_hausdorff_no_false_positive(self):
        corr = geo.Correspondence(
            1, 1, lambda x: geo.ball_body([0.5 * x[0]], 1e-2), lipschitz=1.0,
            domain=geo.Box([0.0], [1.0]))
        assert vi.probe_hausdorff(corr, [0.2], [0.8], eps=1e-6) is None

    def test_strong_convexity_probe_revalidates(self):
        # a segment-shaped image: squared distance to it is flat along the
        # segment, so the strongly-convex lower bound fails
        seg = geo.hull_body(np.array([[0.0, 0.0], [1.0, 0.0]]),
                            geo.Box([-1, -1], [2, 1]))
        corr = geo.Correspondence(2, 2, lambda x: seg, lipschitz=0.0,
                                  domain=geo.Box([-1, -1], [2, 1]))
        cert = vi.probe_strong_convexity(corr, [0.0, 0.0], [0.1, 0.5],
                                         [0.9, 0.5], 0.5, gamma=2.0,
                                         eps=1e-6)
        assert cert is not None
        assert cert.revalidate_inequality()


class TestCertificates:
    def test_solution_roundtrip(self):
        cert = vi.SolutionCertificate(
            x=np.array([0.1]), x_star=np.array([0.2]), w=np.array([0.3]),
            w_star=np.array([0.4]), residual=np.array([-0.01]),
            closeness=0.02)
        back = vi.SolutionCertificate.from_dict(cert.to_dict())
        np.testing.assert_allclose(back.x, cert.x)
        np.testing.assert_allclose(back.w_star, cert.w_star)
        assert back.closeness == cert.closeness

    def test_violation_roundtrip_revalidates(self):
        cert = vi.ViolationCertificate(
            "hausdorff_lipschitz",
            {"p": np.array([0.0]), "q": np.array([0.1]),
             "z": np.array([1.0]), "w": np.array([0.0]), "eps": 1e-6},
            declared=0.5)
        back = vi.ViolationCertificate.from_dict(cert.to_dict())
        assert back.revalidate_inequality()


class TestRegularizerStrongConcavity:
    def test_exact_quadratic_inequality(self, rng):
        # Phi(y) = -(y-x)^T w - gamma ||y||^2 is 2*gamma-strongly concave
        # in y; exact since Phi is quadratic
        gamma = 0.3
        for _ in range(200):
            m = 3
            x = rng.uniform(-1, 1, size=m)
            w = rng.uniform(-1, 1, size=m)
            p = rng.uniform(-1, 1, size=m)
            q = rng.uniform(-1, 1, size=m)
            lam = float(rng.uniform(0.01, 0.99))

            def phi(y):
                return -float((y - x) @ w) - gamma * float(y @ y)

            lhs = phi(lam * p + (1 - lam) * q)
            rhs = (lam * phi(p) + (1 - lam) * phi(q)
                   + 0.5 * (2 * gamma) * lam * (1 - lam)
                   * float((p - q) @ (p - q)))
            assert lhs >= rhs - 1e-10
