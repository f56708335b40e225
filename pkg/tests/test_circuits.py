import numpy as np
import pytest

from vikit import circuits as cc
from vikit.errors import ContractError
from vikit.geometry import Box


def max_circuit():
    b = cc.CircuitBuilder(2)
    return b.build([b.max(b.input(0), b.input(1))])


def abs_circuit():
    # |x| = max(x, -x)
    b = cc.CircuitBuilder(1)
    x = b.input(0)
    return b.build([b.max(x, b.scale(x, -1.0))])


def neg_abs_circuit():
    b = cc.CircuitBuilder(1)
    x = b.input(0)
    return b.build([b.scale(b.max(x, b.scale(x, -1.0)), -1.0)])


def kinked_circuit():
    # 2 x + min(x, 3)
    b = cc.CircuitBuilder(1)
    x = b.input(0)
    return b.build([b.add(b.scale(x, 2.0), b.min(x, b.const(3.0)))])


def fd_gradient(circ, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    rows = []
    for r in range(circ.n_outputs):
        g = np.zeros(len(x))
        for j in range(len(x)):
            e = np.zeros(len(x))
            e[j] = h
            g[j] = (cc.evaluate(circ, x + e)[r]
                    - cc.evaluate(circ, x - e)[r]) / (2 * h)
        rows.append(g)
    return np.array(rows)


class TestEval:
    def test_max(self):
        assert cc.evaluate(max_circuit(), [3.0, 5.0])[0] == 5.0

    def test_sub_zero(self):
        b = cc.CircuitBuilder(2)
        c = b.build([b.sub(b.input(0), b.input(1))])
        assert cc.evaluate(c, [2.0, 2.0])[0] == 0.0

    def test_abs(self):
        assert cc.evaluate(abs_circuit(), [-4.0])[0] == 4.0

    def test_dimension_mismatch(self):
        with pytest.raises(Exception):
            cc.evaluate(max_circuit(), [1.0])

    def test_validation(self):
        with pytest.raises(ContractError):
            cc.LinCircuit((cc.Gate("add", (0, 1)),), 2, (0,))  # forward ref
        with pytest.raises(ContractError):
            cc.LinCircuit((cc.Gate("input", (), 0),), 1, (5,))  # bad output


class TestSubgrad:
    def test_max_routes_to_attaining_child(self):
        row = cc.subgrad(max_circuit(), [3.0, 5.0])
        np.testing.assert_allclose(row, [[0.0, 1.0]])

    def test_tie_routes_left(self):
        row = cc.subgrad(max_circuit(), [5.0, 5.0])
        np.testing.assert_allclose(row, [[1.0, 0.0]])

    def test_kinked_sum(self):
        # frozen from central differences at x = 1 (smooth there): 3
        row = cc.subgrad(kinked_circuit(), [1.0])
        assert row[0, 0] == pytest.approx(3.0)
        assert fd_gradient(kinked_circuit(), [1.0])[0, 0] == pytest.approx(
            3.0, abs=1e-6)

    def test_tie_determinism_bytes(self):
        a = cc.subgrad(max_circuit(), [5.0, 5.0]).tobytes()
        b = cc.subgrad(max_circuit(), [5.0, 5.0]).tobytes()
        assert a == b

    def test_min_tie_routes_left(self):
        b = cc.CircuitBuilder(2)
        c = b.build([b.min(b.input(0), b.input(1))])
        np.testing.assert_allclose(cc.subgrad(c, [2.0, 2.0]), [[1.0, 0.0]])


class TestLipschitzBound:
    def test_identity(self):
        b = cc.CircuitBuilder(1)
        assert cc.lipschitz_bound(b.build([b.input(0)])) == 1.0

    def test_scaled_difference(self):
        b = cc.CircuitBuilder(2)
        c = b.build([b.sub(b.scale(b.input(0), 3.0), b.input(1))])
        assert cc.lipschitz_bound(c) == 4.0

    def test_max_is_one(self):
        assert cc.lipschitz_bound(max_circuit()) == 1.0

    def test_bound_is_sound_on_random_pairs(self, rng):
        b = cc.CircuitBuilder(2)
        c = b.build([b.sub(b.scale(b.input(0), 3.0), b.input(1))])
        L = cc.lipschitz_bound(c)
        xs = rng.uniform(-5, 5, size=(10000, 2))
        ys = rng.uniform(-5, 5, size=(10000, 2))
        for x, y in zip(xs, ys):
            lhs = abs(cc.evaluate(c, x)[0] - cc.evaluate(c, y)[0])
            assert lhs <= L * np.max(np.abs(x - y)) + 1e-9


def _random_circuit(rng, n_inputs=3, depth=8):
    b = cc.CircuitBuilder(n_inputs)
    ids = [b.input(i) for i in range(n_inputs)]
    ids.append(b.const(float(rng.uniform(-2, 2))))
    for _ in range(depth):
        op = rng.choice(["add", "sub", "min", "max", "scale"])
        i = int(rng.integers(len(ids)))
        # distinct children keep min/max gates off permanent ties
        j = int(rng.integers(len(ids) - 1))
        j = j if j < i else j + 1
        if op == "scale":
            ids.append(b.scale(ids[i], float(rng.uniform(-3, 3))))
        else:
            ids.append(getattr(b, op)(ids[i], ids[j]))
    return b.build([ids[-1], ids[-2]])


class TestFiniteDifferenceConsistency:
    def test_thousand_points_away_from_kinks(self, rng):
        circs = [_random_circuit(rng, 3) for _ in range(10)]
        checked = attempts = 0
        while checked < 1000 and attempts < 20000:
            attempts += 1
            c = circs[attempts % len(circs)]
            x = rng.uniform(-2, 2, size=3)
            if cc.min_tie_gap(c, x) < 1e-5:
                continue
            got = cc.subgrad(c, x)
            want = fd_gradient(c, x)
            np.testing.assert_allclose(got, want, atol=1e-4)
            checked += 1
        assert checked == 1000


class TestPiecewiseLinearity:
    def test_segment_exact_where_subgrad_constant(self, rng):
        c = _random_circuit(rng, 2, depth=6)
        for _ in range(50):
            x = rng.uniform(-1, 1, size=2)
            y = rng.uniform(-1, 1, size=2)
            g0 = cc.subgrad(c, x)
            ts = np.linspace(0.0, 1.0, 11)
            vals = [cc.evaluate(c, x + t * (y - x)) for t in ts]
            for a in range(len(ts) - 1):
                ga = cc.subgrad(c, x + ts[a] * (y - x))
                gb = cc.subgrad(c, x + ts[a + 1] * (y - x))
                if np.allclose(ga, gb) and np.allclose(ga, g0):
                    mid = 0.5 * (vals[a] + vals[a + 1])
                    direct = cc.evaluate(
                        c, x + 0.5 * (ts[a] + ts[a + 1]) * (y - x))
                    np.testing.assert_allclose(mid, direct, atol=1e-9)


class TestProbeConcavity:
    def test_concave_abs_negation_clean(self, rng):
        w = cc.probe_concavity(neg_abs_circuit(), Box([-1.0], [1.0]), 500,
                               rng=rng)
        assert w is None

    def test_convex_abs_witnessed(self, rng):
        w = cc.probe_concavity(abs_circuit(), Box([-1.0], [1.0]), 500,
                               rng=rng)
        assert w is not None
        assert w.revalidate(abs_circuit())
        # the canonical violation the probe is hunting for:
        # lam f(-1) + (1-lam) f(1) - f(0) = 1 at lam = 1/2
        lhs = 0.5 * cc.evaluate(abs_circuit(), [-1.0])[0] \
            + 0.5 * cc.evaluate(abs_circuit(), [1.0])[0]
        assert lhs - cc.evaluate(abs_circuit(), [0.0])[0] == 1.0

    def test_min_is_blockwise_concave(self, rng):
        b = cc.CircuitBuilder(2)
        c = b.build([b.min(b.input(0), b.input(1))])
        w = cc.probe_concavity(c, Box([-1, -1], [1, 1]), 500,
                               coordinate_blocks=[[0], [1], [0, 1]], rng=rng)
        assert w is None
        # exhaustive grid verification at 0.1 step, lam = 1/2
        axes = np.arange(-1.0, 1.0001, 0.1)
        pts = np.stack(np.meshgrid(axes, axes), axis=-1).reshape(-1, 2)
        f = lambda z: min(z[0], z[1])
        for i in range(0, len(pts), 7):
            for j in range(0, len(pts), 13):
                x, y = pts[i], pts[j]
                assert f(0.5 * (x + y)) >= 0.5 * f(x) + 0.5 * f(y) - 1e-12

    def test_witness_gap_revalidates(self, rng):
        for _ in range(20):
            c = _random_circuit(rng, 2, depth=6)
            w = cc.probe_concavity(c, Box([-1, -1], [1, 1]), 50, rng=rng)
            if w is not None:
                assert w.revalidate(c)


class TestAffineCircuit:
    def test_matches_matrix_form(self, rng):
        W = rng.uniform(-2, 2, size=(3, 4))
        c0 = rng.uniform(-1, 1, size=3)
        circ = cc.affine_circuit(W, c0)
        for _ in range(20):
            x = rng.uniform(-2, 2, size=4)
            np.testing.assert_allclose(cc.evaluate(circ, x), W @ x + c0,
                                       atol=1e-12)
        np.testing.assert_allclose(cc.subgrad(circ, np.zeros(4)), W,
                                   atol=1e-12)
