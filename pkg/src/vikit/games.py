"""Game representations, game-to-VI-family transformations, brute-force
equilibrium oracles, and the satisfiability gadget game."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import circuits as _circ
from .errors import ContractError, DimensionMismatch
from .geometry import (Box, ConvexBody, Correspondence, Vec, as_vector,
                       polyhedron_vertices, product_body, separate)
from .vi import MVIProblem, Operator, QVIProblem, VIProblem

# ---------------------------------------------------------------------------
# Utilities (players maximize; losses are negated utilities)


class QuadraticUtility:
    """u(x) = -(x - a)^T W (x - a) + b with W PSD: concave, smooth."""

    def __init__(self, W, a, b: float = 0.0):
        self.W = np.asarray(W, dtype=float)
        self.a = np.asarray(a, dtype=float).reshape(-1)
        self.b = float(b)

    def value(self, x: Vec) -> float:
        d = x - self.a
        return -float(d @ self.W @ d) + self.b

    def subgrad(self, x: Vec) -> Vec:
        return -(self.W + self.W.T) @ (x - self.a)


class CircuitUtility:
    def __init__(self, circuit: _circ.LinCircuit):
        if circuit.n_outputs != 1:
            raise ContractError("utility circuits must have one output")
        self.circuit = circuit

    def value(self, x: Vec) -> float:
        return float(_circ.evaluate(self.circuit, x)[0])

    def subgrad(self, x: Vec) -> Vec:
        return _circ.subgrad(self.circuit, x)[0]


class FunUtility:
    def __init__(self, value_fn: Callable, grad_fn: Callable):
        self._v = value_fn
        self._g = grad_fn

    def value(self, x: Vec) -> float:
        return float(self._v(x))

    def subgrad(self, x: Vec) -> Vec:
        return np.asarray(self._g(x), dtype=float)


@dataclass(eq=False)
class ConcaveGame:
    """k players over coordinate blocks with concave utilities.

    per_player_constraints[i], when present, maps x_{-i} to the body of
    feasible x_i (the generalized-equilibrium setting).
    """

    blocks: List[np.ndarray]
    utilities: list
    strategy_sets: List[ConvexBody]
    common_constraint: Optional[ConvexBody] = None
    per_player_constraints: Optional[list] = None

    def __post_init__(self):
        self.blocks = [np.asarray(b, dtype=int) for b in self.blocks]
        if len(self.blocks) != len(self.utilities) or \
                len(self.blocks) != len(self.strategy_sets):
            raise ContractError("players, blocks, utilities, sets disagree")
        for blk, s in zip(self.blocks, self.strategy_sets):
            if blk.shape[0] != s.dim:
                raise DimensionMismatch("block size != strategy set dim")
        n = sum(b.shape[0] for b in self.blocks)
        if sorted(np.concatenate(self.blocks).tolist()) != list(range(n)):
            raise ContractError("blocks must partition the coordinates")

    @property
    def k(self) -> int:
        return len(self.blocks)

    @property
    def dim(self) -> int:
        return sum(b.shape[0] for b in self.blocks)

    def utility(self, i: int, x: Vec) -> float:
        return self.utilities[i].value(x)

    def loss_block_grad(self, i: int, blk: np.ndarray, x: Vec) -> Vec:
        """Gradient of theta_i = -u_i restricted to the given block."""
        return -self.utilities[i].subgrad(x)[blk]


def profile_bbox(game: ConcaveGame) -> Box:
    bbox = game.strategy_sets[0].bbox
    for s in game.strategy_sets[1:]:
        bbox = bbox.concat(s.bbox)
    return bbox


# ---------------------------------------------------------------------------
# Reductions to the VI family


def nash_to_vi(game: ConcaveGame, beta: float = 1e-3) -> VIProblem:
    """Stacked per-block loss gradients over the product of strategy sets."""
    if game.per_player_constraints is not None:
        raise ContractError("use genash_to_qvi when player constraints exist")
    n = game.dim
    lip = _stacked_lipschitz(game)

    def F(x: Vec) -> Vec:
        out = np.empty(n)
        for i, blk in enumerate(game.blocks):
            out[blk] = game.loss_block_grad(i, blk, x)
        return out

    R = product_body(game.strategy_sets)
    return VIProblem(Operator(F, n, n, lipschitz=lip), R, beta=beta)


def genash_to_qvi(game: ConcaveGame, beta: float = 1e-3,
                  lipschitz_R: float = 1.0) -> QVIProblem:
    """Harker-style transformation: R(x) = prod_i R_i(x_{-i})."""
    if game.per_player_constraints is None:
        raise ContractError("generalized form needs per-player constraints")
    n = game.dim
    vi_base = nash_to_vi(
        ConcaveGame(game.blocks, game.utilities, game.strategy_sets),
        beta=beta)

    def at(x: Vec) -> ConvexBody:
        factors = []
        for i, blk in enumerate(game.blocks):
            rest = np.setdiff1d(np.arange(n), blk)
            factors.append(game.per_player_constraints[i](x[rest]))
        return product_body(factors)

    R = Correspondence(n, n, at, lipschitz=lipschitz_R,
                       domain=profile_bbox(game))
    return QVIProblem(vi_base.F, R, beta=beta)


def coalitions(k: int, t: int) -> List[Tuple[int, ...]]:
    """All coalitions of size 1..t, ordered lexicographically by (|J|, J)."""
    out = []
    for size in range(1, t + 1):
        out.extend(itertools.combinations(range(k), size))
    return out


def resilient_to_mvi(game: ConcaveGame, t: int, beta: float = 1e-3,
                     probe_trials: int = 0,
                     rng: Optional[np.random.Generator] = None
                     ) -> MVIProblem:
    """One operator column per (coalition J, member j), carrying the member's
    loss gradient on every block J controls and zeros elsewhere.

    Columns are ordered lexicographically by (|J|, J, j); with t = 1 they
    reproduce the Nash VI operator split per player.  Multi-concavity is a
    promise; pass probe_trials > 0 to spot-check it first.
    """
    if not (1 <= t <= game.k - 1):
        raise ContractError("resilience degree must satisfy 1 <= t <= k-1")
    if probe_trials > 0:
        witness = probe_multi_concavity(game, t, probe_trials, rng)
        if witness is not None:
            raise ContractError(
                f"utility {witness.index} violates {t}-multi-concavity "
                f"(gap {witness.gap:.3g})")
    n = game.dim
    lip = _stacked_lipschitz(game)
    ops = []
    for J in coalitions(game.k, t):
        for j in J:
            ops.append(Operator(_coalition_column(game, J, j), n, n,
                                lipschitz=lip))
    R = product_body(game.strategy_sets)
    return MVIProblem(ops, R, beta=beta)


def _coalition_column(game: ConcaveGame, J: Tuple[int, ...], j: int):
    def column(x: Vec) -> Vec:
        out = np.zeros(game.dim)
        g = -game.utilities[j].subgrad(x)
        for b in J:
            blk = game.blocks[b]
            out[blk] = g[blk]
        return out

    return column


def _stacked_lipschitz(game: ConcaveGame) -> float:
    lips = []
    for u in game.utilities:
        if isinstance(u, CircuitUtility):
            lips.append(_circ.lipschitz_bound(u.circuit))
        else:
            lips.append(getattr(u, "lipschitz", 1.0))
    return max(max(lips), 1e-9)


def probe_multi_concavity(game: ConcaveGame, t: int, trials: int,
                          rng: Optional[np.random.Generator] = None
                          ) -> Optional[_circ.ConcavityWitness]:
    """Sample-based t-multi-concavity check of every utility: x and y vary
    jointly over each coalition's block union."""
    region = profile_bbox(game)
    groups = [np.concatenate([game.blocks[b] for b in J])
              for J in coalitions(game.k, t)]
    rng = rng or np.random.default_rng(0)
    for i, u in enumerate(game.utilities):
        w = _circ.probe_concavity(lambda x: np.array([u.value(x)]), region,
                                  trials, coordinate_blocks=groups, rng=rng,
                                  concave=True)
        if w is not None:
            return _circ.ConcavityWitness(i, w.x, w.y, w.lam, w.gap)
    return None


# ---------------------------------------------------------------------------
# Grid verification of resilience


@dataclass
class ResilienceReport:
    accepted: bool
    coalition: Optional[Tuple[int, ...]] = None
    member: Optional[int] = None
    deviation: Optional[Vec] = None
    gain: float = 0.0


def body_grid(body: ConvexBody, resolution: float,
              cap: int = 200000) -> np.ndarray:
    """Grid points of the bbox filtered by membership, plus polyhedron/box
    vertices (profitable deviations concentrate there)."""
    axes = [np.arange(lo, hi + resolution / 2, resolution) if hi > lo
            else np.array([lo])
            for lo, hi in zip(body.bbox.lo, body.bbox.hi)]
    total = int(np.prod([len(a) for a in axes]))
    if total > cap:
        raise ContractError(f"grid of {total} points exceeds cap {cap}")
    mesh = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")],
                    axis=1)
    pts = [z for z in mesh if separate(body, z).inside]
    if body.kind == "polyhedron":
        pts.extend(polyhedron_vertices(body.data["A"], body.data["b"],
                                       body.bbox))
    elif body.kind == "box":
        corners = itertools.product(*zip(body.bbox.lo, body.bbox.hi))
        pts.extend(np.array(c) for c in corners)
    return np.array(pts)


def verify_resilient(game: ConcaveGame, profile, t: int, eps: float,
                     resolution: float) -> ResilienceReport:
    """Grid search for profitable joint deviations by coalitions of size <= t.

    Reject is sound (it exhibits a concrete deviation where some member gains
    more than eps); Accept is resolution-limited.
    """
    profile = as_vector(profile, dim=game.dim)
    base = [game.utility(j, profile) for j in range(game.k)]
    grids = [body_grid(s, resolution) for s in game.strategy_sets]
    for J in coalitions(game.k, t):
        for joint in itertools.product(*(grids[b] for b in J)):
            x = profile.copy()
            for b, dev in zip(J, joint):
                x[game.blocks[b]] = dev
            for j in J:
                gain = game.utility(j, x) - base[j]
                if gain > eps:
                    return ResilienceReport(False, J, j, x, float(gain))
    return ResilienceReport(True)


def penalty_bound(lipschitz: float, beta: float) -> float:
    """Approximation degradation L*beta when a solution is replaced by a
    beta-close feasible profile."""
    if lipschitz < 0 or beta < 0:
        raise ContractError("penalty bound needs nonnegative inputs")
    return lipschitz * beta


# ---------------------------------------------------------------------------
# Bimatrix games, mixed profiles, support enumeration


@dataclass(frozen=True)
class MixedProfile:
    strategies: tuple  # one probability vector per player

    def __post_init__(self):
        strategies = tuple(np.asarray(p, dtype=float) for p in self.strategies)
        for p in strategies:
            if np.any(p < -1e-9) or abs(float(p.sum()) - 1.0) > 1e-6:
                raise ContractError("mixed strategies must lie on the simplex")
        object.__setattr__(self, "strategies", strategies)


class BilinearUtility:
    """Expected payoff of a bimatrix game in reduced simplex coordinates.

    Each player's mixed strategy over n_a actions is parameterized by its
    first n_a - 1 probabilities (the last is one minus their sum), keeping
    strategy sets full-dimensional for the oracle machinery.
    """

    def __init__(self, payoff: np.ndarray, player: int, n1: int, n2: int):
        self.payoff = np.asarray(payoff, dtype=float)
        self.player = player
        self.n1, self.n2 = n1, n2

    @staticmethod
    def _full(p_red: Vec) -> Vec:
        return np.concatenate([p_red, [1.0 - float(np.sum(p_red))]])

    def value(self, x: Vec) -> float:
        p = self._full(x[:self.n1 - 1])
        q = self._full(x[self.n1 - 1:])
        return float(p @ self.payoff @ q)

    def subgrad(self, x: Vec) -> Vec:
        p = self._full(x[:self.n1 - 1])
        q = self._full(x[self.n1 - 1:])
        gp_full = self.payoff @ q
        gq_full = self.payoff.T @ p
        gp = gp_full[:-1] - gp_full[-1]
        gq = gq_full[:-1] - gq_full[-1]
        return np.concatenate([gp, gq])


def bimatrix_game(A, B, beta: float = 1e-3) -> ConcaveGame:
    """Two-player mixed-extension game in reduced simplex coordinates."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n1, n2 = A.shape
    u1 = BilinearUtility(A, 0, n1, n2)
    u2 = BilinearUtility(B, 1, n1, n2)
    lip = float(max(np.abs(A).sum(), np.abs(B).sum()))
    u1.lipschitz = u2.lipschitz = lip
    s1 = _reduced_simplex_body(n1)
    s2 = _reduced_simplex_body(n2)
    blocks = [np.arange(n1 - 1), np.arange(n1 - 1, n1 - 1 + n2 - 1)]
    return ConcaveGame(blocks, [u1, u2], [s1, s2])


def _reduced_simplex_body(n_actions: int) -> ConvexBody:
    from .geometry import box_body, polyhedron_body
    d = n_actions - 1
    if d == 1:
        return box_body([0.0], [1.0])
    A = np.vstack([np.ones((1, d)), -np.eye(d)])
    b = np.concatenate([[1.0], np.zeros(d)])
    return polyhedron_body(A, b, Box(np.zeros(d), np.ones(d)))


def reduced_to_mixed(x: Vec, shape: Tuple[int, int]) -> MixedProfile:
    n1, n2 = shape
    p = np.concatenate([x[:n1 - 1], [1.0 - float(np.sum(x[:n1 - 1]))]])
    q = np.concatenate([x[n1 - 1:], [1.0 - float(np.sum(x[n1 - 1:]))]])
    return MixedProfile((np.clip(p, 0, 1), np.clip(q, 0, 1)))


def support_enumeration(A, B, tol: float = 1e-9) -> List[MixedProfile]:
    """All mixed equilibria of a nondegenerate bimatrix game by enumerating
    equal-size support pairs and solving the indifference systems."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n1, n2 = A.shape
    found: List[MixedProfile] = []
    for size in range(1, min(n1, n2) + 1):
        for I in itertools.combinations(range(n1), size):
            for J in itertools.combinations(range(n2), size):
                pq = _solve_support(A, B, I, J, tol)
                if pq is None:
                    continue
                p, q = pq
                if not any(np.allclose(p, f.strategies[0], atol=1e-6)
                           and np.allclose(q, f.strategies[1], atol=1e-6)
                           for f in found):
                    found.append(MixedProfile((p, q)))
    return found


def _solve_support(A, B, I, J, tol):
    n1, n2 = A.shape
    size = len(I)
    # q makes rows of I indifferent for player 1; p makes cols of J
    # indifferent for player 2.
    Mq = np.zeros((size + 1, size + 1))
    Mq[:size, :size] = A[np.ix_(I, J)]
    Mq[:size, size] = -1.0
    Mq[size, :size] = 1.0
    rhs = np.zeros(size + 1)
    rhs[size] = 1.0
    Mp = np.zeros((size + 1, size + 1))
    Mp[:size, :size] = B[np.ix_(I, J)].T
    Mp[:size, size] = -1.0
    Mp[size, :size] = 1.0
    try:
        q_sol = np.linalg.solve(Mq, rhs)
        p_sol = np.linalg.solve(Mp, rhs)
    except np.linalg.LinAlgError:
        return None
    q_sup, v1 = q_sol[:size], q_sol[size]
    p_sup, v2 = p_sol[:size], p_sol[size]
    if np.any(q_sup < -tol) or np.any(p_sup < -tol):
        return None
    p = np.zeros(n1)
    q = np.zeros(n2)
    p[list(I)] = np.clip(p_sup, 0.0, None)
    q[list(J)] = np.clip(q_sup, 0.0, None)
    p /= p.sum()
    q /= q.sum()
    if np.max(A @ q) > v1 + 1e-7 or np.max(B.T @ p) > v2 + 1e-7:
        return None
    return p, q


def matching_pennies() -> Tuple[np.ndarray, np.ndarray]:
    A = np.array([[1.0, -1.0], [-1.0, 1.0]])
    return A, -A


# ---------------------------------------------------------------------------
# The satisfiability gadget game


@dataclass(frozen=True)
class CNF3:
    n: int
    clauses: tuple

    def __post_init__(self):
        if self.n < 1 or not self.clauses:
            raise ContractError("need n >= 1 and at least one clause")
        clauses = tuple(tuple(int(l) for l in c) for c in self.clauses)
        for c in clauses:
            if len(c) != 3:
                raise ContractError("clauses carry exactly 3 literals")
            for l in c:
                if l == 0 or abs(l) > self.n:
                    raise ContractError(f"literal {l} out of range")
        object.__setattr__(self, "clauses", clauses)

    def satisfied_by(self, assignment: Sequence[bool]) -> bool:
        return all(any((l > 0) == bool(assignment[abs(l) - 1]) for l in c)
                   for c in self.clauses)

    def satisfiable(self) -> Optional[Tuple[bool, ...]]:
        for bits in itertools.product([False, True], repeat=self.n):
            if self.satisfied_by(bits):
                return bits
        return None


@dataclass(eq=False)
class SVGame:
    """Gadget game over strategies L + C + V (+ f with a trivial third player).

    Strategy order: literals (+1, -1, +2, -2, ...), then clauses, then
    variables, then f when present.  Payoffs are integers so exact rational
    verification is possible.
    """

    phi: CNF3
    with_f: bool
    labels: list
    u1: np.ndarray
    u2: np.ndarray
    u3: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.phi.n

    def literal_index(self, lit: int) -> int:
        v = abs(lit) - 1
        return 2 * v + (0 if lit > 0 else 1)

    def clause_index(self, c: int) -> int:
        return 2 * self.n + c

    def variable_index(self, v: int) -> int:
        return 2 * self.n + len(self.phi.clauses) + v

    @property
    def f_index(self) -> int:
        if not self.with_f:
            raise ContractError("game was built without the escape strategy")
        return len(self.labels) - 1


def build_sv_game(phi: CNF3, with_f: bool = False) -> SVGame:
    """Populate the payoff tables of the gadget game.

    Literal pairs pay n-1 unless contradictory (n-4); variables and clauses
    police the literal distribution (0 against their own literals, n against
    the rest); every remaining pairing pays n-4.  with_f adds the escape
    strategy and a third player whose payoff is identically 1.
    """
    n = phi.n
    lits = [l for v in range(1, n + 1) for l in (v, -v)]
    labels = ([f"lit:{l}" for l in lits]
              + [f"clause:{i}" for i in range(len(phi.clauses))]
              + [f"var:{v}" for v in range(1, n + 1)])
    nL = 2 * n
    nC = len(phi.clauses)
    base = nL + nC + n
    u1 = np.empty((base, base), dtype=np.int64)
    for r in range(base):
        for c in range(base):
            u1[r, c] = _sv_entry(phi, lits, nL, nC, r, c)
    if not with_f:
        return SVGame(phi, False, labels, u1, u1.T.copy())
    labels = labels + ["f"]
    S = base + 1
    U1 = np.empty((S, S, S), dtype=np.int64)
    U2 = np.empty((S, S, S), dtype=np.int64)
    for r in range(S):
        for c in range(S):
            if r == S - 1 and c == S - 1:
                a1 = a2 = 0
            elif c == S - 1:
                a1, a2 = 0, n - 1
            elif r == S - 1:
                a1, a2 = n - 1, 0
            else:
                a1, a2 = u1[r, c], u1[c, r]
            U1[r, c, :] = a1
            U2[r, c, :] = a2
    U3 = np.ones((S, S, S), dtype=np.int64)
    return SVGame(phi, True, labels, U1, U2, U3)


def _sv_entry(phi: CNF3, lits, nL: int, nC: int, r: int, c: int) -> int:
    n = phi.n
    r_lit = lits[r] if r < nL else None
    c_lit = lits[c] if c < nL else None
    r_clause = r - nL if nL <= r < nL + nC else None
    r_var = r - nL - nC + 1 if r >= nL + nC else None
    if r_lit is not None and c_lit is not None:
        return n - 4 if r_lit == -c_lit else n - 1
    if r_lit is not None:
        return n - 4  # literal vs clause-or-variable
    if c_lit is None:
        return n - 4  # clause/variable vs clause/variable
    if r_var is not None:
        return 0 if abs(c_lit) == r_var else n
    return 0 if c_lit in phi.clauses[r_clause] else n


@dataclass
class SVCheckResult:
    accepted: bool
    payoff: Fraction
    deviation: Optional[str] = None
    deviation_payoff: Optional[Fraction] = None


def check_sv_equilibrium(game: SVGame, phi: CNF3,
                         assignment: Sequence[bool]) -> SVCheckResult:
    """Exact verification (rational arithmetic) that the uniform profile over
    the assignment's literals is a Nash equilibrium paying exactly n-1.

    When the assignment falsifies some clause, that clause strategy pays n
    against the profile and the result carries it as the profitable
    deviation.
    """
    n = game.n
    if len(assignment) != n:
        raise ContractError("assignment length must equal variable count")
    sat_lits = [v + 1 if assignment[v] else -(v + 1) for v in range(n)]
    support = [game.literal_index(l) for l in sat_lits]
    prob = Fraction(1, n)

    def expected_row(row: int) -> Fraction:
        # Player 1's payoff for a pure row against player 2's profile;
        # symmetric game + identical profiles cover player 2.
        if game.with_f:
            return sum(prob * int(game.u1[row, cdx, 0]) for cdx in support)
        return sum(prob * int(game.u1[row, cdx]) for cdx in support)

    current = sum(prob * expected_row(rdx) for rdx in support)
    best_dev, best_val = None, current
    n_strats = len(game.labels)
    for row in range(n_strats):
        val = expected_row(row)
        if val > best_val:
            best_val, best_dev = val, game.labels[row]
    if best_dev is not None:
        return SVCheckResult(False, current, best_dev, best_val)
    if current != Fraction(n - 1):
        return SVCheckResult(False, current, None, None)
    return SVCheckResult(True, current)
