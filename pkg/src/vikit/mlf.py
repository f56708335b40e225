"""Remedial multi-leader-follower pipeline.

Followers solve a parametric quadratic generalized-Nash layer; each leader
optimizes over a lifted KKT polyhedron of anticipated follower responses
(restricted or relaxed complementarity), and the two surrogate problems
combine into a GQVI over both leaders' lifted blocks.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from . import ellipsoid as _el
from .errors import ContractError, EmptinessCertificate
from .geometry import (Box, ConvexBody, Correspondence, Vec, as_vector,
                       ball_body, box_body, hull_body, intersect_bodies,
                       lift_body, parallel_body, polyhedron_body,
                       product_body, separate)
from .vi import GQVIProblem, Operator, VIProblem

TAU_EQ = 1e-7  # half-width of equality rows encoded as row pairs
_PSD_TOL = 1e-9


@dataclass(frozen=True)
class PartialResponseMode:
    mode: str  # "restricted" | "relaxed"

    def __post_init__(self):
        if self.mode not in ("restricted", "relaxed"):
            raise ContractError("mode is 'restricted' or 'relaxed'")


RELAXED = PartialResponseMode("relaxed")
RESTRICTED = PartialResponseMode("restricted")


@dataclass(frozen=True)
class LiftedResponsePoint:
    y: Vec
    lam: tuple  # one nonnegative vector per follower
    mu: tuple

    def __post_init__(self):
        lam = tuple(np.asarray(l, dtype=float) for l in self.lam)
        mu = tuple(np.asarray(m, dtype=float) for m in self.mu)
        for v in lam + mu:
            if np.any(v < -1e-9):
                raise ContractError("multipliers must be nonnegative")
        object.__setattr__(self, "y", as_vector(self.y))
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "mu", mu)

    def flat(self) -> Vec:
        return np.concatenate([self.y] + list(self.lam) + list(self.mu))


@dataclass(eq=False)
class MLFGame:
    """Two leaders, k followers with the structured quadratic losses
    theta_i(y) = 1/2 y_i^T M_i y_i + c_i(x_I, x_II, y_-i)^T y_i (+ psi_i).

    c_maps[i] is (W_i, w0_i) over the concatenation (x_I, x_II, y_-i); the
    scalar psi_i terms never enter any computation.  Follower strategy boxes
    realize the S_i sets; multiplier_bound closes the lifted (y, lambda, mu)
    polyhedra into well-bounded bodies.
    """

    M: List[np.ndarray]
    A_I: List[np.ndarray]
    A_II: List[np.ndarray]
    B: List[List[np.ndarray]]
    C_I: List[np.ndarray]
    C_II: List[np.ndarray]
    D: List[np.ndarray]
    c_maps: List[Tuple[np.ndarray, np.ndarray]]
    X_I: ConvexBody = None
    X_II: ConvexBody = None
    phi_I: object = None
    phi_II: object = None
    follower_boxes: List[Box] = field(default_factory=list)
    multiplier_bound: float = 100.0

    def __post_init__(self):
        self.M = [np.atleast_2d(np.asarray(m, dtype=float)) for m in self.M]
        for i, Mi in enumerate(self.M):
            if Mi.shape[0] != Mi.shape[1] or \
                    np.max(np.abs(Mi - Mi.T)) > 1e-9:
                raise ContractError(f"M_{i} must be symmetric")
            if float(np.min(np.linalg.eigvalsh(Mi))) < -_PSD_TOL:
                raise ContractError(f"M_{i} must be positive semidefinite")
        conv = lambda lst: [np.atleast_2d(np.asarray(a, dtype=float))
                            for a in lst]
        self.A_I, self.A_II = conv(self.A_I), conv(self.A_II)
        self.C_I, self.C_II = conv(self.C_I), conv(self.C_II)
        self.D = conv(self.D)
        self.B = [conv(row) for row in self.B]
        self.c_maps = [(np.atleast_2d(np.asarray(W, dtype=float)),
                        np.asarray(w0, dtype=float).reshape(-1))
                       for W, w0 in self.c_maps]
        k = self.k
        for i in range(k):
            mi, li, ni = self.m_i(i), self.l_i(i), self.n_i(i)
            if self.A_I[i].shape != (mi, self.n_I) or \
                    self.A_II[i].shape != (mi, self.n_II):
                raise ContractError(f"A_{i} shape mismatch")
            if self.C_I[i].shape != (li, self.n_I) or \
                    self.C_II[i].shape != (li, self.n_II) or \
                    self.D[i].shape != (li, ni):
                raise ContractError(f"C/D_{i} shape mismatch")
            for j in range(k):
                if self.B[i][j].shape != (mi, self.n_i(j)):
                    raise ContractError(f"B_{i},{j} shape mismatch")
            W, w0 = self.c_maps[i]
            if W.shape != (ni, self.n_I + self.n_II + self.n - ni) or \
                    w0.shape != (ni,):
                raise ContractError(f"c_map_{i} shape mismatch")
        if len(self.follower_boxes) != k:
            raise ContractError("one strategy box per follower required")

    @property
    def k(self) -> int:
        return len(self.M)

    def n_i(self, i: int) -> int:
        return self.M[i].shape[0]

    def m_i(self, i: int) -> int:
        return self.A_I[i].shape[0] if self.A_I[i].size else 0

    def l_i(self, i: int) -> int:
        return self.D[i].shape[0] if self.D[i].size else 0

    @property
    def n(self) -> int:
        return sum(self.n_i(i) for i in range(self.k))

    @property
    def n_I(self) -> int:
        return self.X_I.dim

    @property
    def n_II(self) -> int:
        return self.X_II.dim

    def y_slice(self, i: int) -> np.ndarray:
        start = sum(self.n_i(j) for j in range(i))
        return np.arange(start, start + self.n_i(i))

    def c_i(self, i: int, x_I: Vec, x_II: Vec, y_minus: Vec) -> Vec:
        W, w0 = self.c_maps[i]
        return W @ np.concatenate([x_I, x_II, y_minus]) + w0

    def assemble(self, x_I: Vec, x_II: Vec, y: Vec) -> Vec:
        return np.concatenate([x_I, x_II, y])


# ---------------------------------------------------------------------------
# Followers' joint equilibrium as a VI


def follower_vi(game: MLFGame, x_I, x_II, beta: float = 1e-3) -> VIProblem:
    """Affine-monotone VI over the followers' joint polyhedral feasible set,
    with F(y)_i = M_i y_i + c_i(x_I, x_II, y_-i)."""
    x_I = as_vector(x_I, game.n_I)
    x_II = as_vector(x_II, game.n_II)
    n = game.n

    def F(y: Vec) -> Vec:
        out = np.empty(n)
        for i in range(game.k):
            sl = game.y_slice(i)
            y_minus = np.delete(y, sl)
            out[sl] = game.M[i] @ y[sl] + game.c_i(i, x_I, x_II, y_minus)
        return out

    lip = max(sum(float(np.linalg.norm(game.M[i], 2))
                  + float(np.linalg.norm(game.c_maps[i][0], 2))
                  for i in range(game.k)), 1e-9)
    rows_A, rows_b = _follower_rows(game, x_I, x_II)
    lo = np.concatenate([bx.lo for bx in game.follower_boxes])
    hi = np.concatenate([bx.hi for bx in game.follower_boxes])
    A = np.vstack([rows_A, np.eye(n), -np.eye(n)]) if rows_A.size else \
        np.vstack([np.eye(n), -np.eye(n)])
    b = np.concatenate([rows_b, hi, -lo]) if rows_A.size else \
        np.concatenate([hi, -lo])
    R = polyhedron_body(A, b, Box(lo, hi))
    return VIProblem(Operator(F, n, n, lipschitz=lip), R, beta=beta)


def _follower_rows(game: MLFGame, x_I: Vec, x_II: Vec):
    """Inequality rows over y: g_i <= 0 and h_i <= 0 for every follower."""
    rows, rhs = [], []
    for i in range(game.k):
        if game.m_i(i):
            Brow = np.hstack([game.B[i][j] for j in range(game.k)])
            rows.append(Brow)
            rhs.append(-(game.A_I[i] @ x_I + game.A_II[i] @ x_II))
        if game.l_i(i):
            block = np.zeros((game.l_i(i), game.n))
            block[:, game.y_slice(i)] = game.D[i]
            rows.append(block)
            rhs.append(-(game.C_I[i] @ x_I + game.C_II[i] @ x_II))
    if rows:
        return np.vstack(rows), np.concatenate(rhs)
    return np.zeros((0, game.n)), np.zeros(0)


# ---------------------------------------------------------------------------
# Lifted KKT polyhedra (partial responses)


def _lifted_rows(game: MLFGame, leader_dim: int, x_I_fixed: Optional[Vec],
                 x_II_fixed: Optional[Vec], mode: PartialResponseMode):
    """Rows over (x_L?, y, lambda, mu).

    When one leader's strategy is a free block its columns lead the layout;
    a fixed leader strategy folds into the right-hand side instead.
    Stationarity equalities appear as +/- row pairs with half-width TAU_EQ;
    all rows are L2-normalized so TAU_EQ means Euclidean distance.
    """
    k, n = game.k, game.n
    m_tot = sum(game.m_i(i) for i in range(k))
    l_tot = sum(game.l_i(i) for i in range(k))
    dim = leader_dim + n + m_tot + l_tot
    y_off = leader_dim
    lam_off = leader_dim + n
    mu_off = lam_off + m_tot
    both_fixed = x_I_fixed is not None and x_II_fixed is not None
    free_is_I = x_I_fixed is None

    def leader_cols(Mx_I, Mx_II):
        cols = np.zeros((Mx_I.shape[0], leader_dim))
        const = np.zeros(Mx_I.shape[0])
        if both_fixed:
            const += Mx_I @ x_I_fixed + Mx_II @ x_II_fixed
        elif free_is_I:
            cols[:, :] = Mx_I
            const += Mx_II @ x_II_fixed
        else:
            cols[:, :] = Mx_II
            const += Mx_I @ x_I_fixed
        return cols, const

    rows, rhs = [], []

    def add(row, b):
        rows.append(row)
        rhs.append(b)

    lam_offs, mu_offs = [], []
    off = lam_off
    for i in range(k):
        lam_offs.append(off)
        off += game.m_i(i)
    off = mu_off
    for i in range(k):
        mu_offs.append(off)
        off += game.l_i(i)

    for i in range(k):
        ni = game.n_i(i)
        sl = game.y_slice(i)
        W, w0 = game.c_maps[i]
        W_xI = W[:, :game.n_I]
        W_xII = W[:, game.n_I:game.n_I + game.n_II]
        W_ym = W[:, game.n_I + game.n_II:]
        lcols, lconst = leader_cols(W_xI, W_xII)
        # stationarity: c_i + M_i y_i + B_ii^T lam_i + D_i^T mu_i = 0
        for r in range(ni):
            row = np.zeros(dim)
            row[:leader_dim] = lcols[r]
            row[y_off + sl] = game.M[i][r]
            ym_idx = np.delete(np.arange(n), sl)
            row[y_off + ym_idx] += W_ym[r]
            if game.m_i(i):
                row[lam_offs[i]:lam_offs[i] + game.m_i(i)] = game.B[i][i].T[r]
            if game.l_i(i):
                row[mu_offs[i]:mu_offs[i] + game.l_i(i)] = game.D[i].T[r]
            const = -(lconst[r] + w0[r])
            add(row, const + TAU_EQ)
            add(-row, -const + TAU_EQ)
        # g_i <= 0 over (x_L, y)
        if game.m_i(i):
            lcols_g, lconst_g = leader_cols(game.A_I[i], game.A_II[i])
            Brow = np.hstack([game.B[i][j] for j in range(k)])
            for r in range(game.m_i(i)):
                row = np.zeros(dim)
                row[:leader_dim] = lcols_g[r]
                row[y_off:y_off + n] = Brow[r]
                add(row, -lconst_g[r])
        # h_i <= 0
        if game.l_i(i):
            lcols_h, lconst_h = leader_cols(game.C_I[i], game.C_II[i])
            for r in range(game.l_i(i)):
                row = np.zeros(dim)
                row[:leader_dim] = lcols_h[r]
                row[y_off + sl] = game.D[i][r]
                add(row, -lconst_h[r])
    # multiplier signs and bounds
    for j in range(m_tot + l_tot):
        row = np.zeros(dim)
        row[lam_off + j] = -1.0
        add(row, 0.0)
        row2 = np.zeros(dim)
        row2[lam_off + j] = 1.0
        add(row2, game.multiplier_bound)
        if mode.mode == "restricted" and j < m_tot:
            # default restricted pattern: lambda = 0
            row3 = np.zeros(dim)
            row3[lam_off + j] = 1.0
            add(row3, 0.0)
    A = np.array(rows)
    b = np.array(rhs)
    norms = np.linalg.norm(A, axis=1)
    keep = norms > 1e-14
    A[keep] = A[keep] / norms[keep, None]
    b[keep] = b[keep] / norms[keep]
    return A, b, dim, y_off, lam_off, mu_off


def _lifted_bbox(game: MLFGame, leader_box: Optional[Box]) -> Box:
    lo = [np.concatenate([bx.lo for bx in game.follower_boxes])]
    hi = [np.concatenate([bx.hi for bx in game.follower_boxes])]
    m_tot = sum(game.m_i(i) for i in range(game.k))
    l_tot = sum(game.l_i(i) for i in range(game.k))
    lo.append(np.zeros(m_tot + l_tot))
    hi.append(np.full(m_tot + l_tot, game.multiplier_bound))
    if leader_box is not None:
        lo.insert(0, leader_box.lo)
        hi.insert(0, leader_box.hi)
    return Box(np.concatenate(lo), np.concatenate(hi))


def partial_response_body(game: MLFGame, leader: str, x_I, x_II,
                          mode: PartialResponseMode = RELAXED,
                          extra_rows: Optional[Tuple[np.ndarray, np.ndarray]]
                          = None) -> ConvexBody:
    """The lifted (y, lambda, mu) polyhedron of anticipated responses.

    Relaxed mode drops complementarity (the canonical relaxation); restricted
    mode additionally pins lambda = 0 unless explicit extra rows supply the
    restriction polyhedra.
    """
    if leader not in ("I", "II"):
        raise ContractError("leader is 'I' or 'II'")
    x_I = as_vector(x_I, game.n_I)
    x_II = as_vector(x_II, game.n_II)
    use_mode = mode if extra_rows is None else RELAXED
    A, b, dim, *_ = _lifted_rows(game, 0, x_I, x_II, use_mode)
    # leader_dim=0 requires folding both strategies: refold with x_I fixed
    # and leader columns absent.
    if extra_rows is not None:
        A_extra, b_extra = extra_rows
        A = np.vstack([A, A_extra])
        b = np.concatenate([b, b_extra])
    return polyhedron_body(A, b, _lifted_bbox(game, None))


def leader_surrogate(game: MLFGame, leader: str, x_other):
    """Surrogate optimization instance for one leader: minimize its loss over
    its own strategy body intersected with the lifted KKT polyhedron (the
    leader strategy is a free coordinate block inside the rows)."""
    if leader == "I":
        own_body, n_L = game.X_I, game.n_I
        x_I_fixed, x_II_fixed = None, as_vector(x_other, game.n_II)
        phi = game.phi_I
    elif leader == "II":
        own_body, n_L = game.X_II, game.n_II
        x_I_fixed, x_II_fixed = as_vector(x_other, game.n_I), None
        phi = game.phi_II
    else:
        raise ContractError("leader is 'I' or 'II'")
    A, b, dim, y_off, lam_off, mu_off = _lifted_rows(
        game, n_L, x_I_fixed, x_II_fixed, RELAXED)
    bbox = _lifted_bbox(game, Box(own_body.bbox.lo, own_body.bbox.hi))
    poly = polyhedron_body(A, b, bbox)
    body = intersect_bodies(
        [lift_body(own_body, np.arange(n_L), dim, bbox), poly])

    def full_profile(v: Vec) -> Vec:
        x_L = v[:n_L]
        y = v[y_off:y_off + game.n]
        if leader == "I":
            return game.assemble(x_L, x_II_fixed, y)
        return game.assemble(x_I_fixed, x_L, y)

    def value(v: Vec) -> float:
        return float(phi.value(full_profile(v)))

    def grad(v: Vec) -> Vec:
        g_full = phi.subgrad(full_profile(v))
        out = np.zeros(dim)
        if leader == "I":
            out[:n_L] = g_full[:game.n_I]
        else:
            out[:n_L] = g_full[game.n_I:game.n_I + game.n_II]
        out[y_off:y_off + game.n] = g_full[game.n_I + game.n_II:]
        return out

    objective = _el.FunObjective(value, grad, k=1)
    return SurrogateProblem(leader, objective, body, n_L, y_off, dim,
                            full_profile)


@dataclass(eq=False)
class SurrogateProblem:
    leader: str
    objective: object
    body: ConvexBody
    n_L: int
    y_off: int
    dim: int
    full_profile: Callable


def solve_surrogate(sp: SurrogateProblem, eps: float = 1e-3,
                    lipschitz: float = 4.0):
    """Optimal value and minimizer of the surrogate; delta sits below the
    equality-row half-width so the thin rows are resolved, not certified
    empty."""
    report = _el.optimize(sp.objective, [sp.body], "min", eps=eps,
                          delta=TAU_EQ / 4.0, lipschitz=lipschitz)
    if report.status == "empty":
        raise EmptinessCertificate(report.empty_index, report)
    return float(report.value[0]), report.argmin


# ---------------------------------------------------------------------------
# Multiplier reconstruction (lifting y-only points)


def lift_response(game: MLFGame, x_I, x_II, y,
                  tol: float = 1e-6) -> LiftedResponsePoint:
    """Recover nonnegative multipliers certifying the follower KKT system at
    y, by enumerating active supports and least squares (desk scale)."""
    x_I = as_vector(x_I, game.n_I)
    x_II = as_vector(x_II, game.n_II)
    y = as_vector(y, game.n)
    lams, mus = [], []
    for i in range(game.k):
        sl = game.y_slice(i)
        rhs = -(game.c_i(i, x_I, x_II, np.delete(y, sl))
                + game.M[i] @ y[sl])
        cols = []
        if game.m_i(i):
            cols.append(game.B[i][i].T)
        if game.l_i(i):
            cols.append(game.D[i].T)
        if not cols:
            if float(np.linalg.norm(rhs)) > tol:
                raise ContractError("stationarity fails with no multipliers")
            lams.append(np.zeros(0))
            mus.append(np.zeros(0))
            continue
        G = np.hstack(cols)
        sol = _nnls_enumerate(G, rhs, tol)
        if sol is None:
            raise ContractError(
                f"no nonnegative multipliers certify follower {i}")
        lams.append(sol[:game.m_i(i)])
        mus.append(sol[game.m_i(i):])
    return LiftedResponsePoint(y, tuple(lams), tuple(mus))


def _nnls_enumerate(G: np.ndarray, rhs: Vec, tol: float) -> Optional[Vec]:
    n_cols = G.shape[1]
    best = None
    for size in range(n_cols + 1):
        for sup in itertools.combinations(range(n_cols), size):
            sup = list(sup)
            if sup:
                sol, *_ = np.linalg.lstsq(G[:, sup], rhs, rcond=None)
            else:
                sol = np.zeros(0)
            full = np.zeros(n_cols)
            full[sup] = sol
            if np.any(full < -tol):
                continue
            res = float(np.linalg.norm(G @ np.clip(full, 0, None) - rhs))
            if res <= tol:
                return np.clip(full, 0.0, None)
            if best is None or res < best[0]:
                best = (res, np.clip(full, 0.0, None))
    return None


# ---------------------------------------------------------------------------
# GQVI formulation of the remedial equilibrium


def mlf_to_gqvi(game: MLFGame, beta: float = 1e-2,
                hull_radius: Optional[float] = None,
                probe_trials: int = 0,
                rng: Optional[np.random.Generator] = None) -> GQVIProblem:
    """GQVI over z = (x_I, y_I, lam_I, mu_I, x_II, y_II, lam_II, mu_II).

    F(z) is the product of each leader's Clarke-subdifferential hull over its
    own (x_L, y_L) coordinates (axis-perturbation samples, inflated by
    hull_radius for projectability); R(z) is the product of the two lifted
    surrogate polyhedra, each parameterized by the other leader's strategy.
    """
    r_w = hull_radius if hull_radius is not None else beta / 8.0
    if probe_trials > 0:
        from . import circuits as _c
        region = game.X_I.bbox.concat(game.X_II.bbox)
        region = Box(np.concatenate(
            [region.lo] + [bx.lo for bx in game.follower_boxes]),
            np.concatenate([region.hi] + [bx.hi for bx in game.follower_boxes]))
        for name, phi in (("I", game.phi_I), ("II", game.phi_II)):
            w = _c.probe_concavity(lambda v: np.array([phi.value(v)]), region,
                                   probe_trials, rng=rng, concave=False)
            if w is not None:
                raise ContractError(
                    f"loss of leader {name} violates convexity "
                    f"(gap {w.gap:.3g})")

    m_tot = sum(game.m_i(i) for i in range(game.k))
    l_tot = sum(game.l_i(i) for i in range(game.k))
    dI = game.n_I + game.n + m_tot + l_tot
    dII = game.n_II + game.n + m_tot + l_tot
    dim = dI + dII

    def R_at(z: Vec) -> ConvexBody:
        x_I = z[:game.n_I]
        x_II = z[dI:dI + game.n_II]
        bI = _leader_block_body(game, "I", x_II)
        bII = _leader_block_body(game, "II", x_I)
        return product_body([bI, bII])

    def F_at(z: Vec) -> ConvexBody:
        factors = [_subdiff_hull(game, "I", z, dI)]
        if m_tot + l_tot:
            factors.append(box_body(np.zeros(m_tot + l_tot),
                                    np.zeros(m_tot + l_tot)))
        factors.append(_subdiff_hull(game, "II", z, dI))
        if m_tot + l_tot:
            factors.append(box_body(np.zeros(m_tot + l_tot),
                                    np.zeros(m_tot + l_tot)))
        return parallel_body(product_body(factors), r_w)

    domain = _gqvi_domain(game, dI, dII)
    L_R = 1.0
    for i in range(game.k):
        block = np.hstack([game.A_I[i], game.A_II[i]])
        if block.size:
            L_R += float(np.linalg.norm(block, 2))
    R = Correspondence(dim, dim, R_at, lipschitz=L_R, domain=domain)
    F = Correspondence(dim, dim, F_at, lipschitz=1.0, domain=domain)
    return GQVIProblem(F=F, R=R, beta=beta, gamma=0.0)


def _leader_block_body(game: MLFGame, leader: str, x_other: Vec) -> ConvexBody:
    sp = leader_surrogate(game, leader, x_other)
    return sp.body


def _subdiff_hull(game: MLFGame, leader: str, z: Vec, dI: int) -> ConvexBody:
    """Hull of loss subgradients at the leader's (x_L, y_L) coordinates,
    sampled at the point and 2d axis perturbations of size 1e-7."""
    if leader == "I":
        phi, n_L = game.phi_I, game.n_I
        x_L = z[:n_L]
        y_L = z[n_L:n_L + game.n]
        x_other = z[dI:dI + game.n_II]
        prof = game.assemble(x_L, x_other, y_L)
        pick = np.concatenate([np.arange(game.n_I),
                               np.arange(game.n_I + game.n_II,
                                         game.n_I + game.n_II + game.n)])
    else:
        phi, n_L = game.phi_II, game.n_II
        x_L = z[dI:dI + n_L]
        y_L = z[dI + n_L:dI + n_L + game.n]
        x_other = z[:game.n_I]
        prof = game.assemble(x_other, x_L, y_L)
        pick = np.arange(game.n_I, game.n_I + game.n_II + game.n)
    h = 1e-7
    samples = [phi.subgrad(prof)[pick]]
    for idx in pick:
        for sgn in (h, -h):
            p = prof.copy()
            p[idx] += sgn
            samples.append(phi.subgrad(p)[pick])
    pts = np.array(samples)
    pad = 10.0 * np.max(np.abs(pts)) + 1.0
    return hull_body(pts, Box(pts.min(axis=0) - pad, pts.max(axis=0) + pad))


def _gqvi_domain(game: MLFGame, dI: int, dII: int) -> Box:
    bI = _lifted_bbox(game, Box(game.X_I.bbox.lo, game.X_I.bbox.hi))
    bII = _lifted_bbox(game, Box(game.X_II.bbox.lo, game.X_II.bbox.hi))
    return bI.concat(bII)


# ---------------------------------------------------------------------------
# Remedial verification


@dataclass
class RemedialCheck:
    accepted: bool
    leader: Optional[str] = None
    gap: float = 0.0
    sol_I: float = 0.0
    sol_II: float = 0.0
    value_I: float = 0.0
    value_II: float = 0.0
    violations: list = field(default_factory=list)


def check_remedial(game: MLFGame, x_I, y_I, x_II, y_II,
                   beta: float = 1e-2) -> RemedialCheck:
    """Both leaders' losses compared against freshly solved surrogate optima
    (inner tolerance beta/4 each); acceptance at compound tolerance
    beta + beta/4."""
    x_I = as_vector(x_I, game.n_I)
    x_II = as_vector(x_II, game.n_II)
    y_I = as_vector(y_I, game.n)
    y_II = as_vector(y_II, game.n)
    violations = []
    if not separate(game.X_I, x_I).inside:
        violations.append("x_I outside X^I")
    if not separate(game.X_II, x_II).inside:
        violations.append("x_II outside X^II")
    spI = leader_surrogate(game, "I", x_II)
    spII = leader_surrogate(game, "II", x_I)
    sol_I, _ = solve_surrogate(spI, eps=beta / 4.0)
    sol_II, _ = solve_surrogate(spII, eps=beta / 4.0)
    val_I = float(game.phi_I.value(game.assemble(x_I, x_II, y_I)))
    val_II = float(game.phi_II.value(game.assemble(x_I, x_II, y_II)))
    tol = beta + beta / 4.0
    gap_I = val_I - sol_I
    gap_II = val_II - sol_II
    if violations:
        return RemedialCheck(False, None, 0.0, sol_I, sol_II, val_I, val_II,
                             violations)
    if gap_I > tol:
        return RemedialCheck(False, "I", gap_I, sol_I, sol_II, val_I, val_II,
                             ["leader I loss exceeds Sol + beta"])
    if gap_II > tol:
        return RemedialCheck(False, "II", gap_II, sol_I, sol_II, val_I,
                             val_II, ["leader II loss exceeds Sol + beta"])
    return RemedialCheck(True, None, max(gap_I, gap_II), sol_I, sol_II,
                         val_I, val_II)
