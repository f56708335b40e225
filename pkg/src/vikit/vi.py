"""VI / QVI / GQVI / MVI problems, residuals, certificates, and solvers.

Residuals discharge the universal quantifier of each solution definition by
an inner linear minimization (through the ellipsoid engine); verification is
certificate-producing, and the GQVI solver composes the near-argmax
correspondence construction with a damped Kakutani fixed-point search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from . import circuits as _circ
from . import ellipsoid as _el
from .errors import ContractError, EmptinessCertificate, VikitError
from .geometry import (Box, ConvexBody, Correspondence, Vec, as_vector,
                       ball_body, inf_normalize, separate)


class SolveFailure(VikitError):
    def __init__(self, message, best=None, trace=None):
        super().__init__(message)
        self.best = best
        self.trace = trace or []


# ---------------------------------------------------------------------------
# Operators


@dataclass(eq=False)
class Operator:
    """A point-to-point map with declared dimensions and Lipschitz constant."""

    fn: Callable[[Vec], Vec]
    dim_in: int
    dim_out: int
    lipschitz: float = 1.0

    def __call__(self, x) -> Vec:
        x = as_vector(x, dim=self.dim_in)
        return as_vector(self.fn(x), dim=self.dim_out)


def circuit_operator(circuit: _circ.LinCircuit) -> Operator:
    return Operator(lambda x: _circ.evaluate(circuit, x), circuit.n_inputs,
                    circuit.n_outputs,
                    lipschitz=max(_circ.lipschitz_bound(circuit), 1e-12))


def affine_operator(W, c) -> Operator:
    W = np.asarray(W, dtype=float)
    c = np.asarray(c, dtype=float).reshape(-1)
    return Operator(lambda x: W @ x + c, W.shape[1], W.shape[0],
                    lipschitz=float(np.linalg.norm(W, 2)) or 1e-12)


# ---------------------------------------------------------------------------
# Problem types


@dataclass(eq=False)
class VIProblem:
    F: Operator
    R: ConvexBody
    beta: float = 1e-3

    def __post_init__(self):
        if self.F.dim_in != self.R.dim or self.F.dim_out != self.R.dim:
            raise ContractError("operator/set dimension mismatch")

    @property
    def dim(self) -> int:
        return self.R.dim


@dataclass(eq=False)
class QVIProblem:
    F: Operator
    R: Correspondence
    beta: float = 1e-3

    def __post_init__(self):
        if self.R.dim_in != self.R.dim_out or self.F.dim_in != self.R.dim_out:
            raise ContractError("operator/correspondence dimension mismatch")

    @property
    def dim(self) -> int:
        return self.R.dim_out


@dataclass(eq=False)
class GQVIProblem:
    """Operator correspondence F (gamma-strongly-convex valued by promise)
    paired with a constraint correspondence R."""

    F: Correspondence
    R: Correspondence
    beta: float = 1e-3
    gamma: float = 0.0

    def __post_init__(self):
        if self.R.dim_in != self.R.dim_out or self.F.dim_out != self.R.dim_out:
            raise ContractError("correspondence dimension mismatch")
        if self.gamma < 0:
            raise ContractError("gamma must be nonnegative")

    @property
    def dim(self) -> int:
        return self.R.dim_out


@dataclass(eq=False)
class MVIProblem:
    """Stacked VI conditions, one per operator column."""

    F: List[Operator]
    R: ConvexBody
    beta: float = 1e-3

    def __post_init__(self):
        if not self.F:
            raise ContractError("MVI needs at least one operator column")
        for op in self.F:
            if op.dim_in != self.R.dim or op.dim_out != self.R.dim:
                raise ContractError("operator/set dimension mismatch")

    @property
    def dim(self) -> int:
        return self.R.dim

    @property
    def r(self) -> int:
        return len(self.F)


Problem = Union[VIProblem, QVIProblem, GQVIProblem, MVIProblem]


# ---------------------------------------------------------------------------
# Certificates


@dataclass
class SolutionCertificate:
    x: Vec
    x_star: Vec
    w: Optional[Vec] = None
    w_star: Optional[np.ndarray] = None
    residual: Optional[np.ndarray] = None
    closeness: Optional[float] = None

    def to_dict(self) -> dict:
        out = {"x": list(map(float, np.atleast_1d(self.x))),
               "x_star": list(map(float, np.atleast_1d(self.x_star)))}
        if self.w is not None:
            out["w"] = list(map(float, np.atleast_1d(self.w)))
        if self.w_star is not None:
            out["w_star"] = np.asarray(self.w_star, dtype=float).tolist()
        if self.residual is not None:
            out["residual"] = list(map(float, np.atleast_1d(self.residual)))
        if self.closeness is not None:
            out["closeness"] = float(self.closeness)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "SolutionCertificate":
        get = lambda k: np.asarray(d[k], dtype=float) if k in d else None
        return cls(x=get("x"), x_star=get("x_star"), w=get("w"),
                   w_star=get("w_star"), residual=get("residual"),
                   closeness=d.get("closeness"))


@dataclass
class ViolationCertificate:
    kind: str  # "emptiness" | "hausdorff_lipschitz" | "strong_convexity"
    witness: dict
    declared: Optional[float] = None

    def to_dict(self) -> dict:
        def conv(v):
            if isinstance(v, np.ndarray):
                return v.tolist()
            if isinstance(v, (np.floating, np.integer)):
                return float(v)
            return v
        return {"kind": self.kind,
                "witness": {k: conv(v) for k, v in self.witness.items()},
                "declared": self.declared}

    @classmethod
    def from_dict(cls, d: dict) -> "ViolationCertificate":
        return cls(d["kind"], dict(d["witness"]), d.get("declared"))

    def revalidate_inequality(self) -> bool:
        """Re-check the violated inequality from the stored witness alone."""
        w = self.witness
        if self.kind == "hausdorff_lipschitz":
            z = np.asarray(w["z"], dtype=float)
            ww = np.asarray(w["w"], dtype=float)
            p = np.asarray(w["p"], dtype=float)
            q = np.asarray(w["q"], dtype=float)
            return (np.linalg.norm(z - ww)
                    > self.declared * np.linalg.norm(p - q) + 3.0 * w["eps"])
        if self.kind == "strong_convexity":
            return w["lhs"] > w["rhs"]
        if self.kind == "emptiness":
            return True  # soundness is checked against the set, not the data
        raise ContractError(f"unknown violation kind {self.kind!r}")


@dataclass
class CheckResult:
    accepted: bool
    violations: list
    residual: Optional[np.ndarray] = None


# ---------------------------------------------------------------------------
# Residual and verification


def _constraint_set(problem: Problem, x: Vec) -> ConvexBody:
    if isinstance(problem, (VIProblem, MVIProblem)):
        return problem.R
    return problem.R(x)


def _columns(problem: Problem, x: Vec, w) -> List[Vec]:
    if isinstance(problem, VIProblem):
        return [problem.F(x)]
    if isinstance(problem, QVIProblem):
        return [problem.F(x)]
    if isinstance(problem, MVIProblem):
        return [op(x) for op in problem.F]
    if w is None:
        raise ContractError("GQVI residual needs an explicit w in F(x)")
    w = np.asarray(w, dtype=float)
    return [w] if w.ndim == 1 else [w[:, j] for j in range(w.shape[1])]


def residual(problem: Problem, x, w=None, eps: Optional[float] = None,
             delta: Optional[float] = None) -> np.ndarray:
    """rho_j = min_{y in R} (y - x)^T w_j; a solution has rho >= -beta.

    For QVI/GQVI the set is R(x); emptiness certificates from the inner
    linear minimization propagate as EmptinessCertificate.
    """
    x = as_vector(x, dim=problem.dim)
    eps = eps if eps is not None else problem.beta / 8.0
    delta = delta if delta is not None else min(eps, 1e-4)
    R = _constraint_set(problem, x)
    out = []
    for w_j in _columns(problem, x, w):
        norm = float(np.linalg.norm(w_j))
        if norm <= 1e-14:
            out.append(0.0)
            continue
        try:
            rep = _el.optimize(_el.linear_objective(w_j, anchor=x), [R],
                               "min", eps=eps, delta=delta, lipschitz=norm)
        except EmptinessCertificate as cert:
            cert.at_point = x
            raise
        if rep.status == "empty":
            raise EmptinessCertificate(rep.empty_index, rep, at_point=x)
        out.append(float(rep.value[0]))
    return np.array(out)


def check_solution(problem: Problem, cand: SolutionCertificate,
                   eps: Optional[float] = None) -> CheckResult:
    """Verify membership, closeness, and the residual bound of a candidate."""
    beta = problem.beta
    eps = eps if eps is not None else beta / 8.0
    violations = []
    x = as_vector(cand.x, dim=problem.dim)
    x_star = as_vector(cand.x_star, dim=problem.dim)

    if isinstance(problem, (VIProblem, MVIProblem)):
        if not separate(problem.R, x_star).inside:
            violations.append("membership: x* not in R")
        anchor, w = x_star, None
    elif isinstance(problem, QVIProblem):
        if float(np.linalg.norm(x - x_star)) > beta + 1e-12:
            violations.append("closeness: ||x - x*|| > beta")
        if not separate(problem.R(x), x_star).inside:
            violations.append("membership: x* not in R(x)")
        anchor, w = x, None
    else:  # GQVI
        if cand.w is None or cand.w_star is None:
            violations.append("missing w / w* for a GQVI candidate")
            return CheckResult(False, violations)
        w_vec = np.asarray(cand.w, dtype=float).reshape(-1)
        w_star = np.asarray(cand.w_star, dtype=float)
        close = (float(np.linalg.norm(x - x_star)) ** 2
                 + float(np.linalg.norm(w_vec - w_star.reshape(-1))) ** 2)
        if close > beta + 1e-12:
            violations.append("closeness: ||(x,w)-(x*,w*)||^2 > beta")
        if not separate(problem.R(x), x_star).inside:
            violations.append("membership: x* not in R(x)")
        if not separate(problem.F(x), w_star.reshape(-1)).inside:
            violations.append("membership: w* not in F(x)")
        anchor, w = x, w_star

    try:
        rho = residual(problem, anchor, w=w, eps=eps)
    except EmptinessCertificate:
        violations.append("emptiness: constraint set thinner than delta")
        return CheckResult(False, violations)
    bad = rho < -(beta + eps)
    if np.any(bad):
        violations.append(
            "residual: entries " + str(np.nonzero(bad)[0].tolist())
            + " below -beta")
    return CheckResult(not violations, violations, rho)


# ---------------------------------------------------------------------------
# Extragradient solver for monotone VIs


@dataclass
class ExtragradientFailure:
    best: Vec
    best_residual: Optional[np.ndarray]
    iterations: int


def solve_vi_extragradient(problem: VIProblem, eps: Optional[float] = None,
                           step: Optional[float] = None,
                           max_iters: int = 400,
                           proj_eps: Optional[float] = None,
                           check_every: int = 10,
                           x0=None):
    """Extragradient iteration with ellipsoid-backed projections.

    Convergence is guaranteed only for monotone F (documented, not checked);
    returns a certificate once the residual clears -eps, else a Failure
    carrying the best iterate.
    """
    eps = eps if eps is not None else problem.beta
    L = max(problem.F.lipschitz, 1e-9)
    step = step if step is not None else 0.5 / L
    proj_eps = proj_eps if proj_eps is not None else max((eps / 50.0) ** 2,
                                                         1e-12)
    R = problem.R
    x = _el.project(R, R.bbox.center if x0 is None else as_vector(x0),
                    eps=proj_eps)
    best = x
    stall = max(np.linalg.norm(R.bbox.hi - R.bbox.lo), 1.0)
    for t in range(1, max_iters + 1):
        y = _el.project(R, x - step * problem.F(x), eps=proj_eps)
        x_new = _el.project(R, x - step * problem.F(y), eps=proj_eps)
        move = max(float(np.linalg.norm(x_new - x)),
                   float(np.linalg.norm(y - x)))
        x = x_new
        if move < stall:
            stall, best = move, y
        if move <= 0.25 * eps * step or t % check_every == 0 or t == max_iters:
            if move <= 2.0 * math.sqrt(proj_eps) + 0.25 * eps * step:
                rho = residual(problem, y, eps=eps / 4.0)
                if float(np.min(rho)) >= -eps:
                    return SolutionCertificate(x=y, x_star=y, residual=rho)
    rho = residual(problem, best, eps=eps / 4.0)
    if float(np.min(rho)) >= -eps:
        return SolutionCertificate(x=best, x_star=best, residual=rho)
    return ExtragradientFailure(best, rho, max_iters)


# ---------------------------------------------------------------------------
# The near-argmax correspondence and Kakutani search


def _phi_parts(x: Vec, w: Vec, gamma: float):
    def value(y: Vec) -> float:
        return -float((y - x) @ w) - gamma * float(y @ y)

    def grad(y: Vec) -> Vec:
        return -w - 2.0 * gamma * y

    return value, grad


def build_psi(problem: GQVIProblem, gamma: float, eps: float,
              delta: Optional[float] = None) -> Correspondence:
    """Correspondence (x, w) => {(y, w') : y in R(x) near-maximizing
    Phi(., x, w) = -(y-x)^T w - gamma ||y||^2, w' in F(x)}.

    The inner maximum is computed once per query through the ellipsoid; its
    emptiness certificates propagate as GQVI non-emptiness violations.
    """
    if gamma <= 0 or eps <= 0:
        raise ContractError("gamma and eps must be positive")
    m = problem.dim
    delta = delta if delta is not None else min(eps / 4.0, 1e-5)

    x_domain = problem.R.domain
    if x_domain is None:
        raise ContractError("R needs a declared domain box")
    w_box = _f_range_box(problem, x_domain)

    def at(zw: Vec) -> ConvexBody:
        x, w = zw[:m], zw[m:]
        R_x = problem.R(x)
        F_x = problem.F(x)
        phi_val, phi_grad = _phi_parts(x, w, gamma)
        G_phi = float(np.linalg.norm(w)) + 2.0 * gamma * (
            np.linalg.norm(R_x.bbox.hi) + np.linalg.norm(R_x.bbox.lo)) + 1e-9
        obj = _el.FunObjective(phi_val, phi_grad, k=1)
        rep = _el.optimize(obj, [R_x], "max", eps=eps, delta=delta,
                           lipschitz=G_phi)
        if rep.status == "empty":
            raise EmptinessCertificate(0, rep, at_point=x)
        # Threshold Phi(y*) - eps: contains the exact near-argmax region
        # {Phi >= max - eps} and sits inside the 2*eps one, matching the
        # construction's accuracy budget.
        threshold = float(rep.value[0]) - eps

        def oracle(yz: Vec):
            y, wp = yz[:m], yz[m:]
            ans = separate(R_x, y)
            if not ans.inside:
                a = np.concatenate([ans.a, np.zeros(F_x.dim)])
                return type(ans)(0.0, inf_normalize(a), ans.note)
            ans = separate(F_x, wp)
            if not ans.inside:
                a = np.concatenate([np.zeros(m), ans.a])
                return type(ans)(0.0, inf_normalize(a), ans.note)
            if phi_val(y) + 1e-12 < threshold:
                g = phi_grad(y)
                if float(np.max(np.abs(g))) <= 1e-13:
                    return type(ans)(1.0, None, None)
                a = np.concatenate([-g, np.zeros(F_x.dim)])
                return type(ans)(0.0, inf_normalize(a), "below Phi*")
            return type(ans)(1.0, None, None)

        bbox = R_x.bbox.concat(F_x.bbox)
        return ConvexBody(m + F_x.dim, oracle, bbox,
                          inner_radius=min(eps / G_phi, F_x.inner_radius
                                           or eps / G_phi),
                          kind="psi", data={})

    kappa = problem.R.lipschitz + problem.F.lipschitz + 1.0
    return Correspondence(2 * m, 2 * m, at, lipschitz=kappa,
                          domain=x_domain.concat(w_box))


def _f_range_box(problem: GQVIProblem, x_domain: Box) -> Box:
    """Bound the range of F over the domain via its Hausdorff-Lipschitz
    constant around the center body."""
    center_body = problem.F(x_domain.center)
    spread = problem.F.lipschitz * float(np.linalg.norm(x_domain.halfwidth))
    return center_body.bbox.inflate(spread + 1e-9)


@dataclass
class KakutaniResult:
    x: Vec
    z: Vec
    iterations: int
    converged: bool
    trace: list = field(default_factory=list)


def kakutani_iterate(corr: Correspondence, alpha: float, max_iters: int = 200,
                     damping: float = 0.5, x0=None,
                     proj_eps: Optional[float] = None,
                     grid_cap: int = 250000,
                     full_step_coords=None) -> KakutaniResult:
    """Damped fixed-point search x <- (1-h) x + h proj_{corr(x)}(x).

    Success means ||x - z|| <= alpha with z in corr(x).  The relaxation
    halves whenever the best gap stops improving over a short window, which
    collapses the limit cycles that defeat a fixed step; coordinates listed
    in full_step_coords always take the full step (passive blocks that only
    track their projection, where damping would just add lag).  On iteration
    failure a grid sweep (resolution alpha/2) runs for dim <= 3; both phases
    exhausting produces a non-converged result with the trace attached.
    """
    if not (0 < damping <= 1):
        raise ContractError("damping must lie in (0, 1]")
    if corr.domain is None:
        raise ContractError("correspondence needs a domain box for iteration")
    proj_eps = proj_eps if proj_eps is not None else max((alpha / 8.0) ** 2,
                                                         1e-14)
    x = corr.domain.center if x0 is None else as_vector(x0, corr.dim_in)
    trace = []
    best = None
    eta = damping
    window = 0
    best_gap = np.inf
    for t in range(1, max_iters + 1):
        z = _el.project(corr(x), x, eps=proj_eps)
        gap = float(np.linalg.norm(x - z))
        trace.append(gap)
        if best is None or gap < best[2]:
            best = (x.copy(), z.copy(), gap)
        if gap <= alpha:
            return KakutaniResult(x.copy(), z.copy(), t, True, trace)
        window += 1
        if gap < 0.98 * best_gap:
            best_gap = gap
            window = 0
        elif window >= 6:
            eta = max(eta / 2.0, 1e-3)
            window = 0
            best_gap = gap
        x = (1.0 - eta) * x + eta * z
        if full_step_coords is not None:
            x[full_step_coords] = z[full_step_coords]
    if corr.dim_in <= 3:
        axes = [np.arange(lo, hi + 1e-12, alpha / 2.0) if hi > lo
                else np.array([lo])
                for lo, hi in zip(corr.domain.lo, corr.domain.hi)]
        total = int(np.prod([len(a) for a in axes]))
        if total <= grid_cap:
            mesh = np.stack([g.ravel() for g in
                             np.meshgrid(*axes, indexing="ij")], axis=1)
            for g in mesh:
                z = _el.project(corr(g), g, eps=proj_eps)
                gap = float(np.linalg.norm(g - z))
                if gap <= alpha:
                    return KakutaniResult(g.copy(), z, max_iters, True, trace)
    return KakutaniResult(best[0], best[1], max_iters, False, trace)


def qvi_to_gqvi(problem: QVIProblem, w_radius: Optional[float] = None,
                domain: Optional[Box] = None) -> GQVIProblem:
    """Embed a QVI: F(x) becomes the small ball around the operator value.

    A zero-volume singleton would defeat the projection machinery; the ball
    radius (default beta/8) is absorbed into the solution slack.
    """
    r_w = w_radius if w_radius is not None else problem.beta / 8.0
    Fc = Correspondence(problem.dim, problem.dim,
                        lambda x: ball_body(problem.F(x), r_w),
                        lipschitz=problem.F.lipschitz,
                        domain=domain or problem.R.domain)
    R = problem.R
    if R.domain is None and domain is not None:
        R = Correspondence(R.dim_in, R.dim_out, R.at, R.lipschitz, domain)
    return GQVIProblem(F=Fc, R=R, beta=problem.beta, gamma=0.0)


def solve_gqvi(problem: GQVIProblem, beta: Optional[float] = None,
               gamma: Optional[float] = None, h: float = 0.25,
               alpha: Optional[float] = None, eps_pi: Optional[float] = None,
               max_iters: int = 150, damping: float = 0.5,
               x0=None) -> Union[SolutionCertificate, ViolationCertificate]:
    """Compose build_psi -> kakutani_iterate -> certificate extraction.

    Accuracy knobs: gamma defaults to beta/(8 m diam^2) so the regularizer
    perturbs residuals by at most ~beta/8; the Kakutani tolerance is
    alpha = beta*h; the inner near-argmax tolerance eps_pi = beta/8.
    """
    beta = beta if beta is not None else problem.beta
    m = problem.dim
    if problem.R.domain is None:
        raise ContractError("R needs a declared domain box")
    diam = max(2.0 * float(np.linalg.norm(problem.R.domain.halfwidth)), 1e-9)
    gamma = gamma if gamma is not None else beta / (8.0 * m * diam * diam)
    alpha = alpha if alpha is not None else beta * h
    eps_pi = eps_pi if eps_pi is not None else beta / 8.0

    try:
        psi = build_psi(problem, gamma, eps_pi)
        res = kakutani_iterate(psi, alpha, max_iters=max_iters,
                               damping=damping, x0=x0)
    except EmptinessCertificate as cert:
        return ViolationCertificate(
            "emptiness",
            {"x": None if cert.at_point is None else
             np.asarray(cert.at_point), "set_index": cert.set_index},
            declared=None)
    if not res.converged:
        raise SolveFailure("Kakutani iteration and grid fallback exhausted",
                           best=res, trace=res.trace)
    x, w = res.x[:m], res.x[m:]
    x_star, w_star = res.z[:m], res.z[m:]
    try:
        rho = residual(problem, x, w=w_star, eps=beta / 8.0)
    except EmptinessCertificate as cert:
        return ViolationCertificate(
            "emptiness",
            {"x": None if cert.at_point is None else
             np.asarray(cert.at_point), "set_index": cert.set_index},
            declared=None)
    close = (float(np.linalg.norm(x - x_star)) ** 2
             + float(np.linalg.norm(w - w_star)) ** 2)
    return SolutionCertificate(x=x, x_star=x_star, w=w, w_star=w_star,
                               residual=rho, closeness=close)


# ---------------------------------------------------------------------------
# Opportunistic probes for declared-constant violations


def probe_hausdorff(corr: Correspondence, p, q,
                    eps: float = 1e-6) -> Optional[ViolationCertificate]:
    """Check d_H-Lipschitzness along the pair (p, q) through projections:
    w = proj_{R(q)}(q), z = proj_{R(p)}(w); violated when
    ||z - w|| > L ||p - q|| + 3 eps."""
    p = as_vector(p, corr.dim_in)
    q = as_vector(q, corr.dim_in)
    w = _el.project(corr(q), q, eps=eps)
    z = _el.project(corr(p), w, eps=eps)
    if (np.linalg.norm(z - w)
            > corr.lipschitz * np.linalg.norm(p - q) + 3.0 * eps):
        return ViolationCertificate(
            "hausdorff_lipschitz",
            {"p": p, "q": q, "z": z, "w": w, "eps": eps},
            declared=corr.lipschitz)
    return None


def probe_strong_convexity(corr: Correspondence, x, p, q, lam: float,
                           gamma: float, eps: float = 1e-6,
                           ) -> Optional[ViolationCertificate]:
    """Probe the gamma-strong-convexity output bullet at one triple,
    reading the approximate projection as the squared distance to F(x)."""
    x = as_vector(x, corr.dim_in)
    body = corr(x)

    def d2(z) -> float:
        z = as_vector(z, body.dim)
        return float(np.linalg.norm(z - _el.project(body, z, eps=eps)) ** 2)

    mid = lam * as_vector(p) + (1.0 - lam) * as_vector(q)
    lhs = d2(mid)
    rhs = (lam * d2(p) + (1.0 - lam) * d2(q)
           - 0.5 * lam * (1.0 - lam) * gamma
           * float(np.linalg.norm(as_vector(p) - as_vector(q)) ** 2) + eps)
    if lhs > rhs:
        return ViolationCertificate(
            "strong_convexity",
            {"x": x, "p": as_vector(p), "q": as_vector(q), "lam": lam,
             "eps": eps, "lhs": lhs, "rhs": rhs},
            declared=gamma)
    return None
