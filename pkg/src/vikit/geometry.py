"""Convex bodies and correspondences represented by separation oracles.

A body answers membership queries with a threshold b in {0, 1} (cutoff 1/2)
and, on rejection, a separating normal a with ||a||_inf = 1 satisfying
<a, y - z> <= 0 for every y in the body (strong contract, margin 0).  Bodies
built here are immutable and their oracles are pure, so concurrent queries
are safe.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ContractError, DimensionMismatch

# Global absolute tolerance for membership comparisons.
TAU = 1e-9

Vec = np.ndarray


def as_vector(x, dim: Optional[int] = None) -> Vec:
    v = np.asarray(x, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise ContractError(f"expected a vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ContractError("vector has non-finite entries")
    if dim is not None and v.shape[0] != dim:
        raise DimensionMismatch(f"expected dimension {dim}, got {v.shape[0]}")
    return v


def inf_normalize(a: Vec) -> Vec:
    s = float(np.max(np.abs(a)))
    if s <= 0.0 or not np.isfinite(s):
        raise ContractError("cannot normalize a zero/non-finite normal")
    return a / s


@dataclass(frozen=True)
class Box:
    lo: Vec
    hi: Vec

    def __post_init__(self):
        lo = as_vector(self.lo)
        hi = as_vector(self.hi, dim=lo.shape[0])
        if np.any(lo > hi + TAU):
            raise ContractError("box needs lo <= hi componentwise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    @property
    def center(self) -> Vec:
        return 0.5 * (self.lo + self.hi)

    @property
    def halfwidth(self) -> Vec:
        return 0.5 * (self.hi - self.lo)

    @property
    def outer_radius(self) -> float:
        """L-inf radius around the center (max halfwidth)."""
        return float(np.max(self.halfwidth)) if self.dim else 0.0

    def contains(self, z: Vec, tol: float = TAU) -> bool:
        return bool(np.all(z >= self.lo - tol) and np.all(z <= self.hi + tol))

    def clamp(self, z: Vec) -> Vec:
        return np.clip(z, self.lo, self.hi)

    def inflate(self, eps: float) -> "Box":
        return Box(self.lo - eps, self.hi + eps)

    def concat(self, other: "Box") -> "Box":
        return Box(np.concatenate([self.lo, other.lo]),
                   np.concatenate([self.hi, other.hi]))


@dataclass(frozen=True)
class OracleAnswer:
    b: float
    a: Optional[Vec] = None
    note: Optional[str] = None

    def __post_init__(self):
        if not (0.0 <= self.b <= 1.0):
            raise ContractError("threshold b must lie in [0, 1]")
        if self.inside and self.a is not None:
            raise ContractError("normal must be absent when b > 1/2")
        if not self.inside and self.a is None:
            raise ContractError("normal required when b <= 1/2")
        if self.a is not None:
            a = as_vector(self.a)
            if abs(float(np.max(np.abs(a))) - 1.0) > 1e-7:
                raise ContractError("separating normal must have ||a||_inf = 1")
            object.__setattr__(self, "a", a)

    @property
    def inside(self) -> bool:
        return self.b > 0.5


ACCEPT = OracleAnswer(1.0)


def _reject(a: Vec, note: Optional[str] = None) -> OracleAnswer:
    return OracleAnswer(0.0, inf_normalize(a), note)


@dataclass(eq=False)
class ConvexBody:
    """(r, R)-well-bounded convex set behind a separation oracle.

    margin = 0 means the strong oracle contract; margin = d > 0 the weak one
    (membership answered up to distance d around the boundary, hyperplanes
    valid for the inner d-parallel body).
    """

    dim: int
    oracle: Callable[[Vec], OracleAnswer]
    bbox: Box
    inner_radius: float = 0.0
    margin: float = 0.0
    kind: str = "oracle"
    data: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dim <= 0:
            raise ContractError("body dimension must be positive")
        if self.bbox.dim != self.dim:
            raise DimensionMismatch("bbox dimension mismatch")
        if self.inner_radius < 0 or self.margin < 0:
            raise ContractError("radii must be nonnegative")


def separate(body: ConvexBody, z, tol: float = TAU) -> OracleAnswer:
    """Query the body's separation oracle at z.

    Points far outside the declared bbox are rejected with a box-face normal
    (sound, since the body is contained in its bbox) and a diagnostic note.
    """
    z = as_vector(z, dim=body.dim)
    slack = 1e-7 * (1.0 + body.bbox.outer_radius) + body.margin
    over = np.maximum(body.bbox.lo - z, z - body.bbox.hi)
    i = int(np.argmax(over))
    if over[i] > slack:
        a = np.zeros(body.dim)
        a[i] = 1.0 if z[i] > body.bbox.hi[i] else -1.0
        return _reject(a, note="outside bbox")
    return body.oracle(z)


# ---------------------------------------------------------------------------
# Constructors


def box_body(lo, hi) -> ConvexBody:
    bx = Box(lo, hi)

    def oracle(z: Vec) -> OracleAnswer:
        viol = np.maximum(bx.lo - z, z - bx.hi)
        i = int(np.argmax(viol))
        if viol[i] <= TAU:
            return ACCEPT
        a = np.zeros(bx.dim)
        a[i] = 1.0 if z[i] > bx.hi[i] else -1.0
        return _reject(a)

    return ConvexBody(bx.dim, oracle, bx,
                      inner_radius=float(np.min(bx.halfwidth)),
                      kind="box", data={"lo": bx.lo, "hi": bx.hi})


def ball_body(center, radius: float) -> ConvexBody:
    c = as_vector(center)
    if radius <= 0:
        raise ContractError("ball radius must be positive")

    def oracle(z: Vec) -> OracleAnswer:
        d = z - c
        if float(np.linalg.norm(d)) <= radius + TAU:
            return ACCEPT
        return _reject(d)

    bx = Box(c - radius, c + radius)
    return ConvexBody(c.shape[0], oracle, bx, inner_radius=radius,
                      kind="ball", data={"center": c, "radius": float(radius)})


def point_body(center) -> ConvexBody:
    """Degenerate body whose only element is `center`."""
    c = as_vector(center)

    def oracle(z: Vec) -> OracleAnswer:
        d = z - c
        if float(np.linalg.norm(d)) <= TAU:
            return ACCEPT
        return _reject(d)

    return ConvexBody(c.shape[0], oracle, Box(c, c), inner_radius=0.0,
                      kind="ball", data={"center": c, "radius": 0.0})


def empty_body(dim: int, bbox: Optional[Box] = None) -> ConvexBody:
    """The empty set; every hyperplane is vacuously separating."""
    bbox = bbox or Box(np.zeros(dim), np.zeros(dim))
    a0 = np.zeros(dim)
    a0[0] = 1.0

    def oracle(z: Vec) -> OracleAnswer:
        return OracleAnswer(0.0, a0, note="empty body")

    return ConvexBody(dim, oracle, bbox, inner_radius=0.0,
                      kind="empty", data={})


def polyhedron_body(A, b, bbox: Box, inner_radius: float = 0.0) -> ConvexBody:
    """{x : A x <= b}, separating with the most-violated row.

    Ties between equally violated rows break to the lowest row index; the
    returned normal is the row rescaled to ||.||_inf = 1.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).reshape(-1)
    if A.ndim != 2 or A.shape[0] != b.shape[0]:
        raise ContractError("inconsistent A/b shapes")
    if A.shape[1] != bbox.dim:
        raise DimensionMismatch("polyhedron dimension mismatch with bbox")
    if A.shape[0] == 0:
        return box_body(bbox.lo, bbox.hi)

    def oracle(z: Vec) -> OracleAnswer:
        viol = A @ z - b
        i = int(np.argmax(viol))
        if viol[i] <= TAU:
            return ACCEPT
        return _reject(A[i])

    return ConvexBody(A.shape[1], oracle, bbox, inner_radius=inner_radius,
                      kind="polyhedron", data={"A": A, "b": b})


def product_body(bodies: Sequence[ConvexBody]) -> ConvexBody:
    """Cartesian product over consecutive coordinate blocks.

    Membership is the conjunction of factor memberships; the separating
    hyperplane is lifted from the first violated factor with zeros elsewhere.
    """
    bodies = list(bodies)
    if not bodies:
        raise ContractError("product of an empty list")
    dims = [bd.dim for bd in bodies]
    offsets = np.concatenate([[0], np.cumsum(dims)])
    dim = int(offsets[-1])
    bbox = bodies[0].bbox
    for bd in bodies[1:]:
        bbox = bbox.concat(bd.bbox)

    def oracle(z: Vec) -> OracleAnswer:
        for k, bd in enumerate(bodies):
            piece = z[offsets[k]:offsets[k + 1]]
            ans = separate(bd, piece)
            if not ans.inside:
                a = np.zeros(dim)
                a[offsets[k]:offsets[k + 1]] = ans.a
                return _reject(a, note=ans.note)
        return ACCEPT

    inner = min(bd.inner_radius for bd in bodies)
    margin = max(bd.margin for bd in bodies)
    return ConvexBody(dim, oracle, bbox, inner_radius=inner, margin=margin,
                      kind="product", data={"factors": bodies,
                                            "offsets": offsets})


def intersect_bodies(bodies: Sequence[ConvexBody],
                     inner_radius: float = 0.0) -> ConvexBody:
    bodies = list(bodies)
    if not bodies:
        raise ContractError("intersection of an empty list")
    dim = bodies[0].dim
    lo = bodies[0].bbox.lo.copy()
    hi = bodies[0].bbox.hi.copy()
    for bd in bodies[1:]:
        if bd.dim != dim:
            raise DimensionMismatch("intersection factors disagree on dim")
        lo = np.maximum(lo, bd.bbox.lo)
        hi = np.minimum(hi, bd.bbox.hi)
    bbox = Box(np.minimum(lo, hi), np.maximum(lo, hi))

    def oracle(z: Vec) -> OracleAnswer:
        for bd in bodies:
            ans = separate(bd, z)
            if not ans.inside:
                return ans
        return ACCEPT

    margin = max(bd.margin for bd in bodies)
    return ConvexBody(dim, oracle, bbox, inner_radius=inner_radius,
                      margin=margin, kind="intersection",
                      data={"factors": bodies})


def lift_body(body: ConvexBody, coords: Sequence[int], total_dim: int,
              bbox: Box) -> ConvexBody:
    """Cylinder over `body`: constrains only the listed coordinates."""
    coords = np.asarray(coords, dtype=int)
    if coords.shape[0] != body.dim:
        raise DimensionMismatch("coordinate list must match body dim")

    def oracle(z: Vec) -> OracleAnswer:
        ans = separate(body, z[coords])
        if ans.inside:
            return ACCEPT
        a = np.zeros(total_dim)
        a[coords] = ans.a
        return _reject(a, note=ans.note)

    return ConvexBody(total_dim, oracle, bbox, inner_radius=0.0,
                      margin=body.margin, kind="lift",
                      data={"base": body, "coords": coords})


def hull_body(points, bbox: Optional[Box] = None, tol: float = 1e-7) -> ConvexBody:
    """Convex hull of finitely many points (V-representation).

    Membership via the min-norm-point projection; rejection returns the
    normal z - proj(z).
    """
    P = np.asarray(points, dtype=float)
    if P.ndim != 2 or P.shape[0] == 0:
        raise ContractError("hull needs a nonempty (K, m) point array")
    if bbox is None:
        bbox = Box(P.min(axis=0), P.max(axis=0))

    def oracle(z: Vec) -> OracleAnswer:
        p = project_hull(z, P)
        d = z - p
        if float(np.linalg.norm(d)) <= tol:
            return ACCEPT
        return _reject(d)

    return ConvexBody(P.shape[1], oracle, bbox, inner_radius=0.0,
                      kind="hull", data={"points": P})


# ---------------------------------------------------------------------------
# Exact projections and distances for closed-form kinds


def project_box(z: Vec, lo: Vec, hi: Vec) -> Vec:
    return np.clip(z, lo, hi)


def project_ball(z: Vec, center: Vec, radius: float) -> Vec:
    d = z - center
    n = float(np.linalg.norm(d))
    if n <= radius:
        return z.copy()
    return center + d * (radius / n)


def project_polyhedron(z: Vec, A: np.ndarray, b: np.ndarray,
                       max_sweeps: int = 4000, tol: float = 1e-12) -> Vec:
    """Euclidean projection onto {x : A x <= b} by Dykstra's method.

    Converges to the exact projection for polyhedra; per-sweep cost is
    O(rows * dim), fine at desk scale.
    """
    if A.shape[0] == 0:
        return z.copy()
    rows = A.shape[0]
    norms2 = np.einsum("ij,ij->i", A, A)
    x = z.astype(float).copy()
    corrections = np.zeros((rows, z.shape[0]))
    for _ in range(max_sweeps):
        shift = 0.0
        for i in range(rows):
            if norms2[i] <= 0:
                continue
            y = x + corrections[i]
            excess = float(A[i] @ y - b[i])
            if excess > 0.0:
                x_new = y - (excess / norms2[i]) * A[i]
            else:
                x_new = y
            corrections[i] = y - x_new
            shift = max(shift, float(np.max(np.abs(x_new - x))))
            x = x_new
        if shift <= tol and float(np.max(A @ x - b)) <= 1e-10:
            break
    return x


def project_hull(z: Vec, P: np.ndarray, iters: int = 2000) -> Vec:
    """Min-norm point of conv(P) - z via projected gradient with a polish step."""
    K = P.shape[0]
    if K == 1:
        return P[0].copy()
    G = P @ P.T
    gz = P @ z
    lip = float(np.linalg.norm(G, 2)) + 1e-12
    alpha = np.full(K, 1.0 / K)
    step = 1.0 / lip
    for _ in range(iters):
        grad = G @ alpha - gz
        alpha_new = _simplex_project(alpha - step * grad)
        if float(np.max(np.abs(alpha_new - alpha))) <= 1e-14:
            alpha = alpha_new
            break
        alpha = alpha_new
    # Polish on the detected support: equality-constrained least squares.
    support = np.where(alpha > 1e-10)[0]
    if 0 < support.shape[0] < K + 1:
        PS = P[support]
        k = support.shape[0]
        M = np.zeros((k + 1, k + 1))
        M[:k, :k] = PS @ PS.T
        M[:k, k] = 1.0
        M[k, :k] = 1.0
        rhs = np.concatenate([PS @ z, [1.0]])
        try:
            sol = np.linalg.solve(M, rhs)
            cand = sol[:k]
            if np.all(cand >= -1e-9):
                full = np.zeros(K)
                full[support] = np.clip(cand, 0.0, None)
                full /= full.sum()
                if float((full - alpha) @ (G @ (full + alpha) - 2 * gz)) <= 1e-15:
                    alpha = full
        except np.linalg.LinAlgError:
            pass
    return P.T @ alpha


def _simplex_project(v: Vec) -> Vec:
    """Euclidean projection onto the probability simplex (sort-based)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, v.shape[0] + 1)
    cond = u - css / ks > 0
    rho = int(np.max(np.nonzero(cond)[0])) + 1
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def exact_projection(body: ConvexBody, z: Vec) -> Optional[Vec]:
    """Closed-form projection when the body's kind supports one, else None."""
    k, d = body.kind, body.data
    if k == "box":
        return project_box(z, d["lo"], d["hi"])
    if k == "ball":
        if d["radius"] <= 0.0:
            return d["center"].copy()
        return project_ball(z, d["center"], d["radius"])
    if k == "polyhedron":
        return project_polyhedron(z, d["A"], d["b"])
    if k == "hull":
        return project_hull(z, d["points"])
    if k == "product":
        parts = []
        offs = d["offsets"]
        for i, f in enumerate(d["factors"]):
            p = exact_projection(f, z[offs[i]:offs[i + 1]])
            if p is None:
                return None
            parts.append(p)
        return np.concatenate(parts)
    if k == "parallel" and d.get("eps", 0.0) >= 0.0:
        base_proj = exact_projection(d["base"], z)
        if base_proj is None:
            return None
        gap = z - base_proj
        n = float(np.linalg.norm(gap))
        if n <= d["eps"]:
            return z.copy()
        return base_proj + gap * (d["eps"] / n)
    return None


def distance_to_body(body: ConvexBody, z: Vec) -> Optional[float]:
    p = exact_projection(body, z)
    if p is None:
        return None
    return float(np.linalg.norm(z - p))


# ---------------------------------------------------------------------------
# Parallel bodies


def parallel_body(body: ConvexBody, eps: float) -> ConvexBody:
    """Closed eps-parallel body: inflation for eps > 0, inner shrink for eps < 0.

    Exact for box/ball/polyhedron/product kinds; oracle-only bodies fall back
    to projection-based distances (inflation) or axis probing (shrink, weak
    contract with margin |eps|).  An empty result is not an error here; it is
    detected downstream by emptiness certificates.
    """
    if eps == 0.0:
        return body
    k, d = body.kind, body.data
    if k == "box":
        if eps < 0.0:
            lo, hi = d["lo"] - eps, d["hi"] + eps  # eps < 0 shrinks
            if np.any(lo > hi + TAU):
                return empty_body(body.dim, body.bbox)
            return box_body(lo, hi)
        return _inflated_wrap(body, eps)
    if k == "ball":
        r = d["radius"] + eps
        if r < -TAU:
            return empty_body(body.dim, body.bbox)
        if r <= TAU:
            return point_body(d["center"])
        return ball_body(d["center"], r)
    if k == "empty":
        return body  # inflating the empty set is still empty
    if k == "polyhedron":
        if eps < 0.0:
            row_norms = np.linalg.norm(d["A"], axis=1)
            b_new = d["b"] + eps * row_norms  # eps < 0 tightens
            bbox = Box(body.bbox.lo - eps, body.bbox.hi + eps) \
                if np.all(body.bbox.lo - eps <= body.bbox.hi + eps) \
                else body.bbox
            return polyhedron_body(d["A"], b_new, bbox,
                                   inner_radius=max(0.0, body.inner_radius + eps))
        return _inflated_wrap(body, eps)
    if k == "product":
        if eps < 0.0:
            # Deep membership decomposes exactly over product blocks.
            return product_body([parallel_body(f, eps) for f in d["factors"]])
        return _inflated_wrap(body, eps)
    if k == "parallel":
        base, e0 = d["base"], d["eps"]
        if (e0 >= 0.0 and eps >= 0.0) or (e0 <= 0.0 and eps <= 0.0):
            return parallel_body(base, e0 + eps)
        return _inflated_wrap(body, eps) if eps > 0 else _probe_shrink(body, -eps)
    if eps > 0.0:
        return _inflated_wrap(body, eps)
    return _probe_shrink(body, -eps)


def _inflated_wrap(body: ConvexBody, eps: float) -> ConvexBody:
    """B(X, +eps) via distance-to-X; distance from a closed form if available,
    else through the ellipsoid projection (lazy import to break the cycle)."""

    def proj(z: Vec) -> Vec:
        p = exact_projection(body, z)
        if p is not None:
            return p
        from . import ellipsoid
        return ellipsoid.project(body, z, eps=max(1e-12, (0.05 * eps) ** 2))

    def oracle(z: Vec) -> OracleAnswer:
        p = proj(z)
        gap = z - p
        if float(np.linalg.norm(gap)) <= eps + TAU:
            return ACCEPT
        return _reject(gap)

    return ConvexBody(body.dim, oracle, body.bbox.inflate(eps),
                      inner_radius=body.inner_radius + eps,
                      margin=body.margin, kind="parallel",
                      data={"base": body, "eps": float(eps)})


def _probe_shrink(body: ConvexBody, depth: float) -> ConvexBody:
    """B(X, -depth) for oracle-only bodies by 2m axis probes.

    The probe hyperplane, translated back to the query point, is valid for
    every y in B(X, -depth); the membership test is only necessary, so the
    returned body carries margin = depth (weak contract).
    """

    def oracle(z: Vec) -> OracleAnswer:
        ans = separate(body, z)
        if not ans.inside:
            return ans
        for i in range(body.dim):
            for sgn in (1.0, -1.0):
                probe = z.copy()
                probe[i] += sgn * depth
                sub = separate(body, probe)
                if not sub.inside:
                    return OracleAnswer(0.0, sub.a, note="axis probe exit")
        return ACCEPT

    lo = body.bbox.lo + depth
    hi = body.bbox.hi - depth
    if np.any(lo > hi):
        mid = body.bbox.center
        lo, hi = mid, mid
    return ConvexBody(body.dim, oracle, Box(lo, hi),
                      inner_radius=max(0.0, body.inner_radius - depth),
                      margin=max(body.margin, depth), kind="parallel",
                      data={"base": body, "eps": -float(depth)})


def structurally_empty(body: ConvexBody, tol: float = TAU) -> bool:
    """Cheap sufficient test for emptiness from the body's closed form.

    Detects the empty kind, shrunk-away balls/boxes, and polyhedra with a
    contradictory single row or an opposite-row pair; recurses through
    product/intersection/lift combinators.  False means "not provably empty
    by structure", not "nonempty".
    """
    k, d = body.kind, body.data
    if k == "empty":
        return True
    if k == "polyhedron":
        A, b = d["A"], d["b"]
        norms = np.linalg.norm(A, axis=1)
        for i in range(A.shape[0]):
            if norms[i] <= tol:
                if b[i] < -tol:
                    return True
                continue
            for j in range(i + 1, A.shape[0]):
                if norms[j] <= tol:
                    continue
                cos = float(A[i] @ A[j]) / (norms[i] * norms[j])
                if cos <= -1.0 + 1e-9:
                    if b[i] / norms[i] + b[j] / norms[j] < -tol:
                        return True
        return False
    if k in ("product", "intersection"):
        return any(structurally_empty(f, tol) for f in d["factors"])
    if k == "lift":
        return structurally_empty(d["base"], tol)
    if k == "parallel":
        return structurally_empty(d["base"], tol) if d["eps"] >= 0 else False
    return False


def shrink_structurally_empty(body: ConvexBody, delta: float) -> bool:
    """Whether the inner delta-parallel body is empty by structure alone."""
    return structurally_empty(parallel_body(body, -abs(delta)))


# ---------------------------------------------------------------------------
# Vertices and sampling (used by verifiers and tests)


def polyhedron_vertices(A: np.ndarray, b: np.ndarray, bbox: Box,
                        tol: float = 1e-8) -> list:
    """Vertices of {Ax <= b} inside bbox, by enumerating square row subsets.

    Box faces are appended as rows, so bounded polyhedra given with loose row
    systems still enumerate.  Exponential in rows; desk scale only.
    """
    m = bbox.dim
    eye = np.eye(m)
    A_all = np.vstack([A, eye, -eye]) if A.size else np.vstack([eye, -eye])
    b_all = np.concatenate([b, bbox.hi, -bbox.lo]) if A.size else \
        np.concatenate([bbox.hi, -bbox.lo])
    verts = []
    for subset in itertools.combinations(range(A_all.shape[0]), m):
        M = A_all[list(subset)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        v = np.linalg.solve(M, b_all[list(subset)])
        if np.max(A_all @ v - b_all) <= tol:
            if not any(np.linalg.norm(v - u) <= 1e-7 for u in verts):
                verts.append(v)
    return verts


def sample_in_body(body: ConvexBody, rng: np.random.Generator, n: int,
                   max_tries: int = 200000) -> np.ndarray:
    """Rejection-sample n points from the body via its own oracle."""
    out = []
    lo, hi = body.bbox.lo, body.bbox.hi
    tries = 0
    while len(out) < n and tries < max_tries:
        z = rng.uniform(lo, hi)
        tries += 1
        if separate(body, z).inside:
            out.append(z)
    if len(out) < n:
        raise ContractError("rejection sampling starved; body too thin")
    return np.array(out)


# ---------------------------------------------------------------------------
# Correspondences


@dataclass(eq=False)
class Correspondence:
    """Set-valued map x -> ConvexBody with a declared Hausdorff-Lipschitz
    constant (checked only opportunistically by the vi-layer probes)."""

    dim_in: int
    dim_out: int
    at: Callable[[Vec], ConvexBody]
    lipschitz: float = 1.0
    domain: Optional[Box] = None

    def __post_init__(self):
        if self.dim_in <= 0 or self.dim_out <= 0:
            raise ContractError("correspondence dimensions must be positive")
        if self.lipschitz < 0:
            raise ContractError("Lipschitz constant must be nonnegative")

    def __call__(self, x) -> ConvexBody:
        body = self.at(as_vector(x, dim=self.dim_in))
        if body.dim != self.dim_out:
            raise DimensionMismatch("correspondence produced wrong-dim body")
        return body


def constant_correspondence(body: ConvexBody, dim_in: Optional[int] = None,
                            domain: Optional[Box] = None) -> Correspondence:
    return Correspondence(dim_in or body.dim, body.dim, lambda _x: body,
                          lipschitz=0.0, domain=domain or body.bbox)
