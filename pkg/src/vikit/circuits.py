"""Linear arithmetic circuits: DAGs over {+, -, min, max, x-constant}.

Circuits are piecewise linear, hence globally Lipschitz; min/max gates make
them non-differentiable at ties, where a reverse-mode sweep extracts one
element of the Clarke subdifferential (ties route through the left child,
deterministically).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import ContractError, DimensionMismatch
from .geometry import Box, as_vector

_OPS = {"input", "const", "add", "sub", "min", "max", "scale"}
_ARITY = {"input": 0, "const": 0, "add": 2, "sub": 2, "min": 2, "max": 2,
          "scale": 1}


@dataclass(frozen=True)
class Gate:
    op: str
    args: tuple = ()
    value: Optional[float] = None  # const value, scale factor, or input index


@dataclass(frozen=True)
class LinCircuit:
    gates: tuple
    n_inputs: int
    outputs: tuple

    def __post_init__(self):
        if self.n_inputs <= 0:
            raise ContractError("circuit arity must be positive")
        for idx, g in enumerate(self.gates):
            if g.op not in _OPS:
                raise ContractError(f"unknown gate op {g.op!r}")
            if len(g.args) != _ARITY[g.op]:
                raise ContractError(f"gate {idx} ({g.op}) has wrong fan-in")
            if any(not (0 <= a < idx) for a in g.args):
                raise ContractError(f"gate {idx} references a later node")
            if g.op == "input":
                if g.value is None or not (0 <= int(g.value) < self.n_inputs):
                    raise ContractError(f"gate {idx} has a bad input index")
            if g.op in ("const", "scale") and g.value is None:
                raise ContractError(f"gate {idx} ({g.op}) needs a value")
        if not self.outputs:
            raise ContractError("circuit needs at least one output")
        for o in self.outputs:
            if not (0 <= o < len(self.gates)):
                raise ContractError(f"output id {o} does not exist")

    @property
    def n_outputs(self) -> int:
        return len(self.outputs)


class CircuitBuilder:
    """Incremental construction; node ids are handed back by each method."""

    def __init__(self, n_inputs: int):
        self.n_inputs = n_inputs
        self._gates = []

    def _emit(self, op, args=(), value=None) -> int:
        self._gates.append(Gate(op, tuple(args), value))
        return len(self._gates) - 1

    def input(self, index: int) -> int:
        return self._emit("input", value=index)

    def const(self, value: float) -> int:
        return self._emit("const", value=float(value))

    def add(self, a: int, b: int) -> int:
        return self._emit("add", (a, b))

    def sub(self, a: int, b: int) -> int:
        return self._emit("sub", (a, b))

    def min(self, a: int, b: int) -> int:
        return self._emit("min", (a, b))

    def max(self, a: int, b: int) -> int:
        return self._emit("max", (a, b))

    def scale(self, a: int, zeta: float) -> int:
        return self._emit("scale", (a,), float(zeta))

    def build(self, outputs: Sequence[int]) -> LinCircuit:
        return LinCircuit(tuple(self._gates), self.n_inputs, tuple(outputs))


def affine_circuit(W, c) -> LinCircuit:
    """Circuit for x -> W x + c (W: d x m, c: d)."""
    W = np.asarray(W, dtype=float)
    c = np.asarray(c, dtype=float).reshape(-1)
    if W.ndim != 2 or W.shape[0] != c.shape[0]:
        raise ContractError("inconsistent affine shapes")
    b = CircuitBuilder(W.shape[1])
    ins = [b.input(i) for i in range(W.shape[1])]
    outs = []
    for r in range(W.shape[0]):
        acc = b.const(c[r])
        for j in range(W.shape[1]):
            if W[r, j] != 0.0:
                term = ins[j] if W[r, j] == 1.0 else b.scale(ins[j], W[r, j])
                acc = b.add(acc, term)
        outs.append(acc)
    return b.build(outs)


def _forward(c: LinCircuit, x: np.ndarray) -> np.ndarray:
    vals = np.empty(len(c.gates))
    for i, g in enumerate(c.gates):
        if g.op == "input":
            vals[i] = x[int(g.value)]
        elif g.op == "const":
            vals[i] = g.value
        elif g.op == "add":
            vals[i] = vals[g.args[0]] + vals[g.args[1]]
        elif g.op == "sub":
            vals[i] = vals[g.args[0]] - vals[g.args[1]]
        elif g.op == "min":
            vals[i] = min(vals[g.args[0]], vals[g.args[1]])
        elif g.op == "max":
            vals[i] = max(vals[g.args[0]], vals[g.args[1]])
        else:  # scale
            vals[i] = g.value * vals[g.args[0]]
    return vals


def evaluate(c: LinCircuit, x) -> np.ndarray:
    x = as_vector(x, dim=c.n_inputs)
    vals = _forward(c, x)
    return np.array([vals[o] for o in c.outputs])


def subgrad(c: LinCircuit, x) -> np.ndarray:
    """One Clarke subgradient per output, as a (d x m) matrix.

    min/max route the adjoint through the attaining child; exact ties go to
    the left child, so repeated calls are byte-identical.
    """
    x = as_vector(x, dim=c.n_inputs)
    vals = _forward(c, x)
    n = len(c.gates)
    rows = np.zeros((c.n_outputs, c.n_inputs))
    for r, out in enumerate(c.outputs):
        adj = np.zeros(n)
        adj[out] = 1.0
        for i in range(n - 1, -1, -1):
            a = adj[i]
            if a == 0.0:
                continue
            g = c.gates[i]
            if g.op == "input":
                rows[r, int(g.value)] += a
            elif g.op == "add":
                adj[g.args[0]] += a
                adj[g.args[1]] += a
            elif g.op == "sub":
                adj[g.args[0]] += a
                adj[g.args[1]] -= a
            elif g.op == "min":
                left, right = g.args
                adj[left if vals[left] <= vals[right] else right] += a
            elif g.op == "max":
                left, right = g.args
                adj[left if vals[left] >= vals[right] else right] += a
            elif g.op == "scale":
                adj[g.args[0]] += a * g.value
    return rows


def min_tie_gap(c: LinCircuit, x) -> float:
    """Smallest |child difference| over all min/max gates; inf if none.

    Tests use this to skip kink-adjacent points when comparing subgradients
    against finite differences.
    """
    x = as_vector(x, dim=c.n_inputs)
    vals = _forward(c, x)
    gap = np.inf
    for g in c.gates:
        if g.op in ("min", "max"):
            gap = min(gap, abs(vals[g.args[0]] - vals[g.args[1]]))
    return gap


def lipschitz_bound(c: LinCircuit) -> float:
    """Sound upper bound on the inf-norm Lipschitz constant.

    Per-node scalar recursion: inputs 1, constants 0, add/sub additive,
    scale multiplies by |zeta|, min/max take the max of their children.
    """
    bounds = np.empty(len(c.gates))
    for i, g in enumerate(c.gates):
        if g.op == "input":
            bounds[i] = 1.0
        elif g.op == "const":
            bounds[i] = 0.0
        elif g.op in ("add", "sub"):
            bounds[i] = bounds[g.args[0]] + bounds[g.args[1]]
        elif g.op in ("min", "max"):
            bounds[i] = max(bounds[g.args[0]], bounds[g.args[1]])
        else:  # scale
            bounds[i] = abs(g.value) * bounds[g.args[0]]
    return float(max(bounds[o] for o in c.outputs))


@dataclass(frozen=True)
class ConcavityWitness:
    index: int
    x: np.ndarray
    y: np.ndarray
    lam: float
    gap: float

    def revalidate(self, f, concave: bool = True, tol: float = 1e-9) -> bool:
        fx = _call(f, self.x)[self.index]
        fy = _call(f, self.y)[self.index]
        fmid = _call(f, self.lam * self.x + (1.0 - self.lam) * self.y)[self.index]
        combo = self.lam * fx + (1.0 - self.lam) * fy
        gap = combo - fmid if concave else fmid - combo
        return abs(gap - self.gap) <= tol and gap > 0


def _call(f: Union[LinCircuit, Callable], x: np.ndarray) -> np.ndarray:
    if isinstance(f, LinCircuit):
        return evaluate(f, x)
    return np.atleast_1d(np.asarray(f(x), dtype=float))


def probe_concavity(f: Union[LinCircuit, Callable], region: Box, trials: int,
                    coordinate_blocks: Optional[Sequence[Sequence[int]]] = None,
                    rng: Optional[np.random.Generator] = None,
                    tol: float = 1e-9,
                    concave: bool = True) -> Optional[ConcavityWitness]:
    """Randomized concavity probe over the region.

    Each trial draws a base point, resamples one coordinate-block group (x and
    y differ only there), draws lambda, and tests the concavity inequality at
    every output.  A returned witness re-validates exactly; absence of a
    witness is NOT a proof of concavity.
    """
    if trials <= 0:
        raise ContractError("trials must be positive")
    rng = rng or np.random.default_rng(0)
    m = region.dim
    if isinstance(f, LinCircuit) and f.n_inputs != m:
        raise DimensionMismatch("region dimension disagrees with circuit arity")
    if coordinate_blocks is None:
        coordinate_blocks = [list(range(m))]
    blocks = [np.asarray(blk, dtype=int) for blk in coordinate_blocks]
    for trial in range(trials):
        x = rng.uniform(region.lo, region.hi)
        blk = blocks[trial % len(blocks)]
        y = x.copy()
        y[blk] = rng.uniform(region.lo[blk], region.hi[blk])
        lam = float(rng.uniform(0.05, 0.95))
        fx = _call(f, x)
        fy = _call(f, y)
        fmid = _call(f, lam * x + (1.0 - lam) * y)
        combo = lam * fx + (1.0 - lam) * fy
        gaps = combo - fmid if concave else fmid - combo
        j = int(np.argmax(gaps))
        if gaps[j] > tol:
            return ConcavityWitness(j, x, y, lam, float(gaps[j]))
    return None
