"""Command-line entry point: problem ingestion, dispatch, and run reports.

Commands: solve | check | reduce | gadget.  Reports are canonical JSON
(sorted keys, %.12g floats); certificates embedded in reports re-validate on
reload.  Exit codes: 0 solved/accepted, 2 rejected, 3 violation certificate,
4 emptiness certificate, 64 usage, 65 schema.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time

import numpy as np

from . import games as _games
from . import mlf as _mlf
from . import serialize as _ser
from . import vi as _vi
from .errors import EmptinessCertificate, SchemaError, VikitError

EXIT_OK = 0
EXIT_REJECTED = 2
EXIT_VIOLATION = 3
EXIT_EMPTY = 4
EXIT_USAGE = 64
EXIT_SCHEMA = 65


def parse_problem(path: str, lenient: bool = False) -> _ser.ProblemFile:
    """Read and validate a problem file; .cnf routes to the DIMACS parser."""
    if path.endswith(".cnf"):
        with open(path, "r", encoding="utf-8") as fh:
            phi = _ser.parse_dimacs(fh.read())
        return _ser.ProblemFile("cnf", {"n": phi.n,
                                        "clauses": [list(c) for c in
                                                    phi.clauses]},
                                {"beta": 1e-3})
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise SchemaError(f"invalid JSON: {e}", "/")
    return _ser.problem_from_doc(doc, lenient=lenient)


def emit_report(report: dict, fmt: str = "json") -> bytes:
    """Serialize a run report canonically (json) or as a human summary."""
    if fmt == "json":
        return (_ser.canonical_json(report) + "\n").encode()
    lines = [f"command:     {report.get('command')}",
             f"status:      {report.get('status')}",
             f"iterations:  {report.get('iterations')}",
             f"wall_time:   {report.get('wall_time'):.3f}s",
             f"seed:        {report.get('seed')}"]
    cert = report.get("certificate")
    if report.get("status") == "empty":
        lines.append(f"empty set index: {report.get('empty_index')}")
    if cert:
        lines.append("certificate: " + _ser.canonical_json(cert))
    if report.get("detail"):
        lines.append("detail:      " + str(report["detail"]))
    return ("\n".join(lines) + "\n").encode()


def _digest(path: str) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _base_report(command: str, path: str, seed: int) -> dict:
    return {"version": "1", "command": command, "input_digest": _digest(path),
            "seed": seed, "status": "failed", "iterations": 0,
            "oracle_calls": [], "certificate": None, "wall_time": 0.0}


def run(command: str, pf: _ser.ProblemFile, flags: argparse.Namespace,
        input_path: str) -> tuple:
    """Dispatch a command; returns (report dict, exit code)."""
    seed = flags.seed
    np.random.default_rng(seed)  # commands thread rngs explicitly
    report = _base_report(command, input_path, seed)
    t0 = time.perf_counter()
    try:
        if command == "solve":
            code = _run_solve(pf, flags, report)
        elif command == "check":
            code = _run_check(pf, flags, report)
        elif command == "reduce":
            code = _run_reduce(pf, flags, report)
        elif command == "gadget":
            code = _run_gadget(pf, flags, report)
        else:
            raise SchemaError(f"unknown command {command!r}")
    except EmptinessCertificate as cert:
        report["status"] = "empty"
        report["empty_index"] = cert.set_index
        code = EXIT_EMPTY
    report["wall_time"] = time.perf_counter() - t0
    return report, code


def _tols(pf, flags):
    t = dict(pf.tolerances)
    for name in ("beta", "delta", "eta"):
        v = getattr(flags, name, None)
        if v is not None:
            t[name] = v
    return t


def _run_solve(pf, flags, report) -> int:
    problem = _ser.instantiate(pf)
    t = _tols(pf, flags)
    if pf.kind == "vi":
        out = _vi.solve_vi_extragradient(problem, eps=t["beta"],
                                         max_iters=flags.max_iters)
        if isinstance(out, _vi.ExtragradientFailure):
            report["status"] = "failed"
            report["iterations"] = out.iterations
            report["detail"] = "extragradient exhausted"
            return EXIT_REJECTED
        report["status"] = "solved"
        report["certificate"] = _ser.certificate_to_json(out)
        return EXIT_OK
    if pf.kind in ("qvi", "gqvi"):
        if pf.kind == "qvi":
            problem = _vi.qvi_to_gqvi(problem)
        out = _vi.solve_gqvi(problem, beta=t["beta"],
                             max_iters=flags.max_iters)
        report["certificate"] = _ser.certificate_to_json(out)
        if isinstance(out, _vi.ViolationCertificate):
            report["status"] = "violation"
            return EXIT_EMPTY if out.kind == "emptiness" else EXIT_VIOLATION
        report["status"] = "solved"
        return EXIT_OK
    raise SchemaError(f"solve does not support kind {pf.kind!r}")


def _load_candidate(flags):
    if not flags.candidate:
        raise SchemaError("check needs --candidate FILE")
    with open(flags.candidate, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _run_check(pf, flags, report) -> int:
    problem = _ser.instantiate(pf)
    t = _tols(pf, flags)
    if pf.kind in ("vi", "qvi", "gqvi", "mvi"):
        cand_doc = _load_candidate(flags)
        cert = _vi.SolutionCertificate.from_dict(cand_doc)
        if cert.x is None and cert.x_star is not None:
            cert.x = cert.x_star
        if cert.x_star is None:
            cert.x_star = cert.x
        result = _vi.check_solution(problem, cert)
        report["certificate"] = _ser.certificate_to_json(cert)
        report["residual"] = None if result.residual is None else \
            [float(v) for v in result.residual]
        report["violations"] = result.violations
        report["status"] = "accepted" if result.accepted else "rejected"
        return EXIT_OK if result.accepted else EXIT_REJECTED
    if pf.kind == "game":
        game = problem
        if isinstance(game, _games.SVGame):
            if flags.assignment is None:
                raise SchemaError("sv-game check needs --assignment BITS")
            bits = [c == "1" for c in flags.assignment]
            res = _games.check_sv_equilibrium(game, game.phi, bits)
            report["status"] = "accepted" if res.accepted else "rejected"
            report["payoff"] = float(res.payoff)
            if res.deviation is not None:
                report["deviation"] = res.deviation
            return EXIT_OK if res.accepted else EXIT_REJECTED
        cand_doc = _load_candidate(flags)
        profile = np.asarray(cand_doc["x"], dtype=float)
        res = _games.verify_resilient(game, profile, flags.t, t["beta"],
                                      flags.grid)
        report["status"] = "accepted" if res.accepted else "rejected"
        if not res.accepted:
            report["detail"] = {"coalition": list(res.coalition),
                                "member": res.member,
                                "gain": res.gain,
                                "deviation": res.deviation.tolist()}
        return EXIT_OK if res.accepted else EXIT_REJECTED
    if pf.kind == "mlf":
        cand_doc = _load_candidate(flags)
        res = _mlf.check_remedial(problem,
                                  cand_doc["x_I"], cand_doc["y_I"],
                                  cand_doc["x_II"], cand_doc["y_II"],
                                  beta=t["beta"])
        report["status"] = "accepted" if res.accepted else "rejected"
        report["detail"] = {"sol_I": res.sol_I, "sol_II": res.sol_II,
                            "value_I": res.value_I, "value_II": res.value_II,
                            "leader": res.leader, "gap": res.gap}
        return EXIT_OK if res.accepted else EXIT_REJECTED
    raise SchemaError(f"check does not support kind {pf.kind!r}")


def _run_reduce(pf, flags, report) -> int:
    if pf.kind != "game":
        raise SchemaError("reduce expects a game problem file")
    game = _ser.instantiate(pf)
    if isinstance(game, _games.SVGame):
        raise SchemaError("reduce does not apply to gadget games")
    t = _tols(pf, flags)
    target = flags.to
    if target == "vi":
        problem = _games.nash_to_vi(game, beta=t["beta"])
        payload = _reduced_vi_payload(game, problem)
        out_doc = _ser.ProblemFile("vi", payload, t).to_json()
    elif target == "mvi":
        _games.resilient_to_mvi(game, flags.t, beta=t["beta"])
        payload = _reduced_mvi_payload(game, flags.t)
        out_doc = _ser.ProblemFile("mvi", payload, t).to_json()
    else:
        raise SchemaError(f"reduce target {target!r} unsupported "
                          "(use vi or mvi)")
    report["status"] = "solved"
    report["output"] = out_doc
    return EXIT_OK


def _affine_from_game(game, column=None):
    """Quadratic/bilinear game operators are affine: recover (W, c) by
    probing at the origin and coordinate directions."""
    n = game.dim
    if column is None:
        def F(x):
            out = np.empty(n)
            for i, blk in enumerate(game.blocks):
                out[blk] = game.loss_block_grad(i, blk, x)
            return out
    else:
        F = column
    x0 = np.zeros(n)
    c = F(x0)
    W = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        W[:, j] = F(e) - c
    # reject non-affine operators: probe a random point
    probe = np.full(n, 0.37)
    if not np.allclose(W @ probe + c, F(probe), atol=1e-7):
        raise SchemaError("game operator is not affine; cannot serialize")
    return W, c


def _reduced_vi_payload(game, problem) -> dict:
    W, c = _affine_from_game(game)
    return {"operator": {"affine": {"W": W.tolist(), "c": c.tolist()}},
            "set": _ser.body_to_json(problem.R)}


def _reduced_mvi_payload(game, t: int) -> dict:
    ops = []
    for J in _games.coalitions(game.k, t):
        for j in J:
            W, c = _affine_from_game(game,
                                     _games._coalition_column(game, J, j))
            ops.append({"affine": {"W": W.tolist(), "c": c.tolist()}})
    from .geometry import product_body
    return {"operators": ops,
            "set": _ser.body_to_json(product_body(game.strategy_sets))}


def _run_gadget(pf, flags, report) -> int:
    if pf.kind != "cnf":
        raise SchemaError("gadget expects a cnf problem file")
    phi = _ser.instantiate(pf)
    payload = {"sv_meta": {"n": phi.n,
                           "clauses": [list(c) for c in phi.clauses],
                           "with_f": bool(flags.with_f)}}
    out_doc = _ser.ProblemFile("game", payload, pf.tolerances).to_json()
    report["status"] = "solved"
    report["output"] = out_doc
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="vikit",
        description="variational-inequality toolkit over separation oracles")
    ap.add_argument("command", choices=["solve", "check", "reduce", "gadget"])
    ap.add_argument("problem", help="problem file (.json, or .cnf for DIMACS)")
    ap.add_argument("--beta", type=float, default=None)
    ap.add_argument("--delta", type=float, default=None)
    ap.add_argument("--eta", type=float, default=None,
                    help="weak-oracle margin")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--max-iters", type=int, default=300, dest="max_iters")
    ap.add_argument("--grid", type=float, default=0.05,
                    help="verifier grid resolution")
    ap.add_argument("--t", type=int, default=1,
                    help="resilience degree for reduce/check")
    ap.add_argument("--candidate", default=None,
                    help="candidate JSON for check")
    ap.add_argument("--assignment", default=None,
                    help="bitstring for sv-game check")
    ap.add_argument("--with-f", action="store_true", dest="with_f",
                    help="gadget: include the escape strategy and a third "
                         "player")
    ap.add_argument("--lenient", action="store_true",
                    help="warn on unknown fields instead of rejecting")
    ap.add_argument("--out", default=None)
    ap.add_argument("--format", choices=["json", "text"], default="json")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        flags = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0,) else 0
    try:
        pf = parse_problem(flags.problem, lenient=flags.lenient)
        report, code = run(flags.command, pf, flags, flags.problem)
    except SchemaError as e:
        sys.stderr.write(f"schema error: {e}\n")
        return EXIT_SCHEMA
    except FileNotFoundError as e:
        sys.stderr.write(f"{e}\n")
        return EXIT_USAGE
    except VikitError as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_VIOLATION
    data = emit_report(report, flags.format)
    if flags.out:
        with open(flags.out, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.buffer.write(data)
    return code


if __name__ == "__main__":
    sys.exit(main())
