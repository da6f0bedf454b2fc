"""Command-line interface.

Exit codes: 0 on success, 2 for input errors, 3 for contract violations
(for example a protocol requested for a pair that does not convert).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence

import numpy as np

from . import examples as ex
from . import io
from ._linalg import TOL_EQ
from .algebra import AlgElement, StdVector, act, commutant_act, densities, left_matrix, vec
from .channels import lo_popescu_transfer
from .convert import decide_convertible, synthesize_protocol, verify_protocol
from .exceptions import ContractViolation, NotConvertibleError, UnsupportedError, ValidationError
from .monotone import entropy_relative_to_trace
from .sampling import random_factor, random_majorised_pair, random_state
from .spectral import majorisation_report, singular_value_function

EXIT_OK, EXIT_INPUT, EXIT_CONTRACT = 0, 2, 3


@dataclass(frozen=True)
class RunConfig:
    command: str
    inputs: tuple[str, ...] = ()
    tol: float = TOL_EQ
    seed: int = 0
    out: str | None = None
    format: str = "json"
    options: dict = field(default_factory=dict)


def _common(p: argparse.ArgumentParser):
    p.add_argument("--tol", type=float, default=TOL_EQ, help="equality tolerance (default 1e-9)")
    p.add_argument("--seed", type=int, default=0, help="seed for randomised fixtures")
    p.add_argument("--out", default=None, help="write output here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vnlocc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sv", help="singular value function of a positive element (CSV)")
    p.add_argument("algebra")
    p.add_argument("element")
    _common(p)

    p = sub.add_parser("majorize", help="test x < y (majorisation)")
    p.add_argument("algebra")
    p.add_argument("x")
    p.add_argument("y")
    _common(p)

    p = sub.add_parser("convert", help="decide or construct an LOCC conversion psi -> phi")
    p.add_argument("algebra")
    p.add_argument("psi")
    p.add_argument("phi")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--decide", action="store_true", help="decision only (default)")
    mode.add_argument("--protocol", action="store_true", help="also synthesise and verify a protocol")
    p.add_argument("--direction", choices=["right", "left"], default="right")
    _common(p)

    p = sub.add_parser("entropy", help="entropy of a density relative to a normalised trace")
    p.add_argument("algebra")
    p.add_argument("state")
    p.add_argument("--vector", action="store_true", help="STATE is a vector; use its left density")
    _common(p)

    p = sub.add_parser("example", help="emit a JSON fixture")
    kinds = p.add_subparsers(dest="kind", required=True)
    k = kinds.add_parser("spin-chain")
    k.add_argument("--pairs", type=int, default=1)
    _common(k)
    k = kinds.add_parser("weyl")
    k.add_argument("--q", type=int, default=2)
    k.add_argument("--p", type=int, default=1)
    _common(k)
    k = kinds.add_parser("car")
    k.add_argument("--modes", type=int, default=2)
    _common(k)
    k = kinds.add_parser("random")
    k.add_argument("--n", type=int, default=3)
    k.add_argument("--majorised", action="store_true", help="make the pair convertible")
    _common(k)

    p = sub.add_parser("trace-vector", help="test whether a fixture's vector is a trace vector")
    p.add_argument("fixture")
    p.add_argument("--depth", type=int, default=16)
    _common(p)

    p = sub.add_parser("lo-popescu", help="transfer a commutant operation to Alice's side")
    p.add_argument("algebra")
    p.add_argument("psi")
    p.add_argument("b")
    _common(p)
    return parser


def _load(cfg_alg: str):
    return io.decode_algebra(io.read_json(cfg_alg))


def _cmd_sv(args) -> str:
    A = _load(args.algebra)
    x = io.decode_blocks(A, io.read_json(args.element))
    return singular_value_function(A, x).to_csv()


def _cmd_majorize(args) -> str:
    A = _load(args.algebra)
    x = io.decode_blocks(A, io.read_json(args.x))
    y = io.decode_blocks(A, io.read_json(args.y))
    rep = majorisation_report(A, x, y, args.tol)
    return io.dumps({"majorised": rep.holds, "trace_gap": rep.trace_gap, "max_violation": rep.max_violation})


def _cmd_convert(args) -> str:
    A = _load(args.algebra)
    psi = io.decode_blocks(A, io.read_json(args.psi), StdVector)
    phi = io.decode_blocks(A, io.read_json(args.phi), StdVector)
    decision = decide_convertible(A, psi, phi, args.tol)
    out = {"decision": decision}
    if args.protocol:
        if not decision:
            raise NotConvertibleError("protocol requested but rho_psi is not majorised by rho_phi")
        theta = synthesize_protocol(A, psi, phi, args.direction, args.tol)
        out["residual"] = verify_protocol(theta, psi, phi)
        out["protocol"] = io.encode_protocol(theta)
    return io.dumps(out)


def _cmd_entropy(args) -> str:
    A = _load(args.algebra)
    raw = io.read_json(args.state)
    if args.vector:
        rho = densities(io.decode_blocks(A, raw, StdVector))[0]
    else:
        rho = io.decode_blocks(A, raw, AlgElement)
    rep = entropy_relative_to_trace(A, rho, args.tol)
    return io.dumps({"H": rep.value, "mu": rep.density.to_csv()})


def _site_operator(op: np.ndarray, site: int, n: int) -> np.ndarray:
    mats = [np.eye(2)] * n
    mats[site] = op
    return reduce(np.kron, mats)


def _example(args) -> dict:
    if args.kind == "spin-chain":
        A, psi = ex.spin_chain_state(args.pairs)
        gens = [
            AlgElement(A, [_site_operator(op, j, args.pairs)])
            for j in range(args.pairs)
            for op in (np.array([[0, 1], [1, 0]]), np.diag([1.0, -1.0]))
        ]
        return {
            "kind": "spin-chain",
            "pairs": args.pairs,
            "algebra": io.encode_algebra(A),
            "vector": io.encode_blocks(psi),
            "generators": [io.encode_blocks(g) for g in gens],
        }
    if args.kind == "weyl":
        w = ex.weyl_pair(args.q, args.p)
        return {
            "kind": "weyl",
            "q": args.q,
            "p": args.p,
            "algebra": io.encode_algebra(w.algebra),
            "vector": io.encode_blocks(w.psi),
            "generators": [io.encode_blocks(w.U), io.encode_blocks(w.V)],
        }
    if args.kind == "car":
        F = ex.car_fock(args.modes)
        fix = {
            "kind": "car",
            "modes": F.modes,
            "fock_dim": F.dim,
            "annihilators": [io.encode_matrix(a) for a in F.annihilators],
            "fields": [io.encode_matrix(b) for b in F.real_fields()],
            "omega": io.encode_vector(F.vacuum),
        }
        if F.modes % 2 == 0:
            sf = ex.car_standard_form(F)
            fix["algebra"] = io.encode_algebra(sf.algebra)
            fix["vector"] = io.encode_blocks(sf.to_standard(F.vacuum))
            fix["generators"] = [io.encode_blocks(AlgElement(sf.algebra, [g])) for g in sf.gammas]
        return fix
    if args.kind == "random":
        if args.n < 1:
            raise ValidationError("--n must be positive")
        rng = np.random.default_rng(args.seed)
        A = random_factor(args.n)
        if args.majorised:
            psi, phi = random_majorised_pair(A, rng)
        else:
            psi, phi = random_state(A, rng), random_state(A, rng)
        return {
            "kind": "random",
            "seed": args.seed,
            "algebra": io.encode_algebra(A),
            "vector": io.encode_blocks(psi),
            "target": io.encode_blocks(phi),
        }
    raise ValidationError(f"unknown example {args.kind!r}")


def _cmd_example(args) -> str:
    return io.dumps(_example(args))


def _cmd_trace_vector(args) -> str:
    fix = io.read_json(args.fixture)
    if not isinstance(fix, dict):
        raise ValidationError("fixture must be a JSON object")
    if "fields" in fix and "omega" in fix:
        gens = [io.decode_matrix(m) for m in fix["fields"]]
        omega = io.decode_vector(fix["omega"])
    elif "generators" in fix and "vector" in fix and "algebra" in fix:
        A = io.decode_algebra(fix["algebra"])
        gens = [left_matrix(io.decode_blocks(A, g)) for g in fix["generators"]]
        omega = vec(io.decode_blocks(A, fix["vector"], StdVector))
    else:
        raise ValidationError("fixture needs 'fields'+'omega' or 'algebra'+'generators'+'vector'")
    rep = ex.is_trace_vector(gens, omega, depth=args.depth)
    return io.dumps(
        {
            "trace_vector": rep.verdict,
            "inconclusive": rep.inconclusive,
            "defect": rep.defect,
            "saturated": rep.saturated,
            "span_dim": rep.span_dim,
        }
    )


def _cmd_lo_popescu(args) -> str:
    A = _load(args.algebra)
    psi = io.decode_blocks(A, io.read_json(args.psi), StdVector)
    b = io.decode_blocks(A, io.read_json(args.b))
    u, w, z = lo_popescu_transfer(psi, b)
    b_psi = commutant_act(b, psi)
    z_psi = act("left", z, psi)
    rebuilt = commutant_act(u, act("left", w, z_psi))
    return io.dumps(
        {
            "norm_b_psi": b_psi.norm(),
            "norm_z_psi": z_psi.norm(),
            "residual": (b_psi - rebuilt).norm(),
            "u": io.encode_blocks(u),
            "w": io.encode_blocks(w),
            "z": io.encode_blocks(z),
        }
    )


_COMMANDS = {
    "sv": _cmd_sv,
    "majorize": _cmd_majorize,
    "convert": _cmd_convert,
    "entropy": _cmd_entropy,
    "example": _cmd_example,
    "trace-vector": _cmd_trace_vector,
    "lo-popescu": _cmd_lo_popescu,
}


def _config(args) -> RunConfig:
    inputs = tuple(
        getattr(args, k) for k in ("algebra", "element", "x", "y", "psi", "phi", "state", "fixture", "b") if hasattr(args, k)
    )
    command = args.command if args.command != "example" else f"example:{args.kind}"
    return RunConfig(
        command=args.command,
        inputs=inputs,
        tol=args.tol,
        seed=args.seed,
        out=args.out,
        format="csv" if args.command == "sv" else "json",
        options={"variant": command},
    )


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    cfg = _config(args)
    try:
        text = _COMMANDS[cfg.command](args)
    except (ValidationError, UnsupportedError) as exc:
        print(f"vnlocc: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NotConvertibleError, ContractViolation) as exc:
        print(f"vnlocc: contract violation: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
