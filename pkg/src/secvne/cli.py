"""Command-line entry point: ``secvne <subcommand> ...``.

Machine-readable JSON goes to stdout (or ``--out``); logs go to stderr at the
level named by ``SECVNE_LOG`` (default WARNING).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from .embedder import PricingWeights, embed
from .milp import Weights, build_model, export
from .model import (
    LevelDomain,
    ModelError,
    SubstrateState,
    level_domain,
    load_substrate,
    load_vnr,
    substrate_from_dict,
    substrate_to_dict,
)
from .policy import (
    PolicyError,
    PolicySyntaxError,
    RequestVariant,
    UnsatisfiablePolicyError,
    expand,
    parse,
    policy_domain,
    to_text,
)
from .sim import ConfigError, SubstrateGenParams, gen_substrate, load_config, run_experiment, write_outputs
from .solver import BACKENDS, SolveLimits

log = logging.getLogger("secvne")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_SYNTAX = 2
EXIT_UNSAT = 3
EXIT_REJECTED = 4

VARIANTS_SCHEMA = "secvne.variants/1"


class UsageError(Exception):
    pass


def _floats(text: str, n: int, flag: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"{flag} expects {n} comma-separated numbers, got {text!r}") from None
    if len(vals) != n:
        raise UsageError(f"{flag} expects {n} comma-separated numbers, got {text!r}")
    return vals


def _emit(data, out: str | None):
    text = json.dumps(data, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _read_policy(path: str):
    return parse(Path(path).read_text())


def _load_domain(path: str) -> LevelDomain:
    data = json.loads(Path(path).read_text())
    if "nodes" in data:
        return level_domain(substrate_from_dict(data))
    try:
        return LevelDomain(frozenset(data["sec"]), frozenset(data["cloud"]))
    except KeyError as exc:
        raise UsageError(f"domain file needs 'sec' and 'cloud' lists (missing {exc})") from None


def _domain_dict(domain: LevelDomain) -> dict:
    return {"sec": sorted(float(v) for v in domain.sec), "cloud": sorted(float(v) for v in domain.cloud)}


def cmd_policy_check(args) -> int:
    expr = _read_policy(args.policy)
    domain = _load_domain(args.domain) if args.domain else policy_domain(expr)
    variants = expand(expr, domain)
    _emit({"schema": VARIANTS_SCHEMA, "policy": to_text(expr), "domain": _domain_dict(domain),
           "variants": [v.to_dict() for v in variants]}, args.out)
    return EXIT_OK


def cmd_gen_topology(args) -> int:
    data = json.loads(Path(args.params).read_text()) if args.params else {}
    params = SubstrateGenParams.from_dict(data)
    if args.seed is not None:
        params = replace(params, seed=args.seed)
    _emit(substrate_to_dict(gen_substrate(params)), args.out)
    return EXIT_OK


def _request(args):
    if bool(args.vnr) == bool(args.policy):
        raise UsageError("give exactly one of --vnr or --policy")
    if args.vnr:
        return load_vnr(args.vnr)
    return _read_policy(args.policy)


def _limits(args) -> SolveLimits:
    return SolveLimits(time_budget=args.time_budget) if args.time_budget else SolveLimits()


def cmd_embed(args) -> int:
    net = load_substrate(args.substrate)
    request = _request(args)
    weights = Weights(*_floats(args.weights, 3, "--weights"))
    pricing = PricingWeights(*_floats(args.pricing, 2, "--pricing"))
    result = embed(SubstrateState(net), request, weights, pricing, _limits(args),
                   request_id=args.request_id, backend=args.backend)
    _emit(result.to_dict(), args.out)
    return EXIT_OK if result.accepted else EXIT_REJECTED


def cmd_export_milp(args) -> int:
    net = load_substrate(args.substrate)
    variant = RequestVariant.from_vnr(load_vnr(args.vnr))
    weights = Weights(*_floats(args.weights, 3, "--weights"))
    model, _ = build_model(SubstrateState(net), variant, weights)
    data = export(model, args.format)
    if args.out:
        Path(args.out).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seeds=(args.seed,))
    if args.backend:
        cfg = replace(cfg, backend=args.backend)
    results = run_experiment(cfg, workers=args.workers)
    summary = write_outputs(args.out, cfg, results)
    _emit(summary, None)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--seed", type=int, default=None, help="override the random seed")
    shared.add_argument("--out", default=None, help="output path (stdout when omitted)")

    p = argparse.ArgumentParser(prog="secvne", description="Security-aware multi-cloud virtual network embedding")
    sub = p.add_subparsers(dest="command", required=True)

    pc = sub.add_parser("policy-check", parents=[shared], help="parse and expand a virtual policy")
    pc.add_argument("--policy", required=True)
    pc.add_argument("--domain", help="substrate JSON or {\"sec\": [...], \"cloud\": [...]}")
    pc.add_argument("--format", choices=["json"], default="json")
    pc.set_defaults(func=cmd_policy_check)

    gt = sub.add_parser("gen-topology", parents=[shared], help="generate a random substrate")
    gt.add_argument("--params", help="JSON generator parameters (defaults when omitted)")
    gt.add_argument("--format", choices=["json"], default="json")
    gt.set_defaults(func=cmd_gen_topology)

    em = sub.add_parser("embed", parents=[shared], help="embed one request on a substrate")
    em.add_argument("--substrate", required=True)
    em.add_argument("--vnr")
    em.add_argument("--policy")
    em.add_argument("--weights", default="1,1,1", help="beta1,beta2,beta3")
    em.add_argument("--pricing", default="1,1", help="lambda1,lambda2")
    em.add_argument("--backend", choices=sorted(BACKENDS), default="native")
    em.add_argument("--time-budget", type=float, default=None, help="per-solve seconds")
    em.add_argument("--request-id", default="r0")
    em.add_argument("--format", choices=["json"], default="json")
    em.set_defaults(func=cmd_embed)

    ex = sub.add_parser("export-milp", parents=[shared], help="write the embedding MILP as LP or MPS")
    ex.add_argument("--substrate", required=True)
    ex.add_argument("--vnr", required=True)
    ex.add_argument("--weights", default="1,1,1", help="beta1,beta2,beta3")
    ex.add_argument("--format", choices=["lp", "mps"], default="lp")
    ex.set_defaults(func=cmd_export_milp)

    si = sub.add_parser("simulate", parents=[shared], help="run a simulation experiment")
    si.add_argument("--config", required=True)
    si.add_argument("--backend", choices=sorted(BACKENDS), default=None)
    si.add_argument("--workers", type=int, default=1)
    si.add_argument("--format", choices=["csv"], default="csv")
    si.set_defaults(func=cmd_simulate)
    return p


def _setup_logging():
    level = os.environ.get("SECVNE_LOG", "WARNING").upper()
    logging.basicConfig(stream=sys.stderr, level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    if args.command == "simulate" and not args.out:
        print("secvne simulate: --out DIR is required", file=sys.stderr)
        return EXIT_ERROR
    try:
        return args.func(args)
    except UnsatisfiablePolicyError as exc:
        print(f"unsatisfiable policy: {exc}", file=sys.stderr)
        return EXIT_UNSAT
    except (PolicySyntaxError, PolicyError) as exc:
        print(f"invalid policy: {exc}", file=sys.stderr)
        return EXIT_SYNTAX
    except (UsageError, ModelError, ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
