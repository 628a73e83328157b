"""Command-line entry point: code-info, value, extract and verify subcommands.

Reports are JSON documents with a fixed key set (see REPORT_FIELDS); corruption
sweeps are written as CSV with the header rho,eps,delta,eta.
"""
from __future__ import annotations

import argparse
import copy
import csv
import json
import os
import sys
import time
from contextlib import nullcontext
from importlib.metadata import PackageNotFoundError, version as pkg_version
from typing import Any

import numpy as np
from threadpoolctl import threadpool_limits

from . import verify as verify_mod
from .codes import LinearCode, make_reed_solomon
from .extract import PastingConfig, extract_global
from .game import (build_game, build_two_prover_game, embed_synchronous, evaluate_bipartite,
                   evaluate_synchronous, goodness_synchronous, monte_carlo_play)
from .strategies import (CorruptionModel, anticommuting_pair_strategy, classical_from_codeword, corrupt,
                         embed_classical, honest_strategy, mixture, random_strategy)
from .tensor import gamma, tensor_encode

SCHEMA_VERSION = 1
THREADS_ENV = "TENSOR_GAME_THREADS"
REPORT_FIELDS = ("schema_version", "version", "command", "config", "timing", "results", "checks", "ok")
STRATEGY_KINDS = ("honest", "classical", "corrupted", "random", "mixture", "anticommuting")

DEFAULT_CONFIG: dict[str, Any] = {
    "code": {"q": 5, "n": 5, "s": 1, "eval_points": None, "generator": None},
    "m": 2,
    "strategy": {"kind": "honest", "coeffs": None, "r": 2, "noise": 0.2, "rate": 0.0, "rederive_pairs": False},
    "game": "synchronous",
    "extraction": {"method": 2, "k": None, "tol": 1e-9, "tuple_budget": 10**4, "tuple_samples": 2000},
    "seed": 0,
    "rounds": 10**5,
    "out": None,
}


class ConfigError(ValueError):
    pass


def _merge(base: dict, update: dict, strict: bool, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in update.items():
        if key not in base:
            if strict:
                raise ConfigError(f"unknown config field {path + key!r}")
            continue
        if isinstance(base[key], dict) and isinstance(val, dict):
            out[key] = _merge(base[key], val, strict, f"{path}{key}.")
        else:
            out[key] = val
    return out


def validate_config(cfg: dict) -> dict:
    code = cfg["code"]
    for key in ("q", "n", "s"):
        if not isinstance(code[key], int):
            raise ConfigError(f"code.{key} must be an integer")
    if code["generator"] is not None:
        G = np.asarray(code["generator"])
        if G.ndim != 2 or not np.issubdtype(G.dtype, np.integer):
            raise ConfigError("code.generator must be an integer matrix (n rows, k columns)")
        code["n"], code["s"] = G.shape[0], G.shape[1] - 1
    if not 0 <= code["s"] < code["n"] <= code["q"]:
        raise ConfigError("need 0 <= s < n <= q")
    if code["eval_points"] is not None and len(code["eval_points"]) != code["n"]:
        raise ConfigError("code.eval_points needs exactly n entries")
    if not isinstance(cfg["m"], int) or cfg["m"] < 1:
        raise ConfigError("m must be a positive integer")
    if cfg["strategy"]["kind"] not in STRATEGY_KINDS:
        raise ConfigError(f"strategy.kind must be one of {STRATEGY_KINDS}")
    if cfg["game"] not in ("synchronous", "two-prover"):
        raise ConfigError("game must be 'synchronous' or 'two-prover'")
    if cfg["extraction"]["method"] not in (1, 2):
        raise ConfigError("extraction.method must be 1 or 2")
    if not isinstance(cfg["rounds"], int) or cfg["rounds"] < 1:
        raise ConfigError("rounds must be a positive integer")
    build_code(cfg)
    return cfg


def load_config(args) -> dict:
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if args.config:
        with open(args.config) as fh:
            cfg = _merge(cfg, json.load(fh), args.strict)
    flags = {
        ("seed",): args.seed, ("rounds",): getattr(args, "rounds", None), ("out",): args.out,
        ("m",): getattr(args, "m", None), ("code", "q"): getattr(args, "q", None),
        ("code", "n"): getattr(args, "n", None), ("code", "s"): getattr(args, "s", None),
        ("strategy", "kind"): getattr(args, "strategy", None),
        ("extraction", "method"): getattr(args, "method", None), ("extraction", "k"): getattr(args, "k", None),
        ("extraction", "tol"): getattr(args, "tol", None),
        ("extraction", "tuple_budget"): getattr(args, "tuples", None),
    }
    for keys, val in flags.items():
        if val is not None:
            target = cfg
            for key in keys[:-1]:
                target = target[key]
            target[keys[-1]] = val
    return validate_config(cfg)


def build_code(cfg: dict):
    c = cfg["code"]
    try:
        if c["generator"] is not None:
            return LinearCode(c["generator"], q=c["q"])
        return make_reed_solomon(c["q"], c["n"], c["s"], c["eval_points"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def planted_codeword(code, m: int, cfg: dict):
    coeffs = cfg["strategy"]["coeffs"]
    if coeffs is None:
        coeffs = np.random.default_rng(cfg["seed"]).integers(0, code.q, (code.k,) * m)
    return tensor_encode(code, m, coeffs)


def build_strategy(cfg: dict):
    strat = cfg["strategy"]
    if strat["kind"] == "anticommuting":
        return anticommuting_pair_strategy()
    code, m = build_code(cfg), cfg["m"]
    c = planted_codeword(code, m, cfg)
    kind = strat["kind"]
    if kind == "honest":
        return honest_strategy(c)
    if kind == "classical":
        return embed_classical(classical_from_codeword(c))
    if kind == "corrupted":
        model = CorruptionModel(rate=strat["rate"], seed=cfg["seed"], rederive_pairs=strat["rederive_pairs"])
        return corrupt(honest_strategy(c), model)
    if kind == "random":
        return random_strategy(code, m, strat["r"], seed=cfg["seed"], honest=c, noise=strat["noise"])
    rng = np.random.default_rng([cfg["seed"], 1])
    other = tensor_encode(code, m, rng.integers(0, code.q, (code.k,) * m))
    return mixture([honest_strategy(c), honest_strategy(other)], [0.5, 0.5])


def _version() -> str:
    try:
        return pkg_version("artifact")
    except PackageNotFoundError:
        return "0+unknown"


def make_report(command: str, cfg: dict, results: dict, checks: list, started: float) -> dict:
    report = {
        "schema_version": SCHEMA_VERSION,
        "version": _version(),
        "command": command,
        "config": cfg,
        "timing": {"seconds": time.perf_counter() - started},
        "results": results,
        "checks": [{"name": n, "ok": bool(ok)} for n, ok in checks],
        "ok": all(ok for _, ok in checks),
    }
    return _jsonable(report)


def check_report_schema(report: dict) -> None:
    if tuple(report) != REPORT_FIELDS:
        raise ConfigError(f"report keys {tuple(report)} differ from {REPORT_FIELDS}")


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    return x


# ---------------------------------------------------------------- commands

def cmd_code_info(cfg: dict) -> tuple[dict, list]:
    code = build_code(cfg)
    q, n, s = cfg["code"]["q"], cfg["code"]["n"], cfg["code"]["s"]
    d = code.d
    table = {str(m): gamma(n, d, m) for m in range(1, 5)}
    results = {"q": q, "n": n, "k": code.k, "d": d, "t": code.t, "interpolable": code.interpolable,
               "size": code.size, "gamma_m": table}
    checks = [("distance", d == n - s or cfg["code"]["generator"] is not None),
              ("gamma_formula", all(abs(v - (1 - (d / n) ** int(m))) <= 1e-15 for m, v in table.items()))]
    return results, checks


def cmd_value(cfg: dict) -> tuple[dict, list]:
    s = build_strategy(cfg)
    if cfg["game"] == "two-prover":
        game = build_two_prover_game(s.code, s.m)
        played = embed_synchronous(s)
        exact, rep = evaluate_bipartite(played, game)
    else:
        game = build_game(s.code, s.m)
        played = s
        exact = evaluate_synchronous(s, game)
        rep = goodness_synchronous(s, game)
    mc = monte_carlo_play(played, game, cfg["rounds"], seed=cfg["seed"])
    results = {"value": exact, "goodness": rep.as_dict(),
               "monte_carlo": {"rate": mc.rate, "stderr": mc.stderr, "rounds": mc.rounds, "seed": mc.seed},
               "dimension": s.r}
    return results, [("monte_carlo_within_3sigma", abs(mc.rate - exact) <= 3 * mc.stderr + 1e-12)]


def _extraction_config(cfg: dict) -> PastingConfig:
    e = cfg["extraction"]
    return PastingConfig(e["method"], e["k"], e["tuple_budget"], e["tuple_samples"], cfg["seed"])


def cmd_extract(cfg: dict, sweep: list[float] | None = None, csv_path: str | None = None) -> tuple[dict, list]:
    s = build_strategy(cfg)
    tol = cfg["extraction"]["tol"]
    G, rep = extract_global(s, _extraction_config(cfg), tol=tol)
    results = {"extraction": rep.as_dict(), "eta": rep.eta}
    checks = []
    if cfg["strategy"]["kind"] in ("honest", "classical"):
        checks.append(("honest_eta", rep.eta <= 1e-8))
    if sweep:
        rows = []
        code, m = s.code, s.m
        base = honest_strategy(planted_codeword(code, m, cfg))
        game = build_game(code, m)
        for rho in sweep:
            sc = corrupt(base, CorruptionModel(rate=rho, seed=cfg["seed"],
                                               rederive_pairs=cfg["strategy"]["rederive_pairs"]))
            good = goodness_synchronous(sc, game)
            _, r = extract_global(sc, _extraction_config(cfg), tol=tol)
            rows.append({"rho": rho, "eps": good.eps, "delta": good.delta, "eta": r.eta})
        results["sweep"] = rows
        etas = [row["eta"] for row in rows]
        checks.append(("eta_nondecreasing", all(b >= a - 1e-9 for a, b in zip(etas, etas[1:]))))
        if csv_path:
            write_sweep_csv(csv_path, rows)
    return results, checks


def write_sweep_csv(path: str, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["rho", "eps", "delta", "eta"])
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(float(v)) for k, v in row.items()})


def cmd_verify(cfg: dict, perturb: float = 0.0) -> tuple[dict, list]:
    ortho = verify_mod.perturbed_orthogonalize(perturb) if perturb else None
    rows = verify_mod.run_checks(seed=cfg["seed"], orthogonalizer=ortho)
    return {"rows": [{"name": r.name, "ok": r.ok, "detail": r.detail} for r in rows]}, [(r.name, r.ok) for r in rows]


# ---------------------------------------------------------------- argument parsing

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tensor-game", description="Tensor code test toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="write the JSON report here")
        sp.add_argument("--strict", action="store_true", help="reject unknown config fields")
        sp.add_argument("--q", type=int)
        sp.add_argument("--n", type=int)
        sp.add_argument("--s", type=int)
        sp.add_argument("--m", type=int)

    common(sub.add_parser("code-info", help="code parameters and agreement table"))
    sp = sub.add_parser("value", help="exact and sampled game value")
    common(sp)
    sp.add_argument("--rounds", type=int)
    sp.add_argument("--strategy", choices=STRATEGY_KINDS)
    sp = sub.add_parser("extract", help="global codeword extraction")
    common(sp)
    sp.add_argument("--strategy", choices=STRATEGY_KINDS)
    sp.add_argument("--method", type=int, choices=(1, 2))
    sp.add_argument("--k", type=int)
    sp.add_argument("--tuples", type=int, help="exact tuple budget before sampling")
    sp.add_argument("--tol", type=float)
    sp.add_argument("--sweep", help="comma-separated corruption rates")
    sp.add_argument("--csv", help="write the sweep table here")
    sp = sub.add_parser("verify", help="run the invariant suite")
    common(sp)
    sp.add_argument("--perturb-rounding", type=float, default=0.0, help=argparse.SUPPRESS)
    return p


def _dispatch(args, cfg: dict) -> tuple[dict, list]:
    if args.command == "code-info":
        return cmd_code_info(cfg)
    if args.command == "value":
        return cmd_value(cfg)
    if args.command == "extract":
        sweep = [float(x) for x in args.sweep.split(",")] if args.sweep else None
        return cmd_extract(cfg, sweep, args.csv)
    return cmd_verify(cfg, args.perturb_rounding)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    threads = os.environ.get(THREADS_ENV)
    started = time.perf_counter()
    try:
        with threadpool_limits(int(threads)) if threads else nullcontext():
            results, checks = _dispatch(args, cfg)
    except (ValueError, NotImplementedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report = make_report(args.command, cfg, results, checks, started)
    if args.strict:
        check_report_schema(report)
    text = json.dumps(report, indent=2, sort_keys=False)
    if cfg["out"]:
        with open(cfg["out"], "w") as fh:
            fh.write(text + "\n")
    if args.command == "verify":
        width = max(len(r["name"]) for r in results["rows"])
        for r in results["rows"]:
            print(f"{r['name']:<{width}}  {'PASS' if r['ok'] else 'FAIL'}")
        return 0 if report["ok"] else 1
    print(text)
    return 0 if report["ok"] else 1


if __name__ == "__main__":
    sys.exit(main())
