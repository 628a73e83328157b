"""Registry of quick invariant checks across all modules, run by `tensor-game verify`."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from . import codes, duality, extract, game, opalg, spectral, strategies, tensor
from .galois import FieldElement, field_add, field_inv, field_mul


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: dict


@dataclass
class Context:
    seed: int = 0
    orthogonalizer: Callable = opalg.orthogonalize


CHECKS: dict[str, Callable[[Context], tuple[bool, dict]]] = {}


def check(name: str):
    def register(fn):
        CHECKS[name] = fn
        return fn
    return register


def _code():
    return codes.make_reed_solomon(5, 5, 1)


@check("field.axioms")
def _field(ctx):
    q = 7
    bad = 0
    for a, b in itertools.product(range(q), repeat=2):
        x, y = FieldElement.of(a, q), FieldElement.of(b, q)
        bad += int(field_add(x, y)) != (a + b) % q or int(field_mul(x, y)) != (a * b) % q
        if a:
            bad += int(field_mul(x, field_inv(x))) != 1
    return bad == 0, {"violations": bad}


@check("codes.reed_solomon_distance")
def _rs_distance(ctx):
    rows = []
    for q in (3, 5, 7):
        for n in range(2, q + 1):
            for s in range(1, n):
                rows.append(codes.distance(codes.make_reed_solomon(q, n, s)) == n - s)
    return all(rows), {"codes": len(rows)}


@check("codes.interpolation_unique")
def _interp(ctx):
    code = _code()
    rng = np.random.default_rng(ctx.seed)
    cw = code.codewords
    bad = 0
    for _ in range(50):
        coords = sorted(rng.choice(code.n, code.t, replace=False).tolist())
        vals = rng.integers(0, code.q, code.t)
        bad += int(np.all(cw[:, coords] == vals, axis=1).sum() != 1)
    return bad == 0, {"violations": bad}


@check("tensor.distance")
def _tensor_distance(ctx):
    code = codes.make_reed_solomon(3, 3, 1)
    d = tensor.tensor_distance(code, 2)
    return d == code.d**2, {"distance": d}


@check("game.honest_value")
def _honest(ctx):
    code = _code()
    c = tensor.tensor_encode(code, 2, [[1, 2], [3, 4]])
    v = game.evaluate_synchronous(strategies.honest_strategy(c), game.build_game(code, 2))
    return abs(v - 1) <= 1e-10, {"value": v}


@check("game.monte_carlo")
def _mc(ctx):
    code = codes.make_reed_solomon(3, 3, 1)
    g = game.build_game(code, 2)
    s = strategies.random_strategy(code, 2, 2, seed=ctx.seed)
    exact = game.evaluate_synchronous(s, g)
    mc = game.monte_carlo_play(s, g, 20000, seed=ctx.seed)
    return abs(mc.rate - exact) <= 4 * mc.stderr, {"exact": exact, "rate": mc.rate, "stderr": mc.stderr}


@check("game.two_prover_embedding")
def _two_prover(ctx):
    code = codes.make_reed_solomon(3, 3, 1)
    s = strategies.random_strategy(code, 2, 2, seed=ctx.seed)
    g = game.build_two_prover_game(code, 2)
    sync = game.evaluate_synchronous(s, g)
    val, rep = game.evaluate_bipartite(game.embed_synchronous(s), g)
    ok = abs(rep.xi) <= 1e-10 and abs(sync - val) <= 1e-10
    return ok, {"xi": rep.xi, "value": val, "synchronous": sync}


@check("game.symmetrize")
def _symmetrize(ctx):
    code = codes.make_reed_solomon(3, 3, 1)
    g = game.build_two_prover_game(code, 2)
    a = strategies.random_strategy(code, 2, 2, seed=ctx.seed)
    b = strategies.random_strategy(code, 2, 2, seed=ctx.seed + 1)
    rng = np.random.default_rng(ctx.seed)
    psi = rng.normal(size=4) + 1j * rng.normal(size=4)
    s = game.BipartiteStrategy(psi / np.linalg.norm(psi), a, b)
    v0, _ = game.evaluate_bipartite(s, g)
    sym = game.symmetrize(s)
    v1, _ = game.evaluate_bipartite(sym, g)
    return abs(v0 - v1) <= 1e-9 and game.is_symmetric_form(sym), {"before": v0, "after": v1}


@check("opalg.metric_calculus")
def _metrics(ctx):
    bad = 0
    for i in range(10):
        M = opalg.random_projective_measurement(3, 3, seed=(ctx.seed, i, 0))
        N = opalg.random_projective_measurement(3, 3, seed=(ctx.seed, i, 1))
        fm, fn = opalg.MeasurementFamily([0], [M]), opalg.MeasurementFamily([0], [N])
        c, d = opalg.consistency(fm, fn), opalg.closeness(fm, fn)
        bad += int(d > math.sqrt(2 * c) + 1e-9) + int(c > d + 1e-9)
    return bad == 0, {"violations": bad}


@check("opalg.orthogonalize")
def _ortho(ctx):
    bad = 0
    worst = 0.0
    for i in range(50):
        A = opalg.near_projective(4, 3, noise=0.05, seed=(ctx.seed, i))
        if opalg.projectivity_deficit(A) > 0.05:
            continue
        res = ctx.orthogonalizer(A)
        P = res.measurement.elements
        dist = float(np.sqrt(np.sum(np.abs(A.elements - P) ** 2) / A.r))
        zeta = opalg.projectivity_deficit(A)
        projective = np.max(np.abs(P @ P - P)) <= 1e-8
        bad += int(dist > math.sqrt(18 * zeta) + 1e-12 or not projective)
        worst = max(worst, dist / max(math.sqrt(18 * zeta), 1e-300))
    return bad == 0, {"failures": bad, "worst_ratio": worst}


@check("duality.scalar_and_gap")
def _duality(ctx):
    sol = duality.solve_duality(np.array([0.2, 0.7, 0.1]).reshape(3, 1, 1), normalize=False)
    ok = abs(sol.primal - 0.7) <= 1e-6 and sol.gap <= 1e-6
    A = np.stack([opalg.random_psd(3, seed=(ctx.seed, i)) for i in range(4)])
    A /= np.linalg.eigvalsh(A.sum(0)).max()
    sol2 = duality.solve_duality(A)
    feas = min(np.linalg.eigvalsh(sol2.W - a / 3).min() for a in A)
    ok = ok and sol2.gap <= 1e-6 and feas >= -1e-7
    return ok, {"scalar_primal": sol.primal, "gap": sol2.gap, "feasibility": float(feas)}


@check("extract.honest_fixed_point")
def _fixed_point(ctx):
    code = _code()
    c = tensor.tensor_encode(code, 2, [[1, 2], [3, 4]])
    s = strategies.honest_strategy(c)
    idx = int(extract.codeword_rank(code, 2, c.table[None])[0])
    imp = extract.self_improve(s, extract.indicator_measurement(code, 2, idx))
    ok = np.max(np.abs(imp.H.elements[idx] - 1)) <= 1e-8 and imp.zeta <= 1e-8
    return ok, {"zeta": imp.zeta, "completeness": imp.completeness}


@check("extract.classical_decoding")
def _decode(ctx):
    code = _code()
    c = tensor.tensor_encode(code, 2, [[1, 2], [3, 4]])
    s = strategies.corrupt(strategies.honest_strategy(c), strategies.CorruptionModel(rate=0.04, seed=ctx.seed))
    G, rep = extract.extract_global(s)
    pts = np.argmax(s.points[:, :, 0, 0].real, axis=1)
    nearest = int(np.argmin((extract.codeword_tables(code, 2) != pts).sum(axis=1)))
    return G.mode() == nearest and rep.decoded_weight > 1 - 1e-8, {"eta": rep.eta}


@check("extract.binomial_product_model")
def _product(ctx):
    code = _code()
    c = tensor.tensor_encode(code, 2, [[1, 2], [3, 4]])
    s = strategies.honest_strategy(c)
    kappa, k = 0.3, 4
    idx = [int(extract.codeword_rank(code, 1, tensor.restrict_slice(c, x).table[None])[0]) for x in range(code.n)]
    total = 0.0
    for S in itertools.product([0, 1], repeat=code.n):
        w = float(np.prod([(1 - kappa) if b else kappa for b in S]))
        slices = [extract.indicator_measurement(code, 1, idx[x]) if S[x]
                  else extract.CodewordMeasurement(code, 1, np.zeros((code.size, 1, 1))) for x in range(code.n)]
        total += w * extract.paste_method2(s, slices, extract.PastingConfig(k=k)).completeness
    target = spectral.binomial_tail(k, code.t, 1 - kappa)
    return abs(total - target) <= 1e-6, {"measured": total, "formula": target}


@check("spectral.gap")
def _gap(ctx):
    errs = [abs(spectral.axis_graph(n, m).lambda2 - 1 / (m * n**m)) for n, m in ((3, 1), (3, 2), (4, 2), (3, 3))]
    return max(errs) <= 1e-9, {"max_error": max(errs)}


@check("spectral.chernoff")
def _chernoff(ctx):
    bad = 0
    for i in range(20):
        U = opalg.random_unitary(4, seed=(ctx.seed, i))
        w = np.random.default_rng((ctx.seed, i)).uniform(0.7, 1.0, 4)
        G = (U * w) @ U.conj().T
        res = spectral.chernoff_operator_check(G, 20, 2, 1 / 6, require_precondition=False)
        bad += int(not res.ok)
    return bad == 0, {"violations": bad}


@check("spectral.tv_distance")
def _tv(ctx):
    bad = 0
    for n in range(1, 7):
        for k in range(1, min(3, n) + 1):
            bad += int(spectral.tv_uniform_vs_distinct(n, k) > min(Fraction(k * k, n), Fraction(k * (k - 1), 2 * n)))
    return bad == 0, {"violations": bad}


@check("extract.commutators")
def _comm(ctx):
    code = _code()
    c = tensor.tensor_encode(code, 2, [[1, 2], [3, 4]])
    honest = extract.commutator_report(strategies.honest_strategy(c))
    exhibit = strategies.anticommuting_pair_strategy()
    rep = game.goodness_synchronous(exhibit, game.build_game(exhibit.code, exhibit.m))
    ok = honest.points == 0 and rep.subcube_pass <= 0.99
    return ok, {"honest": honest.points, "exhibit_subcube_pass": rep.subcube_pass}


def run_checks(names=None, seed: int = 0, orthogonalizer: Callable | None = None) -> list[CheckResult]:
    ctx = Context(seed, orthogonalizer or opalg.orthogonalize)
    out = []
    for name in names or CHECKS:
        try:
            ok, detail = CHECKS[name](ctx)
        except Exception as exc:  # a crashing check is a failing row
            ok, detail = False, {"error": f"{type(exc).__name__}: {exc}"}
        out.append(CheckResult(name, bool(ok), detail))
    return out


def perturbed_orthogonalize(shift: float):
    """A deliberately wrong rounding, used to confirm the suite catches a broken step."""
    def rounding(A):
        res = opalg.orthogonalize(A)
        E = res.measurement.elements + shift * np.eye(A.r)[None]
        return opalg.RoundingResult(opalg.Submeasurement(A.labels, E), res.zeta, res.distance, res.bound)
    return rounding
