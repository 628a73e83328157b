"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""
import itertools
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from tensor_game.codes import make_reed_solomon
from tensor_game.duality import solve_duality, slackness_residual
from tensor_game.extract import (
    CodewordMeasurement,
    PastingConfig,
    codeword_rank,
    codeword_tables,
    commutator_report,
    extract_global,
    indicator_measurement,
    paste_method2,
    self_improve,
)
from tensor_game.game import (
    BipartiteStrategy,
    build_game,
    build_two_prover_game,
    embed_synchronous,
    evaluate_bipartite,
    evaluate_synchronous,
    goodness_synchronous,
    monte_carlo_play,
    symmetrize,
)
from tensor_game.opalg import (
    MeasurementFamily,
    closeness,
    consistency,
    data_process,
    near_projective,
    one_norm,
    op_norm,
    orthogonalize,
    random_hermitian,
    random_projective_measurement,
    random_psd,
    random_submeasurement,
    random_unitary,
    tau_norm,
    trace_state,
)
from tensor_game.spectral import axis_graph, binomial_tail, chernoff_operator_check, tv_uniform_vs_distinct
from tensor_game.strategies import (
    CorruptionModel,
    anticommuting_pair_strategy,
    corrupt,
    honest_strategy,
    random_strategy,
)
from tensor_game.tensor import restrict_slice, tensor_encode

from oracles import nearest_codeword


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail=""):
        with capsys.disabled():
            print(f"\n[criterion {number:2d}] {'PASS' if ok else 'FAIL'}  {title}  {detail}")
        assert ok, f"criterion {number} failed: {detail}"
    return emit


def brute_min_weight(words):
    return min(int(np.count_nonzero(w)) for w in words if np.any(w))


def all_codewords(G, q):
    msgs = np.array(list(itertools.product(range(q), repeat=G.shape[1])))
    return msgs @ G.T % q


def test_c01_honest_completeness(report):
    start = time.perf_counter()
    code = make_reed_solomon(5, 5, 1)
    c = tensor_encode(code, 2, [[1, 2], [3, 4]])
    value = evaluate_synchronous(honest_strategy(c), build_game(code, 2))
    took = time.perf_counter() - start
    report(1, "honest completeness", abs(value - 1) <= 1e-10 and took < 60, f"value={value!r} time={took:.2f}s")


def test_c02_distances(report):
    bad = []
    for q in (3, 5, 7):
        for n in range(2, q + 1):
            for s in range(1, n):
                code = make_reed_solomon(q, n, s)
                if brute_min_weight(all_codewords(code.G, q)) != n - s:
                    bad.append((q, n, s))
    tensor_ok = []
    for q, n, s in [(3, 3, 1), (5, 5, 1)]:
        code = make_reed_solomon(q, n, s)
        k = code.k
        tables = [tensor_encode(code, 2, np.array(cf).reshape(k, k)).table
                  for cf in itertools.product(range(q), repeat=k * k)]
        tensor_ok.append(brute_min_weight(tables) == (n - s) ** 2)
    report(2, "code and tensor distances", not bad and all(tensor_ok), f"base_failures={bad} tensor={tensor_ok}")


def test_c03_interpolation_uniqueness(report):
    from tensor_game.codes import interpolate

    rng = np.random.default_rng(3)
    failures = 0
    params = [(3, 3, 1), (5, 5, 1), (5, 4, 2), (7, 7, 3), (7, 5, 1)]
    for q, n, s in params:
        code = make_reed_solomon(q, n, s)
        words = all_codewords(code.G, q)
        for _ in range(200):
            coords = rng.choice(n, code.t, replace=False)
            vals = rng.integers(0, q, code.t)
            hits = words[np.all(words[:, coords] == vals, axis=1)]
            failures += int(len(hits) != 1 or not np.array_equal(hits[0], interpolate(code, coords, vals)))
    report(3, "interpolation uniqueness", failures == 0, f"codes={len(params)} failures={failures}")


def test_c04_spectral_gap(report):
    errs = {(n, m): abs(axis_graph(n, m).lambda2 - 1 / (m * n**m)) for n, m in [(3, 1), (3, 2), (4, 2), (3, 3)]}
    report(4, "spectral gap", max(errs.values()) <= 1e-9, f"max_error={max(errs.values()):.2e}")


def test_c05_metric_calculus(report):
    tol = 1e-9
    counts = dict.fromkeys(["data_processing", "closeness_from_consistency", "consistency_from_closeness",
                            "holder", "triangle"], 0)
    coarse = {0: 0, 1: 0, 2: 1, 3: 1}
    for seed in range(100):
        rng = np.random.default_rng(seed)
        M = MeasurementFamily([0, 1], [random_projective_measurement(4, 4, seed=rng) for _ in range(2)])
        N = MeasurementFamily([0, 1], [random_submeasurement(4, 4, seed=rng) for _ in range(2)])
        P = MeasurementFamily([0, 1], [random_submeasurement(4, 4, seed=rng) for _ in range(2)])
        c, d = consistency(M, N), closeness(M, N)
        fM = MeasurementFamily([0, 1], [data_process(x, coarse) for x in M.measurements])
        fN = MeasurementFamily([0, 1], [data_process(x, coarse) for x in N.measurements])
        counts["data_processing"] += consistency(fM, fN) > c + tol
        counts["closeness_from_consistency"] += d > math.sqrt(2 * c) + tol
        counts["consistency_from_closeness"] += c > d + tol
        X = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        Y = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        counts["holder"] += int(abs(trace_state(X @ Y)) > one_norm(X) * op_norm(Y) + tol
                             or abs(trace_state(X @ Y)) > tau_norm(X) * tau_norm(Y) + tol)
        counts["triangle"] += int(closeness(M, P) > d + closeness(N, P) + tol
                               or tau_norm(X + Y) > tau_norm(X) + tau_norm(Y) + tol)
    report(5, "metric calculus", not any(counts.values()), f"violations={counts}")


def test_c06_orthogonalization(report):
    done, failures, worst, seed = 0, 0, 0.0, 0
    while done < 100:
        rng = np.random.default_rng(seed)
        seed += 1
        A = near_projective(4, 3, noise=float(rng.uniform(0, 0.1)), seed=rng)
        res = orthogonalize(A)
        if res.zeta > 0.05:
            continue
        done += 1
        P = res.measurement
        projective = P.is_projective()
        dist = math.sqrt(np.sum(np.abs(A.elements - P.elements) ** 2) / A.r)
        failures += int(not projective or dist > math.sqrt(18 * res.zeta) + 1e-12)
        worst = max(worst, dist / max(math.sqrt(18 * res.zeta), 1e-300))
    report(6, "orthogonalization", failures == 0, f"instances={done} failures={failures} worst_ratio={worst:.3f}")


def test_c07_duality(report):
    gaps, feas, resid = [], [], []
    for seed in range(10):
        r = 2 + seed % 3
        A = np.stack([random_psd(r, seed=(seed, i), rank=1 + i % r) for i in range(3 + seed % 4)])
        A /= np.linalg.eigvalsh(A.sum(0)).max()
        sol = solve_duality(A)
        gaps.append(sol.gap)
        feas.append(min(np.linalg.eigvalsh(sol.W - a / r).min() for a in A))
        rng = np.random.default_rng(seed)
        resid.append(max(slackness_residual(sol, A, random_hermitian(r, seed=rng)) for _ in range(20)))
    scalar = solve_duality(np.array([0.2, 0.7, 0.1]).reshape(3, 1, 1), normalize=False)
    ok = (max(gaps) <= 1e-6 and min(feas) >= -1e-7 and max(resid) <= 1e-5
          and abs(scalar.primal - 0.7) <= 1e-6 and np.argmax(scalar.T[:, 0, 0].real) == 1)
    report(7, "duality", ok, f"max_gap={max(gaps):.2e} min_slack={min(feas):.2e} max_cs={max(resid):.2e} "
                             f"scalar={scalar.primal:.9f}")


def test_c08_self_improvement(report):
    code = make_reed_solomon(5, 5, 1)
    c = tensor_encode(code, 2, [[1, 2], [3, 4]])
    idx = int(codeword_rank(code, 2, c.table[None])[0])
    imp = self_improve(honest_strategy(c), indicator_measurement(code, 2, idx))
    fixed = (np.abs(imp.H.elements - indicator_measurement(code, 2, idx).elements).max() <= 1e-8
             and max(imp.nu, imp.zeta, imp.inconsistency, imp.psi_deficit) <= 1e-8)
    small = make_reed_solomon(3, 3, 1)
    c3 = tensor_encode(small, 2, [[1, 0], [2, 1]])
    margins = []
    for seed in range(8):
        s = random_strategy(small, 2, 2, seed=seed, honest=c3, noise=0.1 * (seed % 4))
        G = CodewordMeasurement(small, 2, random_projective_measurement(2, 81, seed=seed, allow_empty=True).elements)
        run = self_improve(s, G, check=False)
        margins.append(run.completeness - (1 - run.nu - run.zeta))
    report(8, "self-improvement", fixed and min(margins) >= -1e-9,
           f"honest_zeta={imp.zeta:.1e} min_margin={min(margins):.3e}")


@pytest.fixture(scope="module")
def decoding_runs():
    code = make_reed_solomon(5, 5, 1)
    c = tensor_encode(code, 2, [[1, 2], [3, 4]])
    base = honest_strategy(c)
    words = codeword_tables(code, 2).tolist()
    runs = {}
    for rho in (0.0, 0.01, 0.02, 0.03, 0.04, 0.05):
        s = corrupt(base, CorruptionModel(rate=rho, seed=0))
        received = np.argmax(s.points[:, :, 0, 0].real, axis=1).tolist()
        start = time.perf_counter()
        G, rep = extract_global(s)
        runs[rho] = (G, rep, time.perf_counter() - start, nearest_codeword(words, received))
    return runs


def test_c09_classical_decoding(report, decoding_runs):
    rows = []
    ok = True
    for rho, (G, rep, took, (best, dist)) in decoding_runs.items():
        if rho == 0:
            continue
        hit = G.mode() == best and rep.decoded_weight >= 1 - 1e-8 and took < 600
        ok &= hit
        rows.append(f"rho={rho}:{'ok' if hit else 'miss'}(d={dist},{took:.1f}s)")
    report(9, "classical decoding", ok, " ".join(rows))


def test_c10_eta_monotone(report, decoding_runs):
    etas = [decoding_runs[rho][1].eta for rho in sorted(decoding_runs)]
    ok = etas[0] <= 1e-8 and all(b >= a - 1e-12 for a, b in zip(etas, etas[1:]))
    report(10, "eta nondecreasing in rho", ok, "eta=" + ",".join(f"{e:.3g}" for e in etas))


def test_c11_method2_completeness(report):
    code = make_reed_solomon(5, 5, 1)
    c = tensor_encode(code, 2, [[1, 2], [3, 4]])
    s = honest_strategy(c)
    idx = [int(codeword_rank(code, 1, restrict_slice(c, x).table[None])[0]) for x in range(5)]
    empty = CodewordMeasurement(code, 1, np.zeros((code.size, 1, 1)))
    errors = []
    for k in range(code.t, code.n + 1):
        for kappa in (0.1, 0.3, 0.6):
            total = 0.0
            for S in itertools.product([0, 1], repeat=code.n):
                w = math.prod((1 - kappa) if b else kappa for b in S)
                slices = [indicator_measurement(code, 1, idx[x]) if S[x] else empty for x in range(code.n)]
                total += w * paste_method2(s, slices, PastingConfig(k=k)).completeness
            errors.append(abs(total - binomial_tail(k, code.t, 1 - kappa)))
    chern_bad = 0
    for i in range(100):
        rng = np.random.default_rng(i)
        U = random_unitary(4, seed=rng)
        G = (U * rng.uniform(0.5, 1.0, 4)) @ U.conj().T
        chern_bad += not chernoff_operator_check(G, 20, 2, 1 / 6, require_precondition=False).ok
    report(11, "method-2 completeness", max(errors) <= 1e-6 and chern_bad == 0,
           f"product_model_max_error={max(errors):.1e} chernoff_failures={chern_bad}")


def test_c12_tv_bound(report):
    bad = []
    for n in range(1, 7):
        for k in range(1, min(3, n) + 1):
            tv = tv_uniform_vs_distinct(n, k)
            if tv > Fraction(k * k, n):
                bad.append((n, k, tv))
    report(12, "tv bound", not bad, f"violations={bad}")


def test_c13_commutators(report):
    code = make_reed_solomon(5, 5, 1)
    honest = commutator_report(honest_strategy(tensor_encode(code, 2, [[1, 2], [3, 4]]))).points
    exhibit = anticommuting_pair_strategy()
    sub = goodness_synchronous(exhibit, build_game(exhibit.code, 2)).subcube_pass
    small = make_reed_solomon(3, 3, 1)
    c3 = tensor_encode(small, 2, [[0, 1], [1, 1]])
    bad = 0
    for seed in range(8):
        s = random_strategy(small, 2, 2, seed=seed, honest=c3, noise=0.15 * (seed % 4))
        rep = commutator_report(s)
        bad += rep.points > math.sqrt(32 * (s.m + 1) * rep.delta) + 1e-9
    report(13, "commutator diagnostics", honest == 0 and sub <= 0.99 and bad == 0,
           f"honest={honest} exhibit_subcube_pass={sub:.4f} random_violations={bad}")


def test_c14_monte_carlo(report):
    code = make_reed_solomon(3, 3, 1)
    game = build_game(code, 2)
    c = tensor_encode(code, 2, [[2, 1], [0, 1]])
    zs = []
    for seed in range(10):
        s = random_strategy(code, 2, 2, seed=seed, honest=c, noise=0.1 * seed)
        exact = evaluate_synchronous(s, game)
        mc = monte_carlo_play(s, game, 10**5, seed=seed)
        zs.append(abs(mc.rate - exact) / mc.stderr if mc.stderr > 1e-12 else abs(mc.rate - exact) * 1e12)
    report(14, "monte-carlo referee", max(zs) <= 3, "max_z=" + f"{max(zs):.2f}")


def test_c15_two_prover(report):
    code = make_reed_solomon(3, 3, 1)
    g2 = build_two_prover_game(code, 2)
    embed_err, xis, sym_err = [], [], []
    for seed in range(10):
        s = random_strategy(code, 2, 2, seed=seed)
        val, rep = evaluate_bipartite(embed_synchronous(s), g2)
        embed_err.append(abs(val - evaluate_synchronous(s, g2)))
        xis.append(abs(rep.xi))
        b = random_strategy(code, 2, 2, seed=seed + 50)
        rng = np.random.default_rng(seed)
        psi = rng.normal(size=4) + 1j * rng.normal(size=4)
        bp = BipartiteStrategy(psi / np.linalg.norm(psi), s, b)
        sym_err.append(abs(evaluate_bipartite(symmetrize(bp), g2)[0] - evaluate_bipartite(bp, g2)[0]))
    ok = max(xis) <= 1e-10 and max(embed_err) <= 1e-10 and max(sym_err) <= 1e-9
    report(15, "two-prover embedding and symmetrization", ok,
           f"max_xi={max(xis):.1e} max_embed_err={max(embed_err):.1e} max_sym_err={max(sym_err):.1e}")
