"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or directly with
``python3 tests/test_acceptance.py``.
"""

import sys

import numpy as np
import pytest

from phstriplet.boundary_calculus import (
    domain_law_residual,
    is_dissipative_subspace,
    phi,
    psi,
    random_admissible_w,
    random_contraction,
    theta,
    theta_section,
    validate_w,
    w_kernel_subspace,
)
from phstriplet.cayley import (
    cayley_transform,
    inverse_cayley,
    random_dissipative,
    resolvent_bound_check,
)
from phstriplet.cli_io import green_sweep
from phstriplet.discretization import (
    assemble,
    bump,
    dissipativity_margin,
    max_energy_increase,
    power_balance_residual,
    simulate,
)
from phstriplet.numerics import Tolerances, numerical_rank, operator_norm
from phstriplet.phs_model import (
    GridFunction,
    construct_canonical_triplet,
    deficiency_basis,
    domain_decompose,
    green_identity_terms,
    smooth_random_function,
    transport_system,
    wave_system,
)

SAMPLES = 1000
RESOLVENT_TOL = Tolerances(eq_abs=1e-9)


def report(number, ok, detail, capsys=None):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    if capsys is None:
        print(line)
    else:
        with capsys.disabled():
            print(f"\n{line}")
    return ok


def criterion_1():
    rng = np.random.default_rng(1)
    worst = dict(norm=0.0, iso=0.0, trip=0.0, resolvent=np.inf)
    resolvent_ok = True
    lams = (1e-2, 1.0, 1e2)
    for _ in range(SAMPLES):
        d = int(rng.integers(1, 9))
        A = random_dissipative(
            rng, d, skew_scale=rng.uniform(0, 10), damping_scale=rng.uniform(0, 10), rank=int(rng.integers(0, d + 1))
        )
        C = cayley_transform(A)
        worst["norm"] = max(worst["norm"], operator_norm(C))
        back = inverse_cayley(C)
        worst["trip"] = max(worst["trip"], np.linalg.norm(back - A) / max(np.linalg.norm(A), 1e-300))

        S = 0.5 * (A - A.conj().T)
        Cs = cayley_transform(S)
        worst["iso"] = max(worst["iso"], np.linalg.norm(Cs.conj().T @ Cs - np.eye(d), 2))

        resolvent_ok &= resolvent_bound_check(A, lams, samples=8, tol=RESOLVENT_TOL, rng=rng)
        for lam in lams:
            # min over unit x of ||(lam - A) x|| - lam
            smin = np.linalg.svd(lam * np.eye(d) - A, compute_uv=False)[-1]
            worst["resolvent"] = min(worst["resolvent"], smin - lam)
    ok = (
        worst["norm"] <= 1 + 1e-10
        and worst["iso"] <= 1e-10
        and worst["trip"] <= 1e-9
        and resolvent_ok
        and worst["resolvent"] >= -1e-9
    )
    detail = (
        f"max||C||-1={worst['norm'] - 1:.1e} iso={worst['iso']:.1e} roundtrip={worst['trip']:.1e} "
        f"min(smin-lam)={worst['resolvent']:.1e}"
    )
    return ok, detail


def criterion_2():
    rng = np.random.default_rng(2)
    entry = angle = 0.0
    for _ in range(SAMPLES):
        d = int(rng.integers(1, 9))
        K = random_contraction(rng, d, norm=1.0 if rng.random() < 0.2 else None)
        V = psi(K)
        K_back = phi(V).extend()
        entry = max(entry, np.max(np.abs(K_back - K)))
        angle = max(angle, psi(K_back).distance(V))
    return entry <= 1e-9 and angle <= 1e-9, f"max|phi(psi K)-K|={entry:.1e} max angle={angle:.1e}"


def criterion_3():
    rng = np.random.default_rng(3)
    section = norm = angle = law = 0.0
    for _ in range(SAMPLES):
        d = int(rng.integers(1, 9))
        K = random_contraction(rng, d, norm=1.0 if rng.random() < 0.2 else None)
        section = max(section, np.max(np.abs(theta(theta_section(K)) - K)))
    admissible = True
    for _ in range(SAMPLES):
        d = int(rng.integers(1, 9))
        W = random_admissible_w(rng, d)
        admissible &= validate_w(W).admissible
        K = theta(W)
        norm = max(norm, operator_norm(K))
        angle = max(angle, w_kernel_subspace(W).distance(psi(K)))
        law = max(law, domain_law_residual(W, K))
    ok = admissible and section <= 1e-10 and norm <= 1 + 1e-9 and angle <= 1e-9 and law <= 1e-9
    detail = f"section={section:.1e} max||K||-1={norm - 1:.1e} angle={angle:.1e} law={law:.1e}"
    return ok, detail


def criterion_4():
    rng = np.random.default_rng(4)
    mismatches = positives = 0
    for k in range(SAMPLES):
        d = int(rng.integers(1, 7))
        if k % 2:
            W = random_admissible_w(rng, d)
        else:
            W = rng.standard_normal((d, 2 * d)) + 1j * rng.standard_normal((d, 2 * d))
        assert numerical_rank(W) == d
        v = validate_w(W)
        positives += v.psd_ok
        mismatches += v.psd_ok != is_dissipative_subspace(w_kernel_subspace(W))

    sweep_bad = sweep_used = 0
    base = transport_system()
    for t in range(181):
        th = np.deg2rad(t)
        for p in range(13):
            ph = np.deg2rad(30 * p)
            W = np.array([[np.cos(th), np.exp(1j * ph) * np.sin(th)]])
            margin = dissipativity_margin(assemble(base.with_w(W), 64, check=False))
            if abs(margin) <= 1e-6:
                continue
            sweep_used += 1
            sweep_bad += validate_w(W).admissible != (margin < 0)
    ok = mismatches == 0 and sweep_bad == 0
    detail = (
        f"random: {mismatches} mismatches / {SAMPLES} ({positives} admissible); "
        f"sweep: {sweep_bad} disagreements / {sweep_used} non-degenerate points"
    )
    return ok, detail


def criterion_5():
    ratios = {}
    for name, sys_ in (("transport", transport_system()), ("wave", wave_system())):
        coarse, fine = green_sweep(sys_, 64, 8, seed=0)
        ratios[name] = coarse / fine
    sys_ = transport_system()
    x = GridFunction.sample(lambda xi: xi, sys_, 200)
    y = GridFunction.sample(np.ones_like, sys_, 200)
    lhs, rhs = green_identity_terms(x, y, sys_)
    anchor_ok = abs(lhs + 1) <= 1e-3 and abs(rhs + 1) <= 1e-3
    ok = anchor_ok and all(3.2 <= r <= 4.8 for r in ratios.values())
    detail = (
        f"ratio transport={ratios['transport']:.3f} wave={ratios['wave']:.3f}; "
        f"anchor lhs={lhs.real:.6f} rhs={rhs.real:.6f}"
    )
    return ok, detail


def criterion_6():
    sys_ = transport_system()
    n = 200
    plus = deficiency_basis(sys_, +1, n)
    minus = deficiency_basis(sys_, -1, n)
    xi = plus.grid
    kern = max(
        np.max(np.abs(plus.values[:, 0, 0] - np.exp(-xi))),
        np.max(np.abs(minus.values[:, 0, 0] - np.exp(xi))),
    )
    x = GridFunction.sample(np.ones_like, sys_, n)
    dec = domain_decompose(x, sys_, plus=plus, minus=minus)
    beta = (1 - np.exp(-1)) / (np.e - np.exp(-1))
    alpha = 1 - beta
    err_b = abs(dec.coeff_minus[0] - beta)
    err_a = abs(dec.coeff_plus[0] - alpha)
    back = dec.x1 + plus.combine(dec.coeff_plus) + minus.combine(dec.coeff_minus)
    reass = np.max(np.abs(back.values - x.values))
    ok = kern <= 1e-8 and err_a <= 1e-8 and err_b <= 1e-8 and reass <= 1e-9
    detail = f"kernel={kern:.1e} |alpha err|={err_a:.1e} |beta err|={err_b:.1e} reassembly={reass:.1e}"
    return ok, detail


def criterion_7():
    sys_ = transport_system()
    rng = np.random.default_rng(7)
    T = construct_canonical_triplet(sys_, 200)
    surj = 0.0
    for _ in range(200):
        y1 = rng.standard_normal(1) + 1j * rng.standard_normal(1)
        y2 = rng.standard_normal(1) + 1j * rng.standard_normal(1)
        g = T(T.preimage(y1, y2))
        surj = max(surj, np.max(np.abs(g.g1 - y1)), np.max(np.abs(g.g2 - y2)))
    pairs = [(smooth_random_function(rng, 1, 0, 1), smooth_random_function(rng, 1, 0, 1)) for _ in range(8)]
    res = []
    for n in (64, 128):
        Tn = construct_canonical_triplet(sys_, n)
        res.append(
            max(Tn.green_identity_residual(GridFunction.sample(f, sys_, n), GridFunction.sample(g, sys_, n)) for f, g in pairs)
        )
    ratio = res[0] / res[1]
    ok = surj <= 1e-8 and 3.2 <= ratio <= 4.8
    return ok, f"surjectivity error={surj:.1e}; Green residual {res[0]:.2e} -> {res[1]:.2e} (ratio {ratio:.3f})"


def criterion_8():
    n, dt = 200, 1e-3
    sys_ = transport_system()
    G = assemble(sys_, n)
    traj = simulate(G, GridFunction.sample(bump(), sys_, n), 2.0, dt, keep_states=False)
    inc = max_energy_increase(traj)
    decay = traj.energies[-1] / traj.energies[0]
    pbr = power_balance_residual(traj)
    dissipative_ok = inc <= 1e-10 and decay <= 0.05 and pbr <= 1e-2

    cons = transport_system(W=[[1.0, 0.0]])
    Gc = assemble(cons, n)
    tc = simulate(Gc, GridFunction.sample(bump(), cons, n), 2.0, dt, keep_states=False)
    drift = abs(tc.energies[-1] - tc.energies[0]) / tc.energies[0]

    bad = transport_system(W=[[1.0, -1.0]])
    Gb = assemble(bad, n, check=False)
    margin = dissipativity_margin(Gb)
    x0 = GridFunction.sample(smooth_random_function(np.random.default_rng(8), 1, 0, 1), bad, n)
    tb = simulate(Gb, x0, 0.2, dt, keep_states=False)
    grows = tb.energies[-1] > tb.energies[0]

    ok = dissipative_ok and drift <= 1e-8 and margin > 0 and grows
    detail = (
        f"W=[1,1]: max step increase={inc:.1e} E(2)/E(0)={decay:.1e} power residual={pbr:.1e}; "
        f"W=[1,0]: drift={drift:.1e}; W=[1,-1]: margin={margin:.1f} E(T)/E(0)={tb.energies[-1] / tb.energies[0]:.1e}"
    )
    return ok, detail


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8]


@pytest.mark.parametrize("number", range(1, 9))
def test_criterion(number, capsys):
    ok, detail = CRITERIA[number - 1]()
    assert report(number, ok, detail, capsys), detail


if __name__ == "__main__":
    results = [report(k, *fn()) for k, fn in enumerate(CRITERIA, start=1)]
    sys.exit(0 if all(results) else 1)
