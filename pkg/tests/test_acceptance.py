"""Acceptance suite: fourteen criteria at their stated tolerances.

Each criterion prints one PASS/FAIL line.  Run standalone with
``python tests/test_acceptance.py`` or through pytest.
"""

from __future__ import annotations

import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))
import _draws as draw  # noqa: E402

from sigmaspace import (  # noqa: E402
    AvarSpectrum,
    Constant,
    FiniteSpace,
    Log,
    Partition,
    Power,
    RandomVector,
    SlotCoupling,
    bound_chain,
    compare_p,
    comonotone_slots,
    dual_contraction_under_coarsening,
    dual_norm_inf,
    dual_norm_q,
    holder_bound,
    lipschitz_check,
    norm,
    norm_via_coupling,
    p_norm,
    pairing,
    parallelogram_residual,
    rho_assignment,
    rho_scalar,
    sigma_dominates,
)
from sigmaspace.envelope import envelope  # noqa: E402
from sigmaspace.oracle import enumerate_rho, grid_biconjugate, search_dual_pairing  # noqa: E402
from sigmaspace.prob_core import ValidationError, leq  # noqa: E402
from sigmaspace.sigma_norm import norm_via_orders  # noqa: E402

VECNORMS = (1.0, 2.0, 3.0, math.inf)
SEARCH_RESTARTS = 2_000
CRITERIA: dict[int, tuple[str, object]] = {}


def criterion(number: int, title: str):
    def register(fn):
        CRITERIA[number] = (title, fn)
        return fn

    return register


def _abs(Z: RandomVector) -> RandomVector:
    return Z.with_values(np.abs(Z.values))


# ---------------------------------------------------------------------------


@criterion(1, "constant sigma reduces to the L^p norm")
def c1():
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(1000):
        Y = draw.vector(rng, int(rng.integers(1, 17)), int(rng.integers(1, 5)))
        p = float(rng.uniform(1.0, 6.0))
        r = VECNORMS[int(rng.integers(4))]
        a, b = norm(Y, Constant(), p, r), p_norm(Y, p, r)
        worst = max(worst, abs(a - b) / max(1.0, abs(b)))
    return worst <= 1e-12, f"max scaled deviation {worst:.2e}"


@criterion(2, "comonotone slots attain the norm, other couplings stay below")
def c2():
    rng = np.random.default_rng(102)
    worst_excess, worst_attain, worst_batch = 0.0, 0.0, 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 17))
        Y = draw.vector(rng, n, int(rng.integers(1, 4)))
        sigma = draw.sigma(rng)
        p = float(rng.uniform(1.0, 4.0))
        full = norm(Y, sigma, p)
        scale = max(1.0, full)
        orders = np.argsort(rng.random((1000, n)), axis=1)
        vals = norm_via_orders(Y, sigma, p, orders)
        worst_excess = max(worst_excess, float((vals - full).max()) / scale)
        attained = norm_via_coupling(Y, sigma, p, comonotone_slots(Y.magnitudes(), Y.space))
        worst_attain = max(worst_attain, abs(attained - full) / scale)
        # the batch path agrees with the one-coupling path
        for order in orders[:3]:
            single = norm_via_coupling(Y, sigma, p, SlotCoupling.from_order(Y.space, order))
            worst_batch = max(worst_batch, abs(single - norm_via_orders(Y, sigma, p, order)[0]) / scale)
    ok = worst_excess <= 1e-12 and worst_attain <= 1e-12 and worst_batch <= 1e-12
    detail = f"max excess {worst_excess:.2e}, comonotone deviation {worst_attain:.2e}, batch deviation {worst_batch:.2e}"
    return ok, detail


@criterion(3, "contraction chain L^p <= sigma-norm <= sup")
def c3():
    rng = np.random.default_rng(103)
    bad = 0
    for _ in range(1000):
        Y = draw.vector(rng, int(rng.integers(1, 17)), int(rng.integers(1, 5)))
        sigma = draw.sigma(rng)
        p = float(rng.uniform(1.0, 6.0))
        r = VECNORMS[int(rng.integers(4))]
        lo, mid, hi = p_norm(Y, p, r), norm(Y, sigma, p, r), p_norm(Y, math.inf, r)
        bad += not (leq(lo, mid, 1e-12) and leq(mid, hi, 1e-12))
    return bad == 0, f"{bad} violations in 1000 draws"


@criterion(4, "p-monotonicity and the Hoelder bound")
def c4():
    rng = np.random.default_rng(104)
    bad_cmp = bad_hold = skipped = 0
    for _ in range(1000):
        Y = draw.vector(rng, int(rng.integers(1, 17)), int(rng.integers(1, 4)))
        sigma = draw.sigma(rng)
        p = float(rng.uniform(1.0, 4.0))
        pp = p + float(rng.uniform(0.1, 4.0))
        bad_cmp += not compare_p(Y, sigma, p, pp).holds
        try:
            bad_hold += not holder_bound(Y, sigma, p, pp).holds
        except ValidationError:
            skipped += 1
    return bad_cmp == bad_hold == 0, f"compare_p failures {bad_cmp}, holder failures {bad_hold}, infinite power integrals {skipped}"


def _duality_draws(seed: int, count: int = 100):
    rng = np.random.default_rng(seed)
    fams = [Constant(), AvarSpectrum(0.3), Power(2.0)]
    out = []
    for i in range(count):
        sigma = fams[i % 4] if i % 4 < 3 else draw.step(rng)
        out.append((draw.vector(rng, int(rng.integers(1, 7)), 1), sigma))
    return out, rng


@criterion(5, "p = 1 duality against the search oracle and Hoelder")
def c5():
    cases, rng = _duality_draws(105)
    worst_gap, bad_holder = 0.0, 0
    for Z, sigma in cases:
        dual = dual_norm_inf(Z, sigma)
        lb = search_dual_pairing(Z, sigma, 1.0, restarts=SEARCH_RESTARTS, seed=int(rng.integers(2**31)))
        worst_gap = max(worst_gap, lb - dual)
        Ys = rng.normal(size=(1000, Z.n)) * rng.choice([0.1, 1.0, 10.0], size=(1000, 1))
        for y in Ys:
            Y = Z.with_values(y[:, None])
            lhs = abs(pairing(Z, Y))
            rhs = dual * norm(Y, sigma, 1.0)
            bad_holder += lhs > rhs + 1e-9 * max(1.0, rhs)
    ok = worst_gap <= 1e-6 and bad_holder == 0
    return ok, f"max oracle excess {worst_gap:.2e}, holder violations {bad_holder} of 100000"


@criterion(6, "p > 1 certificates: gap, attainment, dominance")
def c6():
    cases, rng = _duality_draws(106)
    cases += [(draw.vector(rng, int(rng.integers(1, 7)), 1), Log()) for _ in range(25)]
    worst_gap = worst_attain = worst_norm = 0.0
    worst_margin = math.inf
    bad = 0
    for Z, sigma in cases:
        for p in (1.5, 2.0, 3.0):
            cert = dual_norm_q(Z, sigma, p)
            scale = max(1.0, cert.dual_value)
            gap_ok = cert.gap <= 1e-9 * scale + cert.approximation_bound
            attain = abs(cert.pairing - cert.dual_value * cert.witness_norm) / max(1.0, abs(cert.pairing))
            q = p / (p - 1.0)
            znorm = norm(cert.envelope, sigma, q) if cert.dual_value > 0 else 0.0
            dev = abs(znorm - cert.dual_value) / scale
            dom = sigma_dominates(cert.envelope, _abs(Z), sigma)
            margin = dom.margin / max(1.0, float(np.abs(Z.values).max()))
            worst_gap = max(worst_gap, cert.gap / scale)
            worst_attain = max(worst_attain, attain)
            worst_norm = max(worst_norm, dev)
            worst_margin = min(worst_margin, margin)
            bad += not (gap_ok and attain <= 1e-9 and dev <= 1e-9 and margin >= -1e-12)
    detail = (
        f"{bad} failing certificates; max gap {worst_gap:.2e}, attainment {worst_attain:.2e}, "
        f"envelope norm {worst_norm:.2e}, min dominance margin {worst_margin:.2e}"
    )
    return bad == 0, detail


@criterion(7, "hull envelope agrees with the grid biconjugate")
def c7():
    rng = np.random.default_rng(107)
    worst = 0.0
    for _ in range(10):
        Z = draw.vector(rng, int(rng.integers(1, 7)), 1)
        sigma = draw.step(rng)
        _, _, H = envelope(Z, sigma)
        alphas = rng.random(10)
        grid = grid_biconjugate(Z, sigma, alphas)
        hull = np.array([H.G_env(float(a)) for a in alphas])
        worst = max(worst, float(np.max(np.abs(grid - hull))))
    return worst <= 1e-6, f"max deviation {worst:.2e} over 100 probes"


@criterion(8, "hand-checked instance |Z| = (1, 3), avar spectrum 0.5")
def c8():
    Z = RandomVector.scalar([1.0, 3.0])
    sigma = AvarSpectrum(0.5)
    inf_val = dual_norm_inf(Z, sigma)
    cert = dual_norm_q(Z, sigma, 2.0)
    _, _, H = envelope(Z, sigma)
    ok = inf_val == 2.0 and cert.dual_value == 2.0 and bool(np.all(H.levels == 2.0))
    return ok, f"p=1 value {inf_val!r}, p=2 value {cert.dual_value!r}, H levels {H.levels.tolist()}"


@criterion(9, "assignment rho equals enumeration and the 1-d formula")
def c9():
    rng = np.random.default_rng(109)
    mism_enum = mism_scalar = 0
    for _ in range(100):
        n, d = int(rng.integers(1, 9)), int(rng.integers(1, 4))
        Z = draw.vector(rng, n, d, uniform=True)
        Y = draw.vector(rng, n, d, uniform=True)
        val, _ = rho_assignment(Z, Y)
        mism_enum += val != enumerate_rho(Z, Y)
        Z1 = Z.with_values(Z.values[:, :1])
        Y1 = Y.with_values(Y.values[:, :1])
        mism_scalar += rho_assignment(Z1, Y1)[0] != rho_scalar(Z1, Y1)
    return mism_enum == mism_scalar == 0, f"enumeration mismatches {mism_enum}, scalar mismatches {mism_scalar}"


@criterion(10, "Lipschitz property of the maximal correlation risk")
def c10():
    rng = np.random.default_rng(110)
    bad = 0
    for _ in range(1000):
        n, d = int(rng.integers(1, 11)), int(rng.integers(1, 4))
        Z = draw.vector(rng, n, d, uniform=True)
        while not np.any(Z.values):
            Z = draw.vector(rng, n, d, uniform=True)
        Y1 = draw.vector(rng, n, d, uniform=True)
        Y2 = draw.vector(rng, n, d, uniform=True)
        p = (1.0, 2.0)[int(rng.integers(2))]
        r = VECNORMS[int(rng.integers(4))]
        bad += not lipschitz_check(Z, Y1, Y2, p, r).holds
    return bad == 0, f"{bad} violations in 1000 triples"


@criterion(11, "bound chain for the risk measure")
def c11():
    rng = np.random.default_rng(111)
    bad = 0
    for _ in range(1000):
        n = int(rng.integers(1, 13))
        sp = draw.space(rng, n)
        Z = RandomVector(sp, draw.values(rng, n, 3))
        Y = RandomVector(sp, draw.values(rng, n, 3))
        r = (1.0, 2.0, math.inf)[int(rng.integers(3))]
        bad += not bound_chain(Z, Y, r).holds
    return bad == 0, f"{bad} violations in 1000 draws"


@criterion(12, "parallelogram residual separates the Hilbert case")
def c12():
    alphas = np.linspace(0.01, 0.99, 99)
    hilbert = max(parallelogram_residual(Constant(), 2.0, a) for a in alphas)
    power = max(parallelogram_residual(Power(2.0), 2.0, a) for a in alphas)
    p15 = max(parallelogram_residual(Constant(), 1.5, a) for a in alphas)
    ok = hilbert <= 1e-12 and power >= 0.01 and p15 >= 0.01
    return ok, f"constant p=2 max {hilbert:.2e}; power(2) p=2 max {power:.3f}; constant p=1.5 max {p15:.3f}"


@criterion(13, "conditioning contracts the dual norm")
def c13():
    rng = np.random.default_rng(113)
    bad = 0
    for _ in range(1000):
        n = int(rng.integers(1, 13))
        Z = draw.vector(rng, n, 1)
        k = int(rng.integers(1, n + 1))
        labels = np.concatenate([np.arange(k), rng.integers(0, k, size=n - k)])
        part = Partition(rng.permutation(labels))
        bad += not dual_contraction_under_coarsening(Z, Power(2.0), 2.0, part).holds
    return bad == 0, f"{bad} violations in 1000 draws"


@criterion(14, "log distortion separates the sigma-norm from L^1")
def c14():
    n = 10_000
    Y = RandomVector(FiniteSpace(np.array([1.0 / n, 1.0 - 1.0 / n])), np.array([[1.0], [0.0]]))
    ratio = norm(Y, Log(), 1.0) / p_norm(Y, 1.0)
    return ratio > 10.0, f"ratio {ratio:.4f} at n = {n}"


# ---------------------------------------------------------------------------


def _run(number: int) -> tuple[bool, str]:
    title, fn = CRITERIA[number]
    t0 = time.perf_counter()
    ok, detail = fn()
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d}: {title} ({detail}; {time.perf_counter() - t0:.2f}s)"
    return bool(ok), line


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    ok, line = _run(number)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [_run(k) for k in sorted(CRITERIA)]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
