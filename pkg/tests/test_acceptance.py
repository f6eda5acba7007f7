"""Acceptance criteria, one test each.  Every test prints a PASS or FAIL line."""
import functools
import random
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcisc import bounds as bd
from qcisc import circuit_duration, default_library
from qcisc.assembler import (BASIC, CnNotPlan, QftPlan, assemble_cnnot, assemble_qft,
                             assemble_swap, backbone_duration_derived, backbone_duration_quoted,
                             backbone_jordan_power,
                             basic_duration_formula, enumerate_swap_plans, fig7_network,
                             metrics_from_slopes, reported_metrics, plan_backbone,
                             qft_duration_formula, qft_gate_defs, swap_duration_formula,
                             truncated_cpswap_unitary)
from qcisc.control import (best_of, build_ising_chain, fidelity_and_gradient,
                           finite_difference_gradient, lie_closure_rank, named_target,
                           special_unitary, PulseSchedule)
from qcisc.errors import PlanConstraintViolated
from qcisc.sim import (McConfig, multi_controlled_not, run_error_propagation, simulate_circuit,
                       trace_fidelity, verify_assembly)

LIB = default_library()


@pytest.fixture
def report(capsys):
    """Call with (k, ok, detail); prints the line outside pytest's capture."""
    t0 = time.perf_counter()

    def emit(k, ok, detail):
        dt = time.perf_counter() - t0
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {k}: {detail} [{dt:.1f}s]")
        return ok
    return emit


# 1 -------------------------------------------------------------------------

TABLE = {
    "g2": [1, 6, 27, 112, 453, 1818, 7279, 29124, 116505, "1.22e11", "1.79e59"],
    "t2": [1, 6, 14, 56, 151, 606, 1820, 7281, 23301, "1.22e10", "3.57e57"],
    "g10": [None] * 8 + [1, 1050627, "1.54e54"],
    "t10": [None] * 8 + [1, 525314, "1.54e53"],
}


def _matches(got, want):
    if want is None:
        return got is None
    if isinstance(want, int):
        return got == want
    return got is not None and f"{float(got):.2e}".replace("+", "") == want


def test_c1_table(report):
    t0 = time.perf_counter()
    rows = bd.table1()
    dt = time.perf_counter() - t0
    cells = [(k, n, rows[k][i], TABLE[k][i]) for k in TABLE for i, n in enumerate(bd.TABLE_NS)]
    bad = [(k, n) for k, n, g, w in cells if not _matches(g, w)]
    populated = sum(w is not None for *_, w in cells)
    ok = not bad and populated == 28 and dt < 1
    report(1, ok, f"{populated - len(bad)}/{populated} table cells match, {dt * 1e3:.1f} ms")
    assert ok, bad


# 2 -------------------------------------------------------------------------

def test_c2_closed_form(report):
    bad = [n for n in range(2, 31)
           if bd.gate_bound(bd.BoundQuery(n, 2)).g != (4 ** n - 3 * n - 1) // 9]
    assert all((4 ** n - 3 * n - 1) % 9 == 0 for n in range(2, 31))
    report(2, not bad, f"gate bound equals (4^n-3n-1)/9 for n=2..30, mismatches {bad}")
    assert not bad


# 3 -------------------------------------------------------------------------

def test_c3_oracle(report):
    t0 = time.perf_counter()
    fids = {}
    for n in range(2, 7):
        for p in enumerate_swap_plans(n, 4):
            fids[f"swap{p.block_sizes}"] = verify_assembly(assemble_swap(p), "swap").fidelity
    for n in (4, 6):
        for m in (d for d in range(1, n + 1) if n % d == 0):
            plan = QftPlan(m, n // m, "I", 0.0)
            fids[f"qft{n}/m{m}"] = verify_assembly(assemble_qft(plan), "qft", 1e-10,
                                                   qft_gate_defs(plan)).fidelity
    fids["fig7"] = trace_fidelity(simulate_circuit(fig7_network()),
                                  multi_controlled_not(5, [0, 1, 3], 4))
    n = next(n for n in range(5, 9) if _plans_ok(n))
    fids[f"backbone{n}"] = verify_assembly(assemble_cnnot(plan_backbone(n)), "cnnot").fidelity
    worst = min(fids, key=fids.get)
    ok = fids[worst] >= 1 - 1e-10 and time.perf_counter() - t0 < 120
    report(3, ok, f"{len(fids)} circuits, worst {worst} F_tr={fids[worst]:.15f}")
    assert ok


def _plans_ok(n):
    try:
        plan_backbone(n)
        return True
    except PlanConstraintViolated:
        return False


# 4 -------------------------------------------------------------------------

def test_c4_truncation(report):
    t0 = time.perf_counter()
    f = {j: truncated_cpswap_unitary(j, 10)[1] for j in range(1, 11)}
    ok = (abs(f[1] - 1) < 1e-12 and abs(f[2] - 0.9999902) <= 1e-6
          and all(f[j] >= 0.9999991 for j in range(3, 11)) and time.perf_counter() - t0 < 60)
    low = min(f[j] for j in range(3, 11))
    report(4, ok, f"F(j=1)={f[1]:.10f} F(j=2)={f[2]:.10f} min F(j>=3)={low:.10f}")
    assert ok


# 5 -------------------------------------------------------------------------

def test_c5_backbone_planner(report):
    a, b, c = plan_backbone(41), plan_backbone(42), plan_backbone(137)
    ex = (a.p == 4 and a.m3_groups == ((2,) * 8, (1,) * 7, (1,) * 8, (1,) * 7)
          and b.p == 2 and b.m3_groups == ((6, 5), (5,), (5, 5), (5,))
          and c.p == 5 and c.m3_groups == ((3,) * 8 + (2,) * 8, (2,) * 15, (2,) * 16, (2,) * 15))
    powers = [ell for ell in range(1, 65) if backbone_jordan_power(ell)]
    ok = ex and powers == [1, 2, 4, 8, 16, 32, 64]
    report(5, ok, f"p(41,42,137)=({a.p},{b.p},{c.p}), Jordan powers at {powers}")
    assert ok


# 6 -------------------------------------------------------------------------

@functools.lru_cache(maxsize=None)
def _c6_tally():
    """(exact, total) per formula over 200 random valid plans each."""
    rng = random.Random(6)
    tally = {}

    def check(name, circ, formula):
        hit, total = tally.get(name, (0, 0))
        tally[name] = (hit + (circuit_duration(circ, LIB) == formula), total + 1)

    swap_plans = [p for n in range(2, 22) for p in enumerate_swap_plans(n, 8, LIB)]
    for p in rng.sample(swap_plans, 200):
        check("swap", assemble_swap(p), swap_duration_formula(p, LIB))
    for _ in range(200):
        # the closed form needs m >= 2; m = 1 is excluded on purpose
        p = QftPlan(rng.randint(2, 5), rng.randint(1, 5))
        check("qft", assemble_qft(p), qft_duration_formula(p, LIB))
    for _ in range(200):
        m1 = rng.randint(1, 7)
        m2, m3, k = rng.randint(1, m1), rng.randint(1, 7), rng.randint(1, 6)
        p = CnNotPlan(m1 + m2 + 1 + 2 * k * m3, m1, m2, BASIC, m3=m3, k=k)
        check("basic", assemble_cnnot(p), basic_duration_formula(p, LIB))
    for _ in range(200):
        p = plan_backbone(rng.randint(5, 120))
        c = assemble_cnnot(p)
        check("backbone", c, backbone_duration_quoted(p, LIB))
        check("backbone-derived", c, backbone_duration_derived(p, LIB))
    return tally


@pytest.mark.xfail(strict=True, raises=AssertionError,
                   reason="the quoted C^nNOT durations disagree with the circuits their own "
                          "block descriptions produce; see the ledger")
def test_c6_duration_formulas(report):
    tally = {k: v for k, v in _c6_tally().items() if k != "backbone-derived"}
    ok = all(h == t for h, t in tally.values())
    report(6, ok, ", ".join(f"{k} {h}/{t} exact" for k, (h, t) in tally.items()))
    assert ok


def test_c6_parts_that_hold():
    # SWAP, QFT (m >= 2) and the re-derived backbone form are exact
    tally = _c6_tally()
    for name in ("swap", "qft", "backbone-derived"):
        h, t = tally[name]
        assert h == t == 200, name


# 7 -------------------------------------------------------------------------

def test_c7_grape(report):
    t0 = time.perf_counter()
    chain = build_ising_chain(2)
    cnot = special_unitary(named_target("cnot", 2))
    swap = special_unitary(named_target("swap", 2))
    f_cnot = best_of(chain, cnot, 0.5, M=80, restarts=20, seed=7, stop_at=0.999).fidelity
    f_swap = best_of(chain, swap, 1.5, restarts=20, seed=7, stop_at=0.999).fidelity
    f_short = best_of(chain, swap, 1.2, restarts=20, seed=7).fidelity
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(3):
        sched = PulseSchedule(0.8, rng.normal(size=(10, 4)))
        target = special_unitary(named_target("swap", 2))
        _, g = fidelity_and_gradient(chain, sched, target)
        fd = finite_difference_gradient(chain, sched, target)
        worst = max(worst, float(np.max(np.abs(g - fd)) / np.max(np.abs(fd))))
    ok = (f_cnot >= 0.999 and f_swap >= 0.999 and f_short <= 0.99 and worst <= 1e-5
          and time.perf_counter() - t0 < 600)
    report(7, ok, f"CNOT@0.5 F={f_cnot:.6f}, SWAP@1.5 F={f_swap:.6f}, SWAP@1.2 F={f_short:.6f}, "
                  f"grad rel err {worst:.1e}")
    assert ok


# 8 -------------------------------------------------------------------------

def test_c8_controllability(report):
    t0 = time.perf_counter()
    r2 = lie_closure_rank(build_ising_chain(2))
    r3 = lie_closure_rank(build_ising_chain(3))
    r3s = lie_closure_rank(build_ising_chain(3), method="svd")
    ok = r2 == 15 and r3 == 63 == r3s and time.perf_counter() - t0 < 60
    report(8, ok, f"Lie rank n=2: {r2}, n=3: {r3} (svd route {r3s})")
    assert ok


# 9 -------------------------------------------------------------------------

def test_c9_monte_carlo(report):
    t0 = time.perf_counter()
    res = {m: run_error_propagation(McConfig(m, 0.99999, 200, 10, seed=9)) for m in (2, 8)}
    dt = time.perf_counter() - t0

    # everything is read off at r = 200, the end of the grid
    def dev(r, which):
        return abs(float(r.summary(which)[0][-1] - r.independent[-1]))

    def spread(r, which):
        _, best, worst = r.summary(which)
        return float(best[-1] - worst[-1])
    d2, d8, a8 = dev(res[2], "abcd"), dev(res[8], "abcd"), dev(res[8], "aaaa")
    spreads = {(m, w): spread(res[m], w) for m in (2, 8) for w in ("aaaa", "abcd")}
    ok = (d8 < d2 and d8 < a8 and all(spreads[2, w] > spreads[8, w] for w in ("aaaa", "abcd"))
          and dt < 300)
    report(9, ok, f"at r=200: ABCD dev m=8 {d8:.2e} < m=2 {d2:.2e} and < AAAA m=8 {a8:.2e}; "
                  f"spread m=2 {spreads[2, 'abcd']:.2e}/{spreads[2, 'aaaa']:.2e} > "
                  f"m=8 {spreads[8, 'abcd']:.2e}/{spreads[8, 'aaaa']:.2e} (ABCD/AAAA)")
    assert ok


# 10 ------------------------------------------------------------------------

slope = st.floats(0.05, 50, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(st.dictionaries(st.integers(3, 12), slope, max_size=6), slope, slope)
def test_c10_identity_property(extra, d2, dinf):
    sm = metrics_from_slopes({2: d2, **extra}, dinf)
    for m in sm.slopes:
        assert abs(sm.xi[m] - sm.eta[m] * sm.pi_cisc) <= 1e-12 * max(1, sm.xi[m])


def test_c10_metrics(report):
    s, q = reported_metrics("swap"), reported_metrics("qft")
    ok = (round(s.pi_cisc, 2) == 2.16 and round(s.xi[8], 2) == 1.88
          and round(q.pi_cisc, 2) == 2.27 and round(q.eta["5/10"], 2) == 0.53)
    for sm in (s, q, reported_metrics("cnnot")):
        ok &= all(abs(sm.xi[m] - sm.eta[m] * sm.pi_cisc) <= 1e-12 for m in sm.slopes)
    report(10, ok, f"SWAP pi={s.pi_cisc:.2f} xi8={s.xi[8]:.2f}; QFT pi={q.pi_cisc:.2f} "
                   f"eta={q.eta['5/10']:.2f}; identity holds")
    assert ok
