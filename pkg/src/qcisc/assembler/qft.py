"""QFT on k registers of m qubits from QFT_m blocks and cP-SWAP blocks.

Register a (counted from the top of the line) is transformed at the top
window and then walks down, crossing register a+s with a cP-SWAP^s.  The
register order on output is therefore reversed, which is exactly the
digit reversal of the DFT, so the assembled circuit equals DFT_{2^(km)}
on the line with no trailing permutation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np

from ..errors import InvariantViolation, OddMForVariantII
from ..model import BlockLibrary, Circuit, PlacedInstruction, cpswap, qft
from ..sim import cpswap_unitary, dft, phase_fidelity
from .schedule import Op, asap

DEFAULT_THRESHOLD = math.pi / 2 ** 10


@dataclass(frozen=True)
class QftPlan:
    m: int
    k: int
    variant: str = "I"
    truncation_threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self):
        if self.m < 1 or self.k < 1:
            raise InvariantViolation("QFT plan needs m >= 1 and k >= 1")
        if self.variant not in ("I", "II"):
            raise InvariantViolation(f"unknown QFT variant {self.variant!r}")
        if self.variant == "II" and self.m % 2:
            raise OddMForVariantII(f"variant II needs an even block size, got m={self.m}")
        if self.truncation_threshold < 0:
            raise InvariantViolation("truncation threshold must be >= 0")

    @property
    def n(self) -> int:
        return self.m * self.k


def collapse_index(h: int, threshold: float) -> int | None:
    """Smallest j whose cP-SWAP^j on 2h qubits loses every rotation.

    The largest angle inside cP-SWAP^j is pi / 2^((j-1)h + 1).
    """
    if threshold <= 0:
        return None
    j = 1
    while math.pi / 2 ** ((j - 1) * h + 1) > threshold:
        j += 1
    return j


def effective_j(j: int, h: int, threshold: float) -> int:
    js = collapse_index(h, threshold)
    return j if js is None else min(j, js)


def _variant_one_ops(k: int, h: int, threshold: float, offset: int = 0):
    # (slot, op) pairs; positions are 1-based register windows of h qubits
    out = []
    for a in range(1, k + 1):
        base = 2 * (a - 1)
        out.append((base, Op(qft(h), _window(1, 1, h, offset)), ("Q", a)))
        for s in range(1, k - a + 1):
            kind = cpswap(effective_j(s, h, threshold), 2 * h)
            out.append((base + s, Op(kind, _window(s, 2, h, offset)), ("C", a, s)))
    return out


def _window(pos: int, width: int, h: int, offset: int = 0) -> tuple:
    lo = offset + (pos - 1) * h
    return tuple(range(lo, lo + width * h))


def assemble_qft(plan: QftPlan) -> Circuit:
    meta = {"family": "qft", "variant": plan.variant, "m": plan.m, "k": plan.k,
            "threshold": plan.truncation_threshold}
    if plan.variant == "I":
        items = _variant_one_ops(plan.k, plan.m, plan.truncation_threshold)
        ins = [PlacedInstruction(o.kind, o.qubits, s) for s, o, _ in items]
        return Circuit(plan.n, sorted(ins, key=lambda i: (i.slot, i.qubits)), meta)
    return _assemble_variant_two(plan, meta)


def _assemble_variant_two(plan: QftPlan, meta) -> Circuit:
    h, k = plan.m // 2, plan.k
    items = _variant_one_ops(2 * k, h, plan.truncation_threshold)
    # merge QFT_h(a) cPS^1(a, a+1) QFT_h(a+1) for odd a into one QFT_m
    merged_at = {("C", a, 1) for a in range(1, 2 * k, 2)}
    drop = {("Q", a) for a in range(1, 2 * k + 1)}
    ops = []
    for _, o, tag in sorted(items, key=lambda t: t[0]):
        if tag in merged_at:
            ops.append(Op(qft(plan.m), o.qubits))
        elif tag not in drop:
            ops.append(o)
    return asap(plan.n, ops, metadata=meta)


def qft_gate_defs(plan: QftPlan) -> dict:
    """Block unitaries with the plan's truncation applied, for the oracle."""
    h = plan.m if plan.variant == "I" else plan.m // 2
    c = assemble_qft(plan)
    out = {}
    for kind in c.kind_counts():
        if kind.tag == "CpSwapBlock":
            out[kind] = cpswap_unitary(kind.params[0], kind.params[1], plan.truncation_threshold)
    return out


def qft_duration_formula(plan: QftPlan, lib: BlockLibrary) -> Fraction:
    """2 tau(QFT_m) + (k-1) tau(cPS^1) + (k-2) tau(cPS^2), variant I.

    Valid when cPS^2 is no faster than QFT_m and cPS durations do not grow
    with j; check_ordering reports libraries where that fails.
    """
    if plan.variant != "I":
        raise InvariantViolation("the closed-form duration covers variant I only")
    m, k, th = plan.m, plan.k, plan.truncation_threshold
    tq = lib.duration(qft(m))
    if k == 1:
        return tq
    t1 = lib.duration(cpswap(effective_j(1, m, th), 2 * m))
    total = 2 * tq + (k - 1) * t1
    if k >= 3:
        total += (k - 2) * lib.duration(cpswap(effective_j(2, m, th), 2 * m))
    return total


def qft_fidelity_formula(plan: QftPlan, lib: BlockLibrary) -> float:
    """F_QFT^k times prod_j F_cPS^j^(k-j), with collapsed j sharing one factor."""
    counts = qft_block_counts(plan)
    f = 1.0
    for kind, e in counts.items():
        f *= lib.fidelity(kind) ** e
    return f


def qft_block_counts(plan: QftPlan) -> dict:
    """Closed-form block multiset: k QFTs and k-j copies of cPS^j (variant I);
    k QFT_m and 2k-j copies of cPS^j_m less the merged cPS^1 (variant II)."""
    out = {}
    if plan.variant == "I":
        h, regs = plan.m, plan.k
        out[qft(plan.m)] = plan.k
    else:
        h, regs = plan.m // 2, 2 * plan.k
        out[qft(plan.m)] = plan.k
    for j in range(1, regs):
        e = regs - j
        if plan.variant == "II" and j == 1:
            e -= plan.k
        if e:
            kind = cpswap(effective_j(j, h, plan.truncation_threshold), 2 * h)
            out[kind] = out.get(kind, 0) + e
    return out


def truncated_cpswap_unitary(j: int, m2: int, threshold: float = DEFAULT_THRESHOLD):
    """(truncated unitary, fidelity against the untruncated block).

    The fidelity is |tr(V^dag U)|/N: dropping a rotation also shifts the
    global phase, which a block compiled on its own does not care about.
    """
    exact = cpswap_unitary(j, m2)
    trunc = cpswap_unitary(j, m2, threshold)
    return trunc, phase_fidelity(trunc, exact)


def cooley_tukey_factors(N: int, m: int, q: int):
    """(L, D) with DFT_N = (DFT_m x 1_q) (L D) (DFT_q x 1_m), x = np.kron.

    D = diag(w^t_k), t_k = (k mod m) floor(k/m), w = exp(2 pi i/N); L is a
    permutation.  In qubit terms DFT_q acts on a q-dimensional top register,
    L D trades it for an m-dimensional one, and DFT_m acts on the new top.
    """
    if m * q != N or m < 1 or q < 1:
        raise InvariantViolation(f"need N = m q, got N={N}, m={m}, q={q}")
    k = np.arange(N)
    t = (k % m) * (k // m)
    D = np.diag(np.exp(2j * np.pi * t / N))
    # L sends index k = x*m + y (x < q top, y < m bottom) to y*q + x
    L = np.zeros((N, N))
    x, y = k // m, k % m
    L[y * q + x, k] = 1.0
    return L, D


def cooley_tukey_residual(N: int, m: int, q: int) -> float:
    L, D = cooley_tukey_factors(N, m, q)
    rhs = np.kron(dft(m), np.eye(q)) @ L @ D @ np.kron(dft(q), np.eye(m))
    return float(np.max(np.abs(rhs - dft(N))))


def check_ordering(lib: BlockLibrary, m: int, jmax: int) -> list:
    """Warnings where lib breaks the empirical duration orderings of cP-SWAPs.

    Checked: tau(cPS^j_2m) >= tau(QFT_m); tau(QFT_m) >= tau(cPS^j_m) for even m;
    tau(cPS^j_2m) >= tau(cPS^(j+1)_2m).  Missing entries are skipped.
    """
    warnings = []

    def dur(kind):
        return lib.duration(kind) if lib.has(kind) else None
    tq = dur(qft(m))
    for j in range(1, jmax + 1):
        c, c_next = dur(cpswap(j, 2 * m)), dur(cpswap(j + 1, 2 * m))
        if c is not None and tq is not None and c < tq:
            warnings.append(f"cPS^{j}_{2 * m} faster than QFT_{m}")
        if m % 2 == 0:
            cm = dur(cpswap(j, m))
            if cm is not None and tq is not None and tq < cm:
                warnings.append(f"QFT_{m} faster than cPS^{j}_{m}")
        if c is not None and c_next is not None and c < c_next:
            warnings.append(f"cPS^{j}_{2 * m} faster than cPS^{j + 1}_{2 * m}")
    return warnings


def qft_quality_exponents(m: int, k: int) -> dict:
    """Exponents of F_QFT and F_cPS^j in the variant I quality product."""
    out = {"QFT": k}
    for j in range(1, k):
        out[f"cPS{j}"] = k - j
    assert sum(v for key, v in out.items() if key != "QFT") == comb(k, 2)
    return out
