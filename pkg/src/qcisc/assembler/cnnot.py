"""Multiply-controlled NOT with one borrowed ancilla on a qubit line.

Line layout shared by both schemes (top to bottom):

    t | X (m1) | V_1 U_1 V_2 U_2 ... V_k U_k | Y (m2 - 1) | a

t is the target, a the ancilla (returned in its input state), every other
qubit is a control.  The four-fold pattern g1 g2 g1 g2 with
g1: a ^= AND(X, U) and g2: t ^= AND(a, Y, V) yields t ^= AND(all controls).
The schemes differ in how g1 and g2 are expanded: the basic scheme runs a
borrowed-ancilla ladder of C^(m3+1)NOTs, the backbone scheme runs 2^p rounds
of a transvection chain whose nodes are box parities.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from ..errors import InvariantViolation, NoEvenSplit, PlanConstraintViolated
from ..model import BlockLibrary, Circuit, cmnot, cnot, swap
from .schedule import Op, asap, layered

BASIC, BACKBONE = "Basic", "Backbone"


@dataclass(frozen=True)
class CnNotPlan:
    n: int
    m1: int
    m2: int
    scheme: str = BASIC
    m3: int = 1
    k: int = 1
    p: Optional[int] = None
    p_prime: Optional[int] = None
    r: Optional[int] = None
    m3_groups: Optional[tuple] = None

    def __post_init__(self):
        if self.m1 < 1 or self.m2 < 1:
            raise PlanConstraintViolated("need m1 >= 1 and m2 >= 1")
        if self.scheme == BASIC:
            if self.m3 < 1 or self.k < 1:
                raise PlanConstraintViolated("basic scheme needs m3 >= 1 and k >= 1")
            if self.m1 + (self.m2 - 1) + 2 * self.k * self.m3 != self.n - 2:
                raise PlanConstraintViolated(
                    f"m1 + (m2-1) + 2 k m3 = {self.m1 + self.m2 - 1 + 2 * self.k * self.m3}"
                    f" but n - 2 = {self.n - 2}")
        elif self.scheme == BACKBONE:
            if self.p is None or self.p < 1 or self.m3_groups is None:
                raise PlanConstraintViolated("backbone plan needs p >= 1 and m3_groups")
            groups = tuple(tuple(int(s) for s in g) for g in self.m3_groups)
            object.__setattr__(self, "m3_groups", groups)
            ell = 2 ** self.p
            want = (ell // 2, (ell - 2) // 2, ell // 2, (ell - 2) // 2)
            if tuple(len(g) for g in groups) != want:
                raise PlanConstraintViolated(f"group lengths must be {want} for p={self.p}")
            if any(s < 1 for g in groups for s in g):
                raise PlanConstraintViolated("box sizes must be >= 1")
            total = self.m1 + (self.m2 - 1) + sum(sum(g) for g in groups)
            if total != self.n - 2:
                raise PlanConstraintViolated(f"box sizes cover {total} controls, not n-2={self.n - 2}")
            object.__setattr__(self, "k", ell - 1)
        else:
            raise PlanConstraintViolated(f"unknown scheme {self.scheme!r}")

    @property
    def ell(self) -> int:
        return self.k + 1

    def u_sizes(self) -> list:
        """Sizes of U_1..U_k (solid boxes of g1)."""
        if self.scheme == BASIC:
            return [self.m3] * self.k
        return _interleave(self.m3_groups[0], self.m3_groups[1])

    def v_sizes(self) -> list:
        if self.scheme == BASIC:
            return [self.m3] * self.k
        return _interleave(self.m3_groups[2], self.m3_groups[3])

    def line_boxes(self) -> list:
        """m_{3,j} in line order V_1, U_1, V_2, U_2, ..."""
        out = []
        for v, u in zip(self.v_sizes(), self.u_sizes()):
            out += [v, u]
        return out


def _interleave(odd, even) -> list:
    out = []
    for i in range(len(odd) + len(even)):
        out.append(odd[i // 2] if i % 2 == 0 else even[i // 2])
    return out


class _Line:
    """Tracks which logical qubit sits where while swaps move them."""

    def __init__(self, plan: CnNotPlan):
        self.plan = plan
        line = ["t"] + [("x", i) for i in range(plan.m1)]
        for j, (sv, su) in enumerate(zip(plan.v_sizes(), plan.u_sizes()), start=1):
            line += [("v", j, i) for i in range(sv)]
            line += [("u", j, i) for i in range(su)]
        line += [("y", i) for i in range(plan.m2 - 1)] + ["a"]
        assert len(line) == plan.n
        self.initial = list(line)
        self.state = list(line)
        self.ops = []
        self._pos = {q: i for i, q in enumerate(line)}
        self._spans = {}

    def where(self, q) -> int:
        return self._pos[q]

    def box(self, name: str, j: int) -> list:
        # swaps stay inside a box window, so a box always fills its span
        lo, hi = self.span(name, j)
        return self.state[lo:hi + 1]

    def span(self, name: str, j: int) -> tuple:
        key = (name, j)
        if key not in self._spans:
            ps = [p for p, q in enumerate(self.state)
                  if isinstance(q, tuple) and q[0] == name and q[1] == j]
            self._spans[key] = (min(ps), max(ps))
        return self._spans[key]

    def swap_ends(self, lo: int, hi: int, role: str):
        if hi == lo:
            return
        self.ops.append(Op(swap(hi - lo + 1), tuple(range(lo, hi + 1)), role=role))
        a, b = self.state[lo], self.state[hi]
        self.state[lo], self.state[hi] = b, a
        self._pos[a], self._pos[b] = hi, lo
        for q in (a, b):
            if isinstance(q, tuple):
                self._spans.pop(q[:2], None)

    def cx(self, controls, target, role: str):
        cs = tuple(sorted(self.where(c) for c in controls))
        tp = self.where(target)
        ps = sorted(cs + (tp,))
        if ps != list(range(ps[0], ps[-1] + 1)):
            raise InvariantViolation(f"{role}: window {ps} is not contiguous")
        self.ops.append(Op(cmnot(len(cs)), cs + (tp,), cs, tp, role))

    def restored(self) -> bool:
        return self.state == self.initial


# -- basic scheme -------------------------------------------------------------

def _basic_ops(plan: CnNotPlan) -> list:
    k, m1, m2, m3, n = plan.k, plan.m1, plan.m2, plan.m3, plan.n
    ln = _Line(plan)
    # borrowed bits start where their first use wants them, so the sweep
    # needs no extra swaps to fetch or park them
    c = {j: ("v", j, 0) for j in range(1, k + 1)}
    d = {j: ("u", j, 0) for j in range(1, k + 1)}

    def place(q, name, j, end):
        lo, hi = ln.span(name, j)
        if ln.where(q) != (lo if end == "top" else hi):
            ln.swap_ends(lo, hi, "S3")

    def s1(t_at_top: bool):
        if (ln.state[0] == "t") != t_at_top:
            ln.swap_ends(0, m1, "S1")

    def a_next_to_u():
        if ln.state[n - 1] == "a" and m2 > 1:
            ln.swap_ends(n - m2, n - 1, "S2")

    # one ladder: levels 0..k, visited 0,1,..,k,k-1,..,1 twice
    cycle = list(range(k + 1)) + list(range(k - 1, 0, -1))
    cycle = cycle + cycle

    def g1():
        for lv in cycle:
            if lv == 0:
                s1(True)
                place(c[1], "v", 1, "top")
                ln.cx([("x", i) for i in range(m1)], c[1], "C1")
            elif lv < k:
                j = lv + 1
                place(c[j - 1], "v", j - 1, "bottom")
                place(c[j], "v", j, "top")
                ln.cx([c[j - 1]] + ln.box("u", j - 1), c[j], "C3")
            else:
                a_next_to_u()
                place(c[k], "v", k, "bottom")
                ln.cx([c[k]] + ln.box("u", k), "a", "C3")

    def g2():
        for lv in cycle:
            if lv == 0:
                s1(False)
                place(d[1], "u", 1, "top")
                ln.cx([d[1]] + ln.box("v", 1), "t", "C3")
            elif lv < k:
                j = lv
                place(d[j + 1], "u", j + 1, "top")
                place(d[j], "u", j, "bottom")
                ln.cx([d[j + 1]] + ln.box("v", j + 1), d[j], "C3")
            else:
                place(d[k], "u", k, "bottom")
                ln.cx(["a"] + [("y", i) for i in range(m2 - 1)], d[k], "C2")

    for g in (g1, g2, g1, g2):
        g()
    for j in range(1, k + 1):
        place(c[j], "v", j, "top")
        place(d[j], "u", j, "top")
    s1(True)
    if ln.state[n - 1] != "a":
        ln.swap_ends(n - m2, n - 1, "S2")
    assert ln.restored()
    return ln.ops


def assemble_cnnot_basic(plan: CnNotPlan) -> Circuit:
    if plan.scheme != BASIC:
        raise PlanConstraintViolated("assemble_cnnot_basic needs a Basic plan")
    meta = {"family": "cnnot", "scheme": BASIC, "m1": plan.m1, "m2": plan.m2,
            "m3": plan.m3, "k": plan.k}
    return asap(plan.n, _basic_ops(plan), reorder=True, metadata=meta)


def fig7_network() -> Circuit:
    """C^3NOT from four Toffolis with one borrowed ancilla.

    Controls 0, 1, 3; ancilla 2; target 4.
    """
    t1 = Op(cmnot(2), (2, 3, 4), (2, 3), 4)
    t2 = Op(cmnot(2), (0, 1, 2), (0, 1), 2)
    return asap(5, [t1, t2, t1, t2], metadata={"family": "cnnot", "scheme": "fig7"})


def _d(kind_fn, m, lib):
    # swap blocks of a single qubit are identities and cost nothing
    return Fraction(0) if m <= 1 else lib.duration(kind_fn(m))


def basic_duration_formula(plan: CnNotPlan, lib: BlockLibrary) -> Fraction:
    """The closed-form durations quoted for k >= 4 and separately k = 1, 2, 3."""
    k, m1, m2, m3 = plan.k, plan.m1, plan.m2, plan.m3
    c1 = lib.duration(cmnot(m1))
    c2 = lib.duration(cmnot(m2))
    c3 = lib.duration(cmnot(m3 + 1))
    s3 = _d(swap, m3, lib)
    s2 = _d(swap, m2, lib)
    if k == 1:
        return (4 * c1 + 2 * lib.duration(swap(m1 + 1)) + 4 * c2 + 2 * s2
                + 8 * c3 + 16 * s3)
    n3, ns = {2: (24, 32), 3: (37, 48)}.get(k, (13 * k - 8, 13 * k + 3))
    return 4 * c1 + 4 * c2 + s2 + n3 * c3 + ns * s3


def basic_block_counts(plan: CnNotPlan) -> Counter:
    """Closed-form multiset behind the quality product of the basic scheme."""
    k, m1, m2, m3 = plan.k, plan.m1, plan.m2, plan.m3
    out = Counter()
    out[cmnot(m1)] += 4
    out[cmnot(m2)] += 4
    out[swap(m1 + 1)] += 4
    if m2 > 1:
        out[swap(m2)] += 2
    out[cmnot(m3 + 1)] += 16 * k - 8
    if m3 > 1:
        out[swap(m3)] += 16 * k
    return out


def fidelity_from_counts(counts, lib: BlockLibrary) -> float:
    f = 1.0
    for kind, e in counts.items():
        f *= lib.fidelity(kind) ** e
    return f


def basic_fidelity_formula(plan: CnNotPlan, lib: BlockLibrary) -> float:
    return fidelity_from_counts(basic_block_counts(plan), lib)


def optimize_m3_split(n: int, m1: int, m2: int, delta_c: float = 2.15,
                      delta_s: float = 0.69, a: float = -4.48, b: float = 0.06):
    """(k, m3, sub_k4) minimising the m3-dependent part of the k >= 4 duration.

    Candidates are the factorisations k m3 = (n - m1 - m2 - 1)/2 with k >= 4;
    ties go to the larger k.  When no factorisation has k >= 4 the best of
    the remaining ones is returned with sub_k4 = True.
    """
    rest = n - (m1 + m2 + 1)
    if rest <= 0 or rest % 2:
        raise NoEvenSplit(f"n - (m1 + m2 + 1) = {rest} is not a positive even number")
    const = rest // 2
    pairs = [(k, const // k) for k in range(1, const + 1) if const % k == 0]

    def cost(k, m3):
        c = (13 * k - 8) * ((m3 + 2) * delta_c + a)
        if m3 != 1:
            c += (13 * k + 3) * (m3 * delta_s + b)
        return c
    good = [pq for pq in pairs if pq[0] >= 4]
    pool = good or pairs
    k, m3 = min(pool, key=lambda pq: (cost(*pq), -pq[0]))
    return k, m3, not good


# -- backbone scheme ----------------------------------------------------------

def backbone_jordan_power(ell: int, qubits: Optional[int] = None) -> bool:
    """True iff the ell-th power of the ascending CNOT chain on ell+1 bits is
    the single indirect CNOT between the end bits (over Z_2)."""
    if ell < 1:
        raise InvariantViolation("ell must be >= 1")
    size = ell + 1 if qubits is None else qubits
    if size != ell + 1:
        raise InvariantViolation("the chain acts on ell + 1 qubits")
    j = np.eye(size, dtype=np.int64) + np.eye(size, k=1, dtype=np.int64)
    acc = np.eye(size, dtype=np.int64)
    base, e = j, ell
    while e:
        if e & 1:
            acc = (acc @ base) % 2
        base = (base @ base) % 2
        e >>= 1
    want = np.eye(size, dtype=np.int64)
    want[0, size - 1] = 1
    return bool(np.array_equal(acc, want))


def plan_backbone(n: int) -> CnNotPlan:
    if n < 5:
        raise PlanConstraintViolated("the backbone scheme needs n >= 5")
    pp = int(math.floor(math.log2(n - 1))) - 1
    while 2 ** (pp + 2) <= n - 1:   # guard the float log
        pp += 1
    while 2 ** (pp + 1) > n - 1:
        pp -= 1
    r = (n - 1) - 2 ** (pp + 1)
    if pp >= 2 and 1 <= r <= 2 ** (pp - 2):
        p = pp - 1
    elif pp >= 3 and 1 + 2 ** (pp - 1) <= r <= 5 * 2 ** (pp - 3):
        p = pp - 2
    else:
        p = pp
    ell = 2 ** p
    b, e = divmod(n - 1, 2 * ell)
    lens = (ell // 2, (ell - 2) // 2, ell // 2, (ell - 2) // 2)
    flat = [b + 1] * min(e, 2 * ell - 2) + [b] * (2 * ell - 2 - min(e, 2 * ell - 2))
    groups, pos = [], 0
    for ln in lens:
        groups.append(tuple(flat[pos:pos + ln]))
        pos += ln
    m1 = b + 1 if e == 2 * ell - 1 else b
    return CnNotPlan(n, m1, b, BACKBONE, p=p, p_prime=pp, r=r, m3_groups=tuple(groups))


def _ladder(ln: _Line, name: str, j: int, down: bool, undo: bool) -> list:
    # CNOT ladder folding the box parity into its bottom (down) or top qubit
    lo, hi = ln.span(name, j)
    ps = list(range(lo, hi + 1)) if down else list(range(hi, lo - 1, -1))
    pairs = list(zip(ps[:-1], ps[1:]))
    if undo:
        pairs = pairs[::-1]
    out = []
    for c, t in pairs:
        out.append(Op(cnot(), (c, t), (c,), t, "L"))
    return out


def _backbone_layers(plan: CnNotPlan) -> list:
    k, ell, n, m1, m2 = plan.k, plan.ell, plan.n, plan.m1, plan.m2
    p = plan.p
    ln = _Line(plan)
    odd = [j for j in range(1, k + 1) if j % 2]
    even = [j for j in range(1, k + 1) if j % 2 == 0]

    def ladders(name, js, down, undo):
        out = []
        for j in js:
            out += _ladder(ln, name, j, down, undo)
        return out

    def s1():
        ln.swap_ends(0, m1, "S1")
        return [ln.ops.pop()]

    def s2():
        if m2 == 1:
            return []
        ln.swap_ends(n - m2, n - 1, "S2")
        return [ln.ops.pop()]

    def bottom(name, j):
        return ln.span(name, j)[1]

    def top(name, j):
        return ln.span(name, j)[0]

    def link_g1(i):
        # reads par(V_src) at its bottom; target V_{src+1} top or a
        if i == ell:
            ctrl = [ln.state[q] for q in range(1, m1 + 1)]
            ln.cx(ctrl, ln.state[top("v", 1)], "C1")
            return
        src = k + 1 - i
        tgt = "a" if i == 1 else ln.state[top("v", src + 1)]
        ln.cx([ln.state[bottom("v", src)]] + ln.box("u", src), tgt, "C3")

    def link_g2(i):
        # reads par(U_i) at its top; target U_{i-1} bottom, t, or (ell) U_k bottom
        if i == ell:
            ctrl = ["a"] + [("y", q) for q in range(m2 - 1)]
            ln.cx(ctrl, ln.state[bottom("u", k)], "C2")
            return
        tgt = "t" if i == 1 else ln.state[bottom("u", i - 1)]
        ln.cx([ln.state[top("u", i)]] + ln.box("v", i), tgt, "C3")

    def c_slot(link, parity):
        ln.ops = []
        for i in range(1, ell + 1):
            if i % 2 == parity:
                link(i)
        return ln.ops

    def g_body(link, name, down):
        # rounds: odd links read odd boxes, even links read even boxes
        layers = []
        for rnd in range(2 ** p):
            layers.append(c_slot(link, 1))
            layers.append(ladders(name, odd, down, True) + ladders(name, even, down, False))
            layers.append(c_slot(link, 0))
            if rnd < 2 ** p - 1:
                layers.append(ladders(name, even, down, True) + ladders(name, odd, down, False))
        return layers

    layers = []
    layers.append(s2() + ladders("v", odd, True, False))                               # J0
    layers += g_body(link_g1, "v", True)
    layers.append(s1() + ladders("v", even, True, True) + ladders("u", odd, False, False))  # J1
    layers += g_body(link_g2, "u", False)
    layers.append(s1() + ladders("u", even, False, True) + ladders("v", odd, True, False))  # J2
    layers += g_body(link_g1, "v", True)
    layers.append(s1() + ladders("v", even, True, True) + ladders("u", odd, False, False))  # J3
    layers += g_body(link_g2, "u", False)
    layers.append(s1() + s2() + ladders("u", even, False, True))                        # J4
    assert ln.restored()
    return layers


def assemble_cnnot_backbone(plan: CnNotPlan) -> Circuit:
    if plan.scheme != BACKBONE:
        raise PlanConstraintViolated("assemble_cnnot_backbone needs a Backbone plan")
    meta = {"family": "cnnot", "scheme": BACKBONE, "p": plan.p, "m1": plan.m1,
            "m2": plan.m2, "m3_groups": [list(g) for g in plan.m3_groups]}
    return layered(plan.n, _backbone_layers(plan), metadata=meta)


def assemble_cnnot(plan: CnNotPlan) -> Circuit:
    if plan.scheme == BASIC:
        return assemble_cnnot_basic(plan)
    return assemble_cnnot_backbone(plan)


def _maxdur(kinds, lib) -> Fraction:
    return max((lib.duration(kd) for kd in kinds), default=Fraction(0))


def backbone_duration_quoted(plan: CnNotPlan, lib: BlockLibrary) -> Fraction:
    """The quoted backbone duration, evaluated term by term."""
    g1, g2, g3, g4 = (max(g, default=0) for g in plan.m3_groups)
    tc = lib.duration(cnot())

    def c(m):
        return lib.duration(cmnot(m + 1))
    rounds = 2 * 2 ** plan.p
    total = rounds * (c(g1) + (c(g2) if g2 else 0) + 2 * max(g3, g4) * tc)
    total += rounds * (c(g3) + (c(g4) if g4 else 0) + 2 * max(g1, g2) * tc)
    return total + _d(swap, plan.m2, lib)


def backbone_duration_derived(plan: CnNotPlan, lib: BlockLibrary) -> Fraction:
    """Duration of the emitted backbone schedule in closed form.

    2^p rounds per g, two copies of each g; every C-slot costs its slowest
    link, every gap the deepest ladder, and five junctions absorb the swaps
    together with the first and last ladders.
    """
    p, k, m1, m2 = plan.p, plan.k, plan.m1, plan.m2
    u, v = plan.u_sizes(), plan.v_sizes()
    tc = lib.duration(cnot())
    odd = [j for j in range(1, k + 1) if j % 2]
    even = [j for j in range(1, k + 1) if j % 2 == 0]
    c1o = _maxdur([cmnot(u[j - 1] + 1) for j in odd], lib)
    c1e = _maxdur([cmnot(u[j - 1] + 1) for j in even] + [cmnot(m1)], lib)
    c2o = _maxdur([cmnot(v[j - 1] + 1) for j in odd], lib)
    c2e = _maxdur([cmnot(v[j - 1] + 1) for j in even] + [cmnot(m2)], lib)
    dv = max(v) - 1
    du = max(u) - 1
    gaps = 2 * (2 ** (p + 1) - 1)
    total = 2 * 2 ** p * (c1o + c1e) + 2 * 2 ** p * (c2o + c2e)
    total += gaps * dv * tc + gaps * du * tc

    def depth(sizes, js):
        return max((sizes[j - 1] - 1 for j in js), default=0)

    def junction(swaps, depth_):
        first = [lib.duration(s) for s in swaps]
        if depth_ > 0:
            first.append(tc)
        return max(first, default=Fraction(0)) + max(depth_ - 1, 0) * tc
    sw1 = [swap(m1 + 1)]
    sw2 = [swap(m2)] if m2 > 1 else []
    total += junction(sw2, depth(v, odd))
    total += 2 * junction(sw1, max(depth(v, even), depth(u, odd)))
    total += junction(sw1, max(depth(u, even), depth(v, odd)))
    total += junction(sw1 + sw2, depth(u, even))
    return total


def backbone_block_counts(plan: CnNotPlan) -> Counter:
    """Exact multiset of blocks in the emitted backbone circuit."""
    p = plan.p
    out = Counter()
    for s in plan.u_sizes() + plan.v_sizes():
        out[cmnot(s + 1)] += 2 ** (p + 1)
        if s > 1:
            out[cnot()] += 2 ** (p + 2) * (s - 1)
    out[cmnot(plan.m1)] += 2 ** (p + 1)
    out[cmnot(plan.m2)] += 2 ** (p + 1)
    out[swap(plan.m1 + 1)] += 4
    if plan.m2 > 1:
        out[swap(plan.m2)] += 2
    return out


def backbone_fidelity_quoted(plan: CnNotPlan, lib: BlockLibrary) -> float:
    """The quoted backbone quality product (without the relaxation factor),
    with m_{3,j} read in line order V_1, U_1, V_2, U_2, ..."""
    p, ell = plan.p, plan.ell
    m = [None] + plan.line_boxes()   # 1-based

    def fc(c):
        return lib.fidelity(cmnot(c))
    fcn = lib.fidelity(cnot())
    f = (fc(1 + plan.m1) * fc(1 + plan.m2) * fc(1 + m[1])) ** (2 ** (p + 1))
    for j in range(2, ell):
        f *= fc(1 + m[2 * j - 1]) ** (2 ** (p + 1)) * fcn ** (2 ** (p + 2) * (m[2 * j - 2] - 1))
    f *= fc(1 + m[2 * ell - 2]) ** (2 ** (p + 1))
    for j in range(2, ell):
        f *= (fc(1 + m[2 * ell + 2 - 2 * j]) ** (2 ** (p + 1))
              * fcn ** (2 ** (p + 2) * (m[2 * ell + 1 - 2 * j] - 1)))
    f *= lib.fidelity(swap(plan.m1 + 1)) ** 4
    if plan.m2 > 1:
        f *= lib.fidelity(swap(plan.m2)) ** 2
    return f


def cnnot_duration_formula(plan: CnNotPlan, lib: BlockLibrary) -> Fraction:
    if plan.scheme == BASIC:
        return basic_duration_formula(plan, lib)
    return backbone_duration_quoted(plan, lib)


def cnnot_block_counts(plan: CnNotPlan) -> Counter:
    return basic_block_counts(plan) if plan.scheme == BASIC else backbone_block_counts(plan)
