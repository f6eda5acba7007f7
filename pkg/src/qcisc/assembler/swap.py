"""Indirect 1<->n SWAP assembled from end-swapping blocks on nested windows."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from ..errors import MissingBlockEntry, PlanConstraintViolated
from ..model import BlockLibrary, Circuit, PlacedInstruction, swap


@dataclass(frozen=True)
class SwapPlan:
    n: int
    block_sizes: tuple

    def __post_init__(self):
        sizes = tuple(int(m) for m in self.block_sizes)
        object.__setattr__(self, "block_sizes", sizes)
        if not sizes:
            raise PlanConstraintViolated("a SWAP plan needs at least one block")
        if any(m < 2 for m in sizes):
            raise PlanConstraintViolated(f"block sizes must be >= 2, got {sizes}")
        if span(sizes) != self.n:
            raise PlanConstraintViolated(
                f"sizes {sizes} cover {span(sizes)} qubits, not n={self.n}")


def span(sizes) -> int:
    *side, centre = sizes
    return centre + 2 * sum(m - 1 for m in side)


def assemble_swap(plan: SwapPlan) -> Circuit:
    """Descend through the side blocks, swap in the centre, ascend again.

    Side block j sits on [o, o+m_j-1] and on its mirror image, both in one
    slot, with o the summed (m_i - 1) of the outer levels.
    """
    n = plan.n
    *side, centre = plan.block_sizes
    k = len(plan.block_sizes)
    ins = []
    o = 0
    for j, m in enumerate(side):
        left = tuple(range(o, o + m))
        right = tuple(range(n - o - m, n - o))
        for slot in (j, 2 * k - 2 - j):
            ins.append(PlacedInstruction(swap(m), left, slot))
            ins.append(PlacedInstruction(swap(m), right, slot))
        o += m - 1
    ins.append(PlacedInstruction(swap(centre), tuple(range(o, o + centre)), k - 1))
    meta = {"family": "swap", "plan": list(plan.block_sizes)}
    return Circuit(n, sorted(ins, key=lambda i: (i.slot, i.qubits)), meta)


def swap_duration_formula(plan: SwapPlan, lib: BlockLibrary) -> Fraction:
    *side, centre = plan.block_sizes
    return lib.duration(swap(centre)) + 2 * sum(lib.duration(swap(m)) for m in side)


def swap_fidelity_formula(plan: SwapPlan, lib: BlockLibrary) -> float:
    *side, centre = plan.block_sizes
    f = lib.fidelity(swap(centre))
    for m in side:
        f *= lib.fidelity(swap(m)) ** 4
    return f


def drop_last_qubit(c: Circuit) -> Circuit:
    """Odd-order reduction: remove the last line position and every block on it.

    Two-qubit swaps touching it vanish; wider end-swaps shrink by one qubit so
    their far endpoint becomes the new last qubit.
    """
    last = c.n - 1
    ins = []
    for i in c.instructions:
        if last not in i.qubits:
            ins.append(i)
            continue
        m = i.kind.size
        if i.kind.tag not in ("Swap2", "SwapBlock"):
            raise PlanConstraintViolated(f"cannot drop a qubit from {i.kind}")
        if m > 2:
            ins.append(PlacedInstruction(swap(m - 1), tuple(q for q in i.qubits if q != last),
                                         i.slot))
    used = sorted({i.slot for i in ins})
    remap = {s: k for k, s in enumerate(used)}
    ins = [PlacedInstruction(i.kind, i.qubits, remap[i.slot]) for i in ins]
    meta = dict(c.metadata)
    meta["reduced_from"] = c.n
    return Circuit(c.n - 1, ins, meta)


def assemble_swap_odd(n: int, plan: SwapPlan) -> Circuit:
    """SWAP on odd n built from a plan for n + 1."""
    if n % 2 == 0 or plan.n != n + 1:
        raise PlanConstraintViolated(f"odd reduction needs odd n and a plan for n+1={n + 1}")
    return drop_last_qubit(assemble_swap(plan))


def _compositions(total: int, lo: int, hi: int):
    if total == 0:
        yield ()
        return
    for part in range(lo, min(hi, total) + 1):
        for rest in _compositions(total - part, lo, hi):
            yield (part,) + rest


def enumerate_swap_plans(n: int, max_m: int, lib: Optional[BlockLibrary] = None,
                         limit: int = 100000) -> list:
    """Every plan with block sizes <= max_m, sorted by duration under lib.

    Plans using a block that lib lacks are left out.  Ties keep the
    lexicographic order of the size tuples.
    """
    plans = []
    for centre in range(2, min(max_m, n) + 1):
        rest = n - centre
        if rest < 0 or rest % 2:
            continue
        for side in _compositions(rest // 2, 1, max_m - 1):
            plans.append(SwapPlan(n, tuple(s + 1 for s in side) + (centre,)))
            if len(plans) > limit:
                raise PlanConstraintViolated(f"more than {limit} plans; lower max_m")
    if lib is None:
        return sorted(plans, key=lambda p: p.block_sizes)
    keyed = []
    for p in plans:
        try:
            keyed.append((swap_duration_formula(p, lib), p.block_sizes, p))
        except MissingBlockEntry:
            continue
    keyed.sort(key=lambda t: (t[0], t[1]))
    return [p for _, _, p in keyed]
