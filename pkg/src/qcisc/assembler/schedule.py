"""Slot packing for gate lists on the qubit line."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from ..model import Circuit, Kind, PlacedInstruction


@dataclass(frozen=True)
class Op:
    """An unscheduled instruction.

    controls/target are filled for controlled-NOT style gates so the
    scheduler may let two of them pass each other when they commute.
    """
    kind: Kind
    qubits: tuple
    controls: Optional[tuple] = None
    target: Optional[int] = None
    role: str = ""


def commutes(a: Op, b: Op) -> bool:
    if not set(a.qubits) & set(b.qubits):
        return True
    if a.target is None or b.target is None:
        return False
    # two multi-controlled NOTs commute unless one flips a control of the other
    return a.target not in b.controls and b.target not in a.controls


def asap(n: int, ops: Sequence[Op], reorder: bool = False, start: int = 0,
         metadata=None) -> Circuit:
    """Place every op in the earliest slot after the ops it depends on.

    Without reorder an op waits for every earlier op sharing a qubit;
    with reorder it only waits for the earlier ops it fails to commute with.
    """
    slots = _asap_slots(n, ops, reorder, start)
    ins = [PlacedInstruction(o.kind, o.qubits, s) for o, s in zip(ops, slots)]
    return Circuit(n, _compact(ins), dict(metadata or {}))


def _asap_slots(n, ops, reorder, start):
    busy = {}
    out = []
    if not reorder:
        free = [start] * n
        for o in ops:
            s = max(free[q] for q in o.qubits)
            out.append(s)
            for q in o.qubits:
                free[q] = s + 1
        return out
    for i, o in enumerate(ops):
        lo = start
        for j in range(i):
            if not commutes(ops[j], o):
                lo = max(lo, out[j] + 1)
        s = lo
        while busy.get(s, set()) & set(o.qubits):
            s += 1
        busy.setdefault(s, set()).update(o.qubits)
        out.append(s)
    return out


def layered(n: int, layers: Sequence[Sequence[Op]], metadata=None) -> Circuit:
    """ASAP inside each layer, with a barrier between consecutive layers."""
    ins = []
    start = 0
    for layer in layers:
        if not layer:
            continue
        slots = _asap_slots(n, layer, False, start)
        ins += [PlacedInstruction(o.kind, o.qubits, s) for o, s in zip(layer, slots)]
        start = max(slots) + 1
    return Circuit(n, _compact(ins), dict(metadata or {}))


def _compact(ins):
    used = sorted({i.slot for i in ins})
    remap = {s: k for k, s in enumerate(used)}
    return [PlacedInstruction(i.kind, i.qubits, remap[i.slot]) for i in ins]


def ops_of(c: Circuit) -> list:
    return [Op(i.kind, i.qubits) for i in c.ordered()]
