"""Circuit IR, instruction kinds, cost model and the block library."""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Optional

from .errors import (InvariantViolation, MissingBlockEntry, OverlapViolation,
                     ParseError)

PARAM_NAMES = {
    "LocalU": ("matrix",),
    "CNOT": (),
    "ControlledPhase": ("angle",),
    "Swap2": (),
    "SwapBlock": ("m",),
    "QftBlock": ("m",),
    "CpSwapBlock": ("j", "m"),
    "CmNot": ("controls",),
    "CmNotK": ("controls", "spacers"),
    "OpaqueBlock": ("label", "m"),
}

SOURCES = ("Analytic", "Grape", "Ingested")


@dataclass(frozen=True)
class Kind:
    """Instruction kind: a tag plus its positional parameters."""
    tag: str
    params: tuple = ()

    def __post_init__(self):
        if self.tag not in PARAM_NAMES:
            raise InvariantViolation(f"unknown instruction tag {self.tag!r}")
        if len(self.params) != len(PARAM_NAMES[self.tag]):
            raise InvariantViolation(f"{self.tag} expects params {PARAM_NAMES[self.tag]}")
        p = dict(zip(PARAM_NAMES[self.tag], self.params))
        if "m" in p and p["m"] < 1:
            raise InvariantViolation(f"{self.tag}: m must be >= 1")
        if "j" in p and p["j"] < 1:
            raise InvariantViolation("CpSwapBlock: phase index j must be >= 1")
        if "controls" in p and p["controls"] < 1:
            raise InvariantViolation(f"{self.tag}: controls must be >= 1")
        if "spacers" in p and p["spacers"] < 1:
            raise InvariantViolation("CmNotK: spacers must be >= 1")
        if self.tag == "ControlledPhase" and not 0 < p["angle"] < 2 * math.pi:
            raise InvariantViolation("ControlledPhase angle must lie in (0, 2pi)")
        if self.tag == "CpSwapBlock" and p["m"] % 2:
            raise InvariantViolation("CpSwapBlock acts on an even number of qubits")

    @property
    def size(self) -> int:
        t, p = self.tag, self.params
        if t == "LocalU":
            return 1
        if t in ("CNOT", "ControlledPhase", "Swap2"):
            return 2
        if t in ("SwapBlock", "QftBlock"):
            return p[0]
        if t == "CpSwapBlock":
            return p[1]
        if t == "CmNot":
            return p[0] + 1
        if t == "CmNotK":
            return p[0] + p[1]
        return p[1]

    def param_dict(self) -> dict:
        d = dict(zip(PARAM_NAMES[self.tag], self.params))
        if self.tag == "LocalU":
            d["matrix"] = [[z.real, z.imag] for z in self.params[0]]
        return d

    def __str__(self):
        if not self.params:
            return self.tag
        if self.tag == "LocalU":
            return "LocalU"
        args = ",".join(f"{k}={v}" for k, v in zip(PARAM_NAMES[self.tag], self.params))
        return f"{self.tag}({args})"

    @classmethod
    def from_json(cls, tag: str, params: Optional[Mapping] = None) -> "Kind":
        params = dict(params or {})
        if tag not in PARAM_NAMES:
            raise ParseError(f"unknown kind {tag!r}")
        try:
            vals = []
            for name in PARAM_NAMES[tag]:
                v = params[name]
                if name == "matrix":
                    v = tuple(complex(re, im) for re, im in v)
                elif name == "angle":
                    v = float(v)
                elif name != "label":
                    v = int(v)
                vals.append(v)
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"kind {tag}: bad or missing parameter ({exc})") from None
        return cls(tag, tuple(vals))


# convenience constructors; they normalise the 2-qubit and 1-control aliases
def cnot() -> Kind:
    return Kind("CNOT")


def swap(m: int) -> Kind:
    return Kind("Swap2") if m == 2 else Kind("SwapBlock", (m,))


def qft(m: int) -> Kind:
    return Kind("QftBlock", (m,))


def cpswap(j: int, m: int) -> Kind:
    return Kind("CpSwapBlock", (j, m))


def cmnot(controls: int) -> Kind:
    return Kind("CNOT") if controls == 1 else Kind("CmNot", (controls,))


def cmnotk(controls: int, spacers: int) -> Kind:
    return Kind("CmNotK", (controls, spacers))


def cphase(angle: float) -> Kind:
    return Kind("ControlledPhase", (float(angle),))


def local_u(matrix) -> Kind:
    flat = tuple(complex(z) for row in matrix for z in row)
    return Kind("LocalU", (flat,))


def opaque(label: str, m: int) -> Kind:
    return Kind("OpaqueBlock", (label, m))


@dataclass(frozen=True)
class PlacedInstruction:
    kind: Kind
    qubits: tuple
    slot: int

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if len(self.qubits) != self.kind.size:
            raise InvariantViolation(
                f"{self.kind} acts on {self.kind.size} qubits, got {len(self.qubits)}")
        if len(set(self.qubits)) != len(self.qubits):
            raise InvariantViolation("repeated qubit in instruction")
        lo = min(self.qubits)
        if sorted(self.qubits) != list(range(lo, lo + len(self.qubits))):
            raise InvariantViolation(f"{self.kind} needs a contiguous window, got {self.qubits}")
        if self.slot < 0:
            raise InvariantViolation("slot must be nonnegative")


@dataclass(frozen=True)
class Circuit:
    n: int
    instructions: tuple = ()
    metadata: Mapping = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "instructions", tuple(self.instructions))
        if self.n < 1:
            raise InvariantViolation("circuit needs at least one qubit")
        for ins in self.instructions:
            if min(ins.qubits) < 0 or max(ins.qubits) >= self.n:
                raise InvariantViolation(f"qubits {ins.qubits} outside [0, {self.n})")
        check_slots(self.instructions)

    @property
    def num_slots(self) -> int:
        return 1 + max((i.slot for i in self.instructions), default=-1)

    def slots(self) -> list:
        out = [[] for _ in range(self.num_slots)]
        for ins in self.instructions:
            out[ins.slot].append(ins)
        return out

    def ordered(self) -> list:
        """Instructions in execution order (slot by slot)."""
        return [ins for s in self.slots() for ins in s]

    def histogram(self) -> dict:
        return dict(sorted(Counter(str(i.kind) for i in self.instructions).items()))

    def kind_counts(self) -> Counter:
        return Counter(i.kind for i in self.instructions)

    def then(self, other: "Circuit") -> "Circuit":
        if other.n != self.n:
            raise InvariantViolation("cannot concatenate circuits of different width")
        off = self.num_slots
        moved = [PlacedInstruction(i.kind, i.qubits, i.slot + off) for i in other.instructions]
        return Circuit(self.n, self.instructions + tuple(moved), dict(self.metadata))

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "instructions": [
                {"kind": i.kind.tag, "params": i.kind.param_dict(),
                 "qubits": list(i.qubits), "slot": i.slot}
                for i in self.instructions
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "Circuit":
        try:
            n = int(data["n"])
            ins = []
            for k, d in enumerate(data["instructions"]):
                try:
                    kind = Kind.from_json(d["kind"], d.get("params"))
                    ins.append(PlacedInstruction(kind, tuple(d["qubits"]), int(d["slot"])))
                except (KeyError, TypeError) as exc:
                    raise ParseError(f"instruction {k}: missing field {exc}") from None
        except KeyError as exc:
            raise ParseError(f"circuit: missing field {exc}") from None
        return cls(n, tuple(ins))


def check_slots(instructions: Iterable[PlacedInstruction]) -> None:
    used = {}
    for ins in instructions:
        busy = used.setdefault(ins.slot, set())
        if busy & set(ins.qubits):
            raise OverlapViolation(f"slot {ins.slot}: qubits {ins.qubits} already in use")
        busy.update(ins.qubits)
    if used and sorted(used) != list(range(max(used) + 1)):
        raise OverlapViolation("slots must form a contiguous range 0..S-1")


@dataclass(frozen=True)
class CostModel:
    j_zz: float = 1.0
    t_r: float = 250.0
    local_policy: str = "FastLocal"
    local_duration: Fraction = Fraction(0)

    def __post_init__(self):
        if not self.t_r > 0:
            raise InvariantViolation("t_r must be positive")
        if self.local_policy not in ("FastLocal", "TimedLocal"):
            raise InvariantViolation(f"unknown local policy {self.local_policy!r}")
        object.__setattr__(self, "local_duration", to_fraction(self.local_duration))


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(str(x))


@dataclass(frozen=True)
class BlockEntry:
    kind: Kind
    duration: Fraction
    fidelity: float
    source: str = "Analytic"
    pulse_ref: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "duration", to_fraction(self.duration))
        if self.duration < 0:
            raise InvariantViolation(f"{self.kind}: negative duration")
        if not 0 < self.fidelity <= 1:
            raise InvariantViolation(f"{self.kind}: fidelity {self.fidelity} outside (0, 1]")
        if self.source not in SOURCES:
            raise InvariantViolation(f"{self.kind}: unknown source {self.source!r}")


@dataclass(frozen=True)
class BlockLibrary:
    entries: Mapping = field(default_factory=dict)
    cost_model: CostModel = field(default_factory=CostModel)

    def lookup(self, kind: Kind) -> BlockEntry:
        try:
            return self.entries[kind]
        except KeyError:
            raise MissingBlockEntry(kind) from None

    def has(self, kind: Kind) -> bool:
        return kind in self.entries

    def duration(self, kind: Kind, cm: Optional[CostModel] = None) -> Fraction:
        cm = cm or self.cost_model
        if kind.tag == "LocalU":
            if cm.local_policy == "FastLocal":
                return Fraction(0)
            if kind not in self.entries:
                return cm.local_duration
        return self.lookup(kind).duration

    def fidelity(self, kind: Kind) -> float:
        if kind.tag == "LocalU" and kind not in self.entries:
            return 1.0
        return self.lookup(kind).fidelity

    def with_entries(self, entries: Iterable[BlockEntry]) -> "BlockLibrary":
        merged = dict(self.entries)
        merged.update({e.kind: e for e in entries})
        return BlockLibrary(merged, self.cost_model)


@dataclass(frozen=True)
class QualityFactor:
    fidelity: float
    duration: Fraction
    quality: float

    @classmethod
    def of(cls, fidelity: float, duration, t_r: float) -> "QualityFactor":
        duration = to_fraction(duration)
        q = fidelity if duration == 0 else fidelity * math.exp(-float(duration) / t_r)
        return cls(fidelity, duration, q)

    def as_dict(self) -> dict:
        return {"fidelity": self.fidelity, "duration": float(self.duration),
                "quality": self.quality}


def circuit_duration(c: Circuit, lib: BlockLibrary, cm: Optional[CostModel] = None) -> Fraction:
    """Sum over slots of the slowest instruction in each slot."""
    check_slots(c.instructions)
    total = Fraction(0)
    for slot in c.slots():
        if slot:
            total += max(lib.duration(i.kind, cm) for i in slot)
    return total


def circuit_fidelity(c: Circuit, lib: BlockLibrary) -> float:
    f = 1.0
    for kind, cnt in c.kind_counts().items():
        f *= lib.fidelity(kind) ** cnt
    return f


def circuit_quality(c: Circuit, lib: BlockLibrary, cm: Optional[CostModel] = None) -> QualityFactor:
    cm = cm or lib.cost_model
    return QualityFactor.of(circuit_fidelity(c, lib), circuit_duration(c, lib, cm), cm.t_r)


def load_block_library(path) -> BlockLibrary:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    return library_from_json(data, str(path))


def library_from_json(data: Mapping, where: str = "<library>") -> BlockLibrary:
    if not isinstance(data, Mapping) or "entries" not in data:
        raise ParseError(f"{where}: expected an object with an 'entries' list")
    if data.get("units", "1/Jzz") != "1/Jzz":
        raise ParseError(f"{where}: units must be '1/Jzz'")
    cm = CostModel(t_r=float(data.get("t_r", 250.0)))
    entries = {}
    for k, e in enumerate(data["entries"]):
        try:
            kind = Kind.from_json(e["kind"], e.get("params"))
            entry = BlockEntry(kind, to_fraction(e["duration"]), float(e["fidelity"]),
                               e.get("source", "Ingested"), e.get("pulse_ref"))
        except KeyError as exc:
            raise ParseError(f"{where}: entry {k}: missing field {exc}") from None
        except ParseError as exc:
            raise ParseError(f"{where}: entry {k}: {exc}") from None
        except InvariantViolation as exc:
            raise InvariantViolation(f"{where}: entry {k}: {exc}") from None
        entries[kind] = entry
    return BlockLibrary(entries, cm)


def library_to_json(lib: BlockLibrary) -> dict:
    out = []
    for e in sorted(lib.entries.values(), key=lambda e: (e.kind.tag, repr(e.kind.params))):
        d = {"kind": e.kind.tag, "params": e.kind.param_dict(),
             "duration": fraction_to_json(e.duration), "fidelity": e.fidelity,
             "source": e.source}
        if e.pulse_ref is not None:
            d["pulse_ref"] = e.pulse_ref
        out.append(d)
    return {"units": "1/Jzz", "t_r": lib.cost_model.t_r, "entries": out}


def fraction_to_json(x: Fraction):
    # floats when they round-trip through repr exactly, "p/q" strings otherwise
    f = float(x)
    return f if Fraction(repr(f)) == x else f"{x.numerator}/{x.denominator}"


def save_block_library(lib: BlockLibrary, path) -> None:
    Path(path).write_text(json.dumps(library_to_json(lib), indent=1) + "\n")


def load_circuit(path) -> Circuit:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    return Circuit.from_json(data)


def save_circuit(c: Circuit, path) -> None:
    Path(path).write_text(json.dumps(c.to_json()) + "\n")
