"""The bundled block library.

Durations are simple analytic models in units of 1/J_ZZ; every fidelity is
the same free parameter.  Regenerate the JSON with ``python3 -m qcisc.library``.
"""
from __future__ import annotations

import math
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .model import (BlockEntry, BlockLibrary, CostModel, cmnot, cnot, cphase, cpswap,
                    library_from_json, qft, save_block_library, swap)

DEFAULT_FIDELITY = 0.99999
MAX_BLOCK = 10
MAX_J = 12

# regression constants for large blocks (linear in the block size)
SWAP_SLOPE, SWAP_OFFSET = Fraction("0.69"), Fraction("0.06")
CNOT_SLOPE, CNOT_OFFSET = Fraction("2.15"), Fraction("-4.48")
MAX_CONTROLS = 8


def qft_time(m: int) -> Fraction:
    """Variant-I count with QFT_1 free, cPS^1_2 = 5/4 and cPS^2_2 = 11/8."""
    if m == 1:
        return Fraction(0)
    return Fraction(5, 4) * (m - 1) + Fraction(11, 8) * (m - 2)


def cpswap_time(j: int, m: int) -> Fraction:
    h = m // 2
    if h == 1:
        # SWAP (3/2) minus the saving of a controlled phase pi/2^j
        return Fraction(3, 2) - Fraction(1, 2 ** (j + 1))
    # between QFT_h and QFT_2h, closer to QFT_h as the angles shrink
    lo, hi = qft_time(h), qft_time(2 * h)
    return lo + (hi - lo) / 2 ** j


def default_entries(fidelity: float = DEFAULT_FIDELITY) -> list:
    e = [BlockEntry(cnot(), Fraction(1, 2), fidelity),
         BlockEntry(swap(2), Fraction(3, 2), fidelity)]
    for m in range(3, MAX_BLOCK + 1):
        e.append(BlockEntry(swap(m), SWAP_SLOPE * m + SWAP_OFFSET, fidelity))
    for c in range(2, MAX_CONTROLS + 1):
        e.append(BlockEntry(cmnot(c), CNOT_SLOPE * (c + 1) + CNOT_OFFSET, fidelity))
    for j in range(0, 11):
        e.append(BlockEntry(cphase(math.pi / 2 ** j), Fraction(1, 2 ** (j + 1)), fidelity))
    for m in range(1, MAX_BLOCK + 1):
        e.append(BlockEntry(qft(m), qft_time(m), fidelity))
    for h in range(1, MAX_BLOCK // 2 + 1):
        for j in range(1, MAX_J + 1):
            e.append(BlockEntry(cpswap(j, 2 * h), cpswap_time(j, 2 * h), fidelity))
    return e


def build_default_library(fidelity: float = DEFAULT_FIDELITY) -> BlockLibrary:
    return BlockLibrary({x.kind: x for x in default_entries(fidelity)}, CostModel())


def default_library() -> BlockLibrary:
    """The packaged JSON library."""
    import json
    text = resources.files("qcisc").joinpath("data/default_library.json").read_text()
    return library_from_json(json.loads(text), "default_library.json")


def write_default_library(path=None) -> Path:
    path = Path(path) if path else Path(__file__).parent / "data" / "default_library.json"
    save_block_library(build_default_library(), path)
    return path


if __name__ == "__main__":
    print(write_default_library())
