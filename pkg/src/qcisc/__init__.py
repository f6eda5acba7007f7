"""qcisc: assembling large quantum gates from pre-compiled multi-qubit blocks."""
from .errors import QcIscError
from .library import build_default_library, default_library
from .model import (BlockEntry, BlockLibrary, Circuit, CostModel, Kind, PlacedInstruction,
                    QualityFactor, circuit_duration, circuit_fidelity, circuit_quality,
                    load_block_library, load_circuit, save_block_library, save_circuit)

__version__ = "0.1.0"
