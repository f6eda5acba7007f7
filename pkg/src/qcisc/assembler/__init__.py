"""Scalable assembly of SWAP, QFT and multiply-controlled gates from library blocks."""
from .cnnot import (BACKBONE, BASIC, CnNotPlan, assemble_cnnot, assemble_cnnot_backbone,
                    assemble_cnnot_basic, backbone_block_counts, backbone_duration_derived,
                    backbone_duration_quoted, backbone_fidelity_quoted, backbone_jordan_power,
                    basic_block_counts, basic_duration_formula, basic_fidelity_formula,
                    cnnot_block_counts, cnnot_duration_formula, fig7_network,
                    optimize_m3_split, plan_backbone)
from .cu import (bound_controlled_u, classify, controlled_self_inverse,
                 controlled_self_inverse_ext, controlled_su2, decompose_self_inverse)
from .metrics import (REPORTED_SLOPES, SlopeMetrics, fit_slope, metrics_from_slopes,
                      reported_metrics, slope_metrics)
from .qft import (DEFAULT_THRESHOLD, QftPlan, assemble_qft, check_ordering, collapse_index,
                  cooley_tukey_factors, cooley_tukey_residual, qft_block_counts,
                  qft_duration_formula, qft_fidelity_formula, qft_gate_defs,
                  truncated_cpswap_unitary)
from .swap import (SwapPlan, assemble_swap, assemble_swap_odd, drop_last_qubit,
                   enumerate_swap_plans, swap_duration_formula, swap_fidelity_formula)
