from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcisc.assembler.swap import (SwapPlan, assemble_swap, assemble_swap_odd, enumerate_swap_plans,
                                  span, swap_duration_formula, swap_fidelity_formula)
from qcisc.errors import PlanConstraintViolated
from qcisc.library import build_default_library
from qcisc.model import circuit_duration, circuit_fidelity, swap
from qcisc.sim import swap_target, verify_assembly

LIB = build_default_library()


def all_plans(max_n=6, max_m=4):
    return [p for n in range(2, max_n + 1) for p in enumerate_swap_plans(n, max_m)]


@pytest.mark.parametrize("plan", all_plans(), ids=lambda p: f"{p.n}:{p.block_sizes}")
def test_oracle_small(plan):
    assert verify_assembly(assemble_swap(plan), "swap").passed


def test_swap4_from_two_qubit_blocks():
    c = assemble_swap(SwapPlan(4, (2, 2)))
    assert verify_assembly(c, swap_target(4)).passed
    assert c.num_slots == 3


@pytest.mark.parametrize("n", [3, 5, 7])
def test_odd_reduction(n):
    for plan in enumerate_swap_plans(n + 1, 4):
        c = assemble_swap_odd(n, plan)
        assert c.n == n
        assert verify_assembly(c, "swap").passed


def test_plan_validation():
    with pytest.raises(PlanConstraintViolated):
        SwapPlan(5, (2, 2))
    with pytest.raises(PlanConstraintViolated):
        SwapPlan(2, (1, 2))
    with pytest.raises(PlanConstraintViolated):
        assemble_swap_odd(4, SwapPlan(4, (2, 2)))


def test_enumeration_sorted_by_duration():
    plans = enumerate_swap_plans(12, 6, LIB)
    d = [swap_duration_formula(p, LIB) for p in plans]
    assert d == sorted(d)
    assert all(span(p.block_sizes) == 12 for p in plans)


def test_swap2_time():
    assert circuit_duration(assemble_swap(SwapPlan(2, (2,))), LIB) == 1.5


plans = st.lists(st.integers(2, 10), min_size=1, max_size=6).map(
    lambda s: SwapPlan(span(s), tuple(s)))


@settings(max_examples=200, deadline=None)
@given(plans)
def test_formula_consistency(plan):
    c = assemble_swap(plan)
    assert circuit_duration(c, LIB) == swap_duration_formula(plan, LIB)
    assert circuit_fidelity(c, LIB) == pytest.approx(swap_fidelity_formula(plan, LIB), rel=1e-14)
    # exponent audit: four copies of each outer block, one centre block
    *side, centre = plan.block_sizes
    want = Counter({swap(centre): 1})
    for m in side:
        want[swap(m)] += 4
    assert c.kind_counts() == want
