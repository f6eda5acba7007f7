"""Parameter-counting lower bounds for generic n-qubit unitaries built from m-qubit blocks.

All arithmetic is on Python integers so the 100-qubit column stays exact.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .errors import InvariantViolation, NoValidOverheadSplit

EXACT, ONE, TWO = "Exact", "OneOverhead", "TwoOverheads"


@dataclass(frozen=True)
class BoundQuery:
    n: int
    m: int
    mu: Optional[int] = None

    def __post_init__(self):
        if not 2 <= self.m <= self.n:
            raise InvariantViolation(f"need 2 <= m <= n, got m={self.m}, n={self.n}")
        if self.mu is not None and not 1 <= self.mu <= self.m - 1:
            raise InvariantViolation(f"need 1 <= mu <= m-1, got mu={self.mu}")


@dataclass(frozen=True)
class ComplexityReport:
    g: int
    t: int
    variant: str
    params_used: tuple  # (n, m, mu)
    fallback: bool = False

    def as_dict(self) -> dict:
        n, m, mu = self.params_used
        return {"n": n, "m": m, "mu": mu, "g": self.g, "t": self.t,
                "variant": self.variant, "fallback": self.fallback}


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


def coset_param_count(m: int, mu: int, variant: str) -> int:
    """Real parameters of SU(2^m), or of its one- or two-sided coset by the overlap."""
    if variant == "group":
        return 4 ** m - 1
    if variant == "one-sided":
        return 4 ** (m - mu) * (4 ** mu - 1)
    if variant == "two-sided":
        return (4 ** (m - mu) - 1) * (4 ** mu - 1)
    raise ValueError(f"unknown coset variant {variant!r}")


def _variant_for(rem: int, mu: int) -> Optional[str]:
    # precedence Exact > TwoOverheads > OneOverhead
    if rem == 0:
        return EXACT
    if rem == 2 * mu:
        return TWO
    if rem == mu:
        return ONE
    return None


def _numerator(n: int, m: int, mu: int, f: int, variant: str) -> int:
    block = f * (4 ** m - 1)
    if variant == EXACT:
        return 4 ** n - 1 - block
    if variant == ONE:
        return 4 ** n - 4 ** (m - mu) - block
    return 4 ** n + 1 - 2 * 4 ** (m - mu) - block


def _evaluate(n: int, m: int, mu: int, variant: str, fallback=False) -> ComplexityReport:
    f = n // m
    den = 4 ** m - 4 ** mu - 4 ** (m - mu) + 1
    num = _numerator(n, m, mu, f, variant)
    g = _ceil_div(num + f * den, den)
    t = 1 + _ceil_div(num, f * den)
    return ComplexityReport(g, t, variant, (n, m, mu), fallback)


def efficient_mus(m: int) -> tuple:
    return (m // 2,) if m % 2 == 0 else ((m - 1) // 2, (m + 1) // 2)


def bound(q: BoundQuery) -> ComplexityReport:
    n, m = q.n, q.m
    rem = n - m * (n // m)
    mus = (q.mu,) if q.mu is not None else efficient_mus(m)
    found = []
    for mu in mus:
        v = _variant_for(rem, mu)
        if v is not None:
            found.append(_evaluate(n, m, mu, v))
    if found:
        return min(found, key=lambda r: (r.g, r.t))
    # no efficient split: fall back to the overlap that absorbs the remainder
    if rem % 2 == 0 and rem // 2 <= m - 1:
        fb = _evaluate(n, m, rem // 2, TWO, fallback=True)
    else:
        fb = _evaluate(n, m, rem, ONE, fallback=True)
    err = NoValidOverheadSplit(
        f"n={n}, m={m}: remainder {rem} does not fit mu in {mus}; "
        f"fallback mu={fb.params_used[2]} ({fb.variant}) gives g={fb.g}, t={fb.t}")
    err.fallback = fb
    raise err


def gate_bound(q: BoundQuery) -> ComplexityReport:
    return bound(q)


def slot_bound(q: BoundQuery) -> ComplexityReport:
    return bound(q)


def barenco_closed_form(n: int) -> int:
    """(4^n - 3n - 1)/9, the m=2 count for even n."""
    return (4 ** n - 3 * n - 1) // 9


TABLE_NS = (2, 3, 4, 5, 6, 7, 8, 9, 10, 20, 100)


def table1() -> dict:
    """Rows of the 2-qubit and 10-qubit bounds; None where m > n."""
    rows = {"g2": [], "t2": [], "g10": [], "t10": []}
    for n in TABLE_NS:
        r2 = bound(BoundQuery(n, 2))
        rows["g2"].append(r2.g)
        rows["t2"].append(r2.t)
        r10 = bound(BoundQuery(n, 10)) if n >= 10 else None
        rows["g10"].append(r10.g if r10 else None)
        rows["t10"].append(r10.t if r10 else None)
    return rows


def _limit_denominator(m: int) -> int:
    mu = efficient_mus(m)[0]
    return 4 ** m - 4 ** mu - 4 ** (m - mu) + 1


def asymptotic_speedup(m_small: int, m_large: int) -> tuple:
    """Large-n ratios g_large/g_small and t_large/t_small as exact fractions.

    g_m ~ 4^n / d_m and t_m ~ m 4^n / (n d_m), so n and 4^n cancel.
    """
    ds, dl = _limit_denominator(m_small), _limit_denominator(m_large)
    return Fraction(ds, dl), Fraction(m_large * ds, m_small * dl)


def format_table(rows: dict) -> str:
    head = ["n"] + [str(n) for n in TABLE_NS]
    lines = [head]
    for key in ("g2", "t2", "g10", "t10"):
        cells = [key]
        for v in rows[key]:
            if v is None:
                cells.append("")
            elif v >= 10 ** 9:
                cells.append(f"{v:.2e}")
            else:
                cells.append(f"{v:,}")
        lines.append(cells)
    widths = [max(len(r[i]) for r in lines) for i in range(len(head))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in lines)
