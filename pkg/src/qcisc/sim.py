"""Dense unitary oracle: gate matrices, circuit simulation, exact targets,
Haar sampling, fidelity-targeted perturbations and the error-propagation study.

Qubit 0 is the most significant bit of a basis index throughout.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np
from scipy import linalg, optimize

from .errors import (DimensionTooLarge, InvariantViolation, RootNotBracketed,
                     UndefinedGate)
from .model import Circuit, Kind

MAX_QUBITS = 12

_X = np.array([[0, 1], [1, 0]], dtype=complex)
_SWAP = np.eye(4, dtype=complex)[[0, 2, 1, 3]]


def trace_fidelity(u: np.ndarray, v: np.ndarray) -> float:
    """Re tr(V^dag U) / N."""
    return float(np.real(np.vdot(v, u)) / u.shape[0])


def distance_fidelity(u: np.ndarray, v: np.ndarray) -> float:
    """Same quantity via 1 - ||V - U||_F^2 / (2N), valid for unitaries."""
    return float(1.0 - np.linalg.norm(v - u) ** 2 / (2 * u.shape[0]))


def phase_fidelity(u: np.ndarray, v: np.ndarray) -> float:
    """|tr(V^dag U)| / N, blind to a global phase."""
    return float(abs(np.vdot(v, u)) / u.shape[0])


def is_unitary(u: np.ndarray, tol: float = 1e-10) -> bool:
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= tol)


# -- gate matrices -------------------------------------------------------

def permutation_matrix(perm) -> np.ndarray:
    """Matrix sending basis state x to perm[x]."""
    d = len(perm)
    p = np.zeros((d, d), dtype=complex)
    p[np.asarray(perm), np.arange(d)] = 1
    return p


def dft(dim: int) -> np.ndarray:
    j = np.arange(dim)
    return np.exp(2j * np.pi * np.outer(j, j) / dim) / math.sqrt(dim)


def controlled_not(controls: int) -> np.ndarray:
    """C^c NOT with the target as the last (least significant) qubit."""
    d = 2 ** (controls + 1)
    perm = np.arange(d)
    perm[[d - 2, d - 1]] = [d - 1, d - 2]
    return permutation_matrix(perm)


def end_swap(m: int) -> np.ndarray:
    """Exchange the first and last qubit of an m-qubit window."""
    d = 2 ** m
    perm = []
    for x in range(d):
        hi, lo = (x >> (m - 1)) & 1, x & 1
        y = x & ~(1 << (m - 1)) & ~1
        perm.append(y | (lo << (m - 1)) | hi)
    return permutation_matrix(perm)


def cpswap_phases(j: int, m: int, threshold: float = 0.0) -> np.ndarray:
    """Phase table of a cP-SWAP^j on m = 2h qubits, indexed [x, y].

    Pair (p, q) of bits (big-endian within each half) carries the angle
    pi / 2^((j-1)h + 1 + p + q); rotations at or below threshold are dropped.
    """
    h = m // 2
    xs = np.arange(2 ** h)
    bits = (xs[:, None] >> (h - 1 - np.arange(h))) & 1
    phase = np.zeros((2 ** h, 2 ** h))
    for p in range(h):
        for q in range(h):
            angle = math.pi / 2 ** ((j - 1) * h + 1 + p + q)
            if angle > threshold:
                phase += angle * np.outer(bits[:, p], bits[:, q])
    return phase


def cpswap_unitary(j: int, m: int, threshold: float = 0.0) -> np.ndarray:
    """|x, y> -> exp(i phase[x, y]) |y, x>, upper half first."""
    h = m // 2
    dh = 2 ** h
    phase = cpswap_phases(j, m, threshold)
    u = np.zeros((dh * dh, dh * dh), dtype=complex)
    x, y = np.meshgrid(np.arange(dh), np.arange(dh), indexing="ij")
    u[(y * dh + x).ravel(), (x * dh + y).ravel()] = np.exp(1j * phase).ravel()
    return u


def gate_matrix(kind: Kind, gate_defs: Optional[Mapping] = None) -> np.ndarray:
    t, p = kind.tag, kind.params
    if gate_defs and kind in gate_defs:
        return np.asarray(gate_defs[kind], dtype=complex)
    if t == "LocalU":
        return np.array(p[0], dtype=complex).reshape(2, 2)
    if t == "CNOT":
        return controlled_not(1)
    if t == "CmNot":
        return controlled_not(p[0])
    if t == "ControlledPhase":
        return np.diag([1, 1, 1, np.exp(1j * p[0])])
    if t == "Swap2":
        return _SWAP.copy()
    if t == "SwapBlock":
        return end_swap(p[0])
    if t == "QftBlock":
        return dft(2 ** p[0])
    if t == "CpSwapBlock":
        return cpswap_unitary(p[0], p[1])
    if t == "OpaqueBlock" and gate_defs and p[0] in gate_defs:
        return np.asarray(gate_defs[p[0]], dtype=complex)
    raise UndefinedGate(f"no exact unitary for {kind}")


def apply_gate(state: np.ndarray, gate: np.ndarray, qubits, n: int) -> np.ndarray:
    """Apply gate to the leading n tensor axes of state (shape (2,)*n + rest)."""
    k = len(qubits)
    g = gate.reshape((2,) * (2 * k))
    out = np.tensordot(g, state, axes=(list(range(k, 2 * k)), list(qubits)))
    return np.moveaxis(out, list(range(k)), list(qubits))


def simulate_circuit(c: Circuit, gate_defs: Optional[Mapping] = None) -> np.ndarray:
    if c.n > MAX_QUBITS:
        raise DimensionTooLarge(f"{c.n} qubits exceeds the dense cap of {MAX_QUBITS}")
    d = 2 ** c.n
    state = np.eye(d, dtype=complex).reshape((2,) * c.n + (d,))
    cache = {}
    for ins in c.ordered():
        if ins.kind not in cache:
            cache[ins.kind] = gate_matrix(ins.kind, gate_defs)
        state = apply_gate(state, cache[ins.kind], ins.qubits, c.n)
    return state.reshape(d, d)


def embed(gate: np.ndarray, qubits, n: int) -> np.ndarray:
    d = 2 ** n
    state = np.eye(d, dtype=complex).reshape((2,) * n + (d,))
    return apply_gate(state, gate, qubits, n).reshape(d, d)


# -- exact targets ---------------------------------------------------------

def _bit_permutation(n: int, fn) -> np.ndarray:
    perm = []
    for x in range(2 ** n):
        b = [(x >> (n - 1 - i)) & 1 for i in range(n)]
        b = fn(b)
        perm.append(int("".join(map(str, b)), 2))
    return permutation_matrix(perm)


def multi_controlled_not(n: int, controls, target: int) -> np.ndarray:
    controls = list(controls)

    def flip(b):
        if all(b[c] for c in controls):
            b[target] ^= 1
        return b
    return _bit_permutation(n, flip)


def swap_target(n: int, a: int = 0, b: Optional[int] = None) -> np.ndarray:
    b = n - 1 if b is None else b

    def sw(bits):
        bits[a], bits[b] = bits[b], bits[a]
        return bits
    return _bit_permutation(n, sw)


def exact_target(name: str, n: int) -> np.ndarray:
    """Reference unitaries.

    swap        exchange of qubits 0 and n-1
    qft         DFT on 2^n with omega = exp(2 pi i / N)
    cnnot       C^(n-2)NOT, target qubit 0, controls 1..n-2, ancilla n-1
    toffoli     C^(n-1)NOT, controls 0..n-2, target n-1
    cnot-indirect  CNOT from qubit 0 onto qubit n-1
    """
    if n > MAX_QUBITS:
        raise DimensionTooLarge(f"{n} qubits exceeds the dense cap of {MAX_QUBITS}")
    if name == "swap":
        return swap_target(n)
    if name == "qft":
        return dft(2 ** n)
    if name == "cnnot":
        return multi_controlled_not(n, range(1, n - 1), 0)
    if name == "toffoli":
        return multi_controlled_not(n, range(n - 1), n - 1)
    if name == "cnot-indirect":
        return multi_controlled_not(n, [0], n - 1)
    raise UndefinedGate(f"unknown target {name!r}")


@dataclass(frozen=True)
class Verification:
    fidelity: float
    passed: bool


def verify_assembly(c: Circuit, target, tol: float = 1e-10,
                    gate_defs: Optional[Mapping] = None) -> Verification:
    """Compare a circuit against a named target or an explicit matrix."""
    v = exact_target(target, c.n) if isinstance(target, str) else np.asarray(target)
    f = trace_fidelity(simulate_circuit(c, gate_defs), v)
    return Verification(f, f >= 1 - tol)


# -- random unitaries and perturbations -----------------------------------

def haar_unitary(dim: int, rng) -> np.ndarray:
    """QR of a complex Ginibre matrix with the phases of diag(R) divided out."""
    rng = np.random.default_rng(rng)
    z = rng.standard_normal((dim, dim, 2)).view(complex)[..., 0] / math.sqrt(2)
    q, r = linalg.qr(z, overwrite_a=True, check_finite=False)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def haar_random_unitary(n: int, seed=None) -> np.ndarray:
    return haar_unitary(2 ** n, seed)


def unitary_eig(u: np.ndarray):
    """Eigenphases in (-pi, pi] and eigenvectors of a unitary.

    The Cayley transform i(1-U)(1+U)^-1 is Hermitian with the same
    eigenvectors, so a Hermitian solver does the work.
    """
    n = u.shape[0]
    eye = np.eye(n)
    # rotate so that no eigenvalue sits at -1
    rot = 0.3183098861837907
    w = np.exp(1j * rot) * u
    # (1-W) and (1+W) commute, so the order of the solve is free
    c = 1j * np.linalg.solve(eye + w, eye - w)
    t, vecs = linalg.eigh(c, check_finite=False, overwrite_a=True)
    # eigenvalues of the transform are tan(theta/2)
    phases = np.angle(np.exp(1j * (2 * np.arctan(t) - rot)))
    return phases, vecs


def principal_generator(u: np.ndarray):
    """H with exp(-iH) = U, eigenphases folded to (-pi, pi]; returns (eigs, vecs) of H."""
    phases, vecs = unitary_eig(u)
    return -phases, vecs


def cue_phases(dim: int, rng) -> np.ndarray:
    """Eigenphases of a Haar unitary without building one.

    Killip-Nenciu: the five-diagonal CMV matrix built from independent
    Verblunsky coefficients, |alpha_k|^2 ~ Beta(1, dim-k-1) with a uniform
    phase and alpha_{dim-1} on the unit circle, has the CUE spectrum.
    """
    rng = np.random.default_rng(rng)
    k = np.arange(dim - 1)
    rad = np.sqrt(rng.beta(1.0, dim - k - 1.0))
    alpha = np.empty(dim, dtype=complex)
    alpha[:-1] = rad * np.exp(2j * np.pi * rng.random(dim - 1))
    alpha[-1] = np.exp(2j * np.pi * rng.random())
    rho = np.sqrt(np.maximum(1 - np.abs(alpha) ** 2, 0.0))

    def blocks(start):
        b = np.eye(dim, dtype=complex)
        j = np.arange(start, dim - 1, 2)
        b[j, j], b[j, j + 1] = np.conj(alpha[j]), rho[j]
        b[j + 1, j], b[j + 1, j + 1] = rho[j], -alpha[j]
        if (dim - start) % 2:
            b[dim - 1, dim - 1] = np.conj(alpha[dim - 1])
        return b
    # L holds Theta_0, Theta_2, ...; M a leading 1 then Theta_1, Theta_3, ...
    return _banded_unitary_phases(blocks(0) @ blocks(1))


def _banded_unitary_phases(c: np.ndarray) -> np.ndarray:
    """Eigenphases in (-pi, pi] of a unitary with bandwidth 2 (Cayley route)."""
    n = c.shape[0]
    rot = 0.3183098861837907
    w = np.exp(1j * rot) * c
    ab = np.zeros((5, n), dtype=complex)
    a = np.eye(n) + w
    for d in range(-2, 3):
        diag = np.diagonal(a, d)
        if d >= 0:
            ab[2 - d, d:] = diag
        else:
            ab[2 - d, :n + d] = diag
    h = 1j * linalg.solve_banded((2, 2), ab, np.eye(n) - w, check_finite=False)
    t = linalg.eigvalsh(h, check_finite=False, overwrite_a=True)
    return np.angle(np.exp(1j * (2 * np.arctan(t) - rot)))


def haar_generator(dim: int, rng) -> np.ndarray:
    """Principal generator H (exp(-iH) Haar-distributed) as V diag V^dag with
    Haar eigenvectors and CUE eigenphases drawn independently."""
    v = haar_unitary(dim, rng)
    mu = -cue_phases(dim, rng)
    return (v * mu) @ v.conj().T


def _expi(vals, vecs):
    return (vecs * np.exp(-1j * vals)) @ vecs.conj().T


class _Perturber:
    """Solves 1 - ||A0 - exp(-i(H0 + d H1))||^2/(2N) = F for d > 0.

    Works in the eigenbasis of H0, where A0 is diagonal.
    """

    def __init__(self, a0: np.ndarray):
        self.a0 = a0
        self.lam, self.w = principal_generator(a0)
        self.n = a0.shape[0]
        self.phase = np.exp(1j * self.lam)
        dl = self.lam[:, None] - self.lam[None, :]
        small = np.abs(dl) < 1e-6
        safe = np.where(small, 1.0, dl)
        # Re of the second divided difference of exp(-ix), times exp(i lambda_a)
        self.curv = np.where(small, 0.5, (1 - np.cos(dl)) / safe ** 2)

    def fidelity_at(self, k, delta):
        h = delta * k
        h[np.diag_indices(self.n)] += self.lam
        vals, vecs = linalg.eigh(h, check_finite=False, overwrite_a=True)
        a = _expi(vals, vecs)
        f = float(np.real(np.sum(self.phase * np.diagonal(a)))) / self.n
        return f, a

    def draw(self, target: float, rng, redraws: int = 8) -> np.ndarray:
        local = self.draw_local(target, rng, redraws)
        return self.w @ local @ self.w.conj().T

    def draw_local(self, target: float, rng, redraws: int = 8) -> np.ndarray:
        """Perturbed copy expressed in the eigenbasis of A0."""
        if target >= 1.0:
            return np.diag(np.exp(-1j * self.lam))
        for _ in range(redraws):
            # a Haar generator stays Haar in any fixed basis, so draw it
            # directly in the eigenbasis of A0
            k = haar_generator(self.n, rng)
            got = self._solve(k, target)
            if got is not None:
                return got
        raise RootNotBracketed(f"fidelity {target} not reachable after {redraws} draws")

    def _solve(self, k, target):
        # second-order model 1 - F ~ kappa d^2 gives the starting bracket
        kappa = float(np.sum((k.real ** 2 + k.imag ** 2) * self.curv)) / self.n
        if not kappa > 0:
            return None
        d = math.sqrt((1 - target) / kappa)
        # rescale with the observed loss; converges in a step or two when the
        # quadratic model is good
        for _ in range(6):
            f, a = self.fidelity_at(k, d)
            if abs(f - target) <= 1e-10:
                return a
            if not f < 1:
                break
            d *= math.sqrt((1 - target) / (1 - f))
        return self._bracketed(k, target, d)

    def _bracketed(self, k, target, d):
        lo, hi = 0.0, d
        fhi = self.fidelity_at(k, hi)[0]
        tries = 0
        while fhi > target:
            lo, hi = hi, hi * 1.5
            fhi = self.fidelity_at(k, hi)[0]
            tries += 1
            if tries > 40:
                return None
        try:
            root = optimize.brentq(lambda x: self.fidelity_at(k, x)[0] - target, lo, hi,
                                   xtol=1e-15, rtol=1e-13)
        except ValueError:
            return None
        f, a = self.fidelity_at(k, root)
        return a if abs(f - target) <= 1e-8 else None


def perturb_to_fidelity(a0: np.ndarray, fidelity: float, seed=None) -> np.ndarray:
    if not 0 < fidelity <= 1:
        raise InvariantViolation("target fidelity must lie in (0, 1]")
    return _Perturber(a0).draw(fidelity, np.random.default_rng(seed))


# -- Monte-Carlo error propagation -------------------------------------------

@dataclass(frozen=True)
class McConfig:
    m: int
    fidelity: float = 0.99999
    r_max: int = 200
    trials: int = 10
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.fidelity <= 1:
            raise InvariantViolation("F_m must lie in (0, 1]")
        if self.trials < 1 or self.r_max < 4:
            raise InvariantViolation("need trials >= 1 and r_max >= 4")


@dataclass(frozen=True)
class McResult:
    r: np.ndarray
    aaaa: np.ndarray  # trials x len(r)
    abcd: np.ndarray
    independent: np.ndarray

    def summary(self, which: str):
        data = self.aaaa if which == "aaaa" else self.abcd
        return np.median(data, axis=0), data.max(axis=0), data.min(axis=0)

    def rows(self):
        am, ab, aw = self.summary("aaaa")
        bm, bb, bw = self.summary("abcd")
        for i, r in enumerate(self.r):
            yield (int(r), am[i], ab[i], aw[i], bm[i], bb[i], bw[i], self.independent[i])


def _fid(u, v):
    return distance_fidelity(u, v)


def _run_trial(m: int, f: float, r_grid, rng):
    dim = 2 ** m
    r_max = int(r_grid[-1])
    want = set(int(r) for r in r_grid)
    pa = _Perturber(haar_unitary(dim, rng))
    # the A-only sequence lives in the eigenbasis of A0, where A0^r is diagonal
    diag = np.exp(-1j * pa.lam)
    noisy = np.eye(dim, dtype=complex)
    out_a = []
    for r in range(1, r_max + 1):
        noisy = pa.draw_local(f, rng) @ noisy
        if r in want:
            out_a.append(_fid(np.diag(diag ** r), noisy))
    gens = [_Perturber(haar_unitary(dim, rng)) for _ in range(4)]
    cycle = gens[3].a0 @ gens[2].a0 @ gens[1].a0 @ gens[0].a0
    # the noisy product is carried in the eigenbasis of the block applied
    # last; hop[i] moves it from block i-1's basis into block i's
    hop = [gens[i].w.conj().T @ gens[i - 1].w for i in range(4)]
    ideal = np.eye(dim, dtype=complex)
    state = gens[0].w.conj().T
    out_b = []
    for r in range(1, r_max + 1):
        i = (r - 1) % 4
        if r > 1:
            state = hop[i] @ state
        state = gens[i].draw_local(f, rng) @ state
        if r % 4 == 0:
            ideal = cycle @ ideal
        if r in want:
            # grid points are multiples of 4, so the last block was D
            out_b.append(_fid(ideal, gens[i].w @ state))
    return out_a, out_b


def _trial_job(args):
    m, f, r_grid, seed = args
    return _run_trial(m, f, r_grid, np.random.default_rng(seed))


def run_error_propagation(cfg: McConfig, workers: Optional[int] = None) -> McResult:
    """AAAA versus ABCD sequences on the grid r = 4, 8, ..., r_max.

    Trials get their own child seeds, so the result does not depend on
    workers (default: one process per CPU, serial on a single CPU).
    """
    r_grid = np.arange(4, cfg.r_max + 1, 4)
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.trials)
    jobs = [(cfg.m, cfg.fidelity, r_grid, s) for s in seeds]
    if workers is None:
        workers = min(cfg.trials, os.cpu_count() or 1)
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            out = list(ex.map(_trial_job, jobs))
    else:
        out = [_trial_job(j) for j in jobs]
    aaaa = [a for a, _ in out]
    abcd = [b for _, b in out]
    return McResult(r_grid, np.array(aaaa), np.array(abcd),
                    cfg.fidelity ** r_grid.astype(float))
