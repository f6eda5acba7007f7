"""Direct compilation by optimal control on an Ising chain.

Energies are angular: the drift sum_k J sz_k sz_(k+1) / 2 with J = pi
produces a CNOT-equivalent coupling phase after t = 1/2 and a SWAP after
t = 3/2, which puts times in the usual units of 1/J_ZZ.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionCapExceeded, InvariantViolation, NonConvergence
from .sim import distance_fidelity, dft, exact_target, trace_fidelity

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}
DEFAULT_J = math.pi
MAX_DT = 0.05


def pauli_on(n: int, ops: dict) -> np.ndarray:
    """Tensor product with ops[k] on qubit k (qubit 0 most significant)."""
    out = np.ones((1, 1), dtype=complex)
    for k in range(n):
        out = np.kron(out, PAULI[ops[k]] if k in ops else np.eye(2))
    return out


@dataclass(frozen=True)
class ControlSystem:
    n: int
    drift: np.ndarray
    controls: tuple
    labels: tuple = ()
    edges: tuple = ()

    @property
    def dim(self) -> int:
        return 2 ** self.n

    def check(self, tol: float = 1e-12):
        for h in (self.drift,) + tuple(self.controls):
            if h.shape != (self.dim, self.dim) or np.max(np.abs(h - h.conj().T)) > tol:
                raise InvariantViolation("generators must be Hermitian of size 2^n")


def build_ising_chain(n: int, J: float = DEFAULT_J, control_qubits=None,
                      axes: str = "xy") -> ControlSystem:
    if n < 1:
        raise InvariantViolation("need at least one qubit")
    drift = np.zeros((2 ** n, 2 ** n), dtype=complex)
    edges = tuple((k, k + 1) for k in range(n - 1))
    for a, b in edges:
        drift += J * pauli_on(n, {a: "z", b: "z"}) / 2
    qs = range(n) if control_qubits is None else control_qubits
    controls, labels = [], []
    for k in qs:
        for ax in axes:
            controls.append(pauli_on(n, {k: ax}))
            labels.append(f"u_{k + 1}{ax}")
    sys = ControlSystem(n, drift, tuple(controls), tuple(labels), edges)
    sys.check()
    return sys


# -- Lie closure ----------------------------------------------------------

def _vec(a: np.ndarray) -> np.ndarray:
    return np.concatenate([a.real.ravel(), a.imag.ravel()])


def _closure(gens, add, max_dim):
    basis = []
    for g in gens:
        if add(g, basis) and len(basis) > max_dim:
            raise DimensionCapExceeded(max_dim)
    frontier = list(basis)
    while frontier:
        fresh = []
        for a in frontier:
            for b in list(basis):
                c = a @ b - b @ a
                if add(c, basis):
                    fresh.append(basis[-1])
                    if len(basis) > max_dim:
                        raise DimensionCapExceeded(max_dim)
        frontier = fresh
    return basis


def _gram_schmidt_add(tol):
    vecs = []

    def add(m, basis):
        v = _vec(m)
        for w in vecs:
            v = v - (w @ v) * w
        nv = np.linalg.norm(v)
        if nv <= tol * max(1.0, np.linalg.norm(_vec(m))):
            return False
        # keep the orthonormalised element so commutators stay well scaled
        d = m.shape[0]
        u = v / nv
        vecs.append(u)
        half = d * d
        basis.append((u[:half] + 1j * u[half:]).reshape(d, d))
        return True
    return add


def _svd_add(tol):
    rows = []

    def add(m, basis):
        v = _vec(m)
        n = np.linalg.norm(v)
        if n == 0:
            return False
        trial = np.array(rows + [v / n])
        s = np.linalg.svd(trial, compute_uv=False)
        if s[-1] <= tol:
            return False
        rows.append(v / n)
        basis.append(m / n)
        return True
    return add


def lie_closure_rank(sys: ControlSystem, max_dim: int = 4 ** 7, method: str = "gram-schmidt",
                     tol: float = 1e-9) -> int:
    """Dimension of the real Lie algebra generated by i H_d and i H_j."""
    gens = [1j * sys.drift] + [1j * h for h in sys.controls]
    if method == "gram-schmidt":
        add = _gram_schmidt_add(tol)
    elif method == "svd":
        add = _svd_add(tol)
    else:
        raise InvariantViolation(f"unknown closure method {method!r}")
    return len(_closure(gens, add, max_dim))


def is_controllable(sys: ControlSystem) -> bool:
    return lie_closure_rank(sys) == 4 ** sys.n - 1


# -- propagation and fidelity --------------------------------------------

@dataclass
class PulseSchedule:
    T: float
    u: np.ndarray          # shape (M, number of controls)
    bounds: Optional[float] = None

    def __post_init__(self):
        self.u = np.atleast_2d(np.asarray(self.u, dtype=float))
        if self.T < 0:
            raise InvariantViolation("T must be >= 0")
        if self.M < 1:
            raise InvariantViolation("a schedule needs M >= 1 intervals")
        if not np.all(np.isfinite(self.u)):
            raise InvariantViolation("amplitudes must be finite")
        if self.bounds is not None:
            self.u = np.clip(self.u, -self.bounds, self.bounds)

    @property
    def M(self) -> int:
        return self.u.shape[0]

    @property
    def dt(self) -> float:
        return self.T / self.M

    def reversed(self, negate: bool = True) -> "PulseSchedule":
        return PulseSchedule(self.T, (-1 if negate else 1) * self.u[::-1], self.bounds)

    def to_csv(self, labels) -> str:
        lines = ["interval_index,t_start," + ",".join(labels)]
        for i, row in enumerate(self.u):
            vals = ",".join(repr(float(x)) for x in row)
            lines.append(f"{i},{repr(i * self.dt)},{vals}")
        return "\n".join(lines) + "\n"


def _hamiltonians(sys: ControlSystem, u: np.ndarray) -> np.ndarray:
    ctrl = np.array(sys.controls) if sys.controls else np.zeros((0, sys.dim, sys.dim))
    return sys.drift[None] + np.einsum("mj,jab->mab", u, ctrl)


def _interval_props(sys, sched):
    """Per-interval eigensystems and propagators exp(-i dt H_k)."""
    H = _hamiltonians(sys, sched.u)
    lam, W = np.linalg.eigh(H)
    ph = np.exp(-1j * sched.dt * lam)
    U = np.einsum("mab,mb,mcb->mac", W, ph, W.conj())
    return lam, W, U


def propagate(sys: ControlSystem, sched: PulseSchedule) -> np.ndarray:
    _, _, U = _interval_props(sys, sched)
    out = np.eye(sys.dim, dtype=complex)
    for k in range(sched.M):
        out = U[k] @ out
    return out


def fidelity_pair(u: np.ndarray, v: np.ndarray, tol: float = 1e-12) -> float:
    """Trace fidelity, cross-checked against the distance form."""
    a, b = trace_fidelity(u, v), distance_fidelity(u, v)
    if abs(a - b) > tol:
        raise InvariantViolation(f"fidelity forms disagree: {a} vs {b}")
    return a


def _exp_derivative_kernel(lam, dt):
    """G[a,b] with d exp(-i dt H) = W (G * (W^dag dH W)) W^dag."""
    e = np.exp(-1j * dt * lam)
    diff = lam[:, :, None] - lam[:, None, :]
    num = e[:, :, None] - e[:, None, :]
    same = np.abs(diff) < 1e-10
    safe = np.where(same, 1.0, diff)
    return np.where(same, -1j * dt * e[:, :, None] * np.ones_like(diff), num / safe)


def fidelity_and_gradient(sys: ControlSystem, sched: PulseSchedule, target: np.ndarray):
    """F_tr and dF/du (shape M x controls) with exact interval derivatives."""
    M, N = sched.M, sys.dim
    lam, W, U = _interval_props(sys, sched)
    fwd = np.empty((M + 1, N, N), dtype=complex)
    fwd[0] = np.eye(N)
    for k in range(M):
        fwd[k + 1] = U[k] @ fwd[k]
    bwd = np.empty((M + 1, N, N), dtype=complex)
    bwd[M] = target.conj().T
    for k in range(M - 1, -1, -1):
        bwd[k] = bwd[k + 1] @ U[k]
    F = float(np.real(np.trace(bwd[0])) / N)
    if not sys.controls:
        return F, np.zeros((M, 0))
    G = _exp_derivative_kernel(lam, sched.dt)
    ctrl = np.array(sys.controls)
    # Re tr(B dU A) = Re tr(W^dag A B W (G * (W^dag Hj W)))
    inner = np.einsum("mba,mbc,mcd,mde->mae", W.conj(), fwd[:M], bwd[1:], W)
    hj = np.einsum("mba,jbc,mcd->mjad", W.conj(), ctrl, W)
    grad = np.real(np.einsum("mda,mjad->mj", inner, G[:, None] * hj)) / N
    return F, grad


def finite_difference_gradient(sys, sched, target, h: float = 1e-6) -> np.ndarray:
    g = np.zeros_like(sched.u)
    for idx in np.ndindex(*sched.u.shape):
        up, dn = sched.u.copy(), sched.u.copy()
        up[idx] += h
        dn[idx] -= h
        fp = trace_fidelity(propagate(sys, PulseSchedule(sched.T, up)), target)
        fm = trace_fidelity(propagate(sys, PulseSchedule(sched.T, dn)), target)
        g[idx] = (fp - fm) / (2 * h)
    return g


# -- GRAPE ----------------------------------------------------------------

@dataclass
class GrapeOptions:
    max_iters: int = 2000
    tol: float = 1e-8              # stop once F > 1 - tol
    stall_gain: float = 1e-9       # ... or once F gains less than this
    stall_window: int = 50         # ... over this many iterations
    init_scale: float = 0.1
    bounds: Optional[float] = None
    memory: int = 10
    seed: Optional[int] = 0
    strict: bool = False


@dataclass
class GrapeResult:
    fidelity: float
    schedule: PulseSchedule
    iterations: int
    converged: bool
    fidelity_history: list = field(default_factory=list)


def default_intervals(T: float) -> int:
    return max(1, math.ceil(T / MAX_DT - 1e-9))


def special_unitary(v: np.ndarray, branch: int = 0) -> np.ndarray:
    """v times the phase that makes its determinant one (branch picks the root)."""
    N = v.shape[0]
    ph = np.angle(np.linalg.det(v))
    return v * np.exp(-1j * (ph + 2 * np.pi * branch) / N)


def _lbfgs_direction(g, s_hist, y_hist):
    q = g.copy()
    alphas = []
    for s, y in zip(reversed(s_hist), reversed(y_hist)):
        rho = 1.0 / (y @ s)
        a = rho * (s @ q)
        alphas.append((rho, a))
        q -= a * y
    if s_hist:
        s, y = s_hist[-1], y_hist[-1]
        q *= (s @ y) / (y @ y)
    for (s, y), (rho, a) in zip(zip(s_hist, y_hist), reversed(alphas)):
        b = rho * (y @ q)
        q += (a - b) * s
    return q


def grape_optimize(sys: ControlSystem, target: np.ndarray, T: float, M: Optional[int] = None,
                   options: Optional[GrapeOptions] = None, init=None) -> GrapeResult:
    """Maximise Re tr(V^dag U(T))/N over piecewise-constant amplitudes.

    Minimises -F with limited-memory BFGS steps and an Armijo backtracking
    line search, so the recorded fidelity never decreases.
    """
    opt = options or GrapeOptions()
    target = np.asarray(target, dtype=complex)
    if T <= 0 and T != 0:
        raise InvariantViolation("T must be positive")
    if target.shape != (sys.dim, sys.dim):
        raise InvariantViolation("target dimension does not match the system")
    M = default_intervals(T) if M is None else M
    if M < 1:
        raise InvariantViolation("M must be >= 1")
    nc = len(sys.controls)
    rng = np.random.default_rng(opt.seed)
    if init is not None:
        u0 = np.asarray(init, dtype=float).reshape(M, nc)
    else:
        u0 = opt.init_scale * rng.uniform(-1, 1, size=(M, nc))
    if nc == 0:
        sched = PulseSchedule(T, np.zeros((M, 0)))
        f = trace_fidelity(propagate(sys, sched), target)
        ok = f > 1 - opt.tol
        if not ok:
            warnings.warn("no controls: the target lies outside the drift orbit, "
                          "optimisation skipped", RuntimeWarning, stacklevel=2)
        return GrapeResult(f, sched, 0, ok, [f])

    def evaluate(x):
        s = PulseSchedule(T, x.reshape(M, nc), opt.bounds)
        f, g = fidelity_and_gradient(sys, s, target)
        return f, g.ravel(), s.u.ravel()

    f, g, x = evaluate(u0.ravel())
    hist = [f]
    s_hist, y_hist = [], []
    converged = f > 1 - opt.tol
    it = 0
    while not converged and it < opt.max_iters:
        it += 1
        # descent direction for -F is -H(-g) = H g
        d = _lbfgs_direction(g, s_hist, y_hist)
        slope = g @ d
        if slope <= 0:
            s_hist.clear()
            y_hist.clear()
            d, slope = g.copy(), g @ g
        if slope == 0:
            break
        step = 1.0
        while True:
            f_new, g_new, x_new = evaluate(x + step * d)
            if f_new >= f + 1e-4 * step * slope:
                break
            step *= 0.5
            if step < 1e-12:
                f_new = None
                break
        if f_new is None:
            if not s_hist:
                break
            s_hist.clear()
            y_hist.clear()
            continue
        s, y = x_new - x, g - g_new
        if s @ y > 1e-14:
            s_hist.append(s)
            y_hist.append(y)
            if len(s_hist) > opt.memory:
                s_hist.pop(0)
                y_hist.pop(0)
        x, f, g = x_new, f_new, g_new
        hist.append(f)
        if f > 1 - opt.tol:
            converged = True
        elif len(hist) > opt.stall_window and hist[-1] - hist[-1 - opt.stall_window] < opt.stall_gain:
            break
    result = GrapeResult(f, PulseSchedule(T, x.reshape(M, nc), opt.bounds), it, converged, hist)
    if opt.strict and not converged:
        raise NonConvergence(opt.max_iters, result)
    return result


def best_of(sys, target, T, M=None, restarts: int = 20, seed: int = 0,
            options: Optional[GrapeOptions] = None, stop_at: Optional[float] = None) -> GrapeResult:
    """Best result over seeded restarts; stop_at ends the search early."""
    base = options or GrapeOptions()
    seeds = np.random.SeedSequence(seed).generate_state(restarts)
    best = None
    for s in seeds:
        o = GrapeOptions(**{**base.__dict__, "seed": int(s)})
        r = grape_optimize(sys, target, T, M, o)
        if best is None or r.fidelity > best.fidelity:
            best = r
        if stop_at is not None and best.fidelity >= stop_at:
            break
    return best


def minimal_time_sweep(sys, target, T_grid: Sequence[float], M=None, restarts: int = 5,
                       seed: int = 0, options=None, slack: float = 1e-6):
    """Rows (T, best F_tr) and the running best envelope, checked non-decreasing."""
    rows = []
    for T in T_grid:
        r = best_of(sys, target, T, M, restarts, seed, options)
        rows.append((float(T), r.fidelity))
    env = np.maximum.accumulate([f for _, f in rows]) if rows else np.array([])
    raw = [f for _, f in rows]
    if any(raw[i] < raw[i - 1] - slack and raw[i] < env[i] - slack for i in range(1, len(raw))):
        warnings.warn("sweep fidelities dip with T beyond the optimiser slack",
                      RuntimeWarning, stacklevel=2)
    return rows, list(env)


def named_target(name: str, n: int) -> np.ndarray:
    if name == "cnot":
        if n != 2:
            raise InvariantViolation("cnot target needs n = 2")
        return exact_target("cnot-indirect", 2)
    if name == "swap":
        return exact_target("swap", n)
    if name == "qft":
        return dft(2 ** n)
    if name == "identity":
        return np.eye(2 ** n, dtype=complex)
    raise InvariantViolation(f"unknown GRAPE target {name!r}")
