"""Multiply-controlled single-qubit unitaries on top of the C^(n-2)NOT schemes."""
from __future__ import annotations

import cmath
import math
from fractions import Fraction

import numpy as np

from ..errors import InvariantViolation, NotSelfInverse, WrongDeterminant
from ..model import Circuit, CostModel, PlacedInstruction, local_u, opaque

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


def _check_unitary(u, tol):
    if u.shape != (2, 2) or np.max(np.abs(u.conj().T @ u - np.eye(2))) > tol:
        raise InvariantViolation("expected a 2x2 unitary")


def su2(a: complex, b: complex) -> np.ndarray:
    return np.array([[a, b], [-np.conj(b), np.conj(a)]], dtype=complex)


def decompose_self_inverse(u, tol: float = 1e-10) -> np.ndarray:
    """V in SU(2) with V sigma_x V^dag = u, for self-inverse u of determinant -1.

    u = x sx + y sy + z sz must satisfy x = Re(a^2 - b^2), y = Im(b^2 - a^2),
    z = 2 Re(a b*).  Giving a and b a common phase alpha, a = cos(phi) e^{i alpha}
    and b = sin(phi) e^{i alpha}, the equations become x - i y = cos(2 phi)
    e^{2 i alpha} and z = sin(2 phi).
    """
    u = np.asarray(u, dtype=complex)
    _check_unitary(u, tol)
    if np.max(np.abs(u @ u - np.eye(2))) > tol:
        raise NotSelfInverse("u @ u differs from the identity")
    det = np.linalg.det(u)
    if abs(det + 1) > tol:
        raise WrongDeterminant(f"det(u) = {det:.6g}; special self-inverse u is +-1")
    x = 0.5 * np.trace(SX @ u).real
    y = 0.5 * np.trace(SY @ u).real
    z = 0.5 * np.trace(SZ @ u).real
    phi = 0.5 * math.atan2(z, math.hypot(x, y))
    alpha = -0.5 * math.atan2(y, x) if math.hypot(x, y) > 0 else 0.0
    a = math.cos(phi) * cmath.exp(1j * alpha)
    b = math.sin(phi) * cmath.exp(1j * alpha)
    v = su2(a, b)
    if np.max(np.abs(v @ SX @ v.conj().T - u)) > 1e-9:
        raise InvariantViolation("self-inverse decomposition failed to reproduce u")
    return v


def zyz_angles(u):
    """(phase, alpha, theta, beta) with u = e^{i phase} Rz(alpha) Ry(theta) Rz(beta)."""
    u = np.asarray(u, dtype=complex)
    det = np.linalg.det(u)
    ph = cmath.phase(det) / 2
    w = u * cmath.exp(-1j * ph)
    theta = 2 * math.atan2(abs(w[1, 0]), abs(w[0, 0]))
    s = cmath.phase(w[1, 1]) if abs(w[1, 1]) > 1e-12 else 0.0
    d = cmath.phase(w[1, 0]) if abs(w[1, 0]) > 1e-12 else 0.0
    # w[1,1] = e^{i(a+b)/2} cos, w[1,0] = e^{i(a-b)/2} sin
    if abs(w[1, 1]) <= 1e-12:
        s = d
    if abs(w[1, 0]) <= 1e-12:
        d = s
    return ph, s + d, theta, s - d


def rz(a):
    return np.diag([cmath.exp(-0.5j * a), cmath.exp(0.5j * a)])


def ry(t):
    return np.array([[math.cos(t / 2), -math.sin(t / 2)],
                     [math.sin(t / 2), math.cos(t / 2)]], dtype=complex)


def abc_factors(u):
    """A, B, C with ABC = 1 and A X B X C = u for u in SU(2)."""
    _, al, th, be = zyz_angles(u)
    A = rz(al) @ ry(th / 2)
    B = ry(-th / 2) @ rz(-(al + be) / 2)
    C = rz((be - al) / 2)
    return A, B, C


def _with_locals(cnnot: Circuit, pieces) -> Circuit:
    """Interleave target-qubit locals (qubit 0) with copies of cnnot."""
    out = Circuit(cnnot.n, (), dict(cnnot.metadata))
    for piece in pieces:
        if isinstance(piece, Circuit):
            out = out.then(piece)
        else:
            out = out.then(Circuit(cnnot.n, (PlacedInstruction(local_u(piece), (0,), 0),)))
    return out


def controlled_self_inverse(cnnot: Circuit, u) -> Circuit:
    """C^(n-2)U for self-inverse u of determinant -1: V^dag, C^(n-2)NOT, V."""
    v = decompose_self_inverse(u)
    return _with_locals(cnnot, [v.conj().T, cnnot, v])


def controlled_su2(cnnot: Circuit, u) -> Circuit:
    """C^(n-2)U for u in SU(2): C, C^(n-2)NOT, B, C^(n-2)NOT, A."""
    u = np.asarray(u, dtype=complex)
    if abs(np.linalg.det(u) - 1) > 1e-10:
        raise WrongDeterminant("controlled_su2 needs det(u) = 1")
    A, B, C = abc_factors(u)
    return _with_locals(cnnot, [C, cnnot, B, cnnot, A])


def controlled_self_inverse_ext(cnnot: Circuit, v: np.ndarray, q: int):
    """C^(n-2)U with U = V (sx x 1_{2^q}) V^dag on q extra qubits above the target.

    Returns (circuit, gate_defs).  The circuit widens the line by q qubits on
    top; V acts on (target, extras) in that tensor order.
    """
    dim = 2 ** (q + 1)
    v = np.asarray(v, dtype=complex)
    if v.shape != (dim, dim):
        raise InvariantViolation(f"V must be {dim}x{dim}")
    n = cnnot.n + q
    moved = [PlacedInstruction(i.kind, tuple(x + q for x in i.qubits), i.slot)
             for i in cnnot.instructions]
    core = Circuit(n, moved)
    order = (q,) + tuple(range(q))
    vk, vdk = opaque("V", q + 1), opaque("Vdag", q + 1)
    first = Circuit(n, (PlacedInstruction(vdk, order, 0),))
    last = Circuit(n, (PlacedInstruction(vk, order, 0),))
    c = first.then(core).then(last)
    return c, {"V": v, "Vdag": v.conj().T}


def bound_controlled_u(tau_cnnot, u_class: str, cm: CostModel = CostModel(),
                       tau_v=None) -> Fraction:
    """Upper bound on the duration of a multiply-controlled unitary.

    self-inverse   tau(C^(n-2)NOT) + tau(V) + tau(V^dag)
    generic        2 tau(C^(n-2)NOT) + tau(3 local gates)
    self-inverse-ext  as self-inverse with V on q+1 qubits (tau_v required
                   unless it is local and FastLocal applies)
    """
    tau_cnnot = Fraction(tau_cnnot)
    local = Fraction(0) if cm.local_policy == "FastLocal" else cm.local_duration
    if u_class == "self-inverse":
        return tau_cnnot + 2 * local
    if u_class == "generic":
        return 2 * tau_cnnot + 3 * local
    if u_class == "self-inverse-ext":
        if tau_v is None:
            raise InvariantViolation("self-inverse-ext needs tau_v")
        return tau_cnnot + 2 * Fraction(tau_v)
    raise InvariantViolation(f"unknown unitary class {u_class!r}")


def classify(u, tol: float = 1e-10) -> str:
    u = np.asarray(u, dtype=complex)
    _check_unitary(u, tol)
    if np.max(np.abs(u @ u - np.eye(2))) <= tol and abs(np.linalg.det(u) + 1) <= tol:
        return "self-inverse"
    return "generic"
