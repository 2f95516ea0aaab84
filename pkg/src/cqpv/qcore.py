"""Small-dimension quantum state and channel algebra.

Everything here works on dense complex matrices (dimension at most 16) and is
meant for exact numerical checks rather than speed.  Square roots and
pseudo-inverses go through a Hermitian eigendecomposition with eigenvalues
clamped at ``EIG_CLAMP``.

Qubit bases are indexed ``0..m-1`` and lie on the X-Z great circle of the Bloch
sphere at angle ``pi * j / m`` from the Z axis, so ``m=2`` gives the
computational (j=0) and Hadamard (j=1) bases.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
TRACE_TOL = 1e-10
TP_TOL = 1e-10
EIG_CLAMP = 1e-12
MAX_DIM = 16

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class QuantumError(ValueError):
    """Invalid quantum object or operation."""


class DimensionMismatch(QuantumError):
    pass


class DegenerateConditioning(QuantumError):
    """Conditioning on an outcome of (numerically) zero probability."""


class NotTracePreserving(QuantumError):
    pass


def _as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise QuantumError(f"expected a square matrix, got shape {m.shape}")
    return m


def hermitize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated density operator.

    ``subnormalized=True`` relaxes the unit-trace requirement to ``tr <= 1``;
    use it only for unnormalized instrument outputs.
    """

    data: np.ndarray
    subnormalized: bool = False

    def __post_init__(self):
        m = _as_matrix(self.data)
        if m.shape[0] > MAX_DIM:
            raise QuantumError(f"dimension {m.shape[0]} exceeds cap {MAX_DIM}")
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise QuantumError("density matrix is not Hermitian")
        m = hermitize(m)
        if np.linalg.eigvalsh(m).min() < -PSD_TOL:
            raise QuantumError("density matrix is not positive semidefinite")
        tr = np.trace(m).real
        if self.subnormalized:
            if tr > 1 + TRACE_TOL:
                raise QuantumError(f"sub-normalized state has trace {tr} > 1")
        elif abs(tr - 1) > TRACE_TOL:
            raise QuantumError(f"density matrix has trace {tr}, expected 1")
        m.setflags(write=False)
        object.__setattr__(self, "data", m)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    @classmethod
    def _trusted(cls, data: np.ndarray) -> "DensityMatrix":
        """Wrap a matrix that is a valid state by construction (no checks)."""
        obj = object.__new__(cls)
        data = np.asarray(data, dtype=complex)
        data.setflags(write=False)
        object.__setattr__(obj, "data", data)
        object.__setattr__(obj, "subnormalized", False)
        return obj

    @classmethod
    def from_vector(cls, psi) -> "DensityMatrix":
        v = np.asarray(psi, dtype=complex).ravel()
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))


@dataclass(frozen=True, eq=False)
class MeasurementOperator:
    """POVM element ``0 <= M <= 1``."""

    data: np.ndarray

    def __post_init__(self):
        m = _as_matrix(self.data)
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise QuantumError("measurement operator is not Hermitian")
        m = hermitize(m)
        ev = np.linalg.eigvalsh(m)
        if ev.min() < -PSD_TOL or ev.max() > 1 + PSD_TOL:
            raise QuantumError("measurement operator eigenvalues outside [0, 1]")
        m.setflags(write=False)
        object.__setattr__(self, "data", m)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)


def _kraus_tuple(ops) -> tuple:
    out = []
    for k in ops:
        k = np.array(k, dtype=complex)
        if k.ndim != 2:
            raise QuantumError("Kraus operators must be matrices")
        k.setflags(write=False)
        out.append(k)
    if not out:
        raise QuantumError("need at least one Kraus operator")
    d_in = out[0].shape[1]
    if any(k.shape[1] != d_in for k in out):
        raise DimensionMismatch("Kraus operators disagree on input dimension")
    return tuple(out)


def kraus_effect(ops: Sequence[np.ndarray]) -> np.ndarray:
    """``sum_j K_j^dagger K_j``."""
    return sum(k.conj().T @ k for k in ops)


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """Trace-preserving CP map given by its Kraus operators."""

    kraus: tuple

    def __post_init__(self):
        ops = _kraus_tuple(self.kraus)
        object.__setattr__(self, "kraus", ops)
        eff = kraus_effect(ops)
        if np.max(np.abs(eff - np.eye(eff.shape[0]))) > TP_TOL:
            raise NotTracePreserving("sum of K^dagger K differs from identity")

    @property
    def dim_in(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def dim_out(self) -> int:
        return self.kraus[0].shape[0]

    def apply(self, rho) -> np.ndarray:
        r = np.asarray(rho, dtype=complex)
        if r.shape[0] != self.dim_in:
            raise DimensionMismatch(f"channel expects dim {self.dim_in}, got {r.shape[0]}")
        return sum(k @ r @ k.conj().T for k in self.kraus)

    __call__ = apply


@dataclass(frozen=True, eq=False)
class QuantumInstrument:
    """Outcome-labelled family of CP maps whose sum is trace preserving."""

    kraus_sets: Mapping

    def __post_init__(self):
        sets = {label: _kraus_tuple(ops) for label, ops in dict(self.kraus_sets).items()}
        if not sets:
            raise QuantumError("instrument has no outcomes")
        dims = {ops[0].shape[1] for ops in sets.values()}
        if len(dims) != 1:
            raise DimensionMismatch("outcomes disagree on input dimension")
        total = sum(kraus_effect(ops) for ops in sets.values())
        if np.max(np.abs(total - np.eye(total.shape[0]))) > TP_TOL:
            raise NotTracePreserving("instrument does not sum to a trace-preserving map")
        object.__setattr__(self, "kraus_sets", sets)

    @property
    def outcomes(self) -> tuple:
        return tuple(self.kraus_sets)

    @property
    def dim(self) -> int:
        return next(iter(self.kraus_sets.values()))[0].shape[1]

    def apply(self, outcome, rho) -> np.ndarray:
        """Sub-normalized post-measurement state for ``outcome``."""
        r = np.asarray(rho, dtype=complex)
        return sum(k @ r @ k.conj().T for k in self.kraus_sets[outcome])

    def povm(self, outcome) -> np.ndarray:
        return hermitize(kraus_effect(self.kraus_sets[outcome]))


# --- matrix functions ------------------------------------------------------


def psd_sqrt(m) -> np.ndarray:
    w, v = np.linalg.eigh(hermitize(np.asarray(m, dtype=complex)))
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def sqrt_pinv(m, threshold: float = EIG_CLAMP) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(sqrt(M)^-, P)`` with ``P`` the projector onto ``supp(M)``."""
    w, v = np.linalg.eigh(hermitize(np.asarray(m, dtype=complex)))
    keep = w > threshold
    inv = np.zeros_like(w)
    inv[keep] = 1.0 / np.sqrt(w[keep])
    proj = v[:, keep] @ v[:, keep].conj().T
    return (v * inv) @ v.conj().T, proj


def partial_trace(rho, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Trace out every subsystem of ``rho`` not listed in ``keep``."""
    r = np.asarray(rho, dtype=complex)
    dims = list(dims)
    n = len(dims)
    if int(np.prod(dims)) != r.shape[0]:
        raise DimensionMismatch(f"dims {dims} do not match matrix size {r.shape[0]}")
    keep = sorted(keep)
    t = r.reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    # trace highest indices first so remaining axis numbers stay valid
    for count, i in enumerate(sorted(traced, reverse=True)):
        cur = n - count
        t = np.trace(t, axis1=i, axis2=i + cur)
    d = int(np.prod([dims[i] for i in keep])) if keep else 1
    return t.reshape(d, d)


# --- operations ------------------------------------------------------------


def trace_norm_distance(rho, sigma) -> float:
    """Schatten 1-norm of ``rho - sigma`` (no factor 1/2)."""
    a = np.asarray(rho, dtype=complex)
    b = np.asarray(sigma, dtype=complex)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes {a.shape} and {b.shape} differ")
    return float(np.linalg.svd(a - b, compute_uv=False).sum())


def gentle_post_state(rho, m, min_prob: float = 1e-14) -> tuple[DensityMatrix, float]:
    """Condition ``rho`` on the POVM element ``m``.

    Returns the post-measurement state ``sqrt(M) rho sqrt(M) / tr(M rho)``
    together with the outcome probability.
    """
    r = np.asarray(rho, dtype=complex)
    mm = np.asarray(m, dtype=complex)
    if r.shape != mm.shape:
        raise DimensionMismatch(f"state dim {r.shape[0]} vs operator dim {mm.shape[0]}")
    prob = float(np.trace(mm @ r).real)
    if prob < min_prob:
        raise DegenerateConditioning(f"outcome probability {prob:.3e} too small to condition on")
    s = psd_sqrt(mm)
    post = hermitize(s @ r @ s) / prob
    return DensityMatrix(post), prob


def decompose_instrument(instrument: QuantumInstrument, outcome) -> tuple[MeasurementOperator, KrausChannel]:
    """Split one instrument branch into a measurement followed by a channel.

    With ``M = sum_j K_j^dagger K_j`` the returned channel ``E`` satisfies
    ``I_outcome(rho) = E(sqrt(M) rho sqrt(M))``.  Its Kraus operators are
    ``K_j sqrt(M)^-`` plus a completion on the kernel of ``M``.
    """
    ops = instrument.kraus_sets[outcome]
    eff = instrument.povm(outcome)
    inv, proj = sqrt_pinv(eff)
    d_in = eff.shape[0]
    d_out = ops[0].shape[0]
    new_ops = [k @ inv for k in ops]
    comp = np.eye(d_in) - proj
    if d_out == d_in:
        new_ops.append(comp)
    else:
        # rank-one completions |0><k| for each kernel vector k
        w, v = np.linalg.eigh(hermitize(comp))
        for i in np.flatnonzero(w > 0.5):
            e0 = np.zeros((d_out, 1), dtype=complex)
            e0[0, 0] = 1.0
            new_ops.append(e0 @ v[:, [i]].conj().T)
    return MeasurementOperator(eff), KrausChannel(tuple(new_ops))


def stinespring_dilate(channel) -> tuple[np.ndarray, int]:
    """Unitary ``U`` on system (x) environment with ``E(rho) = Tr_E[U (rho (x) |0><0|) U^dagger]``.

    The environment dimension equals the number of Kraus operators.  Columns
    of ``U`` acting on ``|psi>|0>`` are the isometry ``sum_j K_j|psi> (x) |j>``;
    the remaining columns are an orthonormal completion.
    """
    ops = channel.kraus if isinstance(channel, KrausChannel) else _kraus_tuple(channel)
    eff = kraus_effect(ops)
    if np.max(np.abs(eff - np.eye(eff.shape[0]))) > TP_TOL:
        raise NotTracePreserving("cannot dilate a non-trace-preserving map")
    d = ops[0].shape[1]
    if ops[0].shape[0] != d:
        raise DimensionMismatch("dilation implemented for channels with equal input/output dimension")
    r = len(ops)
    big = d * r
    # V[(i, j), a] = K_j[i, a]  with combined index i*r + j (system-major)
    iso = np.stack(ops, axis=1).reshape(big, d)
    u = np.zeros((big, big), dtype=complex)
    cols_fixed = [a * r for a in range(d)]  # column index of |a>|0>
    u[:, cols_fixed] = iso
    # orthonormal basis for the complement of range(iso)
    q, _ = np.linalg.qr(np.hstack([iso, np.eye(big, dtype=complex)]))
    complement = q[:, d:big]
    free = [c for c in range(big) if c not in set(cols_fixed)]
    u[:, free] = complement
    return u, r


def apply_dilation(u: np.ndarray, env_dim: int, rho) -> np.ndarray:
    """``Tr_E[U (rho (x) |0><0|_E) U^dagger]``."""
    r = np.asarray(rho, dtype=complex)
    d = r.shape[0]
    e0 = np.zeros((env_dim, env_dim), dtype=complex)
    e0[0, 0] = 1.0
    full = u @ np.kron(r, e0) @ u.conj().T
    return partial_trace(full, [d, env_dim], keep=[0])


# --- qubits and bases -------------------------------------------------------


BELL = {
    "phi+": np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2),
    "phi-": np.array([1, 0, 0, -1], dtype=complex) / np.sqrt(2),
    "psi+": np.array([0, 1, 1, 0], dtype=complex) / np.sqrt(2),
    "psi-": np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2),
}


def bell_state(name: str = "phi+") -> np.ndarray:
    try:
        return BELL[name].copy()
    except KeyError:
        raise QuantumError(f"unknown Bell state {name!r}") from None


def basis_angle(index: int, m: int = 2) -> float:
    if m < 2:
        raise QuantumError("need at least two bases")
    if not 0 <= index < m:
        raise QuantumError(f"basis index {index} outside 0..{m - 1}")
    return np.pi * index / m


def basis_vectors(index: int, m: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal pair for outcome 0 and 1 of basis ``index``."""
    phi = basis_angle(index, m)
    c, s = np.cos(phi / 2), np.sin(phi / 2)
    return np.array([c, s], dtype=complex), np.array([-s, c], dtype=complex)


def basis_projectors(index: int, m: int = 2, frame: str = "I") -> tuple[np.ndarray, np.ndarray]:
    """Projectors of basis ``index`` conjugated by the Pauli ``frame``."""
    p = PAULI[frame]
    out = []
    for v in basis_vectors(index, m):
        w = p @ v
        out.append(np.outer(w, w.conj()))
    return out[0], out[1]


def measure_qubit_in_basis(
    joint,
    basis_index: int,
    side: int,
    rng: np.random.Generator,
    m: int = 2,
    frame: str = "I",
) -> tuple[int, DensityMatrix]:
    """Born-rule measurement of one qubit of a two-qubit state.

    ``side`` selects the qubit (0 = first tensor factor).  ``frame`` names a
    Pauli already applied to that qubit; measuring in the conjugated basis
    undoes it, which is how teleportation corrections are absorbed.
    """
    rho = np.asarray(joint, dtype=complex)
    if rho.shape != (4, 4):
        raise DimensionMismatch("expected a two-qubit state")
    if side not in (0, 1):
        raise QuantumError("side must be 0 or 1")
    basis_angle(basis_index, m)  # validates the index
    big0, big1 = _two_qubit_projectors(basis_index, m, frame, side)
    prob0 = float(np.clip(np.einsum("ij,ji->", big0, rho).real, 0.0, 1.0))
    bit = 0 if rng.random() < prob0 else 1
    proj = big0 if bit == 0 else big1
    prob = prob0 if bit == 0 else 1.0 - prob0
    post = hermitize(proj @ rho @ proj) / prob
    return bit, DensityMatrix._trusted(post)


@lru_cache(maxsize=256)
def _two_qubit_projectors(basis_index: int, m: int, frame: str, side: int):
    p0, p1 = basis_projectors(basis_index, m, frame)
    eye = np.eye(2)
    out = []
    for p in (p0, p1):
        big = np.kron(p, eye) if side == 0 else np.kron(eye, p)
        big.setflags(write=False)
        out.append(big)
    return tuple(out)
