"""Truncated spin ⊗ Fock spaces and the dense operator/state algebra.

Basis ordering is fixed: the spin index is slowest, then mode 0, then
mode 1 (row-major over ``(2, N_0[, N_1])``).  Spin index 0 is ``|up>``
(sigma_z = +1) and index 1 is ``|down>`` (sigma_z = -1).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

AXES = ("x", "y", "z")

_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}

SPIN_INDEX = {"up": 0, "down": 1}


class SpaceMismatchError(ValueError):
    pass


def levi_civita(a: str, b: str, c: str) -> int:
    """Sign of the permutation (a, b, c) of (x, y, z); 0 if any index repeats."""
    idx = tuple(AXES.index(s) for s in (a, b, c))
    if len(set(idx)) < 3:
        return 0
    return 1 if idx in ((0, 1, 2), (1, 2, 0), (2, 0, 1)) else -1


def third_axis(a: str, b: str) -> str:
    """The Pauli axis distinct from both ``a`` and ``b``."""
    if a == b:
        raise ValueError("axes must differ")
    (c,) = set(AXES) - {a, b}
    return c


@dataclass(frozen=True)
class SpaceDescriptor:
    fock_cutoffs: tuple[int, ...]
    spin_dim: int = 2

    def __post_init__(self):
        cutoffs = tuple(int(n) for n in self.fock_cutoffs)
        object.__setattr__(self, "fock_cutoffs", cutoffs)
        if self.spin_dim != 2:
            raise ValueError("spin_dim is fixed at 2")
        if len(cutoffs) not in (1, 2):
            raise ValueError(f"mode_count must be 1 or 2, got {len(cutoffs)}")
        if min(cutoffs) < 2:
            raise ValueError(f"Fock cutoffs must be >= 2, got {cutoffs}")

    @property
    def mode_count(self) -> int:
        return len(self.fock_cutoffs)

    @property
    def fock_dim(self) -> int:
        return int(np.prod(self.fock_cutoffs))

    @property
    def dim(self) -> int:
        return self.spin_dim * self.fock_dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.spin_dim,) + self.fock_cutoffs

    def index(self, spin: int | str, *occupations: int) -> int:
        if isinstance(spin, str):
            spin = SPIN_INDEX[spin]
        if len(occupations) != self.mode_count:
            raise ValueError(f"need {self.mode_count} occupation numbers")
        return int(np.ravel_multi_index((spin,) + tuple(occupations), self.shape))

    def check_mode(self, mode: int) -> None:
        if not 0 <= mode < self.mode_count:
            raise ValueError(f"mode {mode} out of range for {self.mode_count} mode(s)")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Operator:
    space: SpaceDescriptor
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.shape != (self.space.dim, self.space.dim):
            raise ValueError(f"matrix shape {m.shape} does not match space dim {self.space.dim}")
        object.__setattr__(self, "matrix", m)

    def _check(self, other: "Operator") -> None:
        if other.space != self.space:
            raise SpaceMismatchError(f"{self.space} vs {other.space}")

    def __add__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(self.space, self.matrix + other.matrix)

    def __sub__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(self.space, self.matrix - other.matrix)

    def __neg__(self) -> "Operator":
        return Operator(self.space, -self.matrix)

    def __mul__(self, c: complex) -> "Operator":
        return Operator(self.space, complex(c) * self.matrix)

    __rmul__ = __mul__

    def __truediv__(self, c: complex) -> "Operator":
        return Operator(self.space, self.matrix / complex(c))

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, self.matrix @ other.matrix)
        if isinstance(other, StateVector):
            if other.space != self.space:
                raise SpaceMismatchError(f"{self.space} vs {other.space}")
            return StateVector(self.space, self.matrix @ other.amplitudes, atol=None)
        return NotImplemented

    def dag(self) -> "Operator":
        return Operator(self.space, self.matrix.conj().T)

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix))

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        return self.hermiticity_defect() < atol

    def unitarity_defect(self) -> float:
        m = self.matrix
        return float(np.max(np.abs(m.conj().T @ m - np.eye(self.space.dim))))

    def is_unitary(self, atol: float = 1e-10) -> bool:
        return self.unitarity_defect() < atol

    def allclose(self, other: "Operator", atol: float = 1e-12) -> bool:
        self._check(other)
        return bool(np.allclose(self.matrix, other.matrix, rtol=0, atol=atol))


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized pure state.  ``atol=None`` skips the norm check (internal use)."""

    space: SpaceDescriptor
    amplitudes: np.ndarray = field(repr=False)
    atol: float | None = field(default=1e-10, repr=False, compare=False)

    def __post_init__(self):
        amp = _frozen(self.amplitudes).reshape(-1)
        if amp.shape != (self.space.dim,):
            raise ValueError(f"amplitude length {amp.shape[0]} != space dim {self.space.dim}")
        if not np.all(np.isfinite(amp)):
            raise ValueError("non-finite amplitudes")
        if self.atol is not None and abs(self.norm_squared() - 1.0) > self.atol:
            raise ValueError(f"state not normalized: |psi|^2 = {self.norm_squared()!r}")
        object.__setattr__(self, "amplitudes", amp)

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def overlap(self, other: "StateVector") -> complex:
        if other.space != self.space:
            raise SpaceMismatchError(f"{self.space} vs {other.space}")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.space.shape)

    def normalized(self) -> "StateVector":
        return StateVector(self.space, self.amplitudes / np.sqrt(self.norm_squared()))


# ---------------------------------------------------------------- builders

def _embed(space: SpaceDescriptor, spin: np.ndarray | None, modes: dict[int, np.ndarray]) -> np.ndarray:
    factors = [np.eye(2) if spin is None else spin]
    for j, n in enumerate(space.fock_cutoffs):
        factors.append(modes.get(j, np.eye(n)))
    out = factors[0]
    for f in factors[1:]:
        out = np.kron(out, f)
    return out


def lowering(n: int) -> np.ndarray:
    """Truncated single-mode annihilation matrix: a|k> = sqrt(k)|k-1>."""
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1).astype(complex)


def identity(space: SpaceDescriptor) -> Operator:
    return Operator(space, np.eye(space.dim))


def zero(space: SpaceDescriptor) -> Operator:
    return Operator(space, np.zeros((space.dim, space.dim)))


def pauli(axis: str, space: SpaceDescriptor) -> Operator:
    if axis not in _PAULI:
        raise ValueError(f"unknown Pauli axis {axis!r}")
    return Operator(space, _embed(space, _PAULI[axis], {}))


def annihilate(mode: int, space: SpaceDescriptor) -> Operator:
    space.check_mode(mode)
    return Operator(space, _embed(space, None, {mode: lowering(space.fock_cutoffs[mode])}))


def create(mode: int, space: SpaceDescriptor) -> Operator:
    return annihilate(mode, space).dag()


def number(mode: int, space: SpaceDescriptor) -> Operator:
    n = space.fock_cutoffs[mode]
    space.check_mode(mode)
    return Operator(space, _embed(space, None, {mode: np.diag(np.arange(n)).astype(complex)}))


def spin_mode_product(axis: str | None, space: SpaceDescriptor, mode_ops: dict[int, np.ndarray]) -> Operator:
    """sigma_axis (or spin identity) times single-mode matrices on the given modes."""
    for j in mode_ops:
        space.check_mode(j)
    spin = None if axis is None else _PAULI[axis]
    return Operator(space, _embed(space, spin, mode_ops))


def dagger(a: Operator) -> Operator:
    return a.dag()


def commutator(a: Operator, b: Operator) -> Operator:
    return a @ b - b @ a


def expm(a: Operator) -> Operator:
    if not np.all(np.isfinite(a.matrix)):
        raise ValueError("expm of non-finite matrix")
    return Operator(a.space, scipy.linalg.expm(a.matrix))


# ------------------------------------------------------------------ states

def basis_state(space: SpaceDescriptor, spin: int | str, *occupations: int) -> StateVector:
    amp = np.zeros(space.dim, dtype=complex)
    amp[space.index(spin, *occupations)] = 1.0
    return StateVector(space, amp)


def product_state(space: SpaceDescriptor, spin: Sequence[complex], fock: Sequence[np.ndarray]) -> StateVector:
    """Normalized product of a spin vector and one Fock amplitude vector per mode."""
    out = np.asarray(spin, dtype=complex)
    for f in fock:
        out = np.kron(out, np.asarray(f, dtype=complex))
    return StateVector(space, out / np.linalg.norm(out))


def trace_over_spin(psi: StateVector) -> np.ndarray:
    """Phonon probability table of shape ``fock_cutoffs``."""
    return np.sum(np.abs(psi.tensor()) ** 2, axis=0)


def leakage(psi: StateVector | np.ndarray, space: SpaceDescriptor | None = None, levels: int = 2) -> float:
    """Largest population held in the top ``levels`` Fock states of any mode."""
    if isinstance(psi, StateVector):
        space, amp = psi.space, psi.amplitudes
    else:
        amp = np.asarray(psi)
    probs = np.abs(amp.reshape(space.shape)) ** 2
    worst = 0.0
    for j in range(space.mode_count):
        axes = tuple(i for i in range(probs.ndim) if i != j + 1)
        marginal = probs.sum(axis=axes)
        worst = max(worst, float(marginal[-levels:].sum()))
    return worst
