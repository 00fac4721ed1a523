"""Commutator-gadget gate synthesis from spin-dependent displacements."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
import scipy.linalg

from . import hilbert as hb
from .hilbert import AXES, Operator, SpaceDescriptor, SpaceMismatchError, levi_civita, third_axis


@dataclass(frozen=True)
class LinearDrive:
    """Omega sigma_axis (a_j^+ e^{i phi} + a_j e^{-i phi})."""

    phi: float = 0.0
    axis: str = "x"
    mode: int = 0
    omega: float = 1.0

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}")
        if self.mode < 0:
            raise ValueError("mode must be non-negative")


def quadrature(space: SpaceDescriptor, mode: int, phi: float = 0.0) -> Operator:
    """Spin-identity a^+ e^{i phi} + a e^{-i phi} on ``mode``."""
    a = hb.annihilate(mode, space)
    return a.dag() * np.exp(1j * phi) + a * np.exp(-1j * phi)


def linear_hamiltonian(d: LinearDrive, space: SpaceDescriptor) -> Operator:
    space.check_mode(d.mode)
    return d.omega * (hb.pauli(d.axis, space) @ quadrature(space, d.mode, d.phi))


def gadget(H: Operator, Hp: Operator, dt: float) -> Operator:
    """e^{-iH dt} e^{-iH' dt} e^{iH dt} e^{iH' dt} ~ exp(dt^2 [H', H])."""
    if H.space != Hp.space:
        raise SpaceMismatchError(f"{H.space} vs {Hp.space}")
    A = scipy.linalg.expm(-1j * dt * H.matrix)
    B = scipy.linalg.expm(-1j * dt * Hp.matrix)
    return Operator(H.space, A @ B @ A.conj().T @ B.conj().T)


def commutator_target(H: Operator, Hp: Operator, dt: float) -> Operator:
    return hb.expm(dt ** 2 * hb.commutator(Hp, H))


def _unitary_gadget(U: Operator, V: Operator) -> Operator:
    """U V U^+ V^+ for unitaries."""
    return U @ V @ U.dag() @ V.dag()


Element = Union[LinearDrive, "GadgetSchedule"]


@dataclass(frozen=True)
class GadgetSchedule:
    """Ordered factors ``(element, sign)``; a drive contributes exp(-i sign H dt),
    a nested schedule its own unitary (sign +1) or its exact inverse (sign -1)."""

    factors: tuple[tuple[Element, int], ...]
    dt: float

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("gadget durations must be positive")
        if any(s not in (1, -1) for _, s in self.factors):
            raise ValueError("factor signs must be +1 or -1")
        if self.depth > 2:
            raise ValueError("nesting depth is limited to 2 (degree-3 targets)")

    @classmethod
    def commutator(cls, first: Element, second: Element, dt: float) -> "GadgetSchedule":
        return cls(((first, 1), (second, 1), (first, -1), (second, -1)), dt)

    @property
    def depth(self) -> int:
        inner = [e.depth for e, _ in self.factors if isinstance(e, GadgetSchedule)]
        return 1 + max(inner, default=0)

    @property
    def duration(self) -> float:
        total = 0.0
        for e, _ in self.factors:
            total += e.duration if isinstance(e, GadgetSchedule) else self.dt
        return total

    def unitary(self, space: SpaceDescriptor) -> Operator:
        out = hb.identity(space)
        for e, sign in self.factors:
            if isinstance(e, GadgetSchedule):
                U = e.unitary(space)
                out = out @ (U if sign > 0 else U.dag())
            else:
                out = out @ hb.expm(-1j * sign * self.dt * linear_hamiltonian(e, space))
        return out


def second_order_gate(d: LinearDrive, dp: LinearDrive, dt: float, space: SpaceDescriptor) -> Operator:
    if d.axis == dp.axis:
        raise ValueError("second-order gate needs two different spin axes")
    return gadget(linear_hamiltonian(d, space), linear_hamiltonian(dp, space), dt)


def second_order_exponent(d: LinearDrive, dp: LinearDrive, dt: float, space: SpaceDescriptor) -> Operator:
    """dt^2 [H', H] written out: -2i dt^2 Omega Omega' eps sigma_a'' (i delta_jj' sin(phi-phi') + X_j X_j')."""
    c = third_axis(d.axis, dp.axis)
    eps = levi_civita(d.axis, dp.axis, c)
    body = quadrature(space, d.mode, d.phi) @ quadrature(space, dp.mode, dp.phi)
    if d.mode == dp.mode:
        body = body + 1j * math.sin(d.phi - dp.phi) * hb.identity(space)
    return (-2j * dt ** 2 * d.omega * dp.omega * eps) * (hb.pauli(c, space) @ body)


def cubic_schedule(dt: float, omega: float = 1.0, mode: int = 0) -> GadgetSchedule:
    H = LinearDrive(0.0, "x", mode, omega)
    inner = GadgetSchedule.commutator(H, LinearDrive(0.0, "y", mode, omega), dt)
    return GadgetSchedule.commutator(H, inner, dt)


def cubic_phase_gate(dt: float, omega: float, mode: int, space: SpaceDescriptor) -> Operator:
    """Outer gadget of H(0,x,j) with the second-order gate of H(0,x,j), H(0,y,j).

    The inner gate's inverse is taken exactly (the reversed gadget).
    """
    space.check_mode(mode)
    if dt == 0:
        return hb.identity(space)
    return cubic_schedule(dt, omega, mode).unitary(space)


def cubic_target(dt: float, omega: float, mode: int, space: SpaceDescriptor) -> Operator:
    """exp(4i dt^3 Omega^3 sigma_y X^3)."""
    X = quadrature(space, mode)
    return hb.expm((4j * dt ** 3 * omega ** 3) * (hb.pauli("y", space) @ X @ X @ X))


def sigma_y_eigenstate(space: SpaceDescriptor, sign: int = 1, fock: int = 0) -> hb.StateVector:
    """|+-i> (sigma_y = +-1) times a Fock state on every mode."""
    spin = np.array([1.0, 1j * sign]) / math.sqrt(2)
    focks = []
    for n in space.fock_cutoffs:
        f = np.zeros(n)
        f[fock] = 1.0
        focks.append(f)
    return hb.product_state(space, spin, focks)


def scaling_exponent(dts, defects) -> float:
    """Least-squares slope of log(defect) against log(dt)."""
    slope, _ = np.polyfit(np.log(np.asarray(dts, float)), np.log(np.asarray(defects, float)), 1)
    return float(slope)


def gadget_defect(H: Operator, Hp: Operator, dt: float) -> float:
    return float(np.linalg.norm(gadget(H, Hp, dt).matrix - commutator_target(H, Hp, dt).matrix, 2))


def cubic_defect(dt: float, omega: float, space: SpaceDescriptor, mode: int = 0,
                 psi: hb.StateVector | None = None) -> float:
    """||(U - U_target) psi|| on a low-energy sigma_y eigenstate."""
    psi = psi if psi is not None else sigma_y_eigenstate(space)
    diff = cubic_phase_gate(dt, omega, mode, space).matrix - cubic_target(dt, omega, mode, space).matrix
    return float(np.linalg.norm(diff @ psi.amplitudes))
