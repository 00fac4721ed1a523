"""Two-tone geometric-phase-gate drive, its effective Hamiltonians, and the
schedule that keeps the effective action fixed while the detuning grows.

All quantities are dimensionless with hbar = 1; a Rabi rate of 1 sets the
time unit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import hilbert as hb
from .hilbert import AXES, Operator, SpaceDescriptor, levi_civita, third_axis
from .propagate import ModulatedHamiltonian


class NotCatalogedError(ValueError):
    pass


class Interaction(Enum):
    # value: (n, same_mode, gaussian, Hamiltonian text, action symbol)
    ONE_MODE_SQUEEZE = (-1, True, True,
                        "i*Omega2*eps*s_a''*(a_j^+2 e^{i phi} - a_j^2 e^{-i phi})", "r_s = 2*Omega2*t_f")
    TWO_MODE_SQUEEZE = (-1, False, True,
                        "i*Omega2*eps*s_a''*(a_j^+ a_j'^+ e^{i phi} - a_j a_j' e^{-i phi})", "r_2s = Omega2*t_f")
    NUMBER_SHIFT = (1, True, True,
                    "i*Omega2*eps*s_a''*(a_j^+ a_j e^{-i phi} - a_j a_j^+ e^{i phi} + cos(phi))", "Omega2*t_f")
    BEAM_SPLITTER = (1, False, True,
                     "i*Omega2*eps*s_a''*(a_j^+ a_j' e^{-i phi} - a_j a_j'^+ e^{i phi})", "r_bs = Omega2*t_f")
    TRISQUEEZE = (-2, True, False,
                  "Omega3*s_a'*(a_j^+3 e^{i phi} + a_j^3 e^{-i phi})", "r_3s = Omega3*t_f")
    TWO_MODE_TRISQUEEZE = (-2, False, False,
                           "Omega3*s_a'*(a_j^+2 a_j'^+ e^{i phi} + a_j^2 a_j' e^{-i phi})", "Omega3*t_f")
    CUBIC_NUMBER = (2, True, False,
                    "Omega3*s_a'*(a_j a_j^+ a_j e^{i phi} + a_j^+ a_j a_j^+ e^{-i phi})", "Omega3*t_f")
    TWO_MODE_CUBIC = (2, False, False,
                      "Omega3*s_a'*(a_j^2 a_j'^+ e^{i phi} + a_j^+2 a_j' e^{-i phi})", "Omega3*t_f")

    @property
    def n(self) -> int:
        return self.value[0]

    @property
    def same_mode(self) -> bool:
        return self.value[1]

    @property
    def gaussian(self) -> bool:
        return self.value[2]

    @property
    def formula(self) -> str:
        return self.value[3]

    @property
    def action_symbol(self) -> str:
        return self.value[4]

    @property
    def order(self) -> int:
        return 2 if abs(self.n) == 1 else 3

    @property
    def label(self) -> str:
        return "".join(w.capitalize() for w in self.name.split("_"))

    @property
    def rabi_formula(self) -> str:
        if self.order == 2:
            return "Omega2 = 2*Omega_a*Omega_a'/Delta"
        return "Omega3 = 2*Omega_a'*Omega_a^2/Delta^2"

    @classmethod
    def parse(cls, name: str) -> "Interaction":
        key = name.replace("-", "_").replace(" ", "_")
        for kind in cls:
            if key.upper() == kind.name or key == kind.label:
                return kind
        raise ValueError(f"unknown interaction {name!r}; expected one of {[k.label for k in cls]}")


def classify(n: int, same_mode: bool) -> Interaction:
    for kind in Interaction:
        if kind.n == n and kind.same_mode == bool(same_mode):
            return kind
    raise NotCatalogedError(f"n={n} is not cataloged (only n in {{-2,-1,1,2}} have effective Hamiltonians)")


def rabi_rate(order: int, omega_a: float, omega_ap: float, delta: float) -> float:
    if order == 2:
        return 2 * omega_a * omega_ap / delta
    if order == 3:
        return 2 * omega_ap * omega_a ** 2 / delta ** 2
    raise ValueError("order must be 2 or 3")


@dataclass(frozen=True)
class GateDrive:
    omega_a: float
    omega_ap: float
    delta: float
    n: int
    axis_a: str = "y"
    axis_ap: str = "x"
    mode_j: int = 0
    mode_jp: int = 0
    phi: float = 0.0

    def __post_init__(self):
        if self.axis_a not in AXES or self.axis_ap not in AXES:
            raise ValueError(f"axes must be in {AXES}")
        if self.axis_a == self.axis_ap:
            raise ValueError("the two tones need different spin axes")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if int(self.n) != self.n:
            raise ValueError("n must be an integer")

    @property
    def t_i(self) -> float:
        return 2 * math.pi / self.delta

    @property
    def same_mode(self) -> bool:
        return self.mode_j == self.mode_jp


def gate_hamiltonian(drive: GateDrive, space: SpaceDescriptor) -> ModulatedHamiltonian:
    """Omega_a s_a a_j e^{-i Delta t} + Omega_a' s_a' a_j' e^{-i(n Delta t + phi)} + h.c."""
    A = drive.omega_a * (hb.pauli(drive.axis_a, space) @ hb.annihilate(drive.mode_j, space))
    B = drive.omega_ap * (hb.pauli(drive.axis_ap, space) @ hb.annihilate(drive.mode_jp, space))
    D, n, phi = drive.delta, drive.n, drive.phi
    terms = (
        (A, lambda t: np.exp(-1j * D * t)),
        (A.dag(), lambda t: np.exp(1j * D * t)),
        (B, lambda t: np.exp(-1j * (n * D * t + phi))),
        (B.dag(), lambda t: np.exp(1j * (n * D * t + phi))),
    )
    return ModulatedHamiltonian(terms, max_frequency=max(1, abs(n)) * D, period=drive.t_i)


@dataclass(frozen=True)
class EffectiveInteraction:
    kind: Interaction
    rabi: float
    axis_a: str = "y"
    axis_ap: str = "x"
    mode_j: int = 0
    mode_jp: int = 0
    phi: float = 0.0

    def __post_init__(self):
        if self.axis_a == self.axis_ap:
            raise ValueError("the two tones need different spin axes")
        if self.kind.same_mode != (self.mode_j == self.mode_jp):
            raise ValueError(f"{self.kind.label} needs {'equal' if self.kind.same_mode else 'distinct'} modes")

    @property
    def spin_axis(self) -> str:
        return third_axis(self.axis_a, self.axis_ap) if self.kind.order == 2 else self.axis_ap

    @property
    def sign(self) -> int:
        """Levi-Civita factor eps_{a a' a''}; +1 for third-order rows, which carry none."""
        if self.kind.order == 3:
            return 1
        return levi_civita(self.axis_a, self.axis_ap, self.spin_axis)

    @classmethod
    def from_drive(cls, drive: GateDrive) -> "EffectiveInteraction":
        kind = classify(drive.n, drive.same_mode)
        return cls(kind, rabi_rate(kind.order, drive.omega_a, drive.omega_ap, drive.delta),
                   drive.axis_a, drive.axis_ap, drive.mode_j, drive.mode_jp, drive.phi)


def effective_hamiltonian(inter: EffectiveInteraction, space: SpaceDescriptor) -> Operator:
    kind = inter.kind
    for j in (inter.mode_j, inter.mode_jp):
        space.check_mode(j)
    a = hb.annihilate(inter.mode_j, space)
    b = hb.annihilate(inter.mode_jp, space)
    ad, bd = a.dag(), b.dag()
    e = np.exp(1j * inter.phi)
    sigma = hb.pauli(inter.spin_axis, space)

    if kind in (Interaction.ONE_MODE_SQUEEZE, Interaction.TWO_MODE_SQUEEZE):
        body = 1j * ((ad @ bd) * e - (a @ b) * e.conjugate())
    elif kind is Interaction.NUMBER_SHIFT:
        # i(a^+a e^{-i phi} - a a^+ e^{i phi} + cos phi) = sin(phi)(2 a^+a + 1) with [a, a^+] = 1;
        # the truncated literal form is not Hermitian on the top level
        body = math.sin(inter.phi) * (2 * (ad @ a) + hb.identity(space))
    elif kind is Interaction.BEAM_SPLITTER:
        body = 1j * ((ad @ b) * e.conjugate() - (a @ bd) * e)
    elif kind is Interaction.TRISQUEEZE:
        body = (ad @ ad @ ad) * e + (a @ a @ a) * e.conjugate()
    elif kind is Interaction.TWO_MODE_TRISQUEEZE:
        body = (ad @ ad @ bd) * e + (a @ a @ b) * e.conjugate()
    elif kind is Interaction.CUBIC_NUMBER:
        body = (a @ ad @ a) * e + (ad @ a @ ad) * e.conjugate()
    else:
        body = (a @ a @ bd) * e + (ad @ ad @ b) * e.conjugate()
    return (inter.rabi * inter.sign) * (sigma @ body)


def effective_propagator(inter: EffectiveInteraction, space: SpaceDescriptor, t_f: float) -> Operator:
    return hb.expm(-1j * t_f * effective_hamiltonian(inter, space))


@dataclass(frozen=True)
class ScheduleSolution:
    order: int
    K: int
    delta: float
    t_i: float
    t_f: float
    action: float

    def recomputed_action(self, omega_a: float, omega_ap: float) -> float:
        if self.order == 2:
            return 4 * math.pi * omega_a * omega_ap * self.K / self.delta ** 2
        return 4 * math.pi * omega_ap * omega_a ** 2 * self.K / self.delta ** 3


def solve_schedule(order: int, K: int, omega_a: float, omega_ap: float, action: float) -> ScheduleSolution:
    """Detuning and duration giving ``action`` (Omega2*t_f or Omega3*t_f) in K periods."""
    if order not in (2, 3):
        raise ValueError("order must be 2 or 3")
    if K < 1 or int(K) != K:
        raise ValueError("K must be a positive integer")
    if not (action > 0 and omega_a > 0 and omega_ap > 0):
        raise ValueError("action and Rabi rates must be positive")
    if order == 2:
        delta = math.sqrt(4 * math.pi * omega_a * omega_ap * K / action)
    else:
        delta = (4 * math.pi * omega_ap * omega_a ** 2 * K / action) ** (1 / 3)
    t_i = 2 * math.pi / delta
    return ScheduleSolution(order, int(K), delta, t_i, K * t_i, action)
