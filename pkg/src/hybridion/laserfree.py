"""Laser-free realization: one radiofrequency gradient plus a symmetrically
detuned microwave pair, taken to the microwave interaction picture and
expanded in Bessel sidebands."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize
import scipy.special

from . import hilbert as hb
from .drives import GateDrive, gate_hamiltonian, solve_schedule
from .hilbert import Operator, SpaceDescriptor
from .propagate import ModulatedHamiltonian, PropagationConfig, evolve, fidelity, propagator

BESSEL_TOL = 1e-6
MIN_DETUNING_RATIO = 20.0


class SidebandError(ValueError):
    def __init__(self, delta: float, omega_g: float):
        self.delta = delta
        self.omega_g = omega_g
        super().__init__(f"nonphysical sideband solution: delta={delta!r}, omega_g={omega_g!r} (both must be > 0)")


@dataclass(frozen=True)
class RampProfile:
    """Microwave envelope: sine-squared rise and fall of ``duration`` each, flat between."""

    shape: str = "none"
    duration: float = 0.0

    def __post_init__(self):
        if self.shape not in ("none", "sine-squared"):
            raise ValueError("ramp shape must be 'none' or 'sine-squared'")
        if self.duration < 0:
            raise ValueError("ramp duration must be >= 0")

    def envelope(self, t, pulse_length: float | None = None):
        t = np.asarray(t, dtype=float)
        if self.shape == "none" or self.duration == 0:
            return np.ones_like(t)
        tau = self.duration
        rise = np.sin(0.5 * np.pi * np.clip(t / tau, 0.0, 1.0)) ** 2
        if pulse_length is None:
            return rise
        fall = np.sin(0.5 * np.pi * np.clip((pulse_length - t) / tau, 0.0, 1.0)) ** 2
        return np.minimum(rise, fall)

    def rate(self, t, pulse_length: float | None = None):
        """Time derivative of :meth:`envelope`."""
        t = np.asarray(t, dtype=float)
        if self.shape == "none" or self.duration == 0:
            return np.zeros_like(t)
        tau = self.duration
        k = np.pi / (2 * tau)
        d_rise = np.where(t < tau, k * np.sin(np.pi * np.clip(t / tau, 0.0, 1.0)), 0.0)
        if pulse_length is None:
            return d_rise
        left = pulse_length - t
        d_fall = np.where(left < tau, -k * np.sin(np.pi * np.clip(left / tau, 0.0, 1.0)), 0.0)
        rise = self.envelope(t)
        fall = np.sin(0.5 * np.pi * np.clip(left / tau, 0.0, 1.0)) ** 2
        return np.where(rise <= fall, d_rise, d_fall)


@dataclass(frozen=True)
class LaserFreeDrive:
    omega_mu: float
    delta_mu: float
    omega_g: float
    gradient_rabi: tuple[float, ...]
    mode_freqs: tuple[float, ...]
    ramp: RampProfile = field(default_factory=RampProfile)
    pulse_length: float | None = None
    min_ratio: float = MIN_DETUNING_RATIO

    def __post_init__(self):
        object.__setattr__(self, "gradient_rabi", tuple(float(x) for x in self.gradient_rabi))
        object.__setattr__(self, "mode_freqs", tuple(float(x) for x in self.mode_freqs))
        if len(self.gradient_rabi) != len(self.mode_freqs):
            raise ValueError("need one gradient Rabi rate per mode frequency")
        if not self.delta_mu > 0:
            raise ValueError("delta_mu must be positive")
        if any(w <= 0 for w in self.mode_freqs):
            raise ValueError("mode frequencies must be positive")
        strongest = max(abs(g) for g in self.gradient_rabi)
        if strongest > 0 and self.delta_mu / strongest < self.min_ratio:
            warnings.warn(f"delta/Omega_g = {self.delta_mu / strongest:.3g} < {self.min_ratio:g}; "
                          "the Bessel-sideband picture assumes delta >> Omega_g")
        if self.ramp.shape != "none" and self.ramp.duration < 10 * 2 * math.pi / self.delta_mu:
            warnings.warn(f"ramp duration {self.ramp.duration:.3g} is not long compared to 1/delta")

    @property
    def bessel_argument(self) -> float:
        return 4 * self.omega_mu / self.delta_mu

    def omega_mu_at(self, t):
        return self.omega_mu * self.ramp.envelope(t, self.pulse_length)

    def frame_angle(self, t):
        """Amplitude rho and phase chi with 2*theta(t) ~ rho sin(delta t + chi).

        theta = 2 int_0^t Omega_mu cos(delta s) ds, integrated by parts once:
        2 theta ~ z sin(delta t) + z' cos(delta t) with z = 4 Omega_mu(t)/delta
        and z' = 4 dOmega_mu/dt / delta^2.  Without a ramp z' = 0 and this is
        the usual fixed Bessel argument.
        """
        z = 4 * self.omega_mu_at(t) / self.delta_mu
        zp = 4 * self.omega_mu * self.ramp.rate(t, self.pulse_length) / self.delta_mu ** 2
        return np.hypot(z, zp), np.arctan2(zp, z)

    def space_check(self, space: SpaceDescriptor) -> None:
        if space.mode_count != len(self.mode_freqs):
            raise ValueError(f"drive has {len(self.mode_freqs)} mode(s), space has {space.mode_count}")


def default_m_max(z: float, tol: float = BESSEL_TOL) -> int:
    """Series index covering every Bessel order up to the first |J_m(z)| < tol past z."""
    order = max(1, math.ceil(abs(z)))
    while abs(scipy.special.jv(order, z)) >= tol:
        order += 1
    return max(1, math.ceil(order / 2))


def _gradient_terms(d: LaserFreeDrive, space: SpaceDescriptor, spin: str):
    """(sigma a_j, sigma a_j^+) pairs with their per-mode phase envelopes."""
    d.space_check(space)
    out = []
    for j, (g, w) in enumerate(zip(d.gradient_rabi, d.mode_freqs)):
        if g == 0:
            continue
        a = hb.pauli(spin, space) @ hb.annihilate(j, space)
        out.append((a, g, w))
    return out


def _motion(d: LaserFreeDrive, space: SpaceDescriptor, t: float) -> Operator:
    """2 cos(omega_g t) sum_j Omega_gj (a_j e^{-i w_j t} + h.c.), spin identity."""
    acc = hb.zero(space)
    for j, (g, w) in enumerate(zip(d.gradient_rabi, d.mode_freqs)):
        a = hb.annihilate(j, space)
        acc = acc + g * (a * np.exp(-1j * w * t) + a.dag() * np.exp(1j * w * t))
    return 2 * math.cos(d.omega_g * t) * acc


def lab_hamiltonian(d: LaserFreeDrive, space: SpaceDescriptor, t: float) -> Operator:
    d.space_check(space)
    mw = 2 * float(d.omega_mu_at(t)) * math.cos(d.delta_mu * t) * hb.pauli("x", space)
    return mw + hb.pauli("z", space) @ _motion(d, space, t)


def frame_transform(d: LaserFreeDrive, space: SpaceDescriptor, t: float) -> Operator:
    rho, chi = d.frame_angle(t)
    theta = 0.5 * float(rho) * math.sin(d.delta_mu * t + float(chi))
    # exp(-i theta sigma_x) in closed form
    return math.cos(theta) * hb.identity(space) - 1j * math.sin(theta) * hb.pauli("x", space)


def _series(z, phase, m_max: int):
    """cos(z sin phase) and sin(z sin phase) as truncated Jacobi-Anger sums."""
    z = np.asarray(z, dtype=float)
    phase = np.asarray(phase, dtype=float)
    cz = scipy.special.jv(0, z) * np.ones_like(phase)
    sy = np.zeros_like(phase)
    for m in range(1, m_max + 1):
        cz = cz + 2 * scipy.special.jv(2 * m, z) * np.cos(2 * m * phase)
        sy = sy + 2 * scipy.special.jv(2 * m - 1, z) * np.sin((2 * m - 1) * phase)
    return cz, sy


def interaction_modulated(d: LaserFreeDrive, space: SpaceDescriptor, m_max: int | None = None) -> ModulatedHamiltonian:
    """Microwave-frame Hamiltonian as a sum of fixed operators with scalar envelopes.

    With a ramp the Bessel argument and phase follow :meth:`LaserFreeDrive.frame_angle`.
    """
    if m_max is None:
        m_max = default_m_max(d.bessel_argument)
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    terms = []
    for spin, pick in (("z", 0), ("y", 1)):
        for op, g, w in _gradient_terms(d, space, spin):
            def env(t, g=g, w=w, pick=pick):
                rho, chi = d.frame_angle(t)
                f = _series(rho, d.delta_mu * t + chi, m_max)[pick]
                return 2 * g * np.cos(d.omega_g * t) * f * np.exp(-1j * w * t)

            terms.append((op, env))
            terms.append((op.dag(), lambda t, env=env: np.conj(env(t))))
    top = max(d.mode_freqs) + abs(d.omega_g) + 2 * m_max * d.delta_mu
    return ModulatedHamiltonian(tuple(terms), max_frequency=top)


def interaction_hamiltonian(d: LaserFreeDrive, space: SpaceDescriptor, t: float, m_max: int | None = None) -> Operator:
    return interaction_modulated(d, space, m_max)(t)


def lab_modulated(d: LaserFreeDrive, space: SpaceDescriptor) -> ModulatedHamiltonian:
    """The lab-frame Hamiltonian in sum-of-envelopes form for the integrator."""
    terms = [(hb.pauli("x", space), lambda t: 2 * d.omega_mu_at(t) * np.cos(d.delta_mu * t))]
    for op, g, w in _gradient_terms(d, space, "z"):
        env = (lambda t, g=g, w=w: 2 * g * np.cos(d.omega_g * t) * np.exp(-1j * w * t))
        terms.append((op, env))
        terms.append((op.dag(), lambda t, env=env: np.conj(env(t))))
    # the spin precession about x carries the same Bessel sidebands the
    # interaction picture expands in, so resolve them at the same rate
    m_max = default_m_max(d.bessel_argument)
    top = max(d.mode_freqs) + abs(d.omega_g) + 2 * m_max * d.delta_mu
    return ModulatedHamiltonian(tuple(terms), max_frequency=top)


@dataclass(frozen=True)
class SidebandSolution:
    delta: float
    omega_g: float
    Delta: float
    n: int
    mode_j: int
    mode_jp: int
    residuals: tuple[float, float]


def solve_sidebands(omega_j: float, omega_jp: float, Delta: float, n: int,
                    mode_j: int = 0, mode_jp: int = 0) -> SidebandSolution:
    """Place 2*delta near omega_j - omega_g and 3*delta near omega_j' + omega_g,
    detuned by Delta and n*Delta respectively."""
    if omega_j <= 0 or omega_jp <= 0:
        raise ValueError("mode frequencies must be positive")
    A = np.array([[2.0, 1.0], [3.0, -1.0]])
    b = np.array([omega_j - Delta, omega_jp - n * Delta])
    delta, omega_g = np.linalg.solve(A, b)
    delta, omega_g = float(delta), float(omega_g)
    if delta <= 0 or omega_g <= 0:
        raise SidebandError(delta, omega_g)
    res = (2 * delta - (omega_j - omega_g) + Delta, 3 * delta - (omega_jp + omega_g) + n * Delta)
    return SidebandSolution(delta, omega_g, float(Delta), int(n), mode_j, mode_jp, res)


def effective_gate_drive(d: LaserFreeDrive, sol: SidebandSolution) -> GateDrive:
    z = d.bessel_argument
    return GateDrive(
        omega_a=d.gradient_rabi[sol.mode_j] * float(scipy.special.jv(2, z)),
        omega_ap=d.gradient_rabi[sol.mode_jp] * float(scipy.special.jv(3, z)),
        delta=sol.Delta, n=sol.n, axis_a="z", axis_ap="y",
        mode_j=sol.mode_j, mode_jp=sol.mode_jp, phi=math.pi / 2,
    )


def bessel_product_optimum(z_max: float = 5.0, grid: int = 5001) -> tuple[float, float]:
    """Argument in (0, z_max] maximizing |J_2(z) J_3(z)|, and the maximum."""
    zs = np.linspace(z_max / grid, z_max, grid)
    vals = np.abs(scipy.special.jv(2, zs) * scipy.special.jv(3, zs))
    i = int(np.argmax(vals))
    lo, hi = zs[max(i - 1, 0)], zs[min(i + 1, grid - 1)]
    res = scipy.optimize.minimize_scalar(
        lambda z: -abs(scipy.special.jv(2, z) * scipy.special.jv(3, z)),
        bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    return float(res.x), float(-res.fun)


def laserfree_drive_for(sol: SidebandSolution, omega_mu: float, gradient_rabi, mode_freqs,
                        ramp: RampProfile = RampProfile(), pulse_length: float | None = None) -> LaserFreeDrive:
    return LaserFreeDrive(omega_mu, sol.delta, sol.omega_g, tuple(gradient_rabi), tuple(mode_freqs), ramp, pulse_length)


# ------------------------------------------------------- desk-scale checks

@dataclass(frozen=True)
class DeskScenario:
    """Single-mode sideband scenario with Delta from the fixed-action schedule."""

    sideband: SidebandSolution
    drive: LaserFreeDrive
    gate_time: float

    @property
    def ratio(self) -> float:
        return self.drive.delta_mu / max(abs(g) for g in self.drive.gradient_rabi)


def desk_scenario(ratio: float, omega_g: float = 2 * math.pi, z: float | None = None, n: int = -1,
                  K: int = 4, action: float = 0.2, ramp_periods: float = 0.0) -> DeskScenario:
    """delta = ratio*Omega_g; the mode frequency is whatever satisfies the sideband
    conditions for one shared mode.  Ramps, when requested, bracket the gate time."""
    z = bessel_product_optimum()[0] if z is None else z
    sched = solve_schedule(2 if abs(n) == 1 else 3, K, omega_g * float(scipy.special.jv(2, z)),
                           omega_g * float(scipy.special.jv(3, z)), action)
    delta = ratio * omega_g
    w = (5 * delta + (1 + n) * sched.delta) / 2
    sol = solve_sidebands(w, w, sched.delta, n)
    if ramp_periods > 0:
        tau = ramp_periods * 2 * math.pi / sol.delta
        ramp, length = RampProfile("sine-squared", tau), sched.t_f + 2 * tau
    else:
        ramp, length = RampProfile(), sched.t_f
    d = laserfree_drive_for(sol, z * sol.delta / 4, [omega_g], [w], ramp, length)
    return DeskScenario(sol, d, length)


def frame_infidelity(sc: DeskScenario, space: SpaceDescriptor, cfg=None) -> float:
    """1 - |Tr(U_r^+ U_I)|^2 / dim^2 between lab-frame and microwave-frame propagators."""
    cfg = cfg or PropagationConfig()
    Ur = propagator(lab_modulated(sc.drive, space), sc.gate_time, cfg).matrix
    UI = propagator(interaction_modulated(sc.drive, space), sc.gate_time, cfg).matrix
    return float(1 - abs(np.trace(Ur.conj().T @ UI)) ** 2 / space.dim ** 2)


def rwa_infidelity(sc: DeskScenario, space: SpaceDescriptor, psi0: hb.StateVector | None = None, cfg=None) -> float:
    """State infidelity between the sideband-series evolution and the mapped gate drive."""
    cfg = cfg or PropagationConfig()
    psi0 = psi0 if psi0 is not None else hb.basis_state(space, "down", *([0] * space.mode_count))
    a = evolve(interaction_modulated(sc.drive, space), psi0, sc.gate_time, cfg)
    b = evolve(gate_hamiltonian(effective_gate_drive(sc.drive, sc.sideband), space), psi0, sc.gate_time, cfg)
    return 1.0 - fidelity(a, b)
