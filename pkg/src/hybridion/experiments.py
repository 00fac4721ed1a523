"""Convergence scans of the full two-tone drive against its effective target."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import hilbert as hb
from .drives import (EffectiveInteraction, GateDrive, Interaction, effective_hamiltonian,
                     effective_propagator, gate_hamiltonian, solve_schedule)
from .propagate import LeakageError, PropagationConfig, evolve, fidelity, magnus_term, propagator


class ScanError(RuntimeError):
    def __init__(self, K: int, cause: Exception):
        self.K = K
        super().__init__(f"K={K}: {cause}")


INITIAL_STATES = ("down_vacuum", "down_10")


def parameter_to_action(kind: Interaction, r: float) -> float:
    """Squeezing-style parameter to the held-constant action Omega2*t_f or Omega3*t_f.

    One-mode squeezing is conventionally quoted as r_s = 2*Omega2*t_f; every
    other row uses the action itself.
    """
    return r / 2 if kind is Interaction.ONE_MODE_SQUEEZE else r


def tf_omega_over_2pi(order: int, K: int, action: float, omega: float = 1.0) -> float:
    sol = solve_schedule(order, K, omega, omega, action)
    return sol.t_f * omega / (2 * math.pi)


def default_K_list(kind: Interaction, action: float, lo: float = 0.3, hi: float = 3.0,
                   points: int = 16, omega: float = 1.0) -> tuple[int, ...]:
    """Integers K whose normalized durations t_f*Omega/2pi spread over [lo, hi]."""
    order = kind.order
    # t_f*Omega/2pi = K/Delta grows like K^(1/2) (order 2) or K^(2/3) (order 3)
    unit = tf_omega_over_2pi(order, 1, action, omega)
    power = 2.0 if order == 2 else 1.5
    targets = np.geomspace(lo, hi, points)
    ks = sorted({max(1, int(round((x / unit) ** power))) for x in targets})
    return tuple(ks)


@dataclass(frozen=True)
class ScanSpec:
    kind: Interaction
    action: float
    K_list: tuple[int, ...]
    cutoffs: tuple[int, ...]
    initial_state: str = "down_vacuum"
    phi: float = 0.0
    omega: float = 1.0
    axis_a: str = "y"
    axis_ap: str = "x"
    steps_per_period: int = 200
    leakage_tol: float = 1e-6

    def __post_init__(self):
        object.__setattr__(self, "K_list", tuple(int(k) for k in self.K_list))
        object.__setattr__(self, "cutoffs", tuple(int(n) for n in self.cutoffs))
        if not self.action > 0:
            raise ValueError("action must be positive")
        if not self.K_list:
            raise ValueError("K_list is empty")
        if any(k < 1 for k in self.K_list) or any(b <= a for a, b in zip(self.K_list, self.K_list[1:])):
            raise ValueError("K_list must be strictly increasing positive integers")
        want = 1 if self.kind.same_mode else 2
        if len(self.cutoffs) != want:
            raise ValueError(f"{self.kind.label} needs {want} Fock cutoff(s)")
        if self.initial_state not in INITIAL_STATES:
            raise ValueError(f"initial_state must be one of {INITIAL_STATES}")
        if self.initial_state == "down_10" and want != 2:
            raise ValueError("down_10 needs two modes")

    @property
    def space(self) -> hb.SpaceDescriptor:
        return hb.SpaceDescriptor(self.cutoffs)

    @property
    def mode_jp(self) -> int:
        return 0 if self.kind.same_mode else 1

    def initial(self) -> hb.StateVector:
        if self.initial_state == "down_vacuum":
            return hb.basis_state(self.space, "down", *([0] * len(self.cutoffs)))
        return hb.basis_state(self.space, "down", 1, 0)

    def drive(self, K: int) -> GateDrive:
        sol = solve_schedule(self.kind.order, K, self.omega, self.omega, self.action)
        return GateDrive(self.omega, self.omega, sol.delta, self.kind.n, self.axis_a, self.axis_ap,
                         0, self.mode_jp, self.phi)

    def target(self) -> hb.StateVector:
        """Effective-Hamiltonian target; independent of K because the action is held fixed."""
        drive = self.drive(1)
        inter = EffectiveInteraction.from_drive(drive)
        U = effective_propagator(inter, self.space, self.action / inter.rabi)
        return U @ self.initial()


@dataclass(frozen=True)
class ScanRow:
    K: int
    delta: float
    t_i: float
    t_f: float
    tf_omega_over_2pi: float
    fidelity: float
    infidelity: float
    leakage: float


CSV_COLUMNS = tuple(ScanRow.__dataclass_fields__)


@dataclass(frozen=True)
class ScanResult:
    spec: ScanSpec
    rows: tuple[ScanRow, ...]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    def nearest(self, tf_norm: float) -> ScanRow:
        return min(self.rows, key=lambda r: abs(r.tf_omega_over_2pi - tf_norm))

    def crossing(self, infidelity: float = 0.01) -> float | None:
        """Normalized duration beyond which 1-F stays below ``infidelity``
        (log-linear interpolation between the bracketing rows)."""
        x = self.column("tf_omega_over_2pi")
        y = self.column("infidelity")
        above = np.nonzero(y > infidelity)[0]
        if len(above) == 0:
            return float(x[0])
        i = above[-1]
        if i == len(y) - 1:
            return None
        ly0, ly1 = math.log(y[i]), math.log(max(y[i + 1], 1e-300))
        frac = (ly0 - math.log(infidelity)) / (ly0 - ly1)
        return float(x[i] + frac * (x[i + 1] - x[i]))


def _final_state(spec: ScanSpec, K: int, sample_times=None):
    drive = spec.drive(K)
    H = gate_hamiltonian(drive, spec.space)
    cfg = PropagationConfig(steps_per_period=spec.steps_per_period, leakage_tol=spec.leakage_tol)
    try:
        return drive, *evolve(H, spec.initial(), K * drive.t_i, cfg, sample_times=sample_times, full_output=True)
    except LeakageError as exc:
        raise ScanError(K, exc) from exc


def scan_row(spec: ScanSpec, K: int, target: hb.StateVector | None = None) -> ScanRow:
    target = target if target is not None else spec.target()
    drive, psi, info = _final_state(spec, K)
    leak = max(info.leakage, hb.leakage(target))
    if leak > spec.leakage_tol:
        raise ScanError(K, LeakageError(leak, spec.leakage_tol, "target"))
    F = fidelity(psi, target)
    t_f = K * drive.t_i
    return ScanRow(K, drive.delta, drive.t_i, t_f, t_f * spec.omega / (2 * math.pi), F, 1.0 - F, leak)


def _row_job(args):
    spec, K, target = args
    return scan_row(spec, K, target)


def run_scan(spec: ScanSpec, workers: int = 1) -> ScanResult:
    """One row per K: schedule, full-drive evolution, fidelity against the target."""
    target = spec.target()
    jobs = [(spec, K, target) for K in spec.K_list]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_row_job, jobs))
    else:
        rows = [_row_job(j) for j in jobs]
    return ScanResult(spec, tuple(sorted(rows, key=lambda r: r.K)))


def phonon_histogram(spec: ScanSpec, K: int) -> np.ndarray:
    """Spin-traced Fock populations of the full-drive final state."""
    _, psi, _ = _final_state(spec, K)
    return hb.trace_over_spin(psi)


def mod3_offsupport(probs: np.ndarray) -> float:
    n = np.arange(len(probs))
    return float(probs[n % 3 != 0].sum())


def offdiagonal_population(probs: np.ndarray) -> float:
    return float(probs.sum() - np.trace(probs))


@dataclass(frozen=True)
class SwapTrace:
    times: np.ndarray
    p10: np.ndarray
    p01: np.ndarray


def swap_trace(spec: ScanSpec, K: int, sample_times: Sequence[float]) -> SwapTrace:
    if spec.kind is not Interaction.BEAM_SPLITTER:
        raise ValueError("swap_trace needs a beam-splitter scan")
    if spec.initial_state != "down_10":
        spec = replace(spec, initial_state="down_10")
    _, _, info = _final_state(spec, K, sample_times=sample_times)
    traj = info.trajectory
    probs = [hb.trace_over_spin(s) for s in traj.states]
    return SwapTrace(traj.times, np.array([p[1, 0] for p in probs]), np.array([p[0, 1] for p in probs]))


# Figure presets: interaction, quoted parameters, Fock cutoffs, initial state.
# The one-mode cutoff is raised from 40 so that r_s = 1.5 stays under the leakage
# threshold; trisqueezed states keep a slowly decaying tail at any practical
# cutoff, so that preset tolerates more top-level population.
@dataclass(frozen=True)
class FigurePreset:
    kind: Interaction
    parameters: tuple[float, ...]
    cutoffs: tuple[int, ...]
    initial_state: str = "down_vacuum"
    leakage_tol: float = 1e-6
    quoted: tuple[float, float] = (0.0, 0.0)   # (parameter, t_f*Omega/2pi at F ~ 0.99)

    def spec(self, r: float, K_list: Sequence[int] | None = None, **overrides) -> ScanSpec:
        action = parameter_to_action(self.kind, r)
        ks = tuple(K_list) if K_list is not None else default_K_list(self.kind, action)
        fields = dict(kind=self.kind, action=action, K_list=ks, cutoffs=self.cutoffs,
                      initial_state=self.initial_state, leakage_tol=self.leakage_tol)
        fields.update(overrides)
        return ScanSpec(**fields)


FIGURES = {
    "one_mode_squeeze": FigurePreset(Interaction.ONE_MODE_SQUEEZE, (0.5, 1.0, 1.5), (128,), quoted=(1.5, 1.2)),
    "two_mode_squeeze": FigurePreset(Interaction.TWO_MODE_SQUEEZE, (0.25, 0.5, 0.75), (20, 20), quoted=(0.75, 1.4)),
    "beam_splitter": FigurePreset(Interaction.BEAM_SPLITTER, (math.pi / 4, math.pi / 2), (20, 20),
                                  initial_state="down_10", quoted=(math.pi / 4, 1.8)),
    "trisqueeze": FigurePreset(Interaction.TRISQUEEZE, (0.06, 0.09, 0.12), (40,), leakage_tol=1e-3,
                               quoted=(0.12, 1.4)),
}


# Relative defects below this are quadrature round-off, not approximation error.
MAGNUS_FLOOR = 1e-12


@dataclass(frozen=True)
class MagnusDefects:
    K: int
    delta: float
    first_order: float
    term_defect: float


def _low_block(space: hb.SpaceDescriptor, guard: int) -> np.ndarray:
    """Basis indices with every mode at least ``guard`` levels below its cutoff."""
    occ = np.indices(space.shape).reshape(len(space.shape), -1)[1:]
    keep = np.all(occ < (np.array(space.fock_cutoffs)[:, None] - guard), axis=0)
    return np.nonzero(keep)[0]


def magnus_defects(kind: Interaction, action: float, K: int, cutoff: int, phi: float = 0.0,
                   axis_a: str = "y", axis_ap: str = "x", guard: int = 3, quad_points: int = 64) -> MagnusDefects:
    """First Magnus term norm and the relative defect of the leading term
    (k = 2 or 3) against the effective exponent -i t_f H_eff.

    The comparison skips the top ``guard`` Fock levels of each mode, where
    truncated ladder operators stop obeying the commutation relations, and
    discards the identity component (a global phase).
    """
    space = hb.SpaceDescriptor((cutoff,) if kind.same_mode else (cutoff, cutoff))
    sol = solve_schedule(kind.order, K, 1.0, 1.0, action)
    drive = GateDrive(1.0, 1.0, sol.delta, kind.n, axis_a, axis_ap, 0, 0 if kind.same_mode else 1, phi)
    H = gate_hamiltonian(drive, space)
    inter = EffectiveInteraction.from_drive(drive)
    E = -1j * sol.t_f * effective_hamiltonian(inter, space).matrix
    first = magnus_term(1, H, sol.t_f, quad_points).norm()
    lead = magnus_term(kind.order, H, sol.t_f, quad_points).matrix
    idx = _low_block(space, guard)
    ref = np.linalg.norm(E[np.ix_(idx, idx)])
    D = (lead - E)[np.ix_(idx, idx)]
    diff = np.linalg.norm(D - np.trace(D) / len(idx) * np.eye(len(idx)))
    return MagnusDefects(K, sol.delta, first, float(diff / ref) if ref > 0 else float(diff))


def magnus_consistency(kind: Interaction, action: float, K: int, cutoff: int, low_levels: int = 4) -> float:
    """||(U - exp(Omega_1 + Omega_2 + Omega_3)) P|| with P onto the lowest Fock states.

    U is the integrated propagator of the full drive; columns start in the
    ``low_levels`` lowest occupations so the truncation edge stays unpopulated.
    """
    space = hb.SpaceDescriptor((cutoff,) if kind.same_mode else (cutoff, cutoff))
    sol = solve_schedule(kind.order, K, 1.0, 1.0, action)
    drive = GateDrive(1.0, 1.0, sol.delta, kind.n, "y", "x", 0, 0 if kind.same_mode else 1)
    H = gate_hamiltonian(drive, space)
    S = sum(magnus_term(k, H, sol.t_f).matrix for k in (1, 2, 3))
    U = propagator(H, sol.t_f).matrix
    occ = np.indices(space.shape).reshape(len(space.shape), -1)[1:]
    cols = np.nonzero(np.all(occ < low_levels, axis=0))[0]
    return float(np.linalg.norm((U - hb.expm(hb.Operator(space, S)).matrix)[:, cols], 2))
