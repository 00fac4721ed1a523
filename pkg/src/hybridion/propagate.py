"""Fixed-step Schrödinger propagation and numeric Magnus-expansion terms."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numba
import numpy as np
import scipy.sparse
from numpy.polynomial import legendre

from .hilbert import Operator, SpaceDescriptor, StateVector, SpaceMismatchError, leakage

LEAKAGE_TOL = 1e-6
NORM_DRIFT_TOL = 1e-8


class LeakageError(RuntimeError):
    """Population reached the top of the Fock truncation; the cutoff is too small."""

    def __init__(self, leakage: float, tol: float, context: str = ""):
        self.leakage = leakage
        self.tol = tol
        msg = f"leakage {leakage:.3e} exceeds {tol:.1e}; increase the Fock cutoff"
        super().__init__(f"{context}: {msg}" if context else msg)


@dataclass(frozen=True)
class ModulatedHamiltonian:
    """H(t) = sum_k f_k(t) M_k with fixed operators and scalar envelopes.

    The envelopes must accept numpy arrays.  Hermiticity is the builder's
    responsibility: conjugate pairs must both be listed.  ``max_frequency``
    is the fastest angular frequency present and ``period`` the fundamental
    period (used by the Magnus quadrature), when the drive has one.
    """

    terms: tuple[tuple[Operator, Callable], ...]
    max_frequency: float = 0.0
    period: float | None = None

    def __post_init__(self):
        if not self.terms:
            raise ValueError("empty Hamiltonian")
        space = self.terms[0][0].space
        if any(op.space != space for op, _ in self.terms):
            raise SpaceMismatchError("terms live on different spaces")

    @property
    def space(self) -> SpaceDescriptor:
        return self.terms[0][0].space

    def coefficients(self, t) -> np.ndarray:
        """Envelope values, shape ``(len(t), n_terms)``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        cols = [np.broadcast_to(np.asarray(f(t), dtype=complex), t.shape) for _, f in self.terms]
        return np.stack(cols, axis=1)

    def matrix(self, t: float) -> np.ndarray:
        c = self.coefficients(t)[0]
        out = np.zeros((self.space.dim, self.space.dim), dtype=complex)
        for ck, (op, _) in zip(c, self.terms):
            if ck != 0:
                out += ck * op.matrix
        return out

    def __call__(self, t: float) -> Operator:
        return Operator(self.space, self.matrix(t))

    def stacked_csr(self) -> scipy.sparse.csr_matrix:
        return scipy.sparse.vstack([scipy.sparse.csr_matrix(op.matrix) for op, _ in self.terms]).tocsr()


HamiltonianLike = Union[ModulatedHamiltonian, Callable[[float], Operator]]


@dataclass(frozen=True)
class PropagationConfig:
    steps_per_period: int = 200
    richardson_check: bool = False
    leakage_tol: float = LEAKAGE_TOL

    def __post_init__(self):
        if self.steps_per_period < 50:
            raise ValueError("steps_per_period must be >= 50")


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: tuple[StateVector, ...]


@dataclass
class EvolveInfo:
    n_steps: int
    dt: float
    norm_drift: float
    leakage: float
    richardson_defect: float | None = None
    trajectory: Trajectory | None = None


# ------------------------------------------------------------------ kernel

@numba.njit(cache=True)
def _apply(indptr, indices, data, dim, coef, v, out):
    # out = sum_k coef[k] * S_k @ v, with S the row-stacked CSR of all terms
    out[:, :] = 0.0
    ncol = v.shape[1]
    for k in range(coef.shape[0]):
        c = coef[k]
        if c == 0:
            continue
        base = k * dim
        for r in range(dim):
            row = base + r
            for p in range(indptr[row], indptr[row + 1]):
                w = c * data[p]
                col = indices[p]
                for q in range(ncol):
                    out[r, q] += w * v[col, q]


@numba.njit(cache=True)
def _rk4(indptr, indices, data, dim, coef_grid, coef_mid, psi, h, n_steps, record, snapshots):
    k1 = np.empty_like(psi)
    k2 = np.empty_like(psi)
    k3 = np.empty_like(psi)
    k4 = np.empty_like(psi)
    tmp = np.empty_like(psi)
    mih = -1j * h
    r = 0
    for s in range(n_steps):
        while r < record.shape[0] and record[r] == s:
            snapshots[r, :, :] = psi
            r += 1
        _apply(indptr, indices, data, dim, coef_grid[s], psi, k1)
        tmp[:, :] = psi + 0.5 * mih * k1
        _apply(indptr, indices, data, dim, coef_mid[s], tmp, k2)
        tmp[:, :] = psi + 0.5 * mih * k2
        _apply(indptr, indices, data, dim, coef_mid[s], tmp, k3)
        tmp[:, :] = psi + mih * k3
        _apply(indptr, indices, data, dim, coef_grid[s + 1], tmp, k4)
        psi += (mih / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    while r < record.shape[0] and record[r] == n_steps:
        snapshots[r, :, :] = psi
        r += 1


def _rk4_dense(H: Callable[[float], Operator], psi: np.ndarray, h: float, n_steps: int, record, snapshots):
    r = 0
    for s in range(n_steps):
        t = s * h
        while r < len(record) and record[r] == s:
            snapshots[r] = psi
            r += 1
        h0, h1, h2 = H(t).matrix, H(t + h / 2).matrix, H(t + h).matrix
        k1 = -1j * (h0 @ psi)
        k2 = -1j * (h1 @ (psi + 0.5 * h * k1))
        k3 = -1j * (h1 @ (psi + 0.5 * h * k2))
        k4 = -1j * (h2 @ (psi + h * k3))
        psi = psi + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    while r < len(record) and record[r] == n_steps:
        snapshots[r] = psi
        r += 1
    return psi


def step_count(H: HamiltonianLike, t_f: float, cfg: PropagationConfig) -> int:
    """Steps so that the fastest oscillation gets ``steps_per_period`` steps.

    Static Hamiltonians fall back to four times the spectral norm: eigenphases
    spread over [-|H|, |H|] and the exact answer is cheap to beat by margin.
    """
    if t_f <= 0:
        return 0
    omega = getattr(H, "max_frequency", 0.0)
    if omega <= 0:
        omega = 4 * float(np.linalg.norm(H(0.0).matrix, 2))
    if omega <= 0:
        return 1
    # round before ceil so exact multiples of the period are not bumped by float noise
    return max(1, math.ceil(round(t_f * omega / (2 * math.pi) * cfg.steps_per_period, 9)))


def _integrate(H, psi0: np.ndarray, t_f: float, n_steps: int, record: np.ndarray):
    psi = np.array(psi0, dtype=complex, order="C")
    if psi.ndim == 1:
        psi = psi[:, None]
    snapshots = np.zeros((len(record),) + psi.shape, dtype=complex)
    if n_steps == 0:
        snapshots[:] = psi
        return psi, snapshots, 0.0
    h = t_f / n_steps
    if isinstance(H, ModulatedHamiltonian):
        grid = np.arange(n_steps + 1) * h
        coef_grid = np.ascontiguousarray(H.coefficients(grid))
        coef_mid = np.ascontiguousarray(H.coefficients(grid[:-1] + 0.5 * h))
        S = H.stacked_csr()
        _rk4(S.indptr.astype(np.int64), S.indices.astype(np.int64), S.data.astype(complex),
             H.space.dim, coef_grid, coef_mid, psi, h, n_steps, record, snapshots)
    else:
        psi = _rk4_dense(H, psi, h, n_steps, record, snapshots)
    return psi, snapshots, h


def _space_of(H: HamiltonianLike) -> SpaceDescriptor:
    return H.space if isinstance(H, ModulatedHamiltonian) else H(0.0).space


def evolve(
    H: HamiltonianLike,
    psi0: StateVector,
    t_f: float,
    cfg: PropagationConfig = PropagationConfig(),
    *,
    sample_times: Sequence[float] | None = None,
    full_output: bool = False,
):
    """Integrate i dpsi/dt = H(t) psi from 0 to ``t_f`` with classical RK4.

    Returns the final :class:`StateVector`, or ``(state, EvolveInfo)`` when
    ``full_output`` is set.  ``sample_times`` are snapped to the step grid and
    stored as a :class:`Trajectory` in the info.  The final state is not
    renormalized; its norm drift is reported and must stay below 1e-8.
    """
    space = _space_of(H)
    if psi0.space != space:
        raise SpaceMismatchError(f"{psi0.space} vs {space}")
    n_steps = step_count(H, t_f, cfg)
    if sample_times is None:
        record = np.zeros(0, dtype=np.int64)
    else:
        h = t_f / max(n_steps, 1)
        record = np.array([min(n_steps, round(t / h)) if h > 0 else 0 for t in sample_times], dtype=np.int64)
        if np.any(np.diff(record) < 0):
            raise ValueError("sample_times must be increasing")
    psi, snaps, h = _integrate(H, psi0.amplitudes, t_f, n_steps, record)
    amp = psi[:, 0]
    drift = abs(float(np.vdot(amp, amp).real) - 1.0)
    if drift > NORM_DRIFT_TOL:
        raise RuntimeError(f"norm drift {drift:.2e} exceeds {NORM_DRIFT_TOL:.0e}; raise steps_per_period")
    final = StateVector(space, amp, atol=None)
    leak = leakage(final)
    info = EvolveInfo(n_steps=n_steps, dt=h, norm_drift=drift, leakage=leak)
    if len(record):
        states = tuple(StateVector(space, s[:, 0], atol=None) for s in snaps)
        info.trajectory = Trajectory(times=record * h, states=states)
        leak = max([leak] + [leakage(s) for s in states])
        info.leakage = leak
    if leak > cfg.leakage_tol:
        raise LeakageError(leak, cfg.leakage_tol)
    if cfg.richardson_check:
        fine, _, _ = _integrate(H, psi0.amplitudes, t_f, 2 * n_steps, np.zeros(0, dtype=np.int64))
        info.richardson_defect = 1.0 - abs(np.vdot(fine[:, 0], amp)) ** 2
        if info.richardson_defect > 1e-8:
            warnings.warn(f"step doubling changed the final overlap by {info.richardson_defect:.2e}")
    return (final, info) if full_output else final


def propagator(H: HamiltonianLike, t_f: float, cfg: PropagationConfig = PropagationConfig()) -> Operator:
    """Full time-ordered propagator, every basis column integrated together.

    No leakage check: columns that start at the top of the truncation leak by
    construction.
    """
    space = _space_of(H)
    n_steps = step_count(H, t_f, cfg)
    U, _, _ = _integrate(H, np.eye(space.dim, dtype=complex), t_f, n_steps, np.zeros(0, dtype=np.int64))
    return Operator(space, U)


def fidelity(psi: StateVector, target: StateVector) -> float:
    """|<target|psi>|^2."""
    return float(min(1.0, abs(target.overlap(psi)) ** 2))


# ------------------------------------------------------------------ Magnus

def _panel_rule(q: int):
    """Gauss-Legendre nodes/weights on [-1, 1] and the spectral cumulative
    integration matrix S with S @ f(x) ~ int_{-1}^{x_i} f."""
    x, w = legendre.leggauss(q)
    V = legendre.legvander(x, q - 1)
    # exact inverse from discrete orthogonality of Legendre polynomials at Gauss nodes
    Vinv = (np.arange(q) + 0.5)[:, None] * (V * w[:, None]).T
    Vint = np.empty((q, q))
    for k in range(q):
        e = np.zeros(q)
        e[k] = 1.0
        Vint[:, k] = legendre.legval(x, legendre.legint(e, lbnd=-1))
    return x, w, Vint @ Vinv


def magnus_term(k: int, H: HamiltonianLike, t_f: float, quad_points: int = 64, period: float | None = None) -> Operator:
    """k-th Magnus exponent contribution (k = 1, 2, 3), anti-Hermitian.

    Omega_1 = -i int H,  Omega_2 = -1/2 int int [H1, H2],
    Omega_3 = i/6 int int int ([H1,[H2,H3]] + [H3,[H2,H1]]),  t3 < t2 < t1,
    so that U(t_f) ~ exp(Omega_1 + Omega_2 + Omega_3).  Integration uses
    composite Gauss-Legendre panels of one period each, with nested
    integrals built from spectral cumulative integrals on the same nodes.
    """
    if k not in (1, 2, 3):
        raise ValueError("k must be 1, 2 or 3")
    if quad_points < 64:
        raise ValueError("quad_points must be >= 64 per period")
    space = _space_of(H)
    period = period or getattr(H, "period", None) or t_f
    panels = max(1, round(t_f / period))
    if abs(panels * period - t_f) > 1e-9 * t_f:
        panels = max(1, math.ceil(t_f / period))
    L = t_f / panels
    x, w, S = _panel_rule(quad_points)
    w = w * L / 2
    S = S * L / 2
    D = space.dim
    zero = np.zeros((D, D), dtype=complex)

    def nodes(p):
        ts = p * L + (x + 1) * L / 2
        return np.stack([H(t).matrix for t in ts])

    def cumulate(start, vals):
        return start + np.einsum("ij,jab->iab", S, vals)

    if k == 1:
        total = zero.copy()
        for p in range(panels):
            total += np.einsum("i,iab->ab", w, nodes(p))
        return Operator(space, -1j * total)

    if k == 2:
        G, total = zero.copy(), zero.copy()
        for p in range(panels):
            Hn = nodes(p)
            Gn = cumulate(G, Hn)
            total += np.einsum("i,iab->ab", w, Hn @ Gn - Gn @ Hn)
            G = G + np.einsum("i,iab->ab", w, Hn)
        return Operator(space, -0.5 * total)

    # k == 3: first pass for G(T), needed by the reverse-ordered products
    GT = zero.copy()
    for p in range(panels):
        GT += np.einsum("i,iab->ab", w, nodes(p))
    G, P, Q, R = zero.copy(), zero.copy(), zero.copy(), zero.copy()
    termA, termB = zero.copy(), zero.copy()
    for p in range(panels):
        Hn = nodes(p)
        Gn = cumulate(G, Hn)
        HG = Hn @ Gn
        GH = Gn @ Hn
        Pn = cumulate(P, HG - GH)          # int_0^t [H, G]
        Qn = cumulate(Q, GH)               # int_0^t G H
        Rn = cumulate(R, HG)               # int_0^t H G
        termA += np.einsum("i,iab->ab", w, Hn @ Pn - Pn @ Hn)
        # [H3,[H2,H1]] = H3H2H1 - H3H1H2 - H2H1H3 + H1H2H3 over t3 < t2 < t1
        T1 = Qn @ Hn
        T4 = Hn @ Rn
        T2 = Gn @ GT @ Hn - Gn @ Gn @ Hn
        T3 = Hn @ GT @ Gn - Hn @ Gn @ Gn
        termB += np.einsum("i,iab->ab", w, T1 - T2 - T3 + T4)
        G = G + np.einsum("i,iab->ab", w, Hn)
        P = P + np.einsum("i,iab->ab", w, HG - GH)
        Q = Q + np.einsum("i,iab->ab", w, GH)
        R = R + np.einsum("i,iab->ab", w, HG)
    return Operator(space, (1j / 6) * (termA + termB))
