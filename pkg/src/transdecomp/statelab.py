"""States in the outgoing energy representation and their transition
decomposition into backward (Lambda psi) and forward ((I - Lambda) psi)
components, in energy and in position space."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lyapunov import LyapunovOperator, toeplitz_expectation
from .numerics import UniformGrid
from .scattering import Potential, outgoing_states

NORM_TOL = 1e-12


@dataclass(frozen=True)
class EnergyState:
    """Weight-absorbed coefficients c_i = sqrt(h) psi(E_i) on a midpoint grid."""

    grid: UniformGrid
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (self.grid.n,):
            raise ValueError(f"coefficient shape {c.shape} does not match grid size {self.grid.n}")
        object.__setattr__(self, "coeffs", c)

    @property
    def norm2(self) -> float:
        return float(np.vdot(self.coeffs, self.coeffs).real)

    def normalized(self) -> "EnergyState":
        return EnergyState(self.grid, self.coeffs / np.sqrt(self.norm2))

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm2 - 1.0) < tol

    def wavefunction(self) -> np.ndarray:
        """psi(E_i), undoing the sqrt(h) weight."""
        return self.coeffs / np.sqrt(self.grid.spacing)

    def energy_density(self) -> np.ndarray:
        return np.abs(self.wavefunction()) ** 2

    def __add__(self, other: "EnergyState") -> "EnergyState":
        if other.grid != self.grid:
            raise ValueError("cannot add states on different grids")
        return EnergyState(self.grid, self.coeffs + other.coeffs)


@dataclass(frozen=True)
class DecomposedState:
    backward: EnergyState
    forward: EnergyState
    time: float

    @property
    def state(self) -> EnergyState:
        return self.backward + self.forward


@dataclass(frozen=True)
class DensitySlices:
    x: np.ndarray
    rho_total: np.ndarray
    rho_b: np.ndarray
    rho_tr: np.ndarray
    rho_f: np.ndarray
    time: float

    def identity_residual(self) -> float:
        """max |rho_total - (rho_b + rho_tr + rho_f)| relative to max rho_total."""
        scale = max(float(np.max(np.abs(self.rho_total))), np.finfo(float).tiny)
        return float(np.max(np.abs(self.rho_total - (self.rho_b + self.rho_tr + self.rho_f))) / scale)


@dataclass(frozen=True)
class MExpectationSeries:
    times: np.ndarray
    values: np.ndarray

    def max_increase(self) -> float:
        """Largest step-to-step increase; <= 0 for a non-increasing series."""
        return float(np.max(np.diff(self.values)))

    def decay_rate(self, t_lo: float, t_hi: float) -> float:
        """Slope of log(values) from a least-squares line over [t_lo, t_hi]."""
        sel = (self.times >= t_lo) & (self.times <= t_hi)
        if sel.sum() < 2:
            raise ValueError(f"fewer than two samples in [{t_lo}, {t_hi}]")
        return float(np.polyfit(self.times[sel], np.log(self.values[sel]), 1)[0])


def approx_resonance_state(mu: complex, grid: UniformGrid, normalize: bool = True) -> EnergyState:
    """psi(E) = (1/2 pi i)/(E - mu) sampled on the grid."""
    if not mu.imag < 0:
        raise ValueError(f"resonance pole must lie below the real axis, got mu={mu}")
    if grid.e_min != 0:
        raise ValueError("the resonance state is defined on a grid starting at E=0")
    c = np.sqrt(grid.spacing) / (2j * np.pi) / (grid.nodes - mu)
    s = EnergyState(grid, c)
    return s.normalized() if normalize else s


def evolve(s: EnergyState, t: float) -> EnergyState:
    return EnergyState(s.grid, np.exp(-1j * s.grid.nodes * t) * s.coeffs)


def decompose(s: EnergyState, op: LyapunovOperator, t: float) -> DecomposedState:
    if s.grid != op.grid:
        raise ValueError("state and operator live on different grids")
    st = evolve(s, t)
    back = op.apply_lambda(st.coeffs)
    # forward as a difference keeps backward + forward == psi(t) exactly
    return DecomposedState(EnergyState(s.grid, back), EnergyState(s.grid, st.coeffs - back), t)


def m_expectation_series(s: EnergyState, times, op: LyapunovOperator | None = None) -> MExpectationSeries:
    """<psi(t)|M+|psi(t)> at each time.

    Evaluated through the Toeplitz structure of M, so the state's grid may
    be much finer than any dense operator; ``op`` only checks the grid.
    """
    if op is not None and op.grid != s.grid:
        raise ValueError("state and operator live on different grids")
    if not s.is_normalized():
        raise ValueError(f"state must be normalized, norm^2 = {s.norm2!r}")
    times = np.asarray(times, dtype=float)
    return MExpectationSeries(times, toeplitz_expectation(s.grid, s.coeffs, times))


def synthesis_matrix(grid: UniformGrid, p: Potential, x_nodes) -> np.ndarray:
    """sqrt(h) psi^-_{E_i}(x_j), mapping weight-absorbed coefficients to psi(x)."""
    return np.sqrt(grid.spacing) * outgoing_states(grid.nodes, x_nodes, p)


def position_reconstruct(s: EnergyState, p: Potential, x_nodes, t: float = 0.0, basis=None) -> np.ndarray:
    """psi(x, t) = sum_i sqrt(h) c_i exp(-i E_i t) psi^-_{E_i}(x)."""
    if basis is None:
        basis = synthesis_matrix(s.grid, p, x_nodes)
    return basis @ evolve(s, t).coeffs


def density_decomposition(
    s: EnergyState, op: LyapunovOperator, p: Potential, x_nodes, t: float, basis=None
) -> DensitySlices:
    if not s.is_normalized():
        raise ValueError(f"state must be normalized, norm^2 = {s.norm2!r}")
    x_nodes = np.asarray(x_nodes, dtype=float)
    if basis is None:
        basis = synthesis_matrix(s.grid, p, x_nodes)
    parts = decompose(s, op, t)
    psi_b = basis @ parts.backward.coeffs
    psi_f = basis @ parts.forward.coeffs
    return DensitySlices(
        x=x_nodes,
        rho_total=np.abs(psi_b + psi_f) ** 2,
        rho_b=np.abs(psi_b) ** 2,
        rho_tr=2 * np.real(np.conj(psi_b) * psi_f),
        rho_f=np.abs(psi_f) ** 2,
        time=t,
    )


def heisenberg_decomposition(
    s: EnergyState, op: LyapunovOperator, p: Potential, x_nodes, observable, t: float, basis=None
) -> tuple[float, float, float]:
    """Backward, transient and forward parts of <X(t)> for X multiplicative in x.

    ``observable`` holds X(x) on ``x_nodes``; integrals use the trapezoid rule.
    """
    x_nodes = np.asarray(x_nodes, dtype=float)
    X = np.asarray(observable, dtype=float)
    if X.shape != x_nodes.shape:
        raise ValueError("observable must be sampled on x_nodes")
    sl = density_decomposition(s, op, p, x_nodes, t, basis)
    return (
        float(np.trapezoid(X * sl.rho_b, x_nodes)),
        float(np.trapezoid(X * sl.rho_tr, x_nodes)),
        float(np.trapezoid(X * sl.rho_f, x_nodes)),
    )


def fwhm(x: np.ndarray, y: np.ndarray) -> float:
    """Full width at half maximum of a single peak, by linear interpolation."""
    i = int(np.argmax(y))
    half = 0.5 * y[i]
    left = np.nonzero(y[:i] < half)[0]
    right = np.nonzero(y[i:] < half)[0]
    if len(left) == 0 or len(right) == 0:
        raise ValueError("peak is not bracketed by half-maximum crossings")
    l0 = left[-1]
    r1 = i + right[0]
    xl = np.interp(half, [y[l0], y[l0 + 1]], [x[l0], x[l0 + 1]])
    xr = np.interp(half, [y[r1], y[r1 - 1]], [x[r1], x[r1 - 1]])
    return float(xr - xl)
