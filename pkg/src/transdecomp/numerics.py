"""Numerical substrate: midpoint grids, Hermitian eigendecomposition,
clamped PSD square roots and a damped complex Newton iteration."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

EIGH_TOL = 1e-10


class EighError(RuntimeError):
    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


class NewtonError(RuntimeError):
    def __init__(self, message: str, best: complex, residual: float, iterations: int):
        super().__init__(
            f"{message}: best iterate {best!r}, |f|={residual:.3e} after {iterations} iterations"
        )
        self.best = best
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class UniformGrid:
    """Midpoint grid on [e_min, e_max] with ``n`` cells.

    Nodes sit at cell centres, so neither endpoint is ever sampled.
    """

    e_min: float
    e_max: float
    n: int

    def __post_init__(self):
        if not (self.e_max > self.e_min >= 0.0):
            raise ValueError(f"need e_max > e_min >= 0, got [{self.e_min}, {self.e_max}]")
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"need an integer n >= 2, got {self.n}")

    @property
    def spacing(self) -> float:
        return (self.e_max - self.e_min) / self.n

    @cached_property
    def nodes(self) -> np.ndarray:
        nodes = self.e_min + (np.arange(1, self.n + 1) - 0.5) * self.spacing
        nodes.flags.writeable = False
        return nodes


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dimension(self) -> int:
        return len(self.eigenvalues)

    def reconstruct(self, values: np.ndarray | None = None) -> np.ndarray:
        """U diag(values) U^H, defaulting to the stored eigenvalues."""
        if values is None:
            values = self.eigenvalues
        u = self.eigenvectors
        return (u * values) @ u.conj().T


def is_hermitian(m: np.ndarray) -> bool:
    """Exact conjugate symmetry of the stored entries."""
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.array_equal(m, m.conj().T)


def relative_frobenius(a: np.ndarray, b: np.ndarray) -> float:
    """||a - b||_F / ||b||_F (absolute error when b vanishes)."""
    scale = np.linalg.norm(b)
    err = np.linalg.norm(np.asarray(a) - np.asarray(b))
    return float(err / scale) if scale > 0 else float(err)


def eigh(m: np.ndarray) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian matrix with verified reconstruction.

    Eigenvalues come back ascending. Raises ``EighError`` when LAPACK fails
    to converge or when the reconstruction / unitarity residual exceeds
    ``EIGH_TOL`` in relative Frobenius norm.
    """
    m = np.asarray(m)
    if not is_hermitian(m):
        raise ValueError("eigh requires a square matrix with exact conjugate symmetry")
    try:
        w, u = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise EighError(f"eigensolver did not converge: {exc}") from exc
    d = SpectralDecomposition(w, u)
    recon = relative_frobenius(d.reconstruct(), m)
    unitarity = relative_frobenius(u.conj().T @ u, np.eye(len(w)))
    residual = max(recon, unitarity)
    if not residual < EIGH_TOL:
        raise EighError("eigendecomposition failed verification", residual)
    return d


def clamp(values: np.ndarray, lo: float, hi: float) -> np.ndarray:
    if lo > hi:
        raise ValueError(f"clamp_lo={lo} exceeds clamp_hi={hi}")
    return np.clip(values, lo, hi)


def psd_sqrt(d: SpectralDecomposition, clamp_lo: float = 0.0, clamp_hi: float = np.inf) -> np.ndarray:
    """Square root U diag(sqrt(clamp(m))) U^H of a decomposed Hermitian matrix.

    ``clamp_lo`` must be non-negative for the result to be PSD; with the
    default [0, inf) negative round-off eigenvalues are mapped to zero.
    """
    if clamp_lo < 0:
        raise ValueError("clamp_lo must be >= 0 for a real square root")
    root = d.reconstruct(np.sqrt(clamp(d.eigenvalues, clamp_lo, clamp_hi)))
    # symmetrise so the stored result is exactly Hermitian
    return 0.5 * (root + root.conj().T)


@dataclass(frozen=True)
class NewtonResult:
    root: complex
    residual: float
    iterations: int


def _central_difference(f: Callable[[complex], complex], z: complex) -> complex:
    step = 1e-7 * max(1.0, abs(z))
    return (f(z + step) - f(z - step)) / (2.0 * step)


def newton_complex(
    f: Callable[[complex], complex],
    seed: complex,
    tol: float = 1e-12,
    max_iter: int = 100,
) -> NewtonResult:
    """Damped Newton iteration for a simple complex root.

    The derivative is a central difference with step 1e-7*max(1, |z|).
    A trial step that would increase |f| is halved, at most 20 times.
    Iteration stops once the Newton step is shorter than ``tol``.
    """
    z = complex(seed)
    fz = complex(f(z))
    best, best_res = z, abs(fz)
    with np.errstate(all="ignore"):
        for it in range(1, max_iter + 1):
            if not np.isfinite(fz):
                raise NewtonError("non-finite function value", best, best_res, it)
            df = complex(_central_difference(f, z))
            if df == 0 or not np.isfinite(df):
                raise NewtonError("vanishing or non-finite derivative", best, best_res, it)
            step = -fz / df
            if abs(step) < tol:
                z += step
                fz = complex(f(z))
                return NewtonResult(z, abs(fz), it)
            trial = z + step
            ft = complex(f(trial))
            for _ in range(20):
                if np.isfinite(ft) and abs(ft) <= abs(fz):
                    break
                step *= 0.5
                trial = z + step
                ft = complex(f(trial))
            z, fz = trial, ft
            if np.isfinite(fz) and abs(fz) < best_res:
                best, best_res = z, abs(fz)
    raise NewtonError("max_iter exceeded", best, best_res, max_iter)


def quad_midpoint(values, grid: UniformGrid) -> complex:
    values = np.asarray(values)
    if values.shape != (grid.n,):
        raise ValueError(f"expected {grid.n} node values, got shape {values.shape}")
    return grid.spacing * values.sum()
