"""Discretized outgoing Lyapunov operator M+ and its square root.

The kernel -(1/2 pi i)/(E - E' + i0) splits into a delta term, which puts
1/2 on the diagonal, and a principal value, discretized on the midpoint
grid by dropping the coincident node. States use weight-absorbed
coefficients c_i = sqrt(h) psi(E_i), so

    M_ij = 1/2 delta_ij + i h / (2 pi (E_i - E_j)),  i != j.

On a uniform grid this is the Toeplitz matrix 1/2 + i/(2 pi (i - j)),
independent of h; ``toeplitz_expectation`` exploits that to evaluate
<c(t)|M|c(t)> on grids far too large for the dense matrix.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.fft import fft, ifft, next_fast_len
from scipy.signal import czt

from .numerics import SpectralDecomposition, UniformGrid, eigh, psd_sqrt

CACHE_MAGIC = b"LYAPOPM\x00"
CACHE_VERSION = 1
_HEADER = struct.Struct("<8sIdQ")


@dataclass(frozen=True)
class ClampReport:
    below: int
    above: int
    worst_excess: float

    @classmethod
    def from_eigenvalues(cls, w: np.ndarray, lo: float = 0.0, hi: float = 1.0) -> "ClampReport":
        excess = max(lo - float(w.min()), float(w.max()) - hi)
        return cls(int(np.sum(w < lo)), int(np.sum(w > hi)), excess)


def _check_grid(grid: UniformGrid):
    if grid.e_min != 0:
        raise ValueError(f"the Lyapunov operator needs a grid starting at E=0, got e_min={grid.e_min}")


def assemble_m(grid: UniformGrid) -> np.ndarray:
    _check_grid(grid)
    E = grid.nodes
    diff = np.subtract.outer(E, E)
    np.fill_diagonal(diff, 1.0)
    # real antisymmetric part; exact conjugate symmetry follows from a - b = -(b - a)
    off = grid.spacing / (2 * np.pi * diff)
    np.fill_diagonal(off, 0.0)
    m = 1j * off
    np.fill_diagonal(m, 0.5)
    return m


@dataclass(frozen=True)
class LyapunovOperator:
    grid: UniformGrid
    m_matrix: np.ndarray
    spectrum: SpectralDecomposition
    lambda_matrix: np.ndarray
    clamp_report: ClampReport

    def _check(self, c):
        c = np.asarray(c)
        if c.shape != (self.grid.n,):
            raise ValueError(f"state has shape {c.shape}, operator dimension is {self.grid.n}")
        return c

    def apply_m(self, c):
        return self.m_matrix @ self._check(c)

    def apply_lambda(self, c):
        return self.lambda_matrix @ self._check(c)

    def apply_one_minus_lambda(self, c):
        c = self._check(c)
        return c - self.lambda_matrix @ c


def build(grid: UniformGrid) -> LyapunovOperator:
    m = assemble_m(grid)
    spectrum = eigh(m)
    return _finish(grid, m, spectrum)


def _finish(grid, m, spectrum) -> LyapunovOperator:
    report = ClampReport.from_eigenvalues(spectrum.eigenvalues)
    lam = psd_sqrt(spectrum, 0.0, 1.0)
    return LyapunovOperator(grid, m, spectrum, lam, report)


def cache_path(directory, grid: UniformGrid) -> Path:
    return Path(directory) / f"lyapunov_emax{grid.e_max:.17g}_n{grid.n}.bin"


def save_cache(op: LyapunovOperator, path) -> Path:
    """Header, then Lambda, eigenvalues and eigenvectors, all little-endian.

    M is not stored: it is re-assembled exactly from the grid.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(_HEADER.pack(CACHE_MAGIC, CACHE_VERSION, op.grid.e_max, op.grid.n))
        fh.write(np.ascontiguousarray(op.lambda_matrix, dtype="<c16").tobytes())
        fh.write(np.ascontiguousarray(op.spectrum.eigenvalues, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(op.spectrum.eigenvectors, dtype="<c16").tobytes())
    tmp.replace(path)
    return path


def load_cache(path, grid: UniformGrid) -> LyapunovOperator:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated cache header")
    magic, version, e_max, n = _HEADER.unpack_from(raw)
    if magic != CACHE_MAGIC or version != CACHE_VERSION:
        raise ValueError(f"{path}: not a version-{CACHE_VERSION} Lyapunov cache")
    if e_max != grid.e_max or n != grid.n:
        raise ValueError(f"{path}: cache is for (e_max={e_max}, n={n}), wanted ({grid.e_max}, {grid.n})")
    expected = _HEADER.size + 16 * n * n + 8 * n + 16 * n * n
    if len(raw) != expected:
        raise ValueError(f"{path}: truncated cache ({len(raw)} of {expected} bytes)")
    off = _HEADER.size
    lam = np.frombuffer(raw, "<c16", n * n, off).reshape(n, n).astype(complex)
    off += 16 * n * n
    w = np.frombuffer(raw, "<f8", n, off).astype(float)
    off += 8 * n
    u = np.frombuffer(raw, "<c16", n * n, off).reshape(n, n).astype(complex)
    spectrum = SpectralDecomposition(w, u)
    return LyapunovOperator(grid, assemble_m(grid), spectrum, lam, ClampReport.from_eigenvalues(w))


def build_cached(grid: UniformGrid, cache_dir=None) -> LyapunovOperator:
    if cache_dir is None:
        return build(grid)
    path = cache_path(cache_dir, grid)
    if path.exists():
        try:
            return load_cache(path, grid)
        except ValueError:
            pass
    op = build(grid)
    save_cache(op, path)
    return op


def toeplitz_expectation(grid: UniformGrid, coeffs, times) -> np.ndarray:
    """<c(t)|M|c(t)> with c_i(t) = exp(-i E_i t) c_i, without forming M.

    With R_d = sum_j conj(c_{j+d}) c_j the expectation is
    R_0/2 - sum_{d>0} Im(R_d e^{i d h t}) / (pi d).
    R comes from one FFT; uniformly spaced times are then handled by a
    single chirp-z transform, other time lists by direct sums.
    """
    _check_grid(grid)
    c = np.asarray(coeffs, dtype=complex)
    if c.shape != (grid.n,):
        raise ValueError(f"state has shape {c.shape}, grid has {grid.n} nodes")
    times = np.asarray(times, dtype=float)
    n, h = grid.n, grid.spacing
    F = fft(c, next_fast_len(2 * n))
    R = np.conj(ifft(F.real**2 + F.imag**2)[:n])
    g = np.zeros(n, dtype=complex)
    g[1:] = R[1:] / (np.pi * np.arange(1, n))
    if len(times) > 1 and np.allclose(np.diff(times), times[1] - times[0], rtol=1e-12, atol=0):
        dt = times[1] - times[0]
        series = czt(g, m=len(times), w=np.exp(1j * h * dt), a=np.exp(-1j * h * times[0]))
    else:
        d = np.arange(n)
        series = np.array([np.exp(1j * h * t * d) @ g for t in times])
    return 0.5 * R[0].real - series.imag
