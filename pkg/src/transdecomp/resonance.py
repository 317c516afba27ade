"""Resonance poles of the square-barrier S-matrix.

The denominator alpha3*(k)/alpha1(k) of S is continued into the complex
k-plane, where it is single valued (even in k'). Its zeros with
Re k > 0, Im k < 0 are the resonance poles mu = k^2/(2m).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .numerics import NewtonError, newton_complex
from .scattering import Potential, _barrier_bracket

log = logging.getLogger(__name__)

MERGE_TOL = 1e-6
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class ResonancePole:
    mu: complex
    k_root: complex
    residual: float
    iterations: int

    @property
    def e_res(self) -> float:
        return self.mu.real

    @property
    def gamma(self) -> float:
        return -2.0 * self.mu.imag


@dataclass(frozen=True)
class SkippedSeed:
    energy: float
    reason: str


@dataclass
class PoleSearch:
    poles: list[ResonancePole] = field(default_factory=list)
    skipped: list[SkippedSeed] = field(default_factory=list)
    seeds: list[float] = field(default_factory=list)


def continued_denominator(k, p: Potential):
    """d(k) = conj(alpha3(k))/alpha1(k) for real k, continued analytically."""
    k = np.asarray(k, dtype=complex)
    if np.any(k == 0):
        raise ValueError("continued denominator is undefined at k = 0")
    with np.errstate(over="ignore", invalid="ignore"):
        out = 0.25 * np.exp(1j * k * p.b) * _barrier_bracket(k, p, -1)
    return out[()] if out.ndim == 0 else out


def continued_numerator(k, p: Potential):
    """alpha3(k)/alpha1(k) continued by Schwarz reflection of d."""
    return np.conj(continued_denominator(np.conj(k), p))


def continued_s_matrix(z, p: Potential):
    """S(z) = -alpha3/alpha3* on the sheet reached through the positive real axis."""
    k = np.sqrt(2 * p.mass * np.asarray(z, dtype=complex))
    return -continued_numerator(k, p) / continued_denominator(k, p)


def _seed_energies(d, mass: float, e_window, n_seeds: int) -> np.ndarray:
    E = np.linspace(e_window[0], e_window[1], n_seeds)
    v = np.abs([d(k) for k in np.sqrt(2 * mass * E) + 0j])
    interior = (v[1:-1] < v[:-2]) & (v[1:-1] < v[2:])
    return E[1:-1][interior]


def search_poles(
    p: Potential,
    e_window: tuple[float, float] = (0.1, 10.0),
    n_seeds: int = 200,
    tol: float = 1e-12,
    max_iter: int = 100,
    denominator=None,
) -> PoleSearch:
    """Seed from minima of |d| along the real energy axis, polish by Newton in k.

    Roots outside the fourth quadrant of k, with residual above
    ``RESIDUAL_TOL`` or with Re(mu) outside the window are skipped and
    recorded, as are seeds on which Newton fails. ``denominator`` replaces
    d(k) by another function of k (used to test the search on known zeros).
    """
    lo, hi = e_window
    if not 0 < lo < hi:
        raise ValueError(f"need 0 < e_min < e_max, got {e_window}")
    if n_seeds < 8:
        raise ValueError("n_seeds must be at least 8")

    if denominator is None:
        def d(k):
            return complex(continued_denominator(k, p))
    else:
        d = denominator

    result = PoleSearch()
    for E in _seed_energies(d, p.mass, e_window, n_seeds):
        result.seeds.append(float(E))
        try:
            nr = newton_complex(d, complex(np.sqrt(2 * p.mass * E)), tol, max_iter)
        except NewtonError as exc:
            result.skipped.append(SkippedSeed(float(E), str(exc)))
            log.info("seed E=%.6g skipped: %s", E, exc)
            continue
        k = nr.root
        mu = k * k / (2 * p.mass)
        if not (k.real > 0 and k.imag < 0):
            reason = f"root k={k!r} outside Re k > 0, Im k < 0"
        elif not nr.residual < RESIDUAL_TOL:
            reason = f"residual {nr.residual:.3e} above {RESIDUAL_TOL:g}"
        elif not lo < mu.real < hi:
            reason = f"Re(mu)={mu.real:.6g} outside window"
        else:
            reason = ""
        if reason:
            result.skipped.append(SkippedSeed(float(E), reason))
            continue
        if any(abs(mu - q.mu) < MERGE_TOL for q in result.poles):
            continue
        result.poles.append(ResonancePole(complex(mu), complex(k), float(nr.residual), nr.iterations))
    result.poles.sort(key=lambda q: q.e_res)
    return result


def find_poles(p: Potential, e_window=(0.1, 10.0), n_seeds: int = 200, tol: float = 1e-12):
    return search_poles(p, e_window, n_seeds, tol).poles
