"""Square barrier on the half-line: generalized eigenfunctions,
Lippmann-Schwinger states and the energy-representation S-matrix.

The barrier region is written through the entire functions
cos(k'L), k' sin(k'L) and sin(k'L)/k' of k'^2 = k^2 - 2 m V0, which are
even in k'. This covers E > V0, E < V0 and the branch point E = V0 with
a single expression; the exponential form of the coefficients is kept
for reference and cross-checking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# |E - V0| below this switches to the k' -> 0 limit
BRANCH_POINT_TOL = 1e-10
# |k' L| below this evaluates sin(k'L)/k' by its Taylor series
_SERIES_CUTOFF = 1e-4


@dataclass(frozen=True)
class Potential:
    """V(x) = v0 on [a, b], zero elsewhere on x > 0."""

    a: float = 2.0
    b: float = 3.0
    v0: float = 5.0
    mass: float = 1.0

    def __post_init__(self):
        if not 0 < self.a < self.b:
            raise ValueError(f"need 0 < a < b, got a={self.a}, b={self.b}")
        # v0 = 0 is accepted as the free reference case
        if self.v0 < 0:
            raise ValueError(f"need v0 >= 0, got {self.v0}")
        if self.mass <= 0:
            raise ValueError(f"need mass > 0, got {self.mass}")

    @property
    def width(self) -> float:
        return self.b - self.a

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= self.a) & (x <= self.b), self.v0, 0.0)


def _even_trig(kp2, length):
    """cos(k'L), k' sin(k'L), sin(k'L)/k' as functions of k'^2."""
    kp2 = np.asarray(kp2, dtype=complex)
    kp = np.sqrt(kp2)
    z = kp * length
    small = np.abs(z) < _SERIES_CUTOFF
    with np.errstate(invalid="ignore", divide="ignore"):
        sinc = np.where(small, length * (1 - z * z / 6 + z**4 / 120), np.sin(z) / kp)
    return np.cos(z), kp * np.sin(z), sinc


def _barrier_bracket(k, p: Potential, sign: int):
    """4 e^{-i sign k b} alpha3/alpha1 for sign=+1; the conjugate form for sign=-1.

    With s = sin ka, c = cos ka and L = b - a this is
    2 [s cos k'L + sign*(i/k) s k' sin k'L + k c sin(k'L)/k' - sign*i c cos k'L].
    """
    k = np.asarray(k, dtype=complex)
    cos_l, ksin_l, sinc_l = _even_trig(k * k - 2 * p.mass * p.v0, p.width)
    s, c = np.sin(k * p.a), np.cos(k * p.a)
    return 2 * (s * cos_l + sign * 1j / k * s * ksin_l + k * c * sinc_l - sign * 1j * c * cos_l)


def wavenumbers(E: float, p: Potential) -> tuple[float, complex]:
    if E < 0:
        raise ValueError(f"energy must be non-negative, got {E}")
    k = float(np.sqrt(2 * p.mass * E))
    if E >= p.v0:
        kprime = complex(np.sqrt(2 * p.mass * (E - p.v0)))
    else:
        kprime = 1j * np.sqrt(2 * p.mass * (p.v0 - E))
    return k, kprime


@dataclass(frozen=True)
class ScatteringSolution:
    """Coefficients of psi_E in the three regions.

    ``alpha2`` and ``beta2`` diverge individually at E = V0 and are stored
    as None there; region 2 is always evaluated through the regular
    combination alpha1 [sin ka cos k'(x-a) + k cos ka sin k'(x-a)/k'].
    """

    energy: float
    k: float
    kprime: complex
    alpha1: float
    alpha2: complex | None
    beta2: complex | None
    alpha3: complex
    beta3: complex
    potential: Potential

    @property
    def at_branch_point(self) -> bool:
        return self.alpha2 is None


def solve_coefficients(E: float, p: Potential) -> ScatteringSolution:
    if not E > 0:
        raise ValueError(f"scattering solutions need E > 0, got {E}")
    k, kprime = wavenumbers(E, p)
    alpha1 = (2 * np.pi * k) ** -0.5
    if abs(E - p.v0) < BRANCH_POINT_TOL:
        kprime = 0j
        alpha2 = beta2 = None
    else:
        ratio = k / (1j * kprime)
        s, c = np.sin(k * p.a), np.cos(k * p.a)
        alpha2 = 0.5 * np.exp(-1j * kprime * p.a) * (s + ratio * c) * alpha1
        beta2 = 0.5 * np.exp(1j * kprime * p.a) * (s - ratio * c) * alpha1
    alpha3 = complex(0.25 * np.exp(-1j * k * p.b) * _barrier_bracket(k, p, +1) * alpha1)
    return ScatteringSolution(
        energy=float(E),
        k=k,
        kprime=complex(kprime),
        alpha1=float(alpha1),
        alpha2=None if alpha2 is None else complex(alpha2),
        beta2=None if beta2 is None else complex(beta2),
        alpha3=alpha3,
        beta3=alpha3.conjugate(),
        potential=p,
    )


def alpha3_exponential_form(E: float, p: Potential) -> complex:
    """alpha3 evaluated term by term from the exponential formula (E != V0)."""
    k, kprime = wavenumbers(E, p)
    alpha1 = (2 * np.pi * k) ** -0.5
    s, c = np.sin(k * p.a), np.cos(k * p.a)
    ratio = k / (1j * kprime)
    L = p.width
    bracket = (1 + kprime / k) * np.exp(1j * kprime * L) * (s + ratio * c) + (
        1 - kprime / k
    ) * np.exp(-1j * kprime * L) * (s - ratio * c)
    return complex(0.25 * np.exp(-1j * k * p.b) * bracket * alpha1)


def _region2(alpha1, k, p: Potential, y):
    cos_y, _, sinc_y = _even_trig(k * k - 2 * p.mass * p.v0, y)
    return alpha1 * (np.sin(k * p.a) * cos_y + k * np.cos(k * p.a) * sinc_y)


def eigenfunction(s: ScatteringSolution, x, region: int | None = None):
    """psi_E(x); ``region`` forces one branch of the piecewise formula."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("eigenfunction is defined for x >= 0 only")
    p = s.potential
    r1 = s.alpha1 * np.sin(s.k * x) + 0j
    r2 = _region2(s.alpha1, s.k, p, x - p.a)
    r3 = s.alpha3 * np.exp(1j * s.k * x) + s.beta3 * np.exp(-1j * s.k * x)
    if region is not None:
        return {1: r1, 2: r2, 3: r3}[region]
    out = np.where(x <= p.a, r1, np.where(x < p.b, r2, r3))
    return out[()] if out.ndim == 0 else out


def lippmann_schwinger(s: ScatteringSolution, x, branch: str = "outgoing"):
    """psi_E^+ (incoming) or psi_E^- (outgoing) built from psi_E."""
    if s.alpha3 == 0:
        raise ZeroDivisionError(f"alpha3 vanishes at real E={s.energy}")
    psi = eigenfunction(s, x)
    if branch == "incoming":
        return 1j / (2 * s.beta3) * psi
    if branch == "outgoing":
        return psi / (2j * s.alpha3)
    raise ValueError(f"branch must be 'incoming' or 'outgoing', got {branch!r}")


def outgoing_states(energies, x, p: Potential, energy_normalized: bool = True) -> np.ndarray:
    """Matrix psi^-_{E_j}(x_i) for arrays of positions and energies.

    With ``energy_normalized`` the states carry the extra factor
    sqrt(2m/(pi k)), which makes them delta-normalized in energy:
    alpha1 cancels out of psi^-, whose asymptote is
    (e^{ikx} - S* e^{-ikx})/(2i).
    """
    E = np.asarray(energies, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(E <= 0):
        raise ValueError("energies must be positive")
    if np.any(x < 0):
        raise ValueError("positions must be non-negative")
    k = np.sqrt(2 * p.mass * E)
    alpha1 = (2 * np.pi * k) ** -0.5
    alpha3 = 0.25 * np.exp(-1j * k * p.b) * _barrier_bracket(k, p, +1) * alpha1
    X = x[:, None]
    r1 = alpha1 * np.sin(k * X)
    r2 = _region2(alpha1, k, p, X - p.a)
    r3 = alpha3 * np.exp(1j * k * X) + np.conj(alpha3) * np.exp(-1j * k * X)
    psi = np.where(X <= p.a, r1, np.where(X < p.b, r2, r3))
    out = psi / (2j * alpha3)
    if energy_normalized:
        out = out * np.sqrt(2 * p.mass / (np.pi * k))
    return out


def s_matrix(E, p: Potential):
    """S(E) = -alpha3/alpha3*; accepts scalars or arrays of energies > 0."""
    E = np.asarray(E, dtype=float)
    if np.any(E <= 0):
        raise ValueError("S-matrix needs E > 0")
    k = np.sqrt(2 * p.mass * E)
    num = np.exp(-1j * k * p.b) * _barrier_bracket(k, p, +1)
    out = -num / np.conj(num)
    return out[()] if out.ndim == 0 else out
