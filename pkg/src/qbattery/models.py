"""Concrete band maps: Dirac cones, the transverse-field Ising chain, and
the Haldane honeycomb model (plus its topology helpers).

All band maps produce Bloch vectors for the kernel in ``qbattery.kernel``;
the Ising chain is evaluated from its own closed stored-energy formula
(Bogoliubov bookkeeping differs from the generic kernel by a factor 1/2,
and the closed formula is treated as normative).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .kernel import DVector, EnergyResult
from .quadrature import BZGrid
from .reduction import compensated_sum

__all__ = [
    "DiracParams",
    "IsingParams",
    "HaldaneParams",
    "QuenchSpec",
    "CriticalityError",
    "GapTooSmallError",
    "dirac_d",
    "dirac_band",
    "ising_dispersions",
    "ising_energy",
    "haldane_d",
    "haldane_band",
    "haldane_grid",
    "haldane_dirac_points",
    "haldane_masses",
    "critical_t2",
    "chern_sign",
    "chern_numeric",
]

SQRT3 = math.sqrt(3.0)

# Modes whose dispersion falls below this are tallied as dropped; see the
# kernel's critical-mode convention.
DEGENERATE_TOL = 1e-12


class CriticalityError(ValueError):
    """Raised when a quantity is undefined at a gap closing."""


class GapTooSmallError(CriticalityError):
    """Raised when the numeric Chern number cannot resolve the gap."""


@dataclass(frozen=True)
class DiracParams:
    """Linear gap-closing model: d = (k_x, 0, m) in 1D, (k_x, k_y, m) in 2D."""

    dim: int
    mass: float

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("Dirac model dimension must be 1 or 2")
        if not math.isfinite(self.mass):
            raise ValueError("mass must be finite")


@dataclass(frozen=True)
class IsingParams:
    """Transverse-field Ising chain; h is the applied field."""

    h: float

    def __post_init__(self):
        if not math.isfinite(self.h):
            raise ValueError("field must be finite")


@dataclass(frozen=True)
class HaldaneParams:
    """Honeycomb model with staggered potential m and imaginary NNN hopping.

    The NNN phase is fixed to pi/2; t2 is the hopping amplitude.  Primitive
    vectors a1 = a (1, 0), a2 = a (1/2, sqrt3/2); B-sublattice offset
    delta_B = a (1/2, 1/(2 sqrt3)).
    """

    t1: float
    t2: float
    m: float
    a: float = 1.0

    def __post_init__(self):
        if not self.a > 0.0:
            raise ValueError("lattice constant must be positive")
        for c in (self.t1, self.t2, self.m):
            if not math.isfinite(c):
                raise ValueError("couplings must be finite")

    @property
    def a1(self) -> np.ndarray:
        return self.a * np.array([1.0, 0.0])

    @property
    def a2(self) -> np.ndarray:
        return self.a * np.array([0.5, SQRT3 / 2.0])

    @property
    def delta_b(self) -> np.ndarray:
        return self.a * np.array([0.5, 0.5 / SQRT3])

    @property
    def b1(self) -> np.ndarray:
        return (2.0 * math.pi / self.a) * np.array([1.0, -1.0 / SQRT3])

    @property
    def b2(self) -> np.ndarray:
        return (2.0 * math.pi / self.a) * np.array([0.0, 2.0 / SQRT3])


@dataclass(frozen=True)
class QuenchSpec:
    """Charging protocol: evolve with ``during`` for tau, measure ``before``.

    ``tau = None`` is the long-time regime.  Both parameter sets must come
    from the same family and differ in at most one coupling.
    """

    before: object
    during: object
    tau: float | None = None

    def __post_init__(self):
        if type(self.before) is not type(self.during):
            raise ValueError("quench must stay within one model family")
        changed = [
            f.name
            for f in fields(self.before)
            if getattr(self.before, f.name) != getattr(self.during, f.name)
        ]
        if len(changed) > 1:
            raise ValueError(f"quench must vary a single coupling, got {changed}")


# ----------------------------------------------------------------------
# Dirac cones
# ----------------------------------------------------------------------

def dirac_d(k, p: DiracParams) -> DVector:
    """Bloch vector at one momentum; k is a scalar (1D) or a pair (2D)."""
    kv = np.atleast_1d(np.asarray(k, dtype=np.float64))
    if kv.shape != (p.dim,):
        raise ValueError(f"momentum has {kv.shape[0]} components, model is {p.dim}D")
    if p.dim == 1:
        return DVector(float(kv[0]), 0.0, p.mass)
    return DVector(float(kv[0]), float(kv[1]), p.mass)


def dirac_band(p: DiracParams):
    """Vectorized band map (n, dim) -> (n, 3) for the kernel."""

    def band(pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != p.dim:
            raise ValueError(f"expected momenta of shape (n, {p.dim})")
        d = np.empty((pts.shape[0], 3))
        d[:, 0] = pts[:, 0]
        d[:, 1] = pts[:, 1] if p.dim == 2 else 0.0
        d[:, 2] = p.mass
        return d

    return band


# ----------------------------------------------------------------------
# Ising chain
# ----------------------------------------------------------------------

def ising_dispersions(k, h0: float, h1: float) -> tuple[np.ndarray, np.ndarray]:
    """(eps, omega) of the chain before and during the quench h0 -> h0 + h1."""
    k = np.asarray(k, dtype=np.float64)
    sin2 = np.sin(k) ** 2
    eps = np.sqrt((h0 - np.cos(k)) ** 2 + sin2)
    omega = np.sqrt((h0 + h1 - np.cos(k)) ** 2 + sin2)
    return eps, omega


def ising_energy(h0: float, h1: float, n_k: int, max_workers: int | None = None) -> EnergyResult:
    """Long-time stored energy per mode of the quenched Ising chain.

    Evaluates h1**2 * sum_k sin(k)**2 / (2 eps omega**2) on n_k momenta
    -pi + (j + 1/2) 2 pi / n_k, divided by n_k.  Grid points whose
    dispersion collapses (possible only when the sampling hits a gap
    closing) are dropped and tallied.
    """
    if n_k < 2:
        raise ValueError("need at least 2 momenta")
    k = BZGrid.line(n_k).points()[:, 0]
    eps, omega = ising_dispersions(k, h0, h1)
    dropped = (eps < DEGENERATE_TOL) | (omega < DEGENERATE_TOL)
    denom = np.where(dropped, 1.0, 2.0 * eps * omega * omega)
    summand = np.where(dropped, 0.0, h1 * h1 * np.sin(k) ** 2 / denom)
    value = compensated_sum(summand, max_workers=max_workers) / n_k
    return EnergyResult(value, int(np.count_nonzero(dropped)), n_k)


# ----------------------------------------------------------------------
# Haldane model
# ----------------------------------------------------------------------

def _haldane_components(pts: np.ndarray, p: HaldaneParams):
    """(d1, d2, d3) arrays at stacked momenta, from the component formulas."""
    ka1 = pts @ p.a1
    ka2 = pts @ p.a2
    kd1 = pts @ p.delta_b
    kd2 = kd1 - ka1
    kd3 = kd1 - ka2
    d1 = p.t1 * (np.cos(kd1) + np.cos(kd2) + np.cos(kd3))
    d2 = -p.t1 * (np.sin(kd1) + np.sin(kd2) + np.sin(kd3))
    d3 = p.m + 2.0 * p.t2 * (-np.sin(ka1) + np.sin(ka1 - ka2) + np.sin(ka2))
    return d1, d2, d3


def haldane_d(k, p: HaldaneParams) -> DVector:
    """Bloch vector of the Haldane model at one momentum (k-dependent
    identity shift omitted; it moves both bands equally)."""
    kv = np.asarray(k, dtype=np.float64).reshape(1, 2)
    d1, d2, d3 = _haldane_components(kv, p)
    return DVector(float(d1[0]), float(d2[0]), float(d3[0]))


def haldane_band(p: HaldaneParams):
    """Vectorized band map (n, 2) -> (n, 3) for the kernel."""

    def band(pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=np.float64)
        d1, d2, d3 = _haldane_components(pts, p)
        return np.stack([d1, d2, d3], axis=1)

    return band


def haldane_grid(p: HaldaneParams, n: int, offset: float = 0.5) -> BZGrid:
    """n x n half-step-offset grid over the reciprocal cell of the model.

    The offset keeps samples off the Dirac points, which sit at fractional
    coordinates (2/3, 1/3) and (1/3, 2/3)."""
    return BZGrid.reciprocal_cell(p.b1, p.b2, n, n, offset=offset)


def haldane_dirac_points(p: HaldaneParams) -> tuple[np.ndarray, np.ndarray]:
    """The two gap-closing momenta K = (2 pi / 3a)(-1, sqrt3) and K' = -K."""
    kpt = (2.0 * math.pi / (3.0 * p.a)) * np.array([-1.0, SQRT3])
    return kpt, -kpt


def haldane_masses(p: HaldaneParams) -> tuple[float, float]:
    """Dirac masses (m - 3 sqrt3 t2, m + 3 sqrt3 t2) of the two cones.

    With the component formulas used here the first mass is realized at
    -K and the second at +K, for K as returned by
    :func:`haldane_dirac_points`; the pair (not the labeling) is what the
    phase diagram depends on.
    """
    gap = 3.0 * SQRT3 * p.t2
    return p.m - gap, p.m + gap


def critical_t2(m: float) -> float:
    """Positive-branch critical NNN amplitude m / (3 sqrt3); use +-."""
    return m / (3.0 * SQRT3)


def _mass_tol(p: HaldaneParams) -> float:
    return 1e-9 * max(1.0, abs(p.m), 3.0 * SQRT3 * abs(p.t2))


def chern_sign(p: HaldaneParams) -> int:
    """Chern number from the Dirac-mass signs: (sgn(m_+) - sgn(m_-)) / 2."""
    m_minus, m_plus = haldane_masses(p)
    tol = _mass_tol(p)
    if abs(m_minus) <= tol or abs(m_plus) <= tol:
        raise CriticalityError("Dirac mass vanishes; Chern number undefined")
    return (int(math.copysign(1.0, m_plus)) - int(math.copysign(1.0, m_minus))) // 2


def _bloch_matrices(pts: np.ndarray, p: HaldaneParams) -> np.ndarray:
    """Periodic-gauge 2x2 Bloch matrices: the off-diagonal basis phase
    e^{i k . delta_B} is stripped so H(k + b_i) = H(k) exactly, as the
    plaquette algorithm requires.  Spectrum is unchanged."""
    ka1 = pts @ p.a1
    ka2 = pts @ p.a2
    f = p.t1 * (1.0 + np.exp(-1j * ka1) + np.exp(-1j * ka2))
    d3 = p.m + 2.0 * p.t2 * (-np.sin(ka1) + np.sin(ka1 - ka2) + np.sin(ka2))
    h = np.empty((pts.shape[0], 2, 2), dtype=np.complex128)
    h[:, 0, 0] = d3
    h[:, 0, 1] = f
    h[:, 1, 0] = np.conj(f)
    h[:, 1, 1] = -d3
    return h


def chern_numeric(p: HaldaneParams, n: int = 24) -> int:
    """Lower-band Chern number from plaquette Berry fluxes on an n x n grid.

    Link variables are overlaps of lower-band eigenvectors at neighboring
    grid points; the integer-rounded total flux is returned and must match
    :func:`chern_sign` whenever the gap is resolved.
    """
    if n < 12:
        raise ValueError("need at least a 12 x 12 grid")
    grid = haldane_grid(p, n)
    pts = grid.points()
    h = _bloch_matrices(pts, p)
    gap = np.sqrt(np.abs(h[:, 0, 1]) ** 2 + h[:, 0, 0].real ** 2)
    # band minima sit at the Dirac points, which the offset grid avoids,
    # so check the analytic masses as well as the sampled dispersions
    min_gap = min(float(gap.min()), *(abs(m) for m in haldane_masses(p)))
    if min_gap <= 1e-6 * abs(p.t1):
        raise GapTooSmallError(
            f"minimum dispersion {min_gap:.3e} too small for a reliable Chern number"
        )
    _, vecs = np.linalg.eigh(h)
    u = vecs[:, :, 0].reshape(n, n, 2)  # lower band
    u1 = np.roll(u, -1, axis=0)
    u2 = np.roll(u, -1, axis=1)
    u12 = np.roll(u1, -1, axis=1)
    link1 = np.einsum("ijc,ijc->ij", np.conj(u), u1)
    link2 = np.einsum("ijc,ijc->ij", np.conj(u1), u12)
    link3 = np.einsum("ijc,ijc->ij", np.conj(u12), u2)
    link4 = np.einsum("ijc,ijc->ij", np.conj(u2), u)
    flux = np.angle(link1 * link2 * link3 * link4)
    total = float(flux.sum()) / (2.0 * math.pi)
    c = round(total)
    if abs(total - c) > 0.01:
        raise GapTooSmallError(
            f"plaquette flux sum {total:.6f} is not close to an integer; refine the grid"
        )
    return int(c)
