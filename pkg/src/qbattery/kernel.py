"""Per-momentum stored-energy kernel of the double-quench charging protocol.

Each momentum mode is a two-level system: the battery Hamiltonian is
``d_A . sigma`` and the charging drive is ``d_B . sigma``.  After the drive
has run for a time ``tau`` the mode holds

    e(tau) = (1 - cos(2 omega tau)) * F0 / (omega**2 * eps),

with ``eps = |d_A|``, ``omega = |d_B|`` and ``F0`` the quench-strength
kernel implemented by :func:`f0`.  In the long-time regime the oscillatory
factor averages to 1, which is the default here (``tau=None``).

``F0`` is a ratio of the form 0/0 when the drive vector has no planar
component (``d_B1 = d_B2 = 0``); the finite limit ``d_B3**2 *
(d_A1**2 + d_A2**2)`` is used there, and also inside a small relative
threshold of that ray to avoid catastrophic cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .reduction import compensated_sum

__all__ = [
    "DVector",
    "DegenerateModeError",
    "EnergyConvention",
    "EnergyResult",
    "dispersion",
    "f0",
    "mode_energy",
    "mode_energies",
    "aggregate_modes",
    "total_energy",
]

# Planar drive weight below this fraction of omega**2 switches f0 to the
# analytic limit branch.
NEAR_DEGENERATE_REL = 1e-12


class DegenerateModeError(ValueError):
    """Raised when a mode is critical (eps = 0 or omega = 0)."""


class EnergyConvention(Enum):
    """How aggregated mode energies are normalized."""

    RAW_SUM = "raw_sum"
    PER_MODE = "per_mode"  # divide by the number of grid points


@dataclass(frozen=True, slots=True)
class DVector:
    """Bloch vector (d1, d2, d3) of a two-band Hamiltonian d . sigma."""

    d1: float
    d2: float
    d3: float

    def __post_init__(self):
        for c in (self.d1, self.d2, self.d3):
            if not math.isfinite(c):
                raise ValueError(f"non-finite Bloch vector component: {c!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.d1, self.d2, self.d3], dtype=np.float64)


@dataclass(frozen=True, slots=True)
class EnergyResult:
    """Aggregated stored energy plus mode diagnostics."""

    value: float
    dropped_modes: int
    n_modes: int

    def __float__(self) -> float:
        return self.value


def _as_rows(d) -> np.ndarray:
    if isinstance(d, DVector):
        return d.as_array()[np.newaxis, :]
    arr = np.asarray(d, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[np.newaxis, :]
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"expected Bloch vectors of shape (n, 3), got {arr.shape}")
    return arr


def dispersion(d: DVector | tuple[float, float, float]) -> float:
    """Single-particle energy |d| = sqrt(d1**2 + d2**2 + d3**2)."""
    row = _as_rows(d)[0]
    return math.sqrt(row[0] * row[0] + row[1] * row[1] + row[2] * row[2])


def _f0_arrays(da: np.ndarray, db: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """F0 for stacked Bloch vectors of shape (n, 3).

    Returns ``(f0, omega2)``.  Rows with omega2 == 0 get f0 = 0; callers
    decide whether that is an error or a dropped mode.
    """
    a1, a2, a3 = da[:, 0], da[:, 1], da[:, 2]
    b1, b2, b3 = db[:, 0], db[:, 1], db[:, 2]
    rho2 = b1 * b1 + b2 * b2  # omega**2 - b3**2, formed without cancellation
    omega2 = rho2 + b3 * b3
    cross = a1 * b2 - a2 * b1
    dot = a1 * b1 + a2 * b2
    limit_branch = rho2 <= NEAR_DEGENERATE_REL * omega2
    safe_rho2 = np.where(limit_branch, 1.0, rho2)
    # second addend of the kernel, written over the common denominator rho2
    # so that d_A == d_B cancels exactly
    num2 = a3 * rho2 - b3 * dot
    exact = (omega2 * cross * cross + num2 * num2) / safe_rho2
    limit = b3 * b3 * (a1 * a1 + a2 * a2)
    return np.where(limit_branch, limit, exact), omega2


def f0(da: DVector, db: DVector) -> float:
    """Quench-strength kernel F0 of a single mode (units energy**3).

    Raises :class:`DegenerateModeError` if the drive vanishes (omega = 0).
    """
    a = _as_rows(da)
    b = _as_rows(db)
    vals, omega2 = _f0_arrays(a, b)
    if omega2[0] == 0.0:
        raise DegenerateModeError("evolution Hamiltonian vanishes (omega = 0)")
    return float(vals[0])


def mode_energies(
    da, db, tau: float | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Stored energy of stacked modes; critical modes are zeroed.

    Parameters
    ----------
    da, db : array_like, shape (n, 3)
        Battery and drive Bloch vectors per momentum.
    tau : float, optional
        Charging duration.  ``None`` selects the long-time average.

    Returns
    -------
    values : ndarray, shape (n,)
        Mode energies, 0.0 at critical modes.
    dropped : ndarray of bool, shape (n,)
        True where eps = 0 or omega = 0.
    """
    da = _as_rows(da)
    db = _as_rows(db)
    if da.shape != db.shape:
        raise ValueError("d_A and d_B stacks must have the same shape")
    eps2 = da[:, 0] ** 2 + da[:, 1] ** 2 + da[:, 2] ** 2
    vals, omega2 = _f0_arrays(da, db)
    dropped = (eps2 == 0.0) | (omega2 == 0.0)
    denom = np.where(dropped, 1.0, omega2 * np.sqrt(eps2))
    vals = vals / denom
    if tau is not None:
        vals = vals * (1.0 - np.cos(2.0 * np.sqrt(omega2) * tau))
    return np.where(dropped, 0.0, vals), dropped


def mode_energy(da: DVector, db: DVector, tau: float | None = None) -> float:
    """Stored energy of one mode; long-time regime when ``tau`` is None.

    Raises :class:`DegenerateModeError` at critical modes.
    """
    vals, dropped = mode_energies(da, db, tau)
    if dropped[0]:
        raise DegenerateModeError("critical mode: eps = 0 or omega = 0")
    return float(vals[0])


def aggregate_modes(
    da,
    db,
    tau: float | None = None,
    convention: EnergyConvention = EnergyConvention.PER_MODE,
    max_workers: int | None = None,
) -> EnergyResult:
    """Deterministic fixed-order aggregation of :func:`mode_energies`."""
    vals, dropped = mode_energies(da, db, tau)
    total = compensated_sum(vals, max_workers=max_workers)
    n = vals.shape[0]
    if convention is EnergyConvention.PER_MODE:
        total /= n
    return EnergyResult(total, int(np.count_nonzero(dropped)), n)


def total_energy(
    band_a,
    band_b,
    grid,
    tau: float | None = None,
    convention: EnergyConvention = EnergyConvention.PER_MODE,
    max_workers: int | None = None,
) -> EnergyResult:
    """Stored energy aggregated over a momentum grid.

    Parameters
    ----------
    band_a, band_b : callable
        Vectorized band maps taking the grid points, shape (n, dim), to
        Bloch vectors of shape (n, 3).
    grid
        Any object with a ``points()`` method returning the (n, dim)
        momentum array in a fixed order (see ``quadrature.BZGrid``).
    tau : float, optional
        Charging duration; ``None`` is the long-time regime.
    convention : EnergyConvention
        ``PER_MODE`` divides by the number of grid points.

    Critical modes contribute 0 and are tallied in ``dropped_modes``.
    Non-finite band-map output raises ``ValueError`` naming the momentum.
    """
    pts = grid.points()
    if pts.shape[0] == 0:
        raise ValueError("empty momentum grid")
    stacks = []
    for name, band in (("band_a", band_a), ("band_b", band_b)):
        d = np.asarray(band(pts), dtype=np.float64)
        if d.shape != (pts.shape[0], 3):
            raise ValueError(f"{name} returned shape {d.shape}, expected {(pts.shape[0], 3)}")
        bad = ~np.all(np.isfinite(d), axis=1)
        if bad.any():
            i = int(np.argmax(bad))
            raise ValueError(f"{name} returned non-finite Bloch vector at k = {pts[i]}")
        stacks.append(d)
    return aggregate_modes(stacks[0], stacks[1], tau, convention, max_workers)
