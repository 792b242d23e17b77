"""Momentum-space grids and the radial stored-energy integral.

Two discretizations are provided: uniform half-step-offset Brillouin-zone
grids (:class:`BZGrid`) for lattice models, and a graded composite
Gauss-Legendre rule for the continuum Dirac-cone integral

    dE = S_{d-1} / (2 pi)**d * dM**2 *
         int_0^cutoff k**(d+1) / ((k**2 + m_b**2) sqrt(k**2 + m_a**2)) dk.

The integrand develops a feature of width |m_b| at the origin when the
drive approaches criticality, so panel edges are graded toward k = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

from .kernel import EnergyConvention
from .reduction import compensated_sum

__all__ = [
    "BZGrid",
    "RadialShell",
    "sphere_surface",
    "dirac_energy_radial",
    "bz_sum",
]

GL_ORDER = 16
PANEL_GRADING = 3.0  # edge_i = cutoff * (i/n)**grading, denser near k = 0


def sphere_surface(d: int) -> float:
    """Surface area S_{d-1} = 2 pi**(d/2) / Gamma(d/2) of the unit sphere.

    Evaluated by the half-integer Gamma recurrence, so small dimensions are
    exact: S_0 = 2, S_1 = 2 pi, S_2 = 4 pi.
    """
    if d < 1 or d != int(d):
        raise ValueError(f"dimension must be a positive integer, got {d!r}")
    d = int(d)
    if d == 1:
        return 2.0
    if d == 2:
        return 2.0 * math.pi
    # S_{d-1} = 2 pi / (d - 2) * S_{d-3}, from Gamma(x + 1) = x Gamma(x)
    return 2.0 * math.pi / (d - 2) * sphere_surface(d - 2)


@dataclass(frozen=True)
class BZGrid:
    """Uniform momentum grid with half-step offsets.

    1D grids sample the interval (-pi, pi); 2D grids sample the reciprocal
    cell spanned by the rows of ``basis`` in fractional coordinates
    ``(i + offset) / n``.  Offsets keep samples off gap-closing momenta.
    Point order is fixed (row-major in the 2D index), which pins the
    deterministic-reduction order downstream.
    """

    dim: int
    counts: tuple[int, ...]
    offsets: tuple[float, ...]
    basis: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("only 1D and 2D grids are supported")
        if len(self.counts) != self.dim or len(self.offsets) != self.dim:
            raise ValueError("counts/offsets must match the grid dimension")
        if any(n < 2 for n in self.counts):
            raise ValueError("need at least 2 points per direction")
        if any(not 0.0 < o < 1.0 for o in self.offsets):
            raise ValueError("offsets must lie strictly inside (0, 1)")
        if self.dim == 2 and self.basis is None:
            raise ValueError("2D grids need a reciprocal basis")

    @classmethod
    def line(cls, n: int, offset: float = 0.5) -> "BZGrid":
        """n momenta k_j = -pi + (j + offset) * 2 pi / n."""
        return cls(dim=1, counts=(n,), offsets=(offset,))

    @classmethod
    def reciprocal_cell(
        cls,
        b1,
        b2,
        n1: int,
        n2: int | None = None,
        offset: float = 0.5,
    ) -> "BZGrid":
        """n1 x n2 fractional grid over the cell spanned by b1, b2."""
        if n2 is None:
            n2 = n1
        basis = (tuple(float(c) for c in b1), tuple(float(c) for c in b2))
        return cls(dim=2, counts=(n1, n2), offsets=(offset, offset), basis=basis)

    @property
    def n_points(self) -> int:
        return int(np.prod(self.counts))

    def points(self) -> np.ndarray:
        """Momenta as an (n_points, dim) array in fixed order."""
        if self.dim == 1:
            n = self.counts[0]
            k = -math.pi + (np.arange(n) + self.offsets[0]) * (2.0 * math.pi / n)
            return k[:, np.newaxis]
        n1, n2 = self.counts
        f1 = (np.arange(n1) + self.offsets[0]) / n1
        f2 = (np.arange(n2) + self.offsets[1]) / n2
        b = np.asarray(self.basis, dtype=np.float64)  # rows b1, b2
        frac = np.stack(
            [np.repeat(f1, n2), np.tile(f2, n1)], axis=1
        )
        return frac @ b


@dataclass(frozen=True)
class RadialShell:
    """Integration domain of the d-dimensional radial stored-energy integral."""

    dim: int
    cutoff: float
    panels: int = 512

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")
        if not self.cutoff > 0.0:
            raise ValueError("cutoff must be positive")
        if self.panels < 16:
            raise ValueError("need at least 16 panels")


@lru_cache(maxsize=None)
def _gl_nodes(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(order)
    return x, w


def _composite_gl(f, cutoff: float, panels: int) -> float:
    """Composite Gauss-Legendre over [0, cutoff] with edges graded to 0."""
    edges = cutoff * (np.arange(panels + 1) / panels) ** PANEL_GRADING
    x, w = _gl_nodes(GL_ORDER)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    pts = (mid[:, np.newaxis] + half[:, np.newaxis] * x).ravel()
    wts = (half[:, np.newaxis] * w).ravel()
    return compensated_sum(wts * f(pts))


def dirac_energy_radial(
    d: int,
    mass_a: float,
    mass_b: float,
    cutoff: float,
    panels: int,
    mass_step: float,
    simplified: bool = False,
    rtol: float = 1e-9,
) -> float:
    """Stored energy of the d-dimensional Dirac cone, radial-shell integral.

    Parameters
    ----------
    d : int
        Spatial dimension (>= 1).
    mass_a, mass_b : float
        Battery and drive masses; ``mass_a`` must be nonzero (the battery
        is gapped).  ``mass_b = 0`` is regular and handled by the same rule.
    cutoff : float
        Shell radius Lambda.
    panels : int
        Starting panel count; doubled until successive results agree to
        ``rtol`` (relative), so the returned value carries that accuracy.
    mass_step : float
        Mass quench dM = mass_a - mass_b (enters squared).
    simplified : bool
        Replace sqrt(k**2 + mass_a**2) by |mass_a| (the low-energy form
        whose closed forms live in ``criticality``).
    """
    shell = RadialShell(dim=int(d), cutoff=float(cutoff), panels=int(panels))
    if mass_a == 0.0:
        raise ValueError("battery mass must be nonzero (pre-quench gap required)")
    if mass_step == 0.0:
        return 0.0
    mb2 = mass_b * mass_b
    if simplified:
        inv_eps = 1.0 / abs(mass_a)

        def f(k):
            return k ** (shell.dim + 1) / (k * k + mb2) * inv_eps

    else:
        ma2 = mass_a * mass_a

        def f(k):
            return k ** (shell.dim + 1) / ((k * k + mb2) * np.sqrt(k * k + ma2))

    n = shell.panels
    last = _composite_gl(f, shell.cutoff, n)
    for _ in range(8):
        n *= 2
        cur = _composite_gl(f, shell.cutoff, n)
        if abs(cur - last) <= rtol * abs(cur):
            last = cur
            break
        last = cur
    else:
        raise ValueError(
            f"radial integral did not converge to rtol={rtol} within {n} panels"
        )
    pref = sphere_surface(shell.dim) / (2.0 * math.pi) ** shell.dim
    return pref * mass_step * mass_step * last


def bz_sum(
    f,
    grid: BZGrid,
    convention: EnergyConvention = EnergyConvention.PER_MODE,
    max_workers: int | None = None,
) -> float:
    """Compensated fixed-order sum of a per-momentum function over a grid.

    ``f`` must be vectorized: it receives the full (n, dim) point array and
    returns n values.  Non-finite values raise with the offending momentum.
    """
    pts = grid.points()
    vals = np.asarray(f(pts), dtype=np.float64)
    if vals.shape != (pts.shape[0],):
        raise ValueError(f"integrand returned shape {vals.shape}, expected ({pts.shape[0]},)")
    bad = ~np.isfinite(vals)
    if bad.any():
        i = int(np.argmax(bad))
        raise ValueError(f"integrand returned {vals[i]!r} at k = {pts[i]}")
    total = compensated_sum(vals, max_workers=max_workers)
    if convention is EnergyConvention.PER_MODE:
        total /= pts.shape[0]
    return total
