"""Stored-energy parameter scans for each model family.

A scan evaluates the stored energy on a half-step-offset parameter grid
(samples never land on the critical value itself) and carries first and
second central derivatives for the singularity estimators.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .criticality import ParamScan, central_derivative
from .kernel import EnergyConvention, aggregate_modes
from .models import HaldaneParams, haldane_grid, ising_energy
from .quadrature import dirac_energy_radial

__all__ = ["ScanResult", "scan_grid", "ising_scan", "dirac_scan", "haldane_scan"]


@dataclass(frozen=True, eq=False)
class ScanResult:
    """Energy scan plus its derivative scans and per-point diagnostics."""

    scan: ParamScan
    dropped: np.ndarray  # dropped-mode count per scan point
    d1: ParamScan
    d2: ParamScan


def scan_grid(start: float, stop: float, steps: int) -> np.ndarray:
    """steps samples at start + (j + 1/2) * (stop - start) / steps."""
    if not start < stop:
        raise ValueError("scan range must have start < stop")
    if steps < 8:
        raise ValueError("need at least 8 scan steps")
    h = (stop - start) / steps
    return start + (np.arange(steps) + 0.5) * h


def _map_points(fn, xs, max_workers):
    """Evaluate fn over xs, preserving order (so parallelism cannot change
    the output)."""
    if max_workers is not None and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            return list(pool.map(fn, xs))
    return [fn(x) for x in xs]


def _bundle(name: str, xs: np.ndarray, energies, dropped) -> ScanResult:
    energies = np.asarray(energies, dtype=np.float64)
    bad = ~np.isfinite(energies)
    if bad.any():
        i = int(np.argmax(bad))
        raise ValueError(f"non-finite stored energy at {name} = {xs[i]!r}")
    scan = ParamScan(name, xs, energies)
    return ScanResult(
        scan=scan,
        dropped=np.asarray(dropped, dtype=np.int64),
        d1=central_derivative(scan, 1),
        d2=central_derivative(scan, 2),
    )


def ising_scan(
    h0_values: np.ndarray,
    h1: float,
    n_k: int,
    max_workers: int | None = None,
) -> ScanResult:
    """Stored energy per mode of the Ising chain versus the initial field."""

    def point(h0):
        return ising_energy(h0, h1, n_k)

    results = _map_points(point, h0_values, max_workers)
    return _bundle(
        "h0", np.asarray(h0_values, float),
        [r.value for r in results], [r.dropped_modes for r in results],
    )


def dirac_scan(
    dim: int,
    mass_values: np.ndarray,
    delta: float,
    cutoff: float,
    panels: int,
    simplified: bool = True,
    max_workers: int | None = None,
) -> ScanResult:
    """Radial-shell Dirac stored energy versus the battery mass.

    The drive mass is mass + delta; the quench size dM = -delta enters
    squared.
    """

    def point(mass_a):
        return dirac_energy_radial(
            dim, mass_a, mass_a + delta, cutoff, panels, -delta,
            simplified=simplified,
        )

    energies = _map_points(point, mass_values, max_workers)
    zeros = np.zeros(len(energies), dtype=np.int64)
    return _bundle("mass_a", np.asarray(mass_values, float), energies, zeros)


def haldane_scan(
    t2_values: np.ndarray,
    delta: float,
    t1: float,
    m: float,
    a: float = 1.0,
    grid_n: int = 128,
    tau: float | None = None,
    convention: EnergyConvention = EnergyConvention.PER_MODE,
    max_workers: int | None = None,
) -> ScanResult:
    """Stored energy of the Haldane battery versus the initial NNN amplitude.

    The in-plane Bloch components and the t2 bracket do not depend on t2,
    so they are evaluated once per grid and reused across scan points.
    """
    p0 = HaldaneParams(t1=t1, t2=0.0, m=m, a=a)
    pts = haldane_grid(p0, grid_n).points()
    ka1 = pts @ p0.a1
    ka2 = pts @ p0.a2
    kd1 = pts @ p0.delta_b
    kd2 = kd1 - ka1
    kd3 = kd1 - ka2
    d1 = t1 * (np.cos(kd1) + np.cos(kd2) + np.cos(kd3))
    d2 = -t1 * (np.sin(kd1) + np.sin(kd2) + np.sin(kd3))
    bracket = -np.sin(ka1) + np.sin(ka1 - ka2) + np.sin(ka2)

    def point(t2):
        da = np.stack([d1, d2, m + 2.0 * t2 * bracket], axis=1)
        db = np.stack([d1, d2, m + 2.0 * (t2 + delta) * bracket], axis=1)
        return aggregate_modes(da, db, tau, convention)

    results = _map_points(point, t2_values, max_workers)
    return _bundle(
        "t2_a", np.asarray(t2_values, float),
        [r.value for r in results], [r.dropped_modes for r in results],
    )
