import math

import numpy as np
import pytest
import scipy.linalg

from qbattery.criticality import closed_form_1d
from qbattery.kernel import (
    DegenerateModeError,
    DVector,
    EnergyConvention,
    aggregate_modes,
    dispersion,
    f0,
    mode_energies,
    mode_energy,
    total_energy,
)
from qbattery.models import DiracParams, dirac_band
from qbattery.quadrature import BZGrid

SIGMA = [
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
]


def bloch_matrix(d: DVector) -> np.ndarray:
    return d.d1 * SIGMA[0] + d.d2 * SIGMA[1] + d.d3 * SIGMA[2]


def random_dvectors(rng, n):
    return rng.uniform(-3.0, 3.0, size=(n, 3))


# ----------------------------------------------------------------------
# dispersion / DVector
# ----------------------------------------------------------------------

def test_dispersion_examples():
    assert dispersion(DVector(0, 0, -2.0)) == 2.0
    assert dispersion(DVector(3.0, 4.0, 0.0)) == 5.0
    # matches the denominator of the radial integrand
    for k, m in [(0.3, 1.5), (2.0, -0.1)]:
        assert dispersion(DVector(k, 0.0, m)) == pytest.approx(
            math.sqrt(k * k + m * m), rel=1e-15
        )


def test_dvector_rejects_nonfinite():
    with pytest.raises(ValueError):
        DVector(math.nan, 0.0, 1.0)
    with pytest.raises(ValueError):
        DVector(0.0, math.inf, 1.0)


# ----------------------------------------------------------------------
# f0
# ----------------------------------------------------------------------

def test_f0_no_quench_is_exactly_zero():
    assert f0(DVector(1, 2, 3), DVector(1, 2, 3)) == 0.0


def test_f0_dirac_1d_value():
    # 1D Dirac form k^2 (dM)^2 at k = 1, masses +1 -> -1
    assert f0(DVector(1, 0, 1), DVector(1, 0, -1)) == 4.0


def test_f0_planar_degenerate_limit_value():
    # drive along the 3-axis: limit value d_B3^2 (d_A1^2 + d_A2^2)
    assert f0(DVector(1, 1, 0.3), DVector(0, 0, -1.0)) == pytest.approx(2.0, rel=1e-15)
    assert f0(DVector(1, 1, 5.0), DVector(0, 0, 2.0)) == pytest.approx(8.0, rel=1e-15)


def test_f0_rejects_vanishing_drive():
    with pytest.raises(DegenerateModeError):
        f0(DVector(1, 0, 1), DVector(0, 0, 0))


def test_f0_equals_cross_product_norm():
    # independent formula: the kernel is |d_A x d_B|^2
    rng = np.random.default_rng(2)
    da = random_dvectors(rng, 100_000)
    db = random_dvectors(rng, 100_000)
    from qbattery.kernel import _f0_arrays

    vals, _ = _f0_arrays(da, db)
    cross = np.cross(da, db)
    expect = np.einsum("ij,ij->i", cross, cross)
    scale = np.maximum(expect, 1.0)
    assert np.max(np.abs(vals - expect) / scale) < 1e-12


def test_f0_degenerate_direction_eta_sequence():
    rng = np.random.default_rng(3)
    n = 100_000
    da = random_dvectors(rng, n)
    b3 = rng.uniform(0.5, 3.0, n) * rng.choice([-1.0, 1.0], n)
    limit = b3 * b3 * (da[:, 0] ** 2 + da[:, 1] ** 2)
    from qbattery.kernel import _f0_arrays

    worst = []
    for eta in (1e-4, 1e-6, 1e-8):
        db = np.stack([np.full(n, eta), np.full(n, eta), b3], axis=1)
        vals, _ = _f0_arrays(da, db)
        worst.append(np.max(np.abs(vals - limit) / np.maximum(limit, 1e-30)))
    assert worst[0] > worst[1] >= worst[2]
    assert worst[2] < 1e-6


# ----------------------------------------------------------------------
# mode_energy
# ----------------------------------------------------------------------

def test_mode_energy_zero_duration_and_no_quench():
    da, db = DVector(0.4, -1.0, 2.0), DVector(1.0, 0.2, -0.5)
    assert mode_energy(da, db, tau=0.0) == 0.0
    assert mode_energy(da, da) == 0.0
    assert mode_energy(da, da, tau=1.7) == 0.0


def test_mode_energy_long_time_example():
    val = mode_energy(DVector(1, 0, 1), DVector(1, 0, -1))
    assert val == pytest.approx(math.sqrt(2.0), rel=1e-14)


def test_mode_energy_rejects_critical_modes():
    with pytest.raises(DegenerateModeError):
        mode_energy(DVector(0, 0, 0), DVector(1, 0, 1))
    with pytest.raises(DegenerateModeError):
        mode_energy(DVector(1, 0, 1), DVector(0, 0, 0))


def matrix_evolution_energy(da: DVector, db: DVector, tau: float) -> float:
    """Independent oracle: evolve the battery ground state with expm and
    measure the battery Hamiltonian."""
    ha = bloch_matrix(da)
    hb = bloch_matrix(db)
    w, v = np.linalg.eigh(ha)
    ground = v[:, 0]
    psi = scipy.linalg.expm(-1j * hb * tau) @ ground
    return float((np.conj(psi) @ ha @ psi).real - w[0])


def test_finite_tau_against_matrix_exponential_oracle():
    rng = np.random.default_rng(4)
    for _ in range(200):
        da = DVector(*rng.uniform(-2, 2, 3))
        db = DVector(*rng.uniform(-2, 2, 3))
        if dispersion(da) < 1e-6 or dispersion(db) < 1e-6:
            continue
        tau = rng.uniform(0.0, 20.0)
        expect = matrix_evolution_energy(da, db, tau)
        got = mode_energy(da, db, tau)
        assert got == pytest.approx(expect, rel=1e-9, abs=1e-11)


def test_long_time_is_period_average_of_oracle():
    da, db = DVector(1, 0, 1), DVector(1, 0, -1)
    omega = dispersion(db)
    period = math.pi / omega  # period of cos(2 omega tau)
    taus = (np.arange(4096) + 0.5) * period / 4096
    avg = np.mean([matrix_evolution_energy(da, db, t) for t in taus])
    assert avg == pytest.approx(mode_energy(da, db), rel=1e-8)


def test_finite_tau_bounded_by_twice_long_time():
    rng = np.random.default_rng(5)
    n = 1_000_000
    da = random_dvectors(rng, n)
    db = random_dvectors(rng, n)
    long_vals, dropped = mode_energies(da, db)
    for tau in (0.3, 2.0, 17.5):
        vals, _ = mode_energies(da, db, tau)
        assert np.all(vals >= 0.0)
        assert np.all(vals <= 2.0 * long_vals * (1.0 + 1e-14) + 1e-300)
    assert not dropped.any()


# ----------------------------------------------------------------------
# total_energy
# ----------------------------------------------------------------------

def test_total_energy_no_quench_is_zero():
    band = dirac_band(DiracParams(dim=1, mass=1.3))
    res = total_energy(band, band, BZGrid.line(256))
    assert res.value == 0.0
    assert res.dropped_modes == 0
    assert res.n_modes == 256


def test_total_energy_matches_1d_closed_form():
    # dense grid over |k| <= pi with battery mass >> pi: the per-mode sum
    # approximates the simplified radial integral solved in closed form
    mass_a, delta = 200.0, 3.0
    band_a = dirac_band(DiracParams(dim=1, mass=mass_a))
    band_b = dirac_band(DiracParams(dim=1, mass=mass_a + delta))
    res = total_energy(band_a, band_b, BZGrid.line(4096))
    expect = closed_form_1d(mass_a, mass_a + delta, math.pi, -delta)
    assert res.value == pytest.approx(expect, rel=5e-4)


def test_total_energy_finite_tau_bound_on_grid():
    band_a = dirac_band(DiracParams(dim=1, mass=-2.0))
    band_b = dirac_band(DiracParams(dim=1, mass=0.5))
    grid = BZGrid.line(512)
    long_time = total_energy(band_a, band_b, grid).value
    for tau in (0.1, 1.0, 9.0):
        val = total_energy(band_a, band_b, grid, tau=tau).value
        assert 0.0 <= val <= 2.0 * long_time * (1.0 + 1e-12)


def test_total_energy_raw_sum_convention():
    band_a = dirac_band(DiracParams(dim=1, mass=1.0))
    band_b = dirac_band(DiracParams(dim=1, mass=2.0))
    grid = BZGrid.line(128)
    per_mode = total_energy(band_a, band_b, grid, convention=EnergyConvention.PER_MODE)
    raw = total_energy(band_a, band_b, grid, convention=EnergyConvention.RAW_SUM)
    assert raw.value == pytest.approx(128 * per_mode.value, rel=1e-15)


def test_total_energy_repeated_calls_bit_identical():
    band_a = dirac_band(DiracParams(dim=1, mass=-1.0))
    band_b = dirac_band(DiracParams(dim=1, mass=0.7))
    grid = BZGrid.line(4096)
    first = total_energy(band_a, band_b, grid).value
    assert total_energy(band_a, band_b, grid).value == first
    assert total_energy(band_a, band_b, grid, max_workers=8).value == first


def test_plateau_running_mean_approaches_long_time():
    # drive exactly critical (mass 0): oscillations die out only through
    # the momentum sum; the tau-averaged energy settles onto the long-time
    # value as the averaging window [T, 2T] grows
    grid = BZGrid.line(4096)
    pts = grid.points()
    band_a = dirac_band(DiracParams(dim=1, mass=-2.0))
    band_b = dirac_band(DiracParams(dim=1, mass=0.0))
    da, db = band_a(pts), band_b(pts)
    long_vals, _ = mode_energies(da, db)
    long_total = long_vals.sum()
    omega = np.sqrt((db * db).sum(axis=1))
    devs = []
    for big_t in (5.0, 10.0, 20.0, 40.0, 80.0):
        # exact mean of (1 - cos(2 w tau)) over tau in [T, 2T]
        mean_factor = 1.0 - (np.sin(4 * omega * big_t) - np.sin(2 * omega * big_t)) / (
            2 * omega * big_t
        )
        windowed = (long_vals * mean_factor).sum()
        devs.append(abs(windowed - long_total) / long_total)
    assert all(devs[i + 1] < devs[i] for i in range(len(devs) - 1))
    assert devs[-1] < 1e-3


def test_dropped_modes_are_counted_and_skipped():
    class StubGrid:
        def points(self):
            return np.linspace(-1.0, 1.0, 5)[:, np.newaxis]

    def band_a(pts):
        return np.stack([pts[:, 0], np.zeros(len(pts)), np.ones(len(pts))], axis=1)

    def band_b(pts):
        d = np.stack([pts[:, 0], np.zeros(len(pts)), 2 * np.ones(len(pts))], axis=1)
        d[2] = 0.0  # kill the drive at one momentum
        return d

    res = total_energy(band_a, band_b, StubGrid(), convention=EnergyConvention.RAW_SUM)
    assert res.dropped_modes == 1
    assert math.isfinite(res.value) and res.value > 0.0


def test_nonfinite_band_output_names_momentum():
    class StubGrid:
        def points(self):
            return np.array([[0.25], [0.75]])

    def band_a(pts):
        out = np.ones((len(pts), 3))
        out[1, 2] = np.nan
        return out

    def band_b(pts):
        return np.ones((len(pts), 3))

    with pytest.raises(ValueError, match="0.75"):
        total_energy(band_a, band_b, StubGrid())


def test_aggregate_modes_parallel_matches_serial():
    rng = np.random.default_rng(6)
    da = random_dvectors(rng, 300_000)
    db = random_dvectors(rng, 300_000)
    serial = aggregate_modes(da, db)
    parallel = aggregate_modes(da, db, max_workers=6)
    assert parallel.value == serial.value
