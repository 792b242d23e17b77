"""Scan analysis: finite-difference derivatives, jump and log-divergence
estimation, and the analytic predictors for the singular parts.

The universal picture: when the drive Hamiltonian crosses a linear gap
closing in d dimensions, the d-th derivative of the stored energy with
respect to the quenched parameter has a finite jump for odd d and a
logarithmic divergence for even d.  Estimators here work on uniformly
sampled scans that never place a sample exactly at the critical value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .quadrature import sphere_surface

__all__ = [
    "ParamScan",
    "SingularityReport",
    "QuenchIncrement",
    "central_derivative",
    "estimate_jump",
    "locate_jump",
    "fit_log_divergence",
    "linear_fit_residual",
    "predicted_jump",
    "predicted_log_coefficient",
    "harmonic_alt",
    "closed_form_1d",
    "closed_form_2d",
]

JUMP_WINDOW = 4  # points per side used for one-sided linear extrapolation
JUMP_EXCLUSION = 2  # points per side dropped around the critical value
LOG_WINDOW_STEPS = (2.0, 50.0)  # default log-fit window in units of the step


@dataclass(frozen=True, eq=False)
class ParamScan:
    """Uniformly sampled (parameter, value) series.

    ``x`` must be strictly increasing with uniform spacing (to 1e-12
    relative); ``y`` must be finite.
    """

    name: str
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if x.ndim != 1 or x.shape != y.shape or x.size < 2:
            raise ValueError("scan needs matching 1D arrays with >= 2 samples")
        dx = np.diff(x)
        # uniform to 1e-12 relative, plus the ulp jitter that differencing
        # an exactly uniform float grid produces when |x| >> h
        tol = 1e-12 * abs(dx[0]) + 8e-16 * float(np.max(np.abs(x)))
        if dx[0] <= 0 or np.any(np.abs(dx - dx[0]) > tol):
            raise ValueError("scan grid must be strictly increasing and uniform")
        if not np.all(np.isfinite(y)):
            raise ValueError("scan values must be finite")

    @property
    def step(self) -> float:
        return float(self.x[1] - self.x[0])

    def __len__(self) -> int:
        return int(self.x.size)


@dataclass(frozen=True)
class SingularityReport:
    """Classified non-analyticity of a scan derivative.

    ``kind`` is "jump" (magnitude plus one-sided limits) or
    "log_divergence" (pooled coefficients of a*ln|x - x_c| + b, the
    one-sided coefficients, and the fit residual).
    """

    kind: str
    location: float
    magnitude: float | None = None
    left: float | None = None
    right: float | None = None
    coeff_log: float | None = None
    coeff_const: float | None = None
    side_coeffs: tuple[tuple[float, float] | None, tuple[float, float] | None] = (None, None)
    residual: float = 0.0

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "location": self.location, "residual": self.residual}
        if self.kind == "jump":
            out.update(magnitude=self.magnitude, left=self.left, right=self.right)
        else:
            lo, hi = self.side_coeffs
            out.update(
                coeff_log=self.coeff_log,
                coeff_const=self.coeff_const,
                left_fit=list(lo) if lo else None,
                right_fit=list(hi) if hi else None,
            )
        return out


@dataclass(frozen=True)
class QuenchIncrement:
    """Quench size delta (m_b = m_a + delta, or t2 -> t2 + delta)."""

    delta: float

    def __post_init__(self):
        if self.delta == 0.0 or not math.isfinite(self.delta):
            raise ValueError("quench increment must be finite and nonzero")


def central_derivative(scan: ParamScan, order: int) -> ParamScan:
    """Central finite difference of a scan; endpoints are dropped.

    order 1: (y[i+1] - y[i-1]) / 2h;  order 2: (y[i+1] - 2 y[i] + y[i-1]) / h**2.
    """
    if order not in (1, 2):
        raise ValueError("derivative order must be 1 or 2")
    if len(scan) < order + 2:
        raise ValueError("not enough samples for the requested stencil")
    h = scan.step
    y = scan.y
    if order == 1:
        d = (y[2:] - y[:-2]) / (2.0 * h)
    else:
        d = (y[2:] - 2.0 * y[1:-1] + y[:-2]) / (h * h)
    return ParamScan(f"d{order}_{scan.name}", scan.x[1:-1], d)


def _one_sided_limit(x: np.ndarray, y: np.ndarray, x_c: float, side: str,
                     exclusion: int, window: int) -> tuple[float, float]:
    """Linear extrapolation to x_c from `window` points beyond the exclusion
    zone on one side.  Returns (limit, rms residual of the fit)."""
    if side == "left":
        idx = np.where(x < x_c)[0]
        keep = idx[:-exclusion] if exclusion > 0 else idx
        sel = keep[-window:]
    else:
        idx = np.where(x > x_c)[0]
        keep = idx[exclusion:]
        sel = keep[:window]
    if sel.size < window:
        raise ValueError(f"too few points on the {side} side of {x_c}")
    coeffs = np.polyfit(x[sel], y[sel], 1)
    fit = np.polyval(coeffs, x[sel])
    rms = float(np.sqrt(np.mean((y[sel] - fit) ** 2)))
    return float(np.polyval(coeffs, x_c)), rms


def estimate_jump(
    deriv: ParamScan,
    x_c: float,
    exclusion: int = JUMP_EXCLUSION,
    window: int = JUMP_WINDOW,
) -> SingularityReport:
    """Jump of a scan (typically a first derivative) at x_c.

    One-sided limits come from linear extrapolation over ``window`` points,
    skipping ``exclusion`` points next to x_c whose stencils straddle the
    kink.
    """
    if not deriv.x[0] < x_c < deriv.x[-1]:
        raise ValueError("critical value must lie strictly inside the scan")
    if exclusion < 1:
        raise ValueError("exclusion zone must drop at least one point per side")
    left, rms_l = _one_sided_limit(deriv.x, deriv.y, x_c, "left", exclusion, window)
    right, rms_r = _one_sided_limit(deriv.x, deriv.y, x_c, "right", exclusion, window)
    return SingularityReport(
        kind="jump",
        location=x_c,
        magnitude=abs(right - left),
        left=left,
        right=right,
        residual=math.hypot(rms_l, rms_r) / math.sqrt(2.0),
    )


def locate_jump(deriv: ParamScan) -> float:
    """Position of the largest step between adjacent samples (midpoint)."""
    i = int(np.argmax(np.abs(np.diff(deriv.y))))
    return float(0.5 * (deriv.x[i] + deriv.x[i + 1]))


def _window_sides(deriv: ParamScan, x_c: float,
                  window: tuple[float, float] | None):
    if window is None:
        h = deriv.step
        window = (LOG_WINDOW_STEPS[0] * h, LOG_WINDOW_STEPS[1] * h)
    r_min, r_max = window
    if not 0.0 < r_min < r_max:
        raise ValueError("window must satisfy 0 < r_min < r_max")
    r = deriv.x - x_c
    left = (-r >= r_min) & (-r <= r_max)
    right = (r >= r_min) & (r <= r_max)
    if max(np.count_nonzero(left), np.count_nonzero(right)) < 8:
        raise ValueError("need at least 8 window samples on one side")
    return left, right


def _lstsq_fit(design: np.ndarray, y: np.ndarray):
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return coef, y - design @ coef


def fit_log_divergence(
    deriv: ParamScan,
    x_c: float,
    window: tuple[float, float] | None = None,
) -> SingularityReport:
    """Least-squares fit of a*ln|x - x_c| + b on a window around x_c.

    ``window = (r_min, r_max)`` bounds |x - x_c|; the default is (2h, 50h).
    The headline (a, b) pools both sides; each side is also fitted
    separately, and the reported residual is the RMS error of the
    one-sided fits (the regular background need not match across x_c).
    """
    left, right = _window_sides(deriv, x_c, window)
    logs = np.log(np.abs(deriv.x - x_c), where=deriv.x != x_c,
                  out=np.zeros_like(deriv.x))
    pooled = left | right
    coef, _ = _lstsq_fit(
        np.stack([logs[pooled], np.ones(int(pooled.sum()))], axis=1), deriv.y[pooled]
    )
    side_coeffs = []
    side_resid = []
    for mask in (left, right):
        n = int(mask.sum())
        if n < 2:
            side_coeffs.append(None)
            continue
        c, resid = _lstsq_fit(np.stack([logs[mask], np.ones(n)], axis=1), deriv.y[mask])
        side_coeffs.append((float(c[0]), float(c[1])))
        side_resid.append(resid)
    pooled_resid = deriv.y[pooled] - (coef[0] * logs[pooled] + coef[1])
    resid = np.concatenate(side_resid) if side_resid else pooled_resid
    return SingularityReport(
        kind="log_divergence",
        location=x_c,
        coeff_log=float(coef[0]),
        coeff_const=float(coef[1]),
        side_coeffs=tuple(side_coeffs),
        residual=float(np.sqrt(np.mean(resid ** 2))),
    )


def linear_fit_residual(
    deriv: ParamScan,
    x_c: float,
    window: tuple[float, float] | None = None,
) -> float:
    """RMS residual of straight-line fits on the same window (and with the
    same side-by-side structure) as :func:`fit_log_divergence`; the
    comparison model for "is this a log"."""
    left, right = _window_sides(deriv, x_c, window)
    parts = []
    for mask in (left, right):
        n = int(mask.sum())
        if n < 2:
            continue
        _, resid = _lstsq_fit(
            np.stack([deriv.x[mask], np.ones(n)], axis=1), deriv.y[mask]
        )
        parts.append(resid)
    if not parts:
        pooled = left | right
        _, resid = _lstsq_fit(
            np.stack([deriv.x[pooled], np.ones(int(pooled.sum()))], axis=1),
            deriv.y[pooled],
        )
        parts.append(resid)
    resid = np.concatenate(parts)
    return float(np.sqrt(np.mean(resid ** 2)))


# ----------------------------------------------------------------------
# Analytic predictors (low-energy Dirac-cone theory)
# ----------------------------------------------------------------------

def predicted_jump(d: int, delta: float, mass_a_abs: float) -> float:
    """Magnitude of the jump of the d-th derivative (odd d).

    S_{d-1} / (2 pi)**d * pi * d! * delta**2 / |m_a|; at |m_a| = delta this
    reduces to delta for d = 1.
    """
    if d < 1 or d % 2 == 0:
        raise ValueError("jump predictor applies to odd dimensions")
    if delta == 0.0:
        raise ValueError("quench increment must be nonzero")
    if not mass_a_abs > 0.0:
        raise ValueError("battery mass magnitude must be positive")
    # grouping keeps d = 1 at |m_a| = delta exact: (2 pi)/(2 pi) = 1, then
    # (delta / m) * delta
    pref = sphere_surface(d) * math.pi / (2.0 * math.pi) ** d
    return abs(pref * math.factorial(d) * (delta / mass_a_abs) * delta)


def predicted_log_coefficient(d: int, delta: float) -> float:
    """Coefficient of ln|m_a + delta| in the d-th derivative (even d).

    S_{d-1} / (2 pi)**d * d! * delta, with the sign (-1)**(d/2 + 1) carried
    by the (-m_b**2)**(d/2) bookkeeping; delta / pi for d = 2.
    """
    if d < 2 or d % 2 == 1:
        raise ValueError("log predictor applies to even dimensions")
    if delta == 0.0:
        raise ValueError("quench increment must be nonzero")
    sign = -1.0 if (d // 2) % 2 == 0 else 1.0
    pref = sphere_surface(d) / (2.0 * math.pi) ** d
    return sign * pref * math.factorial(d) * delta


def harmonic_alt(d: int) -> float:
    """Harmonic number via the alternating binomial sum
    sum_k C(d, k) (-1)**(k-1) / k, evaluated in exact rational arithmetic
    (the float cancellation at d ~ 30 would otherwise eat 7 digits)."""
    if d < 1:
        raise ValueError("order must be a positive integer")
    total = Fraction(0)
    for k in range(1, d + 1):
        total += Fraction(math.comb(d, k) * (-1) ** (k - 1), k)
    return float(total)


# ----------------------------------------------------------------------
# Closed forms of the simplified radial integral (oracles for d = 1, 2)
# ----------------------------------------------------------------------

def closed_form_1d(mass_a: float, mass_b: float, cutoff: float, mass_step: float) -> float:
    """dM**2 / (pi |m_a|) * [cutoff - m_b arctan(cutoff / m_b)]."""
    if mass_a == 0.0:
        raise ValueError("battery mass must be nonzero")
    if mass_b == 0.0:
        bracket = cutoff
    else:
        bracket = cutoff - mass_b * math.atan(cutoff / mass_b)
    return mass_step * mass_step / (math.pi * abs(mass_a)) * bracket


def closed_form_2d(mass_a: float, mass_b: float, cutoff: float, mass_step: float) -> float:
    """dM**2 / (4 pi |m_a|) * [cutoff**2 - m_b**2 ln((cutoff**2 + m_b**2)/m_b**2)]."""
    if mass_a == 0.0:
        raise ValueError("battery mass must be nonzero")
    c2 = cutoff * cutoff
    if mass_b == 0.0:
        bracket = c2
    else:
        mb2 = mass_b * mass_b
        bracket = c2 - mb2 * math.log((c2 + mb2) / mb2)
    return mass_step * mass_step / (4.0 * math.pi * abs(mass_a)) * bracket
