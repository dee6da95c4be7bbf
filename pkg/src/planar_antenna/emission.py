"""Angular emission, radiated power and collection efficiency of a vertical dipole.

Two independent routes to the total power are kept side by side:

* the far-field route integrates the transmitted plane-wave flux into the
  two bounding half-spaces over polar angle;
* the dissipated-power route integrates the work done on the dipole by its
  own reflected field over in-plane wavenumber.

In a lossless stack without bound modes they agree, which is the main
self-check of the recursion in :mod:`planar_antenna.stack`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.signal import find_peaks

from .errors import InvalidObjectiveError, NumericalAccuracyError
from .quadrature import integrate
from .stack import LayerStack, check_stack, kz, kz_at_angle, side_coefficients

DEFAULT_RESOLUTION = 0.25e-3  # rad
RTOL = 1e-8
GRID_TOL = 1e-7  # grid-integral error budget, relative to total power
MIN_CELL = 1e-9  # rad; well above the 12-digit resolution of CSV angles
HALF_SPACES = ("lower", "upper")


@dataclass(frozen=True)
class AngularSpectrum:
    """dP/dtheta in one half-space, as a fraction of total power per radian."""

    half_space: str
    angles: np.ndarray
    density: np.ndarray
    medium_index: float

    def _closed(self):
        # grazing sample by quadratic extrapolation; it is zero unless the
        # half-space index equals the emitter's
        x, y = self.angles, self.density
        if x.size >= 3:
            g = float(np.polyval(np.polyfit(x[-3:] - x[-1], y[-3:], 2), math.pi / 2 - x[-1]))
        else:
            g = 0.0
        return np.append(x, math.pi / 2), np.append(y, max(g, 0.0))

    def integral(self, theta_max: float | None = None) -> float:
        """Trapezoid integral of the density from 0 to ``theta_max``."""
        x, y = self._closed()
        if theta_max is None or theta_max >= math.pi / 2:
            return float(np.trapezoid(y, x))
        if theta_max <= x[0]:
            return 0.0
        k = int(np.searchsorted(x, theta_max, side="right"))
        y_end = np.interp(theta_max, x, y)
        xs = np.append(x[:k], theta_max)
        ys = np.append(y[:k], y_end)
        return float(np.trapezoid(ys, xs))


@dataclass(frozen=True)
class RadiatedPower:
    """Total power relative to an unbounded medium of the emitter index.

    ``total_normalized`` comes from the dissipated-power integral and
    ``far_field_total`` from the far-field flux; the fractions are far-field
    shares of the emitted power.
    """

    total_normalized: float
    lower_fraction: float
    upper_fraction: float
    far_field_total: float


@dataclass(frozen=True)
class ObjectiveGeometry:
    numerical_aperture: float
    immersion_index: float

    def __post_init__(self):
        na, n = self.numerical_aperture, self.immersion_index
        if not (0 < na < n):
            raise InvalidObjectiveError(
                f"numerical aperture {na} must lie in (0, immersion index {n})"
            )

    @property
    def half_angle(self) -> float:
        return math.asin(self.numerical_aperture / self.immersion_index)


def _outer_index(stack: LayerStack, half_space: str) -> float:
    if half_space == "lower":
        return stack.substrate.index
    if half_space == "upper":
        return stack.superstrate.index
    raise ValueError(f"half_space must be 'lower' or 'upper', got {half_space!r}")


def far_field_density(stack: LayerStack, half_space: str, theta):
    """Unnormalized dP/dtheta (free-space dipole total = 1) at ``theta``.

    ``theta`` is the polar angle in the bounding half-space, measured from
    the stack normal, in radians.
    """
    theta = np.asarray(theta, dtype=float)
    n_out = _outer_index(stack, half_space)
    n_e = stack.emitter_index
    k0 = stack.k0
    kp = k0 * n_out * np.sin(theta)
    c = np.cos(theta)
    u = kp / (k0 * n_e)
    w = kz_at_angle(n_e, n_out, c, k0) / (k0 * n_e)
    r_up, t_up, _ = side_coefficients(stack, "up", kp, (n_out, c))
    r_dn, t_dn, _ = side_coefficients(stack, "down", kp, (n_out, c))
    den = 1.0 - r_up * r_dn
    if half_space == "lower":
        amp = (1.0 + r_up) / den * t_dn
    else:
        amp = (1.0 + r_dn) / den * t_up
    return 0.75 * u**3 * c * c * np.abs(amp) ** 2 / np.abs(w) ** 2


def _reflection_factor(stack: LayerStack, u):
    kp = u * stack.k0 * stack.emitter_index
    r_up = side_coefficients(stack, "up", kp)[0]
    r_dn = side_coefficients(stack, "down", kp)[0]
    return (1.0 + r_up) * (1.0 + r_dn) / (1.0 - r_up * r_dn)


def _critical_angles(stack: LayerStack, n_out: float) -> list[float]:
    return sorted({math.asin(n / n_out) for n in stack.indices if n < n_out})


def far_field_power(stack: LayerStack, half_space: str, theta_max=None, rtol=RTOL):
    """Adaptive integral of :func:`far_field_density` over ``[0, theta_max]``."""
    n_out = _outer_index(stack, half_space)
    top = math.pi / 2 if theta_max is None else min(theta_max, math.pi / 2)
    pts = [0.0, top] + [a for a in _critical_angles(stack, n_out) if a < top]
    return integrate(lambda x: far_field_density(stack, half_space, x), pts, rtol=rtol)


def dissipated_power(stack: LayerStack, u_max_factor: float = 3.0, rtol=RTOL):
    """Normalized dissipated power, integrated over in-plane wavenumber.

    P/P0 = 1.5 * Re int_0^inf u^3/w * (1+R_up)(1+R_dn)/(1-R_up R_dn) du with
    u = kp/(k0 n_e) and w = sqrt(1 - u^2).  The propagating part is mapped
    through u = sin(a) and the evanescent part through u = cosh(b), which
    removes the 1/w endpoint singularity.  The integral runs up to
    ``u_max_factor * n_max / n_e``.  Returns a :class:`QuadResult`.
    """
    n_e = stack.emitter_index
    n_max = max(stack.indices)

    def propagating(a):
        return 1.5 * np.sin(a) ** 3 * np.real(_reflection_factor(stack, np.sin(a)))

    def evanescent(b):
        return 1.5 * np.cosh(b) ** 3 * np.imag(_reflection_factor(stack, np.cosh(b)))

    crit = sorted({n / n_e for n in stack.indices})
    a_pts = [0.0, math.pi / 2] + [math.asin(c) for c in crit if c < 1.0]
    b_top = math.acosh(u_max_factor * n_max / n_e)
    b_pts = [0.0, b_top] + [math.acosh(c) for c in crit if c > 1.0]
    inner = integrate(propagating, a_pts, rtol=rtol)
    outer = integrate(evanescent, b_pts, rtol=rtol)
    return type(inner)(
        inner.value + outer.value, inner.error + outer.error, inner.panels + outer.panels
    )


@lru_cache(maxsize=256)
def _far_field_split(stack: LayerStack, rtol: float = RTOL):
    lower = far_field_power(stack, "lower", rtol=rtol).value
    upper = far_field_power(stack, "upper", rtol=rtol).value
    return lower, upper


def total_radiated_power(stack: LayerStack) -> RadiatedPower:
    check_stack(stack)
    k_total = dissipated_power(stack).value
    lower, upper = _far_field_split(stack)
    ff = lower + upper
    return RadiatedPower(
        total_normalized=k_total,
        lower_fraction=lower / ff,
        upper_fraction=upper / ff,
        far_field_total=ff,
    )


def angle_grid(resolution: float = DEFAULT_RESOLUTION) -> np.ndarray:
    if not (0 < resolution <= 0.05):
        raise ValueError(f"angle grid resolution {resolution} rad outside (0, 0.05]")
    n = int(math.ceil((math.pi / 2) / resolution))
    return np.arange(n) * resolution


def _refined_samples(stack, half_space, theta, total, tol=GRID_TOL, max_rounds=200):
    """Refine the grid until the trapezoid rule integrates it to ``tol * total``.

    Thick stacks give narrow oscillations and square-root cusps at critical
    angles that a uniform grid cannot integrate to 1e-6.  Each cell's error
    is estimated from its midpoint; the worst cells are bisected until the
    summed estimate is within budget.  The estimate is the change from one
    to two trapezoid panels, about 3/4 of the one-panel error, so the
    returned cell endpoints integrate to within about ``1.4 * tol``.
    Returns (theta, unnormalized density).
    """
    def density(x):
        return far_field_density(stack, half_space, x)

    def cells(lx, rx, ly, ry):
        mx = (lx + rx) / 2
        my = density(mx)
        h = rx - lx
        return mx, my, np.abs(h * (ly + ry) / 2 - h * (ly + 2 * my + ry) / 4)

    y = density(theta)
    lx, rx, ly, ry = theta[:-1], theta[1:], y[:-1], y[1:]
    mx, my, err = cells(lx, rx, ly, ry)
    target = tol * total
    for _ in range(max_rounds):
        # cells at a cusp stop being split once they are this narrow
        splittable = (rx - lx) > MIN_CELL
        if err.sum() <= target or not splittable.any():
            break
        order = np.argsort(-np.where(splittable, err, -1.0), kind="stable")
        tail = np.cumsum(err[order][::-1])[::-1]  # error left if we stop before k
        k = max(1, int(np.count_nonzero(tail > target / 2)))
        split = np.zeros(err.size, dtype=bool)
        split[order[:k]] = splittable[order[:k]]
        keep = ~split
        nl = np.concatenate([lx[split], mx[split]])
        nr = np.concatenate([mx[split], rx[split]])
        nly = np.concatenate([ly[split], my[split]])
        nry = np.concatenate([my[split], ry[split]])
        nmx, nmy, nerr = cells(nl, nr, nly, nry)
        lx, rx = np.concatenate([lx[keep], nl]), np.concatenate([rx[keep], nr])
        ly, ry = np.concatenate([ly[keep], nly]), np.concatenate([ry[keep], nry])
        mx, my = np.concatenate([mx[keep], nmx]), np.concatenate([my[keep], nmy])
        err = np.concatenate([err[keep], nerr])
    else:
        raise NumericalAccuracyError(
            f"angle grid not resolved after {max_rounds} refinement rounds", float(err.sum() / total)
        )
    x = np.concatenate([lx, theta[-1:]])
    y = np.concatenate([ly, y[-1:]])
    order = np.argsort(x, kind="stable")
    return x[order], y[order]


def angular_density(
    stack: LayerStack, half_space: str, angle_grid_resolution: float = DEFAULT_RESOLUTION
) -> AngularSpectrum:
    """dP/dtheta normalized by the total emitted power.

    The grid has spacing ``angle_grid_resolution`` except where the density
    varies too fast for the trapezoid rule; there cells are bisected, so the
    trapezoid integral of the returned samples tracks the exact one.
    """
    check_stack(stack)
    lower, upper = _far_field_split(stack)
    total = lower + upper
    theta, density = _refined_samples(stack, half_space, angle_grid(angle_grid_resolution), total)
    density = density / total
    return AngularSpectrum(
        half_space=half_space,
        angles=theta,
        density=density,
        medium_index=_outer_index(stack, half_space),
    )


def spectra(stack: LayerStack, angle_grid_resolution: float = DEFAULT_RESOLUTION):
    """``(lower, upper)`` spectra of one stack."""
    return (
        angular_density(stack, "lower", angle_grid_resolution),
        angular_density(stack, "upper", angle_grid_resolution),
    )


def collection_efficiency(
    lower: AngularSpectrum, upper: AngularSpectrum, objective: ObjectiveGeometry
) -> float:
    """Fraction of the emitted power inside the objective's acceptance cone."""
    if lower.half_space != "lower" or upper.half_space != "upper":
        raise ValueError("expected a (lower, upper) spectrum pair")
    n1 = lower.medium_index
    if not math.isclose(objective.immersion_index, n1, rel_tol=1e-12):
        raise InvalidObjectiveError(
            f"objective immersion index {objective.immersion_index} != substrate index {n1}"
        )
    if objective.numerical_aperture >= n1:
        raise InvalidObjectiveError(f"NA {objective.numerical_aperture} >= n1 {n1}")
    eta = lower.integral(math.asin(objective.numerical_aperture / n1))
    return min(max(eta, 0.0), 1.0)


def efficiency(stack: LayerStack, objective: ObjectiveGeometry, rtol: float = RTOL) -> float:
    """Collection efficiency from adaptive quadrature, without an angle grid."""
    check_stack(stack)
    if not math.isclose(objective.immersion_index, stack.substrate.index, rel_tol=1e-12):
        raise InvalidObjectiveError(
            f"objective immersion index {objective.immersion_index} "
            f"!= substrate index {stack.substrate.index}"
        )
    if objective.numerical_aperture >= stack.substrate.index:
        raise InvalidObjectiveError(
            f"NA {objective.numerical_aperture} >= n1 {stack.substrate.index}"
        )
    lower, upper = _far_field_split(stack, rtol)
    cone = far_field_power(stack, "lower", objective.half_angle, rtol=rtol).value
    return cone / (lower + upper)


def find_lobes(spectrum: AngularSpectrum, min_prominence: float = 0.1):
    """Local maxima with prominence of at least ``min_prominence * max``.

    Returns ``[(angle_rad, density), ...]`` sorted by angle.
    """
    if not 0 < min_prominence < 1:
        raise ValueError("min_prominence must lie in (0, 1)")
    y = np.asarray(spectrum.density, dtype=float)
    if y.size == 0:
        raise ValueError("empty spectrum")
    peak = float(y.max())
    if peak <= 0:
        return []
    idx, _ = find_peaks(y, prominence=min_prominence * peak)
    return [(float(spectrum.angles[i]), float(y[i])) for i in idx]
