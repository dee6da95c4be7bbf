"""Back-focal-plane intensity of the collected emission.

An ideal aplanatic objective at unit focal length maps the substrate angle
theta to the pupil radius rho = n1*sin(theta), in NA units.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.signal import find_peaks

from .emission import AngularSpectrum, ObjectiveGeometry
from .errors import ContractError, CoverageError

FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))
KERNEL_HALF_WIDTH = 8.0  # in sigmas


@dataclass(frozen=True)
class BfpProfile:
    na_coordinate: np.ndarray
    intensity: np.ndarray
    smoothed: bool
    n1: float

    @property
    def theta(self) -> np.ndarray:
        return np.arcsin(np.clip(self.na_coordinate / self.n1, 0.0, 1.0))

    def angular_density(self) -> np.ndarray:
        """dP/dtheta recovered from the areal intensity."""
        th = self.theta
        return self.intensity * 2.0 * math.pi * self.n1**2 * np.sin(th) * np.cos(th)

    def energy(self) -> float:
        """Trapezoid estimate of the integral of I * 2*pi*rho d(rho)."""
        rho = self.na_coordinate
        return float(np.trapezoid(self.intensity * 2.0 * math.pi * rho, rho))


@dataclass(frozen=True)
class BfpImage:
    pixels: np.ndarray
    pixel_pitch: float
    center: tuple[float, float]

    def energy(self) -> float:
        return float(self.pixels.sum() * self.pixel_pitch**2)


def _intensity_from_density(theta, density, n1):
    s, c = np.sin(theta), np.cos(theta)
    with np.errstate(divide="ignore", invalid="ignore"):
        intensity = density / (2.0 * math.pi * n1**2 * s * c)
    axis = s == 0
    if np.any(axis):
        # dP/dtheta ~ theta^3 on axis, so the areal intensity tends to zero
        # like theta^2; extrapolate from the next two samples
        ok = np.flatnonzero(~axis)[:2]
        if ok.size == 2:
            x0, x1 = theta[ok]
            y0, y1 = intensity[ok]
            ext = y0 + (y1 - y0) * (theta[axis] - x0) / (x1 - x0)
            intensity[axis] = np.maximum(ext, 0.0)
        else:
            intensity[axis] = 0.0
    return intensity


def bfp_profile(lower: AngularSpectrum, objective: ObjectiveGeometry) -> BfpProfile:
    """Unsmoothed BFP intensity versus NA coordinate, out to the objective NA."""
    n1 = lower.medium_index
    th_max = math.asin(objective.numerical_aperture / n1)
    angles = np.asarray(lower.angles)
    if angles.size == 0 or angles[0] > 0 or angles[-1] < th_max:
        raise CoverageError(
            f"spectrum covers [{angles.min() if angles.size else 'nan'}, "
            f"{angles.max() if angles.size else 'nan'}] rad, need [0, {th_max}]"
        )
    keep = angles < th_max
    theta = np.append(angles[keep], th_max)
    density = np.append(lower.density[keep], np.interp(th_max, angles, lower.density))
    intensity = _intensity_from_density(theta, density, n1)
    return BfpProfile(n1 * np.sin(theta), intensity, False, n1)


def _trapezoid_weights(x):
    w = np.zeros_like(x)
    dx = np.diff(x)
    w[:-1] += dx / 2
    w[1:] += dx / 2
    return w


def smooth_angular(theta, density, fwhm_radians):
    """Energy-conserving Gaussian blur of dP/dtheta on a sorted grid.

    Each source sample spreads its trapezoid-weighted mass over the grid and
    that spread is renormalized to the part of the kernel inside the grid,
    so the trapezoid integral is preserved exactly.
    """
    theta = np.asarray(theta, dtype=float)
    f = np.asarray(density, dtype=float)
    n = theta.size
    sigma = fwhm_radians * FWHM_TO_SIGMA
    w = _trapezoid_weights(theta)
    # grids may be locally refined, so count neighbours rather than divide
    # the window by a step
    window = KERNEL_HALF_WIDTH * sigma
    ahead = np.searchsorted(theta, theta + window, side="right") - np.arange(n)
    reach = int(min(n - 1, ahead.max()))

    def kernel(m):
        # g(theta[i+m] - theta[i]) for every i where i+m is on the grid
        src = np.arange(max(0, -m), min(n, n - m))
        return src, np.exp(-0.5 * ((theta[src + m] - theta[src]) / sigma) ** 2)

    norm = np.zeros(n)
    for m in range(-reach, reach + 1):
        src, g = kernel(m)
        norm[src] += g * w[src + m]
    out = np.zeros(n)
    mass = w * f / norm
    for m in range(-reach, reach + 1):
        src, g = kernel(m)
        out[src + m] += mass[src] * g
    return out


def apply_resolution(profile: BfpProfile, fwhm_degrees: float = 2.0, n1: float | None = None) -> BfpProfile:
    """Blur by a Gaussian of the given angular FWHM, applied versus theta."""
    if profile.smoothed:
        raise ContractError("profile has already been smoothed")
    if not fwhm_degrees > 0:
        raise ValueError("fwhm must be > 0")
    n1 = profile.n1 if n1 is None else n1
    if not math.isclose(n1, profile.n1, rel_tol=1e-12):
        raise ValueError(f"n1 {n1} does not match the profile's {profile.n1}")
    theta = profile.theta
    density = smooth_angular(theta, profile.angular_density(), math.radians(fwhm_degrees))
    intensity = _intensity_from_density(theta, density, n1)
    return BfpProfile(profile.na_coordinate.copy(), intensity, True, n1)


def profile_lobes(profile: BfpProfile, min_prominence: float = 0.1):
    """Maxima of the BFP intensity as ``[(na, intensity), ...]``."""
    y = profile.intensity
    peak = float(y.max()) if y.size else 0.0
    if peak <= 0:
        return []
    idx, _ = find_peaks(y, prominence=min_prominence * peak)
    return [(float(profile.na_coordinate[i]), float(y[i])) for i in idx]


def render_image(profile: BfpProfile, pixels_across: int = 512) -> BfpImage:
    """Rasterize I(rho) on a square grid spanning [-NA, NA]^2."""
    if pixels_across < 16 or pixels_across % 2:
        raise ValueError("pixels_across must be even and >= 16")
    rho = profile.na_coordinate
    na = float(rho[-1])
    pitch = 2.0 * na / pixels_across
    coord = (np.arange(pixels_across) + 0.5 - pixels_across / 2) * pitch
    r = np.hypot(coord[None, :], coord[:, None])
    inside = r <= na
    pixels = np.zeros_like(r)
    if np.any(profile.intensity):
        interp = PchipInterpolator(rho, profile.intensity, extrapolate=False)
        pixels[inside] = np.nan_to_num(interp(r[inside]), nan=0.0)
    np.maximum(pixels, 0.0, out=pixels)
    c = pixels_across / 2 - 0.5
    return BfpImage(pixels, pitch, (c, c))
