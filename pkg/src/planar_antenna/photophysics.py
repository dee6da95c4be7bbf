"""Three-level emitter dynamics and the photon-budget chain.

Levels: 1 ground, 2 excited singlet, 3 dark triplet.  Rates in 1/s,
times in s.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter1d
from scipy.optimize import least_squares
from scipy.signal import find_peaks
from scipy.special import erfc, erfcx

from . import kernels
from .errors import (
    AbsorbingTripletError,
    FitError,
    InsufficientDataError,
    LowContrastWarning,
    UndefinedEfficiencyError,
)

SLOW_TRIPLET_RATIO = 1e-2
BLOCK = 1 << 16


@dataclass(frozen=True)
class ThreeLevelRates:
    k12: float
    k21: float
    k23: float = 0.0
    k31: float = 0.0

    def __post_init__(self):
        for name in ("k12", "k21", "k23", "k31"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        if self.k21 <= 0:
            raise ValueError("k21 must be > 0")

    @property
    def singlet_rate(self) -> float:
        return self.k12 + self.k21

    def is_slow_triplet(self, ratio: float = SLOW_TRIPLET_RATIO) -> bool:
        s = self.singlet_rate
        return self.k23 < ratio * s and self.k31 < ratio * s


@dataclass(frozen=True)
class Populations:
    N1: float
    N2: float
    N3: float


def steady_state(rates: ThreeLevelRates) -> Populations:
    """Closed-form stationary populations of the three-level scheme."""
    k12, k21, k23, k31 = rates.k12, rates.k21, rates.k23, rates.k31
    if k23 == 0:
        n2 = on_time_excited_population(k12, k21)
        return Populations(1.0 - n2, n2, 0.0)
    if k31 == 0:
        raise AbsorbingTripletError("k23 > 0 with k31 = 0: the triplet is absorbing")
    d = k31 * (k21 + k23) + k12 * k31 + k12 * k23
    n2 = k12 * k31 / d
    n3 = k12 * k23 / d
    return Populations(1.0 - n2 - n3, n2, n3)


def on_time_excited_population(k12: float, k21: float) -> float:
    """Excited-state population of the two-level system, k12/(k12 + k21).

    This is the stationary solution of dN2/dt = k12*N1 - k21*N2.  It rises
    from 0 without pumping to 1 at saturation; the swapped ratio
    k21/(k12 + k21) would be the ground-state population instead.
    """
    if k21 <= 0:
        raise ValueError("k21 must be > 0")
    if k12 < 0:
        raise ValueError("k12 must be >= 0")
    if math.isinf(k12):
        return 1.0
    return k12 / (k12 + k21)


def g2_model(delay, rise_rate: float, contrast: float, irf_sigma: float = 0.0):
    """1 - contrast*exp(-rise_rate*|delay|), blurred by two Gaussian detectors.

    ``irf_sigma`` is the timing jitter of one detector; the coincidence
    response is Gaussian with width sqrt(2)*irf_sigma.
    """
    tau = np.abs(np.asarray(delay, dtype=float))
    g = float(rise_rate)
    s = math.sqrt(2.0) * abs(float(irf_sigma))
    if s == 0.0:
        return 1.0 - contrast * np.exp(-g * tau)
    root2s = math.sqrt(2.0) * s

    def branch(x, shift):
        # exp(g^2 s^2/2 + shift) * erfc(x), written to avoid overflow on either side
        direct = np.exp(g * g * s * s / 2.0 + shift) * erfc(x)
        scaled = np.exp(-tau * tau / (2.0 * s * s)) * erfcx(np.maximum(x, 0.0))
        return np.where(x >= 0.0, scaled, direct)

    x1 = (g * s * s - tau) / root2s
    x2 = (g * s * s + tau) / root2s
    with np.errstate(over="ignore", invalid="ignore"):
        conv = 0.5 * (branch(x1, -g * tau) + branch(x2, g * tau))
    return 1.0 - contrast * conv


@dataclass(frozen=True)
class G2Curve:
    delays: np.ndarray
    values: np.ndarray
    counts: np.ndarray | None = None


@dataclass(frozen=True)
class G2Fit:
    rise_rate: float
    contrast: float
    irf_sigma: float
    residual_norm: float
    iterations: int = 0


def _initial_rise_rate(delays, values):
    dip = 1.0 - values
    depth = dip.max()
    if depth <= 0:
        return 10.0 / (np.ptp(delays) or 1.0)
    centre = delays[np.argmax(dip)]
    rel = np.abs(delays - centre)
    beyond = rel[dip < depth / math.e]
    beyond = beyond[beyond > 0]
    if beyond.size == 0:
        return 10.0 / (np.ptp(delays) or 1.0)
    return 1.0 / beyond.min()


def fit_g2(curve: G2Curve, irf_sigma_fixed: float | None = None, max_iterations: int = 500) -> G2Fit:
    """Least-squares fit of :func:`g2_model`.

    With ``irf_sigma_fixed=None`` the detector width is a free parameter.
    Delays are rescaled by the initial rise time so that all fit parameters
    are of order one.
    """
    x = np.asarray(curve.delays, dtype=float)
    y = np.asarray(curve.values, dtype=float)
    if x.size < 10:
        raise InsufficientDataError("need at least 10 bins to fit g2")
    if y.min() > 0.9:
        warnings.warn(
            f"g2 dip minimum {y.min():.3f} > 0.9: low-contrast antibunching", LowContrastWarning
        )
    g0 = _initial_rise_rate(x, y)
    scale = 1.0 / g0
    xs = x / scale
    c0 = float(np.clip(1.0 - y.min(), 0.0, 1.0))
    free_sigma = irf_sigma_fixed is None

    def unpack(p):
        sigma = p[2] * scale if free_sigma else irf_sigma_fixed
        return p[0] * g0, p[1], sigma

    def resid(p):
        sigma = p[2] if free_sigma else irf_sigma_fixed / scale
        return g2_model(xs, p[0], p[1], sigma) - y

    p0 = [1.0, min(c0, 0.999)] + ([0.05] if free_sigma else [])
    lower = [1e-6, 0.0] + ([0.0] if free_sigma else [])
    upper = [np.inf, 1.0] + ([np.inf] if free_sigma else [])
    res = least_squares(
        resid, p0, bounds=(lower, upper), method="trf", x_scale=1.0,
        xtol=1e-9, ftol=1e-12, gtol=1e-12, max_nfev=max_iterations,
    )
    rate, contrast, sigma = unpack(res.x)
    if res.status <= 0 or not np.all(np.isfinite(res.x)):
        raise FitError(f"g2 fit did not converge: {res.message}", last_iterate=(rate, contrast, sigma))
    return G2Fit(
        rise_rate=float(rate),
        contrast=float(contrast),
        irf_sigma=float(sigma),
        residual_norm=float(np.linalg.norm(res.fun)),
        iterations=int(res.nfev),
    )


@dataclass(frozen=True)
class Trajectory:
    """Detected photon times plus the time spent in each level."""

    timestamps: np.ndarray
    occupancy: np.ndarray
    duration: float

    @property
    def state_fractions(self) -> np.ndarray:
        return self.occupancy / self.duration


def simulate_trajectory(
    rates: ThreeLevelRates,
    detection_prob: float,
    duration: float,
    seed: int,
    backend: str | None = None,
) -> Trajectory:
    """Exact stochastic simulation of the level scheme, starting in level 1.

    Random numbers come from numpy's counter-based Philox generator seeded
    with ``seed``; exponential and uniform variates are drawn in fixed-size
    blocks so the compiled and pure-Python kernels consume identical streams.
    """
    if not (0 < detection_prob <= 1):
        raise ValueError("detection_prob must lie in (0, 1]")
    if not duration > 0:
        raise ValueError("duration must be > 0")
    kern = kernels.load(backend)
    rng = np.random.Generator(np.random.Philox(int(seed)))
    expo = rng.standard_exponential(BLOCK)
    unif = rng.random(BLOCK)
    i = j = 0
    out = np.empty(BLOCK)
    occupancy = np.zeros(3)
    chunks = []
    t, state = 0.0, 1
    while True:
        t, state, di, dj, n, done = kern.simulate_chunk(
            t, state, float(duration), rates.k12, rates.k21, rates.k23, rates.k31,
            float(detection_prob), expo[i:], unif[j:], out, occupancy,
        )
        i += di
        j += dj
        if n:
            chunks.append(out[:n].copy())
        if done:
            break
        if i >= BLOCK:
            expo = rng.standard_exponential(BLOCK)
            i = 0
        if j + 2 > BLOCK:
            unif = rng.random(BLOCK)
            j = 0
    stamps = np.concatenate(chunks) if chunks else np.empty(0)
    return Trajectory(stamps, occupancy, float(duration))


def simulate_photon_stream(rates, detection_prob, duration, seed, backend=None) -> np.ndarray:
    """Detected photon arrival times in seconds, strictly increasing."""
    return simulate_trajectory(rates, detection_prob, duration, seed, backend).timestamps


def estimate_g2(
    stream,
    bin_width: float,
    max_delay: float,
    duration: float | None = None,
    backend: str | None = None,
) -> G2Curve:
    """Full pair-correlation histogram, normalized to 1 for uncorrelated light.

    Bins are centred on multiples of ``bin_width``; every ordered pair of
    distinct photons within ``max_delay`` contributes at +dt and -dt.  The
    uncorrelated expectation per bin is rate^2 * bin_width * duration, with
    the duration taken from the first and last photon unless given.
    """
    t = np.ascontiguousarray(stream, dtype=float)
    if t.size < 1000:
        raise InsufficientDataError(f"need at least 1000 photons, got {t.size}")
    if not bin_width > 0:
        raise ValueError("bin_width must be > 0")
    if max_delay < 10 * bin_width:
        raise ValueError("max_delay must be at least 10 bin widths")
    if duration is None:
        duration = float(t[-1] - t[0])
    half = int(math.floor(max_delay / bin_width + 1e-9))
    counts = kernels.load(backend).pair_histogram(t, float(bin_width), half)
    rate = t.size / duration
    expected = rate * rate * bin_width * duration
    delays = np.arange(-half, half + 1) * bin_width
    return G2Curve(delays=delays, values=counts / expected, counts=counts)


@dataclass(frozen=True)
class TimeTrace:
    bin_width: float
    counts: np.ndarray

    def __post_init__(self):
        if not self.bin_width > 0:
            raise ValueError("bin_width must be > 0")

    @classmethod
    def from_stream(cls, stream, bin_width: float, duration: float) -> "TimeTrace":
        n = int(math.floor(duration / bin_width))
        counts = np.bincount(
            np.floor(np.asarray(stream) / bin_width).astype(np.int64), minlength=n
        )[:n]
        return cls(bin_width, counts)


def valley_threshold(counts, smoothing: float = 2.0) -> float:
    """Count level at the minimum between the dark and bright histogram modes."""
    counts = np.asarray(counts, dtype=np.int64)
    hist = np.bincount(counts).astype(float)
    if hist.size < 3:
        return 0.0
    smooth = gaussian_filter1d(hist, smoothing, mode="constant")
    peaks, props = find_peaks(np.concatenate([[0.0], smooth, [0.0]]), prominence=0)
    peaks = peaks - 1
    if peaks.size < 2:
        return 0.0
    # the bright mode is the most prominent, the dark mode the lowest-count one
    bright = peaks[np.argmax(props["prominences"])]
    dark = peaks.min()
    if dark >= bright:
        return 0.0
    return float(dark + np.argmin(smooth[dark:bright + 1]))


def off_time_fraction(trace: TimeTrace, threshold: float | None = None) -> float:
    """Fraction of bins with counts at or below ``threshold``.

    Without a threshold, the valley of the smoothed count histogram is used.
    """
    counts = np.asarray(trace.counts)
    if counts.size == 0:
        raise ValueError("empty time trace")
    if threshold is None:
        threshold = valley_threshold(counts)
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    return float(np.count_nonzero(counts <= threshold)) / counts.size


@dataclass(frozen=True)
class PhotonBudget:
    S_de: float
    eta_det: float
    S_co: float
    N2_on: float
    k21: float
    off_fraction: float
    S_em: float
    eta: float

    def check(self, rtol: float = 1e-9) -> None:
        for lhs, rhs, what in (
            (self.S_co, self.S_de / self.eta_det, "S_co = S_de/eta_det"),
            (self.S_em, self.N2_on * self.k21 * (1 - self.off_fraction), "S_em = N2_on*k21*(1-off)"),
            (self.eta, self.S_co / self.S_em, "eta = S_co/S_em"),
        ):
            if not math.isclose(lhs, rhs, rel_tol=rtol, abs_tol=0.0):
                raise AssertionError(f"budget identity violated: {what}")


def photon_budget(S_de, eta_det, N2_on, k21, off_fraction) -> PhotonBudget:
    if S_de < 0 or k21 < 0:
        raise ValueError("S_de and k21 must be >= 0")
    if not 0 < eta_det <= 1:
        raise ValueError("eta_det must lie in (0, 1]")
    if not 0 <= N2_on <= 1:
        raise ValueError("N2_on must lie in [0, 1]")
    if not 0 <= off_fraction < 1:
        raise ValueError("off_fraction must lie in [0, 1)")
    S_co = S_de / eta_det
    S_em = N2_on * k21 * (1.0 - off_fraction)
    if S_em == 0:
        raise UndefinedEfficiencyError("emitted rate is zero; efficiency undefined")
    budget = PhotonBudget(S_de, eta_det, S_co, N2_on, k21, off_fraction, S_em, S_co / S_em)
    budget.check()
    return budget


def saturation_detected_rate(power, excitation_coeff, k21, chain_eff, off_fraction_at_power=None):
    """Detected count rate at excitation ``power`` (mW).

    ``off_fraction_at_power`` maps power to the dark-time fraction; a
    constant may be passed instead of a callable.
    """
    if power < 0:
        raise ValueError("power must be >= 0")
    if not excitation_coeff > 0:
        raise ValueError("excitation_coeff must be > 0")
    if off_fraction_at_power is None:
        off = 0.0
    elif callable(off_fraction_at_power):
        off = off_fraction_at_power(power)
    else:
        off = float(off_fraction_at_power)
    n2 = on_time_excited_population(excitation_coeff * power, k21)
    return chain_eff * k21 * n2 * (1.0 - off)
