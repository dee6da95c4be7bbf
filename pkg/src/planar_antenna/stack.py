"""Planar multilayer primitives for a vertical dipole.

Conventions: time dependence exp(-i*omega*t), phases accumulate as
exp(+i*kz*d), and ``Im(kz) >= 0`` on every branch.  Reflection and
transmission amplitudes refer to the tangential magnetic field of the
p-polarized wave, which is the only polarization a vertical dipole emits.
Lengths are in nm, wavenumbers in 1/nm.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidPlaneWaveError, StackValidationError

DEGENERATE_DENOMINATOR = 1e-300


@dataclass(frozen=True)
class Layer:
    thickness: float
    index: float


@dataclass(frozen=True)
class HalfSpace:
    index: float


@dataclass(frozen=True)
class LayerStack:
    """Substrate, finite layers listed bottom to top, superstrate.

    ``emitter_height`` is measured from the bottom boundary of layer
    ``emitter_layer``.
    """

    substrate: HalfSpace
    layers: tuple[Layer, ...]
    superstrate: HalfSpace
    emitter_layer: int
    emitter_height: float
    wavelength: float = 580.0

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))

    @property
    def k0(self) -> float:
        return 2.0 * math.pi / self.wavelength

    @property
    def emitter_index(self) -> float:
        return self.layers[self.emitter_layer].index

    @property
    def indices(self) -> tuple[float, ...]:
        """Region indices from substrate to superstrate."""
        return (self.substrate.index, *(l.index for l in self.layers), self.superstrate.index)

    def reversed(self) -> "LayerStack":
        """The same structure seen upside down."""
        e = len(self.layers) - 1 - self.emitter_layer
        d = self.layers[self.emitter_layer].thickness
        return LayerStack(
            substrate=self.superstrate,
            layers=tuple(reversed(self.layers)),
            superstrate=self.substrate,
            emitter_layer=e,
            emitter_height=d - self.emitter_height,
            wavelength=self.wavelength,
        )

    def with_geometry(self, **changes) -> "LayerStack":
        return replace(self, **changes)


@dataclass(frozen=True)
class PlaneWaveState:
    k_parallel: float
    kz_per_region: tuple[complex, ...] = field(default=())


def kz(index, k_parallel, k0):
    """Out-of-plane wavenumber sqrt((k0*n)^2 - kp^2) with Im >= 0.

    Works elementwise on arrays.  The argument of the square root is built
    with a +0 imaginary part so numpy's principal branch lands on Im >= 0
    for evanescent waves and Re >= 0 for propagating ones.
    """
    index = np.asarray(index, dtype=float)
    kp = np.asarray(k_parallel, dtype=float)
    out = np.sqrt(np.asarray((k0 * index) ** 2 - kp**2, dtype=complex))
    if out.ndim == 0:
        return complex(out)
    return out


def kz_at_angle(index, ref_index, cos_theta, k0):
    """kz in ``index`` for a wave at polar angle theta in ``ref_index``.

    Same value and branch as :func:`kz` at kp = k0*ref_index*sin(theta),
    but written as (n^2 - n_ref^2) + (n_ref cos)^2 so that it keeps full
    precision near grazing incidence.
    """
    arg = (np.square(index) - np.square(ref_index)) + np.square(ref_index * cos_theta)
    out = k0 * np.sqrt(np.asarray(arg, dtype=complex))
    if out.ndim == 0:
        return complex(out)
    return out


def plane_wave_state(stack: LayerStack, k_parallel: float) -> PlaneWaveState:
    k0 = stack.k0
    return PlaneWaveState(
        k_parallel=float(k_parallel),
        kz_per_region=tuple(kz(n, k_parallel, k0) for n in stack.indices),
    )


def fresnel_p(n_i, n_j, kz_i, kz_j):
    """p-polarized (magnetic field) interface coefficients from i into j.

    Returns ``(r, t)`` with ``t = 1 + r``.  The transmitted z-flux is
    ``Re(kz_j * n_i**2 / (kz_i * n_j**2)) * |t|**2`` of the incident one.
    """
    ei = np.square(n_i)
    ej = np.square(n_j)
    num = ej * kz_i - ei * kz_j
    den = ej * kz_i + ei * kz_j
    if np.any(np.abs(den) < DEGENERATE_DENOMINATOR):
        raise InvalidPlaneWaveError(
            "degenerate Fresnel denominator: invalid plane-wave state"
        )
    r = num / den
    t = 2.0 * ej * kz_i / den
    return r, t


def _side_regions(stack: LayerStack, side: str):
    """Indices and thicknesses walking outward from the emitter layer.

    Returns ``(indices, thicknesses, gap)``: ``indices[0]`` is the emitter
    layer and ``indices[-1]`` the bounding half-space; ``thicknesses`` holds
    the intermediate layers in the same order; ``gap`` is the distance from
    the emitter plane to the first interface.
    """
    e = stack.emitter_layer
    layer = stack.layers[e]
    if side == "down":
        inner = stack.layers[:e][::-1]
        outer = stack.substrate.index
        gap = stack.emitter_height
    elif side == "up":
        inner = stack.layers[e + 1:]
        outer = stack.superstrate.index
        gap = layer.thickness - stack.emitter_height
    else:
        raise ValueError(f"side must be 'up' or 'down', got {side!r}")
    indices = [layer.index, *(l.index for l in inner), outer]
    thicknesses = [l.thickness for l in inner]
    return indices, thicknesses, gap


def side_coefficients(stack: LayerStack, side: str, k_parallel, angle_ref=None):
    """Reflection and transmission of one side, referenced to the emitter plane.

    ``angle_ref=(n_ref, cos_theta)`` evaluates every kz through
    :func:`kz_at_angle` instead of from ``k_parallel``; far-field callers
    use it to stay accurate near grazing angles.

    Returns ``(R, T, kz_outer)`` where ``R`` is the ratio of the returning
    to the outgoing wave at the emitter plane and ``T`` the amplitude in the
    bounding half-space per unit outgoing amplitude at the emitter plane.
    """
    kp = np.asarray(k_parallel, dtype=float)
    k0 = stack.k0
    indices, thicknesses, gap = _side_regions(stack, side)
    if angle_ref is None:
        kzs = [kz(n, kp, k0) for n in indices]
    else:
        kzs = [kz_at_angle(n, angle_ref[0], angle_ref[1], k0) for n in indices]

    # outermost interface first, then fold each layer in
    r, t = fresnel_p(indices[-2], indices[-1], kzs[-2], kzs[-1])
    for m in range(len(indices) - 3, -1, -1):
        phase = np.exp(1j * kzs[m + 1] * thicknesses[m])
        rn, tn = fresnel_p(indices[m], indices[m + 1], kzs[m], kzs[m + 1])
        rf = r * phase * phase
        den = 1.0 + rn * rf
        r = (rn + rf) / den
        t = tn * t * phase / den
    prop = np.exp(1j * kzs[0] * gap)
    return r * prop * prop, t * prop, kzs[-1]


def effective_reflection(stack: LayerStack, side: str, k_parallel):
    """Net p-reflection of everything on ``side`` seen from the emitter plane."""
    return side_coefficients(stack, side, k_parallel)[0]


def validate_stack(stack: LayerStack) -> list[str]:
    """Every violated LayerStack invariant; an empty list means valid."""
    problems = []

    def check_index(name, n):
        if isinstance(n, complex) or np.iscomplexobj(n):
            problems.append(f"{name}: complex index not supported (lossless layers only)")
            return
        if not math.isfinite(n):
            problems.append(f"{name}: non-finite index")
        elif n < 1.0:
            problems.append(f"{name}: index {n} below 1")

    check_index("substrate", stack.substrate.index)
    check_index("superstrate", stack.superstrate.index)
    if not stack.layers:
        problems.append("stack has no finite layers")
    for i, layer in enumerate(stack.layers):
        check_index(f"layer {i}", layer.index)
        d = layer.thickness
        if not math.isfinite(d):
            problems.append(f"layer {i}: non-finite thickness")
        elif d <= 0:
            problems.append(f"layer {i}: non-positive thickness {d}")
    if not (math.isfinite(stack.wavelength) and stack.wavelength > 0):
        problems.append(f"non-positive wavelength {stack.wavelength}")
    if not 0 <= stack.emitter_layer < len(stack.layers):
        problems.append(f"emitter_layer {stack.emitter_layer} out of range")
    else:
        d = stack.layers[stack.emitter_layer].thickness
        h = stack.emitter_height
        if not (0 < h < d):
            problems.append(
                f"emitter outside its layer (height {h} nm, layer thickness {d} nm)"
            )
    return problems


def check_stack(stack: LayerStack) -> LayerStack:
    problems = validate_stack(stack)
    if problems:
        raise StackValidationError(problems)
    return stack


def three_layer_stack(
    t: float = 350.0,
    h: float = 200.0,
    n1: float = 1.78,
    n2: float = 1.50,
    n3: float = 1.0,
    wavelength: float = 580.0,
    film_thickness: float | None = None,
    film_index: float = 1.7,
) -> LayerStack:
    """Substrate / middle layer of thickness t / superstrate, emitter at h.

    With ``film_thickness`` the emitter sits at the centre of a thin film of
    index ``film_index`` embedded in the middle layer (index 1.7 is an
    assumed value for p-terphenyl).
    """
    if film_thickness is None or film_thickness <= 0:
        layers = (Layer(t, n2),)
        return LayerStack(HalfSpace(n1), layers, HalfSpace(n3), 0, h, wavelength)
    half = film_thickness / 2.0
    layers = (
        Layer(h - half, n2),
        Layer(film_thickness, film_index),
        Layer(t - h - half, n2),
    )
    return LayerStack(HalfSpace(n1), layers, HalfSpace(n3), 1, half, wavelength)


def interface_stack(
    n_substrate: float = 1.78,
    n_emitter: float = 1.0,
    distance: float = 5.0,
    wavelength: float = 580.0,
) -> LayerStack:
    """Emitter at ``distance`` above a single interface.

    The emitter medium is represented as a finite layer matching the
    superstrate, so the upper side has no reflection.
    """
    layer = Layer(2.0 * distance + 100.0, n_emitter)
    return LayerStack(
        HalfSpace(n_substrate), (layer,), HalfSpace(n_emitter), 0, distance, wavelength
    )


def homogeneous_stack(index: float = 1.5, wavelength: float = 580.0) -> LayerStack:
    layer = Layer(200.0, index)
    return LayerStack(HalfSpace(index), (layer,), HalfSpace(index), 0, 100.0, wavelength)
