"""CSV, PGM and manifest serialization.

CSV files carry one header row, comma separators and 12 significant digits
for floats (photon timestamps get 15).  Angles in files are in degrees.
"""
from __future__ import annotations

import csv
import hashlib
import io
import math
import os
from pathlib import Path

import numpy as np

from .emission import AngularSpectrum
from .photophysics import G2Curve

MANIFEST = "MANIFEST.sha256"


def fmt(value, digits: int = 12) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    return f"{float(value):.{digits}g}"


def csv_bytes(header, rows, digits: int = 12) -> bytes:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v, digits) for v in row) + "\n")
    return buf.getvalue().encode("ascii")


def keyvalue_bytes(pairs) -> bytes:
    return "".join(f"{k} = {fmt(v)}\n" for k, v in pairs).encode("ascii")


def spectrum_csv(*spectra: AngularSpectrum) -> bytes:
    rows = []
    for sp in spectra:
        rows.extend(
            (math.degrees(a), d, sp.half_space) for a, d in zip(sp.angles, sp.density)
        )
    return csv_bytes(("theta_deg", "dP_dtheta", "halfspace"), rows)


def read_spectrum_csv(path, lower_index: float, upper_index: float = 1.0):
    """Rebuild ``{half_space: AngularSpectrum}`` from a pattern CSV.

    ``dP_dtheta`` stays per radian; only the angle column is in degrees.
    """
    cols = {"lower": ([], []), "upper": ([], [])}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["theta_deg", "dP_dtheta", "halfspace"]:
            raise ValueError(f"{path}: unexpected header {header}")
        for row in reader:
            a, d, side = row
            cols[side][0].append(math.radians(float(a)))
            cols[side][1].append(float(d))
    index = {"lower": lower_index, "upper": upper_index}
    return {
        side: AngularSpectrum(side, np.array(a), np.array(d), index[side])
        for side, (a, d) in cols.items()
        if a
    }


def map_csv(emap) -> bytes:
    return csv_bytes(("t_nm", "h_nm", "eta", "valid"), emap.rows())


def profile_csv(profile) -> bytes:
    rows = zip(profile.na_coordinate, np.degrees(profile.theta), profile.intensity)
    return csv_bytes(("na", "theta_deg", "intensity"), rows)


def stream_csv(timestamps) -> bytes:
    return csv_bytes(("t_s",), ((t,) for t in timestamps), digits=15)


def read_stream_csv(path) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=1)
    return np.asarray(data, dtype=float)


def g2_csv(curve: G2Curve) -> bytes:
    return csv_bytes(("delay_s", "g2"), zip(curve.delays, curve.values))


def read_g2_csv(path) -> G2Curve:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != 2:
        raise ValueError(f"{path}: expected two columns (delay_s, g2)")
    return G2Curve(delays=data[:, 0], values=data[:, 1])


def trace_csv(trace) -> bytes:
    t = np.arange(trace.counts.size) * trace.bin_width
    return csv_bytes(("t_s", "counts"), zip(t, trace.counts))


def pgm_bytes(image, bit_depth: int = 16) -> bytes:
    """Binary P5 graymap, max-normalized; 16-bit samples are big-endian."""
    if bit_depth not in (8, 16):
        raise ValueError("bit_depth must be 8 or 16")
    px = np.asarray(image.pixels, dtype=float)
    top = (1 << bit_depth) - 1
    peak = px.max()
    scaled = np.zeros_like(px) if peak <= 0 else np.rint(px / peak * top)
    dtype = ">u2" if bit_depth == 16 else "u1"
    h, w = px.shape
    return f"P5\n{w} {h}\n{top}\n".encode("ascii") + scaled.astype(dtype).tobytes()


def read_pgm(data: bytes) -> np.ndarray:
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    w, h = map(int, parts[1].split())
    top = int(parts[2])
    dtype = ">u2" if top > 255 else "u1"
    return np.frombuffer(parts[3], dtype=dtype).reshape(h, w)


def write_outputs(artifacts, output_dir) -> dict:
    """Write ``[(filename, bytes), ...]`` plus a sha256 manifest.

    Returns ``{filename: sha256}`` for the artifacts (not the manifest).
    """
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    digests = {}
    for name, content in artifacts:
        if os.path.basename(name) != name or name == MANIFEST:
            raise ValueError(f"invalid artifact name {name!r}")
        (out / name).write_bytes(content)
        digests[name] = hashlib.sha256(content).hexdigest()
    manifest = "".join(f"{digests[n]}  {n}\n" for n in sorted(digests))
    (out / MANIFEST).write_bytes(manifest.encode("ascii"))
    return digests
