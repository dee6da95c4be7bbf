"""``antenna`` command-line front end.

    antenna <command> [--config FILE] [--key value]...

Configuration files are flat ``key = value`` text; command-line flags
override them.  Exit codes: 0 success, 2 parse error, 3 validation error,
4 computation error, 5 I/O error.
"""
from __future__ import annotations

import argparse
import configparser
import math
import sys
from dataclasses import dataclass, field

from . import bfp, design, emission, outputs, photophysics
from .errors import AntennaError
from .stack import check_stack, validate_stack

COMMANDS = ("pattern", "map", "optimize", "bfp", "photo-sim", "photo-fit", "budget")

EXIT_OK, EXIT_PARSE, EXIT_VALIDATION, EXIT_MODULE, EXIT_IO = 0, 2, 3, 4, 5


def _opt_float(text):
    text = text.strip().lower()
    if text in ("", "none", "free"):
        return None
    return float(text)


# key -> (type, default)
KEYS = {
    "n1": (float, 1.78),
    "n2": (float, 1.50),
    "n3": (float, 1.0),
    "t": (float, 350.0),
    "h": (float, 200.0),
    "wavelength": (float, 580.0),
    "na": (float, 1.65),
    "immersion_index": (_opt_float, None),
    "film_thickness": (float, 0.0),
    "film_index": (float, 1.7),
    "resolution_deg": (float, math.degrees(emission.DEFAULT_RESOLUTION)),
    "output_dir": (str, "antenna_out"),
    "t_min": (float, 100.0),
    "t_max": (float, 800.0),
    "t_steps": (int, 29),
    "h_min": (float, 50.0),
    "h_max": (float, 750.0),
    "h_steps": (int, 29),
    "tolerance": (float, 0.5),
    "coarse_steps": (int, 15),
    "fwhm_deg": (float, 2.0),
    "pixels": (int, 512),
    "bit_depth": (int, 16),
    "input": (str, ""),
    "k12": (float, 0.5 * 1.26e8),
    "k21": (float, 1.26e8),
    "k23": (float, 0.0),
    "k31": (float, 0.0),
    "detection_prob": (float, 1.0),
    "duration": (float, 0.01),
    "seed": (int, 42),
    "irf_sigma": (_opt_float, None),
    "s_de": (float, 4.9e7),
    "eta_det": (float, 0.518),
    "n2_on": (float, 0.82),
    "off_fraction": (float, 0.05),
}


class ConfigError(Exception):
    def __init__(self, message, exit_code):
        super().__init__(message)
        self.exit_code = exit_code


@dataclass
class RunConfig:
    command: str
    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    @property
    def immersion_index(self) -> float:
        n = self.values["immersion_index"]
        return self.values["n1"] if n is None else n

    def template(self) -> design.StackTemplate:
        v = self.values
        film = v["film_thickness"] if v["film_thickness"] > 0 else None
        return design.StackTemplate(v["n1"], v["n2"], v["n3"], v["wavelength"], film, v["film_index"])

    def stack(self):
        return self.template().build(self.values["t"], self.values["h"])

    def objective(self) -> emission.ObjectiveGeometry:
        return emission.ObjectiveGeometry(self.values["na"], self.immersion_index)


def _read_file(path) -> dict:
    parser = configparser.ConfigParser(
        interpolation=None, comment_prefixes=("#", ";"), inline_comment_prefixes=("#",)
    )
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_string("[run]\n" + fh.read(), source=str(path))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}", EXIT_PARSE) from exc
    except configparser.Error as exc:
        raise ConfigError(f"config {path}: {exc}", EXIT_PARSE) from exc
    if len(parser.sections()) != 1:
        raise ConfigError(f"config {path}: sections are not supported", EXIT_PARSE)
    return dict(parser["run"])


def _parse_flags(tokens) -> dict:
    flags = {}
    it = iter(tokens)
    for tok in it:
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}", EXIT_PARSE)
        key = tok[2:]
        if "=" in key:
            key, value = key.split("=", 1)
        else:
            try:
                value = next(it)
            except StopIteration:
                raise ConfigError(f"flag --{key} needs a value", EXIT_PARSE) from None
        flags[key.replace("-", "_")] = value
    return flags


def parse_config(command: str, config_path=None, flags=None) -> RunConfig:
    """Merge defaults, file and flags into a validated RunConfig.

    Raises ConfigError carrying exit status 2 (parse) or 3 (validation).
    """
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}; expected one of {', '.join(COMMANDS)}", EXIT_PARSE)
    raw = {}
    if config_path:
        raw.update(_read_file(config_path))
    raw.update(flags or {})
    values = {k: default for k, (_, default) in KEYS.items()}
    for key, text in raw.items():
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}", EXIT_PARSE)
        conv = KEYS[key][0]
        try:
            values[key] = conv(text) if isinstance(text, str) else text
        except ValueError:
            raise ConfigError(f"key {key!r}: cannot parse {text!r}", EXIT_PARSE) from None
    config = RunConfig(command, values)
    _validate(config)
    return config


def _fail(key, message):
    raise ConfigError(f"invalid {key}: {message}", EXIT_VALIDATION)


def _validate(cfg: RunConfig) -> None:
    v = cfg.values
    cmd = cfg.command
    for key in ("n1", "n2", "n3", "film_index"):
        if not (math.isfinite(v[key]) and v[key] >= 1.0):
            _fail(key, f"refractive index must be >= 1, got {v[key]}")
    if not v["wavelength"] > 0:
        _fail("wavelength", "must be > 0")
    if cmd in ("pattern", "map", "optimize", "bfp"):
        n_imm = cfg.immersion_index
        if not math.isclose(n_imm, v["n1"], rel_tol=1e-12):
            _fail("immersion_index", f"must equal n1 = {v['n1']}")
        if not 0 < v["na"] < n_imm:
            _fail("na", f"numerical aperture {v['na']} must lie in (0, n1 = {n_imm})")
        if not 0 < v["resolution_deg"] <= math.degrees(0.05):
            _fail("resolution_deg", "must lie in (0, 2.8648] degrees")
    if cmd in ("pattern", "bfp") and not v["input"]:
        problems = validate_stack(cfg.stack()) if v["t"] > 0 and v["h"] > 0 else ["t and h must be > 0"]
        if problems:
            key = "h" if "emitter" in problems[0] else "t"
            _fail(key, problems[0])
    if cmd in ("map", "optimize"):
        for axis in ("t", "h"):
            lo, hi = v[f"{axis}_min"], v[f"{axis}_max"]
            if not 0 < lo <= hi:
                _fail(f"{axis}_min", f"range [{lo}, {hi}] must be positive and ordered")
        if cmd == "map":
            for key in ("t_steps", "h_steps"):
                if v[key] < 2:
                    _fail(key, "need at least 2 steps")
        else:
            if not v["tolerance"] > 0:
                _fail("tolerance", "must be > 0")
            if v["coarse_steps"] < 15:
                _fail("coarse_steps", "coarse scan needs at least 15 steps per axis")
    if cmd == "bfp":
        if not v["fwhm_deg"] > 0:
            _fail("fwhm_deg", "must be > 0")
        if v["pixels"] < 16 or v["pixels"] % 2:
            _fail("pixels", "must be even and >= 16")
        if v["bit_depth"] not in (8, 16):
            _fail("bit_depth", "must be 8 or 16")
    if cmd == "photo-sim":
        for key in ("k12", "k21", "k23", "k31"):
            if not (math.isfinite(v[key]) and v[key] >= 0):
                _fail(key, "rates must be finite and >= 0")
        if not v["k21"] > 0:
            _fail("k21", "must be > 0")
        if not 0 < v["detection_prob"] <= 1:
            _fail("detection_prob", "must lie in (0, 1]")
        if not v["duration"] > 0:
            _fail("duration", "must be > 0")
        if v["seed"] < 0:
            _fail("seed", "must be >= 0")
    if cmd == "photo-fit":
        if not v["input"]:
            _fail("input", "photo-fit needs a G2 CSV via --input")
        if v["irf_sigma"] is not None and v["irf_sigma"] < 0:
            _fail("irf_sigma", "must be >= 0")
    if cmd == "budget":
        if not v["s_de"] >= 0:
            _fail("s_de", "must be >= 0")
        if not 0 < v["eta_det"] <= 1:
            _fail("eta_det", "must lie in (0, 1]")
        if not 0 <= v["n2_on"] <= 1:
            _fail("n2_on", "must lie in [0, 1]")
        if not v["k21"] >= 0:
            _fail("k21", "must be >= 0")
        if not 0 <= v["off_fraction"] < 1:
            _fail("off_fraction", "must lie in [0, 1)")


def _pattern(cfg):
    stack = check_stack(cfg.stack())
    res = math.radians(cfg["resolution_deg"])
    lower, upper = emission.spectra(stack, res)
    eta = emission.collection_efficiency(lower, upper, cfg.objective())
    power = emission.total_radiated_power(stack)
    summary = [
        ("eta", eta),
        ("na", cfg["na"]),
        ("lower_fraction", power.lower_fraction),
        ("upper_fraction", power.upper_fraction),
        ("total_normalized", power.total_normalized),
    ]
    return [("spectrum.csv", outputs.spectrum_csv(lower, upper)),
            ("summary.txt", outputs.keyvalue_bytes(summary))], summary


def _map(cfg):
    emap = design.efficiency_map(
        cfg.template(), (cfg["t_min"], cfg["t_max"]), (cfg["h_min"], cfg["h_max"]),
        (cfg["t_steps"], cfg["h_steps"]), cfg.objective(),
    )
    eta = emap.eta[emap.valid]
    summary = [("valid_cells", int(emap.valid.sum())), ("failed_cells", len(emap.errors)),
               ("eta_max", float(eta.max()) if eta.size else float("nan"))]
    return [("map.csv", outputs.map_csv(emap))], summary


def _optimize(cfg):
    opt = design.optimize(
        cfg.template(), (cfg["t_min"], cfg["t_max"]), (cfg["h_min"], cfg["h_max"]),
        cfg.objective(), cfg["tolerance"], cfg["coarse_steps"],
    )
    pairs = [("t_star", opt.t_star), ("h_star", opt.h_star),
             ("eta_star", opt.eta_star), ("evaluations", opt.evaluations)]
    return [("optimum.txt", outputs.keyvalue_bytes(pairs))], pairs


def _bfp(cfg):
    objective = cfg.objective()
    if cfg["input"]:
        lower = outputs.read_spectrum_csv(cfg["input"], cfg["n1"], cfg["n3"]).get("lower")
        if lower is None:
            raise AntennaError(f"{cfg['input']}: no lower half-space rows")
    else:
        lower = emission.angular_density(
            check_stack(cfg.stack()), "lower", math.radians(cfg["resolution_deg"])
        )
    profile = bfp.apply_resolution(bfp.bfp_profile(lower, objective), cfg["fwhm_deg"])
    image = bfp.render_image(profile, cfg["pixels"])
    lobes = bfp.profile_lobes(profile)
    summary = [("energy", profile.energy()), ("lobes", len(lobes))]
    summary += [(f"lobe_{i}_na", na) for i, (na, _) in enumerate(lobes)]
    return [("profile.csv", outputs.profile_csv(profile)),
            ("bfp.pgm", outputs.pgm_bytes(image, cfg["bit_depth"]))], summary


def _photo_sim(cfg):
    rates = photophysics.ThreeLevelRates(cfg["k12"], cfg["k21"], cfg["k23"], cfg["k31"])
    stream = photophysics.simulate_photon_stream(
        rates, cfg["detection_prob"], cfg["duration"], cfg["seed"]
    )
    summary = [("photons", int(stream.size)), ("rate", stream.size / cfg["duration"])]
    return [("photons.csv", outputs.stream_csv(stream))], summary


def _photo_fit(cfg):
    curve = outputs.read_g2_csv(cfg["input"])
    fit = photophysics.fit_g2(curve, cfg["irf_sigma"])
    pairs = [("rise_rate", fit.rise_rate), ("contrast", fit.contrast),
             ("irf_sigma", fit.irf_sigma), ("residual_norm", fit.residual_norm)]
    return [("g2fit.txt", outputs.keyvalue_bytes(pairs))], pairs


def _budget(cfg):
    b = photophysics.photon_budget(cfg["s_de"], cfg["eta_det"], cfg["n2_on"], cfg["k21"], cfg["off_fraction"])
    pairs = [("S_de", b.S_de), ("eta_det", b.eta_det), ("S_co", b.S_co), ("N2_on", b.N2_on),
             ("k21", b.k21), ("off_fraction", b.off_fraction), ("S_em", b.S_em), ("eta", b.eta)]
    return [("budget.txt", outputs.keyvalue_bytes(pairs))], pairs


HANDLERS = {
    "pattern": _pattern,
    "map": _map,
    "optimize": _optimize,
    "bfp": _bfp,
    "photo-sim": _photo_sim,
    "photo-fit": _photo_fit,
    "budget": _budget,
}


def run(config: RunConfig, stdout=None) -> int:
    """Execute a validated configuration; returns the exit status."""
    stdout = stdout or sys.stdout
    try:
        artifacts, summary = HANDLERS[config.command](config)
    except OSError as exc:
        print(f"antenna: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (AntennaError, ValueError) as exc:
        print(f"antenna: {config.command} failed: {exc}", file=sys.stderr)
        return EXIT_MODULE
    try:
        outputs.write_outputs(artifacts, config["output_dir"])
    except OSError as exc:
        print(f"antenna: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_IO
    print(" ".join(f"{k}={outputs.fmt(v)}" for k, v in summary), file=stdout)
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="antenna",
        allow_abbrev=False,
        description="Planar dielectric antenna simulator",
        epilog="Any configuration key may be given as --key value; see README for the list.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="flat key = value configuration file")
    args, rest = parser.parse_known_args(argv)
    try:
        config = parse_config(args.command, args.config, _parse_flags(rest))
    except ConfigError as exc:
        print(f"antenna: {exc}", file=sys.stderr)
        return exc.exit_code
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
