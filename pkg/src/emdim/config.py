"""Run configuration: INI-style files with strict key validation."""
from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields as dc_fields

from .errors import ConfigError

_CASES = ("tc1", "tc2", "tc3")

# section -> {key: (type, default)}
_SCHEMA = {
    "case": {
        "name": (str, "tc1"),
        "radius": (float, 1e-2),
        "seed": (int, 0),
        "scale": (float, 1.0),
        "tip_height": (float, 0.6),
    },
    "mesh": {
        "h_far": (float, 0.125),
        "h_near": (float, 0.01),
        "band": (float, 0.02),
        "bounds": (str, ""),
    },
    "graph": {
        "n_e": (int, 100),
    },
    "solver": {
        "tol": (float, 1e-10),
        "restart": (int, 200),
        "max_iter": (int, 2000),
        "precond": (str, "block"),
        "a_s_inverse": (str, "lumped"),
        "shift": (float, 0.0),
    },
    "coupling": {
        "n_circle": (int, 8),
        "n_quad": (int, 2),
        "tip_flux_factor": (float, 1.0),
    },
    "sweep": {
        "radii": (str, "1e-2,1e-3,1e-4,1e-5,1e-6"),
    },
    "verify": {
        "threshold": (float, 1e-8),
    },
    "output": {
        "formats": (str, "csv,json,vtk,png"),
    },
}


@dataclass
class RunConfig:
    """Validated, fully defaulted run configuration."""

    case: str = "tc1"
    radius: float = 1e-2
    seed: int = 0
    scale: float = 1.0
    tip_height: float = 0.6
    h_far: float = 0.125
    h_near: float = 0.01
    band: float = 0.02
    bounds: tuple | None = None
    n_e: int = 100
    tol: float = 1e-10
    restart: int = 200
    max_iter: int = 2000
    precond: str = "block"
    a_s_inverse: str = "lumped"
    shift: float = 0.0
    n_circle: int = 8
    n_quad: int = 2
    tip_flux_factor: float = 1.0
    radii: tuple = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
    verify_threshold: float = 1e-8
    formats: tuple = ("csv", "json", "vtk", "png")

    def __post_init__(self):
        if self.case not in _CASES:
            raise ConfigError(f"unknown case {self.case!r}", key="case.name")
        for key in ("radius", "h_far", "h_near", "band", "scale"):
            if getattr(self, key) <= 0.0:
                raise ConfigError(f"{key} must be positive", key=key)
        if not 0.0 < self.tol < 1.0:
            raise ConfigError("solver tolerance must be in (0, 1)",
                              key="solver.tol")
        if self.restart < 1 or self.max_iter < 1:
            raise ConfigError("restart and max_iter must be >= 1",
                              key="solver.restart")
        if self.precond not in ("block", "none"):
            raise ConfigError(f"unknown preconditioner {self.precond!r}",
                              key="solver.precond")
        if self.a_s_inverse not in ("lumped", "exact"):
            raise ConfigError(f"unknown a_s_inverse {self.a_s_inverse!r}",
                              key="solver.a_s_inverse")
        if self.n_e < 1:
            raise ConfigError("n_e must be >= 1", key="graph.n_e")
        if self.n_circle < 4:
            raise ConfigError("n_circle must be >= 4", key="coupling.n_circle")
        if any(r <= 0 for r in self.radii):
            raise ConfigError("sweep radii must be positive", key="sweep.radii")
        if self.bounds is not None:
            lo, hi = self.bounds
            if any(h <= l for l, h in zip(lo, hi)):
                raise ConfigError("mesh bounds are degenerate", key="mesh.bounds")


def _parse_value(section, key, raw):
    typ, _default = _SCHEMA[section][key]
    try:
        return typ(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {section}.{key}: {raw!r}",
                          key=f"{section}.{key}") from exc


def _to_config(values):
    radii = values["sweep"]["radii"]
    if isinstance(radii, str):
        radii = tuple(float(x) for x in radii.split(",") if x.strip())
    formats = values["output"]["formats"]
    if isinstance(formats, str):
        formats = tuple(x.strip() for x in formats.split(",") if x.strip())
    bounds_raw = values["mesh"]["bounds"]
    bounds = None
    if bounds_raw:
        nums = [float(x) for x in str(bounds_raw).split(",")]
        if len(nums) != 6:
            raise ConfigError("mesh.bounds needs 6 numbers", key="mesh.bounds")
        bounds = (tuple(nums[:3]), tuple(nums[3:]))
    return RunConfig(
        case=values["case"]["name"],
        radius=values["case"]["radius"],
        seed=values["case"]["seed"],
        scale=values["case"]["scale"],
        tip_height=values["case"]["tip_height"],
        h_far=values["mesh"]["h_far"],
        h_near=values["mesh"]["h_near"],
        band=values["mesh"]["band"],
        bounds=bounds,
        n_e=values["graph"]["n_e"],
        tol=values["solver"]["tol"],
        restart=values["solver"]["restart"],
        max_iter=values["solver"]["max_iter"],
        precond=values["solver"]["precond"],
        a_s_inverse=values["solver"]["a_s_inverse"],
        shift=values["solver"]["shift"],
        n_circle=values["coupling"]["n_circle"],
        n_quad=values["coupling"]["n_quad"],
        tip_flux_factor=values["coupling"]["tip_flux_factor"],
        radii=radii,
        verify_threshold=values["verify"]["threshold"],
        formats=formats,
    )


def load_config(path):
    """Parse and validate an INI config; unknown sections/keys are errors."""
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc

    values = {s: {k: d for k, (_t, d) in keys.items()}
              for s, keys in _SCHEMA.items()}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]", key=section)
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{key}",
                                  key=f"{section}.{key}")
            values[section][key] = _parse_value(section, key, raw)
    return _to_config(values)


def config_mapping(cfg):
    """Effective configuration as a nested mapping (echoed into summaries)."""
    return {
        "case": {"name": cfg.case, "radius": cfg.radius, "seed": cfg.seed,
                 "scale": cfg.scale, "tip_height": cfg.tip_height},
        "mesh": {"h_far": cfg.h_far, "h_near": cfg.h_near, "band": cfg.band,
                 "bounds": "" if cfg.bounds is None else ",".join(
                     f"{x:g}" for pair in cfg.bounds for x in pair)},
        "graph": {"n_e": cfg.n_e},
        "solver": {"tol": cfg.tol, "restart": cfg.restart,
                   "max_iter": cfg.max_iter, "precond": cfg.precond,
                   "a_s_inverse": cfg.a_s_inverse, "shift": cfg.shift},
        "coupling": {"n_circle": cfg.n_circle, "n_quad": cfg.n_quad,
                     "tip_flux_factor": cfg.tip_flux_factor},
        "sweep": {"radii": ",".join(f"{r:g}" for r in cfg.radii)},
        "verify": {"threshold": cfg.verify_threshold},
        "output": {"formats": ",".join(cfg.formats)},
    }


def config_from_mapping(mapping):
    """Rebuild a config from an echoed mapping (summary round trip)."""
    values = {s: {k: d for k, (_t, d) in keys.items()}
              for s, keys in _SCHEMA.items()}
    for section, keys in mapping.items():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]", key=section)
        for key, val in keys.items():
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{key}",
                                  key=f"{section}.{key}")
            values[section][key] = _parse_value(section, key, str(val))
    return _to_config(values)


def render_config(cfg):
    """Serialize a config back to INI text."""
    parser = configparser.ConfigParser()
    for section, keys in config_mapping(cfg).items():
        parser[section] = {k: str(v) for k, v in keys.items()}
    out = io.StringIO()
    parser.write(out)
    return out.getvalue()
