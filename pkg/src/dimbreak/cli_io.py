"""Run configuration, deterministic file writers and the result manifest."""

from dataclasses import dataclass, field, asdict
import hashlib
import json
import math
import os
from pathlib import Path

import numpy as np

from .errors import ConfigError

DEFAULT_SEED = 0x5EED
SIZE_BOUNDS = {"n": (16, 1 << 20), "ny": (3, 8193), "nz": (2, 4096)}
EPS_BOUNDS = (0.0, 0.1)
FORMATS = ("csv", "json")


def software_version():
    try:
        from importlib.metadata import version
        return version("artifact")
    except Exception:  # not installed as a distribution
        return "0.1.0"


@dataclass
class RunConfig:
    tau0: float
    eps: float = 0.05
    grids: dict = field(default_factory=dict)
    seeds: dict = field(default_factory=dict)
    output_dir: str = "."
    format: str = "json"

    @property
    def L(self):
        return self.grids["L"]

    @property
    def n(self):
        return self.grids["n"]

    @property
    def ny(self):
        return self.grids["ny"]

    @property
    def nz(self):
        return self.grids["nz"]

    @property
    def seed(self):
        return self.seeds["coercivity_seed"]

    def to_dict(self):
        return asdict(self)


def _finite(name, v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{name} must be a number, got {v!r}", field=name)
    v = float(v)
    if not math.isfinite(v):
        raise ConfigError(f"{name} must be finite", field=name)
    return v


def _int(name, v, lo, hi):
    if isinstance(v, bool) or not isinstance(v, int):
        if isinstance(v, float) and v.is_integer():
            v = int(v)
        else:
            raise ConfigError(f"{name} must be an integer, got {v!r}", field=name)
    if not lo <= v <= hi:
        raise ConfigError(f"{name} must lie in [{lo}, {hi}], got {v}", field=name)
    return v


def default_L(tau0, eps):
    """40 sqrt(A1) / eps, the physical half-length used when the config leaves L unset."""
    from .coefficients import compute_coefficients
    from .dispersion import params_from_tau
    return 40.0 * math.sqrt(compute_coefficients(params_from_tau(tau0)).A1) / eps


def validate_config(raw):
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object", field="")
    known = {"tau0", "eps", "grids", "seeds", "output_dir", "format"}
    extra = sorted(set(raw) - known)
    if extra:
        raise ConfigError(f"unknown field {extra[0]}", field=extra[0])
    if "tau0" not in raw:
        raise ConfigError("tau0 is required", field="tau0")
    tau0 = _finite("tau0", raw["tau0"])
    if not 0.0 < tau0 < 1.0 / 3.0:
        raise ConfigError(f"tau0 must lie in (0, 1/3), got {tau0}", field="tau0")
    eps = _finite("eps", raw.get("eps", 0.05))
    if not EPS_BOUNDS[0] < eps <= EPS_BOUNDS[1]:
        raise ConfigError(f"eps must lie in (0, {EPS_BOUNDS[1]}], got {eps}", field="eps")
    g = raw.get("grids", {})
    if not isinstance(g, dict):
        raise ConfigError("grids must be an object", field="grids")
    extra = sorted(set(g) - {"L", "n", "ny", "nz"})
    if extra:
        raise ConfigError(f"unknown field grids.{extra[0]}", field=f"grids.{extra[0]}")
    L = g.get("L")
    L = default_L(tau0, eps) if L is None else _finite("grids.L", L)
    if not L > 0:
        raise ConfigError("grids.L must be positive", field="grids.L")
    grids = {"L": L}
    for key, dflt in (("n", 2048), ("ny", 33), ("nz", 64)):
        grids[key] = _int(f"grids.{key}", g.get(key, dflt), *SIZE_BOUNDS[key])
    if grids["ny"] % 2 == 0:
        raise ConfigError("grids.ny must be odd (composite Simpson in y)", field="grids.ny")
    sd = raw.get("seeds", {})
    if not isinstance(sd, dict):
        raise ConfigError("seeds must be an object", field="seeds")
    seed = _int("seeds.coercivity_seed", sd.get("coercivity_seed", DEFAULT_SEED), 0, 2**64 - 1)
    out = raw.get("output_dir", ".")
    if not isinstance(out, str) or not out:
        raise ConfigError("output_dir must be a non-empty string", field="output_dir")
    fmt = raw.get("format", "json")
    if fmt not in FORMATS:
        raise ConfigError(f"format must be one of {FORMATS}", field="format")
    return RunConfig(tau0=tau0, eps=eps, grids=grids, seeds={"coercivity_seed": seed},
                     output_dir=out, format=fmt)


def load_config(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}", field="") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}", field="") from exc
    return validate_config(raw)


def save_config(cfg, path):
    write_json(path, cfg.to_dict())


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, complex):
        return {"re": jsonable(obj.real), "im": jsonable(obj.imag)}
    return obj


def dumps(obj):
    return json.dumps(jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(obj))
    return path


def fmt17(v):
    return format(float(v), ".17g")


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt17(v) for v in row) + "\n")
    return path


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class ResultManifest:
    command: str
    config: dict
    version: str
    wall_time: float
    files: list
    timings: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def build_manifest(command, cfg, files, wall_time, out_dir, timings=None):
    out_dir = Path(out_dir)
    entries = []
    for f in files:
        f = Path(f)
        try:
            rel = str(f.resolve().relative_to(out_dir.resolve()))
        except ValueError:
            rel = str(f)
        entries.append({"path": rel, "sha256": sha256_file(f), "bytes": os.path.getsize(f)})
    return ResultManifest(command=command, config=cfg.to_dict(), version=software_version(),
                          wall_time=wall_time, files=entries, timings=timings or {})
