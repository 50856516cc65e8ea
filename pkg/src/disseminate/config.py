"""Experiment configuration: TOML files plus flag overrides, strict schema.

A config names a mode and carries that mode's parameters in a section of
the same name (pipeline uses [bbm] and [metrics]). Every key is checked
against the schema; unknown keys, type mismatches and domain violations
are rejected with the offending key (and its line in the file when it
can be found, so typos do not silently corrupt an experiment).
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Optional

try:
    import tomllib as tomli
except ModuleNotFoundError:  # stdlib tomllib arrived in 3.11
    import tomli

from .errors import ConfigError
from .galton_watson import OffspringLaw

MODES = ("gw", "csbp", "bbm", "sbm", "metrics", "pipeline")

DEFAULT_OUT_PREFIX = "disseminate_out"


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _num(section, key, v, lo=None, lo_strict=None):
    if not _is_num(v):
        raise ConfigError(f"{section}.{key}: expected a number, got {v!r}")
    v = float(v)
    if lo is not None and v < lo:
        raise ConfigError(f"{section}.{key}: must be >= {lo} (got {v})")
    if lo_strict is not None and v <= lo_strict:
        raise ConfigError(f"{section}.{key}: must be > {lo_strict} (got {v})")
    return v


def _int(section, key, v, lo=None):
    if not isinstance(v, int) or isinstance(v, bool):
        raise ConfigError(f"{section}.{key}: expected an integer, got {v!r}")
    if lo is not None and v < lo:
        raise ConfigError(f"{section}.{key}: must be >= {lo} (got {v})")
    return v


def _str(section, key, v):
    if not isinstance(v, str):
        raise ConfigError(f"{section}.{key}: expected a string, got {v!r}")
    return v


def _num_list(section, key, v, min_len=0):
    if isinstance(v, str):
        parts = [p for p in v.split(",") if p.strip()]
        try:
            v = [float(p) for p in parts]
        except ValueError:
            raise ConfigError(f"{section}.{key}: cannot parse {v!r} as numbers")
    if not isinstance(v, (list, tuple)) or not all(_is_num(x) for x in v):
        raise ConfigError(f"{section}.{key}: expected a list of numbers")
    if len(v) < min_len:
        raise ConfigError(f"{section}.{key}: needs at least {min_len} entries")
    return tuple(float(x) for x in v)


@dataclass(frozen=True)
class GwParams:
    offspring: tuple  # probability specs, strings like "1/3" allowed
    generations: int
    n0: int = 1
    out: Optional[str] = None  # explicit CSV path; default <prefix>.csv


@dataclass(frozen=True)
class CsbpParams:
    submode: str  # v | laplace | mean | path
    b: float = 0.0
    c: float = 0.0
    atoms: tuple = ()  # (weight, jump_size) pairs
    x0: float = 1.0
    laplace_mu: float = 1.0
    t_values: tuple = (1.0,)
    dt: float = 1e-3


@dataclass(frozen=True)
class BbmParams:
    birth_rate: float
    death_rate: float
    sigma: float
    t_end: float
    n0: int = 1
    snapshots: tuple = ()  # default: just t_end
    env_prefix: Optional[str] = None
    cap: int = 10_000_000


@dataclass(frozen=True)
class SbmParams:
    k: int
    t_end: float
    branching_scale: float = 1.0
    x_init: float = 1.0
    init_atoms: tuple = ()  # (x, y, mass) triples; overrides x_init
    base_birth_rate: float = 0.0
    base_death_rate: float = 0.0
    sigma: float = 1.0
    resample_target: Optional[int] = None
    resample_every: Optional[float] = None
    snapshots: tuple = ()
    window: Optional[tuple] = None  # (x0, y0, x1, y1)
    cellsize: Optional[float] = None
    cap: int = 10_000_000


@dataclass(frozen=True)
class MetricsParams:
    radius: float
    window: tuple  # (x0, y0, x1, y1)
    cellsize: float
    input_path: Optional[str] = None  # required unless driven by pipeline
    radii: tuple = ()
    deadline: Optional[float] = None


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    seed: int = 0
    replications: int = 1
    workers: int = 1
    out_prefix: str = DEFAULT_OUT_PREFIX
    quiet: bool = False
    gw: Optional[GwParams] = None
    csbp: Optional[CsbpParams] = None
    bbm: Optional[BbmParams] = None
    sbm: Optional[SbmParams] = None
    metrics: Optional[MetricsParams] = None

    def active_sections(self) -> dict:
        out = {}
        for f in fields(self):
            if f.name in MODES and getattr(self, f.name) is not None:
                out[f.name] = getattr(self, f.name)
        return out


def _parse_gw(sec: dict) -> GwParams:
    allowed = {"offspring", "generations", "n0", "out"}
    unknown = set(sec) - allowed
    if unknown:
        raise ConfigError(f"gw: unknown key {sorted(unknown)[0]!r}")
    if "offspring" not in sec:
        raise ConfigError("gw.offspring: required")
    off = sec["offspring"]
    if isinstance(off, str):
        off = [p.strip() for p in off.split(",")]
    if not isinstance(off, (list, tuple)) or not off:
        raise ConfigError("gw.offspring: expected a list of probabilities")
    for p in off:
        if not (_is_num(p) or isinstance(p, str)):
            raise ConfigError(f"gw.offspring: bad entry {p!r}")
    try:
        OffspringLaw.from_specs(tuple(off))
    except ValueError as e:
        raise ConfigError(f"gw.offspring: {e}") from None
    if "generations" not in sec:
        raise ConfigError("gw.generations: required")
    out = sec.get("out")
    if out is not None:
        out = _str("gw", "out", out)
    return GwParams(
        offspring=tuple(off),
        generations=_int("gw", "generations", sec["generations"], lo=0),
        n0=_int("gw", "n0", sec.get("n0", 1), lo=1),
        out=out,
    )


def _parse_csbp(sec: dict) -> CsbpParams:
    allowed = {"mode", "b", "c", "atoms", "x0", "mu", "t", "dt"}
    unknown = set(sec) - allowed
    if unknown:
        raise ConfigError(f"csbp: unknown key {sorted(unknown)[0]!r}")
    submode = _str("csbp", "mode", sec.get("mode", "v"))
    if submode not in ("v", "laplace", "mean", "path"):
        raise ConfigError(f"csbp.mode: one of v/laplace/mean/path (got {submode!r})")
    atoms_in = sec.get("atoms", ())
    atoms = []
    if isinstance(atoms_in, str):
        parts = [p for p in atoms_in.split(",") if p.strip()]
        for p in parts:
            bits = p.split(":")
            if len(bits) != 2:
                raise ConfigError(f"csbp.atoms: expected w:y pairs (got {p!r})")
            try:
                atoms.append((float(bits[0]), float(bits[1])))
            except ValueError:
                raise ConfigError(f"csbp.atoms: cannot parse {p!r}")
    else:
        for p in atoms_in:
            pair = _num_list("csbp", "atoms", p, min_len=2)
            if len(pair) != 2:
                raise ConfigError("csbp.atoms: entries are (weight, jump) pairs")
            atoms.append(pair)
    for w, y in atoms:
        if w <= 0 or y <= 0:
            raise ConfigError("csbp.atoms: weights and jump sizes must be positive")
    t_in = sec.get("t", 1.0)
    t_values = (_num("csbp", "t", t_in, lo=0.0),) if _is_num(t_in) else _num_list(
        "csbp", "t", t_in, min_len=1
    )
    if any(t < 0 for t in t_values):
        raise ConfigError("csbp.t: times must be >= 0")
    return CsbpParams(
        submode=submode,
        b=_num("csbp", "b", sec.get("b", 0.0)),
        c=_num("csbp", "c", sec.get("c", 0.0), lo=0.0),
        atoms=tuple(atoms),
        x0=_num("csbp", "x0", sec.get("x0", 1.0), lo=0.0),
        laplace_mu=_num("csbp", "mu", sec.get("mu", 1.0), lo_strict=0.0),
        t_values=t_values,
        dt=_num("csbp", "dt", sec.get("dt", 1e-3), lo_strict=0.0),
    )


def _parse_bbm(sec: dict) -> BbmParams:
    allowed = {"lambda", "mu", "sigma", "n0", "t_end", "snapshots", "env", "cap"}
    unknown = set(sec) - allowed
    if unknown:
        raise ConfigError(f"bbm: unknown key {sorted(unknown)[0]!r}")
    for req in ("lambda", "mu", "sigma", "t_end"):
        if req not in sec:
            raise ConfigError(f"bbm.{req}: required")
    t_end = _num("bbm", "t_end", sec["t_end"], lo_strict=0.0)
    snaps = _num_list("bbm", "snapshots", sec.get("snapshots", [t_end]), min_len=1)
    if any(s < 0 or s > t_end for s in snaps):
        raise ConfigError("bbm.snapshots: times must lie in [0, t_end]")
    env = sec.get("env")
    if env is not None:
        env = _str("bbm", "env", env)
    return BbmParams(
        birth_rate=_num("bbm", "lambda", sec["lambda"], lo=0.0),
        death_rate=_num("bbm", "mu", sec["mu"], lo=0.0),
        sigma=_num("bbm", "sigma", sec["sigma"], lo=0.0),
        t_end=t_end,
        n0=_int("bbm", "n0", sec.get("n0", 1), lo=1),
        snapshots=tuple(sorted(snaps)),
        env_prefix=env,
        cap=_int("bbm", "cap", sec.get("cap", 10_000_000), lo=1),
    )


def _parse_window(section, v) -> tuple:
    if isinstance(v, str):
        parts = v.split(":")
        if len(parts) != 4:
            raise ConfigError(f"{section}.window: expected x0:y0:x1:y1 (got {v!r})")
        try:
            vals = tuple(float(p) for p in parts)
        except ValueError:
            raise ConfigError(f"{section}.window: cannot parse {v!r}")
    else:
        vals = _num_list(section, "window", v, min_len=4)
        if len(vals) != 4:
            raise ConfigError(f"{section}.window: expected 4 numbers")
    x0, y0, x1, y1 = vals
    if not (x1 > x0 and y1 > y0):
        raise ConfigError(f"{section}.window: degenerate window {vals}")
    return vals


def _parse_sbm(sec: dict) -> SbmParams:
    allowed = {
        "k", "c", "x_init", "init_atoms", "resample_target", "resample_every",
        "t_end", "snapshots", "window", "cellsize", "lambda", "mu", "sigma", "cap",
    }
    unknown = set(sec) - allowed
    if unknown:
        raise ConfigError(f"sbm: unknown key {sorted(unknown)[0]!r}")
    for req in ("k", "t_end"):
        if req not in sec:
            raise ConfigError(f"sbm.{req}: required")
    t_end = _num("sbm", "t_end", sec["t_end"], lo_strict=0.0)
    snaps = _num_list("sbm", "snapshots", sec.get("snapshots", [t_end]), min_len=1)
    if any(s < 0 or s > t_end for s in snaps):
        raise ConfigError("sbm.snapshots: times must lie in [0, t_end]")
    atoms_in = sec.get("init_atoms", ())
    atoms = []
    if isinstance(atoms_in, str):
        for p in (q for q in atoms_in.split(",") if q.strip()):
            bits = p.split(":")
            if len(bits) != 3:
                raise ConfigError(f"sbm.init_atoms: expected x:y:mass (got {p!r})")
            try:
                atoms.append(tuple(float(b) for b in bits))
            except ValueError:
                raise ConfigError(f"sbm.init_atoms: cannot parse {p!r}")
    else:
        for p in atoms_in:
            tri = _num_list("sbm", "init_atoms", p, min_len=3)
            if len(tri) != 3:
                raise ConfigError("sbm.init_atoms: entries are (x, y, mass)")
            atoms.append(tri)
    for _, _, m in atoms:
        if m <= 0:
            raise ConfigError("sbm.init_atoms: masses must be positive")
    target = sec.get("resample_target")
    if target is not None:
        target = _int("sbm", "resample_target", target, lo=1)
    every = sec.get("resample_every")
    if every is not None:
        every = _num("sbm", "resample_every", every, lo_strict=0.0)
    if (target is None) != (every is None):
        raise ConfigError("sbm.resample_target and sbm.resample_every go together")
    window = sec.get("window")
    if window is not None:
        window = _parse_window("sbm", window)
    cellsize = sec.get("cellsize")
    if cellsize is not None:
        cellsize = _num("sbm", "cellsize", cellsize, lo_strict=0.0)
    if (window is None) != (cellsize is None):
        raise ConfigError("sbm.window and sbm.cellsize go together")
    return SbmParams(
        k=_int("sbm", "k", sec["k"], lo=1),
        t_end=t_end,
        branching_scale=_num("sbm", "c", sec.get("c", 1.0), lo_strict=0.0),
        x_init=_num("sbm", "x_init", sec.get("x_init", 1.0), lo=0.0),
        init_atoms=tuple(atoms),
        base_birth_rate=_num("sbm", "lambda", sec.get("lambda", 0.0), lo=0.0),
        base_death_rate=_num("sbm", "mu", sec.get("mu", 0.0), lo=0.0),
        sigma=_num("sbm", "sigma", sec.get("sigma", 1.0), lo=0.0),
        resample_target=target,
        resample_every=every,
        snapshots=tuple(sorted(snaps)),
        window=window,
        cellsize=cellsize,
        cap=_int("sbm", "cap", sec.get("cap", 10_000_000), lo=1),
    )


def _parse_metrics(sec: dict, inline: bool) -> MetricsParams:
    allowed = {"in", "r", "window", "cellsize", "radii", "deadline"}
    unknown = set(sec) - allowed
    if unknown:
        raise ConfigError(f"metrics: unknown key {sorted(unknown)[0]!r}")
    for req in ("r", "window", "cellsize"):
        if req not in sec:
            raise ConfigError(f"metrics.{req}: required")
    input_path = sec.get("in")
    if input_path is not None:
        input_path = _str("metrics", "in", input_path)
    if input_path is None and not inline:
        raise ConfigError("metrics.in: required (no upstream simulation)")
    deadline = sec.get("deadline")
    if deadline is not None:
        deadline = _num("metrics", "deadline", deadline, lo=0.0)
    radii = _num_list("metrics", "radii", sec.get("radii", ()))
    if any(r <= 0 for r in radii):
        raise ConfigError("metrics.radii: radii must be positive")
    if list(radii) != sorted(set(radii)):
        raise ConfigError("metrics.radii: must be strictly increasing")
    return MetricsParams(
        radius=_num("metrics", "r", sec["r"], lo_strict=0.0),
        window=_parse_window("metrics", sec["window"]),
        cellsize=_num("metrics", "cellsize", sec["cellsize"], lo_strict=0.0),
        input_path=input_path,
        radii=radii,
        deadline=deadline,
    )


_TOP_KEYS = {"mode", "seed", "replications", "workers", "out_prefix", "quiet"} | set(MODES)


def _find_key_line(path: Optional[str], key: str) -> str:
    """Best-effort line lookup so schema errors can point into the file."""
    if path is None:
        return ""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for i, line in enumerate(fh, start=1):
                stripped = line.split("#", 1)[0]
                if stripped.strip().startswith(key):
                    return f" (line {i})"
    except OSError:
        pass
    return ""


def parse_config(path: Optional[str] = None, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Load a TOML config, apply flag overrides, validate strictly.

    overrides is a flat mapping: top-level keys (mode, seed, replications,
    workers, out_prefix, quiet) plus per-mode dicts under the mode name,
    e.g. {"mode": "bbm", "seed": 2, "bbm": {"lambda": 1.0}}. Flag values
    replace file values key by key.
    """
    raw: dict = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                raw = tomli.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except tomli.TOMLDecodeError as e:
            raise ConfigError(f"config file {path}: {e}")
    overrides = overrides or {}
    for key, val in overrides.items():
        if key in MODES:
            sec = raw.setdefault(key, {})
            if not isinstance(sec, dict):
                raise ConfigError(f"{key}: expected a section, got {sec!r}")
            for k2, v2 in val.items():
                if v2 is not None:
                    sec[k2] = v2
        elif val is not None:
            raw[key] = val
    try:
        return _validate(raw)
    except ConfigError as e:
        msg = str(e)
        key = msg.split(":", 1)[0].split(".")[-1].strip("'\" ")
        raise ConfigError(msg + _find_key_line(path, key)) from None


def _validate(raw: dict) -> ExperimentConfig:
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown key {sorted(unknown)[0]!r}")
    mode = raw.get("mode")
    if mode is None:
        raise ConfigError("mode: required (one of %s)" % ", ".join(MODES))
    if mode not in MODES:
        raise ConfigError(f"mode: unknown mode {mode!r}")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2**64:
        raise ConfigError(f"seed: expected an unsigned 64-bit integer, got {seed!r}")
    reps = _int("", "replications", raw.get("replications", 1), lo=1)
    workers = _int("", "workers", raw.get("workers", 1), lo=1)
    out_prefix = _str("", "out_prefix", raw.get("out_prefix", DEFAULT_OUT_PREFIX))
    quiet = raw.get("quiet", False)
    if not isinstance(quiet, bool):
        raise ConfigError(f"quiet: expected a boolean, got {quiet!r}")
    needed = {"pipeline": ("bbm", "metrics")}.get(mode, (mode,))
    sections = {}
    for name in needed:
        sec = raw.get(name)
        if sec is None:
            sec = {}
        if not isinstance(sec, dict):
            raise ConfigError(f"{name}: expected a section")
        sections[name] = sec
    for name in MODES:
        if name in raw and name not in needed:
            raise ConfigError(f"{name}: section not used by mode {mode!r}")
    kwargs = {}
    if "gw" in sections:
        kwargs["gw"] = _parse_gw(sections["gw"])
    if "csbp" in sections:
        kwargs["csbp"] = _parse_csbp(sections["csbp"])
    if "bbm" in sections:
        kwargs["bbm"] = _parse_bbm(sections["bbm"])
    if "sbm" in sections:
        kwargs["sbm"] = _parse_sbm(sections["sbm"])
    if "metrics" in sections:
        kwargs["metrics"] = _parse_metrics(sections["metrics"], inline=(mode == "pipeline"))
    return ExperimentConfig(
        mode=mode, seed=seed, replications=reps, workers=workers,
        out_prefix=out_prefix, quiet=quiet, **kwargs,
    )
