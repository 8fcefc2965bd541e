"""Run configuration files.

The on-disk format is TOML (the declared, stable dialect for this
package).  Parsing is strict: unknown keys are rejected, every physical
invariant of the nested objects is enforced here, and diagnostics carry
the file name and a best-effort line number pointing at the offending
key.

A minimal single-qubit run (note that the scalar keys branch and seed
must precede the first section header):

    branch = "plus"
    seed = 0

    [observable]
    omega_magnitude = 1e9
    alpha = 1.0471975511965976
    beta = 0.5235987755982988

    [driving]
    shape = "im"
    g0 = 1e9
    kappa = 1e5
    theta = 0.5235987755982988
    phi = -1.0471975511965976

    [initial]
    bloch = [-0.5, 0.0, -0.5]

Sections [integration], [checks], and [sweep] are optional; [driving]
may be omitted for the undriven limit (then integration.t_end is
required).
"""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field, replace

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .dynamics import IntegrationControls
from .errors import ConfigError, QlmeasError
from .generators import (DrivingGenerator, InvertedMorse, Observable,
                         Tabulated, Window)
from .linalg import TwoQubitState, bloch_to_density
from .measurement import Scenario

# Allowed key trees; a None leaf is a value, a dict is a table.
_AXIS = {"values": None, "start": None, "stop": None, "count": None,
         "scale": None}
_SCHEMA = {
    "observable": {"omega_magnitude": None, "alpha": None, "beta": None},
    "driving": {"shape": None, "g0": None, "kappa": None, "t_on": None,
                "t_off": None, "ramp": None, "theta": None, "phi": None,
                "samples": None},
    "initial": {"bloch": None,
                "two_qubit": {"nA": None, "nB": None, "T": None}},
    "branch": None,
    "seed": None,
    "integration": {"rtol": None, "atol": None, "t_end": None,
                    "output_points": None, "spacing": None,
                    "t_first_output": None, "max_steps": None},
    "checks": {"quasilinearity": None, "cross_validate": None},
    "sweep": {"jobs": None, "theta": _AXIS, "phi": _AXIS, "g0": _AXIS,
              "kappa": _AXIS, "shape": _AXIS},
}

_SHAPE_KEYS = {
    "im": {"g0", "kappa"},
    "window": {"g0", "t_on", "t_off", "ramp"},
    "tabulated": {"samples"},
}


def _find_line(src: str, dotted: str) -> int:
    """Best-effort line number of a dotted key in the TOML source."""
    parts = dotted.split(".")
    lines = src.splitlines()
    start = 0
    if len(parts) > 1:
        head = re.compile(
            r"^\s*\[+\s*" + re.escape(".".join(parts[:-1])) + r"\s*[\]\.]"
        )
        for i, ln in enumerate(lines):
            if head.match(ln):
                start = i
                break
    pat = re.compile(
        r"^\s*(\[+\s*([\w.]+\.)?)?" + re.escape(parts[-1]) + r"\s*[=\]\s.]"
    )
    for i in range(start, len(lines)):
        if pat.match(lines[i]):
            return i + 1
    return 0


class _Ctx:
    """Error context: prefixes messages with file:line and the key."""

    def __init__(self, path: str, src: str):
        self.path = path
        self.src = src

    def fail(self, key: str, msg: str):
        line = _find_line(self.src, key)
        loc = f"{self.path}:{line}" if line else self.path
        raise ConfigError(f"{loc}: {key}: {msg}")

    def wrap(self, key: str, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (QlmeasError, ValueError, TypeError) as exc:
            self.fail(key, str(exc))


def _check_keys(node: dict, allowed: dict, prefix: str, ctx: _Ctx):
    for k, v in node.items():
        full = prefix + k
        if k not in allowed:
            ctx.fail(full, "unknown key")
        sub = allowed[k]
        if isinstance(sub, dict):
            if not isinstance(v, dict):
                ctx.fail(full, "expected a table")
            _check_keys(v, sub, full + ".", ctx)
        elif isinstance(v, dict):
            ctx.fail(full, "did not expect a table")


def _num(ctx, table, section, key, required=False, default=None):
    if key not in table:
        if required:
            ctx.fail(f"{section}.{key}" if section else key, "missing")
        return default
    v = table[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        ctx.fail(f"{section}.{key}" if section else key,
                 f"expected a number, got {v!r}")
    return float(v)


def _vec3(ctx, key, v):
    if (not isinstance(v, list) or len(v) != 3
            or any(isinstance(x, bool) or not isinstance(x, (int, float))
                   for x in v)):
        ctx.fail(key, "expected a list of three numbers")
    return np.array(v, dtype=float)


@dataclass(frozen=True)
class SweepSpec:
    """Materialized sweep axes: name -> list of cell values."""

    axes: dict
    jobs: int | None = None

    def cells(self):
        """Cartesian product in axis order; deterministic."""
        names = list(self.axes)
        grids = [self.axes[n] for n in names]
        idx = [0] * len(names)
        while True:
            yield {n: grids[i][idx[i]] for i, n in enumerate(names)}
            for i in reversed(range(len(names))):
                idx[i] += 1
                if idx[i] < len(grids[i]):
                    break
                idx[i] = 0
            else:
                return


@dataclass(frozen=True)
class RunConfig:
    """Parsed and validated configuration for one run (or sweep)."""

    observable: Observable
    driving: DrivingGenerator | None
    driving_params: dict | None
    initial: object  # Bloch 3-vector or TwoQubitState
    branch: str
    seed: int
    controls: IntegrationControls
    checks: dict = field(default_factory=dict)
    sweep: SweepSpec | None = None
    path: str = "<config>"
    # whether t_end came from the file (fixed) or from the driving
    # profile (sweep cells then re-derive it per cell)
    t_end_explicit: bool = True

    @property
    def two_qubit(self) -> bool:
        return isinstance(self.initial, TwoQubitState)

    def scenario(self) -> Scenario:
        init = self.initial.nA if self.two_qubit else self.initial
        return Scenario(self.observable, self.driving, init,
                        self.controls, self.seed)

    def with_overrides(self, seed=None, rtol=None, atol=None, t_end=None):
        cfg = self
        if seed is not None:
            cfg = replace(cfg, seed=int(seed))
        if rtol is not None or atol is not None or t_end is not None:
            c = cfg.controls
            cfg = replace(cfg, controls=IntegrationControls(
                t_end=t_end if t_end is not None else c.t_end,
                rtol=rtol if rtol is not None else c.rtol,
                atol=atol if atol is not None else c.atol,
                output_points=c.output_points,
                output_spacing=c.output_spacing,
                # a new horizon re-derives the first output time
                t_first_output=None if t_end is not None
                else c.t_first_output,
                max_steps=c.max_steps,
            ))
            if t_end is not None:
                cfg = replace(cfg, t_end_explicit=True)
        return cfg


def build_driving(params: dict, theta=None, phi=None, g0=None,
                  kappa=None, shape=None) -> DrivingGenerator:
    """Driving generator from parsed parameters with optional overrides
    (used by sweep cells).  The outcome sign is a placeholder."""
    p = dict(params)
    if theta is not None:
        p["theta"] = float(theta)
    if phi is not None:
        p["phi"] = float(phi)
    if g0 is not None:
        p["g0"] = float(g0)
    if kappa is not None:
        p["kappa"] = float(kappa)
    if shape is not None:
        p["shape"] = shape
    s = p["shape"]
    if s == "im":
        prof = InvertedMorse(p["g0"], p["kappa"])
    elif s == "window":
        prof = Window(p["g0"], p["t_on"], p["t_off"], p["ramp"])
    elif s == "tabulated":
        prof = Tabulated(tuple(map(tuple, p["samples"])))
    else:
        raise ConfigError(f"unknown driving shape {s!r}")
    return DrivingGenerator.from_polar(+1, p["theta"], p["phi"], prof)


def _parse_driving(ctx, table, swept_shapes=()):
    shape = table.get("shape")
    if shape not in _SHAPE_KEYS:
        ctx.fail("driving.shape",
                 f"must be one of {sorted(_SHAPE_KEYS)}, got {shape!r}")
    for s in swept_shapes:
        if s not in _SHAPE_KEYS:
            ctx.fail("sweep.shape.values",
                     f"must be among {sorted(_SHAPE_KEYS)}, got {s!r}")
    # A shape sweep keeps one [driving] table for every swept shape, so
    # the allowed/required key set is the union over those shapes.
    shapes = set(swept_shapes) | {shape}
    needed = set().union(*(_SHAPE_KEYS[s] for s in shapes))
    given = set(table) - {"shape", "theta", "phi"}
    for extra in sorted(given - needed):
        ctx.fail(f"driving.{extra}",
                 f"not used by driving shape {shape!r}")
    params = {"shape": shape}
    for key in sorted(needed):
        if key == "samples":
            v = table.get(key)
            if v is None:
                ctx.fail("driving.samples", "missing")
            params[key] = v
        else:
            params[key] = _num(ctx, table, "driving", key, required=True)
    params["theta"] = _num(ctx, table, "driving", "theta", required=True)
    params["phi"] = _num(ctx, table, "driving", "phi", required=True)
    gen = ctx.wrap("driving", build_driving, params)
    return gen, params


def _parse_axis(ctx, key, node, string_axis=False):
    if "values" in node:
        for bad in ("start", "stop", "count", "scale"):
            if bad in node:
                ctx.fail(f"{key}.{bad}", "values and range are exclusive")
        vals = node["values"]
        if not isinstance(vals, list) or not vals:
            ctx.fail(f"{key}.values", "expected a non-empty list")
        if string_axis:
            return [str(v) for v in vals]
        return [float(v) for v in vals]
    if string_axis:
        ctx.fail(key, "shape axis needs explicit values")
    lo = _num(ctx, node, key, "start", required=True)
    hi = _num(ctx, node, key, "stop", required=True)
    cnt = node.get("count")
    if not isinstance(cnt, int) or isinstance(cnt, bool) or cnt < 1:
        ctx.fail(f"{key}.count", "expected a positive integer")
    scale = node.get("scale", "linear")
    if scale == "linear":
        return list(np.linspace(lo, hi, cnt))
    if scale == "log":
        return list(np.geomspace(lo, hi, cnt))
    ctx.fail(f"{key}.scale", f"must be 'linear' or 'log', got {scale!r}")


def parse_config_text(src: str, path: str = "<config>") -> RunConfig:
    ctx = _Ctx(path, src)
    try:
        raw = tomllib.loads(src)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    _check_keys(raw, _SCHEMA, "", ctx)

    if "observable" not in raw:
        ctx.fail("observable", "missing section")
    ot = raw["observable"]
    obs = ctx.wrap("observable", Observable.from_polar,
                   _num(ctx, ot, "observable", "omega_magnitude",
                        required=True),
                   _num(ctx, ot, "observable", "alpha", required=True),
                   _num(ctx, ot, "observable", "beta", required=True))

    sweep = None
    if "sweep" in raw:
        st = raw["sweep"]
        axes = {}
        for name in ("theta", "phi", "g0", "kappa", "shape"):
            if name in st:
                axes[name] = _parse_axis(ctx, f"sweep.{name}", st[name],
                                         string_axis=(name == "shape"))
        if not axes:
            ctx.fail("sweep", "no sweep axes given")
        jobs = st.get("jobs")
        if jobs is not None and (isinstance(jobs, bool)
                                 or not isinstance(jobs, int) or jobs < 1):
            ctx.fail("sweep.jobs", "expected a positive integer")
        sweep = SweepSpec(axes=axes, jobs=jobs)

    driving = None
    params = None
    if "driving" in raw:
        swept = sweep.axes.get("shape", ()) if sweep else ()
        driving, params = _parse_driving(ctx, raw["driving"], swept)
    elif sweep:
        ctx.fail("sweep", "sweep axes need a driving section")

    if "initial" not in raw:
        ctx.fail("initial", "missing section")
    it = raw["initial"]
    if ("bloch" in it) == ("two_qubit" in it):
        ctx.fail("initial", "give exactly one of bloch or two_qubit")
    if "bloch" in it:
        initial = _vec3(ctx, "initial.bloch", it["bloch"])
        ctx.wrap("initial.bloch", bloch_to_density, initial)
    else:
        tq = it["two_qubit"]
        T = tq.get("T")
        if (not isinstance(T, list) or len(T) != 3
                or any(not isinstance(r, list) or len(r) != 3 for r in T)):
            ctx.fail("initial.two_qubit.T", "expected a 3x3 matrix")
        initial = ctx.wrap(
            "initial.two_qubit", TwoQubitState,
            _vec3(ctx, "initial.two_qubit.nA", tq.get("nA")),
            _vec3(ctx, "initial.two_qubit.nB", tq.get("nB")),
            np.array(T, dtype=float))

    branch = raw.get("branch", "sampled")
    if branch not in ("plus", "minus", "sampled"):
        ctx.fail("branch",
                 f"must be 'plus', 'minus' or 'sampled', got {branch!r}")
    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        ctx.fail("seed", "expected a non-negative integer")

    gt = raw.get("integration", {})
    t_end = _num(ctx, gt, "integration", "t_end")
    t_end_explicit = t_end is not None
    if t_end is None:
        if driving is None:
            ctx.fail("integration.t_end",
                     "required when there is no driving section")
        t_end = driving.profile.default_t_end()
    kw = {"t_end": t_end}
    for key in ("rtol", "atol", "t_first_output"):
        v = _num(ctx, gt, "integration", key)
        if v is not None:
            kw[key] = v
    if "output_points" in gt:
        v = gt["output_points"]
        if isinstance(v, bool) or not isinstance(v, int):
            ctx.fail("integration.output_points", "expected an integer")
        kw["output_points"] = v
    if "max_steps" in gt:
        v = gt["max_steps"]
        if isinstance(v, bool) or not isinstance(v, int):
            ctx.fail("integration.max_steps", "expected an integer")
        kw["max_steps"] = v
    if "spacing" in gt:
        kw["output_spacing"] = gt["spacing"]
    controls = ctx.wrap("integration", IntegrationControls, **kw)

    ct = raw.get("checks", {})
    checks = {}
    for key in ("quasilinearity", "cross_validate"):
        v = ct.get(key, False)
        if not isinstance(v, bool):
            ctx.fail(f"checks.{key}", "expected a boolean")
        checks[key] = v

    return RunConfig(
        observable=obs, driving=driving, driving_params=params,
        initial=initial, branch=branch, seed=seed, controls=controls,
        checks=checks, sweep=sweep, path=path,
        t_end_explicit=t_end_explicit,
    )


def parse_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            src = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config_text(src, str(path))
