"""Experiment configuration and on-disk formats.

Config: a JSON document validated against :data:`CONFIG_SCHEMA`; complex
numbers are ``{"re": x, "im": y}`` objects.

Trajectory: tab-separated text, one row per ``(t, n)`` with columns
``t n re im``, preceded by ``#`` header lines carrying the resolved config.
Floats are written with ``repr`` so that reloading is bit-exact.

Report: JSON with sorted keys and no timestamps, so identical inputs give
byte-identical files.
"""
from __future__ import annotations

import copy
import json
from pathlib import Path

import jsonschema
import numpy as np

from .hardy import HardyState, rational_profile, single_mode
from .propagator import TrajectoryRecord, default_lambda_shift

__all__ = [
    "ConfigError",
    "CONFIG_SCHEMA",
    "DEFAULTS",
    "load_config",
    "resolve_config",
    "initial_state",
    "resolved_lambda_shift",
    "sample_times",
    "write_trajectory",
    "read_trajectory",
    "write_json",
    "FORMAT_VERSION",
]

FORMAT_VERSION = 1


class ConfigError(ValueError):
    pass


_complex = {
    "oneOf": [
        {"type": "number"},
        {
            "type": "object",
            "properties": {"re": {"type": "number"}, "im": {"type": "number"}},
            "required": ["re", "im"],
            "additionalProperties": False,
        },
    ]
}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["equation", "initial"],
    "additionalProperties": False,
    "properties": {
        "equation": {
            "type": "object",
            "required": ["sign", "N"],
            "additionalProperties": False,
            "properties": {
                "sign": {"enum": ["focusing", "defocusing"]},
                "N": {"type": "integer", "minimum": 4},
            },
        },
        "initial": {
            "type": "object",
            "minProperties": 1,
            "maxProperties": 1,
            "additionalProperties": False,
            "properties": {
                "rational": {
                    "type": "object",
                    "required": ["q_re", "q_im"],
                    "additionalProperties": False,
                    "properties": {
                        "q_re": {"type": "number"}, "q_im": {"type": "number"},
                        "c_re": {"type": "number"}, "c_im": {"type": "number"},
                    },
                },
                "coeffs": {"type": "array", "items": _complex, "minItems": 1},
                "single_mode": {
                    "type": "object",
                    "required": ["n", "amplitude"],
                    "additionalProperties": False,
                    "properties": {"n": {"type": "integer", "minimum": 0}, "amplitude": _complex},
                },
            },
        },
        "time": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "t_final": {"type": "number", "minimum": 0},
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "samples": {
                    "oneOf": [
                        {"type": "integer", "minimum": 2},
                        {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
                    ]
                },
            },
        },
        "method": {"enum": ["explicit", "direct", "both"]},
        "dealias": {"type": "boolean"},
        "diagnostics": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "H_s": {"type": "array", "items": {"type": "number", "minimum": 0}},
                "n_track": {"type": ["integer", "null"], "minimum": 1},
                "birkhoff": {"type": "boolean"},
                "identity_checks": {"type": "boolean"},
            },
        },
        "lambda_shift": {"oneOf": [{"const": "auto"}, {"type": "number"}]},
        "seed": {"type": "integer"},
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"eigenvectors": {"type": "boolean"}},
        },
        "verify": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_random": {"type": "integer", "minimum": 1},
                "gap_pairs": {"type": "integer", "minimum": 1},
                "spectral_states": {"type": "integer", "minimum": 1},
                "lipschitz_directions": {"type": "integer", "minimum": 1},
            },
        },
        "test_hooks": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"corrupt_b_sign": {"type": "boolean"}},
        },
    },
}

DEFAULTS = {
    "time": {"t_final": 1.0, "dt": 1e-4, "samples": 11},
    "method": "both",
    "dealias": True,
    "diagnostics": {"H_s": [0.5, 1.0, 2.0], "n_track": None, "birkhoff": True,
                    "identity_checks": True},
    "lambda_shift": "auto",
    "seed": 0,
    "output": {"eigenvectors": False},
    "verify": {"n_random": 100, "gap_pairs": 1000, "spectral_states": 200,
               "lipschitz_directions": 4},
    "test_hooks": {"corrupt_b_sign": False},
}


def _describe(err: jsonschema.ValidationError) -> str:
    where = "/".join(str(p) for p in err.absolute_path) or "<root>"
    return f"{where}: {err.message}"


def resolve_config(raw: dict) -> dict:
    """Validate ``raw`` and fill defaults; raises :class:`ConfigError`."""
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        raise ConfigError("invalid config: " + "; ".join(_describe(e) for e in errors))
    cfg = copy.deepcopy(DEFAULTS)
    for key, val in raw.items():
        if isinstance(val, dict) and isinstance(cfg.get(key), dict):
            cfg[key].update(copy.deepcopy(val))
        else:
            cfg[key] = copy.deepcopy(val)
    N = cfg["equation"]["N"]
    init = cfg["initial"]
    if "coeffs" in init and len(init["coeffs"]) > N + 1:
        raise ConfigError(f"initial/coeffs: {len(init['coeffs'])} coefficients exceed N+1={N + 1}")
    if "single_mode" in init and init["single_mode"]["n"] > N:
        raise ConfigError(f"initial/single_mode/n: mode exceeds N={N}")
    if "rational" in init:
        r = init["rational"]
        if abs(complex(r["q_re"], r["q_im"])) >= 1:
            raise ConfigError("initial/rational: |q| must be < 1")
    samples = cfg["time"]["samples"]
    if isinstance(samples, list) and samples != sorted(samples):
        raise ConfigError("time/samples: sample times must be sorted")
    return cfg


def load_config(path) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return resolve_config(raw)


def _to_complex(v) -> complex:
    if isinstance(v, dict):
        return complex(v["re"], v["im"])
    return complex(v)


def initial_state(cfg: dict) -> HardyState:
    N = cfg["equation"]["N"]
    init = cfg["initial"]
    if "rational" in init:
        r = init["rational"]
        q = complex(r["q_re"], r["q_im"])
        c = complex(r["c_re"], r.get("c_im", 0.0)) if "c_re" in r else None
        return rational_profile(q, c, N)
    if "single_mode" in init:
        m = init["single_mode"]
        return single_mode(m["n"], _to_complex(m["amplitude"]), N)
    c = np.zeros(N + 1, dtype=complex)
    vals = [_to_complex(v) for v in init["coeffs"]]
    c[:len(vals)] = vals
    return HardyState(c)


def resolved_lambda_shift(cfg: dict, u0: HardyState) -> float:
    lam = cfg["lambda_shift"]
    if lam == "auto":
        return default_lambda_shift(u0, cfg["equation"]["sign"])
    return float(lam)


def sample_times(cfg: dict) -> list[float]:
    tm = cfg["time"]
    s = tm["samples"]
    if isinstance(s, list):
        return [float(x) for x in s]
    return [float(x) for x in np.linspace(0.0, tm["t_final"], s)]


def write_trajectory(path, traj: TrajectoryRecord, cfg: dict | None = None) -> None:
    lines = [
        f"# csdnls trajectory v{FORMAT_VERSION}",
        f"# method: {traj.method}",
        f"# N: {traj.trunc}",
        "# config: " + json.dumps(cfg, sort_keys=True),
        "t\tn\tre\tim",
    ]
    for t, st in zip(traj.times, traj.states):
        tr = repr(float(t))
        for n, z in enumerate(st.coeffs):
            lines.append(f"{tr}\t{n}\t{float(z.real)!r}\t{float(z.imag)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_trajectory(path) -> tuple[TrajectoryRecord, dict | None]:
    """Inverse of :func:`write_trajectory`; returns the record and its config."""
    header = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition(": ")
                header[key] = val
            elif line.startswith("t\t") or not line:
                continue
            else:
                t, n, re, im = line.split("\t")
                rows.append((float(t), int(n), float(re), float(im)))
    N = int(header["N"])
    times, states = [], []
    for i in range(0, len(rows), N + 1):
        block = rows[i:i + N + 1]
        times.append(block[0][0])
        c = np.array([complex(r[2], r[3]) for r in block])
        states.append(HardyState(c))
    cfg = json.loads(header["config"]) if "config" in header else None
    return TrajectoryRecord(np.array(times), states, header.get("method", "unknown")), cfg


def write_json(path, doc: dict) -> None:
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2, allow_nan=True) + "\n")
