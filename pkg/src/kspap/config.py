"""JSON configuration: solver settings, spatial profiles and signal descriptors.

A forcing descriptor looks like::

    {"ap": [{"freq": 1.0, "phase": 0.0, "amp": 1.0, "profile_ref": "f1"}],
     "pap0": {"kind": "exponential", "params": {"scale": 1.0, "rate": 1.0},
              "profile_ref": "f1"}}

``profile_ref`` names an entry of the top-level ``profiles`` table, which is
either ``{"file": "field.json"}`` (a saved field) or a list of single modes::

    {"vector": true, "modes": [{"component": 0, "k": [1, 0], "amp": 1e-3}]}
"""

from __future__ import annotations

import json
import os

import numpy as np

from .domain import BoxDomain, SpectralField, VectorSpectralField
from .duhamel import SolverConfig
from .signals import ApPart, ApTerm, Pap0Part, PapSignal

__all__ = [
    "ConfigError",
    "load_json",
    "domain_from",
    "solver_config",
    "build_profiles",
    "signal_from_descriptor",
]

SOLVER_KEYS = ("p_cfg", "gamma", "dt", "t_hist", "t_end", "t_start", "tol", "max_iter")


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


def load_json(path) -> dict:
    """Read a JSON file, reporting parse errors with line and column."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        line = text.splitlines()[exc.lineno - 1] if exc.lineno - 1 < len(text.splitlines()) else ""
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}\n    {line}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return data


def domain_from(spec) -> BoxDomain:
    if spec is None:
        return BoxDomain.cube(2, np.pi, 32)
    try:
        if "side_lengths" in spec:
            return BoxDomain.from_dict(spec)
        return BoxDomain.cube(
            int(spec.get("dim", 2)),
            float(spec.get("length", np.pi)),
            int(spec.get("modes", 32)),
            spec.get("quadrature_points"),
        )
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"bad domain spec: {exc}") from exc


def solver_config(cfg: dict | None = None, **flags) -> SolverConfig:
    """Build a :class:`SolverConfig`; keys in ``cfg`` override ``flags``."""
    merged = {k: v for k, v in flags.items() if v is not None}
    cfg = cfg or {}
    unknown = set(cfg) - set(SOLVER_KEYS) - {"domain"}
    if unknown:
        raise ConfigError(f"unknown solver keys: {sorted(unknown)}")
    merged.update({k: v for k, v in cfg.items() if k in SOLVER_KEYS})
    if "p_cfg" in merged:
        merged["p"] = merged.pop("p_cfg")
    domain = domain_from(cfg.get("domain", flags.get("domain_spec")))
    merged.pop("domain_spec", None)
    try:
        return SolverConfig(domain, **merged)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid solver settings: {exc}") from exc


def _profile(entry, domain, base_dir):
    if "file" in entry:
        path = os.path.join(base_dir, entry["file"])
        data = load_json(path)
        if "components" in data:
            return VectorSpectralField.from_dict(data)
        return SpectralField.from_dict(data)
    vector = bool(entry.get("vector", False))
    field = VectorSpectralField.zeros(domain) if vector else SpectralField.zeros(domain)
    for m in entry.get("modes", []):
        k = tuple(int(v) for v in m["k"])
        amp = float(m.get("amp", 1.0))
        if vector:
            field = field + VectorSpectralField.mode(domain, int(m.get("component", 0)), k, amp)
        else:
            field = field + SpectralField.mode(domain, k, amp)
    return field


def build_profiles(table: dict | None, domain: BoxDomain, base_dir=".") -> dict:
    out = {}
    for name, entry in (table or {}).items():
        try:
            out[name] = _profile(entry, domain, base_dir)
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise ConfigError(f"profile {name!r}: {exc}") from exc
    return out


def _ref(profiles, name):
    if name is None:
        return None
    if name not in profiles:
        raise ConfigError(f"unknown profile_ref {name!r}")
    return profiles[name]


def signal_from_descriptor(desc: dict | None, profiles: dict) -> PapSignal:
    """Turn a signal descriptor into a :class:`PapSignal`."""
    if not desc:
        return PapSignal()
    try:
        terms = tuple(
            ApTerm(
                float(t.get("freq", 0.0)),
                float(t.get("phase", 0.0)),
                float(t.get("amp", 1.0)),
                _ref(profiles, t.get("profile_ref")),
            )
            for t in desc.get("ap", [])
        )
        raw = desc.get("pap0", [])
        parts = []
        for part in [raw] if isinstance(raw, dict) else raw:
            params = part.get("params", {})
            parts.append(
                Pap0Part(
                    kind=part.get("kind", "exponential"),
                    scale=float(params.get("scale", 1.0)),
                    rate=float(params.get("rate", 1.0)),
                    profile=_ref(profiles, part.get("profile_ref")),
                )
            )
        return PapSignal(ApPart(terms), tuple(parts))
    except ConfigError:
        raise
    except (AttributeError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad signal descriptor: {exc}") from exc
