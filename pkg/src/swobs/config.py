"""TOML system bundles: plant definition plus per-command settings.

A bundle describes one switched system (either expression fields or a PWA
matrix block), optional observer gains, and defaulted settings for the
simulate / certify / observe / synth / regstudy pipelines.  Field names are
documented in the README; validation errors carry the offending key.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .measures import MeasureKind
from .simulate import IntegratorConfig
from .systems import BimodalSystem, ObserverSpec


class ConfigError(ValueError):
    pass


def _req(table: dict, key: str, ctx: str):
    if key not in table:
        raise ConfigError(f"missing required key {key!r} in [{ctx}]")
    return table[key]


@dataclass
class Bundle:
    """A loaded configuration: the system plus resolved per-command settings."""

    name: str
    system: BimodalSystem
    measure: MeasureKind
    L_plus: Optional[np.ndarray]
    L_minus: Optional[np.ndarray]
    simulate: dict = field(default_factory=dict)
    observe: dict = field(default_factory=dict)
    certify: dict = field(default_factory=dict)
    synth: dict = field(default_factory=dict)
    regstudy: dict = field(default_factory=dict)

    def observer(self, L_plus=None, L_minus=None) -> ObserverSpec:
        Lp = L_plus if L_plus is not None else self.L_plus
        Lm = L_minus if L_minus is not None else self.L_minus
        if Lp is None or Lm is None:
            raise ConfigError(f"bundle {self.name!r} lacks observer gains")
        return ObserverSpec(self.system, Lp, Lm)

    def integrator_config(self, block: dict, **overrides) -> IntegratorConfig:
        t0 = overrides.get("t0", block.get("t0", 0.0))
        tf = overrides.get("tf", block.get("tf"))
        if tf is None:
            raise ConfigError("no final time: set tf in the config or pass --tf")
        kwargs = {}
        for key in ("rel_tol", "abs_tol", "max_step", "tol_event", "sample_interval"):
            val = overrides.get(key, block.get(key))
            if val is not None:
                kwargs[key] = float(val)
        return IntegratorConfig(t_span=(float(t0), float(tf)), **kwargs)


def _build_system(doc: dict, name: str) -> BimodalSystem:
    params = {k: float(v) for k, v in doc.get("params", {}).items()}
    if "pwa" in doc:
        pw = doc["pwa"]
        return BimodalSystem.from_pwa(
            _req(pw, "A1", "pwa"), _req(pw, "b1", "pwa"),
            _req(pw, "A2", "pwa"), _req(pw, "b2", "pwa"),
            pw.get("B"), _req(pw, "h", "pwa"), _req(pw, "c", "pwa"),
            pw.get("u"), params,
        )
    if "fields" not in doc:
        raise ConfigError(f"config {name!r} needs a [fields] or [pwa] table")
    fl = doc["fields"]
    n = int(_req(doc, "n", "top level"))
    return BimodalSystem.from_sources(
        n,
        _req(fl, "f_plus", "fields"),
        _req(fl, "f_minus", "fields"),
        _req(fl, "h", "fields"),
        fl.get("g", []),
        fl.get("u"),
        params,
    )


def load_bundle_text(text: str, name: str) -> Bundle:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config {name!r}: {exc}") from exc
    try:
        system = _build_system(doc, name)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"config {name!r}: {exc}") from exc
    measure = MeasureKind.parse(doc.get("measure", "l2"))
    obs = doc.get("observer", {})
    L_plus = np.asarray(obs["L_plus"], dtype=float) if "L_plus" in obs else None
    L_minus = np.asarray(obs["L_minus"], dtype=float) if "L_minus" in obs else None
    return Bundle(
        name=name,
        system=system,
        measure=measure,
        L_plus=L_plus,
        L_minus=L_minus,
        simulate=doc.get("simulate", {}),
        observe=doc.get("observe", {}),
        certify=doc.get("certify", {}),
        synth=doc.get("synth", {}),
        regstudy=doc.get("regstudy", {}),
    )


def load_bundle(path) -> Bundle:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return load_bundle_text(p.read_text(), str(p))
