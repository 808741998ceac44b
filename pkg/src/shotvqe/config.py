"""Harness configuration: flat INI-style key = value sections with a schema.

Unknown sections or keys are hard errors (close-match suggestions included),
every value is type- and range-checked, and a normalized config echoes all
defaults so that serialize -> parse round-trips exactly.
"""
from __future__ import annotations

import configparser
import difflib
import hashlib
import io
import json
from dataclasses import dataclass

from .ansatz import Circuit, SymmetryProjector
from .lattice import (LatticeSpec, build_lattice, checkerboard_layers,
                      default_dimer_pairing, symmetry_group)
from .optimize import OptimizerConfig
from .shots import ShotConfig
from .spectrum import HamiltonianSpec
from .thermal import ThermalConfig


class ConfigError(ValueError):
    """Raised with a line/key reference for any malformed configuration."""


def _parse_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_int_list(s: str) -> tuple[int, ...]:
    s = s.strip()
    if not s:
        return ()
    if ":" in s and "," not in s:
        lo, hi = (int(x) for x in s.split(":"))
        out, v = [], lo
        while v <= hi:
            out.append(v)
            v = max(v + 1, int(round(v * 1.5)))
        return tuple(out)
    return tuple(int(x) for x in s.split(","))


def _parse_float_list(s: str) -> tuple[float, ...]:
    s = s.strip()
    if not s:
        return ()
    return tuple(float(x) for x in s.split(","))


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (tuple, list)):
        return ",".join(_fmt(v) for v in value)
    return repr(value) if isinstance(value, float) else str(value)


@dataclass(frozen=True)
class _Key:
    parse: object
    default: object
    check: object = None
    help: str = ""


def _positive(name):
    def chk(v):
        if v <= 0:
            raise ConfigError(f"{name} must be positive, got {v}")
    return chk


def _nonneg(name):
    def chk(v):
        if v < 0:
            raise ConfigError(f"{name} must be >= 0, got {v}")
    return chk


def _choice(name, options):
    def chk(v):
        if v not in options:
            raise ConfigError(f"{name} must be one of {options}, got {v!r}")
    return chk


SCHEMA: dict[str, dict[str, _Key]] = {
    "lattice": {
        "geometry": _Key(str, "square", _choice("lattice.geometry", ("square", "triangular", "hexagonal"))),
        "l1": _Key(int, 2, _positive("lattice.l1")),
        "l2": _Key(int, 4, _positive("lattice.l2")),
        "boundary1": _Key(str, "open", _choice("lattice.boundary1", ("open", "periodic"))),
        "boundary2": _Key(str, "periodic", _choice("lattice.boundary2", ("open", "periodic"))),
    },
    "hamiltonian": {
        "j1": _Key(float, 1.0),
        "j2": _Key(float, 0.4),
    },
    "circuit": {
        "depth": _Key(int, 8, _positive("circuit.depth")),
        "dimer_pattern": _Key(str, "auto", _choice(
            "circuit.dimer_pattern", ("auto", "rows", "columns", "diagonal", "cells"))),
        "symmetry": _Key(str, "none", _choice(
            "circuit.symmetry", ("none", "translations", "point_group", "full"))),
        "irrep": _Key(str, "trivial"),
    },
    "optimizer": {
        "method": _Key(str, "sgd", _choice("optimizer.method", ("sgd", "sr"))),
        "eta": _Key(float, 0.1, _positive("optimizer.eta")),
        "max_steps": _Key(int, 4000, _positive("optimizer.max_steps")),
        "window": _Key(int, 300, _positive("optimizer.window")),
        "stab_tol": _Key(float, 0.005, _positive("optimizer.stab_tol")),
        "tail": _Key(int, 1000, _positive("optimizer.tail")),
        "restarts": _Key(int, 10, _positive("optimizer.restarts")),
        "sr_beta": _Key(float, 0.01, _nonneg("optimizer.sr_beta")),
        "init_scale": _Key(float, 0.1, _positive("optimizer.init_scale")),
        "fidelity_mode": _Key(str, "auto", _choice(
            "optimizer.fidelity_mode", ("auto", "raw", "projected"))),
    },
    "shots": {
        "mode": _Key(str, "hadamard_bernoulli", _choice(
            "shots.mode", ("exact", "gaussian_surrogate", "hadamard_bernoulli"))),
        "ns": _Key(int, 16, _positive("shots.ns")),
        "sample_metric": _Key(_parse_bool, True),
    },
    "thermal": {
        "beta": _Key(float, 4.0, _positive("thermal.beta")),
        "proposal_scale": _Key(float, 0.2, _positive("thermal.proposal_scale")),
        "chain_length": _Key(int, 20000, _positive("thermal.chain_length")),
        "burn_in_fraction": _Key(float, 0.2, _nonneg("thermal.burn_in_fraction")),
        "thinning": _Key(int, 10, _positive("thermal.thinning")),
        "tune": _Key(_parse_bool, True),
    },
    "sweep": {
        "ns_grid": _Key(_parse_int_list, ()),
        "eta_grid": _Key(_parse_float_list, ()),
        "beta_grid": _Key(_parse_float_list, ()),
        "l_grid": _Key(_parse_int_list, ()),
        "depth_grid": _Key(_parse_int_list, ()),
        "j2_grid": _Key(_parse_float_list, ()),
    },
    "run": {
        "seed": _Key(int, 1234),
        "out_dir": _Key(str, "."),
        "workers": _Key(int, 1, _positive("run.workers")),
        "allow_large": _Key(_parse_bool, False),
        "log_every": _Key(int, 10, _positive("run.log_every")),
        "max_qubits": _Key(int, 16, _positive("run.max_qubits")),
    },
}


class Config:
    """Normalized configuration: every schema key resolved to a typed value."""

    def __init__(self, values: dict[str, dict[str, object]]):
        self.values = values

    def __getitem__(self, section: str) -> dict[str, object]:
        return self.values[section]

    def __eq__(self, other) -> bool:
        return isinstance(other, Config) and self.values == other.values

    def replace(self, section: str, key: str, raw: str) -> "Config":
        """New Config with one key re-parsed from its string form."""
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError(f"unknown config key [{section}] {key}")
        spec = SCHEMA[section][key]
        try:
            value = spec.parse(raw)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad value for [{section}] {key}: {exc}") from exc
        if spec.check:
            spec.check(value)
        values = {s: dict(kv) for s, kv in self.values.items()}
        values[section][key] = value
        return Config(values)

    def to_ini(self) -> str:
        buf = io.StringIO()
        for section in SCHEMA:
            buf.write(f"[{section}]\n")
            for key in SCHEMA[section]:
                buf.write(f"{key} = {_fmt(self.values[section][key])}\n")
            buf.write("\n")
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(self.values, sort_keys=True, default=list)

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]

    # -- domain object builders -------------------------------------------
    def lattice_spec(self, l1: int | None = None, l2: int | None = None) -> LatticeSpec:
        lat = self.values["lattice"]
        return LatticeSpec(
            geometry=lat["geometry"],
            extents=(l1 or lat["l1"], l2 or lat["l2"]),
            boundary=(lat["boundary1"], lat["boundary2"]),
        )

    def hamiltonian(self, spec: LatticeSpec | None = None,
                    j2: float | None = None) -> HamiltonianSpec:
        spec = spec or self.lattice_spec()
        ham = self.values["hamiltonian"]
        return HamiltonianSpec(build_lattice(spec), j1=ham["j1"],
                               j2=ham["j2"] if j2 is None else j2)

    def circuit(self, spec: LatticeSpec | None = None,
                depth: int | None = None) -> Circuit:
        spec = spec or self.lattice_spec()
        circ = self.values["circuit"]
        pairing = default_dimer_pairing(spec, circ["dimer_pattern"])
        return Circuit.from_layers(spec.n_sites, checkerboard_layers(spec),
                                   depth or circ["depth"], pairing)

    def projector(self, spec: LatticeSpec | None = None,
                  symmetry: str | None = None) -> SymmetryProjector:
        spec = spec or self.lattice_spec()
        circ = self.values["circuit"]
        sym = circ["symmetry"] if symmetry is None else symmetry
        if sym == "none":
            return SymmetryProjector.identity(spec.n_sites)
        return SymmetryProjector(symmetry_group(spec, sym, circ["irrep"]))

    def shot_config(self, ns: int | None = None, mode: str | None = None) -> ShotConfig:
        sh = self.values["shots"]
        return ShotConfig(n_shots=ns or sh["ns"], mode=mode or sh["mode"],
                          sample_metric=sh["sample_metric"])

    def optimizer_config(self, *, seed: int, ns: int | None = None,
                         eta: float | None = None, method: str | None = None,
                         mode: str | None = None) -> OptimizerConfig:
        o = self.values["optimizer"]
        return OptimizerConfig(
            method=method or o["method"],
            eta=eta or o["eta"],
            max_steps=o["max_steps"],
            shot_config=self.shot_config(ns=ns, mode=mode),
            sr_beta=o["sr_beta"],
            restarts=o["restarts"],
            window=o["window"],
            stab_tol=o["stab_tol"],
            tail=o["tail"],
            init_scale=o["init_scale"],
            seed=seed,
            fidelity_mode=o["fidelity_mode"],
        )

    def thermal_config(self, *, seed: int, beta: float | None = None) -> ThermalConfig:
        t = self.values["thermal"]
        return ThermalConfig(
            beta=beta or t["beta"],
            proposal_scale=t["proposal_scale"],
            chain_length=t["chain_length"],
            burn_in=int(t["burn_in_fraction"] * t["chain_length"]),
            thinning=t["thinning"],
            seed=seed,
            tune=t["tune"],
        )


def default_config() -> Config:
    return Config({s: {k: spec.default for k, spec in keys.items()}
                   for s, keys in SCHEMA.items()})


def _suggest(name: str, options) -> str:
    close = difflib.get_close_matches(name, list(options), n=1)
    return f"; did you mean {close[0]!r}?" if close else ""


def parse_config(text: str, base: Config | None = None) -> Config:
    """Parse INI text into a normalized Config; unknown keys are errors.

    Values not present in the text fall back to `base` (or schema defaults).
    """
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from exc
    if base is None:
        values = {s: {k: spec.default for k, spec in keys.items()}
                  for s, keys in SCHEMA.items()}
    else:
        values = {s: dict(kv) for s, kv in base.values.items()}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(
                f"unknown config section [{section}]{_suggest(section, SCHEMA)}")
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(
                    f"unknown key {key!r} in [{section}]"
                    f"{_suggest(key, SCHEMA[section])}")
            spec = SCHEMA[section][key]
            try:
                value = spec.parse(raw)
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"bad value for [{section}] {key}: {exc}") from exc
            if spec.check:
                spec.check(value)
            values[section][key] = value
    return Config(values)


def load_config(path: str) -> Config:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
