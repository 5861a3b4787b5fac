"""Batch front end: JSON config in, CSV or JSON sweep results out.

Exit codes: 0 success, 1 invalid configuration, 2 numerical
non-convergence (or a failed verification check), 3 file I/O.

Quantities in the config carry their own unit declarations and are
converted once, at load time, into the configured unit system.  All
output columns are in that unit system.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .atoms import AtomSpec, downward_channels
from .constants import (
    BOHR_M,
    DEBYE_CM,
    EA0_CM,
    ELEMENTARY_CHARGE,
    HARTREE_J,
    PhysicalConstants,
    by_name,
)
from .errors import ConfigInvalid, InsideSphere, NearResonance, PlasmonResonance, VdwError
from .greens import PermittivityModel, SphereSpec
from .potentials import (
    METHODS,
    POWER,
    PV,
    QuadSettings,
    cp_small_sphere_off_resonant,
    cp_small_sphere_resonant,
    cp_sphere_breakdown,
    free_space_breakdown,
)

SCHEMA_VERSION = 1
MODES = ("two_atom", "cp_sphere", "verify")
EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED, EXIT_IO = 0, 1, 2, 3

TWO_ATOM_COLUMNS = ("r", "U_offres", "U_res_pv", "U_res_power", "U_total_pv", "U_total_power", "status")
CP_COLUMNS = ("r", "U_offres", "U_res", "U_total", "n_max_used")
CP_SMALL_COLUMNS = ("U_offres_small", "U_res_small", "U_total_small")

log = logging.getLogger("vdwcp")

# SI value of one unit of each declared input unit
_ENERGY_SI = {"hartree": HARTREE_J, "eV": ELEMENTARY_CHARGE, "J": 1.0}
_LENGTH_SI = {"bohr": BOHR_M, "m": 1.0, "nm": 1e-9, "angstrom": 1e-10}
_DIPOLE_SI = {"au": EA0_CM, "debye": DEBYE_CM, "C m": 1.0}
# the same units expressed in the atomic system
_ENERGY_AU = {k: v / HARTREE_J for k, v in _ENERGY_SI.items()}
_LENGTH_AU = {k: v / BOHR_M for k, v in _LENGTH_SI.items()}
_DIPOLE_AU = {k: v / EA0_CM for k, v in _DIPOLE_SI.items()}


def _factor(table_si, table_au, unit, unit_system, what):
    if unit not in table_si:
        raise ConfigInvalid(f"{what}: unknown unit {unit!r}; expected one of {sorted(table_si)}")
    return table_si[unit] if unit_system == "si" else table_au[unit]


# -- config records ---------------------------------------------------------------


@dataclass(frozen=True)
class AtomConfig:
    energies: tuple
    dipoles: tuple
    prepared_state: int = 0
    energy_unit: str = "hartree"
    dipole_unit: str = "au"

    def to_dict(self):
        return {
            "energies": list(self.energies),
            "dipoles": [list(row) for row in self.dipoles],
            "prepared_state": self.prepared_state,
            "energy_unit": self.energy_unit,
            "dipole_unit": self.dipole_unit,
        }

    @classmethod
    def from_dict(cls, d, where):
        _only(d, {"energies", "dipoles", "prepared_state", "energy_unit", "dipole_unit"}, where)
        try:
            energies = tuple(float(x) for x in _need(d, "energies", where))
            dipoles = tuple(tuple(float(x) for x in row) for row in _need(d, "dipoles", where))
        except (TypeError, ValueError) as exc:
            raise ConfigInvalid(f"{where}: energies/dipoles must be numeric ({exc})") from None
        return cls(energies, dipoles, _int(d.get("prepared_state", 0), f"{where}.prepared_state"),
                   str(d.get("energy_unit", "hartree")), str(d.get("dipole_unit", "au")))

    def build(self, unit_system, constants: PhysicalConstants, where) -> AtomSpec:
        fe = _factor(_ENERGY_SI, _ENERGY_AU, self.energy_unit, unit_system, f"{where}.energy_unit")
        fd = _factor(_DIPOLE_SI, _DIPOLE_AU, self.dipole_unit, unit_system, f"{where}.dipole_unit")
        try:
            return AtomSpec(tuple(e * fe for e in self.energies),
                            tuple(tuple(x * fd for x in row) for row in self.dipoles),
                            self.prepared_state)
        except ValueError as exc:
            raise ConfigInvalid(f"{where}: {exc}") from None


@dataclass(frozen=True)
class SphereConfig:
    """Sphere radius plus a Drude-Lorentz permittivity.

    Oscillators are ``(plasma, resonance, damping)`` given as photon
    energies ``hbar w`` in ``energy_unit``; ``plasma`` is ``hbar w_p``.
    """

    radius: float
    eps_inf: float = 1.0
    oscillators: tuple = ()
    length_unit: str = "bohr"
    energy_unit: str = "hartree"

    def to_dict(self):
        return {
            "radius": self.radius,
            "eps_inf": self.eps_inf,
            "oscillators": [list(o) for o in self.oscillators],
            "length_unit": self.length_unit,
            "energy_unit": self.energy_unit,
        }

    @classmethod
    def from_dict(cls, d, where="sphere"):
        _only(d, {"radius", "eps_inf", "oscillators", "length_unit", "energy_unit"}, where)
        osc = d.get("oscillators", [])
        try:
            osc = tuple(tuple(float(x) for x in o) for o in osc)
        except (TypeError, ValueError):
            raise ConfigInvalid(f"{where}.oscillators must be a list of numeric triples") from None
        if any(len(o) != 3 for o in osc):
            raise ConfigInvalid(f"{where}.oscillators entries need exactly 3 values")
        return cls(_float(_need(d, "radius", where), f"{where}.radius"),
                   _float(d.get("eps_inf", 1.0), f"{where}.eps_inf"), osc,
                   str(d.get("length_unit", "bohr")), str(d.get("energy_unit", "hartree")))

    def build(self, unit_system, constants: PhysicalConstants, where="sphere") -> SphereSpec:
        fl = _factor(_LENGTH_SI, _LENGTH_AU, self.length_unit, unit_system, f"{where}.length_unit")
        fe = _factor(_ENERGY_SI, _ENERGY_AU, self.energy_unit, unit_system, f"{where}.energy_unit")
        to_w = fe / constants.hbar
        try:
            material = PermittivityModel(
                tuple(((p * to_w) ** 2, w0 * to_w, g * to_w) for p, w0, g in self.oscillators),
                self.eps_inf)
            return SphereSpec(self.radius * fl, material)
        except ValueError as exc:
            raise ConfigInvalid(f"{where}: {exc}") from None


@dataclass(frozen=True)
class SweepConfig:
    mode: str
    unit_system: str = "atomic"
    atoms: tuple = ()
    sphere: SphereConfig | None = None
    r_min: float = 0.0
    r_max: float = 0.0
    points: int = 2
    spacing: str = "log"
    length_unit: str = "bohr"
    methods: tuple = METHODS
    output_path: str | None = None
    format: str = "csv"
    small_sphere: bool = False
    checks: tuple = ()
    eta: float = 1.0
    quadrature: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "checks", tuple(self.checks))
        self.validate()

    def validate(self):
        if self.mode not in MODES:
            raise ConfigInvalid(f"mode: expected one of {MODES}, got {self.mode!r}")
        if self.unit_system not in ("atomic", "si"):
            raise ConfigInvalid(f"unit_system: expected 'atomic' or 'si', got {self.unit_system!r}")
        if self.format not in ("csv", "json"):
            raise ConfigInvalid(f"output.format: expected 'csv' or 'json', got {self.format!r}")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ConfigInvalid(f"methods: expected a non-empty subset of {METHODS}, got {list(self.methods)}")
        unknown = set(self.quadrature) - {"rel_tol", "max_evaluations"}
        if unknown:
            raise ConfigInvalid(f"quadrature: unknown keys {sorted(unknown)}")
        if self.mode == "verify":
            if self.format != "json":
                raise ConfigInvalid("output.format: verify mode writes json")
            return
        if self.mode == "two_atom" and len(self.atoms) != 2:
            raise ConfigInvalid(f"atoms: two_atom mode needs exactly 2 atoms, got {len(self.atoms)}")
        if self.mode == "cp_sphere":
            if len(self.atoms) != 1:
                raise ConfigInvalid(f"atoms: cp_sphere mode needs exactly 1 atom, got {len(self.atoms)}")
            if self.sphere is None:
                raise ConfigInvalid("sphere: required in cp_sphere mode")
        if not (self.r_min > 0 and self.r_max > self.r_min and math.isfinite(self.r_max)):
            raise ConfigInvalid(f"sweep: need 0 < r_min < r_max, got r_min={self.r_min!r}, r_max={self.r_max!r}")
        if self.points < 2:
            raise ConfigInvalid(f"sweep.points: need >= 2, got {self.points}")
        if self.spacing not in ("linear", "log"):
            raise ConfigInvalid(f"sweep.spacing: expected 'linear' or 'log', got {self.spacing!r}")

    def to_dict(self):
        d = {"schema_version": SCHEMA_VERSION, "mode": self.mode, "unit_system": self.unit_system}
        if self.atoms:
            d["atoms"] = [a.to_dict() for a in self.atoms]
        if self.sphere is not None:
            d["sphere"] = self.sphere.to_dict()
        if self.mode != "verify":
            d["sweep"] = {"r_min": self.r_min, "r_max": self.r_max, "points": self.points,
                          "spacing": self.spacing, "length_unit": self.length_unit}
            d["methods"] = list(self.methods)
        if self.mode == "cp_sphere":
            d["small_sphere"] = self.small_sphere
        if self.mode == "verify":
            d["verify"] = {"checks": list(self.checks), "eta": self.eta}
        d["output"] = {"path": self.output_path, "format": self.format}
        if self.quadrature:
            d["quadrature"] = dict(self.quadrature)
        return d

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigInvalid("config root must be a JSON object")
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ConfigInvalid(f"schema_version: expected {SCHEMA_VERSION}, got {d.get('schema_version')!r}")
        _only(d, {"schema_version", "mode", "unit_system", "atoms", "sphere", "sweep", "methods",
                  "small_sphere", "verify", "output", "quadrature"}, "config")
        mode = _need(d, "mode", "config")
        atoms = d.get("atoms", [])
        if not isinstance(atoms, list):
            raise ConfigInvalid("atoms must be a list")
        kw = {
            "mode": mode,
            "unit_system": d.get("unit_system", "atomic"),
            "atoms": tuple(AtomConfig.from_dict(_obj(a, f"atoms[{i}]"), f"atoms[{i}]")
                           for i, a in enumerate(atoms)),
            "sphere": SphereConfig.from_dict(_obj(d["sphere"], "sphere")) if d.get("sphere") is not None else None,
            "small_sphere": bool(d.get("small_sphere", False)),
            "quadrature": dict(_obj(d.get("quadrature", {}), "quadrature")),
        }
        out = _obj(d.get("output", {}), "output")
        _only(out, {"path", "format"}, "output")
        kw["output_path"] = out.get("path")
        kw["format"] = out.get("format", "json" if mode == "verify" else "csv")
        if mode == "verify":
            v = _obj(d.get("verify", {}), "verify")
            _only(v, {"checks", "eta"}, "verify")
            kw["checks"] = tuple(v.get("checks", ()))
            kw["eta"] = _float(v.get("eta", 1.0), "verify.eta")
        else:
            sw = _obj(_need(d, "sweep", "config"), "sweep")
            _only(sw, {"r_min", "r_max", "points", "spacing", "length_unit"}, "sweep")
            kw["r_min"] = _float(_need(sw, "r_min", "sweep"), "sweep.r_min")
            kw["r_max"] = _float(_need(sw, "r_max", "sweep"), "sweep.r_max")
            kw["points"] = _int(_need(sw, "points", "sweep"), "sweep.points")
            kw["spacing"] = sw.get("spacing", "log")
            kw["length_unit"] = sw.get("length_unit", "bohr")
            kw["methods"] = tuple(d.get("methods", METHODS))
        return cls(**kw)

    def constants(self) -> PhysicalConstants:
        return by_name(self.unit_system)

    def grid(self) -> np.ndarray:
        """Sweep distances in internal length units."""
        fl = _factor(_LENGTH_SI, _LENGTH_AU, self.length_unit, self.unit_system, "sweep.length_unit")
        lo, hi = self.r_min * fl, self.r_max * fl
        if self.spacing == "log":
            return np.geomspace(lo, hi, self.points)
        return np.linspace(lo, hi, self.points)

    def quad_settings(self) -> QuadSettings:
        return QuadSettings(rel_tol=float(self.quadrature.get("rel_tol", 1e-10)),
                            max_evaluations=int(self.quadrature.get("max_evaluations", 1_000_000)),
                            raise_unconverged=True)


def _need(d, key, where):
    if key not in d:
        raise ConfigInvalid(f"{where}: missing required field {key!r}")
    return d[key]


def _only(d, allowed, where):
    extra = set(d) - allowed
    if extra:
        raise ConfigInvalid(f"{where}: unknown fields {sorted(extra)}")


def _obj(v, where):
    if not isinstance(v, dict):
        raise ConfigInvalid(f"{where} must be a JSON object")
    return v


def _float(v, where):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigInvalid(f"{where}: expected a number, got {v!r}")
    return float(v)


def _int(v, where):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigInvalid(f"{where}: expected an integer, got {v!r}")
    return v


def parse_config(text: str) -> SweepConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"config is not valid JSON: {exc}") from None
    return SweepConfig.from_dict(data)


def emit_config(config: SweepConfig) -> str:
    return json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n"


# -- sweeps ---------------------------------------------------------------------------


def _fmt(x) -> str:
    # repr of a Python float is the shortest string that round-trips
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    return repr(float(x))


def _pool_map(fn, items, threads):
    workers = (os.cpu_count() or 1) if threads == 0 else threads
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # map preserves input order, so rows come back sorted by r
        return list(pool.map(fn, items))


def run_two_atom_sweep(config: SweepConfig, threads: int = 1):
    """Rows of the two-atom sweep as ``(columns, rows, all_converged)``."""
    constants = config.constants()
    A = config.atoms[0].build(config.unit_system, constants, "atoms[0]")
    B = config.atoms[1].build(config.unit_system, constants, "atoms[1]")
    k, l = A.prepared_state, B.prepared_state
    if POWER in config.methods and l != 0 and downward_channels(B, constants):
        raise ConfigInvalid("methods: the power form needs atoms[1] in its ground state")
    quad = config.quad_settings()

    def point(r):
        return free_space_breakdown(A, k, B, l, float(r), constants, quad, config.methods)

    results = _pool_map(point, config.grid(), threads)
    cols = [c for c in TWO_ATOM_COLUMNS
            if not (c.endswith("_pv") and PV not in config.methods)
            and not (c.endswith("_power") and POWER not in config.methods)]
    rows = []
    for r, bd in zip(config.grid(), results):
        vals = {"r": r, "U_offres": bd.off_resonant,
                "U_res_pv": bd.resonant_total(PV), "U_res_power": bd.resonant_total(POWER),
                "U_total_pv": bd.total(PV), "U_total_power": bd.total(POWER),
                "status": "ok" if bd.converged else "unconverged"}
        rows.append({c: vals[c] for c in cols} | {"_breakdown": bd})
    return cols, rows, all(bd.converged for bd in results)


def run_cp_sphere_sweep(config: SweepConfig, threads: int = 1):
    """Rows of the atom-sphere sweep as ``(columns, rows, all_converged)``."""
    constants = config.constants()
    atom = config.atoms[0].build(config.unit_system, constants, "atoms[0]")
    sphere = config.sphere.build(config.unit_system, constants)
    grid = config.grid()
    if grid[0] <= sphere.radius:
        raise ConfigInvalid(f"sweep.r_min: must exceed the sphere radius ({sphere.radius!r} internal units)")
    quad = config.quad_settings()
    k = atom.prepared_state

    def point(r):
        r = float(r)
        bd, n_used = cp_sphere_breakdown(atom, k, r, sphere, constants, quad)
        small = None
        if config.small_sphere:
            try:
                off = cp_small_sphere_off_resonant(atom, k, r, sphere, quad, constants)
                converged = True
            except VdwError:
                off, converged = float("nan"), False
            res = sum(t.energy for t in cp_small_sphere_resonant(atom, k, r, sphere, constants))
            small = (off, res, converged)
        return bd, n_used, small

    results = _pool_map(point, grid, threads)
    cols = list(CP_COLUMNS) + (list(CP_SMALL_COLUMNS) if config.small_sphere else []) + ["status"]
    rows = []
    ok_all = True
    for r, (bd, n_used, small) in zip(grid, results):
        ok = bd.converged and (small is None or small[2])
        ok_all &= ok
        vals = {"r": r, "U_offres": bd.off_resonant, "U_res": bd.resonant_total(PV),
                "U_total": bd.total(PV), "n_max_used": n_used, "status": "ok" if ok else "unconverged"}
        if small is not None:
            vals.update(U_offres_small=small[0], U_res_small=small[1], U_total_small=small[0] + small[1])
        rows.append({c: vals[c] for c in cols} | {"_breakdown": bd})
    return cols, rows, ok_all


def run_verify_suite(config: SweepConfig):
    """Return ``(report_dicts, all_passed)``; unknown names are a config error."""
    from .verify import CHECKS, run_suite

    names = config.checks or CHECKS
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise ConfigInvalid(f"verify.checks: unknown {unknown}; valid names: {', '.join(CHECKS)}")
    constants = config.constants()
    atoms = None
    if config.atoms:
        if len(config.atoms) != 2:
            raise ConfigInvalid("atoms: verify mode takes either no atoms or exactly 2")
        atoms = tuple(a.build(config.unit_system, constants, f"atoms[{i}]")
                      for i, a in enumerate(config.atoms))
    reports = run_suite(names, constants, atoms, config.eta)
    return [r.to_dict() for r in reports], all(r.passed for r in reports)


def _timestamp():
    return _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def render_csv(cols, rows, config: SweepConfig, timestamp: bool) -> str:
    lines = []
    if timestamp:
        lines.append(f"# generated {_timestamp()}")
    lines.append(f"# mode={config.mode} unit_system={config.unit_system}")
    lines.append(",".join(cols))
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in cols))
    return "\n".join(lines) + "\n"


def render_json(payload: dict, timestamp: bool) -> str:
    if timestamp:
        payload = {"generated": _timestamp()} | payload
    return json.dumps(payload, indent=2, sort_keys=False) + "\n"


def _sweep_json(cols, rows, config):
    out = []
    for row in rows:
        entry = {c: row[c] for c in cols if c in ("r", "n_max_used", "status")}
        entry.update(row["_breakdown"].to_dict())
        out.append(entry)
    return {"schema_version": SCHEMA_VERSION, "mode": config.mode,
            "unit_system": config.unit_system, "rows": out}


# -- entry point ------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="vdwcp", description="Excited-atom van der Waals and Casimir-Polder sweeps.")
    p.add_argument("--config", required=True, help="JSON configuration file")
    p.add_argument("--output", help="output path (overrides output.path in the config)")
    p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp so reruns are byte-identical")
    p.add_argument("--threads", type=int, default=1, help="worker threads, 0 = one per CPU")
    p.add_argument("--quiet", action="store_true", help="only report errors")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO, format="%(levelname)s: %(message)s")
    if args.threads < 0:
        log.error("--threads must be >= 0")
        return EXIT_CONFIG
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        log.error("cannot read config: %s", exc)
        return EXIT_IO
    try:
        config = parse_config(text)
        out_path = args.output or config.output_path
        if not out_path:
            raise ConfigInvalid("output.path: no output path in config and no --output given")
        stamp = not args.no_timestamp
        if config.mode == "verify":
            reports, ok = run_verify_suite(config)
            body = render_json({"schema_version": SCHEMA_VERSION, "mode": "verify", "all_passed": ok,
                                "reports": reports}, stamp)
            status = EXIT_OK if ok else EXIT_NONCONVERGED
        else:
            runner = run_two_atom_sweep if config.mode == "two_atom" else run_cp_sphere_sweep
            cols, rows, ok = runner(config, args.threads)
            if config.format == "csv":
                body = render_csv(cols, rows, config, stamp)
            else:
                body = render_json(_sweep_json(cols, rows, config), stamp)
            status = EXIT_OK if ok else EXIT_NONCONVERGED
    except (ConfigInvalid, InsideSphere, NearResonance, PlasmonResonance) as exc:
        log.error("invalid configuration: %s", exc)
        return EXIT_CONFIG
    except VdwError as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NONCONVERGED
    except ValueError as exc:
        # a malformed model that slipped past validation
        log.error("invalid configuration: %s", exc)
        return EXIT_CONFIG
    try:
        with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(body)
    except OSError as exc:
        log.error("cannot write output: %s", exc)
        return EXIT_IO
    if status == EXIT_NONCONVERGED:
        log.warning("some points did not converge or some checks failed; see %s", out_path)
    else:
        log.info("wrote %s", out_path)
    return status


if __name__ == "__main__":
    sys.exit(main())
