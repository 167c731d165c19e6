"""
Configuration parsing, result records, CSV output and the ``phs`` command.

Usage::

    phs check|simulate|spectrum|deficiency|green CONFIG.json [--n N] [--dt X]
        [--T X] [--out PATH] [--seed N] [--tol-rank X] [--tol-psd X] [--tol-eq X]

The JSON result record is printed to stdout. ``simulate`` and ``spectrum``
also write a CSV file when ``--out`` is given. Exit status is 0 when the
command ran (failed verdicts included), 1 on parse or runtime errors and 2
on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import discretization as disc
from .boundary_calculus import theta
from .errors import ConfigError, PHSError
from .numerics import Tolerances, operator_norm
from .phs_model import (
    GridFunction,
    HamiltonianField,
    PHSystem,
    deficiency_basis,
    green_identity_residual,
    smooth_random_function,
    validate_system,
)

COMMANDS = ("check", "simulate", "spectrum", "deficiency", "green")
INITIAL_KINDS = ("gaussian", "sine", "constant", "bump")


# {{{ config parsing


@dataclass(frozen=True)
class SimulateSpec:
    n: int | None = None
    dt: float | None = None
    T: float | None = None
    initial: dict = field(default_factory=lambda: {"kind": "gaussian"})


@dataclass(frozen=True)
class SystemConfig:
    system: PHSystem
    simulate: SimulateSpec | None
    document: dict


def _real(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {type(value).__name__}", path=path)
    if not math.isfinite(value):
        raise ConfigError("number must be finite", path=path)
    return float(value)


def _complex(value, path: str) -> complex:
    """``[re, im]`` pair; a bare real number is accepted as ``[re, 0]``."""
    if isinstance(value, list):
        if len(value) != 2:
            raise ConfigError(f"complex number must be an [re, im] pair, got {len(value)} entries", path=path)
        return complex(_real(value[0], f"{path}[0]"), _real(value[1], f"{path}[1]"))
    return complex(_real(value, path), 0.0)


def _matrix(value, shape: tuple[int, int], path: str) -> np.ndarray:
    rows, cols = shape
    if not isinstance(value, list) or len(value) != rows:
        got = len(value) if isinstance(value, list) else type(value).__name__
        raise ConfigError(f"expected {rows} rows, got {got}", path=path)
    out = np.empty(shape, dtype=np.complex128)
    for i, row in enumerate(value):
        if not isinstance(row, list) or len(row) != cols:
            got = len(row) if isinstance(row, list) else type(row).__name__
            raise ConfigError(f"expected {cols} columns, got {got}", path=f"{path}[{i}]")
        for j, entry in enumerate(row):
            out[i, j] = _complex(entry, f"{path}[{i}][{j}]")
    return out


def _require(doc: dict, key: str, path: str = ""):
    if key not in doc:
        raise ConfigError(f"missing key {key!r}", path=f"{path}{key}" if path else key)
    return doc[key]


def _hamiltonian(doc, d: int) -> HamiltonianField:
    path = "hamiltonian"
    if not isinstance(doc, dict):
        raise ConfigError("expected an object", path=path)
    kind = _require(doc, "kind", "hamiltonian.")
    if kind not in ("constant", "cells"):
        raise ConfigError(f"kind must be 'constant' or 'cells', got {kind!r}", path=f"{path}.kind")
    values = _require(doc, "values", "hamiltonian.")
    if not isinstance(values, list) or not values:
        raise ConfigError("expected a non-empty list of matrices", path=f"{path}.values")
    if kind == "constant" and len(values) != 1:
        raise ConfigError("a constant Hamiltonian has exactly one value", path=f"{path}.values")
    mats = [_matrix(v, (d, d), f"{path}.values[{i}]") for i, v in enumerate(values)]
    m = _real(_require(doc, "m", "hamiltonian."), f"{path}.m")
    M = _real(_require(doc, "M", "hamiltonian."), f"{path}.M")
    return HamiltonianField(kind, tuple(mats), m, M)


def _simulate_spec(doc) -> SimulateSpec:
    path = "simulate"
    if not isinstance(doc, dict):
        raise ConfigError("expected an object", path=path)
    n = doc.get("n")
    if n is not None and (isinstance(n, bool) or not isinstance(n, int) or n < disc.MIN_CELLS):
        raise ConfigError(f"n must be an integer >= {disc.MIN_CELLS}", path=f"{path}.n")
    dt = _real(doc["dt"], f"{path}.dt") if "dt" in doc else None
    T = _real(doc["T"], f"{path}.T") if "T" in doc else None
    if dt is not None and dt <= 0:
        raise ConfigError("dt must be positive", path=f"{path}.dt")
    if T is not None and T <= 0:
        raise ConfigError("T must be positive", path=f"{path}.T")
    initial = doc.get("initial", {"kind": "gaussian"})
    if not isinstance(initial, dict) or initial.get("kind") not in INITIAL_KINDS:
        raise ConfigError(f"initial.kind must be one of {INITIAL_KINDS}", path=f"{path}.initial.kind")
    return SimulateSpec(n, dt, T, initial)


def parse_config(text: bytes | str) -> SystemConfig:
    """Parse and validate a system configuration document.

    Raises
    ------
    ConfigError
        With a byte offset for malformed JSON, or a key path for structural
        and semantic problems. Operator assumptions (skewness, Hermiticity,
        admissibility) are not checked here; see ``validate_system``.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ConfigError("configuration is not valid UTF-8", offset=exc.start) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise ConfigError(f"invalid JSON: {exc.msg}", offset=offset) from exc
    if not isinstance(doc, dict):
        raise ConfigError("top level must be a JSON object", path="$")

    d = _require(doc, "d")
    if isinstance(d, bool) or not isinstance(d, int) or d < 1:
        raise ConfigError("d must be a positive integer", path="d")
    interval = _require(doc, "interval")
    if not isinstance(interval, list) or len(interval) != 2:
        raise ConfigError("interval must be [a, b]", path="interval")
    a = _real(interval[0], "interval[0]")
    b = _real(interval[1], "interval[1]")
    if not a < b:
        raise ConfigError("interval must satisfy a < b", path="interval")
    P0 = _matrix(_require(doc, "P0"), (d, d), "P0")
    P1 = _matrix(_require(doc, "P1"), (d, d), "P1")
    W = _matrix(_require(doc, "W"), (d, 2 * d), "W")
    H = _hamiltonian(_require(doc, "hamiltonian"), d)
    sim = _simulate_spec(doc["simulate"]) if "simulate" in doc else None
    return SystemConfig(PHSystem(d, a, b, P0, P1, H, W), sim, doc)


def load_config(path: str | Path) -> SystemConfig:
    return parse_config(Path(path).read_bytes())


# }}}


# {{{ output


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(header: Sequence[str], rows: Sequence[Sequence[Any]], path: str | Path) -> None:
    """Write a header row and data rows; floats get 17 significant digits.

    Raises
    ------
    ValueError
        If some row length differs from the header length.
    OSError
        If the file cannot be written; the message names the path.
    """
    width = len(header)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ValueError(f"row {i} has {len(row)} fields, expected {width}")
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _pairs(M) -> list:
    M = np.atleast_2d(np.asarray(M, dtype=np.complex128))
    return [[[float(z.real) + 0.0, float(z.imag) + 0.0] for z in row] for row in M]


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value) + 0.0
        return v if math.isfinite(v) else str(v)
    return value


@dataclass
class ResultRecord:
    command: str
    verdicts: dict = field(default_factory=dict)
    scalars: dict = field(default_factory=dict)
    data: dict = field(default_factory=dict)
    settings: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return _jsonable(
            {
                "command": self.command,
                "verdicts": self.verdicts,
                "scalars": self.scalars,
                "data": self.data,
                "settings": self.settings,
                "outputs": self.outputs,
            }
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


# }}}


# {{{ commands


@dataclass(frozen=True)
class Flags:
    n: int | None = None
    dt: float | None = None
    T: float | None = None
    out: str | None = None
    seed: int = 0
    pairs: int = 8
    states: bool = False
    tol: Tolerances = Tolerances()


def _settings(flags: Flags, **resolved) -> dict:
    tol = flags.tol
    out = {
        "seed": flags.seed,
        "tol": {"rank_rel": tol.rank_rel, "psd_abs": tol.psd_abs, "eq_abs": tol.eq_abs},
    }
    out.update(resolved)
    return out


def _initial_state(spec: SimulateSpec | None, sys: PHSystem, n: int) -> GridFunction:
    init = dict(spec.initial) if spec is not None else {"kind": "gaussian"}
    kind = init.pop("kind")
    amp = init.pop("amplitude", 1.0)
    amplitude = np.array(
        [_complex(v, f"simulate.initial.amplitude[{i}]") for i, v in enumerate(amp)]
        if isinstance(amp, list) and amp and isinstance(amp[0], list)
        else np.broadcast_to(np.asarray(amp, dtype=float), (sys.d,)),
        dtype=np.complex128,
    )
    if amplitude.shape != (sys.d,):
        raise ConfigError(f"amplitude must have {sys.d} entries", path="simulate.initial.amplitude")
    mid = 0.5 * (sys.a + sys.b)
    L = sys.b - sys.a
    if kind == "gaussian":
        fn = disc.gaussian(init.get("center", mid), init.get("width", 0.1 * L), amplitude)
    elif kind == "bump":
        fn = disc.bump(init.get("center", mid), init.get("halfwidth", 0.3 * L), amplitude)
    elif kind == "sine":
        fn = disc.sine(sys.a, sys.b, init.get("mode", 1.0), amplitude)
    else:
        fn = disc.constant(amplitude)
    return GridFunction.sample(fn, sys, n)


def _check(cfg: SystemConfig, flags: Flags) -> ResultRecord:
    sys, tol = cfg.system, flags.tol
    n = flags.n or 64
    verdict = validate_system(sys, tol)
    rec = ResultRecord("check", settings=_settings(flags, n=n))
    rec.verdicts = verdict.as_dict()
    rec.verdicts["admissible"] = verdict.ok
    rec.data["messages"] = list(verdict.messages)
    try:
        K = theta(sys.W, tol)
        rec.data["K"] = _pairs(K)
        rec.scalars["norm_K"] = operator_norm(K)
    except PHSError as exc:
        rec.data["K"] = None
        rec.data["theta_error"] = str(exc)
    if verdict.operator_ok and verdict.w.rank_ok:
        G = disc.assemble(sys, n, tol, check=False)
        margin = disc.dissipativity_margin(G)
        rec.scalars["margin"] = margin
        rec.verdicts["discrete_dissipative"] = margin <= 1e-8
    return rec


def _simulate(cfg: SystemConfig, flags: Flags) -> ResultRecord:
    sys, tol, spec = cfg.system, flags.tol, cfg.simulate
    n = flags.n or (spec.n if spec and spec.n else 200)
    h = (sys.b - sys.a) / n
    dt = flags.dt or (spec.dt if spec and spec.dt else 0.5 * h)
    T = flags.T or (spec.T if spec and spec.T else 1.0)
    G = disc.assemble(sys, n, tol, check=False)
    x0 = _initial_state(spec, sys, n)
    traj = disc.simulate(G, x0, T, dt, keep_states=flags.states)
    rec = ResultRecord("simulate", settings=_settings(flags, n=n, dt=dt, T=T))
    rec.verdicts["admissible"] = validate_system(sys, tol).ok
    rec.verdicts["energy_monotone"] = disc.max_energy_increase(traj) <= 10 * tol.eq_abs
    rec.scalars.update(
        {
            "margin": disc.dissipativity_margin(G),
            "energy_initial": traj.energies[0],
            "energy_final": traj.energies[-1],
            "max_energy_increase": disc.max_energy_increase(traj),
            "power_balance_residual": disc.power_balance_residual(traj) if len(traj) >= 3 else 0.0,
            "projection_defect": traj.projection_defect,
            "steps": len(traj) - 1,
        }
    )
    if flags.out:
        header = ["t", "energy", "boundary_power"]
        rows = [list(r) for r in zip(traj.times, traj.energies, traj.boundary_powers)]
        if flags.states:
            for i in range(n + 1):
                for c in range(sys.d):
                    header += [f"x{i}_{c}_re", f"x{i}_{c}_im"]
            for row, state in zip(rows, traj.states):
                flat = state.values.reshape(-1)
                row.extend(v for z in flat for v in (z.real, z.imag))
        write_csv(header, rows, flags.out)
        rec.outputs.append(str(flags.out))
    return rec


def _spectrum(cfg: SystemConfig, flags: Flags) -> ResultRecord:
    sys, tol = cfg.system, flags.tol
    n = flags.n or 64
    G = disc.assemble(sys, n, tol, check=False)
    ev = disc.spectrum(G)
    rec = ResultRecord("spectrum", settings=_settings(flags, n=n))
    margin = disc.dissipativity_margin(G)
    rec.scalars.update({"margin": margin, "max_real_part": float(ev.real.max()), "count": ev.size})
    rec.verdicts["admissible"] = validate_system(sys, tol).ok
    rec.verdicts["spectrum_in_left_half_plane"] = bool(ev.real.max() <= max(margin, 0.0) + tol.eq_abs)
    if flags.out:
        write_csv(["re", "im"], [[z.real, z.imag] for z in ev], flags.out)
        rec.outputs.append(str(flags.out))
    return rec


def _deficiency(cfg: SystemConfig, flags: Flags) -> ResultRecord:
    sys, tol = cfg.system, flags.tol
    n = flags.n or 200
    plus = deficiency_basis(sys, +1, n, tol)
    minus = deficiency_basis(sys, -1, n, tol)
    rec = ResultRecord("deficiency", settings=_settings(flags, n=n))
    rec.scalars.update(
        {
            "dim_plus": plus.dim,
            "dim_minus": minus.dim,
            "residual_plus": float(plus.residuals.max()),
            "residual_minus": float(minus.residuals.max()),
        }
    )
    rec.verdicts["equal_dimensions"] = plus.dim == minus.dim
    rec.data["endpoints_plus"] = _pairs(plus.endpoint_matrix)
    rec.data["endpoints_minus"] = _pairs(minus.endpoint_matrix)
    return rec


def green_sweep(sys: PHSystem, n: int, pairs: int, seed: int) -> tuple[float, float]:
    """Max Green-identity residual over ``pairs`` random smooth pairs at ``n`` and ``2n`` cells."""
    rng = np.random.default_rng(seed)
    fns = [
        (smooth_random_function(rng, sys.d, sys.a, sys.b), smooth_random_function(rng, sys.d, sys.a, sys.b))
        for _ in range(pairs)
    ]
    out = []
    for m in (n, 2 * n):
        res = [
            green_identity_residual(GridFunction.sample(f, sys, m), GridFunction.sample(g, sys, m), sys)
            for f, g in fns
        ]
        out.append(max(res))
    return out[0], out[1]


def _green(cfg: SystemConfig, flags: Flags) -> ResultRecord:
    sys = cfg.system
    n = flags.n or 64
    coarse, fine = green_sweep(sys, n, flags.pairs, flags.seed)
    rec = ResultRecord("green", settings=_settings(flags, n=n, pairs=flags.pairs))
    ratio = coarse / fine if fine > 0 else float("inf")
    rec.scalars.update({"residual_coarse": coarse, "residual_fine": fine, "ratio": ratio})
    rec.verdicts["second_order"] = 3.2 <= ratio <= 4.8
    return rec


_RUNNERS = {
    "check": _check,
    "simulate": _simulate,
    "spectrum": _spectrum,
    "deficiency": _deficiency,
    "green": _green,
}


def run_command(name: str, cfg: SystemConfig, flags: Flags = Flags()) -> ResultRecord:
    if name not in _RUNNERS:
        raise ValueError(f"unknown command {name!r}")
    return _RUNNERS[name](cfg, flags)


# }}}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="phs",
        description="Classify and simulate boundary conditions of 1-D port-Hamiltonian systems.",
    )
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("config", help="path to the JSON system configuration")
    p.add_argument("--n", type=int, help="number of grid cells")
    p.add_argument("--dt", type=float, help="time step (simulate)")
    p.add_argument("--T", type=float, help="final time (simulate)")
    p.add_argument("--out", help="CSV output path (simulate, spectrum)")
    p.add_argument("--seed", type=int, default=0, help="random seed (green)")
    p.add_argument("--pairs", type=int, default=8, help="number of random pairs (green)")
    p.add_argument("--states", action="store_true", help="append flattened states to the trajectory CSV")
    p.add_argument("--tol-rank", type=float, default=Tolerances.rank_rel)
    p.add_argument("--tol-psd", type=float, default=Tolerances.psd_abs)
    p.add_argument("--tol-eq", type=float, default=Tolerances.eq_abs)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.n is not None and args.n < disc.MIN_CELLS:
        parser.error(f"--n must be at least {disc.MIN_CELLS}")
    for name in ("dt", "T"):
        value = getattr(args, name)
        if value is not None and not value > 0:
            parser.error(f"--{name} must be positive")
    if args.pairs < 1:
        parser.error("--pairs must be positive")
    try:
        tol = Tolerances(args.tol_rank, args.tol_psd, args.tol_eq)
    except ValueError as exc:
        parser.error(str(exc))
    flags = Flags(args.n, args.dt, args.T, args.out, args.seed, args.pairs, args.states, tol)
    try:
        cfg = load_config(args.config)
        record = run_command(args.command, cfg, flags)
    except (PHSError, OSError, ValueError) as exc:
        print(f"phs: error: {exc}", file=sys.stderr)
        return 1
    print(record.to_json())
    return 0


if __name__ == "__main__":
    sys.exit(main())
