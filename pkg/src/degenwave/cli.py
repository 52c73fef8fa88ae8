"""Command line entry point: configuration, experiment runs, file output.

Every subcommand writes ``{subcommand}_{mu_a}_{mu_b}.csv`` (or ``.json``) into
the output directory. Floats go out with 17 significant digits, and
identical configurations give byte-identical files.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import analysis
from .assembly import ConfigurationError, OperatorMatrices, Variant, assemble
from .coeff import left_coefficient, right_coefficient
from .mesh import CoupledMesh, build_coupled_mesh, build_graded_mesh, static_grading
from .spectral import (
    ResolventEvaluator,
    ResolventSample,
    frequency_cap,
    resolvent_peaks,
    resolvent_sweep,
    spectrum,
)
from .statics import StaticData, analytic_static_solution, solve_static
from .timestep import EnergySeries, prepare_smooth_initial_data, simulate

SUBCOMMANDS = ("simulate", "spectrum", "resolvent", "static-check", "report")
AUTO = "auto"
FLOAT_FMT = "%.16e"

_ALIASES = {"n": "n_per_string", "t_final": "T", "out": "output_dir"}


class ConfigError(ValueError):
    pass


def _default_data() -> dict:
    return {"f1": [0.0], "f2": [1.0], "g1": [0.0], "g2": [1.0]}


@dataclass(frozen=True)
class RunConfig:
    mu_a: float
    mu_b: float
    gamma: float = 1.0
    n_per_string: int = 256
    grading: float | str = AUTO
    dt: float | str = AUTO
    T: float = 200.0
    omega_min: float = 2.0
    omega_max: float | str = AUTO
    omega_samples: int = 64
    sample_every: int = 10
    seed: int = 0
    output_dir: str = "."
    # polynomial coefficients (increasing degree) of the data f1, f2, g1, g2
    data: dict = field(default_factory=_default_data)

    @property
    def variant(self) -> Variant:
        return Variant.for_mu_b(self.mu_b)

    def static_data(self) -> StaticData:
        return StaticData(**{k: np.asarray(v, dtype=float) for k, v in self.data.items()})

    def stem(self, subcommand: str) -> str:
        return f"{subcommand}_{self.mu_a:g}_{self.mu_b:g}"


def _number(key, value, kind=float):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    if kind is int:
        if float(value) != int(value):
            raise ConfigError(f"{key} must be an integer, got {value!r}")
        return int(value)
    value = float(value)
    if not np.isfinite(value):
        raise ConfigError(f"{key} must be finite")
    return value


def _auto_or_number(key, value):
    if value == AUTO or value is None:
        return AUTO
    return _number(key, value)


def _validate(raw: dict) -> RunConfig:
    raw = {_ALIASES.get(k, k): v for k, v in raw.items()}
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    for key in ("mu_a", "mu_b"):
        if key not in raw:
            raise ConfigError(f"missing required key {key}")

    mu_a = _number("mu_a", raw["mu_a"])
    mu_b = _number("mu_b", raw["mu_b"])
    if mu_a >= 1.0:
        raise ConfigError(
            f"mu_a = {mu_a} >= 1: strong degeneracy at the junction is not supported "
            "(the boundary control cannot reach the left string)"
        )
    if mu_a < 0.0:
        raise ConfigError(f"mu_a must be in [0, 1), got {mu_a}")
    if not 0.0 <= mu_b < 2.0:
        raise ConfigError(f"mu_b must be in [0, 2), got {mu_b}")

    kw = {"mu_a": mu_a, "mu_b": mu_b}
    if "gamma" in raw:
        kw["gamma"] = _number("gamma", raw["gamma"])
        if kw["gamma"] <= 0.0:
            raise ConfigError(f"gamma must be positive, got {kw['gamma']}")
    for key, lo in (("n_per_string", 2), ("omega_samples", 1), ("sample_every", 1)):
        if key in raw:
            kw[key] = _number(key, raw[key], int)
            if kw[key] < lo:
                raise ConfigError(f"{key} must be >= {lo}, got {kw[key]}")
    if "seed" in raw:
        kw["seed"] = _number("seed", raw["seed"], int)
    if "grading" in raw:
        kw["grading"] = _auto_or_number("grading", raw["grading"])
        if kw["grading"] != AUTO and kw["grading"] < 1.0:
            raise ConfigError(f"grading must be >= 1, got {kw['grading']}")
    if "dt" in raw:
        kw["dt"] = _auto_or_number("dt", raw["dt"])
        if kw["dt"] != AUTO and kw["dt"] <= 0.0:
            raise ConfigError(f"dt must be positive, got {kw['dt']}")
    if "T" in raw:
        kw["T"] = _number("T", raw["T"])
        if kw["T"] <= 0.0:
            raise ConfigError(f"T must be positive, got {kw['T']}")
    if "omega_min" in raw:
        kw["omega_min"] = _number("omega_min", raw["omega_min"])
        if kw["omega_min"] <= 0.0:
            raise ConfigError(f"omega_min must be positive, got {kw['omega_min']}")
    if "omega_max" in raw:
        kw["omega_max"] = _auto_or_number("omega_max", raw["omega_max"])
    omega_min = kw.get("omega_min", RunConfig.omega_min)
    if kw.get("omega_max", AUTO) != AUTO and kw["omega_max"] <= omega_min:
        raise ConfigError("omega_max must exceed omega_min")
    if "output_dir" in raw:
        if not isinstance(raw["output_dir"], str) or not raw["output_dir"]:
            raise ConfigError("output_dir must be a non-empty path")
        out = Path(raw["output_dir"])
        if out.exists() and not (out.is_dir() and os.access(out, os.W_OK)):
            raise ConfigError(f"output_dir {out} is not a writable directory")
        kw["output_dir"] = raw["output_dir"]
    if "data" in raw:
        data = raw["data"]
        if not isinstance(data, dict) or set(data) - {"f1", "f2", "g1", "g2"}:
            raise ConfigError("data must map a subset of f1, f2, g1, g2 to coefficient lists")
        full = {k: [0.0] for k in ("f1", "f2", "g1", "g2")}
        for k, v in data.items():
            coeffs = [v] if isinstance(v, (int, float)) else v
            if not isinstance(coeffs, list) or not coeffs:
                raise ConfigError(f"data.{k} must be a number or a list of coefficients")
            full[k] = [_number(f"data.{k}", c) for c in coeffs]
        kw["data"] = full
    return RunConfig(**kw)


def parse_config(text: str) -> RunConfig:
    """Parse a YAML (or JSON) mapping into a validated :class:`RunConfig`."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config: {exc}".replace("\n", " ")) from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a key-value mapping")
    return _validate(raw)


def serialize_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(dataclasses.asdict(cfg), sort_keys=True)


# ---------------------------------------------------------------- runs


def _mesh(cfg: RunConfig) -> CoupledMesh:
    grading = None if cfg.grading == AUTO else cfg.grading
    return build_coupled_mesh(cfg.n_per_string, cfg.mu_a, cfg.mu_b, grading)


def operator(cfg: RunConfig, mesh: CoupledMesh | None = None) -> OperatorMatrices:
    a, b = right_coefficient(cfg.mu_a), left_coefficient(cfg.mu_b)
    return assemble(mesh or _mesh(cfg), a, b, cfg.gamma)


def _dt(cfg: RunConfig):
    return None if cfg.dt == AUTO else cfg.dt


def _write_csv(path: Path, header: str, columns) -> None:
    data = np.column_stack(columns)
    with path.open("w", newline="\n") as fh:
        np.savetxt(fh, data, fmt=FLOAT_FMT, delimiter=",", header=header, comments="")


def _write_json(path: Path, obj) -> None:
    with path.open("w", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def run_simulate(cfg: RunConfig, out: Path) -> Path:
    m = operator(cfg)
    U0, _ = prepare_smooth_initial_data(m, cfg.static_data())
    series = simulate(m, U0, _dt(cfg), cfg.T, sample_every=cfg.sample_every)
    path = out / f"{cfg.stem('simulate')}.csv"
    series.to_csv(path)
    return path


def run_spectrum(cfg: RunConfig, out: Path) -> Path:
    report = spectrum(operator(cfg))
    path = out / f"{cfg.stem('spectrum')}.csv"
    report.to_csv(path)
    return path


def _omega_max(cfg: RunConfig, m: OperatorMatrices) -> float:
    return frequency_cap(m) if cfg.omega_max == AUTO else cfg.omega_max


def run_resolvent(cfg: RunConfig, out: Path) -> Path:
    """Log-spaced sweep plus the resonance peaks in the same band.

    The third column flags peak samples; growth fits use those.
    """
    m = operator(cfg)
    cap = frequency_cap(m)
    w_max = _omega_max(cfg, m)
    if w_max > cap:
        warnings.warn(f"omega_max = {w_max:.4g} exceeds the resolved band {cap:.4g}; truncating")
        w_max = cap
    ev = ResolventEvaluator(m)
    sweep = resolvent_sweep(m, cfg.omega_min, w_max, cfg.omega_samples, cap=cap, evaluator=ev)
    peaks = resolvent_peaks(m, cfg.omega_min, w_max, evaluator=ev)
    rows = sorted(
        [(s.omega, s.norm, 0.0) for s in sweep] + [(s.omega, s.norm, 1.0) for s in peaks]
    )
    path = out / f"{cfg.stem('resolvent')}.csv"
    arr = np.array(rows, dtype=float).reshape(-1, 3)
    with path.open("w", newline="\n") as fh:
        fh.write("omega,resolvent_norm,peak\n")
        for w, v, p in arr:
            fh.write(f"{w:.16e},{v:.16e},{int(p)}\n")
    return path


def run_static_check(cfg: RunConfig, out: Path) -> Path:
    """Nodal comparison of the discrete stationary solution with the closed form."""
    g_left = static_grading(cfg.mu_b) if cfg.grading == AUTO else cfg.grading
    g_right = static_grading(cfg.mu_a) if cfg.grading == AUTO else cfg.grading
    mesh = CoupledMesh(
        left=build_graded_mesh(-1.0, 0.0, cfg.n_per_string, g_left),
        right=build_graded_mesh(0.0, 1.0, cfg.n_per_string, g_right),
    )
    m = operator(cfg, mesh)
    F = cfg.static_data()
    Uh = solve_static(m, F)
    exact = analytic_static_solution(m.a, m.b, m.gamma, m.variant, F, m.x)
    err = np.abs(Uh.p - exact)
    path = out / f"{cfg.stem('static-check')}.csv"
    _write_csv(path, "x,numeric,exact,abs_error", [m.x, Uh.p, exact, err])
    return path


def _read_resolvent(path: Path) -> list[ResolventSample]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return [ResolventSample(float(w), float(v)) for w, v, p in data if p == 1.0]


def run_report(cfg: RunConfig, out: Path) -> Path:
    """Combine the energy and resolvent fits; missing inputs are computed first."""
    sim_path = out / f"{cfg.stem('simulate')}.csv"
    res_path = out / f"{cfg.stem('resolvent')}.csv"
    if not sim_path.exists():
        run_simulate(cfg, out)
    if not res_path.exists():
        run_resolvent(cfg, out)

    m = operator(cfg)
    _, graph = prepare_smooth_initial_data(m, cfg.static_data())
    data = np.loadtxt(sim_path, delimiter=",", skiprows=1, ndmin=2)
    series = EnergySeries(times=data[:, 0], energies=data[:, 1], boundary_dissipation=data[:, 2])
    decay = analysis.decay_report(series, cfg.mu_a, graph)
    resolvent = analysis.resolvent_report(_read_resolvent(res_path), cfg.mu_a)
    table = analysis.summary(cfg.mu_a, cfg.mu_b, cfg.variant.value, decay, resolvent)
    table["decay_resolvent_ratio"] = analysis.decay_resolvent_ratio(decay, resolvent) if decay.fit else None
    path = out / f"{cfg.stem('report')}.json"
    _write_json(path, table)
    return path


_RUNNERS = {
    "simulate": run_simulate,
    "spectrum": run_spectrum,
    "resolvent": run_resolvent,
    "static-check": run_static_check,
    "report": run_report,
}


def run_subcommand(cmd: str, cfg: RunConfig) -> Path:
    if cmd not in _RUNNERS:
        raise ConfigError(f"unknown subcommand {cmd!r}")
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return _RUNNERS[cmd](cfg, out)


# ---------------------------------------------------------------- argv


_FLAGS = (
    ("--mu-a", "mu_a", float),
    ("--mu-b", "mu_b", float),
    ("--gamma", "gamma", float),
    ("--n", "n_per_string", int),
    ("--grading", "grading", str),
    ("--dt", "dt", str),
    ("--t-final", "T", float),
    ("--omega-min", "omega_min", float),
    ("--omega-max", "omega_max", str),
    ("--omega-samples", "omega_samples", int),
    ("--sample-every", "sample_every", int),
    ("--seed", "seed", int),
    ("--out", "output_dir", str),
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="degenwave", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="YAML or JSON config file; flags override it")
        for flag, dest, kind in _FLAGS:
            p.add_argument(flag, dest=dest, type=kind, default=None)
    return parser


def _flag_value(v: str):
    if v == AUTO:
        return v
    try:
        return float(v)
    except ValueError:
        raise ConfigError(f"expected a number or 'auto', got {v!r}") from None


def config_from_args(args: argparse.Namespace) -> RunConfig:
    raw = {}
    if args.config is not None:
        try:
            loaded = yaml.safe_load(args.config.read_text())
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}".replace("\n", " ")) from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config must be a key-value mapping")
        raw.update(loaded)
    for _, dest, kind in _FLAGS:
        v = getattr(args, dest)
        if v is None:
            continue
        raw[dest] = _flag_value(v) if dest in ("grading", "dt", "omega_max") else v
    return _validate(raw)


def _error_line(exc: BaseException) -> str:
    msg = " ".join(str(exc).split())
    return json.dumps({"error": type(exc).__name__, "message": msg}, sort_keys=True)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        path = run_subcommand(args.command, cfg)
    except (ConfigError, ConfigurationError) as exc:
        print(_error_line(exc), file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - every failure becomes one error line
        print(_error_line(exc), file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
