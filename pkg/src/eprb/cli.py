"""Command-line front end: run the experiment, emit CSV/JSON data files.

Subcommands
-----------
params     print the derived bench constants
pair       one pair through both steps, full trajectory CSV
pairs      a small sampled batch of step-1 pair trajectories (long CSV)
ensemble   Monte Carlo outcome statistics (stats.json + histogram.csv)
sweep      correlation E(delta) over a list of analyzer angles
density    analytic pair density grid and its two marginals

Angles on the command line are degrees unless ``--radians`` is given; in
config files and output files angles are always radians.  Every command
writes a run manifest (resolved configuration, seed, kernel backend,
sha256 of each output) next to its outputs, and re-running with the same
configuration and seed reproduces every data file byte for byte.

Numbers in CSV files are written with 17 significant digits so doubles
round-trip exactly.  Comment lines (leading '#') appear only at the end of
a file.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .analytic import marginal_a, marginal_b, pair_density_after_magnet
from .core import PhysicalConfig, SpinOrientation, derive_params
from .ensemble import (
    CONVENTIONS,
    EnsembleConfig,
    correlation_sweep,
    histogram_edges,
    run_ensemble,
    sample_initials,
)
from .trajectory import (
    DEFAULT_STEPS_IN,
    DEFAULT_STEPS_OUT,
    IntegrationError,
    PairInitialConditions,
    integrate_a,
    simulate_pair,
)

_ENSEMBLE_DEFAULTS = {
    "n_pairs": 10000,
    "seed": 20260810,
    "delta_rad": 0.0,
    "convention": "spot",
    "steps_in": DEFAULT_STEPS_IN,
    "steps_out": DEFAULT_STEPS_OUT,
}

_PHYSICAL_FIELDS = {
    "mass_kg": float,
    "magnetic_moment_J_per_T": float,
    "v_y_m_per_s": float,
    "sigma0_m": float,
    "B0_T": float,
    "B_gradient_T_per_m": float,
    "magnet_length_m": float,
    "drift_distance_m": float,
}

_ENSEMBLE_FIELDS = {
    "n_pairs": int,
    "seed": int,
    "delta_rad": float,
    "convention": str,
    "steps_in": int,
    "steps_out": int,
}


class ConfigError(ValueError):
    """A configuration file failed validation."""


def _fmt(x: float) -> str:
    return format(float(x), ".16e")


def _coerce(section: str, name: str, value, typ):
    if value is None:
        raise ConfigError(f"{section}.{name}: missing value")
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{section}.{name}: expected a number, got {value!r}")
        return float(value)
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{section}.{name}: expected an integer, got {value!r}")
        return value
    if not isinstance(value, str):
        raise ConfigError(f"{section}.{name}: expected a string, got {value!r}")
    return value


def load_config(path: str | None) -> tuple[PhysicalConfig, dict]:
    """Read a JSON config file: optional 'physical' and 'ensemble' sections.

    Every field is optional and falls back to the built-in defaults; a field
    that is present but null, mistyped or out of range is an error naming
    the field.
    """
    if path is None:
        return PhysicalConfig(), dict(_ENSEMBLE_DEFAULTS)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}")
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    unknown = set(raw) - {"physical", "ensemble"}
    if unknown:
        raise ConfigError(f"{path}: unknown section {sorted(unknown)[0]!r}")

    phys_raw = raw.get("physical", {})
    if not isinstance(phys_raw, dict):
        raise ConfigError("physical: must be a JSON object")
    phys = {}
    for name, value in phys_raw.items():
        if name not in _PHYSICAL_FIELDS:
            raise ConfigError(f"physical.{name}: unknown field")
        phys[name] = _coerce("physical", name, value, _PHYSICAL_FIELDS[name])
    try:
        cfg = PhysicalConfig(**phys)
    except ValueError as exc:
        raise ConfigError(f"physical.{exc}") from exc

    ens_raw = raw.get("ensemble", {})
    if not isinstance(ens_raw, dict):
        raise ConfigError("ensemble: must be a JSON object")
    ens = dict(_ENSEMBLE_DEFAULTS)
    for name, value in ens_raw.items():
        if name not in _ENSEMBLE_FIELDS:
            raise ConfigError(f"ensemble.{name}: unknown field")
        ens[name] = _coerce("ensemble", name, value, _ENSEMBLE_FIELDS[name])
    if ens["convention"] not in CONVENTIONS:
        raise ConfigError(
            f"ensemble.convention: must be one of {list(CONVENTIONS)}"
        )
    return cfg, ens


# ---------------------------------------------------------------------------
# manifests and file writing
# ---------------------------------------------------------------------------


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _write_manifest(
    manifest_path: Path,
    command: str,
    cfg: PhysicalConfig,
    ens: dict | None,
    seed: int | None,
    outputs: list[Path],
    results: dict | None = None,
):
    d = derive_params(cfg)
    payload = {
        "tool": f"eprb {__version__}",
        "command": command,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "kernel_backend": kernels.backend_name(),
        "seed": seed,
        "config": {
            "physical": asdict(cfg),
            "ensemble": dict(ens) if ens is not None else None,
        },
        "derived": {
            "transit_time_s": d.transit_time_s,
            "z_delta_m": d.z_delta_m,
            "u_m_per_s": d.u_m_per_s,
            "drift_time_s": d.drift_time_s,
        },
        "outputs": [
            {"path": p.name, "sha256": _sha256(p), "bytes": p.stat().st_size}
            for p in outputs
        ],
        "results": results or {},
    }
    manifest_path.write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _write_csv(path: Path, header: list[str], rows, comments: list[str] | None = None):
    """Write a CSV with one header row and optional trailing comment rows."""
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")
        for line in comments or ():
            fh.write(f"# {line}\n")


def _angle(value: float, radians: bool) -> float:
    return float(value) if radians else math.radians(float(value))


def _parse_float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_params(args) -> int:
    cfg, _ens = load_config(args.config)
    d = derive_params(cfg)
    print(f"transit_time_s = {d.transit_time_s!r}")
    print(f"z_delta_m = {d.z_delta_m!r}")
    print(f"u_m_per_s = {d.u_m_per_s!r}")
    print(f"drift_time_s = {d.drift_time_s!r}")
    return 0


_PAIR_HEADER = [
    "t_s",
    "y_A_m",
    "z_A_m",
    "theta_A_rad",
    "z_B_m",
    "theta_B_rad",
    "phase",
    "z_B_prime_m",
    "theta_B_prime_rad",
]


def _cmd_pair(args) -> int:
    cfg, _ens = load_config(args.config)
    d = derive_params(cfg)
    theta0 = _angle(args.theta0, args.radians)
    phi0 = _angle(args.phi0, args.radians)
    delta = _angle(args.delta, args.radians)
    init = PairInitialConditions(
        z0_m=args.z0, x0_m=args.x0, orient_a0=SpinOrientation(theta0, phi0)
    )
    traj = simulate_pair(init, delta, cfg, d, args.steps_in, args.steps_out)

    v_y = cfg.v_y_m_per_s
    rows = []
    for sa, sb in zip(traj.samples_a, traj.samples_b_step1):
        rows.append(
            [
                _fmt(sa.t_s),
                _fmt(-v_y * sa.t_s),
                _fmt(sa.z_m),
                _fmt(sa.theta_rad),
                _fmt(sb.z_m),
                _fmt(sb.theta_rad),
                sa.phase,
                "nan",
                "nan",
            ]
        )
    for sb in traj.samples_b_step2:
        rows.append(
            [
                _fmt(sb.t_s),
                "nan",
                "nan",
                "nan",
                "nan",
                "nan",
                "step2_" + sb.phase,
                _fmt(sb.z_m),
                _fmt(sb.theta_rad),
            ]
        )

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    comments = [f"outcome_A={traj.outcome_a:+d} outcome_B={traj.outcome_b:+d}"]
    _write_csv(out, _PAIR_HEADER, rows, comments)
    _write_manifest(
        out.with_name(out.name + ".manifest.json"),
        "pair",
        cfg,
        None,
        None,
        [out],
        results={
            "outcome_A": traj.outcome_a,
            "outcome_B": traj.outcome_b,
            "z0_m": args.z0,
            "x0_m": args.x0,
            "theta0_rad": theta0,
            "phi0_rad": phi0,
            "delta_rad": delta,
        },
    )
    print(f"outcome_A={traj.outcome_a:+d} outcome_B={traj.outcome_b:+d} -> {out}")
    return 0


_PAIRS_HEADER = [
    "pair_id",
    "t_s",
    "y_A_m",
    "z_A_m",
    "theta_A_rad",
    "y_B_m",
    "z_B_m",
    "theta_B_rad",
    "phase",
]


def _cmd_pairs(args) -> int:
    cfg, ens = load_config(args.config)
    d = derive_params(cfg)
    seed = ens["seed"] if args.seed is None else args.seed
    initials = sample_initials(args.n_pairs, seed, cfg.sigma0_m)

    v_y = cfg.v_y_m_per_s
    rows = []
    for pid, init in enumerate(initials):
        samples = integrate_a(init, cfg, d, args.steps_in, args.steps_out)
        for s in samples:
            rows.append(
                [
                    str(pid),
                    _fmt(s.t_s),
                    _fmt(-v_y * s.t_s),
                    _fmt(s.z_m),
                    _fmt(s.theta_rad),
                    _fmt(v_y * s.t_s),
                    _fmt(init.z0_b_m),
                    _fmt(math.pi - s.theta_rad),
                    s.phase,
                ]
            )

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    _write_csv(out, _PAIRS_HEADER, rows)
    _write_manifest(
        out.with_name(out.name + ".manifest.json"),
        "pairs",
        cfg,
        None,
        seed,
        [out],
        results={"n_pairs": args.n_pairs},
    )
    print(f"{args.n_pairs} step-1 pair trajectories -> {out}")
    return 0


def _ensemble_config(args, ens: dict) -> EnsembleConfig:
    if args.n is not None:
        ens["n_pairs"] = args.n
    if args.seed is not None:
        ens["seed"] = args.seed
    if getattr(args, "delta", None) is not None:
        deltas = _parse_float_list(args.delta)
        if len(deltas) != 1:
            raise ConfigError("--delta: exactly one angle expected here")
        ens["delta_rad"] = _angle(deltas[0], args.radians)
    if args.convention is not None:
        ens["convention"] = args.convention
    try:
        return EnsembleConfig(**ens)
    except ValueError as exc:
        raise ConfigError(f"ensemble.{exc}") from exc


def _cmd_ensemble(args) -> int:
    cfg, ens = load_config(args.config)
    ec = _ensemble_config(args, ens)
    d = derive_params(cfg)
    stats = run_ensemble(ec, cfg, d, workers=args.workers)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stats_path = out_dir / "stats.json"
    stats_path.write_text(
        json.dumps(stats.to_json_dict(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    hist_path = out_dir / "histogram.csv"
    edges = stats.histogram.bin_edges_m
    rows = [
        [
            _fmt(edges[i]),
            _fmt(edges[i + 1]),
            str(int(stats.histogram.counts[i])),
            _fmt(stats.analytic_mass[i]),
        ]
        for i in range(len(stats.histogram.counts))
    ]
    _write_csv(hist_path, ["bin_left_m", "bin_right_m", "count", "analytic_mass"], rows)
    _write_manifest(
        out_dir / "manifest.json",
        "ensemble",
        cfg,
        {**ens, "workers": args.workers},
        ec.seed,
        [stats_path, hist_path],
        results={"E": stats.E, "tv_distance_a": stats.tv_distance_a},
    )
    print(
        f"n={ec.n_pairs} delta={ec.delta_rad:.6g} rad convention={ec.convention}: "
        f"E={stats.E:+.4f} tv={stats.tv_distance_a:.4f} -> {out_dir}"
    )
    return 0


def _cmd_sweep(args) -> int:
    cfg, ens = load_config(args.config)
    if args.n is not None:
        ens["n_pairs"] = args.n
    if args.seed is not None:
        ens["seed"] = args.seed
    if args.convention is not None:
        ens["convention"] = args.convention
    deltas = [_angle(v, args.radians) for v in _parse_float_list(args.delta)]
    if not deltas:
        raise ConfigError("--delta: at least one angle required")
    ens["delta_rad"] = 0.0
    try:
        ec = EnsembleConfig(**ens)
    except ValueError as exc:
        raise ConfigError(f"ensemble.{exc}") from exc
    d = derive_params(cfg)
    points = correlation_sweep(deltas, ec, cfg, d, workers=args.workers)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    rows = [
        [_fmt(p.delta_rad), _fmt(p.E), _fmt(p.stderr), str(p.n_pairs)] for p in points
    ]
    _write_csv(out, ["delta_rad", "E", "stderr", "n"], rows)
    _write_manifest(
        out.with_name(out.name + ".manifest.json"),
        "sweep",
        cfg,
        {**ens, "deltas_rad": deltas, "workers": args.workers},
        ec.seed,
        [out],
        results={"E": [p.E for p in points]},
    )
    print(f"{len(points)} sweep points -> {out}")
    return 0


def _cmd_density(args) -> int:
    cfg, _ens = load_config(args.config)
    d = derive_params(cfg)
    t = d.drift_time_s if args.t is None else args.t
    if t < 0.0:
        raise ConfigError("--t: must be >= 0")

    grid = histogram_edges(d, cfg.sigma0_m)
    za, zb = np.meshgrid(grid, grid, indexing="ij")
    rho = pair_density_after_magnet(za, zb, t, d, cfg.sigma0_m)
    norm = float(np.trapezoid(np.trapezoid(rho, grid, axis=1), grid, axis=0))

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    grid_path = out_dir / "density_grid.csv"
    rows = (
        [_fmt(za[i, j]), _fmt(zb[i, j]), _fmt(rho[i, j])]
        for i in range(grid.size)
        for j in range(grid.size)
    )
    _write_csv(grid_path, ["z_A_m", "z_B_m", "rho_per_m2"], rows)

    ma = marginal_a(grid, t, d, cfg.sigma0_m)
    ma_path = out_dir / "marginal_A.csv"
    _write_csv(
        ma_path,
        ["z_A_m", "density_per_m"],
        ([_fmt(z), _fmt(v)] for z, v in zip(grid, ma)),
    )
    mb = marginal_b(grid, cfg.sigma0_m, t=t)
    mb_path = out_dir / "marginal_B.csv"
    _write_csv(
        mb_path,
        ["z_B_m", "density_per_m"],
        ([_fmt(z), _fmt(v)] for z, v in zip(grid, mb)),
    )
    _write_manifest(
        out_dir / "manifest.json",
        "density",
        cfg,
        None,
        None,
        [grid_path, ma_path, mb_path],
        results={"t_s": t, "grid_normalization": norm},
    )
    print(f"density grid at t={t:.6g} s (normalization {norm:.9f}) -> {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_common(p, steps: bool = False):
    p.add_argument("--config", metavar="PATH", default=None, help="JSON config file")
    p.add_argument(
        "--radians",
        action="store_true",
        help="interpret command-line angles as radians (default: degrees)",
    )
    if steps:
        p.add_argument("--steps-in", type=int, default=DEFAULT_STEPS_IN, metavar="N")
        p.add_argument("--steps-out", type=int, default=DEFAULT_STEPS_OUT, metavar="N")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eprb",
        description=(
            "Deterministic pilot-wave simulator of the two-step EPR-B experiment: "
            "entangled opposite-spin atom pairs through sequential Stern-Gerlach "
            "analyzers."
        ),
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("params", help="print derived bench constants")
    _add_common(p)
    p.set_defaults(func=_cmd_params)

    p = sub.add_parser("pair", help="simulate one pair, write its trajectory CSV")
    _add_common(p, steps=True)
    p.add_argument("--z0", type=float, default=0.0, metavar="M")
    p.add_argument("--x0", type=float, default=0.0, metavar="M")
    p.add_argument("--theta0", type=float, default=0.0, metavar="ANGLE")
    p.add_argument("--phi0", type=float, default=0.0, metavar="ANGLE")
    p.add_argument("--delta", type=float, default=0.0, metavar="ANGLE")
    p.add_argument("--out", required=True, metavar="PATH")
    p.set_defaults(func=_cmd_pair)

    p = sub.add_parser(
        "pairs", help="sample a batch of pairs, write step-1 trajectories"
    )
    _add_common(p, steps=True)
    p.add_argument("--n-pairs", type=int, default=5, metavar="N")
    p.add_argument("--seed", type=int, default=None, metavar="U64")
    p.add_argument("--out", required=True, metavar="PATH")
    p.set_defaults(func=_cmd_pairs)

    p = sub.add_parser("ensemble", help="Monte Carlo outcome statistics")
    _add_common(p)
    p.add_argument("--n", type=int, default=None, metavar="INT")
    p.add_argument("--seed", type=int, default=None, metavar="U64")
    p.add_argument("--delta", default=None, metavar="ANGLE")
    p.add_argument("--convention", choices=CONVENTIONS, default=None)
    p.add_argument("--workers", type=int, default=1, metavar="N")
    p.add_argument("--out", required=True, metavar="DIR")
    p.set_defaults(func=_cmd_ensemble)

    p = sub.add_parser("sweep", help="correlation E(delta) over analyzer angles")
    _add_common(p)
    p.add_argument(
        "--delta", required=True, metavar="ANGLE[,ANGLE...]", help="comma-separated"
    )
    p.add_argument("--n", type=int, default=None, metavar="INT")
    p.add_argument("--seed", type=int, default=None, metavar="U64")
    p.add_argument("--convention", choices=CONVENTIONS, default=None)
    p.add_argument("--workers", type=int, default=1, metavar="N")
    p.add_argument("--out", required=True, metavar="PATH")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("density", help="analytic density grid and marginals")
    _add_common(p)
    p.add_argument("--t", type=float, default=None, metavar="SECONDS")
    p.add_argument("--out", required=True, metavar="DIR")
    p.set_defaults(func=_cmd_density)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (IntegrationError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
