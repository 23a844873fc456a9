"""Command-line interface: exact fields, sampled reconstructions, comparisons.

Subcommands
-----------
exact    compute the exact Wigner-matrix field and the electronic-marginal
         quadrature report
sample   run the stochastic measurement emulation over the grid
compare  check a sampled field against an exact one at the acceptance
         thresholds

Exit codes: 0 ok/pass, 1 usage or configuration error, 2 infeasible
schedule, 3 comparison failure.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import fileio, fock, montecarlo, plots, states, wigner
from .dynamics import DriveConfig
from .errors import (
    ConfigError,
    GridMismatchError,
    ScheduleInfeasibleError,
    VibtomoError,
)
from .wigner import PhaseSpaceGrid

__all__ = ["DEFAULT_CONFIG", "load_config", "resolve_config", "main"]

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INFEASIBLE = 2
EXIT_COMPARE = 3

DEFAULT_CONFIG: dict = {
    "state": {"type": "cat", "beta_re": 2.0, "beta_im": 0.0, "file": None},
    "grid": {
        "re_min": -3.5, "re_max": 3.5, "n_re": 25,
        "im_min": -2.0, "im_max": 2.0, "n_im": 15,
    },
    "drive": {"rabi_hz": 500e3, "phase": 0.0, "eta": 0.1},
    "tomography": {
        "m_count": None, "leakage_budget": 1e-3, "p_max": 200,
        "k_cap": 30, "tail_tol": 1e-6,
    },
    "sampler": {
        "trials": 1000, "master_seed": 20260810, "mode": "fast_analytic",
        "threads": 1, "trials_interpretation": "per_variant",
    },
    "output": {"directory": "vibtomo_out", "formats": ["json", "csv"], "figures": True},
    "n_max": None,
}


def _merge_checked(base: dict, override: dict, path: str = "") -> None:
    for key, value in override.items():
        if key not in base:
            raise ConfigError(f"unknown configuration key {path + key!r}")
        if isinstance(base[key], dict) and isinstance(value, dict):
            _merge_checked(base[key], value, path + key + ".")
        else:
            base[key] = value


def load_config(path: str | Path) -> dict:
    """Read a config file; a run manifest is accepted and its config reused."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if isinstance(doc, dict) and doc.get("format") == fileio.MANIFEST_FORMAT:
        doc = doc["config"]
    if not isinstance(doc, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return doc


def resolve_config(file_config: dict | None = None, overrides: dict | None = None) -> dict:
    """Defaults <- config file <- CLI overrides, rejecting unknown keys."""
    config = copy.deepcopy(DEFAULT_CONFIG)
    if file_config:
        _merge_checked(config, file_config)
    if overrides:
        _merge_checked(config, overrides)
    return config


def _parse_complex_matrix(entries, what: str) -> np.ndarray:
    def one(x):
        if isinstance(x, (int, float)):
            return complex(x)
        if isinstance(x, (list, tuple)) and len(x) == 2:
            return complex(x[0], x[1])
        raise ConfigError(f"{what}: entries must be numbers or [re, im] pairs")

    try:
        return np.array([[one(x) for x in row] for row in entries], dtype=complex)
    except (TypeError, ConfigError) as exc:
        raise ConfigError(f"could not parse {what}: {exc}") from exc


def _grid_from_config(config: dict) -> PhaseSpaceGrid:
    return PhaseSpaceGrid(**config["grid"])


def _drive_from_config(config: dict) -> DriveConfig:
    d = config["drive"]
    return DriveConfig(rabi_magnitude=2.0 * math.pi * float(d["rabi_hz"]),
                       phase=float(d["phase"]), lamb_dicke=float(d["eta"]))


def _build_state(config: dict, grid: PhaseSpaceGrid) -> tuple[states.VibronicDensity, int]:
    spec = config["state"]
    radius = grid.max_radius()
    if spec["type"] == "cat":
        beta = complex(spec["beta_re"], spec["beta_im"])
        n_max = config["n_max"] or fock.required_dim(abs(beta) + radius)
        return states.make_cat_state(beta, n_max), n_max
    if spec["type"] == "product":
        if not spec.get("file"):
            raise ConfigError("product state requires state.file")
        doc = json.loads(Path(spec["file"]).read_text(encoding="utf-8"))
        rho = _parse_complex_matrix(doc["rho"], "state rho")
        sigma = _parse_complex_matrix(doc["sigma"], "state sigma")
        occ = np.diag(rho).real
        tail = np.cumsum(occ[::-1])[::-1] / max(occ.sum(), 1e-300)
        above = np.nonzero(tail > 1e-10)[0]
        amp = max(0.0, math.sqrt(int(above[-1]) + 1 if above.size else 1) - 3.0)
        n_max = max(rho.shape[0], config["n_max"] or fock.required_dim(amp + radius))
        padded = np.zeros((n_max, n_max), dtype=complex)
        padded[: rho.shape[0], : rho.shape[1]] = rho
        return states.make_product_state(padded, sigma), n_max
    raise ConfigError(f"unknown state.type {spec['type']!r}")


def _versions() -> dict:
    import platform

    import matplotlib
    import scipy

    try:
        from importlib.metadata import version

        own = version("vibtomo")
    except Exception:
        own = "unknown"
    return {
        "vibtomo": own,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "matplotlib": matplotlib.__version__,
        "python": platform.python_version(),
    }


def _data_config_hash(config: dict) -> str:
    """Hash of the physics-relevant config (output destinations excluded)."""
    return fileio.config_hash({k: v for k, v in config.items() if k != "output"})


def _write_manifest(out_dir: Path, config: dict, extras: dict) -> None:
    manifest = {
        "format": fileio.MANIFEST_FORMAT,
        "config": config,
        "config_hash": _data_config_hash(config),
        "seed": config["sampler"]["master_seed"],
        "versions": _versions(),
        "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    manifest.update(extras)
    (out_dir / "run_manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=False) + "\n", encoding="utf-8"
    )


def _field_metadata(config: dict, n_max: int, kind: str) -> dict:
    return {
        "config_hash": _data_config_hash(config),
        "seed": config["sampler"]["master_seed"],
        "mode": config["sampler"]["mode"] if kind == "sampled" else "exact",
        "n_max": n_max,
    }


def _complex_entry(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def cmd_exact(config: dict) -> int:
    out_dir = Path(config["output"]["directory"])
    out_dir.mkdir(parents=True, exist_ok=True)
    grid = _grid_from_config(config)
    t0 = time.perf_counter()
    state, n_max = _build_state(config, grid)
    field = wigner.wigner_field_exact(state, grid,
                                      threads=config["sampler"]["threads"])
    field = fileio.canonical_field(field)
    t_field = time.perf_counter() - t0

    metadata = _field_metadata(config, n_max, "exact")
    if "json" in config["output"]["formats"]:
        fileio.write_field_json(out_dir / "field_exact.json", field, "exact", metadata)
    if "csv" in config["output"]["formats"]:
        fileio.write_field_csv(out_dir / "field_exact.csv", field)

    integration = wigner.integrate_field(field)
    sigma_exact = states.reduce_electronic(state)
    report = {
        "sigma_quadrature": [[_complex_entry(z) for z in row] for row in integration.sigma],
        "sigma_exact": [[_complex_entry(z) for z in row] for row in sigma_exact],
        "abs_error": np.abs(integration.sigma - sigma_exact).tolist(),
        "quad_error_estimate": integration.quad_error.tolist(),
        "coverage": integration.coverage,
        "warnings": list(integration.warnings),
    }
    (out_dir / "marginals_report.json").write_text(
        json.dumps(report, indent=2) + "\n", encoding="utf-8"
    )

    if config["output"]["figures"]:
        plots.save_field_figure(field, out_dir / "wigner_exact.png",
                                "Exact Wigner-function matrix")
    _write_manifest(out_dir, config, {
        "run": "exact",
        "n_max": n_max,
        "timings_s": {"field": t_field},
    })
    print(f"exact: {grid.n_points} points at n_max={n_max} in {t_field:.2f}s "
          f"-> {out_dir}")
    print(f"exact: marginal coverage {integration.coverage:.6f}; "
          f"warnings: {list(integration.warnings) or 'none'}")
    return EXIT_OK


def cmd_sample(config: dict) -> int:
    out_dir = Path(config["output"]["directory"])
    out_dir.mkdir(parents=True, exist_ok=True)
    grid = _grid_from_config(config)
    drive = _drive_from_config(config)
    t0 = time.perf_counter()
    state, n_max = _build_state(config, grid)
    tcfg = config["tomography"]
    tomo = montecarlo.TomographyConfig(
        m_count=tcfg["m_count"], leakage_budget=tcfg["leakage_budget"],
        p_max=tcfg["p_max"], k_cap=tcfg["k_cap"], tail_tol=tcfg["tail_tol"],
    )
    scfg = config["sampler"]
    sampler = montecarlo.SamplerConfig(
        trials=scfg["trials"], master_seed=scfg["master_seed"], mode=scfg["mode"],
        threads=scfg["threads"], trials_interpretation=scfg["trials_interpretation"],
    )
    result = montecarlo.sample_grid(state, grid, drive, tomo, sampler)
    t_run = time.perf_counter() - t0

    metadata = _field_metadata(config, n_max, "sampled")
    if "json" in config["output"]["formats"]:
        fileio.write_field_json(out_dir / "field_sampled.json", result.field,
                                "sampled", metadata)
    if "csv" in config["output"]["formats"]:
        fileio.write_field_csv(out_dir / "field_sampled.csv", result.field)

    schedule_report = {
        "n_stat": result.n_stat,
        "m_counts": {"min": min(result.m_counts), "max": max(result.m_counts)},
        "schedules": {
            str(m): {
                "k": sched.k,
                "multipliers": list(sched.multipliers),
                "achieved_leakage": sched.achieved_leakage,
                "feasible": sched.feasible,
            }
            for m, sched in sorted(result.schedules.items())
        },
    }
    (out_dir / "schedule_report.json").write_text(
        json.dumps(schedule_report, indent=2) + "\n", encoding="utf-8"
    )

    if config["output"]["figures"]:
        plots.save_field_figure(result.field, out_dir / "wigner_sampled.png",
                                "Sampled Wigner-function matrix")

    max_tau = max((max(s.taus, default=0.0) for s in result.schedules.values()),
                  default=0.0)
    tau1_m0 = math.pi / abs(2.0 * math.pi * config["drive"]["rabi_hz"]
                            * math.exp(-config["drive"]["eta"] ** 2 / 2.0))
    _write_manifest(out_dir, config, {
        "run": "sample",
        "n_max": n_max,
        "n_stat": result.n_stat,
        "pulse_durations_us": {
            "longest_filter_pulse": max_tau * 1e6,
            "tau1_pi_at_m0": tau1_m0 * 1e6,
        },
        "timings_s": {"total": t_run},
    })
    print(f"sample: {grid.n_points} points, trials={sampler.trials_per_setting()} "
          f"per setting, mode={sampler.mode}, n_max={n_max}, n_stat={result.n_stat}, "
          f"{t_run:.2f}s -> {out_dir}")
    return EXIT_OK


_COMPONENT_GETTERS = {
    "w11": lambda w: w[:, 0, 0].real,
    "w22": lambda w: w[:, 1, 1].real,
    "re_w12": lambda w: w[:, 0, 1].real,
    "im_w12": lambda w: w[:, 0, 1].imag,
}

_STDERR_GETTERS = {
    "w11": lambda s: s[:, 0, 0],
    "w22": lambda s: s[:, 1, 1],
    "re_w12": lambda s: s[:, 0, 1],
    "im_w12": lambda s: s[:, 1, 0],
}


def compare_fields(exact: wigner.WignerMatrixField,
                   sampled: wigner.WignerMatrixField) -> dict:
    """Per-component error metrics and the pass/fail verdict."""
    fileio.check_same_grid(exact, sampled)
    stderr = sampled.stderr if sampled.stderr is not None else np.zeros(
        (len(sampled), 2, 2))
    components = {}
    passed = True
    for name in _COMPONENT_GETTERS:
        err = _COMPONENT_GETTERS[name](sampled.w) - _COMPONENT_GETTERS[name](exact.w)
        se = _STDERR_GETTERS[name](stderr)
        abs_err = np.abs(err)
        within = lambda k: float(np.mean(abs_err <= k * se + 1e-300))
        mean_se = float(se.mean())
        comp = {
            "max_abs_error": float(abs_err.max()),
            "mean_abs_error": float(abs_err.mean()),
            "mean_stderr": mean_se,
            "frac_within_3_stderr": within(3.0),
            "frac_within_4_stderr": within(4.0),
        }
        comp["pass"] = (comp["frac_within_4_stderr"] >= 0.95
                        and comp["mean_abs_error"] <= 2.0 * mean_se + 1e-300)
        passed = passed and comp["pass"]
        components[name] = comp
    return {"components": components, "pass": passed}


def cmd_compare(exact_path: str, sampled_path: str, out_dir: str | Path,
                figures: bool = True) -> int:
    exact, kind_e, _ = fileio.read_field_json(exact_path)
    sampled, kind_s, _ = fileio.read_field_json(sampled_path)
    report = compare_fields(exact, sampled)
    report["exact_file"] = str(exact_path)
    report["sampled_file"] = str(sampled_path)
    report["kinds"] = [kind_e, kind_s]

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "compare_report.json").write_text(
        json.dumps(report, indent=2) + "\n", encoding="utf-8"
    )
    if figures:
        plots.save_comparison_figure(exact, sampled, out / "compare.png")

    for name, comp in report["components"].items():
        print(f"compare[{name}]: max|err|={comp['max_abs_error']:.3e} "
              f"mean|err|={comp['mean_abs_error']:.3e} "
              f"mean stderr={comp['mean_stderr']:.3e} "
              f"within4={comp['frac_within_4_stderr']:.3f} "
              f"{'PASS' if comp['pass'] else 'FAIL'}")
    print(f"compare: overall {'PASS' if report['pass'] else 'FAIL'}")
    return EXIT_OK if report["pass"] else EXIT_COMPARE


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit with code 1
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _parse_beta(text: str) -> complex:
    try:
        if "," in text:
            re_part, im_part = text.split(",")
            return complex(float(re_part), float(im_part))
        return complex(text)
    except ValueError as exc:
        raise ConfigError(f"cannot parse --beta {text!r}: {exc}") from exc


def _parse_grid(text: str) -> dict:
    parts = text.split(",")
    if len(parts) != 6:
        raise ConfigError("--grid expects re_min,re_max,n_re,im_min,im_max,n_im")
    return {
        "re_min": float(parts[0]), "re_max": float(parts[1]), "n_re": int(parts[2]),
        "im_min": float(parts[3]), "im_max": float(parts[4]), "n_im": int(parts[5]),
    }


def _add_run_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON config file (or a run manifest)")
    sub.add_argument("--seed", type=int, help="master seed for the sampler streams")
    sub.add_argument("--trials", type=int, help="trials per (variant, phase) setting")
    sub.add_argument("--grid", help="re_min,re_max,n_re,im_min,im_max,n_im")
    sub.add_argument("--beta", help="cat-state amplitude, e.g. '2' or '2,0.5'")
    sub.add_argument("--eta", type=float, help="Lamb-Dicke parameter")
    sub.add_argument("--out-dir", help="output directory")
    sub.add_argument("--mode", choices=list(montecarlo.MODES), help="sampler mode")
    sub.add_argument("--threads", type=int, help="worker threads for the grid sweep")
    sub.add_argument("--no-figures", action="store_true", help="skip PNG rendering")


def _overrides_from_args(args: argparse.Namespace) -> dict:
    over: dict = {}
    if args.seed is not None:
        over.setdefault("sampler", {})["master_seed"] = args.seed
    if args.trials is not None:
        over.setdefault("sampler", {})["trials"] = args.trials
    if args.mode is not None:
        over.setdefault("sampler", {})["mode"] = args.mode
    if args.threads is not None:
        over.setdefault("sampler", {})["threads"] = args.threads
    if args.grid is not None:
        over["grid"] = _parse_grid(args.grid)
    if args.beta is not None:
        beta = _parse_beta(args.beta)
        over.setdefault("state", {}).update(
            {"type": "cat", "beta_re": beta.real, "beta_im": beta.imag})
    if args.eta is not None:
        over.setdefault("drive", {})["eta"] = args.eta
    if args.out_dir is not None:
        over.setdefault("output", {})["directory"] = args.out_dir
    if args.no_figures:
        over.setdefault("output", {})["figures"] = False
    return over


def main(argv: list[str] | None = None) -> int:
    parser = _Parser(prog="vibtomo",
                     description="Wigner-function-matrix reconstruction toolkit")
    subparsers = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("exact", "compute the exact field and marginal report"),
        ("sample", "run the stochastic measurement emulation"),
    ):
        sub = subparsers.add_parser(name, help=help_text)
        _add_run_flags(sub)

    comp = subparsers.add_parser("compare", help="compare sampled against exact")
    comp.add_argument("exact_file")
    comp.add_argument("sampled_file")
    comp.add_argument("--out-dir", default="vibtomo_compare")
    comp.add_argument("--no-figures", action="store_true")

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        if args.command == "compare":
            return cmd_compare(args.exact_file, args.sampled_file, args.out_dir,
                               figures=not args.no_figures)
        file_config = load_config(args.config) if args.config else None
        config = resolve_config(file_config, _overrides_from_args(args))
        if args.command == "exact":
            return cmd_exact(config)
        return cmd_sample(config)
    except ScheduleInfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, GridMismatchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except VibtomoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
