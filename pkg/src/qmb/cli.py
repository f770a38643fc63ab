"""Configuration parsing, subcommand dispatch, and bit-stable CSV/JSON output.

Config documents are JSON.  Top-level keys::

    task               spectrum | distance | fig2 | fig3 | fig4 | crossover
    preset             optional preset name (fig2 | fig3 | fig4)
    params             delta0 OR (omega1 AND omega2); J; chi OR chi_grid;
                       alpha OR alpha_grid; n_max
    tol                diamond-norm tolerance (default 1e-7)
    variant            literal | diagonal reference construction
    out                CSV output path (manifest written alongside)
    gamma_resolution   basis-angle grid size for fig3 (default 24)
    reference          model highlighted by the distance task
    crossover          {"which": chi | alpha, "bracket": [lo, hi]}
    outcome_check      also evaluate the - outcome and assert symmetry

Unknown keys are rejected with their path.  A run writes a CSV table with a
fixed header and fixed-width scientific formatting (12 significant digits),
plus a JSON manifest echoing the fully resolved configuration; feeding a
manifest back as the config reproduces the run byte for byte.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .metrics import DiamondResult
from .spectrum import SystemParams, crossover_estimates, eigenenergies
from .sweeps import (REFERENCE_MODELS, GammaScan, SweepRow, distance_row,
                     find_crossover, scan_gamma_chi, sweep_alpha, sweep_chi)

__all__ = ["ConfigError", "RunConfig", "parse_config", "run", "main",
           "PRESETS", "SWEEP_COLUMNS", "GAMMA_COLUMNS", "SPECTRUM_COLUMNS"]

TASKS = ("spectrum", "distance", "fig2", "fig3", "fig4", "crossover")

SWEEP_COLUMNS = (
    ["chi", "alpha", "gamma", "d_bare", "d_dressed", "d_nalpha2", "d_nalpha2_snr"]
    + [f"lo_{m}" for m in REFERENCE_MODELS]
    + [f"hi_{m}" for m in REFERENCE_MODELS]
    + [f"status_{m}" for m in REFERENCE_MODELS]
)
GAMMA_COLUMNS = ["chi", "alpha", "gamma", "d_gamma", "lo_gamma", "hi_gamma",
                 "status_gamma", "gamma0", "gamma_nalpha2", "argmin_gamma",
                 "min_distance", "flag"]
SPECTRUM_COLUMNS = ["n", "gamma", "E1", "E2", "E3", "E4"]


class ConfigError(ValueError):
    """Schema violation, reported with the offending key path."""


def _log_grid(lo_exp: float, hi_exp: float, points: int) -> List[float]:
    return [float(v) for v in np.logspace(lo_exp, hi_exp, points)]


PRESETS: Dict[str, Dict[str, Any]] = {
    # half-detuning 102, exchange 3.8, probe amplitude 2, cutoff 40:
    # log grid over three and a half decades of dispersive shift
    "fig2": {
        "params": {"delta0": 102.0, "J": 3.8, "alpha": 2.0, "n_max": 40,
                   "chi_grid": _log_grid(-0.5, 3.0, 46)},
    },
    # same parameters, coarser shift grid with a basis-angle axis
    "fig3": {
        "params": {"delta0": 102.0, "J": 3.8, "alpha": 2.0, "n_max": 40,
                   "chi_grid": _log_grid(-0.5, 3.0, 18)},
        "gamma_resolution": 24,
    },
    # amplitude sweep bracketing the predicted crossover
    "fig4": {
        "params": {"delta0": 80.0, "J": 10.0, "chi": 20.0, "n_max": 40,
                   "alpha_grid": [0.25 * k for k in range(1, 17)]},
    },
}

_TOP_KEYS = {"task", "preset", "params", "tol", "variant", "out",
             "gamma_resolution", "reference", "crossover", "outcome_check"}
_PARAM_KEYS = {"delta0", "omega1", "omega2", "J", "chi", "chi_grid",
               "alpha", "alpha_grid", "n_max"}


@dataclass(frozen=True)
class RunConfig:
    task: str
    omega1: float
    omega2: float
    J: float
    n_max: int
    chi: Optional[float] = None
    chi_grid: Optional[List[float]] = None
    alpha: Optional[float] = None
    alpha_grid: Optional[List[float]] = None
    tol: float = 1e-7
    variant: str = "literal"
    out: Optional[str] = None
    gamma_resolution: int = 24
    reference: str = "nalpha2_snr"
    crossover_which: Optional[str] = None
    crossover_bracket: Optional[List[float]] = None
    outcome_check: bool = False

    def template(self) -> SystemParams:
        chi = self.chi
        if chi is None:
            chi = self.chi_grid[0] if self.chi_grid else (
                0.5 * (self.crossover_bracket[0] + self.crossover_bracket[1])
                if self.crossover_which == "chi" and self.crossover_bracket
                else 1.0)
        alpha = self.alpha if self.alpha is not None else (
            self.alpha_grid[0] if self.alpha_grid else 2.0)
        return SystemParams(omega1=self.omega1, omega2=self.omega2, J=self.J,
                            chi=float(chi), alpha=float(alpha), n_max=self.n_max)

    def to_dict(self) -> Dict[str, Any]:
        """Fully resolved config document (valid parse_config input)."""
        params: Dict[str, Any] = {"omega1": self.omega1, "omega2": self.omega2,
                                  "J": self.J, "n_max": self.n_max}
        if self.chi is not None:
            params["chi"] = self.chi
        if self.chi_grid is not None:
            params["chi_grid"] = list(self.chi_grid)
        if self.alpha is not None:
            params["alpha"] = self.alpha
        if self.alpha_grid is not None:
            params["alpha_grid"] = list(self.alpha_grid)
        doc: Dict[str, Any] = {"task": self.task, "params": params,
                               "tol": self.tol, "variant": self.variant,
                               "gamma_resolution": self.gamma_resolution,
                               "reference": self.reference,
                               "outcome_check": self.outcome_check}
        if self.out is not None:
            doc["out"] = self.out
        if self.crossover_which is not None:
            doc["crossover"] = {"which": self.crossover_which,
                                "bracket": list(self.crossover_bracket)}
        return doc


def _require_number(doc: Dict[str, Any], path: str, key: str,
                    optional: bool = False) -> Optional[float]:
    if key not in doc:
        if optional:
            return None
        raise ConfigError(f"{path}.{key}: required key missing")
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number, got {v!r}")
    return float(v)


def _require_grid(doc: Dict[str, Any], path: str, key: str) -> Optional[List[float]]:
    if key not in doc:
        return None
    v = doc[key]
    if not isinstance(v, (list, tuple)) or len(v) == 0:
        raise ConfigError(f"{path}.{key}: expected a non-empty list")
    try:
        grid = [float(x) for x in v]
    except (TypeError, ValueError):
        raise ConfigError(f"{path}.{key}: expected numbers") from None
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError(f"{path}.{key}: grid must be strictly increasing")
    return grid


def _merge(base: Dict[str, Any], overlay: Dict[str, Any]) -> Dict[str, Any]:
    out = dict(base)
    for k, v in overlay.items():
        if k == "params" and isinstance(v, dict) and isinstance(out.get("params"), dict):
            out["params"] = {**out["params"], **v}
        else:
            out[k] = v
    return out


def parse_config(source) -> RunConfig:
    """Validate a JSON text / dict (or a run manifest) into a RunConfig."""
    if isinstance(source, str):
        try:
            doc = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
    else:
        doc = source
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    if "config" in doc and "meta" in doc:  # run manifest round-trip
        doc = doc["config"]

    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown key")

    preset = doc.get("preset")
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"preset: unknown preset {preset!r} "
                              f"(available: {sorted(PRESETS)})")
        doc = _merge({**PRESETS[preset], "task": doc.get("task", preset)},
                     {k: v for k, v in doc.items() if k != "preset"})

    task = doc.get("task")
    if task not in TASKS:
        raise ConfigError(f"task: expected one of {TASKS}, got {task!r}")

    params = doc.get("params")
    if not isinstance(params, dict):
        raise ConfigError("params: required object missing")
    unknown = set(params) - _PARAM_KEYS
    if unknown:
        raise ConfigError(f"params.{sorted(unknown)[0]}: unknown key")

    delta0 = _require_number(params, "params", "delta0", optional=True)
    omega1 = _require_number(params, "params", "omega1", optional=True)
    omega2 = _require_number(params, "params", "omega2", optional=True)
    if delta0 is not None and (omega1 is not None or omega2 is not None):
        if omega1 is None or omega2 is None:
            raise ConfigError("params: give delta0 alone or both omega1 and omega2")
        if abs(0.5 * (omega2 - omega1) - delta0) > 1e-9 * max(1.0, abs(delta0)):
            raise ConfigError("params.delta0: inconsistent with omega1/omega2")
    elif delta0 is not None:
        omega1, omega2 = -delta0, delta0
    elif omega1 is None or omega2 is None:
        raise ConfigError("params: need delta0 or both omega1 and omega2")

    j = _require_number(params, "params", "J")
    chi = _require_number(params, "params", "chi", optional=True)
    chi_grid = _require_grid(params, "params", "chi_grid")
    if chi is not None and chi_grid is not None:
        raise ConfigError("params: give chi or chi_grid, not both")
    if chi is not None and chi == 0:
        raise ConfigError("params.chi: must be nonzero")
    if chi_grid is not None and any(c == 0 for c in chi_grid):
        raise ConfigError("params.chi_grid: entries must be nonzero")

    alpha = _require_number(params, "params", "alpha", optional=True)
    alpha_grid = _require_grid(params, "params", "alpha_grid")
    if alpha is not None and alpha_grid is not None:
        raise ConfigError("params: give alpha or alpha_grid, not both")
    if alpha is not None and alpha < 0:
        raise ConfigError("params.alpha: must be >= 0")

    n_max = _require_number(params, "params", "n_max")
    if int(n_max) != n_max or n_max < 1:
        raise ConfigError("params.n_max: must be an integer >= 1")

    tol = _require_number(doc, "", "tol", optional=True)
    tol = 1e-7 if tol is None else tol
    if tol <= 0:
        raise ConfigError("tol: must be positive")

    variant = doc.get("variant", "literal")
    if variant not in ("literal", "diagonal"):
        raise ConfigError(f"variant: expected literal or diagonal, got {variant!r}")

    reference = doc.get("reference", "nalpha2_snr")
    if reference not in REFERENCE_MODELS:
        raise ConfigError(f"reference: expected one of {REFERENCE_MODELS}")

    gamma_resolution = doc.get("gamma_resolution", 24)
    if not isinstance(gamma_resolution, int) or gamma_resolution < 3:
        raise ConfigError("gamma_resolution: must be an integer >= 3")

    out = doc.get("out")
    if out is not None and not isinstance(out, str):
        raise ConfigError("out: expected a path string")

    outcome_check = doc.get("outcome_check", False)
    if not isinstance(outcome_check, bool):
        raise ConfigError("outcome_check: expected a boolean")

    crossover_which = crossover_bracket = None
    if "crossover" in doc:
        co = doc["crossover"]
        if not isinstance(co, dict) or set(co) - {"which", "bracket"}:
            raise ConfigError("crossover: expected {which, bracket}")
        crossover_which = co.get("which")
        if crossover_which not in ("chi", "alpha"):
            raise ConfigError("crossover.which: expected chi or alpha")
        bracket = co.get("bracket")
        if (not isinstance(bracket, (list, tuple)) or len(bracket) != 2
                or not all(isinstance(b, (int, float)) for b in bracket)
                or not bracket[0] < bracket[1]):
            raise ConfigError("crossover.bracket: expected [lo, hi] with lo < hi")
        crossover_bracket = [float(bracket[0]), float(bracket[1])]

    # task-specific requirements
    need = {
        "spectrum": ("chi-scalar", "alpha-scalar"),
        "distance": ("chi-scalar", "alpha-scalar"),
        "fig2": ("chi-grid", "alpha-scalar"),
        "fig3": ("chi-grid", "alpha-scalar"),
        "fig4": ("chi-scalar", "alpha-grid"),
        "crossover": ("crossover",),
    }[task]
    if "chi-scalar" in need and chi is None:
        raise ConfigError(f"params: task {task} needs a scalar chi "
                          "(set params.chi, or params.chi_grid for sweep tasks)")
    if "chi-grid" in need and chi_grid is None:
        raise ConfigError(f"params: task {task} needs params.chi_grid "
                          "(params.chi selects a single point instead)")
    if "alpha-scalar" in need and alpha is None:
        raise ConfigError(f"params: task {task} needs a scalar alpha "
                          "(set params.alpha, or params.alpha_grid for fig4)")
    if "alpha-grid" in need and alpha_grid is None:
        raise ConfigError(f"params: task {task} needs params.alpha_grid "
                          "(params.alpha selects a single point instead)")
    if "crossover" in need:
        if crossover_which is None:
            raise ConfigError("crossover: required for the crossover task")
        if crossover_which == "chi" and alpha is None:
            raise ConfigError("params.alpha: scalar required for a chi crossover")
        if crossover_which == "alpha" and chi is None:
            raise ConfigError("params.chi: scalar required for an alpha crossover")

    return RunConfig(task=task, omega1=omega1, omega2=omega2, J=j, n_max=int(n_max),
                     chi=chi, chi_grid=chi_grid, alpha=alpha, alpha_grid=alpha_grid,
                     tol=tol, variant=variant, out=out,
                     gamma_resolution=gamma_resolution, reference=reference,
                     crossover_which=crossover_which,
                     crossover_bracket=crossover_bracket,
                     outcome_check=outcome_check)


# ---------------------------------------------------------------------------
# formatting and emission
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.11e}"  # 12 significant digits, locale-independent


def _sweep_csv(rows: Sequence[SweepRow]) -> str:
    lines = [",".join(SWEEP_COLUMNS)]
    for row in rows:
        res = {m: row.result(m) for m in REFERENCE_MODELS}
        cells = [_fmt(row.chi), _fmt(row.alpha), _fmt(row.gamma)]
        cells += [_fmt(res[m].value if res[m] else None) for m in REFERENCE_MODELS]
        cells += [_fmt(res[m].lower_cert if res[m] else None) for m in REFERENCE_MODELS]
        cells += [_fmt(res[m].upper_cert if res[m] else None) for m in REFERENCE_MODELS]
        cells += [res[m].status if res[m] else "" for m in REFERENCE_MODELS]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _gamma_csv(scan: GammaScan, alpha: float) -> str:
    lines = [",".join(GAMMA_COLUMNS)]
    for i, chi in enumerate(scan.chi_values):
        for gamma, res in zip(scan.grids[i], scan.results[i]):
            lines.append(",".join([
                _fmt(chi), _fmt(alpha), _fmt(gamma), _fmt(res.value),
                _fmt(res.lower_cert), _fmt(res.upper_cert), res.status,
                _fmt(scan.gamma0[i]), _fmt(scan.gamma_nalpha2[i]),
                _fmt(scan.argmin_gamma[i]), _fmt(scan.min_distance[i]),
                scan.flags[i]]))
    return "\n".join(lines) + "\n"


def _spectrum_csv(template: SystemParams) -> str:
    lines = [",".join(SPECTRUM_COLUMNS)]
    for n in range(template.n_max + 1):
        sector = eigenenergies(template, n)
        lines.append(",".join([str(n), _fmt(sector.gamma)]
                              + [_fmt(e) for e in sector.energies]))
    return "\n".join(lines) + "\n"


def _write_artifacts(config: RunConfig, csv_text: Optional[str],
                     extra_meta: Dict[str, Any], exit_code: int,
                     wall: float) -> None:
    manifest = {
        "config": config.to_dict(),
        "meta": {"tool": "qmb", "version": __version__,
                 "wall_time_s": round(wall, 3), "exit_code": exit_code,
                 **extra_meta},
    }
    if config.out:
        if csv_text is not None:
            with open(config.out, "w", newline="") as fh:
                fh.write(csv_text)
        with open(config.out + ".manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _failed_rows(rows: Sequence[SweepRow], key: str) -> List[float]:
    return [getattr(r, key) for r in rows if r.failed]


def run(config: RunConfig, stdout=None) -> int:
    """Execute a validated configuration.  Returns the process exit code:
    0 on success, 2 when any row failed (failures are recorded per row and
    the sweep continues)."""
    out = stdout or sys.stdout
    start = time.monotonic()
    template = config.template()
    exit_code = 0
    csv_text = None
    meta: Dict[str, Any] = {}

    if config.task == "spectrum":
        csv_text = _spectrum_csv(template)
        est = crossover_estimates(template)
        print(f"delta0 = {_fmt(template.delta0)}", file=out)
        print(f"t_m = {_fmt(template.t_m)}", file=out)
        print(f"gamma0 = {_fmt(eigenenergies(template, 0).gamma)}", file=out)
        print(f"chi_c = {_fmt(est.chi_c)}", file=out)
        print(f"alpha_c = {_fmt(est.alpha_c)}", file=out)
        if not config.out:
            out.write(csv_text)

    elif config.task == "distance":
        row = distance_row(template, tol=config.tol, variant=config.variant,
                           check_outcome_symmetry=config.outcome_check)
        for model in REFERENCE_MODELS:
            res = row.result(model)
            print(f"d_{model} = {_fmt(res.value)} "
                  f"[{_fmt(res.lower_cert)}, {_fmt(res.upper_cert)}] {res.status}",
                  file=out)
        chosen = row.result(config.reference)
        print(f"distance = {_fmt(chosen.value)}", file=out)
        csv_text = _sweep_csv([row])
        if row.failed:
            exit_code = 2
            meta["failed_rows"] = [template.chi]

    elif config.task in ("fig2", "fig4"):
        if config.task == "fig2":
            rows = sweep_chi(template, config.chi_grid, tol=config.tol,
                             variant=config.variant,
                             check_outcome_symmetry=config.outcome_check)
            key = "chi"
        else:
            rows = sweep_alpha(template, config.alpha_grid, tol=config.tol,
                               variant=config.variant,
                               check_outcome_symmetry=config.outcome_check)
            key = "alpha"
        csv_text = _sweep_csv(rows)
        failed = _failed_rows(rows, key)
        print(f"{len(rows)} rows, {len(failed)} failed", file=out)
        if failed:
            exit_code = 2
            meta["failed_rows"] = failed

    elif config.task == "fig3":
        scan = scan_gamma_chi(template, config.chi_grid,
                              gamma_resolution=config.gamma_resolution,
                              tol=config.tol, variant=config.variant)
        alpha = template.alpha
        csv_text = _gamma_csv(scan, alpha)
        n_cells = sum(len(g) for g in scan.grids)
        n_failed = sum(1 for results in scan.results
                       for r in results if r.status == "failed")
        print(f"{len(scan.chi_values)} chi values, {n_cells} grid cells, "
              f"{n_failed} failed", file=out)
        if n_failed:
            exit_code = 2
            meta["failed_cells"] = n_failed

    elif config.task == "crossover":
        result = find_crossover(template, config.crossover_which,
                                config.crossover_bracket, tol=config.tol,
                                variant=config.variant)
        print(f"crossover_{result.which} = {_fmt(result.value)}", file=out)
        est = crossover_estimates(template)
        estimate = est.chi_c if result.which == "chi" else est.alpha_c
        print(f"estimate_{result.which}_c = {_fmt(estimate)}", file=out)
        csv_text = _sweep_csv(result.history)
        meta["crossover"] = {"which": result.which, "value": result.value,
                             "estimate": estimate}
        failed = _failed_rows(result.history, result.which)
        if failed:
            exit_code = 2
            meta["failed_rows"] = failed

    _write_artifacts(config, csv_text, meta, exit_code, time.monotonic() - start)
    return exit_code


# ---------------------------------------------------------------------------
# command line front end
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qmb",
        description="Dispersive two-qubit readout vs idealized reference "
                    "measurements, compared in certified diamond norm.")
    sub = parser.add_subparsers(dest="task", required=True, metavar="TASK",
                                help=" | ".join(TASKS))
    for task in TASKS:
        p = sub.add_parser(task)
        p.add_argument("--config", metavar="PATH",
                       help="JSON config or run manifest")
        p.add_argument("--out", metavar="PATH", help="CSV output path")
        p.add_argument("--tol", type=float, metavar="X",
                       help="diamond-norm tolerance (default 1e-7)")
        p.add_argument("--nmax", type=int, metavar="N", help="Fock cutoff")
        p.add_argument("--variant", choices=["diagonal", "literal"],
                       help="reference-unitary construction (default literal)")
        p.add_argument("--preset", metavar="NAME",
                       help=f"parameter preset ({' | '.join(sorted(PRESETS))})")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    doc: Dict[str, Any] = {}
    if args.config:
        try:
            with open(args.config) as fh:
                doc = json.load(fh)
        except OSError as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return 1
        except json.JSONDecodeError as exc:
            print(f"error: config is not valid JSON: {exc}", file=sys.stderr)
            return 1
        if isinstance(doc, dict) and "config" in doc and "meta" in doc:
            doc = doc["config"]
    if not isinstance(doc, dict):
        print("error: config root must be a JSON object", file=sys.stderr)
        return 1

    preset = args.preset or doc.get("preset")
    if preset is None and args.task in PRESETS and "params" not in doc:
        preset = args.task
    if preset is not None:
        doc["preset"] = preset
    if doc.get("task") not in (None, args.task):
        print(f"error: config task {doc.get('task')!r} does not match "
              f"subcommand {args.task!r}", file=sys.stderr)
        return 1
    doc["task"] = args.task
    if args.out is not None:
        doc["out"] = args.out
    if args.tol is not None:
        doc["tol"] = args.tol
    if args.variant is not None:
        doc["variant"] = args.variant
    if args.nmax is not None:
        doc.setdefault("params", {})
        doc["params"]["n_max"] = args.nmax

    try:
        config = parse_config(doc)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return run(config)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
