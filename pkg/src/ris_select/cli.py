"""Batch front-end: single evaluations, parameter sweeps, figure presets.

Exit codes: 0 success, 1 ingestion/validation failure, 2 regime or geometry
diagnostic failure under --strict. Sweep CSVs are bit-identical across runs
for a fixed (scenario, spec, seed); per-cell Monte Carlo seeds are derived as
base_seed XOR cell index, with cells numbered axis-major then type-major in
the fixed type order R, T, H.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .capacity import allocate_power, closed_form_rate, monte_carlo_capacity, upper_bound
from .channel import DegenerateGeometryError, link_budget
from .scenario import (
    ConfigError,
    RisType,
    ScenarioConfig,
    config_digest,
    dbm_to_watts,
    load_scenario,
    validate_approximation_regime,
)
from .selection import (
    RegimeViolationError,
    asymptotic_checks,
    brute_force_optimal,
    decide_type,
)

SEED_ENV_VAR = "RIS_SELECT_SEED"
DEFAULT_TRIALS = 100
TYPE_ORDER = (RisType.REFLECTIVE, RisType.TRANSMISSIVE, RisType.HYBRID)
SWEEP_AXES = ("transmit_power_dbm", "users_transmission", "ris_rows_cols", "distances")
SWEEP_OUTPUTS = ("closed_form", "upper_bound", "monte_carlo", "decision", "diagnostics")
CSV_HEADER = "axis_value,type,closed_form,upper_bound,mc_mean,mc_stderr,decision,agrees"
DIAGNOSTICS_HEADER = ("axis_value,element_count_scale,reflect_exponent,"
                      "transmit_exponent,element_count_threshold,element_count,"
                      "hybrid_favored,log_pattern_term,mismatch_term,"
                      "hybrid_vs_transmit_approx")


@dataclass(frozen=True)
class SweepSpec:
    """One sweep axis with its values and requested outputs."""

    axis: str
    values: tuple
    trials: int
    base_seed: int
    outputs: tuple

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ConfigError(f"sweep axis must be one of {', '.join(SWEEP_AXES)}; "
                              f"got {self.axis!r}")
        if not self.values:
            raise ConfigError("sweep values must be non-empty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ConfigError("sweep values must be strictly increasing")
        unknown = [o for o in self.outputs if o not in SWEEP_OUTPUTS]
        if unknown:
            raise ConfigError(f"unknown sweep outputs: {', '.join(unknown)}")
        if "monte_carlo" in self.outputs and self.trials < 1:
            raise ConfigError("trials must be >= 1 when monte_carlo is requested")


@dataclass(frozen=True)
class SweepVariant:
    """A named sweep plus the scenario overrides it runs under."""

    name: str
    overrides: dict
    spec: SweepSpec


def parse_sweep_spec(text: str, trials: int | None = None,
                     base_seed: int | None = None) -> SweepSpec:
    """Parse a sweep-spec file (same key = value format as scenarios)."""
    from .scenario import ConfigSyntaxError, _iter_config_lines

    entries: dict[str, str] = {}
    for lineno, key, value in _iter_config_lines(text):
        if key in entries:
            raise ConfigSyntaxError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = value
    known = {"axis", "values", "trials", "base_seed", "outputs"}
    unknown = set(entries) - known
    if unknown:
        raise ConfigSyntaxError(f"unknown sweep keys: {', '.join(sorted(unknown))}")
    for required in ("axis", "values"):
        if required not in entries:
            raise ConfigError(f"sweep spec missing required key {required!r}")

    values = tuple(float(v) for v in entries["values"].split(",") if v.strip())
    outputs = tuple(
        o.strip() for o in entries.get(
            "outputs", "closed_form,upper_bound,monte_carlo,decision").split(",")
        if o.strip()
    )
    return SweepSpec(
        axis=entries["axis"],
        values=values,
        trials=trials if trials is not None else int(entries.get("trials", DEFAULT_TRIALS)),
        base_seed=base_seed if base_seed is not None else int(entries.get("base_seed", 0)),
        outputs=outputs,
    )


# --- scenario rewrites -----------------------------------------------------------

def _with_panel_size(cfg: ScenarioConfig, rows: int, cols: int) -> ScenarioConfig:
    panel = cfg.panel
    new_grids = {}
    for name in ("phase_reflect", "phase_transmit"):
        grid = getattr(panel, name)
        levels = np.unique(grid)
        if levels.size > 1:
            raise ConfigError("cannot resize a panel with a non-constant "
                              f"{name} grid")
        new_grids[name] = np.full((rows, cols), levels[0] if levels.size else 0.0)
    return replace(cfg, panel=replace(panel, rows=rows, cols=cols, **new_grids))


def apply_overrides(cfg: ScenarioConfig, overrides: dict) -> ScenarioConfig:
    """Apply preset/sweep overrides; panel resizes keep constant phase grids."""
    overrides = dict(overrides)
    rows = overrides.pop("ris_rows", None)
    cols = overrides.pop("ris_cols", None)
    if rows is not None or cols is not None:
        cfg = _with_panel_size(cfg, rows or cfg.panel.rows, cols or cfg.panel.cols)
    if overrides:
        cfg = replace(cfg, **overrides)
    return cfg


def apply_axis_value(cfg: ScenarioConfig, axis: str, value: float) -> ScenarioConfig:
    if axis == "transmit_power_dbm":
        return replace(cfg, transmit_power=dbm_to_watts(value))
    if axis == "users_transmission":
        return replace(cfg, users_transmission=int(value))
    if axis == "ris_rows_cols":
        side = int(value)
        return _with_panel_size(cfg, side, side)
    if axis == "distances":
        return replace(cfg, bs_ris_distance=float(value), ris_ue_distance=float(value))
    raise ConfigError(f"unknown sweep axis {axis!r}")


def preset_variants(name: str, trials: int, base_seed: int) -> list[SweepVariant]:
    """The built-in figure-dataset sweeps."""
    if name == "fig2a":
        spec = SweepSpec(
            axis="transmit_power_dbm",
            values=tuple(float(p) for p in range(20, 51, 2)),
            trials=trials,
            base_seed=base_seed,
            outputs=("closed_form", "upper_bound", "monte_carlo", "decision"),
        )
        overrides = {"users_transmission": 7, "ris_rows": 50, "ris_cols": 50,
                     "bs_ris_distance": 50.0, "ris_ue_distance": 50.0}
        return [SweepVariant("fig2a", overrides, spec)]

    split_spec = SweepSpec(
        axis="users_transmission",
        values=tuple(float(v) for v in range(1, 10)),
        trials=trials,
        base_seed=base_seed,
        outputs=("closed_form", "upper_bound", "decision"),
    )
    if name == "fig2b":
        return [
            SweepVariant(f"fig2b_d{d}",
                         {"ris_rows": 100, "ris_cols": 100,
                          "bs_ris_distance": float(d), "ris_ue_distance": float(d)},
                         split_spec)
            for d in (50, 100, 200)
        ]
    if name == "fig2c":
        return [
            SweepVariant(f"fig2c_mn{side}",
                         {"ris_rows": side, "ris_cols": side,
                          "bs_ris_distance": 100.0, "ris_ue_distance": 100.0},
                         split_spec)
            for side in (50, 100, 150)
        ]
    raise ConfigError(f"unknown preset {name!r}")


# --- serialization helpers --------------------------------------------------------

def _jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _jsonable(getattr(obj, f.name))
                for f in dataclasses.fields(obj)}
    if isinstance(obj, RisType):
        return obj.value
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)
    return obj


def _fmt(value) -> str:
    """Locale-free cell formatting: 12 significant digits, empty for None."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.12g}"


def _threshold_text(thresholds) -> str:
    def one(v):
        return "-" if v is None else f"{v:.4f}"

    return (f"splits R|T={one(thresholds.split_reflect_transmit)} "
            f"R|H={one(thresholds.split_reflect_hybrid)} "
            f"T|H={one(thresholds.split_transmit_hybrid)}")


# --- evaluation -------------------------------------------------------------------

def run_evaluate(scenario_path: Path, out_dir: Path, trials: int, seed: int,
                 strict: bool) -> int:
    """Evaluate all three types on one scenario and write evaluate.json."""
    try:
        cfg = load_scenario(Path(scenario_path))
    except OSError:
        print(f"error: cannot read scenario file {scenario_path}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    try:
        budget = link_budget(cfg)
    except DegenerateGeometryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2 if strict else 1

    regime = validate_approximation_regime(cfg)
    if strict and not regime.ok:
        print(f"error: approximation regime check failed "
              f"(isotropy ratio {regime.isotropy_ratio:.4g}, "
              f"min received SNR {regime.min_received_snr:.4g})", file=sys.stderr)
        return 2

    reports = {}
    for index, ris_type in enumerate(TYPE_ORDER):
        alloc = allocate_power(cfg, ris_type, budget)
        reports[ris_type.value] = monte_carlo_capacity(
            cfg, ris_type, alloc, trials, base_seed=(seed, index))

    decision_error = None
    try:
        decision = decide_type(cfg, budget)
    except RegimeViolationError as exc:
        if strict:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        decision = None
        decision_error = str(exc)

    record = {
        "scenario_digest": config_digest(cfg),
        "scenario_file": str(scenario_path),
        "trials": trials,
        "seed": seed,
        "link_budget": _jsonable(budget),
        "regime": _jsonable(regime),
        "capacity": _jsonable(reports),
    }
    if decision is not None:
        record["selection"] = _jsonable(decision)
    else:
        winner, rates = brute_force_optimal(cfg, budget)
        record["selection"] = {
            "error": decision_error,
            "brute_force_optimal": winner.value,
            "rates": _jsonable({k.value: v for k, v in rates.items()}),
        }
    if 1 <= cfg.users_transmission <= cfg.users_total - 1:
        record["diagnostics"] = _jsonable(asymptotic_checks(cfg, budget))

    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        out_path = out_dir / "evaluate.json"
        out_path.write_text(json.dumps(record, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot write results to {out_dir}: {exc}", file=sys.stderr)
        return 1

    rates_text = " ".join(
        f"{t.letter}={reports[t.value].closed_form:.3f}" for t in TYPE_ORDER)
    if decision is not None:
        summary = (f"optimal={decision.brute_force_optimal.value} "
                   f"(table={decision.optimal.value}, "
                   f"agrees={'yes' if decision.agrees else 'no'}) "
                   f"rates[b/s/Hz]: {rates_text} "
                   f"{_threshold_text(decision.thresholds)}")
    else:
        winner, _ = brute_force_optimal(cfg, budget)
        summary = (f"optimal={winner.value} (table unavailable: "
                   f"{decision_error}) rates[b/s/Hz]: {rates_text}")
    print(summary)
    return 0


def _diagnostics_row(cfg: ScenarioConfig, value, budget) -> str:
    cells = [_fmt(value)]
    if 1 <= cfg.users_transmission <= cfg.users_total - 1:
        diag = asymptotic_checks(cfg, budget)
        cells += [_fmt(x) for x in (
            diag.element_count_scale, diag.reflect_exponent,
            diag.transmit_exponent, diag.element_count_threshold,
            diag.element_count, diag.hybrid_favored, diag.log_pattern_term,
            diag.mismatch_term, diag.hybrid_vs_transmit_approx)]
    else:
        cells += [""] * 9  # single-zone splits carry no crossover diagnostics
    return ",".join(cells)


def _sweep_rows(cfg: ScenarioConfig, spec: SweepSpec, strict: bool):
    rows = []
    diagnostics_rows = []
    want_cf = "closed_form" in spec.outputs
    want_ub = "upper_bound" in spec.outputs
    want_mc = "monte_carlo" in spec.outputs
    want_decision = "decision" in spec.outputs
    want_diagnostics = "diagnostics" in spec.outputs

    for axis_index, value in enumerate(spec.values):
        cell_cfg = apply_axis_value(cfg, spec.axis, value)
        budget = link_budget(cell_cfg)

        decision_letter, agrees = None, None
        if want_decision:
            try:
                decision = decide_type(cell_cfg, budget)
                decision_letter = decision.brute_force_optimal.letter
                agrees = decision.agrees
            except RegimeViolationError as exc:
                if strict:
                    raise
                winner, _ = brute_force_optimal(cell_cfg, budget)
                decision_letter = winner.letter
                agrees = None
        if want_diagnostics:
            diagnostics_rows.append(_diagnostics_row(cell_cfg, value, budget))

        for type_index, ris_type in enumerate(TYPE_ORDER):
            alloc = allocate_power(cell_cfg, ris_type, budget)
            closed = closed_form_rate(cell_cfg, ris_type, budget) if want_cf else None
            bound = upper_bound(cell_cfg, ris_type, alloc, budget) if want_ub else None
            mc_mean = mc_stderr = None
            if want_mc:
                cell_seed = spec.base_seed ^ (axis_index * len(TYPE_ORDER) + type_index)
                report = monte_carlo_capacity(cell_cfg, ris_type, alloc,
                                              spec.trials, base_seed=cell_seed)
                mc_mean, mc_stderr = report.monte_carlo_mean, report.monte_carlo_stderr
            rows.append(",".join([
                _fmt(value), ris_type.letter, _fmt(closed), _fmt(bound),
                _fmt(mc_mean), _fmt(mc_stderr), decision_letter or "",
                _fmt(agrees),
            ]))
    return rows, diagnostics_rows


def run_sweep(scenario_path: Path, variants: list[SweepVariant], out_dir: Path,
              strict: bool) -> int:
    """Run one or more sweep variants and write one CSV per variant."""
    try:
        cfg = load_scenario(Path(scenario_path))
    except OSError:
        print(f"error: cannot read scenario file {scenario_path}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output dir {out_dir}: {exc}", file=sys.stderr)
        return 1

    for variant in variants:
        try:
            base_cfg = apply_overrides(cfg, variant.overrides)
            rows, diagnostics_rows = _sweep_rows(base_cfg, variant.spec, strict)
        except (ConfigError, DegenerateGeometryError, RegimeViolationError) as exc:
            print(f"error [{variant.name}]: {exc}", file=sys.stderr)
            return 2 if strict and isinstance(
                exc, (DegenerateGeometryError, RegimeViolationError)) else 1
        outputs = [(out_dir / f"{variant.name}.csv", CSV_HEADER, rows)]
        if diagnostics_rows:
            outputs.append((out_dir / f"{variant.name}_diagnostics.csv",
                            DIAGNOSTICS_HEADER, diagnostics_rows))
        for csv_path, header, body in outputs:
            try:
                csv_path.write_text("\n".join([header] + body) + "\n",
                                    encoding="utf-8")
            except OSError as exc:
                print(f"error: cannot write {csv_path}: {exc}", file=sys.stderr)
                return 1
            print(f"wrote {csv_path} ({len(body)} rows)")
    return 0


# --- entry point ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ris-select",
        description="Evaluate sum rates and pick the best surface type for a "
                    "deployment; optionally sweep one parameter axis to CSV.",
    )
    parser.add_argument("--scenario", required=True, type=Path,
                        help="scenario config file (key = value text)")
    parser.add_argument("--sweep", type=Path,
                        help="sweep spec file; runs a sweep instead of a single evaluation")
    parser.add_argument("--preset", choices=["fig2a", "fig2b", "fig2c"],
                        help="built-in sweep preset")
    parser.add_argument("--out", type=Path, default=Path("."),
                        help="output directory (default: current directory)")
    parser.add_argument("--trials", type=int, default=None,
                        help=f"Monte Carlo trials per cell (default {DEFAULT_TRIALS})")
    parser.add_argument("--seed", type=int, default=None,
                        help=f"base seed (default: ${SEED_ENV_VAR} or 0)")
    parser.add_argument("--strict", action="store_true",
                        help="exit 2 on regime or geometry diagnostics")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.sweep is not None and args.preset is not None:
        print("error: pass either --sweep or --preset, not both", file=sys.stderr)
        return 1

    # seed precedence: --seed flag, then the env fallback, then any sweep-file
    # default, then 0
    seed_override = args.seed
    if seed_override is None and SEED_ENV_VAR in os.environ:
        try:
            seed_override = int(os.environ[SEED_ENV_VAR])
        except ValueError:
            print(f"error: {SEED_ENV_VAR} must be an integer", file=sys.stderr)
            return 1
    seed = seed_override if seed_override is not None else 0
    trials = args.trials if args.trials is not None else DEFAULT_TRIALS

    if args.preset is not None:
        try:
            variants = preset_variants(args.preset, trials, seed)
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        return run_sweep(args.scenario, variants, args.out, args.strict)

    if args.sweep is not None:
        try:
            text = Path(args.sweep).read_text(encoding="utf-8")
        except OSError:
            print(f"error: cannot read sweep spec {args.sweep}", file=sys.stderr)
            return 1
        try:
            spec = parse_sweep_spec(text, trials=args.trials, base_seed=seed_override)
        except (ConfigError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        variant = SweepVariant(Path(args.sweep).stem, {}, spec)
        return run_sweep(args.scenario, [variant], args.out, args.strict)

    return run_evaluate(args.scenario, args.out, trials, seed, args.strict)


if __name__ == "__main__":
    raise SystemExit(main())
