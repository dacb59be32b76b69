"""Command-line front end: simulate, criterion, lemmas, sweep.

Configuration lives in one YAML file (nested sections mirroring the
library objects); command-line flags override file values.  All file
outputs are deterministic for a fixed config and RNG seed: floats are
written with 17 significant digits (round-trip exact), JSON keys are
sorted, and wall-clock timing goes to stderr only.

Exit codes: 0 run completed (breaking is a result, not a failure),
1 property-suite violation (lemmas), 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np
import yaml

from .analysis import (
    CriterionVerdict,
    check_criterion_dgh,
    check_criterion_dgh2,
    full_kernel_gap,
    one_sided_gaps,
    sobolev_gap,
)
from .characteristics import advect
from .core import Field, Grid, Parameters, State, ic_preset, make_grid, make_parameters
from .evolution import BlowupReport, SolverConfig, Trajectory, simulate
from .helmholtz import NonlocalOperator, make_operator

__all__ = ["RunConfig", "load_config", "main", "cmd_simulate", "cmd_criterion",
           "cmd_lemmas", "cmd_sweep"]

GAP_TOLERANCE = 1e-8


def _fmt(x) -> str:
    """17 significant digits: round-trip exact and bit-stable across runs."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, str):
        return x.replace(",", ";")
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    """Everything needed to set up one run; mirrors the YAML layout."""

    equation: str = "dgh"
    alpha: float = 1.0
    gamma: float = 0.0
    c0: float = 0.0
    sigma: float = 1.0
    half_length: float | None = None  # defaults to 20*alpha
    n_points: int = 4096
    t_max: float = 2.0
    cfl: float = 0.3
    dt_min: float = 1e-9
    slope_blowup_threshold: float = 1e4
    record_every: int = 4
    initial: dict = dc_field(default_factory=lambda: {"preset": "gaussian_derivative", "args": {"a": 1.0}})
    rho_initial: dict | None = None
    seeds: list[float] = dc_field(default_factory=lambda: [0.0])
    out_dir: str = "out"
    rng_seed: int = 2024
    workers: int = 4
    lemmas: dict = dc_field(default_factory=dict)
    sweep: dict = dc_field(default_factory=dict)

    def parameters(self) -> Parameters:
        return make_parameters(self.alpha, self.gamma, self.c0, self.sigma)

    def grid(self) -> Grid:
        L = self.half_length if self.half_length is not None else 20.0 * self.alpha
        return make_grid(L, self.n_points)

    def solver(self) -> SolverConfig:
        return SolverConfig(
            t_max=self.t_max,
            cfl=self.cfl,
            dt_min=self.dt_min,
            slope_blowup_threshold=self.slope_blowup_threshold,
            record_every=self.record_every,
        )

    def build_field(self, spec: dict, grid: Grid, params: Parameters) -> Field:
        if "samples_file" in spec:
            vals = np.loadtxt(spec["samples_file"], dtype=float)
            return ic_preset("from_samples", grid, params, values=vals)
        preset = spec.get("preset")
        if preset is None:
            raise ConfigError("initial condition needs 'preset' or 'samples_file'")
        args = dict(spec.get("args", {}))
        return ic_preset(preset, grid, params, **args)

    def initial_state(self, grid: Grid, params: Parameters) -> State:
        u0 = self.build_field(self.initial, grid, params)
        rho0 = None
        if self.equation == "dgh2":
            if self.rho_initial is None:
                raise ConfigError("equation dgh2 needs a rho_initial section")
            rho0 = self.build_field(self.rho_initial, grid, params)
        return State(0.0, u0, rho0)


def load_config(path: str | None, overrides: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            raw = yaml.safe_load(p.read_text(encoding="utf-8")) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse config: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a mapping")
        cfg.equation = raw.get("equation", cfg.equation)
        par = raw.get("parameters", {})
        cfg.alpha = float(par.get("alpha", cfg.alpha))
        cfg.gamma = float(par.get("gamma", cfg.gamma))
        cfg.c0 = float(par.get("c0", cfg.c0))
        cfg.sigma = float(par.get("sigma", cfg.sigma))
        grd = raw.get("grid", {})
        if "half_length" in grd:
            cfg.half_length = float(grd["half_length"])
        cfg.n_points = int(grd.get("n_points", cfg.n_points))
        sol = raw.get("solver", {})
        cfg.t_max = float(sol.get("t_max", cfg.t_max))
        cfg.cfl = float(sol.get("cfl", cfg.cfl))
        cfg.dt_min = float(sol.get("dt_min", cfg.dt_min))
        cfg.slope_blowup_threshold = float(
            sol.get("slope_blowup_threshold", cfg.slope_blowup_threshold)
        )
        cfg.record_every = int(sol.get("record_every", cfg.record_every))
        if "initial" in raw:
            cfg.initial = raw["initial"]
        if "rho_initial" in raw:
            cfg.rho_initial = raw["rho_initial"]
        if "seeds" in raw:
            cfg.seeds = [float(s) for s in raw["seeds"]]
        if "out_dir" in raw:
            cfg.out_dir = str(raw["out_dir"])
        if "rng_seed" in raw:
            cfg.rng_seed = int(raw["rng_seed"])
        if "workers" in raw:
            cfg.workers = int(raw["workers"])
        cfg.lemmas = raw.get("lemmas", {})
        cfg.sweep = raw.get("sweep", {})

    flag_map = {
        "alpha": "alpha",
        "gamma": "gamma",
        "c0": "c0",
        "L": "half_length",
        "N": "n_points",
        "tmax": "t_max",
        "cfl": "cfl",
        "seed": "rng_seed",
        "workers": "workers",
        "out": "out_dir",
    }
    for flag, attr in flag_map.items():
        val = getattr(overrides, flag, None)
        if val is not None:
            setattr(cfg, attr, val)
    if cfg.equation not in ("dgh", "dgh2"):
        raise ConfigError(f"equation must be dgh or dgh2, got {cfg.equation!r}")
    return cfg


def _params_payload(params: Parameters) -> dict:
    return {
        "alpha": params.alpha,
        "gamma": params.gamma,
        "c0": params.c0,
        "sigma": params.sigma,
        "lam": params.lam,
        "k": params.k,
        "in_band": params.in_band,
    }


def _verdict_payload(v: CriterionVerdict | None) -> dict | None:
    if v is None:
        return None
    return {
        "holds": v.holds,
        "x0_best": v.x0_best,
        "margin": v.margin,
        "time_bound": v.time_bound,
        "rho_condition_met": v.rho_condition_met,
    }


def _report_payload(rep: BlowupReport) -> dict:
    return {
        "blew_up": rep.blew_up,
        "trigger": rep.trigger,
        "t_detect": rep.t_detect,
        "min_slope_at_detect": rep.min_slope_at_detect,
        "detector_x0": rep.detector_x0,
    }


def _criterion_for(cfg: RunConfig, state: State, params: Parameters) -> CriterionVerdict | None:
    if cfg.equation == "dgh":
        return check_criterion_dgh(state.u, params)
    if params.gamma != 0.0:
        return None  # the two-component criterion is stated only for gamma = 0
    assert state.rho_tilde is not None
    return check_criterion_dgh2(state.u, state.rho_tilde, params)


def _write_trajectory_csv(path: Path, traj: Trajectory) -> None:
    rows = (
        (
            r.state.t,
            r.diagnostics.min_ux,
            r.diagnostics.max_abs_u,
            r.diagnostics.energy_e,
            r.diagnostics.energy_f,
            r.diagnostics.dt,
        )
        for r in traj.records
    )
    _write_csv(path, ["t", "min_ux", "max_abs_u", "E", "F", "dt"], rows)


def cmd_simulate(cfg: RunConfig) -> int:
    params = cfg.parameters()
    grid = cfg.grid()
    state = cfg.initial_state(grid, params)
    op = make_operator(grid, params)
    solver = cfg.solver()

    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    traj, report = simulate(state, solver, op, params)
    wall = time.perf_counter() - t0

    _write_trajectory_csv(out / "trajectory.csv", traj)

    two = state.rho_tilde is not None
    char_meta = []
    for i, x0 in enumerate(cfg.seeds):
        path = advect(traj, float(x0), params)
        name = f"characteristic_{i:03d}.csv"
        header = ["t", "q", "g", "qx", "A_w", "B_w", "A_p", "B_p", "mom_res"]
        if two:
            header.append("rho_res")
        rows = []
        for j in range(path.t.size):
            row = [
                path.t[j], path.q[j], path.g[j], path.qx[j],
                path.a_weighted[j], path.b_weighted[j],
                path.a_plain[j], path.b_plain[j], path.momentum_res[j],
            ]
            if two:
                row.append(path.rho_res[j])
            rows.append(row)
        _write_csv(out / name, header, rows)
        char_meta.append(
            {
                "seed": float(x0),
                "file": name,
                "truncated": path.truncated,
                "weight_overflow": path.weight_overflow,
            }
        )

    verdict = _criterion_for(cfg, state, params)
    summary = {
        "equation": cfg.equation,
        "parameters": _params_payload(params),
        "grid": {"half_length": grid.half_length, "n_points": grid.n_points, "dx": grid.dx},
        "solver": {
            "t_max": solver.t_max,
            "cfl": solver.cfl,
            "dt_min": solver.dt_min,
            "slope_blowup_threshold": solver.slope_blowup_threshold,
            "record_every": solver.record_every,
        },
        "initial": cfg.initial,
        "rho_initial": cfg.rho_initial,
        "seeds": [float(s) for s in cfg.seeds],
        "blowup_report": _report_payload(report),
        "criterion": _verdict_payload(verdict),
        "n_records": len(traj.records),
        "outputs": {
            "trajectory_csv": "trajectory.csv",
            "characteristics": char_meta,
        },
    }
    _write_json(out / "summary.json", summary)
    print(
        f"{cfg.equation}: trigger={report.trigger}"
        + (f", t_detect={report.t_detect:.6g}" if report.t_detect is not None else "")
        + f", records={len(traj.records)} -> {out}"
    )
    print(f"wall time: {wall:.2f}s", file=sys.stderr)
    return 0


def cmd_criterion(cfg: RunConfig) -> int:
    params = cfg.parameters()
    grid = cfg.grid()
    state = cfg.initial_state(grid, params)
    if cfg.equation == "dgh2" and params.gamma != 0.0:
        print(
            "error: the two-component breaking criterion requires gamma = 0 "
            f"(config has gamma = {params.gamma})",
            file=sys.stderr,
        )
        return 2
    verdict = _criterion_for(cfg, state, params)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        "equation": cfg.equation,
        "parameters": _params_payload(params),
        "verdict": _verdict_payload(verdict),
    }
    _write_json(out / "verdict.json", payload)
    assert verdict is not None
    line = (
        f"criterion holds={verdict.holds} x0={verdict.x0_best:.6g} "
        f"margin={verdict.margin:.6g}"
    )
    if verdict.time_bound is not None:
        line += f" time_bound={verdict.time_bound:.6g}"
    print(line)
    return 0


def _random_band_limited(rng: np.random.Generator, grid: Grid, n_modes: int, max_mode: int) -> np.ndarray:
    """Unit-amplitude random field with spectrum confined to low modes."""
    coeffs = np.zeros(grid.n_points // 2 + 1, dtype=complex)
    modes = rng.integers(1, max_mode + 1, size=n_modes)
    coeffs[modes] = rng.normal(size=n_modes) + 1j * rng.normal(size=n_modes)
    coeffs *= np.exp(-np.arange(coeffs.size) / (max_mode / 2.0))
    vals = np.fft.irfft(coeffs, n=grid.n_points)
    peak = np.max(np.abs(vals))
    return vals / peak if peak > 0 else vals


def _gap_entries(u: Field, op: NonlocalOperator, params: Parameters) -> dict:
    gm, gp = one_sided_gaps(u, op, params)
    fk = full_kernel_gap(u, op, params)
    return {
        "one_sided_minus": {"min_gap": gm.min_gap, "argmin_x": gm.argmin_x},
        "one_sided_plus": {"min_gap": gp.min_gap, "argmin_x": gp.argmin_x},
        "full_kernel": {"min_gap": fk.min_gap, "argmin_x": fk.argmin_x},
        "sup_embedding": {"min_gap": sobolev_gap(u, params)},
    }


def cmd_lemmas(cfg: RunConfig, corrupt_operator: bool = False) -> int:
    params = cfg.parameters()
    grid = cfg.grid()
    op = make_operator(grid, params)
    if corrupt_operator:
        # test hook: flip the kernel symbol's sign so every convolution
        # bound fails (flipping the derivative symbol alone would only
        # mirror the one-sided pair)
        object.__setattr__(op, "symbol_q", -op.symbol_q)

    lem = cfg.lemmas
    n_random = int(lem.get("n_random", 50))
    n_modes = int(lem.get("n_modes", 30))
    max_mode = int(lem.get("max_mode", 80))
    resolutions = [int(n) for n in lem.get("resolutions", [1024, 2048, 4096])]
    rng = np.random.default_rng(cfg.rng_seed)

    fields: list[tuple[str, Field, Parameters]] = [
        ("gaussian_bump", ic_preset("gaussian_bump", grid), params),
        ("gaussian_derivative", ic_preset("gaussian_derivative", grid), params),
        ("sech_bump", ic_preset("sech_bump", grid), params),
        (
            "peakon_witness",
            ic_preset("peakon_shifted", grid, params, c=1.0, y=0.0, k=params.k),
            params,
        ),
    ]
    for i in range(n_random):
        kv = float(rng.uniform(-1.0, 1.0))
        pk = make_parameters(params.alpha, 0.0, 2.0 * kv, params.sigma)
        vals = _random_band_limited(rng, grid, n_modes, max_mode)
        fields.append((f"random_{i:03d}", ic_preset("from_samples", grid, values=vals), pk))

    results = {}
    worst = np.inf
    for name, u, pars in fields:
        opu = op if pars is params else _maybe_corrupt(make_operator(grid, pars), corrupt_operator)
        entry = _gap_entries(u, opu, pars)
        results[name] = entry
        worst = min(worst, *(e["min_gap"] for e in entry.values()))

    witness = _witness_study(params, resolutions, corrupt_operator)

    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ok = worst >= -GAP_TOLERANCE
    payload = {
        "parameters": _params_payload(params),
        "rng_seed": cfg.rng_seed,
        "gap_tolerance": GAP_TOLERANCE,
        "n_random_fields": n_random,
        "fields": results,
        "peakon_witness_study": witness,
        "worst_min_gap": worst,
        "passed": ok,
    }
    _write_json(out / "lemmas_report.json", payload)
    print(f"inequality suite over {len(fields)} fields: worst min gap = {worst:.3e}")
    print(
        "peakon witness: gap(peak) at finest = "
        f"{witness['levels'][-1]['gap_at_peak']:.3e}, equality-region gap = "
        f"{witness['levels'][-1]['gap_equality_region']:.3e}, order = "
        f"{witness['equality_region_order']:.2f}"
    )
    if not ok:
        print(f"FAIL: min gap {worst:.3e} below -{GAP_TOLERANCE:.0e}", file=sys.stderr)
        return 1
    return 0


def _maybe_corrupt(op: NonlocalOperator, corrupt: bool) -> NonlocalOperator:
    if corrupt:
        object.__setattr__(op, "symbol_q", -op.symbol_q)
    return op


def _witness_study(params: Parameters, resolutions: list[int], corrupt: bool) -> dict:
    """Sharpness study: the peakon profile attains equality in the
    one-sided inequality on one side of its peak.  The peak carries a
    slope jump, so the gap right at it shrinks only linearly in N, while
    on the equality region away from the kink the gap converges at
    order ~2; both are reported."""
    levels = []
    exclusion = 0.25 * params.alpha
    for n in resolutions:
        grid = make_grid(20.0 * params.alpha, n)
        op = _maybe_corrupt(make_operator(grid, params), corrupt)
        u = ic_preset("peakon_shifted", grid, params, c=1.0, y=0.0, k=params.k)
        gm, _ = one_sided_gaps(u, op, params)
        x = grid.nodes
        ipk = int(np.argmin(np.abs(x)))
        region = x <= -exclusion
        levels.append(
            {
                "n_points": n,
                "gap_at_peak": float(gm.field.values[ipk]),
                "gap_equality_region": float(np.max(np.abs(gm.field.values[region]))),
                "min_gap": gm.min_gap,
                "sup_embedding_gap": float(sobolev_gap(u, params)),
            }
        )
    order = np.nan
    if len(levels) >= 2:
        g0 = abs(levels[0]["gap_equality_region"])
        g1 = abs(levels[-1]["gap_equality_region"])
        steps = np.log2(levels[-1]["n_points"] / levels[0]["n_points"])
        if g1 > 0 and steps > 0:
            order = float(np.log2(g0 / g1) / steps)
    return {
        "equality_region_excludes": f"|x - y| < {exclusion}",
        "levels": levels,
        "equality_region_order": order,
    }


def _sweep_cells(cfg: RunConfig) -> list[tuple[int, float, float, float]]:
    sw = cfg.sweep
    amplitudes = [float(a) for a in sw.get("amplitudes", [])]
    pairs = [(float(c), float(g)) for c, g in sw.get("c0_gamma", [])]
    if not amplitudes and not pairs:
        raise ConfigError("sweep needs a non-empty 'amplitudes' and/or 'c0_gamma' axis")
    if not amplitudes:
        amplitudes = [1.0]
    if not pairs:
        pairs = [(cfg.c0, cfg.gamma)]
    cells = []
    idx = 0
    for c0, gamma in pairs:
        for amp in amplitudes:
            cells.append((idx, amp, c0, gamma))
            idx += 1
    return cells


def _run_cell(cfg: RunConfig, cell: tuple[int, float, float, float]) -> list:
    idx, amp, c0, gamma = cell
    try:
        params = make_parameters(cfg.alpha, gamma, c0, cfg.sigma)
        grid = cfg.grid()
        base = cfg.build_field(cfg.initial, grid, params)
        u0 = ic_preset("from_samples", grid, params, values=amp * base.values)
        rho0 = None
        if cfg.equation == "dgh2":
            assert cfg.rho_initial is not None
            rho0 = cfg.build_field(cfg.rho_initial, grid, params)
        state = State(0.0, u0, rho0)
        verdict = _criterion_for(cfg, state, params)
        op = make_operator(grid, params)
        traj, report = simulate(state, cfg.solver(), op, params)
        v = verdict
        return [
            idx, amp, c0, gamma, cfg.alpha,
            v.holds if v else "", v.margin if v else "",
            v.time_bound if v else "",
            report.blew_up, report.trigger, report.t_detect,
            report.min_slope_at_detect, "ok",
        ]
    except Exception as exc:  # breakdowns are results, not sweep failures
        return [idx, amp, c0, gamma, cfg.alpha, "", "", "", "", "", "", "",
                f"error: {type(exc).__name__}: {exc}"]


SWEEP_HEADER = [
    "index", "amplitude", "c0", "gamma", "alpha", "holds", "margin",
    "time_bound", "blew_up", "trigger", "t_detect", "min_slope_at_detect",
    "status",
]


def cmd_sweep(cfg: RunConfig) -> int:
    cells = _sweep_cells(cfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    workers = max(1, int(cfg.workers))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(lambda cell: _run_cell(cfg, cell), cells))
    rows.sort(key=lambda r: r[0])
    _write_csv(out / "sweep.csv", SWEEP_HEADER, rows)
    print(f"sweep: {len(rows)} cells -> {out / 'sweep.csv'}")
    print(f"wall time: {time.perf_counter() - t0:.2f}s", file=sys.stderr)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dgh-lab",
        description="Numerical laboratory for wave breaking in the DGH equation "
        "and its two-component system.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("simulate", "run one simulation and write trajectory/characteristics/summary"),
        ("criterion", "evaluate the local breaking criterion on the initial datum"),
        ("lemmas", "verify the sharp convolution/embedding inequalities"),
        ("sweep", "run a parameter sweep and write one CSV row per cell"),
    ):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", type=str, default=None, help="YAML config file")
        sp.add_argument("--out", type=str, default=None, help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="RNG seed (randomized suites)")
        sp.add_argument("--workers", type=int, default=None, help="sweep worker pool size")
        sp.add_argument("--alpha", type=float, default=None)
        sp.add_argument("--gamma", type=float, default=None)
        sp.add_argument("--c0", type=float, default=None)
        sp.add_argument("--L", type=float, default=None, help="domain half-length")
        sp.add_argument("--N", type=int, default=None, help="number of grid points")
        sp.add_argument("--tmax", type=float, default=None)
        sp.add_argument("--cfl", type=float, default=None)
        if name == "lemmas":
            sp.add_argument(
                "--corrupt-operator",
                action="store_true",
                help=argparse.SUPPRESS,  # negative-control test hook
            )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "criterion":
            return cmd_criterion(cfg)
        if args.command == "lemmas":
            return cmd_lemmas(cfg, corrupt_operator=getattr(args, "corrupt_operator", False))
        if args.command == "sweep":
            return cmd_sweep(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
