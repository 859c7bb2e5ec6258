"""Command-line front end: flow trajectories, spectra, towers, staircases,
beta-function data and ready-made figure datasets.

Outputs are deterministic: a fixed configuration produces byte-identical
files (see io.py for the table format).  Exit codes: 0 success, 2 invalid
configuration, 3 numerical failure; failures print one machine-parsable line
to stderr.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import __version__
from .elimination import EliminationError, staircase_flow, staircase_grid
from .flow import (
    FlowIntegrationError,
    PoleSignal,
    beta,
    classify,
    fixed_point_locus,
    flow_analytic,
    make_flow_params,
    PartialWave,
)
from .io import Table, write_table
from .spectral import (
    CalibrationError,
    FlowDivergedAtTarget,
    KernelSpec,
    MomentumGrid,
    SpectralError,
    TowerError,
    bound_state_tower,
    build_hamiltonian,
    calibrate_f,
    solve_spectrum,
)

_ENV_OUTDIR = "INVSQRG_OUTDIR"

# Built-in defaults per command; a plain-text config file of `key = value`
# lines may override these, and command-line flags override both.
_DEFAULTS = {
    "flow": {
        "lambda0": 1.0,
        "lambda_span": 100.0,
        "points": 400,
        "through_poles": False,
    },
    "beta": {"f_min": -6.0, "f_max": 3.0, "points": 601},
    "spectrum": {"lambda0": 1.0, "f": 0.0, "n": 400, "split": None},
    "calibrate": {"lambda0": 1.0, "n": 400, "split": None, "index": "0"},
    "tower": {"lambda0": 1.0, "n": 400, "split": None, "f0": None,
              "calibrate": None},
    "staircase": {
        "lambda0": 1.0,
        "lambda1": 0.5,
        "shells": 100,
        "nodes_per_shell": 4,
        "n_low": 200,
        "eref": 0.0,
    },
    "locus": {"l_max": 3.0, "l_step": 0.05},
    "figures": {"points": 481},
}


def _read_config(path: str) -> dict:
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def _coerce_like(value: str, template):
    if template is None or isinstance(template, str):
        return value
    if isinstance(template, bool):
        return value.lower() in ("1", "true", "yes", "on")
    if isinstance(template, int):
        return int(value)
    if isinstance(template, float):
        return float(value)
    return value


def _resolve(args, command: str) -> dict:
    """Merge CLI flags, config-file entries and built-in defaults."""
    merged = dict(_DEFAULTS.get(command, {}))
    if args.config:
        file_values = _read_config(args.config)
        for key, raw in file_values.items():
            template = merged.get(key)
            merged[key] = _coerce_like(raw, template)
    for key, value in vars(args).items():
        if key in ("command", "config", "out", "outdir", "format"):
            continue
        if value is not None:
            merged[key] = value
    return merged


def _outpath(args, default_name: str) -> str:
    if args.out:
        return args.out
    outdir = args.outdir or os.environ.get(_ENV_OUTDIR, ".")
    return os.path.join(outdir, default_name)


def _meta_common(cfg: dict, **extra) -> dict:
    meta = {"version": __version__}
    meta.update({k: v for k, v in cfg.items() if v is not None})
    meta.update(extra)
    return meta


def _flow_series(params, f0, lambda0, ts, through_poles):
    """Sample the closed-form flow; returns (rows, first pole or None).

    Without ``through_poles`` the series stops strictly before the first
    divergence; with it the trajectory is continued across (the limit-cycle
    continuation) and the first divergence is still reported.
    """
    probe = flow_analytic(
        params, f0, lambda0, lambda0 * math.exp(ts[-1]) if ts[-1] != 0 else lambda0
    )
    pole = probe if isinstance(probe, PoleSignal) else None
    rows = []
    for t in ts:
        if pole is not None and not through_poles and t >= pole.t_lo:
            break
        val = flow_analytic(
            params, f0, lambda0, lambda0 * math.exp(t), through_poles=True
        )
        rows.append([float(t), float(val) if not isinstance(val, PoleSignal) else float("nan")])
    return rows, pole


def _cmd_flow(args) -> int:
    cfg = _resolve(args, "flow")
    for key in ("alpha", "l", "f0"):
        if cfg.get(key) is None:
            raise ValueError(f"flow requires --{key.replace('_', '-')}")
    params = make_flow_params(cfg["alpha"], int(cfg["l"]))
    lambda0 = float(cfg["lambda0"])
    span = float(cfg["lambda_span"])
    if span <= 0.0:
        raise ValueError("lambda-span must be > 0")
    t_end = math.log(span)
    ts = np.linspace(0.0, t_end, int(cfg["points"]))
    rows, pole = _flow_series(
        params, float(cfg["f0"]), lambda0, ts, bool(cfg["through_poles"])
    )
    extra = {}
    if pole is not None:
        extra["pole_t_lo"] = pole.t_lo
        extra["pole_t_hi"] = pole.t_hi
    table = Table(
        command="flow",
        columns=[("ln_lambda_ratio", "1"), ("f", "1")],
        meta=_meta_common(cfg, **extra),
        rows=rows,
    )
    path = _outpath(args, f"flow.{args.format}")
    write_table(path, table, args.format)
    print(path)
    return 0


def _cmd_beta(args) -> int:
    cfg = _resolve(args, "beta")
    for key in ("alpha", "l"):
        if cfg.get(key) is None:
            raise ValueError(f"beta requires --{key}")
    params = make_flow_params(cfg["alpha"], int(cfg["l"]))
    fs = np.linspace(float(cfg["f_min"]), float(cfg["f_max"]), int(cfg["points"]))
    rows = [[float(f), float(beta(f, params))] for f in fs]
    table = Table(
        command="beta",
        columns=[("f", "1"), ("beta", "1")],
        meta=_meta_common(cfg, a=params.a, b2=params.b2),
        rows=rows,
    )
    path = _outpath(args, f"beta.{args.format}")
    write_table(path, table, args.format)
    print(path)
    return 0


def _make_grid(cfg) -> MomentumGrid:
    lambda0 = float(cfg["lambda0"])
    n = int(cfg["n"])
    split = cfg.get("split")
    if split is None:
        return MomentumGrid.gauss_legendre(lambda0, n)
    return MomentumGrid.two_panel(lambda0, n, float(split))


def _cmd_spectrum(args) -> int:
    cfg = _resolve(args, "spectrum")
    for key in ("alpha", "l"):
        if cfg.get(key) is None:
            raise ValueError(f"spectrum requires --{key}")
    wave = PartialWave(int(cfg["l"]))
    grid = _make_grid(cfg)
    ham = build_hamiltonian(
        grid, KernelSpec(alpha=float(cfg["alpha"]), wave=wave, f=float(cfg["f"]))
    )
    spectrum = solve_spectrum(ham)
    rows = [[int(i), float(v)] for i, v in enumerate(spectrum.eigenvalues)]
    table = Table(
        command="spectrum",
        columns=[("index", "1"), ("eigenvalue", "momentum^2")],
        meta=_meta_common(cfg, bound_count=int(spectrum.bound_states.size)),
        rows=rows,
    )
    path = _outpath(args, f"spectrum.{args.format}")
    write_table(path, table, args.format)
    print(path)
    return 0


def _parse_index(raw) -> int | None:
    if raw is None:
        return 0
    text = str(raw).strip().lower()
    if text == "auto":
        return None
    return int(text)


def _cmd_calibrate(args) -> int:
    cfg = _resolve(args, "calibrate")
    for key in ("alpha", "l", "target"):
        if cfg.get(key) is None:
            raise ValueError(f"calibrate requires --{key}")
    wave = PartialWave(int(cfg["l"]))
    grid = _make_grid(cfg)
    f0 = calibrate_f(
        grid,
        float(cfg["alpha"]),
        wave,
        float(cfg["target"]),
        index=_parse_index(cfg.get("index")),
    )
    table = Table(
        command="calibrate",
        columns=[("f0", "1")],
        meta=_meta_common(cfg),
        rows=[[float(f0)]],
    )
    path = _outpath(args, f"calibrate.{args.format}")
    write_table(path, table, args.format)
    print(f0)
    return 0


def _cmd_tower(args) -> int:
    cfg = _resolve(args, "tower")
    for key in ("alpha", "l"):
        if cfg.get(key) is None:
            raise ValueError(f"tower requires --{key}")
    if cfg.get("f0") is None and cfg.get("calibrate") is None:
        raise ValueError("tower requires either --f0 or --calibrate E0")
    wave = PartialWave(int(cfg["l"]))
    lambda0 = float(cfg["lambda0"])
    n = int(cfg["n"])
    split = cfg.get("split")
    split = float(split) if split is not None else lambda0 / 200.0
    grid = MomentumGrid.two_panel(lambda0, n, split)
    if cfg.get("calibrate") is not None:
        f0 = calibrate_f(
            grid, float(cfg["alpha"]), wave, float(cfg["calibrate"]), index=None
        )
    else:
        f0 = float(cfg["f0"])
    tower = bound_state_tower(
        float(cfg["alpha"]), wave, f0, lambda0, grid=grid
    )
    rows = []
    for i, e in enumerate(tower.energies):
        ratio = float(tower.ratios[i]) if i < tower.ratios.size else float("nan")
        rows.append([int(i), float(e), ratio])
    table = Table(
        command="tower",
        columns=[("index", "1"), ("eigenvalue", "momentum^2"), ("ratio", "1")],
        meta=_meta_common(
            cfg,
            f0=float(f0),
            split=split,
            band_deep=tower.band_deep,
            band_shallow=tower.band_shallow,
            expected_quotient=tower.expected_quotient,
        ),
        rows=rows,
    )
    path = _outpath(args, f"tower.{args.format}")
    write_table(path, table, args.format)
    print(path)
    return 0


def _cmd_staircase(args) -> int:
    cfg = _resolve(args, "staircase")
    for key in ("alpha", "l", "f0"):
        if cfg.get(key) is None:
            raise ValueError(f"staircase requires --{key}")
    wave = PartialWave(int(cfg["l"]))
    grid, cuts = staircase_grid(
        float(cfg["lambda0"]),
        float(cfg["lambda1"]),
        int(cfg["shells"]),
        nodes_per_shell=int(cfg["nodes_per_shell"]),
        n_low=int(cfg["n_low"]),
    )
    ham = build_hamiltonian(
        grid, KernelSpec(alpha=float(cfg["alpha"]), wave=wave, f=float(cfg["f0"]))
    )
    result = staircase_flow(ham, cuts, eref=float(cfg["eref"]))
    rows = [
        [float(lam), float(g), float(f), float(r)]
        for lam, g, f, r in zip(
            result.cutoffs, result.gamma_hat, result.f_hat,
            result.residual_separability,
        )
    ]
    table = Table(
        command="staircase",
        columns=[
            ("lambda", "momentum"),
            ("gamma_hat", "momentum^-(2l+1)"),
            ("f_hat", "1"),
            ("residual_separability", "1"),
        ],
        meta=_meta_common(cfg),
        rows=rows,
    )
    path = _outpath(args, f"staircase.{args.format}")
    write_table(path, table, args.format)
    print(path)
    return 0


def _locus_rows(alpha: float, l_max: float, l_step: float):
    integers = np.arange(0.0, math.floor(l_max) + 0.5, 1.0)
    dense = np.arange(0.0, l_max + 0.5 * l_step, l_step)
    dense = dense[np.all(np.abs(dense[:, None] - integers[None, :]) > 1e-9, axis=1)]
    ls = np.sort(np.concatenate([integers, dense]))
    return [[float(l), float(a), float(b2)] for l, a, b2 in fixed_point_locus(alpha, ls)]


def _cmd_locus(args) -> int:
    cfg = _resolve(args, "locus")
    if cfg.get("alpha") is None:
        raise ValueError("locus requires --alpha")
    rows = _locus_rows(float(cfg["alpha"]), float(cfg["l_max"]), float(cfg["l_step"]))
    table = Table(
        command="locus",
        columns=[("l", "1"), ("a", "1"), ("b2", "1")],
        meta=_meta_common(cfg),
        rows=rows,
    )
    path = _outpath(args, f"locus.{args.format}")
    write_table(path, table, args.format)
    print(path)
    return 0


def cmd_figures(outdir: str = ".", points: int = 481) -> list[str]:
    """Emit fig1.csv, fig2.csv, fig3.csv with the standard parameters.

    alpha = 9/4 throughout (critical for l = 1).  fig1: flow of f for l = 0
    (limit cycle, continued through its divergences) and l = 1 started at
    f0 = -8 (logarithmic approach to the merged fixed point) and f0 = -0.4
    (divergence at finite cutoff, truncated at the reported bracket).
    fig2: l = 2 flows near and below the two fixed points.  fig3: beta
    functions for l = 0, 1, 2 plus the locus of their minima.
    """
    alpha = 2.25
    written = []

    # fig1 ----------------------------------------------------------------
    ts = np.linspace(0.0, 10.0, points)
    rows = []
    meta = {"version": __version__, "alpha": alpha, "lambda0": 1.0}
    series1 = [
        ("l0_f-8.0", 0, -8.0, True),
        ("l1_f-8.0", 1, -8.0, False),
        ("l1_f-0.4", 1, -0.4, False),
    ]
    for name, l, f0, through in series1:
        params = make_flow_params(alpha, l)
        srows, pole = _flow_series(params, f0, 1.0, ts, through)
        for t, f in srows:
            rows.append([name, t, f])
        if pole is not None and not through:
            meta[f"pole_{name}_t_lo"] = pole.t_lo
            meta[f"pole_{name}_t_hi"] = pole.t_hi
    path1 = os.path.join(outdir, "fig1.csv")
    write_table(
        path1,
        Table(
            command="figures",
            columns=[("series", "label"), ("ln_lambda_ratio", "1"), ("f", "1")],
            meta=meta,
            rows=rows,
        ),
    )
    written.append(path1)

    # fig2 ----------------------------------------------------------------
    params2 = make_flow_params(alpha, 2)
    regime2 = classify(params2)
    ts2 = np.linspace(0.0, 12.0, points)
    rows = []
    meta = {
        "version": __version__,
        "alpha": alpha,
        "lambda0": 1.0,
        "f_plus": regime2.f_plus,
        "f_minus": regime2.f_minus,
    }
    series2 = [
        ("just_below_f_plus", regime2.f_plus - 1.0e-6),
        ("just_above_f_plus", regime2.f_plus + 1.0e-2),
        ("below_f_minus", -8.0),
    ]
    for name, f0 in series2:
        srows, pole = _flow_series(params2, f0, 1.0, ts2, False)
        for t, f in srows:
            rows.append([name, t, f])
        if pole is not None:
            meta[f"pole_{name}_t_lo"] = pole.t_lo
            meta[f"pole_{name}_t_hi"] = pole.t_hi
    path2 = os.path.join(outdir, "fig2.csv")
    write_table(
        path2,
        Table(
            command="figures",
            columns=[("series", "label"), ("ln_lambda_ratio", "1"), ("f", "1")],
            meta=meta,
            rows=rows,
        ),
    )
    written.append(path2)

    # fig3 ----------------------------------------------------------------
    rows = []
    fs = np.linspace(-6.0, 3.0, points)
    for l in (0, 1, 2):
        params = make_flow_params(alpha, l)
        for f in fs:
            rows.append([f"beta_l{l}", float(f), float(beta(f, params))])
    for l, a, b2 in _locus_rows(alpha, 3.0, 0.05):
        rows.append(["minima_locus", a, b2])
    path3 = os.path.join(outdir, "fig3.csv")
    write_table(
        path3,
        Table(
            command="figures",
            columns=[("curve", "label"), ("x", "1"), ("y", "1")],
            meta={"version": __version__, "alpha": alpha},
            rows=rows,
        ),
    )
    written.append(path3)
    return written


def _cmd_figures(args) -> int:
    cfg = _resolve(args, "figures")
    outdir = args.outdir or os.environ.get(_ENV_OUTDIR, ".")
    for path in cmd_figures(outdir, int(cfg["points"])):
        print(path)
    return 0


_HANDLERS = {
    "flow": _cmd_flow,
    "beta": _cmd_beta,
    "spectrum": _cmd_spectrum,
    "calibrate": _cmd_calibrate,
    "tower": _cmd_tower,
    "staircase": _cmd_staircase,
    "locus": _cmd_locus,
    "figures": _cmd_figures,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="invsqrg",
        description="Flow, spectra and shell-elimination cross-checks for the "
        "attractive inverse-square potential.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help="output file path")
        p.add_argument("--outdir", help=f"output directory (default ${_ENV_OUTDIR} or .)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--config", help="key = value config file; flags override")

    p = sub.add_parser("flow", help="flow of f against ln Lambda")
    p.add_argument("--alpha", type=float)
    p.add_argument("--l", type=int)
    p.add_argument("--f0", type=float)
    p.add_argument("--lambda0", type=float)
    p.add_argument("--lambda-span", dest="lambda_span", type=float)
    p.add_argument("--points", type=int)
    p.add_argument("--through-poles", dest="through_poles", action="store_const",
                   const=True)
    common(p)

    p = sub.add_parser("beta", help="beta function over a coupling range")
    p.add_argument("--alpha", type=float)
    p.add_argument("--l", type=int)
    p.add_argument("--f-min", dest="f_min", type=float)
    p.add_argument("--f-max", dest="f_max", type=float)
    p.add_argument("--points", type=int)
    common(p)

    p = sub.add_parser("spectrum", help="eigenvalues of a cutoff Hamiltonian")
    p.add_argument("--alpha", type=float)
    p.add_argument("--l", type=int)
    p.add_argument("--f", type=float)
    p.add_argument("--lambda0", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--split", type=float)
    common(p)

    p = sub.add_parser("calibrate", help="find f0 hitting a target eigenvalue")
    p.add_argument("--alpha", type=float)
    p.add_argument("--l", type=int)
    p.add_argument("--target", type=float)
    p.add_argument("--lambda0", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--split", type=float)
    p.add_argument("--index", help="eigenvalue index (ascending) or 'auto'")
    common(p)

    p = sub.add_parser("tower", help="geometric tower of bound states")
    p.add_argument("--alpha", type=float)
    p.add_argument("--l", type=int)
    p.add_argument("--f0", type=float)
    p.add_argument("--calibrate", type=float,
                   help="calibrate f0 so this eigenvalue is in the tower")
    p.add_argument("--lambda0", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--split", type=float)
    common(p)

    p = sub.add_parser("staircase", help="shell-by-shell elimination trajectory")
    p.add_argument("--alpha", type=float)
    p.add_argument("--l", type=int)
    p.add_argument("--f0", type=float)
    p.add_argument("--lambda0", type=float)
    p.add_argument("--lambda1", type=float)
    p.add_argument("--shells", type=int)
    p.add_argument("--nodes-per-shell", dest="nodes_per_shell", type=int)
    p.add_argument("--n-low", dest="n_low", type=int)
    p.add_argument("--eref", type=float)
    common(p)

    p = sub.add_parser("locus", help="locus of beta-function minima across waves")
    p.add_argument("--alpha", type=float)
    p.add_argument("--l-max", dest="l_max", type=float)
    p.add_argument("--l-step", dest="l_step", type=float)
    common(p)

    p = sub.add_parser("figures", help="emit fig1/fig2/fig3 datasets")
    p.add_argument("--points", type=int)
    common(p)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handler = _HANDLERS[args.command]
    try:
        return handler(args)
    except (ValueError, OSError) as exc:
        print(f'invsqrg: error=validation detail="{exc}"', file=sys.stderr)
        return 2
    except (
        CalibrationError,
        SpectralError,
        TowerError,
        EliminationError,
        FlowIntegrationError,
        FlowDivergedAtTarget,
    ) as exc:
        print(f'invsqrg: error=numerical detail="{exc}"', file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
