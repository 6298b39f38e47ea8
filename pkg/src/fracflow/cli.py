"""Command-line front end: configs in, fields/curves/reports out.

Subcommands
-----------
ml eval      evaluate E_{alpha,beta}(z), printing value and method
ml verify    operator-level battery (decomposition identity scan)
solve        run the memory march, writing FHF1 fields + diagnostics
norms        Morrey / Sobolev-Morrey norm of a stored field, with argmax
verify       run one named check; the exit code mirrors its verdict
report       collect report.json files under a directory into report.md

Exit codes: 0 success / all checks passed, 1 a check ran and failed,
2 anything that prevented a verdict (bad config, missing file, solver
blow-up).  Every output directory receives the effective config echo
(effective_config.json, reparseable) and a VERSION stamp; outputs are
deterministic functions of (config, seed).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .mlf import DomainError, MLParams, ml_eval
from .norms import BallFamily, NormSpec, exponent_report, morrey_norm, \
    morrey_norm_argmax
from .solver import NonContraction, Overflow, solve
from .spectral import FileFormatError, Grid, load_field, riesz, save_field
from .verify import SmoothingSpec, build_run, check_decay, \
    check_decomposition, check_mikhlin, check_selfsimilarity, \
    check_smoothing, check_stability, check_symmetry, mikhlin_curve, \
    saturating_profile, smoothing_curve

__all__ = ["SchemaError", "RunConfig", "parse_config", "main"]


class SchemaError(ValueError):
    """Config document violates the schema; message names the key path."""


# ---------------------------------------------------------------------------
# configuration schema

_SCHEMA = {
    "grid": {"dim": 2, "points": 64, "length": 1.0},
    "problem": {"alpha": 1.5, "rho": 3.0, "q": None,
                "kappa1": 0.0, "kappa2": 0.0},
    "data": {"generator": "homogeneous_radial", "amp_phi": 0.05,
             "amp_psi": 0.0, "eps_m": None, "width": 0.1, "k1": 2,
             "phi_values": None, "psi_values": None},
    "timegrid": {"t_end": 0.05 ** (4.0 / 3.0), "n_steps": 24,
                 "kind": "uniform"},
    "picard": {"max_sweeps": 25, "sweep_tol": 1e-10},
    "norms": {"p": 1.5, "r": 3.0},
    "verify": {"gammas": [2.0 ** 0.25, 2.0 ** 0.5], "parity": 1,
               "group": "dihedral", "scales": [1e-2, 1e-3, 1e-4],
               "beta_ml": 1.0, "k": 2.0, "delta": 1.0, "max_order": 2},
}

# expected type of the keys whose default is null
_NULL_TYPES = {
    ("problem", "q"): float,
    ("data", "eps_m"): float,
    ("data", "phi_values"): list,
    ("data", "psi_values"): list,
}


def _type_ok(val, default, null_type) -> bool:
    if val is None:
        return null_type is not None
    want = null_type if default is None else type(default)
    if want is float:
        return isinstance(val, (int, float)) and not isinstance(val, bool)
    if want is int:
        return isinstance(val, int) and not isinstance(val, bool)
    return isinstance(val, want)


def _validate(doc: dict) -> None:
    if not isinstance(doc, dict):
        raise SchemaError("top level must be a JSON object")
    for bname, block in doc.items():
        if bname == "seed":
            if not _type_ok(block, 0, None):
                raise SchemaError("seed: expected an integer")
            continue
        if bname not in _SCHEMA:
            raise SchemaError(f"unknown key {bname!r}")
        if not isinstance(block, dict):
            raise SchemaError(f"{bname}: expected an object")
        for key, val in block.items():
            if key not in _SCHEMA[bname]:
                raise SchemaError(f"unknown key {bname}.{key!r}")
            default = _SCHEMA[bname][key]
            if not _type_ok(val, default, _NULL_TYPES.get((bname, key))):
                raise SchemaError(
                    f"{bname}.{key}: expected "
                    f"{(_NULL_TYPES.get((bname, key)) or type(default)).__name__},"
                    f" got {type(val).__name__}")


def _merge(base: dict, over: dict) -> dict:
    out = {k: dict(v) if isinstance(v, dict) else v for k, v in base.items()}
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Fully populated, schema-checked configuration (nested blocks)."""

    blocks: dict
    seed: int = 0

    def __getitem__(self, name: str) -> dict:
        return self.blocks[name]

    def flat(self) -> dict:
        """The flattened key set that build_run consumes."""
        b = self.blocks
        out = {
            "dim": b["grid"]["dim"], "points": b["grid"]["points"],
            "length": b["grid"]["length"],
            "alpha": b["problem"]["alpha"], "rho": b["problem"]["rho"],
            "q": b["problem"]["q"], "kappa1": b["problem"]["kappa1"],
            "kappa2": b["problem"]["kappa2"],
            "generator": b["data"]["generator"],
            "amp_phi": b["data"]["amp_phi"], "amp_psi": b["data"]["amp_psi"],
            "eps_m": b["data"]["eps_m"], "width": b["data"]["width"],
            "k1": b["data"]["k1"],
            "t_end": b["timegrid"]["t_end"],
            "n_steps": b["timegrid"]["n_steps"],
            "grid_kind": b["timegrid"]["kind"],
            "max_sweeps": b["picard"]["max_sweeps"],
            "sweep_tol": b["picard"]["sweep_tol"],
            "p": b["norms"]["p"], "r": b["norms"]["r"],
            "seed": self.seed,
        }
        # build_run tests membership for these, so only pass real arrays
        for key in ("phi_values", "psi_values"):
            if b["data"][key] is not None:
                out[key] = b["data"][key]
        return out

    def dumps(self) -> str:
        doc = dict(self.blocks)
        doc["seed"] = self.seed
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def parse_config(path=None, overlay: dict = None,
                 seed: int = None) -> RunConfig:
    """Load, validate and default-fill a JSON config document.

    `overlay` (internal) sits between the schema defaults and the user's
    document, so per-check calibrated setups stay overridable.  The echo
    written next to outputs contains every key explicitly and reparses to
    an equal RunConfig.
    """
    doc = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path} is not valid JSON: {exc}")
    _validate(doc)
    blocks = {k: dict(v) for k, v in _SCHEMA.items()}
    if overlay:
        blocks = _merge(blocks, overlay)
    doc_seed = doc.pop("seed", None)
    blocks = _merge(blocks, doc)
    if seed is None:
        seed = 0 if doc_seed is None else doc_seed
    return RunConfig(blocks, int(seed))


# ---------------------------------------------------------------------------
# artifact helpers


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _emit_stamp(out_dir: Path, cfg: RunConfig = None) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "VERSION").write_text(f"fracflow {__version__}\n")
    if cfg is not None:
        (out_dir / "effective_config.json").write_text(cfg.dumps())


def _write_csv(path: Path, header, columns) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow([f"{v:.12g}" for v in row])


def _write_svg(path: Path, x, curves: dict, title: str) -> None:
    """Log-log polyline plot, no plotting dependency.

    Non-positive samples are dropped per curve (these are magnitude
    curves; zero means 'below floor').
    """
    width, height, pad = 640, 420, 50
    xs = np.log10(np.asarray(x, dtype=float))
    finite_ys = [np.log10(np.asarray(y, dtype=float)[np.asarray(y) > 0.0])
                 for y in curves.values()]
    finite_ys = [y for y in finite_ys if y.size]
    if not finite_ys:
        return
    y_lo = min(float(y.min()) for y in finite_ys)
    y_hi = max(float(y.max()) for y in finite_ys)
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    x_lo, x_hi = float(xs.min()), float(xs.max())

    def map_xy(lx, ly):
        px = pad + (lx - x_lo) / (x_hi - x_lo) * (width - 2 * pad)
        py = height - pad - (ly - y_lo) / (y_hi - y_lo) * (height - 2 * pad)
        return px, py

    palette = ["#1b6ca8", "#c0392b", "#1e8449", "#8e44ad", "#b9770e"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2}" y="20" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{title}</text>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" '
        f'y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" '
        f'stroke="black"/>',
        f'<text x="{pad}" y="{height - pad + 16}" font-family="sans-serif" '
        f'font-size="11">1e{x_lo:.1f}</text>',
        f'<text x="{width - pad}" y="{height - pad + 16}" '
        f'text-anchor="end" font-family="sans-serif" font-size="11">'
        f'1e{x_hi:.1f}</text>',
        f'<text x="{pad - 4}" y="{height - pad}" text-anchor="end" '
        f'font-family="sans-serif" font-size="11">1e{y_lo:.1f}</text>',
        f'<text x="{pad - 4}" y="{pad + 4}" text-anchor="end" '
        f'font-family="sans-serif" font-size="11">1e{y_hi:.1f}</text>',
    ]
    for i, (label, y) in enumerate(curves.items()):
        y = np.asarray(y, dtype=float)
        keep = y > 0.0
        pts = " ".join("%.2f,%.2f" % map_xy(lx, ly)
                       for lx, ly in zip(xs[keep], np.log10(y[keep])))
        color = palette[i % len(palette)]
        parts.append(f'<polyline points="{pts}" fill="none" '
                     f'stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<text x="{width - pad - 4}" y="{pad + 16 + 14 * i}" '
                     f'text-anchor="end" font-family="sans-serif" '
                     f'font-size="11" fill="{color}">{label}</text>')
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n")


def _print_report(rep) -> None:
    verdict = "PASS" if rep.passed else "FAIL"
    body = ", ".join(f"{k}={v:.4g}" for k, v in rep.metrics.items())
    line = f"{rep.name}: {verdict} [tol {rep.tolerance:g}]"
    if body:
        line += f" {body}"
    print(line)
    if rep.notes:
        print(f"  note: {rep.notes}")


# ---------------------------------------------------------------------------
# subcommand handlers


def _cmd_ml_eval(args) -> int:
    val = ml_eval(MLParams(args.alpha, args.beta), args.z)
    print(json.dumps({"alpha": args.alpha, "beta": args.beta, "z": args.z,
                      "value": val.value, "method": val.method,
                      "est_error": val.est_error}))
    return 0


def _cmd_ml_verify(args) -> int:
    tol = 1e-8 * args.tolerance_scale
    rep = check_decomposition([1.1, 1.5, 1.9], [1.0, 1.25, 1.5, 2.0],
                              np.geomspace(0.5, 100.0, 40), tolerance=tol)
    _print_report(rep)
    if args.out:
        out = Path(args.out)
        _emit_stamp(out)
        (out / "report.json").write_text(
            json.dumps(_jsonable(dataclasses.asdict(rep)), indent=2) + "\n")
    return 0 if rep.passed else 1


def _cmd_solve(args) -> int:
    cfg = parse_config(args.config, seed=args.seed)
    out = Path(args.out)
    _emit_stamp(out, cfg)
    data, spec, timegrid, picard, grid = build_run(cfg.flat())

    status = "completed"
    t0 = time.perf_counter()
    try:
        traj = solve(data, spec, timegrid, picard)
    except (NonContraction, Overflow) as exc:
        traj = exc.trajectory
        status = f"{type(exc).__name__}: {exc}"
        if traj is None:
            print(f"error: {status}", file=sys.stderr)
            return 2
    walltime = time.perf_counter() - t0

    for i, f in enumerate(traj.fields):
        save_field(out / f"u_{i:05d}.fhf", f)

    # Morrey norms for the diagnostics table; the exponent hypotheses are
    # advisory here, so capture their warnings into the summary instead of
    # spraying stderr
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        exps = exponent_report(spec.alpha, spec.rho, cfg["norms"]["p"],
                               cfg["norms"]["r"], grid.dim)
    exp_notes = sorted({str(w.message) for w in caught})
    balls = BallFamily(grid)
    spec_p = NormSpec(exps.p, exps.mu)
    spec_r = NormSpec(exps.r, exps.mu)

    # the march logs diagnostics from the first step on; synthesize the
    # t = 0 row so the table covers every saved field
    phi = traj.fields[0].values
    diags = [{"t": float(traj.times[0]),
              "l2": float(np.sqrt(np.sum(phi ** 2) * grid.cell_volume)),
              "sweeps": 0, "ratio": 0.0}] + list(traj.diagnostics)
    rows = []
    for diag, f in zip(diags, traj.fields):
        rows.append([diag["t"], diag["l2"],
                     morrey_norm(f, spec_p, balls),
                     morrey_norm(f, spec_r, balls),
                     diag["sweeps"], diag["ratio"]])
    with open(out / "diagnostics.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "l2", f"morrey_p{exps.p:g}_mu{exps.mu:g}",
                         f"morrey_r{exps.r:g}_mu{exps.mu:g}", "sweeps",
                         "contraction_ratio"])
        for row in rows:
            writer.writerow([f"{row[0]:.12g}", f"{row[1]:.12g}",
                             f"{row[2]:.12g}", f"{row[3]:.12g}",
                             row[4], f"{row[5]:.6g}"])

    summary = {
        "version": __version__,
        "status": status,
        "seed": cfg.seed,
        "n_fields": len(traj.fields),
        "t_first": float(traj.times[0]),
        "t_last": float(traj.times[-1]),
        "walltime_s": round(walltime, 3),
        "max_sweeps_used": max((d["sweeps"] for d in traj.diagnostics),
                               default=0),
        "final": {"t": rows[-1][0], "l2": rows[-1][1],
                  "morrey_p": rows[-1][2], "morrey_r": rows[-1][3]}
        if rows else {},
        "exponent_warnings": exp_notes,
    }
    (out / "summary.json").write_text(
        json.dumps(_jsonable(summary), indent=2) + "\n")
    if status != "completed":
        print(f"error: {status} (partial outputs in {out})", file=sys.stderr)
        return 2
    print(f"wrote {len(traj.fields)} fields to {out}")
    return 0


def _cmd_norms(args) -> int:
    f = load_field(args.field)
    if args.s:
        f = riesz(args.s, f)
    norm, center, radius = morrey_norm_argmax(
        f, NormSpec(args.p, args.mu), BallFamily(f.grid))
    print(json.dumps({"norm": norm, "argmax_center": list(center),
                      "argmax_radius": radius}))
    return 0


_GROUPS = {
    "dihedral": [np.array([[0, -1], [1, 0]]), np.array([[-1, 0], [0, 1]])],
    "rotation": [np.array([[0, -1], [1, 0]])],
    "flip": [np.array([[-1, 0], [0, 1]])],
}

# Desk-scale setups per check, measured so the default invocation passes
# with margin; a user --config overrides any key.
_CHECK_SETUPS = {
    "decomposition": {},
    "mikhlin": {},
    "smoothing": {"grid": {"points": 128, "length": 4.0}},
    "selfsimilarity": {"grid": {"points": 128, "length": 1.0},
                       "problem": {"kappa1": 1.0, "q": 1.5},
                       "data": {"amp_phi": 0.005},
                       "timegrid": {"t_end": 0.08, "n_steps": 24}},
    "decay": {"grid": {"points": 256, "length": 1.0},
              "data": {"amp_phi": 0.02},
              "timegrid": {"t_end": 0.05, "n_steps": 48, "kind": "graded"}},
    "symmetry": {"grid": {"points": 32},
                 "problem": {"kappa1": 1.0, "q": 1.5},
                 "timegrid": {"n_steps": 8}},
    "stability": {"grid": {"points": 32},
                  "problem": {"kappa1": 1.0, "q": 1.5},
                  "timegrid": {"n_steps": 8}},
}

_CHECK_TOL = {
    "decomposition": 1e-8,
    "mikhlin": 0.1,
    "smoothing": 10.0,
    "selfsimilarity": 0.05,
    "decay": 0.1,
    "symmetry": 1e-10,
    "stability": 10.0,
}

_SMOOTHING_TIMES = np.geomspace(1e-2, 1.0, 13)


def _smoothing_specs(alpha: float):
    # one representative admissible tuple per estimate (N=2, mu=1/2)
    return [
        SmoothingSpec(alpha, 0.0, 1.0, 2.0, 6.0, 0.5, 2, "one"),
        SmoothingSpec(alpha, 0.0, 0.0, 3.0, 4.5, 0.5, 2, "two"),
        SmoothingSpec(alpha, 0.0, 1.0, 4.0 / 3.0, 4.0, 0.5, 2,
                      "alpha_alpha"),
    ]


def _run_check(name: str, cfg: RunConfig, tol_scale: float):
    vb, pb = cfg["verify"], cfg["problem"]
    tol = _CHECK_TOL[name] * tol_scale
    if name == "decomposition":
        return [check_decomposition([1.1, 1.5, 1.9], [1.0, 1.25, 1.5, 2.0],
                                    np.geomspace(0.5, 100.0, 40),
                                    tolerance=tol)]
    if name == "mikhlin":
        return [check_mikhlin(pb["alpha"], vb["beta_ml"], vb["k"],
                              vb["delta"], vb["max_order"], tolerance=tol)]
    if name == "smoothing":
        g = cfg["grid"]
        grid = Grid(g["dim"], g["points"], g["length"])
        return [check_smoothing(sp, saturating_profile(grid, sp),
                                _SMOOTHING_TIMES, tolerance=tol)
                for sp in _smoothing_specs(pb["alpha"])]
    flat = cfg.flat()
    if name == "selfsimilarity":
        return [check_selfsimilarity(flat, vb["gammas"], tolerance=tol)]
    if name == "decay":
        return [check_decay(flat, tolerance=tol)]
    if name == "symmetry":
        if vb["group"] not in _GROUPS:
            raise SchemaError(
                f"verify.group: expected one of {sorted(_GROUPS)}")
        return [check_symmetry(flat, _GROUPS[vb["group"]],
                               parity=vb["parity"], tolerance=tol)]
    if name == "stability":
        return [check_stability(flat, scales=tuple(vb["scales"]),
                                tolerance=tol)]
    raise SchemaError(f"unknown check {name!r}")


def _check_curves(name: str, cfg: RunConfig):
    """(filename stem, x-label, x, {label: y}) for checks with cheap curves."""
    pb, vb = cfg["problem"], cfg["verify"]
    if name == "mikhlin":
        xi, s_of = mikhlin_curve(pb["alpha"], vb["beta_ml"], vb["k"],
                                 vb["delta"], vb["max_order"])
        return "scaled_derivatives", "xi", xi, \
            {f"S{o}": s for o, s in s_of.items()}
    if name == "smoothing":
        g = cfg["grid"]
        grid = Grid(g["dim"], g["points"], g["length"])
        curves = {}
        for sp in _smoothing_specs(pb["alpha"]):
            curves[f"Q_{sp.item}"] = smoothing_curve(
                sp, saturating_profile(grid, sp), _SMOOTHING_TIMES)
        return "quotients", "t", _SMOOTHING_TIMES, curves
    return None


def _cmd_verify(args) -> int:
    cfg = parse_config(args.config, overlay=_CHECK_SETUPS[args.check],
                       seed=args.seed)
    # exponent-hypothesis warnings are advisory; fold them into the output
    # instead of spraying stderr
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        reports = _run_check(args.check, cfg, args.tolerance_scale)
    for rep in reports:
        _print_report(rep)
    for msg in sorted({str(w.message) for w in caught}):
        print(f"  advisory: {msg}")
    if args.out:
        out = Path(args.out)
        _emit_stamp(out, cfg)
        payload = [_jsonable(dataclasses.asdict(r)) for r in reports]
        (out / "report.json").write_text(
            json.dumps(payload[0] if len(payload) == 1 else payload,
                       indent=2) + "\n")
        curve = _check_curves(args.check, cfg)
        if curve is not None:
            stem, x_label, x, ys = curve
            _write_csv(out / f"{stem}.csv", [x_label, *ys],
                       [x, *ys.values()])
            if args.svg:
                _write_svg(out / f"{stem}.svg", x, ys,
                           f"{args.check}: {stem}")
    return 0 if all(r.passed for r in reports) else 1


def _cmd_report(args) -> int:
    root = Path(args.out)
    rows = []
    for path in sorted(root.rglob("report.json")):
        loaded = json.loads(path.read_text())
        for rep in loaded if isinstance(loaded, list) else [loaded]:
            rows.append((rep, path.relative_to(root)))
    if not rows:
        print(f"error: no report.json under {root}", file=sys.stderr)
        return 2
    n_pass = sum(1 for rep, _ in rows if rep["passed"])
    lines = [
        "# fracflow check report", "",
        f"{n_pass} passed / {len(rows)} total "
        f"(fracflow {__version__})", "",
        "| check | verdict | tolerance | metrics | source |",
        "|---|---|---|---|---|",
    ]
    for rep, src in rows:
        metrics = ", ".join(f"{k}={v:.4g}" for k, v in rep["metrics"].items())
        lines.append(
            f"| {rep['name']} | {'PASS' if rep['passed'] else 'FAIL'} "
            f"| {rep['tolerance']:g} | {metrics} | {src} |")
    (root / "report.md").write_text("\n".join(lines) + "\n")
    (root / "index.json").write_text(json.dumps(
        [{"name": rep["name"], "passed": rep["passed"],
          "source": str(src)} for rep, src in rows], indent=2) + "\n")
    print(f"report.md: {n_pass}/{len(rows)} passed")
    return 0 if n_pass == len(rows) else 1


# ---------------------------------------------------------------------------
# parser and entry point


def _resolve_threads(flag_value):
    n = flag_value
    if n is None:
        env = os.environ.get("FRACFLOW_THREADS", "").strip()
        if env:
            try:
                n = int(env)
            except ValueError:
                raise SchemaError(f"FRACFLOW_THREADS={env!r} is not an int")
    if n is not None:
        if n < 1:
            raise SchemaError("threads must be >= 1")
        # exported for BLAS/OpenMP pools created later in this process
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ[var] = str(n)
    return n


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracflow",
        description=__doc__.split("\n\n")[0],
    )
    parser.add_argument("--version", action="version",
                        version=f"fracflow {__version__}")
    parser.add_argument("--threads", type=int, default=None, metavar="N",
                        help="worker threads for BLAS/OpenMP pools "
                             "(fallback: FRACFLOW_THREADS)")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE",
                        help="JSON run configuration")
    common.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    common.add_argument("--tolerance-scale", type=float, default=1.0,
                        metavar="X", help="multiply check tolerances by X")

    sub = parser.add_subparsers(dest="command", required=True)

    ml = sub.add_parser("ml", help="Mittag-Leffler utilities")
    mlsub = ml.add_subparsers(dest="ml_command", required=True)
    mle = mlsub.add_parser("eval", help="evaluate E_{alpha,beta}(z)")
    mle.add_argument("--alpha", type=float, required=True)
    mle.add_argument("--beta", type=float, required=True)
    mle.add_argument("--z", type=float, required=True)
    mle.set_defaults(handler=_cmd_ml_eval)
    mlv = mlsub.add_parser("verify", parents=[common],
                           help="decomposition identity battery")
    mlv.add_argument("--out", metavar="DIR", help="write report.json here")
    mlv.set_defaults(handler=_cmd_ml_verify)

    slv = sub.add_parser("solve", parents=[common],
                         help="run the memory march")
    slv.add_argument("--out", metavar="DIR", required=True,
                     help="output directory (FHF1 fields, diagnostics.csv, "
                          "summary.json)")
    slv.set_defaults(handler=_cmd_solve)

    nrm = sub.add_parser("norms", help="Morrey norm of a stored field")
    nrm.add_argument("--field", required=True, metavar="FILE.fhf")
    nrm.add_argument("--p", type=float, required=True)
    nrm.add_argument("--mu", type=float, required=True)
    nrm.add_argument("--s", type=float, default=0.0,
                     help="Sobolev order (Riesz-filter the field first)")
    nrm.set_defaults(handler=_cmd_norms)

    ver = sub.add_parser("verify", parents=[common],
                         help="run one named check")
    ver.add_argument("check", choices=sorted(_CHECK_SETUPS))
    ver.add_argument("--out", metavar="DIR",
                     help="write report.json (+ curves where applicable)")
    ver.add_argument("--svg", action="store_true",
                     help="also render curve SVGs under --out")
    ver.set_defaults(handler=_cmd_verify)

    rpt = sub.add_parser("report",
                         help="summarize report.json files into report.md")
    rpt.add_argument("--out", metavar="DIR", required=True,
                     help="directory to scan (report.md is written here)")
    rpt.set_defaults(handler=_cmd_report)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        _resolve_threads(args.threads)
        return args.handler(args)
    except SchemaError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2
    except (DomainError, FileFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # contract: surfaced, never a bare crash
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
