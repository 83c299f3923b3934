"""Command line front end.

Every task reads one YAML config and writes its artifacts into the output
directory: curves as CSV (comma separated, 9 significant digits, LF, UTF-8)
and a JSON summary carrying the feasible range, spectrum, and tool/seed
metadata.  Numbers in configs and outputs use 1-based component labels.

Exit codes: 0 on success, 2 when inputs fail validation, 3 when a numerical
procedure fails.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .errors import ConfigParse, NumericalError, SrdfKitError, ValidationError
from .field import (
    QUAD_POINTS_DEFAULT,
    FieldModel,
    FieldSamplingSet,
    GaussMarkovKernel,
    TabulatedKernel,
    field_gram,
    field_max_distortion,
    field_min_distortion,
    field_spectrum,
    field_srdf,
    optimize_placement,
)
from .model import CovarianceModel, SamplingSet, partition
from .setopt import best_fixed_set
from .simulate import SimConfig, two_step_code, universal_two_step
from .srdf import (
    distortion_rate,
    max_distortion,
    min_distortion,
    srdf,
    srdf_eigenvalues,
)
from .universal import (
    affine_family,
    bayes_usrdf,
    fixed_var_corr_family,
    nonbayes_usrdf,
    project_family,
)

TASKS = (
    "srdf",
    "distrate",
    "gmf-srdf",
    "optimize-set",
    "place",
    "usrdf-bayes",
    "usrdf-nonbayes",
    "simulate",
    "usim",
)


def _fmt(x: float) -> str:
    return f"{float(x):.9g}"


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(cell if isinstance(cell, str) else _fmt(cell) for cell in row) + "\n")


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(json.dumps(payload, sort_keys=True, indent=2))
        fh.write("\n")


def _need(cfg: dict, key: str) -> object:
    if key not in cfg:
        raise ConfigParse(f"config is missing the '{key}' block")
    return cfg[key]


def _load_config(path: Path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigParse(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigParse(f"config {path} is not valid YAML: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigParse(f"config {path} must be a mapping at the top level")
    return cfg


def _load_matrix(block: dict, base: Path, inline_key: str, csv_key: str) -> np.ndarray:
    if inline_key in block:
        return np.asarray(block[inline_key], dtype=float)
    if csv_key in block:
        path = base / str(block[csv_key])
        try:
            return np.atleast_2d(np.loadtxt(path, delimiter=",", dtype=float))
        except (OSError, ValueError) as exc:
            raise ConfigParse(f"cannot read matrix from {path}: {exc}") from exc
    raise ConfigParse(f"matrix block needs '{inline_key}' or '{csv_key}'")


def _parse_model(cfg: dict, base: Path) -> CovarianceModel:
    block = _need(cfg, "model")
    if not isinstance(block, dict):
        raise ConfigParse("'model' must be a mapping")
    return CovarianceModel(_load_matrix(block, base, "sigma", "sigma_csv"))


def _parse_sampling(cfg: dict) -> SamplingSet:
    block = _need(cfg, "sampling")
    if not isinstance(block, (list, tuple)):
        raise ConfigParse("'sampling' must be a list of 1-based component labels")
    return SamplingSet(block)


def _parse_grid(cfg: dict, key: str = "grid") -> np.ndarray:
    block = _need(cfg, key)
    if not isinstance(block, dict):
        raise ConfigParse(f"'{key}' must be a mapping with min, max, count")
    try:
        lo = float(block["min"])
        hi = float(block["max"])
        count = int(block["count"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigParse(f"'{key}' needs numeric min, max and integer count: {exc}") from exc
    if count < 1 or hi < lo:
        raise ConfigParse(f"'{key}' must have count >= 1 and max >= min")
    return np.linspace(lo, hi, count)


def _parse_field(cfg: dict, base: Path) -> FieldModel:
    block = _need(cfg, "field")
    if not isinstance(block, dict) or "kernel" not in block:
        raise ConfigParse("'field' must be a mapping with a 'kernel' block")
    kb = block["kernel"]
    if not isinstance(kb, dict) or "type" not in kb:
        raise ConfigParse("'field.kernel' needs a 'type'")
    ktype = str(kb["type"])
    if ktype == "gauss-markov":
        try:
            kernel = GaussMarkovKernel(p=float(kb["p"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigParse(f"gauss-markov kernel needs a numeric 'p': {exc}") from exc
    elif ktype == "tabulated":
        if "mesh_csv" not in kb:
            raise ConfigParse("tabulated kernel needs 'mesh_csv'")
        kernel = TabulatedKernel.from_mesh_csv(base / str(kb["mesh_csv"]))
    else:
        raise ConfigParse(f"unknown kernel type {ktype!r}")
    quad_points = int(block.get("quad_points", QUAD_POINTS_DEFAULT))
    return FieldModel(kernel=kernel, quad_points=quad_points)


def _parse_points(cfg: dict) -> FieldSamplingSet:
    block = _need(cfg, "points")
    if not isinstance(block, (list, tuple)):
        raise ConfigParse("'points' must be a list of positions in [0, 1]")
    return FieldSamplingSet(tuple(float(p) for p in block))


def _parse_family(cfg: dict, base: Path):
    block = _need(cfg, "family")
    if not isinstance(block, dict) or "template" not in block:
        raise ConfigParse("'family' must be a mapping with a 'template'")
    template = str(block["template"])
    prior = block.get("prior")
    if prior is not None and prior != "uniform":
        raise ConfigParse("config priors support 'uniform' or omit for none")
    grid_res = int(block.get("grid_res", 33))
    if template == "fixed-var-corr":
        try:
            box = block["box"]
            r_lo, r_hi = float(box[0][0]), float(box[0][1])
            return fixed_var_corr_family(
                sigma2=float(block["sigma2"]),
                r_lo=r_lo,
                r_hi=r_hi,
                prior=prior,
                grid_res=grid_res,
            )
        except (KeyError, TypeError, IndexError, ValueError) as exc:
            raise ConfigParse(f"fixed-var-corr family needs sigma2 and box [[lo, hi]]: {exc}") from exc
    if template == "affine":
        base_mat = _load_matrix(block, base, "base", "base_csv")
        dirs = block.get("directions")
        if not isinstance(dirs, list) or not dirs:
            raise ConfigParse("affine family needs a list of 'directions' matrices")
        box = block.get("box")
        if not isinstance(box, list):
            raise ConfigParse("affine family needs 'box' as a list of [lo, hi] pairs")
        return affine_family(
            base=base_mat,
            directions=[np.asarray(d, dtype=float) for d in dirs],
            box=[(float(lo), float(hi)) for lo, hi in box],
            prior=prior,
            grid_res=grid_res,
        )
    raise ConfigParse(f"unknown family template {template!r}")


def _parse_objective(block: dict):
    name = str(block.get("objective", "min_delta_min")).replace("-", "_")
    if name == "min_delta_min":
        return "min_delta_min"
    if name == "min_rate_at":
        if "delta" not in block:
            raise ConfigParse("objective min_rate_at needs 'delta'")
        return ("min_rate_at", float(block["delta"]))
    raise ConfigParse(f"unknown objective {name!r}")


def _parse_sim(cfg: dict, seed_override: int | None) -> SimConfig:
    block = _need(cfg, "sim")
    if not isinstance(block, dict):
        raise ConfigParse("'sim' must be a mapping")
    allowed = {
        "n", "rate_bits", "train_blocks", "eval_blocks", "seed",
        "lbg_iters", "grid_delta", "est_length", "trace",
    }
    unknown = set(block) - allowed
    if unknown:
        raise ConfigParse(f"unknown sim keys: {sorted(unknown)}")
    merged = dict(block)
    if seed_override is not None:
        merged["seed"] = seed_override
    try:
        return SimConfig(**merged)
    except TypeError as exc:
        raise ConfigParse(f"bad sim block: {exc}") from exc


def _meta(task: str, seed) -> dict:
    return {"task": task, "tool": "srdf-kit", "version": __version__, "seed": seed}


def _run_srdf(cfg, base, out, args):
    model = _parse_model(cfg, base)
    ss = _parse_sampling(cfg)
    deltas = _parse_grid(cfg)
    bp = partition(model, ss)
    points = [srdf(model, ss, float(d)) for d in deltas]
    _write_csv(out / "curve.csv", ["delta", "rate_bits"], [(p.delta, p.rate_bits) for p in points])
    summary = _meta("srdf", args.seed)
    summary.update(
        {
            "m": model.m,
            "sampling": list(ss.indices),
            "delta_min": min_distortion(bp),
            "delta_max": max_distortion(model),
            "eigenvalues": [float(x) for x in srdf_eigenvalues(bp)],
            "points": len(points),
        }
    )
    _write_json(out / "summary.json", summary)


def _run_distrate(cfg, base, out, args):
    model = _parse_model(cfg, base)
    ss = _parse_sampling(cfg)
    rates = _parse_grid(cfg)
    bp = partition(model, ss)
    rows = [(float(r), distortion_rate(model, ss, float(r))) for r in rates]
    _write_csv(out / "curve.csv", ["rate_bits", "delta"], rows)
    summary = _meta("distrate", args.seed)
    summary.update(
        {
            "m": model.m,
            "sampling": list(ss.indices),
            "delta_min": min_distortion(bp),
            "delta_max": max_distortion(model),
            "eigenvalues": [float(x) for x in srdf_eigenvalues(bp)],
            "points": len(rows),
        }
    )
    _write_json(out / "summary.json", summary)


def _run_gmf_srdf(cfg, base, out, args):
    fm = _parse_field(cfg, base)
    pts = _parse_points(cfg)
    deltas = _parse_grid(cfg)
    points = [field_srdf(fm, pts, float(d)) for d in deltas]
    _write_csv(out / "curve.csv", ["delta", "rate_bits"], [(p.delta, p.rate_bits) for p in points])
    summary = _meta("gmf-srdf", args.seed)
    summary.update(
        {
            "points_sampled": list(pts.points),
            "delta_min": field_min_distortion(fm, pts),
            "delta_max": field_max_distortion(fm),
            "eigenvalues": [float(x) for x in field_spectrum(fm, pts)],
            "gram": [[float(v) for v in row] for row in field_gram(fm, pts)],
            "quad_points": fm.quad_points,
        }
    )
    _write_json(out / "summary.json", summary)


def _run_optimize_set(cfg, base, out, args):
    model = _parse_model(cfg, base)
    block = _need(cfg, "search")
    if not isinstance(block, dict) or "k" not in block:
        raise ConfigParse("'search' must be a mapping with 'k'")
    objective = _parse_objective(block)
    result = best_fixed_set(model, int(block["k"]), objective, threads=args.threads)
    rows = [
        (
            " ".join(str(i) for i in row.indices),
            row.delta_min,
            "" if row.rate_bits is None else _fmt(row.rate_bits),
        )
        for row in result.rows
    ]
    _write_csv(out / "table.csv", ["subset", "delta_min", "rate_bits"], rows)
    summary = _meta("optimize-set", args.seed)
    summary.update(
        {
            "m": model.m,
            "objective": result.objective,
            "best_subset": list(result.best.indices),
            "best_value": result.value,
            "subsets": len(result.rows),
        }
    )
    _write_json(out / "summary.json", summary)


def _run_place(cfg, base, out, args):
    fm = _parse_field(cfg, base)
    block = _need(cfg, "placement")
    if not isinstance(block, dict) or "k" not in block:
        raise ConfigParse("'placement' must be a mapping with 'k'")
    objective = _parse_objective(block)
    result = optimize_placement(
        fm,
        int(block["k"]),
        objective,
        restarts=int(block.get("restarts", 16)),
        pin_endpoints=bool(block.get("pin_endpoints", False)),
        seed=args.seed if args.seed is not None else int(block.get("seed", 0)),
        threads=args.threads,
    )
    _write_csv(out / "points.csv", ["index", "position"], list(enumerate(result.points)))
    summary = _meta("place", args.seed)
    summary.update(
        {
            "objective": result.objective,
            "points": [float(p) for p in result.points],
            "value": result.value,
            "restarts": result.restarts,
            "quad_points": fm.quad_points,
        }
    )
    _write_json(out / "summary.json", summary)


def _run_usrdf(cfg, base, out, args, bayes: bool):
    family = _parse_family(cfg, base)
    ss = _parse_sampling(cfg)
    deltas = _parse_grid(cfg)
    fn = bayes_usrdf if bayes else nonbayes_usrdf
    points = [fn(family, ss, float(d)) for d in deltas]
    _write_csv(out / "curve.csv", ["delta", "rate_bits"], [(p.delta, p.rate_bits) for p in points])
    if bayes:
        _write_csv(
            out / "allocation.csv",
            ["delta", "atom", "delta_atom"],
            [
                (p.delta, str(i), alloc)
                for p in points
                for i, alloc in enumerate(p.per_atom_delta)
            ],
        )
    part = project_family(family, ss)
    task = "usrdf-bayes" if bayes else "usrdf-nonbayes"
    summary = _meta(task, args.seed)
    summary.update(
        {
            "sampling": list(ss.indices),
            "atoms": len(part.atoms),
            "atom_weights": None if part.atoms[0].weight is None else [a.weight for a in part.atoms],
            "grid_nodes": len(family.nodes),
            "delta_min": points[0].delta_min,
            "delta_max": points[0].delta_max,
        }
    )
    _write_json(out / "summary.json", summary)


def _write_sim_outputs(report, out, task, seed):
    payload = _meta(task, seed)
    payload["report"] = report.to_dict()
    _write_json(out / "report.json", payload)
    if report.block_trace is not None:
        _write_csv(
            out / "trace.csv",
            ["block", "total_mse", "weighted_mse", "lift_mse"],
            [(str(i), t, w, l) for i, (t, w, l) in enumerate(report.block_trace)],
        )


def _run_simulate(cfg, base, out, args):
    model = _parse_model(cfg, base)
    ss = _parse_sampling(cfg)
    sim = _parse_sim(cfg, args.seed)
    report = two_step_code(model, ss, sim)
    _write_sim_outputs(report, out, "simulate", sim.seed)


def _run_usim(cfg, base, out, args):
    family = _parse_family(cfg, base)
    ss = _parse_sampling(cfg)
    sim = _parse_sim(cfg, args.seed)
    report = universal_two_step(family, ss, sim)
    _write_sim_outputs(report, out, "usim", sim.seed)


_HANDLERS = {
    "srdf": _run_srdf,
    "distrate": _run_distrate,
    "gmf-srdf": _run_gmf_srdf,
    "optimize-set": _run_optimize_set,
    "place": _run_place,
    "usrdf-bayes": lambda cfg, base, out, args: _run_usrdf(cfg, base, out, args, True),
    "usrdf-nonbayes": lambda cfg, base, out, args: _run_usrdf(cfg, base, out, args, False),
    "simulate": _run_simulate,
    "usim": _run_usim,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="srdf-kit",
        description="Rate distortion curves and coding experiments for sampled Gaussian sources.",
    )
    parser.add_argument("task", choices=TASKS)
    parser.add_argument("--config", required=True, help="YAML config file")
    parser.add_argument("--out", default=".", help="output directory (created if missing)")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="worker threads for searches (default: SRDF_KIT_THREADS or 1)",
    )
    args = parser.parse_args(argv)
    if args.threads is None:
        try:
            args.threads = max(1, int(os.environ.get("SRDF_KIT_THREADS", "1")))
        except ValueError:
            args.threads = 1

    try:
        config_path = Path(args.config)
        cfg = _load_config(config_path)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _HANDLERS[args.task](cfg, config_path.parent, out, args)
    except ValidationError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 3
    except SrdfKitError as exc:  # base-class fallback, treated as validation
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out.resolve()}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
