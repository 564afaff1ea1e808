"""Config-driven command line: simulate | validate | diagnose.

Configs are JSON validated against :data:`CONFIG_SCHEMA` (unknown keys are
rejected).  Any key can be overridden on the command line with dotted
flags, ``--pade.K=12``; values parse as JSON with plain-string fallback,
and flags win over file keys.  Every run writes a sidecar with the fully
resolved config so it can be replayed byte-for-byte.

Exit codes: 0 ok, 2 config error, 3 numerical/pipeline error; errors are
emitted as a single JSON object on stderr.
"""

import argparse
import json
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .armodel import ACFSpec
from .continuation import (
    ILTParams,
    eval_lt,
    pdf_moment_path,
    product_pdf,
    recover_lt,
)
from .cumseries import CUMULANT, MOMENT, build_series, cumulants_to_moments
from .dist import DistributionSpec, closed_form_lt, cumulants, reference_pdf
from .errors import ClutterForgeError
from .sampler import PipelineConfig, RngStream, run_pipeline
from .validate import monte_carlo

_NUM = {"type": "number"}
_POS_INT = {"type": "integer", "minimum": 1}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["distribution"],
    "properties": {
        "distribution": {
            "type": "object",
            "additionalProperties": False,
            "required": ["family"],
            "properties": {
                "family": {"enum": ["gamma", "ptas"]},
                "alpha": _NUM,
                "lambda": _NUM,
                "gamma": _NUM,
                "eta": _NUM,
            },
        },
        "acf": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "model": {"enum": ["exp_cosine"]},
                "t0": _NUM,
                "T0": _NUM,
                "d": _NUM,
                "lags": {"type": "array", "items": _NUM, "minItems": 1},
            },
        },
        "ar": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "order": _POS_INT,
                "coeffs": {"type": "array", "items": _NUM, "minItems": 1},
                "threshold": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "pade": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"K": _POS_INT, "L": _POS_INT, "scan_min": _POS_INT},
        },
        "ilt": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "ls": _POS_INT,
                "sigma": {"type": ["number", "null"]},
                "decay_threshold": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "simulate": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "length": _POS_INT,
                "prf_hz": {"type": "number", "exclusiveMinimum": 0},
                "seed": {"type": ["integer", "null"]},
                "format": {"enum": ["csv", "f64"]},
            },
        },
        "validate": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "trials": _POS_INT,
                "bins": {"type": ["integer", "null"], "minimum": 2},
                "lags": _POS_INT,
            },
        },
    },
}


class ConfigError(ValueError):
    pass


def apply_overrides(cfg, tokens):
    """Fold ``--a.b.c=value`` tokens into the config dict (flags win)."""
    for tok in tokens:
        if not tok.startswith("--") or "=" not in tok:
            raise ConfigError(f"unrecognized argument {tok!r} (expected --key.path=value)")
        key, raw = tok[2:].split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override path {key!r} crosses a non-object key")
        node[parts[-1]] = value
    return cfg


def load_config(path, overrides=()):
    try:
        cfg = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    apply_overrides(cfg, overrides)
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config schema violation: {exc.message}")
    return cfg


def materialize(cfg, need_ar=True):
    """Config dict -> (spec, acf, pipeline config, ilt params)."""
    try:
        spec = DistributionSpec.from_json(cfg["distribution"])
    except ValueError as exc:
        raise ConfigError(str(exc))
    sim = cfg.get("simulate", {})
    ar = cfg.get("ar", {})
    acf_block = cfg.get("acf")
    try:
        acf = (
            ACFSpec.from_json(acf_block, sim.get("prf_hz", 1000.0))
            if acf_block is not None
            else None
        )
        ilt = ILTParams.from_json(cfg.get("ilt", {}))
    except ValueError as exc:
        raise ConfigError(str(exc))
    coeffs = ar.get("coeffs")
    order = ar.get("order")
    pcfg = None
    if need_ar:
        if coeffs is None and (acf is None or order is None):
            raise ConfigError("need either ar.coeffs or an acf block plus ar.order")
        pade_b = cfg.get("pade", {})
        pcfg = PipelineConfig(
            length=sim.get("length", 10000),
            seed=sim.get("seed"),
            ar_order=order,
            # File coeffs use the regression sign y = sum c_k y_(m-k) + u.
            ar_coeffs=None if coeffs is None else [-c for c in coeffs],
            trunc_threshold=ar.get("threshold", 1e-3),
            pade_k=pade_b.get("K", 16),
            pade_l=pade_b.get("L", 17),
            scan_min=pade_b.get("scan_min", 8),
        )
    return spec, acf, pcfg, ilt


def _write_csv(path, header, columns):
    cols = [np.asarray(c) for c in columns]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*cols):
            fh.write(",".join(repr(float(x)) for x in row) + "\n")


def cmd_simulate(cfg, out_prefix):
    spec, acf, pcfg, _ = materialize(cfg)
    rng = RngStream(pcfg.seed)
    tex = run_pipeline(spec, acf, pcfg, rng)
    fmt = cfg.get("simulate", {}).get("format", "csv")
    if fmt == "csv":
        sample_path = f"{out_prefix}.csv"
        _write_csv(sample_path, ["texture"], [tex.samples])
    else:
        sample_path = f"{out_prefix}.f64"
        with open(sample_path, "wb") as fh:
            fh.write(tex.samples.astype("<f8").tobytes())
    sidecar = {
        "version": __version__,
        "resolved_config": cfg,
        "seed_entropy": rng.entropy,
        "format": fmt,
        "samples_file": Path(sample_path).name,
        **tex.to_json(),
    }
    with open(f"{out_prefix}.meta.json", "w") as fh:
        json.dump(sidecar, fh, indent=2)
    from ._figures import render_texture_overview

    render_texture_overview(f"{out_prefix}.png", tex.samples)
    print(f"wrote {sample_path}, {out_prefix}.meta.json, {out_prefix}.png")
    return 0


def cmd_validate(cfg, out_prefix):
    spec, acf, pcfg, ilt = materialize(cfg)
    vb = cfg.get("validate", {})
    report = monte_carlo(
        spec,
        acf,
        pcfg,
        vb.get("trials", 50),
        n_bins=vb.get("bins"),
        n_lags=vb.get("lags", 200),
        ilt_params=ilt,
    )
    payload = {
        "version": __version__,
        "resolved_config": cfg,
        **report.to_json(),
    }
    with open(f"{out_prefix}.report.json", "w") as fh:
        json.dump(payload, fh, indent=2)
    centers, emp, theo = report.pdf_curve
    _write_csv(f"{out_prefix}.pdf.csv", ["bin_center", "theoretical", "empirical"], [centers, theo, emp])
    r_theo, r_mean, r_first = report.acf_curve
    _write_csv(
        f"{out_prefix}.acf.csv",
        ["lag", "theoretical", "empirical_mean", "empirical_first"],
        [np.arange(report.n_lags), r_theo, r_mean, r_first],
    )
    from ._figures import render_acf_comparison, render_pdf_comparison

    render_pdf_comparison(f"{out_prefix}.pdf.png", centers, emp, theo)
    render_acf_comparison(f"{out_prefix}.acf.png", r_theo, r_mean, r_first)
    print(
        f"pdf_mae_mean={report.pdf_mae_mean:.4f} acf_mae_mean={report.acf_mae_mean:.4f} "
        f"wall={report.wall_time:.1f}s -> {out_prefix}.report.json"
    )
    return 0


def cmd_diagnose(cfg, out_prefix):
    spec, _, _, ilt = materialize(cfg, need_ar=False)
    pade_b = cfg.get("pade", {})
    K, L = pade_b.get("K", 16), pade_b.get("L", 17)
    scan_min = pade_b.get("scan_min", 8)
    kap = cumulants(spec, K + L + 2)

    paths = {}
    for name, kind in ((MOMENT, MOMENT), (CUMULANT, CUMULANT)):
        try:
            if kind == MOMENT:
                series = build_series(cumulants_to_moments(kap), MOMENT)
            else:
                series = build_series(kap, CUMULANT)
            paths[name] = {"rlt": recover_lt(series, K, L, scan_min), "error": None}
        except ClutterForgeError as exc:
            paths[name] = {"rlt": None, "error": f"{type(exc).__name__}: {exc}"}

    omega = np.linspace(0.0, 30.0, 601)
    s = 1j * omega
    theo = closed_form_lt(spec, s)
    curves = {"closed form": theo}
    cols = [omega, theo.real, theo.imag]
    header = ["omega", "theo_re", "theo_im"]
    summary = {}
    for name in (MOMENT, CUMULANT):
        rlt = paths[name]["rlt"]
        vals = eval_lt(rlt, s) if rlt is not None else np.full_like(s, np.nan)
        cols += [vals.real, vals.imag]
        header += [f"{name}_re", f"{name}_im"]
        if rlt is not None:
            curves[f"{name} path"] = vals
            summary[name] = {
                "max_abs_lt_error": float(np.max(np.abs(vals - theo))),
                "transform": rlt.to_json(),
            }
        else:
            summary[name] = {"max_abs_lt_error": None, "error": paths[name]["error"]}
    _write_csv(f"{out_prefix}.lt.csv", header, cols)

    # Density comparison on a body-covering grid: mean + 8 standard deviations.
    k1, k2 = kap.kappa[0], kap.kappa[1]
    u_hi = k1 + 8.0 * np.sqrt(k2)
    u = np.linspace(u_hi / 400, u_hi, 400)
    f_ref = reference_pdf(spec, u, ilt)
    pdf_cols = [u, f_ref]
    pdf_header = ["u", "reference"]
    if paths[MOMENT]["rlt"] is not None:
        import warnings as _w

        with _w.catch_warnings():
            _w.simplefilter("ignore")
            pdf_cols.append(pdf_moment_path(paths[MOMENT]["rlt"], u))
        pdf_header.append("moment_path")
    if paths[CUMULANT]["rlt"] is not None:
        pdf_cols.append(product_pdf(paths[CUMULANT]["rlt"], u, ilt))
        pdf_header.append("cumulant_path")
    _write_csv(f"{out_prefix}.pdf.csv", pdf_header, pdf_cols)

    with open(f"{out_prefix}.diagnose.json", "w") as fh:
        json.dump(
            {"version": __version__, "resolved_config": cfg, "paths": summary},
            fh,
            indent=2,
        )
    from ._figures import render_lt_comparison, render_pdf_comparison

    render_lt_comparison(f"{out_prefix}.lt.png", omega, curves)
    render_pdf_comparison(
        f"{out_prefix}.pdf.png",
        u,
        pdf_cols[-1] if len(pdf_cols) > 2 else f_ref,
        f_ref,
        title="density recovery",
    )
    for name in (MOMENT, CUMULANT):
        err = summary[name].get("max_abs_lt_error")
        status = f"max |dL| = {err:.3e}" if err is not None else summary[name].get("error")
        print(f"{name} path: {status}")
    print(f"wrote {out_prefix}.lt.csv, {out_prefix}.pdf.csv, {out_prefix}.diagnose.json")
    return 0


_COMMANDS = {"simulate": cmd_simulate, "validate": cmd_validate, "diagnose": cmd_diagnose}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="clutterforge",
        description="Correlated non-Gaussian clutter synthesis and validation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("simulate", "synthesize a texture sequence"),
        ("validate", "Monte Carlo agreement metrics against theory"),
        ("diagnose", "compare both transform-recovery routes for a distribution"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("config", help="JSON config file")
        p.add_argument("--out", help="output path prefix (default: config stem)")
        p.add_argument("--seed", type=int, help="shorthand for --simulate.seed=N")

    args, extra = parser.parse_known_args(argv)
    try:
        overrides = list(extra)
        if args.seed is not None:
            overrides.append(f"--simulate.seed={args.seed}")
        cfg = load_config(args.config, overrides)
        out_prefix = args.out or Path(args.config).stem
        return _COMMANDS[args.command](cfg, out_prefix)
    except ConfigError as exc:
        json.dump({"error": "ConfigError", "message": str(exc), "exit_code": 2}, sys.stderr)
        sys.stderr.write("\n")
        return 2
    except (ClutterForgeError, np.linalg.LinAlgError, OverflowError) as exc:
        json.dump(
            {"error": type(exc).__name__, "message": str(exc), "exit_code": 3}, sys.stderr
        )
        sys.stderr.write("\n")
        return 3


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
