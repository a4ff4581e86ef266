"""Command-line front end: ``wvfuse {simulate,fit,ci,compare,coverage,presets}``."""

import argparse
import datetime as _dt
import json
import logging
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, _accel, experiments, io, models
from .baselines import equal_weights
from .errors import DegenerateCovarianceError, InputError
from .inference import BootstrapConfig, default_block_size, svo_inference
from .svo import aggregate, make_weights, min_norm_coefficients, optimal_coefficients, virtual_wv
from .wavelet import default_levels, level_covariances, modwt, scales

log = logging.getLogger("wvfuse")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3


def _run_block(started: float) -> dict:
    import numba
    import scipy

    return {
        "finished_utc": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "elapsed_s": round(time.perf_counter() - started, 3),
        "versions": {
            "wvfuse": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "numba": numba.__version__,
        },
        "kernel_backend": _accel.BACKEND,
    }


def _config(args) -> dict:
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items()) if k != "func"}


def _weights(names, J):
    out = {}
    for name in names:
        if "," in name:
            vals = [float(v) for v in name.split(",") if v.strip()]
            w = make_weights(vals, J)
            out[f"explicit{len(out) + 1}"] = w
        else:
            w = make_weights(name, J, fit="truncate")
            if w.name != name and "[" in w.name:
                log.info("weight preset %s truncated to %d levels and renormalized", name, J)
            out[name] = w
    return out


def _load_input(args):
    signals = io.read_signals_csv(args.input, args.sample_rate)
    if args.split_halves:
        signals = signals.split_halves()
    if args.demean:
        from .wavelet import demean

        signals = demean(signals)
    return signals


def _levels_for(signals, J):
    J = default_levels(signals.T) if J is None else J
    if 2 ** J > signals.T:
        raise InputError(f"J={J} too large for T={signals.T} rows; maximum admissible J is "
                         f"{int(np.floor(np.log2(signals.T)))}")
    return J


def _wv_tables(out_dir, signals, J, per_level, coefs):
    tau = scales(J)
    sensor_wv = np.einsum("jii->ij", per_level)
    fused = {m: virtual_wv(per_level, c) for m, c in coefs.items()}
    ratio = {m: fused[m] / fused["eq"] for m in coefs}
    header = ["level", "tau_samples", "tau_seconds"] + list(signals.sensor_labels) + [f"fused:{m}" for m in coefs]
    rows = []
    for j in range(J):
        rows.append([j + 1, int(tau[j]), float(tau[j] / signals.sample_rate_hz)]
                    + [float(v) for v in sensor_wv[:, j]] + [float(fused[m][j]) for m in coefs])
    io.write_table(out_dir / "wv.csv", header, rows)
    io.write_table(out_dir / "wv_ratio.csv", ["level", "tau_samples"] + list(coefs),
                   [[j + 1, int(tau[j])] + [float(ratio[m][j]) for m in coefs] for j in range(J)])
    io.write_table(out_dir / "coefficients.csv", ["sensor"] + list(coefs),
                   [[lab] + [float(coefs[m][i]) for m in coefs] for i, lab in enumerate(signals.sensor_labels)])
    return {
        "tau_samples": tau,
        "tau_seconds": tau / signals.sample_rate_hz,
        "sensor_wv": {lab: sensor_wv[i] for i, lab in enumerate(signals.sensor_labels)},
        "fused_wv": fused,
        "wv_ratio_to_eq": ratio,
    }


def cmd_simulate(args) -> dict:
    if args.model:
        model = models.model_from_dict(json.loads(Path(args.model).read_text()))
        source = {"model_file": str(args.model), "model": models.model_to_dict(model)}
    else:
        model = models.preset(args.preset, delta=args.delta)
        source = {"preset": args.preset, "model": models.model_to_dict(model)}
    x = models.simulate(model, args.T, np.random.default_rng(args.seed), sample_rate_hz=args.sample_rate)
    path = Path(args.output) if args.output else Path(args.out_dir) / "signals.csv"
    io.write_signals_csv(x, path, {"seed": args.seed, **source})
    log.info("wrote %s (%d samples x %d sensors)", path, x.T, x.p)
    return {"output": str(path), "T": x.T, "p": x.p}


def _fit_core(args):
    signals = _load_input(args)
    J = _levels_for(signals, args.J)
    weights = _weights(args.omega or ["long-scale", "short-scale"], J)
    per_level = level_covariances(modwt(signals, J))
    coefs, degenerate = {}, []
    for name, w in weights.items():
        a0 = aggregate(per_level, w)
        try:
            c = optimal_coefficients(a0).c
        except DegenerateCovarianceError:
            # duplicated or collinear sensors: report the smallest-norm minimizer
            c = min_norm_coefficients(a0).c
            degenerate.append(f"svo:{name}")
            log.warning("aggregate matrix for %s is singular; using the minimum-norm solution", name)
        coefs[f"svo:{name}"] = c
    coefs["eq"] = equal_weights(signals.p).c
    return signals, J, weights, per_level, coefs, degenerate


def cmd_fit(args) -> dict:
    started = time.perf_counter()
    out_dir = Path(args.out_dir)
    signals, J, weights, per_level, coefs, degenerate = _fit_core(args)
    results = {
        "T": signals.T, "p": signals.p, "J": J, "sample_rate_hz": signals.sample_rate_hz,
        "sensor_labels": list(signals.sensor_labels),
        "weights": {k: w.omega for k, w in weights.items()},
        "coefficients": coefs,
        "min_norm_fallback": degenerate,
    }
    results.update(_wv_tables(out_dir, signals, J, per_level, coefs))
    if args.gmwm:
        fits = {}
        design = models._wv_design(J)
        for m, nu in results["fused_wv"].items():
            s2, g2 = models.nnls_two(design, nu)
            fits[m] = {"sigma2": s2, "gamma2": g2}
        results["gmwm"] = fits
    report = {"command": "fit", "config": _config(args), "results": results, "run": _run_block(started)}
    io.write_report(out_dir / "report.json", report)
    return report


def cmd_ci(args) -> dict:
    started = time.perf_counter()
    out_dir = Path(args.out_dir)
    signals = _load_input(args)
    J = _levels_for(signals, args.J)
    weights = _weights(args.omega or ["short-scale"], J)
    m_last = signals.T - 2 ** J + 1
    l = args.block_size or default_block_size(signals.T, m_last)
    cfg = BootstrapConfig(l, args.replicates, args.seed)
    out = {}
    rows = []
    for name, w in weights.items():
        res = svo_inference(signals, w, J, cfg, args.alpha)
        ci = res.intervals
        sig = np.diag(res.estimates.Sigma_star)
        out[f"svo:{name}"] = {
            "point": ci.point, "lower": ci.lower, "upper": ci.upper,
            "half_width": ci.half_width, "sigma_diag": sig,
        }
        for i, lab in enumerate(signals.sensor_labels):
            rows.append([f"svo:{name}", lab, float(ci.point[i]), float(ci.lower[i]), float(ci.upper[i]), float(sig[i])])
        if args.diagnostics:
            out[f"svo:{name}"]["Sigma_star"] = res.estimates.Sigma_star
            io.write_matrix_csv(out_dir / f"sigma_{name}.csv", res.estimates.Sigma_star, signals.sensor_labels)
            io.write_matrix_csv(out_dir / f"V_{name}.csv", res.estimates.V_star)
    io.write_table(out_dir / "intervals.csv", ["method", "sensor", "point", "lower", "upper", "sigma_ii"], rows)
    results = {
        "T": signals.T, "p": signals.p, "J": J, "alpha": args.alpha,
        "sensor_labels": list(signals.sensor_labels),
        "bootstrap": {"block_size": l, "replicates": args.replicates, "seed": args.seed},
        "weights": {k: w.omega for k, w in weights.items()},
        "intervals": out,
    }
    report = {"command": "ci", "config": _config(args), "results": results, "run": _run_block(started)}
    io.write_report(out_dir / "report.json", report)
    return report


def _summary(x):
    q = np.percentile(x, [25, 50, 75], axis=0)
    return {"q25": q[0], "median": q[1], "q75": q[2], "mean": x.mean(axis=0)}


def cmd_compare(args) -> dict:
    started = time.perf_counter()
    out_dir = Path(args.out_dir)
    model = models.preset(args.preset)
    J = default_levels(args.T) if args.J is None else args.J
    res = experiments.compare(model, args.T, J, args.n_fit, args.n_eval, args.seed,
                              gmwm=args.gmwm, workers=args.workers)
    tau = scales(J)
    methods = {}
    for m in res.methods:
        mean, se = res.mean_wv(m), res.se_wv(m)
        entry = {
            "label": experiments.LABELS[m],
            "coefficients": res.coefficients[m],
            "coefficient_summary": _summary(res.coefficients[m]),
            "oos_wv": res.oos_wv[m],
            "mean_wv": mean, "se_wv": se,
            "band_lower": mean - 1.96 * se, "band_upper": mean + 1.96 * se,
            "ratio_to_eq": res.ratio_to_eq(m),
        }
        if args.gmwm:
            entry["gmwm"] = {"sigma2": res.fits[m][:, 0], "gamma2": res.fits[m][:, 1],
                             "median_sigma2": float(np.median(res.fits[m][:, 0])),
                             "median_gamma2": float(np.median(res.fits[m][:, 1]))}
        methods[m] = entry
    io.write_table(out_dir / "compare_wv.csv",
                   ["level", "tau_samples"] + [f"{m}:{k}" for m in res.methods for k in ("mean", "se", "ratio")],
                   [[j + 1, int(tau[j])] + [float(v) for m in res.methods
                                            for v in (methods[m]["mean_wv"][j], methods[m]["se_wv"][j],
                                                      methods[m]["ratio_to_eq"][j])]
                    for j in range(J)])
    coef_rows = [[m, r] + [float(v) for v in c] for m in res.methods for r, c in enumerate(res.coefficients[m])]
    io.write_table(out_dir / "compare_coefficients.csv",
                   ["method", "fit_array"] + [f"gyro{i + 1}" for i in range(model.p)], coef_rows)
    if args.gmwm:
        io.write_table(out_dir / "compare_gmwm.csv", ["method", "sigma2", "gamma2"],
                       [[m, float(s), float(g)] for m in res.methods for s, g in res.fits[m]])
    results = {"preset": args.preset, "T": args.T, "J": J, "n_fit": args.n_fit, "n_eval": args.n_eval,
               "tau_samples": tau, "sensor_wv_mean": res.sensor_wv.mean(axis=0), "methods": methods}
    report = {"command": "compare", "config": _config(args), "results": results, "run": _run_block(started)}
    io.write_report(out_dir / "report.json", report)
    return report


def cmd_coverage(args) -> dict:
    started = time.perf_counter()
    out_dir = Path(args.out_dir)
    model = models.preset(args.preset)
    J = default_levels(args.T) if args.J is None else args.J
    weights = list(_weights([args.omega], J).values())[0]
    res = experiments.coverage(model, args.T, J, weights, args.n_rep, args.replicates, args.block_size,
                               args.alpha, args.seed, args.workers)
    nominal = 1 - args.alpha
    cov = res.coverage
    io.write_table(out_dir / "coverage.csv", ["coefficient", "c0", "coverage", "nominal", "mc_error_2se"],
                   [[i + 1, float(res.c0[i]), float(cov[i]), nominal, res.mc_error] for i in range(cov.size)])
    results = {
        "preset": args.preset, "T": args.T, "J": J, "weights": weights.omega, "alpha": args.alpha,
        "block_size": res.block_size, "replicates": res.replicates, "n_rep": args.n_rep,
        "c0": res.c0, "coverage": cov, "nominal": nominal, "mc_error_2se": res.mc_error,
        "within_mc_band": np.abs(cov - nominal) <= res.mc_error,
        "mean_half_width": res.half_width.mean(axis=0), "sd_c_hat": res.c_hat.std(axis=0, ddof=1),
    }
    report = {"command": "coverage", "config": _config(args), "results": results, "run": _run_block(started)}
    io.write_report(out_dir / "report.json", report)
    return report


def cmd_presets(args) -> dict:
    out_dir = Path(args.out_dir)
    written = []
    for name, mat in models.preset_matrices(args.preset).items():
        written.append(str(io.write_matrix_csv(out_dir / f"{args.preset}_{name}.csv", mat)))
    return {"written": written}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wvfuse", description=__doc__)
    parser.add_argument("--version", action="version", version=f"wvfuse {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("--out-dir", type=Path, default=Path("."), help="directory for outputs")
        if seed:
            p.add_argument("--seed", type=int, default=0)

    def signal_input(p):
        p.add_argument("--input", type=Path, required=True, help="CSV with a header row of sensor labels")
        p.add_argument("--sample-rate", type=float, default=None, help="Hz; default from sidecar or 1")
        p.add_argument("--J", type=int, default=None, help="number of wavelet levels")
        p.add_argument("--omega", action="append",
                       help="equal, long-scale, short-scale or a comma list; repeatable")
        p.add_argument("--demean", action="store_true", help="remove each signal's mean first")
        p.add_argument("--split-halves", action="store_true",
                       help="treat the second half of each signal as an extra sensor")

    p = sub.add_parser("simulate", help="simulate a sensor array to CSV")
    common(p)
    p.add_argument("--preset", choices=sorted(models.PRESETS), default="case1")
    p.add_argument("--model", type=Path, help="JSON model file instead of a preset")
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--delta", type=float, default=0.0, help="constant angular rate (deg/s)")
    p.add_argument("--sample-rate", type=float, default=10.0)
    p.add_argument("--output", type=Path, help="CSV path (default OUT_DIR/signals.csv)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="optimal fusion coefficients and wavelet variance tables")
    common(p, seed=False)
    signal_input(p)
    p.add_argument("--gmwm", action="store_true", help="also fit white noise + random walk to fused signals")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("ci", help="bootstrap confidence intervals for the coefficients")
    common(p)
    signal_input(p)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--block-size", type=int, default=None)
    p.add_argument("--replicates", type=int, default=500)
    p.add_argument("--diagnostics", action="store_true", help="write Sigma* and V* matrices")
    p.set_defaults(func=cmd_ci)

    p = sub.add_parser("compare", help="out-of-sample comparison of fusion methods")
    common(p)
    p.add_argument("--preset", choices=sorted(models.PRESETS), default="case1")
    p.add_argument("--T", type=int, default=2 ** 15)
    p.add_argument("--J", type=int, default=None)
    p.add_argument("--n-fit", type=int, default=50)
    p.add_argument("--n-eval", type=int, default=10)
    p.add_argument("--gmwm", action="store_true")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("coverage", help="Monte Carlo coverage of the bootstrap intervals")
    common(p)
    p.add_argument("--preset", choices=sorted(models.PRESETS), default="case1")
    p.add_argument("--T", type=int, default=2 ** 15)
    p.add_argument("--J", type=int, default=None)
    p.add_argument("--omega", default="short-scale")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--block-size", type=int, default=None)
    p.add_argument("--replicates", type=int, default=200)
    p.add_argument("--n-rep", type=int, default=300)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("presets", help="export preset model matrices as CSV")
    common(p, seed=False)
    p.add_argument("--preset", choices=sorted(models.PRESETS), default="case1")
    p.set_defaults(func=cmd_presets)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except DegenerateCovarianceError as exc:
        print(f"wvfuse: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"wvfuse: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
