"""Experiment harness: one subcommand per study, CSV/JSON out, manifest in.

Exit codes: 0 success, 2 parameter validation, 3 solver non-convergence.
Every CSV starts with a `# manifest=<hash> units=...` comment line followed
by the RFC-4180 header row; rows are sorted by the parameter tuple so runs
are byte-identical at any --jobs level.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, cheb, gsprep, models, qsp, wavepacket

EXIT_VALIDATION = 2
EXIT_SOLVER = 3


class ValidationError(ValueError):
    pass


# ----------------------------------------------------------------------
# output plumbing


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


_VOLATILE_KEYS = {"out", "config", "jobs", "fn"}


def _manifest_hash(params):
    clean = {k: v for k, v in params.items() if not callable(v) and k not in _VOLATILE_KEYS}
    blob = json.dumps(clean, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def write_csv(path, header, rows, manifest_hash, units="dimensionless (lattice a=1)"):
    rows = sorted(rows, key=lambda r: tuple(_fmt(v) for v in r))
    with open(path, "w", newline="") as fh:
        fh.write(f"# manifest={manifest_hash} units={units}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_manifest(out_dir, name, params, outputs, t0, seed):
    params = {k: v for k, v in params.items() if not callable(v)}
    manifest = {
        "subcommand": name,
        "parameters": params,
        "seed": seed,
        "toolkit_version": __version__,
        "outputs": [str(p) for p in outputs],
        "wall_time_s": round(time.time() - t0, 3),
        "manifest_hash": _manifest_hash(params),
    }
    path = Path(out_dir) / f"{name}_manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return manifest


def _parse_range(text):
    """start:stop:step inclusive-ish range, or comma list."""
    if ":" in text:
        start, stop, step = (float(v) for v in text.split(":"))
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + k * step, 12) for k in range(n)]
    return [float(v) for v in text.split(",")]


def _map_jobs(fn, items, jobs):
    if jobs <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _load_model(args):
    if getattr(args, "model_file", None):
        with open(args.model_file) as fh:
            return models.model_from_json_dict(json.load(fh))
    if args.model == "sho":
        x_max = args.xmax if args.xmax else models.find_sho_xmax(args.nq, args.g)
        return models.sho_model(args.nq, args.g, x_max)
    if args.model == "u1":
        return models.u1_model(args.np_, args.nq, args.g, basis=args.basis)
    raise ValidationError(f"unknown model {args.model!r}")


# ----------------------------------------------------------------------
# subcommands


def cmd_solve_step(args, out_dir):
    window = cheb.sigma_window(args.eta, args.eta_proj, args.mu, args.delta, args.tau, args.c)
    poly, rep = cheb.solve_step_poly(window, args.degree)
    doc = poly.to_json_dict(report=rep, window=window)
    outputs = []
    path = out_dir / "step_poly.json"
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
    outputs.append(path)
    if args.phases:
        seq = qsp.solve_phases(poly)
        ppath = out_dir / "step_phases.json"
        with open(ppath, "w") as fh:
            json.dump(seq.to_json_dict(), fh, indent=2)
        outputs.append(ppath)
    return outputs, {}


def cmd_solve_gaussian(args, out_dir):
    spec = wavepacket.WavepacketSpec(n_q=args.nq, sigma_x=args.sigma_ratio * args.xmax, x_max=args.xmax)
    poly, rep = cheb.solve_gaussian_poly(
        spec, args.parity, args.degree, args.eta, args.tau, args.sample_mode, c=args.c
    )
    outputs = []
    path = out_dir / "gaussian_poly.json"
    with open(path, "w") as fh:
        json.dump(poly.to_json_dict(report=rep), fh, indent=2)
    outputs.append(path)
    if args.phases:
        if poly.parity == "none":
            raise ValidationError("phases need a definite-parity polynomial")
        seq = qsp.solve_phases(poly)
        ppath = out_dir / "gaussian_phases.json"
        with open(ppath, "w") as fh:
            json.dump(seq.to_json_dict(), fh, indent=2)
        outputs.append(ppath)
    return outputs, {}


def cmd_gsprep(args, out_dir):
    model = _load_model(args)
    degrees = [int(v) for v in _parse_range(args.degree_range)] if args.degree_range else [args.degree]
    if not degrees:
        raise ValidationError("empty degree range")
    if args.dtau is not None:
        args.tau = args.dtau * args.steps
    taus = _parse_range(args.tau_scan) if args.tau_scan else [args.tau]
    rp = models.rescale(model, args.eta, delta_preset=args.delta_preset)
    mu = args.mu if args.mu is not None else rp.mu
    delta = args.delta if args.delta is not None else rp.delta
    cache = {}
    rows = []
    for d in degrees:
        for tau in taus:
            rep = gsprep.prepare_ground_state(
                model,
                None,
                args.eta,
                args.eta_proj,
                mu,
                delta,
                tau,
                d,
                evolver=args.evolver,
                mode=args.mode.replace("-", "_"),
                n_steps=args.steps,
                rescale_params=rp,
                _cache=cache,
            )
            rows.append(
                (
                    d,
                    tau,
                    tau / args.steps,
                    args.steps,
                    args.mode,
                    rep.error,
                    rep.success_prob,
                    rep.gates.get("cnot", 0),
                    rep.gates.get("rz", 0) + rep.gates.get("rx", 0),
                )
            )
    path = out_dir / "gsprep_scan.csv"
    write_csv(
        path,
        ["d", "tau", "dtau", "n_steps", "mode", "error", "success_prob", "cnot", "rot"],
        rows,
        _manifest_hash(vars(args) | {"cmd": "gsprep"}),
    )
    return [path], {"mu": mu, "delta": delta, "tau_max": rp.tau_max}


def cmd_scan_dtau(args, out_dir):
    model = _load_model(args)
    rp = models.rescale(model, args.eta, delta_preset=args.delta_preset)
    cache = {}
    rows = []
    for d in [int(v) for v in _parse_range(args.degree_range)]:
        for dtau in _parse_range(args.dtau_scan):
            rep = gsprep.prepare_ground_state(
                model, None, args.eta, args.eta_proj, rp.mu, rp.delta, dtau, d,
                evolver="trotter", mode="control_free", n_steps=1,
                rescale_params=rp, _cache=cache,
            )
            rows.append((d, dtau, rep.error, rep.success_prob))
    path = out_dir / "dtau_scan.csv"
    write_csv(path, ["d", "dtau", "error", "success_prob"], rows, _manifest_hash(vars(args) | {"cmd": "scan-dtau"}))

    # N_tot needed per (eps, dtau) from the scan rows.
    rows_n = []
    for eps in _parse_range(args.eps_targets):
        for dtau in sorted(set(r[1] for r in rows)):
            cand = [r for r in rows if r[1] == dtau and r[2] <= eps]
            if cand:
                d_need = min(r[0] for r in cand)
                rows_n.append((eps, dtau, d_need * 1))
    path2 = out_dir / "ntot_vs_dtau.csv"
    write_csv(path2, ["eps_target", "dtau", "n_tot"], rows_n, _manifest_hash(vars(args) | {"cmd": "scan-dtau-ntot"}))
    return [path, path2], {"mu": rp.mu, "delta": rp.delta, "tau_max": rp.tau_max}


def _bounds_point(point):
    np_, nq, g, basis, eta = point
    model = models.u1_model(np_, nq, g, basis=basis)
    bound = models.emax_upper_bound(model, eta=eta)
    if model.dimension <= 2**12:
        rp = models.rescale(model, eta)
        delta_exact = rp.delta
        emax_exact = float(model.spectrum()[-1])
    else:
        delta_exact = np.nan
        emax_exact = np.nan
    return (np_, nq, g, delta_exact, bound.delta_lower, emax_exact, bound.emax_upper)


def cmd_bounds(args, out_dir):
    points = [
        (np_, nq, g, args.basis, args.eta)
        for np_ in [int(v) for v in _parse_range(args.np_grid)]
        for nq in [int(v) for v in _parse_range(args.nq_grid)]
        for g in _parse_range(args.g_grid)
    ]
    rows = _map_jobs(_bounds_point, points, args.jobs)
    path = out_dir / "delta_bounds.csv"
    write_csv(
        path,
        ["np", "nq", "g", "delta_exact", "delta_lower", "emax_exact", "emax_upper"],
        rows,
        _manifest_hash(vars(args) | {"cmd": "bounds"}),
    )
    return [path], {}


def cmd_adiabatic(args, out_dir):
    rows = []
    for np_ in [int(v) for v in _parse_range(args.np_grid)]:
        for nq in [int(v) for v in _parse_range(args.nq_grid)]:
            for g2 in _parse_range(args.g2_grid):
                target = models.u1_model(np_, nq, g2, basis=args.basis, rotor_sign=args.rotor_sign)
                strong = models.u1_model(
                    np_, nq, args.g1, basis=args.basis, grid_g=g2, rotor_sign=args.rotor_sign
                )
                sched = gsprep.adiabatic_schedule(args.g1, g2, T=args.T, M=args.M)
                psi = gsprep.adiabatic_init(strong, target, sched)
                gam = gsprep.gamma(psi, models.ground_state(target))
                rows.append((np_, nq, args.g1, g2, args.T, args.M, gam))
    path = out_dir / "adiabatic_gamma.csv"
    write_csv(
        path,
        ["np", "nq", "g1", "g2", "T", "M", "gamma"],
        rows,
        _manifest_hash(vars(args) | {"cmd": "adiabatic"}),
    )
    return [path], {}


def _wavepacket_point(point):
    method, nq, ratio, nch, d, xmax = point
    spec = wavepacket.WavepacketSpec(n_q=nq, sigma_x=ratio * xmax, x_max=xmax)
    rep = wavepacket.prepare_gaussian(spec, method, d)
    return (
        method.upper(),
        nq,
        ratio,
        nch,
        rep.error,
        1.0 / rep.gamma if rep.gamma > 0 else np.inf,
        rep.gates.cnot,
        rep.gates.rotations,
    )


def cmd_wavepacket(args, out_dir):
    points = []
    for method in args.method.split(","):
        for nq in [int(v) for v in _parse_range(args.nq_grid)]:
            for ratio in _parse_range(args.sigma_ratio_grid):
                for nch in [int(v) for v in _parse_range(args.nch_range)]:
                    d = 2 * (nch - 1) if method.upper() in ("IV", "V") else 2 * nch - 1
                    if d < 1:
                        continue
                    points.append((method, nq, ratio, nch, d, args.xmax))
    rows = _map_jobs(_wavepacket_point, points, args.jobs)
    path = out_dir / "wavepacket_scan.csv"
    write_csv(
        path,
        ["method", "n_q", "sigma_ratio", "n_ch", "error", "gamma_inv", "cnot", "rot"],
        rows,
        _manifest_hash(vars(args) | {"cmd": "wavepacket"}),
    )
    return [path], {}


def cmd_gatecount(args, out_dir):
    rows = []
    for nq in [int(v) for v in _parse_range(args.nq_grid)]:
        for d in [int(v) for v in _parse_range(args.d_grid)]:
            gc = wavepacket.gate_count_qetu(nq, d, with_shifts=args.with_shifts)
            rows.append((nq, d, "qetu", gc.cnot, gc.rotations))
        ge = wavepacket.gate_count_exact_prep(nq)
        rows.append((nq, 0, "exact", ge.cnot, ge.rotations))
    path = out_dir / "gatecount.csv"
    write_csv(path, ["n_q", "d", "method", "cnot", "rot"], rows, _manifest_hash(vars(args) | {"cmd": "gatecount"}))
    return [path], {}


def cmd_optimal_dtau(args, out_dir):
    em = gsprep.ErrorModel(a=args.a, b=args.b, c=args.c_coef, p=args.p)
    res = gsprep.optimal_dtau(em, args.eps, args.delta)
    doc = {
        "dtau_numeric": res.dtau_numeric,
        "dtau_approx": res.dtau_approx,
        "gap_percent": res.gap_percent,
        "n_tot": res.n_tot,
        "regime": res.regime,
        "residual": res.residual,
        "second_derivative": res.second_derivative,
    }
    path = out_dir / "optimal_dtau.json"
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
    return [path], doc


# ----------------------------------------------------------------------
# argument wiring


def _add_model_flags(p, default_model="sho"):
    p.add_argument("--model", default=default_model, choices=["sho", "u1"])
    p.add_argument("--model-file", default=None, help="JSON model file (overrides --model)")
    p.add_argument("--np", dest="np_", type=int, default=3)
    p.add_argument("--nq", type=int, default=3)
    p.add_argument("--g", type=float, default=1.0)
    p.add_argument("--basis", default="original", choices=["original", "weaved"])
    p.add_argument("--xmax", type=float, default=None)
    p.add_argument("--eta", type=float, default=0.05)
    p.add_argument("--eta-proj", type=float, default=0.0)
    p.add_argument("--delta-preset", default="full", choices=["full", "two_thirds"])


def build_parser():
    ap = argparse.ArgumentParser(prog="qetukit", description=__doc__)
    ap.add_argument("--out", default="results", help="output directory")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--config", default=None, help="JSON file of flag defaults (flags win)")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("solve-step", help="step-filter polynomial (and phases)")
    p.add_argument("--eta", type=float, default=0.3)
    p.add_argument("--eta-proj", type=float, default=0.3)
    p.add_argument("--mu", type=float, default=1.3)
    p.add_argument("--delta", type=float, default=0.6)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--c", type=float, default=0.999)
    p.add_argument("--degree", type=int, default=22)
    p.add_argument("--phases", action="store_true")
    p.set_defaults(fn=cmd_solve_step)

    p = sub.add_parser("solve-gaussian", help="Gaussian-target polynomial (and phases)")
    p.add_argument("--nq", type=int, default=4)
    p.add_argument("--sigma-ratio", type=float, default=0.4)
    p.add_argument("--xmax", type=float, default=4.0)
    p.add_argument("--parity", default="even", choices=["even", "odd", "none"])
    p.add_argument("--degree", type=int, default=8)
    p.add_argument("--eta", type=float, default=0.0)
    p.add_argument("--tau", type=float, default=2.0)
    p.add_argument("--sample-mode", default="eigenvalues_only", choices=["all_x", "eigenvalues_only"])
    p.add_argument("--c", type=float, default=0.999)
    p.add_argument("--phases", action="store_true")
    p.set_defaults(fn=cmd_solve_gaussian)

    p = sub.add_parser("gsprep", help="filtering scans (degree and/or tau)")
    _add_model_flags(p)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--dtau", type=float, default=None, help="step size; tau = dtau * steps")
    p.add_argument("--tau-scan", default=None, help="start:stop:step")
    p.add_argument("--degree", type=int, default=22)
    p.add_argument("--degree-range", default=None, help="start:stop:step")
    p.add_argument("--steps", type=int, default=1)
    p.add_argument("--mode", default="controlled", choices=["controlled", "control-free"])
    p.add_argument("--evolver", default="exact", choices=["exact", "trotter"])
    p.set_defaults(fn=cmd_gsprep)

    p = sub.add_parser("scan-dtau", help="error and cost vs step size")
    _add_model_flags(p, default_model="u1")
    p.add_argument("--degree-range", default="4:40:4")
    p.add_argument("--dtau-scan", default="0.2:1.9:0.1")
    p.add_argument("--eps-targets", default="0.01,0.001")
    p.set_defaults(fn=cmd_scan_dtau)

    p = sub.add_parser("bounds", help="gap lower bound vs exact on (np, nq, g) grids")
    p.add_argument("--np-grid", default="3")
    p.add_argument("--nq-grid", default="1:3:1")
    p.add_argument("--g-grid", default="0.2,0.6,1.0,1.4,2.0,5.0,10.0")
    p.add_argument("--basis", default="weaved", choices=["original", "weaved"])
    p.add_argument("--eta", type=float, default=0.05)
    p.set_defaults(fn=cmd_bounds)

    p = sub.add_parser("adiabatic", help="ramped initial-state overlap study")
    p.add_argument("--np-grid", default="3,5,7")
    p.add_argument("--nq-grid", default="2")
    p.add_argument("--g2-grid", default="0.2,0.7,1.2")
    p.add_argument("--g1", type=float, default=10.0)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--M", type=int, default=2)
    p.add_argument("--basis", default="original", choices=["original", "weaved"])
    p.add_argument("--rotor-sign", type=int, default=-1, choices=[-1, 1])
    p.set_defaults(fn=cmd_adiabatic)

    p = sub.add_parser("wavepacket", help="Gaussian preparation scans")
    p.add_argument("--method", default="V")
    p.add_argument("--nq-grid", default="5")
    p.add_argument("--sigma-ratio-grid", default="0.2")
    p.add_argument("--nch-range", default="2:9:1")
    p.add_argument("--xmax", type=float, default=4.0)
    p.set_defaults(fn=cmd_wavepacket)

    p = sub.add_parser("gatecount", help="ladder vs exact-preparation gate counts")
    p.add_argument("--nq-grid", default="1:8:1")
    p.add_argument("--d-grid", default="2,3,4")
    p.add_argument("--with-shifts", action="store_true")
    p.set_defaults(fn=cmd_gatecount)

    p = sub.add_parser("optimal-dtau", help="optimal step for the error budget")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--c", dest="c_coef", type=float, default=0.1)
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=0.1)
    p.set_defaults(fn=cmd_optimal_dtau)

    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.config:
        with open(args.config) as fh:
            defaults = json.load(fh)
        explicit = {a for a in (argv or sys.argv[1:]) if a.startswith("--")}
        for key, val in defaults.items():
            flag = "--" + key.replace("_", "-")
            if flag not in explicit and hasattr(args, key):
                setattr(args, key, val)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.time()
    try:
        outputs, extra = args.fn(args, out_dir)
    except (ValidationError, ValueError, cheb.WindowError, cheb.SamplingError) as exc:
        print(f"parameter validation failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (qsp.PhaseSolverError, cheb.BoundViolationError) as exc:
        print(f"solver failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    manifest = write_manifest(out_dir, args.cmd, vars(args) | {"fn": args.cmd}, outputs, t0, args.seed)
    if extra:
        print(json.dumps(extra, indent=2, default=float))
    print(f"wrote {len(outputs)} output(s); manifest {manifest['manifest_hash']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
