#!/usr/bin/env python3
"""Regenerate every study's data files (and figures, if qetufigs is installed).

Each block is one CLI invocation; comment out what you do not need.  The
full run takes tens of minutes; --quick trims the scans for a smoke pass.
"""
import argparse
import subprocess
import sys

from qetukit import models


def run(*args):
    cmd = [sys.executable, "-m", "qetukit.cli", *args]
    print("+", " ".join(cmd), flush=True)
    subprocess.run(cmd, check=True)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="results")
    ap.add_argument("--quick", action="store_true")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    out = ["--out", args.out, "--jobs", str(args.jobs)]

    # reference filter window and its phases
    run(*out, "solve-step", "--degree", "22", "--phases")

    # oscillator tau scan on the balanced grid
    xmax = models.find_sho_xmax(3, 1.0)
    tau_scan = "1.0:2.0:0.1" if args.quick else "0.9:2.0:0.025"
    run(
        *out, "gsprep", "--model", "sho", "--nq", "3", "--xmax", f"{xmax:.6f}",
        "--tau-scan", tau_scan, "--degree-range", "14:22:4",
    )

    # gauge-theory degree scans, exact evolution
    for np_ in (3, 5):
        run(
            *out, "gsprep", "--model", "u1", "--np", str(np_), "--nq", "1", "--g", "1.4",
            "--basis", "original", "--delta-preset", "two_thirds",
            "--degree-range", "4:40:4", "--tau", "1.0",
        )

    # step-size study on the 3-plaquette weaved model
    run(
        *out, "scan-dtau", "--model", "u1", "--np", "3", "--nq", "2", "--g", "1.0",
        "--basis", "weaved", "--delta-preset", "two_thirds",
        "--degree-range", "8:32:8" if args.quick else "8:48:8",
        "--dtau-scan", "0.3:1.8:0.3" if args.quick else "0.2:1.9:0.1",
    )

    # gap bounds and ramped-overlap studies
    run(*out, "bounds", "--np-grid", "3", "--nq-grid", "1:3:1",
        "--g-grid", "0.2,0.6,1.0,1.4,2.0,5.0,10.0")
    run(*out, "adiabatic", "--np-grid", "3,5,7", "--nq-grid", "2",
        "--g2-grid", "0.2,0.7,1.2,2.0")

    # wavepacket studies and the gate-count comparison
    methods = "I,V" if args.quick else "I,II,IV,V"
    run(*out, "wavepacket", "--method", methods, "--nq-grid", "4",
        "--sigma-ratio-grid", "0.4", "--nch-range", "2:8:1")
    run(*out, "wavepacket", "--method", "V", "--nq-grid", "5",
        "--sigma-ratio-grid", "0.1,0.2,0.3,0.4", "--nch-range", "3:9:1")
    run(*out, "gatecount", "--nq-grid", "1:8:1")

    # optimal-step worked numbers
    run(*out, "optimal-dtau", "--eps", "1e-3", "--p", "1", "--a", "1", "--c", "0.1")

    try:
        subprocess.run(
            [sys.executable, "-m", "qetufigs", "--data", args.out, "--out", args.out + "/figures"],
            check=True,
        )
    except (subprocess.CalledProcessError, ModuleNotFoundError):
        print("qetufigs not installed; skipped rendering")


if __name__ == "__main__":
    main()
