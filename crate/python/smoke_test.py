#!/usr/bin/env python3
"""Smoke test for the oplab_py extension module.

Builds the cdylib if needed, loads it straight from the cargo target
directory, and exercises one call from each area of the API.

Usage: python3 python/smoke_test.py [--release]
"""

import importlib.machinery
import importlib.util
import math
import pathlib
import subprocess
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load_module(release: bool):
    profile = "release" if release else "debug"
    cmd = ["cargo", "build", "-p", "oplab-py"]
    if release:
        cmd.append("--release")
    subprocess.run(cmd, cwd=ROOT, check=True)
    for name in ("liboplab_py.so", "oplab_py.so", "liboplab_py.dylib", "oplab_py.dll"):
        candidate = ROOT / "target" / profile / name
        if candidate.exists():
            loader = importlib.machinery.ExtensionFileLoader("oplab_py", str(candidate))
            spec = importlib.util.spec_from_loader("oplab_py", loader)
            module = importlib.util.module_from_spec(spec)
            loader.exec_module(module)
            return module
    raise FileNotFoundError("built extension not found under target/")


def check(name, ok):
    print(f"{'PASS' if ok else 'FAIL'}  {name}")
    if not ok:
        sys.exit(1)


def main():
    lab = load_module("--release" in sys.argv[1:])

    hermite = lab.Family.hermite()
    check("gamma convention", hermite.gamma(-1) == 1.0)
    check("gamma hermite", abs(hermite.gamma(0) - 1 / math.sqrt(2)) < 1e-15)

    power = lab.Family.power_law(1.0, 0.5)
    report = power.check_conditions(4096)
    check("conditions clean", not report["any_violated"])
    check("integrability exponent", report["kappa"] == 3)

    trace = lab.eval(hermite, 1.0, 4, stride=1)
    check("recurrence p_1", abs(trace["p_n"][1] - math.sqrt(2)) < 1e-14)

    check("two-point identity", lab.cd_residual(hermite, 1.0, 0.5, 200) < 1e-10)

    ph = lab.unwind_phase(hermite, 1.0, 2000, stride=100)
    check("phase increasing", all(b > a for a, b in zip(ph["phi"], ph["phi"][1:])))
    check("two-term agreement", ph["two_term_max_rel"] < 1e-10)

    check("kernel limit value", lab.h_kernel(0.0, 0.7) == 0.0)
    check(
        "kernel symmetry",
        abs(lab.f_kernel(0.1, 0.4) + lab.f_kernel(0.1, math.pi - 0.4)) < 1e-12,
    )
    eps = lab.eps_kernel(1, 0.02, 0.3)
    check("eps kernel small", abs(eps) < 1e-3)

    lemma = lab.verify_lemma("basicn", power, 1.0)
    check("lemma verdict", lemma["verdict"] == "consistent")

    table = dict(lab.cm_table(0.01, 3))
    check("c0 vanishes", abs(table[0]) < 1e-12)
    check("c1 leading order", abs(table[1] / (0.01 / 4) - 1) < 0.05)
    gap = abs(lab.cm_contour(0.1, 2) - dict(lab.cm_table(0.1, 2))[2])
    check("contour route agrees", gap < 1e-8)

    est = lab.beta_limit(hermite, 0.0, 200_000)
    check("pair limit", abs(est["value"] - 1 / math.sqrt(math.pi)) < 0.01)
    ratio = lab.ratio_limit(hermite, 0.0, 200_000)
    check("ratio limit", abs(ratio["value"] - 0.5 / math.sqrt(math.pi)) < 0.01)

    slope = lab.growth_exponent(power, 1.0, 100_000)
    check("growth exponent", abs(slope - 0.5) < 0.02)

    verdicts = lab.conjecture_scan(power, [0.0, 2.5], 1.0, 50_000)
    check("rho 0 stable", verdicts[0]["classification"] == "stable")
    check("rho 2.5 not stable", verdicts[1]["classification"] != "stable")

    k1 = lab.apply_k(hermite, 1, [(1.0, 1 + 0j)])
    check("operator action", abs(k1[0][1] - 1j * math.sqrt(2)) < 1e-14)

    nrm = lab.signal_norm(hermite, [(0.0, 1 + 0j)], 200_000)
    check("signal norm", abs(nrm["value"] - math.sqrt(0.5 / math.sqrt(math.pi))) < 0.01)

    orth = lab.orthogonality_decay(hermite, 1.0, 2.0, 100_000)
    check("orthogonality decay", orth["decay_factor"] >= 3.0)

    res = lab.operator_cd_residual(
        hermite, [(1.0, 1 + 0j), (2.0, 0.5 - 0.25j)], [(0.5, 1 + 0j)], 50
    )
    check("operator identity", res < 1e-10)

    print("smoke test complete")


if __name__ == "__main__":
    main()
