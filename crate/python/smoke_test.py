"""Builds the extension module and exercises it from Python.

    python3 python/smoke_test.py
"""

import importlib.util
import math
import pathlib
import shutil
import subprocess
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load():
    subprocess.run(
        ["cargo", "build", "--release", "-p", "wiretap-py", "--features", "extension-module"],
        cwd=ROOT,
        check=True,
    )
    lib = ROOT / "target" / "release" / "libwiretap.so"
    dest = pathlib.Path(tempfile.mkdtemp()) / "wiretap.so"
    shutil.copy(lib, dest)
    spec = importlib.util.spec_from_file_location("wiretap", dest)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod


def check(name, ok, detail=""):
    print(f"{'ok  ' if ok else 'FAIL'} {name} {detail}")
    return ok


def main():
    w = load()
    results = []

    results.append(check("mi(0) == 0", abs(w.mutual_information(0.0)) < 1e-12))
    mi20 = w.mutual_information(20.0)
    results.append(check("bpsk mi saturates", abs(mi20 - 1.0) < 1e-6, f"{mi20:.9f}"))
    m16 = w.mutual_information(1000.0, "16qam")
    results.append(check("16qam mi saturates", abs(m16 - 4.0) < 1e-3, f"{m16:.6f}"))
    results.append(check("mmse(0) == 1", abs(w.mmse(0.0) - 1.0) < 1e-12))

    popt = w.find_popt(1.0, 0.5)
    results.append(check("popt finite", 0.0 < popt < math.inf, f"{popt:.6f}"))
    try:
        w.find_popt(1.0, 0.0)
        results.append(check("silent eavesdropper rejected", False))
    except ValueError:
        results.append(check("silent eavesdropper rejected", True))

    curve = w.beta_alpha_curve(1.0, 0.5, [0.25, 0.5, 0.75], model="gaussian")
    closed = [1.0 / (1.0 + 0.5 * (1.0 / a - 1.0)) for a, _ in curve]
    err = max(abs(b - c) for (_, b), c in zip(curve, closed))
    results.append(check("gaussian beta closed form", err < 1e-12, f"{err:.1e}"))

    sol = w.solve_gaussian([4.0, 2.0], [0.5, 0.5], [1.0, 1.0], 8.0)
    results.append(check("allocator budget", abs(sum(sol["q"]) - 8.0) < 1e-6, str(sol["q"])))
    results.append(check("allocator kkt", sol["kkt"] < 1e-6, f"{sol['kkt']:.1e}"))

    h = [[1 + 0.5j, 0.2], [0.1j, 0.8 - 0.3j], [0.4, -0.2 + 0.1j]]
    z = [[0.6, 0.0], [0.0, 0.6]]
    g = w.gsvd(h, z)
    results.append(check("gsvd residual", g["max_residual"] < 1e-10, f"{g['max_residual']:.1e}"))
    try:
        w.gsvd([[1.0, 2.0], [3.0]], z)
        results.append(check("ragged matrix rejected", False))
    except ValueError:
        results.append(check("ragged matrix rejected", True))

    e = w.Experiment.fig2()
    j0, gain2 = e.worst_eavesdropper()
    results.append(check("worst eavesdropper", gain2 > 0, f"j0={j0} gain2={gain2}"))
    results.append(check("fig2 gsvd residual", e.gsvd_max_residual() < 1e-10))
    subs = e.subchannels()
    results.append(check("subchannels retained", len(subs) >= 1, str(len(subs))))
    records = e.sweep()
    rg = [r["rs_gaussian"] for r in records]
    results.append(check("gaussian rate nondecreasing", all(b >= a - 1e-12 for a, b in zip(rg, rg[1:]))))
    s = e.summary()
    results.append(check("capped rate plateaus", s["finite_pc_terminal"] > 0, f"{s['finite_pc_terminal']:.6f}"))
    mean, se, bound = e.jensen_gap(10.0, samples=20000)
    results.append(check("jensen bound", mean <= bound + 3 * se, f"{mean:.4f} <= {bound:.4f}"))

    try:
        w.Experiment.from_toml("cases = [")
        results.append(check("bad toml rejected", False))
    except ValueError:
        results.append(check("bad toml rejected", True))

    failed = results.count(False)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
