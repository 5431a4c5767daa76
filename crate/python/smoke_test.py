#!/usr/bin/env python3
"""Smoke test for the wavint_py extension module.

Build the extension first, then run this script:

    cargo build --release -p wavint-py
    python3 python/smoke_test.py
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def import_extension():
    """Copy the built cdylib next to a temp dir as an importable module."""
    candidates = [
        REPO / "target" / profile / name
        for profile in ("release", "debug")
        for name in ("libwavint_py.so", "wavint_py.so", "libwavint_py.dylib")
    ]
    built = next((c for c in candidates if c.exists()), None)
    if built is None:
        sys.exit("extension not built; run: cargo build -p wavint-py")
    stage = Path(tempfile.mkdtemp(prefix="wavint-py-"))
    shutil.copy2(built, stage / "wavint_py.so")
    sys.path.insert(0, str(stage))
    import wavint_py

    return wavint_py


IDEAL_CONFIG = """
frequency 20
source_depth 36
layer {
  z_top 0
  z_bot 100
  c constant 1500
  rho constant 1
  alpha constant 0
}
bottom pressure_release
order 10
k_grid auto 2048
ranges 1 1500 200
depths 0 100 51
output spectrum 46
output tl_grid
"""


def approx(a, b, tol):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def main():
    w = import_extension()

    # Canonical profiles.
    approx(w.munk_profile(1300.0), 1500.0, 1e-9)
    approx(w.munk_profile(0.0), 1548.52, 0.01)
    approx(w.pseudolinear_profile(0.0, 5.94e-10, 4.16e-7), 1550.4, 0.1)

    # Ideal-waveguide modes at 20 Hz in 100 m of 1500 m/s water.
    k = 2 * math.pi * 20 / 1500
    free = w.ideal_modes(100.0, k, "free")
    assert len(free) == 2
    approx(free[0], 0.077662, 1e-6)
    approx(free[1], 0.055412, 1e-6)
    rigid = w.ideal_modes(100.0, k, "rigid")
    assert len(rigid) == 3

    # Sweep spectrum peaks land on the modes.
    ks, mags = w.sweep_spectrum(IDEAL_CONFIG, 46.0)
    assert len(ks) == 2048 and len(mags) == 2048
    peaks = w.spectrum_peaks(ks, mags, 0.1)
    assert len(peaks) == 2, peaks
    approx(peaks[1], 0.077662, 1e-4)
    approx(peaks[0], 0.055412, 1e-4)

    # Full TL pipeline: finite values, sane magnitudes.
    ranges, depths, tl = w.transmission_loss(IDEAL_CONFIG)
    assert len(ranges) == 200 and len(depths) == 51
    interior = [tl[i][j] for i in range(10, 200) for j in range(1, 50)]
    assert all(math.isfinite(v) for v in interior)
    assert 20 < min(interior) < 80, min(interior)

    # Numerical field against the analytic modal reference at r >= 200 m.
    oracle = w.ideal_field_tl(100.0, k, 36.0, "free", ranges, depths)
    errs = [
        abs(tl[i][j] - oracle[i][j])
        for i in range(len(ranges))
        for j in range(1, 50)
        if ranges[i] >= 200 and math.isfinite(tl[i][j]) and math.isfinite(oracle[i][j])
    ]
    mean_err = sum(errs) / len(errs)
    assert mean_err < 0.5, f"mean TL error vs oracle {mean_err} dB"

    # File-writing entry point plus config canonicalization.
    out = Path(tempfile.mkdtemp(prefix="wavint-out-"))
    summary = w.run(IDEAL_CONFIG, str(out), oracle="ideal-free")
    assert (out / "tl_grid.csv").is_file()
    assert summary["oracle_error_db"] < 0.5
    canon = w.canonical_config(IDEAL_CONFIG)
    assert w.canonical_config(canon) == canon

    print("wavint_py smoke test: all checks passed")
    print(f"  free-seabed peaks: {[round(p, 6) for p in peaks]}")
    print(f"  mean TL error vs modal oracle: {mean_err:.4f} dB")


if __name__ == "__main__":
    main()
