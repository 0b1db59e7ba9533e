"""Spectral envelopes and plateau detection on a noisy interpolant.

Interpolates the Gaussian-peak test function with and without synthetic
solver noise, converts both interpolants to their Chebyshev coefficients,
and shows how the coefficient envelope flattens at the noise level - the
signature the noise-robust refinement loop watches for.

Run:  python3 demos/02_spectral_plateau_detection.py
"""

import numpy as np

from misckit import (
    Genz2dgpNoisy,
    GridKit,
    PlateauParams,
    build_surrogate,
    detect_plateau,
    envelope,
    to_spectral,
)

model = Genz2dgpNoisy(master_seed=42)
kit = GridKit("symmetric_leja", "two_step")
iset = {(b1, b2) for b1 in range(1, 8) for b2 in range(1, 8) if b1 + b2 <= 8}

for label, evaluator in (
    ("noise-free", lambda a, y: model.noiseless(y)),
    ("noisy fidelity 1 (sigma = 1e-2)", lambda a, y: model.evaluate((1,), y)),
):
    surr = build_surrogate(iset, 0, kit, evaluator, fixed_alpha=(1,))
    env = envelope(to_spectral(surr))
    report = detect_plateau(env, PlateauParams())
    print(f"{label}:")
    print(f"  envelope (log10): {np.round(np.log10(env.values), 2)}")
    if report.is_plateau:
        print(
            f"  plateau detected: level={report.plateau_level:.2e} "
            f"change point={report.change_point} tail slope={report.m1:+.4f}"
        )
    else:
        print(f"  no plateau (tail slope {report.m1:+.3f})")
    print()
