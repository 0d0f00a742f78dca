"""Critical speed of the reference model and how it moves with the birth
coupling, the dispersal width and the maximal age.

Run: python3 demos/dispersion_curves.py
"""

import numpy as np

from agewave import kernels, model, spectral, spreading


def main():
    spec = model.reference_model()
    rep = spectral.dispersion_report(spec)
    print(f"reference model: s0 = {rep.s0:.10f}, c* = {rep.c_star:.10f} (sqrt(e) = {np.exp(0.5):.10f})")

    print("\nspectral radius of the shifted next-generation map")
    for s in (-2.0, -1.0, 0.0, 0.5):
        print(f"  s = {s:5.2f}   rho = {spectral.rho_of_s(spec, s):.8f}")

    print("\ndecay roots above the critical speed")
    for factor in (1.0, 1.1, 1.5, 2.0):
        c = rep.c_star * factor
        l1, l2 = rep.roots(c)
        print(f"  c = {c:.4f}   lambda1 = {l1:.6f}   lambda2 = {l2:.6f}")

    print("\ncritical speed against the birth coupling K = kappa")
    for kappa in (0.5, 1.0, 2.0, 4.0):
        r = spectral.dispersion_report(model.reference_model(kappa=kappa))
        print(f"  kappa = {kappa:4.1f}   s0 = {r.s0:+.6f}   c* = {r.c_star:.6f}")

    print("\nfat-tailed versus thin-tailed dispersal with equal variance")
    for name, J in (("gaussian", kernels.gaussian(0.3 * np.sqrt(2))), ("laplace", kernels.laplace(0.3))):
        s = model.ModelSpec.from_rates(model.AgeGrid(1.0, 101), 0.0, 1.0, 1.0, J)
        r = spectral.dispersion_report(s)
        ref = spreading.kpp_reference(s, r)
        print(f"  {name:9s} c* = {r.c_star:.6f}   scalar KPP speed = {ref.c0:.6f}")


if __name__ == "__main__":
    main()
