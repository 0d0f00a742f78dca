"""Release a compactly supported population and follow its front. The
measured speed approaches c* from below as the run lengthens.

Run: python3 demos/spreading_front.py   (about 30 s)
"""

from agewave import model, spectral, spreading
from agewave.model import SpaceGrid


def main():
    spec = model.reference_model()
    rep = spectral.dispersion_report(spec)
    grid = SpaceGrid.from_spacing(60.0, 0.1)
    run = spreading.spreading_run(spec, grid, 25.0, record_every=5)

    print("   t    x+(t)     x-(t)")
    track = run.track
    for k in range(0, len(track.t), max(1, len(track.t) // 10)):
        print(f"{track.t[k]:5.1f}  {track.x_plus[k]:8.3f}  {track.x_minus[k]:8.3f}")

    est = run.estimate
    print(f"\nfitted right speed {est.c_right:.4f} +/- {est.stderr_right:.4f}, left {est.c_left:.4f}")
    print(f"c* = {rep.c_star:.4f}, ratio {est.c_right / rep.c_star:.4f}")

    outer = spreading.outer_bound_check(run.trajectory, spec, rep, rep.c_star + 0.3)
    print(f"outer comparison at c* + 0.3: worst margin {outer.worst_margin:.2e}")

    hair = spreading.hair_trigger_check(spec, SpaceGrid.from_spacing(30.0, 0.1), 0.1, 0.9)
    print(f"a bump of height 0.1 lifts the origin to 0.9 after t = {hair.T:.2f}")


if __name__ == "__main__":
    main()
