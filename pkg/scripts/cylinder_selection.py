#!/usr/bin/env python3
"""Profile selection on the rho circle as a function of circumference.

For each circumference ell, relaxes cosine-perturbed data under the rescaled
flow and classifies the terminal field.  Below the harmonic period of the
orbit equation only the constant survives; past it the flow can select a
periodic orbit whose period divides ell.
"""

import argparse

from fdelab import fowler
from fdelab.pipeline import RunConfig, run_rescaled
from fdelab.problem import ProblemSpec


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=4)
    ap.add_argument("--ells", type=float, nargs="+", default=[3.0, 4.0, 5.0, 6.0, 8.0])
    ap.add_argument("--amplitude", type=float, default=0.3)
    ap.add_argument("--resolution", type=int, default=256)
    args = ap.parse_args()

    p = (args.n + 2) / (args.n - 2)
    threshold = fowler.harmonic_period(args.n)
    print(f"minimal orbit period: {threshold:.6f}")
    for ell in args.ells:
        spec = ProblemSpec(n=args.n, geometry="cylinder_rho", p=p, ell=ell)
        config = RunConfig(spec=spec, initial_kind="cosine",
                           initial_params={"base": 1.0, "amplitude": args.amplitude,
                                           "mode": 1},
                           resolution=args.resolution)
        outcome = run_rescaled(config)
        fit = outcome.fit
        detail = ""
        if fit is not None and fit.kind == "fowler":
            detail = (f"  period {fit.params['period']:.6f}"
                      f"  energy {fit.params['energy']:.6f}")
        kind = fit.kind if fit is not None else "unclassified"
        print(f"ell {ell:5.2f}:  T* {outcome.t_star:.6f}  ->  {kind}{detail}")


if __name__ == "__main__":
    main()
