"""UCP constant for the sum of the lowest Landau levels.

The single-level constant is only the first term; compressing onto levels
1..n shows how fast the constant degrades as more levels are admitted.

    python scripts/multilevel_probe.py --levels 3 --grid 16
"""
import argparse
import math

from landau_breather.lattice import make_geometry
from landau_breather.ucp import multilevel_c


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--b-field", type=float, default=4 * math.pi)
    ap.add_argument("--levels", type=int, default=3)
    ap.add_argument("--grid", type=int, default=16)
    ap.add_argument("--radius", type=float, default=0.2)
    ap.add_argument("--samples", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    geom = make_geometry(args.b_field, 1, args.grid)
    for top in range(1, args.levels + 1):
        vals = multilevel_c(geom, top, args.radius, args.samples, args.seed)
        print(f"levels 1..{top}: min {min(vals):.3e}  samples {' '.join(f'{v:.3e}' for v in vals)}")


if __name__ == "__main__":
    main()
