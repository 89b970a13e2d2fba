"""Generator counts and conversion times for the checkerboard and box cones.

    python3 scripts/convert_stress.py --max-box-dim 12
"""
import argparse
import time

from conecraft.polyhedra import box_cone_hrep, checkerboard_hrep, dd_convert


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-box-dim", type=int, default=10)
    args = ap.parse_args()
    for side, tiles in [(16, 2), (28, 4), (28, 7)]:
        t0 = time.perf_counter()
        v = dd_convert(checkerboard_hrep(side, tiles))
        print(f"checkerboard {side}x{side}, {tiles}x{tiles} tiles: n_pointed={v.n_pointed} "
              f"n_lin={v.n_lin} n_r={v.n_r} in {time.perf_counter() - t0:.3f}s")
    for d in range(3, args.max_box_dim + 1):
        t0 = time.perf_counter()
        v = dd_convert(box_cone_hrep(d))
        print(f"box cone d={d}: {v.n_pointed} rays (2^d = {2 ** d}) "
              f"in {time.perf_counter() - t0:.3f}s")


if __name__ == "__main__":
    main()
