#!/usr/bin/env python3
"""Regenerate the three figure datasets into CSV files.

--quick swaps in coarse grids (a few minutes instead of an hour-scale run);
the CSV schemas are identical either way.
"""

import argparse
import pathlib
import sys

from qmb.cli import main as qmb_main

QUICK = {
    "fig2": {"params": {"chi_grid": [1.0, 2.0, 5.0, 10.0, 25.0, 60.0,
                                     150.0, 400.0, 1000.0]}},
    "fig3": {"params": {"chi_grid": [2.0, 5.0, 10.0, 50.0, 200.0]},
             "gamma_resolution": 10},
    "fig4": {"params": {"alpha_grid": [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0]}},
}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", default="results")
    parser.add_argument("--quick", action="store_true",
                        help="coarse grids for a fast pass")
    parser.add_argument("--tol", type=float, default=1e-7)
    args = parser.parse_args()

    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    for task in ("fig2", "fig3", "fig4"):
        out = outdir / f"{task}.csv"
        argv = [task, "--out", str(out), "--tol", str(args.tol)]
        if args.quick:
            import json
            import tempfile

            from qmb.cli import PRESETS

            doc = {"task": task, "preset": task}
            doc.update({k: v for k, v in QUICK[task].items() if k != "params"})
            doc["params"] = {**PRESETS[task]["params"], **QUICK[task]["params"]}
            with tempfile.NamedTemporaryFile("w", suffix=".json",
                                             delete=False) as fh:
                json.dump(doc, fh)
                cfg_path = fh.name
            argv += ["--config", cfg_path]
        print(f"== qmb {task} -> {out}", flush=True)
        code = qmb_main(argv)
        if code != 0:
            print(f"{task} exited with {code}", file=sys.stderr)
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
