"""Regenerate the data behind the scan and noise figures with the nopa CLI.

Writes design.json, scan_{single,double,triple}.csv, spectrum.csv and
noise_{x,y}.csv (with the stderr reports as noise_{x,y}.json) into --outdir.
"""

import argparse
import contextlib
import io
import sys
from pathlib import Path

from nopa.cli import main as nopa


def run(args, outdir, name, stderr_name=None):
    err = io.StringIO()
    with contextlib.redirect_stderr(err):
        code = nopa(args + ["--out", str(outdir / name)])
    if code != 0:
        sys.stderr.write(err.getvalue())
        raise SystemExit(code)
    if stderr_name:
        (outdir / stderr_name).write_text(err.getvalue())


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--outdir", default="figure_data")
    args = p.parse_args(argv)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    base = ["--config", args.config] if args.config else []

    run(["design"] + base, outdir, "design.json")
    for stage in ("single", "double", "triple"):
        run(["scan", "--stage", stage] + base, outdir, f"scan_{stage}.csv")
    run(["spectrum", "--log", "--points", "300"] + base, outdir, "spectrum.csv")
    for q in ("x", "y"):
        run(["noise", "--quadrature", q] + base, outdir, f"noise_{q}.csv", f"noise_{q}.json")
    print(f"wrote {len(list(outdir.iterdir()))} files to {outdir}")


if __name__ == "__main__":
    main()
