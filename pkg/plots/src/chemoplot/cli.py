"""Command-line entry points: one figure per command.

    plot_fig1   <run_dir> <out_image>
    plot_counts <run_dir> <out_image>
    plot_msd    <run_dir1> <run_dir2> <run_dir3> <out_image>

Each command exits 0 on success and 1 with a one-line message on stderr
when an input file is missing or malformed or the image cannot be written.
"""

from __future__ import annotations

import argparse
import sys

from .figures import clustering_figure, counts_figure, msd_figure, save
from .readers import PlotDataError


def _build_parser(prog: str, description: str, dirs: int
                  ) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=prog, description=description)
    if dirs == 1:
        parser.add_argument("run_dir", help="simulation output directory")
    else:
        for k in range(1, dirs + 1):
            parser.add_argument(f"run_dir{k}",
                                help=f"output directory of run {k}")
    parser.add_argument("out", help="image file to write (e.g. out.png)")
    return parser


def _emit(prog: str, build, out_path: str) -> int:
    try:
        fig = build()
    except PlotDataError as exc:
        print(f"{prog}: error: {exc}", file=sys.stderr)
        return 1
    try:
        save(fig, out_path)
    except OSError as exc:
        print(f"{prog}: error: cannot write {out_path}: {exc}",
              file=sys.stderr)
        return 1
    return 0


def fig1_main(argv=None) -> int:
    args = _build_parser(
        "plot_fig1",
        "Render the species histograms and chemical field of one run as a "
        "3x4 panel grid.", dirs=1).parse_args(argv)
    return _emit("plot_fig1", lambda: clustering_figure(args.run_dir),
                 args.out)


def counts_main(argv=None) -> int:
    args = _build_parser(
        "plot_counts",
        "Plot mean species counts over time with standard-error bands and "
        "their (conserved) sum.", dirs=1).parse_args(argv)
    return _emit("plot_counts", lambda: counts_figure(args.run_dir),
                 args.out)


def msd_main(argv=None) -> int:
    args = _build_parser(
        "plot_msd",
        "Overlay the mean squared displacement curves of three runs, with "
        "a log-log inset.", dirs=3).parse_args(argv)
    dirs = [args.run_dir1, args.run_dir2, args.run_dir3]
    return _emit("plot_msd", lambda: msd_figure(dirs), args.out)


def fig1_entry() -> None:
    raise SystemExit(fig1_main())


def counts_entry() -> None:
    raise SystemExit(counts_main())


def msd_entry() -> None:
    raise SystemExit(msd_main())
