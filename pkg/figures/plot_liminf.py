"""Plot F(u_k) against k from a semicont run, with the F(limit) line.

When the run directory also carries table_truncation.csv, a second panel
shows the truncation measures against their Chebyshev bounds.
"""

import sys

from figlib import SchemaError, load_json, load_table, new_figure, require, run_script, save

LIMINF_COLUMNS = ("k", "F", "seminorm", "pairing_max", "u_distance")
TRUNCATION_COLUMNS = ("j", "measure", "bound")


def plot_liminf(table, F_limit=None):
    """Build the k-vs-F figure from parsed table rows. Returns (fig, series)."""
    ks = [row[0] for row in table]
    Fs = [row[1] for row in table]
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise SchemaError("table_liminf.csv:k", "k must be strictly increasing")

    fig, ax = new_figure()
    ax.plot(ks, Fs, marker="o", label="F(u_k)")
    series = {"k": ks, "F": Fs}
    if F_limit is not None:
        ax.axhline(F_limit, color="crimson", lw=1.0, ls="--", label="F(limit)")
        series["F_limit"] = F_limit
    ax.set_xlabel("k")
    ax.set_ylabel("F(u_k)")
    ax.set_title("energy along the oscillating sequence")
    ax.legend()
    return fig, series


def plot_truncation(table):
    js = [row[0] for row in table]
    measures = [row[1] for row in table]
    bounds = [row[2] for row in table]
    fig, ax = new_figure()
    ax.plot(js, measures, marker="o", label="|{|∇v| > j}|")
    ax.plot(js, bounds, marker="s", label="Chebyshev bound")
    ax.set_xlabel("j")
    ax.set_ylabel("measure")
    ax.set_xscale("log")
    ax.set_title("gradient truncation vs Chebyshev bound")
    ax.legend()
    return fig, {"j": js, "measure": measures, "bound": bounds}


def build(in_dir, out_dir):
    table = load_table(in_dir / "table_liminf.csv", LIMINF_COLUMNS)
    F_limit = None
    report_path = in_dir / "report.json"
    if report_path.exists():
        report = load_json(report_path)
        F_limit = require(report, "liminf.F_limit", "number", "report.json")
    fig, series = plot_liminf(table, F_limit)
    save(fig, out_dir, "liminf.png")

    trunc_path = in_dir / "table_truncation.csv"
    if trunc_path.exists():
        tfig, tseries = plot_truncation(load_table(trunc_path, TRUNCATION_COLUMNS))
        save(tfig, out_dir, "truncation.png")
        series = {**series, "truncation": tseries}
    return series


def main(argv=None) -> int:
    return run_script(build, argv)


if __name__ == "__main__":
    sys.exit(main())
