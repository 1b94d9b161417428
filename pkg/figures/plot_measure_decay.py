"""Plot deviation-measure decay against the partition norm from a lemma-apim run."""

import sys

from figlib import SchemaError, load_table, new_figure, run_script, save

DEVIATION_COLUMNS = ("m", "norm", "measure")


def plot_measure_decay(table):
    """Build the ν(P)-vs-measure figure. Returns (figure, data series)."""
    norms = [row[1] for row in table]
    measures = [row[2] for row in table]
    if any(n <= 0.0 for n in norms):
        raise SchemaError("table_deviation.csv:norm",
                          "partition norms must be positive")

    fig, ax = new_figure()
    ax.plot(norms, measures, marker="o")
    ax.set_xlabel("partition norm ν(P)")
    ax.set_ylabel("deviation measure")
    ax.set_xscale("log")
    ax.invert_xaxis()  # refinement runs left to right
    ax.set_title("convergence in measure of the partition average")
    return fig, {"norm": norms, "measure": measures}


def build(in_dir, out_dir):
    table = load_table(in_dir / "table_deviation.csv", DEVIATION_COLUMNS)
    fig, series = plot_measure_decay(table)
    save(fig, out_dir, "measure_decay.png")
    return series


def main(argv=None) -> int:
    return run_script(build, argv)


if __name__ == "__main__":
    sys.exit(main())
