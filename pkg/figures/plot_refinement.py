"""Plot F across refinement levels from a minimize run's report.json."""

import sys

from figlib import SchemaError, load_json, new_figure, require, run_script, save


def plot_refinement(report):
    """Build the level-vs-F figure. Returns (figure, data series)."""
    command = require(report, "command", "str", "report.json")
    if command != "minimize":
        raise SchemaError("report.json:command",
                          f"expected a minimize report, got {command!r}")
    levels = require(report, "levels", "list", "report.json")
    if not levels:
        raise SchemaError("report.json:levels", "expected at least one level")
    xs, ys = [], []
    for i, lev in enumerate(levels):
        if not isinstance(lev, dict):
            raise SchemaError(f"report.json:levels[{i}]", "expected an object")
        xs.append(require(lev, "level", "number", f"report.json:levels[{i}]"))
        ys.append(require(lev, "F", "number", f"report.json:levels[{i}]"))
    final_F = require(report, "final_F", "number", "report.json")

    fig, ax = new_figure()
    ax.plot(xs, ys, marker="o", label="F at level")
    ax.axhline(final_F, color="gray", lw=0.8, ls="--", label="final F")
    ax.set_xlabel("refinement level")
    ax.set_ylabel("F")
    ax.set_title(f"{report.get('integrand', 'functional')}: F across refinement")
    ax.legend()
    return fig, {"level": xs, "F": ys, "final_F": final_F}


def build(in_dir, out_dir):
    report = load_json(in_dir / "report.json")
    fig, series = plot_refinement(report)
    save(fig, out_dir, "refinement.png")
    return series


def main(argv=None) -> int:
    return run_script(build, argv)


if __name__ == "__main__":
    sys.exit(main())
