"""Render csdecay CSV output.

`csdecay --plot` copies this file next to the data file, so it imports
nothing from the package, only pandas and matplotlib.
"""
import argparse
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

DATA_FILE = None
KIND = None


def read_table(path):
    return pd.read_csv(path, comment="#")


def detect_kind(df):
    if "classical" in df.columns:
        return "decompose"
    if "nonescape" in df.columns:
        return "observables"
    return "scan"


def plot_scan(df, ax):
    for col in df.columns:
        if col.startswith("survival["):
            lam = col[len("survival["):-1]
            ax.loglog(df["t"], df[col], label=f"$\\lambda={lam}$")
    ax.set_xlabel("$\\omega_0 t$")
    ax.set_ylabel("$S(t)$")


def plot_decompose(df, ax):
    x = df["tau"] / df["tau"].max()
    ax.plot(x, df["classical"], label="classical")
    ax.plot(x, df["memory"], label="memory")
    ax.plot(x, df["interference"], label="interference")
    ax.axhline(0.0, color="grey", linewidth=0.5)
    ax.set_xlabel("$\\tau / t$")
    ax.set_ylabel("fraction of $S(t)$")


def plot_observables(df, ax):
    ax.loglog(df["t"], df["nonescape"], label="$P(t)$")
    ax.loglog(df["t"], df["nonescape_asymptote"], "--", label="$P(t)$ asymptote")
    ax.loglog(df["t"], df["p"], label="$p(t)$")
    ax.loglog(df["t"], df["p_asymptote"], "--", label="$2aN/(\\pi t)$")
    ax.set_xlabel("$\\omega_0 t$")


PLOTTERS = {
    "scan": plot_scan,
    "decompose": plot_decompose,
    "observables": plot_observables,
}


def render(data_file, kind=None, out=None):
    df = read_table(data_file)
    kind = kind or detect_kind(df)
    fig, ax = plt.subplots(figsize=(8, 5))
    PLOTTERS[kind](df, ax)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    out = out or os.path.splitext(data_file)[0] + ".png"
    fig.savefig(out, dpi=150)
    plt.close(fig)
    print(f"Plot saved to {out}")
    return out


def write_plot_script(data_file, kind, script_path=None):
    """Copy this file next to data_file with the data file and plot kind filled in."""
    script_path = script_path or os.path.splitext(data_file)[0] + "_plot.py"
    with open(__file__) as f:
        source = f.read()
    source = source.replace("DATA_FILE = None", f"DATA_FILE = {os.path.basename(data_file)!r}", 1)
    source = source.replace("KIND = None", f"KIND = {kind!r}", 1)
    with open(script_path, "w") as f:
        f.write(source)
    return script_path


def main():
    parser = argparse.ArgumentParser(description="Plot csdecay output")
    parser.add_argument("--data", default=None, help="CSV written by csdecay")
    parser.add_argument("--kind", choices=sorted(PLOTTERS), default=KIND, help="Plot type (default: from columns)")
    parser.add_argument("--out", default=None, help="Image path (default: data path with .png)")
    args = parser.parse_args()

    data_file = args.data
    if data_file is None and DATA_FILE is not None:
        data_file = os.path.join(os.path.dirname(os.path.abspath(__file__)), DATA_FILE)
    if data_file is None:
        parser.error("--data is required")
    render(data_file, args.kind, args.out)


if __name__ == "__main__":
    main()
