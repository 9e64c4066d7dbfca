"""Figure rendering for CLI reports.

Each subcommand with a natural trace gets a small matplotlib figure written
next to the delimited output; everything numeric remains in the JSON/CSV,
the figures are a convenience view.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

__all__ = ["render_figures"]


def _save(fig, outdir, name):
    path = outdir / name
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path


def render_figures(record, outdir) -> list:
    """Render whatever figures the report's results support; returns paths."""
    r = record.results
    paths = []

    if record.subcommand == "mutual-pressure" and "methods" in r:
        methods = r["methods"]
        fig, ax = plt.subplots(figsize=(4.2, 3.0))
        names = list(methods)
        vals = [methods[m]["value"] for m in names]
        errs = [methods[m].get("stderr") or 0.0 for m in names]
        ax.bar(range(len(names)), vals, yerr=errs, capsize=4, color="#4878b0")
        ax.set_xticks(range(len(names)), names, rotation=15)
        ax.set_ylabel("mutual pressure")
        ax.set_title("cross-method comparison")
        paths.append(_save(fig, outdir, "methods.png"))

    if record.subcommand == "sanov" and "N" in r:
        fig, ax = plt.subplots(figsize=(4.2, 3.0))
        ax.plot(r["N"], r["log_prob_rate"], "o-", label="(1/N) log prob")
        ax.axhline(r["ldp_rate"], color="crimson", ls="--", label="LDP rate")
        ax.set_xlabel("N")
        ax.set_ylabel("exponent")
        ax.legend(frameon=False)
        paths.append(_save(fig, outdir, "typical_set.png"))

    trace = r.get("trace")
    if trace:
        fig, ax = plt.subplots(figsize=(4.2, 3.0))
        xs = [t[0] for t in trace]
        ys = [t[1] for t in trace]
        ax.plot(xs, ys, "o-")
        ax.set_xlabel("levels per axis")
        ax.set_ylabel("mutual pressure")
        ax.set_title("discretization refinement")
        paths.append(_save(fig, outdir, "refinement.png"))

    if record.subcommand == "duality" and "gap" in r:
        fig, ax = plt.subplots(figsize=(4.2, 3.0))
        parts = {
            "P(h)": r["pressure"],
            "P_sym + sum S": r["mutual_pressure"] + r["entropy_sum"],
        }
        ax.bar(range(2), list(parts.values()), color=["#4878b0", "#e1812c"])
        ax.set_xticks(range(2), list(parts))
        ax.set_title(f"gap = {r['gap']:.3e}")
        paths.append(_save(fig, outdir, "duality.png"))

    return paths
