"""Recipe-driven figure rendering.

A recipe is a TOML file naming the figure kind, the input CSV paths and the
output image.  Each kind validates its inputs against the producing
command's CSV schema before any file is written; rendering goes to a
temporary path and is moved into place only on success, so failures leave
nothing behind.  Output is deterministic: fixed style, no timestamps.
"""

from __future__ import annotations

import csv
import os
import sys
import tempfile
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:   # Python < 3.11
    import tomli as tomllib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# columns each figure kind requires of its input CSVs
SCHEMAS = {
    "capacity": ("method", "M", "g", "p0", "gamma", "esn0_db", "ebn0_db", "bpcu"),
    "gain": ("M", "g", "rate", "gain_db"),
    "p0": ("M", "g", "esn0_db", "p0_opt"),
    "papr": ("M", "g", "gamma", "p0", "papr_db"),
    "exit": ("context", "esn0_db", "ia", "ie"),
    "ber": ("snr_db_eb", "ber", "frames"),
    "iters": ("snr_db_eb", "mean_iters", "frames"),
}

_STYLE = {
    "figure.figsize": (6.0, 4.2),
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.4,
    "font.size": 9,
}


def load_recipe(path) -> dict:
    with open(path, "rb") as fh:
        recipe = tomllib.load(fh)
    for key in ("kind", "csv", "output"):
        if key not in recipe:
            raise ValueError(f"recipe is missing the {key!r} field")
    if recipe["kind"] not in SCHEMAS:
        raise ValueError(f"unknown figure kind {recipe['kind']!r}; "
                         f"choose from {sorted(SCHEMAS)}")
    if isinstance(recipe["csv"], str):
        recipe["csv"] = [recipe["csv"]]
    return recipe


def read_table(path, kind: str) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty CSV")
        missing = set(SCHEMAS[kind]) - set(reader.fieldnames)
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)} "
                             f"for kind {kind!r}")
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return rows


def _col(rows, name):
    return [float(r[name]) for r in rows]


def _label(path) -> str:
    return Path(path).stem


def _plot_capacity(ax, tables, recipe):
    for path, rows in tables:
        groups = {}
        for r in rows:
            groups.setdefault((r["M"], r["g"], r["p0"]), []).append(r)
        for (M, g, p0), rs in sorted(groups.items()):
            ax.plot(_col(rs, "ebn0_db"), _col(rs, "bpcu"),
                    label=f"{M}-APSK g={g} p0={p0}")
    ax.set_xlabel("Eb/N0 (dB)")
    ax.set_ylabel("information rate (bpcu)")


def _plot_gain(ax, tables, recipe):
    for path, rows in tables:
        groups = {}
        for r in rows:
            groups.setdefault((r["M"], r["g"]), []).append(r)
        for (M, g), rs in sorted(groups.items()):
            ax.plot(_col(rs, "rate"), _col(rs, "gain_db"), label=f"{M}-APSK g={g}")
    ax.set_xlabel("overall rate (bits/symbol)")
    ax.set_ylabel("shaping gain (dB)")


def _plot_p0(ax, tables, recipe):
    for path, rows in tables:
        groups = {}
        for r in rows:
            groups.setdefault((r["M"], r["g"]), []).append(r)
        for (M, g), rs in sorted(groups.items()):
            ax.plot(_col(rs, "esn0_db"), _col(rs, "p0_opt"), marker="o",
                    label=f"{M}-APSK g={g}")
    ax.set_xlabel("Es/N0 (dB)")
    ax.set_ylabel("optimal p0")


def _plot_papr(ax, tables, recipe):
    for path, rows in tables:
        groups = {}
        for r in rows:
            groups.setdefault((r["M"], r["g"]), []).append(r)
        for (M, g), rs in sorted(groups.items()):
            rs = sorted(rs, key=lambda r: float(r["p0"]))
            ax.plot(_col(rs, "p0"), _col(rs, "papr_db"), label=f"{M}-APSK g={g}")
    ax.set_xlabel("p0")
    ax.set_ylabel("PAPR (dB)")


def _plot_exit(ax, tables, recipe):
    for path, rows in tables:
        by_ctx = {}
        for r in rows:
            by_ctx.setdefault(r["context"], []).append(r)
        for ctx, rs in sorted(by_ctx.items()):
            ia, ie = _col(rs, "ia"), _col(rs, "ie")
            if ctx.startswith("cnd"):
                # check curve drawn transposed: its output is the VND abscissa
                ax.plot(ie, ia, linestyle="--", label=f"{ctx} {_label(path)}")
            elif ctx.startswith("vnd"):
                ax.plot(ia, ie, label=f"{ctx} {_label(path)}")
            else:
                ax.plot(ia, ie, linestyle=":", label=f"{ctx} {_label(path)}")
    ax.set_xlabel("I_A,VND = I_E,CND")
    ax.set_ylabel("I_E,VND = I_A,CND")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)


def _plot_ber(ax, tables, recipe):
    for path, rows in tables:
        rs = sorted(rows, key=lambda r: float(r["snr_db_eb"]))
        ax.semilogy(_col(rs, "snr_db_eb"), [max(float(r["ber"]), 1e-12) for r in rs],
                    marker="o", label=_label(path))
    ax.set_xlabel("Eb/N0 (dB)")
    ax.set_ylabel("BER")


def _plot_iters(ax, tables, recipe):
    for path, rows in tables:
        rs = sorted(rows, key=lambda r: float(r["snr_db_eb"]))
        ax.plot(_col(rs, "snr_db_eb"), _col(rs, "mean_iters"), marker="s",
                label=_label(path))
    ax.set_xlabel("Eb/N0 (dB)")
    ax.set_ylabel("mean iterations to converge")


_PLOTTERS = {
    "capacity": _plot_capacity,
    "gain": _plot_gain,
    "p0": _plot_p0,
    "papr": _plot_papr,
    "exit": _plot_exit,
    "ber": _plot_ber,
    "iters": _plot_iters,
}


def render(recipe_path) -> Path:
    """Render one recipe; returns the output path."""
    recipe = load_recipe(recipe_path)
    kind = recipe["kind"]
    base = Path(recipe_path).parent
    tables = []
    for rel in recipe["csv"]:
        path = Path(rel)
        if not path.is_absolute():
            path = base / path
        tables.append((path, read_table(path, kind)))

    out = Path(recipe["output"])
    if not out.is_absolute():
        out = base / out
    out.parent.mkdir(parents=True, exist_ok=True)

    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        _PLOTTERS[kind](ax, tables, recipe)
        if recipe.get("title"):
            ax.set_title(recipe["title"])
        if "xlim" in recipe:
            ax.set_xlim(*recipe["xlim"])
        if "ylim" in recipe:
            ax.set_ylim(*recipe["ylim"])
        ax.legend(fontsize=7)
        fig.tight_layout()
        tmp = tempfile.NamedTemporaryFile(delete=False, suffix=out.suffix,
                                          dir=out.parent)
        tmp.close()
        try:
            fig.savefig(tmp.name, metadata=_no_timestamp_metadata(out.suffix))
            os.replace(tmp.name, out)
        except BaseException:
            os.unlink(tmp.name)
            raise
        finally:
            plt.close(fig)
    return out


def _no_timestamp_metadata(suffix: str):
    if suffix.lower() == ".svg":
        return {"Date": None}
    return {}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if not argv:
        print("usage: python -m figrender.render RECIPE.toml [RECIPE2.toml ...]",
              file=sys.stderr)
        return 2
    try:
        for recipe in argv:
            out = render(recipe)
            print(f"rendered {out}")
    except (ValueError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
