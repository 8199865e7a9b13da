"""Render line plots and power-difference heatmaps from result CSVs.

Four delimited files drive everything, identified by name:

    gaussian_ci.csv    method,n,rep,lower,upper,covered,width,empty_flag
    evalue_power.csv   method,K,rho,mu,rep,reject
    ui_power.csv       method,n,mu,rep,reject
    betting_power.csv  method,b,n,rep,reject

Aggregation is a plain group-by over grid coordinates with the mean of
the value column, accumulated in row order.  Rendering is read-only and
deterministic: fixed figure sizes, fixed colormap, and a symmetric
color scale centered at zero for signed power differences.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

logger = logging.getLogger("simfigs")

_KINDS = ("line_ci", "heatmap_diff", "line_power")

_COLUMNS = {
    "gaussian_ci.csv": ("method", "n", "rep", "lower", "upper", "covered", "width", "empty_flag"),
    "evalue_power.csv": ("method", "K", "rho", "mu", "rep", "reject"),
    "ui_power.csv": ("method", "n", "mu", "rep", "reject"),
    "betting_power.csv": ("method", "b", "n", "rep", "reject"),
}

# columns where a flagged-empty interval leaves no number to report
_EMPTY_OK = frozenset({"lower", "upper", "width"})

# (row axis, column axis) of each heatmap family
_HEATMAP_AXES = {
    "evalue_power.csv": ("rho", "mu"),
    "betting_power.csv": ("b", "n"),
}


class MalformedCsvError(ValueError):
    """A result CSV is missing a column or holds an unparseable cell."""


@dataclass(frozen=True)
class FigureSpec:
    """One figure: which CSV feeds it, what to draw, where it goes.

    pair names the two methods subtracted in a heatmap (A minus B) and
    must be None for the line kinds.  filename is the output stem; the
    format extension is appended at render time.
    """

    source: str
    kind: str
    pair: Optional[tuple[str, str]]
    filename: str

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}")
        if self.source not in _COLUMNS:
            raise ValueError(f"unknown source CSV {self.source!r}")
        if (self.pair is not None) != (self.kind == "heatmap_diff"):
            raise ValueError("method pair goes with heatmap_diff and nothing else")


DEFAULT_SPECS = (
    FigureSpec("gaussian_ci.csv", "line_ci", None, "ci_width_coverage"),
    FigureSpec("evalue_power.csv", "heatmap_diff", ("EMI", "AvMI"), "evalue_diff_emi_avmi"),
    FigureSpec("evalue_power.csv", "heatmap_diff", ("UMI", "AvMI"), "evalue_diff_umi_avmi"),
    FigureSpec("evalue_power.csv", "heatmap_diff", ("EUMI", "AvMI"), "evalue_diff_eumi_avmi"),
    FigureSpec("betting_power.csv", "heatmap_diff", ("EMI", "AvMI"), "betting_diff_emi_avmi"),
    FigureSpec("betting_power.csv", "heatmap_diff", ("UMI", "AvMI"), "betting_diff_umi_avmi"),
    FigureSpec("betting_power.csv", "heatmap_diff", ("EUMI", "AvMI"), "betting_diff_eumi_avmi"),
    FigureSpec("ui_power.csv", "line_power", None, "ui_power_curves"),
)


def read_result_csv(path: Path) -> list[dict]:
    """Parse one result CSV into row dicts, validating the contract.

    method stays a string, every other documented column becomes a
    float; the EMPTY marker is legal only in the interval columns and
    comes back as nan.  Any deviation raises MalformedCsvError naming
    the offending column.
    """
    path = Path(path)
    columns = _COLUMNS[path.name]
    with open(path, newline="") as fh:
        header_line = fh.readline().strip()
        header = header_line.split(",") if header_line else []
        for col in columns:
            if col not in header:
                raise MalformedCsvError(f"{path.name}: missing column '{col}'")
        idx = {col: header.index(col) for col in columns}
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if len(cells) != len(header):
                raise MalformedCsvError(
                    f"{path.name}: line {lineno} has {len(cells)} cells, header has {len(header)}")
            row: dict = {}
            for col in columns:
                cell = cells[idx[col]]
                if col == "method":
                    row[col] = cell
                    continue
                try:
                    row[col] = float(cell)
                except ValueError:
                    if cell == "EMPTY" and col in _EMPTY_OK:
                        row[col] = math.nan
                    else:
                        raise MalformedCsvError(
                            f"{path.name}: column '{col}': cannot parse {cell!r} "
                            f"(line {lineno})") from None
            rows.append(row)
    return rows


def group_means(rows: list[dict], value: str, keys: tuple[str, ...]) -> dict:
    """Mean of one column grouped by key columns, in row order."""
    sums: dict = {}
    counts: dict = {}
    for row in rows:
        key = tuple(row[k] for k in keys)
        sums[key] = sums.get(key, 0.0) + row[value]
        counts[key] = counts.get(key, 0) + 1
    return {key: sums[key] / counts[key] for key in sums}


def _methods(rows: list[dict]) -> list[str]:
    return sorted({row["method"] for row in rows})


def diff_matrix(rows: list[dict], pair: tuple[str, str],
                row_key: str, col_key: str):
    """Rejection-rate difference between two methods on a 2-d grid.

    Returns (row values, column values, matrix) with the grid axes
    sorted ascending and matrix[i, j] = mean reject of pair[0] minus
    pair[1] at (row value i, column value j).
    """
    means = group_means(rows, "reject", ("method", row_key, col_key))
    row_vals = sorted({key[1] for key in means})
    col_vals = sorted({key[2] for key in means})
    matrix = np.empty((len(row_vals), len(col_vals)))
    for i, rv in enumerate(row_vals):
        for j, cv in enumerate(col_vals):
            for method in pair:
                if (method, rv, cv) not in means:
                    raise MalformedCsvError(
                        f"column 'method': no rows for {method!r} at "
                        f"{row_key}={rv:g}, {col_key}={cv:g}")
            matrix[i, j] = means[(pair[0], rv, cv)] - means[(pair[1], rv, cv)]
    return row_vals, col_vals, matrix


def ci_tables(rows: list[dict]):
    """Width and coverage means per (method, n) for the interval CSV.

    A flagged-empty interval contributes width 0 (there is nothing to
    measure) and its covered flag is already 0 in the file.
    """
    adjusted = [dict(row, width=0.0 if row["empty_flag"] else row["width"])
                for row in rows]
    width = group_means(adjusted, "width", ("method", "n"))
    coverage = group_means(adjusted, "covered", ("method", "n"))
    return width, coverage


def _render_line_ci(rows: list[dict]):
    width, coverage = ci_tables(rows)
    methods = _methods(rows)
    ns = sorted({key[1] for key in width})
    fig, (ax_w, ax_c) = plt.subplots(2, 1, figsize=(7.0, 7.0), sharex=True)
    for method in methods:
        ax_w.plot(ns, [width[(method, n)] for n in ns], marker="o", label=method)
        ax_c.plot(ns, [coverage[(method, n)] for n in ns], marker="o", label=method)
    ax_w.set_ylabel("mean interval width")
    ax_c.set_ylabel("empirical coverage")
    ax_c.set_xlabel("n")
    ax_c.axhline(0.95, color="gray", lw=0.8, ls="--")
    ax_w.legend()
    fig.suptitle("interval width and coverage by sample size")
    return fig


def _render_heatmap(rows: list[dict], spec: FigureSpec):
    row_key, col_key = _HEATMAP_AXES[spec.source]
    if spec.source == "evalue_power.csv":
        # one surface per figure: use the largest batch size present
        k_max = max(row["K"] for row in rows)
        rows = [row for row in rows if row["K"] == k_max]
    row_vals, col_vals, matrix = diff_matrix(rows, spec.pair, row_key, col_key)
    fig, ax = plt.subplots(figsize=(6.4, 5.2))
    scale = max(float(np.abs(matrix).max()), 1e-12)
    mesh = ax.imshow(matrix, origin="lower", aspect="auto", cmap="RdBu_r",
                     vmin=-scale, vmax=scale)
    ax.set_xticks(range(len(col_vals)), [f"{v:g}" for v in col_vals],
                  rotation=45, ha="right")
    ax.set_yticks(range(len(row_vals)), [f"{v:g}" for v in row_vals])
    ax.set_xlabel(col_key)
    ax.set_ylabel(row_key)
    a, b = spec.pair
    title = f"power({a}) - power({b})"
    if spec.source == "evalue_power.csv":
        title += f", K={k_max:g}"
    ax.set_title(title)
    fig.colorbar(mesh, ax=ax)
    fig.tight_layout()
    return fig


def _render_line_power(rows: list[dict]):
    means = group_means(rows, "reject", ("method", "mu"))
    methods = _methods(rows)
    mus = sorted({key[1] for key in means})
    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    for method in methods:
        ax.plot(mus, [means[(method, mu)] for mu in mus], marker="o", label=method)
    ax.set_xlabel("mu")
    ax.set_ylabel("rejection rate")
    ax.set_title("power by signal strength")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


def _render(spec: FigureSpec, rows: list[dict]):
    if spec.kind == "line_ci":
        return _render_line_ci(rows)
    if spec.kind == "heatmap_diff":
        return _render_heatmap(rows, spec)
    return _render_line_power(rows)


def make_figures(csv_dir, out_dir, fmt: str = "png") -> list[Path]:
    """Render every figure whose source CSV exists under csv_dir.

    Missing CSVs are skipped with a warning; an empty directory yields
    an empty list.  Output files land in out_dir (created if needed) as
    <filename>.<fmt>, overwritten deterministically on rerun.
    """
    csv_dir = Path(csv_dir)
    out_dir = Path(out_dir)
    if fmt not in ("png", "pdf"):
        raise ValueError(f"format must be png or pdf, got {fmt!r}")
    if not csv_dir.is_dir():
        raise FileNotFoundError(f"CSV directory {csv_dir} does not exist")
    out_dir.mkdir(parents=True, exist_ok=True)

    cache: dict[str, list[dict]] = {}
    written: list[Path] = []
    for spec in DEFAULT_SPECS:
        src = csv_dir / spec.source
        if not src.is_file():
            logger.warning("%s not found, skipping %s", spec.source, spec.filename)
            continue
        if spec.source not in cache:
            cache[spec.source] = read_result_csv(src)
        fig = _render(spec, cache[spec.source])
        out_path = out_dir / f"{spec.filename}.{fmt}"
        # a fresh pdf stamps the current time unless told otherwise
        metadata = {"CreationDate": None} if fmt == "pdf" else None
        fig.savefig(out_path, dpi=150, metadata=metadata)
        plt.close(fig)
        written.append(out_path)
    if not written:
        logger.warning("no result CSVs found in %s, nothing to draw", csv_dir)
    return written
