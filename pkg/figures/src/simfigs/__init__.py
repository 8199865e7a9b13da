"""Static figures from the simulation harness CSVs.

The package reads the delimited result files written by the randmark
CLI and renders line plots and power-difference heatmaps next to them.
It depends only on the documented CSV columns, never on the library
that produced them.
"""

from .figures import (
    DEFAULT_SPECS,
    FigureSpec,
    MalformedCsvError,
    diff_matrix,
    group_means,
    make_figures,
    read_result_csv,
)

__all__ = [
    "DEFAULT_SPECS",
    "FigureSpec",
    "MalformedCsvError",
    "diff_matrix",
    "group_means",
    "make_figures",
    "read_result_csv",
]

__version__ = "0.1.0"
