"""Work-precision figures for benchmark sweep CSVs."""

from .figures import (COST_AXES, FigureSpec, GROUP_KEYS,
                      MissingColumnsError, REQUIRED_COLUMNS, SCHEME_STYLE,
                      filter_rows, load_rows, render_integrator_comparison,
                      render_scheme_comparison)

__version__ = "0.1.0"

__all__ = [
    "COST_AXES",
    "FigureSpec",
    "GROUP_KEYS",
    "MissingColumnsError",
    "REQUIRED_COLUMNS",
    "SCHEME_STYLE",
    "filter_rows",
    "load_rows",
    "render_integrator_comparison",
    "render_scheme_comparison",
    "__version__",
]
