"""Two-panel work-precision figures from benchmark sweep CSVs.

The input is the CSV emitted by the benchmark harness (one row per run);
this package reads only that file format and never the solver internals.
Left panel: cost against tolerance. Right panel: cost against achieved
relative l2 error. Both panels are log-log.
"""

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

REQUIRED_COLUMNS = (
    "problem", "param", "n", "integrator", "scheme", "tol",
    "steps_accepted", "steps_rejected", "rhs_evals", "leja_iters",
    "krylov_matvecs", "substeps", "wall_time_s", "l2_error", "error",
)

COST_AXES = ("rhs_evals", "wall_time_s")
GROUP_KEYS = ("scheme", "integrator")

# series styling: scheme -> (color, marker)
SCHEME_STYLE = {
    "leja": ("blue", "o"),
    "lekry": ("green", "+"),
    "kiops": ("red", "D"),
}

# deterministic marker/color cycle for per-integrator series
INTEGRATOR_MARKERS = ("o", "s", "^", "D", "v", "P", "X", "*")
INTEGRATOR_COLORS = ("tab:blue", "tab:orange", "tab:green", "tab:red",
                     "tab:purple", "tab:brown", "tab:pink", "tab:gray")


class MissingColumnsError(ValueError):
    """The CSV lacks columns the figures need; lists them all at once."""

    def __init__(self, missing):
        self.missing = tuple(missing)
        super().__init__(
            "CSV is missing required columns: " + ", ".join(self.missing))


@dataclass
class FigureSpec:
    csv_paths: list
    out_path: str
    problem: str = None
    param: float = None
    cost_axis: str = "rhs_evals"
    group_by: str = "scheme"
    also_svg: bool = False

    def validate(self):
        if not self.csv_paths:
            raise ValueError("at least one CSV path is required")
        if self.cost_axis not in COST_AXES:
            raise ValueError(f"cost_axis must be one of {COST_AXES}")
        if self.group_by not in GROUP_KEYS:
            raise ValueError(f"group_by must be one of {GROUP_KEYS}")


def load_rows(csv_paths):
    """Parse and concatenate sweep CSVs, checking the column contract."""
    rows = []
    for path in csv_paths:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            missing = [c for c in REQUIRED_COLUMNS
                       if c not in (reader.fieldnames or ())]
            if missing:
                raise MissingColumnsError(missing)
            rows.extend(reader)
    return rows


def _to_float(text):
    try:
        return float(text)
    except (TypeError, ValueError):
        return math.nan


def filter_rows(rows, problem=None, param=None):
    out = []
    for row in rows:
        if problem is not None and row["problem"] != problem:
            continue
        if param is not None:
            row_param = _to_float(row["param"])
            if not math.isclose(row_param, param, rel_tol=1e-12):
                continue
        out.append(row)
    return out


def _series(rows, key):
    """Rows grouped by column `key`, in deterministic sorted order."""
    groups = {}
    for row in rows:
        groups.setdefault(row[key], []).append(row)
    return dict(sorted(groups.items()))


def _panel_data(rows, x_col, cost_axis):
    """(x, cost) pairs sorted by x, dropping rows with NaN on either."""
    pts = []
    for row in rows:
        x = _to_float(row[x_col])
        y = _to_float(row[cost_axis])
        if math.isnan(x) or math.isnan(y):
            continue
        pts.append((x, y))
    pts.sort()
    return [p[0] for p in pts], [p[1] for p in pts]


def _style_for(group_by, name, index):
    if group_by == "scheme":
        color, marker = SCHEME_STYLE.get(name, ("black", "x"))
    else:
        color = INTEGRATOR_COLORS[index % len(INTEGRATOR_COLORS)]
        marker = INTEGRATOR_MARKERS[index % len(INTEGRATOR_MARKERS)]
    return color, marker


def _render(spec, group_by):
    spec.validate()
    rows = load_rows(spec.csv_paths)
    rows = filter_rows(rows, problem=spec.problem, param=spec.param)
    if not rows:
        raise ValueError(
            f"no rows match problem={spec.problem!r} param={spec.param!r}")

    n_bad = sum(1 for r in rows if math.isnan(_to_float(r["l2_error"])))
    if n_bad:
        warnings.warn(f"dropping {n_bad} row(s) without an l2_error from "
                      "the error panel")

    fig = Figure(figsize=(10.0, 4.2), dpi=110)
    FigureCanvasAgg(fig)
    ax_tol, ax_err = fig.subplots(1, 2)

    for i, (name, members) in enumerate(_series(rows, group_by).items()):
        color, marker = _style_for(group_by, name, i)
        tols, cost_t = _panel_data(members, "tol", spec.cost_axis)
        errs, cost_e = _panel_data(members, "l2_error", spec.cost_axis)
        ax_tol.loglog(tols, cost_t, color=color, marker=marker,
                      linestyle="-", label=name)
        ax_err.loglog(errs, cost_e, color=color, marker=marker,
                      linestyle="-", label=name)

    ax_tol.set_xlabel("tolerance")
    ax_err.set_xlabel("relative l2 error")
    for ax in (ax_tol, ax_err):
        ax.set_ylabel(spec.cost_axis)
        ax.invert_xaxis()
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
    title = spec.problem or "all problems"
    if spec.param is not None:
        title += f" (param {spec.param:g})"
    fig.suptitle(title)
    fig.tight_layout()

    out = Path(spec.out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out)
    if spec.also_svg:
        fig.savefig(out.with_suffix(".svg"))
    return fig


def render_scheme_comparison(spec):
    """One series per engine scheme with the fixed styling: leja = blue
    circles, lekry = green pluses, kiops = red diamonds."""
    return _render(spec, "scheme")


def render_integrator_comparison(spec):
    """One series per integrator; legend and styles derived from the data
    in sorted order."""
    return _render(spec, "integrator")
