"""
SVG plots for run artifacts.

Only what the lab emits: log-scale line plots (trajectories) and a
categorical heat grid (phase tables). Both return the SVG document as text.
"""

import io

import matplotlib

matplotlib.use('Agg')
# Keep labels as SVG text, not glyph paths
matplotlib.rcParams['svg.fonttype'] = 'none'

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.colors import ListedColormap  # noqa: E402
from matplotlib.patches import Patch  # noqa: E402

PALETTE = ['#2c7bb6', '#d7191c', '#1a9641', '#fdae61', '#7b3294', '#008837', '#e66101', '#5e3c99']
MISSING_COLOR = '#eeeeee'


def _to_svg(fig) -> str:
    buf = io.StringIO()
    fig.savefig(buf, format='svg', bbox_inches='tight')
    plt.close(fig)
    return buf.getvalue()


def line_plot_svg(series, title='', x_label='iteration', y_label='', log_y=True) -> str:
    """
    Args:
        series: list of (label, xs, ys); non-finite and, on a log axis,
            non-positive points are dropped
    """
    fig, ax = plt.subplots(figsize=(8, 5))
    for index, (label, xs, ys) in enumerate(series):
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        keep = np.isfinite(ys) & (ys > 0 if log_y else True)
        ax.plot(xs[keep], ys[keep], label=label, color=PALETTE[index % len(PALETTE)], linewidth=1.2)

    if log_y and any(line.get_xydata().size for line in ax.get_lines()):
        ax.set_yscale('log')
    ax.set_xlabel(x_label)
    ax.set_ylabel(y_label)
    ax.set_title(title)
    ax.grid(True, which='major', alpha=0.3)
    if series:
        ax.legend(fontsize='small', loc='upper right')
    return _to_svg(fig)


def heat_grid_svg(row_labels, col_labels, cells, colors, title='') -> str:
    """
    Args:
        cells: dict mapping (row_label, col_label) -> (category, caption)
        colors: dict mapping category -> fill colour; unknown or empty
            categories are drawn grey
    """
    categories = list(colors)
    cmap = ListedColormap([colors[c] for c in categories] + [MISSING_COLOR])
    codes = np.full((len(row_labels), len(col_labels)), len(categories))
    for i, row in enumerate(row_labels):
        for j, col in enumerate(col_labels):
            category, _ = cells.get((row, col), ('', ''))
            if category in colors:
                codes[i, j] = categories.index(category)

    fig, ax = plt.subplots(figsize=(1.6 * max(1, len(col_labels)) + 3, 0.7 * max(1, len(row_labels)) + 1.5))
    ax.imshow(codes, cmap=cmap, vmin=-0.5, vmax=len(categories) + 0.5, aspect='auto')
    for i, row in enumerate(row_labels):
        for j, col in enumerate(col_labels):
            _, caption = cells.get((row, col), ('', ''))
            ax.text(j, i, caption, ha='center', va='center', fontsize=8)

    ax.set_xticks(range(len(col_labels)))
    ax.set_xticklabels(col_labels)
    ax.set_yticks(range(len(row_labels)))
    ax.set_yticklabels(row_labels)
    ax.set_title(title)
    ax.legend(
        handles=[Patch(facecolor=colors[c], label=c) for c in categories],
        loc='upper left', bbox_to_anchor=(1.02, 1.0), fontsize='small',
    )
    return _to_svg(fig)
