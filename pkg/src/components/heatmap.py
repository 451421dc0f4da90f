"""
Heatmap Component
SVG heatmaps of populations and intensities, rendered from the CSV data
"""

from typing import Optional, Sequence
import logging

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt
import numpy as np

from src.utils.errors import OutputError

logger = logging.getLogger(__name__)

# Fixed ids and no timestamp keep repeated renders byte-identical
plt.rcParams['svg.hashsalt'] = 'nharray'
plt.rcParams['svg.fonttype'] = 'none'
plt.rcParams['figure.figsize'] = (6.0, 3.5)
plt.rcParams['font.size'] = 9


def render_heatmap(
    values: np.ndarray,
    x: Sequence[float],
    path: str,
    xlabel: str,
    title: str = '',
    site_labels: Optional[Sequence[str]] = None,
    colorbar_label: str = ''
) -> str:
    """
    Draw values[x, site] with x on the horizontal axis and sites stacked
    vertically, then save as SVG.
    """
    values = np.asarray(values, dtype=float)
    x = np.asarray(x, dtype=float)

    fig, ax = plt.subplots()
    try:
        mesh = ax.pcolormesh(
            x, np.arange(values.shape[1]), values.T,
            shading='nearest', cmap='viridis', rasterized=False
        )
        ax.set_xlabel(xlabel)
        ax.set_ylabel('site')
        if site_labels is not None:
            ax.set_yticks(np.arange(len(site_labels)))
            ax.set_yticklabels(site_labels, fontsize=6)
        if title:
            ax.set_title(title)
        fig.colorbar(mesh, ax=ax, label=colorbar_label)
        fig.tight_layout()

        fig.savefig(path, format='svg', metadata={'Date': None})
    except OSError as e:
        raise OutputError(f"Could not write {path}: {e}") from e
    finally:
        plt.close(fig)

    logger.debug("Rendered %s", path)
    return path


def render_population_map(times, populations, path: str, site_labels=None, title: str = '') -> str:
    return render_heatmap(populations, times, path, 't (1/t1)', title, site_labels, 'population')


def render_intensity_map(omegas, intensities, path: str, site_labels=None, title: str = '') -> str:
    return render_heatmap(intensities, omegas, path, 'omega (t1)', title, site_labels, 'intensity')
