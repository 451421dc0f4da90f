import numpy as np

from src.components.heatmap import render_population_map


def test_svg_is_byte_identical_across_renders(tmp_path):
    times = np.linspace(0.0, 1.0, 5)
    populations = np.tile(np.array([0.2, 0.3, 0.5]), (5, 1))
    first = render_population_map(times, populations, str(tmp_path / 'one.svg'), site_labels=['a1', 'Q', 'B1'])
    second = render_population_map(times, populations, str(tmp_path / 'two.svg'), site_labels=['a1', 'Q', 'B1'])

    with open(first, 'rb') as f:
        one = f.read()
    with open(second, 'rb') as f:
        two = f.read()
    assert one.startswith(b'<?xml')
    assert one == two
