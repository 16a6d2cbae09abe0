"""Tests for the SVG plot helpers."""
from django.test import SimpleTestCase

from common.plotting import heat_grid_svg, line_plot_svg


class LinePlotTest(SimpleTestCase):

    def test_renders_series(self):
        svg = line_plot_svg([('seed 0', [0, 1, 2], [1.0, 0.1, 0.01])], title='rel dist', y_label='distance')
        self.assertIn('<svg', svg)
        self.assertIn('seed 0', svg)

    def test_drops_non_finite_and_non_positive(self):
        svg = line_plot_svg([('a', [0, 1, 2, 3], [1.0, float('nan'), 0.0, 1e-3])])
        self.assertIn('<svg', svg)

    def test_empty(self):
        self.assertIn('<svg', line_plot_svg([]))


class HeatGridTest(SimpleTestCase):

    def test_renders_cells_and_legend(self):
        colors = {'NonCritical': '#d7191c', 'NoDescentFound': '#1a9641'}
        cells = {('rotated', 'm=30'): ('NonCritical', 'NonCritical 90%')}
        svg = heat_grid_svg(['rotated'], ['m=30', 'm=60'], cells, colors, title='phase')
        self.assertIn('<svg', svg)
        self.assertIn('NoDescentFound', svg)
        self.assertIn('90%', svg)
