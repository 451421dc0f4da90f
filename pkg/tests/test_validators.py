import math

import pytest

from src.utils.validators import (
    validate_cells, validate_choice, validate_defect_row, validate_increasing_grid,
    validate_model_data, validate_positive, validate_range_block, validate_real, validate_site
)


class TestScalars:
    def test_real(self):
        assert validate_real(0.5, 'x') == (True, "")
        assert validate_real(None, 'x') == (False, "x is required")
        assert validate_real('1', 'x')[0] is False
        assert validate_real(True, 'x')[0] is False
        assert validate_real(math.inf, 'x') == (False, "x must be finite")

    def test_positive(self):
        assert validate_positive(1e-9, 'tol')[0]
        assert validate_positive(0, 'tol') == (False, "tol must be > 0")

    @pytest.mark.parametrize('value, ok', [(1, True), (200, True), (0, False), (201, False), (2.0, False)])
    def test_cells(self, value, ok):
        assert validate_cells(value)[0] is ok

    def test_site(self):
        assert validate_site(20, 21)[0]
        assert validate_site(21, 21)[0] is False
        assert validate_site(-1, 21)[0] is False

    def test_choice(self):
        assert validate_choice('csv', ['csv'], 'format')[0]
        assert validate_choice('xlsx', ['csv'], 'format') == (False, "format must be one of: csv")


class TestBlocks:
    def test_grid(self):
        assert validate_increasing_grid([0.0, 0.1])[0]
        assert validate_increasing_grid([])[0] is False
        assert validate_increasing_grid([0.1, 0.1])[0] is False

    def test_range_block(self):
        assert validate_range_block({'start': 0, 'stop': 2, 'step': 0.01}, 'run.sweep') == []
        errors = validate_range_block({'start': 2, 'stop': 0, 'step': 0.01}, 'run.sweep')
        assert errors == ["run.sweep.stop must be >= run.sweep.start"]
        assert "run.sweep.step must be > 0" in validate_range_block({'start': 0, 'stop': 1, 'step': 0}, 'run.sweep')

    def test_model_data_collects_everything(self):
        is_valid, errors = validate_model_data({'t1': 0, 't2': 'a'})
        assert not is_valid
        assert len(errors) == 4
        assert "model.delta is required" in errors

    def test_defect_row(self):
        assert validate_defect_row({'site': 3, 'strength': 10.0}, 0, 21) == (True, [])
        is_valid, errors = validate_defect_row({'site': 30}, 2, 21)
        assert not is_valid
        assert errors[0].startswith('defects[2].site')
        assert errors[1] == 'defects[2].strength is required'
