import json

import numpy as np
import pytest

from src.services.config_service import (
    FIGURE_PRESETS, RangeGrid, apply_overrides, config_from_dict, dump_config,
    load_config, parse_config, preset_config, to_dict
)
from src.services.model_service import Defect, ModelParams
from src.utils.errors import ConfigError

MINIMAL = '{"model": {"t1": 1.0, "t2": 0.5, "delta": 0.8, "cells_per_chain": 5}}'


class TestParseConfig:
    def test_minimal_document_gets_defaults(self):
        config = parse_config(MINIMAL)
        assert config.model == ModelParams(1.0, 0.5, 0.8, 5)
        assert config.defects == ()
        assert config.run.command == 'spectrum'
        assert config.run.tol == 1e-6
        assert config.run.time.stop == 30.0 and config.run.time.samples == 600
        assert config.run.pulse_prominence == 0.05
        assert config.run.window == (5.0, 30.0)
        assert config.run.drive.kappa == 0.1
        assert config.run.drive.omega == RangeGrid(-4.0, 4.0, 0.01)
        assert config.run.sweep == RangeGrid(0.0, 2.0, 0.01)
        assert config.output.formats == 'csv'

    def test_missing_delta_named(self):
        with pytest.raises(ConfigError) as info:
            parse_config('{"model": {"t1": 1.0, "t2": 0.5, "cells_per_chain": 5}}')
        assert any('model.delta' in message for message in info.value.errors)

    def test_all_errors_reported(self):
        document = {
            'model': {'t1': -1.0, 't2': 0.5, 'cells_per_chain': 5},
            'run': {'tol': 0, 'command': 'plot'},
        }
        with pytest.raises(ConfigError) as info:
            config_from_dict(document)
        joined = ' | '.join(info.value.errors)
        for path in ['model.t1', 'model.delta', 'run.tol', 'run.command']:
            assert path in joined

    def test_unknown_keys_rejected(self):
        document = json.loads(MINIMAL)
        document['run'] = {'bogus': 1}
        document['extra'] = True
        with pytest.raises(ConfigError) as info:
            config_from_dict(document)
        assert 'run.bogus: unknown key' in info.value.errors
        assert 'extra: unknown key' in info.value.errors

    def test_syntax_error_location(self):
        with pytest.raises(ConfigError) as info:
            parse_config('{\n  "model": {\n    "t1": 1.0,,\n  }\n}')
        assert info.value.line == 3
        assert info.value.column is not None

    def test_defect_site_checked_against_layout(self):
        document = json.loads(MINIMAL)
        document['defects'] = [{'site': 21, 'strength': 10.0}]
        with pytest.raises(ConfigError) as info:
            config_from_dict(document)
        assert any('defects[0].site' in message for message in info.value.errors)

    def test_excitation_list(self):
        document = json.loads(MINIMAL)
        document['run'] = {'command': 'evolve', 'excitation': ['first', 'uniform']}
        assert parse_config(json.dumps(document)).run.excitation == ('first', 'uniform')


class TestPresets:
    def test_fig5_expansion(self):
        config = preset_config('fig5')
        assert config.model == ModelParams(1.0, 0.5, 0.8, 5)
        assert config.run.command == 'spectrum'

    @pytest.mark.parametrize('name', sorted(FIGURE_PRESETS))
    def test_caption_values(self, name):
        config = preset_config(name)
        assert config.model.t1 == 1.0
        assert config.model.delta == 0.8
        assert config.model.cells_per_chain == 5
        assert config.model.t2 in (0.0, 0.5, 1.0)

    def test_fig9_defects(self):
        config = preset_config('fig9')
        assert config.defects == (Defect(10, 10.0), Defect(1, 10.0), Defect(2, 10.0), Defect(9, 10.0))
        assert config.run.excitation == ('interface', 'first', 'first', 'first')

    def test_model_keys_override_preset(self):
        config = config_from_dict({'preset': 'fig8', 'model': {'t2': 0.9}})
        assert config.model == ModelParams(1.0, 0.9, 0.8, 5)
        assert config.run.command == 'evolve'

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            config_from_dict({'preset': 'fig11'})


class TestRoundTrip:
    @pytest.mark.parametrize('name', sorted(FIGURE_PRESETS))
    def test_presets(self, name):
        config = preset_config(name)
        assert parse_config(dump_config(config)) == config

    def test_custom_document(self):
        config = parse_config(json.dumps({
            'model': {'t1': 1, 't2': 1.3, 'delta': 0.2, 'cells_per_chain': 3},
            'defects': [{'site': 4, 'strength': -2.5}],
            'run': {'command': 'scan', 'drive': {'preset': ['first'], 'kappa': 0.2,
                                                 'omega': {'start': -1, 'stop': 1, 'step': 0.5}}},
            'output': {'directory': 'out', 'formats': 'csv+svg'},
        }))
        assert parse_config(json.dumps(to_dict(config))) == config


class TestGrids:
    def test_sweep_grid(self):
        values = RangeGrid(0.0, 2.0, 0.01).values()
        assert len(values) == 201
        assert values[-1] == 2.0
        assert values[81] == 0.81

    def test_omega_grid_contains_zero(self):
        values = RangeGrid(-4.0, 4.0, 0.01).values()
        assert len(values) == 801
        assert 0.0 in values

    def test_time_grid(self):
        times = preset_config('fig8').run.time.values()
        assert times[0] == 0.0 and times[-1] == 30.0 and len(times) == 600


class TestOverridesAndEnvironment:
    def test_overrides(self):
        config = apply_overrides(parse_config(MINIMAL), command='sweep', tol=1e-8, out='elsewhere',
                                 formats='csv+svg')
        assert config.run.command == 'sweep'
        assert config.run.tol == 1e-8
        assert config.output.directory == 'elsewhere'
        assert config.output.formats == 'csv+svg'

    def test_invalid_override(self):
        with pytest.raises(ConfigError):
            apply_overrides(parse_config(MINIMAL), tol=-1.0)
        with pytest.raises(ConfigError):
            apply_overrides(parse_config(MINIMAL), formats='png')

    def test_output_directory_from_environment(self, monkeypatch):
        monkeypatch.setenv('NHARRAY_OUT_DIR', 'env-results')
        assert parse_config(MINIMAL).output.directory == 'env-results'

    def test_grid_values_are_numpy(self):
        assert isinstance(parse_config(MINIMAL).run.sweep.values(), np.ndarray)


class TestNestedPresetOverrides:
    def test_partial_drive_block_keeps_preset_panels(self):
        config = config_from_dict({'preset': 'fig10', 'run': {'drive': {'kappa': 0.2}}})
        assert config.run.drive.kappa == 0.2
        assert config.run.drive.preset == preset_config('fig10').run.drive.preset
        assert config.run.drive.omega == RangeGrid(-4.0, 4.0, 0.01)
        assert config.run.command == 'scan'

    def test_partial_sweep_block_keeps_preset_range(self):
        config = config_from_dict({'preset': 'fig2', 'run': {'sweep': {'step': 0.05}}})
        assert config.run.sweep == RangeGrid(0.0, 2.0, 0.05)


class TestLoadConfig:
    def test_non_utf8_file_is_config_error(self, tmp_path):
        path = tmp_path / 'latin1.json'
        path.write_bytes(b'{"model": {"t1": 1.0, "note": "\xe9"}}')
        with pytest.raises(ConfigError) as info:
            load_config(str(path))
        assert 'UTF-8' in info.value.errors[0]
