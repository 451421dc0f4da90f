"""
Configuration Service
Experiment documents (JSON), figure presets and environment defaults
"""

from dataclasses import dataclass, field, replace, asdict
from typing import Dict, Any, List, Optional, Tuple
import copy
import json
import logging
import math
import os

import numpy as np

from src.services.model_service import Defect, ModelParams, SiteLayout
from src.utils.errors import ConfigError, InputError
from src.utils.validators import (
    COMMANDS, DRIVE_PRESETS, EXCITATION_PRESETS, OUTPUT_FORMATS,
    validate_choice, validate_defect_row, validate_model_data,
    validate_non_negative, validate_positive, validate_range_block
)

logger = logging.getLogger(__name__)

DEFAULT_OUT_DIR = 'results'
PANEL_LETTERS = 'abcdefghijklmnopqrstuvwxyz'
ZERO_MODE_PARTS = ['real', 'abs']

TOP_KEYS = {'preset', 'model', 'defects', 'run', 'output'}
MODEL_KEYS = {'t1', 't2', 'delta', 'cells_per_chain'}
DEFECT_KEYS = {'site', 'strength'}
RUN_KEYS = {
    'command', 'tol', 'zero_mode_part', 'sweep', 'time', 'excitation',
    'pulse_prominence', 'window', 'drive'
}
RANGE_KEYS = {'start', 'stop', 'step'}
TIME_KEYS = {'stop', 'samples'}
WINDOW_KEYS = {'start', 'stop'}
DRIVE_KEYS = {'preset', 'kappa', 'omega'}
OUTPUT_KEYS = {'directory', 'formats'}


@dataclass(frozen=True)
class RangeGrid:
    start: float
    stop: float
    step: float

    def values(self) -> np.ndarray:
        """start, start + step, ... up to stop inclusive, rounded to 12 decimals."""
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return np.round(self.start + self.step * np.arange(count), 12)


@dataclass(frozen=True)
class TimeGrid:
    stop: float = 30.0
    samples: int = 600

    def values(self) -> np.ndarray:
        return np.linspace(0.0, self.stop, self.samples)


@dataclass(frozen=True)
class DriveSettings:
    preset: Tuple[str, ...] = ('interface',)
    kappa: float = 0.1
    omega: RangeGrid = RangeGrid(-4.0, 4.0, 0.01)


@dataclass(frozen=True)
class RunSettings:
    command: str = 'spectrum'
    tol: float = 1e-6
    zero_mode_part: str = 'real'
    sweep: RangeGrid = RangeGrid(0.0, 2.0, 0.01)
    time: TimeGrid = TimeGrid()
    excitation: Tuple[str, ...] = ('interface',)
    pulse_prominence: float = 0.05
    window: Tuple[float, float] = (5.0, 30.0)
    drive: DriveSettings = DriveSettings()


@dataclass(frozen=True)
class OutputSettings:
    directory: str = DEFAULT_OUT_DIR
    formats: str = 'csv'


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelParams
    defects: Tuple[Defect, ...] = ()
    run: RunSettings = RunSettings()
    output: OutputSettings = OutputSettings()
    preset: Optional[str] = None

    @property
    def layout(self) -> SiteLayout:
        return SiteLayout(self.model.cells_per_chain)


@dataclass(frozen=True)
class FigurePreset:
    """Parameter set bound to one figure of the study."""
    name: str
    description: str
    model: Dict[str, Any]
    run: Dict[str, Any]
    defects: List[Dict[str, Any]] = field(default_factory=list)


_CAPTION = {'t1': 1.0, 'delta': 0.8, 'cells_per_chain': 5}
_PANELS = ['interface', 'first', 'both_ends', 'uniform']

FIGURE_PRESETS: Dict[str, FigurePreset] = {
    'fig2': FigurePreset(
        'fig2', 'Real/imaginary spectrum and IPR versus t2',
        {**_CAPTION, 't2': 1.0},
        {'command': 'sweep', 'sweep': {'start': 0.0, 'stop': 2.0, 'step': 0.01}},
    ),
    'fig3': FigurePreset('fig3', 'Spectrum and eigenstates at t2 = 0',
                         {**_CAPTION, 't2': 0.0}, {'command': 'spectrum'}),
    'fig4': FigurePreset('fig4', 'Photon evolution at t2 = 0',
                         {**_CAPTION, 't2': 0.0}, {'command': 'evolve', 'excitation': _PANELS}),
    'fig5': FigurePreset('fig5', 'Spectrum and eigenstates at t2 = 0.5',
                         {**_CAPTION, 't2': 0.5}, {'command': 'spectrum'}),
    'fig6': FigurePreset('fig6', 'Photon evolution at t2 = 0.5',
                         {**_CAPTION, 't2': 0.5}, {'command': 'evolve', 'excitation': _PANELS}),
    'fig7': FigurePreset('fig7', 'Spectrum, skin classification at t2 = 1',
                         {**_CAPTION, 't2': 1.0}, {'command': 'spectrum'}),
    'fig8': FigurePreset('fig8', 'Pulsed interface laser at t2 = 1',
                         {**_CAPTION, 't2': 1.0}, {'command': 'evolve', 'excitation': _PANELS}),
    'fig9': FigurePreset(
        'fig9', 'On-site defects at t2 = 1',
        {**_CAPTION, 't2': 1.0},
        {'command': 'robustness', 'excitation': ['interface', 'first', 'first', 'first']},
        [
            {'site': 10, 'strength': 10.0},
            {'site': 1, 'strength': 10.0},
            {'site': 2, 'strength': 10.0},
            {'site': 9, 'strength': 10.0},
        ],
    ),
    'fig10': FigurePreset(
        'fig10', 'Output detection spectra at t2 = 1',
        {**_CAPTION, 't2': 1.0},
        {'command': 'scan', 'drive': {'preset': _PANELS, 'kappa': 0.1,
                                      'omega': {'start': -4.0, 'stop': 4.0, 'step': 0.01}}},
    ),
}

ALL_COMMANDS = COMMANDS + ['robustness']


def default_out_dir() -> str:
    return os.getenv('NHARRAY_OUT_DIR', DEFAULT_OUT_DIR)


def default_jobs() -> int:
    """Worker threads for sweeps and scans from NHARRAY_JOBS."""
    try:
        return max(1, int(os.getenv('NHARRAY_JOBS', '1')))
    except ValueError:
        logger.warning("Ignoring non-integer NHARRAY_JOBS=%r", os.getenv('NHARRAY_JOBS'))
        return 1


def _unknown_keys(block: Dict[str, Any], allowed: set, path: str) -> List[str]:
    return [f"{path}.{key}: unknown key" if path else f"{key}: unknown key"
            for key in sorted(block) if key not in allowed]


def _as_block(value: Any, path: str, errors: List[str]) -> Dict[str, Any]:
    if value is None:
        return {}
    if not isinstance(value, dict):
        errors.append(f"{path} must be an object")
        return {}
    return value


def _as_name_list(value: Any, options: List[str], path: str, errors: List[str]) -> Tuple[str, ...]:
    names = [value] if isinstance(value, str) else value
    if not isinstance(names, list) or not names:
        errors.append(f"{path} must be a preset name or a nonempty list of names")
        return ()
    for k, name in enumerate(names):
        is_valid, error = validate_choice(name, options, f"{path}[{k}]")
        if not is_valid:
            errors.append(error)
    return tuple(names)


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Recursive merge; nested blocks keep the base keys the override leaves out."""
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged



def _parse_range(data: Any, path: str, errors: List[str], default: RangeGrid) -> RangeGrid:
    block = _as_block(data, path, errors)
    if not block:
        return default
    errors.extend(_unknown_keys(block, RANGE_KEYS, path))
    filled = {'start': default.start, 'stop': default.stop, 'step': default.step, **block}
    block_errors = validate_range_block(filled, path)
    errors.extend(block_errors)
    if block_errors:
        return default
    return RangeGrid(filled['start'], filled['stop'], filled['step'])


def _parse_model(data: Dict[str, Any], preset: Optional[FigurePreset], errors: List[str]) -> Optional[ModelParams]:
    block = _as_block(data.get('model'), 'model', errors)
    errors.extend(_unknown_keys(block, MODEL_KEYS, 'model'))
    if preset:
        block = _merge(preset.model, block)

    is_valid, model_errors = validate_model_data(block)
    if not is_valid:
        errors.extend(model_errors)
        return None
    return ModelParams(block['t1'], block['t2'], block['delta'], block['cells_per_chain'])


def _parse_defects(data: Dict[str, Any], preset: Optional[FigurePreset],
                   total_sites: Optional[int], errors: List[str]) -> Tuple[Defect, ...]:
    rows = data.get('defects')
    if rows is None:
        rows = preset.defects if preset else []
    if not isinstance(rows, list):
        errors.append("defects must be a list")
        return ()

    defects = []
    for k, row in enumerate(rows):
        if not isinstance(row, dict):
            errors.append(f"defects[{k}] must be an object")
            continue
        errors.extend(_unknown_keys(row, DEFECT_KEYS, f"defects[{k}]"))
        if total_sites is None:
            continue
        is_valid, row_errors = validate_defect_row(row, k, total_sites)
        if not is_valid:
            errors.extend(row_errors)
            continue
        defects.append(Defect(row['site'], row['strength']))
    return tuple(defects)


def _parse_run(data: Dict[str, Any], preset: Optional[FigurePreset], errors: List[str]) -> RunSettings:
    block = _as_block(data.get('run'), 'run', errors)
    errors.extend(_unknown_keys(block, RUN_KEYS, 'run'))
    if preset:
        block = _merge(preset.run, block)

    defaults = RunSettings()
    settings = {}

    command = block.get('command', defaults.command)
    is_valid, error = validate_choice(command, ALL_COMMANDS, 'run.command')
    if not is_valid:
        errors.append(error)
    settings['command'] = command

    for key, check in (('tol', validate_positive), ('pulse_prominence', validate_non_negative)):
        value = block.get(key, getattr(defaults, key))
        is_valid, error = check(value, f"run.{key}")
        if not is_valid:
            errors.append(error)
        settings[key] = value

    part = block.get('zero_mode_part', defaults.zero_mode_part)
    is_valid, error = validate_choice(part, ZERO_MODE_PARTS, 'run.zero_mode_part')
    if not is_valid:
        errors.append(error)
    settings['zero_mode_part'] = part

    settings['sweep'] = _parse_range(block.get('sweep'), 'run.sweep', errors, defaults.sweep)

    time = _as_block(block.get('time'), 'run.time', errors)
    errors.extend(_unknown_keys(time, TIME_KEYS, 'run.time'))
    stop = time.get('stop', defaults.time.stop)
    samples = time.get('samples', defaults.time.samples)
    is_valid, error = validate_positive(stop, 'run.time.stop')
    if not is_valid:
        errors.append(error)
    if not isinstance(samples, int) or isinstance(samples, bool) or samples < 2:
        errors.append("run.time.samples must be an integer >= 2")
    settings['time'] = TimeGrid(stop, samples)

    if 'excitation' in block:
        settings['excitation'] = _as_name_list(block['excitation'], EXCITATION_PRESETS, 'run.excitation', errors)

    window = _as_block(block.get('window'), 'run.window', errors)
    errors.extend(_unknown_keys(window, WINDOW_KEYS, 'run.window'))
    window = (window.get('start', defaults.window[0]), window.get('stop', defaults.window[1]))
    for value, name in zip(window, ('run.window.start', 'run.window.stop')):
        is_valid, error = validate_non_negative(value, name)
        if not is_valid:
            errors.append(error)
    settings['window'] = window

    drive = _as_block(block.get('drive'), 'run.drive', errors)
    errors.extend(_unknown_keys(drive, DRIVE_KEYS, 'run.drive'))
    kappa = drive.get('kappa', defaults.drive.kappa)
    is_valid, error = validate_non_negative(kappa, 'run.drive.kappa')
    if not is_valid:
        errors.append(error)
    drive_presets = defaults.drive.preset
    if 'preset' in drive:
        drive_presets = _as_name_list(drive['preset'], DRIVE_PRESETS, 'run.drive.preset', errors)
    omega = _parse_range(drive.get('omega'), 'run.drive.omega', errors, defaults.drive.omega)
    settings['drive'] = DriveSettings(drive_presets, kappa, omega)

    return replace(defaults, **settings)


def _parse_output(data: Dict[str, Any], errors: List[str]) -> OutputSettings:
    block = _as_block(data.get('output'), 'output', errors)
    errors.extend(_unknown_keys(block, OUTPUT_KEYS, 'output'))

    directory = block.get('directory', default_out_dir())
    if not isinstance(directory, str) or not directory:
        errors.append("output.directory must be a nonempty string")

    formats = block.get('formats', 'csv')
    is_valid, error = validate_choice(formats, OUTPUT_FORMATS, 'output.formats')
    if not is_valid:
        errors.append(error)

    return OutputSettings(directory, formats)


def config_from_dict(data: Dict[str, Any]) -> ExperimentConfig:
    """Validate a parsed document; raises ConfigError listing every problem."""
    if not isinstance(data, dict):
        raise ConfigError(["document must be a JSON object"])

    errors = _unknown_keys(data, TOP_KEYS, '')

    preset = None
    name = data.get('preset')
    if name is not None:
        is_valid, error = validate_choice(name, list(FIGURE_PRESETS), 'preset')
        if is_valid:
            preset = FIGURE_PRESETS[name]
        else:
            errors.append(error)

    model = _parse_model(data, preset, errors)
    total_sites = SiteLayout(model.cells_per_chain).total_sites if model else None
    defects = _parse_defects(data, preset, total_sites, errors)
    run = _parse_run(data, preset, errors)
    output = _parse_output(data, errors)

    if run.command == 'robustness' and len(run.excitation) != len(defects):
        errors.append(
            f"run.excitation must list one preset per defect for robustness "
            f"({len(run.excitation)} != {len(defects)})"
        )
    if run.window[1] < run.window[0]:
        errors.append("run.window.stop must be >= run.window.start")
    if run.window[1] > run.time.stop:
        errors.append("run.window.stop must be <= run.time.stop")

    if errors:
        raise ConfigError(errors)

    return ExperimentConfig(model=model, defects=defects, run=run, output=output, preset=name)


def parse_config(text: str) -> ExperimentConfig:
    """Parse a JSON experiment document."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError([f"syntax error: {e.msg}"], line=e.lineno, column=e.colno) from e
    return config_from_dict(data)


def load_config(path: str) -> ExperimentConfig:
    with open(path, encoding='utf-8') as f:
        try:
            text = f.read()
        except UnicodeDecodeError as e:
            raise ConfigError([f"{path}: not valid UTF-8 (byte {e.start})"]) from e
    return parse_config(text)


def preset_config(name: str) -> ExperimentConfig:
    """Config of a figure preset with every other block at its default."""
    return config_from_dict({'preset': name})


def to_dict(config: ExperimentConfig) -> Dict[str, Any]:
    """Fully expanded document; parse_config(json.dumps(to_dict(c))) == c."""
    run = asdict(config.run)
    run['excitation'] = list(config.run.excitation)
    run['window'] = {'start': config.run.window[0], 'stop': config.run.window[1]}
    run['drive']['preset'] = list(config.run.drive.preset)

    data = {
        'model': asdict(config.model),
        'defects': [asdict(defect) for defect in config.defects],
        'run': run,
        'output': asdict(config.output),
    }
    if config.preset is not None:
        data['preset'] = config.preset
    return data


def dump_config(config: ExperimentConfig) -> str:
    return json.dumps(to_dict(config), indent=2, sort_keys=True)


def apply_overrides(config: ExperimentConfig, command: Optional[str] = None, tol: Optional[float] = None,
                    out: Optional[str] = None, formats: Optional[str] = None) -> ExperimentConfig:
    """Command-line flags win over document values."""
    run, output = config.run, config.output

    if command is not None:
        run = replace(run, command=command)
    if tol is not None:
        is_valid, error = validate_positive(tol, '--tol')
        if not is_valid:
            raise ConfigError([error])
        run = replace(run, tol=tol)
    if out is not None:
        output = replace(output, directory=out)
    if formats is not None:
        is_valid, error = validate_choice(formats, OUTPUT_FORMATS, '--format')
        if not is_valid:
            raise ConfigError([error])
        output = replace(output, formats=formats)

    return replace(config, run=run, output=output)


def panel_letter(k: int) -> str:
    if k >= len(PANEL_LETTERS):
        raise InputError(f"at most {len(PANEL_LETTERS)} panels per run")
    return PANEL_LETTERS[k]
