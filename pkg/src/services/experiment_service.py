"""
Experiment Service
Runs a validated experiment config and writes its CSV/SVG artifacts plus manifest
"""

from typing import Dict, Any, List, Optional
import logging
import os

import numpy as np

from src.components.heatmap import render_heatmap, render_intensity_map, render_population_map
from src.services.config_service import ExperimentConfig, default_jobs, dump_config, panel_letter
from src.services.dynamics_service import (
    excitation_from_preset, interface_accumulation, population_correlation,
    propagate, pulse_times, defect_robustness_run
)
from src.services.manifest_service import write_manifest
from src.services.model_service import build_hamiltonian
from src.services.response_service import drive_scan, drive_spec_from_preset
from src.services.spectra_service import (
    analytic_zero_mode, chiral_partner_error, classify_localization, eig,
    spectrum_iprs, sweep_t2, zero_mode_transition, zero_modes
)
from src.utils import csv_handler
from src.utils.errors import ArrayModelError, ConfigError, InputError, OutputError, SingularParameterError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_COMPUTATION = 3
EXIT_IO = 4

COMMAND_MODULES = {
    'spectrum': 'spectra',
    'sweep': 'spectra',
    'evolve': 'dynamics',
    'robustness': 'dynamics',
    'scan': 'response',
}


class _Run:
    """Output directory plus the ordered list of files written so far."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.directory = config.output.directory
        self.svg = config.output.formats == 'csv+svg'
        self.files: List[str] = []
        self.notes: List[str] = []

    def path(self, name: str) -> str:
        return os.path.join(self.directory, name)

    def csv(self, df, name: str):
        self.files.append(csv_handler.write_csv(df, self.path(name)))
        logger.info("Wrote %s", name)

    def svg_file(self, name: str, render, *args, **kwargs):
        if self.svg:
            self.files.append(render(*args, path=self.path(name), **kwargs))
            logger.info("Wrote %s", name)

    def text(self, name: str, content: str):
        path = self.path(name)
        try:
            with open(path, 'w', encoding='utf-8', newline='\n') as f:
                f.write(content)
        except OSError as e:
            raise OutputError(f"Could not write {path}: {e}") from e
        self.files.append(path)


def _site_labels(config: ExperimentConfig) -> List[str]:
    layout = config.layout
    return [layout.label(j) for j in range(layout.total_sites)]


def run_spectrum(run: _Run):
    config = run.config
    H = build_hamiltonian(config.model, config.defects)
    spec = eig(H)
    iprs = spectrum_iprs(spec)
    zero = zero_modes(spec, config.run.tol, config.run.zero_mode_part)
    classification = classify_localization(spec, H.layout)

    classes = ['other'] * len(spec)
    for k in classification.type1_indices:
        classes[k] = 'type1'
    for k in classification.type2_indices:
        classes[k] = 'type2'

    run.csv(csv_handler.spectrum_frame(spec.eigenvalues, iprs, zero, classes), 'spectrum.csv')
    run.csv(csv_handler.modes_frame(spec.right_eigenvectors), 'modes.csv')
    run.svg_file('modes.svg', render_heatmap, np.abs(spec.right_eigenvectors).T, np.arange(len(spec)),
                 xlabel='eigenvalue index', site_labels=_site_labels(config), colorbar_label='|psi|')

    zero_in_type1 = len(set(zero) & set(classification.type1_indices))
    run.notes += [
        f"zero modes ({config.run.zero_mode_part} part, tol {config.run.tol:g}): {len(zero)}",
        f"max |Im E|: {spec.max_abs_imag:.6e}",
        f"eigenvector condition number: {spec.eigvec_condition:.6e}",
        f"classification: {len(classification.type1_indices)} peak at Q "
        f"({zero_in_type1} of them zero modes), "
        f"{len(classification.type2_indices)} peak at b_N or A_1, "
        f"{len(classification.other_indices)} elsewhere",
    ]
    if not config.defects:
        run.notes.append(f"chiral partner error: {chiral_partner_error(spec.eigenvalues):.3e}")
        try:
            psi = analytic_zero_mode(config.model)
            residual = np.linalg.norm(H.matrix @ psi)
            run.notes.append(f"analytic zero mode residual: {residual:.3e}")
        except SingularParameterError as e:
            run.notes.append(f"analytic zero mode: {e}")


def run_sweep(run: _Run, jobs: int):
    config = run.config
    grid = config.run.sweep.values()
    sweep = sweep_t2(config.model, grid, config.run.tol, config.run.zero_mode_part, jobs)

    run.csv(csv_handler.sweep_frame(sweep.grid, sweep.eigenvalues, 'real'), 'sweep_real.csv')
    run.csv(csv_handler.sweep_frame(sweep.grid, sweep.eigenvalues, 'imag'), 'sweep_imag.csv')
    run.csv(csv_handler.sweep_summary_frame(sweep.grid, sweep.zero_mode_counts, sweep.max_abs_imag),
            'sweep_summary.csv')
    run.csv(csv_handler.ipr_frame(sweep.grid, sweep.eigenvalues, sweep.iprs), 'ipr.csv')
    run.svg_file('ipr.svg', render_heatmap, sweep.iprs, sweep.grid, xlabel='t2', colorbar_label='IPR')

    transition = zero_mode_transition(sweep)
    if transition:
        lo, hi, before, after = transition
        run.notes.append(f"zero-mode count changes from {before} to {after} between t2={lo:g} and t2={hi:g}")
    else:
        run.notes.append("zero-mode count constant over the grid")

    real = sweep.grid[sweep.max_abs_imag < 1e-8]
    if len(real):
        run.notes.append(f"real spectrum (max |Im E| < 1e-8) at {len(real)} of {len(sweep.grid)} points")


def _times(config: ExperimentConfig) -> np.ndarray:
    return config.run.time.values()


def _write_trace(run: _Run, trace, letter: str, title: str):
    run.csv(csv_handler.evolution_frame(trace.times, trace.populations, trace.log_norms),
            f"evolution_{letter}.csv")
    run.svg_file(f"evolution_{letter}.svg", render_population_map, trace.times, trace.populations,
                 site_labels=_site_labels(run.config), title=title)


def run_evolve(run: _Run):
    config = run.config
    layout = config.layout
    H = build_hamiltonian(config.model, config.defects)
    times = _times(config)
    pulses = {}

    for k, name in enumerate(config.run.excitation):
        letter = panel_letter(k)
        trace = propagate(H, excitation_from_preset(name, layout), times)
        _write_trace(run, trace, letter, f"excite {name}")

        pulses[letter] = pulse_times(trace, layout.q, config.run.pulse_prominence)
        accumulation = interface_accumulation(trace, layout, config.run.window)
        run.notes.append(
            f"panel {letter} ({name}, {trace.method}): {len(pulses[letter])} pulse(s) at Q, "
            f"accumulation {accumulation:.6f}"
        )

    run.csv(csv_handler.pulses_frame(pulses, layout.q), 'pulses.csv')


def run_robustness(run: _Run):
    config = run.config
    layout = config.layout
    times = _times(config)
    window = config.run.window
    prominence = config.run.pulse_prominence
    clean = build_hamiltonian(config.model)
    baselines = {}
    rows = []

    for k, (defect, name) in enumerate(zip(config.defects, config.run.excitation)):
        letter = panel_letter(k)
        excitation = excitation_from_preset(name, layout)
        if name not in baselines:
            baselines[name] = propagate(clean, excitation, times)
        baseline = baselines[name]

        trace = defect_robustness_run(config.model, defect, excitation, times)
        _write_trace(run, trace, letter, f"defect at {layout.label(defect.site)}, excite {name}")

        accumulation = interface_accumulation(trace, layout, window)
        baseline_accumulation = interface_accumulation(baseline, layout, window)
        try:
            correlation = population_correlation(trace, layout.b_last, layout.a_first_l2, window)
        except InputError:
            correlation = float('nan')

        rows.append({
            'panel': letter,
            'defect_site': defect.site,
            'defect_strength': defect.strength,
            'excitation': name,
            'accumulation': accumulation,
            'baseline_accumulation': baseline_accumulation,
            'ratio': accumulation / baseline_accumulation if baseline_accumulation > 0 else float('nan'),
            'pulses': len(pulse_times(trace, layout.q, prominence)),
            'baseline_pulses': len(pulse_times(baseline, layout.q, prominence)),
            'interface_correlation': correlation,
        })
        run.notes.append(
            f"panel {letter}: accumulation {accumulation:.6f} vs {baseline_accumulation:.6f} defect-free"
        )

    run.csv(csv_handler.robustness_frame(rows), 'robustness.csv')


def run_scan(run: _Run, jobs: int):
    config = run.config
    layout = config.layout
    drive = config.run.drive
    H = build_hamiltonian(config.model, config.defects)
    omegas = drive.omega.values()

    for k, name in enumerate(drive.preset):
        letter = panel_letter(k)
        spec = drive_spec_from_preset(name, layout, omegas, drive.kappa)
        scan = drive_scan(H, spec, jobs)

        run.csv(csv_handler.scan_frame(scan.omegas, scan.intensities), f"scan_{letter}.csv")
        run.svg_file(f"scan_{letter}.svg", render_intensity_map, scan.omegas, scan.intensities,
                     site_labels=_site_labels(config), title=f"drive {name}")

        peak = float(scan.omegas[np.argmax(scan.site_intensity(layout.q))])
        center = int(np.argmin(np.abs(scan.omegas)))
        brightest = layout.label(int(np.argmax(scan.intensities[center])))
        run.notes.append(
            f"panel {letter} ({name}): I_Q peaks at omega={peak:g}; "
            f"brightest site at omega={scan.omegas[center]:g} is {brightest}"
        )


def run_experiment(config: ExperimentConfig, jobs: Optional[int] = None) -> Dict[str, Any]:
    """
    Execute the configured command.
    Returns {'success', 'error', 'exit_code', 'files'}; files lists every
    artifact in write order, manifest last.
    """
    jobs = jobs or default_jobs()
    run = _Run(config)
    command = config.run.command

    try:
        try:
            os.makedirs(run.directory, exist_ok=True)
        except OSError as e:
            raise OutputError(f"Could not create {run.directory}: {e}") from e

        logger.info("Running %s%s into %s", command,
                    f" ({config.preset})" if config.preset else '', run.directory)
        run.text('config.json', dump_config(config) + '\n')

        if command == 'spectrum':
            run_spectrum(run)
        elif command == 'sweep':
            run_sweep(run, jobs)
        elif command == 'evolve':
            run_evolve(run)
        elif command == 'robustness':
            run_robustness(run)
        elif command == 'scan':
            run_scan(run, jobs)
        else:
            raise ConfigError([f"run.command: unsupported command '{command}'"])

        run.text('notes.txt', '\n'.join(run.notes) + '\n')
        run.files.append(write_manifest(run.directory, run.files))

    except ConfigError as e:
        return {'success': False, 'error': f"config: {e}", 'exit_code': EXIT_CONFIG, 'files': run.files}
    except OutputError as e:
        return {'success': False, 'error': f"output: {e}", 'exit_code': EXIT_IO, 'files': run.files}
    except ArrayModelError as e:
        module = COMMAND_MODULES.get(command, 'model')
        logger.error("%s failed: %s", module, e)
        return {'success': False, 'error': f"{module}: {e}", 'exit_code': EXIT_COMPUTATION, 'files': run.files}
    except OSError as e:
        return {'success': False, 'error': f"output: {e}", 'exit_code': EXIT_IO, 'files': run.files}

    return {'success': True, 'error': None, 'exit_code': EXIT_OK, 'files': run.files}
