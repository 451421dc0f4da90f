import numpy as np
import pytest

from src.services.model_service import Hamiltonian, ModelParams, SiteLayout, build_hamiltonian
from src.services.response_service import (
    drive_scan, drive_spec_from_preset, make_drive_spec, resonance_frequencies, steady_state
)
from src.services.spectra_service import eig
from src.utils.errors import InputError, ResonanceError

OMEGAS = np.round(np.arange(-400, 401) * 0.01, 12)
KAPPA = 0.1


def single_site(value=0.0):
    return Hamiltonian(
        matrix=np.array([[value]], dtype=complex),
        layout=SiteLayout(1),
        params=ModelParams(1.0, 1.0, 0.0, 1),
    )


def intensity(H, source, detector, omega, kappa=KAPPA):
    drive = make_drive_spec([(source, 1.0)], [omega], kappa, H.dimension)
    return abs(steady_state(H, drive, omega)[detector]) ** 2


class TestSteadyState:
    @pytest.mark.parametrize('omega', [-1.0, 0.0, 0.3])
    def test_single_mode_lorentzian(self, omega):
        amplitude = 0.7
        drive = make_drive_spec([(0, amplitude)], [omega], KAPPA, 1)
        a = steady_state(single_site(), drive, omega)
        assert a[0] == pytest.approx(amplitude / (omega + 0.5j * KAPPA))
        assert abs(a[0]) ** 2 == pytest.approx(amplitude ** 2 / (omega ** 2 + KAPPA ** 2 / 4))

    def test_residual(self, caption_h):
        H = caption_h(1.0)
        drive = make_drive_spec([(10, 1.0)], [0.2], KAPPA, 21)
        a = steady_state(H, drive, 0.2)
        system = (0.2 + 0.5j * KAPPA) * np.eye(21) - H.matrix
        assert np.linalg.norm(system @ a - drive.vector()) <= 1e-10

    def test_resonance_singularity(self):
        drive = make_drive_spec([(0, 1.0)], [0.0], 0.0, 1)
        with pytest.raises(ResonanceError) as info:
            steady_state(single_site(), drive, 0.0)
        assert info.value.closest_eigenvalue == 0

    def test_edge_drive_resonates_at_zero(self, caption_h):
        H = caption_h(1.0)
        assert intensity(H, 0, 10, 0.0) >= 10 * intensity(H, 0, 10, 3.0)

    def test_reciprocity_breaking(self, caption_h):
        H = caption_h(1.0)
        forward = intensity(H, 0, 10, 0.0)
        backward = intensity(H, 10, 0, 0.0)
        assert abs(forward - backward) > 0.1 * max(forward, backward)

    def test_reciprocal_when_hermitian(self):
        H = build_hamiltonian(ModelParams(1.0, 0.6, 0.0, 5))
        for source, detector in [(0, 10), (3, 17), (10, 20)]:
            forward = intensity(H, source, detector, 0.4)
            backward = intensity(H, detector, source, 0.4)
            assert forward == pytest.approx(backward, rel=1e-9)


class TestDriveSpec:
    def test_empty_grid(self, layout):
        with pytest.raises(InputError):
            drive_spec_from_preset('interface', layout, [], KAPPA)

    def test_invalid_entries(self):
        with pytest.raises(InputError):
            make_drive_spec([], OMEGAS, KAPPA, 21)
        with pytest.raises(InputError):
            make_drive_spec([(0, 0.0)], OMEGAS, KAPPA, 21)
        with pytest.raises(InputError):
            make_drive_spec([(0, 1.0)], OMEGAS, -0.1, 21)

    def test_unit_preset_amplitudes(self, layout):
        spec = drive_spec_from_preset('both_ends', layout, OMEGAS)
        assert spec.entries == ((0, 1.0), (20, 1.0))
        assert spec.kappa == KAPPA


class TestDriveScan:
    @pytest.fixture
    def scans(self, caption_h, layout):
        H = caption_h(1.0)
        return {
            name: drive_scan(H, drive_spec_from_preset(name, layout, OMEGAS, KAPPA))
            for name in ['interface', 'first', 'both_ends', 'uniform']
        }

    def test_shape_and_sign(self, scans):
        for scan in scans.values():
            assert scan.intensities.shape == (len(OMEGAS), 21)
            assert np.all(scan.intensities >= 0)
            np.testing.assert_array_equal(scan.omegas, OMEGAS)

    def test_interface_brightest_at_zero(self, scans, layout):
        center = int(np.argmin(np.abs(OMEGAS)))
        for scan in scans.values():
            assert int(np.argmax(scan.intensities[center])) == layout.q

    @pytest.mark.parametrize('name', ['first', 'both_ends'])
    def test_edge_drive_global_peak_at_zero(self, scans, layout, name):
        peak = OMEGAS[np.argmax(scans[name].site_intensity(layout.q))]
        assert abs(peak) <= KAPPA

    @pytest.mark.parametrize('name', ['interface', 'uniform'])
    def test_zero_mode_resonance(self, scans, layout, name):
        peaks = resonance_frequencies(scans[name], layout.q)
        assert any(abs(omega) <= KAPPA for omega in peaks)

    def test_linear_in_drive_amplitude(self, caption_h):
        H = caption_h(1.0)
        grid = [-1.0, 0.0, 0.5]
        base = drive_scan(H, make_drive_spec([(0, 1.0), (10, 0.5j)], grid, KAPPA, 21))
        scaled = drive_scan(H, make_drive_spec([(0, 2.0 - 1.0j), (10, (2.0 - 1.0j) * 0.5j)], grid, KAPPA, 21))
        np.testing.assert_allclose(scaled.intensities, 5.0 * base.intensities, rtol=1e-10)

    def test_threads_match_serial(self, caption_h, layout):
        H = caption_h(1.0)
        spec = drive_spec_from_preset('first', layout, OMEGAS[::40], KAPPA)
        np.testing.assert_array_equal(drive_scan(H, spec).intensities, drive_scan(H, spec, jobs=4).intensities)

    def test_lossless_drive_rejected_for_real_spectrum(self, caption_h, layout):
        spec = drive_spec_from_preset('interface', layout, [0.5], 0.0)
        with pytest.raises(InputError):
            drive_scan(caption_h(1.0), spec)

    @pytest.mark.parametrize('t2', [1.0, 1.4])
    def test_interface_peaks_track_real_eigenvalues(self, caption_h, layout, t2):
        H = caption_h(t2)
        spectrum = eig(H)
        assert spectrum.max_abs_imag < 1e-9
        energies = spectrum.eigenvalues.real

        scan = drive_scan(H, drive_spec_from_preset('interface', layout, OMEGAS, KAPPA))
        peaks = resonance_frequencies(scan, layout.q)
        assert len(peaks) >= 5
        for omega in peaks:
            assert np.min(np.abs(energies - omega)) <= KAPPA
