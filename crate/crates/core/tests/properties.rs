use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use qpn_core::bessel::bessel_j;
use qpn_core::imaging::{
    count_pixel, count_region, fit_thomas_fermi, forward_transmission, render_image, CloudKind, CloudProfile,
    CountingRegion, FrameSize, ImagingParams,
};
use qpn_core::noise::{allan_deviation, relative_intensity};
use qpn_core::ramsey::{evolve_square_pulse, free_evolve, TwoLevelState};
use qpn_core::sideband::{
    beat_curve, dc_intensity, default_truncation, harmonic_amplitude, phase_mod_spectrum, sagnac_output_spectrum,
    ModulationConfig, SagnacConfig,
};

fn modulation(phi: f64) -> ModulationConfig {
    ModulationConfig::new(phi, 2.0 * PI * 3.417e9).unwrap()
}

fn sagnac(phi: f64, a: f64, dphi0: f64) -> SagnacConfig {
    SagnacConfig {
        modulation: modulation(phi),
        amplitude_ratio: a,
        residual_phase: dphi0,
    }
}

proptest! {
    #[test]
    fn pure_modulation_conserves_power(phi in 0.0..10.0f64) {
        let spec = phase_mod_spectrum(&modulation(phi), default_truncation(phi)).unwrap();
        prop_assert!((dc_intensity(&spec) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn intensity_is_hermitian(phi in 0.0..10.0f64, a in 0.0..2.0f64, dphi0 in -0.5..0.5f64, m in 1i64..5) {
        let spec = sagnac_output_spectrum(&sagnac(phi, a, dphi0), default_truncation(phi)).unwrap();
        let plus = harmonic_amplitude(&spec, m).unwrap();
        let minus = harmonic_amplitude(&spec, -m).unwrap();
        prop_assert!((plus - minus.conj()).norm() < 1e-14);
    }

    #[test]
    fn balanced_loop_selection_rule(phi in 0.0..10.0f64, a in 0.0..2.0f64, m in 1i64..7) {
        // The shifted comb needs room for |m| beyond the spectral support.
        let spec = sagnac_output_spectrum(&sagnac(phi, a, 0.0), default_truncation(phi) + 8).unwrap();
        let c = harmonic_amplitude(&spec, m).unwrap().norm();
        let expected = if m % 2 == 1 { 0.0 } else { 2.0 * a * bessel_j(m, 0.5 * phi).abs() };
        prop_assert!((c - expected).abs() < 1e-10, "m = {}: {} vs {}", m, c, expected);
    }

    #[test]
    fn doubling_truncation_is_stable(phi in 0.0..10.0f64, dphi0 in -0.5..0.5f64, m in 0i64..5) {
        let cfg = sagnac(phi, 1.0, dphi0);
        let t = default_truncation(phi);
        let a = harmonic_amplitude(&sagnac_output_spectrum(&cfg, t).unwrap(), m).unwrap();
        let b = harmonic_amplitude(&sagnac_output_spectrum(&cfg, 2 * t).unwrap(), m).unwrap();
        prop_assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn beat_curve_ignores_modulation_frequency(f1 in 1e8..1e10f64, f2 in 1e8..1e10f64) {
        let phis: Vec<f64> = (0..20).map(|i| 0.3 * i as f64).collect();
        let cfg = |f: f64| SagnacConfig::balanced(ModulationConfig::new(0.0, 2.0 * PI * f).unwrap());
        let a = beat_curve(&cfg(f1), &phis, &[2]).unwrap();
        let b = beat_curve(&cfg(f2), &phis, &[2]).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            prop_assert_eq!(x.dc_intensity.to_bits(), y.dc_intensity.to_bits());
            prop_assert_eq!(x.beat(2).unwrap().to_bits(), y.beat(2).unwrap().to_bits());
        }
    }

    #[test]
    fn pixel_counting_inverts_exactly(atoms in 0.0..1e4f64, n0 in 1e3..6e4f64) {
        let p = ImagingParams::default();
        let n = forward_transmission(atoms, n0, &p).unwrap();
        let back = count_pixel(n, n0, &p).unwrap().atoms;
        prop_assert!((back - atoms).abs() < 1e-9, "{} vs {}", back, atoms);
    }

    #[test]
    fn evolution_preserves_norm(
        rabi in 0.0..1e5f64,
        phase in -PI..PI,
        detuning in -1e5..1e5f64,
        duration in 0.0..1e-3f64,
    ) {
        let s = TwoLevelState::new(Complex64::new(0.6, 0.1), Complex64::new(-0.2, 0.7)).unwrap();
        let s = evolve_square_pulse(s, Complex64::from_polar(rabi, phase), detuning, duration);
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        let s = free_evolve(s, detuning, duration);
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn allan_of_normalized_series_ignores_scale(seed in 0u64..1000, scale in 1e-3..1e3f64) {
        let series: Vec<f64> = (0..512)
            .map(|i| 1.0 + 0.01 * (((i as u64 * 2654435761 + seed) % 1000) as f64 / 1000.0 - 0.5))
            .collect();
        let scaled: Vec<f64> = series.iter().map(|v| v * scale).collect();
        let taus = [1.0, 2.0, 4.0, 8.0, 16.0];
        let a = allan_deviation(&relative_intensity(&series).unwrap(), 1.0, &taus).unwrap();
        let b = allan_deviation(&relative_intensity(&scaled).unwrap(), 1.0, &taus).unwrap();
        for (x, y) in a.adev.iter().zip(&b.adev) {
            prop_assert!((x - y).abs() <= 1e-12 * x.max(1e-300), "{} vs {}", x, y);
        }
    }
}

fn tf_cloud(center_px: (f64, f64), radius_px: f64, atoms: f64) -> CloudProfile {
    let px = ImagingParams::default().object_pixel();
    CloudProfile {
        kind: CloudKind::ThomasFermi,
        center: (center_px.0 * px, center_px.1 * px),
        radii: (radius_px * px, radius_px * px),
        atom_number: atoms,
    }
}

const FRAME: FrameSize = FrameSize { width: 64, height: 64 };

fn search_box(center: (f64, f64)) -> CountingRegion {
    CountingRegion {
        center,
        half_width: 22.0,
        half_height: 22.0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fit_is_translation_equivariant(
        cx in 26.0..30.0f64,
        cy in 26.0..30.0f64,
        r in 10.0..14.0f64,
        kx in -3i32..=3,
        ky in -3i32..=3,
    ) {
        let p = ImagingParams::default();
        let fit_at = |dx: f64, dy: f64| {
            let img = render_image(&[tf_cloud((cx + dx, cy + dy), r, 8e3)], FRAME, &p, 2e4, None).unwrap();
            fit_thomas_fermi(&img, &search_box((32.0 + dx, 32.0 + dy))).unwrap()
        };
        let base = fit_at(0.0, 0.0);
        let moved = fit_at(kx as f64, ky as f64);
        prop_assert!((moved.center.0 - base.center.0 - kx as f64).abs() < 1e-6);
        prop_assert!((moved.center.1 - base.center.1 - ky as f64).abs() < 1e-6);
        prop_assert!((moved.radius.0 - base.radius.0).abs() < 1e-6);
    }

    #[test]
    fn noise_free_counts_scale_linearly(atoms in 1e3..2e4f64, r in 10.0..14.0f64) {
        let p = ImagingParams::default();
        let count = |n: f64| {
            let img = render_image(&[tf_cloud((32.0, 32.0), r, n)], FRAME, &p, 2e4, None).unwrap();
            let fit = fit_thomas_fermi(&img, &search_box((32.0, 32.0))).unwrap();
            count_region(&img, &fit.region).unwrap().atoms
        };
        let ratio = count(2.0 * atoms) / count(atoms);
        prop_assert!((ratio - 2.0).abs() < 2e-3, "{}", ratio);
    }
}
