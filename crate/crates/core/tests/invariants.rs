use std::f64::consts::PI;

use lzx_core::ame::{ame_rhs, evolve_ame};
use lzx_core::coherent::p_lz;
use lzx_core::config::{ExperimentConfig, GridSection, Method, SweepSection};
use lzx_core::device::{BiasProtocol, OperatingPoint, SweepSchedule};
use lzx_core::evolution::EvolveOptions;
use lzx_core::gapfit::{fit_exponential_adaptive, DecaySeries};
use lzx_core::harness::{read_csv, write_csv, RunRecord};
use lzx_core::linalg::{Hermitian2x2, Mat2};
use lzx_core::noise::{psd_ohmic, psd_one_over_f, MrtParams, NoiseModel};
use lzx_core::ptre::g_low;
use lzx_core::units::thermal_energy;
use num_complex::Complex64;
use proptest::prelude::*;

fn density(p: f64, re: f64, im: f64) -> Mat2 {
    let c = Complex64::new(re, im);
    let bound = (p * (1.0 - p)).sqrt();
    let c = if c.norm() > bound { c * (bound / c.norm()) } else { c };
    Mat2::new(Complex64::new(p, 0.0), c, c.conj(), Complex64::new(1.0 - p, 0.0))
}

proptest! {
    #[test]
    fn lz_probability_is_monotone_in_velocity(
        delta in 1e-3f64..1.0,
        v in 1e-4f64..100.0,
        factor in 1.001f64..10.0,
    ) {
        let p = p_lz(delta, v).unwrap();
        let q = p_lz(delta, v * factor).unwrap();
        prop_assert!(p > 0.0 && p <= 1.0);
        prop_assert!(q >= p);
        let tau = 2.0 * PI * delta * delta / v;
        prop_assert!((p - (-PI * tau / 2.0).exp()).abs() < 1e-14);
    }

    #[test]
    fn spectra_obey_detailed_balance(
        omega in 1e-3f64..60.0,
        temperature in 0.005f64..0.1,
    ) {
        let m = NoiseModel { temperature, ..NoiseModel::nominal() };
        let bw = omega / (2.0 * PI * thermal_energy(temperature).unwrap());
        let one_f = (psd_one_over_f(&m, -omega).unwrap() / psd_one_over_f(&m, omega).unwrap()).ln();
        let ohmic = (psd_ohmic(&m, -omega) / psd_ohmic(&m, omega)).ln();
        prop_assert!((one_f + bw).abs() < 1e-9 * bw.max(1.0));
        prop_assert!((ohmic + bw).abs() < 1e-9 * bw.max(1.0));
    }

    #[test]
    fn fdt_gaussian_obeys_detailed_balance(
        w in 0.01f64..0.1,
        temperature in 0.01f64..0.05,
        omega in 0.01f64..1.5,
    ) {
        let mrt = MrtParams::from_fdt(w, temperature).unwrap();
        let bw = omega / (2.0 * PI * thermal_energy(temperature).unwrap());
        let ratio = (g_low(&mrt, omega) / g_low(&mrt, -omega)).ln();
        prop_assert!((ratio - bw).abs() < 1e-8 * bw.max(1.0));
    }

    #[test]
    fn qubit_levels_are_half_the_gap(epsilon in -20.0f64..20.0, delta in 0.0f64..5.0) {
        let [lo, hi] = Hermitian2x2::qubit(epsilon, delta).eigenvalues();
        let gap = epsilon.hypot(delta);
        prop_assert!((hi - gap / 2.0).abs() < 1e-12 * gap.max(1.0));
        prop_assert!((lo + gap / 2.0).abs() < 1e-12 * gap.max(1.0));
    }

    #[test]
    fn ame_generator_preserves_trace_and_hermiticity(
        delta in 0.01f64..0.2,
        i_p in 0.08f64..0.15,
        frac in 0.0f64..1.0,
        p in 0.0f64..1.0,
        re in -0.5f64..0.5,
        im in -0.5f64..0.5,
    ) {
        let point = OperatingPoint::new(0.49, delta, i_p).unwrap();
        let s = SweepSchedule::symmetric(point, 0.01, 50.0).unwrap();
        let rho = density(p, re, im);
        let d = ame_rhs(&rho, frac * s.duration(), &s, &NoiseModel::nominal());
        prop_assert!(d.trace().norm() < 1e-9 * d.max_abs().max(1.0));
        prop_assert!(d.hermiticity_error() < 1e-9 * d.max_abs().max(1.0));
    }

    #[test]
    fn config_survives_toml_round_trip(
        lo in 1.0f64..50.0,
        ratio in 1.5f64..1000.0,
        count in 1usize..40,
        span in 5e-3f64..0.02,
        pick in proptest::sample::subsequence(Method::ALL.to_vec(), 1..=4),
    ) {
        let mut cfg = ExperimentConfig::from_toml_str("methods = [\"coherent\"]").unwrap();
        cfg.methods = pick;
        cfg.grid = GridSection { t_lz_min_ns: lo, t_lz_max_ns: lo * ratio, count };
        cfg.sweep = SweepSection { span: Some(span), ..SweepSection::default() };
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        prop_assert_eq!(&back, &cfg);
        let exp = back.resolve().unwrap();
        prop_assert_eq!(exp.t_lz.len(), count);
        prop_assert!((exp.phi_final - exp.phi_init - span).abs() < 1e-15);
    }

    #[test]
    fn records_survive_csv_round_trip(
        rows in proptest::collection::vec(
            (0usize..4, 0.4f64..0.6, 1e-3f64..1.0, 0.05f64..0.2, 1.0f64..3e4, 0.0f64..1.0, 0usize..1_000_000),
            1..20,
        )
    ) {
        let tags = ["coherent", "ame", "ptre", "ptre_4w"];
        let records: Vec<RunRecord> = rows
            .iter()
            .map(|&(m, phi_x, delta, i_p, t_lz, p_g, steps)| RunRecord {
                method: tags[m].to_string(),
                phi_x,
                delta,
                i_p,
                t_lz,
                tau: delta * t_lz,
                p_g,
                p_e: 1.0 - p_g,
                wall_time: t_lz * 1e-6,
                solver_steps: steps,
            })
            .collect();
        let mut buf = Vec::new();
        write_csv(&records, &mut buf).unwrap();
        prop_assert_eq!(read_csv(buf.as_slice()).unwrap(), records);
    }

    #[test]
    fn fitted_rate_scales_inversely_with_time(
        kappa in 0.01f64..0.5,
        wiggle in 0.0f64..0.02,
        c in 0.5f64..2.0,
    ) {
        let times: Vec<f64> = (0..20).map(|k| 0.2 + 0.7 * k as f64).collect();
        let p = |t: f64| ((-kappa * t).exp() * (1.0 + wiggle * (3.0 * t).sin())).clamp(0.0, 1.0);
        let base = DecaySeries::from_fn(&times, p).unwrap();
        let scaled = DecaySeries::new(base.points().map(|(t, v)| (c * t, v)).collect()).unwrap();
        let a = fit_exponential_adaptive(&base).unwrap();
        let b = fit_exponential_adaptive(&scaled).unwrap();
        prop_assert_eq!(a.window_len, b.window_len);
        prop_assert!((b.kappa * c - a.kappa).abs() < 1e-10 * a.kappa);
        prop_assert!((b.kappa_stderr * c - a.kappa_stderr).abs() < 1e-8 * a.kappa_stderr.max(1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn short_ame_sweeps_keep_a_valid_density_matrix(
        delta in 0.02f64..0.2,
        i_p in 0.1f64..0.13,
        t_lz in 1.0f64..20.0,
    ) {
        let point = OperatingPoint::new(0.49, delta, i_p).unwrap();
        let s = SweepSchedule::symmetric(point, 0.01, t_lz).unwrap();
        let o = evolve_ame(&s, &NoiseModel::nominal(), &EvolveOptions::default()).unwrap();
        prop_assert!(o.max_trace_error < 1e-9);
        prop_assert!((o.p_g + o.p_e - 1.0).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&o.p_g));
        prop_assert!(o.rho.hermitian_eigenvalues()[0] > -1e-9);
    }
}
