use std::f64::consts::PI;

use polyscatter::config::{validate, ExperimentConfig};
use polyscatter::farfield::{backscatter_sweep, Band, SweepDataset};
use polyscatter::forward::{BornOrder, SolveConfig};
use polyscatter::grid::{ComplexField, GridSpec};
use polyscatter::inverse::{estimate_raster, strength_fourier_estimate, weight_exponent, StrengthEstimate};
use polyscatter::io::{self, FieldMeta, Stamp};
use polyscatter::{Complex64, Dim, Error};
use proptest::prelude::*;

const SMALL: &str = r#"
seed = 3

[grid]
d = 2
half_width = 1.0
n_points = 64

[model]
n = 2

[potential]
m1 = 2.0
m2 = 2.0
a1.bumps = [{ amplitude = 1.0, center = [0.0, 0.0], radius = 0.4 }]
a2.bumps = [{ amplitude = 0.5, center = [0.0, 0.0], radius = 0.3 }]

[solver]
born_order = 1

[sweep]
q = 4.0
kappa_step = 0.5
tau_count = 6
direction_count = 8

[inverse]
grid_points = 32
"#;

fn born1() -> SolveConfig {
    SolveConfig {
        born_order: BornOrder::Order(1),
        ..SolveConfig::default()
    }
}

/// Sum of Gaussian bumps with the given amplitudes, cut to the safe box.
fn bump_field(grid: GridSpec, bumps: &[(f64, f64, f64, f64)], imag: f64) -> ComplexField {
    ComplexField::from_fn(grid, |x| {
        let v: f64 = bumps
            .iter()
            .map(|&(a, cx, cy, w)| a * (-((x[0] - cx).powi(2) + (x[1] - cy).powi(2)) / (w * w)).exp())
            .sum();
        Complex64::new(v, imag * v)
    })
    .masked_to_safe_box()
}

fn bumps() -> impl Strategy<Value = Vec<(f64, f64, f64, f64)>> {
    prop::collection::vec((-2.0f64..2.0, -0.2f64..0.2, -0.2f64..0.2, 0.05f64..0.15), 1..4)
}

fn antipodal_directions() -> Vec<Vec<f64>> {
    (0..6)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / 6.0;
            vec![t.cos(), t.sin()]
        })
        .collect()
}

fn close(a: Complex64, b: Complex64, scale: f64) -> bool {
    (a - b).norm() <= 1e-10 * scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn real_potential_gives_hermitian_estimates_with_equal_strengths(b in bumps()) {
        let grid = GridSpec::new(Dim::Two, 1.0, 32).unwrap();
        let rho = bump_field(grid, &b, 0.0);
        let band = Band::new(4.0, 2.0, 0.5).unwrap();
        let ds = backscatter_sweep(&rho, 2, &antipodal_directions(), &band, &born1(), 0).unwrap();
        let est = estimate_raster(&ds, &[0.0, 0.5, 1.0, 2.0], 2.0, 4.0).unwrap();
        let scale = est.iter().map(|e| e.c_hat.norm()).fold(0.0, f64::max);
        prop_assume!(scale > 0.0);
        for e in &est {
            // with a real potential the relation and covariance estimators coincide
            prop_assert!(close(e.r_hat, e.c_hat, scale), "{:?} vs {:?}", e.r_hat, e.c_hat);
            let minus: Vec<f64> = e.x_hat.iter().map(|v| -v).collect();
            let twin = strength_fourier_estimate(&ds, &minus, e.tau, 2.0, 4.0).unwrap();
            prop_assert!(close(twin.c_hat, e.c_hat.conj(), scale));
        }
    }

    #[test]
    fn born1_sweep_is_linear_in_the_potential(
        b in bumps(),
        alpha_re in -3.0f64..3.0,
        alpha_im in -3.0f64..3.0,
        imag in -1.0f64..1.0,
    ) {
        let grid = GridSpec::new(Dim::Two, 1.0, 32).unwrap();
        let rho = bump_field(grid, &b, imag);
        let alpha = Complex64::new(alpha_re, alpha_im);
        let band = Band::new(2.0, 1.0, 0.5).unwrap();
        let dirs = antipodal_directions();
        let a = backscatter_sweep(&rho, 2, &dirs, &band, &born1(), 0).unwrap();
        let s = backscatter_sweep(&rho.scaled(alpha), 2, &dirs, &band, &born1(), 0).unwrap();
        for (fa, fs) in a.forward.iter().flatten().zip(s.forward.iter().flatten()) {
            prop_assert!((alpha * fa - fs).norm() <= 1e-12 * (alpha * fa).norm().max(1e-300));
        }
        for (ra, rs) in a.reverse.iter().flatten().zip(s.reverse.iter().flatten()) {
            prop_assert!((alpha * ra - rs).norm() <= 1e-12 * (alpha * ra).norm().max(1e-300));
        }
    }

    #[test]
    fn estimates_round_trip_through_csv(
        rows in prop::collection::vec((0.0f64..2.0 * PI, 0.0f64..20.0, any::<(f64, f64, f64, f64)>()), 1..20),
        seed in any::<u64>(),
    ) {
        let estimates: Vec<StrengthEstimate> = rows
            .iter()
            .filter(|(_, _, (a, b, c, d))| [a, b, c, d].iter().all(|v| v.is_finite()))
            .map(|&(t, tau, (a, b, c, d))| {
                let x_hat = vec![t.cos(), t.sin()];
                StrengthEstimate {
                    xi: x_hat.iter().map(|v| 2.0 * tau * v).collect(),
                    x_hat,
                    tau,
                    c_hat: Complex64::new(a, b),
                    r_hat: Complex64::new(c, d),
                    q: 64.0,
                    n_kappa: 257,
                }
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("est.csv");
        let stamp = Stamp { config_hash: "ab".repeat(32), seed };
        io::write_estimates(&path, &estimates, &stamp).unwrap();
        let (back, s) = io::read_estimates(&path).unwrap();
        prop_assert_eq!(s, stamp);
        prop_assert_eq!(back.len(), estimates.len());
        for (x, y) in back.iter().zip(&estimates) {
            prop_assert_eq!(&x.x_hat, &y.x_hat);
            prop_assert_eq!(x.tau, y.tau);
            prop_assert_eq!(x.c_hat, y.c_hat);
            prop_assert_eq!(x.r_hat, y.r_hat);
            prop_assert_eq!(x.n_kappa, y.n_kappa);
        }
    }

    #[test]
    fn field_round_trip_keeps_single_precision(values in prop::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 256)) {
        let grid = GridSpec::new(Dim::Two, 1.5, 16).unwrap();
        let field = ComplexField::new(grid, values.iter().map(|&(a, b)| Complex64::new(a, b)).collect()).unwrap();
        let stamp = Stamp { config_hash: "cd".repeat(32), seed: 11 };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.psfd");
        io::write_field(&path, &field, &FieldMeta::new("test", &grid, &stamp)).unwrap();
        let (back, meta) = io::read_field(&path).unwrap();
        prop_assert_eq!(meta.stamp(), stamp);
        prop_assert_eq!(back.spec(), field.spec());
        for (a, b) in back.values().iter().zip(field.values()) {
            prop_assert!((a.re - b.re).abs() <= 1e-7 * b.re.abs().max(1e-30));
            prop_assert!((a.im - b.im).abs() <= 1e-7 * b.im.abs().max(1e-30));
        }
    }

    #[test]
    fn config_hash_survives_toml_round_trip_and_tracks_the_seed(seed in 0..=i64::MAX as u64, other in 0..=i64::MAX as u64) {
        let mut cfg = ExperimentConfig::from_toml_str(SMALL).unwrap();
        cfg.seed = seed;
        let again = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        prop_assert_eq!(cfg.hash().unwrap(), again.hash().unwrap());
        prop_assume!(other != seed);
        let mut moved = cfg.clone();
        moved.seed = other;
        prop_assert_ne!(cfg.hash().unwrap(), moved.hash().unwrap());
    }

    #[test]
    fn seeds_beyond_signed_range_are_rejected(seed in i64::MAX as u64 + 1..=u64::MAX) {
        let mut cfg = ExperimentConfig::from_toml_str(SMALL).unwrap();
        cfg.seed = seed;
        prop_assert!(matches!(validate(&cfg), Err(Error::Validation(_))));
    }

    #[test]
    fn off_lattice_shifts_are_rejected(k in 1u32..8, frac in 0.05f64..0.95) {
        let mut cfg = ExperimentConfig::from_toml_str(SMALL).unwrap();
        cfg.sweep.tau_count = None;
        cfg.sweep.taus = Some(vec![0.5 * (k as f64 + frac)]);
        prop_assert!(matches!(validate(&cfg), Err(Error::Validation(_))));
        cfg.sweep.taus = Some(vec![0.5 * k as f64]);
        prop_assert!(validate(&cfg).is_ok());
    }
}

/// Data with `|u^∞(κ)|² κ^p` constant makes the correctly weighted estimate
/// independent of Q, while a misweighted exponent shows a power-law trend.
#[test]
fn weight_exponent_is_detected_by_q_trend() {
    let (m, n, d) = (2.0, 2usize, 2usize);
    let p = weight_exponent(m, n, d);
    let grid = GridSpec::new(Dim::Two, 1.0, 16).unwrap();
    let step = 0.25;
    let band = Band::new(8.0, 0.0, step).unwrap();
    let kappas: Vec<f64> = (0..=(2.0 * 32.0 / step) as usize).map(|k| 8.0 + k as f64 * step).collect();
    let series: Vec<Complex64> = kappas.iter().map(|&k| Complex64::from_polar(k.powf(-p / 2.0), 0.3 * k)).collect();
    let ds = SweepDataset {
        grid,
        n,
        band,
        directions: vec![vec![1.0, 0.0]],
        kappas: kappas.clone(),
        forward: vec![series.clone()],
        reverse: vec![series],
        born_order: BornOrder::Order(1),
        seed: 0,
    };
    let trend = |m_used: f64| {
        let at = |q: f64| strength_fourier_estimate(&ds, &[1.0, 0.0], 0.0, m_used, q).unwrap().c_hat.re;
        (at(32.0) / at(8.0)).ln() / 4f64.ln()
    };
    let right = trend(m);
    assert!(right.abs() < 1e-3, "correct exponent drifts with slope {right}");
    for dm in [-0.5, 0.5] {
        let slope = trend(m + dm);
        assert!((slope - dm).abs() < 0.05, "m{dm:+}: slope {slope}");
    }
}
