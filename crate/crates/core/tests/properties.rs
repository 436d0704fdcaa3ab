//! Property tests for the invariants of each module. Random objects come
//! from a proptest-drawn seed fed to the crate's own generators; every
//! runner uses a fixed proptest seed so statistical properties replay.

use linlab_core::config::{parse_config, ExperimentConfig, MeasureEntry, MeasureSource, OutputSpec, ProbeConfig};
use linlab_core::gauss::{
    build_model, matrix_coefficient_analytic, spectral_measure_of_functional, symmetry_check, CoefficientLaw,
    EigenField, VectorKind,
};
use linlab_core::hits::{
    difference_set, lower_density, max_gap, upper_banach_density, upper_density, WindowedSet,
};
use linlab_core::kalish::{apply_t, GridOperator};
use linlab_core::lab::{orbit, return_set_identity_check, BallSpec, SystemSpec};
use linlab_core::measure::{
    dirichlet_probe, mild_mixing_probe, rajchman_probe, random_atomic, random_grid, random_mixed,
};
use linlab_core::rng::rng_for;
use linlab_core::{CircleFunction, CircleMeasure, Complex64, KalishMatrix, TAU};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};
use rand::Rng;

fn cfg(cases: u32) -> Config {
    Config {
        cases,
        rng_seed: RngSeed::Fixed(0x5eed),
        failure_persistence: None,
        ..Config::default()
    }
}

fn random_function(grid: usize, seed: u64) -> CircleFunction {
    let mut rng = rng_for(seed, "prop-function");
    CircleFunction::new(
        (0..grid)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect(),
    )
    .unwrap()
}

fn random_set(window: usize, p: f64, seed: u64) -> WindowedSet {
    let mut rng = rng_for(seed, "prop-set");
    let flags: Vec<bool> = (0..window).map(|_| rng.random::<f64>() < p).collect();
    WindowedSet::from_indicator(&flags).unwrap()
}

proptest! {
    #![proptest_config(cfg(48))]

    #[test]
    fn convolution_conserves_mass(seed in any::<u64>(), ma in 0.1f64..3.0, mb in 0.1f64..3.0) {
        let mut rng = rng_for(seed, "mass");
        let a = random_mixed(512, 3, 0.4, &mut rng).unwrap().scaled(ma).unwrap();
        let b = random_mixed(512, 2, 0.6, &mut rng).unwrap().scaled(mb).unwrap();
        let c = a.convolve(&b).unwrap();
        prop_assert!((c.total_mass() - ma * mb).abs() <= 1e-10);
    }

    #[test]
    fn atomic_convolution_is_multiplicative(seed in any::<u64>(), k1 in 1usize..6, k2 in 1usize..6) {
        let mut rng = rng_for(seed, "atomic");
        let a = random_atomic(1024, k1, &mut rng).unwrap();
        let b = random_atomic(1024, k2, &mut rng).unwrap();
        let c = a.convolve(&b).unwrap();
        for n in -64..=64 {
            let d = c.fourier_coefficient(n).unwrap() - a.fourier_coefficient(n).unwrap() * b.fourier_coefficient(n).unwrap();
            prop_assert!(d.norm() <= 1e-8);
        }
    }

    #[test]
    fn symmetrize_and_reflect(seed in any::<u64>()) {
        let mut rng = rng_for(seed, "sym");
        let m = random_mixed(256, 3, 0.5, &mut rng).unwrap();
        prop_assert!(m.symmetrize().is_symmetric(1e-12));
        let back = m.reflect().reflect();
        prop_assert_eq!(back.atoms().len(), m.atoms().len());
        for (a, b) in back.atoms().iter().zip(m.atoms()) {
            prop_assert!((a.angle - b.angle).abs() <= 1e-12 && a.mass == b.mass);
        }
        prop_assert!(back.max_abs_diff(&m).unwrap() <= 1e-12);
    }

    #[test]
    fn exponential_identity(seed in any::<u64>(), atoms in 1usize..5) {
        let mut rng = rng_for(seed, "exp");
        let rho = random_atomic(1024, atoms, &mut rng).unwrap();
        let e = rho.exp_measure(1e-12).unwrap();
        for n in -32..=32 {
            let d = e.fourier_coefficient(n).unwrap() - rho.fourier_coefficient(n).unwrap().exp();
            prop_assert!(d.norm() <= 1e-6);
        }
    }

    #[test]
    fn rajchman_excludes_dirichlet(seed in any::<u64>(), share in 0.0f64..1.0, eps in 0.01f64..0.3) {
        let mut rng = rng_for(seed, "probes");
        let rho = random_mixed(1024, 2, share, &mut rng).unwrap();
        let r = rajchman_probe(&rho, 64, eps).unwrap();
        let d = dirichlet_probe(&rho, 64, eps).unwrap();
        prop_assert!(!(r.pass && d.pass));
    }

    #[test]
    fn atoms_fail_mild_mixing(seed in any::<u64>(), mass in 0.01f64..0.5, angle in 0.0f64..TAU) {
        let mut rng = rng_for(seed, "mild");
        let rho = random_grid(1024, &mut rng).unwrap().scaled(1.0 - mass).unwrap()
            .add(&CircleMeasure::dirac(1024, angle, mass).unwrap()).unwrap();
        prop_assert!(!mild_mixing_probe(&rho, 8, 64, 0.05, seed).unwrap().pass);
    }

    #[test]
    fn kalish_operator_bound_and_linearity(seed in any::<u64>(), exp in 3u32..10, c in -2.0f64..2.0) {
        let grid = 1usize << exp;
        let f = random_function(grid, seed);
        let g = random_function(grid, seed ^ 1);
        prop_assert!(apply_t(&f).norm() <= (1.0 + TAU) * f.norm());
        let lhs = apply_t(&f.add(&g.scale(Complex64::new(c, 0.5))).unwrap());
        let rhs = apply_t(&f).add(&apply_t(&g).scale(Complex64::new(c, 0.5))).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-12);
    }

    #[test]
    fn matrix_and_operator_agree(seed in any::<u64>(), grid in 8usize..200) {
        let f = random_function(grid, seed);
        let dense = KalishMatrix::new(grid).unwrap().apply(&f).unwrap();
        prop_assert!(dense.sub(&apply_t(&f)).unwrap().max_abs() <= 1e-12);
    }

    #[test]
    fn difference_sets(seed in any::<u64>(), window in 1usize..400, p in 0.01f64..0.9) {
        let s = random_set(window, p, seed);
        prop_assume!(!s.is_empty());
        let d = difference_set(&s).unwrap();
        prop_assert!(d.contains(0));
        // dropping elements can only shrink the difference set
        let mut rng = rng_for(seed, "thin");
        let keep: Vec<usize> = s.elements().iter().copied().filter(|_| rng.random::<bool>()).collect();
        if !keep.is_empty() {
            let sub = WindowedSet::new(window, keep).unwrap();
            let ds = difference_set(&sub).unwrap();
            prop_assert!(ds.elements().iter().all(|e| d.contains(*e)));
        }
    }

    #[test]
    fn density_chain(seed in any::<u64>(), window in 32usize..2000, p in 0.0f64..1.0) {
        let s = random_set(window, p, seed);
        let (l, u) = (lower_density(&s), upper_density(&s));
        let ubd = upper_banach_density(&s, 16).unwrap();
        prop_assert!(l <= u && u <= ubd);
    }

    #[test]
    fn max_gap_covers_window(seed in any::<u64>(), window in 1usize..300, p in 0.0f64..0.7) {
        let s = random_set(window, p, seed);
        prop_assume!(!s.is_empty());
        let g = max_gap(&s);
        {
            for start in 0..=window - g {
                prop_assert!((start..start + g).any(|t| s.contains(t)));
            }
        }
    }

    #[test]
    fn set_formats_round_trip(seed in any::<u64>(), window in 0usize..300, p in 0.0f64..1.0) {
        let s = random_set(window, p, seed);
        prop_assert_eq!(WindowedSet::from_text(&s.to_text()).unwrap(), s.clone());
        prop_assert_eq!(WindowedSet::from_json(&s.to_json().unwrap()).unwrap(), s);
    }

    #[test]
    fn rotations_are_isometries(angle in 0.0f64..TAU, steps in 1usize..2000) {
        let spec = SystemSpec::TorusRotation { angles: vec![angle, 1.0] };
        let x0 = vec![Complex64::new(0.6, 0.8), Complex64::new(1.0, 0.0)];
        let t = orbit(&spec, &x0, steps).unwrap();
        for x in t.states() {
            prop_assert!((spec.norm(x) - spec.norm(&x0)).abs() <= 1e-12);
        }
    }

    #[test]
    fn zero_is_fixed(lambda in 0.1f64..3.0, dim in 1usize..16) {
        for spec in [SystemSpec::ScalarMultipleShift { lambda, dim }, SystemSpec::Kalish { grid: 8 + dim }] {
            let n = if spec.is_shift() { dim + 50 } else { 8 + dim };
            let t = orbit(&spec, &vec![Complex64::new(0.0, 0.0); n], 50).unwrap();
            prop_assert!(t.states().iter().all(|x| x.iter().all(|v| *v == Complex64::new(0.0, 0.0))));
        }
    }

    #[test]
    fn return_set_witnesses_replay(angle in 0.1f64..6.0, arc in 0.3f64..3.0, centre in 0.0f64..TAU) {
        let spec = SystemSpec::TorusRotation { angles: vec![angle] };
        let t = orbit(&spec, &[Complex64::new(1.0, 0.0)], 3000).unwrap();
        let ball = BallSpec::arc(centre, arc).unwrap();
        if let Ok(r) = return_set_identity_check(&t, &ball) {
            prop_assert!(r.pass);
            for (d, [l, k]) in r.certified.elements().iter().zip(&r.witnesses) {
                prop_assert_eq!(k - l, *d);
                prop_assert!(ball.contains(&spec, &t.states()[*l]) && ball.contains(&spec, &t.states()[*k]));
            }
        }
    }

    #[test]
    fn config_round_trip(seed in 0u64..1_000_000, bins in 8usize..4096, window in 0i64..500, tol in 1e-12f64..1.0) {
        let c = ExperimentConfig {
            schema: "experiment/1".into(),
            seed,
            output: OutputSpec::default(),
            measures: vec![MeasureEntry { name: "m".into(), source: MeasureSource::Uniform { bins } }],
            systems: vec![],
            probes: vec![ProbeConfig::Exp { measure: "m".into(), tail_tol: tol, window, tolerance: tol }],
        };
        let text = c.to_toml().unwrap();
        let back = parse_config(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.to_toml().unwrap(), text);
    }
}

proptest! {
    // Monte-Carlo properties: fewer cases, each a full model build
    #![proptest_config(cfg(12))]

    #[test]
    fn gaussian_model_properties(seed in any::<u64>(), nodes in 2usize..10) {
        let mut rng = rng_for(seed, "model");
        let sigma = random_grid(256, &mut rng).unwrap();
        let model = build_model(EigenField::from_measure(&sigma, nodes, 256, VectorKind::Corrected, 1e-6).unwrap()).unwrap();
        // kernel witness
        prop_assert!(model.min_singular_value() > 0.0);
        let f = random_function(256, seed);
        // spectral consistency and node support
        let mu = spectral_measure_of_functional(&model, &f).unwrap();
        for n in -8..=8 {
            let a = matrix_coefficient_analytic(&model, &f, n).unwrap();
            prop_assert!((mu.fourier_coefficient(n).unwrap() - a).norm() <= 1e-10);
        }
        let node_bins: Vec<usize> = model.field().nodes().iter().map(|n| sigma.bin_of(n.angle)).collect();
        for a in mu.atoms() {
            prop_assert!(node_bins.contains(&sigma.bin_of(a.angle)));
        }
        // the pushforward is a symmetric complex Gaussian
        let r = symmetry_check(&model, &f, 4000, seed, CoefficientLaw::ComplexSymmetric).unwrap();
        prop_assert!(r.pass, "{:?}", r);
    }
}
