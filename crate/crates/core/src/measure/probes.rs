//! Finite-window Fourier probes for mixing properties of spectral measures.
//!
//! Every probe looks only at `|ρ̂(n)|` for `n` in the upper half
//! `[⌈n_max/2⌉, n_max]` of a finite window, so a verdict is evidence at that
//! window and never a statement about the limit `|n| → ∞`. Reports carry the
//! window they used.

use rand::Rng;
use serde::Serialize;

use super::CircleMeasure;
use crate::error::{LabError, Result};
use crate::rng::rng_for;

/// Number of coarse cells the mild-mixing family builds bin unions from.
pub const MILD_MIXING_CELLS: usize = 16;

fn upper_window(n_max: i64) -> Result<(i64, i64)> {
    if n_max < 1 {
        return Err(LabError::InvalidArgument(format!(
            "window n_max = {n_max} must be >= 1"
        )));
    }
    Ok(((n_max + 1) / 2, n_max))
}

fn check_band(rho: &CircleMeasure, n_max: i64) -> Result<()> {
    if rho.has_density() && n_max > rho.band_limit() {
        return Err(LabError::OutOfBand {
            n: n_max,
            limit: rho.band_limit(),
        });
    }
    Ok(())
}

/// `(argmax n, max |ρ̂(n)|)` over the window; ties go to the smallest `n`.
fn window_max(rho: &CircleMeasure, lo: i64, hi: i64) -> Result<(i64, f64)> {
    let mut best = (lo, -1.0);
    for n in lo..=hi {
        let v = rho.fourier_coefficient(n)?.norm();
        if v > best.1 + 1e-12 {
            best = (n, v);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Serialize)]
pub struct RajchmanReport {
    pub window: (i64, i64),
    pub tail_sup: f64,
    pub argmax: i64,
    pub epsilon: f64,
    pub pass: bool,
}

/// Passes iff `max |ρ̂(n)| < ε` over the upper half-window.
pub fn rajchman_probe(rho: &CircleMeasure, n_max: i64, epsilon: f64) -> Result<RajchmanReport> {
    rho.require_probability()?;
    check_band(rho, n_max)?;
    let (lo, hi) = upper_window(n_max)?;
    let (argmax, tail_sup) = window_max(rho, lo, hi)?;
    Ok(RajchmanReport {
        window: (lo, hi),
        tail_sup,
        argmax,
        epsilon,
        pass: tail_sup < epsilon,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DirichletReport {
    pub window: (i64, i64),
    pub best_n: i64,
    pub best_value: f64,
    pub epsilon: f64,
    pub pass: bool,
}

/// Passes iff some `n` in the upper half-window has `|ρ̂(n)| > 1 - ε`.
pub fn dirichlet_probe(rho: &CircleMeasure, n_max: i64, epsilon: f64) -> Result<DirichletReport> {
    rho.require_probability()?;
    check_band(rho, n_max)?;
    let (lo, hi) = upper_window(n_max)?;
    let (best_n, best_value) = window_max(rho, lo, hi)?;
    Ok(DirichletReport {
        window: (lo, hi),
        best_n,
        best_value,
        epsilon,
        pass: best_value > 1.0 - epsilon,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyMember {
    Atom { angle: f64 },
    CellUnion { cells: Vec<usize>, cell_bins: usize },
}

#[derive(Debug, Clone, Serialize)]
pub struct MildMixingReport {
    pub window: (i64, i64),
    pub worst_limsup: f64,
    pub delta: f64,
    pub pass: bool,
    pub witness: FamilyMember,
    pub members_evaluated: usize,
    pub seed: u64,
}

/// One-sided mild-mixing probe.
///
/// The test family is every atom of `ρ` (restricting to an atom gives
/// `θ = δ_λ`) plus `family_size` random unions of the
/// [`MILD_MIXING_CELLS`] coarse cells. For each member `g` the normalized
/// restriction `θ = gρ/‖gρ‖` is formed and `limsup |θ̂(n)|` is estimated as
/// the maximum over the upper half-window. A fail is evidence against mild
/// mixing at this window; a pass only means "compatible".
pub fn mild_mixing_probe(
    rho: &CircleMeasure,
    family_size: usize,
    n_max: i64,
    delta: f64,
    seed: u64,
) -> Result<MildMixingReport> {
    rho.require_probability()?;
    check_band(rho, n_max)?;
    if family_size == 0 && rho.atoms().is_empty() {
        return Err(LabError::InvalidArgument("mild-mixing family is empty".into()));
    }
    let (lo, hi) = upper_window(n_max)?;

    let mut members: Vec<(FamilyMember, CircleMeasure)> = Vec::new();
    for a in rho.atoms() {
        members.push((
            FamilyMember::Atom { angle: a.angle },
            CircleMeasure::dirac(rho.bins(), a.angle, 1.0)?,
        ));
    }
    let bins = rho.bins();
    let cell_bins = bins / MILD_MIXING_CELLS;
    let mut rng = rng_for(seed, "mild-mixing-family");
    for _ in 0..family_size {
        let cells: Vec<usize> = loop {
            let pick: Vec<usize> = (0..MILD_MIXING_CELLS)
                .filter(|_| rng.random::<bool>())
                .collect();
            if !pick.is_empty() {
                break pick;
            }
        };
        let mut keep = vec![false; bins];
        for c in &cells {
            for k in keep.iter_mut().skip(c * cell_bins).take(cell_bins) {
                *k = true;
            }
        }
        let part = rho.restrict_to_bins(&keep)?;
        let mass = part.total_mass();
        if mass <= 1e-15 {
            continue;
        }
        members.push((
            FamilyMember::CellUnion { cells, cell_bins },
            part.scaled(1.0 / mass)?,
        ));
    }
    if members.is_empty() {
        return Err(LabError::InvalidArgument(
            "every mild-mixing family member has zero mass".into(),
        ));
    }

    let mut worst: Option<(f64, FamilyMember)> = None;
    let evaluated = members.len();
    for (member, theta) in members {
        let (_, v) = window_max(&theta, lo, hi)?;
        if worst.as_ref().is_none_or(|(w, _)| v > *w) {
            worst = Some((v, member));
        }
    }
    let (worst_limsup, witness) = worst.expect("nonempty family");
    Ok(MildMixingReport {
        window: (lo, hi),
        worst_limsup,
        delta,
        pass: worst_limsup < 1.0 - delta,
        witness,
        members_evaluated: evaluated,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::TAU;
    use std::f64::consts::PI;

    const B: usize = 1024;

    #[test]
    fn rajchman_examples() {
        let u = CircleMeasure::uniform(B).unwrap();
        let r = rajchman_probe(&u, 64, 1e-6).unwrap();
        assert!(r.pass && r.tail_sup < 1e-10);
        assert_eq!(r.window, (32, 64));

        let d = rajchman_probe(&CircleMeasure::unit(B).unwrap(), 64, 1e-6).unwrap();
        assert!(!d.pass && (d.tail_sup - 1.0).abs() < 1e-12);

        let two = CircleMeasure::from_atoms(B, &[(PI / 2.0, 0.5), (3.0 * PI / 2.0, 0.5)]).unwrap();
        let t = rajchman_probe(&two, 64, 1e-6).unwrap();
        assert!(!t.pass && (t.tail_sup - 1.0).abs() < 1e-12);
        assert_eq!(t.argmax % 4, 0);
    }

    #[test]
    fn rajchman_out_of_band() {
        let u = CircleMeasure::uniform(B).unwrap();
        assert!(matches!(
            rajchman_probe(&u, 200, 0.1),
            Err(LabError::OutOfBand { .. })
        ));
    }

    #[test]
    fn dirichlet_examples() {
        let d = dirichlet_probe(&CircleMeasure::unit(B).unwrap(), 16, 1e-6).unwrap();
        assert!(d.pass && (d.best_value - 1.0).abs() < 1e-12);

        let m = CircleMeasure::from_atoms(B, &[(TAU * 3.0 / 8.0, 0.5), (TAU * 5.0 / 8.0, 0.5)]).unwrap();
        let r = dirichlet_probe(&m, 16, 1e-6).unwrap();
        assert!(r.pass);
        assert_eq!(r.best_n, 8);
        assert!((r.best_value - 1.0).abs() < 1e-12);

        let u = dirichlet_probe(&CircleMeasure::uniform(B).unwrap(), 64, 1e-6).unwrap();
        assert!(!u.pass && u.best_value < 1e-10);
    }

    #[test]
    fn mild_mixing_examples() {
        let with_atom = CircleMeasure::uniform(B)
            .unwrap()
            .scaled(0.9)
            .unwrap()
            .add(&CircleMeasure::dirac(B, 1.0, 0.1).unwrap())
            .unwrap();
        let r = mild_mixing_probe(&with_atom, 8, 64, 0.1, 1).unwrap();
        assert!(!r.pass);
        assert!(matches!(r.witness, FamilyMember::Atom { .. }));
        assert!((r.worst_limsup - 1.0).abs() < 1e-12);

        let u = CircleMeasure::uniform(B).unwrap();
        let r = mild_mixing_probe(&u, 32, 64, 0.1, 1).unwrap();
        assert!(r.pass, "worst = {}", r.worst_limsup);

        let eta = u.normalized_chaos(1e-12).unwrap();
        let r = mild_mixing_probe(&eta, 32, 64, 0.1, 1).unwrap();
        assert!(r.pass, "worst = {}", r.worst_limsup);
    }

    #[test]
    fn mild_mixing_empty_family() {
        let u = CircleMeasure::uniform(B).unwrap();
        assert!(mild_mixing_probe(&u, 0, 64, 0.1, 1).is_err());
    }
}
