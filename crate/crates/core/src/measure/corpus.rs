//! Seeded random measures for tests, acceptance runs and configs.

use rand::Rng;

use super::{Atom, CircleMeasure};
use crate::error::Result;
use crate::TAU;

/// Probability measure with `count` atoms at uniform random angles.
pub fn random_atomic<R: Rng + ?Sized>(bins: usize, count: usize, rng: &mut R) -> Result<CircleMeasure> {
    let raw: Vec<(f64, f64)> = (0..count)
        .map(|_| (rng.random::<f64>() * TAU, 0.05 + rng.random::<f64>()))
        .collect();
    let total: f64 = raw.iter().map(|(_, m)| m).sum();
    let atoms = raw
        .into_iter()
        .map(|(angle, m)| Atom {
            angle,
            mass: m / total,
        })
        .collect();
    CircleMeasure::new(bins, atoms, vec![0.0; bins])
}

/// Probability density: a positive low-frequency trigonometric profile
/// plus independent per-bin noise.
pub fn random_grid<R: Rng + ?Sized>(bins: usize, rng: &mut R) -> Result<CircleMeasure> {
    let harmonics: Vec<(f64, f64)> = (0..4)
        .map(|_| (0.2 * rng.random::<f64>(), rng.random::<f64>() * TAU))
        .collect();
    let noise = 0.3 * rng.random::<f64>();
    let mut density: Vec<f64> = (0..bins)
        .map(|j| {
            let t = TAU * j as f64 / bins as f64;
            let smooth: f64 = harmonics
                .iter()
                .enumerate()
                .map(|(k, (a, phi))| a * ((k + 1) as f64 * t + phi).cos())
                .sum();
            1.0 + smooth + noise * rng.random::<f64>()
        })
        .collect();
    let mass: f64 = density.iter().sum::<f64>() * TAU / bins as f64;
    for v in &mut density {
        *v /= mass;
    }
    CircleMeasure::from_density(density)
}

/// Probability measure putting `atom_share` of its mass on `atoms` random
/// atoms and the rest on a [`random_grid`] density.
pub fn random_mixed<R: Rng + ?Sized>(
    bins: usize,
    atoms: usize,
    atom_share: f64,
    rng: &mut R,
) -> Result<CircleMeasure> {
    let a = random_atomic(bins, atoms, rng)?.scaled(atom_share)?;
    let g = random_grid(bins, rng)?.scaled(1.0 - atom_share)?;
    a.add(&g)
}

pub fn random_symmetric<R: Rng + ?Sized>(
    bins: usize,
    atoms: usize,
    atom_share: f64,
    rng: &mut R,
) -> Result<CircleMeasure> {
    Ok(random_mixed(bins, atoms, atom_share, rng)?.symmetrize())
}
