//! Finite positive measures on the unit circle.
//!
//! A [`CircleMeasure`] is a list of atoms plus a piecewise-constant density
//! on `B` bins, `B` a power of two. Bin `j` is centred at angle `2πj/B` and
//! covers `[2π(j - ½)/B, 2π(j + ½)/B)`, so bin 0 straddles the point `1`.
//! With centred bins the density part of a convolution is again a bin array
//! with no half-bin offset, and reflection maps bin `j` to bin `-j mod B`.
//!
//! Fourier coefficients follow `μ̂(n) = ∫ λⁿ dμ(λ)`: atoms are summed
//! exactly, the density part by the midpoint rule at bin centres. The
//! midpoint rule resolves `|n| <= B/8`; asking for more with a nonzero
//! density part is an error.

mod corpus;
mod probes;

pub use corpus::{random_atomic, random_grid, random_mixed, random_symmetric};
pub use probes::{
    dirichlet_probe, mild_mixing_probe, rajchman_probe, DirichletReport, FamilyMember,
    MildMixingReport, RajchmanReport,
};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::schema;
use crate::TAU;

/// Atoms closer than this (circularly) are merged.
pub const ANGLE_TOL: f64 = 1e-12;

/// Smallest supported bin count.
pub const MIN_BINS: usize = 64;

/// Tolerance on total mass for "probability measure" preconditions.
pub const PROBABILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub angle: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircleMeasure {
    atoms: Vec<Atom>,
    density: Vec<f64>,
}

fn check_bins(bins: usize) -> Result<()> {
    if bins < MIN_BINS || !bins.is_power_of_two() {
        return Err(LabError::InvalidMeasure(format!(
            "bin count {bins} must be a power of two >= {MIN_BINS}"
        )));
    }
    Ok(())
}

/// Wraps an angle into `[0, 2π)`, sending values within `ANGLE_TOL` of
/// `2π` to 0.
pub fn wrap_angle(angle: f64) -> f64 {
    let a = angle.rem_euclid(TAU);
    if a >= TAU - ANGLE_TOL {
        0.0
    } else {
        a
    }
}

fn canonical_atoms(raw: Vec<Atom>) -> Result<Vec<Atom>> {
    let mut atoms = Vec::with_capacity(raw.len());
    for a in raw {
        if !a.angle.is_finite() || !a.mass.is_finite() || a.mass < 0.0 {
            return Err(LabError::InvalidMeasure(format!(
                "atom ({}, {}) must have a finite angle and nonnegative finite mass",
                a.angle, a.mass
            )));
        }
        if a.mass > 0.0 {
            atoms.push(Atom {
                angle: wrap_angle(a.angle),
                mass: a.mass,
            });
        }
    }
    atoms.sort_by(|x, y| x.angle.total_cmp(&y.angle));
    let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
    for a in atoms {
        match merged.last_mut() {
            Some(last) if a.angle - last.angle <= ANGLE_TOL => last.mass += a.mass,
            _ => merged.push(a),
        }
    }
    // wrap-around: an atom just below 2π merges into one at 0
    if merged.len() > 1 {
        let first = merged[0].angle;
        let last = merged[merged.len() - 1].angle;
        if first + TAU - last <= ANGLE_TOL {
            let tail = merged.pop().expect("nonempty");
            merged[0].mass += tail.mass;
        }
    }
    Ok(merged)
}

impl CircleMeasure {
    pub fn new(bins: usize, atoms: Vec<Atom>, density: Vec<f64>) -> Result<Self> {
        check_bins(bins)?;
        if density.len() != bins {
            return Err(LabError::InvalidMeasure(format!(
                "density has {} entries, expected {bins}",
                density.len()
            )));
        }
        if let Some(v) = density.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(LabError::InvalidMeasure(format!(
                "density value {v} is negative or not finite"
            )));
        }
        Ok(Self {
            atoms: canonical_atoms(atoms)?,
            density,
        })
    }

    pub fn zero(bins: usize) -> Result<Self> {
        Self::new(bins, Vec::new(), vec![0.0; bins])
    }

    pub fn dirac(bins: usize, angle: f64, mass: f64) -> Result<Self> {
        Self::new(bins, vec![Atom { angle, mass }], vec![0.0; bins])
    }

    /// `δ₁`: unit atom at angle 0, the convolution identity.
    pub fn unit(bins: usize) -> Result<Self> {
        Self::dirac(bins, 0.0, 1.0)
    }

    /// Normalized Haar measure, density `1/(2π)` on every bin.
    pub fn uniform(bins: usize) -> Result<Self> {
        Self::new(bins, Vec::new(), vec![1.0 / TAU; bins])
    }

    pub fn from_atoms(bins: usize, atoms: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            bins,
            atoms
                .iter()
                .map(|&(angle, mass)| Atom { angle, mass })
                .collect(),
            vec![0.0; bins],
        )
    }

    pub fn from_density(density: Vec<f64>) -> Result<Self> {
        Self::new(density.len(), Vec::new(), density)
    }

    pub fn bins(&self) -> usize {
        self.density.len()
    }

    pub fn bin_width(&self) -> f64 {
        TAU / self.bins() as f64
    }

    /// Centre angle of bin `j`.
    pub fn bin_center(&self, j: usize) -> f64 {
        TAU * j as f64 / self.bins() as f64
    }

    /// Index of the bin containing `angle`.
    pub fn bin_of(&self, angle: f64) -> usize {
        let b = self.bins();
        let s = wrap_angle(angle) / self.bin_width();
        (s.round() as usize) % b
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    pub fn density_mass(&self) -> f64 {
        self.bin_width() * self.density.iter().sum::<f64>()
    }

    pub fn total_mass(&self) -> f64 {
        self.atom_mass() + self.density_mass()
    }

    pub fn has_density(&self) -> bool {
        self.density.iter().any(|v| *v != 0.0)
    }

    pub fn is_probability(&self) -> bool {
        (self.total_mass() - 1.0).abs() <= PROBABILITY_TOL
    }

    pub(crate) fn require_probability(&self) -> Result<()> {
        if self.is_probability() {
            Ok(())
        } else {
            Err(LabError::NotProbability {
                mass: self.total_mass(),
            })
        }
    }

    fn require_same_bins(&self, other: &Self) -> Result<()> {
        if self.bins() != other.bins() {
            return Err(LabError::BinMismatch {
                left: self.bins(),
                right: other.bins(),
            });
        }
        Ok(())
    }

    /// Largest `|n|` the density midpoint rule is trusted for.
    pub fn band_limit(&self) -> i64 {
        (self.bins() / 8) as i64
    }

    pub fn fourier_coefficient(&self, n: i64) -> Result<Complex64> {
        if n.abs() > self.band_limit() && self.has_density() {
            return Err(LabError::OutOfBand {
                n,
                limit: self.band_limit(),
            });
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for a in &self.atoms {
            acc += a.mass * Complex64::from_polar(1.0, n as f64 * a.angle);
        }
        if self.has_density() {
            let b = self.bins() as i64;
            let mut dens = Complex64::new(0.0, 0.0);
            for (j, v) in self.density.iter().enumerate() {
                if *v != 0.0 {
                    let k = (n * j as i64).rem_euclid(b);
                    dens += *v * Complex64::from_polar(1.0, TAU * k as f64 / b as f64);
                }
            }
            acc += self.bin_width() * dens;
        }
        Ok(acc)
    }

    /// Coefficients for `n` in `lo..=hi`.
    pub fn fourier_coefficients(&self, lo: i64, hi: i64) -> Result<Vec<Complex64>> {
        (lo..=hi).map(|n| self.fourier_coefficient(n)).collect()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(LabError::InvalidArgument(format!(
                "scale factor {c} must be finite and nonnegative"
            )));
        }
        Self::new(
            self.bins(),
            self.atoms
                .iter()
                .map(|a| Atom {
                    angle: a.angle,
                    mass: a.mass * c,
                })
                .collect(),
            self.density.iter().map(|v| v * c).collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.require_same_bins(other)?;
        let mut atoms = self.atoms.clone();
        atoms.extend_from_slice(&other.atoms);
        let density = self
            .density
            .iter()
            .zip(&other.density)
            .map(|(a, b)| a + b)
            .collect();
        Self::new(self.bins(), atoms, density)
    }

    /// Largest absolute difference between two measures, comparing atom
    /// masses at matching angles and density values per bin.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.require_same_bins(other)?;
        let mut worst = 0.0f64;
        for (a, b) in self.density.iter().zip(&other.density) {
            worst = worst.max((a - b).abs());
        }
        let neg: Vec<Atom> = other
            .atoms
            .iter()
            .map(|a| Atom {
                angle: a.angle,
                mass: -a.mass,
            })
            .collect();
        // merge the two atom lists by angle, tracking signed sums
        let mut all: Vec<Atom> = self.atoms.iter().copied().chain(neg).collect();
        all.sort_by(|x, y| x.angle.total_cmp(&y.angle));
        let mut sums: Vec<Atom> = Vec::new();
        for a in all {
            match sums.last_mut() {
                Some(last) if a.angle - last.angle <= ANGLE_TOL => last.mass += a.mass,
                _ => sums.push(a),
            }
        }
        if sums.len() > 1 && sums[0].angle + TAU - sums[sums.len() - 1].angle <= ANGLE_TOL {
            let tail = sums.pop().expect("nonempty");
            sums[0].mass += tail.mass;
        }
        for s in sums {
            worst = worst.max(s.mass.abs());
        }
        Ok(worst)
    }

    /// Group convolution on the circle.
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        self.require_same_bins(other)?;
        let bins = self.bins();

        let mut atoms = Vec::with_capacity(self.atoms.len() * other.atoms.len());
        for a in &self.atoms {
            for b in &other.atoms {
                atoms.push(Atom {
                    angle: a.angle + b.angle,
                    mass: a.mass * b.mass,
                });
            }
        }

        let mut density = vec![0.0; bins];
        if other.has_density() {
            for a in &self.atoms {
                rotate_into(&mut density, &other.density, a.angle, a.mass);
            }
        }
        if self.has_density() {
            for b in &other.atoms {
                rotate_into(&mut density, &self.density, b.angle, b.mass);
            }
        }
        if self.has_density() && other.has_density() {
            let conv = circular_convolution(&self.density, &other.density);
            let h = self.bin_width();
            for (d, c) in density.iter_mut().zip(conv) {
                *d += (h * c).max(0.0);
            }
        }
        Self::new(bins, atoms, density)
    }

    /// `ρ^{*n}`, with `ρ^{*0} = δ₁`.
    pub fn convolution_power(&self, n: usize) -> Result<Self> {
        let mut acc = Self::unit(self.bins())?;
        for _ in 0..n {
            acc = acc.convolve(self)?;
        }
        Ok(acc)
    }

    /// Partial sum `Σ_{n<=K} ρ^{*n}/n!` of the convolution exponential,
    /// with `K = exp_truncation_order(tail_tol)`.
    pub fn exp_measure(&self, tail_tol: f64) -> Result<Self> {
        self.require_probability()?;
        let order = exp_truncation_order(tail_tol)?;
        let mut acc = Self::unit(self.bins())?;
        let mut power = Self::unit(self.bins())?;
        let mut inv_fact = 1.0;
        for n in 1..=order {
            power = power.convolve(self)?;
            inv_fact /= n as f64;
            acc = acc.add(&power.scaled(inv_fact)?)?;
        }
        Ok(acc)
    }

    /// `η = (exp(ρ) - δ₁)/(e - 1)`. Only the unit atom contributed by the
    /// zeroth term is removed; mass the positive powers place at angle 0
    /// stays.
    pub fn normalized_chaos(&self, tail_tol: f64) -> Result<Self> {
        let exp = self.exp_measure(tail_tol)?;
        let mut atoms = exp.atoms.clone();
        let at_zero = atoms
            .iter_mut()
            .find(|a| a.angle == 0.0)
            .ok_or_else(|| LabError::InvalidMeasure("exp(ρ) has no atom at 1".into()))?;
        at_zero.mass -= 1.0;
        if at_zero.mass < 0.0 {
            // rounding below zero only
            at_zero.mass = 0.0;
        }
        let e_minus_one = std::f64::consts::E - 1.0;
        Self::new(self.bins(), atoms, exp.density)?.scaled(1.0 / e_minus_one)
    }

    /// `σ̌(A) = σ(Ā)`.
    pub fn reflect(&self) -> Self {
        let b = self.bins();
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                angle: wrap_angle(TAU - a.angle),
                mass: a.mass,
            })
            .collect();
        let density = (0..b).map(|j| self.density[(b - j) % b]).collect();
        Self::new(b, atoms, density).expect("reflection preserves validity")
    }

    /// `½(σ + σ̌)`.
    pub fn symmetrize(&self) -> Self {
        self.add(&self.reflect())
            .and_then(|s| s.scaled(0.5))
            .expect("same bins")
    }

    /// Largest `|Im σ̂(n)|` over `1 <= n <= 8`.
    pub fn asymmetry(&self) -> f64 {
        (1..=8)
            .map(|n| {
                self.fourier_coefficient(n)
                    .map(|c| c.im.abs())
                    .unwrap_or(f64::INFINITY)
            })
            .fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.asymmetry() <= tol
    }

    /// `(σ⁺, σ⁻) = (2σ·1_{Im z >= 0}, 2σ·1_{Im z <= 0})`. Mass at the two
    /// boundary points (atoms at 0 or π, and the bins centred there) is
    /// split evenly between the halves.
    pub fn split_upper_lower(&self) -> Result<(Self, Self)> {
        let asym = self.asymmetry();
        if asym > 1e-9 {
            return Err(LabError::Asymmetric { max_imag: asym });
        }
        let b = self.bins();
        let half = b / 2;
        let mut upper_atoms = Vec::new();
        let mut lower_atoms = Vec::new();
        for a in &self.atoms {
            let on_axis = a.angle <= ANGLE_TOL || (a.angle - std::f64::consts::PI).abs() <= ANGLE_TOL;
            if on_axis {
                upper_atoms.push(*a);
                lower_atoms.push(*a);
            } else if a.angle < std::f64::consts::PI {
                upper_atoms.push(Atom {
                    angle: a.angle,
                    mass: 2.0 * a.mass,
                });
            } else {
                lower_atoms.push(Atom {
                    angle: a.angle,
                    mass: 2.0 * a.mass,
                });
            }
        }
        let mut upper = vec![0.0; b];
        let mut lower = vec![0.0; b];
        for (j, v) in self.density.iter().enumerate() {
            if j == 0 || j == half {
                upper[j] = *v;
                lower[j] = *v;
            } else if j < half {
                upper[j] = 2.0 * v;
            } else {
                lower[j] = 2.0 * v;
            }
        }
        Ok((
            Self::new(b, upper_atoms, upper)?,
            Self::new(b, lower_atoms, lower)?,
        ))
    }

    /// Restriction to a set of bins: the density on those bins plus every
    /// atom whose angle falls in one of them.
    pub fn restrict_to_bins(&self, keep: &[bool]) -> Result<Self> {
        if keep.len() != self.bins() {
            return Err(LabError::DimensionMismatch {
                expected: self.bins(),
                found: keep.len(),
            });
        }
        let atoms = self
            .atoms
            .iter()
            .copied()
            .filter(|a| keep[self.bin_of(a.angle)])
            .collect();
        let density = self
            .density
            .iter()
            .zip(keep)
            .map(|(v, k)| if *k { *v } else { 0.0 })
            .collect();
        Self::new(self.bins(), atoms, density)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&MeasureDoc::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: MeasureDoc = serde_json::from_str(text)?;
        doc.try_into()
    }
}

/// Smallest `K` with `Σ_{n>K} 1/n! < tail_tol`.
pub fn exp_truncation_order(tail_tol: f64) -> Result<usize> {
    if !(tail_tol > 0.0 && tail_tol.is_finite()) {
        return Err(LabError::InvalidArgument(format!(
            "tail tolerance {tail_tol} must be positive"
        )));
    }
    let tail_after = |k: usize| -> f64 {
        // terms decay superexponentially; 40 terms past k are plenty
        let mut term = 1.0;
        for n in 1..=k + 1 {
            term /= n as f64;
        }
        let mut sum = 0.0;
        for n in k + 1..k + 41 {
            sum += term;
            term /= (n + 1) as f64;
        }
        sum
    };
    let mut k = 0;
    while tail_after(k) >= tail_tol {
        k += 1;
    }
    Ok(k)
}

/// Adds `mass ·` (density rotated by `angle`) into `out`, splitting each
/// bin linearly between the two nearest target bins.
fn rotate_into(out: &mut [f64], density: &[f64], angle: f64, mass: f64) {
    let b = density.len();
    let shift = wrap_angle(angle) / (TAU / b as f64);
    let whole = shift.floor();
    let mut frac = shift - whole;
    let mut whole = whole as usize;
    if frac < 1e-12 {
        frac = 0.0;
    } else if frac > 1.0 - 1e-12 {
        frac = 0.0;
        whole += 1;
    }
    for (j, v) in density.iter().enumerate() {
        if *v == 0.0 {
            continue;
        }
        let t = (j + whole) % b;
        out[t] += (1.0 - frac) * v * mass;
        if frac > 0.0 {
            out[(t + 1) % b] += frac * v * mass;
        }
    }
}

/// Circular convolution `c_k = Σ_j a_j b_{k-j}` via the FFT.
pub(crate) fn circular_convolution(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut fa: Vec<Complex64> = a.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    let mut fb: Vec<Complex64> = b.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inv.process(&mut fa);
    fa.iter().map(|c| c.re / n as f64).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureDoc {
    pub schema: String,
    pub bins: usize,
    pub atoms: Vec<[f64; 2]>,
    pub density: Vec<f64>,
}

impl From<&CircleMeasure> for MeasureDoc {
    fn from(m: &CircleMeasure) -> Self {
        Self {
            schema: schema::CIRCLE_MEASURE.to_string(),
            bins: m.bins(),
            atoms: m.atoms.iter().map(|a| [a.angle, a.mass]).collect(),
            density: m.density.clone(),
        }
    }
}

impl TryFrom<MeasureDoc> for CircleMeasure {
    type Error = LabError;

    fn try_from(doc: MeasureDoc) -> Result<Self> {
        schema::check(schema::CIRCLE_MEASURE, &doc.schema)?;
        CircleMeasure::new(
            doc.bins,
            doc.atoms
                .into_iter()
                .map(|[angle, mass]| Atom { angle, mass })
                .collect(),
            doc.density,
        )
    }
}
