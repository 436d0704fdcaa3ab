//! Probes run on simulated orbits. Each probe returns a plain report; the
//! classification harness turns reports into graded verdicts.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::classify::Verdict;
use super::{orbit, BallSpec, State, SystemSpec, Trajectory};
use crate::error::{LabError, Result};
use crate::gauss::{build_model, factor_invariance, sample, EigenField, GaussModel, VectorKind};
use crate::hits::{
    cross_difference_set, difference_set, longest_run, lower_density, max_gap, upper_density, WindowedSet,
};
use crate::kalish::{chi, corrected_eigenvector, CircleFunction};
use crate::measure::CircleMeasure;
use crate::rng::{derive_seed, rng_for};
use crate::TAU;

/// Indices `t` with `‖x_t − center‖ < radius`; the window is the
/// trajectory length.
pub fn hitting_times(traj: &Trajectory, ball: &BallSpec) -> Result<WindowedSet> {
    WindowedSet::from_predicate(traj.len(), |t| ball.contains(traj.spec(), &traj.states()[t]))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BirkhoffReport {
    pub checkpoints: Vec<usize>,
    /// `averages[f][c]` is `(1/n) Σ_{j<n} f(x_j)` at checkpoint `c`.
    pub averages: Vec<Vec<f64>>,
    /// Gap between the last two checkpoints, per function.
    pub cauchy_gaps: Vec<f64>,
}

pub type TestFunction<'a> = &'a dyn Fn(&[Complex64]) -> f64;

/// Birkhoff averages of the empirical measures `(1/n) Σ_{j<n} δ_{x_j}`.
pub fn birkhoff_probe(traj: &Trajectory, functions: &[TestFunction<'_>], checkpoints: &[usize]) -> Result<BirkhoffReport> {
    if checkpoints.is_empty()
        || checkpoints[0] == 0
        || checkpoints.windows(2).any(|w| w[0] >= w[1])
        || *checkpoints.last().unwrap() > traj.len()
    {
        return Err(LabError::InvalidArgument(format!(
            "checkpoints must increase within [1, {}]",
            traj.len()
        )));
    }
    let mut averages = Vec::with_capacity(functions.len());
    let mut gaps = Vec::with_capacity(functions.len());
    for f in functions {
        let mut acc = 0.0;
        let mut row = Vec::with_capacity(checkpoints.len());
        let mut next = 0;
        for (j, x) in traj.states().iter().enumerate().take(*checkpoints.last().unwrap()) {
            acc += f(x);
            if j + 1 == checkpoints[next] {
                row.push(acc / (j + 1) as f64);
                next += 1;
            }
        }
        gaps.push(match row.len() {
            0 | 1 => 0.0,
            n => (row[n - 1] - row[n - 2]).abs(),
        });
        averages.push(row);
    }
    Ok(BirkhoffReport {
        checkpoints: checkpoints.to_vec(),
        averages,
        cauchy_gaps: gaps,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BirkhoffComparison {
    pub orbits: usize,
    pub steps: usize,
    pub orbit_mean: f64,
    pub orbit_se: f64,
    pub fresh_samples: usize,
    pub fresh_mean: f64,
    pub fresh_se: f64,
    pub pass: bool,
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, f64::INFINITY);
    }
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Birkhoff averages of `f` along Kalish orbits of Gaussian starts against
/// the plain sample average of `f` over fresh draws. Passes when the two
/// agree within three combined standard errors.
pub fn gaussian_birkhoff_comparison(
    model: &GaussModel,
    f: TestFunction<'_>,
    steps: usize,
    orbits: usize,
    fresh: usize,
    seed: u64,
) -> Result<BirkhoffComparison> {
    if steps == 0 || orbits < 2 || fresh < 2 {
        return Err(LabError::InvalidArgument(
            "comparison needs steps >= 1, orbits >= 2 and fresh >= 2".into(),
        ));
    }
    let spec = SystemSpec::Kalish { grid: model.grid() };
    let starts = sample(model, orbits, derive_seed(seed, "birkhoff-orbits"))?;
    let mut per_orbit = Vec::with_capacity(orbits);
    for x0 in starts {
        let traj = orbit(&spec, x0.values(), steps - 1)?;
        per_orbit.push(traj.states().iter().map(|x| f(x)).sum::<f64>() / steps as f64);
    }
    let draws: Vec<f64> = sample(model, fresh, derive_seed(seed, "birkhoff-fresh"))?
        .iter()
        .map(|x| f(x.values()))
        .collect();
    let (om, ose) = mean_se(&per_orbit);
    let (fm, fse) = mean_se(&draws);
    Ok(BirkhoffComparison {
        orbits,
        steps,
        orbit_mean: om,
        orbit_se: ose,
        fresh_samples: fresh,
        fresh_mean: fm,
        fresh_se: fse,
        pass: (om - fm).abs() <= 3.0 * (ose * ose + fse * fse).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReturnSetReport {
    pub window: usize,
    pub visits: usize,
    /// Every recorded state is the image of its predecessor, bit for bit.
    pub replay_ok: bool,
    /// `N(x₀, U) − N(x₀, U)`, certified as a subset of `N(U, U)`.
    pub certified: WindowedSet,
    pub certified_max_gap: usize,
    pub witnesses_checked: usize,
    /// First witness `(l, k)` whose endpoint missed the check ball.
    pub first_failure: Option<[usize; 2]>,
    pub pass: bool,
    /// Witness `(l, k)` per certified difference `k − l`, in increasing
    /// order of the difference.
    #[serde(skip)]
    pub witnesses: Vec<[usize; 2]>,
}

/// Certifies `N(x₀, U) − N(x₀, U) ⊆ N(U, U)` with explicit witnesses.
pub fn return_set_identity_check(traj: &Trajectory, ball: &BallSpec) -> Result<ReturnSetReport> {
    return_set_identity_check_with(traj, ball, ball)
}

/// As [`return_set_identity_check`], with visits taken from `visit_ball`
/// and witness endpoints checked against `check_ball`. A mismatched pair is
/// the negative control.
pub fn return_set_identity_check_with(
    traj: &Trajectory,
    visit_ball: &BallSpec,
    check_ball: &BallSpec,
) -> Result<ReturnSetReport> {
    let visits = hitting_times(traj, visit_ball)?;
    if visits.len() < 2 {
        return Err(LabError::InvalidArgument(format!(
            "return-set check needs >= 2 visits, found {}",
            visits.len()
        )));
    }
    let spec = traj.spec();
    let states = traj.states();
    let replay_ok = states.windows(2).all(|w| spec.step(&w[0]) == w[1]);

    // a replayed orbit makes T^{k-l} x_l = x_k for every l < k, so the
    // witness for k − l is the pair itself
    let certified = difference_set(&visits)?;
    let mut slot = vec![usize::MAX; traj.len()];
    for (i, &d) in certified.elements().iter().enumerate() {
        slot[d] = i;
    }
    let mut witnesses = vec![[usize::MAX; 2]; certified.len()];
    let mut open = certified.len();
    let v = visits.elements();
    'outer: for (i, &l) in v.iter().enumerate() {
        for &k in &v[i..] {
            let w = &mut witnesses[slot[k - l]];
            if w[0] == usize::MAX {
                *w = [l, k];
                open -= 1;
                if open == 0 {
                    break 'outer;
                }
            }
        }
    }
    let first_failure = witnesses
        .iter()
        .find(|[_, k]| !check_ball.contains(spec, &states[*k]))
        .copied();
    let certified_max_gap = max_gap(&certified);
    Ok(ReturnSetReport {
        window: traj.len(),
        visits: visits.len(),
        replay_ok,
        certified_max_gap,
        witnesses_checked: witnesses.len(),
        first_failure,
        pass: replay_ok && first_failure.is_none(),
        certified,
        witnesses,
    })
}

/// Gaussian start for the Kalish system: a sample from the invariant
/// Gaussian measure over `nodes` corrected eigenvectors of the uniform
/// measure.
pub fn kalish_model(grid: usize, nodes: usize) -> Result<GaussModel> {
    let sigma = CircleMeasure::uniform(256)?;
    build_model(EigenField::from_measure(&sigma, nodes, grid, VectorKind::Corrected, 1e-6)?)
}

pub(super) fn random_unit<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> State {
    let v: State = (0..dim)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

/// Product `w_{i+1} ⋯ w_{i+n}` of shift weights.
fn weight_product(spec: &SystemSpec, i: usize, n: usize) -> f64 {
    match spec {
        SystemSpec::ScalarMultipleShift { lambda, .. } => lambda.powi(n as i32),
        _ => (i + 1..=i + n).map(|l| spec.weight(l).ln()).sum::<f64>().exp(),
    }
}

/// Seed vector for a backward shift whose orbit shows `targets` (cycled)
/// in the observed window at the times `0, spacing, 2·spacing, …`.
///
/// Block `k` sits at coordinates `[n_k, n_k + dim)` divided by the weight
/// product that `B^{n_k}` will apply. The buffer holds `n_steps` steps.
/// A hypercyclic vector must be a genuine vector, so when the construction
/// needs a norm beyond `10·max‖target‖` (weights that do not grow) no
/// transitive-looking orbit is claimed.
pub fn shift_seed_vector(spec: &SystemSpec, targets: &[State], spacing: usize, n_steps: usize) -> Result<State> {
    let dim = spec.dim();
    if !spec.is_shift() {
        return Err(LabError::InvalidArgument("seed vectors are built for shifts".into()));
    }
    if targets.is_empty() || targets.iter().any(|t| t.len() != dim) {
        return Err(LabError::InvalidArgument(format!("targets must be nonempty vectors of length {dim}")));
    }
    if spacing < dim {
        return Err(LabError::InvalidArgument(format!("spacing {spacing} is below the dimension {dim}")));
    }
    let mut x = vec![Complex64::new(0.0, 0.0); dim + n_steps];
    let mut k = 0;
    while k * spacing <= n_steps {
        let n = k * spacing;
        let y = &targets[k % targets.len()];
        for (i, yi) in y.iter().enumerate() {
            x[n + i] = yi / weight_product(spec, i, n);
        }
        k += 1;
    }
    let largest = targets
        .iter()
        .map(|t| t.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let norm = spec.norm(&x);
    if !norm.is_finite() || norm > 10.0 * largest {
        return Err(LabError::NoTransitiveOrbit(format!(
            "shift seed vector needs norm {norm:e} for targets of norm {largest:e}"
        )));
    }
    Ok(x)
}

/// Targets visiting each ball in turn. Balls centred at 0 get a target of
/// size `radius·2⁻¹⁶`, which the shift takes many steps to blow out of
/// the ball; other balls get their centre plus a perturbation of that
/// size.
fn ball_targets(dim: usize, balls: &[&BallSpec], seed: u64) -> State2 {
    let mut rng = rng_for(seed, "shift-targets");
    balls
        .iter()
        .map(|b| {
            let noise = random_unit(dim, &mut rng);
            let eps = b.radius * 2f64.powi(-16);
            (0..dim)
                .map(|i| b.center.get(i).copied().unwrap_or_default() + noise[i] * eps)
                .collect()
        })
        .collect()
}

type State2 = Vec<State>;

/// Deterministic transitive-looking start for `spec`: random phases on the
/// torus, a Gaussian sample for the Kalish system, and a seed vector
/// cycling through `balls` for shifts.
pub fn transitive_start(spec: &SystemSpec, balls: &[&BallSpec], n_steps: usize, nodes: usize, seed: u64) -> Result<State> {
    match spec {
        SystemSpec::TorusRotation { angles } => {
            let mut rng = rng_for(seed, "torus-start");
            Ok(angles
                .iter()
                .map(|_| Complex64::from_polar(1.0, rng.random::<f64>() * TAU))
                .collect())
        }
        SystemSpec::Kalish { grid } => {
            let model = kalish_model(*grid, nodes)?;
            Ok(sample(&model, 1, derive_seed(seed, "kalish-start"))?.remove(0).into_values())
        }
        _ => {
            let targets = ball_targets(spec.dim(), balls, seed);
            shift_seed_vector(spec, &targets, spec.dim(), n_steps)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThreeSetsReport {
    pub window: usize,
    pub visits_u: usize,
    pub visits_v: usize,
    pub visits_w0: usize,
    /// Longest run `[start, start + len)` inside `N(x₀,W₀) − N(x₀,U)`.
    pub thick_run: Option<[usize; 2]>,
    /// `max_gap` of `N(x₀,V) − N(x₀,W₀)`.
    pub syndetic_gap: Option<usize>,
    /// Smallest time in both transfer sets.
    pub witness: Option<usize>,
    /// Run of `N(x₀,W₀) − N(x₀,U)` holding the witness.
    pub witness_run: Option<[usize; 2]>,
    /// Orbit indices `[[l, l + t], [m, m + t]]` with `x_l ∈ U`,
    /// `x_{l+t} ∈ W₀`, `x_m ∈ W₀` and `x_{m+t} ∈ V`.
    pub witness_pairs: Option<[[usize; 2]; 2]>,
    pub verdict: Verdict,
    pub note: String,
}

/// Three-open-sets evidence: thick transfer times from `U` into the
/// zero-centred `W₀`, meeting the transfer times from `W₀` to `V`.
pub fn three_open_sets_probe(
    spec: &SystemSpec,
    u: &BallSpec,
    v: &BallSpec,
    w0: &BallSpec,
    n_steps: usize,
    nodes: usize,
    seed: u64,
) -> Result<ThreeSetsReport> {
    let x0 = transitive_start(spec, &[u, w0, v, w0], n_steps, nodes, seed)?;
    let traj = orbit(spec, &x0, n_steps)?;
    let nu = hitting_times(&traj, u)?;
    let nv = hitting_times(&traj, v)?;
    let nw = hitting_times(&traj, w0)?;
    if nu.is_empty() || nv.is_empty() {
        return Err(LabError::NoTransitiveOrbit(format!(
            "orbit of {} steps visits U {} times and V {} times",
            n_steps,
            nu.len(),
            nv.len()
        )));
    }
    let mut report = ThreeSetsReport {
        window: traj.len(),
        visits_u: nu.len(),
        visits_v: nv.len(),
        visits_w0: nw.len(),
        thick_run: None,
        syndetic_gap: None,
        witness: None,
        witness_run: None,
        witness_pairs: None,
        verdict: Verdict::Inconclusive,
        note: String::new(),
    };
    if nw.is_empty() {
        if spec.is_linear() {
            report.note = "orbit never entered W0; no evidence either way".into();
        } else {
            report.verdict = Verdict::No;
            report.note = "the rotation is an isometry of the torus and its orbit closure avoids W0, so N(U, W0) is empty".into();
        }
        return Ok(report);
    }
    let d1 = cross_difference_set(&nw, &nu)?;
    let d2 = cross_difference_set(&nv, &nw)?;
    report.thick_run = longest_run(&d1).map(|(s, l)| [s, l]);
    report.syndetic_gap = Some(max_gap(&d2));
    // the condition itself is N(U, W0) ∩ N(W0, V) ≠ ∅; every run of the
    // first set counts, the longest is reported as thickness evidence
    if let Some(&t) = d1.elements().iter().find(|&&t| d2.contains(t)) {
        let mut start = t;
        while start > 0 && d1.contains(start - 1) {
            start -= 1;
        }
        let mut end = t + 1;
        while d1.contains(end) {
            end += 1;
        }
        let l = *nu.elements().iter().find(|&&l| nw.contains(l + t)).expect("t is a difference");
        let m = *nw.elements().iter().find(|&&m| nv.contains(m + t)).expect("t is a difference");
        report.witness = Some(t);
        report.witness_run = Some([start, end - start]);
        report.witness_pairs = Some([[l, l + t], [m, m + t]]);
    }
    report.verdict = if report.witness.is_some() { Verdict::Yes } else { Verdict::No };
    report.note = "window evidence: observed runs of N(U,W0) against the observed set N(W0,V)".into();
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenSpanReport {
    pub vectors: usize,
    pub rank: usize,
    pub tolerance: f64,
    pub smallest_relative_singular_value: f64,
    pub verdict: Verdict,
    pub note: String,
}

/// Whether a shift has unimodular eigenvectors in `ℓ²`: the tail weight
/// must exceed 1.
fn shift_has_unimodular_eigenvectors(spec: &SystemSpec) -> bool {
    match spec {
        SystemSpec::ScalarMultipleShift { lambda, .. } => *lambda > 1.0,
        SystemSpec::WeightedShift { weights, .. } => *weights.last().unwrap() > 1.0,
        _ => false,
    }
}

/// Eigenvector `x_μ` of a shift, `x_i = μⁱ / (w_1 ⋯ w_i)`, on `len`
/// coordinates.
fn shift_eigenvector(spec: &SystemSpec, mu: Complex64, len: usize) -> State {
    let mut out = Vec::with_capacity(len);
    let mut v = Complex64::new(1.0, 0.0);
    for i in 0..len {
        out.push(v);
        v = v * mu / spec.weight(i + 1);
    }
    out
}

fn numerical_rank(m: DMatrix<Complex64>, tol: f64) -> (usize, f64) {
    let sv = m.svd(false, false).singular_values;
    let top = sv.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return (0, 0.0);
    }
    let rank = sv.iter().filter(|s| **s > tol * top).count();
    (rank, sv.iter().copied().fold(f64::INFINITY, f64::min) / top)
}

/// Numerical rank of stacked unimodular eigenvectors.
pub fn eigen_span_probe(spec: &SystemSpec, count: usize, tolerance: f64) -> Result<EigenSpanReport> {
    spec.validate()?;
    if count == 0 {
        return Err(LabError::InvalidArgument("eigen-span probe needs count >= 1".into()));
    }
    let columns: Vec<State> = match spec {
        SystemSpec::Kalish { grid } => {
            let count = count.min(*grid - 1);
            (0..count)
                .map(|j| chi(TAU * (j as f64 + 0.5) / count as f64, *grid).map(CircleFunction::into_values))
                .collect::<Result<_>>()?
        }
        SystemSpec::TorusRotation { angles } => {
            // coordinate characters z ↦ z_j sampled along an orbit
            let k = angles.len();
            let start: State = vec![Complex64::new(1.0, 0.0); k];
            let traj = orbit(spec, &start, 4 * k.max(16))?;
            (0..k).map(|j| traj.states().iter().map(|x| x[j]).collect()).collect()
        }
        _ => {
            if !shift_has_unimodular_eigenvectors(spec) {
                return Ok(EigenSpanReport {
                    vectors: 0,
                    rank: 0,
                    tolerance,
                    smallest_relative_singular_value: 0.0,
                    verdict: Verdict::Inconclusive,
                    note: "no evidence: the weights admit no unimodular eigenvectors".into(),
                });
            }
            let dim = spec.dim();
            let count = count.min(dim);
            (0..count)
                .map(|j| shift_eigenvector(spec, Complex64::from_polar(1.0, TAU * j as f64 / count as f64), dim))
                .collect()
        }
    };
    let rows = columns[0].len();
    let m = DMatrix::from_fn(rows, columns.len(), |i, j| columns[j][i]);
    let (rank, smallest) = numerical_rank(m, tolerance);
    let full = rank == columns.len();
    Ok(EigenSpanReport {
        vectors: columns.len(),
        rank,
        tolerance,
        smallest_relative_singular_value: smallest,
        verdict: if full { Verdict::Yes } else { Verdict::Inconclusive },
        note: if full {
            "unimodular eigenvectors span a full-rank family at grid scale".into()
        } else {
            "eigenvector family is rank deficient at this tolerance".into()
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicReport {
    pub period: Option<usize>,
    pub return_error: Option<f64>,
    pub span_rank: Option<usize>,
    pub span_vectors: Option<usize>,
    pub verdict: Verdict,
    pub note: String,
}

/// Smallest `q <= 1000` with `q·α/2π` within `1e-9` of an integer.
fn rational_order(angle: f64) -> Option<usize> {
    (1..=1000).find(|&q| {
        let r = q as f64 * angle / TAU;
        (r - r.round()).abs() < 1e-9
    })
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn relative_return_error(spec: &SystemSpec, x: &[Complex64], period: usize) -> Result<f64> {
    let traj = orbit(spec, x, period)?;
    Ok(spec.distance(&traj.states()[period], x) / spec.norm(x))
}

/// Searches for periodic points among combinations of eigenvectors with
/// root-of-unity eigenvalues, and checks that such eigenvectors span the
/// observed space.
pub fn periodic_density_probe(spec: &SystemSpec, tolerance: f64, seed: u64) -> Result<PeriodicReport> {
    spec.validate()?;
    let mut rng = rng_for(seed, "periodic-combination");
    match spec {
        SystemSpec::TorusRotation { angles } => {
            let orders: Option<Vec<usize>> = angles.iter().map(|a| rational_order(*a)).collect();
            let Some(orders) = orders else {
                return Ok(PeriodicReport {
                    period: None,
                    return_error: None,
                    span_rank: None,
                    span_vectors: None,
                    verdict: Verdict::No,
                    note: "an irrational rotation angle leaves no periodic points".into(),
                });
            };
            let p = orders.iter().fold(1, |acc, &q| acc / gcd(acc, q) * q);
            let x: State = angles
                .iter()
                .map(|_| Complex64::from_polar(1.0, rng.random::<f64>() * TAU))
                .collect();
            let err = relative_return_error(spec, &x, p)?;
            let ok = err <= tolerance;
            Ok(PeriodicReport {
                period: Some(p),
                return_error: Some(err),
                span_rank: None,
                span_vectors: None,
                verdict: if ok { Verdict::Yes } else { Verdict::Inconclusive },
                note: "rational rotation: every point is periodic".into(),
            })
        }
        SystemSpec::Kalish { grid } => {
            let grid = *grid;
            // all discrete eigenvalues are grid-th roots of unity; combine
            // those that are q-th roots
            let q = if grid % 16 == 0 { 16 } else { grid };
            let mut x = vec![Complex64::new(0.0, 0.0); grid];
            for j in 0..q {
                let (_, e) = corrected_eigenvector(TAU * j as f64 / q as f64, grid)?;
                let c = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
                for (xi, ei) in x.iter_mut().zip(e.values()) {
                    *xi += c * ei;
                }
            }
            let err = relative_return_error(spec, &x, q)?;
            let n = grid.min(256);
            let cols: Vec<State> = (0..n)
                .map(|j| corrected_eigenvector(TAU * (j * grid / n) as f64 / grid as f64, grid).map(|(_, e)| e.into_values()))
                .collect::<Result<_>>()?;
            let m = DMatrix::from_fn(grid, n, |i, j| cols[j][i]);
            let (rank, _) = numerical_rank(m, 1e-10);
            let ok = err <= tolerance && rank == n;
            Ok(PeriodicReport {
                period: Some(q),
                return_error: Some(err),
                span_rank: Some(rank),
                span_vectors: Some(n),
                verdict: if ok { Verdict::Yes } else { Verdict::Inconclusive },
                note: "grid eigenvalues are roots of unity; periodic eigen-combinations span".into(),
            })
        }
        _ => {
            if !shift_has_unimodular_eigenvectors(spec) {
                return Ok(PeriodicReport {
                    period: None,
                    return_error: None,
                    span_rank: None,
                    span_vectors: None,
                    verdict: Verdict::Inconclusive,
                    note: "no evidence: the weights admit no unimodular eigenvectors".into(),
                });
            }
            let dim = spec.dim();
            let q = 8;
            let len = dim + 64;
            let mut x = vec![Complex64::new(0.0, 0.0); len];
            for j in 0..q {
                let e = shift_eigenvector(spec, Complex64::from_polar(1.0, TAU * j as f64 / q as f64), len);
                let c = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
                for (xi, ei) in x.iter_mut().zip(&e) {
                    *xi += c * ei;
                }
            }
            // error measured on the observed window, which the finite
            // buffer reproduces exactly for `len - dim` steps
            let traj = orbit(spec, &x, q)?;
            let head = |v: &State| -> State { v[..dim].to_vec() };
            let xe = head(&x);
            let err = spec.distance(&head(&traj.states()[q]), &xe) / spec.norm(&xe);
            let cols: Vec<State> = (0..dim)
                .map(|j| shift_eigenvector(spec, Complex64::from_polar(1.0, TAU * j as f64 / dim as f64), dim))
                .collect();
            let m = DMatrix::from_fn(dim, dim, |i, j| cols[j][i]);
            let (rank, _) = numerical_rank(m, 1e-8);
            let ok = err <= tolerance && rank == dim;
            Ok(PeriodicReport {
                period: Some(q),
                return_error: Some(err),
                span_rank: Some(rank),
                span_vectors: Some(dim),
                verdict: if ok { Verdict::Yes } else { Verdict::Inconclusive },
                note: "root-of-unity eigenvectors give periodic points spanning the window".into(),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyndeticReport {
    pub visits: usize,
    pub inspected_window: usize,
    pub max_gap: Option<usize>,
    pub gap_bound: usize,
    pub verdict: Verdict,
    pub note: String,
}

/// Window syndeticity of the certified return set `N(U, U)`: its gaps on
/// the first half of the window must stay within `gap_fraction · N`.
pub fn syndetic_probe(traj: &Trajectory, ball: &BallSpec, gap_fraction: f64) -> Result<SyndeticReport> {
    let window = traj.len();
    let bound = ((gap_fraction * window as f64).ceil() as usize).max(1);
    let visits = hitting_times(traj, ball)?;
    if visits.len() < 2 {
        return Ok(SyndeticReport {
            visits: visits.len(),
            inspected_window: window / 2,
            max_gap: None,
            gap_bound: bound,
            verdict: Verdict::Inconclusive,
            note: "fewer than two visits to U".into(),
        });
    }
    let check = return_set_identity_check(traj, ball)?;
    if !check.pass {
        return Err(LabError::InvalidArgument("return-set certification failed on replay".into()));
    }
    let half = check.certified.truncate(window / 2)?;
    let gap = max_gap(&half);
    Ok(SyndeticReport {
        visits: visits.len(),
        inspected_window: half.window(),
        max_gap: Some(gap),
        gap_bound: bound,
        verdict: if gap <= bound { Verdict::Yes } else { Verdict::No },
        note: "certified N(U,U) gaps on the first half window".into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VisitDensityReport {
    pub visits: usize,
    pub upper_density: f64,
    pub lower_density: f64,
    pub threshold: f64,
    pub ufh: Verdict,
    pub lfh: Verdict,
}

/// Ladder densities of the visit set against a positivity threshold.
pub fn visit_density_probe(traj: &Trajectory, ball: &BallSpec, threshold: f64) -> Result<VisitDensityReport> {
    let visits = hitting_times(traj, ball)?;
    let ud = upper_density(&visits);
    let ld = lower_density(&visits);
    let verdict = |d: f64| if d >= threshold { Verdict::Yes } else { Verdict::No };
    Ok(VisitDensityReport {
        visits: visits.len(),
        upper_density: ud,
        lower_density: ld,
        threshold,
        ufh: verdict(ud),
        lfh: verdict(ld),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixtureReport {
    pub components: usize,
    pub steps: usize,
    pub cover_balls: usize,
    pub min_mass: f64,
    pub verdict: Verdict,
}

/// Builds `μ = Σ 2^{-i} μ_i` from the empirical measures of `components`
/// torus orbits and checks that every ball of a covering family receives
/// positive mass.
pub fn invariant_mixture_probe(spec: &SystemSpec, components: usize, steps: usize, seed: u64) -> Result<MixtureReport> {
    let SystemSpec::TorusRotation { angles } = spec else {
        return Err(LabError::InvalidArgument("mixture probe applies to torus rotations".into()));
    };
    let k = angles.len();
    let per_axis: usize = if k == 1 { 16 } else if k <= 3 { 4 } else { 2 };
    let cells = per_axis.pow(k as u32);
    // covering radius of the product grid of centres
    let radius = 1.01 * (k as f64).sqrt() * 2.0 * (std::f64::consts::PI / (2 * per_axis) as f64).sin();
    let centers: Vec<State> = (0..cells)
        .map(|c| {
            let mut c = c;
            (0..k)
                .map(|_| {
                    let a = TAU * (c % per_axis) as f64 / per_axis as f64;
                    c /= per_axis;
                    Complex64::from_polar(1.0, a)
                })
                .collect()
        })
        .collect();
    let mut mass = vec![0.0; cells];
    let total: f64 = (1..=components).map(|i| 0.5f64.powi(i as i32)).sum();
    for i in 1..=components {
        let x0 = transitive_start(spec, &[], steps, 0, derive_seed(seed, &format!("mixture-{i}")))?;
        let traj = orbit(spec, &x0, steps - 1)?;
        let w = 0.5f64.powi(i as i32) / total / steps as f64;
        for x in traj.states() {
            for (c, m) in centers.iter().zip(mass.iter_mut()) {
                if spec.distance(x, c) < radius {
                    *m += w;
                }
            }
        }
    }
    let min_mass = mass.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(MixtureReport {
        components,
        steps,
        cover_balls: cells,
        min_mass,
        verdict: if min_mass > 0.0 { Verdict::Yes } else { Verdict::No },
    })
}

/// Invariance of the Gaussian measure carried by `m` unimodular shift
/// eigenvectors, on a buffer with 64 coordinates of slack.
pub fn shift_gaussian_invariance(
    spec: &SystemSpec,
    m: usize,
    count: usize,
    seed: u64,
    stat_tol: f64,
) -> Result<Option<crate::gauss::InvarianceReport>> {
    if !shift_has_unimodular_eigenvectors(spec) {
        return Ok(None);
    }
    let len = spec.dim() + 64;
    let w = (1.0 / m as f64).sqrt();
    let mus: Vec<Complex64> = (0..m)
        .map(|j| Complex64::from_polar(1.0, TAU * (j as f64 + 0.5) / m as f64))
        .collect();
    let cols: Vec<State> = mus.iter().map(|mu| shift_eigenvector(spec, *mu, len)).collect();
    let a = DMatrix::from_fn(len, m, |i, j| cols[j][i] * w);
    let image_cols: Vec<State> = (0..m).map(|j| spec.step(&a.column(j).iter().copied().collect::<State>())).collect();
    let b = DMatrix::from_fn(len, m, |i, j| image_cols[j][i]);
    let ad = DMatrix::from_fn(len, m, |i, j| a[(i, j)] * mus[j]);
    let rho = (&b - &ad).norm() / a.norm();
    Ok(Some(factor_invariance(&a, &b, rho, count, seed, stat_tol)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hits::upper_banach_density;
    use crate::kalish::KalishOperator;

    fn rotation() -> SystemSpec {
        SystemSpec::TorusRotation {
            angles: vec![TAU * (2f64.sqrt() - 1.0)],
        }
    }

    fn one() -> State {
        vec![Complex64::new(1.0, 0.0)]
    }

    #[test]
    fn hitting_examples() {
        let spec = SystemSpec::ScalarMultipleShift { lambda: 2.0, dim: 4 };
        let t = orbit(&spec, &vec![Complex64::new(0.0, 0.0); 20], 10).unwrap();
        assert_eq!(hitting_times(&t, &BallSpec::origin(4, 0.1).unwrap()).unwrap(), WindowedSet::full(11).unwrap());
        let far = BallSpec::new(vec![Complex64::new(5.0, 0.0); 4], 1.0).unwrap();
        assert!(hitting_times(&t, &far).unwrap().is_empty());
    }

    #[test]
    fn rotation_visits_equidistribute() {
        let t = orbit(&rotation(), &one(), 100_000 - 1).unwrap();
        let arc = BallSpec::arc(1.0, 0.2 * TAU).unwrap();
        let v = hitting_times(&t, &arc).unwrap();
        let d = v.len() as f64 / v.window() as f64;
        assert!((d - 0.2).abs() <= 0.01, "{d}");
    }

    #[test]
    fn birkhoff_examples() {
        let t = orbit(&rotation(), &one(), 9_999).unwrap();
        let arc = BallSpec::arc(2.0, 0.2 * TAU).unwrap();
        let spec = t.spec().clone();
        let ind = |x: &[Complex64]| f64::from(u8::from(arc.contains(&spec, x)));
        let unit = |_: &[Complex64]| 1.0;
        let r = birkhoff_probe(&t, &[&unit, &ind], &[1000, 5000, 10_000]).unwrap();
        assert!(r.averages[0].iter().all(|a| *a == 1.0));
        assert!((r.averages[1][2] - 0.2).abs() < 0.01);
        assert!(r.cauchy_gaps[1] <= 2.0 / (10_000f64).sqrt());
        assert!(birkhoff_probe(&t, &[&unit], &[0]).is_err());
    }

    #[test]
    fn gaussian_birkhoff_agrees_with_fresh_draws() {
        let model = kalish_model(256, 8).unwrap();
        let tr = model.covariance_trace();
        let grid = 256;
        let f = move |x: &[Complex64]| {
            let n2: f64 = x.iter().map(|v| v.norm_sqr()).sum::<f64>() * TAU / grid as f64;
            (-n2 / tr).exp()
        };
        let r = gaussian_birkhoff_comparison(&model, &f, 200, 40, 4000, 3).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn return_set_identity() {
        let t = orbit(&rotation(), &one(), 20_000).unwrap();
        let arc = BallSpec::arc(0.5, 0.2 * TAU).unwrap();
        let r = return_set_identity_check(&t, &arc).unwrap();
        assert!(r.pass && r.replay_ok);
        assert!(r.certified_max_gap <= (TAU / (0.2 * TAU)).ceil() as usize + 1, "{}", r.certified_max_gap);
        for (d, [l, k]) in r.certified.elements().iter().zip(&r.witnesses) {
            assert_eq!(k - l, *d);
        }
        let other = BallSpec::arc(3.5, 0.2 * TAU).unwrap();
        let bad = return_set_identity_check_with(&t, &arc, &other).unwrap();
        assert!(!bad.pass && bad.first_failure.is_some());
        let never = BallSpec::origin(1, 0.1).unwrap();
        assert!(return_set_identity_check(&t, &never).is_err());
    }

    #[test]
    fn shift_is_weak_mixing_compatible() {
        let spec = SystemSpec::ScalarMultipleShift { lambda: 2.0, dim: 32 };
        let mut rng = rng_for(1, "centres");
        let u = BallSpec::new(random_unit(32, &mut rng), 0.25).unwrap();
        let v = BallSpec::new(random_unit(32, &mut rng), 0.25).unwrap();
        let w0 = BallSpec::origin(32, 0.25).unwrap();
        let r = three_open_sets_probe(&spec, &u, &v, &w0, 900, 8, 7).unwrap();
        assert_eq!(r.verdict, Verdict::Yes, "{r:?}");
        // the witness replays on the same seed
        let x0 = transitive_start(&spec, &[&u, &w0, &v, &w0], 900, 8, 7).unwrap();
        let t = orbit(&spec, &x0, 900).unwrap();
        let [[l, lw], [m, mv]] = r.witness_pairs.unwrap();
        assert_eq!(lw - l, r.witness.unwrap());
        assert_eq!(mv - m, r.witness.unwrap());
        assert!(u.contains(&spec, &t.states()[l]) && w0.contains(&spec, &t.states()[lw]));
        assert!(w0.contains(&spec, &t.states()[m]) && v.contains(&spec, &t.states()[mv]));
        let deg = three_open_sets_probe(&spec, &w0, &w0, &w0, 900, 8, 7).unwrap();
        assert_eq!(deg.verdict, Verdict::Yes);
    }

    #[test]
    fn fixed_point_thickness_grows() {
        // the run in the zero ball that starts at a small target lengthens
        // as the target approaches 0
        let spec = SystemSpec::ScalarMultipleShift { lambda: 2.0, dim: 16 };
        let w0 = BallSpec::origin(16, 0.25).unwrap();
        let far: State = vec![Complex64::new(0.5, 0.0); 16];
        let mut prev = 0;
        for e in [6, 10, 14] {
            let y: State = vec![Complex64::new(2f64.powi(-e), 0.0); 16];
            let x = shift_seed_vector(&spec, &[y, far.clone()], 32, 64).unwrap();
            let t = orbit(&spec, &x, 64).unwrap();
            let visits = hitting_times(&t, &w0).unwrap();
            let run = (0..t.len()).take_while(|&i| visits.contains(i)).count();
            assert!(run > prev, "{run} after {prev}");
            prev = run;
        }
    }

    #[test]
    fn torus_is_not_weak_mixing_compatible() {
        let spec = SystemSpec::TorusRotation {
            angles: vec![TAU * (2f64.sqrt() - 1.0), TAU * (3f64.sqrt() - 1.0)],
        };
        let c = |a: f64, b: f64| vec![Complex64::from_polar(1.0, a), Complex64::from_polar(1.0, b)];
        let u = BallSpec::new(c(0.0, 0.0), 0.8).unwrap();
        let v = BallSpec::new(c(3.0, 2.0), 0.8).unwrap();
        let w0 = BallSpec::origin(2, 0.5).unwrap();
        let r = three_open_sets_probe(&spec, &u, &v, &w0, 5000, 8, 1).unwrap();
        assert_eq!(r.verdict, Verdict::No);
    }

    #[test]
    fn eigen_span_examples() {
        let k = eigen_span_probe(&SystemSpec::Kalish { grid: 1024 }, 64, 1e-8).unwrap();
        assert_eq!((k.vectors, k.rank, k.verdict), (64, 64, Verdict::Yes));
        let t = eigen_span_probe(
            &SystemSpec::TorusRotation {
                angles: vec![1.0, 2.0, 3.0],
            },
            64,
            1e-8,
        )
        .unwrap();
        assert_eq!(t.rank, 3);
        let s = eigen_span_probe(&SystemSpec::ScalarMultipleShift { lambda: 2.0, dim: 24 }, 64, 1e-8).unwrap();
        assert_eq!((s.rank, s.verdict), (24, Verdict::Yes));
        let w = eigen_span_probe(
            &SystemSpec::WeightedShift {
                dim: 8,
                weights: vec![2.0, 0.5],
            },
            8,
            1e-8,
        )
        .unwrap();
        assert_eq!(w.verdict, Verdict::Inconclusive);
        assert!(w.note.contains("no evidence"));
    }

    #[test]
    fn periodic_examples() {
        assert_eq!(periodic_density_probe(&rotation(), 1e-6, 1).unwrap().verdict, Verdict::No);
        let rational = SystemSpec::TorusRotation {
            angles: vec![TAU / 5.0, TAU / 3.0],
        };
        let r = periodic_density_probe(&rational, 1e-9, 1).unwrap();
        assert_eq!((r.period, r.verdict), (Some(15), Verdict::Yes));
        let k = periodic_density_probe(&SystemSpec::Kalish { grid: 128 }, 1e-6, 1).unwrap();
        assert_eq!(k.verdict, Verdict::Yes, "{k:?}");
        let s = periodic_density_probe(&SystemSpec::ScalarMultipleShift { lambda: 2.0, dim: 24 }, 1e-6, 1).unwrap();
        assert_eq!(s.verdict, Verdict::Yes, "{s:?}");
    }

    #[test]
    fn seed_vector_refuses_contracting_weights() {
        let spec = SystemSpec::ScalarMultipleShift { lambda: 0.5, dim: 4 };
        let y = vec![Complex64::new(1.0, 0.0); 4];
        assert!(matches!(
            shift_seed_vector(&spec, &[y], 4, 100),
            Err(LabError::NoTransitiveOrbit(_))
        ));
    }

    #[test]
    fn syndetic_and_density() {
        let t = orbit(&rotation(), &one(), 9_999).unwrap();
        let arc = BallSpec::arc(0.5, 0.2 * TAU).unwrap();
        let s = syndetic_probe(&t, &arc, 0.125).unwrap();
        assert_eq!(s.verdict, Verdict::Yes);
        let d = visit_density_probe(&t, &arc, 0.002).unwrap();
        assert_eq!((d.ufh, d.lfh), (Verdict::Yes, Verdict::Yes));
        let v = hitting_times(&t, &arc).unwrap();
        assert!(d.upper_density <= upper_banach_density(&v, 16).unwrap());
    }

    #[test]
    fn mixture_covers_torus() {
        let spec = SystemSpec::TorusRotation {
            angles: vec![TAU * (2f64.sqrt() - 1.0), TAU * (3f64.sqrt() - 1.0)],
        };
        let r = invariant_mixture_probe(&spec, 3, 2000, 5).unwrap();
        assert_eq!(r.verdict, Verdict::Yes);
    }

    #[test]
    fn shift_gaussian_measure_is_invariant() {
        let spec = SystemSpec::ScalarMultipleShift { lambda: 2.0, dim: 24 };
        let r = shift_gaussian_invariance(&spec, 8, 10_000, 3, 0.05).unwrap().unwrap();
        assert!(r.pass, "{r:?}");
        let none = SystemSpec::ScalarMultipleShift { lambda: 0.9, dim: 24 };
        assert!(shift_gaussian_invariance(&none, 8, 100, 3, 0.05).unwrap().is_none());
    }

    #[test]
    fn kalish_orbit_stays_bounded() {
        let model = kalish_model(2048, 8).unwrap();
        let x0 = sample(&model, 1, 11).unwrap().remove(0);
        let t = orbit(&SystemSpec::Kalish { grid: 2048 }, x0.values(), 1000).unwrap();
        assert_eq!(t.len(), 1001);
        let _ = KalishOperator { grid: 2048 };
    }
}
