//! Exact combinatorics on finite windows of visit times.
//!
//! Asymptotic densities are replaced by window functionals: a
//! [`WindowedSet`] is a subset of `[0, N)` and every quantity reported here
//! is computed exactly on that window.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::schema;

/// Rungs in the geometric prefix ladder used by the density proxies.
pub const LADDER_RUNGS: usize = 17;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowedSet {
    window: usize,
    elements: Vec<usize>,
}

impl WindowedSet {
    pub fn new(window: usize, elements: Vec<usize>) -> Result<Self> {
        if window == 0 {
            return Err(LabError::InvalidArgument("window must be >= 1".into()));
        }
        if let Some(p) = elements.windows(2).position(|w| w[0] >= w[1]) {
            return Err(LabError::InvalidArgument(format!(
                "elements must be strictly increasing (index {})",
                p + 1
            )));
        }
        if let Some(&last) = elements.last() {
            if last >= window {
                return Err(LabError::InvalidArgument(format!(
                    "element {last} lies outside the window [0, {window})"
                )));
            }
        }
        Ok(Self { window, elements })
    }

    pub fn empty(window: usize) -> Result<Self> {
        Self::new(window, Vec::new())
    }

    pub fn full(window: usize) -> Result<Self> {
        Self::new(window, (0..window).collect())
    }

    pub fn from_indicator(flags: &[bool]) -> Result<Self> {
        Self::new(
            flags.len(),
            flags.iter().enumerate().filter(|(_, f)| **f).map(|(i, _)| i).collect(),
        )
    }

    pub fn from_predicate(window: usize, pred: impl Fn(usize) -> bool) -> Result<Self> {
        Self::new(window, (0..window).filter(|&t| pred(t)).collect())
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn elements(&self) -> &[usize] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, t: usize) -> bool {
        self.elements.binary_search(&t).is_ok()
    }

    fn prefix_counts(&self) -> Vec<usize> {
        let mut pre = vec![0usize; self.window + 1];
        let mut it = self.elements.iter().peekable();
        for t in 0..self.window {
            let hit = it.next_if(|&&e| e == t).is_some();
            pre[t + 1] = pre[t] + usize::from(hit);
        }
        pre
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SetDoc = serde_json::from_str(text)?;
        schema::check(schema::WINDOWED_SET, &doc.schema)?;
        Self::new(doc.window, doc.elements)
    }

    /// Newline-delimited indices with a `# window: N` header.
    pub fn to_text(&self) -> String {
        let mut s = format!("# window: {}\n", self.window);
        for e in &self.elements {
            let _ = writeln!(s, "{e}");
        }
        s
    }

    /// Parses newline-delimited indices. Blank lines and `#` comments are
    /// skipped; a `# window: N` comment sets the window, which otherwise
    /// defaults to one past the largest element.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut window = None;
        let mut elements = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(c) = line.strip_prefix('#') {
                if let Some(v) = c.trim().strip_prefix("window:") {
                    window = Some(v.trim().parse::<usize>().map_err(|e| {
                        LabError::InvalidArgument(format!("line {}: bad window: {e}", lineno + 1))
                    })?);
                }
                continue;
            }
            elements.push(line.parse::<usize>().map_err(|e| {
                LabError::InvalidArgument(format!("line {}: {e}", lineno + 1))
            })?);
        }
        let window = window.unwrap_or_else(|| elements.last().map_or(1, |e| e + 1));
        Self::new(window, elements)
    }
}

impl Serialize for WindowedSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        SetDoc {
            schema: schema::WINDOWED_SET.to_string(),
            window: self.window,
            elements: self.elements.clone(),
        }
        .serialize(serializer)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SetDoc {
    schema: String,
    window: usize,
    elements: Vec<usize>,
}

/// Prefix lengths `⌈N/2⌉ = n_0 < … < n_k = N`, geometrically spaced.
pub fn prefix_ladder(window: usize) -> Vec<usize> {
    let lo = window.div_ceil(2).max(1);
    let ratio = window as f64 / lo as f64;
    let mut out: Vec<usize> = (0..LADDER_RUNGS)
        .map(|i| {
            let n = (lo as f64 * ratio.powf(i as f64 / (LADDER_RUNGS - 1) as f64)).round() as usize;
            n.clamp(lo, window)
        })
        .collect();
    out.dedup();
    if out.last() != Some(&window) {
        out.push(window);
    }
    out
}

fn ladder_densities(set: &WindowedSet) -> Vec<f64> {
    let pre = set.prefix_counts();
    prefix_ladder(set.window)
        .into_iter()
        .map(|n| pre[n] as f64 / n as f64)
        .collect()
}

/// Window proxy for the upper density: the largest prefix density on the
/// ladder.
pub fn upper_density(set: &WindowedSet) -> f64 {
    ladder_densities(set).into_iter().fold(0.0, f64::max)
}

/// Window proxy for the lower density: the smallest prefix density on the
/// ladder.
pub fn lower_density(set: &WindowedSet) -> f64 {
    ladder_densities(set).into_iter().fold(1.0, f64::min)
}

/// Exact maximum of `|L ∩ I| / |I|` over intervals `I ⊆ [0, N)` with
/// `|I| >= min_len`.
///
/// An interval of length at least `2·min_len` splits into two intervals of
/// length at least `min_len`, one of which is at least as dense, so only
/// lengths in `[min_len, 2·min_len)` need scanning: `O(N · min_len)`.
pub fn upper_banach_density(set: &WindowedSet, min_len: usize) -> Result<f64> {
    if min_len == 0 || min_len > set.window {
        return Err(LabError::InvalidArgument(format!(
            "min_len {min_len} must lie in [1, {}]",
            set.window
        )));
    }
    let pre = set.prefix_counts();
    let (mut best_c, mut best_l) = (0usize, 1usize);
    let max_len = (2 * min_len - 1).min(set.window);
    for len in min_len..=max_len {
        for start in 0..=set.window - len {
            let c = pre[start + len] - pre[start];
            if c * best_l > best_c * len {
                best_c = c;
                best_l = len;
            }
        }
    }
    Ok(best_c as f64 / best_l as f64)
}

/// `{a − b : a, b ∈ L, a ≥ b}` in the same window.
pub fn difference_set(set: &WindowedSet) -> Result<WindowedSet> {
    if set.is_empty() {
        return Err(LabError::InvalidArgument(
            "difference set of the empty set".into(),
        ));
    }
    cross_difference_set(set, set)
}

fn to_bits(set: &WindowedSet, words: usize) -> Vec<u64> {
    let mut bits = vec![0u64; words];
    for &e in &set.elements {
        bits[e / 64] |= 1 << (e % 64);
    }
    bits
}

/// `{a − b : a ∈ later, b ∈ earlier, a ≥ b}`, in the window of `later`.
/// For visit sets of one orbit this certifies transfer times from the
/// second set's target to the first's.
pub fn cross_difference_set(later: &WindowedSet, earlier: &WindowedSet) -> Result<WindowedSet> {
    let words = later.window.div_ceil(64);
    let bits = to_bits(later, words);
    let mut acc = vec![0u64; words];
    for &b in &earlier.elements {
        if b >= later.window {
            break;
        }
        // acc |= bits >> b
        let (ws, bs) = (b / 64, b % 64);
        for i in 0..words - ws {
            let lo = bits[i + ws] >> bs;
            let hi = if bs > 0 && i + ws + 1 < words {
                bits[i + ws + 1] << (64 - bs)
            } else {
                0
            };
            acc[i] |= lo | hi;
        }
    }
    let elements = (0..later.window)
        .filter(|&t| acc[t / 64] >> (t % 64) & 1 == 1)
        .collect();
    WindowedSet::new(later.window, elements)
}

impl WindowedSet {
    /// Restriction to `[0, window)`.
    pub fn truncate(&self, window: usize) -> Result<WindowedSet> {
        let window = window.min(self.window);
        WindowedSet::new(
            window,
            self.elements.iter().copied().take_while(|&e| e < window).collect(),
        )
    }
}

/// Largest gap in `S` counting both window boundaries: with virtual
/// elements at `-1` and `N`, every run of `g` consecutive integers in
/// `[0, N)` meets `S` whenever `max_gap(S) <= g`. The empty set has gap `N`.
pub fn max_gap(set: &WindowedSet) -> usize {
    let (Some(&first), Some(&last)) = (set.elements.first(), set.elements.last()) else {
        return set.window;
    };
    let inner = set
        .elements
        .windows(2)
        .map(|w| w[1] - w[0])
        .max()
        .unwrap_or(0);
    inner.max(first + 1).max(set.window - last)
}

/// Length of the longest run of consecutive integers inside `S`.
pub fn longest_interval(set: &WindowedSet) -> usize {
    longest_run(set).map_or(0, |(_, len)| len)
}

/// Start and length of the first longest run.
pub fn longest_run(set: &WindowedSet) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    let mut i = 0;
    let e = &set.elements;
    while i < e.len() {
        let mut j = i + 1;
        while j < e.len() && e[j] == e[j - 1] + 1 {
            j += 1;
        }
        if best.is_none_or(|(_, l)| j - i > l) {
            best = Some((e[i], j - i));
        }
        i = j;
    }
    best
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransferReport {
    pub shift: usize,
    pub checked: usize,
    pub pushed_out: usize,
    pub first_violation: Option<usize>,
    pub pass: bool,
}

/// Checks `n + N(W, W) ⊆ N(U, V)` inside the window of `nuv`.
pub fn transfer_witness(nuv: &WindowedSet, nww: &WindowedSet, n: usize) -> TransferReport {
    let mut checked = 0;
    let mut pushed_out = 0;
    let mut first_violation = None;
    for &t in &nww.elements {
        let s = n + t;
        if s >= nuv.window {
            pushed_out += 1;
            continue;
        }
        checked += 1;
        if first_violation.is_none() && !nuv.contains(s) {
            first_violation = Some(s);
        }
    }
    TransferReport {
        shift: n,
        checked,
        pushed_out,
        first_violation,
        pass: first_violation.is_none(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn evens(n: usize) -> WindowedSet {
        WindowedSet::from_predicate(n, |t| t % 2 == 0).unwrap()
    }

    fn blocks(window: usize) -> WindowedSet {
        // ∪_k [2^k, 2^k + k)
        let mut e = Vec::new();
        let mut k = 0;
        while (1usize << k) < window {
            for t in (1usize << k)..((1usize << k) + k).min(window) {
                e.push(t);
            }
            k += 1;
        }
        e.sort_unstable();
        e.dedup();
        WindowedSet::new(window, e).unwrap()
    }

    #[test]
    fn validation() {
        assert!(WindowedSet::new(0, vec![]).is_err());
        assert!(WindowedSet::new(5, vec![1, 1]).is_err());
        assert!(WindowedSet::new(5, vec![3, 2]).is_err());
        assert!(WindowedSet::new(5, vec![5]).is_err());
        assert!(WindowedSet::empty(5).unwrap().is_empty());
    }

    #[test]
    fn ladder_shape() {
        let l = prefix_ladder(1000);
        assert_eq!(l[0], 500);
        assert_eq!(*l.last().unwrap(), 1000);
        assert!(l.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(prefix_ladder(1), vec![1]);
    }

    #[test]
    fn density_examples() {
        let e = evens(1000);
        assert!((upper_density(&e) - 0.5).abs() <= 1.0 / 500.0);
        assert!((lower_density(&e) - 0.5).abs() <= 1.0 / 500.0);
        let f = WindowedSet::full(777).unwrap();
        assert_eq!(upper_density(&f), 1.0);
        assert_eq!(lower_density(&f), 1.0);

        let b = blocks(1 << 16);
        assert!(lower_density(&b) < 0.002);
        assert!(upper_density(&b) < upper_banach_density(&b, 8).unwrap());
    }

    #[test]
    fn banach_examples() {
        let e = evens(1000);
        let d = upper_banach_density(&e, 16).unwrap();
        assert!((0.5..=0.5 + 1.0 / 16.0).contains(&d));
        assert!(upper_banach_density(&blocks(1 << 16), 8).unwrap() >= 15.0 / 16.0);
        assert_eq!(upper_banach_density(&WindowedSet::empty(100).unwrap(), 4).unwrap(), 0.0);
        assert!(upper_banach_density(&e, 0).is_err());
        assert!(upper_banach_density(&e, 1001).is_err());
    }

    #[test]
    fn difference_examples() {
        let m3 = WindowedSet::from_predicate(300, |t| t % 3 == 0).unwrap();
        assert_eq!(difference_set(&m3).unwrap(), m3);
        let s = WindowedSet::new(10, vec![0, 1, 4]).unwrap();
        assert_eq!(difference_set(&s).unwrap().elements(), &[0, 1, 3, 4]);
        assert!(difference_set(&WindowedSet::empty(4).unwrap()).is_err());
        // crossing word boundaries
        let w = WindowedSet::new(200, vec![3, 70, 140, 199]).unwrap();
        assert_eq!(
            difference_set(&w).unwrap().elements(),
            &[0, 59, 67, 70, 129, 137, 196]
        );
    }

    #[test]
    fn cross_differences() {
        let a = WindowedSet::new(20, vec![5, 9]).unwrap();
        let b = WindowedSet::new(20, vec![2, 7]).unwrap();
        assert_eq!(cross_difference_set(&a, &b).unwrap().elements(), &[2, 3, 7]);
        assert_eq!(a.truncate(8).unwrap().elements(), &[5]);
        assert_eq!(a.truncate(8).unwrap().window(), 8);
    }

    #[test]
    fn gap_examples() {
        assert_eq!(max_gap(&evens(1000)), 2);
        assert_eq!(max_gap(&WindowedSet::new(10, vec![0, 7]).unwrap()), 7);
        assert_eq!(max_gap(&difference_set(&evens(1000)).unwrap()), 2);
        assert_eq!(max_gap(&WindowedSet::empty(9).unwrap()), 9);
        // leading gap: [0, 5) avoids {5}
        assert_eq!(max_gap(&WindowedSet::new(6, vec![5]).unwrap()), 6);
    }

    #[test]
    fn interval_examples() {
        assert_eq!(longest_interval(&evens(1000)), 1);
        assert_eq!(longest_interval(&blocks(1 << 16)), 15);
        assert_eq!(longest_interval(&WindowedSet::full(33).unwrap()), 33);
        assert_eq!(longest_interval(&WindowedSet::empty(33).unwrap()), 0);
    }

    #[test]
    fn transfer_examples() {
        let nww = WindowedSet::from_predicate(100, |t| t % 5 == 0).unwrap();
        let nuv = WindowedSet::from_predicate(100, |t| t >= 2 && (t - 2) % 5 == 0).unwrap();
        let ok = transfer_witness(&nuv, &nww, 2);
        assert!(ok.pass);
        assert_eq!(ok.pushed_out, 0);
        let mut e = nuv.elements().to_vec();
        e.remove(3);
        let broken = WindowedSet::new(100, e).unwrap();
        let bad = transfer_witness(&broken, &nww, 2);
        assert!(!bad.pass);
        assert_eq!(bad.first_violation, Some(17));
        let shifted = transfer_witness(&nuv, &nww, 7);
        assert_eq!(shifted.pushed_out, 1);
    }

    #[test]
    fn serialization() {
        let s = WindowedSet::new(10, vec![0, 3, 9]).unwrap();
        let j = s.to_json().unwrap();
        assert!(j.contains("\"schema\":\"windowed-set/1\""));
        assert_eq!(WindowedSet::from_json(&j).unwrap(), s);
        assert_eq!(WindowedSet::from_text(&s.to_text()).unwrap(), s);
        let bare = WindowedSet::from_text("1\n\n4\n").unwrap();
        assert_eq!(bare.window(), 5);
        assert!(WindowedSet::from_text("1\nx\n").is_err());
    }
}
