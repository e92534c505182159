//! Information functionals on window laws: entropy, deficiency, total
//! variation, KL divergence and the Pinsker bound. All values are in nats.

use std::collections::HashMap;
use std::hash::Hash;

use serde::Serialize;

use crate::error::{checked_state_space, Error, Result};
use crate::lattice::{Alphabet, CellSet, Symbol};

/// Default cap on the number of patterns held by a [`WindowDistribution`].
pub const STATE_SPACE_CAP: usize = 1 << 24;

const SUM_TOLERANCE: f64 = 1e-10;

/// Neumaier-compensated sum in a fixed order.
pub fn stable_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// `−Σ p log p` over a probability slice, with `0 log 0 = 0`.
pub fn entropy_of(p: &[f64]) -> f64 {
    stable_sum(p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln())).max(0.0)
}

/// `D(p ‖ q)`; infinite when `p` charges a zero of `q`.
pub fn kl_of(p: &[f64], q: &[f64]) -> f64 {
    let mut terms = Vec::with_capacity(p.len());
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            terms.push(a * (a / b).ln());
        }
    }
    stable_sum(terms).max(0.0)
}

/// Half the L1 distance between two probability slices.
pub fn tv_of(p: &[f64], q: &[f64]) -> f64 {
    0.5 * stable_sum(p.iter().zip(q).map(|(a, b)| (a - b).abs()))
}

/// The exact law of a pattern on a finite window.
///
/// `probs` is indexed by the mixed-radix pattern code over the window cells
/// in canonical order, first cell most significant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowDistribution {
    window: CellSet,
    alphabet: Alphabet,
    probs: Vec<f64>,
}

impl WindowDistribution {
    pub fn new(window: CellSet, alphabet: Alphabet, probs: Vec<f64>) -> Result<Self> {
        let size = checked_state_space(alphabet.size(), window.len(), STATE_SPACE_CAP)?;
        if probs.len() != size {
            return Err(Error::ShapeMismatch(format!(
                "{} probabilities for {size} patterns",
                probs.len()
            )));
        }
        if probs.iter().any(|&x| x < 0.0 || !x.is_finite()) {
            return Err(Error::InvalidDistribution(
                "negative or non-finite entry".into(),
            ));
        }
        let s = stable_sum(probs.iter().copied());
        if (s - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("sums to {s}")));
        }
        Ok(Self {
            window,
            alphabet,
            probs,
        })
    }

    pub fn uniform(window: CellSet, alphabet: Alphabet) -> Result<Self> {
        let size = checked_state_space(alphabet.size(), window.len(), STATE_SPACE_CAP)?;
        let probs = vec![1.0 / size as f64; size];
        Ok(Self {
            window,
            alphabet,
            probs,
        })
    }

    pub fn point_mass(window: CellSet, alphabet: Alphabet, pattern: &[Symbol]) -> Result<Self> {
        let size = checked_state_space(alphabet.size(), window.len(), STATE_SPACE_CAP)?;
        if pattern.len() != window.len() {
            return Err(Error::ShapeMismatch(
                "pattern length differs from window".into(),
            ));
        }
        let mut probs = vec![0.0; size];
        probs[encode_pattern(pattern, alphabet.size())] = 1.0;
        Ok(Self {
            window,
            alphabet,
            probs,
        })
    }

    /// Product of independent per-cell laws, one per window cell.
    pub fn product_of_cells(
        window: CellSet,
        alphabet: Alphabet,
        cells: &[Vec<f64>],
    ) -> Result<Self> {
        let k = alphabet.size();
        if cells.len() != window.len() || cells.iter().any(|c| c.len() != k) {
            return Err(Error::ShapeMismatch(
                "per-cell laws do not match window".into(),
            ));
        }
        checked_state_space(k, window.len(), STATE_SPACE_CAP)?;
        let mut probs = vec![1.0];
        for cell in cells {
            probs = probs
                .iter()
                .flat_map(|&p| cell.iter().map(move |&c| p * c))
                .collect();
        }
        Self::new(window, alphabet, probs)
    }

    pub fn window(&self) -> &CellSet {
        &self.window
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }

    pub fn prob(&self, pattern: &[Symbol]) -> f64 {
        self.probs[encode_pattern(pattern, self.alphabet.size())]
    }

    /// `|A| · log |Σ|`.
    pub fn max_entropy(&self) -> f64 {
        self.window.len() as f64 * self.alphabet.h_max()
    }

    pub fn entropy(&self) -> f64 {
        entropy_of(&self.probs)
    }

    /// `Ξ = |A| h_max − H`, clamped at zero against rounding.
    pub fn deficiency(&self) -> f64 {
        (self.max_entropy() - self.entropy()).max(0.0)
    }

    /// KL divergence from the uniform law, computed term by term.
    pub fn kl_to_uniform(&self) -> f64 {
        let u = 1.0 / self.probs.len() as f64;
        stable_sum(
            self.probs
                .iter()
                .filter(|&&p| p > 0.0)
                .map(|&p| p * (p / u).ln()),
        )
        .max(0.0)
    }

    pub fn kl_divergence(&self, other: &WindowDistribution) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(kl_of(&self.probs, &other.probs))
    }

    pub fn tv_distance(&self, other: &WindowDistribution) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(tv_of(&self.probs, &other.probs))
    }

    pub fn tv_to_uniform(&self) -> f64 {
        let u = 1.0 / self.probs.len() as f64;
        0.5 * stable_sum(self.probs.iter().map(|p| (p - u).abs()))
    }

    /// `√(Ξ / 2)`, which dominates the distance to uniform.
    pub fn pinsker_bound(&self) -> f64 {
        (self.deficiency() / 2.0).sqrt()
    }

    /// Marginal law on a sub-window.
    pub fn marginal(&self, sub: &CellSet) -> Result<WindowDistribution> {
        let positions = sub
            .iter()
            .map(|c| {
                self.window
                    .position(c)
                    .ok_or_else(|| Error::ShapeMismatch(format!("cell {c:?} outside the window")))
            })
            .collect::<Result<Vec<_>>>()?;
        let k = self.alphabet.size();
        let n = self.window.len();
        let size = k.pow(sub.len() as u32);
        let mut out = vec![0.0; size];
        let weights: Vec<usize> = (0..n).map(|j| k.pow((n - 1 - j) as u32)).collect();
        for (code, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let idx = positions
                .iter()
                .fold(0usize, |acc, &j| acc * k + (code / weights[j]) % k);
            out[idx] += p;
        }
        WindowDistribution::new(sub.clone(), self.alphabet.clone(), out)
    }

    fn check_same_shape(&self, other: &WindowDistribution) -> Result<()> {
        if self.window != other.window || self.alphabet != other.alphabet {
            return Err(Error::ShapeMismatch("windows or alphabets differ".into()));
        }
        Ok(())
    }
}

/// Mixed-radix code of a pattern, first symbol most significant.
#[inline]
pub fn encode_pattern(pattern: &[Symbol], k: usize) -> usize {
    pattern.iter().fold(0usize, |acc, &s| acc * k + s as usize)
}

pub fn decode_pattern(mut code: usize, k: usize, len: usize) -> Vec<Symbol> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = (code % k) as Symbol;
        code /= k;
    }
    out
}

/// Entropy estimator used by [`estimate_entropy`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    #[default]
    Plugin,
    MillerMadow,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Plugin => "plugin",
            Estimator::MillerMadow => "miller-madow",
        }
    }
}

/// Entropy of an empirical sample of patterns.
///
/// Miller–Madow adds `(K̂ − 1) / (2N)` to the plug-in value, where `K̂` is the
/// number of distinct observed patterns.
pub fn estimate_entropy<T: Hash + Eq>(samples: &[T], method: Estimator) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    let mut counts: HashMap<&T, usize> = HashMap::new();
    for s in samples {
        *counts.entry(s).or_default() += 1;
    }
    let mut c: Vec<usize> = counts.into_values().collect();
    c.sort_unstable();
    Ok(estimate_from_counts(&c, method))
}

/// Estimator over a list of pattern counts (zeros are ignored).
pub fn estimate_from_counts(counts: &[usize], method: Estimator) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let plugin = stable_sum(counts.iter().filter(|&&c| c > 0).map(|&c| {
        let p = c as f64 / nf;
        -p * p.ln()
    }))
    .max(0.0);
    match method {
        Estimator::Plugin => plugin,
        Estimator::MillerMadow => {
            let observed = counts.iter().filter(|&&c| c > 0).count();
            plugin + (observed as f64 - 1.0) / (2.0 * nf)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeqRng;

    fn cell() -> CellSet {
        CellSet::line([0])
    }

    fn binary(p: f64) -> WindowDistribution {
        WindowDistribution::new(cell(), Alphabet::binary(), vec![p, 1.0 - p]).unwrap()
    }

    #[test]
    fn entropy_examples() {
        let a = CellSet::interval(0, 2);
        let z3 = Alphabet::cyclic(3).unwrap();
        let u = WindowDistribution::uniform(a.clone(), z3.clone()).unwrap();
        assert!((u.entropy() - 3.0 * 3f64.ln()).abs() < 1e-12);
        let pm = WindowDistribution::point_mass(a, z3, &[1, 0, 2]).unwrap();
        assert_eq!(pm.entropy(), 0.0);
        assert!((binary(0.9).entropy() - 0.325_082_973_391_448_2).abs() < 1e-12);
    }

    #[test]
    fn deficiency_examples() {
        let a = CellSet::interval(0, 1);
        let u = WindowDistribution::uniform(a.clone(), Alphabet::binary()).unwrap();
        assert_eq!(u.deficiency(), 0.0);
        let pm = WindowDistribution::point_mass(a, Alphabet::binary(), &[1, 1]).unwrap();
        assert!((pm.deficiency() - 2.0 * 2f64.ln()).abs() < 1e-12);
        // H(0.82, 0.18) = 0.4713934868…
        let d = binary(0.82);
        assert!((d.entropy() - 0.471_393_486_810_094_2).abs() < 1e-12);
        assert!((d.deficiency() - 0.221_753_693_749_851_1).abs() < 1e-12);
    }

    #[test]
    fn tv_examples() {
        let p = binary(0.9);
        assert_eq!(p.tv_distance(&p).unwrap(), 0.0);
        assert_eq!(binary(1.0).tv_distance(&binary(0.0)).unwrap(), 1.0);
        assert!((p.tv_to_uniform() - 0.4).abs() < 1e-15);
        let other = WindowDistribution::uniform(CellSet::line([1]), Alphabet::binary()).unwrap();
        assert!(p.tv_distance(&other).is_err());
    }

    #[test]
    fn pinsker_examples() {
        let p = binary(0.9);
        assert!((p.pinsker_bound() - 0.428_989_631_091_764_9).abs() < 1e-12);
        assert!(p.pinsker_bound() >= p.tv_to_uniform());
        let u = binary(0.5);
        assert_eq!(u.pinsker_bound(), 0.0);
        let pm = binary(1.0);
        assert!((pm.pinsker_bound() - (2f64.ln() / 2.0).sqrt()).abs() < 1e-12);
        assert!(pm.pinsker_bound() >= 0.5);
    }

    #[test]
    fn estimators() {
        let same = vec![7u32; 50];
        assert_eq!(estimate_entropy(&same, Estimator::Plugin).unwrap(), 0.0);
        assert_eq!(
            estimate_entropy(&same, Estimator::MillerMadow).unwrap(),
            0.0
        );
        assert!(estimate_entropy::<u32>(&[], Estimator::Plugin).is_err());
        let mm = estimate_from_counts(&[3, 1], Estimator::MillerMadow);
        let pl = estimate_from_counts(&[3, 1], Estimator::Plugin);
        assert!((mm - pl - 1.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn plugin_converges() {
        // N = 10^6 draws from (0.9, 0.1); the plug-in standard deviation is
        // sqrt(Var(-ln p(X)) / N)
        let n = 1_000_000u64;
        let rng = crate::rng::CounterRng::new(99);
        let ones = (0..n).filter(|&i| rng.uniform(0, i) < 0.1).count();
        let h = estimate_from_counts(&[n as usize - ones, ones], Estimator::Plugin);
        let mean = 0.325_082_973_391_448_2;
        let second = 0.9 * 0.9f64.ln().powi(2) + 0.1 * 0.1f64.ln().powi(2);
        let sd = ((second - mean * mean) / n as f64).sqrt();
        assert!((h - mean).abs() < 3.0 * sd + 1e-6);
    }

    #[test]
    fn plugin_is_biased_down() {
        // 1000 resamples of size 20 from a known law on 4 outcomes
        let truth = [0.4, 0.3, 0.2, 0.1];
        let h = entropy_of(&truth);
        let mut rng = SeqRng::new(5);
        let mut plugin = 0.0;
        let mut mm = 0.0;
        for _ in 0..1000 {
            let mut counts = [0usize; 4];
            for _ in 0..20 {
                let u = rng.next_f64();
                let mut acc = 0.0;
                let i = truth
                    .iter()
                    .position(|&p| {
                        acc += p;
                        u < acc
                    })
                    .unwrap_or(3);
                counts[i] += 1;
            }
            plugin += estimate_from_counts(&counts, Estimator::Plugin);
            mm += estimate_from_counts(&counts, Estimator::MillerMadow);
        }
        plugin /= 1000.0;
        mm /= 1000.0;
        assert!(plugin < h);
        assert!((mm - h).abs() < (plugin - h).abs());
    }

    #[test]
    fn marginal_of_product() {
        let w = CellSet::interval(0, 2);
        let laws = vec![vec![0.1, 0.9], vec![0.5, 0.5], vec![0.3, 0.7]];
        let d = WindowDistribution::product_of_cells(w, Alphabet::binary(), &laws).unwrap();
        let m = d.marginal(&CellSet::line([0, 2])).unwrap();
        assert!((m.prob(&[1, 0]) - 0.9 * 0.3).abs() < 1e-15);
        let sum: f64 = laws.iter().map(|l| entropy_of(l)).sum();
        assert!((d.entropy() - sum).abs() < 1e-12);
    }

    #[test]
    fn cap_is_enforced() {
        let big = CellSet::interval(0, 30);
        assert!(matches!(
            WindowDistribution::uniform(big, Alphabet::binary()),
            Err(Error::CapExceeded { .. })
        ));
    }
}
