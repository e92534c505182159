//! Noise channels acting independently on every cell.
//!
//! Additive noise replaces a symbol `a` by `a + Z` with `Z ~ q`. The
//! permutation kind draws a permutation of `Σ` from a finite list and applies
//! it; its channel matrix is doubly stochastic. Only the additive kind feeds
//! the entropy bounds.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::lattice::{Alphabet, Symbol};
use crate::rng::CounterRng;
use crate::rules::{LocalRule, TorusConfiguration};

/// Smallest accepted noise probability.
pub const MIN_PROBABILITY: f64 = 1e-9;
/// Tolerance on `Σ q = 1`.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// A dense row-stochastic matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl StochasticMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseKind {
    Additive { q: Vec<f64> },
    Permutation { perms: Vec<(Vec<Symbol>, f64)> },
}

/// A strictly positive noise model on an alphabet group.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    alphabet: Alphabet,
    kind: NoiseKind,
    channel: StochasticMatrix,
    thresholds: Vec<u64>,
}

fn check_probabilities(p: &[f64], what: &str) -> Result<()> {
    if let Some(bad) = p.iter().find(|&&x| !x.is_finite() || x < MIN_PROBABILITY) {
        return Err(Error::InvalidNoise(format!(
            "{what} entry {bad} is below {MIN_PROBABILITY}"
        )));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::InvalidNoise(format!("{what} sums to {s}, not 1")));
    }
    Ok(())
}

fn cumulative_thresholds(p: &[f64]) -> Vec<u64> {
    let scale = 18_446_744_073_709_551_616.0_f64; // 2^64
    let mut acc = 0.0;
    let mut out: Vec<u64> = p
        .iter()
        .map(|&x| {
            acc += x;
            if acc >= 1.0 {
                u64::MAX
            } else {
                (acc * scale) as u64
            }
        })
        .collect();
    if let Some(last) = out.last_mut() {
        *last = u64::MAX;
    }
    out
}

#[inline]
fn pick(thresholds: &[u64], draw: u64) -> usize {
    thresholds
        .iter()
        .position(|&t| draw < t)
        .unwrap_or(thresholds.len() - 1)
}

impl NoiseModel {
    /// Additive noise with distribution `q` over the dense symbols.
    pub fn additive(alphabet: Alphabet, q: Vec<f64>) -> Result<Self> {
        let k = alphabet.size();
        if q.len() != k {
            return Err(Error::InvalidNoise(format!(
                "q has {} entries for an alphabet of {k}",
                q.len()
            )));
        }
        check_probabilities(&q, "q")?;
        let mut data = vec![0.0; k * k];
        for a in 0..k {
            for b in 0..k {
                data[a * k + b] = q[alphabet.sub(b as Symbol, a as Symbol) as usize];
            }
        }
        let thresholds = cumulative_thresholds(&q);
        Ok(Self {
            alphabet,
            kind: NoiseKind::Additive { q },
            channel: StochasticMatrix {
                rows: k,
                cols: k,
                data,
            },
            thresholds,
        })
    }

    /// Binary symmetric flip noise with flip probability `p`.
    pub fn flip(p: f64) -> Result<Self> {
        Self::additive(Alphabet::binary(), vec![1.0 - p, p])
    }

    /// Uniform additive noise on `alphabet` (`κ = 1`).
    pub fn uniform(alphabet: Alphabet) -> Self {
        let k = alphabet.size();
        Self::additive(alphabet, vec![1.0 / k as f64; k]).expect("uniform noise is valid")
    }

    /// Permutation noise: permutation `π_i` is applied with probability `p_i`.
    /// The induced channel must have every entry positive.
    pub fn permutation(alphabet: Alphabet, perms: Vec<(Vec<Symbol>, f64)>) -> Result<Self> {
        let k = alphabet.size();
        if perms.is_empty() {
            return Err(Error::InvalidNoise("no permutations".into()));
        }
        for (perm, _) in &perms {
            let mut seen = vec![false; k];
            if perm.len() != k
                || !perm
                    .iter()
                    .all(|&s| (s as usize) < k && !std::mem::replace(&mut seen[s as usize], true))
            {
                return Err(Error::InvalidNoise(format!(
                    "{perm:?} is not a permutation of Σ"
                )));
            }
        }
        let weights: Vec<f64> = perms.iter().map(|(_, p)| *p).collect();
        check_probabilities(&weights, "permutation weight")?;
        let mut data = vec![0.0; k * k];
        for (perm, p) in &perms {
            for (a, &b) in perm.iter().enumerate() {
                data[a * k + b as usize] += p;
            }
        }
        if data.iter().any(|&x| x <= 0.0) {
            return Err(Error::InvalidNoise(
                "permutation channel has a zero transition probability".into(),
            ));
        }
        let thresholds = cumulative_thresholds(&weights);
        Ok(Self {
            alphabet,
            kind: NoiseKind::Permutation { perms },
            channel: StochasticMatrix {
                rows: k,
                cols: k,
                data,
            },
            thresholds,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn kind(&self) -> &NoiseKind {
        &self.kind
    }

    pub fn is_additive(&self) -> bool {
        matches!(self.kind, NoiseKind::Additive { .. })
    }

    /// Channel matrix `M[a][b] = Pr(a ↦ b)`.
    pub fn channel(&self) -> &StochasticMatrix {
        &self.channel
    }

    /// `κ = |Σ| · min_a q(a)`. For permutation noise the minimum channel
    /// entry stands in for `min q`.
    pub fn kappa(&self) -> f64 {
        let k = self.alphabet.size() as f64;
        let min = match &self.kind {
            NoiseKind::Additive { q } => q.iter().copied().fold(f64::INFINITY, f64::min),
            NoiseKind::Permutation { .. } => self
                .channel
                .data
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min),
        };
        (k * min).min(1.0)
    }

    /// Splits `q = κ·u + (1−κ)·q̃`. For uniform `q` the residual `q̃` is
    /// taken to be uniform.
    pub fn decompose(&self) -> Result<(f64, Vec<f64>)> {
        let NoiseKind::Additive { q } = &self.kind else {
            return Err(Error::InvalidNoise("decompose needs additive noise".into()));
        };
        let k = q.len() as f64;
        let kappa = self.kappa();
        if 1.0 - kappa < 1e-12 {
            return Ok((kappa, vec![1.0 / k; q.len()]));
        }
        let residual = q
            .iter()
            .map(|&x| ((x - kappa / k) / (1.0 - kappa)).max(0.0))
            .collect();
        Ok((kappa, residual))
    }

    /// The PCA kernel `φ(u, b) = q(b − f(u))`, one row per neighbourhood
    /// pattern in table order.
    pub fn local_kernel(&self, rule: &LocalRule) -> Result<StochasticMatrix> {
        if rule.alphabet() != &self.alphabet {
            return Err(Error::ShapeMismatch(format!(
                "rule alphabet {:?} differs from noise alphabet {:?}",
                rule.alphabet(),
                self.alphabet
            )));
        }
        let k = self.alphabet.size();
        let mut data = Vec::with_capacity(rule.table().len() * k);
        for &fu in rule.table() {
            data.extend_from_slice(self.channel.row(fu as usize));
        }
        Ok(StochasticMatrix {
            rows: rule.table().len(),
            cols: k,
            data,
        })
    }

    /// Noisy image of one symbol given a 64-bit draw.
    #[inline]
    pub fn perturb(&self, a: Symbol, draw: u64) -> Symbol {
        let i = pick(&self.thresholds, draw);
        match &self.kind {
            NoiseKind::Additive { .. } => self.alphabet.add(a, i as Symbol),
            NoiseKind::Permutation { perms } => perms[i].0[a as usize],
        }
    }

    /// Perturbs every cell of `cells` in place using counter `(time, cell)`.
    pub fn apply_in_place(&self, cells: &mut [Symbol], rng: &CounterRng, time: u64) {
        for (i, c) in cells.iter_mut().enumerate() {
            *c = self.perturb(*c, rng.draw(time, i as u64));
        }
    }

    pub fn apply_noise(
        &self,
        x: &TorusConfiguration,
        rng: &CounterRng,
        time: u64,
    ) -> TorusConfiguration {
        let mut out = x.clone();
        self.apply_in_place(out.data_mut(), rng, time);
        out
    }

    /// Pushes a law on `Σ^n` (mixed radix, first site most significant)
    /// through independent noise on every site.
    pub fn push_forward(&self, probs: &mut [f64], sites: usize) {
        for site in 0..sites {
            convolve_site(probs, &self.channel, sites, site);
        }
    }

    pub fn to_spec(&self) -> NoiseSpec {
        let alphabet = Some(self.alphabet.moduli().to_vec());
        match &self.kind {
            NoiseKind::Additive { q } => NoiseSpec::Additive {
                alphabet,
                q: q.iter().map(|&x| Prob(x)).collect(),
            },
            NoiseKind::Permutation { perms } => NoiseSpec::Permutation {
                alphabet,
                perms: perms
                    .iter()
                    .map(|(perm, p)| PermEntry {
                        perm: perm.clone(),
                        p: Prob(*p),
                    })
                    .collect(),
            },
        }
    }
}

/// Applies the channel to one site of a product-indexed law.
pub fn convolve_site(probs: &mut [f64], channel: &StochasticMatrix, sites: usize, site: usize) {
    let k = channel.rows();
    let stride = k.pow((sites - 1 - site) as u32);
    let block = stride * k;
    let mut column = vec![0.0; k];
    for start in (0..probs.len()).step_by(block) {
        for j in 0..stride {
            let base = start + j;
            for (a, slot) in column.iter_mut().enumerate() {
                *slot = probs[base + a * stride];
            }
            for b in 0..k {
                probs[base + b * stride] = column
                    .iter()
                    .enumerate()
                    .map(|(a, &p)| p * channel.get(a, b))
                    .sum();
            }
        }
    }
}

/// A probability written in JSON as a decimal string (numbers are accepted
/// on input).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prob(pub f64);

impl Serialize for Prob {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{}", self.0))
    }
}

impl<'de> Deserialize<'de> for Prob {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Number(f64),
        }
        match Raw::deserialize(d)? {
            Raw::Number(x) => Ok(Prob(x)),
            Raw::Text(s) => s.trim().parse::<f64>().map(Prob).map_err(|_| {
                serde::de::Error::custom(format!("{s:?} is not a decimal probability"))
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermEntry {
    pub perm: Vec<Symbol>,
    pub p: Prob,
}

/// JSON form of a noise model: `{"kind": "additive", "q": ["0.9", "0.1"]}`.
/// The alphabet defaults to the cyclic group of order `|q|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum NoiseSpec {
    Additive {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alphabet: Option<Vec<u32>>,
        q: Vec<Prob>,
    },
    Permutation {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alphabet: Option<Vec<u32>>,
        perms: Vec<PermEntry>,
    },
}

impl NoiseSpec {
    pub fn build(&self) -> Result<NoiseModel> {
        match self {
            NoiseSpec::Additive { alphabet, q } => {
                let alphabet = match alphabet {
                    Some(m) => Alphabet::new(m.clone())?,
                    None => Alphabet::cyclic(q.len() as u32)?,
                };
                NoiseModel::additive(alphabet, q.iter().map(|p| p.0).collect())
            }
            NoiseSpec::Permutation { alphabet, perms } => {
                let k = perms.first().map_or(0, |e| e.perm.len());
                let alphabet = match alphabet {
                    Some(m) => Alphabet::new(m.clone())?,
                    None => Alphabet::cyclic(k as u32)?,
                };
                NoiseModel::permutation(
                    alphabet,
                    perms.iter().map(|e| (e.perm.clone(), e.p.0)).collect(),
                )
            }
        }
    }
}

impl Serialize for NoiseModel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_spec().serialize(s)
    }
}

impl<'de> Deserialize<'de> for NoiseModel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        NoiseSpec::deserialize(d)?
            .build()
            .map_err(serde::de::Error::custom)
    }
}
