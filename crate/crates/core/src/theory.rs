//! Constants and inequalities of the entropy argument: the noise lemmas, the
//! equilibrium time, the bootstrap packing, the ergodicity bound and decay
//! fits used to read off empirical rates.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::entropy::{entropy_of, WindowDistribution};
use crate::error::{checked_state_space, Error, Result};
use crate::exact::{exact_window_marginal, leakage_constants, ConeProblem};
use crate::lattice::{Cell, CellSet};
use crate::noise::{convolve_site, NoiseModel};

/// Absolute slack allowed on every inequality.
pub const SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    /// `lhs ≥ rhs`
    AtLeast,
    /// `lhs ≤ rhs`
    AtMost,
}

/// Outcome of one inequality check. Serialized as one JSON line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub claim: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
    pub params: serde_json::Value,
}

impl BoundReport {
    pub fn new(
        claim: impl Into<String>,
        lhs: f64,
        relation: Relation,
        rhs: f64,
        params: serde_json::Value,
    ) -> Self {
        Self::with_slack(claim, lhs, relation, rhs, SLACK, params)
    }

    pub fn with_slack(
        claim: impl Into<String>,
        lhs: f64,
        relation: Relation,
        rhs: f64,
        slack: f64,
        params: serde_json::Value,
    ) -> Self {
        let ok = match relation {
            Relation::AtLeast => lhs >= rhs - slack,
            Relation::AtMost => lhs <= rhs + slack,
        };
        Self {
            claim: claim.into(),
            lhs,
            rhs,
            ok,
            params,
        }
    }

    /// Whether the claim is an empirical finite-cone check whose failure is a
    /// finding rather than a contradiction.
    pub fn caveated(&self) -> bool {
        self.params
            .get("caveated")
            .and_then(serde_json::Value::as_bool)
            .unwrap_or(false)
    }
}

/// Which noise lemma to check.
#[derive(Debug, Clone, PartialEq)]
pub enum LemmaVariant {
    /// Law of a single symbol.
    Scalar(Vec<f64>),
    /// Law of `n` symbols, mixed radix, first symbol most significant.
    Joint { sites: usize, law: Vec<f64> },
    /// Joint law of `(A, C)` stored as `law[c · |Σ| + a]`.
    Conditional { conditions: usize, law: Vec<f64> },
}

/// Checks `H(A + N) ≥ κ h_max + (1 − κ) H(A)` and its joint and conditional
/// forms by exact convolution.
pub fn check_noise_lemma(variant: &LemmaVariant, noise: &NoiseModel) -> Result<BoundReport> {
    if !noise.is_additive() {
        return Err(Error::InvalidNoise(
            "noise lemmas need additive noise".into(),
        ));
    }
    let k = noise.alphabet().size();
    let kappa = noise.kappa();
    let h_max = noise.alphabet().h_max();
    match variant {
        LemmaVariant::Scalar(law) => {
            let joint = LemmaVariant::Joint {
                sites: 1,
                law: law.clone(),
            };
            let mut r = check_noise_lemma(&joint, noise)?;
            r.claim = "noise-lemma-scalar".into();
            Ok(r)
        }
        LemmaVariant::Joint { sites, law } => {
            let n = *sites;
            if law.len() != checked_state_space(k, n, crate::entropy::STATE_SPACE_CAP)? {
                return Err(Error::ShapeMismatch(format!(
                    "joint law has {} entries for {n} sites of {k} symbols",
                    law.len()
                )));
            }
            let mut out = law.clone();
            noise.push_forward(&mut out, n);
            let lhs = entropy_of(&out);
            let rhs = n as f64 * kappa * h_max + (1.0 - kappa) * entropy_of(law);
            Ok(BoundReport::new(
                if n == 1 {
                    "noise-lemma-scalar"
                } else {
                    "noise-lemma-joint"
                },
                lhs,
                Relation::AtLeast,
                rhs,
                json!({ "sites": n, "kappa": kappa, "alphabet": k }),
            ))
        }
        LemmaVariant::Conditional { conditions, law } => {
            if law.len() != conditions * k {
                return Err(Error::ShapeMismatch(format!(
                    "conditional law has {} entries, expected {}",
                    law.len(),
                    conditions * k
                )));
            }
            let mut lhs = 0.0;
            let mut cond_entropy = 0.0;
            for row in law.chunks_exact(k) {
                let pc: f64 = row.iter().sum();
                if pc <= 0.0 {
                    continue;
                }
                let mut given: Vec<f64> = row.iter().map(|x| x / pc).collect();
                cond_entropy += pc * entropy_of(&given);
                convolve_site(&mut given, noise.channel(), 1, 0);
                lhs += pc * entropy_of(&given);
            }
            let rhs = kappa * h_max + (1.0 - kappa) * cond_entropy;
            Ok(BoundReport::new(
                "noise-lemma-conditional",
                lhs,
                Relation::AtLeast,
                rhs,
                json!({ "conditions": conditions, "kappa": kappa, "alphabet": k }),
            ))
        }
    }
}

/// The equilibrium-time constants `a₀ = −1/log(1−κ)` and
/// `b₀ = −log(h_max)/log(1−κ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquilibriumConstants {
    pub a0: f64,
    pub b0: f64,
    pub kappa: f64,
}

impl EquilibriumConstants {
    /// `a₀ log(|J| / c̃(J)) + b₀`; zero for uniform noise.
    pub fn threshold(&self, window_cells: usize, c_tilde: f64) -> f64 {
        if self.kappa >= 1.0 {
            return 0.0;
        }
        self.a0 * (window_cells as f64 / c_tilde).ln() + self.b0
    }

    /// Whether `t` is past the threshold after which
    /// `H(X^t_J) ≥ |J| h_max − 2 c̃(J)` is guaranteed.
    pub fn reached(&self, t: usize, window_cells: usize, c_tilde: f64) -> bool {
        t as f64 >= self.threshold(window_cells, c_tilde)
    }
}

pub fn equilibrium_constants(noise: &NoiseModel) -> EquilibriumConstants {
    let kappa = noise.kappa();
    if kappa >= 1.0 {
        return EquilibriumConstants {
            a0: 0.0,
            b0: 0.0,
            kappa,
        };
    }
    let l = (1.0 - kappa).ln();
    EquilibriumConstants {
        a0: -1.0 / l,
        b0: -noise.alphabet().h_max().ln() / l,
        kappa,
    }
}

/// Packing of `k^d` disjoint dependence cones inside `S_m`.
///
/// Block `w ∈ S_k` is `Q_w = (n + 2rt)·w + ⟦rt, rt + n − 1⟧^d` and
/// `m = k(n + 2rt)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapLayout {
    pub n: usize,
    pub k: usize,
    pub r: usize,
    pub t: usize,
    pub d: usize,
    pub m: usize,
    /// Lowest corner of each `Q_w`, for `w` in lexicographic order.
    pub anchors: Vec<Cell>,
}

pub fn bootstrap_layout(
    n: usize,
    k: usize,
    r: usize,
    t: usize,
    d: usize,
) -> Result<BootstrapLayout> {
    if n == 0 || k == 0 || d == 0 {
        return Err(Error::InvalidArgument("n, k and d must be positive".into()));
    }
    let span = n + 2 * r * t;
    let m = k * span;
    let anchors = CellSet::hypercube(d, k)
        .iter()
        .map(|w| {
            w.iter()
                .map(|&x| x * span as i64 + (r * t) as i64)
                .collect()
        })
        .collect();
    Ok(BootstrapLayout {
        n,
        k,
        r,
        t,
        d,
        m,
        anchors,
    })
}

impl BootstrapLayout {
    pub fn block(&self, i: usize) -> CellSet {
        crate::lattice::Window::new(self.anchors[i].clone(), self.n).cells()
    }

    /// `M^{rt}(Q_w)`.
    pub fn extended_block(&self, i: usize) -> CellSet {
        crate::lattice::Window::new(
            self.anchors[i]
                .iter()
                .map(|&x| x - (self.r * self.t) as i64)
                .collect(),
            self.n + 2 * self.r * self.t,
        )
        .cells()
    }

    /// Checks that the extended blocks are pairwise disjoint and inside
    /// `S_m`.
    pub fn verify(&self) -> std::result::Result<(), String> {
        let m = self.m;
        let volume = m.checked_pow(self.d as u32).ok_or("S_m too large")?;
        let mut owner = vec![usize::MAX; volume];
        for i in 0..self.anchors.len() {
            for c in self.extended_block(i).iter() {
                if c.iter().any(|&x| x < 0 || x as usize >= m) {
                    return Err(format!("cell {c:?} of block {i} leaves S_{m}"));
                }
                let idx = c.iter().fold(0usize, |acc, &x| acc * m + x as usize);
                if owner[idx] != usize::MAX {
                    return Err(format!("blocks {} and {i} overlap at {c:?}", owner[idx]));
                }
                owner[idx] = i;
            }
        }
        Ok(())
    }
}

/// Places `k^d` independent copies of `block` (a law on `S_n`) at the
/// `Q_w` of [`bootstrap_layout`], fills the other cells of `S_m` with iid
/// `padding`, and compares `Ξ(assembled)` with `k^d · Ξ(block)`.
pub fn check_block_superadditivity(
    block: &WindowDistribution,
    k: usize,
    r: usize,
    t: usize,
    padding: &[f64],
    cap: usize,
) -> Result<BoundReport> {
    let d = block.window().dim();
    let n = block.window().diameter()?;
    if block.window() != &CellSet::hypercube(d, n) {
        return Err(Error::ShapeMismatch("block law must live on S_n".into()));
    }
    let alphabet = block.alphabet();
    let q = alphabet.size();
    if padding.len() != q {
        return Err(Error::ShapeMismatch(
            "padding law has the wrong length".into(),
        ));
    }
    let layout = bootstrap_layout(n, k, r, t, d)?;
    let sm = CellSet::hypercube(d, layout.m);
    let total = checked_state_space(q, sm.len(), cap)?;

    // for every cell of S_m: (block index, position inside block) or padding
    let block_sets: Vec<CellSet> = (0..layout.anchors.len()).map(|i| layout.block(i)).collect();
    let roles: Vec<Option<(usize, usize)>> = sm
        .iter()
        .map(|c| {
            block_sets
                .iter()
                .enumerate()
                .find_map(|(b, set)| set.position(c).map(|p| (b, p)))
        })
        .collect();
    let cells_per_block = n.pow(d as u32);
    let weights: Vec<usize> = (0..cells_per_block)
        .map(|j| q.pow((cells_per_block - 1 - j) as u32))
        .collect();

    let mut probs = vec![0.0; total];
    let mut digits = vec![0u32; sm.len()];
    let mut codes = vec![0usize; block_sets.len()];
    for slot in probs.iter_mut() {
        codes.iter_mut().for_each(|c| *c = 0);
        let mut p = 1.0;
        for (role, &s) in roles.iter().zip(&digits) {
            match role {
                Some((b, pos)) => codes[*b] += s as usize * weights[*pos],
                None => p *= padding[s as usize],
            }
        }
        for &c in &codes {
            p *= block.probs()[c];
        }
        *slot = p;
        crate::rules::increment(&mut digits, q as u32);
    }
    let assembled = WindowDistribution::new(sm, alphabet.clone(), probs)?;
    let copies = layout.anchors.len();
    Ok(BoundReport::new(
        "block-superadditivity",
        assembled.deficiency(),
        Relation::AtLeast,
        copies as f64 * block.deficiency(),
        json!({ "n": n, "k": k, "r": r, "t": t, "d": d, "m": layout.m }),
    ))
}

/// `α e^{−βt} n^{(d−1)/2}`.
pub fn main_theorem_bound(n: usize, t: f64, alpha: f64, beta: f64, d: usize) -> f64 {
    alpha * (-beta * t).exp() * (n as f64).powf((d as f64 - 1.0) / 2.0)
}

/// Whether `t ≥ a log n + b`, the range where the bound is claimed.
pub fn theorem_applies(n: usize, t: f64, a: f64, b: f64) -> bool {
    t >= a * (n as f64).ln() + b
}

/// Least-squares fit of `y ≈ α e^{−βt}` on log values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub alpha: f64,
    pub beta: f64,
    pub beta_se: f64,
    pub log_alpha_se: f64,
    pub r_squared: f64,
    pub points: usize,
    pub ok: bool,
}

pub fn fit_decay_constants(curve: &[(f64, f64)]) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = curve
        .iter()
        .filter(|(_, y)| *y > 0.0 && y.is_finite())
        .map(|&(t, y)| (t, y.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 positive points, got {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - ym).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("all points share one time".into()));
    }
    let mut slope = sxy / sxx;
    if slope.abs() < 1e-12 {
        slope = 0.0;
    }
    let intercept = ym - slope * tm;
    let sse: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let dof = (pts.len() - 2).max(1) as f64;
    let sigma2 = sse / dof;
    let beta_se = (sigma2 / sxx).sqrt();
    let log_alpha_se = (sigma2 * (1.0 / n + tm * tm / sxx)).sqrt();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let beta = -slope;
    Ok(DecayFit {
        alpha: intercept.exp(),
        beta,
        beta_se,
        log_alpha_se,
        r_squared,
        points: pts.len(),
        ok: beta > 0.0,
    })
}

/// `c̃(S_n)` for a radius-`r` rule in dimension `d`.
pub fn c_tilde_hypercube(n: usize, r: usize, d: usize, kappa: f64, h_max: f64) -> f64 {
    let pow = |x: usize| (x as f64).powi(d as i32);
    let nd = pow(n);
    let boundary = (pow(n + 4 * r) - nd) + (pow(n + 2 * r) - nd);
    (1.0 - kappa) / kappa * boundary * h_max
}

/// Smallest `a₁, b₁, c₁` with `τ(n) = a₁ log n + b₁ ≥ a₀ log(|S_n|/c̃(S_n)) + b₀`
/// and `δ(n) = c₁ n^{d−1} ≥ 2 c̃(S_n)` on `1 ≤ n ≤ n_max`, extended by the
/// `n → ∞` limit of both ratios.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProofConstants {
    pub a1: f64,
    pub b1: f64,
    pub c1: f64,
    pub verified_up_to: usize,
    pub b1_from_limit: bool,
}

pub fn proof_constants(
    r: usize,
    d: usize,
    noise: &NoiseModel,
    n_max: usize,
) -> Result<ProofConstants> {
    let eq = equilibrium_constants(noise);
    if eq.kappa >= 1.0 {
        return Err(Error::InvalidNoise("uniform noise has c̃ = 0".into()));
    }
    if r == 0 {
        return Err(Error::InvalidArgument("radius must be positive".into()));
    }
    let h = noise.alphabet().h_max();
    let ct = |n: usize| c_tilde_hypercube(n, r, d, eq.kappa, h);
    let nd = |n: usize| (n as f64).powi(d as i32 - 1);
    let a1 = eq.a0;
    let mut b1 = f64::NEG_INFINITY;
    let mut c1: f64 = 0.0;
    for n in 1..=n_max {
        let g = eq.a0 * ((n as f64).powi(d as i32) / ct(n)).ln() + eq.b0;
        b1 = b1.max(g - a1 * (n as f64).ln());
        c1 = c1.max(2.0 * ct(n) / nd(n));
    }
    // c̃(S_n)/n^{d-1} decreases to (1−κ)/κ · 6rd · h_max
    let lead = (1.0 - eq.kappa) / eq.kappa * 6.0 * (r * d) as f64 * h;
    let limit = eq.a0 * (1.0 / lead).ln() + eq.b0;
    let b1_from_limit = limit > b1;
    if b1_from_limit {
        b1 = limit;
    }
    c1 = c1.max(2.0 * lead);
    Ok(ProofConstants {
        a1,
        b1,
        c1,
        verified_up_to: n_max,
        b1_from_limit,
    })
}

/// `Ξ(X^t_J) ≤ (1−κ)^t Ξ(X^0_J) + c̃(J)` on an exact instance. Reported as
/// caveated: it is a finite-cone reading of a lattice statement.
pub fn check_deficiency_decay(p: &ConeProblem) -> Result<BoundReport> {
    let law = exact_window_marginal(p)?;
    let start = p.initial_window_law()?;
    let kappa = p.noise().kappa();
    let leak = leakage_constants(p.window(), p.rule(), p.noise());
    let t = p.horizon();
    Ok(BoundReport::new(
        "deficiency-decay",
        law.deficiency(),
        Relation::AtMost,
        (1.0 - kappa).powi(t as i32) * start.deficiency() + leak.c_tilde,
        json!({ "t": t, "window_cells": p.window().len(), "caveated": true }),
    ))
}

/// `TV(μ, uniform) ≤ √(Ξ/2)`.
pub fn check_pinsker(law: &WindowDistribution) -> BoundReport {
    BoundReport::with_slack(
        "pinsker",
        law.tv_to_uniform(),
        Relation::AtMost,
        law.pinsker_bound(),
        1e-12,
        json!({ "window_cells": law.window().len() }),
    )
}
