//! Exact law of `X^t` on a finite window.
//!
//! The window `A` at time `t` only depends on the initial cells in the
//! dependence cone `M^{rt}(A)`. The engine carries the law on
//! `M^{r(t−s)}(A)` forward one step at a time: deterministic rule
//! application onto the next, smaller cone, then independent noise on every
//! remaining cell.

use serde_json::json;

use crate::entropy::{encode_pattern, WindowDistribution, STATE_SPACE_CAP};
use crate::error::{checked_state_space, Error, Result};
use crate::lattice::{Alphabet, Cell, CellSet, Symbol};
use crate::noise::NoiseModel;
use crate::rules::{increment, LocalRule};
use crate::theory::{BoundReport, Relation};

/// `M^{rt}(A)` for the rule radius `r`.
pub fn dependence_cone(window: &CellSet, rule: &LocalRule, t: usize) -> CellSet {
    window.moore(rule.radius() * t)
}

/// Initial condition on the dependence cone.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialLaw {
    /// A deterministic pattern over the cone cells, in canonical order.
    Point(Vec<Symbol>),
    Distribution(WindowDistribution),
}

/// One exact-evolution instance.
#[derive(Debug, Clone)]
pub struct ConeProblem {
    rule: LocalRule,
    noise: NoiseModel,
    window: CellSet,
    horizon: usize,
    initial: InitialLaw,
    cap: usize,
}

impl ConeProblem {
    pub fn new(
        rule: LocalRule,
        noise: NoiseModel,
        window: CellSet,
        horizon: usize,
        initial: InitialLaw,
    ) -> Result<Self> {
        Self::with_cap(rule, noise, window, horizon, initial, STATE_SPACE_CAP)
    }

    pub fn with_cap(
        rule: LocalRule,
        noise: NoiseModel,
        window: CellSet,
        horizon: usize,
        initial: InitialLaw,
        cap: usize,
    ) -> Result<Self> {
        if rule.alphabet() != noise.alphabet() {
            return Err(Error::ShapeMismatch(
                "rule and noise alphabets differ".into(),
            ));
        }
        if window.dim() != rule.dim() {
            return Err(Error::DimensionMismatch {
                expected: rule.dim(),
                found: window.dim(),
            });
        }
        if window.is_empty() {
            return Err(Error::EmptySet);
        }
        let cone = dependence_cone(&window, &rule, horizon);
        let k = rule.alphabet().size();
        match &initial {
            InitialLaw::Point(p) => {
                if p.len() != cone.len() {
                    return Err(Error::ShapeMismatch(format!(
                        "initial pattern covers {} cells, cone has {}",
                        p.len(),
                        cone.len()
                    )));
                }
                if p.iter().any(|&s| (s as usize) >= k) {
                    return Err(Error::InvalidArgument(
                        "initial symbol outside alphabet".into(),
                    ));
                }
                // the first dense law lives on the cone one step in
                let first = dependence_cone(&window, &rule, horizon.saturating_sub(1));
                checked_state_space(k, first.len(), cap)?;
            }
            InitialLaw::Distribution(d) => {
                if d.window() != &cone || d.alphabet() != rule.alphabet() {
                    return Err(Error::ShapeMismatch(
                        "initial law must cover exactly the dependence cone".into(),
                    ));
                }
                checked_state_space(k, cone.len(), cap)?;
            }
        }
        Ok(Self {
            rule,
            noise,
            window,
            horizon,
            initial,
            cap,
        })
    }

    /// Builds a point initial condition by reading a lattice configuration on
    /// the cone.
    pub fn from_configuration<F>(
        rule: LocalRule,
        noise: NoiseModel,
        window: CellSet,
        horizon: usize,
        config: F,
    ) -> Result<Self>
    where
        F: Fn(&[i64]) -> Symbol,
    {
        let cone = dependence_cone(&window, &rule, horizon);
        let pattern = cone.iter().map(|c| config(c)).collect();
        Self::new(rule, noise, window, horizon, InitialLaw::Point(pattern))
    }

    pub fn rule(&self) -> &LocalRule {
        &self.rule
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn window(&self) -> &CellSet {
        &self.window
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn initial(&self) -> &InitialLaw {
        &self.initial
    }

    pub fn cone(&self) -> CellSet {
        dependence_cone(&self.window, &self.rule, self.horizon)
    }

    /// Marginal of the initial condition on the window itself.
    pub fn initial_window_law(&self) -> Result<WindowDistribution> {
        let cone = self.cone();
        let alphabet = self.rule.alphabet().clone();
        match &self.initial {
            InitialLaw::Point(p) => {
                let pattern: Vec<Symbol> = self
                    .window
                    .iter()
                    .map(|c| p[cone.position(c).expect("window inside cone")])
                    .collect();
                WindowDistribution::point_mass(self.window.clone(), alphabet, &pattern)
            }
            InitialLaw::Distribution(d) => d.marginal(&self.window),
        }
    }
}

/// Positions, inside `src`, of the neighbours of every cell of `dst`.
fn neighbour_positions(src: &CellSet, dst: &CellSet, rule: &LocalRule) -> Vec<usize> {
    let mut out = Vec::with_capacity(dst.len() * rule.neighborhood().len());
    for c in dst.iter() {
        for o in rule.neighborhood() {
            let n: Cell = c.iter().zip(o).map(|(a, b)| a + b).collect();
            out.push(src.position(&n).expect("cone contains every neighbour"));
        }
    }
    out
}

#[inline]
fn image_code(rule: &LocalRule, digits: &[Symbol], nbs: &[usize], arity: usize, k: usize) -> usize {
    let table = rule.table();
    nbs.chunks_exact(arity).fold(0usize, |acc, nb| {
        let idx = nb.iter().fold(0usize, |i, &j| i * k + digits[j] as usize);
        acc * k + table[idx] as usize
    })
}

/// Pushes a dense law on `src` through the deterministic global map onto
/// `dst`, where `dst + N ⊆ src`.
pub fn push_through_rule(
    probs: &[f64],
    src: &CellSet,
    dst: &CellSet,
    rule: &LocalRule,
) -> Vec<f64> {
    let k = rule.alphabet().size();
    let arity = rule.neighborhood().len();
    let nbs = neighbour_positions(src, dst, rule);
    let mut out = vec![0.0; k.pow(dst.len() as u32)];
    let mut digits = vec![0 as Symbol; src.len()];
    for &p in probs {
        if p != 0.0 {
            out[image_code(rule, &digits, &nbs, arity, k)] += p;
        }
        increment(&mut digits, k as Symbol);
    }
    out
}

fn renormalize(probs: &mut [f64]) {
    let s = crate::entropy::stable_sum(probs.iter().copied());
    if (s - 1.0).abs() > 1e-12 {
        probs.iter_mut().for_each(|p| *p /= s);
    }
}

/// The exact law of `X^t_A` for the problem's horizon `t`.
pub fn exact_window_marginal(p: &ConeProblem) -> Result<WindowDistribution> {
    let rule = &p.rule;
    let k = rule.alphabet().size();
    let t = p.horizon;
    let mut cone = p.cone();

    let mut probs = match &p.initial {
        InitialLaw::Distribution(d) => d.probs().to_vec(),
        InitialLaw::Point(pattern) if t == 0 => {
            let mut v = vec![0.0; checked_state_space(k, cone.len(), p.cap)?];
            v[encode_pattern(pattern, k)] = 1.0;
            v
        }
        InitialLaw::Point(pattern) => {
            // first step on a single configuration
            let next = dependence_cone(&p.window, rule, t - 1);
            let nbs = neighbour_positions(&cone, &next, rule);
            let code = image_code(rule, pattern, &nbs, rule.neighborhood().len(), k);
            let mut v = vec![0.0; checked_state_space(k, next.len(), p.cap)?];
            v[code] = 1.0;
            p.noise.push_forward(&mut v, next.len());
            cone = next;
            v
        }
    };
    let done = match &p.initial {
        InitialLaw::Point(_) if t > 0 => 1,
        _ => 0,
    };
    for s in done..t {
        let next = dependence_cone(&p.window, rule, t - s - 1);
        probs = push_through_rule(&probs, &cone, &next, rule);
        p.noise.push_forward(&mut probs, next.len());
        renormalize(&mut probs);
        cone = next;
    }
    WindowDistribution::new(p.window.clone(), rule.alphabet().clone(), probs)
}

/// Leakage constants `c(J) = (|∂M^{2r}(J)| + |∂M^r(J)|)·h_max` and
/// `c̃(J) = ((1 − κ)/κ)·c(J)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakageConstants {
    pub c: f64,
    pub c_tilde: f64,
}

pub fn leakage_constants(j: &CellSet, rule: &LocalRule, noise: &NoiseModel) -> LeakageConstants {
    let r = rule.radius();
    let boundary = j.moore_boundary(2 * r).len() + j.moore_boundary(r).len();
    let c = boundary as f64 * rule.alphabet().h_max();
    let kappa = noise.kappa();
    LeakageConstants {
        c,
        c_tilde: (1.0 - kappa) / kappa * c,
    }
}

/// One row of an entropy-evolution check.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionCheck {
    pub t: usize,
    pub entropy: f64,
    pub deficiency: f64,
    pub tv_to_uniform: f64,
    pub pinsker: f64,
    pub report: BoundReport,
}

/// Compares the exact `H(X^t_J)` with `[1 − (1−κ)^t]·|J|·h_max − c̃(J)`.
/// One-dimensional rules are verified surjective first.
pub fn check_evolution_bound(p: &ConeProblem) -> Result<EvolutionCheck> {
    if p.rule.dim() == 1 && !crate::analysis::test_surjective(&p.rule)? {
        return Err(Error::InvalidRule(
            "the entropy-evolution bound needs a surjective rule".into(),
        ));
    }
    check_evolution_bound_assuming_surjective(p)
}

/// As [`check_evolution_bound`], trusting the caller that the rule is
/// surjective (needed for `d ≥ 2`, where this is undecidable in general).
pub fn check_evolution_bound_assuming_surjective(p: &ConeProblem) -> Result<EvolutionCheck> {
    let law = exact_window_marginal(p)?;
    let kappa = p.noise.kappa();
    let leak = leakage_constants(&p.window, &p.rule, &p.noise);
    let t = p.horizon;
    let h = law.entropy();
    let rhs = (1.0 - (1.0 - kappa).powi(t as i32)) * law.max_entropy() - leak.c_tilde;
    let report = BoundReport::new(
        "entropy-evolution",
        h,
        Relation::AtLeast,
        rhs,
        json!({
            "t": t,
            "window_cells": p.window.len(),
            "kappa": kappa,
            "c_tilde": leak.c_tilde,
            "radius": p.rule.radius(),
        }),
    );
    Ok(EvolutionCheck {
        t,
        entropy: h,
        deficiency: law.deficiency(),
        tv_to_uniform: law.tv_to_uniform(),
        pinsker: law.pinsker_bound(),
        report,
    })
}

/// Finite-cone form of the surjective leakage inequality
/// `H((FX)_J) ≥ H(X_J) − c(J)`, for a law of `X` on `M^r(J)`.
pub fn check_leakage(
    rule: &LocalRule,
    j: &CellSet,
    law: &WindowDistribution,
) -> Result<BoundReport> {
    let src = j.moore(rule.radius());
    if law.window() != &src {
        return Err(Error::ShapeMismatch("law must live on M^r(J)".into()));
    }
    let image = push_through_rule(law.probs(), &src, j, rule);
    let lhs = crate::entropy::entropy_of(&image);
    let before = law.marginal(j)?.entropy();
    let r = rule.radius();
    let c = (j.moore_boundary(2 * r).len() + j.moore_boundary(r).len()) as f64
        * rule.alphabet().h_max();
    Ok(BoundReport::new(
        "surjective-leakage",
        lhs,
        Relation::AtLeast,
        before - c,
        json!({ "window_cells": j.len(), "c": c, "radius": r }),
    ))
}

/// `d(t)` for `t = 0..=horizon`: the largest distance to uniform of the
/// exact window law over a family of initial configurations.
pub fn exact_distance_curve<F>(
    rule: &LocalRule,
    noise: &NoiseModel,
    window: &CellSet,
    horizon: usize,
    initials: &[F],
) -> Result<Vec<f64>>
where
    F: Fn(&[i64]) -> Symbol,
{
    (0..=horizon)
        .map(|t| {
            initials.iter().try_fold(0.0f64, |worst, init| {
                let p = ConeProblem::from_configuration(
                    rule.clone(),
                    noise.clone(),
                    window.clone(),
                    t,
                    init,
                )?;
                Ok(worst.max(exact_window_marginal(&p)?.tv_to_uniform()))
            })
        })
        .collect()
}

/// First index with `curve[t] ≤ eps`.
pub fn first_below(curve: &[f64], eps: f64) -> Option<usize> {
    curve.iter().position(|&d| d <= eps)
}

/// Uniform law on a cell set.
pub fn uniform_on(cells: &CellSet, alphabet: &Alphabet) -> Result<WindowDistribution> {
    WindowDistribution::uniform(cells.clone(), alphabet.clone())
}
