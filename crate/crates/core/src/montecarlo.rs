//! Trajectory sampling on tori and Monte Carlo estimates of window laws and
//! mixing times.

use serde::{Deserialize, Serialize};

use crate::entropy::{estimate_from_counts, Estimator, WindowDistribution, STATE_SPACE_CAP};
use crate::error::{checked_state_space, Error, Result};
use crate::lattice::{CellSet, Symbol};
use crate::noise::NoiseModel;
use crate::rng::CounterRng;
use crate::rules::{torus_index, LocalRule, Stencil, TorusConfiguration};

/// A named family of deterministic initial configurations. Values are a
/// function of the cell coordinates only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialGenerator {
    AllZeros,
    AllOnes,
    Checkerboard,
    SeededRandom(u64),
    /// A hypercube tile of side `s` (`s^d` symbols, row-major) repeated
    /// periodically.
    Pattern(Vec<Symbol>),
}

impl InitialGenerator {
    /// All-zeros, all-ones, checkerboard and eight seeded-random fields.
    pub fn adversarial_family(seed: u64) -> Vec<InitialGenerator> {
        let mut out = vec![
            InitialGenerator::AllZeros,
            InitialGenerator::AllOnes,
            InitialGenerator::Checkerboard,
        ];
        let rng = CounterRng::new(seed);
        out.extend((0..8).map(|i| InitialGenerator::SeededRandom(rng.draw(0, i))));
        out
    }

    pub fn name(&self) -> String {
        match self {
            InitialGenerator::AllZeros => "all-zeros".into(),
            InitialGenerator::AllOnes => "all-ones".into(),
            InitialGenerator::Checkerboard => "checkerboard".into(),
            InitialGenerator::SeededRandom(s) => format!("seeded-random-{s}"),
            InitialGenerator::Pattern(_) => "pattern".into(),
        }
    }

    fn tile_side(&self, dim: usize) -> Result<usize> {
        let InitialGenerator::Pattern(p) = self else {
            return Ok(0);
        };
        let side = (1..=p.len())
            .find(|s| s.checked_pow(dim as u32) == Some(p.len()))
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "pattern of length {} is not a {dim}-dimensional hypercube",
                    p.len()
                ))
            })?;
        Ok(side)
    }

    /// Symbol at `cell` for an alphabet of `k` symbols.
    pub fn value(&self, cell: &[i64], k: usize) -> Symbol {
        let k64 = k as u64;
        match self {
            InitialGenerator::AllZeros => 0,
            InitialGenerator::AllOnes => (1 % k64) as Symbol,
            InitialGenerator::Checkerboard => {
                (cell.iter().sum::<i64>().rem_euclid(2) as u64 % k64) as Symbol
            }
            InitialGenerator::SeededRandom(seed) => {
                let rng = CounterRng::new(*seed);
                let h = cell.iter().fold(0u64, |acc, &x| rng.draw(acc, x as u64));
                (h % k64) as Symbol
            }
            InitialGenerator::Pattern(p) => {
                let dim = cell.len();
                let side = self.tile_side(dim).unwrap_or(p.len()) as i64;
                let idx = cell
                    .iter()
                    .fold(0i64, |acc, &x| acc * side + x.rem_euclid(side));
                p[idx as usize] % k as Symbol
            }
        }
    }

    /// The generator restricted to a torus.
    pub fn configuration(&self, sides: &[usize], k: usize) -> Result<TorusConfiguration> {
        self.tile_side(sides.len())?;
        let mut x = TorusConfiguration::filled(sides.to_vec(), 0)?;
        for i in 0..x.len() {
            let c = x.coords_of(i);
            x.data_mut()[i] = self.value(&c, k);
        }
        Ok(x)
    }
}

/// A batch of independent noisy trajectories on one torus.
#[derive(Debug, Clone)]
pub struct SimulationPlan {
    pub rule: LocalRule,
    pub noise: NoiseModel,
    pub sides: Vec<usize>,
    pub generator: InitialGenerator,
    pub horizon: usize,
    pub replicates: usize,
    pub seed: u64,
    pub window: CellSet,
    /// Set when some torus side is too small for the dependence cone of the
    /// window at the horizon.
    pub wrap_contaminated: bool,
}

impl SimulationPlan {
    /// A plan on the smallest wrap-free torus.
    pub fn new(
        rule: LocalRule,
        noise: NoiseModel,
        window: CellSet,
        generator: InitialGenerator,
        horizon: usize,
        replicates: usize,
        seed: u64,
    ) -> Result<Self> {
        let side = wrap_free_side(&window, &rule, horizon)?;
        let sides = vec![side; rule.dim()];
        Self::with_sides(
            rule, noise, window, generator, horizon, replicates, seed, sides,
        )
    }

    /// A plan on a fixed torus; flagged if observations can wrap.
    #[allow(clippy::too_many_arguments)]
    pub fn with_sides(
        rule: LocalRule,
        noise: NoiseModel,
        window: CellSet,
        generator: InitialGenerator,
        horizon: usize,
        replicates: usize,
        seed: u64,
        sides: Vec<usize>,
    ) -> Result<Self> {
        if replicates == 0 {
            return Err(Error::InvalidArgument(
                "at least one replicate is needed".into(),
            ));
        }
        if noise.alphabet() != rule.alphabet() {
            return Err(Error::InvalidNoise(
                "noise and rule alphabets differ".into(),
            ));
        }
        if window.dim() != rule.dim() || sides.len() != rule.dim() {
            return Err(Error::DimensionMismatch {
                expected: rule.dim(),
                found: if window.dim() != rule.dim() {
                    window.dim()
                } else {
                    sides.len()
                },
            });
        }
        let need = wrap_free_side(&window, &rule, horizon)?;
        let required = 2 * rule.radius() + 1;
        if let Some(&side) = sides.iter().find(|&&s| s < required) {
            return Err(Error::TorusTooSmall { side, required });
        }
        generator.tile_side(rule.dim())?;
        let wrap_contaminated = sides.iter().any(|&s| s < need);
        Ok(Self {
            rule,
            noise,
            sides,
            generator,
            horizon,
            replicates,
            seed,
            window,
            wrap_contaminated,
        })
    }

    pub fn with_generator(&self, generator: InitialGenerator) -> Result<Self> {
        generator.tile_side(self.rule.dim())?;
        Ok(Self {
            generator,
            ..self.clone()
        })
    }

    pub fn initial_configuration(&self) -> Result<TorusConfiguration> {
        self.generator
            .configuration(&self.sides, self.rule.alphabet().size())
    }

    fn replicate_rng(&self, replicate: usize) -> CounterRng {
        CounterRng::new(self.seed).fork(replicate as u64)
    }
}

/// `diameter(A) + 2rT + 1`, at least `2r + 1`.
pub fn wrap_free_side(window: &CellSet, rule: &LocalRule, horizon: usize) -> Result<usize> {
    let r = rule.radius();
    Ok((window.diameter()? + 2 * r * horizon + 1).max(2 * r + 1))
}

/// `X^0, …, X^T` for one replicate. Step `t` applies the rule, then noise
/// with counters `(t, cell)` under the replicate's key.
pub fn sample_trajectory(
    plan: &SimulationPlan,
    replicate: usize,
) -> Result<Vec<TorusConfiguration>> {
    let stencil = Stencil::new(&plan.rule, &plan.sides)?;
    let rng = plan.replicate_rng(replicate);
    let mut x = plan.initial_configuration()?;
    let mut out = Vec::with_capacity(plan.horizon + 1);
    out.push(x.clone());
    let mut next = x.clone();
    for t in 1..=plan.horizon {
        stencil.step(&plan.rule, x.data(), next.data_mut());
        plan.noise.apply_in_place(next.data_mut(), &rng, t as u64);
        std::mem::swap(&mut x, &mut next);
        out.push(x.clone());
    }
    Ok(out)
}

/// Window pattern codes of every replicate at every time.
#[derive(Debug, Clone)]
pub struct WindowSamples {
    pub window: CellSet,
    pub alphabet_size: usize,
    /// `codes[t][replicate]`.
    pub codes: Vec<Vec<u32>>,
}

impl WindowSamples {
    pub fn replicates(&self) -> usize {
        self.codes.first().map_or(0, Vec::len)
    }

    pub fn counts(&self, t: usize) -> Vec<usize> {
        let k = checked_state_space(self.alphabet_size, self.window.len(), usize::MAX)
            .unwrap_or(usize::MAX);
        let mut counts = vec![0usize; k];
        for &c in &self.codes[t] {
            counts[c as usize] += 1;
        }
        counts
    }
}

fn run_replicate(
    plan: &SimulationPlan,
    stencil: &Stencil,
    start: &TorusConfiguration,
    window_idx: &[usize],
    replicate: usize,
) -> Vec<u32> {
    let k = plan.rule.alphabet().size() as u32;
    let rng = plan.replicate_rng(replicate);
    let code = |x: &[Symbol]| window_idx.iter().fold(0u32, |acc, &i| acc * k + x[i]);
    let mut x = start.data().to_vec();
    let mut next = x.clone();
    let mut out = Vec::with_capacity(plan.horizon + 1);
    out.push(code(&x));
    for t in 1..=plan.horizon {
        stencil.step(&plan.rule, &x, &mut next);
        plan.noise.apply_in_place(&mut next, &rng, t as u64);
        std::mem::swap(&mut x, &mut next);
        out.push(code(&x));
    }
    out
}

/// Runs every replicate once and records the window pattern at each time.
pub fn sample_window(plan: &SimulationPlan) -> Result<WindowSamples> {
    let k = plan.rule.alphabet().size();
    checked_state_space(k, plan.window.len(), STATE_SPACE_CAP)?;
    let stencil = Stencil::new(&plan.rule, &plan.sides)?;
    let start = plan.initial_configuration()?;
    let window_idx: Vec<usize> = plan
        .window
        .iter()
        .map(|c| torus_index(&plan.sides, c))
        .collect();

    #[cfg(feature = "parallel")]
    let per_rep: Vec<Vec<u32>> = {
        use rayon::prelude::*;
        (0..plan.replicates)
            .into_par_iter()
            .map(|i| run_replicate(plan, &stencil, &start, &window_idx, i))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let per_rep: Vec<Vec<u32>> = (0..plan.replicates)
        .map(|i| run_replicate(plan, &stencil, &start, &window_idx, i))
        .collect();

    let codes = (0..=plan.horizon)
        .map(|t| per_rep.iter().map(|v| v[t]).collect())
        .collect();
    Ok(WindowSamples {
        window: plan.window.clone(),
        alphabet_size: k,
        codes,
    })
}

/// Per-pattern binomial standard errors `√(p̂(1−p̂)/R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardErrors {
    pub per_pattern: Vec<f64>,
    pub max: f64,
    pub replicates: usize,
}

fn frequencies(
    samples: &WindowSamples,
    alphabet: &crate::lattice::Alphabet,
    t: usize,
) -> Result<(WindowDistribution, StandardErrors)> {
    let counts = samples.counts(t);
    let r = samples.replicates();
    let rf = r as f64;
    let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / rf).collect();
    let per_pattern: Vec<f64> = probs.iter().map(|&p| (p * (1.0 - p) / rf).sqrt()).collect();
    let max = per_pattern.iter().cloned().fold(0.0, f64::max);
    let law = WindowDistribution::new(samples.window.clone(), alphabet.clone(), probs)?;
    Ok((
        law,
        StandardErrors {
            per_pattern,
            max,
            replicates: r,
        },
    ))
}

/// Empirical law of `X^t_A` over the plan's replicates.
pub fn empirical_marginal(
    plan: &SimulationPlan,
    t: usize,
) -> Result<(WindowDistribution, StandardErrors)> {
    if t > plan.horizon {
        return Err(Error::InvalidArgument(format!(
            "time {t} is past the horizon {}",
            plan.horizon
        )));
    }
    let mut short = plan.clone();
    short.horizon = t;
    let samples = sample_window(&short)?;
    frequencies(&samples, plan.rule.alphabet(), t)
}

/// Total variation to uniform of counts, with its delta-method standard
/// error.
pub fn tv_with_se(counts: &[usize]) -> (f64, f64) {
    let r: usize = counts.iter().sum();
    let rf = r as f64;
    let k = counts.len() as f64;
    let u = 1.0 / k;
    let mut tv = 0.0;
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for &c in counts {
        let p = c as f64 / rf;
        tv += (p - u).abs();
        let s = if p > u {
            1.0
        } else if p < u {
            -1.0
        } else {
            0.0
        };
        m1 += s * p;
        m2 += s * s * p;
    }
    let var = ((m2 - m1 * m1) / rf).max(0.0);
    (tv / 2.0, 0.5 * var.sqrt())
}

/// One generator's estimated distance curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratorCurve {
    pub generator: String,
    pub tv: Vec<f64>,
    pub se: Vec<f64>,
    pub entropy: Vec<f64>,
}

/// Result of [`estimate_mixing_time`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixingEstimate {
    /// First `t` with `d̂(t) + 2·SE ≤ ε`.
    pub t_mix: Option<usize>,
    /// `T + 1` when the horizon ran out first.
    pub lower_bound: Option<usize>,
    pub d_hat: Vec<f64>,
    pub d_se: Vec<f64>,
    pub curves: Vec<GeneratorCurve>,
    /// `d̂` never rises by more than three combined standard errors.
    pub monotone: bool,
    pub wrap_contaminated: bool,
    pub estimator: Estimator,
}

/// Estimates `t_mix(A, ε)` by maximising the empirical distance over a family
/// of initial generators; `d̂` is a lower bound on the true supremum.
pub fn estimate_mixing_time(
    base: &SimulationPlan,
    generators: &[InitialGenerator],
    eps: f64,
    estimator: Estimator,
) -> Result<MixingEstimate> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "ε = {eps} is outside (0, 1)"
        )));
    }
    if generators.is_empty() {
        return Err(Error::InvalidArgument("no initial generators".into()));
    }
    let mut curves = Vec::with_capacity(generators.len());
    for g in generators {
        let plan = base.with_generator(g.clone())?;
        let samples = sample_window(&plan)?;
        let mut curve = GeneratorCurve {
            generator: g.name(),
            tv: Vec::new(),
            se: Vec::new(),
            entropy: Vec::new(),
        };
        for t in 0..=plan.horizon {
            let counts = samples.counts(t);
            let (tv, se) = tv_with_se(&counts);
            curve.tv.push(tv);
            curve.se.push(se);
            curve.entropy.push(estimate_from_counts(&counts, estimator));
        }
        curves.push(curve);
    }
    let horizon = base.horizon;
    let mut d_hat = Vec::with_capacity(horizon + 1);
    let mut d_se = Vec::with_capacity(horizon + 1);
    for t in 0..=horizon {
        let best = curves
            .iter()
            .max_by(|a, b| a.tv[t].total_cmp(&b.tv[t]))
            .expect("non-empty");
        d_hat.push(best.tv[t]);
        d_se.push(best.se[t]);
    }
    let t_mix = (0..=horizon).find(|&t| d_hat[t] + 2.0 * d_se[t] <= eps);
    let monotone = (1..=horizon).all(|t| {
        let tol = 3.0 * (d_se[t].powi(2) + d_se[t - 1].powi(2)).sqrt();
        d_hat[t] <= d_hat[t - 1] + tol
    });
    Ok(MixingEstimate {
        t_mix,
        lower_bound: if t_mix.is_none() {
            Some(horizon + 1)
        } else {
            None
        },
        d_hat,
        d_se,
        curves,
        monotone,
        wrap_contaminated: base.wrap_contaminated,
        estimator,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{exact_window_marginal, ConeProblem};
    use crate::lattice::Alphabet;

    fn identity_plan(horizon: usize, replicates: usize) -> SimulationPlan {
        SimulationPlan::new(
            LocalRule::identity(Alphabet::binary(), 1).unwrap(),
            NoiseModel::flip(0.1).unwrap(),
            CellSet::line([0]),
            InitialGenerator::AllZeros,
            horizon,
            replicates,
            11,
        )
        .unwrap()
    }

    #[test]
    fn trajectory_basics() {
        let plan = identity_plan(0, 1);
        let traj = sample_trajectory(&plan, 0).unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj[0], plan.initial_configuration().unwrap());

        let plan = SimulationPlan::new(
            LocalRule::elementary(110).unwrap(),
            NoiseModel::flip(0.2).unwrap(),
            CellSet::interval(0, 3),
            InitialGenerator::SeededRandom(5),
            6,
            2,
            99,
        )
        .unwrap();
        assert_eq!(plan.sides, vec![4 + 12 + 1]);
        assert!(!plan.wrap_contaminated);
        let a = sample_trajectory(&plan, 1).unwrap();
        assert_eq!(a, sample_trajectory(&plan, 1).unwrap());
        assert_ne!(a, sample_trajectory(&plan, 0).unwrap());
    }

    #[test]
    fn small_torus_is_flagged_or_rejected() {
        let rule = LocalRule::elementary(90).unwrap();
        let noise = NoiseModel::flip(0.1).unwrap();
        let w = CellSet::interval(0, 1);
        let p = SimulationPlan::with_sides(
            rule.clone(),
            noise.clone(),
            w.clone(),
            InitialGenerator::AllZeros,
            5,
            1,
            0,
            vec![5],
        )
        .unwrap();
        assert!(p.wrap_contaminated);
        let e = SimulationPlan::with_sides(
            rule,
            noise,
            w,
            InitialGenerator::AllZeros,
            5,
            1,
            0,
            vec![2],
        );
        assert!(matches!(e, Err(Error::TorusTooSmall { .. })));
    }

    #[test]
    fn identity_frequencies_follow_closed_form() {
        let plan = identity_plan(12, 100_000);
        let samples = sample_window(&plan).unwrap();
        for t in 0..=12 {
            let p = (1.0 - 0.8f64.powi(t as i32)) / 2.0;
            let freq = samples.counts(t)[1] as f64 / 1e5;
            let sigma = (p * (1.0 - p) / 1e5).sqrt();
            assert!(
                (freq - p).abs() <= 3.0 * sigma + 1e-15,
                "t={t} {freq} vs {p}"
            );
        }
    }

    #[test]
    fn marginal_basics() {
        let plan = identity_plan(3, 1);
        let (law, se) = empirical_marginal(&plan, 3).unwrap();
        assert!(law.probs().contains(&1.0));
        assert_eq!(se.max, 0.0);
        let plan = identity_plan(3, 777);
        let (law, _) = empirical_marginal(&plan, 2).unwrap();
        let total: usize = law
            .probs()
            .iter()
            .map(|p| (p * 777.0).round() as usize)
            .sum();
        assert_eq!(total, 777);
        assert!(empirical_marginal(&plan, 4).is_err());
    }

    #[test]
    fn rule90_marginal_matches_exact() {
        let rule = LocalRule::elementary(90).unwrap();
        let noise = NoiseModel::flip(0.1).unwrap();
        let window = CellSet::interval(0, 1);
        let plan = SimulationPlan::new(
            rule.clone(),
            noise.clone(),
            window.clone(),
            InitialGenerator::SeededRandom(4),
            2,
            100_000,
            7,
        )
        .unwrap();
        let torus = plan.initial_configuration().unwrap();
        let exact = exact_window_marginal(
            &ConeProblem::from_configuration(rule, noise, window, 2, |c| torus.get(c)).unwrap(),
        )
        .unwrap();
        let (mc, _) = empirical_marginal(&plan, 2).unwrap();
        for (&p, &q) in exact.probs().iter().zip(mc.probs()) {
            let sigma = (p * (1.0 - p) / 1e5).sqrt();
            assert!((p - q).abs() <= 3.0 * sigma, "{p} vs {q}");
        }
    }

    #[test]
    fn identity_mixing_time_is_eight() {
        let plan = identity_plan(15, 100_000);
        let est =
            estimate_mixing_time(&plan, &[InitialGenerator::AllZeros], 0.1, Estimator::Plugin)
                .unwrap();
        assert_eq!(est.t_mix, Some(8));
        assert!(est.monotone);
        let est =
            estimate_mixing_time(&plan, &[InitialGenerator::AllZeros], 0.6, Estimator::Plugin)
                .unwrap();
        assert_eq!(est.t_mix, Some(0));
        let short = identity_plan(3, 1000);
        let est = estimate_mixing_time(
            &short,
            &[InitialGenerator::AllZeros],
            0.1,
            Estimator::Plugin,
        )
        .unwrap();
        assert_eq!((est.t_mix, est.lower_bound), (None, Some(4)));
    }

    #[test]
    fn generators() {
        let g = InitialGenerator::Pattern(vec![0, 1, 1, 0]);
        let x = g.configuration(&[4, 4], 2).unwrap();
        assert_eq!(x.get(&[0, 1]), 1);
        assert_eq!(x.get(&[3, 3]), 0);
        assert_eq!(x.get(&[2, 1]), 1);
        assert!(InitialGenerator::Pattern(vec![0, 1, 1])
            .configuration(&[4, 4], 2)
            .is_err());
        let c = InitialGenerator::Checkerboard
            .configuration(&[5], 2)
            .unwrap();
        assert_eq!(c.data(), &[0, 1, 0, 1, 0]);
        assert_eq!(InitialGenerator::adversarial_family(1).len(), 11);
        let json = serde_json::to_string(&InitialGenerator::SeededRandom(3)).unwrap();
        assert_eq!(json, r#"{"seeded-random":3}"#);
    }

    #[test]
    fn tv_se_of_point_mass_is_zero() {
        let (tv, se) = tv_with_se(&[10, 0, 0, 0]);
        assert_eq!((tv, se), (0.75, 0.0));
    }
}
