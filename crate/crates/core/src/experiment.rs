//! Batch experiments driven by a JSON config.
//!
//! Every run builds all of its tables in memory before anything is written,
//! so a failing run leaves no files behind.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::analysis::{analyze, DEFAULT_WORD_CAP};
use crate::entropy::{decode_pattern, Estimator, STATE_SPACE_CAP};
use crate::error::{Error, Result};
use crate::exact::{
    check_evolution_bound, check_evolution_bound_assuming_surjective, exact_window_marginal,
    ConeProblem,
};
use crate::finite::{
    bound_checks_from_curve, distance_curve, mixing_from_curve, ReversibleNetwork,
};
use crate::lattice::{Cell, CellSet};
use crate::montecarlo::{
    estimate_mixing_time, sample_window, tv_with_se, InitialGenerator, SimulationPlan,
};
use crate::noise::NoiseModel;
use crate::rng::CounterRng;
use crate::rules::LocalRule;
use crate::theory::{check_deficiency_decay, equilibrium_constants, BoundReport, Relation};

/// Version tag written next to every table's column list.
pub const TABLE_VERSION: &str = "v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    #[serde(alias = "json-lines")]
    Jsonl,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" | "json-lines" => Ok(Format::Jsonl),
            other => Err(Error::Config(format!("unknown format `{other}`"))),
        }
    }
}

/// A finite window given by side length, interval or explicit cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WindowSpec {
    Hypercube { hypercube: usize },
    Interval { interval: [i64; 2] },
    Cells(Vec<Cell>),
}

impl WindowSpec {
    pub fn build(&self, dim: usize) -> Result<CellSet> {
        let set = match self {
            WindowSpec::Hypercube { hypercube } => CellSet::hypercube(dim, *hypercube),
            WindowSpec::Interval { interval: [lo, hi] } if dim == 1 => CellSet::interval(*lo, *hi),
            WindowSpec::Interval { .. } => return Err(Error::NotOneDimensional(dim)),
            WindowSpec::Cells(cells) => CellSet::new(dim, cells.iter().cloned())?,
        };
        if set.is_empty() {
            return Err(Error::EmptySet);
        }
        Ok(set)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NetworkSpec {
    AlternatingCnot { alternating_cnot: usize },
    Explicit(ReversibleNetwork),
}

impl NetworkSpec {
    pub fn build(&self) -> Result<ReversibleNetwork> {
        match self {
            NetworkSpec::AlternatingCnot { alternating_cnot } => {
                ReversibleNetwork::alternating_cnot(*alternating_cnot)
            }
            NetworkSpec::Explicit(n) => Ok(n.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanMethod {
    #[default]
    MonteCarlo,
    Exact,
}

fn default_word_len() -> usize {
    DEFAULT_WORD_CAP
}

fn default_random_initials() -> usize {
    20
}

/// The kind-specific part of a config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    AnalyzeRule {
        rule: LocalRule,
        #[serde(default = "default_word_len")]
        max_word_len: usize,
    },
    EvolveExact {
        rule: LocalRule,
        noise: NoiseModel,
        window: WindowSpec,
        horizon: usize,
        #[serde(default = "all_zeros")]
        initial: InitialGenerator,
        #[serde(default)]
        cap: Option<usize>,
    },
    Simulate {
        rule: LocalRule,
        noise: NoiseModel,
        window: WindowSpec,
        horizon: usize,
        replicates: usize,
        #[serde(default = "all_zeros")]
        generator: InitialGenerator,
        #[serde(default)]
        sides: Option<Vec<usize>>,
        #[serde(default)]
        estimator: Estimator,
    },
    MixingScan {
        rule: LocalRule,
        noise: NoiseModel,
        sizes: Vec<usize>,
        eps: f64,
        horizon: usize,
        #[serde(default)]
        replicates: Option<usize>,
        #[serde(default)]
        generators: Option<Vec<InitialGenerator>>,
        #[serde(default)]
        method: ScanMethod,
        #[serde(default)]
        estimator: Estimator,
    },
    VerifyBounds {
        rule: LocalRule,
        noise: NoiseModel,
        sizes: Vec<usize>,
        horizon: usize,
        #[serde(default = "default_random_initials")]
        random_initials: usize,
        #[serde(default)]
        assume_surjective: bool,
    },
    CircuitMix {
        network: NetworkSpec,
        noise: NoiseModel,
        horizon: usize,
        eps: f64,
    },
}

fn all_zeros() -> InitialGenerator {
    InitialGenerator::AllZeros
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::AnalyzeRule { .. } => "analyze-rule",
            Experiment::EvolveExact { .. } => "evolve-exact",
            Experiment::Simulate { .. } => "simulate",
            Experiment::MixingScan { .. } => "mixing-scan",
            Experiment::VerifyBounds { .. } => "verify-bounds",
            Experiment::CircuitMix { .. } => "circuit-mix",
        }
    }

    fn needs_seed(&self) -> bool {
        match self {
            Experiment::Simulate { .. } | Experiment::VerifyBounds { .. } => true,
            Experiment::MixingScan { method, .. } => *method == ScanMethod::MonteCarlo,
            _ => false,
        }
    }
}

/// A parsed config: the experiment plus run-wide settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub format: Format,
    /// The config as parsed, with overrides applied; hashed into the header.
    pub canonical: Value,
}

const COMMON_KEYS: [&str; 3] = ["seed", "output", "format"];

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_value(value)
    }

    pub fn from_value(value: Value) -> Result<Self> {
        let Value::Object(mut map) = value.clone() else {
            return Err(Error::Config("config must be a JSON object".into()));
        };
        let mut common = serde_json::Map::new();
        for k in COMMON_KEYS {
            if let Some(v) = map.remove(k) {
                common.insert(k.into(), v);
            }
        }
        let experiment: Experiment =
            serde_json::from_value(Value::Object(map)).map_err(|e| Error::Config(e.to_string()))?;
        let seed =
            match common.get("seed") {
                None | Some(Value::Null) => None,
                Some(v) => Some(v.as_u64().ok_or_else(|| {
                    Error::Config("seed must be an unsigned 64-bit integer".into())
                })?),
            };
        let output = match common.get("output") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(PathBuf::from(s)),
            Some(_) => return Err(Error::Config("output must be a path string".into())),
        };
        let format = match common.get("format") {
            None | Some(Value::Null) => Format::default(),
            Some(v) => {
                serde_json::from_value(v.clone()).map_err(|e| Error::Config(e.to_string()))?
            }
        };
        Ok(Self {
            experiment,
            seed,
            output,
            format,
            canonical: value,
        })
    }

    /// Replaces the seed, as `--seed` does.
    pub fn override_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        if let Value::Object(m) = &mut self.canonical {
            m.insert("seed".into(), json!(seed));
        }
    }

    pub fn override_format(&mut self, format: Format) {
        self.format = format;
        if let Value::Object(m) = &mut self.canonical {
            m.insert(
                "format".into(),
                serde_json::to_value(format).expect("plain enum"),
            );
        }
    }

    /// Hex SHA-256 of the canonical config (keys sorted, compact).
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.experiment.needs_seed() && self.seed.is_none() {
            return Err(Error::Config(format!(
                "`{}` is stochastic and needs a seed",
                self.experiment.kind()
            )));
        }
        Ok(())
    }
}

/// One output table with fixed columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&'static str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    /// Appends a row; rejects non-finite numbers, which JSON encodes as null.
    pub fn push(&mut self, row: Vec<Value>) -> Result<()> {
        assert_eq!(row.len(), self.columns.len(), "row width for {}", self.name);
        if let Some(i) = row.iter().position(Value::is_null) {
            return Err(Error::InvalidArgument(format!(
                "non-finite value in column `{}` of {}",
                self.columns[i], self.name
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Value>> {
        let i = self.columns.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }
}

/// Everything a run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub kind: &'static str,
    pub tables: Vec<Table>,
    /// Extra header fields (modes, flags, summary values).
    pub meta: BTreeMap<String, Value>,
    /// JSON printed on stdout, if any.
    pub stdout: Option<Value>,
    /// Non-caveated bound reports with `ok = false`.
    pub violations: usize,
}

/// Process exit code for a failed run: 2 for a cap, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::CapExceeded { .. } => 2,
        _ => 1,
    }
}

/// Exit code for a completed run.
pub fn exit_code_for(out: &RunOutput) -> i32 {
    if out.violations > 0 {
        3
    } else {
        0
    }
}

/// Caps the worker pool. Only the first call has an effect.
pub fn configure_threads(threads: usize) -> Result<()> {
    #[cfg(feature = "parallel")]
    {
        if threads == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        // a second call finds the pool already built
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn num(x: f64) -> Value {
    json!(x)
}

fn window_label(w: &CellSet) -> String {
    w.iter()
        .map(|c| c.iter().map(i64::to_string).collect::<Vec<_>>().join(":"))
        .collect::<Vec<_>>()
        .join("|")
}

fn with_params(mut report: BoundReport, extra: Value) -> BoundReport {
    if let (Value::Object(p), Value::Object(e)) = (&mut report.params, extra) {
        p.extend(e);
    }
    report
}

fn seeded_family(seed: u64, count: usize) -> Vec<InitialGenerator> {
    let rng = CounterRng::new(seed).fork(0x1D);
    (0..count as u64)
        .map(|i| InitialGenerator::SeededRandom(rng.draw(0, i)))
        .collect()
}

/// Runs a validated config.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let seed = config.seed.unwrap_or(0);
    let kind = config.experiment.kind();
    let mut meta = BTreeMap::new();
    let mut violations = 0;
    let mut stdout = None;
    let tables = match &config.experiment {
        Experiment::AnalyzeRule { rule, max_word_len } => {
            let a = analyze(rule, *max_word_len)?;
            let value = serde_json::to_value(&a)?;
            let mut t = Table::new(
                "analyze-rule",
                &["rule", "surjective", "injective", "balanced"],
            );
            t.push(vec![
                Value::String(serde_json::to_string(&a.rule)?),
                json!(a.surjective),
                json!(a.injective),
                json!(a.balanced),
            ])?;
            stdout = Some(value);
            vec![t]
        }
        Experiment::EvolveExact {
            rule,
            noise,
            window,
            horizon,
            initial,
            cap,
        } => {
            let w = window.build(rule.dim())?;
            let surjective = rule.dim() != 1 || crate::analysis::test_surjective(rule)?;
            meta.insert("surjective".into(), json!(surjective));
            meta.insert("initial".into(), json!(initial.name()));
            let k = rule.alphabet().size();
            let mut t_out = Table::new(
                "evolve-exact",
                &[
                    "t",
                    "window",
                    "H_nats",
                    "deficiency",
                    "tv_to_uniform",
                    "bound_rhs",
                    "ok",
                ],
            );
            let label = window_label(&w);
            for t in 0..=*horizon {
                let cone = crate::exact::dependence_cone(&w, rule, t);
                let pattern = cone.iter().map(|c| initial.value(c, k)).collect();
                let p = ConeProblem::with_cap(
                    rule.clone(),
                    noise.clone(),
                    w.clone(),
                    t,
                    crate::exact::InitialLaw::Point(pattern),
                    cap.unwrap_or(STATE_SPACE_CAP),
                )?;
                let row = check_evolution_bound_assuming_surjective(&p)?;
                t_out.push(vec![
                    json!(t),
                    json!(label),
                    num(row.entropy),
                    num(row.deficiency),
                    num(row.tv_to_uniform),
                    num(row.report.rhs),
                    json!(row.report.ok),
                ])?;
            }
            vec![t_out]
        }
        Experiment::Simulate {
            rule,
            noise,
            window,
            horizon,
            replicates,
            generator,
            sides,
            estimator,
        } => {
            let w = window.build(rule.dim())?;
            let plan = match sides {
                Some(s) => SimulationPlan::with_sides(
                    rule.clone(),
                    noise.clone(),
                    w.clone(),
                    generator.clone(),
                    *horizon,
                    *replicates,
                    seed,
                    s.clone(),
                )?,
                None => SimulationPlan::new(
                    rule.clone(),
                    noise.clone(),
                    w.clone(),
                    generator.clone(),
                    *horizon,
                    *replicates,
                    seed,
                )?,
            };
            meta.insert("wrap_contaminated".into(), json!(plan.wrap_contaminated));
            meta.insert("torus_sides".into(), json!(plan.sides));
            let samples = sample_window(&plan)?;
            let mut curve = Table::new("simulate", &MC_COLUMNS);
            for t in 0..=*horizon {
                let counts = samples.counts(t);
                let (tv, se) = tv_with_se(&counts);
                let h = crate::entropy::estimate_from_counts(&counts, *estimator);
                curve.push(mc_row(
                    w.len(),
                    t,
                    &generator.name(),
                    tv,
                    se,
                    h,
                    *estimator,
                    *replicates,
                    seed,
                ))?;
            }
            let mut marg = Table::new("simulate-marginal", &["t", "pattern", "probability", "se"]);
            let counts = samples.counts(*horizon);
            let r = *replicates as f64;
            let k = rule.alphabet().size();
            for (code, &c) in counts.iter().enumerate() {
                let p = c as f64 / r;
                let pattern: String = decode_pattern(code, k, w.len())
                    .iter()
                    .map(|s| s.to_string())
                    .collect::<Vec<_>>()
                    .join(" ");
                marg.push(vec![
                    json!(horizon),
                    json!(pattern),
                    num(p),
                    num((p * (1.0 - p) / r).sqrt()),
                ])?;
            }
            vec![curve, marg]
        }
        Experiment::MixingScan {
            rule,
            noise,
            sizes,
            eps,
            horizon,
            replicates,
            generators,
            method,
            estimator,
        } => {
            if !(*eps > 0.0 && *eps < 1.0) {
                return Err(Error::Config(format!("eps = {eps} is outside (0, 1)")));
            }
            let gens = generators
                .clone()
                .unwrap_or_else(|| InitialGenerator::adversarial_family(seed));
            let mut summary = Table::new(
                "mixing-scan",
                &[
                    "n",
                    "eps",
                    "t_mix",
                    "censored",
                    "monotone",
                    "wrap_contaminated",
                    "method",
                    "R",
                    "seed",
                ],
            );
            let mut curves = Table::new("mixing-scan-curves", &MC_COLUMNS);
            for &n in sizes {
                let w = CellSet::hypercube(rule.dim(), n);
                match method {
                    ScanMethod::MonteCarlo => {
                        let r = replicates.ok_or_else(|| {
                            Error::Config("monte-carlo scans need `replicates`".into())
                        })?;
                        let plan = SimulationPlan::new(
                            rule.clone(),
                            noise.clone(),
                            w.clone(),
                            InitialGenerator::AllZeros,
                            *horizon,
                            r,
                            seed,
                        )?;
                        let est = estimate_mixing_time(&plan, &gens, *eps, *estimator)?;
                        for c in &est.curves {
                            for t in 0..=*horizon {
                                curves.push(mc_row(
                                    n,
                                    t,
                                    &c.generator,
                                    c.tv[t],
                                    c.se[t],
                                    c.entropy[t],
                                    *estimator,
                                    r,
                                    seed,
                                ))?;
                            }
                        }
                        summary.push(vec![
                            json!(n),
                            num(*eps),
                            json!(est.t_mix.or(est.lower_bound)),
                            json!(est.t_mix.is_none()),
                            json!(est.monotone),
                            json!(est.wrap_contaminated),
                            json!("monte-carlo"),
                            json!(r),
                            json!(seed),
                        ])?;
                    }
                    ScanMethod::Exact => {
                        let k = rule.alphabet().size();
                        let mut d = vec![0.0f64; horizon + 1];
                        for g in &gens {
                            for (t, slot) in d.iter_mut().enumerate() {
                                let p = ConeProblem::from_configuration(
                                    rule.clone(),
                                    noise.clone(),
                                    w.clone(),
                                    t,
                                    |c| g.value(c, k),
                                )?;
                                let law = exact_window_marginal(&p)?;
                                let tv = law.tv_to_uniform();
                                *slot = slot.max(tv);
                                curves.push(vec![
                                    json!(n),
                                    json!(t),
                                    json!(g.name()),
                                    num(tv),
                                    num(0.0),
                                    num(law.entropy()),
                                    json!("exact"),
                                    json!(0),
                                    json!(seed),
                                ])?;
                            }
                        }
                        let t_mix = d.iter().position(|&x| x <= *eps);
                        let monotone = d.windows(2).all(|p| p[1] <= p[0] + 1e-12);
                        summary.push(vec![
                            json!(n),
                            num(*eps),
                            json!(t_mix.unwrap_or(horizon + 1)),
                            json!(t_mix.is_none()),
                            json!(monotone),
                            json!(false),
                            json!("exact"),
                            json!(0),
                            json!(seed),
                        ])?;
                    }
                }
            }
            vec![summary, curves]
        }
        Experiment::VerifyBounds {
            rule,
            noise,
            sizes,
            horizon,
            random_initials,
            assume_surjective,
        } => {
            let eq = equilibrium_constants(noise);
            meta.insert("a0".into(), num(eq.a0));
            meta.insert("b0".into(), num(eq.b0));
            let mut gens = vec![InitialGenerator::AllZeros];
            gens.extend(seeded_family(seed, *random_initials));
            let k = rule.alphabet().size();
            let mut reports = Vec::new();
            for &n in sizes {
                let w = CellSet::hypercube(rule.dim(), n);
                for g in &gens {
                    for t in 0..=*horizon {
                        let p = ConeProblem::from_configuration(
                            rule.clone(),
                            noise.clone(),
                            w.clone(),
                            t,
                            |c| g.value(c, k),
                        )?;
                        let check = if *assume_surjective {
                            check_evolution_bound_assuming_surjective(&p)?
                        } else {
                            check_evolution_bound(&p)?
                        };
                        let extra = json!({ "n": n, "initial": g.name() });
                        reports.push(with_params(check.report.clone(), extra.clone()));
                        reports.push(with_params(
                            BoundReport::with_slack(
                                "pinsker",
                                check.tv_to_uniform,
                                Relation::AtMost,
                                check.pinsker,
                                1e-12,
                                json!({ "t": t }),
                            ),
                            extra.clone(),
                        ));
                        reports.push(with_params(check_deficiency_decay(&p)?, extra));
                    }
                }
            }
            let mut table = Table::new(
                "verify-bounds",
                &["claim", "lhs", "rhs", "ok", "caveated", "params"],
            );
            for r in &reports {
                if !r.ok && !r.caveated() {
                    violations += 1;
                }
                table.push(vec![
                    json!(r.claim),
                    num(r.lhs),
                    num(r.rhs),
                    json!(r.ok),
                    json!(r.caveated()),
                    r.params.clone(),
                ])?;
            }
            meta.insert("violations".into(), json!(violations));
            vec![table]
        }
        Experiment::CircuitMix {
            network,
            noise,
            horizon,
            eps,
        } => {
            if !(*eps > 0.0 && *eps < 1.0) {
                return Err(Error::Config(format!("eps = {eps} is outside (0, 1)")));
            }
            let net = network.build()?;
            let compiled = net.compile()?;
            let curve = distance_curve(&compiled, noise, *horizon, seed)?;
            let mix = mixing_from_curve(&curve, *eps);
            meta.insert("mode".into(), serde_json::to_value(curve.mode)?);
            let mut rows = Table::new("circuit-mix", &["t", "d_phi", "bound_rhs", "H", "Xi"]);
            for t in 0..=*horizon {
                let b = bound_checks_from_curve(&curve, &net, noise, t);
                if !b.distance.ok {
                    violations += 1;
                }
                rows.push(vec![
                    json!(t),
                    num(curve.d[t]),
                    num(b.distance.rhs),
                    num(curve.entropy[t]),
                    num(curve.xi[t]),
                ])?;
            }
            let mut summary = Table::new(
                "circuit-mix-summary",
                &["sites", "eps", "t_mix", "censored", "mode"],
            );
            summary.push(vec![
                json!(net.sites()),
                num(*eps),
                json!(mix.t_mix.or(mix.lower_bound)),
                json!(mix.t_mix.is_none()),
                serde_json::to_value(curve.mode)?,
            ])?;
            vec![rows, summary]
        }
    };
    Ok(RunOutput {
        kind,
        tables,
        meta,
        stdout,
        violations,
    })
}

const MC_COLUMNS: [&str; 9] = [
    "n",
    "t",
    "generator",
    "tv_hat",
    "se",
    "H_hat",
    "estimator",
    "R",
    "seed",
];

#[allow(clippy::too_many_arguments)]
fn mc_row(
    n: usize,
    t: usize,
    generator: &str,
    tv: f64,
    se: f64,
    h: f64,
    estimator: Estimator,
    r: usize,
    seed: u64,
) -> Vec<Value> {
    vec![
        json!(n),
        json!(t),
        json!(generator),
        num(tv),
        num(se),
        num(h),
        json!(estimator.name()),
        json!(r),
        json!(seed),
    ]
}

fn header(
    config: &ExperimentConfig,
    out: &RunOutput,
    table: &Table,
    created: u64,
) -> BTreeMap<String, Value> {
    let mut h = out.meta.clone();
    h.insert("artifact".into(), json!(env!("CARGO_PKG_NAME")));
    h.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    h.insert("kind".into(), json!(out.kind));
    h.insert(
        "schema".into(),
        json!(format!("{}/{TABLE_VERSION}", table.name)),
    );
    h.insert("config_sha256".into(), json!(config.hash()));
    h.insert("seed".into(), json!(config.seed));
    h.insert("created_unix".into(), json!(created));
    h
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Writes every table of `out` into `dir` as `<table>.csv` or
/// `<table>.jsonl`.
pub fn write_output(
    config: &ExperimentConfig,
    out: &RunOutput,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let created = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut paths = Vec::new();
    for table in &out.tables {
        let head = header(config, out, table, created);
        let (path, bytes) = match config.format {
            Format::Csv => {
                let mut buf = Vec::new();
                for (k, v) in &head {
                    writeln!(buf, "# {k}: {}", csv_cell(v))?;
                }
                {
                    let mut w = csv::WriterBuilder::new()
                        .terminator(csv::Terminator::Any(b'\n'))
                        .from_writer(&mut buf);
                    w.write_record(&table.columns).map_err(csv_err)?;
                    for row in &table.rows {
                        w.write_record(row.iter().map(csv_cell)).map_err(csv_err)?;
                    }
                    w.flush()?;
                }
                (dir.join(format!("{}.csv", table.name)), buf)
            }
            Format::Jsonl => {
                let mut buf = Vec::new();
                writeln!(buf, "{}", json!({ "meta": head }))?;
                for row in &table.rows {
                    let obj: serde_json::Map<String, Value> = table
                        .columns
                        .iter()
                        .map(|c| c.to_string())
                        .zip(row.iter().cloned())
                        .collect();
                    writeln!(buf, "{}", Value::Object(obj))?;
                }
                (dir.join(format!("{}.jsonl", table.name)), buf)
            }
        };
        fs::write(&path, bytes)?;
        paths.push(path);
    }
    Ok(paths)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}
