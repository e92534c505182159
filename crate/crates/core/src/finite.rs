//! Noisy reversible circuits: a time-inhomogeneous chain on `Σ^A` where each
//! step applies a bijective layer of gates and then independent noise on
//! every site.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::entropy::{decode_pattern, encode_pattern, entropy_of};
use crate::error::{checked_state_space, Error, Result};
use crate::lattice::{Alphabet, Symbol};
use crate::noise::NoiseModel;
use crate::rng::{CounterRng, SeqRng};
use crate::theory::{BoundReport, Relation};

/// Largest state space that is ever held densely.
pub const STATE_CAP: usize = 1 << 20;
/// Largest state space whose supremum over point initials is computed by
/// evolving every initial.
pub const EXACT_SUP_CAP: usize = 1 << 12;
/// Number of random point initials in sampled mode.
pub const SAMPLED_INITIALS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateKind {
    /// `a ↦ a + 1`.
    Not,
    /// `a ↦ a + by`.
    Translate,
    /// Sites `[c, t]`: `t ↦ t + by` when `c ≠ 0`.
    Cnot,
    /// Sites `[c₁, c₂, t]`: `t ↦ t + by` when both controls are non-zero.
    Toffoli,
    Swap,
    /// Explicit bijection of `Σ^sites`, codes mixed radix with the first
    /// listed site most significant.
    Permutation,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub by: Option<Symbol>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<u32>>,
}

impl GateParams {
    fn is_empty(&self) -> bool {
        self.by.is_none() && self.table.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gate {
    pub gate: GateKind,
    pub sites: Vec<usize>,
    #[serde(default, skip_serializing_if = "GateParams::is_empty")]
    pub params: GateParams,
}

impl Gate {
    fn plain(gate: GateKind, sites: Vec<usize>, by: Option<Symbol>) -> Self {
        Self {
            gate,
            sites,
            params: GateParams { by, table: None },
        }
    }

    pub fn not(site: usize) -> Self {
        Self::plain(GateKind::Not, vec![site], None)
    }

    pub fn translate(site: usize, by: Symbol) -> Self {
        Self::plain(GateKind::Translate, vec![site], Some(by))
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self::plain(GateKind::Cnot, vec![control, target], None)
    }

    pub fn controlled(control: usize, target: usize, by: Symbol) -> Self {
        Self::plain(GateKind::Cnot, vec![control, target], Some(by))
    }

    pub fn toffoli(c1: usize, c2: usize, target: usize) -> Self {
        Self::plain(GateKind::Toffoli, vec![c1, c2, target], None)
    }

    pub fn swap(a: usize, b: usize) -> Self {
        Self::plain(GateKind::Swap, vec![a, b], None)
    }

    pub fn permutation(sites: Vec<usize>, table: Vec<u32>) -> Self {
        Self {
            gate: GateKind::Permutation,
            sites,
            params: GateParams {
                by: None,
                table: Some(table),
            },
        }
    }

    fn by(&self) -> Symbol {
        self.params.by.unwrap_or(1)
    }

    fn validate(&self, sites: usize, alphabet: &Alphabet) -> Result<()> {
        let arity = match self.gate {
            GateKind::Not | GateKind::Translate => Some(1),
            GateKind::Cnot | GateKind::Swap => Some(2),
            GateKind::Toffoli => Some(3),
            GateKind::Permutation => None,
        };
        let bad = |m: String| Err(Error::InvalidNetwork(m));
        if let Some(a) = arity {
            if self.sites.len() != a {
                return bad(format!(
                    "{:?} takes {a} sites, got {}",
                    self.gate,
                    self.sites.len()
                ));
            }
        }
        if self.sites.is_empty() {
            return bad("gate acts on no sites".into());
        }
        if let Some(&s) = self.sites.iter().find(|&&s| s >= sites) {
            return bad(format!("site {s} is outside 0..{sites}"));
        }
        let mut sorted = self.sites.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.sites.len() {
            return bad("gate lists a site twice".into());
        }
        let by_allowed = matches!(
            self.gate,
            GateKind::Translate | GateKind::Cnot | GateKind::Toffoli
        );
        if self.params.by.is_some() && !by_allowed {
            return bad(format!("{:?} takes no `by`", self.gate));
        }
        if self.gate == GateKind::Translate && self.params.by.is_none() {
            return bad("translate needs `by`".into());
        }
        if !alphabet.contains(self.by()) {
            return bad(format!("`by` = {} is not a symbol", self.by()));
        }
        match (&self.params.table, self.gate) {
            (Some(table), GateKind::Permutation) => {
                let n = checked_state_space(alphabet.size(), self.sites.len(), STATE_CAP)?;
                if table.len() != n {
                    return bad(format!("table has {} entries, expected {n}", table.len()));
                }
                let mut seen = vec![false; n];
                for &v in table {
                    if v as usize >= n || std::mem::replace(&mut seen[v as usize], true) {
                        return bad("table is not a permutation".into());
                    }
                }
            }
            (None, GateKind::Permutation) => return bad("permutation needs `table`".into()),
            (Some(_), _) => return bad(format!("{:?} takes no table", self.gate)),
            _ => {}
        }
        Ok(())
    }

    fn apply(&self, digits: &mut [Symbol], alphabet: &Alphabet) {
        let s = &self.sites;
        match self.gate {
            GateKind::Not => digits[s[0]] = alphabet.add(digits[s[0]], 1),
            GateKind::Translate => digits[s[0]] = alphabet.add(digits[s[0]], self.by()),
            GateKind::Cnot => {
                if digits[s[0]] != 0 {
                    digits[s[1]] = alphabet.add(digits[s[1]], self.by());
                }
            }
            GateKind::Toffoli => {
                if digits[s[0]] != 0 && digits[s[1]] != 0 {
                    digits[s[2]] = alphabet.add(digits[s[2]], self.by());
                }
            }
            GateKind::Swap => digits.swap(s[0], s[1]),
            GateKind::Permutation => {
                let k = alphabet.size();
                let local: Vec<Symbol> = s.iter().map(|&i| digits[i]).collect();
                let table = self.params.table.as_ref().expect("validated");
                let image = decode_pattern(table[encode_pattern(&local, k)] as usize, k, s.len());
                for (&i, v) in s.iter().zip(image) {
                    digits[i] = v;
                }
            }
        }
    }

    /// Whether the gate is an affine map of the group `Σ^A`.
    fn is_affine(&self, alphabet: &Alphabet) -> bool {
        match self.gate {
            GateKind::Not | GateKind::Translate | GateKind::Swap => true,
            // `[c ≠ 0]·by` is linear in `c` only over Z_2
            GateKind::Cnot => alphabet.size() == 2,
            GateKind::Toffoli | GateKind::Permutation => false,
        }
    }
}

pub type Layer = Vec<Gate>;

/// Which layer acts at step `t ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    /// Layer `t − 1`; the chain stops after the last layer.
    Fixed,
    /// Layer `(t − 1) mod L`.
    Periodic,
    /// A uniformly random layer per step, keyed by the seed.
    SeededRandom(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    sites: usize,
    alphabet: Alphabet,
    layers: Vec<Layer>,
    #[serde(default = "default_schedule")]
    schedule: Schedule,
}

fn default_schedule() -> Schedule {
    Schedule::Periodic
}

/// A list of reversible layers on `sites` copies of `alphabet`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNetwork", into = "RawNetwork")]
pub struct ReversibleNetwork {
    sites: usize,
    alphabet: Alphabet,
    layers: Vec<Layer>,
    schedule: Schedule,
}

impl TryFrom<RawNetwork> for ReversibleNetwork {
    type Error = Error;

    fn try_from(raw: RawNetwork) -> Result<Self> {
        Self::new(raw.sites, raw.alphabet, raw.layers, raw.schedule)
    }
}

impl From<ReversibleNetwork> for RawNetwork {
    fn from(n: ReversibleNetwork) -> Self {
        RawNetwork {
            sites: n.sites,
            alphabet: n.alphabet,
            layers: n.layers,
            schedule: n.schedule,
        }
    }
}

impl ReversibleNetwork {
    pub fn new(
        sites: usize,
        alphabet: Alphabet,
        layers: Vec<Layer>,
        schedule: Schedule,
    ) -> Result<Self> {
        if sites == 0 {
            return Err(Error::InvalidNetwork("no sites".into()));
        }
        if layers.is_empty() {
            return Err(Error::InvalidNetwork("no layers".into()));
        }
        for (li, layer) in layers.iter().enumerate() {
            let mut used = vec![false; sites];
            for g in layer {
                g.validate(sites, &alphabet)?;
                for &s in &g.sites {
                    if std::mem::replace(&mut used[s], true) {
                        return Err(Error::InvalidNetwork(format!(
                            "layer {li} uses site {s} in two gates"
                        )));
                    }
                }
            }
        }
        Ok(Self {
            sites,
            alphabet,
            layers,
            schedule,
        })
    }

    /// Brick-wall CNOT layers on `bits` bits: `(0→1), (2→3), …` then
    /// `(1→2), (3→4), …` closing the ring when `bits` is even, cycled.
    pub fn alternating_cnot(bits: usize) -> Result<Self> {
        if bits < 2 {
            return Err(Error::InvalidNetwork("need at least two bits".into()));
        }
        let a: Layer = (0..bits / 2)
            .map(|i| Gate::cnot(2 * i, 2 * i + 1))
            .collect();
        let b: Layer = (0..bits / 2)
            .map(|i| Gate::cnot(2 * i + 1, (2 * i + 2) % bits))
            .collect();
        Self::new(bits, Alphabet::binary(), vec![a, b], Schedule::Periodic)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn schedule(&self) -> Schedule {
        self.schedule
    }

    /// `|Σ|^|A|`, if within `cap`.
    pub fn state_count(&self, cap: usize) -> Result<usize> {
        checked_state_space(self.alphabet.size(), self.sites, cap)
    }

    /// Index of the layer applied at step `t ≥ 1`.
    pub fn layer_at(&self, t: usize) -> Result<usize> {
        let l = self.layers.len();
        match self.schedule {
            Schedule::Fixed if t == 0 || t > l => Err(Error::InvalidArgument(format!(
                "step {t} is outside the fixed schedule of {l} layers"
            ))),
            Schedule::Fixed => Ok(t - 1),
            Schedule::Periodic => Ok((t.max(1) - 1) % l),
            Schedule::SeededRandom(seed) => {
                Ok((CounterRng::new(seed).draw(t as u64, 0) % l as u64) as usize)
            }
        }
    }

    /// Whether every step is an affine map of `Σ^A`.
    pub fn is_affine(&self) -> bool {
        self.layers
            .iter()
            .flatten()
            .all(|g| g.is_affine(&self.alphabet))
    }

    /// Longest horizon the schedule allows.
    pub fn max_steps(&self) -> Option<usize> {
        match self.schedule {
            Schedule::Fixed => Some(self.layers.len()),
            _ => None,
        }
    }

    /// The bijection of one layer as a table over state codes.
    pub fn layer_permutation(&self, layer: usize) -> Result<Vec<u32>> {
        let n = self.state_count(STATE_CAP)?;
        let k = self.alphabet.size();
        let mut digits = vec![0 as Symbol; self.sites];
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let mut img = digits.clone();
            for g in &self.layers[layer] {
                g.apply(&mut img, &self.alphabet);
            }
            out.push(encode_pattern(&img, k) as u32);
            crate::rules::increment(&mut digits, k as u32);
        }
        Ok(out)
    }

    /// Every layer as a permutation table.
    pub fn compile(&self) -> Result<CompiledNetwork> {
        let perms = (0..self.layers.len())
            .map(|i| self.layer_permutation(i))
            .collect::<Result<_>>()?;
        Ok(CompiledNetwork {
            network: self.clone(),
            perms,
        })
    }
}

#[derive(Debug, Clone)]
pub struct CompiledNetwork {
    pub network: ReversibleNetwork,
    perms: Vec<Vec<u32>>,
}

impl CompiledNetwork {
    pub fn permutation(&self, layer: usize) -> &[u32] {
        &self.perms[layer]
    }
}

/// A law on `Σ^A` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub probs: Vec<f64>,
    pub t: usize,
}

impl ChainState {
    pub fn point(n: usize, x: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[x] = 1.0;
        Self { probs, t: 0 }
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            probs: vec![1.0 / n as f64; n],
            t: 0,
        }
    }

    pub fn entropy(&self) -> f64 {
        entropy_of(&self.probs)
    }

    /// `log |Σ^A| − H`.
    pub fn deficiency(&self) -> f64 {
        ((self.probs.len() as f64).ln() - self.entropy()).max(0.0)
    }

    pub fn tv_to_uniform(&self) -> f64 {
        let u = 1.0 / self.probs.len() as f64;
        0.5 * crate::entropy::stable_sum(self.probs.iter().map(|p| (p - u).abs()))
    }
}

/// Moves the mass at `x` to `perm[x]`.
pub fn apply_layer(state: &ChainState, perm: &[u32]) -> Result<ChainState> {
    if perm.len() != state.probs.len() {
        return Err(Error::ShapeMismatch(format!(
            "layer acts on {} states, law has {}",
            perm.len(),
            state.probs.len()
        )));
    }
    let mut out = vec![0.0; perm.len()];
    for (x, &p) in state.probs.iter().enumerate() {
        out[perm[x] as usize] = p;
    }
    Ok(ChainState {
        probs: out,
        t: state.t,
    })
}

fn step(
    state: &mut ChainState,
    net: &CompiledNetwork,
    noise: &NoiseModel,
    scratch: &mut Vec<f64>,
) -> Result<()> {
    let layer = net.network.layer_at(state.t + 1)?;
    let perm = net.permutation(layer);
    scratch.clear();
    scratch.resize(perm.len(), 0.0);
    for (x, &p) in state.probs.iter().enumerate() {
        scratch[perm[x] as usize] = p;
    }
    std::mem::swap(&mut state.probs, scratch);
    noise.push_forward(&mut state.probs, net.network.sites);
    state.t += 1;
    Ok(())
}

fn check_noise(net: &ReversibleNetwork, noise: &NoiseModel) -> Result<()> {
    if noise.alphabet() != net.alphabet() {
        return Err(Error::InvalidNoise(
            "noise and network alphabets differ".into(),
        ));
    }
    Ok(())
}

/// `t` alternations of the scheduled layer and per-site noise.
pub fn evolve_chain_exact(
    initial: &ChainState,
    net: &CompiledNetwork,
    noise: &NoiseModel,
    t: usize,
) -> Result<ChainState> {
    check_noise(&net.network, noise)?;
    let n = net.network.state_count(STATE_CAP)?;
    if initial.probs.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "law has {} entries, network has {n} states",
            initial.probs.len()
        )));
    }
    let mut state = initial.clone();
    let mut scratch = Vec::with_capacity(n);
    for _ in 0..t {
        step(&mut state, net, noise, &mut scratch)?;
    }
    Ok(state)
}

/// How the supremum over initial states was taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SupMode {
    /// Every point initial was evolved.
    Exact,
    /// Affine layers under additive noise: all point initials are at the same
    /// distance, so one evolution is exact.
    ExactAffine,
    /// A random subset of point initials; values are lower bounds.
    Sampled,
}

/// `d_Φ(t)`, the largest deficiency and the matching entropy for
/// `t = 0..=horizon`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceCurve {
    pub d: Vec<f64>,
    pub xi: Vec<f64>,
    pub entropy: Vec<f64>,
    pub mode: SupMode,
    pub initials: usize,
}

/// Chooses how to take the supremum for a network of `n` states.
pub fn sup_mode(net: &ReversibleNetwork, noise: &NoiseModel, n: usize) -> SupMode {
    if net.is_affine() && noise.is_additive() {
        SupMode::ExactAffine
    } else if n <= EXACT_SUP_CAP {
        SupMode::Exact
    } else {
        SupMode::Sampled
    }
}

pub fn distance_curve(
    net: &CompiledNetwork,
    noise: &NoiseModel,
    horizon: usize,
    seed: u64,
) -> Result<DistanceCurve> {
    check_noise(&net.network, noise)?;
    if let Some(max) = net.network.max_steps() {
        if horizon > max {
            return Err(Error::InvalidArgument(format!(
                "horizon {horizon} exceeds the {max} layers of a fixed schedule"
            )));
        }
    }
    let n = net.network.state_count(STATE_CAP)?;
    let mode = sup_mode(&net.network, noise, n);
    let initials: Vec<usize> = match mode {
        SupMode::ExactAffine => vec![0],
        SupMode::Exact => (0..n).collect(),
        SupMode::Sampled => {
            let mut rng = SeqRng::new(seed);
            (0..SAMPLED_INITIALS)
                .map(|_| rng.below(n as u64) as usize)
                .collect()
        }
    };
    let run = |x: &usize| -> Result<Vec<(f64, f64)>> {
        let mut state = ChainState::point(n, *x);
        let mut scratch = Vec::with_capacity(n);
        let mut out = Vec::with_capacity(horizon + 1);
        out.push((state.tv_to_uniform(), state.deficiency()));
        for _ in 0..horizon {
            step(&mut state, net, noise, &mut scratch)?;
            out.push((state.tv_to_uniform(), state.deficiency()));
        }
        Ok(out)
    };
    #[cfg(feature = "parallel")]
    let rows: Vec<Vec<(f64, f64)>> = {
        use rayon::prelude::*;
        initials.par_iter().map(run).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Vec<(f64, f64)>> = initials.iter().map(run).collect::<Result<_>>()?;

    let full = (n as f64).ln();
    let mut d = vec![0.0f64; horizon + 1];
    let mut xi = vec![0.0f64; horizon + 1];
    for row in &rows {
        for (t, &(tv, def)) in row.iter().enumerate() {
            d[t] = d[t].max(tv);
            xi[t] = xi[t].max(def);
        }
    }
    let entropy = xi.iter().map(|x| full - x).collect();
    Ok(DistanceCurve {
        d,
        xi,
        entropy,
        mode,
        initials: initials.len(),
    })
}

/// `d_Φ(t)` with the mode used.
pub fn worst_case_distance(
    net: &CompiledNetwork,
    noise: &NoiseModel,
    t: usize,
) -> Result<(f64, SupMode)> {
    let c = distance_curve(net, noise, t, 0)?;
    Ok((c.d[t], c.mode))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainMixing {
    pub t_mix: Option<usize>,
    /// `horizon + 1` when the curve never dropped below `ε`.
    pub lower_bound: Option<usize>,
    pub mode: SupMode,
}

pub fn chain_mixing_time(
    net: &CompiledNetwork,
    noise: &NoiseModel,
    eps: f64,
    horizon: usize,
) -> Result<ChainMixing> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "ε = {eps} is outside (0, 1)"
        )));
    }
    let c = distance_curve(net, noise, horizon, 0)?;
    Ok(mixing_from_curve(&c, eps))
}

pub fn mixing_from_curve(c: &DistanceCurve, eps: f64) -> ChainMixing {
    let t_mix = c.d.iter().position(|&d| d <= eps);
    ChainMixing {
        t_mix,
        lower_bound: t_mix.is_none().then_some(c.d.len()),
        mode: c.mode,
    }
}

/// `√(h_max/2)·|A|^{1/2}·(1−κ)^{t/2}`.
pub fn finite_bound_rhs(sites: usize, h_max: f64, kappa: f64, t: usize) -> f64 {
    (h_max / 2.0).sqrt() * (sites as f64).sqrt() * (1.0 - kappa).powf(t as f64 / 2.0)
}

/// Distance and entropy forms of the circuit bound at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteBoundCheck {
    pub distance: BoundReport,
    pub entropy: BoundReport,
}

pub fn check_finite_bound(
    net: &CompiledNetwork,
    noise: &NoiseModel,
    t: usize,
) -> Result<FiniteBoundCheck> {
    let c = distance_curve(net, noise, t, 0)?;
    Ok(bound_checks_from_curve(&c, &net.network, noise, t))
}

pub fn bound_checks_from_curve(
    c: &DistanceCurve,
    net: &ReversibleNetwork,
    noise: &NoiseModel,
    t: usize,
) -> FiniteBoundCheck {
    let kappa = noise.kappa();
    let h = net.alphabet().h_max();
    let sites = net.sites();
    let params = json!({ "t": t, "sites": sites, "kappa": kappa, "mode": c.mode });
    FiniteBoundCheck {
        distance: BoundReport::new(
            "circuit-distance",
            c.d[t],
            Relation::AtMost,
            finite_bound_rhs(sites, h, kappa, t),
            params.clone(),
        ),
        entropy: BoundReport::new(
            "circuit-deficiency",
            c.xi[t],
            Relation::AtMost,
            (1.0 - kappa).powi(t as i32) * sites as f64 * h,
            params,
        ),
    }
}

/// `H(X^{s+1}) ≥ κ|A|h_max + (1−κ)H(X^s)` along `steps` steps from
/// `initial`.
pub fn check_entropy_recursion(
    initial: &ChainState,
    net: &CompiledNetwork,
    noise: &NoiseModel,
    steps: usize,
) -> Result<Vec<BoundReport>> {
    check_noise(&net.network, noise)?;
    let kappa = noise.kappa();
    let full = net.network.sites() as f64 * net.network.alphabet().h_max();
    let mut state = initial.clone();
    let mut scratch = Vec::new();
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        let before = state.entropy();
        step(&mut state, net, noise, &mut scratch)?;
        out.push(BoundReport::new(
            "circuit-entropy-recursion",
            state.entropy(),
            Relation::AtLeast,
            kappa * full + (1.0 - kappa) * before,
            json!({ "t": state.t }),
        ));
    }
    Ok(out)
}
