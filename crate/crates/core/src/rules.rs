//! Deterministic cellular automata: local rules, synchronous global steps on
//! tori, elementary and linear rule families and the second-order lift.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{checked_state_space, Error, Result};
use crate::lattice::{Alphabet, Cell, Symbol};

/// Largest rule table accepted.
pub const MAX_TABLE: usize = 1 << 24;

/// A local rule `f: Σ^N → Σ`.
///
/// The neighbourhood is kept in lexicographic order and the table is indexed
/// by the mixed-radix encoding of the neighbourhood pattern, first offset most
/// significant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalRule {
    alphabet: Alphabet,
    neighborhood: Vec<Cell>,
    table: Vec<Symbol>,
    linear: Option<Vec<(Cell, i64)>>,
    radius: usize,
}

impl LocalRule {
    pub fn from_table(
        alphabet: Alphabet,
        neighborhood: Vec<Cell>,
        table: Vec<Symbol>,
    ) -> Result<Self> {
        let dim = neighborhood
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidRule("empty neighbourhood".into()))?;
        if dim == 0 {
            return Err(Error::InvalidRule("zero-dimensional offsets".into()));
        }
        if let Some(bad) = neighborhood.iter().find(|o| o.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        if neighborhood.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidRule(
                "neighbourhood offsets must be distinct and in lexicographic order".into(),
            ));
        }
        let expected = checked_state_space(alphabet.size(), neighborhood.len(), MAX_TABLE)?;
        if table.len() != expected {
            return Err(Error::InvalidRule(format!(
                "table has {} entries, expected {expected}",
                table.len()
            )));
        }
        if let Some(bad) = table.iter().find(|&&s| !alphabet.contains(s)) {
            return Err(Error::InvalidRule(format!(
                "table symbol {bad} outside alphabet"
            )));
        }
        let radius = neighborhood
            .iter()
            .flatten()
            .map(|x| x.unsigned_abs() as usize)
            .max()
            .unwrap_or(0);
        Ok(Self {
            alphabet,
            neighborhood,
            table,
            linear: None,
            radius,
        })
    }

    /// Wolfram-numbered elementary rule on `Z_2` with neighbourhood `(−1, 0, 1)`.
    pub fn elementary(code: u32) -> Result<Self> {
        if code > 255 {
            return Err(Error::InvalidRule(format!(
                "elementary code {code} out of 0..=255"
            )));
        }
        let table = (0..8).map(|i| (code >> i) & 1).collect();
        Self::from_table(Alphabet::binary(), vec![vec![-1], vec![0], vec![1]], table)
    }

    /// Linear rule `f(u) = Σ_a c_a · u_a` in the alphabet group.
    pub fn linear(alphabet: Alphabet, coeffs: &[(Cell, i64)]) -> Result<Self> {
        let mut coeffs = coeffs.to_vec();
        coeffs.sort_by(|a, b| a.0.cmp(&b.0));
        if coeffs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidRule("repeated offset in linear rule".into()));
        }
        let neighborhood: Vec<Cell> = coeffs.iter().map(|(o, _)| o.clone()).collect();
        let k = alphabet.size();
        let size = checked_state_space(k, neighborhood.len(), MAX_TABLE)?;
        let weights: Vec<i64> = coeffs.iter().map(|(_, c)| *c).collect();
        let mut digits = vec![0 as Symbol; neighborhood.len()];
        let mut table = Vec::with_capacity(size);
        for _ in 0..size {
            let value = digits
                .iter()
                .zip(&weights)
                .fold(0, |acc, (&u, &c)| alphabet.add(acc, alphabet.scale(c, u)));
            table.push(value);
            increment(&mut digits, k as Symbol);
        }
        let mut rule = Self::from_table(alphabet, neighborhood, table)?;
        rule.linear = Some(coeffs);
        Ok(rule)
    }

    /// The identity rule `f(u) = u_0`.
    pub fn identity(alphabet: Alphabet, dim: usize) -> Result<Self> {
        Self::linear(alphabet, &[(vec![0; dim], 1)])
    }

    /// Second-order lift: a rule on `Σ × Σ` sending the cell pair `(a_i, b_i)`
    /// to `(b_i, f((b_{i+a})_a) − a_i)`.
    ///
    /// The lifted global map is a bijection for every `f`. The inverse reads
    /// `a_i = f((b_{i+a})_a) − c_i` from an output `(b, c)`.
    pub fn second_order(&self) -> Result<Self> {
        let sigma = &self.alphabet;
        let k = sigma.size();
        let pair = sigma.product(sigma)?;
        let origin = vec![0i64; self.dim()];
        let mut neighborhood = self.neighborhood.clone();
        if !neighborhood.contains(&origin) {
            neighborhood.push(origin.clone());
            neighborhood.sort();
        }
        let centre = neighborhood.iter().position(|o| *o == origin).unwrap();
        // positions of the original neighbourhood inside the lifted one
        let inner: Vec<usize> = self
            .neighborhood
            .iter()
            .map(|o| neighborhood.iter().position(|p| p == o).unwrap())
            .collect();

        let size = checked_state_space(pair.size(), neighborhood.len(), MAX_TABLE)?;
        let mut digits = vec![0 as Symbol; neighborhood.len()];
        let mut current = vec![0 as Symbol; self.neighborhood.len()];
        let mut table = Vec::with_capacity(size);
        for _ in 0..size {
            for (slot, &p) in current.iter_mut().zip(&inner) {
                *slot = digits[p] % k as Symbol;
            }
            let prev = digits[centre] / k as Symbol;
            let now = digits[centre] % k as Symbol;
            let next = sigma.sub(self.eval(&current), prev);
            table.push(now * k as Symbol + next);
            increment(&mut digits, pair.size() as Symbol);
        }
        Self::from_table(pair, neighborhood, table)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn neighborhood(&self) -> &[Cell] {
        &self.neighborhood
    }

    pub fn table(&self) -> &[Symbol] {
        &self.table
    }

    pub fn dim(&self) -> usize {
        self.neighborhood[0].len()
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn is_linear(&self) -> bool {
        self.linear.is_some()
    }

    pub fn linear_coefficients(&self) -> Option<&[(Cell, i64)]> {
        self.linear.as_deref()
    }

    /// Table index of a neighbourhood pattern.
    #[inline]
    pub fn index(&self, pattern: &[Symbol]) -> usize {
        let k = self.alphabet.size();
        pattern.iter().fold(0usize, |acc, &s| acc * k + s as usize)
    }

    #[inline]
    pub fn eval(&self, pattern: &[Symbol]) -> Symbol {
        self.table[self.index(pattern)]
    }

    /// Serializable description of this rule.
    pub fn to_spec(&self) -> RuleSpec {
        match &self.linear {
            Some(coeffs) => RuleSpec::Linear {
                alphabet: self.alphabet.moduli().to_vec(),
                linear: coeffs.iter().map(|(o, c)| (offset_key(o), *c)).collect(),
            },
            None => RuleSpec::Table {
                alphabet: self.alphabet.moduli().to_vec(),
                neighborhood: self.neighborhood.clone(),
                table: self.table.clone(),
            },
        }
    }
}

/// Advances a little-endian-at-the-back mixed-radix counter.
pub(crate) fn increment(digits: &mut [Symbol], base: Symbol) {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < base {
            return;
        }
        *d = 0;
    }
}

fn offset_key(o: &[i64]) -> String {
    o.iter().map(i64::to_string).collect::<Vec<_>>().join(",")
}

fn parse_offset_key(key: &str) -> Result<Cell> {
    key.split(',')
        .map(|p| {
            p.trim()
                .parse::<i64>()
                .map_err(|_| Error::InvalidRule(format!("bad offset key {key:?}")))
        })
        .collect()
}

fn default_binary() -> Vec<u32> {
    vec![2]
}

/// JSON form of a rule.
///
/// Table rules serialize as `{alphabet, neighborhood, table}` and linear
/// rules as `{alphabet, linear: {"offset": coeff}}` where multi-dimensional
/// offsets are written `"x,y"`. `{elementary: code}` and `{second_order: rule}`
/// are accepted as input shorthands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RuleSpec {
    Elementary {
        elementary: u32,
    },
    SecondOrder {
        second_order: Box<RuleSpec>,
    },
    Linear {
        #[serde(default = "default_binary")]
        alphabet: Vec<u32>,
        linear: BTreeMap<String, i64>,
    },
    Table {
        alphabet: Vec<u32>,
        neighborhood: Vec<Cell>,
        table: Vec<Symbol>,
    },
}

impl RuleSpec {
    pub fn build(&self) -> Result<LocalRule> {
        match self {
            RuleSpec::Elementary { elementary } => LocalRule::elementary(*elementary),
            RuleSpec::SecondOrder { second_order } => second_order.build()?.second_order(),
            RuleSpec::Linear { alphabet, linear } => {
                let alphabet = Alphabet::new(alphabet.clone())?;
                let coeffs = linear
                    .iter()
                    .map(|(k, c)| Ok((parse_offset_key(k)?, *c)))
                    .collect::<Result<Vec<_>>>()?;
                LocalRule::linear(alphabet, &coeffs)
            }
            RuleSpec::Table {
                alphabet,
                neighborhood,
                table,
            } => LocalRule::from_table(
                Alphabet::new(alphabet.clone())?,
                neighborhood.clone(),
                table.clone(),
            ),
        }
    }
}

impl Serialize for LocalRule {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_spec().serialize(s)
    }
}

impl<'de> Deserialize<'de> for LocalRule {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        RuleSpec::deserialize(d)?
            .build()
            .map_err(serde::de::Error::custom)
    }
}

/// A periodic configuration on the torus `Z_{s1} × … × Z_{sd}`, stored
/// row-major with the last coordinate fastest.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TorusConfiguration {
    sides: Vec<usize>,
    data: Vec<Symbol>,
}

impl TorusConfiguration {
    pub fn new(sides: Vec<usize>, data: Vec<Symbol>) -> Result<Self> {
        if sides.is_empty() || sides.contains(&0) {
            return Err(Error::InvalidArgument(format!("bad torus sides {sides:?}")));
        }
        let volume: usize = sides.iter().product();
        if volume != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "torus {sides:?} holds {volume} cells, got {}",
                data.len()
            )));
        }
        Ok(Self { sides, data })
    }

    pub fn filled(sides: Vec<usize>, symbol: Symbol) -> Result<Self> {
        let volume = sides.iter().product();
        Self::new(sides, vec![symbol; volume])
    }

    /// One-dimensional configuration.
    pub fn ring(data: Vec<Symbol>) -> Self {
        let n = data.len();
        Self::new(vec![n], data).expect("non-empty ring")
    }

    pub fn sides(&self) -> &[usize] {
        &self.sides
    }

    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    pub fn data(&self) -> &[Symbol] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Symbol] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Flat index of an arbitrary lattice cell, wrapped onto the torus.
    pub fn index_of(&self, cell: &[i64]) -> usize {
        torus_index(&self.sides, cell)
    }

    pub fn coords_of(&self, mut index: usize) -> Cell {
        let mut c = vec![0; self.sides.len()];
        for (slot, &s) in c.iter_mut().zip(&self.sides).rev() {
            *slot = (index % s) as i64;
            index /= s;
        }
        c
    }

    pub fn get(&self, cell: &[i64]) -> Symbol {
        self.data[self.index_of(cell)]
    }

    pub fn set(&mut self, cell: &[i64], s: Symbol) {
        let i = self.index_of(cell);
        self.data[i] = s;
    }

    /// `y_i = x_{i − by}`.
    pub fn shift(&self, by: &[i64]) -> TorusConfiguration {
        let mut out = self.clone();
        for i in 0..self.data.len() {
            let c = self.coords_of(i);
            let src: Cell = c.iter().zip(by).map(|(a, b)| a - b).collect();
            out.data[i] = self.get(&src);
        }
        out
    }
}

pub(crate) fn torus_index(sides: &[usize], cell: &[i64]) -> usize {
    cell.iter().zip(sides).fold(0usize, |acc, (&x, &s)| {
        acc * s + x.rem_euclid(s as i64) as usize
    })
}

/// Neighbour index table of a rule on a fixed torus shape.
#[derive(Debug, Clone)]
pub struct Stencil {
    arity: usize,
    neighbours: Vec<usize>,
}

impl Stencil {
    pub fn new(rule: &LocalRule, sides: &[usize]) -> Result<Self> {
        if sides.len() != rule.dim() {
            return Err(Error::DimensionMismatch {
                expected: rule.dim(),
                found: sides.len(),
            });
        }
        let required = 2 * rule.radius() + 1;
        if let Some(&side) = sides.iter().find(|&&s| s < required) {
            return Err(Error::TorusTooSmall { side, required });
        }
        let volume: usize = sides.iter().product();
        let arity = rule.neighborhood().len();
        let mut neighbours = Vec::with_capacity(volume * arity);
        let probe = TorusConfiguration::new(sides.to_vec(), vec![0; volume])?;
        for i in 0..volume {
            let c = probe.coords_of(i);
            for o in rule.neighborhood() {
                let n: Cell = c.iter().zip(o).map(|(a, b)| a + b).collect();
                neighbours.push(torus_index(sides, &n));
            }
        }
        Ok(Self { arity, neighbours })
    }

    /// Writes `F(src)` into `dst`.
    #[inline]
    pub fn step(&self, rule: &LocalRule, src: &[Symbol], dst: &mut [Symbol]) {
        let k = rule.alphabet().size();
        let table = rule.table();
        for (out, nb) in dst.iter_mut().zip(self.neighbours.chunks_exact(self.arity)) {
            let idx = nb.iter().fold(0usize, |acc, &j| acc * k + src[j] as usize);
            *out = table[idx];
        }
    }
}

/// One synchronous application of the global map with periodic indexing.
pub fn apply_rule(x: &TorusConfiguration, rule: &LocalRule) -> Result<TorusConfiguration> {
    if !x.data.iter().all(|&s| rule.alphabet().contains(s)) {
        return Err(Error::InvalidArgument(
            "configuration symbol outside alphabet".into(),
        ));
    }
    let stencil = Stencil::new(rule, &x.sides)?;
    let mut out = x.clone();
    stencil.step(rule, &x.data, &mut out.data);
    Ok(out)
}
