//! Decision procedures for surjectivity and injectivity of one-dimensional
//! cellular automata on their de Bruijn automaton, together with brute-force
//! preimage counting used to cross-check them.

use std::collections::{HashSet, VecDeque};

use serde::Serialize;

use crate::error::{checked_state_space, Error, Result};
use crate::lattice::Symbol;
use crate::rules::{increment, LocalRule, TorusConfiguration};

/// Default longest word checked by [`balance_check`].
pub const DEFAULT_WORD_CAP: usize = 8;
/// Largest preimage enumeration attempted by the oracles.
pub const ENUMERATION_CAP: usize = 1 << 24;
/// Largest number of subsets explored by [`test_surjective`].
pub const SUBSET_CAP: usize = 1 << 22;

fn require_1d(rule: &LocalRule) -> Result<()> {
    match rule.dim() {
        1 => Ok(()),
        d => Err(Error::NotOneDimensional(d)),
    }
}

/// Rewrites a 1D rule on the contiguous neighbourhood `⟦lo, hi⟧` spanning
/// its offsets. The global map is unchanged.
pub fn contiguous(rule: &LocalRule) -> Result<LocalRule> {
    require_1d(rule)?;
    let offsets: Vec<i64> = rule.neighborhood().iter().map(|o| o[0]).collect();
    let lo = offsets[0];
    let hi = *offsets.last().unwrap();
    let m = (hi - lo + 1) as usize;
    if m == offsets.len() {
        return Ok(rule.clone());
    }
    let k = rule.alphabet().size();
    let size = checked_state_space(k, m, crate::rules::MAX_TABLE)?;
    let mut word = vec![0 as Symbol; m];
    let mut pattern = vec![0 as Symbol; offsets.len()];
    let mut table = Vec::with_capacity(size);
    for _ in 0..size {
        for (slot, &o) in pattern.iter_mut().zip(&offsets) {
            *slot = word[(o - lo) as usize];
        }
        table.push(rule.eval(&pattern));
        increment(&mut word, k as Symbol);
    }
    LocalRule::from_table(
        rule.alphabet().clone(),
        (lo..=hi).map(|o| vec![o]).collect(),
        table,
    )
}

/// The de Bruijn automaton of a 1D rule with contiguous window length `m`.
///
/// States are words of length `m − 1`; the edge for an `m`-word `w` runs from
/// its prefix to its suffix and carries the label `f(w)`. Edges are indexed
/// by the code of `w`, so the edges leaving state `s` are `s·k .. s·k + k`.
#[derive(Debug, Clone)]
pub struct DeBruijnAutomaton {
    k: usize,
    m: usize,
    states: usize,
    labels: Vec<Symbol>,
}

impl DeBruijnAutomaton {
    pub fn new(rule: &LocalRule) -> Result<Self> {
        let rule = contiguous(rule)?;
        let k = rule.alphabet().size();
        let m = rule.neighborhood().len();
        Ok(Self {
            k,
            m,
            states: k.pow((m - 1) as u32),
            labels: rule.table().to_vec(),
        })
    }

    pub fn alphabet_size(&self) -> usize {
        self.k
    }

    /// Length of the contiguous neighbourhood.
    pub fn window(&self) -> usize {
        self.m
    }

    pub fn state_count(&self) -> usize {
        self.states
    }

    pub fn edge_count(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn source(&self, edge: usize) -> usize {
        edge / self.k
    }

    #[inline]
    pub fn target(&self, edge: usize) -> usize {
        edge % self.states
    }

    #[inline]
    pub fn label(&self, edge: usize) -> Symbol {
        self.labels[edge]
    }

    pub fn out_edges(&self, state: usize) -> std::ops::Range<usize> {
        state * self.k..(state + 1) * self.k
    }

    pub fn in_edges(&self, state: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.k).map(move |a| a * self.states + state)
    }
}

pub fn build_de_bruijn(rule: &LocalRule) -> Result<DeBruijnAutomaton> {
    DeBruijnAutomaton::new(rule)
}

/// Surjectivity via subset construction: the global map is onto iff no word
/// drives the full state set to the empty set.
pub fn test_surjective(rule: &LocalRule) -> Result<bool> {
    let aut = DeBruijnAutomaton::new(rule)?;
    let n = aut.state_count();
    let words = n.div_ceil(64);
    let mut full = vec![0u64; words];
    for s in 0..n {
        full[s / 64] |= 1 << (s % 64);
    }
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(full.clone());
    queue.push_back(full);
    let mut next: Vec<Vec<u64>> = vec![vec![0; words]; aut.alphabet_size()];
    while let Some(set) = queue.pop_front() {
        next.iter_mut().for_each(|v| v.fill(0));
        for s in 0..n {
            if set[s / 64] >> (s % 64) & 1 == 0 {
                continue;
            }
            for e in aut.out_edges(s) {
                let t = aut.target(e);
                next[aut.label(e) as usize][t / 64] |= 1 << (t % 64);
            }
        }
        for image in &next {
            if image.iter().all(|&w| w == 0) {
                return Ok(false);
            }
            if !seen.contains(image) {
                if seen.len() >= SUBSET_CAP {
                    return Err(Error::CapExceeded {
                        requested: crate::error::Size::Exact(seen.len() + 1),
                        cap: SUBSET_CAP,
                    });
                }
                seen.insert(image.clone());
                queue.push_back(image.clone());
            }
        }
    }
    Ok(true)
}

/// Injectivity via the pair graph: keep pairs of states joined by equally
/// labelled edges, trim to pairs lying on bi-infinite paths, and accept iff
/// only diagonal pairs survive.
pub fn test_injective(rule: &LocalRule) -> Result<bool> {
    let aut = DeBruijnAutomaton::new(rule)?;
    let n = aut.state_count();
    let pairs = n
        .checked_mul(n)
        .filter(|&p| p <= ENUMERATION_CAP)
        .ok_or(Error::CapExceeded {
            requested: crate::error::Size::Overflow,
            cap: ENUMERATION_CAP,
        })?;
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); pairs];
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); pairs];
    for u in 0..n {
        for v in 0..n {
            let from = u * n + v;
            for e1 in aut.out_edges(u) {
                for e2 in aut.out_edges(v) {
                    if aut.label(e1) == aut.label(e2) {
                        let to = aut.target(e1) * n + aut.target(e2);
                        succ[from].push(to);
                        pred[to].push(from);
                    }
                }
            }
        }
    }
    let mut alive = vec![true; pairs];
    let mut outdeg: Vec<usize> = succ.iter().map(Vec::len).collect();
    let mut indeg: Vec<usize> = pred.iter().map(Vec::len).collect();
    let mut queue: VecDeque<usize> = (0..pairs)
        .filter(|&p| outdeg[p] == 0 || indeg[p] == 0)
        .collect();
    while let Some(p) = queue.pop_front() {
        if !alive[p] {
            continue;
        }
        alive[p] = false;
        for &q in &succ[p] {
            indeg[q] -= 1;
            if alive[q] && indeg[q] == 0 {
                queue.push_back(q);
            }
        }
        for &q in &pred[p] {
            outdeg[q] -= 1;
            if alive[q] && outdeg[q] == 0 {
                queue.push_back(q);
            }
        }
    }
    Ok((0..pairs).all(|p| !alive[p] || p / n == p % n))
}

/// Number of words of length `|w| + m − 1` whose sliding image is `w`,
/// by exhaustive enumeration.
pub fn preimage_count_oracle(rule: &LocalRule, w: &[Symbol]) -> Result<u64> {
    let rule = contiguous(rule)?;
    let k = rule.alphabet().size();
    let m = rule.neighborhood().len();
    let len = w.len() + m - 1;
    let total = checked_state_space(k, len, ENUMERATION_CAP)?;
    let mut word = vec![0 as Symbol; len];
    let mut count = 0;
    for _ in 0..total {
        if (0..w.len()).all(|i| rule.eval(&word[i..i + m]) == w[i]) {
            count += 1;
        }
        increment(&mut word, k as Symbol);
    }
    Ok(count)
}

/// Histogram of sliding images over all words of length `len + m − 1`,
/// indexed by image code.
pub fn image_histogram(rule: &LocalRule, len: usize) -> Result<Vec<u64>> {
    let rule = contiguous(rule)?;
    let k = rule.alphabet().size();
    let m = rule.neighborhood().len();
    let total = checked_state_space(k, len + m - 1, ENUMERATION_CAP)?;
    let mut hist = vec![0u64; k.pow(len as u32)];
    let mut word = vec![0 as Symbol; len + m - 1];
    for _ in 0..total {
        let code = (0..len).fold(0usize, |acc, i| {
            acc * k + rule.eval(&word[i..i + m]) as usize
        });
        hist[code] += 1;
        increment(&mut word, k as Symbol);
    }
    Ok(hist)
}

/// Whether every word of length `1..=max_len` has exactly `|Σ|^{m−1}`
/// preimages.
pub fn balance_check(rule: &LocalRule, max_len: usize) -> Result<bool> {
    let c = contiguous(rule)?;
    let expected = (c.alphabet().size() as u64).pow((c.neighborhood().len() - 1) as u32);
    for len in 1..=max_len {
        if image_histogram(&c, len)?.iter().any(|&h| h != expected) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Mirror image `x_i ↦ x_{−i}` of a 1D rule.
pub fn reflect(rule: &LocalRule) -> Result<LocalRule> {
    let c = contiguous(rule)?;
    let k = c.alphabet().size();
    let m = c.neighborhood().len();
    let lo = c.neighborhood()[0][0];
    let hi = c.neighborhood()[m - 1][0];
    let mut word = vec![0 as Symbol; m];
    let mut table = Vec::with_capacity(c.table().len());
    for _ in 0..c.table().len() {
        let rev: Vec<Symbol> = word.iter().rev().copied().collect();
        table.push(c.eval(&rev));
        increment(&mut word, k as Symbol);
    }
    LocalRule::from_table(
        c.alphabet().clone(),
        (-hi..=-lo).map(|o| vec![o]).collect(),
        table,
    )
}

/// Conjugate `σ ∘ f ∘ σ^{-1}` by a symbol permutation `σ`.
pub fn conjugate(rule: &LocalRule, sigma: &[Symbol]) -> Result<LocalRule> {
    let k = rule.alphabet().size();
    if sigma.len() != k {
        return Err(Error::InvalidArgument(
            "permutation length differs from alphabet".into(),
        ));
    }
    let mut inv = vec![Symbol::MAX; k];
    for (a, &b) in sigma.iter().enumerate() {
        if (b as usize) >= k || inv[b as usize] != Symbol::MAX {
            return Err(Error::InvalidArgument(format!(
                "{sigma:?} is not a permutation"
            )));
        }
        inv[b as usize] = a as Symbol;
    }
    let arity = rule.neighborhood().len();
    let mut word = vec![0 as Symbol; arity];
    let mut table = Vec::with_capacity(rule.table().len());
    for _ in 0..rule.table().len() {
        let pre: Vec<Symbol> = word.iter().map(|&s| inv[s as usize]).collect();
        table.push(sigma[rule.eval(&pre) as usize]);
        increment(&mut word, k as Symbol);
    }
    LocalRule::from_table(rule.alphabet().clone(), rule.neighborhood().to_vec(), table)
}

/// Searches rings of length up to `max_period` for a nonzero configuration
/// mapped to the all-zero configuration.
pub fn kernel_witness(rule: &LocalRule, max_period: usize) -> Result<Option<TorusConfiguration>> {
    require_1d(rule)?;
    let k = rule.alphabet().size();
    for p in (2 * rule.radius() + 1).max(1)..=max_period {
        let total = checked_state_space(k, p, ENUMERATION_CAP)?;
        let stencil = crate::rules::Stencil::new(rule, &[p])?;
        let mut x = vec![0 as Symbol; p];
        let mut y = vec![0 as Symbol; p];
        for _ in 1..total {
            increment(&mut x, k as Symbol);
            stencil.step(rule, &x, &mut y);
            if y.iter().all(|&s| s == 0) {
                return Ok(Some(TorusConfiguration::ring(x)));
            }
        }
    }
    Ok(None)
}

/// Summary emitted by the `analyze-rule` experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleAnalysis {
    pub rule: LocalRule,
    pub surjective: bool,
    pub injective: bool,
    pub balanced: bool,
}

pub fn analyze(rule: &LocalRule, max_word_len: usize) -> Result<RuleAnalysis> {
    Ok(RuleAnalysis {
        rule: rule.clone(),
        surjective: test_surjective(rule)?,
        injective: test_injective(rule)?,
        balanced: balance_check(rule, max_word_len)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Alphabet;

    fn eca(code: u32) -> LocalRule {
        LocalRule::elementary(code).unwrap()
    }

    #[test]
    fn de_bruijn_shape() {
        let aut = build_de_bruijn(&eca(90)).unwrap();
        assert_eq!(aut.state_count(), 4);
        assert_eq!(aut.edge_count(), 8);
        for s in 0..4 {
            assert_eq!(aut.out_edges(s).len(), 2);
            assert_eq!(aut.in_edges(s).count(), 2);
        }
        // edge 00 -> 01 is the word 001
        let e = 0b001;
        assert_eq!((aut.source(e), aut.target(e)), (0b00, 0b01));
        assert_eq!(aut.label(e), 1);
        let id = build_de_bruijn(&eca(204)).unwrap();
        for e in 0..8 {
            assert_eq!(id.label(e), ((e >> 1) & 1) as Symbol);
        }
    }

    #[test]
    fn surjectivity_examples() {
        assert!(test_surjective(&eca(90)).unwrap());
        assert!(!test_surjective(&eca(110)).unwrap());
        assert!(test_surjective(&eca(204)).unwrap());
        for len in 1..=8 {
            assert!(image_histogram(&eca(90), len)
                .unwrap()
                .iter()
                .all(|&c| c == 4));
        }
    }

    #[test]
    fn injectivity_examples() {
        assert!(test_injective(&eca(204)).unwrap());
        assert!(test_injective(&eca(170)).unwrap());
        assert!(!test_injective(&eca(90)).unwrap());
        assert!(!test_injective(&eca(102)).unwrap());
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(preimage_count_oracle(&eca(90), &[0]).unwrap(), 4);
        assert_eq!(preimage_count_oracle(&eca(110), &[0]).unwrap(), 3);
        let id = LocalRule::identity(Alphabet::binary(), 1).unwrap();
        assert_eq!(preimage_count_oracle(&id, &[1, 0, 1, 1]).unwrap(), 1);
    }

    #[test]
    fn sparse_linear_pads_to_rule_90() {
        let l = LocalRule::linear(Alphabet::binary(), &[(vec![-1], 1), (vec![1], 1)]).unwrap();
        assert_eq!(contiguous(&l).unwrap().table(), eca(90).table());
        let shift = LocalRule::linear(Alphabet::binary(), &[(vec![1], 1)]).unwrap();
        assert!(test_injective(&shift).unwrap());
    }

    #[test]
    fn rejects_two_dimensional_rules() {
        let r = LocalRule::identity(Alphabet::binary(), 2).unwrap();
        assert_eq!(test_surjective(&r), Err(Error::NotOneDimensional(2)));
        assert!(test_injective(&r).is_err());
        assert!(build_de_bruijn(&r).is_err());
    }

    #[test]
    fn second_order_lifts_are_injective() {
        for code in [30, 90, 110, 0] {
            let lifted = eca(code).second_order().unwrap();
            assert!(test_injective(&lifted).unwrap(), "lift of {code}");
            assert!(test_surjective(&lifted).unwrap(), "lift of {code}");
        }
    }

    #[test]
    fn ternary_radius_one() {
        let z3 = Alphabet::cyclic(3).unwrap();
        let sum = LocalRule::linear(z3.clone(), &[(vec![-1], 1), (vec![1], 1)]).unwrap();
        assert!(test_surjective(&sum).unwrap());
        assert!(!test_injective(&sum).unwrap());
        let shift = LocalRule::linear(z3, &[(vec![-1], 2)]).unwrap();
        assert!(test_injective(&shift).unwrap());
    }

    #[test]
    fn reflection_and_complement() {
        // rule 110 reflects to 124 and complements to 137
        assert_eq!(reflect(&eca(110)).unwrap().table(), eca(124).table());
        assert_eq!(
            conjugate(&eca(110), &[1, 0]).unwrap().table(),
            eca(137).table()
        );
    }

    #[test]
    fn analyze_rule_90() {
        let a = analyze(&eca(90), DEFAULT_WORD_CAP).unwrap();
        assert!(a.surjective && !a.injective && a.balanced);
    }
}
