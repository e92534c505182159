//! Lattice geometry: finite Abelian alphabets, cell sets on `Z^d`, Moore
//! extensions and hypercube windows.

use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest alphabet accepted. Group tables are stored densely.
pub const MAX_ALPHABET: usize = 256;

/// A symbol of an [`Alphabet`], encoded densely in `[0, |Σ|)`.
pub type Symbol = u32;

/// A finite Abelian group `Z_{m1} × … × Z_{mk}` used as the cell alphabet.
///
/// Symbols are mixed-radix integers with the first component most
/// significant, so `Z_2 × Z_3` encodes `(a, b)` as `3a + b`.
#[derive(Clone)]
pub struct Alphabet {
    moduli: Vec<u32>,
    size: usize,
    add: Arc<[Symbol]>,
    neg: Arc<[Symbol]>,
}

impl Alphabet {
    pub fn new(moduli: Vec<u32>) -> Result<Self> {
        if moduli.is_empty() {
            return Err(Error::InvalidAlphabet("no cyclic components".into()));
        }
        if moduli.iter().any(|&m| m < 2) {
            return Err(Error::InvalidAlphabet(format!(
                "every component order must be at least 2, got {moduli:?}"
            )));
        }
        let size = moduli
            .iter()
            .try_fold(1usize, |acc, &m| acc.checked_mul(m as usize))
            .filter(|&s| s <= MAX_ALPHABET)
            .ok_or_else(|| {
                Error::InvalidAlphabet(format!("alphabet larger than {MAX_ALPHABET} symbols"))
            })?;

        let digits = |mut s: usize| -> Vec<u32> {
            let mut out = vec![0; moduli.len()];
            for (slot, &m) in out.iter_mut().zip(&moduli).rev() {
                *slot = (s % m as usize) as u32;
                s /= m as usize;
            }
            out
        };
        let encode = |d: &[u32]| -> Symbol {
            d.iter()
                .zip(&moduli)
                .fold(0u32, |acc, (&x, &m)| acc * m + x)
        };

        let mut add = Vec::with_capacity(size * size);
        for a in 0..size {
            let da = digits(a);
            for b in 0..size {
                let db = digits(b);
                let sum: Vec<u32> = da
                    .iter()
                    .zip(&db)
                    .zip(&moduli)
                    .map(|((&x, &y), &m)| (x + y) % m)
                    .collect();
                add.push(encode(&sum));
            }
        }
        let neg = (0..size)
            .map(|a| {
                let d: Vec<u32> = digits(a)
                    .iter()
                    .zip(&moduli)
                    .map(|(&x, &m)| (m - x) % m)
                    .collect();
                encode(&d)
            })
            .collect::<Vec<_>>();

        Ok(Self {
            moduli,
            size,
            add: add.into(),
            neg: neg.into(),
        })
    }

    /// The cyclic group `Z_m`.
    pub fn cyclic(m: u32) -> Result<Self> {
        Self::new(vec![m])
    }

    /// `Z_2`.
    pub fn binary() -> Self {
        Self::new(vec![2]).expect("Z_2 is valid")
    }

    /// The product group `self × other`, with `self` as the more significant part.
    pub fn product(&self, other: &Alphabet) -> Result<Self> {
        let mut moduli = self.moduli.clone();
        moduli.extend_from_slice(&other.moduli);
        Self::new(moduli)
    }

    pub fn moduli(&self) -> &[u32] {
        &self.moduli
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// `log |Σ|` in nats.
    pub fn h_max(&self) -> f64 {
        (self.size as f64).ln()
    }

    #[inline]
    pub fn add(&self, a: Symbol, b: Symbol) -> Symbol {
        self.add[a as usize * self.size + b as usize]
    }

    #[inline]
    pub fn neg(&self, a: Symbol) -> Symbol {
        self.neg[a as usize]
    }

    #[inline]
    pub fn sub(&self, a: Symbol, b: Symbol) -> Symbol {
        self.add(a, self.neg(b))
    }

    /// Integer multiple `k·a` in the group.
    pub fn scale(&self, k: i64, a: Symbol) -> Symbol {
        let base = if k < 0 { self.neg(a) } else { a };
        let order = self.size as u64;
        let times = k.unsigned_abs() % order;
        let mut acc = 0;
        for _ in 0..times {
            acc = self.add(acc, base);
        }
        acc
    }

    pub fn zero(&self) -> Symbol {
        0
    }

    pub fn symbols(&self) -> impl Iterator<Item = Symbol> {
        0..self.size as Symbol
    }

    pub fn contains(&self, a: Symbol) -> bool {
        (a as usize) < self.size
    }
}

impl PartialEq for Alphabet {
    fn eq(&self, other: &Self) -> bool {
        self.moduli == other.moduli
    }
}

impl Eq for Alphabet {}

impl std::fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Alphabet(")?;
        for (i, m) in self.moduli.iter().enumerate() {
            if i > 0 {
                write!(f, "×")?;
            }
            write!(f, "Z{m}")?;
        }
        write!(f, ")")
    }
}

impl Serialize for Alphabet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.moduli.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Alphabet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let moduli = Vec::<u32>::deserialize(d)?;
        Alphabet::new(moduli).map_err(serde::de::Error::custom)
    }
}

/// A lattice cell: an integer vector of length `d`.
pub type Cell = Vec<i64>;

/// A finite set of cells of `Z^d`, kept sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct CellSet {
    dim: usize,
    cells: Vec<Cell>,
}

impl CellSet {
    pub fn new<I>(dim: usize, cells: I) -> Result<Self>
    where
        I: IntoIterator<Item = Cell>,
    {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        let mut cells: Vec<Cell> = cells.into_iter().collect();
        if let Some(bad) = cells.iter().find(|c| c.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        cells.sort();
        cells.dedup();
        Ok(Self { dim, cells })
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            cells: Vec::new(),
        }
    }

    /// One-dimensional set from integer positions.
    pub fn line<I: IntoIterator<Item = i64>>(positions: I) -> Self {
        Self::new(1, positions.into_iter().map(|p| vec![p])).expect("d = 1")
    }

    /// The integer interval `⟦lo, hi⟧` in `d = 1`.
    pub fn interval(lo: i64, hi: i64) -> Self {
        Self::line(lo..=hi)
    }

    /// The hypercube `⟦0, n−1⟧^d`.
    pub fn hypercube(dim: usize, n: usize) -> Self {
        Window::origin(dim, n).cells()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn iter(&self) -> impl Iterator<Item = &Cell> {
        self.cells.iter()
    }

    /// Index of `cell` in the canonical order, if present.
    pub fn position(&self, cell: &[i64]) -> Option<usize> {
        self.cells.binary_search_by(|c| c.as_slice().cmp(cell)).ok()
    }

    pub fn contains(&self, cell: &[i64]) -> bool {
        self.position(cell).is_some()
    }

    /// `J + ⟦−r, r⟧^d`.
    pub fn moore(&self, r: usize) -> CellSet {
        if r == 0 {
            return self.clone();
        }
        let cube = offsets_cube(self.dim, r);
        let mut cells = Vec::with_capacity(self.cells.len() * cube.len());
        for c in &self.cells {
            for o in &cube {
                cells.push(c.iter().zip(o).map(|(a, b)| a + b).collect::<Cell>());
            }
        }
        cells.sort();
        cells.dedup();
        CellSet {
            dim: self.dim,
            cells,
        }
    }

    /// `M^r(J) \ J`.
    pub fn moore_boundary(&self, r: usize) -> CellSet {
        self.moore(r).difference(self)
    }

    /// Side of the smallest hypercube `u + ⟦0, n−1⟧^d` containing the set.
    pub fn diameter(&self) -> Result<usize> {
        let (lo, hi) = self.bounding_box().ok_or(Error::EmptySet)?;
        Ok(lo
            .iter()
            .zip(&hi)
            .map(|(l, h)| (h - l + 1) as usize)
            .max()
            .unwrap_or(0))
    }

    /// Coordinate-wise minimum and maximum.
    pub fn bounding_box(&self) -> Option<(Cell, Cell)> {
        let first = self.cells.first()?;
        let mut lo = first.clone();
        let mut hi = first.clone();
        for c in &self.cells[1..] {
            for k in 0..self.dim {
                lo[k] = lo[k].min(c[k]);
                hi[k] = hi[k].max(c[k]);
            }
        }
        Some((lo, hi))
    }

    pub fn difference(&self, other: &CellSet) -> CellSet {
        CellSet {
            dim: self.dim,
            cells: self
                .cells
                .iter()
                .filter(|c| !other.contains(c))
                .cloned()
                .collect(),
        }
    }

    pub fn union(&self, other: &CellSet) -> CellSet {
        let mut cells = self.cells.clone();
        cells.extend(other.cells.iter().cloned());
        cells.sort();
        cells.dedup();
        CellSet {
            dim: self.dim,
            cells,
        }
    }

    pub fn is_subset(&self, other: &CellSet) -> bool {
        self.cells.iter().all(|c| other.contains(c))
    }

    pub fn is_disjoint(&self, other: &CellSet) -> bool {
        self.cells.iter().all(|c| !other.contains(c))
    }

    pub fn translate(&self, by: &[i64]) -> CellSet {
        CellSet {
            dim: self.dim,
            cells: self
                .cells
                .iter()
                .map(|c| c.iter().zip(by).map(|(a, b)| a + b).collect())
                .collect(),
        }
    }
}

/// All offsets in `⟦−r, r⟧^d`, in lexicographic order.
pub fn offsets_cube(dim: usize, r: usize) -> Vec<Cell> {
    let r = r as i64;
    let mut out = vec![Vec::with_capacity(dim)];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (-r..=r).map(move |x| {
                    let mut c = prefix.clone();
                    c.push(x);
                    c
                })
            })
            .collect();
    }
    out
}

/// A hypercube window `u + ⟦0, n−1⟧^d`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub anchor: Cell,
    pub side: usize,
}

impl Window {
    pub fn new(anchor: Cell, side: usize) -> Self {
        Self { anchor, side }
    }

    /// `S_n`.
    pub fn origin(dim: usize, side: usize) -> Self {
        Self {
            anchor: vec![0; dim],
            side,
        }
    }

    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    /// Number of cells, `n^d`.
    pub fn volume(&self) -> usize {
        self.side.pow(self.dim() as u32)
    }

    pub fn cells(&self) -> CellSet {
        let dim = self.dim();
        let mut out: Vec<Cell> = vec![Vec::with_capacity(dim)];
        if self.side == 0 {
            return CellSet::empty(dim.max(1));
        }
        for k in 0..dim {
            let base = self.anchor[k];
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    (0..self.side as i64).map(move |x| {
                        let mut c = prefix.clone();
                        c.push(base + x);
                        c
                    })
                })
                .collect();
        }
        CellSet::new(dim, out).expect("window cells are well formed")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moore_examples() {
        assert_eq!(CellSet::line([0]).moore(1), CellSet::interval(-1, 1));
        let origin = CellSet::new(2, [vec![0, 0]]).unwrap();
        let m = origin.moore(1);
        assert_eq!(m.len(), 9);
        assert_eq!(m, Window::new(vec![-1, -1], 3).cells());
        let j = CellSet::line([0, 3, 7]);
        assert_eq!(j.moore(0), j);
    }

    #[test]
    fn boundary_examples() {
        let b = CellSet::interval(0, 1).moore_boundary(2);
        assert_eq!(b, CellSet::line([-2, -1, 2, 3]));
        for n in 1..6 {
            for r in 0..4 {
                assert_eq!(CellSet::interval(0, n - 1).moore_boundary(r).len(), 2 * r);
            }
        }
        assert_eq!(CellSet::hypercube(2, 2).moore_boundary(1).len(), 12);
        assert!(CellSet::hypercube(2, 2)
            .moore_boundary(1)
            .is_disjoint(&CellSet::hypercube(2, 2)));
    }

    #[test]
    fn diameter_examples() {
        assert_eq!(CellSet::line([3]).diameter().unwrap(), 1);
        assert_eq!(CellSet::line([0, 5]).diameter().unwrap(), 6);
        let a = CellSet::new(2, [vec![0, 0], vec![2, 3]]).unwrap();
        assert_eq!(a.diameter().unwrap(), 4);
        assert_eq!(CellSet::empty(1).diameter(), Err(Error::EmptySet));
    }

    #[test]
    fn alphabet_rejects_degenerate() {
        assert!(Alphabet::new(vec![1]).is_err());
        assert!(Alphabet::new(vec![]).is_err());
        assert!(Alphabet::new(vec![1024]).is_err());
    }

    #[test]
    fn product_group_arithmetic() {
        let g = Alphabet::new(vec![2, 3]).unwrap();
        assert_eq!(g.size(), 6);
        // (1,2) + (1,2) = (0,1)
        assert_eq!(g.add(5, 5), 1);
        assert_eq!(g.neg(5), 4); // -(1,2) = (1,1)
        assert_eq!(g.scale(3, 1), 0);
        assert_eq!(g.scale(-1, 1), 2);
        assert!((g.h_max() - 6f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn duplicate_cells_collapse() {
        let s = CellSet::line([2, 1, 2, 1]);
        assert_eq!(s.cells(), &[vec![1], vec![2]]);
        assert!(CellSet::new(2, [vec![1]]).is_err());
    }
}
