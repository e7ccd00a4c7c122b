//! Phase-free Pauli strings and spacetime error containers.
//!
//! A Pauli string is stored as two bit masks (`x`, `z`): qubit `q` carries
//! `X` if only bit `q` of `x` is set, `Z` if only bit `q` of `z` is set and
//! `Y` if both are. Products are XORs; phases are dropped throughout because
//! every use in this crate is a conjugation map.

use std::fmt;
use std::ops::Mul;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};

pub const MAX_PAULI_QUBITS: usize = 64;

/// Single-qubit Pauli letter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    pub const ALL: [Letter; 4] = [Letter::I, Letter::X, Letter::Y, Letter::Z];

    /// Two-bit code with the x bit in bit 0 and the z bit in bit 1.
    pub fn code(self) -> u8 {
        match self {
            Letter::I => 0,
            Letter::X => 1,
            Letter::Z => 2,
            Letter::Y => 3,
        }
    }

    pub fn from_code(code: u8) -> Letter {
        match code & 3 {
            0 => Letter::I,
            1 => Letter::X,
            2 => Letter::Z,
            _ => Letter::Y,
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Letter {
        Letter::from_code(x as u8 | ((z as u8) << 1))
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }
}

/// Phase-free Pauli string on `qubit_count` qubits.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliOperator {
    n: u8,
    x: u64,
    z: u64,
}

impl PauliOperator {
    pub fn identity(n: usize) -> Self {
        assert!(n <= MAX_PAULI_QUBITS, "at most {MAX_PAULI_QUBITS} qubits");
        PauliOperator { n: n as u8, x: 0, z: 0 }
    }

    pub fn from_masks(n: usize, x: u64, z: u64) -> Self {
        assert!(n <= MAX_PAULI_QUBITS, "at most {MAX_PAULI_QUBITS} qubits");
        let keep = mask(n);
        PauliOperator { n: n as u8, x: x & keep, z: z & keep }
    }

    pub fn from_letters(letters: &[Letter]) -> Self {
        let mut p = PauliOperator::identity(letters.len());
        for (q, &l) in letters.iter().enumerate() {
            p.set(q, l);
        }
        p
    }

    /// Pauli with `letter` on qubit `q` and identity elsewhere.
    pub fn single(n: usize, q: usize, letter: Letter) -> Self {
        let mut p = PauliOperator::identity(n);
        p.set(q, letter);
        p
    }

    /// The same letter on every qubit.
    pub fn uniform(n: usize, letter: Letter) -> Self {
        PauliOperator::from_letters(&vec![letter; n])
    }

    /// Dense enumeration index: the sum of `code(letter_q) * 4^q`.
    pub fn index(&self) -> usize {
        (0..self.n as usize).map(|q| (self.letter(q).code() as usize) << (2 * q)).sum()
    }

    pub fn from_index(n: usize, index: usize) -> Self {
        let mut p = PauliOperator::identity(n);
        for q in 0..n {
            p.set(q, Letter::from_code(((index >> (2 * q)) & 3) as u8));
        }
        p
    }

    /// All `4^n` Paulis in index order.
    pub fn all(n: usize) -> impl Iterator<Item = PauliOperator> {
        (0..1usize << (2 * n)).map(move |i| PauliOperator::from_index(n, i))
    }

    pub fn qubit_count(&self) -> usize {
        self.n as usize
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn letter(&self, q: usize) -> Letter {
        Letter::from_bits((self.x >> q) & 1 == 1, (self.z >> q) & 1 == 1)
    }

    pub fn letters(&self) -> Vec<Letter> {
        (0..self.n as usize).map(|q| self.letter(q)).collect()
    }

    pub fn set(&mut self, q: usize, letter: Letter) {
        assert!(q < self.n as usize, "qubit {q} out of range");
        let code = letter.code();
        let bit = 1u64 << q;
        self.x = (self.x & !bit) | (((code & 1) as u64) << q);
        self.z = (self.z & !bit) | ((((code >> 1) & 1) as u64) << q);
    }

    pub fn is_identity(&self) -> bool {
        (self.x | self.z) == 0
    }

    pub fn weight(&self) -> usize {
        (self.x | self.z).count_ones() as usize
    }

    /// True when the two strings commute (as operators with phases).
    pub fn commutes_with(&self, other: &PauliOperator) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()).is_multiple_of(2)
    }

    /// Checked phase-free product.
    pub fn product(&self, other: &PauliOperator) -> Result<PauliOperator> {
        if self.n != other.n {
            return Err(Error::Dimension(format!("Pauli product of {} and {} qubit strings", self.n, other.n)));
        }
        Ok(*self * *other)
    }

    /// Letters at the listed positions, in that order.
    pub fn restrict(&self, positions: &[usize]) -> PauliOperator {
        let mut p = PauliOperator::identity(positions.len());
        for (k, &q) in positions.iter().enumerate() {
            p.set(k, self.letter(q));
        }
        p
    }

    /// Places this string's qubit `k` onto position `positions[k]` of an `n`-qubit string.
    pub fn embed(&self, positions: &[usize], n: usize) -> PauliOperator {
        debug_assert_eq!(positions.len(), self.n as usize);
        let mut p = PauliOperator::identity(n);
        for (k, &q) in positions.iter().enumerate() {
            p.set(q, self.letter(k));
        }
        p
    }
}

fn mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

impl Mul for PauliOperator {
    type Output = PauliOperator;

    fn mul(self, rhs: PauliOperator) -> PauliOperator {
        debug_assert_eq!(self.n, rhs.n, "Pauli product size mismatch");
        PauliOperator { n: self.n, x: self.x ^ rhs.x, z: self.z ^ rhs.z }
    }
}

/// Phase-free product of two equally sized strings.
pub fn pauli_product(a: &PauliOperator, b: &PauliOperator) -> Result<PauliOperator> {
    a.product(b)
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n as usize {
            write!(f, "{}", self.letter(q).as_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pauli({self})")
    }
}

impl FromStr for PauliOperator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .chars()
            .map(|c| match c.to_ascii_uppercase() {
                'I' => Ok(Letter::I),
                'X' => Ok(Letter::X),
                'Y' => Ok(Letter::Y),
                'Z' => Ok(Letter::Z),
                other => Err(Error::Config(format!("invalid Pauli letter '{other}' in \"{s}\""))),
            })
            .collect::<Result<Vec<_>>>()?;
        if letters.is_empty() || letters.len() > MAX_PAULI_QUBITS {
            return Err(Error::Config(format!("invalid Pauli string \"{s}\"")));
        }
        Ok(PauliOperator::from_letters(&letters))
    }
}

/// One row of a spacetime layout: an operation kind and its cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayoutEntry {
    /// Index of the operation kind in the compiled circuit.
    pub kind: usize,
    /// Maximum number of occurrences of the kind over all branches.
    pub slots: usize,
    /// Qubits on which the kind's noise acts.
    pub support: Vec<usize>,
}

/// Shape of a spacetime error: which kinds, how many cells each, and their supports.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpacetimeLayout {
    entries: Vec<LayoutEntry>,
    offsets: Vec<usize>,
    kind_position: Vec<Option<usize>>,
}

impl SpacetimeLayout {
    pub fn new(entries: Vec<LayoutEntry>) -> Self {
        let mut offsets = Vec::with_capacity(entries.len() + 1);
        let mut total = 0;
        for e in &entries {
            offsets.push(total);
            total += e.slots;
        }
        offsets.push(total);
        let max_kind = entries.iter().map(|e| e.kind + 1).max().unwrap_or(0);
        let mut kind_position = vec![None; max_kind];
        for (pos, e) in entries.iter().enumerate() {
            kind_position[e.kind] = Some(pos);
        }
        SpacetimeLayout { entries, offsets, kind_position }
    }

    pub fn entries(&self) -> &[LayoutEntry] {
        &self.entries
    }

    pub fn cell_count(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    /// Flat index of the first cell of entry `pos`.
    pub fn offset(&self, pos: usize) -> usize {
        self.offsets[pos]
    }

    /// Entry position of an operation kind, if the kind has cells.
    pub fn position_of_kind(&self, kind: usize) -> Option<usize> {
        self.kind_position.get(kind).copied().flatten()
    }
}

/// One Pauli per (operation kind, slot) cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpacetimeError {
    layout: Arc<SpacetimeLayout>,
    cells: Vec<PauliOperator>,
}

impl SpacetimeError {
    /// The all-identity error for `layout`.
    pub fn trivial(layout: Arc<SpacetimeLayout>) -> Self {
        let mut cells = Vec::with_capacity(layout.cell_count());
        for e in layout.entries() {
            cells.extend(std::iter::repeat_n(PauliOperator::identity(e.support.len()), e.slots));
        }
        SpacetimeError { layout, cells }
    }

    /// Builds an error from per-entry cell lists.
    pub fn from_cells(layout: Arc<SpacetimeLayout>, cells: Vec<Vec<PauliOperator>>) -> Result<Self> {
        if cells.len() != layout.entries().len() {
            return Err(Error::Dimension("cell rows do not match layout".into()));
        }
        let mut flat = Vec::with_capacity(layout.cell_count());
        for (row, e) in cells.into_iter().zip(layout.entries()) {
            if row.len() != e.slots || row.iter().any(|p| p.qubit_count() != e.support.len()) {
                return Err(Error::Dimension(format!("cells for kind {} do not match layout", e.kind)));
            }
            flat.extend(row);
        }
        Ok(SpacetimeError { layout, cells: flat })
    }

    pub fn layout(&self) -> &Arc<SpacetimeLayout> {
        &self.layout
    }

    /// Cell `slot` of layout entry `pos`.
    pub fn cell(&self, pos: usize, slot: usize) -> PauliOperator {
        self.cells[self.layout.offset(pos) + slot]
    }

    pub fn set_cell(&mut self, pos: usize, slot: usize, p: PauliOperator) {
        let i = self.layout.offset(pos) + slot;
        debug_assert_eq!(self.cells[i].qubit_count(), p.qubit_count());
        self.cells[i] = p;
    }

    /// Cells of layout entry `pos`.
    pub fn row(&self, pos: usize) -> &[PauliOperator] {
        &self.cells[self.layout.offset(pos)..self.layout.offset(pos + 1)]
    }

    pub fn row_mut(&mut self, pos: usize) -> &mut [PauliOperator] {
        let (a, b) = (self.layout.offset(pos), self.layout.offset(pos + 1));
        &mut self.cells[a..b]
    }

    pub fn cells(&self) -> &[PauliOperator] {
        &self.cells
    }

    pub fn is_nontrivial(&self) -> bool {
        self.cells.iter().any(|p| !p.is_identity())
    }

    pub fn is_trivial(&self) -> bool {
        !self.is_nontrivial()
    }

    /// Resets every cell to identity.
    pub fn clear(&mut self) {
        for c in &mut self.cells {
            *c = PauliOperator::identity(c.qubit_count());
        }
    }

    /// Entry-wise product.
    pub fn product(&self, other: &SpacetimeError) -> Result<SpacetimeError> {
        let mut out = self.clone();
        out.multiply_assign(other)?;
        Ok(out)
    }

    /// In-place entry-wise product.
    pub fn multiply_assign(&mut self, other: &SpacetimeError) -> Result<()> {
        if !Arc::ptr_eq(&self.layout, &other.layout) && self.layout != other.layout {
            return Err(Error::Dimension("spacetime errors with different layouts".into()));
        }
        for (a, b) in self.cells.iter_mut().zip(&other.cells) {
            *a = *a * *b;
        }
        Ok(())
    }
}

/// Entry-wise product of two spacetime errors.
pub fn spacetime_product(a: &SpacetimeError, b: &SpacetimeError) -> Result<SpacetimeError> {
    a.product(b)
}

/// True iff some cell differs from identity.
pub fn is_nontrivial(s: &SpacetimeError) -> bool {
    s.is_nontrivial()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> PauliOperator {
        s.parse().unwrap()
    }

    #[test]
    fn products_drop_phase() {
        assert_eq!(pauli_product(&p("XI"), &p("ZI")).unwrap(), p("YI"));
        assert_eq!(pauli_product(&PauliOperator::identity(3), &p("XYZ")).unwrap(), p("XYZ"));
        assert_eq!(pauli_product(&p("XZ"), &p("XZ")).unwrap(), p("II"));
        assert!(matches!(pauli_product(&p("X"), &p("XX")), Err(Error::Dimension(_))));
    }

    #[test]
    fn text_round_trip_and_index() {
        let s = p("XIZY");
        assert_eq!(s.to_string(), "XIZY");
        assert_eq!(s.letter(0), Letter::X);
        assert_eq!(s.letter(3), Letter::Y);
        assert_eq!(PauliOperator::from_index(4, s.index()), s);
        assert!("XQ".parse::<PauliOperator>().is_err());
        let all: Vec<_> = PauliOperator::all(2).collect();
        assert_eq!(all.len(), 16);
        assert!(all.iter().enumerate().all(|(i, q)| q.index() == i));
    }

    #[test]
    fn commutation() {
        assert!(!p("X").commutes_with(&p("Z")));
        assert!(p("XX").commutes_with(&p("ZZ")));
        assert!(p("XI").commutes_with(&p("IZ")));
    }

    #[test]
    fn restrict_and_embed() {
        let s = p("XYZI");
        assert_eq!(s.restrict(&[2, 0]), p("ZX"));
        assert_eq!(p("ZX").embed(&[2, 0], 4), p("XIZI"));
    }

    fn layout(rows: &[(usize, usize, usize)]) -> Arc<SpacetimeLayout> {
        Arc::new(SpacetimeLayout::new(
            rows.iter().map(|&(kind, slots, q)| LayoutEntry { kind, slots, support: (0..q).collect() }).collect(),
        ))
    }

    #[test]
    fn spacetime_cellwise_product() {
        let l = layout(&[(0, 2, 1)]);
        let s1 = SpacetimeError::from_cells(l.clone(), vec![vec![p("X"), p("I")]]).unwrap();
        let s2 = SpacetimeError::from_cells(l.clone(), vec![vec![p("Z"), p("Y")]]).unwrap();
        let prod = spacetime_product(&s1, &s2).unwrap();
        assert_eq!(prod.row(0), &[p("Y"), p("Y")]);
        assert!(spacetime_product(&s1, &s1).unwrap().is_trivial());
        assert_eq!(spacetime_product(&s1, &SpacetimeError::trivial(l)).unwrap(), s1);
    }

    #[test]
    fn nontriviality() {
        let l = layout(&[(0, 2, 1), (3, 1, 2)]);
        let mut s = SpacetimeError::trivial(l.clone());
        assert!(!is_nontrivial(&s));
        s.set_cell(1, 0, p("IX"));
        assert!(is_nontrivial(&s));
        assert_eq!(l.position_of_kind(3), Some(1));
        assert_eq!(l.position_of_kind(1), None);
        let empty = SpacetimeError::trivial(Arc::new(SpacetimeLayout::new(vec![])));
        assert!(!is_nontrivial(&empty));
    }

    #[test]
    fn layout_mismatch_is_rejected() {
        let a = SpacetimeError::trivial(layout(&[(0, 2, 1)]));
        let b = SpacetimeError::trivial(layout(&[(0, 3, 1)]));
        assert!(matches!(a.product(&b), Err(Error::Dimension(_))));
        assert!(SpacetimeError::from_cells(layout(&[(0, 1, 1)]), vec![vec![p("XX")]]).is_err());
    }
}
