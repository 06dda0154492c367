//! Variable inventory and flat-array index map for each closure order.
//!
//! Counting convention: every complex expectation value takes two real slots
//! (re, im), every Hermitian one a single slot. Pair families carry two
//! cluster indices `(μ, ν)` and always denote two *distinct* spins; `(μ, μ)`
//! is two different spins of cluster `μ`. Ordered families store all `L²`
//! index pairs, symmetric ones and `⟨σ⁺σ⁻⟩` store `μ ≤ ν`
//! (`⟨σ⁺_ν σ⁻_μ⟩ = ⟨σ⁺_μ σ⁻_ν⟩*`). With this convention the CE3 inventory
//! holds `13L² + L(L+1)/2 + 23L + 9` reals.

use std::fmt;
use std::fmt::Write as _;

use crate::model::CumulantOrder;
use crate::C64;

/// Moment families, written with spin operators first and the cavity part
/// normal ordered (`a†` left of `a`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    A,
    Sm,
    Sz,
    SzA,
    SzSm,
    SmAd,
    SpSm,
    SmA,
    AdAd,
    AdA,
    SzSz,
    SmSm,
    SzAdA,
    SmAdA,
    SmAdAd,
    SzAA,
    SmAA,
    AdAA,
    AAA,
    SzSzA,
    SmSmAd,
    SpSmA,
    SzSmAd,
    SzSmA,
    SmSmA,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    /// single index, no index, or ordered pair
    None,
    /// value invariant under swapping the two cluster indices
    Symmetric,
    /// swapping the indices conjugates the value
    ConjugatePaired,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Real,
    Complex,
}

impl Family {
    pub const ALL: [Family; 25] = [
        Family::A,
        Family::Sm,
        Family::Sz,
        Family::SzA,
        Family::SzSm,
        Family::SmAd,
        Family::SpSm,
        Family::SmA,
        Family::AdAd,
        Family::AdA,
        Family::SzSz,
        Family::SmSm,
        Family::SzAdA,
        Family::SmAdA,
        Family::SmAdAd,
        Family::SzAA,
        Family::SmAA,
        Family::AdAA,
        Family::AAA,
        Family::SzSzA,
        Family::SmSmAd,
        Family::SpSmA,
        Family::SzSmAd,
        Family::SzSmA,
        Family::SmSmA,
    ];

    /// Number of operators in the product.
    pub fn order(self) -> usize {
        use Family::*;
        match self {
            A | Sm | Sz => 1,
            SzA | SzSm | SmAd | SpSm | SmA | AdAd | AdA | SzSz | SmSm => 2,
            _ => 3,
        }
    }

    pub fn arity(self) -> usize {
        use Family::*;
        match self {
            A | AdAd | AdA | AdAA | AAA => 0,
            Sm | Sz | SzA | SmAd | SmA | SzAdA | SmAdA | SmAdAd | SzAA | SmAA => 1,
            _ => 2,
        }
    }

    pub fn symmetry(self) -> Symmetry {
        use Family::*;
        match self {
            SzSz | SmSm | SzSzA | SmSmAd | SmSmA => Symmetry::Symmetric,
            SpSm => Symmetry::ConjugatePaired,
            _ => Symmetry::None,
        }
    }

    pub fn kind(self) -> ValueKind {
        use Family::*;
        match self {
            Sz | AdA | SzSz | SzAdA => ValueKind::Real,
            _ => ValueKind::Complex,
        }
    }

    fn width(self) -> usize {
        match self.kind() {
            ValueKind::Real => 1,
            ValueKind::Complex => 2,
        }
    }

    /// Spin operators (as `'+'`, `'-'`, `'z'`) and cavity counts `(a†, a)`.
    pub fn operators(self) -> (&'static [char], (usize, usize)) {
        use Family::*;
        match self {
            A => (&[], (0, 1)),
            Sm => (&['-'], (0, 0)),
            Sz => (&['z'], (0, 0)),
            SzA => (&['z'], (0, 1)),
            SzSm => (&['z', '-'], (0, 0)),
            SmAd => (&['-'], (1, 0)),
            SpSm => (&['+', '-'], (0, 0)),
            SmA => (&['-'], (0, 1)),
            AdAd => (&[], (2, 0)),
            AdA => (&[], (1, 1)),
            SzSz => (&['z', 'z'], (0, 0)),
            SmSm => (&['-', '-'], (0, 0)),
            SzAdA => (&['z'], (1, 1)),
            SmAdA => (&['-'], (1, 1)),
            SmAdAd => (&['-'], (2, 0)),
            SzAA => (&['z'], (0, 2)),
            SmAA => (&['-'], (0, 2)),
            AdAA => (&[], (1, 2)),
            AAA => (&[], (0, 3)),
            SzSzA => (&['z', 'z'], (0, 1)),
            SmSmAd => (&['-', '-'], (1, 0)),
            SpSmA => (&['+', '-'], (0, 1)),
            SzSmAd => (&['z', '-'], (1, 0)),
            SzSmA => (&['z', '-'], (0, 1)),
            SmSmA => (&['-', '-'], (0, 1)),
        }
    }

    pub fn name(self) -> String {
        let (spins, (nd, na)) = self.operators();
        let mut s = String::new();
        let idx = ['k', 'j'];
        for (i, op) in spins.iter().enumerate() {
            let _ = write!(s, "s{op}_{}", idx[i]);
        }
        for _ in 0..nd {
            s.push_str("a+");
        }
        for _ in 0..na {
            s.push('a');
        }
        s
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// One tracked variable: a family plus its cluster indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var {
    pub family: Family,
    pub mu: usize,
    pub nu: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarInfo {
    pub var: Var,
    pub kind: ValueKind,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateLayout {
    order: CumulantOrder,
    l: usize,
    offsets: [Option<usize>; 25],
    total: usize,
}

fn family_slot(f: Family) -> usize {
    f as usize
}

impl StateLayout {
    pub fn new(order: CumulantOrder, l: usize) -> Self {
        assert!(l >= 1, "layout needs at least one cluster");
        let mut offsets = [None; 25];
        let mut total = 0;
        for f in Family::ALL {
            if f.order() > order.level() {
                continue;
            }
            offsets[family_slot(f)] = Some(total);
            total += Self::entries(f, l) * f.width();
        }
        Self { order, l, offsets, total }
    }

    fn entries(f: Family, l: usize) -> usize {
        match (f.arity(), f.symmetry()) {
            (0, _) => 1,
            (1, _) => l,
            (_, Symmetry::None) => l * l,
            _ => l * (l + 1) / 2,
        }
    }

    pub fn order(&self) -> CumulantOrder {
        self.order
    }

    pub fn clusters(&self) -> usize {
        self.l
    }

    pub fn total_real_count(&self) -> usize {
        self.total
    }

    pub fn contains(&self, f: Family) -> bool {
        self.offsets[family_slot(f)].is_some()
    }

    /// Expected CE3 count `13L² + L(L+1)/2 + 23L + 9`.
    pub fn ce3_formula(l: usize) -> usize {
        13 * l * l + l * (l + 1) / 2 + 23 * l + 9
    }

    /// Offset of the stored entry and whether it must be conjugated.
    #[inline]
    pub fn locate(&self, f: Family, mu: usize, nu: usize) -> (usize, bool) {
        let base = self.offsets[family_slot(f)].unwrap_or_else(|| panic!("{f} not in {} layout", self.order));
        let w = f.width();
        match (f.arity(), f.symmetry()) {
            (0, _) => (base, false),
            (1, _) => (base + mu * w, false),
            (_, Symmetry::None) => (base + (mu * self.l + nu) * w, false),
            (_, Symmetry::Symmetric) => {
                let (a, b) = if mu <= nu { (mu, nu) } else { (nu, mu) };
                (base + tri_index(self.l, a, b) * w, false)
            }
            (_, Symmetry::ConjugatePaired) => {
                if mu <= nu {
                    (base + tri_index(self.l, mu, nu) * w, false)
                } else {
                    (base + tri_index(self.l, nu, mu) * w, true)
                }
            }
        }
    }

    #[inline]
    pub fn get(&self, state: &[f64], f: Family, mu: usize, nu: usize) -> C64 {
        let (off, conj) = self.locate(f, mu, nu);
        let v = match f.kind() {
            ValueKind::Real => C64::new(state[off], 0.0),
            ValueKind::Complex => C64::new(state[off], state[off + 1]),
        };
        if conj {
            v.conj()
        } else {
            v
        }
    }

    /// Writes a stored entry; `(mu, nu)` must be the stored index pair.
    #[inline]
    pub fn set(&self, out: &mut [f64], f: Family, mu: usize, nu: usize, v: C64) {
        let (off, conj) = self.locate(f, mu, nu);
        debug_assert!(!conj, "set on a derived entry");
        out[off] = v.re;
        if f.kind() == ValueKind::Complex {
            out[off + 1] = v.im;
        }
    }

    /// Stored index pairs of a family, in storage order.
    pub fn indices(&self, f: Family) -> Vec<(usize, usize)> {
        let l = self.l;
        match (f.arity(), f.symmetry()) {
            (0, _) => vec![(0, 0)],
            (1, _) => (0..l).map(|m| (m, 0)).collect(),
            (_, Symmetry::None) => (0..l).flat_map(|m| (0..l).map(move |n| (m, n))).collect(),
            _ => (0..l).flat_map(|m| (m..l).map(move |n| (m, n))).collect(),
        }
    }

    pub fn families(&self) -> impl Iterator<Item = Family> + '_ {
        Family::ALL.into_iter().filter(|f| self.contains(*f))
    }

    /// Every tracked variable with its kind and offset.
    pub fn describe(&self) -> Vec<VarInfo> {
        let mut out = Vec::new();
        for f in self.families() {
            for (mu, nu) in self.indices(f) {
                let (offset, _) = self.locate(f, mu, nu);
                out.push(VarInfo { var: Var { family: f, mu, nu }, kind: f.kind(), offset });
            }
        }
        out
    }

    /// Inventory as CSV with columns `family,mu,nu,kind,offset`; unused
    /// cluster indices are left empty.
    pub fn describe_csv(&self) -> String {
        let mut s = String::from("family,mu,nu,kind,offset\n");
        for info in self.describe() {
            let f = info.var.family;
            let mu = if f.arity() >= 1 { info.var.mu.to_string() } else { String::new() };
            let nu = if f.arity() == 2 { info.var.nu.to_string() } else { String::new() };
            let kind = match info.kind {
                ValueKind::Real => "real",
                ValueKind::Complex => "complex",
            };
            let _ = writeln!(s, "{f},{mu},{nu},{kind},{}", info.offset);
        }
        s
    }

    /// Real-slot count contributed by each family.
    pub fn family_counts(&self) -> Vec<(Family, usize)> {
        self.families().map(|f| (f, Self::entries(f, self.l) * f.width())).collect()
    }
}

/// Position of `(mu, nu)`, `mu ≤ nu`, in row-major upper-triangular storage.
#[inline]
fn tri_index(l: usize, mu: usize, nu: usize) -> usize {
    mu * l - mu * mu.saturating_sub(1) / 2 - mu + nu
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ce3_counts_follow_formula() {
        assert_eq!(StateLayout::new(CumulantOrder::Ce3, 1).total_real_count(), 46);
        assert_eq!(StateLayout::new(CumulantOrder::Ce3, 2).total_real_count(), 110);
        assert_eq!(StateLayout::new(CumulantOrder::Ce3, 51).total_real_count(), 36321);
        for l in 1..60 {
            let lay = StateLayout::new(CumulantOrder::Ce3, l);
            assert_eq!(lay.total_real_count(), StateLayout::ce3_formula(l));
        }
    }

    #[test]
    fn lower_orders_are_prefixes() {
        let l1 = StateLayout::new(CumulantOrder::Ce1, 3);
        assert_eq!(l1.total_real_count(), 2 + 3 * 3);
        let l2 = StateLayout::new(CumulantOrder::Ce2, 3);
        let l3 = StateLayout::new(CumulantOrder::Ce3, 3);
        for f in l2.families() {
            assert_eq!(l2.locate(f, 1, 2), l3.locate(f, 1, 2));
        }
        assert_eq!(l2.families().count(), 12);
        assert_eq!(l3.families().count(), 25);
    }

    #[test]
    fn offsets_are_a_bijection() {
        let lay = StateLayout::new(CumulantOrder::Ce3, 4);
        let mut used = vec![false; lay.total_real_count()];
        for info in lay.describe() {
            let w = if info.kind == ValueKind::Real { 1 } else { 2 };
            for s in info.offset..info.offset + w {
                assert!(!used[s], "slot {s} reused");
                used[s] = true;
            }
        }
        assert!(used.iter().all(|&u| u));
    }

    #[test]
    fn symmetric_and_paired_lookup() {
        let lay = StateLayout::new(CumulantOrder::Ce3, 3);
        let mut s = vec![0.0; lay.total_real_count()];
        lay.set(&mut s, Family::SpSm, 0, 2, C64::new(1.0, 2.0));
        lay.set(&mut s, Family::SmSm, 1, 2, C64::new(3.0, 4.0));
        assert_eq!(lay.get(&s, Family::SpSm, 2, 0), C64::new(1.0, -2.0));
        assert_eq!(lay.get(&s, Family::SmSm, 2, 1), C64::new(3.0, 4.0));
    }

    #[test]
    fn describe_csv_header_and_rows() {
        let lay = StateLayout::new(CumulantOrder::Ce1, 2);
        let csv = lay.describe_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "family,mu,nu,kind,offset");
        assert_eq!(lines[1], "a,,,complex,0");
        assert_eq!(lines.len(), 1 + 1 + 2 + 2);
    }
}
