//! Pauli strings and the base-4 correlator index.
//!
//! A correlator index packs one digit per site, `0 = I, 1 = x, 2 = y, 3 = z`,
//! with site 0 as the least significant digit. Index 0 is the identity.
//!
//! Text form: whitespace-separated tokens, each an axis character
//! (`x`, `y`, `z`, `+`, `-`) followed by a decimal site, e.g. `"x0 z2"`.
//! The empty string is the identity.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;

use crate::combinatorics::CellSubset;
use crate::error::{Error, Result};

/// A single-site spin component, Cartesian or ladder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
    /// σ⁺ = (σˣ + iσʸ)/√2
    Plus,
    /// σ⁻ = (σˣ − iσʸ)/√2
    Minus,
}

impl Axis {
    pub const CARTESIAN: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn is_cartesian(self) -> bool {
        matches!(self, Axis::X | Axis::Y | Axis::Z)
    }

    /// Digit in the correlator index (1, 2, 3 for x, y, z).
    pub fn digit(self) -> Result<usize> {
        match self {
            Axis::X => Ok(1),
            Axis::Y => Ok(2),
            Axis::Z => Ok(3),
            other => Err(Error::LadderAxis(other.symbol())),
        }
    }

    /// Cartesian axis for digit 1..=3.
    pub fn from_digit(d: usize) -> Option<Axis> {
        match d {
            1 => Some(Axis::X),
            2 => Some(Axis::Y),
            3 => Some(Axis::Z),
            _ => None,
        }
    }

    /// Zero-based Cartesian component (x = 0, y = 1, z = 2).
    pub fn component(self) -> Result<usize> {
        self.digit().map(|d| d - 1)
    }

    pub fn symbol(self) -> char {
        match self {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
            Axis::Plus => '+',
            Axis::Minus => '-',
        }
    }

    pub fn from_symbol(c: char) -> Option<Axis> {
        match c {
            'x' => Some(Axis::X),
            'y' => Some(Axis::Y),
            'z' => Some(Axis::Z),
            '+' => Some(Axis::Plus),
            '-' => Some(Axis::Minus),
            _ => None,
        }
    }

    /// Cartesian weights of this component: σ^a = Σ w_k σ^k.
    pub fn cartesian_weights(self) -> Vec<(Axis, C64)> {
        let r = FRAC_1_SQRT_2;
        match self {
            Axis::Plus => vec![(Axis::X, C64::new(r, 0.0)), (Axis::Y, C64::new(0.0, r))],
            Axis::Minus => vec![(Axis::X, C64::new(r, 0.0)), (Axis::Y, C64::new(0.0, -r))],
            cart => vec![(cart, C64::new(1.0, 0.0))],
        }
    }
}

/// Levi-Civita symbol over Cartesian axes, with ε(x, y, z) = +1.
pub fn epsilon(mu: Axis, alpha: Axis, nu: Axis) -> Result<i8> {
    Ok(levi_civita(mu.component()?, alpha.component()?, nu.component()?))
}

/// Levi-Civita symbol on component indices 0..3.
#[inline]
pub fn levi_civita(a: usize, b: usize, c: usize) -> i8 {
    match (a, b, c) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1,
        _ => 0,
    }
}

/// A phase in {1, i, −1, −i}, stored as a power of i.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn power_of_i(self) -> u8 {
        self.0
    }

    pub fn to_complex(self) -> C64 {
        match self.0 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        }
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

/// A product of single-site Pauli operators.
///
/// `axes[k]` belongs to the k-th member of `support` in ascending order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    support: CellSubset,
    axes: Vec<Axis>,
}

impl PauliString {
    pub fn identity() -> Self {
        PauliString {
            support: CellSubset::EMPTY,
            axes: Vec::new(),
        }
    }

    /// Builds a string from (site, axis) pairs in any order.
    pub fn from_ops<I: IntoIterator<Item = (usize, Axis)>>(ops: I) -> Result<Self> {
        let mut ops: Vec<(usize, Axis)> = ops.into_iter().collect();
        ops.sort_by_key(|&(s, _)| s);
        for w in ops.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::SameSite(w[0].0));
            }
        }
        if let Some(&(s, _)) = ops.last() {
            if s >= crate::combinatorics::MAX_SITES {
                return Err(Error::SiteOutOfRange {
                    site: s,
                    n_sites: crate::combinatorics::MAX_SITES,
                });
            }
        }
        Ok(PauliString {
            support: CellSubset::from_sites(ops.iter().map(|o| o.0)),
            axes: ops.into_iter().map(|o| o.1).collect(),
        })
    }

    pub fn single(site: usize, axis: Axis) -> Self {
        PauliString {
            support: CellSubset::singleton(site),
            axes: vec![axis],
        }
    }

    pub fn support(&self) -> CellSubset {
        self.support
    }

    pub fn weight(&self) -> usize {
        self.axes.len()
    }

    pub fn is_identity(&self) -> bool {
        self.axes.is_empty()
    }

    pub fn is_cartesian(&self) -> bool {
        self.axes.iter().all(|a| a.is_cartesian())
    }

    pub fn axis_at(&self, site: usize) -> Option<Axis> {
        self.support.rank_of(site).map(|k| self.axes[k])
    }

    /// (site, axis) pairs in ascending site order.
    pub fn ops(&self) -> impl Iterator<Item = (usize, Axis)> + '_ {
        self.support.sites().zip(self.axes.iter().copied())
    }

    /// Restriction to the sites in `keep`.
    pub fn restrict(&self, keep: CellSubset) -> PauliString {
        let ops: Vec<_> = self.ops().filter(|&(s, _)| keep.contains(s)).collect();
        PauliString {
            support: CellSubset::from_sites(ops.iter().map(|o| o.0)),
            axes: ops.into_iter().map(|o| o.1).collect(),
        }
    }

    /// Checks that all sites are below `n_sites`.
    pub fn check_sites(&self, n_sites: usize) -> Result<()> {
        match self.support.sites().find(|&s| s >= n_sites) {
            Some(site) => Err(Error::SiteOutOfRange { site, n_sites }),
            None => Ok(()),
        }
    }

    /// Expands ladder components into a weighted sum of Cartesian strings.
    pub fn cartesian_expansion(&self) -> Vec<(C64, PauliString)> {
        let mut terms = vec![(C64::new(1.0, 0.0), Vec::<(usize, Axis)>::new())];
        for (site, axis) in self.ops() {
            let weights = axis.cartesian_weights();
            terms = terms
                .into_iter()
                .flat_map(|(w, ops)| {
                    weights.iter().map(move |&(a, c)| {
                        let mut ops = ops.clone();
                        ops.push((site, a));
                        (w * c, ops)
                    })
                })
                .collect();
        }
        terms
            .into_iter()
            .map(|(w, ops)| {
                let support = CellSubset::from_sites(ops.iter().map(|o| o.0));
                (
                    w,
                    PauliString {
                        support,
                        axes: ops.into_iter().map(|o| o.1).collect(),
                    },
                )
            })
            .collect()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (site, axis)) in self.ops().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}{}", axis.symbol(), site)?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut ops = Vec::new();
        let mut seen = CellSubset::EMPTY;
        for (position, token) in text.split_whitespace().enumerate() {
            let mut chars = token.chars();
            let c = chars.next().expect("split_whitespace yields nonempty tokens");
            let axis = Axis::from_symbol(c).ok_or_else(|| Error::Parse {
                position,
                message: format!("bad axis character '{c}' in \"{token}\""),
            })?;
            let digits = chars.as_str();
            if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                return Err(Error::Parse {
                    position,
                    message: format!("bad site index in \"{token}\""),
                });
            }
            let site: usize = digits.parse().map_err(|_| Error::Parse {
                position,
                message: format!("bad site index in \"{token}\""),
            })?;
            if site >= crate::combinatorics::MAX_SITES {
                return Err(Error::Parse {
                    position,
                    message: format!("site {site} out of range"),
                });
            }
            if seen.contains(site) {
                return Err(Error::Parse {
                    position,
                    message: format!("duplicate site {site}"),
                });
            }
            seen = seen.insert(site);
            ops.push((site, axis));
        }
        PauliString::from_ops(ops)
    }
}

/// Parses a Pauli string and checks it fits in `n_sites`.
pub fn parse_pauli(text: &str, n_sites: usize) -> Result<PauliString> {
    let s: PauliString = text.parse()?;
    if let Some(site) = s.support().sites().find(|&x| x >= n_sites) {
        let position = s.support().rank_of(site).unwrap_or(0);
        return Err(Error::Parse {
            position,
            message: format!("site {site} >= {n_sites}"),
        });
    }
    Ok(s)
}

/// Product of two Cartesian Pauli strings: `a · b = phase · result`.
pub fn multiply(a: &PauliString, b: &PauliString) -> Result<(Phase, PauliString)> {
    let mut phase = Phase::ONE;
    let mut ops = Vec::new();
    for site in a.support().union(b.support()).sites() {
        match (a.axis_at(site), b.axis_at(site)) {
            (Some(p), None) | (None, Some(p)) => {
                p.digit()?;
                ops.push((site, p));
            }
            (Some(p), Some(q)) => {
                let (pc, qc) = (p.component()?, q.component()?);
                if pc != qc {
                    let r = 3 - pc - qc;
                    // σ^p σ^q = i ε^{pqr} σ^r
                    phase = phase
                        * if levi_civita(pc, qc, r) > 0 {
                            Phase::I
                        } else {
                            Phase::MINUS_I
                        };
                    ops.push((site, Axis::CARTESIAN[r]));
                }
            }
            (None, None) => unreachable!(),
        }
    }
    Ok((phase, PauliString::from_ops(ops)?))
}

/// Base-4 code of a Cartesian Pauli string.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CorrelatorIndex(pub usize);

impl CorrelatorIndex {
    pub const IDENTITY: CorrelatorIndex = CorrelatorIndex(0);

    /// Digit at `site` (0 = I, 1 = x, 2 = y, 3 = z).
    #[inline]
    pub fn digit(self, site: usize) -> usize {
        (self.0 >> (2 * site)) & 3
    }

    /// Sites with a nonidentity digit.
    pub fn support(self) -> CellSubset {
        CellSubset::from_mask(support_mask(self.0))
    }

    #[inline]
    pub fn with_digit(self, site: usize, digit: usize) -> CorrelatorIndex {
        CorrelatorIndex((self.0 & !(3 << (2 * site))) | (digit << (2 * site)))
    }
}

/// Bitmask of the sites with nonzero base-4 digits in `code`.
#[inline]
pub fn support_mask(code: usize) -> u32 {
    let mut mask = 0u32;
    let mut c = code;
    let mut site = 0;
    while c != 0 {
        if c & 3 != 0 {
            mask |= 1 << site;
        }
        c >>= 2;
        site += 1;
    }
    mask
}

/// Number of correlator slots (4^n) for `n` sites.
pub fn correlator_dim(n_sites: usize) -> usize {
    1usize << (2 * n_sites)
}

/// Index of a Cartesian Pauli string.
pub fn index_of(s: &PauliString) -> Result<CorrelatorIndex> {
    let mut code = 0usize;
    for (site, axis) in s.ops() {
        code |= axis.digit()? << (2 * site);
    }
    Ok(CorrelatorIndex(code))
}

/// Cartesian Pauli string of an index.
pub fn string_of(c: CorrelatorIndex) -> PauliString {
    let support = c.support();
    let axes = support
        .sites()
        .map(|s| Axis::from_digit(c.digit(s)).expect("nonzero digit"))
        .collect();
    PauliString { support, axes }
}

/// Correlators in the ladder basis, digits `0 = I, 1 = +, 2 = −, 3 = z`.
#[derive(Clone, Debug, PartialEq)]
pub struct LadderTable {
    pub n_sites: usize,
    pub values: Vec<C64>,
}

impl LadderTable {
    /// Expectation of a string given in ladder digits.
    pub fn get(&self, code: usize) -> C64 {
        self.values[code]
    }
}

fn per_site_transform(values: &mut [C64], n_sites: usize, f: impl Fn(C64, C64) -> (C64, C64)) {
    // acts on digit pairs (1, 2) at every site, leaving digits 0 and 3
    for site in 0..n_sites {
        let stride = 1usize << (2 * site);
        for code in 0..values.len() {
            if (code >> (2 * site)) & 3 == 1 {
                let (a, b) = f(values[code], values[code + stride]);
                values[code] = a;
                values[code + stride] = b;
            }
        }
    }
}

/// Converts Cartesian correlators to the ladder basis.
pub fn to_ladder(corrs: &crate::density::CorrelatorVector) -> LadderTable {
    let n = corrs.n_sites();
    let mut values: Vec<C64> = corrs.values().iter().map(|&v| C64::new(v, 0.0)).collect();
    let r = FRAC_1_SQRT_2;
    let i = C64::new(0.0, 1.0);
    per_site_transform(&mut values, n, |x, y| ((x + i * y) * r, (x - i * y) * r));
    LadderTable { n_sites: n, values }
}

/// Inverse of [`to_ladder`]. Returns complex values; for tables that came from
/// real correlators the imaginary parts vanish.
pub fn from_ladder(table: &LadderTable) -> Vec<C64> {
    let mut values = table.values.clone();
    let r = FRAC_1_SQRT_2;
    let i = C64::new(0.0, 1.0);
    per_site_transform(&mut values, table.n_sites, |p, m| {
        ((p + m) * r, (p - m) * r / i)
    });
    values
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn single_site_products() {
        assert_eq!(multiply(&ps("x0"), &ps("y0")).unwrap(), (Phase::I, ps("z0")));
        assert_eq!(
            multiply(&ps("y0"), &ps("x0")).unwrap(),
            (Phase::MINUS_I, ps("z0"))
        );
        assert_eq!(
            multiply(&PauliString::identity(), &ps("x1 z3")).unwrap(),
            (Phase::ONE, ps("x1 z3"))
        );
        assert_eq!(
            multiply(&ps("x0 z1"), &ps("x0 z1")).unwrap(),
            (Phase::ONE, PauliString::identity())
        );
        assert!(multiply(&ps("+0"), &ps("x0")).is_err());
    }

    #[test]
    fn levi_civita_values() {
        assert_eq!(epsilon(Axis::X, Axis::Y, Axis::Z).unwrap(), 1);
        assert_eq!(epsilon(Axis::Y, Axis::X, Axis::Z).unwrap(), -1);
        assert_eq!(epsilon(Axis::X, Axis::X, Axis::Z).unwrap(), 0);
        assert_eq!(epsilon(Axis::Z, Axis::X, Axis::Y).unwrap(), 1);
        let err = epsilon(Axis::Plus, Axis::X, Axis::Z).unwrap_err();
        assert!(err.to_string().starts_with("Cartesian only"));
    }

    #[test]
    fn index_convention() {
        assert_eq!(index_of(&PauliString::identity()).unwrap(), CorrelatorIndex(0));
        assert_eq!(index_of(&ps("x0")).unwrap(), CorrelatorIndex(1));
        assert_eq!(index_of(&ps("z0 y1")).unwrap(), CorrelatorIndex(11));
        assert_eq!(string_of(CorrelatorIndex(11)), ps("z0 y1"));
    }

    #[test]
    fn index_round_trip() {
        for n in 0..=4 {
            for code in 0..correlator_dim(n) {
                let c = CorrelatorIndex(code);
                assert_eq!(index_of(&string_of(c)).unwrap(), c);
            }
        }
    }

    #[test]
    fn parse_and_display() {
        let s = ps("z2   x0");
        assert_eq!(s.to_string(), "x0 z2");
        assert_eq!(ps("").to_string(), "");
        assert!(ps("").is_identity());
        assert_eq!(s.axis_at(2), Some(Axis::Z));
        assert_eq!(s.axis_at(1), None);
    }

    #[test]
    fn parse_errors() {
        let dup = "z0 z0".parse::<PauliString>().unwrap_err();
        assert!(dup.to_string().contains("duplicate site 0"), "{dup}");
        assert!(matches!(
            "q1".parse::<PauliString>(),
            Err(Error::Parse { position: 0, .. })
        ));
        assert!(matches!(
            "x0 y".parse::<PauliString>(),
            Err(Error::Parse { position: 1, .. })
        ));
        assert!(matches!(
            parse_pauli("x0 z3", 3),
            Err(Error::Parse { position: 1, .. })
        ));
    }

    #[test]
    fn ladder_expansion_weights() {
        let terms = ps("+1").cartesian_expansion();
        assert_eq!(terms.len(), 2);
        assert_eq!(terms[0].1, ps("x1"));
        assert!((terms[0].0 - C64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert_eq!(terms[1].1, ps("y1"));
        assert!((terms[1].0 - C64::new(0.0, FRAC_1_SQRT_2)).norm() < 1e-15);
        assert_eq!(ps("+0 -1 z2").cartesian_expansion().len(), 4);
    }
}
