//! Correlated and cumulant parts of a density matrix.
//!
//! For a subset A of n cells, the correlated part ρᶜ_A is what remains of the
//! reduced matrix ρ̄_A after all products of lower-order correlated parts and
//! single-cell matrices are removed:
//!
//! ```text
//! ρᶜ_A = Σ_{m=2..n} (−1)^{n−m} Σ_{C⊆A, |C|=m} ρ̄_C Π_{j∈A∖C} ρ̄_j − (−1)^n (n−1) Π_{j∈A} ρ̄_j
//! ```
//!
//! Every single-cell partial trace of ρᶜ_A vanishes, and ρ is the sum over all
//! subsets A of (Π_{j∉A} ρ̄_j) ρᶜ_A. The cumulant parts ρᶜᶜ_A follow the
//! partition recursion instead: ρ̄_A = Σ_{partitions π of A} Π_{B∈π} ρᶜᶜ_B.
//!
//! All operators live on their own subset's Hilbert space, sites ascending.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64 as C64;

use crate::combinatorics::{enumerate_subsets, partitions, subsets_of_size, CellSubset};
use crate::density::{
    kron_disjoint, partial_trace_operator, CMatrix, CorrelatorVector, DensityMatrix,
};
use crate::error::{Error, Result};
use crate::pauli::{index_of, Axis, PauliString};

/// ρᶜ_A on the sites of A.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelatedPart {
    pub subset: CellSubset,
    pub matrix: CMatrix,
}

/// ρᶜᶜ_A on the sites of A; for a single cell this is ρ̄_i.
#[derive(Clone, Debug, PartialEq)]
pub struct CumulantPart {
    pub subset: CellSubset,
    pub matrix: CMatrix,
}

/// Decomposition of one density matrix with memoized reduced matrices and
/// cumulant parts.
#[derive(Clone, Debug)]
pub struct Decomposition {
    rho: DensityMatrix,
    reduced: HashMap<CellSubset, CMatrix>,
    cumulants: HashMap<CellSubset, CMatrix>,
}

impl Decomposition {
    pub fn new(rho: &DensityMatrix) -> Self {
        Decomposition {
            rho: rho.clone(),
            reduced: HashMap::new(),
            cumulants: HashMap::new(),
        }
    }

    pub fn n_sites(&self) -> usize {
        self.rho.n_sites()
    }

    fn check_subset(&self, a: CellSubset) -> Result<()> {
        let full = CellSubset::full(self.n_sites());
        match a.difference(full).first() {
            Some(site) => Err(Error::SiteOutOfRange {
                site,
                n_sites: self.n_sites(),
            }),
            None => Ok(()),
        }
    }

    /// Reduced density matrix ρ̄_A.
    pub fn reduced(&mut self, a: CellSubset) -> Result<&CMatrix> {
        self.check_subset(a)?;
        let n = self.n_sites();
        let rho = self.rho.matrix();
        Ok(self
            .reduced
            .entry(a)
            .or_insert_with(|| partial_trace_operator(rho, n, a)))
    }

    fn reduced_owned(&mut self, a: CellSubset) -> Result<CMatrix> {
        self.reduced(a).cloned()
    }

    pub fn correlated_part(&mut self, a: CellSubset) -> Result<CorrelatedPart> {
        self.check_subset(a)?;
        let n = a.len();
        if n < 2 {
            return Err(Error::SubsetTooSmall(n));
        }
        let singles: BTreeMap<usize, CMatrix> = a
            .sites()
            .map(|s| Ok((s, self.reduced_owned(CellSubset::singleton(s))?)))
            .collect::<Result<_>>()?;
        let dim = 1usize << n;
        let mut out = CMatrix::zeros(dim, dim);
        for m in 2..=n {
            let sign = if (n - m) % 2 == 0 { 1.0 } else { -1.0 };
            for c in subsets_of_size(a, m) {
                let rc = self.reduced_owned(c)?;
                let mut factors: Vec<(CellSubset, &CMatrix)> = vec![(c, &rc)];
                for j in a.difference(c).sites() {
                    factors.push((CellSubset::singleton(j), &singles[&j]));
                }
                out += kron_disjoint(&factors).1 * C64::new(sign, 0.0);
            }
        }
        let factors: Vec<(CellSubset, &CMatrix)> = singles
            .iter()
            .map(|(&j, m)| (CellSubset::singleton(j), m))
            .collect();
        let sign_n = if n % 2 == 0 { 1.0 } else { -1.0 };
        out -= kron_disjoint(&factors).1 * C64::new(sign_n * (n as f64 - 1.0), 0.0);
        Ok(CorrelatedPart {
            subset: a,
            matrix: out,
        })
    }

    pub fn cumulant_part(&mut self, a: CellSubset) -> Result<CumulantPart> {
        self.check_subset(a)?;
        if a.is_empty() {
            return Err(Error::EmptySubset);
        }
        Ok(CumulantPart {
            subset: a,
            matrix: self.cumulant_matrix(a)?,
        })
    }

    fn cumulant_matrix(&mut self, a: CellSubset) -> Result<CMatrix> {
        if let Some(m) = self.cumulants.get(&a) {
            return Ok(m.clone());
        }
        let mut out = self.reduced_owned(a)?;
        if a.len() > 1 {
            for p in partitions(a)?.skip(1) {
                // every partition after the first has at least two blocks
                let mats: Vec<CMatrix> = p
                    .blocks()
                    .iter()
                    .map(|&b| self.cumulant_matrix(b))
                    .collect::<Result<_>>()?;
                let factors: Vec<(CellSubset, &CMatrix)> =
                    p.blocks().iter().copied().zip(mats.iter()).collect();
                out -= kron_disjoint(&factors).1;
            }
        }
        self.cumulants.insert(a, out.clone());
        Ok(out)
    }

    /// Single-cell reduced matrices plus ρᶜ_A for every |A| ≥ 2.
    pub fn correlated_parts(&mut self) -> Result<PartSet> {
        let n = self.n_sites();
        let singles = (0..n)
            .map(|i| self.reduced_owned(CellSubset::singleton(i)))
            .collect::<Result<_>>()?;
        let mut correlated = BTreeMap::new();
        for a in enumerate_subsets(CellSubset::full(n)) {
            if a.len() >= 2 {
                correlated.insert(a, self.correlated_part(a)?.matrix);
            }
        }
        Ok(PartSet {
            n_sites: n,
            singles,
            correlated,
        })
    }

    /// ρᶜᶜ_A for every nonempty A.
    pub fn cumulant_parts(&mut self) -> Result<Vec<CumulantPart>> {
        enumerate_subsets(CellSubset::full(self.n_sites()))
            .into_iter()
            .filter(|a| !a.is_empty())
            .map(|a| self.cumulant_part(a))
            .collect()
    }
}

/// ρᶜ_A of `rho`.
pub fn correlated_part(rho: &DensityMatrix, a: CellSubset) -> Result<CorrelatedPart> {
    Decomposition::new(rho).correlated_part(a)
}

/// ρᶜᶜ_A of `rho`.
pub fn cumulant_part(rho: &DensityMatrix, a: CellSubset) -> Result<CumulantPart> {
    Decomposition::new(rho).cumulant_part(a)
}

/// Input to [`reconstruct`]: single-cell matrices and correlated parts.
#[derive(Clone, Debug, PartialEq)]
pub struct PartSet {
    pub n_sites: usize,
    pub singles: Vec<CMatrix>,
    pub correlated: BTreeMap<CellSubset, CMatrix>,
}

/// Σ_A (Π_{j∉A} ρ̄_j) ρᶜ_A, with ρᶜ_∅ = 1 and single-cell parts zero.
///
/// Returns the matrix and the number of terms summed (2^N − N).
pub fn reconstruct(parts: &PartSet) -> Result<(DensityMatrix, usize)> {
    let n = parts.n_sites;
    if parts.singles.len() != n {
        return Err(Error::Dimension(format!(
            "{} single-cell matrices for {n} sites",
            parts.singles.len()
        )));
    }
    if parts.singles.iter().any(|m| m.nrows() != 2 || m.ncols() != 2) {
        return Err(Error::Dimension("single-cell matrix is not 2x2".into()));
    }
    let full = CellSubset::full(n);
    let dim = 1usize << n;
    let mut out = CMatrix::zeros(dim, dim);
    let mut terms = 0;
    for a in enumerate_subsets(full) {
        if a.len() == 1 {
            continue;
        }
        let mut factors: Vec<(CellSubset, &CMatrix)> = Vec::new();
        if a.len() >= 2 {
            let m = parts
                .correlated
                .get(&a)
                .ok_or(Error::MissingPart(a.mask()))?;
            if m.nrows() != 1 << a.len() {
                return Err(Error::Dimension(format!(
                    "part on {a} has dimension {}",
                    m.nrows()
                )));
            }
            factors.push((a, m));
        }
        for j in full.difference(a).sites() {
            factors.push((CellSubset::singleton(j), &parts.singles[j]));
        }
        out += kron_disjoint(&factors).1;
        terms += 1;
    }
    Ok((DensityMatrix::from_trusted(n, out), terms))
}

/// Σ over partitions π of all sites of Π_{B∈π} ρᶜᶜ_B.
///
/// Returns the matrix and the number of terms summed (the Bell number B_N).
pub fn cumulant_reconstruct(
    n_sites: usize,
    parts: &[CumulantPart],
) -> Result<(DensityMatrix, usize)> {
    let full = CellSubset::full(n_sites);
    let lookup: HashMap<CellSubset, &CMatrix> = parts.iter().map(|p| (p.subset, &p.matrix)).collect();
    for p in parts {
        if !p.subset.is_subset_of(full) || p.matrix.nrows() != 1 << p.subset.len() {
            return Err(Error::Dimension(format!(
                "cumulant part on {} inconsistent with {n_sites} sites",
                p.subset
            )));
        }
    }
    let dim = 1usize << n_sites;
    let mut out = CMatrix::zeros(dim, dim);
    let mut terms = 0;
    for p in partitions(full)? {
        let factors: Vec<(CellSubset, &CMatrix)> = p
            .blocks()
            .iter()
            .map(|b| {
                lookup
                    .get(b)
                    .map(|m| (*b, *m))
                    .ok_or(Error::MissingPart(b.mask()))
            })
            .collect::<Result<_>>()?;
        out += kron_disjoint(&factors).1;
        terms += 1;
    }
    Ok((DensityMatrix::from_trusted(n_sites, out), terms))
}

/// ⟨⟨σ_i^μ σ_j^ν⟩⟩ = ⟨σ_i^μ σ_j^ν⟩ − ⟨σ_i^μ⟩⟨σ_j^ν⟩.
pub fn connected_pair(v: &CorrelatorVector, i: usize, j: usize, mu: Axis, nu: Axis) -> Result<f64> {
    if i == j {
        return Err(Error::SameSite(i));
    }
    let pair = PauliString::from_ops([(i, mu), (j, nu)])?;
    connected_correlator(v, &pair)
}

/// Connected correlator of a Cartesian string of weight ≥ 2: the coefficient
/// tr(P ρᶜ_A) with A the support of P, evaluated directly from correlators.
pub fn connected_correlator(v: &CorrelatorVector, s: &PauliString) -> Result<f64> {
    s.check_sites(v.n_sites())?;
    let a = s.support();
    let n = a.len();
    if n < 2 {
        return Err(Error::SubsetTooSmall(n));
    }
    let value = |c: CellSubset| -> Result<f64> { Ok(v.get(index_of(&s.restrict(c))?)) };
    let singles: Vec<f64> = a
        .sites()
        .map(|j| value(CellSubset::singleton(j)))
        .collect::<Result<_>>()?;
    let single_of = |j: usize| singles[a.rank_of(j).expect("member")];
    let mut total = 0.0;
    for m in 2..=n {
        let sign = if (n - m) % 2 == 0 { 1.0 } else { -1.0 };
        for c in subsets_of_size(a, m) {
            let rest: f64 = a.difference(c).sites().map(single_of).product();
            total += sign * value(c)? * rest;
        }
    }
    let sign_n = if n % 2 == 0 { 1.0 } else { -1.0 };
    total -= sign_n * (n as f64 - 1.0) * singles.iter().product::<f64>();
    Ok(total)
}

/// Largest entry of tr_i ρᶜ_A over all cells i of A.
pub fn single_cell_trace_residual(part: &CorrelatedPart) -> f64 {
    let n = part.subset.len();
    let local = CellSubset::full(n);
    (0..n)
        .map(|k| {
            partial_trace_operator(&part.matrix, n, local.remove(k))
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}
