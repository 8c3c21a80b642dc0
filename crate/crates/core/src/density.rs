//! Dense density matrices and correlator vectors.
//!
//! Basis states are bit strings with site 0 as the least significant bit;
//! bit value 0 is spin up (σᶻ = +1). A correlator vector holds ⟨P⟩ for every
//! Cartesian Pauli string P, indexed by [`CorrelatorIndex`].

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::combinatorics::CellSubset;
use crate::error::{Error, Result};
use crate::pauli::{correlator_dim, levi_civita, Axis, CorrelatorIndex, PauliString};

/// Largest system handled with dense 2^N × 2^N matrices.
pub const MAX_DENSE_SITES: usize = 12;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const CORRELATOR_TOL: f64 = 1e-9;

pub type CMatrix = DMatrix<C64>;

pub(crate) fn check_dense_size(n_sites: usize) -> Result<()> {
    if n_sites > MAX_DENSE_SITES {
        Err(Error::TooLarge {
            n_sites,
            max: MAX_DENSE_SITES,
        })
    } else {
        Ok(())
    }
}

/// Flip mask and per-basis-state phase of a Cartesian Pauli string:
/// `P |b⟩ = phase(b) |b ^ flip⟩`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PauliAction {
    flip: usize,
    y_mask: usize,
    z_mask: usize,
    y_count: u32,
}

impl PauliAction {
    pub(crate) fn from_index(code: CorrelatorIndex, n_sites: usize) -> Self {
        let (mut flip, mut y_mask, mut z_mask) = (0, 0, 0);
        for site in 0..n_sites {
            match code.digit(site) {
                1 => flip |= 1 << site,
                2 => {
                    flip |= 1 << site;
                    y_mask |= 1 << site;
                }
                3 => z_mask |= 1 << site,
                _ => {}
            }
        }
        PauliAction {
            flip,
            y_mask,
            z_mask,
            y_count: y_mask.count_ones(),
        }
    }

    #[inline]
    pub(crate) fn target(&self, b: usize) -> usize {
        b ^ self.flip
    }

    /// σʸ|0⟩ = i|1⟩, σʸ|1⟩ = −i|0⟩, σᶻ|1⟩ = −|1⟩.
    #[inline]
    pub(crate) fn phase(&self, b: usize) -> C64 {
        let minus = ((b & self.z_mask).count_ones() + (b & self.y_mask).count_ones()) % 2;
        // i^y_count · (−1)^(#z on 1 + #y on 1)
        let power = (self.y_count + 2 * minus) % 4;
        match power {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        }
    }
}

/// Dense matrix of a Pauli string on `n_sites` (ladder components allowed).
pub fn pauli_matrix(s: &PauliString, n_sites: usize) -> Result<CMatrix> {
    check_dense_size(n_sites)?;
    s.check_sites(n_sites)?;
    let dim = 1usize << n_sites;
    let mut out = CMatrix::zeros(dim, dim);
    for (w, term) in s.cartesian_expansion() {
        let act = PauliAction::from_index(crate::pauli::index_of(&term)?, n_sites);
        for b in 0..dim {
            out[(act.target(b), b)] += w * act.phase(b);
        }
    }
    Ok(out)
}

/// Expectation values ⟨P⟩ of all Cartesian Pauli strings, slot 0 pinned to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelatorVector {
    n_sites: usize,
    values: Vec<f64>,
}

impl CorrelatorVector {
    /// Validates length, the identity slot and the |⟨P⟩| ≤ 1 bound.
    pub fn new(n_sites: usize, values: Vec<f64>) -> Result<Self> {
        let v = Self::from_raw(n_sites, values)?;
        if (v.values[0] - 1.0).abs() > CORRELATOR_TOL {
            return Err(Error::InvalidCorrelators(format!(
                "identity slot is {}, expected 1",
                v.values[0]
            )));
        }
        if let Some((k, x)) = v
            .values
            .iter()
            .enumerate()
            .find(|(_, x)| !x.is_finite() || x.abs() > 1.0 + CORRELATOR_TOL)
        {
            return Err(Error::InvalidCorrelators(format!(
                "|<{}>| = {} exceeds 1",
                crate::pauli::string_of(CorrelatorIndex(k)),
                x.abs()
            )));
        }
        Ok(v)
    }

    /// Only checks the length; used for integrator output.
    pub fn from_raw(n_sites: usize, values: Vec<f64>) -> Result<Self> {
        if n_sites > crate::combinatorics::MAX_SITES / 2 {
            return Err(Error::TooLarge {
                n_sites,
                max: crate::combinatorics::MAX_SITES / 2,
            });
        }
        if values.len() != correlator_dim(n_sites) {
            return Err(Error::Dimension(format!(
                "{} values for {} sites (expected {})",
                values.len(),
                n_sites,
                correlator_dim(n_sites)
            )));
        }
        Ok(CorrelatorVector { n_sites, values })
    }

    /// The maximally mixed state: every nonidentity correlator is zero.
    pub fn maximally_mixed(n_sites: usize) -> Self {
        let mut values = vec![0.0; correlator_dim(n_sites)];
        values[0] = 1.0;
        CorrelatorVector { n_sites, values }
    }

    /// Builds a vector from (string, value) pairs, all other slots zero.
    pub fn from_entries<'a, I>(n_sites: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a PauliString, f64)>,
    {
        let mut values = vec![0.0; correlator_dim(n_sites)];
        values[0] = 1.0;
        for (s, v) in entries {
            s.check_sites(n_sites)?;
            let code = crate::pauli::index_of(s)?;
            if code == CorrelatorIndex::IDENTITY {
                return Err(Error::InvalidCorrelators(
                    "the identity slot is fixed to 1".into(),
                ));
            }
            values[code.0] = v;
        }
        Self::new(n_sites, values)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, c: CorrelatorIndex) -> f64 {
        self.values[c.0]
    }

    /// ⟨P⟩ for a Cartesian string.
    pub fn expectation(&self, s: &PauliString) -> Result<f64> {
        s.check_sites(self.n_sites)?;
        Ok(self.values[crate::pauli::index_of(s)?.0])
    }

    /// Sum of squares of the nonidentity correlators.
    pub fn nonidentity_norm_sqr(&self) -> f64 {
        self.values[1..].iter().map(|v| v * v).sum()
    }
}

/// A Hermitian, unit-trace 2^n × 2^n matrix. Positivity is not enforced.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n_sites: usize,
    data: CMatrix,
}

impl DensityMatrix {
    pub fn new(n_sites: usize, data: CMatrix) -> Result<Self> {
        check_dense_size(n_sites)?;
        let dim = 1usize << n_sites;
        if data.nrows() != dim || data.ncols() != dim {
            return Err(Error::Dimension(format!(
                "{}x{} matrix for {} sites",
                data.nrows(),
                data.ncols(),
                n_sites
            )));
        }
        let herm = hermiticity_error(&data);
        if herm > HERMITIAN_TOL * data.norm().max(1.0) {
            return Err(Error::NotHermitian(herm));
        }
        let tr = data.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::NonUnitTrace(tr.re));
        }
        Ok(DensityMatrix { n_sites, data })
    }

    /// |ψ⟩⟨ψ| for a state vector of length 2^n (normalized here).
    pub fn from_pure(psi: &[C64]) -> Result<Self> {
        let dim = psi.len();
        if !dim.is_power_of_two() || dim == 0 {
            return Err(Error::Dimension(format!("state of length {dim}")));
        }
        let n_sites = dim.trailing_zeros() as usize;
        check_dense_size(n_sites)?;
        let norm: f64 = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("zero state vector".into()));
        }
        let v = nalgebra::DVector::from_iterator(dim, psi.iter().map(|a| a / norm));
        let data = &v * v.adjoint();
        Ok(DensityMatrix { n_sites, data })
    }

    pub fn maximally_mixed(n_sites: usize) -> Result<Self> {
        check_dense_size(n_sites)?;
        let dim = 1usize << n_sites;
        Ok(DensityMatrix {
            n_sites,
            data: CMatrix::identity(dim, dim) / C64::new(dim as f64, 0.0),
        })
    }

    /// Wraps a matrix known to be Hermitian with unit trace.
    pub(crate) fn from_trusted(n_sites: usize, data: CMatrix) -> Self {
        DensityMatrix { n_sites, data }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }
}

/// Largest |A − A†| entry.
pub fn hermiticity_error(a: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in i..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// ρ = 2^{−N} Σ_P ⟨P⟩ P.
pub fn from_correlators(v: &CorrelatorVector) -> Result<DensityMatrix> {
    let n = v.n_sites();
    check_dense_size(n)?;
    let dim = 1usize << n;
    let scale = 1.0 / dim as f64;
    let mut data = CMatrix::zeros(dim, dim);
    for (code, &x) in v.values().iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        let act = PauliAction::from_index(CorrelatorIndex(code), n);
        for b in 0..dim {
            data[(act.target(b), b)] += act.phase(b) * (x * scale);
        }
    }
    Ok(DensityMatrix::from_trusted(n, data))
}

/// tr(A · P) for a Cartesian string given by its index.
pub(crate) fn trace_with_pauli(a: &CMatrix, code: CorrelatorIndex, n_sites: usize) -> C64 {
    let act = PauliAction::from_index(code, n_sites);
    // P[j^f, j] = phase(j), so tr(A P) = Σ_j A[j, j^f] phase(j)
    (0..a.nrows())
        .map(|j| a[(j, act.target(j))] * act.phase(j))
        .sum()
}

/// ⟨P⟩ = tr(ρ P) for every Cartesian string.
pub fn extract_correlators(rho: &DensityMatrix) -> Result<CorrelatorVector> {
    let tr = rho.matrix().trace();
    if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
        return Err(Error::NonUnitTrace(tr.re));
    }
    let mut values = operator_coefficients(rho.matrix(), rho.n_sites());
    // the identity slot is pinned; the trace has been checked above
    values[0] = 1.0;
    Ok(CorrelatorVector {
        n_sites: rho.n_sites(),
        values,
    })
}

/// tr(A P) for every Cartesian string P (real parts).
pub fn operator_coefficients(a: &CMatrix, n_sites: usize) -> Vec<f64> {
    (0..correlator_dim(n_sites))
        .map(|code| trace_with_pauli(a, CorrelatorIndex(code), n_sites).re)
        .collect()
}

/// Scatters the bits of `local` onto the positions of `mask`.
#[inline]
pub(crate) fn deposit_bits(local: usize, mask: u32) -> usize {
    let mut out = 0usize;
    let mut m = mask;
    let mut k = 0;
    while m != 0 {
        let pos = m.trailing_zeros();
        if local >> k & 1 == 1 {
            out |= 1 << pos;
        }
        m &= m - 1;
        k += 1;
    }
    out
}

/// Gathers the bits of `full` at the positions of `mask` into a compact index.
#[inline]
pub(crate) fn extract_bits(full: usize, mask: u32) -> usize {
    let mut out = 0usize;
    let mut m = mask;
    let mut k = 0;
    while m != 0 {
        let pos = m.trailing_zeros();
        if full >> pos & 1 == 1 {
            out |= 1 << k;
        }
        m &= m - 1;
        k += 1;
    }
    out
}

/// Partial trace of an operator on `n_sites`, keeping the sites in `keep`.
/// The result acts on the kept sites in ascending order.
pub fn partial_trace_operator(a: &CMatrix, n_sites: usize, keep: CellSubset) -> CMatrix {
    let full = CellSubset::full(n_sites);
    debug_assert!(keep.is_subset_of(full));
    let traced = full.difference(keep);
    let dk = 1usize << keep.len();
    let dt = 1usize << traced.len();
    let keep_pos: Vec<usize> = (0..dk).map(|r| deposit_bits(r, keep.mask())).collect();
    let mut out = CMatrix::zeros(dk, dk);
    for t in 0..dt {
        let tb = deposit_bits(t, traced.mask());
        for (r, &rb) in keep_pos.iter().enumerate() {
            for (c, &cb) in keep_pos.iter().enumerate() {
                out[(r, c)] += a[(rb | tb, cb | tb)];
            }
        }
    }
    out
}

/// Reduced density matrix on `keep`. An empty `keep` gives the 1×1 matrix [1].
pub fn partial_trace(rho: &DensityMatrix, keep: CellSubset) -> Result<DensityMatrix> {
    let full = CellSubset::full(rho.n_sites());
    if !keep.is_subset_of(full) {
        let site = keep.difference(full).first().unwrap_or(0);
        return Err(Error::SiteOutOfRange {
            site,
            n_sites: rho.n_sites(),
        });
    }
    Ok(DensityMatrix::from_trusted(
        keep.len(),
        partial_trace_operator(rho.matrix(), rho.n_sites(), keep),
    ))
}

/// Tensor product of operators on disjoint site sets.
///
/// Each factor acts on its own sites in ascending order; the result acts on
/// the union, again in ascending site order.
pub fn kron_disjoint(factors: &[(CellSubset, &CMatrix)]) -> (CellSubset, CMatrix) {
    let union = factors
        .iter()
        .fold(CellSubset::EMPTY, |acc, (s, _)| {
            debug_assert!(acc.is_disjoint(*s));
            acc.union(*s)
        });
    let dim = 1usize << union.len();
    // position masks of each factor inside the union's local index
    let local_masks: Vec<u32> = factors
        .iter()
        .map(|(s, _)| {
            s.sites()
                .map(|site| 1u32 << union.rank_of(site).unwrap())
                .fold(0, |a, b| a | b)
        })
        .collect();
    let mut out = CMatrix::zeros(dim, dim);
    for r in 0..dim {
        for c in 0..dim {
            let mut acc = C64::new(1.0, 0.0);
            for ((_, m), &lm) in factors.iter().zip(&local_masks) {
                acc *= m[(extract_bits(r, lm), extract_bits(c, lm))];
                if acc == C64::new(0.0, 0.0) {
                    break;
                }
            }
            out[(r, c)] = acc;
        }
    }
    (union, out)
}

/// tr ρ².
pub fn purity(rho: &DensityMatrix) -> f64 {
    // Hermitian: tr ρ² = Σ |ρ_ij|²
    rho.matrix().iter().map(|z| z.norm_sqr()).sum()
}

/// tr ρ² = 2^{−N} Σ_P ⟨P⟩².
pub fn purity_from_correlators(v: &CorrelatorVector) -> f64 {
    v.values().iter().map(|x| x * x).sum::<f64>() / (1u64 << v.n_sites()) as f64
}

/// Residuals of the two-qubit pure-state constraints; all vanish iff pure.
#[derive(Clone, Debug, PartialEq)]
pub struct PureStateResiduals {
    /// 3 − (|⟨σ₁⟩|² + |⟨σ₂⟩|² + Σ ⟨σ₁σ₂⟩²)
    pub norm: f64,
    /// ⟨σ₁^μ⟩ − Σ_β ⟨σ₁^μ σ₂^β⟩⟨σ₂^β⟩
    pub first: [f64; 3],
    /// ⟨σ₂^μ⟩ − Σ_β ⟨σ₁^β σ₂^μ⟩⟨σ₁^β⟩
    pub second: [f64; 3],
    /// ⟨σ₁^μσ₂^ν⟩ − ⟨σ₁^μ⟩⟨σ₂^ν⟩ + ½ ε^{μαλ} ε^{νβγ} ⟨σ₁^ασ₂^β⟩⟨σ₁^λσ₂^γ⟩
    pub tensor: [[f64; 3]; 3],
}

impl PureStateResiduals {
    pub fn max_abs(&self) -> f64 {
        let mut m = self.norm.abs();
        for k in 0..3 {
            m = m.max(self.first[k].abs()).max(self.second[k].abs());
            for l in 0..3 {
                m = m.max(self.tensor[k][l].abs());
            }
        }
        m
    }
}

/// Evaluates the pure-state constraints on a two-site correlator vector.
pub fn check_pure_two_qubit(v: &CorrelatorVector) -> Result<PureStateResiduals> {
    if v.n_sites() != 2 {
        return Err(Error::Dimension(format!(
            "pure-state constraints need 2 sites, got {}",
            v.n_sites()
        )));
    }
    let s1: [f64; 3] = std::array::from_fn(|m| v.values()[m + 1]);
    let s2: [f64; 3] = std::array::from_fn(|m| v.values()[4 * (m + 1)]);
    let t: [[f64; 3]; 3] =
        std::array::from_fn(|m| std::array::from_fn(|n| v.values()[(m + 1) + 4 * (n + 1)]));

    let sq = |a: &[f64; 3]| a.iter().map(|x| x * x).sum::<f64>();
    let t_sq: f64 = t.iter().flatten().map(|x| x * x).sum();
    let norm = 3.0 - (sq(&s1) + sq(&s2) + t_sq);
    let first = std::array::from_fn(|m| s1[m] - (0..3).map(|b| t[m][b] * s2[b]).sum::<f64>());
    let second = std::array::from_fn(|m| s2[m] - (0..3).map(|b| t[b][m] * s1[b]).sum::<f64>());
    let tensor = std::array::from_fn(|m| {
        std::array::from_fn(|n| {
            let mut quad = 0.0;
            for a in 0..3 {
                for l in 0..3 {
                    let e1 = levi_civita(m, a, l);
                    if e1 == 0 {
                        continue;
                    }
                    for b in 0..3 {
                        for g in 0..3 {
                            let e2 = levi_civita(n, b, g);
                            if e2 != 0 {
                                quad += f64::from(e1 * e2) * t[a][b] * t[l][g];
                            }
                        }
                    }
                }
            }
            t[m][n] - s1[m] * s2[n] + 0.5 * quad
        })
    });
    Ok(PureStateResiduals {
        norm,
        first,
        second,
        tensor,
    })
}

/// Smallest eigenvalue of ρ and whether it is ≥ −1e−10.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PositivityReport {
    pub min_eigenvalue: f64,
    pub is_positive: bool,
}

pub fn diagnose_positivity(rho: &DensityMatrix) -> PositivityReport {
    let eig = rho.matrix().clone().symmetric_eigenvalues();
    let min_eigenvalue = eig.iter().copied().fold(f64::INFINITY, f64::min);
    PositivityReport {
        min_eigenvalue,
        is_positive: min_eigenvalue >= -1e-10,
    }
}

/// Bloch-vector density matrix of one spin, ½(1 + b·σ).
pub fn single_spin(bloch: [f64; 3]) -> CMatrix {
    let [x, y, z] = bloch;
    CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(0.5 * (1.0 + z), 0.0),
            C64::new(0.5 * x, -0.5 * y),
            C64::new(0.5 * x, 0.5 * y),
            C64::new(0.5 * (1.0 - z), 0.0),
        ],
    )
}

impl Axis {
    /// 2×2 matrix of a single-site component.
    pub fn matrix(self) -> CMatrix {
        pauli_matrix(&PauliString::single(0, self), 1).expect("single site")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::index_of;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn pauli_matrices_match_textbook() {
        let x = Axis::X.matrix();
        let y = Axis::Y.matrix();
        let z = Axis::Z.matrix();
        assert_eq!(x, CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]));
        assert_eq!(y, CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]));
        assert_eq!(z, CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]));
        // site 0 is the least significant factor: σ₀ᶻσ₁ˣ = σˣ ⊗ σᶻ
        let zx = pauli_matrix(&ps("z0 x1"), 2).unwrap();
        assert_eq!(zx, x.kronecker(&z));
    }

    #[test]
    fn single_spin_up() {
        let v = CorrelatorVector::new(1, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let rho = from_correlators(&v).unwrap();
        let expected = CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)]);
        assert!((rho.matrix() - expected).norm() < 1e-15);
    }

    #[test]
    fn cat_state_from_correlators() {
        let v = CorrelatorVector::from_entries(
            2,
            [(&ps("x0 x1"), 1.0), (&ps("y0 y1"), -1.0), (&ps("z0 z1"), 1.0)],
        )
        .unwrap();
        let rho = from_correlators(&v).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let cat = DensityMatrix::from_pure(&[c(r, 0.), c(0., 0.), c(0., 0.), c(r, 0.)]).unwrap();
        assert!((rho.matrix() - cat.matrix()).norm() < 1e-14);
    }

    #[test]
    fn maximally_mixed_round_trip() {
        let v = CorrelatorVector::maximally_mixed(3);
        let rho = from_correlators(&v).unwrap();
        let mm = DensityMatrix::maximally_mixed(3).unwrap();
        assert!((rho.matrix() - mm.matrix()).norm() < 1e-15);
        let back = extract_correlators(&mm).unwrap();
        assert!(back.values()[1..].iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn extract_rejects_non_unit_trace() {
        let rho = DensityMatrix::from_trusted(1, CMatrix::identity(2, 2));
        assert!(matches!(extract_correlators(&rho), Err(Error::NonUnitTrace(_))));
    }

    #[test]
    fn partial_trace_of_product_state() {
        let r1 = single_spin([0.3, -0.2, 0.5]);
        let r2 = single_spin([0.0, 0.6, -0.1]);
        let (_, prod) = kron_disjoint(&[
            (CellSubset::singleton(0), &r1),
            (CellSubset::singleton(1), &r2),
        ]);
        let rho = DensityMatrix::new(2, prod).unwrap();
        let red = partial_trace(&rho, CellSubset::singleton(0)).unwrap();
        assert!((red.matrix() - &r1).norm() < 1e-15);
        let red = partial_trace(&rho, CellSubset::singleton(1)).unwrap();
        assert!((red.matrix() - &r2).norm() < 1e-15);
        let none = partial_trace(&rho, CellSubset::EMPTY).unwrap();
        assert_eq!(none.dim(), 1);
        assert!((none.matrix()[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn purity_examples() {
        let mm = DensityMatrix::maximally_mixed(2).unwrap();
        assert!((purity(&mm) - 0.25).abs() < 1e-15);
        let v = CorrelatorVector::new(1, vec![1.0, 0.6, 0.0, 0.0]).unwrap();
        assert!((purity_from_correlators(&v) - 0.68).abs() < 1e-15);
        assert!((purity(&from_correlators(&v).unwrap()) - 0.68).abs() < 1e-15);
    }

    #[test]
    fn pure_constraints_on_cat_and_mixed() {
        let cat = CorrelatorVector::from_entries(
            2,
            [(&ps("x0 x1"), 1.0), (&ps("y0 y1"), -1.0), (&ps("z0 z1"), 1.0)],
        )
        .unwrap();
        assert!(check_pure_two_qubit(&cat).unwrap().max_abs() < 1e-12);
        let mm = CorrelatorVector::maximally_mixed(2);
        assert_eq!(check_pure_two_qubit(&mm).unwrap().norm, 3.0);
        assert!(check_pure_two_qubit(&CorrelatorVector::maximally_mixed(3)).is_err());
    }

    #[test]
    fn three_point_only_state_is_not_pure() {
        // only a 3-point tensor, scaled to Frobenius norm 0.5
        let entries: Vec<(PauliString, f64)> = vec![
            (ps("x0 x1 x2"), 0.3),
            (ps("y0 z1 x2"), -0.3),
            (ps("z0 y1 y2"), 0.1 * 5f64.sqrt() * 0.5 / 0.5f64.sqrt() * 0.5f64.sqrt()),
        ];
        let norm: f64 = entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
        let v = CorrelatorVector::from_entries(
            3,
            entries.iter().map(|(s, x)| (s, x * 0.5 / norm)),
        )
        .unwrap();
        let rho = from_correlators(&v).unwrap();
        let p = purity(&rho);
        assert!(p < 1.0 - 1e-3, "purity {p}");
        // ρ² ≠ ρ
        let sq = rho.matrix() * rho.matrix();
        assert!((sq - rho.matrix()).norm() > 1e-3);
        assert!(diagnose_positivity(&rho).is_positive);
    }

    #[test]
    fn positivity_flags_unphysical_vector() {
        let v = CorrelatorVector::from_entries(
            2,
            [(&ps("x0 x1"), 1.0), (&ps("y0 y1"), 1.0), (&ps("z0 z1"), 1.0)],
        )
        .unwrap();
        let report = diagnose_positivity(&from_correlators(&v).unwrap());
        assert!(!report.is_positive);
        assert!((report.min_eigenvalue + 0.5).abs() < 1e-12);
    }

    #[test]
    fn round_trip_and_partial_trace_on_random_state() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let rho = crate::states::random_mixed(3, &mut rng).unwrap();
        let v = extract_correlators(&rho).unwrap();
        let back = from_correlators(&v).unwrap();
        assert!((back.matrix() - rho.matrix()).norm() < 1e-13);
        assert!((purity(&rho) - purity_from_correlators(&v)).abs() < 1e-14);
        // reduced state on {0, 2} carries exactly the restricted correlators
        let keep = CellSubset::from_sites([0, 2]);
        let red = extract_correlators(&partial_trace(&rho, keep).unwrap()).unwrap();
        for code in 0..16 {
            let local = crate::pauli::string_of(CorrelatorIndex(code));
            let lifted = PauliString::from_ops(local.ops().map(|(s, a)| ([0, 2][s], a))).unwrap();
            let full_value = v.expectation(&lifted).unwrap();
            assert!((red.values()[code] - full_value).abs() < 1e-14);
        }
    }

    #[test]
    fn correlator_vector_invariants() {
        assert!(CorrelatorVector::new(1, vec![1.0, 0.0, 0.0, 2.0]).is_err());
        assert!(CorrelatorVector::new(1, vec![0.5, 0.0, 0.0, 0.0]).is_err());
        assert!(CorrelatorVector::new(1, vec![1.0, 0.0, 0.0]).is_err());
        let v = CorrelatorVector::new(2, {
            let mut x = vec![0.0; 16];
            x[0] = 1.0;
            x[index_of(&ps("z0 y1")).unwrap().0] = -0.25;
            x
        })
        .unwrap();
        assert_eq!(v.expectation(&ps("z0 y1")).unwrap(), -0.25);
    }
}
