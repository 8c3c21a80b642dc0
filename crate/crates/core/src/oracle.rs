//! Brute-force reference: dense Hamiltonian, exact diagonalization and
//! unitary propagation of the density matrix.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::combinatorics::CellSubset;
use crate::density::{
    check_dense_size, extract_correlators, CMatrix, DensityMatrix, PauliAction,
};
use crate::dynamics::Trajectory;
use crate::error::Result;
use crate::hamiltonian::SpinHamiltonian;
use crate::pauli::CorrelatorIndex;

/// Pauli-basis expansion of H: (string, coefficient) with the ½ factors applied.
pub fn hamiltonian_terms(h: &SpinHamiltonian) -> Vec<(CorrelatorIndex, f64)> {
    let mut terms = Vec::new();
    for (i, f) in h.fields().iter().enumerate() {
        for (a, &x) in f.iter().enumerate() {
            if x != 0.0 {
                terms.push((CorrelatorIndex::IDENTITY.with_digit(i, a + 1), 0.5 * x));
            }
        }
    }
    for ((i, j), t) in h.couplings() {
        for (a, row) in t.iter().enumerate() {
            for (b, &x) in row.iter().enumerate() {
                if x != 0.0 {
                    let code = CorrelatorIndex::IDENTITY
                        .with_digit(i, a + 1)
                        .with_digit(j, b + 1);
                    terms.push((code, 0.5 * x));
                }
            }
        }
    }
    terms
}

/// Re-indexes a string supported in `subset` onto the subset's own sites.
fn localize(code: CorrelatorIndex, subset: CellSubset) -> CorrelatorIndex {
    subset
        .sites()
        .enumerate()
        .fold(CorrelatorIndex::IDENTITY, |acc, (k, s)| {
            acc.with_digit(k, code.digit(s))
        })
}

/// Σ_k c_k P_k on `subset`, keeping only terms supported inside it.
pub fn operator_on(terms: &[(CorrelatorIndex, f64)], subset: CellSubset) -> CMatrix {
    let n = subset.len();
    let dim = 1usize << n;
    let mut out = CMatrix::zeros(dim, dim);
    for &(code, c) in terms {
        if !code.support().is_subset_of(subset) {
            continue;
        }
        let act = PauliAction::from_index(localize(code, subset), n);
        for b in 0..dim {
            out[(act.target(b), b)] += act.phase(b) * c;
        }
    }
    out
}

/// Dense H on all sites.
pub fn build_hamiltonian_matrix(h: &SpinHamiltonian) -> Result<CMatrix> {
    check_dense_size(h.n_sites())?;
    Ok(operator_on(&hamiltonian_terms(h), CellSubset::full(h.n_sites())))
}

/// The part of H acting only inside `subset`, on the subset's own sites.
pub fn subsystem_hamiltonian(h: &SpinHamiltonian, subset: CellSubset) -> Result<CMatrix> {
    check_dense_size(subset.len())?;
    Ok(operator_on(&hamiltonian_terms(h), subset))
}

/// ½ V_ij^{μν} σ_i^μ σ_j^ν embedded on `subset` (which must contain i and j).
pub fn pair_coupling_operator(h: &SpinHamiltonian, i: usize, j: usize, subset: CellSubset) -> CMatrix {
    let t = h.coupling(i, j);
    let mut terms = Vec::new();
    for (a, row) in t.iter().enumerate() {
        for (b, &x) in row.iter().enumerate() {
            if x != 0.0 {
                let code = CorrelatorIndex::IDENTITY
                    .with_digit(i, a + 1)
                    .with_digit(j, b + 1);
                terms.push((code, 0.5 * x));
            }
        }
    }
    operator_on(&terms, subset)
}

/// Eigen-decomposition of H with ascending energies.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub energies: Vec<f64>,
    pub vectors: CMatrix,
}

impl EigenSystem {
    pub fn new(hmat: &CMatrix) -> Self {
        let eig = hmat.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let energies = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = CMatrix::from_columns(
            &order
                .iter()
                .map(|&k| eig.eigenvectors.column(k).into_owned())
                .collect::<Vec<DVector<C64>>>(),
        );
        EigenSystem { energies, vectors }
    }

    pub fn of(h: &SpinHamiltonian) -> Result<Self> {
        Ok(Self::new(&build_hamiltonian_matrix(h)?))
    }

    /// max |H V − V diag(E)|.
    pub fn residual(&self, hmat: &CMatrix) -> f64 {
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            self.energies.len(),
            self.energies.iter().map(|&e| C64::new(e, 0.0)),
        ));
        (hmat * &self.vectors - &self.vectors * d)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// All positive differences E_n − E_m, sorted ascending (with repeats).
    pub fn positive_gaps(&self, tol: f64) -> Vec<f64> {
        let mut gaps = Vec::new();
        for (m, em) in self.energies.iter().enumerate() {
            for en in &self.energies[m + 1..] {
                let g = en - em;
                if g > tol {
                    gaps.push(g);
                }
            }
        }
        gaps.sort_by(f64::total_cmp);
        gaps
    }

    /// U(t) ρ U†(t) with U = exp(−iHt).
    pub fn propagate(&self, rho0: &CMatrix, times: &[f64]) -> Vec<CMatrix> {
        let v = &self.vectors;
        let rho_eig = v.adjoint() * rho0 * v;
        times
            .par_iter()
            .map(|&t| {
                let phases: Vec<C64> = self
                    .energies
                    .iter()
                    .map(|&e| C64::from_polar(1.0, -e * t))
                    .collect();
                let r = DMatrix::from_fn(rho_eig.nrows(), rho_eig.ncols(), |m, n| {
                    rho_eig[(m, n)] * phases[m] * phases[n].conj()
                });
                let out = v * r * v.adjoint();
                // restore exact Hermiticity
                (&out + out.adjoint()) * C64::new(0.5, 0.0)
            })
            .collect()
    }
}

/// ρ(t) for each requested time.
pub fn evolve_exact(
    h: &SpinHamiltonian,
    rho0: &DensityMatrix,
    times: &[f64],
) -> Result<Vec<DensityMatrix>> {
    check_dense_size(h.n_sites())?;
    if rho0.n_sites() != h.n_sites() {
        return Err(crate::error::Error::Dimension(format!(
            "state has {} sites, Hamiltonian {}",
            rho0.n_sites(),
            h.n_sites()
        )));
    }
    let eig = EigenSystem::of(h)?;
    Ok(eig
        .propagate(rho0.matrix(), times)
        .into_iter()
        .map(|m| DensityMatrix::from_trusted(h.n_sites(), m))
        .collect())
}

/// Exact correlator trajectory.
pub fn correlator_trajectory(
    h: &SpinHamiltonian,
    rho0: &DensityMatrix,
    times: &[f64],
) -> Result<Trajectory> {
    let states = evolve_exact(h, rho0, times)?
        .par_iter()
        .map(extract_correlators)
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        times: times.to_vec(),
        states,
    })
}
