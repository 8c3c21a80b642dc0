//! Named and random test states.
//!
//! Basis index convention as in [`crate::density`]: bit `i` of the index is
//! site `i`, and a 0 bit is spin up.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::combinatorics::CellSubset;
use crate::density::{check_dense_size, kron_disjoint, single_spin, CMatrix, DensityMatrix};
use crate::error::{Error, Result};

fn basis_state(n_sites: usize, index: usize) -> Vec<C64> {
    let mut psi = vec![C64::new(0.0, 0.0); 1 << n_sites];
    psi[index] = C64::new(1.0, 0.0);
    psi
}

/// Builds a pure state from (basis index, amplitude) pairs.
pub fn pure_state(n_sites: usize, amplitudes: &[(usize, C64)]) -> Result<DensityMatrix> {
    check_dense_size(n_sites)?;
    let mut psi = vec![C64::new(0.0, 0.0); 1 << n_sites];
    for &(b, a) in amplitudes {
        if b >= psi.len() {
            return Err(Error::Dimension(format!(
                "basis index {b} out of range for {n_sites} sites"
            )));
        }
        psi[b] += a;
    }
    DensityMatrix::from_pure(&psi)
}

/// (|↑…↑⟩ + e^{iφ}|↓…↓⟩)/√2.
pub fn cat(n_sites: usize, phi: f64) -> Result<DensityMatrix> {
    if n_sites == 0 {
        return Err(Error::InvalidArgument("cat state needs at least one site".into()));
    }
    let all_down = (1usize << n_sites) - 1;
    pure_state(
        n_sites,
        &[
            (0, C64::new(1.0, 0.0)),
            (all_down, C64::from_polar(1.0, phi)),
        ],
    )
}

/// GHZ state: the cat state with φ = 0.
pub fn ghz(n_sites: usize) -> Result<DensityMatrix> {
    cat(n_sites, 0.0)
}

/// Equal superposition of all basis states with exactly one spin up.
pub fn w_state(n_sites: usize) -> Result<DensityMatrix> {
    if n_sites == 0 {
        return Err(Error::InvalidArgument("W state needs at least one site".into()));
    }
    let all_down = (1usize << n_sites) - 1;
    let amps: Vec<(usize, C64)> = (0..n_sites)
        .map(|i| (all_down ^ (1 << i), C64::new(1.0, 0.0)))
        .collect();
    pure_state(n_sites, &amps)
}

/// Three spins: a two-site cat on sites 0, 1 times a down spin on site 2.
pub fn psi3_a() -> DensityMatrix {
    // |↑↑↓⟩ + |↓↓↓⟩
    pure_state(3, &[(0b100, C64::new(1.0, 0.0)), (0b111, C64::new(1.0, 0.0))])
        .expect("fixed state")
}

/// Three spins: GHZ.
pub fn psi3_b() -> DensityMatrix {
    ghz(3).expect("fixed state")
}

/// Three spins: single spin up among three (W class).
pub fn psi3_c() -> DensityMatrix {
    w_state(3).expect("fixed state")
}

/// ½(|↑↑⟩⟨↑↑| + |→→⟩⟨→→|): separable but with nonzero connected correlators.
pub fn mixed_example() -> DensityMatrix {
    let up = single_spin([0.0, 0.0, 1.0]);
    let right = single_spin([1.0, 0.0, 0.0]);
    let pair = |m: &CMatrix| {
        kron_disjoint(&[(CellSubset::singleton(0), m), (CellSubset::singleton(1), m)]).1
    };
    let data = (pair(&up) + pair(&right)) * C64::new(0.5, 0.0);
    DensityMatrix::new(2, data).expect("fixed state")
}

/// Product of single-spin states with the given Bloch vectors (|b| ≤ 1).
pub fn product(bloch: &[[f64; 3]]) -> Result<DensityMatrix> {
    check_dense_size(bloch.len())?;
    for (i, b) in bloch.iter().enumerate() {
        let norm = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !norm.is_finite() || norm > 1.0 + 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "Bloch vector of site {i} has length {norm} > 1"
            )));
        }
    }
    let mats: Vec<CMatrix> = bloch.iter().map(|b| single_spin(*b)).collect();
    let factors: Vec<(CellSubset, &CMatrix)> = mats
        .iter()
        .enumerate()
        .map(|(i, m)| (CellSubset::singleton(i), m))
        .collect();
    if factors.is_empty() {
        return DensityMatrix::maximally_mixed(0);
    }
    let (_, data) = kron_disjoint(&factors);
    DensityMatrix::new(bloch.len(), data)
}

/// All spins up.
pub fn all_up(n_sites: usize) -> Result<DensityMatrix> {
    check_dense_size(n_sites)?;
    DensityMatrix::from_pure(&basis_state(n_sites, 0))
}

fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random state vector.
pub fn random_state_vector<R: Rng + ?Sized>(n_sites: usize, rng: &mut R) -> Vec<C64> {
    let mut psi: Vec<C64> = (0..1usize << n_sites).map(|_| gaussian_complex(rng)).collect();
    let norm = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    psi.iter_mut().for_each(|a| *a /= norm);
    psi
}

/// Haar-random pure state.
pub fn random_pure<R: Rng + ?Sized>(n_sites: usize, rng: &mut R) -> Result<DensityMatrix> {
    check_dense_size(n_sites)?;
    DensityMatrix::from_pure(&random_state_vector(n_sites, rng))
}

/// Full-rank random mixed state ρ = GG†/tr(GG†) from a square Ginibre matrix.
pub fn random_mixed<R: Rng + ?Sized>(n_sites: usize, rng: &mut R) -> Result<DensityMatrix> {
    check_dense_size(n_sites)?;
    let dim = 1usize << n_sites;
    let g = DMatrix::from_fn(dim, dim, |_, _| gaussian_complex(rng));
    let mut rho = &g * g.adjoint();
    let tr = rho.trace().re;
    rho /= C64::new(tr, 0.0);
    // enforce exact Hermiticity against rounding
    let rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
    DensityMatrix::new(n_sites, rho)
}
