//! The linear generator 𝕄 of the correlator hierarchy, dX/dt = 𝕄X.
//!
//! For a target correlator with support A and axes μ_i, the time derivative
//! collects, for every i ∈ A:
//!
//! * ε^{μ_i α ν} h_i^α — same support, axis at i replaced by ν;
//! * ε^{μ_i α ν} V_ij^{α μ_j}, j ∈ A∖{i} — site j removed, axis ν at i;
//! * ε^{μ_i α ν} V_iℓ^{α λ}, ℓ ∉ A — site ℓ added with axis λ, axis ν at i.
//!
//! The ½ of the pair Hamiltonian cancels against the 2 from the Pauli
//! commutator, so no factor appears here. Slot 0 (the identity) has an empty
//! row and column.

use rayon::prelude::*;

use crate::combinatorics::CellSubset;
use crate::density::{partial_trace_operator, CMatrix, DensityMatrix};
use crate::error::{Error, Result};
use crate::hamiltonian::SpinHamiltonian;
use crate::oracle::{pair_coupling_operator, subsystem_hamiltonian};
use crate::pauli::{correlator_dim, levi_civita, CorrelatorIndex};
use crate::sparse::CsrMatrix;

pub use crate::hamiltonian::Tensor;

/// Sparse generator on the full 4^N correlator space.
#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    n_sites: usize,
    matrix: CsrMatrix,
}

impl Generator {
    pub fn from_matrix(n_sites: usize, matrix: CsrMatrix) -> Result<Self> {
        let dim = correlator_dim(n_sites);
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::Dimension(format!(
                "{}x{} generator for {n_sites} sites",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Generator { n_sites, matrix })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matrix.matvec(x, y)
    }

    pub fn norm_inf(&self) -> f64 {
        self.matrix.norm_inf()
    }

    pub fn antisymmetry_error(&self) -> f64 {
        self.matrix.antisymmetry_error()
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        self.matrix.to_dense()
    }
}

/// Row of 𝕄 for target `code` as (column, value) pairs, duplicates merged.
pub fn generator_row(h: &SpinHamiltonian, code: CorrelatorIndex) -> Vec<(usize, f64)> {
    let n = h.n_sites();
    let support = code.support();
    let mut row = Vec::new();
    if support.is_empty() {
        return row;
    }
    for i in support.sites() {
        let mu = code.digit(i) - 1;
        let field = h.field(i);
        for alpha in 0..3 {
            for nu in 0..3 {
                let e = levi_civita(mu, alpha, nu);
                if e == 0 {
                    continue;
                }
                let e = f64::from(e);
                let swapped = code.with_digit(i, nu + 1);
                if field[alpha] != 0.0 {
                    row.push((swapped.0, e * field[alpha]));
                }
                for j in 0..n {
                    if j == i {
                        continue;
                    }
                    let v = h.coupling(i, j);
                    if support.contains(j) {
                        let mu_j = code.digit(j) - 1;
                        let x = v[alpha][mu_j];
                        if x != 0.0 {
                            row.push((swapped.with_digit(j, 0).0, e * x));
                        }
                    } else {
                        for lam in 0..3 {
                            let x = v[alpha][lam];
                            if x != 0.0 {
                                row.push((swapped.with_digit(j, lam + 1).0, e * x));
                            }
                        }
                    }
                }
            }
        }
    }
    row.sort_unstable_by_key(|e| e.0);
    let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
    for (c, v) in row {
        match merged.last_mut() {
            Some(last) if last.0 == c => last.1 += v,
            _ => merged.push((c, v)),
        }
    }
    merged.retain(|e| e.1 != 0.0);
    merged
}

/// Assembles 𝕄, rows built in parallel.
pub fn build_generator(h: &SpinHamiltonian) -> Generator {
    let dim = correlator_dim(h.n_sites());
    let rows: Vec<Vec<(usize, f64)>> = (0..dim)
        .into_par_iter()
        .map(|k| generator_row(h, CorrelatorIndex(k)))
        .collect();
    Generator {
        n_sites: h.n_sites(),
        matrix: CsrMatrix::from_rows(dim, rows),
    }
}

/// Upper bound on the nonzeros of a row with support size `a` on `n` sites.
pub fn row_nnz_bound(a: usize, n: usize) -> usize {
    2 * (3 * a + 9 * a * a + 9 * a * (n - a))
}

/// Equations of motion of the three single-site correlators ⟨σ_i^μ⟩:
/// precession in h_i plus growth into pair correlators through V_iℓ.
///
/// Written independently of [`generator_row`] as a cross-check.
pub fn single_site_row(h: &SpinHamiltonian, i: usize) -> Result<[Vec<(CorrelatorIndex, f64)>; 3]> {
    if i >= h.n_sites() {
        return Err(Error::SiteOutOfRange {
            site: i,
            n_sites: h.n_sites(),
        });
    }
    let hf = h.field(i);
    let site_code = |axis: usize| CorrelatorIndex((axis + 1) << (2 * i));
    Ok(std::array::from_fn(|mu| {
        let mut out = Vec::new();
        // (h × σ)^μ written out: dσ^μ/dt = Σ ε^{μαν} h^α σ^ν
        let (a, b) = ((mu + 1) % 3, (mu + 2) % 3);
        // ε^{μ a b} = +1, ε^{μ b a} = −1
        if hf[a] != 0.0 {
            out.push((site_code(b), hf[a]));
        }
        if hf[b] != 0.0 {
            out.push((site_code(a), -hf[b]));
        }
        for l in h.neighbours(i) {
            let v = h.coupling(i, l);
            for lam in 0..3 {
                let pair = |axis_i: usize| {
                    CorrelatorIndex(((axis_i + 1) << (2 * i)) | ((lam + 1) << (2 * l)))
                };
                if v[a][lam] != 0.0 {
                    out.push((pair(b), v[a][lam]));
                }
                if v[b][lam] != 0.0 {
                    out.push((pair(a), -v[b][lam]));
                }
            }
        }
        out.sort_by_key(|e| e.0);
        out
    }))
}

/// Max-abs residual of the reduced equation of motion for ρ̄_A,
///
/// ```text
/// i ∂_t ρ̄_A − [H̄_A, ρ̄_A] − Σ_{ℓ∉A} Σ_{j∈A} tr_ℓ [H_jℓ, ρ̄_{A∪ℓ}]
/// ```
///
/// with the time derivative taken by centered differences on a trajectory
/// sampled at uniform spacing `dt`. H_jℓ is the pair term of H.
pub fn reduced_eom_residual(
    h: &SpinHamiltonian,
    rho_t: &[DensityMatrix],
    dt: f64,
    a: CellSubset,
) -> Result<f64> {
    if rho_t.len() < 3 {
        return Err(Error::TooFewPoints(rho_t.len()));
    }
    let n = h.n_sites();
    let full = CellSubset::full(n);
    if a.is_empty() {
        return Err(Error::EmptySubset);
    }
    if let Some(site) = a.difference(full).first() {
        return Err(Error::SiteOutOfRange { site, n_sites: n });
    }
    if rho_t.iter().any(|r| r.n_sites() != n) {
        return Err(Error::Dimension("trajectory and Hamiltonian sizes differ".into()));
    }
    let h_a = subsystem_hamiltonian(h, a)?;
    let outside: Vec<usize> = full.difference(a).sites().collect();
    // per exterior site ℓ: Σ_{j∈A} H_jℓ on A∪{ℓ}, and the position of ℓ there
    let exterior: Vec<(CellSubset, CMatrix, usize)> = outside
        .iter()
        .map(|&l| {
            let ext = a.insert(l);
            let dim = 1usize << ext.len();
            let mut op = CMatrix::zeros(dim, dim);
            for j in a.sites() {
                op += pair_coupling_operator(h, j, l, ext);
            }
            (ext, op, ext.rank_of(l).expect("member"))
        })
        .collect();
    let i = num_complex::Complex64::new(0.0, 1.0);
    let comm = |x: &CMatrix, y: &CMatrix| x * y - y * x;

    let mut worst = 0.0f64;
    for k in 1..rho_t.len() - 1 {
        let reduce = |r: &DensityMatrix| partial_trace_operator(r.matrix(), n, a);
        let deriv = (reduce(&rho_t[k + 1]) - reduce(&rho_t[k - 1])) / num_complex::Complex64::new(2.0 * dt, 0.0);
        let rho_a = reduce(&rho_t[k]);
        let mut res = deriv * i - comm(&h_a, &rho_a);
        for (ext, op, pos) in &exterior {
            let rho_ext = partial_trace_operator(rho_t[k].matrix(), n, *ext);
            let c = comm(op, &rho_ext);
            let keep = CellSubset::full(ext.len()).remove(*pos);
            res -= partial_trace_operator(&c, ext.len(), keep);
        }
        worst = worst.max(res.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    Ok(worst)
}

/// Classification of correlators for two systems: supports inside system 1
/// (X₁), inside system 2 (X₂), or touching both (Y).
#[derive(Clone, Debug, PartialEq)]
pub struct CoupledSplit {
    pub n_sites: usize,
    pub system1: CellSubset,
    pub system2: CellSubset,
    pub x1: Vec<usize>,
    pub y: Vec<usize>,
    pub x2: Vec<usize>,
}

/// Splits the nonidentity correlators of `n_sites` sites by `system1`.
pub fn split_sectors(n_sites: usize, system1: CellSubset) -> Result<CoupledSplit> {
    let full = CellSubset::full(n_sites);
    if let Some(site) = system1.difference(full).first() {
        return Err(Error::SiteOutOfRange { site, n_sites });
    }
    if system1.is_empty() || system1 == full {
        return Err(Error::TrivialSplit);
    }
    let system2 = full.difference(system1);
    let (mut x1, mut y, mut x2) = (Vec::new(), Vec::new(), Vec::new());
    for code in 1..correlator_dim(n_sites) {
        let s = CorrelatorIndex(code).support();
        if s.is_subset_of(system1) {
            x1.push(code);
        } else if s.is_subset_of(system2) {
            x2.push(code);
        } else {
            y.push(code);
        }
    }
    Ok(CoupledSplit {
        n_sites,
        system1,
        system2,
        x1,
        y,
        x2,
    })
}

impl CoupledSplit {
    /// (d_X1, d_Y, d_X2).
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.x1.len(), self.y.len(), self.x2.len())
    }

    /// Closed-form sector sizes (4^{n₁}−1, (4^{n₁}−1)(4^{n₂}−1), 4^{n₂}−1).
    pub fn expected_dims(&self) -> (usize, usize, usize) {
        let d1 = correlator_dim(self.system1.len()) - 1;
        let d2 = correlator_dim(self.system2.len()) - 1;
        (d1, d1 * d2, d2)
    }

    fn digits_mask(set: CellSubset) -> usize {
        set.sites().map(|s| 3usize << (2 * s)).sum()
    }

    /// For every Y entry, its (position in X₁, position in X₂) factors.
    pub fn y_components(&self) -> Vec<(usize, usize)> {
        let m1 = Self::digits_mask(self.system1);
        let m2 = Self::digits_mask(self.system2);
        self.y
            .iter()
            .map(|&c| {
                let p1 = self.x1.binary_search(&(c & m1)).expect("X1 factor");
                let p2 = self.x2.binary_search(&(c & m2)).expect("X2 factor");
                (p1, p2)
            })
            .collect()
    }

    /// Sector ordering X₁, Y, X₂ of the nonidentity indices.
    pub fn ordering(&self) -> Vec<usize> {
        self.x1.iter().chain(&self.y).chain(&self.x2).copied().collect()
    }
}

/// 𝕄 cut into the 3×3 sector layout (X₁, Y, X₂). The X₁–X₂ corners vanish
/// for any pairwise Hamiltonian and are not stored.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockStructure {
    pub split: CoupledSplit,
    pub m11: CsrMatrix,
    pub m1y: CsrMatrix,
    pub my1: CsrMatrix,
    pub myy: CsrMatrix,
    pub my2: CsrMatrix,
    pub m2y: CsrMatrix,
    pub m22: CsrMatrix,
}

pub fn block_structure(g: &Generator, split: &CoupledSplit) -> Result<BlockStructure> {
    if split.n_sites != g.n_sites() {
        return Err(Error::Dimension("split and generator sizes differ".into()));
    }
    let m = g.matrix();
    if m.select(&split.x1, &split.x2).nnz() != 0 || m.select(&split.x2, &split.x1).nnz() != 0 {
        return Err(Error::SectorViolation);
    }
    Ok(BlockStructure {
        split: split.clone(),
        m11: m.select(&split.x1, &split.x1),
        m1y: m.select(&split.x1, &split.y),
        my1: m.select(&split.y, &split.x1),
        myy: m.select(&split.y, &split.y),
        my2: m.select(&split.y, &split.x2),
        m2y: m.select(&split.x2, &split.y),
        m22: m.select(&split.x2, &split.x2),
    })
}

impl BlockStructure {
    /// Puts the blocks back into a full 4^N generator.
    pub fn reassemble(&self) -> Generator {
        let s = &self.split;
        let dim = correlator_dim(s.n_sites);
        let mut trips = Vec::new();
        let mut put = |blk: &CsrMatrix, rows: &[usize], cols: &[usize]| {
            for (r, c, v) in blk.triplets() {
                trips.push((rows[r], cols[c], v));
            }
        };
        put(&self.m11, &s.x1, &s.x1);
        put(&self.m1y, &s.x1, &s.y);
        put(&self.my1, &s.y, &s.x1);
        put(&self.myy, &s.y, &s.y);
        put(&self.my2, &s.y, &s.x2);
        put(&self.m2y, &s.x2, &s.y);
        put(&self.m22, &s.x2, &s.x2);
        Generator {
            n_sites: s.n_sites,
            matrix: CsrMatrix::from_triplets(dim, dim, &trips),
        }
    }
}

/// Two coupled systems: 𝕄 = 𝕄₀ + 𝕍, with 𝕄₀ the generator without the
/// couplings that cross the split.
#[derive(Clone, Debug)]
pub struct CoupledSystem {
    pub split: CoupledSplit,
    pub full: Generator,
    pub uncoupled: Generator,
    pub interaction: CsrMatrix,
}

pub fn coupled_system(h: &SpinHamiltonian, system1: CellSubset) -> Result<CoupledSystem> {
    let split = split_sectors(h.n_sites(), system1)?;
    let full = build_generator(h);
    let uncoupled = build_generator(&h.scale_cross_couplings(system1, 0.0));
    let dim = full.dim();
    let mut trips: Vec<(usize, usize, f64)> = full.matrix().triplets().collect();
    trips.extend(uncoupled.matrix().triplets().map(|(r, c, v)| (r, c, -v)));
    let interaction = CsrMatrix::from_triplets(dim, dim, &trips);
    Ok(CoupledSystem {
        split,
        full,
        uncoupled,
        interaction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{build_hamiltonian_matrix, evolve_exact};
    use crate::density::pauli_matrix;
    use crate::pauli::string_of;
    use crate::states;
    use nalgebra::DMatrix;
    use num_complex::Complex64 as C64;
    use rand::SeedableRng;

    fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(seed)
    }

    /// M_kl = tr(P_l · i[H, P_k]) / 2^N from dense matrices.
    fn superoperator(h: &SpinHamiltonian) -> DMatrix<f64> {
        let n = h.n_sites();
        let dim = correlator_dim(n);
        let hm = build_hamiltonian_matrix(h).unwrap();
        let paulis: Vec<CMatrix> = (0..dim)
            .map(|k| pauli_matrix(&string_of(CorrelatorIndex(k)), n).unwrap())
            .collect();
        let scale = 1.0 / (1usize << n) as f64;
        DMatrix::from_fn(dim, dim, |k, l| {
            let c = (&hm * &paulis[k] - &paulis[k] * &hm) * C64::new(0.0, 1.0);
            (&paulis[l] * c).trace().re * scale
        })
    }

    #[test]
    fn larmor_row() {
        let mut h = SpinHamiltonian::new(1).unwrap();
        h.set_field(0, [0.0, 0.0, 2.0]).unwrap();
        let g = build_generator(&h);
        // dx/dt = −ω y, dy/dt = ω x
        assert_eq!(g.matrix().get(1, 2), -2.0);
        assert_eq!(g.matrix().get(2, 1), 2.0);
        assert_eq!(g.matrix().nnz(), 2);
    }

    #[test]
    fn zero_hamiltonian_gives_zero_generator() {
        let g = build_generator(&SpinHamiltonian::new(3).unwrap());
        assert_eq!(g.matrix().nnz(), 0);
    }

    #[test]
    fn zz_coupling_row_by_hand() {
        let mut h = SpinHamiltonian::new(2).unwrap();
        h.set_coupling(0, 1, [[0.0; 3], [0.0; 3], [0.0, 0.0, 1.3]]).unwrap();
        let row = generator_row(&h, CorrelatorIndex(1));
        // d⟨x0⟩/dt = −V^{zz}⟨y0 z1⟩
        assert_eq!(row, vec![(2 + 4 * 3, -1.3)]);
    }

    #[test]
    fn matches_superoperator_route() {
        for n in 1..=3 {
            let h = SpinHamiltonian::random(n, &mut rng(n as u64), 1.0, 0.8).unwrap();
            let g = build_generator(&h).to_dense();
            let s = superoperator(&h);
            assert!((g - s).abs().max() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn antisymmetric_and_sparse() {
        let h = SpinHamiltonian::random(5, &mut rng(4), 1.0, 1.0).unwrap();
        let g = build_generator(&h);
        assert!(g.antisymmetry_error() < 1e-12);
        for k in 0..g.dim() {
            let a = CorrelatorIndex(k).support().len();
            assert!(g.matrix().row(k).0.len() <= row_nnz_bound(a, 5));
        }
        assert_eq!(g.matrix().row(0).0.len(), 0);
        assert!(g.matrix().nnz() < g.dim() * g.dim() / 10);
    }

    #[test]
    fn single_site_rows_agree() {
        let h = SpinHamiltonian::random(4, &mut rng(5), 1.0, 1.0).unwrap();
        for i in 0..4 {
            let rows = single_site_row(&h, i).unwrap();
            for (mu, row) in rows.iter().enumerate() {
                let code = CorrelatorIndex((mu + 1) << (2 * i));
                let full: Vec<(CorrelatorIndex, f64)> = generator_row(&h, code)
                    .into_iter()
                    .map(|(c, v)| (CorrelatorIndex(c), v))
                    .collect();
                assert_eq!(row.len(), full.len());
                for (a, b) in row.iter().zip(&full) {
                    assert_eq!(a.0, b.0);
                    assert!((a.1 - b.1).abs() < 1e-15);
                }
            }
        }
        assert!(single_site_row(&h, 4).is_err());
    }

    #[test]
    fn generator_matches_oracle_derivative() {
        let h = SpinHamiltonian::random(3, &mut rng(6), 1.0, 1.0).unwrap();
        let rho0 = states::random_pure(3, &mut rng(7)).unwrap();
        let step = 1e-5;
        let traj = crate::oracle::correlator_trajectory(&h, &rho0, &[-step, 0.0, step]).unwrap();
        let g = build_generator(&h);
        let x0 = traj.states[1].values();
        let mut dx = vec![0.0; x0.len()];
        g.apply(x0, &mut dx);
        for k in 0..x0.len() {
            let fd = (traj.states[2].values()[k] - traj.states[0].values()[k]) / (2.0 * step);
            assert!((fd - dx[k]).abs() < 1e-6, "component {k}");
        }
    }

    #[test]
    fn reduced_eom_residual_is_second_order() {
        let h = SpinHamiltonian::random(3, &mut rng(8), 1.0, 1.0).unwrap();
        let rho0 = states::random_mixed(3, &mut rng(9)).unwrap();
        let res = |dt: f64, a: CellSubset| {
            let times = [0.3 - dt, 0.3, 0.3 + dt];
            let traj = evolve_exact(&h, &rho0, &times).unwrap();
            reduced_eom_residual(&h, &traj, dt, a).unwrap()
        };
        for a in [CellSubset::singleton(1), CellSubset::from_sites([0, 2]), CellSubset::full(3)] {
            let r1 = res(1e-2, a);
            let r2 = res(5e-3, a);
            let order = (r1 / r2).log2();
            assert!(order > 1.9, "{a}: order {order}");
        }
        let traj = evolve_exact(&h, &rho0, &[0.0, 0.1]).unwrap();
        assert_eq!(
            reduced_eom_residual(&h, &traj, 0.1, CellSubset::singleton(0)).unwrap_err(),
            Error::TooFewPoints(2)
        );
    }

    #[test]
    fn sector_dimensions() {
        let s = split_sectors(2, CellSubset::singleton(0)).unwrap();
        assert_eq!(s.dims(), (3, 9, 3));
        let s = split_sectors(3, CellSubset::from_sites([0, 1])).unwrap();
        assert_eq!(s.dims(), (15, 45, 3));
        assert_eq!(s.dims(), s.expected_dims());
        assert_eq!(split_sectors(3, CellSubset::full(3)).unwrap_err(), Error::TrivialSplit);
        assert_eq!(split_sectors(3, CellSubset::EMPTY).unwrap_err(), Error::TrivialSplit);
    }

    #[test]
    fn y_components_recombine() {
        let s = split_sectors(3, CellSubset::singleton(1)).unwrap();
        for (&c, (p1, p2)) in s.y.iter().zip(s.y_components()) {
            assert_eq!(s.x1[p1] | s.x2[p2], c);
        }
    }

    #[test]
    fn blocks_round_trip() {
        let h = SpinHamiltonian::random(3, &mut rng(10), 1.0, 1.0).unwrap();
        let g = build_generator(&h);
        let split = split_sectors(3, CellSubset::singleton(0)).unwrap();
        let blocks = block_structure(&g, &split).unwrap();
        assert_eq!(blocks.reassemble(), g);
    }

    #[test]
    fn intra_couplings_leave_no_cross_blocks() {
        let mut h = SpinHamiltonian::random(3, &mut rng(11), 1.0, 1.0).unwrap();
        h = h.scale_cross_couplings(CellSubset::from_sites([0, 1]), 0.0);
        let cs = coupled_system(&h, CellSubset::from_sites([0, 1])).unwrap();
        assert_eq!(cs.interaction.nnz(), 0);
        let blocks = block_structure(&cs.full, &cs.split).unwrap();
        // only the mixed block's own precession survives
        assert_eq!(blocks.m1y.nnz() + blocks.my1.nnz() + blocks.my2.nnz() + blocks.m2y.nnz(), 0);
    }

    #[test]
    fn corner_violation_detected() {
        let split = split_sectors(2, CellSubset::singleton(0)).unwrap();
        let mut trips = vec![(1usize, 4usize, 1.0)];
        trips.push((4, 1, -1.0));
        let g = Generator::from_matrix(2, CsrMatrix::from_triplets(16, 16, &trips)).unwrap();
        assert_eq!(block_structure(&g, &split).unwrap_err(), Error::SectorViolation);
    }
}
