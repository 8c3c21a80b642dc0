//! Closed-form resolvent blocks for two coupled spins,
//!
//! ```text
//! H = ½[Δ₁τˣ + Δ₂σˣ + ωτᶻσᶻ]      (τ on site 0, σ on site 1)
//! ```
//!
//! Blocks are indexed by Cartesian axis (x, y, z) for single-spin rows and
//! columns, and by 3μ + α for the pair τ^μσ^α. With
//!
//! ```text
//! D_a = z²ω² + (z²+Δ₁²)(z²+Δ₂²)
//! D_b = (z²+ω₃₀²)(z²+ω₂₁²),  ω₃₀² = ω²+(Δ₁+Δ₂)²,  ω₂₁² = ω²+(Δ₁−Δ₂)²
//! ```
//!
//! every entry is a rational function with poles among 0, ±iω₁₀, ±iω₂₀,
//! ±iω₃₀, ±iω₂₁ (the zeros of z·D_a·D_b).

use nalgebra::{DMatrix, SMatrix};
use num_complex::Complex64 as C64;

use crate::dynamics::POLE_TOLERANCE;
use crate::error::{Error, Result};
use crate::hamiltonian::SpinHamiltonian;

pub type Block3 = SMatrix<C64, 3, 3>;
pub type Block3x9 = SMatrix<C64, 3, 9>;
pub type Block9x3 = SMatrix<C64, 9, 3>;
pub type Block9 = SMatrix<C64, 9, 9>;

const X: usize = 0;
const Y: usize = 1;
const Z: usize = 2;

/// Pair index of τ^μ σ^α.
#[inline]
pub const fn pair(mu: usize, alpha: usize) -> usize {
    3 * mu + alpha
}

/// Correlator code of τ^μ (site 0).
#[inline]
pub const fn code_tau(mu: usize) -> usize {
    mu + 1
}

/// Correlator code of σ^α (site 1).
#[inline]
pub const fn code_sigma(alpha: usize) -> usize {
    4 * (alpha + 1)
}

/// Correlator code of τ^μ σ^α.
#[inline]
pub const fn code_pair(mu: usize, alpha: usize) -> usize {
    (mu + 1) + 4 * (alpha + 1)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoSpinParams {
    pub delta1: f64,
    pub delta2: f64,
    pub omega: f64,
}

/// Transition frequencies ω₁₀ = ε₁−ε₂, ω₂₀ = ε₁+ε₂, ω₃₀ = 2ε₁, ω₂₁ = 2ε₂.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frequencies {
    pub w10: f64,
    pub w20: f64,
    pub w30: f64,
    pub w21: f64,
}

impl Frequencies {
    pub fn as_array(&self) -> [f64; 4] {
        [self.w10, self.w20, self.w30, self.w21]
    }
}

impl TwoSpinParams {
    pub fn new(delta1: f64, delta2: f64, omega: f64) -> Result<Self> {
        if !(delta1.is_finite() && delta2.is_finite() && omega.is_finite()) {
            return Err(Error::InvalidArgument("parameters must be finite".into()));
        }
        Ok(TwoSpinParams { delta1, delta2, omega })
    }

    /// ε₁ = ½√(ω²+(Δ₁+Δ₂)²), ε₂ = ½√(ω²+(Δ₁−Δ₂)²).
    pub fn level_energies(&self) -> (f64, f64) {
        let w2 = self.omega * self.omega;
        let s = self.delta1 + self.delta2;
        let d = self.delta1 - self.delta2;
        (0.5 * (w2 + s * s).sqrt(), 0.5 * (w2 + d * d).sqrt())
    }

    pub fn frequencies(&self) -> Frequencies {
        let (e1, e2) = self.level_energies();
        Frequencies {
            w10: e1 - e2,
            w20: e1 + e2,
            w30: 2.0 * e1,
            w21: 2.0 * e2,
        }
    }

    /// Parameters with the two spins exchanged.
    pub fn swapped(&self) -> Self {
        TwoSpinParams {
            delta1: self.delta2,
            delta2: self.delta1,
            omega: self.omega,
        }
    }

    pub fn hamiltonian(&self) -> SpinHamiltonian {
        SpinHamiltonian::two_spin(self.delta1, self.delta2, self.omega)
    }

    /// All poles of the two-spin resolvent.
    pub fn poles(&self) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0)];
        for w in self.frequencies().as_array() {
            out.push(C64::new(0.0, w));
            out.push(C64::new(0.0, -w));
        }
        out
    }

    fn check_pole(&self, z: C64) -> Result<()> {
        let (p, d) = self
            .poles()
            .into_iter()
            .map(|p| (p, (z - p).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty pole list");
        if d < POLE_TOLERANCE {
            return Err(Error::NearPole {
                z_re: z.re,
                z_im: z.im,
                pole_re: p.re,
                pole_im: p.im,
                distance: d,
            });
        }
        Ok(())
    }
}

/// Shared rational building blocks at one z.
struct Terms {
    z: C64,
    z2: C64,
    d1: f64,
    d2: f64,
    w: f64,
    inv_da: C64,
    inv_db: C64,
    /// z² + ω² + Δ₁² + Δ₂²
    s: C64,
}

impl Terms {
    fn new(p: &TwoSpinParams, z: C64) -> Result<Self> {
        p.check_pole(z)?;
        let (d1, d2, w) = (p.delta1, p.delta2, p.omega);
        let z2 = z * z;
        let da = z2 * (w * w) + (z2 + d1 * d1) * (z2 + d2 * d2);
        let f = p.frequencies();
        let db = (z2 + f.w30 * f.w30) * (z2 + f.w21 * f.w21);
        Ok(Terms {
            z,
            z2,
            d1,
            d2,
            w,
            inv_da: da.inv(),
            inv_db: db.inv(),
            s: z2 + w * w + d1 * d1 + d2 * d2,
        })
    }
}

/// ⟨τ⟩ → ⟨τ⟩ block.
pub fn analytic_g11(p: &TwoSpinParams, z: C64) -> Result<Block3> {
    let t = Terms::new(p, z)?;
    let (d1, d2, w) = (t.d1, t.d2, t.w);
    let mut g = Block3::zeros();
    g[(X, X)] = t.z.inv() - w * w * t.s * t.inv_db / t.z;
    g[(Y, Y)] = t.z * (t.z2 + d2 * d2) * t.inv_da;
    g[(Z, Z)] = t.z * (t.z2 + d2 * d2 + w * w) * t.inv_da;
    let a = d1 * (t.z2 + d2 * d2) * t.inv_da;
    g[(Y, Z)] = -a;
    g[(Z, Y)] = a;
    Ok(g)
}

/// ⟨σ⟩ → ⟨τ⟩ block.
pub fn analytic_g12(p: &TwoSpinParams, z: C64) -> Result<Block3> {
    let t = Terms::new(p, z)?;
    let mut g = Block3::zeros();
    g[(X, X)] = 2.0 * t.d1 * t.d2 * t.w * t.w * t.inv_db / t.z;
    Ok(g)
}

/// ⟨τσ⟩ → ⟨τ⟩ block.
pub fn analytic_g1p(p: &TwoSpinParams, z: C64) -> Result<Block3x9> {
    let t = Terms::new(p, z)?;
    let (d1, d2, w) = (t.d1, t.d2, t.w);
    let (z1, z2) = (t.z, t.z2);
    let mut g = Block3x9::zeros();
    g[(X, pair(Y, Y))] = -d2 * w * (z2 - d1 * d1 + d2 * d2 + w * w) * t.inv_db / z1;
    g[(X, pair(Y, Z))] = -w * t.s * t.inv_db;
    g[(X, pair(Z, Y))] = C64::from(2.0 * d1 * d2 * w) * t.inv_db;
    g[(X, pair(Z, Z))] = d1 * w * (z2 + d1 * d1 - d2 * d2 + w * w) * t.inv_db / z1;
    g[(Y, pair(X, Y))] = w * d2 * z1 * t.inv_da;
    g[(Y, pair(X, Z))] = w * z2 * t.inv_da;
    g[(Z, pair(X, Y))] = C64::from(w * d1 * d2) * t.inv_da;
    g[(Z, pair(X, Z))] = w * d1 * z1 * t.inv_da;
    Ok(g)
}

/// ⟨τσ⟩ → ⟨τσ⟩ block.
pub fn analytic_gpp(p: &TwoSpinParams, z: C64) -> Result<Block9> {
    let t = Terms::new(p, z)?;
    let (d1, d2, w) = (t.d1, t.d2, t.w);
    let (z1, z2) = (t.z, t.z2);
    let (ia, ib) = (t.inv_da, t.inv_db);
    let mut g = Block9::zeros();
    let (xx, xy, xz) = (pair(X, X), pair(X, Y), pair(X, Z));
    let (yx, yy, yz) = (pair(Y, X), pair(Y, Y), pair(Y, Z));
    let (zx, zy, zz) = (pair(Z, X), pair(Z, Y), pair(Z, Z));

    g[(xx, xx)] = z1.inv();

    // τˣ-paired sector: σ precesses about x, dressed by the coupling
    g[(xy, xy)] = z1 * (z2 + d1 * d1 + w * w) * ia;
    g[(xz, xz)] = z1 * (z2 + d1 * d1) * ia;
    let a2 = d2 * (z2 + d1 * d1) * ia;
    g[(xz, xy)] = a2;
    g[(xy, xz)] = -a2;

    // σˣ-paired sector, mirror image
    g[(yx, yx)] = z1 * (z2 + d2 * d2 + w * w) * ia;
    g[(zx, zx)] = z1 * (z2 + d2 * d2) * ia;
    let a1 = d1 * (z2 + d2 * d2) * ia;
    g[(zx, yx)] = a1;
    g[(yx, zx)] = -a1;

    // {yy, yz, zy, zz} sector
    let diag_outer = t.s * (z1 + w * w / z1) * ib;
    let diag_inner = t.s * z1 * ib;
    g[(yy, yy)] = diag_outer;
    g[(zz, zz)] = diag_outer;
    g[(yz, yz)] = diag_inner;
    g[(zy, zy)] = diag_inner;
    let c2 = d2 * (z2 - d1 * d1 + d2 * d2 + w * w) * ib;
    g[(yz, yy)] = c2;
    g[(yy, yz)] = -c2;
    g[(zz, zy)] = c2;
    g[(zy, zz)] = -c2;
    let c1 = d1 * (z2 + d1 * d1 - d2 * d2 + w * w) * ib;
    g[(zy, yy)] = c1;
    g[(zz, yz)] = c1;
    g[(yy, zy)] = -c1;
    g[(yz, zz)] = -c1;
    let c3 = 2.0 * d1 * d2 * (z2 + w * w) * ib / z1;
    g[(yy, zz)] = c3;
    g[(zz, yy)] = c3;
    let c4 = 2.0 * d1 * d2 * z1 * ib;
    g[(zy, yz)] = -c4;
    g[(yz, zy)] = -c4;
    Ok(g)
}

/// Pair-index transposition (μ, α) → (α, μ).
#[inline]
fn swap_pair(k: usize) -> usize {
    pair(k % 3, k / 3)
}

/// ⟨σ⟩ → ⟨σ⟩ block, by exchanging the spins in g₁₁.
pub fn analytic_g22(p: &TwoSpinParams, z: C64) -> Result<Block3> {
    analytic_g11(&p.swapped(), z)
}

/// ⟨τ⟩ → ⟨σ⟩ block.
pub fn analytic_g21(p: &TwoSpinParams, z: C64) -> Result<Block3> {
    analytic_g12(&p.swapped(), z)
}

/// ⟨τσ⟩ → ⟨σ⟩ block.
pub fn analytic_g2p(p: &TwoSpinParams, z: C64) -> Result<Block3x9> {
    let g = analytic_g1p(&p.swapped(), z)?;
    Ok(Block3x9::from_fn(|r, c| g[(r, swap_pair(c))]))
}

/// ⟨τ⟩ → ⟨τσ⟩ block: g_p1(z) = −g_1pᵀ(−z), since 𝔾ᵀ(z) = −𝔾(−z) for an
/// antisymmetric generator.
pub fn analytic_gp1(p: &TwoSpinParams, z: C64) -> Result<Block9x3> {
    Ok(-analytic_g1p(p, -z)?.transpose())
}

/// ⟨σ⟩ → ⟨τσ⟩ block.
pub fn analytic_gp2(p: &TwoSpinParams, z: C64) -> Result<Block9x3> {
    Ok(-analytic_g2p(p, -z)?.transpose())
}

/// g_pp with the spins exchanged: g_pp(Δ₂, Δ₁) re-indexed by pair transposition.
pub fn analytic_gpp_swapped(p: &TwoSpinParams, z: C64) -> Result<Block9> {
    let g = analytic_gpp(&p.swapped(), z)?;
    Ok(Block9::from_fn(|r, c| g[(swap_pair(r), swap_pair(c))]))
}

/// Full 16×16 resolvent in correlator-code order assembled from the blocks
/// (slot 0 carries 1/z).
pub fn analytic_resolvent(p: &TwoSpinParams, z: C64) -> Result<DMatrix<C64>> {
    let g11 = analytic_g11(p, z)?;
    let g12 = analytic_g12(p, z)?;
    let g21 = analytic_g21(p, z)?;
    let g22 = analytic_g22(p, z)?;
    let g1p = analytic_g1p(p, z)?;
    let g2p = analytic_g2p(p, z)?;
    let gp1 = analytic_gp1(p, z)?;
    let gp2 = analytic_gp2(p, z)?;
    let gpp = analytic_gpp(p, z)?;
    let mut out = DMatrix::zeros(16, 16);
    out[(0, 0)] = z.inv();
    for m in 0..3 {
        for n in 0..3 {
            out[(code_tau(m), code_tau(n))] = g11[(m, n)];
            out[(code_tau(m), code_sigma(n))] = g12[(m, n)];
            out[(code_sigma(m), code_tau(n))] = g21[(m, n)];
            out[(code_sigma(m), code_sigma(n))] = g22[(m, n)];
        }
        for k in 0..9 {
            let c = code_pair(k / 3, k % 3);
            out[(code_tau(m), c)] = g1p[(m, k)];
            out[(code_sigma(m), c)] = g2p[(m, k)];
            out[(c, code_tau(m))] = gp1[(k, m)];
            out[(c, code_sigma(m))] = gp2[(k, m)];
        }
    }
    for r in 0..9 {
        for c in 0..9 {
            out[(code_pair(r / 3, r % 3), code_pair(c / 3, c % 3))] = gpp[(r, c)];
        }
    }
    Ok(out)
}

/// Blocks read off a numerical 16×16 resolvent in correlator-code order.
#[derive(Clone, Debug)]
pub struct NumericalBlocks {
    pub g11: Block3,
    pub g12: Block3,
    pub g21: Block3,
    pub g22: Block3,
    pub g1p: Block3x9,
    pub g2p: Block3x9,
    pub gp1: Block9x3,
    pub gp2: Block9x3,
    pub gpp: Block9,
}

impl NumericalBlocks {
    pub fn from_resolvent(g: &DMatrix<C64>) -> Result<Self> {
        if g.nrows() != 16 || g.ncols() != 16 {
            return Err(Error::Dimension(format!(
                "expected a 16×16 resolvent, got {}×{}",
                g.nrows(),
                g.ncols()
            )));
        }
        let pc = |k: usize| code_pair(k / 3, k % 3);
        Ok(NumericalBlocks {
            g11: Block3::from_fn(|r, c| g[(code_tau(r), code_tau(c))]),
            g12: Block3::from_fn(|r, c| g[(code_tau(r), code_sigma(c))]),
            g21: Block3::from_fn(|r, c| g[(code_sigma(r), code_tau(c))]),
            g22: Block3::from_fn(|r, c| g[(code_sigma(r), code_sigma(c))]),
            g1p: Block3x9::from_fn(|r, c| g[(code_tau(r), pc(c))]),
            g2p: Block3x9::from_fn(|r, c| g[(code_sigma(r), pc(c))]),
            gp1: Block9x3::from_fn(|r, c| g[(pc(r), code_tau(c))]),
            gp2: Block9x3::from_fn(|r, c| g[(pc(r), code_sigma(c))]),
            gpp: Block9::from_fn(|r, c| g[(pc(r), pc(c))]),
        })
    }
}

/// max |a − b| / max(max |b|, 1e−300).
pub fn relative_error<R: nalgebra::Dim, C: nalgebra::Dim, S1, S2>(
    a: &nalgebra::Matrix<C64, R, C, S1>,
    b: &nalgebra::Matrix<C64, R, C, S2>,
) -> f64
where
    S1: nalgebra::RawStorage<C64, R, C>,
    S2: nalgebra::RawStorage<C64, R, C>,
{
    let scale = b.iter().map(|x| x.norm()).fold(0.0, f64::max).max(1e-300);
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
        / scale
}
