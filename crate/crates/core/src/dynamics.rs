//! Time evolution of the correlator vector, resolvents 𝔾(z) = (z𝕀 − 𝕄)⁻¹,
//! pole spectra and the Dyson series for two coupled systems.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::density::CorrelatorVector;
use crate::error::{Error, Result};
use crate::hierarchy::{CoupledSplit, CoupledSystem, Generator};
use crate::sparse::CsrMatrix;

/// Default RK4 step as a fraction of 1/‖𝕄‖∞.
pub const DEFAULT_STEP_FRACTION: f64 = 0.01;
/// RK4 refuses steps with dt·‖𝕄‖∞ above this.
pub const MAX_STEP_FRACTION: f64 = 1.0;
/// Minimum distance of z from a pole of the resolvent.
pub const POLE_TOLERANCE: f64 = 1e-10;
/// Largest system for dense spectral work.
pub const MAX_SPECTRAL_SITES: usize = 6;

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<CorrelatorVector>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest |x_a(t) − x_b(t)| over all samples and components.
    pub fn max_deviation(&self, other: &Trajectory) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::Dimension(format!(
                "trajectories of length {} and {}",
                self.len(),
                other.len()
            )));
        }
        let mut worst = 0.0f64;
        for (a, b) in self.states.iter().zip(&other.states) {
            if a.values().len() != b.values().len() {
                return Err(Error::Dimension("state sizes differ".into()));
            }
            for (x, y) in a.values().iter().zip(b.values()) {
                worst = worst.max((x - y).abs());
            }
        }
        Ok(worst)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Method {
    /// Classical fixed-step fourth-order Runge–Kutta.
    #[default]
    Rk4,
    /// exp(𝕄t)x by scaled truncated Taylor series.
    ExpAction,
}

/// dt with dt·‖𝕄‖∞ = [`DEFAULT_STEP_FRACTION`]; 1 for a zero generator.
pub fn default_dt(g: &Generator) -> f64 {
    let norm = g.norm_inf();
    if norm == 0.0 {
        1.0
    } else {
        DEFAULT_STEP_FRACTION / norm
    }
}

/// RK4 evolution, see [`evolve_with`].
pub fn evolve(
    g: &Generator,
    x0: &CorrelatorVector,
    t_max: f64,
    dt: f64,
    stride: usize,
) -> Result<Trajectory> {
    evolve_with(g, x0, t_max, dt, stride, Method::Rk4)
}

/// Integrates dX/dt = 𝕄X on [0, t_max].
///
/// The step is shrunk to h = t_max/⌈t_max/dt⌉ so the grid ends on t_max;
/// every `stride`-th step is recorded, together with t = 0 and t = t_max.
pub fn evolve_with(
    g: &Generator,
    x0: &CorrelatorVector,
    t_max: f64,
    dt: f64,
    stride: usize,
    method: Method,
) -> Result<Trajectory> {
    if x0.n_sites() != g.n_sites() {
        return Err(Error::Dimension(format!(
            "state has {} sites, generator {}",
            x0.n_sites(),
            g.n_sites()
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    if !(t_max >= 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("t_max must be nonnegative, got {t_max}")));
    }
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be at least 1".into()));
    }
    let norm = g.norm_inf();
    if method == Method::Rk4 && dt * norm > MAX_STEP_FRACTION {
        return Err(Error::StepTooLarge(dt * norm));
    }
    let n_steps = ((t_max / dt) * (1.0 - 1e-12)).ceil().max(if t_max > 0.0 { 1.0 } else { 0.0 }) as usize;
    let h = if n_steps == 0 { 0.0 } else { t_max / n_steps as f64 };

    let n = g.n_sites();
    let mut x = x0.values().to_vec();
    let mut times = vec![0.0];
    let mut states = vec![x0.clone()];
    let mut stepper = Stepper::new(g, method, h);
    for k in 1..=n_steps {
        stepper.step(&mut x);
        if k % stride == 0 || k == n_steps {
            times.push(k as f64 * h);
            states.push(CorrelatorVector::from_raw(n, x.clone())?);
        }
    }
    Ok(Trajectory { times, states })
}

struct Stepper<'a> {
    g: &'a Generator,
    method: Method,
    h: f64,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(g: &'a Generator, method: Method, h: f64) -> Self {
        let d = g.dim();
        Stepper {
            g,
            method,
            h,
            k: std::array::from_fn(|_| vec![0.0; d]),
            tmp: vec![0.0; d],
        }
    }

    fn step(&mut self, x: &mut [f64]) {
        match self.method {
            Method::Rk4 => self.rk4(x),
            Method::ExpAction => expm_action_in_place(self.g.matrix(), x, self.h, &mut self.k, &mut self.tmp),
        }
    }

    fn rk4(&mut self, x: &mut [f64]) {
        let h = self.h;
        let [k1, k2, k3, k4] = &mut self.k;
        let tmp = &mut self.tmp;
        self.g.apply(x, k1);
        axpy_into(tmp, x, 0.5 * h, k1);
        self.g.apply(tmp, k2);
        axpy_into(tmp, x, 0.5 * h, k2);
        self.g.apply(tmp, k3);
        axpy_into(tmp, x, h, k3);
        self.g.apply(tmp, k4);
        for i in 0..x.len() {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
}

#[inline]
fn axpy_into(out: &mut [f64], x: &[f64], a: f64, y: &[f64]) {
    for ((o, xi), yi) in out.iter_mut().zip(x).zip(y) {
        *o = xi + a * yi;
    }
}

/// x ← exp(tA)x using s substeps of a Taylor series truncated at machine
/// precision, s chosen so that |t|·‖A‖∞/s ≤ ½.
fn expm_action_in_place(a: &CsrMatrix, x: &mut [f64], t: f64, work: &mut [Vec<f64>; 4], tmp: &mut [f64]) {
    let norm = a.norm_inf() * t.abs();
    if norm == 0.0 {
        return;
    }
    let s = (2.0 * norm).ceil().max(1.0) as usize;
    let tau = t / s as f64;
    let [term, next, _, _] = work;
    for _ in 0..s {
        term.copy_from_slice(x);
        let x_norm = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        for j in 1..=60 {
            a.matvec(term, next);
            let scale = tau / j as f64;
            let mut term_norm = 0.0f64;
            for i in 0..x.len() {
                let v = next[i] * scale;
                term[i] = v;
                x[i] += v;
                term_norm = term_norm.max(v.abs());
            }
            if term_norm <= 1e-17 * x_norm {
                break;
            }
        }
    }
    let _ = tmp;
}

/// exp(t𝕄)x as a fresh vector.
pub fn expm_action(g: &Generator, x: &[f64], t: f64) -> Vec<f64> {
    let mut out = x.to_vec();
    let mut work: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; x.len()]);
    let mut tmp = vec![0.0; x.len()];
    expm_action_in_place(g.matrix(), &mut out, t, &mut work, &mut tmp);
    out
}

/// Eigenvalues λ of the Hermitian matrix i·A for real antisymmetric A,
/// ascending. The eigenvalues of A are −iλ.
pub fn hermitian_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let ia = a.map(|x| C64::new(0.0, x));
    let mut ev: Vec<f64> = ia.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Dense resolvent with a precomputed pole list.
#[derive(Clone, Debug)]
pub struct ResolventSolver {
    matrix: DMatrix<f64>,
    /// Poles of (z − A)⁻¹ lie at z = −iλ for each λ here.
    lambdas: Vec<f64>,
}

impl ResolventSolver {
    /// `a` must be real antisymmetric (the pole search relies on it).
    pub fn new(a: DMatrix<f64>) -> Self {
        let lambdas = hermitian_eigenvalues(&a);
        ResolventSolver { matrix: a, lambdas }
    }

    pub fn from_generator(g: &Generator) -> Self {
        Self::new(g.to_dense())
    }

    /// Nearest pole to `z` and its distance.
    pub fn nearest_pole(&self, z: C64) -> Option<(C64, f64)> {
        self.lambdas
            .iter()
            .map(|&l| {
                let p = C64::new(0.0, -l);
                (p, (z - p).norm())
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// (z𝕀 − A)⁻¹.
    pub fn solve(&self, z: C64) -> Result<DMatrix<C64>> {
        if let Some((p, d)) = self.nearest_pole(z) {
            if d < POLE_TOLERANCE {
                return Err(Error::NearPole {
                    z_re: z.re,
                    z_im: z.im,
                    pole_re: p.re,
                    pole_im: p.im,
                    distance: d,
                });
            }
        }
        let n = self.matrix.nrows();
        let shifted = DMatrix::from_fn(n, n, |r, c| {
            let d = if r == c { z } else { C64::new(0.0, 0.0) };
            d - self.matrix[(r, c)]
        });
        shifted.lu().try_inverse().ok_or(Error::Singular)
    }
}

/// 𝔾(z) = (z𝕀 − 𝕄)⁻¹ on the full 4^N space (slot 0 contributes 1/z).
pub fn resolvent(g: &Generator, z: C64) -> Result<DMatrix<C64>> {
    ResolventSolver::from_generator(g).solve(z)
}

/// Max entry of |(z𝕀 − A)G − 𝕀|.
pub fn resolvent_residual(a: &DMatrix<f64>, z: C64, g: &DMatrix<C64>) -> f64 {
    let n = a.nrows();
    let ac = a.map(|x| C64::new(x, 0.0));
    let prod = g * z - ac * g;
    let mut worst = 0.0f64;
    for r in 0..n {
        for c in 0..n {
            let id = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((prod[(r, c)] - C64::new(id, 0.0)).norm());
        }
    }
    worst
}

/// Pole frequencies and broadened pole density of a generator.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralReport {
    /// Distinct positive frequencies ω (poles at z = ±iω), ascending.
    pub frequencies: Vec<f64>,
    /// Number of ±iω eigenvalue pairs merged into each frequency.
    pub multiplicities: Vec<usize>,
    /// Zero eigenvalues on the nonidentity block (dimension 4^N − 1).
    pub kernel_dim: usize,
    /// Lorentzian half-width used for the density.
    pub epsilon: f64,
    pub omega: Vec<f64>,
    /// 𝔸(ω) = (1/π) Σ_k ε / ((ω − ω_k)² + ε²), summed over all modes ω_k;
    /// equal to tr[𝔾(iω+ε) − 𝔾(iω−ε)]/(2π) on the nonidentity block.
    pub density: Vec<f64>,
    /// All eigenvalues λ of i𝕄 on the nonidentity block, ascending.
    pub eigenvalues: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SpectrumOptions {
    pub epsilon: Option<f64>,
    pub grid: Option<Vec<f64>>,
    pub n_points: Option<usize>,
}

const DEFAULT_GRID_POINTS: usize = 401;

/// Spectral report of 𝕄 via eigenvalues of i𝕄 on the nonidentity block.
pub fn spectrum(g: &Generator, opts: &SpectrumOptions) -> Result<SpectralReport> {
    if g.n_sites() > MAX_SPECTRAL_SITES {
        return Err(Error::TooLarge {
            n_sites: g.n_sites(),
            max: MAX_SPECTRAL_SITES,
        });
    }
    let dense = g.to_dense();
    let d = dense.nrows();
    let block = dense.view((1, 1), (d - 1, d - 1)).into_owned();
    let eigenvalues = hermitian_eigenvalues(&block);
    let scale = g.norm_inf();
    let tol = 1e-9 * scale.max(f64::MIN_POSITIVE);

    let kernel_dim = eigenvalues.iter().filter(|l| l.abs() <= tol).count();
    let (frequencies, multiplicities) = merge_frequencies(
        eigenvalues.iter().copied().filter(|&l| l > tol),
        tol,
    );

    let epsilon = match opts.epsilon {
        Some(e) if e > 0.0 && e.is_finite() => e,
        Some(e) => return Err(Error::InvalidArgument(format!("epsilon must be positive, got {e}"))),
        None => default_epsilon(&frequencies, kernel_dim > 0, scale),
    };
    let omega = match &opts.grid {
        Some(grid) => grid.clone(),
        None => {
            let n = opts.n_points.unwrap_or(DEFAULT_GRID_POINTS).max(2);
            let top = frequencies.last().copied().unwrap_or(0.0) + 5.0 * epsilon;
            (0..n)
                .map(|k| -top + 2.0 * top * k as f64 / (n - 1) as f64)
                .collect()
        }
    };
    let density = omega
        .par_iter()
        .map(|&w| lorentzian_density(&eigenvalues, w, epsilon))
        .collect();
    Ok(SpectralReport {
        frequencies,
        multiplicities,
        kernel_dim,
        epsilon,
        omega,
        density,
        eigenvalues,
    })
}

/// (1/π) Σ_k ε/((ω + λ_k)² + ε²); the poles of 𝔾 sit at iω_k with ω_k = −λ_k.
pub fn lorentzian_density(eigenvalues: &[f64], omega: f64, epsilon: f64) -> f64 {
    eigenvalues
        .iter()
        .map(|&l| {
            let d = omega + l;
            epsilon / (d * d + epsilon * epsilon)
        })
        .sum::<f64>()
        / std::f64::consts::PI
}

fn merge_frequencies(sorted: impl Iterator<Item = f64>, tol: f64) -> (Vec<f64>, Vec<usize>) {
    let mut clusters: Vec<(f64, usize, f64)> = Vec::new(); // (sum, count, last)
    for w in sorted {
        match clusters.last_mut() {
            Some(c) if w - c.2 <= tol => {
                c.0 += w;
                c.1 += 1;
                c.2 = w;
            }
            _ => clusters.push((w, 1, w)),
        }
    }
    clusters
        .into_iter()
        .map(|(s, n, _)| (s / n as f64, n))
        .unzip()
}

/// Ten times the mean spacing of the distinct frequencies (0 included when
/// the kernel is nonempty). With fewer than two distinct values the width
/// falls back to a tenth of the largest frequency, or of ‖𝕄‖∞, or 1.
pub fn default_epsilon(frequencies: &[f64], include_zero: bool, norm: f64) -> f64 {
    let mut distinct: Vec<f64> = Vec::with_capacity(frequencies.len() + 1);
    if include_zero {
        distinct.push(0.0);
    }
    distinct.extend_from_slice(frequencies);
    if distinct.len() >= 2 {
        let span = distinct[distinct.len() - 1] - distinct[0];
        return 10.0 * span / (distinct.len() - 1) as f64;
    }
    let top = frequencies.last().copied().unwrap_or(0.0);
    if top > 0.0 {
        0.1 * top
    } else if norm > 0.0 {
        0.1 * norm
    } else {
        1.0
    }
}

/// Uncoupled resolvent blocks g₁ (X₁), g_ℳ (Y), g₂ (X₂) at one z.
#[derive(Clone, Debug)]
pub struct UncoupledBlocks {
    pub z: C64,
    pub g1: DMatrix<C64>,
    pub gm: DMatrix<C64>,
    pub g2: DMatrix<C64>,
}

impl UncoupledBlocks {
    /// blockdiag(g₁, g_ℳ, g₂) in the sector ordering X₁, Y, X₂.
    pub fn block_diagonal(&self) -> DMatrix<C64> {
        let (a, b, c) = (self.g1.nrows(), self.gm.nrows(), self.g2.nrows());
        let mut out = DMatrix::zeros(a + b + c, a + b + c);
        out.view_mut((0, 0), (a, a)).copy_from(&self.g1);
        out.view_mut((a, a), (b, b)).copy_from(&self.gm);
        out.view_mut((a + b, a + b), (c, c)).copy_from(&self.g2);
        out
    }

    /// max |g_ℳ⁻¹ − (g₁⁻¹⊗𝕀 + 𝕀⊗g₂⁻¹ − z𝕀)| using the Y ↔ (X₁, X₂) pairing.
    pub fn mixed_inverse_residual(&self, split: &CoupledSplit) -> Result<f64> {
        let inv = |m: &DMatrix<C64>| m.clone().lu().try_inverse().ok_or(Error::Singular);
        let (g1i, gmi, g2i) = (inv(&self.g1)?, inv(&self.gm)?, inv(&self.g2)?);
        let pairs = split.y_components();
        let mut worst = 0.0f64;
        for (r, &(p1, p2)) in pairs.iter().enumerate() {
            for (c, &(q1, q2)) in pairs.iter().enumerate() {
                let mut expected = C64::new(0.0, 0.0);
                if p2 == q2 {
                    expected += g1i[(p1, q1)];
                }
                if p1 == q1 {
                    expected += g2i[(p2, q2)];
                }
                if r == c {
                    expected -= self.z;
                }
                worst = worst.max((gmi[(r, c)] - expected).norm());
            }
        }
        Ok(worst)
    }
}

fn dense_block(m: &CsrMatrix, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    m.select(rows, cols).to_dense()
}

/// Uncoupled resolvent blocks of a coupled system at `z`.
pub fn uncoupled_resolvent(cs: &CoupledSystem, z: C64) -> Result<UncoupledBlocks> {
    let m0 = cs.uncoupled.matrix();
    let s = &cs.split;
    let solve = |idx: &[usize]| ResolventSolver::new(dense_block(m0, idx, idx)).solve(z);
    Ok(UncoupledBlocks {
        z,
        g1: solve(&s.x1)?,
        gm: solve(&s.y)?,
        g2: solve(&s.x2)?,
    })
}

/// Exact 𝔾(z) on the nonidentity indices in the sector ordering X₁, Y, X₂.
pub fn exact_sector_resolvent(cs: &CoupledSystem, z: C64) -> Result<DMatrix<C64>> {
    let order = cs.split.ordering();
    ResolventSolver::new(dense_block(cs.full.matrix(), &order, &order)).solve(z)
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<C64>) -> f64 {
    m.clone()
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// 𝔾₀ Σ_{n=0..K} (𝕍𝔾₀)ⁿ in the sector ordering X₁, Y, X₂.
pub fn dyson_series(cs: &CoupledSystem, z: C64, order: usize) -> Result<DMatrix<C64>> {
    let blocks = uncoupled_resolvent(cs, z)?;
    dyson_from_blocks(cs, &blocks, order)
}

pub fn dyson_from_blocks(cs: &CoupledSystem, blocks: &UncoupledBlocks, order: usize) -> Result<DMatrix<C64>> {
    let idx = cs.split.ordering();
    let g0 = blocks.block_diagonal();
    let v = dense_block(&cs.interaction, &idx, &idx).map(|x| C64::new(x, 0.0));
    let vg0 = &v * &g0;
    let rate = spectral_norm(&vg0);
    if rate >= 1.0 {
        return Err(Error::Divergent(rate));
    }
    // Horner form: 𝔾₀(𝕀 + 𝕍𝔾₀(𝕀 + 𝕍𝔾₀(…)))
    let n = g0.nrows();
    let mut acc = DMatrix::<C64>::identity(n, n);
    for _ in 0..order {
        acc = DMatrix::identity(n, n) + &vg0 * acc;
    }
    Ok(g0 * acc)
}
