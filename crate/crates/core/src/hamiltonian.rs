//! Spin Hamiltonians with local fields and pairwise couplings,
//!
//! ```text
//! H = Σ_i ½ h_i·σ_i + Σ_{i<j} ½ V_ij^{μν} σ_i^μ σ_j^ν      (ħ = 1)
//! ```
//!
//! Each coupling tensor is stored once, under the ordered key (i, j) with
//! i < j. Reading it back with the sites reversed gives the transpose.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub type Tensor = [[f64; 3]; 3];

const ZERO_TENSOR: Tensor = [[0.0; 3]; 3];

fn transpose(t: &Tensor) -> Tensor {
    std::array::from_fn(|a| std::array::from_fn(|b| t[b][a]))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpinHamiltonian {
    n_sites: usize,
    fields: Vec<[f64; 3]>,
    couplings: BTreeMap<(usize, usize), Tensor>,
}

impl SpinHamiltonian {
    /// All fields and couplings zero.
    pub fn new(n_sites: usize) -> Result<Self> {
        if n_sites == 0 || n_sites > crate::combinatorics::MAX_SITES / 2 {
            return Err(Error::InvalidArgument(format!(
                "number of sites must be in 1..={}, got {n_sites}",
                crate::combinatorics::MAX_SITES / 2
            )));
        }
        Ok(SpinHamiltonian {
            n_sites,
            fields: vec![[0.0; 3]; n_sites],
            couplings: BTreeMap::new(),
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site < self.n_sites {
            Ok(())
        } else {
            Err(Error::SiteOutOfRange {
                site,
                n_sites: self.n_sites,
            })
        }
    }

    pub fn set_field(&mut self, site: usize, h: [f64; 3]) -> Result<()> {
        self.check_site(site)?;
        self.fields[site] = h;
        Ok(())
    }

    pub fn field(&self, site: usize) -> [f64; 3] {
        self.fields[site]
    }

    pub fn fields(&self) -> &[[f64; 3]] {
        &self.fields
    }

    /// Sets V_ij^{μν} = tensor[μ][ν]. With i > j the transpose is stored
    /// under (j, i). An all-zero tensor removes the coupling.
    pub fn set_coupling(&mut self, i: usize, j: usize, tensor: Tensor) -> Result<()> {
        self.check_site(i)?;
        self.check_site(j)?;
        if i == j {
            return Err(Error::SameSite(i));
        }
        let (key, t) = if i < j {
            ((i, j), tensor)
        } else {
            ((j, i), transpose(&tensor))
        };
        if t == ZERO_TENSOR {
            self.couplings.remove(&key);
        } else {
            self.couplings.insert(key, t);
        }
        Ok(())
    }

    /// V_ij as seen from site i; zero if the pair is uncoupled or i = j.
    pub fn coupling(&self, i: usize, j: usize) -> Tensor {
        if i < j {
            self.couplings.get(&(i, j)).copied().unwrap_or(ZERO_TENSOR)
        } else {
            self.couplings
                .get(&(j, i))
                .map(transpose)
                .unwrap_or(ZERO_TENSOR)
        }
    }

    /// Stored couplings, keyed by (i, j) with i < j.
    pub fn couplings(&self) -> impl Iterator<Item = ((usize, usize), &Tensor)> {
        self.couplings.iter().map(|(k, v)| (*k, v))
    }

    /// Sites coupled to `site`.
    pub fn neighbours(&self, site: usize) -> Vec<usize> {
        self.couplings
            .keys()
            .filter_map(|&(i, j)| {
                if i == site {
                    Some(j)
                } else if j == site {
                    Some(i)
                } else {
                    None
                }
            })
            .collect()
    }

    /// Copy with every coupling between `group` and its complement scaled by
    /// `factor` (0 removes them).
    pub fn scale_cross_couplings(&self, group: crate::combinatorics::CellSubset, factor: f64) -> Self {
        let mut out = self.clone();
        out.couplings = self
            .couplings
            .iter()
            .filter_map(|(&(i, j), t)| {
                if group.contains(i) != group.contains(j) {
                    let s: Tensor = std::array::from_fn(|a| std::array::from_fn(|b| t[a][b] * factor));
                    (factor != 0.0).then_some(((i, j), s))
                } else {
                    Some(((i, j), *t))
                }
            })
            .collect();
        out
    }

    /// Copy with every field and coupling multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for f in &mut out.fields {
            f.iter_mut().for_each(|x| *x *= factor);
        }
        for t in out.couplings.values_mut() {
            t.iter_mut().flatten().for_each(|x| *x *= factor);
        }
        out
    }

    /// Largest |h_i^α| or |V_ij^{αβ}|.
    pub fn max_coefficient(&self) -> f64 {
        let f = self.fields.iter().flatten().map(|x| x.abs());
        let v = self.couplings.values().flatten().flatten().map(|x| x.abs());
        f.chain(v).fold(0.0, f64::max)
    }

    /// Gaussian random fields (std `field_scale`) and full coupling tensors
    /// (std `coupling_scale`) on every pair.
    pub fn random<R: Rng + ?Sized>(
        n_sites: usize,
        rng: &mut R,
        field_scale: f64,
        coupling_scale: f64,
    ) -> Result<Self> {
        let mut h = Self::new(n_sites)?;
        let normal = StandardNormal;
        for i in 0..n_sites {
            let v: [f64; 3] = std::array::from_fn(|_| field_scale * Distribution::<f64>::sample(&normal, rng));
            h.set_field(i, v)?;
        }
        for i in 0..n_sites {
            for j in i + 1..n_sites {
                let t: Tensor = std::array::from_fn(|_| {
                    std::array::from_fn(|_| coupling_scale * Distribution::<f64>::sample(&normal, rng))
                });
                h.set_coupling(i, j, t)?;
            }
        }
        Ok(h)
    }

    /// H = ½[Δ₁τˣ + Δ₂σˣ + ωτᶻσᶻ] with τ on site 0 and σ on site 1.
    pub fn two_spin(delta1: f64, delta2: f64, omega: f64) -> Self {
        let mut h = Self::new(2).expect("two sites");
        h.set_field(0, [delta1, 0.0, 0.0]).unwrap();
        h.set_field(1, [delta2, 0.0, 0.0]).unwrap();
        let mut v = ZERO_TENSOR;
        v[2][2] = omega;
        h.set_coupling(0, 1, v).unwrap();
        h
    }
}
