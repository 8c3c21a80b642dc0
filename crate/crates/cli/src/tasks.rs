//! Task execution and result files. Floats are written with 17 significant
//! digits; nothing time- or thread-dependent reaches the output.

use std::fmt::Write as _;
use std::path::Path;

use corrdyn::combinatorics::{enumerate_subsets, CellSubset};
use corrdyn::decomposition::{connected_correlator, cumulant_reconstruct, reconstruct, single_cell_trace_residual, Decomposition};
use corrdyn::density::{diagnose_positivity, purity, purity_from_correlators, CMatrix};
use corrdyn::dynamics::{
    default_dt, evolve_with, spectrum, ResolventSolver, SpectrumOptions, Trajectory, MAX_SPECTRAL_SITES,
};
use corrdyn::hierarchy::{build_generator, Generator};
use corrdyn::oracle::correlator_trajectory;
use corrdyn::pauli::{string_of, CorrelatorIndex};
use rayon::prelude::*;

use crate::config::{RunConfig, Task};
use crate::CliError;

/// Largest system for the partitioned-density-matrix report.
pub const MAX_DECOMPOSE_SITES: usize = 8;
/// Oracle-vs-hierarchy tolerance used by `validate`.
pub const VALIDATE_TOLERANCE: f64 = 1e-6;

#[inline]
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_file(dir: &Path, name: &str, body: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    std::fs::write(&path, body).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Runs every task in the configuration, in order, each at most once.
pub fn execute(cfg: &RunConfig, out_dir: &Path) -> Result<(), CliError> {
    let mut seen = Vec::new();
    for &task in &cfg.tasks {
        if seen.contains(&task) {
            continue;
        }
        seen.push(task);
        match task {
            Task::Evolve => write_file(out_dir, "trajectory.csv", &run_evolve(cfg)?)?,
            Task::Spectrum => {
                let (freqs, density, info) = run_spectrum(cfg)?;
                write_file(out_dir, "spectrum.csv", &freqs)?;
                write_file(out_dir, "spectral_density.csv", &density)?;
                write_file(out_dir, "spectrum_info.txt", &info)?;
            }
            Task::Resolvent => write_file(out_dir, "resolvent.csv", &run_resolvent(cfg)?)?,
            Task::Decompose => write_file(out_dir, "decomposition.txt", &run_decompose(cfg)?)?,
            Task::Validate => {
                let (report, passed) = run_validate(cfg)?;
                write_file(out_dir, "validate.txt", &report)?;
                if !passed {
                    return Err(CliError::Numeric(format!(
                        "validation deviation exceeds {VALIDATE_TOLERANCE:e}, see validate.txt"
                    )));
                }
            }
        }
    }
    Ok(())
}

fn trajectory(cfg: &RunConfig, g: &Generator) -> Result<Trajectory, CliError> {
    let grid = cfg.time_grid()?;
    let x0 = cfg.initial_correlators()?;
    let dt = grid.dt.unwrap_or_else(|| default_dt(g));
    Ok(evolve_with(g, &x0, grid.t_max, dt, grid.stride, cfg.method.into())?)
}

/// trajectory.csv: `t` then one column per observable; ladder observables
/// get `.re` and `.im` columns.
pub fn run_evolve(cfg: &RunConfig) -> Result<String, CliError> {
    let observables = cfg.observables()?;
    let g = build_generator(&cfg.hamiltonian()?);
    let traj = trajectory(cfg, &g)?;
    let mut out = String::from("t");
    for o in &observables {
        if o.is_complex() {
            write!(out, ",{0}.re,{0}.im", o.label()).unwrap();
        } else {
            write!(out, ",{}", o.label()).unwrap();
        }
    }
    out.push('\n');
    for (t, s) in traj.times.iter().zip(&traj.states) {
        out.push_str(&num(*t));
        for o in &observables {
            let v = o.evaluate(s);
            if o.is_complex() {
                write!(out, ",{},{}", num(v.re), num(v.im)).unwrap();
            } else {
                write!(out, ",{}", num(v.re)).unwrap();
            }
        }
        out.push('\n');
    }
    Ok(out)
}

/// (spectrum.csv, spectral_density.csv, spectrum_info.txt). The frequency
/// list starts with ω = 0 carrying the kernel dimension when it is nonzero.
pub fn run_spectrum(cfg: &RunConfig) -> Result<(String, String, String), CliError> {
    let g = build_generator(&cfg.hamiltonian()?);
    let rep = spectrum(
        &g,
        &SpectrumOptions {
            epsilon: cfg.spectrum.epsilon,
            grid: None,
            n_points: cfg.spectrum.points,
        },
    )?;
    let mut freqs = String::from("omega,multiplicity\n");
    if rep.kernel_dim > 0 {
        writeln!(freqs, "{},{}", num(0.0), rep.kernel_dim).unwrap();
    }
    for (w, m) in rep.frequencies.iter().zip(&rep.multiplicities) {
        writeln!(freqs, "{},{m}", num(*w)).unwrap();
    }
    let mut density = String::from("omega,density\n");
    for (w, a) in rep.omega.iter().zip(&rep.density) {
        writeln!(density, "{},{}", num(*w), num(*a)).unwrap();
    }
    let info = format!(
        "n_sites={}\nkernel_dim={}\nn_frequencies={}\nepsilon={}\ndensity_normalization=sum over {} modes\n",
        cfg.sites,
        rep.kernel_dim,
        rep.frequencies.len(),
        num(rep.epsilon),
        rep.eigenvalues.len()
    );
    Ok((freqs, density, info))
}

fn label(code: usize) -> String {
    let s = string_of(CorrelatorIndex(code)).to_string();
    if s.is_empty() {
        "I".into()
    } else {
        s
    }
}

/// resolvent.csv: nonzero entries of 𝔾(z) for each probe point.
pub fn run_resolvent(cfg: &RunConfig) -> Result<String, CliError> {
    if cfg.sites > MAX_SPECTRAL_SITES {
        return Err(CliError::TooLarge(format!(
            "resolvent needs a dense {}-dimensional solve; limit is {MAX_SPECTRAL_SITES} sites",
            1usize << (2 * cfg.sites)
        )));
    }
    let probes = cfg.probe_points()?;
    let g = build_generator(&cfg.hamiltonian()?);
    let solver = ResolventSolver::from_generator(&g);
    let solved: Vec<CMatrix> = probes
        .par_iter()
        .map(|&z| solver.solve(z))
        .collect::<Result<_, _>>()?;
    let mut out = String::from("z_re,z_im,row,col,row_label,col_label,re,im\n");
    for (z, m) in probes.iter().zip(&solved) {
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let v = m[(r, c)];
                if v.re != 0.0 || v.im != 0.0 {
                    writeln!(
                        out,
                        "{},{},{r},{c},{},{},{},{}",
                        num(z.re),
                        num(z.im),
                        label(r),
                        label(c),
                        num(v.re),
                        num(v.im)
                    )
                    .unwrap();
                }
            }
        }
    }
    Ok(out)
}

fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// decomposition.txt: correlated and cumulant parts of the initial state.
pub fn run_decompose(cfg: &RunConfig) -> Result<String, CliError> {
    if cfg.sites > MAX_DECOMPOSE_SITES {
        return Err(CliError::TooLarge(format!(
            "decomposition limited to {MAX_DECOMPOSE_SITES} sites, config has {}",
            cfg.sites
        )));
    }
    let n = cfg.sites;
    let rho = cfg.initial_density()?;
    let v = cfg.initial_correlators()?;
    let pos = diagnose_positivity(&rho);
    let mut out = String::new();
    writeln!(out, "n_sites={n}").unwrap();
    writeln!(out, "purity={}", num(purity(&rho))).unwrap();
    writeln!(out, "min_eigenvalue={}", num(pos.min_eigenvalue)).unwrap();
    writeln!(out, "positive={}", pos.is_positive).unwrap();

    let mut dec = Decomposition::new(&rho);
    for a in enumerate_subsets(CellSubset::full(n)).into_iter().filter(|a| a.len() >= 2) {
        let c = dec.correlated_part(a)?;
        let cc = dec.cumulant_part(a)?;
        writeln!(out, "correlated{a}.norm={}", num(frobenius(&c.matrix))).unwrap();
        writeln!(out, "correlated{a}.trace_residual={}", num(single_cell_trace_residual(&c))).unwrap();
        writeln!(out, "cumulant{a}.norm={}", num(frobenius(&cc.matrix))).unwrap();
    }
    if n >= 2 {
        let (r, terms) = reconstruct(&dec.correlated_parts()?)?;
        writeln!(out, "subset_expansion.terms={terms}").unwrap();
        writeln!(out, "subset_expansion.max_error={}", num(max_abs_diff(r.matrix(), rho.matrix()))).unwrap();
    }
    let (r, terms) = cumulant_reconstruct(n, &dec.cumulant_parts()?)?;
    writeln!(out, "partition_expansion.terms={terms}").unwrap();
    writeln!(out, "partition_expansion.max_error={}", num(max_abs_diff(r.matrix(), rho.matrix()))).unwrap();

    for o in cfg.observables()? {
        if let crate::config::Observable::Cartesian { index, label } = &o {
            let s = string_of(*index);
            if s.weight() >= 2 {
                writeln!(out, "connected[{label}]={}", num(connected_correlator(&v, &s)?)).unwrap();
            }
        }
    }
    Ok(out)
}

/// validate.txt and whether the deviation is within tolerance.
pub fn run_validate(cfg: &RunConfig) -> Result<(String, bool), CliError> {
    let h = cfg.hamiltonian()?;
    let g = build_generator(&h);
    let rho0 = cfg.initial_density()?;
    let traj = trajectory(cfg, &g)?;
    let exact = correlator_trajectory(&h, &rho0, &traj.times)?;
    let deviation = traj.max_deviation(&exact)?;
    let n0 = traj.states[0].nonidentity_norm_sqr();
    let norm_drift = traj
        .states
        .iter()
        .map(|s| (s.nonidentity_norm_sqr() - n0).abs())
        .fold(0.0, f64::max);
    let purity_deviation = traj
        .states
        .iter()
        .zip(&exact.states)
        .map(|(a, b)| (purity_from_correlators(a) - purity_from_correlators(b)).abs())
        .fold(0.0, f64::max);
    let passed = deviation < VALIDATE_TOLERANCE;
    let grid = cfg.time_grid()?;
    let mut out = String::new();
    writeln!(out, "n_sites={}", cfg.sites).unwrap();
    writeln!(out, "method={}", if matches!(cfg.method, crate::config::MethodName::Rk4) { "rk4" } else { "exp_action" }).unwrap();
    writeln!(out, "t_max={}", num(grid.t_max)).unwrap();
    writeln!(out, "dt={}", num(grid.dt.unwrap_or_else(|| default_dt(&g)))).unwrap();
    writeln!(out, "samples={}", traj.len()).unwrap();
    writeln!(out, "antisymmetry_error={}", num(g.antisymmetry_error())).unwrap();
    writeln!(out, "max_deviation={}", num(deviation)).unwrap();
    writeln!(out, "norm_drift={}", num(norm_drift)).unwrap();
    writeln!(out, "purity_max_deviation={}", num(purity_deviation)).unwrap();
    writeln!(out, "tolerance={}", num(VALIDATE_TOLERANCE)).unwrap();
    writeln!(out, "status={}", if passed { "PASS" } else { "FAIL" }).unwrap();
    Ok((out, passed))
}
