use std::sync::Arc;

use conetip_core::absorption::{
    consistency_report, perturbation_slope, select_outgoing_by_absorption, selection_from_trajectory, trajectory,
    ConsistencyVerdict, Selection, SelectionEntry, TrajectoryPoint,
};
use conetip_core::cap::{mode_pencil, BoundaryCondition, CapGeometry, MaterialSpec, MeshParams};
use conetip_core::interval::{aleph, scan_interval, CriticalInterval, ScanSettings};
use conetip_core::singular::{
    blowup_rate, build_singularity, classify_wave, flux_matrix, mandelstam_basis, singular_space, Azimuth, BlowupFit,
    Branch, WaveKind,
};
use conetip_core::spectrum::{
    classify_value, conjugate_pairing_check, gram_smallest_singular_value, jordan_chains, line_eigenvalues,
    solve_pencil, spectral_weights, LineEigenvalue, SpectralWeights, SpectrumResult,
};
use num_complex::Complex64 as c64;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{RunConfig, Subcommand};
use crate::CliError;

#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub mode: u32,
    pub re_Lambda: f64,
    pub im_Lambda: f64,
    pub re_lambda: f64,
    pub im_lambda: f64,
    pub classification: &'static str,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LineSummary {
    pub mode: u32,
    pub index: usize,
    pub value: f64,
    pub eta: f64,
    pub multiplicity: usize,
    pub chain_lengths: Vec<usize>,
    pub gram_smallest_singular_value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeDiagnostics {
    pub mode: u32,
    pub condition_estimate: f64,
    pub max_residual: f64,
    pub conjugate_pairing: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumBundle {
    pub rows: Vec<SpectrumRow>,
    pub lines: Vec<LineSummary>,
    pub diagnostics: Vec<ModeDiagnostics>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AlephRow {
    pub alpha: f64,
    pub aleph: f64,
    /// `-1/ℵ_α`, the far end of the critical interval.
    pub endpoint: f64,
    pub reciprocal: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MemberOut {
    pub index: usize,
    pub mode: u32,
    pub azimuth: Azimuth,
    pub branch: Branch,
    pub line_index: usize,
    pub eigen_index: usize,
    pub chain_level: usize,
    pub lambda: c64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BasisBundle {
    pub dim: usize,
    pub members: Vec<MemberOut>,
    pub q: Vec<Vec<c64>>,
    pub anti_hermitian_error: f64,
    pub smallest_singular_value: f64,
    pub largest_singular_value: f64,
    pub signature: (usize, usize),
    pub mandelstam_residual: f64,
    pub conjugation_error: f64,
    pub plus_block_min_eigenvalue: f64,
    pub s_plus: Vec<Vec<c64>>,
    pub s_minus: Vec<Vec<c64>>,
    pub s_plus_flux: Vec<c64>,
    pub s_plus_classes: Vec<WaveKind>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrackedOut {
    pub mode: u32,
    pub line_index: usize,
    pub component: usize,
    pub eta: f64,
    pub d_value: c64,
    pub d_lambda_plus: c64,
    pub d_lambda_minus: c64,
    /// `(Λ(δ) - Λ(0))/δ` at the smallest `δ`.
    pub finite_difference: c64,
    pub finite_difference_relative_error: f64,
    pub selection: Selection,
    pub trajectory_selection: Selection,
    pub points: Vec<TrajectoryPoint>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryBundle {
    pub tracked: Vec<TrackedOut>,
    pub selection: Vec<SelectionEntry>,
    pub consistency: Option<ConsistencyVerdict>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlowupBundle {
    pub mode: u32,
    pub eta: f64,
    pub rho: f64,
    pub fit: BlowupFit,
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightsBundle {
    pub dirichlet: SpectralWeights,
    pub neumann: SpectralWeights,
    pub beta_star: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum BundleData {
    Spectrum(SpectrumBundle),
    Interval(Box<CriticalInterval>),
    Aleph(Vec<AlephRow>),
    Basis(Box<BasisBundle>),
    Trajectory(TrajectoryBundle),
    Blowup(BlowupBundle),
    Weights(WeightsBundle),
}

/// Everything one run produced, plus the configuration that produced it.
#[derive(Debug, Clone)]
pub struct ResultBundle {
    pub subcommand: Subcommand,
    pub config: RunConfig,
    pub data: BundleData,
}

/// Runs `subcommand` on a rayon pool with `threads` workers (the global
/// pool when `None`).
pub fn run_with_threads(config: &RunConfig, subcommand: Subcommand, threads: Option<usize>) -> Result<ResultBundle, CliError> {
    match threads {
        None => run_command(config, subcommand),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
            pool.install(|| run_command(config, subcommand))
        }
    }
}

pub fn run_command(config: &RunConfig, subcommand: Subcommand) -> Result<ResultBundle, CliError> {
    if let Some(s) = config.subcommand {
        if s != subcommand {
            return Err(CliError::Config(format!(
                "config is for '{}' but '{}' was requested",
                s.name(),
                subcommand.name()
            )));
        }
    }
    config.validate()?;
    let data = match subcommand {
        Subcommand::Spectrum => BundleData::Spectrum(run_spectrum(config)?),
        Subcommand::Interval => BundleData::Interval(Box::new(run_interval(config)?)),
        Subcommand::Aleph => BundleData::Aleph(run_aleph(config)?),
        Subcommand::Basis => BundleData::Basis(Box::new(run_basis(config)?)),
        Subcommand::Trajectory => BundleData::Trajectory(run_trajectory(config)?),
        Subcommand::Blowup => BundleData::Blowup(run_blowup(config)?),
        Subcommand::Weights => BundleData::Weights(run_weights(config)?),
    };
    Ok(ResultBundle {
        subcommand,
        config: config.clone(),
        data,
    })
}

fn solve_modes(geometry: CapGeometry, material: MaterialSpec, modes: &[u32], mesh: MeshParams) -> Result<Vec<SpectrumResult>, CliError> {
    modes
        .par_iter()
        .map(|&m| {
            let p = mode_pencil(geometry, material, m, mesh).map_err(CliError::context(format!("mode {m}")))?;
            solve_pencil(Arc::new(p)).map_err(CliError::context(format!("mode {m}")))
        })
        .collect()
}

/// Line eigenvalues of all configured modes with chains computed.
fn collect_line_eigenvalues(config: &RunConfig, specs: &[SpectrumResult]) -> Result<Vec<LineEigenvalue>, CliError> {
    let per_mode: Vec<Vec<LineEigenvalue>> = specs
        .par_iter()
        .map(|spec| {
            let ctx = format!("mode {}", spec.mode);
            line_eigenvalues(spec, config.line_tol)
                .and_then(|les| les.into_iter().map(|le| jordan_chains(&spec.pencil, le)).collect())
                .map_err(CliError::context(ctx))
        })
        .collect::<Result<_, _>>()?;
    Ok(per_mode.into_iter().flatten().collect())
}

fn run_spectrum(config: &RunConfig) -> Result<SpectrumBundle, CliError> {
    let specs = solve_modes(config.geometry()?, config.material()?, &config.modes, config.mesh())?;
    let mut rows = Vec::new();
    let mut diagnostics = Vec::new();
    for spec in &specs {
        for (pair, (lp, _)) in spec.pairs.iter().zip(&spec.exponents) {
            rows.push(SpectrumRow {
                mode: spec.mode,
                re_Lambda: pair.value.re,
                im_Lambda: pair.value.im,
                re_lambda: lp.re,
                im_lambda: lp.im,
                classification: classify_value(pair.value, config.line_tol).label(),
                residual: pair.residual,
            });
        }
        diagnostics.push(ModeDiagnostics {
            mode: spec.mode,
            condition_estimate: spec.condition_estimate,
            max_residual: spec.max_residual(),
            conjugate_pairing: conjugate_pairing_check(spec).ok(),
        });
    }
    let lines = if config.material.delta == 0.0 {
        collect_line_eigenvalues(config, &specs)?
            .iter()
            .map(|le| LineSummary {
                mode: le.mode,
                index: le.index,
                value: le.value,
                eta: le.eta,
                multiplicity: le.multiplicity(),
                chain_lengths: (0..le.multiplicity()).map(|k| le.chain_length(k)).collect(),
                gram_smallest_singular_value: gram_smallest_singular_value(le),
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(SpectrumBundle { rows, lines, diagnostics })
}

fn run_interval(config: &RunConfig) -> Result<CriticalInterval, CliError> {
    let s = &config.sweep;
    let settings = ScanSettings {
        kappa_min: s.kappa_min,
        kappa_max: s.kappa_max,
        grid: s.grid,
        bisect_tol: s.bisect_tol,
        modes: config.modes.clone(),
        mesh: config.mesh(),
    };
    Ok(scan_interval(config.geometry()?, &settings)?)
}

fn run_aleph(config: &RunConfig) -> Result<Vec<AlephRow>, CliError> {
    let alphas = if config.sweep.alphas.is_empty() {
        vec![config.geometry.alpha]
    } else {
        config.sweep.alphas.clone()
    };
    alphas
        .into_iter()
        .map(|alpha| {
            let a = aleph(alpha)?;
            Ok(AlephRow {
                alpha,
                aleph: a,
                endpoint: -1.0 / a,
                reciprocal: -a,
            })
        })
        .collect()
}

fn undamped_line_eigenvalues(config: &RunConfig) -> Result<Vec<LineEigenvalue>, CliError> {
    if config.material.delta != 0.0 {
        return Err(CliError::Core(conetip_core::Error::NotApplicableDissipative));
    }
    let specs = solve_modes(config.geometry()?, config.material()?, &config.modes, config.mesh())?;
    collect_line_eigenvalues(config, &specs)
}

fn run_basis(config: &RunConfig) -> Result<BasisBundle, CliError> {
    let les = undamped_line_eigenvalues(config)?;
    if les.is_empty() {
        return Err(CliError::Core(conetip_core::Error::EmptySpectrum));
    }
    let space = singular_space(&les, config.sweep.rho)?;
    let fm = flux_matrix(&space)?;
    let basis = mandelstam_basis(&fm)?;
    let n = fm.dim();
    let members = space
        .members
        .iter()
        .enumerate()
        .map(|(index, m)| MemberOut {
            index,
            mode: m.mode,
            azimuth: m.azimuth,
            branch: m.branch,
            line_index: m.indices.0,
            eigen_index: m.indices.1,
            chain_level: m.indices.2,
            lambda: m.lambda,
        })
        .collect();
    let classes = basis
        .s_plus
        .iter()
        .map(|c| classify_wave(&fm, c))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BasisBundle {
        dim: n,
        members,
        q: (0..n).map(|a| (0..n).map(|b| fm.q[(a, b)]).collect()).collect(),
        anti_hermitian_error: fm.anti_hermitian_error,
        smallest_singular_value: fm.smallest_singular_value,
        largest_singular_value: fm.largest_singular_value,
        signature: (fm.positive, fm.negative),
        mandelstam_residual: basis.residual,
        conjugation_error: basis.conjugation_error,
        plus_block_min_eigenvalue: basis.plus_block_min_eigenvalue,
        s_plus_flux: classes.iter().map(|c| c.flux).collect(),
        s_plus_classes: classes.iter().map(|c| c.kind).collect(),
        s_plus: basis.s_plus,
        s_minus: basis.s_minus,
    })
}

fn run_trajectory(config: &RunConfig) -> Result<TrajectoryBundle, CliError> {
    let les = undamped_line_eigenvalues(config)?;
    if les.is_empty() {
        return Err(CliError::Core(conetip_core::Error::EmptySpectrum));
    }
    let grid = &config.sweep.delta_grid;
    let smallest = *grid.last().expect("validated non-empty");
    let tracked: Vec<Vec<TrackedOut>> = les
        .par_iter()
        .map(|le| {
            let slopes = perturbation_slope(le)?;
            slopes
                .iter()
                .enumerate()
                .map(|(component, s)| {
                    let t = trajectory(le, &s.direction, Branch::Plus, grid)?;
                    let fd = t.finite_difference(smallest).expect("grid point present");
                    let sel = select_outgoing_by_absorption(std::slice::from_ref(s));
                    Ok(TrackedOut {
                        mode: le.mode,
                        line_index: le.index,
                        component,
                        eta: le.eta,
                        d_value: s.d_value,
                        d_lambda_plus: s.d_lambda_plus,
                        d_lambda_minus: s.d_lambda_minus,
                        finite_difference: fd,
                        finite_difference_relative_error: (fd - s.d_value).norm() / s.d_value.norm(),
                        selection: sel.entries[0].selection,
                        trajectory_selection: selection_from_trajectory(&t),
                        points: t.points,
                    })
                })
                .collect::<Result<Vec<_>, conetip_core::Error>>()
        })
        .collect::<Result<_, _>>()?;
    let slopes = les
        .iter()
        .map(perturbation_slope)
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect::<Vec<_>>();
    let selection = select_outgoing_by_absorption(&slopes);
    let consistency = singular_space(&les, config.sweep.rho)
        .and_then(|space| {
            let basis = mandelstam_basis(&flux_matrix(&space)?)?;
            consistency_report(&space, &basis, &selection)
        })
        .ok();
    Ok(TrajectoryBundle {
        tracked: tracked.into_iter().flatten().collect(),
        selection: selection.entries,
        consistency,
    })
}

fn run_blowup(config: &RunConfig) -> Result<BlowupBundle, CliError> {
    let les = undamped_line_eigenvalues(config)?;
    let le = les
        .iter()
        .find(|le| le.chain_length(0) == 1)
        .ok_or(CliError::Core(conetip_core::Error::EmptySpectrum))?;
    let s = build_singularity(le, 0, 0, config.sweep.rho, false)?;
    let fit = blowup_rate(&s, &config.sweep.blowup_n)?;
    Ok(BlowupBundle {
        mode: le.mode,
        eta: le.eta,
        rho: config.sweep.rho,
        fit,
    })
}

fn run_weights(config: &RunConfig) -> Result<WeightsBundle, CliError> {
    let material = config.material()?;
    let base = config.geometry()?;
    let weights = |bc: BoundaryCondition| -> Result<SpectralWeights, CliError> {
        // An internal tip has no outer edge; both kinds use the same cap.
        let geometry = match base {
            CapGeometry::Internal { .. } => base,
            CapGeometry::Boundary { alpha, alpha_outer, .. } => CapGeometry::boundary(alpha, alpha_outer, bc)?,
        };
        let specs = solve_modes(geometry, material, &config.modes, config.mesh())?;
        Ok(spectral_weights(&specs, bc)?)
    };
    let dirichlet = weights(BoundaryCondition::Dirichlet)?;
    let neumann = weights(BoundaryCondition::Neumann)?;
    Ok(WeightsBundle {
        beta_star: conetip_core::spectrum::beta_star(dirichlet.beta, neumann.beta),
        dirichlet,
        neumann,
    })
}
