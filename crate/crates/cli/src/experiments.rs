//! Evaluation of a validated experiment into per-`z` identity reports.

use fredlab_core::geometry::{free_dtn_mode, free_ntd_mode, ModalDomain};
use fredlab_core::halfline::{
    bs_determinant_halfline, jost_solution, ratio_identity_check, BoundaryCondition, HalflineError, LocalPotential,
};
use fredlab_core::lab::{
    det_swap_property, dirichlet_boundary_operator, nystrom_bs_det, verify_dirichlet_chain, verify_neumann_chain,
    IdentityReport, LabError, NamedResidual, NamedValue, Refinement,
};
use fredlab_core::numerics::SpectralPoint;
use fredlab_core::parallel;
use fredlab_core::potential::FiniteRankPotential;
use fredlab_core::Complex64;
use thiserror::Error;

use crate::config::{ConfigError, Experiment, ExperimentKind, GeometryKind, Grid, Potential};
use crate::report::{ConvergenceReport, Provenance, RunReport, ZRecord};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("z = {z}: {message}")]
    Evaluation { z: Complex64, message: String },
    #[error("convergence needs a ladder of at least 3 rungs, got {0}")]
    Ladder(usize),
}

fn named(name: &str, value: Complex64) -> NamedValue {
    NamedValue {
        name: name.to_string(),
        value,
    }
}

fn residual(name: &str, value: f64) -> NamedResidual {
    NamedResidual {
        name: name.to_string(),
        value,
    }
}

const NO_REFINEMENT: Refinement = Refinement {
    n_radial: 0,
    mode_cutoff: 0,
    n_boundary: 0,
};

fn halfline_flag(z: Complex64, e: HalflineError) -> Result<IdentityReport, RunError> {
    match e {
        HalflineError::DirichletEigenvalue { .. } | HalflineError::NeumannEigenvalue { .. } => {
            Ok(IdentityReport::flagged(z, NO_REFINEMENT, e.to_string()))
        }
        e => Err(RunError::Evaluation {
            z,
            message: e.to_string(),
        }),
    }
}

fn lab_flag(z: Complex64, refinement: Refinement, e: LabError) -> Result<IdentityReport, RunError> {
    if e.is_eigenvalue_flag() {
        Ok(IdentityReport::flagged(z, refinement, e.to_string()))
    } else {
        Err(RunError::Evaluation {
            z,
            message: e.to_string(),
        })
    }
}

/// Nyström determinants against the Jost function and its scaled
/// derivative at `x = 0`.
fn jost_pais(v: &LocalPotential, z: Complex64, length: f64, n: usize) -> Result<IdentityReport, RunError> {
    let evaluate = || -> Result<IdentityReport, HalflineError> {
        let sp = SpectralPoint::new(z);
        let jost = jost_solution(v, sp, &[0.0])?;
        let (f, df) = (jost.values[0], jost.derivatives[0]);
        let neumann = df / (Complex64::i() * sp.root());
        let det_d = bs_determinant_halfline(BoundaryCondition::Dirichlet, v, sp, length, n)?;
        let det_n = bs_determinant_halfline(BoundaryCondition::Neumann, v, sp, length, n)?;
        let mut report = IdentityReport::from_quantities(
            z,
            vec![
                named("nystrom_det_dirichlet", det_d),
                named("jost_function", f),
                named("nystrom_det_neumann", det_n),
                named("jost_neumann", neumann),
            ],
            NO_REFINEMENT,
        );
        report.residuals = vec![
            residual("nystrom_det_dirichlet~jost_function", (det_d - f).norm()),
            residual("nystrom_det_neumann~jost_neumann", (det_n - neumann).norm()),
        ];
        Ok(report)
    };
    evaluate().or_else(|e| halfline_flag(z, e))
}

fn ratio_1d(v: &LocalPotential, z: Complex64, length: f64, n: usize) -> Result<IdentityReport, RunError> {
    match ratio_identity_check(v, SpectralPoint::new(z), length, n) {
        Ok(check) => Ok(IdentityReport::from_quantities(
            z,
            vec![
                named("nystrom_det_ratio", check.determinant_ratio),
                named("jost_ratio", check.jost_ratio),
                named("dirichlet_m_ratio", check.dirichlet_m_ratio),
                named("neumann_m_ratio", check.neumann_m_ratio),
            ],
            NO_REFINEMENT,
        )),
        Err(e) => halfline_flag(z, e),
    }
}

/// Appends the full-grid Nyström value of the interior determinant ratio
/// `numerator / denominator` and its residual against the exact route.
fn add_oracle(
    report: &mut IdentityReport,
    v: &FiniteRankPotential,
    (numerator, denominator): (BoundaryCondition, BoundaryCondition),
    (nr, na): (usize, usize),
    experiment: &Experiment,
) -> Result<(), LabError> {
    let z = report.z;
    let top = nystrom_bs_det(v, numerator, z, nr, na, experiment.rule)?;
    let bottom = nystrom_bs_det(v, denominator, z, nr, na, experiment.rule)?;
    let oracle = top / bottom;
    let exact = report
        .quantity("lhs_ratio")
        .ok_or_else(|| LabError::InvalidArgument("chain without lhs_ratio".into()))?;
    report.quantities.push(named("nystrom_lhs_ratio", oracle));
    report
        .residuals
        .push(residual("lhs_ratio~nystrom_lhs_ratio", (exact - oracle).norm() / exact.norm().max(1.0)));
    Ok(())
}

fn chain(
    experiment: &Experiment,
    domain: &ModalDomain,
    v: &FiniteRankPotential,
    z: Complex64,
) -> Result<IdentityReport, RunError> {
    let refinement = Refinement::of(domain);
    let oracle = match experiment.grid {
        Grid::Modal { oracle, .. } => oracle,
        _ => None,
    };
    let evaluate = || -> Result<IdentityReport, LabError> {
        use BoundaryCondition::{Dirichlet, Neumann};
        let mut report = match experiment.kind {
            ExperimentKind::DirichletChain => verify_dirichlet_chain(domain, v, z)?,
            _ => verify_neumann_chain(domain, v, z)?,
        };
        if report.is_excluded() {
            return Ok(report);
        }
        if experiment.kind == ExperimentKind::NeumannChain {
            // the two boundary determinants are reciprocal
            let dirichlet_side = dirichlet_boundary_operator(domain, v, z)?.det_identity_minus()?;
            let neumann_side = report
                .quantity("boundary_det")
                .ok_or_else(|| LabError::InvalidArgument("chain without boundary_det".into()))?;
            let product = dirichlet_side * neumann_side;
            report.quantities.push(named("boundary_det_product", product));
            report
                .residuals
                .push(residual("boundary_det_product~1", (product - 1.0).norm()));
        }
        if let Some(grid) = oracle {
            let order = match experiment.kind {
                ExperimentKind::DirichletChain => (Neumann, Dirichlet),
                _ => (Dirichlet, Neumann),
            };
            add_oracle(&mut report, v, order, grid, experiment)?;
        }
        Ok(report)
    };
    evaluate().or_else(|e| lab_flag(z, refinement, e))
}

/// `lambda_n^N + 1 / lambda_n^D` for every mode of the domain.
fn dtn_inverse(domain: &ModalDomain, z: Complex64) -> Result<IdentityReport, RunError> {
    let refinement = Refinement::of(domain);
    let evaluate = || -> Result<IdentityReport, LabError> {
        let mut quantities = Vec::new();
        let mut residuals = Vec::new();
        for n in domain.modes() {
            let d = free_dtn_mode(domain, n, z)?;
            let nn = free_ntd_mode(domain, n, z)?;
            quantities.push(named(&format!("dtn[{n}]"), d));
            quantities.push(named(&format!("ntd[{n}]"), nn));
            residuals.push(residual(&format!("ntd[{n}]~-1/dtn[{n}]"), (nn + d.inv()).norm() / nn.norm().max(1.0)));
        }
        let mut report = IdentityReport::from_quantities(z, quantities, refinement);
        report.residuals = residuals;
        Ok(report)
    };
    evaluate().or_else(|e| lab_flag(z, refinement, e))
}

fn det_swap(experiment: &Experiment) -> Result<ZRecord, RunError> {
    let s = experiment.swap;
    let z = Complex64::new(0.0, 0.0);
    let stats = det_swap_property(&s).map_err(|e| RunError::Evaluation {
        z,
        message: e.to_string(),
    })?;
    let mut report = IdentityReport::from_quantities(
        z,
        vec![
            named("trials", Complex64::new(stats.trials as f64, 0.0)),
            named("mean_deviation", Complex64::new(stats.mean_deviation, 0.0)),
        ],
        NO_REFINEMENT,
    );
    report.residuals = vec![residual("det_swap_max_deviation", stats.max_deviation)];
    Ok(ZRecord {
        resolution: format!(
            "trials={};seed={};max_rank={};max_size={}",
            s.trials, s.seed, s.max_rank, s.max_size
        ),
        report,
    })
}

fn run_at(experiment: &Experiment, grid: &Grid) -> Result<RunReport, RunError> {
    let label = grid.label();
    let records = match (experiment.kind, *grid) {
        (ExperimentKind::DetSwap, _) => vec![det_swap(experiment)?],
        (kind, Grid::Halfline { n, length }) => {
            let Potential::Local(v) = &experiment.potential else {
                unreachable!("validated half-line potential")
            };
            let reports = parallel::map_slice(&experiment.z, |&z| match kind {
                ExperimentKind::JostPais1d => jost_pais(v, z, length, n),
                _ => ratio_1d(v, z, length, n),
            });
            collect(reports, &label)?
        }
        (kind, Grid::Modal { .. }) => {
            let geometry = experiment.geometry.unwrap_or(GeometryKind::Disk);
            let domain = grid.domain(geometry)?;
            let reports = if kind == ExperimentKind::DtnInverse {
                parallel::map_slice(&experiment.z, |&z| dtn_inverse(&domain, z))
            } else {
                let v = experiment.potential.finite_rank(&domain)?;
                parallel::map_slice(&experiment.z, |&z| chain(experiment, &domain, &v, z))
            };
            collect(reports, &label)?
        }
        (_, Grid::None) => unreachable!("validated grid"),
    };
    Ok(RunReport::new(
        experiment.kind,
        experiment.geometry,
        Provenance::new(&experiment.config_hash),
        experiment.tolerances,
        records,
    ))
}

/// Records have no representation for NaN or infinity, so non-finite
/// values are evaluation errors.
fn finite(report: IdentityReport) -> Result<IdentityReport, RunError> {
    let bad = report
        .quantities
        .iter()
        .find(|q| !q.value.re.is_finite() || !q.value.im.is_finite())
        .map(|q| q.name.clone())
        .or_else(|| report.residuals.iter().find(|r| !r.value.is_finite()).map(|r| r.name.clone()));
    match bad {
        Some(name) => Err(RunError::Evaluation {
            z: report.z,
            message: format!("{name} is not finite"),
        }),
        None => Ok(report),
    }
}

fn collect(reports: Vec<Result<IdentityReport, RunError>>, label: &str) -> Result<Vec<ZRecord>, RunError> {
    reports
        .into_iter()
        .map(|r| {
            r.and_then(finite).map(|report| ZRecord {
                resolution: label.to_string(),
                report,
            })
        })
        .collect()
}

/// Evaluates every `z` at the base resolution. Records keep the order of
/// the config's `z` list whatever the thread count.
pub fn run(experiment: &Experiment) -> Result<RunReport, RunError> {
    run_at(experiment, &experiment.grid)
}

/// Runs every ladder rung and tabulates residuals with empirical orders.
pub fn convergence(experiment: &Experiment) -> Result<ConvergenceReport, RunError> {
    if experiment.ladder.len() < 3 {
        return Err(RunError::Ladder(experiment.ladder.len()));
    }
    let rungs = experiment
        .ladder
        .iter()
        .map(|g| run_at(experiment, g))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ConvergenceReport::new(rungs))
}
