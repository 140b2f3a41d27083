//! Run and convergence reports, their summaries and the structured record.

use fredlab_core::lab::IdentityReport;
use fredlab_core::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentKind, GeometryKind, Tolerances};

/// Residuals below this are at the rounding floor; their ratios carry no
/// order information.
pub const SATURATION_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tier {
    ExactRoute,
    OracleRoute,
}

impl Tier {
    /// Residuals against a quadrature (Nyström) evaluation are oracle-tier;
    /// everything else compares exact routes.
    pub fn of(residual_name: &str) -> Tier {
        if residual_name.contains("nystrom") {
            Tier::OracleRoute
        } else {
            Tier::ExactRoute
        }
    }

    pub fn tolerance(&self, t: &Tolerances) -> f64 {
        match self {
            Tier::ExactRoute => t.exact_route,
            Tier::OracleRoute => t.oracle_route,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub version: String,
}

impl Provenance {
    pub fn new(config_hash: &str) -> Self {
        Self {
            config_hash: config_hash.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZRecord {
    pub resolution: String,
    pub report: IdentityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierSummary {
    pub tier: Tier,
    pub tolerance: f64,
    pub residuals: usize,
    pub max_residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub max_residual: f64,
    pub tiers: Vec<TierSummary>,
    pub excluded: usize,
    pub pass: bool,
}

fn passes(residual: f64, tolerance: f64) -> bool {
    // NaN fails
    residual <= tolerance
}

impl Summary {
    pub fn of(records: &[ZRecord], tolerances: &Tolerances) -> Self {
        let mut tiers: Vec<TierSummary> = [Tier::ExactRoute, Tier::OracleRoute]
            .into_iter()
            .map(|tier| TierSummary {
                tier,
                tolerance: tier.tolerance(tolerances),
                residuals: 0,
                max_residual: 0.0,
                pass: true,
            })
            .collect();
        let mut excluded = 0;
        for rec in records {
            if rec.report.is_excluded() {
                excluded += 1;
                continue;
            }
            for r in &rec.report.residuals {
                let t = &mut tiers[Tier::of(&r.name) as usize];
                t.residuals += 1;
                t.max_residual = if r.value.is_nan() { f64::INFINITY } else { t.max_residual.max(r.value) };
                t.pass &= passes(r.value, t.tolerance);
            }
        }
        Summary {
            max_residual: tiers.iter().fold(0.0, |m, t| m.max(t.max_residual)),
            pass: tiers.iter().all(|t| t.pass),
            tiers,
            excluded,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub experiment: ExperimentKind,
    pub geometry: Option<GeometryKind>,
    pub provenance: Provenance,
    pub tolerances: Tolerances,
    pub records: Vec<ZRecord>,
    pub summary: Summary,
}

impl RunReport {
    pub fn new(
        experiment: ExperimentKind,
        geometry: Option<GeometryKind>,
        provenance: Provenance,
        tolerances: Tolerances,
        records: Vec<ZRecord>,
    ) -> Self {
        let summary = Summary::of(&records, &tolerances);
        Self {
            experiment,
            geometry,
            provenance,
            tolerances,
            records,
            summary,
        }
    }

    /// Whether a residual fails its tier.
    pub fn fails(&self, residual_name: &str, value: f64) -> bool {
        !passes(value, Tier::of(residual_name).tolerance(&self.tolerances))
    }
}

/// One residual followed across the ladder at one `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub z: Complex64,
    pub residual: String,
    /// One entry per rung; `None` where the rung excluded this `z`.
    pub values: Vec<Option<f64>>,
    /// `log2(values[k] / values[k + 1])`; `None` when either side is
    /// missing or below [`SATURATION_FLOOR`].
    pub orders: Vec<Option<f64>>,
}

impl ConvergenceRow {
    pub fn saturated(&self, k: usize) -> bool {
        matches!(
            (self.values[k], self.values[k + 1]),
            (Some(a), Some(b)) if a < SATURATION_FLOOR || b < SATURATION_FLOOR
        )
    }
}

pub fn order(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(a), Some(b)) if a >= SATURATION_FLOOR && b >= SATURATION_FLOOR && a.is_finite() && b.is_finite() => {
            Some((a / b).log2())
        }
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub experiment: ExperimentKind,
    pub geometry: Option<GeometryKind>,
    pub provenance: Provenance,
    pub rungs: Vec<RunReport>,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    pub fn new(rungs: Vec<RunReport>) -> Self {
        let first = &rungs[0];
        let mut rows: Vec<ConvergenceRow> = Vec::new();
        for (k, run) in rungs.iter().enumerate() {
            for rec in &run.records {
                for r in &rec.report.residuals {
                    let idx = match rows.iter().position(|row| row.z == rec.report.z && row.residual == r.name) {
                        Some(i) => i,
                        None => {
                            rows.push(ConvergenceRow {
                                z: rec.report.z,
                                residual: r.name.clone(),
                                values: vec![None; rungs.len()],
                                orders: Vec::new(),
                            });
                            rows.len() - 1
                        }
                    };
                    rows[idx].values[k] = Some(r.value);
                }
            }
        }
        for row in &mut rows {
            row.orders = row.values.windows(2).map(|w| order(w[0], w[1])).collect();
        }
        Self {
            experiment: first.experiment,
            geometry: first.geometry,
            provenance: first.provenance.clone(),
            rows,
            rungs,
        }
    }

    /// The finest rung decides the exit status.
    pub fn pass(&self) -> bool {
        self.rungs.last().is_none_or(|r| r.summary.pass)
    }
}

/// What `emit` reads and `run --format record` writes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "kebab-case")]
pub enum Record {
    Run(RunReport),
    Convergence(ConvergenceReport),
}

impl Record {
    pub fn pass(&self) -> bool {
        match self {
            Record::Run(r) => r.summary.pass,
            Record::Convergence(c) => c.pass(),
        }
    }
}
