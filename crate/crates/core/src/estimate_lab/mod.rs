//! Empirical constants for the interpolation inequalities, exact checks of
//! the null structure, and decay/bootstrap audits of solver output.

mod decay;
mod identities;
mod interpolation;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calculus::CalculusError;
use crate::collision_kernel::KernelError;
use crate::evolution::EvolutionError;
use crate::norms_energy::{least_squares, NormError};
use crate::phase_grid::GridError;

pub use decay::{
    bootstrap_monitor, solution_decay_audit, BootstrapReport, DecayAudit, DecayRow, DecaySource, DecayThresholds,
    FreeGaussianSource, HistorySource, SeriesKind,
};
pub use identities::{verify_exp_weight_absorption, verify_null_structure, NullStructureReport};
pub use interpolation::{
    verify_interpolation_l1v, verify_interpolation_suite, Anchor, Bump, FamilyKind, InterpolationSuite, Quadrature,
    TestFamily, L1V_SHARP_CONSTANT,
};

/// The t sweep used for "uniform in t" checks.
pub const T_SWEEP: [f64; 9] = [0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0];
/// Ratios of constant-1 inequalities may exceed 1 by this much.
pub const EXACT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Calculus(#[from] CalculusError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
    #[error("{0}")]
    Range(String),
    #[error("series {series} has nonpositive value {value} at t = {time}")]
    NonPositive { series: String, time: f64, value: f64 },
    #[error("history has no stored snapshots")]
    NoSnapshots,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InequalityId {
    /// ‖h‖_{L¹_v} against (1+t)^{−3/2}‖⟨x−(t+1)v⟩²h‖_{L²_v}, pointwise in x.
    L1vInterpolation,
    L2xL1v,
    /// ‖h‖_{L^∞_xL²_v} against Σ_{|α|≤2}‖∂_x^α h‖_{L²_xL²_v}.
    SobolevX,
    LinfxL1v,
    ExpWeightAbsorption,
}

impl InequalityId {
    pub fn label(self) -> &'static str {
        match self {
            Self::L1vInterpolation => "l1v-interpolation",
            Self::L2xL1v => "l2x-l1v",
            Self::SobolevX => "sobolev-x",
            Self::LinfxL1v => "linfx-l1v",
            Self::ExpWeightAbsorption => "exp-weight-absorption",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub inequality: InequalityId,
    pub family: String,
    pub t_grid: Vec<f64>,
    /// Max LHS/RHS over the family's members, per time.
    pub ratios: Vec<f64>,
    /// The same on the refined quadrature, when one was run.
    pub refined_ratios: Option<Vec<f64>>,
    pub max_ratio: f64,
    /// Log-log slope of the ratio series against 1+t.
    pub slope: f64,
    /// max over t of |refined − coarse| / refined.
    pub refinement_drift: Option<f64>,
    /// Some sample had a vanishing right side under a nonzero left side.
    pub inconsistent: bool,
    /// The inequality holds with constant exactly 1.
    pub exact: bool,
}

impl InequalityReport {
    pub(crate) fn new(
        inequality: InequalityId,
        family: String,
        t_grid: Vec<f64>,
        ratios: Vec<f64>,
        refined_ratios: Option<Vec<f64>>,
        inconsistent: bool,
        exact: bool,
    ) -> Self {
        let max_ratio = ratios.iter().chain(refined_ratios.iter().flatten()).fold(0.0f64, |m, r| m.max(*r));
        let slope = ratio_slope(&t_grid, &ratios);
        let refinement_drift = refined_ratios.as_ref().map(|fine| {
            ratios
                .iter()
                .zip(fine)
                .map(|(c, f)| if *f > 0.0 { (f - c).abs() / f } else if *c > 0.0 { f64::INFINITY } else { 0.0 })
                .fold(0.0f64, f64::max)
        });
        Self { inequality, family, t_grid, ratios, refined_ratios, max_ratio, slope, refinement_drift, inconsistent, exact }
    }

    /// Ratios finite, consistent, and within 1 + 10⁻⁸ for exact inequalities.
    pub fn is_valid(&self) -> bool {
        let finite = self.ratios.iter().chain(self.refined_ratios.iter().flatten()).all(|r| r.is_finite());
        finite && !self.inconsistent && (!self.exact || self.max_ratio <= 1.0 + EXACT_TOLERANCE)
    }

    pub fn is_flat(&self, tol: f64) -> bool {
        self.slope.abs() < tol
    }
}

/// Slope of ln r against ln(1+t) over the positive entries; 0 when fewer than two.
pub fn ratio_slope(t_grid: &[f64], ratios: &[f64]) -> f64 {
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        t_grid.iter().zip(ratios).filter(|(_, r)| **r > 0.0).map(|(t, r)| ((1.0 + t).ln(), r.ln())).unzip();
    if xs.len() < 2 {
        return 0.0;
    }
    least_squares(&xs, &ys).0
}

/// One CSV row per report: id, family, max ratio, slope, drift, flags.
pub fn reports_csv(reports: &[InequalityReport]) -> Result<String, EstimateError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| EstimateError::Norm(NormError::Csv(e.to_string()));
    w.write_record(["inequality", "family", "max_ratio", "slope", "refinement_drift", "inconsistent", "exact"])
        .map_err(err)?;
    for r in reports {
        w.write_record([
            r.inequality.label().to_string(),
            r.family.clone(),
            format!("{:e}", r.max_ratio),
            format!("{:e}", r.slope),
            r.refinement_drift.map(|d| format!("{d:e}")).unwrap_or_default(),
            r.inconsistent.to_string(),
            r.exact.to_string(),
        ])
        .map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| EstimateError::Norm(NormError::Csv(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
