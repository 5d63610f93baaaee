//! Factorial Monte Carlo study of contour and confidence-set axis widths.
//!
//! Every replication draws its sample covariance from its own generator
//! stream keyed by `(seed, condition, N, ε, replication)`, so cells can run
//! in any order or in parallel and still produce identical numbers.

mod table;
mod wishart;

pub use table::{published_table, table_check, ConsistencyCheck, ConsistencyReport, StudyTable, TableFormat, TableRow};
pub use wishart::{replication_rng, stream_key, wishart_sample};

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contour::{axis_widths_exact, f_target, ContourTarget, Focal, Scaling, TargetMode};
use crate::error::{Error, Result};
use crate::fit::{fit_ml, FitOptions};
use crate::model::{builtin_conditions, misspecify_to_epsilon, ConditionLabel, PopulationCondition};

/// Which set of columns a cell belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyMode {
    ConfidenceSet,
    EpsilonTilde,
    DeltaF,
}

impl StudyMode {
    pub fn as_str(self) -> &'static str {
        match self {
            StudyMode::ConfidenceSet => "confidence-set",
            StudyMode::EpsilonTilde => "epsilon-tilde",
            StudyMode::DeltaF => "delta-f",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ScalingName {
    Raw,
    Likelihood,
    #[default]
    Relative,
}

impl From<ScalingName> for Scaling {
    fn from(s: ScalingName) -> Self {
        match s {
            ScalingName::Raw => Scaling::Raw,
            ScalingName::Likelihood => Scaling::Likelihood,
            ScalingName::Relative => Scaling::Relative,
        }
    }
}

/// Study configuration. Deserializes from JSON; omitted keys take the
/// defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyDesign {
    pub conditions: Vec<ConditionLabel>,
    pub sample_sizes: Vec<usize>,
    pub epsilons: Vec<f64>,
    pub replications: usize,
    pub seed: u64,
    pub directions: usize,
    pub delta_f: f64,
    pub epsilon_tilde: f64,
    pub confidence: f64,
    pub scaling: ScalingName,
    /// Confidence sets computed once from the population covariance
    /// (`SD = 0`) instead of from sampled covariances.
    pub population_confidence_sets: bool,
    /// FPE cells computed once from the population covariance.
    pub population_fpe: bool,
}

impl Default for StudyDesign {
    fn default() -> Self {
        StudyDesign {
            conditions: ConditionLabel::ALL.to_vec(),
            sample_sizes: vec![1000, 200],
            epsilons: vec![0.0, 0.03, 0.09],
            replications: 500,
            seed: 20_180_611,
            directions: crate::contour::DEFAULT_DIRECTIONS,
            delta_f: 0.05,
            epsilon_tilde: 0.005,
            confidence: 0.95,
            scaling: ScalingName::Relative,
            population_confidence_sets: true,
            population_fpe: false,
        }
    }
}

impl StudyDesign {
    pub fn from_json(text: &str) -> Result<Self> {
        let design: StudyDesign = serde_json::from_str(text).map_err(|e| Error::Parse(format!("study config: {e}")))?;
        design.validate()?;
        Ok(design)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidInput("replications must be at least 1".into()));
        }
        if self.epsilons.iter().any(|e| e.is_nan() || *e < 0.0) || self.epsilons.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("epsilons must be nonnegative and strictly ascending".into()));
        }
        if self.sample_sizes.iter().any(|&n| n <= 6) {
            return Err(Error::InvalidInput("sample sizes must exceed the number of observed variables".into()));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::InvalidInput("confidence must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn target(&self, mode: StudyMode) -> ContourTarget<f64> {
        match mode {
            StudyMode::ConfidenceSet => ContourTarget::confidence_set(self.confidence),
            StudyMode::EpsilonTilde => ContourTarget::epsilon_tilde(self.epsilon_tilde),
            StudyMode::DeltaF => ContourTarget::delta_f(self.delta_f, self.scaling.into()),
        }
    }

    fn population_mode(&self, mode: StudyMode) -> bool {
        match mode {
            StudyMode::ConfidenceSet => self.population_confidence_sets,
            _ => self.population_fpe,
        }
    }

    /// Misfit level at which confidence sets are computed: the smallest
    /// design ε (zero in the default design).
    pub fn confidence_epsilon(&self) -> f64 {
        self.epsilons.first().copied().unwrap_or(0.0)
    }
}

/// Aggregated widths for one (condition, N, ε, mode) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyCell {
    pub condition: ConditionLabel,
    pub n: usize,
    pub epsilon: f64,
    pub mode: StudyMode,
    pub major_mean: f64,
    pub major_sd: f64,
    pub minor_mean: f64,
    pub minor_sd: f64,
    pub n_converged: usize,
    pub n_excluded: usize,
}

/// Focal parameters of the canonical model: the two structural effects.
pub fn canonical_focal(cond: &PopulationCondition<f64>) -> Focal {
    Focal::from_names(&cond.model, &["b1", "b2"]).expect("canonical model has b1 and b2")
}

/// Widths from one analyzed covariance, or `None` when the replication has
/// to be excluded (degenerate draw, no convergence, improper solution,
/// escaped or partial contour).
fn replicate(
    cond: &PopulationCondition<f64>,
    s: &nalgebra::DMatrix<f64>,
    n: usize,
    target: &ContourTarget<f64>,
    directions: usize,
) -> Option<(f64, f64)> {
    let focal = canonical_focal(cond);
    let fit = fit_ml(&cond.model, s, n, &FitOptions::default()).ok()?;
    if fit.improper {
        return None;
    }
    let t = f_target(target, &fit, cond.model.df(), focal.len());
    let w = axis_widths_exact(&cond.model, &fit, t, &focal, directions).ok()?;
    (!w.partial).then_some((w.major, w.minor))
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs one cell. `cond` must already carry the cell's population misfit.
pub fn run_cell(design: &StudyDesign, cond: &PopulationCondition<f64>, n: usize, mode: StudyMode) -> StudyCell {
    let target = design.target(mode);
    let epsilon = cond.epsilon_pop;
    let results: Vec<Option<(f64, f64)>> = if design.population_mode(mode) {
        vec![replicate(cond, &cond.sigma_pop, n, &target, design.directions)]
    } else {
        (0..design.replications)
            .into_par_iter()
            .map(|r| {
                let mut rng = replication_rng(design.seed, cond.label.index(), n, epsilon, r);
                let s = wishart_sample(&cond.sigma_pop, n, &mut rng).ok()?;
                replicate(cond, &s, n, &target, design.directions)
            })
            .collect()
    };
    let kept: Vec<(f64, f64)> = results.iter().flatten().copied().collect();
    let majors: Vec<f64> = kept.iter().map(|w| w.0).collect();
    let minors: Vec<f64> = kept.iter().map(|w| w.1).collect();
    let (major_mean, major_sd) = mean_sd(&majors);
    let (minor_mean, minor_sd) = mean_sd(&minors);
    StudyCell {
        condition: cond.label,
        n,
        epsilon,
        mode,
        major_mean,
        major_sd,
        minor_mean,
        minor_sd,
        n_converged: kept.len(),
        n_excluded: results.len() - kept.len(),
    }
}

/// Population conditions for every (label, ε) pair of the design.
pub fn prepare_conditions(design: &StudyDesign) -> Result<BTreeMap<(ConditionLabel, u64), PopulationCondition<f64>>> {
    let mut eps: Vec<f64> = design.epsilons.clone();
    if !eps.contains(&design.confidence_epsilon()) {
        eps.push(design.confidence_epsilon());
    }
    let jobs: Vec<(ConditionLabel, f64)> =
        design.conditions.iter().flat_map(|&c| eps.iter().map(move |&e| (c, e))).collect();
    jobs.into_par_iter()
        .map(|(label, e)| {
            let base = builtin_conditions::<f64>(label.variant());
            let df = base.model.df();
            Ok(((label, e.to_bits()), misspecify_to_epsilon(&base, e, df)?))
        })
        .collect()
}

/// Runs every cell of the design and assembles the table.
pub fn run_design(design: &StudyDesign) -> Result<StudyTable> {
    design.validate()?;
    let conditions = prepare_conditions(design)?;
    let mut jobs = Vec::new();
    for &label in &design.conditions {
        for &n in &design.sample_sizes {
            jobs.push((label, n, design.confidence_epsilon(), StudyMode::ConfidenceSet));
            for mode in [StudyMode::EpsilonTilde, StudyMode::DeltaF] {
                for &e in &design.epsilons {
                    jobs.push((label, n, e, mode));
                }
            }
        }
    }
    let cells: Vec<StudyCell> = jobs
        .par_iter()
        .map(|&(label, n, e, mode)| run_cell(design, &conditions[&(label, e.to_bits())], n, mode))
        .collect();
    Ok(StudyTable::from_cells(&design.epsilons, cells))
}

impl TargetMode {
    pub fn study_mode(self) -> StudyMode {
        match self {
            TargetMode::ConfidenceSet => StudyMode::ConfidenceSet,
            TargetMode::EpsilonTilde => StudyMode::EpsilonTilde,
            TargetMode::DeltaF => StudyMode::DeltaF,
        }
    }
}
