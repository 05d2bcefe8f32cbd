use serde::Serialize;

use strain_tomo::solver::{ConstraintMode, RegularizerKind, SolverConfig};

use crate::{CompareArgs, ReconstructArgs};

/// Parameters of a run, echoed into JSON reports.
#[derive(Clone, Debug, Default, Serialize)]
pub struct RunConfig {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mesh: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sinogram: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regularizer: Option<RegularizerKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constraint_mode: Option<ConstraintMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub penalty_weight: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constraint_tolerance: Option<f64>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

fn path(p: &std::path::Path) -> String {
    p.display().to_string()
}

impl RunConfig {
    pub fn reconstruct(a: &ReconstructArgs, c: &SolverConfig) -> Self {
        let mut outputs = vec![path(&a.out)];
        outputs.extend(a.vtk.iter().map(|p| path(p)));
        outputs.extend(a.report.iter().map(|p| path(p)));
        Self {
            command: "reconstruct".into(),
            mesh: Some(path(&a.mesh)),
            sinogram: Some(path(&a.sinogram)),
            nu: Some(a.nu),
            alpha: Some(c.alpha),
            regularizer: Some(c.regularizer),
            constraint_mode: Some(c.constraint_mode),
            penalty_weight: (c.constraint_mode == ConstraintMode::Penalty).then_some(c.penalty_weight),
            constraint_tolerance: Some(c.constraint_tolerance),
            inputs: vec![path(&a.mesh), path(&a.sinogram)],
            outputs,
        }
    }

    pub fn compare(a: &CompareArgs) -> Self {
        Self {
            command: "compare".into(),
            mesh: Some(path(&a.mesh)),
            inputs: vec![path(&a.a), path(&a.b)],
            outputs: a.report.iter().map(|p| path(p)).collect(),
            ..Default::default()
        }
    }
}
