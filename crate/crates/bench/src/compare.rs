use crate::config::{Ablation, AffinitySource, ExperimentConfig, SolverChoice};
use crate::error::Result;
use crate::pipeline::{run_experiment_with, LearnedModel};
use crate::report::RunReport;

/// Mean accuracy of one (solver, affinity source) combination.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub solver: SolverChoice,
    pub affinity: AffinitySource,
    /// Aligned with [`ComparisonTable::noise_levels`].
    pub per_noise: Vec<f64>,
    pub mean: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonTable {
    pub noise_levels: Vec<f64>,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn get(&self, solver: SolverChoice, affinity: AffinitySource) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.solver == solver && r.affinity == affinity)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["solver".to_string(), "affinity".to_string()];
        header.extend(self.noise_levels.iter().map(|s| format!("acc_sigma_{s}")));
        header.push("acc_mean".into());
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![r.solver.name().to_string(), r.affinity.name().to_string()];
            rec.extend(r.per_noise.iter().map(f64::to_string));
            rec.push(r.mean.to_string());
            w.write_record(&rec)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| crate::error::BenchError::Config(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn row_from(report: &RunReport, solver: SolverChoice, affinity: AffinitySource, levels: &[f64]) -> ComparisonRow {
    let per_noise = levels
        .iter()
        .map(|s| {
            report
                .aggregates
                .per_noise
                .iter()
                .find(|p| p.noise_sigma == *s)
                .map_or(f64::NAN, |p| p.accuracy.mean)
        })
        .collect();
    ComparisonRow {
        solver,
        affinity,
        per_noise,
        mean: report.mean_accuracy(),
    }
}

/// Runs every solver under every affinity source in `sources` on the test
/// split of `cfg`. Learned sources use `model`.
pub fn compare_solvers(
    cfg: &ExperimentConfig,
    sources: &[AffinitySource],
    model: Option<&LearnedModel>,
) -> Result<ComparisonTable> {
    let mut rows = Vec::new();
    let mut levels: Vec<f64> = Vec::new();
    for &affinity in sources {
        for solver in SolverChoice::ALL {
            let mut c = cfg.clone();
            c.solver = solver;
            c.affinity = affinity;
            c.ablation = Ablation::Full;
            let report = run_experiment_with(&c, model)?;
            if levels.is_empty() {
                levels = report.aggregates.per_noise.iter().map(|p| p.noise_sigma).collect();
            }
            rows.push(row_from(&report, solver, affinity, &levels));
        }
    }
    Ok(ComparisonTable {
        noise_levels: levels,
        rows,
    })
}
