use super::{run_pipeline, PipelineConfig, PipelineOutcome, Result};
use crate::eval::MetricSet;

pub const DEFAULT_QS: [usize; 5] = [10, 20, 50, 70, 100];
pub const DEFAULT_EPSILONS: [f64; 6] = [0.5, 1.0, 2.0, 5.0, 10.0, 20.0];

/// One grid point of a sweep and the pipeline run behind it.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: f64,
    pub outcome: PipelineOutcome,
}

fn write_sweep_csv(path: &std::path::Path, column: &str, points: &[SweepPoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec![column, "dataset", "variant", "classifier", "run", "epsilon"];
    header.extend(MetricSet::NAMES);
    w.write_record(&header)?;
    let cell = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    for p in points {
        for r in &p.outcome.records {
            let mut row = vec![
                format!("{}", p.value),
                r.dataset.clone(),
                r.variant.to_string(),
                r.classifier.to_string(),
                r.run.to_string(),
                cell(r.epsilon),
            ];
            row.extend(r.metrics.values().into_iter().map(cell));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reruns the pipeline once per `q`, each into `<out>/q-<q>/`, and writes
/// every per-run metric row to `<out>/q_sweep.csv`.
pub fn q_sweep(cfg: &PipelineConfig, qs: &[usize]) -> Result<Vec<SweepPoint>> {
    let mut points = Vec::new();
    for &q in qs {
        let mut c = cfg.clone();
        c.awoe.q = q;
        c.output_dir = cfg.output_dir.join(format!("q-{q}"));
        points.push(SweepPoint {
            value: q as f64,
            outcome: run_pipeline(&c)?,
        });
    }
    write_sweep_csv(&cfg.output_dir.join("q_sweep.csv"), "q", &points)?;
    Ok(points)
}

/// Reruns the pipeline once per privacy budget, each into
/// `<out>/eps-<budget>/`, and writes `<out>/epsilon_sweep.csv` with the
/// per-run rows and `<out>/epsilon_accuracy.csv` with mean accuracy per
/// budget and cell.
pub fn epsilon_sweep(cfg: &PipelineConfig, budgets: &[f64]) -> Result<Vec<SweepPoint>> {
    let mut points = Vec::new();
    for &eps in budgets {
        let mut c = cfg.clone();
        c.gan.epsilon_budget = eps;
        c.output_dir = cfg.output_dir.join(format!("eps-{eps}"));
        points.push(SweepPoint {
            value: eps,
            outcome: run_pipeline(&c)?,
        });
    }
    std::fs::create_dir_all(&cfg.output_dir)?;
    write_sweep_csv(&cfg.output_dir.join("epsilon_sweep.csv"), "epsilon_budget", &points)?;
    let mut w = csv::Writer::from_path(cfg.output_dir.join("epsilon_accuracy.csv"))?;
    w.write_record(["epsilon_budget", "dataset", "variant", "classifier", "n_runs", "mean_epsilon", "accuracy"])?;
    for p in &points {
        for s in &p.outcome.report.summary {
            w.write_record([
                format!("{}", p.value),
                s.dataset.clone(),
                s.variant.to_string(),
                s.classifier.to_string(),
                s.n_runs.to_string(),
                s.mean_epsilon.map(|x| format!("{x}")).unwrap_or_default(),
                s.mean.accuracy.map(|x| format!("{x}")).unwrap_or_default(),
            ])?;
        }
    }
    w.flush()?;
    Ok(points)
}
