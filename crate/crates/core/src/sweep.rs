//! Batch runs over a grid of monitor parameters.

use serde::Serialize;

use crate::monitor::{MonitorConfig, MonitorConfigError};
use crate::sim::{run_batch, Scenario, ScenarioError};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepGrid {
    pub gamma: Vec<f64>,
    pub rho: Vec<f64>,
    pub eps: Vec<f64>,
    pub delta: Vec<f64>,
}

impl SweepGrid {
    /// All points in row order: `gamma` outermost, `delta` innermost.
    pub fn points(&self) -> Vec<(f64, f64, f64, f64)> {
        let mut out = Vec::new();
        for &g in &self.gamma {
            for &r in &self.rho {
                for &e in &self.eps {
                    for &d in &self.delta {
                        out.push((g, r, e, d));
                    }
                }
            }
        }
        out
    }

    /// Monitor configurations for every grid point, or the first invalid one.
    pub fn configs(&self) -> Result<Vec<MonitorConfig>, MonitorConfigError> {
        self.points().into_iter().map(|(g, r, e, d)| MonitorConfig::new(d, g, r, e)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub gamma: f64,
    pub rho: f64,
    pub eps: f64,
    pub delta: f64,
    /// Largest finite-time deadline from the initial belief.
    pub deadline: Option<u64>,
    pub episodes: usize,
    pub violation_rate: f64,
    pub override_rate: f64,
    pub mean_discharge_step: Option<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("empty grid")]
    EmptyGrid,
    #[error("invalid grid point: {0}")]
    Range(#[from] MonitorConfigError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// Runs `episodes` episodes per grid point. Every point is validated before
/// any episode runs.
pub fn sweep(s: &Scenario, grid: &SweepGrid, episodes: usize) -> Result<Vec<SweepRow>, SweepError> {
    let configs = grid.configs()?;
    if configs.is_empty() {
        return Err(SweepError::EmptyGrid);
    }
    let mut rows = Vec::with_capacity(configs.len());
    for cfg in configs {
        let point = s.clone().with_monitor_config(cfg)?;
        let batch = run_batch(&point, episodes);
        rows.push(SweepRow {
            gamma: cfg.alpha.gamma(),
            rho: cfg.ft.rho(),
            eps: cfg.ft.eps(),
            delta: cfg.delta,
            deadline: point.initial_deadlines().into_iter().flatten().max(),
            episodes,
            violation_rate: batch.summary.violation_rate(),
            override_rate: batch.summary.override_rate,
            mean_discharge_step: batch.summary.mean_discharge_step,
        });
    }
    Ok(rows)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const SWEEP_HEADER: &str = "gamma,rho,eps,delta,deadline,episodes,violation_rate,override_rate,mean_discharge_step";

pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.gamma,
            r.rho,
            r.eps,
            r.delta,
            opt(r.deadline),
            r.episodes,
            r.violation_rate,
            r.override_rate,
            opt(r.mean_discharge_step)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::sample_site;
    use crate::trace::ShieldMode;

    fn grid(eps: Vec<f64>) -> SweepGrid {
        SweepGrid { gamma: vec![0.5], rho: vec![0.99], eps, delta: vec![1e-3] }
    }

    #[test]
    fn deadline_is_non_increasing_in_eps() {
        let mut s = sample_site(ShieldMode::Literal).build().unwrap();
        s.horizon = 10;
        let rows = sweep(&s, &grid(vec![0.05, 0.1, 0.2, 0.4]), 2).unwrap();
        let deadlines: Vec<u64> = rows.iter().map(|r| r.deadline.unwrap()).collect();
        assert!(deadlines.windows(2).all(|w| w[1] <= w[0]), "{deadlines:?}");
        assert_eq!(deadlines[1], 161);
    }

    #[test]
    fn invalid_points_are_rejected_before_running() {
        let s = sample_site(ShieldMode::Literal).build().unwrap();
        let mut g = grid(vec![0.1]);
        g.rho = vec![0.9, 1.0];
        assert!(matches!(sweep(&s, &g, 1), Err(SweepError::Range(_))));
        g.rho.clear();
        assert!(matches!(sweep(&s, &g, 1), Err(SweepError::EmptyGrid)));
    }

    #[test]
    fn grid_order_is_gamma_major() {
        let g = SweepGrid { gamma: vec![0.1, 0.2], rho: vec![0.5], eps: vec![0.1], delta: vec![0.01, 0.02] };
        let p = g.points();
        assert_eq!(p[0], (0.1, 0.5, 0.1, 0.01));
        assert_eq!(p[1], (0.1, 0.5, 0.1, 0.02));
        assert_eq!(p[2], (0.2, 0.5, 0.1, 0.01));
    }

    #[test]
    fn csv_has_one_row_per_point() {
        let mut s = sample_site(ShieldMode::Literal).build().unwrap();
        s.horizon = 5;
        let text = to_csv(&sweep(&s, &grid(vec![0.1, 0.2]), 1).unwrap());
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], SWEEP_HEADER);
        assert!(lines[1].starts_with("0.5,0.99,0.1,0.001,161,1,"));
    }
}
