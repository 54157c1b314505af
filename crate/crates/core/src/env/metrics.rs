//! Per-step traces and the summary table over evaluated days.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ShieldMode;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub e: Vec<f64>,
    pub e_next: Vec<f64>,
    pub net_load: f64,
    pub proposed: Vec<f64>,
    pub safe: Vec<f64>,
    pub correction: f64,
    pub cost: f64,
    pub penalty: f64,
    pub reward: f64,
    pub violation: f64,
    pub shield_time: f64,
    pub overlap: f64,
    pub balance_residual: f64,
    pub target_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub day: usize,
    pub seed: u64,
    pub mode: ShieldMode,
    pub records: Vec<StepRecord>,
    /// Reason the episode stopped early, if it did.
    pub aborted: Option<String>,
}

impl EpisodeTrace {
    pub fn new(day: usize, seed: u64, mode: ShieldMode) -> Self {
        EpisodeTrace {
            day,
            seed,
            mode,
            records: Vec::new(),
            aborted: None,
        }
    }

    pub fn total_cost(&self) -> f64 {
        self.records.iter().map(|r| r.cost).sum()
    }

    pub fn total_penalty(&self) -> f64 {
        self.records.iter().map(|r| r.penalty).sum()
    }

    pub fn max_violation(&self) -> f64 {
        self.records.iter().map(|r| r.violation).fold(f64::NEG_INFINITY, f64::max)
    }

    /// One row per step; storage and action vectors are spread over columns.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let n = self.records.first().map_or(0, |r| r.e.len());
        let k = self.records.first().map_or(0, |r| r.safe.len());
        let mut header: Vec<String> = vec!["day".into(), "t".into()];
        header.extend((1..=n).map(|i| format!("e_{i}")));
        header.push("net_load".into());
        header.extend((1..=k).map(|i| format!("a_{i}")));
        header.extend((1..=k).map(|i| format!("u_{i}")));
        header.extend(
            [
                "correction",
                "cost",
                "penalty",
                "reward",
                "violation",
                "shield_time",
                "overlap",
                "balance_residual",
                "target_distance",
            ]
            .map(String::from),
        );
        w.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![self.day.to_string(), r.t.to_string()];
            row.extend(r.e.iter().map(f64::to_string));
            row.push(r.net_load.to_string());
            row.extend(r.proposed.iter().map(f64::to_string));
            row.extend(r.safe.iter().map(f64::to_string));
            row.extend(
                [
                    r.correction,
                    r.cost,
                    r.penalty,
                    r.reward,
                    r.violation,
                    r.shield_time,
                    r.overlap,
                    r.balance_residual,
                ]
                .iter()
                .map(f64::to_string),
            );
            row.push(r.target_distance.map_or_else(String::new, |d| d.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub const METRIC_NAMES: [&str; 7] = [
    "max exec time",
    "mean exec time",
    "min charge state",
    "max charge state",
    "max safety violation",
    "mean cost/day",
    "mean penalty/day",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub max_exec_time: f64,
    pub mean_exec_time: f64,
    pub min_charge_state: f64,
    pub max_charge_state: f64,
    pub max_safety_violation: f64,
    pub mean_cost_per_day: f64,
    pub mean_penalty_per_day: f64,
    pub days: usize,
    pub steps: usize,
    pub aborted_days: Vec<usize>,
    pub max_overlap: f64,
    pub max_balance_residual: f64,
}

impl Metrics {
    pub fn from_traces(traces: &[EpisodeTrace]) -> Self {
        let mut m = Metrics {
            max_exec_time: 0.0,
            mean_exec_time: 0.0,
            min_charge_state: f64::INFINITY,
            max_charge_state: f64::NEG_INFINITY,
            max_safety_violation: f64::NEG_INFINITY,
            mean_cost_per_day: 0.0,
            mean_penalty_per_day: 0.0,
            days: traces.len(),
            steps: 0,
            aborted_days: Vec::new(),
            max_overlap: 0.0,
            max_balance_residual: 0.0,
        };
        let mut time_sum = 0.0;
        for tr in traces {
            if tr.aborted.is_some() {
                m.aborted_days.push(tr.day);
            }
            for r in &tr.records {
                m.steps += 1;
                time_sum += r.shield_time;
                m.max_exec_time = m.max_exec_time.max(r.shield_time);
                for &e in r.e.iter().chain(&r.e_next) {
                    m.min_charge_state = m.min_charge_state.min(e);
                    m.max_charge_state = m.max_charge_state.max(e);
                }
                m.max_safety_violation = m.max_safety_violation.max(r.violation);
                m.max_overlap = m.max_overlap.max(r.overlap);
                m.max_balance_residual = m.max_balance_residual.max(r.balance_residual.abs());
            }
            m.mean_cost_per_day += tr.total_cost();
            m.mean_penalty_per_day += tr.total_penalty();
        }
        if m.steps > 0 {
            m.mean_exec_time = time_sum / m.steps as f64;
        }
        if !traces.is_empty() {
            m.mean_cost_per_day /= traces.len() as f64;
            m.mean_penalty_per_day /= traces.len() as f64;
        }
        m
    }

    pub fn values(&self) -> [f64; 7] {
        [
            self.max_exec_time,
            self.mean_exec_time,
            self.min_charge_state,
            self.max_charge_state,
            self.max_safety_violation,
            self.mean_cost_per_day,
            self.mean_penalty_per_day,
        ]
    }

    pub fn rows(&self) -> Vec<(&'static str, f64)> {
        METRIC_NAMES.iter().copied().zip(self.values()).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["metric", "value"])?;
        for (name, v) in self.rows() {
            w.write_record([name, &v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for (name, v) in self.rows() {
            let _ = writeln!(out, "{name:<22}{v:>14.6}");
        }
        let _ = writeln!(out, "{:<22}{:>14}", "days", self.days);
        if !self.aborted_days.is_empty() {
            let _ = writeln!(out, "{:<22}{:>14?}", "aborted days", self.aborted_days);
        }
        out
    }
}
