//! Experiment orchestration: parameter sweeps with replications, baseline
//! comparison, and standardized regression over sweep outputs.

pub mod regression;

pub use regression::{standardized_regression, RegressionError, RegressionReport};

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{run_day, RunConfig};
use crate::scenario::Scenario;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("sweep spec invalid: {0}")]
    InvalidSpec(String),
    #[error("csv error: {0}")]
    Csv(String),
    #[error(transparent)]
    Engine(#[from] crate::engine::EngineError),
}

/// Parameter grid with replications. The five swept lists default to the
/// reference ranges; every other knob comes from `base`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SweepSpec {
    pub robots: Vec<u32>,
    pub evaporation_rate: Vec<f64>,
    pub exploitation_rate: Vec<f64>,
    pub unit_size_l: Vec<f64>,
    pub deposits: Vec<u32>,
    pub replications: u32,
    pub base_seed: u64,
    pub parallelism: usize,
    pub base: RunConfig,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            robots: vec![20, 35, 50],
            evaporation_rate: vec![0.05, 0.15, 0.30],
            exploitation_rate: vec![0.6, 0.75, 0.9],
            unit_size_l: vec![6.0, 12.0, 18.0],
            deposits: vec![2, 3, 5],
            replications: 10,
            base_seed: 0,
            parallelism: 0, // 0 = rayon default
            base: RunConfig::default(),
        }
    }
}

/// One executed run.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SweepRow {
    pub robots: u32,
    pub evaporation_rate: f64,
    pub exploitation_rate: f64,
    pub unit_size_l: f64,
    pub deposits: u32,
    pub seed: u64,
    pub aut_pct: Option<f64>,
    pub ftb_pct: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

/// Per-cell aggregate over successful replications.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CellSummary {
    pub robots: u32,
    pub evaporation_rate: f64,
    pub exploitation_rate: f64,
    pub unit_size_l: f64,
    pub deposits: u32,
    pub runs: u32,
    pub failures: u32,
    pub aut_mean: f64,
    pub aut_sd: f64,
    pub ftb_mean: f64,
    pub ftb_sd: f64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        for (name, empty) in [
            ("robots", self.robots.is_empty()),
            ("evaporation_rate", self.evaporation_rate.is_empty()),
            ("exploitation_rate", self.exploitation_rate.is_empty()),
            ("unit_size_l", self.unit_size_l.is_empty()),
            ("deposits", self.deposits.is_empty()),
        ] {
            if empty {
                return Err(ExperimentError::InvalidSpec(format!("{name} list is empty")));
            }
        }
        if self.replications == 0 {
            return Err(ExperimentError::InvalidSpec("replications must be at least 1".into()));
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.robots.len()
            * self.evaporation_rate.len()
            * self.exploitation_rate.len()
            * self.unit_size_l.len()
            * self.deposits.len()
    }

    /// Cells in lexicographic order over (R_n, E_r, X_r, C_w, D_n).
    fn cells(&self) -> Vec<(u32, f64, f64, f64, u32)> {
        let mut cells = Vec::with_capacity(self.cell_count());
        for &r in &self.robots {
            for &e in &self.evaporation_rate {
                for &x in &self.exploitation_rate {
                    for &c in &self.unit_size_l {
                        for &d in &self.deposits {
                            cells.push((r, e, x, c, d));
                        }
                    }
                }
            }
        }
        cells
    }
}

/// Stable seed mixing so per-run seeds do not depend on execution order or
/// hasher internals (splitmix64 steps).
pub fn derive_seed(base: u64, cell: u64, replication: u64) -> u64 {
    fn splitmix64(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    splitmix64(splitmix64(splitmix64(base) ^ cell.wrapping_mul(0x9e37_79b9)) ^ replication)
}

/// Execute the full grid. Results are identical regardless of parallelism
/// degree: each (cell, replication) runs under its own derived seed and rows
/// come back in grid order. Run failures land in their row instead of
/// aborting the sweep.
pub fn run_sweep(spec: &SweepSpec, scenario: &Arc<Scenario>) -> Result<SweepResult, ExperimentError> {
    spec.validate()?;
    let cells = spec.cells();
    let jobs: Vec<(usize, u32)> = cells
        .iter()
        .enumerate()
        .flat_map(|(ci, _)| (0..spec.replications).map(move |rep| (ci, rep)))
        .collect();

    let execute = |&(ci, rep): &(usize, u32)| -> SweepRow {
        let (robots, e_r, x_r, c_w, d_n) = cells[ci];
        let seed = derive_seed(spec.base_seed, ci as u64, rep as u64);
        let config = RunConfig {
            robots,
            evaporation_rate: e_r,
            exploitation_rate: x_r,
            unit_size_l: c_w,
            deposits: d_n,
            seed,
            ..spec.base.clone()
        };
        let mut row = SweepRow {
            robots,
            evaporation_rate: e_r,
            exploitation_rate: x_r,
            unit_size_l: c_w,
            deposits: d_n,
            seed,
            aut_pct: None,
            ftb_pct: None,
            error: None,
        };
        match run_day(&config, scenario) {
            Ok(m) => {
                row.aut_pct = Some(m.aut_pct);
                row.ftb_pct = Some(m.ftb_pct);
            }
            Err(e) => row.error = Some(e.to_string()),
        }
        row
    };

    let rows: Vec<SweepRow> = if spec.parallelism == 1 {
        jobs.iter().map(execute).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(spec.parallelism)
            .build()
            .map_err(|e| ExperimentError::InvalidSpec(e.to_string()))?;
        pool.install(|| jobs.par_iter().map(execute).collect())
    };

    Ok(SweepResult { rows })
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }

    /// Aggregate per cell, preserving grid order.
    pub fn summarize(&self) -> Vec<CellSummary> {
        let mut out: Vec<CellSummary> = Vec::new();
        for row in &self.rows {
            let key = (row.robots, row.evaporation_rate, row.exploitation_rate, row.unit_size_l, row.deposits);
            let cell = match out.iter_mut().find(|c| {
                (c.robots, c.evaporation_rate, c.exploitation_rate, c.unit_size_l, c.deposits) == key
            }) {
                Some(c) => c,
                None => {
                    out.push(CellSummary {
                        robots: row.robots,
                        evaporation_rate: row.evaporation_rate,
                        exploitation_rate: row.exploitation_rate,
                        unit_size_l: row.unit_size_l,
                        deposits: row.deposits,
                        runs: 0,
                        failures: 0,
                        aut_mean: 0.0,
                        aut_sd: 0.0,
                        ftb_mean: 0.0,
                        ftb_sd: 0.0,
                    });
                    out.last_mut().unwrap()
                }
            };
            cell.runs += 1;
            if row.error.is_some() {
                cell.failures += 1;
            }
        }
        for cell in &mut out {
            let (auts, ftbs): (Vec<f64>, Vec<f64>) = self
                .rows
                .iter()
                .filter(|r| {
                    (r.robots, r.evaporation_rate, r.exploitation_rate, r.unit_size_l, r.deposits)
                        == (cell.robots, cell.evaporation_rate, cell.exploitation_rate, cell.unit_size_l, cell.deposits)
                        && r.error.is_none()
                })
                .map(|r| (r.aut_pct.unwrap(), r.ftb_pct.unwrap()))
                .unzip();
            (cell.aut_mean, cell.aut_sd) = mean_sd(&auts);
            (cell.ftb_mean, cell.ftb_sd) = mean_sd(&ftbs);
        }
        out
    }

    /// Write the per-run CSV (one row per run, full parameter tuple).
    pub fn write_csv(&self, mut w: impl Write, header_lines: &[String]) -> std::io::Result<()> {
        for line in header_lines {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "robots,evaporation_rate,exploitation_rate,unit_size_l,deposits,seed,aut_pct,ftb_pct,error")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                r.robots,
                r.evaporation_rate,
                r.exploitation_rate,
                r.unit_size_l,
                r.deposits,
                r.seed,
                r.aut_pct.map_or(String::new(), |v| format!("{v:.12}")),
                r.ftb_pct.map_or(String::new(), |v| format!("{v:.12}")),
                r.error.as_deref().unwrap_or("").replace(',', ";"),
            )?;
        }
        Ok(())
    }

    /// Parse a CSV produced by [`write_csv`] (comment lines skipped).
    pub fn read_csv(reader: impl std::io::Read) -> Result<SweepResult, ExperimentError> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(reader);
        let mut rows = Vec::new();
        for record in rdr.records() {
            let rec = record.map_err(|e| ExperimentError::Csv(e.to_string()))?;
            let field = |i: usize| rec.get(i).unwrap_or("").trim().to_string();
            let parse = |i: usize, name: &str| -> Result<f64, ExperimentError> {
                field(i)
                    .parse()
                    .map_err(|_| ExperimentError::Csv(format!("bad {name} value `{}`", field(i))))
            };
            let opt = |i: usize| -> Option<f64> { field(i).parse().ok() };
            rows.push(SweepRow {
                robots: parse(0, "robots")? as u32,
                evaporation_rate: parse(1, "evaporation_rate")?,
                exploitation_rate: parse(2, "exploitation_rate")?,
                unit_size_l: parse(3, "unit_size_l")?,
                deposits: parse(4, "deposits")? as u32,
                seed: field(5).parse().map_err(|_| ExperimentError::Csv("bad seed".into()))?,
                aut_pct: opt(6),
                ftb_pct: opt(7),
                error: Some(field(8)).filter(|s| !s.is_empty()),
            });
        }
        Ok(SweepResult { rows })
    }
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per-mode statistics in the baseline comparison.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModeStats {
    pub aut_mean: f64,
    pub aut_sd: f64,
    pub ftb_mean: f64,
    pub ftb_sd: f64,
    pub aut: Vec<f64>,
    pub ftb: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BaselineReport {
    pub replications: u32,
    pub mpf: ModeStats,
    pub cpf: ModeStats,
    pub truck: ModeStats,
    /// Two-sided sign-test p-values over paired seeds.
    pub p_mpf_vs_truck_aut: f64,
    pub p_mpf_vs_truck_ftb: f64,
    pub p_mpf_vs_cpf_aut: f64,
    pub p_mpf_vs_cpf_ftb: f64,
}

/// Run MPF, CPF and the truck over paired seeds and compare.
pub fn compare_baselines(
    scenario: &Arc<Scenario>,
    mpf: &RunConfig,
    cpf: &RunConfig,
    truck: &RunConfig,
    replications: u32,
    base_seed: u64,
) -> Result<BaselineReport, ExperimentError> {
    assert!(replications >= 1);
    let run_mode = |config: &RunConfig| -> Result<ModeStats, ExperimentError> {
        let metrics: Result<Vec<_>, _> = (0..replications)
            .into_par_iter()
            .map(|rep| {
                let cfg = RunConfig { seed: derive_seed(base_seed, 0, rep as u64), ..config.clone() };
                run_day(&cfg, scenario)
            })
            .collect();
        let metrics = metrics?;
        let aut: Vec<f64> = metrics.iter().map(|m| m.aut_pct).collect();
        let ftb: Vec<f64> = metrics.iter().map(|m| m.ftb_pct).collect();
        let (aut_mean, aut_sd) = mean_sd(&aut);
        let (ftb_mean, ftb_sd) = mean_sd(&ftb);
        Ok(ModeStats { aut_mean, aut_sd, ftb_mean, ftb_sd, aut, ftb })
    };

    let mpf_stats = run_mode(mpf)?;
    let cpf_stats = run_mode(cpf)?;
    let truck_stats = run_mode(truck)?;

    let report = BaselineReport {
        replications,
        p_mpf_vs_truck_aut: sign_test(&mpf_stats.aut, &truck_stats.aut),
        p_mpf_vs_truck_ftb: sign_test(&mpf_stats.ftb, &truck_stats.ftb),
        p_mpf_vs_cpf_aut: sign_test(&mpf_stats.aut, &cpf_stats.aut),
        p_mpf_vs_cpf_ftb: sign_test(&mpf_stats.ftb, &cpf_stats.ftb),
        mpf: mpf_stats,
        cpf: cpf_stats,
        truck: truck_stats,
    };
    Ok(report)
}

/// Two-sided sign test over paired observations; ties are discarded.
pub fn sign_test(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut n = 0u32;
    let mut wins = 0u32;
    for (&x, &y) in a.iter().zip(b) {
        if x < y {
            wins += 1;
            n += 1;
        } else if x > y {
            n += 1;
        }
    }
    if n == 0 {
        return 1.0;
    }
    let k = wins.max(n - wins);
    // P(|Bin(n, 0.5) - n/2| >= |k - n/2|), two-sided.
    let tail: f64 = (k..=n).map(|i| binom_pmf(n, i)).sum();
    (2.0 * tail).min(1.0)
}

fn binom_pmf(n: u32, k: u32) -> f64 {
    let mut log = 0.0f64;
    for i in 0..k {
        log += ((n - i) as f64).ln() - ((i + 1) as f64).ln();
    }
    (log + n as f64 * 0.5f64.ln()).exp()
}
