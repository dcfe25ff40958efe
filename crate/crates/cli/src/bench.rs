//! Synthetic benchmark grid over banded instances.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use seriation::generators::{gen_banded, BandedInstance};

use crate::metrics::{mean_std, score};
use crate::solve::{self, LossName, SolverName};

/// Bandwidth as an integer or a rule `"n/k"`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeltaRule {
    Fixed(usize),
    Rule(String),
}

impl DeltaRule {
    pub fn resolve(&self, n: usize) -> Result<usize, String> {
        match self {
            DeltaRule::Fixed(d) => Ok(*d),
            DeltaRule::Rule(r) => {
                let k = r
                    .strip_prefix("n/")
                    .and_then(|k| k.trim().parse::<usize>().ok())
                    .filter(|&k| k > 0)
                    .ok_or_else(|| format!("bandwidth rule `{r}` is not of the form n/k"))?;
                Ok((n / k).max(1))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSpec {
    pub n: Vec<usize>,
    pub delta: Vec<DeltaRule>,
    pub s_ratio: Vec<f64>,
    pub solvers: Vec<SolverName>,
    /// Losses for the solvers that take one; others run once.
    #[serde(default = "default_losses")]
    pub losses: Vec<LossName>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    /// Master seed; the global `--seed` when absent.
    pub seed: Option<u64>,
    #[serde(default)]
    pub dist2r: bool,
    /// Long-format CSV; the summary goes next to it with a `_summary` stem suffix.
    pub output: PathBuf,
}

fn default_losses() -> Vec<LossName> {
    vec![LossName::Huber]
}

fn default_repetitions() -> usize {
    20
}

impl BenchmarkSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.repetitions == 0 {
            return Err("repetitions must be at least 1".into());
        }
        if self.n.is_empty() || self.delta.is_empty() || self.s_ratio.is_empty() || self.solvers.is_empty() {
            return Err("n, delta, s_ratio and solvers must be nonempty".into());
        }
        if self.losses.is_empty() && self.solvers.iter().any(|s| s.takes_loss()) {
            return Err("losses must be nonempty".into());
        }
        for &n in &self.n {
            for d in &self.delta {
                d.resolve(n)?;
            }
        }
        Ok(())
    }

    pub fn summary_path(&self) -> PathBuf {
        let stem = self.output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        self.output.with_file_name(format!("{stem}_summary.csv"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub delta: usize,
    pub s_ratio: f64,
    /// Out-of-band symmetric pairs.
    pub s: Option<usize>,
    pub rep: usize,
    pub seed: u64,
    pub solver: SolverName,
    pub loss: String,
    pub kendall_tau: Option<f64>,
    pub two_sum: Option<f64>,
    pub r2sum: Option<f64>,
    pub huber: Option<f64>,
    pub dist2r: Option<f64>,
    pub elapsed_s: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n: usize,
    pub delta: usize,
    pub s_ratio: f64,
    pub solver: SolverName,
    pub loss: String,
    pub runs: usize,
    pub failures: usize,
    pub kendall_tau_mean: Option<f64>,
    pub kendall_tau_std: Option<f64>,
    pub two_sum_mean: Option<f64>,
    pub two_sum_std: Option<f64>,
    pub r2sum_mean: Option<f64>,
    pub r2sum_std: Option<f64>,
    pub huber_mean: Option<f64>,
    pub huber_std: Option<f64>,
    pub dist2r_mean: Option<f64>,
    pub dist2r_std: Option<f64>,
}

struct Instance {
    n: usize,
    delta: usize,
    s_ratio: f64,
    rep: usize,
    seed: u64,
}

/// Instances in grid order; instance `k` uses seed `master + k`.
fn instances(spec: &BenchmarkSpec, master: u64) -> Vec<Instance> {
    let mut out = Vec::new();
    for &n in &spec.n {
        for rule in &spec.delta {
            let delta = rule.resolve(n).expect("validated");
            for &s_ratio in &spec.s_ratio {
                for rep in 0..spec.repetitions {
                    let seed = master.wrapping_add(out.len() as u64);
                    out.push(Instance { n, delta, s_ratio, rep, seed });
                }
            }
        }
    }
    out
}

/// `(solver, loss)` pairs run on every instance.
fn methods(spec: &BenchmarkSpec) -> Vec<(SolverName, Option<LossName>)> {
    let mut out = Vec::new();
    for &solver in &spec.solvers {
        if solver.takes_loss() {
            out.extend(spec.losses.iter().map(|&l| (solver, Some(l))));
        } else {
            out.push((solver, None));
        }
    }
    out
}

fn run_cell(
    inst: &Instance,
    generated: &Result<BandedInstance<f64>, String>,
    solver: SolverName,
    loss: Option<LossName>,
    dist2r: bool,
    timing: bool,
) -> BenchRow {
    let mut row = BenchRow {
        n: inst.n,
        delta: inst.delta,
        s_ratio: inst.s_ratio,
        s: None,
        rep: inst.rep,
        seed: inst.seed,
        solver,
        loss: String::new(),
        kendall_tau: None,
        two_sum: None,
        r2sum: None,
        huber: None,
        dist2r: None,
        elapsed_s: None,
        error: None,
    };
    let g = match generated {
        Ok(g) => g,
        Err(e) => {
            row.error = Some(e.clone());
            return row;
        }
    };
    row.s = Some(g.s);
    let started = Instant::now();
    let result = solve::run(&g.a, solver, loss.unwrap_or(LossName::TwoSum), None, None).and_then(|report| {
        row.loss = report.kind.name().to_string();
        score(&g.a, &report.permutation, Some(&g.truth), g.delta, dist2r)
    });
    if timing {
        row.elapsed_s = Some(started.elapsed().as_secs_f64());
    }
    match result {
        Ok(sc) => {
            row.kendall_tau = sc.kendall_tau;
            row.two_sum = Some(sc.two_sum);
            row.r2sum = Some(sc.r2sum);
            row.huber = Some(sc.huber);
            row.dist2r = sc.dist2r;
        }
        Err(e) => {
            if row.loss.is_empty() {
                row.loss = loss.map_or("", |l| l.kind(1).name()).to_string();
            }
            row.error = Some(e.to_string());
        }
    }
    row
}

/// Runs every cell of the grid. Rows come back in grid order whatever the
/// thread count. `progress` is called once per finished cell.
pub fn run(spec: &BenchmarkSpec, master: u64, timing: bool, progress: &(dyn Fn(usize, usize) + Sync)) -> Vec<BenchRow> {
    let insts = instances(spec, master);
    let generated: Vec<Result<BandedInstance<f64>, String>> =
        insts.par_iter().map(|i| gen_banded(i.n, i.delta, i.s_ratio, i.seed).map_err(|e| e.to_string())).collect();
    let methods = methods(spec);
    let cells: Vec<(usize, SolverName, Option<LossName>)> =
        (0..insts.len()).flat_map(|k| methods.iter().map(move |&(s, l)| (k, s, l))).collect();
    let total = cells.len();
    let done = std::sync::atomic::AtomicUsize::new(0);
    cells
        .par_iter()
        .map(|&(k, solver, loss)| {
            let row = run_cell(&insts[k], &generated[k], solver, loss, spec.dist2r, timing);
            progress(done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1, total);
            row
        })
        .collect()
}

/// Mean and standard deviation per `(n, δ, s_ratio, solver, loss)` over the
/// rows without errors, in first-appearance order.
pub fn summarize(rows: &[BenchRow]) -> Vec<SummaryRow> {
    let mut order = Vec::new();
    let mut groups: BTreeMap<usize, Vec<&BenchRow>> = BTreeMap::new();
    for r in rows {
        let key = order.iter().position(|o: &&BenchRow| {
            o.n == r.n && o.delta == r.delta && o.s_ratio == r.s_ratio && o.solver == r.solver && o.loss == r.loss
        });
        let key = key.unwrap_or_else(|| {
            order.push(r);
            order.len() - 1
        });
        groups.entry(key).or_default().push(r);
    }
    groups
        .into_values()
        .map(|g| {
            let ok: Vec<&BenchRow> = g.iter().copied().filter(|r| r.error.is_none()).collect();
            let stat = |f: fn(&BenchRow) -> Option<f64>| mean_std(&ok.iter().filter_map(|r| f(r)).collect::<Vec<_>>());
            let (tau, two, r2, hub, d2r) = (
                stat(|r| r.kendall_tau),
                stat(|r| r.two_sum),
                stat(|r| r.r2sum),
                stat(|r| r.huber),
                stat(|r| r.dist2r),
            );
            let first = g[0];
            SummaryRow {
                n: first.n,
                delta: first.delta,
                s_ratio: first.s_ratio,
                solver: first.solver,
                loss: first.loss.clone(),
                runs: g.len(),
                failures: g.len() - ok.len(),
                kendall_tau_mean: tau.map(|m| m.0),
                kendall_tau_std: tau.map(|m| m.1),
                two_sum_mean: two.map(|m| m.0),
                two_sum_std: two.map(|m| m.1),
                r2sum_mean: r2.map(|m| m.0),
                r2sum_std: r2.map(|m| m.1),
                huber_mean: hub.map(|m| m.0),
                huber_std: hub.map(|m| m.1),
                dist2r_mean: d2r.map(|m| m.0),
                dist2r_std: d2r.map(|m| m.1),
            }
        })
        .collect()
}
