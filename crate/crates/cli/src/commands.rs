//! Subcommand implementations. Workers compute in parallel; every file is
//! written afterwards from the calling thread.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use mfcache::simulate::Band;
use mfcache::solver::io::{read_grid, write_csv, write_grid};
use mfcache::{aggregate, run_replications, solve_mfe, IpiModel, MfeSolution, PolicyField, PolicyKind, Summary};
use rayon::prelude::*;

use crate::config::ConfigDoc;
use crate::error::{CliError, CliResult};
use crate::manifest::Manifest;
use crate::scenario::{ContentPlan, Scenario};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Also export full `(t, x, Q, value)` surfaces as CSV.
    pub surface_csv: bool,
    /// Worker count recorded in the manifest.
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct SolveRecord {
    pub name: String,
    pub solution: MfeSolution,
    pub hjb_residual: f64,
}

#[derive(Debug, Clone)]
pub struct PolicyRun {
    pub content: String,
    /// Initial popularity of the content.
    pub x0: f64,
    pub policy: String,
    pub imperfect: bool,
    pub summary: Summary,
}

impl PolicyRun {
    pub fn information(&self) -> &'static str {
        if self.imperfect {
            "imperfect"
        } else {
            "perfect"
        }
    }
}

pub fn content_dir(out: &Path, name: &str) -> PathBuf {
    out.join(format!("content_{name}"))
}

/// Solves the equilibrium of every content in parallel.
pub fn solve_contents(scn: &Scenario) -> CliResult<Vec<SolveRecord>> {
    scn.contents
        .par_iter()
        .map(|plan| {
            let m0 = plan.initial.discretize(&plan.lattice)?;
            let solution = solve_mfe(&plan.lattice, &plan.solver, &m0)?;
            let hjb_residual = solution.hjb_residual(&plan.solver)?;
            log::info!(
                "content {}: converged in {} iterations, LRA {:.6}",
                plan.name,
                solution.iterations,
                solution.lra_cost()
            );
            Ok(SolveRecord {
                name: plan.name.clone(),
                solution,
                hjb_residual,
            })
        })
        .collect()
}

fn policy_kind(name: &str, mf: Option<&Arc<PolicyField>>) -> CliResult<PolicyKind> {
    match name {
        "mf" => mf
            .cloned()
            .map(PolicyKind::MeanField)
            .ok_or_else(|| CliError::MissingArtifact("mean-field policy grid not available".into())),
        "baseline" => Ok(PolicyKind::Baseline),
        "random" => Ok(PolicyKind::UniformRandom { seed: 0 }),
        other => Err(CliError::Config(format!("unknown policy `{other}`"))),
    }
}

/// Runs every requested policy on every content, under perfect and, when
/// configured, imperfect popularity information.
pub fn simulate_contents(scn: &Scenario, mf: &BTreeMap<String, Arc<PolicyField>>) -> CliResult<Vec<PolicyRun>> {
    let mut runs = Vec::new();
    for plan in &scn.contents {
        for policy in &scn.policies {
            let kind = policy_kind(policy, mf.get(&plan.name))?;
            let mut infos = vec![(false, IpiModel::perfect())];
            if let Some(ipi) = scn.ipi {
                infos.push((true, ipi));
            }
            for (imperfect, ipi) in infos {
                let ledgers = run_replications(&plan.sim, &kind, &ipi)?;
                runs.push(PolicyRun {
                    content: plan.name.clone(),
                    x0: plan.sim.initial_popularity,
                    policy: policy.clone(),
                    imperfect,
                    summary: aggregate(&ledgers)?,
                });
            }
        }
    }
    Ok(runs)
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn write_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(err: csv::Error) -> CliError {
    match err.into_kind() {
        csv::ErrorKind::Io(io) => CliError::Io(io),
        other => CliError::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

fn band_cells(b: &Band) -> [String; 3] {
    [num(b.mean), num(b.lo), num(b.hi)]
}

/// Writes grids and per-content CSVs of a solve; returns the written paths.
pub fn write_solve(out: &Path, records: &[SolveRecord], opts: &RunOptions) -> CliResult<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut summary = Vec::new();
    for rec in records {
        let dir = content_dir(out, &rec.name);
        std::fs::create_dir_all(&dir)?;
        let sol = &rec.solution;
        let lat = *sol.lattice();
        for (name, field) in [("value", &sol.value), ("density", &sol.density), ("policy", &sol.policy)] {
            let path = dir.join(format!("{name}.grid"));
            write_grid(&path, field, name)?;
            written.push(path);
            if opts.surface_csv {
                let path = dir.join(format!("{name}.csv"));
                write_csv(&path, field)?;
                written.push(path);
            }
        }

        let mut marginal = Vec::with_capacity((lat.nt + 1) * lat.nq);
        let mut means = Vec::with_capacity(lat.nt + 1);
        for n in 0..=lat.nt {
            for (k, d) in sol.storage_marginal(n).into_iter().enumerate() {
                marginal.push(vec![num(lat.t(n)), num(lat.q(k)), num(d)]);
            }
            means.push(vec![
                num(lat.t(n)),
                num(sol.mean_policy(n)),
                num(sol.storage_mean(n)),
                num(sol.overlap[n]),
            ]);
        }
        let path = dir.join("density_q_marginal.csv");
        write_rows(&path, &["t", "q", "density"], &marginal)?;
        written.push(path);
        let path = dir.join("policy_mean.csv");
        write_rows(&path, &["t", "mean_policy", "storage_mean", "overlap"], &means)?;
        written.push(path);
        let iters: Vec<_> = sol
            .residuals
            .iter()
            .enumerate()
            .map(|(i, r)| vec![(i + 1).to_string(), num(*r)])
            .collect();
        let path = dir.join("iterations.csv");
        write_rows(&path, &["iteration", "policy_change"], &iters)?;
        written.push(path);

        summary.push(vec![
            rec.name.clone(),
            sol.iterations.to_string(),
            num(sol.lra_cost()),
            num(rec.hjb_residual),
            num(sol.max_mass_drift),
            num(sol.min_density),
            lat.nt.to_string(),
            lat.nx.to_string(),
            lat.nq.to_string(),
        ]);
    }
    let path = out.join("solve.csv");
    write_rows(
        &path,
        &["content", "iterations", "lra", "hjb_residual", "max_mass_drift", "min_density", "nt", "nx", "nq"],
        &summary,
    )?;
    written.push(path);
    Ok(written)
}

fn run_file_stem(run: &PolicyRun) -> String {
    if run.imperfect {
        format!("lra_{}_ipi", run.policy)
    } else {
        format!("lra_{}", run.policy)
    }
}

pub fn write_simulate(out: &Path, runs: &[PolicyRun]) -> CliResult<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut per_content: BTreeMap<&str, Vec<&PolicyRun>> = BTreeMap::new();
    for run in runs {
        per_content.entry(run.content.as_str()).or_default().push(run);
    }
    for (content, runs) in &per_content {
        let dir = content_dir(out, content);
        std::fs::create_dir_all(&dir)?;
        let mut overlap = Vec::new();
        for run in runs {
            let s = &run.summary;
            let rows: Vec<_> = s
                .times
                .iter()
                .zip(&s.lra)
                .map(|(t, b)| {
                    let [m, lo, hi] = band_cells(b);
                    vec![num(*t), m, lo, hi]
                })
                .collect();
            let path = dir.join(format!("{}.csv", run_file_stem(run)));
            write_rows(&path, &["t", "mean", "lo", "hi"], &rows)?;
            written.push(path);
            let [m, lo, hi] = band_cells(&s.overlap);
            overlap.push(vec![num(run.x0), run.policy.clone(), run.information().into(), m, lo, hi]);
        }
        let path = dir.join("overlap.csv");
        write_rows(&path, &["x0", "policy", "information", "mean", "lo", "hi"], &overlap)?;
        written.push(path);
    }

    let rows: Vec<_> = runs.iter().map(sim_row).collect();
    let path = out.join("simulate.csv");
    let mut header = vec!["content", "policy", "information"];
    header.extend(SIM_COLUMNS);
    write_rows(&path, &header, &rows)?;
    written.push(path);

    let increments: Vec<_> = runs
        .iter()
        .filter(|r| r.imperfect)
        .filter_map(|ipi| {
            let ppi = runs
                .iter()
                .find(|r| !r.imperfect && r.content == ipi.content && r.policy == ipi.policy)?;
            let (a, b) = (ppi.summary.final_lra().mean, ipi.summary.final_lra().mean);
            Some(vec![ipi.content.clone(), ipi.policy.clone(), num(a), num(b), num(b - a)])
        })
        .collect();
    if !increments.is_empty() {
        let path = out.join("ipi_increment.csv");
        write_rows(&path, &["content", "policy", "ppi_lra", "ipi_lra", "increment"], &increments)?;
        written.push(path);
    }
    Ok(written)
}

const SIM_COLUMNS: [&str; 7] = [
    "final_lra_mean",
    "final_lra_lo",
    "final_lra_hi",
    "overlap_mean",
    "overlap_lo",
    "overlap_hi",
    "replications",
];

fn sim_row(run: &PolicyRun) -> Vec<String> {
    let mut row = vec![run.content.clone(), run.policy.clone(), run.information().into()];
    row.extend(band_cells(&run.summary.final_lra()));
    row.extend(band_cells(&run.summary.overlap));
    row.push(run.summary.replications.to_string());
    row
}

fn mf_fields(records: &[SolveRecord]) -> BTreeMap<String, Arc<PolicyField>> {
    records
        .iter()
        .map(|r| (r.name.clone(), Arc::new(r.solution.policy.clone())))
        .collect()
}

/// Loads the policy grids a previous solve left in `out`.
pub fn load_mf_fields(out: &Path, scn: &Scenario) -> CliResult<BTreeMap<String, Arc<PolicyField>>> {
    scn.contents
        .iter()
        .map(|plan: &ContentPlan| {
            let path = content_dir(out, &plan.name).join("policy.grid");
            if !path.exists() {
                return Err(CliError::MissingArtifact(format!(
                    "{} not found; run `solve` with the same --out first",
                    path.display()
                )));
            }
            let (_, field) = read_grid(&path)?;
            if *field.lattice() != plan.lattice {
                return Err(CliError::MissingArtifact(format!(
                    "{} was solved on a different lattice; rerun `solve`",
                    path.display()
                )));
            }
            Ok((plan.name.clone(), Arc::new(field)))
        })
        .collect()
}

pub fn cmd_solve(doc: &ConfigDoc, out: &Path, opts: &RunOptions) -> CliResult<()> {
    let started = Instant::now();
    let cfg = doc.resolve()?;
    let scn = Scenario::build(&cfg)?;
    let records = solve_contents(&scn)?;
    std::fs::create_dir_all(out)?;
    let written = write_solve(out, &records, opts)?;
    Manifest::new("solve", doc, &scn, opts, started).write(out, &written)
}

pub fn cmd_simulate(doc: &ConfigDoc, out: &Path, opts: &RunOptions) -> CliResult<()> {
    let started = Instant::now();
    let cfg = doc.resolve()?;
    let scn = Scenario::build(&cfg)?;
    let mf = if cfg.wants("mf") {
        load_mf_fields(out, &scn)?
    } else {
        BTreeMap::new()
    };
    let runs = simulate_contents(&scn, &mf)?;
    std::fs::create_dir_all(out)?;
    let written = write_simulate(out, &runs)?;
    Manifest::new("simulate", doc, &scn, opts, started).write(out, &written)
}

/// One point of a sweep: the swept values, the solves, and any simulations.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub values: Vec<f64>,
    pub solves: Vec<SolveRecord>,
    pub runs: Vec<PolicyRun>,
}

/// Solves and simulates one document without touching the filesystem.
pub fn run_point(doc: &ConfigDoc) -> CliResult<(Scenario, Vec<SolveRecord>, Vec<PolicyRun>)> {
    let scn = Scenario::build(&doc.resolve()?)?;
    let solves = solve_contents(&scn)?;
    let runs = if scn.policies.is_empty() {
        Vec::new()
    } else {
        simulate_contents(&scn, &mf_fields(&solves))?
    };
    Ok((scn, solves, runs))
}

/// Cartesian product of the axes, first axis slowest.
pub fn sweep_grid(axes: &[(String, Vec<f64>)]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |acc, (_, values)| {
        acc.iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(*v);
                    p
                })
            })
            .collect()
    })
}

/// Sweep axes: the explicit key and values when given, otherwise the
/// document's `[[sweep]]` tables.
pub fn sweep_axes(doc: &ConfigDoc, key: Option<&str>, values: Option<&[f64]>) -> CliResult<Vec<(String, Vec<f64>)>> {
    match (key, values) {
        (Some(k), v) => Ok(vec![(k.to_owned(), v.unwrap_or_default().to_vec())]),
        (None, Some(_)) => Err(CliError::Config("--values needs --key".into())),
        (None, None) => {
            let cfg = doc.resolve()?;
            if cfg.sweep.is_empty() {
                return Err(CliError::Config("no sweep axes: pass --key/--values or add [[sweep]] tables".into()));
            }
            Ok(cfg.sweep.into_iter().map(|a| (a.key, a.values)).collect())
        }
    }
}

pub fn cmd_sweep(doc: &ConfigDoc, out: &Path, axes: &[(String, Vec<f64>)], opts: &RunOptions) -> CliResult<Vec<SweepPoint>> {
    let started = Instant::now();
    let base = doc.without_sweep();
    if axes.iter().any(|(_, v)| v.is_empty()) {
        log::warn!("sweep has an empty value list; nothing to do");
        return Ok(Vec::new());
    }
    // Reject unknown keys before any work starts.
    for (key, values) in axes {
        base.clone().set(key, values[0])?;
    }
    std::fs::create_dir_all(out)?;
    let mut points = Vec::new();
    let mut rows = Vec::new();
    let mut written = Vec::new();
    for (idx, values) in sweep_grid(axes).into_iter().enumerate() {
        let mut point_doc = base.clone();
        for ((key, _), v) in axes.iter().zip(&values) {
            point_doc.set(key, *v)?;
        }
        let point_started = Instant::now();
        let (scn, solves, runs) = run_point(&point_doc)?;
        let dir = out.join(format!("point_{idx:03}"));
        std::fs::create_dir_all(&dir)?;
        let mut files = write_solve(&dir, &solves, opts)?;
        if !runs.is_empty() {
            files.extend(write_simulate(&dir, &runs)?);
        }
        Manifest::new("sweep-point", &point_doc, &scn, opts, point_started).write(&dir, &files)?;
        written.extend(files);

        let keyed: Vec<String> = values.iter().map(|v| num(*v)).collect();
        for rec in &solves {
            let head = |row: &mut Vec<String>| {
                row.extend(keyed.iter().cloned());
                row.push(rec.name.clone());
                row.push(rec.solution.iterations.to_string());
                row.push(num(rec.solution.lra_cost()));
            };
            let mine: Vec<_> = runs.iter().filter(|r| r.content == rec.name).collect();
            if mine.is_empty() {
                let mut row = Vec::new();
                head(&mut row);
                row.extend(std::iter::repeat_n(String::new(), 2 + SIM_COLUMNS.len()));
                rows.push(row);
            }
            for run in mine {
                let mut row = Vec::new();
                head(&mut row);
                row.extend(sim_row(run).into_iter().skip(1));
                rows.push(row);
            }
        }
        points.push(SweepPoint { values, solves, runs });
    }
    let mut header: Vec<&str> = axes.iter().map(|(k, _)| k.as_str()).collect();
    header.extend(["content", "iterations", "solver_lra", "policy", "information"]);
    header.extend(SIM_COLUMNS);
    let path = out.join("sweep.csv");
    write_rows(&path, &header, &rows)?;
    written.push(path);
    let scn = Scenario::build(&base.resolve()?)?;
    Manifest::new("sweep", doc, &scn, opts, started).write(out, &written)?;
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_cartesian_first_axis_slowest() {
        let axes = vec![("a".to_owned(), vec![1.0, 2.0]), ("b".to_owned(), vec![10.0, 20.0, 30.0])];
        let g = sweep_grid(&axes);
        assert_eq!(g.len(), 6);
        assert_eq!(g[0], vec![1.0, 10.0]);
        assert_eq!(g[1], vec![1.0, 20.0]);
        assert_eq!(g[5], vec![2.0, 30.0]);
    }

    #[test]
    fn axes_prefer_explicit_key() {
        let doc = ConfigDoc::preset("fig3").unwrap();
        let axes = sweep_axes(&doc, Some("radio.user_density_per_m2"), Some(&[1e-4])).unwrap();
        assert_eq!(axes.len(), 1);
        assert_eq!(sweep_axes(&doc, None, None).unwrap().len(), 2);
        let plain = ConfigDoc::preset("fig7").unwrap();
        assert!(sweep_axes(&plain, None, None).is_err());
    }
}
