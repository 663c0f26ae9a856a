//! Sweep orchestration: every (method, operating point, t_lz, PTRE variant)
//! combination of an [`Experiment`] runs as an independent job on a worker
//! pool, and results are gathered by job key.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ame::evolve_ame;
use crate::coherent::{evolve_schrodinger, p_lz};
use crate::config::{Experiment, Method};
use crate::device::BiasProtocol;
use crate::error::{Error, Result};
use crate::ptre::{evolve_ptre_with, PolaronSpectrum, PtreVariant};

/// One row of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: String,
    pub phi_x: f64,
    #[serde(rename = "delta_GHz")]
    pub delta: f64,
    #[serde(rename = "ip_uA")]
    pub i_p: f64,
    #[serde(rename = "t_lz_ns")]
    pub t_lz: f64,
    pub tau: f64,
    pub p_g: f64,
    pub p_e: f64,
    #[serde(rename = "wall_time_s")]
    pub wall_time: f64,
    pub solver_steps: usize,
}

pub const CSV_HEADER: [&str; 10] =
    ["method", "phi_x", "delta_GHz", "ip_uA", "t_lz_ns", "tau", "p_g", "p_e", "wall_time_s", "solver_steps"];

/// A run that failed; reported next to the records instead of aborting the
/// sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunError {
    pub method: String,
    pub phi_x: f64,
    #[serde(rename = "t_lz_ns")]
    pub t_lz: f64,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentReport {
    pub records: Vec<RunRecord>,
    pub errors: Vec<RunError>,
}

#[derive(Debug, Clone, Copy)]
struct Job {
    method: Method,
    variant: Option<PtreVariant>,
    point: usize,
    t_lz: f64,
}

impl Job {
    fn tag(&self) -> String {
        match self.variant {
            Some(v) => v.tag(),
            None => self.method.tag().to_string(),
        }
    }
}

fn jobs(exp: &Experiment) -> Vec<Job> {
    let mut out = Vec::new();
    for &method in &exp.methods {
        let variants: Vec<Option<PtreVariant>> = match method {
            Method::Ptre => exp.variants.iter().copied().map(Some).collect(),
            _ => vec![None],
        };
        for variant in variants {
            for point in 0..exp.points.len() {
                for &t_lz in &exp.t_lz {
                    out.push(Job { method, variant, point, t_lz });
                }
            }
        }
    }
    out
}

fn spectrum_for(exp: &Experiment, index: usize, variant: &PtreVariant) -> Result<PolaronSpectrum> {
    let point = exp.points[index];
    let (mrt, noise) = variant.apply(&exp.noise, point.i_p)?;
    let eps_max = exp.schedule(index, exp.t_lz[0])?.max_abs_epsilon();
    PolaronSpectrum::new(mrt, &noise, point.i_p, eps_max)
}

fn run_job(
    exp: &Experiment,
    job: &Job,
    spectra: &HashMap<(usize, usize), std::result::Result<PolaronSpectrum, String>>,
) -> Result<RunRecord> {
    let point = exp.points[job.point];
    let schedule = exp.schedule(job.point, job.t_lz)?;
    let start = Instant::now();
    let (p_g, p_e, steps) = match job.method {
        Method::Coherent => {
            let p = p_lz(point.delta, schedule.sweep_velocity())?;
            (1.0 - p, p, 0)
        }
        Method::Schrodinger => {
            let o = evolve_schrodinger(&schedule, &exp.evolve)?;
            (o.p_g, o.p_e, o.steps())
        }
        Method::Ame => {
            let o = evolve_ame(&schedule, &exp.noise, &exp.evolve)?;
            (o.p_g, o.p_e, o.steps())
        }
        Method::Ptre => {
            let variant = job.variant.unwrap_or_default();
            let idx = exp.variants.iter().position(|v| *v == variant).unwrap_or(0);
            let spectrum = match spectra.get(&(job.point, idx)) {
                Some(Ok(s)) => s,
                Some(Err(msg)) => return Err(Error::numeric(format!("polaron spectrum: {msg}"))),
                None => return Err(Error::numeric("polaron spectrum missing")),
            };
            let o = evolve_ptre_with(&schedule, spectrum, &exp.evolve)?;
            (o.p_g, o.p_e, o.steps())
        }
    };
    Ok(RunRecord {
        method: job.tag(),
        phi_x: point.phi_x,
        delta: point.delta,
        i_p: point.i_p,
        t_lz: job.t_lz,
        tau: schedule.dimensionless_time(),
        p_g,
        p_e,
        wall_time: start.elapsed().as_secs_f64(),
        solver_steps: steps,
    })
}

/// Runs every job of the experiment on `exp.parallel` worker threads (0 =
/// one per core). Records come back sorted by (method, phi_x, t_lz) whatever
/// the completion order.
pub fn run_experiment(exp: &Experiment) -> Result<ExperimentReport> {
    if exp.methods.is_empty() || exp.points.is_empty() || exp.t_lz.is_empty() {
        return Err(Error::invalid("experiment has no runs"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(exp.parallel)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;

    let all = jobs(exp);
    log::info!("running {} jobs on {} threads", all.len(), pool.current_num_threads());

    let report = pool.install(|| {
        let keys: Vec<(usize, usize)> = if exp.methods.contains(&Method::Ptre) {
            (0..exp.points.len()).flat_map(|p| (0..exp.variants.len()).map(move |v| (p, v))).collect()
        } else {
            Vec::new()
        };
        let spectra: HashMap<_, _> = keys
            .par_iter()
            .map(|&(p, v)| {
                let s = spectrum_for(exp, p, &exp.variants[v]).map_err(|e| e.to_string());
                ((p, v), s)
            })
            .collect();

        let results: Vec<(Job, Result<RunRecord>)> = all
            .par_iter()
            .map(|job| {
                let r = run_job(exp, job, &spectra);
                match &r {
                    Ok(rec) => log::debug!(
                        "{} phi_x={} t_lz={:.3} p_g={:.6} steps={}",
                        rec.method,
                        rec.phi_x,
                        rec.t_lz,
                        rec.p_g,
                        rec.solver_steps
                    ),
                    Err(e) => log::warn!("{} t_lz={} failed: {e}", job.tag(), job.t_lz),
                }
                (*job, r)
            })
            .collect();

        let mut report = ExperimentReport::default();
        for (job, r) in results {
            match r {
                Ok(rec) => report.records.push(rec),
                Err(e) => report.errors.push(RunError {
                    method: job.tag(),
                    phi_x: exp.points[job.point].phi_x,
                    t_lz: job.t_lz,
                    message: e.to_string(),
                }),
            }
        }
        report
    });
    let mut report = report;
    sort_records(&mut report.records);
    report
        .errors
        .sort_by(|a, b| a.method.cmp(&b.method).then(a.phi_x.total_cmp(&b.phi_x)).then(a.t_lz.total_cmp(&b.t_lz)));
    Ok(report)
}

pub fn sort_records(records: &mut [RunRecord]) {
    records.sort_by(|a, b| a.method.cmp(&b.method).then(a.phi_x.total_cmp(&b.phi_x)).then(a.t_lz.total_cmp(&b.t_lz)));
}

pub fn write_csv<W: Write>(records: &[RunRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(reader: R) -> Result<Vec<RunRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::invalid(format!("unexpected CSV header {header:?}")));
    }
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

/// Writes the records table. An empty record set is rejected before the
/// file is created.
pub fn emit_csv(records: &[RunRecord], path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::invalid("no records to write"));
    }
    write_csv(records, std::fs::File::create(path)?)
}

pub fn emit_errors(errors: &[RunError], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(std::fs::File::create(path)?);
    for e in errors {
        w.serialize(e)?;
    }
    w.flush()?;
    Ok(())
}
