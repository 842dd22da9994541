//! Coupling sweeps: one analysis per coupling value, fanned out over a
//! worker pool, with every output file written by a single writer.

use std::path::{Path, PathBuf};
use std::sync::mpsc;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use csgi_core::ccm::{ccm_pair, CcmResult};
use csgi_core::dynsys::{self, CouplingSchedule, SimOutput};
use csgi_core::slgc::slgc_pair;
use csgi_core::stats::derive_seed;
use csgi_core::te::{te_pair, TeEstimate};
use csgi_core::{CsgiTimecourse, TimeSeries};
use csgi_taci::{evaluate_pair, save_model_set, train_pair, TaciModelSet};

use crate::config::{ExperimentConfig, MethodConfig, SystemConfig};
use crate::error::{PipelineError, Result};
use crate::ingest::ingest_csv;
use crate::svg::{line_plot, PlotSeries};

/// Environment variable setting the worker-pool size.
pub const WORKERS_ENV: &str = "CSGI_WORKERS";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

/// Value and spread of one direction at one sweep point: mean χ and pooled
/// bootstrap std (TACI, SLGC), skill at the largest library and replicate
/// std (CCM), or corrected TE and shuffle std (TE).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub value: f64,
    pub std: f64,
}

/// Per-point detail kept in memory and written to disk.
#[derive(Debug, Clone, PartialEq)]
pub enum PointDetail {
    Timecourse(CsgiTimecourse),
    Ccm(CcmResult),
    Te(TeEstimate, TeEstimate),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub index: usize,
    pub coupling: Option<f64>,
    pub sim_seed: Option<u64>,
    pub method_seed: u64,
    /// Ground-truth schedules on output indices, for simulated systems.
    pub truth: Vec<(String, Vec<(usize, f64)>)>,
    pub xy: Summary,
    pub yx: Summary,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepManifest {
    pub manifest_version: u32,
    pub tool_version: String,
    /// SHA-256 of the config file text.
    pub config_sha256: String,
    pub config: ExperimentConfig,
    /// Fully resolved TACI hyperparameters, for TACI runs.
    pub taci_config: Option<csgi_taci::TaciConfig>,
    pub points: Vec<PointRecord>,
    /// SHA-256 of every emitted file except this manifest.
    pub files: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub output_dir: PathBuf,
    pub points: Vec<PointRecord>,
    pub details: Vec<PointDetail>,
}

/// Simulate `system` at coupling `c`. Not defined for recorded data.
pub fn simulate_system(system: &SystemConfig, c: f64, seed: u64) -> Result<SimOutput> {
    let out = match system {
        SystemConfig::RosslerLorenz { n, burn_in, dt, .. } => dynsys::simulate_rossler_lorenz(c, *n, *burn_in, *dt, seed)?,
        SystemConfig::TwoSpecies { n, burn_in, .. } => dynsys::simulate_two_species(c, *n, *burn_in, seed)?,
        SystemConfig::CoupledAr { n, burn_in, noise_variance, .. } => {
            dynsys::simulate_coupled_ar(c, *n, *burn_in, *noise_variance, seed)?
        }
        SystemConfig::Henon { n, burn_in, .. } => dynsys::simulate_henon(c, *n, *burn_in, seed)?,
        SystemConfig::HenonNonstationary { n, burn_in, segment_len, off_value, cyx, .. } => {
            // Toggle on output indices: the burn-in runs with the first (ON) value.
            let on_output = CouplingSchedule::alternating(*segment_len, c, *off_value, *n)?;
            let mut bps = on_output.breakpoints().to_vec();
            for bp in bps.iter_mut().skip(1) {
                bp.0 += burn_in;
            }
            let cxy = CouplingSchedule::new(bps)?;
            dynsys::simulate_henon_nonstationary(&cxy, &CouplingSchedule::constant(*cyx)?, *n, *burn_in, seed)?
        }
        SystemConfig::Csv { .. } => {
            return Err(PipelineError::config("system.kind", "recorded data cannot be simulated"));
        }
    };
    Ok(out)
}

fn pick(sim: &SimOutput, label: &str) -> Result<TimeSeries> {
    sim.get(label).cloned().ok_or_else(|| {
        let known: Vec<&str> = sim.series.iter().map(TimeSeries::label).collect();
        PipelineError::config("system.pair", format!("unknown component {label:?}; available: {known:?}"))
    })
}

type PairData = (TimeSeries, TimeSeries, Vec<(String, Vec<(usize, f64)>)>);

fn load_pair(cfg: &ExperimentConfig, coupling: Option<f64>, sim_seed: u64) -> Result<PairData> {
    let (xl, yl) = cfg.system.pair();
    match (&cfg.system, coupling) {
        (SystemConfig::Csv { path, .. }, _) => {
            let data = ingest_csv(path, &cfg.system.ingest_options().unwrap_or_default())?;
            Ok((data.require(&xl)?.clone(), data.require(&yl)?.clone(), Vec::new()))
        }
        (system, Some(c)) => {
            let sim = simulate_system(system, c, sim_seed)?;
            let truth = sim
                .coupling_truth
                .iter()
                .filter_map(|(name, _)| sim.coupling_on_output(name).map(|s| (name.clone(), s.breakpoints().to_vec())))
                .collect();
            Ok((pick(&sim, &xl)?, pick(&sim, &yl)?, truth))
        }
        (_, None) => Err(PipelineError::config("couplings", "simulated systems need coupling values")),
    }
}

struct PointOutput {
    record: PointRecord,
    detail: PointDetail,
    models: Option<TaciModelSet>,
}

fn timecourse_summary(tc: &CsgiTimecourse) -> (Summary, Summary) {
    let (xy, yx) = (tc.xy(), tc.yx());
    (
        Summary { value: xy.mean(), std: xy.pooled_std() },
        Summary { value: yx.mean(), std: yx.pooled_std() },
    )
}

fn run_point(cfg: &ExperimentConfig, index: usize, coupling: Option<f64>) -> Result<PointOutput> {
    let sim_seed = derive_seed(cfg.seed, 2 * index as u64);
    let method_seed = derive_seed(cfg.seed, 2 * index as u64 + 1);
    let (x, y, truth) = load_pair(cfg, coupling, sim_seed)?;
    info!("point {index} (C = {coupling:?}): {} samples, method {}", x.len(), cfg.method.kind());
    let w = &cfg.windowing;
    let mut models = None;
    let (detail, (sxy, syx)) = match &cfg.method {
        MethodConfig::Taci { save_models, .. } => {
            let tcfg = cfg.taci_config()?;
            let set = train_pair(&x, &y, &tcfg, method_seed)?;
            let tc = evaluate_pair(&set, &x, &y, w.window_len, w.stride(), w.n_bootstrap, method_seed)?;
            if *save_models {
                models = Some(set);
            }
            let s = timecourse_summary(&tc);
            (PointDetail::Timecourse(tc), s)
        }
        MethodConfig::Slgc { .. } => {
            let scfg = cfg.slgc_config(method_seed).expect("slgc method");
            let res = slgc_pair(&x, &y, &scfg)?;
            if res.singular {
                log::warn!("point {index}: rank-deficient least-squares fit");
            }
            let s = timecourse_summary(&res.timecourse);
            (PointDetail::Timecourse(res.timecourse), s)
        }
        MethodConfig::Ccm { embedding_dim, tau, lib_sizes, n_replicates } => {
            let res = ccm_pair(&x, &y, *embedding_dim, *tau, lib_sizes, *n_replicates, method_seed)?;
            let last = res.lib_sizes.len() - 1;
            let s = (
                Summary { value: res.skill_xy[last], std: res.std_xy[last] },
                Summary { value: res.skill_yx[last], std: res.std_yx[last] },
            );
            (PointDetail::Ccm(res), s)
        }
        MethodConfig::Te { .. } => {
            let tcfg = cfg.te_config(method_seed).expect("te method");
            let (xy, yx) = te_pair(&x, &y, &tcfg)?;
            let s = (
                Summary { value: xy.value, std: xy.shuffle_std },
                Summary { value: yx.value, std: yx.shuffle_std },
            );
            (PointDetail::Te(xy, yx), s)
        }
    };
    for (d, s) in [("x->y", sxy), ("y->x", syx)] {
        if !s.value.is_finite() || !s.std.is_finite() {
            return Err(PipelineError::Diverged(format!("point {index}: non-finite {d} result")));
        }
    }
    Ok(PointOutput {
        record: PointRecord {
            index,
            coupling,
            sim_seed: coupling.map(|_| sim_seed),
            method_seed,
            truth,
            xy: sxy,
            yx: syx,
            files: Vec::new(),
        },
        detail,
        models,
    })
}

/// Write via a temporary file in the same directory and rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    std::fs::write(&tmp, contents).map_err(|e| PipelineError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| PipelineError::io(path, e))
}

fn detail_files(index: usize, detail: &PointDetail) -> Result<Vec<(String, Vec<u8>)>> {
    let mut buf = Vec::new();
    let name = match detail {
        PointDetail::Timecourse(tc) => {
            tc.write_csv(&mut buf)?;
            format!("point{index:02}_timecourse.csv")
        }
        PointDetail::Ccm(res) => {
            res.write_csv(&mut buf)?;
            format!("point{index:02}_ccm.csv")
        }
        PointDetail::Te(xy, yx) => {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(["direction", "value", "uncorrected", "shuffle_mean", "shuffle_std", "undersampled"])?;
            for (d, e) in [("x->y", xy), ("y->x", yx)] {
                w.write_record([
                    d.to_string(),
                    e.value.to_string(),
                    e.uncorrected.to_string(),
                    e.shuffle_mean.to_string(),
                    e.shuffle_std.to_string(),
                    e.undersampled.to_string(),
                ])?;
            }
            w.flush().map_err(|e| PipelineError::Data(e.to_string()))?;
            drop(w);
            format!("point{index:02}_te.csv")
        }
    };
    Ok(vec![(name, buf)])
}

/// Summary CSV with columns `index, c, value, std`; `c` is empty for
/// recorded data.
pub fn summary_csv(points: &[PointRecord], direction_xy: bool) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["index", "c", "value", "std"])?;
        for p in points {
            let s = if direction_xy { p.xy } else { p.yx };
            w.write_record([
                p.index.to_string(),
                p.coupling.map(|c| c.to_string()).unwrap_or_default(),
                s.value.to_string(),
                s.std.to_string(),
            ])?;
        }
        w.flush().map_err(|e| PipelineError::Data(e.to_string()))?;
    }
    Ok(buf)
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SummaryRow {
    pub index: usize,
    pub c: Option<f64>,
    pub value: f64,
    pub std: f64,
}

pub fn read_summary_csv<R: std::io::Read>(r: R) -> Result<Vec<SummaryRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let rows = rdr.deserialize().collect::<std::result::Result<Vec<SummaryRow>, _>>()?;
    Ok(rows)
}

fn metric_name(method: &MethodConfig) -> &'static str {
    match method {
        MethodConfig::Taci { .. } | MethodConfig::Slgc { .. } => "mean CSGI",
        MethodConfig::Ccm { .. } => "cross-map skill",
        MethodConfig::Te { .. } => "transfer entropy (nats)",
    }
}

fn summary_plot(cfg: &ExperimentConfig, points: &[PointRecord], xy: bool) -> String {
    let (label, title) = if xy { ("x → y", "x → y") } else { ("y → x", "y → x") };
    let s = PlotSeries {
        label: label.into(),
        x: points.iter().map(|p| p.coupling.unwrap_or(p.index as f64)).collect(),
        y: points.iter().map(|p| if xy { p.xy.value } else { p.yx.value }).collect(),
        std: points.iter().map(|p| if xy { p.xy.std } else { p.yx.std }).collect(),
    };
    let title = format!("{} on {}: {title}", cfg.method.kind(), cfg.system.kind());
    line_plot(&[s], &title, "coupling C", metric_name(&cfg.method))
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| PipelineError::config(WORKERS_ENV, format!("expected a positive integer, got {v:?}")))?;
        b = b.num_threads(n.max(1));
    }
    b.build().map_err(|e| PipelineError::Data(format!("worker pool: {e}")))
}

/// Run every sweep point and write, under `cfg.output_dir`:
/// per-point detail CSVs, `summary_xy.csv`, `summary_yx.csv`,
/// `plot_xy.svg`, `plot_yx.svg`, optional `point{NN}_models/` directories
/// and `manifest.json`. Per-point files appear as soon as their point
/// finishes; if any point fails, finished points stay on disk and the
/// error of the lowest failing index is returned.
pub fn run_sweep(cfg: &ExperimentConfig, config_text: &str) -> Result<SweepOutcome> {
    cfg.validate()?;
    let taci_config = match cfg.method {
        MethodConfig::Taci { .. } => Some(cfg.taci_config()?),
        _ => None,
    };
    let dir = cfg.output_dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| PipelineError::io(&dir, e))?;
    let points = cfg.points();
    let pool = worker_pool()?;

    let (tx, rx) = mpsc::channel::<(usize, Result<PointOutput>)>();
    let mut done: Vec<Option<Result<(PointRecord, PointDetail)>>> = (0..points.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let writer = scope.spawn(|| {
            let mut results = Vec::new();
            for (i, r) in rx {
                let written = r.and_then(|out| {
                    let mut record = out.record;
                    for (name, bytes) in detail_files(i, &out.detail)? {
                        write_atomic(&dir.join(&name), &bytes)?;
                        record.files.push(name);
                    }
                    if let Some(models) = &out.models {
                        let name = format!("point{i:02}_models");
                        let tmp = dir.join(format!("{name}.tmp"));
                        let target = dir.join(&name);
                        let _ = std::fs::remove_dir_all(&tmp);
                        save_model_set(models, &tmp)?;
                        let _ = std::fs::remove_dir_all(&target);
                        std::fs::rename(&tmp, &target).map_err(|e| PipelineError::io(&target, e))?;
                    }
                    Ok((record, out.detail))
                });
                results.push((i, written));
            }
            results
        });
        pool.install(|| {
            points.par_iter().enumerate().for_each_with(tx, |tx, (i, &c)| {
                let _ = tx.send((i, run_point(cfg, i, c)));
            });
        });
        for (i, r) in writer.join().expect("writer thread panicked") {
            done[i] = Some(r);
        }
    });

    let mut records = Vec::new();
    let mut details = Vec::new();
    for r in done {
        let (rec, det) = r.expect("every point reports")?;
        records.push(rec);
        details.push(det);
    }

    let mut emitted: Vec<(String, Vec<u8>)> = vec![
        ("summary_xy.csv".into(), summary_csv(&records, true)?),
        ("summary_yx.csv".into(), summary_csv(&records, false)?),
        ("plot_xy.svg".into(), summary_plot(cfg, &records, true).into_bytes()),
        ("plot_yx.svg".into(), summary_plot(cfg, &records, false).into_bytes()),
    ];
    for (name, bytes) in &emitted {
        write_atomic(&dir.join(name), bytes)?;
    }
    for rec in &records {
        for name in &rec.files {
            let bytes = std::fs::read(dir.join(name)).map_err(|e| PipelineError::io(dir.join(name), e))?;
            emitted.push((name.clone(), bytes));
        }
    }
    emitted.sort_by(|a, b| a.0.cmp(&b.0));
    let manifest = SweepManifest {
        manifest_version: MANIFEST_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        config_sha256: sha256_hex(config_text.as_bytes()),
        config: cfg.clone(),
        taci_config,
        points: records.clone(),
        files: emitted.iter().map(|(n, b)| (n.clone(), sha256_hex(b))).collect(),
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| PipelineError::Data(e.to_string()))?;
    write_atomic(&dir.join(MANIFEST_FILE), text.as_bytes())?;
    Ok(SweepOutcome { output_dir: dir, points: records, details })
}

pub fn read_manifest(dir: &Path) -> Result<SweepManifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| PipelineError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Data(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nonstationary_schedule_starts_on_and_toggles_on_output_indices() {
        let system = SystemConfig::HenonNonstationary {
            n: 400,
            burn_in: 50,
            segment_len: 100,
            off_value: 0.0,
            cyx: 0.0,
            pair: None,
        };
        let sim = simulate_system(&system, 0.6, 3).unwrap();
        let cxy = sim.coupling_on_output("Cxy").unwrap();
        assert_eq!(cxy.segments(400), vec![(0, 100, 0.6), (100, 200, 0.0), (200, 300, 0.6), (300, 400, 0.0)]);
    }

    #[test]
    fn summary_csv_round_trip() {
        let rec = |i: usize, c: Option<f64>| PointRecord {
            index: i,
            coupling: c,
            sim_seed: None,
            method_seed: 0,
            truth: vec![],
            xy: Summary { value: 0.1 + 1e-17 * i as f64, std: 1.0 / 3.0 },
            yx: Summary { value: -2.5e-9, std: 0.0 },
            files: vec![],
        };
        let pts = vec![rec(0, Some(0.3)), rec(1, None)];
        let rows = read_summary_csv(summary_csv(&pts, true).unwrap().as_slice()).unwrap();
        assert_eq!(rows[0].c, Some(0.3));
        assert_eq!(rows[1].c, None);
        assert_eq!(rows[0].std, 1.0 / 3.0);
        let rows = read_summary_csv(summary_csv(&pts, false).unwrap().as_slice()).unwrap();
        assert_eq!(rows[1].value, -2.5e-9);
    }

    #[test]
    fn atomic_write_leaves_no_temp_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        write_atomic(&p, b"x").unwrap();
        write_atomic(&p, b"y").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"y");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
