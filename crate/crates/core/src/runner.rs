//! Experiment dispatch: runs the command named in a [`RunConfig`], collects
//! rows and verdicts in a deterministic order, and writes the artifacts.

use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde_json::json;

use crate::config::{Command, RunConfig};
use crate::contour::{pattern_table, ContourCensus, SquareGrid};
use crate::error::{Error, Result};
use crate::exact::{self, check_event_domination, event_library, spin_enumerate};
use crate::experiments::{
    diagonal_limit_scan, epsilon_ordering, robustness_scan, separation_sigma, tv_from_free,
    tv_from_uniform, RobustnessCurve, ScanOptions, TREND_SIGMA,
};
use crate::mc::{self, BoundaryMode, ChainConfig, MarginalEstimate, Setup};
use crate::rc::Boundary;
use crate::report::{self, ResultRow, Summary, Table, SCHEMA_VERSION};

/// Environment variable holding the worker count; unset or 0 uses every
/// available core.
pub const WORKERS_ENV: &str = "ROBUST_POTTS_WORKERS";

/// Everything a command produces, before anything is written.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub rows: Vec<ResultRow>,
    pub tables: Vec<Table>,
    pub verdicts: serde_json::Value,
    pub streams: Vec<u64>,
}

/// Runs the configured command on a worker pool sized from
/// [`WORKERS_ENV`], writes the CSV tables and JSON summary under
/// `output.dir`, and returns the summary.
pub fn dispatch(cfg: &RunConfig) -> Result<Summary> {
    let workers = workers_from_env()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config(WORKERS_ENV, e.to_string()))?;
    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64());
    let clock = Instant::now();
    let outcome = pool.install(|| run(cfg))?;
    let wall = clock.elapsed().as_secs_f64();
    write_outcome(cfg, &outcome, pool.current_num_threads(), started, wall)
}

fn workers_from_env() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(0),
        Ok(s) => s.trim().parse().map_err(|_| {
            Error::config(
                WORKERS_ENV,
                format!("expected a non-negative integer, got {s:?}"),
            )
        }),
    }
}

/// Runs the configured command on the current rayon pool.
pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    match cfg.command {
        Command::Enumerate => run_enumerate(cfg),
        Command::Sample => run_sample(cfg),
        Command::Robustness => run_scans(cfg, false),
        Command::Diagonal => run_scans(cfg, true),
        Command::FkgCheck => run_fkg(cfg),
        Command::Contours => run_contours(cfg),
        Command::BklCheck => run_bkl(cfg),
    }
}

fn write_outcome(
    cfg: &RunConfig,
    outcome: &Outcome,
    workers: usize,
    started: f64,
    wall: f64,
) -> Result<Summary> {
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir)?;
    let prologue = report::prologue(cfg)?;
    let results = Table::results(&outcome.rows);
    let mut tables = vec![&results];
    tables.extend(&outcome.tables);

    let mut summary = Summary {
        schema_version: SCHEMA_VERSION,
        command: cfg.command.name().to_string(),
        config: crate::config::emit_config(cfg)?,
        resolved_couplings: cfg
            .model
            .qs
            .iter()
            .map(|&q| Ok((q, cfg.model.coupling_for(q)?)))
            .collect::<Result<_>>()?,
        rng: mc::RNG_NAME.to_string(),
        seed: cfg.chain.seed,
        streams: outcome.streams.clone(),
        workers,
        started_unix: started,
        wall_time_s: wall,
        verdicts: outcome.verdicts.clone(),
        tables: serde_json::Map::new(),
        artifacts: Vec::new(),
    };
    for t in &tables {
        summary.attach(t);
        if cfg.output.csv {
            let path = dir.join(format!("{}.csv", t.name));
            report::write_csv(&path, &prologue, t)?;
            summary.artifacts.push(path);
        }
    }
    if cfg.output.json {
        let path = dir.join("summary.json");
        summary.artifacts.push(path.clone());
        report::write_json(&path, &summary)?;
    }
    Ok(summary)
}

/// One `(q, ε, L)` parameter block.
#[derive(Clone, Copy, Debug)]
struct Block {
    q: usize,
    coupling: f64,
    epsilon: f64,
    side: usize,
}

fn blocks(cfg: &RunConfig) -> Result<Vec<Block>> {
    let mut out = Vec::new();
    for &q in &cfg.model.qs {
        let coupling = cfg.model.coupling_for(q)?;
        for &epsilon in &cfg.model.epsilons {
            for &side in &cfg.model.sides {
                out.push(Block {
                    q,
                    coupling,
                    epsilon,
                    side,
                });
            }
        }
    }
    Ok(out)
}

fn setup(cfg: &RunConfig, b: &Block) -> Result<Setup> {
    let m = &cfg.model;
    Setup::build(
        m.dim,
        b.side,
        b.coupling,
        b.epsilon,
        m.boundary_mode(),
        m.radius,
    )
}

fn row(
    cfg: &RunConfig,
    b: &Block,
    s: &Setup,
    theta: (f64, f64),
    tv: (f64, f64),
    n_samples: u64,
) -> ResultRow {
    ResultRow {
        d: cfg.model.dim,
        q: b.q,
        coupling: b.coupling,
        epsilon: b.epsilon,
        side: b.side,
        r: s.radius(),
        mode: s.mode.name().to_string(),
        theta: theta.0,
        theta_se: theta.1,
        tv: tv.0,
        tv_se: tv.1,
        n_samples,
        seed: cfg.chain.seed,
    }
}

fn fmt(x: f64) -> String {
    x.to_string()
}

fn run_enumerate(cfg: &RunConfig) -> Result<Outcome> {
    let method = cfg.model.exact_method(cfg.caps.edges);
    let results = blocks(cfg)?
        .into_par_iter()
        .map(|b| {
            let s = setup(cfg, &b)?;
            let wired = s.wired();
            let res = exact::solve(&s.lattice, &s.bonds, b.q as f64, wired, method)?;
            let tv = match &res.origin_marginal {
                Some(p) => tv_from_uniform(p, &vec![0.0; p.len()]),
                None => (res.theta * (1.0 - 1.0 / b.q as f64), 0.0),
            };
            let spin = spin_check(cfg, &b, &s, res.origin_marginal.as_deref())?;
            Ok((row(cfg, &b, &s, (res.theta, 0.0), tv, 0), res.log_z, spin))
        })
        .collect::<Result<Vec<_>>>()?;
    let verdicts = results
        .iter()
        .map(|(r, log_z, spin)| json!({"q": r.q, "epsilon": r.epsilon, "L": r.side, "log_z": log_z, "spin_check": spin}))
        .collect();
    Ok(Outcome {
        rows: results.into_iter().map(|(r, _, _)| r).collect(),
        tables: Vec::new(),
        verdicts: serde_json::Value::Array(verdicts),
        streams: Vec::new(),
    })
}

/// Compares the edge-route origin marginal with a direct spin sum when
/// `q^V` is within the spin cap.
fn spin_check(
    cfg: &RunConfig,
    b: &Block,
    s: &Setup,
    fk: Option<&[f64]>,
) -> Result<serde_json::Value> {
    let n = s.lattice.num_sites() as u32;
    let states = (b.q as u64).checked_pow(n).filter(|&x| x <= cfg.caps.spins);
    let (Some(_), Some(fk), Ok(q16)) = (states, fk, u16::try_from(b.q)) else {
        return Ok(json!({"skipped": format!("q^V exceeds the spin cap of {}", cfg.caps.spins)}));
    };
    let bc = if s.wired() {
        Boundary::Wired(0)
    } else {
        Boundary::Free
    };
    let direct = spin_enumerate(&s.lattice, &s.bonds, q16, bc, cfg.caps.spins)?;
    let max_diff = fk
        .iter()
        .zip(&direct)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(json!({"max_abs_diff": max_diff}))
}

fn chain_for(cfg: &RunConfig, mode: BoundaryMode, stream: u64) -> ChainConfig {
    ChainConfig {
        stream,
        ..cfg.chain.chain_config(mode)
    }
}

fn stream_list(base: u64, n: u64) -> impl Iterator<Item = u64> {
    base..base + n
}

fn run_sample(cfg: &RunConfig) -> Result<Outcome> {
    let streams = cfg.chain.streams;
    let blocks = blocks(cfg)?;
    let results = blocks
        .par_iter()
        .enumerate()
        .map(|(i, b)| {
            let s = setup(cfg, b)?;
            let chain = chain_for(cfg, s.mode, i as u64 * streams);
            let m = mc::run_chains(&s.lattice, &s.bonds, b.q, &chain, streams)?;
            Ok((
                row(
                    cfg,
                    b,
                    &s,
                    (m.theta, m.theta_se),
                    tv_of(&m, s.wired()),
                    m.n_samples,
                ),
                m,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let verdicts = results
        .iter()
        .map(|(r, m)| json!({"q": r.q, "epsilon": r.epsilon, "L": r.side, "ess": m.ess, "origin_marginal": m.probs}))
        .collect();
    Ok(Outcome {
        rows: results.into_iter().map(|(r, _)| r).collect(),
        tables: Vec::new(),
        verdicts: serde_json::Value::Array(verdicts),
        streams: stream_list(0, blocks.len() as u64 * streams).collect(),
    })
}

fn tv_of(m: &MarginalEstimate, wired: bool) -> (f64, f64) {
    if wired {
        let scale = 1.0 - 1.0 / m.q as f64;
        (m.theta * scale, m.theta_se * scale)
    } else {
        tv_from_free(m)
    }
}

fn run_scans(cfg: &RunConfig, diagonal: bool) -> Result<Outcome> {
    let m = &cfg.model;
    let n_sides = m.sides.len() as u64;
    let streams = cfg.chain.streams;
    let opts = ScanOptions {
        radius: m.radius,
        exact_cap: cfg.caps.edges,
        streams,
    };
    let mode = m.boundary_mode();
    let mut params = Vec::new();
    for &q in &m.qs {
        for &eps in &m.epsilons {
            params.push((q, m.coupling_for(q)?, eps));
        }
    }
    let mut curves = Vec::with_capacity(params.len());
    for (i, &(q, j, eps)) in params.iter().enumerate() {
        let chain = chain_for(cfg, mode, i as u64 * n_sides * streams);
        let curve = if diagonal {
            diagonal_limit_scan(m.dim, q, j, eps, &m.sides, &chain, &opts)?
        } else {
            robustness_scan(m.dim, q, j, eps, &m.sides, mode, &chain, &opts)?
        };
        curves.push(curve);
    }

    let mut rows = Vec::new();
    for c in &curves {
        for p in &c.points {
            rows.push(ResultRow {
                d: c.dim,
                q: c.q,
                coupling: c.coupling,
                epsilon: c.epsilon,
                side: p.side,
                r: p.radius,
                mode: c.mode.name().to_string(),
                theta: p.theta,
                theta_se: p.theta_se,
                tv: p.tv,
                tv_se: p.tv_se,
                n_samples: p.n_samples,
                seed: c.seed,
            });
        }
    }
    Ok(Outcome {
        rows,
        tables: Vec::new(),
        verdicts: scan_verdicts(&m.qs, &curves),
        streams: stream_list(0, params.len() as u64 * n_sides * streams).collect(),
    })
}

fn scan_verdicts(qs: &[usize], curves: &[RobustnessCurve]) -> serde_json::Value {
    let per_curve: Vec<_> = curves
        .iter()
        .map(|c| {
            json!({
                "q": c.q,
                "epsilon": c.epsilon,
                "trend": c.verdict.trend.to_string(),
                "slope": c.verdict.slope,
                "slope_se": c.verdict.slope_se,
                "sigma": TREND_SIGMA,
            })
        })
        .collect();
    let per_q: Vec<_> = qs
        .iter()
        .map(|&q| {
            let group: Vec<RobustnessCurve> = curves.iter().filter(|c| c.q == q).cloned().collect();
            let ordering = epsilon_ordering(&group);
            let lo = group.iter().min_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
            let hi = group.iter().max_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
            let separation = match (lo, hi) {
                (Some(lo), Some(hi)) if lo.epsilon < hi.epsilon => {
                    let (a, b) = (lo.points.last(), hi.points.last());
                    a.zip(b).map(|(a, b)| {
                        json!({
                            "L": a.side,
                            "epsilon_low": lo.epsilon,
                            "epsilon_high": hi.epsilon,
                            "sigma": separation_sigma(a, b),
                        })
                    })
                }
                _ => None,
            };
            json!({
                "q": q,
                "epsilon_ordering_holds": ordering.iter().all(|o| o.holds),
                "epsilon_ordering": ordering,
                "separation": separation,
            })
        })
        .collect();
    json!({"curves": per_curve, "by_q": per_q})
}

fn run_fkg(cfg: &RunConfig) -> Result<Outcome> {
    let m = &cfg.model;
    let method = m.exact_method(cfg.caps.edges);
    let mut eps: Vec<f64> = m.epsilons.iter().copied().chain([1.0]).collect();
    eps.sort_by(f64::total_cmp);
    eps.dedup();

    let mut groups = Vec::new();
    for &q in &m.qs {
        let coupling = m.coupling_for(q)?;
        for &side in &m.sides {
            groups.push((q, coupling, side));
        }
    }
    let results = groups
        .par_iter()
        .map(|&(q, coupling, side)| {
            let setups = eps
                .iter()
                .map(|&epsilon| {
                    let b = Block {
                        q,
                        coupling,
                        epsilon,
                        side,
                    };
                    Ok((b, setup(cfg, &b)?))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut rows = Vec::new();
            for (b, s) in &setups {
                let res = exact::solve(&s.lattice, &s.bonds, q as f64, s.wired(), method)?;
                let scale = 1.0 - 1.0 / q as f64;
                rows.push(row(
                    cfg,
                    b,
                    s,
                    (res.theta, 0.0),
                    (res.theta * scale, 0.0),
                    0,
                ));
            }
            let mut records = Vec::new();
            let mut passed = true;
            for pair in setups.windows(2) {
                let ((weak_b, weak), (strong_b, strong)) = (&pair[0], &pair[1]);
                let lat = &weak.lattice;
                let events = event_library(lat, weak.wired());
                let rep = check_event_domination(
                    lat,
                    &strong.bonds,
                    &weak.bonds,
                    q as f64,
                    weak.wired(),
                    &events,
                    method,
                )?;
                passed &= rep.passed;
                for c in rep.comparisons {
                    records.push(vec![
                        SCHEMA_VERSION.to_string(),
                        m.dim.to_string(),
                        q.to_string(),
                        fmt(coupling),
                        side.to_string(),
                        weak.radius().map(|r| r.to_string()).unwrap_or_default(),
                        weak.mode.name().to_string(),
                        fmt(weak_b.epsilon),
                        fmt(strong_b.epsilon),
                        c.event.to_string(),
                        fmt(c.p_weak),
                        fmt(c.p_strong),
                        c.holds.to_string(),
                    ]);
                }
            }
            let monotone = rows
                .windows(2)
                .all(|w| w[1].theta >= w[0].theta - exact::DOMINATION_TOL);
            let verdict =
                json!({"q": q, "L": side, "domination_holds": passed, "theta_monotone": monotone});
            Ok((rows, records, verdict))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut table = Table::new(
        "fkg",
        &[
            "schema_version",
            "d",
            "q",
            "J",
            "L",
            "r",
            "mode",
            "epsilon_weak",
            "epsilon_strong",
            "event",
            "p_weak",
            "p_strong",
            "holds",
        ],
    );
    let mut rows = Vec::new();
    let mut verdicts = Vec::new();
    for (r, recs, v) in results {
        rows.extend(r);
        recs.into_iter().for_each(|rec| table.push(rec));
        verdicts.push(v);
    }
    let all = verdicts
        .iter()
        .all(|v| v["domination_holds"] == true && v["theta_monotone"] == true);
    Ok(Outcome {
        rows,
        tables: vec![table],
        verdicts: json!({"all_hold": all, "groups": verdicts}),
        streams: Vec::new(),
    })
}

fn run_contours(cfg: &RunConfig) -> Result<Outcome> {
    let streams = cfg.chain.streams;
    let k = &cfg.contours;
    let blocks = blocks(cfg)?;
    let results = blocks
        .par_iter()
        .enumerate()
        .map(|(i, b)| {
            let s = setup(cfg, b)?;
            let grid = SquareGrid::new(&s.lattice, &s.bonds, k.adjacency)?;
            let base = i as u64 * streams;
            let chains = (0..streams)
                .into_par_iter()
                .map(|j| {
                    let chain = chain_for(cfg, s.mode, base + j);
                    let mut census = ContourCensus::default();
                    let m = mc::run_chain_observed(&s.lattice, &s.bonds, b.q, &chain, |obs| {
                        census.observe(&grid.extract(obs.spins, &s.lattice));
                    })?;
                    Ok((m, census))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut census = ContourCensus::default();
            chains.iter().for_each(|(_, c)| census.merge(c));
            let marginals: Vec<MarginalEstimate> = chains.into_iter().map(|(m, _)| m).collect();
            let m = MarginalEstimate::pool(&marginals)?;
            let r = row(
                cfg,
                b,
                &s,
                (m.theta, m.theta_se),
                tv_of(&m, s.wired()),
                m.n_samples,
            );
            Ok((r, census))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut header = vec![
        "schema_version".to_string(),
        "d".into(),
        "q".into(),
        "J".into(),
        "epsilon".into(),
        "L".into(),
        "mode".into(),
        "size".into(),
        "count".into(),
        "n_samples".into(),
        "p_hat".into(),
        "se".into(),
    ];
    header.extend(k.c_panel.iter().map(|c| format!("log_peierls_C{c}")));
    let mut table = Table {
        name: "contours".into(),
        header,
        records: Vec::new(),
    };
    let mut verdicts = Vec::new();
    for (r, census) in &results {
        for cr in census.rows(r.q as f64, &k.c_panel) {
            let mut rec = vec![
                SCHEMA_VERSION.to_string(),
                r.d.to_string(),
                r.q.to_string(),
                fmt(r.coupling),
                fmt(r.epsilon),
                r.side.to_string(),
                r.mode.clone(),
                cr.size.to_string(),
                cr.count.to_string(),
                census.n_samples.to_string(),
                fmt(cr.p_hat),
                fmt(cr.se),
            ];
            rec.extend(cr.log_peierls.iter().map(|&x| fmt(x)));
            table.push(rec);
        }
        let slope = census.log_slope(k.min_count);
        verdicts.push(json!({
            "q": r.q,
            "epsilon": r.epsilon,
            "L": r.side,
            "samples": census.n_samples,
            "log_slope": slope.map(|s| s.0),
            "log_slope_se": slope.map(|s| s.1),
            "decreasing": slope.map(|(s, se)| s + TREND_SIGMA * se < 0.0),
        }));
    }
    let comparisons = q_comparisons(&verdicts);
    Ok(Outcome {
        rows: results.into_iter().map(|(r, _)| r).collect(),
        tables: vec![table],
        verdicts: json!({"census": verdicts, "steeper_with_q": comparisons}),
        streams: stream_list(0, blocks.len() as u64 * streams).collect(),
    })
}

/// For each `(ε, L)`, compares the log-slopes of consecutive `q` values:
/// the larger `q` should decay faster.
fn q_comparisons(verdicts: &[serde_json::Value]) -> Vec<serde_json::Value> {
    let mut out = Vec::new();
    for (i, a) in verdicts.iter().enumerate() {
        let later = verdicts[i + 1..].iter().find(|b| {
            b["epsilon"] == a["epsilon"] && b["L"] == a["L"] && b["q"].as_u64() > a["q"].as_u64()
        });
        let Some(b) = later else { continue };
        let (Some(sa), Some(ea), Some(sb), Some(eb)) = (
            a["log_slope"].as_f64(),
            a["log_slope_se"].as_f64(),
            b["log_slope"].as_f64(),
            b["log_slope_se"].as_f64(),
        ) else {
            continue;
        };
        out.push(json!({
            "epsilon": a["epsilon"],
            "L": a["L"],
            "q_low": a["q"],
            "q_high": b["q"],
            "steeper": sb + TREND_SIGMA * ea.hypot(eb) < sa,
        }));
    }
    out
}

fn run_bkl(cfg: &RunConfig) -> Result<Outcome> {
    let bkl_eps = cfg.contours.bkl_epsilon;
    let results = blocks(cfg)?
        .into_par_iter()
        .map(|b| {
            let s = setup(cfg, &b)?;
            let q16 = u16::try_from(b.q)
                .map_err(|_| Error::param("q", "too large for the constrained check"))?;
            let t = pattern_table(&s.lattice, &s.bonds, q16, s.wired(), bkl_eps)?;
            Ok((b, s, t))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(
        "bkl",
        &[
            "schema_version",
            "q",
            "J",
            "epsilon",
            "L",
            "mode",
            "pattern",
            "log_z",
            "rhs",
            "holds",
            "E0",
            "E1",
            "E2",
            "E3",
            "E4",
            "E4prime",
        ],
    );
    let mut verdicts = Vec::new();
    for (b, s, t) in &results {
        for p in &t.rows {
            let pattern: String = p
                .broken
                .iter()
                .map(|&x| if x { '1' } else { '0' })
                .collect();
            let mut rec = vec![
                SCHEMA_VERSION.to_string(),
                b.q.to_string(),
                fmt(b.coupling),
                fmt(b.epsilon),
                b.side.to_string(),
                s.mode.name().to_string(),
                pattern,
                fmt(p.log_z),
                fmt(p.rhs),
                p.holds.to_string(),
            ];
            rec.extend(p.counts.iter().map(|c| c.to_string()));
            rec.push(p.e4_prime.to_string());
            table.push(rec);
        }
        verdicts.push(json!({
            "q": b.q,
            "epsilon": b.epsilon,
            "L": b.side,
            "patterns": t.rows.len(),
            "violations": t.violations,
        }));
    }
    Ok(Outcome {
        rows: Vec::new(),
        tables: vec![table],
        verdicts: serde_json::Value::Array(verdicts),
        streams: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_with;

    fn cfg(text: &str, dir: &std::path::Path) -> RunConfig {
        let out = dir.to_string_lossy().to_string();
        parse_with(text, None, &[("output.dir".into(), out)]).unwrap()
    }

    #[test]
    fn enumerate_with_spin_cross_check() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg(
            "command = \"enumerate\"\n[model]\nL = 3\nq = 2\nJ = 0.7\nepsilon_list = [0.3, 1.0]\nmode = \"free\"\nr = 0\n",
            dir.path(),
        );
        let out = run(&c).unwrap();
        assert_eq!(out.rows.len(), 2);
        for v in out.verdicts.as_array().unwrap() {
            assert!(v["spin_check"]["max_abs_diff"].as_f64().unwrap() < 1e-10);
        }
        let summary = dispatch(&c).unwrap();
        assert!(dir.path().join("results.csv").exists());
        assert!(dir.path().join("summary.json").exists());
        assert_eq!(summary.tables["results"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn enumerate_refuses_over_cap() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg(
            "command = \"enumerate\"\n[model]\nL = 5\nq = 2\nJ = 0.7\nmode = \"wired-ghost\"\n",
            dir.path(),
        );
        let msg = run(&c).unwrap_err().to_string();
        assert!(msg.contains("cap of 24"), "{msg}");
    }

    #[test]
    fn fkg_on_small_box() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg(
            "command = \"fkg-check\"\n[model]\nL = 3\nq = 25\nepsilon_list = [0.0, 0.5]\nr = 0\nmethod = \"frontier\"\n",
            dir.path(),
        );
        let out = run(&c).unwrap();
        assert_eq!(out.verdicts["all_hold"], true);
        assert_eq!(out.rows.len(), 3);
        assert!(out.rows[0].theta < out.rows[2].theta);
    }

    #[test]
    fn bkl_table_on_two_by_two() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg(
            "command = \"bkl-check\"\n[model]\nL = 2\nq = 25\nmode = \"free\"\n",
            dir.path(),
        );
        let out = run(&c).unwrap();
        assert_eq!(out.tables[0].records.len(), 16);
        assert_eq!(out.verdicts[0]["patterns"], 16);
    }

    #[test]
    fn sample_rows_in_block_order() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg(
            "command = \"sample\"\n[model]\nL_list = [3, 5]\nq = 3\nJ = 0.5\nmode = \"free\"\n[chain]\nsweeps = 600\nburn_in = 100\n",
            dir.path(),
        );
        let out = run(&c).unwrap();
        assert_eq!(
            out.rows.iter().map(|r| r.side).collect::<Vec<_>>(),
            vec![3, 5]
        );
        assert!(out.rows.iter().all(|r| r.n_samples == 500));
        assert_eq!(out.streams, vec![0, 1]);
    }
}
