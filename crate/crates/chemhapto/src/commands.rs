//! Command entry points: execute runs against a config file, drive the
//! self-verification and manufactured-solution suites, and fan out parameter
//! sweeps. All file formats live here and in [`crate::grid`] /
//! [`crate::analysis`].

use std::fs;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::analysis::{
    ledger_csv_row, verdicts, LedgerRecord, TrajectoryLedger, Verdict, LEDGER_CSV_HEADER,
};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::grid::write_snapshot;
use crate::integrator::run;
use crate::model::{compute_constants, make_initial_state, DerivedConstants, State};
use crate::{mms, verify};

/// Everything a finished run leaves behind, for callers that want more than
/// the exit status.
#[derive(Debug)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub records: Vec<LedgerRecord>,
    /// `None` when the run produced fewer than 4 records.
    pub verdicts: Option<Vec<Verdict>>,
    pub all_bounded: bool,
    pub consts: DerivedConstants,
    pub final_state: State,
}

/// Resolve the effective output directory: a relative config path lands under
/// `out_root` when one is given (the binary passes `CHEMHAPTO_OUT` here).
pub fn resolve_out_dir(cfg: &RunConfig, out_root: Option<&Path>) -> PathBuf {
    match out_root {
        Some(root) if cfg.output_dir.is_relative() => root.join(&cfg.output_dir),
        _ => cfg.output_dir.clone(),
    }
}

fn snapshot_stamp(t: f64) -> String {
    format!("{t:.6}")
}

fn write_fields(dir: &Path, state: &State) -> Result<()> {
    let stamp = snapshot_stamp(state.t);
    for (name, field) in [("u", &state.u), ("v", &state.v), ("w", &state.w)] {
        write_snapshot(&dir.join(format!("{name}_{stamp}.dat")), field, state.t)?;
    }
    Ok(())
}

fn write_constants(
    dir: &Path,
    cfg: &RunConfig,
    consts: &DerivedConstants,
) -> Result<()> {
    let path = dir.join("constants.txt");
    let seed = match cfg.preset.seed() {
        Some(s) => s.to_string(),
        None => "none".to_string(),
    };
    let text = format!(
        "k_const = {}\nm_star = {}\nw0_sup = {}\ngrid = {} {} {} {}\npreset = {}\nseed = {}\n",
        consts.k_const,
        consts.m_star,
        consts.w0_sup,
        cfg.grid.nx(),
        cfg.grid.ny(),
        cfg.grid.lx(),
        cfg.grid.ly(),
        cfg.preset.name(),
        seed,
    );
    fs::write(&path, text).map_err(Error::io(path))
}

fn write_verdicts(dir: &Path, verdicts: Option<&[Verdict]>, records: usize) -> Result<()> {
    let path = dir.join("verdicts.txt");
    let mut text = String::new();
    match verdicts {
        Some(list) => {
            for v in list {
                text.push_str(&format!(
                    "{:<12} bounded={} sup={} first_half_sup={} second_half_sup={}\n",
                    v.quantity, v.bounded, v.sup, v.first_half_sup, v.second_half_sup
                ));
            }
            let all = list.iter().all(|v| v.bounded);
            text.push_str(&format!("all_bounded = {all}\n"));
        }
        None => {
            text.push_str(&format!(
                "insufficient records ({records}) for split-horizon verdicts\n"
            ));
        }
    }
    fs::write(&path, text).map_err(Error::io(path))
}

/// Execute one simulation into `out_dir`: `ledger.csv`, periodic field
/// snapshots, `constants.txt` and `verdicts.txt`.
///
/// Refuses to reuse a directory that already holds a ledger. Ledger rows are
/// flushed as they are produced, so a failing run leaves its partial ledger
/// behind.
pub fn run_simulation(cfg: &RunConfig, out_dir: &Path) -> Result<RunSummary> {
    let ledger_path = out_dir.join("ledger.csv");
    if ledger_path.exists() {
        return Err(Error::OutputCollision(out_dir.to_path_buf()));
    }
    fs::create_dir_all(out_dir).map_err(Error::io(out_dir))?;

    let initial = make_initial_state(cfg.grid, &cfg.preset)?;
    let consts = compute_constants(&initial.u, &initial.w)?;
    write_constants(out_dir, cfg, &consts)?;
    write_fields(out_dir, &initial)?;

    let mut sink = TrajectoryLedger::new(initial.w.clone(), consts, cfg.params, &cfg.p_list);
    let file = File::create(&ledger_path).map_err(Error::io(&ledger_path))?;
    let mut csv = BufWriter::new(file);
    writeln!(csv, "{LEDGER_CSV_HEADER}").map_err(Error::io(&ledger_path))?;

    let mut last_snapshot = initial.t;
    let snapshot_every = cfg.snapshot_every;
    let final_state = {
        let csv = &mut csv;
        let sink_ref = &mut sink;
        let last_snapshot = &mut last_snapshot;
        let result = run(
            initial,
            &cfg.params,
            &cfg.policy,
            cfg.solver_tol,
            &mut |state| {
                sink_ref.observe(state)?;
                let row = ledger_csv_row(sink_ref.last().expect("just observed"));
                writeln!(csv, "{row}").map_err(Error::io(&ledger_path))?;
                csv.flush().map_err(Error::io(&ledger_path))?;
                if snapshot_every > 0.0 && state.t > *last_snapshot {
                    let k = (state.t / snapshot_every).round();
                    if (state.t - k * snapshot_every).abs() <= 1e-9 * state.t.max(1.0) {
                        write_fields(out_dir, state)?;
                        *last_snapshot = state.t;
                    }
                }
                Ok(())
            },
        );
        // Keep whatever the ledger holds on failure.
        csv.flush().map_err(Error::io(&ledger_path))?;
        result?
    };

    if final_state.t > last_snapshot {
        write_fields(out_dir, &final_state)?;
    }

    let records = sink.into_records();
    let dx = cfg.grid.dx();
    let verdict_list = if records.len() >= 4 {
        Some(verdicts(&records, &consts, dx, cfg.c_tol)?)
    } else {
        None
    };
    write_verdicts(out_dir, verdict_list.as_deref(), records.len())?;
    let all_bounded = verdict_list
        .as_ref()
        .map(|l| l.iter().all(|v| v.bounded))
        .unwrap_or(true);
    Ok(RunSummary {
        out_dir: out_dir.to_path_buf(),
        records,
        verdicts: verdict_list,
        all_bounded,
        consts,
        final_state,
    })
}

/// `chemhapto run <cfg>`: parse, simulate, report.
pub fn cmd_run(cfg_path: &Path, out_root: Option<&Path>) -> Result<RunSummary> {
    let cfg = RunConfig::from_path(cfg_path)?;
    let out_dir = resolve_out_dir(&cfg, out_root);
    run_simulation(&cfg, &out_dir)
}

/// `chemhapto verify`: run the self-check suite, print the table, succeed iff
/// everything passed.
pub fn cmd_verify(out: &mut dyn Write) -> Result<bool> {
    let checks = verify::run_all(&verify::VerifyOptions::default())?;
    let table = verify::render_table(&checks);
    out.write_all(table.as_bytes())
        .map_err(Error::io("<verify output>"))?;
    Ok(checks.iter().all(|c| c.passed))
}

/// `chemhapto mms`: run the manufactured-solution studies, print observed
/// orders, succeed iff every case meets its threshold.
pub fn cmd_mms(out: &mut dyn Write) -> Result<bool> {
    let reports = mms::run_all()?;
    let mut all = true;
    for r in &reports {
        all &= r.passed;
        let orders: Vec<String> = r.orders.iter().map(|o| format!("{o:.3}")).collect();
        let errors: Vec<String> = r.errors.iter().map(|e| format!("{e:.3e}")).collect();
        writeln!(
            out,
            "{:<12} {}  grids {:?}  errors [{}]  orders [{}]  (need >= {})",
            r.name,
            if r.passed { "PASS" } else { "FAIL" },
            r.grids,
            errors.join(", "),
            orders.join(", "),
            r.threshold
        )
        .map_err(Error::io("<mms output>"))?;
    }
    Ok(all)
}

/// Per-value outcome of a sweep.
pub struct SweepRow {
    pub value: f64,
    pub final_u_sup: Option<f64>,
    pub max_u_sup: Option<f64>,
    pub all_bounded: Option<bool>,
    pub status: String,
}

fn set_sweep_value(cfg: &mut RunConfig, param: &str, value: f64) -> Result<()> {
    let (chi, xi, mu) = (cfg.params.chi, cfg.params.xi, cfg.params.mu);
    cfg.params = match param {
        "chi" => crate::model::Params::new(value, xi, mu)?,
        "xi" => crate::model::Params::new(chi, value, mu)?,
        "mu" => crate::model::Params::new(chi, xi, value)?,
        other => return Err(Error::UnknownSweepParameter(other.to_string())),
    };
    Ok(())
}

/// `chemhapto sweep <cfg> --param p --values a,b,c`: independent simulations
/// per value, one subdirectory each, plus `sweep_summary.csv`. A failing run
/// is recorded in the summary without aborting its siblings. Returns true iff
/// every run succeeded.
pub fn cmd_sweep(
    cfg_path: &Path,
    param: &str,
    values: &[f64],
    out_root: Option<&Path>,
) -> Result<bool> {
    let base_cfg = RunConfig::from_path(cfg_path)?;
    // Validate the parameter name up front.
    set_sweep_value(&mut base_cfg.clone(), param, base_cfg.params.mu)?;
    let base_out = resolve_out_dir(&base_cfg, out_root);
    fs::create_dir_all(&base_out).map_err(Error::io(&base_out))?;

    let jobs = base_cfg.jobs.max(1);
    let mut rows: Vec<Option<SweepRow>> = Vec::new();
    rows.resize_with(values.len(), || None);

    let run_one = |value: f64| -> SweepRow {
        let mut cfg = base_cfg.clone();
        if let Err(e) = set_sweep_value(&mut cfg, param, value) {
            return SweepRow {
                value,
                final_u_sup: None,
                max_u_sup: None,
                all_bounded: None,
                status: format!("failed: {e}"),
            };
        }
        let dir = base_out.join(format!("{param}_{value}"));
        match run_simulation(&cfg, &dir) {
            Ok(summary) => {
                let max_u_sup = summary
                    .records
                    .iter()
                    .fold(0.0_f64, |m, r| m.max(r.u_sup));
                SweepRow {
                    value,
                    final_u_sup: summary.records.last().map(|r| r.u_sup),
                    max_u_sup: Some(max_u_sup),
                    all_bounded: Some(summary.all_bounded),
                    status: "ok".to_string(),
                }
            }
            Err(e) => SweepRow {
                value,
                final_u_sup: None,
                max_u_sup: None,
                all_bounded: None,
                status: format!("failed: {e}"),
            },
        }
    };

    if jobs == 1 {
        for (slot, &value) in rows.iter_mut().zip(values) {
            *slot = Some(run_one(value));
        }
    } else {
        std::thread::scope(|scope| {
            let mut pending: Vec<(usize, f64)> = values.iter().copied().enumerate().collect();
            while !pending.is_empty() {
                let batch: Vec<(usize, f64)> =
                    pending.drain(..pending.len().min(jobs)).collect();
                let handles: Vec<_> = batch
                    .into_iter()
                    .map(|(idx, value)| (idx, scope.spawn(move || run_one(value))))
                    .collect();
                for (idx, handle) in handles {
                    rows[idx] = Some(handle.join().expect("sweep worker panicked"));
                }
            }
        });
    }

    let summary_path = base_out.join("sweep_summary.csv");
    let mut text = String::from("value,final_u_sup,max_u_sup,all_bounded,status\n");
    let mut all_ok = true;
    for row in rows.into_iter().flatten() {
        let fmt_opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let bounded = row
            .all_bounded
            .map(|b| b.to_string())
            .unwrap_or_default();
        all_ok &= row.status == "ok";
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            row.value,
            fmt_opt(row.final_u_sup),
            fmt_opt(row.max_u_sup),
            bounded,
            row.status
        ));
    }
    fs::write(&summary_path, text).map_err(Error::io(summary_path))?;
    Ok(all_ok)
}
