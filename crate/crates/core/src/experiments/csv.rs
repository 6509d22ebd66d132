//! CSV output of ensemble runs.
//!
//! One file per run: the first column is the axis (interactions or
//! trials, integer valued), every further column a recorded mean with
//! ten significant digits. A sidecar `.meta` file holds the exact flat
//! config the run was produced from, so any output can be re-run with
//! `run --config`. The optional meta-controller trace of agent 0 goes
//! to a third file.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{EnsembleConfig, EnsembleRun, TimeSeries};
use crate::agent::{MetaChannel, MetaEvent};
use crate::config::config_to_flat;
use crate::error::Result;

pub fn series_to_csv(series: &TimeSeries) -> String {
    let mut out = String::new();
    out.push_str(series.axis.column_name());
    for (name, _) in &series.columns {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (r, idx) in series.index.iter().enumerate() {
        write!(out, "{idx}").unwrap();
        for (_, col) in &series.columns {
            write!(out, ",{:.9e}", col[r]).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn meta_events_to_csv(events: &[MetaEvent]) -> String {
    let mut out = String::from("t,xi,chosen_action,lambda_internal,current_gamma,current_eta\n");
    for e in events {
        let xi = match e.channel {
            MetaChannel::Eta => "eta",
            MetaChannel::Gamma => "gamma",
        };
        writeln!(
            out,
            "{},{},{},{:.9e},{:.9e},{:.9e}",
            e.t, xi, e.chosen, e.lambda_internal, e.gamma, e.eta
        )
        .unwrap();
    }
    out
}

/// File-name friendly form of a preset or label ("fig7:desk" becomes
/// "fig7_desk").
pub fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

/// Writes `<dir>/<prefix>_<label>.csv` plus its `.meta` sidecar and, if
/// a trace was recorded, `<stem>_meta.csv`. Returns the data file path.
pub fn write_run(
    dir: &Path,
    prefix: &str,
    run: &EnsembleRun,
    cfg: &EnsembleConfig,
) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let stem = format!("{}_{}", sanitize(prefix), sanitize(&run.label));
    let data_path = dir.join(format!("{stem}.csv"));
    fs::write(&data_path, series_to_csv(&run.series))?;
    fs::write(dir.join(format!("{stem}.meta")), config_to_flat(cfg))?;
    if !run.meta_events.is_empty() {
        fs::write(dir.join(format!("{stem}_meta.csv")), meta_events_to_csv(&run.meta_events))?;
    }
    Ok(data_path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Axis;

    #[test]
    fn csv_layout_is_frozen() {
        let series = TimeSeries {
            axis: Axis::Trials,
            index: vec![10, 20],
            columns: vec![
                ("phase".into(), vec![0.0, 1.0]),
                ("reward".into(), vec![2.25, 1.0 / 3.0]),
            ],
        };
        assert_eq!(
            series_to_csv(&series),
            "trials,phase,reward\n10,0.000000000e0,2.250000000e0\n20,1.000000000e0,3.333333333e-1\n"
        );
    }

    #[test]
    fn meta_trace_layout_is_frozen() {
        let events = vec![MetaEvent {
            t: 1200,
            channel: MetaChannel::Eta,
            chosen: "0.4",
            lambda_internal: -1.0,
            gamma: 0.25,
            eta: 0.4,
        }];
        assert_eq!(
            meta_events_to_csv(&events),
            "t,xi,chosen_action,lambda_internal,current_gamma,current_eta\n\
             1200,eta,0.4,-1.000000000e0,2.500000000e-1,4.000000000e-1\n"
        );
    }

    #[test]
    fn names_are_sanitized() {
        assert_eq!(sanitize("fig7:desk"), "fig7_desk");
        assert_eq!(sanitize("n2_eta0.1"), "n2_eta0.1");
        assert_eq!(sanitize("a/b c"), "a_b_c");
    }
}
