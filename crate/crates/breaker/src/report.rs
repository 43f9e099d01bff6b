//! Epoch log CSV.

use std::fmt::Write as _;

use breaker_core::trainer::EpochLog;

pub const EPOCHS_FILE: &str = "epochs.csv";
pub const EPOCHS_HEADER: &str = "epoch,loss,loss_p,loss_c,recall_at_1,item_auc_macro,aer,seconds";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn epochs_csv(logs: &[EpochLog]) -> String {
    let mut out = String::from(EPOCHS_HEADER);
    out.push('\n');
    for l in logs {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            l.epoch,
            l.loss,
            l.loss_p,
            l.loss_c,
            opt(l.recall_at_1),
            opt(l.item_auc_macro),
            opt(l.aer),
            opt(l.seconds)
        );
    }
    out
}

/// Parses a log written by [`epochs_csv`].
pub fn parse_epochs_csv(text: &str) -> Option<Vec<EpochLog>> {
    let mut lines = text.lines();
    if lines.next()? != EPOCHS_HEADER {
        return None;
    }
    let num = |s: &str| -> Option<Option<f64>> {
        if s.is_empty() {
            Some(None)
        } else {
            s.parse().ok().map(Some)
        }
    };
    lines
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 8 {
                return None;
            }
            Some(EpochLog {
                epoch: f[0].parse().ok()?,
                loss: f[1].parse().ok()?,
                loss_p: f[2].parse().ok()?,
                loss_c: f[3].parse().ok()?,
                recall_at_1: num(f[4])?,
                item_auc_macro: num(f[5])?,
                aer: num(f[6])?,
                seconds: num(f[7])?,
            })
        })
        .collect()
}
