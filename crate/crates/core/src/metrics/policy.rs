use crate::model::rank::argmax;
use crate::{Error, Result};

/// Share of positive records whose logged item is the scorer's top item.
///
/// `scores[r]` holds the candidate scores (indexed by item id) for the user
/// of positive record `r`, and `logged_items[r]` the item that user saw.
/// Ties go to the lowest item id.
pub fn recall_at_1<S: AsRef<[f64]>>(scores: &[S], logged_items: &[usize]) -> Result<f64> {
    if scores.len() != logged_items.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: logged_items.len(),
        });
    }
    if scores.is_empty() {
        return Err(Error::UndefinedMetric(
            "recall@1 is undefined without positive records".into(),
        ));
    }
    let hits = scores
        .iter()
        .zip(logged_items)
        .filter(|(s, &item)| {
            let s = s.as_ref();
            !s.is_empty() && argmax(s) == item
        })
        .count();
    Ok(hits as f64 / scores.len() as f64)
}

/// One logged impression together with the evaluated policy's choice for
/// that user.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoggedOutcome {
    pub logged_item: usize,
    pub label: u8,
    pub policy_choice: usize,
}

/// Average expected response:
/// `(1/|S|) Σ_s Σ_{i∈I} y_s · 1{π(s_u) = i} · 1{s_i = i}`.
pub fn aer(log: &[LoggedOutcome], candidates: &[usize]) -> Result<f64> {
    if log.is_empty() {
        return Err(Error::UndefinedMetric("AER needs at least one record".into()));
    }
    if let Some(bad) = log.iter().find(|s| !candidates.contains(&s.logged_item)) {
        return Err(Error::UnknownItem(bad.logged_item));
    }
    let mut total = 0.0;
    for s in log {
        for &i in candidates {
            if s.policy_choice == i && s.logged_item == i {
                total += f64::from(s.label);
            }
        }
    }
    Ok(total / log.len() as f64)
}
