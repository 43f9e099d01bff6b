use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::Record;
use crate::model::Inputs;
use crate::rng;

/// Contiguous arrays for a mini-batch of records.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub user_features: Vec<usize>,
    pub items: Vec<usize>,
    pub labels: Vec<u8>,
    /// Positions of the records in the source slice.
    pub rows: Vec<usize>,
}

impl Batch {
    pub fn from_rows(records: &[Record], rows: &[usize]) -> Self {
        let mut b = Batch {
            user_features: Vec::new(),
            items: Vec::with_capacity(rows.len()),
            labels: Vec::with_capacity(rows.len()),
            rows: rows.to_vec(),
        };
        for &i in rows {
            let r = &records[i];
            b.user_features.extend_from_slice(&r.features);
            b.items.push(r.item_id);
            b.labels.push(r.label);
        }
        b
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn inputs(&self) -> Inputs<'_> {
        Inputs::new(&self.user_features, &self.items)
    }
}

/// Shuffles record positions with a stream derived from `(seed, epoch)` and
/// yields every record exactly once. The final batch may be short.
pub fn iterate_batches(
    records: &[Record],
    batch_size: usize,
    seed: u64,
    epoch: u64,
) -> impl Iterator<Item = Batch> + '_ {
    let size = batch_size.max(1);
    let mut order: Vec<usize> = (0..records.len()).collect();
    let mut r = rng::seeded(rng::derive(seed, epoch));
    order.shuffle(&mut r);
    let chunks: Vec<Vec<usize>> = order.chunks(size).map(<[usize]>::to_vec).collect();
    chunks.into_iter().map(move |rows| Batch::from_rows(records, &rows))
}
