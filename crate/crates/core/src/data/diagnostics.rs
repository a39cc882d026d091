use serde::{Deserialize, Serialize};

use crate::data::discretize::Discretizer;
use crate::data::table::RawTable;
use crate::error::{Error, Result};

/// How well the training-time domains cover a raw held-out table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinDiagnostics {
    /// Fraction of individual cells that are in-domain.
    pub coverage: f64,
    /// Fraction of rows whose cells are all in-domain.
    pub fidelity: f64,
    pub per_feature_out_of_domain_counts: Vec<(String, usize)>,
}

/// Coverage and fidelity of `raw_test` under `disc`. Fallback mappings
/// (unknown categories, snapped discrete values, non-finite numbers) count
/// as out-of-domain.
pub fn bin_diagnostics(disc: &Discretizer, raw_test: &RawTable) -> Result<BinDiagnostics> {
    if raw_test.is_empty() {
        return Err(Error::Empty("test table for bin diagnostics"));
    }
    let enc = disc.transform(raw_test)?;
    let n = enc.in_domain.len();
    let d = disc.num_features();
    let mut counts = vec![0usize; d];
    let mut cells_in = 0usize;
    let mut rows_in = 0usize;
    for row in &enc.in_domain {
        let mut all = true;
        for (j, &ok) in row.iter().enumerate() {
            if ok {
                cells_in += 1;
            } else {
                counts[j] += 1;
                all = false;
            }
        }
        rows_in += usize::from(all);
    }
    Ok(BinDiagnostics {
        coverage: cells_in as f64 / (n * d) as f64,
        fidelity: rows_in as f64 / n as f64,
        per_feature_out_of_domain_counts: disc
            .features
            .iter()
            .zip(counts)
            .map(|(f, c)| (f.name.clone(), c))
            .collect(),
    })
}
