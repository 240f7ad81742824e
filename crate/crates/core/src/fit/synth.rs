use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Gamma;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::EnsembleModel;
use crate::spectrum::{homodyne_psd, PsdTrace, SpectrumRequest};

/// One measured (or synthesized) trace with its number of periodogram
/// averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceData {
    pub trace: PsdTrace,
    pub n_avg: f64,
}

pub(crate) fn check_n_avg(n_avg: f64) -> Result<()> {
    if !(n_avg >= 1.0) || !n_avg.is_finite() {
        return Err(invalid(format!(
            "n_avg must be finite and >= 1, got {n_avg}"
        )));
    }
    Ok(())
}

/// Averaged-periodogram data drawn around the true PSD.
///
/// Each bin is the full-engine PSD times an independent Gamma variate with
/// shape `n_avg` and unit mean. Traces are drawn in the order of `angles`,
/// bins in grid order, from a ChaCha8 stream seeded with `seed`.
pub fn synthesize_dataset(
    model: &EnsembleModel,
    angles: &[f64],
    grid: &[f64],
    n_avg: f64,
    seed: u64,
) -> Result<Vec<TraceData>> {
    check_n_avg(n_avg)?;
    let truth = homodyne_psd(model, &SpectrumRequest::new(grid.to_vec(), angles.to_vec()))?;
    let noise = Gamma::new(n_avg, 1.0 / n_avg).map_err(|e| invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(truth
        .into_iter()
        .map(|mut trace| {
            for v in trace.values_sn.iter_mut() {
                *v *= rng.sample(noise);
            }
            TraceData { trace, n_avg }
        })
        .collect())
}
