use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Position estimator C = Σ_i [(2i − N − 1)/(N − 1)]·(σ_i^z + 1)/2:
/// −1 for one excitation on the left edge, +1 on the right edge.
pub fn observable_c(sz: &[f64]) -> Result<f64> {
    let n = sz.len();
    if n < 2 {
        return Err(Error::InvalidSize {
            what: "observable C",
            got: n,
            min: 2,
        });
    }
    let nf = n as f64;
    Ok(sz
        .iter()
        .enumerate()
        .map(|(k, s)| (2.0 * (k + 1) as f64 - nf - 1.0) / (nf - 1.0) * (s + 1.0) / 2.0)
        .sum())
}

/// Time series of site magnetizations after a quench, with the derived
/// position observable and its running mean over the sampled grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuenchTrace {
    times: Vec<f64>,
    sz: Vec<Vec<f64>>,
    c_series: Vec<f64>,
    c_cumulative: Vec<f64>,
    n_excitations: Vec<f64>,
    noise_samples: Option<usize>,
}

impl QuenchTrace {
    pub fn from_sz(times: Vec<f64>, sz: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() != sz.len() {
            return Err(Error::domain(format!(
                "{} times but {} magnetization rows",
                times.len(),
                sz.len()
            )));
        }
        if let Some(first) = sz.first() {
            if sz.iter().any(|row| row.len() != first.len()) {
                return Err(Error::domain("ragged magnetization rows"));
            }
        }
        let c_series = sz.iter().map(|row| observable_c(row)).collect::<Result<Vec<_>>>()?;
        let c_cumulative = running_mean(&c_series);
        let n_excitations = sz.iter().map(|row| row.iter().map(|s| (s + 1.0) / 2.0).sum()).collect();
        Ok(QuenchTrace {
            times,
            sz,
            c_series,
            c_cumulative,
            n_excitations,
            noise_samples: None,
        })
    }

    /// Pointwise average of traces sampled on the same grid.
    pub fn mean(traces: &[QuenchTrace]) -> Result<Self> {
        let first = traces.first().ok_or_else(|| Error::domain("no traces to average"))?;
        if traces.iter().any(|t| t.times != first.times || t.n_sites() != first.n_sites()) {
            return Err(Error::domain("traces sampled on different grids"));
        }
        let count = traces.len() as f64;
        let sz = (0..first.times.len())
            .map(|k| {
                (0..first.n_sites())
                    .map(|i| traces.iter().map(|t| t.sz[k][i]).sum::<f64>() / count)
                    .collect()
            })
            .collect();
        QuenchTrace::from_sz(first.times.clone(), sz)
    }

    pub fn with_noise_samples(mut self, samples: usize) -> Self {
        self.noise_samples = Some(samples);
        self
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `sz()[k][i]` is ⟨σ_i^z⟩ at `times()[k]`.
    pub fn sz(&self) -> &[Vec<f64>] {
        &self.sz
    }

    pub fn c_series(&self) -> &[f64] {
        &self.c_series
    }

    pub fn c_cumulative(&self) -> &[f64] {
        &self.c_cumulative
    }

    pub fn n_excitations(&self) -> &[f64] {
        &self.n_excitations
    }

    pub fn noise_samples(&self) -> Option<usize> {
        self.noise_samples
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n_sites(&self) -> usize {
        self.sz.first().map_or(0, Vec::len)
    }

    /// Running mean of each site's magnetization.
    pub fn cumulative_sz(&self) -> Vec<Vec<f64>> {
        let n = self.n_sites();
        let mut acc = vec![0.0; n];
        self.sz
            .iter()
            .enumerate()
            .map(|(k, row)| {
                for (a, s) in acc.iter_mut().zip(row) {
                    *a += s;
                }
                acc.iter().map(|a| a / (k + 1) as f64).collect()
            })
            .collect()
    }

    /// Mean of C over the whole grid (the last cumulative value).
    pub fn time_average_c(&self) -> Option<f64> {
        self.c_cumulative.last().copied()
    }
}

fn running_mean(xs: &[f64]) -> Vec<f64> {
    let mut sum = 0.0;
    xs.iter()
        .enumerate()
        .map(|(k, x)| {
            sum += x;
            sum / (k + 1) as f64
        })
        .collect()
}
