use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::sampler::sample_random_process;
use crate::causal_subspaces::Scenario;
use crate::conic_solver::{SolveStatus, SolverConfig};
use crate::error::Result;
use crate::operator_core::ProcessOperator;
use crate::robustness::{random_robustness, RobustnessOptions};
use crate::sep_cones::{necessary_cone, sufficient_cone, ConeSpec};

#[derive(Clone, Debug)]
pub struct GapSearchConfig {
    pub solver: SolverConfig,
    /// `r*₋ − r*₊` above this flags the sample.
    pub flag_threshold: f64,
    /// Parties the samples are symmetrized over, if any.
    pub symmetric: Option<Vec<String>>,
}

impl Default for GapSearchConfig {
    fn default() -> Self {
        GapSearchConfig { solver: SolverConfig::default(), flag_threshold: 1e-4, symmetric: None }
    }
}

impl GapSearchConfig {
    /// Looser tolerances for scenarios whose necessary-cone SDP has a slow
    /// tail (the 128-dim restricted 4-partite case).
    pub fn for_scenario(scn: &Scenario) -> Self {
        let mut cfg = GapSearchConfig::default();
        if scn.space().total_dim() > 64 {
            cfg.solver.eps_abs = 1e-5;
            cfg.solver.eps_rel = 1e-5;
            cfg.solver.max_iter = 5000;
        }
        cfg
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleStatus {
    Ok,
    /// Gap above the flag threshold: a candidate counterexample.
    Flagged,
    /// At least one solve hit the iteration cap.
    Unconverged,
    Failed,
}

#[derive(Clone, Debug, Serialize)]
pub struct GapSample {
    pub seed: u64,
    /// Necessary-cone robustness (lower bound).
    pub r_plus: f64,
    /// Sufficient-cone robustness (upper bound).
    pub r_minus: f64,
    /// `r*₋ − r*₊`.
    pub gap: f64,
    pub status: SampleStatus,
    pub seconds: f64,
    #[serde(skip)]
    pub operator: Option<ProcessOperator>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GapReport {
    pub master_seed: u64,
    pub flag_threshold: f64,
    pub samples: Vec<GapSample>,
}

impl GapReport {
    pub fn flagged(&self) -> impl Iterator<Item = &GapSample> {
        self.samples.iter().filter(|s| s.status == SampleStatus::Flagged)
    }

    pub fn max_abs_gap(&self) -> f64 {
        self.samples.iter().filter(|s| s.gap.is_finite()).map(|s| s.gap.abs()).fold(0.0, f64::max)
    }

    pub fn count(&self, status: SampleStatus) -> usize {
        self.samples.iter().filter(|s| s.status == status).count()
    }
}

/// Per-sample seeds drawn from a stream keyed by the master seed.
pub fn derive_seeds(master: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    (0..n).map(|_| rng.next_u64()).collect()
}

fn evaluate(
    seed: u64,
    w: ProcessOperator,
    nec: &ConeSpec,
    suf: &ConeSpec,
    cfg: &GapSearchConfig,
) -> GapSample {
    let t0 = Instant::now();
    let opts = RobustnessOptions { solver: cfg.solver.clone(), verify: false, ..Default::default() };
    let solved = random_robustness(&w, nec, &opts).and_then(|p| Ok((p, random_robustness(&w, suf, &opts)?)));
    let seconds = t0.elapsed().as_secs_f64();
    match solved {
        Ok((p, m)) => {
            let gap = m.r_star - p.r_star;
            let status = if gap > cfg.flag_threshold {
                SampleStatus::Flagged
            } else if p.status != SolveStatus::Optimal || m.status != SolveStatus::Optimal {
                SampleStatus::Unconverged
            } else {
                SampleStatus::Ok
            };
            log::info!("sample {seed}: r+ = {:.8}, r- = {:.8}, gap {gap:.2e} ({seconds:.1}s)", p.r_star, m.r_star);
            GapSample { seed, r_plus: p.r_star, r_minus: m.r_star, gap, status, seconds, operator: Some(w), error: None }
        }
        Err(e) => {
            log::warn!("sample {seed} skipped: {e}");
            GapSample {
                seed,
                r_plus: f64::NAN,
                r_minus: f64::NAN,
                gap: f64::NAN,
                status: SampleStatus::Failed,
                seconds,
                operator: Some(w),
                error: Some(e.to_string()),
            }
        }
    }
}

/// Compares the necessary and sufficient robustness bounds on given
/// operators, in parallel on the current rayon pool.
pub fn gap_search_on(scn: &Scenario, samples: Vec<(u64, ProcessOperator)>, cfg: &GapSearchConfig) -> Result<Vec<GapSample>> {
    let nec = necessary_cone(scn)?;
    let suf = sufficient_cone(scn)?;
    let mut out: Vec<GapSample> = samples.into_par_iter().map(|(seed, w)| evaluate(seed, w, &nec, &suf, cfg)).collect();
    for s in out.iter_mut() {
        if s.status != SampleStatus::Flagged && s.status != SampleStatus::Failed {
            s.operator = None;
        }
    }
    Ok(out)
}

/// Samples `n_samples` random processes and compares the necessary and
/// sufficient robustness bounds on each. Flagged and failed samples keep
/// their operator for dumping.
pub fn gap_search(scn: &Scenario, n_samples: usize, seed: u64, cfg: &GapSearchConfig) -> Result<GapReport> {
    let sym: Option<Vec<&str>> = cfg.symmetric.as_ref().map(|v| v.iter().map(String::as_str).collect());
    let samples = derive_seeds(seed, n_samples)
        .into_iter()
        .map(|s| Ok((s, sample_random_process(scn, s, sym.as_deref())?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(GapReport { master_seed: seed, flag_threshold: cfg.flag_threshold, samples: gap_search_on(scn, samples, cfg)? })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_distinct_and_reproducible() {
        let a = derive_seeds(7, 50);
        assert_eq!(a, derive_seeds(7, 50));
        let mut b = a.clone();
        b.sort();
        b.dedup();
        assert_eq!(b.len(), 50);
        assert_ne!(a[0], derive_seeds(8, 1)[0]);
    }
}
