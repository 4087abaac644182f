use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::io::{ensure_dir, fmt_f64, read_sequence_csv, sequence_csv, write_atomic};
use super::signal::{simulate, SignalSpec};
use crate::error::{Error, Result};
use crate::model::{
    estimate_variance, resolve_sigma2, Hyperparams, SequenceData, Sigma2Source, DEFAULT_ALPHA,
    DEFAULT_LAMBDA, DEFAULT_V,
};
use crate::oracle::{enumerate_exact_posterior, exact_mean_from};
use crate::sampler::{run_chain, SamplerConfig};
use crate::summaries::{evaluate, Metrics, Summary};

/// How the working noise variance is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Sigma2Choice {
    /// The data's known variance if it has one, else the plug-in estimate.
    #[default]
    Auto,
    /// Always the plug-in estimate.
    Estimate,
    Fixed(f64),
}

impl std::str::FromStr for Sigma2Choice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "auto" => Ok(Sigma2Choice::Auto),
            "estimate" => Ok(Sigma2Choice::Estimate),
            other => other
                .parse::<f64>()
                .map(Sigma2Choice::Fixed)
                .map_err(|_| format!("expected a number, `estimate` or `auto`, got {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub alpha: f64,
    pub v: f64,
    pub lambda: f64,
    pub sigma2: Sigma2Choice,
    pub sampler: SamplerConfig,
    /// Credible level of the marginal intervals.
    pub level: f64,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            v: DEFAULT_V,
            lambda: DEFAULT_LAMBDA,
            sigma2: Sigma2Choice::Auto,
            sampler: SamplerConfig::default(),
            level: 0.95,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.sampler.validate()?;
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::config(format!("level must lie in (0, 1), got {}", self.level)));
        }
        // sigma2 is a placeholder here; the real value is checked once resolved
        Hyperparams::new(self.alpha, self.v, self.lambda, 1.0).map_err(|e| match e {
            Error::Domain(msg) => Error::Config(msg),
            other => other,
        })?;
        if let Sigma2Choice::Fixed(s2) = self.sigma2 {
            if !(s2.is_finite() && s2 > 0.0) {
                return Err(Error::config(format!("sigma2 must be positive, got {s2}")));
            }
        }
        Ok(())
    }

    /// Resolves the noise variance and assembles the hyperparameters.
    pub fn hyperparams_for(&self, data: &SequenceData) -> Result<(Hyperparams, Sigma2Source)> {
        let (sigma2, source) = match self.sigma2 {
            Sigma2Choice::Fixed(s2) => (s2, Sigma2Source::Fixed),
            Sigma2Choice::Auto => resolve_sigma2(data)?,
            Sigma2Choice::Estimate => {
                let s2 = estimate_variance(data)?;
                if s2 <= 0.0 {
                    return Err(Error::domain("plug-in variance estimate is zero (constant sequence)"));
                }
                (s2, Sigma2Source::Estimate)
            }
        };
        Ok((Hyperparams::new(self.alpha, self.v, self.lambda, sigma2)?, source))
    }
}

/// Where observations come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Csv(PathBuf),
    Simulate(SignalSpec),
}

/// Observations plus the true mean vector when it is known.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedData {
    pub data: SequenceData,
    pub truth: Option<Vec<f64>>,
}

pub fn load(source: &DataSource) -> Result<LoadedData> {
    match source {
        DataSource::Csv(path) => Ok(LoadedData {
            data: SequenceData::new(read_sequence_csv(path)?, None)?,
            truth: None,
        }),
        DataSource::Simulate(spec) => {
            let sim = simulate(spec)?;
            Ok(LoadedData {
                data: sim.data,
                truth: Some(sim.truth),
            })
        }
    }
}

/// The machine-readable run summary written to `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryJson {
    pub n: usize,
    pub hyperparams: Hyperparams,
    pub sigma2_used: f64,
    pub sigma2_source: Sigma2Source,
    pub block_size_pmf: BTreeMap<usize, f64>,
    pub acceptance_rates: BTreeMap<String, f64>,
    pub metrics: Option<Metrics>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutput {
    pub data: SequenceData,
    pub hyperparams: Hyperparams,
    pub sigma2_source: Sigma2Source,
    pub summary: Summary,
    pub metrics: Option<Metrics>,
}

impl FitOutput {
    pub fn summary_json(&self) -> SummaryJson {
        SummaryJson {
            n: self.data.len(),
            hyperparams: self.hyperparams,
            sigma2_used: self.hyperparams.sigma2,
            sigma2_source: self.sigma2_source,
            block_size_pmf: self.summary.block_size_pmf.clone(),
            acceptance_rates: self
                .summary
                .acceptance_rates()
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            metrics: self.metrics,
        }
    }

    /// `index,y,post_mean,lo,hi` with 1-based indices.
    pub fn posterior_csv(&self) -> String {
        let mut s = String::from("index,y,post_mean,lo,hi\n");
        for (i, ((y, m), (lo, hi))) in self
            .data
            .y()
            .iter()
            .zip(&self.summary.posterior_mean)
            .zip(&self.summary.intervals)
            .enumerate()
        {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                i + 1,
                fmt_f64(*y),
                fmt_f64(*m),
                fmt_f64(*lo),
                fmt_f64(*hi)
            ));
        }
        s
    }

    pub fn pmf_csv(&self) -> String {
        let mut s = String::from("blocks,prob\n");
        for (b, p) in &self.summary.block_size_pmf {
            s.push_str(&format!("{b},{}\n", fmt_f64(*p)));
        }
        s
    }

    /// Writes `summary.json`, `posterior.csv` and `block_size_pmf.csv`.
    pub fn write(&self, out_dir: &Path) -> Result<()> {
        ensure_dir(out_dir)?;
        let json = serde_json::to_string_pretty(&self.summary_json()).expect("summary serializes");
        write_atomic(out_dir.join("summary.json"), format!("{json}\n").as_bytes())?;
        write_atomic(out_dir.join("posterior.csv"), self.posterior_csv().as_bytes())?;
        write_atomic(out_dir.join("block_size_pmf.csv"), self.pmf_csv().as_bytes())?;
        Ok(())
    }
}

/// Samples the posterior and summarizes it; no files are touched.
pub fn fit_data(loaded: &LoadedData, rc: &RunConfig) -> Result<FitOutput> {
    rc.validate()?;
    let (hp, source) = rc.hyperparams_for(&loaded.data)?;
    let samples = run_chain(&loaded.data, &hp, &rc.sampler)?;
    let summary = Summary::from_samples(&samples, rc.level)?;
    let metrics = loaded
        .truth
        .as_deref()
        .map(|t| evaluate(t, &summary))
        .transpose()?;
    Ok(FitOutput {
        data: loaded.data.clone(),
        hyperparams: hp,
        sigma2_source: source,
        summary,
        metrics,
    })
}

/// Loads, fits and writes all outputs to `rc.out_dir`.
pub fn fit(source: &DataSource, rc: &RunConfig) -> Result<FitOutput> {
    rc.validate()?;
    let loaded = load(source)?;
    let out = fit_data(&loaded, rc)?;
    out.write(&rc.out_dir)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfigEntry {
    pub changepoints: Vec<usize>,
    pub blocks: usize,
    pub log_prob: f64,
    pub prob: f64,
}

/// Exact posterior dump written by the `oracle` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleDump {
    pub n: usize,
    pub hyperparams: Hyperparams,
    pub sigma2_used: f64,
    pub sigma2_source: Sigma2Source,
    pub y: Vec<f64>,
    pub configs: Vec<OracleConfigEntry>,
    pub block_size_pmf: BTreeMap<usize, f64>,
    pub posterior_mean: Vec<f64>,
}

pub fn oracle_dump(loaded: &LoadedData, rc: &RunConfig) -> Result<OracleDump> {
    let (hp, source) = rc.hyperparams_for(&loaded.data)?;
    let post = enumerate_exact_posterior(&loaded.data, &hp)?;
    let posterior_mean = exact_mean_from(&post, &loaded.data)?;
    Ok(OracleDump {
        n: post.n,
        hyperparams: hp,
        sigma2_used: hp.sigma2,
        sigma2_source: source,
        y: loaded.data.y().to_vec(),
        configs: post
            .configs
            .iter()
            .zip(&post.log_weights)
            .map(|(c, &lw)| OracleConfigEntry {
                changepoints: c.changepoints().to_vec(),
                blocks: c.num_blocks(),
                log_prob: lw,
                prob: lw.exp(),
            })
            .collect(),
        block_size_pmf: post.block_size_pmf(),
        posterior_mean,
    })
}

/// Runs the enumerator and writes `oracle.json` to `rc.out_dir`.
pub fn oracle(source: &DataSource, rc: &RunConfig) -> Result<OracleDump> {
    let loaded = load(source)?;
    let dump = oracle_dump(&loaded, rc)?;
    ensure_dir(&rc.out_dir)?;
    let json = serde_json::to_string_pretty(&dump).expect("oracle dump serializes");
    write_atomic(rc.out_dir.join("oracle.json"), format!("{json}\n").as_bytes())?;
    Ok(dump)
}

/// Simulates and writes `data.csv` and `truth.csv` to `out_dir`.
pub fn write_simulation(spec: &SignalSpec, out_dir: &Path) -> Result<LoadedData> {
    let sim = simulate(spec)?;
    ensure_dir(out_dir)?;
    write_atomic(out_dir.join("data.csv"), sequence_csv("y", sim.data.y()).as_bytes())?;
    write_atomic(out_dir.join("truth.csv"), sequence_csv("theta", &sim.truth).as_bytes())?;
    Ok(LoadedData {
        data: sim.data,
        truth: Some(sim.truth),
    })
}
