//! Monte Carlo runner. Trials run in parallel, each with streams derived
//! from `(master_seed, trial)`, and are reduced in trial order so the report
//! does not depend on scheduling.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::bb84::run_bb84;
use crate::error::{Error, Result};
use crate::harness::config::{ConfigEcho, ExperimentConfig};
use crate::harness::stats::Stat;
use crate::seedqkd::{run_seed_protocol, KeyName};
use crate::session::SessionSources;
use crate::swap::run_swap;
use crate::transcript::{write_records, Protocol, SessionRecord};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KeyTrial {
    pub name: String,
    /// Reconciled key length over pulses per round.
    pub yield_ratio: f64,
    pub qber: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialStats {
    pub trial: u64,
    pub sifting_rate: Option<f64>,
    pub keys: Vec<KeyTrial>,
    /// Total reconciled key bits over pulses sent.
    pub bits_per_pulse: f64,
    pub aborted: bool,
    /// Both parties hold identical copies of every key.
    pub verified: bool,
    pub coincidence_rate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KeyAggregate {
    pub name: String,
    pub yield_ratio: Stat,
    pub qber: Option<Stat>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config: ConfigEcho,
    pub trials: usize,
    pub sifting_rate: Option<Stat>,
    pub keys: Vec<KeyAggregate>,
    pub bits_per_pulse: Stat,
    pub abort_rate: f64,
    pub verified_rate: f64,
    pub coincidence_rate: Option<Stat>,
    pub per_trial: Vec<TrialStats>,
}

fn ratio(len: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        len as f64 / n as f64
    }
}

fn run_trial(config: &ExperimentConfig, trial: u64) -> Result<(TrialStats, Vec<SessionRecord>)> {
    let n = config.n;
    match config.protocol {
        Protocol::Bb84 => {
            let s = run_bb84(&config.session()?, &mut SessionSources::derive(config.master_seed, trial))?;
            let rate = s.sifting_rate();
            let stats = TrialStats {
                trial,
                sifting_rate: Some(rate),
                keys: vec![KeyTrial {
                    name: "key".into(),
                    yield_ratio: rate,
                    qber: s.qber.as_ref().map(|q| q.qber),
                }],
                bits_per_pulse: rate,
                aborted: s.aborted,
                verified: s.alice_key == s.sift.sifted_key,
                coincidence_rate: None,
            };
            Ok((stats, vec![s.record]))
        }
        Protocol::Seed => {
            let s = run_seed_protocol(&config.session()?, &mut SessionSources::derive(config.master_seed, trial))?;
            let rec = &s.reconciliation;
            let keys = KeyName::ALL
                .iter()
                .map(|&name| KeyTrial {
                    name: name.as_str().into(),
                    yield_ratio: ratio(rec.alice_out.get(name).len(), n),
                    qber: s.qber(name),
                })
                .collect();
            let stats = TrialStats {
                trial,
                sifting_rate: None,
                keys,
                bits_per_pulse: ratio(4 * rec.alice_out.len(), s.pulses()),
                aborted: s.aborted,
                verified: KeyName::ALL
                    .iter()
                    .all(|&k| rec.alice_out.get(k) == rec.bob_out.get(k)),
                coincidence_rate: None,
            };
            Ok((stats, vec![s.record]))
        }
        Protocol::Swap => {
            let out = run_swap(&config.swap()?, config.master_seed, trial)?;
            let pulses = out.central.session_a.pulses() + out.central.session_b.pulses();
            let stats = TrialStats {
                trial,
                sifting_rate: None,
                keys: vec![KeyTrial {
                    name: "common".into(),
                    yield_ratio: ratio(out.alice_key.len(), n),
                    qber: None,
                }],
                bits_per_pulse: ratio(out.alice_key.len(), pulses),
                aborted: out.aborted,
                verified: out.alice_key == out.bob_key,
                coincidence_rate: Some(out.coincidence_rate()),
            };
            Ok((stats, out.records))
        }
    }
}

fn write_trial_transcript(dir: &Path, trial: u64, records: &[SessionRecord]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.display().to_string(),
        message: e.to_string(),
    })?;
    write_records(records, &dir.join(format!("trial-{trial:05}.txt")))
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let per_trial = (0..config.trials as u64)
        .into_par_iter()
        .map(|trial| {
            let (stats, records) = run_trial(config, trial)?;
            if let Some(dir) = &config.transcript_dir {
                write_trial_transcript(dir, trial, &records)?;
            }
            Ok(stats)
        })
        .collect::<Result<Vec<_>>>()?;

    let report = aggregate(config.echo(), per_trial);
    if let Some(path) = &config.output_path {
        fs::write(path, report.to_json()).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
    }
    Ok(report)
}

/// Reduces per-trial statistics in the order given.
pub fn aggregate(config: ConfigEcho, per_trial: Vec<TrialStats>) -> ExperimentReport {
    let trials = per_trial.len();
    let collect = |f: &dyn Fn(&TrialStats) -> Option<f64>| -> Vec<f64> { per_trial.iter().filter_map(f).collect() };
    let names: Vec<String> = per_trial
        .first()
        .map(|t| t.keys.iter().map(|k| k.name.clone()).collect())
        .unwrap_or_default();
    let keys = names
        .iter()
        .enumerate()
        .map(|(slot, name)| KeyAggregate {
            name: name.clone(),
            yield_ratio: Stat::from_values(&collect(&|t| Some(t.keys[slot].yield_ratio)))
                .expect("at least one trial"),
            qber: Stat::from_values(&collect(&|t| t.keys[slot].qber)),
        })
        .collect();
    let frac = |f: &dyn Fn(&TrialStats) -> bool| per_trial.iter().filter(|t| f(t)).count() as f64 / trials as f64;

    ExperimentReport {
        trials,
        sifting_rate: Stat::from_values(&collect(&|t| t.sifting_rate)),
        keys,
        bits_per_pulse: Stat::from_values(&collect(&|t| Some(t.bits_per_pulse))).expect("at least one trial"),
        abort_rate: frac(&|t| t.aborted),
        verified_rate: frac(&|t| t.verified),
        coincidence_rate: Stat::from_values(&collect(&|t| t.coincidence_rate)),
        config,
        per_trial,
    }
}

impl ExperimentReport {
    pub fn key(&self, name: &str) -> Option<&KeyAggregate> {
        self.keys.iter().find(|k| k.name == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn render_text(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "protocol {}  n {}  trials {}  seed {}  rng {}",
            c.protocol, c.n, self.trials, c.seed, c.rng
        );
        let _ = writeln!(
            out,
            "channel flip {} loss {}  eve {} fraction {}  sacrifice {} threshold {}",
            c.flip, c.loss, c.eve, c.eve_fraction, c.sacrifice, c.threshold
        );
        let fmt_stat = |s: &Stat| format!("{:.6} ± {:.6}", s.mean, s.stddev);
        if let Some(s) = &self.sifting_rate {
            let _ = writeln!(out, "sifting rate      {}", fmt_stat(s));
        }
        if let Some(s) = &self.coincidence_rate {
            let _ = writeln!(out, "coincidence rate  {}", fmt_stat(s));
        }
        for k in &self.keys {
            let qber = k.qber.as_ref().map_or("n/a".to_owned(), fmt_stat);
            let _ = writeln!(
                out,
                "{:<8} yield {}  qber {}",
                k.name,
                fmt_stat(&k.yield_ratio),
                qber
            );
        }
        let _ = writeln!(out, "bits per pulse    {}", fmt_stat(&self.bits_per_pulse));
        let _ = writeln!(out, "abort rate        {:.4}", self.abort_rate);
        let _ = writeln!(out, "verified rate     {:.4}", self.verified_rate);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_yield_is_exact_per_trial() {
        let mut config = ExperimentConfig::new(Protocol::Seed, 500, 8, 11);
        config.sacrifice_fraction = 0.0;
        let report = run_experiment(&config).unwrap();
        for t in &report.per_trial {
            assert!(t.keys.iter().all(|k| k.yield_ratio == 1.0));
            assert_eq!(t.bits_per_pulse, 2.0);
            assert!(t.verified && !t.aborted);
        }
        assert_eq!(report.key("key_i").unwrap().yield_ratio.count, 8);
    }

    #[test]
    fn aggregate_ignores_trial_order() {
        let config = ExperimentConfig::new(Protocol::Bb84, 300, 6, 5);
        let report = run_experiment(&config).unwrap();
        let mut shuffled = report.per_trial.clone();
        shuffled.reverse();
        shuffled.swap(0, 3);
        let again = aggregate(config.echo(), shuffled);
        let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
        assert!(close(again.sifting_rate.unwrap().mean, report.sifting_rate.unwrap().mean));
        assert!(close(again.sifting_rate.unwrap().stddev, report.sifting_rate.unwrap().stddev));
        assert_eq!(again.abort_rate, report.abort_rate);
    }

    #[test]
    fn rates_stay_in_unit_interval() {
        let mut config = ExperimentConfig::new(Protocol::Seed, 400, 4, 2);
        config.flip = 0.05;
        config.loss = 0.1;
        let report = run_experiment(&config).unwrap();
        for t in &report.per_trial {
            for k in &t.keys {
                assert!((0.0..=1.0).contains(&k.yield_ratio));
                assert!(k.qber.is_none_or(|q| (0.0..=1.0).contains(&q)));
            }
        }
    }

    #[test]
    fn swap_reports_coincidence() {
        let config = ExperimentConfig::new(Protocol::Swap, 1_000, 3, 9);
        let report = run_experiment(&config).unwrap();
        let c = report.coincidence_rate.unwrap();
        assert_eq!(c.count, 3);
        assert!((c.mean - 0.5).abs() < 0.1);
        assert_eq!(report.verified_rate, 1.0);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let config = ExperimentConfig::new(Protocol::Seed, 10, 0, 0);
        assert!(matches!(run_experiment(&config), Err(Error::Config(_))));
    }
}
