//! Run configuration: a line-based `key=value` file plus command-line
//! overrides. Every tabular output is CSV so runs diff cleanly.

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::gen::SplitStrategy;
use crate::hypothesis::HypothesisClass;
use crate::protocol::ApproxMode;

/// Where the instance comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    /// `instance-file`: one `point,label` line per example.
    File,
    RandomRealizable,
    /// Realizable base with `plant-opt` labels flipped at distinct points.
    RandomNoisy,
    /// The set-disjointness sweep over `sweep-rs`.
    DisjSweep,
}

impl Source {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "file" => Ok(Source::File),
            "random-realizable" => Ok(Source::RandomRealizable),
            "random-noisy" => Ok(Source::RandomNoisy),
            "disj-sweep" => Ok(Source::DisjSweep),
            other => Err(Error::Protocol(format!("unknown source `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub class: String,
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub source: Source,
    pub split: SplitStrategy,
    pub seed: u64,
    pub approx_mode: ApproxMode,
    pub plant_opt: usize,
    pub instance_file: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub sweep_rs: Vec<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            class: "thresholds".into(),
            n: 32,
            k: 2,
            m: 64,
            source: Source::RandomRealizable,
            split: SplitStrategy::RoundRobin,
            seed: 0,
            approx_mode: ApproxMode::ExactDeterministic,
            plant_opt: 0,
            instance_file: None,
            out_dir: None,
            sweep_rs: vec![1, 2, 4, 8, 16, 32],
        }
    }
}

impl RunConfig {
    /// Apply one `key=value` setting; shared by the file parser and the
    /// command-line overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Protocol(format!("invalid {what}: `{value}`"));
        match key {
            "class" => match value {
                "singletons" | "thresholds" => self.class = value.into(),
                _ => return Err(bad("class")),
            },
            "n" => self.n = value.parse().map_err(|_| bad("n"))?,
            "k" => self.k = value.parse().map_err(|_| bad("k"))?,
            "m" => self.m = value.parse().map_err(|_| bad("m"))?,
            "source" => self.source = Source::parse(value)?,
            "split" => self.split = SplitStrategy::parse(value)?,
            "seed" => self.seed = value.parse().map_err(|_| bad("seed"))?,
            "approx-mode" => {
                self.approx_mode = match value {
                    "randomized" => ApproxMode::Randomized,
                    "exact-deterministic" => ApproxMode::ExactDeterministic,
                    _ => return Err(bad("approx-mode")),
                }
            }
            "plant-opt" => self.plant_opt = value.parse().map_err(|_| bad("plant-opt"))?,
            "instance-file" => self.instance_file = Some(PathBuf::from(value)),
            "out-dir" => self.out_dir = Some(PathBuf::from(value)),
            "sweep-rs" => {
                self.sweep_rs = value
                    .split(',')
                    .map(|v| v.trim().parse().map_err(|_| bad("sweep-rs")))
                    .collect::<Result<Vec<_>>>()?;
            }
            other => return Err(Error::Protocol(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Parse a config file: one `key=value` per line, `#` comments and
    /// blank lines ignored.
    pub fn parse_file(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Protocol(
                format!("config line {}: expected key=value, got `{line}`", lineno + 1),
            ))?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Protocol("n must be positive".into()));
        }
        if self.k == 0 {
            return Err(Error::Protocol("k must be positive".into()));
        }
        if self.source == Source::File && self.instance_file.is_none() {
            return Err(Error::Protocol("source=file requires instance-file".into()));
        }
        if self.source == Source::RandomNoisy && self.plant_opt > self.m {
            return Err(Error::Protocol("plant-opt exceeds m".into()));
        }
        Ok(())
    }

    pub fn build_class(&self) -> Result<HypothesisClass> {
        match self.class.as_str() {
            "singletons" => Ok(HypothesisClass::singletons(self.n)),
            "thresholds" => Ok(HypothesisClass::thresholds(self.n)),
            other => Err(Error::Protocol(format!("unknown class `{other}`"))),
        }
    }

    /// The config echoed back in file syntax; written next to run outputs
    /// so every summary is reproducible from artifacts alone.
    pub fn to_file_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("class={}\n", self.class));
        s.push_str(&format!("n={}\n", self.n));
        s.push_str(&format!("k={}\n", self.k));
        s.push_str(&format!("m={}\n", self.m));
        s.push_str(&format!(
            "source={}\n",
            match self.source {
                Source::File => "file",
                Source::RandomRealizable => "random-realizable",
                Source::RandomNoisy => "random-noisy",
                Source::DisjSweep => "disj-sweep",
            }
        ));
        s.push_str(&format!("split={}\n", self.split.as_str()));
        s.push_str(&format!("seed={}\n", self.seed));
        s.push_str(&format!(
            "approx-mode={}\n",
            match self.approx_mode {
                ApproxMode::Randomized => "randomized",
                ApproxMode::ExactDeterministic => "exact-deterministic",
            }
        ));
        s.push_str(&format!("plant-opt={}\n", self.plant_opt));
        if let Some(p) = &self.instance_file {
            s.push_str(&format!("instance-file={}\n", p.display()));
        }
        s.push_str(&format!(
            "sweep-rs={}\n",
            self.sweep_rs.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(",")
        ));
        s
    }
}
