//! The experiment runner behind the `distboost` binary: `run` executes one
//! protocol run and writes its artifacts, `verify` runs the invariant
//! suite with a negative control, `sweep` emits the disjointness scaling
//! table.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{RunConfig, Source};
use crate::error::{Error, Result};
use crate::gen::{
    planted_opt_instance, random_noisy_flips, random_realizable, split, SplitStrategy,
};
use crate::hardness::{disj, opt_sweep, sweep_csv, DisjInstance};
use crate::hypothesis::opt;
use crate::model::{best_any_classifier_errors, empirical_errors, Sample};
use crate::network::Channel;
use crate::protocol::{accurately_classify, ProtocolConfig};

#[derive(Parser)]
#[command(name = "distboost", about = "Distributed boosting protocol simulator", version)]
pub struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute one protocol run and write summary, ledger and transcript.
    Run(CommonArgs),
    /// Run the invariant suite, including a corrupted-update negative
    /// control and exhaustive small disjointness agreement.
    Verify(CommonArgs),
    /// Run the disjointness sweep and emit the scaling CSV.
    Sweep(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// key=value config file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Hypothesis class: singletons | thresholds.
    #[arg(long)]
    class: Option<String>,
    /// Domain size.
    #[arg(long)]
    n: Option<usize>,
    /// Number of players.
    #[arg(long)]
    k: Option<usize>,
    /// Sample size for generated instances.
    #[arg(long)]
    m: Option<usize>,
    /// Instance source: file | random-realizable | random-noisy | disj-sweep.
    #[arg(long)]
    source: Option<String>,
    /// Split strategy: round-robin | contiguous | adversarial.
    #[arg(long)]
    split: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// randomized | exact-deterministic.
    #[arg(long = "approx-mode")]
    approx_mode: Option<String>,
    /// Number of labels to flip for random-noisy instances.
    #[arg(long = "plant-opt")]
    plant_opt: Option<usize>,
    #[arg(long = "instance-file")]
    instance_file: Option<PathBuf>,
    /// Directory for artifacts (summary, config echo, instance, CSVs).
    #[arg(long = "out-dir")]
    out_dir: Option<PathBuf>,
    /// Comma-separated r values for the sweep.
    #[arg(long = "sweep-rs")]
    sweep_rs: Option<String>,
}

impl CommonArgs {
    fn to_config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Error::Protocol(format!("read {}: {e}", path.display())))?;
                RunConfig::parse_file(&text)?
            }
            None => RunConfig::default(),
        };
        let overrides: [(&str, Option<String>); 10] = [
            ("class", self.class.clone()),
            ("n", self.n.map(|v| v.to_string())),
            ("k", self.k.map(|v| v.to_string())),
            ("m", self.m.map(|v| v.to_string())),
            ("source", self.source.clone()),
            ("split", self.split.clone()),
            ("seed", self.seed.map(|v| v.to_string())),
            ("approx-mode", self.approx_mode.clone()),
            ("plant-opt", self.plant_opt.map(|v| v.to_string())),
            ("sweep-rs", self.sweep_rs.clone()),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                cfg.set(key, &v)?;
            }
        }
        if let Some(p) = &self.instance_file {
            cfg.instance_file = Some(p.clone());
        }
        if let Some(p) = &self.out_dir {
            cfg.out_dir = Some(p.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Entry point; returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return 2;
        }
    };
    let outcome = match &cli.cmd {
        Cmd::Run(a) => a.to_config().and_then(cmd_run),
        Cmd::Verify(a) => a.to_config().and_then(cmd_verify),
        Cmd::Sweep(a) => a.to_config().and_then(cmd_sweep),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn protocol_config(cfg: &RunConfig) -> ProtocolConfig {
    ProtocolConfig { approx_mode: cfg.approx_mode, ..ProtocolConfig::default() }
}

fn build_instance(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<Sample> {
    let class = cfg.build_class()?;
    match cfg.source {
        Source::File => {
            let path = cfg.instance_file.as_ref().expect("validated");
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Protocol(format!("read {}: {e}", path.display())))?;
            Sample::from_lines(cfg.n, &text)
        }
        Source::RandomRealizable => random_realizable(&class, cfg.m, rng),
        Source::RandomNoisy => random_noisy_flips(&class, cfg.m, cfg.plant_opt, rng),
        Source::DisjSweep => Err(Error::Protocol(
            "source=disj-sweep runs through the sweep subcommand".into(),
        )),
    }
}

fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir)
        .and_then(|_| fs::write(dir.join(name), contents))
        .map_err(|e| Error::Protocol(format!("write {}/{name}: {e}", dir.display())))
}

fn cmd_run(cfg: RunConfig) -> Result<i32> {
    if cfg.source == Source::DisjSweep {
        return cmd_sweep(cfg);
    }
    let class = cfg.build_class()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let s = build_instance(&cfg, &mut rng)?;
    let planted_opt = opt(&s, &class).0;
    if cfg.source == Source::RandomNoisy && planted_opt > cfg.plant_opt {
        return Err(Error::Protocol(format!(
            "oracle refutes planted bound: opt={planted_opt} > plant-opt={}",
            cfg.plant_opt
        )));
    }
    let ds = split(&s, cfg.k, cfg.split)?;
    let mut ch = Channel::new();
    let result = accurately_classify(&ds, &class, &mut ch, cfg.seed, &protocol_config(&cfg))?;
    let errors = empirical_errors(&s, &result.classifier, &class);
    let best_any = best_any_classifier_errors(&s);

    let mut summary = String::new();
    summary.push_str(&format!("errors={errors}\n"));
    summary.push_str(&format!("opt={planted_opt}\n"));
    summary.push_str(&format!("best_any={best_any}\n"));
    summary.push_str(&format!("stuck_iterations={}\n", result.stuck_iterations));
    summary.push_str(&format!("total_bits={}\n", ch.total_bits()));
    summary.push_str(&format!("uplink_bits={}\n", ch.uplink_bits()));
    summary.push_str(&format!("downlink_bits={}\n", ch.downlink_bits()));
    summary.push_str(&format!("closed_form_bound={}\n", result.closed_form_bound));
    summary.push_str(&format!("digest={}\n", ch.digest()));
    summary.push_str(&format!("invariants_ok={}\n", result.invariants.all_ok()));
    print!("{summary}");

    if let Some(dir) = &cfg.out_dir {
        write_artifact(dir, "summary.txt", &summary)?;
        write_artifact(dir, "config.txt", &cfg.to_file_text())?;
        write_artifact(dir, "instance.txt", &s.to_lines())?;
        write_artifact(dir, "ledger.csv", &ch.ledger_csv())?;
        write_artifact(dir, "transcript.csv", &ch.transcript_csv())?;
        write_artifact(dir, "invariants.txt", &result.invariants.report())?;
    }
    Ok(if result.invariants.all_ok() { 0 } else { 1 })
}

fn cmd_verify(cfg: RunConfig) -> Result<i32> {
    let mut failures = 0;
    let mut check = |name: &str, ok: bool| {
        println!("{name}: {}", if ok { "pass" } else { "FAIL" });
        if !ok {
            failures += 1;
        }
    };

    // Positive suite: realizable and noisy instances under both classes.
    let pcfg = protocol_config(&cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for (name, class) in [
        ("singletons", crate::hypothesis::HypothesisClass::singletons(32)),
        ("thresholds", crate::hypothesis::HypothesisClass::thresholds(32)),
    ] {
        let mut all_ok = true;
        let mut consistent = true;
        for planted in 0..4usize {
            let s = if planted == 0 {
                random_realizable(&class, 48, &mut rng)?
            } else {
                planted_opt_instance(&class, 40, planted, &mut rng)?
            };
            for strategy in
                [SplitStrategy::RoundRobin, SplitStrategy::Contiguous, SplitStrategy::Adversarial]
            {
                let ds = split(&s, cfg.k.max(2), strategy)?;
                let mut ch = Channel::new();
                let r = accurately_classify(&ds, &class, &mut ch, cfg.seed, &pcfg)?;
                all_ok &= r.invariants.all_ok();
                consistent &=
                    empirical_errors(&s, &r.classifier, &class) <= planted
                        && r.stuck_iterations <= planted;
            }
        }
        check(&format!("invariant-suite-{name}"), all_ok);
        check(&format!("error-bound-{name}"), consistent);
    }

    // Negative control: a corrupted weight update must trip the checker.
    {
        let class = crate::hypothesis::HypothesisClass::thresholds(32);
        let s = random_realizable(&class, 48, &mut rng)?;
        let ds = split(&s, 2, SplitStrategy::RoundRobin)?;
        let sab = ProtocolConfig { sabotage_weight_update: true, ..pcfg.clone() };
        let mut ch = Channel::new();
        let tripped = match accurately_classify(&ds, &class, &mut ch, cfg.seed, &sab) {
            Ok(r) => !r.invariants.all_ok(),
            Err(_) => true,
        };
        check("negative-control-corrupted-update", tripped);
    }

    // Exhaustive disjointness agreement for r <= 4.
    {
        let r = 4usize;
        let mut agree = true;
        for xv in 0..(1u32 << r) {
            for yv in 0..(1u32 << r) {
                let x: Vec<bool> = (0..r).map(|i| xv >> i & 1 == 1).collect();
                let y: Vec<bool> = (0..r).map(|i| yv >> i & 1 == 1).collect();
                let inst = DisjInstance::new(&x, &y, 8)?;
                let mut ch = Channel::new();
                let run = crate::hardness::disj_via_learning(&inst, &mut ch, cfg.seed, &pcfg)?;
                agree &= run.output == disj(&x, &y);
            }
        }
        check("disj-exhaustive-r4", agree);
    }

    println!("verify: {}", if failures == 0 { "all pass" } else { "FAILURES" });
    Ok(if failures == 0 { 0 } else { 1 })
}

fn cmd_sweep(cfg: RunConfig) -> Result<i32> {
    let rows = opt_sweep(&cfg.sweep_rs, cfg.n, cfg.seed, &protocol_config(&cfg))?;
    let csv = sweep_csv(&rows);
    print!("{csv}");
    if let Some(dir) = &cfg.out_dir {
        write_artifact(dir, "sweep.csv", &csv)?;
        write_artifact(dir, "config.txt", &cfg.to_file_text())?;
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_writes_artifacts_and_reports_zero_errors() {
        let dir = tempfile::tempdir().unwrap();
        let code = run_cli([
            "distboost",
            "run",
            "--class",
            "thresholds",
            "--n",
            "16",
            "--m",
            "24",
            "--k",
            "2",
            "--seed",
            "3",
            "--out-dir",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
        assert!(summary.contains("errors=0"));
        assert!(summary.contains("stuck_iterations=0"));
        assert!(dir.path().join("ledger.csv").exists());
        assert!(dir.path().join("transcript.csv").exists());
    }

    #[test]
    fn identical_seed_identical_digest() {
        let digest_of = |seed: &str| {
            let dir = tempfile::tempdir().unwrap();
            let code = run_cli([
                "distboost",
                "run",
                "--n",
                "16",
                "--m",
                "20",
                "--seed",
                seed,
                "--approx-mode",
                "randomized",
                "--out-dir",
                dir.path().to_str().unwrap(),
            ]);
            assert_eq!(code, 0);
            let s = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
            s.lines().find(|l| l.starts_with("digest=")).unwrap().to_string()
        };
        assert_eq!(digest_of("11"), digest_of("11"));
        assert_ne!(digest_of("11"), digest_of("12"));
    }

    #[test]
    fn noisy_run_respects_planted_bound() {
        let dir = tempfile::tempdir().unwrap();
        let code = run_cli([
            "distboost",
            "run",
            "--source",
            "random-noisy",
            "--class",
            "singletons",
            "--n",
            "32",
            "--m",
            "40",
            "--plant-opt",
            "3",
            "--seed",
            "5",
            "--out-dir",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let s = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
        let field = |name: &str| -> usize {
            s.lines()
                .find(|l| l.starts_with(&format!("{name}=")))
                .unwrap()
                .split('=')
                .nth(1)
                .unwrap()
                .parse()
                .unwrap()
        };
        assert!(field("errors") <= 3);
        assert!(field("stuck_iterations") <= 3);
    }

    #[test]
    fn sweep_emits_csv() {
        let dir = tempfile::tempdir().unwrap();
        let code = run_cli([
            "distboost",
            "sweep",
            "--n",
            "16",
            "--sweep-rs",
            "1,2",
            "--seed",
            "2",
            "--out-dir",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
        assert!(csv.starts_with("r,opt,stuck_iterations,total_bits"));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn config_file_with_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = dir.path().join("exp.cfg");
        fs::write(&cfg_path, "class=singletons\nn=16\nm=20\nseed=4\n").unwrap();
        let code = run_cli([
            "distboost",
            "run",
            "--config",
            cfg_path.to_str().unwrap(),
            "--n",
            "32",
        ]);
        assert_eq!(code, 0);
    }

    #[test]
    fn bad_flags_are_usage_errors() {
        assert_eq!(run_cli(["distboost", "run", "--class", "parities"]), 2);
        assert_eq!(run_cli(["distboost", "run", "--source", "file"]), 2);
    }
}
