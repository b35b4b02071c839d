use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use itfl_core::config::{load_config, ExperimentConfig};
use itfl_core::flsim::{run_seeds, write_csv, Aggregator, RunOutput, SimError, Simulation};
use itfl_core::lobyitfl::{
    config_hash, Lobyitfl, LobyitflConfig, MaterialError, SessionHeader, SessionMaterial,
    SessionReader, SessionWriter,
};
use itfl_core::protocol::IterationContext;

use crate::args::{InitArgs, PlotArgs, RunArgs, TrainArgs, VerifyArgs};
use crate::{config_err, plot as svg, run_err, Failure};

const DEFAULT_CONFIG: &str = include_str!("../configs/default.toml");
const SESSION_FILE: &str = "session.itfl";

fn load(path: Option<&Path>) -> Result<ExperimentConfig, Failure> {
    match path {
        Some(p) => load_config(p).map_err(config_err),
        None => ExperimentConfig::from_toml(DEFAULT_CONFIG, Path::new("<bundled default.toml>"))
            .map_err(config_err),
    }
}

/// Loads the configuration and applies command-line overrides.
fn resolve(a: &RunArgs) -> Result<ExperimentConfig, Failure> {
    let mut cfg = load(a.config.as_deref())?;
    if let Some(agg) = a.aggregator {
        cfg.aggregator = agg;
    }
    if let Some(it) = a.iterations {
        cfg.train.iterations = it;
    }
    if let Some(s) = a.seed {
        cfg.seeds = vec![s];
    }
    if let Some(dir) = &a.out {
        cfg.output.dir = dir.clone();
    }
    if let Some(s) = &a.session {
        cfg.output.session = Some(s.clone());
    }
    cfg.validate().map_err(config_err)?;
    Ok(cfg)
}

fn require_lobyitfl(cfg: &ExperimentConfig, what: &str) -> Result<(), Failure> {
    if cfg.aggregator != Aggregator::Lobyitfl {
        return Err(config_err(anyhow!(
            "{what} requires aggregator lobyitfl, configured aggregator is {}",
            cfg.aggregator.name()
        )));
    }
    Ok(())
}

fn create_parent(path: &Path) -> Result<(), Failure> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir)
            .with_context(|| format!("cannot create {}", dir.display()))
            .map_err(run_err),
        _ => Ok(()),
    }
}

pub fn init(a: &InitArgs) -> Result<(), Failure> {
    let cfg = resolve(&a.run)?;
    require_lobyitfl(&cfg, "init")?;
    let path = cfg
        .output
        .session
        .clone()
        .unwrap_or_else(|| cfg.output.dir.join(SESSION_FILE));
    let seed = cfg.seeds[0];
    let params = cfg.params();
    let engine = Lobyitfl::<f64>::new(LobyitflConfig::new(params.clone()).map_err(config_err)?)
        .map_err(run_err)?;

    create_parent(&path)?;
    let file = File::create(&path)
        .with_context(|| format!("cannot create {}", path.display()))
        .map_err(run_err)?;
    let header = SessionHeader {
        config_hash: config_hash(&params),
        modulus: params.modulus,
        iterations: cfg.train.iterations as u64,
    };
    let mut w = SessionWriter::create(BufWriter::new(file), header).map_err(run_err)?;
    for i in 0..cfg.train.iterations {
        w.write_block(&engine.generate_material(IterationContext::new(seed, i)))
            .map_err(run_err)?;
    }
    w.finish().map_err(run_err)?;
    println!(
        "provisioned {} iterations for seed {seed} in {}",
        cfg.train.iterations,
        path.display()
    );
    Ok(())
}

fn read_session(path: &Path, cfg: &ExperimentConfig) -> Result<SessionMaterial, Failure> {
    let file = File::open(path)
        .with_context(|| format!("missing session file {}", path.display()))
        .map_err(run_err)?;
    let mut r = SessionReader::open(BufReader::new(file)).map_err(run_err)?;
    match r.check(&cfg.params()) {
        Err(e @ MaterialError::ConfigMismatch) => return Err(config_err(e)),
        other => other.map_err(run_err)?,
    }
    let provisioned = r.header().iterations as usize;
    if provisioned < cfg.train.iterations {
        return Err(run_err(
            anyhow::Error::new(MaterialError::Exhausted { provisioned }).context(format!(
                "training needs {} iterations",
                cfg.train.iterations
            )),
        ));
    }
    let blocks = (0..provisioned)
        .map(|_| r.next_block())
        .collect::<Result<Vec<_>, _>>()
        .map_err(run_err)?;
    Ok(SessionMaterial::new(blocks))
}

fn sim_err(seed: u64, e: SimError) -> Failure {
    let wrapped = |e| anyhow::Error::new(e).context(format!("seed {seed}"));
    match e {
        SimError::Config(_) => Failure::Config(wrapped(e)),
        _ => Failure::Run(wrapped(e)),
    }
}

fn write_run(dir: &Path, out: &RunOutput) -> Result<(PathBuf, PathBuf), Failure> {
    let stem = format!("{}_seed{}", out.summary.aggregator, out.summary.seed);
    let csv = dir.join(format!("{stem}.csv"));
    let json = dir.join(format!("{stem}.json"));
    let f = File::create(&csv)
        .with_context(|| format!("cannot create {}", csv.display()))
        .map_err(run_err)?;
    write_csv(&out.metrics, BufWriter::new(f)).map_err(run_err)?;
    let text = serde_json::to_string_pretty(&out.summary).map_err(run_err)?;
    fs::write(&json, text + "\n")
        .with_context(|| format!("cannot write {}", json.display()))
        .map_err(run_err)?;
    Ok((csv, json))
}

pub fn train(a: &TrainArgs) -> Result<(), Failure> {
    let cfg = resolve(&a.run)?;
    let runs: Vec<(u64, Result<RunOutput, SimError>)> = match &cfg.output.session {
        Some(path) => {
            require_lobyitfl(&cfg, "a session file")?;
            let &[seed] = cfg.seeds.as_slice() else {
                return Err(config_err(anyhow!(
                    "a session file serves one seed, {} configured (use --seed)",
                    cfg.seeds.len()
                )));
            };
            let session = read_session(path, &cfg)?;
            let run =
                Simulation::<f64>::new(&cfg, seed).and_then(|s| s.with_session(session).run());
            vec![(seed, run)]
        }
        None => cfg
            .seeds
            .iter()
            .copied()
            .zip(run_seeds::<f64>(&cfg))
            .collect(),
    };

    fs::create_dir_all(&cfg.output.dir)
        .with_context(|| format!("cannot create {}", cfg.output.dir.display()))
        .map_err(run_err)?;
    let mut first_failure = None;
    for (seed, run) in runs {
        match run {
            Ok(out) => {
                let (csv, _) = write_run(&cfg.output.dir, &out)?;
                let s = &out.summary;
                println!(
                    "{} seed {}: accuracy {:.4}, loss {:.4}, descent violations {}, exclusions {} -> {}",
                    s.aggregator,
                    s.seed,
                    s.final_accuracy,
                    s.final_loss,
                    s.descent_violations,
                    s.exclusions,
                    csv.display()
                );
            }
            Err(e) => {
                let f = sim_err(seed, e);
                eprintln!("error: {:#}", f.error());
                first_failure.get_or_insert(f);
            }
        }
    }
    first_failure.map_or(Ok(()), Err)
}

pub fn plot(a: &PlotArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&a.csv)
        .with_context(|| format!("cannot read {}", a.csv.display()))
        .map_err(run_err)?;
    let doc = svg::render(&text, &a.series).map_err(config_err)?;
    let out = a.out.clone().unwrap_or_else(|| a.csv.with_extension("svg"));
    create_parent(&out)?;
    fs::write(&out, doc)
        .with_context(|| format!("cannot write {}", out.display()))
        .map_err(run_err)?;
    println!("{}", out.display());
    Ok(())
}

pub fn verify(a: &VerifyArgs) -> Result<(), Failure> {
    let cfg = load(a.config.as_deref())?;
    println!(
        "configuration: {} on {:?}, n={} b={} t={} e={} q={}",
        cfg.aggregator.name(),
        cfg.task.kind,
        cfg.protocol.n,
        cfg.protocol.b,
        cfg.protocol.t,
        cfg.protocol.e,
        cfg.protocol.q
    );
    let reports = itfl_verify::run_all(|r| println!("{r}"));
    let passed = reports.iter().filter(|r| r.passed).count();
    println!("{passed} of {} criteria passed", reports.len());
    if passed == reports.len() {
        Ok(())
    } else {
        Err(run_err(anyhow!(
            "{} criteria failed",
            reports.len() - passed
        )))
    }
}
