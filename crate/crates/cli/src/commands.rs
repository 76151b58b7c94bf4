use std::fs;
use std::io::Write;
use std::net::{SocketAddr, ToSocketAddrs};
use std::path::Path;
use std::sync::Arc;

use serde::de::DeserializeOwned;

use snbi_core::bayes::{learn_from_records, load_dataset, save_dataset, BayesError, BayesNet, CandidateMap, CvConfig, Structure};
use snbi_core::selector::{Engine, UsefulPriors, UserContext};
use snbi_core::sim::{
    eval_report, gen_dataset, replay, EventLog, GroundTruthSpec, InProcess, Route, SimError, TruthInfo,
};
use snbi_core::store::Store;
use snbi_service::{load_model, save_model, AppState, ContentSubmission, ServiceError, WireClient, MODEL_FILE};

use crate::config::CliConfig;
use crate::{Cli, CliError, Command};

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::ServiceUnreachable(m) => CliError::runtime("service_unreachable", m),
            SimError::Service { code, message, status } => {
                CliError::runtime(code, format!("server answered {status}: {message}"))
            }
            SimError::Bayes(b) => b.into(),
            SimError::InvalidRoute(_) | SimError::InvalidSpec(_) | SimError::Parse { .. } => {
                CliError::usage(e.to_string())
            }
            other => CliError::runtime("simulation", other.to_string()),
        }
    }
}

impl From<BayesError> for CliError {
    fn from(e: BayesError) -> Self {
        match e {
            BayesError::Io(m) => CliError::runtime("io", m),
            other => CliError::usage(other.to_string()),
        }
    }
}

impl From<ServiceError> for CliError {
    fn from(e: ServiceError) -> Self {
        let code = match e {
            ServiceError::Bind { .. } => "bind",
            ServiceError::CorruptFile { .. } => "corrupt_file",
            _ => "io",
        };
        CliError::runtime(code, e.to_string())
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::runtime("io", format!("{}: {e}", path.display()))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let (host, port) = match &cli.command {
        Command::Serve { host, port } => (host.clone(), *port),
        _ => (None, None),
    };
    let cfg = CliConfig::resolve(&cli.global, host, port)?;
    eprintln!("{}", cfg.to_json());
    match cli.command {
        Command::Serve { .. } => serve(&cfg),
        Command::GenDataset {
            n,
            seed,
            noise,
            target_accuracy,
            sharpness,
            out,
        } => {
            let spec = GroundTruthSpec::example_table(sharpness)?;
            let noise = match (noise, target_accuracy) {
                (_, Some(t)) => spec.tune_noise(t)?,
                (Some(e), None) => e,
                (None, None) => 0.0,
            };
            let spec = spec.with_noise(noise)?;
            save_dataset(&out, &gen_dataset(&spec, n, seed))?;
            println!(
                "wrote {n} records to {} (noise {noise:.6}, bayes-optimal accuracy {:.4})",
                out.display(),
                spec.bayes_optimal_accuracy()
            );
            Ok(())
        }
        Command::Train { dataset, server_url } => train(&cfg, &dataset, server_url.as_deref()),
        Command::Eval {
            dataset,
            k,
            seed,
            json,
            truth_noise,
            sharpness,
        } => {
            if k < 2 {
                return Err(CliError::usage(format!("--k must be at least 2, got {k}")));
            }
            let truth = match truth_noise {
                Some(noise) => {
                    let spec = GroundTruthSpec::example_table(sharpness)?.with_noise(noise)?;
                    Some(TruthInfo {
                        noise,
                        bayes_optimal: spec.bayes_optimal_accuracy(),
                    })
                }
                None => None,
            };
            let data = load_dataset(&dataset)?;
            let structure = Structure::default_reaction_model();
            let cv = CvConfig {
                k,
                structure: &structure,
                alpha: cfg.alpha,
                candidates: &CandidateMap::default(),
                seed,
            };
            let report = eval_report(&data, &cv, truth)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report).expect("reports serialize"));
            } else {
                print!("{}", report.to_text());
            }
            Ok(())
        }
        Command::Simulate {
            route,
            context,
            contents,
            server_url,
            in_process: _,
            model,
            out,
            start_at,
            json,
        } => {
            let route: Route = read_json(&route)?;
            let ctx: UserContext = read_json(&context)?;
            ctx.validate().map_err(|e| CliError::usage(e.to_string()))?;
            let submissions = match &contents {
                Some(p) => read_jsonl::<ContentSubmission>(p)?,
                None => Vec::new(),
            };
            let log = match server_url {
                Some(url) => {
                    let mut client = WireClient::new(&url)?;
                    client.health()?;
                    for s in submissions {
                        client.submit_content(&s)?;
                    }
                    replay(&route, &ctx, &mut client, start_at)?
                }
                None => {
                    let path = model.unwrap_or_else(|| cfg.data_dir.join(MODEL_FILE));
                    let net = match load_model(&path)? {
                        Some(net) => net,
                        None => {
                            eprintln!(
                                "warning: no trained model at {}; using a uniform network",
                                path.display()
                            );
                            BayesNet::uniform(Structure::default_reaction_model())
                        }
                    };
                    let engine = Engine::new(
                        Store::new(cfg.selector.stationary_threshold_m),
                        net,
                        CandidateMap::default(),
                        UsefulPriors::default(),
                        cfg.selector.clone(),
                    )
                    .map_err(|e| CliError::runtime("engine", e.to_string()))?;
                    for s in submissions {
                        engine
                            .submit_with_new_id(s.into_record(0))
                            .map_err(|e| CliError::usage(e.to_string()))?;
                    }
                    replay(&route, &ctx, &mut InProcess::new(&engine), start_at)?
                }
            };
            finish_simulation(&log, out.as_deref(), json)
        }
    }
}

fn serve(cfg: &CliConfig) -> Result<(), CliError> {
    let addr = resolve_addr(&cfg.host, cfg.port)?;
    let state = AppState::open(cfg.service())?;
    let listener = snbi_service::bind(addr)?;
    let local = listener.local_addr().map_err(|e| CliError::runtime("bind", e.to_string()))?;
    println!("listening on http://{local}");
    let _ = std::io::stdout().flush();
    snbi_service::run_forever(listener, Arc::new(state)).map_err(|e| CliError::runtime("serve", e.to_string()))
}

fn resolve_addr(host: &str, port: u16) -> Result<SocketAddr, CliError> {
    (host, port)
        .to_socket_addrs()
        .ok()
        .and_then(|mut a| a.next())
        .ok_or_else(|| CliError::usage(format!("cannot resolve host {host:?}")))
}

fn train(cfg: &CliConfig, dataset: &Path, server_url: Option<&str>) -> Result<(), CliError> {
    if let Some(url) = server_url {
        let path = fs::canonicalize(dataset).map_err(|e| io_error(dataset, e))?;
        let r = WireClient::new(url)?.train(&path)?;
        println!("server trained on {} records", r.records);
        return Ok(());
    }
    let data = load_dataset(dataset)?;
    if data.is_empty() {
        return Err(CliError::usage(format!("{} has no records", dataset.display())));
    }
    let net = learn_from_records(&Structure::default_reaction_model(), &data, cfg.alpha)?;
    fs::create_dir_all(&cfg.data_dir).map_err(|e| io_error(&cfg.data_dir, e))?;
    let path = cfg.data_dir.join(MODEL_FILE);
    save_model(&path, &net)?;
    println!("trained on {} records, model written to {}", data.len(), path.display());
    Ok(())
}

fn finish_simulation(log: &EventLog, out: Option<&Path>, json: bool) -> Result<(), CliError> {
    if let Some(p) = out {
        fs::write(p, log.to_jsonl()).map_err(|e| io_error(p, e))?;
    }
    let summary = log.summary();
    if json {
        println!("{}", serde_json::to_string(&summary).expect("summaries serialize"));
    } else {
        print!("{}", summary.to_text());
    }
    Ok(())
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| io_error(path, e))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    read_text(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| CliError::usage(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}
