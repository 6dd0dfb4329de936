//! The `basis` command: a local front end to a persisted basis, and an
//! HTTP server for the console.

pub mod commands;
pub mod config;
pub mod server;

use std::io::Write;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use anyhow::{bail, Context};
use basis_core::harness::{run_experiment, ExperimentConfig};
use basis_core::{ApiError, AuthMode, Engine, Envelope, Gateway, GatewayConfig, Reply, Response, Role, SystemClock};

pub use commands::{Cli, Command};
pub use config::Config;

/// Exit status for a request that ran but was refused or found a problem:
/// a rejected transition, a broken chain, an inconsistent replay.
pub const EXIT_REFUSED: i32 = 3;
pub const EXIT_ERROR: i32 = 1;

/// Flags merged over the config file.
#[derive(Debug, Clone)]
pub struct Settings {
    pub dir: PathBuf,
    pub actor: Option<String>,
    pub role: Option<Role>,
    pub token: Option<String>,
    pub json: bool,
    pub config: Config,
}

impl Settings {
    pub fn resolve(cli: &Cli) -> anyhow::Result<Settings> {
        let g = &cli.global;
        let config = match &g.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        Ok(Settings {
            dir: g.dir.clone().or_else(|| config.dir.clone()).unwrap_or_else(|| config::DEFAULT_DIR.into()),
            actor: g.actor.clone().or_else(|| config.actor.clone()),
            role: g.expert.then_some(Role::Expert),
            token: g.token.clone(),
            json: g.json,
            config,
        })
    }

    pub fn gateway_config(&self) -> GatewayConfig {
        GatewayConfig {
            auth: match &self.config.token {
                Some(t) => AuthMode::Token(t.clone()),
                None => AuthMode::Trusted,
            },
            policy: self.config.policy,
            slice: self.config.slice.unwrap_or_default(),
        }
    }

    pub fn open_gateway(&self) -> anyhow::Result<Gateway> {
        if !self.dir.join("events.jsonl").exists() {
            bail!("no basis at {} (run `basis init` first)", self.dir.display());
        }
        let engine = Engine::open(&self.dir, Box::new(SystemClock)).map_err(ApiError::from)?;
        Ok(Gateway::new(engine, self.gateway_config()))
    }
}

/// Runs one command, writing results to `out`. Returns the exit status.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<i32> {
    let s = Settings::resolve(cli)?;
    match &cli.command {
        Command::Init => {
            Engine::create(&s.dir, Box::new(SystemClock)).map_err(ApiError::from)?;
            if s.json {
                writeln!(out, "{}", serde_json::json!({ "dir": s.dir }))?;
            } else {
                writeln!(out, "initialized {}", s.dir.display())?;
            }
            Ok(0)
        }
        Command::Simulate(args) => simulate(args, &s, out),
        Command::Serve { listen } => {
            let addr = listen.clone().or_else(|| s.config.listen.clone()).unwrap_or(config::DEFAULT_LISTEN.into());
            serve(&s, &addr, err)
        }
        cmd => {
            let request = cmd.request().context("command has no request")?;
            let mut gw = s.open_gateway()?;
            let mut env = Envelope::new(request);
            env.actor = s.actor.clone();
            if matches!(env.request, basis_core::Request::OpenSession {}) && env.actor.is_none() {
                env.actor = Some(std::env::var("USER").unwrap_or_else(|_| "cli".into()));
            }
            env.role = s.role;
            env.token = s.token.clone();
            env.session = cli.global.session;
            match gw.handle(env) {
                Ok(resp) => {
                    if matches!(cmd, Command::Snapshot) {
                        gw.engine().write_snapshot().map_err(ApiError::from)?;
                    }
                    if s.json {
                        writeln!(out, "{}", serde_json::to_string(&resp)?)?;
                    } else {
                        writeln!(out, "{}", render(&resp))?;
                    }
                    Ok(if refused(&resp.result) { EXIT_REFUSED } else { 0 })
                }
                Err(e) => {
                    report(&e, s.json, err)?;
                    Ok(EXIT_ERROR)
                }
            }
        }
    }
}

pub fn report(e: &ApiError, json: bool, err: &mut dyn Write) -> std::io::Result<()> {
    if json {
        writeln!(err, "{}", serde_json::to_string(e).unwrap_or_default())
    } else {
        write!(err, "error: {e}")?;
        if !e.blocking_objects.is_empty() {
            let ids: Vec<String> = e.blocking_objects.iter().map(|o| o.to_string()).collect();
            write!(err, " [{}]", ids.join(", "))?;
        }
        writeln!(err)
    }
}

fn refused(reply: &Reply) -> bool {
    match reply {
        Reply::Transition(t) => !t.result.is_applied(),
        Reply::Chain(c) => !c.status.is_valid(),
        Reply::Replay(r) => !r.consistent,
        _ => false,
    }
}

/// Short human form for the common replies; JSON for the rest.
pub fn render(resp: &Response) -> String {
    use basis_core::lifecycle::TransitionResult;
    let event = resp.event_index.map(|i| format!(" (event {i})")).unwrap_or_default();
    match &resp.result {
        Reply::Session(s) => format!("session {} open for {} as {}{event}", s.session, s.actor, s.role),
        Reply::SessionClosed { session } => format!("session {session} closed{event}"),
        Reply::Premise(p) => format!("{} {} [{}, {}]{event}", p.id, p.statement, p.axis, p.status),
        Reply::Premises(ps) => ps
            .iter()
            .map(|p| format!("{}\t{}\t{}\t{}\t{}", p.id, p.status, p.axis, p.stakes, p.statement))
            .collect::<Vec<_>>()
            .join("\n"),
        Reply::Score { premise, score, threshold } => format!("{premise} score {score} / threshold {threshold}"),
        Reply::Action(a) => format!("{} {} [{}]{event}", a.id, a.description, a.status),
        Reply::Link(l) => format!("{} {} -> {} ({}){event}", l.id, l.from, l.to, l.kind),
        Reply::Transition(t) => match &t.result {
            TransitionResult::Applied => format!("{} transition applied{event}", t.premise),
            TransitionResult::Rejected { reason } => format!("{} transition rejected: {}{event}", t.premise, reason.code()),
        },
        Reply::Gate(g) => {
            let ids: Vec<String> = g.blocking_ids().iter().map(|p| p.to_string()).collect();
            if ids.is_empty() {
                format!("{} {}{event}", g.action, g.verdict)
            } else {
                format!("{} {}: {}{event}", g.action, g.verdict, ids.join(", "))
            }
        }
        Reply::Commit(c) => format!("{} committed{}{event}", c.action, if c.advisory { " (advisory)" } else { "" }),
        Reply::Decision(d) => format!("{}: {}{event}", d.for_action, d.action),
        Reply::Chain(c) => match c.status {
            basis_core::ChainStatus::Valid => format!("chain valid: {} events, head {}", c.events, c.head),
            basis_core::ChainStatus::Broken { index } => format!("chain broken at event {index}"),
        },
        Reply::Replay(r) => {
            format!("replay {}: {} events", if r.consistent { "consistent" } else { "INCONSISTENT" }, r.events)
        }
        other => serde_json::to_string_pretty(other).unwrap_or_default(),
    }
}

fn simulate(args: &commands::SimulateArgs, s: &Settings, out: &mut dyn Write) -> anyhow::Result<i32> {
    let mut cfg = match &args.experiment {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str::<ExperimentConfig>(&text).with_context(|| format!("in {}", p.display()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(p) = &args.policies {
        cfg.policies = p.clone();
    }
    if let Some(n) = args.sessions {
        cfg.tasks.sessions = n;
    }
    if let Some(r) = args.false_rate {
        cfg.tasks.false_rate = r;
    }
    let report = run_experiment(&cfg, args.log_dir.as_deref()).map_err(ApiError::from)?;
    report.write_dir(&args.out).map_err(ApiError::from)?;
    if s.json {
        writeln!(out, "{}", serde_json::to_string(&report.summary)?)?;
    } else {
        report.write_summary(&mut *out, b'\t').map_err(ApiError::from)?;
    }
    Ok(0)
}

fn serve(s: &Settings, addr: &str, err: &mut dyn Write) -> anyhow::Result<i32> {
    let gw = Arc::new(Mutex::new(s.open_gateway()?));
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    let listener = match rt.block_on(tokio::net::TcpListener::bind(addr)) {
        Ok(l) => l,
        Err(e) if e.kind() == std::io::ErrorKind::AddrInUse => {
            report(&ApiError::new("port-in-use", format!("{addr} is already in use")), s.json, err)?;
            return Ok(EXIT_ERROR);
        }
        Err(e) => return Err(e).with_context(|| format!("binding {addr}")),
    };
    writeln!(err, "listening on http://{}", listener.local_addr()?)?;
    err.flush()?;
    let app = server::router(gw.clone());
    rt.block_on(async {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
    })?;
    let gw = gw.lock().unwrap_or_else(|p| p.into_inner());
    gw.engine().write_snapshot().map_err(ApiError::from)?;
    Ok(0)
}
