use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use distaf_core::report::{export_assessment, pillar_table, ExportFormat, ReportError};
use distaf_core::scoring::ScoringError;
use distaf_core::template::{load_template, parse_template, TemplateError};
use distaf_core::validate::validate_template;
use distaf_core::{
    assessment_scorecard, AssessmentDocument, AssessmentState, FrameworkTemplate, Phase,
};
use distaf_server::users::{UserError, UserStore};
use distaf_server::{load_templates, users_path, ServerConfig, StartupError};
use thiserror::Error;

const EXIT_INVALID: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_USAGE: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "distaf", version, about = "Trustworthiness assessment toolkit")]
struct Cli {
    /// Directory of template files (defaults to the bundled sample).
    #[arg(long, global = true, env = "DISTAF_TEMPLATE_DIR")]
    template_dir: Option<PathBuf>,
    /// Directory holding users and assessments.
    #[arg(long, global = true, env = "DISTAF_DATA_DIR", default_value = "data")]
    data_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PhaseArg {
    Design,
    Operational,
    Both,
}

impl PhaseArg {
    fn phases(self) -> Vec<Phase> {
        match self {
            PhaseArg::Design => vec![Phase::Design],
            PhaseArg::Operational => vec![Phase::Operational],
            PhaseArg::Both => Phase::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Dump,
    Tabular,
    Summary,
}

impl From<FormatArg> for ExportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Dump => ExportFormat::Dump,
            FormatArg::Tabular => ExportFormat::Tabular,
            FormatArg::Summary => ExportFormat::Summary,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check template files; exits 1 if any has errors.
    Validate {
        #[arg(required = true)]
        templates: Vec<PathBuf>,
    },
    /// Print the per-phase pillar table of an assessment file.
    ///
    /// Give `TEMPLATE ASSESSMENT`, or just `ASSESSMENT` to look the template
    /// up in --template-dir.
    Score {
        #[arg(required = true, num_args = 1..=2, value_name = "[TEMPLATE] ASSESSMENT")]
        files: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "both")]
        phase: PhaseArg,
        /// Print the full scorecard as JSON instead of the table.
        #[arg(long)]
        json: bool,
    },
    /// Export an assessment file.
    Export {
        #[arg(required = true, num_args = 1..=2, value_name = "[TEMPLATE] ASSESSMENT")]
        files: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "summary")]
        format: FormatArg,
        /// Write here instead of stdout.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Create the first admin account and print its temporary password.
    InitAdmin {
        #[arg(long, default_value = "admin")]
        username: String,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long, env = "DISTAF_BIND", default_value = distaf_server::DEFAULT_BIND)]
        bind: std::net::SocketAddr,
        /// Session lifetime in seconds.
        #[arg(long, env = "DISTAF_SESSION_TTL", default_value_t = distaf_server::DEFAULT_SESSION_TTL.as_secs())]
        session_ttl: u64,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Users(#[from] UserError),
    #[error(transparent)]
    Startup(#[from] StartupError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } | CliError::Template(TemplateError::Io { .. }) => EXIT_IO,
            CliError::Users(UserError::Storage { .. }) => EXIT_IO,
            CliError::Startup(StartupError::Bind { .. } | StartupError::Serve(_)) => EXIT_IO,
            CliError::Startup(StartupError::Templates(TemplateError::Io { .. })) => EXIT_IO,
            CliError::Startup(StartupError::Users(UserError::Storage { .. })) => EXIT_IO,
            CliError::Startup(StartupError::Store(distaf_core::store::StoreError::Storage {
                ..
            })) => EXIT_IO,
            _ => EXIT_INVALID,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Prints each template's report. Returns whether all were free of errors.
fn validate(paths: &[PathBuf], out: &mut impl Write) -> Result<bool, CliError> {
    let mut clean = true;
    for path in paths {
        let text = read(path)?;
        let template = match parse_template(&text) {
            Ok(t) => t,
            Err(e) => {
                writeln!(out, "{}: error: {e}", path.display()).ok();
                clean = false;
                continue;
            }
        };
        let report = validate_template(&template);
        for finding in &report.findings {
            writeln!(out, "{}: {finding}", path.display()).ok();
        }
        let errors = report.errors().count();
        let warnings = report.warnings().count();
        if errors == 0 {
            writeln!(
                out,
                "{}: ok: {} {} ({} pillars, {} metrics, {warnings} warnings)",
                path.display(),
                template.id,
                template.version,
                template.pillars.len(),
                template.metrics().count()
            )
            .ok();
        } else {
            writeln!(
                out,
                "{}: {errors} errors, {warnings} warnings",
                path.display()
            )
            .ok();
            clean = false;
        }
    }
    Ok(clean)
}

/// Reads an export document (or a full dump, whose extra scorecard is ignored).
fn read_assessment(path: &Path) -> Result<AssessmentState, CliError> {
    let doc: AssessmentDocument = serde_json::from_str(&read(path)?).map_err(|e| {
        CliError::Invalid(format!(
            "{}: not an assessment document: {e}",
            path.display()
        ))
    })?;
    doc.check()
        .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    Ok(doc.assessment)
}

fn resolve(cli: &Cli, files: &[PathBuf]) -> Result<(FrameworkTemplate, AssessmentState), CliError> {
    let (template, assessment) = match files {
        [t, a] => (load_template(t)?, read_assessment(a)?),
        [a] => {
            let assessment = read_assessment(a)?;
            let registry = load_templates(cli.template_dir.as_deref())?;
            let template = registry.get(&assessment.template).ok_or_else(|| {
                CliError::Invalid(format!("template {} not found", assessment.template))
            })?;
            ((*template).clone(), assessment)
        }
        _ => unreachable!("clap enforces one or two files"),
    };
    if template.template_ref() != assessment.template {
        return Err(CliError::Invalid(format!(
            "assessment is bound to template {}, not {}",
            assessment.template,
            template.template_ref()
        )));
    }
    Ok((template, assessment))
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let mut out = io::stdout().lock();
    match &cli.command {
        Command::Validate { templates } => {
            let clean = validate(templates, &mut out)?;
            Ok(if clean { 0 } else { EXIT_INVALID })
        }
        Command::Score { files, phase, json } => {
            let (template, assessment) = resolve(&cli, files)?;
            let card = assessment_scorecard(&template, &assessment)?;
            if *json {
                let text = serde_json::to_string_pretty(&card)
                    .map_err(|e| CliError::Invalid(e.to_string()))?;
                writeln!(out, "{text}").ok();
            } else {
                writeln!(
                    out,
                    "{} ({}, {})",
                    assessment.id, assessment.status, assessment.template
                )
                .ok();
                write!(out, "{}", pillar_table(&card, &phase.phases())).ok();
                for warning in &card.warnings {
                    writeln!(out, "warning: {warning}").ok();
                }
            }
            Ok(0)
        }
        Command::Export {
            files,
            format,
            output,
        } => {
            let (template, assessment) = resolve(&cli, files)?;
            let text = export_assessment(&template, &assessment, (*format).into())?;
            match output {
                Some(path) => fs::write(path, text).map_err(|source| CliError::Io {
                    path: path.clone(),
                    source,
                })?,
                None => out
                    .write_all(text.as_bytes())
                    .map_err(|source| CliError::Io {
                        path: "-".into(),
                        source,
                    })?,
            }
            Ok(0)
        }
        Command::InitAdmin { username } => {
            fs::create_dir_all(&cli.data_dir).map_err(|source| CliError::Io {
                path: cli.data_dir.clone(),
                source,
            })?;
            let users = UserStore::open(&users_path(&cli.data_dir))?;
            let issued = users.init_admin(username)?;
            writeln!(out, "created admin `{}`", issued.user.username).ok();
            writeln!(out, "temporary password: {}", issued.temporary_password).ok();
            writeln!(out, "it must be changed at first login (POST /password)").ok();
            Ok(0)
        }
        Command::Serve { bind, session_ttl } => {
            tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env()
                        .unwrap_or_else(|_| "info".into()),
                )
                .init();
            let config = ServerConfig {
                bind: *bind,
                data_dir: cli.data_dir.clone(),
                template_dir: cli.template_dir.clone(),
                session_ttl: Duration::from_secs(*session_ttl),
            };
            let runtime = tokio::runtime::Runtime::new().map_err(|source| CliError::Io {
                path: "runtime".into(),
                source,
            })?;
            runtime.block_on(distaf_server::serve(config))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("distaf: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
