use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dscribe::pipeline::{cmd_check, cmd_clean, cmd_generate, cmd_list, Overrides, ProjectConfig, RunReport, CONFIG_FILE};

#[derive(Parser)]
#[command(name = "dscribe", version, about = "Generate unit tests and @dscribe documentation from template invocations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    options: Options,
}

#[derive(Args)]
struct Options {
    /// Project configuration file.
    #[arg(long, global = true, default_value = CONFIG_FILE)]
    config: PathBuf,
    /// Accept unrecognized expressions and incomplete hierarchies with a warning.
    #[arg(long, global = true)]
    lenient: bool,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Replace the configured source roots.
    #[arg(long = "source-root", global = true)]
    source_roots: Vec<PathBuf>,
    #[arg(long, global = true)]
    templates_dir: Option<PathBuf>,
    /// Replace the configured invocation files or glob patterns.
    #[arg(long = "invocations", global = true)]
    invocations: Vec<String>,
    #[arg(long, global = true)]
    gen_tests_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    known_types: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate templates and invocations without writing anything.
    Check,
    /// Regenerate the test folder and the @dscribe lines of source files.
    Generate,
    /// Empty the test folder and remove all @dscribe lines.
    Clean,
    /// Show the template catalog.
    List,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

fn print_report(report: &RunReport, format: Format, summary: bool) {
    match format {
        Format::Text => {
            for d in &report.diagnostics {
                eprintln!("{d}");
            }
            if summary {
                for l in report.summary_lines() {
                    println!("{l}");
                }
            }
        }
        Format::Json => {
            for d in &report.diagnostics {
                println!("{}", serde_json::to_string(d).expect("diagnostics serialize"));
            }
            if summary {
                println!("{}", serde_json::json!({ "summary": report.counts }));
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let o = cli.options;
    let overrides = Overrides {
        source_roots: o.source_roots,
        templates_dir: o.templates_dir,
        invocations: o.invocations,
        gen_tests_dir: o.gen_tests_dir,
        known_types_path: o.known_types,
        lenient: o.lenient,
    };
    let config = match ProjectConfig::load(&o.config, &overrides) {
        Ok(c) => c,
        Err(e) => {
            match o.format {
                Format::Text => eprintln!("error[Config]: {e}"),
                Format::Json => println!(
                    "{}",
                    serde_json::json!({ "severity": "error", "location": o.config.display().to_string(), "code": "Config", "message": e.to_string() })
                ),
            }
            return ExitCode::from(2);
        }
    };
    let report = match cli.command {
        Command::Check => cmd_check(&config),
        Command::Generate => cmd_generate(&config),
        Command::Clean => cmd_clean(&config),
        Command::List => {
            let (report, lines) = cmd_list(&config);
            print_report(&report, o.format, false);
            match o.format {
                Format::Text => lines.iter().for_each(|l| println!("{l}")),
                Format::Json => println!("{}", serde_json::json!({ "list": lines })),
            }
            return ExitCode::from(report.exit_code() as u8);
        }
    };
    print_report(&report, o.format, true);
    ExitCode::from(report.exit_code() as u8)
}
