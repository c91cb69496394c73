use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use essencery_core::essfmt::{format_file, write_atomic};
use essencery_core::kernel::{load_configured_kernel, Kernel};
use essencery_core::lint::{has_errors, lint, Severity};
use essencery_core::{parse, print, render_card_svg, render_graph_svg, Graph, RenderTheme};
use essencery_server::ServeConfig;
use rand::Rng;

/// Exit status for lint findings.
const FINDINGS: u8 = 1;
/// Exit status for unreadable input, I/O failures and usage errors.
const FAILURE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "essencery",
    version,
    about = "Draw, check and render Essence method graphs"
)]
struct Cli {
    /// Kernel file replacing or extending the standard kernel
    /// (default: $ESSENCERY_KERNEL, then the built-in Essence kernel)
    #[arg(long, global = true, value_name = "FILE")]
    kernel: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a new empty graph
    New {
        file: PathBuf,
        #[arg(long)]
        title: String,
    },
    /// Print the canonical form of a graph, or rewrite the file with --write
    Fmt {
        file: PathBuf,
        #[arg(long)]
        write: bool,
    },
    /// Check a graph; exits 0 when clean, 1 on findings, 2 when unreadable
    Lint {
        file: PathBuf,
        /// Treat warnings as findings
        #[arg(long)]
        deny_warnings: bool,
        #[arg(long, value_enum, default_value_t = LintFormat::Text)]
        format: LintFormat,
    },
    /// Render the graph as SVG
    Render {
        file: PathBuf,
        #[arg(short, long, value_name = "SVG")]
        output: PathBuf,
    },
    /// Render one SVG card per node that has a card, named <node id>.svg
    Cards {
        file: PathBuf,
        #[arg(short, long, value_name = "DIR")]
        output: PathBuf,
    },
    /// Serve the HTTP API and editor UI
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, value_name = "DIR")]
        data_dir: PathBuf,
        /// Directory holding the built editor UI (index.html, assets/)
        #[arg(long, value_name = "DIR")]
        ui_dir: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::Ipv4Addr,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum LintFormat {
    Text,
    Structured,
}

fn read_graph(path: &Path) -> anyhow::Result<Graph> {
    let text = fs::read_to_string(path).with_context(|| format!("{}", path.display()))?;
    parse(&text).map_err(|e| anyhow::anyhow!("{}:{e}", path.display()))
}

fn kernel(explicit: Option<&Path>) -> anyhow::Result<Kernel> {
    load_configured_kernel(explicit).context("loading kernel")
}

fn new_graph(file: &Path, title: &str) -> anyhow::Result<()> {
    if file.exists() {
        bail!("{} already exists", file.display());
    }
    let id = format!("{:08x}", rand::thread_rng().gen::<u32>());
    let graph = Graph::new(id, title);
    write_atomic(file, print(&graph).as_bytes()).with_context(|| format!("{}", file.display()))
}

fn fmt(file: &Path, write: bool) -> anyhow::Result<()> {
    let canonical = format_file(file, write)?;
    if !write {
        io::stdout().write_all(canonical.as_bytes())?;
    }
    Ok(())
}

fn lint_file(
    file: &Path,
    kernel_path: Option<&Path>,
    deny_warnings: bool,
    format: LintFormat,
) -> anyhow::Result<u8> {
    let graph = read_graph(file)?;
    let diagnostics = lint(&graph, &kernel(kernel_path)?);
    let mut out = io::stdout().lock();
    match format {
        LintFormat::Text => {
            for d in &diagnostics {
                writeln!(out, "{d}")?;
            }
        }
        LintFormat::Structured => {
            serde_json::to_writer_pretty(&mut out, &diagnostics)?;
            writeln!(out)?;
        }
    }
    let failing = has_errors(&diagnostics)
        || (deny_warnings && diagnostics.iter().any(|d| d.severity == Severity::Warning));
    Ok(if failing { FINDINGS } else { 0 })
}

fn render(file: &Path, output: &Path, kernel_path: Option<&Path>) -> anyhow::Result<()> {
    let graph = read_graph(file)?;
    let theme = RenderTheme::from_kernel(&kernel(kernel_path)?);
    write_atomic(output, render_graph_svg(&graph, &theme).as_bytes())
        .with_context(|| format!("{}", output.display()))
}

fn cards(file: &Path, dir: &Path, kernel_path: Option<&Path>) -> anyhow::Result<()> {
    let graph = read_graph(file)?;
    let kernel = kernel(kernel_path)?;
    let theme = RenderTheme::from_kernel(&kernel);
    fs::create_dir_all(dir).with_context(|| format!("{}", dir.display()))?;
    for (owner, card) in graph.cards() {
        let node = graph.node(owner.as_str()).expect("card owners are nodes");
        let svg = render_card_svg(node, card, graph.binding(owner.as_str()), &kernel, &theme);
        let path = dir.join(format!("{owner}.svg"));
        write_atomic(&path, svg.as_bytes()).with_context(|| format!("{}", path.display()))?;
    }
    Ok(())
}

fn serve(config: ServeConfig) -> anyhow::Result<()> {
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(essencery_server::serve(config))?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let kernel_path = cli.kernel.as_deref();
    match cli.command {
        Command::New { file, title } => new_graph(&file, &title)?,
        Command::Fmt { file, write } => fmt(&file, write)?,
        Command::Lint {
            file,
            deny_warnings,
            format,
        } => return lint_file(&file, kernel_path, deny_warnings, format),
        Command::Render { file, output } => render(&file, &output, kernel_path)?,
        Command::Cards { file, output } => cards(&file, &output, kernel_path)?,
        Command::Serve {
            port,
            data_dir,
            ui_dir,
            host,
        } => serve(ServeConfig {
            data_dir,
            port,
            kernel_path: cli.kernel.clone(),
            ui_dir,
            host,
        })?,
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let default_level = if matches!(cli.command, Command::Serve { .. }) {
        "info"
    } else {
        "warn"
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(default_level))
        .init();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("essencery: {e:#}");
            ExitCode::from(FAILURE)
        }
    }
}
