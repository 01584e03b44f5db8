use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use navrewrite_cli::{cmd_chase, cmd_check, cmd_emit_cypher, cmd_eval, cmd_rewrite, CliError, Config, Format, Layer};

#[derive(Parser)]
#[command(
    name = "navrewrite",
    version,
    about = "Rewrite navigational queries over ELHI ontologies"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// TOML file with budgets, depth, format and store settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true)]
    max_queries: Option<usize>,
    #[arg(long, global = true)]
    max_clip_attempts: Option<usize>,
    #[arg(long, global = true)]
    witness_cap: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the rewriting, one branch per line.
    Rewrite {
        #[arg(short, long)]
        tbox: PathBuf,
        #[arg(short, long)]
        query: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Print the rewriting as Cypher.
    EmitCypher {
        #[arg(short, long)]
        tbox: PathBuf,
        #[arg(short, long)]
        query: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a query or rewriting over a graph; sorted CSV rows.
    Eval {
        /// Rewrite the query under this TBox before evaluating.
        #[arg(short, long)]
        tbox: Option<PathBuf>,
        #[arg(short, long)]
        query: PathBuf,
        #[arg(short, long)]
        graph: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Chase a graph and print it as JSON lines.
    Chase {
        #[arg(short, long)]
        tbox: PathBuf,
        #[arg(short, long)]
        graph: PathBuf,
        #[arg(long)]
        depth: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Compare the rewriting's answers with the chase.
    Check {
        #[arg(short, long)]
        tbox: PathBuf,
        #[arg(short, long)]
        query: PathBuf,
        #[arg(short, long)]
        graph: PathBuf,
        #[arg(long)]
        depth: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
}

fn config(common: &Common, depth: Option<usize>) -> Result<Config, CliError> {
    let flags = Layer {
        max_queries: common.max_queries,
        max_clip_attempts: common.max_clip_attempts,
        witness_cap: common.witness_cap,
        depth,
        format: common.format,
        ..Layer::default()
    };
    Config::load(flags, common.config.as_deref())
}

fn run(cli: Cli) -> Result<navrewrite_cli::Outcome, CliError> {
    match cli.cmd {
        Cmd::Rewrite { tbox, query, common } => cmd_rewrite(&tbox, &query, &config(&common, None)?),
        Cmd::EmitCypher { tbox, query, common } => cmd_emit_cypher(&tbox, &query, &config(&common, None)?),
        Cmd::Eval {
            tbox,
            query,
            graph,
            common,
        } => cmd_eval(tbox.as_deref(), &query, &graph, &config(&common, None)?),
        Cmd::Chase {
            tbox,
            graph,
            depth,
            common,
        } => cmd_chase(&tbox, &graph, &config(&common, depth)?),
        Cmd::Check {
            tbox,
            query,
            graph,
            depth,
            common,
        } => cmd_check(&tbox, &query, &graph, &config(&common, depth)?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(out) => {
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            let mut stdout = std::io::stdout().lock();
            if stdout
                .write_all(out.stdout.as_bytes())
                .and_then(|_| stdout.flush())
                .is_err()
            {
                return ExitCode::from(1);
            }
            ExitCode::from(out.code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
