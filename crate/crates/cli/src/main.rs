use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use opsseq_cli::chart::ChartGrading;
use opsseq_cli::cmd::{
    cmd_chart, cmd_converge, cmd_gen, cmd_pages, cmd_verify, ChartFormat, CmdError, PageRouteFlag,
};

#[derive(Parser)]
#[command(
    name = "opsseq",
    version,
    about = "exact spectral sequences of filtered operad algebras"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a tower document and check every axiom
    Verify { file: PathBuf },
    /// Print pages up to stabilization (or a page budget)
    Pages {
        file: PathBuf,
        /// Page budget when no stabilization certificate is reached
        #[arg(long)]
        rmax: Option<usize>,
        /// Page construction: by derived couples, by cycle/boundary towers,
        /// or both with a cross-check
        #[arg(long, value_enum, default_value_t = RouteArg::Both)]
        route: RouteArg,
    },
    /// Compute the abutment, filtration, graded pieces, and comparison map
    Converge { file: PathBuf },
    /// Render page charts
    Chart {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Ascii)]
        format: FormatArg,
        #[arg(long, value_enum, default_value_t = GradingArg::Paper)]
        grading: GradingArg,
    },
    /// Generate an example tower document
    Gen {
        /// One of: filtered_dga, bockstein, bicomplex, random
        name: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the document here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RouteArg {
    Derivation,
    Cycles,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Ascii,
    Svg,
}

#[derive(Clone, Copy, ValueEnum)]
enum GradingArg {
    Paper,
    Reindexed,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify { file } => cmd_verify(&file),
        Command::Pages { file, rmax, route } => cmd_pages(
            &file,
            rmax,
            match route {
                RouteArg::Derivation => PageRouteFlag::Derivation,
                RouteArg::Cycles => PageRouteFlag::Cycles,
                RouteArg::Both => PageRouteFlag::Both,
            },
        ),
        Command::Converge { file } => cmd_converge(&file),
        Command::Chart {
            file,
            format,
            grading,
        } => cmd_chart(
            &file,
            match format {
                FormatArg::Ascii => ChartFormat::Ascii,
                FormatArg::Svg => ChartFormat::Svg,
            },
            match grading {
                GradingArg::Paper => ChartGrading::Paper,
                GradingArg::Reindexed => ChartGrading::Reindexed,
            },
        ),
        Command::Gen { name, seed, out } => cmd_gen(&name, seed).and_then(|text| match out {
            Some(path) => std::fs::write(&path, &text)
                .map(|_| format!("wrote {}\n", path.display()))
                .map_err(|e| CmdError::Parse(format!("cannot write {}: {e}", path.display()))),
            None => Ok(text),
        }),
    };
    match result {
        Ok(text) => print!("{text}"),
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    }
}
