//! `dirdesign`: verify catalog designs, realize intersection spectra, run
//! the recursive constructions and the brute-force oracles.
//!
//! Exit status: 0 when every check passes, 1 when a mathematical check
//! fails, 2 on unreadable input.

mod commands;

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "dirdesign",
    version,
    about = "Directed 2-(v,5,1) designs and their intersection spectra"
)]
struct Cli {
    /// Directory of `*.cat` files to use instead of the built-in catalog.
    #[arg(long, global = true, env = "DIRDESIGN_CATALOG")]
    catalog: Option<PathBuf>,
    /// Load the catalog as transcribed, without the errata overlay.
    #[arg(long, global = true)]
    no_errata: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Develop and verify catalog entries.
    Verify(VerifyArgs),
    /// Realize an entry's intersection spectrum with executed witnesses.
    Spectrum(SpectrumArgs),
    /// Inflate a GDD or PBD into a directed design.
    Construct(ConstructArgs),
    /// Brute-force cross-checks.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Inspect the catalog.
    #[command(subcommand)]
    Catalog(CatalogCommand),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Md,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Entry ids.
    ids: Vec<String>,
    /// Entry id (repeatable).
    #[arg(long = "entry")]
    entries: Vec<String>,
    /// Every entry in the catalog.
    #[arg(long)]
    all: bool,
    /// Only this reading of an ambiguous entry.
    #[arg(long)]
    reading: Option<String>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Entries verified in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Target {
    /// Every a-priori intersection size.
    Full,
    /// The values the entry claims (all of them for a `full` claim).
    Subset,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    /// Entry id.
    id: Option<String>,
    #[arg(long = "entry")]
    entry: Option<String>,
    #[arg(long)]
    reading: Option<String>,
    #[arg(long, value_enum, default_value = "subset")]
    target: Target,
    #[arg(long, value_enum, default_value = "text")]
    emit: Format,
}

#[derive(Args, Debug)]
struct ConstructArgs {
    /// `td55` (built-in TD(5,5)) or a catalog file with a `gdd` entry.
    #[arg(long, conflicts_with = "pbd", required_unless_present = "pbd")]
    gdd: Option<String>,
    /// `ag25` (built-in affine plane of order 5) or a catalog file with a
    /// `pbd` entry.
    #[arg(long)]
    pbd: Option<String>,
    /// `zeros`, `max`, `random` or a file with `five =`, `six =` and
    /// `groups =` lines; builds a pair and checks its intersection.
    #[arg(long, requires = "gdd")]
    choices: Option<String>,
    /// Seed for `--choices random`.
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// Where to write the constructed design.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the second design of a pair.
    #[arg(long, requires = "choices")]
    out_right: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum OracleCommand {
    /// Enumerate every 2-(5,5,1) directed design.
    Dd5 {
        #[arg(long)]
        show: bool,
    },
    /// Check that no two orderings of a k-set cover the same ordered pairs.
    Volume1 {
        #[arg(long, default_value_t = 5)]
        k: usize,
    },
    /// Search for directed GDDs with 5-blocks on the given groups.
    Dgdd {
        /// Groups such as "{1,2} {3,4} {5,6} {7,8} {0,9}".
        #[arg(long, required_unless_present = "entry")]
        groups: Option<String>,
        /// Take groups (and seed blocks) from this dgdd entry.
        #[arg(long)]
        entry: Option<String>,
        /// Seed with this many of the entry's listed blocks.
        #[arg(long, default_value_t = 0, requires = "entry")]
        seed_blocks: usize,
        #[arg(long, default_value_t = 1)]
        limit: usize,
    },
    /// Why an entry's designs never share all but one block.
    Gap {
        #[arg(long)]
        entry: String,
    },
}

#[derive(Subcommand, Debug)]
enum CatalogCommand {
    /// Canonical text of entries.
    Print {
        id: Option<String>,
        /// Show entries as transcribed, before errata.
        #[arg(long)]
        transcribed: bool,
    },
    /// Content digests of the transcribed entries.
    Digest,
    /// One line per entry.
    Summary { id: Option<String> },
    /// Errata records and their re-checked justifications.
    Errata,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    // Reports are buffered so a closed pipe (`| head`) is not an error.
    let mut out = String::new();
    let outcome = commands::run(&cli, &mut out);
    let mut stdout = io::stdout().lock();
    let _ = stdout
        .write_all(out.as_bytes())
        .and_then(|()| stdout.flush());
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
