use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use fqdist::experiments::{generate_set, run_suite_on, SetRole};
use fqdist::{ExperimentConfig, Generator, OutputFormat, PointSetFile, RunReport, SplitPointSet, Suite};

/// Seeded verification runs for two-parameter distance sets over F_q.
///
/// Exit status is 0 when every check passes, 1 when some check fails, and 2
/// on invalid input.
#[derive(Debug, Parser)]
#[command(name = "fqdist", version)]
struct Cli {
    /// Prime modulus.
    #[arg(long, default_value_t = 7)]
    q: u64,

    /// Dimension of the first block of coordinates.
    #[arg(long, default_value_t = 2)]
    k: usize,

    /// Dimension of the second block of coordinates.
    #[arg(long, default_value_t = 2)]
    l: usize,

    /// lemmas, theorem1, theorem2, sharpness or acceptance.
    #[arg(long, default_value = "lemmas")]
    suite: Suite,

    /// full, bernoulli, product, circles, strip or sharp-product.
    #[arg(long, default_value = "bernoulli")]
    generator: Generator,

    /// Inclusion probability for bernoulli and product sets.
    #[arg(long, default_value_t = 0.5)]
    density: f64,

    /// Strip length for the strip generator and the strip scan.
    #[arg(long)]
    strip_len: Option<u64>,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Constant in the mixed-term branch of the rotation-energy bound.
    #[arg(long = "constant-c", default_value_t = 1.0)]
    constant_c: f64,

    /// Candidate evaluations for the sharp-subset search.
    #[arg(long, default_value_t = 10_000)]
    budget: u64,

    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    /// json or csv.
    #[arg(long, default_value = "json")]
    format: OutputFormat,

    /// Read E from a point-set file instead of generating it.
    #[arg(long, requires = "f_file")]
    e_file: Option<PathBuf>,

    /// Read F from a point-set file instead of generating it.
    #[arg(long, requires = "e_file")]
    f_file: Option<PathBuf>,

    /// Write the generated E and F as point-set files into this directory.
    #[arg(long)]
    dump_sets: Option<PathBuf>,
}

impl Cli {
    fn config(&self) -> ExperimentConfig {
        ExperimentConfig {
            q: self.q,
            k: self.k,
            l: self.l,
            generator: self.generator,
            density: self.density,
            strip_len: self.strip_len,
            seed: self.seed,
            constant_c: self.constant_c,
            search_budget: self.budget,
            out: self.out.clone(),
            format: self.format,
        }
    }
}

fn read_set(path: &Path) -> Result<SplitPointSet> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file = PointSetFile::parse(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(SplitPointSet::from_file(&file)?)
}

fn dump_sets(cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (role, name) in [(SetRole::E, "E.pts"), (SetRole::F, "F.pts")] {
        let set = generate_set(cfg, role)?;
        let path = dir.join(name);
        fs::write(&path, set.to_file().render()).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn render(report: &RunReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => report.to_json() + "\n",
        OutputFormat::Csv => report.csv.clone(),
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let cfg = cli.config();
    cfg.validate()?;
    if let Some(dir) = &cli.dump_sets {
        dump_sets(&cfg, dir)?;
    }
    let sets = match (&cli.e_file, &cli.f_file) {
        (Some(e), Some(f)) => Some((read_set(e)?, read_set(f)?)),
        (None, None) => None,
        _ => bail!("--e-file and --f-file go together"),
    };
    let report = run_suite_on(cli.suite, &cfg, sets)?;

    if cli.suite == Suite::Acceptance {
        for check in &report.checks {
            let summary = check.payload["summary"].as_str().unwrap_or_default();
            eprintln!("[{}] {}: {summary}", if check.pass { "PASS" } else { "FAIL" }, check.name);
        }
    }
    let output = render(&report, cli.format);
    match &cli.out {
        Some(path) => fs::write(path, output).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{output}"),
    }
    let passed = report.checks.iter().filter(|c| c.pass).count();
    eprintln!(
        "{} {}: {passed}/{} checks passed, {} skipped ({:.1} s)",
        if report.pass { "ok" } else { "FAILED" },
        report.suite,
        report.checks.len(),
        report.skipped.len(),
        report.duration_ms as f64 / 1000.0
    );
    if let Some(failure) = report.first_failure() {
        eprintln!("first failure: {} ({})", failure.name, failure.paper_ref);
    }
    Ok(report.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
