//! Command-line front end: load a scenario config, run the experiments,
//! verify audit exports and render the comparison tables.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use jurisim::audit::{self, AuditManifest};
use jurisim::config::ScenarioConfig;
use jurisim::report::{self, ResultsBundle};
use jurisim::sim::{self, ArchitectureVariant, ScenarioFilter};

#[derive(Parser)]
#[command(
    name = "jurisim",
    version,
    about = "Jurisdiction-aware cross-border data governance simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the selected scenarios and write results, tables and the audit
    /// export to the output directory.
    Run(RunArgs),
    /// Re-verify an audit export against its root manifest.
    VerifyAudit {
        /// Line-delimited canonical audit records.
        #[arg(long)]
        records: PathBuf,
        /// Root manifest produced alongside the export.
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Render comparison tables from a results file.
    Tables {
        /// Path to results.json from a previous run.
        #[arg(long)]
        results: PathBuf,
        #[arg(long, value_enum, default_value_t = TableFormat::Text)]
        format: TableFormat,
    },
    /// Run the default experiments and check the headline invariants.
    SelfCheck(ConfigArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Scenario config path; falls back to $JURISIM_CONFIG, then the
    /// built-in default.
    #[arg(long, env = "JURISIM_CONFIG")]
    config: Option<PathBuf>,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Output directory for results, timings, tables and audit export.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Restrict to specific scenarios (repeatable).
    #[arg(long = "scenario", value_enum)]
    scenarios: Vec<ScenarioArg>,
    /// Restrict to specific variants (repeatable).
    #[arg(long = "variant", value_enum)]
    variants: Vec<VariantArg>,
    /// Table output format.
    #[arg(long, value_enum, default_value_t = TableFormat::Both)]
    format: TableFormat,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScenarioArg {
    A,
    B,
    C,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    StandardEncryption,
    FederatedLearning,
    LocalizationDp,
    Proposed,
}

impl VariantArg {
    fn to_variant(self) -> ArchitectureVariant {
        match self {
            VariantArg::StandardEncryption => ArchitectureVariant::StandardEncryption,
            VariantArg::FederatedLearning => ArchitectureVariant::FederatedLearning,
            VariantArg::LocalizationDp => ArchitectureVariant::LocalizationDp,
            VariantArg::Proposed => ArchitectureVariant::Proposed,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TableFormat {
    Text,
    Csv,
    Both,
}

fn load_config(args: &ConfigArgs) -> Result<ScenarioConfig> {
    let mut config = match &args.config {
        Some(path) => ScenarioConfig::from_path(path)
            .with_context(|| format!("loading config {}", path.display()))?,
        None => ScenarioConfig::builtin_default().context("loading built-in default config")?,
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn filter_from(run: &RunArgs) -> ScenarioFilter {
    let mut filter = ScenarioFilter::default();
    if !run.scenarios.is_empty() {
        filter.scenario_a = run.scenarios.contains(&ScenarioArg::A);
        filter.scenario_b = run.scenarios.contains(&ScenarioArg::B);
        filter.scenario_c = run.scenarios.contains(&ScenarioArg::C);
    }
    if !run.variants.is_empty() {
        let wanted: Vec<ArchitectureVariant> =
            run.variants.iter().map(|v| v.to_variant()).collect();
        for (i, variant) in ArchitectureVariant::ALL.iter().enumerate() {
            filter.variants[i] = wanted.contains(variant);
        }
    }
    filter
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let config = load_config(&args.config)?;
    let filter = filter_from(args);
    let output = sim::run_all(&config, &filter);
    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating output directory {}", args.out.display()))?;
    let results_path = args.out.join("results.json");
    fs::write(&results_path, output.results.to_json())?;
    fs::write(args.out.join("timings.json"), output.timings.to_json())?;
    if !output.audit_export.is_empty() {
        fs::write(args.out.join("audit_records.jsonl"), &output.audit_export)?;
        fs::write(
            args.out.join("audit_manifest.json"),
            serde_json::to_string_pretty(&output.audit_manifest)?,
        )?;
    }
    if matches!(args.format, TableFormat::Text | TableFormat::Both) {
        let tables = render_text_tables(&output.results);
        fs::write(args.out.join("tables.txt"), &tables)?;
        print!("{tables}");
    }
    if matches!(args.format, TableFormat::Csv | TableFormat::Both) {
        fs::write(args.out.join("tables.csv"), report::render_csv(&output.results))?;
    }
    println!(
        "wrote {} metric rows (config {} seed {}) to {}",
        output.results.rows.len(),
        &config.config_hash[..12],
        config.seed,
        args.out.display()
    );
    Ok(())
}

fn cmd_verify_audit(records: &Path, manifest: &Path) -> Result<()> {
    let lines = fs::read_to_string(records)
        .with_context(|| format!("reading records {}", records.display()))?;
    let manifest_text = fs::read_to_string(manifest)
        .with_context(|| format!("reading manifest {}", manifest.display()))?;
    let manifest: AuditManifest =
        serde_json::from_str(&manifest_text).context("parsing manifest")?;
    match audit::verify_export(&lines, &manifest) {
        Ok(count) => {
            println!("verified {count} audit records against root {}", manifest.root_hex);
            Ok(())
        }
        Err(e) => bail!("audit verification failed: {e}"),
    }
}

fn render_text_tables(bundle: &ResultsBundle) -> String {
    let mut tables = report::provenance_line(&bundle.meta);
    tables.push_str("\n\n");
    tables.push_str(&report::render_table1_text(bundle));
    tables.push('\n');
    tables.push_str(&report::render_table2_text(bundle));
    tables.push('\n');
    tables.push_str(&report::render_table3_text(bundle));
    tables
}

fn cmd_tables(results: &Path, format: TableFormat) -> Result<()> {
    let text = fs::read_to_string(results)
        .with_context(|| format!("reading results {}", results.display()))?;
    let bundle = ResultsBundle::from_json(&text)
        .with_context(|| format!("parsing results {}", results.display()))?;
    if matches!(format, TableFormat::Text | TableFormat::Both) {
        print!("{}", render_text_tables(&bundle));
    }
    if matches!(format, TableFormat::Csv | TableFormat::Both) {
        print!("{}", report::render_csv(&bundle));
    }
    Ok(())
}

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn check(name: &'static str, pass: bool, detail: String) -> Check {
    Check { name, pass, detail }
}

/// Quick invariant sweep over a full default run: the headline claims that
/// must hold for any healthy build. The acceptance test suite checks the
/// same things (and more) at full statistical fidelity.
fn cmd_self_check(args: &ConfigArgs) -> Result<ExitCode> {
    use jurisim::report::Scenario;
    let config = load_config(args)?;
    let output = sim::run_all(&config, &ScenarioFilter::default());
    let results = &output.results;
    let mut checks: Vec<Check> = Vec::new();

    let recovered = |variant: &str| -> Option<f64> {
        results
            .row(Scenario::BorderInterception, variant)?
            .plaintext_recovered_pct
    };
    if let (Some(std), Some(fl), Some(loc), Some(prop)) = (
        recovered("standard-encryption"),
        recovered("federated-learning"),
        recovered("localization-dp"),
        recovered("proposed"),
    ) {
        checks.push(check(
            "interception: proposed below 5%",
            prop < 5.0,
            format!("proposed {prop:.2}%"),
        ));
        checks.push(check(
            "interception: ordering proposed < localization < min(standard, federated)",
            prop < loc && loc < std.min(fl),
            format!("{prop:.1} < {loc:.1} < min({std:.1}, {fl:.1})"),
        ));
    } else {
        checks.push(check("interception: metrics present", false, String::new()));
    }

    let pii = |variant: &str| -> Option<f64> {
        results.row(Scenario::ModelExtraction, variant)?.pii_per_1000
    };
    let reference = results
        .scenario_b_reference
        .first()
        .map(|r| r.pii_per_1000);
    if let (Some(nodp), Some(fl), Some(tt), Some(loc), Some(prop)) = (
        pii("standard-encryption"),
        pii("federated-learning"),
        reference,
        pii("localization-dp"),
        pii("proposed"),
    ) {
        checks.push(check(
            "extraction: leakage ordering nodp > fl > train-time > localization > proposed",
            nodp > fl && fl > tt && tt > loc && loc > prop,
            format!("{nodp:.1} > {fl:.1} > {tt:.1} > {loc:.1} > {prop:.1}"),
        ));
    } else {
        checks.push(check("extraction: metrics present", false, String::new()));
    }
    if let Some(util) = results
        .row(Scenario::ModelExtraction, "proposed")
        .and_then(|r| r.utility_retention)
    {
        checks.push(check(
            "extraction: proposed utility retention at least 0.90",
            util >= 0.90,
            format!("retention {util:.3}"),
        ));
    }

    let proposed_c = results.row(Scenario::ComplianceEnforcement, "proposed");
    checks.push(check(
        "compliance: strict mode has zero violations",
        proposed_c.and_then(|r| r.cvr_pct) == Some(0.0),
        format!("cvr {:?}", proposed_c.and_then(|r| r.cvr_pct)),
    ));
    if let Some(prevention) = proposed_c.and_then(|r| r.prevention_rate_pct) {
        checks.push(check(
            "compliance: probabilistic prevention near 97.8%",
            (prevention - 97.8).abs() <= 1.5,
            format!("prevention {prevention:.2}%"),
        ));
    }
    if let Some(overhead) = proposed_c.and_then(|r| r.overhead.as_ref()) {
        checks.push(check(
            "overhead: total within 15-18%",
            (15.0..=18.0).contains(&overhead.total_pct),
            format!("total {:.1}%", overhead.total_pct),
        ));
    }
    if let Some(mttv) = output
        .timings
        .measured
        .iter()
        .find(|m| m.variant == "proposed")
        .map(|m| m.mttv_ms_mean)
    {
        checks.push(check(
            "compliance: mean validation latency under 50 ms",
            mttv < 50.0,
            format!("mttv {mttv:.3} ms"),
        ));
    }
    checks.push(check(
        "audit: export re-verifies",
        audit::verify_export(&output.audit_export, &output.audit_manifest).is_ok(),
        format!("{} records", output.audit_manifest.leaf_count),
    ));

    let mut failed = 0;
    for c in &checks {
        let status = if c.pass { "PASS" } else { "FAIL" };
        println!("[{status}] {} ({})", c.name, c.detail);
        if !c.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} of {} checks failed", checks.len());
        return Ok(ExitCode::FAILURE);
    }
    println!("all {} checks passed", checks.len());
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args).map(|()| ExitCode::SUCCESS),
        Command::VerifyAudit { records, manifest } => {
            cmd_verify_audit(records, manifest).map(|()| ExitCode::SUCCESS)
        }
        Command::Tables { results, format } => {
            cmd_tables(results, *format).map(|()| ExitCode::SUCCESS)
        }
        Command::SelfCheck(args) => cmd_self_check(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
