//! Command-line front end for the exact Hopf-algebra check suite.
//!
//! Exit codes: `0` when every check passed (checks rescued by an overlay
//! count as passing only under `--accept-overlay`), `1` when any check
//! failed, `2` for configuration, metric, overlay, or expression errors.

use std::path::PathBuf;
use std::process::exit;

use clap::{Parser, Subcommand, ValueEnum};

use hopfcheck::presentations::{build_presentation, make_map, presentation_by_name, MapId, MetricSpec, PresId};
use hopfcheck::verify::{
    emit_report, exit_code, load_overlay, metric_from_arg, parse_check_selection,
    parse_map_selection, parse_presentation_selection, run_suite, CheckKind, ReportFormat,
    SuiteConfig,
};
use hopfcheck::{exprio, Rat};

#[derive(Parser)]
#[command(
    name = "verify",
    version,
    about = "Exact checks for quantum Poincare Hopf algebra presentations"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fmt {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the check suite and emit a report.
    Suite {
        /// Presentation to check: a name from `verify list`, or `all`.
        #[arg(long, default_value = "all")]
        presentation: String,
        /// Metric: `generic`, `null`, `minkowski`, or `file:PATH` pointing at
        /// sixteen whitespace-separated rational entries, row-major.
        #[arg(long, default_value = "generic")]
        metric: String,
        /// Comma-separated check families (see `verify list`), or `all`.
        #[arg(long, default_value = "all")]
        checks: String,
        /// Structure map to check: `basis-change`, `null-iso`, `all`, or `none`.
        #[arg(long, default_value = "none")]
        map: String,
        /// Overlay file with bracket overrides.
        #[arg(long)]
        overlay: Option<PathBuf>,
        /// Count fail-with-overlay-pass checks as passing for the exit code.
        #[arg(long)]
        accept_overlay: bool,
        /// Report format.
        #[arg(long, value_enum, default_value = "text")]
        format: Fmt,
        /// Write the report to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Record per-check wall time.  Off by default, so that two runs of
        /// the same configuration emit byte-identical reports.
        #[arg(long)]
        timings: bool,
    },
    /// Parse an expression, normal-order it, and print its canonical form.
    Eval {
        /// Expression in the presentation's generator names, e.g. "[N1, P1]".
        expr: String,
        /// Presentation whose names and relations to use.
        #[arg(long)]
        presentation: String,
        /// Metric: `generic`, `null`, `minkowski`, or `file:PATH`.
        #[arg(long, default_value = "generic")]
        metric: String,
    },
    /// List presentations, structure maps, check families, and metric presets.
    List,
}

fn fail2(msg: impl std::fmt::Display) -> ! {
    eprintln!("error: {msg}");
    exit(2);
}

fn main() {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Suite {
            presentation,
            metric,
            checks,
            map,
            overlay,
            accept_overlay,
            format,
            out,
            timings,
        } => {
            let presentations =
                parse_presentation_selection(&presentation).unwrap_or_else(|e| fail2(e));
            let metric_spec = metric_from_arg::<Rat>(&metric).unwrap_or_else(|e| fail2(e));
            let check_kinds = parse_check_selection(&checks).unwrap_or_else(|e| fail2(e));
            let maps = parse_map_selection(&map).unwrap_or_else(|e| fail2(e));
            let (loaded_overlay, overlay_label) = match overlay {
                None => (None, None),
                Some(path) => {
                    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| {
                        fail2(format!("cannot read overlay '{}': {e}", path.display()))
                    });
                    let ov = load_overlay::<Rat>(&text)
                        .unwrap_or_else(|e| fail2(format!("{}: {e}", path.display())));
                    (Some(ov), Some(path.display().to_string()))
                }
            };
            let cfg = SuiteConfig {
                presentations,
                metric: metric_spec,
                metric_label: metric,
                checks: check_kinds,
                maps,
                overlay: loaded_overlay,
                overlay_label,
                accept_overlay,
                timings,
            };
            let report = run_suite(&cfg).unwrap_or_else(|e| fail2(e));
            let fmt = match format {
                Fmt::Text => ReportFormat::Text,
                Fmt::Json => ReportFormat::Json,
            };
            emit_report(&report, fmt, out.as_deref()).unwrap_or_else(|e| fail2(e));
            exit(exit_code(&report, accept_overlay));
        }

        Cmd::Eval { expr, presentation, metric } => {
            let id = presentation_by_name(&presentation)
                .unwrap_or_else(|_| fail2(format!("unknown presentation '{presentation}'")));
            let metric_spec = metric_from_arg::<Rat>(&metric).unwrap_or_else(|e| fail2(e));
            let ctx = build_presentation(id, &metric_spec).unwrap_or_else(|e| fail2(e));
            let parsed = exprio::parse::<Rat>(&expr, &ctx).unwrap_or_else(|e| fail2(e));
            println!("{}", exprio::format(&ctx, &parsed));
        }

        Cmd::List => {
            println!("presentations:");
            for id in PresId::all() {
                let p = build_presentation::<Rat>(id, &MetricSpec::Generic)
                    .unwrap_or_else(|e| fail2(e));
                let mut names: Vec<&str> = p.letter_names.to_vec();
                names.extend(p.momentum_names.iter().copied());
                names.push("E");
                let constants: Vec<&str> = p.constants.keys().map(String::as_str).collect();
                let mut line = format!("  {:<16} generators: {}", p.name(), names.join(" "));
                if !constants.is_empty() {
                    line.push_str(&format!("; constants: {}", constants.join(" ")));
                }
                println!("{line}");
            }
            println!("maps:");
            for id in MapId::all() {
                let b = make_map::<Rat>(id, &MetricSpec::Generic).unwrap_or_else(|e| fail2(e));
                println!("  {:<16} {} -> {}", id.name(), b.source.name(), b.target.name());
            }
            let check_names: Vec<&str> = CheckKind::all().iter().map(|k| k.name()).collect();
            println!("checks: {}", check_names.join(", "));
            println!("metrics: generic, null, minkowski, file:PATH");
        }
    }
}
