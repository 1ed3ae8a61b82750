//! Experiment runner: family configs in, deterministic CSV/JSON artifacts
//! out.
//!
//! Every run writes its data artifacts with fixed float formatting and a
//! fixed merge order, so re-running a spec yields byte-identical files. The
//! run manifest (`run_manifest.json`) additionally records wall time and is
//! the one artifact exempt from that guarantee.
//!
//! Exit codes: 0 when every verdict is clean, 2 when any check reports a
//! violation / inconsistency / non-convergence, 1 on operational errors
//! (bad config, unwritable output, ...).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use oplab::chromatic::{self, TrigSignal};
use oplab::conditions::check_conditions;
use oplab::config::{FamilyConfig, SignalConfig};
use oplab::family::{corpus, CoefficientFamily};
use oplab::fourier;
use oplab::lemmas::{verify_many, LemmaId, Verdict};
use oplab::limits::{self, Classification};
use oplab::phase::{unwind_phase, Parity};
use oplab::recurrence;
use oplab::report::{fmt_f64, JsonValue};

#[derive(Parser)]
#[command(name = "oplab", version, about = "Orthonormal polynomial recurrence laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads for parallel sweeps (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
}

#[derive(Args, Clone)]
struct FamilyArg {
    /// Family config (TOML path), or `hermite`, or `corpus` where a sweep
    /// over the built-in ten families is supported.
    #[arg(long)]
    family: String,
}

#[derive(Subcommand)]
enum Command {
    /// Finite-horizon checks of the coefficient growth/summability conditions.
    CheckConditions {
        #[command(flatten)]
        family: FamilyArg,
        #[arg(long, alias = "N", default_value_t = 10_000)]
        n: u64,
    },
    /// Three-term recurrence sweep with checkpointed trace.
    Eval {
        #[command(flatten)]
        family: FamilyArg,
        #[arg(long)]
        omega: f64,
        #[arg(long, alias = "N")]
        n: u64,
        #[arg(long, default_value_t = 1)]
        stride: u64,
    },
    /// Modulus/phase decomposition trace.
    PhaseTrace {
        #[command(flatten)]
        family: FamilyArg,
        #[arg(long)]
        omega: f64,
        #[arg(long, alias = "N")]
        n: u64,
        #[arg(long, default_value_t = 1)]
        stride: u64,
        /// Pair parity: `even` or `odd`.
        #[arg(long, default_value = "even")]
        parity: String,
    },
    /// Residual-decay verification of the asymptotic representations.
    LemmaVerify {
        #[command(flatten)]
        family: FamilyArg,
        /// Lemma id (`basicn`, `basicm`, `ztztt`, `lgztztt`, `twologs`,
        /// `FG1`, `F/G`, `lm`, `lm3`, `LG`, `arcsin`, `serG`, `recG`,
        /// `asdel`) or `all`.
        #[arg(long)]
        lemma: String,
        /// Comma-separated frequencies.
        #[arg(long, default_value = "0.5,1,2")]
        omega: String,
    },
    /// Fourier coefficients of the ratio kernel by periodic quadrature.
    FourierCm {
        #[arg(long)]
        x: f64,
        /// Highest coefficient order.
        #[arg(long, alias = "M", default_value_t = 4)]
        m: usize,
        /// Starting quadrature grid (power of two).
        #[arg(long)]
        grid: Option<usize>,
        /// Also compute the contour/residue decomposition for cross-check.
        #[arg(long, default_value_t = true)]
        contour: bool,
    },
    /// Fourier coefficient of the curvature kernel.
    FourierFkm {
        #[arg(long)]
        x: f64,
        #[arg(long)]
        m: i32,
        #[arg(long)]
        k: i64,
        #[arg(long, default_value_t = 64)]
        grid: usize,
    },
    /// Pair-sequence and ratio limits over a frequency grid.
    Limits {
        #[command(flatten)]
        family: FamilyArg,
        /// Comma-separated frequencies.
        #[arg(long)]
        omega_grid: String,
        #[arg(long, alias = "N", default_value_t = 100_000)]
        n: u64,
    },
    /// Ratio-limit scan over a symmetric frequency band.
    Uniformity {
        #[command(flatten)]
        family: FamilyArg,
        #[arg(long, alias = "B")]
        b: f64,
        #[arg(long, default_value_t = 17)]
        points: usize,
        #[arg(long, alias = "N", default_value_t = 100_000)]
        n: u64,
    },
    /// Stability scan of the non-symmetric recurrence over offset slopes.
    Conjecture {
        #[command(flatten)]
        family: FamilyArg,
        /// Comma-separated offset slopes rho.
        #[arg(long)]
        rho_grid: String,
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
        #[arg(long, alias = "N", default_value_t = 100_000)]
        n: u64,
    },
    /// Operator-layer checks on a trigonometric signal.
    Chromatic {
        #[command(flatten)]
        family: FamilyArg,
        /// Signal spec (TOML with a `terms` list; `terms_g` for `cd`).
        #[arg(long)]
        signal: Option<PathBuf>,
        /// `norm`, `orthogonality`, or `cd`.
        #[arg(long)]
        mode: String,
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, alias = "N", default_value_t = 100_000)]
        n: u64,
        /// Operator order for the `cd` identity check.
        #[arg(long, default_value_t = 50)]
        order: u64,
    },
}

/// Accumulates artifacts and the worst verdict of a run.
struct RunOutput {
    dir: PathBuf,
    artifacts: Vec<String>,
    clean: bool,
}

impl RunOutput {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            artifacts: Vec::new(),
            clean: true,
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents)
            .with_context(|| format!("writing {}", path.display()))?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    fn flag_dirty(&mut self) {
        self.clean = false;
    }
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn load_family(spec: &str) -> Result<CoefficientFamily> {
    if spec == "hermite" {
        return Ok(CoefficientFamily::hermite_exact());
    }
    let text = std::fs::read_to_string(spec)
        .with_context(|| format!("reading family config {spec}"))?;
    let config: FamilyConfig =
        toml::from_str(&text).with_context(|| format!("parsing family config {spec}"))?;
    Ok(config.build()?)
}

fn load_families(spec: &str) -> Result<Vec<CoefficientFamily>> {
    if spec == "corpus" {
        Ok(corpus())
    } else {
        Ok(vec![load_family(spec)?])
    }
}

fn parse_grid(text: &str, key: &str) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for piece in text.split(',') {
        let trimmed = piece.trim();
        if trimmed.is_empty() {
            continue;
        }
        values.push(
            f64::from_str(trimmed)
                .with_context(|| format!("parsing `{key}` entry `{trimmed}`"))?,
        );
    }
    if values.is_empty() {
        bail!("`{key}` must contain at least one value");
    }
    Ok(values)
}

fn run(cli: &Cli, out: &mut RunOutput) -> Result<()> {
    match &cli.command {
        Command::CheckConditions { family, n } => {
            let families = load_families(&family.family)?;
            let mut all = Vec::new();
            for fam in &families {
                let report = check_conditions(fam, *n)?;
                if report.any_violated() {
                    out.flag_dirty();
                }
                let name = format!("conditions_{}.json", sanitize(&fam.id()));
                out.write(&name, &report.to_json().to_string_pretty_stable())?;
                println!(
                    "{}: {}",
                    fam.id(),
                    if report.any_violated() {
                        "violated"
                    } else if report.all_consistent() {
                        "consistent"
                    } else {
                        "consistent-or-inconclusive"
                    }
                );
                all.push(report.to_json());
            }
            out.write(
                "conditions_summary.json",
                &JsonValue::Array(all).to_string_pretty_stable(),
            )?;
        }

        Command::Eval { family, omega, n, stride } => {
            let fam = load_family(&family.family)?;
            let trace = if fam.is_symmetric() {
                recurrence::eval_symmetric(&fam, *omega, *n, *stride)?
            } else {
                recurrence::eval_nonsymmetric(&fam, *omega, *n, *stride)?
            };
            out.write("eval.csv", &trace.to_csv())?;
            println!(
                "{} omega={} n={}: sum_p2={} nu={}",
                fam.id(),
                omega,
                n,
                fmt_f64(trace.sum_p2),
                fmt_f64(trace.sum_p2 / trace.sum_invgamma)
            );
        }

        Command::PhaseTrace { family, omega, n, stride, parity } => {
            let fam = load_family(&family.family)?;
            let parity = match parity.as_str() {
                "even" => Parity::EvenPair,
                "odd" => Parity::OddPair,
                other => bail!("unknown parity `{other}` (expected even or odd)"),
            };
            let trace = unwind_phase(&fam, *omega, *n, *stride, parity)?;
            out.write("phase.csv", &trace.to_csv())?;
            let summary = JsonValue::object(vec![
                ("family", JsonValue::string(&fam.id())),
                ("omega", JsonValue::number(*omega)),
                ("parity", JsonValue::str(parity.as_str())),
                ("n", JsonValue::integer(trace.n)),
                ("burn_in", JsonValue::integer(trace.summary.burn_in)),
                (
                    "two_term_max_rel",
                    JsonValue::number(trace.summary.two_term_max_rel),
                ),
                (
                    "recon_max_rel",
                    JsonValue::number(trace.summary.recon_max_rel),
                ),
                ("phi_final", JsonValue::number(trace.summary.phi_final)),
                ("s_final", JsonValue::number(trace.summary.s_final)),
            ]);
            out.write("phase_summary.json", &summary.to_string_pretty_stable())?;
            println!(
                "phase {} omega={}: burn_in={} phi_final={}",
                fam.id(),
                omega,
                trace.summary.burn_in,
                fmt_f64(trace.summary.phi_final)
            );
        }

        Command::LemmaVerify { family, lemma, omega } => {
            let families = load_families(&family.family)?;
            let omegas = parse_grid(omega, "--omega")?;
            let lemmas: Vec<LemmaId> = if lemma == "all" {
                LemmaId::all().to_vec()
            } else {
                vec![LemmaId::from_str(lemma).map_err(|e| anyhow::anyhow!(e))?]
            };
            let mut tasks = Vec::new();
            for lemma in &lemmas {
                for fam in &families {
                    for &w in &omegas {
                        tasks.push((*lemma, fam.clone(), w));
                    }
                }
            }
            let results = verify_many(&tasks);
            let mut rows = Vec::new();
            for ((lemma, fam, w), result) in tasks.iter().zip(results) {
                let tag = format!("{lemma} {} omega={w}", fam.id());
                match result {
                    Ok(report) => {
                        if report.verdict != Verdict::Consistent {
                            out.flag_dirty();
                        }
                        println!(
                            "{tag}: {} (fit {:.3}, claimed {:.3})",
                            report.verdict.as_str(),
                            report.fit_exponent,
                            report.claimed_exponent
                        );
                        let name = format!(
                            "lemma_{}_{}_{}.json",
                            sanitize(lemma.as_str()),
                            sanitize(&fam.id()),
                            sanitize(&format!("{w}"))
                        );
                        out.write(&name, &report.to_json().to_string_pretty_stable())?;
                        rows.push(report.to_json());
                    }
                    Err(err) => {
                        out.flag_dirty();
                        println!("{tag}: error: {err}");
                        rows.push(JsonValue::object(vec![
                            ("lemma", JsonValue::str(lemma.as_str())),
                            ("family", JsonValue::string(&fam.id())),
                            ("omega", JsonValue::number(*w)),
                            ("error", JsonValue::String(err.to_string())),
                        ]));
                    }
                }
            }
            out.write(
                "lemma_summary.json",
                &JsonValue::Array(rows).to_string_pretty_stable(),
            )?;
        }

        Command::FourierCm { x, m, grid, contour } => {
            let grid = grid.unwrap_or_else(|| (16 * m.max(&1)).next_power_of_two().max(64));
            let table = fourier::cm_fft(*x, *m, grid)?;
            out.write("cm.csv", &table.to_csv())?;
            let mut sidecar = match table.sidecar_json() {
                JsonValue::Object(fields) => fields,
                _ => unreachable!(),
            };
            if *contour {
                let mut rows = Vec::new();
                for order in 1..=*m as i64 {
                    let parts = fourier::cm_contour(*x, order)?;
                    let agreement = (parts.value - table.c(order)).norm();
                    if agreement > 1e-8 {
                        out.flag_dirty();
                    }
                    rows.push(JsonValue::object(vec![
                        ("m", JsonValue::integer(order as u64)),
                        ("re", JsonValue::number(parts.value.re)),
                        ("im", JsonValue::number(parts.value.im)),
                        ("residue_abs", JsonValue::number(parts.residue_term.norm())),
                        ("circle_abs", JsonValue::number(parts.circle_term.norm())),
                        ("quadrature_gap", JsonValue::number(agreement)),
                    ]));
                }
                sidecar.push(("contour".to_string(), JsonValue::Array(rows)));
            }
            out.write(
                "cm.json",
                &JsonValue::Object(sidecar).to_string_pretty_stable(),
            )?;
            println!("cm x={x}: grid {} error {}", table.grid, fmt_f64(table.error_estimate));
        }

        Command::FourierFkm { x, m, k, grid } => {
            let value = fourier::fkm(*x, *m, *k, *grid)?;
            let doc = JsonValue::object(vec![
                ("x", JsonValue::number(*x)),
                ("m", JsonValue::Raw(m.to_string())),
                ("k", JsonValue::Raw(k.to_string())),
                ("re", JsonValue::number(value.re)),
                ("im", JsonValue::number(value.im)),
                ("abs", JsonValue::number(value.norm())),
            ]);
            out.write("fkm.json", &doc.to_string_pretty_stable())?;
            println!("fkm x={x} m={m} k={k}: abs={}", fmt_f64(value.norm()));
        }

        Command::Limits { family, omega_grid, n } => {
            let fam = load_family(&family.family)?;
            let omegas = parse_grid(omega_grid, "--omega-grid")?;
            let mut rows = Vec::new();
            for &w in &omegas {
                let beta = limits::beta_limit(&fam, w, *n)?;
                let ratio = limits::ratio_limit(&fam, w, *n)?;
                if !beta.converged || !ratio.converged {
                    out.flag_dirty();
                }
                println!(
                    "limits {} omega={w}: L={} (conv {}), ratio={} (conv {})",
                    fam.id(),
                    fmt_f64(beta.value),
                    beta.converged,
                    fmt_f64(ratio.value),
                    ratio.converged
                );
                let mut fields = vec![
                    ("family", JsonValue::string(&fam.id())),
                    ("omega", JsonValue::number(w)),
                ];
                fields.push(("beta", JsonValue::object(beta.to_json_fields())));
                fields.push(("ratio", JsonValue::object(ratio.to_json_fields())));
                rows.push(JsonValue::object(fields));
            }
            out.write(
                "limits.json",
                &JsonValue::Array(rows).to_string_pretty_stable(),
            )?;
        }

        Command::Uniformity { family, b, points, n } => {
            let fam = load_family(&family.family)?;
            let report = limits::uniformity_scan(&fam, *b, *points, *n)?;
            if !report.all_converged {
                out.flag_dirty();
            }
            out.write("uniformity.json", &report.to_json().to_string_pretty_stable())?;
            println!(
                "uniformity {} B={}: [{}, {}] all_converged={}",
                fam.id(),
                b,
                fmt_f64(report.lower),
                fmt_f64(report.upper),
                report.all_converged
            );
        }

        Command::Conjecture { family, rho_grid, omega, n } => {
            let fam = load_family(&family.family)?;
            let rhos = parse_grid(rho_grid, "--rho-grid")?;
            let verdicts = limits::conjecture_scan(&fam, &rhos, *omega, *n)?;
            let mut rows = Vec::new();
            for verdict in &verdicts {
                println!(
                    "conjecture rho={}: {} (nu change {}, envelope ratio {})",
                    verdict.rho,
                    verdict.classification.as_str(),
                    fmt_f64(verdict.tail_rel_change),
                    fmt_f64(verdict.envelope_ratio)
                );
                let name = format!("envelope_rho_{}.csv", sanitize(&format!("{}", verdict.rho)));
                out.write(&name, &verdict.envelope_csv())?;
                rows.push(verdict.to_json());
            }
            out.write(
                "conjecture.json",
                &JsonValue::Array(rows).to_string_pretty_stable(),
            )?;
            let _ = Classification::Stable;
        }

        Command::Chromatic { family, signal, mode, omega, sigma, n, order } => {
            let fam = load_family(&family.family)?;
            let load_signal = |path: &Option<PathBuf>| -> Result<(TrigSignal, Option<TrigSignal>)> {
                let path = path
                    .as_ref()
                    .context("--signal is required for this mode")?;
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading signal spec {}", path.display()))?;
                let config: SignalConfig = toml::from_str(&text)
                    .with_context(|| format!("parsing signal spec {}", path.display()))?;
                Ok((config.build_f()?, config.build_g()?))
            };
            match mode.as_str() {
                "norm" => {
                    let (f, _) = load_signal(signal)?;
                    let estimate = chromatic::norm(&fam, &f, *n)?;
                    if !estimate.converged {
                        out.flag_dirty();
                    }
                    let spread = chromatic::nu_t_spread(
                        &fam,
                        &f,
                        *n,
                        &[-2.0, -1.0, 0.0, 1.0, 2.0],
                    )?;
                    let mut fields = vec![
                        ("family", JsonValue::string(&fam.id())),
                        ("mode", JsonValue::str("norm")),
                    ];
                    fields.extend(estimate.to_json_fields());
                    fields.push(("t_spread", JsonValue::number(spread)));
                    out.write(
                        "chromatic.json",
                        &JsonValue::object(fields).to_string_pretty_stable(),
                    )?;
                    println!("norm = {} (converged {})", fmt_f64(estimate.value), estimate.converged);
                }
                "orthogonality" => {
                    let w = omega.context("--omega is required for orthogonality")?;
                    let s = sigma.context("--sigma is required for orthogonality")?;
                    let stride = (*n / 100).max(1);
                    let report = chromatic::orthogonality_check(&fam, w, s, *n, stride)?;
                    out.write("orthogonality.csv", &report.to_csv())?;
                    out.write(
                        "chromatic.json",
                        &report.to_json().to_string_pretty_stable(),
                    )?;
                    println!(
                        "orthogonality ({w}, {s}): |ratio| {} -> {} (decay {})",
                        fmt_f64(report.ratio_first.abs()),
                        fmt_f64(report.ratio_last.abs()),
                        fmt_f64(report.decay_factor)
                    );
                }
                "cd" => {
                    let (f, g) = load_signal(signal)?;
                    let g = g.unwrap_or_else(|| f.clone());
                    let ts = [-2.0, -1.0, -0.3, 0.0, 0.7, 1.5, 2.4];
                    let residual = chromatic::operator_cd_residual(&fam, &f, &g, *order, &ts)?;
                    if residual > 1e-10 {
                        out.flag_dirty();
                    }
                    let doc = JsonValue::object(vec![
                        ("family", JsonValue::string(&fam.id())),
                        ("mode", JsonValue::str("cd")),
                        ("order", JsonValue::integer(*order)),
                        ("max_residual", JsonValue::number(residual)),
                    ]);
                    out.write("chromatic.json", &doc.to_string_pretty_stable())?;
                    println!("operator identity residual at order {order}: {}", fmt_f64(residual));
                }
                other => bail!("unknown chromatic mode `{other}`"),
            }
        }
    }
    Ok(())
}

fn manifest(cli_args: &[String], out: &RunOutput, elapsed_seconds: f64) -> String {
    let mut doc = String::new();
    // assembled by hand: wall time makes this file intentionally
    // non-deterministic, unlike every data artifact
    let _ = write!(
        doc,
        "{}",
        JsonValue::object(vec![
            (
                "command",
                JsonValue::Array(cli_args.iter().map(JsonValue::string).collect()),
            ),
            ("version", JsonValue::str(env!("CARGO_PKG_VERSION"))),
            ("wall_time_seconds", JsonValue::number(elapsed_seconds)),
            (
                "artifacts",
                JsonValue::Array(out.artifacts.iter().map(JsonValue::string).collect()),
            ),
        ])
        .to_string_pretty_stable()
    );
    doc
}

fn main() -> ExitCode {
    // piping stdout into `head` should end the run, not panic it
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let args: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    if cli.workers > 0 {
        if let Err(err) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global()
        {
            eprintln!("error: configuring worker pool: {err}");
            return ExitCode::from(1);
        }
    }
    let start = Instant::now();
    let mut out = match RunOutput::new(&cli.out) {
        Ok(out) => out,
        Err(err) => {
            eprintln!("error: {err:#}");
            return ExitCode::from(1);
        }
    };
    match run(&cli, &mut out) {
        Ok(()) => {
            let doc = manifest(&args, &out, start.elapsed().as_secs_f64());
            if let Err(err) = std::fs::write(out.dir.join("run_manifest.json"), doc) {
                eprintln!("error: writing run manifest: {err}");
                return ExitCode::from(1);
            }
            if out.clean {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
