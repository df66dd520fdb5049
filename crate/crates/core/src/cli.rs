//! `phasemax` command-line interface.
//!
//! Exit codes: 0 success, 2 usage or config, 3 I/O or unreadable input,
//! 4 degenerate numerical input, 5 unsupported format feature.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{self, RunConfig};
use crate::error::{Error, Result};
use crate::evaluation::{self, AssociationReport, RmsReport};
use crate::ingest::{self, text::format_f64, ChannelSelection, EdfOptions, Recording, TextOptions};
use crate::numerics::Matrix;
use crate::pca;
use crate::separation::{self, SeparationMethod, SeparationOptions, SeparationResult};
use crate::signals::{self, MixingMatrix, NoiseSpec};
use crate::whitening::{self, WhiteningMethod};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_DEGENERATE: i32 = 4;
pub const EXIT_UNSUPPORTED: i32 = 5;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_)
        | Error::InvalidSpec(_)
        | Error::DimensionMismatch(_)
        | Error::OutOfBounds(_) => EXIT_USAGE,
        Error::Io { .. }
        | Error::Parse { .. }
        | Error::RaggedRows { .. }
        | Error::MalformedHeader { .. }
        | Error::TruncatedData { .. } => EXIT_IO,
        Error::DegenerateInput(_)
        | Error::ZeroSignal
        | Error::ZeroSeries
        | Error::ZeroVariance
        | Error::NotSymmetric(_)
        | Error::NonFinite(_) => EXIT_DEGENERATE,
        Error::UnsupportedFeature(_) => EXIT_UNSUPPORTED,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "phasemax",
    version,
    about = "Sparse source separation from phase-space maxima"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Delimited text table, one column per channel.
    #[arg(long, short = 'i')]
    input: PathBuf,
    /// Leading columns to drop (e.g. a time column).
    #[arg(long, default_value_t = 0)]
    skip_columns: usize,
    /// Keep only the first N samples.
    #[arg(long)]
    max_samples: Option<usize>,
    /// Column delimiter; auto-detected when omitted.
    #[arg(long)]
    delimiter: Option<char>,
    /// 1-based channel list such as "1-4" or "2,3,5".
    #[arg(long)]
    channels: Option<String>,
}

impl InputArgs {
    fn load(&self) -> Result<Recording> {
        let rec = ingest::read_matrix_text(
            &self.input,
            &TextOptions {
                delimiter: self.delimiter,
                skip_columns: self.skip_columns,
                max_samples: self.max_samples,
            },
        )?;
        match &self.channels {
            None => Ok(rec),
            Some(list) => {
                let m = rec.signal.n_samples();
                ingest::select(&rec, &ingest::parse_channel_list(list)?, 0..m)
            }
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate source signals from a run config.
    Gen {
        #[arg(long, short = 'c')]
        config: PathBuf,
        #[arg(long, short = 'o')]
        out: PathBuf,
        /// Also write the mixed (and noisy, if configured) observations here.
        #[arg(long)]
        mixed: Option<PathBuf>,
        /// Noise seed; overrides `noise.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Mix channels with a matrix and optionally add Gaussian noise.
    Mix {
        #[command(flatten)]
        input: InputArgs,
        /// Inline matrix, rows separated by ';' (e.g. "1.3,2;1,3").
        #[arg(long, short = 'm')]
        matrix: String,
        #[arg(long, default_value_t = 0.0)]
        noise_sd: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short = 'o')]
        out: PathBuf,
    },
    /// Whiten channels and write the whitened components.
    Whiten {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value = "gram-schmidt")]
        method: WhiteningMethod,
        /// 1-based Gram-Schmidt channel order, e.g. "2,1".
        #[arg(long)]
        order: Option<String>,
        #[arg(long, short = 'o')]
        out: PathBuf,
        /// Write the whitening matrix here.
        #[arg(long)]
        transform: Option<PathBuf>,
    },
    /// Separate sources with the maximum method or PCA.
    Separate {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value = "max")]
        method: SeparationMethod,
        #[arg(long, default_value = "gram-schmidt")]
        whiten: WhiteningMethod,
        #[arg(long)]
        order: Option<String>,
        /// Subtract channel means first.
        #[arg(long)]
        center: bool,
        #[arg(long)]
        max_sources: Option<usize>,
        #[arg(long, default_value_t = separation::DEFAULT_ENERGY_FLOOR)]
        energy_floor: f64,
        #[arg(long)]
        out_estimates: PathBuf,
        #[arg(long)]
        out_directions: PathBuf,
        /// Also run PCA and the unwhitened maximum method and write their
        /// cross-method correlation report here.
        #[arg(long)]
        compare: Option<PathBuf>,
    },
    /// Monte-Carlo RMS error sweep from a run config.
    Montecarlo {
        #[arg(long, short = 'c')]
        config: PathBuf,
        #[arg(long, short = 'o')]
        out: PathBuf,
    },
    /// Export the phase-space trajectory with radius and maximum flag.
    Phase {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value = "none")]
        whiten: WhiteningMethod,
        #[arg(long, short = 'o')]
        out: PathBuf,
    },
    /// Convert selected EDF signals to delimited text.
    Edf {
        #[arg(long, short = 'i')]
        input: PathBuf,
        /// 1-based signal list ("2-5") or comma-separated labels.
        #[arg(long)]
        channels: Option<String>,
        /// Keep only the first N samples.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, short = 'o')]
        out: PathBuf,
    },
    /// Pair estimates with reference sources by correlation.
    Evaluate {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        estimates: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("phasemax: {e}");
            exit_code(&e)
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn parse_order(order: Option<&str>) -> Result<Option<Vec<usize>>> {
    order
        .map(|s| {
            let list: Vec<usize> = s
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::Config(format!("bad channel order entry {t:?}")))
                })
                .collect::<Result<_>>()?;
            config::zero_based(&list)
        })
        .transpose()
}

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Gen {
            config,
            out,
            mixed,
            seed,
        } => cmd_gen(&config, &out, mixed.as_deref(), seed),
        Command::Mix {
            input,
            matrix,
            noise_sd,
            seed,
            out,
        } => {
            let rec = input.load()?;
            let a = MixingMatrix::parse_inline(&matrix)?;
            let z = signals::mix(&rec.signal, &a)?;
            let z = signals::add_noise(&z, NoiseSpec { sd: noise_sd, seed })?;
            let names = labels("z", z.n_channels());
            write_file(&out, &ingest::text::to_delimited_text(&names, z.channels()))
        }
        Command::Whiten {
            input,
            method,
            order,
            out,
            transform,
        } => {
            let rec = input.load()?;
            let order = parse_order(order.as_deref())?;
            let (e, t) = whitening::whiten(&rec.signal, method, order.as_deref())?;
            write_file(
                &out,
                &ingest::text::to_delimited_text(&labels("e", e.n_channels()), e.channels()),
            )?;
            if let Some(path) = transform {
                let mut doc = String::new();
                let _ = writeln!(doc, "method = \"{}\"", t.method);
                let _ = writeln!(
                    doc,
                    "channel_order = {}",
                    usize_array(t.channel_order.iter().map(|k| k + 1))
                );
                let _ = writeln!(doc, "forward = {}", matrix_array(&t.forward));
                write_file(&path, &doc)?;
            }
            Ok(())
        }
        Command::Separate {
            input,
            method,
            whiten,
            order,
            center,
            max_sources,
            energy_floor,
            out_estimates,
            out_directions,
            compare,
        } => {
            let rec = input.load()?;
            let order = parse_order(order.as_deref())?;
            let opts = SeparationOptions {
                whitening: whiten,
                order,
                max_sources,
                energy_floor,
            };
            cmd_separate(
                &rec,
                method,
                &opts,
                center,
                &out_estimates,
                &out_directions,
                compare.as_deref(),
            )
        }
        Command::Montecarlo { config, out } => cmd_montecarlo(&config, &out),
        Command::Phase { input, whiten, out } => {
            let rec = input.load()?;
            cmd_phase(&rec, whiten, &out)
        }
        Command::Edf {
            input,
            channels,
            samples,
            out,
        } => cmd_edf(&input, channels.as_deref(), samples, &out),
        Command::Evaluate {
            truth,
            estimates,
            report,
        } => cmd_evaluate(&truth, &estimates, &report),
    }
}

pub fn cmd_gen(config: &Path, out: &Path, mixed: Option<&Path>, seed: Option<u64>) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    let spec = cfg.pulse_spec()?;
    let sources = signals::generate_sources(&spec)?;
    write_file(
        out,
        &ingest::text::to_delimited_text(&labels("s", sources.n_channels()), sources.channels()),
    )?;
    if let Some(path) = mixed {
        let a = cfg.mixing_matrix(sources.n_channels())?;
        let mut z = signals::mix(&sources, &a)?;
        if let Some(mut noise) = cfg.noise_spec() {
            if let Some(s) = seed {
                noise.seed = s;
            }
            z = signals::add_noise(&z, noise)?;
        }
        write_file(
            path,
            &ingest::text::to_delimited_text(&labels("z", z.n_channels()), z.channels()),
        )?;
    }
    Ok(())
}

fn run_method(
    signal: &signals::MultichannelSignal,
    method: SeparationMethod,
    opts: &SeparationOptions,
    center: bool,
) -> Result<SeparationResult> {
    match method {
        SeparationMethod::Pca => {
            let mut r = pca::pca_separate(signal, center)?;
            if let Some(k) = opts.max_sources {
                r.estimates.truncate(k);
                r.residual_energy.truncate(k + 1);
            }
            Ok(r)
        }
        SeparationMethod::Max => {
            if center {
                let mut r = separation::separate_maximum(&signals::center(signal), opts)?;
                r.centered = true;
                Ok(r)
            } else {
                separation::separate_maximum(signal, opts)
            }
        }
    }
}

pub fn cmd_separate(
    rec: &Recording,
    method: SeparationMethod,
    opts: &SeparationOptions,
    center: bool,
    out_estimates: &Path,
    out_directions: &Path,
    compare: Option<&Path>,
) -> Result<()> {
    let result = run_method(&rec.signal, method, opts, center)?;
    let est = result.estimate_signal()?;
    write_file(
        out_estimates,
        &ingest::text::to_delimited_text(&labels("est", est.n_channels()), est.channels()),
    )?;
    write_file(out_directions, &directions_document(&result))?;
    if let Some(path) = compare {
        let pca_result = pca::pca_separate(&rec.signal, center)?;
        let raw = SeparationOptions {
            whitening: WhiteningMethod::None,
            ..opts.clone()
        };
        let max_result = run_method(&rec.signal, SeparationMethod::Max, &raw, center)?;
        let n = pca_result.estimates.len().min(max_result.estimates.len());
        let trim = |r: &SeparationResult| -> Result<signals::MultichannelSignal> {
            signals::MultichannelSignal::new(
                r.estimates[..n].iter().map(|e| e.series.clone()).collect(),
            )
        };
        let report = evaluation::associate(&trim(&pca_result)?, &trim(&max_result)?)?;
        let header = "# rows: PCA estimates; columns: unwhitened maximum-method estimates\n\
                      reference = \"pca\"\ncompared = \"max-none\"\n";
        write_file(path, &format!("{header}{}", association_document(&report)))?;
    }
    Ok(())
}

pub fn directions_document(r: &SeparationResult) -> String {
    let mut doc = String::new();
    let _ = writeln!(doc, "method = \"{}\"", r.method);
    let _ = writeln!(doc, "whitening = \"{}\"", r.whitening.method);
    let _ = writeln!(doc, "centered = {}", r.centered);
    let _ = writeln!(
        doc,
        "channel_order = {}",
        usize_array(r.whitening.channel_order.iter().map(|k| k + 1))
    );
    let _ = writeln!(doc, "residual_energy = {}", float_array(&r.residual_energy));
    let _ = writeln!(
        doc,
        "whitening_matrix = {}",
        matrix_array(&r.whitening.forward)
    );
    for (k, e) in r.estimates.iter().enumerate() {
        let _ = writeln!(doc, "\n[[estimates]]");
        let _ = writeln!(doc, "index = {}", k + 1);
        let _ = writeln!(doc, "direction = {}", float_array(&e.direction));
        if let Some(n) = e.argmax_index {
            let _ = writeln!(doc, "argmax_index = {n}");
        }
        if let Some(r) = e.radius {
            let _ = writeln!(doc, "radius = {}", format_f64(r));
        }
        if let Some(l) = e.eigenvalue {
            let _ = writeln!(doc, "eigenvalue = {}", format_f64(l));
        }
    }
    doc
}

pub fn association_document(rep: &AssociationReport) -> String {
    let mut doc = String::new();
    let _ = writeln!(
        doc,
        "correlation_matrix = {}",
        matrix_array(&rep.correlation_matrix)
    );
    for p in &rep.pairs {
        let _ = writeln!(doc, "\n[[pairs]]");
        let _ = writeln!(doc, "source = {}", p.source + 1);
        let _ = writeln!(doc, "estimate = {}", p.estimate + 1);
        let _ = writeln!(doc, "correlation = {}", format_f64(p.correlation));
    }
    doc
}

fn float_array(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format_f64(*x)).collect();
    format!("[{}]", items.join(", "))
}

fn usize_array(v: impl Iterator<Item = usize>) -> String {
    let items: Vec<String> = v.map(|x| x.to_string()).collect();
    format!("[{}]", items.join(", "))
}

fn matrix_array(m: &Matrix) -> String {
    let rows: Vec<String> = m.row_iter().map(float_array).collect();
    format!("[{}]", rows.join(", "))
}

pub fn cmd_montecarlo(config: &Path, out: &Path) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    let mc = cfg.monte_carlo()?;
    let reports = evaluation::monte_carlo_rms(&mc)?;
    let sources = signals::generate_sources(&mc.sources)?;
    let truth = evaluation::unit_truth(&sources)?;
    write_file(out, &rms_table(&truth, &reports))
}

/// Sample index, unit-norm reference sources, then one RMS column per
/// (noise level, method, source).
pub fn rms_table(truth: &signals::MultichannelSignal, reports: &[RmsReport]) -> String {
    let mut header = vec!["sample".to_string()];
    header.extend((1..=truth.n_channels()).map(|j| format!("truth_s{j}")));
    let mut cols: Vec<&[f64]> = truth.channels().iter().map(Vec::as_slice).collect();
    for r in reports {
        for (j, s) in r.rms_series.iter().enumerate() {
            header.push(format!("{}_sd{}_s{}", r.method.label(), r.noise_sd, j + 1));
            cols.push(s);
        }
    }
    let mut out = header.join(",");
    out.push('\n');
    for n in 0..truth.n_samples() {
        let _ = write!(out, "{n}");
        for c in &cols {
            let _ = write!(out, ",{}", format_f64(c[n]));
        }
        out.push('\n');
    }
    out
}

pub fn cmd_phase(rec: &Recording, whiten: WhiteningMethod, out: &Path) -> Result<()> {
    let (z, _) = whitening::whiten(&rec.signal, whiten, None)?;
    let r = separation::radius_series(&z);
    let n_max = separation::find_maximum_direction(&z)?.argmax_index;
    let mut header = vec!["sample".to_string()];
    header.extend(labels("z", z.n_channels()));
    header.push("r".into());
    header.push("is_max".into());
    let mut doc = header.join(",");
    doc.push('\n');
    for n in 0..z.n_samples() {
        let _ = write!(doc, "{n}");
        for ch in z.channels() {
            let _ = write!(doc, ",{}", format_f64(ch[n]));
        }
        let _ = writeln!(doc, ",{},{}", format_f64(r[n]), u8::from(n == n_max));
    }
    write_file(out, &doc)
}

fn parse_selection(s: &str) -> ChannelSelection {
    match ingest::parse_channel_list(s) {
        Ok(list) if !list.is_empty() => ChannelSelection::Indices(list),
        _ => ChannelSelection::Labels(s.split(',').map(|l| l.trim().to_string()).collect()),
    }
}

pub fn cmd_edf(
    input: &Path,
    channels: Option<&str>,
    samples: Option<usize>,
    out: &Path,
) -> Result<()> {
    let opts = EdfOptions {
        channels: channels.map(parse_selection).unwrap_or_default(),
        max_samples: samples,
    };
    let rec = ingest::read_edf(input, &opts)?;
    write_file(out, &ingest::text::recording_to_text(&rec))
}

pub fn cmd_evaluate(truth: &Path, estimates: &Path, report: &Path) -> Result<()> {
    let t = ingest::read_matrix_text(truth, &TextOptions::default())?;
    let e = ingest::read_matrix_text(estimates, &TextOptions::default())?;
    let rep = evaluation::associate(&t.signal, &e.signal)?;
    let header = format!(
        "truth = {:?}\nestimates = {:?}\n",
        truth.display().to_string(),
        estimates.display().to_string()
    );
    write_file(report, &format!("{header}{}", association_document(&rep)))
}
