//! The `pws` command line. Batch oriented: TSV/CSV in, TSV/CSV out.
//!
//! Exit status is 0 on success, 2 for usage errors (bad flags, bad parameter
//! values, bad config) and 1 for data errors. Failures print a single
//! `error[<kind>]: <message>` line on stderr.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::estimators::{mle_coeffs, unbiased_coeffs};
use crate::experiments::{
    default_delta_grid, default_tau_grid, nrmse_experiment, run_sweep, DistributionSpec, Grid, Method, Metric,
    SweepConfig,
};
use crate::freq::{compute_pdfs, compute_pij, default_table, sanitize_frequencies, SanitizerTable};
use crate::io;
use crate::keys::{compute_pi, sanitize_keys};
use crate::ordinal::{concordance_pairs, expected_kendall_tau, OutputLaw};
use crate::privacy::PrivacyParams;
use crate::sampling::{draw_sample, FrequencyFn, SamplingScheme, SchemeKind, WeightedSample};
use crate::sbh::{sampled_sbh, sbh_estimate, sbh_sanitize, RealSample, SbhConfig, SbhLaw};

#[derive(Debug, Parser)]
#[command(name = "pws", version, about = "Private weighted sampling")]
struct Cli {
    /// Worker thread cap; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct PrivacyArgs {
    #[arg(long, allow_negative_numbers = true)]
    epsilon: f64,
    #[arg(long, allow_negative_numbers = true)]
    delta: f64,
}

#[derive(Debug, Args)]
struct SchemeArgs {
    /// none, ppswor or pps.
    #[arg(long, default_value = "none")]
    scheme: String,
    /// Sampling threshold; required unless the scheme is none.
    #[arg(long, allow_negative_numbers = true)]
    tau: Option<f64>,
    /// Sampling weight f: identity or power:P.
    #[arg(long, default_value = "identity")]
    weight: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TableChoice {
    /// Integer tokens when nothing is sampled out, intervals otherwise.
    Auto,
    Discrete,
    Intervals,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SanitizeMode {
    Keys,
    Freqs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EstimatorChoice {
    Mle,
    Unbiased,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Source {
    /// `key<TAB>token` from `sanitize --mode freqs`.
    Pws,
    /// `key<TAB>value` from `baseline sampled-sbh`.
    SampledSbh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Baseline {
    Sbh,
    SampledSbh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Analysis {
    Sweep,
    Nrmse,
    Concordance,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Key reporting probabilities as CSV `i,q_i,pi_i,p_i`.
    Pi {
        #[command(flatten)]
        privacy: PrivacyArgs,
        #[command(flatten)]
        scheme: SchemeArgs,
        #[arg(long)]
        max_freq: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Integer-token frequency table as CSV `i,j,pi_ij`.
    Pij {
        #[command(flatten)]
        privacy: PrivacyArgs,
        #[command(flatten)]
        scheme: SchemeArgs,
        #[arg(long)]
        max_freq: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Piecewise-constant densities and their discretized table.
    Pdfs {
        #[command(flatten)]
        privacy: PrivacyArgs,
        #[command(flatten)]
        scheme: SchemeArgs,
        #[arg(long)]
        max_freq: usize,
        /// Discretized table `i,j,pi_ij`; stdout by default.
        #[arg(long)]
        output: Option<PathBuf>,
        /// `i,left,right,density`.
        #[arg(long)]
        segments: Option<PathBuf>,
        /// `i,atom0`.
        #[arg(long)]
        atoms: Option<PathBuf>,
        /// `j,left,right` for each token.
        #[arg(long)]
        intervals: Option<PathBuf>,
    },
    /// Draws a weighted sample from a histogram (or element stream).
    Sample {
        #[arg(long)]
        input: PathBuf,
        /// The input is one key per line rather than `key<TAB>frequency`.
        #[arg(long)]
        elements: bool,
        #[command(flatten)]
        scheme: SchemeArgs,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Privately reports keys, or keys with frequency tokens, of a sample.
    Sanitize {
        #[arg(long, value_enum)]
        mode: SanitizeMode,
        /// The sample, `key<TAB>frequency`.
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        privacy: PrivacyArgs,
        #[command(flatten)]
        scheme: SchemeArgs,
        /// Table range; required for `--mode freqs`.
        #[arg(long)]
        max_freq: Option<usize>,
        #[arg(long, value_enum, default_value = "auto")]
        table: TableChoice,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Estimates `Σ L(x) g(w_x)` from a sanitized sample.
    Estimate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "pws")]
        source: Source,
        #[command(flatten)]
        privacy: PrivacyArgs,
        #[command(flatten)]
        scheme: SchemeArgs,
        /// Table range used at sanitization.
        #[arg(long)]
        max_freq: Option<usize>,
        #[arg(long, value_enum, default_value = "auto")]
        table: TableChoice,
        #[arg(long, value_enum, default_value = "mle")]
        estimator: EstimatorChoice,
        /// Statistic g: identity or power:P.
        #[arg(long, default_value = "identity")]
        g: String,
        /// Selected keys, one per line, optionally `key<TAB>weight`; all keys
        /// with weight 1 when omitted.
        #[arg(long)]
        predicate: Option<PathBuf>,
    },
    /// Stability-based histogram baseline, unsampled or sampled.
    Baseline {
        #[arg(value_enum)]
        which: Baseline,
        /// Aggregated histogram `key<TAB>frequency`.
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        privacy: PrivacyArgs,
        #[command(flatten)]
        scheme: SchemeArgs,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Exact experiments, configured by `key=value` settings.
    Analyze {
        #[arg(value_enum)]
        which: Analysis,
        /// File of `key = value` lines; `#` starts a comment.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Extra `key=value` settings, applied after the config file.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Checks an exported `i,j,pi_ij` table for (ε, δ)-DP.
    VerifyDp {
        #[arg(long)]
        table: PathBuf,
        #[command(flatten)]
        privacy: PrivacyArgs,
    },
}

enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Failure::Usage(msg.into()))
}

// Parameter values supplied on the command line are usage errors.
fn flag<T>(r: crate::Result<T>) -> CliResult<T> {
    r.map_err(|e| Failure::Usage(e.to_string()))
}

fn parse_fn(s: &str) -> CliResult<FrequencyFn> {
    match s {
        "identity" | "id" => Ok(FrequencyFn::Identity),
        _ => match s.strip_prefix("power:").map(f64::from_str) {
            Some(Ok(p)) if p.is_finite() && p >= 0.0 => Ok(FrequencyFn::Power(p)),
            _ => usage(format!("unknown function `{s}`; expected identity or power:P")),
        },
    }
}

impl PrivacyArgs {
    fn params(&self) -> CliResult<PrivacyParams> {
        flag(PrivacyParams::new(self.epsilon, self.delta))
    }
}

fn build_scheme(kind: &str, tau: Option<f64>, weight: &str) -> CliResult<SamplingScheme> {
    let kind = match kind {
        "none" => {
            if tau.is_some() {
                return usage("--tau has no effect with scheme none");
            }
            return Ok(SamplingScheme::none());
        }
        "ppswor" => SchemeKind::Ppswor,
        "pps" => SchemeKind::Pps,
        other => return usage(format!("unknown scheme `{other}`; expected none, ppswor or pps")),
    };
    let Some(tau) = tau else {
        return usage("sampling schemes need --tau");
    };
    flag(SamplingScheme::threshold(kind, parse_fn(weight)?, tau))
}

impl SchemeArgs {
    fn scheme(&self) -> CliResult<SamplingScheme> {
        build_scheme(&self.scheme, self.tau, &self.weight)
    }
}

fn build_table(
    choice: TableChoice,
    params: &PrivacyParams,
    scheme: &SamplingScheme,
    max_freq: usize,
) -> crate::Result<SanitizerTable> {
    match choice {
        TableChoice::Auto => default_table(params, scheme, max_freq),
        TableChoice::Discrete => Ok(compute_pij(params, scheme, max_freq)),
        TableChoice::Intervals => Ok(compute_pdfs(params, scheme, max_freq)?.discretize()),
    }
}

fn out(path: &Option<PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(io::output(path.as_deref())?)
}

fn create(path: &Path) -> CliResult<Box<dyn Write>> {
    Ok(io::output(Some(path))?)
}

fn read_sample(path: &Path, scheme: SamplingScheme) -> CliResult<WeightedSample> {
    let pairs = io::read_sample_pairs(io::input(path)?)?;
    Ok(WeightedSample::new(pairs, scheme)?)
}

fn weight_fn(predicate: &Option<PathBuf>) -> CliResult<Box<dyn Fn(&str) -> Option<f64>>> {
    Ok(match predicate {
        None => Box::new(|_| Some(1.0)),
        Some(p) => {
            let weights: BTreeMap<String, f64> = io::read_weights(io::input(p)?)?.into_iter().collect();
            Box::new(move |k| weights.get(k).copied())
        }
    })
}

// `key = value` settings from a config file and `--set` flags.
struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    fn load(config: &Option<PathBuf>, set: &[String]) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        let mut add = |line: &str, origin: &str| -> CliResult<()> {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                return Ok(());
            }
            match line.split_once('=') {
                Some((k, v)) => {
                    values.insert(k.trim().replace('-', "_"), v.trim().to_owned());
                    Ok(())
                }
                None => usage(format!("{origin}: expected `key=value`, got `{line}`")),
            }
        };
        if let Some(path) = config {
            let text = fs::read_to_string(path).map_err(|e| Failure::Data(e.into()))?;
            for (n, line) in text.lines().enumerate() {
                add(line, &format!("{}:{}", path.display(), n + 1))?;
            }
        }
        for s in set {
            add(s, "--set")?;
        }
        Ok(Self { values })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.values.remove(key)
    }

    fn num<T: FromStr>(&mut self, key: &str, default: T) -> CliResult<T> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v.parse().or_else(|_| usage(format!("setting {key}: `{v}` is not a valid number"))),
        }
    }

    fn list<T: FromStr>(&mut self, key: &str) -> CliResult<Option<Vec<T>>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|x| x.trim().parse().or_else(|_| usage(format!("setting {key}: bad entry `{x}`"))))
                .collect::<CliResult<Vec<T>>>()
                .map(Some),
        }
    }

    fn names<T: FromStr<Err = Error>>(&mut self, key: &str) -> CliResult<Option<Vec<T>>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v.split(',').map(|x| flag(x.trim().parse())).collect::<CliResult<_>>().map(Some),
        }
    }

    fn finish(self) -> CliResult<()> {
        match self.values.keys().next() {
            Some(k) => usage(format!("unknown setting `{k}`")),
            None => Ok(()),
        }
    }

    fn params(&mut self) -> CliResult<PrivacyParams> {
        let eps = self.num("epsilon", 0.1)?;
        let delta = self.num("delta", 0.01)?;
        flag(PrivacyParams::new(eps, delta))
    }

    fn scheme(&mut self, default_kind: &str) -> CliResult<SamplingScheme> {
        let kind = self.take("scheme").unwrap_or_else(|| default_kind.to_owned());
        let tau = match self.take("tau") {
            None if kind != "none" => Some(1.0),
            None => None,
            Some(v) => Some(v.parse().or_else(|_| usage(format!("setting tau: `{v}` is not a number")))?),
        };
        let weight = self.take("weight").unwrap_or_else(|| "identity".into());
        build_scheme(&kind, tau, &weight)
    }

    // without a `distribution` setting the default kind (if any) still picks
    // up its shape settings
    fn distribution(&mut self, default_kind: Option<&str>) -> CliResult<Option<DistributionSpec>> {
        let Some(kind) = self.take("distribution").or_else(|| default_kind.map(str::to_owned)) else {
            return Ok(None);
        };
        Ok(Some(match kind.as_str() {
            "zipf" => DistributionSpec::Zipf {
                n_keys: self.num("n_keys", 100_000)?,
                alpha: self.num("alpha", 1.0)?,
                w_max: self.num("w_max", 10_000)?,
            },
            "uniform" => DistributionSpec::Uniform {
                n_keys: self.num("n_keys", 200_000)?,
                lo: self.num("lo", 1)?,
                hi: self.num("hi", 200)?,
            },
            "file" => match self.take("path") {
                Some(p) => DistributionSpec::File(p.into()),
                None => return usage("distribution=file needs path"),
            },
            other => return usage(format!("unknown distribution `{other}`")),
        }))
    }
}

fn sweep_config(which: Analysis, s: &mut Settings) -> CliResult<SweepConfig> {
    let grid_kind = s
        .take("grid")
        .unwrap_or_else(|| if which == Analysis::Nrmse { "tau" } else { "delta" }.into());
    let grid = match grid_kind.as_str() {
        "delta" => Grid::Delta(s.list("values")?.unwrap_or_else(default_delta_grid)),
        "tau" => Grid::Tau(s.list("values")?.unwrap_or_else(default_tau_grid)),
        "frequency" => Grid::Frequency(s.list("values")?.unwrap_or_else(|| (1..=200).collect())),
        other => return usage(format!("unknown grid `{other}`")),
    };
    if which == Analysis::Nrmse && !matches!(grid, Grid::Tau(_)) {
        return usage("analyze nrmse sweeps tau");
    }
    let default_scheme = if matches!(grid, Grid::Tau(_)) { "pps" } else { "none" };
    let default_metric = match (which, &grid) {
        (Analysis::Nrmse, _) => vec![Metric::Nrmse],
        (_, Grid::Frequency(_)) => vec![Metric::ReportProb],
        _ => vec![Metric::ReportedFraction],
    };
    let default_dist = if which == Analysis::Nrmse { "uniform" } else { "zipf" };
    let cfg = SweepConfig {
        distribution: s.distribution(Some(default_dist))?.expect("a default kind is given"),
        methods: s.names("methods")?.unwrap_or_else(|| Method::ALL.to_vec()),
        metrics: s.names("metrics")?.unwrap_or(default_metric),
        params: s.params()?,
        scheme: s.scheme(default_scheme)?,
        g: parse_fn(&s.take("g").unwrap_or_else(|| "identity".into()))?,
        grid,
    };
    if which == Analysis::Nrmse && cfg.metrics != [Metric::Nrmse] {
        return usage("analyze nrmse only reports the nrmse metric");
    }
    Ok(cfg)
}

fn analyze(which: Analysis, config: &Option<PathBuf>, set: &[String], output: &Option<PathBuf>) -> CliResult<()> {
    let mut s = Settings::load(config, set)?;
    match which {
        Analysis::Sweep | Analysis::Nrmse => {
            let cfg = sweep_config(which, &mut s)?;
            s.finish()?;
            let rows = if which == Analysis::Nrmse {
                nrmse_experiment(&cfg)?
            } else {
                run_sweep(&cfg)?
            };
            io::write_sweep_csv(out(output)?, &rows)?;
        }
        Analysis::Concordance => {
            let params = s.params()?;
            let scheme = s.scheme("none")?;
            let max: u64 = s.num("max_freq", 100)?;
            let law_name = s.take("law").unwrap_or_else(|| "pws".into());
            let table_choice = match s.take("table").as_deref() {
                None | Some("auto") => TableChoice::Auto,
                Some("discrete") => TableChoice::Discrete,
                Some("intervals") => TableChoice::Intervals,
                Some(other) => return usage(format!("unknown table `{other}`")),
            };
            let dist = s.distribution(None)?;
            s.finish()?;
            let law: Box<dyn OutputLaw> = match law_name.as_str() {
                "pws" => Box::new(build_table(table_choice, &params, &scheme, max as usize)?),
                "sbh" => {
                    if scheme.kind() != SchemeKind::None {
                        return usage("the sbh law is unsampled; drop the scheme");
                    }
                    Box::new(SbhLaw::new(SbhConfig::new(params)))
                }
                other => return usage(format!("unknown law `{other}`; expected pws or sbh")),
            };
            let pairs = concordance_pairs(law.as_ref(), max)?;
            io::write_concordance_csv(out(output)?, &pairs)?;
            if let Some(d) = dist {
                let hist = d.histogram()?;
                if hist.max_frequency().unwrap_or(0) > max {
                    return Err(Error::FrequencyOutOfRange {
                        frequency: hist.max_frequency().unwrap_or(0),
                        max_frequency: max,
                    }
                    .into());
                }
                let tau = expected_kendall_tau(&hist, law.as_ref())?;
                let shown = tau.map_or_else(|| "undefined".into(), io::fmt_real);
                eprintln!("kendall_tau_a,{shown}");
            }
        }
    }
    Ok(())
}

fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Pi {
            privacy,
            scheme,
            max_freq,
            output,
        } => {
            let rv = compute_pi(&privacy.params()?, &scheme.scheme()?, max_freq);
            io::write_pi_csv(out(&output)?, &rv)?;
        }
        Command::Pij {
            privacy,
            scheme,
            max_freq,
            output,
        } => {
            let t = compute_pij(&privacy.params()?, &scheme.scheme()?, max_freq);
            io::write_pij_csv(out(&output)?, &t)?;
        }
        Command::Pdfs {
            privacy,
            scheme,
            max_freq,
            output,
            segments,
            atoms,
            intervals,
        } => {
            let family = compute_pdfs(&privacy.params()?, &scheme.scheme()?, max_freq)?;
            let table = family.discretize();
            if let Some(p) = &segments {
                io::write_pdf_segments_csv(create(p)?, &family)?;
            }
            if let Some(p) = &atoms {
                io::write_pdf_atoms_csv(create(p)?, &family)?;
            }
            if let Some(p) = &intervals {
                io::write_token_intervals_csv(create(p)?, &table)?;
            }
            io::write_pij_csv(out(&output)?, &table)?;
        }
        Command::Sample {
            input,
            elements,
            scheme,
            seed,
            output,
        } => {
            let scheme = scheme.scheme()?;
            let data = if elements {
                io::read_elements(io::input(&input)?)?
            } else {
                io::read_histogram(io::input(&input)?)?
            };
            io::write_sample(out(&output)?, &draw_sample(&data, &scheme, seed))?;
        }
        Command::Sanitize {
            mode,
            input,
            privacy,
            scheme,
            max_freq,
            table,
            seed,
            output,
        } => {
            let params = privacy.params()?;
            let scheme = scheme.scheme()?;
            if mode == SanitizeMode::Freqs && max_freq.is_none() {
                return usage("--mode freqs needs --max-freq");
            }
            if mode == SanitizeMode::Keys && table != TableChoice::Auto {
                return usage("--table only applies to --mode freqs");
            }
            let sample = read_sample(&input, scheme.clone())?;
            let w = out(&output)?;
            if sample.is_empty() {
                return Ok(());
            }
            match mode {
                SanitizeMode::Keys => {
                    // π_i depends on i alone, so the range may follow the data
                    let top = sample.pairs().iter().map(|p| p.1).max().unwrap_or(0) as usize;
                    let rv = compute_pi(&params, &scheme, max_freq.unwrap_or(top).max(top));
                    io::write_keys(w, &sanitize_keys(&sample, &rv, seed)?)?;
                }
                SanitizeMode::Freqs => {
                    let t = build_table(table, &params, &scheme, max_freq.unwrap())?;
                    io::write_tokens(w, &sanitize_frequencies(&sample, &t, seed)?)?;
                }
            }
        }
        Command::Estimate {
            input,
            source,
            privacy,
            scheme,
            max_freq,
            table,
            estimator,
            g,
            predicate,
        } => {
            let params = privacy.params()?;
            let scheme = scheme.scheme()?;
            let g = parse_fn(&g)?;
            let weight = weight_fn(&predicate)?;
            let value = match source {
                Source::Pws => {
                    let Some(m) = max_freq else {
                        return usage("--source pws needs the --max-freq used at sanitization");
                    };
                    let t = build_table(table, &params, &scheme, m)?;
                    let coeffs = match estimator {
                        EstimatorChoice::Mle => mle_coeffs(&t, &compute_pi(&params, &scheme, m), &g)?,
                        EstimatorChoice::Unbiased => unbiased_coeffs(&t, &g)?,
                    };
                    let tokens = io::read_tokens(io::input(&input)?)?;
                    crate::estimators::estimate_statistic(tokens.iter().map(|(k, j)| (k.as_str(), *j)), &coeffs, weight)?
                }
                Source::SampledSbh => {
                    let pairs = io::read_real_pairs(io::input(&input)?)?;
                    sbh_estimate(&RealSample::new(pairs, scheme), &g, weight)?
                }
            };
            let mut w = out(&None)?;
            writeln!(w, "{}", io::fmt_real(value)).map_err(Error::from)?;
            w.flush().map_err(Error::from)?;
        }
        Command::Baseline {
            which,
            input,
            privacy,
            scheme,
            seed,
            output,
        } => {
            let config = SbhConfig::new(privacy.params()?);
            let scheme = scheme.scheme()?;
            let data = io::read_histogram(io::input(&input)?)?;
            let pairs = match which {
                Baseline::Sbh => {
                    if scheme.kind() != SchemeKind::None {
                        return usage("baseline sbh does not sample; use sampled-sbh");
                    }
                    sbh_sanitize(&data, &config, seed)
                }
                Baseline::SampledSbh => sampled_sbh(&data, &config, &scheme, seed)?.pairs().to_vec(),
            };
            io::write_real_pairs(out(&output)?, &pairs)?;
        }
        Command::Analyze {
            which,
            config,
            set,
            output,
        } => analyze(which, &config, &set, &output)?,
        Command::VerifyDp { table, privacy } => {
            let params = privacy.params()?;
            let t = io::read_pij_file(&table)?;
            let report = t.verify_dp(&params);
            let (from, to) = report.worst.map_or((0, 0), |w| (w.from, w.to));
            if !report.satisfied {
                return Err(Error::DpViolation {
                    from,
                    to,
                    divergence: report.worst_divergence(),
                    epsilon: params.epsilon(),
                    delta: params.delta(),
                }
                .into());
            }
            let mut w = out(&None)?;
            writeln!(w, "satisfied,worst_from,worst_to,divergence,delta").map_err(Error::from)?;
            writeln!(
                w,
                "true,{from},{to},{},{}",
                io::fmt_real(report.worst_divergence()),
                io::fmt_real(params.delta())
            )
            .map_err(Error::from)?;
            w.flush().map_err(Error::from)?;
        }
    }
    Ok(())
}

/// Runs the CLI on `args` (program name first) and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let msg = e.to_string();
            let text: Vec<&str> = msg
                .lines()
                .take_while(|l| !l.starts_with("Usage:"))
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .collect();
            eprintln!("error[usage]: {}", text.join(" ").trim_start_matches("error: "));
            return 2;
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error[usage]: --threads must be at least 1");
            return 2;
        }
        // a pool may already exist when run() is called twice in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error[usage]: {msg}");
            2
        }
        Err(Failure::Data(e)) => {
            eprintln!("error[{}]: {}", e.kind(), e.to_string().replace('\n', " "));
            1
        }
    }
}
