//! Batch CLI over the sphex library: field dumps, excursion curves, variance
//! and reduction studies, Wigner couplings, bispectrum ensembles,
//! partial-sum draws, goodness-of-fit statistics, and normality checks.
//!
//! Exit codes: 0 success, 2 configuration error, 3 resource limit.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use sphex::error::Error;
use sphex::excursion::{empirical_measure, hermite_transform, variance_series};
use sphex::field::{sample_coefficients, synthesize};
use sphex::harness::{
    clt_check, gof_statistics, partial_sum_ensemble, partial_sum_process, run_ensemble, sub_seed,
    EnsembleConfig, StatKind, DEFAULT_BAND_LIMIT_FACTOR, DEFAULT_Q_MAX,
};
use sphex::sphere::build_quadrature;
use sphex::wigner::{legendre_moment, wigner3j, wigner3j_zero};

#[derive(Parser)]
#[command(name = "sphex", version, about = "Spherical eigenfunction excursion studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file; stdout when omitted
    #[arg(long)]
    out: Option<String>,
    /// Output format
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize one field and dump `theta,phi,weight,value` rows
    SampleField {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        l: u32,
        /// Grid band limit as a multiple of l
        #[arg(long, default_value_t = DEFAULT_BAND_LIMIT_FACTOR)]
        band_factor: u32,
        /// Destination for the dump (same as --out)
        #[arg(long, value_name = "PATH")]
        dump_field: Option<String>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Excursion curve `z,phi,G,S` of one replicate at its knots, or
    /// `l,q,value` Hermite transforms with --hermite-qs
    ExcursionCurve {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        l: u32,
        #[arg(long, default_value_t = DEFAULT_BAND_LIMIT_FACTOR)]
        band_factor: u32,
        /// Emit Hermite transforms for these orders instead of the curve
        #[arg(long, value_delimiter = ',')]
        hermite_qs: Vec<u32>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Monte Carlo variance of the empirical measure against the Hermite
    /// series oracle: `l,z,n,mc_var,series,tail_bound,ratio`
    VarianceStudy {
        #[arg(long)]
        seed: u64,
        /// Degrees: comma list or inclusive range `a..b[..step]`
        #[arg(long)]
        degrees: String,
        #[arg(long)]
        replicates: u32,
        /// Levels, comma separated
        #[arg(long, default_value = "-2,-1,0,1,2", allow_hyphen_values = true)]
        z: String,
        #[arg(long, default_value_t = DEFAULT_Q_MAX)]
        qmax: u32,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Reduction residual sup-norms per degree:
    /// `l,n,median_sup,mean_sup`
    ReductionStudy {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        degrees: String,
        #[arg(long)]
        replicates: u32,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Print one Wigner 3j value (zero orders when -m flags are omitted)
    Wigner {
        #[arg(long)]
        l1: u32,
        #[arg(long)]
        l2: u32,
        #[arg(long)]
        l3: u32,
        #[arg(long, allow_hyphen_values = true)]
        m1: Option<i64>,
        #[arg(long, allow_hyphen_values = true)]
        m2: Option<i64>,
        #[arg(long, allow_hyphen_values = true)]
        m3: Option<i64>,
    },
    /// Legendre power moment as a CSV row `l,q,value`
    Moments {
        #[arg(long)]
        l: u32,
        #[arg(long)]
        q: u32,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Normalized bispectrum ensemble: raw rows `l,replicate,seed,I`
    Bispectrum {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        l: u32,
        #[arg(long)]
        replicates: u32,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// One partial-sum sheet draw: `z,r,W,W_B`
    PartialSum {
        #[arg(long)]
        seed: u64,
        /// Number of degrees summed (the L in W_L)
        #[arg(long)]
        bigl: u32,
        #[arg(long, default_value = "-2,-1,0,1,2", allow_hyphen_values = true)]
        z: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Goodness-of-fit statistics over independent sheet draws:
    /// `draw,S_L,K_L`
    Gof {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        bigl: u32,
        #[arg(long)]
        replicates: u32,
        #[arg(long, default_value = "-2,-1,0,1,2", allow_hyphen_values = true)]
        z: String,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Kolmogorov distance of studentized sqrt(l) h_{l;2} to the Gaussian:
    /// `l,n,distance,degenerate`
    CltCheck {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        l: u32,
        #[arg(long)]
        replicates: u32,
        #[command(flatten)]
        output: OutputArgs,
    },
}

fn parse_degrees(text: &str) -> Result<Vec<u32>, Error> {
    let bad = |s: &str| Error::Config(format!("cannot parse degrees from '{s}'"));
    let text = text.trim();
    if let Some((a, rest)) = text.split_once("..") {
        let (b, step) = match rest.split_once("..") {
            Some((b, s)) => (b, s.parse::<u32>().map_err(|_| bad(text))?),
            None => (rest, 1),
        };
        let a: u32 = a.trim().parse().map_err(|_| bad(text))?;
        let b: u32 = b.trim().parse().map_err(|_| bad(text))?;
        if step == 0 || b < a {
            return Err(bad(text));
        }
        Ok((a..=b).step_by(step as usize).collect())
    } else {
        text.split(',')
            .map(|s| s.trim().parse::<u32>().map_err(|_| bad(text)))
            .collect()
    }
}

fn parse_levels(text: &str) -> Result<Vec<f64>, Error> {
    let levels: Result<Vec<f64>, _> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect();
    let levels = levels.map_err(|_| Error::Config(format!("cannot parse levels from '{text}'")))?;
    if levels.is_empty() || levels.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Config("levels must be nonempty and sorted".into()));
    }
    Ok(levels)
}

struct Sink {
    writer: Box<dyn Write>,
}

impl Sink {
    fn open(output: &OutputArgs) -> Result<Self, Error> {
        let writer: Box<dyn Write> = match &output.out {
            Some(path) => Box::new(BufWriter::new(File::create(path).map_err(|e| {
                Error::Config(format!("cannot open output file {path}: {e}"))
            })?)),
            None => Box::new(BufWriter::new(io::stdout())),
        };
        Ok(Sink { writer })
    }

    fn emit(
        &mut self,
        format: Format,
        config: serde_json::Value,
        header: &str,
        rows: &[Vec<serde_json::Value>],
    ) -> io::Result<()> {
        match format {
            Format::Csv => {
                writeln!(self.writer, "{header}")?;
                for row in rows {
                    let line: Vec<String> = row
                        .iter()
                        .map(|v| match v {
                            serde_json::Value::String(s) => s.clone(),
                            other => other.to_string(),
                        })
                        .collect();
                    writeln!(self.writer, "{}", line.join(","))?;
                }
            }
            Format::Json => {
                let columns: Vec<&str> = header.split(',').collect();
                let objects: Vec<serde_json::Value> = rows
                    .iter()
                    .map(|row| {
                        let mut map = serde_json::Map::new();
                        for (c, v) in columns.iter().zip(row) {
                            map.insert((*c).to_string(), v.clone());
                        }
                        serde_json::Value::Object(map)
                    })
                    .collect();
                let doc = json!({ "config": config, "rows": objects });
                writeln!(self.writer, "{}", serde_json::to_string_pretty(&doc)?)?;
            }
        }
        self.writer.flush()
    }
}

fn num(v: f64) -> serde_json::Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(v.to_string())
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::SampleField {
            seed,
            l,
            band_factor,
            dump_field,
            mut output,
        } => {
            if band_factor < 1 {
                return Err(Error::Config("band factor must be >= 1".into()));
            }
            if output.out.is_none() {
                output.out = dump_field;
            }
            let grid = Arc::new(build_quadrature(band_factor.saturating_mul(l))?);
            let field = synthesize(&sample_coefficients(l, seed), &grid)?;
            let rows: Vec<Vec<serde_json::Value>> = grid
                .points()
                .zip(field.values())
                .map(|(p, &v)| vec![num(p.theta), num(p.phi), num(p.weight), num(v)])
                .collect();
            let cfg = json!({"seed": seed, "l": l, "band_factor": band_factor});
            Sink::open(&output)?
                .emit(output.format, cfg, "theta,phi,weight,value", &rows)
                .map_err(|e| Error::Config(format!("write failed: {e}")))?;
        }
        Command::ExcursionCurve {
            seed,
            l,
            band_factor,
            hermite_qs,
            output,
        } => {
            if band_factor < 1 {
                return Err(Error::Config("band factor must be >= 1".into()));
            }
            let grid = Arc::new(build_quadrature(band_factor.saturating_mul(l))?);
            let field = synthesize(&sample_coefficients(l, seed), &grid)?;
            let cfg = json!({"seed": seed, "l": l, "band_factor": band_factor});
            let mut sink = Sink::open(&output)?;
            if hermite_qs.is_empty() {
                let h2 = hermite_transform(&field, 2).value;
                let curve = empirical_measure(&field);
                let rows: Vec<Vec<serde_json::Value>> = curve
                    .knots()
                    .iter()
                    .enumerate()
                    .map(|(i, &z)| {
                        vec![
                            num(z),
                            num(curve.value_at_knot(i)),
                            num(curve.process(z)),
                            num(curve.reduction_residual(h2, z)),
                        ]
                    })
                    .collect();
                sink.emit(output.format, cfg, "z,phi,G,S", &rows)
                    .map_err(|e| Error::Config(format!("write failed: {e}")))?;
            } else {
                let rows: Vec<Vec<serde_json::Value>> = hermite_qs
                    .iter()
                    .map(|&q| {
                        let h = hermite_transform(&field, q);
                        vec![json!(h.l), json!(h.q), num(h.value)]
                    })
                    .collect();
                sink.emit(output.format, cfg, "l,q,value", &rows)
                    .map_err(|e| Error::Config(format!("write failed: {e}")))?;
            }
        }
        Command::VarianceStudy {
            seed,
            degrees,
            replicates,
            z,
            qmax,
            workers,
            output,
        } => {
            let degrees = parse_degrees(&degrees)?;
            let z_levels = parse_levels(&z)?;
            let mut config = EnsembleConfig::new(seed, degrees.clone(), replicates);
            config.z_levels = z_levels.clone();
            config.q_max = qmax;
            config.workers = workers;
            config.statistics = vec![StatKind::MeasureAtLevels];
            let report = run_ensemble(&config)?;
            let mut rows = Vec::new();
            for &l in &degrees {
                for (iz, &zv) in z_levels.iter().enumerate() {
                    let column = &report.columns[iz];
                    let Some(summary) = report
                        .summaries
                        .iter()
                        .find(|s| s.l == l && &s.column == column)
                    else {
                        continue;
                    };
                    let Some(mc_var) = summary.stats.variance else {
                        continue;
                    };
                    let series = variance_series(l, zv, 2, qmax)?;
                    rows.push(vec![
                        json!(l),
                        num(zv),
                        json!(summary.stats.n),
                        num(mc_var),
                        num(series.value),
                        num(series.tail_bound),
                        num(mc_var / series.value),
                    ]);
                }
            }
            let cfg = serde_json::to_value(&report.config).unwrap_or_default();
            Sink::open(&output)?
                .emit(
                    output.format,
                    cfg,
                    "l,z,n,mc_var,series,tail_bound,ratio",
                    &rows,
                )
                .map_err(|e| Error::Config(format!("write failed: {e}")))?;
        }
        Command::ReductionStudy {
            seed,
            degrees,
            replicates,
            workers,
            output,
        } => {
            let degrees = parse_degrees(&degrees)?;
            let mut config = EnsembleConfig::new(seed, degrees.clone(), replicates);
            config.workers = workers;
            config.statistics = vec![StatKind::ReductionSup];
            let report = run_ensemble(&config)?;
            let mut rows = Vec::new();
            for &l in &degrees {
                let mut sups: Vec<f64> = report
                    .rows
                    .iter()
                    .filter(|r| r.l == l)
                    .map(|r| r.values[0])
                    .collect();
                if sups.is_empty() {
                    continue;
                }
                sups.sort_by(f64::total_cmp);
                let median = sups[sups.len() / 2];
                let mean = sups.iter().sum::<f64>() / sups.len() as f64;
                rows.push(vec![json!(l), json!(sups.len()), num(median), num(mean)]);
            }
            let cfg = serde_json::to_value(&report.config).unwrap_or_default();
            Sink::open(&output)?
                .emit(output.format, cfg, "l,n,median_sup,mean_sup", &rows)
                .map_err(|e| Error::Config(format!("write failed: {e}")))?;
        }
        Command::Wigner {
            l1,
            l2,
            l3,
            m1,
            m2,
            m3,
        } => {
            let value = match (m1, m2, m3) {
                (None, None, None) => wigner3j_zero(l1, l2, l3),
                (Some(m1), Some(m2), Some(m3)) => wigner3j(l1, l2, l3, m1, m2, m3),
                _ => {
                    return Err(Error::Config(
                        "give all of --m1 --m2 --m3 or none".into(),
                    ))
                }
            };
            println!("{value:.16e}");
        }
        Command::Moments { l, q, output } => {
            let value = legendre_moment(l, q)?;
            let rows = vec![vec![json!(l), json!(q), num(value)]];
            Sink::open(&output)?
                .emit(output.format, json!({"l": l, "q": q}), "l,q,value", &rows)
                .map_err(|e| Error::Config(format!("write failed: {e}")))?;
        }
        Command::Bispectrum {
            seed,
            l,
            replicates,
            workers,
            output,
        } => {
            let mut config = EnsembleConfig::new(seed, vec![l], replicates);
            config.workers = workers;
            config.statistics = vec![StatKind::Bispectrum];
            let report = run_ensemble(&config)?;
            let rows: Vec<Vec<serde_json::Value>> = report
                .rows
                .iter()
                .map(|r| {
                    vec![
                        json!(r.l),
                        json!(r.replicate),
                        json!(r.seed),
                        num(r.values[0]),
                    ]
                })
                .collect();
            let cfg = serde_json::to_value(&report.config).unwrap_or_default();
            Sink::open(&output)?
                .emit(output.format, cfg, "l,replicate,seed,I", &rows)
                .map_err(|e| Error::Config(format!("write failed: {e}")))?;
        }
        Command::PartialSum {
            seed,
            bigl,
            z,
            output,
        } => {
            if bigl < 1 {
                return Err(Error::Config("bigl must be >= 1".into()));
            }
            let z_levels = parse_levels(&z)?;
            let sample = partial_sum_process(seed, bigl, &z_levels)?;
            let mut rows = Vec::new();
            for (iz, &zv) in sample.z_levels.iter().enumerate() {
                for k in 1..=bigl as usize {
                    rows.push(vec![
                        num(zv),
                        num(k as f64 / f64::from(bigl)),
                        num(sample.values[iz][k - 1]),
                        num(sample.residual[iz][k - 1]),
                    ]);
                }
            }
            let cfg = json!({"seed": seed, "bigl": bigl, "z_levels": z_levels});
            Sink::open(&output)?
                .emit(output.format, cfg, "z,r,W,W_B", &rows)
                .map_err(|e| Error::Config(format!("write failed: {e}")))?;
        }
        Command::Gof {
            seed,
            bigl,
            replicates,
            z,
            workers,
            output,
        } => {
            if bigl < 1 {
                return Err(Error::Config("bigl must be >= 1".into()));
            }
            let z_levels = parse_levels(&z)?;
            let draws = partial_sum_ensemble(seed, bigl, &z_levels, replicates, workers)?;
            let rows: Vec<Vec<serde_json::Value>> = draws
                .iter()
                .enumerate()
                .map(|(i, d)| {
                    let (s, k) = gof_statistics(d);
                    vec![json!(i), num(s), num(k)]
                })
                .collect();
            let cfg = json!({
                "seed": seed, "bigl": bigl, "replicates": replicates,
                "z_levels": z_levels,
            });
            Sink::open(&output)?
                .emit(output.format, cfg, "draw,S_L,K_L", &rows)
                .map_err(|e| Error::Config(format!("write failed: {e}")))?;
        }
        Command::CltCheck {
            seed,
            l,
            replicates,
            output,
        } => {
            let samples: Vec<f64> = (0..replicates)
                .map(|rep| {
                    let coeffs = sample_coefficients(l, sub_seed(seed, u64::from(rep)));
                    f64::from(l).sqrt()
                        * sphex::excursion::hermite2_from_coefficients(&coeffs)
                })
                .collect();
            let check = clt_check(&samples)?;
            let rows = vec![vec![
                json!(l),
                json!(replicates),
                num(check.distance),
                json!(check.degenerate),
            ]];
            let cfg = json!({"seed": seed, "l": l, "replicates": replicates});
            Sink::open(&output)?
                .emit(output.format, cfg, "l,n,distance,degenerate", &rows)
                .map_err(|e| Error::Config(format!("write failed: {e}")))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Domain(_) => ExitCode::from(2),
                Error::Resource(_) | Error::BandLimit { .. } => ExitCode::from(3),
                _ => ExitCode::from(1),
            }
        }
    }
}
