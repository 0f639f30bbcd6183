use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adasketch::estimators::{sketch_report, GreenExtractor};
use adasketch::montecarlo::Execution;
use adasketch::validate::{run_suite, Suite, ValidateConfig};
use adasketch::{AdaptiveSampler, BitModel, Color};
use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

/// Adaptive Sampling sketches: distinct counts, color proportions and
/// multiplicities in one pass, plus validation against the analytic model.
#[derive(Parser)]
#[command(name = "adasketch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the number of distinct lines of FILE (stdin when absent).
    Estimate {
        file: Option<PathBuf>,
        /// Cache capacity b.
        #[arg(long, default_value_t = 64)]
        bucket: u32,
        /// Probability that a hash bit is 0.
        #[arg(long, default_value_t = 0.5)]
        q: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// 1-based field holding the color label; the key is the rest of the line.
        #[arg(long)]
        color_field: Option<usize>,
        #[arg(long, default_value_t = ',')]
        delimiter: char,
        /// Known multiplicity of green keys; enables early extraction.
        #[arg(long)]
        green_mult: Option<u64>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Write the final sketch snapshot here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a validation suite: distribution, moments, colors, multiplicity,
    /// blackgreen, asymmetric or all.
    Validate {
        suite: String,
        /// Trial count for every simulation (default: per criterion).
        #[arg(long)]
        trials: Option<u64>,
        /// Scale applied to every pinned tolerance.
        #[arg(long, default_value_t = 1.0)]
        tolerance: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Bit bias of the asymmetric suite.
        #[arg(long, default_value_t = 0.7)]
        q: f64,
        /// Run trials on one thread.
        #[arg(long)]
        sequential: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Merge snapshots and print the merged estimate.
    Merge {
        #[arg(required = true)]
        snapshots: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Estimate { file, bucket, q, seed, color_field, delimiter, green_mult, format, out } => {
            let opts = EstimateOpts { bucket, q, seed, color_field, delimiter, green_mult };
            estimate(file.as_deref(), &opts, format, out.as_deref())
        }
        Command::Validate { suite, trials, tolerance, seed, q, sequential, format } => {
            validate(&suite, trials, tolerance, seed, q, sequential, format)
        }
        Command::Merge { snapshots, out, format } => merge(&snapshots, out.as_deref(), format),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

struct EstimateOpts {
    bucket: u32,
    q: f64,
    seed: u64,
    color_field: Option<usize>,
    delimiter: char,
    green_mult: Option<u64>,
}

/// Splits a record into key bytes and color label.
fn split_record<'a>(
    line: &'a [u8],
    field: usize,
    delim: &[u8],
    key: &mut Vec<u8>,
) -> Option<&'a [u8]> {
    let mut label = None;
    key.clear();
    let mut start = 0;
    let mut index = 1;
    let mut first = true;
    loop {
        let end = find(&line[start..], delim).map(|i| start + i);
        let piece = &line[start..end.unwrap_or(line.len())];
        if index == field {
            label = Some(piece);
        } else {
            if !first {
                key.extend_from_slice(delim);
            }
            first = false;
            key.extend_from_slice(piece);
        }
        match end {
            Some(e) => start = e + delim.len(),
            None => break,
        }
        index += 1;
    }
    label
}

fn find(hay: &[u8], needle: &[u8]) -> Option<usize> {
    hay.windows(needle.len()).position(|w| w == needle)
}

fn estimate(file: Option<&Path>, o: &EstimateOpts, format: Format, out: Option<&Path>) -> Result<ExitCode> {
    if o.color_field == Some(0) {
        bail!("--color-field is 1-based");
    }
    let model = BitModel::new(o.q, o.seed)?;
    let mut sampler = AdaptiveSampler::new(o.bucket, model)?;
    let mut green = o.green_mult.map(GreenExtractor::new).transpose()?;
    let input: Box<dyn Read> = match file {
        Some(p) => Box::new(File::open(p).with_context(|| format!("cannot open {}", p.display()))?),
        None => Box::new(io::stdin().lock()),
    };
    let mut reader = BufReader::with_capacity(1 << 16, input);
    let mut delim = [0u8; 4];
    let delim = o.delimiter.encode_utf8(&mut delim).as_bytes().to_vec();
    let mut labels: HashMap<Vec<u8>, u32> = HashMap::new();
    let mut names: Vec<String> = Vec::new();
    let (mut line, mut key) = (Vec::new(), Vec::new());
    let (mut lineno, mut skipped) = (0u64, 0u64);
    loop {
        line.clear();
        if reader.read_until(b'\n', &mut line).context("reading input")? == 0 {
            break;
        }
        lineno += 1;
        if line.last() == Some(&b'\n') {
            line.pop();
        }
        let (bytes, color) = match o.color_field {
            None => (&line[..], None),
            Some(field) => {
                let label = split_record(&line, field, &delim, &mut key)
                    .ok_or_else(|| anyhow!("line {lineno}: no field {field}"))?;
                let tag = match labels.get(label) {
                    Some(&t) => t,
                    None => {
                        let t = names.len() as u32;
                        labels.insert(label.to_vec(), t);
                        names.push(String::from_utf8_lossy(label).into_owned());
                        t
                    }
                };
                (&key[..], Some(Color::new(tag)?))
            }
        };
        if bytes.is_empty() {
            skipped += 1;
            continue;
        }
        match green.as_mut() {
            Some(g) => g.insert(&mut sampler, bytes, color)?,
            None => sampler.insert(bytes, color)?,
        }
    }
    if skipped > 0 {
        eprintln!("warning: skipped {skipped} empty key(s)");
    }
    if let Some(path) = out {
        std::fs::write(path, sampler.snapshot()).with_context(|| format!("cannot write {}", path.display()))?;
    }
    let mut value = serde_json::to_value(sketch_report(&sampler, green.as_ref()))?;
    let obj = value.as_object_mut().expect("report is an object");
    obj.insert("seed".into(), json!(o.seed));
    obj.insert("lines".into(), json!(lineno));
    if o.color_field.is_some() {
        for section in ["colors", "multiplicities"] {
            if let Some(Value::Array(rows)) = obj.get_mut(section) {
                for row in rows {
                    let tag = row.get("color").and_then(Value::as_u64);
                    if let (Some(t), Some(m)) = (tag, row.as_object_mut()) {
                        m.insert("label".into(), json!(names[t as usize]));
                    }
                }
            }
        }
    }
    emit(&value, format)?;
    Ok(ExitCode::SUCCESS)
}

fn validate(
    suite: &str,
    trials: Option<u64>,
    tolerance: f64,
    seed: u64,
    q: f64,
    sequential: bool,
    format: Format,
) -> Result<ExitCode> {
    let suite: Suite = suite.parse()?;
    if tolerance.is_nan() || tolerance < 0.0 {
        bail!("--tolerance must be >= 0");
    }
    let cfg = ValidateConfig {
        seed,
        tolerance_scale: tolerance,
        trials,
        asymmetric_q: q,
        execution: if sequential { Execution::Sequential } else { Execution::default() },
    };
    let report = run_suite(suite, &cfg)?;
    let text = match format {
        Format::Json => report.to_json() + "\n",
        Format::Csv => report.to_csv(),
        Format::Text => report.to_text(),
    };
    io::stdout().write_all(text.as_bytes())?;
    Ok(if report.all_pass() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn merge(paths: &[PathBuf], out: Option<&Path>, format: Format) -> Result<ExitCode> {
    let mut merged: Option<AdaptiveSampler> = None;
    for p in paths {
        let bytes = std::fs::read(p).with_context(|| format!("cannot read {}", p.display()))?;
        let s = AdaptiveSampler::restore(&bytes).with_context(|| format!("{}", p.display()))?;
        match merged.as_mut() {
            None => merged = Some(s),
            Some(m) => m.merge_from(&s).with_context(|| format!("merging {}", p.display()))?,
        }
    }
    let merged = merged.expect("clap requires one snapshot");
    if let Some(path) = out {
        std::fs::write(path, merged.snapshot()).with_context(|| format!("cannot write {}", path.display()))?;
    }
    let mut value = serde_json::to_value(sketch_report(&merged, None))?;
    value
        .as_object_mut()
        .expect("report is an object")
        .insert("seed".into(), json!(merged.model().seed()));
    emit(&value, format)?;
    Ok(ExitCode::SUCCESS)
}

/// Flattens nested objects and arrays into dotted paths.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => m.iter().for_each(|(k, v)| flatten(&join(k), v, out)),
        Value::Array(a) => a.iter().enumerate().for_each(|(i, v)| flatten(&join(&i.to_string()), v, out)),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn emit(value: &Value, format: Format) -> Result<()> {
    let mut stdout = io::stdout().lock();
    match format {
        Format::Json => writeln!(stdout, "{}", serde_json::to_string_pretty(value)?)?,
        Format::Csv | Format::Text => {
            let mut rows = Vec::new();
            flatten("", value, &mut rows);
            if let Format::Csv = format {
                let mut w = csv::Writer::from_writer(stdout);
                w.write_record(["field", "value"])?;
                for (k, v) in rows {
                    w.write_record([k, v])?;
                }
                w.flush()?;
            } else {
                for (k, v) in rows {
                    writeln!(stdout, "{k}: {v}")?;
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn split(line: &str, field: usize) -> (String, Option<String>) {
        let mut key = Vec::new();
        let label = split_record(line.as_bytes(), field, b",", &mut key);
        (String::from_utf8(key).unwrap(), label.map(|l| String::from_utf8(l.to_vec()).unwrap()))
    }

    #[test]
    fn record_splitting() {
        assert_eq!(split("key,red", 2), ("key".into(), Some("red".into())));
        assert_eq!(split("red,key", 1), ("key".into(), Some("red".into())));
        assert_eq!(split("a,b,c", 2), ("a,c".into(), Some("b".into())));
        assert_eq!(split("a,,c", 1), (",c".into(), Some("a".into())));
        assert_eq!(split("key", 2), ("key".into(), None));
    }

    #[test]
    fn flattening() {
        let mut rows = Vec::new();
        flatten("", &json!({"a": 1, "b": [{"c": "x"}]}), &mut rows);
        assert_eq!(rows, vec![("a".into(), "1".into()), ("b.0.c".into(), "x".into())]);
    }
}
