//! Stream files (JSON lines), model parameter files (JSON) and CSV tables.
//!
//! Output files may begin with lines starting with `#`; these carry a JSON
//! provenance header and are skipped when reading.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use nhp_core::ctlstm::Gate;
use nhp_core::{
    CtLstmParams, Dataset, Event, EventStream, HawkesParams, Model, SelfModulatingParams,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

#[derive(Serialize, Deserialize)]
struct EventRecord {
    k: u32,
    t: f64,
}

#[derive(Serialize, Deserialize)]
struct StreamRecord {
    #[serde(rename = "T")]
    horizon: f64,
    #[serde(rename = "K")]
    num_types: usize,
    events: Vec<EventRecord>,
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Parses a JSON-lines stream file. Every line must declare the same `K`.
pub fn parse_streams(text: &str) -> CliResult<Dataset> {
    let mut streams = Vec::new();
    let mut num_types: Option<usize> = None;
    for (stream_index, (line_no, line)) in data_lines(text).enumerate() {
        let rec: StreamRecord = serde_json::from_str(line).map_err(|e| CliError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        match num_types {
            None => num_types = Some(rec.num_types),
            Some(k) if k != rec.num_types => {
                return Err(nhp_core::Error::TypeCountMismatch {
                    stream: stream_index,
                    expected: k,
                    found: rec.num_types,
                }
                .into())
            }
            Some(_) => {}
        }
        let events = rec.events.into_iter().map(|e| Event::new(e.k, e.t)).collect();
        streams.push((events, rec.horizon, rec.num_types));
    }
    let k = num_types.unwrap_or(1);
    let validated = streams
        .into_iter()
        .enumerate()
        .map(|(s, (events, horizon, k))| {
            EventStream::validated(events, horizon, k, s)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Dataset::new(validated, k)?)
}

pub fn read_streams(path: &Path) -> CliResult<Dataset> {
    parse_streams(&read_text(path)?)
}

pub fn stream_line(stream: &EventStream, num_types: usize) -> String {
    let rec = StreamRecord {
        horizon: stream.horizon(),
        num_types,
        events: stream
            .events()
            .iter()
            .map(|e| EventRecord { k: e.k.0, t: e.t })
            .collect(),
    };
    serde_json::to_string(&rec).expect("stream records always serialize")
}

/// Writes one stream per line, after an optional `#` header line.
pub fn write_streams<W: Write>(out: &mut W, dataset: &Dataset, header: Option<&Value>) -> CliResult<()> {
    if let Some(h) = header {
        writeln!(out, "# {h}")?;
    }
    for s in dataset.streams() {
        writeln!(out, "{}", stream_line(s, dataset.num_types()))?;
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct GateBlock {
    #[serde(rename = "W")]
    w: Vec<f64>,
    #[serde(rename = "U")]
    u: Vec<f64>,
    d: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Gates {
    input: GateBlock,
    forget: GateBlock,
    candidate: GateBlock,
    output: GateBlock,
    target_input: GateBlock,
    target_forget: GateBlock,
    decay: GateBlock,
}

impl Gates {
    fn get(&self, g: Gate) -> &GateBlock {
        match g {
            Gate::Input => &self.input,
            Gate::Forget => &self.forget,
            Gate::Candidate => &self.candidate,
            Gate::Output => &self.output,
            Gate::TargetInput => &self.target_input,
            Gate::TargetForget => &self.target_forget,
            Gate::Decay => &self.decay,
        }
    }
}

/// On-disk parameter layout; matrices are flat and row-major.
#[derive(Serialize, Deserialize)]
#[serde(tag = "kind")]
enum ModelFile {
    #[serde(rename = "sempp")]
    Hawkes {
        #[serde(rename = "K")]
        num_types: usize,
        mu: Vec<f64>,
        alpha: Vec<f64>,
        delta: Vec<f64>,
    },
    #[serde(rename = "dsmpp")]
    SelfModulating {
        #[serde(rename = "K")]
        num_types: usize,
        mu: Vec<f64>,
        alpha: Vec<f64>,
        delta: Vec<f64>,
        s: Vec<f64>,
    },
    #[serde(rename = "nsmmpp")]
    Neural {
        #[serde(rename = "K")]
        num_types: usize,
        #[serde(rename = "D")]
        hidden: usize,
        embed: Vec<f64>,
        gates: Gates,
        w: Vec<f64>,
        s: Vec<f64>,
        decay_scale: f64,
    },
}

fn block(p: &CtLstmParams, g: Gate) -> GateBlock {
    GateBlock {
        w: p.w(g).to_vec(),
        u: p.u(g).to_vec(),
        d: p.bias(g).to_vec(),
    }
}

pub fn model_to_json(model: &Model) -> Value {
    let file = match model {
        Model::Hawkes(p) => ModelFile::Hawkes {
            num_types: p.mu().len(),
            mu: p.mu().to_vec(),
            alpha: p.alpha().to_vec(),
            delta: p.delta().to_vec(),
        },
        Model::SelfModulating(p) => ModelFile::SelfModulating {
            num_types: p.mu().len(),
            mu: p.mu().to_vec(),
            alpha: p.alpha().to_vec(),
            delta: p.delta().to_vec(),
            s: p.scale().to_vec(),
        },
        Model::Neural(p) => ModelFile::Neural {
            num_types: p.num_types(),
            hidden: p.hidden(),
            embed: p.embed().to_vec(),
            gates: Gates {
                input: block(p, Gate::Input),
                forget: block(p, Gate::Forget),
                candidate: block(p, Gate::Candidate),
                output: block(p, Gate::Output),
                target_input: block(p, Gate::TargetInput),
                target_forget: block(p, Gate::TargetForget),
                decay: block(p, Gate::Decay),
            },
            w: p.proj().to_vec(),
            s: p.scale().to_vec(),
            decay_scale: p.decay_scale(),
        },
    };
    serde_json::to_value(file).expect("parameter files always serialize")
}

fn check_len(name: &'static str, v: &[f64], n: usize) -> CliResult<()> {
    if v.len() != n {
        return Err(CliError::Format(format!("`{name}` has {} entries, expected {n}", v.len())));
    }
    Ok(())
}

pub fn model_from_json(value: Value) -> CliResult<Model> {
    let file: ModelFile = serde_json::from_value(value).map_err(|e| CliError::Format(e.to_string()))?;
    Ok(match file {
        ModelFile::Hawkes {
            num_types,
            mu,
            alpha,
            delta,
        } => {
            check_len("mu", &mu, num_types)?;
            Model::Hawkes(HawkesParams::new(mu, alpha, delta)?)
        }
        ModelFile::SelfModulating {
            num_types,
            mu,
            alpha,
            delta,
            s,
        } => {
            check_len("mu", &mu, num_types)?;
            Model::SelfModulating(SelfModulatingParams::new(mu, alpha, delta, s)?)
        }
        ModelFile::Neural {
            num_types,
            hidden,
            embed,
            gates,
            w,
            s,
            decay_scale,
        } => {
            let d = hidden;
            let mut theta = Vec::with_capacity(nhp_core::ctlstm::param_count(num_types, d));
            check_len("embed", &embed, (num_types + 1) * d)?;
            theta.extend(embed);
            for g in Gate::ALL {
                let b = gates.get(g);
                check_len("W", &b.w, d * d)?;
                check_len("U", &b.u, d * d)?;
                check_len("d", &b.d, d)?;
                theta.extend(&b.w);
                theta.extend(&b.u);
                theta.extend(&b.d);
            }
            check_len("w", &w, num_types * d)?;
            check_len("s", &s, num_types)?;
            theta.extend(w);
            theta.extend(s);
            Model::Neural(CtLstmParams::from_vec(num_types, d, theta, decay_scale)?)
        }
    })
}

pub fn read_model(path: &Path) -> CliResult<Model> {
    let text = read_text(path)?;
    let body: String = text
        .lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n");
    let value: Value = serde_json::from_str(&body).map_err(|e| CliError::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    model_from_json(value)
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Creates `path` (and its parent directories) for buffered writing.
pub fn create(path: &Path) -> CliResult<BufWriter<fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Io {
            path: dir.display().to_string(),
            source: e,
        })?;
    }
    let f = fs::File::create(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    Ok(BufWriter::new(f))
}

/// Writes pretty JSON followed by a newline.
pub fn write_json(path: &Path, value: &Value) -> CliResult<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::Format(e.to_string()))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

/// Writes a CSV table with a header row, after an optional `#` header line.
pub fn write_csv<R: Serialize>(path: &Path, rows: &[R], header: Option<&Value>) -> CliResult<()> {
    let mut out = create(path)?;
    if let Some(h) = header {
        writeln!(out, "# {h}")?;
    }
    {
        let mut w = csv::Writer::from_writer(&mut out);
        for r in rows {
            w.serialize(r).map_err(|e| CliError::Format(e.to_string()))?;
        }
        w.flush()?;
    }
    out.flush()?;
    Ok(())
}
