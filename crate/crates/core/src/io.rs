//! Network file readers and result writers.
//!
//! JSON networks look like
//!
//! ```json
//! {
//!   "bases": {"s_base_mva": 10.0, "v_base_kv": 12.47},
//!   "units": "pu",
//!   "buses": [{"id": "0", "p_gen": 0, "q_gen": 0, "p_dem": 0, "q_dem": 0, "root": true}],
//!   "branches": [{"from": "0", "to": "1", "r": 0.0296, "x": 0.0683}]
//! }
//! ```
//!
//! `bases` is optional, `units` defaults to `"pu"` and `root` to `false`.
//! The CSV variant is a directory holding `buses.csv` and `branches.csv` with
//! the same column names, plus an optional `bases.csv`
//! (`s_base_mva,v_base_kv[,units]`) that switches the network to physical units.

use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::network::{BranchRecord, BusRecord, NetworkInput, PerUnitBases, Units};
use crate::oracle::ResidualReport;
use crate::solver::SolveResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetworkFormat {
    Json,
    Csv,
}

impl NetworkFormat {
    /// `.json` files are JSON; directories and `.csv` files are CSV.
    pub fn detect(path: &Path) -> Option<Self> {
        if path.is_dir() {
            return Some(Self::Csv);
        }
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "json" => Some(Self::Json),
            "csv" => Some(Self::Csv),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Table,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngleUnit {
    Degrees,
    Radians,
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn parse_network_file(path: &Path, format: NetworkFormat) -> Result<NetworkInput> {
    match format {
        NetworkFormat::Json => parse_network_json(&read_to_string(path)?),
        NetworkFormat::Csv => {
            let dir: PathBuf = if path.is_dir() {
                path.to_path_buf()
            } else {
                path.parent().map(Path::to_path_buf).unwrap_or_default()
            };
            let open = |name: &str| {
                let p = dir.join(name);
                fs::File::open(&p).map_err(|source| Error::Io {
                    path: p.display().to_string(),
                    source,
                })
            };
            let buses = open("buses.csv")?;
            let branches = open("branches.csv")?;
            let bases = if dir.join("bases.csv").exists() {
                Some(open("bases.csv")?)
            } else {
                None
            };
            parse_network_csv(buses, branches, bases)
        }
    }
}

fn schema(msg: impl Into<String>) -> Error {
    Error::Schema(msg.into())
}

fn as_id(value: &Value) -> Option<String> {
    match value {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

/// Pull the named fields from an object, listing every missing one at once.
fn require<'a>(obj: &'a Map<String, Value>, fields: &[&str], what: &str) -> Result<Vec<&'a Value>> {
    let missing: Vec<&str> = fields
        .iter()
        .copied()
        .filter(|f| !obj.contains_key(*f))
        .collect();
    if !missing.is_empty() {
        return Err(schema(format!(
            "{what} is missing fields: {}",
            missing.join(", ")
        )));
    }
    Ok(fields.iter().map(|f| &obj[*f]).collect())
}

fn number(value: &Value, field: &str, what: &str) -> Result<f64> {
    value
        .as_f64()
        .ok_or_else(|| schema(format!("{what}: field `{field}` must be a number")))
}

pub fn parse_network_json(text: &str) -> Result<NetworkInput> {
    let doc: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        location: format!("line {}, column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    let top = doc
        .as_object()
        .ok_or_else(|| schema("top level must be an object"))?;

    let bases = match top.get("bases") {
        None | Some(Value::Null) => None,
        Some(Value::Object(b)) => {
            let v = require(b, &["s_base_mva", "v_base_kv"], "bases")?;
            Some(PerUnitBases {
                s_base: number(v[0], "s_base_mva", "bases")?,
                v_base: number(v[1], "v_base_kv", "bases")?,
            })
        }
        Some(_) => return Err(schema("`bases` must be an object")),
    };
    let units = match top.get("units") {
        None => Units::PerUnit,
        Some(v) => parse_units(v.as_str().unwrap_or_default())?,
    };

    let buses = match top.get("buses") {
        Some(Value::Array(a)) if !a.is_empty() => a,
        Some(Value::Array(_)) => return Err(schema("`buses` is empty")),
        _ => return Err(schema("missing `buses` array")),
    };
    let branches = match top.get("branches") {
        Some(Value::Array(a)) => a,
        _ => return Err(schema("missing `branches` array")),
    };

    let mut bus_records = Vec::with_capacity(buses.len());
    for (k, bus) in buses.iter().enumerate() {
        let what = format!("buses[{k}]");
        let obj = bus
            .as_object()
            .ok_or_else(|| schema(format!("{what} must be an object")))?;
        let v = require(obj, &["id", "p_gen", "q_gen", "p_dem", "q_dem"], &what)?;
        let id = as_id(v[0])
            .ok_or_else(|| schema(format!("{what}: `id` must be a string or number")))?;
        let is_root = match obj.get("root") {
            None | Some(Value::Null) => false,
            Some(Value::Bool(b)) => *b,
            Some(_) => return Err(schema(format!("{what}: `root` must be a boolean"))),
        };
        bus_records.push(BusRecord {
            id,
            p_gen: number(v[1], "p_gen", &what)?,
            q_gen: number(v[2], "q_gen", &what)?,
            p_dem: number(v[3], "p_dem", &what)?,
            q_dem: number(v[4], "q_dem", &what)?,
            is_root,
        });
    }

    let mut branch_records = Vec::with_capacity(branches.len());
    for (k, br) in branches.iter().enumerate() {
        let what = format!("branches[{k}]");
        let obj = br
            .as_object()
            .ok_or_else(|| schema(format!("{what} must be an object")))?;
        let v = require(obj, &["from", "to", "r", "x"], &what)?;
        let from = as_id(v[0])
            .ok_or_else(|| schema(format!("{what}: `from` must be a string or number")))?;
        let to = as_id(v[1])
            .ok_or_else(|| schema(format!("{what}: `to` must be a string or number")))?;
        branch_records.push(BranchRecord {
            from_bus: from,
            to_bus: to,
            r: number(v[2], "r", &what)?,
            x: number(v[3], "x", &what)?,
        });
    }

    finish(bus_records, branch_records, bases, units)
}

fn parse_units(s: &str) -> Result<Units> {
    match s {
        "pu" => Ok(Units::PerUnit),
        "physical" => Ok(Units::Physical),
        other => Err(schema(format!(
            "`units` must be \"pu\" or \"physical\", got {other:?}"
        ))),
    }
}

fn finish(
    buses: Vec<BusRecord>,
    branches: Vec<BranchRecord>,
    bases: Option<PerUnitBases>,
    units: Units,
) -> Result<NetworkInput> {
    let mut seen = std::collections::HashSet::new();
    for bus in &buses {
        if !seen.insert(bus.id.as_str()) {
            return Err(Error::DuplicateBusId(bus.id.clone()));
        }
    }
    for (k, br) in branches.iter().enumerate() {
        for id in [&br.from_bus, &br.to_bus] {
            if !seen.contains(id.as_str()) {
                return Err(schema(format!(
                    "branches[{k}] references unknown bus `{id}`"
                )));
            }
        }
    }
    Ok(NetworkInput {
        buses,
        branches,
        bases,
        units,
    })
}

struct CsvTable {
    name: &'static str,
    header: Vec<String>,
    rows: Vec<(u64, csv::StringRecord)>,
}

impl CsvTable {
    fn read(name: &'static str, reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let parse_err = |e: csv::Error| Error::Parse {
            location: match e.position() {
                Some(p) => format!("{name} line {}", p.line()),
                None => name.to_string(),
            },
            message: e.to_string(),
        };
        let header = rdr
            .headers()
            .map_err(parse_err)?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(parse_err)?;
            let line = rec.position().map_or(0, |p| p.line());
            rows.push((line, rec));
        }
        Ok(Self { name, header, rows })
    }

    fn columns(&self, required: &[&str]) -> Result<Vec<usize>> {
        let missing: Vec<&str> = required
            .iter()
            .copied()
            .filter(|c| !self.header.iter().any(|h| h == c))
            .collect();
        if !missing.is_empty() {
            return Err(schema(format!(
                "{} is missing columns: {}",
                self.name,
                missing.join(", ")
            )));
        }
        Ok(required
            .iter()
            .map(|c| self.header.iter().position(|h| h == c).unwrap())
            .collect())
    }

    fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    fn number(&self, line: u64, rec: &csv::StringRecord, col: usize) -> Result<f64> {
        let raw = rec.get(col).unwrap_or("");
        raw.parse().map_err(|_| Error::Parse {
            location: format!("{} line {line}, field `{}`", self.name, self.header[col]),
            message: format!("expected a number, got {raw:?}"),
        })
    }
}

/// Read a network from CSV sources. With a `bases` table the network is in
/// physical units unless that table says otherwise.
pub fn parse_network_csv(
    buses: impl Read,
    branches: impl Read,
    bases: Option<impl Read>,
) -> Result<NetworkInput> {
    let bus_table = CsvTable::read("buses.csv", buses)?;
    let cols = bus_table.columns(&["id", "p_gen", "q_gen", "p_dem", "q_dem"])?;
    let root_col = bus_table.column("root");
    let mut bus_records = Vec::with_capacity(bus_table.rows.len());
    for (line, rec) in &bus_table.rows {
        let is_root = match root_col.map(|c| rec.get(c).unwrap_or("").to_ascii_lowercase()) {
            None => false,
            Some(s) => match s.as_str() {
                "" | "false" | "0" | "no" => false,
                "true" | "1" | "yes" => true,
                other => {
                    return Err(Error::Parse {
                        location: format!("buses.csv line {line}, field `root`"),
                        message: format!("expected a boolean, got {other:?}"),
                    })
                }
            },
        };
        bus_records.push(BusRecord {
            id: rec.get(cols[0]).unwrap_or("").to_string(),
            p_gen: bus_table.number(*line, rec, cols[1])?,
            q_gen: bus_table.number(*line, rec, cols[2])?,
            p_dem: bus_table.number(*line, rec, cols[3])?,
            q_dem: bus_table.number(*line, rec, cols[4])?,
            is_root,
        });
    }
    if bus_records.is_empty() {
        return Err(schema("buses.csv has no rows"));
    }

    let branch_table = CsvTable::read("branches.csv", branches)?;
    let cols = branch_table.columns(&["from", "to", "r", "x"])?;
    let mut branch_records = Vec::with_capacity(branch_table.rows.len());
    for (line, rec) in &branch_table.rows {
        branch_records.push(BranchRecord {
            from_bus: rec.get(cols[0]).unwrap_or("").to_string(),
            to_bus: rec.get(cols[1]).unwrap_or("").to_string(),
            r: branch_table.number(*line, rec, cols[2])?,
            x: branch_table.number(*line, rec, cols[3])?,
        });
    }

    let (bases, units) = match bases {
        None => (None, Units::PerUnit),
        Some(reader) => {
            let table = CsvTable::read("bases.csv", reader)?;
            let cols = table.columns(&["s_base_mva", "v_base_kv"])?;
            let (line, rec) = table
                .rows
                .first()
                .ok_or_else(|| schema("bases.csv has no rows"))?;
            let units = match table.column("units").and_then(|c| rec.get(c)) {
                None | Some("") => Units::Physical,
                Some(u) => parse_units(u)?,
            };
            let bases = PerUnitBases {
                s_base: table.number(*line, rec, cols[0])?,
                v_base: table.number(*line, rec, cols[1])?,
            };
            (Some(bases), units)
        }
    };

    finish(bus_records, branch_records, bases, units)
}

/// Fixed-decimal formatting that never prints a negative zero.
fn fixed(value: f64, decimals: usize) -> String {
    let s = format!("{value:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

pub fn render_result(result: &SolveResult, format: OutputFormat) -> String {
    match format {
        OutputFormat::Table => render_table(result, AngleUnit::Degrees),
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(result).expect("result is plain data");
            s.push('\n');
            s
        }
    }
}

/// Per-node `|V|` with 4 decimals and angle with 2 decimals (degrees) or
/// 4 decimals (radians), followed by iteration count, loss and source power.
pub fn render_table(result: &SolveResult, angle: AngleUnit) -> String {
    let width = result
        .voltages
        .iter()
        .map(|v| v.id.chars().count())
        .max()
        .unwrap_or(0)
        .max(3);
    let (label, decimals) = match angle {
        AngleUnit::Degrees => ("angle [deg]", 2),
        AngleUnit::Radians => ("angle [rad]", 4),
    };
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:>9}  {:>11}", "bus", "|V| [pu]", label);
    for v in &result.voltages {
        let a = match angle {
            AngleUnit::Degrees => v.angle_deg,
            AngleUnit::Radians => v.angle_deg.to_radians(),
        };
        let _ = writeln!(
            out,
            "{:<width$}  {:>9}  {:>11}",
            v.id,
            fixed(v.magnitude, 4),
            fixed(a, decimals)
        );
    }
    let _ = writeln!(out, "iterations: {}", result.iterations);
    let _ = writeln!(
        out,
        "total loss: {} {} j{} pu",
        fixed(result.total_loss.re, 6),
        if result.total_loss.im < 0.0 { "-" } else { "+" },
        fixed(result.total_loss.im.abs(), 6)
    );
    let _ = writeln!(
        out,
        "source power: {} {} j{} pu",
        fixed(result.source_power.re, 6),
        if result.source_power.im < 0.0 {
            "-"
        } else {
            "+"
        },
        fixed(result.source_power.im.abs(), 6)
    );
    out
}

pub fn parse_result_json(text: &str) -> Result<SolveResult> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        location: format!("line {}, column {}", e.line(), e.column()),
        message: e.to_string(),
    })
}

pub fn render_residuals(report: &ResidualReport) -> String {
    format!(
        "max KCL residual: {:.3e}\nmax KVL residual: {:.3e}\npower mismatch: {:.3e}\n",
        report.max_kcl_residual, report.max_kvl_residual, report.power_mismatch
    )
}
