use serde::Serialize;
use serde_json::Value;

use patcount::constants::ConstantsBlock;

use crate::Format;

/// Version of `schema/output.schema.json`.
pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Serialize)]
pub struct Envelope {
    /// Arguments after the program name.
    pub command: Vec<String>,
    pub version: &'static str,
    pub schema_version: &'static str,
    pub constants: ConstantsBlock,
    pub payload: Value,
    /// Wall-clock seconds.
    pub elapsed: f64,
}

impl Envelope {
    pub fn new(command: Vec<String>, payload: Value, elapsed: f64) -> Self {
        Self {
            command,
            version: env!("CARGO_PKG_VERSION"),
            schema_version: SCHEMA_VERSION,
            constants: ConstantsBlock::default(),
            payload,
            elapsed,
        }
    }
}

/// Rows for the CSV and plain renderings.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<I, S>(&mut self, row: I)
    where
        I: IntoIterator<Item = S>,
        S: ToString,
    {
        self.rows.push(row.into_iter().map(|c| c.to_string()).collect());
    }

    /// `path,value` rows from a JSON value, arrays indexed numerically.
    pub fn flatten(value: &Value) -> Self {
        let mut t = Table::new(&["field", "value"]);
        flatten_into(value, String::new(), &mut t);
        t
    }

    pub fn to_json(&self) -> Value {
        serde_json::json!({ "columns": self.columns, "rows": self.rows })
    }
}

fn flatten_into(value: &Value, path: String, t: &mut Table) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                flatten_into(v, p, t);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten_into(v, format!("{path}[{i}]"), t);
            }
        }
        Value::String(s) => t.push([path, s.clone()]),
        other => t.push([path, other.to_string()]),
    }
}

pub fn render(env: &Envelope, table: Option<&Table>, format: Format) -> Result<String, String> {
    match format {
        Format::Json => serde_json::to_string_pretty(env)
            .map(|s| s + "\n")
            .map_err(|e| e.to_string()),
        Format::Csv => {
            let mut out = String::new();
            out.push_str(&format!("# patcount {} schema {}\n", env.version, env.schema_version));
            out.push_str(&format!("# command: {}\n", env.command.join(" ")));
            for row in &Table::flatten(&serde_json::to_value(&env.constants).map_err(|e| e.to_string())?).rows {
                out.push_str(&format!("# constants.{} = {}\n", row[0], row[1]));
            }
            let owned;
            let t = match table {
                Some(t) => t,
                None => {
                    owned = Table::flatten(&env.payload);
                    &owned
                }
            };
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&t.columns).map_err(|e| e.to_string())?;
            for r in &t.rows {
                w.write_record(r).map_err(|e| e.to_string())?;
            }
            let bytes = w.into_inner().map_err(|e| e.to_string())?;
            out.push_str(&String::from_utf8(bytes).map_err(|e| e.to_string())?);
            Ok(out)
        }
        Format::Plain => {
            let mut out = String::new();
            out.push_str(&format!("patcount {}  {}\n", env.version, env.command.join(" ")));
            let c = &env.constants;
            out.push_str(&format!(
                "constants: growth_base {} tau_coeff {} exponent_d {} consecutive_log_coeff {}\n",
                c.growth_base, c.tau_coeff, c.exponent_d, c.consecutive_log_coeff
            ));
            let owned;
            let t = match table {
                Some(t) => t,
                None => {
                    owned = Table::flatten(&env.payload);
                    &owned
                }
            };
            let widths: Vec<usize> = (0..t.columns.len())
                .map(|i| {
                    t.rows
                        .iter()
                        .map(|r| r.get(i).map_or(0, |s| s.len()))
                        .chain([t.columns[i].len()])
                        .max()
                        .unwrap_or(0)
                })
                .collect();
            let line = |cells: &[String]| -> String {
                cells
                    .iter()
                    .zip(&widths)
                    .map(|(c, w)| format!("{c:<w$}"))
                    .collect::<Vec<_>>()
                    .join("  ")
                    .trim_end()
                    .to_string()
            };
            out.push_str(&line(&t.columns));
            out.push('\n');
            for r in &t.rows {
                out.push_str(&line(r));
                out.push('\n');
            }
            out.push_str(&format!("elapsed {:.3}s\n", env.elapsed));
            Ok(out)
        }
    }
}
