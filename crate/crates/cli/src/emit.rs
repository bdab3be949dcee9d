//! Artifact formatting: 17 significant digits everywhere, config embedded.

use std::fmt::Write as _;
use std::io::{self, Write as _};
use std::path::PathBuf;

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};
use serde_json::{Serializer, Value};

use crate::error::CliError;

/// `x` with 17 significant digits; non-finite values spelled out.
pub fn real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// serde_json formatter that prints floats with 17 significant digits.
struct Digits17<F>(F);

impl<F: Formatter> Formatter for Digits17<F> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(real(value).as_bytes())
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

fn to_text<F: Formatter>(v: &Value, f: F) -> String {
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, Digits17(f));
    v.serialize(&mut ser).expect("JSON values serialize");
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

pub fn pretty(v: &Value) -> String {
    to_text(v, PrettyFormatter::new())
}

pub fn compact(v: &Value) -> String {
    to_text(v, CompactFormatter)
}

/// A CSV table whose cells are already formatted.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    /// Extra `# ...` lines after the config line.
    pub notes: Vec<String>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Table {
        Table {
            header,
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push_reals(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|x| real(*x)).collect());
    }
}

/// Where artifacts go and the config stamped into each of them.
pub struct Sink {
    pub out_dir: Option<PathBuf>,
    pub config: Value,
}

impl Sink {
    fn write(&self, file: &str, text: &str, primary: bool) -> Result<(), CliError> {
        match &self.out_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                let path = dir.join(file);
                std::fs::write(&path, text)?;
                eprintln!("wrote {}", path.display());
            }
            None if primary => std::io::stdout().lock().write_all(text.as_bytes())?,
            None => {}
        }
        Ok(())
    }

    /// JSON artifact with a `config` member; printed when no `--out` is set
    /// and `primary` holds.
    pub fn json(&self, file: &str, mut body: Value, primary: bool) -> Result<(), CliError> {
        if let Value::Object(map) = &mut body {
            map.insert("config".into(), self.config.clone());
        }
        let mut text = pretty(&body);
        text.push('\n');
        self.write(file, &text, primary)
    }

    pub fn csv(&self, file: &str, table: &Table, primary: bool) -> Result<(), CliError> {
        let mut text = String::new();
        let _ = writeln!(text, "# config: {}", compact(&self.config));
        for n in &table.notes {
            let _ = writeln!(text, "# {n}");
        }
        let _ = writeln!(text, "{}", table.header.join(","));
        for r in &table.rows {
            let _ = writeln!(text, "{}", r.join(","));
        }
        self.write(file, &text, primary)
    }
}
