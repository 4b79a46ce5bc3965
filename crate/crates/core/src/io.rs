//! File formats shared by the command-line tool and the tests: CSV tables
//! with a strict schema, JSON sidecars and manifests, and plot scripts.

use std::fs;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::continuation::{Branch, SpecialPoint, Termination};
use crate::error::{Result, RingError};

/// A parsed numeric CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

fn schema_error(msg: String) -> RingError {
    RingError::InvalidParameter(format!("csv schema: {msg}"))
}

/// Parses a CSV whose cells are all finite numbers. Column names must be
/// unique identifiers and, when `expected` is given, equal to it.
pub fn check_csv<R: BufRead>(reader: R, expected: Option<&[&str]>) -> Result<CsvTable> {
    let mut lines = reader.lines();
    let header = lines.next().ok_or_else(|| schema_error("empty file".into()))??;
    let columns: Vec<String> = header.split(',').map(str::to_string).collect();
    for (i, c) in columns.iter().enumerate() {
        let ok = !c.is_empty() && c.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_');
        if !ok {
            return Err(schema_error(format!("bad column name {c:?}")));
        }
        if columns[..i].contains(c) {
            return Err(schema_error(format!("duplicate column {c}")));
        }
    }
    if let Some(exp) = expected {
        if columns.iter().map(String::as_str).ne(exp.iter().copied()) {
            return Err(schema_error(format!("columns {columns:?}, expected {exp:?}")));
        }
    }
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != columns.len() {
            return Err(schema_error(format!("row {} has {} cells", n + 1, cells.len())));
        }
        let row = cells
            .iter()
            .map(|c| match c.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(schema_error(format!("row {}: {c:?} is not a finite number", n + 1))),
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(CsvTable { columns, rows })
}

pub fn check_csv_file(path: &Path, expected: Option<&[&str]>) -> Result<CsvTable> {
    check_csv(std::io::BufReader::new(fs::File::open(path)?), expected)
}

/// Writes a CSV through `fill`, creating parent directories.
pub fn write_with<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    fill(&mut w)?;
    w.flush()?;
    Ok(())
}

/// CSV with the given header and numeric rows.
pub fn write_table(path: &Path, columns: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    write_with(path, |w| {
        writeln!(w, "{}", columns.join(","))?;
        for r in rows {
            let cells: Vec<String> = r.iter().map(f64::to_string).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    })
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(value)?;
    write_with(path, |w| writeln!(w, "{s}"))
}

/// Branch metadata stored next to its CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchSidecar {
    pub param_names: Vec<String>,
    pub state_names: Vec<String>,
    pub n_points: usize,
    pub special_points: Vec<SpecialPoint>,
    pub termination: Termination,
}

impl From<&Branch> for BranchSidecar {
    fn from(b: &Branch) -> Self {
        Self {
            param_names: b.param_names.clone(),
            state_names: b.state_names.clone(),
            n_points: b.points.len(),
            special_points: b.special_points.clone(),
            termination: b.termination.clone(),
        }
    }
}

/// Writes `<stem>.csv` and `<stem>.json` in `dir`.
pub fn write_branch(dir: &Path, stem: &str, branch: &Branch) -> Result<()> {
    write_with(&dir.join(format!("{stem}.csv")), |w| branch.write_csv(w))?;
    write_json(&dir.join(format!("{stem}.json")), &BranchSidecar::from(branch))
}

/// Record of one command-line run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    /// Fully resolved configuration; re-running it reproduces the outputs.
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
    pub status: RunStatus,
    #[serde(default)]
    pub diagnostics: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    InvalidConfig,
    NumericalFailure,
}

/// One panel of a line plot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlotSpec {
    pub csv: String,
    pub x: String,
    pub ys: Vec<String>,
    pub title: String,
    #[serde(default)]
    pub logx: bool,
}

/// Standalone matplotlib script drawing each spec from its CSV (paths
/// relative to the script) into `<output>.png`.
pub fn plot_script(specs: &[PlotSpec], output: &str) -> String {
    let mut s = String::from(
        "import csv\nimport os\nimport matplotlib\nmatplotlib.use(\"Agg\")\nimport matplotlib.pyplot as plt\n\n\
here = os.path.dirname(os.path.abspath(__file__))\n\n\
def load(name):\n    with open(os.path.join(here, name)) as f:\n        rows = list(csv.DictReader(f))\n    \
return {k: [float(r[k]) for r in rows] for k in rows[0]} if rows else {}\n\n",
    );
    s.push_str(&format!(
        "fig, axes = plt.subplots({}, 1, figsize=(7, {}), squeeze=False)\n",
        specs.len().max(1),
        3 * specs.len().max(1)
    ));
    for (i, p) in specs.iter().enumerate() {
        s.push_str(&format!("d = load({:?})\nax = axes[{i}][0]\n", p.csv));
        for y in &p.ys {
            s.push_str(&format!("ax.plot(d[{:?}], d[{y:?}], label={y:?})\n", p.x));
        }
        if p.logx {
            s.push_str("ax.set_xscale(\"log\")\n");
        }
        s.push_str(&format!(
            "ax.set_xlabel({:?})\nax.set_title({:?})\nax.legend()\n",
            p.x, p.title
        ));
    }
    s.push_str(&format!(
        "fig.tight_layout()\nfig.savefig(os.path.join(here, {:?}))\n",
        format!("{output}.png")
    ));
    s
}
