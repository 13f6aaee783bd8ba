//! CSV schemas for the input panels, the default history, the portfolio and
//! firm cash flows.
//!
//! Numeric columns that carry a physical unit declare it in the header, e.g.
//! `output_value[MEUR]` or `firm_emissions[ktCO2e]`. Readers convert to base
//! units (EUR, tCO2e, hours). Writers always emit base units, so a write/read
//! cycle reproduces every value bit for bit.
//!
//! Readers collect every violation they find before failing.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use climcredit_core::calibration::{split_indirect_emissions, EmissionsPanel, SectorPanel};
use climcredit_core::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    Money,
    Emissions,
    Hours,
    /// Dimensionless or a count; the header must not carry a unit.
    Plain,
}

impl Unit {
    pub fn scale(self, label: &str) -> Option<f64> {
        let table: &[(&str, f64)] = match self {
            Unit::Money => &[("EUR", 1.0), ("kEUR", 1e3), ("MEUR", 1e6), ("bnEUR", 1e9)],
            Unit::Emissions => &[("tCO2e", 1.0), ("ktCO2e", 1e3), ("MtCO2e", 1e6)],
            Unit::Hours => &[("h", 1.0), ("kh", 1e3), ("Mh", 1e6)],
            Unit::Plain => &[],
        };
        table.iter().find(|(l, _)| *l == label).map(|(_, s)| *s)
    }

    pub fn base(self) -> Option<&'static str> {
        match self {
            Unit::Money => Some("EUR"),
            Unit::Emissions => Some("tCO2e"),
            Unit::Hours => Some("h"),
            Unit::Plain => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ViolationKind {
    Schema,
    Unit,
    Coverage,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::Schema => "schema",
            ViolationKind::Unit => "unit",
            ViolationKind::Coverage => "coverage",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub file: String,
    pub message: String,
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read {file}: {source}")]
    Io {
        file: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{}", render(.0))]
    Invalid(Vec<Violation>),
}

impl IngestError {
    pub fn violations(&self) -> &[Violation] {
        match self {
            IngestError::Invalid(v) => v,
            IngestError::Io { .. } => &[],
        }
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations().iter().any(|v| v.kind == kind)
    }
}

fn render(v: &[Violation]) -> String {
    let mut s = format!("{} input violation(s)", v.len());
    for x in v {
        s.push_str(&format!("\n  {} error in {}: {}", x.kind, x.file, x.message));
    }
    s
}

/// Accumulates violations across files.
#[derive(Debug, Default)]
pub struct Violations(pub Vec<Violation>);

impl Violations {
    fn push(&mut self, kind: ViolationKind, file: &str, message: impl Into<String>) {
        self.0.push(Violation {
            kind,
            file: file.to_string(),
            message: message.into(),
        });
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_result<T>(self, value: T) -> Result<T, IngestError> {
        if self.0.is_empty() {
            Ok(value)
        } else {
            Err(IngestError::Invalid(self.0))
        }
    }
}

struct ColSpec {
    name: &'static str,
    unit: Unit,
    required: bool,
}

const fn col(name: &'static str, unit: Unit, required: bool) -> ColSpec {
    ColSpec { name, unit, required }
}

struct Table {
    file: String,
    cols: HashMap<&'static str, (usize, f64)>,
    rows: Vec<csv::StringRecord>,
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn split_header(h: &str) -> (&str, Option<&str>) {
    let h = h.trim();
    match (h.find('['), h.ends_with(']')) {
        (Some(k), true) => (h[..k].trim(), Some(&h[k + 1..h.len() - 1])),
        _ => (h, None),
    }
}

fn read_table(path: &Path, specs: &[ColSpec], v: &mut Violations) -> Result<Option<Table>, IngestError> {
    let file = file_name(path);
    let io = |source| IngestError::Io {
        file: path.display().to_string(),
        source,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| io(csv_to_io(e)))?;
    let headers = rdr.headers().map_err(|e| io(csv_to_io(e)))?.clone();
    let mut cols = HashMap::new();
    let before = v.0.len();
    for (k, h) in headers.iter().enumerate() {
        let (name, unit) = split_header(h);
        let Some(spec) = specs.iter().find(|s| s.name == name) else {
            v.push(ViolationKind::Schema, &file, format!("unexpected column '{h}'"));
            continue;
        };
        if cols.contains_key(spec.name) {
            v.push(ViolationKind::Schema, &file, format!("duplicate column '{name}'"));
            continue;
        }
        let scale = match (spec.unit, unit) {
            (Unit::Plain, None) => 1.0,
            (Unit::Plain, Some(u)) => {
                v.push(ViolationKind::Unit, &file, format!("column '{name}' is dimensionless but declares unit '{u}'"));
                continue;
            }
            (u, None) => {
                v.push(
                    ViolationKind::Unit,
                    &file,
                    format!("column '{name}' must declare a unit, e.g. '{name}[{}]'", u.base().unwrap_or("")),
                );
                continue;
            }
            (u, Some(label)) => match u.scale(label) {
                Some(s) => s,
                None => {
                    v.push(ViolationKind::Unit, &file, format!("column '{name}' has unknown unit '{label}'"));
                    continue;
                }
            },
        };
        cols.insert(spec.name, (k, scale));
    }
    for s in specs.iter().filter(|s| s.required) {
        if !cols.contains_key(s.name) && !headers.iter().any(|h| split_header(h).0 == s.name) {
            v.push(ViolationKind::Schema, &file, format!("missing column '{}'", s.name));
        }
    }
    let mut rows = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        match rec {
            Ok(r) if r.len() == headers.len() => rows.push(r),
            Ok(r) => v.push(
                ViolationKind::Schema,
                &file,
                format!("row {} has {} fields, expected {}", k + 2, r.len(), headers.len()),
            ),
            Err(e) => v.push(ViolationKind::Schema, &file, format!("row {}: {e}", k + 2)),
        }
    }
    if v.0.len() > before {
        return Ok(None);
    }
    Ok(Some(Table { file, cols, rows }))
}

fn csv_to_io(e: csv::Error) -> std::io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e,
        other => std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{other:?}")),
    }
}

impl Table {
    fn has(&self, name: &str) -> bool {
        self.cols.contains_key(name)
    }

    fn text<'a>(&self, row: &'a csv::StringRecord, name: &str) -> &'a str {
        self.cols.get(name).and_then(|(k, _)| row.get(*k)).unwrap_or("")
    }

    /// Scaled numeric cell; `Ok(None)` for a blank cell.
    fn num(&self, row: &csv::StringRecord, name: &str) -> Result<Option<f64>, String> {
        let Some((k, scale)) = self.cols.get(name) else {
            return Ok(None);
        };
        let s = row.get(*k).unwrap_or("");
        if s.is_empty() {
            return Ok(None);
        }
        s.parse::<f64>()
            .map(|x| Some(if *scale == 1.0 { x } else { x * scale }))
            .map_err(|_| format!("'{s}' in column '{name}' is not a number"))
    }

    fn year(&self, row: &csv::StringRecord, line: usize, v: &mut Violations) -> Option<i32> {
        let s = self.text(row, "year");
        match s.parse::<i32>() {
            Ok(y) => Some(y),
            Err(_) => {
                v.push(ViolationKind::Schema, &self.file, format!("row {line}: year '{s}' is not an integer"));
                None
            }
        }
    }

    fn count(&self, row: &csv::StringRecord, name: &str, line: usize, v: &mut Violations) -> Option<u64> {
        let s = self.text(row, name);
        match s.parse::<u64>() {
            Ok(x) => Some(x),
            Err(_) => {
                v.push(
                    ViolationKind::Schema,
                    &self.file,
                    format!("row {line}: {name} '{s}' is not a nonnegative integer"),
                );
                None
            }
        }
    }

    /// A required nonnegative finite cell, reported against `(year, key)`.
    fn nonneg(&self, row: &csv::StringRecord, name: &str, at: &str, v: &mut Violations) -> Option<f64> {
        match self.num(row, name) {
            Err(e) => {
                v.push(ViolationKind::Schema, &self.file, format!("{at}: {e}"));
                None
            }
            Ok(None) => {
                v.push(ViolationKind::Coverage, &self.file, format!("{at}: missing {name}"));
                None
            }
            Ok(Some(x)) if !(x >= 0.0 && x.is_finite()) => {
                v.push(ViolationKind::Coverage, &self.file, format!("{at}: {name} = {x} must be finite and >= 0"));
                None
            }
            Ok(Some(x)) => Some(x),
        }
    }
}

fn label_index(labels: &[String], s: &str) -> Option<usize> {
    labels.iter().position(|l| l == s)
}

/// Sector series plus the optional price index used to deflate output values.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorData {
    /// Labels in order of first appearance in the sector panel.
    pub sectors: Vec<String>,
    pub panel: SectorPanel,
    /// `prices[y][i]`, when the panel carries a `price_index` column.
    pub prices: Option<Vec<Vec<f64>>>,
}

impl SectorData {
    pub fn dim(&self) -> usize {
        self.sectors.len()
    }
}

const PANEL_COLS: &[ColSpec] = &[
    col("year", Unit::Plain, true),
    col("sector", Unit::Plain, true),
    col("output_value", Unit::Money, true),
    col("consumption_value", Unit::Money, true),
    col("labor_hours", Unit::Hours, true),
    col("compensation", Unit::Money, true),
    col("price_index", Unit::Plain, false),
];

const FLOW_COLS: &[ColSpec] = &[
    col("year", Unit::Plain, true),
    col("input_sector", Unit::Plain, true),
    col("output_sector", Unit::Plain, true),
    col("value", Unit::Money, true),
];

/// Reads the sector panel and the intermediary flow table.
pub fn read_sector_data(panel_path: &Path, flows_path: &Path, v: &mut Violations) -> Result<Option<SectorData>, IngestError> {
    let Some(t) = read_table(panel_path, PANEL_COLS, v)? else {
        let _ = read_table(flows_path, FLOW_COLS, v)?;
        return Ok(None);
    };
    let mut sectors: Vec<String> = Vec::new();
    let mut years: Vec<i32> = Vec::new();
    for row in &t.rows {
        let s = t.text(row, "sector");
        if !s.is_empty() && label_index(&sectors, s).is_none() {
            sectors.push(s.to_string());
        }
        if let Ok(y) = t.text(row, "year").parse::<i32>() {
            if !years.contains(&y) {
                years.push(y);
            }
        }
    }
    years.sort_unstable();
    let (ny, n) = (years.len(), sectors.len());
    if n == 0 || ny == 0 {
        v.push(ViolationKind::Coverage, &t.file, "panel has no rows");
        return Ok(None);
    }
    let blank = || vec![vec![f64::NAN; n]; ny];
    let (mut out, mut cons, mut hours, mut comp, mut price) = (blank(), blank(), blank(), blank(), blank());
    let mut seen = vec![vec![false; n]; ny];
    let has_price = t.has("price_index");
    for (k, row) in t.rows.iter().enumerate() {
        let line = k + 2;
        let Some(year) = t.year(row, line, v) else { continue };
        let s = t.text(row, "sector");
        let Some(i) = label_index(&sectors, s) else {
            v.push(ViolationKind::Schema, &t.file, format!("row {line}: empty sector label"));
            continue;
        };
        let y = years.binary_search(&year).unwrap_or(0);
        let at = format!("({year}, {s})");
        if seen[y][i] {
            v.push(ViolationKind::Schema, &t.file, format!("{at}: duplicate row"));
            continue;
        }
        seen[y][i] = true;
        for (name, dst) in [
            ("output_value", &mut out),
            ("consumption_value", &mut cons),
            ("labor_hours", &mut hours),
            ("compensation", &mut comp),
        ] {
            if let Some(x) = t.nonneg(row, name, &at, v) {
                dst[y][i] = x;
            }
        }
        if has_price {
            match t.num(row, "price_index") {
                Ok(Some(p)) if p > 0.0 && p.is_finite() => price[y][i] = p,
                Ok(Some(p)) => v.push(ViolationKind::Coverage, &t.file, format!("{at}: price_index = {p} must be > 0")),
                Ok(None) => v.push(ViolationKind::Coverage, &t.file, format!("{at}: missing price_index")),
                Err(e) => v.push(ViolationKind::Schema, &t.file, format!("{at}: {e}")),
            }
        }
    }
    for (y, row) in seen.iter().enumerate() {
        for (i, ok) in row.iter().enumerate() {
            if !ok {
                v.push(
                    ViolationKind::Coverage,
                    &t.file,
                    format!("({}, {}): missing sector-year cell", years[y], sectors[i]),
                );
            }
        }
    }
    let flows = read_flows(flows_path, &sectors, &years, v)?;
    let Some(flows) = flows else { return Ok(None) };
    Ok(Some(SectorData {
        sectors,
        panel: SectorPanel {
            years,
            output_value: out,
            consumption_value: cons,
            labor_hours: hours,
            compensation: comp,
            flows,
        },
        prices: has_price.then_some(price),
    }))
}

/// Reads a `(year, input_sector, output_sector)` keyed table into one
/// `I × I` matrix per year of `years`, storage `(input, output)`.
fn read_pair_table(
    path: &Path,
    specs: &[ColSpec],
    value_col: &str,
    sectors: &[String],
    years: &[i32],
    v: &mut Violations,
) -> Result<Option<Vec<Matrix>>, IngestError> {
    let Some(t) = read_table(path, specs, v)? else { return Ok(None) };
    let n = sectors.len();
    let mut mats = vec![Matrix::from_element(n, n, f64::NAN); years.len()];
    let mut seen = vec![vec![false; n * n]; years.len()];
    let before = v.0.len();
    for (k, row) in t.rows.iter().enumerate() {
        let line = k + 2;
        let Some(year) = t.year(row, line, v) else { continue };
        let (a, b) = (t.text(row, "input_sector"), t.text(row, "output_sector"));
        let (Some(j), Some(i)) = (label_index(sectors, a), label_index(sectors, b)) else {
            v.push(ViolationKind::Schema, &t.file, format!("row {line}: unknown sector in '{a}' -> '{b}'"));
            continue;
        };
        let Ok(y) = years.binary_search(&year) else {
            v.push(ViolationKind::Coverage, &t.file, format!("row {line}: year {year} is not in the panel"));
            continue;
        };
        let at = format!("({year}, {a} -> {b})");
        if seen[y][j * n + i] {
            v.push(ViolationKind::Schema, &t.file, format!("{at}: duplicate row"));
            continue;
        }
        seen[y][j * n + i] = true;
        if let Some(x) = t.nonneg(row, value_col, &at, v) {
            mats[y][(j, i)] = x;
        }
    }
    for (y, s) in seen.iter().enumerate() {
        for (c, ok) in s.iter().enumerate() {
            if !ok {
                v.push(
                    ViolationKind::Coverage,
                    &t.file,
                    format!("({}, {} -> {}): missing cell", years[y], sectors[c / n], sectors[c % n]),
                );
            }
        }
    }
    Ok((v.0.len() == before).then_some(mats))
}

fn read_flows(path: &Path, sectors: &[String], years: &[i32], v: &mut Violations) -> Result<Option<Vec<Matrix>>, IngestError> {
    read_pair_table(path, FLOW_COLS, "value", sectors, years, v)
}

const EMISSION_COLS: &[ColSpec] = &[
    col("year", Unit::Plain, true),
    col("sector", Unit::Plain, true),
    col("firm_emissions", Unit::Emissions, true),
    col("household_emissions", Unit::Emissions, true),
    col("indirect_emissions", Unit::Emissions, false),
];

const INTERMEDIARY_COLS: &[ColSpec] = &[
    col("year", Unit::Plain, true),
    col("input_sector", Unit::Plain, true),
    col("output_sector", Unit::Plain, true),
    col("emissions", Unit::Emissions, true),
];

/// Reads sector emissions. Emissions embodied in intermediary inputs come from
/// the `(input, output)` table when given, otherwise the per-sector
/// `indirect_emissions` column is split across inputs by euro flows.
pub fn read_emissions(
    path: &Path,
    intermediary: Option<&Path>,
    sectors: &SectorData,
    v: &mut Violations,
) -> Result<Option<EmissionsPanel>, IngestError> {
    let Some(t) = read_table(path, EMISSION_COLS, v)? else { return Ok(None) };
    let names = &sectors.sectors;
    let n = names.len();
    let mut years: Vec<i32> = t.rows.iter().filter_map(|r| t.text(r, "year").parse().ok()).collect();
    years.sort_unstable();
    years.dedup();
    let ny = years.len();
    let before = v.0.len();
    let blank = || vec![vec![f64::NAN; n]; ny];
    let (mut firm, mut house, mut indirect) = (blank(), blank(), blank());
    let mut seen = vec![vec![false; n]; ny];
    let has_indirect = t.has("indirect_emissions");
    for (k, row) in t.rows.iter().enumerate() {
        let line = k + 2;
        let Some(year) = t.year(row, line, v) else { continue };
        let s = t.text(row, "sector");
        let Some(i) = label_index(names, s) else {
            v.push(ViolationKind::Schema, &t.file, format!("row {line}: unknown sector '{s}'"));
            continue;
        };
        if !sectors.panel.years.contains(&year) {
            v.push(ViolationKind::Coverage, &t.file, format!("row {line}: year {year} is not in the sector panel"));
            continue;
        }
        let y = years.binary_search(&year).unwrap_or(0);
        let at = format!("({year}, {s})");
        if seen[y][i] {
            v.push(ViolationKind::Schema, &t.file, format!("{at}: duplicate row"));
            continue;
        }
        seen[y][i] = true;
        if let Some(x) = t.nonneg(row, "firm_emissions", &at, v) {
            firm[y][i] = x;
        }
        if let Some(x) = t.nonneg(row, "household_emissions", &at, v) {
            house[y][i] = x;
        }
        if has_indirect && intermediary.is_none() {
            if let Some(x) = t.nonneg(row, "indirect_emissions", &at, v) {
                indirect[y][i] = x;
            }
        }
    }
    for (y, s) in seen.iter().enumerate() {
        for (i, ok) in s.iter().enumerate() {
            if !ok {
                v.push(ViolationKind::Coverage, &t.file, format!("({}, {}): missing sector-year cell", years[y], names[i]));
            }
        }
    }
    let inter = match intermediary {
        Some(p) => read_pair_table(p, INTERMEDIARY_COLS, "emissions", names, &years, v)?,
        None if has_indirect => {
            if v.0.len() > before {
                None
            } else {
                let mut out = Vec::with_capacity(ny);
                for (y, &year) in years.iter().enumerate() {
                    let yp = sectors.panel.years.binary_search(&year).unwrap_or(0);
                    match split_indirect_emissions(&indirect[y], &sectors.panel.flows[yp]) {
                        Ok(m) => out.push(m),
                        Err(e) => v.push(ViolationKind::Coverage, &t.file, format!("{year}: {e}")),
                    }
                }
                (out.len() == ny).then_some(out)
            }
        }
        None => {
            v.push(
                ViolationKind::Coverage,
                &t.file,
                "no intermediary emissions: add an 'indirect_emissions' column or an intermediary emissions file",
            );
            None
        }
    };
    if v.0.len() > before {
        return Ok(None);
    }
    Ok(inter.map(|intermediary| EmissionsPanel {
        years,
        firm,
        household: house,
        intermediary,
    }))
}

/// Yearly rated and defaulted counts per group.
#[derive(Debug, Clone, PartialEq)]
pub struct DefaultHistory {
    pub groups: Vec<String>,
    pub years: Vec<i32>,
    /// `[group][year]`.
    pub rated: Vec<Vec<u64>>,
    pub defaulted: Vec<Vec<u64>>,
}

impl DefaultHistory {
    pub fn group(&self, name: &str) -> Option<usize> {
        label_index(&self.groups, name)
    }
}

const HISTORY_COLS: &[ColSpec] = &[
    col("year", Unit::Plain, true),
    col("group", Unit::Plain, true),
    col("rated", Unit::Plain, true),
    col("defaulted", Unit::Plain, true),
];

/// Keyed `(group, year)` grid shared by the history and cash-flow readers.
fn group_year_keys(t: &Table) -> (Vec<String>, Vec<i32>) {
    let mut groups: Vec<String> = Vec::new();
    let mut years: Vec<i32> = Vec::new();
    for row in &t.rows {
        let g = t.text(row, "group");
        if !g.is_empty() && label_index(&groups, g).is_none() {
            groups.push(g.to_string());
        }
        if let Ok(y) = t.text(row, "year").parse::<i32>() {
            years.push(y);
        }
    }
    years.sort_unstable();
    years.dedup();
    (groups, years)
}

fn check_grid(t: &Table, seen: &[Vec<bool>], groups: &[String], years: &[i32], v: &mut Violations) {
    for (g, s) in seen.iter().enumerate() {
        for (y, ok) in s.iter().enumerate() {
            if !ok {
                v.push(ViolationKind::Coverage, &t.file, format!("({}, {}): missing group-year cell", years[y], groups[g]));
            }
        }
    }
}

pub fn read_default_history(path: &Path, v: &mut Violations) -> Result<Option<DefaultHistory>, IngestError> {
    let Some(t) = read_table(path, HISTORY_COLS, v)? else { return Ok(None) };
    let (groups, years) = group_year_keys(&t);
    let before = v.0.len();
    let mut rated = vec![vec![0; years.len()]; groups.len()];
    let mut defaulted = rated.clone();
    let mut seen = vec![vec![false; years.len()]; groups.len()];
    for (k, row) in t.rows.iter().enumerate() {
        let line = k + 2;
        let Some(year) = t.year(row, line, v) else { continue };
        let name = t.text(row, "group");
        let Some(g) = label_index(&groups, name) else {
            v.push(ViolationKind::Schema, &t.file, format!("row {line}: empty group label"));
            continue;
        };
        let y = years.binary_search(&year).unwrap_or(0);
        if seen[g][y] {
            v.push(ViolationKind::Schema, &t.file, format!("({year}, {name}): duplicate row"));
            continue;
        }
        seen[g][y] = true;
        let (Some(r), Some(d)) = (t.count(row, "rated", line, v), t.count(row, "defaulted", line, v)) else {
            continue;
        };
        if d > r {
            v.push(ViolationKind::Coverage, &t.file, format!("({year}, {name}): {d} defaults exceed {r} rated firms"));
        }
        rated[g][y] = r;
        defaulted[g][y] = d;
    }
    check_grid(&t, &seen, &groups, &years, v);
    Ok((v.0.len() == before).then_some(DefaultHistory {
        groups,
        years,
        rated,
        defaulted,
    }))
}

/// One portfolio line. Blank `sigma_b` and `b_ratio` cells take the
/// calibrated group values.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioEntry {
    pub id: String,
    pub group: String,
    /// Exposure at default in euros.
    pub ead: f64,
    pub lgd: f64,
    pub f0: f64,
    pub sigma_b: Option<f64>,
    pub b_ratio: Option<f64>,
    /// Multiplies the group's calibrated loading vector.
    pub loading_scale: f64,
}

const PORTFOLIO_COLS: &[ColSpec] = &[
    col("id", Unit::Plain, true),
    col("group", Unit::Plain, true),
    col("ead", Unit::Money, true),
    col("lgd", Unit::Plain, true),
    col("f0", Unit::Plain, false),
    col("sigma_b", Unit::Plain, false),
    col("b_ratio", Unit::Plain, false),
    col("loading_scale", Unit::Plain, false),
];

pub fn read_portfolio(path: &Path, v: &mut Violations) -> Result<Option<Vec<PortfolioEntry>>, IngestError> {
    let Some(t) = read_table(path, PORTFOLIO_COLS, v)? else { return Ok(None) };
    let before = v.0.len();
    let mut out: Vec<PortfolioEntry> = Vec::with_capacity(t.rows.len());
    for (k, row) in t.rows.iter().enumerate() {
        let line = k + 2;
        let id = t.text(row, "id").to_string();
        let group = t.text(row, "group").to_string();
        if id.is_empty() || group.is_empty() {
            v.push(ViolationKind::Schema, &t.file, format!("row {line}: id and group must be set"));
            continue;
        }
        if out.iter().any(|e| e.id == id) {
            v.push(ViolationKind::Schema, &t.file, format!("row {line}: duplicate firm id '{id}'"));
        }
        let at = format!("firm '{id}'");
        let mut cell = |name: &str, default: Option<f64>, ok: fn(f64) -> bool| -> Option<Option<f64>> {
            match t.num(row, name) {
                Err(e) => {
                    v.push(ViolationKind::Schema, &t.file, format!("{at}: {e}"));
                    None
                }
                Ok(None) => Some(default),
                Ok(Some(x)) if ok(x) => Some(Some(x)),
                Ok(Some(x)) => {
                    v.push(ViolationKind::Coverage, &t.file, format!("{at}: {name} = {x} is out of range"));
                    None
                }
            }
        };
        let pos = |x: f64| x > 0.0 && x.is_finite();
        let ead = cell("ead", None, |x| x >= 0.0 && x.is_finite());
        let lgd = cell("lgd", None, |x| (0.0..=1.0).contains(&x));
        let f0 = cell("f0", Some(1.0), pos);
        let sigma_b = cell("sigma_b", None, pos);
        let b_ratio = cell("b_ratio", None, pos);
        let scale = cell("loading_scale", Some(1.0), |x| x.is_finite());
        let (Some(ead), Some(lgd), Some(f0), Some(sigma_b), Some(b_ratio), Some(scale)) =
            (ead, lgd, f0, sigma_b, b_ratio, scale)
        else {
            continue;
        };
        let (Some(ead), Some(lgd)) = (ead, lgd) else {
            v.push(ViolationKind::Coverage, &t.file, format!("{at}: ead and lgd are required"));
            continue;
        };
        out.push(PortfolioEntry {
            id,
            group,
            ead,
            lgd,
            f0: f0.unwrap_or(1.0),
            sigma_b,
            b_ratio,
            loading_scale: scale.unwrap_or(1.0),
        });
    }
    if out.is_empty() && v.0.len() == before {
        v.push(ViolationKind::Coverage, &t.file, "portfolio has no firms");
    }
    Ok((v.0.len() == before).then_some(out))
}

/// Group-summed log cash-flow growth, one series per group.
#[derive(Debug, Clone, PartialEq)]
pub struct CashFlows {
    pub groups: Vec<String>,
    pub years: Vec<i32>,
    /// `[group][year]`.
    pub growth_sum: Vec<Vec<f64>>,
    pub group_size: Vec<usize>,
}

const CASH_FLOW_COLS: &[ColSpec] = &[
    col("year", Unit::Plain, true),
    col("group", Unit::Plain, true),
    col("growth_sum", Unit::Plain, true),
    col("group_size", Unit::Plain, true),
];

pub fn read_cash_flows(path: &Path, v: &mut Violations) -> Result<Option<CashFlows>, IngestError> {
    let Some(t) = read_table(path, CASH_FLOW_COLS, v)? else { return Ok(None) };
    let (groups, years) = group_year_keys(&t);
    let before = v.0.len();
    let mut growth = vec![vec![f64::NAN; years.len()]; groups.len()];
    let mut size: Vec<Option<u64>> = vec![None; groups.len()];
    let mut seen = vec![vec![false; years.len()]; groups.len()];
    for (k, row) in t.rows.iter().enumerate() {
        let line = k + 2;
        let Some(year) = t.year(row, line, v) else { continue };
        let name = t.text(row, "group");
        let Some(g) = label_index(&groups, name) else {
            v.push(ViolationKind::Schema, &t.file, format!("row {line}: empty group label"));
            continue;
        };
        let y = years.binary_search(&year).unwrap_or(0);
        let at = format!("({year}, {name})");
        if seen[g][y] {
            v.push(ViolationKind::Schema, &t.file, format!("{at}: duplicate row"));
            continue;
        }
        seen[g][y] = true;
        match t.num(row, "growth_sum") {
            Ok(Some(x)) if x.is_finite() => growth[g][y] = x,
            Ok(_) => v.push(ViolationKind::Coverage, &t.file, format!("{at}: growth_sum must be a finite number")),
            Err(e) => v.push(ViolationKind::Schema, &t.file, format!("{at}: {e}")),
        }
        if let Some(s) = t.count(row, "group_size", line, v) {
            match size[g] {
                Some(prev) if prev != s => v.push(
                    ViolationKind::Coverage,
                    &t.file,
                    format!("{at}: group_size {s} differs from {prev} in earlier rows"),
                ),
                _ if s == 0 => v.push(ViolationKind::Coverage, &t.file, format!("{at}: group_size must be positive")),
                _ => size[g] = Some(s),
            }
        }
    }
    check_grid(&t, &seen, &groups, &years, v);
    Ok((v.0.len() == before).then(|| CashFlows {
        groups,
        years,
        growth_sum: growth,
        group_size: size.into_iter().map(|s| s.unwrap_or(1) as usize).collect(),
    }))
}

fn fmt_f(x: f64) -> String {
    format!("{x}")
}

fn write_rows(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_to_io)?;
    w.write_record(header).map_err(csv_to_io)?;
    for r in rows {
        w.write_record(&r).map_err(csv_to_io)?;
    }
    w.flush()
}

fn header(names: &[(&str, Unit)]) -> Vec<String> {
    names
        .iter()
        .map(|(n, u)| match u.base() {
            Some(b) => format!("{n}[{b}]"),
            None => n.to_string(),
        })
        .collect()
}

pub fn write_sector_panel(path: &Path, data: &SectorData) -> std::io::Result<()> {
    let mut cols = vec![
        ("year", Unit::Plain),
        ("sector", Unit::Plain),
        ("output_value", Unit::Money),
        ("consumption_value", Unit::Money),
        ("labor_hours", Unit::Hours),
        ("compensation", Unit::Money),
    ];
    if data.prices.is_some() {
        cols.push(("price_index", Unit::Plain));
    }
    let p = &data.panel;
    let rows = p.years.iter().enumerate().flat_map(|(y, year)| {
        data.sectors.iter().enumerate().map(move |(i, s)| {
            let mut r = vec![
                year.to_string(),
                s.clone(),
                fmt_f(p.output_value[y][i]),
                fmt_f(p.consumption_value[y][i]),
                fmt_f(p.labor_hours[y][i]),
                fmt_f(p.compensation[y][i]),
            ];
            if let Some(pr) = &data.prices {
                r.push(fmt_f(pr[y][i]));
            }
            r
        })
    });
    write_rows(path, &header(&cols), rows)
}

fn pair_rows<'a>(years: &'a [i32], sectors: &'a [String], mats: &'a [Matrix]) -> impl Iterator<Item = Vec<String>> + 'a {
    years.iter().enumerate().flat_map(move |(y, year)| {
        (0..sectors.len()).flat_map(move |j| {
            (0..sectors.len()).map(move |i| {
                vec![
                    year.to_string(),
                    sectors[j].clone(),
                    sectors[i].clone(),
                    fmt_f(mats[y][(j, i)]),
                ]
            })
        })
    })
}

pub fn write_flows(path: &Path, data: &SectorData) -> std::io::Result<()> {
    let cols = [
        ("year", Unit::Plain),
        ("input_sector", Unit::Plain),
        ("output_sector", Unit::Plain),
        ("value", Unit::Money),
    ];
    write_rows(path, &header(&cols), pair_rows(&data.panel.years, &data.sectors, &data.panel.flows))
}

/// Writes firm and household emissions; intermediary emissions go to a
/// separate `(input, output)` file.
pub fn write_emissions(path: &Path, intermediary: &Path, sectors: &[String], e: &EmissionsPanel) -> std::io::Result<()> {
    let cols = [
        ("year", Unit::Plain),
        ("sector", Unit::Plain),
        ("firm_emissions", Unit::Emissions),
        ("household_emissions", Unit::Emissions),
    ];
    let rows = e.years.iter().enumerate().flat_map(|(y, year)| {
        sectors
            .iter()
            .enumerate()
            .map(move |(i, s)| vec![year.to_string(), s.clone(), fmt_f(e.firm[y][i]), fmt_f(e.household[y][i])])
    });
    write_rows(path, &header(&cols), rows)?;
    let cols = [
        ("year", Unit::Plain),
        ("input_sector", Unit::Plain),
        ("output_sector", Unit::Plain),
        ("emissions", Unit::Emissions),
    ];
    write_rows(intermediary, &header(&cols), pair_rows(&e.years, sectors, &e.intermediary))
}

pub fn write_default_history(path: &Path, h: &DefaultHistory) -> std::io::Result<()> {
    let cols = [("year", Unit::Plain), ("group", Unit::Plain), ("rated", Unit::Plain), ("defaulted", Unit::Plain)];
    let rows = h.years.iter().enumerate().flat_map(|(y, year)| {
        h.groups.iter().enumerate().map(move |(g, name)| {
            vec![
                year.to_string(),
                name.clone(),
                h.rated[g][y].to_string(),
                h.defaulted[g][y].to_string(),
            ]
        })
    });
    write_rows(path, &header(&cols), rows)
}

pub fn write_portfolio(path: &Path, entries: &[PortfolioEntry]) -> std::io::Result<()> {
    let cols = [
        ("id", Unit::Plain),
        ("group", Unit::Plain),
        ("ead", Unit::Money),
        ("lgd", Unit::Plain),
        ("f0", Unit::Plain),
        ("sigma_b", Unit::Plain),
        ("b_ratio", Unit::Plain),
        ("loading_scale", Unit::Plain),
    ];
    let opt = |x: Option<f64>| x.map(fmt_f).unwrap_or_default();
    let rows = entries.iter().map(|e| {
        vec![
            e.id.clone(),
            e.group.clone(),
            fmt_f(e.ead),
            fmt_f(e.lgd),
            fmt_f(e.f0),
            opt(e.sigma_b),
            opt(e.b_ratio),
            fmt_f(e.loading_scale),
        ]
    });
    write_rows(path, &header(&cols), rows)
}

pub fn write_cash_flows(path: &Path, c: &CashFlows) -> std::io::Result<()> {
    let cols = [
        ("year", Unit::Plain),
        ("group", Unit::Plain),
        ("growth_sum", Unit::Plain),
        ("group_size", Unit::Plain),
    ];
    let rows = c.years.iter().enumerate().flat_map(|(y, year)| {
        c.groups.iter().enumerate().map(move |(g, name)| {
            vec![
                year.to_string(),
                name.clone(),
                fmt_f(c.growth_sum[g][y]),
                c.group_size[g].to_string(),
            ]
        })
    });
    write_rows(path, &header(&cols), rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_units() {
        assert_eq!(split_header("output_value[MEUR]"), ("output_value", Some("MEUR")));
        assert_eq!(split_header(" year "), ("year", None));
        assert_eq!(Unit::Money.scale("bnEUR"), Some(1e9));
        assert_eq!(Unit::Emissions.scale("EUR"), None);
        assert_eq!(Unit::Plain.scale("x"), None);
    }
}
