//! CSV inputs and outputs.
//!
//! Inputs are comma separated with a header row; lines starting with `#` are
//! comments. Every output starts with a `#` line echoing the run parameters,
//! then a header row, with LF line endings.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use cmt_core::curves::{BondQuote, DiscountCurve, HazardCurve, PriceKind};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

fn read_rows<T: DeserializeOwned>(path: &Path) -> CliResult<Vec<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::file(path, e))?;
    let rows = reader
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| CliError::file(path, e))?;
    if rows.is_empty() {
        return Err(CliError::file(path, "no data rows"));
    }
    Ok(rows)
}

#[derive(Deserialize)]
struct DfRow {
    t: f64,
    df: f64,
}

#[derive(Deserialize)]
struct HazardRow {
    t: f64,
    lambda: f64,
}

#[derive(Deserialize)]
#[serde(rename_all = "lowercase")]
enum KindField {
    Clean,
    Dirty,
}

#[derive(Deserialize)]
struct QuoteRow {
    maturity: f64,
    coupon: f64,
    frequency: u32,
    price: f64,
    #[serde(default)]
    kind: Option<KindField>,
}

/// `t,df` pillars; the first row must be `0,1`.
pub fn read_discount_curve(path: &Path) -> CliResult<DiscountCurve> {
    let rows: Vec<DfRow> = read_rows(path)?;
    let pillars: Vec<(f64, f64)> = rows.iter().map(|r| (r.t, r.df)).collect();
    DiscountCurve::new(&pillars).map_err(|e| CliError::file(path, e))
}

/// `t,lambda` pillars with `t > 0`.
pub fn read_hazard_curve(path: &Path) -> CliResult<HazardCurve> {
    let rows: Vec<HazardRow> = read_rows(path)?;
    let pillars: Vec<(f64, f64)> = rows.iter().map(|r| (r.t, r.lambda)).collect();
    HazardCurve::new(&pillars).map_err(|e| CliError::file(path, e))
}

/// `maturity,coupon,frequency,price[,kind]`; prices are dirty unless `kind` says `clean`.
pub fn read_quotes(path: &Path) -> CliResult<Vec<BondQuote>> {
    let rows: Vec<QuoteRow> = read_rows(path)?;
    rows.into_iter()
        .map(|r| {
            let mut quote = BondQuote::new(r.maturity, r.coupon, r.frequency, r.price)
                .map_err(|e| CliError::file(path, e))?;
            if matches!(r.kind, Some(KindField::Clean)) {
                quote.kind = PriceKind::Clean;
            }
            Ok(quote)
        })
        .collect()
}

/// A CSV file under construction: comment line, header, then rows.
pub struct CsvOut {
    writer: csv::Writer<BufWriter<File>>,
    path: std::path::PathBuf,
}

impl CsvOut {
    pub fn create(path: &Path, comment: &str, header: &[&str]) -> CliResult<Self> {
        let file = File::create(path).map_err(|e| CliError::file(path, e))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "# {comment}").map_err(|e| CliError::file(path, e))?;
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        writer.write_record(header).map_err(|e| CliError::file(path, e))?;
        Ok(Self { writer, path: path.to_path_buf() })
    }

    pub fn row<I, S>(&mut self, fields: I) -> CliResult<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).map_err(|e| CliError::file(&self.path, e))
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.writer.flush().map_err(|e| CliError::file(&self.path, e))
    }
}

/// Writes `t,lambda` pillars.
pub fn write_hazard_curve(path: &Path, comment: &str, curve: &HazardCurve) -> CliResult<()> {
    let mut out = CsvOut::create(path, comment, &["t", "lambda"])?;
    for (t, lambda) in curve.pillars() {
        out.row([t.to_string(), lambda.to_string()])?;
    }
    out.finish()
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::file(path, e))
}
