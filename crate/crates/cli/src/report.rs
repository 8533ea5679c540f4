//! CSV rows emitted by `run` and the aggregations behind `report`.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use osf::scalar::{floor_log2, format_fraction, parse_fraction, pow2, Extended};
use osf::Weight;
use serde::{Deserialize, Serialize};

/// Round half away from zero to six decimals.
pub fn decimal6(r: &Weight) -> String {
    let scale = BigInt::from(1_000_000);
    let scaled = r.abs() * Weight::from_integer(scale.clone());
    let twice: BigInt = scaled.numer() * 2 + scaled.denom();
    let rounded = twice.div_floor(&(scaled.denom() * 2));
    let (int, frac) = rounded.div_rem(&scale);
    let sign = if r.is_negative() && !rounded.is_zero() { "-" } else { "" };
    format!("{sign}{int}.{frac:06}")
}

pub fn extended_decimal(x: &Extended<Weight>) -> String {
    match x {
        Extended::Finite(w) => decimal6(w),
        Extended::Infinite => "inf".to_string(),
    }
}

/// One greedy run, with both exact and decimal renderings of every rational.
/// Optimum columns are empty when the oracle caps were exceeded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportRow {
    pub seed: String,
    pub digest: String,
    pub rule: String,
    pub k: usize,
    pub greedy: String,
    pub greedy_dec: String,
    pub opt: String,
    pub opt_dec: String,
    pub tstar: String,
    pub tstar_dec: String,
    pub ratio: String,
    pub ratio_dec: String,
    pub max_contraction: String,
    pub max_contraction_dec: String,
    pub min_contraction: String,
    pub min_contraction_dec: String,
    pub class_duals: String,
    pub dual_lb: String,
}

pub const HEADER: [&str; 18] = [
    "seed",
    "digest",
    "rule",
    "k",
    "greedy",
    "greedy_dec",
    "opt",
    "opt_dec",
    "tstar",
    "tstar_dec",
    "ratio",
    "ratio_dec",
    "max_contraction",
    "max_contraction_dec",
    "min_contraction",
    "min_contraction_dec",
    "class_duals",
    "dual_lb",
];

pub fn exact_pair(w: Option<&Weight>) -> (String, String) {
    match w {
        Some(w) => (format_fraction(w), decimal6(w)),
        None => (String::new(), String::new()),
    }
}

/// Appends `row`, writing the header first when the file is new or empty and
/// refusing files whose header differs.
pub fn append_row(path: &Path, row: &ReportRow) -> Result<()> {
    let mut existing = String::new();
    if path.exists() {
        File::open(path)?.read_to_string(&mut existing)?;
    }
    let fresh = existing.trim().is_empty();
    if !fresh {
        let first = existing.lines().next().unwrap_or_default();
        if first != HEADER.join(",") {
            bail!("{}: header does not match the report schema", path.display());
        }
    }
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    w.serialize(row)?;
    w.flush()?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != HEADER {
        bail!("schema mismatch in {}: expected columns {}", path.display(), HEADER.join(","));
    }
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        rows.push(rec.with_context(|| format!("reading {}", path.display()))?);
    }
    Ok(rows)
}

/// Rows ordered by `k`, ties kept in input order.
pub fn ratio_table(mut rows: Vec<ReportRow>) -> Vec<ReportRow> {
    rows.sort_by_key(|r| r.k);
    rows
}

pub fn write_rows(out: impl Write, rows: &[ReportRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(HEADER)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Bucket {
    Zero,
    /// `[2^e, 2^(e+1))`.
    Pow(i64),
    Infinite,
}

/// Counts of the per-row maximum contraction in power-of-two buckets.
pub fn contraction_histogram(rows: &[ReportRow]) -> Result<Vec<[String; 3]>> {
    let mut counts: BTreeMap<Bucket, usize> = BTreeMap::new();
    for r in rows {
        let b = if r.max_contraction == "inf" {
            Bucket::Infinite
        } else {
            let x = parse_fraction(&r.max_contraction).with_context(|| format!("row {}", r.digest))?;
            if x.is_zero() {
                Bucket::Zero
            } else {
                Bucket::Pow(floor_log2(&x))
            }
        };
        *counts.entry(b).or_default() += 1;
    }
    Ok(counts
        .into_iter()
        .map(|(b, n)| {
            let (lo, hi) = match b {
                Bucket::Zero => ("0".to_string(), "0".to_string()),
                Bucket::Pow(e) => (format_fraction(&pow2(e)), format_fraction(&pow2(e + 1))),
                Bucket::Infinite => ("inf".to_string(), "inf".to_string()),
            };
            [lo, hi, n.to_string()]
        })
        .collect())
}

pub fn write_histogram(out: impl Write, buckets: &[[String; 3]]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bucket_lo", "bucket_hi", "count"])?;
    for b in buckets {
        w.write_record(b)?;
    }
    w.flush()?;
    Ok(())
}
