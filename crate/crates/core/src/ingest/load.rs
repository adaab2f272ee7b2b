use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

use crate::dataset::{Interaction, RatingDataset};
use crate::io;
use crate::{Error, Result};

/// Input rating formats: explicit star ratings, or implicit event counts
/// (playcount-style) that get converted to ratings downstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatingsFormat {
    ExplicitCsv,
    ImplicitCsv,
}

impl FromStr for RatingsFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "explicit_csv" => Ok(RatingsFormat::ExplicitCsv),
            "implicit_csv" => Ok(RatingsFormat::ImplicitCsv),
            other => Err(Error::InvalidConfig(format!(
                "unknown ratings format '{other}' (expected explicit_csv or implicit_csv)"
            ))),
        }
    }
}

impl std::fmt::Display for RatingsFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RatingsFormat::ExplicitCsv => f.write_str("explicit_csv"),
            RatingsFormat::ImplicitCsv => f.write_str("implicit_csv"),
        }
    }
}

#[derive(Debug)]
pub enum LoadedRatings {
    Explicit(RatingDataset),
    Implicit(Vec<Interaction>),
}

/// Load a ratings file.
///
/// Rows are `user<delim>item<delim>value[<delim>timestamp]`; the delimiter is
/// sniffed from the first data line (`::`, tab, or `,`) unless given.
/// Explicit duplicates keep the last value; implicit duplicates sum counts,
/// and rows without a count column count as one event each.
pub fn load_ratings(
    path: &Path,
    format: RatingsFormat,
    delimiter: Option<&str>,
    scale: (f64, f64),
) -> Result<LoadedRatings> {
    let contents = io::read_to_string(path)?;
    let delim = delimiter.unwrap_or_else(|| io::sniff_delimiter(&contents));

    match format {
        RatingsFormat::ExplicitCsv => {
            let mut rows: Vec<(String, String, f64)> = Vec::new();
            io::for_each_row(path, &contents, delim, |_, fields| {
                if fields.len() < 3 || fields.len() > 4 {
                    return Err(io::row_error(format!(
                        "expected user{delim}item{delim}value[{delim}timestamp], got {} fields",
                        fields.len()
                    )));
                }
                let value: f64 = fields[2]
                    .trim()
                    .parse()
                    .map_err(|_| io::row_error(format!("bad rating value '{}'", fields[2])))?;
                if !(scale.0..=scale.1).contains(&value) {
                    return Err(io::row_error(format!(
                        "rating {value} outside scale [{}, {}]",
                        scale.0, scale.1
                    )));
                }
                rows.push((fields[0].trim().to_owned(), fields[1].trim().to_owned(), value));
                Ok(())
            })?;
            if rows.is_empty() {
                return Err(Error::EmptyDataset(path.display().to_string()));
            }
            Ok(LoadedRatings::Explicit(RatingDataset::from_rows(
                &rows, scale,
            )?))
        }
        RatingsFormat::ImplicitCsv => {
            // aggregate counts per (user, item), keeping first-seen order
            let mut order: Vec<(String, String)> = Vec::new();
            let mut counts: HashMap<(String, String), u64> = HashMap::new();
            io::for_each_row(path, &contents, delim, |_, fields| {
                if fields.len() < 2 || fields.len() > 4 {
                    return Err(io::row_error(format!(
                        "expected user{delim}item[{delim}count[{delim}timestamp]], got {} fields",
                        fields.len()
                    )));
                }
                let count: u64 = if fields.len() >= 3 && !fields[2].trim().is_empty() {
                    fields[2]
                        .trim()
                        .parse()
                        .map_err(|_| io::row_error(format!("bad count '{}'", fields[2])))?
                } else {
                    1
                };
                if count == 0 {
                    return Err(io::row_error("interaction count must be >= 1"));
                }
                let key = (fields[0].trim().to_owned(), fields[1].trim().to_owned());
                match counts.get_mut(&key) {
                    Some(c) => *c += count,
                    None => {
                        counts.insert(key.clone(), count);
                        order.push(key);
                    }
                }
                Ok(())
            })?;
            if order.is_empty() {
                return Err(Error::EmptyDataset(path.display().to_string()));
            }
            let interactions = order
                .into_iter()
                .map(|key| {
                    let count = counts[&key];
                    Interaction {
                        user: key.0,
                        item: key.1,
                        count,
                    }
                })
                .collect();
            Ok(LoadedRatings::Implicit(interactions))
        }
    }
}

/// Load `(item, supplier)` pairs; an item mapped to two different suppliers
/// is a conflict error.
pub fn load_supplier_pairs(path: &Path, delimiter: Option<&str>) -> Result<Vec<(String, String)>> {
    let contents = io::read_to_string(path)?;
    let delim = delimiter.unwrap_or_else(|| io::sniff_delimiter(&contents));
    let mut pairs: Vec<(String, String)> = Vec::new();
    let mut seen: HashMap<String, String> = HashMap::new();
    io::for_each_row(path, &contents, delim, |_, fields| {
        if fields.len() < 2 {
            return Err(io::row_error(format!(
                "expected item{delim}supplier, got {} fields",
                fields.len()
            )));
        }
        let item = fields[0].trim().to_owned();
        let supplier = fields[1].trim().to_owned();
        if let Some(prev) = seen.get(&item) {
            if *prev != supplier {
                return Err(Error::SupplierConflict {
                    item,
                    first: prev.clone(),
                    second: supplier,
                });
            }
            return Ok(());
        }
        seen.insert(item.clone(), supplier.clone());
        pairs.push((item, supplier));
        Ok(())
    })?;
    Ok(pairs)
}
