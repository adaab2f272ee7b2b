//! Readers and writers for the files that flow between pipeline stages.
//!
//! Ratings and supplier files are headerless delimited text so they can be
//! re-ingested; derived series carry a header row. Every writer is
//! deterministic: identical inputs produce identical bytes.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{RatingDataset, SupplierMap};
use crate::ingest::{load_ratings, LoadedRatings, RatingsFormat};
use crate::io;
use crate::metrics::{GroupPopRow, MetricsReport, ReportSummary, ScatterReport, SupplierRankRow};
use crate::segment::{Category, ItemSegmentation, SupplierGroups, UserGroups};
use crate::{Error, Result};

// --- ratings ---------------------------------------------------------------

pub fn ratings_csv(dataset: &RatingDataset) -> String {
    let mut out = String::new();
    for r in dataset.ratings() {
        out.push_str(&format!(
            "{},{},{}\n",
            dataset.users().id(r.user),
            dataset.items().id(r.item),
            io::fmt_f64(r.value)
        ));
    }
    out
}

pub fn read_ratings_csv(path: &Path, scale: (f64, f64)) -> Result<RatingDataset> {
    match load_ratings(path, RatingsFormat::ExplicitCsv, Some(","), scale)? {
        LoadedRatings::Explicit(d) => Ok(d),
        LoadedRatings::Implicit(_) => unreachable!("explicit loader returned interactions"),
    }
}

pub fn suppliers_csv(pairs: &[(String, String)]) -> String {
    let mut out = String::new();
    for (item, supplier) in pairs {
        out.push_str(&format!("{item},{supplier}\n"));
    }
    out
}

// --- ingest stats -----------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IngestStats {
    pub schema_version: u32,
    /// Counts after loading/aggregation, before filtering and joins.
    pub raw_users: usize,
    pub raw_items: usize,
    pub raw_ratings: usize,
    /// Counts of the final catalog shared by all later stages.
    pub n_users: usize,
    pub n_items: usize,
    pub n_ratings: usize,
    pub n_suppliers: usize,
    pub dropped_unmapped_items: usize,
    pub dropped_unmapped_ratings: usize,
    pub train_ratings: usize,
    pub test_ratings: usize,
    pub forced_into_train: usize,
    pub warnings: Vec<String>,
}

pub fn stats_json(stats: &IngestStats) -> Result<String> {
    to_pretty_json(stats, "stats.json")
}

pub fn read_stats_json(path: &Path) -> Result<IngestStats> {
    let contents = io::read_to_string(path)?;
    serde_json::from_str(&contents).map_err(|e| Error::Json {
        what: path.display().to_string(),
        message: e.to_string(),
    })
}

// --- segmentation artifacts ----------------------------------------------------

pub fn item_categories_csv(train: &RatingDataset, segmentation: &ItemSegmentation) -> String {
    let mut ids: Vec<u32> = (0..train.n_items() as u32).collect();
    ids.sort_by(|&a, &b| train.items().id(a).cmp(train.items().id(b)));
    let mut out = String::from("item,category\n");
    for i in ids {
        out.push_str(&format!(
            "{},{}\n",
            train.items().id(i),
            segmentation.category(i).label()
        ));
    }
    out
}

pub fn read_item_categories(path: &Path, train: &RatingDataset) -> Result<ItemSegmentation> {
    let contents = io::read_to_string(path)?;
    let mut categories: Vec<Option<Category>> = vec![None; train.n_items()];
    io::for_each_row(path, &contents, ",", |line, fields| {
        if line == 1 && fields.first() == Some(&"item") {
            return Ok(());
        }
        if fields.len() != 2 {
            return Err(io::row_error("expected item,category"));
        }
        let idx = train
            .items()
            .get(fields[0].trim())
            .ok_or_else(|| Error::UnknownItem(fields[0].into(), "train catalog".into()))?;
        categories[idx as usize] = Some(Category::from_label(fields[1].trim())?);
        Ok(())
    })?;
    let categories = categories
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            c.ok_or_else(|| {
                Error::UnknownItem(train.items().id(i as u32).to_owned(), "category file".into())
            })
        })
        .collect::<Result<Vec<Category>>>()?;
    Ok(ItemSegmentation::from_categories(
        categories,
        train.item_counts(),
    ))
}

pub fn user_groups_csv(train: &RatingDataset, groups: &UserGroups) -> String {
    let mut ids: Vec<u32> = (0..train.n_users() as u32).collect();
    ids.sort_by(|&a, &b| train.users().id(a).cmp(train.users().id(b)));
    let mut out = String::from("user,group,propensity\n");
    for u in ids {
        out.push_str(&format!(
            "{},{},{}\n",
            train.users().id(u),
            groups.group_of(u) + 1,
            io::fmt_f64(groups.propensity(u))
        ));
    }
    out
}

pub fn read_user_groups(path: &Path, train: &RatingDataset) -> Result<UserGroups> {
    let contents = io::read_to_string(path)?;
    let mut assignment: Vec<Option<u32>> = vec![None; train.n_users()];
    let mut propensity = vec![0.0f64; train.n_users()];
    let mut n_groups = 0usize;
    io::for_each_row(path, &contents, ",", |line, fields| {
        if line == 1 && fields.first() == Some(&"user") {
            return Ok(());
        }
        if fields.len() != 3 {
            return Err(io::row_error("expected user,group,propensity"));
        }
        let u = train
            .users()
            .get(fields[0].trim())
            .ok_or_else(|| Error::UnknownUser(fields[0].into(), "train data".into()))?;
        let group: usize = fields[1]
            .trim()
            .parse()
            .map_err(|_| io::row_error(format!("bad group '{}'", fields[1])))?;
        if group == 0 {
            return Err(io::row_error("groups are numbered from 1"));
        }
        let p: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| io::row_error(format!("bad propensity '{}'", fields[2])))?;
        assignment[u as usize] = Some((group - 1) as u32);
        propensity[u as usize] = p;
        n_groups = n_groups.max(group);
        Ok(())
    })?;
    let assignment = assignment
        .into_iter()
        .enumerate()
        .map(|(u, g)| {
            g.ok_or_else(|| {
                Error::UnknownUser(train.users().id(u as u32).to_owned(), "group file".into())
            })
        })
        .collect::<Result<Vec<u32>>>()?;
    UserGroups::from_assignments(assignment, propensity, n_groups)
}

pub fn supplier_groups_csv(map: &SupplierMap, groups: &SupplierGroups) -> String {
    let mut ids: Vec<u32> = (0..map.n_suppliers() as u32).collect();
    ids.sort_by(|&a, &b| map.suppliers().id(a).cmp(map.suppliers().id(b)));
    let mut out = String::from("supplier,group,mass_share\n");
    for s in ids {
        if let Some(group) = groups.group_of(s) {
            out.push_str(&format!(
                "{},{},{}\n",
                map.suppliers().id(s),
                group + 1,
                io::fmt_f64(groups.mass_share(s))
            ));
        }
    }
    out
}

pub fn read_supplier_groups(path: &Path, map: &SupplierMap) -> Result<SupplierGroups> {
    let contents = io::read_to_string(path)?;
    let mut assignment: Vec<Option<u32>> = vec![None; map.n_suppliers()];
    io::for_each_row(path, &contents, ",", |line, fields| {
        if line == 1 && fields.first() == Some(&"supplier") {
            return Ok(());
        }
        if fields.len() != 3 {
            return Err(io::row_error("expected supplier,group,mass_share"));
        }
        let s = map
            .suppliers()
            .get(fields[0].trim())
            .ok_or_else(|| Error::UnknownUser(fields[0].into(), "supplier map".into()))?;
        let group: usize = fields[1]
            .trim()
            .parse()
            .map_err(|_| io::row_error(format!("bad group '{}'", fields[1])))?;
        if !(1..=3).contains(&group) {
            return Err(io::row_error("supplier groups are numbered 1..3"));
        }
        assignment[s as usize] = Some((group - 1) as u32);
        Ok(())
    })?;
    Ok(SupplierGroups::from_assignments(
        assignment,
        vec![0; map.n_suppliers()],
        3,
    ))
}

pub fn longtail_csv(series: &[(usize, f64)]) -> String {
    let mut out = String::from("rank,user_fraction\n");
    for (rank, fraction) in series {
        out.push_str(&format!("{rank},{}\n", io::fmt_f64(*fraction)));
    }
    out
}

// --- evaluation artifacts ---------------------------------------------------------

pub fn report_json(summary: &ReportSummary) -> Result<String> {
    to_pretty_json(summary, "report.json")
}

pub fn read_report_json(path: &Path) -> Result<ReportSummary> {
    let contents = io::read_to_string(path)?;
    serde_json::from_str(&contents).map_err(|e| Error::Json {
        what: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn scatter_csv(scatter: &ScatterReport) -> String {
    let mut out = String::from("item,pop_data,pop_rec\n");
    let mut points = scatter.points.clone();
    points.sort_by(|a, b| a.item.cmp(&b.item));
    for p in points {
        out.push_str(&format!(
            "{},{},{}\n",
            p.item,
            io::fmt_f64(p.pop_data),
            io::fmt_f64(p.pop_rec)
        ));
    }
    out
}

pub fn group_popularity_csv(rows: &[GroupPopRow]) -> String {
    let mut out = String::from("group,category,side,proportion\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},profile,{}\n",
            row.group,
            row.category.label(),
            io::fmt_f64(row.profile)
        ));
        out.push_str(&format!(
            "{},{},recommendation,{}\n",
            row.group,
            row.category.label(),
            io::fmt_f64(row.recommendation)
        ));
    }
    out
}

pub fn supplier_rank_csv(rows: &[SupplierRankRow]) -> String {
    let mut out = String::from("supplier,rank,data_share,rec_share\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.supplier,
            row.rank,
            io::fmt_f64(row.data_share),
            io::fmt_f64(row.rec_share)
        ));
    }
    out
}

/// Cross-algorithm comparison table.
pub fn summary_csv(summaries: &[ReportSummary]) -> String {
    let mut out = String::from("algorithm,upd,spd,precision,coverage\n");
    for s in summaries {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            s.algorithm,
            io::fmt_f64(s.upd),
            s.spd.map(io::fmt_f64).unwrap_or_default(),
            io::fmt_f64(s.precision),
            io::fmt_f64(s.coverage)
        ));
    }
    out
}

/// `report.json` plus the figure CSVs, as `(file name, contents)` pairs.
/// The supplier series is present only when it was computed.
pub fn write_report_files_to_strings(report: &MetricsReport) -> Result<Vec<(String, String)>> {
    let mut files = vec![
        ("report.json".to_owned(), report_json(&report.summary)?),
        ("scatter.csv".to_owned(), scatter_csv(&report.scatter)),
        (
            "group_popularity.csv".to_owned(),
            group_popularity_csv(&report.group_popularity),
        ),
    ];
    if !report.supplier_rank.is_empty() {
        files.push((
            "supplier_rank.csv".to_owned(),
            supplier_rank_csv(&report.supplier_rank),
        ));
    }
    Ok(files)
}

/// Write `report.json` plus the figure CSVs into `dir`.
pub fn write_report_files(report: &MetricsReport, dir: &Path) -> Result<Vec<(String, String)>> {
    let files = write_report_files_to_strings(report)?;
    for (name, contents) in &files {
        io::write_file(&dir.join(name), contents)?;
    }
    Ok(files)
}

// --- manifest -------------------------------------------------------------------

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
}

/// Inventory of an experiment run: which stages completed and the digest of
/// every file they produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub completed_stages: Vec<String>,
    pub notes: Vec<String>,
    pub files: Vec<ManifestEntry>,
}

pub fn sha256_hex(contents: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(contents.as_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

pub fn manifest_json(manifest: &Manifest) -> Result<String> {
    to_pretty_json(manifest, "MANIFEST.json")
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let contents = io::read_to_string(path)?;
    serde_json::from_str(&contents).map_err(|e| Error::Json {
        what: path.display().to_string(),
        message: e.to_string(),
    })
}

fn to_pretty_json<T: Serialize>(value: &T, what: &str) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::Json {
            what: what.to_owned(),
            message: e.to_string(),
        })
}
