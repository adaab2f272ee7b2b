//! Every quantitative measure of the audit: calibration of recommendation
//! lists against user profiles (JSD, UPD), supplier exposure (SPD),
//! precision@N, catalog coverage, and the figure-ready series.

mod accuracy;
mod calibration;
mod exposure;
mod figures;

pub use accuracy::{catalog_coverage, precision_at_n};
pub use calibration::{
    compute_upd, jensen_shannon, list_category_distribution, profile_category_distribution,
    CategoryDistribution, UpdReport,
};
pub use exposure::{compute_spd, supplier_exposure, SupplierExposure};
pub use figures::{
    group_popularity_report, pearson_correlation, popularity_scatter, supplier_rank_report,
    GroupPopRow, ScatterPoint, ScatterReport, SupplierRankRow,
};

use serde::{Deserialize, Serialize};

use crate::dataset::{RatingDataset, SupplierMap};
use crate::recsys::{ModelConfig, RecommendationTable};
use crate::segment::{ItemSegmentation, SupplierGroups, UserGroups};
use crate::Result;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Everything `evaluate` needs; supplier data is optional, in which case the
/// supplier-side metrics are omitted.
pub struct EvaluationInputs<'a> {
    pub train: &'a RatingDataset,
    pub test: &'a RatingDataset,
    pub recs: &'a RecommendationTable,
    pub segmentation: &'a ItemSegmentation,
    pub user_groups: &'a UserGroups,
    pub suppliers: Option<SupplierInputs<'a>>,
    pub list_size: usize,
}

pub struct SupplierInputs<'a> {
    pub map: &'a SupplierMap,
    pub groups: &'a SupplierGroups,
}

/// The headline numbers, serialized as `report.json`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ReportSummary {
    pub schema_version: u32,
    pub algorithm: String,
    pub list_size: usize,
    pub upd: f64,
    pub group_jsd_means: Vec<f64>,
    pub spd: Option<f64>,
    pub proportional_supplier_fairness: Option<f64>,
    pub precision: f64,
    pub coverage: f64,
    pub scatter_correlation: f64,
    pub short_lists: usize,
    pub config: Option<ModelConfig>,
}

/// Full evaluation output: headline metrics plus the figure series.
#[derive(Debug, Clone)]
pub struct MetricsReport {
    pub summary: ReportSummary,
    pub scatter: ScatterReport,
    pub group_popularity: Vec<GroupPopRow>,
    pub supplier_rank: Vec<SupplierRankRow>,
}

/// Run the whole metric suite for one recommendation table.
pub fn evaluate(
    inputs: &EvaluationInputs<'_>,
    algorithm: &str,
    config: Option<&ModelConfig>,
) -> Result<MetricsReport> {
    let upd = compute_upd(
        inputs.recs,
        inputs.train,
        inputs.segmentation,
        inputs.user_groups,
    )?;
    let precision = precision_at_n(inputs.recs, inputs.test, inputs.list_size)?;
    let coverage = catalog_coverage(inputs.recs, inputs.train);
    let scatter = popularity_scatter(inputs.recs, inputs.train)?;
    let group_popularity = group_popularity_report(
        inputs.recs,
        inputs.train,
        inputs.user_groups,
        inputs.segmentation,
    )?;

    let (spd, supplier_rank) = match &inputs.suppliers {
        Some(sup) => {
            let exposure = supplier_exposure(inputs.recs, inputs.train, sup.groups, sup.map)?;
            let spd = compute_spd(&exposure);
            let rank = supplier_rank_report(inputs.recs, inputs.train, sup.map)?;
            (Some(spd), rank)
        }
        None => (None, Vec::new()),
    };

    Ok(MetricsReport {
        summary: ReportSummary {
            schema_version: REPORT_SCHEMA_VERSION,
            algorithm: algorithm.to_owned(),
            list_size: inputs.list_size,
            upd: upd.upd,
            group_jsd_means: upd.per_group,
            spd,
            proportional_supplier_fairness: spd.map(|v| 1.0 - v),
            precision,
            coverage,
            scatter_correlation: scatter.correlation,
            short_lists: inputs.recs.short_lists(),
            config: config.cloned(),
        },
        scatter,
        group_popularity,
        supplier_rank,
    })
}
