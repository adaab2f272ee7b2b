//! Config-driven experiment runner: ingest → segment → train → recommend →
//! evaluate, all mediated through the documented artifact files so any stage
//! can be rerun (or replaced by an external tool) independently.

pub mod artifacts;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{RatingDataset, SupplierMap};
use crate::ingest::{
    filter_min_profile, implicit_to_explicit, load_ratings, load_supplier_pairs, split_train_test,
    LoadedRatings, RatingsFormat, DEFAULT_MIN_RATINGS, DEFAULT_TEST_FRACTION,
};
use crate::metrics::{
    evaluate, precision_at_n, EvaluationInputs, MetricsReport, ReportSummary, SupplierInputs,
};
use crate::recsys::{
    fit, generate_recommendations, ModelConfig, RecommendationTable, TrainedModel,
};
use crate::segment::{
    compute_item_popularity, group_suppliers_pareto, group_users_by_propensity, longtail_series,
    segment_items_pareto, PropensityMeasure, DEFAULT_HEAD_SHARE, DEFAULT_N_GROUPS,
    DEFAULT_TAIL_SHARE,
};
use crate::synth::{generate_synthetic, SyntheticSpec};
use crate::{io, Error, Result};

use artifacts::{IngestStats, Manifest, ManifestEntry, MANIFEST_SCHEMA_VERSION};

/// One experiment: data source, preprocessing and segmentation knobs, and
/// the models to compare. Flat keys mirror the CLI flags.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Ratings file; when absent, `synthetic` supplies the data.
    #[serde(default)]
    pub ratings: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<String>,
    #[serde(default)]
    pub delimiter: Option<String>,
    #[serde(default)]
    pub suppliers: Option<PathBuf>,
    #[serde(default)]
    pub synthetic: Option<SyntheticSpec>,
    #[serde(default = "default_min_ratings")]
    pub min_ratings: usize,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_head_share")]
    pub head_share: f64,
    #[serde(default = "default_tail_share")]
    pub tail_share: f64,
    #[serde(default = "default_n_groups")]
    pub n_groups: usize,
    #[serde(default = "default_rating_min")]
    pub rating_min: f64,
    #[serde(default = "default_rating_max")]
    pub rating_max: f64,
    #[serde(default = "default_propensity")]
    pub propensity_measure: PropensityMeasure,
    pub algorithms: Vec<ModelConfig>,
    pub out_dir: PathBuf,
}

fn default_min_ratings() -> usize {
    DEFAULT_MIN_RATINGS
}
fn default_test_fraction() -> f64 {
    DEFAULT_TEST_FRACTION
}
fn default_seed() -> u64 {
    42
}
fn default_head_share() -> f64 {
    DEFAULT_HEAD_SHARE
}
fn default_tail_share() -> f64 {
    DEFAULT_TAIL_SHARE
}
fn default_n_groups() -> usize {
    DEFAULT_N_GROUPS
}
fn default_rating_min() -> f64 {
    crate::dataset::DEFAULT_RATING_MIN
}
fn default_rating_max() -> f64 {
    crate::dataset::DEFAULT_RATING_MAX
}
fn default_propensity() -> PropensityMeasure {
    PropensityMeasure::ItemFraction
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let contents = io::read_to_string(path)?;
        let config: ExperimentConfig = serde_json::from_str(&contents).map_err(|e| Error::Json {
            what: path.display().to_string(),
            message: e.to_string(),
        })?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            return Err(Error::InvalidConfig(
                "an experiment needs at least one algorithm".into(),
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for mc in &self.algorithms {
            mc.validate()?;
            if !seen.insert(mc.algorithm) {
                return Err(Error::InvalidConfig(format!(
                    "algorithm '{}' is listed twice",
                    mc.algorithm
                )));
            }
        }
        match (&self.ratings, &self.synthetic) {
            (None, None) => {
                return Err(Error::InvalidConfig(
                    "either a ratings path or a synthetic spec is required".into(),
                ))
            }
            (Some(path), _) => {
                if !path.exists() {
                    return Err(Error::InvalidConfig(format!(
                        "ratings file '{}' does not exist",
                        path.display()
                    )));
                }
                self.format
                    .as_deref()
                    .unwrap_or("explicit_csv")
                    .parse::<RatingsFormat>()?;
            }
            _ => {}
        }
        if let Some(path) = &self.suppliers {
            if !path.exists() {
                return Err(Error::InvalidConfig(format!(
                    "supplier file '{}' does not exist",
                    path.display()
                )));
            }
        }
        Ok(())
    }

    fn scale(&self) -> (f64, f64) {
        (self.rating_min, self.rating_max)
    }
}

/// Everything a finished (or aborted) run produced.
#[derive(Debug)]
pub struct RunOutcome {
    pub reports: Vec<MetricsReport>,
    pub manifest: Manifest,
    pub out_dir: PathBuf,
}

/// Tracks written files and completed stages, and renders the MANIFEST.
struct Emitter {
    out_dir: PathBuf,
    files: Vec<ManifestEntry>,
    notes: Vec<String>,
    stages: Vec<String>,
}

impl Emitter {
    fn new(out_dir: PathBuf) -> Self {
        Self {
            out_dir,
            files: Vec::new(),
            notes: Vec::new(),
            stages: Vec::new(),
        }
    }

    fn write(&mut self, rel: &str, contents: &str) -> Result<()> {
        io::write_file(&self.out_dir.join(rel), contents)?;
        self.files.push(ManifestEntry {
            path: rel.to_owned(),
            sha256: artifacts::sha256_hex(contents),
        });
        Ok(())
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.out_dir.join(rel)
    }

    fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    fn stage_done(&mut self, stage: &str) {
        self.stages.push(stage.to_owned());
    }

    fn finish(mut self) -> Result<(Manifest, PathBuf)> {
        self.files.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = Manifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            completed_stages: self.stages,
            notes: self.notes,
            files: self.files,
        };
        io::write_file(
            &self.out_dir.join("MANIFEST.json"),
            &artifacts::manifest_json(&manifest)?,
        )?;
        Ok((manifest, self.out_dir))
    }
}

/// Run the full pipeline described by `config`. Deterministic per seed: a
/// rerun produces byte-identical artifacts. On a stage failure the MANIFEST
/// is still written with the stages that completed.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutcome> {
    config.validate()?;
    let mut emitter = Emitter::new(config.out_dir.clone());
    match run_stages(config, &mut emitter) {
        Ok(reports) => {
            let (manifest, out_dir) = emitter.finish()?;
            Ok(RunOutcome {
                reports,
                manifest,
                out_dir,
            })
        }
        Err(err) => {
            emitter.note(format!("run aborted: {err}"));
            let _ = emitter.finish();
            Err(err)
        }
    }
}

fn run_stages(config: &ExperimentConfig, em: &mut Emitter) -> Result<Vec<MetricsReport>> {
    stage_ingest(config, em).map_err(|e| e.in_stage("ingest"))?;
    em.stage_done("ingest");

    let has_suppliers = em.path("suppliers.csv").exists();
    stage_segment(config, em, has_suppliers).map_err(|e| e.in_stage("segment"))?;
    em.stage_done("segment");

    let mut reports = Vec::new();
    for mc in &config.algorithms {
        let name = mc.algorithm.name();
        stage_train(config, em, mc).map_err(|e| e.in_stage("train"))?;
        em.stage_done(&format!("train:{name}"));
        stage_recommend(em, mc).map_err(|e| e.in_stage("recommend"))?;
        em.stage_done(&format!("recommend:{name}"));
        let report =
            stage_evaluate(config, em, mc, has_suppliers).map_err(|e| e.in_stage("evaluate"))?;
        em.stage_done(&format!("evaluate:{name}"));
        reports.push(report);
    }

    let summaries: Vec<ReportSummary> = reports.iter().map(|r| r.summary.clone()).collect();
    em.write("summary.csv", &artifacts::summary_csv(&summaries))
        .map_err(|e| e.in_stage("summary"))?;
    em.stage_done("summary");
    Ok(reports)
}

fn stage_ingest(config: &ExperimentConfig, em: &mut Emitter) -> Result<()> {
    let scale = config.scale();
    let (full, supplier_pairs): (RatingDataset, Option<Vec<(String, String)>>) =
        if let Some(path) = &config.ratings {
            let format: RatingsFormat = config
                .format
                .as_deref()
                .unwrap_or("explicit_csv")
                .parse()?;
            let loaded = load_ratings(path, format, config.delimiter.as_deref(), scale)?;
            let dataset = match loaded {
                LoadedRatings::Explicit(d) => d,
                LoadedRatings::Implicit(interactions) => {
                    implicit_to_explicit(&interactions, scale)?
                }
            };
            let pairs = match &config.suppliers {
                Some(suppliers) => Some(load_supplier_pairs(
                    suppliers,
                    config.delimiter.as_deref(),
                )?),
                None => None,
            };
            (dataset, pairs)
        } else {
            let spec = config.synthetic.as_ref().expect("validated");
            let (dataset, pairs) = generate_synthetic(spec)?;
            (dataset, Some(pairs))
        };

    let raw = (full.n_users(), full.n_items(), full.n_ratings());
    let filtered = filter_min_profile(&full, config.min_ratings)?;

    let (joined, map, dropped_items, dropped_ratings) = match &supplier_pairs {
        Some(pairs) => {
            let join = SupplierMap::join(&filtered, pairs)?;
            (
                join.dataset,
                Some(join.map),
                join.dropped_items,
                join.dropped_ratings,
            )
        }
        None => (filtered, None, 0, 0),
    };

    let split = split_train_test(&joined, config.test_fraction, config.seed)?;

    let mut warnings = Vec::new();
    if map.is_none() {
        warnings.push("no supplier map provided; supplier metrics will be omitted".to_owned());
    }
    if !split.forced_into_train.is_empty() {
        warnings.push(format!(
            "{} user(s) had a single rating, forced into train",
            split.forced_into_train.len()
        ));
    }

    let stats = IngestStats {
        schema_version: 1,
        raw_users: raw.0,
        raw_items: raw.1,
        raw_ratings: raw.2,
        n_users: joined.n_users(),
        n_items: joined.n_items(),
        n_ratings: joined.n_ratings(),
        n_suppliers: map.as_ref().map_or(0, |m| m.n_suppliers()),
        dropped_unmapped_items: dropped_items,
        dropped_unmapped_ratings: dropped_ratings,
        train_ratings: split.train.n_ratings(),
        test_ratings: split.test.n_ratings(),
        forced_into_train: split.forced_into_train.len(),
        warnings: warnings.clone(),
    };

    em.write("train.csv", &artifacts::ratings_csv(&split.train))?;
    em.write("test.csv", &artifacts::ratings_csv(&split.test))?;
    if let Some(map) = &map {
        let mut pairs = map.to_pairs(joined.items());
        pairs.sort();
        em.write("suppliers.csv", &artifacts::suppliers_csv(&pairs))?;
    }
    em.write("stats.json", &artifacts::stats_json(&stats)?)?;
    for w in warnings {
        em.note(w);
    }
    Ok(())
}

fn stage_segment(config: &ExperimentConfig, em: &mut Emitter, has_suppliers: bool) -> Result<()> {
    let train = artifacts::read_ratings_csv(&em.path("train.csv"), config.scale())?;

    let popularity = compute_item_popularity(&train);
    em.write(
        "longtail.csv",
        &artifacts::longtail_csv(&longtail_series(&train, &popularity)),
    )?;

    let segmentation =
        segment_items_pareto(&train, &popularity, config.head_share, config.tail_share)?;
    em.write(
        "item_categories.csv",
        &artifacts::item_categories_csv(&train, &segmentation),
    )?;

    let groups = group_users_by_propensity(
        &train,
        &segmentation,
        config.n_groups,
        config.propensity_measure,
    )?;
    em.write("user_groups.csv", &artifacts::user_groups_csv(&train, &groups))?;

    if has_suppliers {
        let pairs = load_supplier_pairs(&em.path("suppliers.csv"), Some(","))?;
        let join = SupplierMap::join(&train, &pairs)?;
        let sgroups =
            group_suppliers_pareto(&join.dataset, &join.map, config.head_share, config.tail_share)?;
        if let Some(warning) = &sgroups.warning {
            em.note(warning.clone());
        }
        em.write(
            "supplier_groups.csv",
            &artifacts::supplier_groups_csv(&join.map, &sgroups),
        )?;
    }
    Ok(())
}

fn stage_train(config: &ExperimentConfig, em: &mut Emitter, mc: &ModelConfig) -> Result<()> {
    let train = artifacts::read_ratings_csv(&em.path("train.csv"), config.scale())?;
    let model = fit(&train, mc)?;
    em.write(
        &format!("models/{}.json", mc.algorithm.name()),
        &model.to_json()?,
    )
}

fn stage_recommend(em: &mut Emitter, mc: &ModelConfig) -> Result<()> {
    let name = mc.algorithm.name();
    let model = TrainedModel::load(&em.path(&format!("models/{name}.json")))?;
    let table = generate_recommendations(&model, mc.list_size)?;
    em.write(&format!("recs/{name}.csv"), &table.to_csv())
}

fn stage_evaluate(
    config: &ExperimentConfig,
    em: &mut Emitter,
    mc: &ModelConfig,
    has_suppliers: bool,
) -> Result<MetricsReport> {
    let name = mc.algorithm.name();
    let files = EvaluateFiles {
        train: em.path("train.csv"),
        test: em.path("test.csv"),
        recs: em.path(&format!("recs/{name}.csv")),
        item_categories: em.path("item_categories.csv"),
        user_groups: em.path("user_groups.csv"),
        suppliers: has_suppliers.then(|| em.path("suppliers.csv")),
        supplier_groups: has_suppliers.then(|| em.path("supplier_groups.csv")),
        list_size: mc.list_size,
        rating_scale: config.scale(),
    };
    let report = evaluate_files(&files, name, Some(mc))?;
    for (file, contents) in artifacts::write_report_files_to_strings(&report)? {
        em.write(&format!("reports/{name}/{file}"), &contents)?;
    }
    Ok(report)
}

/// File-level inputs for a standalone evaluation.
#[derive(Debug, Clone)]
pub struct EvaluateFiles {
    pub train: PathBuf,
    pub test: PathBuf,
    pub recs: PathBuf,
    pub item_categories: PathBuf,
    pub user_groups: PathBuf,
    pub suppliers: Option<PathBuf>,
    pub supplier_groups: Option<PathBuf>,
    pub list_size: usize,
    pub rating_scale: (f64, f64),
}

/// Evaluate a recommendation file against the artifacts emitted by earlier
/// stages. This is the audit entry point for external recommenders too.
pub fn evaluate_files(
    files: &EvaluateFiles,
    algorithm: &str,
    config: Option<&ModelConfig>,
) -> Result<MetricsReport> {
    let train = artifacts::read_ratings_csv(&files.train, files.rating_scale)?;
    let test = artifacts::read_ratings_csv(&files.test, files.rating_scale)?;
    let recs = RecommendationTable::read_csv(&files.recs)?;
    let segmentation = artifacts::read_item_categories(&files.item_categories, &train)?;
    let user_groups = artifacts::read_user_groups(&files.user_groups, &train)?;

    let supplier_data = match (&files.suppliers, &files.supplier_groups) {
        (Some(suppliers), Some(groups_path)) => {
            let pairs = load_supplier_pairs(suppliers, Some(","))?;
            let join = SupplierMap::join(&train, &pairs)?;
            let groups = artifacts::read_supplier_groups(groups_path, &join.map)?;
            Some((join.map, groups))
        }
        (None, None) => None,
        _ => {
            return Err(Error::InvalidConfig(
                "supplier metrics need both the supplier map and the supplier groups file".into(),
            ))
        }
    };

    let inputs = EvaluationInputs {
        train: &train,
        test: &test,
        recs: &recs,
        segmentation: &segmentation,
        user_groups: &user_groups,
        suppliers: supplier_data
            .as_ref()
            .map(|(map, groups)| SupplierInputs { map, groups }),
        list_size: files.list_size,
    };
    evaluate(&inputs, algorithm, config)
}

/// Fit every candidate configuration and keep the one with the best
/// precision on the holdout; ties keep the earlier candidate.
pub fn grid_search_precision(
    train: &RatingDataset,
    holdout: &RatingDataset,
    candidates: &[ModelConfig],
) -> Result<(ModelConfig, f64)> {
    let mut best: Option<(ModelConfig, f64)> = None;
    for candidate in candidates {
        let model = fit(train, candidate)?;
        let table = generate_recommendations(&model, candidate.list_size)?;
        let precision = precision_at_n(&table, holdout, candidate.list_size)?;
        if best.as_ref().is_none_or(|(_, p)| precision > *p) {
            best = Some((candidate.clone(), precision));
        }
    }
    best.ok_or_else(|| Error::InvalidConfig("grid search needs at least one candidate".into()))
}
