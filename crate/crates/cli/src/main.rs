//! `exposure-audit`: train collaborative-filtering recommenders on
//! long-tailed rating data and audit their exposure bias from the user and
//! supplier side.
//!
//! Every subcommand reads and writes the documented artifact files, so
//! stages can be rerun independently and external recommendation lists can
//! be dropped into `evaluate`.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use exposure_core::dataset::SupplierMap;
use exposure_core::harness::{self, artifacts, EvaluateFiles, ExperimentConfig};
use exposure_core::ingest;
use exposure_core::recsys::{self, Algorithm, ModelConfig, TrainedModel};
use exposure_core::segment;
use exposure_core::synth::{self, SyntheticSpec};

#[derive(Parser)]
#[command(
    name = "exposure-audit",
    about = "Recommender training and multi-sided exposure-bias auditing",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a full experiment from a JSON config.
    Run(RunArgs),
    /// Load, convert, filter, and split a ratings file.
    Ingest(IngestArgs),
    /// Segment items, users, and suppliers from training data.
    Segment(SegmentArgs),
    /// Fit one model and write a model file.
    Train(TrainArgs),
    /// Generate top-N lists from a model file.
    Recommend(RecommendArgs),
    /// Compute the metric suite for a recommendation file.
    Evaluate(EvaluateArgs),
    /// Generate a Zipf-shaped synthetic dataset.
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (JSON); flat keys mirror these flags.
    #[arg(long)]
    config: PathBuf,
    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config's preprocessing seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    ratings: PathBuf,
    /// explicit_csv or implicit_csv.
    #[arg(long, default_value = "explicit_csv")]
    format: String,
    /// Field delimiter; sniffed from the file when omitted.
    #[arg(long)]
    delimiter: Option<String>,
    #[arg(long)]
    suppliers: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    min_ratings: usize,
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    rating_min: f64,
    #[arg(long, default_value_t = 5.0)]
    rating_max: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SegmentArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    suppliers: Option<PathBuf>,
    #[arg(long, default_value_t = 0.2)]
    head: f64,
    #[arg(long, default_value_t = 0.2)]
    tail: f64,
    #[arg(long, default_value_t = 3)]
    groups: usize,
    /// item_fraction or rating_weighted.
    #[arg(long, default_value = "item_fraction")]
    propensity: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// biased_mf, user_knn, item_knn, or most_popular.
    #[arg(long)]
    algo: String,
    #[arg(long)]
    train: PathBuf,
    /// Hyperparameter JSON; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model_out: PathBuf,
}

#[derive(Args)]
struct RecommendArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long)]
    recs: PathBuf,
    #[arg(long)]
    item_categories: PathBuf,
    #[arg(long)]
    user_groups: PathBuf,
    #[arg(long)]
    supplier_groups: Option<PathBuf>,
    /// Supplier map (item,supplier); required with --supplier-groups.
    #[arg(long)]
    suppliers: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Label recorded as provenance in report.json.
    #[arg(long, default_value = "external")]
    algo: String,
    /// Where to write report.json; figure CSVs go next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 1000)]
    users: usize,
    #[arg(long, default_value_t = 500)]
    items: usize,
    #[arg(long, default_value_t = 50)]
    suppliers: usize,
    #[arg(long, default_value_t = 1.0)]
    exponent: f64,
    /// Fixed popularity affinity in `[0,1]`; users are spread when omitted.
    #[arg(long)]
    affinity: Option<f64>,
    #[arg(long, default_value_t = 20)]
    ratings_min: usize,
    #[arg(long, default_value_t = 60)]
    ratings_max: usize,
    #[arg(long, default_value_t = 0.4)]
    noise: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Run(args) => cmd_run(args),
        Command::Ingest(args) => cmd_ingest(args),
        Command::Segment(args) => cmd_segment(args),
        Command::Train(args) => cmd_train(args),
        Command::Recommend(args) => cmd_recommend(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Synth(args) => cmd_synth(args),
    }
}

fn cmd_run(args: RunArgs) -> anyhow::Result<()> {
    let mut config = ExperimentConfig::load(&args.config)
        .with_context(|| format!("loading {}", args.config.display()))?;
    if let Some(out) = args.out {
        config.out_dir = out;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let outcome = harness::run_experiment(&config)?;
    println!("algorithm        upd      spd      precision coverage");
    for report in &outcome.reports {
        let s = &report.summary;
        println!(
            "{:<16} {:<8.4} {:<8} {:<9.4} {:.4}",
            s.algorithm,
            s.upd,
            s.spd.map_or("-".to_owned(), |v| format!("{v:.4}")),
            s.precision,
            s.coverage
        );
    }
    println!(
        "wrote {} files to {}",
        outcome.manifest.files.len() + 1,
        outcome.out_dir.display()
    );
    Ok(())
}

fn cmd_ingest(args: IngestArgs) -> anyhow::Result<()> {
    let scale = (args.rating_min, args.rating_max);
    let format: ingest::RatingsFormat = args.format.parse()?;
    let loaded = ingest::load_ratings(&args.ratings, format, args.delimiter.as_deref(), scale)?;
    let full = match loaded {
        ingest::LoadedRatings::Explicit(d) => d,
        ingest::LoadedRatings::Implicit(interactions) => {
            ingest::implicit_to_explicit(&interactions, scale)?
        }
    };
    let raw = (full.n_users(), full.n_items(), full.n_ratings());

    let filtered = ingest::filter_min_profile(&full, args.min_ratings)?;
    let (dataset, map, dropped_items, dropped_ratings) = match &args.suppliers {
        Some(path) => {
            let pairs = ingest::load_supplier_pairs(path, args.delimiter.as_deref())?;
            let join = SupplierMap::join(&filtered, &pairs)?;
            (
                join.dataset,
                Some(join.map),
                join.dropped_items,
                join.dropped_ratings,
            )
        }
        None => (filtered, None, 0, 0),
    };
    let split = ingest::split_train_test(&dataset, args.test_fraction, args.seed)?;

    let mut warnings = Vec::new();
    if !split.forced_into_train.is_empty() {
        warnings.push(format!(
            "{} user(s) had a single rating, forced into train",
            split.forced_into_train.len()
        ));
    }
    let stats = artifacts::IngestStats {
        schema_version: 1,
        raw_users: raw.0,
        raw_items: raw.1,
        raw_ratings: raw.2,
        n_users: dataset.n_users(),
        n_items: dataset.n_items(),
        n_ratings: dataset.n_ratings(),
        n_suppliers: map.as_ref().map_or(0, |m| m.n_suppliers()),
        dropped_unmapped_items: dropped_items,
        dropped_unmapped_ratings: dropped_ratings,
        train_ratings: split.train.n_ratings(),
        test_ratings: split.test.n_ratings(),
        forced_into_train: split.forced_into_train.len(),
        warnings,
    };

    write(&args.out.join("train.csv"), &artifacts::ratings_csv(&split.train))?;
    write(&args.out.join("test.csv"), &artifacts::ratings_csv(&split.test))?;
    if let Some(map) = &map {
        let mut pairs = map.to_pairs(dataset.items());
        pairs.sort();
        write(&args.out.join("suppliers.csv"), &artifacts::suppliers_csv(&pairs))?;
    }
    write(&args.out.join("stats.json"), &artifacts::stats_json(&stats)?)?;
    println!(
        "{} users, {} items, {} ratings ({} train / {} test), {} suppliers",
        stats.n_users,
        stats.n_items,
        stats.n_ratings,
        stats.train_ratings,
        stats.test_ratings,
        stats.n_suppliers
    );
    Ok(())
}

fn cmd_segment(args: SegmentArgs) -> anyhow::Result<()> {
    let train = artifacts::read_ratings_csv(&args.train, (1.0, 5.0))?;
    let measure = match args.propensity.as_str() {
        "item_fraction" => segment::PropensityMeasure::ItemFraction,
        "rating_weighted" => segment::PropensityMeasure::RatingWeighted,
        other => bail!("unknown propensity measure '{other}'"),
    };

    let popularity = segment::compute_item_popularity(&train);
    write(
        &args.out.join("longtail.csv"),
        &artifacts::longtail_csv(&segment::longtail_series(&train, &popularity)),
    )?;
    let segmentation = segment::segment_items_pareto(&train, &popularity, args.head, args.tail)?;
    write(
        &args.out.join("item_categories.csv"),
        &artifacts::item_categories_csv(&train, &segmentation),
    )?;
    let groups = segment::group_users_by_propensity(&train, &segmentation, args.groups, measure)?;
    write(
        &args.out.join("user_groups.csv"),
        &artifacts::user_groups_csv(&train, &groups),
    )?;

    if let Some(path) = &args.suppliers {
        let pairs = ingest::load_supplier_pairs(path, None)?;
        let join = SupplierMap::join(&train, &pairs)?;
        let sgroups =
            segment::group_suppliers_pareto(&join.dataset, &join.map, args.head, args.tail)?;
        if let Some(warning) = &sgroups.warning {
            eprintln!("warning: {warning}");
        }
        write(
            &args.out.join("supplier_groups.csv"),
            &artifacts::supplier_groups_csv(&join.map, &sgroups),
        )?;
    }
    println!(
        "segmented {} items (shares H/M/T = {:.3}/{:.3}/{:.3}), {} user groups",
        train.n_items(),
        segmentation.mass_shares[0],
        segmentation.mass_shares[1],
        segmentation.mass_shares[2],
        args.groups
    );
    Ok(())
}

fn cmd_train(args: TrainArgs) -> anyhow::Result<()> {
    let algorithm: Algorithm = args.algo.parse()?;
    let config = match &args.config {
        Some(path) => {
            let body = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let mut value: serde_json::Value = serde_json::from_str(&body)
                .with_context(|| format!("parsing {}", path.display()))?;
            let obj = value
                .as_object_mut()
                .context("model config must be a JSON object")?;
            match obj.get("algorithm") {
                None => {
                    obj.insert("algorithm".into(), serde_json::json!(algorithm.name()));
                }
                Some(v) if v == &serde_json::json!(algorithm.name()) => {}
                Some(other) => {
                    bail!("--algo {} conflicts with config algorithm {other}", args.algo)
                }
            }
            serde_json::from_value::<ModelConfig>(value)?
        }
        None => ModelConfig::new(algorithm),
    };
    let train = artifacts::read_ratings_csv(&args.train, (1.0, 5.0))?;
    let model = recsys::fit(&train, &config)?;
    model.save(&args.model_out)?;
    println!(
        "fitted {} on {} users / {} items; model written to {}",
        algorithm,
        train.n_users(),
        train.n_items(),
        args.model_out.display()
    );
    Ok(())
}

fn cmd_recommend(args: RecommendArgs) -> anyhow::Result<()> {
    let model = TrainedModel::load(&args.model)?;
    let table = recsys::generate_recommendations(&model, args.n)?;
    table.write_csv(&args.out)?;
    if table.short_lists() > 0 {
        eprintln!(
            "warning: {} list(s) shorter than {} (candidate pool exhausted)",
            table.short_lists(),
            args.n
        );
    }
    println!(
        "wrote {} lists of up to {} items to {}",
        table.n_users(),
        args.n,
        args.out.display()
    );
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> anyhow::Result<()> {
    let files = EvaluateFiles {
        train: args.train.clone(),
        test: args.test.clone(),
        recs: args.recs.clone(),
        item_categories: args.item_categories.clone(),
        user_groups: args.user_groups.clone(),
        suppliers: args.suppliers.clone(),
        supplier_groups: args.supplier_groups.clone(),
        list_size: args.n,
        rating_scale: (1.0, 5.0),
    };
    let report = harness::evaluate_files(&files, &args.algo, None)?;
    let dir = args
        .out
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    for (name, contents) in artifacts::write_report_files_to_strings(&report)? {
        if name == "report.json" {
            write(&args.out, &contents)?;
        } else {
            write(&dir.join(name), &contents)?;
        }
    }
    let s = &report.summary;
    println!(
        "upd {:.4}  spd {}  precision {:.4}  coverage {:.4}",
        s.upd,
        s.spd.map_or("-".to_owned(), |v| format!("{v:.4}")),
        s.precision,
        s.coverage
    );
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> anyhow::Result<()> {
    let spec = SyntheticSpec {
        n_users: args.users,
        n_items: args.items,
        n_suppliers: args.suppliers,
        zipf_exponent: args.exponent,
        affinity: args.affinity,
        ratings_per_user_min: args.ratings_min,
        ratings_per_user_max: args.ratings_max,
        rating_noise: args.noise,
        seed: args.seed,
    };
    let (dataset, pairs) = synth::generate_synthetic(&spec)?;
    write(&args.out.join("ratings.csv"), &artifacts::ratings_csv(&dataset))?;
    write(&args.out.join("suppliers.csv"), &artifacts::suppliers_csv(&pairs))?;
    println!(
        "generated {} ratings by {} users over {} items from {} suppliers",
        dataset.n_ratings(),
        dataset.n_users(),
        dataset.n_items(),
        args.suppliers
    );
    Ok(())
}

fn write(path: &std::path::Path, contents: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
