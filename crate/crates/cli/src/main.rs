use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use forge_core::catalog::{Catalog, LoadOptions};
use forge_core::compose::{composite, plan_layout, LayoutConfig, Relation};
use forge_core::dataset::{
    build_dataset, load_backgrounds, stats, BuildConfig, ClassCounts, DatasetManifest, EntityPools, Setting,
};
use forge_core::expr::{ground, Grammar};
use forge_core::metrics::{evaluate_run, DEFAULT_SAD_SCALE};
use forge_core::seed::rng_for;
use forge_core::synth::write_synthetic_assets;
use forge_core::{CategoryTables, ForgeError, LogicForm};

/// Builds and scores referring-matting datasets.
#[derive(Parser, Debug)]
#[command(name = "forge", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Annotate a catalog, or generate a synthetic one.
    Ingest(IngestArgs),
    /// Compose images and expressions into a dataset directory.
    Build(BuildArgs),
    /// Print dataset statistics as JSON.
    Stats(StatsArgs),
    /// Score predicted mattes against a manifest.
    Eval(EvalArgs),
    /// Parse an expression into its logic form.
    Parse(ParseArgs),
    /// Resolve an expression against one image of a manifest.
    Ground(GroundArgs),
    /// Render a single composite for inspection.
    ComposePreview(PreviewArgs),
}

#[derive(Args, Debug)]
struct VocabArgs {
    /// Category tables JSON overriding the built-in ones.
    #[arg(long)]
    tables: Option<PathBuf>,
    /// Word bags JSON overriding the built-in ones.
    #[arg(long)]
    word_bags: Option<PathBuf>,
}

impl VocabArgs {
    fn grammar(&self) -> anyhow::Result<Grammar> {
        Ok(Grammar::load(self.tables.as_deref(), self.word_bags.as_deref())?)
    }
}

#[derive(Args, Debug)]
struct IngestArgs {
    /// Catalog JSON listing entity metadata and image paths.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    catalog: Option<PathBuf>,
    /// Generate a synthetic catalog with this balance unit instead.
    #[arg(long)]
    synthetic: Option<usize>,
    /// Output catalog file, or directory for --synthetic.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep categories missing from the tables.
    #[arg(long)]
    allow_unknown: bool,
    /// Move categories that only occur in test to train.
    #[arg(long)]
    move_test_only: bool,
    #[arg(long)]
    tables: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BuildArgs {
    /// Build configuration (forge.json).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Directory of background PNGs.
    #[arg(long)]
    backgrounds: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    workers: Option<usize>,
    #[command(flatten)]
    vocab: VocabArgs,
}

#[derive(Args, Debug)]
struct StatsArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_parser = parse_setting, default_value = "expression")]
    setting: Setting,
    #[arg(long, value_parser = ["train", "test"])]
    split: Option<String>,
    /// Also write frequency tables as CSV into this directory.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Directory with <image_id>/<entity_id>.png predictions.
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_parser = parse_setting)]
    setting: Setting,
    #[arg(long, default_value_t = DEFAULT_SAD_SCALE)]
    scale: f64,
    /// Report JSON; a per-record CSV is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ParseArgs {
    #[arg(long)]
    expr: String,
    #[command(flatten)]
    vocab: VocabArgs,
}

#[derive(Args, Debug)]
struct GroundArgs {
    #[arg(long, conflicts_with = "logic", required_unless_present = "logic")]
    expr: Option<String>,
    /// Logic form as JSON.
    #[arg(long)]
    logic: Option<String>,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    image: String,
    #[command(flatten)]
    vocab: VocabArgs,
}

#[derive(Args, Debug)]
struct PreviewArgs {
    #[arg(long)]
    catalog: PathBuf,
    /// Background PNG.
    #[arg(long)]
    background: PathBuf,
    /// Two or three entity ids, subject first.
    #[arg(long, value_delimiter = ',', required = true)]
    entities: Vec<String>,
    #[arg(long, value_parser = parse_relation)]
    relation: Relation,
    #[arg(long)]
    seed: u64,
    /// Output PNG; visible alphas go next to it.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    tables: Option<PathBuf>,
}

fn parse_setting(s: &str) -> Result<Setting, String> {
    Setting::parse(s).ok_or_else(|| format!("expected keyword or expression, got {s:?}"))
}

fn parse_relation(s: &str) -> Result<Relation, String> {
    Relation::parse(s)
        .filter(|r| r.is_fact())
        .ok_or_else(|| format!("expected left, right, top, bottom, in_front_of or behind, got {s:?}"))
}

fn print_json<T: serde::Serialize>(value: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn load_tables(path: Option<&Path>) -> anyhow::Result<CategoryTables> {
    Ok(match path {
        Some(p) => CategoryTables::load(p)?,
        None => CategoryTables::default(),
    })
}

fn ingest(args: IngestArgs) -> anyhow::Result<()> {
    let tables = load_tables(args.tables.as_deref())?;
    if let Some(unit) = args.synthetic {
        if unit == 0 {
            bail!(ForgeError::InvalidConfig("--synthetic needs a positive unit".into()));
        }
        let test_unit = unit.div_ceil(10);
        let path = write_synthetic_assets(
            &args.out,
            ClassCounts::new(5 * unit, unit, unit),
            ClassCounts::new(5 * test_unit, test_unit, test_unit),
            4,
            &tables,
            args.seed,
        )?;
        log::info!("wrote {}", path.display());
        return print_json(&serde_json::json!({ "catalog": path, "backgrounds": args.out.join("backgrounds") }));
    }
    let path = args.catalog.expect("clap requires --catalog");
    let mut catalog = Catalog::load(&path)?;
    let moved = if args.move_test_only {
        catalog.move_test_only_categories_to_train()
    } else {
        Default::default()
    };
    let opts = LoadOptions {
        allow_unknown_category: args.allow_unknown,
    };
    let entities = catalog.load_entities(&tables, opts)?;
    for (entry, (_, entity)) in catalog.entries.iter_mut().zip(&entities) {
        entry.attributes = Some(entity.attributes.clone());
    }
    // paths stay valid when the annotated catalog is written elsewhere
    let root = std::path::absolute(&catalog.root)?;
    for entry in &mut catalog.entries {
        for p in std::iter::once(&mut entry.rgb).chain(entry.alpha.as_mut()) {
            if p.is_relative() {
                *p = root.join(&*p);
            }
        }
    }
    catalog.save(&args.out)?;
    print_json(&serde_json::json!({
        "entities": entities.len(),
        "moved_categories": moved,
        "catalog": args.out,
    }))
}

fn build(args: BuildArgs) -> anyhow::Result<()> {
    let mut config = match &args.config {
        Some(p) => BuildConfig::load(p)?,
        None => BuildConfig::default(),
    };
    if args.seed.is_some() {
        config.master_seed = args.seed;
    }
    for (flag, slot) in [
        (&args.out, &mut config.out_dir),
        (&args.catalog, &mut config.catalog),
        (&args.backgrounds, &mut config.backgrounds),
        (&args.vocab.tables, &mut config.tables),
        (&args.vocab.word_bags, &mut config.word_bags),
    ] {
        if flag.is_some() {
            slot.clone_from(flag);
        }
    }
    config.validate()?;
    let missing = |what: &str| ForgeError::InvalidConfig(format!("{what} is required (flag or config)"));
    let out = config.out_dir.clone().ok_or_else(|| missing("--out"))?;
    let catalog_path = config.catalog.clone().ok_or_else(|| missing("--catalog"))?;
    let bg_dir = config.backgrounds.clone().ok_or_else(|| missing("--backgrounds"))?;
    let grammar = Grammar::load(config.tables.as_deref(), config.word_bags.as_deref())?;
    let workers = args
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));

    let catalog = Catalog::load(&catalog_path)?;
    let pools = EntityPools::from_split_entities(catalog.load_entities(grammar.tables(), LoadOptions::default())?);
    let backgrounds = load_backgrounds(&bg_dir)?;
    let manifest = build_dataset(&config, &grammar, &pools, &backgrounds, &out, workers)?;
    print_json(&serde_json::json!({
        "images": manifest.images.len(),
        "failures": manifest.failures.len(),
        "manifest": out.join("manifest.json"),
    }))
}

fn run_stats(args: StatsArgs) -> anyhow::Result<()> {
    let manifest = DatasetManifest::load(&args.manifest)?;
    let split = args.split.as_deref().map(|s| match s {
        "train" => forge_core::catalog::Split::Train,
        _ => forge_core::catalog::Split::Test,
    });
    let report = stats(&manifest, args.setting, split);
    if let Some(dir) = &args.csv {
        report.write_csv(dir)?;
    }
    print_json(&report)
}

fn eval(args: EvalArgs) -> anyhow::Result<()> {
    let manifest = DatasetManifest::load(&args.manifest)?;
    let root = args.manifest.parent().unwrap_or(Path::new(""));
    let report = evaluate_run(&args.pred, &manifest, root, args.setting, args.scale)?;
    if let Some(out) = &args.out {
        report.save_json(out)?;
        report.save_csv(&out.with_extension("csv"))?;
    }
    let summary = serde_json::json!({
        "setting": args.setting,
        "sad_scale": report.sad_scale,
        "records": report.record_count,
        "images": report.image_count,
        "sad": report.sad, "mse": report.mse, "mad": report.mad,
        "sad_e": report.sad_e, "mse_e": report.mse_e, "mad_e": report.mad_e,
        "missing": report.records.iter().filter(|r| r.missing).count(),
    });
    print_json(&summary)
}

fn parse(args: ParseArgs) -> anyhow::Result<()> {
    let logic = args.vocab.grammar()?.parse(&args.expr)?;
    print_json(&logic)
}

fn run_ground(args: GroundArgs) -> anyhow::Result<()> {
    let logic: LogicForm = match (&args.expr, &args.logic) {
        (Some(text), _) => args.vocab.grammar()?.parse(text)?,
        (None, Some(json)) => serde_json::from_str(json).context("--logic is not a logic form")?,
        (None, None) => unreachable!("clap requires one of --expr/--logic"),
    };
    let manifest = DatasetManifest::load(&args.manifest)?;
    let image = manifest
        .image(&args.image)
        .ok_or_else(|| ForgeError::ManifestMismatch(format!("no image {}", args.image)))?;
    let ids = ground(&logic, &image.scene()?);
    print_json(&serde_json::json!({ "logic": logic, "entities": ids }))
}

fn preview(args: PreviewArgs) -> anyhow::Result<()> {
    if !(2..=3).contains(&args.entities.len()) {
        bail!(ForgeError::InvalidConfig("--entities takes two or three ids".into()));
    }
    let tables = load_tables(args.tables.as_deref())?;
    let mut catalog = Catalog::load(&args.catalog)?;
    catalog.entries.retain(|e| args.entities.contains(&e.meta.id));
    let loaded = catalog.load_entities(&tables, LoadOptions::default())?;
    let entities: Vec<_> = args
        .entities
        .iter()
        .map(|id| {
            loaded
                .iter()
                .map(|(_, e)| e)
                .find(|e| &e.id == id)
                .ok_or_else(|| ForgeError::InvalidConfig(format!("entity {id} is not in the catalog")))
        })
        .collect::<Result<_, _>>()?;
    let background = forge_core::RgbRaster::load(&args.background)?;
    let mut rng = rng_for(args.seed, &[]);
    let layout = plan_layout(
        &entities,
        args.relation,
        background.dims(),
        &LayoutConfig::default(),
        &mut rng,
    )?;
    let comp = composite(&layout, &entities, &background)?;
    comp.image.save(&args.out)?;
    let stem = args.out.file_stem().and_then(|s| s.to_str()).unwrap_or("preview");
    for (p, alpha) in layout.placements.iter().zip(&comp.visible_alphas) {
        alpha.save(&args.out.with_file_name(format!("{stem}_{}.png", p.entity_id)))?;
    }
    print_json(&layout)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Build(a) => build(a),
        Command::Stats(a) => run_stats(a),
        Command::Eval(a) => eval(a),
        Command::Parse(a) => parse(a),
        Command::Ground(a) => run_ground(a),
        Command::ComposePreview(a) => preview(a),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let data = err.chain().any(|e| {
        e.downcast_ref::<ForgeError>().is_some_and(ForgeError::is_data_error)
            || e.downcast_ref::<std::io::Error>().is_some()
    });
    if data {
        2
    } else {
        1
    }
}

/// Error chain on one line, skipping causes the outer message already quotes.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if out.ends_with(&msg) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&msg);
    }
    out
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FORGE_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
