use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::balance::{balance, make_groups, BalanceUnit, ClassCounts, DuplicationPlan, RelationRatio};
use super::manifest::{keyword_unambiguous, BuildFailure, DatasetManifest, EntityRecord, ImageRecord};
use crate::catalog::{Entity, EntityClass, Split};
use crate::compose::{composite, plan_layout, LayoutConfig};
use crate::error::{ForgeError, Result};
use crate::expr::{Grammar, SceneMeta};
use crate::raster::RgbRaster;
use crate::seed::{hash_str, rng_for};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildConfig {
    /// Required; the CLI may supply it with `--seed`.
    pub master_seed: Option<u64>,
    pub composites_per_group_train: usize,
    pub composites_per_group_test: usize,
    pub extra_random_train: usize,
    pub extra_random_test: usize,
    pub relation_ratio: RelationRatio,
    pub balance_unit_train: BalanceUnit,
    pub balance_unit_test: BalanceUnit,
    /// Fixed canvas `[width, height]`; backgrounds are resized to it. By
    /// default the canvas is the background's own size.
    pub canvas: Option<[u32; 2]>,
    pub layout: LayoutConfig,
    /// Attempts per composite before it is given up.
    pub resample_budget: usize,
    /// Input and output locations, used by the command line. Relative paths
    /// are taken relative to the config file.
    pub catalog: Option<PathBuf>,
    pub backgrounds: Option<PathBuf>,
    pub tables: Option<PathBuf>,
    pub word_bags: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            master_seed: None,
            composites_per_group_train: 20,
            composites_per_group_test: 10,
            extra_random_train: 2800,
            extra_random_test: 390,
            relation_ratio: RelationRatio::default(),
            balance_unit_train: BalanceUnit::Auto,
            balance_unit_test: BalanceUnit::Auto,
            canvas: None,
            layout: LayoutConfig::default(),
            resample_budget: 8,
            catalog: None,
            backgrounds: None,
            tables: None,
            word_bags: None,
            out_dir: None,
        }
    }
}

impl BuildConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ForgeError::io(path, e))?;
        let mut config: BuildConfig =
            serde_json::from_str(&text).map_err(|e| ForgeError::InvalidConfig(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut config.catalog,
            &mut config.backgrounds,
            &mut config.tables,
            &mut config.word_bags,
            &mut config.out_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(ForgeError::InvalidConfig(m.to_string()));
        if self.master_seed.is_none() {
            return bad("a master seed is required");
        }
        if self.composites_per_group_train == 0 || self.composites_per_group_test == 0 {
            return bad("composites per group must be positive");
        }
        if self.resample_budget == 0 {
            return bad("resample budget must be positive");
        }
        if matches!(self.balance_unit_train, BalanceUnit::Fixed(0))
            || matches!(self.balance_unit_test, BalanceUnit::Fixed(0))
        {
            return bad("balance unit must be positive");
        }
        if let Some([w, h]) = self.canvas {
            if w == 0 || h == 0 {
                return bad("canvas must be non-empty");
            }
        }
        self.relation_ratio.validate()?;
        self.layout.validate()
    }

    fn seed(&self) -> u64 {
        self.master_seed.unwrap_or_default()
    }

    fn per_group(&self, split: Split) -> usize {
        match split {
            Split::Train => self.composites_per_group_train,
            Split::Test => self.composites_per_group_test,
        }
    }

    fn extra(&self, split: Split) -> usize {
        match split {
            Split::Train => self.extra_random_train,
            Split::Test => self.extra_random_test,
        }
    }

    fn unit(&self, split: Split) -> BalanceUnit {
        match split {
            Split::Train => self.balance_unit_train,
            Split::Test => self.balance_unit_test,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Background {
    pub id: String,
    pub image: RgbRaster,
}

/// Entities per split. Ids must be unique across both pools.
#[derive(Clone, Debug, Default)]
pub struct EntityPools {
    pub train: Vec<Entity>,
    pub test: Vec<Entity>,
}

impl EntityPools {
    pub fn from_split_entities(items: Vec<(Split, Entity)>) -> Self {
        let mut pools = EntityPools::default();
        for (split, e) in items {
            match split {
                Split::Train => pools.train.push(e),
                Split::Test => pools.test.push(e),
            }
        }
        pools
    }

    pub fn get(&self, split: Split) -> &[Entity] {
        match split {
            Split::Train => &self.train,
            Split::Test => &self.test,
        }
    }

    fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for e in self.train.iter().chain(&self.test) {
            if !seen.insert(e.id.as_str()) {
                return Err(ForgeError::InvalidMetadata {
                    id: e.id.clone(),
                    reason: "entity id appears twice in the pools".into(),
                });
            }
        }
        Ok(())
    }
}

pub fn class_counts(entities: &[Entity]) -> ClassCounts {
    let count = |c: EntityClass| entities.iter().filter(|e| e.class == c).count();
    ClassCounts::new(
        count(EntityClass::Human),
        count(EntityClass::Animal),
        count(EntityClass::Object),
    )
}

struct Job {
    index: usize,
    /// Candidate entity indices; `None` draws from the whole split.
    members: Option<Vec<usize>>,
}

struct JobOutcome {
    image: Option<ImageRecord>,
    failures: Vec<BuildFailure>,
}

pub fn image_id(split: Split, index: usize) -> String {
    format!("{split}_{index:06}")
}

/// Balancing and grouping of one split, before any composite is rendered.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitPlan {
    pub split: Split,
    pub duplication: DuplicationPlan,
    /// Entity indices into the split pool.
    pub groups: Vec<[usize; 7]>,
    pub per_group: usize,
    pub extra: usize,
}

impl SplitPlan {
    pub fn composite_count(&self) -> usize {
        self.groups.len() * self.per_group + self.extra
    }

    fn jobs(&self) -> Vec<Job> {
        let mut jobs = Vec::with_capacity(self.composite_count());
        for (g, group) in self.groups.iter().enumerate() {
            let members: Vec<usize> = group.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
            for k in 0..self.per_group {
                jobs.push(Job {
                    index: g * self.per_group + k,
                    members: Some(members.clone()),
                });
            }
        }
        let start = jobs.len();
        jobs.extend((0..self.extra).map(|k| Job {
            index: start + k,
            members: None,
        }));
        jobs
    }
}

/// Balances the split's pool to 5:1:1 and forms its groups.
pub fn plan_split(config: &BuildConfig, split: Split, entities: &[Entity]) -> Result<SplitPlan> {
    let seed = config.seed();
    let split_tag = hash_str(split.as_str());
    let by_class: [Vec<usize>; 3] = [EntityClass::Human, EntityClass::Animal, EntityClass::Object]
        .map(|c| (0..entities.len()).filter(|&k| entities[k].class == c).collect());
    let counts = ClassCounts::new(by_class[0].len(), by_class[1].len(), by_class[2].len());
    let duplication = balance(
        counts,
        config.unit(split),
        &mut rng_for(seed, &[hash_str("balance"), split_tag]),
    )?;
    log::info!(
        "{split}: pool {:?} balanced to {:?} (unit {})",
        counts.as_array(),
        duplication.totals.as_array(),
        duplication.unit
    );
    let expanded = duplication.expand();
    let pools: [Vec<usize>; 3] = std::array::from_fn(|c| expanded[c].iter().map(|&k| by_class[c][k]).collect());
    let groups = make_groups(
        [&pools[0], &pools[1], &pools[2]],
        &mut rng_for(seed, &[hash_str("groups"), split_tag]),
    )?
    .into_iter()
    .map(|g| {
        let [a, b, c, d, e] = g.humans;
        [a, b, c, d, e, g.animal, g.object]
    })
    .collect();
    Ok(SplitPlan {
        split,
        duplication,
        groups,
        per_group: config.per_group(split),
        extra: config.extra(split),
    })
}

struct Ctx<'a> {
    config: &'a BuildConfig,
    grammar: &'a Grammar,
    split: Split,
    entities: &'a [Entity],
    backgrounds: &'a [Background],
    out: &'a Path,
}

impl Ctx<'_> {
    fn run(&self, job: &Job) -> Result<JobOutcome> {
        let mut failures = Vec::new();
        let budget = self.config.resample_budget;
        for attempt in 0..budget {
            let last = attempt + 1 == budget;
            match self.attempt(job, attempt, last) {
                Ok((image, None)) => {
                    return Ok(JobOutcome {
                        image: Some(image),
                        failures,
                    })
                }
                Ok((image, Some(reason))) => {
                    failures.push(self.failure(job, attempt, reason));
                    if last {
                        return Ok(JobOutcome {
                            image: Some(image),
                            failures,
                        });
                    }
                }
                Err(
                    e @ (ForgeError::PlacementInfeasible { .. }
                    | ForgeError::NoTrueRelation(_)
                    | ForgeError::UngroundableExpression { .. }),
                ) => {
                    failures.push(self.failure(job, attempt, e.to_string()));
                }
                Err(e) => return Err(e),
            }
        }
        log::warn!(
            "{}: no composite after {budget} attempts",
            image_id(self.split, job.index)
        );
        Ok(JobOutcome { image: None, failures })
    }

    fn failure(&self, job: &Job, attempt: usize, reason: String) -> BuildFailure {
        log::debug!("{} attempt {attempt}: {reason}", image_id(self.split, job.index));
        BuildFailure {
            split: self.split,
            index: job.index,
            attempt,
            reason,
        }
    }

    /// One sampled composite. Returns the record and, when some entity could
    /// not be described, the reason. Files are written only for records that
    /// are kept.
    fn attempt(&self, job: &Job, attempt: usize, last: bool) -> Result<(ImageRecord, Option<String>)> {
        let seed = self.config.seed();
        let split_tag = hash_str(self.split.as_str());
        let mut rng = rng_for(seed, &[split_tag, job.index as u64, attempt as u64]);
        let relation = self.config.relation_ratio.sample(&mut rng);
        let count = if relation.is_occluding() {
            2
        } else {
            rng.gen_range(2..=3)
        };
        let candidates: Vec<usize> = match &job.members {
            Some(m) => m.clone(),
            None => (0..self.entities.len()).collect(),
        };
        let count = count.min(candidates.len());
        if count < 2 {
            return Err(ForgeError::PlacementInfeasible {
                relation: relation.to_string(),
                reason: "fewer than two distinct entities available".into(),
            });
        }
        let chosen: Vec<&Entity> = sample(&mut rng, candidates.len(), count)
            .into_iter()
            .map(|k| &self.entities[candidates[k]])
            .collect();
        if self.backgrounds.is_empty() {
            return Err(ForgeError::InvalidConfig("no backgrounds".into()));
        }
        let bg = &self.backgrounds[rng.gen_range(0..self.backgrounds.len())];
        let background = match self.config.canvas {
            Some([w, h]) if bg.image.dims() != (w, h) => bg.image.resize(w, h),
            _ => bg.image.clone(),
        };
        let layout = plan_layout(&chosen, relation, background.dims(), &self.config.layout, &mut rng)?;
        let comp = composite(&layout, &chosen, &background)?;
        let scene = SceneMeta::from_entities(&layout, &chosen)?;

        let id = image_id(self.split, job.index);
        let mut problem = None;
        let mut records = Vec::with_capacity(chosen.len());
        for (pos, placement) in layout.placements.iter().enumerate() {
            let entity = chosen
                .iter()
                .find(|e| e.id == placement.entity_id)
                .expect("layout places chosen entities");
            let mut erng = rng_for(seed, &[split_tag, job.index as u64, attempt as u64, 1 + pos as u64]);
            let keyword = self.grammar.keyword_for(entity, &mut erng);
            let (expressions, dropped) = match self.grammar.generate_suite(&scene, &entity.id, &mut erng) {
                Ok(suite) => (suite, None),
                Err(e) => {
                    problem.get_or_insert_with(|| format!("{}: {e}", entity.id));
                    (Vec::new(), Some(e.to_string()))
                }
            };
            records.push(EntityRecord {
                entity_id: entity.id.clone(),
                visible_alpha: format!("mattes/{id}/{}.png", entity.id),
                category: entity.category.clone(),
                class: entity.class,
                synonyms: entity.synonyms.clone(),
                attributes: entity.attributes.clone(),
                keyword,
                expressions,
                dropped,
            });
        }
        let keyword_ok = keyword_unambiguous(records.iter().map(|r| &r.synonyms));
        let record = ImageRecord {
            image_id: id.clone(),
            split: self.split,
            composite: format!("images/{id}.png"),
            background_id: bg.id.clone(),
            relation,
            layout,
            entities: records,
            keyword_ok,
        };
        if problem.is_none() || last {
            comp.image.save(&self.out.join(&record.composite))?;
            for (e, alpha) in record.entities.iter().zip(&comp.visible_alphas) {
                alpha.save(&self.out.join(&e.visible_alpha))?;
            }
        }
        Ok((record, problem))
    }
}

/// Builds both splits into `out` (`images/`, `mattes/`, `manifest.json`)
/// using `workers` threads. Output does not depend on `workers`.
pub fn build_dataset(
    config: &BuildConfig,
    grammar: &Grammar,
    pools: &EntityPools,
    backgrounds: &[Background],
    out: &Path,
    workers: usize,
) -> Result<DatasetManifest> {
    config.validate()?;
    pools.validate()?;
    if backgrounds.is_empty() {
        return Err(ForgeError::InvalidConfig("background pool is empty".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| ForgeError::InvalidConfig(format!("thread pool: {e}")))?;
    let mut manifest = DatasetManifest {
        master_seed: config.seed(),
        ..Default::default()
    };
    for split in Split::ALL {
        let entities = pools.get(split);
        if entities.is_empty() {
            log::warn!("{split}: no entities, split skipped");
            continue;
        }
        let jobs = plan_split(config, split, entities)?.jobs();
        let ctx = Ctx {
            config,
            grammar,
            split,
            entities,
            backgrounds,
            out,
        };
        log::info!("{split}: {} composites", jobs.len());
        let outcomes: Vec<JobOutcome> =
            pool.install(|| jobs.par_iter().map(|job| ctx.run(job)).collect::<Result<_>>())?;
        for outcome in outcomes {
            manifest.failures.extend(outcome.failures);
            manifest.images.extend(outcome.image);
        }
    }
    manifest.save(&out.join("manifest.json"))?;
    Ok(manifest)
}

/// Every PNG in `dir`, sorted by file name; ids are the file stems.
pub fn load_backgrounds(dir: &Path) -> Result<Vec<Background>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| ForgeError::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| ForgeError::io(dir, err)))
        .collect::<Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")));
    paths.sort();
    paths
        .iter()
        .map(|p| {
            Ok(Background {
                id: p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string(),
                image: RgbRaster::load(p)?,
            })
        })
        .collect()
}
