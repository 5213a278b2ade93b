//! SAD, MSE and MAD over alpha mattes, averaged per entity or per image.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{DatasetManifest, Setting};
use crate::error::{ForgeError, Result};
use crate::expr::ExpressionKind;
use crate::raster::AlphaMatte;

pub const DEFAULT_SAD_SCALE: f64 = 1e-3;

/// `(sad_raw, mse, mad)` of a prediction against ground truth.
pub fn entity_metrics(gt: &AlphaMatte, pred: &AlphaMatte) -> Result<(f64, f64, f64)> {
    if gt.dims() != pred.dims() {
        return Err(ForgeError::SizeMismatch {
            expected: gt.dims(),
            actual: pred.dims(),
        });
    }
    for raster in [gt, pred] {
        if let Some((index, &value)) = raster
            .data()
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(ForgeError::RangeViolation { index, value });
        }
    }
    let n = gt.data().len();
    if n == 0 {
        return Ok((0.0, 0.0, 0.0));
    }
    let (mut sad, mut sse) = (0.0f64, 0.0f64);
    for (&g, &p) in gt.data().iter().zip(pred.data()) {
        let d = (g as f64 - p as f64).abs();
        sad += d;
        sse += d * d;
    }
    Ok((sad, sse / n as f64, sad / n as f64))
}

/// One scored prediction. In the expression setting an entity has one record
/// per expression kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub image_id: String,
    pub entity_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ExpressionKind>,
    pub sad_raw: f64,
    pub mse: f64,
    pub mad: f64,
    /// No prediction file was found; scored against all zeros.
    #[serde(default)]
    pub missing: bool,
}

impl MetricRecord {
    fn key(&self) -> (&str, &str, Option<ExpressionKind>) {
        (&self.image_id, &self.entity_id, self.kind)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub sad_scale: f64,
    pub record_count: usize,
    pub image_count: usize,
    /// Means over all records (SAD scaled by `sad_scale`).
    pub sad: f64,
    pub mse: f64,
    pub mad: f64,
    /// Means over images of the per-image record means.
    pub sad_e: f64,
    pub mse_e: f64,
    pub mad_e: f64,
    /// Sorted by image, entity and kind.
    pub records: Vec<MetricRecord>,
}

/// Entity-averaged and image-averaged means. Records are sorted first so
/// the result does not depend on input order.
pub fn aggregate(records: &[MetricRecord], sad_scale: f64) -> Result<MetricReport> {
    if records.is_empty() {
        return Err(ForgeError::EmptyInput);
    }
    let mut records = records.to_vec();
    records.sort_by(|a, b| a.key().cmp(&b.key()));

    let mean3 = |rs: &[&MetricRecord]| {
        let n = rs.len() as f64;
        let (s, m, a) = rs.iter().fold((0.0, 0.0, 0.0), |(s, m, a), r| {
            (s + r.sad_raw * sad_scale, m + r.mse, a + r.mad)
        });
        (s / n, m / n, a / n)
    };
    let all: Vec<&MetricRecord> = records.iter().collect();
    let (sad, mse, mad) = mean3(&all);

    let mut by_image: BTreeMap<&str, Vec<&MetricRecord>> = BTreeMap::new();
    for r in &records {
        by_image.entry(&r.image_id).or_default().push(r);
    }
    let per_image: Vec<(f64, f64, f64)> = by_image.values().map(|rs| mean3(rs)).collect();
    let k = per_image.len() as f64;
    let (sad_e, mse_e, mad_e) = per_image
        .iter()
        .fold((0.0, 0.0, 0.0), |(s, m, a), &(x, y, z)| (s + x, m + y, a + z));

    Ok(MetricReport {
        sad_scale,
        record_count: records.len(),
        image_count: by_image.len(),
        sad,
        mse,
        mad,
        sad_e: sad_e / k,
        mse_e: mse_e / k,
        mad_e: mad_e / k,
        records,
    })
}

fn png_stems(dir: &Path) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| ForgeError::io(dir, e))? {
        let path = entry.map_err(|e| ForgeError::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.push(stem.to_string());
            }
        }
    }
    Ok(out)
}

/// Every prediction under `pred_dir` must name an image and entity of the
/// manifest (`<image_id>/<entity_id>.png` or `<image_id>/<entity_id>_<KIND>.png`).
fn check_prediction_ids(pred_dir: &Path, manifest: &DatasetManifest) -> Result<()> {
    let known: BTreeMap<&str, BTreeSet<&str>> = manifest
        .images
        .iter()
        .map(|im| {
            (
                im.image_id.as_str(),
                im.entities.iter().map(|e| e.entity_id.as_str()).collect(),
            )
        })
        .collect();
    for entry in std::fs::read_dir(pred_dir).map_err(|e| ForgeError::io(pred_dir, e))? {
        let path = entry.map_err(|e| ForgeError::io(pred_dir, e))?.path();
        if !path.is_dir() {
            continue;
        }
        let name = path
            .file_name()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        let Some(entities) = known.get(name.as_str()) else {
            return Err(ForgeError::ManifestMismatch(format!("unknown image id {name}")));
        };
        for stem in png_stems(&path)? {
            let entity = ExpressionKind::SUITE
                .iter()
                .find_map(|k| stem.strip_suffix(&format!("_{k}")))
                .filter(|base| entities.contains(base))
                .unwrap_or(&stem);
            if !entities.contains(entity) {
                return Err(ForgeError::ManifestMismatch(format!(
                    "unknown entity id {stem} in image {name}"
                )));
            }
        }
    }
    Ok(())
}

/// Scores `pred_dir` against the ground-truth mattes of a manifest stored in
/// `root`. Missing predictions count as all-zero mattes. 8-bit predictions
/// decode as `v / 255`.
pub fn evaluate_run(
    pred_dir: &Path,
    manifest: &DatasetManifest,
    root: &Path,
    setting: Setting,
    sad_scale: f64,
) -> Result<MetricReport> {
    check_prediction_ids(pred_dir, manifest)?;
    let mut jobs: Vec<(String, String, Option<ExpressionKind>, PathBuf)> = Vec::new();
    for im in setting.images(manifest) {
        for e in im.entities.iter().filter(|e| !e.is_dropped()) {
            let gt = root.join(&e.visible_alpha);
            match setting {
                Setting::Keyword => jobs.push((im.image_id.clone(), e.entity_id.clone(), None, gt)),
                Setting::Expression => {
                    for r in &e.expressions {
                        jobs.push((im.image_id.clone(), e.entity_id.clone(), Some(r.kind), gt.clone()));
                    }
                }
            }
        }
    }
    let records = jobs
        .par_iter()
        .map(|(image_id, entity_id, kind, gt_path)| {
            let gt = AlphaMatte::load(gt_path)?;
            let dir = pred_dir.join(image_id);
            let candidates: Vec<PathBuf> = kind
                .map(|k| dir.join(format!("{entity_id}_{k}.png")))
                .into_iter()
                .chain([dir.join(format!("{entity_id}.png"))])
                .collect();
            let (pred, missing) = match candidates.iter().find(|p| p.is_file()) {
                Some(p) => (AlphaMatte::load(p)?, false),
                None => {
                    log::warn!("no prediction for {image_id}/{entity_id}, scoring as zeros");
                    (AlphaMatte::zeros(gt.width(), gt.height()), true)
                }
            };
            let (sad_raw, mse, mad) = entity_metrics(&gt, &pred)?;
            Ok(MetricRecord {
                image_id: image_id.clone(),
                entity_id: entity_id.clone(),
                kind: *kind,
                sad_raw,
                mse,
                mad,
                missing,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    aggregate(&records, sad_scale)
}

impl MetricReport {
    pub fn save_json(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| ForgeError::io(dir, e))?;
        }
        let text = serde_json::to_string_pretty(self).map_err(|e| ForgeError::json(path, e))?;
        std::fs::write(path, text + "\n").map_err(|e| ForgeError::io(path, e))
    }

    /// One row per record.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| ForgeError::io(dir, e))?;
        }
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["image_id", "entity_id", "kind", "sad_raw", "mse", "mad", "missing"])?;
        for r in &self.records {
            w.write_record([
                r.image_id.clone(),
                r.entity_id.clone(),
                r.kind.map(|k| k.to_string()).unwrap_or_default(),
                r.sad_raw.to_string(),
                r.mse.to_string(),
                r.mad.to_string(),
                r.missing.to_string(),
            ])?;
        }
        w.flush().map_err(|e| ForgeError::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(image: &str, entity: &str, sad_raw: f64) -> MetricRecord {
        MetricRecord {
            image_id: image.into(),
            entity_id: entity.into(),
            kind: None,
            sad_raw,
            mse: sad_raw / 100.0,
            mad: sad_raw / 10.0,
            missing: false,
        }
    }

    #[test]
    fn closed_form() {
        let g = AlphaMatte::filled(10, 10, 1.0);
        let p = AlphaMatte::filled(10, 10, 0.5);
        assert_eq!(entity_metrics(&g, &p).unwrap(), (50.0, 0.25, 0.5));
        assert_eq!(entity_metrics(&g, &g).unwrap(), (0.0, 0.0, 0.0));
    }

    #[test]
    fn errors() {
        let g = AlphaMatte::filled(2, 2, 1.0);
        assert!(matches!(
            entity_metrics(&g, &AlphaMatte::zeros(3, 2)),
            Err(ForgeError::SizeMismatch { .. })
        ));
        let mut bad = AlphaMatte::zeros(2, 2);
        bad.data_mut()[3] = 1.5;
        assert!(matches!(
            entity_metrics(&g, &bad),
            Err(ForgeError::RangeViolation { index: 3, .. })
        ));
        assert!(matches!(aggregate(&[], 1.0), Err(ForgeError::EmptyInput)));
    }

    #[test]
    fn entity_vs_image_means() {
        let r = aggregate(&[rec("i1", "a", 10.0), rec("i2", "b", 4.0), rec("i2", "c", 4.0)], 1.0).unwrap();
        assert_eq!(r.sad, 6.0);
        assert_eq!(r.sad_e, 7.0);
        let single = aggregate(&[rec("i1", "a", 10.0), rec("i2", "b", 4.0)], 1.0).unwrap();
        assert_eq!(
            (single.sad, single.mse, single.mad),
            (single.sad_e, single.mse_e, single.mad_e)
        );
    }
}
