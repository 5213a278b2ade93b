use std::collections::HashMap;

use super::layout::SceneLayout;
use crate::catalog::Entity;
use crate::error::{ForgeError, Result};
use crate::raster::{quantize_u8, resample_bilinear, AlphaMatte, RgbRaster};

/// One entity resampled into canvas coordinates. Outside its box the
/// coverage is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub alpha: AlphaMatte,
    /// Interleaved RGB in `[0, 255]`.
    pub color: Vec<f32>,
}

#[derive(Clone, Debug)]
pub struct Composite {
    pub image: RgbRaster,
    /// Unquantized composite, interleaved RGB in `[0, 255]`.
    pub image_f32: Vec<f32>,
    /// Index-aligned with `layout.placements`.
    pub visible_alphas: Vec<AlphaMatte>,
    pub layers: Vec<Layer>,
}

/// Resamples each placed entity (bilinear) into a canvas-sized layer.
pub fn render_layers(layout: &SceneLayout, entities: &HashMap<&str, &Entity>) -> Result<Vec<Layer>> {
    let (cw, ch) = (layout.canvas_w, layout.canvas_h);
    layout
        .placements
        .iter()
        .map(|p| {
            let e = entities
                .get(p.entity_id.as_str())
                .ok_or_else(|| ForgeError::InvalidLayout(format!("entity {} not supplied", p.entity_id)))?;
            let alpha = e.alpha.resize(p.width, p.height);
            let planes: Vec<Vec<f32>> = (0..3)
                .map(|c| {
                    let plane: Vec<f32> = e.rgb.data().iter().skip(c).step_by(3).map(|&v| v as f32).collect();
                    resample_bilinear(&plane, e.width(), e.height(), p.width, p.height)
                })
                .collect();
            let mut canvas_alpha = AlphaMatte::zeros(cw, ch);
            let mut color = vec![0.0f32; cw as usize * ch as usize * 3];
            let cw_us = cw as usize;
            for ly in 0..p.height as usize {
                let cy = p.offset_y as usize + ly;
                for lx in 0..p.width as usize {
                    let cx = p.offset_x as usize + lx;
                    let local = ly * p.width as usize + lx;
                    let dst = cy * cw_us + cx;
                    canvas_alpha.data_mut()[dst] = alpha.data()[local];
                    for c in 0..3 {
                        color[dst * 3 + c] = planes[c][local];
                    }
                }
            }
            Ok(Layer {
                alpha: canvas_alpha,
                color,
            })
        })
        .collect()
}

/// Placement indices in ascending z.
pub fn z_order(layout: &SceneLayout) -> Vec<usize> {
    let mut order: Vec<usize> = (0..layout.placements.len()).collect();
    order.sort_by_key(|&i| layout.placements[i].z);
    order
}

/// `visible_i = alpha_i * prod_{z_j > z_i} (1 - alpha_j)`, per pixel.
///
/// The stored values are rounded to `f32`; if rounding pushes a pixel's
/// coverage sum above 1, the largest term is lowered one ulp at a time.
pub fn visible_alphas(layout: &SceneLayout, layers: &[Layer]) -> Vec<AlphaMatte> {
    let (cw, ch) = (layout.canvas_w, layout.canvas_h);
    let order = z_order(layout);
    let mut out: Vec<AlphaMatte> = layers.iter().map(|_| AlphaMatte::zeros(cw, ch)).collect();
    let mut vis = vec![0.0f32; layers.len()];
    for px in 0..cw as usize * ch as usize {
        let mut remaining = 1.0f64;
        for &i in order.iter().rev() {
            let a = layers[i].alpha.data()[px] as f64;
            vis[i] = (a * remaining) as f32;
            remaining *= 1.0 - a;
        }
        while vis.iter().map(|&v| v as f64).sum::<f64>() > 1.0 {
            let k = (0..vis.len())
                .max_by(|&a, &b| vis[a].total_cmp(&vis[b]).then(b.cmp(&a)))
                .expect("at least one layer");
            vis[k] = f32::from_bits(vis[k].to_bits() - 1);
        }
        for (i, &v) in vis.iter().enumerate() {
            out[i].data_mut()[px] = v;
        }
    }
    out
}

/// `pixel = sum_i visible_i * F_i + (1 - sum_i visible_i) * B`, evaluated in
/// `f32` with the sum taken in ascending z.
pub fn blend(layout: &SceneLayout, layers: &[Layer], visible: &[AlphaMatte], background: &RgbRaster) -> Vec<f32> {
    let order = z_order(layout);
    let n = layout.canvas_w as usize * layout.canvas_h as usize;
    let bg = background.data();
    let mut out = vec![0.0f32; n * 3];
    for px in 0..n {
        let mut coverage = 0.0f32;
        let mut acc = [0.0f32; 3];
        for &i in &order {
            let v = visible[i].data()[px];
            coverage += v;
            for c in 0..3 {
                acc[c] += v * layers[i].color[px * 3 + c];
            }
        }
        for c in 0..3 {
            out[px * 3 + c] = acc[c] + (1.0 - coverage) * bg[px * 3 + c] as f32;
        }
    }
    out
}

/// Renders the layout over `background` and returns the composite with each
/// entity's visible matte.
pub fn composite(layout: &SceneLayout, entities: &[&Entity], background: &RgbRaster) -> Result<Composite> {
    if background.dims() != (layout.canvas_w, layout.canvas_h) {
        return Err(ForgeError::SizeMismatch {
            expected: (layout.canvas_w, layout.canvas_h),
            actual: background.dims(),
        });
    }
    layout.validate()?;
    let lookup: HashMap<&str, &Entity> = entities.iter().map(|e| (e.id.as_str(), *e)).collect();
    let layers = render_layers(layout, &lookup)?;
    let visible_alphas = visible_alphas(layout, &layers);
    let image_f32 = blend(layout, &layers, &visible_alphas, background);
    let image = RgbRaster::new(
        layout.canvas_w,
        layout.canvas_h,
        image_f32.iter().map(|&v| quantize_u8(v)).collect(),
    );
    Ok(Composite {
        image,
        image_f32,
        visible_alphas,
        layers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{CategoryTables, EntityMeta, LoadOptions};
    use crate::compose::layout::{Placement, RelationFact};
    use crate::compose::Relation;

    fn entity(id: &str, w: u32, h: u32, rgb: [u8; 3], alpha: f32) -> Entity {
        let meta = EntityMeta {
            id: id.into(),
            category: "vase".into(),
            ..Default::default()
        };
        // annotate at full opacity; translucent mattes have no color pixels
        let mut e = Entity::from_rasters(
            RgbRaster::filled(w, h, rgb),
            AlphaMatte::filled(w, h, 1.0),
            &meta,
            &CategoryTables::default(),
            LoadOptions::default(),
        )
        .unwrap();
        e.alpha = AlphaMatte::filled(w, h, alpha);
        e
    }

    fn place(id: &str, x: u32, y: u32, w: u32, h: u32, z: i32) -> Placement {
        Placement {
            entity_id: id.into(),
            scale: 1.0,
            width: w,
            height: h,
            offset_x: x,
            offset_y: y,
            z,
        }
    }

    #[test]
    fn half_alpha_midpoint() {
        let a = entity("a", 4, 4, [200, 100, 0], 0.5);
        let b = entity("b", 1, 1, [0, 0, 0], 1.0);
        let layout = SceneLayout {
            canvas_w: 8,
            canvas_h: 4,
            placements: vec![place("a", 0, 0, 4, 4, 0), place("b", 7, 3, 1, 1, 1)],
            relation_facts: vec![],
        };
        let bg = RgbRaster::filled(8, 4, [0, 100, 200]);
        let c = composite(&layout, &[&a, &b], &bg).unwrap();
        assert_eq!(c.image.pixel(1, 1), [100, 100, 100]);
        assert_eq!(c.image.pixel(5, 0), [0, 100, 200]);
    }

    #[test]
    fn opaque_front_hides_back() {
        let front = entity("f", 4, 4, [255, 0, 0], 1.0);
        let back = entity("b", 4, 4, [0, 255, 0], 1.0);
        let layout = SceneLayout {
            canvas_w: 8,
            canvas_h: 8,
            placements: vec![place("f", 2, 2, 4, 4, 1), place("b", 0, 0, 4, 4, 0)],
            relation_facts: vec![RelationFact {
                subject: 0,
                object: 1,
                relation: Relation::InFrontOf,
            }],
        };
        let bg = RgbRaster::filled(8, 8, [0, 0, 0]);
        let c = composite(&layout, &[&front, &back], &bg).unwrap();
        // overlap region (2..4, 2..4)
        assert_eq!(c.visible_alphas[1].get(3, 3), 0.0);
        assert_eq!(c.visible_alphas[1].get(1, 1), 1.0);
        assert_eq!(c.visible_alphas[0].get(3, 3), 1.0);
        assert_eq!(c.image.pixel(3, 3), [255, 0, 0]);
    }

    #[test]
    fn background_size_must_match() {
        let a = entity("a", 2, 2, [1, 1, 1], 1.0);
        let b = entity("b", 2, 2, [1, 1, 1], 1.0);
        let layout = SceneLayout {
            canvas_w: 8,
            canvas_h: 8,
            placements: vec![place("a", 0, 0, 2, 2, 0), place("b", 4, 4, 2, 2, 1)],
            relation_facts: vec![],
        };
        let err = composite(&layout, &[&a, &b], &RgbRaster::filled(4, 4, [0; 3]));
        assert!(matches!(err, Err(ForgeError::SizeMismatch { .. })));
    }
}
