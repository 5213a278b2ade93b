use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::Entity;
use crate::error::{ForgeError, Result};

/// Position relationships. The first six can be layout facts; `Middle`
/// (absolute only) and `Beside` (relative only, left or right) exist for
/// expressions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Left,
    Right,
    Top,
    Bottom,
    InFrontOf,
    Behind,
    Middle,
    Beside,
}

impl Relation {
    pub const FACTS: [Relation; 6] = [
        Relation::Left,
        Relation::Right,
        Relation::Top,
        Relation::Bottom,
        Relation::InFrontOf,
        Relation::Behind,
    ];

    pub const ABSOLUTE: [Relation; 7] = [
        Relation::Left,
        Relation::Right,
        Relation::Middle,
        Relation::Top,
        Relation::Bottom,
        Relation::InFrontOf,
        Relation::Behind,
    ];

    pub fn is_fact(self) -> bool {
        !matches!(self, Relation::Middle | Relation::Beside)
    }

    pub fn is_occluding(self) -> bool {
        matches!(self, Relation::InFrontOf | Relation::Behind)
    }

    pub fn inverse(self) -> Relation {
        match self {
            Relation::Left => Relation::Right,
            Relation::Right => Relation::Left,
            Relation::Top => Relation::Bottom,
            Relation::Bottom => Relation::Top,
            Relation::InFrontOf => Relation::Behind,
            Relation::Behind => Relation::InFrontOf,
            Relation::Middle => Relation::Middle,
            Relation::Beside => Relation::Beside,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Left => "left",
            Relation::Right => "right",
            Relation::Top => "top",
            Relation::Bottom => "bottom",
            Relation::InFrontOf => "in_front_of",
            Relation::Behind => "behind",
            Relation::Middle => "middle",
            Relation::Beside => "beside",
        }
    }

    pub fn parse(s: &str) -> Option<Relation> {
        Relation::FACTS
            .into_iter()
            .chain([Relation::Middle, Relation::Beside])
            .find(|r| r.as_str() == s)
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub entity_id: String,
    pub scale: f64,
    /// Scaled size in pixels, `round(original * scale)`.
    pub width: u32,
    pub height: u32,
    pub offset_x: u32,
    pub offset_y: u32,
    pub z: i32,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BBox {
    pub x0: u32,
    pub y0: u32,
    /// Exclusive.
    pub x1: u32,
    pub y1: u32,
}

impl BBox {
    pub fn area(&self) -> u64 {
        (self.x1 - self.x0) as u64 * (self.y1 - self.y0) as u64
    }

    pub fn intersection(&self, other: &BBox) -> u64 {
        let w = self.x1.min(other.x1).saturating_sub(self.x0.max(other.x0));
        let h = self.y1.min(other.y1).saturating_sub(self.y0.max(other.y0));
        w as u64 * h as u64
    }

    /// Intersection over the smaller of the two areas.
    pub fn intersection_over_min(&self, other: &BBox) -> f64 {
        self.intersection(other) as f64 / self.area().min(other.area()) as f64
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x0 + self.x1) as f64 / 2.0, (self.y0 + self.y1) as f64 / 2.0)
    }
}

impl Placement {
    pub fn bbox(&self) -> BBox {
        BBox {
            x0: self.offset_x,
            y0: self.offset_y,
            x1: self.offset_x + self.width,
            y1: self.offset_y + self.height,
        }
    }
}

/// `subject relation object`, indices into the placements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationFact {
    pub subject: usize,
    pub object: usize,
    pub relation: Relation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneLayout {
    pub canvas_w: u32,
    pub canvas_h: u32,
    pub placements: Vec<Placement>,
    pub relation_facts: Vec<RelationFact>,
}

impl SceneLayout {
    pub fn len(&self) -> usize {
        self.placements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.placements.is_empty()
    }

    pub fn index_of(&self, entity_id: &str) -> Option<usize> {
        self.placements.iter().position(|p| p.entity_id == entity_id)
    }

    /// Checks the structural invariants: entity count, distinct z, boxes
    /// inside the canvas, facts only over the six spatial relations.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ForgeError::InvalidLayout(m));
        let n = self.placements.len();
        if !(2..=3).contains(&n) {
            return bad(format!("{n} placements"));
        }
        if self.relation_facts.iter().any(|f| f.relation.is_occluding()) && n != 2 {
            return bad("front/behind layouts must have exactly two entities".into());
        }
        for (i, p) in self.placements.iter().enumerate() {
            if p.width == 0 || p.height == 0 {
                return bad(format!("placement {i} is empty"));
            }
            if p.offset_x + p.width > self.canvas_w || p.offset_y + p.height > self.canvas_h {
                return bad(format!("placement {i} leaves the canvas"));
            }
            if self.placements[..i].iter().any(|q| q.z == p.z) {
                return bad(format!("duplicate z {}", p.z));
            }
        }
        for f in &self.relation_facts {
            if !f.relation.is_fact() || f.subject >= n || f.object >= n || f.subject == f.object {
                return bad(format!("bad relation fact {f:?}"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LayoutConfig {
    /// Scaled max-dimension as a fraction of the canvas min-dimension.
    pub min_scale_frac: f64,
    pub max_scale_frac: f64,
    /// Intersection-over-min-area band for front/behind.
    pub min_overlap: f64,
    pub max_overlap: f64,
    pub max_attempts: usize,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        LayoutConfig {
            min_scale_frac: 0.35,
            max_scale_frac: 0.6,
            min_overlap: 0.15,
            max_overlap: 0.5,
            max_attempts: 200,
        }
    }
}

impl LayoutConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.min_scale_frac > 0.0
            && self.min_scale_frac <= self.max_scale_frac
            && self.max_scale_frac <= 1.0
            && self.min_overlap > 0.0
            && self.min_overlap <= self.max_overlap
            && self.max_overlap <= 1.0
            && self.max_attempts > 0;
        if ok {
            Ok(())
        } else {
            Err(ForgeError::InvalidConfig(format!("layout config {self:?}")))
        }
    }
}

const POSITION_TRIES: usize = 64;

/// Places `entities` (the first is the subject, the second the object of
/// `relation`, an optional third goes into free space) on a `canvas`.
pub fn plan_layout<R: Rng>(
    entities: &[&Entity],
    relation: Relation,
    canvas: (u32, u32),
    config: &LayoutConfig,
    rng: &mut R,
) -> Result<SceneLayout> {
    config.validate()?;
    let infeasible = |reason: &str| ForgeError::PlacementInfeasible {
        relation: relation.to_string(),
        reason: reason.to_string(),
    };
    if !relation.is_fact() {
        return Err(infeasible("only the six spatial relations can be laid out"));
    }
    let n = entities.len();
    if !(2..=3).contains(&n) || (relation.is_occluding() && n != 2) {
        return Err(infeasible(&format!("{n} entities")));
    }
    let (cw, ch) = canvas;
    let min_dim = cw.min(ch) as f64;
    if (min_dim * config.min_scale_frac).round() < 1.0 {
        return Err(infeasible("canvas too small"));
    }

    for _ in 0..config.max_attempts {
        let mut placements: Vec<Placement> = entities.iter().map(|e| sample_size(e, min_dim, config, rng)).collect();
        if placements.iter().any(|p| p.width > cw || p.height > ch) {
            continue;
        }
        let placed_pair = match relation {
            Relation::Left | Relation::Right | Relation::Top | Relation::Bottom => {
                place_apart(&mut placements, relation, canvas, rng)
            }
            _ => place_overlapping(&mut placements, canvas, config, rng),
        };
        if !placed_pair {
            continue;
        }
        if n == 3 && !place_free(&mut placements, canvas, rng) {
            continue;
        }
        match relation {
            Relation::InFrontOf => {
                placements[0].z = 1;
                placements[1].z = 0;
            }
            Relation::Behind => {
                placements[0].z = 0;
                placements[1].z = 1;
            }
            _ => {
                for (i, p) in placements.iter_mut().enumerate() {
                    p.z = i as i32;
                }
            }
        }
        let layout = SceneLayout {
            canvas_w: cw,
            canvas_h: ch,
            placements,
            relation_facts: vec![
                RelationFact {
                    subject: 0,
                    object: 1,
                    relation,
                },
                RelationFact {
                    subject: 1,
                    object: 0,
                    relation: relation.inverse(),
                },
            ],
        };
        debug_assert!(layout.validate().is_ok());
        debug_assert!(layout.relation_facts.iter().all(|f| eval_relation(
            &layout,
            f.subject,
            Some(f.object),
            f.relation
        )
        .unwrap()));
        return Ok(layout);
    }
    Err(infeasible("retry budget exhausted"))
}

fn sample_size<R: Rng>(e: &Entity, min_dim: f64, config: &LayoutConfig, rng: &mut R) -> Placement {
    let frac = if config.max_scale_frac > config.min_scale_frac {
        rng.gen_range(config.min_scale_frac..=config.max_scale_frac)
    } else {
        config.min_scale_frac
    };
    let scale = frac * min_dim / e.width().max(e.height()) as f64;
    Placement {
        entity_id: e.id.clone(),
        scale,
        width: ((e.width() as f64 * scale).round() as u32).max(1),
        height: ((e.height() as f64 * scale).round() as u32).max(1),
        offset_x: 0,
        offset_y: 0,
        z: 0,
    }
}

/// Disjoint placement of entities 0 and 1 ordered along one axis.
fn place_apart<R: Rng>(ps: &mut [Placement], relation: Relation, canvas: (u32, u32), rng: &mut R) -> bool {
    let (first, second) = match relation {
        Relation::Left | Relation::Top => (0, 1),
        _ => (1, 0),
    };
    let horizontal = matches!(relation, Relation::Left | Relation::Right);
    let (extent, cross) = if horizontal { canvas } else { (canvas.1, canvas.0) };
    let len = |p: &Placement| if horizontal { p.width } else { p.height };
    let across = |p: &Placement| if horizontal { p.height } else { p.width };

    let (a, b) = (len(&ps[first]), len(&ps[second]));
    if a + b > extent {
        return false;
    }
    let pos_a = rng.gen_range(0..=extent - a - b);
    let pos_b = rng.gen_range(pos_a + a..=extent - b);
    for (idx, pos) in [(first, pos_a), (second, pos_b)] {
        let c = rng.gen_range(0..=cross - across(&ps[idx]));
        if horizontal {
            ps[idx].offset_x = pos;
            ps[idx].offset_y = c;
        } else {
            ps[idx].offset_y = pos;
            ps[idx].offset_x = c;
        }
    }
    true
}

/// Places entity 1 anywhere and entity 0 so that the boxes overlap within the
/// configured band.
fn place_overlapping<R: Rng>(ps: &mut [Placement], (cw, ch): (u32, u32), config: &LayoutConfig, rng: &mut R) -> bool {
    ps[1].offset_x = rng.gen_range(0..=cw - ps[1].width);
    ps[1].offset_y = rng.gen_range(0..=ch - ps[1].height);
    let other = ps[1].bbox();
    let (w, h) = (ps[0].width, ps[0].height);
    let xs = (other.x0 + 1).saturating_sub(w)..=(other.x1 - 1).min(cw - w);
    let ys = (other.y0 + 1).saturating_sub(h)..=(other.y1 - 1).min(ch - h);
    if xs.is_empty() || ys.is_empty() {
        return false;
    }
    for _ in 0..POSITION_TRIES * 4 {
        ps[0].offset_x = rng.gen_range(xs.clone());
        ps[0].offset_y = rng.gen_range(ys.clone());
        let iom = ps[0].bbox().intersection_over_min(&other);
        if (config.min_overlap..=config.max_overlap).contains(&iom) {
            return true;
        }
    }
    false
}

/// Places entity 2 where it overlaps neither of the first two boxes.
fn place_free<R: Rng>(ps: &mut [Placement], (cw, ch): (u32, u32), rng: &mut R) -> bool {
    let taken = [ps[0].bbox(), ps[1].bbox()];
    for _ in 0..POSITION_TRIES {
        ps[2].offset_x = rng.gen_range(0..=cw - ps[2].width);
        ps[2].offset_y = rng.gen_range(0..=ch - ps[2].height);
        let b = ps[2].bbox();
        if taken.iter().all(|t| t.intersection(&b) == 0) {
            return true;
        }
    }
    false
}

/// Shared relation semantics for generation and grounding.
///
/// Relative form (`j = Some`): box centers are compared (`left`/`right` on x,
/// `top`/`bottom` on y); `in_front_of`/`behind` compare z and need a nonzero
/// box overlap; `beside` is left or right.
///
/// Absolute form (`j = None`): the entity must be strictly extreme among all
/// placements (`middle` means strictly nearest to the canvas center;
/// `in_front_of`/`behind` strictly highest/lowest z while overlapping
/// another entity).
pub fn eval_relation(layout: &SceneLayout, i: usize, j: Option<usize>, relation: Relation) -> Result<bool> {
    let n = layout.placements.len();
    for idx in std::iter::once(i).chain(j) {
        if idx >= n {
            return Err(ForgeError::IndexOutOfRange { index: idx, len: n });
        }
    }
    let bbox = |k: usize| layout.placements[k].bbox();
    let center = |k: usize| bbox(k).center();
    let z = |k: usize| layout.placements[k].z;
    let overlaps = |a: usize, b: usize| bbox(a).intersection(&bbox(b)) > 0;

    let Some(j) = j else {
        let others = || (0..n).filter(move |&k| k != i);
        let (cx, cy) = center(i);
        let (mx, my) = (layout.canvas_w as f64 / 2.0, layout.canvas_h as f64 / 2.0);
        let dist = |k: usize| {
            let (x, y) = center(k);
            (x - mx).hypot(y - my)
        };
        return Ok(match relation {
            Relation::Left => others().all(|k| cx < center(k).0),
            Relation::Right => others().all(|k| cx > center(k).0),
            Relation::Top => others().all(|k| cy < center(k).1),
            Relation::Bottom => others().all(|k| cy > center(k).1),
            Relation::Middle => others().all(|k| dist(i) < dist(k)),
            Relation::InFrontOf => others().all(|k| z(i) > z(k)) && others().any(|k| overlaps(i, k)),
            Relation::Behind => others().all(|k| z(i) < z(k)) && others().any(|k| overlaps(i, k)),
            Relation::Beside => false,
        });
    };
    if i == j {
        return Ok(false);
    }
    let ((xi, yi), (xj, yj)) = (center(i), center(j));
    Ok(match relation {
        Relation::Left => xi < xj,
        Relation::Right => xi > xj,
        Relation::Top => yi < yj,
        Relation::Bottom => yi > yj,
        Relation::InFrontOf => z(i) > z(j) && overlaps(i, j),
        Relation::Behind => z(i) < z(j) && overlaps(i, j),
        Relation::Beside => xi != xj,
        Relation::Middle => false,
    })
}
