use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::compose::Relation;
use crate::error::{ForgeError, Result};

/// Per-class entity counts: humans, animals, objects.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub humans: usize,
    pub animals: usize,
    pub objects: usize,
}

impl ClassCounts {
    pub fn new(humans: usize, animals: usize, objects: usize) -> Self {
        ClassCounts {
            humans,
            animals,
            objects,
        }
    }

    pub fn as_array(self) -> [usize; 3] {
        [self.humans, self.animals, self.objects]
    }

    pub fn total(self) -> usize {
        self.humans + self.animals + self.objects
    }
}

/// Group-count unit `u` of the 5:1:1 balancing. `"auto"` or a positive integer
/// in JSON.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BalanceUnit {
    Fixed(usize),
    #[default]
    #[serde(with = "auto_tag")]
    Auto,
}

mod auto_tag {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("auto")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let s = String::deserialize(d)?;
        if s.eq_ignore_ascii_case("auto") {
            Ok(())
        } else {
            Err(de::Error::custom(format!("expected \"auto\" or an integer, got {s:?}")))
        }
    }
}

/// Smallest unit that needs no entity removed: `max(ceil(H/5), A, O)`.
pub fn auto_unit(counts: ClassCounts) -> usize {
    counts.humans.div_ceil(5).max(counts.animals).max(counts.objects)
}

/// Which entities to copy so the pool becomes `(5u, u, u)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuplicationPlan {
    pub unit: usize,
    pub counts: ClassCounts,
    pub totals: ClassCounts,
    /// Per class (humans, animals, objects), indices of the extra copies in
    /// the order they are appended.
    pub duplicates: [Vec<usize>; 3],
}

impl DuplicationPlan {
    pub fn is_identity(&self) -> bool {
        self.duplicates.iter().all(Vec::is_empty)
    }

    /// Originals in order followed by the duplicates, per class.
    pub fn expand(&self) -> [Vec<usize>; 3] {
        let counts = self.counts.as_array();
        std::array::from_fn(|c| (0..counts[c]).chain(self.duplicates[c].iter().copied()).collect())
    }
}

/// Duplicates entities round-robin over a seeded order of each class until
/// the totals are `(5u, u, u)`.
pub fn balance<R: Rng>(counts: ClassCounts, unit: BalanceUnit, rng: &mut R) -> Result<DuplicationPlan> {
    let minimum = auto_unit(counts).max(1);
    let u = match unit {
        BalanceUnit::Auto => minimum,
        BalanceUnit::Fixed(u) if u < minimum => return Err(ForgeError::UnitTooSmall { unit: u, minimum }),
        BalanceUnit::Fixed(u) => u,
    };
    let totals = ClassCounts::new(5 * u, u, u);
    let have = counts.as_array();
    if have.contains(&0) {
        return Err(ForgeError::ImbalancedPool {
            humans: counts.humans,
            animals: counts.animals,
            objects: counts.objects,
        });
    }
    let want = totals.as_array();
    let duplicates = std::array::from_fn(|c| {
        let mut order: Vec<usize> = (0..have[c]).collect();
        order.shuffle(rng);
        order.iter().copied().cycle().take(want[c] - have[c]).collect()
    });
    Ok(DuplicationPlan {
        unit: u,
        counts,
        totals,
        duplicates,
    })
}

/// Five humans, one animal and one object, as indices into the balanced
/// class pools.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Group {
    pub humans: [usize; 5],
    pub animal: usize,
    pub object: usize,
}

/// Splits a `(5u, u, u)` pool into `u` disjoint groups after a seeded
/// shuffle of each class.
pub fn make_groups<R: Rng>(pool: [&[usize]; 3], rng: &mut R) -> Result<Vec<Group>> {
    let [h, a, o] = pool;
    if a.is_empty() || a.len() != o.len() || h.len() != 5 * a.len() {
        return Err(ForgeError::ImbalancedPool {
            humans: h.len(),
            animals: a.len(),
            objects: o.len(),
        });
    }
    let mut shuffled = [h.to_vec(), a.to_vec(), o.to_vec()];
    for class in &mut shuffled {
        class.shuffle(rng);
    }
    let [h, a, o] = shuffled;
    Ok(h.chunks_exact(5)
        .zip(a)
        .zip(o)
        .map(|((humans, animal), object)| Group {
            humans: humans.try_into().expect("chunk of 5"),
            animal,
            object,
        })
        .collect())
}

/// Weights over {left/right, top/bottom, in front of/behind}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationRatio(pub [u32; 3]);

impl Default for RelationRatio {
    fn default() -> Self {
        RelationRatio([7, 2, 1])
    }
}

impl RelationRatio {
    pub fn validate(&self) -> Result<()> {
        if self.0.contains(&0) {
            return Err(ForgeError::InvalidConfig(format!(
                "relation ratio {:?} must be positive",
                self.0
            )));
        }
        Ok(())
    }

    /// Picks a pair by weight, then either direction with equal odds.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Relation {
        const PAIRS: [[Relation; 2]; 3] = [
            [Relation::Left, Relation::Right],
            [Relation::Top, Relation::Bottom],
            [Relation::InFrontOf, Relation::Behind],
        ];
        let total: u32 = self.0.iter().sum();
        let mut roll = rng.gen_range(0..total);
        let mut pair = 2;
        for (k, &w) in self.0.iter().enumerate() {
            if roll < w {
                pair = k;
                break;
            }
            roll -= w;
        }
        PAIRS[pair][rng.gen_range(0..2)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_for;

    #[test]
    fn paper_units() {
        let mut rng = rng_for(0, &[]);
        let train = balance(ClassCounts::new(9186, 1800, 813), BalanceUnit::Fixed(2110), &mut rng).unwrap();
        assert_eq!(train.totals, ClassCounts::new(10550, 2110, 2110));
        assert_eq!(train.expand()[2].len(), 2110);
        let test = balance(ClassCounts::new(977, 200, 211), BalanceUnit::Fixed(211), &mut rng).unwrap();
        assert_eq!(test.totals, ClassCounts::new(1055, 211, 211));
        assert_eq!(auto_unit(ClassCounts::new(9186, 1800, 813)), 1838);
    }

    #[test]
    fn identity_and_too_small() {
        let mut rng = rng_for(0, &[]);
        let plan = balance(ClassCounts::new(15, 3, 3), BalanceUnit::Auto, &mut rng).unwrap();
        assert!(plan.is_identity());
        assert!(matches!(
            balance(ClassCounts::new(15, 3, 3), BalanceUnit::Fixed(2), &mut rng),
            Err(ForgeError::UnitTooSmall { unit: 2, minimum: 3 })
        ));
    }

    #[test]
    fn duplicates_are_round_robin() {
        let mut rng = rng_for(4, &[]);
        let plan = balance(ClassCounts::new(5, 2, 1), BalanceUnit::Fixed(5), &mut rng).unwrap();
        let objects = &plan.duplicates[2];
        assert_eq!(objects, &vec![0, 0, 0, 0]);
        let humans = plan.expand()[0].clone();
        let mut counts = [0; 5];
        for h in humans {
            counts[h] += 1;
        }
        assert_eq!(counts, [5; 5]);
        let animals = &plan.duplicates[1];
        assert_eq!(animals.len(), 3);
        assert_ne!(animals[0], animals[1]);
        assert_eq!(animals[0], animals[2]);
    }

    #[test]
    fn groups() {
        let mut rng = rng_for(1, &[]);
        let h: Vec<usize> = (0..15).collect();
        let a: Vec<usize> = (0..3).collect();
        let groups = make_groups([&h, &a, &a], &mut rng).unwrap();
        assert_eq!(groups.len(), 3);
        let mut seen: Vec<usize> = groups.iter().flat_map(|g| g.humans).collect();
        seen.sort();
        assert_eq!(seen, h);
        assert!(matches!(
            make_groups([&h[..14], &a, &a], &mut rng),
            Err(ForgeError::ImbalancedPool { humans: 14, .. })
        ));
    }

    #[test]
    fn unit_json() {
        assert_eq!(
            serde_json::from_str::<BalanceUnit>("\"auto\"").unwrap(),
            BalanceUnit::Auto
        );
        assert_eq!(
            serde_json::from_str::<BalanceUnit>("211").unwrap(),
            BalanceUnit::Fixed(211)
        );
        assert_eq!(serde_json::to_string(&BalanceUnit::Auto).unwrap(), "\"auto\"");
        assert!(serde_json::from_str::<BalanceUnit>("\"some\"").is_err());
    }
}
