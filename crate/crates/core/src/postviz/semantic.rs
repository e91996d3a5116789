use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::manipulation::{mass_inside, PartLabel, PartMask};
use crate::tensor::Heatmap;

/// Heatmap mass per face part. The shares sum to the total mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartRelevance {
    pub mass: BTreeMap<PartLabel, f64>,
    pub pixels: BTreeMap<PartLabel, usize>,
}

impl PartRelevance {
    pub fn compute(h: &Heatmap, parts: &PartMask) -> Result<Self> {
        let mut mass = BTreeMap::new();
        let mut pixels = BTreeMap::new();
        for p in PartLabel::ALL {
            mass.insert(p, mass_inside(h, &parts.indicator(p))?);
            pixels.insert(p, parts.count(p));
        }
        Ok(PartRelevance { mass, pixels })
    }

    /// Mass per pixel of each nonempty part, relative to the uniform level.
    /// A value above 1 means the part draws more than its area share.
    pub fn density(&self) -> BTreeMap<PartLabel, f64> {
        let total: usize = self.pixels.values().sum();
        self.mass
            .iter()
            .filter(|(p, _)| self.pixels[p] > 0)
            .map(|(&p, &m)| (p, m * total as f64 / self.pixels[&p] as f64))
            .collect()
    }

    /// Part with the largest mass; ties go to the lower label code.
    pub fn dominant(&self) -> PartLabel {
        let mut best = PartLabel::Background;
        for (&p, &m) in &self.mass {
            if m > self.mass[&best] {
                best = p;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::face_layout;
    use crate::tensor::Grid;

    #[test]
    fn uniform_mass_proportional_to_area() {
        let g = Grid::new(2, 16, 16).unwrap();
        let parts = face_layout(g);
        let r = PartRelevance::compute(&Heatmap::uniform(g), &parts).unwrap();
        let total: f64 = r.mass.values().sum();
        assert!((total - 1.0).abs() < 1e-12);
        for (p, d) in r.density() {
            assert!((d - 1.0).abs() < 1e-12, "{p}");
        }
    }

    #[test]
    fn point_mass_lands_in_its_part() {
        let g = Grid::new(1, 16, 16).unwrap();
        let parts = face_layout(g);
        // row band 2 of 8, column band 3: eyes
        let h = Heatmap::one_hot(g, [0, 5, 7]).unwrap();
        let r = PartRelevance::compute(&h, &parts).unwrap();
        assert_eq!(r.dominant(), PartLabel::Eyes);
        assert_eq!(r.mass[&PartLabel::Eyes], 1.0);
    }
}
