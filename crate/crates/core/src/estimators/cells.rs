//! Finite-support cells: units whose covariate vectors are bitwise equal.

use std::collections::BTreeMap;
use std::fmt;

use crate::model::Sample;

/// Bit pattern of a covariate vector.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellKey(Vec<u64>);

impl CellKey {
    pub fn of(x: &[f64]) -> Self {
        CellKey(x.iter().map(|v| v.to_bits()).collect())
    }
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let values: Vec<String> = self
            .0
            .iter()
            .map(|b| f64::from_bits(*b).to_string())
            .collect();
        write!(f, "({})", values.join(", "))
    }
}

/// Per-cell sufficient statistics.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CellStats {
    pub count: usize,
    pub treated: usize,
    pub sum_treated_y: f64,
    pub sum_control_y: f64,
}

impl CellStats {
    pub fn control(&self) -> usize {
        self.count - self.treated
    }

    pub fn has_both_arms(&self) -> bool {
        self.treated > 0 && self.treated < self.count
    }
}

pub fn group_cells(sample: &Sample) -> BTreeMap<CellKey, CellStats> {
    let mut cells: BTreeMap<CellKey, CellStats> = BTreeMap::new();
    for u in sample.units() {
        let c = cells.entry(CellKey::of(u.x())).or_default();
        c.count += 1;
        if u.treated() {
            c.treated += 1;
            c.sum_treated_y += u.y();
        } else {
            c.sum_control_y += u.y();
        }
    }
    cells
}
