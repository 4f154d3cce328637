use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One halving iteration: `from` frames become `to`, removing `reduce = from - to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleStep {
    pub iteration: usize,
    pub from: usize,
    pub to: usize,
    pub reduce: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FusionSchedule {
    pub steps: Vec<ScheduleStep>,
}

impl FusionSchedule {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Halves the length while it exceeds twice the target, then jumps to the
/// target. Empty when `total <= target`.
pub fn build_schedule(total: usize, target: usize) -> Result<FusionSchedule> {
    if target == 0 {
        return Err(Error::Config("target length must be at least 1".into()));
    }
    let mut steps = Vec::new();
    let mut cur = total;
    while cur > target {
        let next = if cur > 2 * target { cur / 2 } else { target };
        steps.push(ScheduleStep {
            iteration: steps.len(),
            from: cur,
            to: next,
            reduce: cur - next,
        });
        cur = next;
    }
    Ok(FusionSchedule { steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pairs(s: &FusionSchedule) -> Vec<(usize, usize, usize)> {
        s.steps.iter().map(|st| (st.from, st.to, st.reduce)).collect()
    }

    #[test]
    fn examples() {
        assert_eq!(pairs(&build_schedule(3000, 750).unwrap()), vec![(3000, 1500, 1500), (1500, 750, 750)]);
        assert_eq!(pairs(&build_schedule(1000, 750).unwrap()), vec![(1000, 750, 250)]);
        assert!(build_schedule(750, 750).unwrap().is_empty());
        assert!(build_schedule(10, 750).unwrap().is_empty());
        assert!(build_schedule(10, 0).is_err());
        let long = build_schedule(25000, 750).unwrap();
        assert!(long.len() <= 7);
        assert_eq!(long.steps.last().unwrap().to, 750);
    }

    proptest! {
        #[test]
        fn invariants(target in 1usize..3000, extra in 0usize..60000) {
            let total = target + extra;
            let s = build_schedule(total, target).unwrap();
            prop_assert_eq!(s.is_empty(), total <= target);
            let mut cur = total;
            for (m, st) in s.steps.iter().enumerate() {
                prop_assert_eq!(st.iteration, m);
                prop_assert_eq!(st.from, cur);
                let expect = if cur > 2 * target { cur / 2 } else { target };
                prop_assert_eq!(st.to, expect);
                prop_assert!(st.reduce > 0);
                prop_assert_eq!(st.reduce, st.from - st.to);
                cur = st.to;
            }
            if !s.is_empty() {
                prop_assert_eq!(cur, target);
                let bound = (total as f64 / target as f64).log2().ceil() as usize + 1;
                prop_assert!(s.len() <= bound);
            }
        }
    }
}
