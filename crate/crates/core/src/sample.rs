//! Seeded random sample points for numeric corroboration.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::symexpr::Context;

/// Default seed used when a caller does not supply one.
pub const DEFAULT_SEED: u64 = 42;

/// Sample box for the telegraph coordinates and the group parameter `eps`.
/// Unlisted independent variables use `[-1, 1]`, or `[0.5, 2]` when
/// declared positive; unlisted parameters use `param_range`.
#[derive(Clone, Debug)]
pub struct SampleBox {
    pub ranges: BTreeMap<String, (f64, f64)>,
    pub param_range: (f64, f64),
    pub jet_range: (f64, f64),
}

impl Default for SampleBox {
    fn default() -> Self {
        let ranges = [
            ("r", (0.5, 2.0)),
            ("x", (-1.0, 1.0)),
            ("y", (-1.0, 1.0)),
            ("t", (0.0, 1.0)),
            ("eps", (-0.2, 0.2)),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        SampleBox { ranges, param_range: (0.5, 2.0), jet_range: (-1.0, 1.0) }
    }
}

pub struct Sampler {
    rng: ChaCha8Rng,
    pub bounds: SampleBox,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler { rng: ChaCha8Rng::seed_from_u64(seed), bounds: SampleBox::default() }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..=hi)
    }

    /// Values for every declared parameter and independent variable.
    pub fn base_point(&mut self, ctx: &Context) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        for p in ctx.params() {
            let (lo, hi) = self.bounds.ranges.get(&**p).copied().unwrap_or(self.bounds.param_range);
            out.insert(p.to_string(), self.uniform(lo, hi));
        }
        for v in ctx.vars() {
            let (lo, hi) = match self.bounds.ranges.get(&**v) {
                Some(r) => *r,
                None if ctx.positive().contains(v) => (0.5, 2.0),
                None => (-1.0, 1.0),
            };
            out.insert(v.to_string(), self.uniform(lo, hi));
        }
        out
    }

    /// Value for a parameter not declared in any context, such as a group
    /// parameter local to one statement.
    pub fn param_value(&mut self, name: &str) -> f64 {
        let (lo, hi) = self.bounds.ranges.get(name).copied().unwrap_or(self.bounds.param_range);
        self.uniform(lo, hi)
    }

    pub fn jet_value(&mut self) -> f64 {
        let (lo, hi) = self.bounds.jet_range;
        self.uniform(lo, hi)
    }
}
