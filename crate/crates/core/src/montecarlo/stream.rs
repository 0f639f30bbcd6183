//! Synthetic streams: colored classes of distinct keys with a multiplicity
//! law per class, emitted in a chosen order.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::SimulationError;
use crate::sketch::Color;

/// Number of occurrences of each distinct key of a class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Multiplicity {
    Constant(u64),
    /// Uniform on `lo..=hi`.
    Uniform { lo: u64, hi: u64 },
    /// Geometric on `1, 2, ...` with the given mean.
    Geometric { mean: f64 },
}

impl Multiplicity {
    fn validate(&self) -> Result<(), SimulationError> {
        let ok = match *self {
            Multiplicity::Constant(m) => m >= 1,
            Multiplicity::Uniform { lo, hi } => lo >= 1 && lo <= hi,
            Multiplicity::Geometric { mean } => mean >= 1.0 && mean.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(SimulationError::InvalidSpec(format!("invalid multiplicity law {self:?}")))
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Multiplicity::Constant(m) => m as f64,
            Multiplicity::Uniform { lo, hi } => (lo + hi) as f64 / 2.0,
            Multiplicity::Geometric { mean } => mean,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Multiplicity::Constant(_) => 0.0,
            Multiplicity::Uniform { lo, hi } => {
                let k = (hi - lo + 1) as f64;
                (k * k - 1.0) / 12.0
            }
            Multiplicity::Geometric { mean } => mean * (mean - 1.0),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match *self {
            Multiplicity::Constant(m) => m,
            Multiplicity::Uniform { lo, hi } => rng.gen_range(lo..=hi),
            Multiplicity::Geometric { mean } => {
                if mean == 1.0 {
                    return 1;
                }
                let stop = 1.0 / mean;
                let u: f64 = rng.gen();
                // inverse transform on {1, 2, ...}
                1 + ((1.0 - u).ln() / (1.0 - stop).ln()).floor() as u64
            }
        }
    }
}

/// One class of distinct keys.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColorClass {
    pub tag: u32,
    pub proportion: f64,
    pub multiplicity: Multiplicity,
}

/// Arrangement of the occurrences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    /// Uniform random permutation of all occurrences.
    #[default]
    Shuffled,
    /// Key by key, each key's occurrences consecutive.
    Sorted,
    /// Round-robin passes: pass `k` emits the `k`-th occurrence of every key
    /// that has one, alternating between classes.
    Interleaved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSpec {
    pub n: u64,
    pub colors: Vec<ColorClass>,
    pub order: Order,
    pub seed: u64,
}

/// One occurrence in a generated stream. Key ids are `0..n`, assigned to the
/// classes in order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamItem {
    pub id: u64,
    pub color: Color,
}

impl StreamItem {
    /// Raw key bytes fed to the sketch.
    pub fn key_bytes(&self) -> [u8; 8] {
        self.id.to_le_bytes()
    }
}

impl StreamSpec {
    /// `n` distinct keys of color 0, each seen once.
    pub fn distinct(n: u64, seed: u64) -> Self {
        Self {
            n,
            colors: vec![ColorClass {
                tag: 0,
                proportion: 1.0,
                multiplicity: Multiplicity::Constant(1),
            }],
            order: Order::Sorted,
            seed,
        }
    }

    pub fn with_order(mut self, order: Order) -> Self {
        self.order = order;
        self
    }

    pub fn validate(&self) -> Result<(), SimulationError> {
        if self.n == 0 {
            return Err(SimulationError::InvalidSpec("n must be at least 1".into()));
        }
        if self.colors.is_empty() {
            return Err(SimulationError::InvalidSpec("at least one color class".into()));
        }
        let mut tags: Vec<u32> = self.colors.iter().map(|c| c.tag).collect();
        tags.sort_unstable();
        if tags.windows(2).any(|w| w[0] == w[1]) {
            return Err(SimulationError::InvalidSpec("duplicate color tag".into()));
        }
        for c in &self.colors {
            if !(c.proportion > 0.0 && c.proportion <= 1.0) {
                return Err(SimulationError::InvalidSpec(format!(
                    "proportion {} of color {} not in (0,1]",
                    c.proportion, c.tag
                )));
            }
            Color::new(c.tag).map_err(|e| SimulationError::InvalidSpec(e.to_string()))?;
            c.multiplicity.validate()?;
        }
        let total: f64 = self.colors.iter().map(|c| c.proportion).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(SimulationError::InvalidSpec(format!(
                "proportions sum to {total}, not 1"
            )));
        }
        Ok(())
    }

    /// Distinct keys per class by largest-remainder rounding of `n p_i`.
    pub fn class_sizes(&self) -> Vec<u64> {
        let raw: Vec<f64> = self.colors.iter().map(|c| c.proportion * self.n as f64).collect();
        let mut sizes: Vec<u64> = raw.iter().map(|x| x.floor() as u64).collect();
        let assigned: u64 = sizes.iter().sum();
        let mut order: Vec<usize> = (0..raw.len()).collect();
        order.sort_by(|&a, &b| {
            let (fa, fb) = (raw[a] - raw[a].floor(), raw[b] - raw[b].floor());
            fb.total_cmp(&fa).then(a.cmp(&b))
        });
        for &i in order.iter().take(self.n.saturating_sub(assigned) as usize) {
            sizes[i] += 1;
        }
        sizes
    }

    /// Distinct keys of the class with `tag`.
    pub fn class_size(&self, tag: u32) -> Option<u64> {
        let sizes = self.class_sizes();
        self.colors.iter().position(|c| c.tag == tag).map(|i| sizes[i])
    }
}

/// Draws the multiplicities and emits the stream of `spec` under its seed.
pub fn generate(spec: &StreamSpec) -> Result<Vec<StreamItem>, SimulationError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    Ok(generate_with(spec, &mut rng))
}

/// As [`generate`] with an explicit generator; `spec` must be valid.
pub(crate) fn generate_with<R: Rng + ?Sized>(spec: &StreamSpec, rng: &mut R) -> Vec<StreamItem> {
    let sizes = spec.class_sizes();
    let mut keys: Vec<Vec<(u64, u64)>> = Vec::with_capacity(sizes.len());
    let mut next = 0u64;
    for (class, &size) in spec.colors.iter().zip(&sizes) {
        let ks = (next..next + size)
            .map(|id| (id, class.multiplicity.sample(rng)))
            .collect();
        next += size;
        keys.push(ks);
    }
    let colors: Vec<Color> = spec.colors.iter().map(|c| Color(c.tag)).collect();
    let total: u64 = keys.iter().flatten().map(|(_, m)| m).sum();
    let mut out = Vec::with_capacity(total as usize);
    match spec.order {
        Order::Sorted | Order::Shuffled => {
            for (class, ks) in keys.iter().enumerate() {
                for &(id, m) in ks {
                    for _ in 0..m {
                        out.push(StreamItem { id, color: colors[class] });
                    }
                }
            }
            if spec.order == Order::Shuffled {
                out.shuffle(rng);
            }
        }
        Order::Interleaved => {
            let longest = keys.iter().map(Vec::len).max().unwrap_or(0);
            let mut pass = 0u64;
            while out.len() < total as usize {
                for i in 0..longest {
                    for (class, ks) in keys.iter().enumerate() {
                        if let Some(&(id, m)) = ks.get(i) {
                            if m > pass {
                                out.push(StreamItem { id, color: colors[class] });
                            }
                        }
                    }
                }
                pass += 1;
            }
        }
    }
    out
}
