//! Experiment configuration: JSON in, validated pencils out.

use std::path::{Path, PathBuf};

use linpencil::markov::build_markov_pencil;
use linpencil::{ContourSpec, DiscreteMeasure, MarkovPencil, NodePlan, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: String,
    /// Drives every randomized generator below.
    #[serde(default)]
    pub seed: u64,
    pub measure: MeasureSpec,
    pub nodes: NodeSpec,
    /// Rows of the Markov pencil; defaults to the largest order plus one.
    #[serde(default)]
    pub rows: Option<usize>,
    pub grid: GridSpec,
    pub orders: Vec<usize>,
    #[serde(default)]
    pub contour: Option<ContourSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub subsequence: Option<SubsequenceSpec>,
    #[serde(default)]
    pub factorization: Option<FactorizationSpec>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    Inline {
        atoms: Vec<f64>,
        weights: Vec<f64>,
        interval: [f64; 2],
    },
    /// JSON file in the measure serialization format; relative paths resolve
    /// against the config file.
    File {
        path: PathBuf,
    },
    Uniform {
        atoms: usize,
        interval: [f64; 2],
    },
    GaussLegendre {
        atoms: usize,
        interval: [f64; 2],
    },
    /// Sorted uniform random atoms with uniform random weights.
    Random {
        atoms: usize,
        interval: [f64; 2],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NodeSpec {
    Ladder {
        count: usize,
    },
    Pairs {
        pairs: Vec<[f64; 2]>,
    },
    /// Upper half-plane nodes with real part over the interval widened by
    /// one on each side and imaginary part in `[min_im, max_im)`.
    Random {
        count: usize,
        #[serde(default = "default_min_im")]
        min_im: f64,
        #[serde(default = "default_max_im")]
        max_im: f64,
    },
}

fn default_min_im() -> f64 {
    0.5
}

fn default_max_im() -> f64 {
    3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridSpec {
    Points {
        points: Vec<[f64; 2]>,
    },
    /// `re_steps × im_steps` lattice including the corners.
    Rect {
        re: [f64; 2],
        im: [f64; 2],
        re_steps: usize,
        im_steps: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Error of the top-order convergent outside the numerical range.
    pub convergence: f64,
    /// Upper bound on the fitted geometric rate.
    pub rate: f64,
    pub reconstruction: f64,
    pub reciprocity: f64,
    pub special_case: f64,
    /// Contour functionals that should vanish.
    pub functional: f64,
    /// Relative error of the Gram diagonal against `1/d_j`.
    pub diagonal: f64,
    pub multi_step: f64,
    pub u_consistency: f64,
    /// Errors below `floor·max(1, |φ|)` are rounding and ignored by the fit.
    pub floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            convergence: 1e-6,
            rate: 0.9,
            reconstruction: 1e-12,
            reciprocity: 1e-12,
            special_case: 1e-10,
            functional: 1e-8,
            diagonal: 1e-6,
            multi_step: 1e-7,
            u_consistency: 1e-12,
            floor: 1e-13,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsequenceSpec {
    pub xi: [f64; 2],
    #[serde(default = "default_radius")]
    pub radius: f64,
    /// Centre plus `points − 1` on the circle.
    #[serde(default = "default_disk_points")]
    pub points: usize,
}

fn default_radius() -> f64 {
    0.1
}

fn default_disk_points() -> usize {
    9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorizationSpec {
    /// Factorization points; also the Christoffel/Geronimus transform points.
    pub points: Vec<[f64; 2]>,
    #[serde(default = "default_d0")]
    pub d0: Vec<[f64; 2]>,
    #[serde(default = "default_factor_order")]
    pub order: usize,
    /// Points where `d0 = 1/m` is checked against `y_n = d0·r_n`.
    #[serde(default)]
    pub special_points: Vec<[f64; 2]>,
    /// Gram matrices are `gram_size × gram_size`.
    #[serde(default = "default_gram_size")]
    pub gram_size: usize,
    #[serde(default = "default_favard_order")]
    pub favard_order: usize,
    /// Two distinct points enable the multi-step transform.
    #[serde(default)]
    pub multi_step_points: Vec<[f64; 2]>,
}

fn default_d0() -> Vec<[f64; 2]> {
    vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]
}

fn default_factor_order() -> usize {
    8
}

fn default_gram_size() -> usize {
    7
}

fn default_favard_order() -> usize {
    8
}

pub fn complex(p: [f64; 2]) -> C64 {
    C64::new(p[0], p[1])
}

pub fn complexes(ps: &[[f64; 2]]) -> Vec<C64> {
    ps.iter().copied().map(complex).collect()
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates; a relative measure file is resolved against the
    /// config's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_json(&text)?;
        if let MeasureSpec::File { path: p } = &mut cfg.measure {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.orders.is_empty() {
            return Err(invalid("orders must not be empty"));
        }
        if self.orders[0] == 0 {
            return Err(invalid("orders start at 1"));
        }
        if self.orders.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("orders must be strictly increasing"));
        }
        let grid = self.grid_points()?;
        for (i, a) in grid.iter().enumerate() {
            if !a.is_finite() {
                return Err(invalid(format!("grid point {i} is not finite")));
            }
            if grid[..i].contains(a) {
                return Err(invalid(format!("grid point {a} is repeated")));
            }
        }
        if let Some(rows) = self.rows {
            if rows < self.max_order() {
                return Err(invalid(format!(
                    "rows {rows} below the largest order {}",
                    self.max_order()
                )));
            }
        }
        let t = &self.tolerances;
        let all = [
            t.convergence,
            t.rate,
            t.reconstruction,
            t.reciprocity,
            t.special_case,
            t.functional,
            t.diagonal,
            t.multi_step,
            t.u_consistency,
            t.floor,
        ];
        if all.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(invalid("tolerances must be positive and finite"));
        }
        if let Some(s) = &self.subsequence {
            if s.radius.is_nan() || s.radius <= 0.0 || s.points == 0 {
                return Err(invalid(
                    "subsequence disk needs a positive radius and points",
                ));
            }
            if !grid.contains(&complex(s.xi)) {
                return Err(invalid("xi must be a grid point"));
            }
        }
        if let Some(f) = &self.factorization {
            if f.order == 0 || f.gram_size == 0 || f.favard_order == 0 {
                return Err(invalid("factorization orders must be positive"));
            }
            if !f.multi_step_points.is_empty() && f.multi_step_points.len() != 2 {
                return Err(invalid("multi-step transform takes exactly two points"));
            }
        }
        Ok(())
    }

    pub fn max_order(&self) -> usize {
        *self.orders.last().unwrap_or(&0)
    }

    /// Drops orders above `max`; at least one must remain.
    pub fn cap_orders(&mut self, max: usize) -> Result<()> {
        self.orders.retain(|&n| n <= max);
        if self.orders.is_empty() {
            return Err(invalid(format!("no configured order is <= {max}")));
        }
        Ok(())
    }

    pub fn grid_points(&self) -> Result<Vec<C64>> {
        match &self.grid {
            GridSpec::Points { points } => Ok(complexes(points)),
            GridSpec::Rect {
                re,
                im,
                re_steps,
                im_steps,
            } => {
                if *re_steps == 0 || *im_steps == 0 {
                    return Err(invalid("grid rectangle needs at least one step per axis"));
                }
                let lerp = |r: [f64; 2], i: usize, n: usize| {
                    if n == 1 {
                        r[0]
                    } else {
                        r[0] + (r[1] - r[0]) * i as f64 / (n - 1) as f64
                    }
                };
                let mut out = Vec::with_capacity(re_steps * im_steps);
                for j in 0..*im_steps {
                    for i in 0..*re_steps {
                        out.push(C64::new(lerp(*re, i, *re_steps), lerp(*im, j, *im_steps)));
                    }
                }
                Ok(out)
            }
        }
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    pub fn measure(&self) -> Result<DiscreteMeasure> {
        let iv = |i: &[f64; 2]| (i[0], i[1]);
        Ok(match &self.measure {
            MeasureSpec::Inline {
                atoms,
                weights,
                interval,
            } => DiscreteMeasure::new(atoms.clone(), weights.clone(), iv(interval))?,
            MeasureSpec::File { path } => {
                let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                    path: path.clone(),
                    source,
                })?;
                DiscreteMeasure::from_json(&text)?
            }
            MeasureSpec::Uniform { atoms, interval } => {
                DiscreteMeasure::uniform(*atoms, interval[0], interval[1])?
            }
            MeasureSpec::GaussLegendre { atoms, interval } => {
                DiscreteMeasure::gauss_legendre(*atoms, interval[0], interval[1])?
            }
            MeasureSpec::Random { atoms, interval } => {
                let mut rng = self.rng(1);
                let mut t: Vec<f64> = (0..*atoms)
                    .map(|_| rng.random_range(interval[0]..interval[1]))
                    .collect();
                t.sort_by(f64::total_cmp);
                t.dedup();
                let w = t.iter().map(|_| rng.random_range(0.1..1.0)).collect();
                DiscreteMeasure::normalized(t, w, iv(interval))?
            }
        })
    }

    pub fn node_plan(&self, interval: (f64, f64)) -> Result<NodePlan> {
        let pairs = match &self.nodes {
            NodeSpec::Ladder { count } => NodePlan::ladder(*count),
            NodeSpec::Pairs { pairs } => complexes(pairs),
            NodeSpec::Random {
                count,
                min_im,
                max_im,
            } => {
                if !(0.0 < *min_im && min_im < max_im) {
                    return Err(invalid("random nodes need 0 < min_im < max_im"));
                }
                let mut rng = self.rng(2);
                (0..*count)
                    .map(|_| {
                        C64::new(
                            rng.random_range(interval.0 - 1.0..interval.1 + 1.0),
                            rng.random_range(*min_im..*max_im),
                        )
                    })
                    .collect()
            }
        };
        Ok(NodePlan::from_pairs(pairs, interval)?)
    }

    pub fn rows(&self) -> usize {
        self.rows.unwrap_or(self.max_order() + 1)
    }

    pub fn build_pencil(&self) -> Result<MarkovPencil> {
        let mu = self.measure()?;
        let plan = self.node_plan(mu.interval())?;
        Ok(build_markov_pencil(&mu, &plan, self.rows())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "id": "t",
        "measure": {"kind": "uniform", "atoms": 20, "interval": [-1, 1]},
        "nodes": {"kind": "ladder", "count": 24},
        "grid": {"kind": "points", "points": [[2, 0], [0, 5]]},
        "orders": [2, 4, 8]
    }"#;

    #[test]
    fn minimal_config_builds() {
        let cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.rows(), 9);
        assert_eq!(cfg.tolerances, Tolerances::default());
        let mp = cfg.build_pencil().unwrap();
        assert_eq!(mp.len(), 9);
    }

    #[test]
    fn orders_must_increase() {
        let bad = MINIMAL.replace("[2, 4, 8]", "[2, 8, 4]");
        assert!(matches!(
            ExperimentConfig::from_json(&bad),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn grid_points_distinct() {
        let bad = MINIMAL.replace("[[2, 0], [0, 5]]", "[[2, 0], [2, 0]]");
        assert!(ExperimentConfig::from_json(&bad).is_err());
    }

    #[test]
    fn rectangle_grid() {
        let cfg = ExperimentConfig::from_json(&MINIMAL.replace(
            r#"{"kind": "points", "points": [[2, 0], [0, 5]]}"#,
            r#"{"kind": "rect", "re": [2, 3], "im": [0, 1], "re_steps": 2, "im_steps": 3}"#,
        ))
        .unwrap();
        let g = cfg.grid_points().unwrap();
        assert_eq!(g.len(), 6);
        assert_eq!(g[5], C64::new(3.0, 1.0));
    }

    #[test]
    fn seeded_generators_repeat() {
        let text = MINIMAL
            .replace(
                r#"{"kind": "uniform", "atoms": 20, "interval": [-1, 1]}"#,
                r#"{"kind": "random", "atoms": 15, "interval": [-1, 1]}"#,
            )
            .replace(
                r#"{"kind": "ladder", "count": 24}"#,
                r#"{"kind": "random", "count": 10}"#,
            );
        let mut cfg = ExperimentConfig::from_json(&text).unwrap();
        cfg.seed = 9;
        let a = cfg.build_pencil().unwrap();
        let b = cfg.build_pencil().unwrap();
        assert_eq!(a, b);
        cfg.seed = 10;
        assert_ne!(cfg.measure().unwrap(), a.mu().clone());
    }

    #[test]
    fn cap_orders_keeps_lower() {
        let mut cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        cfg.cap_orders(4).unwrap();
        assert_eq!(cfg.orders, vec![2, 4]);
        assert!(cfg.cap_orders(1).is_err());
    }
}
