//! Concrete G-metric spaces and the catalog keys that name them.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, RngCore};

use crate::convexity::{ConvexGSpace, LinearInterpolation};
use crate::error::{Error, Result};
use crate::gmetric::GMetric;
use crate::point::Point;
use crate::sampling::SamplePlan;

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        Err(Error::invalid("dimension must be at least 1"))
    } else {
        Ok(())
    }
}

/// `G(x, y, z) = d(x, y) + d(y, z) + d(x, z)` with Euclidean `d`.
#[derive(Debug, Clone)]
pub struct PerimeterSpace {
    dim: usize,
    name: String,
}

impl PerimeterSpace {
    pub fn new(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(PerimeterSpace {
            dim,
            name: SpaceKey::Perimeter(dim).to_string(),
        })
    }
}

impl GMetric for PerimeterSpace {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn g(&self, x: &Point, y: &Point, z: &Point) -> f64 {
        if self.dim == 1 {
            // On the line the perimeter is twice the spread.
            let (a, b, c) = (x[0], y[0], z[0]);
            return 2.0 * (a.max(b).max(c) - a.min(b).min(c));
        }
        x.euclidean(y) + y.euclidean(z) + x.euclidean(z)
    }
}

/// `G(x, y, z) = max{d(x, y), d(y, z), d(x, z)}` with Euclidean `d`.
#[derive(Debug, Clone)]
pub struct MaxSpace {
    dim: usize,
    name: String,
}

impl MaxSpace {
    pub fn new(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(MaxSpace {
            dim,
            name: SpaceKey::Max(dim).to_string(),
        })
    }
}

impl GMetric for MaxSpace {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn g(&self, x: &Point, y: &Point, z: &Point) -> f64 {
        x.euclidean(y).max(y.euclidean(z)).max(x.euclidean(z))
    }
}

/// The nonzero reals with the sign-aware perimeter:
/// `|x-y| + |y-z| + |x-z|` when all three share a sign, one more otherwise.
#[derive(Debug, Clone, Copy, Default)]
pub struct SignExampleSpace;

impl SignExampleSpace {
    pub const NAME: &'static str = "sign-example";
}

impl GMetric for SignExampleSpace {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn dim(&self) -> usize {
        1
    }

    fn g(&self, x: &Point, y: &Point, z: &Point) -> f64 {
        let (a, b, c) = (x[0], y[0], z[0]);
        let spread = (a - b).abs() + (b - c).abs() + (a - c).abs();
        let same_sign = (a > 0.0 && b > 0.0 && c > 0.0) || (a < 0.0 && b < 0.0 && c < 0.0);
        if same_sign {
            spread
        } else {
            1.0 + spread
        }
    }

    fn check_point(&self, p: &Point) -> Result<()> {
        if p.dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: p.dim(),
            });
        }
        if !p.is_finite() || p[0] == 0.0 {
            return Err(Error::Domain {
                space: Self::NAME.into(),
                point: p.to_string(),
                reason: "the space excludes 0".into(),
            });
        }
        Ok(())
    }

    /// Uniform in the box, rejecting values within `min_separation` of 0.
    fn sample(&self, plan: &SamplePlan, rng: &mut dyn RngCore) -> Point {
        let (lo, hi) = plan.bounds[0];
        let floor = plan.min_separation.max(f64::MIN_POSITIVE);
        loop {
            let v: f64 = rng.gen_range(lo..hi);
            if v.abs() >= floor {
                return Point::from_raw(vec![v]);
            }
        }
    }

    fn validate_plan(&self, plan: &SamplePlan) -> Result<()> {
        plan.validate(1)?;
        let (lo, hi) = plan.bounds[0];
        let floor = plan.min_separation.max(f64::MIN_POSITIVE);
        if hi <= floor && lo >= -floor {
            return Err(Error::invalid(format!(
                "box ({lo}, {hi}) leaves no room outside (-{floor}, {floor})"
            )));
        }
        Ok(())
    }
}

pub fn make_perimeter_space(dim: usize) -> Result<ConvexGSpace> {
    Ok(ConvexGSpace::new(
        Arc::new(PerimeterSpace::new(dim)?),
        Arc::new(LinearInterpolation),
    ))
}

pub fn make_max_space(dim: usize) -> Result<ConvexGSpace> {
    Ok(ConvexGSpace::new(Arc::new(MaxSpace::new(dim)?), Arc::new(LinearInterpolation)))
}

/// The sign example carries no convex structure: its domain is not convex.
pub fn make_sign_example_space() -> SignExampleSpace {
    SignExampleSpace
}

/// Catalog key: `perimeter-<dim>`, `max-<dim>` or `sign-example`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpaceKey {
    Perimeter(usize),
    Max(usize),
    SignExample,
}

impl fmt::Display for SpaceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceKey::Perimeter(d) => write!(f, "perimeter-{d}"),
            SpaceKey::Max(d) => write!(f, "max-{d}"),
            SpaceKey::SignExample => f.write_str(SignExampleSpace::NAME),
        }
    }
}

impl FromStr for SpaceKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == SignExampleSpace::NAME {
            return Ok(SpaceKey::SignExample);
        }
        let unknown = || Error::UnknownSpace(s.to_string());
        let (family, dim) = s.rsplit_once('-').ok_or_else(unknown)?;
        let dim: usize = dim.parse().map_err(|_| unknown())?;
        if dim == 0 {
            return Err(unknown());
        }
        match family {
            "perimeter" => Ok(SpaceKey::Perimeter(dim)),
            "max" => Ok(SpaceKey::Max(dim)),
            _ => Err(unknown()),
        }
    }
}

/// A resolved catalog entry.
#[derive(Clone)]
pub struct SpaceCatalogEntry {
    pub key: SpaceKey,
    pub space: Arc<dyn GMetric>,
    /// Present for the Euclidean-derived spaces only.
    pub convex: Option<ConvexGSpace>,
}

impl SpaceCatalogEntry {
    pub fn dim(&self) -> usize {
        self.space.dim()
    }
}

impl SpaceKey {
    pub fn resolve(self) -> Result<SpaceCatalogEntry> {
        let (space, convex) = match self {
            SpaceKey::Perimeter(d) => {
                let cs = make_perimeter_space(d)?;
                (cs.space().clone(), Some(cs))
            }
            SpaceKey::Max(d) => {
                let cs = make_max_space(d)?;
                (cs.space().clone(), Some(cs))
            }
            SpaceKey::SignExample => (Arc::new(SignExampleSpace) as Arc<dyn GMetric>, None),
        };
        Ok(SpaceCatalogEntry { key: self, space, convex })
    }
}

/// Parses and resolves a catalog key in one step.
pub fn resolve(key: &str) -> Result<SpaceCatalogEntry> {
    key.parse::<SpaceKey>()?.resolve()
}
