//! Jointly Gaussian circle averages of the Dirichlet Gaussian free field.
//!
//! Two backends share the [`CircleAverages`] interface:
//!
//! * [`exact`]: covariance matrix over an arbitrary [`NodeSet`] followed by a
//!   Cholesky factorization. Exact in law up to quadrature error.
//! * [`grid`]: spectral synthesis on a uniform grid of the unit square, with
//!   circle averages taken as Bessel multipliers in the sine basis.

pub mod exact;
pub mod grid;
pub mod snapshot;

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::domain::{Domain, Point};
use crate::error::{Error, Result};
use crate::quad::ArcSet;

pub use exact::{
    build_covariance, cov_circle_avg, sample_exact, sample_one, CovarianceMatrix, ExactEnsemble, ExactField,
    EXACT_NODE_BUDGET,
};
pub use grid::{calibrate_grid, circle_average_on_grid, sample_grid, GridField, GridSampler, GridSpectrum};

/// Default number of nodes per full circle.
pub const DEFAULT_QUADRATURE: usize = 64;

/// A circle-average evaluation node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub center: Point,
    pub radius: f64,
}

impl Node {
    pub fn new(center: Point, radius: f64) -> Self {
        Self { center, radius }
    }

    fn key(&self) -> [u64; 3] {
        [self.center.re.to_bits(), self.center.im.to_bits(), self.radius.to_bits()]
    }
}

/// An ordered, duplicate-free set of circle-average nodes in one domain.
#[derive(Debug, Clone)]
pub struct NodeSet {
    domain: Domain,
    nodes: Vec<Node>,
    index: HashMap<[u64; 3], usize>,
}

impl NodeSet {
    /// Validates centres, circle non-emptiness and uniqueness.
    pub fn new(domain: Domain, nodes: Vec<Node>) -> Result<Self> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            if !domain.is_interior(node.center) {
                return Err(Error::PointOutsideDomain { x: node.center.re, y: node.center.im });
            }
            if !(node.radius > 0.0 && node.radius.is_finite()) {
                return Err(Error::InvalidInput(format!("node radius must be positive, got {}", node.radius)));
            }
            if !domain.circle_is_full(node.center, node.radius) {
                ArcSet::new(&domain, node.center, node.radius)?;
            }
            if index.insert(node.key(), i).is_some() {
                return Err(Error::InvalidInput(format!(
                    "duplicate node ({}, {}) radius {}",
                    node.center.re, node.center.im, node.radius
                )));
            }
        }
        Ok(Self { domain, nodes, index })
    }

    /// Every (point, radius) pair of the given points and radii, ordered by
    /// radius first. Points repeated in the input are kept once.
    pub fn ladder(domain: Domain, points: &[Point], radii: &[f64]) -> Result<Self> {
        let mut nodes = Vec::with_capacity(points.len() * radii.len());
        let mut seen = std::collections::HashSet::new();
        for &r in radii {
            for &p in points {
                let node = Node::new(p, r);
                if seen.insert(node.key()) {
                    nodes.push(node);
                }
            }
        }
        Self::new(domain, nodes)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Position of the node `(center, radius)`, matched bit for bit.
    pub fn position(&self, center: Point, radius: f64) -> Option<usize> {
        self.index.get(&Node::new(center, radius).key()).copied()
    }
}

/// One jointly Gaussian draw of the circle averages of a [`NodeSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub values: Vec<f64>,
    pub seed: u64,
    pub replicate_index: u64,
}

/// Source of circle averages `Gamma(rho_{x, r})` at a batch of centres.
pub trait CircleAverages {
    fn circle_averages(&self, points: &[Point], radius: f64) -> Result<Vec<f64>>;

    /// `(seed, replicate_index)` of the draw, for provenance.
    fn replicate(&self) -> (u64, u64) {
        (0, 0)
    }
}

/// Anything that turns `(seed, replicate_index)` into one field draw.
pub trait FieldSource: Sync {
    type Field<'a>: CircleAverages
    where
        Self: 'a;

    fn draw(&self, seed: u64, replicate_index: u64) -> Result<Self::Field<'_>>;
}

/// Counter-based generator: replicate `r` of seed `s` always sees the same stream.
pub fn replicate_rng(seed: u64, replicate_index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(replicate_index);
    rng
}
