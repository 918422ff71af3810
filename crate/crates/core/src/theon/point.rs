use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::theon::expr::VSet;

/// Largest vertex set a point may be built over.
pub const MAX_POINT_VERTICES: usize = 20;

/// Coordinates `x_A` for every non-empty `A ⊆ [n]` with `|A| <= max_arity`,
/// each a `dim`-tuple in `[0,1)`.
///
/// Stored densely by subset mask; masks above `max_arity` hold NaN and are
/// never read by a valid theon.
#[derive(Debug, Clone)]
pub struct Point {
    n: usize,
    dim: usize,
    max_arity: usize,
    coords: Vec<f64>,
}

/// Bitwise equality, so unused NaN slots compare equal.
impl PartialEq for Point {
    fn eq(&self, other: &Point) -> bool {
        (self.n, self.dim, self.max_arity) == (other.n, other.dim, other.max_arity)
            && self
                .coords
                .iter()
                .zip(&other.coords)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl Point {
    pub fn empty(n: usize, dim: usize, max_arity: usize) -> Point {
        assert!(
            n <= MAX_POINT_VERTICES,
            "points are limited to {MAX_POINT_VERTICES} vertices"
        );
        Point {
            n,
            dim,
            max_arity,
            coords: vec![f64::NAN; (1 << n) * dim],
        }
    }

    /// Fresh i.i.d. uniform coordinates. Masks are filled in increasing
    /// numeric order, factors innermost.
    pub fn sample(n: usize, dim: usize, max_arity: usize, rng: &mut impl Rng) -> Point {
        let mut p = Point::empty(n, dim, max_arity);
        p.resample_if(rng, |_| true);
        p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_arity(&self) -> usize {
        self.max_arity
    }

    pub(crate) fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Every stored subset in sampling order.
    pub fn subsets(&self) -> impl Iterator<Item = VSet> + '_ {
        (1u32..1 << self.n)
            .filter(|m| m.count_ones() as usize <= self.max_arity)
            .map(VSet)
    }

    pub fn get(&self, set: VSet, factor: usize) -> f64 {
        self.coords[set.0 as usize * self.dim + factor]
    }

    pub fn set(&mut self, set: VSet, factor: usize, value: f64) {
        self.coords[set.0 as usize * self.dim + factor] = value;
    }

    /// Redraws the coordinates of the stored sets selected by `keep_fresh`,
    /// in sampling order.
    pub fn resample_if(&mut self, rng: &mut impl Rng, mut keep_fresh: impl FnMut(VSet) -> bool) {
        for mask in 1usize..1 << self.n {
            if mask.count_ones() as usize > self.max_arity || !keep_fresh(VSet(mask as u32)) {
                continue;
            }
            for f in 0..self.dim {
                self.coords[mask * self.dim + f] = rng.gen::<f64>();
            }
        }
    }

    /// Redraws every coordinate with `|A| > level`.
    pub fn resample_above(&mut self, rng: &mut impl Rng, level: usize) {
        self.resample_if(rng, |s| s.len() > level);
    }

    /// Redraws every coordinate with `|A| <= level`.
    pub fn resample_up_to(&mut self, rng: &mut impl Rng, level: usize) {
        self.resample_if(rng, |s| s.len() <= level);
    }

    /// The point `y` with `y_{perm(A)} = x_A`, where `perm[v]` is the new
    /// name of vertex `v`. Realizing `y` gives the relabeled model.
    pub fn permuted(&self, perm: &[usize]) -> Point {
        let mut out = Point::empty(self.n, self.dim, self.max_arity);
        for set in self.subsets() {
            let image = set
                .vertices()
                .iter()
                .fold(0u32, |m, &v| m | 1 << perm[v - 1]);
            for f in 0..self.dim {
                out.set(VSet(image), f, self.get(set, f));
            }
        }
        out
    }

    /// Restriction to the vertices `verts` (0-based), renamed `0..verts.len()`
    /// in the given order.
    pub fn project(&self, verts: &[usize]) -> Point {
        let mut out = Point::empty(verts.len(), self.dim, self.max_arity.min(verts.len()));
        for local in out.subsets().collect::<Vec<_>>() {
            let global = local
                .vertices()
                .iter()
                .fold(0u32, |m, &v| m | 1 << verts[v - 1]);
            for f in 0..self.dim {
                out.set(local, f, self.get(VSet(global), f));
            }
        }
        out
    }
}

/// Point on `[n]` drawn from a ChaCha8 stream seeded with `seed`.
pub fn sample_theta(n: usize, dim: usize, max_arity: usize, seed: u64) -> Point {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Point::sample(n, dim, max_arity, &mut rng)
}
