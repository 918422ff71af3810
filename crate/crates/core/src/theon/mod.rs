//! Theons as executable membership oracles and the exchangeable arrays they
//! generate.

mod catalog;
mod estimate;
mod expr;
mod file;
mod point;
mod sampler;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logic::{Interpretation, Node, Theory};
use crate::relational::{injective_tuples, tuple_index, Model, Signature};

pub use catalog::{
    coloring, dev_not_uinduce, dev_two_coloring, independence_not_disc,
    independence_not_disc_coupling, interpretation_by_name, interpretation_pairs, linear_order,
    qr_hypergraphon, skew_graphon, theon_by_name, theory_by_name, tournament_np,
    tournament_np_order, CatalogEntry, INTERPRETATIONS, THEONS, THEORIES,
};
pub use estimate::{
    estimate_density, estimate_density_via_flattenings, estimate_flattening, labeled_histogram,
    DensityEstimate, Histogram,
};
pub use expr::{Cmp, TheonExpr, VSet, MAX_ARITY};
pub use file::{load_theon, theon_from_json, theon_to_json, TheonFile};
pub use point::{sample_theta, Point};
pub use sampler::{split_seed, Sampler, DEFAULT_CHUNK_SIZE};

use expr::{identity_map, View};

/// One factor of a coupling: the predicates it owns and the ground-space
/// factors it reads.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub theory: Theory,
    /// Indices into the coupled signature, in the component's own order.
    pub preds: Vec<usize>,
    pub offset: usize,
    pub dim: usize,
}

/// A theon over `[0,1]^dim`: one membership expression per predicate.
#[derive(Debug, Clone, PartialEq)]
pub struct Theon {
    pub name: String,
    pub theory: Theory,
    pub dim: usize,
    pub peons: Vec<TheonExpr>,
    /// Declared: peons read only coordinates of sets of size at most this.
    pub rank_bound: Option<usize>,
    /// Declared: peons ignore coordinates of sets of size at most this.
    pub independence: Option<usize>,
    /// Set for couplings; empty otherwise.
    pub components: Vec<Component>,
}

/// How [`independent_coupling`] treats predicate names shared by factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Renaming {
    /// Clashing names are an error.
    Keep,
    /// Factor `i` (1-based) gets every predicate renamed to `NAME_i`.
    Suffix,
}

impl Theon {
    pub fn new(
        name: impl Into<String>,
        theory: Theory,
        dim: usize,
        peons: Vec<TheonExpr>,
    ) -> Result<Theon> {
        let t = Theon {
            name: name.into(),
            theory,
            dim,
            peons,
            rank_bound: None,
            independence: None,
            components: Vec::new(),
        };
        t.validate()?;
        Ok(t)
    }

    pub fn with_rank_bound(mut self, r: usize) -> Theon {
        self.rank_bound = Some(r);
        self
    }

    pub fn with_independence(mut self, ell: usize) -> Theon {
        self.independence = Some(ell);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidTheon(
                "ground space needs at least one factor".into(),
            ));
        }
        let sig = &self.theory.sig;
        if self.peons.len() != sig.len() {
            return Err(Error::InvalidTheon(format!(
                "{} expressions for {} predicates",
                self.peons.len(),
                sig.len()
            )));
        }
        for (p, e) in self.peons.iter().enumerate() {
            e.validate(sig.arity(p), self.dim)
                .map_err(|err| Error::InvalidTheon(format!("predicate {}: {err}", sig.name(p))))?;
        }
        Ok(())
    }

    pub fn signature(&self) -> &Signature {
        &self.theory.sig
    }

    pub fn max_arity(&self) -> usize {
        self.theory.sig.max_arity()
    }

    /// Membership of the tuple `(1,...,k)` at a point on `[k]`.
    pub fn eval_membership(&self, pred: usize, x: &Point) -> Result<bool> {
        let k = self.theory.sig.arity(pred);
        if x.n() != k || x.dim() != self.dim || x.max_arity() < self.peons[pred].max_level() {
            return Err(Error::InvalidParam {
                name: "point".into(),
                msg: format!(
                    "expected a {}-dimensional point on [{k}], got one on [{}] of dimension {}",
                    self.dim,
                    x.n(),
                    x.dim()
                ),
            });
        }
        let map = identity_map(k);
        Ok(self.peons[pred].eval(&View {
            coords: x.coords(),
            dim: self.dim,
            offset: 0,
            arity: k,
            map: &map,
        }))
    }

    pub fn sample_point(&self, n: usize, rng: &mut impl rand::Rng) -> Point {
        Point::sample(n, self.dim, self.max_arity(), rng)
    }

    pub fn realizer(&self, n: usize) -> Realizer<'_> {
        Realizer::new(self, n)
    }

    /// The model on `[n]` read off `theta`.
    pub fn realize(&self, theta: &Point) -> Model {
        self.realizer(theta.n()).realize(theta)
    }
}

struct Job {
    pred: usize,
    index: usize,
    map: [u32; 1 << MAX_ARITY],
}

/// Precomputed tuple list for realizing many points on the same `[n]`.
pub struct Realizer<'a> {
    theon: &'a Theon,
    n: usize,
    jobs: Vec<Job>,
}

impl<'a> Realizer<'a> {
    pub fn new(theon: &'a Theon, n: usize) -> Self {
        let sig = &theon.theory.sig;
        let mut jobs = Vec::new();
        for p in 0..sig.len() {
            let k = sig.arity(p);
            for t in injective_tuples(n, k) {
                let mut map = [0u32; 1 << MAX_ARITY];
                for (mask, slot) in map.iter_mut().enumerate().take(1 << k) {
                    *slot = (0..k)
                        .filter(|i| mask >> i & 1 == 1)
                        .fold(0, |m, i| m | 1 << t[i]);
                }
                jobs.push(Job {
                    pred: p,
                    index: tuple_index(n, &t),
                    map,
                });
            }
        }
        Realizer { theon, n, jobs }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn empty_model(&self) -> Model {
        Model::empty(self.theon.theory.sig.clone(), self.n)
    }

    pub fn realize(&self, theta: &Point) -> Model {
        let mut m = self.empty_model();
        self.realize_into(theta, &mut m);
        m
    }

    /// Overwrites `out`, which must be a model on `[n]` over the theon's
    /// signature.
    pub fn realize_into(&self, theta: &Point, out: &mut Model) {
        debug_assert_eq!(theta.n(), self.n);
        out.clear();
        let sig = &self.theon.theory.sig;
        for job in &self.jobs {
            let k = sig.arity(job.pred);
            let view = View {
                coords: theta.coords(),
                dim: self.theon.dim,
                offset: 0,
                arity: k,
                map: &job.map[..1 << k],
            };
            if self.theon.peons[job.pred].eval(&view) {
                out.set_index(job.pred, job.index, true);
            }
        }
    }
}

impl Realizer<'_> {
    /// Whether `theta` realizes exactly `target`; stops at the first
    /// disagreeing tuple.
    pub fn realizes(&self, theta: &Point, target: &Model) -> bool {
        debug_assert_eq!(theta.n(), self.n);
        let sig = &self.theon.theory.sig;
        self.jobs.iter().all(|job| {
            let k = sig.arity(job.pred);
            let view = View {
                coords: theta.coords(),
                dim: self.theon.dim,
                offset: 0,
                arity: k,
                map: &job.map[..1 << k],
            };
            self.theon.peons[job.pred].eval(&view) == target.get_index(job.pred, job.index)
        })
    }
}

/// Product coupling: factor `i` reads its own block of ground-space factors.
pub fn independent_coupling(ts: &[&Theon], renaming: Renaming) -> Result<Theon> {
    if ts.is_empty() {
        return Err(Error::param(
            "theons",
            "a coupling needs at least one factor",
        ));
    }
    let mut theories = Vec::new();
    for (i, t) in ts.iter().enumerate() {
        theories.push(match renaming {
            Renaming::Keep => t.theory.clone(),
            Renaming::Suffix => t.theory.renamed(|n| format!("{n}_{}", i + 1))?,
        });
    }
    let mut theory = theories[0].clone();
    for t in &theories[1..] {
        theory = theory.union(t)?;
    }
    let mut peons = Vec::new();
    let mut components = Vec::new();
    let mut offset = 0;
    for (t, th) in ts.iter().zip(theories) {
        let start = peons.len();
        peons.extend(t.peons.iter().map(|e| e.clone().in_factor(offset)));
        components.push(Component {
            theory: th,
            preds: (start..peons.len()).collect(),
            offset,
            dim: t.dim,
        });
        offset += t.dim;
    }
    let name = ts
        .iter()
        .map(|t| t.name.as_str())
        .collect::<Vec<_>>()
        .join(" (x) ");
    let mut out = Theon::new(name, theory, offset, peons)?;
    out.rank_bound = ts
        .iter()
        .map(|t| t.rank_bound)
        .try_fold(0, |a, r| r.map(|r| a.max(r)));
    out.independence = ts
        .iter()
        .map(|t| t.independence)
        .try_fold(usize::MAX, |a, l| l.map(|l| a.min(l)));
    out.components = components;
    Ok(out)
}

/// Two copies of `t` (predicates suffixed `_1` and `_2`) evaluating the same
/// expressions on the same coordinates.
pub fn diagonal_self_coupling(t: &Theon) -> Result<Theon> {
    let a = t.theory.renamed(|n| format!("{n}_1"))?;
    let b = t.theory.renamed(|n| format!("{n}_2"))?;
    let theory = a.union(&b)?;
    let m = t.peons.len();
    let mut peons = t.peons.clone();
    peons.extend(t.peons.iter().cloned());
    let mut out = Theon::new(format!("diag({})", t.name), theory, t.dim, peons)?;
    out.rank_bound = t.rank_bound;
    out.independence = t.independence;
    out.components = vec![
        Component {
            theory: a,
            preds: (0..m).collect(),
            offset: 0,
            dim: t.dim,
        },
        Component {
            theory: b,
            preds: (m..2 * m).collect(),
            offset: 0,
            dim: t.dim,
        },
    ];
    Ok(out)
}

/// `I(N)`: each source predicate tests its defining formula, where an atom
/// `Q(x_j1..x_jm)` reads `N_Q` on the sub-point along `(j1..jm)`. `src` is
/// the theory the result is declared to model.
pub fn interpret_theon(i: &Interpretation, t: &Theon, src: &Theory) -> Result<Theon> {
    if *i.target != *t.theory.sig {
        return Err(Error::InvalidSignature(format!(
            "interpretation `{}` reads {} but the theon is over {}",
            i.name, i.target, t.theory.sig
        )));
    }
    if *src.sig != *i.source {
        return Err(Error::InvalidSignature(format!(
            "interpretation `{}` defines {} but the declared theory is over {}",
            i.name, i.source, src.sig
        )));
    }
    let peons = i
        .defs
        .iter()
        .map(|d| translate(&d.node, &t.peons))
        .collect();
    let mut out = Theon::new(format!("{}({})", i.name, t.name), src.clone(), t.dim, peons)?;
    out.rank_bound = t.rank_bound;
    out.independence = t.independence;
    Ok(out)
}

fn translate(node: &Node, peons: &[TheonExpr]) -> TheonExpr {
    match node {
        Node::True => TheonExpr::Const { value: true },
        Node::False => TheonExpr::Const { value: false },
        Node::Eq(a, b) => TheonExpr::Const { value: a == b },
        Node::Atom { pred, args } => {
            let mut sorted = args.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != args.len() {
                return TheonExpr::Const { value: false };
            }
            TheonExpr::Project {
                map: args.clone(),
                expr: Box::new(peons[*pred].clone()),
            }
        }
        Node::Not(a) => translate(a, peons).not(),
        Node::And(parts) => TheonExpr::and(parts.iter().map(|p| translate(p, peons)).collect()),
        Node::Or(parts) => TheonExpr::or(parts.iter().map(|p| translate(p, peons)).collect()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{alternation, arc_orientation};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cat(name: &str) -> Theon {
        theon_by_name(name).unwrap()
    }

    #[test]
    fn linear_order_realizations_are_orders() {
        let t = cat("linear-order");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = t.realizer(6);
        for _ in 0..200 {
            let m = r.realize(&t.sample_point(6, &mut rng));
            assert!(t.theory.models(&m));
        }
    }

    #[test]
    fn complete_graph_at_p_one() {
        let t = cat("qr-graphon:p=1");
        let m = t.realize(&sample_theta(4, 1, 2, 9));
        assert_eq!(m.relation_size(0), 12);
    }

    #[test]
    fn realizations_satisfy_builtin_theories() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for name in [
            "qr-tournamon:k=2",
            "qr-tournamon:k=3",
            "tournament-np:k=2,p=0.3",
            "coloring:c=3",
            "qr-colored-hypergraphon:c=3,k=2,p=0.2:0.3:0.5",
            "dev-not-uinduce:k=3,p=0.4",
            "independence-not-disc:k=3,ell=1,p=0.6",
        ] {
            let t = cat(name);
            let r = t.realizer(5);
            for _ in 0..300 {
                let m = r.realize(&t.sample_point(5, &mut rng));
                assert!(t.theory.models(&m), "{name}: {m}");
            }
        }
    }

    #[test]
    fn exchangeability() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let perm = [3, 0, 4, 1, 2];
        for name in [
            "skew-graphon:p=0.3",
            "qr-tournamon:k=3",
            "dev-not-uinduce:k=2,p=0.5",
        ] {
            let t = cat(name);
            for _ in 0..100 {
                let theta = t.sample_point(5, &mut rng);
                assert_eq!(
                    t.realize(&theta.permuted(&perm)),
                    t.realize(&theta).relabel(&perm)
                );
            }
        }
    }

    #[test]
    fn coupling_layout() {
        let g = cat("qr-graphon:p=0.5");
        let o = cat("linear-order");
        let c = independent_coupling(&[&g, &o], Renaming::Keep).unwrap();
        assert_eq!(c.dim, 2);
        assert_eq!(c.signature().to_string(), "{E/2, Prec/2}");
        assert!(matches!(
            c.peons[1],
            TheonExpr::FactorProj { factor: 1, .. }
        ));
        assert!(independent_coupling(&[&o, &o], Renaming::Keep).is_err());
        let oo = independent_coupling(&[&o, &o], Renaming::Suffix).unwrap();
        assert_eq!(oo.signature().to_string(), "{Prec_1/2, Prec_2/2}");
        let single = independent_coupling(&[&g], Renaming::Keep).unwrap();
        let theta = sample_theta(4, 1, 2, 4);
        assert_eq!(single.realize(&theta), g.realize(&theta));
    }

    #[test]
    fn diagonal_copies_agree() {
        let g = cat("qr-graphon:p=0.5");
        let d = diagonal_self_coupling(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let m = d.realize(&d.sample_point(4, &mut rng));
            assert_eq!(m.tuples(0), m.tuples(1));
        }
    }

    #[test]
    fn interpretation_paths_agree() {
        let np = cat("tournament-np:k=2,p=0.3");
        let alt = alternation(1);
        let hyp = Theory::hypergraph(3);
        let it = interpret_theon(&alt, &np, &hyp).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..200 {
            let theta = np.sample_point(5, &mut rng);
            assert_eq!(it.realize(&theta), alt.apply(&np.realize(&theta)).unwrap());
        }
        let g = cat("qr-hypergraphon:k=2,p=0.3");
        let o = cat("linear-order");
        let c = independent_coupling(&[&g, &o], Renaming::Keep).unwrap();
        let arcs = arc_orientation(2);
        let tt = interpret_theon(&arcs, &c, &Theory::tournament(2)).unwrap();
        for _ in 0..200 {
            let theta = c.sample_point(4, &mut rng);
            assert_eq!(tt.realize(&theta), arcs.apply(&c.realize(&theta)).unwrap());
        }
    }

    #[test]
    fn membership_examples() {
        let t = cat("qr-tournamon:k=2");
        let mut x = Point::empty(2, 1, 2);
        x.set(VSet::of(&[1]), 0, 0.9);
        x.set(VSet::of(&[2]), 0, 0.1);
        x.set(VSet::of(&[1, 2]), 0, 0.3);
        assert!(!t.eval_membership(0, &x).unwrap());
        x.set(VSet::of(&[1]), 0, 0.05);
        assert!(t.eval_membership(0, &x).unwrap());
        assert!(t.eval_membership(0, &Point::empty(3, 1, 2)).is_err());
    }
}
