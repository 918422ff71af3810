use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest arity an expression may be evaluated at.
pub const MAX_ARITY: usize = 5;
const MAP_LEN: usize = 1 << MAX_ARITY;

/// Non-empty subset of the local vertex set `[k]`, stored as a bit mask
/// (`{1}` is bit 0). Serialized as a list of 1-based vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VSet(pub u32);

impl VSet {
    pub fn of(vertices: &[usize]) -> VSet {
        VSet(vertices.iter().fold(0, |m, &v| m | 1 << (v - 1)))
    }

    /// `[k]` itself.
    pub fn full(k: usize) -> VSet {
        VSet((1u32 << k) - 1)
    }

    pub fn singleton(v: usize) -> VSet {
        VSet(1 << (v - 1))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn vertices(self) -> Vec<usize> {
        (0..32)
            .filter(|i| self.0 >> i & 1 == 1)
            .map(|i| i + 1)
            .collect()
    }
}

impl Serialize for VSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.vertices().serialize(s)
    }
}

impl<'de> Deserialize<'de> for VSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let vs = Vec::<usize>::deserialize(d)?;
        if vs.iter().any(|&v| v == 0 || v > MAX_ARITY) {
            return Err(serde::de::Error::custom("set entries must lie in 1..=5"));
        }
        Ok(VSet::of(&vs))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cmp {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
}

impl Cmp {
    #[inline]
    pub fn test(self, v: f64, c: f64) -> bool {
        match self {
            Cmp::Lt => v < c,
            Cmp::Le => v <= c,
            Cmp::Gt => v > c,
            Cmp::Ge => v >= c,
        }
    }
}

/// Membership test for one predicate at a point of `E_k`.
///
/// Primitive tests read coordinates `x_A` of the current factor; `FactorProj`
/// moves to another factor of the ground space and `Project` re-reads the
/// point along a tuple of local vertices, which is how interpreted and
/// coupled theons are built from simpler ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TheonExpr {
    Const {
        value: bool,
    },
    /// `x_A op c`
    Thresh {
        set: VSet,
        #[serde(default)]
        factor: usize,
        op: Cmp,
        c: f64,
    },
    /// `frac(sum of x_A over terms) op c`
    SumMod {
        terms: Vec<(VSet, usize)>,
        op: Cmp,
        c: f64,
    },
    /// `min{x_{v} : v in [k]} op c`
    MinFirst {
        #[serde(default)]
        factor: usize,
        op: Cmp,
        c: f64,
    },
    /// The permutation sorting the first-order coordinates is even.
    Sign {
        #[serde(default)]
        factor: usize,
    },
    /// The first-order coordinates have the given ranks: `ranks[i]` is the
    /// 0-based position of `x_{i+1}` in increasing order.
    Ranks {
        #[serde(default)]
        factor: usize,
        ranks: Vec<usize>,
    },
    Not {
        arg: Box<TheonExpr>,
    },
    And {
        args: Vec<TheonExpr>,
    },
    Or {
        args: Vec<TheonExpr>,
    },
    Iff {
        args: Box<(TheonExpr, TheonExpr)>,
    },
    /// Evaluate `expr` with factor indices shifted by `factor`.
    FactorProj {
        factor: usize,
        expr: Box<TheonExpr>,
    },
    /// Evaluate `expr` (of arity `map.len()`) at the point projected along
    /// the injective map `i -> map[i]` (0-based local vertices).
    Project {
        map: Vec<usize>,
        expr: Box<TheonExpr>,
    },
}

/// Read-only view of a point: coordinates of the current local tuple.
#[derive(Clone, Copy)]
pub(crate) struct View<'a> {
    pub coords: &'a [f64],
    pub dim: usize,
    pub offset: usize,
    pub arity: usize,
    /// Local mask -> global mask.
    pub map: &'a [u32],
}

impl View<'_> {
    #[inline]
    fn x(&self, set: u32, factor: usize) -> f64 {
        self.coords[self.map[set as usize] as usize * self.dim + self.offset + factor]
    }

    #[inline]
    fn first(&self, i: usize, factor: usize) -> f64 {
        self.x(1 << i, factor)
    }
}

impl TheonExpr {
    pub fn thresh(set: VSet, op: Cmp, c: f64) -> Self {
        TheonExpr::Thresh {
            set,
            factor: 0,
            op,
            c,
        }
    }

    pub fn sign() -> Self {
        TheonExpr::Sign { factor: 0 }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        match self {
            TheonExpr::Not { arg } => *arg,
            TheonExpr::Const { value } => TheonExpr::Const { value: !value },
            other => TheonExpr::Not {
                arg: Box::new(other),
            },
        }
    }

    pub fn and(args: Vec<TheonExpr>) -> Self {
        TheonExpr::And { args }
    }

    pub fn or(args: Vec<TheonExpr>) -> Self {
        TheonExpr::Or { args }
    }

    pub fn iff(a: TheonExpr, b: TheonExpr) -> Self {
        TheonExpr::Iff {
            args: Box::new((a, b)),
        }
    }

    pub fn in_factor(self, factor: usize) -> Self {
        if factor == 0 {
            return self;
        }
        TheonExpr::FactorProj {
            factor,
            expr: Box::new(self),
        }
    }

    #[inline]
    pub(crate) fn eval(&self, v: &View<'_>) -> bool {
        match self {
            TheonExpr::Const { value } => *value,
            TheonExpr::Thresh { set, factor, op, c } => op.test(v.x(set.0, *factor), *c),
            TheonExpr::SumMod { terms, op, c } => {
                let s: f64 = terms.iter().map(|(set, f)| v.x(set.0, *f)).sum();
                op.test(s - s.floor(), *c)
            }
            TheonExpr::MinFirst { factor, op, c } => {
                let m = (0..v.arity)
                    .map(|i| v.first(i, *factor))
                    .fold(f64::INFINITY, f64::min);
                op.test(m, *c)
            }
            TheonExpr::Sign { factor } => {
                let mut inversions = 0;
                for i in 0..v.arity {
                    let xi = v.first(i, *factor);
                    for j in i + 1..v.arity {
                        // Ties keep index order.
                        if xi > v.first(j, *factor) {
                            inversions += 1;
                        }
                    }
                }
                inversions % 2 == 0
            }
            TheonExpr::Ranks { factor, ranks } => (0..v.arity).all(|i| {
                let xi = v.first(i, *factor);
                let rank = (0..v.arity)
                    .filter(|&j| {
                        let xj = v.first(j, *factor);
                        xj < xi || (xj == xi && j < i)
                    })
                    .count();
                rank == ranks[i]
            }),
            TheonExpr::Not { arg } => !arg.eval(v),
            TheonExpr::And { args } => args.iter().all(|a| a.eval(v)),
            TheonExpr::Or { args } => args.iter().any(|a| a.eval(v)),
            TheonExpr::Iff { args } => args.0.eval(v) == args.1.eval(v),
            TheonExpr::FactorProj { factor, expr } => expr.eval(&View {
                offset: v.offset + factor,
                ..*v
            }),
            TheonExpr::Project { map, expr } => {
                let m = map.len();
                let mut local = [0u32; MAP_LEN];
                for (mask, slot) in local.iter_mut().enumerate().take(1 << m).skip(1) {
                    let mut image = 0u32;
                    for (i, &target) in map.iter().enumerate() {
                        if mask >> i & 1 == 1 {
                            image |= 1 << target;
                        }
                    }
                    *slot = v.map[image as usize];
                }
                expr.eval(&View {
                    arity: m,
                    map: &local[..1 << m],
                    ..*v
                })
            }
        }
    }

    /// Checks that every referenced set lies in `[arity]` and every factor
    /// index is below `dim`.
    pub fn validate(&self, arity: usize, dim: usize) -> Result<()> {
        self.validate_at(arity, dim, 0)
    }

    fn validate_at(&self, arity: usize, dim: usize, offset: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidTheon(msg));
        let check_set = |set: &VSet| {
            if set.is_empty() || set.0 >> arity != 0 {
                return bad(format!(
                    "set {:?} is not a non-empty subset of [{arity}]",
                    set.vertices()
                ));
            }
            Ok(())
        };
        let check_factor = |f: usize| {
            if offset + f >= dim {
                return bad(format!(
                    "factor {} outside a {dim}-dimensional space",
                    offset + f
                ));
            }
            Ok(())
        };
        if arity > MAX_ARITY {
            return bad(format!("arity {arity} exceeds the supported {MAX_ARITY}"));
        }
        match self {
            TheonExpr::Const { .. } => Ok(()),
            TheonExpr::Thresh { set, factor, .. } => {
                check_set(set)?;
                check_factor(*factor)
            }
            TheonExpr::SumMod { terms, .. } => terms.iter().try_for_each(|(s, f)| {
                check_set(s)?;
                check_factor(*f)
            }),
            TheonExpr::MinFirst { factor, .. } | TheonExpr::Sign { factor } => {
                check_factor(*factor)
            }
            TheonExpr::Ranks { factor, ranks } => {
                let mut sorted = ranks.clone();
                sorted.sort_unstable();
                if sorted != (0..arity).collect::<Vec<_>>() {
                    return bad(format!(
                        "ranks {ranks:?} are not a permutation of 0..{arity}"
                    ));
                }
                check_factor(*factor)
            }
            TheonExpr::Not { arg } => arg.validate_at(arity, dim, offset),
            TheonExpr::And { args } | TheonExpr::Or { args } => args
                .iter()
                .try_for_each(|a| a.validate_at(arity, dim, offset)),
            TheonExpr::Iff { args } => {
                args.0.validate_at(arity, dim, offset)?;
                args.1.validate_at(arity, dim, offset)
            }
            TheonExpr::FactorProj { factor, expr } => expr.validate_at(arity, dim, offset + factor),
            TheonExpr::Project { map, expr } => {
                if map.iter().any(|&t| t >= arity) {
                    return bad(format!("projection {map:?} leaves [{arity}]"));
                }
                let mut sorted = map.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != map.len() {
                    return bad(format!("projection {map:?} is not injective"));
                }
                expr.validate_at(map.len(), dim, offset)
            }
        }
    }

    /// Largest set size read, following projections back to this arity.
    pub fn max_level(&self) -> usize {
        match self {
            TheonExpr::Const { .. } => 0,
            TheonExpr::Thresh { set, .. } => set.len(),
            TheonExpr::SumMod { terms, .. } => {
                terms.iter().map(|(s, _)| s.len()).max().unwrap_or(0)
            }
            TheonExpr::MinFirst { .. } | TheonExpr::Sign { .. } | TheonExpr::Ranks { .. } => 1,
            TheonExpr::Not { arg } => arg.max_level(),
            TheonExpr::And { args } | TheonExpr::Or { args } => {
                args.iter().map(TheonExpr::max_level).max().unwrap_or(0)
            }
            TheonExpr::Iff { args } => args.0.max_level().max(args.1.max_level()),
            TheonExpr::FactorProj { expr, .. } | TheonExpr::Project { expr, .. } => {
                expr.max_level()
            }
        }
    }
}

/// Identity mask map for a point on `[k]`.
pub(crate) fn identity_map(k: usize) -> Vec<u32> {
    (0..1u32 << k).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval_at(expr: &TheonExpr, k: usize, coords: &[(VSet, f64)]) -> bool {
        let mut flat = vec![f64::NAN; 1 << k];
        for (s, v) in coords {
            flat[s.0 as usize] = *v;
        }
        let map = identity_map(k);
        expr.eval(&View {
            coords: &flat,
            dim: 1,
            offset: 0,
            arity: k,
            map: &map,
        })
    }

    #[test]
    fn constant_graphon_threshold() {
        let e = TheonExpr::thresh(VSet::of(&[1, 2]), Cmp::Lt, 0.3);
        assert!(eval_at(
            &e,
            2,
            &[
                (VSet::of(&[1]), 0.9),
                (VSet::of(&[2]), 0.9),
                (VSet::of(&[1, 2]), 0.2)
            ]
        ));
    }

    #[test]
    fn skew_graphon_sum() {
        let e = TheonExpr::SumMod {
            terms: vec![
                (VSet::of(&[1]), 0),
                (VSet::of(&[2]), 0),
                (VSet::of(&[1, 2]), 0),
            ],
            op: Cmp::Lt,
            c: 0.3,
        };
        // frac(0.5 + 0.6 + 0.3) = 0.4 >= 0.3
        assert!(!eval_at(
            &e,
            2,
            &[
                (VSet::of(&[1]), 0.5),
                (VSet::of(&[2]), 0.6),
                (VSet::of(&[1, 2]), 0.3)
            ]
        ));
    }

    #[test]
    fn tournamon_equivalence() {
        let e = TheonExpr::iff(
            TheonExpr::thresh(VSet::full(2), Cmp::Lt, 0.5),
            TheonExpr::sign(),
        );
        // sigma_x is the swap (odd) while x_12 < 1/2.
        assert!(!eval_at(
            &e,
            2,
            &[
                (VSet::of(&[1]), 0.9),
                (VSet::of(&[2]), 0.1),
                (VSet::of(&[1, 2]), 0.3)
            ]
        ));
        assert!(eval_at(
            &e,
            2,
            &[
                (VSet::of(&[1]), 0.1),
                (VSet::of(&[2]), 0.9),
                (VSet::of(&[1, 2]), 0.3)
            ]
        ));
    }

    #[test]
    fn ranks_and_sign_agree() {
        let pts = [(0.3, 0.1, 0.2), (0.1, 0.2, 0.3), (0.9, 0.5, 0.1)];
        for (a, b, c) in pts {
            let coords = [
                (VSet::of(&[1]), a),
                (VSet::of(&[2]), b),
                (VSet::of(&[3]), c),
            ];
            let mut order = [(a, 0usize), (b, 1), (c, 2)];
            order.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
            let mut ranks = vec![0; 3];
            for (r, &(_, i)) in order.iter().enumerate() {
                ranks[i] = r;
            }
            assert!(eval_at(
                &TheonExpr::Ranks {
                    factor: 0,
                    ranks: ranks.clone()
                },
                3,
                &coords
            ));
            let inv = (0..3)
                .flat_map(|i| (i + 1..3).map(move |j| (i, j)))
                .filter(|&(i, j)| ranks[i] > ranks[j])
                .count();
            assert_eq!(eval_at(&TheonExpr::sign(), 3, &coords), inv % 2 == 0);
        }
    }

    #[test]
    fn projection_reads_subpoint() {
        // Read x_{1} of the projected pair (2,1): that is x_{2} of the point.
        let e = TheonExpr::Project {
            map: vec![1, 0],
            expr: Box::new(TheonExpr::thresh(VSet::of(&[1]), Cmp::Lt, 0.5)),
        };
        let coords = [
            (VSet::of(&[1]), 0.9),
            (VSet::of(&[2]), 0.1),
            (VSet::of(&[1, 2]), 0.5),
        ];
        assert!(eval_at(&e, 2, &coords));
    }

    #[test]
    fn validation() {
        assert!(TheonExpr::thresh(VSet::of(&[3]), Cmp::Lt, 0.5)
            .validate(2, 1)
            .is_err());
        assert!(TheonExpr::sign().in_factor(1).validate(2, 1).is_err());
        assert!(TheonExpr::sign().in_factor(1).validate(2, 2).is_ok());
        let p = TheonExpr::Project {
            map: vec![0, 0],
            expr: Box::new(TheonExpr::sign()),
        };
        assert!(p.validate(2, 1).is_err());
    }

    #[test]
    fn json_shape() {
        let e = TheonExpr::thresh(VSet::of(&[1, 2]), Cmp::Lt, 0.25);
        let s = serde_json::to_string(&e).unwrap();
        assert_eq!(
            s,
            r#"{"node":"thresh","set":[1,2],"factor":0,"op":"<","c":0.25}"#
        );
        let back: TheonExpr =
            serde_json::from_str(r#"{"node":"thresh","set":[1,2],"op":"<","c":0.25}"#).unwrap();
        assert_eq!(back, e);
    }
}
