//! Built-in theories, theons and interpretations addressed as
//! `name:key=value,key=value`. Vector parameters separate entries with `:`
//! (`p=0.2:0.3:0.5`); scalars accept decimals or fractions (`p=3/10`).

use std::collections::BTreeMap;

use itertools::Itertools;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::calculus::{parse_rational, ActionTable};
use crate::error::{Error, Result};
use crate::logic::{alternating_copies, alternation, arc_orientation, Interpretation, Theory};
use crate::relational::Signature;
use crate::theon::{independent_coupling, Cmp, Component, Renaming, Theon, TheonExpr, VSet};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub params: &'static str,
    pub about: &'static str,
}

pub const THEORIES: &[CatalogEntry] = &[
    CatalogEntry {
        name: "graph",
        params: "",
        about: "simple graphs",
    },
    CatalogEntry {
        name: "hypergraph",
        params: "k",
        about: "k-uniform hypergraphs",
    },
    CatalogEntry {
        name: "linear-order",
        params: "",
        about: "strict linear orders (Prec)",
    },
    CatalogEntry {
        name: "coloring",
        params: "c",
        about: "vertex colorings C1..Cc",
    },
    CatalogEntry {
        name: "tournament",
        params: "k",
        about: "k-tournaments",
    },
    CatalogEntry {
        name: "colored-hypergraph",
        params: "c,k",
        about: "k-hypergraphs with c edge colors E1..Ec",
    },
    CatalogEntry {
        name: "tournament-order",
        params: "k",
        about: "k-tournament plus a linear order",
    },
    CatalogEntry {
        name: "hypergraph-order",
        params: "k",
        about: "k-hypergraph plus a linear order",
    },
];

pub const THEONS: &[CatalogEntry] = &[
    CatalogEntry {
        name: "qr-hypergraphon",
        params: "k,p",
        about: "quasirandom k-hypergraphon, x_[k] < p",
    },
    CatalogEntry {
        name: "qr-graphon",
        params: "p",
        about: "quasirandom graphon, x_12 < p",
    },
    CatalogEntry {
        name: "constant-graphon",
        params: "p",
        about: "same as qr-graphon",
    },
    CatalogEntry {
        name: "skew-graphon",
        params: "p",
        about: "frac(x_1 + x_2 + x_12) < p",
    },
    CatalogEntry {
        name: "qr-colored-hypergraphon",
        params: "c,k,p",
        about: "c-colored k-hypergraphon with color densities p (default uniform)",
    },
    CatalogEntry {
        name: "qr-tournamon",
        params: "k",
        about: "x_[k] < 1/2 iff the rank permutation is even",
    },
    CatalogEntry {
        name: "linear-order",
        params: "",
        about: "x_1 < x_2",
    },
    CatalogEntry {
        name: "coloring",
        params: "c,p",
        about: "c-coloring by intervals of x_1 (default uniform)",
    },
    CatalogEntry {
        name: "tournament-np",
        params: "k,p",
        about: "x_[k] < p iff the rank permutation is even",
    },
    CatalogEntry {
        name: "tournament-np-order",
        params: "k,p",
        about: "tournament-np together with the order it is aligned with",
    },
    CatalogEntry {
        name: "dev-not-uinduce",
        params: "k,p",
        about: "x_[k] < p if some x_v < 1/2, else frac(sum of (k-1)-set coordinates) < p",
    },
    CatalogEntry {
        name: "independence-not-disc",
        params: "k,ell,p",
        about: "every (ell+1)-set coordinate below p",
    },
    CatalogEntry {
        name: "independence-not-disc-coupling",
        params: "k,ell,p",
        about: "independence-not-disc with P(x) iff x_[ell+1] >= p on the same coordinates",
    },
    CatalogEntry {
        name: "dev-two-coloring",
        params: "k,p,i",
        about: "dev-not-uinduce with color i on x_1 < 1/2 and the other color on x_1 >= 1/2",
    },
];

pub const INTERPRETATIONS: &[CatalogEntry] = &[
    CatalogEntry {
        name: "alternation",
        params: "ell",
        about: "(ell+2)-sets not inducing the alternating tournament",
    },
    CatalogEntry {
        name: "alternating-copies",
        params: "ell",
        about: "(ell+2)-sets inducing the alternating (ell+1)-tournament",
    },
    CatalogEntry {
        name: "alternating-copies-order",
        params: "ell",
        about: "alternating-copies together with the identity on the order",
    },
    CatalogEntry {
        name: "arc-orientation",
        params: "k",
        about: "k-tournament from a k-hypergraph and an order",
    },
];

struct Spec {
    name: String,
    params: BTreeMap<String, String>,
}

impl Spec {
    fn parse(text: &str, allowed: &[CatalogEntry]) -> Result<(Spec, &'static str)> {
        let (name, rest) = text.trim().split_once(':').unwrap_or((text.trim(), ""));
        let entry = allowed
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| Error::UnknownEntry(name.to_string()))?;
        let keys: Vec<&str> = entry.params.split(',').filter(|k| !k.is_empty()).collect();
        let mut params = BTreeMap::new();
        for kv in rest.split(',').filter(|s| !s.trim().is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::param(kv.trim(), "expected key=value"))?;
            let k = k.trim();
            if !keys.contains(&k) {
                return Err(Error::param(
                    k,
                    format!("`{name}` takes parameters [{}]", entry.params),
                ));
            }
            if params.insert(k.to_string(), v.trim().to_string()).is_some() {
                return Err(Error::param(k, "given twice"));
            }
        }
        Ok((
            Spec {
                name: name.to_string(),
                params,
            },
            entry.params,
        ))
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str)
    }

    fn int(&self, key: &str, default: Option<usize>) -> Result<usize> {
        match self.raw(key) {
            Some(v) => v
                .parse()
                .map_err(|_| Error::param(key, format!("`{v}` is not a non-negative integer"))),
            None => default.ok_or_else(|| Error::param(key, "required")),
        }
    }

    fn real(&self, key: &str, default: Option<f64>) -> Result<f64> {
        match self.raw(key) {
            Some(v) => scalar(key, v),
            None => default.ok_or_else(|| Error::param(key, "required")),
        }
    }

    fn prob(&self, key: &str, default: Option<f64>) -> Result<f64> {
        let p = self.real(key, default)?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::param(key, format!("{p} is not in [0,1]")));
        }
        Ok(p)
    }

    fn vector(&self, key: &str, len: usize) -> Result<Vec<f64>> {
        match self.raw(key) {
            Some(v) => {
                let out = v
                    .split(':')
                    .map(|x| scalar(key, x))
                    .collect::<Result<Vec<_>>>()?;
                if out.len() != len {
                    return Err(Error::param(key, format!("expected {len} entries")));
                }
                Ok(out)
            }
            None => Ok(vec![1.0 / len as f64; len]),
        }
    }

    /// Canonical text with parameters in declaration order.
    fn canonical(&self, keys: &str) -> String {
        let parts: Vec<String> = keys
            .split(',')
            .filter_map(|k| self.raw(k).map(|v| format!("{k}={v}")))
            .collect();
        if parts.is_empty() {
            self.name.clone()
        } else {
            format!("{}:{}", self.name, parts.join(","))
        }
    }
}

fn scalar(key: &str, v: &str) -> Result<f64> {
    parse_rational(v)
        .ok()
        .and_then(|q| q.to_f64())
        .ok_or_else(|| Error::param(key, format!("`{v}` is not a number")))
}

fn arity(key: &str, k: usize, min: usize) -> Result<usize> {
    if k < min || k > crate::theon::MAX_ARITY {
        return Err(Error::param(
            key,
            format!("{k} outside {min}..={}", crate::theon::MAX_ARITY),
        ));
    }
    Ok(k)
}

pub fn theory_by_name(text: &str) -> Result<Theory> {
    let (s, _) = Spec::parse(text, THEORIES)?;
    Ok(match s.name.as_str() {
        "graph" => Theory::graph(),
        "hypergraph" => Theory::hypergraph(arity("k", s.int("k", None)?, 1)?),
        "linear-order" => Theory::linear_order(),
        "coloring" => Theory::coloring(s.int("c", None)?.max(1)),
        "tournament" => Theory::tournament(arity("k", s.int("k", None)?, 1)?),
        "colored-hypergraph" => {
            let mut t = ActionTable::trivial(s.int("c", None)?, arity("k", s.int("k", None)?, 1)?)?
                .theory();
            t.name = text.to_string();
            t
        }
        "tournament-order" => {
            Theory::tournament(arity("k", s.int("k", None)?, 1)?).union(&Theory::linear_order())?
        }
        "hypergraph-order" => {
            Theory::hypergraph(arity("k", s.int("k", None)?, 1)?).union(&Theory::linear_order())?
        }
        _ => unreachable!("listed in THEORIES"),
    })
}

pub fn interpretation_by_name(text: &str) -> Result<(Interpretation, Theory, Theory)> {
    let (s, _) = Spec::parse(text, INTERPRETATIONS)?;
    let ell = || -> Result<usize> {
        let ell = s.int("ell", None)?;
        arity("ell", ell + 2, 3)?;
        Ok(ell)
    };
    Ok(match s.name.as_str() {
        "alternation" => {
            let ell = ell()?;
            (
                alternation(ell),
                Theory::hypergraph(ell + 2),
                Theory::tournament(ell + 1),
            )
        }
        "alternating-copies" => {
            let ell = ell()?;
            (
                alternating_copies(ell),
                Theory::hypergraph(ell + 2),
                Theory::tournament(ell + 1),
            )
        }
        "alternating-copies-order" => {
            let ell = ell()?;
            let order = Theory::linear_order();
            let i = alternating_copies(ell).union(&Interpretation::identity(&order))?;
            (
                i,
                Theory::hypergraph(ell + 2).union(&order)?,
                Theory::tournament(ell + 1).union(&order)?,
            )
        }
        "arc-orientation" => {
            let k = arity("k", s.int("k", None)?, 2)?;
            (
                arc_orientation(k),
                Theory::tournament(k),
                Theory::hypergraph(k).union(&Theory::linear_order())?,
            )
        }
        _ => unreachable!("listed in INTERPRETATIONS"),
    })
}

pub fn theon_by_name(text: &str) -> Result<Theon> {
    let (s, keys) = Spec::parse(text, THEONS)?;
    let mut t = match s.name.as_str() {
        "qr-hypergraphon" => {
            qr_hypergraphon(arity("k", s.int("k", None)?, 1)?, s.prob("p", None)?)?
        }
        "qr-graphon" | "constant-graphon" => {
            let mut t = qr_hypergraphon(2, s.prob("p", None)?)?;
            t.theory = Theory::graph();
            t
        }
        "skew-graphon" => skew_graphon(s.prob("p", None)?)?,
        "qr-colored-hypergraphon" => {
            let c = s.int("c", None)?;
            let k = arity("k", s.int("k", None)?, 1)?;
            let mut t = ActionTable::trivial(c, k)?.theon(&s.vector("p", c)?)?;
            t.theory.name = format!("colored-hypergraph:c={c},k={k}");
            t
        }
        "qr-tournamon" => tournament_np(arity("k", s.int("k", None)?, 2)?, 0.5)?,
        "linear-order" => linear_order()?,
        "coloring" => {
            let c = s.int("c", None)?;
            coloring(c, &s.vector("p", c)?)?
        }
        "tournament-np" => tournament_np(arity("k", s.int("k", None)?, 2)?, s.prob("p", None)?)?,
        "tournament-np-order" => {
            tournament_np_order(arity("k", s.int("k", None)?, 2)?, s.prob("p", None)?)?
        }
        "dev-not-uinduce" => {
            dev_not_uinduce(arity("k", s.int("k", None)?, 2)?, s.prob("p", None)?)?
        }
        "independence-not-disc" => {
            let k = arity("k", s.int("k", None)?, 2)?;
            independence_not_disc(k, s.int("ell", None)?, s.prob("p", None)?)?
        }
        "independence-not-disc-coupling" => {
            let k = arity("k", s.int("k", None)?, 2)?;
            independence_not_disc_coupling(k, s.int("ell", None)?, s.prob("p", None)?)?
        }
        "dev-two-coloring" => {
            let k = arity("k", s.int("k", None)?, 2)?;
            dev_two_coloring(k, s.prob("p", None)?, s.int("i", Some(1))?)?
        }
        _ => unreachable!("listed in THEONS"),
    };
    t.name = s.canonical(keys);
    Ok(t)
}

pub fn qr_hypergraphon(k: usize, p: f64) -> Result<Theon> {
    let e = TheonExpr::thresh(VSet::full(k), Cmp::Lt, p);
    Ok(Theon::new(
        format!("qr-hypergraphon:k={k},p={p}"),
        Theory::hypergraph(k),
        1,
        vec![e],
    )?
    .with_rank_bound(k)
    .with_independence(k - 1))
}

pub fn skew_graphon(p: f64) -> Result<Theon> {
    let e = TheonExpr::SumMod {
        terms: vec![
            (VSet::of(&[1]), 0),
            (VSet::of(&[2]), 0),
            (VSet::of(&[1, 2]), 0),
        ],
        op: Cmp::Lt,
        c: p,
    };
    Ok(Theon::new(format!("skew-graphon:p={p}"), Theory::graph(), 1, vec![e])?.with_rank_bound(2))
}

pub fn linear_order() -> Result<Theon> {
    Ok(Theon::new(
        "linear-order",
        Theory::linear_order(),
        1,
        vec![TheonExpr::sign()],
    )?
    .with_rank_bound(1))
}

/// `C_i` holds when `x_1` lies in the `i`-th interval of the partition of
/// `[0,1)` with lengths `p`.
pub fn coloring(c: usize, p: &[f64]) -> Result<Theon> {
    if c == 0
        || p.len() != c
        || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9
        || p.iter().any(|v| *v < 0.0)
    {
        return Err(Error::param(
            "p",
            "expected one probability per color summing to 1",
        ));
    }
    let mut lo = 0.0;
    let mut peons = Vec::new();
    for (i, v) in p.iter().enumerate() {
        let hi = lo + v;
        let mut parts = Vec::new();
        if i > 0 {
            parts.push(TheonExpr::thresh(VSet::of(&[1]), Cmp::Ge, lo));
        }
        if i + 1 < c {
            parts.push(TheonExpr::thresh(VSet::of(&[1]), Cmp::Lt, hi));
        }
        peons.push(match parts.len() {
            0 => TheonExpr::Const { value: true },
            1 => parts.pop().unwrap(),
            _ => TheonExpr::and(parts),
        });
        lo = hi;
    }
    Ok(Theon::new(format!("coloring:c={c}"), Theory::coloring(c), 1, peons)?.with_rank_bound(1))
}

fn np_expr(k: usize, p: f64) -> TheonExpr {
    TheonExpr::iff(
        TheonExpr::thresh(VSet::full(k), Cmp::Lt, p),
        TheonExpr::sign(),
    )
}

/// `x_[k] < p` iff the first-order coordinates are in even order.
pub fn tournament_np(k: usize, p: f64) -> Result<Theon> {
    Ok(Theon::new(
        format!("tournament-np:k={k},p={p}"),
        Theory::tournament(k),
        1,
        vec![np_expr(k, p)],
    )?
    .with_rank_bound(k))
}

/// [`tournament_np`] coupled with the order read from the same
/// first-order coordinates.
pub fn tournament_np_order(k: usize, p: f64) -> Result<Theon> {
    let tour = Theory::tournament(k);
    let order = Theory::linear_order();
    let theory = tour.union(&order)?;
    let mut t = Theon::new(
        format!("tournament-np-order:k={k},p={p}"),
        theory,
        1,
        vec![np_expr(k, p), TheonExpr::sign()],
    )?
    .with_rank_bound(k);
    t.components = vec![
        Component {
            theory: tour,
            preds: vec![0],
            offset: 0,
            dim: 1,
        },
        Component {
            theory: order,
            preds: vec![1],
            offset: 0,
            dim: 1,
        },
    ];
    Ok(t)
}

fn dev_expr(k: usize, p: f64) -> TheonExpr {
    let low = TheonExpr::MinFirst {
        factor: 0,
        op: Cmp::Lt,
        c: 0.5,
    };
    let terms = (1..=k)
        .combinations(k - 1)
        .map(|s| (VSet::of(&s), 0))
        .collect();
    TheonExpr::or(vec![
        TheonExpr::and(vec![
            low.clone(),
            TheonExpr::thresh(VSet::full(k), Cmp::Lt, p),
        ]),
        TheonExpr::and(vec![
            low.not(),
            TheonExpr::SumMod {
                terms,
                op: Cmp::Lt,
                c: p,
            },
        ]),
    ])
}

/// Reads `x_[k]` when some first-order coordinate is below 1/2 and the
/// fractional part of the sum of the `(k-1)`-set coordinates otherwise.
pub fn dev_not_uinduce(k: usize, p: f64) -> Result<Theon> {
    Ok(Theon::new(
        format!("dev-not-uinduce:k={k},p={p}"),
        Theory::hypergraph(k),
        1,
        vec![dev_expr(k, p)],
    )?
    .with_rank_bound(k))
}

/// Colors by `x_1`: color `i` below 1/2, the other color above.
pub fn dev_two_coloring(k: usize, p: f64, i: usize) -> Result<Theon> {
    if !(1..=2).contains(&i) {
        return Err(Error::param("i", "color index must be 1 or 2"));
    }
    let hyp = Theory::hypergraph(k);
    let col = Theory::coloring(2);
    let theory = hyp.union(&col)?;
    let below = TheonExpr::thresh(VSet::of(&[1]), Cmp::Lt, 0.5);
    let above = TheonExpr::thresh(VSet::of(&[1]), Cmp::Ge, 0.5);
    let (c1, c2) = if i == 1 {
        (below, above)
    } else {
        (above, below)
    };
    let mut t = Theon::new(
        format!("dev-two-coloring:k={k},p={p},i={i}"),
        theory,
        1,
        vec![dev_expr(k, p), c1, c2],
    )?;
    t.components = vec![
        Component {
            theory: hyp,
            preds: vec![0],
            offset: 0,
            dim: 1,
        },
        Component {
            theory: col,
            preds: vec![1, 2],
            offset: 0,
            dim: 1,
        },
    ];
    Ok(t)
}

fn max_expr(k: usize, ell: usize, p: f64) -> TheonExpr {
    TheonExpr::and(
        (1..=k)
            .combinations(ell + 1)
            .map(|s| TheonExpr::thresh(VSet::of(&s), Cmp::Lt, p))
            .collect(),
    )
}

/// Edge iff every `(ell+1)`-set coordinate is below `p`.
pub fn independence_not_disc(k: usize, ell: usize, p: f64) -> Result<Theon> {
    if ell == 0 || ell >= k {
        return Err(Error::param("ell", format!("need 1 <= ell < k = {k}")));
    }
    Ok(Theon::new(
        format!("independence-not-disc:k={k},ell={ell},p={p}"),
        Theory::hypergraph(k),
        1,
        vec![max_expr(k, ell, p)],
    )?
    .with_rank_bound(ell + 1)
    .with_independence(ell))
}

/// [`independence_not_disc`] with an `(ell+1)`-ary predicate `P` that holds
/// iff `x_[ell+1] >= p`, on the same coordinates.
pub fn independence_not_disc_coupling(k: usize, ell: usize, p: f64) -> Result<Theon> {
    let base = independence_not_disc(k, ell, p)?;
    let side = Theory::pure("disc-probe", Signature::new([("P", ell + 1)])?);
    let theory = base.theory.union(&side)?;
    let mut t = Theon::new(
        format!("independence-not-disc-coupling:k={k},ell={ell},p={p}"),
        theory,
        1,
        vec![
            base.peons[0].clone(),
            TheonExpr::thresh(VSet::full(ell + 1), Cmp::Ge, p),
        ],
    )?;
    t.components = vec![
        Component {
            theory: base.theory.clone(),
            preds: vec![0],
            offset: 0,
            dim: 1,
        },
        Component {
            theory: side,
            preds: vec![1],
            offset: 0,
            dim: 1,
        },
    ];
    Ok(t)
}

/// Every registered interpretation paired with a theon over its target,
/// plus the theory the interpreted theon models.
pub fn interpretation_pairs() -> Result<Vec<(Interpretation, Theon, Theory)>> {
    let mut out = Vec::new();
    for (iname, tname) in [
        ("alternation:ell=1", "tournament-np:k=2,p=0.3"),
        ("alternating-copies:ell=1", "tournament-np:k=2,p=0.3"),
        ("alternating-copies:ell=1", "qr-tournamon:k=2"),
        ("alternation:ell=2", "qr-tournamon:k=3"),
        (
            "alternating-copies-order:ell=1",
            "tournament-np-order:k=2,p=0.3",
        ),
    ] {
        let (i, src, _) = interpretation_by_name(iname)?;
        out.push((i, theon_by_name(tname)?, src));
    }
    for (k, p) in [(2, 0.3), (3, 0.5)] {
        let (i, src, _) = interpretation_by_name(&format!("arc-orientation:k={k}"))?;
        let h = qr_hypergraphon(k, p)?;
        let o = linear_order()?;
        out.push((i, independent_coupling(&[&h, &o], Renaming::Keep)?, src));
    }
    let np = theon_by_name("tournament-np-order:k=2,p=0.3")?;
    let tour = Theory::tournament(2);
    let erase = Interpretation::structure_erasing(&tour.sig, np.theory.sig.clone())?;
    out.push((erase, np, tour));
    Ok(out)
}
