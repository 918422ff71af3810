use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::relational::Signature;

/// Dense membership set over all tuples in `[n]^k`.
///
/// Bit `i` lives in word `i / 64` at position `63 - i % 64`, so comparing the
/// word vectors lexicographically is the same as comparing the bit strings in
/// tuple-lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Relation {
    arity: usize,
    words: Vec<u64>,
}

impl Relation {
    fn empty(n: usize, arity: usize) -> Self {
        let bits = n.pow(arity as u32);
        Relation {
            arity,
            words: vec![0; bits.div_ceil(64)],
        }
    }

    #[inline]
    fn get(&self, idx: usize) -> bool {
        self.words[idx >> 6] & (1u64 << (63 - (idx & 63))) != 0
    }

    #[inline]
    fn set(&mut self, idx: usize, value: bool) {
        let mask = 1u64 << (63 - (idx & 63));
        if value {
            self.words[idx >> 6] |= mask;
        } else {
            self.words[idx >> 6] &= !mask;
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn clear(&mut self) {
        self.words.iter_mut().for_each(|w| *w = 0);
    }
}

#[inline]
pub(crate) fn tuple_index(n: usize, tuple: &[usize]) -> usize {
    tuple.iter().fold(0, |acc, &v| acc * n + v)
}

pub(crate) fn index_tuple(n: usize, arity: usize, mut idx: usize, out: &mut [usize]) {
    for slot in out[..arity].iter_mut().rev() {
        *slot = idx % n;
        idx /= n;
    }
}

pub(crate) fn is_injective(tuple: &[usize]) -> bool {
    tuple
        .iter()
        .enumerate()
        .all(|(i, a)| tuple[..i].iter().all(|b| a != b))
}

/// All injective `k`-tuples over `0..n`, in lexicographic order.
pub fn injective_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in 0..n {
            if !cur.contains(&v) {
                cur.push(v);
                rec(n, k, cur, out);
                cur.pop();
            }
        }
    }
    rec(n, k, &mut cur, &mut out);
    out
}

/// A finite model on the vertex set `0..n` (printed 1-based).
///
/// Relations only ever hold injective tuples; inserting a tuple with a
/// repeated entry is rejected.
#[derive(Clone)]
pub struct Model {
    sig: Arc<Signature>,
    n: usize,
    rels: Vec<Relation>,
}

impl Model {
    pub fn empty(sig: Arc<Signature>, n: usize) -> Self {
        let rels = sig
            .predicates()
            .iter()
            .map(|p| Relation::empty(n, p.arity))
            .collect();
        Model { sig, n, rels }
    }

    /// Builds a model from 0-based tuples, one list per predicate.
    pub fn from_tuples(
        sig: Arc<Signature>,
        n: usize,
        relations: &[(&str, Vec<Vec<usize>>)],
    ) -> Result<Self> {
        let mut m = Model::empty(sig, n);
        for (name, tuples) in relations {
            let p = m.sig.lookup(name)?;
            for t in tuples {
                m.insert(p, t)?;
            }
        }
        Ok(m)
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn signature_arc(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn relation(&self, pred: usize) -> &Relation {
        &self.rels[pred]
    }

    #[inline]
    pub fn contains(&self, pred: usize, tuple: &[usize]) -> bool {
        debug_assert_eq!(tuple.len(), self.rels[pred].arity);
        if tuple.iter().any(|&v| v >= self.n) {
            return false;
        }
        self.rels[pred].get(tuple_index(self.n, tuple))
    }

    pub fn insert(&mut self, pred: usize, tuple: &[usize]) -> Result<()> {
        self.check_tuple(pred, tuple)?;
        let idx = tuple_index(self.n, tuple);
        self.rels[pred].set(idx, true);
        Ok(())
    }

    pub fn remove(&mut self, pred: usize, tuple: &[usize]) -> Result<()> {
        self.check_tuple(pred, tuple)?;
        let idx = tuple_index(self.n, tuple);
        self.rels[pred].set(idx, false);
        Ok(())
    }

    /// Unchecked setter for hot loops; the caller guarantees an injective,
    /// in-range tuple index.
    #[inline]
    pub(crate) fn set_index(&mut self, pred: usize, idx: usize, value: bool) {
        self.rels[pred].set(idx, value);
    }

    #[inline]
    pub(crate) fn get_index(&self, pred: usize, idx: usize) -> bool {
        self.rels[pred].get(idx)
    }

    pub(crate) fn clear(&mut self) {
        self.rels.iter_mut().for_each(Relation::clear);
    }

    fn check_tuple(&self, pred: usize, tuple: &[usize]) -> Result<()> {
        let arity = self.rels[pred].arity;
        if tuple.len() != arity {
            return Err(Error::ArityMismatch {
                name: self.sig.name(pred).to_string(),
                expected: arity,
                got: tuple.len(),
            });
        }
        if let Some(&v) = tuple.iter().find(|&&v| v >= self.n) {
            return Err(Error::InvalidModel(format!(
                "vertex {} outside [{}]",
                v + 1,
                self.n
            )));
        }
        if !is_injective(tuple) {
            return Err(Error::InvalidModel(format!(
                "tuple {:?} of `{}` repeats a vertex",
                tuple.iter().map(|v| v + 1).collect::<Vec<_>>(),
                self.sig.name(pred)
            )));
        }
        Ok(())
    }

    /// Tuples of one predicate in lexicographic order (0-based).
    pub fn tuples(&self, pred: usize) -> Vec<Vec<usize>> {
        let arity = self.rels[pred].arity;
        let total = self.n.pow(arity as u32);
        let mut buf = vec![0; arity];
        (0..total)
            .filter(|&i| self.rels[pred].get(i))
            .map(|i| {
                index_tuple(self.n, arity, i, &mut buf);
                buf.clone()
            })
            .collect()
    }

    pub fn relation_size(&self, pred: usize) -> usize {
        self.rels[pred].count()
    }

    /// `perm[v]` is the new name of vertex `v`.
    pub fn relabel(&self, perm: &[usize]) -> Model {
        let mut out = Model::empty(self.sig.clone(), self.n);
        let mut buf = [0usize; 16];
        for (p, rel) in self.rels.iter().enumerate() {
            let k = rel.arity;
            for (w, &word) in rel.words.iter().enumerate() {
                let mut bits = word;
                while bits != 0 {
                    let lead = bits.leading_zeros() as usize;
                    bits &= !(1u64 << (63 - lead));
                    let idx = w * 64 + lead;
                    index_tuple(self.n, k, idx, &mut buf);
                    let mut j = 0;
                    for &v in &buf[..k] {
                        j = j * self.n + perm[v];
                    }
                    out.rels[p].set(j, true);
                }
            }
        }
        out
    }

    /// Induced submodel on `vertices`; vertex `i` of the result is `vertices[i]`.
    pub fn induced(&self, vertices: &[usize]) -> Model {
        let m = vertices.len();
        let mut out = Model::empty(self.sig.clone(), m);
        for (p, rel) in self.rels.iter().enumerate() {
            let k = rel.arity;
            if k > m {
                continue;
            }
            for t in injective_tuples(m, k) {
                let img: Vec<usize> = t.iter().map(|&i| vertices[i]).collect();
                if self.contains(p, &img) {
                    out.rels[p].set(tuple_index(m, &t), true);
                }
            }
        }
        out
    }

    /// Restriction to a sub-signature, given as predicate indices of `self`.
    pub fn reduct(&self, sig: Arc<Signature>, preds: &[usize]) -> Model {
        debug_assert_eq!(sig.len(), preds.len());
        Model {
            sig,
            n: self.n,
            rels: preds.iter().map(|&p| self.rels[p].clone()).collect(),
        }
    }

    /// Same relations over a different signature with identical arities.
    pub fn with_signature(&self, sig: Arc<Signature>) -> Result<Model> {
        if sig.len() != self.sig.len() || (0..sig.len()).any(|i| sig.arity(i) != self.sig.arity(i))
        {
            return Err(Error::InvalidModel(format!(
                "signature {} is not compatible with {}",
                sig, self.sig
            )));
        }
        Ok(Model {
            sig,
            n: self.n,
            rels: self.rels.clone(),
        })
    }

    /// Joins models on the same vertex set over disjoint signatures.
    pub fn union(sig: Arc<Signature>, parts: &[&Model]) -> Result<Model> {
        let n = parts.first().map_or(0, |m| m.n);
        let mut rels = Vec::new();
        for m in parts {
            if m.n != n {
                return Err(Error::InvalidModel(
                    "union of models with different vertex counts".into(),
                ));
            }
            rels.extend(m.rels.iter().cloned());
        }
        if rels.len() != sig.len() {
            return Err(Error::InvalidModel("union signature size mismatch".into()));
        }
        Model {
            sig,
            n,
            rels: Vec::new(),
        }
        .with_rels(rels)
    }

    fn with_rels(mut self, rels: Vec<Relation>) -> Result<Model> {
        for (i, r) in rels.iter().enumerate() {
            if r.arity != self.sig.arity(i) {
                return Err(Error::InvalidModel("arity mismatch in union".into()));
            }
        }
        self.rels = rels;
        Ok(self)
    }

    /// The bit string used for canonical comparison.
    pub fn code(&self) -> Vec<u64> {
        self.rels
            .iter()
            .flat_map(|r| r.words.iter().copied())
            .collect()
    }

    pub(crate) fn cmp_code(&self, other: &Model) -> std::cmp::Ordering {
        self.rels.cmp(&other.rels)
    }

    pub fn code_bytes(&self) -> Vec<u8> {
        self.code().iter().flat_map(|w| w.to_be_bytes()).collect()
    }
}

impl PartialEq for Model {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.rels == other.rels
            && (Arc::ptr_eq(&self.sig, &other.sig) || self.sig == other.sig)
    }
}

impl Eq for Model {}

impl Hash for Model {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.n.hash(state);
        self.rels.hash(state);
    }
}

impl fmt::Debug for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Model({:?})", crate::relational::format::to_text(self))
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::relational::format::to_text(self))
    }
}
