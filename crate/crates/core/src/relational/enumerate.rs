use itertools::Itertools;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::logic::Theory;
use crate::relational::model::{is_injective, tuple_index};
use crate::relational::{canonical_form, injective_tuples, IsoClass, Model};

/// Default cap on the raw search space `2^(number of injective tuples)`.
pub const DEFAULT_BUDGET: u64 = 1 << 30;

struct Slot {
    pred: usize,
    index: usize,
}

struct Instance {
    axiom: usize,
    assign: Vec<usize>,
}

/// All models of `t` on `n` vertices up to isomorphism, sorted by canonical code.
pub fn enumerate_models(t: &Theory, n: usize) -> Result<Vec<IsoClass>> {
    enumerate_models_with_budget(t, n, DEFAULT_BUDGET)
}

pub fn enumerate_models_with_budget(t: &Theory, n: usize, budget: u64) -> Result<Vec<IsoClass>> {
    let mut classes: BTreeMap<Vec<u64>, Model> = BTreeMap::new();
    search(t, n, budget, |m| {
        let (canon, _) = canonical_form(m);
        classes.entry(canon.code()).or_insert(canon);
    })?;
    Ok(classes.into_values().map(|m| IsoClass::of(&m)).collect())
}

/// Every labeled model of `t` on `n` vertices, in search order.
pub fn enumerate_labeled(t: &Theory, n: usize, budget: u64) -> Result<Vec<Model>> {
    let mut out = Vec::new();
    search(t, n, budget, |m| out.push(m.clone()))?;
    Ok(out)
}

/// Depth-first assignment of every injective tuple, checking each ground
/// axiom instance as soon as the last tuple it mentions is decided.
fn search(t: &Theory, n: usize, budget: u64, mut visit: impl FnMut(&Model)) -> Result<()> {
    let sig = t.sig.clone();
    let mut slots = Vec::new();
    for p in 0..sig.len() {
        for tuple in injective_tuples(n, sig.arity(p)) {
            slots.push(Slot {
                pred: p,
                index: tuple_index(n, &tuple),
            });
        }
    }
    let total = slots.len() as u32;
    if total >= 64 || (1u64 << total) > budget {
        return Err(Error::BudgetExceeded {
            log2_size: total,
            budget,
        });
    }

    let slot_of: BTreeMap<(usize, usize), usize> = slots
        .iter()
        .enumerate()
        .map(|(i, s)| ((s.pred, s.index), i))
        .collect();

    // Instances grouped by the last slot they read; `None` reads no slot.
    let mut upfront = Vec::new();
    let mut at_slot: Vec<Vec<Instance>> = (0..slots.len()).map(|_| Vec::new()).collect();
    for (ai, ax) in t.axioms.iter().enumerate() {
        let mut atoms = Vec::new();
        ax.node.atoms(&mut atoms);
        let assigns: Vec<Vec<usize>> = if ax.vars == 0 {
            vec![Vec::new()]
        } else {
            (0..ax.vars)
                .map(|_| 0..n)
                .multi_cartesian_product()
                .collect()
        };
        for assign in assigns {
            let last = atoms
                .iter()
                .filter_map(|(p, args)| {
                    let ground: Vec<usize> = args.iter().map(|&a| assign[a]).collect();
                    is_injective(&ground).then(|| slot_of[&(*p, tuple_index(n, &ground))])
                })
                .max();
            let inst = Instance { axiom: ai, assign };
            match last {
                Some(s) => at_slot[s].push(inst),
                None => upfront.push(inst),
            }
        }
    }

    let mut m = Model::empty(sig, n);
    let holds = |m: &Model, inst: &Instance| t.axioms[inst.axiom].node.eval(m, &inst.assign);
    if !upfront.iter().all(|i| holds(&m, i)) {
        return Ok(());
    }

    fn dfs(
        depth: usize,
        m: &mut Model,
        slots: &[Slot],
        at_slot: &[Vec<Instance>],
        holds: &impl Fn(&Model, &Instance) -> bool,
        visit: &mut impl FnMut(&Model),
    ) {
        if depth == slots.len() {
            visit(m);
            return;
        }
        let s = &slots[depth];
        for value in [false, true] {
            m.set_index(s.pred, s.index, value);
            if at_slot[depth].iter().all(|i| holds(m, i)) {
                dfs(depth + 1, m, slots, at_slot, holds, visit);
            }
        }
        m.set_index(s.pred, s.index, false);
    }
    dfs(0, &mut m, &slots, &at_slot, &holds, &mut visit);
    Ok(())
}
