//! Canonical residual states for backward induction.
//!
//! Laminar states only carry the residual capacity of *active* bins (some
//! members already arrived, some still to come). Graphic states carry the
//! connectivity of the selected forest restricted to vertices that still
//! touch a future edge, written as a minimum-representative labeling.

use std::collections::HashMap;

use crate::model::{GraphicGround, Instance, LaminarFamily};

pub(crate) type StateKey = Vec<u32>;

#[derive(Debug, Clone, Copy)]
enum Slot {
    /// Coordinate of the current key.
    Key(usize),
    /// Bin that has not started yet; its residual is its full capacity.
    Fresh(u32),
}

#[derive(Debug, Clone)]
struct LaminarStep {
    /// Bins containing the arriving element.
    containing: Vec<Slot>,
    /// Coordinates of the next key: source slot and whether the element is a member.
    next: Vec<(Slot, bool)>,
}

#[derive(Debug, Clone)]
pub(crate) struct LaminarModel {
    active: Vec<Vec<usize>>,
    steps: Vec<LaminarStep>,
}

impl LaminarModel {
    fn new(family: &LaminarFamily, n: usize) -> Self {
        let active: Vec<Vec<usize>> = (0..=n)
            .map(|t| {
                (0..family.len())
                    .filter(|&b| {
                        let bin = &family.bins[b];
                        bin.first() < t && bin.last() >= t
                    })
                    .collect()
            })
            .collect();
        let slot_at = |t: usize, b: usize| -> Slot {
            match active[t].iter().position(|&x| x == b) {
                Some(i) => Slot::Key(i),
                None => Slot::Fresh(family.bins[b].capacity.min(u32::MAX as u64) as u32),
            }
        };
        let steps = (0..n)
            .map(|t| LaminarStep {
                containing: family
                    .bins_containing(t)
                    .into_iter()
                    .map(|b| slot_at(t, b))
                    .collect(),
                next: active[t + 1]
                    .iter()
                    .map(|&b| (slot_at(t, b), family.bins[b].contains(t)))
                    .collect(),
            })
            .collect();
        Self { active, steps }
    }

    fn read(slot: Slot, key: &[u32]) -> u32 {
        match slot {
            Slot::Key(i) => key[i],
            Slot::Fresh(c) => c,
        }
    }

    fn can_select(&self, t: usize, key: &[u32]) -> bool {
        self.steps[t]
            .containing
            .iter()
            .all(|&s| Self::read(s, key) >= 1)
    }

    fn advance(&self, t: usize, key: &[u32], select: bool) -> StateKey {
        self.steps[t]
            .next
            .iter()
            .map(|&(slot, member)| {
                let r = Self::read(slot, key);
                if select && member {
                    r - 1
                } else {
                    r
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub(crate) struct GraphicModel {
    edges: Vec<(usize, usize)>,
    /// Sorted vertices touching some edge `≥ t`.
    relevant: Vec<Vec<usize>>,
    /// `position[t][v]` = index of `v` in `relevant[t]`.
    position: Vec<HashMap<usize, usize>>,
}

impl GraphicModel {
    fn new(graph: &GraphicGround) -> Self {
        let n = graph.edges.len();
        let mut relevant = vec![Vec::new(); n + 1];
        let mut seen = vec![false; graph.vertex_count];
        for t in (0..n).rev() {
            let (a, b) = graph.edges[t];
            seen[a] = true;
            seen[b] = true;
            relevant[t] = (0..graph.vertex_count).filter(|&v| seen[v]).collect();
        }
        let position = relevant
            .iter()
            .map(|vs| vs.iter().enumerate().map(|(i, &v)| (v, i)).collect())
            .collect();
        Self {
            edges: graph.edges.clone(),
            relevant,
            position,
        }
    }

    fn endpoints(&self, t: usize) -> (usize, usize) {
        let (a, b) = self.edges[t];
        (self.position[t][&a], self.position[t][&b])
    }

    fn can_select(&self, t: usize, key: &[u32]) -> bool {
        let (a, b) = self.endpoints(t);
        key[a] != key[b]
    }

    fn advance(&self, t: usize, key: &[u32], select: bool) -> StateKey {
        let (a, b) = self.endpoints(t);
        let (la, lb) = (key[a], key[b]);
        let merged = la.min(lb);
        let block_of = |label: u32| {
            if select && (label == la || label == lb) {
                merged
            } else {
                label
            }
        };
        let mut first_seen: HashMap<u32, u32> = HashMap::new();
        self.relevant[t + 1]
            .iter()
            .enumerate()
            .map(|(j, v)| {
                let block = block_of(key[self.position[t][v]]);
                *first_seen.entry(block).or_insert(j as u32)
            })
            .collect()
    }

    fn blocks(&self, t: usize, key: &[u32]) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = Vec::new();
        let mut index: HashMap<u32, usize> = HashMap::new();
        for (i, &v) in self.relevant[t].iter().enumerate() {
            let slot = *index.entry(key[i]).or_insert_with(|| {
                out.push(Vec::new());
                out.len() - 1
            });
            out[slot].push(v);
        }
        out
    }
}

#[derive(Debug, Clone)]
pub(crate) enum StateModel {
    Laminar(LaminarModel),
    Graphic(GraphicModel),
}

impl StateModel {
    pub(crate) fn new(instance: &Instance) -> Self {
        match (instance.family(), instance.graph()) {
            (Some(f), _) => StateModel::Laminar(LaminarModel::new(f, instance.len())),
            (_, Some(g)) => StateModel::Graphic(GraphicModel::new(g)),
            _ => unreachable!("ground is laminar or graphic"),
        }
    }

    pub(crate) fn initial(&self) -> StateKey {
        match self {
            StateModel::Laminar(_) => Vec::new(),
            StateModel::Graphic(g) => (0..g.relevant[0].len() as u32).collect(),
        }
    }

    pub(crate) fn can_select(&self, t: usize, key: &[u32]) -> bool {
        match self {
            StateModel::Laminar(m) => m.can_select(t, key),
            StateModel::Graphic(m) => m.can_select(t, key),
        }
    }

    pub(crate) fn advance(&self, t: usize, key: &[u32], select: bool) -> StateKey {
        match self {
            StateModel::Laminar(m) => m.advance(t, key, select),
            StateModel::Graphic(m) => m.advance(t, key, select),
        }
    }

    /// Whether `key` has the right shape for timestamp `t`.
    pub(crate) fn well_formed(&self, t: usize, key: &[u32]) -> bool {
        match self {
            StateModel::Laminar(m) => m.active.get(t).is_some_and(|a| a.len() == key.len()),
            StateModel::Graphic(m) => m.relevant.get(t).is_some_and(|r| {
                r.len() == key.len()
                    && key
                        .iter()
                        .enumerate()
                        .all(|(i, &l)| (l as usize) <= i && key[l as usize] == l)
            }),
        }
    }

    pub(crate) fn view(&self, t: usize, key: &[u32]) -> StateView {
        match self {
            StateModel::Laminar(m) => StateView::Laminar {
                residual: m.active[t].iter().copied().zip(key.iter().map(|&r| r as u64)).collect(),
            },
            StateModel::Graphic(m) => StateView::Graphic {
                blocks: m.blocks(t, key),
            },
        }
    }
}

/// Human-readable form of a [`PolicyState`](super::PolicyState).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StateView {
    /// `(bin index, remaining capacity)` for each active bin.
    Laminar { residual: Vec<(usize, u64)> },
    /// Connected components of the selected forest over vertices that still
    /// touch a future edge.
    Graphic { blocks: Vec<Vec<usize>> },
}
