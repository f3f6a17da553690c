use serde::Serialize;

use crate::formula::{Clause, Formula, FormulaError, Literal};
use crate::model::{Instance, ValueDistribution, Violation};
use crate::rational::{int, pow, ratio};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgePhase {
    /// Truth-value choice, `w x_i` / `w ¬x_i`.
    Variable,
    /// One edge per clause.
    Clause,
    /// `x_i ¬x_i`.
    Consistency,
    /// Value-3 connectors of the complete-graph embedding.
    Auxiliary,
    /// Value-0 padding of the complete-graph embedding.
    Filler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexLabel {
    Center,
    Literal { var: usize, negated: bool },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionArtifact {
    pub gmbs: Instance,
    pub phase_of_edge: Vec<EdgePhase>,
    pub literal_of_vertex: Vec<Option<VertexLabel>>,
    /// `(wx_i, w¬x_i)` element indices per variable.
    pub variable_edges: Vec<(usize, usize)>,
}

impl ReductionArtifact {
    pub fn edges_in_phase(&self, phase: EdgePhase) -> Vec<usize> {
        (0..self.phase_of_edge.len())
            .filter(|&e| self.phase_of_edge[e] == phase)
            .collect()
    }

    /// Every edge of `first` arrives before every edge of `then`.
    pub fn arrives_before(&self, first: &[EdgePhase], then: &[EdgePhase]) -> bool {
        let last = (0..self.phase_of_edge.len())
            .filter(|&e| first.contains(&self.phase_of_edge[e]))
            .max();
        let start = (0..self.phase_of_edge.len())
            .filter(|&e| then.contains(&self.phase_of_edge[e]))
            .min();
        match (last, start) {
            (Some(a), Some(b)) => a < b,
            _ => true,
        }
    }
}

/// `m⁴/2k` with probability `m⁻⁴`.
pub fn clause_distribution(m: usize, k: usize) -> ValueDistribution {
    let m4 = pow(&int(m as i64), 4);
    ValueDistribution::two_point(&m4 / int(2 * k as i64), m4.recip()).expect("valid clause distribution")
}

fn variable_distributions(var: usize) -> (ValueDistribution, ValueDistribution) {
    if Formula::is_deterministic(var) {
        (ValueDistribution::point(int(1)), ValueDistribution::point(int(1)))
    } else {
        (
            ValueDistribution::two_point(int(2), ratio(1, 2)).expect("valid"),
            ValueDistribution::point(int(1)),
        )
    }
}

/// Vertex of literal `l` in the three-phase graph: `w = 0`, `x_i = 2i + 1`, `¬x_i = 2i + 2`.
pub fn literal_vertex(l: Literal) -> usize {
    2 * l.var + 1 + l.negated as usize
}

/// Graphic instance on `2n + 1` vertices whose optimal gain encodes the
/// S2SAT value of `formula`.
pub fn s2sat_to_gmbs(formula: &Formula, k: usize) -> Result<ReductionArtifact, ReductionError> {
    formula.check_s2sat(Some(k))?;
    let n = formula.num_vars;
    let m = formula.clauses.len();
    let mut edges = Vec::new();
    let mut dists = Vec::new();
    let mut phases = Vec::new();
    let mut variable_edges = Vec::new();
    for var in 0..n {
        let (pos, neg) = variable_distributions(var);
        variable_edges.push((edges.len(), edges.len() + 1));
        edges.push((0, literal_vertex(Literal::pos(var))));
        edges.push((0, literal_vertex(Literal::neg(var))));
        dists.extend([pos, neg]);
        phases.extend([EdgePhase::Variable; 2]);
    }
    for c in &formula.clauses {
        let edge = match c.literals.as_slice() {
            [l] => (0, literal_vertex(l.negate())),
            [a, b] => (literal_vertex(a.negate()), literal_vertex(b.negate())),
            _ => unreachable!("checked width"),
        };
        edges.push(edge);
        dists.push(clause_distribution(m, k));
        phases.push(EdgePhase::Clause);
    }
    for var in 0..n {
        edges.push((literal_vertex(Literal::pos(var)), literal_vertex(Literal::neg(var))));
        dists.push(ValueDistribution::point(int(2)));
        phases.push(EdgePhase::Consistency);
    }
    let mut labels = vec![Some(VertexLabel::Center)];
    for var in 0..n {
        labels.push(Some(VertexLabel::Literal { var, negated: false }));
        labels.push(Some(VertexLabel::Literal { var, negated: true }));
    }
    let gmbs = Instance::graphic(2 * n + 1, edges, dists)?;
    Ok(ReductionArtifact {
        gmbs,
        phase_of_edge: phases,
        literal_of_vertex: labels,
        variable_edges,
    })
}

/// Replaces each 3-literal clause by ten clauses over its literals and a
/// fresh player variable, adding `6` to the game value per replaced clause.
/// Fresh variables sit at player positions after the original ones; unused
/// coin positions are filled with unconstrained coin variables.
pub fn s3sat_to_s2sat(formula: &Formula) -> Formula {
    let mut num_vars = formula.num_vars;
    let mut clauses = Vec::new();
    let mut fresh = || {
        if !Formula::is_deterministic(num_vars) {
            num_vars += 1;
        }
        num_vars += 1;
        num_vars - 1
    };
    for c in &formula.clauses {
        let [l1, l2, l3] = match c.literals.as_slice() {
            &[a, b, c] => [a, b, c],
            _ => {
                clauses.push(c.clone());
                continue;
            }
        };
        let ci = Literal::pos(fresh());
        clauses.extend([
            Clause::unit(l1),
            Clause::unit(l2),
            Clause::unit(l3),
            Clause::unit(ci),
            Clause::pair(l1.negate(), l2.negate()),
            Clause::pair(l2.negate(), l3.negate()),
            Clause::pair(l1.negate(), l3.negate()),
            Clause::pair(l1, ci.negate()),
            Clause::pair(l2, ci.negate()),
            Clause::pair(l3, ci.negate()),
        ]);
    }
    if num_vars % 2 == 1 {
        num_vars += 1;
    }
    Formula::new(num_vars, clauses)
}

/// Number of 3-literal clauses.
pub fn three_clause_count(formula: &Formula) -> usize {
    formula.clauses.iter().filter(|c| c.literals.len() == 3).count()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReductionError {
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("constructed graph is invalid: {0}")]
    Graph(#[from] Violation),
    #[error("arrival order must list each of the {expected} vertex pairs once")]
    NotAPermutation { expected: usize },
    #[error("{vertices} vertices leave {unmatched} unmatched, need {needed} (use {minimum} vertices)")]
    TooFewVertices {
        vertices: usize,
        unmatched: usize,
        needed: usize,
        minimum: usize,
    },
}

/// Vertex count at which the embedding always succeeds: a centre plus two
/// unmatched vertices per variable besides the matched `2(n + m)`.
pub fn embedding_vertex_count(n: usize, m: usize) -> usize {
    4 * n + 2 * m + 1
}

/// All pairs of `0..vertices` in lexicographic order.
pub fn all_pairs(vertices: usize) -> Vec<(usize, usize)> {
    (0..vertices)
        .flat_map(|a| (a + 1..vertices).map(move |b| (a, b)))
        .collect()
}

/// Reduction on the complete graph with a prescribed arrival order of all
/// vertex pairs. Matchings `A` (consistency) and `B` (clauses) are built
/// greedily in reverse arrival order; the first edges at an unmatched centre
/// become the variable edges, and value-3 connectors route each consistency
/// and clause edge to its literal vertices.
pub fn embed_in_complete_graph(
    formula: &Formula,
    k: usize,
    vertex_count: usize,
    arrival_order: &[(usize, usize)],
) -> Result<ReductionArtifact, ReductionError> {
    formula.check_s3sat(Some(k))?;
    if let Some(i) = formula.clauses.iter().position(|c| c.literals.len() > 2) {
        return Err(FormulaError::ClauseWidth {
            clause: i,
            width: formula.clauses[i].literals.len(),
            max: 2,
        }
        .into());
    }
    let n = formula.num_vars;
    let m = formula.clauses.len();
    let total = vertex_count * vertex_count.saturating_sub(1) / 2;
    let order: Vec<(usize, usize)> = arrival_order.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    let mut seen = std::collections::HashSet::new();
    if order.len() != total || !order.iter().all(|&(a, b)| a < b && b < vertex_count && seen.insert((a, b))) {
        return Err(ReductionError::NotAPermutation { expected: total });
    }

    let mut matched = vec![false; vertex_count];
    let greedy = |want: usize, matched: &mut Vec<bool>| -> Vec<usize> {
        let mut picked = Vec::new();
        for e in (0..order.len()).rev() {
            if picked.len() == want {
                break;
            }
            let (a, b) = order[e];
            if !matched[a] && !matched[b] {
                matched[a] = true;
                matched[b] = true;
                picked.push(e);
            }
        }
        picked
    };
    let a_edges = greedy(n, &mut matched);
    let b_edges = greedy(m, &mut matched);
    let unmatched: Vec<usize> = (0..vertex_count).filter(|&v| !matched[v]).collect();
    let needed = 2 * n + 1;
    if a_edges.len() < n || b_edges.len() < m || unmatched.len() < needed {
        return Err(ReductionError::TooFewVertices {
            vertices: vertex_count,
            unmatched: unmatched.len(),
            needed,
            minimum: embedding_vertex_count(n, m),
        });
    }
    let w = unmatched[0];
    let mut variable_edges_flat = Vec::new();
    for (e, &(a, b)) in order.iter().enumerate() {
        if variable_edges_flat.len() == 2 * n {
            break;
        }
        let other = if a == w { b } else if b == w { a } else { continue };
        if !matched[other] {
            variable_edges_flat.push((e, other));
        }
    }

    let mut labels: Vec<Option<VertexLabel>> = vec![None; vertex_count];
    labels[w] = Some(VertexLabel::Center);
    let vertex_of = |l: Literal| variable_edges_flat[2 * l.var + l.negated as usize].1;
    for (i, &(_, v)) in variable_edges_flat.iter().enumerate() {
        labels[v] = Some(VertexLabel::Literal {
            var: i / 2,
            negated: i % 2 == 1,
        });
    }

    let index: std::collections::HashMap<(usize, usize), usize> =
        order.iter().enumerate().map(|(e, &p)| (p, e)).collect();
    let edge = |a: usize, b: usize| index[&(a.min(b), a.max(b))];

    let mut phases = vec![EdgePhase::Filler; total];
    let mut dists = vec![ValueDistribution::point(int(0)); total];
    let mut variable_edges = Vec::new();
    for var in 0..n {
        let (pos, neg) = variable_distributions(var);
        let (ep, en) = (variable_edges_flat[2 * var].0, variable_edges_flat[2 * var + 1].0);
        variable_edges.push((ep, en));
        phases[ep] = EdgePhase::Variable;
        phases[en] = EdgePhase::Variable;
        dists[ep] = pos;
        dists[en] = neg;
    }
    for (i, &e) in a_edges.iter().enumerate() {
        phases[e] = EdgePhase::Consistency;
        dists[e] = ValueDistribution::point(int(2));
        let (alpha, gamma) = order[e];
        for (end, l) in [(alpha, Literal::pos(i)), (gamma, Literal::neg(i))] {
            let aux = edge(vertex_of(l), end);
            phases[aux] = EdgePhase::Auxiliary;
            dists[aux] = ValueDistribution::point(int(3));
        }
    }
    for (j, &e) in b_edges.iter().enumerate() {
        phases[e] = EdgePhase::Clause;
        dists[e] = clause_distribution(m, k);
        let (beta, tau) = order[e];
        let (u, l) = match formula.clauses[j].literals.as_slice() {
            [l] => (w, vertex_of(l.negate())),
            [a, b] => (vertex_of(a.negate()), vertex_of(b.negate())),
            _ => unreachable!("checked width"),
        };
        for (end, v) in [(beta, u), (tau, l)] {
            let aux = edge(v, end);
            phases[aux] = EdgePhase::Auxiliary;
            dists[aux] = ValueDistribution::point(int(3));
        }
    }
    let gmbs = Instance::graphic(vertex_count, order, dists).expect("complete graph is valid");
    Ok(ReductionArtifact {
        gmbs,
        phase_of_edge: phases,
        literal_of_vertex: labels,
        variable_edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::optimal_value;
    use crate::exact::{game_value, s2sat_value};

    fn f(num_vars: usize, clauses: &[&[i64]]) -> Formula {
        Formula::new(
            num_vars,
            clauses
                .iter()
                .map(|c| Clause::new(c.iter().map(|&d| Literal::from_dimacs(d).unwrap()).collect()))
                .collect(),
        )
    }

    #[test]
    fn two_unit_clauses() {
        let art = s2sat_to_gmbs(&f(2, &[&[1], &[2]]), 1).unwrap();
        let g = art.gmbs.graph().unwrap();
        assert_eq!(g.vertex_count, 5);
        assert_eq!(g.edges.len(), 8);
        for e in art.edges_in_phase(EdgePhase::Clause) {
            assert!(g.edges[e].0 == 0 || g.edges[e].1 == 0);
        }
        assert_eq!(art.edges_in_phase(EdgePhase::Variable).len(), 4);
        assert_eq!(art.edges_in_phase(EdgePhase::Consistency).len(), 2);
        assert!(art.arrives_before(&[EdgePhase::Variable], &[EdgePhase::Clause]));
        assert!(art.arrives_before(&[EdgePhase::Clause], &[EdgePhase::Consistency]));
    }

    #[test]
    fn clause_edge_joins_negations() {
        let art = s2sat_to_gmbs(&f(2, &[&[1, -2]]), 1).unwrap();
        let e = art.edges_in_phase(EdgePhase::Clause)[0];
        assert_eq!(art.gmbs.graph().unwrap().edges[e], (literal_vertex(Literal::neg(0)), literal_vertex(Literal::pos(1))));
    }

    #[test]
    fn clause_value_at_m2_k1() {
        let d = clause_distribution(2, 1);
        assert_eq!(d.atoms[1].value, int(8));
        assert_eq!(d.atoms[1].prob, ratio(1, 16));
    }

    #[test]
    fn occurrence_bound_enforced() {
        let err = s2sat_to_gmbs(&f(2, &[&[1], &[1, 2]]), 1).unwrap_err();
        assert!(matches!(err, ReductionError::Formula(FormulaError::OccurrenceBound { .. })));
    }

    #[test]
    fn gadget_shapes() {
        let g = f(2, &[&[1, 2]]);
        assert_eq!(s3sat_to_s2sat(&g), g);
        let one = s3sat_to_s2sat(&f(2, &[&[1, 2, 1]]));
        assert_eq!(one.clauses.len(), 10);
        assert_eq!(one.num_vars, 4);
        assert!(Formula::is_deterministic(2));
    }

    #[test]
    fn gadget_identity_tiny() {
        let phi3 = f(2, &[&[1, 2, 1]]);
        let phi2 = s3sat_to_s2sat(&phi3);
        assert_eq!(s2sat_value(&phi2).unwrap() - int(6), game_value(&phi3).unwrap());
    }

    #[test]
    fn embedding_on_lexicographic_order() {
        let phi = f(1, &[&[1]]);
        let vc = embedding_vertex_count(1, 1);
        let art = embed_in_complete_graph(&phi, 1, vc, &all_pairs(vc)).unwrap();
        let g = art.gmbs.graph().unwrap();
        let a = art.edges_in_phase(EdgePhase::Consistency);
        let b = art.edges_in_phase(EdgePhase::Clause);
        assert_eq!(a.len(), 1);
        let mut ends: Vec<usize> = a.iter().chain(&b).flat_map(|&e| [g.edges[e].0, g.edges[e].1]).collect();
        ends.sort_unstable();
        ends.dedup();
        assert_eq!(ends.len(), 4);
        assert_eq!(art.edges_in_phase(EdgePhase::Auxiliary).len(), 4);
    }

    #[test]
    fn embedding_rejects_paper_vertex_count_when_short() {
        let phi = f(2, &[&[1], &[2]]);
        let vc = 3 * 2 + 2 * 2 + 1;
        let err = embed_in_complete_graph(&phi, 1, vc, &all_pairs(vc)).unwrap_err();
        assert!(matches!(err, ReductionError::TooFewVertices { minimum: 13, .. }));
    }

    #[test]
    fn filler_edges_do_not_change_opt() {
        let phi = f(1, &[&[1]]);
        let vc = embedding_vertex_count(1, 1);
        let art = embed_in_complete_graph(&phi, 1, vc, &all_pairs(vc)).unwrap();
        let g = art.gmbs.graph().unwrap();
        let keep: Vec<usize> = (0..g.edges.len()).filter(|&e| art.phase_of_edge[e] != EdgePhase::Filler).collect();
        let pruned = Instance::graphic(
            vc,
            keep.iter().map(|&e| g.edges[e]).collect(),
            keep.iter().map(|&e| art.gmbs.distributions[e].clone()).collect(),
        )
        .unwrap();
        assert_eq!(optimal_value(&art.gmbs).unwrap(), optimal_value(&pruned).unwrap());
    }
}
