//! Instance constructions: anti-concentration, the S2SAT reduction and its
//! complete-graph embedding, the 3SAT gadget, and random corpora.

mod anticoncentration;
mod gain;
mod random;
mod reduction;

pub use anticoncentration::{anticoncentration_size, produce_anticoncentration};
pub use gain::{apx_fact, gain_formula, GainEstimate};
pub use random::{random_distribution, random_graphic, random_laminar, random_left_to_right, random_rooted, shuffled_pairs, two_point, RandomParams};
pub use reduction::{
    all_pairs, clause_distribution, embed_in_complete_graph, embedding_vertex_count, literal_vertex, s2sat_to_gmbs,
    s3sat_to_s2sat, three_clause_count, EdgePhase, ReductionArtifact, ReductionError, VertexLabel,
};
