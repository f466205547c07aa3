//! Desk-scale reference networks bundled with the crate, one per model
//! class. The JSON sources live in `networks/` at the repository root and
//! double as format examples.

use crate::io::bn_from_json_str;
use crate::model::BayesianNetwork;

pub const DISCRETE8_JSON: &str = include_str!("../../../networks/discrete8.json");
pub const GAUSSIAN8_JSON: &str = include_str!("../../../networks/gaussian8.json");
pub const CG8_JSON: &str = include_str!("../../../networks/cg8.json");

/// Eight-node discrete network, 9 arcs, 32 free parameters.
pub fn discrete8() -> BayesianNetwork {
    bn_from_json_str(DISCRETE8_JSON).expect("bundled network parses")
}

/// Eight-node Gaussian network, 8 arcs, 24 free parameters.
pub fn gaussian8() -> BayesianNetwork {
    bn_from_json_str(GAUSSIAN8_JSON).expect("bundled network parses")
}

/// Eight-node conditional linear Gaussian network (4 discrete, 4 Gaussian),
/// 7 arcs, 27 free parameters.
pub fn cg8() -> BayesianNetwork {
    bn_from_json_str(CG8_JSON).expect("bundled network parses")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_structure;

    #[test]
    fn bundled_networks_parse_and_validate() {
        for bn in [discrete8(), gaussian8(), cg8()] {
            assert!(validate_structure(bn.dag(), bn.node_types()).is_empty());
            assert!(bn.dag().topological_order().is_ok());
        }
    }

    #[test]
    fn bundled_parameter_counts_match_hand_tallies() {
        // discrete8: A 1, B 1, C 4, D 4, E 6, F 2, G 6, H 8
        assert_eq!(discrete8().dim_theta_total(), 32);
        assert_eq!(discrete8().dag().arc_count(), 9);
        // gaussian8: roots 2 each, one-parent nodes 3, two-parent nodes 4
        assert_eq!(gaussian8().dim_theta_total(), 24);
        assert_eq!(gaussian8().dag().arc_count(), 8);
        // cg8: A 1, B 4, C 1, D 2, X 4, Y 3, Z 9, W 3
        assert_eq!(cg8().dim_theta_total(), 27);
        assert_eq!(cg8().dag().arc_count(), 7);
    }
}
