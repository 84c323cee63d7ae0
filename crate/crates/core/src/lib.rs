//! Bridge numbers of satellite knots via folding of A-graphs over the
//! graph of groups of a knot's satellite tree.

pub mod freegroup;
pub mod braid;
pub mod knot_tree;
pub mod graph_of_groups;
pub mod toruskit;
pub mod agraph;
