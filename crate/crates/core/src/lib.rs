//! Rewriting of navigational conjunctive queries over lightweight ELHI
//! ontologies into unions of conjunctive two-way regular path queries.

pub mod chase;
pub mod cypher;
pub mod depgraph;
pub mod dl;
pub mod exec;
pub mod generate;
pub mod graph;
pub mod query;
pub mod rewrite;
