//! Packet-level discrete-event simulation of hybrid (model-based plus
//! learned) multipath TCP for distributed edge learning.

pub mod sim;
pub mod agent;
pub mod nn;
pub mod transport;
pub mod workload;
pub mod experiment;
