//! Social-media sentiment and used-car price analytics.
//!
//! The pipeline scores documents with a polarity lexicon, partitions the
//! corpus into geographic and interest-based datasets, aggregates
//! half-monthly sentiment means and regresses log real used-car prices on
//! them with a hedonic model.

pub mod corpus;
pub mod lexicon;
pub mod numerics;
pub mod partition;
pub mod pipeline;
pub mod sentiment;
pub mod study;
pub mod synth;
