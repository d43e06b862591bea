pub mod augment;
pub mod configmodel;
pub mod corpus;
pub mod harness;
pub mod datasets;
pub mod fixtures;
pub mod intent;
pub mod lexicon;
pub mod llm;
pub mod miner;
pub mod noising;
pub mod pipeline;
pub mod util;
