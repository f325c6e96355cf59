//! Fill-in-the-phrase query generation from SRL-annotated video descriptions,
//! and relative / contrastive / consistency scoring of free-form answers.

pub mod baseline;
pub mod builder;
pub mod config;
pub mod contrastive;
pub mod embed;
pub mod lexicon;
pub mod metrics;
pub mod model;
pub mod querygen;
pub mod records;
pub mod report;
pub mod scoring;
pub mod synth;

pub use model::{
    AnnotatedDescription, CoarsePos, ContrastivePair, PredictionRecord, QueryRecord, QueryToken, RoleSpan,
    ScoreRecord, SrlRole, Token, VerbFrame,
};
