//! Unsupervised disfluency detection: pseudo-data generation, a
//! grammaticality judge, iterative self-training and token-level scoring.

pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod hashing;
pub mod judge;
pub mod linear;
pub mod model_io;
pub mod ngram;
pub mod perturb;
pub mod selftrain;
pub mod synth;
pub mod tagger;

pub use corpus::{Grammaticality, JudgedSentence, Label, Sentence, TaggedSentence};
pub use error::{Error, Result};
pub use eval::{score, score_by_category, EvalReport};
pub use judge::{train_judge, GrammaticalityJudge, LinearJudge};
pub use linear::TrainConfig;
pub use tagger::{train, LinearTagger, SequenceTagger};
