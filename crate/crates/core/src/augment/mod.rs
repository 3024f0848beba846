//! Class-imbalance mitigation: balanced loss weights, negated-headline
//! synthesis and ARC corpus adaptation.

pub mod arc;
mod conllu;
mod inflect;
pub mod lm;
mod negation;
mod synth;
mod weights;
pub mod wordnet;

pub use conllu::{parse_conllu, DependencyToken, ParsedHeadline};
pub use inflect::{inflect, verb_form, VerbForm};
pub use lm::{LmScorer, NgramLm};
pub use negation::{detokenize, negate_headline, NegationMethod, NegationResult};
pub use synth::{synthesize_flipped_samples, FlipDirections, Synthesis, SynthesisLogEntry};
pub use weights::balanced_class_weights;
pub use wordnet::WordNetIndex;
