//! Corpus generation: charset, fonts, rendering, perturbation, manifests.

pub mod charset;
pub mod font;
pub mod generate;
pub mod lexicon;
pub mod manifest;
pub mod perturb;
pub mod render;

pub use charset::{Charset, EOS, MAX_WORD_LEN, NUM_CLASSES, PAD, SEQ_LEN};
pub use generate::{generate_corpus, CorpusSpec, GeneratedCorpus, SeverityDist};
pub use manifest::{
    load_corpus, load_eval, read_sealed, CorpusManifest, Domain, LoadedCorpus, LoadedEval,
    ManifestEntry, SealedRecord, TextSample,
};
pub use perturb::perturb;
pub use render::render_word;
