//! Labeled spectra, synthetic domains, file formats and minibatching.

mod batch;
mod dataset;
mod io;
mod synth;

pub use batch::BatchIterator;
pub use dataset::{label_subset, split, Class, Dataset, Spectrum};
pub(crate) use io::ByteReader;
pub use io::{
    decode_binary, decode_csv, encode_binary, encode_csv, load_dataset, save_dataset, DataFormat,
    DATASET_MAGIC, DATASET_VERSION,
};
pub use synth::{synth_generate, synth_record, SynthConfig};
