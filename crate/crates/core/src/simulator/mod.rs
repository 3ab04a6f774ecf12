//! Synthetic cube-colour data, adapters, disruptors and the three-phase feeder.

mod dataset;
mod feeder;
mod transform;

pub use dataset::{
    color_features, default_palette, palette, generate_cube_dataset, read_dataset_csv, write_dataset_csv, ClassSpec,
    GeneratorParams, RawRecord, FEATURE_DIM, HIST_BINS,
};
pub use feeder::{Feeder, Phase, PhaseSplit, StreamInstance};
pub use transform::{darken, Adapter, Disruptor, FeatureLayout, ADAPTER_IDS, DISRUPTOR_IDS};
