//! UCI HAR raw inertial-signal ingestion, the class-incremental schedules,
//! and per-round sampling.

mod loader;
mod pool;
mod scenario;
pub mod synth;

pub use loader::{
    check_data, load_dataset, load_raw, ChannelMode, ChannelStats, DataSummary, HarData,
    HarDataset, Split, SIGNALS, WINDOW_LEN,
};
pub use pool::SamplePool;
pub use scenario::{
    build_scenario, derive_task_ids, RoundSpec, ScenarioSpec, DEFAULT_PER_CLASS, VALID_SCENARIOS,
};

/// Activity names, indexed by class (file label minus one).
pub const ACTIVITIES: [&str; 6] = [
    "Walking",
    "Walking Upstairs",
    "Walking Downstairs",
    "Sitting",
    "Standing",
    "Laying",
];

pub const NUM_CLASSES: usize = 6;
