//! RouteNet-family message-passing models over paths, links and nodes.

mod features;
mod incidence;
mod model;
mod train;

pub use features::{
    encode_features, raw_features, ColumnStats, FeatureEncoding, InitialStates, RawFeatures, Scaling,
    LINK_FEATURES, NODE_FEATURES, PATH_FEATURES, ZERO_SPREAD_GUARD,
};
pub use incidence::{build_incidence, IncidenceStructures};
pub use model::{
    DropoutRng, GnnModel, LinkUpdater, LossKind, ModelConfig, PathUpdater, PreparedSample, TargetTransform, Variant,
};
pub use train::{evaluate_mape, mean_delay, predict, train, HistoryEntry, TrainConfig, TrainOutcome};
pub use crate::metrics::ensemble_average;
