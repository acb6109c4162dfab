//! Feature tables, CSV loading and deterministic train/test splits.

mod csvio;
mod split;
mod table;

pub use csvio::{
    load_feature_table, read_labels, read_split_manifest, read_view_csv, write_labels,
    write_split_manifest, write_view_csv, LabelFile, ViewFile,
};
pub use split::{make_folds, stratified_split, FoldAssignment, SplitManifest};
pub use table::FeatureTable;
