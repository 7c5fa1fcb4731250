//! Schemas, microdata, histograms over the attribute universe, and bounded
//! adjacency (changing one record).

mod dataset;
mod histogram;
mod ingest;
mod schema;

pub use dataset::Dataset;
pub use histogram::{adjacent_histograms, build_histogram, histogram_to_dataset, GroupIndex, Histogram};
pub use ingest::{load_csv, read_csv, BinRule, Binning};
pub use schema::{Attribute, AttributeKind, Schema};
