//! Metrics, key-instance retrieval, and the two baselines.

mod forest;
mod metrics;
mod report;
mod retrieval;

pub use forest::{rf_predict, rf_train, RFConfig, RandomForest, Tree};
pub use metrics::{accuracy, auprc, auroc, classification_report, MetricsReport, DECISION_THRESHOLD};
pub use report::{
    read_attention_csv, read_key_values, write_attention_csv, write_key_values, AttentionRow, ATTENTION_COLUMNS,
};
pub use retrieval::{
    energy_ranked, lowest_energy_baseline, ranking, retrieval_report, topk_retrieval, RankedBag, RetrievalReport,
};
