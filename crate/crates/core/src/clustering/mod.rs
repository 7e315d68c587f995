//! k-means with BIC model selection and the two-level semantic reward
//! clustering built on top of it.

mod kmeans;
mod semantic;

pub use kmeans::{
    bic_score, kmeans_fit, kmeans_fit_traced, select_k, sq_dist, ClusterModel, KMeansParams,
    KSelection, SelectKParams,
};
pub use semantic::{
    build_semantic_model, cluster_difficulty, major_cluster, project_semantic_features,
    reward_to_cluster_vector, ClusterDifficulty, DifficultyReport, SemanticMode, SemanticModel,
    SemanticParams, SEMANTIC_FORMAT, SEMANTIC_VERSION,
};
