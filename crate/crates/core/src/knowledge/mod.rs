//! Knowledge-graph embeddings and their fusion with word vectors.

mod embedding;
mod fusion;
mod transe;
mod word_vectors;

pub use embedding::{EmbeddingTable, Norm};
pub use fusion::{align_entities_to_tokens, kim_fuse, Activation, KimParams};
pub use transe::{
    pair_gradient, pair_loss, save_loss_trace, train_transe, train_transe_from, transe_score, PairGradient,
    TrainedEmbeddings, TransEConfig,
};
pub use word_vectors::WordVectors;

pub(crate) fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = l2_norm(a);
    let nb = l2_norm(b);
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb)
}
