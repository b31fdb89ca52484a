//! TransE: relations as translations, `h + r ≈ t`, trained with a margin
//! ranking loss against corrupted triples.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{l2_norm, EmbeddingTable, Norm};
use crate::augmentation::Triple;
use crate::{seed, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransEConfig {
    pub dim: usize,
    pub margin: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub norm: Norm,
    pub seed: u64,
}

impl Default for TransEConfig {
    fn default() -> Self {
        Self {
            dim: 100,
            margin: 1.0,
            learning_rate: 0.01,
            epochs: 200,
            batch_size: 16,
            norm: Norm::L2,
            seed: 0,
        }
    }
}

impl TransEConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidArgument("dim must be at least 1".into()));
        }
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "margin must be positive, got {}",
                self.margin
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedEmbeddings {
    pub table: EmbeddingTable,
    /// Mean hinge loss over the triples of each epoch, as seen before each batch update.
    pub loss_trace: Vec<f64>,
}

/// `‖h + r − t‖` under `norm`; lower is more plausible.
pub fn transe_score(emb: &EmbeddingTable, triple: &Triple, norm: Norm) -> Result<f64> {
    let h = emb.entity_vector(&triple.head)?;
    let r = emb.relation_vector(&triple.relation)?;
    let t = emb.entity_vector(&triple.tail)?;
    Ok(norm.distance(&translation(h, r, t)))
}

fn translation(h: &[f64], r: &[f64], t: &[f64]) -> Vec<f64> {
    h.iter().zip(r).zip(t).map(|((h, r), t)| h + r - t).collect()
}

fn distance_gradient(x: &[f64], norm: Norm) -> Vec<f64> {
    match norm {
        Norm::L1 => x
            .iter()
            .map(|v| {
                if *v > 0.0 {
                    1.0
                } else if *v < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            })
            .collect(),
        Norm::L2 => {
            let n = l2_norm(x);
            if n == 0.0 {
                vec![0.0; x.len()]
            } else {
                x.iter().map(|v| v / n).collect()
            }
        }
    }
}

/// Hinge loss `max(0, γ + d(h + r, t) − d(h' + r, t'))` of one positive/negative pair.
#[allow(clippy::too_many_arguments)]
pub fn pair_loss(h: &[f64], r: &[f64], t: &[f64], h_neg: &[f64], t_neg: &[f64], margin: f64, norm: Norm) -> f64 {
    let pos = norm.distance(&translation(h, r, t));
    let neg = norm.distance(&translation(h_neg, r, t_neg));
    let raw = margin + pos - neg;
    // NaN must surface instead of being clamped away
    if raw > 0.0 || raw.is_nan() {
        raw
    } else {
        0.0
    }
}

/// Gradient of [`pair_loss`] with respect to each argument vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGradient {
    pub h: Vec<f64>,
    pub r: Vec<f64>,
    pub t: Vec<f64>,
    pub h_neg: Vec<f64>,
    pub t_neg: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
pub fn pair_gradient(
    h: &[f64],
    r: &[f64],
    t: &[f64],
    h_neg: &[f64],
    t_neg: &[f64],
    margin: f64,
    norm: Norm,
) -> PairGradient {
    let dim = h.len();
    if pair_loss(h, r, t, h_neg, t_neg, margin, norm) <= 0.0 {
        let z = vec![0.0; dim];
        return PairGradient {
            h: z.clone(),
            r: z.clone(),
            t: z.clone(),
            h_neg: z.clone(),
            t_neg: z,
        };
    }
    let gp = distance_gradient(&translation(h, r, t), norm);
    let gn = distance_gradient(&translation(h_neg, r, t_neg), norm);
    PairGradient {
        h: gp.clone(),
        r: gp.iter().zip(&gn).map(|(p, n)| p - n).collect(),
        t: gp.iter().map(|p| -p).collect(),
        h_neg: gn.iter().map(|n| -n).collect(),
        t_neg: gn,
    }
}

fn normalize(v: &mut [f64]) {
    let n = l2_norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// Trains from a uniform `±6/√dim` initialization.
pub fn train_transe(triples: &[Triple], entities: &[String], config: &TransEConfig) -> Result<TrainedEmbeddings> {
    config.validate()?;
    let mut rng = seed::derived_rng(config.seed, "transe/init");
    let bound = 6.0 / (config.dim as f64).sqrt();
    let mut init = EmbeddingTable::new(config.dim, config.norm);
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
        let mut v: Vec<f64> = (0..config.dim).map(|_| rng.gen_range(-bound..bound)).collect();
        normalize(&mut v);
        v
    };
    let mut seen = HashSet::new();
    for e in entities {
        if !seen.insert(e.as_str()) {
            return Err(Error::integrity(e, "duplicate entity id"));
        }
        init.insert_entity(e.clone(), draw(&mut rng))?;
    }
    let mut relations: Vec<&str> = triples.iter().map(|t| t.relation.as_str()).collect();
    relations.sort_unstable();
    relations.dedup();
    for r in relations {
        init.insert_relation(r, draw(&mut rng))?;
    }
    train_transe_from(init, triples, config)
}

/// Continues training from a given table; entity vectors are renormalized
/// to unit length before the first epoch and after every epoch.
pub fn train_transe_from(init: EmbeddingTable, triples: &[Triple], config: &TransEConfig) -> Result<TrainedEmbeddings> {
    config.validate()?;
    if triples.is_empty() {
        return Err(Error::EmptyInput("TransE needs at least one triple".into()));
    }
    if init.dim() != config.dim {
        return Err(Error::DimensionMismatch(format!(
            "initial table has dim {}, config asks for {}",
            init.dim(),
            config.dim
        )));
    }
    let entity_ids: Vec<String> = init.entities().map(|(id, _)| id.to_string()).collect();
    let relation_ids: Vec<String> = init.relations().map(|(id, _)| id.to_string()).collect();
    if entity_ids.len() < 2 {
        return Err(Error::InvalidArgument(
            "TransE needs at least two entities to corrupt triples".into(),
        ));
    }
    let entity_index: HashMap<&str, usize> = entity_ids.iter().enumerate().map(|(i, e)| (e.as_str(), i)).collect();
    let relation_index: HashMap<&str, usize> = relation_ids.iter().enumerate().map(|(i, r)| (r.as_str(), i)).collect();

    let encoded: Vec<(usize, usize, usize)> = triples
        .iter()
        .map(|t| {
            let unknown = |kind, id: &str| Error::UnknownId {
                kind,
                id: id.to_string(),
            };
            Ok((
                *entity_index
                    .get(t.head.as_str())
                    .ok_or_else(|| unknown("entity", &t.head))?,
                *relation_index
                    .get(t.relation.as_str())
                    .ok_or_else(|| unknown("relation", &t.relation))?,
                *entity_index
                    .get(t.tail.as_str())
                    .ok_or_else(|| unknown("entity", &t.tail))?,
            ))
        })
        .collect::<Result<_>>()?;
    let known: HashSet<(usize, usize, usize)> = encoded.iter().copied().collect();

    let mut ent: Vec<Vec<f64>> = init.entities().map(|(_, v)| v.to_vec()).collect();
    let mut rel: Vec<Vec<f64>> = init.relations().map(|(_, v)| v.to_vec()).collect();
    ent.iter_mut().for_each(|v| normalize(v));

    let n_ent = ent.len();
    let mut rng = seed::derived_rng(config.seed, "transe/train");
    let mut order: Vec<usize> = (0..encoded.len()).collect();
    let mut loss_trace = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (batch_no, batch) in order.chunks(config.batch_size).enumerate() {
            let mut ent_grad: HashMap<usize, Vec<f64>> = HashMap::new();
            let mut rel_grad: HashMap<usize, Vec<f64>> = HashMap::new();
            for &i in batch {
                let (h, r, t) = encoded[i];
                let Some((hn, tn)) = corrupt(&mut rng, (h, r, t), n_ent, &known) else {
                    continue;
                };
                let loss = pair_loss(
                    &ent[h],
                    &rel[r],
                    &ent[t],
                    &ent[hn],
                    &ent[tn],
                    config.margin,
                    config.norm,
                );
                if !loss.is_finite() {
                    return Err(Error::NonFiniteLoss {
                        epoch,
                        batch: batch_no,
                        detail: format!(
                            "triple ({}, {}, {}) against ({}, {})",
                            entity_ids[h], relation_ids[r], entity_ids[t], entity_ids[hn], entity_ids[tn]
                        ),
                    });
                }
                epoch_loss += loss;
                if loss == 0.0 {
                    continue;
                }
                let g = pair_gradient(
                    &ent[h],
                    &rel[r],
                    &ent[t],
                    &ent[hn],
                    &ent[tn],
                    config.margin,
                    config.norm,
                );
                for (idx, grad) in [(h, &g.h), (t, &g.t), (hn, &g.h_neg), (tn, &g.t_neg)] {
                    accumulate(ent_grad.entry(idx).or_insert_with(|| vec![0.0; config.dim]), grad);
                }
                accumulate(rel_grad.entry(r).or_insert_with(|| vec![0.0; config.dim]), &g.r);
            }
            // apply in index order so float results do not depend on hash order
            let mut ent_grad: Vec<_> = ent_grad.into_iter().collect();
            ent_grad.sort_unstable_by_key(|(i, _)| *i);
            for (i, grad) in ent_grad {
                step(&mut ent[i], &grad, config.learning_rate);
            }
            let mut rel_grad: Vec<_> = rel_grad.into_iter().collect();
            rel_grad.sort_unstable_by_key(|(i, _)| *i);
            for (i, grad) in rel_grad {
                step(&mut rel[i], &grad, config.learning_rate);
            }
        }
        ent.iter_mut().for_each(|v| normalize(v));
        let mean = epoch_loss / encoded.len() as f64;
        log::debug!("transe epoch {epoch}: loss {mean}");
        loss_trace.push(mean);
    }

    let mut table = EmbeddingTable::new(config.dim, config.norm);
    for (id, v) in entity_ids.into_iter().zip(ent) {
        table.insert_entity(id, v)?;
    }
    for (id, v) in relation_ids.into_iter().zip(rel) {
        table.insert_relation(id, v)?;
    }
    Ok(TrainedEmbeddings { table, loss_trace })
}

fn accumulate(acc: &mut [f64], grad: &[f64]) {
    acc.iter_mut().zip(grad).for_each(|(a, g)| *a += g);
}

fn step(v: &mut [f64], grad: &[f64], lr: f64) {
    v.iter_mut().zip(grad).for_each(|(x, g)| *x -= lr * g);
}

/// Replaces head or tail (probability ½ each) by a uniform entity, resampling
/// corruptions that are true triples. Returns `(head', tail')`.
fn corrupt(
    rng: &mut impl Rng,
    (h, r, t): (usize, usize, usize),
    n_entities: usize,
    known: &HashSet<(usize, usize, usize)>,
) -> Option<(usize, usize)> {
    let corrupt_head = rng.gen_bool(0.5);
    for _ in 0..(16 * n_entities) {
        let e = rng.gen_range(0..n_entities);
        let candidate = if corrupt_head { (e, r, t) } else { (h, r, e) };
        if !known.contains(&candidate) {
            return Some((candidate.0, candidate.2));
        }
    }
    None
}

/// Writes the loss trace as CSV `epoch,loss`.
pub fn save_loss_trace(trace: &[f64], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("epoch,loss\n");
    for (epoch, loss) in trace.iter().enumerate() {
        out.push_str(&format!("{epoch},{loss}\n"));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
