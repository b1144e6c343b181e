use super::encoder::{encode_backward, encode_conformer, EncoderCache, EncoderGrads};
use super::params::{ModelDims, ModelView, ATTN_V, ATTN_W, EDGE_B, EDGE_W, EMBED, GRU, HEAD_B, HEAD_W};
use crate::error::{bail, Result};
use crate::molkit::ConformerBag;
use crate::numkern::{bce_grad_logit, bce_loss, dot, matvec, matvec_t_acc, outer_acc, sigmoid, softmax, softmax_backward, ParamStore};
use crate::spatialgraph::{featurize, FeatConfig, SpatialGraph};

/// Prediction for one bag.
#[derive(Debug, Clone, PartialEq)]
pub struct BagOutput {
    pub prob: f64,
    pub logit: f64,
    /// Attention weight of each conformer, in input order.
    pub alpha: Vec<f64>,
    /// Attention-weighted bag embedding.
    pub context: Vec<f64>,
    /// Per-conformer embeddings.
    pub embeddings: Vec<Vec<f64>>,
}

/// Forward intermediates needed by [`backward_bag`].
#[derive(Debug, Clone, PartialEq)]
pub struct BagCache {
    pub output: BagOutput,
    encoders: Vec<EncoderCache>,
    /// `tanh(V h_k)` per conformer.
    hidden_att: Vec<Vec<f64>>,
}

fn attend_cached(view: &ModelView<'_>, embeddings: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>, Vec<Vec<f64>>)> {
    if embeddings.is_empty() {
        bail!(Domain, "attention over an empty bag");
    }
    let h = view.dims.hidden;
    let a = view.dims.attention;
    let mut hidden_att = Vec::with_capacity(embeddings.len());
    let mut z = Vec::with_capacity(embeddings.len());
    for emb in embeddings {
        if emb.len() != h {
            bail!(Shape, "embedding of length {}, expected {h}", emb.len());
        }
        let mut u = vec![0.0; a];
        matvec(view.attn_v, a, h, emb, &mut u);
        u.iter_mut().for_each(|v| *v = v.tanh());
        z.push(dot(view.attn_w, &u));
        hidden_att.push(u);
    }
    let alpha = softmax(&z)?;
    let mut context = vec![0.0; h];
    for (emb, w) in embeddings.iter().zip(&alpha) {
        for (c, e) in context.iter_mut().zip(emb) {
            *c += w * e;
        }
    }
    Ok((context, alpha, hidden_att))
}

/// Softmax attention pooling: returns the context vector and the weights.
pub fn attend(view: &ModelView<'_>, embeddings: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let (c, alpha, _) = attend_cached(view, embeddings)?;
    Ok((c, alpha))
}

pub fn forward_bag(view: &ModelView<'_>, graphs: &[SpatialGraph]) -> Result<BagCache> {
    if graphs.is_empty() {
        bail!(Domain, "bag has no conformers");
    }
    let mut embeddings = Vec::with_capacity(graphs.len());
    let mut encoders = Vec::with_capacity(graphs.len());
    for sg in graphs {
        let (emb, cache) = encode_conformer(sg, view)?;
        embeddings.push(emb);
        encoders.push(cache);
    }
    let (context, alpha, hidden_att) = attend_cached(view, &embeddings)?;
    let logit = dot(view.head_w, &context) + view.head_b;
    let prob = sigmoid(logit);
    if !prob.is_finite() || alpha.iter().any(|a| !a.is_finite()) {
        bail!(Numeric, "non-finite forward pass");
    }
    Ok(BagCache { output: BagOutput { prob, logit, alpha, context, embeddings }, encoders, hidden_att })
}

/// Adds the gradient of the bag's cross-entropy loss to `grads` and returns the loss.
///
/// `cache` must come from [`forward_bag`] on the same graphs and parameters.
pub fn backward_bag(
    view: &ModelView<'_>,
    graphs: &[SpatialGraph],
    cache: &BagCache,
    label: bool,
    grads: &mut ParamStore,
) -> Result<f64> {
    view.dims.check_params(grads)?;
    if cache.encoders.len() != graphs.len() {
        bail!(State, "cache holds {} conformers, bag has {}", cache.encoders.len(), graphs.len());
    }
    let h = view.dims.hidden;
    let a = view.dims.attention;
    let out = &cache.output;
    let y = if label { 1.0 } else { 0.0 };
    let loss = bce_loss(out.prob, y)?;
    let dlogit = bce_grad_logit(out.prob, y);

    for (g, c) in grads.at_mut(HEAD_W).data_mut().iter_mut().zip(&out.context) {
        *g += dlogit * c;
    }
    grads.at_mut(HEAD_B).data_mut()[0] += dlogit;
    let dc: Vec<f64> = view.head_w.iter().map(|w| dlogit * w).collect();

    let dalpha: Vec<f64> = out.embeddings.iter().map(|e| dot(&dc, e)).collect();
    let mut dz = vec![0.0; graphs.len()];
    softmax_backward(&out.alpha, &dalpha, &mut dz);

    let mut d_attn_w = vec![0.0; a];
    let mut d_attn_v = vec![0.0; a * h];
    let mut enc = EncoderGrads::zeros(view);
    let mut du = vec![0.0; a];
    for (k, sg) in graphs.iter().enumerate() {
        let u = &cache.hidden_att[k];
        let emb = &out.embeddings[k];
        for ((dw, uj), (duj, wj)) in d_attn_w.iter_mut().zip(u).zip(du.iter_mut().zip(view.attn_w)) {
            *dw += dz[k] * uj;
            *duj = dz[k] * wj * (1.0 - uj * uj);
        }
        outer_acc(&mut d_attn_v, &du, emb);
        let mut d_emb: Vec<f64> = dc.iter().map(|g| out.alpha[k] * g).collect();
        matvec_t_acc(view.attn_v, a, h, &du, &mut d_emb);
        encode_backward(sg, view, &cache.encoders[k], &d_emb, &mut enc)?;
    }

    let add = |grads: &mut ParamStore, idx: usize, v: &[f64]| {
        for (g, x) in grads.at_mut(idx).data_mut().iter_mut().zip(v) {
            *g += x;
        }
    };
    add(grads, ATTN_W, &d_attn_w);
    add(grads, ATTN_V, &d_attn_v);
    add(grads, EMBED, &enc.embed);
    add(grads, EDGE_W, &enc.edge_w);
    add(grads, EDGE_B, &enc.edge_b);
    for (i, buf) in enc.gru.buffers().into_iter().enumerate() {
        add(grads, GRU + i, buf);
    }
    Ok(loss)
}

/// Loss of one bag, no gradients.
pub fn bag_loss(view: &ModelView<'_>, graphs: &[SpatialGraph], label: bool) -> Result<f64> {
    let cache = forward_bag(view, graphs)?;
    bce_loss(cache.output.prob, if label { 1.0 } else { 0.0 })
}

pub fn featurize_bag(bag: &ConformerBag, feat: &FeatConfig) -> Result<Vec<SpatialGraph>> {
    bag.conformers.iter().map(|c| featurize(&bag.graph, c, feat)).collect()
}

pub fn predict_bag(bag: &ConformerBag, dims: &ModelDims, params: &ParamStore, feat: &FeatConfig) -> Result<BagOutput> {
    let view = ModelView::new(dims, params)?;
    let graphs = featurize_bag(bag, feat)?;
    Ok(forward_bag(&view, &graphs)?.output)
}
