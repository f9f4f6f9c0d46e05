use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::memory::MemoryStore;
use super::messages::{build_raw_messages, RawMessage};
use super::neighbors::NeighborCache;
use super::params::{TgnConfig, TgnParams};
use crate::ctdg::{NegativeSet, TemporalEvent};
use crate::nn::{bce_with_logits, sigmoid, GruCache, MlpCache, TemporalAttentionCache};
use crate::structfeat::StructuralFeatureVector;
use crate::structmap::StructMap;
use crate::{Error, Result};

/// Auxiliary structural-map objective added to a batch's loss.
pub struct StructMapTerm<'a> {
    pub structmap: &'a mut StructMap,
    /// Standardized features of (at least) every endpoint of the batch.
    pub features: &'a BTreeMap<usize, StructuralFeatureVector>,
    pub alpha: f64,
    /// Let the structural loss flow into the memory as well.
    pub coupled: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchOutput {
    pub tlp_loss: f64,
    pub structmap_loss: Option<f64>,
    pub total_loss: f64,
    pub pos_logits: Vec<f64>,
    /// `k` logits per event, row-major.
    pub neg_logits: Vec<f64>,
    pub k: usize,
    /// Nodes that contributed to the structural loss.
    pub structmap_targets: usize,
}

/// Mutable per-stream state: memory, recent neighbors and the messages
/// waiting to be applied at the start of the next batch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TgnState {
    pub store: MemoryStore,
    pub cache: NeighborCache,
    pending: BTreeMap<usize, RawMessage>,
}

struct UpdateTrace {
    node: usize,
    elapsed: f64,
    message: MlpCache,
    gru: GruCache,
}

struct EmbedTrace {
    node: usize,
    elapsed: f64,
    neighbors: Vec<(usize, f64)>,
    cache: TemporalAttentionCache,
}

struct PairTrace {
    left: usize,
    right: usize,
    cache: MlpCache,
}

impl TgnState {
    pub fn new(num_nodes: usize, config: &TgnConfig) -> Self {
        Self {
            store: MemoryStore::new(num_nodes, config.memory_dim),
            cache: NeighborCache::new(num_nodes, config.neighbors),
            pending: BTreeMap::new(),
        }
    }

    pub fn reset(&mut self) {
        self.store.reset();
        self.cache.reset();
        self.pending.clear();
    }

    pub fn pending(&self) -> &BTreeMap<usize, RawMessage> {
        &self.pending
    }

    /// Apply pending messages outside of any gradient computation.
    pub fn flush(&mut self, params: &TgnParams) -> Result<()> {
        self.apply_pending(params, false).map(|_| ())
    }

    fn apply_pending(&mut self, params: &TgnParams, trace: bool) -> Result<Vec<UpdateTrace>> {
        let mut traces = Vec::new();
        for (node, raw) in std::mem::take(&mut self.pending) {
            let (msg, mcache) = params.message.forward(&raw.input(&params.time))?;
            let (h, gcache) = params.updater.forward(self.store.row(node), &msg)?;
            self.store.write(node, &h, raw.timestamp)?;
            if trace {
                traces.push(UpdateTrace {
                    node,
                    elapsed: raw.elapsed,
                    message: mcache,
                    gru: gcache,
                });
            }
        }
        Ok(traces)
    }

    fn embed(&self, params: &TgnParams, node: usize, t: f64) -> Result<(Vec<f64>, EmbedTrace)> {
        self.store.check_node(node)?;
        let elapsed = self.store.elapsed(node, t);
        let mut xq = self.store.row(node).to_vec();
        xq.extend(params.time.forward(elapsed));
        let mut xk = Vec::new();
        let mut neighbors = Vec::new();
        for e in self.cache.neighbors(node) {
            let dt = t - e.timestamp;
            let mut x = self.store.row(e.neighbor).to_vec();
            x.extend_from_slice(&e.edge_feat);
            x.extend(params.time.forward(dt));
            xk.push(x);
            neighbors.push((e.neighbor, dt));
        }
        let (emb, cache) = params.readout.forward(&xq, &xk)?;
        Ok((
            emb,
            EmbedTrace {
                node,
                elapsed,
                neighbors,
                cache,
            },
        ))
    }

    /// Memory update from pending messages, then prediction and loss for
    /// `events`. With `train` set, gradients of the total loss are
    /// accumulated into `params` (and the structural map); parameters are
    /// not stepped. Call [`TgnState::observe`] afterwards.
    pub fn process_batch(
        &mut self,
        params: &mut TgnParams,
        events: &[TemporalEvent],
        negatives: &NegativeSet,
        structmap: Option<StructMapTerm<'_>>,
        train: bool,
    ) -> Result<BatchOutput> {
        if negatives.num_events() != events.len() {
            return Err(Error::Shape {
                layer: "negatives".into(),
                expected: events.len(),
                got: negatives.num_events(),
            });
        }
        let updates = self.apply_pending(params, train)?;
        let b = events.len();
        let k = negatives.k;
        if b == 0 {
            return Ok(BatchOutput {
                tlp_loss: 0.0,
                structmap_loss: structmap.map(|_| 0.0),
                total_loss: 0.0,
                pos_logits: vec![],
                neg_logits: vec![],
                k,
                structmap_targets: 0,
            });
        }

        let mut embeds: Vec<(Vec<f64>, EmbedTrace)> = Vec::with_capacity(b * (2 + k));
        let mut pairs: Vec<(f64, PairTrace)> = Vec::with_capacity(b * (1 + k));
        let mut neg_logits = Vec::with_capacity(b * k);
        let mut pos_logits = Vec::with_capacity(b);
        for (i, e) in events.iter().enumerate() {
            let src = embeds.len();
            embeds.push(self.embed(params, e.src, e.timestamp)?);
            let mut rights = vec![e.dst];
            rights.extend_from_slice(negatives.for_event(i));
            for (j, &r) in rights.iter().enumerate() {
                let right = embeds.len();
                embeds.push(self.embed(params, r, e.timestamp)?);
                let mut x = embeds[src].0.clone();
                x.extend_from_slice(&embeds[right].0);
                let (y, cache) = params.decoder.forward(&x)?;
                if !y[0].is_finite() {
                    return Err(Error::Divergence {
                        batch: 0,
                        reason: format!("non-finite logit for event {i}"),
                    });
                }
                if j == 0 {
                    pos_logits.push(y[0]);
                } else {
                    neg_logits.push(y[0]);
                }
                pairs.push((y[0], PairTrace { left: src, right, cache }));
            }
        }

        let pos_loss = pos_logits.iter().map(|&z| bce_with_logits(z, 1.0)).sum::<f64>() / b as f64;
        let neg_loss = if k == 0 {
            0.0
        } else {
            neg_logits.iter().map(|&z| bce_with_logits(z, 0.0)).sum::<f64>() / (b * k) as f64
        };
        let tlp_loss = if k == 0 { pos_loss } else { 0.5 * (pos_loss + neg_loss) };

        // Structural term over endpoints whose memory has been written.
        let mut sm_result = None;
        let mut dmem: HashMap<usize, Vec<f64>> = HashMap::new();
        let dm = self.store.dim();
        let mut structmap_targets = 0;
        if let Some(term) = structmap {
            let nodes: BTreeSet<usize> = events
                .iter()
                .flat_map(|e| [e.src, e.dst])
                .filter(|&n| !self.store.is_fresh(n))
                .collect();
            structmap_targets = nodes.len();
            let scale = (nodes.len() * dm).max(1) as f64;
            let mut loss = 0.0;
            for &n in &nodes {
                let f = term.features.get(&n).ok_or_else(|| {
                    Error::Contract(format!("no structural features supplied for node {n}"))
                })?;
                let (pred, cache) = term.structmap.forward_cached(f)?;
                let target = self.store.row(n);
                let diff: Vec<f64> = pred.iter().zip(target).map(|(p, y)| p - y).collect();
                loss += diff.iter().map(|d| d * d).sum::<f64>();
                if train {
                    let g: Vec<f64> = diff.iter().map(|d| term.alpha * 2.0 * d / scale).collect();
                    term.structmap.mlp.backward(&cache, &g);
                    if term.coupled {
                        let acc = dmem.entry(n).or_insert_with(|| vec![0.0; dm]);
                        for (a, v) in acc.iter_mut().zip(&g) {
                            *a -= v;
                        }
                    }
                }
            }
            sm_result = Some((loss / scale, term.alpha));
        }
        let structmap_loss = sm_result.map(|(l, _)| l);
        let total_loss = tlp_loss + sm_result.map_or(0.0, |(l, a)| a * l);
        if !total_loss.is_finite() {
            return Err(Error::Divergence {
                batch: 0,
                reason: format!("non-finite loss {total_loss}"),
            });
        }

        if train {
            self.backward(params, &updates, &embeds, &pairs, b, k, dmem);
        }

        Ok(BatchOutput {
            tlp_loss,
            structmap_loss,
            total_loss,
            pos_logits,
            neg_logits,
            k,
            structmap_targets,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn backward(
        &self,
        params: &mut TgnParams,
        updates: &[UpdateTrace],
        embeds: &[(Vec<f64>, EmbedTrace)],
        pairs: &[(f64, PairTrace)],
        b: usize,
        k: usize,
        mut dmem: HashMap<usize, Vec<f64>>,
    ) {
        let dm = self.store.dim();
        let dn = params.config.embedding_dim;
        let de = params.config.edge_feat_dim;
        let (pos_w, neg_w) = if k == 0 {
            (1.0 / b as f64, 0.0)
        } else {
            (0.5 / b as f64, 0.5 / (b * k) as f64)
        };

        let mut demb = vec![vec![0.0; dn]; embeds.len()];
        for (idx, (logit, p)) in pairs.iter().enumerate() {
            let positive = idx % (k + 1) == 0;
            let dz = if positive {
                pos_w * (sigmoid(*logit) - 1.0)
            } else {
                neg_w * sigmoid(*logit)
            };
            let dx = params.decoder.backward(&p.cache, &[dz]);
            for (a, v) in demb[p.left].iter_mut().zip(&dx[..dn]) {
                *a += v;
            }
            for (a, v) in demb[p.right].iter_mut().zip(&dx[dn..]) {
                *a += v;
            }
        }

        let add = |dmem: &mut HashMap<usize, Vec<f64>>, node: usize, g: &[f64]| {
            let acc = dmem.entry(node).or_insert_with(|| vec![0.0; dm]);
            for (a, v) in acc.iter_mut().zip(g) {
                *a += v;
            }
        };
        for ((_, tr), g) in embeds.iter().zip(&demb) {
            let (dxq, dxk) = params.readout.backward(&tr.cache, g);
            add(&mut dmem, tr.node, &dxq[..dm]);
            params.time.backward(tr.elapsed, &dxq[dm..]);
            for ((nbr, dt), gx) in tr.neighbors.iter().zip(&dxk) {
                add(&mut dmem, *nbr, &gx[..dm]);
                params.time.backward(*dt, &gx[dm + de..]);
            }
        }

        for u in updates {
            let Some(g) = dmem.get(&u.node) else { continue };
            let (_, dmsg) = params.updater.backward(&u.gru, g);
            let dx = params.message.backward(&u.message, &dmsg);
            params.time.backward(u.elapsed, &dx[2 * dm..2 * dm + params.config.time_dim]);
        }
    }

    /// Record `events` (after their predictions and any optimizer step):
    /// raw messages from the current memory and the neighbor cache.
    pub fn observe(&mut self, events: &[TemporalEvent]) -> Result<()> {
        let raw = build_raw_messages(events, &self.store)?;
        self.pending.extend(raw);
        self.cache.insert(events);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{collect_grads, grad_check, Module};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn micro(rng: &mut ChaCha8Rng, n: usize, m: usize, de: usize) -> Vec<TemporalEvent> {
        let mut t = 0.0;
        (0..m)
            .map(|_| {
                t += rng.gen_range(0.5..3.0);
                let s = rng.gen_range(0..n);
                let d = (s + rng.gen_range(1..n)) % n;
                TemporalEvent::new(s, d, t).with_features((0..de).map(|_| rng.gen_range(-1.0..1.0)).collect())
            })
            .collect()
    }

    fn tiny_config(de: usize) -> TgnConfig {
        TgnConfig {
            memory_dim: 4,
            embedding_dim: 3,
            time_dim: 3,
            edge_feat_dim: de,
            message_hidden: vec![5],
            decoder_hidden: vec![4],
            neighbors: 3,
        }
    }

    fn negatives(events: &[TemporalEvent], n: usize, k: usize, seed: u64) -> NegativeSet {
        crate::ctdg::sample_negatives(events, n, k, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    #[test]
    fn end_to_end_gradient_through_memory() {
        for seed in 0..3 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ev = micro(&mut rng, 5, 8, 2);
            let cfg = tiny_config(2);
            let mut params = TgnParams::new(&cfg, 20.0, &mut rng).unwrap();
            let mut state = TgnState::new(5, &cfg);
            let n0 = negatives(&ev[..4], 5, 1, seed);
            state.process_batch(&mut params, &ev[..4], &n0, None, false).unwrap();
            state.observe(&ev[..4]).unwrap();
            let n1 = negatives(&ev[4..], 5, 2, seed + 10);
            params.zero_grad();
            state.clone().process_batch(&mut params, &ev[4..], &n1, None, true).unwrap();
            let analytic = collect_grads(&params);
            assert!(analytic[0].iter().any(|g| *g != 0.0), "message MLP receives gradient");
            let report = grad_check(
                &mut params,
                &analytic,
                |p| {
                    let mut p = p.clone();
                    state.clone().process_batch(&mut p, &ev[4..], &n1, None, false).unwrap().total_loss
                },
                1e-5,
                1e-3,
            );
            assert!(report.passed(), "seed {seed}: {:?}", &report.failures[..report.failures.len().min(3)]);
        }
    }

    #[test]
    fn coupled_structmap_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ev = micro(&mut rng, 5, 8, 0);
        let cfg = tiny_config(0);
        let mut params = TgnParams::new(&cfg, 20.0, &mut rng).unwrap();
        let mut sm = StructMap::new(3, 4, cfg.memory_dim, &mut rng).unwrap();
        let feats: BTreeMap<usize, StructuralFeatureVector> = (0..5)
            .map(|n| {
                let values = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
                (n, StructuralFeatureVector { values, standardized: true })
            })
            .collect();
        let mut state = TgnState::new(5, &cfg);
        let n0 = negatives(&ev[..4], 5, 1, 0);
        state.process_batch(&mut params, &ev[..4], &n0, None, false).unwrap();
        state.observe(&ev[..4]).unwrap();
        let n1 = negatives(&ev[4..], 5, 1, 1);

        let run = |params: &mut TgnParams, sm: &mut StructMap, train: bool| {
            let term = StructMapTerm { structmap: sm, features: &feats, alpha: 0.7, coupled: true };
            state.clone().process_batch(params, &ev[4..], &n1, Some(term), train).unwrap()
        };
        params.zero_grad();
        sm.zero_grad();
        let out = run(&mut params, &mut sm, true);
        assert!(out.structmap_targets > 0);
        assert!((out.total_loss - out.tlp_loss - 0.7 * out.structmap_loss.unwrap()).abs() < 1e-12);
        let ga = collect_grads(&params);
        let gs = collect_grads(&sm);
        let sm0 = sm.clone();
        let r = grad_check(&mut params, &ga, |p| run(&mut p.clone(), &mut sm0.clone(), false).total_loss, 1e-5, 1e-3);
        assert!(r.passed(), "{:?}", r.failures);
        let p0 = params.clone();
        let r = grad_check(&mut sm, &gs, |s| run(&mut p0.clone(), &mut s.clone(), false).total_loss, 1e-5, 1e-3);
        assert!(r.passed(), "{:?}", r.failures);
    }

    #[test]
    fn detached_structmap_leaves_tgn_gradients_untouched() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ev = micro(&mut rng, 5, 8, 0);
        let cfg = tiny_config(0);
        let mut params = TgnParams::new(&cfg, 20.0, &mut rng).unwrap();
        let mut sm = StructMap::new(3, 4, cfg.memory_dim, &mut rng).unwrap();
        let feats: BTreeMap<usize, StructuralFeatureVector> = (0..5)
            .map(|n| (n, StructuralFeatureVector { values: vec![n as f64, 1.0, -1.0], standardized: true }))
            .collect();
        let mut state = TgnState::new(5, &cfg);
        let n0 = negatives(&ev[..4], 5, 1, 0);
        state.process_batch(&mut params, &ev[..4], &n0, None, false).unwrap();
        state.observe(&ev[..4]).unwrap();
        let n1 = negatives(&ev[4..], 5, 1, 1);

        params.zero_grad();
        state.clone().process_batch(&mut params, &ev[4..], &n1, None, true).unwrap();
        let plain = collect_grads(&params);
        for alpha in [0.0, 2.5] {
            params.zero_grad();
            let term = StructMapTerm { structmap: &mut sm, features: &feats, alpha, coupled: false };
            state.clone().process_batch(&mut params, &ev[4..], &n1, Some(term), true).unwrap();
            assert_eq!(collect_grads(&params), plain, "alpha {alpha}");
        }
    }

    #[test]
    fn untouched_rows_stay_zero_and_timestamps_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let ev = micro(&mut rng, 4, 30, 0);
        let cfg = tiny_config(0);
        let mut params = TgnParams::new(&cfg, 90.0, &mut rng).unwrap();
        let mut state = TgnState::new(6, &cfg);
        let mut last = vec![f64::NEG_INFINITY; 6];
        for chunk in ev.chunks(7) {
            let negs = negatives(chunk, 4, 1, 3);
            state.process_batch(&mut params, chunk, &negs, None, false).unwrap();
            state.observe(chunk).unwrap();
            for (n, l) in last.iter_mut().enumerate() {
                assert!(state.store.last_update(n) >= *l);
                *l = state.store.last_update(n);
            }
        }
        state.flush(&params).unwrap();
        for n in 4..6 {
            assert!(state.store.is_fresh(n));
            assert!(state.store.row(n).iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn zero_decoder_gives_ln2() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ev = micro(&mut rng, 5, 6, 0);
        let cfg = tiny_config(0);
        let mut params = TgnParams::new(&cfg, 20.0, &mut rng).unwrap();
        for p in params.decoder.parameters_mut() {
            p.fill(0.0);
        }
        let mut state = TgnState::new(5, &cfg);
        let negs = negatives(&ev, 5, 3, 0);
        let out = state.process_batch(&mut params, &ev, &negs, None, false).unwrap();
        assert!((out.tlp_loss - std::f64::consts::LN_2).abs() < 1e-15);
    }
}
