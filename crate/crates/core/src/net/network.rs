use std::fmt;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::arch::ArchConfig;
use super::features::{encode_party, PartyFeatures};
use crate::content::ContentPack;
use crate::error::{Error, Result};
use crate::sim::{Encounter, Party, RngStream};

/// Numeric mode of a network: `f64` for gradient checks, `f32` for training.
pub trait Scalar: Float + Send + Sync + fmt::Debug + 'static {
    const NAME: &'static str;
    fn of(x: f64) -> Self;
    fn widen(self) -> f64;
}

impl Scalar for f32 {
    const NAME: &'static str = "f32";
    fn of(x: f64) -> Self {
        x as f32
    }
    fn widen(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    const NAME: &'static str = "f64";
    fn of(x: f64) -> Self {
        x
    }
    fn widen(self) -> f64 {
        self
    }
}

/// A `rows x cols` row-major block of the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Block {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub numeric_w: Block,
    pub numeric_b: Block,
    pub class_embed: Block,
    pub saves_w: Block,
    pub resistances_w: Block,
    pub spells_w: Block,
    pub specials_w: Block,
    pub member_w: Block,
    pub member_b: Block,
    pub synergy_w: Block,
    pub synergy_b: Block,
    pub synergy_dense_w: Block,
    pub synergy_dense_b: Block,
    pub out_w: Block,
    pub out_b: Block,
    pub total: usize,
}

impl Layout {
    pub fn new(a: &ArchConfig) -> Self {
        let mut offset = 0;
        let mut block = |rows: usize, cols: usize| {
            let b = Block { offset, rows, cols };
            offset += rows * cols;
            b
        };
        let numeric_w = block(a.numeric_dim, a.numeric_dim);
        let numeric_b = block(1, a.numeric_dim);
        let class_embed = block(a.n_pc_classes, a.class_dim);
        let saves_w = block(a.n_saves, a.group_dim);
        let resistances_w = block(a.n_resistances, a.group_dim);
        let spells_w = block(a.n_spells, a.group_dim);
        let specials_w = block(a.n_specials, a.group_dim);
        let member_w = block(a.member_dim(), a.hidden);
        let member_b = block(1, a.hidden);
        let synergy_w = block(a.n_enemy_classes, a.synergy_dim);
        let synergy_b = block(1, a.synergy_dim);
        let synergy_dense_w = block(a.synergy_dim, a.hidden);
        let synergy_dense_b = block(1, a.hidden);
        let out_w = block(2 * a.hidden, a.n_actions());
        let out_b = block(1, a.n_actions());
        Self {
            numeric_w,
            numeric_b,
            class_embed,
            saves_w,
            resistances_w,
            spells_w,
            specials_w,
            member_w,
            member_b,
            synergy_w,
            synergy_b,
            synergy_dense_w,
            synergy_dense_b,
            out_w,
            out_b,
            total: offset,
        }
    }

    /// Weight blocks with their bias, if any.
    fn layers(&self) -> [(Block, Option<Block>); 10] {
        [
            (self.numeric_w, Some(self.numeric_b)),
            (self.class_embed, None),
            (self.saves_w, None),
            (self.resistances_w, None),
            (self.spells_w, None),
            (self.specials_w, None),
            (self.member_w, Some(self.member_b)),
            (self.synergy_w, Some(self.synergy_b)),
            (self.synergy_dense_w, Some(self.synergy_dense_b)),
            (self.out_w, Some(self.out_b)),
        ]
    }
}

/// `y = x W + b`, skipping zero inputs.
fn affine<T: Scalar>(p: &[T], w: Block, b: Option<Block>, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), w.rows);
    debug_assert_eq!(y.len(), w.cols);
    match b {
        Some(b) => y.copy_from_slice(&p[b.range()]),
        None => y.iter_mut().for_each(|v| *v = T::zero()),
    }
    for (i, &xi) in x.iter().enumerate() {
        if xi == T::zero() {
            continue;
        }
        let row = &p[w.offset + i * w.cols..w.offset + (i + 1) * w.cols];
        for (yj, &wij) in y.iter_mut().zip(row) {
            *yj = *yj + xi * wij;
        }
    }
}

/// Accumulates parameter gradients of `y = x W + b` given `gy`, and adds the
/// input gradient to `gx` when requested.
fn affine_back<T: Scalar>(
    p: &[T],
    w: Block,
    b: Option<Block>,
    x: &[T],
    gy: &[T],
    grad: &mut [T],
    gx: Option<&mut [T]>,
) {
    if let Some(b) = b {
        for (g, &v) in grad[b.range()].iter_mut().zip(gy) {
            *g = *g + v;
        }
    }
    for (i, &xi) in x.iter().enumerate() {
        if xi == T::zero() {
            continue;
        }
        let row = &mut grad[w.offset + i * w.cols..w.offset + (i + 1) * w.cols];
        for (g, &v) in row.iter_mut().zip(gy) {
            *g = *g + xi * v;
        }
    }
    if let Some(gx) = gx {
        for (i, gxi) in gx.iter_mut().enumerate() {
            let row = &p[w.offset + i * w.cols..w.offset + (i + 1) * w.cols];
            let s = row.iter().zip(gy).fold(T::zero(), |acc, (&wij, &v)| acc + wij * v);
            *gxi = *gxi + s;
        }
    }
}

fn relu<T: Scalar>(v: &[T]) -> Vec<T> {
    v.iter().map(|&x| if x > T::zero() { x } else { T::zero() }).collect()
}

/// Per-member activations, kept for the backward pass.
struct MemberCache<T> {
    inputs: [Vec<T>; 6],
    encoded: Vec<T>,
    pre: Vec<T>,
}

struct PartyCache<T> {
    members: Vec<MemberCache<T>>,
    pooled: Vec<T>,
}

struct StepCache<T> {
    synergy_in: Vec<T>,
    z: Vec<T>,
    pre: Vec<T>,
    hidden: Vec<T>,
    probs: Vec<T>,
}

/// The actions drawn for one encounter and their log-probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleTrace {
    /// Chosen enemy classes, in draw order.
    pub classes: Vec<usize>,
    /// One entry per draw, including the STOP draw when `stopped`.
    pub log_probs: Vec<f64>,
    pub stopped: bool,
}

impl SampleTrace {
    /// Action indices in draw order, STOP included.
    pub fn actions(&self, stop: usize) -> Vec<usize> {
        let mut a = self.classes.clone();
        if self.stopped {
            a.push(stop);
        }
        a
    }

    pub fn total_log_prob(&self) -> f64 {
        self.log_probs.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyNetwork<T: Scalar> {
    pub arch: ArchConfig,
    params: Vec<T>,
    layout: Layout,
}

impl<T: Scalar> PolicyNetwork<T> {
    /// Fan-in uniform initialization with the output layer zeroed, so the
    /// initial policy is uniform.
    pub fn new(arch: ArchConfig, seed: u64) -> Self {
        let mut net = Self::random(arch, seed);
        let out = net.layout.out_w.range();
        let bias = net.layout.out_b.range();
        net.params[out].iter_mut().for_each(|v| *v = T::zero());
        net.params[bias].iter_mut().for_each(|v| *v = T::zero());
        net
    }

    /// Every parameter drawn uniformly in `±1/sqrt(fan_in)` of its layer.
    pub fn random(arch: ArchConfig, seed: u64) -> Self {
        let layout = Layout::new(&arch);
        let mut params = vec![T::zero(); layout.total];
        let mut rng = RngStream::new(seed);
        for (w, b) in layout.layers() {
            let limit = 1.0 / (w.rows.max(1) as f64).sqrt();
            let bias = b.map(|b| b.range()).unwrap_or(0..0);
            for i in w.range().chain(bias) {
                params[i] = T::of((2.0 * rng.unit() - 1.0) * limit);
            }
        }
        Self { arch, params, layout }
    }

    pub fn from_params(arch: ArchConfig, params: Vec<T>) -> Result<Self> {
        let layout = Layout::new(&arch);
        if params.len() != layout.total {
            return Err(Error::ShapeMismatch(format!(
                "{} parameters for an architecture of {}",
                params.len(),
                layout.total
            )));
        }
        Ok(Self { arch, params, layout })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn param_count(&self) -> usize {
        self.layout.total
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    /// Same parameters in another numeric mode.
    pub fn cast<U: Scalar>(&self) -> PolicyNetwork<U> {
        PolicyNetwork {
            arch: self.arch.clone(),
            params: self.params.iter().map(|v| U::of(v.widen())).collect(),
            layout: self.layout.clone(),
        }
    }

    fn party_forward(&self, f: &PartyFeatures) -> Result<PartyCache<T>> {
        f.check_shape(&self.arch)?;
        let a = &self.arch;
        let l = &self.layout;
        let p = &self.params;
        let hidden = a.hidden;
        let mut pooled = vec![T::zero(); hidden];
        let mut members = Vec::new();
        let n = T::of(f.members() as f64);
        for row in 0..a.max_members {
            if f.mask[row] == 0 {
                continue;
            }
            let conv = |v: &Vec<f64>| v.iter().map(|&x| T::of(x)).collect::<Vec<T>>();
            let inputs = [
                conv(&f.numeric[row]),
                conv(&f.class[row]),
                conv(&f.saves[row]),
                conv(&f.resistances[row]),
                conv(&f.spells[row]),
                conv(&f.specials[row]),
            ];
            let mut encoded = vec![T::zero(); a.member_dim()];
            let (num, rest) = encoded.split_at_mut(a.numeric_dim);
            affine(p, l.numeric_w, Some(l.numeric_b), &inputs[0], num);
            let (cls, rest) = rest.split_at_mut(a.class_dim);
            affine(p, l.class_embed, None, &inputs[1], cls);
            let groups = [l.saves_w, l.resistances_w, l.spells_w, l.specials_w];
            for (k, chunk) in rest.chunks_mut(a.group_dim).enumerate() {
                affine(p, groups[k], None, &inputs[k + 2], chunk);
            }
            let mut pre = vec![T::zero(); hidden];
            affine(p, l.member_w, Some(l.member_b), &encoded, &mut pre);
            for (acc, h) in pooled.iter_mut().zip(relu(&pre)) {
                *acc = *acc + h / n;
            }
            members.push(MemberCache { inputs, encoded, pre });
        }
        Ok(PartyCache { members, pooled })
    }

    fn step_forward(&self, party: &PartyCache<T>, synergy: &[u32]) -> Result<StepCache<T>> {
        let a = &self.arch;
        let l = &self.layout;
        let p = &self.params;
        if synergy.len() != a.n_enemy_classes {
            return Err(Error::ShapeMismatch(format!(
                "synergy has {} entries, expected {}",
                synergy.len(),
                a.n_enemy_classes
            )));
        }
        let scale = T::of(a.max_enemies as f64);
        let synergy_in: Vec<T> = synergy.iter().map(|&c| T::of(c as f64) / scale).collect();
        let mut z = vec![T::zero(); a.synergy_dim];
        affine(p, l.synergy_w, Some(l.synergy_b), &synergy_in, &mut z);
        let mut pre = vec![T::zero(); a.hidden];
        affine(p, l.synergy_dense_w, Some(l.synergy_dense_b), &z, &mut pre);
        let hidden = relu(&pre);
        let mut joint = party.pooled.clone();
        joint.extend_from_slice(&hidden);
        let mut logits = vec![T::zero(); a.n_actions()];
        affine(p, l.out_w, Some(l.out_b), &joint, &mut logits);
        let stop_masked = synergy.iter().all(|&c| c == 0);
        let probs = softmax(&logits, stop_masked.then_some(a.stop_action()));
        Ok(StepCache {
            synergy_in,
            z,
            pre,
            hidden,
            probs,
        })
    }

    /// Action distribution (26 classes, then STOP) for a party and the
    /// enemies chosen so far. STOP has probability 0 while `synergy` is empty.
    pub fn forward(&self, f: &PartyFeatures, synergy: &[u32]) -> Result<Vec<T>> {
        let party = self.party_forward(f)?;
        Ok(self.step_forward(&party, synergy)?.probs)
    }

    /// Draws up to `max_enemies` classes, stopping early on STOP. Returns the
    /// trace and the distribution seen at each draw.
    pub fn sample(&self, f: &PartyFeatures, rng: &mut RngStream) -> Result<(SampleTrace, Vec<Vec<f64>>)> {
        let party = self.party_forward(f)?;
        let stop = self.arch.stop_action();
        let mut synergy = vec![0u32; self.arch.n_enemy_classes];
        let mut trace = SampleTrace {
            classes: Vec::new(),
            log_probs: Vec::new(),
            stopped: false,
        };
        let mut dists = Vec::new();
        for _ in 0..self.arch.max_enemies {
            let step = self.step_forward(&party, &synergy)?;
            let probs: Vec<f64> = step.probs.iter().map(|v| v.widen()).collect();
            let a = draw(&probs, rng.unit());
            trace.log_probs.push(step.probs[a].ln().widen());
            dists.push(probs);
            if a == stop {
                trace.stopped = true;
                break;
            }
            trace.classes.push(a);
            synergy[a] += 1;
        }
        Ok((trace, dists))
    }

    fn check_trace(&self, trace: &SampleTrace) -> Result<()> {
        let a = &self.arch;
        let n = trace.classes.len();
        let bad = |m: String| Err(Error::TraceMismatch(m));
        if n == 0 || n > a.max_enemies {
            return bad(format!("{n} classes in trace"));
        }
        if trace.stopped && n == a.max_enemies {
            return bad("STOP after the maximum number of enemies".into());
        }
        if !trace.stopped && n < a.max_enemies {
            return bad("trace ended early without STOP".into());
        }
        if let Some(c) = trace.classes.iter().find(|&&c| c >= a.n_enemy_classes) {
            return bad(format!("class {c} outside the pool"));
        }
        if trace.log_probs.len() != n + trace.stopped as usize {
            return bad("one log-probability per draw expected".into());
        }
        Ok(())
    }

    /// `sum_t log pi(a_t | s_t)` recomputed by a forward replay of `trace`.
    pub fn log_prob(&self, f: &PartyFeatures, trace: &SampleTrace) -> Result<T> {
        self.check_trace(trace)?;
        let party = self.party_forward(f)?;
        let mut synergy = vec![0u32; self.arch.n_enemy_classes];
        let mut total = T::zero();
        for &a in &trace.actions(self.arch.stop_action()) {
            let step = self.step_forward(&party, &synergy)?;
            total = total + step.probs[a].ln();
            if a < self.arch.n_enemy_classes {
                synergy[a] += 1;
            }
        }
        Ok(total)
    }

    /// Gradient of `sum_t log pi(a_t | s_t)` with respect to every parameter.
    /// The replayed log-probabilities must match the trace.
    pub fn log_prob_gradient(&self, f: &PartyFeatures, trace: &SampleTrace) -> Result<Vec<T>> {
        self.check_trace(trace)?;
        let a = &self.arch;
        let l = &self.layout;
        let p = &self.params;
        let party = self.party_forward(f)?;
        let mut grad = vec![T::zero(); l.total];
        let mut g_pooled = vec![T::zero(); a.hidden];
        let mut synergy = vec![0u32; a.n_enemy_classes];
        let tol = 64.0 * T::epsilon().widen();
        for (t, &act) in trace.actions(a.stop_action()).iter().enumerate() {
            let step = self.step_forward(&party, &synergy)?;
            let lp = step.probs[act].ln().widen();
            let recorded = trace.log_probs[t];
            if !(lp - recorded).abs().le(&(tol * (1.0 + recorded.abs()))) {
                return Err(Error::TraceMismatch(format!(
                    "draw {t}: replayed log-probability {lp} differs from recorded {recorded}"
                )));
            }
            // d log p_a / d logits = onehot(a) - p
            let g_logits: Vec<T> = step
                .probs
                .iter()
                .enumerate()
                .map(|(k, &pk)| if k == act { T::one() - pk } else { -pk })
                .collect();
            let mut joint = party.pooled.clone();
            joint.extend_from_slice(&step.hidden);
            let mut g_joint = vec![T::zero(); 2 * a.hidden];
            affine_back(p, l.out_w, Some(l.out_b), &joint, &g_logits, &mut grad, Some(&mut g_joint));
            for (g, &v) in g_pooled.iter_mut().zip(&g_joint[..a.hidden]) {
                *g = *g + v;
            }
            let g_pre: Vec<T> = g_joint[a.hidden..]
                .iter()
                .zip(&step.pre)
                .map(|(&g, &x)| if x > T::zero() { g } else { T::zero() })
                .collect();
            let mut g_z = vec![T::zero(); a.synergy_dim];
            affine_back(p, l.synergy_dense_w, Some(l.synergy_dense_b), &step.z, &g_pre, &mut grad, Some(&mut g_z));
            affine_back(p, l.synergy_w, Some(l.synergy_b), &step.synergy_in, &g_z, &mut grad, None);
            if act < a.n_enemy_classes {
                synergy[act] += 1;
            }
        }
        let n = T::of(party.members.len() as f64);
        for m in &party.members {
            let g_pre: Vec<T> = g_pooled
                .iter()
                .zip(&m.pre)
                .map(|(&g, &x)| if x > T::zero() { g / n } else { T::zero() })
                .collect();
            let mut g_enc = vec![T::zero(); a.member_dim()];
            affine_back(p, l.member_w, Some(l.member_b), &m.encoded, &g_pre, &mut grad, Some(&mut g_enc));
            let (g_num, rest) = g_enc.split_at(a.numeric_dim);
            affine_back(p, l.numeric_w, Some(l.numeric_b), &m.inputs[0], g_num, &mut grad, None);
            let (g_cls, rest) = rest.split_at(a.class_dim);
            affine_back(p, l.class_embed, None, &m.inputs[1], g_cls, &mut grad, None);
            let groups = [l.saves_w, l.resistances_w, l.spells_w, l.specials_w];
            for (k, chunk) in rest.chunks(a.group_dim).enumerate() {
                affine_back(p, groups[k], None, &m.inputs[k + 2], chunk, &mut grad, None);
            }
        }
        Ok(grad)
    }

    /// Encodes the party, samples, and builds the encounter.
    pub fn sample_encounter(
        &self,
        party: &Party,
        pack: &ContentPack,
        rng: &mut RngStream,
    ) -> Result<(Encounter, SampleTrace, Vec<Vec<f64>>)> {
        let f = encode_party(party, pack, &self.arch)?;
        let (trace, dists) = self.sample(&f, rng)?;
        let enc = Encounter::from_indices(pack, &trace.classes);
        Ok((enc, trace, dists))
    }
}

/// Softmax over `logits`, with the `masked` entry forced to probability 0.
pub fn softmax<T: Scalar>(logits: &[T], masked: Option<usize>) -> Vec<T> {
    let live = |k: usize| Some(k) != masked;
    let max = logits
        .iter()
        .enumerate()
        .filter(|(k, _)| live(*k))
        .fold(T::neg_infinity(), |m, (_, &v)| m.max(v));
    let exps: Vec<T> = logits
        .iter()
        .enumerate()
        .map(|(k, &v)| if live(k) { (v - max).exp() } else { T::zero() })
        .collect();
    let sum = exps.iter().fold(T::zero(), |a, &b| a + b);
    exps.into_iter().map(|e| e / sum).collect()
}

/// Inverse-CDF draw; never returns a zero-probability action.
fn draw(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (k, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = k;
        if u < acc {
            return k;
        }
    }
    last
}
