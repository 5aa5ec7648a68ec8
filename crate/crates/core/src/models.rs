//! The five one-layer, single-headed graph attention variants plus the
//! optional regression head.
//!
//! Two evaluation paths exist and are cross-checked by tests:
//! - plain functions ([`score`], [`attention`], [`update`], [`head`],
//!   [`forward`]) evaluate the closed formulas directly;
//! - [`TapeModel`] builds the same computation on an autodiff [`Tape`] for
//!   training and gradient analysis.
//!
//! Input features are scalar (`d = 1`); node representations are
//! bias-augmented as `h~ = [1, x]`.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{Tape, Tensor, Var};
use crate::graphs::Graph;
use crate::{Error, Result};

/// Default LeakyReLU negative slope (framework default the experiments
/// inherit).
pub const DEFAULT_LEAKY_SLOPE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    GatV2,
    ThetaN,
    ThetaNPlus,
    ThetaR,
    ThetaRPlus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    LeakyRelu,
    Softplus,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::GatV2,
        Variant::ThetaR,
        Variant::ThetaN,
        Variant::ThetaRPlus,
        Variant::ThetaNPlus,
    ];

    /// Scoring activation: the `+` variants replace LeakyReLU with softplus.
    pub fn activation(self) -> Activation {
        match self {
            Variant::ThetaNPlus | Variant::ThetaRPlus => Activation::Softplus,
            _ => Activation::LeakyRelu,
        }
    }

    /// Adapted variants exclude the query node from the softmax and fix its
    /// attention to 1.
    pub fn excludes_query(self) -> bool {
        !matches!(self, Variant::GatV2)
    }

    pub fn uses_theta_n(self) -> bool {
        matches!(self, Variant::ThetaN | Variant::ThetaNPlus)
    }

    /// Whether the update adds a `Theta_R h~_i` query term.
    pub fn theta_r_in_update(self) -> bool {
        matches!(self, Variant::ThetaR | Variant::ThetaRPlus)
    }

    pub fn cli_name(self) -> &'static str {
        match self {
            Variant::GatV2 => "gatv2",
            Variant::ThetaN => "gat-theta-n",
            Variant::ThetaNPlus => "gat-theta-n-plus",
            Variant::ThetaR => "gat-theta-r",
            Variant::ThetaRPlus => "gat-theta-r-plus",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gatv2" => Ok(Variant::GatV2),
            "gat-theta-n" => Ok(Variant::ThetaN),
            "gat-theta-n-plus" => Ok(Variant::ThetaNPlus),
            "gat-theta-r" => Ok(Variant::ThetaR),
            "gat-theta-r-plus" => Ok(Variant::ThetaRPlus),
            other => Err(Error::invalid(format!("unknown variant '{other}'"))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.cli_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariantConfig {
    pub variant: Variant,
    /// Input feature dimension; the experiments fix this to 1.
    pub d: usize,
    /// Latent dimension d'.
    pub d_prime: usize,
    pub leaky_slope: f64,
    /// Scoring activation; defaults to the variant's canonical choice
    /// (softplus for the `+` variants, LeakyReLU otherwise) but can be
    /// overridden for analysis.
    pub activation: Activation,
    /// Use a third transform for neighbors in the GAT-ThetaR update instead
    /// of sharing Theta_L. Off by default.
    pub separate_neighbor_transform: bool,
}

impl VariantConfig {
    pub fn new(variant: Variant, d_prime: usize) -> Self {
        VariantConfig {
            variant,
            d: 1,
            d_prime,
            leaky_slope: DEFAULT_LEAKY_SLOPE,
            activation: variant.activation(),
            separate_neighbor_transform: false,
        }
    }

    /// The feed-forward head exists only when the latent dimension differs
    /// from the task dimension.
    pub fn has_head(&self) -> bool {
        self.d_prime != self.d
    }

    fn uses_theta_j(&self) -> bool {
        self.separate_neighbor_transform && self.variant.theta_r_in_update()
    }
}

/// Learnable parameters; only the tensors the configured variant uses are
/// allocated.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Attention vector, length d'.
    pub a: Tensor,
    /// Neighbor transform, d' x (d+1).
    pub theta_l: Tensor,
    /// Query transform in the scoring function, d' x (d+1).
    pub theta_r: Tensor,
    /// Query transform in the adapted update, d' x (d+1).
    pub theta_n: Option<Tensor>,
    /// Optional separate neighbor transform in the GAT-ThetaR update.
    pub theta_j: Option<Tensor>,
    /// Update bias, length d'.
    pub b: Tensor,
    /// Head weight 1 x d' (present iff d' != d).
    pub phi_w: Option<Tensor>,
    /// Head bias, length 1.
    pub phi_b: Option<Tensor>,
}

fn glorot(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize, len: usize) -> Vec<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..len).map(|_| rng.gen_range(-limit..limit)).collect()
}

impl ModelParams {
    /// Seeded uniform Glorot-style initialization; biases start at zero.
    pub fn init(cfg: &VariantConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (dp, din) = (cfg.d_prime, cfg.d + 1);
        let mat = |rng: &mut ChaCha8Rng| {
            Tensor::matrix(dp, din, glorot(rng, din, dp, dp * din)).unwrap()
        };
        let a = Tensor::vector(glorot(&mut rng, dp, 1, dp));
        let theta_l = mat(&mut rng);
        let theta_r = mat(&mut rng);
        let theta_n = cfg.variant.uses_theta_n().then(|| mat(&mut rng));
        let theta_j = cfg.uses_theta_j().then(|| mat(&mut rng));
        let b = Tensor::vector(vec![0.0; dp]);
        let (phi_w, phi_b) = if cfg.has_head() {
            (
                Some(Tensor::matrix(cfg.d, dp, glorot(&mut rng, dp, cfg.d, cfg.d * dp)).unwrap()),
                Some(Tensor::vector(vec![0.0; cfg.d])),
            )
        } else {
            (None, None)
        };
        ModelParams { a, theta_l, theta_r, theta_n, theta_j, b, phi_w, phi_b }
    }

    /// Named tensors in the fixed flattening order.
    pub fn entries(&self) -> Vec<(&'static str, &Tensor)> {
        let mut v = vec![
            ("a", &self.a),
            ("theta_l", &self.theta_l),
            ("theta_r", &self.theta_r),
        ];
        if let Some(t) = &self.theta_n {
            v.push(("theta_n", t));
        }
        if let Some(t) = &self.theta_j {
            v.push(("theta_j", t));
        }
        v.push(("b", &self.b));
        if let Some(t) = &self.phi_w {
            v.push(("phi_w", t));
        }
        if let Some(t) = &self.phi_b {
            v.push(("phi_b", t));
        }
        v
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.entries().iter().flat_map(|(_, t)| t.values().iter().copied()).collect()
    }

    pub fn num_params(&self) -> usize {
        self.entries().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn assign_from_flat(&mut self, flat: &[f64]) {
        let mut offset = 0;
        let mut assign = |t: &mut Tensor| {
            let len = t.len();
            let shape = t.shape().to_vec();
            *t = Tensor::new(shape, flat[offset..offset + len].to_vec()).unwrap();
            offset += len;
        };
        assign(&mut self.a);
        assign(&mut self.theta_l);
        assign(&mut self.theta_r);
        if let Some(t) = &mut self.theta_n {
            assign(t);
        }
        if let Some(t) = &mut self.theta_j {
            assign(t);
        }
        assign(&mut self.b);
        if let Some(t) = &mut self.phi_w {
            assign(t);
        }
        if let Some(t) = &mut self.phi_b {
            assign(t);
        }
        debug_assert_eq!(offset, flat.len());
    }
}

/// Bias-augmented representation `[1, x]` for a scalar feature.
pub fn h_tilde(x: f64) -> [f64; 2] {
    [1.0, x]
}

fn matvec2(m: &Tensor, h: &[f64; 2]) -> Vec<f64> {
    let dp = m.shape()[0];
    let v = m.values();
    (0..dp).map(|t| v[2 * t] * h[0] + v[2 * t + 1] * h[1]).collect()
}

fn activate(cfg: &VariantConfig, x: f64) -> f64 {
    match cfg.activation {
        Activation::LeakyRelu => {
            if x >= 0.0 {
                x
            } else {
                cfg.leaky_slope * x
            }
        }
        Activation::Softplus => {
            if x > 30.0 {
                x + (-x).exp().ln_1p()
            } else {
                x.exp().ln_1p()
            }
        }
    }
}

/// Scoring function `a . act(Theta_R h~_i + Theta_L h~_j)`.
pub fn score(params: &ModelParams, cfg: &VariantConfig, x_i: f64, x_j: f64) -> f64 {
    let qi = matvec2(&params.theta_r, &h_tilde(x_i));
    let kj = matvec2(&params.theta_l, &h_tilde(x_j));
    params
        .a
        .values()
        .iter()
        .zip(qi.iter().zip(&kj))
        .map(|(&a, (&q, &k))| a * activate(cfg, q + k))
        .sum()
}

/// Softmax domain for node `i`: all of `N_i` for GATv2, `N_i \ {i}` for the
/// adapted variants (their query attention is fixed to 1 outside the
/// softmax).
pub fn attention_domain(cfg: &VariantConfig, graph: &Graph, i: usize) -> Result<Vec<usize>> {
    let ns = graph.neighbors(i);
    if ns.is_empty() {
        return Err(Error::contract(format!("node {i} has no neighbors")));
    }
    if cfg.variant.excludes_query() {
        let domain: Vec<usize> = ns.iter().copied().filter(|&j| j != i).collect();
        if domain.is_empty() {
            return Err(Error::contract(format!(
                "node {i} has no non-query neighbors for adapted variant"
            )));
        }
        Ok(domain)
    } else {
        Ok(ns.to_vec())
    }
}

/// Attention row of node `i`: the softmax domain and the normalized scores.
pub fn attention(
    params: &ModelParams,
    cfg: &VariantConfig,
    i: usize,
    graph: &Graph,
    xs: &[f64],
) -> Result<(Vec<usize>, Vec<f64>)> {
    let domain = attention_domain(cfg, graph, i)?;
    let scores: Vec<f64> = domain.iter().map(|&j| score(params, cfg, xs[i], xs[j])).collect();
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|&s| (s - max).exp()).collect();
    let denom: f64 = exps.iter().sum();
    Ok((domain, exps.into_iter().map(|e| e / denom).collect()))
}

fn neighbor_transform<'p>(params: &'p ModelParams, cfg: &VariantConfig) -> &'p Tensor {
    match &params.theta_j {
        Some(t) if cfg.uses_theta_j() => t,
        _ => &params.theta_l,
    }
}

/// Updated representation `h'_i` for the configured variant.
pub fn update(
    params: &ModelParams,
    cfg: &VariantConfig,
    i: usize,
    graph: &Graph,
    xs: &[f64],
) -> Result<Vec<f64>> {
    let (domain, alpha) = attention(params, cfg, i, graph, xs)?;
    let mut h = params.b.values().to_vec();
    let tn = neighbor_transform(params, cfg);
    for (&j, &a) in domain.iter().zip(&alpha) {
        for (hv, m) in h.iter_mut().zip(matvec2(tn, &h_tilde(xs[j]))) {
            *hv += a * m;
        }
    }
    if cfg.variant.uses_theta_n() {
        let q = matvec2(params.theta_n.as_ref().unwrap(), &h_tilde(xs[i]));
        for (hv, m) in h.iter_mut().zip(q) {
            *hv += m;
        }
    } else if cfg.variant.theta_r_in_update() {
        let q = matvec2(&params.theta_r, &h_tilde(xs[i]));
        for (hv, m) in h.iter_mut().zip(q) {
            *hv += m;
        }
    }
    Ok(h)
}

/// Regression head: identity when d' == d, otherwise
/// `W_phi . leaky_relu(h') + b_phi`.
pub fn head(params: &ModelParams, cfg: &VariantConfig, h_prime: &[f64]) -> f64 {
    if !cfg.has_head() {
        return h_prime[0];
    }
    let w = params.phi_w.as_ref().unwrap().values();
    let b = params.phi_b.as_ref().unwrap().values()[0];
    let s = cfg.leaky_slope;
    h_prime
        .iter()
        .zip(w)
        .map(|(&h, &w)| w * if h >= 0.0 { h } else { s * h })
        .sum::<f64>()
        + b
}

#[derive(Debug, Clone)]
pub struct ForwardOutput {
    /// Per-node scalar predictions.
    pub predictions: Vec<f64>,
    /// Per-node attention rows as (domain, alpha) pairs.
    pub attention: Vec<(Vec<usize>, Vec<f64>)>,
}

/// Apply the configured variant to every node of the graph.
pub fn forward(
    params: &ModelParams,
    cfg: &VariantConfig,
    graph: &Graph,
    xs: &[f64],
) -> Result<ForwardOutput> {
    let n = graph.node_count();
    let mut predictions = Vec::with_capacity(n);
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let h = update(params, cfg, i, graph, xs)?;
        predictions.push(head(params, cfg, &h));
        rows.push(attention(params, cfg, i, graph, xs)?);
    }
    Ok(ForwardOutput { predictions, attention: rows })
}

// ---------------------------------------------------------------------------
// Tape construction for training and gradient analysis
// ---------------------------------------------------------------------------

/// The model for one query node, built once on a [`Tape`] and re-used across
/// samples by rebinding leaves and replaying.
pub struct TapeModel {
    pub tape: Tape,
    /// Parameter leaf vars in [`ModelParams::entries`] order, with lengths.
    param_vars: Vec<(&'static str, Var, usize)>,
    /// Bias-augmented feature leaves, one per node.
    x_vars: Vec<Var>,
    y_var: Var,
    pub h_prime: Var,
    pub pred: Var,
    pub loss_abs: Var,
    pub loss_signed: Var,
    /// Softmax node for the query node's attention row.
    pub attention: Var,
    attention_domain: Vec<usize>,
    num_params: usize,
}

impl TapeModel {
    /// Build the forward graph for query node `node`.
    pub fn build(
        params: &ModelParams,
        cfg: &VariantConfig,
        graph: &Graph,
        node: usize,
    ) -> Result<Self> {
        let mut tape = Tape::new();

        let entries = params.entries();
        let param_vars: Vec<(&'static str, Var, usize)> = entries
            .iter()
            .map(|(name, t)| (*name, tape.leaf((*t).clone()), t.len()))
            .collect();
        let by_name = |name: &str| {
            param_vars
                .iter()
                .find(|(n, _, _)| *n == name)
                .map(|&(_, v, _)| v)
        };
        let a = by_name("a").unwrap();
        let theta_l = by_name("theta_l").unwrap();
        let theta_r = by_name("theta_r").unwrap();
        let theta_n = by_name("theta_n");
        let theta_j = by_name("theta_j");
        let b = by_name("b").unwrap();
        let phi_w = by_name("phi_w");
        let phi_b = by_name("phi_b");

        let n = graph.node_count();
        let x_vars: Vec<Var> = (0..n)
            .map(|_| tape.leaf(Tensor::vector(vec![1.0, 0.0])))
            .collect();
        let y_var = tape.leaf_scalar(0.0);

        let domain = attention_domain(cfg, graph, node)?;
        let query_proj = tape.matvec(theta_r, x_vars[node])?;
        let mut scores = Vec::with_capacity(domain.len());
        for &j in &domain {
            let key_proj = tape.matvec(theta_l, x_vars[j])?;
            let pre = tape.add(query_proj, key_proj)?;
            let act = match cfg.activation {
                Activation::LeakyRelu => tape.leaky_relu(pre, cfg.leaky_slope),
                Activation::Softplus => tape.softplus(pre),
            };
            scores.push(tape.dot(a, act)?);
        }
        let attention = tape.softmax_set(scores)?;

        let update_transform = match theta_j {
            Some(t) if cfg.uses_theta_j() => t,
            _ => theta_l,
        };
        let msgs: Vec<Var> = domain
            .iter()
            .map(|&j| tape.matvec(update_transform, x_vars[j]))
            .collect::<Result<_>>()?;
        let agg = tape.weighted_sum(attention, msgs)?;
        let mut h_prime = tape.add(b, agg)?;
        if cfg.variant.uses_theta_n() {
            let q = tape.matvec(theta_n.unwrap(), x_vars[node])?;
            h_prime = tape.add(h_prime, q)?;
        } else if cfg.variant.theta_r_in_update() {
            let q = tape.matvec(theta_r, x_vars[node])?;
            h_prime = tape.add(h_prime, q)?;
        }

        let pred = if cfg.has_head() {
            let act = tape.leaky_relu(h_prime, cfg.leaky_slope);
            let lin = tape.matvec(phi_w.unwrap(), act)?;
            let with_bias = tape.add(lin, phi_b.unwrap())?;
            tape.sum(with_bias)
        } else {
            tape.sum(h_prime)
        };

        let loss_signed = tape.sub(pred, y_var)?;
        let loss_abs = tape.abs(loss_signed);

        let num_params = params.num_params();
        Ok(TapeModel {
            tape,
            param_vars,
            x_vars,
            y_var,
            h_prime,
            pred,
            loss_abs,
            loss_signed,
            attention,
            attention_domain: domain,
            num_params,
        })
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn attention_domain(&self) -> &[usize] {
        &self.attention_domain
    }

    /// Rebind parameter leaves from a flattened vector.
    pub fn set_params(&mut self, flat: &[f64]) {
        let mut offset = 0;
        for &(_, var, len) in &self.param_vars.clone() {
            self.tape.set_leaf(var, &flat[offset..offset + len]);
            offset += len;
        }
        debug_assert_eq!(offset, flat.len());
    }

    /// Adjoint of a named parameter after a backward pass.
    pub fn param_adjoint(&self, name: &str) -> Option<&[f64]> {
        self.param_vars
            .iter()
            .find(|(n, _, _)| *n == name)
            .map(|&(_, v, _)| self.tape.adjoint(v).values())
    }

    /// Rebind the sample and recompute every cached value.
    pub fn bind_and_run(&mut self, xs: &[f64], y: f64) {
        for (k, &v) in self.x_vars.clone().iter().enumerate() {
            self.tape.set_leaf(v, &[1.0, xs[k]]);
        }
        let yv = self.y_var;
        self.tape.set_leaf(yv, &[y]);
        self.tape.replay();
    }

    /// Recompute values only (after [`TapeModel::set_params`]).
    pub fn replay(&mut self) {
        self.tape.replay();
    }

    pub fn pred_value(&self) -> f64 {
        self.tape.value(self.pred).item()
    }

    pub fn loss_abs_value(&self) -> f64 {
        self.tape.value(self.loss_abs).item()
    }

    pub fn attention_row(&self) -> Vec<f64> {
        self.tape.value(self.attention).values().to_vec()
    }

    /// Backward from `root` and accumulate flattened parameter adjoints into
    /// `out`, scaled by `scale`.
    pub fn accumulate_param_grads(&mut self, root: Var, out: &mut [f64], scale: f64) -> Result<()> {
        self.tape.backward(root)?;
        let mut offset = 0;
        for &(_, var, len) in &self.param_vars {
            for (o, g) in out[offset..offset + len]
                .iter_mut()
                .zip(self.tape.adjoint(var).values())
            {
                *o += scale * g;
            }
            offset += len;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Checkpoint I/O
// ---------------------------------------------------------------------------

/// Write parameters as `name=comma-separated-values` lines behind a header
/// recording variant, dimensions, slope and seed.
pub fn save_checkpoint(
    path: &Path,
    cfg: &VariantConfig,
    seed: u64,
    params: &ModelParams,
) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "variant={},d={},dprime={},slope={:.16e},seed={}",
        cfg.variant, cfg.d, cfg.d_prime, cfg.leaky_slope, seed
    );
    for (name, t) in params.entries() {
        let vals: Vec<String> = t.values().iter().map(|v| format!("{v:.16e}")).collect();
        let _ = writeln!(out, "{name}={}", vals.join(","));
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(VariantConfig, u64, ModelParams)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Parse { line: 1, msg: "empty checkpoint".into() })?;

    let mut variant = None;
    let mut d = None;
    let mut d_prime = None;
    let mut slope = None;
    let mut seed = None;
    for field in header.split(',') {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| Error::Parse { line: 1, msg: format!("bad header field '{field}'") })?;
        let perr = |msg: String| Error::Parse { line: 1, msg };
        match k {
            "variant" => variant = Some(v.parse::<Variant>()?),
            "d" => d = Some(v.parse::<usize>().map_err(|e| perr(e.to_string()))?),
            "dprime" => d_prime = Some(v.parse::<usize>().map_err(|e| perr(e.to_string()))?),
            "slope" => slope = Some(v.parse::<f64>().map_err(|e| perr(e.to_string()))?),
            "seed" => seed = Some(v.parse::<u64>().map_err(|e| perr(e.to_string()))?),
            other => return Err(perr(format!("unknown header key '{other}'"))),
        }
    }
    let missing = |name: &str| Error::Parse { line: 1, msg: format!("missing header key '{name}'") };
    let variant = variant.ok_or_else(|| missing("variant"))?;
    let cfg = VariantConfig {
        variant,
        d: d.ok_or_else(|| missing("d"))?,
        d_prime: d_prime.ok_or_else(|| missing("dprime"))?,
        leaky_slope: slope.ok_or_else(|| missing("slope"))?,
        activation: variant.activation(),
        separate_neighbor_transform: false,
    };
    let seed = seed.ok_or_else(|| missing("seed"))?;

    let mut params = ModelParams::init(&cfg, seed);
    let mut seen = std::collections::BTreeMap::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let (name, vals) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse { line: lineno, msg: "missing '='".into() })?;
        let values: Vec<f64> = vals
            .split(',')
            .map(|v| v.parse::<f64>().map_err(|e| Error::Parse { line: lineno, msg: e.to_string() }))
            .collect::<Result<_>>()?;
        seen.insert(name.to_string(), values);
    }
    // `separate_neighbor_transform` round-trips via presence of theta_j
    if seen.contains_key("theta_j") {
        let mut cfg2 = cfg;
        cfg2.separate_neighbor_transform = true;
        params = ModelParams::init(&cfg2, seed);
    }
    let mut flat = Vec::with_capacity(params.num_params());
    for (name, t) in params.entries() {
        let vals = seen
            .get(name)
            .ok_or_else(|| Error::Parse { line: 1, msg: format!("missing tensor '{name}'") })?;
        if vals.len() != t.len() {
            return Err(Error::Parse {
                line: 1,
                msg: format!("tensor '{name}' has {} values, expected {}", vals.len(), t.len()),
            });
        }
        flat.extend_from_slice(vals);
    }
    params.assign_from_flat(&flat);
    let cfg = VariantConfig {
        separate_neighbor_transform: params.theta_j.is_some(),
        ..cfg
    };
    Ok((cfg, seed, params))
}

/// The hand-constructed GAT-ThetaN parameterization that solves the
/// strictly-monotonic relevance task exactly: `Theta_n = [[0, -1]]`,
/// `Theta_L = [[0, 1]]`, zero bias, with the scoring scaled so attention
/// concentrates on the most relevant neighbor.
pub fn analytic_theta_n_solution(score_scale: f64) -> ModelParams {
    ModelParams {
        a: Tensor::vector(vec![score_scale]),
        theta_l: Tensor::matrix(1, 2, vec![0.0, 1.0]).unwrap(),
        theta_r: Tensor::matrix(1, 2, vec![0.0, 0.0]).unwrap(),
        theta_n: Some(Tensor::matrix(1, 2, vec![0.0, -1.0]).unwrap()),
        theta_j: None,
        b: Tensor::vector(vec![0.0]),
        phi_w: None,
        phi_b: None,
    }
}
