//! Closed-form gradient of the query transform for the one-layer GATv2
//! (d = 1), the zero-gradient sign-condition analyzer, and the
//! finite-difference oracle that cross-checks both the analytic formula and
//! the autodiff engine.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graphs::{star_graph, Graph};
use crate::models::{
    attention, attention_domain, h_tilde, Activation, ModelParams, TapeModel, Variant,
    VariantConfig,
};
use crate::{Error, Result};

/// Denominator floor for relative errors near zero gradients.
pub const REL_ERR_FLOOR: f64 = 1e-8;

/// Relative error with denominator `max(|a|, |b|, floor)`.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_ERR_FLOOR)
}

fn theta_product(theta: &crate::autodiff::Tensor, x: f64) -> Vec<f64> {
    let dp = theta.shape()[0];
    let h = h_tilde(x);
    (0..dp)
        .map(|t| theta.values()[2 * t] * h[0] + theta.values()[2 * t + 1] * h[1])
        .collect()
}

/// Closed-form scoring-path gradient of `Theta_R` for node `i` of the
/// one-layer GATv2 with LeakyReLU and scalar features.
///
/// `upstream` is the loss derivative w.r.t. each component of `h'_i`; when it
/// is uniform this reduces to the scalar-upstream form with
/// `A_q = sum_t (Theta_L h~_q)^t`. Returns per-component `(weight, bias)`
/// gradient columns. Nodes with fewer than two neighbors have an empty pair
/// set and contribute zero.
pub fn analytic_grad_theta_r(
    params: &ModelParams,
    cfg: &VariantConfig,
    i: usize,
    graph: &Graph,
    xs: &[f64],
    upstream: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if cfg.d != 1 {
        return Err(Error::contract("analytic gradient is derived for d = 1 only"));
    }
    if cfg.variant != Variant::GatV2 {
        return Err(Error::contract("analytic gradient applies to the GATv2 variant"));
    }
    if cfg.activation != Activation::LeakyRelu {
        return Err(Error::contract("analytic gradient assumes LeakyReLU scoring"));
    }
    let dp = cfg.d_prime;
    let (domain, alpha) = attention(params, cfg, i, graph, xs)?;
    let mut weight = vec![0.0; dp];
    let mut bias = vec![0.0; dp];
    if domain.len() < 2 {
        return Ok((weight, bias));
    }

    let query = theta_product(&params.theta_r, xs[i]);
    // per neighbor: pre-activations x_ij^t, LeakyReLU derivative s_ij^t, and
    // the upstream-weighted neighbor projection A~_j
    let mut slopes = Vec::with_capacity(domain.len());
    let mut a_weighted = Vec::with_capacity(domain.len());
    for &j in &domain {
        let key = theta_product(&params.theta_l, xs[j]);
        let s: Vec<f64> = (0..dp)
            .map(|t| {
                // derivative at 0 follows the positive branch
                if query[t] + key[t] >= 0.0 {
                    1.0
                } else {
                    cfg.leaky_slope
                }
            })
            .collect();
        slopes.push(s);
        a_weighted.push(
            key.iter()
                .zip(upstream)
                .map(|(&k, &u)| u * k)
                .sum::<f64>(),
        );
    }

    for t in 0..dp {
        let mut pair_sum = 0.0;
        for j in 0..domain.len() {
            for k in (j + 1)..domain.len() {
                pair_sum += alpha[j]
                    * alpha[k]
                    * (a_weighted[j] - a_weighted[k])
                    * (slopes[j][t] - slopes[k][t]);
            }
        }
        bias[t] = params.a.values()[t] * pair_sum;
        weight[t] = xs[i] * bias[t];
    }
    Ok((weight, bias))
}

/// Shared-weight sum of the per-node scoring-path gradients over the whole
/// graph; `upstreams[i]` is the loss derivative w.r.t. `h'_i`.
pub fn analytic_grad_theta_r_total(
    params: &ModelParams,
    cfg: &VariantConfig,
    graph: &Graph,
    xs: &[f64],
    upstreams: &[Vec<f64>],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let dp = cfg.d_prime;
    let mut weight = vec![0.0; dp];
    let mut bias = vec![0.0; dp];
    for i in 0..graph.node_count() {
        let (w, b) = analytic_grad_theta_r(params, cfg, i, graph, xs, &upstreams[i])?;
        for t in 0..dp {
            weight[t] += w[t];
            bias[t] += b[t];
        }
    }
    Ok((weight, bias))
}

/// Per-instance zero-gradient prediction from the sign condition: a
/// component `t` of node `i`'s scoring-path gradient is predicted zero when
/// every neighbor pair shares the sign of the pre-activation `x_ij^t`.
#[derive(Debug, Clone)]
pub struct SignReport {
    /// `dead[i][t]` = predicted-zero flag for node `i`, component `t`.
    pub dead: Vec<Vec<bool>>,
    /// Fraction of (node, component) entries predicted dead.
    pub fraction_dead: f64,
}

/// Analyze the sign condition for every node and latent component.
/// `sign(0)` is treated as positive, matching the LeakyReLU-at-0 convention.
pub fn sign_condition(
    params: &ModelParams,
    cfg: &VariantConfig,
    graph: &Graph,
    xs: &[f64],
) -> Result<SignReport> {
    let dp = cfg.d_prime;
    let n = graph.node_count();
    let mut dead = Vec::with_capacity(n);
    let mut dead_count = 0usize;
    for i in 0..n {
        let domain = attention_domain(cfg, graph, i)?;
        let query = theta_product(&params.theta_r, xs[i]);
        let pre: Vec<Vec<f64>> = domain
            .iter()
            .map(|&j| {
                let key = theta_product(&params.theta_l, xs[j]);
                (0..dp).map(|t| query[t] + key[t]).collect()
            })
            .collect();
        let mut row = Vec::with_capacity(dp);
        for t in 0..dp {
            let positive = |x: f64| x >= 0.0;
            let all_same = domain.len() < 2
                || pre.iter().all(|p| positive(p[t])) || pre.iter().all(|p| !positive(p[t]));
            if all_same {
                dead_count += 1;
            }
            row.push(all_same);
        }
        dead.push(row);
    }
    let fraction_dead = dead_count as f64 / (n * dp) as f64;
    Ok(SignReport { dead, fraction_dead })
}

/// Central finite differences of `f` at `x`.
pub fn finite_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<f64> {
    let mut grad = Vec::with_capacity(x.len());
    let mut buf = x.to_vec();
    for k in 0..x.len() {
        let orig = buf[k];
        buf[k] = orig + step;
        let fp = f(&buf);
        buf[k] = orig - step;
        let fm = f(&buf);
        buf[k] = orig;
        grad.push((fp - fm) / (2.0 * step));
    }
    grad
}

/// One three-way gradient comparison: analytic formula vs autodiff vs
/// central finite differences, for the full `Theta_R` gradient of the loss
/// `L = sum_t h'_0^t` on a random GATv2 instance.
#[derive(Debug, Clone)]
pub struct GradCheckTrial {
    pub d_prime: usize,
    pub analytic: Vec<f64>,
    pub autodiff: Vec<f64>,
    pub finite_diff: Vec<f64>,
    pub max_rel_err: f64,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub trials: Vec<GradCheckTrial>,
    pub max_rel_err: f64,
}

/// Run `trials` randomized three-way comparisons on a 3-node star with
/// d' cycling through {1, 2, 4}. The loss is the component sum of the
/// central node's updated representation, so the uniform-upstream form of
/// the analytic gradient applies directly.
pub fn run_grad_check(trials: usize, seed: u64) -> Result<GradCheckReport> {
    let graph = star_graph(3)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dp_choices = [1usize, 2, 4];
    let mut out = Vec::with_capacity(trials);
    let mut overall: f64 = 0.0;

    for trial in 0..trials {
        let dp = dp_choices[trial % dp_choices.len()];
        let cfg = VariantConfig::new(Variant::GatV2, dp);
        let upstream = vec![1.0; dp];

        // Resample until the instance is informative for central differences:
        // no scoring pre-activation within 1e-3 of the LeakyReLU kink (a step
        // of 1e-5 must stay on one branch of the case split) and no gradient
        // component below 1e-4 in magnitude (a dead component's true gradient
        // is exactly zero, so finite differences only measure rounding noise
        // there and the relative error against the 1e-8 floor is meaningless).
        let (params, xs, analytic) = loop {
            let params = ModelParams::init(&cfg, rng.gen());
            let xs: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.5..1.5)).collect();

            let query = theta_product(&params.theta_r, xs[0]);
            let mut margin = f64::INFINITY;
            for j in 0..3 {
                let key = theta_product(&params.theta_l, xs[j]);
                for t in 0..dp {
                    margin = margin.min((query[t] + key[t]).abs());
                }
            }
            if margin < 1e-3 {
                continue;
            }

            // route 1: closed-form formula (weight and bias interleaved per
            // row of Theta_R, matching the tensor layout [b, w] per component)
            let (w, b) = analytic_grad_theta_r(&params, &cfg, 0, &graph, &xs, &upstream)?;
            let analytic: Vec<f64> = (0..dp).flat_map(|t| [b[t], w[t]]).collect();
            if analytic.iter().any(|g| g.abs() < 1e-4) {
                continue;
            }
            break (params, xs, analytic);
        };

        // route 2: reverse-mode autodiff
        let mut tm = TapeModel::build(&params, &cfg, &graph, 0)?;
        let root = tm.tape.sum(tm.h_prime);
        tm.bind_and_run(&xs, 0.0);
        tm.tape.backward(root)?;
        let autodiff = tm.param_adjoint("theta_r").unwrap().to_vec();

        // route 3: central finite differences through the plain evaluator
        let base_flat = params.flatten();
        let tr_offset = params.a.len() + params.theta_l.len();
        let tr_len = params.theta_r.len();
        let f = |tr: &[f64]| {
            let mut p = params.clone();
            let mut flat = base_flat.clone();
            flat[tr_offset..tr_offset + tr_len].copy_from_slice(tr);
            p.assign_from_flat(&flat);
            crate::models::update(&p, &cfg, 0, &graph, &xs)
                .unwrap()
                .iter()
                .sum()
        };
        let fd = finite_diff(f, &base_flat[tr_offset..tr_offset + tr_len], 1e-5);

        let mut max_rel: f64 = 0.0;
        for k in 0..tr_len {
            max_rel = max_rel
                .max(rel_err(analytic[k], autodiff[k]))
                .max(rel_err(analytic[k], fd[k]))
                .max(rel_err(autodiff[k], fd[k]));
        }
        overall = overall.max(max_rel);
        out.push(GradCheckTrial {
            d_prime: dp,
            analytic,
            autodiff,
            finite_diff: fd,
            max_rel_err: max_rel,
        });
    }
    Ok(GradCheckReport { trials: out, max_rel_err: overall })
}

/// Per-epoch gradient health record appended by the training audit hook.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditRecord {
    pub epoch: usize,
    /// Sign-condition deadness fraction on a probe sample.
    pub fraction_dead: f64,
    /// L2 norm of the epoch's first Theta_R minibatch gradient.
    pub theta_r_grad_norm: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;

    fn all_positive_instance() -> (ModelParams, VariantConfig, Graph, Vec<f64>) {
        let cfg = VariantConfig::new(Variant::GatV2, 2);
        let params = ModelParams {
            a: Tensor::vector(vec![0.8, 0.6]),
            theta_l: Tensor::matrix(2, 2, vec![0.5, 0.3, 0.4, 0.2]).unwrap(),
            theta_r: Tensor::matrix(2, 2, vec![0.6, 0.1, 0.3, 0.4]).unwrap(),
            theta_n: None,
            theta_j: None,
            b: Tensor::vector(vec![0.0, 0.0]),
            phi_w: Some(Tensor::matrix(1, 2, vec![1.0, 1.0]).unwrap()),
            phi_b: Some(Tensor::vector(vec![0.0])),
        };
        let graph = star_graph(3).unwrap();
        let xs = vec![0.2, 0.7, 1.1];
        (params, cfg, graph, xs)
    }

    #[test]
    fn quadratic_finite_diff() {
        let g = finite_diff(|x| 0.5 * x[0] * x[0], &[3.0], 1e-5);
        assert!((g[0] - 3.0).abs() < 1e-8);
    }

    #[test]
    fn finite_diff_accuracy_improves_as_step_shrinks() {
        // d/dx softplus at 0.3, smooth target so truncation error dominates
        let truth = 1.0 / (1.0 + (-0.3f64).exp());
        let f = |x: &[f64]| x[0].exp().ln_1p();
        let mut prev = f64::INFINITY;
        for step in [1e-1, 1e-2, 1e-3, 1e-4, 1e-5] {
            let err = (finite_diff(f, &[0.3], step)[0] - truth).abs();
            assert!(err < prev, "step {step}: err {err} not below {prev}");
            prev = err;
        }
    }

    #[test]
    fn weight_grad_is_feature_times_bias_grad() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let graph = star_graph(3).unwrap();
        for _ in 0..50 {
            let dp = [1, 2, 4][rng.gen_range(0..3)];
            let cfg = VariantConfig::new(Variant::GatV2, dp);
            let params = ModelParams::init(&cfg, rng.gen());
            let xs: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let upstream: Vec<f64> = (0..dp).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (w, b) = analytic_grad_theta_r(&params, &cfg, 0, &graph, &xs, &upstream).unwrap();
            for t in 0..dp {
                assert!((w[t] - xs[0] * b[t]).abs() <= 1e-12 * b[t].abs().max(1.0));
            }
        }
    }

    #[test]
    fn all_positive_preactivations_give_zero_analytic_gradient() {
        let (params, cfg, graph, xs) = all_positive_instance();
        let (w, b) = analytic_grad_theta_r(&params, &cfg, 0, &graph, &xs, &[1.0, 1.0]).unwrap();
        assert!(w.iter().chain(&b).all(|&g| g.abs() <= 1e-15));
        let report = sign_condition(&params, &cfg, &graph, &xs).unwrap();
        assert_eq!(report.fraction_dead, 1.0);
    }

    #[test]
    fn sign_condition_soundness_against_autodiff() {
        // predicted dead => autodiff scoring-path gradient component is ~0
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let graph = star_graph(3).unwrap();
        let mut saw_dead = 0;
        let mut saw_alive = 0;
        for _ in 0..200 {
            let dp = [1, 2][rng.gen_range(0..2)];
            let cfg = VariantConfig::new(Variant::GatV2, dp);
            let params = ModelParams::init(&cfg, rng.gen());
            let xs: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let report = sign_condition(&params, &cfg, &graph, &xs).unwrap();

            let mut tm = TapeModel::build(&params, &cfg, &graph, 0).unwrap();
            let root = tm.tape.sum(tm.h_prime);
            tm.bind_and_run(&xs, 0.0);
            tm.tape.backward(root).unwrap();
            let grad = tm.param_adjoint("theta_r").unwrap();
            for t in 0..dp {
                if report.dead[0][t] {
                    saw_dead += 1;
                    assert!(grad[2 * t].abs() <= 1e-12, "dead bias comp {t} has grad {}", grad[2 * t]);
                    assert!(grad[2 * t + 1].abs() <= 1e-12);
                } else {
                    saw_alive += 1;
                }
            }
        }
        assert!(saw_dead > 10 && saw_alive > 10, "dead={saw_dead} alive={saw_alive}");
    }

    #[test]
    fn mixed_sign_pair_component_is_alive() {
        let (mut params, cfg, graph, xs) = all_positive_instance();
        // pull the query projection down so the neighbors' pre-activations
        // (0.56, 0.71, 0.83 in component 0) straddle zero
        params.theta_r = Tensor::matrix(2, 2, vec![-0.75, 0.0, 0.3, 0.4]).unwrap();
        let report = sign_condition(&params, &cfg, &graph, &xs).unwrap();
        assert!(!report.dead[0][0]);

        let mut tm = TapeModel::build(&params, &cfg, &graph, 0).unwrap();
        let root = tm.tape.sum(tm.h_prime);
        tm.bind_and_run(&xs, 0.0);
        tm.tape.backward(root).unwrap();
        let grad = tm.param_adjoint("theta_r").unwrap();
        assert!(grad[0].abs() > 1e-8, "alive component has grad {}", grad[0]);
    }

    #[test]
    fn single_neighbor_nodes_are_all_dead() {
        // a path graph where every node has exactly one in-neighbor
        let g = crate::graphs::Graph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let cfg = VariantConfig::new(Variant::GatV2, 2);
        let params = ModelParams::init(&cfg, 3);
        let report = sign_condition(&params, &cfg, &g, &[0.1, 0.5, 0.9]).unwrap();
        assert_eq!(report.fraction_dead, 1.0);
    }

    #[test]
    fn softplus_replacement_revives_gradient() {
        let (params, cfg, graph, xs) = all_positive_instance();
        // LeakyReLU: dead by the sign condition
        let mut tm = TapeModel::build(&params, &cfg, &graph, 0).unwrap();
        let root = tm.tape.sum(tm.h_prime);
        tm.bind_and_run(&xs, 0.0);
        tm.tape.backward(root).unwrap();
        let norm: f64 = tm
            .param_adjoint("theta_r")
            .unwrap()
            .iter()
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt();
        assert!(norm <= 1e-12);

        // same instance, softplus in the scoring function: gradient is alive
        let cfg_sp = VariantConfig { activation: Activation::Softplus, ..cfg };
        let mut tm = TapeModel::build(&params, &cfg_sp, &graph, 0).unwrap();
        let root = tm.tape.sum(tm.h_prime);
        tm.bind_and_run(&xs, 0.0);
        tm.tape.backward(root).unwrap();
        let grad = tm.param_adjoint("theta_r").unwrap();
        let norm: f64 = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        assert!(norm >= 1e-8, "softplus gradient norm {norm}");
    }

    #[test]
    fn three_way_agreement_small() {
        let report = run_grad_check(30, 2).unwrap();
        assert!(report.max_rel_err <= 1e-4, "max rel err {}", report.max_rel_err);
    }

    #[test]
    fn shared_weight_sum_over_star_equals_central_contribution() {
        // peripheral star nodes have one neighbor and contribute nothing
        let graph = star_graph(3).unwrap();
        let cfg = VariantConfig::new(Variant::GatV2, 2);
        let params = ModelParams::init(&cfg, 8);
        let xs = vec![0.4, -0.3, 1.0];
        let ups = vec![vec![1.0, 1.0]; 3];
        let total = analytic_grad_theta_r_total(&params, &cfg, &graph, &xs, &ups).unwrap();
        let central = analytic_grad_theta_r(&params, &cfg, 0, &graph, &xs, &ups[0]).unwrap();
        assert_eq!(total, central);
    }
}
