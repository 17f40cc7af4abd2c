//! Verification suites: fixed-seed statistical and deterministic checks
//! over the sampler moments, the estimator identities, the projections,
//! and the queue simulator. Each check reports its identity, target,
//! estimate, and margin; a suite passes only if every check passes.

use std::io;

use qgsf_core::environments::{QueueNetwork, QueueNetworkConfig, SimReplica, SimSystem};
use qgsf_core::estimators::{grad_increment, hess_increment};
use qgsf_core::linalg::{norm, Matrix};
use qgsf_core::projections::{newton_direction, project_pd, BoxConstraint, PdProjectionPolicy};
use qgsf_core::qgaussian::QGaussianSpec;
use qgsf_core::stats::RunningMoments;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Which property suite to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    /// Moment identities of the perturbation distribution.
    Moments,
    /// Unbiasedness of the gradient/Hessian estimators on a quadratic.
    Estimators,
    /// Idempotence, eigenvalue floors, and solve quality of the projections.
    Projections,
    /// Long-run rates and conservation laws of the queue simulator.
    Queue,
}

/// One verified identity: `estimate` must land within `margin` of `target`
/// (two-sided unless the label says otherwise; `pass` is authoritative).
#[derive(Clone, Debug)]
pub struct CheckLine {
    pub label: String,
    pub target: f64,
    pub estimate: f64,
    pub margin: f64,
    pub pass: bool,
}

impl CheckLine {
    fn two_sided(label: String, target: f64, estimate: f64, margin: f64) -> CheckLine {
        let pass = (estimate - target).abs() <= margin;
        CheckLine {
            label,
            target,
            estimate,
            margin,
            pass,
        }
    }

    fn at_least(label: String, target: f64, estimate: f64, margin: f64) -> CheckLine {
        let pass = estimate >= target - margin;
        CheckLine {
            label,
            target,
            estimate,
            margin,
            pass,
        }
    }
}

/// Run a suite with its fixed seeds and sample sizes.
pub fn run_suite(suite: Suite) -> Vec<CheckLine> {
    match suite {
        Suite::Moments => moments_suite(),
        Suite::Estimators => estimators_suite(),
        Suite::Projections => projections_suite(),
        Suite::Queue => queue_suite(),
    }
}

/// Render one line per check plus a summary; returns overall pass.
pub fn render<W: io::Write>(lines: &[CheckLine], mut out: W) -> io::Result<bool> {
    let mut all_pass = true;
    for line in lines {
        all_pass &= line.pass;
        writeln!(
            out,
            "{}: target {:.6e} estimate {:.6e} margin {:.3e} -> {}",
            line.label,
            line.target,
            line.estimate,
            line.margin,
            if line.pass { "pass" } else { "FAIL" }
        )?;
    }
    writeln!(
        out,
        "{} checks, {} failed",
        lines.len(),
        lines.iter().filter(|l| !l.pass).count()
    )?;
    Ok(all_pass)
}

fn se_line(label: String, target: f64, stat: &RunningMoments) -> CheckLine {
    CheckLine::two_sided(label, target, stat.mean(), 5.0 * stat.standard_error())
}

fn moments_suite() -> Vec<CheckLine> {
    let mut lines = Vec::new();
    let samples = 1_000_000;
    for (seed, (dim, q)) in [(1usize, 0.5), (3, 0.5), (5, 1.2), (20, 1.05)]
        .into_iter()
        .enumerate()
    {
        let spec = QGaussianSpec::new(dim, q, 0.1).expect("combo is admissible");
        let targets = spec.moment_identity_targets().expect("q > 0");
        let mut inv_rho = RunningMoments::new();
        let mut sq_over_rho = RunningMoments::new();
        let mut sq_over_rho_sq = RunningMoments::new();
        let mut quartic_over_rho_sq = RunningMoments::new();
        let mut cross_over_rho_sq = RunningMoments::new();
        let mut rng = ChaCha8Rng::seed_from_u64(9000 + seed as u64);
        for _ in 0..samples {
            let p = spec.sample(&mut rng);
            let e0 = p.eta[0];
            inv_rho.push(1.0 / p.rho);
            sq_over_rho.push(e0 * e0 / p.rho);
            sq_over_rho_sq.push(e0 * e0 / (p.rho * p.rho));
            quartic_over_rho_sq.push(e0 * e0 * e0 * e0 / (p.rho * p.rho));
            if dim > 1 {
                let e1 = p.eta[1];
                cross_over_rho_sq.push(e0 * e0 * e1 * e1 / (p.rho * p.rho));
            }
        }
        let tag = format!("moments N={dim} q={q}");
        lines.push(se_line(
            format!("{tag} E[1/rho]"),
            targets.inv_rho,
            &inv_rho,
        ));
        lines.push(se_line(
            format!("{tag} E[eta_i^2/rho]"),
            targets.inv_rho,
            &sq_over_rho,
        ));
        lines.push(se_line(
            format!("{tag} E[eta_i^2/rho^2]"),
            targets.coord_sq_over_rho_sq,
            &sq_over_rho_sq,
        ));
        lines.push(se_line(
            format!("{tag} E[eta_i^4/rho^2]"),
            targets.coord_quartic_over_rho_sq,
            &quartic_over_rho_sq,
        ));
        if dim > 1 {
            lines.push(se_line(
                format!("{tag} E[eta_i^2 eta_j^2/rho^2]"),
                targets.cross_sq_over_rho_sq,
                &cross_over_rho_sq,
            ));
        }
    }
    lines
}

fn estimators_suite() -> Vec<CheckLine> {
    // J(theta) = (theta - center)' A (theta - center) at a fixed offset:
    // gradient increments average to 2A(theta - center), Hessian increments
    // to 2A, entry by entry.
    let dim = 3;
    let a = Matrix::from_flat(dim, [2.0, 0.4, -0.3, 0.4, 1.5, 0.2, -0.3, 0.2, 1.0]);
    let offset = [0.4, -0.2, 0.3];
    let grad_target: Vec<f64> = a.matvec(&offset).iter().map(|v| 2.0 * v).collect();
    let objective = |x: &[f64]| {
        let ax = a.matvec(x);
        x.iter().zip(&ax).map(|(u, v)| u * v).sum::<f64>()
    };

    let mut lines = Vec::new();
    let samples = 200_000;
    for (i, q) in [0.5, 1.0, 1.05].into_iter().enumerate() {
        let beta = 0.1;
        let spec = QGaussianSpec::new(dim, q, beta).expect("combo is admissible");
        let mut rng = ChaCha8Rng::seed_from_u64(9100 + i as u64);
        let mut grad_stats = vec![RunningMoments::new(); dim];
        let mut hess_stats = vec![RunningMoments::new(); dim * dim];
        let mut plus = vec![0.0; dim];
        let mut minus = vec![0.0; dim];
        for _ in 0..samples {
            let p = spec.sample(&mut rng);
            for k in 0..dim {
                plus[k] = offset[k] + beta * p.eta[k];
                minus[k] = offset[k] - beta * p.eta[k];
            }
            let cost_plus = objective(&plus);
            let cost_minus = objective(&minus);
            let g = grad_increment(&spec, &p, cost_plus, cost_minus).expect("rho > 0");
            let h = hess_increment(&spec, &p, cost_plus, cost_minus).expect("rho > 0");
            for k in 0..dim {
                grad_stats[k].push(g[k]);
                for l in 0..dim {
                    hess_stats[k * dim + l].push(h.get(k, l));
                }
            }
        }
        let tag = format!("estimators q={q}");
        for k in 0..dim {
            lines.push(se_line(
                format!("{tag} gradient[{k}] vs 2A(theta-center)"),
                grad_target[k],
                &grad_stats[k],
            ));
        }
        for k in 0..dim {
            for l in 0..dim {
                lines.push(se_line(
                    format!("{tag} hessian[{k}{l}] vs 2A"),
                    2.0 * a.get(k, l),
                    &hess_stats[k * dim + l],
                ));
            }
        }
    }
    lines
}

fn projections_suite() -> Vec<CheckLine> {
    let mut lines = Vec::new();
    let epsilon = 0.1;
    for policy in [
        PdProjectionPolicy::jacobi(epsilon).expect("valid epsilon"),
        PdProjectionPolicy::full_spectral(epsilon).expect("valid epsilon"),
    ] {
        let mut rng = ChaCha8Rng::seed_from_u64(9200);
        let mut worst_idempotence = 0.0f64;
        let mut least_eigenvalue = f64::INFINITY;
        for _ in 0..2_000 {
            let w = Matrix::from_fn(4, |_, _| rng.gen_range(-3.0..3.0));
            let once = project_pd(&policy, &w).expect("finite input");
            let twice = project_pd(&policy, &once).expect("finite input");
            let mut diff = twice.clone();
            diff.add_scaled(-1.0, &once);
            worst_idempotence = worst_idempotence.max(diff.max_abs());
            least_eigenvalue = least_eigenvalue.min(once.sym_eigen().values[0]);
        }
        let name = policy.variant().token();
        lines.push(CheckLine::two_sided(
            format!("projections {name} idempotence max |P(P(W)) - P(W)|"),
            0.0,
            worst_idempotence,
            0.0,
        ));
        lines.push(CheckLine::at_least(
            format!("projections {name} eigenvalue floor min lambda_min(P(W))"),
            epsilon,
            least_eigenvalue,
            1e-9,
        ));

        let mut worst_residual = 0.0f64;
        for _ in 0..500 {
            let raw = Matrix::from_fn(4, |_, _| rng.gen_range(-2.0..2.0)).symmetrized();
            let w = project_pd(&policy, &raw).expect("finite input");
            let z: Vec<f64> = (0..4).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let d = newton_direction(&policy, &w, &z).expect("floored above epsilon");
            // The Jacobi variant solves against diag(W) by design.
            let residual: Vec<f64> = match policy.variant().token() {
                "jacobi" => (0..4).map(|i| w.get(i, i) * d[i] - z[i]).collect(),
                _ => w
                    .matvec(&d)
                    .iter()
                    .zip(&z)
                    .map(|(wd, zi)| wd - zi)
                    .collect(),
            };
            worst_residual = worst_residual.max(norm(&residual) / norm(&z));
        }
        lines.push(CheckLine::two_sided(
            format!("projections {name} newton solve max ||Wd - z||/||z||"),
            0.0,
            worst_residual,
            1e-8,
        ));
    }

    let bounds = BoxConstraint::uniform(4, -1.0, 1.0).expect("valid bounds");
    let mut rng = ChaCha8Rng::seed_from_u64(9201);
    let mut worst_escape = 0.0f64;
    let mut worst_fixed_point = 0.0f64;
    for _ in 0..5_000 {
        let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let p = bounds.project(&x);
        for v in &p {
            worst_escape = worst_escape.max((v.abs() - 1.0).max(0.0));
        }
        let pp = bounds.project(&p);
        for (u, v) in p.iter().zip(&pp) {
            worst_fixed_point = worst_fixed_point.max((u - v).abs());
        }
    }
    lines.push(CheckLine::two_sided(
        "projections box feasibility max overshoot".to_string(),
        0.0,
        worst_escape,
        0.0,
    ));
    lines.push(CheckLine::two_sided(
        "projections box idempotence max |P(P(x)) - P(x)|".to_string(),
        0.0,
        worst_fixed_point,
        0.0,
    ));
    lines
}

fn queue_suite() -> Vec<CheckLine> {
    // The benchmark profile at the reference parameters: external arrivals
    // are Poisson(0.2) and Poisson(0.1), the stationary flow equations give
    // effective service rates 0.65 and 0.75, everything that enters
    // eventually leaves (rate 0.3), and utilization is rate x mean service
    // time.
    let network =
        QueueNetwork::new(QueueNetworkConfig::default()).expect("benchmark profile is valid");
    let theta_bar = network.config().theta_bar.clone();
    let mut replica = network.create_replica(42);
    let events = 1_000_000;
    for _ in 0..events {
        replica.observe_cost(&theta_bar);
    }
    let clock = replica.clock();
    let counters = replica.counters().clone();

    let mut lines = Vec::new();
    for (node, lambda) in [(0usize, 0.2), (1, 0.1)] {
        let count = counters.external_arrivals[node] as f64;
        lines.push(CheckLine::two_sided(
            format!("queue node {node} external arrival rate"),
            lambda,
            count / clock,
            5.0 * count.sqrt() / clock,
        ));
    }
    for (node, rate) in [(0usize, 0.65), (1, 0.75)] {
        let count = counters.completions[node] as f64;
        lines.push(CheckLine::two_sided(
            format!("queue node {node} throughput"),
            rate,
            count / clock,
            0.02 * rate,
        ));
    }
    lines.push(CheckLine::two_sided(
        "queue exit rate".to_string(),
        0.3,
        counters.exits as f64 / clock,
        0.02 * 0.3,
    ));
    for (node, util) in [(0usize, 0.0325), (1, 0.018_75)] {
        lines.push(CheckLine::two_sided(
            format!("queue node {node} utilization"),
            util,
            counters.busy_time[node] / clock,
            0.1 * util,
        ));
    }
    let entered = counters.external_arrivals[0] + counters.external_arrivals[1];
    let accounted = counters.exits + replica.customers_in_system() as u64;
    lines.push(CheckLine::two_sided(
        "queue conservation |entered - exited - in system|".to_string(),
        0.0,
        (entered as f64) - (accounted as f64),
        0.0,
    ));
    lines
}
