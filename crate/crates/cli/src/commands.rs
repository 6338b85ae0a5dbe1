use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use riskmdp_core::dp::{self, DpCertificate, DpConfig, ScanSpec};
use riskmdp_core::game::{self, CongenConfig, GameSolution, SequenceConfig, StopReason};
use riskmdp_core::model::two_state_example;
use riskmdp_core::oracle;
use riskmdp_core::{MdpModel, PurePolicy};

use crate::args::{Command, ExampleArgs, Method, OracleArgs, SolveArgs, VerifyArgs};
use crate::error::CliError;
use crate::model_file::{self, canonical_digest, ModelFile};
use crate::report::{
    CertificateBlock, ExampleBlock, LabelMap, OracleBlock, PoissonBlock, RunReport, SolutionBlock, TraceEntry,
};

/// A finished command: the report plus the lines to print.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: RunReport,
    pub summary: Vec<String>,
}

pub fn run(command: &Command, argv: Vec<String>) -> Result<Outcome, CliError> {
    let (outcome, out) = match command {
        Command::Solve(a) => (solve(a, argv)?, &a.out),
        Command::Oracle(a) => (oracle(a, argv)?, &a.out),
        Command::Verify(a) => (verify(a, argv)?, &a.out),
        Command::Example(a) => (example(a, argv)?, &a.out),
    };
    if let Some(path) = out {
        fs::write(path, outcome.report.to_json()).map_err(|source| CliError::Io { path: path.clone(), source })?;
    }
    Ok(outcome)
}

fn by_state<T: Clone>(model: &MdpModel, values: &[T]) -> LabelMap<T> {
    model.state_labels().iter().cloned().zip(values.iter().cloned()).collect()
}

fn policy_map(model: &MdpModel, policy: &PurePolicy) -> LabelMap<String> {
    let actions = model.action_labels();
    by_state(model, &policy.choices().iter().map(|&u| actions[u].clone()).collect::<Vec<_>>())
}

fn trace_entry(model: &MdpModel, resolution: Option<u32>, value: &[f64], sol_sums: (f64, f64), dual_id: f64, count: usize) -> TraceEntry {
    TraceEntry {
        resolution,
        beta: by_state(model, value),
        sum_beta: sol_sums.0,
        sum_w: sol_sums.1,
        dual_identity_residual: dual_id,
        constraint_count: count,
    }
}

fn solution_block(model: &MdpModel, sol: &GameSolution, stop: &str) -> SolutionBlock {
    SolutionBlock {
        stop: stop.into(),
        phi: by_state(model, &sol.value),
        v: by_state(model, &sol.potentials),
        q_star: sol.maximizer.rows().to_vec(),
        y: sol.minimizer.rows().to_vec(),
        v_star: policy_map(model, &sol.pure_minimizer),
    }
}

pub fn certificate_block(model: &MdpModel, phi: &[f64], v: &[f64], level_tol: f64) -> (CertificateBlock, Option<DpCertificate>) {
    let cfg = DpConfig { level_tol, ..DpConfig::default() };
    match dp::certify(model, phi, v, &cfg) {
        Ok(cert) => {
            let labels = model.state_labels();
            let block = CertificateBlock {
                error: None,
                level_tol,
                levels: cert.partition.levels.iter().map(|l| l.iter().map(|&i| labels[i].clone()).collect()).collect(),
                dp1: by_state(model, &cert.residuals.dp1),
                dp2: by_state(model, &cert.residuals.dp2),
                twisted_dp1: by_state(model, &cert.twisted.dp1),
                twisted_dp2: by_state(model, &cert.twisted.dp2),
                twisted_dp3: by_state(model, &cert.twisted.dp3),
                max_residual: cert.max_residual(),
                max_twisted: cert.twisted.max(),
            };
            (block, Some(cert))
        }
        Err(e) => (
            CertificateBlock {
                error: Some(e.to_string()),
                level_tol,
                levels: Vec::new(),
                dp1: LabelMap::new(),
                dp2: LabelMap::new(),
                twisted_dp1: LabelMap::new(),
                twisted_dp2: LabelMap::new(),
                twisted_dp3: LabelMap::new(),
                max_residual: f64::INFINITY,
                max_twisted: f64::INFINITY,
            },
            None,
        ),
    }
}

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

pub fn solve(args: &SolveArgs, argv: Vec<String>) -> Result<Outcome, CliError> {
    let mut timings = BTreeMap::new();
    let t = Instant::now();
    let loaded = model_file::load_model(&args.model)?;
    let model = &loaded.model;
    timings.insert("load".to_string(), secs(t));
    if args.stop_tol.is_nan() || args.stop_tol <= 0.0 {
        return Err(CliError::Usage("--stop-tol must be positive".into()));
    }
    // Fail on the oracle's guard before spending time in the LPs.
    oracle::pure_policy_count(model)?;

    let mut report = RunReport::new(argv, loaded.digest.clone(), model.state_labels().to_vec(), model.action_labels().to_vec());
    let t = Instant::now();
    let (solution, stop) = match args.method {
        Method::Grid => {
            let cfg = SequenceConfig { n_start: args.n_start, n_max: args.n_max, stop_tol: args.stop_tol, ..Default::default() };
            let conv = game::solve_sequence(model, &cfg)?;
            report.beta_trace = conv
                .records
                .iter()
                .map(|r| {
                    trace_entry(model, Some(r.resolution), &r.value, (r.sum_beta, r.sum_w), r.dual_identity_residual, r.constraint_count)
                })
                .collect();
            let stop = match conv.stop {
                StopReason::Converged => "converged",
                StopReason::MaxResolution => "max_resolution",
            };
            (conv.final_solution, stop)
        }
        Method::Congen => {
            let out = game::solve_congen(model, &CongenConfig::default())?;
            let s = &out.solution;
            report.beta_trace = vec![trace_entry(
                model,
                None,
                &s.value,
                (s.sum_beta, s.sum_w),
                s.dual_identity_residual(),
                s.constraint_count(),
            )];
            (out.solution, if out.certified { "certified" } else { "max_rounds" })
        }
    };
    timings.insert("solve".to_string(), secs(t));
    report.method = Some(match args.method {
        Method::Grid => "grid".into(),
        Method::Congen => "congen".into(),
    });
    let value = solution.value_max();
    report.value = Some(value);
    report.solution = Some(solution_block(model, &solution, stop));

    let t = Instant::now();
    let bf = oracle::brute_force_lambda_star(model)?;
    timings.insert("oracle".to_string(), secs(t));
    report.oracle = Some(OracleBlock {
        brute_force_value: Some(bf.value),
        argmin: Some(policy_map(model, &bf.argmin)),
        per_state_lambda: by_state(model, &bf.per_state),
        gap: Some((value - bf.value).abs()),
        converged: bf.all_converged,
    });

    let t = Instant::now();
    let (block, _) = certificate_block(model, &solution.value, &solution.potentials, args.level_tol);
    timings.insert("certify".to_string(), secs(t));
    report.certificate = Some(block);
    report.timings = timings;

    let mut summary = vec![format!("lambda* = {value:.6} ({stop})")];
    summary.push(format!(
        "v* = {}",
        report.solution.as_ref().unwrap().v_star.iter().map(|(s, a)| format!("{s}:{a}")).collect::<Vec<_>>().join(" ")
    ));
    summary.push(format!("brute force = {:.6}, gap = {:.3e}", bf.value, (value - bf.value).abs()));
    Ok(Outcome { report, summary })
}

pub fn oracle(args: &OracleArgs, argv: Vec<String>) -> Result<Outcome, CliError> {
    let mut timings = BTreeMap::new();
    let t = Instant::now();
    let loaded = model_file::load_model(&args.model)?;
    let model = &loaded.model;
    timings.insert("load".to_string(), secs(t));
    let mut report = RunReport::new(argv, loaded.digest.clone(), model.state_labels().to_vec(), model.action_labels().to_vec());
    let t = Instant::now();
    let summary = match &args.policy {
        Some(path) => {
            let policy = model_file::load_policy(path, model)?;
            let rates = oracle::growth_rate(model, &policy)?;
            report.value = Some(rates.lambda_max);
            report.oracle = Some(OracleBlock {
                brute_force_value: None,
                argmin: None,
                per_state_lambda: by_state(model, &rates.lambda),
                gap: None,
                converged: rates.converged,
            });
            model
                .state_labels()
                .iter()
                .zip(&rates.lambda)
                .map(|(s, l)| format!("lambda[{s}] = {l:.9}"))
                .collect()
        }
        None => {
            let bf = oracle::brute_force_lambda_star(model)?;
            report.value = Some(bf.value);
            let argmin = policy_map(model, &bf.argmin);
            let line = format!(
                "argmin = {}",
                argmin.iter().map(|(s, a)| format!("{s}:{a}")).collect::<Vec<_>>().join(" ")
            );
            report.oracle = Some(OracleBlock {
                brute_force_value: Some(bf.value),
                argmin: Some(argmin),
                per_state_lambda: by_state(model, &bf.per_state),
                gap: None,
                converged: bf.all_converged,
            });
            vec![format!("lambda* = {:.9}", bf.value), line]
        }
    };
    timings.insert("oracle".to_string(), secs(t));
    report.timings = timings;
    Ok(Outcome { report, summary })
}

fn lookup(map: &LabelMap<f64>, model: &MdpModel, what: &str, path: &Path) -> Result<Vec<f64>, CliError> {
    model
        .state_labels()
        .iter()
        .map(|s| {
            map.get(s).copied().ok_or_else(|| CliError::Parse {
                path: path.to_path_buf(),
                message: format!("solution has no {what} for state \"{s}\""),
            })
        })
        .collect()
}

pub fn verify(args: &VerifyArgs, argv: Vec<String>) -> Result<Outcome, CliError> {
    let mut timings = BTreeMap::new();
    let t = Instant::now();
    let loaded = model_file::load_model(&args.model)?;
    let model = &loaded.model;
    let text = fs::read_to_string(&args.solution).map_err(|source| CliError::Io { path: args.solution.clone(), source })?;
    let saved = RunReport::from_json(&text).map_err(|e| CliError::Parse { path: args.solution.clone(), message: e.to_string() })?;
    timings.insert("load".to_string(), secs(t));
    if saved.model_digest != loaded.digest {
        return Err(CliError::Usage(format!(
            "solution was computed for model {} but {} has digest {}",
            saved.model_digest,
            args.model.display(),
            loaded.digest
        )));
    }
    let sol = saved.solution.as_ref().ok_or_else(|| CliError::Parse {
        path: args.solution.clone(),
        message: "report carries no solution".into(),
    })?;
    let phi = lookup(&sol.phi, model, "value", &args.solution)?;
    let v = lookup(&sol.v, model, "potential", &args.solution)?;

    let t = Instant::now();
    let (block, cert) = certificate_block(model, &phi, &v, args.level_tol);
    timings.insert("certify".to_string(), secs(t));
    let cert = cert.ok_or_else(|| CliError::Uncertified(block.error.clone().unwrap_or_default()))?;

    let star_tol = args.tol.exp_m1();
    let labels = model.state_labels();
    let checks: [(&'static str, &[f64], f64); 5] = [
        ("DP-1", &cert.residuals.dp1, args.tol),
        ("DP-2", &cert.residuals.dp2, args.tol),
        ("DP*1", &cert.twisted.dp1, star_tol),
        ("DP*2", &cert.twisted.dp2, star_tol),
        ("DP*3", &cert.twisted.dp3, star_tol),
    ];
    let mut worst: Option<(f64, &'static str, usize, f64)> = None;
    for (name, res, tol) in checks {
        for (i, &r) in res.iter().enumerate() {
            let excess = if r.is_finite() { r / tol } else { f64::INFINITY };
            if r > tol && worst.is_none_or(|w| excess > w.0) {
                worst = Some((excess, name, i, tol));
            }
        }
    }
    if let Some((_, equation, i, tol)) = worst {
        let residual = checks.iter().find(|c| c.0 == equation).unwrap().1[i];
        return Err(CliError::Residual { equation, state: labels[i].clone(), residual, tol });
    }

    let mut report = RunReport::new(argv, loaded.digest.clone(), labels.to_vec(), model.action_labels().to_vec());
    report.value = phi.iter().copied().reduce(f64::max);
    report.certificate = Some(block);
    report.timings = timings;
    let summary = vec![format!(
        "certified: max residual {:.3e}, max twisted residual {:.3e} (tol {:e})",
        cert.max_residual(),
        cert.twisted.max(),
        args.tol
    )];
    Ok(Outcome { report, summary })
}

pub fn example(args: &ExampleArgs, argv: Vec<String>) -> Result<Outcome, CliError> {
    let mut timings = BTreeMap::new();
    let rho = args.rho;
    let t = Instant::now();
    let ex = dp::analytic_example(rho)?;
    let poisson = if ex.supercritical {
        let r = dp::poisson_insolvability(rho, &ScanSpec::default())?;
        Some(PoissonBlock {
            pairs_checked: r.pairs_checked,
            satisfying: r.satisfying,
            analytic_reduction: r.analytic_reduction,
            insolvable: r.satisfying == 0 && r.analytic_reduction,
        })
    } else {
        None
    };
    timings.insert("analytic".to_string(), secs(t));

    let model = two_state_example(rho)?;
    let digest = canonical_digest(&ModelFile::from_model(&model).to_json()).expect("generated model is valid JSON");
    let t = Instant::now();
    let conv = game::solve_sequence(&model, &SequenceConfig::default())?;
    timings.insert("solve".to_string(), secs(t));
    let lp_value = conv.value_max();
    let lp_q22 = conv.final_solution.maximizer.row(1)[1];

    let mut report = RunReport::new(argv, digest, model.state_labels().to_vec(), model.action_labels().to_vec());
    report.method = Some("grid".into());
    report.value = Some(ex.lambda_bar);
    report.example = Some(ExampleBlock {
        rho,
        supercritical: ex.supercritical,
        phi_star: ex.phi_star,
        q22: ex.q22,
        lambda_bar: ex.lambda_bar,
        poisson: poisson.clone(),
        lp_value,
        lp_q22,
        lp_gap: (lp_value - ex.lambda_bar).abs(),
    });
    report.timings = timings;

    let mut summary = vec![
        format!("phi* = ({:.6}, {:.6})", ex.phi_star[0], ex.phi_star[1]),
        format!("q22 = {:.6}", ex.q22),
        format!("lambda* = {:.6}", ex.lambda_bar),
    ];
    if let Some(p) = &poisson {
        summary.push(format!(
            "poisson_insolvable = {} ({} of {} scanned pairs satisfy the inequality)",
            p.insolvable, p.satisfying, p.pairs_checked
        ));
    }
    summary.push(format!("LP value = {lp_value:.6}, gap = {:.3e}, LP q22 = {lp_q22:.6}", (lp_value - ex.lambda_bar).abs()));
    Ok(Outcome { report, summary })
}
