use std::fs;

use anyhow::{bail, Context, Result};
use serde_json::json;

use qudit_tele::estimation::{
    estimation_bound_for, estimation_fidelity_exact, estimation_fidelity_mc, optimal_estimates,
};
use qudit_tele::fidelity::{
    fidelity_bound, max_singlet_fraction, mean_fidelity_exact, mean_fidelity_monte_carlo,
    optimal_fidelity_given_measurement,
};
use qudit_tele::haar::{m_kl_exact, m_kl_monte_carlo};
use qudit_tele::protocol::ProtocolDocument;
use qudit_tele::protocol::{
    check_optimality, kraus_deviation, standard_measurement, validate_completeness,
};
use qudit_tele::search::search_best_protocol;
use qudit_tele::{Protocol, SeededRng};

use crate::args::{check_dim, McArgs, ResolvedState, StateArgs};
use crate::report::{num, Report, Table};

/// Bound violations below this are rounding, not a counterexample.
const SEARCH_EXCESS_TOL: f64 = 1e-9;

fn state_report(command: &'static str, state: &ResolvedState) -> Report {
    let mut report = Report::new(command);
    report.config("d", state.d);
    report.config("lambdas", state.lambdas.clone());
    if let Some(theta) = state.theta {
        report.config("theta", theta);
    }
    report.warnings = state.warnings.clone();
    report
}

fn mc_config(report: &mut Report, mc: &McArgs, threads: usize) {
    report.config("n", mc.n);
    report.config("seed", mc.seed);
    report.config("threads", threads);
}

fn workers(threads: usize) -> Result<usize> {
    if threads == 0 {
        bail!("--threads must be at least 1");
    }
    Ok(threads)
}

pub fn bound(args: &StateArgs) -> Result<Report> {
    let state = args.resolve(false)?;
    let l = &state.lambdas;
    let (f, e, s) = (
        fidelity_bound(l)?,
        qudit_tele::estimation::estimation_fidelity_bound(l)?,
        max_singlet_fraction(l)?,
    );
    let mut report = state_report("bound", &state);
    report.result = json!({
        "fidelity_bound": f,
        "estimation_bound": e,
        "max_singlet_fraction": s,
    });
    report.table = Table::new(vec![
        "fidelity_bound",
        "estimation_bound",
        "max_singlet_fraction",
    ]);
    report.table.push(vec![num(f), num(e), num(s)]);
    Ok(report)
}

pub fn simulate(args: &StateArgs, mc: &McArgs, threads: usize) -> Result<Report> {
    let state = args.resolve(false)?;
    let proto = Protocol::standard(state.lambdas.clone())?;
    let exact = mean_fidelity_exact(&proto);
    let est = mean_fidelity_monte_carlo(&proto, mc.n, &SeededRng::new(mc.seed), workers(threads)?)?;
    let z = est.z_score(exact);

    let mut report = state_report("simulate", &state);
    mc_config(&mut report, mc, threads);
    report.result = json!({
        "exact": exact,
        "bound": fidelity_bound(&state.lambdas)?,
        "mc_estimate": est.value,
        "mc_std_error": est.std_error,
        "z_score": z,
        "n": est.n_samples,
        "seed": mc.seed,
    });
    report.table = Table::new(vec![
        "exact",
        "mc_estimate",
        "mc_std_error",
        "z_score",
        "n",
        "seed",
    ]);
    report.table.push(vec![
        num(exact),
        num(est.value),
        num(est.std_error),
        num(z),
        est.n_samples.to_string(),
        mc.seed.to_string(),
    ]);
    Ok(report)
}

pub fn sweep(theta_min: f64, theta_max: f64, steps: usize) -> Result<Report> {
    if steps == 0 {
        bail!("--steps must be at least 1");
    }
    if !(theta_min.is_finite() && theta_max.is_finite()) {
        bail!("θ range must be finite");
    }
    let mut report = Report::new("sweep");
    report.config("d", 2);
    report.config("theta_min", theta_min);
    report.config("theta_max", theta_max);
    report.config("steps", steps);
    report.table = Table::new(vec!["theta", "bound", "exact", "estimation_bound"]);

    let mut rows = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        let theta = theta_min + (theta_max - theta_min) * i as f64 / steps as f64;
        let state = StateArgs {
            d: Some(2),
            lambdas: None,
            theta: Some(theta),
        }
        .resolve(false)?;
        let l = &state.lambdas;
        let bound = fidelity_bound(l)?;
        let exact = mean_fidelity_exact(&Protocol::standard(l.clone())?);
        let est = qudit_tele::estimation::estimation_fidelity_bound(l)?;
        report
            .table
            .push(vec![num(theta), num(bound), num(exact), num(est)]);
        rows.push(json!({
            "theta": theta,
            "bound": bound,
            "exact": exact,
            "estimation_bound": est,
        }));
    }
    report.result = json!({ "rows": rows });
    Ok(report)
}

pub fn verify_mkl(d: usize, mc: &McArgs, sigmas: f64, threads: usize) -> Result<Report> {
    check_dim(d)?;
    let workers = workers(threads)?;
    let mut report = Report::new("verify-mkl");
    report.config("d", d);
    mc_config(&mut report, mc, threads);
    report.config("sigmas", sigmas);
    report.table = Table::new(vec!["k", "l", "max_z_score", "worst_i", "worst_j", "pass"]);

    let mut entries = Vec::new();
    let mut all_pass = true;
    for k in 0..d {
        for l in 0..d {
            let rng = SeededRng::with_stream(mc.seed, (k * d + l) as u64);
            let estimate = m_kl_monte_carlo(d, k, l, mc.n, &rng, workers)?;
            let (z, (i, j)) = estimate.max_z_score(&m_kl_exact(d, k, l)?);
            let pass = z <= sigmas;
            all_pass &= pass;
            report.table.push(vec![
                k.to_string(),
                l.to_string(),
                num(z),
                i.to_string(),
                j.to_string(),
                pass.to_string(),
            ]);
            entries.push(json!({
                "k": k,
                "l": l,
                "max_z_score": z,
                "worst_entry": [i, j],
                "pass": pass,
            }));
        }
    }
    report.result = json!({ "operators": entries });
    report.pass = Some(all_pass);
    Ok(report)
}

pub fn check_protocol(source: &str, args: &StateArgs, tol: f64) -> Result<Report> {
    let mut report = Report::new("check-protocol");
    report.config("source", source);
    report.config("tol", tol);

    let (schmidt, meas, kraus) = if source == "standard" {
        let state = args.resolve(true)?;
        report.config("d", state.d);
        report.config("lambdas", state.lambdas.clone());
        report.warnings = state.warnings.clone();
        let proto = Protocol::standard(state.lambdas)?;
        (
            proto.schmidt().clone(),
            proto.measurement().clone(),
            proto.corrections().all().to_vec(),
        )
    } else {
        if args.d.is_some() || args.lambdas.is_some() || args.theta.is_some() {
            bail!("--d, --lambdas and --theta apply only to `check-protocol standard`");
        }
        let text = fs::read_to_string(source).with_context(|| format!("reading {source}"))?;
        let doc =
            ProtocolDocument::from_json(&text).with_context(|| format!("parsing {source}"))?;
        report.config("d", doc.d);
        report.config("lambdas", doc.lambdas.clone());
        (doc.schmidt()?, doc.measurement()?, doc.kraus()?)
    };

    if kraus.len() != meas.n_outcomes() {
        bail!(
            "protocol has {} outcomes but {} correction lists",
            meas.n_outcomes(),
            kraus.len()
        );
    }
    let d = meas.dim();
    let deviations: Vec<f64> = kraus.iter().map(|ops| kraus_deviation(d, ops)).collect();
    let max_kraus_deviation = deviations.iter().copied().fold(0.0, f64::max);
    let kraus_pass = max_kraus_deviation <= tol;
    let completeness = validate_completeness(&meas, tol);
    let optimality = check_optimality(&meas, &schmidt, tol)?;
    let lambdas = schmidt.lambdas();
    let bound = fidelity_bound(lambdas)?;
    let attainable = optimal_fidelity_given_measurement(&meas, lambdas)?;

    // the mean fidelity is only meaningful for a physical protocol
    let mean_fidelity = if completeness.pass && kraus_pass {
        let corrections = qudit_tele::BobCorrections::new(d, kraus)?;
        Some(mean_fidelity_exact(&Protocol::new(
            schmidt.clone(),
            meas,
            corrections,
        )?))
    } else {
        None
    };
    let pass = completeness.pass && optimality.pass && kraus_pass;

    report.result = json!({
        "completeness": completeness,
        "optimality": optimality,
        "kraus": { "pass": kraus_pass, "max_deviation": max_kraus_deviation },
        "mean_fidelity": mean_fidelity,
        "optimal_fidelity_given_measurement": attainable,
        "fidelity_bound": bound,
    });
    report.table = Table::new(vec![
        "completeness_pass",
        "completeness_error",
        "optimality_pass",
        "optimality_deviation",
        "kraus_pass",
        "kraus_deviation",
        "mean_fidelity",
        "fidelity_bound",
    ]);
    report.table.push(vec![
        completeness.pass.to_string(),
        num(completeness.max_entrywise_error),
        optimality.pass.to_string(),
        num(optimality.max_deviation),
        kraus_pass.to_string(),
        num(max_kraus_deviation),
        mean_fidelity.map(num).unwrap_or_default(),
        num(bound),
    ]);
    report.pass = Some(pass);
    Ok(report)
}

pub fn search(
    args: &StateArgs,
    iters: usize,
    outcomes: Option<usize>,
    seed: u64,
) -> Result<Report> {
    let state = args.resolve(false)?;
    let n_outcomes = outcomes.unwrap_or(state.d * state.d);
    let res = search_best_protocol(&state.lambdas, n_outcomes, iters, &SeededRng::new(seed))?;

    let mut report = state_report("search", &state);
    report.config("iters", iters);
    report.config("outcomes", n_outcomes);
    report.config("seed", seed);
    let pass = res.max_excess <= SEARCH_EXCESS_TOL;
    report.result = json!({
        "bound": res.bound,
        "best_fidelity": res.best_fidelity,
        "best_is_standard": res.best_is_standard,
        "best_random_fidelity": res.best_random_fidelity,
        "gap": res.gap,
        "max_excess": res.max_excess,
        "n_evaluated": res.n_evaluated,
    });
    report.table = Table::new(vec![
        "bound",
        "best_fidelity",
        "best_is_standard",
        "best_random_fidelity",
        "gap",
        "max_excess",
        "n_evaluated",
    ]);
    report.table.push(vec![
        num(res.bound),
        num(res.best_fidelity),
        res.best_is_standard.to_string(),
        num(res.best_random_fidelity),
        num(res.gap),
        num(res.max_excess),
        res.n_evaluated.to_string(),
    ]);
    report.pass = Some(pass);
    Ok(report)
}

pub fn estimate(args: &StateArgs, mc: &McArgs, threads: usize) -> Result<Report> {
    let state = args.resolve(false)?;
    let l = &state.lambdas;
    let meas = standard_measurement(state.d)?;
    let strategy = optimal_estimates(&meas);
    let exact = estimation_fidelity_exact(&meas, l, &strategy)?;
    let bound = estimation_bound_for(&meas, l)?;
    let est = estimation_fidelity_mc(
        &meas,
        l,
        &strategy,
        mc.n,
        &SeededRng::new(mc.seed),
        workers(threads)?,
    )?;

    let mut report = state_report("estimate", &state);
    mc_config(&mut report, mc, threads);
    report.result = json!({
        "exact": exact,
        "bound": bound.bound,
        "tight_guaranteed": bound.tight_guaranteed,
        "mc_estimate": est.value,
        "mc_std_error": est.std_error,
        "z_score": est.z_score(exact),
        "n": est.n_samples,
        "seed": mc.seed,
    });
    report.table = Table::new(vec![
        "exact",
        "bound",
        "tight_guaranteed",
        "mc_estimate",
        "mc_std_error",
        "n",
        "seed",
    ]);
    report.table.push(vec![
        num(exact),
        num(bound.bound),
        bound.tight_guaranteed.to_string(),
        num(est.value),
        num(est.std_error),
        est.n_samples.to_string(),
        mc.seed.to_string(),
    ]);
    Ok(report)
}

/// The protocol document itself; not wrapped in a report.
pub fn export_protocol(args: &StateArgs) -> Result<(String, Vec<String>)> {
    let state = args.resolve(false)?;
    let proto = Protocol::standard(state.lambdas)?;
    let mut text = proto.to_json();
    text.push('\n');
    Ok((text, state.warnings))
}
