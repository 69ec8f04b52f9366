//! One function per subcommand. Each writes its CSV files and then one JSON
//! summary through [`Output`].

use anyhow::{anyhow, bail, Result};
use pavg_core::averaging::{
    averaging_error_study, build_drift_table, hasminskii_blocks, solve_averaged_ode, DriftSource, ErgodicBudget,
    ErrorStudyConfig, MeasureBudget,
};
use pavg_core::catalog::{ClosedFormDrift, SystemSpec};
use pavg_core::diagnostics::{
    coupling_rate, dissipativity_constants, hormander_rank, semigroup_continuity_probe, LyapunovHandle, ProbeConfig,
};
use pavg_core::measures::{
    bl_distance_capped, krylov_bogolyubov_curve, measure_lipschitz_probe, poincare_section_check, sample_sections,
    section_grid, CylinderBox, CylinderMetric, EmpiricalMeasure, KbConfig, PoincareConfig, SamplingConfig,
    DEFAULT_BL_CAP,
};
use pavg_core::noise::{derive_seed, make_path};
use pavg_core::oracles::{ou_random_periodic_oracle, OuCoefficients};
use pavg_core::pullback::{pullback_solve, verify_random_periodicity, PullbackConfig};
use pavg_core::quad::integrate;
use pavg_core::sde::{simulate_slow_fast, LiftedState, SlowFastSystem};
use pavg_core::stats::{mean_se, variance_se};
use serde_json::{json, Value};

use crate::config::{DriftChoice, ExperimentConfig};
use crate::output::{cols, to_value, Csv, Output};

/// Tags a core failure with the stage that raised it.
fn stage<T>(name: &str, r: pavg_core::Result<T>) -> Result<T> {
    r.map_err(|e| anyhow!("stage `{name}` failed: {e}"))
}

fn system(cfg: &ExperimentConfig) -> Result<SlowFastSystem> {
    stage("build system", cfg.system.build())
}

fn pullback_config(cfg: &ExperimentConfig) -> PullbackConfig {
    PullbackConfig {
        k_max: cfg.budgets.k_max,
        tol: cfg.budgets.tol,
        r_stride: 1,
    }
}

fn sampling(cfg: &ExperimentConfig) -> SamplingConfig {
    SamplingConfig {
        dt: cfg.dt,
        base_seed: cfg.seeds.sampling,
        pullback: pullback_config(cfg),
        max_sections: cfg.budgets.max_sections,
    }
}

fn derived(base: u64, n: usize) -> Vec<u64> {
    (0..n as u64).map(|i| derive_seed(base, i)).collect()
}

pub fn simulate(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let sys = system(cfg)?;
    let path = stage("noise", make_path(cfg.seeds.path, cfg.dt, sys.noise_dim()))?;
    let y0 = vec![0.0; sys.fast_dim()];
    let (xs, ys) = stage(
        "simulate",
        simulate_slow_fast(&sys, &cfg.x, &y0, &path, cfg.budgets.t_end),
    )?;
    let mut csv = Csv::new(
        std::iter::once("t".to_string())
            .chain(cols("x", xs.dim()))
            .chain(cols("y", ys.dim())),
    );
    for j in 0..xs.len() {
        let mut row = vec![Csv::f(xs.time(j))];
        row.extend(xs.state(j).iter().chain(ys.state(j)).map(|v| Csv::f(*v)));
        csv.row(row);
    }
    out.csv("trajectory.csv", &csv)?;
    out.summary(
        "simulate",
        cfg,
        json!({ "path": cfg.seeds.path }),
        json!({ "epsilon": sys.epsilon(), "steps": xs.len() - 1, "x_final": xs.last(), "y_final": ys.last() }),
    )
}

pub fn pullback(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let sys = system(cfg)?;
    let path = stage("noise", make_path(cfg.seeds.path, cfg.dt, sys.noise_dim()))?;
    let anchor = vec![0.0; sys.fast_dim()];
    let est = stage(
        "pullback_solve",
        pullback_solve(&sys, &cfg.x, &anchor, &path, &pullback_config(cfg)),
    )?;

    let mut it = Csv::new(["k", "sup_diff"]);
    for (k, d) in est.sup_diffs.iter().enumerate() {
        it.row(vec![(k + 1).to_string(), Csv::f(*d)]);
    }
    out.csv("pullback_iterates.csv", &it)?;
    let mut sol = Csv::new(std::iter::once("r".to_string()).chain(cols("y", sys.fast_dim())));
    for (r, v) in est.r_grid().iter().zip(&est.values) {
        let mut row = vec![Csv::f(*r)];
        row.extend(v.y.iter().map(|z| Csv::f(*z)));
        sol.row(row);
    }
    out.csv("pullback_solution.csv", &sol)?;

    let periodicity = if est.converged {
        Some(stage(
            "verify_random_periodicity",
            verify_random_periodicity(&est, &sys, &path, cfg.budgets.tol),
        )?)
    } else {
        None
    };
    out.summary(
        "pullback",
        cfg,
        json!({ "path": cfg.seeds.path }),
        json!({
            "converged": est.converged,
            "k_used": est.k_used,
            "rate": est.rate_estimate,
            "final_sup_diff": est.sup_diffs.last(),
            "periodicity": periodicity,
        }),
    )?;
    if !est.converged {
        bail!(
            "stage `pullback_solve` failed: no convergence within k_max = {}",
            cfg.budgets.k_max
        );
    }
    Ok(())
}

fn measure_rows(csv: &mut Csv, section: usize, r: f64, m: &EmpiricalMeasure) {
    for (p, w) in m.support().iter().zip(m.weights()) {
        let mut row = vec![section.to_string(), Csv::f(r), Csv::f(p.s)];
        row.extend(p.y.iter().map(|v| Csv::f(*v)));
        row.push(Csv::f(*w));
        csv.row(row);
    }
}

pub fn measure(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let sys = system(cfg)?;
    let period = stage("grid", sys.period_steps(cfg.dt))?;
    let mut r_steps = section_grid(period, cfg.budgets.max_sections);
    // section 0 again, one period later
    r_steps.push(period);
    let scfg = sampling(cfg);
    let s = stage(
        "sample_sections",
        sample_sections(&sys, &cfg.x, &r_steps, cfg.budgets.n_samples, &scfg),
    )?;
    let r_of = |k: usize| r_steps[k] as f64 * cfg.dt;

    let n = sys.fast_dim();
    let mut mcsv = Csv::new(
        ["section", "r", "s"]
            .map(String::from)
            .into_iter()
            .chain(cols("y", n))
            .chain(std::iter::once("weight".to_string())),
    );
    for (k, m) in s.sections.iter().enumerate() {
        measure_rows(&mut mcsv, k, r_of(k), m);
    }
    out.csv("measure.csv", &mcsv)?;

    let metric = CylinderMetric::new(sys.tau());
    let mut bl = Csv::new(["r_a", "r_b", "d_bl", "subsampled"]);
    let last = s.sections.len() - 1;
    let mut pairs: Vec<(usize, usize)> = (0..last.saturating_sub(1)).map(|k| (k, k + 1)).collect();
    pairs.push((0, last));
    let mut periodicity = None;
    for (a, b) in pairs {
        let d = bl_distance_capped(&s.sections[a], &s.sections[b], &metric, DEFAULT_BL_CAP);
        bl.row(vec![
            Csv::f(r_of(a)),
            Csv::f(r_of(b)),
            Csv::f(d.value),
            d.subsampled.to_string(),
        ]);
        if b == last {
            periodicity = Some(d.value);
        }
    }
    out.csv("bl_table.csv", &bl)?;

    let nodes: Vec<Vec<f64>> = cfg.x_grid[0].iter().map(|&x| vec![x]).collect();
    let lipschitz = if sys.slow_dim() == 1 {
        let t = stage(
            "measure_lipschitz_probe",
            measure_lipschitz_probe(&sys, &nodes, cfg.budgets.n_samples, &scfg),
        )?;
        let mut csv = Csv::new(["x_i", "x_j", "separation", "d_bl", "ratio", "subsampled"]);
        for e in &t.entries {
            csv.row(vec![
                Csv::f(nodes[e.i][0]),
                Csv::f(nodes[e.j][0]),
                Csv::f(e.separation),
                Csv::f(e.distance),
                Csv::f(e.ratio),
                e.subsampled.to_string(),
            ]);
        }
        out.csv("lipschitz.csv", &csv)?;
        Some(json!({ "ratio_range": t.ratio_range() }))
    } else {
        None
    };

    let sections: Vec<Value> = s
        .sections
        .iter()
        .enumerate()
        .map(|(k, m)| json!({ "r": r_of(k), "y_mean": m.y_mean(), "y_std": m.y_std() }))
        .collect();
    out.summary(
        "measure",
        cfg,
        json!({ "sampling": s.seeds }),
        json!({
            "n_samples": cfg.budgets.n_samples,
            "excluded": s.excluded,
            "sections": sections,
            "periodicity_d_bl": periodicity,
            "lipschitz": lipschitz,
        }),
    )
}

pub fn ergodicity(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let sys = system(cfg)?;
    let period = stage("grid", sys.period_steps(cfg.dt))?;
    let grid = section_grid(period, cfg.budgets.max_sections);
    let s = stage(
        "sample_sections",
        sample_sections(&sys, &cfg.x, &grid, cfg.budgets.n_samples, &sampling(cfg)),
    )?;
    let reference = &s.sections[0];
    let starts = s.time_averaged();

    // lower half-space at the median of each fast coordinate, then a 1σ box
    let n = sys.fast_dim();
    let mut boxes = Vec::with_capacity(n + 1);
    for k in 0..n {
        let mut v: Vec<f64> = reference.support().iter().map(|a| a.y[k]).collect();
        v.sort_by(f64::total_cmp);
        let mut hi = vec![f64::INFINITY; n];
        hi[k] = v[v.len() / 2];
        boxes.push(stage("box", CylinderBox::new(vec![f64::NEG_INFINITY; n], hi))?);
    }
    boxes.push(CylinderBox::sigma_box(reference, 1.0));

    let kb = KbConfig {
        dt: cfg.dt,
        n_starts: cfg.budgets.n_starts,
        n_paths: cfg.budgets.n_paths,
        m_max: cfg.budgets.m_max,
        base_seed: cfg.seeds.probe,
    };
    let curves = stage(
        "krylov_bogolyubov_curve",
        krylov_bogolyubov_curve(&sys, &cfg.x, 0, reference, &starts, &boxes, &kb),
    )?;
    let mut csv = Csv::new(["box", "m", "discrepancy", "se", "mean_abs_per_start"]);
    for (b, c) in curves.iter().enumerate() {
        for r in &c.rows {
            csv.row(vec![
                b.to_string(),
                r.m.to_string(),
                Csv::f(r.discrepancy),
                Csv::f(r.se),
                Csv::f(r.mean_abs_per_start),
            ]);
        }
    }
    out.csv("kb_curves.csv", &csv)?;

    let pc = PoincareConfig {
        dt: cfg.dt,
        n_paths_per_atom: 4,
        base_seed: cfg.seeds.probe,
    };
    let hull = CylinderBox::sigma_box(reference, 6.0);
    let poincare = stage(
        "poincare_section_check",
        poincare_section_check(reference, &sys, &cfg.x, &hull, &pc),
    )?;

    let summary: Vec<Value> = curves
        .iter()
        .map(|c| {
            let last = c.rows.last().expect("m_max >= 2");
            json!({
                "box": c.cyl_box,
                "reference_mass": c.reference_mass,
                "first": c.rows[0],
                "last": last,
                "ends_within_3se": last.discrepancy <= 3.0 * last.se,
                "inconclusive": c.inconclusive,
            })
        })
        .collect();
    out.summary(
        "ergodicity",
        cfg,
        json!({ "sampling": s.seeds, "kb_base": kb.base_seed, "poincare_base": pc.base_seed }),
        json!({ "curves": summary, "poincare": poincare }),
    )
}

pub fn diagnose(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let sys = system(cfg)?;
    let n = sys.fast_dim();
    let path = stage("noise", make_path(cfg.seeds.path, cfg.dt, sys.noise_dim()))?;
    let lyap = LyapunovHandle::default();
    let coupling = stage(
        "coupling_rate",
        coupling_rate(
            &sys,
            &cfg.x,
            &vec![1.0; n],
            &vec![-1.0; n],
            &lyap,
            &path,
            cfg.budgets.t_end,
        ),
    )?;
    let mut csv = Csv::new(["t", "lambda"]);
    for (t, l) in &coupling.lambda_samples {
        csv.row(vec![Csv::f(*t), Csv::f(*l)]);
    }
    out.csv("coupling.csv", &csv)?;

    let tau = sys.tau();
    let t_grid: Vec<f64> = (0..4).map(|k| k as f64 * tau / 4.0).collect();
    let sample_box = stage("box", CylinderBox::new(vec![-2.0; n], vec![2.0; n]))?;
    let diss = stage(
        "dissipativity_constants",
        dissipativity_constants(
            &sys,
            &cfg.x,
            &sample_box,
            &t_grid,
            cfg.budgets.n_pairs,
            2.0,
            cfg.seeds.probe,
        ),
    )?;
    let mut csv = Csv::new(["t", "k_hat", "l_hat", "lambda_hat"]);
    for r in &diss.rows {
        csv.row(vec![
            Csv::f(r.t),
            Csv::f(r.k_hat),
            Csv::f(r.l_hat),
            Csv::f(r.lambda_hat),
        ]);
    }
    out.csv("dissipativity.csv", &csv)?;

    let columns: Vec<_> = (0..sys.noise_dim()).map(|k| sys.diffusion().column(k)).collect();
    let rank = stage(
        "hormander_rank",
        hormander_rank(&columns, 0.0, &cfg.x, &vec![0.0; n], cfg.budgets.hormander_level),
    )?;

    let phi = |y: &[f64]| y[0].clamp(-10.0, 10.0);
    let base = LiftedState::new(0, cfg.dt, vec![0.0; n]);
    let pairs: Vec<_> = [0.1, 0.01]
        .iter()
        .map(|&h| {
            let mut y = vec![0.0; n];
            y[0] = h;
            (base.clone(), LiftedState::new(0, cfg.dt, y))
        })
        .collect();
    let pc = ProbeConfig {
        dt: cfg.dt,
        n_paths: cfg.budgets.n_samples.max(2),
        base_seed: cfg.seeds.probe,
    };
    let semigroup = stage(
        "semigroup_continuity_probe",
        semigroup_continuity_probe(&sys, &cfg.x, &phi, &pairs, tau, &pc),
    )?;
    let mut csv = Csv::new(["separation", "difference", "se", "ratio", "ratio_se", "inconclusive"]);
    for r in &semigroup {
        csv.row(vec![
            Csv::f(r.separation),
            Csv::f(r.difference),
            Csv::f(r.se),
            Csv::f(r.ratio),
            Csv::f(r.ratio_se),
            r.inconclusive.to_string(),
        ]);
    }
    out.csv("semigroup.csv", &csv)?;

    out.summary(
        "diagnose",
        cfg,
        json!({ "path": cfg.seeds.path, "probe": derived(cfg.seeds.probe, pc.n_paths) }),
        json!({
            "coupling": {
                "beta_hat": coupling.beta_hat,
                "converged": coupling.converged,
                "truncated_at": coupling.truncated_at,
            },
            "dissipativity": diss,
            "hormander": rank,
            "semigroup": semigroup,
        }),
    )
}

fn drift_source(cfg: &ExperimentConfig) -> Result<DriftSource> {
    let ergodic = || {
        DriftSource::Ergodic(ErgodicBudget {
            dt: cfg.dt,
            t_erg: cfg.budgets.t_erg,
            burn_in: cfg.budgets.burn_in,
            n_batches: cfg.budgets.n_batches,
            seed: cfg.seeds.ergodic,
        })
    };
    let measure = || {
        DriftSource::Measure(MeasureBudget {
            n_samples: cfg.budgets.n_samples,
            sampling: sampling(cfg),
        })
    };
    Ok(match cfg.budgets.drift {
        DriftChoice::Ergodic => ergodic(),
        DriftChoice::Measure => measure(),
        DriftChoice::ClosedForm => match cfg.system.closed_form_drift() {
            Some(f) => DriftSource::ClosedForm(f),
            None => bail!("system `{}` has no closed-form averaged drift", cfg.system.name()),
        },
        DriftChoice::Auto => cfg
            .system
            .closed_form_drift()
            .map(DriftSource::ClosedForm)
            .unwrap_or_else(measure),
    })
}

pub fn average(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let sys = system(cfg)?;
    let source = drift_source(cfg)?;
    let table = stage(
        "build_drift_table",
        build_drift_table(&sys, cfg.x_grid.clone(), &source),
    )?;
    out.write("drift_table.csv", &table.to_csv())?;
    let eps = cfg.epsilons[0];
    let xbar = stage(
        "solve_averaged_ode",
        solve_averaged_ode(|x| table.eval(x), &cfg.x, eps, cfg.t_total, cfg.dt),
    )?;
    let mut csv = Csv::new(std::iter::once("t_slow".to_string()).chain(cols("xbar", xbar.dim())));
    for j in 0..xbar.len() {
        let mut row = vec![Csv::f(eps * xbar.time(j))];
        row.extend(xbar.state(j).iter().map(|v| Csv::f(*v)));
        csv.row(row);
    }
    out.csv("averaged_ode.csv", &csv)?;
    out.summary(
        "average",
        cfg,
        source_seeds(cfg, &source),
        json!({
            "method": table.method,
            "max_adjacent_slope": table.max_adjacent_slope(),
            "epsilon": eps,
            "xbar_final": xbar.last(),
        }),
    )
}

fn source_seeds(cfg: &ExperimentConfig, source: &DriftSource) -> Value {
    match source {
        DriftSource::Ergodic(b) => json!({ "ergodic": b.seed }),
        DriftSource::Measure(b) => json!({ "sampling": derived(b.sampling.base_seed, b.n_samples) }),
        DriftSource::ClosedForm(_) => json!({ "drift": null, "config_sampling": cfg.seeds.sampling }),
    }
}

/// Averaged drift as a function: the closed form itself, or a table on the grid.
fn drift_fn(cfg: &ExperimentConfig, sys: &SlowFastSystem, source: &DriftSource) -> Result<ClosedFormDrift> {
    if let DriftSource::ClosedForm(f) = source {
        return Ok(f.clone());
    }
    let table = stage("build_drift_table", build_drift_table(sys, cfg.x_grid.clone(), source))?;
    Ok(std::sync::Arc::new(move |x: &[f64]| table.eval(x)))
}

fn error_study_config(cfg: &ExperimentConfig) -> ErrorStudyConfig {
    ErrorStudyConfig {
        dt: cfg.dt,
        base_seed: cfg.seeds.mc,
        pullback: pullback_config(cfg),
        anchor: None,
        verbose: false,
    }
}

pub fn verify_averaging(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let sys = system(cfg)?;
    let source = drift_source(cfg)?;
    let drift = drift_fn(cfg, &sys, &source)?;
    let study = stage(
        "averaging_error_study",
        averaging_error_study(
            &sys,
            &cfg.x,
            &cfg.epsilons,
            cfg.t_total,
            cfg.budgets.n_mc,
            &*drift,
            &error_study_config(cfg),
        ),
    )?;
    let mut csv = Csv::new(["epsilon", "mean_sup_error", "se", "n_mc"]);
    let mut runs = Csv::new(["epsilon", "run", "sup_error"]);
    for r in &study.reports {
        csv.row(vec![
            Csv::f(r.epsilon),
            Csv::f(r.mean),
            Csv::f(r.se),
            r.n_mc.to_string(),
        ]);
        for (i, e) in r.sup_errors.iter().enumerate() {
            runs.row(vec![Csv::f(r.epsilon), i.to_string(), Csv::f(*e)]);
        }
    }
    out.csv("error_study.csv", &csv)?;
    out.csv("error_runs.csv", &runs)?;
    let reports: Vec<Value> = study
        .reports
        .iter()
        .map(|r| {
            json!({
                "epsilon": r.epsilon,
                "mean_sup_error": r.mean,
                "se": r.se,
                "n_mc": r.n_mc,
                "hasminskii_blocks": hasminskii_blocks(r.epsilon).ok(),
                "pullback_unconverged": r.pullback_unconverged,
            })
        })
        .collect();
    let mut seeds = source_seeds(cfg, &source);
    seeds["mc"] = json!(derived(cfg.seeds.mc, cfg.budgets.n_mc));
    out.summary(
        "verify-averaging",
        cfg,
        seeds,
        json!({ "drift": source.method(), "monotone": study.monotone, "reports": reports }),
    )
}

struct Check {
    name: String,
    value: f64,
    reference: f64,
    tolerance: f64,
    pass: bool,
}

impl Check {
    fn within(name: &str, value: f64, reference: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            reference,
            tolerance,
            pass: (value - reference).abs() <= tolerance,
        }
    }

    fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            reference: bound,
            tolerance: 0.0,
            pass: value <= bound,
        }
    }
}

/// Law of the OU section at `r = 0` for the catalog OU system, exact in
/// continuous time: mean from the noiseless oracle, variance by quadrature.
fn ou_section_law(spec: &SystemSpec, dt: f64) -> Option<(f64, f64, OuCoefficients)> {
    let SystemSpec::OuPeriodic(p) = spec else { return None };
    let coef = p.coefficients();
    let quiet = OuCoefficients {
        sigma: 0.0,
        ..coef.clone()
    };
    let any = make_path(0, dt, 1).ok()?;
    let mean = ou_random_periodic_oracle(&quiet, &any, 0.0, 40).ok()?.value;
    let (a0, a1, tau) = (p.alpha_mean, p.alpha_amp, p.tau);
    let w = 2.0 * std::f64::consts::PI / tau;
    // ∫_s^0 α = -a0 s - a1 sin(w s) / w
    let var = p.sigma
        * p.sigma
        * integrate(
            |s| (2.0 * (a0 * s + a1 * (w * s).sin() / w)).exp(),
            -30.0 / a0.max(0.1),
            0.0,
            600,
            8,
        );
    Some((mean, var, coef))
}

/// The oracle-backed pipeline on the configured catalog system.
pub fn example(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let sys = system(cfg)?;
    let mut checks = Vec::new();
    let dt = cfg.dt;

    // pullback
    let path = stage("noise", make_path(cfg.seeds.path, dt, sys.noise_dim()))?;
    let pcfg = pullback_config(cfg);
    let est = stage(
        "pullback_solve",
        pullback_solve(&sys, &cfg.x, &vec![0.0; sys.fast_dim()], &path, &pcfg),
    )?;
    checks.push(Check::at_most(
        "pullback_converged",
        if est.converged { 0.0 } else { 1.0 },
        0.0,
    ));
    checks.push(Check::at_most(
        "pullback_rate_negative",
        est.rate_estimate.unwrap_or(f64::NAN),
        0.0,
    ));
    if est.converged {
        let rep = stage(
            "verify_random_periodicity",
            verify_random_periodicity(&est, &sys, &path, pcfg.tol),
        )?;
        checks.push(Check::at_most("shift_residual", rep.shift_residual, rep.threshold));
    }

    // section law
    let n = cfg.budgets.n_samples;
    let scfg = sampling(cfg);
    let s = stage("sample_sections", sample_sections(&sys, &cfg.x, &[0], n, &scfg))?;
    let ys: Vec<f64> = s.sections[0].support().iter().map(|a| a.y[0]).collect();
    let (m, v) = (mean_se(&ys), variance_se(&ys));
    match &cfg.system {
        SystemSpec::OuPeriodic(_) => {
            let (mean, var, coef) = ou_section_law(&cfg.system, dt).expect("ou system");
            checks.push(Check::within("section_mean", m.mean, mean, 3.0 * m.se));
            checks.push(Check::within("section_variance", v.mean, var, 3.0 * v.se));
            let mut sup: f64 = 0.0;
            let mut bound: f64 = 0.0;
            for (r, val) in est.r_grid().iter().zip(&est.values) {
                let o = stage(
                    "ou_random_periodic_oracle",
                    ou_random_periodic_oracle(&coef, &path, *r, 40),
                )?;
                sup = sup.max((val.y[0] - o.value).abs());
                bound = bound.max(o.truncation_bound);
            }
            checks.push(Check::at_most(
                "pullback_vs_oracle",
                sup,
                (5.0 * dt).max(pcfg.tol) + bound,
            ));
        }
        SystemSpec::ToyTurbulence(p) => {
            let var = p.toy.sigma.powi(2) / (2.0 * p.toy.gamma(cfg.x[0]));
            checks.push(Check::within("section_variance", v.mean, var, 3.0 * v.se));
        }
        _ => {}
    }

    // averaged drift, both routes, and the closed form where there is one
    let ergodic = DriftSource::Ergodic(ErgodicBudget {
        dt,
        t_erg: cfg.budgets.t_erg,
        burn_in: cfg.budgets.burn_in,
        n_batches: cfg.budgets.n_batches,
        seed: cfg.seeds.ergodic,
    });
    let measure = DriftSource::Measure(MeasureBudget {
        n_samples: n,
        sampling: scfg.clone(),
    });
    let a = stage("averaged_drift_ergodic", ergodic.estimate(&sys, &cfg.x))?;
    let b = stage("averaged_drift_measure", measure.estimate(&sys, &cfg.x))?;
    for k in 0..a.value.len() {
        let se = a.se[k].hypot(b.se[k]);
        checks.push(Check::within(
            &format!("drift_routes_{}", k + 1),
            a.value[k],
            b.value[k],
            3.0 * se,
        ));
    }
    if let Some(f) = cfg.system.closed_form_drift() {
        let c = stage("closed_form_drift", f(&cfg.x))?;
        for (k, ck) in c.iter().enumerate() {
            checks.push(Check::within(
                &format!("drift_closed_form_{}", k + 1),
                b.value[k],
                *ck,
                3.0 * b.se[k],
            ));
        }
    }

    // partition and the averaging limit
    checks.push(Check::within(
        "hasminskii_n_0.1",
        stage("partition", hasminskii_blocks(0.1))? as f64,
        9.0,
        0.0,
    ));
    checks.push(Check::within(
        "hasminskii_n_0.01",
        stage("partition", hasminskii_blocks(0.01))? as f64,
        69.0,
        0.0,
    ));
    let source = drift_source(cfg)?;
    let drift = drift_fn(cfg, &sys, &source)?;
    let study = stage(
        "averaging_error_study",
        averaging_error_study(
            &sys,
            &cfg.x,
            &cfg.epsilons,
            cfg.t_total,
            cfg.budgets.n_mc,
            &*drift,
            &error_study_config(cfg),
        ),
    )?;
    checks.push(Check::at_most(
        "error_decreasing",
        if study.monotone { 0.0 } else { 1.0 },
        0.0,
    ));

    let mut csv = Csv::new(["check", "value", "reference", "tolerance", "pass"]);
    for c in &checks {
        csv.row(vec![
            c.name.clone(),
            Csv::f(c.value),
            Csv::f(c.reference),
            Csv::f(c.tolerance),
            c.pass.to_string(),
        ]);
    }
    out.csv("example_checks.csv", &csv)?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    let errors: Vec<Value> = study.reports.iter().map(|r| json!([r.epsilon, r.mean, r.se])).collect();
    out.summary(
        "example",
        cfg,
        json!({
            "path": cfg.seeds.path,
            "sampling": s.seeds,
            "ergodic": cfg.seeds.ergodic,
            "mc": derived(cfg.seeds.mc, cfg.budgets.n_mc),
        }),
        json!({
            "system": cfg.system.name(),
            "passed": failed.is_empty(),
            "failed": failed,
            "checks": checks.iter().map(|c| json!({
                "name": c.name, "value": c.value, "reference": c.reference,
                "tolerance": c.tolerance, "pass": c.pass,
            })).collect::<Vec<_>>(),
            "pullback": { "k_used": est.k_used, "rate": est.rate_estimate },
            "error_study": errors,
            "drift_estimates": { "ergodic": to_value(&a), "measure": to_value(&b) },
        }),
    )?;
    if !failed.is_empty() {
        bail!("stage `example` failed: checks {} did not pass", failed.join(", "));
    }
    Ok(())
}
