//! Subcommand implementations.

use std::path::{Path, PathBuf};

use lichsolve_core::barriers::{build_subsolution, build_supersolution, order_barriers, BarrierOptions, ConstantLedger};
use lichsolve_core::fields::dual_problem;
use lichsolve_core::iteration::{solve_lichnerowicz, SolveOptions, ThetaMode};
use lichsolve_core::operators::residual;
use lichsolve_core::spectral::{dirichlet_first, zaremba_first};
use lichsolve_core::{BoundaryNonlinearity, ScalarField};

use crate::config::{
    build_exhaustion_from, build_mesh, build_spec, CliError, CliResult, RunConfig, ThetaChoice,
};
use crate::report::{write_atomic, Report};

pub enum OutputFormat {
    Report,
    Csv,
}

pub struct Ctx {
    pub config: RunConfig,
    pub out: PathBuf,
    pub format: OutputFormat,
}

impl Ctx {
    fn write(&self, name: &str, contents: &str) -> CliResult<()> {
        write_atomic(&self.out.join(name), contents)
    }

    fn emit(&self, report: &Report, csv: Option<&str>) {
        match self.format {
            OutputFormat::Report => print!("{}", report.text()),
            OutputFormat::Csv => {
                if let Some(csv) = csv {
                    print!("{csv}");
                } else {
                    print!("{}", report.text());
                }
            }
        }
    }

    fn solve_options(&self) -> SolveOptions {
        let mut opts = SolveOptions::default();
        if let Some(t) = self.config.solver.tol {
            opts.iteration.tol = t;
        }
        if let Some(m) = self.config.solver.max_iter {
            opts.iteration.max_iter = m;
        }
        opts.use_exhaustion = self.config.solver.exhaustion.unwrap_or(1) > 1;
        opts
    }
}

fn ledger_into(report: &mut Report, ledger: &ConstantLedger) {
    report.float("theta_0", ledger.theta_0);
    report.float("theta", ledger.theta);
    report.float("eta", ledger.eta);
    report.float("mu", ledger.mu);
    report.float("xi", ledger.xi);
    report.float("rho", ledger.rho);
    report.float("gamma_bar", ledger.gamma_bar);
    report.float("lambda_0", ledger.lambda_0);
    report.float("lambda_1", ledger.lambda_1);
    report.float("lambda_2", ledger.lambda_2);
    report.float("h_const", ledger.h_const);
    report.float("k_const", ledger.k_const);
    report.float("m1", ledger.m1);
    report.float("m2", ledger.m2);
    report.float("epsilon", ledger.epsilon);
    report.float("e_const", ledger.e_const);
    report.float("zeta_d", ledger.zeta_d);
    if let Some(z) = ledger.zeta_d_dirichlet {
        report.float("zeta_d_dirichlet", z);
    }
    report.field("branch", format!("{:?}", ledger.branch));
    report.field("heuristic", ledger.heuristic);
    report.field("escalations", ledger.escalations);
}

pub fn cmd_eigen(ctx: &Ctx, dirichlet_all: bool) -> CliResult<()> {
    let d = build_mesh(&ctx.config)?;
    let spec = build_spec(&ctx.config, &d)?;
    let all: Vec<usize> = (0..d.node_count()).collect();
    let pair = if dirichlet_all {
        dirichlet_first(&d, &spec.a, &all)?
    } else {
        zaremba_first(&d, &spec.a, &all)?
    };
    let mut report = Report::new("eigen");
    report.field("mode", if dirichlet_all { "dirichlet" } else { "zaremba" });
    report.float("zeta", pair.zeta);
    report.float("residual_norm", pair.residual_norm);
    let csv = pair.scatter(&d).to_csv(&d);
    ctx.write("eigen_report.txt", report.text())?;
    ctx.write("eigenfunction.csv", &csv)?;
    ctx.emit(&report, Some(&csv));
    Ok(())
}

pub fn cmd_barriers(ctx: &Ctx) -> CliResult<()> {
    let d = build_mesh(&ctx.config)?;
    let spec = apply_theta(&ctx.config, build_spec(&ctx.config, &d)?)?;
    let ex = build_exhaustion_from(&ctx.config, &d)?;
    let opts = BarrierOptions::default();
    let sup = build_supersolution(&spec, &ex, &opts)?;
    let sub = build_subsolution(&spec, &ex, &opts)?;
    let pair = order_barriers(&sub, &sup, &spec, opts.tol)?;
    let mut report = Report::new("barriers");
    report.float("s", pair.s);
    report.float("u_minus_min", pair.u_minus.min());
    report.float("u_minus_max", pair.u_minus.max());
    report.float("u_plus_min", pair.u_plus.min());
    report.float("u_plus_max", pair.u_plus.max());
    report.float("sub_residual_interior_min", pair.sub_residual.interior_min());
    report.float("sub_residual_boundary_max", pair.sub_residual.boundary_max());
    report.float("super_residual_interior_max", pair.super_residual.interior_max());
    report.float("super_residual_boundary_min", pair.super_residual.boundary_min());
    ledger_into(&mut report, &pair.ledger);
    let minus_csv = pair.u_minus.to_csv(&d);
    let plus_csv = pair.u_plus.to_csv(&d);
    ctx.write("barriers_report.txt", report.text())?;
    ctx.write("u_minus.csv", &minus_csv)?;
    ctx.write("u_plus.csv", &plus_csv)?;
    ctx.emit(&report, Some(&minus_csv));
    Ok(())
}

fn apply_theta(
    cfg: &RunConfig,
    spec: lichsolve_core::ProblemSpec,
) -> CliResult<lichsolve_core::ProblemSpec> {
    // solver.theta, when given as a number, overrides the coefficient file
    match cfg.solver.theta_choice()? {
        ThetaChoice::Fixed(t) if cfg.solver.theta.is_some() => Ok(spec.with_theta(t)?),
        _ => Ok(spec),
    }
}

pub fn cmd_solve(ctx: &Ctx) -> CliResult<()> {
    let d = build_mesh(&ctx.config)?;
    let spec = apply_theta(&ctx.config, build_spec(&ctx.config, &d)?)?;
    let ex = build_exhaustion_from(&ctx.config, &d)?;
    let mode = match ctx.config.solver.theta_choice()? {
        ThetaChoice::Auto => ThetaMode::Auto,
        ThetaChoice::Fixed(_) => ThetaMode::Fixed,
    };
    let opts = ctx.solve_options();
    let sol = solve_lichnerowicz(&spec, &ex, mode, &opts)?;
    let mut report = Report::new("solve");
    report.float("theta_used", sol.theta_used);
    report.float("theta_0", sol.theta_0);
    report.field("iterations", sol.report.iterations);
    report.field("ordering_violations", sol.report.ordering_violations);
    report.float("limits_gap", sol.report.limits_gap);
    report.float("residual_interior_sup", sol.report.residual.interior_sup());
    report.float("residual_boundary_sup", sol.report.residual.boundary_sup());
    report.float("solution_min", sol.report.solution.min());
    report.float("solution_max", sol.report.solution.max());
    report.float("h_final", sol.report.h_final);
    report.float("k_final", sol.report.k_final);
    if let Some(er) = &sol.exhaustion_report {
        report.field("exhaustion_mode", er.mode);
        report.field("exhaustion_members", er.reports.len());
        for (n, row) in er.convergence.iter().enumerate() {
            report.float(&format!("innermost_diff_{}", n + 1), row[0]);
        }
    }
    ledger_into(&mut report, &sol.barriers.ledger);
    let sol_csv = sol.report.solution.to_csv(&d);
    let mut gaps_csv = String::from("iteration,gap\n");
    for (k, g) in sol.report.gaps.iter().enumerate() {
        gaps_csv.push_str(&format!("{},{g:.17e}\n", k + 1));
    }
    ctx.write("solve_report.txt", report.text())?;
    ctx.write("solution.csv", &sol_csv)?;
    ctx.write("gaps.csv", &gaps_csv)?;
    ctx.emit(&report, Some(&sol_csv));
    Ok(())
}

fn read_solution_csv(path: &Path, node_count: usize) -> CliResult<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let mut values = vec![f64::NAN; node_count];
    let mut seen = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 && line.starts_with("node") {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let node: usize = cols
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| {
                CliError::config(format!("{}:{}: bad node id", path.display(), lineno + 1))
            })?;
        let value: f64 = cols
            .last()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| {
                CliError::config(format!("{}:{}: bad value", path.display(), lineno + 1))
            })?;
        if node >= node_count {
            return Err(CliError::config(format!(
                "{}:{}: node {node} outside mesh of {node_count} nodes",
                path.display(),
                lineno + 1
            )));
        }
        values[node] = value;
        seen += 1;
    }
    if seen != node_count || values.iter().any(|v| v.is_nan()) {
        return Err(CliError::config(format!(
            "{}: {seen} rows for {node_count} mesh nodes",
            path.display()
        )));
    }
    Ok(values)
}

pub fn cmd_verify(ctx: &Ctx, solution: &Path) -> CliResult<()> {
    let d = build_mesh(&ctx.config)?;
    let spec = apply_theta(&ctx.config, build_spec(&ctx.config, &d)?)?;
    let values = read_solution_csv(solution, d.node_count())?;
    for (i, &v) in values.iter().enumerate() {
        if !(v > 0.0) {
            return Err(CliError {
                code: 2,
                message: format!("nonpositive solution value {v} at node {i}"),
            });
        }
    }
    let u = ScalarField::new(&d, values)?;
    let res = residual(&spec, &u)?;
    let tol = ctx.config.solver.tol.unwrap_or(1e-8);
    let threshold = 10.0 * tol;
    let ok = res.interior_sup() <= threshold && res.boundary_sup() <= threshold;
    let mut report = Report::new("verify");
    report.float("residual_interior_sup", res.interior_sup());
    report.float("residual_boundary_sup", res.boundary_sup());
    report.float("threshold", threshold);
    report.field("within_threshold", ok);
    ctx.write("verify_report.txt", report.text())?;
    ctx.emit(&report, None);
    if ok {
        Ok(())
    } else {
        Err(CliError {
            code: 1,
            message: format!(
                "residuals {:.3e}/{:.3e} exceed threshold {threshold:.3e}",
                res.interior_sup(),
                res.boundary_sup()
            ),
        })
    }
}

pub fn cmd_dual(ctx: &Ctx) -> CliResult<()> {
    let d = build_mesh(&ctx.config)?;
    let spec = apply_theta(&ctx.config, build_spec(&ctx.config, &d)?)?;
    let dual = dual_problem(&spec)?;
    let mut report = Report::new("dual");
    report.float("sigma_bar", dual.exponents.sigma);
    report.float("tau_bar", dual.exponents.tau);
    if let BoundaryNonlinearity::PowerSum(terms) = &dual.g {
        for (k, t) in terms.iter().enumerate() {
            report.field(
                &format!("g_bar_{k}"),
                format!("coeff {:.12e} exponent {:.12e}", t.coeff.max(), t.exponent),
            );
        }
    }
    // the dual uses b₊, so dualizing twice recovers b only where b ≥ 0
    report.field("note", "dual b is the positive part; dual of dual reproduces b iff b >= 0");
    let a_csv = dual.a.to_csv(&d);
    let b_csv = dual.b.to_csv(&d);
    let c_csv = dual.c.to_csv(&d);
    ctx.write("dual_report.txt", report.text())?;
    ctx.write("a_bar.csv", &a_csv)?;
    ctx.write("b_bar.csv", &b_csv)?;
    ctx.write("c_bar.csv", &c_csv)?;
    ctx.emit(&report, Some(&a_csv));
    Ok(())
}
