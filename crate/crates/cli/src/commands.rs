use fracmag_core::nonlinear::{default_t_grid, minimize};
use fracmag_core::oracle::{dense_assembly_reference, eig_reference, OracleConfig};
use fracmag_core::prelude::{
    assemble_local_magnetic_form, assemble_mass, assemble_nonlocal_form, build_mesh, energy,
    linking_diagnostics, multistart_from_eigenspaces, newton_deflated, solve_eigs,
    validate_nonlinearity, verify_courant, Complex, Error, FormMatrix, MassMatrix, ProblemSpec,
};
use serde_json::{json, Value};

use crate::artifacts::Artifacts;
use crate::config::RunConfig;
use crate::CliError;

/// Largest resolution used for oracle cross-checks, whatever the config says.
pub const ORACLE_RESOLUTION_CAP: usize = 8;

struct Discrete {
    k: FormMatrix,
    m: MassMatrix,
}

fn discretize(cfg: &RunConfig, resolution: usize, s: f64) -> Result<Discrete, CliError> {
    let mesh = build_mesh(&cfg.domain, resolution)?;
    log::info!("mesh: {} dofs", mesh.num_dofs());
    let k = assemble_nonlocal_form(&mesh, s, &cfg.potential, &cfg.quadrature)?;
    let m = assemble_mass(&mesh);
    Ok(Discrete { k, m })
}

pub fn spectrum(cfg: &RunConfig) -> Result<Value, CliError> {
    let out = Artifacts::create(cfg)?;
    let d = discretize(cfg, cfg.resolution, cfg.s)?;
    let spec = solve_eigs(&d.k, &d.m, cfg.m_max)?;
    let courant = verify_courant(&spec, &d.k.matrix, &d.m, cfg.courant_trials, cfg.seed);
    let (dm, dk) = spec.orthogonality_defects(&d.k.matrix, &d.m);
    out.write_csv("spectrum.csv", &spec.to_csv())?;
    out.write_json(
        "spectrum.json",
        "spectrum",
        json!({
            "spectrum": spec.to_json(),
            "mass_orthonormality_defect": dm,
            "form_orthogonality_defect": dk,
            "form": d.k.meta,
        }),
    )?;
    out.write_json("courant_report.json", "courant", serde_json::to_value(&courant).expect("json"))?;
    Ok(json!({
        "command": "spectrum",
        "output_dir": out.dir(),
        "config_hash": out.hash(),
        "eigenvalues": spec.eigenvalues,
        "courant_violations": courant.total_violations,
    }))
}

pub fn solve(cfg: &RunConfig) -> Result<Value, CliError> {
    let problem = cfg
        .problem
        .as_ref()
        .ok_or_else(|| CliError::Config("solve needs a problem block".into()))?;
    let out = Artifacts::create(cfg)?;
    let d = discretize(cfg, cfg.resolution, cfg.s)?;
    let spectrum = solve_eigs(&d.k, &d.m, cfg.m_max)?;
    let (beta_inf, nl) = problem.resolve(&spectrum.eigenvalues);
    log::info!("beta_inf = {beta_inf}, beta0 = {}", nl.beta0);
    let spec = ProblemSpec::new(&d.k, &d.m, beta_inf, nl, &spectrum)?;

    let link = linking_diagnostics(
        &spec,
        &spectrum,
        problem.h,
        problem.k,
        problem.rho,
        problem.linking_samples,
        cfg.seed,
    )?;
    let starts = multistart_from_eigenspaces(
        &spectrum,
        problem.h,
        problem.k,
        problem.rho,
        problem.extra_random,
        cfg.seed,
    )?;
    log::info!("{} starts", starts.len());
    let mut set = newton_deflated(&spec, &starts, &problem.newton);

    if problem.minimize {
        let f1 = spectrum.vector(0);
        let start = (1..=200)
            .map(|i| &f1 * Complex::new(0.05 * i as f64, 0.0))
            .find(|u| energy(u, &spec) < 0.0)
            .unwrap_or_else(|| &f1 * Complex::new(problem.rho, 0.0));
        match minimize(&spec, &start, problem.newton.tol) {
            Ok(mut c) => {
                c.start = starts.len();
                set.insert(c, &spec);
            }
            Err(e) => log::warn!("minimization did not converge: {e}"),
        }
    }

    let problem_json = json!({
        "beta_inf": beta_inf,
        "nonlinearity": nl,
        "eigenvalues": spectrum.eigenvalues,
        "starts": starts.len(),
    });
    out.write_json(
        "solutions.json",
        "result",
        json!({ "problem": problem_json, "solutions": set.to_json() }),
    )?;
    out.write_csv("summary.csv", &set.summary_csv())?;
    out.write_json(
        "linking_diagnostics.json",
        "linking",
        serde_json::to_value(&link).expect("json"),
    )?;
    Ok(json!({
        "command": "solve",
        "output_dir": out.dir(),
        "config_hash": out.hash(),
        "beta_inf": beta_inf,
        "nontrivial_orbits": set.nontrivial_count(),
        "trivial_found": set.has_trivial(),
        "geometry_ok": link.geometry_ok,
    }))
}

pub fn sweep_s(cfg: &RunConfig) -> Result<Value, CliError> {
    if cfg.s_list.is_empty() {
        return Err(CliError::Config("sweep-s needs a nonempty s_list".into()));
    }
    let out = Artifacts::create(cfg)?;
    let mesh = build_mesh(&cfg.domain, cfg.resolution)?;
    let m = assemble_mass(&mesh);
    let local = solve_eigs(&assemble_local_magnetic_form(&mesh, &cfg.potential)?, &m, 1)?.eigenvalues[0];
    let mut rows = Vec::new();
    for &s in &cfg.s_list {
        let k = assemble_nonlocal_form(&mesh, s, &cfg.potential, &cfg.quadrature)?;
        let b = solve_eigs(&k, &m, 1)?.eigenvalues[0];
        log::info!("s = {s}: beta_1 = {b}");
        rows.push((s, b));
    }
    let mut csv = String::from("s,beta1,abs_diff_local,kind\n");
    let mut long = String::from("series,s,value\n");
    for &(s, b) in &rows {
        csv += &format!("{s},{b:.17e},{:.17e},fractional\n", (b - local).abs());
        long += &format!("beta1,{s},{b:.17e}\nabs_diff_local,{s},{:.17e}\n", (b - local).abs());
    }
    csv += &format!("1,{local:.17e},0,local\n");
    long += &format!("beta1_local,1,{local:.17e}\n");
    out.write_csv("beta_vs_s.csv", &csv)?;
    out.write_csv("beta_vs_s_long.csv", &long)?;
    Ok(json!({
        "command": "sweep-s",
        "output_dir": out.dir(),
        "config_hash": out.hash(),
        "local_beta1": local,
        "rows": rows.iter().map(|(s, b)| json!({"s": s, "beta1": b})).collect::<Vec<_>>(),
    }))
}

struct Checks(Vec<Value>);

impl Checks {
    fn push(&mut self, name: &str, passed: bool, detail: Value) {
        self.0.push(json!({ "check": name, "passed": passed, "detail": detail }));
    }

    fn passed(&self) -> bool {
        self.0.iter().all(|c| c["passed"] == true)
    }
}

/// Runs every check and returns the report with the overall verdict.
pub fn validate(cfg: &RunConfig) -> Result<(Value, bool), CliError> {
    let out = Artifacts::create(cfg)?;
    let mut checks = Checks(Vec::new());
    let d = discretize(cfg, cfg.resolution, cfg.s)?;
    let spectrum = solve_eigs(&d.k, &d.m, cfg.m_max)?;

    let (dm, dk) = spectrum.orthogonality_defects(&d.k.matrix, &d.m);
    checks.push(
        "orthogonality",
        dm <= 1e-10 && dk <= 1e-8,
        json!({ "mass_defect": dm, "form_defect": dk }),
    );
    let courant = verify_courant(&spectrum, &d.k.matrix, &d.m, cfg.courant_trials, cfg.seed);
    checks.push(
        "courant_fischer",
        courant.total_violations == 0,
        serde_json::to_value(&courant).expect("json"),
    );

    if let Some(p) = &cfg.problem {
        let (_, nl) = p.resolve(&spectrum.eigenvalues);
        match validate_nonlinearity(&nl, &default_t_grid()) {
            Ok(r) => checks.push("nonlinearity", true, serde_json::to_value(&r).expect("json")),
            Err(Error::ValidationFailed(r)) => {
                checks.push("nonlinearity", false, serde_json::to_value(&*r).expect("json"))
            }
            Err(e) => return Err(e.into()),
        }
    }

    let n = cfg.resolution.min(ORACLE_RESOLUTION_CAP);
    let small = discretize(cfg, n, cfg.s)?;
    let reference = eig_reference(&small.k.matrix, &small.m.matrix)?;
    let fast = solve_eigs(&small.k, &small.m, reference.len())?;
    let eig_err = fast
        .eigenvalues
        .iter()
        .zip(&reference)
        .map(|(a, b)| (a - b).abs() / b.abs())
        .fold(0.0, f64::max);
    checks.push(
        "eigensolver_vs_reference",
        eig_err <= 1e-10,
        json!({ "resolution": n, "max_relative_error": eig_err }),
    );
    if cfg.dim() == 1 {
        let mesh = build_mesh(&cfg.domain, n)?;
        match dense_assembly_reference(&mesh, cfg.s, &cfg.potential, &OracleConfig::default()) {
            Ok(o) => {
                let err = small
                    .k
                    .matrix
                    .iter()
                    .zip(o.matrix.iter())
                    .map(|(a, b)| (a - b).norm() / b.norm())
                    .fold(0.0, f64::max);
                checks.push(
                    "assembly_vs_reference",
                    err <= 1e-4,
                    json!({ "resolution": n, "max_relative_error": err }),
                );
            }
            Err(e) => checks.push("assembly_vs_reference", false, json!({ "error": e.to_string() })),
        }
    }

    let passed = checks.passed();
    let payload = json!({ "passed": passed, "checks": checks.0 });
    out.write_json("validation_report.json", "validation", payload.clone())?;
    Ok((out.envelope("validation", payload), passed))
}
