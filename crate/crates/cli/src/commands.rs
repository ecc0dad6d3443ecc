//! Subcommand implementations: orchestration plus report shaping.

use duffing_floquet_core::certify::{
    check_mean_forcing_criterion, check_envelope_criterion, check_derivative_cell_criterion, check_secant_cell_criterion, CertificateReport,
    CertifyError, Witness, DEFAULT_STRICT_FRACTION,
};
use duffing_floquet_core::decay::{default_perturbation, estimate_decay, DecayError, DecayEstimate};
use duffing_floquet_core::floquet::{ladder_regime, spectrum, FloquetSpectrum, LadderRegime};
use duffing_floquet_core::hill::{boundary_scan, discriminant, HillError, HillParams, TongueBoundary};
use duffing_floquet_core::linalg::Complex;
use duffing_floquet_core::odeint::PlanarState;
use duffing_floquet_core::periodic::{
    find_periodic, gx_range_along, start_grid, uniqueness_probe, PeriodicOrbit, ShootingError,
};
use duffing_floquet_core::problem::DuffingProblem;

use crate::config::{
    integrator_settings, load_problem, shooting_settings, ConfigDoc, LoadedProblem, SolveSection,
};
use crate::output::{csv_row, fmt_float, Json};
use crate::{Failure, Format};

const KNOWN_CERTIFICATES: [&str; 4] = ["T1", "T2", "T3", "L3.2"];

/// Orbits paired with how many probe starts converged to each.
type OrbitList<'a> = Vec<(&'a PeriodicOrbit, usize)>;

pub fn cmd_solve(doc: &ConfigDoc, format: Format) -> Result<String, Failure> {
    reject_csv(format, "solve")?;
    let loaded = required_problem(doc)?;
    let solve = required_solve(doc)?;
    let integ = integrator_settings(
        &doc.integrator.clone().unwrap_or_default(),
        loaded.problem.period(),
    );
    let shooting = shooting_settings(solve);

    match (&solve.guess, &solve.start_grid) {
        (Some(guess), None) => {
            let orbit = find_periodic(
                &loaded.problem,
                PlanarState::new(guess[0], guess[1]),
                &shooting,
                &integ,
            )
            .map_err(shooting_failure)?;
            match format {
                Format::Json => Ok(Json::Obj(vec![
                    ("command", Json::str("solve")),
                    ("problem", problem_json(&loaded)),
                    ("orbit", orbit_json(&loaded.problem, &orbit)?),
                ])
                .render()),
                _ => Ok(solve_text(&vec![(&orbit, 1)], 0)),
            }
        }
        (None, Some(grid_section)) => {
            if grid_section.n < 1 {
                return Err(Failure::config("start_grid.n must be at least 1".into()));
            }
            let starts = start_grid(
                (grid_section.range[0][0], grid_section.range[0][1]),
                (grid_section.range[1][0], grid_section.range[1][1]),
                grid_section.n,
            );
            let outcome = uniqueness_probe(&loaded.problem, &starts, &shooting, &integ, None);
            if outcome.clusters.is_empty() {
                let detail = outcome
                    .failures
                    .first()
                    .map(|(_, e)| format!(" (first failure: {e})"))
                    .unwrap_or_default();
                return Err(Failure {
                    code: 2,
                    message: format!("no start converged to a periodic orbit{detail}"),
                });
            }
            match format {
                Format::Json => {
                    let mut clusters = Vec::new();
                    for cluster in &outcome.clusters {
                        clusters.push(Json::Obj(vec![
                            ("orbit", orbit_json(&loaded.problem, &cluster.orbit)?),
                            (
                                "converged_starts",
                                Json::Int(cluster.converged_starts as i64),
                            ),
                        ]));
                    }
                    let failures = outcome
                        .failures
                        .iter()
                        .map(|(start, err)| {
                            Json::Obj(vec![
                                (
                                    "start",
                                    Json::Obj(vec![
                                        ("x", Json::Num(start.x)),
                                        ("v", Json::Num(start.v)),
                                    ]),
                                ),
                                ("error", Json::str(format!("{err}"))),
                            ])
                        })
                        .collect();
                    Ok(Json::Obj(vec![
                        ("command", Json::str("solve")),
                        ("problem", problem_json(&loaded)),
                        ("clusters", Json::Arr(clusters)),
                        ("failures", Json::Arr(failures)),
                    ])
                    .render())
                }
                _ => {
                    let orbits: OrbitList = outcome
                        .clusters
                        .iter()
                        .map(|c| (&c.orbit, c.converged_starts))
                        .collect();
                    Ok(solve_text(&orbits, outcome.failures.len()))
                }
            }
        }
        _ => Err(Failure::config(
            "the solve section needs exactly one of `guess` or `start_grid`".into(),
        )),
    }
}

fn solve_text(orbits: &OrbitList, failed_starts: usize) -> String {
    let mut out = String::from("periodic-orbit search\n");
    for (i, (orbit, starts)) in orbits.iter().enumerate() {
        let s = spectrum(&orbit.monodromy);
        out.push_str(&format!(
            "orbit {}: initial = ({}, {}), residual = {}, converged starts = {starts}\n",
            i + 1,
            fmt_float(orbit.initial.x),
            fmt_float(orbit.initial.v),
            fmt_float(orbit.residual),
        ));
        out.push_str(&format!(
            "  multipliers {} and {}\n",
            complex_text(&s.multipliers.0),
            complex_text(&s.multipliers.1)
        ));
        out.push_str(&format!(
            "  class = {}, verdict = {}, decay rate = {}\n",
            s.pair_class.name(),
            s.verdict.name(),
            fmt_float(s.decay_rate)
        ));
    }
    if failed_starts > 0 {
        out.push_str(&format!("failed starts: {failed_starts}\n"));
    }
    out
}

pub fn cmd_certify(doc: &ConfigDoc, format: Format) -> Result<String, Failure> {
    reject_csv(format, "certify")?;
    let loaded = required_problem(doc)?;
    let section = doc
        .certify
        .as_ref()
        .ok_or_else(|| Failure::config("the certify command needs a `certify` section".into()))?;
    if section.theorems.is_empty() {
        return Err(Failure::config("certify.theorems must not be empty".into()));
    }
    let mut reports = Vec::new();
    for name in &section.theorems {
        let report = match name.as_str() {
            "T1" => check_envelope_criterion(&loaded.problem, &loaded.grid, DEFAULT_STRICT_FRACTION),
            "T2" => check_derivative_cell_criterion(&loaded.problem, &loaded.grid),
            "T3" => check_secant_cell_criterion(&loaded.problem, &loaded.grid, loaded.grid.x_points()),
            "L3.2" => check_mean_forcing_criterion(&loaded.problem, loaded.grid.x_range()),
            other => {
                return Err(Failure::config(format!(
                    "unknown certificate `{other}` (known: {})",
                    KNOWN_CERTIFICATES.join(", ")
                )))
            }
        }
        .map_err(certify_failure)?;
        reports.push(report);
    }

    match format {
        Format::Json => Ok(Json::Obj(vec![
            ("command", Json::str("certify")),
            ("problem", problem_json(&loaded)),
            (
                "certificates",
                Json::Arr(reports.iter().map(certificate_json).collect()),
            ),
        ])
        .render()),
        _ => {
            let mut out = String::from("certificates\n");
            for report in &reports {
                out.push_str(&format!(
                    "{}: {}\n",
                    report.kind.name(),
                    report
                        .predicted_conclusion
                        .as_deref()
                        .unwrap_or("conditions not satisfied")
                ));
                for cond in &report.conditions {
                    out.push_str(&format!(
                        "  [{}] {}: {}\n",
                        cond.status.name(),
                        cond.name,
                        cond.detail
                    ));
                }
            }
            Ok(out)
        }
    }
}

pub fn cmd_scan_hill(doc: &ConfigDoc, format: Format) -> Result<String, Failure> {
    let section = doc.scan_hill.as_ref().ok_or_else(|| {
        Failure::config("the scan-hill command needs a `scan_hill` section".into())
    })?;
    if section.eps.is_empty() {
        return Err(Failure::config("scan_hill.eps must not be empty".into()));
    }
    let (lo, hi) = (section.w_range[0], section.w_range[1]);
    if !(lo < hi) {
        return Err(Failure::config(
            "scan_hill.w_range must be increasing".into(),
        ));
    }
    if section.resolution < 2 {
        return Err(Failure::config(
            "scan_hill.resolution must be at least 2".into(),
        ));
    }
    if !(section.c >= 0.0) {
        return Err(Failure::config("scan_hill.c must be nonnegative".into()));
    }

    let mut grid_rows: Vec<(f64, f64, f64, bool)> = Vec::new();
    let mut boundaries: Vec<TongueBoundary> = Vec::new();
    for &eps in &section.eps {
        if !(eps >= 0.0) {
            return Err(Failure::config(
                "scan_hill.eps entries must be nonnegative".into(),
            ));
        }
        if !(lo > eps) {
            return Err(Failure::config(format!(
                "w range must stay above eps = {eps} (real-frequency branch)"
            )));
        }
        for i in 0..section.resolution {
            let w = if i == section.resolution - 1 {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (section.resolution - 1) as f64
            };
            let params = HillParams::new(w, eps, section.c).map_err(hill_failure)?;
            let tr = discriminant(&params);
            grid_rows.push((w, eps, tr, tr.abs() < 2.0));
        }
        boundaries
            .extend(boundary_scan(eps, (lo, hi), section.resolution).map_err(hill_failure)?);
    }

    match format {
        Format::Json => Ok(Json::Obj(vec![
            ("command", Json::str("scan_hill")),
            ("c", Json::Num(section.c)),
            ("w_range", Json::Arr(vec![Json::Num(lo), Json::Num(hi)])),
            ("resolution", Json::Int(section.resolution as i64)),
            (
                "eps",
                Json::Arr(section.eps.iter().map(|&e| Json::Num(e)).collect()),
            ),
            (
                "grid",
                Json::Arr(
                    grid_rows
                        .iter()
                        .map(|&(w, eps, tr, stable)| {
                            Json::Obj(vec![
                                ("w", Json::Num(w)),
                                ("eps", Json::Num(eps)),
                                ("tr_a", Json::Num(tr)),
                                ("stable", Json::Bool(stable)),
                            ])
                        })
                        .collect(),
                ),
            ),
            (
                "boundaries",
                Json::Arr(boundaries.iter().map(boundary_json).collect()),
            ),
        ])
        .render()),
        Format::Csv => {
            let mut out = String::new();
            out.push_str(&csv_row(&[
                "w".into(),
                "eps".into(),
                "tr_a".into(),
                "stable".into(),
            ]));
            for &(w, eps, tr, stable) in &grid_rows {
                out.push_str(&csv_row(&[
                    fmt_float(w),
                    fmt_float(eps),
                    fmt_float(tr),
                    stable.to_string(),
                ]));
            }
            // Boundary table as a second CSV block after a blank record.
            out.push_str("\r\n");
            out.push_str(&csv_row(&[
                "center".into(),
                "center_w".into(),
                "eps".into(),
                "w_lower".into(),
                "w_upper".into(),
                "asymptotic_lower".into(),
                "asymptotic_upper".into(),
            ]));
            for b in &boundaries {
                out.push_str(&csv_row(&[
                    format!("{}", b.center),
                    fmt_float(b.center.value()),
                    fmt_float(b.eps),
                    fmt_float(b.w_lower),
                    fmt_float(b.w_upper),
                    fmt_float(b.asymptotic_lower),
                    fmt_float(b.asymptotic_upper),
                ]));
            }
            Ok(out)
        }
        Format::Text => {
            let mut out = format!(
                "tongue scan: {} grid points per eps over w in [{}, {}]\n",
                section.resolution,
                fmt_float(lo),
                fmt_float(hi)
            );
            for b in &boundaries {
                out.push_str(&format!(
                    "center {} at eps {}: numeric [{}, {}], asymptotic [{}, {}]\n",
                    b.center,
                    fmt_float(b.eps),
                    fmt_float(b.w_lower),
                    fmt_float(b.w_upper),
                    fmt_float(b.asymptotic_lower),
                    fmt_float(b.asymptotic_upper),
                ));
            }
            if boundaries.is_empty() {
                out.push_str("no tongue boundaries located\n");
            }
            Ok(out)
        }
    }
}

pub fn cmd_decay(doc: &ConfigDoc, format: Format) -> Result<String, Failure> {
    reject_csv(format, "decay")?;
    let loaded = required_problem(doc)?;
    let solve = required_solve(doc)?;
    let section = doc
        .decay
        .as_ref()
        .ok_or_else(|| Failure::config("the decay command needs a `decay` section".into()))?;
    if section.horizon < 5 {
        return Err(Failure::config("horizon must be >= 5".into()));
    }
    let integ = integrator_settings(
        &doc.integrator.clone().unwrap_or_default(),
        loaded.problem.period(),
    );
    let shooting = shooting_settings(solve);

    let orbit = match (&solve.guess, &solve.start_grid) {
        (Some(guess), None) => find_periodic(
            &loaded.problem,
            PlanarState::new(guess[0], guess[1]),
            &shooting,
            &integ,
        )
        .map_err(shooting_failure)?,
        (None, Some(grid_section)) => {
            let starts = start_grid(
                (grid_section.range[0][0], grid_section.range[0][1]),
                (grid_section.range[1][0], grid_section.range[1][1]),
                grid_section.n,
            );
            let outcome = uniqueness_probe(&loaded.problem, &starts, &shooting, &integ, None);
            match outcome.clusters.into_iter().next() {
                Some(cluster) => cluster.orbit,
                None => {
                    return Err(Failure {
                        code: 2,
                        message: "no start converged to a periodic orbit".into(),
                    })
                }
            }
        }
        _ => {
            return Err(Failure::config(
                "the solve section needs exactly one of `guess` or `start_grid`".into(),
            ))
        }
    };

    let delta = match section.delta {
        Some([dx, dv]) => PlanarState::new(dx, dv),
        None => default_perturbation(&orbit, shooting.tol, section.horizon),
    };
    let estimate = estimate_decay(
        &loaded.problem,
        &orbit,
        delta,
        section.horizon,
        shooting.tol,
        &integ,
    )
    .map_err(decay_failure)?;

    match format {
        Format::Json => Ok(Json::Obj(vec![
            ("command", Json::str("decay")),
            ("problem", problem_json(&loaded)),
            ("orbit", orbit_json(&loaded.problem, &orbit)?),
            ("estimate", estimate_json(&estimate)),
        ])
        .render()),
        _ => {
            let s = spectrum(&orbit.monodromy);
            Ok(format!(
                "decay estimate\norbit initial = ({}, {})\nrate = {}\nr_squared = {}\nusable points = {}\nspectrum decay rate = {}\n",
                fmt_float(orbit.initial.x),
                fmt_float(orbit.initial.v),
                fmt_float(estimate.rate),
                fmt_float(estimate.r_squared),
                estimate.points.len(),
                fmt_float(s.decay_rate),
            ))
        }
    }
}

fn reject_csv(format: Format, command: &str) -> Result<(), Failure> {
    if format == Format::Csv {
        Err(Failure::config(format!(
            "csv output is only available for scan-hill, not {command}"
        )))
    } else {
        Ok(())
    }
}

fn required_problem(doc: &ConfigDoc) -> Result<LoadedProblem, Failure> {
    let section = doc
        .problem
        .as_ref()
        .ok_or_else(|| Failure::config("this command needs a `problem` section".into()))?;
    let grid = doc.grid.clone().unwrap_or_default();
    load_problem(section, &grid)
}

fn required_solve(doc: &ConfigDoc) -> Result<&SolveSection, Failure> {
    doc.solve
        .as_ref()
        .ok_or_else(|| Failure::config("this command needs a `solve` section".into()))
}

fn problem_json(loaded: &LoadedProblem) -> Json {
    Json::Obj(vec![
        ("c", Json::Num(loaded.problem.damping())),
        ("T", Json::Num(loaded.problem.period())),
        ("g", Json::str(&loaded.g_source)),
        ("gx", Json::str(&loaded.gx_source)),
        ("h", Json::str(&loaded.h_source)),
    ])
}

fn complex_json(z: &Complex) -> Json {
    Json::Obj(vec![("re", Json::Num(z.re)), ("im", Json::Num(z.im))])
}

fn complex_text(z: &Complex) -> String {
    format!("{} + {}i", fmt_float(z.re), fmt_float(z.im))
}

fn spectrum_json(s: &FloquetSpectrum) -> Json {
    Json::Obj(vec![
        (
            "multipliers",
            Json::Arr(vec![
                complex_json(&s.multipliers.0),
                complex_json(&s.multipliers.1),
            ]),
        ),
        (
            "exponents",
            Json::Arr(vec![
                complex_json(&s.exponents.0),
                complex_json(&s.exponents.1),
            ]),
        ),
        ("pair_class", Json::str(s.pair_class.name())),
        ("verdict", Json::str(s.verdict.name())),
        ("decay_rate", Json::Num(s.decay_rate)),
    ])
}

fn orbit_json(p: &DuffingProblem, orbit: &PeriodicOrbit) -> Result<Json, Failure> {
    let s = spectrum(&orbit.monodromy);
    let m = orbit.monodromy.matrix();
    let (gx_lo, gx_hi) = gx_range_along(p, &orbit.samples)
        .map_err(|e| Failure::config(format!("gx evaluation along the orbit failed: {e}")))?;
    let regime = ladder_regime(p, gx_lo, gx_hi);
    let regime_json = match regime {
        LadderRegime::SubPrincipal { lambda_1 } => Json::Obj(vec![
            ("kind", Json::str("sub_principal")),
            ("lambda_1", Json::Num(lambda_1)),
            ("expectation", Json::str(regime.expectation())),
        ]),
        LadderRegime::Cell { n, lower, upper } => Json::Obj(vec![
            ("kind", Json::str("cell")),
            ("n", Json::Int(n as i64)),
            ("cell", Json::Arr(vec![Json::Num(lower), Json::Num(upper)])),
            ("expectation", Json::str(regime.expectation())),
        ]),
        LadderRegime::Straddling { lambda_1 } => Json::Obj(vec![
            ("kind", Json::str("straddling")),
            ("lambda_1", Json::Num(lambda_1)),
            ("expectation", Json::str(regime.expectation())),
        ]),
    };
    Ok(Json::Obj(vec![
        (
            "initial",
            Json::Obj(vec![
                ("x", Json::Num(orbit.initial.x)),
                ("v", Json::Num(orbit.initial.v)),
            ]),
        ),
        ("residual", Json::Num(orbit.residual)),
        ("iterations", Json::Int(orbit.iterations as i64)),
        (
            "monodromy",
            Json::Obj(vec![
                ("m11", Json::Num(m.m11)),
                ("m12", Json::Num(m.m12)),
                ("m21", Json::Num(m.m21)),
                ("m22", Json::Num(m.m22)),
                ("det", Json::Num(m.det())),
            ]),
        ),
        ("spectrum", spectrum_json(&s)),
        (
            "gx_range_on_orbit",
            Json::Arr(vec![Json::Num(gx_lo), Json::Num(gx_hi)]),
        ),
        ("ladder_regime", regime_json),
    ]))
}

fn witness_json(w: &Witness) -> Json {
    let opt = |v: Option<f64>| v.map(Json::Num).unwrap_or(Json::Null);
    Json::Obj(vec![
        ("t", opt(w.t)),
        ("x", opt(w.x)),
        ("x2", opt(w.x2)),
        ("value", Json::Num(w.value)),
        ("bound", Json::Num(w.bound)),
    ])
}

fn certificate_json(report: &CertificateReport) -> Json {
    Json::Obj(vec![
        ("theorem", Json::str(report.kind.name())),
        (
            "n",
            report
                .ladder_index
                .map(|n| Json::Int(n as i64))
                .unwrap_or(Json::Null),
        ),
        (
            "conditions",
            Json::Arr(
                report
                    .conditions
                    .iter()
                    .map(|cond| {
                        Json::Obj(vec![
                            ("name", Json::str(cond.name)),
                            ("status", Json::str(cond.status.name())),
                            ("detail", Json::str(&cond.detail)),
                            (
                                "witness",
                                cond.witness
                                    .as_ref()
                                    .map(witness_json)
                                    .unwrap_or(Json::Null),
                            ),
                        ])
                    })
                    .collect(),
            ),
        ),
        (
            "predicted_conclusion",
            report
                .predicted_conclusion
                .as_ref()
                .map(|c| Json::str(c.clone()))
                .unwrap_or(Json::Null),
        ),
        (
            "grid",
            Json::Obj(vec![
                ("t_points", Json::Int(report.grid.t_count as i64)),
                ("x_points", Json::Int(report.grid.x_count as i64)),
                (
                    "t_range",
                    Json::Arr(vec![
                        Json::Num(report.grid.t_range.0),
                        Json::Num(report.grid.t_range.1),
                    ]),
                ),
                (
                    "x_range",
                    Json::Arr(vec![
                        Json::Num(report.grid.x_range.0),
                        Json::Num(report.grid.x_range.1),
                    ]),
                ),
            ]),
        ),
    ])
}

fn boundary_json(b: &TongueBoundary) -> Json {
    Json::Obj(vec![
        ("center", Json::str(format!("{}", b.center))),
        ("center_w", Json::Num(b.center.value())),
        ("eps", Json::Num(b.eps)),
        ("w_lower", Json::Num(b.w_lower)),
        ("w_upper", Json::Num(b.w_upper)),
        ("asymptotic_lower", Json::Num(b.asymptotic_lower)),
        ("asymptotic_upper", Json::Num(b.asymptotic_upper)),
    ])
}

fn estimate_json(est: &DecayEstimate) -> Json {
    Json::Obj(vec![
        ("rate", Json::Num(est.rate)),
        ("r_squared", Json::Num(est.r_squared)),
        ("rate_stderr", Json::Num(est.rate_stderr)),
        ("horizon", Json::Int(est.horizon as i64)),
        (
            "perturbation",
            Json::Obj(vec![
                ("x", Json::Num(est.perturbation.x)),
                ("v", Json::Num(est.perturbation.v)),
            ]),
        ),
        (
            "points",
            Json::Arr(
                est.points
                    .iter()
                    .map(|&(t, ln_d)| {
                        Json::Obj(vec![
                            ("time", Json::Num(t)),
                            ("ln_distance", Json::Num(ln_d)),
                        ])
                    })
                    .collect(),
            ),
        ),
    ])
}

fn shooting_failure(e: ShootingError) -> Failure {
    let code = match &e {
        ShootingError::NoConvergence { .. } => 2,
        ShootingError::SingularJacobian { .. } => 3,
        _ => 1,
    };
    Failure {
        code,
        message: format!("{e}"),
    }
}

fn certify_failure(e: CertifyError) -> Failure {
    Failure {
        code: 1,
        message: format!("{e}"),
    }
}

fn hill_failure(e: HillError) -> Failure {
    let code = match &e {
        HillError::RangeTooCoarse { .. } => 4,
        HillError::InvalidParams(_) => 1,
    };
    Failure {
        code,
        message: format!("{e}"),
    }
}

fn decay_failure(e: DecayError) -> Failure {
    let code = match &e {
        DecayError::Diverged { .. } => 5,
        _ => 1,
    };
    Failure {
        code,
        message: format!("{e}"),
    }
}
