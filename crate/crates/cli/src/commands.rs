use anyhow::{bail, Result};
use effham::cell::CellConfig;
use effham::effective::{ball_in_d, build_table, EffectiveConfig, EffectiveTable, InvariantCheck, Lattice, Verdict};
use effham::homog::{epsilon_sweep, non_homog_gap, GapConfig, SweepConfig};
use effham::onedim::{corrector_1d, critical_value_1d, flat_threshold, solvability_interval, OneDimProblem, Solvability};
use effham::scheme::GridSpec;
use effham::{Error, Hamiltonian};
use serde_json::{json, Value};

use crate::config::{Loaded, VerifyParams};
use crate::report::{num, CsvTable, Outcome, Run};

/// Flags that override the config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub grid: Option<usize>,
    pub force: bool,
}

impl Overrides {
    pub fn to_json(&self) -> Value {
        json!({ "grid": self.grid, "force": self.force })
    }
}

fn effective_config(ham: &Hamiltonian, grid: Option<usize>, tol: Option<f64>, n_max: u32) -> Result<EffectiveConfig> {
    let dim = ham.dim();
    let mut cell = CellConfig::default_for(dim)?;
    if let Some(points) = grid {
        cell.grid = GridSpec::new(dim, points)?;
    }
    if let Some(tol) = tol {
        cell.tol = tol;
    }
    let mut cfg = EffectiveConfig::new(ham, cell);
    cfg.n_max = n_max;
    cfg.validate()?;
    Ok(cfg)
}

fn table_csv(table: &EffectiveTable) -> CsvTable {
    let dim = table.lattice.dim;
    let mut header: Vec<String> = (1..=dim).map(|i| format!("P_{i}")).collect();
    header.extend(["hbar_inf", "n_star", "verdict", "margin", "grad_bound"].map(String::from));
    let mut csv = CsvTable::new(header);
    for pt in &table.points {
        let mut row: Vec<String> = pt.p.iter().copied().map(num).collect();
        row.push(num(pt.hbar_inf));
        row.push(pt.n_star.to_string());
        row.push(pt.verdict.as_str().to_string());
        row.push(num(pt.margin));
        row.push(num(pt.grad_bound_at_n_star));
        csv.push(row);
    }
    csv
}

fn verdict_counts(table: &EffectiveTable) -> Value {
    let count = |v: Verdict| table.points.iter().filter(|p| p.verdict == v).count();
    json!({
        "in-D": count(Verdict::InD),
        "not-in-D": count(Verdict::NotInD),
        "uncertain": count(Verdict::Uncertain),
    })
}

fn point_diagnostics(table: &EffectiveTable) -> Vec<Value> {
    table
        .points
        .iter()
        .map(|pt| {
            let last = pt.ladder.last();
            json!({
                "p": pt.p,
                "n_star": pt.n_star,
                "stabilized": pt.stabilized,
                "residual": last.map(|s| s.residual),
                "spread": last.map(|s| s.spread),
                "iterations": pt.ladder.iter().map(|s| s.iterations).sum::<usize>(),
                "note": pt.note,
            })
        })
        .collect()
}

pub fn effham(l: &Loaded, ov: &Overrides) -> Result<Run> {
    let params = &l.config.effham;
    let ham = &l.ham;
    let cfg = effective_config(ham, ov.grid.or(params.grid), params.tol, params.n_max)?;
    let lattice = Lattice::new(ham.dim(), params.radius, params.spacing)?;
    let table = build_table(ham, lattice, &cfg)?;
    let checks = table.check_invariants(ham);
    let outputs = json!({
        "regime": ham.regime(),
        "value_at_zero": ham.value_at_zero(),
        "guaranteed_ball_radius": ball_in_d(ham),
        "lattice": table.lattice,
        "grid_points_per_axis": cfg.cell.grid.per_axis(),
        "scheme_tol": cfg.scheme_tol,
        "stab_tol": cfg.stab_tol,
        "classification_threshold": cfg.classification_threshold(ham),
        "partial": table.partial,
        "verdicts": verdict_counts(&table),
        "invariants": checks,
        "points": point_diagnostics(&table),
    });
    Ok(Run {
        outcome: if table.partial { Outcome::Partial } else { Outcome::Ok },
        outputs,
        tables: vec![("table", table_csv(&table))],
    })
}

fn one_dim(ham: &Hamiltonian, command: &str) -> Result<OneDimProblem> {
    if ham.dim() != 1 {
        bail!("`{command}` needs a one-dimensional problem, got dim = {}", ham.dim());
    }
    Ok(OneDimProblem::from_hamiltonian(ham)?)
}

fn half_width_json(d: Solvability) -> Value {
    match d {
        Solvability::Whole => Value::Null,
        other => json!(other.half_width()),
    }
}

pub fn onedim(l: &Loaded) -> Result<Run> {
    let params = &l.config.onedim;
    let problem = one_dim(&l.ham, "onedim")?;
    let d = solvability_interval(&problem);
    let w_cell = match d {
        Solvability::Whole => "inf".to_string(),
        other => num(other.half_width().unwrap_or(0.0)),
    };

    let mut csv = CsvTable::new(["P", "c(P)", "in_D", "W"]);
    let mut corr = CsvTable::new(["P", "x", "u", "du_dx"]);
    let mut rows = Vec::new();
    for &p in &params.p {
        let in_d = d.contains(p);
        let c = if in_d { Some(critical_value_1d(&problem, p, params.tol)?) } else { None };
        csv.push(vec![num(p), c.map(num).unwrap_or_default(), in_d.to_string(), w_cell.clone()]);
        let mut row = json!({ "p": p, "in_d": in_d, "c": c });
        if in_d && params.corrector_samples > 0 {
            let k = corrector_1d(&problem, p)?;
            for j in 0..params.corrector_samples {
                let x = j as f64 / params.corrector_samples as f64;
                corr.push(vec![num(p), num(x), num(k.eval(x)), num(k.derivative(x))]);
            }
            row["corrector"] = json!({
                "case": k.case,
                "x0": k.x0,
                "x1": k.x1,
                "periodicity_defect": k.periodicity_defect,
                "kinks": k.kinks(),
            });
        }
        rows.push(row);
    }
    let outputs = json!({
        "D": d.describe(),
        "W": half_width_json(d),
        "regime": problem.regime(),
        "flat_threshold": flat_threshold(&problem).ok(),
        "rows": rows,
    });
    let mut tables = vec![("onedim", csv)];
    if !corr.rows.is_empty() {
        tables.push(("corrector", corr));
    }
    Ok(Run { outcome: Outcome::Ok, outputs, tables })
}

pub fn homogenize(l: &Loaded, ov: &Overrides) -> Result<Run> {
    let params = &l.config.homogenize;
    let ham = &l.ham;
    let mut cfg = SweepConfig::new(params.eps_inverse.clone());
    cfg.cells_per_period = ov.grid.unwrap_or(params.cells_per_period);
    cfg.cfl = params.cfl;
    cfg.table_spacing = params.table_spacing;
    cfg.viscosity = params.viscosity;
    cfg.force = ov.force;
    let (report, table) = match epsilon_sweep(ham, &params.u0, params.t_final, &cfg, None) {
        Ok(r) => r,
        Err(Error::AssumptionRefused(why)) => {
            return Ok(Run {
                outcome: Outcome::Refused,
                outputs: json!({ "verdict": "refused", "explanation": why }),
                tables: Vec::new(),
            })
        }
        Err(e) => return Err(e.into()),
    };
    let mut csv = CsvTable::new(["eps", "error"]);
    for row in &report.rows {
        csv.push(vec![num(row.eps), num(row.error)]);
    }
    let max_modulus = report.rows.iter().map(|r| r.time_modulus).fold(0.0, f64::max);
    let max_slope = report.rows.iter().map(|r| r.space_slope).fold(0.0, f64::max);
    let outputs = json!({
        "verdict": report.verdict,
        "forced": cfg.force && !report.assumptions.holds(),
        "decreasing": report.decreasing,
        "assumptions": report.assumptions,
        "budget": report.budget,
        "max_time_modulus": max_modulus,
        "max_space_slope": max_slope,
        "table_radius": report.table_radius,
        "table_partial": report.table_partial,
        "table_verdicts": verdict_counts(&table),
        "effective_points_per_axis": report.effective_points_per_axis,
        "rows": report.rows,
    });
    Ok(Run { outcome: Outcome::Ok, outputs, tables: vec![("sweep", csv)] })
}

pub fn nonhomog(l: &Loaded, ov: &Overrides) -> Result<Run> {
    let params = &l.config.nonhomog;
    let ham = &l.ham;
    let mut cfg = GapConfig::new(params.eps_inverse.clone());
    cfg.cells_per_period = ov.grid.unwrap_or(params.cells_per_period);
    cfg.cfl = params.cfl;
    cfg.deltas = params.deltas.clone();
    cfg.viscosity = params.viscosity;
    let report = match non_homog_gap(ham, &params.u0, &params.x_probe, params.t_probe, &cfg) {
        Ok(r) => r,
        Err(Error::Precondition(why)) => {
            return Ok(Run {
                outcome: Outcome::Refused,
                outputs: json!({ "verdict": "refused", "explanation": why }),
                tables: Vec::new(),
            })
        }
        Err(e) => return Err(e.into()),
    };
    let mut csv = CsvTable::new(["eps", "gap_estimate"]);
    for row in &report.rows {
        csv.push(vec![num(row.eps), num(row.gap_estimate)]);
    }
    let threshold = 0.5 * report.envelope_separation;
    let separated = report.gap >= threshold;
    let outputs = json!({
        "verdict": if separated { "not-converging" } else { "converging" },
        "gap": report.gap,
        "gap_threshold": threshold,
        "upper": report.upper,
        "lower": report.lower,
        "envelope_separation": report.envelope_separation,
        "max_envelope_violation": report.max_envelope_violation,
        "x_probe": report.x_probe,
        "t_probe": report.t_probe,
        "levels": report.levels,
        "rows": report.rows,
    });
    Ok(Run { outcome: Outcome::Ok, outputs, tables: vec![("nonhomog", csv)] })
}

/// Table values against the exact 1D critical value, where it exists.
fn oracle_check(table: &EffectiveTable, problem: &OneDimProblem, d: Solvability, tol: f64) -> Result<InvariantCheck> {
    let sigma_min = problem.sigma().sigma_min();
    let mut worst: f64 = 0.0;
    let mut at = None;
    let mut compared = 0;
    for pt in &table.points {
        let p = pt.p[0];
        if !d.contains(p) {
            continue;
        }
        let exact = critical_value_1d(problem, p, 1e-10)?;
        let rel = (pt.hbar_inf - exact).abs() / sigma_min;
        compared += 1;
        if rel > worst {
            worst = rel;
            at = Some(p);
        }
    }
    Ok(InvariantCheck {
        name: "oracle".into(),
        passed: worst <= tol,
        worst_slack: tol - worst,
        detail: format!(
            "max |H̄ − c(P)|/σ_min = {worst:.3e} over {compared} points{}, allowed {tol:.1e}",
            at.map(|p| format!(" (at P = {p})")).unwrap_or_default()
        ),
    })
}

/// Verdicts against the exact solvability set, with a 10% band around its boundary.
fn classification_check(table: &EffectiveTable, d: Solvability) -> InvariantCheck {
    let mut wrong = Vec::new();
    for pt in &table.points {
        let r = pt.p_norm();
        let bad = match d {
            Solvability::Empty => pt.verdict == Verdict::InD,
            Solvability::Whole => pt.verdict == Verdict::NotInD,
            Solvability::Interval(w) => {
                (r <= 0.9 * w && pt.verdict != Verdict::InD) || (r >= 1.1 * w && pt.verdict == Verdict::InD)
            }
        };
        if bad {
            wrong.push(format!("P = {} ({})", pt.p[0], pt.verdict.as_str()));
        }
    }
    InvariantCheck {
        name: "classification".into(),
        passed: wrong.is_empty(),
        worst_slack: -(wrong.len() as f64),
        detail: if wrong.is_empty() {
            format!("all {} verdicts consistent with D = {}", table.points.len(), d.describe())
        } else {
            format!("misclassified: {}", wrong.join(", "))
        },
    }
}

pub fn verify(l: &Loaded, ov: &Overrides) -> Result<Run> {
    let VerifyParams { radius, spacing, grid, oracle_tol } = l.config.verify;
    let ham = &l.ham;
    let problem = one_dim(ham, "verify")?;
    let cfg = effective_config(ham, Some(ov.grid.unwrap_or(grid)), None, 64)?;
    let table = build_table(ham, Lattice::new(1, radius, spacing)?, &cfg)?;
    let d = solvability_interval(&problem);

    let mut checks = table.check_invariants(ham);
    checks.push(oracle_check(&table, &problem, d, oracle_tol)?);
    checks.push(classification_check(&table, d));
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let outputs = json!({
        "passed": failed.is_empty(),
        "failed": failed,
        "D": d.describe(),
        "grid_points_per_axis": cfg.cell.grid.per_axis(),
        "scheme_tol": cfg.scheme_tol,
        "checks": checks,
    });
    let outcome = if failed.is_empty() { Outcome::Ok } else { Outcome::VerificationFailed };
    Ok(Run { outcome, outputs, tables: vec![("table", table_csv(&table))] })
}
