//! The four subcommands. Each returns an exit status or a [`RunError`].

use std::path::{Path, PathBuf};

use mkdv_core::checks::{run_checks, Normalization};
use mkdv_core::conserved::{calibrate_screening, hamiltonian_density};
use mkdv_core::diffpoly::{format_rational, int};
use mkdv_core::hierarchy::{flow_json, flow_latex, FlowSpec};
use mkdv_core::numeval::{compile_rhs, integrate, monitor, GridState, Scheme};
use mkdv_core::{AlgebraCtx, DiffPoly, Hierarchy};
use serde_json::json;
use thiserror::Error;

use crate::config::{Format, RunConfig, UsageError};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Usage(#[from] UsageError),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Input(String),
    /// A computation failed; this is a failed run, not a usage problem.
    #[error("{0}")]
    Failed(String),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Failed(_) => 1,
            _ => 2,
        }
    }
}

fn failed(e: impl std::fmt::Display) -> RunError {
    RunError::Failed(e.to_string())
}

pub fn build_hierarchy(cfg: &RunConfig) -> Hierarchy {
    let mut hier = Hierarchy::new(cfg.ctx);
    if let Some(n) = cfg.perturb {
        // Negative control: add u₁ to the first component of flow n.
        let rank = cfg.ctx.rank();
        let mut delta = vec![DiffPoly::zero(rank); rank];
        delta[0] = DiffPoly::jet(rank, 1, 0);
        hier.perturb_flow(n, delta);
        log::warn!("flow {n} perturbed by u_1; checks involving it must fail");
    }
    hier
}

/// Writes `contents` to `dir/name`, or to stdout when no directory is given.
fn emit(dir: Option<&Path>, name: &str, contents: &str) -> Result<(), RunError> {
    match dir {
        None => {
            print!("{contents}");
            Ok(())
        }
        Some(dir) => {
            let path = dir.join(name);
            std::fs::create_dir_all(dir)
                .and_then(|_| std::fs::write(&path, contents))
                .map_err(|source| RunError::Write { path: path.clone(), source })?;
            println!("wrote {}", path.display());
            Ok(())
        }
    }
}

fn normalization(hier: &Hierarchy) -> Result<Normalization, RunError> {
    let mut norm = Normalization::for_rank(hier.ctx().rank());
    if hier.ctx().rank() == 1 {
        let cal = calibrate_screening(hier).map_err(failed)?;
        norm.screening_scale = Some(cal.kappa.iter().map(format_rational).collect());
    }
    Ok(norm)
}

/// One flow together with its Hamiltonian density, ready for any output format.
struct FlowDoc {
    ctx: AlgebraCtx,
    n: u32,
    rhs: Vec<DiffPoly>,
    density: Option<DiffPoly>,
}

impl FlowDoc {
    fn compute(hier: &Hierarchy, n: u32, degree: i32) -> Result<Self, RunError> {
        let spec = hier.flow(n, degree).map_err(failed)?;
        let density = hamiltonian_density(hier, n, degree).map_err(failed)?.value;
        Ok(FlowDoc {
            ctx: spec.ctx,
            n,
            rhs: spec.rhs,
            density: Some(density),
        })
    }

    fn json(&self, degree: Option<i32>) -> serde_json::Value {
        let mut v = flow_json(self.ctx, self.n, &self.rhs);
        if let Some(d) = degree {
            v["degree"] = json!(d);
        }
        if let Some(h) = &self.density {
            v["hamiltonian_density"] = json!({ "weight": self.n + 1, "terms": h.to_json_value() });
        }
        v
    }

    fn latex(&self) -> String {
        let mut out = flow_latex(self.ctx, self.n, &self.rhs);
        if let Some(h) = &self.density {
            out.push_str(&format!(
                "\\begin{{aligned}}\nH_{{{}}} &= {}\n\\end{{aligned}}\n",
                self.n,
                h.to_latex()
            ));
        }
        out
    }

    fn csv_rows(&self, w: &mut csv::Writer<Vec<u8>>) -> csv::Result<()> {
        let rank = self.ctx.rank();
        let mut row = |kind: &str, field: String, p: &DiffPoly| -> csv::Result<()> {
            let mut terms: Vec<_> = p.terms().collect();
            terms.sort_by(|a, b| a.0.cmp(b.0));
            for (m, c) in terms {
                let mono = DiffPoly::term(rank, m.clone(), int(1)).to_string();
                w.write_record([kind, &self.n.to_string(), &field, &format_rational(c), &mono])?;
            }
            Ok(())
        };
        for (i, p) in self.rhs.iter().enumerate() {
            row("rhs", (i + 1).to_string(), p)?;
        }
        if let Some(h) = &self.density {
            row("density", String::new(), h)?;
        }
        Ok(())
    }
}

fn csv_table(docs: &[FlowDoc]) -> Result<String, RunError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["kind", "n", "field", "coefficient", "monomial"]).map_err(failed)?;
    for d in docs {
        d.csv_rows(&mut w).map_err(failed)?;
    }
    let bytes = w.into_inner().map_err(failed)?;
    String::from_utf8(bytes).map_err(failed)
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("json values serialize") + "\n"
}

/// Writes one JSON and one LaTeX file per flow (or only the requested format).
pub fn generate(cfg: &RunConfig) -> Result<u8, RunError> {
    let hier = build_hierarchy(cfg);
    let norm = serde_json::to_value(normalization(&hier)?).map_err(failed)?;
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let r = cfg.ctx.rank();
    for &n in &cfg.flows {
        let doc = FlowDoc::compute(&hier, n, cfg.degree)?;
        let stem = format!("flow_r{r}_n{n}");
        if matches!(cfg.format, None | Some(Format::Json)) {
            let mut v = doc.json(Some(cfg.degree));
            v["normalization"] = norm.clone();
            emit(Some(&dir), &format!("{stem}.json"), &pretty(&v))?;
        }
        if matches!(cfg.format, None | Some(Format::Latex)) {
            emit(Some(&dir), &format!("{stem}.tex"), &doc.latex())?;
        }
        if cfg.format == Some(Format::Csv) {
            emit(Some(&dir), &format!("{stem}.csv"), &csv_table(&[doc])?)?;
        }
    }
    Ok(0)
}

/// Runs the check suite and prints the report. Exit 1 iff any residual is nonzero.
pub fn check(cfg: &RunConfig) -> Result<u8, RunError> {
    if let Some(format @ (Format::Latex | Format::Csv)) = cfg.format {
        return Err(UsageError::Format { command: "check", format }.into());
    }
    let hier = build_hierarchy(cfg);
    let report = run_checks(&hier, &cfg.flows, cfg.degree, &cfg.checks).map_err(failed)?;
    let r = cfg.ctx.rank();
    if cfg.format == Some(Format::Json) {
        let v = serde_json::to_value(&report).map_err(failed)?;
        emit(cfg.out.as_deref(), &format!("check_r{r}.json"), &pretty(&v))?;
    } else {
        emit(cfg.out.as_deref(), &format!("check_r{r}.txt"), &report.to_text())?;
    }
    for item in report.failures() {
        log::error!("{} {} failed: {}", item.check, item.label, item.residual);
    }
    Ok(if report.passed() { 0 } else { 1 })
}

/// Integrates one flow, writes the trajectory CSV and the conservation report.
/// Exit 1 if any density drifts beyond the threshold.
pub fn simulate(cfg: &RunConfig) -> Result<u8, RunError> {
    if let Some(format) = cfg.format {
        return Err(UsageError::Format { command: "simulate", format }.into());
    }
    let hier = build_hierarchy(cfg);
    let n = cfg.flows[0];
    let r = cfg.ctx.rank();
    let flow = hier.flow(n, cfg.degree).map_err(failed)?;
    let eval = compile_rhs(&flow.rhs, cfg.grid_n, cfg.length).map_err(|e| UsageError::Numeric(e.to_string()))?;
    let s0 = GridState::from_profile(&cfg.profile, r, cfg.grid_n, cfg.length)
        .map_err(|e| UsageError::Numeric(e.to_string()))?;
    let traj = integrate(&s0, &eval, cfg.dt, cfg.steps, cfg.stride, Scheme::Rk4).map_err(failed)?;

    // Monitor H_k for every exponent k <= n.
    let mut densities = Vec::new();
    for k in (1..=n).filter(|&k| cfg.ctx.is_exponent(k as i64)) {
        let h = hamiltonian_density(&hier, k, k as i32 + 2).map_err(failed)?;
        densities.push((h.label(), h.value));
    }
    let report = monitor(&traj, &densities).map_err(failed)?;

    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let stem = format!("r{r}_n{n}");
    emit(Some(&dir), &format!("trajectory_{stem}.csv"), &traj.to_csv())?;
    let summary: Vec<_> = report
        .densities
        .iter()
        .map(|d| {
            json!({
                "density": d.density,
                "initial": d.initial,
                "final": d.final_value,
                "max_rel_drift": d.max_rel_drift,
                "relative": d.relative,
            })
        })
        .collect();
    let doc = json!({
        "algebra": cfg.ctx.name(),
        "flow": n,
        "grid_n": cfg.grid_n,
        "length": cfg.length,
        "dt": cfg.dt,
        "steps": cfg.steps,
        "profile": cfg.profile,
        "scheme": "rk4",
        "drift_threshold": cfg.drift_tol,
        "normalization": serde_json::to_value(normalization(&hier)?).map_err(failed)?,
        "densities": summary,
    });
    emit(Some(&dir), &format!("conservation_{stem}.json"), &pretty(&doc))?;

    let mut status = 0;
    for d in &report.densities {
        let ok = d.max_rel_drift < cfg.drift_tol;
        println!(
            "{} {}: initial {:.12e}, max drift {:.3e}{}",
            if ok { "ok  " } else { "FAIL" },
            d.density,
            d.initial,
            d.max_rel_drift,
            if d.relative { "" } else { " (absolute)" }
        );
        if !ok {
            status = 1;
        }
    }
    Ok(status)
}

/// Writes every requested flow as one document, or converts a stored flow file.
pub fn export(cfg: &RunConfig, input: Option<&Path>) -> Result<u8, RunError> {
    let format = cfg.format.unwrap_or(Format::Json);
    let r;
    let docs = match input {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| RunError::Read {
                path: path.to_path_buf(),
                source,
            })?;
            let value: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| RunError::Input(format!("{}: {e}", path.display())))?;
            let (rank, n, rhs) =
                FlowSpec::rhs_from_json(&value).map_err(|e| RunError::Input(format!("{}: {e}", path.display())))?;
            let ctx = AlgebraCtx::new(rank).map_err(|_| UsageError::Rank)?;
            if !ctx.is_exponent(n as i64) || rhs.len() != rank {
                return Err(RunError::Input(format!("{}: not a flow of {}", path.display(), ctx.name())));
            }
            let density = value["hamiltonian_density"]["terms"].clone();
            let density = match density {
                serde_json::Value::Null => None,
                v => Some(
                    DiffPoly::from_json_value(rank, &v)
                        .map_err(|e| RunError::Input(format!("{}: {e}", path.display())))?,
                ),
            };
            r = rank;
            vec![FlowDoc { ctx, n, rhs, density }]
        }
        None => {
            let hier = build_hierarchy(cfg);
            r = cfg.ctx.rank();
            cfg.flows
                .iter()
                .map(|&n| FlowDoc::compute(&hier, n, cfg.degree))
                .collect::<Result<Vec<_>, _>>()?
        }
    };
    let (ext, body) = match format {
        Format::Json => {
            let v = json!({
                "algebra": docs[0].ctx.name(),
                "normalization": Normalization::for_rank(r),
                "flows": docs.iter().map(|d| d.json(None)).collect::<Vec<_>>(),
            });
            ("json", pretty(&v))
        }
        Format::Latex => ("tex", docs.iter().map(FlowDoc::latex).collect::<Vec<_>>().join("\n")),
        Format::Csv => ("csv", csv_table(&docs)?),
    };
    emit(cfg.out.as_deref(), &format!("hierarchy_r{r}.{ext}"), &body)?;
    Ok(0)
}
