// Copyright 2026 fqnv Contributors
// SPDX-License-Identifier: Apache-2.0

use std::io::Write;
use std::path::Path;

use fqnv::config::RunConfig;
use fqnv::eigen::{eigen_exact_resonant, eigen_numeric, eigen_perturbative};
use fqnv::estimate::run_pipeline;
use fqnv::fitting::{fit_lorentzian_points, fwhm_vs_power, PowerModel};
use fqnv::io::{read_spectrum_csv, write_fwhm_csv, write_spectrum_csv, write_sweep_csv};
use fqnv::master_eq::{converge_truncation, me_spectrum_with_diagnostics, HilbertLayout, SolveDiagnostics};
use fqnv::mhom::{mhom_spectrum, MhomParams, SampledEnsemble};
use fqnv::thom::thom_spectrum;
use fqnv::units::{apply_signal_map, ModelTag};
use fqnv::{Error, Freq, FrequencyGrid, Result, Spectrum, SystemParams};
use serde_json::{json, Value};

use crate::plot;
use crate::provenance::{Outputs, Provenance};
use crate::{Axis, Cli, Command, EigenMethod, Global};

struct Context {
    cfg: RunConfig,
    bytes: Vec<u8>,
}

impl Context {
    fn load(global: &Global) -> Result<Self> {
        let Some(path) = &global.config else {
            return Ok(Context { cfg: RunConfig::default(), bytes: Vec::new() });
        };
        let bytes = std::fs::read(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes).map_err(|e| Error::Config(format!("config is not UTF-8: {e}")))?;
        let mut cfg = RunConfig::from_json(text)?;
        if let (Some(seed), Some(ens)) = (global.seed, cfg.ensemble.as_mut()) {
            ens.seed = seed;
        }
        Ok(Context { cfg, bytes })
    }

    fn provenance(&self, uses_ensemble: bool) -> Provenance {
        let seed = if uses_ensemble { self.cfg.ensemble.map(|e| e.seed) } else { None };
        Provenance::new(&self.bytes, seed)
    }

    fn ensemble(&self) -> Result<SampledEnsemble> {
        SampledEnsemble::sample(self.cfg.ensemble()?)
    }
}

/// A model ready to evaluate spectra for varying system parameters.
enum Model {
    Thom,
    Mhom(SampledEnsemble),
    Me(HilbertLayout),
}

impl Model {
    fn new(ctx: &Context, tag: ModelTag) -> Result<Self> {
        Ok(match tag {
            ModelTag::Thom => Model::Thom,
            ModelTag::Mhom => Model::Mhom(ctx.ensemble()?),
            ModelTag::Me => Model::Me(ctx.cfg.layout()),
        })
    }

    fn tag(&self) -> ModelTag {
        match self {
            Model::Thom => ModelTag::Thom,
            Model::Mhom(_) => ModelTag::Mhom,
            Model::Me(_) => ModelTag::Me,
        }
    }

    fn spectrum(&self, p: &SystemParams, grid: &FrequencyGrid) -> Result<(Spectrum, Option<Value>)> {
        match self {
            Model::Thom => Ok((thom_spectrum(p, grid)?, None)),
            Model::Mhom(ens) => Ok((mhom_spectrum(ens, &MhomParams::from_system(p), grid)?, None)),
            Model::Me(layout) => {
                let m = me_spectrum_with_diagnostics(p, grid, layout)?;
                let summary = diagnostics_summary(&m.diagnostics, layout);
                Ok((m.spectrum, Some(summary)))
            }
        }
    }

    fn power_model(&self) -> PowerModel<'_> {
        match self {
            Model::Thom => PowerModel::Thom,
            Model::Mhom(ens) => PowerModel::Mhom(ens),
            Model::Me(layout) => PowerModel::Me(*layout),
        }
    }
}

fn diagnostics_summary(d: &[SolveDiagnostics], layout: &HilbertLayout) -> Value {
    let max = |f: fn(&SolveDiagnostics) -> f64| d.iter().map(f).fold(0.0, f64::max);
    json!({
        "layout": layout,
        "solves": d.len(),
        "all_within_tolerances": d.iter().all(SolveDiagnostics::within_tolerances),
        "max_trace_error": max(|d| d.trace_error),
        "max_hermiticity_error": max(|d| d.hermiticity_error),
        "min_eigenvalue": d.iter().map(|d| d.min_eigenvalue).fold(f64::INFINITY, f64::min),
        "max_residual": max(|d| d.residual),
    })
}

fn model_tag(ctx: &Context, arg: Option<crate::ModelArg>) -> ModelTag {
    arg.map(ModelTag::from).unwrap_or_else(|| ctx.cfg.model())
}

fn stdout(text: &str) -> Result<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn report(paths: &[std::path::PathBuf]) -> Result<()> {
    let text: String = paths.iter().map(|p| format!("{}\n", p.display())).collect();
    stdout(&text)
}

fn print_json(v: &Value) -> Result<()> {
    stdout(&format!("{}\n", serde_json::to_string_pretty(v)?))
}

pub fn run(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::PlotScript { csv, kind } => plot_script(g, csv, *kind),
        Command::FitLorentzian { input, window } => fit(g, input, window),
        other => {
            let ctx = Context::load(g)?;
            match other {
                Command::Simulate { model, lambda, power_dbm } => simulate(g, &ctx, *model, *lambda, *power_dbm),
                Command::Sweep { axis, values, model } => sweep(g, &ctx, *axis, values, *model),
                Command::Eigen { delta, method } => eigen(&ctx, *delta, *method),
                Command::Estimate => estimate(g, &ctx),
                Command::SweepPower { model, lambdas } => sweep_power(g, &ctx, *model, lambdas),
                Command::Convergence { start, max_levels } => convergence(g, &ctx, *start, *max_levels),
                Command::PlotScript { .. } | Command::FitLorentzian { .. } => unreachable!(),
            }
        }
    }
}

fn simulate(
    g: &Global,
    ctx: &Context,
    model: Option<crate::ModelArg>,
    lambda: Option<f64>,
    power_dbm: Option<f64>,
) -> Result<()> {
    let mut params = *ctx.cfg.system()?;
    if let Some(l) = lambda {
        params.lambda = Freq(l);
    }
    if let Some(p) = power_dbm {
        let cal = ctx
            .cfg
            .drive_calibration
            .ok_or_else(|| Error::Config("--power-dbm needs a drive_calibration section".into()))?;
        params.lambda = cal.lambda_at(p);
    }
    params.validate()?;
    let grid = ctx.cfg.grid()?;
    let model = Model::new(ctx, model_tag(ctx, model))?;
    let (mut spectrum, diagnostics) = model.spectrum(&params, &grid)?;
    if let Some(map) = ctx.cfg.signal_map {
        spectrum = apply_signal_map(&spectrum, map);
    }
    let mut out = Outputs::new(&g.out, ctx.provenance(model.tag() == ModelTag::Mhom));
    out.csv("spectrum.csv", |buf| write_spectrum_csv(buf, &spectrum))?;
    out.meta(
        "spectrum.meta.json",
        "simulate",
        json!({
            "model": model.tag(),
            "system": params,
            "grid": grid,
            "signal_map": ctx.cfg.signal_map,
            "ensemble": if model.tag() == ModelTag::Mhom { serde_json::to_value(ctx.cfg.ensemble)? } else { Value::Null },
            "me_diagnostics": diagnostics,
        }),
    )?;
    report(&out.commit()?)
}

fn sweep(g: &Global, ctx: &Context, axis: Axis, values: &[f64], model: Option<crate::ModelArg>) -> Result<()> {
    if values.len() < 2 {
        return Err(Error::Config(format!("a sweep needs at least 2 values, got {}", values.len())));
    }
    let base = *ctx.cfg.system()?;
    let grid = ctx.cfg.grid()?;
    let model = Model::new(ctx, model_tag(ctx, model))?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut diagnostics = Vec::new();
    for &v in values {
        let p = match axis {
            Axis::Power => base.with_lambda(Freq(v)),
            Axis::Detuning => base.with_detuning(Freq(v)),
        };
        match p.validate().and_then(|()| model.spectrum(&p, &grid)) {
            Ok((s, d)) => {
                rows.extend(s.frequencies().into_iter().zip(&s.values).map(|(w, e)| (v, w, *e)));
                if let Some(d) = d {
                    diagnostics.push(json!({ "axis_value": v, "diagnostics": d }));
                }
            }
            Err(e) => failures.push(json!({ "axis_value": v, "error": e.to_string() })),
        }
    }
    if failures.len() == values.len() {
        return Err(Error::SolverFailure(format!("every sweep point failed: {failures:?}")));
    }
    let axis_name = match axis {
        Axis::Power => "lambda",
        Axis::Detuning => "detuning",
    };
    let mut out = Outputs::new(&g.out, ctx.provenance(model.tag() == ModelTag::Mhom));
    out.csv("sweep.csv", |buf| write_sweep_csv(buf, &rows))?;
    out.meta(
        "sweep.meta.json",
        "sweep",
        json!({
            "axis": axis_name,
            "values": values,
            "model": model.tag(),
            "system": base,
            "grid": grid,
            "failures": failures,
            "me_diagnostics": diagnostics,
        }),
    )?;
    report(&out.commit()?)
}

fn eigen(ctx: &Context, delta: Option<f64>, method: EigenMethod) -> Result<()> {
    let params = *ctx.cfg.system()?;
    params.validate()?;
    let delta = delta.map(Freq).unwrap_or_else(|| params.detuning());
    let result = match method {
        EigenMethod::Numeric => eigen_numeric(&params, delta)?,
        EigenMethod::Perturbative => eigen_perturbative(&params, delta)?,
        EigenMethod::Exact => {
            if delta.0 != 0.0 {
                return Err(Error::Config("the exact method is only defined at zero detuning".into()));
            }
            eigen_exact_resonant(&params)
        }
    };
    let method = match method {
        EigenMethod::Numeric => "numeric",
        EigenMethod::Perturbative => "perturbative",
        EigenMethod::Exact => "exact",
    };
    print_json(&json!({
        "method": method,
        "delta": delta,
        "energies": result.energies,
        "qubit_weights": result.qubit_weights,
        "provenance": ctx.provenance(false),
    }))
}

fn estimate(g: &Global, ctx: &Context) -> Result<()> {
    let spec = *ctx.cfg.ensemble()?;
    let result = run_pipeline(&spec, ctx.cfg.estimate()?)?;
    let mut out = Outputs::new(&g.out, ctx.provenance(true));
    let doc = json!({ "result": result, "provenance": out.provenance() });
    let mut bytes = serde_json::to_vec_pretty(&doc)?;
    bytes.push(b'\n');
    out.raw(g.out.join("estimate.json"), bytes);
    out.meta("estimate.meta.json", "estimate", json!({ "ensemble": spec }))?;
    out.commit()?;
    print_json(&doc)
}

fn fit(g: &Global, input: &Path, window: &[f64]) -> Result<()> {
    let [lo, hi] = window else {
        return Err(Error::Config("--window takes exactly two values lo,hi".into()));
    };
    if !(lo < hi) {
        return Err(Error::Config(format!("window lower bound {lo} must be below upper bound {hi}")));
    }
    let file = std::fs::File::open(input).map_err(|e| Error::Config(format!("cannot open {}: {e}", input.display())))?;
    let table = read_spectrum_csv(file)?;
    let (x, y): (Vec<f64>, Vec<f64>) = table
        .frequencies
        .iter()
        .zip(&table.excitation)
        .filter(|(w, _)| **w >= *lo && **w <= *hi)
        .map(|(a, b)| (*a, *b))
        .unzip();
    let result = fit_lorentzian_points(&x, &y)?;
    let ctx = Context::load(g)?;
    print_json(&json!({
        "input": input.display().to_string(),
        "window": [lo, hi],
        "fit": result,
        "provenance": ctx.provenance(false),
    }))
}

fn sweep_power(g: &Global, ctx: &Context, model: Option<crate::ModelArg>, lambdas: &[f64]) -> Result<()> {
    let params = *ctx.cfg.system()?;
    let grid = ctx.cfg.grid()?;
    let model = Model::new(ctx, model_tag(ctx, model))?;
    let lambdas: Vec<Freq> = lambdas.iter().copied().map(Freq).collect();
    let points = fwhm_vs_power(&params, &lambdas, &grid, model.power_model())?;
    let mut out = Outputs::new(&g.out, ctx.provenance(model.tag() == ModelTag::Mhom));
    out.csv("fwhm.csv", |buf| write_fwhm_csv(buf, &points))?;
    out.meta(
        "fwhm.meta.json",
        "sweep-power",
        json!({ "model": model.tag(), "system": params, "grid": grid, "points": points }),
    )?;
    report(&out.commit()?)
}

fn plot_script(g: &Global, csv: &Path, kind: plot::PlotKind) -> Result<()> {
    let ctx = Context::load(g)?;
    let prov = ctx.provenance(false);
    let text = plot::script(csv, kind, &prov.comment("#"))?;
    let mut out = Outputs::new(csv.parent().unwrap_or(Path::new(".")), prov);
    out.raw(csv.with_extension("gp"), text.into_bytes());
    report(&out.commit()?)
}

fn convergence(g: &Global, ctx: &Context, start: usize, max_levels: usize) -> Result<()> {
    let params = *ctx.cfg.system()?;
    let grid = ctx.cfg.grid()?;
    let layout = HilbertLayout::uniform(start)?;
    let reports = converge_truncation(&params, &grid, &layout, max_levels)?;
    let mut out = Outputs::new(&g.out, ctx.provenance(false));
    let doc = json!({ "reports": reports, "provenance": out.provenance() });
    let mut bytes = serde_json::to_vec_pretty(&doc)?;
    bytes.push(b'\n');
    out.raw(g.out.join("convergence.json"), bytes);
    out.commit()?;
    print_json(&doc)
}
