use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use trigbound_core::bounds::{
    bound_constant, opnorm_table, parse_ratio_range, prior_bounds, upper_bound_complex,
    write_opnorm_csv, PriorBound,
};
use trigbound_core::filterbank::{
    apply, certify_pr_with, design, design_with_synthesis, min_norm_synthesis, psnr,
    synthesis_residual, FilterBank, Init, ObjectiveParts, PrReport,
};
use trigbound_core::io::{self, BankFile, DesignConfig};
use trigbound_core::toeplitz::eigen_range_with;
use trigbound_core::{certify_positive, BoundConstant, BoundReport, EigenRange, Error};

use crate::{
    pgm, BoundArgs, CertifyArgs, Command, FbApplyArgs, FbCertifyArgs, FbDesignArgs, FigOpnormArgs,
    ToeplitzArgs, EXIT_NUMERICAL, EXIT_USAGE,
};

pub enum Outcome {
    Done,
    NotCertified,
}

pub fn exit_status(err: &Error) -> u8 {
    match err {
        Error::Argument(_) | Error::Precondition(_) | Error::Parse(_) | Error::Io(_) | Error::Json(_) => {
            EXIT_USAGE
        }
        Error::BarrierViolation { .. } | Error::SingularGram { .. } | Error::Numerical(_) => EXIT_NUMERICAL,
    }
}

/// Every JSON report: library version, resolved invocation, then the result.
#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    version: &'static str,
    config: &'a Command,
    #[serde(flatten)]
    report: T,
}

fn emit<T: Serialize>(config: &Command, report: T, out: Option<&Path>) -> Result<(), Error> {
    let envelope = Envelope {
        version: env!("CARGO_PKG_VERSION"),
        config,
        report,
    };
    let mut text = serde_json::to_string_pretty(&envelope)?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn require_file(path: &Path) -> Result<(), Error> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Argument(format!("{}: no such file", path.display())))
    }
}

fn require_parent(path: &Path) -> Result<(), Error> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => {
            Err(Error::Argument(format!("{}: no such directory", dir.display())))
        }
        _ => Ok(()),
    }
}

pub fn run(command: &Command) -> Result<Outcome, Error> {
    match command {
        Command::Bound(a) => bound(command, a),
        Command::Certify(a) => certify(command, a),
        Command::FigOpnorm(a) => fig_opnorm(a),
        Command::ToeplitzEig(a) => toeplitz_eig(command, a),
        Command::FbDesign(a) => fb_design(command, a),
        Command::FbCertify(a) => fb_certify(command, a),
        Command::FbApply(a) => fb_apply(command, a),
    }
}

#[derive(Serialize)]
struct ComplexBound {
    #[serde(rename = "N")]
    grid_size: usize,
    n: usize,
    d: usize,
    constant: BoundConstant,
    cnd: f64,
    max_abs: f64,
    upper_abs: f64,
}

#[derive(Serialize)]
#[serde(untagged)]
enum BoundOutput {
    Real {
        #[serde(flatten)]
        report: BoundReport,
        prior: BTreeMap<PriorBound, f64>,
    },
    Complex(ComplexBound),
}

fn bound(config: &Command, a: &BoundArgs) -> Result<Outcome, Error> {
    require_file(&a.poly)?;
    if let Some(out) = &a.out {
        require_parent(out)?;
    }
    let p = io::read_poly(&a.poly)?;
    let stats = p.sample_stats(a.grid_size)?;
    let output = if stats.is_real() {
        BoundOutput::Real {
            report: certify_positive(&stats, p.degree(), a.constant)?,
            prior: prior_bounds(&stats, p.degree()),
        }
    } else {
        BoundOutput::Complex(ComplexBound {
            grid_size: a.grid_size,
            n: p.degree(),
            d: p.dim(),
            constant: a.constant,
            cnd: bound_constant(a.grid_size, p.degree(), p.dim(), a.constant)?,
            max_abs: stats.max_abs,
            upper_abs: upper_bound_complex(&stats, p.degree(), a.constant)?,
        })
    };
    emit(config, output, a.out.as_deref())?;
    Ok(Outcome::Done)
}

fn certify(config: &Command, a: &CertifyArgs) -> Result<Outcome, Error> {
    require_file(&a.poly)?;
    let p = io::read_poly(&a.poly)?;
    let report = certify_positive(&p.sample_stats(a.grid_size)?, p.degree(), a.constant)?;
    let certified = report.certified_positive;
    emit(config, report, None)?;
    Ok(if certified { Outcome::Done } else { Outcome::NotCertified })
}

fn fig_opnorm(a: &FigOpnormArgs) -> Result<Outcome, Error> {
    if let Some(out) = &a.out {
        require_parent(out)?;
    }
    let rows = opnorm_table(a.n, &parse_ratio_range(&a.ratios)?)?;
    match &a.out {
        Some(path) => write_opnorm_csv(&rows, std::io::BufWriter::new(fs::File::create(path)?))?,
        None => write_opnorm_csv(&rows, std::io::stdout().lock())?,
    }
    Ok(Outcome::Done)
}

fn toeplitz_eig(config: &Command, a: &ToeplitzArgs) -> Result<Outcome, Error> {
    require_file(&a.generators)?;
    let spec = io::read_toeplitz(&a.generators)?;
    let range: EigenRange = eigen_range_with(&spec, a.grid_size, a.constant)?;
    emit(config, range, None)?;
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct DesignReport {
    bank: String,
    iterations: usize,
    final_objective: Option<f64>,
    parts: ObjectiveParts,
    restarts: usize,
    backtracks: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    synthesis: Option<SynthesisSummary>,
    certificate: PrReport,
}

#[derive(Serialize)]
struct SynthesisSummary {
    size: usize,
    residual_before_refit: f64,
    residual: f64,
    polished: bool,
    analysis_change: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    warning: Option<String>,
}

fn fb_design(config: &Command, a: &FbDesignArgs) -> Result<Outcome, Error> {
    require_file(&a.spec)?;
    require_parent(&a.out)?;
    if let Some(log) = &a.log {
        require_parent(log)?;
    }
    let cfg = DesignConfig::read(&a.spec)?;
    let base = a.spec.parent().unwrap_or(Path::new("."));
    let mut spec = cfg.to_spec(base)?;
    if let Some(iters) = a.iters {
        spec.iters = iters;
    }
    let init = match &a.init_bank {
        Some(path) => {
            require_file(path)?;
            Init::Bank(io::read_bank(path)?.analysis()?)
        }
        None => Init::Strategy(cfg.init),
    };
    let (bank, log, parts, restarts, backtracks, synthesis) = match a.synth_size {
        Some(q) => {
            let r = design_with_synthesis(&spec, init, q)?;
            if let Some(w) = &r.warning {
                eprintln!("trigbound: warning: {w}");
            }
            let summary = SynthesisSummary {
                size: q,
                residual_before_refit: r.residual_before_refit,
                residual: r.residual,
                polished: r.polished,
                analysis_change: r.analysis_change,
                warning: r.warning,
            };
            let file = BankFile::new(&r.analysis, Some(&r.synthesis));
            (file, r.log, r.parts, r.restarts, r.backtracks, Some(summary))
        }
        None => {
            let r = design(&spec, init)?;
            (BankFile::new(&r.bank, None), r.log, r.parts, r.restarts, r.backtracks, None)
        }
    };
    io::write_bank(&a.out, &bank)?;
    if let Some(path) = &a.log {
        let mut w = std::io::BufWriter::new(fs::File::create(path)?);
        writeln!(w, "iteration,objective")?;
        for (i, v) in log.iter().enumerate() {
            writeln!(w, "{},{v}", i + 1)?;
        }
    }
    let certificate = certify_pr_with(&bank.analysis()?, spec.grid_size, BoundConstant::Sharp)?;
    let report = DesignReport {
        bank: a.out.display().to_string(),
        iterations: log.len(),
        final_objective: log.last().copied(),
        parts,
        restarts,
        backtracks,
        synthesis,
        certificate,
    };
    emit(config, report, None)?;
    Ok(Outcome::Done)
}

fn fb_certify(config: &Command, a: &FbCertifyArgs) -> Result<Outcome, Error> {
    require_file(&a.bank)?;
    let fb = io::read_bank(&a.bank)?.analysis()?;
    let report = certify_pr_with(&fb, a.grid_size, a.constant)?;
    let certified = report.bound.certified_positive;
    emit(config, report, None)?;
    Ok(if certified { Outcome::Done } else { Outcome::NotCertified })
}

#[derive(Serialize)]
struct ApplyReport {
    rows: usize,
    cols: usize,
    bits: u8,
    synthesis: &'static str,
    psnr: f64,
    psnr_quantized: f64,
    max_residual: f64,
}

fn fb_apply(config: &Command, a: &FbApplyArgs) -> Result<Outcome, Error> {
    require_file(&a.bank)?;
    require_file(&a.image)?;
    if let Some(out) = &a.out {
        require_parent(out)?;
    }
    let file = io::read_bank(&a.bank)?;
    let fb: FilterBank = file.analysis()?;
    let img = pgm::read(&a.image)?;
    let (rows, cols) = img.pixels.dim();
    let s = fb.s();
    let (synthesis, source) = match file.synthesis()? {
        Some(g) => (g, "fir"),
        None => {
            let side = rows.max(cols).div_ceil(s) * s;
            (min_norm_synthesis(&fb, a.min_norm_grid.unwrap_or(side))?, "min_norm")
        }
    };
    let residual_grid = (4 * fb.size().max(synthesis.size())).max(16);
    let max_residual = synthesis_residual(&fb, &synthesis, residual_grid)?
        .iter()
        .copied()
        .fold(0.0, f64::max);
    let out = apply(&fb, &synthesis, &img.pixels)?;
    let quantized = pgm::quantize(&out.reconstruction, img.bits);
    if let Some(path) = &a.out {
        pgm::write(path, &out.reconstruction, img.bits)?;
    }
    let report = ApplyReport {
        rows,
        cols,
        bits: img.bits,
        synthesis: source,
        psnr: out.psnr,
        psnr_quantized: psnr(&img.pixels, &quantized)?,
        max_residual,
    };
    emit(config, report, None)?;
    Ok(Outcome::Done)
}
