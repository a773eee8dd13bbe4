//! CSV emission for the experiment outputs.
//!
//! Every file starts with `#`-prefixed metadata lines (the resolved
//! configuration and the conventions the numbers depend on), then a mandatory
//! header row. Floats are written with 17 significant digits so re-reading
//! reproduces them exactly.

use std::io::Write;

use crate::error::{Error, Result};
use crate::float::Float;
use crate::harness::{AmlLoopResult, RocCurve, RocPoint, Rule, TailComparison};

/// 17-significant-digit float formatting used in every CSV cell.
pub fn fmt_float<F: Float>(x: F) -> String {
    format!("{:.16e}", x.as_f64())
}

fn write_metadata(w: &mut impl Write, metadata: &[String]) -> Result<()> {
    for line in metadata {
        writeln!(w, "# {line}")?;
    }
    Ok(())
}

/// `rule,gamma,pfa,pd,pfa_se,pd_se`
pub fn write_roc_csv<F: Float>(
    w: &mut impl Write,
    curves: &[RocCurve<F>],
    metadata: &[String],
) -> Result<()> {
    write_metadata(w, metadata)?;
    writeln!(w, "rule,gamma,pfa,pd,pfa_se,pd_se")?;
    for curve in curves {
        for p in &curve.points {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                curve.rule.name(),
                fmt_float(p.gamma),
                fmt_float(p.pfa),
                fmt_float(p.pd),
                fmt_float(p.pfa_se),
                fmt_float(p.pd_se)
            )?;
        }
    }
    Ok(())
}

/// Parse a ROC CSV back into curves (metadata lines are skipped).
pub fn read_roc_csv<F: Float>(text: &str) -> Result<Vec<RocCurve<F>>> {
    let mut curves: Vec<RocCurve<F>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.starts_with('#') || line.trim().is_empty() || line.starts_with("rule,") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::Config(format!(
                "roc csv line {line_no}: expected 6 fields, got {}",
                fields.len()
            )));
        }
        let rule = Rule::parse(fields[0]).ok_or_else(|| {
            Error::Config(format!("roc csv line {line_no}: unknown rule `{}`", fields[0]))
        })?;
        let mut nums = [0.0f64; 5];
        for (i, f) in fields[1..].iter().enumerate() {
            nums[i] = f.parse::<f64>().map_err(|_| {
                Error::Config(format!("roc csv line {line_no}: bad float `{f}`"))
            })?;
        }
        let point = RocPoint {
            gamma: F::of(nums[0]),
            pfa: F::of(nums[1]),
            pd: F::of(nums[2]),
            pfa_se: F::of(nums[3]),
            pd_se: F::of(nums[4]),
        };
        match curves.last_mut() {
            Some(c) if c.rule == rule => c.points.push(point),
            _ => curves.push(RocCurve {
                rule,
                points: vec![point],
            }),
        }
    }
    Ok(curves)
}

/// `hypothesis,z,empirical_tail,bound`
pub fn write_bounds_csv<F: Float>(
    w: &mut impl Write,
    rows: &[TailComparison<F>],
    metadata: &[String],
) -> Result<()> {
    write_metadata(w, metadata)?;
    writeln!(w, "hypothesis,z,empirical_tail,bound")?;
    for row in rows {
        writeln!(
            w,
            "{},{},{},{}",
            row.hypothesis,
            fmt_float(row.z),
            fmt_float(row.empirical),
            fmt_float(row.bound)
        )?;
    }
    Ok(())
}

/// One row per `(d1, cluster)` of an allocation sweep:
/// `d1,cluster,p_m,achieved_md,saving_pct`. The literal per-cluster saving
/// column is appended only on request.
pub struct PowerSweepRow<F> {
    pub d1: F,
    pub cluster: usize,
    pub p_m: F,
    pub achieved_md: F,
    pub saving_pct: F,
    pub saving_pct_literal: Option<F>,
}

pub fn write_power_csv<F: Float>(
    w: &mut impl Write,
    rows: &[PowerSweepRow<F>],
    metadata: &[String],
) -> Result<()> {
    write_metadata(w, metadata)?;
    let literal = rows.iter().any(|r| r.saving_pct_literal.is_some());
    if literal {
        writeln!(w, "d1,cluster,p_m,achieved_md,saving_pct,saving_pct_literal")?;
    } else {
        writeln!(w, "d1,cluster,p_m,achieved_md,saving_pct")?;
    }
    for r in rows {
        write!(
            w,
            "{},{},{},{},{}",
            fmt_float(r.d1),
            r.cluster,
            fmt_float(r.p_m),
            fmt_float(r.achieved_md),
            fmt_float(r.saving_pct)
        )?;
        if literal {
            writeln!(
                w,
                ",{}",
                fmt_float(r.saving_pct_literal.unwrap_or(F::zero()))
            )?;
        } else {
            writeln!(w)?;
        }
    }
    Ok(())
}

/// `round,cluster,lambda1_hat,p_m,statistic,decision`
pub fn write_aml_csv<F: Float>(
    w: &mut impl Write,
    result: &AmlLoopResult<F>,
    metadata: &[String],
) -> Result<()> {
    write_metadata(w, metadata)?;
    if !result.fallback_rounds.is_empty() {
        let rounds: Vec<String> = result.fallback_rounds.iter().map(|r| r.to_string()).collect();
        writeln!(
            w,
            "# infeasible allocation fell back to equal powers after rounds: {}",
            rounds.join(",")
        )?;
    }
    writeln!(w, "round,cluster,lambda1_hat,p_m,statistic,decision")?;
    for round in &result.rounds {
        for (m, (&lh, &pm)) in round.lambda1_hat.iter().zip(&round.powers).enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                round.round,
                m,
                fmt_float(lh),
                fmt_float(pm),
                fmt_float(round.statistic),
                u8::from(round.decision)
            )?;
        }
    }
    Ok(())
}
