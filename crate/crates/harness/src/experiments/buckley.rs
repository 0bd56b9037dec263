use rayon::prelude::*;
use sparsedom::{
    ap_constant, hl_maximal, mixed_norm, power_weight, CubeCollection, VectorFunction,
};

use super::domain;
use crate::config::Experiment;
use crate::corpus::{case_rng, random_step, Profile};
use crate::report::{Report, SweepRow};
use crate::{HarnessError, Result};

/// Least-squares slope of `y` against `x`.
pub fn least_squares_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len();
    let distinct = {
        let mut v = x.to_vec();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v.len()
    };
    if n != y.len() || distinct < 3 {
        return Err(HarnessError::Degenerate(
            "a slope fit needs at least three distinct points".into(),
        ));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    Ok(sxy / sxx)
}

/// Growth of `‖M‖_{L^p(w_a)}` with `[w_a]_{A_p}` for `w_a = |x|^a`, `M` over all intervals.
///
/// The ratio for each `a` is the supremum of `‖Mf‖/‖f‖` over a corpus of random
/// nonnegative steps, `χ_{[0,1/2)}` and `σ_b χ_{[0,1/2)}` for every sweep exponent `b`,
/// with `σ_b = |x|^{-b/(p-1)}`. Rows keep the maximising function of each `a`.
/// `slope[r=…]` is the least-squares slope of `log ratio` against `log [w_a]_{A_p}`.
pub fn run_buckley(e: &Experiment) -> Result<Report> {
    let p = e.p[0];
    let sweep = e.sweep();
    let mut corpus: Vec<(String, Profile)> = Vec::new();
    for &b in &sweep {
        corpus.push((
            format!("sigma-{b}"),
            Profile::Power {
                c: 1.0,
                e: -b / (p - 1.0),
                lo: 0.0,
                hi: 0.5,
            },
        ));
    }
    for c in 0..e.cases {
        corpus.push((
            format!("random-{c}"),
            random_step(&mut case_rng(e.seed, c), 0.0, 1.0),
        ));
    }
    let mut report = Report::new(e);
    let mut slope = f64::NAN;
    for &r in &e.resolutions {
        let d = domain(r)?;
        let all = CubeCollection::AllMeshAligned(d);
        let pairs = corpus
            .par_iter()
            .map(|(_, prof)| {
                let f = prof.sample(d);
                let mf = hl_maximal(&f, &all)?;
                Ok((VectorFunction::single(f), VectorFunction::single(mf)))
            })
            .collect::<Result<Vec<_>>>()?;
        let rows = sweep
            .par_iter()
            .map(|&a| {
                let w = power_weight(a, d)?;
                let ap = ap_constant(&w, p, &all)?;
                let mut best = (0.0, 1.0, 0.0, "");
                for ((label, _), (f, mf)) in corpus.iter().zip(&pairs) {
                    let num = mixed_norm(mf, p, 1.0, w.as_function())?;
                    let den = mixed_norm(f, p, 1.0, w.as_function())?;
                    if den > 0.0 && num / den > best.2 {
                        best = (num, den, num / den, label.as_str());
                    }
                }
                let mut row = SweepRow::new(e.kind, r, best.3, a, best.0, best.1);
                row.ap_multi = Some(ap);
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        let x: Vec<f64> = rows
            .iter()
            .map(|row| row.ap_multi.unwrap_or(1.0).ln())
            .collect();
        let y: Vec<f64> = rows.iter().map(|row| row.ratio.ln()).collect();
        slope = least_squares_slope(&x, &y)?;
        report.metric(format!("slope[r={r}]"), slope);
        report.rows.extend(rows);
    }
    report.metric("slope", slope);
    Ok(report)
}
