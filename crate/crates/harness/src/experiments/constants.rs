use rayon::prelude::*;
use sparsedom::{ap_constant, CubeCollection};

use super::{domain, weight_constants, weight_system};
use crate::config::Experiment;
use crate::report::{Report, SweepRow};
use crate::{HarnessError, Result};

/// Weight constants of the sweep and the embedding `[w̄]_{A_P̄} ≤ Π_k [w_k]_{A_{p_k}}^{p/p_k}`.
///
/// Each row has `lhs = [w̄]_{A_P̄}` over all intervals and `rhs` the product.
pub fn run_constants(e: &Experiment) -> Result<Report> {
    if e.p.iter().any(|&p| p <= 1.0) {
        return Err(HarnessError::Degenerate(
            "constants needs every p_j > 1".into(),
        ));
    }
    let mut report = Report::new(e);
    for &r in &e.resolutions {
        let d = domain(r)?;
        let all = CubeCollection::AllMeshAligned(d);
        let shifted = CubeCollection::UnionOfShifted(d);
        let rows = e
            .sweep()
            .par_iter()
            .map(|&a| {
                let ws = weight_system(e, a, d)?;
                let c = weight_constants(&ws, &all, Some(&shifted))?;
                let p = ws.exponents().p();
                let mut rhs = 1.0;
                for (k, w) in ws.weights().iter().enumerate() {
                    let pk = ws.exponents().p_j(k);
                    rhs *= ap_constant(w, pk, &all)?.powf(p / pk);
                }
                Ok(SweepRow::new(e.kind, r, "sweep", a, c.ap_multi, rhs).with_constants(&c))
            })
            .collect::<Result<Vec<_>>>()?;
        report.rows.extend(rows);
    }
    let worst = report.rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    report.metric("max_embedding_ratio", worst);
    Ok(report)
}
