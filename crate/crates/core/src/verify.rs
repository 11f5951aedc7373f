//! Self-check: a handful of closed forms compared against the numerics.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::classical::{analytic_tc, build_master, recursion_residual, steady_state};
use crate::dynamics::{column_walk, walk_ensemble, walk_series, WalkEnsembleParams};
use crate::error::Result;
use crate::graph::{Family, Gluing, Graph, Layout};
use crate::hamiltonian::assemble_h0;
use crate::localdecay::short_time_pcol;
use crate::numerics::{PropagationOptions, C64};
use crate::scattering::{analytic_t_halfpi, clean_transmission_general_k, transmission};
use crate::spectral::closed_form_spectrum;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub tolerance: f64,
    pub deviation: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: impl Into<String>, tolerance: f64, deviation: f64) -> Self {
        Check {
            name: name.into(),
            tolerance,
            passed: deviation <= tolerance,
            deviation,
        }
    }
}

/// Deliberate corruption used to confirm the checks can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Moves one tree edge to the wrong parent before every graph-based check.
    CorruptAdjacency,
}

fn prepare(mut g: Graph, fault: Option<Fault>) -> Graph {
    if fault == Some(Fault::CorruptAdjacency) {
        // vertex 1 gives up its first child to the sibling subtree
        let child = g.column(2).start;
        let foreign = g.column(2).end - 1;
        g.rewire(1, child, foreign);
    }
    g
}

fn zeros(g: &Graph) -> Vec<f64> {
    vec![0.0; g.num_vertices()]
}

/// Runs every check. Deterministic; takes a few seconds.
pub fn run_checks(fault: Option<Fault>) -> Result<Vec<Check>> {
    let mut out = Vec::new();

    let mut worst = 0.0f64;
    for d in 1..=6 {
        let g = prepare(Graph::sgt(d)?, fault);
        let numeric = assemble_h0(&g, 1.0).spectrum()?.values;
        let closed = closed_form_spectrum(d, 1.0)?.expanded();
        if numeric.len() != closed.len() {
            worst = f64::INFINITY;
            continue;
        }
        for (a, b) in numeric.iter().zip(&closed) {
            worst = worst.max((a - b).abs());
        }
    }
    out.push(Check::new("SGT spectrum closed form, d = 1..6", 1e-10, worst));

    let g = prepare(Graph::sgt(6)?, fault);
    let zero = assemble_h0(&g, 1.0)
        .spectrum()?
        .values
        .iter()
        .filter(|e| e.abs() < 1e-8)
        .count();
    let expected = closed_form_spectrum(6, 1.0)?.multiplicity_at(0.0, 1e-12);
    out.push(Check::new(
        "E = 0 multiplicity, d = 6",
        0.0,
        (zero as f64 - expected as f64).abs(),
    ));

    let mut worst = 0.0f64;
    for d in 3..=6 {
        let g = prepare(Graph::mgt(d, Gluing::Regular)?, fault);
        let t = transmission(&g, &zeros(&g), FRAC_PI_2)?;
        worst = worst.max((t.amplitude - C64::new(analytic_t_halfpi(d, Layout::Mgt), 0.0)).norm());
        let s = prepare(Graph::sgt(d)?, fault);
        let t = transmission(&s, &zeros(&s), FRAC_PI_2)?;
        worst = worst.max((t.probability() - 1.0).abs());
    }
    out.push(Check::new("clean transmission at k = π/2", 1e-10, worst));

    let mut worst = 0.0f64;
    for (layout, g) in [
        (Layout::Mgt, Graph::mgt(4, Gluing::Random { seed: 11 })?),
        (Layout::Sgt, Graph::sgt(4)?),
    ] {
        let g = prepare(g, fault);
        for k in [0.4, 1.3, 2.2] {
            let a = clean_transmission_general_k(4, layout, k)?;
            let b = transmission(&g, &zeros(&g), k)?;
            worst = worst.max((a.amplitude - b.amplitude).norm());
            worst = worst.max((a.reflection - b.reflection).norm());
        }
    }
    out.push(Check::new("plane-wave ansatz vs resolvent", 1e-9, worst));

    let mut worst = 0.0f64;
    for d in [2, 5, 8] {
        for (lambda, lr) in [(0.3, 1.0), (2.0, 0.5)] {
            let sys = build_master(d, lambda, 1.0, lr, 1.0)?;
            let ss = steady_state(&sys)?;
            worst = worst.max((ss.transmission(&sys) - analytic_tc(d, lambda, 1.0, lr)?).abs());
            worst = worst.max(recursion_residual(&ss.p, d));
        }
    }
    out.push(Check::new("classical T_c closed form vs steady state", 1e-10, worst));

    let g = prepare(Graph::sgt(5)?, fault);
    let times = [0.0, 1.5, 4.0, 7.5];
    let opts = PropagationOptions {
        tol: 1e-12,
        ..Default::default()
    };
    let full = walk_series(&g, 1.0, &zeros(&g), &times, 0, &opts)?;
    let col = column_walk(5, Layout::Sgt, 1.0, &times, 0)?;
    let worst = full
        .p_hit
        .iter()
        .zip(&col.p_hit)
        .chain(full.depth.iter().zip(&col.depth))
        .chain(full.p_col.iter().zip(&col.p_col))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    out.push(Check::new("full walk stays in the column space", 1e-7, worst));

    // Leading order in t; the next term is O(t^4 W^2 (γ^2 + W^2)).
    let (d, w, t) = (6, 1.0, 0.1);
    let obs = walk_ensemble(&WalkEnsembleParams {
        depth: d,
        width: w,
        gamma: 1.0,
        realizations: 200,
        seed: 7,
        family: Family::Sgt,
        start_column: d,
        times: vec![t],
        propagation: PropagationOptions::default(),
    })?;
    let predicted = short_time_pcol(t, w, 1 << d);
    let tolerance = 3.0 * obs.p_col.stderr[0] + t.powi(4) * w * w * (1.0 + w * w);
    out.push(Check::new(
        "short-time p_col expansion, d = 6, W = 1",
        tolerance,
        (obs.p_col.mean[0] - predicted).abs(),
    ));

    Ok(out)
}

/// Renders checks as aligned `PASS`/`FAIL` lines.
pub fn report(checks: &[Check]) -> String {
    checks
        .iter()
        .map(|c| {
            format!(
                "{} {:<46} deviation {:.3e} (tolerance {:.1e})\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.deviation,
                c.tolerance
            )
        })
        .collect()
}
