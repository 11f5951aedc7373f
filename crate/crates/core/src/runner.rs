//! Experiment runner: resolves a configuration, computes the result bundle
//! and writes it to disk.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::PathBuf;
use std::time::Instant;

use crate::classical::{analytic_tc, build_master, steady_state, tc_of_disorder};
use crate::config::{Counts, ExperimentConfig, ExperimentKind, Grid};
use crate::dynamics::{
    clean_peak, default_time_grid, hit_decay_prediction, linspace, max_depth_sweep, walk_ensemble, MaxDepthParams,
    WalkEnsembleParams, WalkObservables,
};
use crate::ensemble::with_workers;
use crate::error::{Error, Result};
use crate::graph::{Family, Graph};
use crate::hamiltonian::assemble_h0;
use crate::localdecay::{decay_generator, model_observables, short_time_pcol};
use crate::numerics::PropagationOptions;
use crate::output::{num, version, write_bundle, Bundle, Heatmap, LinePlot, Manifest, Series, Table, OUTPUT_ENV};
use crate::scattering::{classical_fit_overlay, fit_classical, transmission_sweep, TransmissionSweepParams};
use crate::spectral::{
    band_center_ipr_sweep, closed_form_spectrum, crossing_point, ipr_phase_diagram, BandCenter, PhaseDiagramParams,
    SweepParams,
};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    /// Worker threads; `None` uses every core.
    pub workers: Option<usize>,
    /// Overrides the configured output directory.
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub dir: PathBuf,
    pub bundle: Bundle,
    pub manifest: Manifest,
}

/// Fills in every default for the configured experiment kind.
pub fn resolve(config: &ExperimentConfig) -> Result<ExperimentConfig> {
    config.validate()?;
    let kind = config.kind()?;
    let mut c = config.clone();
    c.gamma.get_or_insert(1.0);
    let range = |start: f64, stop: f64, step: f64| Grid::Range { start, stop, step };
    let single_depth = |c: &mut ExperimentConfig, default: usize| -> Result<()> {
        if c.d.is_none() {
            c.d = Some(match c.depths.as_deref() {
                Some([d]) => *d,
                Some(_) => return Err(Error::config("depths", format!("{kind} takes a single depth `d`"))),
                None => default,
            });
        }
        c.depths = None;
        Ok(())
    };
    let depth_list = |c: &mut ExperimentConfig, default: Vec<usize>| {
        if c.depths.is_none() {
            c.depths = Some(c.d.map(|d| vec![d]).unwrap_or(default));
        }
        c.d = None;
    };
    match kind {
        ExperimentKind::Spectrum => depth_list(&mut c, (1..=7).collect()),
        ExperimentKind::IprPhase => {
            single_depth(&mut c, 6)?;
            c.widths.get_or_insert(range(0.0, 30.0, 2.0));
            c.realizations.get_or_insert(Counts::One(50));
            c.delta_e.get_or_insert(0.15);
            c.family.get_or_insert(Family::MgtRandom);
        }
        ExperimentKind::IprCenter => {
            depth_list(&mut c, vec![5, 6, 7]);
            c.widths.get_or_insert(range(1.0, 30.0, 1.0));
            c.realizations.get_or_insert(Counts::Many(vec![125, 60, 30]));
            if c.band_window.is_none() {
                c.band_rank.get_or_insert(100);
            }
            c.family.get_or_insert(Family::MgtRandom);
        }
        ExperimentKind::Dynamics | ExperimentKind::LocalDecay => {
            single_depth(&mut c, 10)?;
            let widths = if kind == ExperimentKind::Dynamics {
                vec![0.0, 0.4, 0.8, 1.2]
            } else {
                vec![0.4, 0.8, 1.2]
            };
            c.widths.get_or_insert(Grid::List(widths));
            let r = if kind == ExperimentKind::Dynamics { 10 } else { 20 };
            c.realizations.get_or_insert(Counts::One(r));
            c.family.get_or_insert(Family::Sgt);
            if c.times.is_none() {
                c.time_points.get_or_insert(300);
            }
            c.start_column.get_or_insert(0);
            c.tol.get_or_insert(crate::numerics::DEFAULT_PROPAGATION_TOL);
        }
        ExperimentKind::MaxDepth => {
            depth_list(&mut c, vec![6, 8, 10]);
            c.widths.get_or_insert(range(0.0, 20.0, 1.0));
            c.realizations.get_or_insert(Counts::Many(vec![40, 20, 10]));
            c.family.get_or_insert(Family::Sgt);
            c.time_points.get_or_insert(300);
            c.tol.get_or_insert(crate::numerics::DEFAULT_PROPAGATION_TOL);
        }
        ExperimentKind::Scattering => {
            single_depth(&mut c, 5)?;
            c.widths.get_or_insert(range(0.0, 6.0, 0.5));
            c.realizations.get_or_insert(Counts::One(20));
            c.family.get_or_insert(Family::MgtRandom);
            if c.momenta.is_none() {
                c.k_points.get_or_insert(50);
            }
            c.fit_t0.get_or_insert(0.8);
            c.fit_c.get_or_insert(0.2);
        }
        ExperimentKind::Classical => {
            single_depth(&mut c, 6)?;
            c.widths.get_or_insert(range(0.0, 10.0, 0.25));
            c.fit_t0.get_or_insert(0.8);
            c.fit_c.get_or_insert(0.2);
        }
    }
    c.validate()?;
    Ok(c)
}

fn one_count(c: &ExperimentConfig) -> Result<usize> {
    match c.realizations.as_ref() {
        Some(Counts::One(n)) => Ok(*n),
        Some(Counts::Many(v)) if v.len() == 1 => Ok(v[0]),
        _ => Err(Error::config("realizations", "expected a single count")),
    }
}

fn counts(c: &ExperimentConfig, depths: usize) -> Result<Vec<usize>> {
    c.realizations
        .as_ref()
        .ok_or_else(|| Error::config("realizations", "missing"))?
        .per_depth(depths)
        .map_err(|m| Error::config("realizations", m))
}

fn widths(c: &ExperimentConfig) -> Vec<f64> {
    c.widths.as_ref().map(Grid::values).unwrap_or_default()
}

fn times(c: &ExperimentConfig, d: usize) -> Vec<f64> {
    match (&c.times, c.time_points) {
        (Some(g), _) => g.values(),
        (None, Some(n)) => default_time_grid(d, c.gamma.unwrap_or(1.0), n),
        (None, None) => default_time_grid(d, c.gamma.unwrap_or(1.0), 300),
    }
}

/// Default momentum grid: cell midpoints `(i + 1/2)π/n`.
pub fn momentum_grid(points: usize) -> Vec<f64> {
    (0..points).map(|i| (i as f64 + 0.5) * PI / points as f64).collect()
}

fn propagation(c: &ExperimentConfig) -> PropagationOptions {
    PropagationOptions {
        tol: c.tol.unwrap_or(crate::numerics::DEFAULT_PROPAGATION_TOL),
        ..Default::default()
    }
}

/// Computes the data files of a resolved configuration. Pure in
/// `(config, seed)`: the result does not depend on the worker count.
pub fn compute(c: &ExperimentConfig) -> Result<Bundle> {
    let mut b = Bundle::default();
    b.add("config.toml", c.to_toml()?);
    match c.kind()? {
        ExperimentKind::Spectrum => spectrum(c, &mut b)?,
        ExperimentKind::IprPhase => ipr_phase(c, &mut b)?,
        ExperimentKind::IprCenter => ipr_center(c, &mut b)?,
        ExperimentKind::Dynamics => dynamics(c, &mut b)?,
        ExperimentKind::LocalDecay => local_decay(c, &mut b)?,
        ExperimentKind::MaxDepth => max_depth(c, &mut b)?,
        ExperimentKind::Scattering => scattering(c, &mut b)?,
        ExperimentKind::Classical => classical(c, &mut b)?,
    }
    Ok(b)
}

/// Output directory: explicit option, then the config, then
/// `$TREEWALK_OUT/<kind>-seed<seed>`, then `results/<kind>-seed<seed>`.
pub fn output_dir(c: &ExperimentConfig, opts: &RunOptions) -> Result<PathBuf> {
    if let Some(p) = opts.output.clone().or_else(|| c.output.clone()) {
        return Ok(p);
    }
    let root = std::env::var_os(OUTPUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("results"));
    Ok(root.join(format!("{}-seed{}", c.kind()?, c.seed()?)))
}

pub fn run(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunReport> {
    let resolved = resolve(config)?;
    let dir = output_dir(&resolved, opts)?;
    let start = Instant::now();
    let (bundle, workers) = with_workers(opts.workers, || compute(&resolved).map(|b| (b, rayon::current_num_threads())))?;
    let manifest = Manifest {
        program: "treewalk",
        version: version(),
        kind: resolved.kind()?.to_string(),
        seed: resolved.seed()?,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        workers,
        files: bundle.files.iter().map(|f| f.0.clone()).collect(),
    };
    let dir = write_bundle(&dir, &bundle, &manifest)?;
    Ok(RunReport { dir, bundle, manifest })
}

fn spectrum(c: &ExperimentConfig, b: &mut Bundle) -> Result<()> {
    let mut levels = Table::new(&["depth", "index", "closed_form", "numeric", "deviation"]);
    let mut summary = Table::new(&[
        "depth",
        "vertices",
        "max_deviation",
        "zero_multiplicity_closed_form",
        "zero_multiplicity_numeric",
    ]);
    let mut series = Vec::new();
    for &d in c.depths.as_deref().unwrap_or(&[]) {
        let closed = closed_form_spectrum(d, c.gamma.unwrap_or(1.0))?.expanded();
        let g = Graph::sgt(d)?;
        let numeric = assemble_h0(&g, c.gamma.unwrap_or(1.0)).spectrum()?.values;
        let mut worst = 0.0f64;
        for (i, (a, n)) in closed.iter().zip(&numeric).enumerate() {
            worst = worst.max((a - n).abs());
            levels.push(vec![d.to_string(), i.to_string(), num(*a), num(*n), num((a - n).abs())]);
        }
        summary.push(vec![
            d.to_string(),
            g.num_vertices().to_string(),
            num(worst),
            closed.iter().filter(|e| **e == 0.0).count().to_string(),
            numeric.iter().filter(|e| e.abs() < 1e-8).count().to_string(),
        ]);
        let x: Vec<f64> = (0..numeric.len()).map(|i| i as f64 / numeric.len() as f64).collect();
        series.push(Series::markers(format!("d = {d}"), x, numeric, None));
    }
    b.add_table("spectrum.csv", &levels)?;
    b.add_table("summary.csv", &summary)?;
    b.add(
        "spectrum.svg",
        LinePlot {
            title: "Clean SGT spectrum".into(),
            x_label: "eigenvalue rank / N".into(),
            y_label: "E / γ".into(),
            log_y: false,
            series,
        }
        .to_svg(),
    );
    Ok(())
}

fn ipr_phase(c: &ExperimentConfig, b: &mut Bundle) -> Result<()> {
    let table = ipr_phase_diagram(&PhaseDiagramParams {
        depth: c.d.unwrap_or(6),
        widths: widths(c),
        half_width: c.delta_e.unwrap_or(0.15),
        realizations: one_count(c)?,
        seed: c.seed()?,
        family: c.family.unwrap_or(Family::MgtRandom),
    })?;
    let mut t = Table::new(&["E", "W", "mean_I2", "stderr", "n_realizations"]);
    for cell in &table.cells {
        t.push(vec![
            num(cell.energy),
            num(cell.width),
            num(cell.mean),
            num(cell.stderr),
            cell.realizations.to_string(),
        ]);
    }
    b.add_table("ipr_phase.csv", &t)?;
    b.add(
        "ipr_phase.svg",
        Heatmap {
            title: format!("Averaged I2, d = {}, ΔE = {}", c.d.unwrap_or(6), table.half_width),
            x_label: "W / γ".into(),
            y_label: "E / γ".into(),
            cells: table.cells.iter().map(|c| (c.width, c.energy, c.mean)).collect(),
        }
        .to_svg(),
    );
    Ok(())
}

fn band(c: &ExperimentConfig) -> BandCenter {
    match (c.band_window, c.band_rank) {
        (Some(w), _) => BandCenter::EnergyWindow(w),
        (None, Some(n)) => BandCenter::MiddleRank(n),
        (None, None) => BandCenter::default(),
    }
}

fn ipr_center(c: &ExperimentConfig, b: &mut Bundle) -> Result<()> {
    let depths = c.depths.clone().unwrap_or_default();
    let ws = widths(c);
    let rows = band_center_ipr_sweep(&SweepParams {
        depths: depths.clone(),
        widths: ws.clone(),
        realizations: counts(c, depths.len())?,
        seed: c.seed()?,
        family: c.family.unwrap_or(Family::MgtRandom),
        band: band(c),
    })?;
    let mut t = Table::new(&["depth", "W", "mean_I2", "stderr", "n_realizations"]);
    for r in &rows {
        t.push(vec![
            r.depth.to_string(),
            num(r.width),
            num(r.mean),
            num(r.stderr),
            r.realizations.to_string(),
        ]);
    }
    b.add_table("ipr_center.csv", &t)?;
    let curve = |d: usize| rows.iter().filter(|r| r.depth == d).map(|r| r.mean).collect::<Vec<_>>();
    let mut x = Table::new(&["depth_a", "depth_b", "W_cross"]);
    for pair in depths.windows(2) {
        let w = crossing_point(&ws, &curve(pair[0]), &curve(pair[1])).unwrap_or(f64::NAN);
        x.push(vec![pair[0].to_string(), pair[1].to_string(), num(w)]);
    }
    b.add_table("crossings.csv", &x)?;
    let series = depths
        .iter()
        .map(|&d| {
            let err = rows.iter().filter(|r| r.depth == d).map(|r| r.stderr).collect();
            Series::markers(format!("d = {d}"), ws.clone(), curve(d), Some(err))
        })
        .collect();
    b.add(
        "ipr_center.svg",
        LinePlot {
            title: "Band-center I2".into(),
            x_label: "W / γ".into(),
            y_label: "I2".into(),
            log_y: false,
            series,
        }
        .to_svg(),
    );
    Ok(())
}

fn walk_params(c: &ExperimentConfig, w: f64, times: Vec<f64>, start_column: usize) -> Result<WalkEnsembleParams> {
    Ok(WalkEnsembleParams {
        depth: c.d.unwrap_or(10),
        width: w,
        gamma: c.gamma.unwrap_or(1.0),
        realizations: one_count(c)?,
        seed: c.seed()?,
        family: c.family.unwrap_or(Family::Sgt),
        start_column,
        times,
        propagation: propagation(c),
    })
}

fn series_rows(t: &mut Table, w: f64, obs: &WalkObservables) {
    for (i, time) in obs.times.iter().enumerate() {
        t.push(vec![
            num(w),
            num(*time),
            num(obs.p_hit.mean[i]),
            num(obs.p_hit.std[i]),
            num(obs.p_col.mean[i]),
            num(obs.p_col.std[i]),
            num(obs.avg_depth.mean[i]),
            num(obs.avg_depth.std[i]),
            obs.realizations.to_string(),
        ]);
    }
}

fn dynamics(c: &ExperimentConfig, b: &mut Bundle) -> Result<()> {
    let d = c.d.unwrap_or(10);
    let grid = times(c, d);
    let family = c.family.unwrap_or(Family::Sgt);
    let (t_peak, p_d) = clean_peak(d, family.layout(), c.gamma.unwrap_or(1.0), &default_time_grid(d, 1.0, 300))?;
    let mut series = Table::new(&[
        "W", "t", "p_hit_mean", "p_hit_std", "p_col_mean", "p_col_std", "r_mean", "r_std", "n",
    ]);
    let mut decay = Table::new(&[
        "W",
        "t_peak",
        "p_d",
        "p_hit_mean",
        "p_hit_std",
        "p_hit_stderr",
        "ratio",
        "predicted_ratio",
        "n",
    ]);
    let (mut hit, mut col, mut depth) = (Vec::new(), Vec::new(), Vec::new());
    for w in widths(c) {
        let obs = walk_ensemble(&walk_params(c, w, grid.clone(), c.start_column.unwrap_or(0))?)?;
        series_rows(&mut series, w, &obs);
        let peak = walk_ensemble(&walk_params(c, w, vec![t_peak], 0)?)?;
        decay.push(vec![
            num(w),
            num(t_peak),
            num(p_d),
            num(peak.p_hit.mean[0]),
            num(peak.p_hit.std[0]),
            num(peak.p_hit.stderr[0]),
            num(peak.p_hit.mean[0] / p_d),
            num(hit_decay_prediction(1.0, d, w)),
            peak.realizations.to_string(),
        ]);
        let label = format!("W = {w}");
        hit.push(Series::line(label.clone(), grid.clone(), obs.p_hit.mean.clone()));
        col.push(Series::line(label.clone(), grid.clone(), obs.p_col.mean.clone()));
        depth.push(Series::line(label, grid.clone(), obs.avg_depth.mean.clone()));
    }
    b.add_table("dynamics.csv", &series)?;
    b.add_table("decay.csv", &decay)?;
    for (name, title, y, s, log_y) in [
        ("p_hit.svg", "Hitting probability", "p_hit", hit, false),
        ("p_col.svg", "Column-space probability", "p_col", col, false),
        ("depth.svg", "Average depth", "r", depth, false),
    ] {
        b.add(
            name,
            LinePlot {
                title: format!("{title}, d = {d}"),
                x_label: "t γ".into(),
                y_label: y.into(),
                log_y,
                series: s,
            }
            .to_svg(),
        );
    }
    Ok(())
}

/// Fraction of grid times at which `model` lies within one standard
/// deviation of `mean`.
pub fn within_one_sd(model: &[f64], mean: &[f64], std: &[f64]) -> f64 {
    let hits = model
        .iter()
        .zip(mean)
        .zip(std)
        .filter(|((m, a), s)| (*m - *a).abs() <= **s)
        .count();
    hits as f64 / model.len().max(1) as f64
}

fn local_decay(c: &ExperimentConfig, b: &mut Bundle) -> Result<()> {
    let d = c.d.unwrap_or(10);
    let family = c.family.unwrap_or(Family::Sgt);
    let gamma = c.gamma.unwrap_or(1.0);
    let j0 = c.start_column.unwrap_or(0);
    let grid = times(c, d);
    let mut t = Table::new(&[
        "W", "t", "model", "p_hit_mean", "p_hit_std", "p_col_mean", "p_col_std", "n",
    ]);
    let mut fidelity = Table::new(&["W", "p_hit_within_1sd", "p_col_within_1sd"]);
    let mut short = Table::new(&["W", "t", "p_col_mean", "p_col_stderr", "expansion", "n"]);
    let mut plots = Vec::new();
    let short_grid = linspace(0.0, 0.5, 11);
    let middle = family.layout().num_columns(d) / 2;
    let n_mid = crate::graph::column_size(middle, d, family.layout())?;
    for w in widths(c) {
        let sim = walk_ensemble(&walk_params(c, w, grid.clone(), j0)?)?;
        let model = model_observables(&decay_generator(d, w, gamma, family.layout())?, j0, &grid)?;
        for (i, time) in grid.iter().enumerate() {
            for (flag, ph, phs, pc, pcs, n) in [
                (0, sim.p_hit.mean[i], sim.p_hit.std[i], sim.p_col.mean[i], sim.p_col.std[i], sim.realizations),
                (1, model.p_hit[i], 0.0, model.p_col[i], 0.0, 0),
            ] {
                t.push(vec![
                    num(w),
                    num(*time),
                    flag.to_string(),
                    num(ph),
                    num(phs),
                    num(pc),
                    num(pcs),
                    n.to_string(),
                ]);
            }
        }
        fidelity.push(vec![
            num(w),
            num(within_one_sd(&model.p_hit, &sim.p_hit.mean, &sim.p_hit.std)),
            num(within_one_sd(&model.p_col, &sim.p_col.mean, &sim.p_col.std)),
        ]);
        let early = walk_ensemble(&walk_params(c, w, short_grid.clone(), middle)?)?;
        for (i, time) in short_grid.iter().enumerate() {
            short.push(vec![
                num(w),
                num(*time),
                num(early.p_col.mean[i]),
                num(early.p_col.stderr[i]),
                num(short_time_pcol(*time, w, n_mid)),
                early.realizations.to_string(),
            ]);
        }
        plots.push(Series::markers(
            format!("simulation W = {w}"),
            grid.clone(),
            sim.p_hit.mean.clone(),
            Some(sim.p_hit.std.clone()),
        ));
        plots.push(Series::line(format!("model W = {w}"), grid.clone(), model.p_hit));
    }
    b.add_table("local_decay.csv", &t)?;
    b.add_table("fidelity.csv", &fidelity)?;
    b.add_table("short_time.csv", &short)?;
    b.add(
        "local_decay.svg",
        LinePlot {
            title: format!("Local decay model vs simulation, d = {d}"),
            x_label: "t γ".into(),
            y_label: "p_hit".into(),
            log_y: false,
            series: plots,
        }
        .to_svg(),
    );
    Ok(())
}

fn max_depth(c: &ExperimentConfig, b: &mut Bundle) -> Result<()> {
    let depths = c.depths.clone().unwrap_or_default();
    let ws = widths(c);
    let rows = max_depth_sweep(&MaxDepthParams {
        depths: depths.clone(),
        widths: ws.clone(),
        realizations: counts(c, depths.len())?,
        seed: c.seed()?,
        family: c.family.unwrap_or(Family::Sgt),
        points: c.time_points.unwrap_or(300),
        propagation: propagation(c),
    })?;
    let mut t = Table::new(&["depth", "W", "mean_max_r", "std", "stderr", "n"]);
    for r in &rows {
        t.push(vec![
            r.depth.to_string(),
            num(r.width),
            num(r.mean),
            num(r.std),
            num(r.stderr),
            r.realizations.to_string(),
        ]);
    }
    b.add_table("max_depth.csv", &t)?;
    let series = depths
        .iter()
        .map(|&d| {
            let sel: Vec<_> = rows.iter().filter(|r| r.depth == d).collect();
            Series::markers(
                format!("d = {d}"),
                ws.clone(),
                sel.iter().map(|r| r.mean / d as f64).collect(),
                Some(sel.iter().map(|r| r.std / d as f64).collect()),
            )
        })
        .collect();
    b.add(
        "max_depth.svg",
        LinePlot {
            title: "Maximum average depth for t < 3 t_hit".into(),
            x_label: "W / γ".into(),
            y_label: "max r / d".into(),
            log_y: false,
            series,
        }
        .to_svg(),
    );
    Ok(())
}

fn scattering(c: &ExperimentConfig, b: &mut Bundle) -> Result<()> {
    let d = c.d.unwrap_or(5);
    let ws = widths(c);
    let momenta = match &c.momenta {
        Some(g) => g.values(),
        None => momentum_grid(c.k_points.unwrap_or(50)),
    };
    let params = TransmissionSweepParams {
        depth: d,
        momenta: momenta.clone(),
        widths: ws.clone(),
        realizations: one_count(c)?,
        seed: c.seed()?,
        family: c.family.unwrap_or(Family::MgtRandom),
    };
    let cells = transmission_sweep(&params)?;
    let mut t = Table::new(&["k", "W", "mean_T", "std", "stderr", "n", "n_excluded"]);
    for cell in &cells {
        t.push(vec![
            num(cell.k),
            num(cell.width),
            num(cell.mean),
            num(cell.std),
            num(cell.stderr),
            cell.realizations.to_string(),
            cell.excluded.to_string(),
        ]);
    }
    b.add_table("transmission.csv", &t)?;
    b.add(
        "transmission.svg",
        Heatmap {
            title: format!("Transmission T, d = {d}"),
            x_label: "k".into(),
            y_label: "W / γ".into(),
            cells: cells.iter().map(|c| (c.k, c.width, c.mean)).collect(),
        }
        .to_svg(),
    );

    let half = transmission_sweep(&TransmissionSweepParams {
        momenta: vec![FRAC_PI_2],
        ..params
    })?;
    let (t0, cc) = (c.fit_t0.unwrap_or(0.8), c.fit_c.unwrap_or(0.2));
    let overlay = classical_fit_overlay(&ws, t0, cc);
    let tc = tc_of_disorder(d, &ws, c.gamma.unwrap_or(1.0))?;
    let mut h = Table::new(&["W", "mean_T", "stderr", "n", "n_excluded", "overlay", "classical_tc"]);
    for (i, cell) in half.iter().enumerate() {
        h.push(vec![
            num(cell.width),
            num(cell.mean),
            num(cell.stderr),
            cell.realizations.to_string(),
            cell.excluded.to_string(),
            num(overlay[i]),
            num(tc[i]),
        ]);
    }
    b.add_table("halfpi.csv", &h)?;
    let fit_pts: Vec<_> = half.iter().filter(|c| c.width >= 2.0 && c.stderr.is_finite()).collect();
    let mut f = Table::new(&["W_min", "W_max", "T0", "c", "chi2", "points"]);
    if fit_pts.len() >= 2 {
        let fit = fit_classical(
            &fit_pts.iter().map(|c| c.width).collect::<Vec<_>>(),
            &fit_pts.iter().map(|c| c.mean).collect::<Vec<_>>(),
            &fit_pts.iter().map(|c| c.stderr).collect::<Vec<_>>(),
        )?;
        f.push(vec![
            num(fit_pts[0].width),
            num(fit_pts[fit_pts.len() - 1].width),
            num(fit.t0),
            num(fit.c),
            num(fit.chi2),
            fit_pts.len().to_string(),
        ]);
    }
    b.add_table("fit.csv", &f)?;
    b.add(
        "halfpi.svg",
        LinePlot {
            title: format!("Transmission at k = π/2, d = {d}"),
            x_label: "W / γ".into(),
            y_label: "T".into(),
            log_y: false,
            series: vec![
                Series::markers(
                    "quantum",
                    ws.clone(),
                    half.iter().map(|c| c.mean).collect(),
                    Some(half.iter().map(|c| c.stderr).collect()),
                ),
                Series::line(format!("{t0}/(1+{cc}W²)"), ws.clone(), overlay),
                Series::line("classical T_c", ws, tc),
            ],
        }
        .to_svg(),
    );
    Ok(())
}

fn classical(c: &ExperimentConfig, b: &mut Bundle) -> Result<()> {
    let d = c.d.unwrap_or(6);
    let gamma = c.gamma.unwrap_or(1.0);
    let ws = widths(c);
    let analytic = tc_of_disorder(d, &ws, gamma)?;
    let overlay = classical_fit_overlay(&ws, c.fit_t0.unwrap_or(0.8), c.fit_c.unwrap_or(0.2));
    let mut t = Table::new(&["W", "tc_analytic", "tc_steady_state", "overlay"]);
    for (i, &w) in ws.iter().enumerate() {
        let solved = if w > 0.0 {
            let sys = build_master(d, gamma.powi(3) / (w * w), gamma, gamma, 1.0)?;
            steady_state(&sys)?.transmission(&sys)
        } else {
            f64::NAN
        };
        t.push(vec![num(w), num(analytic[i]), num(solved), num(overlay[i])]);
    }
    debug_assert!(analytic_tc(d, 1.0, 1.0, 1.0).is_ok());
    b.add_table("classical.csv", &t)?;
    b.add(
        "classical.svg",
        LinePlot {
            title: format!("Classical transmission, d = {d}"),
            x_label: "W / γ".into(),
            y_label: "T_c".into(),
            log_y: false,
            series: vec![
                Series::line("master equation", ws.clone(), analytic),
                Series::line("T0/(1+cW²) overlay", ws, overlay),
            ],
        }
        .to_svg(),
    );
    Ok(())
}
