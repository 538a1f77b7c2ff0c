use num_complex::Complex64;
use serde::Serialize;
use tevp_core::diagnostics::{
    concentration_sweep, q_squared_scaling, symbol_check, variance_sweep, weyl_count_sweep, ConcentrationConfig,
    Multiplier, Symbol, SymbolOptions,
};
use tevp_core::geometry::harmonics::HarmonicIndex;
use tevp_core::geometry::{BoundarySurface, Point};
use tevp_core::layerpot::default_r_min;
use tevp_core::oracle::{exact_spectrum, nearest_root, radial_eigenvalues, RadialRoot};
use tevp_core::par::Execution;
use tevp_core::scatter::{invisibility_report, InvisibilityOptions, ScatterOptions};
use tevp_core::spectral::{
    build_with_perturbation, eig_window, exact_harmonic_mode, find_exact_eigenvalues, window_modes, SearchOptions,
    SystemOptions,
};

use crate::config::RunConfig;
use crate::error::Result;
use crate::output::{col, complex, Cell, EventRecord, Sink, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Eigs,
    Modes,
    Concentrate,
    Weyl,
    Variance,
    Symbols,
    Scatter,
    Oracle,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Eigs => "eigs",
            Command::Modes => "modes",
            Command::Concentrate => "concentrate",
            Command::Weyl => "weyl",
            Command::Variance => "variance",
            Command::Symbols => "symbols",
            Command::Scatter => "scatter",
            Command::Oracle => "oracle",
        }
    }
}

pub(crate) struct Context<'a> {
    pub cfg: &'a RunConfig,
    pub surface: BoundarySurface,
    pub exec: Execution,
}

impl Context<'_> {
    fn system_options(&self) -> SystemOptions {
        SystemOptions {
            path: self.cfg.options.path,
            cond_limit: self.cfg.options.cond_limit,
            exec: self.exec,
            ..SystemOptions::default()
        }
    }

    fn radial(&self) -> Option<f64> {
        self.surface.radius()
    }

    fn oracle_roots(&self, range: (f64, f64)) -> Result<Option<Vec<RadialRoot>>> {
        self.oracle_roots_to(range, self.cfg.options.oracle_max_order)
    }

    fn oracle_roots_to(&self, range: (f64, f64), max_order: usize) -> Result<Option<Vec<RadialRoot>>> {
        match self.radial() {
            Some(a) => Ok(Some(radial_eigenvalues(
                self.surface.dim(),
                a,
                self.cfg.q,
                range,
                0..=max_order,
                None,
            )?)),
            None => Ok(None),
        }
    }
}

pub(crate) fn dispatch(cmd: Command, ctx: &Context<'_>, sink: &mut Sink) -> Result<()> {
    match cmd {
        Command::Eigs => eigs(ctx, sink),
        Command::Modes => modes(ctx, sink),
        Command::Concentrate => concentrate(ctx, sink),
        Command::Weyl => weyl(ctx, sink),
        Command::Variance => variance(ctx, sink),
        Command::Symbols => symbols(ctx, sink),
        Command::Scatter => scatter(ctx, sink),
        Command::Oracle => oracle(ctx, sink),
    }
}

fn eigs(ctx: &Context<'_>, sink: &mut Sink) -> Result<()> {
    let range = ctx.cfg.eig_range();
    let opts = SearchOptions {
        resolution: ctx.cfg.resolution,
        cond_limit: ctx.cfg.options.cond_limit,
        exec: ctx.exec,
        ..SearchOptions::default()
    };
    let search = find_exact_eigenvalues(&ctx.surface, ctx.cfg.q, range, &opts)?;
    for e in &search.events {
        sink.event(EventRecord::from_sweep(e));
    }
    // match every order the search found, not only the configured scan
    let top = search.eigenvalues.iter().filter_map(|e| e.order).max().unwrap_or(0);
    let roots = ctx.oracle_roots_to(range, top.max(ctx.cfg.options.oracle_max_order))?;
    let mut t = Table::new(vec![
        col("kappa", "1/length"),
        col("order", "1"),
        col("multiplicity", "1"),
        col("sigma_min", "1"),
        col("oracle_kappa", "1/length"),
        col("oracle_distance", "1/length"),
    ]);
    for e in &search.eigenvalues {
        let matched = roots.as_ref().and_then(|r| {
            let same: Vec<RadialRoot> = r.iter().filter(|x| Some(x.order) == e.order).cloned().collect();
            nearest_root(if same.is_empty() { r } else { &same }, e.kappa)
        });
        t.push(vec![
            e.kappa.into(),
            e.order.map_or(Cell::Empty, Cell::from),
            e.multiplicity.into(),
            e.sigma.into(),
            matched.as_ref().map(|m| m.0.kappa).into(),
            matched.as_ref().map(|m| m.1).into(),
        ]);
    }
    sink.csv("eigs.csv", &t)
}

/// Concentric scaled copies of `∂D` at `(j + ½)/rings`, plus the origin.
fn field_grid(surface: &BoundarySurface, rings: usize) -> Vec<Point> {
    let mut pts = vec![[0.0; 3]];
    let stride = (surface.len() / 256).max(1);
    for j in 0..rings {
        let s = (j as f64 + 0.5) / rings as f64;
        for y in surface.nodes.iter().step_by(stride) {
            pts.push([s * y[0], s * y[1], s * y[2]]);
        }
    }
    pts
}

fn grad_norm(g: &[Complex64; 3]) -> f64 {
    g.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn modes(ctx: &Context<'_>, sink: &mut Sink) -> Result<()> {
    let opts = ctx.system_options();
    let grid = field_grid(&ctx.surface, ctx.cfg.options.rings);
    let dim = ctx.surface.dim();
    let mut summary = Table::new(vec![
        col("kappa", "1/length"),
        col("mode", "1"),
        col("lambda", "1"),
        col("order", "1"),
        col("file", "path"),
    ]);
    for (ki, &kappa) in ctx.cfg.kappas().iter().enumerate() {
        let mut events = Vec::new();
        let built = build_with_perturbation(&ctx.surface, kappa, ctx.cfg.q, &opts, ctx.cfg.options.perturbation, &mut events);
        for e in &events {
            sink.event(EventRecord::from_sweep(e));
        }
        let sys = built?;
        sink.event(EventRecord::calibration(sys.kappa, sys.calibration.residual));
        let set = eig_window(&sys, ctx.cfg.epsilon)?;
        let modes = window_modes(&sys, &set)?;
        for (mi, mode) in modes.iter().take(ctx.cfg.options.max_modes).enumerate() {
            let mut cols = vec![col("x", "length"), col("y", "length")];
            if dim == 3 {
                cols.push(col("z", "length"));
            }
            cols.extend([
                col("re_u", "1"),
                col("im_u", "1"),
                col("re_v", "1"),
                col("im_v", "1"),
                col("abs_grad_u", "1/length"),
                col("abs_grad_v", "1/length"),
            ]);
            let mut t = Table::new(cols);
            // dense fields are plain quadrature; stay clear of the boundary layer
            let pts: Vec<Point> = if mode.harmonic().is_some() {
                grid.clone()
            } else {
                let r_min = default_r_min(&ctx.surface);
                grid.iter().copied().filter(|p| ctx.surface.distance_to(p) >= r_min).collect()
            };
            for (p, f) in pts.iter().zip(mode.eval(&pts)?) {
                let mut row: Vec<Cell> = p[..dim].iter().map(|x| Cell::F(*x)).collect();
                row.extend(complex(f.u));
                row.extend(complex(f.v));
                row.push(grad_norm(&f.grad_u).into());
                row.push(grad_norm(&f.grad_v).into());
                t.push(row);
            }
            let name = format!("mode_k{ki:03}_m{mi:03}.csv");
            sink.csv(&name, &t)?;
            summary.push(vec![
                sys.kappa.into(),
                mi.into(),
                mode.lambda.into(),
                mode.harmonic().map_or(Cell::Empty, |h| h.index.order.into()),
                name.as_str().into(),
            ]);
        }
    }
    sink.csv("modes.csv", &summary)
}

fn concentrate(ctx: &Context<'_>, sink: &mut Sink) -> Result<()> {
    let mut config = ConcentrationConfig {
        q: ctx.cfg.q,
        epsilon: ctx.cfg.epsilon,
        kappas: ctx.cfg.kappas(),
        weight: ctx.cfg.weight()?,
        collar_width: ctx.cfg.options.collar_width,
        ..ConcentrationConfig::default()
    };
    if !ctx.cfg.interior.is_empty() {
        config.offsets = ctx.cfg.interior.clone();
    }
    let report = concentration_sweep(&ctx.surface, &config, &ctx.system_options())?;
    for r in &report.records {
        sink.event(EventRecord::calibration(r.kappa, r.calibration_residual));
    }
    let mut t = Table::new(vec![
        col("kappa", "1/length"),
        col("target", "1"),
        col("offset", "inradius"),
        col("zeta", "1"),
        col("order", "1"),
        col("multiplicity", "1"),
        col("value", "1"),
    ]);
    for r in report.rows() {
        t.push(vec![
            r.kappa.into(),
            r.target.as_str().into(),
            r.offset.into(),
            r.zeta.name().into(),
            (r.order as usize).into(),
            r.multiplicity.into(),
            r.value.into(),
        ]);
    }
    sink.csv("concentration.csv", &t)?;
    let mut s = Table::new(vec![
        col("offset", "inradius"),
        col("zeta", "1"),
        col("order", "1"),
        col("slope", "1"),
        col("stderr", "1"),
        col("ci_low", "1"),
        col("ci_high", "1"),
        col("points", "1"),
    ]);
    for r in &report.slopes {
        let f = r.fit.as_ref();
        s.push(vec![
            r.offset.into(),
            r.zeta.name().into(),
            (r.order as usize).into(),
            f.map(|f| f.slope).into(),
            f.map(|f| f.stderr).into(),
            f.map(|f| f.ci_low).into(),
            f.map(|f| f.ci_high).into(),
            f.map_or(Cell::Empty, |f| f.points.into()),
        ]);
    }
    sink.csv("concentration_slopes.csv", &s)?;
    sink.json("concentration.json", &report)
}

fn weyl(ctx: &Context<'_>, sink: &mut Sink) -> Result<()> {
    let sweep = weyl_count_sweep(&ctx.surface, ctx.cfg.q, ctx.cfg.epsilon, &ctx.cfg.kappas(), &ctx.system_options())?;
    for p in &sweep.points {
        sink.event(EventRecord::calibration(p.kappa, p.calibration_residual));
    }
    let mut t = Table::new(vec![
        col("kappa", "1/length"),
        col("multiplicity", "1"),
        col("normalized", "1"),
        col("slope", "1"),
        col("slope_stderr", "1"),
    ]);
    for p in &sweep.points {
        t.push(vec![
            p.kappa.into(),
            p.multiplicity.into(),
            p.normalized.into(),
            sweep.fit.as_ref().map(|f| f.slope).into(),
            sweep.fit.as_ref().map(|f| f.stderr).into(),
        ]);
    }
    sink.csv("weyl.csv", &t)?;
    sink.json("weyl.json", &sweep)
}

fn symbol(ctx: &Context<'_>) -> Result<Symbol> {
    Ok(Symbol::Separable {
        weight: ctx.cfg.weight()?,
        multiplier: Multiplier::One,
    })
}

fn variance(ctx: &Context<'_>, sink: &mut Sink) -> Result<()> {
    let points = variance_sweep(
        &ctx.surface,
        ctx.cfg.q,
        ctx.cfg.epsilon,
        &ctx.cfg.kappas(),
        &symbol(ctx)?,
        &ctx.system_options(),
    )?;
    let mut t = Table::new(vec![col("kappa", "1/length"), col("multiplicity", "1"), col("variance", "1")]);
    for p in &points {
        sink.event(EventRecord::calibration(p.kappa, p.calibration_residual));
        t.push(vec![p.kappa.into(), p.multiplicity.into(), p.variance.into()]);
    }
    sink.csv("variance.csv", &t)
}

fn symbols(ctx: &Context<'_>, sink: &mut Sink) -> Result<()> {
    let a = ctx.radial().ok_or_else(|| {
        tevp_core::Error::Capability("symbol checks run on circles and spheres".into())
    })?;
    let opts = SymbolOptions::default();
    let mut t = Table::new(vec![
        col("kappa", "1/length"),
        col("q", "1"),
        col("s_k_exponent", "1"),
        col("s_k_constant", "1"),
        col("s_q_exponent", "1"),
        col("cubic", "1"),
        col("cubic_per_q2", "1"),
        col("kstar_exponent", "1"),
        col("kstar_curvature_product", "1"),
        col("hamiltonian_exponent", "1"),
        col("hamiltonian_constant", "1"),
        col("hamiltonian_literal_exponent", "1"),
        col("hamiltonian_reading", "1"),
    ]);
    let mut scaling = Table::new(vec![
        col("kappa", "1/length"),
        col("q_a", "1"),
        col("q_b", "1"),
        col("cubic_ratio", "1"),
        col("expected", "1"),
    ]);
    let mut reports = Vec::new();
    for &kappa in &ctx.cfg.kappas() {
        let rs = ctx
            .cfg
            .options
            .symbol_q
            .iter()
            .map(|&q| symbol_check(ctx.surface.dim(), a, kappa, q, &opts))
            .collect::<tevp_core::Result<Vec<_>>>()?;
        for r in &rs {
            let h = &r.hamiltonian;
            t.push(vec![
                kappa.into(),
                r.q.into(),
                r.single_layer_k.exponent.into(),
                r.single_layer_k.constant.into(),
                r.single_layer_q.exponent.into(),
                r.subleading.cubic.into(),
                r.subleading.cubic_per_q2.into(),
                r.kstar.exponent.into(),
                r.kstar_curvature_product.into(),
                h.decay.exponent.into(),
                h.decay.constant.into(),
                h.literal_exponent.into(),
                h.reading.as_str().into(),
            ]);
        }
        for w in rs.windows(2) {
            let (ratio, expected) = q_squared_scaling(&w[0], &w[1]);
            scaling.push(vec![kappa.into(), w[0].q.into(), w[1].q.into(), ratio.into(), expected.into()]);
        }
        reports.extend(rs);
    }
    sink.csv("symbols.csv", &t)?;
    sink.csv("symbols_q_scaling.csv", &scaling)?;
    sink.json("symbols.json", &reports)
}

fn scatter(ctx: &Context<'_>, sink: &mut Sink) -> Result<()> {
    let range = ctx.cfg.eig_range();
    let q = ctx.cfg.q;
    let opts = SearchOptions {
        resolution: ctx.cfg.resolution,
        cond_limit: ctx.cfg.options.cond_limit,
        exec: ctx.exec,
        ..SearchOptions::default()
    };
    let search = find_exact_eigenvalues(&ctx.surface, q, range, &opts)?;
    for e in &search.events {
        sink.event(EventRecord::from_sweep(e));
    }
    let want = ctx.cfg.options.scatter_order;
    let eig = search
        .eigenvalues
        .iter()
        .find(|e| want.is_none() || e.order == want)
        .ok_or(tevp_core::Error::EmptyWindow)?;
    let mode = match (ctx.radial(), eig.order) {
        (Some(a), Some(order)) => {
            // the oracle root is sharper than the BIE refinement
            let kappa = ctx
                .oracle_roots((eig.kappa - 1e-3, eig.kappa + 1e-3))?
                .and_then(|r| nearest_root(&r, eig.kappa).filter(|m| m.0.order == order))
                .map_or(eig.kappa, |m| m.0.kappa);
            exact_harmonic_mode(ctx.surface.dim(), a, kappa, q, HarmonicIndex { order, component: 0 })?
        }
        _ => {
            let sys = tevp_core::spectral::TransmissionSystem::build(&ctx.surface, eig.kappa, q, &ctx.system_options())?;
            let set = eig_window(&sys, 1.0 - 1e-12)?;
            let sel = window_modes(&sys, &set)?
                .into_iter()
                .next()
                .ok_or(tevp_core::Error::EmptyWindow)?;
            sel
        }
    };
    let inv = InvisibilityOptions {
        ladder: ctx.cfg.options.ladder.clone(),
        far_field_points: ctx.cfg.options.far_field_points,
        control_kappa: ctx.cfg.options.control_kappa,
        scatter: ScatterOptions {
            cond_limit: ctx.cfg.options.cond_limit,
            perturbation: ctx.cfg.options.perturbation,
            exec: ctx.exec,
        },
        ..InvisibilityOptions::default()
    };
    let report = invisibility_report(&ctx.surface, q, mode.kappa, &mode, &inv)?;
    for e in &report.events {
        sink.event(EventRecord::from_sweep(e));
    }
    let mut t = Table::new(vec![
        col("regularization", "1"),
        col("eps_fit", "1"),
        col("density_norm", "1"),
        col("incident_norm", "length"),
        col("far_field_norm", "1"),
        col("interior_error", "1"),
        col("far_ratio", "1"),
        col("interior_ratio", "1"),
    ]);
    for s in &report.steps {
        t.push(vec![
            s.regularization.into(),
            s.eps_fit.into(),
            s.density_norm.into(),
            s.incident_norm.into(),
            s.far_field_norm.into(),
            s.interior_error.into(),
            s.far_ratio.into(),
            s.interior_ratio.into(),
        ]);
    }
    sink.csv("invisibility.csv", &t)?;
    sink.json("invisibility.json", &report)
}

fn oracle(ctx: &Context<'_>, sink: &mut Sink) -> Result<()> {
    let (a, dim) = match ctx.radial() {
        Some(a) => (a, ctx.surface.dim()),
        None => {
            return Err(tevp_core::Error::Capability("analytic tables exist for circles and spheres only".into()).into())
        }
    };
    let roots = ctx.oracle_roots(ctx.cfg.eig_range())?.unwrap_or_default();
    let mut t = Table::new(vec![col("order", "1"), col("kappa", "1/length")]);
    for r in &roots {
        t.push(vec![r.order.into(), r.kappa.into()]);
    }
    sink.csv("oracle_roots.csv", &t)?;
    let mut s = Table::new(vec![
        col("kappa", "1/length"),
        col("order", "1"),
        col("re_single", "length"),
        col("im_single", "length"),
        col("re_kstar", "1"),
        col("im_kstar", "1"),
    ]);
    for &kappa in &ctx.cfg.kappas() {
        let spec = exact_spectrum(dim, a, kappa, ctx.cfg.options.oracle_max_order)?;
        for (n, (sv, kv)) in spec.single.iter().zip(&spec.kstar).enumerate() {
            let mut row = vec![kappa.into(), n.into()];
            row.extend(complex(*sv));
            row.extend(complex(*kv));
            s.push(row);
        }
    }
    sink.csv("oracle_spectrum.csv", &s)
}
