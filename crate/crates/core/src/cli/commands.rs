use std::collections::BTreeMap;

use super::csv::{ints, num, nums, read_rows, Table};
use super::{Command, CommandRegistry, Context};
use crate::converge::{
    build_grid, default_margin, error_fields, fit_rate, jet_pairs, linspace, rate_registry,
    ErrorReport, Field, RField,
};
use crate::error::{Result, TogeError};
use crate::geodesic::{regularity_gap, TablePair};
use crate::polytope::DelzantPolytope;
use crate::potential::SymplecticPotential;
use crate::quadrature::QuadratureConfig;
use crate::quantize::{
    localization_profile, pkernel, szego_diagonal, GaussLegendreScheme, NormingScheme, NormingTable,
};
use crate::special::{ln_factorial, ln_lower_incomplete_gamma_int, ln_multinomial};

pub fn command_registry() -> CommandRegistry {
    let mut r = CommandRegistry::new("command");
    r.register("validate", |_| Box::new(Validate))
        .register("qconst", |_| Box::new(QConst))
        .register("pkernel", |_| Box::new(PKernel))
        .register("szego", |_| Box::new(Szego))
        .register("geodesic", |_| Box::new(Geodesic))
        .register("rk", |_| Box::new(Rk))
        .register("converge", |_| Box::new(Converge))
        .register("rates", |_| Box::new(Rates))
        .register("oracle", |_| Box::new(Oracle));
    r
}

fn table_for(ctx: &Context, u: &SymplecticPotential, k: u32) -> Result<NormingTable> {
    NormingTable::build(u, k, ctx.scheme.as_ref())
}

struct Validate;

impl Command for Validate {
    fn name(&self) -> &'static str {
        "validate"
    }

    fn run(&self, ctx: &Context) -> Result<()> {
        let p = &ctx.problem.polytope;
        println!(
            "polytope: dim {} facets {} vertices {} volume {}",
            p.dim(),
            p.num_facets(),
            p.vertices().len(),
            num(p.volume())
        );
        for (r, f) in p.facets().iter().enumerate() {
            println!("  l_{r}(x) = <x, {:?}> - ({})", f.normal, f.offset);
        }
        println!(
            "u0: min Hessian eigenvalue {}",
            num(ctx
                .problem
                .u0
                .convexity_check(crate::geodesic::CONVEXITY_RESOLUTION))
        );
        if let Some(pair) = &ctx.problem.pair {
            println!(
                "u1: min Hessian eigenvalue {}",
                num(pair
                    .u1
                    .convexity_check(crate::geodesic::CONVEXITY_RESOLUTION))
            );
        }
        println!("config-sha256 {}", ctx.config_hash);
        Ok(())
    }
}

struct QConst;

impl QConst {
    fn table(ctx: &Context, u: &SymplecticPotential) -> Result<Table> {
        let mut t = Table::new(&["k", "alpha", "logQ_raw", "logP_special", "quad_err"]);
        for &k in &ctx.config.k_values {
            let q = table_for(ctx, u, k)?;
            for (i, alpha) in q.points().iter().enumerate() {
                let p = pkernel(u, &q, alpha, Some(&vec![0.0; alpha.len()]))?;
                t.push(vec![
                    k.to_string(),
                    ints(alpha),
                    num(q.log_q[i]),
                    num(p.log_special),
                    num(q.quad_err[i]),
                ]);
            }
            println!(
                "k={k}: {} points, max quad_err {}",
                q.len(),
                num(q.max_quad_err())
            );
        }
        Ok(t)
    }
}

impl Command for QConst {
    fn name(&self) -> &'static str {
        "qconst"
    }

    fn run(&self, ctx: &Context) -> Result<()> {
        ctx.write("qconst.csv", &Self::table(ctx, &ctx.problem.u0)?)?;
        if let Some(pair) = &ctx.problem.pair {
            ctx.write("qconst_u1.csv", &Self::table(ctx, &pair.u1)?)?;
        }
        Ok(())
    }
}

struct PKernel;

impl Command for PKernel {
    fn name(&self) -> &'static str {
        "pkernel"
    }

    fn run(&self, ctx: &Context) -> Result<()> {
        let u = &ctx.problem.u0;
        let rhos = ctx.config.rho_points(u.dim());
        let mut t = Table::new(&["k", "alpha", "rho", "logP_at_z", "logP_special"]);
        for &k in &ctx.config.k_values {
            let q = table_for(ctx, u, k)?;
            for rho in &rhos {
                for alpha in q.points() {
                    let p = pkernel(u, &q, alpha, Some(rho))
                        .map_err(|e| e.at(format!("k={k} alpha={alpha:?} rho={rho:?}")))?;
                    t.push(vec![
                        k.to_string(),
                        ints(alpha),
                        nums(rho),
                        num(p.log_at_z.expect("rho given")),
                        num(p.log_special),
                    ]);
                }
            }
        }
        ctx.write("pkernel.csv", &t)?;
        Ok(())
    }
}

struct Szego;

impl Command for Szego {
    fn name(&self) -> &'static str {
        "szego"
    }

    fn run(&self, ctx: &Context) -> Result<()> {
        let u = &ctx.problem.u0;
        let m = u.dim() as i32;
        let vol = u.polytope().volume();
        let mut t = Table::new(&[
            "k",
            "rho",
            "Pi",
            "tyz_dev",
            "moment_err",
            "inside_mass",
            "outside_max",
        ]);
        for &k in &ctx.config.k_values {
            let q = table_for(ctx, u, k)?;
            for rho in ctx.config.rho_points(u.dim()) {
                let locate = |e: TogeError| e.at(format!("k={k} rho={rho:?}"));
                let s = szego_diagonal(u, &q, &rho).map_err(locate)?;
                let mean = s.mean_point(&q);
                let moment_err = mean
                    .iter()
                    .zip(&s.moment)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let loc = localization_profile(u, &q, &rho, ctx.config.localization_delta)
                    .map_err(locate)?;
                t.push(vec![
                    k.to_string(),
                    nums(&rho),
                    num(s.pi()),
                    num(vol * (k as f64).powi(-m) * s.pi() - 1.0),
                    num(moment_err),
                    num(loc.inside_mass),
                    num(loc.outside_max),
                ]);
            }
        }
        ctx.write("szego.csv", &t)?;
        Ok(())
    }
}

fn margin_for(ctx: &Context, k: u32) -> f64 {
    ctx.config.margin.unwrap_or_else(|| default_margin(k))
}

struct Geodesic;

impl Command for Geodesic {
    fn name(&self) -> &'static str {
        "geodesic"
    }

    fn needs_pair(&self) -> bool {
        true
    }

    fn run(&self, ctx: &Context) -> Result<()> {
        let pair = ctx.pair()?;
        let mut t = Table::new(&[
            "k",
            "t",
            "x",
            "rho",
            "phi",
            "psi",
            "phi_t",
            "psi_t",
            "phi_tt",
            "psi_tt",
            "phi_rho",
            "psi_rho",
            "phi_rhorho",
            "psi_rhorho",
            "phi_trho",
            "psi_trho",
            "ma_residual",
        ]);
        for &k in &ctx.config.k_values {
            let tables = TablePair::build(pair, k, ctx.scheme.as_ref())?;
            let grid = build_grid(
                pair,
                ctx.config.t_grid,
                ctx.config.x_grid,
                margin_for(ctx, k),
            )?;
            for j in jet_pairs(pair, &tables, &grid)? {
                let (a, b) = (&j.ma, &j.bergman);
                t.push(vec![
                    k.to_string(),
                    num(j.t),
                    nums(&j.x),
                    nums(&a.rho),
                    num(a.phi),
                    num(b.psi),
                    num(a.dt),
                    num(b.dt),
                    num(a.dt2),
                    num(b.dt2),
                    nums(&a.grad),
                    nums(&b.grad),
                    nums(a.hess.transpose().as_slice()),
                    nums(b.hess.transpose().as_slice()),
                    nums(&a.mixed),
                    nums(&b.mixed),
                    num(a.ma_residual()),
                ]);
            }
        }
        ctx.write("jets.csv", &t)?;
        Ok(())
    }
}

struct Rk;

impl Command for Rk {
    fn name(&self) -> &'static str {
        "rk"
    }

    fn needs_pair(&self) -> bool {
        true
    }

    fn run(&self, ctx: &Context) -> Result<()> {
        let pair = ctx.pair()?;
        let mut rows = Table::new(&["k", "t", "alpha", "R_k", "R_inf", "interior"]);
        let mut summary = Table::new(&["k", "t", "sup_all", "sup_interior", "sup_boundary"]);
        for &k in &ctx.config.k_values {
            let tables = TablePair::build(pair, k, ctx.scheme.as_ref())?;
            for t in linspace(0.0, 1.0, ctx.config.t_grid) {
                let g = regularity_gap(pair, &tables, t, ctx.scheme.as_ref())
                    .map_err(|e| e.at(format!("k={k} t={t}")))?;
                for r in &g.rows {
                    rows.push(vec![
                        k.to_string(),
                        num(t),
                        ints(&r.alpha),
                        num(r.rk()),
                        num(r.rinf),
                        (r.interior as u8).to_string(),
                    ]);
                }
                summary.push(vec![
                    k.to_string(),
                    num(t),
                    num(g.sup_all),
                    num(g.sup_interior),
                    num(g.sup_boundary),
                ]);
            }
        }
        ctx.write("rk.csv", &rows)?;
        ctx.write("rk_summary.csv", &summary)?;
        Ok(())
    }
}

fn rates_table(ks_by_field: &BTreeMap<String, Vec<(u32, f64)>>, order: &[&str]) -> Result<Table> {
    let mut t = Table::new(&["field", "model", "slope", "residual"]);
    let registry = rate_registry();
    for field in order {
        let Some(series) = ks_by_field.get(*field) else {
            continue;
        };
        let ks: Vec<u32> = series.iter().map(|s| s.0).collect();
        let es: Vec<f64> = series.iter().map(|s| s.1).collect();
        for name in registry.names() {
            let model = registry.build(name, &())?;
            let (slope, residual) = match fit_rate(&ks, &es, model.as_ref()) {
                Ok(f) => (f.slope, f.residual),
                Err(_) => (f64::NAN, f64::NAN),
            };
            t.push(vec![
                field.to_string(),
                name.to_string(),
                num(slope),
                num(residual),
            ]);
        }
    }
    Ok(t)
}

struct Converge;

impl Command for Converge {
    fn name(&self) -> &'static str {
        "converge"
    }

    fn needs_pair(&self) -> bool {
        true
    }

    fn run(&self, ctx: &Context) -> Result<()> {
        let pair = ctx.pair()?;
        let mut rows = Vec::new();
        for &k in &ctx.config.k_values {
            let tables = TablePair::build(pair, k, ctx.scheme.as_ref())?;
            let grid = build_grid(
                pair,
                ctx.config.t_grid,
                ctx.config.x_grid,
                margin_for(ctx, k),
            )?;
            let row = error_fields(pair, &tables, &grid)?;
            println!(
                "k={k}: c_k {} e0 {} e2_time {}",
                num(row.c_k),
                num(row.get(Field::E0).value),
                num(row.get(Field::E2Time).value)
            );
            rows.push(row);
        }
        let report = ErrorReport::from_rows(rows);
        let header = ["k", "field", "sup_value", "argmax_t", "argmax_x"];
        let mut errors = Table::new(&header);
        let mut rframe = Table::new(&header);
        let mut offsets = Table::new(&["k", "c_k"]);
        for row in &report.rows {
            for (f, s) in &row.fields {
                errors.push(vec![
                    row.k.to_string(),
                    f.name().into(),
                    num(s.value),
                    num(s.argmax_t),
                    nums(&s.argmax_x),
                ]);
            }
            for f in RField::ALL {
                let s = row.get_r(f);
                rframe.push(vec![
                    row.k.to_string(),
                    f.name().into(),
                    num(s.value),
                    num(s.argmax_t),
                    nums(&s.argmax_x),
                ]);
            }
            offsets.push(vec![row.k.to_string(), num(row.c_k)]);
        }
        let mut series: BTreeMap<String, Vec<(u32, f64)>> = BTreeMap::new();
        for f in Field::ALL {
            series.insert(
                f.name().into(),
                report.rows.iter().map(|r| (r.k, r.get(f).value)).collect(),
            );
        }
        let order: Vec<&str> = Field::ALL.iter().map(|f| f.name()).collect();
        ctx.write("errors.csv", &errors)?;
        ctx.write("errors_rframe.csv", &rframe)?;
        ctx.write("offsets.csv", &offsets)?;
        ctx.write("rates.csv", &rates_table(&series, &order)?)?;
        Ok(())
    }
}

struct Rates;

impl Command for Rates {
    fn name(&self) -> &'static str {
        "rates"
    }

    fn run(&self, ctx: &Context) -> Result<()> {
        let path = ctx.out_dir.join("errors.csv");
        let mut series: BTreeMap<String, Vec<(u32, f64)>> = BTreeMap::new();
        let mut order: Vec<String> = Vec::new();
        for (line, row) in read_rows(&path)?.into_iter().enumerate() {
            let bad = || {
                TogeError::schema(
                    format!("{}:{}", path.display(), line + 3),
                    "expected k,field,sup_value,...",
                )
            };
            if row.len() < 3 {
                return Err(bad());
            }
            let k: u32 = row[0].parse().map_err(|_| bad())?;
            let e: f64 = row[2].parse().map_err(|_| bad())?;
            if !order.contains(&row[1]) {
                order.push(row[1].clone());
            }
            series.entry(row[1].clone()).or_default().push((k, e));
        }
        let order: Vec<&str> = order.iter().map(String::as_str).collect();
        ctx.write("rates.csv", &rates_table(&series, &order)?)?;
        Ok(())
    }
}

/// Closed-form checks of the configured quadrature.
struct Oracle;

pub const ORACLE_TOL: f64 = 1e-8;

struct OracleCase {
    name: &'static str,
    potential: SymplecticPotential,
    max_k: u32,
    /// Exact `ln Q_raw`.
    exact: fn(u32, &[i64]) -> f64,
}

fn oracle_cases() -> Result<Vec<OracleCase>> {
    let interval = DelzantPolytope::interval();
    let simplex = DelzantPolytope::simplex(2)?;
    Ok(vec![
        OracleCase {
            name: "fubini-study-interval",
            potential: SymplecticPotential::canonical(interval.into()),
            max_k: 32,
            // Beta(alpha + 1, k - alpha + 1)
            exact: |k, a| -ln_multinomial(k as u64, a) - (k as f64 + 1.0).ln(),
        },
        OracleCase {
            name: "fubini-study-simplex",
            potential: SymplecticPotential::canonical(simplex.into()),
            max_k: 16,
            exact: |k, a| {
                -ln_multinomial(k as u64, a) - ln_factorial(k as u64 + 2) + ln_factorial(k as u64)
            },
        },
        OracleCase {
            name: "bargmann-fock-truncated",
            potential: SymplecticPotential::bargmann_fock(1, ORACLE_BF_SIZE)?,
            max_k: 32,
            // gamma(alpha + 1, k L) / k^{alpha + 1}
            exact: |k, a| {
                let n = a[0] as u64;
                let kf = k as f64;
                ln_lower_incomplete_gamma_int(n, kf * ORACLE_BF_SIZE as f64)
                    - (n + 1) as f64 * kf.ln()
            },
        },
    ])
}

const ORACLE_BF_SIZE: i64 = 4;

impl Command for Oracle {
    fn name(&self) -> &'static str {
        "oracle"
    }

    fn run(&self, ctx: &Context) -> Result<()> {
        let quad: QuadratureConfig = QuadratureConfig {
            scheme: "gauss-legendre".into(),
            ..ctx.config.quadrature.clone()
        };
        let scheme = GaussLegendreScheme::new(quad);
        let mut t = Table::new(&["case", "k", "alpha", "logQ_raw", "logQ_exact", "rel_err"]);
        let mut worst: Option<(f64, String)> = None;
        for case in oracle_cases()? {
            let mut case_max = 0.0f64;
            for k in 1..=case.max_k {
                let q = NormingTable::build(&case.potential, k, &scheme as &dyn NormingScheme)?;
                for (i, alpha) in q.points().iter().enumerate() {
                    let exact = (case.exact)(k, alpha);
                    let rel = (q.log_q[i] - exact).exp_m1().abs();
                    case_max = case_max.max(rel);
                    if worst.as_ref().is_none_or(|w| rel > w.0) {
                        worst = Some((rel, format!("{} k={k} alpha={alpha:?}", case.name)));
                    }
                    t.push(vec![
                        case.name.into(),
                        k.to_string(),
                        ints(alpha),
                        num(q.log_q[i]),
                        num(exact),
                        num(rel),
                    ]);
                }
            }
            let verdict = if case_max <= ORACLE_TOL { "ok" } else { "FAIL" };
            println!(
                "{}: max relative error {} {verdict}",
                case.name,
                num(case_max)
            );
        }
        ctx.write("oracle.csv", &t)?;
        match worst {
            Some((rel, at)) if rel > ORACLE_TOL => Err(TogeError::ToleranceBreach(format!(
                "relative error {rel:e} > {ORACLE_TOL:e} at {at}"
            ))),
            _ => Ok(()),
        }
    }
}
