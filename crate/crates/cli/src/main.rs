//! Command line front end for the polynomial vector field engine.
//!
//! Usage errors exit with code 2 (clap's default); numeric failures print
//! a JSON error object and exit with code 1. Outputs are deterministic
//! given the same inputs and seed.

mod svg;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as Cx;
use serde::Deserialize;
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

use polyvf_core::atlas::{self, BranchPolicy};
use polyvf_core::disk::{self, DiskField, JetFamily};
use polyvf_core::flow::{self, FieldSpec};
use polyvf_core::params::{eps_from_coords, Branch, ParamPoint};
use polyvf_core::periodgon::{self, Periodgon};
use polyvf_core::roots;
use polyvf_core::verify;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Parser, Debug)]
#[command(name = "polyvf", version, about = "Polynomial vector fields z' = z^{k+1} + eps1 z + eps0: periodgons, star domains, homoclinic events, bifurcation atlas, and disk normal forms")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,

    /// JSON config file; its entries override the flags below.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true, default_value_t = 2)]
    k: u32,

    #[arg(long, global = true, default_value_t = 0.6, allow_hyphen_values = true)]
    s: f64,

    #[arg(long, global = true, default_value_t = -0.5, allow_hyphen_values = true)]
    theta: f64,

    #[arg(long, global = true, default_value_t = 0.0, allow_hyphen_values = true)]
    alpha: f64,

    #[arg(long, global = true, default_value_t = 1.0)]
    zeta: f64,

    /// Slit branch: interior | above:m | below:m
    #[arg(long, global = true, default_value = "interior")]
    branch: String,

    /// Grid size for sweeps, e.g. 64x64.
    #[arg(long, global = true, default_value = "32x32")]
    grid: String,

    /// Numeric tolerance override for event coincidence detection.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Output path; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// RNG seed for sampled reports.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Labeled equilibria, eigenvalues, and periods at one parameter point.
    Roots,
    /// The polygon of periods at one parameter point.
    Periodgon {
        /// Compare against the flow-traced construction.
        #[arg(long)]
        intrinsic: bool,
    },
    /// The star domain (periodgon with exterior half-strips).
    Star {
        /// Strip truncation length in units of the largest period.
        #[arg(long, default_value_t = 10.0)]
        truncation: f64,
    },
    /// Homoclinic-loop events of the rotated family at fixed (s, theta).
    Events,
    /// Sweep the slit disk and write the bifurcation atlas.
    Atlas {
        /// Skip cells on slit rays instead of taking both one-sided limits.
        #[arg(long)]
        skip_slits: bool,
    },
    /// Separatrices of infinity (phase portrait).
    Portrait {
        /// Trace radius; defaults to 4 max(1, |roots|).
        #[arg(long, default_value_t = 0.0)]
        radius: f64,
    },
    /// Numerical-evidence reports.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        /// Sample count for sampled suites.
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Disk-field dynamics of P/(1 + A z^k) on D_r.
    Disk {
        #[arg(long, value_enum)]
        op: DiskOp,
        #[arg(long, default_value_t = 1.5)]
        r: f64,
        /// A coefficient (real part).
        #[arg(long, default_value_t = 0.0)]
        a_re: f64,
        #[arg(long, default_value_t = 0.0)]
        a_im: f64,
        /// Sweep upper bound for the dividing-trajectory scan.
        #[arg(long, default_value_t = 0.4)]
        alpha_max: f64,
        #[arg(long, default_value_t = 40)]
        sweep_samples: usize,
    },
    /// Finite-jet reduction of an unfolding to the disk normal form.
    Reduce {
        /// JetFamily JSON file; the built-in rational example when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Parameter truncation order.
        #[arg(long, default_value_t = 6)]
        order: usize,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Suite {
    SelfIntersection,
    Convexity,
    SlitPositivity,
    Derivatives,
    RootOrder,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DiskOp {
    Periodgon,
    Dividing,
    Rescale,
}

#[derive(Deserialize, Default)]
struct FileConfig {
    k: Option<u32>,
    s: Option<f64>,
    theta: Option<f64>,
    alpha: Option<f64>,
    zeta: Option<f64>,
    branch: Option<String>,
    grid: Option<String>,
    tol: Option<f64>,
    seed: Option<u64>,
}

#[derive(Debug)]
struct NumericError(String);

impl std::fmt::Display for NumericError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for NumericError {}

type Fallible<T> = Result<T, Box<dyn std::error::Error>>;

fn numeric<E: std::fmt::Display>(e: E) -> Box<dyn std::error::Error> {
    Box::new(NumericError(e.to_string()))
}

fn main() -> ExitCode {
    let mut cli = Cli::parse();
    if let Err(e) = apply_config(&mut cli) {
        let obj = json!({ "error": e.to_string(), "kind": "config" });
        eprintln!("{obj}");
        return ExitCode::from(1);
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let obj = json!({ "error": e.to_string(), "kind": "numeric" });
            eprintln!("{obj}");
            ExitCode::from(1)
        }
    }
}

fn apply_config(cli: &mut Cli) -> Fallible<()> {
    let Some(path) = &cli.config else {
        return Ok(());
    };
    let text = std::fs::read_to_string(path)?;
    let cfg: FileConfig = serde_json::from_str(&text)?;
    if let Some(v) = cfg.k {
        cli.k = v;
    }
    if let Some(v) = cfg.s {
        cli.s = v;
    }
    if let Some(v) = cfg.theta {
        cli.theta = v;
    }
    if let Some(v) = cfg.alpha {
        cli.alpha = v;
    }
    if let Some(v) = cfg.zeta {
        cli.zeta = v;
    }
    if let Some(v) = cfg.branch {
        cli.branch = v;
    }
    if let Some(v) = cfg.grid {
        cli.grid = v;
    }
    if let Some(v) = cfg.tol {
        cli.tol = Some(v);
    }
    if let Some(v) = cfg.seed {
        cli.seed = v;
    }
    Ok(())
}

fn parse_branch(text: &str) -> Fallible<Branch> {
    if text == "interior" {
        return Ok(Branch::Interior);
    }
    if let Some(m) = text.strip_prefix("above:") {
        return Ok(Branch::SlitAbove(m.parse()?));
    }
    if let Some(m) = text.strip_prefix("below:") {
        return Ok(Branch::SlitBelow(m.parse()?));
    }
    Err(numeric(format!("unknown branch '{text}'")))
}

fn parse_grid(text: &str) -> Fallible<(usize, usize)> {
    let (a, b) = text
        .split_once('x')
        .ok_or_else(|| numeric(format!("grid must look like 64x64, got '{text}'")))?;
    Ok((a.parse()?, b.parse()?))
}

fn point_of(cli: &Cli) -> Fallible<ParamPoint> {
    let p = ParamPoint::new(cli.k, cli.s, cli.theta, cli.alpha, cli.zeta);
    let branch = parse_branch(&cli.branch)?;
    if branch == Branch::Interior {
        Ok(p)
    } else {
        p.with_branch(branch).map_err(numeric)
    }
}

fn emit(cli: &Cli, content: &str) -> Fallible<()> {
    match &cli.out {
        Some(path) => std::fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn cx_pair(z: Cx) -> [f64; 2] {
    [z.re, z.im]
}

fn periodgon_json(pg: &Periodgon) -> serde_json::Value {
    json!({
        "k": pg.k,
        "sides": pg.sides.iter().map(|s| cx_pair(*s)).collect::<Vec<_>>(),
        "vertices": pg.vertices.iter().map(|v| cx_pair(*v)).collect::<Vec<_>>(),
        "labels": pg.labels.iter().map(|l| format!("{l:?}")).collect::<Vec<_>>(),
        "convex": pg.flags.convex,
        "strictly_convex": pg.flags.strictly_convex,
        "self_intersecting": pg.flags.self_intersecting,
        "degenerate_flat": pg.flags.degenerate_flat,
        "parabolic_merged": pg.flags.parabolic_merged,
    })
}

fn run(cli: &Cli) -> Fallible<()> {
    match &cli.cmd {
        Cmd::Roots => {
            let p = point_of(cli)?;
            let r = roots::roots_labeled(&p).map_err(numeric)?;
            let pd = roots::periods(&r);
            match cli.format {
                Format::Csv => {
                    let mut out = String::from("j,re,im,lambda_re,lambda_im,nu_re,nu_im,parabolic\n");
                    for j in 0..r.roots.len() {
                        out.push_str(&format!(
                            "{},{:.12},{:.12},{:.12},{:.12},{:.12},{:.12},{}\n",
                            j,
                            r.roots[j].re,
                            r.roots[j].im,
                            pd.lambdas[j].re,
                            pd.lambdas[j].im,
                            pd.nus[j].re,
                            pd.nus[j].im,
                            pd.parabolic_flags[j]
                        ));
                    }
                    emit(cli, &out)
                }
                _ => {
                    let obj = json!({
                        "k": cli.k,
                        "point": { "s": p.s, "theta": p.theta, "alpha": p.alpha, "zeta": p.zeta, "branch": cli.branch },
                        "roots": r.roots.iter().map(|z| cx_pair(*z)).collect::<Vec<_>>(),
                        "lambdas": pd.lambdas.iter().map(|z| cx_pair(*z)).collect::<Vec<_>>(),
                        "nus": pd.nus.iter().map(|z| cx_pair(*z)).collect::<Vec<_>>(),
                        "parabolic": pd.parabolic.map(|pair| json!({
                            "labels": [pair.labels.0, pair.labels.1],
                            "center": cx_pair(pair.center),
                            "nu": cx_pair(pair.nu),
                        })),
                    });
                    emit(cli, &format!("{}\n", serde_json::to_string_pretty(&obj)?))
                }
            }
        }
        Cmd::Periodgon { intrinsic } => {
            let p = point_of(cli)?;
            let pg = periodgon::periodgon_at(&p).map_err(numeric)?;
            if *intrinsic {
                let intr = periodgon::intrinsic_periodgon(&p).map_err(numeric)?;
                let dist = periodgon::polygon_distance(&pg, &intr);
                let obj = json!({
                    "adhoc": periodgon_json(&pg),
                    "intrinsic": periodgon_json(&intr),
                    "max_vertex_distance": dist,
                });
                return emit(cli, &format!("{}\n", serde_json::to_string_pretty(&obj)?));
            }
            match cli.format {
                Format::Svg => {
                    let events = periodgon::homoclinic_alpha_events(&pg, cli.k).unwrap_or_default();
                    let doc = svg::render_periodgon(&pg, &events).map_err(numeric)?;
                    emit(cli, &doc)
                }
                _ => emit(
                    cli,
                    &format!("{}\n", serde_json::to_string_pretty(&periodgon_json(&pg))?),
                ),
            }
        }
        Cmd::Star { truncation } => {
            let p = point_of(cli)?;
            let pg = periodgon::periodgon_at(&p).map_err(numeric)?;
            let star = periodgon::star_domain(&pg).map_err(numeric)?;
            let max_nu = pg.sides.iter().map(|s| s.norm()).fold(0.0, f64::max);
            let len = truncation * max_nu;
            match cli.format {
                Format::Svg => {
                    let doc = svg::render_star(&star, len).map_err(numeric)?;
                    emit(cli, &doc)
                }
                _ => {
                    let obj = json!({
                        "base": periodgon_json(&pg),
                        "strips": star.strips.iter().map(|st| json!({
                            "start": cx_pair(st.start),
                            "side": cx_pair(st.side),
                            "normal": cx_pair(st.normal),
                            "shift": cx_pair(st.shift),
                        })).collect::<Vec<_>>(),
                        "truncation": len,
                        "disjoint_at_truncation": star.strips_disjoint(len),
                    });
                    emit(cli, &format!("{}\n", serde_json::to_string_pretty(&obj)?))
                }
            }
        }
        Cmd::Events => {
            let mut p = point_of(cli)?;
            p.alpha = 0.0;
            let pg = periodgon::periodgon_at(&p).map_err(numeric)?;
            let events = periodgon::homoclinic_alpha_events(&pg, cli.k).map_err(numeric)?;
            let r = roots::roots_labeled(&p).map_err(numeric)?;
            let pd = roots::periods(&r);
            let coincide = cli.tol.unwrap_or(1e-8);
            let tagged = atlas::classify_codimension_with_tol(
                &events,
                &p,
                &pd,
                pg.flags.self_intersecting && !pg.flags.slit_limit,
                coincide,
            );
            match cli.format {
                Format::Csv => {
                    let mut out = String::from("p,q,alpha,tag\n");
                    for e in &tagged {
                        out.push_str(&format!("{},{},{:.12},{}\n", e.p, e.q, e.alpha, e.tag));
                    }
                    emit(cli, &out)
                }
                _ => {
                    let obj = json!({
                        "k": cli.k,
                        "s": p.s,
                        "theta": p.theta,
                        "per_beta_period": periodgon::events_per_beta_period(&events, cli.k),
                        "events": tagged,
                    });
                    emit(cli, &format!("{}\n", serde_json::to_string_pretty(&obj)?))
                }
            }
        }
        Cmd::Atlas { skip_slits } => {
            let (n_s, n_theta) = parse_grid(&cli.grid)?;
            let policy = if *skip_slits {
                BranchPolicy::Skip
            } else {
                BranchPolicy::BothSides
            };
            let atlas = atlas::scan_atlas(cli.k, n_s, n_theta, policy);
            match cli.format {
                Format::Csv => emit(cli, &atlas::to_csv(&atlas)),
                _ => emit(cli, &format!("{}\n", atlas::to_json(&atlas))),
            }
        }
        Cmd::Portrait { radius } => {
            let p = point_of(cli)?;
            let e = eps_from_coords(&p);
            let field = FieldSpec::from_epsilon(&e);
            let graph = flow::separatrices_at_infinity(&field, *radius).map_err(numeric)?;
            match cli.format {
                Format::Svg => {
                    let doc = svg::render_portrait(&graph).map_err(numeric)?;
                    emit(cli, &doc)
                }
                _ => {
                    let obj = json!({
                        "k": cli.k,
                        "radius": graph.radius,
                        "roots": graph.roots.iter().map(|z| cx_pair(*z)).collect::<Vec<_>>(),
                        "separatrices": graph.seps.iter().map(|s| json!({
                            "m": s.m,
                            "incoming": s.incoming,
                            "seed": cx_pair(s.seed),
                            "landing": format!("{:?}", s.landing),
                        })).collect::<Vec<_>>(),
                        "has_homoclinic": graph.has_homoclinic(),
                    });
                    emit(cli, &format!("{}\n", serde_json::to_string_pretty(&obj)?))
                }
            }
        }
        Cmd::Verify { suite, samples } => {
            let (n_s, n_theta) = parse_grid(&cli.grid)?;
            let text = match suite {
                Suite::SelfIntersection => {
                    let rep = verify::conjecture_selfintersection_scan(cli.k, n_s, n_theta, 0.02);
                    verify::report_to_json(&rep)
                }
                Suite::Convexity => {
                    let rep = verify::convexity_map(cli.k, n_s, n_theta);
                    verify::report_to_json(&rep)
                }
                Suite::SlitPositivity => {
                    let grid: Vec<f64> = (0..*samples)
                        .map(|i| 0.02 + 0.46 * (i as f64 + 0.5) / *samples as f64)
                        .collect();
                    let rep = verify::slit_positivity_check(cli.k, &grid).map_err(numeric)?;
                    verify::report_to_json(&rep)
                }
                Suite::Derivatives => {
                    let rep = verify::derivative_crosscheck(cli.k, *samples, cli.seed);
                    verify::report_to_json(&rep)
                }
                Suite::RootOrder => {
                    let rep = verify::root_order_report(cli.k, n_s, n_theta);
                    verify::report_to_json(&rep)
                }
            };
            emit(cli, &format!("{text}\n"))
        }
        Cmd::Disk {
            op,
            r,
            a_re,
            a_im,
            alpha_max,
            sweep_samples,
        } => {
            let a = Cx::new(*a_re, *a_im);
            let field_at = |alpha: f64| -> Fallible<DiskField> {
                let p = ParamPoint::new(cli.k, cli.s, cli.theta, alpha, cli.zeta);
                let e = eps_from_coords(&p);
                DiskField::new(cli.k, e.poly_coeffs(), a, *r).map_err(numeric)
            };
            match op {
                DiskOp::Periodgon => {
                    let d = field_at(cli.alpha)?;
                    let gp = disk::generalized_periodgon(&d).map_err(numeric)?;
                    let obj = json!({
                        "tangencies": gp.tangencies.iter().map(|z| cx_pair(*z)).collect::<Vec<_>>(),
                        "side_periods": gp.side_periods.iter().map(|z| cx_pair(*z)).collect::<Vec<_>>(),
                        "hole_radii": gp.hole_radii,
                        "base_point": cx_pair(gp.base_point),
                    });
                    emit(cli, &format!("{}\n", serde_json::to_string_pretty(&obj)?))
                }
                DiskOp::Dividing => {
                    let fam = |alpha: f64| field_at(alpha).expect("family construction");
                    let (flags, intervals) =
                        disk::dividing_scan(fam, 0.0, *alpha_max, *sweep_samples, 96);
                    let misses: Vec<f64> = intervals
                        .iter()
                        .flat_map(|&(a0, a1)| [a0, a1])
                        .map(|alpha| disk::double_tangency_miss(&field_at(alpha).unwrap()))
                        .collect();
                    let obj = json!({
                        "k": cli.k,
                        "r": r,
                        "flags": flags,
                        "intervals": intervals,
                        "double_tangency_miss": misses,
                    });
                    emit(cli, &format!("{}\n", serde_json::to_string_pretty(&obj)?))
                }
                DiskOp::Rescale => {
                    let d = field_at(cli.alpha)?;
                    let rep = disk::rescale_check(&d).map_err(numeric)?;
                    emit(cli, &format!("{}\n", verify::report_to_json(&rep)))
                }
            }
        }
        Cmd::Reduce { input, order } => {
            let fam = match input {
                Some(path) => {
                    let text = std::fs::read_to_string(path)?;
                    JetFamily::from_json(&text).map_err(numeric)?
                }
                None => JetFamily::rational_z2_over_1pz(*order, 14),
            };
            let red = disk::kostov_reduce(&fam, *order).map_err(numeric)?;
            let series_json = |s: &polyvf_core::series::Series| -> serde_json::Value {
                let entries: Vec<serde_json::Value> = (0..s.coeffs.len())
                    .filter(|&i| s.coeffs[i].norm() > 1e-14)
                    .map(|i| json!({ "exps": s.exponents(i), "coeff": cx_pair(s.coeffs[i]) }))
                    .collect();
                json!(entries)
            };
            let obj = json!({
                "k": red.k,
                "order": order,
                "z_order": red.z_order,
                "b": red.b.iter().map(&series_json).collect::<Vec<_>>(),
                "A": series_json(&red.a),
                "transformation": red.trans.iter().map(&series_json).collect::<Vec<_>>(),
                "residual_valuation": red.residual_valuation,
                "residual_max": red.residual_max,
            });
            emit(cli, &format!("{}\n", serde_json::to_string_pretty(&obj)?))
        }
    }
}
