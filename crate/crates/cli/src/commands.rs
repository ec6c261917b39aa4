use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use kstab::format::{parse_polytope, PolytopeInput};
use kstab::futaki::{exact_expansion, expansion, filtration_data, filtration_futaki, filtration_futaki_extrapolated};
use kstab::kempfness::{
    matrix_flow, sphere_flow, FlowOptions, MatrixPoint, MatrixVerdict, SphereConfig, SphereVerdict,
};
use kstab::mesh::MeshSpec;
use kstab::rational::{self, fmt_vec, int, Rational};
use kstab::solver::{contract_check, quadratic_basis, ray_slope, solve_observed, SolveOptions, SolveReport, Termination};
use kstab::stability::{crease_search, functional, futaki_linear, AffinePiece, Quadratic};
use kstab::{BoundaryMeasure, Error, PLConvexFunction, StabilityStatus, StabilityVerdict};
use num::complex::Complex64;
use num::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::exit;
use crate::output::{f, q, qv, Run};
use crate::{Cli, Command, FlowArgs, SolveArgs};

pub fn run(cli: &Cli) -> Result<u8> {
    let g = &cli.global;
    match &cli.command {
        Command::Analyze { polytope } => {
            let mut run = Run::new(&g.out, "analyze", json!({}), g.seed)?;
            let input = load(&mut run, polytope)?;
            analyze(&mut run, &input)?;
            run.finish()?;
            Ok(exit::OK)
        }
        Command::Destabilize {
            polytope,
            resolution,
            witness,
        } => {
            let mut run = Run::new(&g.out, "destabilize", json!({ "resolution": resolution }), g.seed)?;
            let input = load(&mut run, polytope)?;
            let verdict = destabilize(&mut run, &input, *resolution)?;
            if let (Some(path), Some(w)) = (witness, &verdict.witness) {
                let mut text = serde_json::to_string_pretty(&witness_json(&w.function, &w.value))?;
                text.push('\n');
                std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
            }
            run.finish()?;
            Ok(exit::OK)
        }
        Command::Futaki { polytope, xi, kmin, kmax } => {
            let mut run = Run::new(
                &g.out,
                "futaki",
                json!({ "xi": xi, "kmin": kmin, "kmax": kmax }),
                g.seed,
            )?;
            let input = load(&mut run, polytope)?;
            futaki(&mut run, &input, xi, *kmin, *kmax)?;
            run.finish()?;
            Ok(exit::OK)
        }
        Command::Filtration {
            polytope,
            pieces,
            crease,
            k,
        } => {
            let mut run = Run::new(
                &g.out,
                "filtration",
                json!({ "pieces": pieces, "crease": crease, "k": k }),
                g.seed,
            )?;
            let input = load(&mut run, polytope)?;
            let func = pl_function(input.polytope.dim(), pieces, crease.as_deref())?;
            filtration(&mut run, &input, &func, *k)?;
            run.finish()?;
            Ok(exit::OK)
        }
        Command::Solve {
            polytope,
            solve,
            dump_every,
            force,
            perturbation,
        } => {
            let mut run = Run::new(
                &g.out,
                "solve",
                json!({
                    "mesh": solve.mesh, "tol": solve.tol, "max_iter": solve.max_iter,
                    "ceiling": solve.ceiling, "dump_every": dump_every, "force": force,
                    "perturbation": perturbation,
                }),
                g.seed,
            )?;
            let input = load(&mut run, polytope)?;
            let mut opts = solve_options(solve);
            opts.force = *force;
            opts.perturbation = *perturbation;
            let code = solve_and_report(&mut run, &input, &opts, *dump_every)?;
            run.finish()?;
            Ok(code)
        }
        Command::Ray {
            polytope,
            hessian,
            linear,
            s_max,
            mesh,
        } => {
            let mut run = Run::new(
                &g.out,
                "ray",
                json!({ "hessian": hessian, "linear": linear, "s_max": s_max, "mesh": mesh }),
                g.seed,
            )?;
            let input = load(&mut run, polytope)?;
            ray(&mut run, &input, hessian, linear.as_deref(), *s_max, *mesh)?;
            run.finish()?;
            Ok(exit::OK)
        }
        Command::FlowSphere { points, random, flow } => {
            let mut run = Run::new(
                &g.out,
                "flow-sphere",
                json!({ "random": random, "step": flow.step, "max_steps": flow.max_steps }),
                g.seed,
            )?;
            let config = match (points, random) {
                (Some(path), _) => SphereConfig::parse(&run.read_input(path)?)?,
                (None, Some(n)) => random_sphere(*n, g.seed)?,
                (None, None) => bail!("either --points or --random is required"),
            };
            flow_sphere(&mut run, &config, flow)?;
            run.finish()?;
            Ok(exit::OK)
        }
        Command::FlowMatrix { matrix, flow } => {
            let mut run = Run::new(
                &g.out,
                "flow-matrix",
                json!({ "step": flow.step, "max_steps": flow.max_steps }),
                g.seed,
            )?;
            let a = MatrixPoint::parse(&run.read_input(matrix)?)?;
            flow_matrix(&mut run, &a, flow)?;
            run.finish()?;
            Ok(exit::OK)
        }
        Command::Pipeline {
            polytope,
            resolution,
            solve,
        } => {
            let mut run = Run::new(
                &g.out,
                "pipeline",
                json!({
                    "resolution": resolution, "mesh": solve.mesh, "tol": solve.tol,
                    "max_iter": solve.max_iter, "ceiling": solve.ceiling,
                }),
                g.seed,
            )?;
            let input = load(&mut run, polytope)?;
            let code = pipeline(&mut run, &input, *resolution, solve)?;
            run.finish()?;
            Ok(code)
        }
    }
}

fn load(run: &mut Run, path: &Path) -> Result<PolytopeInput> {
    let text = run.read_input(path)?;
    parse_polytope(&text).with_context(|| format!("in {}", path.display()))
}

fn point(v: &[Rational]) -> String {
    fmt_vec(v)
}

fn is_zero_vector(v: &[Rational]) -> bool {
    v.iter().all(|x| x.is_zero())
}

fn analyze(run: &mut Run, input: &PolytopeInput) -> Result<()> {
    let (p, s) = (&input.polytope, &input.measure);
    let m = p.measures(s)?;
    let fut = futaki_linear(p, s)?;
    let delzant = p.is_delzant();
    println!("dimension: {}", p.dim());
    println!("vertices: {}", p.vertices().iter().map(|v| point(v)).collect::<Vec<_>>().join(" "));
    println!("facets (normal, offset, weight):");
    for (fct, w) in p.facets().iter().zip(&s.weights) {
        println!("  {:?}  {}  {}", fct.normal, fct.offset, w);
    }
    println!("volume: {}", m.volume);
    println!("boundary volume: {}", m.boundary_volume);
    println!("A: {}", m.a);
    println!("centroid: {}", point(&m.centroid));
    println!("boundary centroid: {}", point(&m.boundary_centroid));
    println!("Delzant: {delzant}");
    println!("Futaki invariant: {}", fmt_vec(&fut));
    let balanced = is_zero_vector(&fut);
    if !balanced {
        println!("note: the Futaki invariant is non-zero, so `solve` will refuse (no constant scalar curvature metric)");
    }
    run.write_json(
        "report.json",
        &json!({
            "dimension": p.dim(),
            "vertices": p.vertices().iter().map(|v| qv(v)).collect::<Vec<_>>(),
            "facets": p.facets().iter().zip(&s.weights).map(|(fct, w)| json!({
                "normal": fct.normal, "offset": q(&fct.offset), "weight": q(w),
            })).collect::<Vec<_>>(),
            "volume": q(&m.volume),
            "boundary_volume": q(&m.boundary_volume),
            "a": q(&m.a),
            "centroid": qv(&m.centroid),
            "boundary_centroid": qv(&m.boundary_centroid),
            "delzant": delzant,
            "futaki": qv(&fut),
            "futaki_vanishes": balanced,
        }),
    )?;
    Ok(())
}

fn witness_json(fun: &PLConvexFunction, value: &Rational) -> Value {
    json!({
        "pieces": fun.pieces().iter().map(|pc| json!({
            "slope": qv(&pc.slope), "constant": q(&pc.constant),
        })).collect::<Vec<_>>(),
        "value": q(value),
    })
}

fn describe(fun: &PLConvexFunction) -> String {
    let pieces: Vec<String> = fun
        .pieces()
        .iter()
        .map(|pc| format!("<{}, x> + {}", fmt_vec(&pc.slope), pc.constant))
        .collect();
    format!("max({})", pieces.join(", "))
}

fn status_name(s: StabilityStatus) -> &'static str {
    match s {
        StabilityStatus::Unstable => "unstable",
        StabilityStatus::SemistableBoundary => "semistable-boundary",
        StabilityStatus::StableAtResolution => "stable-at-resolution",
    }
}

fn verdict_json(v: &StabilityVerdict) -> Value {
    json!({
        "status": status_name(v.status),
        "futaki": qv(&v.futaki),
        "resolution": v.resolution,
        "creases_examined": v.creases_examined,
        "witness": v.witness.as_ref().map(|w| witness_json(&w.function, &w.value)),
        "best": v.best.iter().map(|c| json!({
            "direction": c.direction, "offset": q(&c.offset), "value": q(&c.value),
            "mass": q(&c.mass), "ratio": q(&c.ratio()),
        })).collect::<Vec<_>>(),
    })
}

fn print_verdict(v: &StabilityVerdict) {
    println!("Futaki invariant: {}", fmt_vec(&v.futaki));
    println!("creases examined at resolution {}: {}", v.resolution, v.creases_examined);
    if !v.best.is_empty() {
        println!("best creases max(0, <a,x> - c), by L(f) / int f:");
        println!("  {:<12} {:>10} {:>16} {:>16}", "a", "c", "L(f)", "ratio");
        for c in &v.best {
            println!(
                "  {:<12} {:>10} {:>16} {:>16}",
                format!("{:?}", c.direction),
                c.offset.to_string(),
                c.value.to_string(),
                c.ratio().to_string()
            );
        }
    }
    println!("verdict: {}", status_name(v.status));
    if let Some(w) = &v.witness {
        println!("witness: {}  with L = {}", describe(&w.function), w.value);
    }
}

fn destabilize(run: &mut Run, input: &PolytopeInput, resolution: u32) -> Result<StabilityVerdict> {
    let v = crease_search(&input.polytope, &input.measure, resolution)?;
    print_verdict(&v);
    run.write_json("report.json", &verdict_json(&v))?;
    Ok(v)
}

fn parse_ints(s: &str) -> Result<Vec<i64>> {
    s.split(',')
        .map(|t| t.trim().parse::<i64>().map_err(|_| anyhow!("`{t}` is not an integer")))
        .collect()
}

fn parse_rationals(s: &str) -> Result<Vec<Rational>> {
    s.split(',')
        .map(|t| rational::parse(t.trim()).ok_or_else(|| anyhow!("`{t}` is not a rational number")))
        .collect()
}

fn futaki(run: &mut Run, input: &PolytopeInput, xi: &str, kmin: u64, kmax: u64) -> Result<()> {
    let p = &input.polytope;
    let xi = parse_ints(xi)?;
    if xi.len() != p.dim() {
        bail!("--xi has {} entries but the polytope has dimension {}", xi.len(), p.dim());
    }
    let fit = expansion(p, &xi, kmin, kmax)?;
    let unit = BoundaryMeasure::uniform(p.facets().len());
    let lin = futaki_linear(p, &unit)?;
    let l_xi: Rational = lin.iter().zip(&xi).map(|(a, &b)| a * int(b)).sum();
    let predicted = &l_xi / (p.volume()? * int(2));
    let mut csv = String::from("k,d_k,w_k,F_k\n");
    println!("{:>5} {:>12} {:>16} {:>22}", "k", "d_k", "w_k", "F_k");
    for d in &fit.data {
        let fk = d.normalized();
        println!("{:>5} {:>12} {:>16} {:>22.15}", d.k, d.count, d.weight, rational::to_f64(&fk));
        writeln!(csv, "{},{},{},{}", d.k, d.count, d.weight, f(rational::to_f64(&fk)))?;
    }
    println!("fit F(k) = F0 + F1/k + F2/k^2 over k = {}..{}:", fit.k_min, fit.k_max);
    println!("  F0 = {:.12}\n  F1 = {:.12}\n  F2 = {:.12}\n  residual = {:.3e}", fit.f0, fit.f1, fit.f2, fit.residual);
    let exact = exact_expansion(p, &xi, kmax.max(p.dim() as u64 + 1))?;
    println!(
        "exact from the polynomials d_k, w_k (checked for k <= {}): F0 = {}, F1 = {}",
        exact.k_max, exact.f0, exact.f1
    );
    println!("L(xi . x) = {l_xi} (unit boundary weights), L / (2 Vol P) = {predicted}");
    if input.measure != unit {
        println!("note: lattice-point weights see the unit boundary measure; the file's facet weights are ignored here");
    }
    run.write("weights.csv", csv.as_bytes())?;
    run.write_json(
        "report.json",
        &json!({
            "xi": xi,
            "k_min": fit.k_min, "k_max": fit.k_max,
            "f0": fit.f0, "f1": fit.f1, "f2": fit.f2, "residual": fit.residual,
            "exact_f0": q(&exact.f0), "exact_f1": q(&exact.f1),
            "count_polynomial": qv(&exact.count_polynomial),
            "weight_polynomial": qv(&exact.weight_polynomial),
            "l_xi": q(&l_xi),
            "l_xi_over_twice_volume": q(&predicted),
        }),
    )?;
    Ok(())
}

fn parse_piece(dim: usize, s: &str) -> Result<(Vec<Rational>, Rational)> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| anyhow!("expected `a1,..,an:b`, found `{s}`"))?;
    let slope = parse_rationals(a)?;
    if slope.len() != dim {
        bail!("`{s}` has {} slope entries, expected {dim}", slope.len());
    }
    let c = rational::parse(b.trim()).ok_or_else(|| anyhow!("`{b}` is not a rational number"))?;
    Ok((slope, c))
}

fn pl_function(dim: usize, pieces: &[String], crease: Option<&str>) -> Result<PLConvexFunction> {
    let mut out = Vec::new();
    for s in pieces {
        let (slope, c) = parse_piece(dim, s)?;
        out.push(AffinePiece::new(slope, c));
    }
    if let Some(s) = crease {
        let (slope, c) = parse_piece(dim, s)?;
        out.push(AffinePiece::new(vec![Rational::zero(); dim], Rational::zero()));
        out.push(AffinePiece::new(slope, -c));
    }
    if out.is_empty() {
        bail!("give at least one --piece or a --crease");
    }
    Ok(PLConvexFunction::new(out)?)
}

fn filtration(run: &mut Run, input: &PolytopeInput, func: &PLConvexFunction, k: u64) -> Result<()> {
    let p = &input.polytope;
    let unit = BoundaryMeasure::uniform(p.facets().len());
    let l = functional(p, &unit, func)?;
    let predicted = &l / (p.volume()? * int(2));
    println!("f = {}", describe(func));
    println!("L(f) = {l} (unit boundary weights), L / (2 Vol P) = {predicted}");
    let mut csv = String::from("k,d_k,level_sum,F_k,estimate\n");
    println!("{:>6} {:>12} {:>20} {:>20}", "k", "d_k", "F_k", "2k(F_k - F_2k)");
    let mut ks = Vec::new();
    let mut kk = 1;
    while kk < k {
        ks.push(kk);
        kk *= 2;
    }
    ks.push(k);
    for &kk in &ks {
        let d = filtration_data(p, func, kk)?;
        let est = rational::to_f64(&filtration_futaki(p, func, kk)?);
        let fk = rational::to_f64(&d.normalized());
        println!("{:>6} {:>12} {:>20.12} {:>20.12}", kk, d.count, fk, est);
        writeln!(csv, "{},{},{},{},{}", kk, d.count, d.level_sum, f(fk), f(est))?;
    }
    let estimate = rational::to_f64(&filtration_futaki(p, func, k)?);
    let extrapolated = if k >= 2 && k % 2 == 0 {
        Some(rational::to_f64(&filtration_futaki_extrapolated(p, func, k)?))
    } else {
        None
    };
    if let Some(x) = extrapolated {
        println!("Richardson extrapolation at k = {k}: {x:.12}");
    }
    run.write("filtration.csv", csv.as_bytes())?;
    run.write_json(
        "report.json",
        &json!({
            "function": witness_json(func, &l),
            "l": q(&l),
            "l_over_twice_volume": q(&predicted),
            "k": k,
            "estimate": estimate,
            "extrapolated": extrapolated,
        }),
    )?;
    Ok(())
}

fn solve_options(a: &SolveArgs) -> SolveOptions {
    SolveOptions {
        mesh: MeshSpec::new(a.mesh),
        tol: a.tol,
        max_iter: a.max_iter,
        ceiling: a.ceiling,
        ..SolveOptions::default()
    }
}

fn grid_csv(grid: &kstab::geometry::PotentialGrid) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    grid.write_csv(&mut buf)?;
    Ok(buf)
}

fn termination_name(t: &Termination) -> &'static str {
    match t {
        Termination::Converged => "converged",
        Termination::MaxIterations => "max-iterations",
        Termination::Stalled => "stalled",
        Termination::DivergenceCertificate(_) => "divergence-certificate",
    }
}

/// Runs the solver, writes its outputs and returns the exit code.
fn solve_and_report(run: &mut Run, input: &PolytopeInput, opts: &SolveOptions, dump_every: usize) -> Result<u8> {
    let (p, s) = (&input.polytope, &input.measure);
    let mut dumps: Vec<(usize, Vec<u8>)> = Vec::new();
    let mut dump_error = None;
    let result = solve_observed(p, s, opts, |it, grid| {
        if dump_every > 0 && it % dump_every == 0 {
            match grid_csv(grid) {
                Ok(b) => dumps.push((it, b)),
                Err(e) => dump_error = Some(e),
            }
        }
    });
    if let Some(e) = dump_error {
        return Err(e);
    }
    let report = match result {
        Ok(r) => r,
        Err(Error::NonZeroFutaki(msg)) => {
            println!("refused: {msg}");
            run.write_json("report.json", &json!({ "termination": "refused", "reason": msg }))?;
            return Ok(exit::FUTAKI);
        }
        Err(Error::UnsupportedDomain(msg)) => {
            println!("unsupported: {msg}");
            run.write_json("report.json", &json!({ "termination": "unsupported-domain", "reason": msg }))?;
            return Ok(exit::UNSUPPORTED);
        }
        Err(e) => return Err(e.into()),
    };
    for (it, bytes) in dumps {
        run.write(&format!("grid_{it:05}.csv"), &bytes)?;
    }
    write_solve_outputs(run, &report)?;
    Ok(match &report.termination {
        Termination::Converged => exit::OK,
        Termination::DivergenceCertificate(_) => exit::DIVERGENCE,
        _ => exit::NOT_CONVERGED,
    })
}

fn write_solve_outputs(run: &mut Run, report: &SolveReport) -> Result<()> {
    let mut csv = String::from("iteration,mabuchi,residual,boundary_residual,min_det,u_sup,phi_sup,shift,step\n");
    for h in &report.history {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            h.iteration,
            f(h.mabuchi),
            f(h.residual),
            f(h.boundary_residual),
            f(h.min_det),
            f(h.u_sup),
            f(h.phi_sup),
            f(h.shift),
            f(h.step)
        )?;
    }
    run.write("history.csv", csv.as_bytes())?;
    run.write("grid.csv", &grid_csv(&report.grid)?)?;
    let last = report.history.last().expect("history is never empty");
    println!("termination: {}", termination_name(&report.termination));
    println!("iterations: {}", last.iteration);
    println!("Mabuchi functional: {:.12}", last.mabuchi);
    println!("interior residual: {:.3e}", report.residual);
    println!("boundary residual: {:.3e}", report.boundary_residual);
    println!("min det D^2 u: {:.6e} at {:?}", last.min_det, last.min_det_at);
    let mut contract = Vec::new();
    if report.converged() {
        println!("integration by parts check, int u^ab f_ab = L(f):");
        for fq in quadratic_basis(report.grid.dim()) {
            let c = contract_check(report, &fq)?;
            println!(
                "  f = {:<28} pairing {:>14.10} exact {:>14.10} |diff| {:.2e} bound {:.2e} {}",
                quadratic_name(&fq),
                c.pairing,
                c.exact,
                c.discrepancy(),
                10.0 * (c.quadrature_error + c.residual_bound),
                if c.holds() { "ok" } else { "VIOLATED" }
            );
            contract.push(json!({
                "function": quadratic_name(&fq), "pairing": c.pairing, "exact": c.exact,
                "quadrature_error": c.quadrature_error, "residual_bound": c.residual_bound, "holds": c.holds(),
            }));
        }
    }
    let certificate = report.certificate().map(|c| {
        println!("divergence certificate: sup|phi| = {:.3e} > ceiling {:.3e}", c.phi_sup, c.ceiling);
        println!("  L_h(phi / sup|phi|) = {:.6e}, Mabuchi drop over the last iterations {:.3e}", c.direction_functional, c.mabuchi_drop);
        if let (Some(w), Some(v)) = (&c.witness, &c.witness_value) {
            println!("  destabiliser read off the direction: {}  with L = {}", describe(w), v);
        }
        json!({
            "phi_sup": c.phi_sup, "ceiling": c.ceiling,
            "direction_functional": c.direction_functional,
            "linear_part": c.linear_part, "fit_residual": c.fit_residual,
            "mabuchi_drop": c.mabuchi_drop,
            "witness": match (&c.witness, &c.witness_value) {
                (Some(w), Some(v)) => witness_json(w, v),
                _ => Value::Null,
            },
        })
    });
    run.write_json(
        "report.json",
        &json!({
            "termination": termination_name(&report.termination),
            "iterations": last.iteration,
            "mabuchi": last.mabuchi,
            "residual": report.residual,
            "boundary_residual": report.boundary_residual,
            "min_det": last.min_det,
            "min_det_at": last.min_det_at,
            "futaki": qv(&report.futaki),
            "contract": contract,
            "certificate": certificate,
        }),
    )?;
    Ok(())
}

fn quadratic_name(fq: &Quadratic) -> String {
    let h = &fq.hessian;
    let mut terms: Vec<(Rational, String)> = Vec::new();
    if !fq.constant.is_zero() {
        terms.push((fq.constant.clone(), String::new()));
    }
    for (a, c) in fq.linear.iter().enumerate() {
        terms.push((c.clone(), format!("x{}", a + 1)));
    }
    for a in 0..h.len() {
        for b in a..h.len() {
            let c = if a == b { &h[a][a] / int(2) } else { h[a][b].clone() };
            let monomial = if a == b { format!("x{}^2", a + 1) } else { format!("x{}*x{}", a + 1, b + 1) };
            terms.push((c, monomial));
        }
    }
    let mut out = String::new();
    for (c, monomial) in terms.into_iter().filter(|(c, _)| !c.is_zero()) {
        let negative = c < int(0);
        let magnitude = if negative { -c } else { c };
        let body = match (monomial.is_empty(), magnitude == int(1)) {
            (true, _) => magnitude.to_string(),
            (false, true) => monomial,
            (false, false) => format!("{magnitude}*{monomial}"),
        };
        match (out.is_empty(), negative) {
            (true, false) => out.push_str(&body),
            (true, true) => out.push_str(&format!("-{body}")),
            (false, false) => out.push_str(&format!(" + {body}")),
            (false, true) => out.push_str(&format!(" - {body}")),
        }
    }
    if out.is_empty() {
        "0".into()
    } else {
        out
    }
}

fn ray(run: &mut Run, input: &PolytopeInput, hessian: &str, linear: Option<&str>, s_max: f64, mesh: usize) -> Result<()> {
    let p = &input.polytope;
    let n = p.dim();
    let h: Vec<Vec<Rational>> = hessian.split(';').map(parse_rationals).collect::<Result<_>>()?;
    if h.len() != n || h.iter().any(|r| r.len() != n) {
        bail!("--hessian must be a {n}x{n} matrix");
    }
    let lin = match linear {
        Some(s) => parse_rationals(s)?,
        None => vec![Rational::zero(); n],
    };
    let fq = Quadratic::new(Rational::zero(), lin, h)?;
    let r = ray_slope(p, &input.measure, &fq, s_max, &MeshSpec::new(mesh))?;
    let exact = rational::to_f64(&r.exact);
    let mut csv = String::from("s,mabuchi\n");
    for (s, v) in &r.ladder {
        writeln!(csv, "{},{}", f(*s), f(*v))?;
    }
    println!("f = {}", quadratic_name(&fq));
    println!("fitted slope: {:.12}", r.slope);
    println!("log coefficient: {:.6}", r.log_coefficient);
    println!("exact L(f): {} = {:.12}", r.exact, exact);
    let rel = if exact != 0.0 { (r.slope - exact).abs() / exact.abs() } else { r.slope.abs() };
    println!("relative difference: {rel:.3e}");
    run.write("ladder.csv", csv.as_bytes())?;
    run.write_json(
        "report.json",
        &json!({
            "function": quadratic_name(&fq),
            "slope": r.slope, "log_coefficient": r.log_coefficient,
            "exact": q(&r.exact), "exact_f64": exact, "relative_difference": rel,
        }),
    )?;
    Ok(())
}

fn random_sphere(n: usize, seed: u64) -> Result<SphereConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = (0..n)
        .map(|_| {
            let z: f64 = rng.gen_range(-1.0..1.0);
            let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let r = (1.0 - z * z).sqrt();
            [r * t.cos(), r * t.sin(), z]
        })
        .collect();
    Ok(SphereConfig::simple(pts)?)
}

fn flow_options(a: &FlowArgs) -> FlowOptions {
    FlowOptions {
        step: a.step,
        max_steps: a.max_steps,
        ..FlowOptions::default()
    }
}

fn flow_sphere(run: &mut Run, c: &SphereConfig, args: &FlowArgs) -> Result<()> {
    let flow = sphere_flow(c, &flow_options(args));
    let mut csv = String::from("iteration,point,x,y,z,multiplicity,moment_norm,step\n");
    for st in &flow.trajectory {
        for (i, (u, m)) in st.points.iter().zip(c.multiplicities()).enumerate() {
            writeln!(
                csv,
                "{},{},{},{},{},{},{},{}",
                st.iteration,
                i,
                f(u[0]),
                f(u[1]),
                f(u[2]),
                m,
                f(st.moment_norm),
                f(st.step)
            )?;
        }
    }
    run.write("trajectory.csv", csv.as_bytes())?;
    let last = flow.trajectory.last().expect("trajectory is never empty");
    println!("points: {} (total multiplicity {})", c.points().len(), c.degree());
    println!("iterations: {}", last.iteration);
    println!("|mu|: {:.6e} -> {:.6e}", flow.trajectory[0].moment_norm, last.moment_norm);
    let verdict = match &flow.verdict {
        SphereVerdict::Balanced => {
            println!("verdict: balanced (polystable)");
            json!({ "kind": "balanced" })
        }
        SphereVerdict::FixedPoint {
            axis,
            forward,
            backward,
            moment_norm,
        } => {
            println!(
                "verdict: flows to a non-zero critical point: multiplicity {forward} at {axis:?} and {backward} at the antipode, |mu| = {moment_norm:.9}"
            );
            json!({ "kind": "fixed-point", "axis": axis, "forward": forward, "backward": backward, "moment_norm": moment_norm })
        }
        SphereVerdict::NotConverged => {
            println!("verdict: not converged");
            json!({ "kind": "not-converged" })
        }
    };
    run.write_json(
        "report.json",
        &json!({
            "verdict": verdict,
            "iterations": last.iteration,
            "initial_moment_norm": flow.trajectory[0].moment_norm,
            "final_moment_norm": last.moment_norm,
            "limit": flow.limit.points(),
            "multiplicities": flow.limit.multiplicities(),
        }),
    )?;
    Ok(())
}

fn complex_str(z: &Complex64) -> String {
    z.to_string()
}

fn flow_matrix(run: &mut Run, a: &MatrixPoint, args: &FlowArgs) -> Result<()> {
    let flow = matrix_flow(a, &flow_options(args));
    let mut csv = String::from("iteration,commutator_norm,frobenius_norm,step\n");
    for st in &flow.trajectory {
        writeln!(
            csv,
            "{},{},{},{}",
            st.iteration,
            f(st.commutator_norm),
            f(st.frobenius_norm),
            f(st.step)
        )?;
    }
    run.write("trajectory.csv", csv.as_bytes())?;
    let last = flow.trajectory.last().expect("trajectory is never empty");
    let verdict = match flow.verdict {
        MatrixVerdict::Normal => "normal",
        MatrixVerdict::CollapsesToZero => "collapses-to-zero",
        MatrixVerdict::Stationary => "stationary",
        MatrixVerdict::NotConverged => "not-converged",
    };
    println!("iterations: {}", last.iteration);
    println!("|[A, A*]|: {:.6e} -> {:.6e}", flow.trajectory[0].commutator_norm, last.commutator_norm);
    println!("|A|_F: {:.6e} -> {:.6e}", flow.trajectory[0].frobenius_norm, last.frobenius_norm);
    println!("eigenvalue drift: {:.3e}", flow.eigenvalue_drift);
    println!("limit:");
    for row in flow.limit.rows() {
        println!("  {}", row.iter().map(complex_str).collect::<Vec<_>>().join("  "));
    }
    println!("verdict: {verdict}");
    run.write_json(
        "report.json",
        &json!({
            "verdict": &flow.verdict,
            "iterations": last.iteration,
            "initial_commutator_norm": flow.trajectory[0].commutator_norm,
            "final_commutator_norm": last.commutator_norm,
            "final_frobenius_norm": last.frobenius_norm,
            "eigenvalue_drift": flow.eigenvalue_drift,
            "eigenvalues": a.eigenvalues().iter().map(complex_str).collect::<Vec<_>>(),
            "limit": flow.limit.rows().iter().map(|r| r.iter().map(complex_str).collect::<Vec<_>>()).collect::<Vec<_>>(),
        }),
    )?;
    Ok(())
}

fn pipeline(run: &mut Run, input: &PolytopeInput, resolution: u32, solve: &SolveArgs) -> Result<u8> {
    let (p, s) = (&input.polytope, &input.measure);
    let fut = futaki_linear(p, s)?;
    if !is_zero_vector(&fut) {
        println!("Futaki invariant {} is non-zero: no constant scalar curvature metric", fmt_vec(&fut));
        run.write_json("pipeline.json", &json!({ "stage": "futaki", "futaki": qv(&fut), "exit": exit::FUTAKI }))?;
        return Ok(exit::FUTAKI);
    }
    println!("== destabilize (resolution {resolution})");
    let verdict = crease_search(p, s, resolution)?;
    print_verdict(&verdict);
    if verdict.status == StabilityStatus::Unstable {
        run.write_json(
            "pipeline.json",
            &json!({ "stage": "destabilize", "verdict": verdict_json(&verdict), "exit": exit::UNSTABLE }),
        )?;
        return Ok(exit::UNSTABLE);
    }
    println!("== solve (mesh {}, tol {:e})", solve.mesh, solve.tol);
    let opts = solve_options(solve);
    let code = solve_and_report(run, input, &opts, 0)?;
    let anomaly = code == exit::DIVERGENCE;
    if anomaly {
        println!(
            "anomaly: no destabilising crease at resolution {resolution}, but the solver diverged; a finer search may find one"
        );
    }
    run.write_json(
        "pipeline.json",
        &json!({ "stage": "solve", "verdict": verdict_json(&verdict), "exit": code, "anomaly": anomaly }),
    )?;
    Ok(code)
}
