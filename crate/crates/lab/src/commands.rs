//! Subcommand implementations.

use std::path::Path;

use ertl_core::circle::{
    cd_from_verblunsky, integrate_cd, integrate_schur, kernel_coeffs, rhs_schur, verblunsky_from_moments, VerblunskySeq,
};
use ertl_core::lattice::{self, Closure, IntegrateOptions, LatticeState, System};
use ertl_core::lax::{lax_residual_report, LaxResidual};
use ertl_core::lorth::{bootstrap_recurrence, LPolySequence, RecurrenceCoeffs};
use ertl_core::measures::{compute_moments, MomentSpec, RealWeight};
use ertl_core::ode::StepControl;
use ertl_core::oracles::ClosedFormExample;
use ertl_core::roots::sort_lexicographic;
use ertl_core::{lax, C64};
use serde::Serialize;

use crate::cli::*;
use crate::error::{LabError, Result};
use crate::exact::exact_for_spec;
use crate::formats::{
    emit, fmt_f64, read_json, read_table, to_pair, InitDocument, Metadata, Pair, SpecDocument, Table,
};
use crate::random::{case_rng, generic_state};

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Moments(a) => moments(a),
        Command::FromMeasure(a) => from_measure(a),
        Command::Simulate(a) => simulate(a),
        Command::VerifyLax(a) => verify_lax(a),
        Command::Spectrum(a) => spectrum(a),
        Command::Circle(c) => circle_command(c),
        Command::Oracle(o) => oracle(o),
    }
}

fn write_table(table: &Table, config: &impl Serialize, seed: Option<u64>, out: Option<&Path>) -> Result<()> {
    let meta = Metadata::new(config, seed)?;
    emit(out, &table.render(&meta)?)
}

fn write_json(value: &impl Serialize, out: Option<&Path>) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    emit(out, &bytes)
}

fn load_spec(arg: &str) -> Result<MomentSpec> {
    read_json::<SpecDocument>(arg)?.to_spec()
}

fn moments(a: &MomentsArgs) -> Result<()> {
    let spec = load_spec(&a.spec)?;
    let table = compute_moments(&spec, a.t, a.k_max)?;
    let mut out = Table::new(&["k", "re_nu", "im_nu"]);
    for (k, nu) in table.iter() {
        out.push(vec![k.to_string(), fmt_f64(nu.re), fmt_f64(nu.im)]);
    }
    write_table(&out, a, None, a.out.as_deref())
}

/// Rows `n, β_n, α_n` for `n = 1..N` with `α_1 = 0`.
pub fn coefficient_table(rc: &RecurrenceCoeffs) -> Table {
    let mut out = Table::new(&["n", "re_beta", "im_beta", "re_alpha", "im_alpha"]);
    for n in 1..=rc.depth() {
        let (b, al) = (rc.beta(n), rc.alpha(n));
        out.push(vec![n.to_string(), fmt_f64(b.re), fmt_f64(b.im), fmt_f64(al.re), fmt_f64(al.im)]);
    }
    out
}

#[derive(Serialize)]
struct PolyDump {
    t: f64,
    /// `coeffs[n][j] = a_{n,j}`.
    coeffs: Vec<Vec<Pair>>,
    sigma_diag: Vec<Pair>,
    sigma_minus: Vec<Pair>,
    tau: Vec<Pair>,
    beta: Vec<Pair>,
    /// `α_2..α_{N+1}`.
    alpha: Vec<Pair>,
    warnings: Vec<String>,
}

fn pairs(z: &[C64]) -> Vec<Pair> {
    z.iter().copied().map(to_pair).collect()
}

fn poly_dump(lp: &LPolySequence, rc: &RecurrenceCoeffs) -> PolyDump {
    PolyDump {
        t: lp.t,
        coeffs: (0..=lp.depth()).map(|n| pairs(lp.row(n))).collect(),
        sigma_diag: pairs(&lp.sigma_diag),
        sigma_minus: pairs(&lp.sigma_minus),
        tau: pairs(&lp.tau),
        beta: pairs(rc.betas()),
        alpha: pairs(rc.alphas()),
        warnings: lp.warnings.clone(),
    }
}

fn measure_coeffs(spec: &MomentSpec, t: f64, depth: usize) -> Result<(LPolySequence, RecurrenceCoeffs)> {
    Ok(bootstrap_recurrence(&compute_moments(spec, t, depth + 1)?, depth)?)
}

fn from_measure(a: &FromMeasureArgs) -> Result<()> {
    if a.exact && a.dump_poly.is_some() {
        return Err(LabError::usage("--dump-poly is not available with --exact"));
    }
    let spec = load_spec(&a.spec)?;
    let rc = if a.exact {
        let exact = exact_for_spec(&spec, a.t, a.depth)?;
        let real = |v: Vec<f64>| v.into_iter().map(|x| C64::new(x, 0.0)).collect();
        let (p, q) = spec.modification();
        RecurrenceCoeffs::new(a.t, p, q, real(exact.beta_f64()), real(exact.alpha_f64()))?
    } else {
        let (lp, rc) = measure_coeffs(&spec, a.t, a.depth)?;
        if let Some(path) = &a.dump_poly {
            write_json(&poly_dump(&lp, &rc), Some(path))?;
        }
        rc
    };
    write_table(&coefficient_table(&rc), a, None, a.out.as_deref())
}

fn oracle(o: &OracleCommand) -> Result<()> {
    let (a, ex) = match o {
        OracleCommand::Example1(a) => (a, ClosedFormExample::example1(a.delta, a.q)?),
        OracleCommand::Example2(a) => (a, ClosedFormExample::example2(a.delta, a.q)?),
    };
    if a.depth == 0 || !(a.t >= 0.0) {
        return Err(LabError::usage("oracle needs N ≥ 1 and t ≥ 0"));
    }
    write_table(&coefficient_table(&ex.coeffs(a.t, a.depth)), o, None, a.out.as_deref())
}

fn output_times(t0: f64, t_end: f64, samples: usize) -> Result<Vec<f64>> {
    if samples == 0 || !(t_end > t0) || !t_end.is_finite() {
        return Err(LabError::usage("need t-end > 0 and at least one sample"));
    }
    Ok((1..=samples).map(|i| t0 + (t_end - t0) * i as f64 / samples as f64).collect())
}

fn step_control(a: &SimulateArgs) -> Result<StepControl> {
    let ctrl = StepControl::adaptive(a.rel_tol, a.abs_tol);
    ctrl.validate()?;
    Ok(ctrl)
}

fn check_sites(requested: Option<usize>, available: usize) -> Result<usize> {
    match requested {
        Some(n) if n != available => {
            Err(LabError::usage(format!("--N {n} does not match the {available} sites of the initial data")))
        }
        _ => Ok(available),
    }
}

/// Closed-form source for buffered runs of the half-line examples.
fn example_for(spec: &MomentSpec) -> Option<ClosedFormExample> {
    let MomentSpec::RealLine { weight, p, q, .. } = spec else { return None };
    let (delta, wq) = match weight {
        RealWeight::Example1 { delta, q } => (*delta, *q),
        RealWeight::Example2 { delta, q } => (*delta, *q),
    };
    if *p != C64::new(1.0, 0.0) || *q != C64::new(wq, 0.0) {
        return None;
    }
    match weight {
        RealWeight::Example1 { .. } => ClosedFormExample::example1(delta, wq).ok(),
        RealWeight::Example2 { .. } => ClosedFormExample::example2(delta, wq).ok(),
    }
}

fn simulate(a: &SimulateArgs) -> Result<()> {
    let outputs = output_times(0.0, a.t_end, a.samples)?;
    let ctrl = step_control(a)?;
    match a.system {
        SystemArg::Cd => return simulate_cd(a, &outputs, &ctrl),
        SystemArg::Schur => return simulate_schur(a, &outputs, &ctrl),
        _ => {}
    }
    let system = match a.system {
        SystemArg::Ertl => System::Ertl,
        SystemArg::Rtl1 => System::Rtl1,
        SystemArg::Rtl2 => System::Rtl2,
        _ => System::Langmuir,
    };
    let opts = IntegrateOptions { ctrl, check_positivity: a.check_positivity };
    let traj = match (&a.init, &a.measure) {
        (Some(init), _) => {
            if a.buffered {
                return Err(LabError::usage("--buffered needs --measure"));
            }
            let (beta, alpha) = read_json::<InitDocument>(init)?.lattice()?;
            check_sites(a.sites, beta.len())?;
            let state = LatticeState::finite(a.p.0, a.q.0, 0.0, beta, alpha)?;
            lattice::integrate(&state, &outputs, system, &opts)?
        }
        (None, Some(measure)) => {
            let spec = load_spec(measure)?;
            let n = a.sites.ok_or_else(|| LabError::usage("--measure needs --N"))?;
            if a.buffered {
                let ex = example_for(&spec)
                    .ok_or_else(|| LabError::usage("--buffered is available for the half-line examples with p = 1"))?;
                let source = |m: usize| LatticeState::from_coeffs(&ex.coeffs(0.0, m), Closure::Finite);
                lattice::integrate_buffered(source, n, &outputs, system, &opts)?.0
            } else {
                let (_, rc) = measure_coeffs(&spec, 0.0, n)?;
                let state = LatticeState::from_coeffs(&rc, Closure::Finite)?;
                lattice::integrate(&state, &outputs, system, &opts)?
            }
        }
        (None, None) => return Err(LabError::usage("simulate needs --init or --measure")),
    };
    let mut out = Table::new(&["t", "site", "re_beta", "im_beta", "re_alpha", "im_alpha"]);
    for (t, state) in traj.times.iter().zip(&traj.states) {
        for n in 1..=state.reported() {
            let (b, al) = (state.beta(n), state.alpha(n));
            out.push(vec![fmt_f64(*t), n.to_string(), fmt_f64(b.re), fmt_f64(b.im), fmt_f64(al.re), fmt_f64(al.im)]);
        }
    }
    write_table(&out, a, None, a.out.as_deref())
}

fn circle_spec(arg: &str, q: Option<Cx>) -> Result<MomentSpec> {
    let mut doc = read_json::<SpecDocument>(arg)?;
    if let Some(Cx(q)) = q {
        doc.q = Some(to_pair(q));
        doc.p = Some(to_pair(q.conj()));
    }
    let spec = doc.to_spec()?;
    if !matches!(spec, MomentSpec::Circle { .. }) {
        return Err(LabError::usage("expected a unit_circle_weighted specification"));
    }
    Ok(spec)
}

/// Verblunsky coefficients `𝔞_0..𝔞_{len-1}` of the measure underlying a circle spec.
fn circle_verblunsky(spec: &MomentSpec, t: f64, len: usize) -> Result<VerblunskySeq> {
    let MomentSpec::Circle { base, q, .. } = spec else {
        return Err(LabError::usage("expected a unit_circle_weighted specification"));
    };
    let opuc = MomentSpec::circle(*base, ertl_core::measures::CircleFunctional::Opuc, q.conj(), *q)?;
    let table = compute_moments(&opuc, t, len + 1)?;
    Ok(verblunsky_from_moments(&table, len)?)
}

fn simulate_cd(a: &SimulateArgs, outputs: &[f64], ctrl: &StepControl) -> Result<()> {
    let (c, d, q) = match (&a.init, &a.measure) {
        (Some(init), _) => {
            let (c, d) = read_json::<InitDocument>(init)?.cd()?;
            (c, d, a.q.0)
        }
        (None, Some(measure)) => {
            let spec = circle_spec(measure, Some(a.q))?;
            let n = a.sites.ok_or_else(|| LabError::usage("--measure needs --N"))?;
            let s = cd_from_verblunsky(&circle_verblunsky(&spec, 0.0, n)?)?;
            (s.c, s.d, a.q.0)
        }
        (None, None) => return Err(LabError::usage("simulate needs --init or --measure")),
    };
    check_sites(a.sites, c.len())?;
    let (states, _) = integrate_cd(&c, &d, q, 0.0, outputs, ctrl)?;
    let mut out = Table::new(&["t", "site", "c", "d"]);
    let all = std::iter::once((0.0, (c, d))).chain(outputs.iter().copied().zip(states));
    for (t, (c, d)) in all {
        for n in 0..c.len() {
            out.push(vec![fmt_f64(t), (n + 1).to_string(), fmt_f64(c[n]), fmt_f64(d[n])]);
        }
    }
    write_table(&out, a, None, a.out.as_deref())
}

fn simulate_schur(a: &SimulateArgs, outputs: &[f64], ctrl: &StepControl) -> Result<()> {
    let v = match (&a.init, &a.measure) {
        (Some(init), _) => VerblunskySeq::new(0.0, a.q.0, 1.0, read_json::<InitDocument>(init)?.verblunsky()?)?,
        (None, Some(measure)) => {
            let spec = circle_spec(measure, Some(a.q))?;
            let n = a.sites.ok_or_else(|| LabError::usage("--measure needs --N"))?;
            circle_verblunsky(&spec, 0.0, n)?
        }
        (None, None) => return Err(LabError::usage("simulate needs --init or --measure")),
    };
    check_sites(a.sites, v.len())?;
    let (seqs, _) = integrate_schur(&v, outputs, ctrl)?;
    let mut out = Table::new(&["t", "site", "re_a", "im_a"]);
    for s in std::iter::once(&v).chain(&seqs) {
        for (n, z) in s.coefficients().iter().enumerate() {
            out.push(vec![fmt_f64(s.t), n.to_string(), fmt_f64(z.re), fmt_f64(z.im)]);
        }
    }
    write_table(&out, a, None, a.out.as_deref())
}

#[derive(Debug, Serialize)]
struct Norms {
    h: f64,
    f: f64,
    dh: f64,
}

#[derive(Debug, Serialize)]
struct LaxReport {
    meta: Metadata,
    residual: f64,
    #[serde(rename = "N")]
    sites: usize,
    norms: Norms,
    cases: usize,
    worst_case: usize,
    t: f64,
}

/// Worker count from `ERTL_THREADS`, else the available parallelism.
pub fn thread_budget(jobs: usize) -> usize {
    let cap = std::env::var("ERTL_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    cap.min(jobs).max(1)
}

/// Runs `job(i)` for `i < count` on at most `thread_budget(count)` threads,
/// returning results in index order.
pub fn sweep<T: Send>(count: usize, job: impl Fn(usize) -> Result<T> + Sync) -> Result<Vec<T>> {
    let threads = thread_budget(count);
    let mut slots: Vec<Option<Result<T>>> = (0..count).map(|_| None).collect();
    std::thread::scope(|scope| {
        let job = &job;
        let handles: Vec<_> = (0..threads)
            .map(|w| scope.spawn(move || (w..count).step_by(threads).map(|i| (i, job(i))).collect::<Vec<_>>()))
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("sweep worker panicked") {
                slots[i] = Some(r);
            }
        }
    });
    slots.into_iter().map(|s| s.expect("every case ran")).collect()
}

fn evolve(state: LatticeState, t: Option<f64>) -> Result<LatticeState> {
    match t {
        Some(t) if t != state.t => {
            let traj = lattice::integrate(&state, &[t], System::Ertl, &IntegrateOptions::default())?;
            Ok(traj.last().clone())
        }
        _ => Ok(state),
    }
}

fn verify_lax(a: &VerifyLaxArgs) -> Result<()> {
    let (sites, reports): (usize, Vec<LaxResidual>) = match &a.init {
        Some(init) => {
            let (beta, alpha) = read_json::<InitDocument>(init)?.lattice()?;
            let sites = beta.len();
            let state = LatticeState::finite(a.p.0, a.q.0, 0.0, beta, alpha)?;
            (sites, vec![lax_residual_report(&evolve(state, a.t)?)?])
        }
        None => {
            if a.sites == 0 || a.cases == 0 {
                return Err(LabError::usage("verify-lax needs N ≥ 1 and at least one case"));
            }
            let reports = sweep(a.cases, |i| {
                let state = generic_state(&mut case_rng(a.seed, i as u64), a.sites, a.p.0, a.q.0)?;
                Ok(lax_residual_report(&evolve(state, a.t)?)?)
            })?;
            (a.sites, reports)
        }
    };
    let (worst_case, worst) =
        reports.iter().enumerate().max_by(|x, y| x.1.residual.total_cmp(&y.1.residual)).expect("at least one case");
    let report = LaxReport {
        meta: Metadata::new(a, Some(a.seed))?,
        residual: worst.residual,
        sites,
        norms: Norms { h: worst.h_norm, f: worst.f_norm, dh: worst.dh_norm },
        cases: reports.len(),
        worst_case,
        t: a.t.unwrap_or(0.0),
    };
    write_json(&report, a.out.as_deref())
}

/// `(site, β, α)` read from a trajectory row.
type SiteRow = (usize, C64, C64);

fn spectrum(a: &SpectrumArgs) -> Result<()> {
    let (header, rows) = read_table(&a.traj)?;
    let expected = ["t", "site", "re_beta", "im_beta", "re_alpha", "im_alpha"];
    if header != expected {
        return Err(LabError::usage("trajectory must have columns t,site,re_beta,im_beta,re_alpha,im_alpha"));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|e| LabError::usage(format!("bad number '{s}': {e}")));
    // grouped by time label in order of first appearance
    let mut groups: Vec<(&str, Vec<SiteRow>)> = Vec::new();
    for row in &rows {
        let site: usize = row[1].parse().map_err(|_| LabError::usage("bad site index"))?;
        let entry = (site, C64::new(num(&row[2])?, num(&row[3])?), C64::new(num(&row[4])?, num(&row[5])?));
        match groups.iter_mut().find(|g| g.0 == row[0]) {
            Some(g) => g.1.push(entry),
            None => groups.push((&row[0], vec![entry])),
        }
    }
    let mut out = Table::new(&["t", "i", "re_lambda", "im_lambda"]);
    let one = C64::new(1.0, 0.0);
    for (label, mut sites) in groups {
        let t = num(label)?;
        sites.sort_by_key(|s| s.0);
        if sites.iter().enumerate().any(|(k, s)| s.0 != k + 1) {
            return Err(LabError::usage(format!("sites at t = {t} are not 1..N")));
        }
        let beta = sites.iter().map(|s| s.1).collect();
        let alpha = sites[1..].iter().map(|s| s.2).collect();
        let state = LatticeState::finite(one, one, t, beta, alpha)?;
        let mut eig = lax::spectrum(&state)?;
        sort_lexicographic(&mut eig);
        for (i, z) in eig.iter().enumerate() {
            out.push(vec![fmt_f64(t), (i + 1).to_string(), fmt_f64(z.re), fmt_f64(z.im)]);
        }
    }
    write_table(&out, a, None, a.out.as_deref())
}

fn circle_command(c: &CircleCommand) -> Result<()> {
    match c {
        CircleCommand::Verblunsky(a) => {
            let spec = circle_spec(&a.measure, a.q)?;
            let v = circle_verblunsky(&spec, a.t, a.depth)?;
            let mut out = Table::new(&["n", "re_a", "im_a"]);
            for (n, z) in v.coefficients().iter().enumerate() {
                out.push(vec![n.to_string(), fmt_f64(z.re), fmt_f64(z.im)]);
            }
            write_table(&out, c, None, a.out.as_deref())
        }
        CircleCommand::Kernel { common: a, w } => {
            let spec = circle_spec(&a.measure, a.q)?;
            let v = circle_verblunsky(&spec, a.t, a.depth + 1)?;
            let k = kernel_coeffs(&v, w.0)?;
            write_table(&coefficient_table(&k.coeffs), c, None, a.out.as_deref())
        }
        CircleCommand::Cd(a) => {
            let spec = circle_spec(&a.measure, a.q)?;
            let s = cd_from_verblunsky(&circle_verblunsky(&spec, a.t, a.depth)?)?;
            let mut out = Table::new(&["n", "c", "d"]);
            for n in 0..s.c.len() {
                out.push(vec![(n + 1).to_string(), fmt_f64(s.c[n]), fmt_f64(s.d[n])]);
            }
            write_table(&out, c, None, a.out.as_deref())
        }
        CircleCommand::SchurCheck { common: a, h, tol } => {
            if !(*h > 0.0 && *tol > 0.0) {
                return Err(LabError::usage("h and tol must be positive"));
            }
            let spec = circle_spec(&a.measure, a.q)?;
            let MomentSpec::Circle { q, .. } = spec else { unreachable!() };
            let v = circle_verblunsky(&spec, a.t, a.depth)?;
            let plus = circle_verblunsky(&spec, a.t + h, a.depth)?;
            let minus = circle_verblunsky(&spec, a.t - h, a.depth)?;
            let rhs = rhs_schur(&v, q);
            let mut out = Table::new(&["n", "re_a", "im_a", "re_fd", "im_fd", "re_rhs", "im_rhs"]);
            let mut worst = 0.0f64;
            for (n, r) in rhs.iter().enumerate() {
                let fd = (plus.coefficients()[n] - minus.coefficients()[n]) / (2.0 * h);
                worst = worst.max((fd - r).norm());
                let z = v.coefficients()[n];
                out.push(vec![
                    n.to_string(),
                    fmt_f64(z.re),
                    fmt_f64(z.im),
                    fmt_f64(fd.re),
                    fmt_f64(fd.im),
                    fmt_f64(r.re),
                    fmt_f64(r.im),
                ]);
            }
            write_table(&out, c, None, a.out.as_deref())?;
            if worst > *tol {
                return Err(ertl_core::Error::MismatchBeyondTolerance { what: "Schur flow", diff: worst }.into());
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_keeps_index_order() {
        let out = sweep(37, |i| Ok(i * i)).unwrap();
        assert_eq!(out, (0..37).map(|i| i * i).collect::<Vec<_>>());
        assert!(sweep(5, |i| if i == 3 { Err(LabError::usage("x")) } else { Ok(i) }).is_err());
    }

    #[test]
    fn output_grid_is_uniform_and_validated() {
        assert_eq!(output_times(0.0, 1.0, 4).unwrap(), vec![0.25, 0.5, 0.75, 1.0]);
        assert!(output_times(0.0, 0.0, 4).is_err());
        assert!(output_times(0.0, 1.0, 0).is_err());
        assert!(output_times(0.0, f64::NAN, 3).is_err());
    }

    #[test]
    fn buffered_source_only_for_unmodified_examples() {
        assert!(example_for(&MomentSpec::example1(1.0, 2.0).unwrap()).is_some());
        let shifted = MomentSpec::real_line(
            RealWeight::Example1 { delta: 1.0, q: 2.0 },
            ertl_core::measures::Support::HALF_LINE,
            C64::new(0.5, 0.0),
            C64::new(2.0, 0.0),
        )
        .unwrap();
        assert!(example_for(&shifted).is_none());
    }

    #[test]
    fn coefficient_rows_start_with_zero_alpha() {
        let rc = ClosedFormExample::example1(1.0, 2.0).unwrap().coeffs(0.0, 3);
        let table = coefficient_table(&rc);
        assert_eq!(table.rows.len(), 3);
        assert_eq!(table.rows[0][3], fmt_f64(0.0));
        assert_eq!(table.rows[1][3], fmt_f64(0.5));
    }
}
