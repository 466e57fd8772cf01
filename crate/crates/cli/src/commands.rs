//! One function per subcommand. Each returns whether its tolerance checks passed.

use std::io;
use std::path::Path;

use num_traits::One;
use serde_json::json;

use averaging_core::lattice::LatticePoint;
use averaging_core::series::{
    alpha_d, asymptotics_check, series_from_sequence, verify_closed_form_d1, verify_first_passage_structure,
    verify_gf_relations, verify_potlach_relation, AsymptoticConstants,
};
use averaging_core::sim::{
    estimate_clt, estimate_mean_field, estimate_moments, for_each_trial, simulate,
    simulate_with, InitialCondition, MassField, SimConfig, TestFunction,
};
use averaging_core::walk::{
    first_passage_sequences, potlach_kernels, poissonized_return_float, required_steps, return_sequence,
    return_sequence_float, KernelKind, SequenceName, SequenceTable,
};
use num_rational::BigRational;

use crate::acceptance::{run_suite, Scale, Tolerances};
use crate::config::{
    AcceptArgs, AsymptoticsArgs, CltArgs, Command, Invocation, ModeArg, PotlachArgs, SeriesArgs, SimulateArgs,
    WalkDpArgs,
};
use crate::output::{fmt_f64, write_json, CsvSink};

/// Failure while running a command (not a tolerance failure).
#[derive(Debug)]
pub struct RunError(pub String);

impl<E: std::fmt::Display> From<E> for RunError {
    fn from(e: E) -> Self {
        RunError(e.to_string())
    }
}

type Outcome = Result<bool, RunError>;

struct Ctx<'a> {
    inv: &'a Invocation,
    hash: String,
}

impl Ctx<'_> {
    fn seed(&self) -> u64 {
        self.inv.command.common().seed
    }

    fn sink(&self) -> io::Result<CsvSink> {
        CsvSink::open(self.inv.command.common().out.as_deref(), self.seed(), &self.hash)
    }

    fn summary(&self, value: serde_json::Value) -> io::Result<()> {
        if let Some(path) = &self.inv.command.common().json_summary {
            let mut v = value;
            v["subcommand"] = json!(self.inv.command.name());
            v["seed"] = json!(self.seed());
            v["config"] = json!(self.hash);
            v["version"] = json!(crate::output::VERSION);
            write_json(path, &v)?;
        }
        Ok(())
    }
}

pub fn execute(inv: &Invocation) -> Outcome {
    let ctx = Ctx { inv, hash: inv.config_hash() };
    match &inv.command {
        Command::Simulate(a) => simulate_cmd(&ctx, a),
        Command::WalkDp(a) => walk_dp(&ctx, a),
        Command::SeriesVerify(a) => series_verify(&ctx, a),
        Command::Asymptotics(a) => asymptotics(&ctx, a),
        Command::Clt(a) => clt(&ctx, a),
        Command::Potlach(a) => potlach(&ctx, a),
        Command::Accept(a) => accept(&ctx, a),
    }
}

/// `x1,..,xd:mass;...`.
pub fn parse_initial(text: &str, dim: usize) -> Result<InitialCondition, RunError> {
    if text.trim() == "uniform" {
        return Ok(InitialCondition::Uniform);
    }
    let mut atoms = Vec::new();
    for part in text.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (site, mass) = part
            .split_once(':')
            .ok_or_else(|| RunError(format!("initial atom `{part}` must look like x1,..,xd:mass")))?;
        let coords = site
            .split(',')
            .map(|c| c.trim().parse::<i64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| RunError(format!("bad site `{site}`")))?;
        if coords.len() != dim {
            return Err(RunError(format!("site `{site}` needs {dim} coordinates")));
        }
        let mass: f64 = mass.trim().parse().map_err(|_| RunError(format!("bad mass `{mass}`")))?;
        atoms.push((LatticePoint::new(coords)?, mass));
    }
    Ok(InitialCondition::Distribution(atoms))
}

fn sim_config(a: &SimulateArgs, seed: u64) -> Result<SimConfig, RunError> {
    let initial = match &a.initial {
        Some(s) => parse_initial(s, a.d)?,
        None => InitialCondition::origin(a.d),
    };
    Ok(SimConfig {
        dim: a.d,
        radius: a.radius.map(|r| r as usize),
        t: a.t,
        dynamics: a.dynamics.into(),
        initial,
        seed,
    })
}

fn write_field(path: &Path, field: &MassField, seed: u64, hash: &str) -> io::Result<()> {
    let mut sink = CsvSink::open(Some(path), seed, hash)?;
    let dim = field.lattice().dim();
    let mut cols = vec!["index".to_string()];
    cols.extend((1..=dim).map(|k| format!("x{k}")));
    cols.push("mass".into());
    sink.header(&cols.iter().map(String::as_str).collect::<Vec<_>>())?;
    for (i, m) in field.values().iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(field.lattice().from_index(i).coords().iter().map(i64::to_string));
        row.push(fmt_f64(*m));
        sink.row(row)?;
    }
    sink.finish()
}

fn simulate_cmd(ctx: &Ctx, a: &SimulateArgs) -> Outcome {
    let config = sim_config(a, ctx.seed())?;
    let trials = a.trials as usize;
    if a.mode == ModeArg::Exact {
        // exact dyadic fields: conservation must hold with equality after every event
        let mut exact = true;
        let mut events = 0usize;
        for_each_trial(
            trials,
            config.seed,
            |seed| {
                let mut ok = true;
                let mut n = 0usize;
                simulate_with::<BigRational>(&config.with_seed(seed), |f| {
                    n += 1;
                    ok &= f.total().is_one();
                })?;
                Ok((ok, n))
            },
            |(ok, n)| {
                exact &= ok;
                events += n;
            },
        )?;
        let mut sink = ctx.sink()?;
        sink.header(&["d", "t", "trials", "events", "exact_conservation"])?;
        sink.row([a.d.to_string(), fmt_f64(a.t), trials.to_string(), events.to_string(), exact.to_string()])?;
        sink.finish()?;
        eprintln!("exact mode: {events} events over {trials} trials, total mass identically 1: {exact}");
        ctx.summary(json!({ "events": events, "exact_conservation": exact }))?;
        return Ok(exact);
    }

    if let Some(path) = &a.field_out {
        let first: MassField = simulate(&config.with_seed(averaging_core::stats::trial_seed(config.seed, 0)))?;
        write_field(path, &first, ctx.seed(), &ctx.hash)?;
    }
    let records = estimate_moments(&config, trials)?;
    let mean_field = if trials >= 100 { Some(estimate_mean_field(&config, trials)?) } else { None };
    let mut sink = ctx.sink()?;
    sink.header(&averaging_core::sim::StatRecord::CSV_HEADER.split(',').collect::<Vec<_>>())?;
    for r in &records {
        sink.row(r.csv_row().split(','))?;
    }
    sink.finish()?;

    let passed = mean_field.as_ref().is_none_or(|m| m.passes());
    if let Some(m) = &mean_field {
        eprintln!(
            "mean field: {}/{} sites of B(2 sqrt t) within 4 SE of the heat kernel ({})",
            m.sites_within,
            m.sites_checked,
            if m.passes() { "ok" } else { "FAILED" }
        );
    }
    ctx.summary(json!({
        "records": records,
        "mean_field_sites_checked": mean_field.as_ref().map(|m| m.sites_checked),
        "mean_field_sites_within": mean_field.as_ref().map(|m| m.sites_within),
        "passed": passed,
    }))?;
    Ok(passed)
}

fn sequence_rows(sink: &mut CsvSink, table: &SequenceTable) -> io::Result<()> {
    for (n, v) in table.iter() {
        sink.row([
            table.name().as_str().to_string(),
            n.to_string(),
            v.numer().to_string(),
            v.denom().to_string(),
            fmt_f64(averaging_core::walk::kernel::to_f64(v)),
        ])?;
    }
    Ok(())
}

fn walk_dp(ctx: &Ctx, a: &WalkDpArgs) -> Outcome {
    let kind: KernelKind = a.kernel.into();
    let kernel = kind.build(a.d);
    let perturbed = !matches!(kind, KernelKind::Srw | KernelKind::PotlachIndependent);
    let mut sink = ctx.sink()?;
    sink.header(&["name", "n", "numerator", "denominator", "float_value"])?;
    match a.mode {
        ModeArg::Exact => {
            let p = return_sequence(&kernel, a.steps)?;
            sequence_rows(&mut sink, &p)?;
            if a.first_passage {
                let fp = first_passage_sequences(&kernel, a.steps)?;
                for t in [&fp.q, &fp.r, &fp.s] {
                    sequence_rows(&mut sink, t)?;
                }
            }
            sink.finish()?;
            ctx.summary(json!({ "kernel": kind.name(), "steps": a.steps, "mode": "exact" }))?;
        }
        ModeArg::Float => {
            let seq = return_sequence_float(&kernel, a.steps, 1e-15)?;
            let name = if perturbed { SequenceName::PTilde } else { SequenceName::P };
            for (n, v) in seq.values.iter().enumerate() {
                sink.row([name.as_str().to_string(), n.to_string(), String::new(), String::new(), fmt_f64(*v)])?;
            }
            sink.finish()?;
            eprintln!("largest certified error: {:e}", seq.max_error());
            ctx.summary(json!({ "kernel": kind.name(), "steps": a.steps, "mode": "float", "max_error": seq.max_error() }))?;
        }
    }
    Ok(true)
}

fn series_verify(ctx: &Ctx, a: &SeriesArgs) -> Outcome {
    let report = verify_gf_relations(a.d, a.order)?;
    let structure = verify_first_passage_structure(a.d, a.order.max(2))?;
    let closed = if a.d == 1 { Some(verify_closed_form_d1(a.order)?) } else { None };
    let mut sink = ctx.sink()?;
    sink.header(&["d", "order", "check", "relation", "status", "first_nonzero"])?;
    let mut all = true;
    for c in &report.checks {
        all &= c.holds();
        sink.row([
            a.d.to_string(),
            a.order.to_string(),
            c.name.to_string(),
            c.relation.to_string(),
            if c.holds() { "zero" } else { "nonzero" }.to_string(),
            c.first_nonzero.map(|n| n.to_string()).unwrap_or_default(),
        ])?;
    }
    for s in &structure {
        all &= s.holds;
        let status = if s.holds { "holds" } else { "fails" };
        sink.row([&a.d.to_string(), &a.order.to_string(), "first_passage", &s.statement, status, ""])?;
    }
    if let Some(ok) = closed {
        all &= ok;
        let status = if ok { "holds" } else { "fails" };
        sink.row([&a.d.to_string(), &a.order.to_string(), "closed_form_d1", "p_n = C(n,n/2)/2^n", status, ""])?;
    }
    sink.finish()?;
    ctx.summary(json!({ "report": report, "first_passage": structure, "closed_form_d1": closed, "passed": all }))?;
    Ok(all)
}

/// `N`, `N-1`, and a geometric grid below them.
fn asymptotic_grid(n_max: usize) -> Vec<usize> {
    let mut grid = Vec::new();
    let mut n = 16;
    while n < n_max.saturating_sub(1) {
        grid.push(n);
        grid.push(n + 1);
        n *= 2;
    }
    grid.extend([n_max.saturating_sub(1), n_max]);
    grid.retain(|&n| n >= 1);
    grid.dedup();
    grid
}

fn asymptotics(ctx: &Ctx, a: &AsymptoticsArgs) -> Outcome {
    let seq = return_sequence_float(&KernelKind::AvgDifference.build(a.d), a.steps, 1e-15)?;
    let alpha = if a.d >= 3 { Some(alpha_d(a.d, a.alpha_terms)?) } else { None };
    let constants = AsymptoticConstants::new(a.d, alpha);
    let rows = asymptotics_check(&seq, &constants, &asymptotic_grid(a.steps))?;
    let mut sink = ctx.sink()?;
    sink.header(&["n", "d", "N", "rescaled", "target", "deviation"])?;
    for r in &rows {
        sink.row([
            r.n.to_string(),
            a.d.to_string(),
            a.steps.to_string(),
            fmt_f64(r.rescaled),
            fmt_f64(r.target),
            fmt_f64(r.deviation),
        ])?;
    }
    sink.finish()?;
    if let Some(al) = alpha {
        eprintln!("alpha_{} = {:.6} (bounds [{:.6}, {:.6}])", a.d, al.value, al.interval.lower, al.interval.upper);
    }
    ctx.summary(json!({ "constants": constants, "rows": rows, "max_error": seq.max_error() }))?;
    Ok(true)
}

fn clt(ctx: &Ctx, a: &CltArgs) -> Outcome {
    let f: TestFunction = a.function.parse()?;
    let config = SimConfig { dynamics: a.dynamics.into(), ..SimConfig::point(a.d, a.t, ctx.seed()) };
    let report = estimate_clt(&config, &f, a.trials as usize)?;
    let tol = Tolerances::with_overrides(&ctx.inv.tolerances).map_err(RunError)?;
    let fraction = report.fraction_within(tol.get("clt"));
    let mut sink = ctx.sink()?;
    sink.header(&["trial", "seed", "statistic"])?;
    for (i, v) in report.values.iter().enumerate() {
        let seed = averaging_core::stats::trial_seed(ctx.seed(), i as u64);
        sink.row([i.to_string(), seed.to_string(), fmt_f64(*v)])?;
    }
    sink.finish()?;
    let passed = fraction >= tol.get("clt_fraction");
    eprintln!(
        "{}: mean {:.5}, sd {:.5}, Gaussian integral {:.5}, {:.1}% of trials within {}",
        report.function,
        report.mean,
        report.std_dev,
        report.gaussian_integral,
        100.0 * fraction,
        tol.get("clt")
    );
    ctx.summary(json!({
        "record": report.record(ctx.seed()),
        "gaussian_integral": report.gaussian_integral,
        "fraction_within": fraction,
        "passed": passed,
    }))?;
    Ok(passed)
}

fn potlach(ctx: &Ctx, a: &PotlachArgs) -> Outcome {
    let relation = verify_potlach_relation(a.d, a.order)?;
    let (indep, coupled) = potlach_kernels(a.d);
    let steps = required_steps(2.0, a.t, 1e-15)?;
    let p = return_sequence_float(&indep, steps, 1e-15)?;
    let pt = return_sequence_float(&coupled, steps, 1e-15)?;
    let mut sink = ctx.sink()?;
    sink.header(&["t", "pr_coupled", "pr_independent", "ratio"])?;
    let mut t = a.t / 8.0;
    let mut times = Vec::new();
    while t < a.t {
        times.push(t);
        t *= 2.0;
    }
    times.push(a.t);
    for t in times {
        let x = poissonized_return_float(&pt, 2.0, t, 1e-15)?.value;
        let y = poissonized_return_float(&p, 2.0, t, 1e-15)?.value;
        sink.row([fmt_f64(t), fmt_f64(x), fmt_f64(y), fmt_f64(x / y)])?;
    }
    sink.finish()?;
    let small = return_sequence(&coupled, a.order.min(8))?;
    eprintln!(
        "relation Gt (1 - (1-z)^2 G) = 2z G to order {}: {}; Gt = {}",
        a.order,
        if relation.holds() { "exact" } else { "FAILS" },
        series_from_sequence(&small)
    );
    ctx.summary(json!({ "relation": relation, "passed": relation.holds() }))?;
    Ok(relation.holds())
}

fn accept(ctx: &Ctx, a: &AcceptArgs) -> Outcome {
    let tol = Tolerances::with_overrides(&ctx.inv.tolerances).map_err(RunError)?;
    let only: Option<Vec<u8>> = match &a.only {
        Some(s) => Some(
            s.split(',')
                .map(|x| x.trim().parse::<u8>())
                .collect::<Result<_, _>>()
                .map_err(|_| RunError(format!("--only expects criterion numbers, got `{s}`")))?,
        ),
        None => None,
    };
    let scale = if a.quick { Scale::Quick } else { Scale::Full };
    let results = run_suite(scale, &tol, only.as_deref());
    let mut sink = ctx.sink()?;
    sink.header(&["id", "name", "status", "seconds", "detail"])?;
    for r in &results {
        eprintln!("{r}");
        sink.row([
            r.id.to_string(),
            r.name.to_string(),
            if r.passed { "pass" } else { "fail" }.to_string(),
            format!("{:.2}", r.seconds),
            r.detail.clone(),
        ])?;
    }
    sink.finish()?;
    let passed = results.iter().all(|r| r.passed);
    ctx.summary(json!({ "scale": scale, "tolerances": tol, "results": results, "passed": passed }))?;
    Ok(passed)
}
