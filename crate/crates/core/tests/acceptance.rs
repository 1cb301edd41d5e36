//! Acceptance checks, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines always reach the terminal.

mod common;

use std::collections::HashMap;
use std::process::ExitCode;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tsplan::case::{generate_case, CaseFile, GenSpec};
use tsplan::experiment::{compare_all, Comparison, Regime};
use tsplan::milp::{
    build_model, dc_opf, dc_opf_horizon, frozen, solve, SolveLimits, SolveStatus, SwitchingBudgets,
};
use tsplan::network::{connectivity, Topology};
use tsplan::report::{CaseInfo, ComparisonReport};
use tsplan::sensitivity::SensitivitySet;
use tsplan::wear::{DutyCurve, SwitchHistory, DEFAULT_NORMAL_CURRENT_KA};

use common::{
    all_fixtures, congested_family, dc_power_flow, fixture, random_injection, random_network,
    relative_error,
};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Post-outage flows predicted by LODF against a fresh power flow.
fn lodf_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut outages, mut bridges, mut worst) = (0usize, 0usize, 0.0f64);
    for case in 0..200 {
        let n_buses = rng.random_range(4..=10);
        let n_lines = rng.random_range(n_buses - 1..=2 * n_buses);
        let net = random_network(&mut rng, n_buses, n_lines);
        let topo = Topology::initial(&net);
        let lines: Vec<usize> = (0..n_lines).collect();
        let set =
            SensitivitySet::compute(&net, &topo, &lines, &lines).map_err(|e| e.to_string())?;
        let injection = random_injection(&mut rng, &net);
        let before = dc_power_flow(&net, &topo, &injection).ok_or("base case islanded")?;
        for l in 0..n_lines {
            let after_topo = topo.with_open(l);
            let islands = connectivity(&net, &after_topo).len() > 1;
            let bridge = set.is_bridge(l).unwrap();
            ensure(bridge == islands, || {
                format!("network {case}: line {l} bridge flag {bridge}, islands {islands}")
            })?;
            if bridge {
                bridges += 1;
                continue;
            }
            outages += 1;
            let after = dc_power_flow(&net, &after_topo, &injection).ok_or("outage islanded")?;
            for m in 0..n_lines {
                let predicted = if m == l {
                    0.0
                } else {
                    before[m] + set.lodf(m, l).unwrap().unwrap() * before[l]
                };
                let err = relative_error(predicted, after[m]);
                worst = worst.max(err);
                ensure(err <= 1e-8, || {
                    format!(
                        "network {case}, outage {l}, line {m}: {predicted} vs {}",
                        after[m]
                    )
                })?;
            }
        }
    }
    Ok(format!(
        "200 networks, {outages} outages checked, {bridges} bridges skipped, max rel err {worst:.1e}"
    ))
}

fn ptdf_anchors() -> Outcome {
    let tri = fixture("braess-triangle.json")
        .network()
        .map_err(|e| e.to_string())?;
    let set = SensitivitySet::compute(&tri, &Topology::initial(&tri), &[0], &[0])
        .map_err(|e| e.to_string())?;
    let tri_self = set.ptdf_self(0).unwrap();
    ensure((tri_self - 2.0 / 3.0).abs() <= 1e-10, || {
        format!("triangle self-PTDF {tri_self}")
    })?;

    let pair = fixture("parallel-pair.json")
        .network()
        .map_err(|e| e.to_string())?;
    let set = SensitivitySet::compute(&pair, &Topology::initial(&pair), &[0], &[0, 1])
        .map_err(|e| e.to_string())?;
    let pair_self = set.ptdf_self(1).unwrap();
    let pair_lodf = set.lodf(0, 1).unwrap().map_err(|e| e.to_string())?;
    ensure((pair_self - 0.5).abs() <= 1e-12, || {
        format!("pair self-PTDF {pair_self}")
    })?;
    ensure((pair_lodf - 1.0).abs() <= 1e-10, || {
        format!("pair LODF {pair_lodf}")
    })?;
    Ok(format!(
        "triangle self {tri_self:.12}, pair self {pair_self:.12}, pair LODF {pair_lodf:.12}"
    ))
}

/// Cheapest schedule over every assignment of the free statuses, each
/// priced by per-hour DC-OPF re-solves.
fn enumerate(
    case: &CaseFile,
    free: &[(usize, usize)],
    budgets: &SwitchingBudgets,
    both_directions: bool,
) -> Result<f64, String> {
    let net = case.network().map_err(|e| e.to_string())?;
    let demand = case.demand();
    let horizon = case.horizon;
    let initial = Topology::initial(&net);
    let mut cache: HashMap<(usize, Topology), f64> = HashMap::new();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << free.len()) {
        let mut hours = vec![initial.clone(); horizon];
        for (bit, &(t, l)) in free.iter().enumerate() {
            let closed = initial.is_closed(l);
            hours[t].set(
                l,
                if mask >> bit & 1 == 1 {
                    !closed
                } else {
                    closed
                },
            );
        }
        let mut per_line = vec![0i64; net.n_lines()];
        let mut cost = 0.0;
        let mut feasible = true;
        for t in 0..horizon {
            let prev = if t == 0 { &initial } else { &hours[t - 1] };
            let mut per_hour = 0i64;
            for (l, line) in net.lines().iter().enumerate() {
                let (was, is) = (prev.is_closed(l), hours[t].is_closed(l));
                if was != is {
                    per_line[l] += 1;
                    per_hour += 1;
                    if both_directions || was {
                        cost += line.switch_cost;
                    }
                }
            }
            feasible &= per_hour <= budgets.per_hour[t];
        }
        feasible &= per_line.iter().zip(&budgets.per_line).all(|(n, h)| n <= h);
        if !feasible {
            continue;
        }
        for (t, topo) in hours.into_iter().enumerate() {
            let key = (t, topo);
            if !cache.contains_key(&key) {
                let sol = dc_opf(&net, &key.1, &demand, t).map_err(|e| e.to_string())?;
                cache.insert(key.clone(), sol.objective);
            }
            cost += cache[&key];
        }
        best = best.min(cost);
    }
    Ok(best)
}

fn exhaustive_agreement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut switched = 0;
    let mut worst = 0.0f64;
    let instances = 60;
    for seed in 0..instances {
        let n_buses = rng.random_range(3..=6);
        let n_lines = n_buses + rng.random_range(0..=3);
        let horizon = rng.random_range(1..=2);
        // heavy congestion and cheap breakers make switching worthwhile
        let spec = GenSpec::new(seed, n_buses, n_lines, horizon)
            .congestion(0.8)
            .switch_cost(0.0, 5.0);
        let case = generate_case(&spec);
        let (net, demand, mut config) = case.planning_inputs().map_err(|e| e.to_string())?;
        let mut lines: Vec<usize> = (0..n_lines).collect();
        lines.shuffle(&mut rng);
        lines.truncate(rng.random_range(1..=4));
        lines.sort();
        let budgets = SwitchingBudgets::uniform(
            n_lines,
            horizon,
            rng.random_range(1..=2),
            rng.random_range(1..=3),
        );
        config.budgets = Some(budgets.clone());
        config.charge_both_directions = rng.random_bool(0.5);
        config.limits = SolveLimits::exact();
        let free = vec![lines.clone(); horizon];
        let model = build_model(&net, &demand, &config, &free).map_err(|e| e.to_string())?;
        let result = solve(&model, &config).map_err(|e| format!("instance {seed}: {e}"))?;
        ensure(result.status == SolveStatus::Optimal, || {
            format!("instance {seed}: not optimal")
        })?;
        let pairs: Vec<(usize, usize)> = (0..horizon)
            .flat_map(|t| lines.iter().map(move |&l| (t, l)))
            .collect();
        let best = enumerate(&case, &pairs, &budgets, config.charge_both_directions)?;
        let err = relative_error(result.objective, best);
        worst = worst.max(err);
        ensure(err <= 1e-7, || {
            format!(
                "instance {seed}: solver {} vs enumeration {best}",
                result.objective
            )
        })?;
        if result.plan.total_events() > 0 {
            switched += 1;
        }
    }
    Ok(format!(
        "{instances} instances, {switched} with switching in the optimum, max rel err {worst:.1e}"
    ))
}

/// Regime runs on the small generated instances and the congested family.
struct Runs {
    small: Vec<Comparison>,
    family: Vec<(String, CaseFile, Comparison)>,
}

fn collect_runs() -> Result<Runs, String> {
    let mut small = Vec::new();
    for seed in 100..112 {
        let case = generate_case(&GenSpec::new(seed, 6, 9, 3).congestion(0.5).budgets(1, 2));
        let (net, demand, mut config) = case.planning_inputs().map_err(|e| e.to_string())?;
        config.limits = SolveLimits::exact();
        small.push(compare_all(&net, &demand, &config).map_err(|e| e.to_string())?);
    }
    let mut family = Vec::new();
    for (name, case) in congested_family() {
        let (net, demand, config) = case.planning_inputs().map_err(|e| e.to_string())?;
        let cmp = compare_all(&net, &demand, &config).map_err(|e| format!("{name}: {e}"))?;
        family.push((name, case, cmp));
    }
    Ok(Runs { small, family })
}

fn ordering_and_budgets(runs: &Runs) -> Outcome {
    let all = runs
        .small
        .iter()
        .chain(runs.family.iter().map(|(_, _, c)| c));
    let mut count = 0;
    for (k, cmp) in all.enumerate() {
        count += 1;
        let r = |regime| &cmp.run(regime).result;
        let at_least = |upper: Regime, lower: Regime| {
            let (u, l) = (r(upper), r(lower));
            u.objective >= l.bound - 1e-6 * u.objective.abs().max(1.0)
        };
        for (upper, lower) in [
            (Regime::Baseline, Regime::Constrained),
            (Regime::Constrained, Regime::Classic),
            (Regime::Reduced, Regime::Constrained),
        ] {
            ensure(at_least(upper, lower), || {
                format!(
                    "instance {k}: {upper} {} below {lower} bound {}",
                    r(upper).objective,
                    r(lower).bound
                )
            })?;
        }
        ensure(cmp.all_passed(), || {
            format!("instance {k}: {:?}", cmp.checks)
        })?;
    }
    Ok(format!(
        "{count} instances, ordering holds within gaps, zero budget violations"
    ))
}

fn family_savings(runs: &Runs) -> Outcome {
    let mut lines = Vec::new();
    let (mut save_classic, mut save_constrained) = (0.0, 0.0);
    let (mut ops_classic, mut ops_constrained) = (0usize, 0usize);
    let mut slow = Vec::new();
    for (name, case, cmp) in &runs.family {
        let obj = |r| cmp.run(r).result.objective;
        let ops = |r| cmp.run(r).result.plan.total_events();
        let base = obj(Regime::Baseline);
        let (sc, sk) = (base - obj(Regime::Classic), base - obj(Regime::Constrained));
        save_classic += sc;
        save_constrained += sk;
        ops_classic += ops(Regime::Classic);
        ops_constrained += ops(Regime::Constrained);

        let reduced = cmp.run(Regime::Reduced);
        let screening = reduced.screening.as_ref().unwrap();
        let sll_u: usize = screening.summary.updated.iter().sum();
        let sll_o = screening.summary.original * case.horizon;
        let t_reduced = (reduced.result.wall_time + screening.summary.screening_time).as_secs_f64();
        let t_constrained = cmp.run(Regime::Constrained).result.wall_time.as_secs_f64();
        if sll_u < sll_o && t_reduced >= t_constrained {
            slow.push(name.clone());
        }
        lines.push(format!(
            "    {name}: saving ratio {:.3}, switching ratio {}/{} = {:.3}, |SLL_u| {sll_u}/{sll_o}, time reduced/constrained {:.4}",
            sk / sc,
            ops(Regime::Constrained),
            ops(Regime::Classic),
            ops(Regime::Constrained) as f64 / ops(Regime::Classic) as f64,
            t_reduced / t_constrained,
        ));
    }
    let saving_ratio = save_constrained / save_classic;
    let ops_ratio = ops_constrained as f64 / ops_classic as f64;
    lines.push(format!(
        "    family: constrained keeps {:.1}% of the classic saving with {:.1}% of its switching operations",
        saving_ratio * 100.0,
        ops_ratio * 100.0
    ));
    let detail = lines.join("\n");
    let ok = runs.family.len() >= 3 && saving_ratio >= 0.5 && ops_ratio <= 0.5 && slow.is_empty();
    if ok {
        Ok(format!("{} fixtures\n{detail}", runs.family.len()))
    } else {
        Err(format!(
            "saving ratio {saving_ratio:.3}, switching ratio {ops_ratio:.3}, reduced not faster on {slow:?}\n{detail}"
        ))
    }
}

fn wear_model() -> Outcome {
    let curve = DutyCurve::default();
    let empty = SwitchHistory::new();
    let at_normal = curve
        .remaining_operations(&empty, DEFAULT_NORMAL_CURRENT_KA)
        .map_err(|e| e.to_string())?;
    let at_40 = curve
        .remaining_operations(&empty, 40.0)
        .map_err(|e| e.to_string())?;
    ensure(
        curve.weight_at(DEFAULT_NORMAL_CURRENT_KA) == Ok(1.0),
        || "weight at normal current is not 1".into(),
    )?;
    ensure(at_normal == 6000 && at_40 == 10, || {
        format!("empty history: {at_normal} and {at_40}")
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let current = |rng: &mut ChaCha8Rng| rng.random_range(DEFAULT_NORMAL_CURRENT_KA..=40.0);
    for k in 0..1000 {
        let mut history = SwitchHistory::new();
        for _ in 0..rng.random_range(0..6) {
            let i = current(&mut rng);
            history.record(i, rng.random_range(0..300));
        }
        let (a, b) = (current(&mut rng), current(&mut rng));
        let (lo, hi) = (a.min(b), a.max(b));
        let left_lo = curve
            .remaining_operations(&history, lo)
            .map_err(|e| e.to_string())?;
        let left_hi = curve
            .remaining_operations(&history, hi)
            .map_err(|e| e.to_string())?;
        ensure(left_hi <= left_lo, || {
            format!("history {k}: {left_hi} at {hi} kA > {left_lo} at {lo} kA")
        })?;
        let mut more = history.clone();
        more.record(current(&mut rng), rng.random_range(1..50));
        let after = curve
            .remaining_operations(&more, lo)
            .map_err(|e| e.to_string())?;
        ensure(after <= left_lo, || {
            format!("history {k}: more interruptions left more budget")
        })?;
    }
    Ok(format!("empty history {at_normal} at normal current and {at_40} at 40 kA; 1000 random histories monotone"))
}

fn determinism(runs: &Runs) -> Outcome {
    let spec = GenSpec::new(11, 13, 34, 5);
    ensure(
        generate_case(&spec).to_json() == generate_case(&spec).to_json(),
        || "generated case bytes differ".into(),
    )?;
    let mut checked = 0;
    let targets = [
        (
            "braess-triangle.json".to_string(),
            fixture("braess-triangle.json"),
            None,
        ),
        runs.family
            .first()
            .map(|(n, c, cmp)| (n.clone(), c.clone(), Some(cmp)))
            .ok_or("no congested fixture")?,
    ];
    for (name, case, previous) in targets {
        let (net, demand, config) = case.planning_inputs().map_err(|e| e.to_string())?;
        let breakers = case.breakers().map_err(|e| e.to_string())?;
        let info = CaseInfo::new(&case, &config);
        let report = |cmp: &Comparison| {
            ComparisonReport::new(&net, &demand, cmp, &breakers, false)
                .map(|r| info.document(&r))
                .map_err(|e| e.to_string())
        };
        let first = match previous {
            Some(cmp) => report(cmp)?,
            None => report(&compare_all(&net, &demand, &config).map_err(|e| e.to_string())?)?,
        };
        let second = report(&compare_all(&net, &demand, &config).map_err(|e| e.to_string())?)?;
        ensure(first == second, || {
            format!("{name}: reports differ between runs")
        })?;
        checked += 1;
    }
    Ok(format!(
        "generated case and {checked} compare-all reports byte-identical on re-run"
    ))
}

fn frozen_matches_dc_opf() -> Outcome {
    let mut worst = 0.0f64;
    let fixtures = all_fixtures();
    for (name, case) in &fixtures {
        let (net, demand, config) = case.planning_inputs().map_err(|e| e.to_string())?;
        let horizon = config.horizon;
        let model =
            build_model(&net, &demand, &config, &frozen(horizon)).map_err(|e| e.to_string())?;
        let result = solve(&model, &config).map_err(|e| format!("{name}: {e}"))?;
        let hours = dc_opf_horizon(&net, &Topology::initial(&net), &demand, horizon)
            .map_err(|e| e.to_string())?;
        for (t, hour) in hours.iter().enumerate() {
            let d = &result.dispatch[t];
            let milp_hour = d.generation_cost(&net, t) + d.curtailment_cost(&demand);
            let err = relative_error(milp_hour, hour.objective);
            worst = worst.max(err);
            ensure(err <= 1e-8, || {
                format!("{name} hour {}: {milp_hour} vs {}", t + 1, hour.objective)
            })?;
        }
        let total: f64 = hours.iter().map(|h| h.objective).sum();
        ensure(relative_error(result.objective, total) <= 1e-8, || {
            format!("{name}: totals differ")
        })?;
    }
    Ok(format!(
        "{} fixtures, max rel err {worst:.1e}",
        fixtures.len()
    ))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |id: u32, name: &str, started: Instant, outcome: Outcome| {
        let secs = started.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} [{id}] {name} ({secs:.1} s): {detail}");
    };

    let t = Instant::now();
    report(1, "LODF oracle", t, lodf_oracle());
    let t = Instant::now();
    report(2, "PTDF anchors", t, ptdf_anchors());
    let t = Instant::now();
    report(3, "exhaustive agreement", t, exhaustive_agreement());

    let t = Instant::now();
    let runs = collect_runs();
    println!(
        "     regime runs collected in {:.1} s",
        t.elapsed().as_secs_f64()
    );
    match &runs {
        Ok(runs) => {
            let t = Instant::now();
            report(
                4,
                "objective ordering and budgets",
                t,
                ordering_and_budgets(runs),
            );
            let t = Instant::now();
            report(5, "congested family trade-off", t, family_savings(runs));
        }
        Err(e) => {
            report(4, "objective ordering and budgets", t, Err(e.clone()));
            report(5, "congested family trade-off", t, Err(e.clone()));
        }
    }
    let t = Instant::now();
    report(6, "breaker wear", t, wear_model());
    let t = Instant::now();
    match &runs {
        Ok(runs) => report(7, "determinism", t, determinism(runs)),
        Err(e) => report(7, "determinism", t, Err(e.clone())),
    }
    let t = Instant::now();
    report(
        8,
        "frozen schedule equals DC-OPF",
        t,
        frozen_matches_dc_opf(),
    );

    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
