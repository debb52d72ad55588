//! Acceptance criteria. Each criterion prints one PASS/FAIL line; run with
//! `cargo test -p radial-sweep --test acceptance -- --nocapture` to see them.

mod common;

use std::io::Write;
use std::time::Instant;

use radial_sweep::io::{
    parse_network_file, parse_result_json, render_result, NetworkFormat, OutputFormat,
};
use radial_sweep::topology::{build_t_dense, build_t_implicit, build_trx, ImpedanceDiagonal};
use radial_sweep::{
    build_ordering, check_residuals, reference_solve, solve, two_node_closed_form, BranchRecord,
    BusRecord, Complex64, Error, NetworkInput, PreparedNetwork, SweepMode, SweepOptions,
};
use rand::Rng;

use common::*;

type Outcome = Result<String, String>;

const FEEDER_SEED: u64 = 0x5eed_f00d;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn golden_four_node() -> Outcome {
    let start = Instant::now();
    let net = parse_network_file(&fixture("four_bus.json"), NetworkFormat::Json)
        .map_err(|e| e.to_string())?;
    let result = solve(&net, &SweepOptions::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();

    let v = |id: &str| result.voltage(id).unwrap();
    let checks = [
        ("|V1|", v("1").magnitude, 0.987, 1e-3),
        ("θ1", v("1").angle_deg, -1.59, 1e-2),
        ("|V2|", v("2").magnitude, 0.981, 1e-3),
        ("θ2", v("2").angle_deg, -2.40, 1e-2),
        ("|V3|", v("3").magnitude, 0.981, 1e-3),
        ("θ3", v("3").angle_deg, -2.40, 1e-2),
    ];
    for (name, got, want, tol) in checks {
        ensure((got - want).abs() <= tol, || {
            format!("{name} = {got:.6}, expected {want} ± {tol}")
        })?;
    }
    ensure((2..=4).contains(&result.iterations), || {
        format!("{} iterations, expected 3 ± 1", result.iterations)
    })?;
    ensure(elapsed.as_secs_f64() < 0.010, || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "|V1|={:.4} ∠{:.2}°, |V2|=|V3|={:.4} ∠{:.2}°, {} iterations, {:?}",
        v("1").magnitude,
        v("1").angle_deg,
        v("2").magnitude,
        v("2").angle_deg,
        result.iterations,
        elapsed
    ))
}

fn mode_equivalence(feeders: &[NetworkInput]) -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut total_iterations = 0;
    for (f, net) in feeders.iter().enumerate() {
        let prep = PreparedNetwork::new(net).map_err(|e| format!("feeder {f}: {e}"))?;
        let two = SweepOptions::default().with_epsilon(1e-10);
        let trx = two.clone().with_mode(SweepMode::SingleEquationTrx);
        let a = prep.iterate(&two).map_err(|e| e.to_string())?;
        let b = prep.iterate(&trx).map_err(|e| e.to_string())?;
        for (sa, sb) in a.zip(b).take(two.max_iterations) {
            let sa = sa.map_err(|e| format!("feeder {f}: {e}"))?;
            let sb = sb.map_err(|e| format!("feeder {f}: {e}"))?;
            let diff =
                sa.v.iter()
                    .zip(&sb.v)
                    .map(|(x, y)| (x - y).norm())
                    .fold(0.0, f64::max);
            worst = worst.max(diff);
            total_iterations += 1;
            if sa.delta < two.epsilon {
                break;
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(worst <= 1e-12, || {
        format!("per-iteration difference {worst:e}")
    })?;
    ensure(elapsed.as_secs_f64() < 10.0, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{} feeders, {total_iterations} iterations, max difference {worst:.2e}, {elapsed:?}",
        feeders.len()
    ))
}

fn oracle_equivalence(feeders: &[NetworkInput]) -> Outcome {
    let eps = 1e-4;
    let mut worst_dev = 0.0f64;
    let mut worst_kcl = 0.0f64;
    let mut worst_kvl = 0.0f64;
    let mut worst_power = 0.0f64;
    for (f, net) in feeders.iter().enumerate() {
        let coarse = solve(net, &SweepOptions::default().with_epsilon(eps))
            .map_err(|e| format!("feeder {f}: {e}"))?;
        let report = check_residuals(net, &coarse).map_err(|e| e.to_string())?;
        worst_kcl = worst_kcl.max(report.max_kcl_residual);
        worst_kvl = worst_kvl.max(report.max_kvl_residual);
        worst_power = worst_power.max(report.power_mismatch);

        let tight = solve(net, &SweepOptions::default().with_epsilon(1e-10))
            .map_err(|e| format!("feeder {f}: {e}"))?;
        let reference = reference_solve(net, 1e-12).map_err(|e| format!("feeder {f}: {e}"))?;
        worst_dev = worst_dev.max(reference.max_deviation(&tight));
    }
    ensure(worst_dev <= 1e-6, || {
        format!("reference deviation {worst_dev:e}")
    })?;
    ensure(worst_kcl < 10.0 * eps, || {
        format!("KCL residual {worst_kcl:e}")
    })?;
    ensure(worst_kvl < 10.0 * eps, || {
        format!("KVL residual {worst_kvl:e}")
    })?;
    ensure(worst_power < 10.0 * eps, || {
        format!("power mismatch {worst_power:e}")
    })?;
    Ok(format!(
        "max deviation {worst_dev:.2e}; KCL {worst_kcl:.2e}, KVL {worst_kvl:.2e}, power {worst_power:.2e} (limit {:e})",
        10.0 * eps
    ))
}

fn closed_form_check() -> Outcome {
    let mut r = rng(7);
    let mut cases = vec![(Complex64::new(0.0296, 0.0683), Complex64::new(-0.4, 0.0))];
    for _ in 0..50 {
        let z = Complex64::new(r.random_range(0.001..0.1), r.random_range(-0.05..0.1));
        let s = Complex64::new(r.random_range(-1.0..0.5), r.random_range(-0.5..0.5));
        cases.push((z, s));
    }
    let mut worst = 0.0f64;
    for (z, s) in &cases {
        let net = NetworkInput::per_unit(
            vec![BusRecord::root("src"), BusRecord::load("end", -s.re, -s.im)],
            vec![BranchRecord::new("src", "end", z.re, z.im)],
        );
        let v0 = Complex64::new(1.0, 0.0);
        let exact = two_node_closed_form(v0, *z, *s).ok_or("infeasible closed-form case")?;
        let opts = SweepOptions {
            epsilon: 1e-14,
            max_iterations: 1000,
            ..SweepOptions::default()
        };
        let swept = solve(&net, &opts).map_err(|e| e.to_string())?;
        worst = worst.max((swept.voltage("end").unwrap().voltage - exact).norm());
    }
    ensure(worst <= 1e-10, || {
        format!("closed-form deviation {worst:e}")
    })?;
    Ok(format!(
        "{} two-node cases, max deviation {worst:.2e}",
        cases.len()
    ))
}

fn trx_structure() -> Outcome {
    let mut worst = 0.0f64;
    let mut asymmetric = 0usize;
    for (f, net) in feeder_batch(50, FEEDER_SEED ^ 0x77).iter().enumerate() {
        let ord = build_ordering(net).map_err(|e| format!("feeder {f}: {e}"))?;
        let dz = ImpedanceDiagonal::from_network(net, &ord);
        let oracle = common_path_trx(&ord, dz.values());
        for t in [build_t_dense(&ord), build_t_implicit(&ord)] {
            let trx = build_trx(&t, &dz).map_err(|e| e.to_string())?;
            for i in 0..ord.n() {
                for j in 0..ord.n() {
                    worst = worst.max((trx.get(i, j) - oracle[i][j]).norm());
                    if trx.get(i, j) != trx.get(j, i) {
                        asymmetric += 1;
                    }
                }
            }
        }
    }
    ensure(worst <= 1e-13, || {
        format!("common-path deviation {worst:e}")
    })?;
    ensure(asymmetric == 0, || {
        format!("{asymmetric} asymmetric entries")
    })?;
    Ok(format!(
        "50 feeders, max deviation {worst:.2e}, exactly symmetric"
    ))
}

fn validation_suite() -> Outcome {
    let mut r = rng(11);
    let mut trees: Vec<NetworkInput> = vec![four_node()];
    for nodes in 2..=20 {
        let edges = prufer_tree(nodes, &mut r);
        let root = r.random_range(0..nodes);
        trees.push(tree_network(&edges, nodes, root, &mut r));
    }
    let mut additions = 0;
    let mut removals = 0;
    for (t, net) in trees.iter().enumerate() {
        build_ordering(net).map_err(|e| format!("tree {t} rejected: {e}"))?;
        let ids: Vec<&str> = net.buses.iter().map(|b| b.id.as_str()).collect();
        for a in 0..ids.len() {
            for b in a + 1..ids.len() {
                let present = net.branches.iter().any(|br| {
                    (br.from_bus == ids[a] && br.to_bus == ids[b])
                        || (br.from_bus == ids[b] && br.to_bus == ids[a])
                });
                if present {
                    continue;
                }
                let mut m = net.clone();
                m.branches
                    .push(BranchRecord::new(ids[a], ids[b], 0.01, 0.01));
                match build_ordering(&m) {
                    Err(Error::CycleDetected { .. }) => additions += 1,
                    other => return Err(format!("tree {t} + ({}, {}): {other:?}", ids[a], ids[b])),
                }
            }
        }
        for e in 0..net.branches.len() {
            let mut m = net.clone();
            m.branches.remove(e);
            match build_ordering(&m) {
                Err(Error::NotConnected(_)) => removals += 1,
                other => return Err(format!("tree {t} - {e}: {other:?}")),
            }
        }
    }
    Ok(format!(
        "{} trees, {additions} edge additions rejected as cycles, {removals} removals rejected",
        trees.len()
    ))
}

fn dg_behavior() -> Outcome {
    let base_net = parse_network_file(&fixture("four_bus.json"), NetworkFormat::Json)
        .map_err(|e| e.to_string())?;
    let mut dg_net = base_net.clone();
    let bus = dg_net.buses.iter_mut().find(|b| b.id == "2").unwrap();
    bus.p_gen = bus.p_dem;
    bus.q_gen = bus.q_dem;
    let s = radial_sweep::net_injection(bus);
    ensure(s == Complex64::new(0.0, 0.0), || {
        format!("net injection {s}")
    })?;

    let base = solve(&base_net, &SweepOptions::default()).map_err(|e| e.to_string())?;
    let dg = solve(&dg_net, &SweepOptions::default()).map_err(|e| e.to_string())?;
    for (b, d) in base.voltages.iter().zip(&dg.voltages) {
        ensure(b.id == d.id, || "node order changed".into())?;
        ensure(d.magnitude >= b.magnitude, || {
            format!("|V{}| fell from {} to {}", b.id, b.magnitude, d.magnitude)
        })?;
    }
    let v2 = dg.voltage("2").unwrap().magnitude;
    ensure(v2 > 0.981, || format!("|V2| = {v2}"))?;
    Ok(format!(
        "|V2| {:.4} → {v2:.4}, all magnitudes non-decreasing",
        base.voltage("2").unwrap().magnitude
    ))
}

fn determinism() -> Outcome {
    let mut nets = vec![
        parse_network_file(&fixture("four_bus.json"), NetworkFormat::Json)
            .map_err(|e| e.to_string())?,
        parse_network_file(&fixture("four_bus_csv"), NetworkFormat::Csv)
            .map_err(|e| e.to_string())?,
        parse_network_file(&fixture("four_bus_physical_csv"), NetworkFormat::Csv)
            .map_err(|e| e.to_string())?,
    ];
    nets.extend(feeder_batch(10, FEEDER_SEED ^ 0x99));
    for (f, net) in nets.iter().enumerate() {
        for mode in [SweepMode::TwoStep, SweepMode::SingleEquationTrx] {
            let opts = SweepOptions::default().with_mode(mode);
            let a = solve(net, &opts).map_err(|e| e.to_string())?;
            let b = solve(net, &opts).map_err(|e| e.to_string())?;
            let ja = render_result(&a, OutputFormat::Json);
            let jb = render_result(&b, OutputFormat::Json);
            ensure(a == b && ja == jb, || {
                format!("fixture {f}: repeated solves differ")
            })?;
            let bits = |r: &radial_sweep::SolveResult| -> Vec<u64> {
                r.voltages
                    .iter()
                    .flat_map(|v| [v.voltage.re.to_bits(), v.voltage.im.to_bits()])
                    .collect()
            };
            ensure(bits(&a) == bits(&b), || {
                format!("fixture {f}: voltage bits differ")
            })?;
            let back = parse_result_json(&ja).map_err(|e| e.to_string())?;
            ensure(back == a, || {
                format!("fixture {f}: JSON round trip lost precision")
            })?;
        }
    }
    Ok(format!(
        "{} fixtures × 2 modes bit-identical, JSON round trip exact",
        nets.len()
    ))
}

#[test]
fn acceptance_criteria() {
    let feeders = feeder_batch(100, FEEDER_SEED);
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("1 golden four-node example", Box::new(golden_four_node)),
        (
            "2 two-step / TRX equivalence",
            Box::new(|| mode_equivalence(&feeders)),
        ),
        (
            "3 reference solver and residuals",
            Box::new(|| oracle_equivalence(&feeders)),
        ),
        ("4 two-node closed form", Box::new(closed_form_check)),
        ("5 TRX structure", Box::new(trx_structure)),
        ("6 topology validation", Box::new(validation_suite)),
        ("7 distributed generation", Box::new(dg_behavior)),
        ("8 determinism and JSON round trip", Box::new(determinism)),
    ];
    let mut failed = Vec::new();
    let mut out = std::io::stdout().lock();
    for (name, check) in &criteria {
        match check() {
            Ok(detail) => writeln!(out, "PASS  {name}: {detail}").unwrap(),
            Err(detail) => {
                writeln!(out, "FAIL  {name}: {detail}").unwrap();
                failed.push(*name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
