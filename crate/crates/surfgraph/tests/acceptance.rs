//! Acceptance suite: one line per criterion, `PASS` or `FAIL`, with the
//! measured quantities. Runs without the libtest harness so the lines are
//! always visible.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use num_bigint::BigUint;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use surfgraph::asymptotics::{
    britikov_f_log, l0_solve, sigma_core_eval, sigma_d_eval, AsymptoticContext, NuPolicy, SumMode, TauPolicy,
    DEFAULT_CUTOFF,
};
use surfgraph::decompose::count_subdivisions;
use surfgraph::enumerate::{
    count_noncomplex, rho_exact, trees, unicyclic_connected, Caps, ClassQuery, ClassTag, Enumerator,
};
use surfgraph::genus::{is_planar, GenusOracle};
use surfgraph::montecarlo::{
    power_law_exponent, quantile, sweep, write_csv, ExperimentRecord, MeasureOptions, Model, SweepPlan, SweepPoint,
};
use surfgraph::{ComponentClass, ComponentView, Label, LabeledGraph, LabeledMultigraph};

/// Criteria expected to fail, with the reason recorded in the project notes:
/// 8 because the small exact cells (5,3) and (7,4) exceed the fitted bound;
/// 9 because the d = 0 share of the deficiency sum is about 53% at the default
/// per-unit factor 6 for l = 10;
/// 11 because at λ = -5 the median subcritical |H1| sits about 3.4 times below
/// the leading-order scale, independent of n.
const KNOWN_FAILURES: [u32; 3] = [8, 9, 11];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn pairs(n: u32) -> u32 {
    n * n.saturating_sub(1) / 2
}

fn graph_from_mask(n: u32, mask: u64) -> LabeledGraph {
    let mut edges = Vec::new();
    let mut k = 0;
    for v in 2..=n {
        for u in 1..v {
            if mask >> k & 1 == 1 {
                edges.push((u, v));
            }
            k += 1;
        }
    }
    LabeledGraph::new(n, edges).unwrap()
}

fn enumerator() -> Enumerator {
    Enumerator::new(Caps {
        simple_max_n: 7,
        kernel_max_n: 6,
        kernel_max_m: 9,
    })
}

fn criterion_1(e: &Enumerator) -> Outcome {
    let mut cells = 0;
    let mut bad = Vec::new();
    let mut cell = |n: u32, m: u32, g: u32| {
        cells += 1;
        if let Err(err) = e.verify_identity_general(n, m, g) {
            bad.push(format!("({n},{m},{g}): {err}"));
        }
    };
    for g in 0..2 {
        for n in 0..=6 {
            for m in 0..=pairs(n) {
                cell(n, m, g);
            }
        }
    }
    for m in [6, 7, 8] {
        cell(7, m, 0);
    }
    outcome(bad.is_empty(), format!("general identity, {cells} cells, {} mismatches {:?}", bad.len(), bad))
}

fn criterion_2(e: &Enumerator) -> Outcome {
    let mut cells = 0;
    let mut bad = Vec::new();
    for g in 0..2 {
        for n in 1..=6 {
            for l in 1..=3 {
                if n + l > pairs(n) {
                    continue;
                }
                cells += 2;
                if let Err(err) = e.verify_identity_complexcore(n, l, g) {
                    bad.push(format!("complexcore ({n},{l},{g}): {err}"));
                }
                if let Err(err) = e.verify_identity_core(n, l, g) {
                    bad.push(format!("core ({n},{l},{g}): {err}"));
                }
            }
        }
    }
    outcome(bad.is_empty(), format!("complex-part and core identities, {cells} cells, mismatches {:?}", bad))
}

/// Connected graphs on `s` vertices with `extra + s - 1` edges, by listing edge sets.
fn connected_brute(s: u32, edges: u32) -> u64 {
    let p = pairs(s);
    if edges > p {
        return 0;
    }
    let mut count = 0;
    let mut mask: u64 = (1 << edges) - 1;
    while mask < 1 << p {
        if ComponentView::of_graph(&graph_from_mask(s, mask)).components.len() == 1 {
            count += 1;
        }
        if edges == 0 {
            break;
        }
        let low = mask & mask.wrapping_neg();
        let ripple = mask + low;
        mask = (((ripple ^ mask) >> 2) / low) | ripple;
    }
    count
}

fn criterion_3(e: &Enumerator) -> Outcome {
    let mut bad = Vec::new();
    for s in 1..=7 {
        let t = connected_brute(s, s - 1);
        if trees(s) != BigUint::from(t) || t != u64::from(s).pow(s.saturating_sub(2)) {
            bad.push(format!("t({s})"));
        }
        if unicyclic_connected(s) != BigUint::from(connected_brute(s, s)) {
            bad.push(format!("u({s})"));
        }
    }
    if unicyclic_connected(3) != BigUint::from(1u32) || unicyclic_connected(4) != BigUint::from(15u32) {
        bad.push("u(3), u(4) reference values".into());
    }
    let mut cells = 0;
    for n in 0..=7 {
        for m in 0..=pairs(n) {
            cells += 1;
            let brute = e
                .brute_count(ClassQuery {
                    class: ClassTag::NonComplex,
                    n,
                    m,
                    g: 0,
                })
                .unwrap()
                .to_rational();
            if brute != BigRational::from_integer(count_noncomplex(n, m).into()) {
                bad.push(format!("U({n},{m})"));
            }
        }
    }
    if rho_exact(3, 3) != BigRational::from_integer(1.into()) || rho_exact(4, 5) != BigRational::from_integer(0.into()) {
        bad.push("rho(3,3), rho(4,5)".into());
    }
    outcome(bad.is_empty(), format!("tables s <= 7 and {cells} non-complex cells, mismatches {:?}", bad))
}

fn criterion_4(e: &Enumerator) -> Outcome {
    let mut kernels = 0;
    let mut bad = Vec::new();
    for n_k in 1..=4u32 {
        for m_k in (3 * n_k).div_ceil(2).max(2)..=7 {
            // every multigraph on at most four vertices is planar
            for k in e.kernel_class(n_k, m_k, 0).unwrap().iter() {
                kernels += 1;
                let inverse = (BigRational::from_integer(1.into()) / &k.weight).to_integer();
                let inverse: u64 = inverse.try_into().unwrap();
                for n_core in n_k..=n_k + 4 {
                    let c = count_subdivisions(&k.kernel, n_core);
                    let simple_cores = c.simple != 0.into();
                    if simple_cores && c.plans_per_simple_core != [inverse] {
                        bad.push(format!("{:?} at n_core = {n_core}", k.kernel.edge_multiplicities()));
                    }
                }
            }
        }
    }
    outcome(bad.is_empty(), format!("{kernels} kernels, plans per simple core = 1/w, violations {:?}", bad))
}

fn criterion_5(e: &Enumerator) -> Outcome {
    let mut rows = 0;
    let mut bad = Vec::new();
    let mut extreme = Vec::new();
    for g in 0..2 {
        for l in 2..=3 {
            match e.verify_kernel_pumping(l, g) {
                Ok(r) => {
                    rows += r.len();
                    let top = r.last().unwrap();
                    extreme.push(format!("l={l} g={g} d={} ratio {}", top.d, top.ratio));
                }
                Err(err) => bad.push(format!("l={l} g={g}: {err}")),
            }
        }
    }
    outcome(bad.is_empty(), format!("{rows} kernel-ratio rows within bounds; {}; {:?}", extreme.join(", "), bad))
}

fn criterion_6(e: &Enumerator) -> Outcome {
    let mut cells = 0;
    let mut bad = Vec::new();
    for l in 1..=3u32 {
        for d in 0..=2u32.min(2 * l - 1) {
            for n_core in (2 * l - d)..=10 {
                cells += 1;
                if let Err(err) = e.verify_binsandballs(l, d, 0, n_core) {
                    bad.push(err.to_string());
                }
            }
        }
    }
    outcome(bad.is_empty(), format!("{cells} subdivision brackets, violations {:?}", bad))
}

fn complete(n: u32) -> LabeledMultigraph {
    let edges: Vec<(Label, Label)> = (1..=n).flat_map(|u| (u + 1..=n).map(move |v| (u, v))).collect();
    LabeledMultigraph::from_edges(n, edges).unwrap()
}

fn random_multigraph(rng: &mut ChaCha8Rng) -> LabeledMultigraph {
    let n = rng.gen_range(3..=6);
    let m = rng.gen_range(n..=n + 5);
    let edges: Vec<(Label, Label)> = (0..m).map(|_| (rng.gen_range(1..=n), rng.gen_range(1..=n))).collect();
    LabeledMultigraph::from_edges(n, edges).unwrap()
}

fn criterion_7() -> Outcome {
    let oracle = GenusOracle::default();
    let k33 = LabeledMultigraph::from_edges(6, (1..=3).flat_map(|u| (4..=6).map(move |v| (u, v)))).unwrap();
    let known = [
        oracle.min_genus(&complete(4)).unwrap().genus,
        oracle.min_genus(&complete(5)).unwrap().genus,
        oracle.min_genus(&k33).unwrap().genus,
    ];
    let mut graphs = 0;
    let mut disagreements = 0;
    for n in 1..=6 {
        for mask in 0..1u64 << pairs(n) {
            let g = graph_from_mask(n, mask);
            graphs += 1;
            if is_planar(&g) != (oracle.searched_genus(&g.to_multigraph()).unwrap() == 0) {
                disagreements += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut changed = 0;
    for _ in 0..200 {
        let m = random_multigraph(&mut rng);
        let before = oracle.searched_genus(&m).unwrap();
        let mut edges = m.expanded_edges();
        let (u, v) = edges.remove(rng.gen_range(0..edges.len()));
        let mut n = m.vertex_count() + 1;
        edges.extend([(u, n), (n, v)]);
        for _ in 0..rng.gen_range(1..=4) {
            let parent = rng.gen_range(1..=n);
            n += 1;
            edges.push((parent, n));
        }
        let grown = LabeledMultigraph::from_edges(n, edges).unwrap();
        if oracle.genus(&grown).unwrap() != before {
            changed += 1;
        }
    }
    outcome(
        known == [0, 1, 1] && disagreements == 0 && changed == 0,
        format!(
            "K4, K5, K3,3 genus {known:?}; planarity vs rotation search on {graphs} graphs, {disagreements} disagreements; \
             200 subdivided and grown multigraphs, {changed} genus changes"
        ),
    )
}

fn criterion_8() -> Outcome {
    let ctx = AsymptoticContext::default();
    let ratio = |n: u32, m: u32| {
        let rho = rho_exact(n, m);
        let f = britikov_f_log(u64::from(n), u64::from(m), &ctx).unwrap().to_f64();
        (surfgraph::asymptotics::ln_rational(&rho).exp(), f)
    };
    let (rho4, f4) = ratio(4, 3);
    let c = rho4 / f4;
    let mut cells = Vec::new();
    let mut bad = Vec::new();
    for n in 4..=7u32 {
        for m in n / 2 + 1..n {
            let (rho, f) = ratio(n, m);
            cells.push((n, m));
            // the fitted cell holds with equality up to rounding
            if rho > c * f * (1.0 + 1e-12) {
                bad.push(format!("({n},{m}): rho {rho:.4} > c f {:.4}", c * f));
            }
        }
    }
    outcome(bad.is_empty(), format!("c = {c:.6} from n = 4; {} cells; exceeded at {}", cells.len(), bad.join(", ")))
}

fn criterion_9() -> Outcome {
    let full = SumMode::Full;
    let core = sigma_core_eval(1_000_000, 1000, 0, NuPolicy::Upper, full).unwrap();
    let centre = (3.0f64 * 1e6 * 1e3).sqrt();
    let lo = (0.9 * centre).ceil() as u64;
    let hi = (1.1 * centre).floor() as u64;
    let core_mass = core.mass(lo, hi);

    let d_upper = sigma_d_eval(1_000_000, 10, TauPolicy::Upper, NuPolicy::Upper, full).unwrap();
    let d_lower = sigma_d_eval(1_000_000, 10, TauPolicy::Lower, NuPolicy::Upper, full).unwrap();
    let (zero_upper, zero_lower) = (d_upper.mass(0, 0), d_lower.mass(0, 0));

    // 2l + 1 deficiencies each needing a core sum over 10^6 indices: truncated
    let truncated = SumMode::Truncated { cutoff: DEFAULT_CUTOFF };
    let big = sigma_d_eval(1_000_000, 10_000, TauPolicy::Upper, NuPolicy::Upper, truncated).unwrap();
    let limit = (50.0 * (1e12f64 / 1e6).sqrt()).floor() as u64;
    let big_mass = big.mass(0, limit);

    let pass = core_mass >= 0.99 && zero_upper >= 0.99 && big_mass >= 0.99;
    outcome(
        pass,
        format!(
            "core window [{lo},{hi}] mass {core_mass:.12}; d = 0 share {zero_upper:.4} at tau = 6 \
             ({zero_lower:.4} at tau = 1/216); l = 10^4 mass within d <= {limit}: {big_mass:.6} (argmax d = {})",
            big.argmax
        ),
    )
}

fn criterion_10() -> Outcome {
    let ctx = AsymptoticContext::default();
    let mut worst: f64 = 0.0;
    let mut solved = 0;
    let mut failures = Vec::new();
    for exp in 3..=10 {
        let n = 10u64.pow(exp);
        for alpha in [1.01, 1.1, 1.3, 1.5, 1.7, 1.9, 1.99, 2.0] {
            let m = (alpha * n as f64 / 2.0).round() as u64;
            match l0_solve(n, m, 0, &ctx) {
                Ok(p) => {
                    solved += 1;
                    worst = worst.max(p.residual.abs());
                }
                Err(err) => failures.push(format!("({n},{m}): {err}")),
            }
        }
    }
    let round_m = |n: f64, zeta: f64| ((2.0 + zeta * n.powf(-0.4)) * n / 2.0).round() as u64;
    let frozen = [
        [1.461538123010616, 1.4628967392142893, 1.4629598889377655],
        [1.6853365396093056, 1.7873961811706634, 1.822698987518999],
        [3.49984064015252, 3.5351512271619070, 3.5386159393382827],
    ];
    let mut series = [[0.0; 3]; 3];
    for (i, exp) in [6, 8, 10].into_iter().enumerate() {
        let n = 10u64.pow(exp);
        let nf = n as f64;
        let p = l0_solve(n, 3 * n / 4, 0, &ctx).unwrap();
        series[0][i] = p.l0 / nf.cbrt();
        let p = l0_solve(n, round_m(nf, -nf.powf(0.2)), 0, &ctx).unwrap();
        series[1][i] = p.l0 * p.regime.zeta.abs().powf(2.0 / 3.0) / nf.powf(0.6);
        let p = l0_solve(n, round_m(nf, nf.powf(0.2)), 0, &ctx).unwrap();
        let z = p.regime.zeta;
        series[2][i] = (p.l0 - z * nf.powf(0.6) / 2.0) * z.powf(1.5) / nf.powf(0.6);
    }
    let spread: Vec<f64> = series
        .iter()
        .map(|s| s.iter().cloned().fold(f64::MIN, f64::max) / s.iter().cloned().fold(f64::MAX, f64::min) - 1.0)
        .collect();
    let frozen_ok = series
        .iter()
        .flatten()
        .zip(frozen.iter().flatten())
        .all(|(a, b)| ((a - b) / b).abs() < 1e-8);
    outcome(
        failures.is_empty() && worst < 1e-10 && spread.iter().all(|&s| s < 0.1) && frozen_ok,
        format!(
            "{solved} fixed points, max |residual| {worst:.1e}; order ratios Int {:?}, 2Sub {:?}, 2Sup {:?}; \
             relative spread {:.3?}; frozen references match: {frozen_ok}; {:?}",
            series[0], series[1], series[2], spread, failures
        ),
    )
}

fn run_plan(model: Model, points: Vec<SweepPoint>, reps: u32, seed: u64) -> Vec<ExperimentRecord> {
    let plan = SweepPlan {
        model,
        points,
        options: MeasureOptions::default(),
    };
    sweep(&plan, reps, seed, &GenusOracle::default()).unwrap().records
}

fn point(n: u32, lambda: f64) -> SweepPoint {
    SweepPoint {
        n,
        lambda: Some(lambda),
        ..Default::default()
    }
}

fn median_h1(records: &[&ExperimentRecord]) -> f64 {
    let mut h: Vec<f64> = records.iter().filter_map(|r| r.h1).map(|x| x as f64).collect();
    h.sort_by(f64::total_cmp);
    quantile(&h, 0.5).unwrap()
}

fn criterion_11() -> Outcome {
    let reps = 200;
    let sub = run_plan(Model::Er, vec![point(10_000, -5.0), point(100_000, -5.0)], reps, 11);
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, n) in [10_000f64, 100_000.0].into_iter().enumerate() {
        let recs: Vec<&ExperimentRecord> = sub[i * reps as usize..(i + 1) * reps as usize].iter().collect();
        let tree_share = recs.iter().filter(|r| r.h1_class == Some(ComponentClass::Tree)).count() as f64 / reps as f64;
        let median = median_h1(&recs);
        let scale = 2.0 / 25.0 * n.powf(2.0 / 3.0) * 125f64.ln();
        let factor = (median / scale).max(scale / median);
        pass &= tree_share >= 0.9 && factor <= 3.0;
        parts.push(format!(
            "lambda = -5, n = {n}: tree share {tree_share:.3}, median |H1| {median} vs {scale:.1} (factor {factor:.2})"
        ));
    }
    let sup = run_plan(Model::Er, vec![point(100_000, 2.0)], reps, 12);
    let scale = 4.0 * 1e5f64.powf(2.0 / 3.0);
    let inside = sup
        .iter()
        .filter(|r| {
            let q = r.h1.unwrap() as f64 / scale;
            (0.5..=2.0).contains(&q)
        })
        .count() as f64
        / reps as f64;
    pass &= inside >= 0.8;
    parts.push(format!("lambda = 2, n = 1e5: share with |H1|/(2 lambda n^(2/3)) in [0.5, 2] {inside:.3}"));
    outcome(pass, parts.join("; "))
}

fn criterion_12() -> Outcome {
    let reps = 300;
    let sizes = [1_000u32, 4_000, 16_000];
    let records = run_plan(
        Model::Surface { g: 0, max_tries: 1000 },
        sizes.iter().map(|&n| point(n, 0.0)).collect(),
        reps,
        13,
    );
    let mut fit = Vec::new();
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, &n) in sizes.iter().enumerate() {
        let block = &records[i * reps as usize..(i + 1) * reps as usize];
        let accepted: Vec<&ExperimentRecord> = block.iter().filter(|r| r.accepted).collect();
        let tries: u64 = block.iter().map(|r| r.tries).sum();
        let complex = accepted.iter().filter(|r| r.has_complex() == Some(true)).count() as f64 / accepted.len() as f64;
        let median = median_h1(&accepted);
        fit.push((f64::from(n), median));
        pass &= accepted.len() == reps as usize && (0.05..=0.95).contains(&complex);
        parts.push(format!(
            "n = {n}: accepted {}/{reps}, acceptance rate {:.3}, complex share {complex:.3}, median |H1| {median}",
            accepted.len(),
            accepted.len() as f64 / tries as f64
        ));
    }
    let exponent = power_law_exponent(&fit);
    pass &= (0.51..=0.82).contains(&exponent);
    outcome(pass, format!("fitted exponent {exponent:.3}; {}", parts.join("; ")))
}

fn criterion_13() -> Outcome {
    let plan = SweepPlan {
        model: Model::Surface { g: 0, max_tries: 100 },
        points: vec![point(2_000, 0.0), point(500, 3.0)],
        options: MeasureOptions {
            rest_planarity: true,
            largest_genus: false,
        },
    };
    let csv_with = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let records = pool.install(|| sweep(&plan, 20, 99, &GenusOracle::default()).unwrap().records);
        let mut bytes = Vec::new();
        write_csv(&records, &mut bytes).unwrap();
        bytes
    };
    let one = csv_with(1);
    let four = csv_with(4);
    outcome(one == four, format!("CSV of {} bytes identical with 1 and 4 workers: {}", one.len(), one == four))
}

fn main() {
    let e = enumerator();
    let criteria: Vec<(u32, Box<dyn Fn() -> Outcome + '_>)> = vec![
        (1, Box::new(|| criterion_1(&e))),
        (2, Box::new(|| criterion_2(&e))),
        (3, Box::new(|| criterion_3(&e))),
        (4, Box::new(|| criterion_4(&e))),
        (5, Box::new(|| criterion_5(&e))),
        (6, Box::new(|| criterion_6(&e))),
        (7, Box::new(criterion_7)),
        (8, Box::new(criterion_8)),
        (9, Box::new(criterion_9)),
        (10, Box::new(criterion_10)),
        (11, Box::new(criterion_11)),
        (12, Box::new(criterion_12)),
        (13, Box::new(criterion_13)),
    ];
    let mut unexpected = Vec::new();
    for (id, run) in &criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let verdict = if result.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2}: {verdict} ({:.1}s) {}", start.elapsed().as_secs_f64(), result.detail);
        if !result.pass && !KNOWN_FAILURES.contains(id) {
            unexpected.push(*id);
        }
    }
    if !unexpected.is_empty() {
        println!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
    println!("acceptance: all criteria pass except the documented {KNOWN_FAILURES:?}");
}
