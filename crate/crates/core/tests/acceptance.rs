//! End-to-end acceptance checks. Each criterion prints one `PASS`/`FAIL` line;
//! the process exits nonzero if any fails.

use std::collections::HashSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use sdrqc_core::bench::{run_scaling, run_sisc, ScalingConfig, SiscConfig, SiscReport};
use sdrqc_core::coding_field::{all_codes, intersection, likelihood, num_codes, num_levels};
use sdrqc_core::{
    evolve_explicit, BitPattern, Code, CostReport, Exec, ExplicitSuperposition, FieldGeometry,
    Likelihood, Memory, ModelParams, Registry, SdrRng, SelectMode, TransitionTable,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn ac1() -> Outcome {
    let closed = num_codes(6, 3).map_err(fail)?;
    let enumerated = all_codes(6, 3).collect::<HashSet<Code>>().len();
    ensure(closed == 729 && enumerated == 729, || {
        format!("num_codes={closed}, enumerated={enumerated}, want 729")
    })?;
    Ok(format!("num_codes(6,3)={closed}, enumeration={enumerated}"))
}

fn ac2() -> Outcome {
    ensure(num_levels(256) == 257, || {
        format!("num_levels(256)={}", num_levels(256))
    })?;
    let codes: Vec<Code> = all_codes(4, 2).collect();
    let mut seen = HashSet::new();
    for a in &codes {
        for b in &codes {
            seen.insert(likelihood(a, b).map_err(fail)?);
        }
    }
    ensure(seen.len() == 5 && num_levels(4) == 5, || {
        format!(
            "{} distinct likelihoods over q=4,k=2 pairs, want 5",
            seen.len()
        )
    })?;
    Ok(format!(
        "num_levels(256)=257, q=4,k=2 pairs realize {} levels",
        seen.len()
    ))
}

fn ac3() -> Outcome {
    let g = FieldGeometry::new(16, 8, 256, 256).map_err(fail)?;
    let params = ModelParams::new(g, 3);
    let config = ScalingConfig::new(vec![10, 100, 1000, 5000], 32, 17);
    let report = run_scaling(&params, &config).map_err(fail)?;
    report.check()?;
    ensure(report.rows.iter().all(|r| r.localist_hit), || {
        "linear scan missed an exact probe".into()
    })?;
    let recovered: Vec<String> = report
        .rows
        .iter()
        .map(|r| {
            format!(
                "{}:{}",
                r.stored_count,
                if r.sdr_hit { "hit" } else { "miss" }
            )
        })
        .collect();
    let (a, b) = report.localist_fit().ok_or("no localist fit")?;
    let q = report.rows[0].sdr_query_cost.counts();
    let s = report.rows[0].sdr_store_cost.counts();
    Ok(format!(
        "sdr query {q:?} and store {s:?} identical at n=10..5000; localist reads = {a}*n+{b}; sdr recall [{}]",
        recovered.join(" ")
    ))
}

fn ac4() -> Outcome {
    let g = FieldGeometry::new(16, 8, 256, 256).map_err(fail)?;
    let params = ModelParams::new(g, 0);
    let reports = Exec::default().try_map(20, |seed| {
        run_sisc(&params, &SiscConfig::new(50, seed as u64, 40))
    });
    let pooled = SiscReport::pool(&reports.map_err(fail)?).map_err(fail)?;
    pooled.check(0.8)?;
    let top = pooled.rows.first().ok_or("no rows")?;
    let bottom = pooled.rows.last().ok_or("no rows")?;
    ensure(
        top.input_overlap == 1.0 && top.mean_code_intersection == 16.0,
        || {
            format!(
                "mean intersection at overlap 1.0 is {}, want 16",
                top.mean_code_intersection
            )
        },
    )?;
    let chance = 16.0 / 8.0;
    ensure(
        bottom.input_overlap == 0.0
            && (bottom.mean_code_intersection - chance).abs() <= 0.15 * chance,
        || {
            format!(
                "mean intersection at overlap 0.0 is {}, want 2 +- 15%",
                bottom.mean_code_intersection
            )
        },
    )?;
    let means: Vec<String> = pooled
        .rows
        .iter()
        .map(|r| format!("{:.3}", r.mean_code_intersection))
        .collect();
    Ok(format!(
        "rho={:.3} over 20 seeds x 50 trials, means [{}]",
        pooled.spearman_rho,
        means.join(", ")
    ))
}

/// Exact and 10%-corrupted probe agreement counts for one seed.
fn ac5_seed(seed: u64) -> Result<(usize, usize, usize), String> {
    const STORED: usize = 50;
    const ACTIVE: usize = 40;
    let g = FieldGeometry::new(16, 8, 256, 256).map_err(fail)?;
    let mut memory = Memory::new(ModelParams::new(g, seed)).map_err(fail)?;
    let mut registry = Registry::new(g);
    let mut rng = SdrRng::substream(seed, 1);
    let mut inputs = HashSet::new();
    while inputs.len() < STORED {
        let p = BitPattern::random(256, ACTIVE, &mut rng).map_err(fail)?;
        if inputs.insert(p.clone()) {
            let code = memory.store(&p).map_err(fail)?;
            registry
                .register(format!("p{}", inputs.len()), p, code)
                .map_err(fail)?;
        }
    }
    let codes: HashSet<&Code> = registry.entries().iter().map(|e| &e.code).collect();
    ensure(codes.len() == STORED, || {
        format!("seed {seed}: stored codes are not distinct")
    })?;

    let mut cost = CostReport::default();
    let mut agree = |memory: &mut Memory, probe: &BitPattern| -> Result<bool, String> {
        memory.query(probe).map_err(fail)?;
        let collapsed = memory.collapse().map_err(fail)?;
        let scan = registry
            .linear_scan_best_match(probe, &mut cost)
            .map_err(fail)?;
        let decoded = registry.decode(&collapsed).map_err(fail)?;
        Ok(!scan.tie && decoded.is_some_and(|(label, _)| label == scan.label))
    };
    let entries: Vec<BitPattern> = registry.entries().iter().map(|e| e.input.clone()).collect();
    let mut exact = 0;
    let mut corrupted = 0;
    for input in &entries {
        exact += agree(&mut memory, input)? as usize;
        let probe = input
            .perturb(ACTIVE - ACTIVE / 10, &mut rng)
            .map_err(fail)?;
        corrupted += agree(&mut memory, &probe)? as usize;
    }
    Ok((exact, corrupted, STORED))
}

fn ac5() -> Outcome {
    let per_seed = Exec::default().try_map(20, |s| ac5_seed(s as u64))?;
    let total: usize = per_seed.iter().map(|r| r.2).sum();
    let exact: usize = per_seed.iter().map(|r| r.0).sum();
    let corrupted: usize = per_seed.iter().map(|r| r.1).sum();
    ensure(exact == total, || {
        format!("exact probes agree on {exact}/{total}")
    })?;
    let rate = corrupted as f64 / total as f64;
    ensure(rate >= 0.9, || {
        format!("corrupted probes agree on {corrupted}/{total}")
    })?;
    Ok(format!(
        "exact {exact}/{total}, 10%-corrupted {corrupted}/{total} ({:.1}%)",
        100.0 * rate
    ))
}

fn ac6_seed(seed: u64) -> Result<bool, String> {
    const LEN: usize = 10;
    const ACTIVE: usize = 24;
    let g = FieldGeometry::new(16, 16, 256, 256).map_err(fail)?;
    let mut memory = Memory::new(ModelParams::new(g, seed)).map_err(fail)?;
    let mut rng = SdrRng::substream(seed, 2);
    let pool = BitPattern::random(256, LEN * ACTIVE, &mut rng)
        .map_err(fail)?
        .active_indices();
    let items = pool
        .chunks(ACTIVE)
        .map(|bits| BitPattern::from_indices(256, bits))
        .collect::<Result<Vec<_>, _>>()
        .map_err(fail)?;
    let codes = memory.learn_sequence(&items).map_err(fail)?;
    let prime = memory.query(&items[0]).map_err(fail)?;
    let mut ok = prime.code == codes[0];
    for t in 1..LEN {
        let step = memory.step(SelectMode::Argmax).map_err(fail)?;
        ok &= step.code == codes[t] && step.output == items[t];
    }
    Ok(ok)
}

fn ac6() -> Outcome {
    let results = Exec::default().try_map(20, |s| ac6_seed(s as u64))?;
    let exact = results.iter().filter(|&&ok| ok).count();
    ensure(exact == results.len(), || {
        format!("{exact}/{} sequences replayed exactly", results.len())
    })?;
    Ok(format!(
        "{exact}/{} sequences of 10 disjoint items replayed exactly",
        results.len()
    ))
}

fn ac7() -> Outcome {
    let g = FieldGeometry::new(6, 3, 8, 8).map_err(fail)?;
    let active = Code::new(3, vec![0; 6]).map_err(fail)?;
    let mut registry = Registry::new(g);
    let mut family = Vec::new();
    for differ in 0..=6usize {
        let winners = (0..6).map(|c| u32::from(c < differ)).collect();
        let code = Code::new(3, winners).map_err(fail)?;
        let label = format!("s{}", 6 - differ);
        let input = BitPattern::from_indices(8, &[differ]).map_err(fail)?;
        registry
            .register(label.clone(), input, code.clone())
            .map_err(fail)?;
        family.push((label, code, 6 - differ));
    }
    let strengths = registry.strengths(&active).map_err(fail)?;
    for ((label, l), (_, _, hits)) in strengths.iter().zip(&family) {
        let want = Likelihood::new(*hits, 6).map_err(fail)?;
        ensure(*l == want && l.numerator() == *hits, || {
            format!("{label}: {l:?}, want {hits}/6")
        })?;
    }
    let sup = registry.superposition_from_code(&active).map_err(fail)?;
    let by_strength: Vec<&str> = sup.ranking();
    let mut by_intersection = family.clone();
    by_intersection
        .sort_by_key(|(_, code, _)| std::cmp::Reverse(intersection(code, &active).unwrap()));
    let by_intersection: Vec<&str> = by_intersection.iter().map(|(l, _, _)| l.as_str()).collect();
    ensure(by_strength == by_intersection, || {
        format!("ranking {by_strength:?} differs from {by_intersection:?}")
    })?;

    let mut memory = Memory::new(ModelParams::new(g, 1)).map_err(fail)?;
    memory.set_active(active).map_err(fail)?;
    let field = memory.current_superposition_inputs();
    for (label, code, hits) in &family {
        let implied = field.implied_strength(code);
        ensure(implied == *hits as f64 / 6.0, || {
            format!("{label}: implied {implied}")
        })?;
    }
    let shown: Vec<String> = strengths
        .iter()
        .map(|(_, l)| format!("{}/6", l.numerator()))
        .collect();
    Ok(format!(
        "strengths [{}], ranking matches intersection order",
        shown.join(", ")
    ))
}

fn ac8() -> Outcome {
    const ROUNDS: usize = 1000;
    let g = FieldGeometry::new(16, 8, 256, 256).map_err(fail)?;
    let mut memory = Memory::new(ModelParams::new(g, 8)).map_err(fail)?;
    let bits = |range: std::ops::Range<usize>| {
        BitPattern::from_indices(256, &range.collect::<Vec<_>>()).map_err(fail)
    };
    let (a, b, c) = (bits(0..32)?, bits(32..64)?, bits(64..96)?);
    let mut seen = Vec::new();
    for _ in 0..3 {
        seen.push(
            memory
                .learn_sequence(&[a.clone(), b.clone()])
                .map_err(fail)?,
        );
    }
    seen.push(
        memory
            .learn_sequence(&[a.clone(), c.clone()])
            .map_err(fail)?,
    );
    ensure(
        seen.iter().all(|s| s[0] == seen[0][0]) && seen[1][1] == seen[0][1],
        || "repeated presentations did not reuse their codes".into(),
    )?;
    let (code_a, code_b, code_c) = (seen[0][0].clone(), seen[0][1].clone(), seen[3][1].clone());
    let branching: Vec<usize> = (0..16)
        .filter(|&i| code_b.winners()[i] != code_c.winners()[i])
        .collect();
    ensure(!branching.is_empty(), || "B and C codes coincide".into())?;

    let (mut to_b, mut to_c, mut other) = (0usize, 0usize, 0usize);
    for _ in 0..ROUNDS {
        memory.query(&a).map_err(fail)?;
        let next = memory.step(SelectMode::Proportional).map_err(fail)?;
        for &i in &branching {
            let w = next.code.winners()[i];
            if w == code_b.winners()[i] {
                to_b += 1;
            } else if w == code_c.winners()[i] {
                to_c += 1;
            } else {
                other += 1;
            }
        }
    }
    let empirical_b = to_b as f64 / (to_b + to_c) as f64;

    let mut registry = Registry::new(g);
    registry.register("A", a, code_a).map_err(fail)?;
    registry.register("B", b, code_b).map_err(fail)?;
    registry.register("C", c, code_c).map_err(fail)?;
    let mut table = TransitionTable::new();
    table.add(&registry, "A", "B", 3).map_err(fail)?;
    table.add(&registry, "A", "C", 1).map_err(fail)?;
    let next = evolve_explicit(&ExplicitSuperposition::point("A"), &table);
    let (oracle_b, oracle_c) = (next.get("B"), next.get("C"));

    ensure(other == 0, || {
        format!("{other} branching-cluster picks were neither B nor C")
    })?;
    ensure(
        (oracle_b - 0.75).abs() < 1e-12 && (oracle_c - 0.25).abs() < 1e-12,
        || format!("oracle gives {oracle_b}/{oracle_c}, want 0.75/0.25"),
    )?;
    ensure((empirical_b > 0.5) == (oracle_b > oracle_c), || {
        format!("rank order disagrees: empirical B share {empirical_b}")
    })?;
    ensure((empirical_b - oracle_b).abs() <= 0.1, || {
        format!("empirical B share {empirical_b:.3} not within 0.1 of {oracle_b}")
    })?;
    Ok(format!(
        "B share {empirical_b:.3} vs oracle {oracle_b:.2} over {ROUNDS} steps x {} branching clusters",
        branching.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("AC-1", ac1, Duration::from_secs(1)),
        ("AC-2", ac2, Duration::from_secs(1)),
        ("AC-3", ac3, Duration::from_secs(120)),
        ("AC-4", ac4, Duration::from_secs(120)),
        ("AC-5", ac5, Duration::from_secs(60)),
        ("AC-6", ac6, Duration::from_secs(60)),
        ("AC-7", ac7, Duration::from_secs(1)),
        ("AC-8", ac8, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (name, run, limit) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|detail| {
            ensure(elapsed <= limit, || {
                format!("took {elapsed:.2?}, limit {limit:?}")
            })?;
            Ok(detail)
        });
        match outcome {
            Ok(detail) => println!("{name} PASS: {detail} [{elapsed:.2?}]"),
            Err(why) => {
                failed += 1;
                println!("{name} FAIL: {why} [{elapsed:.2?}]");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
