//! End-to-end acceptance checks. Prints one PASS/FAIL/SKIP line per
//! criterion and exits nonzero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use defect_sr::constfit::{fit_constants, Dataset, FitConfig};
use defect_sr::expr::{
    parse, random_valid_sequence, serialize, validate_prefix, ComplexityWeights, Grammar, Op, Token,
};
use defect_sr::materials::{
    evaluate_registry, fit_kernels, load_structures, predict_formation_per_site, predict_gap, DefectStructure,
    KernelFitSettings, KernelRegistry, Material, Target, Targets,
};
use defect_sr::rng::seeded;
use defect_sr::search::{pareto_front, search, Candidate, PredicateSet, SearchConfig};
use defect_sr::seqvae::{pretrain, validity_rate, Decoding, ModelDims, SeqVaeModel, TrainConfig, Trainer};
use defect_sr::synth::{
    demo_registry, fabricate_structures, formation_oracle, gap_oracle, kernel_by_name, paper_kernel_eq5,
    rkky_constants, sample_dataset, Grid, KernelSpec, RKKY_EXPRESSION,
};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

enum Verdict {
    Pass,
    Fail,
    Skip,
}

struct Outcome {
    verdict: Verdict,
    detail: String,
}

fn outcome(ok: bool, detail: String) -> Outcome {
    Outcome {
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        detail,
    }
}

fn within(t: Instant, limit: Duration) -> bool {
    t.elapsed() <= limit
}

// 1. parse/serialize round trip and evaluator vs reference evaluator
fn expression_core() -> Outcome {
    let t = Instant::now();
    let g = Grammar::default();
    let mut rng = seeded(101);
    let mut trips = 0;
    for _ in 0..1000 {
        let s = random_valid_sequence(&mut rng, 30, &g);
        if serialize(&parse(&s).unwrap()).unwrap() == s {
            trips += 1;
        }
    }
    let closed = (0..10_000)
        .filter(|_| validate_prefix(&random_valid_sequence(&mut rng, 30, &g)).is_ok())
        .count();
    let (mut agreeing, mut errors) = (0, 0);
    for _ in 0..10_000 {
        let toks = random_tree_tokens(&mut rng, 6, 3);
        let x: f64 = rng.random_range(-10.0..10.0);
        let c: Vec<f64> = (0..3).map(|_| rng.random_range(-5.0..5.0)).collect();
        let want = reference_eval(&toks, &[x], &c);
        let got = parse(&toks).unwrap().evaluate(&[x], &c).ok();
        if agree(want, got) {
            agreeing += 1;
        }
        errors += want.is_none() as usize;
    }
    let ok = trips == 1000 && closed == 10_000 && agreeing == 10_000 && within(t, Duration::from_secs(10));
    outcome(
        ok,
        format!("round trips {trips}/1000, closure {closed}/10000, evaluator agreement {agreeing}/10000 ({errors} shared domain errors)"),
    )
}

// 2. golden values of the vacancy-pair kernel
fn golden_values() -> Outcome {
    // high-precision reference values, digits beyond f64 kept on purpose
    #[allow(clippy::excessive_precision)]
    const F4: f64 = 4.859125542558401613;
    #[allow(clippy::excessive_precision)]
    const F30: f64 = 4.894999999903734943;
    let f0 = paper_kernel_eq5(0.0);
    let (e4, e30) = ((paper_kernel_eq5(4.0) - F4).abs(), (paper_kernel_eq5(30.0) - F30).abs());
    let tree = kernel_by_name("eq5").unwrap();
    let tree_err = [0.0, 4.0, 30.0]
        .iter()
        .map(|&x| (tree.eval(x).unwrap() - paper_kernel_eq5(x)).abs())
        .fold(0.0, f64::max);
    outcome(
        f0 == 4.895 && e4 < 1e-9 && e30 < 1e-9 && tree_err < 1e-12,
        format!("f(0)={f0}, |f(4)-oracle|={e4:.1e}, |f(30)-oracle|={e30:.1e}, prefix form deviation {tree_err:.1e}"),
    )
}

/// Least squares for `y ≈ p0·u + p1·v` through the 2x2 normal equations.
fn lstsq2(u: &[f64], v: &[f64], y: &[f64]) -> (f64, f64) {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
    let (a, b, d) = (dot(u, u), dot(u, v), dot(v, v));
    let (r0, r1) = (dot(u, y), dot(v, y));
    let det = a * d - b * b;
    ((d * r0 - b * r1) / det, (a * r1 - b * r0) / det)
}

// 3. constant fitting against linear least squares
fn constant_fitting() -> Outcome {
    let t = Instant::now();
    let xs: Vec<f64> = (0..25).map(|i| 0.2 * i as f64).collect();
    let ones = vec![1.0; xs.len()];
    let cfg = FitConfig::default();

    let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
    let y: Vec<f64> = xs.iter().map(|x| 4.895 + 0.5 * x * x).collect();
    let oracle = lstsq2(&ones, &sq, &y);
    let d = Dataset::univariate(xs.clone(), y, "x", "y").unwrap();
    let tree = parse(
        &"add C0 mul C1 mul x x"
            .parse::<defect_sr::expr::PrefixSequence>()
            .unwrap(),
    )
    .unwrap();
    let fit = fit_constants(&tree, &d, &cfg, &mut seeded(3));
    let e_quad = (fit.const_values[0] - oracle.0)
        .abs()
        .max((fit.const_values[1] - oracle.1).abs());
    let e_truth = (fit.const_values[0] - 4.895)
        .abs()
        .max((fit.const_values[1] - 0.5).abs());

    let y: Vec<f64> = xs.iter().map(|x| -1.25 + 3.5 * x).collect();
    let oracle = lstsq2(&ones, &xs, &y);
    let d = Dataset::univariate(xs.clone(), y, "x", "y").unwrap();
    let tree = parse(&"add C0 mul C1 x".parse::<defect_sr::expr::PrefixSequence>().unwrap()).unwrap();
    let lin = fit_constants(&tree, &d, &cfg, &mut seeded(4));
    let e_lin = (lin.const_values[0] - oracle.0)
        .abs()
        .max((lin.const_values[1] - oracle.1).abs());

    outcome(
        e_quad < 1e-6 && e_truth < 1e-6 && e_lin < 1e-10 && within(t, Duration::from_secs(5)),
        format!(
            "C0+C1·x² -> ({:.9}, {:.9}), deviation from lstsq {e_quad:.1e}; linear skeleton deviation {e_lin:.1e}",
            fit.const_values[0], fit.const_values[1]
        ),
    )
}

// 4a. gradient check on a tiny model
fn gradient_check() -> (bool, String) {
    let grammar = Grammar {
        operators: vec![Op::Add],
        n_vars: 1,
        n_consts: 1,
    };
    let dims = ModelDims {
        embed: 3,
        hidden: 4,
        latent: 8,
    };
    let mut rng = seeded(404);
    let m = SeqVaeModel::random(grammar, dims, &mut rng);
    let vocab = m.vocab().len();
    let toks = [Token::ADD, Token::Const(0), Token::ADD, Token::Var(0), Token::Var(0)];
    let eps: Vec<f64> = (0..dims.latent).map(|_| StandardNormal.sample(&mut rng)).collect();
    let beta = 0.5;
    let (_, g) = m.loss_gradient(&toks, &eps, beta, true).unwrap();
    let mut worst = 0.0f64;
    let mut probe = m.clone();
    for _ in 0..100 {
        let k = rng.random_range(0..g.len());
        let h = 1e-4;
        let orig = probe.params()[k];
        let mut at = |d: f64| {
            probe.params_mut()[k] = orig + d;
            let v = probe.loss(&toks, &eps, beta, true).unwrap();
            probe.params_mut()[k] = orig;
            v
        };
        let num = (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h);
        let rel = (g[k] - num).abs() / g[k].abs().max(num.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    (
        vocab == 6 && worst < 1e-4,
        format!("tiny model (vocab {vocab}) worst relative gradient error {worst:.1e} over 100 coordinates"),
    )
}

// 4. gradient check plus pretraining validity
fn vae_sanity(trainer_out: &mut Option<Trainer>) -> Outcome {
    let t = Instant::now();
    let (grad_ok, grad_detail) = gradient_check();
    let mut rng = seeded(1);
    let model = SeqVaeModel::random(Grammar::default(), ModelDims::default(), &mut rng);
    let mode = Decoding::Sample { temperature: 1.0 };
    let baseline = validity_rate(&model, 1000, mode, 9);
    let mut trainer = Trainer::new(model, TrainConfig::default());
    let stats = pretrain(&mut trainer, &mut rng);
    let Ok(stats) = stats else {
        return outcome(
            false,
            format!("{grad_detail}; pretraining failed: {}", stats.unwrap_err()),
        );
    };
    let rate = validity_rate(trainer.model(), 1000, mode, 9);
    let last = stats.last().map(|s| s.recon).unwrap_or(f64::NAN);
    *trainer_out = Some(trainer);
    outcome(
        grad_ok && rate >= 0.8 && within(t, Duration::from_secs(600)),
        format!(
            "{grad_detail}; validity {rate:.3} after {} epochs (untrained baseline {baseline:.3}, final recon {last:.3})",
            stats.len()
        ),
    )
}

fn variance(y: &[f64]) -> f64 {
    let m = y.iter().sum::<f64>() / y.len() as f64;
    y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / y.len() as f64
}

fn oscillatory_decay(c: &Candidate) -> bool {
    let t = c.sequence.tokens();
    t.contains(&Token::COS) && t.iter().any(|&k| k == Token::EXP || k == Token::DIV || k == Token::POW)
}

struct Recovery {
    name: &'static str,
    data: Dataset,
    needed: usize,
    relative: bool,
}

// 5. formula recovery on noiseless data
fn recovery(trainer: Option<&Trainer>) -> Outcome {
    let Some(trainer) = trainer else {
        return outcome(false, "no pretrained model (criterion 4 failed)".into());
    };
    let uniform = |spec: KernelSpec, n| sample_dataset(&spec, n, Grid::Uniform, &mut seeded(0)).unwrap();
    let targets = [
        Recovery {
            name: "x^2 on [1,5]",
            data: uniform(kernel_by_name("x2").unwrap().with_domain((1.0, 5.0)).unwrap(), 32),
            needed: 3,
            relative: false,
        },
        Recovery {
            name: "x^2 exp(-x) on [0.5,10]",
            data: uniform(kernel_by_name("x2exp").unwrap().with_domain((0.5, 10.0)).unwrap(), 32),
            needed: 3,
            relative: false,
        },
        Recovery {
            name: "RKKY A=1 k=0.5 on [1,10]",
            data: uniform(
                KernelSpec::new("rkky", RKKY_EXPRESSION, rkky_constants(1.0, 0.5), (1.0, 10.0)).unwrap(),
                40,
            ),
            needed: 1,
            relative: true,
        },
    ];
    let mut all_ok = true;
    let mut parts = Vec::new();
    for target in &targets {
        let t = Instant::now();
        let y = target.data.y();
        let scale = if target.relative { variance(y) } else { 1.0 };
        let threshold = if target.relative { 1e-3 } else { 1e-6 };
        let preds = PredicateSet::for_data(&target.data.column(0), y);
        let mut successes = 0;
        let mut runs = 0;
        let mut notes = Vec::new();
        for seed in 0..5u64 {
            let cfg = SearchConfig {
                target_mse: Some(threshold * scale),
                ..SearchConfig::default()
            };
            let out = search(
                trainer.clone(),
                &target.data,
                &preds,
                &cfg,
                &FitConfig::default(),
                &ComplexityWeights::default(),
                seed,
            );
            runs += 1;
            let Ok(out) = out else {
                notes.push(format!("seed {seed}: error {}", out.err().unwrap()));
                continue;
            };
            let best = out.bank.best().map(|c| c.mse / scale).unwrap_or(f64::INFINITY);
            let mut ok = best < threshold || (target.relative && best <= threshold);
            if target.relative && !ok {
                // accept the structure class when it fits within 10% relative
                ok = out
                    .front
                    .entries()
                    .iter()
                    .any(|c| oscillatory_decay(c) && c.mse / scale <= 0.1);
            }
            successes += ok as usize;
            let front: Vec<String> = out
                .front
                .entries()
                .iter()
                .map(|c| format!("{} (mse {:.2e})", c.expression(), c.mse))
                .collect();
            println!(
                "    [5] {} seed {seed}: {} after {} iterations, best {} = {:.3e}",
                target.name,
                if ok { "recovered" } else { "not recovered" },
                out.log.len(),
                if target.relative { "relative mse" } else { "mse" },
                best
            );
            for f in &front {
                println!("          front {f}");
            }
            if successes >= target.needed {
                break;
            }
        }
        let in_time = within(t, Duration::from_secs(1800));
        let ok = successes >= target.needed && in_time;
        all_ok &= ok;
        parts.push(format!(
            "{}: {successes}/{runs} seeds (need {}), {:.0}s{}",
            target.name,
            target.needed,
            t.elapsed().as_secs_f64(),
            if notes.is_empty() {
                String::new()
            } else {
                format!(" [{}]", notes.join("; "))
            }
        ));
    }
    outcome(all_ok, parts.join("; "))
}

// 6. Pareto front vs brute force
fn pareto_correctness() -> Outcome {
    let g = Grammar::default();
    let w = ComplexityWeights::default();
    let mut rng = seeded(606);
    let mut matched = 0;
    for _ in 0..1000 {
        let n = rng.random_range(0..50);
        let cands: Vec<Candidate> = (0..n)
            .map(|_| {
                let sequence = random_valid_sequence(&mut rng, 15, &g);
                let mae = rng.random_range(0..8) as f64 * 0.125;
                Candidate {
                    tree: parse(&sequence).unwrap(),
                    complexity: defect_sr::expr::complexity(&sequence, &w),
                    sequence,
                    const_values: vec![],
                    mse: mae * mae,
                    mae,
                    generation: rng.random_range(0..4),
                }
            })
            .collect();
        let got: Vec<(f64, u32)> = pareto_front(&cands)
            .entries()
            .iter()
            .map(|c| (c.mae, c.complexity))
            .collect();
        matched += (got == brute_front(&cands)) as usize;
    }
    outcome(
        matched == 1000,
        format!("{matched}/1000 random candidate sets match the brute-force front"),
    )
}

// 7. assembly vs independent oracles on fabricated structures
fn assembly_oracle() -> Outcome {
    let t = Instant::now();
    let reg = demo_registry();
    let mut rng = seeded(707);
    let mut ss = fabricate_structures(Material::MoS2, &reg, 50, 2..=3, &mut rng).unwrap();
    ss.extend(fabricate_structures(Material::MoS2, &reg, 50, 4..=25, &mut rng).unwrap());
    let mut worst = 0.0f64;
    for s in &ss {
        let f = predict_formation_per_site(s, &reg).unwrap().value;
        let g = predict_gap(s, &reg).unwrap().value;
        let oracles = [
            (f, formation_double_loop(s, &reg)),
            (f, formation_oracle(s, &reg).unwrap()),
            (g, gap_min(s, &reg)),
            (g, gap_oracle(s, &reg).unwrap()),
        ];
        for (a, b) in oracles {
            worst = worst.max((a - b).abs());
        }
    }
    let mut maes = Vec::new();
    for target in [Target::Formation, Target::Gap] {
        let r = evaluate_registry(&ss, &reg, target).unwrap();
        maes.push(r.mae_low_meV.unwrap_or(f64::NAN));
        maes.push(r.mae_high_meV.unwrap_or(f64::NAN));
    }
    let mae_ok = maes.iter().all(|&m| m < 1e-9);
    outcome(
        worst <= 1e-12 && mae_ok && within(t, Duration::from_secs(60)),
        format!(
            "100 structures, worst absolute deviation {worst:.1e} eV; self-consistent MAE (meV) formation {:.1e}/{:.1e}, gap {:.1e}/{:.1e}",
            maes[0], maes[1], maes[2], maes[3]
        ),
    )
}

// 8. density split at <=3 vs 4..=25 defects
fn density_split() -> Outcome {
    let reg = demo_registry();
    let mut rng = seeded(808);
    let mut ss: Vec<DefectStructure> = Vec::new();
    let (mut low, mut high) = (Vec::new(), Vec::new());
    for n in 1..=26usize {
        let mut s = fabricate_structures(Material::MoS2, &reg, 1, n..=n, &mut rng)
            .unwrap()
            .remove(0);
        let truth = s.targets.formation_energy_eV.unwrap();
        // offset in meV grows with n so the class means are distinguishable
        let offset_mev = if n % 2 == 0 { n as f64 } else { -(n as f64) };
        s = s.with_targets(Targets {
            formation_energy_eV: Some(truth + offset_mev * 1e-3),
            homo_lumo_gap_eV: None,
        });
        match n {
            1..=3 => low.push(offset_mev.abs()),
            4..=25 => high.push(offset_mev.abs()),
            _ => {}
        }
        ss.push(s);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let r = evaluate_registry(&ss, &reg, Target::Formation).unwrap();
    let (want_low, want_high) = (mean(&low), mean(&high));
    let got_low = r.mae_low_meV.unwrap_or(f64::NAN);
    let got_high = r.mae_high_meV.unwrap_or(f64::NAN);
    let ok = r.n_low == 3
        && r.n_high == 22
        && r.n_unclassified == 1
        && (got_low - want_low).abs() < 1e-6
        && (got_high - want_high).abs() < 1e-6;
    outcome(
        ok,
        format!(
            "low n={} MAE {got_low:.6} meV (expect {want_low:.6}), high n={} MAE {got_high:.6} meV (expect {want_high:.6}), unclassified {}",
            r.n_low, r.n_high, r.n_unclassified
        ),
    )
}

// 9. reference-data reproduction, only with an external dataset
fn reference_data(trainer: Option<&Trainer>) -> Outcome {
    let Ok(path) = std::env::var("DEFECT_SR_DFT_DATA") else {
        return Outcome {
            verdict: Verdict::Skip,
            detail: "set DEFECT_SR_DFT_DATA to a structure file with DFT targets to run".into(),
        };
    };
    let Some(trainer) = trainer else {
        return outcome(false, "no pretrained model (criterion 4 failed)".into());
    };
    let all = match load_structures(std::path::Path::new(&path)) {
        Ok(s) => s,
        Err(e) => return outcome(false, format!("cannot load {path}: {e}")),
    };
    let train: Vec<DefectStructure> = all.iter().filter(|s| s.n_defects() <= 2).cloned().collect();
    // bars: 2x the reference symbolic MAE (meV), low then high density
    let bars = [(Target::Formation, 8.0, 100.0), (Target::Gap, 36.0, 110.0)];
    let mut ok = true;
    let mut parts = Vec::new();
    for (target, low_bar, high_bar) in bars {
        let fitted: Result<(KernelRegistry, _), _> =
            fit_kernels(&train, target, trainer, &KernelFitSettings::default(), 9);
        let report = fitted.and_then(|(reg, _)| evaluate_registry(&all, &reg, target));
        match report {
            Ok(r) => {
                let (l, h) = (
                    r.mae_low_meV.unwrap_or(f64::INFINITY),
                    r.mae_high_meV.unwrap_or(f64::INFINITY),
                );
                ok &= l <= low_bar && h <= high_bar;
                parts.push(format!(
                    "{}: low {l:.1} meV (bar {low_bar}), high {h:.1} meV (bar {high_bar})",
                    target.name()
                ));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("{}: {e}", target.name()));
            }
        }
    }
    outcome(ok, parts.join("; "))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut trainer = None;
    let mut run = |id: u32, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        let tag = match o.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => {
                failed += 1;
                "FAIL"
            }
            Verdict::Skip => "SKIP",
        };
        println!(
            "criterion {id} {tag} {name}: {} ({:.1}s)",
            o.detail,
            t.elapsed().as_secs_f64()
        );
    };
    run(1, "expression core", &mut expression_core);
    run(2, "golden kernel values", &mut golden_values);
    run(3, "constant fitting", &mut constant_fitting);
    run(4, "sequence VAE sanity", &mut || vae_sanity(&mut trainer));
    run(5, "formula recovery", &mut || recovery(trainer.as_ref()));
    run(6, "Pareto correctness", &mut pareto_correctness);
    run(7, "assembly oracle equivalence", &mut assembly_oracle);
    run(8, "density split", &mut density_split);
    run(9, "reference data reproduction", &mut || {
        reference_data(trainer.as_ref())
    });
    if failed == 0 {
        println!("acceptance: all criteria passed or skipped");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
