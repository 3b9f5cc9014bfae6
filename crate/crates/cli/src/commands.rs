use std::path::Path;

use anyhow::Context;
use defect_sr::constfit::Dataset;
use defect_sr::expr::{parse, PrefixSequence};
use defect_sr::materials::{
    evaluate_registry, fit_kernels, load_structures, predict_formation_per_site, predict_gap, write_structures,
    KernelFitSettings, KernelRegistry, Material, Target,
};
use defect_sr::rng::seeded;
use defect_sr::search::search;
use defect_sr::seqvae::{load_checkpoint, pretrain, save_checkpoint, validity_rate, Decoding, SeqVaeModel, Trainer};
use defect_sr::synth::{
    demo_registry, fabricate_structures, kernel_by_name, sample_dataset, Grid, KernelSpec, DEFAULT_DOMAIN,
};
use serde_json::json;

use crate::config::RunConfig;
use crate::io::{parse_consts, read_front, write_atomic, write_candidates, write_json, write_ndjson};
use crate::{Command, GridArg, Invalid, TargetArg};

/// Samples used to report decoder validity.
const VALIDITY_SAMPLES: usize = 1000;

impl From<TargetArg> for Target {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::Formation => Target::Formation,
            TargetArg::Gap => Target::Gap,
        }
    }
}

pub fn run(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::PrintConfig => {
            print!("{}", RunConfig::default().to_toml());
            Ok(())
        }
        Command::GenSynth {
            kernel,
            expression,
            consts,
            domain,
            n,
            noise,
            grid,
            seed,
            out,
        } => {
            let mut spec = match (kernel, expression) {
                (Some(name), _) => kernel_by_name(&name)?,
                (None, Some(text)) => KernelSpec::new("expression", &text, parse_consts(&consts)?, DEFAULT_DOMAIN)?,
                (None, None) => unreachable!("clap requires one of --kernel/--expression"),
            };
            if let Some(d) = domain {
                spec = spec.with_domain(d)?;
            }
            if !noise.is_finite() || noise < 0.0 {
                return Err(Invalid("--noise must be finite and non-negative".into()).into());
            }
            let grid = match grid {
                GridArg::Uniform => Grid::Uniform,
                GridArg::Random => Grid::Random,
            };
            let data = sample_dataset(&spec.with_noise(noise), n as usize, grid, &mut seeded(seed))?;
            write_atomic(&out, |w| Ok(data.write_csv(w)?))
        }
        Command::GenStructures {
            material,
            registry,
            registry_out,
            n,
            min_defects,
            max_defects,
            seed,
            out,
        } => {
            let material: Material = material.parse()?;
            let reg = match registry {
                Some(p) => KernelRegistry::load(&p)?,
                None => demo_registry(),
            };
            let list = fabricate_structures(material, &reg, n as usize, min_defects..=max_defects, &mut seeded(seed))?;
            write_atomic(&out, |w| Ok(write_structures(&list, w)?))?;
            if let Some(p) = registry_out {
                write_atomic(&p, |w| Ok(reg.write(w)?))?;
            }
            Ok(())
        }
        Command::Pretrain { config, out, log } => {
            let cfg = RunConfig::load(config.config.as_deref())?;
            let mut rng = seeded(cfg.seed);
            let model = SeqVaeModel::random(cfg.grammar.clone(), cfg.model, &mut rng);
            let mode = Decoding::Sample {
                temperature: cfg.train.temperature,
            };
            let before = validity_rate(&model, VALIDITY_SAMPLES, mode, cfg.seed);
            let mut trainer = Trainer::new(model, cfg.train.clone());
            let stats = pretrain(&mut trainer, &mut rng)?;
            let after = validity_rate(trainer.model(), VALIDITY_SAMPLES, mode, cfg.seed);
            write_atomic(&out, |w| {
                Ok(save_checkpoint(trainer.model(), trainer.epochs_done(), w)?)
            })?;
            let summary = json!({
                "untrained_validity_rate": before,
                "validity_rate": after,
                "samples": VALIDITY_SAMPLES,
                "epochs": trainer.epochs_done(),
            });
            if let Some(p) = log {
                let mut records: Vec<serde_json::Value> =
                    stats.iter().map(serde_json::to_value).collect::<Result<_, _>>()?;
                records.push(summary.clone());
                write_ndjson(&p, &records)?;
            }
            eprintln!("validity rate {after:.3} over {VALIDITY_SAMPLES} samples (untrained {before:.3})");
            Ok(())
        }
        Command::Search {
            config,
            data,
            checkpoint,
            out,
            log,
            bank_out,
        } => {
            let cfg = RunConfig::load(config.config.as_deref())?;
            let data = Dataset::load(&data)?;
            if data.n_features() != 1 {
                return Err(Invalid(format!("search needs one feature column, found {}", data.n_features())).into());
            }
            let trainer = load_trainer(&checkpoint, &cfg)?;
            let preds = cfg.predicates.for_data(&data.column(0), data.y());
            let outcome = search(trainer, &data, &preds, &cfg.search, &cfg.fit, &cfg.complexity, cfg.seed)?;
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            write_candidates(&out, outcome.front.entries())?;
            if let Some(p) = log {
                write_ndjson(&p, &outcome.log)?;
            }
            if let Some(p) = bank_out {
                write_candidates(&p, outcome.bank.entries())?;
            }
            if let Some(best) = outcome.front.most_accurate() {
                eprintln!("best: {}  mae {:e}  mse {:e}", best.expression(), best.mae, best.mse);
            }
            Ok(())
        }
        Command::FitKernels {
            config,
            structures,
            target,
            checkpoint,
            merge,
            out,
            report,
        } => {
            let cfg = RunConfig::load(config.config.as_deref())?;
            let mut all = Vec::new();
            for p in &structures {
                all.extend(load_structures(p)?);
            }
            let trainer = load_trainer(&checkpoint, &cfg)?;
            let settings = KernelFitSettings {
                search: cfg.search.clone(),
                fit: cfg.fit.clone(),
                weights: cfg.complexity.clone(),
                predicates: cfg.predicates.clone(),
            };
            let (fitted, reports) = fit_kernels(&all, target.into(), &trainer, &settings, cfg.seed)?;
            let mut reg = match merge {
                Some(p) => KernelRegistry::load(&p)?,
                None => KernelRegistry::new(),
            };
            reg.merge(fitted);
            reg.validate()?;
            write_atomic(&out, |w| Ok(reg.write(w)?))?;
            if let Some(p) = report {
                write_json(&p, &reports)?;
            }
            for r in &reports {
                eprintln!("{}: {}  mae {:e}", r.interaction, r.expression, r.mae);
            }
            Ok(())
        }
        Command::Predict {
            structures,
            registry,
            out,
        } => {
            let list = load_structures(&structures)?;
            let reg = KernelRegistry::load(&registry)?;
            let with_formation = !reg.self_energy.is_empty();
            let with_gap = !reg.gap_kernels.is_empty() || !reg.single_gap.is_empty();
            let mut rows = Vec::with_capacity(list.len());
            for (i, s) in list.iter().enumerate() {
                let f = if with_formation {
                    Some(predict_formation_per_site(s, &reg).with_context(|| format!("structure {i}"))?)
                } else {
                    None
                };
                let g = if with_gap {
                    Some(predict_gap(s, &reg).with_context(|| format!("structure {i}"))?)
                } else {
                    None
                };
                rows.push((i, s.n_defects(), f, g));
            }
            write_atomic(&out, |w| {
                let mut csv = csv::Writer::from_writer(w);
                csv.write_record([
                    "index",
                    "n_defects",
                    "formation_per_site_eV",
                    "formation_extrapolated",
                    "gap_eV",
                    "gap_extrapolated",
                    "gap_single_defect",
                ])?;
                let opt = |v: Option<String>| v.unwrap_or_default();
                for (i, n, f, g) in &rows {
                    csv.write_record([
                        i.to_string(),
                        n.to_string(),
                        opt(f.map(|p| format!("{:?}", p.value))),
                        opt(f.map(|p| p.extrapolated.to_string())),
                        opt(g.map(|p| format!("{:?}", p.value))),
                        opt(g.map(|p| p.extrapolated.to_string())),
                        opt(g.map(|p| p.single_defect.to_string())),
                    ])?;
                }
                csv.flush()?;
                Ok(())
            })
        }
        Command::Evaluate {
            structures,
            registry,
            target,
            out,
        } => {
            let list = load_structures(&structures)?;
            let reg = KernelRegistry::load(&registry)?;
            let report = evaluate_registry(&list, &reg, target.into())?;
            write_json(&out, &report)?;
            let show = |v: Option<f64>| v.map_or("absent".to_string(), |m| format!("{m:.6} meV"));
            eprintln!(
                "{}: MAE low density ({} structures) {}, high density ({} structures) {}",
                report.target,
                report.n_low,
                show(report.mae_low_meV),
                report.n_high,
                show(report.mae_high_meV)
            );
            Ok(())
        }
        Command::PlotData {
            data,
            expression,
            consts,
            front,
            domain,
            grid,
            out,
        } => {
            let (text, values) = match (expression, front) {
                (Some(e), _) => (e, parse_consts(&consts)?),
                (None, Some(p)) => {
                    let rows = read_front(&p)?;
                    let best = rows
                        .into_iter()
                        .min_by(|a, b| a.mae.total_cmp(&b.mae))
                        .ok_or_else(|| Invalid(format!("{}: front is empty", p.display())))?;
                    (best.expression, best.const_values)
                }
                (None, None) => unreachable!("clap requires one of --expression/--front"),
            };
            let seq: PrefixSequence = text.parse()?;
            let tree = parse(&seq)?;
            let data = match data {
                Some(p) => Some(Dataset::load(&p)?),
                None => None,
            };
            let (lo, hi) = match (&domain, &data) {
                (Some(d), _) => *d,
                (None, Some(d)) if !d.is_empty() => {
                    let xs = d.column(0);
                    (
                        xs.iter().cloned().fold(f64::INFINITY, f64::min),
                        xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                    )
                }
                _ => DEFAULT_DOMAIN,
            };
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(Invalid(format!("bad plot domain [{lo}, {hi}]")).into());
            }
            let model = |x: f64| tree.evaluate(&[x], &values).ok();
            let cell = |v: Option<f64>| v.map(|y| format!("{y:?}")).unwrap_or_default();
            let n = grid as usize;
            write_atomic(&with_suffix(&out, "curve.csv"), |w| {
                writeln!(w, "x,y_model")?;
                for i in 0..n {
                    let x = if i + 1 == n {
                        hi
                    } else {
                        lo + (hi - lo) * i as f64 / (n - 1) as f64
                    };
                    writeln!(w, "{x:?},{}", cell(model(x)))?;
                }
                Ok(())
            })?;
            write_atomic(&with_suffix(&out, "points.csv"), |w| {
                writeln!(w, "x,y_data,y_model")?;
                if let Some(d) = &data {
                    for (row, y) in d.rows().zip(d.y()) {
                        writeln!(w, "{:?},{y:?},{}", row[0], cell(model(row[0])))?;
                    }
                }
                Ok(())
            })
        }
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> std::path::PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    s.into()
}

/// Trainer resumed from a checkpoint, so the KL warm-up is not repeated.
fn load_trainer(path: &Path, cfg: &RunConfig) -> anyhow::Result<Trainer> {
    let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let (model, epochs) = load_checkpoint(std::io::BufReader::new(f))?;
    if model.vocab().grammar() != &cfg.grammar {
        return Err(Invalid("checkpoint grammar differs from the configured grammar".into()).into());
    }
    Ok(Trainer::resume(model, cfg.train.clone(), epochs))
}
