use std::collections::BTreeMap;

use rayon::prelude::*;

use super::report::{CalibrationRecord, Recorder, StudyOutput};
use super::ExperimentConfig;
use crate::data::{generate_dataset, split_by_time, Dataset};
use crate::distill::{
    fuse_soft_labels, fusion_serve_scores, inject_boost, score_dataset, self_distill_step, train_hard_only,
    train_scalarized_baseline, train_student, train_teachers, BoostRule, DistillConfig, SoftLabelSet, TeacherEnsemble,
    TrainConfig,
};
use crate::error::{Error, Result};
use crate::eval::{apply_serving_boost, exposure_for_order, rank_order_by_id, sxs_from_scores, EvalOptions};
use crate::model::Model;
use crate::util::mean;

/// Replicate-averaged headline numbers.
#[derive(Default)]
struct Summary(BTreeMap<String, Vec<f64>>);

impl Summary {
    fn push(&mut self, key: impl Into<String>, value: f64) {
        self.0.entry(key.into()).or_default().push(value);
    }

    fn write(self, rec: &mut Recorder) {
        for (k, v) in self.0 {
            rec.summary(&k, mean(v));
        }
    }
}

struct Split {
    full: Dataset,
    train: Dataset,
    test: Dataset,
}

fn split(config: &ExperimentConfig, r: usize) -> Result<Split> {
    let full = generate_dataset(&config.generator_for(r))?;
    let (train, test) = split_by_time(&full, config.test_boundary_day)?;
    if train.is_empty() || test.is_empty() {
        return Err(Error::config(format!(
            "test_boundary_day {} leaves an empty train or test split",
            config.test_boundary_day
        )));
    }
    Ok(Split { full, train, test })
}

fn eval_options(config: &ExperimentConfig) -> EvalOptions {
    EvalOptions {
        exposure_k: config.exposure_k,
        boost: None,
    }
}

fn objective_names(config: &ExperimentConfig) -> Vec<String> {
    config.generator.objective_specs().into_iter().map(|o| o.name).collect()
}

fn alpha_name(alpha: f64) -> String {
    format!("student_alpha_{alpha}")
}

/// Teachers on `data` with `teacher`, then raw-score fusion.
fn teachers_and_labels(
    config: &ExperimentConfig,
    data: &Dataset,
    teacher: &TrainConfig,
) -> Result<(TeacherEnsemble, SoftLabelSet)> {
    let ens = TeacherEnsemble::new(train_teachers(data, teacher)?, config.fusion_weights())?;
    let soft = fuse_soft_labels(&ens, data)?;
    Ok((ens, soft))
}

fn record_teachers(rec: &mut Recorder, names: &[String], ens: &TeacherEnsemble, r: usize, prefix: &str) -> Vec<String> {
    ens.models
        .iter()
        .zip(names)
        .map(|(t, n)| rec.model(&format!("{prefix}teacher_{n}"), r, t))
        .collect()
}

/// Teachers, serving-time fusion, the scalarized baseline, hard-only and distilled
/// students over an α sweep, all evaluated on the held-out days.
pub fn study_distill_vs_baselines(config: &ExperimentConfig) -> Result<StudyOutput> {
    config.validate()?;
    let mut rec = Recorder::new("distill_vs_baselines", config);
    let mut summary = Summary::default();
    let names = objective_names(config);
    let opts = eval_options(config);
    let mut alphas = config.alpha_sweep.clone();
    if !alphas.contains(&config.distill.alpha) {
        alphas.push(config.distill.alpha);
    }
    let student = alpha_name(config.distill.alpha);

    for r in 0..config.replicates {
        let s = split(config, r)?;
        rec.dataset("train", r, &s.train);
        let test_hash = rec.dataset("test", r, &s.test);
        let tcfg = config.teacher_for(r);
        let dcfg = config.distill_for(r);
        let (ens, soft) = teachers_and_labels(config, &s.train, &tcfg)?;
        let ((hard, scalar), students) = rayon::join(
            || {
                rayon::join(
                    || train_hard_only(&s.train, &dcfg.train),
                    || train_scalarized_baseline(&s.train, &config.scalarized_weights(), &dcfg.train),
                )
            },
            || {
                alphas
                    .par_iter()
                    .map(|&alpha| train_student(&s.train, &soft, &DistillConfig { alpha, ..dcfg.clone() }))
                    .collect::<Result<Vec<_>>>()
            },
        );
        let (hard, scalar, students) = (hard?, scalar?, students?);

        let teacher_hashes = record_teachers(&mut rec, &names, &ens, r, "");
        let mut teacher_exposure = Vec::new();
        for (k, (t, h)) in ens.models.iter().zip(&teacher_hashes).enumerate() {
            let m = rec.arm(
                &format!("teacher_{}", names[k]),
                r,
                vec![h.clone()],
                &s.test,
                &test_hash,
                &score_dataset(t, &s.test)?,
                &opts,
                &[],
            )?;
            teacher_exposure.push(m.objective_exposure[k]);
        }
        let fusion_scores = s
            .test
            .groups
            .par_iter()
            .map(|g| fusion_serve_scores(&ens, g))
            .collect::<Result<Vec<_>>>()?;
        let fusion = rec.arm(
            "fusion",
            r,
            teacher_hashes,
            &s.test,
            &test_hash,
            &fusion_scores,
            &opts,
            &[],
        )?;

        let arm_model = |rec: &mut Recorder, name: &str, m: &Model, settings: &[(&str, f64)]| {
            let h = rec.model(name, r, m);
            rec.arm(
                name,
                r,
                vec![h],
                &s.test,
                &test_hash,
                &score_dataset(m, &s.test)?,
                &opts,
                settings,
            )
        };
        let scalar_m = arm_model(&mut rec, "scalarized", &scalar, &[])?;
        let hard_m = arm_model(&mut rec, "hard_only", &hard, &[])?;
        let mut student_m = None;
        for (alpha, m) in alphas.iter().zip(&students) {
            let name = alpha_name(*alpha);
            let metrics = arm_model(&mut rec, &name, m, &[("alpha", *alpha)])?;
            summary.push(format!("{name}_ndcg_at_10"), metrics.ndcg_at_10);
            if name == student {
                student_m = Some(metrics);
            }
        }
        let student_m = student_m.expect("configured alpha is always trained");

        for (base, m) in [("fusion", &fusion), ("hard_only", &hard_m), ("scalarized", &scalar_m)] {
            let d = student_m.ndcg_at_10 - m.ndcg_at_10;
            rec.delta("ndcg_at_10", &student, base, r, d);
            summary.push(format!("{base}_ndcg_at_10"), m.ndcg_at_10);
            summary.push(format!("student_minus_{base}_ndcg_at_10"), d);
        }
        // distance of each model's secondary exposure from that objective's teacher
        for k in 1..names.len() {
            let Some(target) = teacher_exposure[k] else { continue };
            for (arm, m) in [("student", &student_m), ("hard_only", &hard_m), ("fusion", &fusion)] {
                if let Some(e) = m.objective_exposure[k] {
                    rec.delta(
                        &format!("exposure_{}", names[k]),
                        arm,
                        &format!("teacher_{}", names[k]),
                        r,
                        e - target,
                    );
                    summary.push(format!("{}_exposure_gap_{arm}", names[k]), (e - target).abs());
                }
            }
            summary.push(format!("{}_exposure_teacher", names[k]), target);
        }
    }
    summary.write(&mut rec);
    Ok(rec.finish())
}

fn distilled_on(config: &ExperimentConfig, data: &Dataset, r: usize) -> Result<(TeacherEnsemble, Model)> {
    let (ens, soft) = teachers_and_labels(config, data, &config.teacher_for(r))?;
    let student = train_student(data, &soft, &config.distill_for(r))?;
    Ok((ens, student))
}

/// V0 from teachers on the first window, then a chain of self-distilled students on
/// shifted windows, each compared with a student re-distilled from teachers on the
/// same window.
pub fn study_self_distillation(config: &ExperimentConfig) -> Result<StudyOutput> {
    config.validate()?;
    config.validate_self_distill()?;
    let sd = &config.self_distill;
    let depth = sd.chain_depth as usize;
    let mut rec = Recorder::new("self_distillation", config);
    let mut summary = Summary::default();
    let names = objective_names(config);
    let opts = eval_options(config);

    for r in 0..config.replicates {
        let s = split(config, r)?;
        let windows: Vec<Dataset> = (0..=sd.chain_depth)
            .map(|j| {
                let (a, b) = sd.window(j);
                let w = s.full.window(a, b);
                if w.is_empty() {
                    Err(Error::config(format!(
                        "self-distillation window {j} (days {a}..{b}) is empty"
                    )))
                } else {
                    Ok(w)
                }
            })
            .collect::<Result<_>>()?;
        for (j, w) in windows.iter().enumerate() {
            rec.dataset(&format!("window_{j}"), r, w);
        }
        let test_hash = rec.dataset("test", r, &s.test);
        let dcfg = config.distill_for(r);

        let (chain, retrained) = rayon::join(
            || -> Result<_> {
                let (ens, v0) = distilled_on(config, &windows[0], r)?;
                let mut chain = vec![v0];
                for w in &windows[1..] {
                    let next = self_distill_step(chain.last().unwrap(), w, &dcfg)?;
                    chain.push(next);
                }
                Ok((ens, chain))
            },
            || {
                windows[1..]
                    .par_iter()
                    .map(|w| distilled_on(config, w, r))
                    .collect::<Result<Vec<_>>>()
            },
        );
        let ((ens0, chain), retrained) = (chain?, retrained?);

        record_teachers(&mut rec, &names, &ens0, r, "w0_");
        let mut chain_m = Vec::new();
        for (j, v) in chain.iter().enumerate() {
            let name = format!("v{j}");
            let h = rec.model(&name, r, v);
            let m = rec.arm(
                &name,
                r,
                vec![h],
                &s.test,
                &test_hash,
                &score_dataset(v, &s.test)?,
                &opts,
                &[],
            )?;
            summary.push(format!("{name}_ndcg_at_10"), m.ndcg_at_10);
            chain_m.push(m);
        }
        for (j, (ens, v)) in retrained.iter().enumerate() {
            let j = j + 1;
            let name = format!("retrained_v0_w{j}");
            record_teachers(&mut rec, &names, ens, r, &format!("w{j}_"));
            let h = rec.model(&name, r, v);
            let m = rec.arm(
                &name,
                r,
                vec![h],
                &s.test,
                &test_hash,
                &score_dataset(v, &s.test)?,
                &opts,
                &[],
            )?;
            summary.push(format!("{name}_ndcg_at_10"), m.ndcg_at_10);
            let d = chain_m[j].ndcg_at_10 - m.ndcg_at_10;
            rec.delta("ndcg_at_10", &format!("v{j}"), &name, r, d);
            summary.push(format!("v{j}_minus_retrained_v0_ndcg_at_10"), d);
        }
        for j in 1..=depth {
            let d = chain_m[j].ndcg_at_10 - chain_m[0].ndcg_at_10;
            rec.delta("ndcg_at_10", &format!("v{j}"), "v0", r, d);
            summary.push(format!("v{j}_minus_v0_ndcg_at_10"), d);
        }
    }
    summary.write(&mut rec);
    Ok(rec.finish())
}

struct Family {
    change_rate: f64,
    pd: f64,
    tau: f64,
}

fn family_sxs(
    rec: &mut Recorder,
    prefix: &str,
    r: usize,
    test: &Dataset,
    scores: &[Vec<Vec<f64>>],
    config: &ExperimentConfig,
) -> Result<Family> {
    let pairs: Vec<(usize, usize)> = (0..scores.len())
        .flat_map(|i| ((i + 1)..scores.len()).map(move |j| (i, j)))
        .collect();
    let reports = pairs
        .par_iter()
        .map(|&(i, j)| sxs_from_scores(test, &scores[i], &scores[j], config.sxs.tau_threshold, config.sxs.depth))
        .collect::<Result<Vec<_>>>()?;
    let fam = Family {
        change_rate: mean(reports.iter().map(|x| x.change_rate)),
        pd: mean(reports.iter().map(|x| x.pd)),
        tau: mean(reports.iter().map(|x| x.mean_tau)),
    };
    for ((i, j), sxs) in pairs.into_iter().zip(reports) {
        rec.compare(&format!("{prefix}_seed{i}"), &format!("{prefix}_seed{j}"), r, sxs);
    }
    Ok(fam)
}

fn reduction_pct(base: f64, new: f64) -> f64 {
    if base == 0.0 {
        0.0
    } else {
        100.0 * (base - new) / base
    }
}

/// Two families of students that differ only in their seeds: hard-label-only and
/// distilled from one fixed set of soft labels. Reports within-family churn.
pub fn study_irreproducibility(config: &ExperimentConfig) -> Result<StudyOutput> {
    config.validate()?;
    config.validate_repro()?;
    let mut rec = Recorder::new("irreproducibility", config);
    let mut summary = Summary::default();
    let names = objective_names(config);
    let opts = eval_options(config);

    for r in 0..config.replicates {
        let s = split(config, r)?;
        rec.dataset("train", r, &s.train);
        let test_hash = rec.dataset("test", r, &s.test);
        let dcfg = config.distill_for(r);
        let (ens, soft) = teachers_and_labels(config, &s.train, &config.teacher_for(r))?;
        record_teachers(&mut rec, &names, &ens, r, "");
        let families = (0..config.num_seeds)
            .into_par_iter()
            .map(|i| {
                let seeded = dcfg.with_seed(dcfg.train.seed.wrapping_add(i as u64));
                let hard = train_hard_only(&s.train, &seeded.train)?;
                let distilled = train_student(&s.train, &soft, &seeded)?;
                Ok((hard, distilled))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut hard_scores = Vec::new();
        let mut distilled_scores = Vec::new();
        for (i, (hard, distilled)) in families.iter().enumerate() {
            for (prefix, m, out) in [
                ("hard_only", hard, &mut hard_scores),
                ("distilled", distilled, &mut distilled_scores),
            ] {
                let name = format!("{prefix}_seed{i}");
                let h = rec.model(&name, r, m);
                let scores = score_dataset(m, &s.test)?;
                let metrics = rec.arm(
                    &name,
                    r,
                    vec![h],
                    &s.test,
                    &test_hash,
                    &scores,
                    &opts,
                    &[("seed", i as f64)],
                )?;
                summary.push(format!("{prefix}_ndcg_at_10"), metrics.ndcg_at_10);
                out.push(scores);
            }
        }
        let hard = family_sxs(&mut rec, "hard_only", r, &s.test, &hard_scores, config)?;
        let distilled = family_sxs(&mut rec, "distilled", r, &s.test, &distilled_scores, config)?;
        rec.delta(
            "change_rate",
            "distilled",
            "hard_only",
            r,
            distilled.change_rate - hard.change_rate,
        );
        rec.delta("pd", "distilled", "hard_only", r, distilled.pd - hard.pd);
        for (prefix, f) in [("hard_only", &hard), ("distilled", &distilled)] {
            summary.push(format!("{prefix}_change_rate"), f.change_rate);
            summary.push(format!("{prefix}_pd"), f.pd);
            summary.push(format!("{prefix}_mean_tau"), f.tau);
        }
        summary.push(
            "change_rate_reduction_pct",
            reduction_pct(hard.change_rate, distilled.change_rate),
        );
        summary.push("pd_reduction_pct", reduction_pct(hard.pd, distilled.pd));
    }
    summary.write(&mut rec);
    Ok(rec.finish())
}

struct Calibrated {
    value: f64,
    exposure: f64,
    history: Vec<(f64, f64)>,
}

/// Finds `x >= 0` with `|exposure(x) − target| <= tolerance` for an exposure that is
/// non-decreasing in `x`: bracket by doubling from `initial`, then bisect.
/// Errors if a probe contradicts monotonicity or the budget runs out.
fn calibrate(
    mut exposure: impl FnMut(f64) -> Result<f64>,
    target: f64,
    tolerance: f64,
    initial: f64,
    max_iterations: usize,
) -> Result<Calibrated> {
    let mut history: Vec<(f64, f64)> = Vec::new();
    let mut probe = |x: f64, history: &mut Vec<(f64, f64)>| -> Result<f64> {
        if history.len() >= max_iterations {
            let reached = history
                .iter()
                .map(|h| h.1)
                .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
                .unwrap_or(f64::NAN);
            return Err(Error::Calibration {
                iterations: history.len(),
                target,
                reached,
            });
        }
        let e = exposure(x)?;
        if let Some(&(px, pe)) = history
            .iter()
            .find(|&&(px, pe)| (px < x && pe > e) || (px > x && pe < e))
        {
            return Err(Error::Internal(format!(
                "boosted exposure is not monotone: {pe} at {px} but {e} at {x}"
            )));
        }
        history.push((x, e));
        Ok(e)
    };
    let done = |value: f64, exposure: f64, history: Vec<(f64, f64)>| Calibrated {
        value,
        exposure,
        history,
    };

    let e0 = probe(0.0, &mut history)?;
    if (e0 - target).abs() <= tolerance {
        return Ok(done(0.0, e0, history));
    }
    if e0 > target {
        return Err(Error::Calibration {
            iterations: 1,
            target,
            reached: e0,
        });
    }
    let mut lo = 0.0;
    let mut hi = initial;
    loop {
        let e = probe(hi, &mut history)?;
        if (e - target).abs() <= tolerance {
            return Ok(done(hi, e, history));
        }
        if e > target {
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    loop {
        let mid = 0.5 * (lo + hi);
        let e = probe(mid, &mut history)?;
        if (e - target).abs() <= tolerance {
            return Ok(done(mid, e, history));
        }
        if e < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

fn boosted_exposure(test: &Dataset, scores: &[Vec<f64>], flags: &[Vec<bool>], k: usize) -> f64 {
    mean(
        test.groups
            .iter()
            .zip(scores)
            .zip(flags)
            .map(|((g, s), f)| exposure_for_order(&rank_order_by_id(s, &g.item_ids()), f, k)),
    )
}

/// Both boost arms of the ad-hoc study at fixed `beta` (soft labels) and `gamma` (serving).
pub struct BoostArms {
    pub baseline: Model,
    pub soft_boosted: Model,
    pub baseline_scores: Vec<Vec<f64>>,
    pub soft_scores: Vec<Vec<f64>>,
    pub serving_scores: Vec<Vec<f64>>,
}

fn soft_boost_student(train: &Dataset, soft: &SoftLabelSet, rule: BoostRule, dcfg: &DistillConfig) -> Result<Model> {
    train_student(train, &inject_boost(soft, &rule, train)?, dcfg)
}

/// Trains the unboosted student and the β-boosted student, and applies γ at serving
/// time, for replicate `r` of `config`. Used by the study and its degenerate checks.
pub fn boost_arms(config: &ExperimentConfig, r: usize, beta: f64, gamma: f64) -> Result<BoostArms> {
    config.validate()?;
    let s = split(config, r)?;
    let dcfg = config.distill_for(r);
    let (_, soft) = teachers_and_labels(config, &s.train, &config.teacher_for(r))?;
    let pred = config.boost.predicate.clone();
    let (baseline, soft_boosted) = rayon::join(
        || train_student(&s.train, &soft, &dcfg),
        || {
            soft_boost_student(
                &s.train,
                &soft,
                BoostRule {
                    predicate: pred.clone(),
                    beta,
                },
                &dcfg,
            )
        },
    );
    let (baseline, soft_boosted) = (baseline?, soft_boosted?);
    let baseline_scores = score_dataset(&baseline, &s.test)?;
    let soft_scores = score_dataset(&soft_boosted, &s.test)?;
    let serving_scores = s
        .test
        .groups
        .iter()
        .zip(&baseline_scores)
        .map(|(g, sc)| apply_serving_boost(sc, g, &pred, gamma))
        .collect();
    Ok(BoostArms {
        baseline,
        soft_boosted,
        baseline_scores,
        soft_scores,
        serving_scores,
    })
}

/// Raises the exposure of boosted items by `target_lift` two ways: β on the soft
/// labels (retraining the student) and γ on the served scores. β is calibrated first;
/// γ is then calibrated to the exposure the β arm reached.
pub fn study_adhoc_boost(config: &ExperimentConfig) -> Result<StudyOutput> {
    config.validate()?;
    let b = &config.boost;
    let mut rec = Recorder::new("adhoc_boost", config);
    let mut summary = Summary::default();
    let names = objective_names(config);
    let opts = EvalOptions {
        exposure_k: b.exposure_k,
        boost: Some(b.predicate.clone()),
    };

    for r in 0..config.replicates {
        let s = split(config, r)?;
        rec.dataset("train", r, &s.train);
        let test_hash = rec.dataset("test", r, &s.test);
        let dcfg = config.distill_for(r);
        let (ens, soft) = teachers_and_labels(config, &s.train, &config.teacher_for(r))?;
        record_teachers(&mut rec, &names, &ens, r, "");
        let flags: Vec<Vec<bool>> = s.test.groups.iter().map(|g| b.predicate.flags(g)).collect();

        let baseline = train_student(&s.train, &soft, &dcfg)?;
        let base_scores = score_dataset(&baseline, &s.test)?;
        let base_exposure = boosted_exposure(&s.test, &base_scores, &flags, b.exposure_k);
        let target = (base_exposure + b.target_lift).min(1.0);

        let mut students: Vec<(f64, Model, Vec<Vec<f64>>)> = Vec::new();
        let beta_cal = calibrate(
            |beta| {
                let (model, scores) = if beta == 0.0 {
                    (baseline.clone(), base_scores.clone())
                } else {
                    let rule = BoostRule {
                        predicate: b.predicate.clone(),
                        beta,
                    };
                    let m = soft_boost_student(&s.train, &soft, rule, &dcfg)?;
                    let sc = score_dataset(&m, &s.test)?;
                    (m, sc)
                };
                let e = boosted_exposure(&s.test, &scores, &flags, b.exposure_k);
                students.push((beta, model, scores));
                Ok(e)
            },
            target,
            b.tolerance,
            b.initial_bracket,
            b.max_iterations,
        )?;
        let (beta, soft_model, soft_scores) = students
            .into_iter()
            .find(|(x, _, _)| *x == beta_cal.value)
            .expect("calibrated beta was evaluated");

        let serve = |gamma: f64| -> Vec<Vec<f64>> {
            s.test
                .groups
                .iter()
                .zip(&base_scores)
                .map(|(g, sc)| apply_serving_boost(sc, g, &b.predicate, gamma))
                .collect()
        };
        let gamma_cal = calibrate(
            |gamma| Ok(boosted_exposure(&s.test, &serve(gamma), &flags, b.exposure_k)),
            beta_cal.exposure,
            b.tolerance,
            b.initial_bracket,
            b.max_iterations,
        )?;
        let gamma = gamma_cal.value;

        let base_h = rec.model("baseline", r, &baseline);
        let base_m = rec.arm(
            "baseline",
            r,
            vec![base_h.clone()],
            &s.test,
            &test_hash,
            &base_scores,
            &opts,
            &[],
        )?;
        let soft_h = rec.model("soft_boost", r, &soft_model);
        let soft_m = rec.arm(
            "soft_boost",
            r,
            vec![soft_h],
            &s.test,
            &test_hash,
            &soft_scores,
            &opts,
            &[("beta", beta)],
        )?;
        let serve_m = rec.arm(
            "serving_boost",
            r,
            vec![base_h],
            &s.test,
            &test_hash,
            &serve(gamma),
            &opts,
            &[("gamma", gamma)],
        )?;

        for (arm, param, cal, tgt) in [
            ("soft_boost", "beta", &beta_cal, target),
            ("serving_boost", "gamma", &gamma_cal, beta_cal.exposure),
        ] {
            rec.calibration(CalibrationRecord {
                arm: arm.into(),
                parameter: param.into(),
                replicate: r,
                target: tgt,
                tolerance: b.tolerance,
                value: cal.value,
                exposure: cal.exposure,
                iterations: cal.history.len(),
                history: cal.history.clone(),
            });
        }
        let soft_loss = base_m.ndcg_at_10 - soft_m.ndcg_at_10;
        let serve_loss = base_m.ndcg_at_10 - serve_m.ndcg_at_10;
        rec.delta("ndcg_at_10", "soft_boost", "baseline", r, -soft_loss);
        rec.delta("ndcg_at_10", "serving_boost", "baseline", r, -serve_loss);
        summary.push("baseline_boosted_exposure", base_exposure);
        summary.push("soft_boost_exposure", beta_cal.exposure);
        summary.push("serving_boost_exposure", gamma_cal.exposure);
        summary.push("exposure_mismatch", (beta_cal.exposure - gamma_cal.exposure).abs());
        summary.push("beta", beta);
        summary.push("gamma", gamma);
        summary.push("soft_boost_ndcg_loss", soft_loss);
        summary.push("serving_boost_ndcg_loss", serve_loss);
    }
    summary.write(&mut rec);
    Ok(rec.finish())
}
