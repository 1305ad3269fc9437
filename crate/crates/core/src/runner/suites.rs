//! One function per command. Each returns its data files in memory; the
//! caller writes them.

use std::fmt::Write as _;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::json;

use super::acceptance::{theorem_run, AcceptanceConfig, Battery, CRITERIA};
use super::{emit_svg, Artifact, Command, ExperimentConfig, Layer, Plot, SuiteOutput, TaskSeed};
use crate::error::{Error, Result};
use crate::lyapunov::{
    estimate_gamma_mc, extract_curve, gamma_complex_grid, gamma_profile, gamma_thouless, ids_empirical, LyapunovProfile,
};
use crate::model::{build_matrix, sample_potential, sample_realization, PotentialVector};
use crate::rng::derive_seed;
use crate::spectral::{
    classify_real_with, fit_decay_constant, full_spectrum, gap_capture, track_flow_with, FlowOptions, TheoremReport,
};
use crate::statistics::{
    gap_radius_check, holder_check, ks_exponential_values, ldp_empirics, min_spacing_exponent, radius_norm_ratio,
    rescaled_gaps, v_convergence, EnsembleConfig,
};
use crate::transfer::{band_structure, char_trace, char_trace_csv};

/// Repetitions behind the single `γ̂(E)` used to set `g` in stats-poisson.
const GAMMA_REPS: usize = 32;

pub(crate) fn execute(cfg: &ExperimentConfig) -> Result<SuiteOutput> {
    let start = Instant::now();
    let mut out = match cfg.command {
        Command::Spectrum => spectrum(cfg),
        Command::Flow => flow(cfg),
        Command::Bands => bands(cfg),
        Command::Lyapunov => lyapunov(cfg),
        Command::Curve => curve(cfg),
        Command::Theorem => theorem(cfg),
        Command::StatsPoisson => poisson(cfg),
        Command::StatsLdp => ldp(cfg),
        Command::StatsRadius => radius(cfg),
        Command::StatsGaps => gaps(cfg),
        Command::StatsVconv => vconv(cfg),
        Command::Figure1 => figure1(cfg),
        Command::Figure2 => figure2(cfg),
        Command::VerifyAll => verify_all(cfg),
    }?;
    out.timings.push((cfg.command.name().into(), start.elapsed().as_secs_f64()));
    Ok(out)
}

fn seed_task(cfg: &ExperimentConfig, task: &str) -> TaskSeed {
    TaskSeed::new(task, cfg.seed, 0)
}

fn profile_of(cfg: &ExperimentConfig, seed: u64) -> Result<LyapunovProfile> {
    gamma_profile(&cfg.potential, &cfg.energies.values(), cfg.n_steps, cfg.n_reps, seed)
}

fn spectrum(cfg: &ExperimentConfig) -> Result<SuiteOutput> {
    let v = sample_potential(&cfg.potential, cfg.n, cfg.seed)?;
    let s = full_spectrum(&build_matrix(&v, cfg.g)?)?;
    let cls = classify_real_with(&s.eigenvalues, cfg.thresholds.tau_re)?;
    let mut order: Vec<usize> = (0..s.n).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (s.eigenvalues[a], s.eigenvalues[b]);
        y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im))
    });
    let mut csv = String::from("k,re,im,is_real,residual\n");
    for (k, &i) in order.iter().enumerate() {
        let z = s.eigenvalues[i];
        let _ = writeln!(csv, "{k},{:e},{:e},{},{:e}", z.re, z.im, cls.is_real(i), s.residuals[i]);
    }
    let report = json!({
        "n": s.n, "g": cfg.g, "seed": cfg.seed, "potential": cfg.potential, "tau": cfg.thresholds.tau_re,
        "real": cls.real.len(), "conjugate_pairs": cls.pairs.len(), "unpaired": cls.unpaired.len(),
        "trace_error": s.trace_error(), "max_residual": s.max_residual(),
    });
    Ok(SuiteOutput {
        artifacts: vec![Artifact::json("spectrum.json", &report)?, Artifact::text("spectrum.csv", csv), potential_csv(&v)],
        tasks: vec![seed_task(cfg, "potential")],
        ..Default::default()
    })
}

fn potential_csv(v: &PotentialVector) -> Artifact {
    Artifact::text("potential.csv", v.to_csv())
}

fn flow_options(cfg: &ExperimentConfig) -> FlowOptions {
    FlowOptions { tau: cfg.thresholds.tau_re, ..FlowOptions::new(cfg.g_step) }
}

fn flow(cfg: &ExperimentConfig) -> Result<SuiteOutput> {
    let v = sample_potential(&cfg.potential, cfg.n, cfg.seed)?;
    let f = track_flow_with(&v, cfg.g_max, flow_options(cfg))?;
    let last = f.steps.last().ok_or_else(|| Error::InvalidArgument("empty flow".into()))?;
    let report = json!({
        "n": f.n, "seed": cfg.seed, "g_max": cfg.g_max, "options": f.options, "steps": f.steps.len(),
        "initial": f.initial, "collisions": f.collisions, "continuity": f.continuity_holds(),
        "real_at_end": last.real.iter().filter(|&&r| r).count(),
    });
    Ok(SuiteOutput {
        artifacts: vec![Artifact::json("flow.json", &report)?, Artifact::text("flow.csv", f.to_csv()), potential_csv(&v)],
        tasks: vec![seed_task(cfg, "potential")],
        ..Default::default()
    })
}

fn bands(cfg: &ExperimentConfig) -> Result<SuiteOutput> {
    let v = sample_potential(&cfg.potential, cfg.n, cfg.seed)?;
    let bs = band_structure(&v.values)?;
    let trace = char_trace(&v.values, cfg.g, &cfg.energies.values())?;
    let report = json!({
        "n": bs.n, "seed": cfg.seed, "interleaving": bs.interleaving_holds(),
        "closed_gaps": bs.closed.iter().filter(|&&c| c).count(), "structure": bs,
    });
    Ok(SuiteOutput {
        artifacts: vec![
            Artifact::json("bands.json", &report)?,
            Artifact::text("bands.csv", bs.to_csv()),
            Artifact::text("char_trace.csv", char_trace_csv(&trace)),
            potential_csv(&v),
        ],
        tasks: vec![seed_task(cfg, "potential")],
        ..Default::default()
    })
}

fn lyapunov(cfg: &ExperimentConfig) -> Result<SuiteOutput> {
    let profile = profile_of(cfg, cfg.seed)?;
    let dos_seed = derive_seed(cfg.seed, 1);
    let dos = ids_empirical(&cfg.potential, cfg.n, cfg.n_seeds, dos_seed)?;
    let mut csv = String::from("E,gamma,stderr,thouless,ids,density\n");
    let mut max_diff = 0.0f64;
    for (&e, est) in profile.grid.iter().zip(&profile.estimates) {
        let t = gamma_thouless(&dos, e).value;
        max_diff = max_diff.max((t - est.value).abs());
        let _ = writeln!(csv, "{e:e},{:e},{:e},{t:e},{:e},{:e}", est.value, est.stderr, dos.ids(e), dos.density(e));
    }
    let holder = holder_check(&profile).ok();
    let report = json!({
        "potential": cfg.potential, "n_steps": cfg.n_steps, "n_reps": cfg.n_reps, "dos_n": cfg.n, "dos_reps": cfg.n_seeds,
        "max_abs_mc_minus_thouless": max_diff, "max_stderr": profile.max_stderr(), "holder": holder,
    });
    Ok(SuiteOutput {
        artifacts: vec![Artifact::json("lyapunov.json", &report)?, Artifact::text("lyapunov.csv", csv)],
        tasks: vec![seed_task(cfg, "profile"), TaskSeed::new("density of states", dos_seed, 0)],
        ..Default::default()
    })
}

fn curve(cfg: &ExperimentConfig) -> Result<SuiteOutput> {
    let field = gamma_complex_grid(
        &cfg.potential,
        cfg.region,
        (cfg.resolution[0], cfg.resolution[1]),
        cfg.n_steps,
        cfg.n_reps,
        cfg.seed,
    )?;
    let c = extract_curve(&field, cfg.g);
    let report = json!({
        "level": c.level, "polylines": c.polylines.len(), "vertices": c.vertex_count(), "degenerate": c.degenerate,
        "field_range": field.range(), "max_stderr": field.max_stderr(), "region": cfg.region, "resolution": cfg.resolution,
    });
    Ok(SuiteOutput {
        artifacts: vec![
            Artifact::json("curve.json", &report)?,
            Artifact::text("field.csv", field.to_csv()),
            Artifact::text("curve.csv", c.to_csv()),
        ],
        tasks: vec![seed_task(cfg, "field")],
        ..Default::default()
    })
}

fn theorem(cfg: &ExperimentConfig) -> Result<SuiteOutput> {
    let profile_seed = derive_seed(cfg.seed, 5);
    let profile = profile_of(cfg, profile_seed)?;
    let (eps, step, tau) = (cfg.epsilon, cfg.g_step, cfg.thresholds.tau_re);
    let mut jobs: Vec<(usize, usize)> = (0..cfg.n_seeds).map(|k| (cfg.n, k)).collect();
    for &n in &cfg.sizes {
        let have = if n == cfg.n { cfg.n_seeds } else { 0 };
        jobs.extend((have..cfg.fit_seeds).map(|k| (n, k)));
    }
    let reports: Vec<TheoremReport> = jobs
        .par_iter()
        .map(|&(n, k)| theorem_run(&sample_realization(&cfg.potential, n, cfg.seed, k as u64)?, &profile, eps, step, tau))
        .collect::<Result<_>>()?;
    let main: Vec<&TheoremReport> = reports.iter().take(cfg.n_seeds).collect();
    let clean = main.iter().filter(|r| r.passed()).count();
    let fraction = clean as f64 / main.len() as f64;
    let samples: Vec<(usize, f64)> = jobs
        .iter()
        .zip(&reports)
        .filter(|((n, k), _)| cfg.sizes.contains(n) && *k < cfg.fit_seeds)
        .map(|(_, r)| (r.n, r.max_deviation))
        .collect();
    let fit = fit_decay_constant(&samples).ok();

    let capture: Vec<_> = (0..cfg.n_seeds)
        .flat_map(|k| cfg.capture_g.iter().map(move |&g| (k, g)))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(k, g)| {
            let r = gap_capture(&sample_realization(&cfg.potential, cfg.n, cfg.seed, k as u64)?, g, &profile, eps)?;
            Ok(json!({ "stream": k, "g": g, "checked": r.checked.len(), "failures": r.failures }))
        })
        .collect::<Result<_>>()?;
    let capture_failures: usize = capture.iter().filter_map(|r| r["failures"].as_array().map(Vec::len)).sum();

    let mut checks = String::from("stream,label,lambda0,threshold,checked,g_reached,max_deviation,all_real\n");
    let mut violations = String::from("stream,label,g,re,im,threshold,margin\n");
    for (k, r) in main.iter().enumerate() {
        for c in &r.checks {
            let _ = writeln!(
                checks,
                "{k},{},{:e},{:e},{},{:e},{:e},{}",
                c.label, c.lambda0, c.threshold, c.checked, c.g_reached, c.max_deviation, c.all_real
            );
        }
        for v in &r.violations {
            let _ = writeln!(violations, "{k},{},{:e},{:e},{:e},{:e},{:e}", v.label, v.g, v.lambda.re, v.lambda.im, v.threshold, v.margin);
        }
    }
    let c_hat = fit.as_ref().map_or(f64::NAN, |f| f.c);
    let passed = fraction >= cfg.thresholds.seed_pass_fraction && c_hat > 0.0 && capture_failures == 0;
    let seeds: Vec<_> = main
        .iter()
        .enumerate()
        .map(|(k, r)| json!({ "stream": k, "violations": r.violations.len(), "checks": r.n_checks, "max_deviation": r.max_deviation, "g_max": r.g_max }))
        .collect();
    let report = json!({
        "n": cfg.n, "seed": cfg.seed, "epsilon": eps, "g_step": step, "thresholds": cfg.thresholds,
        "clean_seeds": clean, "fraction": fraction, "seeds": seeds, "fit": fit, "fit_samples": samples,
        "gap_capture": capture, "gap_capture_failures": capture_failures, "passed": passed,
    });
    let mut tasks = vec![TaskSeed::new("profile", profile_seed, 0)];
    tasks.extend(jobs.iter().map(|&(n, k)| TaskSeed::new(format!("flow N={n}"), cfg.seed, k as u64)));
    Ok(SuiteOutput {
        artifacts: vec![
            Artifact::json("theorem.json", &report)?,
            Artifact::text("theorem_checks.csv", checks),
            Artifact::text("theorem_violations.csv", violations),
            Artifact::text("profile.csv", profile.to_csv()),
        ],
        tasks,
        passed: Some(passed),
        ..Default::default()
    })
}

fn poisson(cfg: &ExperimentConfig) -> Result<SuiteOutput> {
    let dos_seed = derive_seed(cfg.seed, 1);
    let dos = ids_empirical(&cfg.potential, cfg.n, cfg.n_reps, dos_seed)?;
    let e = if cfg.auto_energy {
        dos.peak(&cfg.energies.values()).ok_or_else(|| Error::InvalidArgument("empty energy grid".into()))?
    } else {
        cfg.energy
    };
    let gamma_seed = derive_seed(cfg.seed, 2);
    let gamma = estimate_gamma_mc(&cfg.potential, Complex64::new(e, 0.0), cfg.n_steps, GAMMA_REPS, gamma_seed)?;
    let ens_seed = derive_seed(cfg.seed, 3);
    let mut csv = String::from("g,spacing\n");
    let mut rows = Vec::new();
    let mut passed = true;
    for g in [0.0, gamma.value / 2.0] {
        let ens = EnsembleConfig { spec: cfg.potential.clone(), n: cfg.n, n_seeds: cfg.n_seeds, base_seed: ens_seed, g };
        let sample = rescaled_gaps(&ens, e, &dos, cfg.window)?;
        let mut ks = ks_exponential_values(&sample.spacings)?;
        ks.critical = cfg.thresholds.ks_coefficient / (ks.count as f64).sqrt();
        ks.passed = ks.statistic < ks.critical;
        passed &= ks.passed;
        for s in &sample.spacings {
            let _ = writeln!(csv, "{g:e},{s:e}");
        }
        rows.push(json!({ "g": g, "ks": ks, "mean_spacing": sample.mean(), "eigenvalues": sample.eigenvalues, "scale": sample.scale }));
    }
    let report = json!({
        "E": e, "density": dos.density(e), "gamma": gamma, "n": cfg.n, "seeds": cfg.n_seeds, "window": cfg.window,
        "ks_coefficient": cfg.thresholds.ks_coefficient, "rows": rows, "passed": passed,
    });
    Ok(SuiteOutput {
        artifacts: vec![Artifact::json("poisson.json", &report)?, Artifact::text("spacings.csv", csv)],
        tasks: vec![
            TaskSeed::new("density of states", dos_seed, 0),
            TaskSeed::new("gamma", gamma_seed, 0),
            TaskSeed::new("ensemble", ens_seed, 0),
        ],
        passed: Some(passed),
        ..Default::default()
    })
}

fn ldp(cfg: &ExperimentConfig) -> Result<SuiteOutput> {
    let r = ldp_empirics(&cfg.potential, cfg.energy, &cfg.sizes, cfg.epsilon, cfg.n_reps, cfg.seed)?;
    let mut csv = String::from("n,exceed,n_reps,p_hat\n");
    for row in &r.rows {
        let _ = writeln!(csv, "{},{},{},{:e}", row.n, row.exceed, row.n_reps, row.p_hat);
    }
    Ok(SuiteOutput {
        artifacts: vec![Artifact::json("ldp.json", &r)?, Artifact::text("ldp.csv", csv)],
        tasks: vec![seed_task(cfg, "products")],
        passed: Some(r.passed),
        ..Default::default()
    })
}

fn radius(cfg: &ExperimentConfig) -> Result<SuiteOutput> {
    let r = radius_norm_ratio(&cfg.potential, cfg.energy, cfg.n, cfg.n_reps, &cfg.deltas, cfg.seed)?;
    let mut cdf = String::from("delta,cdf\n");
    for &(d, p) in &r.cdf {
        let _ = writeln!(cdf, "{d:e},{p:e}");
    }
    let mut samples = String::from("log_ratio\n");
    for x in &r.log_ratios {
        let _ = writeln!(samples, "{x:e}");
    }
    let mut report = serde_json::to_value(&r)?;
    if let Some(m) = report.as_object_mut() {
        m.remove("log_ratios");
    }
    Ok(SuiteOutput {
        artifacts: vec![
            Artifact::json("radius.json", &report)?,
            Artifact::text("cdf.csv", cdf),
            Artifact::text("samples.csv", samples),
        ],
        tasks: vec![seed_task(cfg, "products")],
        passed: Some(r.passed),
        ..Default::default()
    })
}

fn gaps(cfg: &ExperimentConfig) -> Result<SuiteOutput> {
    let profile_seed = derive_seed(cfg.seed, 5);
    let profile = profile_of(cfg, profile_seed)?;
    let reports: Vec<_> = (0..cfg.n_seeds)
        .into_par_iter()
        .map(|k| gap_radius_check(&sample_realization(&cfg.potential, cfg.n, cfg.seed, k as u64)?, &profile, cfg.epsilon, cfg.c_edge))
        .collect::<Result<_>>()?;
    let mut csv = String::from("stream,gap,left,right,max_rate,bound,left_window_rate,right_window_rate,passed,edge_passed\n");
    for (k, r) in reports.iter().enumerate() {
        for x in &r.rows {
            let _ = writeln!(
                csv,
                "{k},{},{:e},{:e},{:e},{:e},{:e},{:e},{},{}",
                x.gap, x.left, x.right, x.max_rate, x.bound, x.left_window_rate, x.right_window_rate, x.passed, x.edge_passed
            );
        }
    }
    let spacing_seed = derive_seed(cfg.seed, 6);
    let spacing = min_spacing_exponent(&cfg.potential, &cfg.sizes, cfg.n_seeds, spacing_seed)?;
    let mut spacing_csv = String::from("n,seed,min_gap,duplicates\n");
    for r in &spacing.rows {
        let _ = writeln!(spacing_csv, "{},{},{:e},{}", r.n, r.seed, r.min_gap, r.duplicates);
    }
    let holder = holder_check(&profile).ok();
    let m = reports.len() as f64;
    let main = reports.iter().filter(|r| r.passed).count();
    let edge = reports.iter().filter(|r| r.edge_passed).count();
    let need = cfg.thresholds.seed_pass_fraction;
    let passed = main as f64 / m >= need && edge as f64 / m >= need;
    let report = json!({
        "n": cfg.n, "epsilon": cfg.epsilon, "c_edge": cfg.c_edge, "seeds_passed": main, "seeds_edge_passed": edge,
        "seeds": reports.len(), "required_fraction": need,
        "min_spacing": { "k_hat": spacing.k_hat, "all_positive": spacing.all_positive, "degenerate": spacing.degenerate },
        "holder": holder, "passed": passed,
    });
    Ok(SuiteOutput {
        artifacts: vec![
            Artifact::json("gaps.json", &report)?,
            Artifact::text("gap_radius.csv", csv),
            Artifact::text("min_spacing.csv", spacing_csv),
            Artifact::text("profile.csv", profile.to_csv()),
        ],
        tasks: vec![
            TaskSeed::new("profile", profile_seed, 0),
            seed_task(cfg, "realizations"),
            TaskSeed::new("min spacing", spacing_seed, 0),
        ],
        passed: Some(passed),
        ..Default::default()
    })
}

fn vconv(cfg: &ExperimentConfig) -> Result<SuiteOutput> {
    let r = v_convergence(&cfg.potential, cfg.energy, &cfg.sizes, cfg.n_reps, cfg.seed)?;
    let mut csv = String::from("n,mean,stderr\n");
    for row in &r.rows {
        let _ = writeln!(csv, "{},{:e},{:e}", row.n, row.mean, row.stderr);
    }
    Ok(SuiteOutput {
        artifacts: vec![Artifact::json("vconv.json", &r)?, Artifact::text("vconv.csv", csv)],
        tasks: vec![seed_task(cfg, "products")],
        passed: Some(r.passed),
        ..Default::default()
    })
}

fn figure1(cfg: &ExperimentConfig) -> Result<SuiteOutput> {
    let v = sample_potential(&cfg.potential, cfg.n, cfg.seed)?;
    let s = full_spectrum(&build_matrix(&v, cfg.g)?)?;
    let cls = classify_real_with(&s.eigenvalues, cfg.thresholds.tau_re)?;
    let field_seed = derive_seed(cfg.seed, 1);
    let field = gamma_complex_grid(
        &cfg.potential,
        cfg.region,
        (cfg.resolution[0], cfg.resolution[1]),
        cfg.n_steps,
        cfg.n_reps,
        field_seed,
    )?;
    let c = extract_curve(&field, cfg.g);

    let mut order: Vec<usize> = (0..s.n).collect();
    order.sort_by(|&a, &b| s.eigenvalues[a].re.total_cmp(&s.eigenvalues[b].re).then(s.eigenvalues[a].im.total_cmp(&s.eigenvalues[b].im)));
    let mut csv = String::from("re,im,is_real\n");
    let (mut real, mut complex) = (Vec::new(), Vec::new());
    for &i in &order {
        let z = s.eigenvalues[i];
        let r = cls.is_real(i);
        let _ = writeln!(csv, "{:e},{:e},{r}", z.re, z.im);
        if r {
            real.push((z.re, z.im));
        } else {
            complex.push((z.re, z.im));
        }
    }
    let pieces: Vec<Vec<(f64, f64)>> = c.polylines.iter().map(|p| p.iter().map(|z| (z.re, z.im)).collect()).collect();
    let mut plot = Plot::new(&format!("Spectrum of H_{}({}) and the curve gamma = g", cfg.n, cfg.g), "Re z", "Im z")
        .with_layer(Layer::scatter("real", real, "black"))
        .with_layer(Layer::scatter("complex", complex, "blue"))
        .with_layer(Layer::polyline("curve", pieces, "red"));
    plot.x_range = Some((cfg.region.re_lo, cfg.region.re_hi));
    plot.y_range = Some((cfg.region.im_lo, cfg.region.im_hi));
    let report = json!({
        "n": cfg.n, "g": cfg.g, "seed": cfg.seed, "potential": cfg.potential, "real": cls.real.len(),
        "complex": s.n - cls.real.len(), "curve_vertices": c.vertex_count(), "curve_degenerate": c.degenerate,
        "max_curve_distance": order.iter().filter(|&&i| !cls.is_real(i)).map(|&i| c.distance(s.eigenvalues[i])).fold(0.0, f64::max),
    });
    Ok(SuiteOutput {
        artifacts: vec![
            Artifact::text("figure1.svg", emit_svg(&plot)?),
            Artifact::text("figure1_spectrum.csv", csv),
            Artifact::text("figure1_curve.csv", c.to_csv()),
            Artifact::json("figure1.json", &report)?,
            potential_csv(&v),
        ],
        tasks: vec![seed_task(cfg, "potential"), TaskSeed::new("field", field_seed, 0)],
        ..Default::default()
    })
}

fn figure2(cfg: &ExperimentConfig) -> Result<SuiteOutput> {
    let v = sample_potential(&cfg.potential, cfg.n, cfg.seed)?;
    let f = track_flow_with(&v, cfg.g_max, flow_options(cfg))?;
    let profile_seed = derive_seed(cfg.seed, 1);
    let profile = profile_of(cfg, profile_seed)?;

    let mut csv = String::from("j,g,lambda\n");
    let mut pieces = Vec::new();
    for j in 0..f.n {
        let mut piece: Vec<(f64, f64)> = Vec::new();
        for s in &f.steps {
            if s.real[j] {
                let _ = writeln!(csv, "{j},{:e},{:e}", s.g, s.eigenvalues[j].re);
                piece.push((s.eigenvalues[j].re, s.g));
            } else if !piece.is_empty() {
                pieces.push(std::mem::take(&mut piece));
            }
        }
        if !piece.is_empty() {
            pieces.push(piece);
        }
    }
    let envelope: Vec<(f64, f64)> = profile.grid.iter().zip(&profile.estimates).map(|(&e, est)| (e, est.value)).collect();
    let mut plot = Plot::new(&format!("Real eigenvalues of H_{}(g) and the Lyapunov exponent", cfg.n), "lambda", "g")
        .with_layer(Layer::polyline("trajectories", pieces, "black"))
        .with_layer(Layer::polyline("gamma", vec![envelope], "red"));
    plot.x_range = Some((cfg.energies.lo, cfg.energies.hi));
    plot.y_range = Some((0.0, cfg.g_max.max(profile.max_value())));
    let report = json!({
        "n": f.n, "seed": cfg.seed, "g_max": cfg.g_max, "steps": f.steps.len(), "collisions": f.collisions.len(),
        "n_steps": cfg.n_steps, "n_reps": cfg.n_reps,
    });
    Ok(SuiteOutput {
        artifacts: vec![
            Artifact::text("figure2.svg", emit_svg(&plot)?),
            Artifact::text("figure2_trajectories.csv", csv),
            Artifact::text("figure2_envelope.csv", profile.to_csv()),
            Artifact::json("figure2.json", &report)?,
            potential_csv(&v),
        ],
        tasks: vec![seed_task(cfg, "potential"), TaskSeed::new("profile", profile_seed, 0)],
        ..Default::default()
    })
}

fn verify_all(cfg: &ExperimentConfig) -> Result<SuiteOutput> {
    let battery = Battery::new(AcceptanceConfig::for_scale(cfg.scale, cfg.seed), cfg.thresholds);
    let mut timings = Vec::new();
    let mut criteria = Vec::new();
    for id in 1..=CRITERIA {
        let t = Instant::now();
        criteria.push(battery.run(id));
        timings.push((format!("criterion {id:02}"), t.elapsed().as_secs_f64()));
    }
    let passed = criteria.iter().all(|c| c.passed);
    let report = super::AcceptanceReport { config: battery.config.clone(), thresholds: cfg.thresholds, criteria, passed };
    Ok(SuiteOutput {
        artifacts: report.artifacts()?,
        tasks: vec![seed_task(cfg, "battery")],
        passed: Some(passed),
        timings,
    })
}
