//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line:
//!
//!     cargo test --release -p quanto-cli --test acceptance

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use quanto_core::diagnostics::{hpdi, nse, summarize};
use quanto_core::inference::{
    conjugate_sample, mle_estimate, mwg_sample, CandidateFamily, Chain, NiwHyperparams, PosteriorKernel,
    ProposalSet, ProposalTuning,
};
use quanto_core::model::{MarketConfig, Parameter, PayoffKind, ReturnPanel, SpotState, Theta};
use quanto_core::model::simulate_return_pair;
use quanto_core::pricing::{bs_call, closed_form_v3, implied_vol, price_predictive, PricingMode, PricingRequest};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);
type Entry = (usize, usize, fn(&Theta) -> f64);

fn market() -> MarketConfig {
    MarketConfig::new(0.0002, 0.00008, 1.3, 252).unwrap()
}

fn spot() -> SpotState {
    SpotState::new(2700.0, 1.14).unwrap()
}

fn request(kind: PayoffKind, strike: f64, horizon: u32, n_paths: usize, seed: u64) -> PricingRequest {
    PricingRequest {
        kind,
        strike,
        horizon,
        spot: spot(),
        market: market(),
        n_paths,
        paths_per_draw: 1000,
        seed,
        mode: PricingMode::Static,
    }
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// Returns of the physical model at known parameters.
fn synthetic_panel(theta: &Theta, mu: (f64, f64), t: usize, seed: u64) -> ReturnPanel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut x, mut h) = (Vec::with_capacity(t), Vec::with_capacity(t));
    let tail = (1.0 - theta.rho() * theta.rho()).sqrt();
    for _ in 0..t {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        x.push(mu.0 - 0.5 * theta.sigma_x().powi(2) + theta.sigma_x() * z1);
        h.push(mu.1 - 0.5 * theta.sigma_h().powi(2) + theta.sigma_h() * (theta.rho() * z1 + tail * z2));
    }
    ReturnPanel::new(x, h).unwrap()
}

fn within(value: f64, target: f64, se: f64, k: f64) -> bool {
    (value - target).abs() <= k * se
}

fn c1_analytic_oracle() -> Outcome {
    let theta = Theta::new(0.006, 0.004, -0.03).unwrap();
    let strike = 2700.0;
    let start = Instant::now();
    let r = price_predictive(&request(PayoffKind::FixedRate, strike, 51, 1_000_000, 1), &Chain::single(theta))
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    let exact = closed_form_v3(&theta, &spot(), strike, 51, &market()).map_err(|e| e.to_string())?;
    let z = (r.price - exact) / r.mc_std_error;
    let msg = format!("mc {:.6} vs closed form {exact:.6}, z = {z:.2}, {elapsed:.2} s", r.price);
    if z.abs() <= 4.0 && elapsed < 10.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c2_martingale() -> Outcome {
    // simulated directly from the return generator, independent of the pricer
    let theta = Theta::new(0.02, 0.015, 0.5).unwrap();
    let m = market();
    let (x0, h0) = (spot().x0(), spot().h0());
    let steps = 51;
    let n = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let disc = (-m.r_d() * steps as f64).exp();
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n {
        let (mut lx, mut lh) = (0.0, 0.0);
        for _ in 0..steps {
            let (x, h) = simulate_return_pair(&theta, &m, &mut rng);
            lx += x;
            lh += h;
        }
        let v = disc * x0 * h0 * (lx + lh).exp();
        sum += v;
        sum_sq += v * v;
    }
    let mean = sum / n as f64;
    let se = ((sum_sq / n as f64 - mean * mean) / (n as f64 - 1.0)).sqrt();
    let z = (mean - x0 * h0) / se;
    let msg = format!("E[e^(-r_d s) H X] = {mean:.4} vs {:.4}, z = {z:.2}", x0 * h0);
    if z.abs() <= 4.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c3_zero_strike() -> Outcome {
    let theta = Theta::new(0.006, 0.004, -0.03).unwrap();
    let chain = Chain::single(theta);
    let target = spot().x0() * spot().h0();
    let mut parts = Vec::new();
    let mut ok = true;
    for (i, kind) in [PayoffKind::DomesticStrike, PayoffKind::FloatingRate, PayoffKind::StockLinkedFx].into_iter().enumerate() {
        let r = price_predictive(&request(kind, 0.0, 51, 200_000, 10 + i as u64), &chain).map_err(|e| e.to_string())?;
        let z = (r.price - target) / r.mc_std_error;
        ok &= z.abs() <= 4.0;
        parts.push(format!("{kind:?} z = {z:.2}"));
    }
    let msg = parts.join(", ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c4_posterior_recovery() -> Outcome {
    let truth = Theta::new(0.006, 0.004, -0.03).unwrap();
    let (t, k, k0, reps) = (2000, 50_000, 10_000, 20u64);
    let tuning = ProposalTuning::default();
    let mut parts = Vec::new();
    let mut ok = true;
    for family in [CandidateFamily::Ttn, CandidateFamily::Tnn, CandidateFamily::Ign] {
        let (mut covered, mut converged) = (0, 0);
        for rep in 0..reps {
            let panel = synthetic_panel(&truth, (0.0003, 0.0001), t, 1000 + rep);
            let mle = mle_estimate(&panel).map_err(|e| e.to_string())?;
            let hat = mle.theta_hat;
            let proposals = ProposalSet::anchored(family, hat.sigma_x(), hat.sigma_h(), t, &tuning)
                .map_err(|e| e.to_string())?;
            let chain = mwg_sample(&panel, &proposals, k, k0, hat, 5000 + rep).map_err(|e| e.to_string())?;
            let mut all_cover = true;
            let mut all_cd = true;
            for p in [Parameter::SigmaX, Parameter::SigmaH, Parameter::Rho] {
                let s = summarize(&chain, p).map_err(|e| e.to_string())?;
                all_cover &= within(s.mean, truth.get(p), s.std_dev, 3.0);
                all_cd &= s.cd.is_some_and(|cd| cd.abs() < 1.96);
            }
            covered += usize::from(all_cover);
            converged += usize::from(all_cd);
        }
        ok &= covered == reps as usize && converged * 10 >= reps as usize * 9;
        parts.push(format!("{family:?}: means {covered}/{reps}, |CD| {converged}/{reps}"));
    }
    let msg = parts.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c5_kernel_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for pair in 0..100 {
        let theta = Theta::new(
            rng.random_range(0.002..0.03),
            rng.random_range(0.002..0.03),
            rng.random_range(-0.9..0.9),
        )
        .unwrap();
        let t = rng.random_range(20..2000);
        let kernel = PosteriorKernel::new(*synthetic_panel(&theta, (0.0, 0.0), t, 700 + pair).stats());
        let (sx, sh, rho) = (theta.sigma_x(), theta.sigma_h(), theta.rho());
        let (sx2, sh2, rho2) = (sx * rng.random_range(0.8..1.25), sh * rng.random_range(0.8..1.25), rng.random_range(-0.9..0.9));
        let dj = kernel.log_joint(sx2, sh, rho) - kernel.log_joint(sx, sh, rho);
        let dc = kernel.log_cond_sigma_x(sx2, sh, rho) - kernel.log_cond_sigma_x(sx, sh, rho);
        worst = worst.max((dj - dc).abs());
        let dj = kernel.log_joint(sx, sh2, rho) - kernel.log_joint(sx, sh, rho);
        let dc = kernel.log_cond_sigma_h(sh2, sx, rho) - kernel.log_cond_sigma_h(sh, sx, rho);
        worst = worst.max((dj - dc).abs());
        let dj = kernel.log_joint(sx, sh, rho2) - kernel.log_joint(sx, sh, rho);
        let dc = kernel.log_cond_rho(rho2, sx, sh) - kernel.log_cond_rho(rho, sx, sh);
        worst = worst.max((dj - dc).abs());
    }
    let msg = format!("max |Δconditional − Δjoint| = {worst:.3e}");
    if worst <= 1e-10 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c6_conjugate_moments() -> Outcome {
    let truth = Theta::new(0.01, 0.005, 0.3).unwrap();
    let panel = synthetic_panel(&truth, (0.0, 0.0), 500, 6);
    let hyper = NiwHyperparams::default();
    // posterior hyperparameters by hand from the raw returns
    let n = panel.len() as f64;
    let xbar = panel.x().iter().sum::<f64>() / n;
    let hbar = panel.h().iter().sum::<f64>() / n;
    let mut s = [[0.0; 2]; 2];
    for (&x, &h) in panel.x().iter().zip(panel.h()) {
        let d = [x - xbar, h - hbar];
        for i in 0..2 {
            for j in 0..2 {
                s[i][j] += d[i] * d[j];
            }
        }
    }
    let shrink = hyper.kappa0 * n / (hyper.kappa0 + n);
    let dev = [xbar - hyper.mean[0], hbar - hyper.mean[1]];
    let mut psi = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            psi[i][j] = hyper.scale[i][j] + s[i][j] + shrink * dev[i] * dev[j];
        }
    }
    let nu = hyper.nu0 + n;
    let k = 200_000;
    let chain = conjugate_sample(panel.stats(), &hyper, k, 0, 66).map_err(|e| e.to_string())?;
    let entries: [Entry; 3] = [
        (0, 0, |t| t.sigma_x().powi(2)),
        (1, 1, |t| t.sigma_h().powi(2)),
        (0, 1, |t| t.rho() * t.sigma_x() * t.sigma_h()),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, j, f) in entries {
        let mean = chain.draws().iter().map(f).sum::<f64>() / k as f64;
        let expected = psi[i][j] / (nu - 3.0);
        let var = ((nu - 1.0) * psi[i][j].powi(2) + (nu - 3.0) * psi[i][i] * psi[j][j])
            / ((nu - 2.0) * (nu - 3.0f64).powi(2) * (nu - 5.0));
        let z = (mean - expected) / (var / k as f64).sqrt();
        ok &= z.abs() <= 4.0;
        parts.push(format!("Σ{i}{j} z = {z:.2}"));
    }
    let msg = parts.join(", ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c7_diagnostics() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(70 + seed);
        let n = 100_000;
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let rel = nse(&v) / (1.0 / (n as f64).sqrt()) - 1.0;
        worst = worst.max(rel.abs());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut mismatches = 0;
    for _ in 0..100 {
        let v: Vec<f64> = (0..1000).map(|_| rng.sample::<f64, _>(StandardNormal).exp()).collect();
        let mut sorted = v.clone();
        sorted.sort_by(f64::total_cmp);
        // every window of 950 sorted points, first minimum wins
        let mut best = (0.0, f64::INFINITY);
        for lo in 0..=(1000 - 950) {
            let (a, b) = (sorted[lo], sorted[lo + 949]);
            if b - a < best.1 - best.0 {
                best = (a, b);
            }
        }
        if hpdi(&v, 0.95).map_err(|e| e.to_string())? != best {
            mismatches += 1;
        }
    }
    let msg = format!("worst nse error {:.1}%, hpdi mismatches {mismatches}/100", 100.0 * worst);
    if worst <= 0.15 && mismatches == 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c8_implied_vol() -> Outcome {
    let mut worst: f64 = 0.0;
    for sigma in [0.001, 0.01, 0.05] {
        for moneyness in [0.99, 1.0, 1.01] {
            for s in [5.0, 21.0, 63.0] {
                let (spot, rate) = (100.0, 0.0001);
                let strike = spot * moneyness;
                let price = bs_call(spot, strike, sigma, rate, s).map_err(|e| e.to_string())?;
                let iv = implied_vol(price, spot, strike, rate, s).map_err(|e| format!("σ={sigma} K/S={moneyness} s={s}: {e}"))?;
                worst = worst.max((iv - sigma).abs());
            }
        }
    }
    let msg = format!("max |σ̂ − σ| = {worst:.3e} over 27 points");
    if worst < 1e-8 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// Reduced demo configuration: every window and family, small chains.
fn layout_config(dir: &Path) -> PathBuf {
    let base = fs::read_to_string(fixtures().join("demo.conf")).unwrap();
    let mut text = String::new();
    for line in base.lines() {
        let key = line.split('=').next().unwrap_or("").trim();
        match key {
            "draws" => text.push_str("draws = 3000\n"),
            "burn_in" => text.push_str("burn_in = 1000\n"),
            "n_paths" => text.push_str("n_paths = 2000\n"),
            "paths_per_draw" => text.push_str("paths_per_draw = 100\n"),
            "out" => text.push_str(&format!("out = {}\n", dir.join("out").display())),
            "asset" | "options" => {
                let (k, v) = line.split_once('=').unwrap();
                text.push_str(&format!("{} = {}\n", k.trim(), fixtures().join(v.trim()).display()));
            }
            "fx" => {
                let list: Vec<String> = line
                    .split_once('=')
                    .unwrap()
                    .1
                    .split(',')
                    .map(|p| {
                        let (label, file) = p.trim().split_once(':').unwrap();
                        format!("{label}:{}", fixtures().join(file).display())
                    })
                    .collect();
                text.push_str(&format!("fx = {}\n", list.join(", ")));
            }
            _ => {
                text.push_str(line);
                text.push('\n');
            }
        }
    }
    let path = dir.join("layout.conf");
    fs::write(&path, text).unwrap();
    path
}

fn quanto(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_quanto")).args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("quanto {}: {}", args.join(" "), String::from_utf8_lossy(&out.stderr).trim()))
    }
}

fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    files
}

fn c9_layout(dir: &Path) -> Outcome {
    let conf = layout_config(dir);
    let conf = conf.to_str().unwrap();
    quanto(&["experiment", "--config", conf])?;
    let out = dir.join("out");
    let table2 = fs::read_to_string(out.join("table2.csv")).map_err(|e| e.to_string())?;
    let mut lines = table2.lines();
    let header = lines.next().unwrap_or("");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    let mut problems = Vec::new();
    if header != "fx,model,itm_rpe,itm_nse,atm_rpe,atm_nse,otm_rpe,otm_nse" {
        problems.push(format!("table2 header {header}"));
    }
    let expected_models = ["ttn", "tnn", "ign", "mnc", "mle", "bs-i", "bs-h"];
    for (g, fx) in ["eur", "gbp", "cad"].iter().enumerate() {
        for (i, model) in expected_models.iter().enumerate() {
            match rows.get(g * 7 + i) {
                Some(r) if r.len() == 8 && r[0] == *fx && r[1] == *model => {}
                other => problems.push(format!("table2 row {}: {other:?}", g * 7 + i)),
            }
        }
    }
    if rows.len() != 21 {
        problems.push(format!("table2 has {} rows", rows.len()));
    }
    let curves = fs::read_to_string(out.join("curves.csv")).map_err(|e| e.to_string())?;
    for w in [140, 740, 1340, 1840] {
        if !curves.lines().any(|l| l.starts_with(&format!("eur,{w},ign,"))) {
            problems.push(format!("curves.csv lacks window {w}"));
        }
    }
    let failures = fs::read_to_string(out.join("failures.csv")).map_err(|e| e.to_string())?;
    if failures.lines().count() != 1 {
        problems.push(format!("failed cells:\n{failures}"));
    }
    let cells = fs::read_dir(out.join("cells")).map_err(|e| e.to_string())?.count();
    if cells != 3 * 4 * 5 * 2 {
        problems.push(format!("{cells} cell files"));
    }
    if problems.is_empty() {
        Ok(format!("table2 3×7 rows, curves for 4 windows, {cells} cell files"))
    } else {
        Err(problems.join("; "))
    }
}

fn c10_determinism(dir: &Path) -> Outcome {
    let conf = dir.join("layout.conf");
    let conf = conf.to_str().unwrap();
    let out = dir.join("out");
    let draws = out.join("draws_ign.csv");
    let draws = draws.to_str().unwrap();
    let run_all = || -> Result<(), String> {
        quanto(&["estimate", "--config", conf])?;
        quanto(&["price", "--config", conf, "--draws", draws])?;
        quanto(&["diagnose", "--config", conf, "--draws", draws])?;
        quanto(&["experiment", "--config", conf])
    };
    run_all()?;
    let first = snapshot(&out);
    run_all()?;
    let second = snapshot(&out);
    let differing: Vec<_> = first
        .iter()
        .filter(|(p, bytes)| second.get(*p) != Some(*bytes))
        .map(|(p, _)| p.display().to_string())
        .collect();
    if differing.is_empty() && first.len() == second.len() {
        Ok(format!("{} output files identical across runs", first.len()))
    } else {
        Err(format!("differing: {differing:?}"))
    }
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let criteria: Vec<Criterion> = vec![
        ("1 analytic-oracle pricing", Box::new(c1_analytic_oracle)),
        ("2 martingale identity", Box::new(c2_martingale)),
        ("3 zero-strike identities", Box::new(c3_zero_strike)),
        ("4 posterior recovery", Box::new(c4_posterior_recovery)),
        ("5 kernel consistency", Box::new(c5_kernel_consistency)),
        ("6 conjugate moments", Box::new(c6_conjugate_moments)),
        ("7 diagnostics", Box::new(c7_diagnostics)),
        ("8 implied-vol round trip", Box::new(c8_implied_vol)),
        ("9 experiment layout", Box::new(|| c9_layout(dir.path()))),
        ("10 determinism", Box::new(|| c10_determinism(dir.path()))),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
