//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.
//!
//! `EAPM_ACCEPTANCE_SLOW=1` adds the d = 7 EAPM see-saw run.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use eapm_core::bounds::{
    conjectured_bound, critical_visibility, l_d, scenario_bound, visibility_scan, xor_qubit_bound,
    BoundKind, XorGame,
};
use eapm_core::linalg::Subsystem;
use eapm_core::linalg::{kron, ComplexMatrix};
use eapm_core::optimize::{seesaw, SeesawConfig};
use eapm_core::protocols::{
    ef_protocol_value, ideal_score, lhs_simulation, make_game, qubit_b_sum, simulate_eapm,
    LhsModel, PostProcessing, Scenario,
};
use eapm_core::qudit::{
    apply_channel, basis_measurement, fidelity_phi_plus, max_entangled, mub_family,
    phi_plus_vector, product_measurement, random, shift_relation_check, weyl_pair, DensityMatrix,
    KrausChannel,
};

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

type Check = fn() -> eapm_core::Result<Outcome>;

fn seesaw_cfg(restarts: usize, seed: u64) -> SeesawConfig {
    SeesawConfig {
        restarts,
        seed,
        ..SeesawConfig::default()
    }
}

fn determinism() -> eapm_core::Result<Outcome> {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for d in [2usize, 3, 5, 7] {
        let phi = max_entangled(d)?;
        for scenario in [Scenario::Eapm, Scenario::Symmetric] {
            worst = worst.max((ideal_score(&phi, scenario)? - 1.0).abs());
        }
    }
    let t = start.elapsed();
    Ok(outcome(
        worst < 1e-9 && t < Duration::from_secs(10),
        format!("max |S_d - 1|, |R_d - 1| = {worst:.2e} in {t:.2?}"),
    ))
}

fn closed_form() -> eapm_core::Result<Outcome> {
    let quoted = [(3usize, 0.6667), (5, 0.5266), (7, 0.4459)];
    let mut worst = 0.0f64;
    let mut vals = Vec::new();
    for (d, q) in quoted {
        let v = l_d(d)?.value;
        vals.push(format!("L_{d} = {v:.6}"));
        worst = worst.max((v - q).abs());
    }
    Ok(outcome(
        worst <= 5e-5,
        format!("{}; max deviation {worst:.1e}", vals.join(", ")),
    ))
}

fn gram_program() -> eapm_core::Result<Outcome> {
    let start = Instant::now();
    let game = XorGame::from_game(&make_game(2, Scenario::Symmetric)?)?;
    let out = xor_qubit_bound(&game)?;
    let t = start.elapsed();
    let pass = (out.eta.value - 2.0).abs() <= 1e-6
        && (out.bound.value - 2.0 / 3.0).abs() <= 1e-6
        && out.bound.kind == BoundKind::Sdp
        && t < Duration::from_secs(1);
    Ok(outcome(
        pass,
        format!(
            "eta = {:.9}, bound = {:.9} in {t:.2?}",
            out.eta.value, out.bound.value
        ),
    ))
}

fn eapm_seesaw() -> eapm_core::Result<Outcome> {
    let mut dims = vec![(3usize, 0.6616), (5, 0.5121)];
    let slow = std::env::var("EAPM_ACCEPTANCE_SLOW").is_ok_and(|v| v == "1");
    if slow {
        dims.push((7, 0.4233));
    }
    let mut pass = true;
    let mut parts = Vec::new();
    for (d, quoted) in dims {
        let start = Instant::now();
        let r = seesaw(&make_game(d, Scenario::Eapm)?, &seesaw_cfg(100, 1))?;
        let ld = l_d(d)?.value;
        let ok = r.best_score >= quoted - 1e-3 && r.best_score <= ld + 1e-6;
        pass &= ok;
        parts.push(format!(
            "d={d}: {:.6} (L_d {ld:.6}, {:.1?})",
            r.best_score,
            start.elapsed()
        ));
    }
    if !slow {
        parts.push("d=7 skipped".into());
    }
    Ok(outcome(pass, parts.join("; ")))
}

fn symmetric_seesaw() -> eapm_core::Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for d in [3usize, 5] {
        let start = Instant::now();
        let r = seesaw(&make_game(d, Scenario::Symmetric)?, &seesaw_cfg(50, 1))?;
        let target = conjectured_bound(d)?.value;
        let ok = r.best_score >= target - 1e-3 && r.best_score <= target + 1e-4;
        pass &= ok;
        parts.push(format!(
            "d={d}: {:.6} vs 2/(d+1) = {target:.6} ({:.1?})",
            r.best_score,
            start.elapsed()
        ));
    }
    Ok(outcome(pass, parts.join("; ")))
}

fn thresholds() -> eapm_core::Result<Outcome> {
    let mut worst = 0.0f64;
    let mut labels_ok = true;
    let mut flips_ok = true;
    for d in [2usize, 3, 5, 7, 11, 13] {
        let df = d as f64;
        let v = critical_visibility(d, &l_d(d)?)?;
        worst = worst.max((v - 1.0 / (df + 1.0).sqrt()).abs());
        let b = scenario_bound(d, Scenario::Symmetric)?;
        labels_ok &= (d == 2) == (b.kind != BoundKind::Conjectured);
        let v = critical_visibility(d, &b)?;
        worst = worst.max((v - 1.0 / (df + 1.0)).abs());
    }
    let steps = 101;
    let step = 1.0 / (steps - 1) as f64;
    for d in [2usize, 3, 5] {
        for scenario in [Scenario::Eapm, Scenario::Symmetric] {
            let scan = visibility_scan(d, scenario, scenario_bound(d, scenario)?, 0.0, 1.0, steps)?;
            for r in &scan.rows {
                if (r.v > scan.crossing + step && !r.certified)
                    || (r.v < scan.crossing - step && r.certified)
                {
                    flips_ok = false;
                }
            }
        }
    }
    Ok(outcome(
        worst <= 1e-12 && labels_ok && flips_ok,
        format!("max deviation {worst:.1e}, kinds labeled: {labels_ok}, scans flip at crossing: {flips_ok}"),
    ))
}

fn ef_identity() -> eapm_core::Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for d in [2usize, 3] {
        for _ in 0..200 {
            let (da, db) = (rng.gen_range(2..=3usize), rng.gen_range(2..=3usize));
            let rank = rng.gen_range(1..=da * db);
            let rho = random::mixed_state(da, db, rank, &mut rng);
            let ch_a = random::channel(da, d, rng.gen_range(2..=3), &mut rng)?;
            let ch_b = random::channel(db, d, rng.gen_range(2..=3), &mut rng)?;
            let r = ef_protocol_value(&rho, &ch_a, &ch_b, d)?;
            let sigma = apply_channel(
                &ch_b,
                &apply_channel(&ch_a, &rho, Subsystem::First)?,
                Subsystem::Second,
            )?;
            let f = fidelity_phi_plus(&sigma)?;
            let df = d as f64;
            worst = worst.max((r - (1.0 + df * f) / (df + 1.0)).abs());
        }
    }
    Ok(outcome(
        worst <= 1e-9,
        format!("400 samples, max deviation {worst:.2e}"),
    ))
}

fn lhs_verification() -> eapm_core::Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for (k, d) in [2usize, 3].into_iter().cycle().take(100).enumerate() {
        let mubs = mub_family(d)?;
        let n_lambda = 1 + k % 4;
        let raw: Vec<f64> = (0..n_lambda).map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let taus: Vec<DensityMatrix> = (0..n_lambda)
            .map(|_| random::mixed_state(d, 1, rng.gen_range(1..=d), &mut rng))
            .collect();
        let sigmas: Vec<DensityMatrix> = (0..n_lambda)
            .map(|_| random::mixed_state(d, 1, rng.gen_range(1..=d), &mut rng))
            .collect();

        let mut rho = ComplexMatrix::zeros(d * d, d * d);
        for l in 0..n_lambda {
            rho.add_scaled(&kron(&taus[l].mat, &sigmas[l].mat)?, weights[l]);
        }
        let rho = DensityMatrix::new(rho, d, d)?;

        let retained: Vec<_> = (0..=d)
            .map(|z| basis_measurement(&(0..d).map(|m| mubs.conj_vector(m, z)).collect::<Vec<_>>()))
            .collect::<eapm_core::Result<_>>()?;
        let responses = sigmas
            .iter()
            .map(|s| retained.iter().map(|n| n.probabilities(&s.mat)).collect())
            .collect();
        let model = LhsModel::new(weights, taus, responses)?;
        let msg: Vec<Vec<_>> = (0..=d)
            .map(|z| {
                let e = basis_measurement(
                    &(0..d)
                        .map(|m| mubs.vector(m, z).to_vec())
                        .collect::<Vec<_>>(),
                )?;
                Ok(vec![e; d])
            })
            .collect::<eapm_core::Result<_>>()?;
        let encodings: Vec<KrausChannel> = (0..d * d)
            .map(|_| random::channel(d, d, rng.gen_range(1..=2), &mut rng))
            .collect::<eapm_core::Result<_>>()?;

        let classical = lhs_simulation(&model, &encodings, &msg, &PostProcessing::difference(d))?;
        let povms: Vec<_> = (0..=d)
            .map(|z| product_measurement(d, z))
            .collect::<eapm_core::Result<_>>()?;
        let quantum = simulate_eapm(&rho, &encodings, &povms)?;
        let diff = classical.max_abs_diff(&quantum).ok_or_else(|| {
            eapm_core::Error::DimensionMismatch(
                "classical and quantum tables differ in shape".into(),
            )
        })?;
        worst = worst.max(diff);
    }
    Ok(outcome(
        worst <= 1e-9,
        format!("100 separable states, max entrywise deviation {worst:.2e}"),
    ))
}

fn structural() -> eapm_core::Result<Outcome> {
    let mut worst_t = 0.0f64;
    let mut worst_sum = 0.0f64;
    let mut worst_shift = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for d in [2usize, 3, 5, 7, 11, 13] {
        let mubs = mub_family(d)?;
        let mut t = ComplexMatrix::zeros(d * d, d * d);
        for z in 0..=d {
            for c in 0..d {
                let e = ComplexMatrix::projector(mubs.vector(c, z));
                let ec = ComplexMatrix::projector(&mubs.conj_vector(c, z));
                t.add_scaled(&kron(&e, &ec)?, 1.0);
            }
        }
        let mut expect = ComplexMatrix::projector(&phi_plus_vector(d)).scale(d as f64);
        expect.add_scaled(&ComplexMatrix::identity(d * d), 1.0);
        worst_t = worst_t.max((&t - &expect).max_abs());

        if d <= 7 {
            let game = make_game(d, Scenario::Eapm)?;
            for z in 0..=d {
                // any d-outcome measurement on the message, and the product measurement
                let povms = [random::povm(d, d, &mut rng)?, product_measurement(d, z)?];
                for p in &povms {
                    let n = p.dim;
                    let mut s = ComplexMatrix::zeros(n, n);
                    for x in 0..game.n_x {
                        s.add_scaled(&p.effects[game.win(x, 0, z)], 1.0);
                    }
                    let mut dev = s;
                    dev.add_scaled(&ComplexMatrix::identity(n), -(d as f64));
                    worst_sum = worst_sum.max(dev.max_abs());
                }
            }
        }

        if d > 2 {
            let w = weyl_pair(d)?;
            for t in 0..d {
                for z in 0..d {
                    for m in 0..d {
                        worst_shift =
                            worst_shift.max(shift_relation_check(&w, &mubs, t, z, m)?.max());
                    }
                }
            }
        }
    }
    let phi = ComplexMatrix::projector(&phi_plus_vector(2));
    let mut expect = phi.scale(64.0);
    expect.add_scaled(&ComplexMatrix::identity(4), -16.0);
    let worst_b = (&qubit_b_sum()? - &expect).max_abs();
    let pass = worst_t <= 1e-10 && worst_b <= 1e-10 && worst_sum <= 1e-10 && worst_shift <= 1e-10;
    Ok(outcome(
        pass,
        format!("T {worst_t:.1e}, B-sum {worst_b:.1e}, sum_x M {worst_sum:.1e}, shift relations {worst_shift:.1e}"),
    ))
}

fn main() -> ExitCode {
    let checks: [(&str, Check); 9] = [
        ("ideal-protocol determinism", determinism),
        ("closed-form bound values", closed_form),
        ("Gram SDP for the qubit symmetric game", gram_program),
        ("EAPM see-saw lower bounds", eapm_seesaw),
        ("symmetric see-saw matches 2/(d+1)", symmetric_seesaw),
        ("threshold identities and scans", thresholds),
        ("pre-channel score identity", ef_identity),
        ("local hidden state simulation", lhs_verification),
        ("structural identities", structural),
    ];
    let only: Option<Vec<usize>> = std::env::var("EAPM_ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let n = i + 1;
        if only.as_ref().is_some_and(|o| !o.contains(&n)) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match check() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!(
            "criterion {n} {}: {name}: {detail} [{:.1?}]",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
