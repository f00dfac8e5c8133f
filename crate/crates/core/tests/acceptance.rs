//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit status
//! if any criterion fails. Run with `cargo test --test acceptance`.

use std::f64::consts::SQRT_2;
use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;

use qkdlab_core::css_postprocess::{
    coset_label, decode_nearest, pack, reconcile_and_extract, sample_bound, steane_css, unpack, xor_bits, SampleMode,
};
use qkdlab_core::gaussian_channel::{
    apply_gain, apply_loss, conditional_signal, sample_center, ChannelModel, Compensation, GaussianMarginal,
    Quadrature, SqueezedSource,
};
use qkdlab_core::gkp_code::{shift_error_prob, sqrt_pi, ErrorMethod};
use qkdlab_core::protocol::{estimate_error_rates, run_protocol, simulate, EveModel, ProtocolConfig, Status};
use qkdlab_core::rng;
use qkdlab_core::security_analysis::{
    convert, delta_from_tilde, delta_xi, ebits, entanglement_of_formation, key_rate, max_distance,
    optimal_operating_point, solve_secure_delta, LossScenario, SqueezeSpec,
};

struct Check {
    what: String,
    ok: bool,
}

#[derive(Default)]
struct Checks(Vec<Check>);

impl Checks {
    fn near(&mut self, what: &str, got: f64, target: f64, tol: f64) {
        self.0.push(Check {
            what: format!("{what} = {got:.6} (want {target} ± {tol})"),
            ok: (got - target).abs() <= tol,
        });
    }

    fn holds(&mut self, what: impl Into<String>, ok: bool) {
        self.0.push(Check { what: what.into(), ok });
    }

    fn sigma(&mut self, what: &str, got: f64, expected: f64, sigma: f64) {
        let z = (got - expected) / sigma;
        self.0.push(Check {
            what: format!("{what}: {got:.6} vs {expected:.6} ({z:+.2}σ)"),
            ok: z.abs() <= 3.0,
        });
    }
}

fn thresholds() -> Checks {
    let mut c = Checks::default();
    c.near(
        "window error at Δ=0.784",
        shift_error_prob(0.784, ErrorMethod::Window).unwrap(),
        0.110,
        0.001,
    );
    let delta = solve_secure_delta(0.11).unwrap();
    c.near("Δ* for 11%", delta, 0.784, 0.001);
    let p = convert(SqueezeSpec::Delta(delta)).unwrap();
    c.near("Δ̃*", p.tilde_delta, 0.749, 0.001);
    c.near("r*", p.r, 0.289, 0.001);
    c.near("dB*", p.db, 2.51, 0.01);
    c.near("two-mode r*", p.r_two_mode, 0.590, 0.001);
    c
}

fn entanglement() -> Checks {
    let mut c = Checks::default();
    c.near("ebits(0.784)", ebits(0.784).unwrap(), 1.19, 0.01);
    c.near(
        "EoF((1-0.110)²)",
        entanglement_of_formation((1.0f64 - 0.110).powi(2)).unwrap(),
        0.450,
        0.005,
    );
    let vacuum = ebits(SQRT_2).unwrap();
    c.holds(format!("ebits(√2) = {vacuum} (want exactly 0)"), vacuum == 0.0);
    c
}

fn operating_points() -> Checks {
    let mut c = Checks::default();
    let w = |t: f64| shift_error_prob(delta_from_tilde(t).unwrap(), ErrorMethod::Window).unwrap();
    c.near("window error at Δ̃=0.5", w(0.5), 0.012, 0.001);
    c.near("window error at Δ̃=0.483", w(0.483), 0.0100, 0.0005);
    let tail = shift_error_prob(0.256, ErrorMethod::ExactSeries).unwrap();
    c.holds(
        format!("exact-series error at Δ=0.256 = {tail:.3e} (want < 1e-6)"),
        tail < 1e-6,
    );
    c
}

fn loss() -> Checks {
    let mut c = Checks::default();
    let opt = optimal_operating_point(false);
    c.near("optimal Δ̃ (no amplifier)", opt.tilde_delta, 0.426, 0.01);
    c.near("optimal κd (no amplifier)", opt.kappa_d, 0.367, 0.005);
    let amp = max_distance(0.01, true);
    c.near("amplified κd_max at Δ̃=0.01", amp, 0.268, 0.003);
    c.near("implied ξ⁻²", amp.exp(), 1.307, 0.005);
    let slope = max_distance(0.05, false) / 0.05;
    c.holds(
        format!("small-Δ̃ slope = {slope:.4} (want in [1.41, 1.73])"),
        (1.41..=1.73).contains(&slope),
    );
    c
}

fn monte_carlo() -> Checks {
    let mut c = Checks::default();
    let trials = 1_000_000;
    for (tilde, kd) in [(0.5, 0.0), (0.5, 0.2), (0.426, 0.367)] {
        let config = ProtocolConfig {
            tilde_delta: tilde,
            kappa_d: kd,
            seed: 2024,
            ..ProtocolConfig::default()
        };
        let est = estimate_error_rates(&config, trials).unwrap();
        let width = delta_xi(tilde, LossScenario::new(kd, false).unwrap()).unwrap();
        let p = shift_error_prob(width, ErrorMethod::ExactSeries).unwrap();
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        for basis in Quadrature::BOTH {
            let (rate, _) = est.rate(basis);
            c.sigma(
                &format!("{basis}-basis flip rate at Δ̃={tilde}, κd={kd}"),
                rate,
                p,
                sigma,
            );
        }
    }
    c
}

fn gaussian_identities() -> Checks {
    let mut c = Checks::default();
    let src = SqueezedSource::symmetric(0.5).unwrap();
    let delta = src.epr_delta(Quadrature::Q).unwrap();
    let n = 1_000_000;
    let mut r = rng::stream(6, 0);
    let diffs: Vec<f64> = (0..n)
        .map(|_| {
            let qa = sample_center(&src, Quadrature::Q, &mut r);
            qa - conditional_signal(&src, qa, Quadrature::Q).unwrap().sample(&mut r)
        })
        .collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    let expected = delta * delta / 2.0;
    c.sigma(
        "Var(q_A − q_B) vs Δ²/2",
        var,
        expected,
        expected * (2.0 / (n as f64 - 1.0)).sqrt(),
    );

    // closed form against explicit loss-then-amplifier propagation
    let mut worst: f64 = 0.0;
    for i in 1..=40 {
        let tilde = 0.74 * i as f64 / 40.0;
        for j in 0..=20 {
            let kd = 1.5 * j as f64 / 20.0;
            let src = SqueezedSource::symmetric(tilde).unwrap();
            let ch = ChannelModel::fiber(kd, Compensation::QuantumAmplifier).unwrap();
            let out = ch
                .transmit_marginal(conditional_signal(&src, 0.0, Quadrature::Q).unwrap())
                .unwrap();
            let gain = ch.xi * ch.gain.sqrt() * src.shrink(Quadrature::Q);
            let propagated = 2.0 * ((1.0 - gain).powi(2) * src.center_variance(Quadrature::Q) + out.variance);
            let d = delta_from_tilde(tilde).unwrap();
            let closed = d * d + 2.0 * kd.exp_m1();
            let analytic = delta_xi(tilde, LossScenario::new(kd, true).unwrap()).unwrap().powi(2);
            worst = worst.max((analytic - closed).abs()).max((propagated - closed).abs());
        }
    }
    c.holds(
        format!("amplified width² closed form, max deviation {worst:.2e} (want ≤ 1e-10)"),
        worst <= 1e-10,
    );

    let vac = GaussianMarginal::vacuum();
    let fixed = [1e-6, 0.3, 0.9, 1.0]
        .iter()
        .all(|&xi| apply_loss(vac, xi).unwrap() == vac);
    c.holds("vacuum is a fixed point of loss", fixed);
    let mut semigroup: f64 = 0.0;
    for &(m, v) in &[(0.0, 0.5), (1.7, 0.125), (-3.0, 2.0)] {
        let s = GaussianMarginal::new(m, v).unwrap();
        for x1 in [0.2, 0.5, 0.9] {
            for x2 in [0.3, 0.7, 1.0] {
                let a = apply_loss(apply_loss(s, x1).unwrap(), x2).unwrap();
                let b = apply_loss(s, x1 * x2).unwrap();
                semigroup = semigroup
                    .max((a.mean - b.mean).abs())
                    .max((a.variance - b.variance).abs());
            }
        }
    }
    c.holds(
        format!("loss semigroup, max deviation {semigroup:.1e} (want ≤ 1e-15)"),
        semigroup <= 1e-15,
    );
    let unit = apply_gain(GaussianMarginal::new(0.4, 0.3).unwrap(), 1.0).unwrap();
    c.holds(
        "unit gain is the identity",
        unit == GaussianMarginal::new(0.4, 0.3).unwrap(),
    );
    c
}

fn css() -> Checks {
    let mut c = Checks::default();
    let pair = steane_css();
    let words: Vec<u64> = pair.c1().codewords().collect();
    let corrected = words
        .iter()
        .flat_map(|&v| (0..7).map(move |i| (v, v ^ (1 << i))))
        .filter(|&(v, w)| pack(&decode_nearest(pair.c1(), &unpack(w, 7)).unwrap()).unwrap() == v)
        .count();
    c.holds(format!("single-error correction {corrected}/112"), corrected == 112);

    let v = pair.coset_basis_rows()[0].clone();
    let label = coset_label(&pair, &v).unwrap();
    let invariant = pair
        .c2()
        .codewords()
        .filter(|&w| coset_label(&pair, &xor_bits(&v, &unpack(w, 7)).unwrap()).unwrap() == label)
        .count();
    c.holds(format!("coset invariance {invariant}/8"), invariant == 8);

    let p: f64 = 0.05;
    let trials = 100_000;
    let mut r = rng::stream(77, 0);
    let (mut agree, mut decoded) = (0usize, 0usize);
    for _ in 0..trials {
        let u: Vec<u8> = (0..7).map(|_| r.random_bool(0.5) as u8).collect();
        let bob: Vec<u8> = u.iter().map(|&b| b ^ r.random_bool(p) as u8).collect();
        let rec = reconcile_and_extract(&pair, &u, &bob, &mut r).unwrap();
        agree += (rec.key_a == rec.key_b) as usize;
        let codeword = xor_bits(&u, &rec.announced).unwrap();
        let masked = xor_bits(&bob, &rec.announced).unwrap();
        decoded += (decode_nearest(pair.c1(), &masked).unwrap() == codeword) as usize;
    }
    let sig = |q: f64| (q * (1.0 - q) / trials as f64).sqrt();
    let correctable = (1.0 - p).powi(7) + 7.0 * p * (1.0 - p).powi(6);
    c.sigma(
        "Steane correction rate at p=0.05 vs (1-p)⁷+7p(1-p)⁶",
        decoded as f64 / trials as f64,
        correctable,
        sig(correctable),
    );
    // Keys also agree when the residual error after decoding lies in C₂
    // (weight-3 patterns whose leader completes a weight-4 word), so the
    // agreement rate is the sum over all such patterns, enumerated here.
    let c2: Vec<u64> = pair.c2().codewords().collect();
    let exact: f64 = (0u64..128)
        .filter(|&e| {
            let residual = e ^ pack(&decode_nearest(pair.c1(), &unpack(e, 7)).unwrap()).unwrap();
            c2.contains(&(e ^ residual))
        })
        .map(|e| p.powi(e.count_ones() as i32) * (1.0 - p).powi(7 - e.count_ones() as i32))
        .sum();
    c.sigma(
        "Steane key agreement at p=0.05 vs enumerated C₂-equivalent corrections",
        agree as f64 / trials as f64,
        exact,
        sig(exact),
    );

    c.near("key_rate(0.11, 0.11)", key_rate(0.11, 0.11).unwrap(), 0.0, 1e-3);
    let mut worst: f64 = 0.0;
    for n in [12u64, 100, 1000, 54_321] {
        for (p, eps) in [(0.05, 0.05), (0.11, 0.01), (0.2, 0.1)] {
            let simple = sample_bound(n, p, eps, SampleMode::Simple).unwrap();
            let general = sample_bound(
                n,
                p,
                eps,
                SampleMode::General {
                    tested: n as f64 / 2.0,
                    total: 1.5 * n as f64,
                },
            )
            .unwrap();
            worst = worst.max((simple - general).abs());
        }
    }
    c.holds(
        format!("sample bound Simple/General, max deviation {worst:.1e} (want ≤ 1e-12)"),
        worst <= 1e-12,
    );
    c
}

fn end_to_end() -> Checks {
    let mut c = Checks::default();
    let mut good = 0;
    for seed in 0..100 {
        let o = run_protocol(&ProtocolConfig {
            n: 700,
            tilde_delta: 0.25,
            seed,
            ..ProtocolConfig::default()
        })
        .unwrap();
        good += (o.status == Status::Completed && o.key_alice.len() == 100 && o.keys_agree()) as usize;
    }
    c.holds(
        format!("Δ̃=0.25, n=700: {good}/100 seeds complete with equal keys"),
        good == 100,
    );

    let (mut aborted, mut verified, mut reached) = (0, 0, 0);
    for seed in 0..100 {
        let o = run_protocol(&ProtocolConfig {
            n: 200,
            tilde_delta: 0.5,
            eve: EveModel::InterceptResend { resend_width: 0.5 },
            seed,
            ..ProtocolConfig::default()
        })
        .unwrap();
        aborted += (o.status != Status::Completed) as usize;
        reached += (o.status != Status::AbortedTooFewSifted) as usize;
        verified += (o.status == Status::AbortedVerification) as usize;
    }
    c.holds(
        format!("intercept-resend: {aborted}/100 seeds abort (want ≥ 99), {verified}/{reached} at verification"),
        aborted >= 99 && verified == reached,
    );

    let mut shifted = 0;
    for seed in 0..20 {
        let o = run_protocol(&ProtocolConfig {
            n: 200,
            eve: EveModel::FixedShift { dq: sqrt_pi(), dp: 0.0 },
            seed,
            ..ProtocolConfig::default()
        })
        .unwrap();
        shifted += (o.status == Status::AbortedVerification) as usize;
    }
    c.holds(format!("shift by √π: {shifted}/20 seeds abort"), shifted == 20);
    c
}

fn reproducibility() -> Checks {
    let mut c = Checks::default();
    let configs = [
        ProtocolConfig {
            seed: 42,
            ..ProtocolConfig::default()
        },
        ProtocolConfig {
            seed: 43,
            kappa_d: 0.1,
            amplified: true,
            eve: EveModel::InterceptResend { resend_width: 0.5 },
            ..ProtocolConfig::default()
        },
    ];
    let render = |threads: usize| -> Vec<String> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            configs
                .iter()
                .flat_map(|cfg| {
                    let run = simulate(cfg).unwrap();
                    let est = estimate_error_rates(cfg, 20_000).unwrap();
                    [
                        serde_json::to_string(&run.outcome).unwrap(),
                        serde_json::to_string(&run.transcript).unwrap(),
                        serde_json::to_string(&est).unwrap(),
                    ]
                })
                .collect()
        })
    };
    let single = render(1);
    let threads = std::thread::available_parallelism().map_or(4, |n| n.get()).max(4);
    let multi = render(threads);
    c.holds(format!("1-thread and {threads}-thread JSON identical"), single == multi);
    c
}

type Criterion = (&'static str, fn() -> Checks);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("threshold suite", thresholds),
        ("entanglement suite", entanglement),
        ("operating-point suite", operating_points),
        ("loss suite", loss),
        ("Monte-Carlo vs analytic", monte_carlo),
        ("Gaussian identity suite", gaussian_identities),
        ("CSS suite", css),
        ("end-to-end protocol", end_to_end),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let checks = run();
        let ok = checks.0.iter().all(|c| c.ok);
        failed += !ok as usize;
        println!(
            "criterion {}: {} {name} ({:.2}s)",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        for check in &checks.0 {
            println!("    [{}] {}", if check.ok { "ok" } else { "FAIL" }, check.what);
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
