//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use qrev::arrow::{
    branch_ensemble, fluorescence_ensemble_arrow, fluorescence_log_arrow, imperfect_backward_probability,
    imperfect_forward_probability, imperfect_log_arrow, reverse_probability_equiv_check, BoundaryPair, CoarseChannel,
    OperatorChain,
};
use qrev::channels::{
    completeness_residual, forward_operator, reverse_rank2, reversed_completeness_residual, reversed_operator,
    ChannelSpec, QuadratureConfig, Readout,
};
use qrev::qubit::{time_reverse_ket, time_reverse_state, DensityMatrix, Operator2, PureState, C64};
use qrev::trajectory::{
    bloch_sde_step, forward_step, mirror_deviation, simulate_forward, unravel_backward,
    SimConfig,
};
use qrev::weak::{time_reversed_weak_value, weak_protocol_probabilities, weak_value, MeterModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let t = Instant::now();
    let mut o = f();
    let el = t.elapsed();
    o.detail = format!("{} [{:.2} s]", o.detail, el.as_secs_f64());
    if let Some(l) = limit {
        if el > l {
            o.pass = false;
            o.detail = format!("{} exceeds the {} s budget", o.detail, l.as_secs());
        }
    }
    o
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_readout<R: Rng>(spec: &ChannelSpec, r: &mut R) -> Readout {
    match spec {
        // Pointer peaks at ±kτ/2 with width δ, as a real meter would report.
        ChannelSpec::Gaussian { k, tau, delta, .. } => {
            let centre = if r.random::<bool>() { 0.5 * k * tau } else { -0.5 * k * tau };
            Readout::Continuous(centre + delta * r.sample::<f64, _>(StandardNormal))
        }
        ChannelSpec::Dichotomous { .. } => Readout::Binary(r.random_range(0..2)),
        ChannelSpec::Fluorescence { dt, .. } => {
            let s = 1.0 / dt.sqrt();
            Readout::Heterodyne { i: s * r.sample::<f64, _>(StandardNormal), q: s * r.sample::<f64, _>(StandardNormal) }
        }
    }
}

fn random_spec<R: Rng>(family: usize, r: &mut R) -> ChannelSpec {
    match family {
        0 => ChannelSpec::gaussian(r.random_range(-2.0..2.0), r.random_range(0.1..2.0), r.random_range(0.2..3.0)).unwrap(),
        1 => ChannelSpec::dichotomous(r.random_range(0.01..0.99)).unwrap(),
        _ => ChannelSpec::fluorescence(r.random_range(0.1..5.0), r.random_range(1e-3..0.02)).unwrap(),
    }
}

fn c1_completeness() -> Outcome {
    let d = ChannelSpec::dichotomous(0.3).unwrap();
    let g = ChannelSpec::gaussian(1.0, 1.0, 1.0).unwrap();
    let f = ChannelSpec::fluorescence(1.0, 0.2).unwrap();
    let q = QuadratureConfig { gaussian_half_width: Some(10.0), gaussian_points: 4001, ..QuadratureConfig::default() };
    let res = |s: &ChannelSpec| (completeness_residual(s, &q).unwrap(), reversed_completeness_residual(s, &q).unwrap());
    let (d0, d1) = res(&d);
    let (g0, g1) = res(&g);
    let (f0, f1) = res(&f);
    let pass = d0 == 0.0 && d1 == 0.0 && g0 < 1e-8 && g1 < 1e-8 && f0 < 1e-4 && f1 < 1e-4;
    outcome(
        pass,
        format!(
            "dichotomous {d0:.1e}/{d1:.1e} (=0), gaussian {g0:.2e}/{g1:.2e} (<1e-8), fluorescence {f0:.2e}/{f1:.2e} (<1e-4)"
        ),
    )
}

fn c2_generic_reversal() -> Outcome {
    let mut r = rng(2);
    let mut worst = 0.0f64;
    let mut n = 0;
    while n < 1000 {
        let m = common::operator(&mut r);
        let Ok(rev) = reverse_rank2(&m) else { continue };
        let det = m.adjoint().det();
        worst = worst.max((m.adjoint() * rev).max_diff(&Operator2::identity().scale(det)));
        n += 1;
    }
    // Far-tail Gaussian readouts make M_F numerically rank one; those are
    // rejected by reverse_rank2 and skipped here.
    let (mut fam, mut skipped) = (0.0f64, 0);
    for family in 0..3 {
        for _ in 0..300 {
            let spec = random_spec(family, &mut r);
            let rd = random_readout(&spec, &mut r);
            let fwd = forward_operator(&spec, &rd).unwrap();
            let explicit = reversed_operator(&spec, &rd).unwrap();
            match reverse_rank2(&fwd) {
                Ok(g) => fam = fam.max(g.max_diff(&explicit)),
                Err(_) => skipped += 1,
            }
        }
    }
    outcome(
        worst < 1e-12 && fam < 1e-12 && skipped < 90,
        format!("identity residual {worst:.2e}, family mismatch {fam:.2e} (<1e-12), {skipped}/900 rank-deficient draws skipped"),
    )
}

fn driven_decay(seed: u64) -> SimConfig {
    SimConfig::fluorescence(3.0, 0.5 * PI, 4e-3, 4.0, seed).unwrap()
}

fn c3_c4_mirror() -> (Outcome, Outcome) {
    let psi = PureState::from_angles(PI / 2.0, 0.0);
    let target = time_reverse_state(&psi);
    let (mut worst_fid, mut worst_end, mut worst_mirror) = (1.0f64, 0.0f64, 0.0f64);
    let t = Instant::now();
    for seed in 0..100 {
        let fwd = simulate_forward(&psi, &driven_decay(seed)).unwrap();
        let bwd = unravel_backward(&fwd).unwrap();
        worst_fid = worst_fid.min(bwd.final_state.fidelity_with(&target));
        let end = *bwd.states.last().unwrap();
        worst_end = worst_end.max((end.x + 1.0).abs().max(end.y.abs()).max(end.z.abs()));
        worst_mirror = worst_mirror.max(mirror_deviation(&fwd, &bwd));
    }
    let el = t.elapsed().as_secs_f64();
    let c3 = outcome(
        worst_fid >= 1.0 - 1e-8 && el < 30.0,
        format!("min fidelity with (−1,0,0) = 1 − {:.2e}, max endpoint offset {worst_end:.2e}, 100 seeds [{el:.2} s]", 1.0 - worst_fid),
    );
    let c4 = outcome(worst_mirror < 1e-8, format!("max |b_j + f_(N−j)| = {worst_mirror:.2e} (<1e-8) over 100 records"));
    (c3, c4)
}

fn c5_prepost_closed_form() -> Outcome {
    let x_plus = PureState::from_angles(PI / 2.0, 0.0);
    let mut worst = 0.0f64;
    for g in [0.05, 0.25, 0.4, 0.5, 0.6, 0.75, 0.95] {
        let ch = vec![forward_operator(&ChannelSpec::dichotomous(g).unwrap(), &Readout::Binary(0)).unwrap()];
        let chain = OperatorChain::new(ch);
        let up = chain.prepost_arrow(&BoundaryPair { pre: x_plus, post: PureState::ground() }).unwrap();
        let down = chain.prepost_arrow(&BoundaryPair { pre: x_plus, post: PureState::excited() }).unwrap();
        let e1 = (up.log_r - (g / (1.0 - g)).ln()).abs();
        let e2 = (down.log_r - ((1.0 - g) / g).ln()).abs();
        worst = worst.max(e1).max(e2);
    }
    let mut r = rng(5);
    let mut zero = 0.0f64;
    for _ in 0..1000 {
        let g = r.random_range(0.01..0.99);
        let out = r.random_range(0..2);
        let m = forward_operator(&ChannelSpec::dichotomous(g).unwrap(), &Readout::Binary(out)).unwrap();
        let pre = common::state(&mut r);
        let post = time_reverse_state(&pre);
        let a = OperatorChain::new(vec![m]).prepost_arrow(&BoundaryPair { pre, post }).unwrap();
        zero = zero.max(a.log_r.abs());
    }
    let l = OperatorChain::new(vec![forward_operator(&ChannelSpec::dichotomous(0.25).unwrap(), &Readout::Binary(0)).unwrap()])
        .prepost_arrow(&BoundaryPair { pre: x_plus, post: PureState::ground() })
        .unwrap()
        .log_r;
    outcome(
        worst < 1e-14 && zero < 1e-12,
        format!("max |log_r − ln(γ/(1−γ))| = {worst:.1e}; γ=0.25 gives {l:.6}; time-reversed post max |log_r| = {zero:.1e}"),
    )
}

fn c6_vanishing() -> Outcome {
    let mut r = rng(6);
    let mut unit = 0.0f64;
    for _ in 0..1000 {
        let n = r.random_range(1..20);
        let chain = OperatorChain::new((0..n).map(|_| common::unitary(&mut r)).collect());
        let b = BoundaryPair { pre: common::state(&mut r), post: common::state(&mut r) };
        unit = unit.max(chain.prepost_arrow(&b).unwrap().log_r.abs());
    }
    let mut herm = 0.0f64;
    let mut herm_defect = 0.0f64;
    let (mut k, mut done, mut degenerate) = (0usize, 0, 0);
    while done < 1000 {
        k += 1;
        let ops: Vec<Operator2> = if k % 2 == 0 {
            // Palindrome H₁H₂⋯H_m⋯H₂H₁ of random Hermitian operators.
            let m = r.random_range(1..6);
            let hs: Vec<_> = (0..m).map(|_| common::hermitian(&mut r)).collect();
            hs.iter().chain(hs.iter().rev().skip(1)).copied().collect()
        } else {
            // Undriven Gaussian / dichotomous records: diagonal real steps.
            let spec = random_spec(k / 2 % 2, &mut r);
            (0..r.random_range(1..30)).map(|_| forward_operator(&spec, &random_readout(&spec, &mut r)).unwrap()).collect()
        };
        let prod = ops.iter().fold(Operator2::identity(), |acc, m| *m * acc);
        herm_defect = herm_defect.max(prod.max_diff(&prod.adjoint()) / prod.max_abs());
        let pre = common::state(&mut r);
        let b = BoundaryPair { pre, post: time_reverse_state(&pre) };
        let chain = OperatorChain::new(ops);
        // ⟨Θψ|𝓜|ψ⟩ vanishes when 𝓜 ∝ 𝕀 (e.g. balanced dichotomous
        // outcomes); both probabilities are then pure rounding noise.
        if chain.log_forward_prepost(&b) - chain.log_forward(&pre) < (1e-8f64).ln() {
            degenerate += 1;
            continue;
        }
        herm = herm.max(chain.prepost_arrow(&b).unwrap().log_r.abs());
        done += 1;
    }
    outcome(
        unit < 1e-12 && herm < 1e-12,
        format!(
            "unitary max |log_r| {unit:.1e}, Hermitian product max |log_r| {herm:.1e} \
             (relative non-Hermiticity {herm_defect:.1e}, {degenerate} near-scalar products redrawn)"
        ),
    )
}

fn c7_equivalence() -> Outcome {
    let mut r = rng(7);
    let mut worst = [0.0f64; 3];
    for (family, w) in worst.iter_mut().enumerate() {
        for _ in 0..1000 {
            let spec = random_spec(family, &mut r);
            let rd = random_readout(&spec, &mut r);
            let (pf, pr) = reverse_probability_equiv_check(&spec, &rd, &common::state(&mut r)).unwrap();
            *w = w.max((pf - pr).abs());
        }
    }
    outcome(
        worst.iter().all(|w| *w < 1e-12),
        format!("max |p_F − p_R|: gaussian {:.1e}, dichotomous {:.1e}, fluorescence {:.1e}", worst[0], worst[1], worst[2]),
    )
}

fn c8_ensemble() -> Outcome {
    let cfg = SimConfig::fluorescence(3.0, 0.5 * PI, 1e-3, 1.0, 8).unwrap();
    let rho = PureState::from_angles(PI / 2.0, 0.0).density();
    let e = fluorescence_ensemble_arrow(&rho, &cfg, 10_000).unwrap();
    let diff = (e.mean_mc - e.mean_analytic).abs();
    // For comparison: the variant that also subtracts γ₁∫⟨z⟩dt.
    let z = e.moments.mean_z();
    let zint: f64 = e.moments.times.windows(2).enumerate().map(|(k, w)| 0.5 * (w[1] - w[0]) * (z[k] + z[k + 1])).sum();
    outcome(
        diff <= 3.0 * e.stderr,
        format!(
            "MC {:.4} ± {:.4}, analytic {:.4}, |Δ| = {:.2} stderr (z-term variant {:.4} would be {:.1} stderr off)",
            e.mean_mc,
            e.stderr,
            e.mean_analytic,
            diff / e.stderr,
            e.mean_analytic - 3.0 * zint,
            (e.mean_mc - (e.mean_analytic - 3.0 * zint)).abs() / e.stderr
        ),
    )
}

fn c9_ground() -> Outcome {
    let (g, t) = (3.0, 4.0);
    let cfg = SimConfig::fluorescence(g, 0.0, 4e-3, t, 9).unwrap();
    let tr = simulate_forward(&PureState::ground(), &cfg).unwrap();
    let l = fluorescence_log_arrow(&tr).unwrap().log_r;
    outcome((l - g * t).abs() < 1e-10, format!("log_r = {l:.15} vs γ₁T = {} (|Δ| = {:.1e})", g * t, (l - g * t).abs()))
}

fn c10_sde_order() -> Outcome {
    let dts = [1e-2, 5e-3, 2.5e-3, 1.25e-3];
    let mut r = rng(10);
    let samples: Vec<_> = (0..2000)
        .map(|_| {
            let s = common::state(&mut r).bloch();
            let k: f64 = r.random_range(0.0..0.95);
            let b = qrev::qubit::BlochVector::new(s.x * k, s.y * k, s.z * k);
            (b, r.sample::<f64, _>(StandardNormal), r.sample::<f64, _>(StandardNormal))
        })
        .collect();
    let (g, w) = (3.0, 0.5 * PI);
    let mut errs = Vec::new();
    for &dt in &dts {
        let cfg = SimConfig::fluorescence(g, w, dt, dt, 0).unwrap();
        let c = (g / 2.0).sqrt();
        let mut worst = 0.0f64;
        for &(b, zx, zy) in &samples {
            let (i, q) = (c * b.x + zx / dt.sqrt(), c * b.y + zy / dt.sqrt());
            let kraus = forward_step(&DensityMatrix::from_bloch(b).unwrap(), &Readout::Heterodyne { i, q }, &cfg).unwrap().bloch();
            let sde = bloch_sde_step(b, i, q, &cfg).unwrap();
            worst = worst.max((kraus.x - sde.x).abs()).max((kraus.y - sde.y).abs()).max((kraus.z - sde.z).abs());
        }
        errs.push(worst);
    }
    let xs: Vec<f64> = dts.iter().map(|d: &f64| d.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 4.0, ys.iter().sum::<f64>() / 4.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    outcome(
        (1.3..=1.7).contains(&slope),
        format!("slope {slope:.3} in [1.3, 1.7]; max errors {:?}", errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>()),
    )
}

fn c11_weak() -> Outcome {
    let mut r = rng(11);
    let mut conj = 0.0f64;
    let mut n = 0;
    while n < 1000 {
        let s = Operator2::spin([r.sample(StandardNormal), r.sample(StandardNormal), r.sample(StandardNormal)]);
        let (a, b) = (common::state(&mut r), common::state(&mut r));
        if b.inner(&a).norm() <= 1e-3 {
            continue;
        }
        let w = weak_value(&s, &a, &b).unwrap();
        let rev = time_reversed_weak_value(&s, &a, &b).unwrap();
        conj = conj.max((rev + w.value.conj()).norm() / w.value.norm().max(1.0));
        n += 1;
    }
    let mut prob = 0.0f64;
    for _ in 0..1000 {
        let m = MeterModel::new(r.random_range(-3.0..3.0), r.random_range(0.1..2.0), r.random_range(0.2..3.0)).unwrap();
        let p = weak_protocol_probabilities(&common::state(&mut r), &common::state(&mut r), &m);
        prob = prob.max((p.forward - p.backward).abs()).max((p.forward - p.reverse).abs());
    }
    let mut ov = 0.0f64;
    for (k, tau, d) in [(1.0, 1.0, 1.0), (0.5, 2.0, 0.6), (2.0, 1.0, 1.5), (3.0, 1.0, 0.8)] {
        let m = MeterModel::new(k, tau, d).unwrap();
        let h = 0.5 * k * tau;
        let psi = |x: f64| (2.0 * PI * d * d).powf(-0.25) * (-x * x / (4.0 * d * d)).exp();
        let (l, pts) = (20.0 * (d + h), 40_001);
        let dx = 2.0 * l / (pts - 1) as f64;
        let num: f64 = (0..pts)
            .map(|j| {
                let x = -l + dx * j as f64;
                let wgt = if j == 0 || j == pts - 1 { 0.5 } else { 1.0 };
                wgt * dx * psi(x - h) * psi(x + h)
            })
            .sum();
        ov = ov.max((num - m.overlap()).abs());
    }
    outcome(
        conj < 1e-12 && prob < 1e-12 && ov < 1e-10,
        format!("|S̃_w + S_w*| {conj:.1e}, max protocol mismatch {prob:.1e}, overlap vs integral {ov:.1e}"),
    )
}

/// Path-sum oracle over pure-state branches.
fn brute_force(record: &[usize], psi: &PureState, ch: &[Vec<Operator2>]) -> (f64, f64) {
    let mut paths: Vec<Vec<usize>> = vec![vec![]];
    for &r in record {
        paths = paths.into_iter().flat_map(|p| (0..ch[r].len()).map(move |s| [p.clone(), vec![s]].concat())).collect();
    }
    let mut pf = 0.0;
    let mut finals = Vec::new();
    for p in &paths {
        let mut v = psi.amplitudes();
        for (&r, &s) in record.iter().zip(p) {
            v = ch[r][s].apply(v);
        }
        let w = v[0].norm_sqr() + v[1].norm_sqr();
        pf += w;
        if w > 0.0 {
            finals.push((p.clone(), w, [v[0] / w.sqrt(), v[1] / w.sqrt()]));
        }
    }
    let mut pb = 0.0;
    for (p, w, v) in finals {
        let mut u: [C64; 2] = time_reverse_ket(v);
        for (&r, &s) in record.iter().zip(&p).rev() {
            u = ch[r][s].adjoint().apply(u);
        }
        pb += (w / pf) * (u[0].norm_sqr() + u[1].norm_sqr());
    }
    (pf, pb)
}

fn c12_imperfect() -> Outcome {
    let mut r = rng(12);
    let mut perfect = 0.0f64;
    for _ in 0..500 {
        let n = r.random_range(2..4);
        let ops = common::kraus(&mut r, n);
        let ch = CoarseChannel::perfect(ops.clone()).unwrap();
        let record: Vec<usize> = (0..r.random_range(1..8)).map(|_| r.random_range(0..ops.len())).collect();
        let psi = common::state(&mut r);
        let chain = OperatorChain::new(record.iter().map(|&k| ops[k]).collect());
        let want = chain.arrow_from(&psi).unwrap().log_r;
        let got = imperfect_log_arrow(&record, &psi.density(), &ch).unwrap().log_r;
        perfect = perfect.max((got - want).abs());
    }
    let mut brute = 0.0f64;
    let mut residual = 0.0f64;
    for _ in 0..200 {
        let fine = common::kraus(&mut r, 3);
        residual = residual.max(common::completeness(&fine));
        let parts = vec![vec![fine[0], fine[1]], vec![fine[2]]];
        let ch = CoarseChannel::new(parts.clone()).unwrap();
        let psi = common::state(&mut r);
        let mut step_total = 0.0;
        for rec in [[0, 0], [0, 1], [1, 0], [1, 1]] {
            let (pf, pb) = brute_force(&rec, &psi, &parts);
            let f = imperfect_forward_probability(&rec, &psi.density(), &ch).unwrap();
            let ens = branch_ensemble(&rec, &psi.density(), &ch).unwrap();
            let b = imperfect_backward_probability(&rec, &ens, &ch).unwrap();
            let l = imperfect_log_arrow(&rec, &psi.density(), &ch).unwrap().log_r;
            brute = brute.max((f - pf).abs()).max((b - pb).abs()).max((l - (pf / pb).ln()).abs());
            step_total += f;
        }
        brute = brute.max((step_total - 1.0).abs());
    }
    outcome(
        perfect < 1e-12 && brute < 1e-12,
        format!("perfect-case |Δlog_r| {perfect:.1e}, path-sum oracle mismatch {brute:.1e} (fine POVM residual {residual:.1e})"),
    )
}

fn main() {
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    results.push((1, "POVM completeness", timed(Some(Duration::from_secs(10)), c1_completeness)));
    results.push((2, "generic rank-2 reversal", timed(Some(Duration::from_secs(1)), c2_generic_reversal)));
    let (c3, c4) = c3_c4_mirror();
    results.push((3, "driven-decay backward endpoint", c3));
    results.push((4, "mirror property", c4));
    results.push((5, "pre/post arrow closed form", timed(None, c5_prepost_closed_form)));
    results.push((6, "vanishing-arrow theorems", timed(None, c6_vanishing)));
    results.push((7, "forward/reverse probability equality", timed(None, c7_equivalence)));
    results.push((8, "Monte Carlo vs analytic mean arrow", timed(Some(Duration::from_secs(300)), c8_ensemble)));
    results.push((9, "ground-state arrow limit", timed(None, c9_ground)));
    results.push((10, "Kraus/SDE oracle order", timed(None, c10_sde_order)));
    results.push((11, "weak-value conjugation", timed(None, c11_weak)));
    results.push((12, "imperfect-detection reduction", timed(None, c12_imperfect)));

    let mut failed = 0;
    for (n, name, o) in &results {
        println!("criterion {n:>2} {} — {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
