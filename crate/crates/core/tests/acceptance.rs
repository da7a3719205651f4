use std::io::Write;
use std::time::{Duration, Instant};

use gatecap::canonical::{cnot, decompose, random_gate, swap, Gate};
use gatecap::capacity::{disentangling_capability, entangling_capability, CapacitySearchConfig};
use gatecap::cli::verify_chain;
use gatecap::ensembles::{
    appendix_b_ensemble, build_bidirectional_ensemble, build_unidirectional_ensemble,
    canonical_source, chi_up, counterexample_ensemble, delta_chi_bidir, delta_chi_oneway,
    depolarization_residual, holevo_chi, ChiBounds, CorrectionMaps, Flow,
};
use gatecap::protocol::bounds::holevo_lower_bound;
use gatecap::protocol::{
    eta_entanglement, library, message_fidelity, receiver_ensembles, reverse_protocol, LocalOp,
    ProtocolScript,
};
use gatecap::qmath::linalg::{self, c, CMat};
use gatecap::qmath::{
    fannes_bound, fidelity_pure_mixed, trace_distance, DensityOperator, PartitionedState, Party,
    Role, Subsystem, SubsystemLayout,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Criterion {
    id: u32,
    title: &'static str,
    start: Instant,
    limit: Option<Duration>,
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Criterion {
    fn new(id: u32, title: &'static str, limit: Option<Duration>) -> Self {
        Criterion {
            id,
            title,
            start: Instant::now(),
            limit,
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        if ok {
            self.notes.push(what);
        } else {
            self.failures.push(what);
        }
    }

    fn close(mut self, label: &str) -> Self {
        if let Some(limit) = self.limit {
            let took = self.start.elapsed();
            self.check(
                took <= limit,
                format!("{label}: {took:.2?} within {limit:?}"),
            );
        }
        self
    }

    fn finish(self) {
        let took = self.start.elapsed();
        let status = if self.failures.is_empty() {
            "PASS"
        } else {
            "FAIL"
        };
        // Written directly so the summary line survives output capture.
        let _ = writeln!(
            std::io::stdout(),
            "[{status}] criterion {}: {} ({took:.2?})",
            self.id,
            self.title
        );
        for n in &self.notes {
            println!("    ok   {n}");
        }
        for f in &self.failures {
            println!("    FAIL {f}");
        }
        assert!(
            self.failures.is_empty(),
            "criterion {} failed: {:?}",
            self.id,
            self.failures
        );
    }
}

fn cfg() -> CapacitySearchConfig {
    CapacitySearchConfig::default()
}

fn named_gates(randoms: u64) -> Vec<(String, Gate)> {
    let mut out = vec![("cnot".to_string(), cnot()), ("swap".to_string(), swap())];
    out.extend((0..randoms).map(|s| (format!("random:{s}"), random_gate(s))));
    out
}

// Eigenvalues of a Hermitian matrix through its real symmetric embedding
// [[Re, -Im], [Im, Re]], whose spectrum is the original one doubled.
fn oracle_spectrum(m: &CMat) -> Vec<f64> {
    let n = m.nrows();
    let real = DMatrix::<f64>::from_fn(2 * n, 2 * n, |i, j| {
        let z = m[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let mut ev: Vec<f64> = real.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}

fn oracle_entropy(m: &CMat) -> f64 {
    oracle_spectrum(m)
        .into_iter()
        .filter(|&l| l > 1e-15)
        .map(|l| -l * l.log2())
        .sum()
}

fn oracle_trace_distance(a: &CMat, b: &CMat) -> f64 {
    oracle_spectrum(&(a - b)).iter().map(|l| l.abs()).sum()
}

fn random_density<R: Rng>(dim: usize, rng: &mut R) -> CMat {
    let rank = rng.random_range(1..=dim);
    let mut m = CMat::zeros(dim, dim);
    for _ in 0..rank {
        let v = linalg::haar_vector(dim, rng);
        m += &v * v.adjoint() * c(rng.random_range(0.05..1.0), 0.0);
    }
    let t = linalg::trace(&m);
    m / t
}

fn single(dim: usize) -> SubsystemLayout {
    SubsystemLayout::new(vec![Subsystem::new(dim, Party::Alice, Role::Ancilla)]).unwrap()
}

fn random_hermitian<R: Rng>(dim: usize, rng: &mut R) -> CMat {
    let u = linalg::haar_unitary(dim, rng);
    let d = CMat::from_fn(dim, dim, |i, j| {
        if i == j {
            c(rng.random_range(-1.0..1.0), 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    &u * d * u.adjoint()
}

// A shipped script with one small random local rotation inserted.
fn noisy_script<R: Rng>(base: &[ProtocolScript], max_angle: f64, rng: &mut R) -> ProtocolScript {
    let s = &base[rng.random_range(0..base.len())];
    let party = if rng.random_bool(0.5) {
        Party::Alice
    } else {
        Party::Bob
    };
    let own = s.layout().party_indices(party);
    let target = own[rng.random_range(0..own.len())];
    let dim = s.layout().dims()[target];
    let local_steps: Vec<usize> = (0..s.steps().len()).step_by(2).collect();
    let step = local_steps[rng.random_range(0..local_steps.len())];
    let angle = rng.random_range(0.0..max_angle);
    let op = linalg::expm_hermitian(&random_hermitian(dim, rng), angle);
    s.with_local_op(step, LocalOp::new(party, vec![target], op))
        .unwrap()
}

#[test]
fn criterion_1_entangling_capability_of_cnot_and_swap() {
    let mut k = Criterion::new(1, "E_U(CNOT) = 1 and E_U(SWAP) = 2 within 1e-3", None);
    for (name, gate, expect) in [("cnot", cnot(), 1.0), ("swap", swap(), 2.0)] {
        let start = Instant::now();
        let r = entangling_capability(&gate, &cfg()).unwrap();
        let took = start.elapsed();
        k.check(
            (r.value - expect).abs() <= 1e-3,
            format!("E_U({name}) = {:.9}", r.value),
        );
        k.check(
            took <= Duration::from_secs(60),
            format!("{name} search took {took:.2?}"),
        );
    }
    k.finish();
}

#[test]
fn criterion_2_disentangling_equals_entangling() {
    let mut k = Criterion::new(
        2,
        "E_U^- = E_U within 2e-3 on CNOT, SWAP and 10 random gates",
        Some(Duration::from_secs(15 * 60)),
    );
    for (name, gate) in named_gates(10) {
        let up = entangling_capability(&gate, &cfg()).unwrap().value;
        let down = disentangling_capability(&gate, &cfg()).unwrap().value;
        k.check(
            (up - down).abs() <= 2e-3,
            format!("{name}: E_U = {up:.6}, E_U^- = {down:.6}"),
        );
    }
    k.close("total").finish();
}

#[test]
fn criterion_3_kak_round_trip() {
    let mut k = Criterion::new(
        3,
        "KAK round trip and named canonical parameters",
        Some(Duration::from_secs(10)),
    );
    let q = std::f64::consts::FRAC_PI_4;
    let worst = (0..1000)
        .map(|s| {
            let g = random_gate(s);
            decompose(&g).unwrap().reconstruction_error(&g)
        })
        .fold(0.0, f64::max);
    k.check(
        worst <= 1e-9,
        format!("worst residual over 1000 gates {worst:.2e}"),
    );
    for (name, gate, expect) in [("cnot", cnot(), [q, 0.0, 0.0]), ("swap", swap(), [q, q, q])] {
        let a = decompose(&gate).unwrap().alphas;
        let gap = a
            .iter()
            .zip(expect)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        k.check(gap <= 1e-9, format!("{name}: alphas {a:?}, gap {gap:.1e}"));
    }
    k.close("runtime").finish();
}

// Bob's side of the four-member average, built without the ensemble code.
fn oracle_depolarization(psi: &PartitionedState) -> f64 {
    let dims = psi.layout().dims();
    let (da, db) = (dims[0], dims[3]);
    let v = psi.amplitudes();
    let rho = v * v.adjoint();
    let mut avg = CMat::zeros(rho.nrows(), rho.nrows());
    for p in 0..4 {
        let op = linalg::kron(
            &linalg::kron(
                &linalg::identity(da),
                &linalg::kron(&linalg::pauli(p), &linalg::pauli(p)),
            ),
            &linalg::identity(db),
        );
        avg += &op * &rho * op.adjoint() * c(0.25, 0.0);
    }
    let lhs = linalg::trace_out(&avg, &dims, &[2, 3]);
    let rhs = linalg::kron(
        &(linalg::identity(2) * c(0.5, 0.0)),
        &linalg::trace_out(&rho, &dims, &[3]),
    );
    linalg::max_abs_diff(&lhs, &rhs)
}

#[test]
fn criterion_4_unidirectional_ensemble() {
    let mut k = Criterion::new(4, "depolarization identity and one-way gain E_U", None);
    for (name, gate) in named_gates(5) {
        let e_u = entangling_capability(&gate, &cfg()).unwrap().value;
        let src = canonical_source(&gate, &cfg()).unwrap();
        let res = depolarization_residual(&src.state).unwrap();
        let oracle = oracle_depolarization(&src.state);
        k.check(
            res <= 1e-12 && oracle <= 1e-12,
            format!("{name}: residual {res:.1e}, oracle {oracle:.1e}"),
        );
        let e = build_unidirectional_ensemble(&src.state).unwrap();
        for flow in [Flow::AliceToBob, Flow::BobToAlice] {
            let d = delta_chi_oneway(&src.ud, &e, flow).unwrap();
            k.check(
                (d - e_u).abs() <= 2e-3,
                format!("{name} {flow:?}: dchi {d:.6} vs E_U {e_u:.6}"),
            );
        }
    }
    k.finish();
}

fn bounds_coincide(b: &ChiBounds) -> bool {
    (b.lo_forward - b.up_forward).abs() <= 1e-10 && (b.lo_backward - b.up_backward).abs() <= 1e-10
}

#[test]
fn criterion_5_bidirectional_ensemble() {
    let mut k = Criterion::new(
        5,
        "two-way bounds coincide, gain 2 E_U, counterexample 1 bit",
        None,
    );
    for (name, gate) in named_gates(5) {
        let e_u = entangling_capability(&gate, &cfg()).unwrap().value;
        let src = canonical_source(&gate, &cfg()).unwrap();
        let e = build_bidirectional_ensemble(&src.state).unwrap();
        let maps = CorrectionMaps::pauli(e.layout()).unwrap();
        let d = delta_chi_bidir(&src.ud, &e, &maps).unwrap();
        k.check(
            bounds_coincide(&d.before) && bounds_coincide(&d.after),
            format!("{name}: chi_lo = chi_up before and after"),
        );
        k.check(
            (d.value - 2.0 * e_u).abs() <= 4e-3,
            format!("{name}: dchi {:.6} vs 2 E_U {:.6}", d.value, 2.0 * e_u),
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let layout = SubsystemLayout::ancilla_extended(2, 2).unwrap();
    for s in 0..5 {
        let phi = PartitionedState::new(linalg::haar_vector(16, &mut rng), layout.clone()).unwrap();
        let e = build_bidirectional_ensemble(&phi).unwrap();
        let maps = CorrectionMaps::pauli(e.layout()).unwrap();
        let b = ChiBounds::of(&e, &maps).unwrap();
        k.check(
            bounds_coincide(&b),
            format!("random source {s}: chi_lo = chi_up"),
        );
    }
    let ce = counterexample_ensemble();
    let total = chi_up(&ce, Flow::AliceToBob).unwrap() + chi_up(&ce, Flow::BobToAlice).unwrap();
    k.check(
        (total - 1.0).abs() <= 1e-12,
        format!("counterexample total {total:.15}"),
    );
    k.finish();
}

#[test]
fn criterion_6_product_ensemble_marginals() {
    let mut k = Criterion::new(
        6,
        "product ensemble marginals match entrywise to 1e-12",
        None,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let layout = SubsystemLayout::ancilla_extended(2, 2).unwrap();
    for s in 0..5 {
        let phi = PartitionedState::new(linalg::haar_vector(16, &mut rng), layout.clone()).unwrap();
        let pure = build_bidirectional_ensemble(&phi).unwrap();
        let prod = appendix_b_ensemble(&phi).unwrap();
        let mut worst: f64 = 0.0;
        for party in [Party::Alice, Party::Bob] {
            let (a, b) = (
                pure.marginals(party).unwrap(),
                prod.marginals(party).unwrap(),
            );
            for (ra, rb) in a.iter().zip(&b) {
                for (x, y) in ra.iter().zip(rb) {
                    worst = worst.max(linalg::max_abs_diff(x.matrix(), y.matrix()));
                }
            }
        }
        k.check(
            worst <= 1e-12,
            format!("source {s}: largest difference {worst:.2e}"),
        );
    }
    k.finish();
}

fn fixture(name: &str) -> ProtocolScript {
    let path = format!("{}/scripts/{name}.json", env!("CARGO_MANIFEST_DIR"));
    ProtocolScript::load(&path).unwrap()
}

#[test]
fn criterion_7_protocol_algebra_at_zero_error() {
    let mut k = Criterion::new(
        7,
        "superposition closed form and ancilla-returning round",
        None,
    );
    for script in library::shipped_scripts().unwrap() {
        let loaded = fixture(script.name());
        k.check(
            loaded == script,
            format!("{}: fixture equals builder", script.name()),
        );
        let a = eta_entanglement(&loaded).unwrap();
        k.check(
            a.eps == 0.0 && (a.closed_form - a.direct).abs() <= 1e-9,
            format!(
                "{}: closed {:.12} direct {:.12}",
                script.name(),
                a.closed_form,
                a.direct
            ),
        );
    }
    for name in ["cnot-assisted", "swap-assisted"] {
        let r = reverse_protocol(&fixture(name))
            .unwrap()
            .evaluate()
            .unwrap();
        k.check(
            r.min_ancilla_fidelity >= 1.0 - 1e-9,
            format!("{name}: ancilla fidelity {:.15}", r.min_ancilla_fidelity),
        );
        k.check(
            r.min_delivery >= 1.0 - 1e-12 && r.min_fidelity >= 1.0 - 1e-9,
            format!(
                "{name}: delivery {:.15}, fidelity {:.15}",
                r.min_delivery, r.min_fidelity
            ),
        );
    }
    k.finish();
}

#[test]
fn criterion_8_bound_suite() {
    let mut k = Criterion::new(
        8,
        "Fannes, F-T, overlap and receiver bounds on 1000 instances each",
        Some(Duration::from_secs(120)),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(88);

    let mut fannes_bad = 0;
    let mut slack = f64::INFINITY;
    for _ in 0..1000 {
        let dim = [2, 3, 4, 8][rng.random_range(0..4)];
        let rho = random_density(dim, &mut rng);
        let p = rng.random_range(0.0..0.18);
        let sigma = &rho * c(1.0 - p, 0.0) + random_density(dim, &mut rng) * c(p, 0.0);
        let t = oracle_trace_distance(&rho, &sigma);
        let lib_t = trace_distance(
            &DensityOperator::new(rho.clone(), single(dim)).unwrap(),
            &DensityOperator::new(sigma.clone(), single(dim)).unwrap(),
        )
        .unwrap();
        let gap = oracle_entropy(&rho) - oracle_entropy(&sigma);
        let rhs = fannes_bound(t, dim).unwrap();
        slack = slack.min(rhs - gap.abs());
        if gap.abs() > rhs + 1e-12 || (lib_t - t).abs() > 1e-10 {
            fannes_bad += 1;
        }
    }
    k.check(
        fannes_bad == 0,
        format!("Fannes: {fannes_bad} violations, least slack {slack:.2e}"),
    );

    let mut ft_bad = 0;
    for _ in 0..1000 {
        let dim = [2, 4, 8, 16][rng.random_range(0..4)];
        let psi = linalg::haar_vector(dim, &mut rng);
        let p = rng.random_range(0.0..1.0f64).powi(3);
        let rho =
            &psi * psi.adjoint() * c(1.0 - p, 0.0) + random_density(dim, &mut rng) * c(p, 0.0);
        let state = PartitionedState::new(psi.clone(), single(dim)).unwrap();
        let eps = 1.0
            - fidelity_pure_mixed(
                &state,
                &DensityOperator::new(rho.clone(), single(dim)).unwrap(),
            )
            .unwrap();
        let t = oracle_trace_distance(&(&psi * psi.adjoint()), &rho);
        if t > 2.0 * eps.max(0.0).sqrt() + 1e-12 {
            ft_bad += 1;
        }
    }
    k.check(ft_bad == 0, format!("F-T: {ft_bad} violations"));

    let base = library::shipped_scripts().unwrap();
    let mut overlap_bad = 0;
    let mut max_eps: f64 = 0.0;
    for _ in 0..1000 {
        let s = noisy_script(&base, 0.6, &mut rng);
        let a = eta_entanglement(&s).unwrap();
        max_eps = max_eps.max(a.eps);
        if a.overlap < 1.0 - a.eps - 1e-12 {
            overlap_bad += 1;
        }
    }
    k.check(
        overlap_bad == 0,
        format!("overlap: {overlap_bad} violations, eps up to {max_eps:.3}"),
    );

    let cap = (1.0 / (2.0 * std::f64::consts::E)).powi(2);
    let (mut tried, mut kept, mut chi_bad) = (0, 0, 0);
    while kept < 1000 {
        tried += 1;
        let s = noisy_script(&base, 0.25, &mut rng);
        let r = message_fidelity(&s).unwrap();
        if r.eps > cap {
            continue;
        }
        kept += 1;
        let (at_alice, at_bob) = receiver_ensembles(&s, &r).unwrap();
        let n = s.n_a().max(s.n_b());
        let alice_ok =
            holevo_chi(&at_alice).unwrap() >= holevo_lower_bound(s.n_b(), n, r.eps) - 1e-12;
        let bob_ok = holevo_chi(&at_bob).unwrap() >= holevo_lower_bound(s.n_a(), n, r.eps) - 1e-12;
        if !(alice_ok && bob_ok) {
            chi_bad += 1;
        }
    }
    k.check(
        chi_bad == 0,
        format!("receiver: {chi_bad} violations over {kept} instances ({tried} drawn)"),
    );
    k.close("runtime").finish();
}

#[test]
fn criterion_9_capacity_chain() {
    let mut k = Criterion::new(9, "chain links equal for CNOT and SWAP within 4e-3", None);
    for (name, gate, expect) in [("cnot", cnot(), 2.0), ("swap", swap(), 4.0)] {
        let r = verify_chain(&gate, &cfg()).unwrap();
        let all = r
            .chain
            .iter()
            .all(|v| v.is_some_and(|x| (x - expect).abs() <= 4e-3));
        k.check(all, format!("{name}: chain {:?}", r.chain));
    }
    k.finish();
}
