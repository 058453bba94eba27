use proptest::collection::vec;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mpdg::cases::euler::ContactWave;
use mpdg::config::{CaseConfig, CASE_IDS};
use mpdg::dg::{DgField, PointSet};
use mpdg::integrators::{integrate, mp_stage_solve, IntegratorKind, StageWeights};
use mpdg::limiter::{check_average, check_field, limit_cell, DEFAULT_EPSILON};
use mpdg::pds::{ProductionDestruction, RateMatrix};
use mpdg::solver::Solver;
use mpdg::verify::{exact_stage_solve, limiter_spaces, patankar_schemes, random_cell};

/// `p_ij = k_ij c_j`, optionally saturating in `c_j`.
#[derive(Debug, Clone)]
struct Kinetics {
    k: Vec<Vec<f64>>,
    saturating: bool,
}

impl ProductionDestruction for Kinetics {
    fn species_count(&self) -> usize {
        self.k.len()
    }

    fn production(&self, c: &[f64], out: &mut RateMatrix) {
        for (i, row) in self.k.iter().enumerate() {
            for (j, &k) in row.iter().enumerate() {
                if i != j && k > 0.0 {
                    let g = if self.saturating { 1.0 / (1.0 + c[j]) } else { 1.0 };
                    out.set(i, j, k * c[j] * g);
                }
            }
        }
    }
}

fn log_uniform(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo..hi).prop_map(|e| 10f64.powf(e))
}

fn kinetics() -> impl Strategy<Value = (Kinetics, Vec<f64>)> {
    (2usize..=5).prop_flat_map(|m| {
        let rate = prop_oneof![Just(0.0), log_uniform(-2.0, 2.0)];
        (vec(vec(rate, m), m), any::<bool>(), vec(log_uniform(-8.0, 2.0), m))
            .prop_map(|(k, saturating, c0)| (Kinetics { k, saturating }, c0))
    })
}

fn scheme() -> impl Strategy<Value = IntegratorKind> {
    let all = patankar_schemes();
    (0..all.len()).prop_map(move |i| all[i])
}

fn conservative_stage() -> impl Strategy<Value = (StageWeights, f64)> {
    (2usize..=3).prop_flat_map(|m| {
        let rate = prop_oneof![Just(0.0), log_uniform(-2.0, 1.0)];
        (vec(log_uniform(-3.0, 1.0), m), vec(vec(rate, m), m), vec(log_uniform(-2.0, 1.0), m), log_uniform(-3.0, 3.0))
            .prop_map(|(b, w, sigma, dt)| {
                let mut rates = RateMatrix::zeros(b.len());
                for (i, row) in w.iter().enumerate() {
                    for (j, &v) in row.iter().enumerate() {
                        if i != j {
                            rates.set(i, j, v);
                        }
                    }
                }
                (StageWeights::conservative(b, rates, sigma), dt)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn patankar_steps_stay_positive_and_conserve((sys, c0) in kinetics(), kind in scheme(), dt in log_uniform(-3.0, 3.0)) {
        let traj = integrate(&sys, kind, &c0, 0.0, 6.0 * dt, dt, None, 1).unwrap();
        let total: f64 = c0.iter().sum();
        for c in &traj.states {
            prop_assert!(c.iter().all(|&v| v > 0.0), "{} gave {c:?}", kind.label());
            prop_assert!((c.iter().sum::<f64>() - total).abs() <= 1e-12 * total);
        }
    }

    #[test]
    fn stage_solve_matches_exact_arithmetic((w, dt) in conservative_stage()) {
        let x = mp_stage_solve(&w, dt).unwrap();
        let exact = exact_stage_solve(&w, dt).unwrap();
        for (a, e) in x.iter().zip(&exact) {
            prop_assert!(*a > 0.0);
            prop_assert!((a - e).abs() <= 1e-13 * e.abs(), "{a} vs {e}");
        }
    }

    #[test]
    fn limiter_keeps_averages_and_is_idempotent(seed in any::<u64>(), which in 0usize..64, set in 0usize..3) {
        let spaces = limiter_spaces().unwrap();
        let (space, eos) = &spaces[which % spaces.len()];
        let set = [PointSet::Gauss, PointSet::Interface, PointSet::All][set];
        let nv = space.layout.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cell = random_cell(&mut rng, space, eos).unwrap();
        let before = space.cell_average(&cell, nv);
        prop_assume!(check_average(eos, &space.layout, &before).is_ok());
        let scale: Vec<f64> = (0..nv).map(|v| cell.chunks(nv).fold(before[v].abs(), |a, n| a.max(n[v].abs()))).collect();
        limit_cell(space, eos, &mut cell, set, DEFAULT_EPSILON).unwrap();
        let after = space.cell_average(&cell, nv);
        for v in 0..nv {
            prop_assert!((after[v] - before[v]).abs() <= 1e-13 * scale[v]);
        }
        let mut field = DgField::zeros(1, cell.len() / nv, nv);
        field.data.copy_from_slice(&cell);
        let bounds = check_field(space, eos, &field, set).unwrap();
        prop_assert!(bounds.min_density > 0.0 && bounds.min_pressure > 0.0 && bounds.min_partial_density >= 0.0);
        let mut again = cell.clone();
        limit_cell(space, eos, &mut again, set, DEFAULT_EPSILON).unwrap();
        for (q, (a, b)) in again.iter().zip(&cell).enumerate() {
            prop_assert!((a - b).abs() <= 1e-13 * scale[q % nv]);
        }
    }

    #[test]
    fn configs_survive_a_json_round_trip(id in 0usize..CASE_IDS.len(), t_final in 1e-3f64..1.0, limiter in any::<bool>()) {
        let base = CaseConfig::defaults(CASE_IDS[id]).unwrap();
        let mut overrides = vec![format!("t_final={t_final:e}")];
        if base.flow_setup().is_some() {
            overrides.push(format!("scheme.limiter={limiter}"));
        }
        let cfg = base.with_overrides(&overrides).unwrap();
        let back = CaseConfig::from_json(&cfg.to_json().unwrap(), None).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

fn totals(solver: &Solver) -> Vec<f64> {
    let averages = solver.problem.space.cell_averages(solver.field());
    (0..solver.field().vars).map(|v| averages.iter().map(|a| a[v]).sum()).collect()
}

#[test]
fn periodic_runs_conserve_every_total() {
    for (dim, degree) in [(1, 1), (1, 2), (2, 1)] {
        let wave = ContactWave { dim, degree, cells: 12, t_final: 10.0, ..Default::default() };
        let setup = wave.build().unwrap();
        let mut solver = Solver::new(setup.problem, setup.scheme, setup.initial).unwrap();
        let start = totals(&solver);
        for _ in 0..100 {
            solver.advance(setup.t_final).unwrap();
        }
        let end = totals(&solver);
        let scale = start.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        for (v, (a, b)) in start.iter().zip(&end).enumerate() {
            assert!((a - b).abs() <= 1e-10 * scale, "dim {dim} k {degree} variable {v}: {a} -> {b}");
        }
    }
}
