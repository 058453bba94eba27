//! Acceptance checks, one per criterion, shared by the `verify` command and
//! the acceptance test target.

use std::fmt;
use std::time::Instant;

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cases::euler::{Blast, ContactWave, Diffraction, Setup, ShockTube};
use crate::chemistry::{Eos, SpeciesTable};
use crate::config::{LinearOde, NonlinearOde};
use crate::dg::{lax_friedrichs_flux, physical_flux, DgField, DgSpace, Mesh, PointSet, Rect};
use crate::integrators::{integrate, mp_stage_solve, IntegratorKind, StageWeights};
use crate::limiter::{check_average, check_field, limit_cell, PointBounds, DEFAULT_EPSILON};
use crate::pds::{ProductionDestruction, RateMatrix};
use crate::solver::{SchemeConfig, Solver, FRACTION_TOLERANCE};
use crate::state::{Layout, Primitive};
use crate::study::{self, ConvergenceTable};
use crate::{Error, Result};

/// Reference errors and orders of the linear problem on the halving ladder.
pub const LINEAR_MPMS2_ERRORS: [f64; 5] = [1.88e-2, 4.56e-3, 1.09e-3, 2.75e-4, 6.97e-5];
pub const LINEAR_MPMS2_ORDERS: [f64; 4] = [2.04, 2.07, 1.99, 1.98];
pub const LINEAR_MPMS3_ERRORS: [f64; 5] = [1.03e-3, 1.27e-4, 1.58e-5, 2.04e-6, 2.61e-7];
pub const LINEAR_MPMS3_ORDERS: [f64; 4] = [3.02, 3.00, 2.96, 2.97];
/// Reference errors of the nonlinear problem.
pub const NONLINEAR_MPMS2_ERRORS: [f64; 5] = [2.13e-3, 4.43e-4, 1.14e-4, 2.72e-5, 6.76e-6];
pub const NONLINEAR_MPMS3_ERRORS: [f64; 5] = [3.67e-4, 3.68e-5, 4.115e-6, 4.87e-7, 5.924e-8];

/// `σ` exponents used for the ODE tables.
pub const TABLE_MPMS2: IntegratorKind = IntegratorKind::Mpms2 { s: 0.0 };
pub const TABLE_MPMS3: IntegratorKind = IntegratorKind::Mpms3 { s: 2.75 };

/// Mesh ladder of the DG order study.
pub const DG_LADDER: [usize; 4] = [20, 40, 80, 160];

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone)]
pub struct Check {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "criterion {:>2} {verdict}  {} [{:.2} s] {}", self.id, self.title, self.seconds, self.detail)
    }
}

fn check(id: u8, title: &'static str, budget: Option<f64>, body: impl FnOnce() -> Result<(bool, String)>) -> Check {
    let start = Instant::now();
    let outcome = body();
    let seconds = start.elapsed().as_secs_f64();
    let (mut passed, mut detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    if let Some(limit) = budget {
        if seconds > limit {
            passed = false;
            detail.push_str(&format!("; exceeds the {limit} s budget"));
        }
    }
    Check { id, title, passed, detail, seconds }
}

fn fmt_list(v: &[f64], prec: usize) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:.prec$}")).collect();
    format!("[{}]", items.join(", "))
}

fn fmt_sci(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", items.join(", "))
}

fn errors(t: &ConvergenceTable) -> Vec<f64> {
    t.rows.iter().map(|r| r.error).collect()
}

/// Least-squares slope of `log e` against `log h`.
pub fn loglog_slope(t: &ConvergenceTable) -> f64 {
    let pts: Vec<(f64, f64)> = t.rows.iter().map(|r| (r.step.ln(), r.error.ln())).collect();
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn within_orders(t: &ConvergenceTable, target: &[f64], tol: f64) -> bool {
    let orders = t.orders();
    orders.len() == target.len() && orders.iter().zip(target).all(|(p, q)| (p - q).abs() <= tol)
}

/// Criterion 1: linear problem orders within ±0.2 of the reference column,
/// errors within a factor of 2, under 1 s.
pub fn linear_tables() -> Check {
    check(1, "linear ODE convergence table", Some(1.0), || {
        let cfg = LinearOde::default();
        let mut ok = true;
        let mut detail = Vec::new();
        for (kind, ref_err, ref_ord) in
            [(TABLE_MPMS2, LINEAR_MPMS2_ERRORS, LINEAR_MPMS2_ORDERS), (TABLE_MPMS3, LINEAR_MPMS3_ERRORS, LINEAR_MPMS3_ORDERS)]
        {
            let t = study::linear_convergence(&cfg, kind)?;
            let e = errors(&t);
            let factor_ok = e.len() == ref_err.len() && e.iter().zip(&ref_err).all(|(a, b)| a / b <= 2.0 && b / a <= 2.0);
            let order_ok = within_orders(&t, &ref_ord, 0.2);
            ok &= factor_ok && order_ok;
            detail.push(format!("{}: errors {} orders {}", t.label, fmt_sci(&e), fmt_list(&t.orders(), 2)));
        }
        Ok((ok, detail.join("; ")))
    })
}

/// Criterion 2: nonlinear problem orders within ±0.3 of 2 and 3 on every
/// row against the fine-step reference, under 10 s.
pub fn nonlinear_tables() -> Check {
    check(2, "nonlinear ODE convergence table", Some(10.0), || {
        let cfg = NonlinearOde::default();
        let reference = study::nonlinear_reference(&cfg)?;
        let mut ok = true;
        let mut detail = Vec::new();
        for (kind, order, ref_err) in [(TABLE_MPMS2, 2.0, NONLINEAR_MPMS2_ERRORS), (TABLE_MPMS3, 3.0, NONLINEAR_MPMS3_ERRORS)] {
            let t = study::nonlinear_convergence(&cfg, kind, &reference)?;
            ok &= within_orders(&t, &[order; 4], 0.3);
            let ratio: Vec<f64> = errors(&t).iter().zip(&ref_err).map(|(a, b)| a / b).collect();
            detail.push(format!(
                "{}: errors {} orders {} (ratio to reference errors {})",
                t.label,
                fmt_sci(&errors(&t)),
                fmt_list(&t.orders(), 2),
                fmt_list(&ratio, 2)
            ));
        }
        Ok((ok, detail.join("; ")))
    })
}

/// Random production–destruction system: each active pair `(i, j)` has
/// `p_ij = k c_j g(c)` with `g` one of `1`, `1/(1 + c_j)`, `c_l`.
#[derive(Debug, Clone)]
pub struct RandomPds {
    species: usize,
    terms: Vec<(usize, usize, f64, Shape)>,
}

#[derive(Debug, Clone, Copy)]
enum Shape {
    Linear,
    Saturating,
    Bimolecular(usize),
}

impl RandomPds {
    pub fn sample(rng: &mut impl Rng, max_species: usize) -> Self {
        let species = rng.gen_range(2..=max_species);
        let mut terms = Vec::new();
        for i in 0..species {
            for j in 0..species {
                if i != j && rng.gen_bool(0.6) {
                    let k = 10f64.powf(rng.gen_range(-2.0..2.0));
                    let shape = match rng.gen_range(0..3) {
                        0 => Shape::Linear,
                        1 => Shape::Saturating,
                        _ => Shape::Bimolecular(rng.gen_range(0..species)),
                    };
                    terms.push((i, j, k, shape));
                }
            }
        }
        RandomPds { species, terms }
    }
}

impl ProductionDestruction for RandomPds {
    fn species_count(&self) -> usize {
        self.species
    }

    fn production(&self, c: &[f64], out: &mut RateMatrix) {
        for &(i, j, k, shape) in &self.terms {
            let g = match shape {
                Shape::Linear => 1.0,
                Shape::Saturating => 1.0 / (1.0 + c[j]),
                Shape::Bimolecular(l) => c[l],
            };
            out.add(i, j, k * c[j] * g);
        }
    }
}

/// Modified Patankar schemes covered by the randomized suites.
pub fn patankar_schemes() -> Vec<IntegratorKind> {
    vec![
        IntegratorKind::Mpe,
        IntegratorKind::Mprk2 { alpha: 0.5, beta: 1.0 },
        IntegratorKind::Mprk2 { alpha: 0.0, beta: 1.0 },
        IntegratorKind::Mprk2 { alpha: 0.25, beta: 2.0 },
        IntegratorKind::Mprk3,
        IntegratorKind::Mpms2 { s: 0.0 },
        IntegratorKind::Mpms2 { s: 1.5 },
        IntegratorKind::Mpms3 { s: 2.0 },
        IntegratorKind::Mpms3 { s: 2.75 },
    ]
}

/// Sum the scheme's explicit combination assigns to step `n + 1`.
fn expected_sum(kind: IntegratorKind, sums: &[f64], n: usize) -> f64 {
    match kind {
        IntegratorKind::Mpms2 { .. } if n >= 2 => 0.25 * sums[n - 2] + 0.75 * sums[n],
        IntegratorKind::Mpms3 { .. } if n >= 3 => 11.0 / 27.0 * sums[n - 3] + 16.0 / 27.0 * sums[n],
        _ => sums[n],
    }
}

/// Criteria 3 and 4 over `instances` random systems (up to 5 species),
/// `Δt ∈ {1e-3, 1, 1e3}`, six steps of every scheme.
pub fn random_pds_suite(instances: usize, seed: u64) -> (Check, Check) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let schemes = patankar_schemes();
    let (mut runs, mut negative, mut worst_defect, mut min_value) = (0usize, Vec::new(), 0.0_f64, f64::INFINITY);
    for inst in 0..instances {
        let sys = RandomPds::sample(&mut rng, 5);
        let c0: Vec<f64> = (0..sys.species).map(|_| 10f64.powf(rng.gen_range(-4.0..1.0))).collect();
        for dt in [1e-3, 1.0, 1e3] {
            for &kind in &schemes {
                runs += 1;
                let traj = match integrate(&sys, kind, &c0, 0.0, 6.0 * dt, dt, None, 1) {
                    Ok(t) => t,
                    Err(e) => {
                        negative.push(format!("instance {inst} {} dt={dt:e}: {e}", kind.label()));
                        continue;
                    }
                };
                if let Some(x) = traj.states.iter().flatten().find(|x| !(**x > 0.0 && x.is_finite())) {
                    negative.push(format!("instance {inst} {} dt={dt:e}: value {x:e}", kind.label()));
                }
                min_value = traj.states.iter().flatten().copied().fold(min_value, f64::min);
                let sums: Vec<f64> = traj.states.iter().map(|c| c.iter().sum()).collect();
                for n in 0..sums.len() - 1 {
                    let expected = expected_sum(kind, &sums, n);
                    worst_defect = worst_defect.max((sums[n + 1] - expected).abs() / expected);
                }
            }
        }
    }
    let seconds = start.elapsed().as_secs_f64();
    let positivity = Check {
        id: 3,
        title: "unconditional positivity on random systems",
        passed: negative.is_empty(),
        detail: format!(
            "{runs} runs, {} violations, smallest value {min_value:e}{}",
            negative.len(),
            negative.first().map(|s| format!("; first: {s}")).unwrap_or_default()
        ),
        seconds,
    };
    let conservation = Check {
        id: 4,
        title: "conservation of the species sum",
        passed: negative.is_empty() && worst_defect <= 1e-12,
        detail: format!("{runs} runs, max relative defect {worst_defect:e} (tolerance 1e-12)"),
        seconds,
    };
    (positivity, conservation)
}

/// Random conservative stage weights of size 2 or 3.
pub fn random_stage(rng: &mut impl Rng) -> (StageWeights, f64) {
    let m = rng.gen_range(2..=3);
    let mut production = RateMatrix::zeros(m);
    for i in 0..m {
        for j in 0..m {
            if i != j && rng.gen_bool(0.7) {
                production.set(i, j, 10f64.powf(rng.gen_range(-2.0..1.0)));
            }
        }
    }
    let explicit: Vec<f64> = (0..m).map(|_| 10f64.powf(rng.gen_range(-3.0..1.0))).collect();
    let denominators: Vec<f64> = (0..m).map(|_| 10f64.powf(rng.gen_range(-2.0..1.0))).collect();
    let w = StageWeights::conservative(explicit, production, denominators);
    (w, 10f64.powf(rng.gen_range(-3.0..3.0)))
}

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite input")
}

/// Stage system assembled from its definition and solved by Gaussian
/// elimination in exact rational arithmetic, rounded once at the end.
pub fn exact_stage_solve(w: &StageWeights, dt: f64) -> Option<Vec<f64>> {
    let m = w.explicit.len();
    let dt = exact(dt);
    let sigma: Vec<BigRational> = w.denominators.iter().map(|&s| exact(s)).collect();
    let mut a: Vec<Vec<BigRational>> = (0..m)
        .map(|i| {
            let mut row: Vec<BigRational> = (0..m).map(|j| -(&dt * exact(w.production.get(i, j)) / &sigma[j])).collect();
            let destroyed = (0..m).fold(BigRational::zero(), |acc, k| acc + exact(w.destruction.get(i, k)));
            row[i] += BigRational::from_integer(1.into()) + &dt * destroyed / &sigma[i];
            row
        })
        .collect();
    let mut b: Vec<BigRational> = w.explicit.iter().map(|&v| exact(v)).collect();
    for k in 0..m {
        let p = (k..m).find(|&r| !a[r][k].is_zero())?;
        a.swap(k, p);
        b.swap(k, p);
        for r in k + 1..m {
            let f = &a[r][k] / &a[k][k];
            for j in k..m {
                let t = &f * &a[k][j];
                a[r][j] -= t;
            }
            let t = &f * &b[k];
            b[r] -= t;
        }
    }
    let mut x = vec![BigRational::zero(); m];
    for k in (0..m).rev() {
        let mut acc = b[k].clone();
        for j in k + 1..m {
            acc -= &a[k][j] * &x[j];
        }
        x[k] = acc / &a[k][k];
    }
    x.iter().map(ToPrimitive::to_f64).collect()
}

/// Criterion 5: stage solve against the exact dense oracle, `trials`
/// systems, componentwise relative tolerance 1e-13.
pub fn stage_solve_oracle(trials: usize, seed: u64) -> Check {
    check(5, "stage solve against an exact dense solve", None, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0_f64;
        for _ in 0..trials {
            let (w, dt) = random_stage(&mut rng);
            let x = mp_stage_solve(&w, dt)?;
            let y = exact_stage_solve(&w, dt).ok_or_else(|| Error::Precondition("oracle matrix is singular".into()))?;
            for (p, q) in x.iter().zip(&y) {
                worst = worst.max((p - q).abs() / q.abs());
            }
        }
        Ok((worst <= 1e-13, format!("{trials} systems, max relative difference {worst:e} (tolerance 1e-13)")))
    })
}

/// Single-cell spaces with their EOS for the limiter suite.
pub fn limiter_spaces() -> Result<Vec<(DgSpace, Eos)>> {
    let one_step = Eos::IdealOneStep { gamma: 1.4, heat_release: 50.0 };
    let oxygen = Eos::GeneralMultiSpecies(SpeciesTable::oxygen_dissociation());
    let unit = Rect { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 };
    Ok(vec![
        (DgSpace::new(Mesh::interval(0.0, 1.0, 1)?, 1, Layout::new(1, 2))?, one_step.clone()),
        (DgSpace::new(Mesh::interval(0.0, 1.0, 1)?, 2, Layout::new(1, 3))?, oxygen.clone()),
        (DgSpace::new(Mesh::interval(0.0, 1.0, 1)?, 3, Layout::new(1, 2))?, one_step.clone()),
        (DgSpace::new(Mesh::rectangle(unit, 1, 1)?, 1, Layout::new(2, 2))?, one_step.clone()),
        (DgSpace::new(Mesh::rectangle(unit, 1, 1)?, 2, Layout::new(2, 3))?, oxygen),
        (DgSpace::new(Mesh::rectangle(unit, 1, 1)?, 2, Layout::new(2, 2))?, one_step),
    ])
}

fn random_fractions(rng: &mut impl Rng, m: usize) -> Vec<f64> {
    let mut z: Vec<f64> = (0..m).map(|_| if rng.gen_bool(0.2) { 10f64.powf(rng.gen_range(-13.0..-6.0)) } else { rng.gen_range(0.01..1.0) }).collect();
    let total: f64 = z.iter().sum();
    z.iter_mut().for_each(|v| *v /= total);
    z
}

/// A cell with an admissible average and strongly perturbed nodes.
pub fn random_cell(rng: &mut impl Rng, space: &DgSpace, eos: &Eos) -> Result<Vec<f64>> {
    let layout = space.layout;
    let nv = layout.len();
    let rho = 10f64.powf(rng.gen_range(-3.0..1.0));
    let prim = Primitive {
        density: rho,
        velocity: [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)],
        pressure: 10f64.powf(rng.gen_range(-3.0..3.0)),
        fractions: random_fractions(rng, layout.species),
    };
    let avg = eos.conserved(&layout, &prim)?;
    let amp = 10f64.powf(rng.gen_range(-3.0..0.5));
    let nodes = space.nodes_per_cell();
    let mut cell = vec![0.0; nodes * nv];
    for v in 0..nv {
        let scale = avg[v].abs().max(rho);
        let mut delta: Vec<f64> = (0..nodes).map(|_| amp * scale * rng.gen_range(-1.0..1.0)).collect();
        let mean = space.cell_average(&delta, 1)[0];
        delta.iter_mut().for_each(|d| *d -= mean);
        for q in 0..nodes {
            cell[q * nv + v] = avg[v] + delta[q];
        }
    }
    Ok(cell)
}

fn single(space: &DgSpace, cell: &[f64]) -> DgField {
    let mut f = space.zeros();
    f.data.copy_from_slice(cell);
    f
}

/// Criterion 6: `trials` random cells with admissible averages. Averages
/// are preserved to 1e-13 of the component's nodal magnitude, every point
/// of the target set is admissible afterwards, and a second pass changes
/// nothing beyond the same tolerance.
pub fn limiter_contract(trials: usize, seed: u64) -> Check {
    check(6, "limiter contract on random cells", None, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spaces = limiter_spaces()?;
        let sets = [PointSet::Gauss, PointSet::Interface, PointSet::All];
        let (mut limited, mut worst_avg, mut worst_idem) = (0usize, 0.0_f64, 0.0_f64);
        let mut failures = Vec::new();
        let mut tested = 0;
        while tested < trials {
            let (space, eos) = &spaces[rng.gen_range(0..spaces.len())];
            let set = sets[rng.gen_range(0..sets.len())];
            let layout = space.layout;
            let nv = layout.len();
            let mut cell = random_cell(&mut rng, space, eos)?;
            let before = space.cell_average(&cell, nv);
            if check_average(eos, &layout, &before).is_err() {
                continue;
            }
            tested += 1;
            let scale: Vec<f64> =
                (0..nv).map(|v| cell.chunks(nv).fold(before[v].abs(), |a, n| a.max(n[v].abs())).max(f64::MIN_POSITIVE)).collect();
            let report = limit_cell(space, eos, &mut cell, set, DEFAULT_EPSILON)?;
            limited += usize::from(report.touched());
            let after = space.cell_average(&cell, nv);
            for v in 0..nv {
                worst_avg = worst_avg.max((after[v] - before[v]).abs() / scale[v]);
            }
            match check_field(space, eos, &single(space, &cell), set) {
                Ok(b) if b.min_density > 0.0 && b.min_pressure > 0.0 => {}
                Ok(b) => failures.push(format!("{b:?}")),
                Err(e) => failures.push(e.to_string()),
            }
            let mut again = cell.clone();
            limit_cell(space, eos, &mut again, set, DEFAULT_EPSILON)?;
            for (q, (a, b)) in again.iter().zip(&cell).enumerate() {
                worst_idem = worst_idem.max((a - b).abs() / scale[q % nv]);
            }
        }
        let ok = failures.is_empty() && worst_avg <= 1e-13 && worst_idem <= 1e-13;
        Ok((
            ok,
            format!(
                "{tested} cells ({limited} limited), average drift {worst_avg:e}, second-pass change {worst_idem:e}, {} inadmissible{}",
                failures.len(),
                failures.first().map(|s| format!("; first: {s}")).unwrap_or_default()
            ),
        ))
    })
}

/// Criterion 7: species flux equals density flux when one species carries
/// all the mass; `|Σcᵢ − ρ|/ρ ≤ 1e-11` over a 100-step 2D advection run.
pub fn flux_consistency(seed: u64) -> Check {
    check(7, "flux and species-sum consistency", None, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eos = Eos::IdealOneStep { gamma: 1.4, heat_release: 50.0 };
        let mut worst_flux = 0.0_f64;
        for dim in [1, 2] {
            let layout = Layout::new(dim, 2);
            for _ in 0..1000 {
                let carrier = rng.gen_range(0..2);
                let state = |rng: &mut ChaCha8Rng| {
                    let mut fractions = vec![0.0; 2];
                    fractions[carrier] = 1.0;
                    let prim = Primitive {
                        density: 10f64.powf(rng.gen_range(-3.0..1.0)),
                        velocity: [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)],
                        pressure: 10f64.powf(rng.gen_range(-3.0..3.0)),
                        fractions,
                    };
                    eos.conserved(&layout, &prim)
                };
                let (u1, u2) = (state(&mut rng)?, state(&mut rng)?);
                let species = layout.species_start() + carrier;
                let mut f = vec![0.0; layout.len()];
                for axis in 0..dim {
                    physical_flux(&eos, &layout, &u1, axis, &mut f)?;
                    worst_flux = worst_flux.max((f[species] - f[Layout::DENSITY]).abs() / f[Layout::DENSITY].abs().max(f64::MIN_POSITIVE));
                }
                let angle = rng.gen_range(0.0..std::f64::consts::TAU);
                let normal = if dim == 1 { [1.0, 0.0] } else { [angle.cos(), angle.sin()] };
                let alpha = 10.0 * rng.gen_range(0.1..10.0);
                let h = lax_friedrichs_flux(&eos, &layout, &u1, &u2, normal, alpha)?;
                let scale = h[Layout::DENSITY].abs().max(alpha * u1[0].max(u2[0]));
                worst_flux = worst_flux.max((h[species] - h[Layout::DENSITY]).abs() / scale);
            }
        }
        let wave = ContactWave { dim: 2, cells: 16, t_final: 10.0, ..Default::default() };
        let setup = wave.build()?;
        let mut solver = Solver::new(setup.problem, setup.scheme, setup.initial)?;
        let mut defect = 0.0_f64;
        let mut fractions = (f64::INFINITY, f64::NEG_INFINITY);
        for _ in 0..100 {
            let rec = solver.advance(setup.t_final)?;
            defect = defect.max(rec.fraction_defect);
            fractions = (fractions.0.min(rec.bounds.min_fraction), fractions.1.max(rec.bounds.max_fraction));
        }
        let ok = worst_flux <= 4.0 * f64::EPSILON && defect <= FRACTION_TOLERANCE;
        Ok((
            ok,
            format!(
                "flux mismatch {worst_flux:e} (tolerance 4 eps); 100-step 2D advection: max |Σc−ρ|/ρ {defect:e}, z in [{:.6}, {:.6}]",
                fractions.0, fractions.1
            ),
        ))
    })
}

/// Criterion 8: smooth 1D advection, orders 2 and 3 within ±0.25 for
/// `k = 1, 2` over [`DG_LADDER`], under 30 s.
pub fn dg_order() -> Check {
    check(8, "DG order on smooth advection", Some(30.0), || {
        let mut ok = true;
        let mut detail = Vec::new();
        for (degree, integrator, order) in
            [(1, IntegratorKind::Mprk2 { alpha: 0.5, beta: 1.0 }, 2.0), (2, IntegratorKind::Mpms3 { s: 2.0 }, 3.0)]
        {
            let wave = ContactWave {
                degree,
                scheme: SchemeConfig { integrator, ..Default::default() },
                ..Default::default()
            };
            let t = study::advection_convergence(&wave, &DG_LADDER)?;
            ok &= within_orders(&t, &vec![order; DG_LADDER.len() - 1], 0.25);
            detail.push(format!("{}: L2 errors {} orders {}", t.label, fmt_sci(&errors(&t)), fmt_list(&t.orders(), 2)));
        }
        Ok((ok, detail.join("; ")))
    })
}

/// Bounds over a whole run, with the final solver.
pub struct FlowRun {
    pub solver: Solver,
    pub bounds: PointBounds,
    pub defect: f64,
}

/// Runs `setup` to its final time, merging the per-step bounds.
pub fn run_flow(setup: Setup) -> Result<FlowRun> {
    let t_final = setup.t_final;
    let mut solver = Solver::new(setup.problem, setup.scheme, setup.initial)?;
    let mut bounds = PointBounds::EMPTY;
    let mut defect = 0.0_f64;
    solver.run(t_final, |_, rec| {
        bounds = bounds.merge(rec.bounds);
        defect = defect.max(rec.fraction_defect);
        Ok(())
    })?;
    Ok(FlowRun { solver, bounds, defect })
}

/// `ρ > 0`, `p > 0`, `cᵢ ≥ 0`, `zᵢ ∈ [0, 1]` and `|Σz − 1| ≤ 1e-11`.
pub fn bounds_green(run: &FlowRun) -> bool {
    let b = &run.bounds;
    b.min_density > 0.0
        && b.min_pressure > 0.0
        && b.min_partial_density >= 0.0
        && b.min_fraction >= 0.0
        && b.max_fraction <= 1.0 + FRACTION_TOLERANCE
        && run.defect <= FRACTION_TOLERANCE
}

fn bounds_text(run: &FlowRun) -> String {
    let b = &run.bounds;
    format!(
        "{} steps, min ρ {:.3e}, min p {:.3e}, min c {:.3e}, z in [{:.3e}, {:.15}], max |Σz−1| {:.2e}",
        run.solver.steps(),
        b.min_density,
        b.min_pressure,
        b.min_partial_density,
        b.min_fraction,
        b.max_fraction,
        run.defect
    )
}

/// Cell-average pressure against the cell centre.
fn pressure_profile(solver: &Solver) -> Result<Vec<(f64, f64)>> {
    let p = &solver.problem;
    let nv = p.space.layout.len();
    p.space
        .mesh
        .fluid_cells()
        .map(|c| {
            let avg = p.space.cell_average(solver.field().cell(c), nv);
            Ok((p.space.mesh.center(c).0, p.eos.thermo(&p.space.layout, &avg)?.pressure))
        })
        .collect()
}

/// Criterion 9: the three-species shock tube at `N = 200`, `k = 1`.
pub fn shock_tube() -> Check {
    check(9, "three-species shock tube", Some(120.0), || {
        let case = ShockTube::default();
        let run = run_flow(case.build()?)?;
        let profile = pressure_profile(&run.solver)?;
        let (pl, pr) = (case.left_pressure, case.right_pressure);
        let left_ok = profile.iter().filter(|(x, _)| *x < 0.1).all(|(_, p)| (p - pl).abs() <= 1e-3 * pl);
        let max_p = profile.iter().map(|e| e.1).fold(0.0, f64::max);
        // rarefaction head: first point that has left the high-pressure state
        let head = profile.iter().find(|(_, p)| *p < 0.99 * pl).map_or(f64::NAN, |e| e.0);
        let right: Vec<f64> = profile.iter().filter(|(x, _)| *x > case.interface).map(|e| e.1).collect();
        let (lo, hi) = right.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), &p| (lo.min(p), hi.max(p)));
        // the light right gas carries the shock out of the domain by t = 1e-4
        let compressed = right.last().is_some_and(|&p| p > 2.0 * pr);
        let structure = left_ok && max_p <= 1.01 * pl && head > 0.1 && head < case.interface && lo > pr && hi < pl && compressed;
        Ok((
            bounds_green(&run) && structure,
            format!(
                "{}; pressure: left state kept {left_ok}, max {max_p:.1}, rarefaction head at x = {head:.3}, \
                 right half in [{lo:.2}, {hi:.1}], right boundary compressed {compressed}",
                bounds_text(&run)
            ),
        ))
    })
}

/// Criterion 10: the blast problem on `cells_per_unit` cells per unit
/// length, plus the unlimited negative control.
pub fn blast(cells_per_unit: usize) -> Check {
    check(10, "2D blast to t = 0.2", Some(300.0), || {
        let case = Blast { cells_per_unit, ..Default::default() };
        let run = run_flow(case.build()?)?;
        let mut off = case.clone();
        off.scheme.limiter = false;
        let control = run_flow(off.build()?);
        let aborted = matches!(control, Err(Error::Admissibility { .. }));
        let control_text = match control {
            Ok(_) => "completed".to_string(),
            Err(e) => e.to_string(),
        };
        let n = (case.size * cells_per_unit as f64).round();
        Ok((
            bounds_green(&run) && aborted,
            format!("{n}x{n}: {}; without limiter: {control_text}", bounds_text(&run)),
        ))
    })
}

/// Criterion 11: detonation diffraction at `Δx = 1/24`, `t = 0.3`, under
/// both readings of the right-state energy, plus the unlimited control.
pub fn diffraction() -> Check {
    check(11, "detonation diffraction, both energy readings", Some(600.0), || {
        let mut ok = true;
        let mut detail = Vec::new();
        for energy in [55.0, 5.5] {
            let mut case = Diffraction::default();
            case.right[3] = energy;
            match case.build().and_then(run_flow) {
                Ok(run) => {
                    ok &= bounds_green(&run);
                    detail.push(format!("E = {energy}: {}", bounds_text(&run)));
                }
                Err(e) => {
                    ok = false;
                    detail.push(format!("E = {energy}: {e}"));
                }
            }
        }
        let mut off = Diffraction::default();
        off.scheme.limiter = false;
        let control = match off.build().and_then(run_flow) {
            Ok(_) => "completed".to_string(),
            Err(e) => e.to_string(),
        };
        detail.push(format!("without limiter: {control}"));
        Ok((ok, detail.join("; ")))
    })
}

/// Criterion 12: slope of `|σ − c(t_{n+1})|` on the linear problem with the
/// exact history, `≥ 1.8` for MPMS2 and `≥ 2.7` for MPMS3.
pub fn sigma_slopes() -> Check {
    check(12, "σ consistency slopes", None, || {
        let cfg = LinearOde::default();
        let mut ok = true;
        let mut detail = Vec::new();
        for (kind, bound) in [(TABLE_MPMS2, 1.8), (TABLE_MPMS3, 2.7)] {
            let t = study::sigma_consistency(&cfg, kind, cfg.t_final)?;
            let slope = loglog_slope(&t);
            ok &= slope >= bound;
            detail.push(format!("{}: slope {slope:.3} (needs ≥ {bound}), errors {}", t.label, fmt_sci(&errors(&t))));
        }
        Ok((ok, detail.join("; ")))
    })
}

/// Trial counts and seed of a verification run.
#[derive(Debug, Clone, Copy)]
pub struct Plan {
    pub instances: usize,
    pub trials: usize,
    pub seed: u64,
    /// Include the reproduction tables and the flow runs.
    pub full: bool,
    pub blast_cells_per_unit: usize,
}

impl Default for Plan {
    fn default() -> Self {
        Plan { instances: 1000, trials: 10_000, seed: 20_240_601, full: false, blast_cells_per_unit: 30 }
    }
}

/// Runs the invariant criteria (3–8, 12), and with `plan.full` all twelve,
/// calling `report` as each finishes.
pub fn run_plan(plan: &Plan, mut report: impl FnMut(&Check)) -> Vec<Check> {
    let mut done = Vec::new();
    let mut push = |c: Check| {
        report(&c);
        done.push(c);
    };
    if plan.full {
        push(linear_tables());
        push(nonlinear_tables());
    }
    let (pos, cons) = random_pds_suite(plan.instances, plan.seed);
    push(pos);
    push(cons);
    push(stage_solve_oracle(plan.trials, plan.seed));
    push(limiter_contract(plan.trials, plan.seed));
    push(flux_consistency(plan.seed));
    push(dg_order());
    if plan.full {
        push(shock_tube());
        push(blast(plan.blast_cells_per_unit));
        push(diffraction());
    }
    push(sigma_slopes());
    done
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_a_power_law() {
        let t = ConvergenceTable::from_errors("p", &[0.1, 0.05, 0.025], &[2e-2, 5e-3, 1.25e-3]);
        assert!((loglog_slope(&t) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn random_systems_conserve_and_vanish_at_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let sys = RandomPds::sample(&mut rng, 5);
            let mut c: Vec<f64> = (0..sys.species).map(|_| rng.gen_range(0.1..2.0)).collect();
            c[0] = 0.0;
            let r = sys.rates(&c);
            assert!((0..sys.species).all(|i| r.get(i, 0) == 0.0));
            assert!(r.as_slice().iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn small_suites_pass() {
        let (pos, cons) = random_pds_suite(20, 3);
        assert!(pos.passed, "{pos}");
        assert!(cons.passed, "{cons}");
        let c = stage_solve_oracle(200, 3);
        assert!(c.passed, "{c}");
        let c = limiter_contract(200, 3);
        assert!(c.passed, "{c}");
    }
}
