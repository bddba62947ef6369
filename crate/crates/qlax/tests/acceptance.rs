//! Acceptance suite: every verified identity at its pinned tolerance over
//! the default grid q in {0.7, 1.0, 1.3, 2.0}, N in {1, 2, 3}, d = 2,
//! t in {0.1, 0.5, 1.0}.
//!
//! One pass/fail line per criterion (run with `--nocapture` to see them
//! on success).

use qlax::chain::{ChainSystem, Sign};
use qlax::evolution as ev;
use qlax::linalg;
use qlax::report::{self, tol, Grid, Suite};
use qlax::rmatrix::RMatrix;

struct Ctx {
    grid: Grid,
    chains: Vec<ChainSystem>,
}

fn ctx() -> Ctx {
    let grid = Grid::default();
    let mut chains = Vec::new();
    for &q in &grid.qs {
        for &n in &grid.n_sites {
            chains.push(
                ChainSystem::build(RMatrix::new(q, grid.d).unwrap(), n, grid.tower_depth)
                    .unwrap(),
            );
        }
    }
    Ctx { grid, chains }
}

struct Criterion {
    number: usize,
    title: &'static str,
    parts: Vec<(String, f64, f64)>,
}

impl Criterion {
    fn new(number: usize, title: &'static str) -> Self {
        Criterion { number, title, parts: Vec::new() }
    }

    fn record(&mut self, what: impl Into<String>, worst: f64, tolerance: f64) {
        self.parts.push((what.into(), worst, tolerance));
    }

    fn finish(self) {
        let pass = self.parts.iter().all(|(_, worst, tolerance)| worst < tolerance);
        let detail = self
            .parts
            .iter()
            .map(|(what, worst, tolerance)| format!("{what} {worst:.3e} (tol {tolerance:.1e})"))
            .collect::<Vec<_>>()
            .join("; ");
        println!(
            "[{}] criterion {:>2} — {}: {}",
            if pass { "PASS" } else { "FAIL" },
            self.number,
            self.title,
            detail
        );
        for (what, worst, tolerance) in &self.parts {
            assert!(
                worst < tolerance,
                "criterion {}: {what} residual {worst:.3e} exceeds {tolerance:.1e}",
                self.number
            );
        }
    }
}

fn fmax(acc: f64, v: f64) -> f64 {
    acc.max(v)
}

#[test]
fn criterion_01_quasi_triangularity_substrate() {
    let ctx = ctx();
    let mut crit = Criterion::new(1, "quasi-triangularity substrate");
    let mut ybe = 0.0_f64;
    for &q in &ctx.grid.qs {
        ybe = fmax(ybe, RMatrix::new(q, 2).unwrap().yang_baxter_residual());
    }
    crit.record("YBE", ybe, tol::YBE);
    let mut rtt = 0.0_f64;
    for c in &ctx.chains {
        rtt = fmax(rtt, c.rtt_residual(c.monodromy()).unwrap());
        for n in 1..=c.n_sites() + 1 {
            rtt = fmax(rtt, c.rtt_residual(c.psi(n).unwrap()).unwrap());
        }
    }
    crit.record("RTT(T, psi)", rtt, tol::RTT);
    crit.finish();
}

#[test]
fn criterion_02_lax_form_of_heisenberg_flow() {
    let ctx = ctx();
    let mut crit = Criterion::new(2, "global Lax form");
    let mut worst = 0.0_f64;
    for c in &ctx.chains {
        let (plus, minus) = c.prop1_residuals().unwrap();
        worst = fmax(worst, plus.max(minus));
    }
    crit.record("[1(x)h,T] vs [M±,T]", worst, tol::PROP1);
    crit.finish();
}

#[test]
fn criterion_03_site_lax_form_with_periodic_closure() {
    let ctx = ctx();
    let mut crit = Criterion::new(3, "site Lax form");
    let mut site = 0.0_f64;
    let mut closure = 0.0_f64;
    for c in &ctx.chains {
        for n in 1..=c.n_sites() {
            for sign in [Sign::Plus, Sign::Minus] {
                site = fmax(site, c.prop5_residual(n, sign).unwrap());
            }
        }
        let lax = c.lax_matrices().unwrap();
        for sign in [Sign::Plus, Sign::Minus] {
            closure = fmax(closure, lax.periodic_closure_residual(sign).unwrap());
        }
    }
    crit.record("per-site Lax", site, tol::PROP5);
    crit.record("M±(N+1) = M±(1)", closure, tol::PERIODIC_CLOSURE);
    crit.finish();
}

#[test]
fn criterion_04_factor_generators_commute() {
    let ctx = ctx();
    let mut crit = Criterion::new(4, "commuting factor generators");
    let mut worst = 0.0_f64;
    for c in &ctx.chains {
        worst = fmax(worst, ev::app1_commutator_residual(c).unwrap());
    }
    crit.record("[1(x)h - M-, 1(x)h - M+]", worst, tol::APP1_COMMZERO);
    crit.finish();
}

#[test]
fn criterion_05_factorized_solution() {
    let ctx = ctx();
    let mut crit = Criterion::new(5, "factorized closed-form solution");
    let (mut fac, mut agree, mut ode) = (0.0_f64, 0.0_f64, 0.0_f64);
    for c in &ctx.chains {
        for &t in &ctx.grid.times {
            fac = fmax(fac, ev::factorization_residual(c, t).unwrap());
            agree = fmax(agree, ev::solve_lax_forms(c, t).unwrap().mutual_residual().unwrap());
            for sign in [Sign::Plus, Sign::Minus] {
                ode = fmax(ode, ev::factor_ode_residual(c, t, sign, tol::FACTOR_ODE_EPS).unwrap());
            }
        }
    }
    crit.record("g- g+ = exp(-itM)", fac, tol::THM1_FACTORIZATION);
    crit.record("route agreement", agree, tol::SOLUTION_AGREEMENT);
    crit.record("factor ODEs (central diff)", ode, tol::FACTOR_ODE);
    crit.finish();
}

#[test]
fn criterion_06_chain_solution() {
    let ctx = ctx();
    let mut crit = Criterion::new(6, "chain closed-form solution");
    let (mut site, mut expo) = (0.0_f64, 0.0_f64);
    for c in &ctx.chains {
        for &t in &ctx.grid.times {
            for n in 1..=c.n_sites() {
                site = fmax(
                    site,
                    ev::solve_chain_lax_forms(c, n, t).unwrap().mutual_residual().unwrap(),
                );
            }
            for n in 1..=c.n_sites() + 1 {
                expo = fmax(expo, ev::site_exponential_residual(c, n, t).unwrap());
            }
        }
    }
    crit.record("L^n(t) routes", site, tol::THM2_SITE_SOLUTION);
    crit.record("g^n = exp(-it(M+(n)-M-(n)))", expo, tol::THM2_EXPONENTIAL);
    crit.finish();
}

#[test]
fn criterion_07_block_gauss_factorization() {
    let ctx = ctx();
    let mut crit = Criterion::new(7, "block Gauss factorization");
    let (mut rec, mut tri, mut gauge) = (0.0_f64, 0.0_f64, 0.0_f64);
    for c in &ctx.chains {
        for &t in &ctx.grid.times {
            let f = ev::factorize_and_compare(c, t, ev::Normalization::UnitLower).unwrap();
            rec = fmax(rec, f.reconstruction_residual(&ev::g_full(c, t).unwrap()).unwrap());
            let (lo, up) = f.triangularity_residuals();
            tri = fmax(tri, lo.max(up));
            gauge = fmax(gauge, f.gauge_residual.unwrap());
        }
    }
    crit.record("reconstruction", rec, tol::APP2_RECONSTRUCTION);
    crit.record("triangularity", tri, tol::APP2_TRIANGULARITY);
    crit.record("gauge vs closed form", gauge, tol::APP2_GAUGE);
    crit.finish();
}

#[test]
fn criterion_08_conservation_and_isospectrality() {
    let ctx = ctx();
    let mut crit = Criterion::new(8, "conservation and isospectrality");
    let (mut drift, mut spectrum) = (0.0_f64, 0.0_f64);
    for c in &ctx.chains {
        for &t in &ctx.grid.times {
            for level in 1..=ctx.grid.tower_depth {
                drift = fmax(drift, ev::conservation_drift(c, t, level).unwrap());
            }
            spectrum = fmax(spectrum, ev::spectrum_drift(c, t).unwrap());
        }
    }
    crit.record("h_k drift, k <= 3", drift, tol::CONSERVATION);
    crit.record("sorted spectrum of T(t)", spectrum, tol::SPECTRUM);
    crit.finish();
}

#[test]
fn criterion_09_quantum_trace_identity() {
    let ctx = ctx();
    let mut crit = Criterion::new(9, "quantum-trace identity");
    let mut worst = 0.0_f64;
    for &q in &ctx.grid.qs {
        let r = RMatrix::new(q, 2).unwrap();
        let d = r.quantum_trace_matrix().unwrap();
        worst = fmax(worst, d.identity_residual(&r).unwrap());
    }
    crit.record("Tr_1(hat(R)^-1 D_1) = I", worst, tol::QTRACE_IDENTITY);
    let r1 = RMatrix::new(1.0, 2).unwrap();
    let d1 = r1.quantum_trace_matrix().unwrap();
    crit.record(
        "D = I at q = 1",
        linalg::rel_residual(d1.matrix(), &linalg::eye(2)),
        tol::QTRACE_CLASSICAL,
    );
    crit.finish();
}

#[test]
fn criterion_10_ode_oracle() {
    let ctx = ctx();
    let mut crit = Criterion::new(10, "Runge-Kutta oracle");
    let (mut mismatch, mut shortfall) = (0.0_f64, 0.0_f64);
    for c in &ctx.chains {
        mismatch = fmax(
            mismatch,
            ev::ode_match_residual(c, tol::ODE_MATCH_TIME, tol::ODE_MATCH_DT).unwrap(),
        );
        let order = ev::ode_convergence_order(c, tol::ODE_MATCH_TIME, tol::ODE_ORDER_DT).unwrap();
        shortfall = fmax(shortfall, (4.0 - order).max(0.0));
    }
    crit.record("RK4 vs closed form", mismatch, tol::ODE_MATCH);
    crit.record("order-4 shortfall", shortfall, tol::ODE_ORDER_SHORTFALL);
    crit.finish();
}

/// The full suite over the default grid: every registered check passes.
#[test]
fn full_default_grid_suite_is_green() {
    let report = report::run_suite(Suite::All, &Grid::default()).unwrap();
    println!(
        "[{}] full suite — {} checks, {} failed, {:.2?}",
        if report.all_passed() { "PASS" } else { "FAIL" },
        report.summary.total,
        report.summary.failed,
        report.elapsed
    );
    for failure in report.failures() {
        println!(
            "  FAIL {} q={} N={:?} t={:?} site={:?}: {:.3e} vs {:.1e}",
            failure.name,
            failure.q,
            failure.n_sites,
            failure.t,
            failure.site,
            failure.residual,
            failure.tolerance
        );
    }
    assert!(report.all_passed(), "{} checks failed", report.summary.failed);
    assert!(report.elapsed.as_secs() < 60, "suite exceeded its time budget");
}
